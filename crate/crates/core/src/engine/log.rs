use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::demand::{FailReason, Request};
use crate::dispatch::{Mechanism, VehicleId};
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Schedule became empty; the vehicle parks where it is.
    Idle,
    /// A request was added to the vehicle's schedule.
    Assign,
    /// Vehicle leaves a stop or parking spot.
    Depart,
    /// Vehicle finished traversing a link; logged at exit.
    Link,
    Pickup,
    Dropoff,
    Fail(FailReason),
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Idle => "IDLE",
            EventKind::Assign => "ASSIGN",
            EventKind::Depart => "DEPART",
            EventKind::Link => "LINK",
            EventKind::Pickup => "PICKUP",
            EventKind::Dropoff => "DROPOFF",
            EventKind::Fail(FailReason::WaitExpired) => "FAIL_WAIT_EXPIRED",
            EventKind::Fail(FailReason::Unreachable) => "FAIL_UNREACHABLE",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "IDLE" => EventKind::Idle,
            "ASSIGN" => EventKind::Assign,
            "DEPART" => EventKind::Depart,
            "LINK" => EventKind::Link,
            "PICKUP" => EventKind::Pickup,
            "DROPOFF" => EventKind::Dropoff,
            "FAIL_WAIT_EXPIRED" => EventKind::Fail(FailReason::WaitExpired),
            "FAIL_UNREACHABLE" => EventKind::Fail(FailReason::Unreachable),
            other => return Err(format!("unknown event {other:?}")),
        })
    }
}

/// One row of the event log. Node and link ids are external ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub vehicle: Option<VehicleId>,
    pub kind: EventKind,
    pub request: Option<u64>,
    pub node: Option<u32>,
    pub link: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub t: f64,
    pub request: u64,
    pub vehicle: VehicleId,
    pub mechanism: Mechanism,
    /// Pickup completion time promised by the accepted schedule.
    pub planned_pickup: f64,
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `t,vehicle_id,event,request_id,node,link_id`
pub fn events_to_csv(events: &[EventRecord]) -> String {
    let mut out = String::with_capacity(events.len() * 24 + 64);
    out.push_str("t,vehicle_id,event,request_id,node,link_id\n");
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.t,
            opt(e.vehicle),
            e.kind,
            opt(e.request),
            opt(e.node),
            opt(e.link)
        );
    }
    out
}

/// `t,request_id,vehicle_id,mechanism,planned_pickup`
pub fn decisions_to_csv(decisions: &[DecisionRecord]) -> String {
    let mut out = String::from("t,request_id,vehicle_id,mechanism,planned_pickup\n");
    for d in decisions {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            d.t, d.request, d.vehicle, d.mechanism, d.planned_pickup
        );
    }
    out
}

/// Final state of every request.
pub fn outcomes_to_csv(requests: &[Request], network: &Network) -> String {
    let mut out = String::from(
        "id,kind,origin,dest,request_time_s,state,vehicle_id,t_assigned,t_pickup,t_dropoff,direct_time_s,fail_reason\n",
    );
    for r in requests {
        let state = serde_json::to_value(r.state)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.id,
            r.kind,
            network.node(r.origin).id,
            network.node(r.dest).id,
            r.request_time,
            state,
            opt(r.assigned_vehicle),
            opt(r.t_assigned),
            opt(r.t_pickup),
            opt(r.t_dropoff),
            opt(r.direct_time),
            opt(r.fail_reason.map(|f| f.code())),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_names_round_trip() {
        for k in [
            EventKind::Idle,
            EventKind::Assign,
            EventKind::Depart,
            EventKind::Link,
            EventKind::Pickup,
            EventKind::Dropoff,
            EventKind::Fail(FailReason::WaitExpired),
            EventKind::Fail(FailReason::Unreachable),
        ] {
            assert_eq!(k.as_str().parse::<EventKind>().unwrap(), k);
        }
    }

    #[test]
    fn blank_columns_for_missing_fields() {
        let e = EventRecord {
            t: 12.5,
            vehicle: None,
            kind: EventKind::Fail(FailReason::WaitExpired),
            request: Some(4),
            node: Some(9),
            link: None,
        };
        assert_eq!(events_to_csv(&[e]).lines().nth(1), Some("12.5,,FAIL_WAIT_EXPIRED,4,9,"));
    }
}
