//! Fleet controller: vehicle schedules, the insertion heuristic and the
//! parcel strategy gates.

mod cycle;
mod gates;
mod insertion;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::demand::Request;
use crate::network::{LinkIx, NodeIx};
use crate::time::Window;
use crate::{Error, Result};

pub use cycle::{process_cycle, CycleOutcome, DispatchState};
pub use gates::{gate_parcel_idle, gate_parcel_shr, idle_dispatch_candidate};
pub use insertion::{
    build_candidate, check_feasibility, composition_ok, find_insertion, insert_parcel_ridl, parcel_pickup_limit,
    time_schedule, FEASIBILITY_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl VehicleId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How the controller treats parcel requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    /// Passengers only; parcels stay with conventional carriers.
    Base,
    /// Parcels join vehicles that already have a passenger assigned.
    Shr,
    /// As `Shr`, falling back to vehicles idle for a while.
    ShrIdl,
    /// As `ShrIdl`, idle fallback off-peak only and parcels bracket passenger rides.
    ShrRidl,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Base, Strategy::Shr, Strategy::ShrIdl, Strategy::ShrRidl];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Base => "BASE",
            Strategy::Shr => "SHR",
            Strategy::ShrIdl => "SHR_IDL",
            Strategy::ShrRidl => "SHR_RIDL",
        }
    }

    pub fn serves_parcels(self) -> bool {
        self != Strategy::Base
    }

    pub fn uses_idle_vehicles(self) -> bool {
        matches!(self, Strategy::ShrIdl | Strategy::ShrRidl)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown strategy {s:?} (expected BASE, SHR, SHR_IDL or SHR_RIDL)"))
    }
}

/// Controller settings shared by every strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub cycle_s: f64,
    pub max_passenger_wait_s: f64,
    pub parcel_approach_wait_s: f64,
    pub idle_eligibility_s: f64,
    /// Ride time may be at most this multiple of the direct time.
    pub detour_factor: f64,
    /// Stop duration for every pickup and drop-off.
    pub dwell_s: f64,
    pub am_peak: Window,
    pub pm_peak: Window,
    /// Allow more than one parcel aboard at once.
    pub multi_parcel: bool,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Base,
            cycle_s: 10.0,
            max_passenger_wait_s: 600.0,
            parcel_approach_wait_s: 600.0,
            idle_eligibility_s: 60.0,
            detour_factor: 1.5,
            dwell_s: 30.0,
            am_peak: Window::new(25_200.0, 36_000.0),
            pm_peak: Window::new(57_600.0, 75_600.0),
            multi_parcel: true,
        }
    }
}

impl StrategyConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cycle_s", self.cycle_s),
            ("max_passenger_wait_s", self.max_passenger_wait_s),
            ("parcel_approach_wait_s", self.parcel_approach_wait_s),
            ("idle_eligibility_s", self.idle_eligibility_s),
            ("dwell_s", self.dwell_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.detour_factor.is_finite() && self.detour_factor >= 1.0) {
            return Err(Error::invalid(format!(
                "detour_factor must be at least 1, got {}",
                self.detour_factor
            )));
        }
        for (name, w) in [("am_peak", self.am_peak), ("pm_peak", self.pm_peak)] {
            if w.is_empty() || w.start < 0.0 {
                return Err(Error::invalid(format!("{name} window is empty")));
            }
        }
        if self.am_peak.overlaps(&self.pm_peak) {
            return Err(Error::invalid("peak windows overlap"));
        }
        Ok(())
    }

    #[inline]
    pub fn in_peak(&self, t: f64) -> bool {
        self.am_peak.contains(t) || self.pm_peak.contains(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    Pickup,
    Dropoff,
    Cruise,
    Park,
}

/// One step of a vehicle schedule. `planned_time` is when the stop,
/// dwell included, is finished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleItem {
    pub action: Action,
    /// Index into the request table; set for pickups and drop-offs.
    pub request: Option<usize>,
    pub node: NodeIx,
    pub planned_time: f64,
}

impl ScheduleItem {
    pub fn pickup(request: usize, node: NodeIx) -> Self {
        Self {
            action: Action::Pickup,
            request: Some(request),
            node,
            planned_time: f64::NAN,
        }
    }

    pub fn dropoff(request: usize, node: NodeIx) -> Self {
        Self {
            action: Action::Dropoff,
            request: Some(request),
            node,
            planned_time: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    Parked,
    /// Serving a stop until the given time.
    Dwelling {
        until: f64,
    },
    Driving {
        link: LinkIx,
        to: NodeIx,
        exit_at: f64,
    },
}

/// Where and when a new plan for a vehicle can start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub node: NodeIx,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: VehicleId,
    pub seat_capacity: u32,
    /// Last node reached.
    pub node: NodeIx,
    pub motion: Motion,
    /// Stops not yet started.
    pub schedule: Vec<ScheduleItem>,
    /// Requests aboard (passengers and parcels).
    pub onboard: Vec<usize>,
    pub idle_since: Option<f64>,
    /// Bumped whenever the schedule or the load changes.
    pub plan_version: u64,
    /// The route to the first stop must be recomputed at the next node.
    pub needs_route: bool,
}

impl Vehicle {
    pub fn new(id: VehicleId, node: NodeIx, seat_capacity: u32, now: f64) -> Self {
        Self {
            id,
            seat_capacity,
            node,
            motion: Motion::Parked,
            schedule: Vec::new(),
            onboard: Vec::new(),
            idle_since: Some(now),
            plan_version: 0,
            needs_route: false,
        }
    }

    pub fn anchor(&self, now: f64) -> Anchor {
        match self.motion {
            Motion::Parked => Anchor {
                node: self.node,
                time: now,
            },
            Motion::Dwelling { until } => Anchor {
                node: self.node,
                time: until,
            },
            Motion::Driving { to, exit_at, .. } => Anchor {
                node: to,
                time: exit_at,
            },
        }
    }

    /// Nothing aboard and nothing scheduled.
    #[inline]
    pub fn is_unassigned(&self) -> bool {
        self.schedule.is_empty() && self.onboard.is_empty()
    }

    /// A passenger is aboard or scheduled.
    pub fn has_passenger(&self, requests: &[Request]) -> bool {
        self.onboard.iter().any(|&r| requests[r].is_passenger())
            || self
                .schedule
                .iter()
                .any(|it| it.request.is_some_and(|r| requests[r].is_passenger()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mechanism {
    SharedInsertion,
    IdleDispatch,
    FirstAssignment,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::SharedInsertion => "SHARED_INSERTION",
            Mechanism::IdleDispatch => "IDLE_DISPATCH",
            Mechanism::FirstAssignment => "FIRST_ASSIGNMENT",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A vehicle schedule with one request's pickup and drop-off inserted.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub vehicle: VehicleId,
    pub request: usize,
    pub items: Vec<ScheduleItem>,
    /// Position of the new pickup in `items`.
    pub pickup_pos: usize,
    /// Position of the new drop-off in `items`.
    pub dropoff_pos: usize,
    /// Direct time of the inserted passenger, departing at its planned pickup.
    pub direct_time: Option<f64>,
}

impl Candidate {
    pub fn pickup_time(&self) -> f64 {
        self.items[self.pickup_pos].planned_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentDecision {
    pub time: f64,
    pub request: usize,
    pub vehicle: VehicleId,
    pub candidate: Candidate,
    pub mechanism: Mechanism,
}
