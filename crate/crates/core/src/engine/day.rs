use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::log::{DecisionRecord, EventKind, EventRecord};
use crate::demand::{Request, RequestState};
use crate::dispatch::{process_cycle, Action, DispatchState, Motion, ScheduleItem, StrategyConfig, Vehicle, VehicleId};
use crate::network::{LinkIx, LinkVolumes, NodeIx, Router};
use crate::time::DAY_S;

/// RNG streams derived from a replication seed.
const STREAM_FLEET: u64 = 3;
const STREAM_CONTROLLER: u64 = 4;

/// Output of one simulated day on a fixed travel-time field.
#[derive(Debug, Clone)]
pub struct DayRun {
    pub seed: u64,
    /// Final request states, sorted by `(request_time, id)`.
    pub requests: Vec<Request>,
    pub events: Vec<EventRecord>,
    pub decisions: Vec<DecisionRecord>,
    /// Fleet traversals per link and entry bin.
    pub volumes: LinkVolumes,
    /// Indices of requests never assigned before the day closed.
    pub pending_at_end: Vec<usize>,
    pub fleet_size: usize,
    /// Time of the last event.
    pub end_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    LinkExit(u32),
    StopDone(u32),
    Cycle(u64),
}

impl Event {
    fn class(self) -> u8 {
        match self {
            Event::LinkExit(_) | Event::StopDone(_) => 0,
            Event::Cycle(_) => 1,
        }
    }
}

#[derive(Default)]
struct Aux {
    route: VecDeque<LinkIx>,
    in_service: Option<ScheduleItem>,
}

struct Sim<'a, 'r> {
    router: &'r Router<'a>,
    cfg: &'r StrategyConfig,
    state: DispatchState,
    aux: Vec<Aux>,
    /// Min-heap on (time bits, class, sequence); times are non-negative so
    /// their bit patterns order like the values.
    queue: BinaryHeap<Reverse<(u64, u8, u64, Event)>>,
    seq: u64,
    events: Vec<EventRecord>,
    decisions: Vec<DecisionRecord>,
    volumes: LinkVolumes,
    clock: f64,
}

impl<'a, 'r> Sim<'a, 'r> {
    fn push(&mut self, t: f64, ev: Event) {
        debug_assert!(t >= self.clock && t.is_finite());
        self.seq += 1;
        self.queue.push(Reverse((t.to_bits(), ev.class(), self.seq, ev)));
    }

    fn node_id(&self, n: NodeIx) -> u32 {
        self.router.network().node(n).id
    }

    fn log(&mut self, t: f64, v: Option<usize>, kind: EventKind, request: Option<usize>, node: Option<NodeIx>) {
        let rec = EventRecord {
            t,
            vehicle: v.map(|v| VehicleId(v as u32)),
            kind,
            request: request.map(|r| self.state.requests[r].id),
            node: node.map(|n| self.node_id(n)),
            link: None,
        };
        self.events.push(rec);
    }

    /// Moves a vehicle that is at `fleet[v].node` at time `t` towards its
    /// next stop, or parks it.
    fn advance(&mut self, v: usize, t: f64, from_rest: bool) {
        let veh = &self.state.fleet[v];
        let node = veh.node;
        let Some(stop) = veh.schedule.first().copied() else {
            let veh = &mut self.state.fleet[v];
            veh.motion = Motion::Parked;
            veh.idle_since = Some(t);
            veh.needs_route = false;
            self.aux[v].route.clear();
            self.log(t, Some(v), EventKind::Idle, None, Some(node));
            return;
        };
        if node == stop.node {
            self.arrive(v, t, stop);
            return;
        }
        if from_rest || veh.needs_route || self.aux[v].route.is_empty() {
            let route = self
                .router
                .route(node, stop.node, t)
                .expect("scheduled stops are reachable");
            self.aux[v].route = route.links.into();
            self.state.fleet[v].needs_route = false;
            if from_rest {
                self.log(t, Some(v), EventKind::Depart, stop.request, Some(node));
            }
        }
        let link = self.aux[v].route.pop_front().expect("non-empty route");
        let field = self.router.field();
        let exit_at = t + field.time(link, t);
        self.volumes.record(link, field.bin_of(t));
        let to = self.router.network().link(link).to;
        self.state.fleet[v].motion = Motion::Driving { link, to, exit_at };
        self.push(exit_at, Event::LinkExit(v as u32));
    }

    fn arrive(&mut self, v: usize, t: f64, stop: ScheduleItem) {
        let done = t + self.cfg.dwell_s;
        let veh = &mut self.state.fleet[v];
        veh.schedule.remove(0);
        veh.plan_version += 1;
        veh.motion = Motion::Dwelling { until: done };
        self.aux[v].route.clear();
        if let Some(r) = stop.request {
            let req = &mut self.state.requests[r];
            match stop.action {
                Action::Pickup => {
                    veh.onboard.push(r);
                    req.state = RequestState::Onboard;
                    req.t_pickup = Some(done);
                }
                Action::Dropoff => {
                    veh.onboard.retain(|&x| x != r);
                    req.state = RequestState::Completed;
                    req.t_dropoff = Some(done);
                }
                Action::Cruise | Action::Park => {}
            }
        }
        self.aux[v].in_service = Some(stop);
        self.push(done, Event::StopDone(v as u32));
    }

    fn on_link_exit(&mut self, v: usize, t: f64) {
        let Motion::Driving { link, to, .. } = self.state.fleet[v].motion else {
            unreachable!("link exit for a vehicle that is not driving");
        };
        self.state.fleet[v].node = to;
        let rec = EventRecord {
            t,
            vehicle: Some(VehicleId(v as u32)),
            kind: EventKind::Link,
            request: None,
            node: Some(self.node_id(to)),
            link: Some(self.router.network().link(link).id),
        };
        self.events.push(rec);
        self.advance(v, t, false);
    }

    fn on_stop_done(&mut self, v: usize, t: f64) {
        let stop = self.aux[v].in_service.take().expect("stop in service");
        let kind = match stop.action {
            Action::Pickup => Some(EventKind::Pickup),
            Action::Dropoff => Some(EventKind::Dropoff),
            Action::Cruise | Action::Park => None,
        };
        if let Some(kind) = kind {
            self.log(t, Some(v), kind, stop.request, Some(stop.node));
        }
        self.advance(v, t, true);
    }

    fn on_cycle(&mut self, k: u64) {
        let now = k as f64 * self.cfg.cycle_s;
        let outcome = process_cycle(&mut self.state, self.router, now, self.cfg);
        if log::log_enabled!(log::Level::Debug) && now % 3600.0 == 0.0 {
            let longest = self.state.fleet.iter().map(|v| v.schedule.len()).max().unwrap_or(0);
            log::debug!(
                "t={now}: {} pending, longest schedule {longest}",
                self.state.pending().len()
            );
        }
        for r in outcome.failed {
            let reason = self.state.requests[r].fail_reason.expect("failed request has a reason");
            let origin = self.state.requests[r].origin;
            self.log(now, None, EventKind::Fail(reason), Some(r), Some(origin));
        }
        for d in outcome.decisions {
            let v = d.vehicle.index();
            let node = self.state.fleet[v].node;
            self.log(now, Some(v), EventKind::Assign, Some(d.request), Some(node));
            self.decisions.push(DecisionRecord {
                t: now,
                request: self.state.requests[d.request].id,
                vehicle: d.vehicle,
                mechanism: d.mechanism,
                planned_pickup: d.candidate.pickup_time(),
            });
            if self.state.fleet[v].motion == Motion::Parked {
                self.advance(v, now, true);
            }
        }
        let next = (k + 1) as f64 * self.cfg.cycle_s;
        if next < DAY_S {
            self.push(next, Event::Cycle(k + 1));
        }
    }
}

/// Simulates one day on a fixed field.
///
/// `requests` must be sorted by `(request_time, id)`. The seed places the
/// fleet on uniformly random nodes and drives the controller's random choices.
pub fn run_day(
    router: &Router<'_>,
    requests: &[Request],
    cfg: &StrategyConfig,
    fleet_size: usize,
    seat_capacity: u32,
    seed: u64,
) -> DayRun {
    let network = router.network();
    let mut fleet_rng = ChaCha8Rng::seed_from_u64(seed);
    fleet_rng.set_stream(STREAM_FLEET);
    let nodes: Vec<NodeIx> = (0..network.node_count() as u32).map(NodeIx).collect();
    let fleet: Vec<Vehicle> = (0..fleet_size)
        .map(|i| {
            let node = *nodes.choose(&mut fleet_rng).expect("network has nodes");
            Vehicle::new(VehicleId(i as u32), node, seat_capacity, 0.0)
        })
        .collect();
    let mut controller_rng = ChaCha8Rng::seed_from_u64(seed);
    controller_rng.set_stream(STREAM_CONTROLLER);

    let mut sim = Sim {
        router,
        cfg,
        state: DispatchState::new(fleet, requests.to_vec(), controller_rng),
        aux: (0..fleet_size).map(|_| Aux::default()).collect(),
        queue: BinaryHeap::new(),
        seq: 0,
        events: Vec::new(),
        decisions: Vec::new(),
        volumes: LinkVolumes::new(router.field()),
        clock: 0.0,
    };
    for v in 0..fleet_size {
        let node = sim.state.fleet[v].node;
        sim.log(0.0, Some(v), EventKind::Idle, None, Some(node));
    }
    sim.push(0.0, Event::Cycle(0));

    while let Some(Reverse((bits, _, _, ev))) = sim.queue.pop() {
        let t = f64::from_bits(bits);
        sim.clock = t;
        match ev {
            Event::LinkExit(v) => sim.on_link_exit(v as usize, t),
            Event::StopDone(v) => sim.on_stop_done(v as usize, t),
            Event::Cycle(k) => sim.on_cycle(k),
        }
    }

    let pending_at_end = sim.state.close();
    DayRun {
        seed,
        requests: std::mem::take(&mut sim.state.requests),
        events: sim.events,
        decisions: sim.decisions,
        volumes: sim.volumes,
        pending_at_end,
        fleet_size,
        end_time: sim.clock,
    }
}
