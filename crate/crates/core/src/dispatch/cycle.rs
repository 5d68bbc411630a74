use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;

use super::gates::{gate_parcel_idle, gate_parcel_shr, idle_dispatch_candidate};
use super::insertion::{find_insertion, insert_parcel_ridl};
use super::{AssignmentDecision, Candidate, Mechanism, Motion, Strategy, StrategyConfig, Vehicle};
use crate::demand::{FailReason, Request, RequestKind, RequestState};
use crate::network::Router;

/// Mutable controller state for one simulated day.
pub struct DispatchState {
    pub fleet: Vec<Vehicle>,
    /// Sorted by `(request_time, id)`; schedules refer to requests by index.
    pub requests: Vec<Request>,
    pub rng: ChaCha8Rng,
    /// Released, unassigned requests in request-time order.
    pending: Vec<usize>,
    released: usize,
    /// Failed insertion attempts per request: vehicle -> (plan version, anchor time bits).
    /// A vehicle whose plan and anchor are unchanged would fail again.
    misses: HashMap<usize, HashMap<u32, (u64, u64)>>,
}

#[derive(Debug, Default)]
pub struct CycleOutcome {
    pub decisions: Vec<AssignmentDecision>,
    /// Requests failed this cycle.
    pub failed: Vec<usize>,
}

impl DispatchState {
    pub fn new(fleet: Vec<Vehicle>, requests: Vec<Request>, rng: ChaCha8Rng) -> Self {
        debug_assert!(requests
            .windows(2)
            .all(|w| (w[0].request_time, w[0].id) <= (w[1].request_time, w[1].id)));
        Self {
            fleet,
            requests,
            rng,
            pending: Vec::new(),
            released: 0,
            misses: HashMap::new(),
        }
    }

    pub fn pending(&self) -> &[usize] {
        &self.pending
    }

    /// Requests not yet released to the controller.
    pub fn unreleased(&self) -> usize {
        self.requests.len() - self.released
    }

    /// Drops the pending list at the end of the service day.
    pub fn close(&mut self) -> Vec<usize> {
        self.misses.clear();
        let mut rest = std::mem::take(&mut self.pending);
        rest.extend(self.released..self.requests.len());
        self.released = self.requests.len();
        rest
    }

    fn try_vehicle(
        &mut self,
        v: usize,
        request: usize,
        router: &Router<'_>,
        now: f64,
        cfg: &StrategyConfig,
        ridl_parcel: bool,
    ) -> Option<Candidate> {
        let vehicle = &self.fleet[v];
        let key = (vehicle.plan_version, vehicle.anchor(now).time.to_bits());
        if self
            .misses
            .get(&request)
            .and_then(|m| m.get(&vehicle.id.0))
            .is_some_and(|&k| k == key)
        {
            return None;
        }
        let found = if ridl_parcel {
            insert_parcel_ridl(vehicle, request, &self.requests, router, now, cfg)
        } else {
            find_insertion(vehicle, request, &self.requests, router, now, cfg)
        };
        if found.is_none() {
            self.misses.entry(request).or_default().insert(vehicle.id.0, key);
        }
        found
    }

    fn scan(
        &mut self,
        request: usize,
        router: &Router<'_>,
        now: f64,
        cfg: &StrategyConfig,
        ridl_parcel: bool,
        eligible: impl Fn(&Vehicle, &[Request]) -> bool,
    ) -> Option<Candidate> {
        for v in 0..self.fleet.len() {
            if !eligible(&self.fleet[v], &self.requests) {
                continue;
            }
            if let Some(c) = self.try_vehicle(v, request, router, now, cfg, ridl_parcel) {
                return Some(c);
            }
        }
        None
    }

    fn match_request(
        &mut self,
        request: usize,
        router: &Router<'_>,
        now: f64,
        cfg: &StrategyConfig,
    ) -> Option<(Candidate, Mechanism)> {
        let kind = self.requests[request].kind;
        match kind {
            RequestKind::PassengerSingle => self
                .scan(request, router, now, cfg, false, |v, _| v.is_unassigned())
                .map(|c| (c, Mechanism::FirstAssignment)),
            RequestKind::PassengerShared => self
                .scan(request, router, now, cfg, false, |v, _| !v.is_unassigned())
                .map(|c| (c, Mechanism::SharedInsertion))
                .or_else(|| {
                    self.scan(request, router, now, cfg, false, |v, _| v.is_unassigned())
                        .map(|c| (c, Mechanism::FirstAssignment))
                }),
            RequestKind::Parcel => {
                if !cfg.strategy.serves_parcels() {
                    return None;
                }
                let ridl = cfg.strategy == Strategy::ShrRidl;
                if let Some(c) = self.scan(request, router, now, cfg, ridl, gate_parcel_shr) {
                    return Some((c, Mechanism::SharedInsertion));
                }
                if !cfg.strategy.uses_idle_vehicles() {
                    return None;
                }
                let chosen = gate_parcel_idle(&self.fleet, &self.requests[request], router, now, cfg, &mut self.rng)?;
                idle_dispatch_candidate(&self.fleet[chosen.index()], request, &self.requests, router, now, cfg)
                    .map(|c| (c, Mechanism::IdleDispatch))
            }
        }
    }

    fn apply(&mut self, now: f64, candidate: Candidate, mechanism: Mechanism) -> AssignmentDecision {
        let vehicle = &mut self.fleet[candidate.vehicle.index()];
        vehicle.schedule = candidate.items.clone();
        vehicle.idle_since = None;
        vehicle.plan_version += 1;
        if candidate.pickup_pos == 0 && matches!(vehicle.motion, Motion::Driving { .. }) {
            vehicle.needs_route = true;
        }
        let req = &mut self.requests[candidate.request];
        req.state = RequestState::Assigned;
        req.assigned_vehicle = Some(candidate.vehicle);
        req.t_assigned = Some(now);
        req.direct_time = candidate.direct_time;
        AssignmentDecision {
            time: now,
            request: candidate.request,
            vehicle: candidate.vehicle,
            candidate,
            mechanism,
        }
    }

    fn fail(&mut self, request: usize, reason: FailReason) {
        let req = &mut self.requests[request];
        req.state = RequestState::Failed;
        req.fail_reason = Some(reason);
    }
}

/// One controller cycle at `now`: release new requests, expire stale
/// passengers, then try every pending request in request-time order.
pub fn process_cycle(state: &mut DispatchState, router: &Router<'_>, now: f64, cfg: &StrategyConfig) -> CycleOutcome {
    let mut out = CycleOutcome::default();
    while state.released < state.requests.len() && state.requests[state.released].request_time <= now {
        let r = state.released;
        state.released += 1;
        let req = &state.requests[r];
        if !router.lower_bound(req.origin, req.dest).is_finite() {
            state.fail(r, FailReason::Unreachable);
            out.failed.push(r);
        } else {
            state.pending.push(r);
        }
    }

    let pending = std::mem::take(&mut state.pending);
    let mut still = Vec::with_capacity(pending.len());
    for r in pending {
        let req = &state.requests[r];
        if req.is_passenger() && now - req.request_time > cfg.max_passenger_wait_s {
            state.fail(r, FailReason::WaitExpired);
            state.misses.remove(&r);
            out.failed.push(r);
            continue;
        }
        match state.match_request(r, router, now, cfg) {
            Some((candidate, mechanism)) => {
                state.misses.remove(&r);
                out.decisions.push(state.apply(now, candidate, mechanism));
            }
            None => still.push(r),
        }
    }
    state.pending = still;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::VehicleId;
    use crate::network::{Network, NodeIx, TravelTimeField};
    use rand::SeedableRng;

    fn setup(requests: Vec<Request>) -> (Network, TravelTimeField, DispatchState) {
        let net = Network::grid(3, 3, 1000.0, 10.0, 1000.0);
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        let fleet = vec![Vehicle::new(VehicleId(0), NodeIx(0), 4, 0.0)];
        let state = DispatchState::new(fleet, requests, ChaCha8Rng::seed_from_u64(7));
        (net, field, state)
    }

    #[test]
    fn base_leaves_parcels_pending() {
        let (net, field, mut state) = setup(vec![Request::new(1, RequestKind::Parcel, NodeIx(0), NodeIx(4), 0.0)]);
        let router = Router::new(&net, &field);
        let cfg = StrategyConfig::default();
        for k in 0..100 {
            let out = process_cycle(&mut state, &router, 10.0 * k as f64, &cfg);
            assert!(out.decisions.is_empty());
        }
        assert_eq!(state.pending(), &[0]);
        assert_eq!(state.requests[0].state, RequestState::Pending);
    }

    #[test]
    fn idle_vehicle_at_origin_gets_first_assignment() {
        let (net, field, mut state) = setup(vec![Request::new(
            1,
            RequestKind::PassengerSingle,
            NodeIx(0),
            NodeIx(4),
            0.0,
        )]);
        let router = Router::new(&net, &field);
        let out = process_cycle(&mut state, &router, 0.0, &StrategyConfig::default());
        assert_eq!(out.decisions.len(), 1);
        let d = &out.decisions[0];
        assert_eq!(d.mechanism, Mechanism::FirstAssignment);
        // zero approach: pickup completes after one dwell
        assert_eq!(d.candidate.items[0].planned_time, 30.0);
        assert!(state.fleet[0].idle_since.is_none());
    }

    #[test]
    fn stale_passenger_fails() {
        let (net, field, mut state) = setup(vec![Request::new(
            1,
            RequestKind::PassengerSingle,
            NodeIx(0),
            NodeIx(4),
            0.0,
        )]);
        state.fleet.clear();
        let router = Router::new(&net, &field);
        let cfg = StrategyConfig::default();
        assert!(process_cycle(&mut state, &router, 600.0, &cfg).failed.is_empty());
        let out = process_cycle(&mut state, &router, 601.0, &cfg);
        assert_eq!(out.failed, vec![0]);
        assert_eq!(state.requests[0].fail_reason, Some(FailReason::WaitExpired));
    }
}
