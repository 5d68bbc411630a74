use rand::seq::SliceRandom;
use rand::Rng;

use super::insertion::{build_candidate, check_feasibility, time_schedule};
use super::{Candidate, Strategy, StrategyConfig, Vehicle, VehicleId};
use crate::demand::Request;
use crate::network::Router;

/// Shared-ride gate: the vehicle already carries or expects a passenger.
pub fn gate_parcel_shr(vehicle: &Vehicle, requests: &[Request]) -> bool {
    vehicle.has_passenger(requests)
}

/// Idle-vehicle fallback: a uniformly random vehicle among those idle for
/// at least the eligibility time and close enough to the parcel origin.
pub fn gate_parcel_idle<R: Rng>(
    fleet: &[Vehicle],
    parcel: &Request,
    router: &Router<'_>,
    now: f64,
    cfg: &StrategyConfig,
    rng: &mut R,
) -> Option<VehicleId> {
    if !cfg.strategy.uses_idle_vehicles() {
        return None;
    }
    if cfg.strategy == Strategy::ShrRidl && cfg.in_peak(now) {
        return None;
    }
    let eligible: Vec<VehicleId> = fleet
        .iter()
        .filter(|v| v.is_unassigned())
        .filter(|v| v.idle_since.is_some_and(|s| s <= now - cfg.idle_eligibility_s))
        .filter(|v| {
            let anchor = v.anchor(now);
            router.lower_bound(anchor.node, parcel.origin) <= cfg.parcel_approach_wait_s
                && router
                    .travel_time(anchor.node, parcel.origin, anchor.time)
                    .is_some_and(|t| t <= cfg.parcel_approach_wait_s)
        })
        .map(|v| v.id)
        .collect();
    eligible.choose(rng).copied()
}

/// `[parcel pickup, parcel drop-off]` on an unassigned vehicle.
pub fn idle_dispatch_candidate(
    vehicle: &Vehicle,
    parcel: usize,
    requests: &[Request],
    router: &Router<'_>,
    now: f64,
    cfg: &StrategyConfig,
) -> Option<Candidate> {
    if !vehicle.is_unassigned() {
        return None;
    }
    let mut c = build_candidate(vehicle, parcel, &requests[parcel], 0, 0);
    if !time_schedule(router, vehicle.anchor(now), &mut c.items, 0, cfg.dwell_s) {
        return None;
    }
    check_feasibility(&c, vehicle, requests, cfg).then_some(c)
}
