use super::{Action, Anchor, Candidate, ScheduleItem, Strategy, StrategyConfig, Vehicle};
use crate::demand::{Request, RequestKind};
use crate::network::Router;

/// Slack on every time comparison of the feasibility predicate.
pub const FEASIBILITY_EPS: f64 = 1e-6;

/// Extra slack before a free-flow lower bound is allowed to prune, so that
/// rounding in the bound never discards a feasible candidate.
const PRUNE_MARGIN: f64 = 1e-3;

/// Copies `base` with the pickup of `request` inserted before position `i`
/// and its drop-off before position `j` of the original schedule (`i <= j`).
pub fn build_candidate(vehicle: &Vehicle, request: usize, req: &Request, i: usize, j: usize) -> Candidate {
    let base = &vehicle.schedule;
    debug_assert!(i <= j && j <= base.len());
    let mut items = Vec::with_capacity(base.len() + 2);
    items.extend_from_slice(&base[..i]);
    items.push(ScheduleItem::pickup(request, req.origin));
    items.extend_from_slice(&base[i..j]);
    items.push(ScheduleItem::dropoff(request, req.dest));
    items.extend_from_slice(&base[j..]);
    Candidate {
        vehicle: vehicle.id,
        request,
        items,
        pickup_pos: i,
        dropoff_pos: j + 1,
        direct_time: None,
    }
}

/// Recomputes planned times from position `from` on. Returns false if some
/// leg is unreachable.
pub fn time_schedule(router: &Router<'_>, anchor: Anchor, items: &mut [ScheduleItem], from: usize, dwell: f64) -> bool {
    let (mut node, mut t) = if from == 0 {
        (anchor.node, anchor.time)
    } else {
        (items[from - 1].node, items[from - 1].planned_time)
    };
    for item in &mut items[from..] {
        let Some(arrival) = router.arrival(node, item.node, t) else {
            return false;
        };
        item.planned_time = arrival + dwell;
        node = item.node;
        t = item.planned_time;
    }
    true
}

/// Time-free part of the predicate: load limits, pairing, the single-ride
/// and parcel-mixing rules.
pub fn composition_ok(items: &[ScheduleItem], vehicle: &Vehicle, requests: &[Request], cfg: &StrategyConfig) -> bool {
    let ridl = cfg.strategy == Strategy::ShrRidl;
    let cap = vehicle.seat_capacity as usize;
    let (mut pax, mut parcels, mut singles) = (0usize, 0usize, 0usize);
    for &r in &vehicle.onboard {
        match requests[r].kind {
            RequestKind::PassengerSingle => {
                pax += 1;
                singles += 1;
            }
            RequestKind::PassengerShared => pax += 1,
            RequestKind::Parcel => parcels += 1,
        }
    }
    let mut picked: Vec<usize> = Vec::with_capacity(4);
    for item in items {
        let r = match (item.action, item.request) {
            (Action::Pickup | Action::Dropoff, Some(r)) => r,
            (Action::Pickup | Action::Dropoff, None) => return false,
            _ => continue,
        };
        let req = &requests[r];
        if ridl && req.kind == RequestKind::Parcel && pax > 0 {
            return false;
        }
        match item.action {
            Action::Pickup => {
                if vehicle.onboard.contains(&r) || picked.contains(&r) {
                    return false;
                }
                picked.push(r);
                match req.kind {
                    RequestKind::PassengerSingle => {
                        pax += 1;
                        singles += 1;
                    }
                    RequestKind::PassengerShared => pax += 1,
                    RequestKind::Parcel => parcels += 1,
                }
                if pax + parcels > cap {
                    return false;
                }
                if singles > 0 && pax + parcels > 1 {
                    return false;
                }
                if !cfg.multi_parcel && parcels > 1 {
                    return false;
                }
            }
            _ => {
                let aboard = vehicle.onboard.contains(&r) || picked.contains(&r);
                if !aboard {
                    return false;
                }
                picked.retain(|&p| p != r);
                match req.kind {
                    RequestKind::PassengerSingle => {
                        pax -= 1;
                        singles -= 1;
                    }
                    RequestKind::PassengerShared => pax -= 1,
                    RequestKind::Parcel => parcels -= 1,
                }
            }
        }
    }
    // every request aboard or picked up must be delivered
    pax + parcels == 0
}

/// Wait and ride-time limits of every passenger touched by the candidate.
fn timing_ok(candidate: &Candidate, vehicle: &Vehicle, requests: &[Request], cfg: &StrategyConfig) -> bool {
    let items = &candidate.items;
    for (k, item) in items.iter().enumerate() {
        let Some(r) = item.request else { continue };
        let req = &requests[r];
        if !req.is_passenger() {
            continue;
        }
        match item.action {
            Action::Pickup => {
                if item.planned_time - req.request_time > cfg.max_passenger_wait_s + FEASIBILITY_EPS {
                    return false;
                }
            }
            Action::Dropoff => {
                let pickup = items[..k]
                    .iter()
                    .find(|it| it.action == Action::Pickup && it.request == Some(r))
                    .map(|it| it.planned_time)
                    .or_else(|| vehicle.onboard.contains(&r).then_some(req.t_pickup).flatten());
                let Some(pickup) = pickup else { return false };
                let direct = if r == candidate.request {
                    candidate.direct_time
                } else {
                    req.direct_time
                };
                let Some(direct) = direct else { return false };
                let ride = (item.planned_time - cfg.dwell_s) - pickup;
                if ride > cfg.detour_factor * direct + FEASIBILITY_EPS {
                    return false;
                }
            }
            _ => {}
        }
    }
    true
}

/// The full feasibility predicate on a timed candidate.
pub fn check_feasibility(candidate: &Candidate, vehicle: &Vehicle, requests: &[Request], cfg: &StrategyConfig) -> bool {
    composition_ok(&candidate.items, vehicle, requests, cfg) && timing_ok(candidate, vehicle, requests, cfg)
}

/// True if even free-flow travel from position `from` on breaks a passenger
/// limit. Never true for a candidate that [`timing_ok`] would accept.
fn bound_prunes(
    candidate: &Candidate,
    from: usize,
    anchor: Anchor,
    vehicle: &Vehicle,
    requests: &[Request],
    router: &Router<'_>,
    cfg: &StrategyConfig,
    lb: &mut Vec<f64>,
) -> bool {
    let items = &candidate.items;
    let (mut node, mut t) = if from == 0 {
        (anchor.node, anchor.time)
    } else {
        (items[from - 1].node, items[from - 1].planned_time)
    };
    lb.clear();
    for item in &items[from..] {
        let d = router.lower_bound(node, item.node);
        if !d.is_finite() {
            return true;
        }
        t += d + cfg.dwell_s;
        lb.push(t);
        node = item.node;
    }
    let slack = FEASIBILITY_EPS + PRUNE_MARGIN;
    for (k, item) in items.iter().enumerate().skip(from) {
        let Some(r) = item.request else { continue };
        let req = &requests[r];
        if !req.is_passenger() {
            continue;
        }
        let at = lb[k - from];
        match item.action {
            Action::Pickup => {
                if at - req.request_time > cfg.max_passenger_wait_s + slack {
                    return true;
                }
            }
            Action::Dropoff if r != candidate.request => {
                let Some(direct) = req.direct_time else { continue };
                let pickup = match items[..k]
                    .iter()
                    .position(|it| it.action == Action::Pickup && it.request == Some(r))
                {
                    Some(p) if p >= from => lb[p - from],
                    Some(p) => items[p].planned_time,
                    None if vehicle.onboard.contains(&r) => match req.t_pickup {
                        Some(tp) => tp,
                        None => continue,
                    },
                    None => continue,
                };
                if (at - cfg.dwell_s) - pickup > cfg.detour_factor * direct + slack {
                    return true;
                }
            }
            _ => {}
        }
    }
    false
}

/// Times a built candidate and evaluates it. `from` is the first position
/// whose planned time may differ from the vehicle's current schedule.
fn evaluate(
    mut candidate: Candidate,
    vehicle: &Vehicle,
    requests: &[Request],
    router: &Router<'_>,
    now: f64,
    cfg: &StrategyConfig,
    lb: &mut Vec<f64>,
) -> Option<Candidate> {
    if !composition_ok(&candidate.items, vehicle, requests, cfg) {
        return None;
    }
    let anchor = vehicle.anchor(now);
    let from = candidate.pickup_pos;
    if bound_prunes(&candidate, from, anchor, vehicle, requests, router, cfg, lb) {
        return None;
    }
    if !time_schedule(router, anchor, &mut candidate.items, from, cfg.dwell_s) {
        return None;
    }
    let req = &requests[candidate.request];
    if req.is_passenger() {
        candidate.direct_time = Some(router.travel_time(req.origin, req.dest, candidate.pickup_time())?);
    }
    timing_ok(&candidate, vehicle, requests, cfg).then_some(candidate)
}

/// Last pickup position for a parcel hitching on a passenger ride: it must
/// be picked up before the vehicle's final scheduled passenger drop-off.
/// `None` if no passenger drop-off is scheduled.
pub fn parcel_pickup_limit(vehicle: &Vehicle, requests: &[Request]) -> Option<usize> {
    vehicle
        .schedule
        .iter()
        .rposition(|it| it.action == Action::Dropoff && it.request.is_some_and(|r| requests[r].is_passenger()))
}

/// First feasible insertion of `request` into the vehicle's schedule,
/// scanning pickup position `i` then drop-off position `j` in ascending order.
pub fn find_insertion(
    vehicle: &Vehicle,
    request: usize,
    requests: &[Request],
    router: &Router<'_>,
    now: f64,
    cfg: &StrategyConfig,
) -> Option<Candidate> {
    let req = &requests[request];
    let m = vehicle.schedule.len();
    let last_pickup = if req.is_passenger() {
        m
    } else {
        parcel_pickup_limit(vehicle, requests)?
    };
    let mut lb = Vec::with_capacity(m + 2);
    for i in 0..=last_pickup {
        for j in i..=m {
            let candidate = build_candidate(vehicle, request, req, i, j);
            if let Some(c) = evaluate(candidate, vehicle, requests, router, now, cfg, &mut lb) {
                return Some(c);
            }
        }
    }
    None
}

/// Parcel insertion that brackets the passenger rides: pickup right before
/// the first passenger pickup, drop-off right after the last passenger
/// drop-off. Only that one position pair is tried.
pub fn insert_parcel_ridl(
    vehicle: &Vehicle,
    parcel: usize,
    requests: &[Request],
    router: &Router<'_>,
    now: f64,
    cfg: &StrategyConfig,
) -> Option<Candidate> {
    if vehicle.onboard.iter().any(|&r| requests[r].is_passenger()) {
        return None;
    }
    let is_pax = |it: &ScheduleItem| it.request.is_some_and(|r| requests[r].is_passenger());
    let schedule = &vehicle.schedule;
    let (i, j) = if schedule.is_empty() {
        (0, 0)
    } else {
        let first = schedule
            .iter()
            .position(|it| it.action == Action::Pickup && is_pax(it))?;
        let last = schedule
            .iter()
            .rposition(|it| it.action == Action::Dropoff && is_pax(it))?;
        if last < first {
            return None;
        }
        (first, last + 1)
    };
    let candidate = build_candidate(vehicle, parcel, &requests[parcel], i, j);
    let mut lb = Vec::new();
    evaluate(candidate, vehicle, requests, router, now, cfg, &mut lb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::{Motion, VehicleId};
    use crate::network::{LinkSpec, Network, Node, NodeIx, TravelTimeField};

    /// Line 0-1-2-3, 100 s per hop each way.
    fn line() -> (Network, TravelTimeField) {
        let nodes = (0..4)
            .map(|id| Node {
                id,
                x: id as f64,
                y: 0.0,
            })
            .collect();
        let mut links = Vec::new();
        for a in 0..3u32 {
            for (from, to) in [(a, a + 1), (a + 1, a)] {
                links.push(LinkSpec {
                    id: links.len() as u32,
                    from,
                    to,
                    length: 1000.0,
                    free_flow_speed: 10.0,
                    capacity: 1000.0,
                    alpha: 0.15,
                    beta: 4.0,
                });
            }
        }
        let net = Network::new(nodes, links).unwrap();
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        (net, field)
    }

    fn cfg(strategy: Strategy) -> StrategyConfig {
        StrategyConfig::with_strategy(strategy)
    }

    #[test]
    fn empty_schedule_at_origin() {
        let (net, field) = line();
        let router = Router::new(&net, &field);
        let v = Vehicle::new(VehicleId(0), NodeIx(0), 4, 100.0);
        let reqs = vec![Request::new(
            1,
            RequestKind::PassengerSingle,
            NodeIx(0),
            NodeIx(2),
            100.0,
        )];
        let c = find_insertion(&v, 0, &reqs, &router, 100.0, &cfg(Strategy::Base)).unwrap();
        assert_eq!(c.items.len(), 2);
        assert_eq!(c.items[0].planned_time, 130.0);
        assert_eq!(c.items[1].planned_time, 130.0 + 200.0 + 30.0);
        assert_eq!(c.direct_time, Some(200.0));
    }

    #[test]
    fn full_vehicle_rejects() {
        let (net, field) = line();
        let router = Router::new(&net, &field);
        let mut reqs: Vec<Request> = (0..4)
            .map(|i| {
                let mut r = Request::new(i, RequestKind::PassengerShared, NodeIx(0), NodeIx(3), 0.0);
                r.t_pickup = Some(30.0);
                r.direct_time = Some(300.0);
                r
            })
            .collect();
        reqs.push(Request::new(9, RequestKind::PassengerShared, NodeIx(1), NodeIx(2), 0.0));
        let mut v = Vehicle::new(VehicleId(0), NodeIx(0), 4, 0.0);
        v.onboard = vec![0, 1, 2, 3];
        v.motion = Motion::Dwelling { until: 30.0 };
        v.schedule = (0..4)
            .map(|r| ScheduleItem {
                planned_time: 360.0 + 30.0 * r as f64,
                ..ScheduleItem::dropoff(r, NodeIx(3))
            })
            .collect();
        assert!(find_insertion(&v, 4, &reqs, &router, 30.0, &cfg(Strategy::Shr)).is_none());
    }

    #[test]
    fn single_rider_is_exclusive() {
        let (net, field) = line();
        let router = Router::new(&net, &field);
        let mut reqs = vec![Request::new(1, RequestKind::PassengerSingle, NodeIx(0), NodeIx(3), 0.0)];
        reqs[0].t_pickup = Some(30.0);
        reqs[0].direct_time = Some(300.0);
        reqs.push(Request::new(2, RequestKind::Parcel, NodeIx(1), NodeIx(2), 0.0));
        let mut v = Vehicle::new(VehicleId(0), NodeIx(0), 4, 0.0);
        v.onboard = vec![0];
        v.motion = Motion::Dwelling { until: 30.0 };
        v.schedule = vec![ScheduleItem {
            planned_time: 360.0,
            ..ScheduleItem::dropoff(0, NodeIx(3))
        }];
        // sharing the single ride is forbidden, and after it the parcel
        // would no longer be hitching on a passenger
        assert!(find_insertion(&v, 1, &reqs, &router, 30.0, &cfg(Strategy::Shr)).is_none());
        reqs[0].kind = RequestKind::PassengerShared;
        let c = find_insertion(&v, 1, &reqs, &router, 30.0, &cfg(Strategy::Shr)).unwrap();
        assert_eq!((c.pickup_pos, c.dropoff_pos), (0, 1));
        assert_eq!(
            c.items.iter().map(|it| it.planned_time).collect::<Vec<_>>(),
            vec![160.0, 290.0, 420.0]
        );
    }

    #[test]
    fn ride_limit_is_enforced() {
        let (net, field) = line();
        let router = Router::new(&net, &field);
        // passenger aboard at node 1 heading to node 2 (direct 100 s, limit 150 s)
        let mut reqs = vec![Request::new(1, RequestKind::PassengerShared, NodeIx(1), NodeIx(2), 0.0)];
        reqs[0].t_pickup = Some(30.0);
        reqs[0].direct_time = Some(100.0);
        // detour to node 0 first would cost 100 + 30 + 200 > 150
        reqs.push(Request::new(2, RequestKind::PassengerShared, NodeIx(0), NodeIx(2), 0.0));
        let mut v = Vehicle::new(VehicleId(0), NodeIx(1), 4, 0.0);
        v.onboard = vec![0];
        v.motion = Motion::Dwelling { until: 30.0 };
        v.schedule = vec![ScheduleItem {
            planned_time: 160.0,
            ..ScheduleItem::dropoff(0, NodeIx(2))
        }];
        let c = find_insertion(&v, 1, &reqs, &router, 30.0, &cfg(Strategy::Shr)).unwrap();
        // only feasible after dropping the first rider
        assert_eq!((c.pickup_pos, c.dropoff_pos), (1, 2));
    }

    #[test]
    fn ridl_brackets_the_ride() {
        let (net, field) = line();
        let router = Router::new(&net, &field);
        let mut reqs = vec![Request::new(1, RequestKind::PassengerShared, NodeIx(1), NodeIx(2), 0.0)];
        reqs.push(Request::new(2, RequestKind::Parcel, NodeIx(0), NodeIx(3), 0.0));
        let mut v = Vehicle::new(VehicleId(0), NodeIx(0), 4, 0.0);
        v.schedule = vec![ScheduleItem::pickup(0, NodeIx(1)), ScheduleItem::dropoff(0, NodeIx(2))];
        let anchor = v.anchor(0.0);
        assert!(time_schedule(&router, anchor, &mut v.schedule, 0, 30.0));
        reqs[0].direct_time = Some(100.0);
        let c = insert_parcel_ridl(&v, 1, &reqs, &router, 0.0, &cfg(Strategy::ShrRidl)).unwrap();
        let kinds: Vec<_> = c.items.iter().map(|it| (it.action, it.request)).collect();
        assert_eq!(
            kinds,
            vec![
                (Action::Pickup, Some(1)),
                (Action::Pickup, Some(0)),
                (Action::Dropoff, Some(0)),
                (Action::Dropoff, Some(1)),
            ]
        );
        v.onboard = vec![0];
        v.schedule.remove(0);
        assert!(insert_parcel_ridl(&v, 1, &reqs, &router, 0.0, &cfg(Strategy::ShrRidl)).is_none());
    }
}
