use std::collections::HashMap;

use cargohitch::demand::{Request, RequestKind, RequestState};
use cargohitch::dispatch::{Strategy, StrategyConfig};
use cargohitch::engine::{run_day, run_with_learning, EventKind, RunConfig, Scenario};
use cargohitch::network::{BackgroundVolumes, LinkIx, Network, NodeIx, Router, TravelTimeField};
use proptest::prelude::*;

fn request_strategy(nodes: u32) -> impl proptest::strategy::Strategy<Value = (u8, u32, u32, f64)> {
    (0u8..10, 0..nodes, 0..nodes - 1, 25_000.0f64..40_000.0)
}

fn build_requests(raw: &[(u8, u32, u32, f64)]) -> Vec<Request> {
    let mut out: Vec<Request> = raw
        .iter()
        .enumerate()
        .map(|(i, &(k, o, d, t))| {
            let kind = match k {
                0..=2 => RequestKind::PassengerSingle,
                3..=6 => RequestKind::PassengerShared,
                _ => RequestKind::Parcel,
            };
            let d = if d >= o { d + 1 } else { d };
            Request::new(i as u64 + 1, kind, NodeIx(o), NodeIx(d), t.floor())
        })
        .collect();
    out.sort_by(|a, b| a.request_time.total_cmp(&b.request_time).then(a.id.cmp(&b.id)));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn day_invariants(
        raw in prop::collection::vec(request_strategy(9), 1..40),
        fleet in 1usize..5,
        seats in 1u32..5,
        strategy in 0usize..4,
        seed in 0u64..1000,
    ) {
        let net = Network::grid(3, 3, 800.0, 8.0, 1000.0);
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        let router = Router::new(&net, &field);
        let requests = build_requests(&raw);
        let cfg = StrategyConfig::with_strategy(Strategy::ALL[strategy]);
        let day = run_day(&router, &requests, &cfg, fleet, seats, seed);

        prop_assert!(day.events.windows(2).all(|w| w[0].t <= w[1].t));
        let passenger: HashMap<u64, bool> = day.requests.iter().map(|r| (r.id, r.is_passenger())).collect();
        let mut load = vec![0u32; fleet];
        let mut pax = vec![0u32; fleet];
        for e in &day.events {
            let (Some(v), Some(r)) = (e.vehicle, e.request) else { continue };
            let v = v.0 as usize;
            match e.kind {
                EventKind::Pickup | EventKind::Dropoff if cfg.strategy == Strategy::ShrRidl && !passenger[&r] => {
                    prop_assert_eq!(pax[v], 0, "parcel stop with a passenger aboard");
                }
                _ => {}
            }
            match e.kind {
                EventKind::Pickup => {
                    load[v] += 1;
                    pax[v] += passenger[&r] as u32;
                    prop_assert!(load[v] <= seats);
                }
                EventKind::Dropoff => {
                    load[v] -= 1;
                    pax[v] -= passenger[&r] as u32;
                }
                _ => {}
            }
        }
        prop_assert!(load.iter().all(|&l| l == 0));

        for r in &day.requests {
            match r.state {
                RequestState::Completed => {
                    let (p, d) = (r.t_pickup.unwrap(), r.t_dropoff.unwrap());
                    prop_assert!(r.request_time <= p && p < d);
                    if r.is_passenger() {
                        prop_assert!(p - r.request_time <= cfg.max_passenger_wait_s + 1e-6);
                        let ride = d - cfg.dwell_s - p;
                        prop_assert!(ride <= cfg.detour_factor * r.direct_time.unwrap() + 1e-6);
                    }
                }
                RequestState::Failed => prop_assert!(r.t_pickup.is_none()),
                RequestState::Pending => prop_assert!(r.t_pickup.is_none()),
                s => prop_assert!(false, "request {} ends {:?}", r.id, s),
            }
            if cfg.strategy == Strategy::Base && !r.is_passenger() {
                prop_assert!(r.t_assigned.is_none());
            }
        }
    }
}

#[test]
fn same_seed_same_day() {
    let net = Network::grid(3, 3, 800.0, 8.0, 1000.0);
    let field = TravelTimeField::free_flow(&net, 900).unwrap();
    let router = Router::new(&net, &field);
    let raw: Vec<_> = (0..30u32)
        .map(|i| ((i % 10) as u8, i % 9, (i * 5) % 8, 25_000.0 + 97.0 * i as f64))
        .collect();
    let requests = build_requests(&raw);
    let cfg = StrategyConfig::with_strategy(Strategy::ShrIdl);
    let a = run_day(&router, &requests, &cfg, 3, 4, 11);
    let b = run_day(&router, &requests, &cfg, 3, 4, 11);
    assert_eq!(a.events, b.events);
    assert_eq!(a.decisions, b.decisions);
}

#[test]
fn learning_stops_within_limits() {
    let net = Network::grid(4, 4, 600.0, 8.0, 600.0);
    let field = TravelTimeField::free_flow(&net, 900).unwrap();
    let mut bg = BackgroundVolumes::zero(&field);
    for l in 0..net.link_count() {
        for b in 28..40 {
            bg.set(LinkIx(l as u32), b, 550.0);
        }
    }
    let raw: Vec<_> = (0..120u32)
        .map(|i| ((i % 7) as u8, i % 16, (i * 7) % 15, 25_200.0 + 60.0 * i as f64))
        .collect();
    let requests = build_requests(&raw);
    let scenario = Scenario {
        network: &net,
        requests: &requests,
        depots: &[],
        background: Some(&bg),
    };
    for iterations in [1, 2, 5] {
        let cfg = RunConfig {
            iterations,
            fleet_size: 6,
            ..RunConfig::default()
        };
        let rep = run_with_learning(&cfg, &scenario, 1).unwrap();
        assert!(rep.passes >= 1 && rep.passes <= iterations);
        if rep.passes < iterations {
            assert!(*rep.field_changes.last().unwrap() < cfg.tolerance);
        }
        // congestion never makes a link faster than free flow
        for l in 0..net.link_count() {
            let ix = LinkIx(l as u32);
            for b in 0..rep.field.bin_count() {
                assert!(rep.field.get(ix, b) >= rep.field.free_flow_time(ix));
            }
        }
        // the loaded bins are slower than the empty ones
        let ix = LinkIx(0);
        assert!(rep.field.get(ix, 30) > rep.field.get(ix, 80));
    }
}
