use cargohitch::demand::{Request, RequestKind};
use cargohitch::freight::{build_tours, carrier_metrics, offload, Depot};
use cargohitch::network::{Network, NodeIx, Router, TravelTimeField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn parcels(net: &Network, n: usize, rng: &mut ChaCha8Rng) -> Vec<Request> {
    let nodes = net.node_count() as u32;
    (0..n)
        .map(|i| {
            let o = NodeIx(rng.gen_range(0..nodes));
            let d = NodeIx(rng.gen_range(0..nodes));
            Request::new(i as u64 + 1, RequestKind::Parcel, o, d, 28_800.0 + 60.0 * i as f64)
        })
        .collect()
}

fn depot(node: u32, capacity: u32) -> Depot {
    Depot {
        id: node,
        node: NodeIx(node),
        vehicles: 1,
        capacity,
    }
}

/// Best closed tour over all visiting orders, on free-flow times.
fn optimum(router: &Router<'_>, start: NodeIx, stops: &[NodeIx]) -> f64 {
    fn go(router: &Router<'_>, at: NodeIx, left: &mut Vec<NodeIx>, home: NodeIx) -> f64 {
        if left.is_empty() {
            return router.lower_bound(at, home);
        }
        let mut best = f64::INFINITY;
        for k in 0..left.len() {
            let next = left.remove(k);
            best = best.min(router.lower_bound(at, next) + go(router, next, left, home));
            left.insert(k, next);
        }
        best
    }
    go(router, start, &mut stops.to_vec(), start)
}

#[test]
fn nearest_neighbour_stays_near_optimum() {
    let net = Network::grid(5, 5, 500.0, 10.0, 1000.0);
    let field = TravelTimeField::free_flow(&net, 900).unwrap();
    let router = Router::new(&net, &field);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 1.0;
    for _ in 0..40 {
        let n = rng.gen_range(1..=8);
        let ps = parcels(&net, n, &mut rng);
        let refs: Vec<&Request> = ps.iter().collect();
        let d = depot(rng.gen_range(0..25), 8);
        let tours = build_tours(&refs, std::slice::from_ref(&d), &router);
        assert_eq!(tours.tours.len(), 1);
        let stops: Vec<NodeIx> = ps.iter().map(|p| p.dest).collect();
        let best = optimum(&router, d.node, &stops);
        let got = tours.tours[0].total_time();
        assert!(got >= best - 1e-6);
        if best > 0.0 {
            worst = worst.max(got / best);
        }
    }
    assert!(worst <= 2.0, "nearest-neighbour tour {worst:.2}x the optimum");
}

#[test]
fn every_parcel_is_visited_once() {
    let net = Network::grid(4, 4, 500.0, 10.0, 1000.0);
    let field = TravelTimeField::free_flow(&net, 900).unwrap();
    let router = Router::new(&net, &field);
    let ps = parcels(&net, 23, &mut ChaCha8Rng::seed_from_u64(3));
    let refs: Vec<&Request> = ps.iter().collect();
    let tours = build_tours(&refs, &[depot(0, 5), depot(15, 5)], &router);
    let mut seen: Vec<u64> = tours
        .tours
        .iter()
        .flat_map(|t| t.stops.iter().map(|s| s.parcel))
        .collect();
    seen.sort_unstable();
    assert_eq!(seen, (1..=23).collect::<Vec<_>>());
    for t in &tours.tours {
        assert!(t.stops.len() <= 5);
        assert!(t
            .stops
            .windows(2)
            .all(|w| w[0].eta <= w[1].eta && w[0].cum_distance <= w[1].cum_distance));
    }
}

proptest! {
    #[test]
    fn offloading_fewer_parcels_never_adds_work(seed in 0u64..500, keep in prop::collection::vec(any::<bool>(), 30)) {
        let net = Network::grid(4, 4, 500.0, 10.0, 1000.0);
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        let router = Router::new(&net, &field);
        let ps = parcels(&net, 30, &mut ChaCha8Rng::seed_from_u64(seed));
        let refs: Vec<&Request> = ps.iter().collect();
        let depots = [depot(0, 6), depot(15, 6)];
        let served: Vec<u64> = ps.iter().zip(&keep).filter(|(_, k)| !**k).map(|(p, _)| p.id).collect();
        let rest = offload(&refs, &served);
        prop_assert_eq!(rest.len(), 30 - served.len());

        let all = carrier_metrics(&build_tours(&refs, &depots, &router));
        let fewer = build_tours(&rest, &depots, &router);
        let some = carrier_metrics(&fewer);
        prop_assert!(some.trip_count <= all.trip_count);
        prop_assert_eq!(some.parcels, rest.len() as f64);

        // distance is additive over tours
        let km: f64 = fewer.tours.iter().map(|t| t.total_distance / 1000.0).sum();
        let h: f64 = fewer.tours.iter().map(|t| (t.end - t.start) / 3600.0).sum();
        prop_assert!((km - some.vkt_km).abs() < 1e-9);
        prop_assert!((h - some.driving_time_h).abs() < 1e-9);
    }
}
