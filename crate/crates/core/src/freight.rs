//! Conventional parcel-carrier tours: the baseline that cargo-hitching offloads.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::Request;
use crate::io::{parse_error, read_records, write_text};
use crate::network::{Network, NodeIx, Router};
use crate::{Error, Result};

/// Parcels per carrier tour unless the depot file says otherwise.
pub const DEFAULT_TOUR_CAPACITY: u32 = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Depot {
    pub id: u32,
    pub node: NodeIx,
    pub vehicles: u32,
    /// Parcels per tour.
    pub capacity: u32,
}

#[derive(Deserialize)]
struct DepotRow {
    id: u32,
    node: u32,
    vehicles: u32,
    capacity: Option<u32>,
}

/// Reads `id,node,vehicles,capacity`; an empty capacity means the default.
pub fn load_depots(path: &Path, network: &Network) -> Result<Vec<Depot>> {
    let mut depots: Vec<Depot> = Vec::new();
    for (line, row) in read_records::<DepotRow>(path)? {
        let node = network
            .node_ix(row.node)
            .ok_or_else(|| parse_error(path, line, format!("unknown node {}", row.node)))?;
        let capacity = row.capacity.unwrap_or(DEFAULT_TOUR_CAPACITY);
        if row.vehicles == 0 || capacity == 0 {
            return Err(parse_error(path, line, "vehicles and capacity must be positive"));
        }
        if depots.iter().any(|d| d.id == row.id) {
            return Err(parse_error(path, line, format!("duplicate depot id {}", row.id)));
        }
        depots.push(Depot {
            id: row.id,
            node,
            vehicles: row.vehicles,
            capacity,
        });
    }
    if depots.is_empty() {
        return Err(Error::invalid(format!("{}: no depots", path.display())));
    }
    Ok(depots)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TourStop {
    pub parcel: u64,
    pub node: NodeIx,
    /// Arrival time at the stop.
    pub eta: f64,
    /// Distance driven since leaving the depot.
    pub cum_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarrierTour {
    pub id: u32,
    pub depot: u32,
    pub depot_node: NodeIx,
    pub start: f64,
    pub stops: Vec<TourStop>,
    /// Back at the depot.
    pub end: f64,
    pub total_distance: f64,
}

impl CarrierTour {
    pub fn total_time(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tours {
    pub tours: Vec<CarrierTour>,
    /// Parcels no depot can reach and return from.
    pub unroutable: Vec<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CarrierMetrics {
    pub driving_time_h: f64,
    pub vkt_km: f64,
    pub trip_count: f64,
    pub parcels: f64,
}

/// Depot with the smallest free-flow time to `dest` that can also get back.
fn nearest_depot(router: &Router<'_>, depots: &[Depot], dest: NodeIx) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, d) in depots.iter().enumerate() {
        let out = router.lower_bound(d.node, dest);
        if !out.is_finite() || !router.lower_bound(dest, d.node).is_finite() {
            continue;
        }
        if best.is_none_or(|(b, _)| out < b) {
            best = Some((out, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Batches parcels per nearest depot in request-time order and sequences
/// each batch nearest-neighbour on time-dependent travel times.
pub fn build_tours(parcels: &[&Request], depots: &[Depot], router: &Router<'_>) -> Tours {
    let mut per_depot: Vec<Vec<&Request>> = vec![Vec::new(); depots.len()];
    let mut unroutable = Vec::new();
    for &p in parcels {
        match nearest_depot(router, depots, p.dest) {
            Some(d) => per_depot[d].push(p),
            None => {
                log::warn!("parcel {} cannot be routed from any depot", p.id);
                unroutable.push(p.id);
            }
        }
    }
    let mut tours = Vec::new();
    for (depot, mut batch) in depots.iter().zip(per_depot) {
        batch.sort_by(|a, b| a.request_time.total_cmp(&b.request_time).then(a.id.cmp(&b.id)));
        for group in batch.chunks(depot.capacity as usize) {
            let id = tours.len() as u32;
            tours.push(sequence(id, depot, group, router));
        }
    }
    Tours { tours, unroutable }
}

fn sequence(id: u32, depot: &Depot, group: &[&Request], router: &Router<'_>) -> CarrierTour {
    let start = group.iter().map(|p| p.request_time).fold(f64::INFINITY, f64::min);
    let mut left: Vec<&Request> = group.to_vec();
    let mut stops = Vec::with_capacity(group.len());
    let (mut node, mut t, mut dist) = (depot.node, start, 0.0);
    while !left.is_empty() {
        let tree = router.tree(node, t);
        let mut pick = 0;
        let mut pick_time = f64::INFINITY;
        for (k, p) in left.iter().enumerate() {
            let a = if p.dest == node { t } else { tree.arrival(p.dest) };
            if a < pick_time {
                pick = k;
                pick_time = a;
            }
        }
        let p = left.remove(pick);
        let leg = router.route(node, p.dest, t).expect("depot reaches its parcels");
        dist += leg.total_distance;
        t = leg.arrival();
        node = p.dest;
        stops.push(TourStop {
            parcel: p.id,
            node,
            eta: t,
            cum_distance: dist,
        });
    }
    let back = router.route(node, depot.node, t).expect("parcels reach their depot");
    CarrierTour {
        id,
        depot: depot.id,
        depot_node: depot.node,
        start,
        stops,
        end: back.arrival(),
        total_distance: dist + back.total_distance,
    }
}

/// Parcels not served by the fleet.
pub fn offload<'r>(parcels: &[&'r Request], mod_served: &[u64]) -> Vec<&'r Request> {
    let served: std::collections::HashSet<u64> = mod_served.iter().copied().collect();
    parcels.iter().copied().filter(|p| !served.contains(&p.id)).collect()
}

pub fn carrier_metrics(tours: &Tours) -> CarrierMetrics {
    let mut m = CarrierMetrics::default();
    for tour in &tours.tours {
        m.driving_time_h += tour.total_time() / 3600.0;
        m.vkt_km += tour.total_distance / 1000.0;
        m.trip_count += 1.0;
        m.parcels += tour.stops.len() as f64;
    }
    m
}

/// `tour_id,depot,stop_seq,parcel_id,eta,cum_distance_m`; sequence 0 and
/// the last row are the depot departure and return.
pub fn tours_to_csv(tours: &Tours) -> String {
    let mut out = String::from("tour_id,depot,stop_seq,parcel_id,eta,cum_distance_m\n");
    for tour in &tours.tours {
        let _ = writeln!(out, "{},{},0,,{},0", tour.id, tour.depot, tour.start);
        for (k, s) in tour.stops.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                tour.id,
                tour.depot,
                k + 1,
                s.parcel,
                s.eta,
                s.cum_distance
            );
        }
        let _ = writeln!(
            out,
            "{},{},{},,{},{}",
            tour.id,
            tour.depot,
            tour.stops.len() + 1,
            tour.end,
            tour.total_distance
        );
    }
    out
}

pub fn write_tours(path: &Path, tours: &Tours) -> Result<()> {
    write_text(path, &tours_to_csv(tours))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::RequestKind;
    use crate::network::TravelTimeField;

    fn parcel(id: u64, dest: u32, t: f64) -> Request {
        Request::new(id, RequestKind::Parcel, NodeIx(0), NodeIx(dest), t)
    }

    fn depot(node: u32, capacity: u32) -> Depot {
        Depot {
            id: 1,
            node: NodeIx(node),
            vehicles: 1,
            capacity,
        }
    }

    #[test]
    fn line_tour() {
        // 1x3 line, 1 km hops at 10 m/s
        let net = Network::grid(1, 3, 1000.0, 10.0, 1000.0);
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        let router = Router::new(&net, &field);
        let ps = [parcel(1, 2, 50.0), parcel(2, 1, 60.0)];
        let refs: Vec<&Request> = ps.iter().collect();
        let tours = build_tours(&refs, &[depot(0, 50)], &router);
        assert_eq!(tours.tours.len(), 1);
        let tour = &tours.tours[0];
        assert_eq!(tour.stops.iter().map(|s| s.parcel).collect::<Vec<_>>(), [2, 1]);
        assert_eq!(tour.total_distance, 4000.0);
        assert_eq!(tour.start, 50.0);
        assert_eq!(tour.total_time(), 400.0);
        let m = carrier_metrics(&tours);
        assert!((m.driving_time_h - 400.0 / 3600.0).abs() < 1e-12);
        assert_eq!(m.vkt_km, 4.0);
    }

    #[test]
    fn batches_by_capacity() {
        let net = Network::grid(3, 3, 500.0, 10.0, 1000.0);
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        let router = Router::new(&net, &field);
        let ps: Vec<Request> = (0..120).map(|i| parcel(i, (i % 8 + 1) as u32, i as f64)).collect();
        let refs: Vec<&Request> = ps.iter().collect();
        let tours = build_tours(&refs, &[depot(0, 50)], &router);
        assert_eq!(tours.tours.len(), 3);
        assert!(tours.tours.iter().all(|t| t.stops.len() <= 50));
        assert!(build_tours(&[], &[depot(0, 50)], &router).tours.is_empty());
    }

    #[test]
    fn offload_removes_served() {
        let ps = [parcel(1, 1, 0.0), parcel(2, 1, 0.0), parcel(3, 1, 0.0)];
        let refs: Vec<&Request> = ps.iter().collect();
        let rest = offload(&refs, &[2]);
        assert_eq!(rest.iter().map(|p| p.id).collect::<Vec<_>>(), [1, 3]);
        assert!(offload(&refs, &[1, 2, 3]).is_empty());
    }
}
