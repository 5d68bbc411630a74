//! Performance indicators computed from an event log.
//!
//! Everything here is a function of the event log, the static request table
//! (id, kind, request time) and the travel-time field the day ran on.

mod average;
mod tables;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::demand::{Request, RequestKind};
use crate::engine::{EventKind, EventRecord};
use crate::freight::CarrierMetrics;
use crate::network::{BackgroundVolumes, LinkIx, Network, TravelTimeField};
use crate::time::{Period, Periods, DAY_S};

pub use average::average_reports;
pub use tables::{delta_table, series_requests_csv, series_status_csv, table_csv, Table};

/// Spacing of the status and request time series.
pub const SERIES_BIN_S: f64 = 300.0;
/// Spacing of utilization samples.
pub const UTILIZATION_SAMPLE_S: f64 = 60.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub total: f64,
    pub served: f64,
    pub failed: f64,
    pub pending: f64,
}

/// Means per reporting period; `None` when the period has no samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodMeans {
    pub am_peak: Option<f64>,
    pub midday: Option<f64>,
    pub pm_peak: Option<f64>,
    pub daily: Option<f64>,
}

impl PeriodMeans {
    pub fn get(&self, p: Period) -> Option<f64> {
        match p {
            Period::AmPeak => self.am_peak,
            Period::Midday => self.midday,
            Period::PmPeak => self.pm_peak,
            Period::Daily => self.daily,
            Period::Peak => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub am_peak: f64,
    pub midday: f64,
    pub pm_peak: f64,
    pub peak: f64,
    pub daily: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TravelerMetrics {
    pub passengers: Counts,
    pub single: Counts,
    pub shared: Counts,
    pub wait_min: PeriodMeans,
    pub travel_min: PeriodMeans,
    pub shared_wait_min: PeriodMeans,
    pub shared_travel_min: PeriodMeans,
    pub single_wait_min: PeriodMeans,
    pub single_travel_min: PeriodMeans,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShipperMetrics {
    pub parcels: Counts,
    pub wait_min: PeriodMeans,
    pub delivery_min: PeriodMeans,
    /// Parcels left to the conventional carrier.
    pub carrier_parcels: f64,
    pub carrier_driving_time_h: f64,
    pub carrier_vkt_km: f64,
    pub carrier_tours: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorMetrics {
    pub fleet_size: f64,
    pub demand_served: f64,
    pub passengers_served: f64,
    pub parcels_served: f64,
    pub distance_km: f64,
    pub utilization: Utilization,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub mod_vkt_km: f64,
    pub mod_vht_h: f64,
    pub carrier_vkt_km: f64,
    pub carrier_vht_h: f64,
    pub total_vkt_km: f64,
    pub total_vht_h: f64,
    pub tti_daily: f64,
    pub tti_peak: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StatusSample {
    pub t: f64,
    pub idle: f64,
    pub cruising: f64,
    pub serving: f64,
    pub parking: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RequestSample {
    pub t: f64,
    pub requested_passengers: f64,
    pub requested_parcels: f64,
    pub pending_passengers: f64,
    pub pending_parcels: f64,
    pub served_passengers: f64,
    pub served_parcels: f64,
}

/// Samples at every `SERIES_BIN_S` over the day plus one at the end of the log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub status: Vec<StatusSample>,
    pub requests: Vec<RequestSample>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub travelers: TravelerMetrics,
    pub shipper: ShipperMetrics,
    pub operator: OperatorMetrics,
    pub network: NetworkMetrics,
    pub series: Series,
}

pub struct MetricsInput<'a> {
    pub network: &'a Network,
    /// The field the day ran on.
    pub field: &'a TravelTimeField,
    pub background: Option<&'a BackgroundVolumes>,
    /// Only id, kind and request time are read.
    pub requests: &'a [Request],
    pub events: &'a [EventRecord],
    pub fleet_size: usize,
    pub periods: &'a Periods,
    /// Idle vehicles count as parking after this long.
    pub idle_threshold_s: f64,
    pub carrier: CarrierMetrics,
}

#[derive(Default)]
struct Timing {
    pickup: Option<f64>,
    dropoff: Option<f64>,
    failed: Option<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn period_means(samples: &[(f64, f64)], periods: &Periods) -> PeriodMeans {
    let pick = |p: Period| -> Option<f64> {
        let xs: Vec<f64> = samples
            .iter()
            .filter(|(t, _)| periods.contains(p, *t))
            .map(|&(_, x)| x)
            .collect();
        mean(&xs)
    };
    PeriodMeans {
        am_peak: pick(Period::AmPeak),
        midday: pick(Period::Midday),
        pm_peak: pick(Period::PmPeak),
        daily: pick(Period::Daily),
    }
}

struct Traversal {
    link: LinkIx,
    entry: f64,
    exit: f64,
}

/// Link traversals reconstructed from the log: a link is entered when the
/// vehicle's previous DEPART or LINK event happened.
fn traversals(network: &Network, events: &[EventRecord]) -> Vec<Traversal> {
    let mut last_move: HashMap<u32, f64> = HashMap::new();
    let mut out = Vec::new();
    for e in events {
        let Some(v) = e.vehicle else { continue };
        match e.kind {
            EventKind::Depart => {
                last_move.insert(v.0, e.t);
            }
            EventKind::Link => {
                let link = network
                    .link_ix(e.link.expect("LINK events carry a link id"))
                    .expect("logged link exists");
                let entry = last_move.insert(v.0, e.t).expect("LINK follows DEPART or LINK");
                out.push(Traversal { link, entry, exit: e.t });
            }
            _ => {}
        }
    }
    out
}

fn classify_request_timings(input: &MetricsInput<'_>) -> HashMap<u64, Timing> {
    let mut map: HashMap<u64, Timing> = HashMap::with_capacity(input.requests.len());
    for e in input.events {
        let Some(id) = e.request else { continue };
        let entry = map.entry(id).or_default();
        match e.kind {
            EventKind::Pickup => entry.pickup = Some(e.t),
            EventKind::Dropoff => entry.dropoff = Some(e.t),
            EventKind::Fail(_) => entry.failed = Some(e.t),
            _ => {}
        }
    }
    map
}

fn status_at_samples(input: &MetricsInput<'_>, samples: &[f64]) -> Vec<StatusSample> {
    let n = input.fleet_size;
    let mut busy = vec![false; n];
    let mut onboard = vec![0i32; n];
    let mut idle_at = vec![0.0f64; n];
    let mut out = Vec::with_capacity(samples.len());
    let mut k = 0;
    for &t in samples {
        while k < input.events.len() && input.events[k].t <= t {
            let e = &input.events[k];
            if let Some(v) = e.vehicle {
                let v = v.index();
                match e.kind {
                    EventKind::Assign => busy[v] = true,
                    EventKind::Idle => {
                        busy[v] = false;
                        idle_at[v] = e.t;
                    }
                    EventKind::Pickup => onboard[v] += 1,
                    EventKind::Dropoff => onboard[v] -= 1,
                    _ => {}
                }
            }
            k += 1;
        }
        let mut s = StatusSample {
            t,
            ..StatusSample::default()
        };
        for v in 0..n {
            if busy[v] {
                if onboard[v] > 0 {
                    s.serving += 1.0;
                } else {
                    s.cruising += 1.0;
                }
            } else if t - idle_at[v] >= input.idle_threshold_s {
                s.parking += 1.0;
            } else {
                s.idle += 1.0;
            }
        }
        out.push(s);
    }
    out
}

fn utilization(input: &MetricsInput<'_>) -> Utilization {
    let grid: Vec<f64> = (0..(DAY_S / UTILIZATION_SAMPLE_S) as usize)
        .map(|k| k as f64 * UTILIZATION_SAMPLE_S)
        .collect();
    let status = status_at_samples(input, &grid);
    let fleet = input.fleet_size.max(1) as f64;
    let frac = |p: Period| -> f64 {
        let xs: Vec<f64> = status
            .iter()
            .filter(|s| input.periods.contains(p, s.t))
            .map(|s| (s.cruising + s.serving) / fleet)
            .collect();
        mean(&xs).unwrap_or(0.0)
    };
    Utilization {
        am_peak: frac(Period::AmPeak),
        midday: frac(Period::Midday),
        pm_peak: frac(Period::PmPeak),
        peak: frac(Period::Peak),
        daily: frac(Period::Daily),
    }
}

fn series_grid(events: &[EventRecord]) -> Vec<f64> {
    let end = events.last().map_or(0.0, |e| e.t);
    let mut grid: Vec<f64> = (0..=(DAY_S / SERIES_BIN_S) as usize)
        .map(|k| k as f64 * SERIES_BIN_S)
        .collect();
    grid.push(end.max(DAY_S));
    grid
}

fn request_series(input: &MetricsInput<'_>, timings: &HashMap<u64, Timing>, grid: &[f64]) -> Vec<RequestSample> {
    grid.iter()
        .map(|&t| {
            let mut s = RequestSample {
                t,
                ..RequestSample::default()
            };
            for r in input.requests {
                if r.request_time > t {
                    continue;
                }
                let tm = timings.get(&r.id);
                let served = tm.and_then(|x| x.dropoff).is_some_and(|d| d <= t);
                let failed = tm.and_then(|x| x.failed).is_some_and(|d| d <= t);
                let (req, pend, done) = if r.is_passenger() {
                    (
                        &mut s.requested_passengers,
                        &mut s.pending_passengers,
                        &mut s.served_passengers,
                    )
                } else {
                    (&mut s.requested_parcels, &mut s.pending_parcels, &mut s.served_parcels)
                };
                *req += 1.0;
                if served {
                    *done += 1.0;
                } else if !failed {
                    *pend += 1.0;
                }
            }
            s
        })
        .collect()
}

fn tti(input: &MetricsInput<'_>, trav: &[Traversal]) -> (f64, f64) {
    let field = input.field;
    let network = input.network;
    let in_peak = |bin: usize| input.periods.in_peak(field.bin_start(bin));
    let (mut num, mut den, mut pnum, mut pden) = (0.0, 0.0, 0.0, 0.0);
    for tr in trav {
        let link = network.link(tr.link);
        let ratio = (tr.exit - tr.entry) / link.free_flow_time();
        num += link.length * ratio;
        den += link.length;
        if in_peak(field.bin_of(tr.entry)) {
            pnum += link.length * ratio;
            pden += link.length;
        }
    }
    if let Some(bg) = input.background {
        let per_bin = field.bin_width() as f64 / 3600.0;
        for (l, link) in network.links().iter().enumerate() {
            let ix = LinkIx(l as u32);
            for b in 0..field.bin_count() {
                let vol = bg.get(ix, b);
                if vol == 0.0 {
                    continue;
                }
                let w = link.length * vol * per_bin;
                let ratio = field.get(ix, b) / field.free_flow_time(ix);
                num += w * ratio;
                den += w;
                if in_peak(b) {
                    pnum += w * ratio;
                    pden += w;
                }
            }
        }
    }
    let daily = if den > 0.0 { num / den } else { 1.0 };
    let peak = if pden > 0.0 { pnum / pden } else { 1.0 };
    (daily, peak)
}

pub fn compute_metrics(input: &MetricsInput<'_>) -> MetricsReport {
    let timings = classify_request_timings(input);
    let periods = input.periods;

    let mut pax = Counts::default();
    let mut single = Counts::default();
    let mut shared = Counts::default();
    let mut parcels = Counts::default();
    let (mut wait, mut travel) = (Vec::new(), Vec::new());
    let (mut s_wait, mut s_travel) = (Vec::new(), Vec::new());
    let (mut i_wait, mut i_travel) = (Vec::new(), Vec::new());
    let (mut p_wait, mut p_delivery) = (Vec::new(), Vec::new());

    for r in input.requests {
        let tm = timings.get(&r.id);
        let done = tm.and_then(|x| Some((x.pickup?, x.dropoff?)));
        let failed = tm.is_some_and(|x| x.failed.is_some());
        let bump = |c: &mut Counts| {
            c.total += 1.0;
            if done.is_some() {
                c.served += 1.0;
            } else if failed {
                c.failed += 1.0;
            } else {
                c.pending += 1.0;
            }
        };
        match r.kind {
            RequestKind::Parcel => bump(&mut parcels),
            RequestKind::PassengerSingle => {
                bump(&mut pax);
                bump(&mut single);
            }
            RequestKind::PassengerShared => {
                bump(&mut pax);
                bump(&mut shared);
            }
        }
        let Some((pick, drop)) = done else { continue };
        let w = ((r.request_time), (pick - r.request_time) / 60.0);
        let tr = ((r.request_time), (drop - pick) / 60.0);
        match r.kind {
            RequestKind::Parcel => {
                p_wait.push(w);
                p_delivery.push(tr);
            }
            RequestKind::PassengerSingle => {
                wait.push(w);
                travel.push(tr);
                i_wait.push(w);
                i_travel.push(tr);
            }
            RequestKind::PassengerShared => {
                wait.push(w);
                travel.push(tr);
                s_wait.push(w);
                s_travel.push(tr);
            }
        }
    }

    let trav = traversals(input.network, input.events);
    let mod_vkt_km = trav.iter().map(|t| input.network.link(t.link).length).sum::<f64>() / 1000.0;
    let mod_vht_h = trav.iter().map(|t| t.exit - t.entry).sum::<f64>() / 3600.0;
    let (tti_daily, tti_peak) = tti(input, &trav);
    let carrier = input.carrier;

    let grid = series_grid(input.events);
    let series = Series {
        status: status_at_samples(input, &grid),
        requests: request_series(input, &timings, &grid),
    };

    MetricsReport {
        travelers: TravelerMetrics {
            passengers: pax,
            single,
            shared,
            wait_min: period_means(&wait, periods),
            travel_min: period_means(&travel, periods),
            shared_wait_min: period_means(&s_wait, periods),
            shared_travel_min: period_means(&s_travel, periods),
            single_wait_min: period_means(&i_wait, periods),
            single_travel_min: period_means(&i_travel, periods),
        },
        shipper: ShipperMetrics {
            parcels,
            wait_min: period_means(&p_wait, periods),
            delivery_min: period_means(&p_delivery, periods),
            carrier_parcels: carrier.parcels,
            carrier_driving_time_h: carrier.driving_time_h,
            carrier_vkt_km: carrier.vkt_km,
            carrier_tours: carrier.trip_count,
        },
        operator: OperatorMetrics {
            fleet_size: input.fleet_size as f64,
            demand_served: pax.served + parcels.served,
            passengers_served: pax.served,
            parcels_served: parcels.served,
            distance_km: mod_vkt_km,
            utilization: utilization(input),
        },
        network: NetworkMetrics {
            mod_vkt_km,
            mod_vht_h,
            carrier_vkt_km: carrier.vkt_km,
            carrier_vht_h: carrier.driving_time_h,
            total_vkt_km: mod_vkt_km + carrier.vkt_km,
            total_vht_h: mod_vht_h + carrier.driving_time_h,
            tti_daily,
            tti_peak,
        },
        series,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::VehicleId;
    use crate::network::NodeIx;

    fn ev(t: f64, v: Option<u32>, kind: EventKind, request: Option<u64>, link: Option<u32>) -> EventRecord {
        EventRecord {
            t,
            vehicle: v.map(VehicleId),
            kind,
            request,
            node: None,
            link,
        }
    }

    #[test]
    fn wait_and_travel_definitions() {
        let net = Network::grid(1, 2, 1000.0, 10.0, 1000.0);
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        let reqs = vec![Request::new(
            7,
            RequestKind::PassengerShared,
            NodeIx(0),
            NodeIx(1),
            100.0,
        )];
        let events = vec![
            ev(0.0, Some(0), EventKind::Idle, None, None),
            ev(100.0, Some(0), EventKind::Assign, Some(7), None),
            ev(400.0, Some(0), EventKind::Pickup, Some(7), None),
            ev(1000.0, Some(0), EventKind::Dropoff, Some(7), None),
            ev(1000.0, Some(0), EventKind::Idle, None, None),
        ];
        let periods = Periods::default();
        let m = compute_metrics(&MetricsInput {
            network: &net,
            field: &field,
            background: None,
            requests: &reqs,
            events: &events,
            fleet_size: 1,
            periods: &periods,
            idle_threshold_s: 60.0,
            carrier: CarrierMetrics::default(),
        });
        assert_eq!(m.travelers.wait_min.daily, Some(5.0));
        assert_eq!(m.travelers.travel_min.daily, Some(10.0));
        assert_eq!(m.travelers.wait_min.am_peak, None);
        assert_eq!(m.travelers.passengers.served, 1.0);
        assert_eq!(m.network.tti_daily, 1.0);
        assert_eq!(m.operator.distance_km, 0.0);
        let last = m.series.requests.last().unwrap();
        assert_eq!(last.served_passengers, 1.0);
    }

    #[test]
    fn tti_is_length_weighted() {
        // two equal-length links, one traversed at twice its free-flow time
        let net = Network::grid(1, 2, 1000.0, 10.0, 1000.0);
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        let events = vec![
            ev(0.0, Some(0), EventKind::Depart, None, None),
            ev(200.0, Some(0), EventKind::Link, None, Some(0)),
            ev(300.0, Some(0), EventKind::Link, None, Some(1)),
        ];
        let periods = Periods::default();
        let m = compute_metrics(&MetricsInput {
            network: &net,
            field: &field,
            background: None,
            requests: &[],
            events: &events,
            fleet_size: 1,
            periods: &periods,
            idle_threshold_s: 60.0,
            carrier: CarrierMetrics::default(),
        });
        assert!((m.network.tti_daily - 1.5).abs() < 1e-12);
        assert_eq!(m.network.mod_vkt_km, 2.0);
        assert!((m.network.mod_vht_h - 300.0 / 3600.0).abs() < 1e-12);
    }

    #[test]
    fn half_fleet_busy_is_half_utilized() {
        let net = Network::grid(1, 2, 1000.0, 10.0, 1000.0);
        let field = TravelTimeField::free_flow(&net, 900).unwrap();
        let mut events: Vec<EventRecord> = (0..10).map(|v| ev(0.0, Some(v), EventKind::Idle, None, None)).collect();
        for v in 0..5 {
            events.push(ev(0.0, Some(v), EventKind::Assign, Some(v as u64), None));
        }
        let periods = Periods::default();
        let m = compute_metrics(&MetricsInput {
            network: &net,
            field: &field,
            background: None,
            requests: &[],
            events: &events,
            fleet_size: 10,
            periods: &periods,
            idle_threshold_s: 60.0,
            carrier: CarrierMetrics::default(),
        });
        assert_eq!(m.operator.utilization.midday, 0.5);
        assert_eq!(m.operator.utilization.daily, 0.5);
    }
}
