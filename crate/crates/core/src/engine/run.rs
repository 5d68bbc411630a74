use std::sync::Arc;

use rayon::prelude::*;

use super::day::{run_day, DayRun};
use crate::demand::{Request, RequestKind, RequestState};
use crate::dispatch::StrategyConfig;
use crate::freight::{build_tours, carrier_metrics, offload, Depot, Tours};
use crate::metrics::{average_reports, compute_metrics, MetricsInput, MetricsReport};
use crate::network::{
    within_day_update, BackgroundVolumes, FreeFlowMatrix, LinkVolumes, Network, Router, TravelTimeField,
};
use crate::time::{Periods, Window};
use crate::{Error, Result};

/// Everything that shapes a replication besides its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub strategy: StrategyConfig,
    pub fleet_size: usize,
    pub seat_capacity: u32,
    /// Learning passes at most.
    pub iterations: u32,
    /// Stop learning once the mean relative field change drops below this.
    pub tolerance: f64,
    pub bin_width_s: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            strategy: StrategyConfig::default(),
            fleet_size: 100,
            seat_capacity: 4,
            iterations: 3,
            tolerance: 0.05,
            bin_width_s: 900,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        if self.fleet_size == 0 {
            return Err(Error::invalid("fleet_size must be at least 1"));
        }
        if self.seat_capacity == 0 {
            return Err(Error::invalid("seat_capacity must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.bin_width_s == 0 || 86_400 % self.bin_width_s != 0 {
            return Err(Error::invalid(format!(
                "bin_width_s {} does not divide the day",
                self.bin_width_s
            )));
        }
        if self.strategy.pm_peak.start < self.strategy.am_peak.end {
            return Err(Error::invalid("the AM peak must precede the PM peak"));
        }
        Ok(())
    }

    /// Reporting periods; midday spans the gap between the peaks.
    pub fn periods(&self) -> Periods {
        Periods {
            am_peak: self.strategy.am_peak,
            midday: Window::new(self.strategy.am_peak.end, self.strategy.pm_peak.start),
            pm_peak: self.strategy.pm_peak,
        }
    }
}

/// Inputs shared by all replications of a scenario.
#[derive(Clone, Copy)]
pub struct Scenario<'a> {
    pub network: &'a Network,
    /// Sorted by `(request_time, id)`.
    pub requests: &'a [Request],
    pub depots: &'a [Depot],
    pub background: Option<&'a BackgroundVolumes>,
}

#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub seed: u64,
    /// The final learning pass.
    pub day: DayRun,
    /// The field the final pass ran on.
    pub field: TravelTimeField,
    /// Mean relative field change after each update.
    pub field_changes: Vec<f64>,
    pub passes: u32,
    /// Carrier tours for the parcels the fleet did not deliver.
    pub tours: Tours,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    /// In the order the seeds were given.
    pub per_seed: Vec<ReplicationResult>,
    pub average: MetricsReport,
}

fn check_sorted(requests: &[Request]) -> Result<()> {
    let sorted = requests
        .windows(2)
        .all(|w| (w[0].request_time, w[0].id) < (w[1].request_time, w[1].id));
    if !sorted {
        return Err(Error::invalid("requests must be sorted by time with unique ids"));
    }
    if requests.iter().any(|r| r.state != RequestState::Pending) {
        return Err(Error::invalid("requests must start pending"));
    }
    Ok(())
}

fn replicate(
    cfg: &RunConfig,
    scenario: &Scenario<'_>,
    seed: u64,
    free_flow: &Arc<FreeFlowMatrix>,
) -> Result<ReplicationResult> {
    let network = scenario.network;
    let mut field = TravelTimeField::free_flow(network, cfg.bin_width_s)?;
    if let Some(bg) = scenario.background {
        if bg.bin_count() != field.bin_count() {
            return Err(Error::invalid("background volumes use a different bin width"));
        }
        // the first pass already sees the known background traffic
        let flows = LinkVolumes::new(&field).flows_vph(Some(bg));
        field = within_day_update(&field, network, &flows, 1);
    }
    let mut changes = Vec::new();
    let mut pass = 1;
    let day = loop {
        let router = Router::with_free_flow(network, &field, Arc::clone(free_flow));
        let day = run_day(
            &router,
            scenario.requests,
            &cfg.strategy,
            cfg.fleet_size,
            cfg.seat_capacity,
            seed,
        );
        if pass == cfg.iterations {
            break day;
        }
        let flows = day.volumes.flows_vph(scenario.background);
        let next = within_day_update(&field, network, &flows, pass);
        let change = field.mean_relative_change(&next);
        log::debug!("seed {seed}: pass {pass} field change {change:.4}");
        changes.push(change);
        if change < cfg.tolerance {
            break day;
        }
        field = next;
        pass += 1;
    };

    let router = Router::with_free_flow(network, &field, Arc::clone(free_flow));
    let parcels: Vec<&Request> = scenario
        .requests
        .iter()
        .filter(|r| r.kind == RequestKind::Parcel)
        .collect();
    let delivered: Vec<u64> = day
        .requests
        .iter()
        .filter(|r| r.kind == RequestKind::Parcel && r.state == RequestState::Completed)
        .map(|r| r.id)
        .collect();
    let tours = build_tours(&offload(&parcels, &delivered), scenario.depots, &router);
    let periods = cfg.periods();
    let metrics = compute_metrics(&MetricsInput {
        network,
        field: &field,
        background: scenario.background,
        requests: scenario.requests,
        events: &day.events,
        fleet_size: cfg.fleet_size,
        periods: &periods,
        idle_threshold_s: cfg.strategy.idle_eligibility_s,
        carrier: carrier_metrics(&tours),
    });
    Ok(ReplicationResult {
        seed,
        day,
        field,
        field_changes: changes,
        passes: pass,
        tours,
        metrics,
    })
}

/// One replication with within-day learning: day passes are repeated, each
/// on the field updated from the previous pass's volumes, until the field
/// settles or the pass limit is hit.
pub fn run_with_learning(cfg: &RunConfig, scenario: &Scenario<'_>, seed: u64) -> Result<ReplicationResult> {
    cfg.validate()?;
    check_sorted(scenario.requests)?;
    let free_flow = Arc::new(FreeFlowMatrix::new(scenario.network));
    replicate(cfg, scenario, seed, &free_flow)
}

/// Replications for every seed, run in parallel, plus their mean report.
pub fn run_scenario(cfg: &RunConfig, scenario: &Scenario<'_>, seeds: &[u64]) -> Result<ScenarioResult> {
    cfg.validate()?;
    check_sorted(scenario.requests)?;
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    let mut unique = seeds.to_vec();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() != seeds.len() {
        return Err(Error::invalid("seeds must be distinct"));
    }
    let free_flow = Arc::new(FreeFlowMatrix::new(scenario.network));
    let per_seed = seeds
        .par_iter()
        .map(|&seed| replicate(cfg, scenario, seed, &free_flow))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<(u64, &MetricsReport)> = per_seed.iter().map(|r| (r.seed, &r.metrics)).collect();
    let average = average_reports(&reports);
    Ok(ScenarioResult { per_seed, average })
}
