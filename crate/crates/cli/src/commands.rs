use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use cargohitch::demand::{
    generate_parcel_requests, generate_passenger_requests, load_requests, requests_to_csv, sort_requests,
    DemandProfile, Request, RequestKind, SpatialWeights,
};
use cargohitch::dispatch::Strategy;
use cargohitch::engine::{decisions_to_csv, events_to_csv, outcomes_to_csv, run_scenario, Scenario, ScenarioResult};
use cargohitch::freight::{load_depots, tours_to_csv, Depot};
use cargohitch::metrics::{delta_table, series_requests_csv, series_status_csv, table_csv, MetricsReport};
use cargohitch::network::{BackgroundVolumes, Network, TravelTimeField};

use crate::config::{DemandSource, ScenarioConfig};

/// Everything a scenario reads from disk.
pub struct Inputs {
    pub network: Network,
    /// Passengers and parcels, sorted by `(request_time, id)`.
    pub requests: Vec<Request>,
    pub depots: Vec<Depot>,
    pub background: Option<BackgroundVolumes>,
}

impl Inputs {
    pub fn scenario(&self) -> Scenario<'_> {
        Scenario {
            network: &self.network,
            requests: &self.requests,
            depots: &self.depots,
            background: self.background.as_ref(),
        }
    }

    pub fn count(&self, passengers: bool) -> usize {
        self.requests.iter().filter(|r| r.is_passenger() == passengers).count()
    }
}

pub fn load_inputs(cfg: &ScenarioConfig) -> Result<Inputs> {
    let network = Network::load(&cfg.network_nodes, &cfg.network_links).context("loading the network")?;
    let spatial = cfg
        .spatial_weights
        .as_deref()
        .map(|p| SpatialWeights::load(p, &network))
        .transpose()?;

    let mut requests = match &cfg.passengers {
        DemandSource::Profile(p) => {
            let profile = DemandProfile::load(p, cfg.passenger_total, cfg.shared_fraction)?;
            generate_passenger_requests(&profile, &network, cfg.demand_seed, 1, spatial.as_ref())?
        }
        DemandSource::Requests(p) => load_requests(p, &network)?,
        DemandSource::None => Vec::new(),
    };
    let next_id = requests.iter().map(|r| r.id).max().map_or(1, |m| m + 1);
    let parcels = match &cfg.parcels {
        DemandSource::Profile(p) => {
            let profile = DemandProfile::load(p, cfg.parcel_total, 0.0)?;
            generate_parcel_requests(&profile, &network, cfg.demand_seed, next_id, spatial.as_ref())?
        }
        DemandSource::Requests(p) => load_requests(p, &network)?,
        DemandSource::None => Vec::new(),
    };
    requests.extend(parcels);
    sort_requests(&mut requests);
    let mut ids: Vec<u64> = requests.iter().map(|r| r.id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        bail!("request id {} appears in both request sources", w[0]);
    }

    let depots = match &cfg.depots {
        Some(p) => load_depots(p, &network)?,
        None => Vec::new(),
    };
    if depots.is_empty() && requests.iter().any(|r| r.kind == RequestKind::Parcel) {
        bail!("parcel requests need at least one depot");
    }
    let background = match &cfg.background_volumes {
        Some(p) => {
            let shape = TravelTimeField::free_flow(&network, cfg.run.bin_width_s)?;
            Some(BackgroundVolumes::load(p, &network, &shape)?)
        }
        None => None,
    };
    Ok(Inputs {
        network,
        requests,
        depots,
        background,
    })
}

/// Command-line overrides shared by `simulate` and `compare`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seeds: Option<Vec<u64>>,
    pub iterations: Option<u32>,
    pub out: Option<PathBuf>,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Output directory under construction. Files go to a staging directory
/// that replaces the target only once everything has been written.
pub struct OutputDir {
    target: PathBuf,
    staging: PathBuf,
    entries: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.csv";

impl OutputDir {
    pub fn create(target: &Path, force: bool) -> Result<Self> {
        if target.exists() {
            let empty = target.is_dir() && fs::read_dir(target)?.next().is_none();
            if !empty {
                if !force {
                    bail!("{} already exists; pass --force to replace it", target.display());
                }
                if !target.join(MANIFEST).is_file() {
                    bail!(
                        "{} exists but holds no {MANIFEST}; refusing to delete it",
                        target.display()
                    );
                }
            }
        }
        let mut name = target
            .file_name()
            .context("output path has no final component")?
            .to_os_string();
        name.push(".partial");
        let staging = target.with_file_name(name);
        if staging.exists() {
            fs::remove_dir_all(&staging).with_context(|| format!("clearing {}", staging.display()))?;
        }
        fs::create_dir_all(&staging).with_context(|| format!("creating {}", staging.display()))?;
        Ok(Self {
            target: target.to_owned(),
            staging,
            entries: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, contents: &[u8]) -> Result<()> {
        let path = self.staging.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.entries.push(ManifestEntry {
            path: rel.to_owned(),
            sha256: hex::encode(Sha256::digest(contents)),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    /// Writes the manifest and moves the staging directory into place.
    pub fn finish(mut self) -> Result<Vec<ManifestEntry>> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut manifest = String::from("path,sha256,bytes\n");
        for e in &self.entries {
            let _ = writeln!(manifest, "{},{},{}", e.path, e.sha256, e.bytes);
        }
        fs::write(self.staging.join(MANIFEST), manifest)?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target).with_context(|| format!("removing {}", self.target.display()))?;
        }
        fs::rename(&self.staging, &self.target)
            .with_context(|| format!("moving results into {}", self.target.display()))?;
        Ok(self.entries)
    }
}

fn json(report: &MetricsReport) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn emit_metrics(out: &mut OutputDir, dir: &str, report: &MetricsReport) -> Result<()> {
    out.write(&format!("{dir}/metrics.json"), &json(report))?;
    for (i, table) in report.tables().iter().enumerate() {
        out.write(&format!("{dir}/table{}.csv", i + 1), table_csv(table).as_bytes())?;
    }
    out.write(&format!("{dir}/fig6_status.csv"), series_status_csv(report).as_bytes())?;
    out.write(
        &format!("{dir}/fig7_requests.csv"),
        series_requests_csv(report).as_bytes(),
    )?;
    Ok(())
}

/// Per-seed artifacts plus the averaged report under `prefix`.
pub fn emit_reports(out: &mut OutputDir, prefix: &str, result: &ScenarioResult, network: &Network) -> Result<()> {
    let join = |name: &str| {
        if prefix.is_empty() {
            name.to_owned()
        } else {
            format!("{prefix}/{name}")
        }
    };
    for rep in &result.per_seed {
        let dir = join(&format!("seed_{}", rep.seed));
        out.write(&format!("{dir}/events.csv"), events_to_csv(&rep.day.events).as_bytes())?;
        out.write(
            &format!("{dir}/decisions.csv"),
            decisions_to_csv(&rep.day.decisions).as_bytes(),
        )?;
        out.write(
            &format!("{dir}/requests.csv"),
            outcomes_to_csv(&rep.day.requests, network).as_bytes(),
        )?;
        out.write(&format!("{dir}/field.csv"), rep.field.to_csv(network).as_bytes())?;
        out.write(&format!("{dir}/tours.csv"), tours_to_csv(&rep.tours).as_bytes())?;
        emit_metrics(out, &dir, &rep.metrics)?;
    }
    if !result.per_seed.is_empty() {
        emit_metrics(out, &join("average"), &result.average)?;
    }
    Ok(())
}

fn output_target(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<PathBuf> {
    opts.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .context("no output directory: pass --out or set output_dir")
}

fn prepared(config: &Path, opts: &RunOptions) -> Result<(ScenarioConfig, Inputs)> {
    let mut cfg = ScenarioConfig::load(config)?;
    if let Some(seeds) = &opts.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(n) = opts.iterations {
        cfg.run.iterations = n;
    }
    cfg.validate()?;
    let inputs = load_inputs(&cfg)?;
    Ok((cfg, inputs))
}

fn run_one(cfg: &ScenarioConfig, inputs: &Inputs) -> Result<ScenarioResult> {
    let started = Instant::now();
    let result = run_scenario(&cfg.run, &inputs.scenario(), &cfg.seeds)?;
    log::info!(
        "{}: {} seed(s) in {:.1} s",
        cfg.run.strategy.strategy,
        cfg.seeds.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(result)
}

/// Runs the configured scenario and writes its reports. Returns the output directory.
pub fn simulate(config: &Path, opts: &RunOptions) -> Result<PathBuf> {
    let (cfg, inputs) = prepared(config, opts)?;
    let target = output_target(&cfg, opts)?;
    let mut out = OutputDir::create(&target, opts.force)?;
    let result = run_one(&cfg, &inputs)?;
    emit_reports(&mut out, "", &result, &inputs.network)?;
    out.finish()?;
    Ok(target)
}

/// Runs the scenario once per strategy and writes side-by-side delta tables.
pub fn compare(config: &Path, strategies: &[Strategy], opts: &RunOptions) -> Result<PathBuf> {
    if strategies.is_empty() {
        bail!("no strategies to compare");
    }
    let (mut cfg, inputs) = prepared(config, opts)?;
    let target = output_target(&cfg, opts)?;
    let mut out = OutputDir::create(&target, opts.force)?;
    let mut averages = Vec::new();
    for &s in strategies {
        cfg.run.strategy.strategy = s;
        let result = run_one(&cfg, &inputs)?;
        emit_reports(&mut out, s.as_str(), &result, &inputs.network)?;
        averages.push((s.as_str().to_owned(), result.average));
    }
    for t in 0..4 {
        let columns: Vec<_> = averages
            .iter()
            .map(|(name, report)| (name.clone(), report.tables()[t].clone()))
            .collect();
        out.write(&format!("compare/table{}.csv", t + 1), delta_table(&columns).as_bytes())?;
    }
    out.finish()?;
    Ok(target)
}

/// Writes the scenario's requests (generated or loaded) as one request file.
pub fn gen_demand(config: &Path, out: &Path, force: bool) -> Result<usize> {
    let cfg = ScenarioConfig::load(config)?;
    let inputs = load_inputs(&cfg)?;
    if out.exists() && !force {
        bail!("{} already exists; pass --force to overwrite it", out.display());
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, requests_to_csv(&inputs.requests, &inputs.network))
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(inputs.requests.len())
}

/// Loads and checks every input without simulating.
pub fn validate(config: &Path) -> Result<String> {
    let cfg = ScenarioConfig::load(config)?;
    let inputs = load_inputs(&cfg)?;
    Ok(format!(
        "ok: {} nodes, {} links, {} passenger and {} parcel requests, {} depot(s), strategy {}, fleet {}",
        inputs.network.node_count(),
        inputs.network.link_count(),
        inputs.count(true),
        inputs.count(false),
        inputs.depots.len(),
        cfg.run.strategy.strategy,
        cfg.run.fleet_size
    ))
}
