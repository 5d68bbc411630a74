//! Passenger and parcel requests: synthetic generation and file ingestion.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispatch::VehicleId;
use crate::io::{parse_error, read_records, write_text};
use crate::network::{Network, NodeIx};
use crate::time::DAY_S;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestKind {
    PassengerSingle,
    PassengerShared,
    Parcel,
}

impl RequestKind {
    #[inline]
    pub fn is_passenger(self) -> bool {
        !matches!(self, RequestKind::Parcel)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::PassengerSingle => "PASSENGER_SINGLE",
            RequestKind::PassengerShared => "PASSENGER_SHARED",
            RequestKind::Parcel => "PARCEL",
        }
    }
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RequestKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "PASSENGER_SINGLE" => Ok(RequestKind::PassengerSingle),
            "PASSENGER_SHARED" => Ok(RequestKind::PassengerShared),
            "PARCEL" => Ok(RequestKind::Parcel),
            other => Err(format!("unknown request kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestState {
    Pending,
    Assigned,
    Onboard,
    Completed,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailReason {
    /// Passenger waited longer than the booking threshold.
    WaitExpired,
    /// No path between origin and destination.
    Unreachable,
}

impl FailReason {
    pub fn code(self) -> &'static str {
        match self {
            FailReason::WaitExpired => "WAIT_EXPIRED",
            FailReason::Unreachable => "UNREACHABLE",
        }
    }
}

/// One passenger ride or parcel delivery.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: u64,
    pub kind: RequestKind,
    pub origin: NodeIx,
    pub dest: NodeIx,
    /// Seconds of day.
    pub request_time: f64,
    pub state: RequestState,
    pub fail_reason: Option<FailReason>,
    pub assigned_vehicle: Option<VehicleId>,
    pub t_assigned: Option<f64>,
    pub t_pickup: Option<f64>,
    pub t_dropoff: Option<f64>,
    /// Direct shortest-path time, fixed when a passenger is assigned.
    pub direct_time: Option<f64>,
}

impl Request {
    pub fn new(id: u64, kind: RequestKind, origin: NodeIx, dest: NodeIx, request_time: f64) -> Self {
        Self {
            id,
            kind,
            origin,
            dest,
            request_time,
            state: RequestState::Pending,
            fail_reason: None,
            assigned_vehicle: None,
            t_assigned: None,
            t_pickup: None,
            t_dropoff: None,
            direct_time: None,
        }
    }

    #[inline]
    pub fn is_passenger(&self) -> bool {
        self.kind.is_passenger()
    }
}

/// Hourly request profile.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    weights: [f64; 24],
    pub total_count: usize,
    /// Probability that a passenger request asks for a shared ride.
    pub shared_fraction: f64,
}

#[derive(Deserialize)]
struct ProfileRow {
    hour: usize,
    weight: f64,
}

impl DemandProfile {
    pub fn new(weights: [f64; 24], total_count: usize, shared_fraction: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("profile weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("profile weights sum to {sum}, expected 1")));
        }
        if !(0.0..=1.0).contains(&shared_fraction) {
            return Err(Error::invalid(format!(
                "shared fraction {shared_fraction} outside [0, 1]"
            )));
        }
        Ok(Self {
            weights,
            total_count,
            shared_fraction,
        })
    }

    /// All weight on one hour.
    pub fn single_hour(hour: usize, total_count: usize) -> Self {
        let mut weights = [0.0; 24];
        weights[hour] = 1.0;
        Self {
            weights,
            total_count,
            shared_fraction: 0.0,
        }
    }

    /// Reads an `hour,weight` file; every hour 0..24 must appear once.
    pub fn load(path: &Path, total_count: usize, shared_fraction: f64) -> Result<Self> {
        let mut weights = [f64::NAN; 24];
        for (line, row) in read_records::<ProfileRow>(path)? {
            if row.hour >= 24 {
                return Err(parse_error(path, line, format!("hour {} outside 0..24", row.hour)));
            }
            if !weights[row.hour].is_nan() {
                return Err(parse_error(path, line, format!("hour {} listed twice", row.hour)));
            }
            weights[row.hour] = row.weight;
        }
        if let Some(h) = weights.iter().position(|w| w.is_nan()) {
            return Err(parse_error(path, 0, format!("hour {h} missing")));
        }
        Self::new(weights, total_count, shared_fraction).map_err(|e| parse_error(path, 0, e.to_string()))
    }

    pub fn weights(&self) -> &[f64; 24] {
        &self.weights
    }
}

/// Relative attraction of each node as an origin or destination.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct SpatialRow {
    node: u32,
    weight: f64,
}

impl SpatialWeights {
    pub fn uniform(network: &Network) -> Self {
        Self {
            weights: vec![1.0; network.node_count()],
        }
    }

    /// Reads `node,weight`; unlisted nodes get weight zero.
    pub fn load(path: &Path, network: &Network) -> Result<Self> {
        let mut weights = vec![0.0; network.node_count()];
        for (line, row) in read_records::<SpatialRow>(path)? {
            let node = network
                .node_ix(row.node)
                .ok_or_else(|| parse_error(path, line, format!("unknown node id {}", row.node)))?;
            if !(row.weight.is_finite() && row.weight >= 0.0) {
                return Err(parse_error(path, line, "weight must be non-negative"));
            }
            weights[node.index()] = row.weight;
        }
        if weights.iter().filter(|w| **w > 0.0).count() < 2 {
            return Err(parse_error(path, 0, "at least two nodes need positive weight"));
        }
        Ok(Self { weights })
    }
}

const PASSENGER_STREAM: u64 = 1;
const PARCEL_STREAM: u64 = 2;

/// Draws `profile.total_count` passenger requests, ids from `first_id` in time order.
pub fn generate_passenger_requests(
    profile: &DemandProfile,
    network: &Network,
    seed: u64,
    first_id: u64,
    spatial: Option<&SpatialWeights>,
) -> Result<Vec<Request>> {
    generate(profile, network, seed, first_id, spatial, true)
}

/// Draws `profile.total_count` parcel requests, ids from `first_id` in time order.
pub fn generate_parcel_requests(
    profile: &DemandProfile,
    network: &Network,
    seed: u64,
    first_id: u64,
    spatial: Option<&SpatialWeights>,
) -> Result<Vec<Request>> {
    generate(profile, network, seed, first_id, spatial, false)
}

fn generate(
    profile: &DemandProfile,
    network: &Network,
    seed: u64,
    first_id: u64,
    spatial: Option<&SpatialWeights>,
    passengers: bool,
) -> Result<Vec<Request>> {
    if network.node_count() < 2 {
        return Err(Error::invalid("demand generation needs at least two nodes"));
    }
    if profile.total_count == 0 {
        return Ok(Vec::new());
    }
    let uniform;
    let spatial = match spatial {
        Some(s) => s,
        None => {
            uniform = SpatialWeights::uniform(network);
            &uniform
        }
    };
    if spatial.weights.len() != network.node_count() {
        return Err(Error::invalid("spatial weights do not match the network"));
    }
    let hours = WeightedIndex::new(profile.weights).map_err(|e| Error::invalid(e.to_string()))?;
    let nodes = WeightedIndex::new(&spatial.weights).map_err(|e| Error::invalid(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(if passengers { PASSENGER_STREAM } else { PARCEL_STREAM });

    let mut drawn = Vec::with_capacity(profile.total_count);
    for _ in 0..profile.total_count {
        let hour = hours.sample(&mut rng) as u32;
        let second = rng.gen_range(0..3600u32);
        let origin = nodes.sample(&mut rng);
        let dest = loop {
            let d = nodes.sample(&mut rng);
            if d != origin {
                break d;
            }
        };
        let kind = if !passengers {
            RequestKind::Parcel
        } else if rng.gen_bool(profile.shared_fraction) {
            RequestKind::PassengerShared
        } else {
            RequestKind::PassengerSingle
        };
        let t = (hour * 3600 + second) as f64;
        drawn.push((t, kind, NodeIx(origin as u32), NodeIx(dest as u32)));
    }
    // stable: equal times keep draw order
    drawn.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(drawn
        .into_iter()
        .enumerate()
        .map(|(i, (t, kind, o, d))| Request::new(first_id + i as u64, kind, o, d, t))
        .collect())
}

#[derive(Deserialize)]
struct RequestRow {
    id: u64,
    kind: String,
    origin: u32,
    dest: u32,
    request_time_s: f64,
}

/// Reads an `id,kind,origin,dest,request_time_s` file, sorted by request time.
pub fn load_requests(path: &Path, network: &Network) -> Result<Vec<Request>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, row) in read_records::<RequestRow>(path)? {
        let kind = row
            .kind
            .parse::<RequestKind>()
            .map_err(|msg| parse_error(path, line, msg))?;
        let node = |id: u32| {
            network
                .node_ix(id)
                .ok_or_else(|| parse_error(path, line, format!("unknown node id {id}")))
        };
        let origin = node(row.origin)?;
        let dest = node(row.dest)?;
        if !(row.request_time_s >= 0.0 && row.request_time_s < DAY_S) {
            return Err(parse_error(
                path,
                line,
                format!("request time {} outside [0, 86400)", row.request_time_s),
            ));
        }
        if !seen.insert(row.id) {
            return Err(parse_error(path, line, format!("duplicate request id {}", row.id)));
        }
        out.push(Request::new(row.id, kind, origin, dest, row.request_time_s));
    }
    sort_requests(&mut out);
    Ok(out)
}

/// Orders requests by `(request_time, id)`.
pub fn sort_requests(requests: &mut [Request]) {
    requests.sort_by(|a, b| a.request_time.total_cmp(&b.request_time).then(a.id.cmp(&b.id)));
}

pub fn requests_to_csv(requests: &[Request], network: &Network) -> String {
    let mut out = String::from("id,kind,origin,dest,request_time_s\n");
    for r in requests {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.id,
            r.kind,
            network.node(r.origin).id,
            network.node(r.dest).id,
            r.request_time
        );
    }
    out
}

pub fn write_requests(path: &Path, requests: &[Request], network: &Network) -> Result<()> {
    write_text(path, &requests_to_csv(requests, network))
}
