use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{LinkIx, Network};
use crate::io::{parse_error, read_records, write_text};
use crate::{Error, Result};

/// Piecewise-constant link travel times, one value per link and time bin.
///
/// Times past the end of the day are read from the last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeField {
    bin_width: u32,
    bins: usize,
    links: usize,
    times: Vec<f64>,
    free_flow: Vec<f64>,
}

impl TravelTimeField {
    /// Field with every entry at the link's free-flow time.
    pub fn free_flow(network: &Network, bin_width_s: u32) -> Result<Self> {
        if bin_width_s == 0 || 86_400 % bin_width_s != 0 {
            return Err(Error::invalid(format!(
                "bin width {bin_width_s} s does not divide the day"
            )));
        }
        let bins = (86_400 / bin_width_s) as usize;
        let free_flow: Vec<f64> = network.links().iter().map(|l| l.free_flow_time()).collect();
        let mut times = Vec::with_capacity(free_flow.len() * bins);
        for &fft in &free_flow {
            times.extend(std::iter::repeat_n(fft, bins));
        }
        Ok(Self {
            bin_width: bin_width_s,
            bins,
            links: free_flow.len(),
            times,
            free_flow,
        })
    }

    #[inline]
    pub fn bin_width(&self) -> u32 {
        self.bin_width
    }

    #[inline]
    pub fn bin_count(&self) -> usize {
        self.bins
    }

    pub fn link_count(&self) -> usize {
        self.links
    }

    #[inline]
    pub fn bin_of(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        ((t / self.bin_width as f64) as usize).min(self.bins - 1)
    }

    /// Start of a bin in seconds of day.
    pub fn bin_start(&self, bin: usize) -> f64 {
        (bin as u64 * self.bin_width as u64) as f64
    }

    /// Travel time of `link` for a vehicle entering it at `t`.
    #[inline]
    pub fn time(&self, link: LinkIx, t: f64) -> f64 {
        self.times[link.index() * self.bins + self.bin_of(t)]
    }

    #[inline]
    pub fn get(&self, link: LinkIx, bin: usize) -> f64 {
        self.times[link.index() * self.bins + bin]
    }

    #[inline]
    pub fn free_flow_time(&self, link: LinkIx) -> f64 {
        self.free_flow[link.index()]
    }

    /// Overwrites one entry, clamped below at the free-flow time.
    pub fn set(&mut self, link: LinkIx, bin: usize, seconds: f64) {
        let fft = self.free_flow[link.index()];
        self.times[link.index() * self.bins + bin] = seconds.max(fft);
    }

    /// Mean over link-bins of `|other - self| / self`.
    pub fn mean_relative_change(&self, other: &TravelTimeField) -> f64 {
        assert_eq!(self.times.len(), other.times.len());
        if self.times.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .times
            .iter()
            .zip(&other.times)
            .map(|(a, b)| (b - a).abs() / a)
            .sum();
        total / self.times.len() as f64
    }

    /// `link_id,bin,seconds` dump.
    pub fn to_csv(&self, network: &Network) -> String {
        let mut out = String::from("link_id,bin,seconds\n");
        for (l, link) in network.links().iter().enumerate() {
            for b in 0..self.bins {
                let _ = writeln!(out, "{},{},{}", link.id, b, self.times[l * self.bins + b]);
            }
        }
        out
    }

    pub fn write_csv(&self, network: &Network, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv(network))
    }
}

/// Traversal counts per link and entry bin, accumulated during one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkVolumes {
    bin_width: u32,
    bins: usize,
    counts: Vec<u32>,
}

impl LinkVolumes {
    pub fn new(field: &TravelTimeField) -> Self {
        Self {
            bin_width: field.bin_width,
            bins: field.bins,
            counts: vec![0; field.links * field.bins],
        }
    }

    #[inline]
    pub fn record(&mut self, link: LinkIx, bin: usize) {
        self.counts[link.index() * self.bins + bin] += 1;
    }

    pub fn count(&self, link: LinkIx, bin: usize) -> u32 {
        self.counts[link.index() * self.bins + bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Hourly flow rates per link-bin, optionally adding background traffic.
    pub fn flows_vph(&self, background: Option<&BackgroundVolumes>) -> Vec<f64> {
        let scale = 3600.0 / self.bin_width as f64;
        let mut flows: Vec<f64> = self.counts.iter().map(|&c| c as f64 * scale).collect();
        if let Some(bg) = background {
            assert_eq!(bg.vph.len(), flows.len(), "background volumes shaped for another field");
            for (f, b) in flows.iter_mut().zip(&bg.vph) {
                *f += b;
            }
        }
        flows
    }
}

/// Static non-fleet traffic, in vehicles per hour per link-bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundVolumes {
    bins: usize,
    vph: Vec<f64>,
}

#[derive(Deserialize)]
struct BackgroundRow {
    link_id: u32,
    bin: usize,
    vph: f64,
}

impl BackgroundVolumes {
    pub fn zero(field: &TravelTimeField) -> Self {
        Self {
            bins: field.bins,
            vph: vec![0.0; field.links * field.bins],
        }
    }

    /// Reads `link_id,bin,vph`; link-bins not listed carry no background flow.
    pub fn load(path: &Path, network: &Network, field: &TravelTimeField) -> Result<Self> {
        let mut out = Self::zero(field);
        for (line, row) in read_records::<BackgroundRow>(path)? {
            let link = network
                .link_ix(row.link_id)
                .ok_or_else(|| parse_error(path, line, format!("unknown link id {}", row.link_id)))?;
            if row.bin >= field.bins {
                return Err(parse_error(path, line, format!("bin {} outside the day", row.bin)));
            }
            if !(row.vph.is_finite() && row.vph >= 0.0) {
                return Err(parse_error(path, line, "volume must be non-negative"));
            }
            out.vph[link.index() * out.bins + row.bin] = row.vph;
        }
        Ok(out)
    }

    pub fn set(&mut self, link: LinkIx, bin: usize, vph: f64) {
        self.vph[link.index() * self.bins + bin] = vph;
    }

    #[inline]
    pub fn get(&self, link: LinkIx, bin: usize) -> f64 {
        self.vph[link.index() * self.bins + bin]
    }

    pub fn bin_count(&self) -> usize {
        self.bins
    }

    pub fn to_csv(&self, network: &Network) -> String {
        let mut out = String::from("link_id,bin,vph\n");
        for (l, link) in network.links().iter().enumerate() {
            for b in 0..self.bins {
                let v = self.vph[l * self.bins + b];
                if v != 0.0 {
                    let _ = writeln!(out, "{},{},{}", link.id, b, v);
                }
            }
        }
        out
    }
}

/// Method-of-successive-averages update of the field from observed flows.
///
/// `flows_vph` is laid out link-major like [`LinkVolumes::flows_vph`].
/// With `iteration == 1` the field is replaced outright.
pub fn within_day_update(
    field: &TravelTimeField,
    network: &Network,
    flows_vph: &[f64],
    iteration: u32,
) -> TravelTimeField {
    assert!(iteration >= 1, "iterations are counted from 1");
    assert_eq!(flows_vph.len(), field.times.len());
    let weight = 1.0 / iteration as f64;
    let mut next = field.clone();
    for (l, link) in network.links().iter().enumerate() {
        let fft = field.free_flow[l];
        for b in 0..field.bins {
            let i = l * field.bins + b;
            let fresh = link.travel_time(flows_vph[i]);
            let blended = if iteration == 1 {
                fresh
            } else {
                (1.0 - weight) * field.times[i] + weight * fresh
            };
            next.times[i] = blended.max(fft);
        }
    }
    next
}
