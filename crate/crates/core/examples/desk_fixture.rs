//! Regenerates the desk-scale scenario under `fixtures/desk/`.
//!
//! ```text
//! cargo run -p cargohitch --example desk_fixture -- fixtures/desk
//! ```
//!
//! Everything is a closed-form function of the grid position and the hour,
//! so the output is identical on every run.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use cargohitch::network::Network;

const SIDE: u32 = 10;
const SPACING_M: f64 = 700.0;
const SPEED_MPS: f64 = 8.33;
const CAPACITY_VPH: f64 = 1000.0;
const BIN_S: u32 = 900;

// Relative hourly trip rates: morning and evening peaks, a softer midday.
const PASSENGER_HOURLY: [f64; 24] = [
    0.6, 0.3, 0.2, 0.2, 0.3, 0.8, 2.4, 6.5, 8.0, 6.5, 4.2, 3.8, 4.0, 4.0, 3.8, 4.2, 5.8, 7.8, 7.6, 5.2, 3.6, 2.6, 1.8,
    1.0,
];
// Same-day parcels are booked during business hours.
const PARCEL_HOURLY: [f64; 24] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 6.0, 8.0, 8.0, 8.0, 8.0, 8.0, 8.0, 8.0, 7.0, 6.0, 5.0, 3.0, 1.0, 0.0, 0.0,
    0.0,
];

/// Background flow as a fraction of capacity at hour `h`.
fn background_share(h: f64) -> f64 {
    let bump = |centre: f64, width: f64| (-((h - centre) / width).powi(2)).exp();
    0.25 + 0.35 * bump(13.0, 4.0) + 1.30 * bump(8.5, 1.3) + 1.20 * bump(18.0, 1.6)
}

fn normalised(raw: &[f64; 24]) -> String {
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // Push the rounding residue into the largest hour so the file sums to 1.
    let residue = 1.0 - weights.iter().sum::<f64>();
    let max = (0..24).max_by(|&a, &b| weights[a].total_cmp(&weights[b])).unwrap();
    weights[max] += residue;
    let mut out = String::from("hour,weight\n");
    for (h, w) in weights.iter().enumerate() {
        let _ = writeln!(out, "{h},{w}");
    }
    out
}

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/desk".into()));
    fs::create_dir_all(&dir)?;
    let net = Network::grid(SIDE, SIDE, SPACING_M, SPEED_MPS, CAPACITY_VPH);

    let mut nodes = String::from("id,x,y\n");
    for n in net.nodes() {
        let _ = writeln!(nodes, "{},{},{}", n.id, n.x, n.y);
    }
    fs::write(dir.join("nodes.csv"), nodes)?;

    let mut links = String::from("id,from,to,length_m,ffs_mps,cap_vph,alpha,beta\n");
    for l in net.links() {
        let _ = writeln!(
            links,
            "{},{},{},{},{},{},{},{}",
            l.id,
            net.node(l.from).id,
            net.node(l.to).id,
            l.length,
            l.free_flow_speed,
            l.capacity,
            l.vdf_alpha,
            l.vdf_beta
        );
    }
    fs::write(dir.join("links.csv"), links)?;

    // Links near the centre carry more through traffic.
    let half = (SIDE - 1) as f64 * SPACING_M / 2.0;
    let mut background = String::from("link_id,bin,vph\n");
    for l in net.links() {
        let (a, b) = (net.node(l.from), net.node(l.to));
        let (mx, my) = ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        let off_centre = ((mx - half).abs().max((my - half).abs()) / half).min(1.0);
        let weight = 1.15 - 0.45 * off_centre;
        for bin in 0..(86_400 / BIN_S) {
            let hour = (bin * BIN_S) as f64 / 3600.0 + BIN_S as f64 / 7200.0;
            let vph = (CAPACITY_VPH * background_share(hour) * weight).round();
            let _ = writeln!(background, "{},{},{}", l.id, bin, vph);
        }
    }
    fs::write(dir.join("background.csv"), background)?;

    fs::write(dir.join("passenger_profile.csv"), normalised(&PASSENGER_HOURLY))?;
    fs::write(dir.join("parcel_profile.csv"), normalised(&PARCEL_HOURLY))?;
    fs::write(dir.join("depots.csv"), "id,node,vehicles,capacity\n1,4,4,\n2,95,4,\n")?;
    fs::write(
        dir.join("desk.conf"),
        "\
# Desk-scale scenario: 10x10 grid, 100 vehicles, 5000 passengers, 600 parcels.
network_nodes = nodes.csv
network_links = links.csv
background_volumes = background.csv
passenger_profile = passenger_profile.csv
parcel_profile = parcel_profile.csv
depots = depots.csv

strategy = BASE
fleet_size = 100
seat_capacity = 4
passenger_total = 5000
parcel_total = 600
shared_fraction = 0.27
demand_seed = 1
seeds = 1,2,3
iterations = 3
",
    )?;
    println!("desk fixture written to {}", dir.display());
    Ok(())
}
