use std::fmt::Write as _;

use super::{MetricsReport, PeriodMeans};

/// Named rows of one summary table.
pub type Table = Vec<(String, Option<f64>)>;

fn periods(rows: &mut Table, name: &str, m: &PeriodMeans) {
    for (suffix, v) in [
        ("am_peak", m.am_peak),
        ("midday", m.midday),
        ("pm_peak", m.pm_peak),
        ("daily", m.daily),
    ] {
        rows.push((format!("{name}_{suffix}"), v));
    }
}

fn row(rows: &mut Table, name: &str, v: f64) {
    rows.push((name.to_owned(), Some(v)));
}

impl MetricsReport {
    /// Passenger-side indicators.
    pub fn table1(&self) -> Table {
        let t = &self.travelers;
        let mut rows = Table::new();
        row(&mut rows, "passengers_total", t.passengers.total);
        row(&mut rows, "passengers_served", t.passengers.served);
        row(&mut rows, "passengers_failed", t.passengers.failed);
        row(&mut rows, "passengers_pending", t.passengers.pending);
        row(&mut rows, "shared_served", t.shared.served);
        row(&mut rows, "single_served", t.single.served);
        periods(&mut rows, "wait_min", &t.wait_min);
        periods(&mut rows, "travel_min", &t.travel_min);
        periods(&mut rows, "shared_wait_min", &t.shared_wait_min);
        periods(&mut rows, "shared_travel_min", &t.shared_travel_min);
        rows
    }

    /// Parcel-side indicators.
    pub fn table2(&self) -> Table {
        let s = &self.shipper;
        let mut rows = Table::new();
        row(&mut rows, "parcels_total", s.parcels.total);
        row(&mut rows, "parcels_served", s.parcels.served);
        row(&mut rows, "parcels_to_carrier", s.carrier_parcels);
        periods(&mut rows, "wait_min", &s.wait_min);
        periods(&mut rows, "delivery_min", &s.delivery_min);
        row(&mut rows, "carrier_driving_time_h", s.carrier_driving_time_h);
        row(&mut rows, "carrier_vkt_km", s.carrier_vkt_km);
        row(&mut rows, "carrier_tours", s.carrier_tours);
        rows
    }

    /// Fleet operator indicators.
    pub fn table3(&self) -> Table {
        let o = &self.operator;
        let u = &o.utilization;
        let mut rows = Table::new();
        row(&mut rows, "fleet_size", o.fleet_size);
        row(&mut rows, "demand_served", o.demand_served);
        row(&mut rows, "passengers_served", o.passengers_served);
        row(&mut rows, "parcels_served", o.parcels_served);
        row(&mut rows, "distance_km", o.distance_km);
        row(&mut rows, "utilization_am_peak", u.am_peak);
        row(&mut rows, "utilization_midday", u.midday);
        row(&mut rows, "utilization_pm_peak", u.pm_peak);
        row(&mut rows, "utilization_peak", u.peak);
        row(&mut rows, "utilization_daily", u.daily);
        rows
    }

    /// Network indicators.
    pub fn table4(&self) -> Table {
        let n = &self.network;
        let mut rows = Table::new();
        row(&mut rows, "mod_vkt_km", n.mod_vkt_km);
        row(&mut rows, "carrier_vkt_km", n.carrier_vkt_km);
        row(&mut rows, "total_vkt_km", n.total_vkt_km);
        row(&mut rows, "mod_vht_h", n.mod_vht_h);
        row(&mut rows, "carrier_vht_h", n.carrier_vht_h);
        row(&mut rows, "total_vht_h", n.total_vht_h);
        row(&mut rows, "tti_daily", n.tti_daily);
        row(&mut rows, "tti_peak", n.tti_peak);
        rows
    }

    pub fn tables(&self) -> [Table; 4] {
        [self.table1(), self.table2(), self.table3(), self.table4()]
    }
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "NA".to_owned(),
    }
}

/// `metric,value`; absent values are written as `NA`.
pub fn table_csv(table: &Table) -> String {
    let mut out = String::from("metric,value\n");
    for (name, v) in table {
        let _ = writeln!(out, "{name},{}", cell(*v));
    }
    out
}

pub fn series_status_csv(report: &MetricsReport) -> String {
    let mut out = String::from("t,idle,cruising,serving,parking\n");
    for s in &report.series.status {
        let _ = writeln!(out, "{},{},{},{},{}", s.t, s.idle, s.cruising, s.serving, s.parking);
    }
    out
}

pub fn series_requests_csv(report: &MetricsReport) -> String {
    let mut out = String::from(
        "t,requested_passengers,requested_parcels,pending_passengers,pending_parcels,served_passengers,served_parcels\n",
    );
    for s in &report.series.requests {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.t,
            s.requested_passengers,
            s.requested_parcels,
            s.pending_passengers,
            s.pending_parcels,
            s.served_passengers,
            s.served_parcels
        );
    }
    out
}

fn short(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.0}")
    } else {
        format!("{x:.3}")
    }
}

/// Side-by-side table; every column after the first shows its value and
/// the relative change from the first column, e.g. `412 (+3.5%)`.
pub fn delta_table(columns: &[(String, Table)]) -> String {
    let mut out = String::from("metric");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let Some((_, base)) = columns.first() else {
        return out;
    };
    for (i, (metric, base_v)) in base.iter().enumerate() {
        out.push_str(metric);
        for (k, (_, table)) in columns.iter().enumerate() {
            let v = table.get(i).and_then(|(_, v)| *v);
            out.push(',');
            match (k, v, base_v) {
                (_, None, _) => out.push_str("NA"),
                (0, Some(x), _) => out.push_str(&short(x)),
                (_, Some(x), Some(b)) if *b != 0.0 => {
                    let _ = write!(out, "{} ({:+.1}%)", short(x), (x - b) / b * 100.0);
                }
                (_, Some(x), _) => {
                    let _ = write!(out, "{} (NA)", short(x));
                }
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_formatting() {
        let base: Table = vec![("served".into(), Some(100.0)), ("wait".into(), None)];
        let other: Table = vec![("served".into(), Some(98.0)), ("wait".into(), Some(2.5))];
        let csv = delta_table(&[("BASE".into(), base), ("SHR".into(), other)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "metric,BASE,SHR");
        assert_eq!(lines[1], "served,100,98 (-2.0%)");
        assert_eq!(lines[2], "wait,NA,2.500 (NA)");
    }

    #[test]
    fn absent_values_are_na() {
        let t: Table = vec![("x".into(), None), ("y".into(), Some(0.25))];
        assert_eq!(table_csv(&t), "metric,value\nx,NA\ny,0.25\n");
    }
}
