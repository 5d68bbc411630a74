//! Seconds-of-day helpers and the reporting periods.

use serde::{Deserialize, Serialize};

/// Length of the simulated day in seconds.
pub const DAY_S: f64 = 86_400.0;

/// Half-open interval `[start, end)` in seconds of day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub const fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    AmPeak,
    Midday,
    PmPeak,
    /// AM and PM peaks together.
    Peak,
    Daily,
}

impl Period {
    pub const ALL: [Period; 5] = [
        Period::AmPeak,
        Period::Midday,
        Period::PmPeak,
        Period::Peak,
        Period::Daily,
    ];
}

/// The reporting windows. Midday is the gap between the two peaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Periods {
    pub am_peak: Window,
    pub midday: Window,
    pub pm_peak: Window,
}

impl Default for Periods {
    fn default() -> Self {
        Self {
            am_peak: Window::new(25_200.0, 36_000.0),
            midday: Window::new(36_000.0, 57_600.0),
            pm_peak: Window::new(57_600.0, 75_600.0),
        }
    }
}

impl Periods {
    pub fn contains(&self, period: Period, t: f64) -> bool {
        match period {
            Period::AmPeak => self.am_peak.contains(t),
            Period::Midday => self.midday.contains(t),
            Period::PmPeak => self.pm_peak.contains(t),
            Period::Peak => self.in_peak(t),
            Period::Daily => (0.0..DAY_S).contains(&t),
        }
    }

    #[inline]
    pub fn in_peak(&self, t: f64) -> bool {
        self.am_peak.contains(t) || self.pm_peak.contains(t)
    }

    /// Windows making up a period, in time order.
    pub fn windows(&self, period: Period) -> Vec<Window> {
        match period {
            Period::AmPeak => vec![self.am_peak],
            Period::Midday => vec![self.midday],
            Period::PmPeak => vec![self.pm_peak],
            Period::Peak => vec![self.am_peak, self.pm_peak],
            Period::Daily => vec![Window::new(0.0, DAY_S)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_windows_partition_the_working_day() {
        let p = Periods::default();
        assert_eq!(p.am_peak.end, p.midday.start);
        assert_eq!(p.midday.end, p.pm_peak.start);
        assert!(!p.am_peak.overlaps(&p.pm_peak));
        assert!(p.contains(Period::Peak, 8.0 * 3600.0));
        assert!(!p.contains(Period::Peak, 12.0 * 3600.0));
        assert!(p.contains(Period::Midday, 12.0 * 3600.0));
        assert!(p.contains(Period::PmPeak, 16.0 * 3600.0));
        assert!(!p.contains(Period::PmPeak, 21.0 * 3600.0));
    }
}
