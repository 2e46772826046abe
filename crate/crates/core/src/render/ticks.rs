//! Time-axis tick planning.

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label-stride thresholds. A duration below `below_hours[i]` gets
/// `strides[i]`; anything longer gets the last stride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRule {
    pub below_hours: Vec<f64>,
    pub strides: Vec<u32>,
}

impl Default for TickRule {
    fn default() -> Self {
        Self {
            below_hours: vec![24.0, 144.0, 240.0],
            strides: vec![1, 6, 12, 24],
        }
    }
}

impl TickRule {
    pub fn validate(&self) -> Result<()> {
        let sorted = self.below_hours.windows(2).all(|w| w[0] < w[1]);
        if self.strides.len() != self.below_hours.len() + 1 || !sorted {
            return Err(Error::Config(
                "tick rule needs ascending thresholds and one more stride than thresholds".into(),
            ));
        }
        if let Some(s) = self.strides.iter().find(|s| ![1, 6, 12, 24].contains(*s)) {
            return Err(Error::Config(format!("tick stride {s} not one of 1, 6, 12, 24")));
        }
        Ok(())
    }

    pub fn stride(&self, duration_hours: f64) -> u32 {
        self.below_hours
            .iter()
            .position(|&limit| duration_hours < limit)
            .map_or(*self.strides.last().unwrap(), |i| self.strides[i])
    }
}

/// Hourly label stride for a displayed interval: every hour under a day,
/// every 6 h up to 6 days, every 12 h up to 10 days, then daily.
pub fn tick_stride(duration_hours: f64) -> u32 {
    TickRule::default().stride(duration_hours)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DateMode {
    /// `d1 … dN`
    #[default]
    Anonymized,
    /// `YYYY-MM-DD`
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    /// Offset in hours from the first grid hour.
    pub hour: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickPlan {
    pub stride: u32,
    /// Day starts. The first day is labelled at hour 0 even when the grid
    /// does not begin at midnight.
    pub major: Vec<Tick>,
    /// Hour labels, `HH:MM`.
    pub minor: Vec<Tick>,
}

/// Plan ticks for a grid of `hours` local hours starting at local hour
/// index `first_local_hour` (hours since the epoch in local time).
pub fn plan_ticks(first_local_hour: i64, hours: usize, date_mode: DateMode, rule: &TickRule) -> TickPlan {
    let stride = rule.stride(hours as f64);
    let mut major = Vec::new();
    let mut minor = Vec::new();
    let mut day_number = 0;
    for k in 0..hours {
        let local = first_local_hour + k as i64;
        let hour_of_day = local.rem_euclid(24);
        if hour_of_day == 0 || k == 0 {
            day_number += 1;
            let label = match date_mode {
                DateMode::Anonymized => format!("d{day_number}"),
                DateMode::Absolute => DateTime::from_timestamp(local.div_euclid(24) * 86_400, 0)
                    .map(|d| d.format("%Y-%m-%d").to_string())
                    .unwrap_or_default(),
            };
            major.push(Tick { hour: k, label });
        }
        if hour_of_day % i64::from(stride) == 0 {
            minor.push(Tick {
                hour: k,
                label: format!("{hour_of_day:02}:00"),
            });
        }
    }
    TickPlan { stride, major, minor }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_examples() {
        assert_eq!(tick_stride(23.0), 1);
        assert_eq!(tick_stride(120.0), 6);
        assert_eq!(tick_stride(240.0), 24);
    }

    #[test]
    fn minor_labels_start_at_midnight() {
        // Two days starting at 00:00 local.
        let plan = plan_ticks(24 * 18_000, 48, DateMode::Anonymized, &TickRule::default());
        assert_eq!(plan.stride, 6);
        let labels: Vec<_> = plan.minor.iter().map(|t| t.label.as_str()).collect();
        assert_eq!(labels, ["00:00", "06:00", "12:00", "18:00", "00:00", "06:00", "12:00", "18:00"]);
        let days: Vec<_> = plan.major.iter().map(|t| (t.hour, t.label.as_str())).collect();
        assert_eq!(days, [(0, "d1"), (24, "d2")]);
    }

    #[test]
    fn absolute_dates() {
        // 2020-03-01T10:00 local, 20 hours.
        let first = 1_583_020_800 / 3600 + 10;
        let plan = plan_ticks(first, 20, DateMode::Absolute, &TickRule::default());
        let days: Vec<_> = plan.major.iter().map(|t| (t.hour, t.label.as_str())).collect();
        assert_eq!(days, [(0, "2020-03-01"), (14, "2020-03-02")]);
        assert_eq!(plan.minor.len(), 20);
        assert_eq!(plan.minor[0].label, "10:00");
    }

    #[test]
    fn rule_validation() {
        assert!(TickRule::default().validate().is_ok());
        let bad = TickRule { below_hours: vec![24.0], strides: vec![1, 5] };
        assert!(bad.validate().is_err());
    }
}
