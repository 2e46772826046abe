//! JSON run configuration. Every field is optional; omitted sections
//! take their defaults.
//!
//! ```json
//! {
//!   "filter": { "quality_threshold": 50 },
//!   "timezone_offset_hours": 1,
//!   "ranges": { "SPO2": { "vmin": 90, "vmax": 100 } },
//!   "scales": { "HR": { "scheme": "RGR", "mode": "discrete", "steps": 5 } },
//!   "palette": { "green": "#1A9641" },
//!   "layout": { "cell_width_px": 6, "date_mode": "absolute" },
//!   "synth": { "patients": 84, "seed": 2021 },
//!   "workers": 2
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::colorscale::{ColorScale, Palette, ScalesConfig};
use crate::aggregate::RangeConfig;
use crate::error::{Error, Result};
use crate::ingest::SampleFormat;
use crate::quality::FilterConfig;
use crate::render::ChartLayout;
use crate::signal::SignalId;
use crate::synth::CohortSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub filter: FilterConfig,
    /// Local time offset from UTC used for hour buckets and day lines.
    pub timezone_offset_hours: f64,
    /// Per-patient offsets overriding `timezone_offset_hours`.
    pub patient_timezones: BTreeMap<String, f64>,
    pub ranges: RangeConfig,
    pub scales: ScalesConfig,
    pub palette: Palette,
    pub layout: ChartLayout,
    pub synth: CohortSpec,
    pub sample_format: SampleFormat,
    /// Patients processed concurrently; 0 picks the number of CPUs.
    pub workers: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            filter: FilterConfig::default(),
            timezone_offset_hours: 0.0,
            patient_timezones: BTreeMap::new(),
            ranges: RangeConfig::default(),
            scales: ScalesConfig::default(),
            palette: Palette::default(),
            layout: ChartLayout::default(),
            synth: CohortSpec::default(),
            sample_format: SampleFormat::Long,
            workers: 0,
        }
    }
}

fn offset_seconds(hours: f64) -> Result<i64> {
    if !(hours.is_finite() && (-14.0..=14.0).contains(&hours)) {
        return Err(Error::Config(format!("timezone offset {hours} h outside -14..=14")));
    }
    Ok((hours * 3600.0).round() as i64)
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        offset_seconds(self.timezone_offset_hours)?;
        for h in self.patient_timezones.values() {
            offset_seconds(*h)?;
        }
        self.ranges.validate()?;
        self.scales.validate(&self.palette)?;
        self.layout.validate()
    }

    pub fn tz_offset_s(&self, patient_id: &str) -> i64 {
        let hours = self
            .patient_timezones
            .get(patient_id)
            .copied()
            .unwrap_or(self.timezone_offset_hours);
        offset_seconds(hours).unwrap_or(0)
    }

    /// Built scales for the five core bands.
    pub fn core_scales(&self) -> Result<BTreeMap<SignalId, ColorScale>> {
        SignalId::CORE
            .iter()
            .map(|s| Ok((s.clone(), self.scales.scale_for(s, &self.palette)?)))
            .collect()
    }

    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}
