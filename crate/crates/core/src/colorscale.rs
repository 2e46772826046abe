//! Named sequential and diverging color scales.
//!
//! Positions are normalized to `[0, 1]`. Diverging scales put the
//! per-patient baseline at 0.5. The green-centered diverging scale (RYGB)
//! only uses yellow above the baseline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::signal::SignalId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Color {
    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn hex(&self) -> String {
        self.to_string()
    }

    /// Channel-wise linear interpolation, rounded to the nearest integer.
    pub fn lerp(self, other: Color, t: f64) -> Color {
        let mix = |a: u8, b: u8| {
            let (a, b) = (f64::from(a), f64::from(b));
            (a + (b - a) * t).round().clamp(0.0, 255.0) as u8
        };
        Color::rgb(mix(self.r, other.r), mix(self.g, other.g), mix(self.b, other.b))
    }

    pub fn distance_sq(self, other: Color) -> u32 {
        let d = |a: u8, b: u8| (i32::from(a) - i32::from(b)).unsigned_abs().pow(2);
        d(self.r, other.r) + d(self.g, other.g) + d(self.b, other.b)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }
}

impl FromStr for Color {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let hex = s.trim().trim_start_matches('#');
        let bad = || Error::Config(format!("invalid color `{s}`, expected #RRGGBB"));
        if hex.len() != 6 || !hex.is_ascii() {
            return Err(bad());
        }
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Color::rgb(channel(0)?, channel(2)?, channel(4)?))
    }
}

impl Serialize for Color {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The anchor colors every named scale is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Palette {
    pub blue: Color,
    pub green: Color,
    pub yellow: Color,
    pub red: Color,
    pub white: Color,
    pub missing: Color,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            blue: Color::rgb(0x05, 0x71, 0xB0),
            green: Color::rgb(0x1A, 0x96, 0x41),
            yellow: Color::rgb(0xFD, 0xAE, 0x61),
            red: Color::rgb(0xCA, 0x00, 0x20),
            white: Color::rgb(0xF7, 0xF7, 0xF7),
            missing: Color::rgb(0xBD, 0xBD, 0xBD),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorName {
    Blue,
    Green,
    Yellow,
    Red,
    White,
}

impl Palette {
    /// Classify a color by its nearest anchor among `candidates`
    /// (squared RGB distance, first candidate wins ties).
    pub fn nearest(&self, color: Color, candidates: &[AnchorName]) -> AnchorName {
        *candidates
            .iter()
            .min_by_key(|a| self.anchor(**a).distance_sq(color))
            .expect("at least one candidate")
    }

    pub fn anchor(&self, name: AnchorName) -> Color {
        match name {
            AnchorName::Blue => self.blue,
            AnchorName::Green => self.green,
            AnchorName::Yellow => self.yellow,
            AnchorName::Red => self.red,
            AnchorName::White => self.white,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeName {
    /// White-red, sequential.
    #[serde(rename = "WR")]
    WhiteRed,
    /// Yellow-red, sequential.
    #[serde(rename = "YR")]
    YellowRed,
    /// Green-blue, sequential.
    #[serde(rename = "GB_SEQ", alias = "GB")]
    GreenBlue,
    /// Red-white-blue, diverging.
    #[serde(rename = "RWB")]
    RedWhiteBlue,
    /// Red-yellow-blue, diverging.
    #[serde(rename = "RYB")]
    RedYellowBlue,
    /// Red-green-red, diverging.
    #[serde(rename = "RGR")]
    RedGreenRed,
    /// Red-green-blue, diverging.
    #[serde(rename = "RGB3", alias = "RGB")]
    RedGreenBlue,
    /// Red-yellow-green-blue, diverging; yellow only above the center.
    #[serde(rename = "RYGB")]
    RedYellowGreenBlue,
}

impl SchemeName {
    pub const ALL: [SchemeName; 8] = [
        SchemeName::WhiteRed,
        SchemeName::YellowRed,
        SchemeName::GreenBlue,
        SchemeName::RedWhiteBlue,
        SchemeName::RedYellowBlue,
        SchemeName::RedGreenRed,
        SchemeName::RedGreenBlue,
        SchemeName::RedYellowGreenBlue,
    ];

    pub fn kind(self) -> ScaleKind {
        match self {
            SchemeName::WhiteRed | SchemeName::YellowRed | SchemeName::GreenBlue => {
                ScaleKind::Sequential
            }
            _ => ScaleKind::Diverging,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::WhiteRed => "WR",
            SchemeName::YellowRed => "YR",
            SchemeName::GreenBlue => "GB_SEQ",
            SchemeName::RedWhiteBlue => "RWB",
            SchemeName::RedYellowBlue => "RYB",
            SchemeName::RedGreenRed => "RGR",
            SchemeName::RedGreenBlue => "RGB3",
            SchemeName::RedYellowGreenBlue => "RYGB",
        }
    }

    /// Anchors from low (0.0) to high (1.0). Sequential schemes run from
    /// the light end to the dark end.
    fn anchors(self, p: &Palette) -> Vec<(f64, Color)> {
        match self {
            SchemeName::WhiteRed => vec![(0.0, p.white), (1.0, p.red)],
            SchemeName::YellowRed => vec![(0.0, p.yellow), (1.0, p.red)],
            SchemeName::GreenBlue => vec![(0.0, p.green), (1.0, p.blue)],
            SchemeName::RedWhiteBlue => vec![(0.0, p.blue), (0.5, p.white), (1.0, p.red)],
            SchemeName::RedYellowBlue => vec![(0.0, p.blue), (0.5, p.yellow), (1.0, p.red)],
            SchemeName::RedGreenRed => vec![(0.0, p.red), (0.5, p.green), (1.0, p.red)],
            SchemeName::RedGreenBlue => vec![(0.0, p.blue), (0.5, p.green), (1.0, p.red)],
            SchemeName::RedYellowGreenBlue => {
                vec![(0.0, p.blue), (0.5, p.green), (0.75, p.yellow), (1.0, p.red)]
            }
        }
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let upper = match upper.as_str() {
            "GB" => "GB_SEQ",
            "RGB" => "RGB3",
            other => other,
        };
        SchemeName::ALL
            .into_iter()
            .find(|n| n.as_str() == upper)
            .ok_or_else(|| Error::Config(format!("unknown color scheme {s:?}")))
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    Sequential,
    Diverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMode {
    Continuous,
    Discrete(u8),
}

impl ScaleMode {
    pub fn discrete(steps: u8) -> Result<Self> {
        if matches!(steps, 3 | 5 | 7 | 9) {
            Ok(ScaleMode::Discrete(steps))
        } else {
            Err(Error::Config(format!(
                "discrete color scales take 3, 5, 7 or 9 steps, not {steps}"
            )))
        }
    }
}

/// An immutable value-to-color mapping over normalized positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorScale {
    pub name: SchemeName,
    pub kind: ScaleKind,
    pub mode: ScaleMode,
    /// Swap the ends: `map(p)` becomes the uninverted `map(1 - p)`.
    pub inverted: bool,
    /// Uninverted anchors, strictly increasing from 0.0 to 1.0.
    pub anchors: Vec<(f64, Color)>,
    pub missing_color: Color,
}

pub fn make_named_scale(name: SchemeName, mode: ScaleMode, inverted: bool) -> Result<ColorScale> {
    make_scale_with_palette(name, mode, inverted, &Palette::default())
}

pub fn make_scale_with_palette(
    name: SchemeName,
    mode: ScaleMode,
    inverted: bool,
    palette: &Palette,
) -> Result<ColorScale> {
    if let ScaleMode::Discrete(steps) = mode {
        ScaleMode::discrete(steps)?;
    }
    Ok(ColorScale {
        name,
        kind: name.kind(),
        mode,
        inverted,
        anchors: name.anchors(palette),
        missing_color: palette.missing,
    })
}

impl ColorScale {
    /// Replace the anchors, checking they are sorted and span `[0, 1]`
    /// (with a 0.5 anchor for diverging scales).
    pub fn with_anchors(mut self, anchors: Vec<(f64, Color)>) -> Result<Self> {
        let ok_ends = anchors.first().is_some_and(|a| a.0 == 0.0)
            && anchors.last().is_some_and(|a| a.0 == 1.0);
        let sorted = anchors.windows(2).all(|w| w[0].0 < w[1].0);
        if anchors.len() < 2 || !ok_ends || !sorted {
            return Err(Error::Config(format!(
                "{} anchors must increase strictly from 0.0 to 1.0",
                self.name
            )));
        }
        if self.kind == ScaleKind::Diverging && !anchors.iter().any(|a| a.0 == 0.5) {
            return Err(Error::Config(format!("diverging scale {} needs a 0.5 anchor", self.name)));
        }
        self.anchors = anchors;
        Ok(self)
    }

    /// Continuous color at `position` on the uninverted anchors.
    fn continuous(&self, position: f64) -> Color {
        let p = position.clamp(0.0, 1.0);
        let upper = self
            .anchors
            .iter()
            .position(|a| a.0 >= p)
            .unwrap_or(self.anchors.len() - 1);
        let (p1, c1) = self.anchors[upper];
        if p1 == p || upper == 0 {
            return c1;
        }
        let (p0, c0) = self.anchors[upper - 1];
        c0.lerp(c1, (p - p0) / (p1 - p0))
    }

    /// Color for a normalized position; `None` (or NaN) is missing data.
    pub fn map_color(&self, position: Option<f64>) -> Color {
        let Some(p) = position.filter(|p| !p.is_nan()) else {
            return self.missing_color;
        };
        let mut p = p.clamp(0.0, 1.0);
        if self.inverted {
            p = 1.0 - p;
        }
        match self.mode {
            ScaleMode::Continuous => self.continuous(p),
            ScaleMode::Discrete(n) => {
                let n = f64::from(n);
                let bin = (p * n).floor().min(n - 1.0);
                self.continuous((bin + 0.5) / n)
            }
        }
    }

    /// Colors of the discrete bins from low to high, or `None` when the
    /// scale is continuous.
    pub fn bins(&self) -> Option<Vec<Color>> {
        let ScaleMode::Discrete(n) = self.mode else {
            return None;
        };
        Some(
            (0..n)
                .map(|i| self.map_color(Some((f64::from(i) + 0.5) / f64::from(n))))
                .collect(),
        )
    }
}

/// Free-function form of [`ColorScale::map_color`].
pub fn map_color(scale: &ColorScale, position: Option<f64>) -> Color {
    scale.map_color(position)
}

/// Normalize a value against a per-patient range.
///
/// Sequential: linear from `vmin` to `vmax`. Diverging: piecewise linear
/// with the baseline pinned at 0.5. Values outside the range clamp.
pub fn normalize(value: f64, vmin: f64, vmax: f64, baseline: f64, kind: ScaleKind) -> Result<f64> {
    if vmin >= vmax || !vmin.is_finite() || !vmax.is_finite() {
        return Err(Error::Range { vmin, vmax });
    }
    let p = match kind {
        ScaleKind::Sequential => (value - vmin) / (vmax - vmin),
        ScaleKind::Diverging => {
            let baseline = baseline.clamp(vmin, vmax);
            if value == baseline {
                0.5
            } else if value < baseline {
                if baseline > vmin {
                    0.5 * (value - vmin) / (baseline - vmin)
                } else {
                    0.0
                }
            } else if vmax > baseline {
                0.5 + 0.5 * (value - baseline) / (vmax - baseline)
            } else {
                1.0
            }
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Continuous,
    Discrete,
}

/// Per-signal scale settings as they appear in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub scheme: SchemeName,
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_steps")]
    pub steps: u8,
    #[serde(default)]
    pub inverted: bool,
    #[serde(default)]
    pub anchors: Option<Vec<(f64, Color)>>,
}

fn default_mode() -> ModeName {
    ModeName::Continuous
}

fn default_steps() -> u8 {
    5
}

impl ScaleConfig {
    pub fn new(scheme: SchemeName, inverted: bool) -> Self {
        Self {
            scheme,
            mode: ModeName::Continuous,
            steps: default_steps(),
            inverted,
            anchors: None,
        }
    }

    /// Default mapping: HR, RR and Temp diverge around the baseline; HRV
    /// and SpO2 are sequential, SpO2 inverted so that high is light.
    pub fn default_for(signal: &SignalId) -> Self {
        match signal {
            SignalId::Hrv => Self::new(SchemeName::GreenBlue, false),
            SignalId::Spo2 => Self::new(SchemeName::GreenBlue, true),
            _ => Self::new(SchemeName::RedYellowGreenBlue, false),
        }
    }

    pub fn build(&self, palette: &Palette) -> Result<ColorScale> {
        let mode = match self.mode {
            ModeName::Continuous => ScaleMode::Continuous,
            ModeName::Discrete => ScaleMode::discrete(self.steps)?,
        };
        let scale = make_scale_with_palette(self.scheme, mode, self.inverted, palette)?;
        match &self.anchors {
            Some(anchors) => scale.with_anchors(anchors.clone()),
            None => Ok(scale),
        }
    }
}

/// The `scales` config section: per-signal overrides over the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalesConfig {
    pub signals: BTreeMap<SignalId, ScaleConfig>,
}

impl ScalesConfig {
    pub fn scale_for(&self, signal: &SignalId, palette: &Palette) -> Result<ColorScale> {
        match self.signals.get(signal) {
            Some(cfg) => cfg.build(palette),
            None => ScaleConfig::default_for(signal).build(palette),
        }
    }

    pub fn validate(&self, palette: &Palette) -> Result<()> {
        for cfg in self.signals.values() {
            cfg.build(palette)?;
        }
        Ok(())
    }
}
