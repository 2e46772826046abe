//! Signal identifiers and per-second samples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A vital-sign channel.
///
/// The five core channels order alphabetically by abbreviation, which is
/// also the top-to-bottom band order in charts. Any other device channel is
/// kept as [`SignalId::Other`] and sorts after the core set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignalId {
    /// Heart rate, beats/min.
    Hr,
    /// Heart rate variability (RMSSD), ms.
    Hrv,
    /// Respiration rate, breaths/min.
    Rr,
    /// Oxygen saturation, percent.
    Spo2,
    /// Core body temperature, °C.
    Temp,
    Other(String),
}

impl SignalId {
    pub const CORE: [SignalId; 5] = [
        SignalId::Hr,
        SignalId::Hrv,
        SignalId::Rr,
        SignalId::Spo2,
        SignalId::Temp,
    ];

    pub fn is_core(&self) -> bool {
        !matches!(self, SignalId::Other(_))
    }

    /// Canonical CSV token.
    pub fn as_str(&self) -> &str {
        match self {
            SignalId::Hr => "HR",
            SignalId::Hrv => "HRV",
            SignalId::Rr => "RR",
            SignalId::Spo2 => "SPO2",
            SignalId::Temp => "TEMP",
            SignalId::Other(name) => name,
        }
    }

    /// Label used on chart bands.
    pub fn label(&self) -> &str {
        match self {
            SignalId::Temp => "Temp",
            other => other.as_str(),
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            SignalId::Hr => "bpm",
            SignalId::Hrv => "ms",
            SignalId::Rr => "br/min",
            SignalId::Spo2 => "%",
            SignalId::Temp => "°C",
            SignalId::Other(_) => "",
        }
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalId {
    type Err = std::convert::Infallible;

    /// Never fails: unknown names become [`SignalId::Other`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s.to_ascii_uppercase().as_str() {
            "HR" => SignalId::Hr,
            "HRV" => SignalId::Hrv,
            "RR" => SignalId::Rr,
            "SPO2" => SignalId::Spo2,
            "TEMP" => SignalId::Temp,
            _ => SignalId::Other(s.to_string()),
        })
    }
}

impl Serialize for SignalId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SignalId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(s.parse().unwrap())
    }
}

/// One reading of one channel, as it appears in a record's per-signal series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// UTC seconds since the epoch.
    pub t: i64,
    pub value: f64,
    /// Device quality percentage in `[0, 100]`, if the channel carries one.
    pub quality: Option<u8>,
}

/// A parsed CSV row: a [`Sample`] tagged with its channel.
#[derive(Debug, Clone, PartialEq)]
pub struct VitalSample {
    pub timestamp: i64,
    pub signal: SignalId,
    pub value: f64,
    pub quality: Option<u8>,
}

impl VitalSample {
    pub fn sample(&self) -> Sample {
        Sample {
            t: self.timestamp,
            value: self.value,
            quality: self.quality,
        }
    }
}
