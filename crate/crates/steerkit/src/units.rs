//! Quantities with explicit units at the file boundary.
//!
//! Frequencies are written as `"40.7 MHz"` (cycles per second, scaled by
//! 2π on use) or `"2.5e8 rad/s"`. Durations accept `s`, `ms`, `us` and `ns`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
    RadPerSecond,
}

impl FrequencyUnit {
    fn symbol(self) -> &'static str {
        match self {
            FrequencyUnit::Hz => "Hz",
            FrequencyUnit::KHz => "kHz",
            FrequencyUnit::MHz => "MHz",
            FrequencyUnit::GHz => "GHz",
            FrequencyUnit::RadPerSecond => "rad/s",
        }
    }

    /// Factor to rad/s.
    fn to_rad_per_second(self) -> f64 {
        let tau = std::f64::consts::TAU;
        match self {
            FrequencyUnit::Hz => tau,
            FrequencyUnit::KHz => tau * 1e3,
            FrequencyUnit::MHz => tau * 1e6,
            FrequencyUnit::GHz => tau * 1e9,
            FrequencyUnit::RadPerSecond => 1.0,
        }
    }
}

/// A frequency or rate as written, converted to rad/s by [`Frequency::rad_per_second`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    pub value: f64,
    pub unit: FrequencyUnit,
}

impl Frequency {
    pub fn hz(value: f64) -> Frequency {
        Frequency { value, unit: FrequencyUnit::Hz }
    }

    pub fn mhz(value: f64) -> Frequency {
        Frequency { value, unit: FrequencyUnit::MHz }
    }

    pub fn ghz(value: f64) -> Frequency {
        Frequency { value, unit: FrequencyUnit::GHz }
    }

    pub fn khz(value: f64) -> Frequency {
        Frequency { value, unit: FrequencyUnit::KHz }
    }

    pub fn rad_per_second(&self) -> f64 {
        self.value * self.unit.to_rad_per_second()
    }
}

fn split_quantity(s: &str) -> Result<(f64, &str), CliError> {
    let s = s.trim();
    let cut = s
        .find(|c: char| c.is_whitespace())
        .ok_or_else(|| CliError::Config(format!("quantity {s:?} needs a value and a unit separated by a space")))?;
    let (value, unit) = s.split_at(cut);
    let value: f64 = value.parse().map_err(|_| CliError::Config(format!("cannot parse number {value:?} in {s:?}")))?;
    if !value.is_finite() {
        return Err(CliError::Config(format!("quantity {s:?} is not finite")));
    }
    Ok((value, unit.trim()))
}

impl FromStr for Frequency {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Frequency, CliError> {
        let (value, unit) = split_quantity(s)?;
        let unit = match unit {
            "Hz" => FrequencyUnit::Hz,
            "kHz" => FrequencyUnit::KHz,
            "MHz" => FrequencyUnit::MHz,
            "GHz" => FrequencyUnit::GHz,
            "rad/s" => FrequencyUnit::RadPerSecond,
            other => {
                return Err(CliError::Config(format!(
                    "unknown frequency unit {other:?}; use Hz, kHz, MHz, GHz or rad/s"
                )))
            }
        };
        Ok(Frequency { value, unit })
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    S,
    Ms,
    Us,
    Ns,
}

impl TimeUnit {
    fn symbol(self) -> &'static str {
        match self {
            TimeUnit::S => "s",
            TimeUnit::Ms => "ms",
            TimeUnit::Us => "us",
            TimeUnit::Ns => "ns",
        }
    }

    fn to_seconds(self) -> f64 {
        match self {
            TimeUnit::S => 1.0,
            TimeUnit::Ms => 1e-3,
            TimeUnit::Us => 1e-6,
            TimeUnit::Ns => 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duration {
    pub value: f64,
    pub unit: TimeUnit,
}

impl Duration {
    pub fn ns(value: f64) -> Duration {
        Duration { value, unit: TimeUnit::Ns }
    }

    pub fn seconds(&self) -> f64 {
        self.value * self.unit.to_seconds()
    }
}

impl FromStr for Duration {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Duration, CliError> {
        let (value, unit) = split_quantity(s)?;
        let unit = match unit {
            "s" => TimeUnit::S,
            "ms" => TimeUnit::Ms,
            "us" | "µs" => TimeUnit::Us,
            "ns" => TimeUnit::Ns,
            other => return Err(CliError::Config(format!("unknown time unit {other:?}; use s, ms, us or ns"))),
        };
        Ok(Duration { value, unit })
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit.symbol())
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<$t, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(Frequency);
string_serde!(Duration);
