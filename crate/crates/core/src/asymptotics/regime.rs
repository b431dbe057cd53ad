use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::distance::dist_attractor_to_s;
use crate::asymptotics::orbit::OmegaSample;
use crate::error::{Error, Result};

/// Default distance below which an attractor is reported as near-singular.
pub const DEFAULT_EPSILON_SINGULAR: f64 = 1e-3;

/// Asymptotic regime of a network, serialized as a tagged string such as
/// `NearSingular(1e-9)` or `Undetermined(120000)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RegimeLabel {
    NeuralDeath,
    FullActivity,
    StablePeriodic,
    /// Carries the measured distance of the attractor to the singularity set.
    NearSingular(f64),
    /// Carries the horizon at which detection gave up.
    Undetermined(usize),
}

pub fn classify_regime(sample: &OmegaSample, epsilon_singular: f64) -> Result<RegimeLabel> {
    if sample.undetermined > 0 {
        return Ok(RegimeLabel::Undetermined(sample.horizon));
    }
    if sample.orbits.is_empty() {
        return Err(Error::EmptyOrbitList);
    }
    if let [only] = sample.orbits.as_slice() {
        if only.is_quiescent_fixed_point() {
            return Ok(RegimeLabel::NeuralDeath);
        }
        if only.is_full_activity_fixed_point() {
            return Ok(RegimeLabel::FullActivity);
        }
    }
    let d = dist_attractor_to_s(&sample.orbits)?;
    if d < epsilon_singular {
        Ok(RegimeLabel::NearSingular(d))
    } else {
        Ok(RegimeLabel::StablePeriodic)
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeLabel::NeuralDeath => f.write_str("NeuralDeath"),
            RegimeLabel::FullActivity => f.write_str("FullActivity"),
            RegimeLabel::StablePeriodic => f.write_str("StablePeriodic"),
            RegimeLabel::NearSingular(d) => write!(f, "NearSingular({d:?})"),
            RegimeLabel::Undetermined(h) => write!(f, "Undetermined({h})"),
        }
    }
}

impl FromStr for RegimeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let arg = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        match s {
            "NeuralDeath" => Ok(RegimeLabel::NeuralDeath),
            "FullActivity" => Ok(RegimeLabel::FullActivity),
            "StablePeriodic" => Ok(RegimeLabel::StablePeriodic),
            _ => {
                if let Some(d) = arg("NearSingular") {
                    d.parse().map(RegimeLabel::NearSingular).map_err(Error::parse)
                } else if let Some(h) = arg("Undetermined") {
                    h.parse().map(RegimeLabel::Undetermined).map_err(Error::parse)
                } else {
                    Err(Error::parse(format!("unknown regime label {s:?}")))
                }
            }
        }
    }
}

impl From<RegimeLabel> for String {
    fn from(label: RegimeLabel) -> String {
        label.to_string()
    }
}

impl TryFrom<String> for RegimeLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::orbit::{omega_sample, Horizons, DEFAULT_TOLERANCE};
    use crate::model::NetworkParams;

    #[test]
    fn label_text_round_trip() {
        for label in [
            RegimeLabel::NeuralDeath,
            RegimeLabel::FullActivity,
            RegimeLabel::StablePeriodic,
            RegimeLabel::NearSingular(3.2e-9),
            RegimeLabel::Undetermined(120_000),
        ] {
            assert_eq!(label.to_string().parse::<RegimeLabel>().unwrap(), label);
        }
        assert!("Chaos".parse::<RegimeLabel>().is_err());
    }

    #[test]
    fn silent_and_saturated_networks() {
        let h = Horizons {
            max_transient: 10_000,
            max_period: 100,
        };
        let dead = NetworkParams::new(0.5, 1.0, vec![vec![0.0; 2]; 2], vec![0.0; 2]).unwrap();
        let s = omega_sample(&dead, 4, 0, h, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(classify_regime(&s, 1e-3).unwrap(), RegimeLabel::NeuralDeath);

        let full = NetworkParams::new(0.5, 1.0, vec![vec![0.8, 0.8]; 2], vec![0.0; 2]).unwrap();
        let s = omega_sample(&full, 4, 0, h, DEFAULT_TOLERANCE).unwrap();
        // bounds are [0, 3.2]; some inits start quiescent and stay there
        let label = classify_regime(&s, 1e-3).unwrap();
        assert!(matches!(label, RegimeLabel::FullActivity | RegimeLabel::StablePeriodic));
    }

    #[test]
    fn empty_sample_is_an_error() {
        let s = OmegaSample {
            orbits: vec![],
            undetermined: 0,
            runs: 0,
            horizon: 10,
        };
        assert!(classify_regime(&s, 1e-3).is_err());
    }
}
