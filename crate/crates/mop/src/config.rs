use crate::error::ConfigError;
use mop_core::recurrence::{Coefficients, RecurrenceSpec, Tail};
use mop_core::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Periodic,
    Constant,
    /// `coefficients` is a prefix, followed by the periodic `tail`.
    Explicit,
}

/// Which spec the hierarchy and residue computations run on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Reflected,
    Original,
}

/// One experiment record. Every field except `p` and `coefficients` has a
/// default, and command-line flags override `seed` and `out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: usize,
    #[serde(default)]
    pub mode: Mode,
    pub coefficients: Vec<f64>,
    /// Period, checked against the coefficient list when present.
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub tail: Vec<f64>,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub l: Vec<usize>,
    #[serde(default)]
    pub n: Vec<usize>,
    /// Evaluation points as `[re, im]`.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    /// Samples per half-line for the star-like sets.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Number of random specs or draws in property suites.
    #[serde(default)]
    pub cases: Option<usize>,
    /// Random evaluation points per spec.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_grid() -> usize {
    6000
}

impl RunConfig {
    pub fn periodic(p: usize, b: &[f64]) -> Self {
        RunConfig {
            p,
            mode: Mode::Periodic,
            coefficients: b.to_vec(),
            r: None,
            tail: Vec::new(),
            orientation: Orientation::default(),
            k: Vec::new(),
            l: Vec::new(),
            n: Vec::new(),
            points: Vec::new(),
            grid: default_grid(),
            t_max: None,
            tolerance: None,
            cases: None,
            samples: None,
            seed: 0,
            out: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let spec = self.spec()?;
        if let Some(r) = self.r {
            let period = match self.mode {
                Mode::Periodic => self.coefficients.len(),
                Mode::Constant => 1,
                Mode::Explicit => self.tail.len(),
            };
            if r != period {
                return Err(ConfigError::Invalid(format!("r = {r} but the coefficients have period {period}")));
            }
        }
        if let Some(k) = self.k.iter().find(|k| **k > self.p) {
            return Err(ConfigError::Invalid(format!("level k = {k} exceeds p = {}", self.p)));
        }
        if let Some(l) = self.l.iter().find(|l| **l == 0 || **l > self.p) {
            return Err(ConfigError::Invalid(format!("level l = {l} outside 1..=p")));
        }
        if self.grid < 16 {
            return Err(ConfigError::Invalid(format!("grid = {} is too coarse", self.grid)));
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ConfigError::Invalid("non-finite evaluation point".to_string()));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::Invalid(format!("tolerance {t} must be positive")));
            }
        }
        let _ = spec;
        Ok(())
    }

    /// The recurrence as configured, before any reflection.
    pub fn spec(&self) -> Result<RecurrenceSpec, ConfigError> {
        let coefficients = match self.mode {
            Mode::Periodic => Coefficients::Periodic(self.coefficients.clone()),
            Mode::Constant => match self.coefficients.as_slice() {
                [a] => Coefficients::Constant(*a),
                other => return Err(ConfigError::Invalid(format!("constant mode takes one coefficient, got {}", other.len()))),
            },
            Mode::Explicit => {
                let tail = match self.tail.as_slice() {
                    [] => return Err(ConfigError::Invalid("explicit mode needs a tail".to_string())),
                    [a] => Tail::Constant(*a),
                    t => Tail::Periodic(t.to_vec()),
                };
                Coefficients::Explicit { prefix: self.coefficients.clone(), tail }
            }
        };
        RecurrenceSpec::new(self.p, coefficients).map_err(ConfigError::Spec)
    }

    /// The spec the residue tests run on.
    pub fn oriented_spec(&self) -> Result<RecurrenceSpec, ConfigError> {
        let spec = self.spec()?;
        match self.orientation {
            Orientation::Original => Ok(spec),
            Orientation::Reflected => spec.reflected().map_err(ConfigError::Spec),
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.points.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
    }

    pub fn levels(&self) -> Vec<usize> {
        if self.k.is_empty() {
            (0..self.p).collect()
        } else {
            self.k.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let c = RunConfig::parse(r#"{"p": 2, "coefficients": [3, 2, 3, 5, 4, 1]}"#).unwrap();
        assert_eq!(c.mode, Mode::Periodic);
        assert_eq!(c.grid, 6000);
        assert_eq!(c.spec().unwrap().limit_period().unwrap().len(), 6);
        assert_eq!(c.levels(), vec![0, 1]);
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(matches!(RunConfig::parse(r#"{"p": 2, "coefficients": [1], "colour": 1}"#), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::parse(r#"{"p": 2, "coefficients": [1, -1]}"#), Err(ConfigError::Spec(_))));
        assert!(matches!(RunConfig::parse(r#"{"p": 2, "coefficients": [1, 2], "r": 3}"#), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse(r#"{"p": 2, "coefficients": [1], "k": [3]}"#), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse(r#"{"p": 2, "mode": "constant", "coefficients": [1, 2]}"#), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn explicit_prefix_and_tail() {
        let c = RunConfig::parse(r#"{"p": 2, "mode": "explicit", "coefficients": [5, 6], "tail": [1, 2], "r": 2}"#).unwrap();
        let s = c.spec().unwrap();
        assert_eq!((s.a(0), s.a(1), s.a(2), s.a(3)), (5.0, 6.0, 1.0, 2.0));
    }
}
