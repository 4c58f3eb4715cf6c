use serde::{Deserialize, Serialize};

/// Tunable constants for the pipeline.
///
/// `c1` drives the OK test in the decomposition, `c2` the chord-spread rule,
/// `c3` the upper flatness band and `c4` the local flatness bound. `quad_tol`
/// is the relative tolerance of seminorm quadratures and `cg_tol` the relative
/// stopping tolerance of the oracles. Nothing in the pipeline is randomized, so
/// `seed` has no effect on results; it is carried for callers that draw data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub angle_count: usize,
    pub quad_tol: f64,
    pub cg_tol: f64,
    pub oracle_grid: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            p: 4.0,
            c1: 0.01,
            c2: 0.05,
            c3: 0.1,
            c4: 0.05,
            angle_count: 256,
            quad_tol: 1e-6,
            cg_tol: 1e-8,
            oracle_grid: 64,
            seed: 0,
        }
    }
}

impl Config {
    pub fn with_p(p: f64) -> Self {
        Config {
            p,
            ..Config::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.p > 2.0 && self.p.is_finite()) {
            return Err(crate::Error::Config(format!(
                "p must exceed 2, got {}",
                self.p
            )));
        }
        for (name, c) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
        ] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(crate::Error::Config(format!("{name} must be positive")));
            }
        }
        if self.angle_count < 8 {
            return Err(crate::Error::Config(
                "angle_count must be at least 8".into(),
            ));
        }
        for (name, t) in [("quad_tol", self.quad_tol), ("cg_tol", self.cg_tol)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(crate::Error::Config(format!(
                    "{name} must lie in (0, 1), got {t}"
                )));
            }
        }
        if self.oracle_grid < 16 {
            return Err(crate::Error::Config(
                "oracle_grid must be at least 16".into(),
            ));
        }
        Ok(())
    }
}
