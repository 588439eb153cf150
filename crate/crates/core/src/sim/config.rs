use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One Monte Carlo scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of datasets, 2 or 3.
    pub m: usize,
    /// Training rows per dataset.
    pub n: usize,
    /// Size of the pure-noise covariate block (shared and specific).
    pub s: usize,
    pub rho_x: f64,
    pub rho_y: f64,
    pub seed: u64,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Draw the design matrices once and reuse them in every replicate
    /// (only the noise is redrawn).
    #[serde(default)]
    pub fixed_design: bool,
}

fn default_n_test() -> usize {
    1000
}

fn default_replicates() -> usize {
    100
}

fn rho_tag(r: f64) -> String {
    format!("{r}").replace('.', "")
}

fn parse_rho(tag: &str) -> Option<f64> {
    if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let (int, frac) = tag.split_at(1);
    format!("{int}.{frac}0").parse().ok()
}

impl SimConfig {
    pub fn new(m: usize, n: usize, s: usize, rho_x: f64, rho_y: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            m,
            n,
            s,
            rho_x,
            rho_y,
            seed,
            n_test: default_n_test(),
            replicates: default_replicates(),
            fixed_design: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m == 2 || self.m == 3) {
            return Err(Error::UnsupportedScenario(format!("M must be 2 or 3, got {}", self.m)));
        }
        if self.n == 0 || self.n_test == 0 || self.replicates == 0 {
            return Err(Error::InvalidArgument("n, n_test and replicates must be positive".into()));
        }
        for (name, r) in [("rho_x", self.rho_x), ("rho_y", self.rho_y)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {r}")));
            }
        }
        Ok(())
    }

    /// Scenario label such as `M2_n15_s5_rx01_ry09`.
    pub fn name(&self) -> String {
        format!(
            "M{}_n{}_s{}_rx{}_ry{}",
            self.m,
            self.n,
            self.s,
            rho_tag(self.rho_x),
            rho_tag(self.rho_y)
        )
    }

    /// Parse a scenario label produced by [`SimConfig::name`].
    pub fn from_name(name: &str, seed: u64) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse scenario {name:?} (expected e.g. M2_n15_s5_rx01_ry01)"));
        let parts: Vec<&str> = name.split('_').collect();
        let [m, n, s, rx, ry] = parts.as_slice() else {
            return Err(bad());
        };
        let num = |p: &str, prefix: &str| p.strip_prefix(prefix).and_then(|v| v.parse::<usize>().ok());
        let m = num(m, "M").ok_or_else(bad)?;
        let n = num(n, "n").ok_or_else(bad)?;
        let s = num(s, "s").ok_or_else(bad)?;
        let rx = rx.strip_prefix("rx").and_then(parse_rho).ok_or_else(bad)?;
        let ry = ry.strip_prefix("ry").and_then(parse_rho).ok_or_else(bad)?;
        Self::new(m, n, s, rx, ry, seed)
    }

    /// The full factorial design: M ∈ {2,3}, n ∈ {15,25,50,75}, s ∈ {5,50},
    /// ρ_x, ρ_y ∈ {0.1, 0.9}.
    pub fn full_design(seed: u64) -> Vec<Self> {
        let mut out = Vec::new();
        for m in [2, 3] {
            for n in [15, 25, 50, 75] {
                for s in [5, 50] {
                    for rx in [0.1, 0.9] {
                        for ry in [0.1, 0.9] {
                            out.push(Self::new(m, n, s, rx, ry, seed).expect("valid cell"));
                        }
                    }
                }
            }
        }
        out
    }

    /// Shared (and specific) covariate count `10 + s`.
    pub fn dim(&self) -> usize {
        10 + self.s
    }
}
