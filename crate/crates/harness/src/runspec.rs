use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use unisym::bdris::{db_to_linear, Scenario};
use unisym::OptimizerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Geodesic phase ascent on unitary symmetric matrices.
    MoUs,
    /// Armijo ascent on the unitary group followed by symmetric retraction.
    MoUProj,
    /// Closed-form retraction of `F^H H_d G + (F^H H_d G)^T`.
    LowCost,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MoUs, Method::MoUProj, Method::LowCost];

    pub fn name(self) -> &'static str {
        match self {
            Method::MoUs => "mo_us",
            Method::MoUProj => "mo_u_proj",
            Method::LowCost => "low_cost",
        }
    }

    pub fn is_iterative(self) -> bool {
        !matches!(self, Method::LowCost)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .with_context(|| format!("unknown method `{s}` (expected mo_us, mo_u_proj or low_cost)"))
    }
}

/// One experiment, as read from a flat key-value file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub nt: usize,
    pub nr: usize,
    pub tx_pos: [f64; 3],
    pub rx_pos: [f64; 3],
    pub ris_pos: [f64; 3],
    pub k_rician: f64,
    pub alpha_ris: f64,
    pub alpha_direct: f64,
    /// Transmit SNR `P / σ²` in dB.
    pub rho_db: f64,
    pub pl0_db: f64,
    pub direct_blocked: bool,

    /// Numbers of BD-RIS elements to sweep.
    pub sweep: Vec<usize>,
    pub trials: usize,
    pub seed0: u64,
    pub methods: Vec<Method>,

    pub epsilon: f64,
    pub max_iters: usize,
    pub sweeps_per_iter: usize,
    pub fallback_grid: usize,

    pub output_dir: PathBuf,
}

impl Default for RunSpec {
    fn default() -> Self {
        let sc = Scenario::reference(1);
        let opt = OptimizerConfig::default();
        Self {
            nt: sc.nt,
            nr: sc.nr,
            tx_pos: sc.tx_pos,
            rx_pos: sc.rx_pos,
            ris_pos: sc.ris_pos,
            k_rician: sc.k_rician,
            alpha_ris: sc.alpha_ris,
            alpha_direct: sc.alpha_direct,
            rho_db: 10.0 * sc.rho.log10(),
            pl0_db: sc.pl0_db,
            direct_blocked: sc.direct_blocked,
            sweep: vec![16, 32, 64, 128],
            trials: 50,
            seed0: 0,
            methods: Method::ALL.to_vec(),
            epsilon: opt.epsilon,
            max_iters: opt.max_iters,
            sweeps_per_iter: opt.sweeps_per_iter,
            fallback_grid: opt.fallback_grid,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: RunSpec = toml::from_str(text).context("parsing run spec")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be >= 1");
        }
        if self.sweep.is_empty() || self.sweep.contains(&0) {
            bail!("sweep must be a non-empty list of positive element counts");
        }
        if self.methods.is_empty() {
            bail!("at least one method is required");
        }
        self.optimizer().validate()?;
        self.scenario(self.sweep[0]).validate()?;
        Ok(())
    }

    pub fn scenario(&self, m: usize) -> Scenario {
        Scenario {
            nt: self.nt,
            nr: self.nr,
            m,
            tx_pos: self.tx_pos,
            rx_pos: self.rx_pos,
            ris_pos: self.ris_pos,
            k_rician: self.k_rician,
            alpha_ris: self.alpha_ris,
            alpha_direct: self.alpha_direct,
            rho: db_to_linear(self.rho_db),
            pl0_db: self.pl0_db,
            direct_blocked: self.direct_blocked,
        }
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            sweeps_per_iter: self.sweeps_per_iter,
            fallback_grid: self.fallback_grid,
            check_gradient: false,
        }
    }

    /// Channel seed of a trial; shared by every method.
    pub fn channel_seed(&self, trial: usize) -> u64 {
        self.seed0.wrapping_add(trial as u64)
    }

    /// Seed of the random starting point of a trial.
    pub fn start_seed(&self, trial: usize) -> u64 {
        self.channel_seed(trial) ^ 0x9e37_79b9_7f4a_7c15
    }
}
