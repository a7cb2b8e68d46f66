//! Run configuration: a flat TOML file, overridden by command-line flags.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ion_nmpm::{InitialStateSpec, TruncationConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Csv,
    Svg,
    DeviationReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    CoherentExcited,
    FockGround,
    FockExcited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lambda: f64,
    pub eta: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub order: usize,
    pub fock_cutoff: usize,
    pub tau_max: f64,
    /// Number of τ points, both ends included.
    pub tau_steps: usize,
    pub initial: InitialKind,
    /// Fock level for the number-state initial conditions.
    pub initial_n: usize,
    pub outputs: BTreeSet<Output>,
    pub out_dir: PathBuf,
    pub fig1_lambdas: Vec<f64>,
    pub sweep_lambda: Vec<f64>,
    pub sweep_eta: Vec<f64>,
    pub sweep_alpha: Vec<f64>,
    /// Sweep τ values; empty means the uniform grid from `tau_max` and `tau_steps`.
    pub sweep_tau: Vec<f64>,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            eta: 0.1,
            kappa: 0.0,
            alpha: 4.0,
            order: 2,
            fock_cutoff: 128,
            tau_max: 10.0,
            tau_steps: 1000,
            initial: InitialKind::CoherentExcited,
            initial_n: 0,
            outputs: [Output::Csv, Output::Svg].into_iter().collect(),
            out_dir: PathBuf::from("out"),
            fig1_lambdas: vec![0.1, 0.2, 0.3, 0.4],
            sweep_lambda: vec![0.1, 0.2, 0.3, 0.4],
            sweep_eta: vec![0.05, 0.1],
            sweep_alpha: vec![2.0, 4.0],
            sweep_tau: Vec::new(),
            threads: 0,
        }
    }
}

/// Values given on the command line; `None` keeps the file or default value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub order: Option<usize>,
    pub fock_cutoff: Option<usize>,
    pub tau_max: Option<f64>,
    pub tau_steps: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing run configuration")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = o.$f.clone() { self.$f = v; })*};
        }
        set!(lambda, eta, kappa, alpha, order, fock_cutoff, tau_max, tau_steps, out_dir);
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.tau_steps < 2 {
            bail!("tau_steps must be at least 2, got {}", self.tau_steps);
        }
        if self.fock_cutoff < 16 {
            bail!("fock_cutoff must be at least 16, got {}", self.fock_cutoff);
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            bail!("lambda must be positive, got {}", self.lambda);
        }
        if !matches!(self.order, 1 | 2) {
            bail!("order must be 1 or 2, got {}", self.order);
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            bail!("tau_max must be positive, got {}", self.tau_max);
        }
        for (name, v) in [("eta", self.eta), ("kappa", self.kappa), ("alpha", self.alpha)] {
            if !v.is_finite() {
                bail!("{name} must be finite, got {v}");
            }
        }
        if self.eta < 0.0 {
            bail!("eta must be non-negative, got {}", self.eta);
        }
        let lists = [
            ("fig1_lambdas", &self.fig1_lambdas),
            ("sweep_lambda", &self.sweep_lambda),
            ("sweep_eta", &self.sweep_eta),
            ("sweep_alpha", &self.sweep_alpha),
            ("sweep_tau", &self.sweep_tau),
        ];
        for (name, list) in lists {
            if let Some(v) = list.iter().find(|v| !v.is_finite()) {
                bail!("{name} contains a non-finite value {v}");
            }
        }
        if self.fig1_lambdas.iter().chain(&self.sweep_lambda).any(|&l| l <= 0.0) {
            bail!("lambda values must be positive");
        }
        if self.sweep_tau.iter().any(|&t| t < 0.0) {
            bail!("sweep_tau values must be non-negative");
        }
        Ok(())
    }

    pub fn trunc(&self) -> anyhow::Result<TruncationConfig> {
        Ok(TruncationConfig::with_cutoff(self.fock_cutoff)?)
    }

    pub fn initial_state(&self) -> InitialStateSpec {
        match self.initial {
            InitialKind::CoherentExcited => InitialStateSpec::CoherentExcited { alpha: self.alpha },
            InitialKind::FockGround => InitialStateSpec::FockGround { n: self.initial_n },
            InitialKind::FockExcited => InitialStateSpec::FockExcited { n: self.initial_n },
        }
    }

    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }
}
