//! TOML experiment configuration and cross-field validation.

use nls_core::ansatz::AnsatzMode;
use nls_core::grid::AxisSym;
use nls_core::reduced_energy::{CrossKind, ExponentMode, InteractionKind};
use nls_core::{CoupledAmplitudes, Error, PotentialModel, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: String,
    pub potentials: PotentialsBlock,
    pub amplitudes: AmplitudesBlock,
    #[serde(default)]
    pub ansatz: AnsatzBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub scan: ScanBlock,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub pohozaev: PohozaevBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsBlock {
    pub p: PotentialSpec,
    pub q: PotentialSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "four")]
    pub m: f64,
    #[serde(default = "tenth")]
    pub c: f64,
    /// Constant-potential value.
    #[serde(default = "one")]
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudesBlock {
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzBlock {
    pub k: usize,
    /// Rescaled ring radius; 0 selects the window midpoint.
    pub r: f64,
    pub epsilon: f64,
    /// "sync" or "seg".
    pub mode: String,
    pub rho: Option<f64>,
    /// "none" or "two-spike".
    pub inner: String,
    /// Window half-width δ.
    pub delta: f64,
}

impl Default for AnsatzBlock {
    fn default() -> Self {
        AnsatzBlock {
            k: 6,
            r: 0.0,
            epsilon: 1.0,
            mode: "sync".into(),
            rho: None,
            inner: "none".into(),
            delta: nls_core::ansatz::DEFAULT_DELTA,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    /// 0 selects configuration radius + box margin.
    pub half_width: f64,
    pub resolution: f64,
    pub tol: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            half_width: 0.0,
            resolution: 0.25,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanBlock {
    pub k_values: Vec<usize>,
    pub samples: usize,
    /// "exact", "paper-half", "paper-full".
    pub exponent_mode: String,
    /// "nearest", "all-pairs".
    pub interaction: String,
    /// "envelope", "pair-integral".
    pub cross: String,
}

impl Default for ScanBlock {
    fn default() -> Self {
        ScanBlock {
            k_values: vec![16, 32, 64],
            samples: 400,
            exponent_mode: "exact".into(),
            interaction: "nearest".into(),
            cross: "pair-integral".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumBlock {
    pub count: usize,
    /// "full", "even", "even-rot".
    pub subspace: String,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        SpectrumBlock {
            count: 6,
            subspace: "even".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PohozaevBlock {
    pub delta: f64,
    pub axis: usize,
    pub center: [f64; 3],
}

impl Default for PohozaevBlock {
    fn default() -> Self {
        PohozaevBlock {
            delta: 0.0,
            axis: 0,
            center: [0.0; 3],
        }
    }
}

fn default_kind() -> String {
    "builtin".into()
}
fn one() -> f64 {
    1.0
}
fn four() -> f64 {
    4.0
}
fn tenth() -> f64 {
    0.1
}

pub const TASKS: [&str; 8] = [
    "ground-state",
    "reduced-scan",
    "solve",
    "spectrum",
    "pohozaev",
    "decay",
    "full-pipeline",
    "asymptotics",
];

fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| cfg_err("<toml>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !TASKS.contains(&self.task.as_str()) {
            return Err(cfg_err("task", format!("unknown task `{}`", self.task)));
        }
        self.potential("potentials.p", &self.potentials.p)?;
        self.potential("potentials.q", &self.potentials.q)?;
        // β admissibility uses the same check the library raises
        nls_core::coupled_amplitudes(self.amplitudes.mu1, self.amplitudes.mu2, self.amplitudes.beta)
            .map_err(|e| cfg_err("amplitudes.beta", e.to_string()))?;
        if self.ansatz.mode != "sync" && self.ansatz.mode != "seg" {
            return Err(cfg_err("ansatz.mode", "must be \"sync\" or \"seg\""));
        }
        if self.ansatz.mode == "seg" && self.ansatz.rho.is_none() {
            return Err(cfg_err("ansatz.rho", Error::MissingRho.to_string()));
        }
        if self.ansatz.inner != "none" && self.ansatz.inner != "two-spike" {
            return Err(cfg_err("ansatz.inner", "must be \"none\" or \"two-spike\""));
        }
        if !(self.ansatz.epsilon > 0.0) {
            return Err(cfg_err("ansatz.epsilon", "must be positive"));
        }
        if self.ansatz.k >= 2 {
            let m = self.potentials.p.m.min(self.potentials.q.m);
            nls_core::ansatz::default_window(self.ansatz.k, m, self.ansatz.delta)
                .map_err(|e| cfg_err("ansatz.delta", e.to_string()))?;
        }
        if !(self.solver.resolution > 0.0) {
            return Err(cfg_err("solver.resolution", "must be positive"));
        }
        self.exponent_mode()?;
        self.interaction_kind()?;
        self.cross_kind()?;
        self.subspace()?;
        Ok(())
    }

    fn potential(&self, field: &str, spec: &PotentialSpec) -> Result<()> {
        self.build_potential(spec)
            .map_err(|e| cfg_err(field, e.to_string()))
            .map(|_| ())
    }

    pub fn build_potential(&self, spec: &PotentialSpec) -> Result<PotentialModel> {
        match spec.kind.as_str() {
            "builtin" => nls_core::builtin_potential(spec.a, spec.m, spec.c),
            "constant" => Ok(PotentialModel::constant(spec.value)),
            "power" => Ok(PotentialModel::synthetic_power(spec.a, spec.m)),
            other => Err(Error::InvalidArgument(format!("unknown potential kind `{other}`"))),
        }
    }

    pub fn amplitudes(&self) -> Result<CoupledAmplitudes> {
        nls_core::coupled_amplitudes(self.amplitudes.mu1, self.amplitudes.mu2, self.amplitudes.beta)
    }

    pub fn ansatz_mode(&self) -> AnsatzMode {
        if self.ansatz.mode == "seg" {
            AnsatzMode::Segregated
        } else {
            AnsatzMode::Synchronized
        }
    }

    pub fn exponent_mode(&self) -> Result<ExponentMode> {
        match self.scan.exponent_mode.as_str() {
            "exact" => Ok(ExponentMode::ExactChord),
            "paper-half" => Ok(ExponentMode::PaperHalf),
            "paper-full" => Ok(ExponentMode::PaperFull),
            other => Err(cfg_err(
                "scan.exponent_mode",
                format!("unknown exponent mode `{other}`"),
            )),
        }
    }

    pub fn interaction_kind(&self) -> Result<InteractionKind> {
        match self.scan.interaction.as_str() {
            "nearest" => Ok(InteractionKind::Nearest),
            "all-pairs" => Ok(InteractionKind::AllPairs),
            other => Err(cfg_err("scan.interaction", format!("unknown interaction `{other}`"))),
        }
    }

    pub fn cross_kind(&self) -> Result<CrossKind> {
        match self.scan.cross.as_str() {
            "envelope" => Ok(CrossKind::PaperEnvelope),
            "pair-integral" => Ok(CrossKind::PairIntegral),
            other => Err(cfg_err("scan.cross", format!("unknown cross kind `{other}`"))),
        }
    }

    pub fn subspace(&self) -> Result<nls_core::spectral::Subspace> {
        use nls_core::spectral::Subspace;
        match self.spectrum.subspace.as_str() {
            "full" => Ok(Subspace::Full),
            "even" => Ok(Subspace::EvenX2X3),
            "even-rot" => Ok(Subspace::EvenX2X3AndRotation(self.ansatz.k)),
            other => Err(cfg_err("spectrum.subspace", format!("unknown subspace `{other}`"))),
        }
    }

    /// Grid symmetry for solves: even-even whenever the configuration is
    /// reflection symmetric (rings and axis-aligned inner pairs are).
    pub fn grid_sym(&self) -> (AxisSym, AxisSym) {
        (AxisSym::Even, AxisSym::Even)
    }
}
