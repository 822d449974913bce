//! Experiment specifications: a flat TOML table merged with `key=value`
//! overrides from the command line.

use std::str::FromStr;

use crcm::geometry::Aabb;
use crcm::mcmc::ChainOptions;
use crcm::model::{ModelParams, RadiusLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SamplePoisson,
    SampleCrcm,
    SampleWr,
    GnzCheck,
    FkCheck,
    DlrCheck,
    BoundsAudit,
    Localization,
    Shield,
    EntropyBounds,
    NpDecay,
    CoverageProbe,
}

impl Command {
    pub const ALL: [Command; 12] = [
        Command::SamplePoisson,
        Command::SampleCrcm,
        Command::SampleWr,
        Command::GnzCheck,
        Command::FkCheck,
        Command::DlrCheck,
        Command::BoundsAudit,
        Command::Localization,
        Command::Shield,
        Command::EntropyBounds,
        Command::NpDecay,
        Command::CoverageProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SamplePoisson => "sample-poisson",
            Command::SampleCrcm => "sample-crcm",
            Command::SampleWr => "sample-wr",
            Command::GnzCheck => "gnz-check",
            Command::FkCheck => "fk-check",
            Command::DlrCheck => "dlr-check",
            Command::BoundsAudit => "bounds-audit",
            Command::Localization => "localization",
            Command::Shield => "shield",
            Command::EntropyBounds => "entropy-bounds",
            Command::NpDecay => "np-decay",
            Command::CoverageProbe => "coverage-probe",
        }
    }
}

impl FromStr for Command {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| LabError::Spec(format!("unknown subcommand `{s}`")))
    }
}

/// Which model a model-agnostic subcommand acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Crcm,
    Wr,
}

/// Every tunable of every subcommand; irrelevant keys are ignored by the
/// subcommands that do not use them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub z: f64,
    pub q: f64,
    pub law: RadiusLaw,
    #[serde(alias = "d")]
    pub dim: usize,
    /// The window is the cube `[window_lo, window_hi]^dim`.
    pub window_lo: f64,
    pub window_hi: f64,
    pub seed: u64,
    pub chains: usize,
    pub burn_in: u64,
    pub samples: usize,
    /// Sweeps between samples; absent means automatic.
    pub thin: Option<usize>,
    pub pilot_sweeps: usize,
    /// Stop after this many sweeps per chain and write a checkpoint.
    pub halt_after: Option<u64>,
    pub model: ModelKind,
    /// Half side of the cube `Λ` centred in the window.
    pub lambda_half: f64,
    /// Radius bound `R0`; defaults to the law's largest radius.
    pub r0: Option<f64>,
    pub z_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// Shorthand for a one-point `y_grid`.
    pub y: Option<f64>,
    pub ij_pairs: Vec<[f64; 2]>,
    pub alpha: u32,
    pub k: u32,
    /// Half side of the box in the entropy packing bound.
    pub n: u32,
    /// Minus-sampling margin; defaults to the 99th percentile radius.
    pub border: Option<f64>,
    pub configs: usize,
    pub resamples: usize,
    /// Randomized balls in the shield covering test.
    pub trials: usize,
    /// Random configurations in the shield locality test.
    pub locality_trials: usize,
    pub pairs: usize,
    /// Family-wise significance level of statistical checks.
    pub level: f64,
    /// Activity of the CRCM side of `fk-check`; absent means `z/q`.
    pub crcm_z: Option<f64>,
    pub inner_draws: usize,
    /// Cells per axis of the heat-bath partition.
    pub per_axis: usize,
    /// Grid points per axis of the coverage probe; default depends on `dim`.
    pub probe_points: Option<usize>,
    pub eps: f64,
    pub truncation: Option<f64>,
    /// Also run the Widom-Rowlinson sampler in `entropy-bounds`.
    pub col_check: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            z: 1.0,
            q: 1.0,
            law: RadiusLaw::Dirac(0.05),
            dim: 2,
            window_lo: 0.0,
            window_hi: 1.0,
            seed: 0,
            chains: 4,
            burn_in: 1_000,
            samples: 500,
            thin: None,
            pilot_sweeps: 200,
            halt_after: None,
            model: ModelKind::Crcm,
            lambda_half: 0.25,
            r0: None,
            z_grid: vec![],
            y_grid: vec![10.0],
            y: None,
            ij_pairs: vec![],
            alpha: 1,
            k: 4,
            n: 50,
            border: None,
            configs: 10_000,
            resamples: 20,
            trials: 100_000,
            locality_trials: 1_000,
            pairs: 8,
            level: 0.01,
            crcm_z: None,
            inner_draws: 200,
            per_axis: 3,
            probe_points: None,
            eps: 1e-3,
            truncation: None,
            col_check: false,
        }
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a plain string.
fn override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl ExperimentSpec {
    /// Builds a spec from an optional base spec, an optional TOML document
    /// and `key=value` overrides, later sources winning.
    pub fn from_sources(
        base: Option<&ExperimentSpec>,
        document: Option<&str>,
        overrides: &[String],
    ) -> Result<Self, LabError> {
        let mut table = match base {
            Some(b) => toml::Table::try_from(b).map_err(|e| LabError::Spec(e.to_string()))?,
            None => toml::Table::new(),
        };
        if let Some(text) = document {
            let doc = text
                .parse::<toml::Table>()
                .map_err(|e| LabError::Spec(format!("config file: {e}")))?;
            table.extend(doc);
        }
        for kv in overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| LabError::Spec(format!("override `{kv}` is not key=value")))?;
            table.insert(k.trim().replace('-', "_"), override_value(v.trim()));
        }
        let mut spec: ExperimentSpec = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| LabError::Spec(e.message().to_string()))?;
        if let Some(y) = spec.y.take() {
            spec.y_grid = vec![y];
        }
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::Spec(m));
        if !(self.window_lo < self.window_hi) {
            return bad(format!("window_lo {} must be below window_hi {}", self.window_lo, self.window_hi));
        }
        if self.chains == 0 {
            return bad("chains must be at least 1".into());
        }
        if self.thin == Some(0) {
            return bad("thin must be at least 1".into());
        }
        if !(0.0 < self.level && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        Ok(())
    }

    pub fn window(&self) -> Result<Aabb, LabError> {
        Ok(Aabb::cube(self.dim, self.window_lo, self.window_hi)?)
    }

    pub fn params(&self) -> Result<ModelParams, LabError> {
        Ok(ModelParams::new(self.z, self.q, self.law, self.window()?)?)
    }

    /// `Λ`: cube of half side `lambda_half` at the window centre.
    pub fn lambda(&self) -> Result<Aabb, LabError> {
        let w = self.window()?;
        let lam = Aabb::centered(self.dim, self.lambda_half)?.translated(w.center().coords());
        if !lam.is_inside(&w) {
            return Err(LabError::Spec(format!("lambda_half {} does not fit the window", self.lambda_half)));
        }
        Ok(lam)
    }

    pub fn r0(&self) -> Result<f64, LabError> {
        match (self.r0, self.law.max_radius()) {
            (Some(r), _) => Ok(r),
            (None, Some(r)) => Ok(r),
            (None, None) => Err(LabError::Spec("r0 is required for laws with unbounded support".into())),
        }
    }

    pub fn border(&self) -> f64 {
        self.border.unwrap_or_else(|| self.law.quantile(0.99))
    }

    pub fn chain_options(&self) -> ChainOptions {
        ChainOptions {
            burn_in: self.burn_in,
            samples: self.samples,
            thin: self.thin,
            pilot_sweeps: self.pilot_sweeps,
            audit_every: 10_000,
            keep_samples: true,
        }
    }

    /// Digest of the spec and subcommand, ignoring `halt_after` so that a
    /// resumed run matches the run that wrote the checkpoint.
    pub fn hash(&self, command: Command) -> String {
        let mut s = self.clone();
        s.halt_after = None;
        let json = serde_json::to_string(&(command, &s)).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_win_over_file() {
        let doc = "z = 3.0\nlaw = \"dirac(0.1)\"\nz_grid = [1.0, 2.0]\n";
        let s = ExperimentSpec::from_sources(
            None,
            Some(doc),
            &["z=5".into(), "law=uniform(0.1, 0.2)".into(), "thin=4".into(), "model=wr".into()],
        )
        .unwrap();
        assert_eq!(s.z, 5.0);
        assert_eq!(s.law, RadiusLaw::UniformInterval(0.1, 0.2));
        assert_eq!(s.z_grid, vec![1.0, 2.0]);
        assert_eq!(s.thin, Some(4));
        assert_eq!(s.model, ModelKind::Wr);
    }

    #[test]
    fn spec_errors() {
        assert!(matches!(ExperimentSpec::from_sources(None, None, &["bogus=1".into()]), Err(LabError::Spec(_))));
        assert!(matches!(ExperimentSpec::from_sources(None, None, &["z".into()]), Err(LabError::Spec(_))));
        assert!(matches!(
            ExperimentSpec::from_sources(None, None, &["law=cauchy(1)".into()]),
            Err(LabError::Spec(_))
        ));
        let s = ExperimentSpec::from_sources(None, None, &["q=0.5".into(), "law=pareto(2)".into()]).unwrap();
        let e = s.params().unwrap().require_assumption_a().unwrap_err();
        assert!(e.to_string().contains("bounded support"));
    }

    #[test]
    fn hash_ignores_halt_after() {
        let a = ExperimentSpec::default();
        let mut b = a.clone();
        b.halt_after = Some(10);
        assert_eq!(a.hash(Command::SampleCrcm), b.hash(Command::SampleCrcm));
        assert_ne!(a.hash(Command::SampleCrcm), a.hash(Command::SampleWr));
        b.z = 2.0;
        assert_ne!(a.hash(Command::SampleCrcm), b.hash(Command::SampleCrcm));
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("sample-ising".parse::<Command>().is_err());
    }
}
