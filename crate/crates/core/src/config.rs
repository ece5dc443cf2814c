//! JSON run configuration shared by the command-line tools.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::DtRule;
use crate::assembly::FlowBoundary;
use crate::constitutive::LawKind;
use crate::error::{Error, Result};
use crate::export::ExportFormat;
use crate::manufactured::CaseKind;
use crate::params::PhysicalParams;
use crate::solver::{SolverConfig, DEFAULT_ANDERSON_DEPTH};

/// Problem to solve: a manufactured case or the all-zero problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    Test1,
    Test2,
    Zero,
}

impl CaseName {
    pub fn manufactured(self) -> Option<CaseKind> {
        match self {
            CaseName::Test1 => Some(CaseKind::Test1),
            CaseName::Test2 => Some(CaseKind::Test2),
            CaseName::Zero => None,
        }
    }
}

impl std::str::FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test1" => Ok(CaseName::Test1),
            "test2" => Ok(CaseName::Test2),
            "zero" => Ok(CaseName::Zero),
            _ => Err(Error::config("case", format!("unknown case `{s}` (expected test1, test2 or zero)"))),
        }
    }
}

/// Time step: `"h2"` for `dt = h²`, a number, or a list (temporal study).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Rule(DtKeyword),
    Fixed(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DtKeyword {
    #[serde(rename = "h2")]
    HSquared,
}

impl Default for DtSpec {
    fn default() -> Self {
        DtSpec::Rule(DtKeyword::HSquared)
    }
}

impl std::str::FromStr for DtSpec {
    type Err = Error;

    /// `h2`, a number, a fraction `1/40`, or a comma-separated list of those.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "h2" {
            return Ok(DtSpec::Rule(DtKeyword::HSquared));
        }
        let parse_one = |v: &str| -> Result<f64> {
            let v = v.trim();
            let parsed = match v.split_once('/') {
                Some((a, b)) => a.trim().parse::<f64>().ok().zip(b.trim().parse::<f64>().ok()).map(|(a, b)| a / b),
                None => v.parse::<f64>().ok(),
            };
            parsed.ok_or_else(|| Error::config("dt", format!("cannot parse `{v}` as a time step")))
        };
        let values = s.split(',').map(parse_one).collect::<Result<Vec<_>>>()?;
        Ok(match values.as_slice() {
            [one] => DtSpec::Fixed(*one),
            _ => DtSpec::List(values),
        })
    }
}

/// Partial overrides of the case's physical parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(rename = "E")]
    pub young: Option<f64>,
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
    pub c0: Option<f64>,
    #[serde(rename = "K")]
    pub permeability: Option<f64>,
    pub mu_f: Option<f64>,
    pub rho_f_g: Option<[f64; 2]>,
}

impl ParamOverrides {
    pub fn apply(&self, base: PhysicalParams) -> PhysicalParams {
        PhysicalParams {
            young: self.young.unwrap_or(base.young),
            poisson: self.nu.unwrap_or(base.poisson),
            alpha: self.alpha.unwrap_or(base.alpha),
            c0: self.c0.unwrap_or(base.c0),
            permeability: self.permeability.unwrap_or(base.permeability),
            mu_f: self.mu_f.unwrap_or(base.mu_f),
            rho_f_g: self.rho_f_g.unwrap_or(base.rho_f_g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSettings {
    pub tol: f64,
    pub max_iterations: usize,
    pub anderson_depth: usize,
    pub extrapolate: bool,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 50,
            anderson_depth: DEFAULT_ANDERSON_DEPTH,
            extrapolate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub case: CaseName,
    /// Defaults to the case's own law (`linear` for the zero case).
    pub law: Option<LawKind>,
    pub params: ParamOverrides,
    pub theta: f64,
    /// Subdivisions per side; `solve` uses a single level.
    pub levels: Vec<usize>,
    pub dt: DtSpec,
    pub t_end: f64,
    pub picard: PicardSettings,
    pub reuse_factorization: bool,
    pub c_stab: f64,
    pub allow_unstable_dt: bool,
    pub boundary: FlowBoundary,
    pub output_dir: PathBuf,
    pub export: Vec<ExportFormat>,
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: CaseName::Test1,
            law: None,
            params: ParamOverrides::default(),
            theta: 1.0,
            levels: vec![4],
            dt: DtSpec::default(),
            t_end: 1.0,
            picard: PicardSettings::default(),
            reuse_factorization: true,
            c_stab: 1.0,
            allow_unstable_dt: false,
            boundary: FlowBoundary::DirichletXiEta,
            output_dir: PathBuf::from("out"),
            export: Vec::new(),
            deterministic: false,
        }
    }
}

fn key_of(path: &serde_path_to_error::Path) -> String {
    let s = path.to_string();
    if s == "." || s == "?" || s.is_empty() {
        "<root>".into()
    } else {
        s
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without the cross-field checks of [`RunConfig::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = key_of(e.path());
            let inner = e.inner().to_string();
            Error::config(key, inner)
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta != 0.0 && self.theta != 1.0 {
            return Err(Error::config("theta", format!("must be 0 or 1 (got {})", self.theta)));
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(Error::config("levels", "must be a nonempty list of positive subdivision counts"));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::config("t_end", "must be positive"));
        }
        match &self.dt {
            DtSpec::Fixed(dt) if !(*dt > 0.0) || !dt.is_finite() => {
                return Err(Error::config("dt", "must be positive"));
            }
            DtSpec::List(v) if v.is_empty() || v.iter().any(|dt| !(*dt > 0.0) || !dt.is_finite()) => {
                return Err(Error::config("dt", "list entries must be positive"));
            }
            _ => {}
        }
        if !(self.picard.tol > 0.0) {
            return Err(Error::config("picard.tol", "must be positive"));
        }
        if self.picard.max_iterations == 0 {
            return Err(Error::config("picard.max_iterations", "must be at least 1"));
        }
        if !(self.c_stab > 0.0) {
            return Err(Error::config("c_stab", "must be positive"));
        }
        self.physical_params()
            .derived()
            .map_err(|e| Error::config("params", e.to_string()))?;
        Ok(())
    }

    pub fn law(&self) -> LawKind {
        self.law.unwrap_or(match self.case.manufactured() {
            Some(kind) => kind.law(),
            None => LawKind::Linear,
        })
    }

    pub fn physical_params(&self) -> PhysicalParams {
        let base = match self.case.manufactured() {
            Some(kind) => kind.default_params(),
            None => PhysicalParams::test1(),
        };
        self.params.apply(base)
    }

    /// Time-step rule of a spatial study.
    pub fn dt_rule(&self) -> Result<DtRule> {
        match &self.dt {
            DtSpec::Rule(DtKeyword::HSquared) => Ok(DtRule::HSquared),
            DtSpec::Fixed(dt) => Ok(DtRule::Fixed(*dt)),
            DtSpec::List(_) => Err(Error::config("dt", "a list of time steps only applies to a temporal study")),
        }
    }

    /// Solver settings with `dt` filled in for `n` subdivisions.
    pub fn solver_config(&self, n: usize) -> Result<SolverConfig> {
        let dt = self.dt_rule()?.dt(n);
        Ok(self.solver_config_with_dt(dt))
    }

    pub fn solver_config_with_dt(&self, dt: f64) -> SolverConfig {
        SolverConfig {
            theta: self.theta,
            dt,
            t_end: self.t_end,
            picard_tol: self.picard.tol,
            picard_max: self.picard.max_iterations,
            anderson_depth: self.picard.anderson_depth,
            reuse_factorization: self.reuse_factorization,
            extrapolate: self.picard.extrapolate,
            c_stab: self.c_stab,
            allow_unstable_dt: self.allow_unstable_dt,
            deterministic: self.deterministic,
        }
    }
}
