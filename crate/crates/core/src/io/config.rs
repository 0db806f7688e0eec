//! Run configuration: bracketed-section key/value text (a TOML subset).
//!
//! Every section and key is optional; omitted values take the defaults of
//! the `Default` impls below. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{SourceExpr, SpatialExpr};
use crate::galerkin::{PhysicalParams, ProblemData, Scheme};
use crate::potentials::{PotentialSpec, YosidaParams};
use crate::spectral::{BoxDomain, SpectralBasis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub dim: usize,
    pub lengths: Vec<f64>,
    /// Quadrature points per axis.
    pub grid: usize,
    pub n_modes: usize,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            dim: 1,
            lengths: vec![1.0],
            grid: 64,
            n_modes: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Regular,
    Logarithmic,
    DoubleObstacle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    pub eps: f64,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            kind: PotentialKind::Regular,
            c1: None,
            c2: None,
            eps: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub f: SourceExpr,
    pub g: SourceExpr,
    pub phi0: SpatialExpr,
    pub w0: SpatialExpr,
    pub w1: SpatialExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt: 0.01,
            scheme: Scheme::SemiImplicit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Verify,
    Converge,
    Depend,
}

/// Sub-parameters of the experiments; each command reads only its own keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    /// Mode-count schedule of `converge modes`; the last entry is the reference.
    pub modes: Vec<usize>,
    /// `eps` schedule of `converge eps`.
    pub eps: Vec<f64>,
    /// Step schedule of `converge dt`.
    pub dt: Vec<f64>,
    /// Sample points per potential and `eps` in `verify potentials`.
    pub samples: usize,
    /// `eps` values of `verify potentials`.
    pub eps_values: Vec<f64>,
    /// Random trials in `verify spectral` and `verify elliptic`.
    pub trials: usize,
    /// Mode counts checked by `verify spectral`.
    pub spectral_modes: Vec<usize>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Simulate,
            modes: vec![4, 8, 16, 32],
            eps: vec![0.2, 0.1, 0.05, 0.025],
            dt: vec![1e-2, 5e-3, 2.5e-3],
            samples: 10_000,
            eps_values: vec![0.5, 0.1, 0.01],
            trials: 20,
            spectral_modes: vec![8, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    /// Subset of `csv`, `json`.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: "output".into(),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub physics: PhysicalParams,
    pub potential: PotentialSection,
    pub data: DataSection,
    pub time: TimeSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = RunConfig::from_toml_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Parses without validating.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().trim().to_string(),
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(value.clone()).map_err(|e| Error::Config(format!("config echo: {e}")))
    }

    pub fn box_domain(&self) -> Result<BoxDomain> {
        let d = &self.domain;
        if d.lengths.len() != d.dim {
            return Err(Error::Config(format!(
                "domain: dim = {} but {} lengths given",
                d.dim,
                d.lengths.len()
            )));
        }
        BoxDomain::new(&d.lengths, d.grid)
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        SpectralBasis::build(&self.box_domain()?, self.domain.n_modes)
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let p = &self.potential;
        match p.kind {
            PotentialKind::Regular => Ok(PotentialSpec::Regular),
            PotentialKind::Logarithmic => PotentialSpec::logarithmic(p.c1.unwrap_or(1.5)),
            PotentialKind::DoubleObstacle => PotentialSpec::double_obstacle(p.c2.unwrap_or(1.0)),
        }
    }

    pub fn yosida(&self) -> Result<YosidaParams> {
        YosidaParams::new(self.potential.eps)
    }

    pub fn problem(&self) -> Result<ProblemData> {
        Ok(ProblemData {
            params: self.physics,
            potential: self.potential_spec()?,
            eps: self.yosida()?,
            f: self.data.f.clone(),
            g: self.data.g.clone(),
            phi0: self.data.phi0.clone(),
            w0: self.data.w0.clone(),
            w1: self.data.w1.clone(),
            t_final: self.time.t_final,
        })
    }

    /// Structural errors first (they make the modeling checks meaningless),
    /// then every violated modeling assumption at once.
    pub fn validate(&self) -> Result<()> {
        let basis = self.basis()?;
        if !(self.time.dt > 0.0 && self.time.dt.is_finite()) {
            return Err(Error::Config(format!("time step dt = {} must be positive", self.time.dt)));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(Error::Config(format!("unknown output format {f:?}")));
            }
        }
        let data = self.problem()?;
        data.validate(basis.domain())
    }

    pub fn warnings(&self) -> Vec<String> {
        self.physics.warnings()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::AssumptionTag;

    const MINIMAL: &str = "[data]\nphi0 = { constant = 0.3 }\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.domain, DomainSection::default());
        assert_eq!(c.time.scheme, Scheme::SemiImplicit);
        assert_eq!(c.data.phi0.constant, 0.3);
        assert!(c.data.f.is_zero());
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
# two-dimensional run
[domain]
dim = 2
lengths = [1.0, 2]
grid = 32
n_modes = 12

[physics]
gamma = 2.0
a = 0.5
b = 1.0
kappa1 = 1.0
kappa2 = 0.5
lambda = 2.0

[potential]
kind = "logarithmic"
c1 = 1.2
eps = 0.05

[data]
phi0 = { constant = 0.1, modes = [{ k = [1, 0], amp = 0.2 }] }
f = [{ constant = 0.3, schedule = [[0.0, 1.0], [0.5, 0.0]] }]
g = [{ modes = [{ k = [0, 1], amp = 1.0 }] }]

[time]
t_final = 0.5
dt = 0.005
scheme = "backward_euler"
"#;
        let c = RunConfig::from_toml_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.domain.lengths, vec![1.0, 2.0]);
        assert_eq!(c.time.scheme, Scheme::BackwardEuler);
        assert_eq!(c.data.f.mean_at(0.7), 0.0);
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "[domain]\ndim = 1\ngrid = \"many\"\n";
        match RunConfig::from_toml_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml_str("[physics]\ngama = 1.0\n") {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("gama"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_gamma_is_tagged() {
        let c = RunConfig::from_toml_str("[physics]\ngamma = 0.0\n").unwrap();
        match c.validate() {
            Err(Error::Validation(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].tag, AssumptionTag::Constants);
                assert!(v[0].to_string().starts_with("(2.5) positive constants"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn logarithmic_amplitude_out_of_range_is_tagged() {
        let text = "[potential]\nkind = \"logarithmic\"\n[data]\nphi0 = { modes = [{ k = [1], amp = 1.2 }] }\n";
        match RunConfig::from_toml_str(text).unwrap().validate() {
            Err(Error::Validation(v)) => {
                assert_eq!(v.len(), 2);
                assert!(v.iter().all(|x| x.tag == AssumptionTag::Compatibility));
                assert!(v[1].to_string().starts_with("(2.14) compatibility: max phi0 = 1.2"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors_are_untagged() {
        let c = RunConfig::from_toml_str("[domain]\ngrid = 8\nn_modes = 16\n").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = RunConfig::from_toml_str("[potential]\neps = 1.5\n").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn toml_and_json_round_trip() {
        let mut c = RunConfig::from_toml_str(MINIMAL).unwrap();
        c.data.f = SourceExpr::scheduled(SpatialExpr::constant(0.1).with_mode(&[2], 0.1), vec![[0.0, 1.0], [0.25, -1.0]]);
        c.physics.gamma = 0.1 + 0.2;
        let again = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, c);
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(RunConfig::from_json(&json).unwrap(), c);
    }
}
