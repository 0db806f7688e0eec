//! Closed vocabulary for data functions: constants plus finite cosine sums,
//! optionally multiplied by piecewise-constant time schedules.
//!
//! Every term is a Neumann eigenfunction up to scaling, so projections and
//! means are computed exactly from the terms rather than by quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{BoxDomain, Coeffs, Field, Mode, SpectralBasis};

/// `amp * prod_i cos(k_i pi x_i / L_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineTerm {
    pub k: Vec<usize>,
    pub amp: f64,
}

impl CosineTerm {
    fn mode(&self, dim: usize) -> Result<Mode> {
        if self.k.len() != dim {
            return Err(Error::Config(format!(
                "cosine term {:?} has {} indices on a {dim}-d domain",
                self.k,
                self.k.len()
            )));
        }
        Ok([self.k[0], if dim == 2 { self.k[1] } else { 0 }])
    }

    fn eval(&self, domain: &BoxDomain, x: [f64; 2]) -> f64 {
        let mut v = self.amp;
        for (i, (&k, l)) in self.k.iter().zip(domain.lengths()).enumerate() {
            if k != 0 {
                v *= (k as f64 * std::f64::consts::PI * x[i] / l).cos();
            }
        }
        v
    }
}

/// Time-independent data function. A bare number deserializes as a constant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, from = "SpatialRepr")]
pub struct SpatialExpr {
    #[serde(default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<CosineTerm>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpatialRepr {
    Number(f64),
    Table(SpatialTable),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpatialTable {
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    modes: Vec<CosineTerm>,
}

impl From<SpatialRepr> for SpatialExpr {
    fn from(r: SpatialRepr) -> Self {
        match r {
            SpatialRepr::Number(c) => Self::constant(c),
            SpatialRepr::Table(t) => Self {
                constant: t.constant,
                modes: t.modes,
            },
        }
    }
}

impl SpatialExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            modes: Vec::new(),
        }
    }

    /// Adds `amp * cos` of the given multi-index.
    pub fn with_mode(mut self, k: &[usize], amp: f64) -> Self {
        self.modes.push(CosineTerm { k: k.to_vec(), amp });
        self
    }

    pub fn check(&self, domain: &BoxDomain) -> Result<()> {
        if !self.constant.is_finite() {
            return Err(Error::Config("non-finite constant".into()));
        }
        for t in &self.modes {
            t.mode(domain.dim())?;
            if !t.amp.is_finite() {
                return Err(Error::Config(format!("non-finite amplitude in term {:?}", t.k)));
            }
        }
        Ok(())
    }

    pub fn eval(&self, domain: &BoxDomain, x: [f64; 2]) -> f64 {
        self.constant + self.modes.iter().map(|t| t.eval(domain, x)).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.constant
            + self
                .modes
                .iter()
                .filter(|t| t.k.iter().all(|&k| k == 0))
                .map(|t| t.amp)
                .sum::<f64>()
    }

    pub fn to_field(&self, basis: &SpectralBasis) -> Field {
        Field::from_fn(basis.domain(), |x| self.eval(basis.domain(), x))
    }

    /// Exact `P_n` projection; terms outside `V_n` are dropped.
    pub fn project(&self, basis: &SpectralBasis) -> Result<Coeffs> {
        let domain = basis.domain();
        let mut c = basis.constant_coeffs(self.constant);
        for t in &self.modes {
            let m = t.mode(domain.dim())?;
            if let Some(j) = basis.index_of(m) {
                c[j] += t.amp * domain.cosine_to_eigen(m);
            }
        }
        Ok(c)
    }

    /// Min and max over a vertex grid that includes the boundary, where
    /// cosine terms attain their extrema.
    pub fn range(&self, domain: &BoxDomain) -> (f64, f64) {
        if self.modes.is_empty() {
            return (self.constant, self.constant);
        }
        let res = if domain.dim() == 1 {
            (4 * domain.grid_points_per_axis()).max(512)
        } else {
            (2 * domain.grid_points_per_axis()).max(128)
        };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let ls = domain.lengths();
        let ys = if domain.dim() == 2 { res } else { 0 };
        for i in 0..=res {
            for j in 0..=ys {
                let x = [
                    ls[0] * i as f64 / res as f64,
                    if domain.dim() == 2 { ls[1] * j as f64 / res as f64 } else { 0.0 },
                ];
                let v = self.eval(domain, x);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    pub fn sup_norm(&self, domain: &BoxDomain) -> f64 {
        let (lo, hi) = self.range(domain);
        lo.abs().max(hi.abs())
    }
}

/// One space-time component `s(t) * X(x)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceComponent {
    #[serde(default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<CosineTerm>,
    /// `[t_start, multiplier]` pairs; empty means multiplier 1 for all times.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<[f64; 2]>,
}

impl SourceComponent {
    pub fn spatial(&self) -> SpatialExpr {
        SpatialExpr {
            constant: self.constant,
            modes: self.modes.clone(),
        }
    }

    pub fn multiplier(&self, t: f64) -> f64 {
        if self.schedule.is_empty() {
            return 1.0;
        }
        let mut v = self.schedule[0][1];
        for s in &self.schedule {
            if s[0] <= t {
                v = s[1];
            } else {
                break;
            }
        }
        v
    }
}

/// Sum of space-time components; the empty sum is the zero function.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceExpr(pub Vec<SourceComponent>);

impl SourceExpr {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    /// Time-independent source.
    pub fn steady(x: SpatialExpr) -> Self {
        Self(vec![SourceComponent {
            constant: x.constant,
            modes: x.modes,
            schedule: Vec::new(),
        }])
    }

    pub fn scheduled(x: SpatialExpr, schedule: Vec<[f64; 2]>) -> Self {
        Self(vec![SourceComponent {
            constant: x.constant,
            modes: x.modes,
            schedule,
        }])
    }

    /// Sum of two sources.
    pub fn plus(&self, other: &SourceExpr) -> Self {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Self(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| {
            c.constant == 0.0 && c.modes.iter().all(|t| t.amp == 0.0)
                || c.schedule.iter().all(|s| s[1] == 0.0) && !c.schedule.is_empty()
        })
    }

    pub fn check(&self, domain: &BoxDomain) -> Result<()> {
        for c in &self.0 {
            c.spatial().check(domain)?;
            if let Some(first) = c.schedule.first() {
                if first[0] != 0.0 {
                    return Err(Error::Config("time schedule must start at t = 0".into()));
                }
            }
            if c.schedule.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                return Err(Error::Config("time schedule must be strictly increasing".into()));
            }
            if c.schedule.iter().any(|s| !(s[0].is_finite() && s[1].is_finite())) {
                return Err(Error::Config("time schedule entries must be finite".into()));
            }
        }
        Ok(())
    }

    /// Frozen spatial function at time `t`.
    pub fn at(&self, t: f64) -> SpatialExpr {
        let mut out = SpatialExpr::default();
        for c in &self.0 {
            let m = c.multiplier(t);
            out.constant += m * c.constant;
            out.modes
                .extend(c.modes.iter().map(|x| CosineTerm { k: x.k.clone(), amp: m * x.amp }));
        }
        out
    }

    pub fn mean_at(&self, t: f64) -> f64 {
        self.0.iter().map(|c| c.multiplier(t) * c.spatial().mean()).sum()
    }

    pub fn project_at(&self, basis: &SpectralBasis, t: f64) -> Result<Coeffs> {
        let mut acc = Coeffs::zeros(basis.n());
        for c in &self.0 {
            let m = c.multiplier(t);
            if m != 0.0 {
                acc.0 += c.spatial().project(basis)?.0 * m;
            }
        }
        Ok(acc)
    }

    pub fn field_at(&self, basis: &SpectralBasis, t: f64) -> Field {
        self.at(t).to_field(basis)
    }

    /// Schedule breakpoints strictly inside `(0, t_end)`, sorted.
    pub fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .0
            .iter()
            .flat_map(|c| c.schedule.iter().map(|s| s[0]))
            .filter(|&t| t > 0.0 && t < t_end)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `sup |f|` over `Omega x [0, t_end]`.
    pub fn sup_norm(&self, domain: &BoxDomain, t_end: f64) -> f64 {
        std::iter::once(0.0)
            .chain(self.breakpoints(t_end))
            .map(|t| self.at(t).sup_norm(domain))
            .fold(0.0, f64::max)
    }

    /// `int_0^t exp(-gamma (t - s)) mean(s) ds`, exact for piecewise-constant schedules.
    pub fn decayed_mean_integral(&self, gamma: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut knots = vec![0.0];
        knots.extend(self.breakpoints(t));
        knots.push(t);
        knots
            .windows(2)
            .map(|w| {
                let m = self.mean_at(w[0]);
                m * ((-gamma * (t - w[1])).exp() - (-gamma * (t - w[0])).exp()) / gamma
            })
            .sum()
    }
}
