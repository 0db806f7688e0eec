//! Double-well potentials `F = beta_hat + pi_hat` and their Moreau-Yosida
//! regularization.
//!
//! `beta = d(beta_hat)` is a maximal monotone graph with `0 in beta(0)`; the
//! regularized graph `beta_eps = (I - J_eps)/eps` uses the resolvent
//! `J_eps = (I + eps*beta)^{-1}` and is single valued and `1/eps`-Lipschitz.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute stopping tolerance of the resolvent root finder.
pub const RESOLVENT_TOL: f64 = 1e-12;
/// Iteration cap of the resolvent root finder.
pub const RESOLVENT_MAX_ITER: usize = 100;
/// Relative offset used to probe just inside an open domain endpoint.
const EDGE_PROBE: f64 = 1e-15;

/// Regularization parameter of the Moreau-Yosida approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YosidaParams {
    eps: f64,
}

impl YosidaParams {
    /// Model-range parameter, `0 < eps < 1`.
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Config(format!(
                "regularization parameter eps = {eps} must lie in (0, 1)"
            )));
        }
        Ok(Self { eps })
    }

    /// Any finite `eps > 0`. The resolvent and envelope are well defined for
    /// every positive parameter; only the model itself restricts to `(0, 1)`.
    pub fn relaxed(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!(
                "regularization parameter eps = {eps} must be positive"
            )));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied decomposition. No derivatives are taken automatically; the
/// resolvent is found by bisection on the minimal section.
#[derive(Clone)]
pub struct CustomPotential {
    /// Convex part, `+inf` outside its effective domain.
    pub beta_hat: ScalarFn,
    /// Minimal section of `beta`, only evaluated inside the open domain.
    pub beta_min_section: ScalarFn,
    pub pi_hat: ScalarFn,
    pub pi: ScalarFn,
    pub pi_lipschitz: f64,
    /// Closure of `D(beta)`; infinite bounds allowed.
    pub domain: (f64, f64),
}

#[derive(Clone)]
pub enum PotentialSpec {
    /// `beta_hat = r^4/4`, `pi_hat = (1 - 2r^2)/4`.
    Regular,
    /// Entropy part on `(-1, 1)` plus `pi_hat = -c1 r^2`, `c1 > 1`.
    Logarithmic { c1: f64 },
    /// Indicator of `[-1, 1]` plus `pi_hat = -c2 r^2`, `c2 > 0`.
    DoubleObstacle { c2: f64 },
    Custom(Arc<CustomPotential>),
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Regular => write!(f, "Regular"),
            PotentialSpec::Logarithmic { c1 } => write!(f, "Logarithmic {{ c1: {c1} }}"),
            PotentialSpec::DoubleObstacle { c2 } => write!(f, "DoubleObstacle {{ c2: {c2} }}"),
            PotentialSpec::Custom(c) => write!(f, "Custom {{ domain: {:?} }}", c.domain),
        }
    }
}

/// Sampled constants for `beta_eps(r)(r - r0) >= delta0 |beta_eps(r)| - c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorBoundConstants {
    pub r_lo: f64,
    pub r_hi: f64,
    pub delta0: f64,
    pub c0: f64,
}

/// Entropy term `(1+r)ln(1+r) + (1-r)ln(1-r)` with `0 ln 0 = 0`.
fn entropy(r: f64) -> f64 {
    if r.abs() > 1.0 {
        return f64::INFINITY;
    }
    let xlog = |x: f64, l: f64| if x == 0.0 { 0.0 } else { x * l };
    xlog(1.0 + r, r.ln_1p()) + xlog(1.0 - r, (-r).ln_1p())
}

impl PotentialSpec {
    pub fn logarithmic(c1: f64) -> Result<Self> {
        if !(c1 > 1.0 && c1.is_finite()) {
            return Err(Error::Config(format!(
                "logarithmic potential needs c1 > 1, got {c1}"
            )));
        }
        Ok(PotentialSpec::Logarithmic { c1 })
    }

    pub fn double_obstacle(c2: f64) -> Result<Self> {
        if !(c2 > 0.0 && c2.is_finite()) {
            return Err(Error::Config(format!(
                "double obstacle potential needs c2 > 0, got {c2}"
            )));
        }
        Ok(PotentialSpec::DoubleObstacle { c2 })
    }

    pub fn custom(c: CustomPotential) -> Result<Self> {
        let (lo, hi) = c.domain;
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::Config(format!(
                "custom potential domain ({lo}, {hi}) must contain 0 in its interior"
            )));
        }
        if !(c.pi_lipschitz >= 0.0) {
            return Err(Error::Config("custom potential needs a Lipschitz constant >= 0".into()));
        }
        Ok(PotentialSpec::Custom(Arc::new(c)))
    }

    /// Closure of `D(beta)`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            PotentialSpec::Regular => (f64::NEG_INFINITY, f64::INFINITY),
            PotentialSpec::Logarithmic { .. } | PotentialSpec::DoubleObstacle { .. } => (-1.0, 1.0),
            PotentialSpec::Custom(c) => c.domain,
        }
    }

    pub fn is_interior(&self, r: f64) -> bool {
        let (lo, hi) = self.domain();
        r > lo && r < hi
    }

    /// Human-readable interior of the domain, e.g. `(-1, 1)`.
    pub fn interior_label(&self) -> String {
        let (lo, hi) = self.domain();
        let fmt_end = |x: f64| {
            if x.is_infinite() {
                if x > 0.0 { "+inf".to_string() } else { "-inf".to_string() }
            } else {
                format!("{x}")
            }
        };
        format!("({}, {})", fmt_end(lo), fmt_end(hi))
    }

    pub fn beta_hat(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Regular => 0.25 * r.powi(4),
            PotentialSpec::Logarithmic { .. } => entropy(r),
            PotentialSpec::DoubleObstacle { .. } => {
                if r.abs() <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            PotentialSpec::Custom(c) => (c.beta_hat)(r),
        }
    }

    pub fn pi_hat(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Regular => 0.25 * (1.0 - 2.0 * r * r),
            PotentialSpec::Logarithmic { c1 } => -c1 * r * r,
            PotentialSpec::DoubleObstacle { c2 } => -c2 * r * r,
            PotentialSpec::Custom(c) => (c.pi_hat)(r),
        }
    }

    pub fn pi(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Regular => -r,
            PotentialSpec::Logarithmic { c1 } => -2.0 * c1 * r,
            PotentialSpec::DoubleObstacle { c2 } => -2.0 * c2 * r,
            PotentialSpec::Custom(c) => (c.pi)(r),
        }
    }

    pub fn pi_derivative(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Regular => -1.0,
            PotentialSpec::Logarithmic { c1 } => -2.0 * c1,
            PotentialSpec::DoubleObstacle { c2 } => -2.0 * c2,
            PotentialSpec::Custom(c) => {
                let h = 1e-6 * (1.0 + r.abs());
                ((c.pi)(r + h) - (c.pi)(r - h)) / (2.0 * h)
            }
        }
    }

    pub fn pi_lipschitz(&self) -> f64 {
        match self {
            PotentialSpec::Regular => 1.0,
            PotentialSpec::Logarithmic { c1 } => 2.0 * c1,
            PotentialSpec::DoubleObstacle { c2 } => 2.0 * c2,
            PotentialSpec::Custom(c) => c.pi_lipschitz,
        }
    }

    /// Minimal-modulus section `beta°(r)`, `None` outside `D(beta)`.
    pub fn beta_min_section(&self, r: f64) -> Option<f64> {
        match self {
            PotentialSpec::Regular => Some(r * r * r),
            PotentialSpec::Logarithmic { .. } => (r.abs() < 1.0).then(|| 2.0 * r.atanh()),
            PotentialSpec::DoubleObstacle { .. } => (r.abs() <= 1.0).then_some(0.0),
            PotentialSpec::Custom(c) => {
                (r > c.domain.0 && r < c.domain.1).then(|| (c.beta_min_section)(r))
            }
        }
    }

    /// `F = beta_hat + pi_hat`.
    pub fn potential(&self, r: f64) -> f64 {
        self.beta_hat(r) + self.pi_hat(r)
    }

    /// Resolvent `J_eps(r)`: the unique `y` with `y + eps*beta(y) ∋ r`.
    pub fn resolvent(&self, eps: YosidaParams, r: f64) -> Result<f64> {
        let e = eps.eps();
        if r == 0.0 {
            return Ok(0.0);
        }
        match self {
            PotentialSpec::DoubleObstacle { .. } => Ok(r.clamp(-1.0, 1.0)),
            PotentialSpec::Regular => {
                // Stable Cardano start for y^3 + y/eps - r/eps = 0, then polish.
                let s = 0.5 * r.abs() / e;
                let p3 = 1.0 / (3.0 * e);
                let disc = (s * s + p3 * p3 * p3).sqrt();
                let u = (s + disc).cbrt();
                let v = p3 / u;
                let y0 = r.signum() * 2.0 * s / (u * u + u * v + v * v);
                let (lo, hi) = if r > 0.0 { (0.0, r) } else { (r, 0.0) };
                safeguarded_newton(
                    |y| (y + e * y * y * y - r, 1.0 + 3.0 * e * y * y),
                    y0.clamp(lo, hi),
                    lo,
                    hi,
                )
            }
            PotentialSpec::Logarithmic { .. } => Ok(log_resolvent_atanh(e, r)?.tanh()),
            PotentialSpec::Custom(c) => custom_resolvent(c, e, r),
        }
    }

    /// `beta_eps(r) = (r - J_eps(r))/eps`.
    pub fn yosida(&self, eps: YosidaParams, r: f64) -> Result<f64> {
        let y = self.resolvent(eps, r)?;
        Ok((r - y) / eps.eps())
    }

    /// Derivative of `beta_eps`, using `beta'(y)/(1 + eps beta'(y))` at `y = J_eps(r)`.
    pub fn yosida_derivative(&self, eps: YosidaParams, r: f64) -> Result<f64> {
        let e = eps.eps();
        match self {
            PotentialSpec::DoubleObstacle { .. } => Ok(if r.abs() > 1.0 { 1.0 / e } else { 0.0 }),
            PotentialSpec::Regular => {
                let y = self.resolvent(eps, r)?;
                let d = 3.0 * y * y;
                Ok(d / (1.0 + e * d))
            }
            PotentialSpec::Logarithmic { .. } => {
                let c = log_resolvent_atanh(e, r)?.cosh();
                Ok(2.0 / (1.0 / (c * c) + 2.0 * e))
            }
            PotentialSpec::Custom(_) => {
                let h = 1e-6 * (1.0 + r.abs());
                Ok((self.yosida(eps, r + h)? - self.yosida(eps, r - h)?) / (2.0 * h))
            }
        }
    }

    /// Moreau envelope `beta_hat_eps(r) = beta_hat(J) + (r - J)^2/(2 eps)`.
    pub fn yosida_primitive(&self, eps: YosidaParams, r: f64) -> Result<f64> {
        let y = self.resolvent(eps, r)?;
        let d = r - y;
        Ok(self.beta_hat(y) + d * d / (2.0 * eps.eps()))
    }

    /// Regularized potential `beta_hat_eps + pi_hat`.
    pub fn regularized_potential(&self, eps: YosidaParams, r: f64) -> Result<f64> {
        Ok(self.yosida_primitive(eps, r)? + self.pi_hat(r))
    }

    /// Sampled estimate of the smallest `c0 >= 0` for which
    /// `beta_eps(r)(r - r0) >= delta0 |beta_eps(r)| - c0` holds on every
    /// `(eps, r, r0)` sample. This is a grid estimate, not a bound.
    pub fn interior_bound_constants(
        &self,
        r_lo: f64,
        r_hi: f64,
        delta0: f64,
        eps_grid: &[f64],
        r_grid: &[f64],
    ) -> Result<InteriorBoundConstants> {
        if !(delta0 > 0.0) || !(r_lo <= r_hi) {
            return Err(Error::Config(format!(
                "need delta0 > 0 and r_lo <= r_hi, got delta0 = {delta0}, [{r_lo}, {r_hi}]"
            )));
        }
        for x in [r_lo - delta0, r_hi + delta0] {
            if !self.is_interior(x) {
                return Err(Error::Validation(vec![crate::error::AssumptionViolation::new(
                    crate::error::AssumptionTag::Compatibility,
                    format!(
                        "compatibility: {x} not interior to D(beta) = {}",
                        self.interior_label()
                    ),
                )]));
            }
        }
        // Linear in r0, so the endpoints are the extremal samples; a few interior
        // points are kept for reporting symmetry.
        let r0s: Vec<f64> = (0..=4).map(|i| r_lo + (r_hi - r_lo) * i as f64 / 4.0).collect();
        let mut c0 = 0.0_f64;
        for &e in eps_grid {
            let eps = YosidaParams::relaxed(e)?;
            for &r in r_grid {
                let b = self.yosida(eps, r)?;
                for &r0 in &r0s {
                    c0 = c0.max(delta0 * b.abs() - b * (r - r0));
                }
            }
        }
        Ok(InteriorBoundConstants {
            r_lo,
            r_hi,
            delta0,
            c0,
        })
    }
}

/// Newton on an increasing scalar function with a sign-change bracket; falls
/// back to bisection whenever the Newton iterate leaves the bracket.
fn safeguarded_newton<G>(g: G, start: f64, mut lo: f64, mut hi: f64) -> Result<f64>
where
    G: Fn(f64) -> (f64, f64),
{
    let mut y = start;
    for _ in 0..RESOLVENT_MAX_ITER {
        let (val, der) = g(y);
        if val == 0.0 {
            return Ok(y);
        }
        if val > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let mut next = y - val / der;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - y).abs();
        y = next;
        if step <= RESOLVENT_TOL || hi - lo <= 4.0 * f64::EPSILON * y.abs().max(f64::MIN_POSITIVE)
        {
            return Ok(y);
        }
    }
    Err(Error::Numeric(format!(
        "resolvent root finder did not converge in {RESOLVENT_MAX_ITER} iterations (bracket [{lo}, {hi}])"
    )))
}

/// `s = atanh(J_eps(r))` for the logarithmic potential, the root of
/// `tanh(s) + 2 eps s = r`. Solving in `s` avoids the loss of accuracy of the
/// `y` formulation near `+-1`, where `atanh` is steep.
fn log_resolvent_atanh(e: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let g = |s: f64| {
        let c = s.cosh();
        (s.tanh() + 2.0 * e * s - r, 1.0 / (c * c) + 2.0 * e)
    };
    let bound = r / (2.0 * e);
    let (lo, hi) = if r > 0.0 { (0.0, bound) } else { (bound, 0.0) };
    // For large |r| the root sits near (|r| - 1)/(2 eps).
    let start = r.signum() * ((r.abs() - 1.0).max(0.0) / (2.0 * e)).max(r.abs().min(1.0) * 0.5);
    safeguarded_newton(g, start.clamp(lo, hi), lo, hi)
}

fn custom_resolvent(c: &CustomPotential, e: f64, r: f64) -> Result<f64> {
    let (d_lo, d_hi) = c.domain;
    let g = |y: f64| y + e * (c.beta_min_section)(y) - r;
    // 0 in beta(0) puts the root between 0 and r, truncated to the domain.
    let (mut lo, mut hi) = if r > 0.0 { (0.0, r.min(d_hi)) } else { (r.max(d_lo), 0.0) };
    // Near an open endpoint the section may blow up; probe just inside.
    let inside = |x: f64| {
        if x == d_hi {
            x - EDGE_PROBE * (1.0 + x.abs())
        } else if x == d_lo {
            x + EDGE_PROBE * (1.0 + x.abs())
        } else {
            x
        }
    };
    if r > 0.0 && g(inside(hi)) <= 0.0 {
        return Ok(hi);
    }
    if r < 0.0 && g(inside(lo)) >= 0.0 {
        return Ok(lo);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Numeric("custom resolvent bisection did not converge".into()))
}
