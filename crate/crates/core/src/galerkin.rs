//! Faedo-Galerkin reduction onto `V_n` and its time integration.
//!
//! Unknowns are the coefficient vectors of `phi`, `w` and `v = dw/dt`; the
//! chemical potential is reconstructed from them at every evaluation:
//!
//! ```text
//! phi' + A mu + gamma phi = f
//! mu = A phi + P_n(beta_eps(phi) + pi(phi) + a) - b v
//! v'  + A(kappa1 v + kappa2 w) + lambda phi' = g
//! ```
//!
//! `A = diag(lambda_j)` in the eigenbasis, so every linear solve splits into
//! independent per-mode blocks; only the nonlinearity couples modes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, DiagnosticsRecord};
use crate::error::{AssumptionTag, AssumptionViolation, Error, Result};
use crate::expr::{SourceExpr, SpatialExpr};
use crate::potentials::{PotentialSpec, YosidaParams};
use crate::spectral::{BoxDomain, Coeffs, Field, SpectralBasis};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;
/// Smallest step the driver will try, relative to the final time.
pub const DT_MIN_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub lambda: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            a: 0.0,
            b: 1.0,
            kappa1: 1.0,
            kappa2: 1.0,
            lambda: 1.0,
        }
    }
}

impl PhysicalParams {
    /// Positivity violations; `a` only produces a warning.
    pub fn violations(&self) -> Vec<AssumptionViolation> {
        [
            ("gamma", self.gamma),
            ("b", self.b),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("lambda", self.lambda),
        ]
        .iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(name, v)| {
            AssumptionViolation::new(
                AssumptionTag::Constants,
                format!("positive constants: {name} = {v} must be positive"),
            )
        })
        .chain((!self.a.is_finite()).then(|| {
            AssumptionViolation::new(
                AssumptionTag::Constants,
                format!("positive constants: a = {} must be finite", self.a),
            )
        }))
        .collect()
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.a <= 0.0 {
            vec![format!(
                "a = {} is not positive; accepted, the scheme does not depend on its sign",
                self.a
            )]
        } else {
            Vec::new()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemData {
    pub params: PhysicalParams,
    pub potential: PotentialSpec,
    pub eps: YosidaParams,
    pub f: SourceExpr,
    pub g: SourceExpr,
    pub phi0: SpatialExpr,
    pub w0: SpatialExpr,
    pub w1: SpatialExpr,
    pub t_final: f64,
}

impl ProblemData {
    /// `rho = |f|_inf / gamma`.
    pub fn rho(&self, domain: &BoxDomain) -> f64 {
        self.f.sup_norm(domain, self.t_final) / self.params.gamma
    }

    /// Band `[-rho - (mean phi0)^-, rho + (mean phi0)^+]` that contains the mean
    /// of `phi` for all times.
    pub fn mean_band(&self, domain: &BoxDomain) -> (f64, f64) {
        let rho = self.rho(domain);
        let m = self.phi0.mean();
        (-rho - (-m).max(0.0), rho + m.max(0.0))
    }

    /// Every failing modeling assumption on the data.
    pub fn violations(&self, domain: &BoxDomain) -> Vec<AssumptionViolation> {
        let mut out = self.params.violations();
        for (name, src) in [("f", &self.f), ("g", &self.g)] {
            if let Err(e) = src.check(domain) {
                out.push(AssumptionViolation::new(
                    AssumptionTag::Sources,
                    format!("source {name}: {e}"),
                ));
            }
        }
        let mut initial_ok = true;
        for (name, x) in [("phi0", &self.phi0), ("w0", &self.w0), ("w1", &self.w1)] {
            if let Err(e) = x.check(domain) {
                initial_ok = false;
                out.push(AssumptionViolation::new(
                    AssumptionTag::InitialData,
                    format!("initial data {name}: {e}"),
                ));
            }
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            out.push(AssumptionViolation::new(
                AssumptionTag::Sources,
                format!("final time T = {} must be finite and nonnegative", self.t_final),
            ));
        }
        if !out.is_empty() || !initial_ok {
            return out;
        }
        let rho = self.rho(domain);
        if !rho.is_finite() {
            out.push(AssumptionViolation::new(
                AssumptionTag::Rho,
                format!("rho = |f|_inf/gamma = {rho} is not finite"),
            ));
            return out;
        }
        let (lo, hi) = self.phi0.range(domain);
        let (band_lo, band_hi) = self.mean_band(domain);
        let label = self.potential.interior_label();
        for (what, x) in [
            ("min phi0", lo),
            ("max phi0", hi),
            ("-rho - (mean phi0)^-", band_lo),
            ("rho + (mean phi0)^+", band_hi),
        ] {
            if !self.potential.is_interior(x) {
                out.push(AssumptionViolation::new(
                    AssumptionTag::Compatibility,
                    format!("compatibility: {what} = {x} not interior to D(beta) = {label}"),
                ));
            }
        }
        out
    }

    pub fn validate(&self, domain: &BoxDomain) -> Result<()> {
        let v = self.violations(domain);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn with_eps(&self, eps: YosidaParams) -> Self {
        Self {
            eps,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    pub t: f64,
    pub phi: Coeffs,
    pub w: Coeffs,
    /// Coefficients of `dw/dt`, the temperature.
    pub v: Coeffs,
}

impl GalerkinState {
    pub fn is_finite(&self) -> bool {
        [&self.phi, &self.w, &self.v].iter().all(|c| c.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone)]
pub struct MuReconstruction {
    pub mu: Coeffs,
    /// `beta_eps(phi)` on the grid.
    pub xi: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Linear terms implicit, `beta_eps + pi` at the previous state.
    SemiImplicit,
    /// Fully implicit, Newton on the coupled residual.
    BackwardEuler,
}

/// `P_n phi0`, `P_n w0`, `P_n w1` after checking the data assumptions.
pub fn project_initial_data(data: &ProblemData, basis: &SpectralBasis) -> Result<GalerkinState> {
    data.validate(basis.domain())?;
    Ok(GalerkinState {
        t: 0.0,
        phi: data.phi0.project(basis)?,
        w: data.w0.project(basis)?,
        v: data.w1.project(basis)?,
    })
}

/// Pointwise `beta_eps(phi)` on the grid.
pub fn xi_field(phi: &Field, data: &ProblemData) -> Result<Field> {
    let vals: Result<Vec<f64>> = phi.iter().map(|&r| data.potential.yosida(data.eps, r)).collect();
    Ok(Field(DVector::from_vec(vals?)))
}

/// Coefficients of `beta_eps(phi) + pi(phi) + a` and the grid field `xi`.
fn nonlinear_coeffs(
    phi: &Coeffs,
    data: &ProblemData,
    basis: &SpectralBasis,
) -> Result<(Coeffs, Field)> {
    let field = basis.to_field(phi)?;
    let xi = xi_field(&field, data)?;
    let a = data.params.a;
    let total = Field(xi.zip_map(&field.0, |x, r| x + data.potential.pi(r) + a));
    Ok((basis.to_coeffs(&total)?, xi))
}

pub fn reconstruct_mu(
    state: &GalerkinState,
    data: &ProblemData,
    basis: &SpectralBasis,
) -> Result<MuReconstruction> {
    let (nl, xi) = nonlinear_coeffs(&state.phi, data, basis)?;
    let mu = basis.stiffness_apply(&state.phi).0 + nl.0 - &state.v.0 * data.params.b;
    Ok(MuReconstruction { mu: Coeffs(mu), xi })
}

/// Time derivatives `(phi', w', v')` of the reduced system.
pub fn rhs(
    state: &GalerkinState,
    data: &ProblemData,
    basis: &SpectralBasis,
) -> Result<(Coeffs, Coeffs, Coeffs)> {
    let p = &data.params;
    let mu = reconstruct_mu(state, data, basis)?.mu;
    let f = data.f.project_at(basis, state.t)?;
    let g = data.g.project_at(basis, state.t)?;
    let dphi = f.0 - basis.stiffness_apply(&mu).0 - &state.phi.0 * p.gamma;
    let heat = &state.v.0 * p.kappa1 + &state.w.0 * p.kappa2;
    let dv = g.0 - basis.stiffness_apply(&Coeffs(heat)).0 - &dphi * p.lambda;
    Ok((Coeffs(dphi), state.v.clone(), Coeffs(dv)))
}

/// Per-mode constants after eliminating `w+` and `v+`.
struct Blocks {
    /// `1 + dt lambda_j^2 + dt gamma + dt lambda_j b lambda / D_j`.
    diag: Vec<f64>,
    /// `D_j = 1 + dt lambda_j kappa1 + dt^2 lambda_j kappa2`.
    heat_den: Vec<f64>,
    /// `v + dt (g - lambda_j kappa2 w) + lambda phi`.
    heat_rhs: Vec<f64>,
    /// `phi + dt f + dt lambda_j b heat_rhs / D_j`.
    base: Vec<f64>,
}

fn blocks(state: &GalerkinState, data: &ProblemData, basis: &SpectralBasis, dt: f64) -> Result<Blocks> {
    let p = &data.params;
    let f = data.f.project_at(basis, state.t)?;
    let g = data.g.project_at(basis, state.t)?;
    let n = basis.n();
    let mut out = Blocks {
        diag: Vec::with_capacity(n),
        heat_den: Vec::with_capacity(n),
        heat_rhs: Vec::with_capacity(n),
        base: Vec::with_capacity(n),
    };
    for (j, &lj) in basis.eigenvalues().iter().enumerate() {
        let den = 1.0 + dt * lj * p.kappa1 + dt * dt * lj * p.kappa2;
        let hr = state.v[j] + dt * (g[j] - lj * p.kappa2 * state.w[j]) + p.lambda * state.phi[j];
        out.diag.push(1.0 + dt * lj * lj + dt * p.gamma + dt * lj * p.b * p.lambda / den);
        out.base.push(state.phi[j] + dt * f[j] + dt * lj * p.b * hr / den);
        out.heat_den.push(den);
        out.heat_rhs.push(hr);
    }
    Ok(out)
}

fn finish(state: &GalerkinState, data: &ProblemData, bl: &Blocks, phi: Coeffs, dt: f64) -> GalerkinState {
    let n = phi.len();
    let lam = data.params.lambda;
    let v = Coeffs::from_vec((0..n).map(|j| (bl.heat_rhs[j] - lam * phi[j]) / bl.heat_den[j]).collect());
    let w = Coeffs(&state.w.0 + &v.0 * dt);
    GalerkinState {
        t: state.t + dt,
        phi,
        w,
        v,
    }
}

/// One step of size `dt`. Sources are frozen at the left endpoint.
pub fn step(
    state: &GalerkinState,
    data: &ProblemData,
    basis: &SpectralBasis,
    dt: f64,
    scheme: Scheme,
) -> Result<GalerkinState> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let bl = blocks(state, data, basis, dt)?;
    let lams = basis.eigenvalues();
    let (nl, _) = nonlinear_coeffs(&state.phi, data, basis)?;
    let explicit = Coeffs::from_vec(
        (0..basis.n())
            .map(|j| (bl.base[j] - dt * lams[j] * nl[j]) / bl.diag[j])
            .collect(),
    );
    let phi = match scheme {
        Scheme::SemiImplicit => explicit,
        Scheme::BackwardEuler => newton_phi(explicit, data, basis, &bl, dt)?,
    };
    let next = finish(state, data, &bl, phi, dt);
    if !next.is_finite() {
        return Err(Error::Numeric(format!("non-finite state at t = {}", next.t)));
    }
    Ok(next)
}

/// Newton on `R(phi) = diag * phi + dt lambda_j N_j(phi) - base`.
fn newton_phi(
    mut phi: Coeffs,
    data: &ProblemData,
    basis: &SpectralBasis,
    bl: &Blocks,
    dt: f64,
) -> Result<Coeffs> {
    let n = basis.n();
    let lams = basis.eigenvalues();
    let scale = 1.0 + DVector::from_column_slice(&bl.base).norm();
    for _ in 0..NEWTON_MAX_ITER {
        let (nl, _) = nonlinear_coeffs(&phi, data, basis)?;
        let resid = DVector::from_iterator(
            n,
            (0..n).map(|j| bl.diag[j] * phi[j] + dt * lams[j] * nl[j] - bl.base[j]),
        );
        if !resid.iter().all(|r| r.is_finite()) {
            break;
        }
        if resid.norm() <= NEWTON_TOL * scale {
            return Ok(phi);
        }
        let grid = basis.to_field(&phi)?;
        let slopes: Result<Vec<f64>> = grid
            .iter()
            .map(|&r| Ok(data.potential.yosida_derivative(data.eps, r)? + data.potential.pi_derivative(r)))
            .collect();
        let mut jac = basis.weighted_mass(&Field(DVector::from_vec(slopes?)));
        for j in 0..n {
            let s = dt * lams[j];
            for k in 0..n {
                jac[(j, k)] *= s;
            }
            jac[(j, j)] += bl.diag[j];
        }
        let delta = jac
            .lu()
            .solve(&resid)
            .ok_or_else(|| Error::Numeric("singular Newton matrix".into()))?;
        phi.0 -= delta;
    }
    Err(Error::Numeric(format!(
        "backward Euler Newton did not converge in {NEWTON_MAX_ITER} iterations"
    )))
}

/// Hook invoked after every accepted step (and once for the initial state).
pub trait Observer {
    fn observe(&mut self, state: &GalerkinState, record: &DiagnosticsRecord);
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub states: Vec<GalerkinState>,
    pub records: Vec<DiagnosticsRecord>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn last_state(&self) -> Option<&GalerkinState> {
        self.states.last()
    }
}

/// A failed run together with the steps accepted before the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} accepted records)",
            self.error,
            self.partial.records.len()
        )
    }
}

impl std::error::Error for RunFailure {}

impl From<RunFailure> for Error {
    fn from(r: RunFailure) -> Self {
        r.error
    }
}

/// Advances from the projected initial data to `T` with fixed `dt` (last step
/// truncated). A failed step is retried with halved sub-steps down to
/// `DT_MIN_FRACTION * T`; every accepted sub-step is recorded.
pub fn simulate(
    data: &ProblemData,
    basis: &SpectralBasis,
    dt: f64,
    scheme: Scheme,
    observers: &mut [&mut dyn Observer],
) -> std::result::Result<Trajectory, RunFailure> {
    let mut traj = Trajectory::default();
    let fail = |error: Error, traj: Trajectory| RunFailure { error, partial: traj };
    if !(dt > 0.0) {
        return Err(fail(Error::Config(format!("time step must be positive, got {dt}")), traj));
    }
    let mut state = match project_initial_data(data, basis) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, traj)),
    };
    let law = analysis::MeanLaw::new(data, basis.domain());
    let push = |state: &GalerkinState, traj: &mut Trajectory, observers: &mut [&mut dyn Observer]| -> Result<()> {
        let rec = analysis::diagnostics(state, data, basis, &law)?;
        for o in observers.iter_mut() {
            o.observe(state, &rec);
        }
        traj.states.push(state.clone());
        traj.records.push(rec);
        Ok(())
    };
    if let Err(e) = push(&state, &mut traj, observers) {
        return Err(fail(e, traj));
    }
    let t_end = data.t_final;
    let dt_min = DT_MIN_FRACTION * t_end;
    let mut k: u64 = 0;
    while state.t < t_end {
        let mut target = ((k + 1) as f64 * dt).min(t_end);
        if t_end - target <= 1e-12 * t_end {
            target = t_end;
        }
        // Sub-steps toward `target`, halving on failure.
        while state.t < target {
            let mut h = target - state.t;
            let next = loop {
                match step(&state, data, basis, h, scheme) {
                    Ok(s) => break s,
                    Err(e @ Error::Numeric(_)) => {
                        h *= 0.5;
                        if h < dt_min {
                            return Err(fail(e, traj));
                        }
                        log::debug!("step failed at t = {}, retrying with dt = {h}", state.t);
                    }
                    Err(e) => return Err(fail(e, traj)),
                }
            };
            state = next;
            if target - state.t <= 1e-12 * t_end.max(1.0) {
                state.t = target;
            }
            if let Err(e) = push(&state, &mut traj, observers) {
                return Err(fail(e, traj));
            }
        }
        k += 1;
    }
    Ok(traj)
}
