//! Diagnostics attached to trajectories and the experiments built on them.

mod convergence;
mod dependence;
pub mod suites;

pub use convergence::{
    convergence_study, epsilon_sweep, ConvergenceKind, ConvergenceRow, ConvergenceSetup, EpsilonSweep,
};
pub use dependence::{dependence_experiment, DependenceReport, RhsComponents};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::galerkin::{reconstruct_mu, GalerkinState, ProblemData, Trajectory};
use crate::spectral::{BoxDomain, Coeffs, SpectralBasis};

/// Slack allowed on the mean-value band along accepted trajectories.
pub const BAND_TOL: f64 = 1e-9;
/// Engineering proxy for "bounded independently of the parameter".
pub const UNIFORMITY_RATIO: f64 = 10.0;

/// Realized norms of one state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormInventory {
    pub phi_v: f64,
    pub phi_vstar: f64,
    pub w_h: f64,
    pub dtw_h: f64,
    pub grad_w: f64,
    pub xi_l1: f64,
    pub xi_l6: f64,
    pub mu_v: f64,
}

impl NormInventory {
    pub const NAMES: [&'static str; 8] = [
        "phi_V", "phi_Vstar", "w_H", "dtw_H", "grad_w_H", "xi_L1", "xi_L6", "mu_V",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.phi_v,
            self.phi_vstar,
            self.w_h,
            self.dtw_h,
            self.grad_w,
            self.xi_l1,
            self.xi_l6,
            self.mu_v,
        ]
    }

    pub fn from_values(v: &[f64]) -> Option<Self> {
        let &[phi_v, phi_vstar, w_h, dtw_h, grad_w, xi_l1, xi_l6, mu_v] = v else {
            return None;
        };
        Some(Self {
            phi_v,
            phi_vstar,
            w_h,
            dtw_h,
            grad_w,
            xi_l1,
            xi_l6,
            mu_v,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mean_phi: f64,
    /// Continuum mean-value law evaluated at `t`.
    pub mean_phi_exact: f64,
    pub energy: f64,
    /// `|grad mu|^2`.
    pub dissipation_mu: f64,
    /// `(b kappa1 / lambda) |grad v|^2`.
    pub dissipation_w: f64,
    /// `int (f - gamma phi) mu + (b/lambda) int g v`.
    pub source_power: f64,
    pub norms: NormInventory,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 7] = [
        "t",
        "mean_phi",
        "mean_phi_exact",
        "energy",
        "dissipation_mu",
        "dissipation_w",
        "source_power",
    ];

    pub fn header() -> Vec<&'static str> {
        Self::COLUMNS.iter().chain(NormInventory::NAMES.iter()).copied().collect()
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![
            self.t,
            self.mean_phi,
            self.mean_phi_exact,
            self.energy,
            self.dissipation_mu,
            self.dissipation_w,
            self.source_power,
        ];
        v.extend(self.norms.values());
        v
    }

    pub fn from_values(v: &[f64]) -> Option<Self> {
        if v.len() != Self::COLUMNS.len() + NormInventory::NAMES.len() {
            return None;
        }
        Some(Self {
            t: v[0],
            mean_phi: v[1],
            mean_phi_exact: v[2],
            energy: v[3],
            dissipation_mu: v[4],
            dissipation_w: v[5],
            source_power: v[6],
            norms: NormInventory::from_values(&v[7..])?,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|x| x.is_finite())
    }
}

/// Scalar law `c' + gamma c = mean f` for the spatial mean of `phi`.
#[derive(Debug, Clone)]
pub struct MeanLaw {
    c0: f64,
    gamma: f64,
    f: crate::expr::SourceExpr,
}

impl MeanLaw {
    pub fn new(data: &ProblemData, _domain: &BoxDomain) -> Self {
        Self {
            c0: data.phi0.mean(),
            gamma: data.params.gamma,
            f: data.f.clone(),
        }
    }

    /// `c0 e^{-gamma t} + int_0^t e^{-gamma (t-s)} mean f(s) ds`.
    pub fn exact(&self, t: f64) -> f64 {
        self.c0 * (-self.gamma * t).exp() + self.f.decayed_mean_integral(self.gamma, t)
    }

    /// Implicit Euler recursion on the given time grid, sources at left endpoints.
    pub fn discrete(&self, times: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(times.len());
        let mut c = self.c0;
        for (k, &t) in times.iter().enumerate() {
            if k > 0 {
                let dt = t - times[k - 1];
                c = (c + dt * self.f.mean_at(times[k - 1])) / (1.0 + self.gamma * dt);
            }
            out.push(c);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanLawCheck {
    /// Max deviation from the continuum formula.
    pub continuum_error: f64,
    /// Max deviation from the scheme's own scalar recursion.
    pub discrete_error: f64,
}

pub fn mean_law_check(records: &[DiagnosticsRecord], data: &ProblemData, domain: &BoxDomain) -> MeanLawCheck {
    let law = MeanLaw::new(data, domain);
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let disc = law.discrete(&times);
    let mut out = MeanLawCheck {
        continuum_error: 0.0,
        discrete_error: 0.0,
    };
    for (r, d) in records.iter().zip(disc) {
        out.continuum_error = out.continuum_error.max((r.mean_phi - law.exact(r.t)).abs());
        out.discrete_error = out.discrete_error.max((r.mean_phi - d).abs());
    }
    out
}

/// Energy `E` of a state.
pub fn energy(state: &GalerkinState, data: &ProblemData, basis: &SpectralBasis) -> Result<f64> {
    let p = &data.params;
    let field = basis.to_field(&state.phi)?;
    let mut pot = 0.0;
    for &r in field.iter() {
        pot += data.potential.yosida_primitive(data.eps, r)? + data.potential.pi_hat(r);
    }
    pot *= basis.weight();
    let mass = basis.mean_value(&state.phi) * basis.domain().measure();
    Ok(0.5 * basis.grad_norm_sq(&state.phi)
        + pot
        + p.a * mass
        + p.b / (2.0 * p.lambda) * state.v.norm_squared()
        + p.b * p.kappa2 / (2.0 * p.lambda) * basis.grad_norm_sq(&state.w))
}

pub fn diagnostics(
    state: &GalerkinState,
    data: &ProblemData,
    basis: &SpectralBasis,
    law: &MeanLaw,
) -> Result<DiagnosticsRecord> {
    let p = &data.params;
    let rec = reconstruct_mu(state, data, basis)?;
    let f = data.f.project_at(basis, state.t)?;
    let g = data.g.project_at(basis, state.t)?;
    let forcing = Coeffs(f.0 - &state.phi.0 * p.gamma);
    let norms = NormInventory {
        phi_v: basis.norm_v(&state.phi),
        phi_vstar: basis.norm_vstar(&state.phi),
        w_h: basis.norm_h(&state.w),
        dtw_h: basis.norm_h(&state.v),
        grad_w: basis.grad_norm_sq(&state.w).sqrt(),
        xi_l1: basis.norm_lp(&rec.xi, 1.0),
        xi_l6: basis.norm_lp(&rec.xi, 6.0),
        mu_v: basis.norm_v(&rec.mu),
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        mean_phi: basis.mean_value(&state.phi),
        mean_phi_exact: law.exact(state.t),
        energy: energy(state, data, basis)?,
        dissipation_mu: basis.grad_norm_sq(&rec.mu),
        dissipation_w: p.b * p.kappa1 / p.lambda * basis.grad_norm_sq(&state.v),
        source_power: basis.inner(&forcing, &rec.mu) + p.b / p.lambda * basis.inner(&g, &state.v),
        norms,
    })
}

/// Trapezoid rule on samples `(t_k, y_k)`.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(t.len());
    for k in 0..t.len() {
        if k > 0 {
            acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// `E(T) - E(0) + int_0^T (dissipation - source power)`, trapezoid in time,
/// returned in absolute value.
pub fn energy_identity_residual(records: &[DiagnosticsRecord]) -> f64 {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return 0.0;
    };
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let y: Vec<f64> = records
        .iter()
        .map(|r| r.dissipation_mu + r.dissipation_w - r.source_power)
        .collect();
    (last.energy - first.energy + trapezoid(&t, &y)).abs()
}

/// Largest single-step energy increase.
pub fn max_energy_increase(records: &[DiagnosticsRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Spatially constant solution with `f = g = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousBenchmark {
    pub c0: f64,
    pub w0: f64,
    pub w1: f64,
    pub gamma: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousValue {
    pub c: f64,
    pub v: f64,
    pub w: f64,
}

impl HomogeneousBenchmark {
    pub fn at(&self, t: f64) -> HomogeneousValue {
        let decay = (-self.gamma * t).exp();
        let c = self.c0 * decay;
        let v = self.w1 + self.lambda * (self.c0 - c);
        // -expm1 keeps (1 - e^{-gamma t})/gamma accurate for small gamma t.
        let lost = -(-self.gamma * t).exp_m1() / self.gamma;
        let w = self.w0 + self.w1 * t + self.lambda * self.c0 * (t - lost);
        HomogeneousValue { c, v, w }
    }
}

pub fn homogeneous_benchmark(c0: f64, w0: f64, w1: f64, gamma: f64, lambda: f64) -> HomogeneousBenchmark {
    HomogeneousBenchmark {
        c0,
        w0,
        w1,
        gamma,
        lambda,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    NonFinite,
    MeanBand,
    NonUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorViolation {
    pub kind: MonitorKind,
    pub t: Option<f64>,
    pub message: String,
}

impl std::fmt::Display for MonitorViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.t {
            Some(t) => write!(f, "t = {t:e}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Flags non-finite records and departures from the mean-value band `(lo, hi)`.
pub fn apriori_monitor(records: &[DiagnosticsRecord], band: (f64, f64)) -> Vec<MonitorViolation> {
    let mut out = Vec::new();
    for r in records {
        if !r.is_finite() {
            out.push(MonitorViolation {
                kind: MonitorKind::NonFinite,
                t: Some(r.t),
                message: "non-finite diagnostics".into(),
            });
            continue;
        }
        if r.mean_phi < band.0 - BAND_TOL || r.mean_phi > band.1 + BAND_TOL {
            out.push(MonitorViolation {
                kind: MonitorKind::MeanBand,
                t: Some(r.t),
                message: format!(
                    "mean-value band: mean phi = {} outside [{}, {}]",
                    r.mean_phi, band.0, band.1
                ),
            });
        }
    }
    out
}

/// Space-time summaries of one run used by sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RealizedNorms {
    /// `max_t |phi|_*`.
    pub phi_linf_vstar: f64,
    /// `(int |phi|_V^2)^{1/2}`.
    pub phi_l2_v: f64,
    /// `max_t |w|_V`.
    pub w_linf_v: f64,
    /// `(int |w|^2 + |w'|^2)^{1/2}`.
    pub w_h1_h: f64,
    /// `|xi|_{L^1(Q)}`.
    pub xi_l1_q: f64,
    /// `|xi|_{L^2(0,T;L^6)}`.
    pub xi_l2_l6: f64,
    /// `|mu|_{L^2(0,T;V)}`.
    pub mu_l2_v: f64,
}

pub fn realized_norms(records: &[DiagnosticsRecord]) -> RealizedNorms {
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let col = |f: &dyn Fn(&DiagnosticsRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let max = |f: &dyn Fn(&DiagnosticsRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    RealizedNorms {
        phi_linf_vstar: max(&|r| r.norms.phi_vstar),
        phi_l2_v: trapezoid(&t, &col(&|r| r.norms.phi_v.powi(2))).sqrt(),
        w_linf_v: max(&|r| (r.norms.w_h.powi(2) + r.norms.grad_w.powi(2)).sqrt()),
        w_h1_h: trapezoid(&t, &col(&|r| r.norms.w_h.powi(2) + r.norms.dtw_h.powi(2))).sqrt(),
        xi_l1_q: trapezoid(&t, &col(&|r| r.norms.xi_l1)),
        xi_l2_l6: trapezoid(&t, &col(&|r| r.norms.xi_l6.powi(2))).sqrt(),
        mu_l2_v: trapezoid(&t, &col(&|r| r.norms.mu_v.powi(2))).sqrt(),
    }
}

/// `max / min` of positive values; `None` if any value is zero or non-finite.
pub fn spread_ratio(values: &[f64]) -> Option<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    (lo > 0.0 && hi.is_finite()).then(|| hi / lo)
}

/// Checks that each realized quantity varies by at most [`UNIFORMITY_RATIO`]
/// between successive sweep members.
pub fn uniformity_violations(label: &str, values: &[f64]) -> Vec<MonitorViolation> {
    let mut out = Vec::new();
    if values.iter().any(|v| !v.is_finite()) {
        out.push(MonitorViolation {
            kind: MonitorKind::NonFinite,
            t: None,
            message: format!("{label}: non-finite value in sweep {values:?}"),
        });
        return out;
    }
    for w in values.windows(2) {
        let (a, b) = (w[0].abs(), w[1].abs());
        let ratio = if a.min(b) == 0.0 {
            if a.max(b) == 0.0 { 1.0 } else { f64::INFINITY }
        } else {
            a.max(b) / a.min(b)
        };
        if ratio > UNIFORMITY_RATIO {
            out.push(MonitorViolation {
                kind: MonitorKind::NonUniform,
                t: None,
                message: format!("{label}: successive ratio {ratio} exceeds {UNIFORMITY_RATIO}"),
            });
        }
    }
    out
}

/// Extracts the recorded trajectory diagnostics.
pub fn records(traj: &Trajectory) -> &[DiagnosticsRecord] {
    &traj.records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{SourceExpr, SpatialExpr};
    use crate::galerkin::{simulate, PhysicalParams, Scheme};
    use crate::potentials::{PotentialSpec, YosidaParams};

    fn basis(n: usize) -> SpectralBasis {
        SpectralBasis::build(&BoxDomain::interval(1.0, 64).unwrap(), n).unwrap()
    }

    fn data(phi0: SpatialExpr) -> ProblemData {
        ProblemData {
            params: PhysicalParams {
                gamma: 1.0,
                a: 0.0,
                b: 1.0,
                kappa1: 1.0,
                kappa2: 1.0,
                lambda: 2.0,
            },
            potential: PotentialSpec::Regular,
            eps: YosidaParams::new(0.1).unwrap(),
            f: SourceExpr::zero(),
            g: SourceExpr::zero(),
            phi0,
            w0: SpatialExpr::constant(0.0),
            w1: SpatialExpr::constant(0.0),
            t_final: 1.0,
        }
    }

    #[test]
    fn benchmark_values() {
        let b = homogeneous_benchmark(0.3, 0.0, 0.0, 1.0, 2.0);
        let v = b.at(1.0);
        assert!((v.c - 0.1103638).abs() < 1e-7);
        assert!((v.v - 0.3792724).abs() < 1e-7);
        let z = b.at(0.0);
        assert_eq!((z.c, z.v, z.w), (0.3, 0.0, 0.0));
        let dec = homogeneous_benchmark(0.3, 0.1, 0.7, 1.0, 0.0);
        assert_eq!(dec.at(2.0).v, 0.7);
    }

    #[test]
    fn benchmark_w_is_primitive_of_v() {
        let b = homogeneous_benchmark(0.3, 0.2, -0.1, 1.5, 2.0);
        let h = 1e-5;
        let d = (b.at(0.7 + h).w - b.at(0.7 - h).w) / (2.0 * h);
        assert!((d - b.at(0.7).v).abs() < 1e-8);
    }

    #[test]
    fn mean_law_on_homogeneous_decay() {
        let b = basis(8);
        let d = data(SpatialExpr::constant(0.5));
        let t = simulate(&d, &b, 0.01, Scheme::SemiImplicit, &mut []).unwrap();
        let chk = mean_law_check(&t.records, &d, b.domain());
        assert!(chk.discrete_error <= 1e-12);
        assert!(chk.continuum_error < 0.01);
        assert!(apriori_monitor(&t.records, d.mean_band(b.domain())).is_empty());
    }

    #[test]
    fn mean_approaches_steady_value() {
        let b = basis(8);
        let mut d = data(SpatialExpr::constant(0.0));
        d.params.gamma = 2.0;
        d.f = SourceExpr::steady(SpatialExpr::constant(1.0));
        d.t_final = 5.0;
        let t = simulate(&d, &b, 0.05, Scheme::SemiImplicit, &mut []).unwrap();
        assert!(t.records.windows(2).all(|w| w[1].mean_phi > w[0].mean_phi));
        assert!((t.records.last().unwrap().mean_phi - 0.5).abs() < 1e-3);
        let (lo, hi) = d.mean_band(b.domain());
        assert_eq!((lo, hi), (-0.5, 0.5));
        assert!(apriori_monitor(&t.records, (lo, hi)).is_empty());
    }

    #[test]
    fn homogeneous_energy_rate_matches_algebra() {
        // c' = -gamma c, v' = lambda gamma c: E = |Omega|(F(c) + (b/2 lambda) v^2),
        // so dE/dt = -gamma c |Omega| (F'(c) - b v), i.e. int(-gamma phi) mu.
        let b = basis(4);
        let d = data(SpatialExpr::constant(0.3));
        let t = simulate(&d, &b, 1e-3, Scheme::BackwardEuler, &mut []).unwrap();
        let r = &t.records;
        for k in [100, 500, 900] {
            let de = (r[k + 1].energy - r[k - 1].energy) / (r[k + 1].t - r[k - 1].t);
            assert!((de - r[k].source_power).abs() < 1e-3, "{de} {}", r[k].source_power);
        }
        // The source term makes E increase here.
        assert!(r.last().unwrap().energy > r[0].energy);
    }

    #[test]
    fn rest_state_residual_is_zero() {
        let b = basis(4);
        let d = data(SpatialExpr::constant(0.0));
        let t = simulate(&d, &b, 0.1, Scheme::SemiImplicit, &mut []).unwrap();
        assert_eq!(energy_identity_residual(&t.records), 0.0);
    }

    #[test]
    fn corrupted_record_is_flagged() {
        let b = basis(4);
        let d = data(SpatialExpr::constant(0.2));
        let mut t = simulate(&d, &b, 0.1, Scheme::SemiImplicit, &mut []).unwrap();
        t.records[3].mean_phi = 0.9;
        t.records[5].energy = f64::NAN;
        let v = apriori_monitor(&t.records, d.mean_band(b.domain()));
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].kind, MonitorKind::MeanBand);
        assert_eq!(v[1].kind, MonitorKind::NonFinite);
    }

    #[test]
    fn record_values_round_trip() {
        let b = basis(4);
        let d = data(SpatialExpr::constant(0.2).with_mode(&[1], 0.1));
        let t = simulate(&d, &b, 0.1, Scheme::SemiImplicit, &mut []).unwrap();
        let r = t.records[2];
        assert_eq!(DiagnosticsRecord::from_values(&r.values()), Some(r));
        assert_eq!(DiagnosticsRecord::header().len(), r.values().len());
    }

    #[test]
    fn trapezoid_rules() {
        let t = [0.0, 0.5, 1.0, 2.0];
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&t, &y) - 8.0).abs() < 1e-15);
        let c = cumulative_trapezoid(&t, &y);
        assert_eq!(c[0], 0.0);
        assert!((c[2] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn uniformity_ratio_flags_jumps() {
        assert!(uniformity_violations("x", &[1.0, 2.0, 5.0]).is_empty());
        assert_eq!(uniformity_violations("x", &[1.0, 20.0]).len(), 1);
        assert_eq!(spread_ratio(&[2.0, 4.0, 1.0]), Some(4.0));
        assert_eq!(spread_ratio(&[0.0, 1.0]), None);
    }
}
