//! Continuous dependence on the sources for fixed initial data.

use serde::{Deserialize, Serialize};

use super::{cumulative_trapezoid, realized_norms, trapezoid};
use crate::error::{Error, Result};
use crate::galerkin::{simulate, ProblemData, Scheme, Trajectory};
use crate::spectral::{Coeffs, SpectralBasis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhsComponents {
    /// `|df|_{L^2(0,T;V*)} + |df|_{L^1(Q)}`.
    pub f_l2_vstar_l1: f64,
    /// `|df|_{L^1(Q)}^{1/2}`.
    pub f_l1_sqrt: f64,
    /// `|1*dg|_{L^2(0,T;H)}`.
    pub g_conv_l2_h: f64,
}

impl RhsComponents {
    pub fn total(&self) -> f64 {
        self.f_l2_vstar_l1 + self.f_l1_sqrt + self.g_conv_l2_h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    /// `|dphi|_{L^inf(V*) cap L^2(V)} + |dw|_{H^1(H) cap L^inf(V)}`.
    pub lhs: f64,
    pub phi_linf_vstar: f64,
    pub phi_l2_v: f64,
    pub w_h1_h: f64,
    pub w_linf_v: f64,
    pub rhs_components: RhsComponents,
    /// `lhs / rhs`; absent when the data coincide.
    pub empirical_k2: Option<f64>,
    /// `|xi_i|_{L^1(Q)}` of both runs; the constant depends on them.
    pub xi_l1_q: [f64; 2],
}

/// Runs both problems on the same basis and time grid and measures the
/// difference of solutions against the difference of sources.
pub fn dependence_experiment(
    data1: &ProblemData,
    data2: &ProblemData,
    basis: &SpectralBasis,
    dt: f64,
    scheme: Scheme,
) -> Result<DependenceReport> {
    check_shared(data1, data2)?;
    let (r1, r2) = rayon::join(
        || simulate(data1, basis, dt, scheme, &mut []),
        || simulate(data2, basis, dt, scheme, &mut []),
    );
    let (t1, t2) = (r1?, r2?);
    report(&t1, &t2, data1, data2, basis)
}

fn check_shared(a: &ProblemData, b: &ProblemData) -> Result<()> {
    let same = a.phi0 == b.phi0
        && a.w0 == b.w0
        && a.w1 == b.w1
        && a.params == b.params
        && a.eps == b.eps
        && a.t_final == b.t_final
        && format!("{:?}", a.potential) == format!("{:?}", b.potential);
    if same {
        Ok(())
    } else {
        Err(Error::Config(
            "dependence runs must share initial data, constants, potential, eps and T".into(),
        ))
    }
}

fn report(
    t1: &Trajectory,
    t2: &Trajectory,
    d1: &ProblemData,
    d2: &ProblemData,
    basis: &SpectralBasis,
) -> Result<DependenceReport> {
    let times = t1.times();
    if times != t2.times() {
        return Err(Error::Numeric(
            "dependence runs ended on different time grids (step halving in one run)".into(),
        ));
    }
    let diff = |a: &Coeffs, b: &Coeffs| Coeffs(&a.0 - &b.0);
    let mut phi_vstar = Vec::new();
    let mut phi_v2 = Vec::new();
    let mut w_v = Vec::new();
    let mut w_h1 = Vec::new();
    let mut f_vstar2 = Vec::new();
    let mut f_l1 = Vec::new();
    let mut g_diff = Vec::new();
    for ((s1, s2), &t) in t1.states.iter().zip(&t2.states).zip(&times) {
        let dphi = diff(&s1.phi, &s2.phi);
        let dw = diff(&s1.w, &s2.w);
        let dv = diff(&s1.v, &s2.v);
        phi_vstar.push(basis.norm_vstar(&dphi));
        phi_v2.push(basis.norm_v(&dphi).powi(2));
        w_v.push(basis.norm_v(&dw));
        w_h1.push(dw.norm_squared() + dv.norm_squared());
        let df = diff(&d1.f.project_at(basis, t)?, &d2.f.project_at(basis, t)?);
        f_vstar2.push(basis.norm_vstar(&df).powi(2));
        let df_grid = crate::spectral::Field(&d1.f.field_at(basis, t).0 - &d2.f.field_at(basis, t).0);
        f_l1.push(basis.norm_lp(&df_grid, 1.0));
        g_diff.push(diff(&d1.g.project_at(basis, t)?, &d2.g.project_at(basis, t)?));
    }
    // 1*(g1 - g2) coefficientwise by cumulative trapezoid.
    let n = basis.n();
    let mut conv = vec![Coeffs::zeros(n); times.len()];
    for j in 0..n {
        let col: Vec<f64> = g_diff.iter().map(|c| c[j]).collect();
        for (k, v) in cumulative_trapezoid(&times, &col).into_iter().enumerate() {
            conv[k][j] = v;
        }
    }
    let conv2: Vec<f64> = conv.iter().map(|c| c.norm_squared()).collect();

    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let phi_linf_vstar = max(&phi_vstar);
    let phi_l2_v = trapezoid(&times, &phi_v2).sqrt();
    let w_h1_h = trapezoid(&times, &w_h1).sqrt();
    let w_linf_v = max(&w_v);
    let l1q = trapezoid(&times, &f_l1);
    let rhs = RhsComponents {
        f_l2_vstar_l1: trapezoid(&times, &f_vstar2).sqrt() + l1q,
        f_l1_sqrt: l1q.sqrt(),
        g_conv_l2_h: trapezoid(&times, &conv2).sqrt(),
    };
    let lhs = phi_linf_vstar + phi_l2_v + w_h1_h + w_linf_v;
    let total = rhs.total();
    Ok(DependenceReport {
        lhs,
        phi_linf_vstar,
        phi_l2_v,
        w_h1_h,
        w_linf_v,
        rhs_components: rhs,
        empirical_k2: (total > 0.0).then(|| lhs / total),
        xi_l1_q: [
            realized_norms(&t1.records).xi_l1_q,
            realized_norms(&t2.records).xi_l1_q,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{SourceExpr, SpatialExpr};
    use crate::galerkin::PhysicalParams;
    use crate::potentials::{PotentialSpec, YosidaParams};
    use crate::spectral::BoxDomain;

    fn setup() -> (ProblemData, SpectralBasis) {
        let b = SpectralBasis::build(&BoxDomain::interval(1.0, 32).unwrap(), 8).unwrap();
        let d = ProblemData {
            params: PhysicalParams::default(),
            potential: PotentialSpec::Regular,
            eps: YosidaParams::new(0.1).unwrap(),
            f: SourceExpr::steady(SpatialExpr::constant(0.1).with_mode(&[1], 0.2)),
            g: SourceExpr::zero(),
            phi0: SpatialExpr::constant(0.1).with_mode(&[1], 0.2),
            w0: SpatialExpr::constant(0.0),
            w1: SpatialExpr::constant(0.0),
            t_final: 0.3,
        };
        (d, b)
    }

    #[test]
    fn identical_data_give_zero() {
        let (d, b) = setup();
        let r = dependence_experiment(&d, &d, &b, 0.01, Scheme::SemiImplicit).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.empirical_k2, None);
    }

    #[test]
    fn heat_pulse_is_continuous() {
        let (d, b) = setup();
        let mut prev = f64::INFINITY;
        for delta in [1e-1, 1e-2, 1e-3] {
            let mut d2 = d.clone();
            d2.g = d.g.plus(&SourceExpr::scheduled(
                SpatialExpr::constant(0.0).with_mode(&[1], delta),
                vec![[0.0, 1.0], [0.1, 0.0]],
            ));
            let r = dependence_experiment(&d, &d2, &b, 0.01, Scheme::SemiImplicit).unwrap();
            assert!(r.lhs > 0.0 && r.lhs < prev);
            assert!(r.rhs_components.g_conv_l2_h > 0.0);
            prev = r.lhs;
        }
    }

    #[test]
    fn convolution_of_constant_pulse() {
        // g difference = delta on [0, T]: (1*g)(t) = delta t, L^2(H) norm = delta sqrt(T^3/3).
        let (d, b) = setup();
        let mut d2 = d.clone();
        d2.g = SourceExpr::steady(SpatialExpr::constant(0.5));
        let r = dependence_experiment(&d, &d2, &b, 0.01, Scheme::SemiImplicit).unwrap();
        let expect = 0.5 * (0.3f64.powi(3) / 3.0).sqrt();
        assert!((r.rhs_components.g_conv_l2_h - expect).abs() < 1e-3 * expect);
    }

    #[test]
    fn mismatched_initial_data_rejected() {
        let (d, b) = setup();
        let mut d2 = d.clone();
        d2.phi0 = SpatialExpr::constant(0.2);
        assert!(matches!(
            dependence_experiment(&d, &d2, &b, 0.01, Scheme::SemiImplicit),
            Err(Error::Config(_))
        ));
    }
}
