//! Self-checks behind the `verify` subcommands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elliptic::{check_H2_surrogate, check_L6_bound, solve_elliptic, solve_elliptic_from, EllipticProblem};
use crate::error::Result;
use crate::potentials::{PotentialSpec, YosidaParams};
use crate::spectral::{BoxDomain, Coeffs, Field, SpectralBasis};

pub const SUITE_TOL: f64 = 1e-10;
pub const N_SUITE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Worst observed defect; `pass` iff `value <= tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Resolvent by plain bisection on `y + eps beta°(y) = r`, independent of the
/// closed forms used by [`PotentialSpec::resolvent`].
pub fn bisection_resolvent(spec: &PotentialSpec, eps: f64, r: f64) -> f64 {
    let (d_lo, d_hi) = spec.domain();
    let g = |y: f64| match spec.beta_min_section(y) {
        Some(b) => y + eps * b - r,
        None => {
            if y > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        }
    };
    let (mut lo, mut hi) = if r >= 0.0 { (0.0, r.min(d_hi)) } else { (r.max(d_lo), 0.0) };
    // Vertical part of the graph at a closed endpoint.
    if r > 0.0 && g(hi) < 0.0 {
        return hi;
    }
    if r < 0.0 && g(lo) > 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Yosida properties on `samples` random points in `[-3, 3]` per potential
/// and `eps`.
pub fn potentials_suite(
    potentials: &[(String, PotentialSpec)],
    eps_values: &[f64],
    samples: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: "potentials".into(),
        checks: Vec::new(),
    };
    for (label, spec) in potentials {
        for &e in eps_values {
            let eps = YosidaParams::relaxed(e)?;
            let mut xs: Vec<f64> = (0..samples).map(|_| rng.gen_range(-3.0..3.0)).collect();
            xs.sort_by(f64::total_cmp);
            let ys = xs.iter().map(|&x| spec.yosida(eps, x)).collect::<Result<Vec<_>>>()?;
            let mut mono = 0.0_f64;
            let mut lip = 0.0_f64;
            for (xw, yw) in xs.windows(2).zip(ys.windows(2)) {
                let (dx, dy) = (xw[1] - xw[0], yw[1] - yw[0]);
                mono = mono.max(-dy);
                lip = lip.max(dy - dx / e);
            }
            let mut dom = 0.0_f64;
            let mut sandwich = 0.0_f64;
            let mut oracle = 0.0_f64;
            for (&x, &y) in xs.iter().zip(&ys) {
                if let (true, Some(b0)) = (spec.is_interior(x), spec.beta_min_section(x)) {
                    dom = dom.max(y.abs() - b0.abs());
                }
                let env = spec.yosida_primitive(eps, x)?;
                sandwich = sandwich.max(-env);
                let bh = spec.beta_hat(x);
                if bh.is_finite() {
                    sandwich = sandwich.max(env - bh);
                }
                let j = spec.resolvent(eps, x)?;
                oracle = oracle.max((j - bisection_resolvent(spec, e, x)).abs());
            }
            let tag = |what: &str| format!("{label} eps={e}: {what}");
            report.checks.push(Check::new(tag("monotone"), mono, SUITE_TOL));
            report.checks.push(Check::new(tag("1/eps-Lipschitz"), lip, SUITE_TOL));
            report.checks.push(Check::new(tag("beta_eps(0) = 0"), spec.yosida(eps, 0.0)?.abs(), SUITE_TOL));
            report.checks.push(Check::new(tag("|beta_eps| <= |beta°|"), dom, SUITE_TOL));
            report.checks.push(Check::new(tag("0 <= envelope <= beta_hat"), sandwich, SUITE_TOL));
            report.checks.push(Check::new(tag("resolvent vs bisection"), oracle, SUITE_TOL));
        }
    }
    Ok(report)
}

fn random_zero_mean(basis: &SpectralBasis, rng: &mut ChaCha8Rng) -> Coeffs {
    let mut c = Coeffs::from_vec((0..basis.n()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    c[0] = 0.0;
    c
}

/// Symmetry, energy identity and time-integration identity of `N` plus the
/// domain check, on each basis.
pub fn spectral_suite(bases: &[SpectralBasis], trials: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: "spectral".into(),
        checks: Vec::new(),
    };
    for basis in bases {
        let label = format!("dim={} n={}", basis.domain().dim(), basis.n());
        let (mut sym, mut ener, mut time) = (0.0_f64, 0.0_f64, 0.0_f64);
        for _ in 0..trials {
            let a = random_zero_mean(basis, &mut rng);
            let b = random_zero_mean(basis, &mut rng);
            let (na, nb) = (basis.solve_n(&a)?, basis.solve_n(&b)?);
            let scale = 1.0 + a.norm() * b.norm();
            sym = sym.max((basis.inner(&a, &nb) - basis.inner(&b, &na)).abs() / scale);
            let e1 = basis.inner(&a, &na);
            let e2 = basis.grad_norm_sq(&na);
            let e3 = basis.norm_vstar(&a).powi(2);
            ener = ener.max((e1 - e2).abs().max((e1 - e3).abs()) / (1.0 + e1));
            // Linear path v(t) = a + t b on [0, 1].
            let path: Vec<(f64, Coeffs, Coeffs)> = (0..=10)
                .map(|k| {
                    let t = k as f64 / 10.0;
                    (t, Coeffs(&a.0 + &b.0 * t), b.clone())
                })
                .collect();
            let lhs = basis.dual_pairing_integral(&path)?;
            let end = Coeffs(&a.0 + &b.0);
            let rhs = 0.5 * basis.norm_vstar(&end).powi(2) - 0.5 * basis.norm_vstar(&a).powi(2);
            time = time.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
        }
        report.checks.push(Check::new(format!("{label}: N symmetry"), sym, N_SUITE_TOL));
        report.checks.push(Check::new(format!("{label}: N energy identity"), ener, N_SUITE_TOL));
        report.checks.push(Check::new(format!("{label}: N time integration"), time, N_SUITE_TOL));
        report.checks.push(Check::new(
            format!("{label}: orthonormality"),
            basis.orthonormality_residual(),
            N_SUITE_TOL,
        ));
        let rejects = basis.solve_n(&basis.constant_coeffs(1.0)).is_err();
        report.checks.push(Check::flag(format!("{label}: nonzero mean rejected"), rejects));
    }
    Ok(report)
}

/// Constant-data equality, randomized `L^6` bound and two-start agreement.
pub fn elliptic_suite(
    domain: &BoxDomain,
    n: usize,
    potential: &PotentialSpec,
    eps: YosidaParams,
    trials: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let basis = SpectralBasis::build(domain, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: "elliptic".into(),
        checks: Vec::new(),
    };
    let constant = EllipticProblem {
        basis: basis.clone(),
        potential: potential.clone(),
        eps,
        h: Field::constant(domain, 2.0),
    };
    let sol = solve_elliptic(&constant)?;
    let l6 = check_L6_bound(&constant, &sol.u)?;
    report.checks.push(Check::new("constant data: L6 equality", (l6.lhs - l6.rhs).abs(), N_SUITE_TOL));
    let mut worst_ratio = 0.0_f64;
    let mut worst_starts = 0.0_f64;
    let mut all_pass = true;
    let mut finite = true;
    for _ in 0..trials {
        let mut c = Coeffs::from_vec((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        c[0] *= 0.5;
        let h = basis.to_field(&c)?;
        let p = EllipticProblem {
            basis: basis.clone(),
            potential: potential.clone(),
            eps,
            h,
        };
        let a = solve_elliptic(&p)?;
        let b = solve_elliptic_from(&p, c)?;
        worst_starts = worst_starts.max((&a.u.0 - &b.u.0).amax());
        let chk = check_L6_bound(&p, &a.u)?;
        all_pass &= chk.pass;
        worst_ratio = worst_ratio.max(chk.lhs / chk.rhs);
        let h2 = check_H2_surrogate(&p, &a.u)?;
        finite &= h2.spectral_h2.is_finite() && h2.laplacian_l6.is_finite();
    }
    report.checks.push(Check::new(
        "random data: max |beta_eps(u)|_6 / |h|_6 - 1",
        (worst_ratio - 1.0).max(0.0),
        crate::elliptic::L6_SLACK,
    ));
    report.checks.push(Check::flag("random data: every L6 check passed", all_pass));
    report.checks.push(Check::new("two starts agree", worst_starts, 1e-8));
    report.checks.push(Check::flag("H2 surrogates finite", finite));
    Ok(report)
}

/// Prototype family used when a configuration names no potential.
pub fn prototypes() -> Vec<(String, PotentialSpec)> {
    vec![
        ("regular".into(), PotentialSpec::Regular),
        ("logarithmic".into(), PotentialSpec::Logarithmic { c1: 1.5 }),
        ("double_obstacle".into(), PotentialSpec::DoubleObstacle { c2: 1.0 }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_oracle_known_values() {
        let e = 0.5;
        assert_eq!(bisection_resolvent(&PotentialSpec::DoubleObstacle { c2: 1.0 }, e, 3.0), 1.0);
        // y + 0.5 y^3 = 1.5 at y = 1.
        assert!((bisection_resolvent(&PotentialSpec::Regular, e, 1.5) - 1.0).abs() < 1e-14);
        let y = bisection_resolvent(&PotentialSpec::Logarithmic { c1: 2.0 }, e, 0.8);
        assert!((y + e * 2.0 * y.atanh() - 0.8).abs() < 1e-13);
    }

    #[test]
    fn small_suites_pass() {
        let p = potentials_suite(&prototypes(), &[0.5, 0.05], 500, 1).unwrap();
        assert!(p.passed(), "{:?}", p.failures().collect::<Vec<_>>());
        let d = BoxDomain::interval(1.0, 32).unwrap();
        let s = spectral_suite(&[SpectralBasis::build(&d, 8).unwrap()], 3, 1).unwrap();
        assert!(s.passed(), "{:?}", s.failures().collect::<Vec<_>>());
        let e = elliptic_suite(&d, 8, &PotentialSpec::Regular, YosidaParams::new(0.1).unwrap(), 3, 1).unwrap();
        assert!(e.passed(), "{:?}", e.failures().collect::<Vec<_>>());
    }
}
