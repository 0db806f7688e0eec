//! Refinement studies in the number of modes, in `eps` and in `dt`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{homogeneous_benchmark, realized_norms, RealizedNorms};
use crate::error::{Error, Result};
use crate::galerkin::{simulate, ProblemData, Scheme, Trajectory};
use crate::potentials::YosidaParams;
use crate::spectral::{BoxDomain, Coeffs, SpectralBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceKind {
    /// Errors against the largest mode count of the schedule.
    ModeCount,
    /// Successive differences between neighbouring `eps` levels.
    Epsilon,
    /// Final-time errors against the exact spatially constant solution when
    /// the data allow it, successive differences otherwise.
    TimeStep,
}

/// Everything but the swept parameter.
#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub data: ProblemData,
    pub domain: BoxDomain,
    pub n_modes: usize,
    pub dt: f64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub parameter: f64,
    pub error: f64,
    /// Observed order against the previous row.
    pub rate: Option<f64>,
}

pub fn convergence_study(
    kind: ConvergenceKind,
    schedule: &[f64],
    setup: &ConvergenceSetup,
) -> Result<Vec<ConvergenceRow>> {
    check_schedule(kind, schedule)?;
    let errors: Vec<(f64, f64)> = match kind {
        ConvergenceKind::ModeCount => modes(schedule, setup)?,
        ConvergenceKind::Epsilon => return Ok(epsilon_sweep(schedule, setup)?.rows),
        ConvergenceKind::TimeStep => time_steps(schedule, setup)?,
    };
    Ok(with_rates(&errors))
}

fn check_schedule(kind: ConvergenceKind, s: &[f64]) -> Result<()> {
    if s.len() < 2 {
        return Err(Error::Config("convergence schedule needs at least two entries".into()));
    }
    let inc = s.windows(2).all(|w| w[1] > w[0]);
    let dec = s.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) || s.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::Config(format!(
            "convergence schedule must be positive and strictly monotone, got {s:?}"
        )));
    }
    if kind == ConvergenceKind::ModeCount && s.iter().any(|x| x.fract() != 0.0) {
        return Err(Error::Config("mode counts must be integers".into()));
    }
    Ok(())
}

fn with_rates(errors: &[(f64, f64)]) -> Vec<ConvergenceRow> {
    errors
        .iter()
        .enumerate()
        .map(|(i, &(p, e))| ConvergenceRow {
            parameter: p,
            error: e,
            rate: (i > 0)
                .then(|| {
                    let (p0, e0) = errors[i - 1];
                    (e0 / e).ln() / (p0 / p).ln()
                })
                .filter(|r| r.is_finite()),
        })
        .collect()
}

fn run(data: &ProblemData, basis: &SpectralBasis, dt: f64, scheme: Scheme) -> Result<Trajectory> {
    Ok(simulate(data, basis, dt, scheme, &mut [])?)
}

/// `max_t |phi_a - phi_b|_*` with the shorter coefficient vector zero padded.
fn linf_vstar(a: &Trajectory, b: &Trajectory, basis: &SpectralBasis) -> Result<f64> {
    if a.times() != b.times() {
        return Err(Error::Numeric("runs ended on different time grids".into()));
    }
    let n = basis.n();
    let pad = |c: &Coeffs| {
        let mut out = Coeffs::zeros(n);
        out.rows_mut(0, c.len()).copy_from(&c.0);
        out
    };
    Ok(a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| basis.norm_vstar(&Coeffs(pad(&x.phi).0 - pad(&y.phi).0)))
        .fold(0.0, f64::max))
}

fn modes(schedule: &[f64], s: &ConvergenceSetup) -> Result<Vec<(f64, f64)>> {
    let mut ns: Vec<usize> = schedule.iter().map(|&x| x as usize).collect();
    ns.sort_unstable();
    let bases: Vec<SpectralBasis> = ns
        .iter()
        .map(|&n| SpectralBasis::build(&s.domain, n))
        .collect::<Result<_>>()?;
    let runs: Vec<Trajectory> = bases
        .par_iter()
        .map(|b| run(&s.data, b, s.dt, s.scheme))
        .collect::<Result<_>>()?;
    let (reference, rest) = runs.split_last().expect("schedule has two entries");
    let top = bases.last().expect("schedule has two entries");
    rest.iter()
        .zip(&ns)
        .map(|(r, &n)| Ok((n as f64, linf_vstar(r, reference, top)?)))
        .collect()
}

/// Members of an `eps` sweep with their realized norms.
#[derive(Debug, Clone)]
pub struct EpsilonSweep {
    /// Successive differences `max_t |phi_eps_i - phi_eps_{i+1}|_*`, keyed by `eps_{i+1}`.
    pub rows: Vec<ConvergenceRow>,
    pub realized: Vec<RealizedNorms>,
}

pub fn epsilon_sweep(schedule: &[f64], setup: &ConvergenceSetup) -> Result<EpsilonSweep> {
    check_schedule(ConvergenceKind::Epsilon, schedule)?;
    let basis = SpectralBasis::build(&setup.domain, setup.n_modes)?;
    let runs: Vec<Trajectory> = schedule
        .par_iter()
        .map(|&e| run(&setup.data.with_eps(YosidaParams::new(e)?), &basis, setup.dt, setup.scheme))
        .collect::<Result<_>>()?;
    let errors = runs
        .windows(2)
        .zip(schedule.iter().skip(1))
        .map(|(w, &e)| Ok((e, linf_vstar(&w[0], &w[1], &basis)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EpsilonSweep {
        rows: with_rates(&errors),
        realized: runs.iter().map(|t| realized_norms(&t.records)).collect(),
    })
}

fn is_homogeneous(d: &ProblemData) -> bool {
    d.f.is_zero() && d.g.is_zero() && d.phi0.modes.is_empty() && d.w0.modes.is_empty() && d.w1.modes.is_empty()
}

fn time_steps(schedule: &[f64], s: &ConvergenceSetup) -> Result<Vec<(f64, f64)>> {
    let basis = SpectralBasis::build(&s.domain, s.n_modes)?;
    let finals: Vec<_> = schedule
        .par_iter()
        .map(|&dt| {
            let t = run(&s.data, &basis, dt, s.scheme)?;
            Ok(t.last_state().cloned().expect("at least the initial record"))
        })
        .collect::<Result<_>>()?;
    if is_homogeneous(&s.data) {
        let d = &s.data;
        let exact = homogeneous_benchmark(
            d.phi0.constant,
            d.w0.constant,
            d.w1.constant,
            d.params.gamma,
            d.params.lambda,
        )
        .at(d.t_final);
        let err = |st: &crate::galerkin::GalerkinState| {
            let c = basis.mean_value(&st.phi);
            let v = basis.mean_value(&st.v);
            (c - exact.c).abs().max((v - exact.v).abs())
        };
        Ok(schedule.iter().zip(&finals).map(|(&dt, st)| (dt, err(st))).collect())
    } else {
        Ok(finals
            .windows(2)
            .zip(schedule.iter().skip(1))
            .map(|(w, &dt)| {
                let dphi = Coeffs(&w[0].phi.0 - &w[1].phi.0);
                let dv = Coeffs(&w[0].v.0 - &w[1].v.0);
                (dt, basis.norm_vstar(&dphi) + basis.norm_h(&dv))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{SourceExpr, SpatialExpr};
    use crate::galerkin::PhysicalParams;
    use crate::potentials::PotentialSpec;

    fn setup(phi0: SpatialExpr) -> ConvergenceSetup {
        ConvergenceSetup {
            data: ProblemData {
                params: PhysicalParams {
                    lambda: 2.0,
                    ..PhysicalParams::default()
                },
                potential: PotentialSpec::Regular,
                eps: YosidaParams::new(0.1).unwrap(),
                f: SourceExpr::zero(),
                g: SourceExpr::zero(),
                phi0,
                w0: SpatialExpr::constant(0.0),
                w1: SpatialExpr::constant(0.0),
                t_final: 0.5,
            },
            domain: BoxDomain::interval(1.0, 64).unwrap(),
            n_modes: 16,
            dt: 0.01,
            scheme: Scheme::SemiImplicit,
        }
    }

    #[test]
    fn constant_data_modes_at_noise_floor() {
        let rows = convergence_study(
            ConvergenceKind::ModeCount,
            &[4.0, 8.0, 16.0, 32.0],
            &setup(SpatialExpr::constant(0.3)),
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.error < 1e-14), "{rows:?}");
    }

    #[test]
    fn time_step_against_benchmark_is_first_order() {
        let rows = convergence_study(
            ConvergenceKind::TimeStep,
            &[1e-2, 5e-3, 2.5e-3],
            &setup(SpatialExpr::constant(0.3)),
        )
        .unwrap();
        for r in &rows[1..] {
            let rate = r.rate.unwrap();
            assert!((rate - 1.0).abs() < 0.2, "{rows:?}");
        }
    }

    #[test]
    fn eps_differences_decrease() {
        let rows = convergence_study(
            ConvergenceKind::Epsilon,
            &[0.2, 0.1, 0.05, 0.025],
            &setup(SpatialExpr::constant(0.0).with_mode(&[1], 0.9)),
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[1].error < w[0].error), "{rows:?}");
    }

    #[test]
    fn rejects_non_monotone_schedule() {
        let s = setup(SpatialExpr::constant(0.0));
        assert!(convergence_study(ConvergenceKind::Epsilon, &[0.1, 0.2, 0.05], &s).is_err());
        assert!(convergence_study(ConvergenceKind::ModeCount, &[4.5, 8.0], &s).is_err());
    }
}
