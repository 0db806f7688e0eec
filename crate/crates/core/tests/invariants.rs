use proptest::prelude::*;

use chgalerkin::analysis::{apriori_monitor, dependence_experiment, mean_law_check};
use chgalerkin::elliptic::{check_L6_bound, solve_elliptic, EllipticProblem};
use chgalerkin::expr::{SourceExpr, SpatialExpr};
use chgalerkin::galerkin::{simulate, PhysicalParams, ProblemData, Scheme};
use chgalerkin::potentials::{PotentialSpec, YosidaParams};
use chgalerkin::spectral::{BoxDomain, Coeffs, SpectralBasis};

fn potential(i: usize) -> PotentialSpec {
    match i {
        0 => PotentialSpec::Regular,
        1 => PotentialSpec::Logarithmic { c1: 1.5 },
        _ => PotentialSpec::DoubleObstacle { c2: 1.0 },
    }
}

prop_compose! {
    fn problem()(
        pot in 0usize..3,
        eps in 0.05f64..0.5,
        gamma in 0.5f64..3.0,
        lambda in 0.5f64..3.0,
        kappa1 in 0.1f64..2.0,
        kappa2 in 0.1f64..2.0,
        f0 in -0.1f64..0.1,
        f1 in -0.1f64..0.1,
        m in -0.3f64..0.3,
        a1 in -0.2f64..0.2,
        a2 in -0.2f64..0.2,
        scheme in prop::bool::ANY,
    ) -> (ProblemData, Scheme) {
        (
            ProblemData {
                params: PhysicalParams { gamma, a: 0.0, b: 1.0, kappa1, kappa2, lambda },
                potential: potential(pot),
                eps: YosidaParams::new(eps).unwrap(),
                f: SourceExpr::steady(SpatialExpr::constant(f0).with_mode(&[2], f1)),
                g: SourceExpr::steady(SpatialExpr::constant(0.1)),
                phi0: SpatialExpr::constant(m).with_mode(&[1], a1).with_mode(&[4], a2),
                w0: SpatialExpr::constant(0.0).with_mode(&[1], 0.1),
                w1: SpatialExpr::constant(0.0),
                t_final: 0.2,
            },
            if scheme { Scheme::BackwardEuler } else { Scheme::SemiImplicit },
        )
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mean_follows_scalar_recursion_and_stays_in_band((data, scheme) in problem()) {
        let domain = BoxDomain::interval(1.0, 32).unwrap();
        let basis = SpectralBasis::build(&domain, 8).unwrap();
        let traj = simulate(&data, &basis, 0.01, scheme, &mut []).unwrap();
        let law = mean_law_check(&traj.records, &data, &domain);
        prop_assert!(law.discrete_error <= 1e-12, "{}", law.discrete_error);
        prop_assert!(apriori_monitor(&traj.records, data.mean_band(&domain)).is_empty());
    }

    #[test]
    fn identical_inputs_have_zero_difference((data, scheme) in problem()) {
        let basis = SpectralBasis::build(&BoxDomain::interval(1.0, 32).unwrap(), 8).unwrap();
        let rep = dependence_experiment(&data, &data, &basis, 0.02, scheme).unwrap();
        prop_assert!(rep.lhs <= 1e-12);
        prop_assert!(rep.empirical_k2.is_none());
    }

    #[test]
    fn elliptic_l6_bound_holds(
        pot in 0usize..3,
        eps in 0.05f64..0.5,
        c in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let domain = BoxDomain::interval(1.0, 64).unwrap();
        let basis = SpectralBasis::build(&domain, 12).unwrap();
        let h = basis.to_field(&Coeffs::from_vec(c)).unwrap();
        let p = EllipticProblem { basis, potential: potential(pot), eps: YosidaParams::new(eps).unwrap(), h };
        let sol = solve_elliptic(&p).unwrap();
        prop_assert!(sol.residual <= 1e-9);
        prop_assert!(check_L6_bound(&p, &sol.u).unwrap().pass);
    }
}
