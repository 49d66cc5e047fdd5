use std::sync::Arc;

use gwb_roe::discrete_sets::{
    deformed_lattice, max_discreteness_radius, verify_uniform_discreteness, UniformlyDiscreteSet,
};
use gwb_roe::grid::{Boundary, Grid, GridFunction};
use gwb_roe::linalg::subspace_distance;
use gwb_roe::localization::{
    build_extremely_localized_family, build_power_law_family, certify_exponential, certify_s_localized,
    localization_moment, lowdin_orthonormalize, power_law_profiles,
};
use gwb_roe::models::{build_gubanov, build_kronig_penney, DeformationKind};
use gwb_roe::roe_ops::{build_intertwiner, RankOneSumOperator};
use gwb_roe::series_bounds::tail_sum;
use gwb_roe::Complex64;
use proptest::prelude::*;

fn grid(dim: usize, l: f64, h: f64) -> Arc<Grid> {
    Grid::new(dim, l, h, Boundary::Dirichlet).unwrap()
}

fn random_function(g: &Arc<Grid>, seed: &[f64]) -> GridFunction {
    GridFunction::from_fn(g, |x| {
        let t: f64 = x.iter().sum();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new((seed[0] * t).sin() + seed[1], (seed[2] * t).cos() * seed[3]) * (-r2 * seed[4]).exp()
    })
}

fn seed() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..3.0, 5)
}

fn point_set(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-20.0f64..20.0, dim), 2..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cauchy_schwarz(a in seed(), b in seed(), dim in 1usize..=2) {
        let g = grid(dim, 3.0, 0.1);
        let f = random_function(&g, &a);
        let h = random_function(&g, &b);
        let ip = f.inner_product(&h).unwrap().norm();
        prop_assert!(ip <= f.norm() * h.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn nested_restrictions(a in seed(), c in -2.0f64..2.0, r1 in 0.0f64..4.0, r2 in 0.0f64..4.0) {
        let g = grid(2, 3.0, 0.1);
        let f = random_function(&g, &a);
        let center = [c, -0.5 * c];
        let twice = f.restrict_to_ball(&center, r1).restrict_to_ball(&center, r2);
        prop_assert_eq!(twice, f.restrict_to_ball(&center, r1.min(r2)));
    }

    #[test]
    fn ball_partition_never_exceeds_norm(a in seed(), r in 0.2f64..0.5) {
        let g = grid(1, 3.0, 0.05);
        let f = random_function(&g, &a);
        let centers: Vec<f64> = (-3..=3).map(f64::from).collect();
        let covered: f64 = centers.iter().map(|c| f.restrict_to_ball(&[*c], r).norm_sq()).sum();
        prop_assert!(covered <= f.norm_sq() * (1.0 + 1e-12));
        let whole: f64 = [0.0].iter().map(|c| f.restrict_to_ball(&[*c], 10.0).norm_sq()).sum();
        prop_assert!((whole - f.norm_sq()).abs() <= 1e-12 * f.norm_sq());
    }

    #[test]
    fn max_radius_is_admissible(points in point_set(2), shift in prop::collection::vec(-5.0f64..5.0, 2)) {
        let r = max_discreteness_radius(&points).unwrap();
        prop_assume!(r > 0.0);
        prop_assert!(verify_uniform_discreteness(&points, r));
        let moved: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let r2 = max_discreteness_radius(&moved).unwrap();
        prop_assert!((r - r2).abs() <= 1e-12 * (1.0 + r));
    }

    #[test]
    fn deformed_lattice_stays_discrete(eps in 0.0f64..0.45, dim in 1usize..=2, linear in any::<bool>()) {
        let kind = if linear { DeformationKind::Linear { eps } } else { DeformationKind::Sine { eps } };
        let map = build_gubanov(kind, dim).unwrap();
        let set = deformed_lattice(|n| map.inverse(n), &vec![-6.0; dim], &vec![6.0; dim]).unwrap();
        prop_assert!(set.radius() >= (1.0 - 2.0 * eps) / 2.0 - 1e-9);
    }

    #[test]
    fn inverse_and_jacobian(eps in 0.0f64..0.45, x in prop::collection::vec(-10.0f64..10.0, 2)) {
        let map = build_gubanov(DeformationKind::Sine { eps }, 2).unwrap();
        let y = map.inverse(&x).unwrap();
        let back = map.forward(&y);
        prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-10));
        prop_assert!(map.jacobian(&x) > 0.0);
    }

    #[test]
    fn moment_is_monotone_in_s(a in seed(), s1 in 0.0f64..3.0, s2 in 0.0f64..3.0) {
        let g = grid(1, 4.0, 0.05);
        let f = random_function(&g, &a);
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let m_lo = localization_moment(&f, &[0.0], lo, None).unwrap();
        let m_hi = localization_moment(&f, &[0.0], hi, None).unwrap();
        prop_assert!(m_lo <= m_hi * (1.0 + 1e-12));
    }

    #[test]
    fn exponential_bounds_algebraic(alpha in 0.3f64..2.0, s in 0.6f64..3.0) {
        let g = grid(1, 6.0, 0.05);
        let centers = UniformlyDiscreteSet::lattice(1, -2, 2).unwrap();
        let mut family = build_extremely_localized_family(&centers, &g).unwrap();
        let me = certify_exponential(&mut family, alpha).unwrap();
        let ms = certify_s_localized(&mut family, s).unwrap();
        // sup_t ⟨t⟩^{2s} e^{-2αt}: either t = 0 or the larger root of αt² − st + α = 0.
        let disc = s * s - 4.0 * alpha * alpha;
        let t = if disc > 0.0 { (s + disc.sqrt()) / (2.0 * alpha) } else { 0.0 };
        let sup = ((1.0 + t * t).powf(s) * (-2.0 * alpha * t).exp()).max(1.0);
        prop_assert!(ms <= me * sup * (1.0 + 1e-9));
    }

    #[test]
    fn lowdin_preserves_span(p in 1.0f64..3.0, n in 1i64..4) {
        let g = grid(1, 6.0, 0.05);
        let centers = UniformlyDiscreteSet::lattice(1, -n, n).unwrap();
        let raw = power_law_profiles(&centers, &g, p);
        let out = lowdin_orthonormalize(&raw).unwrap();
        prop_assert!(subspace_distance(&out, &raw).unwrap() <= 1e-8);
    }

    #[test]
    fn tail_sum_monotone(s1 in 0.6f64..3.0, s2 in 0.6f64..3.0, r1 in 0.0f64..10.0, r2 in 0.0f64..10.0, x in -3.0f64..3.0) {
        let small = UniformlyDiscreteSet::lattice(1, -20, 20).unwrap();
        let big = UniformlyDiscreteSet::lattice(1, -40, 40).unwrap();
        let (s_lo, s_hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let (r_lo, r_hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(tail_sum(&big, &[x], r_hi, s_lo) <= tail_sum(&big, &[x], r_lo, s_lo));
        prop_assert!(tail_sum(&big, &[x], r_lo, s_hi) <= tail_sum(&big, &[x], r_lo, s_lo));
        prop_assert!(tail_sum(&small, &[x], r_lo, s_lo) <= tail_sum(&big, &[x], r_lo, s_lo));
    }

    #[test]
    fn adjoint_laws(a in seed(), b in seed(), c in seed(), d in seed()) {
        let g = grid(1, 3.0, 0.1);
        let t = RankOneSumOperator::from_pairs(&g, vec![
            (random_function(&g, &a), random_function(&g, &b)),
            (random_function(&g, &c), random_function(&g, &d)),
        ]).unwrap();
        let adj = t.adjoint();
        let back = adj.adjoint();
        prop_assert_eq!(back.coeffs(), t.coeffs());
        let u = random_function(&g, &c);
        let v = random_function(&g, &b);
        let lhs = t.apply(&u).unwrap().inner_product(&v).unwrap();
        let rhs = u.inner_product(&adj.apply(&v).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn projection_and_mvn_laws(p in 1.0f64..3.0, n in 1i64..4) {
        let g = grid(1, 6.0, 0.05);
        let centers = UniformlyDiscreteSet::lattice(1, -n, n).unwrap();
        let psi = build_power_law_family(&centers, &g, p).unwrap();
        let proj = RankOneSumOperator::projection(psi.members_arc().clone()).unwrap();
        prop_assert!(proj.compose(&proj).unwrap().sub(&proj).unwrap().operator_norm() <= 1e-10);
        prop_assert!(proj.adjoint().sub(&proj).unwrap().operator_norm() <= 1e-12);
        prop_assert!((proj.operator_norm() - 1.0).abs() <= 1e-10);
        let phi = build_extremely_localized_family(&centers, &g).unwrap();
        let r = build_intertwiner(&psi, &phi).unwrap().mvn_residuals().unwrap();
        prop_assert!(r.source <= 1e-8 && r.target <= 1e-8);
    }

    #[test]
    fn kronig_penney_symmetric(v0 in 0.0f64..200.0, a in 0.2f64..0.8) {
        let g = grid(1, 3.0, 0.025);
        let h = build_kronig_penney(&g, v0, a).unwrap();
        let m = h.dense();
        prop_assert!((&m - m.transpose()).amax() <= 1e-12);
    }
}
