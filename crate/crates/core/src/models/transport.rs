use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_sets::UniformlyDiscreteSet;
use crate::grid::{BoxGuard, GridFunction};
use crate::localization::{certify_exponential, DecayClass, WannierFamily};
use crate::models::GubanovMap;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `(Yφ)(x) = J(x)^{1/2} φ(f(x))`.
    Forward,
    /// `(Y^{-1}φ)(x) = J(h(x))^{-1/2} φ(h(x))`.
    Inverse,
}

/// Applies `Y` or `Y^{-1}` by cubic interpolation of `φ` at the mapped points.
///
/// Mapped points that leave the box read zero. With a guard this is accepted
/// only while `φ` has negligible mass in the edge layer the map can reach;
/// without one `φ` is taken to vanish outside the box.
pub fn apply_y(map: &GubanovMap, phi: &GridFunction, direction: Direction, guard: Option<&BoxGuard>) -> Result<GridFunction> {
    let grid = phi.grid().clone();
    if map.dim() != grid.dim() {
        return Err(Error::InvalidArgument("map and grid dimensions differ".into()));
    }
    if map.is_identity() {
        return Ok(phi.clone());
    }
    let l = grid.half_width();
    let mapped = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            match direction {
                Direction::Forward => Ok((map.forward(x), map.jacobian(x).sqrt())),
                Direction::Inverse => {
                    let y = map.inverse(x)?;
                    let j = map.jacobian(&y);
                    Ok((y, 1.0 / j.sqrt()))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let exits = mapped.iter().any(|(y, _)| y.iter().any(|v| v.abs() > l));
    if let (true, Some(guard)) = (exits, guard) {
        let width = guard.margin.max(map.max_displacement(l) + 2.0 * grid.spacing());
        let escaped = phi.escaped_mass(width);
        if escaped > guard.tolerance {
            return Err(Error::OutsideBox(format!(
                "mass {escaped:.3e} within {width:.3} of the edge exceeds {:.1e}",
                guard.tolerance
            )));
        }
    }
    let values: Vec<Complex64> = mapped.par_iter().map(|(y, w)| phi.interpolate_cubic(y) * *w).collect();
    GridFunction::from_values(&grid, values)
}

/// Transports an exponentially certified family: centers `h(n)`, members
/// `Yψ_n`, certified at `β = α(1 − 2ξ)`.
///
/// Fails when the transported constant exceeds the input one by more than 1%.
pub fn deform_gwb(map: &GubanovMap, family: &WannierFamily, alpha: f64) -> Result<WannierFamily> {
    let input = family
        .exponential_record(alpha)
        .ok_or_else(|| Error::NotLocalized(format!("family has no exponential certificate at alpha = {alpha}")))?
        .constant;
    if map.dim() != family.grid().dim() {
        return Err(Error::InvalidArgument("map and family dimensions differ".into()));
    }
    let centers = family.centers();
    let points = centers.points().iter().map(|n| map.inverse(n)).collect::<Result<Vec<_>>>()?;
    let labels = centers.labels().map(|l| l.to_vec());
    let set = if map.is_identity() {
        centers.clone()
    } else if points.len() == 1 {
        UniformlyDiscreteSet::new(centers.dim(), points, centers.radius() * (1.0 - 2.0 * map.xi()), labels)?
    } else {
        UniformlyDiscreteSet::with_max_radius(centers.dim(), points, labels)?
    };
    let guard = family.guard().copied();
    let members = family
        .members()
        .iter()
        .map(|m| apply_y(map, m, Direction::Forward, guard.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let beta = alpha * (1.0 - 2.0 * map.xi());
    let mut out = WannierFamily::new(set, members, DecayClass::Exponential { rate: beta }, guard)?;
    let output = certify_exponential(&mut out, beta)?;
    if output > input * (1.0 + 1e-2) {
        return Err(Error::Certification(format!(
            "M(beta = {beta}) = {output:.6e} exceeds M(alpha = {alpha}) = {input:.6e} by more than 1%"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, Grid};
    use crate::localization::lowdin_orthonormalize;
    use crate::models::{build_gubanov, DeformationKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(grid: &std::sync::Arc<Grid>, c: &[f64], w: f64, k: f64) -> GridFunction {
        let mut f = GridFunction::from_fn(grid, |x| {
            let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
            Complex64::from_polar((-r2 / (2.0 * w * w)).exp(), k * x[0])
        });
        f.scale(1.0 / f.norm());
        f
    }

    #[test]
    fn identity_map_is_exact() {
        let g = Grid::new(1, 4.0, 0.05, Boundary::Dirichlet).unwrap();
        let m = build_gubanov(DeformationKind::Zero, 1).unwrap();
        let f = gaussian(&g, &[0.3], 0.5, 1.0);
        assert_eq!(apply_y(&m, &f, Direction::Forward, None).unwrap(), f);
        assert_eq!(apply_y(&m, &f, Direction::Inverse, None).unwrap(), f);
    }

    #[test]
    fn round_trip_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (dim, h) in [(1usize, 0.02), (2, 0.05)] {
            let g = Grid::new(dim, 5.0, h, Boundary::Dirichlet).unwrap();
            let m = build_gubanov(DeformationKind::Sine { eps: 0.05 }, dim).unwrap();
            for _ in 0..3 {
                let c1: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let c2: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let a = gaussian(&g, &c1, 0.6, rng.gen_range(-1.0..1.0));
                let b = gaussian(&g, &c2, 0.7, rng.gen_range(-1.0..1.0));
                let ya = apply_y(&m, &a, Direction::Forward, None).unwrap();
                let yb = apply_y(&m, &b, Direction::Forward, None).unwrap();
                let back = apply_y(&m, &ya, Direction::Inverse, None).unwrap();
                assert!(back.sub(&a).unwrap().norm() < 1e-4);
                assert!((ya.norm() - 1.0).abs() < 1e-4);
                let ip = ya.inner_product(&yb).unwrap() - a.inner_product(&b).unwrap();
                assert!(ip.norm() < 1e-4, "{ip}");
            }
        }
    }

    #[test]
    fn mapped_mass_outside_box_is_refused() {
        let g = Grid::new(1, 3.0, 0.05, Boundary::Dirichlet).unwrap();
        let m = build_gubanov(DeformationKind::Linear { eps: 0.2 }, 1).unwrap();
        let f = gaussian(&g, &[2.6], 0.2, 0.0);
        let guard = BoxGuard::for_grid(&g);
        assert!(matches!(apply_y(&m, &f, Direction::Forward, Some(&guard)), Err(Error::OutsideBox(_))));
        let inner = gaussian(&g, &[0.0], 0.2, 0.0);
        assert!(apply_y(&m, &inner, Direction::Forward, Some(&guard)).is_ok());
    }

    #[test]
    fn linear_deformation_moves_centers() {
        let eps = 0.1;
        let g = Grid::new(1, 6.0, 0.02, Boundary::Dirichlet).unwrap();
        let d = UniformlyDiscreteSet::lattice(1, -2, 2).unwrap();
        let frame: Vec<GridFunction> = d.points().iter().map(|c| gaussian(&g, c, 0.2, 0.0)).collect();
        let members = lowdin_orthonormalize(&frame).unwrap();
        let mut fam = WannierFamily::new(d.clone(), members, DecayClass::Unspecified, Some(BoxGuard::for_grid(&g))).unwrap();
        certify_exponential(&mut fam, 1.0).unwrap();
        let m = build_gubanov(DeformationKind::Linear { eps }, 1).unwrap();
        let out = deform_gwb(&m, &fam, 1.0).unwrap();
        for (p, n) in out.centers().points().iter().zip(d.points()) {
            assert!((p[0] - n[0] / (1.0 + eps)).abs() < 1e-12);
        }
        assert!(out.orthonormality_residual() < 1e-4);

        let id = build_gubanov(DeformationKind::Zero, 1).unwrap();
        let same = deform_gwb(&id, &fam, 1.0).unwrap();
        assert_eq!(same.members(), fam.members());
        assert_eq!(same.exponential_record(1.0).unwrap().constant, fam.exponential_record(1.0).unwrap().constant);
    }

    #[test]
    fn uncertified_family_is_refused() {
        let g = Grid::new(1, 3.0, 0.05, Boundary::Dirichlet).unwrap();
        let d = UniformlyDiscreteSet::lattice(1, 0, 0).unwrap();
        let fam = WannierFamily::new(d.with_radius(0.5).unwrap(), vec![gaussian(&g, &[0.0], 0.3, 0.0)], DecayClass::Unspecified, None).unwrap();
        let m = build_gubanov(DeformationKind::Sine { eps: 0.05 }, 1).unwrap();
        assert!(matches!(deform_gwb(&m, &fam, 1.0), Err(Error::NotLocalized(_))));
    }
}
