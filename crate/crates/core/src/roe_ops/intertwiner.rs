use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discrete_sets::UniformlyDiscreteSet;
use crate::grid::GridFunction;
use crate::linalg::{gram_hermitian, lambda_max};
use crate::localization::{WannierFamily, ORTHONORMAL_TOLERANCE};
use crate::roe_ops::RankOneSumOperator;
use crate::series_bounds::{default_eps, least_squares_slope, lemma_constant};
use crate::{Error, Result};

/// Norms below this are treated as numerically zero in decay fits.
pub const NORM_FLOOR: f64 = 1e-10;

/// `V = Σ_γ |φ_γ⟩⟨ψ_γ|`, optionally with `ψ_γ` restricted to `B_R(γ)`.
#[derive(Clone, Debug)]
pub struct Intertwiner {
    centers: UniformlyDiscreteSet,
    phi: Arc<[GridFunction]>,
    psi: Arc<[GridFunction]>,
    effective: Arc<[GridFunction]>,
    truncation: Option<f64>,
    phi_residual: f64,
    operator: RankOneSumOperator,
}

/// `‖V*V − P_H‖` and `‖VV* − P_H̃‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvnResiduals {
    pub source: f64,
    pub target: f64,
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
}

/// Pairs `ψ_γ` with `φ_γ` by center and forms `V`.
pub fn build_intertwiner(psi_family: &WannierFamily, phi_family: &WannierFamily) -> Result<Intertwiner> {
    let pc = psi_family.centers();
    let fc = phi_family.centers();
    if pc.len() != fc.len() || pc.dim() != fc.dim() {
        return Err(Error::CenterMismatch(format!("{} vs {} centers", pc.len(), fc.len())));
    }
    if **psi_family.grid() != **phi_family.grid() {
        return Err(Error::GridMismatch);
    }
    let aligned = (0..pc.len()).all(|i| same_point(pc.point(i), fc.point(i)));
    let phi: Arc<[GridFunction]> = if aligned {
        phi_family.members_arc().clone()
    } else {
        let mut out = Vec::with_capacity(pc.len());
        for p in pc.points() {
            let j = fc
                .points()
                .iter()
                .position(|q| same_point(p, q))
                .ok_or_else(|| Error::CenterMismatch(format!("no reference member at {p:?}")))?;
            out.push(phi_family.members()[j].clone());
        }
        out.into()
    };
    let psi = psi_family.members_arc().clone();
    let operator = RankOneSumOperator::from_lists(phi.clone(), psi.clone())?;
    Ok(Intertwiner {
        centers: pc.clone(),
        phi,
        effective: psi.clone(),
        psi,
        truncation: None,
        phi_residual: phi_family.orthonormality_residual(),
        operator,
    })
}

impl Intertwiner {
    pub fn operator(&self) -> &RankOneSumOperator {
        &self.operator
    }

    pub fn centers(&self) -> &UniformlyDiscreteSet {
        &self.centers
    }

    pub fn phi(&self) -> &Arc<[GridFunction]> {
        &self.phi
    }

    pub fn psi(&self) -> &Arc<[GridFunction]> {
        &self.psi
    }

    /// Right members actually used: `ψ_γ` or `χ_{B_R(γ)} ψ_γ`.
    pub fn effective_psi(&self) -> &Arc<[GridFunction]> {
        &self.effective
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    /// `V^R = Σ_γ |φ_γ⟩⟨χ_{B_R(γ)} ψ_γ|`.
    pub fn truncate(&self, radius: f64) -> Result<Intertwiner> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidArgument(format!("truncation radius must be nonnegative, got {radius}")));
        }
        let effective: Arc<[GridFunction]> = self
            .psi
            .iter()
            .zip(self.centers.points())
            .map(|(f, c)| f.restrict_to_ball(c, radius))
            .collect::<Vec<_>>()
            .into();
        let operator = RankOneSumOperator::from_lists(self.phi.clone(), effective.clone())?;
        Ok(Intertwiner { effective, truncation: Some(radius), operator, ..self.clone() })
    }

    pub fn mvn_residuals(&self) -> Result<MvnResiduals> {
        let v = &self.operator;
        let vs = v.adjoint();
        let source = vs.compose(v)?.sub(&RankOneSumOperator::projection(self.effective.clone())?)?;
        let target = v.compose(&vs)?.sub(&RankOneSumOperator::projection(self.phi.clone())?)?;
        Ok(MvnResiduals { source: source.operator_norm(), target: target.operator_norm() })
    }
}

/// `‖V − V^R‖` through the Gram matrix of `δψ_γ = ψ_γ − ψ^R_γ`.
///
/// Exact when the `φ_γ` are orthonormal, since then
/// `(V−V^R)*(V−V^R) = Σ_γ |δψ_γ⟩⟨δψ_γ|`.
pub fn norm_of_difference(v: &Intertwiner, v_r: &Intertwiner) -> Result<f64> {
    if !Arc::ptr_eq(&v.phi, &v_r.phi) || !Arc::ptr_eq(&v.psi, &v_r.psi) {
        return Err(Error::InvalidArgument("operators come from different builds".into()));
    }
    if v.phi_residual > ORTHONORMAL_TOLERANCE {
        return Err(Error::NotOrthonormal { residual: v.phi_residual, tolerance: ORTHONORMAL_TOLERANCE });
    }
    let delta = v
        .effective
        .iter()
        .zip(v_r.effective.iter())
        .map(|(a, b)| a.sub(b))
        .collect::<Result<Vec<_>>>()?;
    Ok(lambda_max(&gram_hermitian(&delta)).max(0.0).sqrt())
}

/// `M(s) · C · (1+R)^{d−2s}` with the default `ε`.
pub fn truncation_bound(d: usize, s: f64, moment: f64, radius: f64, cutoff: f64) -> Result<f64> {
    let eps = default_eps(radius, cutoff);
    let c = lemma_constant(d, s, eps, radius, cutoff)?;
    Ok(moment * c * (1.0 + cutoff).powf(d as f64 - 2.0 * s))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub cutoff: f64,
    pub norm: f64,
    /// Below the numerical floor and left out of the fit.
    pub dropped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub s: f64,
    pub slope: f64,
    /// `(d − 2s)/2`.
    pub target: f64,
    pub pass: bool,
    pub rows: Vec<DecayRow>,
}

/// `‖V − V^R‖` at each cutoff.
pub fn decay_rows(v: &Intertwiner, cutoffs: &[f64]) -> Result<Vec<DecayRow>> {
    if cutoffs.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 cutoffs, got {}", cutoffs.len())));
    }
    if cutoffs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("cutoffs must be strictly increasing".into()));
    }
    cutoffs
        .iter()
        .map(|&r| {
            let norm = norm_of_difference(v, &v.truncate(r)?)?;
            Ok(DecayRow { cutoff: r, norm, dropped: norm < NORM_FLOOR })
        })
        .collect()
}

/// Fits precomputed rows for a `dim`-dimensional center set.
pub fn fit_decay_rows(rows: Vec<DecayRow>, dim: usize, s: f64) -> Result<DecayFit> {
    let kept: Vec<&DecayRow> = rows.iter().filter(|r| !r.dropped).collect();
    if kept.len() < 4 {
        return Err(Error::Underflow { remaining: kept.len() });
    }
    let xs: Vec<f64> = kept.iter().map(|r| (1.0 + r.cutoff).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|r| r.norm.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let target = (dim as f64 - 2.0 * s) / 2.0;
    Ok(DecayFit { s, slope, target, pass: slope <= target + 0.15, rows })
}

/// Slope of `ln‖V − V^R‖` against `ln(1+R)`; passes when it is at most
/// `(d−2s)/2 + 0.15`.
pub fn decay_fit(v: &Intertwiner, cutoffs: &[f64], s: f64) -> Result<DecayFit> {
    fit_decay_rows(decay_rows(v, cutoffs)?, v.centers.dim(), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, Grid};
    use crate::localization::{build_extremely_localized_family, build_power_law_family, certify_s_localized};
    use crate::series_bounds::tail_sum;

    fn setup() -> (WannierFamily, WannierFamily) {
        let g = Grid::new(1, 12.0, 0.05, Boundary::Dirichlet).unwrap();
        let d = UniformlyDiscreteSet::lattice(1, -8, 8).unwrap();
        let psi = build_power_law_family(&d, &g, 2.0).unwrap();
        let phi = build_extremely_localized_family(&d, &g).unwrap();
        (psi, phi)
    }

    #[test]
    fn mvn_identities_hold() {
        let (psi, phi) = setup();
        let v = build_intertwiner(&psi, &phi).unwrap();
        let res = v.mvn_residuals().unwrap();
        assert!(res.source <= 1e-8 && res.target <= 1e-8, "{res:?}");
    }

    #[test]
    fn identical_families_give_projection() {
        let (_, phi) = setup();
        let v = build_intertwiner(&phi, &phi).unwrap();
        let p = RankOneSumOperator::projection(phi.members_arc().clone()).unwrap();
        assert!(v.operator().sub(&p).unwrap().operator_norm() < 1e-14);
    }

    #[test]
    fn truncation_extremes() {
        let (psi, phi) = setup();
        let v = build_intertwiner(&psi, &phi).unwrap();
        let full = v.truncate(psi.grid().diameter() + 1.0).unwrap();
        assert_eq!(norm_of_difference(&v, &full).unwrap(), 0.0);
        let zero = v.truncate(0.0).unwrap();
        assert!(zero.effective_psi().iter().all(|f| f.is_zero()));
        assert_eq!(zero.operator().operator_norm(), 0.0);
    }

    #[test]
    fn single_center_norm_is_tail_norm() {
        let g = Grid::new(1, 6.0, 0.05, Boundary::Dirichlet).unwrap();
        let d = UniformlyDiscreteSet::new(1, vec![vec![0.0]], 0.5, None).unwrap();
        let psi = build_power_law_family(&d, &g, 1.5).unwrap();
        let phi = build_extremely_localized_family(&d, &g).unwrap();
        let v = build_intertwiner(&psi, &phi).unwrap();
        let n = norm_of_difference(&v, &v.truncate(2.0).unwrap()).unwrap();
        let tail = psi.members()[0].restrict_outside_ball(&[0.0], 2.0).norm();
        assert!((n - tail).abs() < 1e-12);
    }

    #[test]
    fn norm_bounded_by_tail_sums() {
        let (mut psi, phi) = setup();
        let s = 1.2;
        let m = certify_s_localized(&mut psi, s).unwrap();
        let v = build_intertwiner(&psi, &phi).unwrap();
        let g = psi.grid().clone();
        for r in [1.0, 2.0, 4.0] {
            let n = norm_of_difference(&v, &v.truncate(r).unwrap()).unwrap();
            let worst = (0..g.len()).map(|i| tail_sum(psi.centers(), g.point(i), r, s)).fold(0.0, f64::max);
            assert!(n * n <= m * worst * (1.0 + 1e-12), "R={r}");
            assert!(n * n <= truncation_bound(1, s, m, 0.5, r).unwrap());
        }
    }

    #[test]
    fn power_law_decay_passes() {
        let (psi, phi) = setup();
        let v = build_intertwiner(&psi, &phi).unwrap();
        let fit = decay_fit(&v, &[1.0, 1.5, 2.0, 3.0, 4.0], 1.2).unwrap();
        assert!(fit.pass, "{fit:?}");
    }

    #[test]
    fn compact_family_underflows() {
        let (_, phi) = setup();
        let v = build_intertwiner(&phi, &phi).unwrap();
        assert!(matches!(decay_fit(&v, &[1.0, 2.0, 3.0, 4.0], 1.0), Err(Error::Underflow { .. })));
    }

    #[test]
    fn center_mismatch() {
        let (psi, _) = setup();
        let g = psi.grid().clone();
        let other = UniformlyDiscreteSet::lattice(1, -7, 9).unwrap();
        let phi = build_extremely_localized_family(&other, &g).unwrap();
        assert!(matches!(build_intertwiner(&psi, &phi), Err(Error::CenterMismatch(_))));
    }
}
