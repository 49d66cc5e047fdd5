//! Wannier families and their localization certificates.
//!
//! A family is `s`-localized around its centers when the moments
//! `∫ ⟨x−γ⟩^{2s} |ψ_γ|²` are bounded uniformly in `γ`, and exponentially
//! localized when `∫ e^{2α‖x−γ‖} |ψ_γ|²` are.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_sets::UniformlyDiscreteSet;
use crate::grid::{BoxGuard, Grid, GridFunction};
use crate::linalg::{combine, gram_hermitian, identity_deviation, inverse_sqrt};
use crate::report::write_json;
use crate::{Error, Result};

/// Residual below which a family counts as orthonormal.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// How the members of a family are known to decay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayClass {
    /// Supported inside `B_radius(γ)`.
    Compact { radius: f64 },
    /// Built from profiles `⟨x−γ⟩^{-p}`; moments exist only for `s < p − d/2`.
    PowerLaw { exponent: f64 },
    Exponential { rate: f64 },
    Unspecified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRecord {
    pub s: f64,
    pub constant: f64,
    pub per_center: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialRecord {
    pub alpha: f64,
    pub constant: f64,
    pub per_center: Vec<f64>,
}

/// Orthonormal family `{ψ_γ}` indexed by a discrete set.
#[derive(Clone, Debug)]
pub struct WannierFamily {
    centers: UniformlyDiscreteSet,
    members: Arc<[GridFunction]>,
    orthonormality_residual: f64,
    decay: DecayClass,
    guard: Option<BoxGuard>,
    s_records: Vec<LocalizationRecord>,
    exponential_records: Vec<ExponentialRecord>,
}

impl WannierFamily {
    /// Wraps members and measures their orthonormality residual.
    pub fn new(
        centers: UniformlyDiscreteSet,
        members: Vec<GridFunction>,
        decay: DecayClass,
        guard: Option<BoxGuard>,
    ) -> Result<Self> {
        if centers.len() != members.len() {
            return Err(Error::CenterMismatch(format!(
                "{} centers for {} members",
                centers.len(),
                members.len()
            )));
        }
        if members.is_empty() {
            return Err(Error::InvalidArgument("empty family".into()));
        }
        let grid = members[0].grid().clone();
        if members.iter().any(|m| **m.grid() != *grid) {
            return Err(Error::GridMismatch);
        }
        if centers.dim() != grid.dim() {
            return Err(Error::InvalidArgument("center and grid dimensions differ".into()));
        }
        let orthonormality_residual = identity_deviation(&gram_hermitian(&members));
        Ok(WannierFamily {
            centers,
            members: members.into(),
            orthonormality_residual,
            decay,
            guard,
            s_records: Vec::new(),
            exponential_records: Vec::new(),
        })
    }

    pub fn centers(&self) -> &UniformlyDiscreteSet {
        &self.centers
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    pub fn members_arc(&self) -> &Arc<[GridFunction]> {
        &self.members
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.members[0].grid()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn orthonormality_residual(&self) -> f64 {
        self.orthonormality_residual
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormality_residual <= ORTHONORMAL_TOLERANCE
    }

    pub fn decay(&self) -> DecayClass {
        self.decay
    }

    pub fn guard(&self) -> Option<&BoxGuard> {
        self.guard.as_ref()
    }

    pub fn with_guard(mut self, guard: Option<BoxGuard>) -> Self {
        self.guard = guard;
        self
    }

    pub fn with_decay(mut self, decay: DecayClass) -> Self {
        self.decay = decay;
        self
    }

    pub fn s_records(&self) -> &[LocalizationRecord] {
        &self.s_records
    }

    pub fn exponential_records(&self) -> &[ExponentialRecord] {
        &self.exponential_records
    }

    pub fn s_record(&self, s: f64) -> Option<&LocalizationRecord> {
        self.s_records.iter().find(|r| r.s == s)
    }

    pub fn exponential_record(&self, alpha: f64) -> Option<&ExponentialRecord> {
        self.exponential_records.iter().find(|r| r.alpha == alpha)
    }

    /// Symmetric re-orthonormalization of the members, keeping centers and decay.
    pub fn orthonormalized(&self) -> Result<Self> {
        let members = lowdin_orthonormalize(&self.members)?;
        WannierFamily::new(self.centers.clone(), members, self.decay, self.guard)
    }

    pub fn manifest(&self) -> FamilyManifest {
        FamilyManifest {
            dim: self.centers.dim(),
            centers: self.centers.points().to_vec(),
            labels: self.centers.labels().map(|l| l.to_vec()),
            radius: self.centers.radius(),
            norms: self.members.iter().map(|m| m.norm()).collect(),
            orthonormality_residual: self.orthonormality_residual,
            decay: self.decay,
            moments: self.s_records.clone(),
            exponential: self.exponential_records.clone(),
        }
    }
}

/// JSON description of a family and its certificates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyManifest {
    pub dim: usize,
    pub centers: Vec<Vec<f64>>,
    pub labels: Option<Vec<Vec<i64>>>,
    pub radius: f64,
    pub norms: Vec<f64>,
    pub orthonormality_residual: f64,
    pub decay: DecayClass,
    pub moments: Vec<LocalizationRecord>,
    pub exponential: Vec<ExponentialRecord>,
}

impl FamilyManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

fn weighted_moment(
    psi: &GridFunction,
    center: &[f64],
    guard: Option<&BoxGuard>,
    weight: impl Fn(f64) -> f64,
) -> Result<f64> {
    let grid = psi.grid();
    if center.len() != grid.dim() {
        return Err(Error::InvalidArgument("center dimension differs from grid".into()));
    }
    let mut total = 0.0;
    let mut layer = 0.0;
    for (i, v) in psi.values().iter().enumerate() {
        let m = weight(grid.distance(i, center)) * v.norm_sqr();
        total += m;
        if guard.is_some_and(|g| g.in_layer(grid, i)) {
            layer += m;
        }
    }
    let w = grid.weight();
    let (total, layer) = (total * w, layer * w);
    if let Some(g) = guard {
        g.check(psi)?;
        if layer > g.tolerance * total {
            return Err(Error::EscapedMass { escaped: layer / total, tolerance: g.tolerance });
        }
    }
    Ok(total)
}

/// `h^d Σ ⟨x−γ⟩^{2s} |ψ(x)|²`.
///
/// With a guard, fails when the mass near the box edge, or that layer's share
/// of the weighted integral, exceeds the guard tolerance.
pub fn localization_moment(psi: &GridFunction, center: &[f64], s: f64, guard: Option<&BoxGuard>) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    weighted_moment(psi, center, guard, |t| (1.0 + t * t).powf(s))
}

/// `h^d Σ e^{2α‖x−γ‖} |ψ(x)|²`.
pub fn exponential_moment(psi: &GridFunction, center: &[f64], alpha: f64, guard: Option<&BoxGuard>) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    weighted_moment(psi, center, guard, |t| (2.0 * alpha * t).exp())
}

fn per_center(family: &WannierFamily, f: impl Fn(&GridFunction, &[f64]) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    family
        .members
        .par_iter()
        .enumerate()
        .map(|(i, m)| f(m, family.centers.point(i)))
        .collect()
}

/// `M(s) = max_γ ∫ ⟨x−γ⟩^{2s} |ψ_γ|²`, stored on the family.
pub fn certify_s_localized(family: &mut WannierFamily, s: f64) -> Result<f64> {
    if let DecayClass::PowerLaw { exponent } = family.decay {
        let limit = exponent - family.centers.dim() as f64 / 2.0;
        if s >= limit {
            return Err(Error::NotLocalized(format!(
                "s = {s} is not below p - d/2 = {limit} for power-law tails"
            )));
        }
    }
    let guard = family.guard;
    let moments = per_center(family, |m, c| localization_moment(m, c, s, guard.as_ref()))?;
    let constant = moments.iter().copied().fold(0.0, f64::max);
    family.s_records.retain(|r| r.s != s);
    family.s_records.push(LocalizationRecord { s, constant, per_center: moments });
    Ok(constant)
}

/// `M = max_γ ∫ e^{2α‖x−γ‖} |ψ_γ|²`, stored on the family.
pub fn certify_exponential(family: &mut WannierFamily, alpha: f64) -> Result<f64> {
    if let DecayClass::PowerLaw { exponent } = family.decay {
        return Err(Error::NotLocalized(format!(
            "power-law tails (p = {exponent}) have no exponential moments"
        )));
    }
    let guard = family.guard;
    let moments = per_center(family, |m, c| exponential_moment(m, c, alpha, guard.as_ref()))?;
    let constant = moments.iter().copied().fold(0.0, f64::max);
    family.exponential_records.retain(|r| r.alpha != alpha);
    family.exponential_records.push(ExponentialRecord { alpha, constant, per_center: moments });
    Ok(constant)
}

/// Normalized indicators of `B_{r−h}(γ)`; disjoint supports make the family
/// exactly orthogonal.
pub fn build_extremely_localized_family(d: &UniformlyDiscreteSet, grid: &Arc<Grid>) -> Result<WannierFamily> {
    let r = d.radius();
    let h = grid.spacing();
    if r < 2.0 * h {
        return Err(Error::BallUnresolved { radius: r, minimum: 2.0 * h });
    }
    if d.dim() != grid.dim() {
        return Err(Error::InvalidArgument("center and grid dimensions differ".into()));
    }
    let support = r - h;
    let members = d
        .points()
        .par_iter()
        .map(|c| GridFunction::normalized_ball_indicator(grid, c, support))
        .collect::<Result<Vec<_>>>()?;
    WannierFamily::new(d.clone(), members, DecayClass::Compact { radius: support }, Some(BoxGuard::for_grid(grid)))
}

/// Symmetric orthonormalization `Ψ = Φ S^{-1/2}` of a frame with Gram matrix `S`.
///
/// Ill-conditioned frames get a second pass on the (nearly orthonormal) output.
pub fn lowdin_orthonormalize(frame: &[GridFunction]) -> Result<Vec<GridFunction>> {
    if frame.is_empty() {
        return Ok(Vec::new());
    }
    let s = gram_hermitian(frame);
    let inv = inverse_sqrt(&s, 1e-12)?;
    let out = combine(frame, &inv);
    let g = gram_hermitian(&out);
    if identity_deviation(&g) <= 1e-13 {
        return Ok(out);
    }
    Ok(combine(&out, &inverse_sqrt(&g, 1e-12)?))
}

/// Normalized profiles `⟨x−γ⟩^{-p}`, before orthonormalization.
pub fn power_law_profiles(d: &UniformlyDiscreteSet, grid: &Arc<Grid>, p: f64) -> Vec<GridFunction> {
    d.points()
        .par_iter()
        .map(|c| {
            let mut f = GridFunction::from_real_fn(grid, |x| {
                let q: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                (1.0 + q).powf(-p / 2.0)
            });
            f.scale(1.0 / f.norm());
            f
        })
        .collect()
}

/// Löwdin-orthonormalized power-law family with tail exponent `p`.
///
/// The profiles are defined on the box itself, so the family carries no
/// box guard.
pub fn build_power_law_family(d: &UniformlyDiscreteSet, grid: &Arc<Grid>, p: f64) -> Result<WannierFamily> {
    let dim = grid.dim();
    if d.dim() != dim {
        return Err(Error::InvalidArgument("center and grid dimensions differ".into()));
    }
    if !(p > dim as f64 / 2.0) {
        return Err(Error::Hypothesis(format!("p = {p} must exceed d/2")));
    }
    if let Some(c) = d.points().iter().find(|c| !grid.contains(c)) {
        return Err(Error::InvalidArgument(format!("center {c:?} lies outside the box")));
    }
    let raw = power_law_profiles(d, grid, p);
    let members = lowdin_orthonormalize(&raw)?;
    WannierFamily::new(d.clone(), members, DecayClass::PowerLaw { exponent: p }, None)
}
