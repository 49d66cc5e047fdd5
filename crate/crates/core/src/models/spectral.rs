use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discrete_sets::UniformlyDiscreteSet;
use crate::grid::{Grid, GridFunction};
use crate::linalg::{
    combine, dense_symmetric_eigen, gram, gram_hermitian, hermitian_eigen, lowest_eigenpairs, subspace_distance, CMatrix,
};
use crate::localization::{lowdin_orthonormalize, DecayClass, WannierFamily};
use crate::models::Hamiltonian;
use crate::report::{num, write_csv};
use crate::roe_ops::RankOneSumOperator;
use crate::{Error, Result};

/// Grids up to this size are diagonalized densely.
pub const DENSE_LIMIT: usize = 2000;

/// Lowest part of the spectrum of one Hamiltonian.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    values: Vec<f64>,
    vectors: Vec<GridFunction>,
    fingerprint: u64,
    complete: bool,
}

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// L²-normalized eigenfunctions, in the order of `values`.
    pub fn vectors(&self) -> &[GridFunction] {
        &self.vectors
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Whether every eigenvalue of the operator was computed.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// CSV dump `index, eigenvalue, island`.
    pub fn write_csv(&self, path: &Path, islands: &[SpectralIsland]) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let id = islands
                    .iter()
                    .position(|is| (is.start..is.end).contains(&i))
                    .map(|p| p.to_string())
                    .unwrap_or_default();
                vec![i.to_string(), num(*v), id]
            })
            .collect();
        write_csv(path, &["index", "eigenvalue", "island"], &rows)
    }
}

/// The `count` lowest eigenpairs: dense for small grids, Chebyshev-filtered
/// subspace iteration otherwise.
pub fn compute_spectrum(h: &Hamiltonian, count: usize, seed: u64) -> Result<Spectrum> {
    let n = h.len();
    let count = count.min(n);
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one eigenvalue".into()));
    }
    let pairs = if n <= DENSE_LIMIT {
        dense_symmetric_eigen(h.dense())
    } else {
        lowest_eigenpairs(n, count, &|x, y| h.apply_real(x, y), h.upper_bound(), 1e-11, seed)?
    };
    let grid = h.grid().clone();
    let scale = 1.0 / grid.weight().sqrt();
    let vectors = (0..count)
        .map(|k| {
            let col = pairs.vectors.column(k);
            GridFunction::from_values(&grid, col.iter().map(|v| Complex64::new(v * scale, 0.0)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        grid,
        values: pairs.values[..count].to_vec(),
        vectors,
        fingerprint: h.fingerprint(),
        complete: count == n,
    })
}

/// Maximal run of eigenvalues isolated by gaps larger than the tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralIsland {
    pub lower: f64,
    pub upper: f64,
    /// Distance to the next eigenvalue below, if any.
    pub gap_below: Option<f64>,
    pub gap_above: Option<f64>,
    /// Index range `start..end` in the sorted spectrum.
    pub start: usize,
    pub end: usize,
    pub fingerprint: u64,
}

impl SpectralIsland {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Splits the computed spectrum at gaps larger than `gap_tol` and keeps the
/// runs lying below `energy_cap` whose upper neighbour is known. The cap
/// defaults to the 40th eigenvalue.
pub fn find_spectral_islands(spectrum: &Spectrum, gap_tol: f64, energy_cap: Option<f64>) -> Vec<SpectralIsland> {
    let v = &spectrum.values;
    if v.is_empty() {
        return Vec::new();
    }
    let cap = energy_cap.unwrap_or_else(|| v[v.len().min(40) - 1]);
    let mut islands = Vec::new();
    let mut start = 0;
    for i in 1..=v.len() {
        if i < v.len() && v[i] - v[i - 1] <= gap_tol {
            continue;
        }
        let end = i;
        let has_upper = end < v.len() || spectrum.complete;
        if has_upper && v[end - 1] < cap {
            islands.push(SpectralIsland {
                lower: v[start],
                upper: v[end - 1],
                gap_below: (start > 0).then(|| v[start] - v[start - 1]),
                gap_above: (end < v.len()).then(|| v[end] - v[end - 1]),
                start,
                end,
                fingerprint: spectrum.fingerprint,
            });
        }
        start = i;
    }
    islands
}

/// `Σ |v⟩⟨v|` over the island's eigenfunctions.
pub fn spectral_projection(h: &Hamiltonian, spectrum: &Spectrum, island: &SpectralIsland) -> Result<RankOneSumOperator> {
    if island.fingerprint != h.fingerprint() || spectrum.fingerprint != h.fingerprint() {
        return Err(Error::StaleIsland);
    }
    if island.end > spectrum.vectors.len() || island.is_empty() {
        return Err(Error::InvalidArgument("island outside the computed spectrum".into()));
    }
    let members: Arc<[GridFunction]> = spectrum.vectors[island.start..island.end].to_vec().into();
    RankOneSumOperator::projection(members)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOptions {
    /// Gap in projected-`x₁` eigenvalues separating clusters (d ≥ 2), in
    /// length units.
    pub cluster_gap: f64,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions { cluster_gap: 0.3 }
    }
}

/// Orthonormal basis of `Ran P`.
fn range_basis(p: &RankOneSumOperator) -> Result<Vec<GridFunction>> {
    if p.left().is_empty() {
        return Err(Error::InvalidArgument("projection has rank 0".into()));
    }
    let q = lowdin_orthonormalize(p.left())?;
    // Matrix of P in the basis q: (q* A) C (B* q).
    let qa = gram(&q, p.left())?;
    let bq = gram(p.right(), &q)?;
    let m = qa * p.coeffs() * bq;
    let (values, u) = hermitian_eigen(&m);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.5).collect();
    if keep.is_empty() {
        return Err(Error::InvalidArgument("projection has rank 0".into()));
    }
    let sel = CMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
    Ok(combine(&q, &sel))
}

/// Matrix `⟨w_i, x_axis w_j⟩`.
fn position_matrix(basis: &[GridFunction], axis: usize) -> Result<CMatrix> {
    let grid = basis[0].grid().clone();
    let x = GridFunction::from_real_fn(&grid, |p| p[axis]);
    let xw = basis.iter().map(|w| x.multiply(w)).collect::<Result<Vec<_>>>()?;
    gram(basis, &xw)
}

/// Diagonalizes `P x₁ P` on `Ran P` and, for `d ≥ 2`, `P x_k P` within each
/// cluster of the previous axis.
fn projected_position_basis(basis: Vec<GridFunction>, axis: usize, options: &ExtractionOptions) -> Result<Vec<GridFunction>> {
    let dim = basis[0].grid().dim();
    let (values, u) = hermitian_eigen(&position_matrix(&basis, axis)?);
    let rotated = combine(&basis, &u);
    if axis + 1 >= dim {
        return Ok(rotated);
    }
    let mut out = Vec::with_capacity(rotated.len());
    let mut start = 0;
    for i in 1..=values.len() {
        if i < values.len() && values[i] - values[i - 1] <= options.cluster_gap {
            continue;
        }
        out.extend(projected_position_basis(rotated[start..i].to_vec(), axis + 1, options)?);
        start = i;
    }
    Ok(out)
}

/// Multiplies `f` by the phase making its largest-modulus entry real positive.
fn fix_phase(f: &mut GridFunction) {
    let (_, peak) = f
        .values()
        .iter()
        .fold((0.0, Complex64::new(1.0, 0.0)), |(m, p), v| if v.norm() > m { (v.norm(), *v) } else { (m, p) });
    if peak.norm() > 0.0 {
        f.scale_complex(peak.conj() / peak.norm());
    }
}

/// Position expectation `⟨ψ|x|ψ⟩`.
pub fn position_expectation(f: &GridFunction) -> Vec<f64> {
    let g = f.grid();
    let w = g.weight();
    let mut c = vec![0.0; g.dim()];
    for (i, v) in f.values().iter().enumerate() {
        let m = v.norm_sqr() * w;
        for (ck, xk) in c.iter_mut().zip(g.point(i)) {
            *ck += m * xk;
        }
    }
    c
}

/// Wannier family of `Ran P` from projected position operators.
///
/// Members live on the box operator's domain, so no edge guard is attached.
pub fn extract_gwb(p: &RankOneSumOperator, options: &ExtractionOptions) -> Result<WannierFamily> {
    let basis = range_basis(p)?;
    let mut members = projected_position_basis(basis, 0, options)?;
    members.iter_mut().for_each(fix_phase);
    let centers: Vec<Vec<f64>> = members.iter().map(position_expectation).collect();
    let grid = p.grid().clone();
    let h = grid.spacing();
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let dist = grid.point_distance(&centers[i], &centers[j]);
            if dist < 2.0 * h {
                return Err(Error::DegenerateCenters(format!(
                    "centers {:?} and {:?} lie {dist:.3e} apart",
                    centers[i], centers[j]
                )));
            }
        }
    }
    let set = if centers.len() == 1 {
        UniformlyDiscreteSet::new(grid.dim(), centers, grid.diameter(), None)?
    } else {
        UniformlyDiscreteSet::with_max_radius(grid.dim(), centers, None)?
    };
    WannierFamily::new(set, members, DecayClass::Unspecified, None)
}

/// `‖P_family − P‖` for a family meant to span `Ran P`, as the sine of the
/// largest principal angle.
pub fn span_residual(family: &WannierFamily, p: &RankOneSumOperator) -> Result<f64> {
    let basis = range_basis(p)?;
    if basis.len() != family.len() {
        return Ok(1.0);
    }
    Ok(subspace_distance(&basis, family.members())?.max(subspace_distance(family.members(), &basis)?))
}

/// `max_ij |⟨v_i, v_j⟩ − δ_ij|` for the island eigenfunctions.
pub fn eigenvector_orthonormality(spectrum: &Spectrum) -> f64 {
    crate::linalg::identity_deviation(&gram_hermitian(&spectrum.vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridOperator};
    use crate::localization::build_extremely_localized_family;
    use crate::models::build_kronig_penney;
    use std::f64::consts::PI;

    #[test]
    fn periodic_laplacian_closed_form() {
        let g = Grid::new(1, 1.0, 1.0 / 16.0, Boundary::Periodic).unwrap();
        let h = Hamiltonian::uniform(&g, 0.0).unwrap();
        let n = g.points_per_axis();
        let sp = compute_spectrum(&h, n, 0).unwrap();
        let hh = g.spacing() * g.spacing();
        let mut exact: Vec<f64> = (0..n).map(|k| 4.0 / hh * (PI * k as f64 / n as f64).sin().powi(2)).collect();
        exact.sort_by(f64::total_cmp);
        for (a, b) in sp.values().iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let g2 = Grid::new(2, 1.0, 1.0 / 8.0, Boundary::Periodic).unwrap();
        let sp2 = compute_spectrum(&Hamiltonian::uniform(&g2, 0.0).unwrap(), 256, 0).unwrap();
        let n2 = g2.points_per_axis();
        let hh2 = g2.spacing().powi(2);
        let mut exact2 = Vec::new();
        for k1 in 0..n2 {
            for k2 in 0..n2 {
                let s = |k: usize| (PI * k as f64 / n2 as f64).sin().powi(2);
                exact2.push(4.0 / hh2 * (s(k1) + s(k2)));
            }
        }
        exact2.sort_by(f64::total_cmp);
        for (a, b) in sp2.values().iter().zip(&exact2) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn uniform_shift() {
        let g = Grid::new(1, 1.0, 1.0 / 16.0, Boundary::Dirichlet).unwrap();
        let a = compute_spectrum(&Hamiltonian::uniform(&g, 0.0).unwrap(), 10, 0).unwrap();
        let b = compute_spectrum(&Hamiltonian::uniform(&g, 7.5).unwrap(), 10, 0).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((y - x - 7.5).abs() < 1e-9);
        }
    }

    #[test]
    fn islands_of_free_laplacian_and_synthetic_clusters() {
        let g = Grid::new(1, 1.0, 1.0 / 16.0, Boundary::Dirichlet).unwrap();
        let h = Hamiltonian::uniform(&g, 0.0).unwrap();
        let sp = compute_spectrum(&h, g.len(), 0).unwrap();
        let islands = find_spectral_islands(&sp, 1e6, Some(f64::INFINITY));
        assert_eq!(islands.len(), 1);
        assert_eq!(islands[0].len(), g.len());

        let potential: Vec<f64> = (0..g.len()).map(|i| if i % 2 == 0 { 0.0 } else { 1e5 }).collect();
        let grid = g.clone();
        let diag = Hamiltonian::from_potential(&grid, potential, crate::models::PotentialSpec::Uniform { value: 0.0 }).unwrap();
        let sp = compute_spectrum(&diag, g.len(), 0).unwrap();
        let islands = find_spectral_islands(&sp, 5e3, Some(f64::INFINITY));
        assert_eq!(islands.len(), 2);
        assert_eq!((islands[0].start, islands[0].end), (0, g.len() / 2));
        assert_eq!((islands[1].start, islands[1].end), (g.len() / 2, g.len()));
    }

    #[test]
    fn kronig_penney_band_and_projection() {
        let g = Grid::new(1, 10.0, 1.0 / 32.0, Boundary::Dirichlet).unwrap();
        let h = build_kronig_penney(&g, 100.0, 0.5).unwrap();
        let sp = compute_spectrum(&h, 60, 0).unwrap();
        let islands = find_spectral_islands(&sp, 1.0, Some(50.0));
        assert!(!islands.is_empty());
        let band = &islands[0];
        assert!(band.gap_above.unwrap() > band.upper - band.lower);
        let p = spectral_projection(&h, &sp, band).unwrap();
        assert!(p.compose(&p).unwrap().sub(&p).unwrap().operator_norm() < 1e-10);
        assert!((p.trace().unwrap().re - band.len() as f64).abs() < 1e-10);
        let members: Vec<GridFunction> = p.left().to_vec();
        let hp: Vec<GridFunction> = members.iter().map(|v| h.apply(v).unwrap()).collect();
        let hp_op = RankOneSumOperator::from_lists(hp.clone().into(), p.left().clone()).unwrap();
        let ph_op = RankOneSumOperator::from_lists(p.left().clone(), hp.into()).unwrap();
        let comm = hp_op.sub(&ph_op).unwrap().operator_norm();
        assert!(comm <= 1e-8 * h.upper_bound(), "{comm}");

        let other = build_kronig_penney(&g, 90.0, 0.5).unwrap();
        assert!(matches!(spectral_projection(&other, &sp, band), Err(Error::StaleIsland)));
    }

    #[test]
    fn extraction_recovers_disjoint_family() {
        for dim in [1usize, 2] {
            let g = Grid::new(dim, 3.0, 0.125, Boundary::Dirichlet).unwrap();
            let d = UniformlyDiscreteSet::lattice(dim, -1, 1).unwrap();
            let fam = build_extremely_localized_family(&d, &g).unwrap();
            let p = RankOneSumOperator::projection(fam.members_arc().clone()).unwrap();
            let out = extract_gwb(&p, &ExtractionOptions::default()).unwrap();
            assert_eq!(out.len(), fam.len());
            for m in out.members() {
                let best = fam.members().iter().map(|f| f.inner_product(m).unwrap().norm()).fold(0.0, f64::max);
                assert!((best - 1.0).abs() < 1e-8);
            }
            assert!(span_residual(&out, &p).unwrap() < 1e-8);
        }
    }

    #[test]
    fn rank_one_extraction() {
        let g = Grid::new(1, 3.0, 0.05, Boundary::Dirichlet).unwrap();
        let mut f = GridFunction::from_real_fn(&g, |x| (-(x[0] - 0.4).powi(2)).exp());
        f.scale(1.0 / f.norm());
        let p = RankOneSumOperator::projection(vec![f.clone()].into()).unwrap();
        let out = extract_gwb(&p, &ExtractionOptions::default()).unwrap();
        assert!((out.members()[0].inner_product(&f).unwrap().norm() - 1.0).abs() < 1e-12);
        assert!((out.centers().point(0)[0] - position_expectation(&f)[0]).abs() < 1e-12);
    }
}
