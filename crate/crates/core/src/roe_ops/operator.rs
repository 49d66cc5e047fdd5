use std::sync::Arc;

use num_complex::Complex64;

use crate::grid::{Grid, GridFunction, GridOperator};
use crate::linalg::{combine, gram, gram_hermitian, psd_sqrt, spectral_norm, CMatrix};
use crate::{Error, Result};

/// Finite-rank operator `T = Σ_{ij} |a_i⟩ C_ij ⟨b_j|`.
///
/// A plain list of pairs `Σ |a_γ⟩⟨b_γ|` is the case `C = I`. Keeping the
/// coefficient matrix separate lets products and differences of operators
/// that share members stay exact.
#[derive(Clone, Debug)]
pub struct RankOneSumOperator {
    grid: Arc<Grid>,
    left: Arc<[GridFunction]>,
    right: Arc<[GridFunction]>,
    coeffs: CMatrix,
}

fn check_members(grid: &Arc<Grid>, fs: &[GridFunction]) -> Result<()> {
    if fs.iter().any(|f| **f.grid() != **grid) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

impl RankOneSumOperator {
    pub fn zero(grid: &Arc<Grid>) -> Self {
        RankOneSumOperator {
            grid: grid.clone(),
            left: Vec::new().into(),
            right: Vec::new().into(),
            coeffs: CMatrix::zeros(0, 0),
        }
    }

    pub fn from_factors(
        grid: &Arc<Grid>,
        left: Arc<[GridFunction]>,
        right: Arc<[GridFunction]>,
        coeffs: CMatrix,
    ) -> Result<Self> {
        if coeffs.nrows() != left.len() || coeffs.ncols() != right.len() {
            return Err(Error::InvalidArgument(format!(
                "coefficients {}x{} do not match {} left and {} right members",
                coeffs.nrows(),
                coeffs.ncols(),
                left.len(),
                right.len()
            )));
        }
        check_members(grid, &left)?;
        check_members(grid, &right)?;
        Ok(RankOneSumOperator { grid: grid.clone(), left, right, coeffs })
    }

    /// `Σ_γ |a_γ⟩⟨b_γ|`.
    pub fn from_pairs(grid: &Arc<Grid>, pairs: Vec<(GridFunction, GridFunction)>) -> Result<Self> {
        let n = pairs.len();
        let (left, right): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Self::from_factors(grid, left.into(), right.into(), CMatrix::identity(n, n))
    }

    /// `Σ_γ |a_γ⟩⟨b_γ|` over shared member lists.
    pub fn from_lists(left: Arc<[GridFunction]>, right: Arc<[GridFunction]>) -> Result<Self> {
        if left.len() != right.len() || left.is_empty() {
            return Err(Error::InvalidArgument("pair lists must be nonempty and of equal length".into()));
        }
        let grid = left[0].grid().clone();
        let n = left.len();
        Self::from_factors(&grid, left, right, CMatrix::identity(n, n))
    }

    /// `Σ_γ |ψ_γ⟩⟨ψ_γ|`.
    pub fn projection(members: Arc<[GridFunction]>) -> Result<Self> {
        Self::from_lists(members.clone(), members)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn left(&self) -> &Arc<[GridFunction]> {
        &self.left
    }

    pub fn right(&self) -> &Arc<[GridFunction]> {
        &self.right
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    /// Swaps the member lists and conjugate-transposes the coefficients.
    pub fn adjoint(&self) -> Self {
        RankOneSumOperator {
            grid: self.grid.clone(),
            left: self.right.clone(),
            right: self.left.clone(),
            coeffs: self.coeffs.adjoint(),
        }
    }

    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        if **phi.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        if self.left.is_empty() || self.right.is_empty() {
            return Ok(GridFunction::zeros(&self.grid));
        }
        let c = gram(&self.right, std::slice::from_ref(phi))?;
        let coeffs = &self.coeffs * c;
        Ok(combine(&self.left, &coeffs).remove(0))
    }

    /// `T·S` with coefficients `C_T ⟨b^T, a^S⟩ C_S`.
    pub fn compose(&self, other: &RankOneSumOperator) -> Result<Self> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        if self.left.is_empty() || other.right.is_empty() {
            return Ok(Self::zero(&self.grid));
        }
        let inner = if Arc::ptr_eq(&self.right, &other.left) {
            gram_hermitian(&self.right)
        } else {
            gram(&self.right, &other.left)?
        };
        let coeffs = &self.coeffs * inner * &other.coeffs;
        Ok(RankOneSumOperator {
            grid: self.grid.clone(),
            left: self.left.clone(),
            right: other.right.clone(),
            coeffs,
        })
    }

    fn combine_with(&self, other: &RankOneSumOperator, sign: f64) -> Result<Self> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        let s = Complex64::new(sign, 0.0);
        if Arc::ptr_eq(&self.left, &other.left) && Arc::ptr_eq(&self.right, &other.right) {
            return Ok(RankOneSumOperator {
                grid: self.grid.clone(),
                left: self.left.clone(),
                right: self.right.clone(),
                coeffs: &self.coeffs + &other.coeffs * s,
            });
        }
        let (m1, n1) = self.coeffs.shape();
        let (m2, n2) = other.coeffs.shape();
        let mut coeffs = CMatrix::zeros(m1 + m2, n1 + n2);
        coeffs.view_mut((0, 0), (m1, n1)).copy_from(&self.coeffs);
        coeffs.view_mut((m1, n1), (m2, n2)).copy_from(&(&other.coeffs * s));
        let left: Vec<GridFunction> = self.left.iter().chain(other.left.iter()).cloned().collect();
        let right: Vec<GridFunction> = self.right.iter().chain(other.right.iter()).cloned().collect();
        Ok(RankOneSumOperator { grid: self.grid.clone(), left: left.into(), right: right.into(), coeffs })
    }

    pub fn sub(&self, other: &RankOneSumOperator) -> Result<Self> {
        self.combine_with(other, -1.0)
    }

    pub fn add(&self, other: &RankOneSumOperator) -> Result<Self> {
        self.combine_with(other, 1.0)
    }

    /// Left members multiplied pointwise by `f`, i.e. the operator `f·T`.
    pub fn left_multiplied(&self, f: &GridFunction) -> Result<Self> {
        let left = self.left.iter().map(|a| f.multiply(a)).collect::<Result<Vec<_>>>()?;
        Ok(RankOneSumOperator { left: left.into(), ..self.clone() })
    }

    /// Right members multiplied by `conj(f)`, i.e. the operator `T·f`.
    pub fn right_multiplied(&self, f: &GridFunction) -> Result<Self> {
        let fc = GridFunction::from_values(f.grid(), f.values().iter().map(|v| v.conj()).collect())?;
        let right = self.right.iter().map(|b| fc.multiply(b)).collect::<Result<Vec<_>>>()?;
        Ok(RankOneSumOperator { right: right.into(), ..self.clone() })
    }

    /// Reduced matrix `sqrt(G_A) C sqrt(G_B)`, unitarily equivalent to `T`
    /// on its support.
    pub fn reduced_matrix(&self) -> CMatrix {
        if self.left.is_empty() || self.right.is_empty() {
            return CMatrix::zeros(0, 0);
        }
        let sa = psd_sqrt(&gram_hermitian(&self.left));
        let sb = psd_sqrt(&gram_hermitian(&self.right));
        sa * &self.coeffs * sb
    }

    /// Operator norm through the Gram route.
    pub fn operator_norm(&self) -> f64 {
        spectral_norm(&self.reduced_matrix())
    }

    /// `tr T = tr(C ⟨b, a⟩)`.
    pub fn trace(&self) -> Result<Complex64> {
        if self.left.is_empty() || self.right.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let g = gram(&self.right, &self.left)?;
        Ok((&self.coeffs * g).trace())
    }

    /// Dense matrix `K` with `(Tφ)(x_i) = Σ_j K_ij φ(x_j)`. Grid-sized; meant
    /// for small oracle checks only.
    pub fn materialize(&self) -> CMatrix {
        let n = self.grid.len();
        if self.left.is_empty() || self.right.is_empty() {
            return CMatrix::zeros(n, n);
        }
        let w = Complex64::new(self.grid.weight(), 0.0);
        let a = CMatrix::from_fn(n, self.left.len(), |i, k| self.left[k].values()[i]);
        let b = CMatrix::from_fn(self.right.len(), n, |k, j| self.right[k].values()[j].conj());
        a * &self.coeffs * b * w
    }
}

impl GridOperator for RankOneSumOperator {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        RankOneSumOperator::apply(self, f)
    }
}

/// `T_1 T_2 ⋯ T_k`, applied right to left.
pub struct ProductOperator<'a> {
    factors: Vec<&'a dyn GridOperator>,
}

impl<'a> ProductOperator<'a> {
    pub fn new(factors: Vec<&'a dyn GridOperator>) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
        if factors.iter().any(|f| **f.grid() != **first.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(ProductOperator { factors })
    }
}

impl GridOperator for ProductOperator<'_> {
    fn grid(&self) -> &Arc<Grid> {
        self.factors[0].grid()
    }

    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let mut out = f.clone();
        for t in self.factors.iter().rev() {
            out = t.apply(&out)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::linalg::{hermitian_eigen, power_iteration_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fn(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::from_fn(grid, |_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    fn orthonormal(grid: &Arc<Grid>, k: usize, rng: &mut ChaCha8Rng) -> Vec<GridFunction> {
        let raw: Vec<_> = (0..k).map(|_| random_fn(grid, rng)).collect();
        crate::localization::lowdin_orthonormalize(&raw).unwrap()
    }

    fn grid() -> Arc<Grid> {
        Grid::new(1, 2.0, 0.0625, Boundary::Dirichlet).unwrap()
    }

    #[test]
    fn rank_one_projection_and_orthogonal_input() {
        let g = grid();
        let phi = GridFunction::normalized_ball_indicator(&g, &[0.0], 0.5).unwrap();
        let p = RankOneSumOperator::from_pairs(&g, vec![(phi.clone(), phi.clone())]).unwrap();
        assert!(p.apply(&phi).unwrap().sub(&phi).unwrap().norm() < 1e-14);
        let psi = GridFunction::normalized_ball_indicator(&g, &[1.2], 0.5).unwrap();
        let t = RankOneSumOperator::from_pairs(&g, vec![(phi.clone(), psi)]).unwrap();
        assert!(t.apply(&phi).unwrap().is_zero());
    }

    #[test]
    fn projection_reproduces_span_and_is_idempotent() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fam: Arc<[GridFunction]> = orthonormal(&g, 5, &mut rng).into();
        let p = RankOneSumOperator::projection(fam.clone()).unwrap();
        let mut v = GridFunction::zeros(&g);
        for (k, f) in fam.iter().enumerate() {
            v.add_scaled(Complex64::new(k as f64 - 2.0, 0.5), f).unwrap();
        }
        assert!(p.apply(&v).unwrap().sub(&v).unwrap().norm() < 1e-10);
        let pp = p.compose(&p).unwrap();
        assert!(pp.sub(&p).unwrap().operator_norm() < 1e-12);
        assert!((p.operator_norm() - 1.0).abs() < 1e-12);
        assert!((p.trace().unwrap().re - 5.0).abs() < 1e-10);
        assert!(p.compose(&RankOneSumOperator::zero(&g)).unwrap().is_zero());
    }

    #[test]
    fn composition_matches_sequential_application() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<_> = (0..3).map(|_| random_fn(&g, &mut rng)).collect();
        let b: Vec<_> = (0..3).map(|_| random_fn(&g, &mut rng)).collect();
        let c: Vec<_> = (0..2).map(|_| random_fn(&g, &mut rng)).collect();
        let e: Vec<_> = (0..2).map(|_| random_fn(&g, &mut rng)).collect();
        let t = RankOneSumOperator::from_lists(a.into(), b.into()).unwrap();
        let s = RankOneSumOperator::from_lists(c.into(), e.into()).unwrap();
        let u = random_fn(&g, &mut rng);
        let direct = t.apply(&s.apply(&u).unwrap()).unwrap();
        let composed = t.compose(&s).unwrap().apply(&u).unwrap();
        assert!(direct.sub(&composed).unwrap().norm() <= 1e-12 * direct.norm().max(1.0));
    }

    #[test]
    fn gram_norm_matches_power_iteration() {
        let g = Grid::new(1, 2.0, 0.0625, Boundary::Dirichlet).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<_> = (0..4).map(|_| random_fn(&g, &mut rng)).collect();
        let b: Vec<_> = (0..4).map(|_| random_fn(&g, &mut rng)).collect();
        let t = RankOneSumOperator::from_lists(a.into(), b.into()).unwrap();
        let k = t.materialize();
        let kh = k.adjoint();
        let apply = |v: &[Complex64]| (&k * CMatrix::from_column_slice(v.len(), 1, v)).as_slice().to_vec();
        let apply_adj = |v: &[Complex64]| (&kh * CMatrix::from_column_slice(v.len(), 1, v)).as_slice().to_vec();
        let direct = power_iteration_norm(g.len(), apply, apply_adj, 1e-15, 100_000, 3);
        let exact = hermitian_eigen(&(&kh * &k)).0.last().unwrap().sqrt();
        assert!((t.operator_norm() - exact).abs() < 1e-9 * exact);
        assert!((direct - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn grid_mismatch() {
        let g = grid();
        let g2 = Grid::new(1, 2.0, 0.125, Boundary::Dirichlet).unwrap();
        let f = GridFunction::normalized_ball_indicator(&g, &[0.0], 0.5).unwrap();
        let p = RankOneSumOperator::from_pairs(&g, vec![(f.clone(), f)]).unwrap();
        let u = GridFunction::zeros(&g2);
        assert!(matches!(p.apply(&u), Err(Error::GridMismatch)));
    }
}
