//! Small dense linear algebra shared by the operator and model code.
//!
//! Everything that touches a grid-sized space is reduced to `n × n` problems
//! over the members of a family (Gram matrices); the only grid-sized solvers
//! are the power iteration used as an independent oracle and the
//! Chebyshev-filtered subspace iteration for sparse Hamiltonians.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::grid::{axpy, dot, GridFunction};
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `G_ij = <a_i, b_j>`.
pub fn gram(a: &[GridFunction], b: &[GridFunction]) -> Result<CMatrix> {
    if let (Some(x), Some(y)) = (a.first(), b.first()) {
        if !x.same_grid(y) {
            return Err(Error::GridMismatch);
        }
    }
    let w = a.first().or(b.first()).map(|f| f.grid().weight()).unwrap_or(1.0);
    let rows: Vec<Vec<Complex64>> = a
        .par_iter()
        .map(|ai| b.iter().map(|bj| dot(ai.values(), bj.values()) * w).collect())
        .collect();
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| rows[i][j]))
}

/// Hermitian Gram matrix of one family, computing only the upper triangle.
pub fn gram_hermitian(a: &[GridFunction]) -> CMatrix {
    let n = a.len();
    let w = a.first().map(|f| f.grid().weight()).unwrap_or(1.0);
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| dot(a[i].values(), a[j].values()) * w).collect())
        .collect();
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        for (off, v) in rows[i].iter().enumerate() {
            let j = i + off;
            g[(i, j)] = *v;
            g[(j, i)] = v.conj();
        }
        g[(i, i)] = Complex64::new(g[(i, i)].re, 0.0);
    }
    g
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn lambda_max(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.last().copied().unwrap_or(0.0)
}

fn spectral_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, u) = hermitian_eigen(m);
    let n = values.len();
    let mut scaled = u.clone();
    for (c, v) in values.iter().enumerate() {
        let s = Complex64::new(f(*v), 0.0);
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    scaled * u.adjoint()
}

/// Square root of a positive semidefinite matrix (negative rounding clamped to 0).
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    spectral_function(m, |v| v.max(0.0).sqrt())
}

/// `m^{-1/2}` for a positive definite `m`; fails when the smallest eigenvalue
/// falls below `floor · λ_max`.
pub fn inverse_sqrt(m: &CMatrix, floor: f64) -> Result<CMatrix> {
    let (values, _) = hermitian_eigen(m);
    let lo = values.first().copied().unwrap_or(1.0);
    let hi = values.last().copied().unwrap_or(1.0);
    if !(lo > floor * hi) {
        return Err(Error::FrameDegenerate(lo));
    }
    Ok(spectral_function(m, |v| 1.0 / v.sqrt()))
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `max_ij |G_ij - δ_ij|`.
pub fn identity_deviation(g: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// `out_k = Σ_i basis_i · c_ik`.
pub fn combine(basis: &[GridFunction], coeffs: &CMatrix) -> Vec<GridFunction> {
    (0..coeffs.ncols())
        .into_par_iter()
        .map(|k| {
            let mut out = GridFunction::zeros(basis[0].grid());
            for (i, b) in basis.iter().enumerate() {
                let c = coeffs[(i, k)];
                if c != ZERO {
                    axpy(c, b.values(), out.values_mut());
                }
            }
            out
        })
        .collect()
}

/// `‖P_A − P_B‖` for orthonormal families spanning spaces of equal dimension.
///
/// Evaluated as the norm of the residual `B − A(A*B)`, which keeps full
/// relative precision for nearly equal spaces.
pub fn subspace_distance(a: &[GridFunction], b: &[GridFunction]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("dimensions differ: {} vs {}", a.len(), b.len())));
    }
    if b.is_empty() {
        return Ok(0.0);
    }
    let overlap = gram(a, b)?;
    let projected = combine(a, &overlap);
    let residual: Vec<GridFunction> = b
        .iter()
        .zip(&projected)
        .map(|(x, y)| x.sub(y))
        .collect::<Result<_>>()?;
    Ok(lambda_max(&gram_hermitian(&residual)).max(0.0).sqrt())
}

/// Largest singular value of a linear map by power iteration on `K* K`.
///
/// `apply` and `apply_adjoint` act on coefficient vectors of length `n`.
pub fn power_iteration_norm(
    n: usize,
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    apply_adjoint: impl Fn(&[Complex64]) -> Vec<Complex64>,
    rel_tol: f64,
    max_iter: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let norm = |x: &[Complex64]| x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|c| *c /= nv);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = apply(&v);
        let next_lambda = w.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let mut u = apply_adjoint(&w);
        let nu = norm(&u);
        if nu == 0.0 {
            return 0.0;
        }
        u.iter_mut().for_each(|c| *c /= nu);
        v = u;
        if (next_lambda - lambda).abs() <= rel_tol * next_lambda {
            lambda = next_lambda;
            break;
        }
        lambda = next_lambda;
    }
    lambda.sqrt()
}

/// Lowest eigenpairs of a real symmetric matrix.
pub struct RealEigenpairs {
    pub values: Vec<f64>,
    /// Column-major `n × k`, unit ℓ² columns.
    pub vectors: DMatrix<f64>,
}

/// Full dense decomposition, ascending.
pub fn dense_symmetric_eigen(m: DMatrix<f64>) -> RealEigenpairs {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    RealEigenpairs { values, vectors }
}

/// Chebyshev-filtered subspace iteration for the `k` lowest eigenpairs of a
/// real symmetric operator whose spectrum lies below `upper`.
///
/// Handles exactly degenerate eigenvalues, which single-vector Krylov
/// methods do not resolve.
pub fn lowest_eigenpairs(
    n: usize,
    k: usize,
    apply: &(dyn Fn(&[f64], &mut [f64]) + Sync),
    upper: f64,
    tol: f64,
    seed: u64,
) -> Result<RealEigenpairs> {
    if k == 0 || k > n {
        return Err(Error::Eigensolver(format!("cannot extract {k} pairs from dimension {n}")));
    }
    let block = (k + (k / 4).max(8)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::<f64>::from_fn(n, block, |_, _| rng.gen::<f64>() - 0.5);
    let apply_block = |x: &DMatrix<f64>| -> DMatrix<f64> {
        let mut y = DMatrix::<f64>::zeros(n, x.ncols());
        y.as_mut_slice()
            .par_chunks_mut(n)
            .zip(x.as_slice().par_chunks(n))
            .for_each(|(yc, xc)| apply(xc, yc));
        y
    };
    let rayleigh_ritz = |x: DMatrix<f64>| -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
        let q = x.qr().q();
        let aq = apply_block(&q);
        let h = q.transpose() * &aq;
        let h = (&h + h.transpose()) * 0.5;
        let pairs = dense_symmetric_eigen(h);
        (pairs.values, &q * &pairs.vectors, aq * pairs.vectors)
    };
    let (mut theta, mut q, mut aq) = rayleigh_ritz(x);
    let degree = 20;
    for _ in 0..400 {
        let mut converged = true;
        for j in 0..k {
            let r = (aq.column(j) - q.column(j) * theta[j]).norm();
            if r > tol * upper.abs().max(1.0) {
                converged = false;
                break;
            }
        }
        if converged {
            let values = theta[..k].to_vec();
            let vectors = q.columns(0, k).into_owned();
            return Ok(RealEigenpairs { values, vectors });
        }
        let cut = theta[block - 1];
        let low = theta[0];
        let e = (upper - cut) / 2.0;
        let c = (upper + cut) / 2.0;
        if !(e > 0.0) {
            return Err(Error::Eigensolver("upper bound below the Ritz values".into()));
        }
        let mut sigma = e / (low - c);
        let tau = 2.0 / sigma;
        x = q;
        let mut y = (apply_block(&x) - &x * c) * (sigma / e);
        for _ in 2..=degree {
            let sigma_new = 1.0 / (tau - sigma);
            let ynew = (apply_block(&y) - &y * c) * (2.0 * sigma_new / e) - &x * (sigma * sigma_new);
            x = y;
            y = ynew;
            sigma = sigma_new;
        }
        (theta, q, aq) = rayleigh_ritz(y);
    }
    Err(Error::Eigensolver("subspace iteration did not converge".into()))
}
