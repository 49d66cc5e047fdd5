use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::discrete_sets::Point;
use crate::{Error, Result};

/// Closed-form perturbations `g` with their derivative bound `ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeformationKind {
    Zero,
    /// `g(x) = ε x`.
    Linear { eps: f64 },
    /// `g_k(x) = ε sin(x_{k+1 mod d})`.
    Sine { eps: f64 },
}

impl DeformationKind {
    /// `sup_x max |∂g|, |∂²g|, |∂³g|`.
    pub fn xi(&self) -> f64 {
        match *self {
            DeformationKind::Zero => 0.0,
            DeformationKind::Linear { eps } | DeformationKind::Sine { eps } => eps.abs(),
        }
    }
}

/// Near-identity coordinate change `f = id + g` with inverse `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GubanovMap {
    kind: DeformationKind,
    dim: usize,
    xi: f64,
}

const NEWTON_TOLERANCE: f64 = 1e-10;

impl GubanovMap {
    pub fn new(kind: DeformationKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let xi = kind.xi();
        if !(xi < 0.5) {
            return Err(Error::DeformationTooStrong(xi));
        }
        Ok(GubanovMap { kind, dim, xi })
    }

    pub fn kind(&self) -> DeformationKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn is_identity(&self) -> bool {
        self.xi == 0.0
    }

    pub fn g(&self, x: &[f64]) -> Point {
        let d = self.dim;
        match self.kind {
            DeformationKind::Zero => vec![0.0; d],
            DeformationKind::Linear { eps } => x.iter().map(|v| eps * v).collect(),
            DeformationKind::Sine { eps } => (0..d).map(|k| eps * x[(k + 1) % d].sin()).collect(),
        }
    }

    /// `Dg(x)` with entry `(k, i) = ∂_i g_k`.
    pub fn dg(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        match self.kind {
            DeformationKind::Zero => DMatrix::zeros(d, d),
            DeformationKind::Linear { eps } => DMatrix::identity(d, d) * eps,
            DeformationKind::Sine { eps } => {
                let mut m = DMatrix::zeros(d, d);
                for k in 0..d {
                    let i = (k + 1) % d;
                    m[(k, i)] += eps * x[i].cos();
                }
                m
            }
        }
    }

    /// Largest displacement `sup |g|` over the box `[−L, L]^d`.
    pub fn max_displacement(&self, half_width: f64) -> f64 {
        let per_axis = match self.kind {
            DeformationKind::Zero => 0.0,
            DeformationKind::Linear { eps } => eps.abs() * half_width,
            DeformationKind::Sine { eps } => eps.abs(),
        };
        per_axis * (self.dim as f64).sqrt()
    }

    /// `f(x) = x + g(x)`.
    pub fn forward(&self, x: &[f64]) -> Point {
        x.iter().zip(self.g(x)).map(|(a, b)| a + b).collect()
    }

    /// `J(x) = |det(I + Dg(x))|`.
    pub fn jacobian(&self, x: &[f64]) -> f64 {
        (DMatrix::identity(self.dim, self.dim) + self.dg(x)).determinant().abs()
    }

    /// `h(y) = f^{-1}(y)` by damped Newton iteration from `y`.
    pub fn inverse(&self, y: &[f64]) -> Result<Point> {
        if self.is_identity() {
            return Ok(y.to_vec());
        }
        let d = self.dim;
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let residual = |x: &[f64]| -> Vec<f64> { self.forward(x).iter().zip(y).map(|(a, b)| a - b).collect() };
        let mut x = y.to_vec();
        let mut r = residual(&x);
        let scale = 1.0 + norm(y);
        for _ in 0..100 {
            let rn = norm(&r);
            if rn <= 1e-14 * scale {
                break;
            }
            let jm = DMatrix::identity(d, d) + self.dg(&x);
            let step = jm
                .lu()
                .solve(&nalgebra::DVector::from_column_slice(&r))
                .ok_or_else(|| Error::InvalidArgument("singular Jacobian in Newton iteration".into()))?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
                let tr = residual(&trial);
                if norm(&tr) < rn || t < 1e-6 {
                    x = trial;
                    r = tr;
                    break;
                }
                t *= 0.5;
            }
        }
        let rn = norm(&r);
        if rn > NEWTON_TOLERANCE * scale {
            return Err(Error::InvalidArgument(format!("Newton inversion stalled at residual {rn:.3e}")));
        }
        Ok(x)
    }
}

/// Constructs a map after checking `ξ < 1/2`.
pub fn build_gubanov(kind: DeformationKind, dim: usize) -> Result<GubanovMap> {
    GubanovMap::new(kind, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_sets::{deformed_lattice, max_discreteness_radius};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_map_is_identity() {
        let m = build_gubanov(DeformationKind::Zero, 2).unwrap();
        let x = [0.3, -1.7];
        assert_eq!(m.forward(&x), x.to_vec());
        assert_eq!(m.inverse(&x).unwrap(), x.to_vec());
        assert_eq!(m.jacobian(&x), 1.0);
    }

    #[test]
    fn too_strong() {
        assert!(matches!(build_gubanov(DeformationKind::Sine { eps: 0.6 }, 2), Err(Error::DeformationTooStrong(_))));
        assert!(matches!(build_gubanov(DeformationKind::Sine { eps: 0.5 }, 1), Err(Error::DeformationTooStrong(_))));
    }

    #[test]
    fn linear_closed_form() {
        let eps = 0.2;
        let m = build_gubanov(DeformationKind::Linear { eps }, 2).unwrap();
        let y = [1.3, -0.4];
        let x = m.inverse(&y).unwrap();
        assert!((x[0] - y[0] / (1.0 + eps)).abs() < 1e-12);
        assert!((x[1] - y[1] / (1.0 + eps)).abs() < 1e-12);
        assert!((m.jacobian(&y) - (1.0 + eps).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn sine_inverse_is_lipschitz() {
        let xi = 0.05;
        let m = build_gubanov(DeformationKind::Sine { eps: xi }, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let hx = m.inverse(&x).unwrap();
            let hy = m.inverse(&y).unwrap();
            let back = m.forward(&hx);
            assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-10));
            let dh = ((hx[0] - hy[0]).powi(2) + (hx[1] - hy[1]).powi(2)).sqrt();
            let dx = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            assert!(dh <= dx / (1.0 - 2.0 * xi) + 1e-12);
            assert!(m.jacobian(&x) > 0.0);
        }
    }

    #[test]
    fn deformed_lattice_radius_bounds() {
        let xi = 0.1;
        let m = build_gubanov(DeformationKind::Sine { eps: xi }, 2).unwrap();
        let set = deformed_lattice(|n| m.inverse(n), &[-6.0, -6.0], &[6.0, 6.0]).unwrap();
        let brute = max_discreteness_radius(set.points()).unwrap();
        assert_eq!(set.radius(), brute);
        assert!(set.radius() >= 1.0 / (1.0 + 2.0 * xi) / 2.0, "{}", set.radius());
        assert!(set.radius() >= (1.0 - 2.0 * xi) / 2.0);
        let half = deformed_lattice(|n| Ok(n.iter().map(|v| v / 2.0).collect()), &[-3.0], &[3.0]).unwrap();
        assert!((half.radius() - 0.25).abs() < 1e-15);
    }
}
