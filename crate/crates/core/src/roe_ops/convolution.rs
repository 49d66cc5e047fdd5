use std::sync::Arc;

use num_complex::Complex64;

use crate::grid::{Boundary, Grid, GridFunction, GridOperator};
use crate::{Error, Result};

/// Discrete convolution `(Kφ)(x) = h^d Σ_m k(m h) φ(x − m h)` over integer
/// offsets `m`.
#[derive(Clone, Debug)]
pub struct ConvolutionOperator {
    grid: Arc<Grid>,
    offsets: Vec<(Vec<i64>, Complex64)>,
    support_radius: f64,
}

impl ConvolutionOperator {
    /// Samples `k` at every offset `m h` with `‖m h‖ ≤ radius`.
    pub fn from_fn(grid: &Arc<Grid>, radius: f64, k: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let h = grid.spacing();
        let reach = (radius / h + 1e-9).floor() as i64;
        let d = grid.dim();
        let mut offsets = Vec::new();
        let side = (2 * reach + 1) as usize;
        let total = side.pow(d as u32);
        let mut x = vec![0.0; d];
        for flat in 0..total {
            let mut rem = flat;
            let mut m = vec![0i64; d];
            for axis in (0..d).rev() {
                m[axis] = (rem % side) as i64 - reach;
                rem /= side;
            }
            for (xa, ma) in x.iter_mut().zip(&m) {
                *xa = *ma as f64 * h;
            }
            if x.iter().map(|v| v * v).sum::<f64>().sqrt() > radius * (1.0 + 1e-12) {
                continue;
            }
            let v = k(&x);
            if v != Complex64::new(0.0, 0.0) {
                offsets.push((m, v));
            }
        }
        Self::from_offsets(grid, offsets)
    }

    pub fn from_offsets(grid: &Arc<Grid>, offsets: Vec<(Vec<i64>, Complex64)>) -> Result<Self> {
        let h = grid.spacing();
        if offsets.iter().any(|(m, _)| m.len() != grid.dim()) {
            return Err(Error::InvalidArgument("offset dimension differs from grid".into()));
        }
        let support_radius = offsets
            .iter()
            .map(|(m, _)| m.iter().map(|&v| (v as f64 * h).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let limit = 2.0 * grid.half_width() / 4.0;
        if support_radius >= limit {
            return Err(Error::InvalidArgument(format!(
                "kernel support radius {support_radius} is not below box size / 4 = {limit}"
            )));
        }
        Ok(ConvolutionOperator { grid: grid.clone(), offsets, support_radius })
    }

    /// `sup{‖x‖ : k(x) ≠ 0}` over the sampled offsets.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }
}

/// Convolution with a kernel given on a grid whose points include the origin.
pub fn convolution_operator(k: &GridFunction) -> Result<ConvolutionOperator> {
    let grid = k.grid();
    let n = grid.points_per_axis();
    if n % 2 == 0 {
        return Err(Error::InvalidArgument("kernel grid must contain the origin (odd point count)".into()));
    }
    let mid = (n / 2) as i64;
    let offsets = k
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() != 0.0)
        .map(|(i, v)| (grid.multi_index(i).iter().map(|&c| c as i64 - mid).collect(), *v))
        .collect();
    ConvolutionOperator::from_offsets(grid, offsets)
}

impl GridOperator for ConvolutionOperator {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if **f.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        let g = &*self.grid;
        let n = g.points_per_axis() as i64;
        let d = g.dim();
        let periodic = g.boundary() == Boundary::Periodic;
        let w = g.weight();
        let src = f.values();
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut nb = vec![0usize; d];
        for (i, o) in out.iter_mut().enumerate() {
            let mi = g.multi_index(i);
            let mut acc = Complex64::new(0.0, 0.0);
            'offsets: for (m, kv) in &self.offsets {
                for axis in 0..d {
                    let mut c = mi[axis] as i64 - m[axis];
                    if periodic {
                        c = c.rem_euclid(n);
                    } else if c < 0 || c >= n {
                        continue 'offsets;
                    }
                    nb[axis] = c as usize;
                }
                acc += kv * src[g.flat_index(&nb)];
            }
            *o = acc * w;
        }
        GridFunction::from_values(&self.grid, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_delta_is_identity() {
        let g = Grid::new(1, 2.05, 0.1, Boundary::Dirichlet).unwrap();
        assert_eq!(g.points_per_axis() % 2, 1);
        let mut k = GridFunction::zeros(&g);
        let mid = g.points_per_axis() / 2;
        k.values_mut()[mid] = Complex64::new(1.0 / g.weight(), 0.0);
        let op = convolution_operator(&k).unwrap();
        let u = GridFunction::from_real_fn(&g, |x| (3.0 * x[0]).sin() + x[0]);
        assert!(op.apply(&u).unwrap().sub(&u).unwrap().norm() < 1e-12);
        assert_eq!(op.support_radius(), 0.0);
    }

    #[test]
    fn even_kernel_keeps_parity() {
        let g = Grid::new(1, 4.0, 0.05, Boundary::Dirichlet).unwrap();
        let op = ConvolutionOperator::from_fn(&g, 0.7, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let u = GridFunction::from_real_fn(&g, |x| (-(x[0] * x[0])).exp() * x[0].cos());
        let out = op.apply(&u).unwrap();
        let n = g.len();
        for i in 0..n {
            assert!((out.values()[i] - out.values()[n - 1 - i]).norm() < 1e-13);
        }
    }

    #[test]
    fn indicator_convolution_is_tent_overlap() {
        let h = 1.0 / 1024.0;
        let g = Grid::new(1, 5.0, h, Boundary::Dirichlet).unwrap();
        let op = ConvolutionOperator::from_fn(&g, 1.0, |_| Complex64::new(0.5, 0.0)).unwrap();
        let u = GridFunction::from_real_fn(&g, |x| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 });
        let out = op.apply(&u).unwrap();
        for i in 0..g.len() {
            let x = g.point(i)[0];
            let exact = 0.5 * ((x + 1.0).min(1.0) - (x - 1.0).max(0.0)).max(0.0);
            assert!((out.values()[i].re - exact).abs() < 1e-3, "x={x}");
        }
    }

    #[test]
    fn oversized_kernel_is_refused() {
        let g = Grid::new(1, 2.0, 0.1, Boundary::Dirichlet).unwrap();
        assert!(ConvolutionOperator::from_fn(&g, 1.5, |_| Complex64::new(1.0, 0.0)).is_err());
    }
}
