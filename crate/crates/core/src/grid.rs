//! Finite box discretization of `R^d` with midpoint quadrature.
//!
//! A [`Grid`] carries `N` points per axis at spacing `h`, placed symmetrically
//! about the origin. Every point has quadrature weight `h^d`, so
//! `<f, g> = h^d Σ conj(f) g`. Functions on the grid are [`GridFunction`]s
//! holding one complex value per point.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::Dirichlet
    }
}

#[derive(Clone, Debug)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    spacing: f64,
    boundary: Boundary,
    points_per_axis: usize,
    positions: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.half_width == other.half_width
            && self.spacing == other.spacing
            && self.boundary == other.boundary
    }
}

impl Grid {
    /// Builds the grid `[-L, L]^d` with `N = floor(2L/h)` points per axis.
    pub fn new(dim: usize, half_width: f64, spacing: f64, boundary: Boundary) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        let n = (2.0 * half_width / spacing + 1e-9).floor() as usize;
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points per axis, got {n}")));
        }
        let total = n
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidGrid("point count overflows".into()))?;
        let mut positions = vec![0.0; total * dim];
        let offset = (n as f64 - 1.0) / 2.0;
        for idx in 0..total {
            let mut rem = idx;
            for axis in (0..dim).rev() {
                let i = rem % n;
                rem /= n;
                positions[idx * dim + axis] = (i as f64 - offset) * spacing;
            }
        }
        Ok(Arc::new(Grid { dim, half_width, spacing, boundary, points_per_axis: n, positions }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Total number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Quadrature weight `h^d` shared by every point.
    pub fn weight(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinate of the `i`-th point along any axis.
    pub fn axis_coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.points_per_axis as f64 - 1.0) / 2.0) * self.spacing
    }

    /// Half the side of the region covered by the grid cells, `N h / 2`.
    pub fn cell_extent(&self) -> f64 {
        0.5 * self.points_per_axis as f64 * self.spacing
    }

    /// Periodic length of each axis.
    pub fn period(&self) -> f64 {
        self.points_per_axis as f64 * self.spacing
    }

    pub fn point(&self, idx: usize) -> &[f64] {
        &self.positions[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let n = self.points_per_axis;
        let mut out = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Stride of `axis` in the flat layout (axis 0 varies slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim - 1 - axis) as u32)
    }

    /// Writes `x_idx - c` into `out`, using the minimum image on periodic grids.
    pub fn displacement(&self, idx: usize, center: &[f64], out: &mut [f64]) {
        let p = self.point(idx);
        for k in 0..self.dim {
            out[k] = self.wrap(p[k] - center[k]);
        }
    }

    pub fn distance(&self, idx: usize, center: &[f64]) -> f64 {
        let p = self.point(idx);
        let mut acc = 0.0;
        for k in 0..self.dim {
            let d = self.wrap(p[k] - center[k]);
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Euclidean distance between two arbitrary points under the grid's boundary rule.
    pub fn point_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| self.wrap(x - y).powi(2)).sum::<f64>().sqrt()
    }

    fn wrap(&self, d: f64) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => d,
            Boundary::Periodic => {
                let p = self.period();
                d - p * (d / p).round()
            }
        }
    }

    /// Index of the grid point nearest to `x`, if `x` lies within the cell region.
    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        let n = self.points_per_axis;
        let offset = (n as f64 - 1.0) / 2.0;
        let mut multi = Vec::with_capacity(self.dim);
        for &xk in x {
            let u = (xk / self.spacing + offset).round();
            if u < 0.0 || u >= n as f64 {
                return None;
            }
            multi.push(u as usize);
        }
        Some(self.flat_index(&multi))
    }

    /// True when `x` lies in the closed box `[-L, L]^d`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= self.half_width)
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.half_width * (self.dim as f64).sqrt()
    }

    fn header(&self) -> GridHeader {
        GridHeader { d: self.dim, l: self.half_width, h: self.spacing, bc: self.boundary }
    }
}

/// Read-only linear operator acting on functions of one grid.
pub trait GridOperator: Sync {
    fn grid(&self) -> &Arc<Grid>;
    fn apply(&self, phi: &GridFunction) -> Result<GridFunction>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        GridFunction { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridFunction { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        GridFunction { grid: grid.clone(), values }
    }

    pub fn from_real_fn(grid: &Arc<Grid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Indicator of the open ball `B_r(c)`.
    pub fn ball_indicator(grid: &Arc<Grid>, center: &[f64], radius: f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                if grid.distance(i, center) < radius {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        GridFunction { grid: grid.clone(), values }
    }

    /// Unit-norm indicator of `B_r(c)`; fails when the ball holds no grid point.
    pub fn normalized_ball_indicator(grid: &Arc<Grid>, center: &[f64], radius: f64) -> Result<Self> {
        let mut f = Self::ball_indicator(grid, center, radius);
        let n = f.norm();
        if n == 0.0 {
            return Err(Error::BallUnresolved { radius, minimum: 2.0 * grid.spacing() });
        }
        f.scale(1.0 / n);
        Ok(f)
    }

    /// Unit-norm function supported on the single point `idx`.
    pub fn point_delta(grid: &Arc<Grid>, idx: usize) -> Self {
        let mut f = Self::zeros(grid);
        f.values[idx] = Complex64::new(grid.weight().sqrt().recip(), 0.0);
        f
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.weight() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// `<self, other> = h^d Σ conj(self) other`.
    pub fn inner_product(&self, other: &GridFunction) -> Result<Complex64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(dot(&self.values, &other.values) * self.grid.weight())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn scale_complex(&mut self, factor: Complex64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: Complex64, other: &GridFunction) -> Result<()> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        axpy(alpha, &other.values, &mut self.values);
        Ok(())
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction { grid: self.grid.clone(), values })
    }

    /// Pointwise product.
    pub fn multiply(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(GridFunction { grid: self.grid.clone(), values })
    }

    /// Keeps values at points with `‖x - c‖ < r`, zeroes the rest.
    pub fn restrict_to_ball(&self, center: &[f64], radius: f64) -> GridFunction {
        self.masked(|i| self.grid.distance(i, center) < radius)
    }

    /// Complement of [`restrict_to_ball`](Self::restrict_to_ball): keeps `‖x - c‖ ≥ r`.
    pub fn restrict_outside_ball(&self, center: &[f64], radius: f64) -> GridFunction {
        self.masked(|i| self.grid.distance(i, center) >= radius)
    }

    fn masked(&self, keep: impl Fn(usize) -> bool) -> GridFunction {
        let zero = Complex64::new(0.0, 0.0);
        let values = self.values.iter().enumerate().map(|(i, v)| if keep(i) { *v } else { zero }).collect();
        GridFunction { grid: self.grid.clone(), values }
    }

    /// Mass `h^d Σ |f|²` over points with some coordinate beyond `L - margin`.
    pub fn escaped_mass(&self, margin: f64) -> f64 {
        let limit = self.grid.half_width() - margin;
        let w = self.grid.weight();
        (0..self.grid.len())
            .filter(|&i| self.grid.point(i).iter().any(|x| x.abs() > limit))
            .map(|i| self.values[i].norm_sqr())
            .sum::<f64>()
            * w
    }

    /// Tensor-product cubic Lagrange interpolation at an arbitrary point.
    ///
    /// Nodes outside the grid count as zero on Dirichlet grids and wrap on
    /// periodic ones.
    pub fn interpolate_cubic(&self, x: &[f64]) -> Complex64 {
        let g = &*self.grid;
        let n = g.points_per_axis() as i64;
        let offset = (n as f64 - 1.0) / 2.0;
        let dim = g.dim();
        let mut base = vec![0i64; dim];
        let mut weights = vec![[0.0f64; 4]; dim];
        for k in 0..dim {
            let u = x[k] / g.spacing() + offset;
            let i0 = u.floor();
            let t = u - i0;
            base[k] = i0 as i64 - 1;
            weights[k] = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let corners = 4usize.pow(dim as u32);
        'corner: for c in 0..corners {
            let mut rem = c;
            let mut w = 1.0;
            let mut flat = 0usize;
            for k in 0..dim {
                let o = rem % 4;
                rem /= 4;
                let mut i = base[k] + o as i64;
                if i < 0 || i >= n {
                    match g.boundary() {
                        Boundary::Dirichlet => continue 'corner,
                        Boundary::Periodic => i = i.rem_euclid(n),
                    }
                }
                w *= weights[k][o];
                flat = flat * n as usize + i as usize;
            }
            acc += self.values[flat] * w;
        }
        acc
    }

    /// Writes `<base>.json` (grid header) and `<base>.csv` (index, re, im).
    pub fn save(&self, base: &Path) -> Result<()> {
        let header = serde_json::to_string_pretty(&self.grid.header())?;
        fs::write(base.with_extension("json"), header)?;
        let mut w = csv::Writer::from_path(base.with_extension("csv"))?;
        w.write_record(["index", "re", "im"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(base: &Path) -> Result<Self> {
        let header: GridHeader = serde_json::from_str(&fs::read_to_string(base.with_extension("json"))?)?;
        let grid = Grid::new(header.d, header.l, header.h, header.bc)?;
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut r = csv::Reader::from_path(base.with_extension("csv"))?;
        for row in r.deserialize() {
            let (i, re, im): (usize, f64, f64) = row?;
            let slot = values
                .get_mut(i)
                .ok_or_else(|| Error::InvalidArgument(format!("index {i} out of range")))?;
            *slot = Complex64::new(re, im);
        }
        Ok(GridFunction { grid, values })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    d: usize,
    #[serde(rename = "L")]
    l: f64,
    h: f64,
    bc: Boundary,
}

pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
    f.inner_product(g)
}

pub fn restrict_to_ball(f: &GridFunction, center: &[f64], radius: f64) -> GridFunction {
    f.restrict_to_ball(center, radius)
}

/// `Σ conj(a) b` without quadrature weight.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

pub(crate) fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    if alpha.im == 0.0 {
        let a = alpha.re;
        for (yi, xi) in y.iter_mut().zip(x) {
            yi.re += a * xi.re;
            yi.im += a * xi.im;
        }
    } else {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }
}

/// Pointwise multiplication by a fixed grid function.
#[derive(Clone, Debug)]
pub struct MultiplicationOperator {
    multiplier: GridFunction,
}

impl MultiplicationOperator {
    pub fn multiplier(&self) -> &GridFunction {
        &self.multiplier
    }
}

pub fn multiplication_operator(f: GridFunction) -> MultiplicationOperator {
    MultiplicationOperator { multiplier: f }
}

impl GridOperator for MultiplicationOperator {
    fn grid(&self) -> &Arc<Grid> {
        self.multiplier.grid()
    }

    fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        self.multiplier.multiply(phi)
    }
}

/// Refuses functions whose mass near the box edge is too large to stand in
/// for a function on all of `R^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGuard {
    pub margin: f64,
    pub tolerance: f64,
}

impl BoxGuard {
    pub const DEFAULT_TOLERANCE: f64 = 1e-6;

    /// Margin of two grid cells with the default tolerance.
    pub fn for_grid(grid: &Grid) -> Self {
        BoxGuard { margin: 2.0 * grid.spacing(), tolerance: Self::DEFAULT_TOLERANCE }
    }

    pub fn escaped_mass(&self, f: &GridFunction) -> f64 {
        f.escaped_mass(self.margin)
    }

    pub fn in_layer(&self, grid: &Grid, idx: usize) -> bool {
        let limit = grid.half_width() - self.margin;
        grid.point(idx).iter().any(|x| x.abs() > limit)
    }

    /// Returns the escaped mass, or an error when it exceeds the tolerance.
    pub fn check(&self, f: &GridFunction) -> Result<f64> {
        let escaped = self.escaped_mass(f);
        if escaped > self.tolerance {
            return Err(Error::EscapedMass { escaped, tolerance: self.tolerance });
        }
        Ok(escaped)
    }
}
