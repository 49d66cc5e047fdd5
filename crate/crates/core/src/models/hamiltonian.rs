use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{Boundary, Grid, GridFunction, GridOperator};
use crate::models::GubanovMap;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// Wells `n + [−a/2, a/2]^d` at depth 0 inside a barrier of height `v0`.
    KronigPenney { v0: f64, a: f64 },
    Uniform { value: f64 },
}

/// `−Δ_h + V` with the `2d+1`-point stencil.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    grid: Arc<Grid>,
    potential: Vec<f64>,
    spec: PotentialSpec,
    fingerprint: u64,
}

fn in_well(y: &[f64], a: f64) -> bool {
    y.iter().all(|v| (v - v.round()).abs() <= a / 2.0)
}

fn fingerprint(grid: &Grid, potential: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    grid.dim().hash(&mut h);
    grid.points_per_axis().hash(&mut h);
    grid.spacing().to_bits().hash(&mut h);
    grid.half_width().to_bits().hash(&mut h);
    (grid.boundary() == Boundary::Periodic).hash(&mut h);
    for v in potential {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn check_wells(grid: &Grid, a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("well width a = {a} must lie in (0, 1)")));
    }
    if grid.spacing() > a / 8.0 {
        return Err(Error::UnresolvedWells { spacing: grid.spacing(), limit: a / 8.0 });
    }
    Ok(())
}

impl Hamiltonian {
    pub fn from_potential(grid: &Arc<Grid>, potential: Vec<f64>, spec: PotentialSpec) -> Result<Self> {
        if potential.len() != grid.len() || potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("potential must be finite with one value per grid point".into()));
        }
        let fingerprint = fingerprint(grid, &potential);
        Ok(Hamiltonian { grid: grid.clone(), potential, spec, fingerprint })
    }

    /// `−Δ_h + c`.
    pub fn uniform(grid: &Arc<Grid>, value: f64) -> Result<Self> {
        Self::from_potential(grid, vec![value; grid.len()], PotentialSpec::Uniform { value })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn spec(&self) -> PotentialSpec {
        self.spec
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn upper_bound(&self) -> f64 {
        let h = self.grid.spacing();
        4.0 * self.grid.dim() as f64 / (h * h) + self.potential.iter().copied().fold(0.0, f64::max)
    }

    /// `y = H x` for real vectors.
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        let g = &*self.grid;
        let n = g.points_per_axis();
        let d = g.dim();
        let inv_h2 = 1.0 / (g.spacing() * g.spacing());
        let periodic = g.boundary() == Boundary::Periodic;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = (2.0 * d as f64 * inv_h2 + self.potential[i]) * x[i];
            let mut rem = i;
            for axis in (0..d).rev() {
                let c = rem % n;
                rem /= n;
                let stride = g.stride(axis);
                if c + 1 < n {
                    acc -= inv_h2 * x[i + stride];
                } else if periodic {
                    acc -= inv_h2 * x[i + stride - n * stride];
                }
                if c > 0 {
                    acc -= inv_h2 * x[i - stride];
                } else if periodic {
                    acc -= inv_h2 * x[i + (n - 1) * stride];
                }
            }
            *yi = acc;
        }
    }

    /// Dense real matrix; used for small grids.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        m.as_mut_slice().par_chunks_mut(n).enumerate().for_each(|(c, col)| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            self.apply_real(&e, col);
        });
        m
    }
}

impl GridOperator for Hamiltonian {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if **f.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        let re: Vec<f64> = f.values().iter().map(|v| v.re).collect();
        let im: Vec<f64> = f.values().iter().map(|v| v.im).collect();
        let mut hre = vec![0.0; re.len()];
        let mut him = vec![0.0; im.len()];
        self.apply_real(&re, &mut hre);
        self.apply_real(&im, &mut him);
        let values = hre.into_iter().zip(him).map(|(a, b)| Complex64::new(a, b)).collect();
        GridFunction::from_values(&self.grid, values)
    }
}

/// Kronig-Penney operator: wells of width `a` around every integer point,
/// barrier height `v0` elsewhere.
pub fn build_kronig_penney(grid: &Arc<Grid>, v0: f64, a: f64) -> Result<Hamiltonian> {
    check_wells(grid, a)?;
    let potential = (0..grid.len()).map(|i| if in_well(grid.point(i), a) { 0.0 } else { v0 }).collect();
    Hamiltonian::from_potential(grid, potential, PotentialSpec::KronigPenney { v0, a })
}

/// `−Δ + V_0(x + g(x))`.
pub fn build_deformed_hamiltonian(map: &GubanovMap, grid: &Arc<Grid>, v0: f64, a: f64) -> Result<Hamiltonian> {
    check_wells(grid, a)?;
    if map.dim() != grid.dim() {
        return Err(Error::InvalidArgument("map and grid dimensions differ".into()));
    }
    let potential = (0..grid.len())
        .map(|i| if in_well(&map.forward(grid.point(i)), a) { 0.0 } else { v0 })
        .collect();
    Hamiltonian::from_potential(grid, potential, PotentialSpec::KronigPenney { v0, a })
}
