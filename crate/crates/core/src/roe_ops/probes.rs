//! Randomized probes for finite propagation and local compactness.
//!
//! A probe can only falsify: passing means no violation was found among the
//! sampled multiplier pairs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, GridFunction, GridOperator};
use crate::linalg::singular_values;
use crate::roe_ops::RankOneSumOperator;
use crate::{Error, Result};

pub const PROPAGATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationProbeResult {
    pub separation: f64,
    pub trials: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

struct Ball {
    center: Vec<f64>,
    radius: f64,
}

fn random_point(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let l = grid.half_width();
    (0..grid.dim()).map(|_| rng.gen_range(-l..l)).collect()
}

fn random_unit(grid: &std::sync::Arc<Grid>, rng: &mut ChaCha8Rng) -> GridFunction {
    let mut u = GridFunction::from_fn(grid, |_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    u.scale(1.0 / u.norm());
    u
}

/// Pairs of balls whose closures are more than `separation` apart.
fn ball_pairs(grid: &Grid, separation: f64, trials: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(Ball, Ball)>> {
    let h = grid.spacing();
    let l = grid.half_width();
    let mut pairs = Vec::new();
    // Small balls pressed against opposite faces along each axis.
    let edge = l - 2.0 * h;
    for axis in 0..grid.dim() {
        let mut a = vec![0.0; grid.dim()];
        let mut b = vec![0.0; grid.dim()];
        a[axis] = -edge;
        b[axis] = edge;
        let radius = 2.0 * h;
        if grid.point_distance(&a, &b) - 2.0 * radius > separation {
            pairs.push((Ball { center: a, radius }, Ball { center: b, radius }));
        }
    }
    let max_radius = (l / 3.0).max(2.0 * h);
    let mut attempts = 0;
    while pairs.len() < trials + grid.dim() {
        attempts += 1;
        if attempts > 200 * (trials + 1) {
            break;
        }
        let r1 = rng.gen_range(2.0 * h..=max_radius);
        let r2 = rng.gen_range(2.0 * h..=max_radius);
        let c1 = random_point(grid, rng);
        let c2 = random_point(grid, rng);
        if grid.point_distance(&c1, &c2) - r1 - r2 > separation {
            pairs.push((Ball { center: c1, radius: r1 }, Ball { center: c2, radius: r2 }));
        }
    }
    if pairs.is_empty() {
        return Err(Error::BoxTooSmall(format!(
            "no separated ball pair fits at separation {separation} in a box of half-width {l}"
        )));
    }
    Ok(pairs)
}

/// Largest `‖f T g u‖` over random separated indicator pairs `f, g` and random
/// unit vectors `u`, in both orders.
pub fn probe_propagation(t: &dyn GridOperator, separation: f64, trials: usize, seed: u64) -> Result<PropagationProbeResult> {
    if !(separation > 0.0) {
        return Err(Error::InvalidArgument(format!("separation must be positive, got {separation}")));
    }
    let grid = t.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = ball_pairs(&grid, separation, trials, &mut rng)?;
    let mut worst: f64 = 0.0;
    for (a, b) in &pairs {
        let fa = GridFunction::ball_indicator(&grid, &a.center, a.radius);
        let fb = GridFunction::ball_indicator(&grid, &b.center, b.radius);
        for (f, g) in [(&fa, &fb), (&fb, &fa)] {
            if f.is_zero() || g.is_zero() {
                continue;
            }
            let u = random_unit(&grid, &mut rng);
            let out = f.multiply(&t.apply(&g.multiply(&u)?)?)?;
            worst = worst.max(out.norm());
        }
    }
    Ok(PropagationProbeResult {
        separation,
        trials: pairs.len(),
        max_residual: worst,
        tolerance: PROPAGATION_TOLERANCE,
        pass: worst <= PROPAGATION_TOLERANCE,
    })
}

/// Largest `‖x − y‖` with `(T δ_y)(x)` above the residual threshold, over
/// point sources `δ_y`. Every grid point is used when the grid has at most
/// `max_sources` points; otherwise a random sample of that size.
pub fn measure_propagation(t: &dyn GridOperator, max_sources: usize, seed: u64) -> Result<f64> {
    let grid = t.grid().clone();
    let n = grid.len();
    let sources: Vec<usize> = if n <= max_sources {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..max_sources).map(|_| rng.gen_range(0..n)).collect()
    };
    let scale = grid.weight().sqrt();
    let mut worst: f64 = 0.0;
    for y in sources {
        let out = t.apply(&GridFunction::point_delta(&grid, y))?;
        let py = grid.point(y).to_vec();
        for (x, v) in out.values().iter().enumerate() {
            if v.norm() * scale > PROPAGATION_TOLERANCE {
                worst = worst.max(grid.distance(x, &py));
            }
        }
    }
    Ok(worst)
}

/// Numerical rank of `f·T`: singular values above `1e-10 · σ_max`.
pub fn probe_local_compactness(t: &RankOneSumOperator, f: &GridFunction) -> Result<usize> {
    let ft = t.left_multiplied(f)?;
    let s = singular_values(&ft.reduced_matrix());
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > 1e-10 * top).count())
}
