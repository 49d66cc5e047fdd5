//! Tail sums `Σ_{‖x−γ‖ ≥ R} ⟨x−γ⟩^{−2s}` over discrete sets and the
//! closed-form bound `C (1+R)^{d−2s}`.

use serde::{Deserialize, Serialize};

use crate::discrete_sets::Centers;
use crate::{Error, Result};

/// `⟨t⟩^{-2s}` from the squared distance.
#[inline]
fn weight(dist_sq: f64, s: f64) -> f64 {
    (1.0 + dist_sq).powf(-s)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact finite sum over the stored centers with `‖x − γ‖ ≥ R`.
pub fn tail_sum(d: &dyn Centers, x: &[f64], r_cut: f64, s: f64) -> f64 {
    let cut_sq = r_cut * r_cut;
    let mut acc = 0.0;
    d.for_each_center(&mut |g| {
        let q = dist_sq(x, g);
        if q >= cut_sq {
            acc += weight(q, s);
        }
    });
    acc
}

/// Tail sums for every pair `(s, R)` in one pass over the centers.
///
/// Returns `out[i][j]` for `s_list[i]`, `r_list[j]`.
pub fn tail_sums(d: &dyn Centers, x: &[f64], r_list: &[f64], s_list: &[f64]) -> Vec<Vec<f64>> {
    let cuts: Vec<f64> = r_list.iter().map(|r| r * r).collect();
    let mut out = vec![vec![0.0; r_list.len()]; s_list.len()];
    d.for_each_center(&mut |g| {
        let q = dist_sq(x, g);
        if cuts.iter().all(|&c| q < c) {
            return;
        }
        let base = 1.0 + q;
        for (i, &s) in s_list.iter().enumerate() {
            let w = base.powf(-s);
            for (j, &c) in cuts.iter().enumerate() {
                if q >= c {
                    out[i][j] += w;
                }
            }
        }
    });
    out
}

/// Constant `C(d, s, ε, R)` of the tail-sum bound.
///
/// `C = 2^s (1−ε)^{−2s} · d / (ε^d (2s−d)) · (1 − ε/(1+R))^{d−2s}`, where the
/// factor `d` is the ratio of the unit-sphere area to the unit-ball volume.
pub fn lemma_constant(d: usize, s: f64, eps: f64, r: f64, big_r: f64) -> Result<f64> {
    let df = d as f64;
    if d == 0 {
        return Err(Error::Hypothesis("dimension must be positive".into()));
    }
    if !(s > df / 2.0) {
        return Err(Error::Hypothesis(format!("s = {s} must exceed d/2 = {}", df / 2.0)));
    }
    let limit = 1.0f64.min(r).min(big_r);
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::Hypothesis(format!("eps = {eps} must lie in (0, min(1, r, R)) = (0, {limit})")));
    }
    let c = 2f64.powf(s) * (1.0 - eps).powf(-2.0 * s) * df / (eps.powi(d as i32) * (2.0 * s - df))
        * (1.0 - eps / (1.0 + big_r)).powf(df - 2.0 * s);
    Ok(c)
}

/// Default `ε = min(1, r, R) / 2`.
pub fn default_eps(r: f64, big_r: f64) -> f64 {
    0.5 * 1.0f64.min(r).min(big_r)
}

/// Upper bound for the part of the infinite tail that a finite set omits
/// when every omitted center lies at distance `≥ rho` from `x`.
///
/// Integral comparison over the disjoint balls `B_r(γ)`:
/// `(d/r^d) ∫_{ρ−2r}^∞ (v+r)^{d−1} v^{−2s} dv`. Infinite when `ρ ≤ 2r`.
pub fn truncation_residual(d: usize, s: f64, r: f64, rho: f64) -> f64 {
    let v0 = rho - 2.0 * r;
    if v0 <= 0.0 || !(s > d as f64 / 2.0) {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..d {
        // (v + r)^{d-1} = Σ_k C(d-1, k) v^k r^{d-1-k}
        let e = k as f64 + 1.0 - 2.0 * s;
        total += binom * r.powi((d - 1 - k) as i32) * v0.powf(e) / (-e);
        binom *= (d - 1 - k) as f64 / (k as f64 + 1.0);
    }
    d as f64 / r.powi(d as i32) * total
}

/// One evaluation of the tail-sum bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSumReport {
    pub d: usize,
    pub x: Vec<f64>,
    pub cutoff: f64,
    pub s: f64,
    pub eps: f64,
    pub radius: f64,
    pub constant: f64,
    /// Brute-force finite sum.
    pub sum: f64,
    /// `C (1+R)^{d−2s}`.
    pub bound: f64,
    pub slack: f64,
    /// Bound on what the finite set omits from the infinite one, if known.
    pub truncation_residual: Option<f64>,
    pub pass: bool,
}

/// Brute-force tail sum against the bound for the given set.
pub fn verify_lemma(d: &dyn Centers, x: &[f64], big_r: f64, s: f64, eps: Option<f64>) -> Result<TailSumReport> {
    let sum = tail_sum(d, x, big_r, s);
    report_from_sum(d, x, big_r, s, eps, sum)
}

/// Builds a report around a precomputed tail sum.
pub fn report_from_sum(
    d: &dyn Centers,
    x: &[f64],
    big_r: f64,
    s: f64,
    eps: Option<f64>,
    sum: f64,
) -> Result<TailSumReport> {
    let dim = d.dim();
    if x.len() != dim {
        return Err(Error::InvalidArgument(format!("point of dimension {} for a {dim}-d set", x.len())));
    }
    let r = d.separation_radius();
    let eps = eps.unwrap_or_else(|| default_eps(r, big_r));
    let constant = lemma_constant(dim, s, eps, r, big_r)?;
    let bound = constant * (1.0 + big_r).powf(dim as f64 - 2.0 * s);
    let truncation_residual = d.truncation_radius(x).map(|rho| truncation_residual(dim, s, r, rho.max(big_r)));
    Ok(TailSumReport {
        d: dim,
        x: x.to_vec(),
        cutoff: big_r,
        s,
        eps,
        radius: r,
        constant,
        sum,
        bound,
        slack: bound - sum,
        truncation_residual,
        pass: sum <= bound,
    })
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Slope of `ln S(R)` against `ln(1+R)`.
pub fn tail_exponent_fit(d: &dyn Centers, x: &[f64], s: f64, r_list: &[f64]) -> Result<f64> {
    if r_list.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 cutoffs, got {}", r_list.len())));
    }
    if r_list.iter().any(|&r| !(r >= 1.0)) {
        return Err(Error::InvalidArgument("cutoffs must be at least 1".into()));
    }
    let sums = tail_sums(d, x, r_list, &[s]).remove(0);
    if let Some((r, _)) = r_list.iter().zip(&sums).find(|(_, &v)| v <= 0.0) {
        return Err(Error::EmptyTail(*r));
    }
    let xs: Vec<f64> = r_list.iter().map(|r| (1.0 + r).ln()).collect();
    let ys: Vec<f64> = sums.iter().map(|v| v.ln()).collect();
    Ok(least_squares_slope(&xs, &ys))
}
