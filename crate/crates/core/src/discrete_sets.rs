//! Uniformly discrete center sets.
//!
//! A set is `r`-uniformly discrete when the open balls `B_r(γ)` around its
//! points are mutually disjoint, i.e. every pairwise distance is at least `2r`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point = Vec<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformlyDiscreteSet {
    dim: usize,
    points: Vec<Point>,
    radius: f64,
    labels: Option<Vec<Vec<i64>>>,
    /// Integer window `[lo, hi]^d` when the set is a lattice truncation.
    #[serde(skip)]
    window: Option<(i64, i64, f64)>,
}

impl UniformlyDiscreteSet {
    /// Validates dimensions, `r > 0`, distinctness and the `2r` separation.
    pub fn new(dim: usize, points: Vec<Point>, radius: f64, labels: Option<Vec<Vec<i64>>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::InvalidArgument(format!("point {p:?} is not {dim}-dimensional")));
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::InvalidArgument("one label per point required".into()));
            }
        }
        if !verify_uniform_discreteness(&points, radius) {
            return Err(Error::InvalidArgument(format!("points are not {radius}-uniformly discrete")));
        }
        Ok(UniformlyDiscreteSet { dim, points, radius, labels, window: None })
    }

    /// Uses the largest admissible radius, half the minimum pairwise distance.
    pub fn with_max_radius(dim: usize, points: Vec<Point>, labels: Option<Vec<Vec<i64>>>) -> Result<Self> {
        let radius = max_discreteness_radius(&points)?;
        if radius == 0.0 {
            return Err(Error::InvalidArgument("duplicate points".into()));
        }
        Self::new(dim, points, radius, labels)
    }

    /// `ℤ^d ∩ [lo, hi]^d`, radius 1/2, labelled by the integer coordinates.
    pub fn lattice(dim: usize, lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidArgument(format!("empty lattice window [{lo}, {hi}]")));
        }
        let labels = lattice_labels(dim, &vec![(lo, hi); dim]);
        let points = labels.iter().map(|n| n.iter().map(|&v| v as f64).collect()).collect();
        let mut set = Self::new(dim, points, 0.5, Some(labels))?;
        set.window = Some((lo, hi, 1.0));
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn labels(&self) -> Option<&[Vec<i64>]> {
        self.labels.as_deref()
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        let points = self.points.iter().map(|p| p.iter().zip(v).map(|(a, b)| a + b).collect()).collect();
        UniformlyDiscreteSet { points, window: None, ..self.clone() }
    }

    /// Same points with a smaller declared radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.dim, self.points.clone(), radius, self.labels.clone())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        if self.labels.is_some() {
            header.extend((1..=self.dim).map(|k| format!("n{k}")));
        }
        w.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            if let Some(l) = &self.labels {
                row.extend(l[i].iter().map(|v| v.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`write_csv`](Self::write_csv); the radius is
    /// recomputed as half the minimum distance.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let dim = header.iter().filter(|h| h.starts_with('x')).count();
        let labelled = header.iter().any(|h| h.starts_with('n'));
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(e.to_string()));
            let p = (0..dim).map(|k| parse(&rec[k])).collect::<Result<Vec<_>>>()?;
            points.push(p);
            if labelled {
                let n = (dim..2 * dim)
                    .map(|k| rec[k].trim().parse::<i64>().map_err(|e| Error::InvalidArgument(e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                labels.push(n);
            }
        }
        Self::with_max_radius(dim, points, labelled.then_some(labels))
    }
}

fn lattice_labels(dim: usize, ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in ranges.iter().take(dim) {
        let mut next = Vec::with_capacity(out.len() * (hi - lo + 1).max(0) as usize);
        for prefix in &out {
            for v in lo..=hi {
                let mut n = prefix.clone();
                n.push(v);
                next.push(n);
            }
        }
        out = next;
    }
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// True iff every pairwise distance is at least `2r` (exact comparison).
/// Duplicates make the answer false; the empty set is vacuously discrete.
pub fn verify_uniform_discreteness(points: &[Point], r: f64) -> bool {
    let threshold = 2.0 * r;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if distance(&points[i], &points[j]) < threshold {
                return false;
            }
        }
    }
    true
}

/// Half the minimum pairwise distance.
pub fn max_discreteness_radius(points: &[Point]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    let mut min = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            min = min.min(distance(&points[i], &points[j]));
        }
    }
    Ok(min / 2.0)
}

/// Image `h(ℤ^d ∩ box)` of the lattice points lying in the axis-aligned box
/// `Π [lo_k, hi_k]`, labelled by their pre-images.
pub fn deformed_lattice(
    h_map: impl Fn(&[f64]) -> Result<Point>,
    lo: &[f64],
    hi: &[f64],
) -> Result<UniformlyDiscreteSet> {
    if lo.len() != hi.len() || lo.is_empty() {
        return Err(Error::InvalidArgument("box bounds must share a positive dimension".into()));
    }
    let dim = lo.len();
    let ranges: Vec<(i64, i64)> = lo.iter().zip(hi).map(|(l, h)| (l.ceil() as i64, h.floor() as i64)).collect();
    let labels = lattice_labels(dim, &ranges);
    let mut points = Vec::with_capacity(labels.len());
    for n in &labels {
        let x: Vec<f64> = n.iter().map(|&v| v as f64).collect();
        let y = h_map(&x)?;
        if y.len() != dim || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("map returned invalid image {y:?} for {n:?}")));
        }
        points.push(y);
    }
    UniformlyDiscreteSet::with_max_radius(dim, points, Some(labels))
}

/// A (possibly lazy) collection of centers that tail sums range over.
pub trait Centers: Sync {
    fn dim(&self) -> usize;
    /// Declared discreteness radius `r`.
    fn separation_radius(&self) -> f64;
    fn for_each_center(&self, f: &mut dyn FnMut(&[f64]));
    /// Lower bound on the distance from `x` to any point of the ambient
    /// infinite set that this finite set omits, when that set is known.
    fn truncation_radius(&self, x: &[f64]) -> Option<f64>;
}

impl Centers for UniformlyDiscreteSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn separation_radius(&self) -> f64 {
        self.radius
    }

    fn for_each_center(&self, f: &mut dyn FnMut(&[f64])) {
        for p in &self.points {
            f(p);
        }
    }

    fn truncation_radius(&self, x: &[f64]) -> Option<f64> {
        let (lo, hi, scale) = self.window?;
        Some(window_gap(x, lo, hi, scale))
    }
}

fn window_gap(x: &[f64], lo: i64, hi: i64, scale: f64) -> f64 {
    x.iter()
        .map(|&v| ((hi + 1) as f64 * scale - v).min(v - (lo - 1) as f64 * scale))
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

/// `scale · (ℤ^d ∩ [-N, N]^d)` enumerated on demand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegerLattice {
    pub dim: usize,
    pub half_extent: i64,
    pub scale: f64,
}

impl IntegerLattice {
    pub fn new(dim: usize, half_extent: i64) -> Self {
        IntegerLattice { dim, half_extent, scale: 1.0 }
    }

    pub fn scaled(self, scale: f64) -> Self {
        IntegerLattice { scale, ..self }
    }

    pub fn len(&self) -> usize {
        ((2 * self.half_extent + 1) as usize).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.half_extent < 0
    }
}

impl Centers for IntegerLattice {
    fn dim(&self) -> usize {
        self.dim
    }

    fn separation_radius(&self) -> f64 {
        0.5 * self.scale
    }

    fn for_each_center(&self, f: &mut dyn FnMut(&[f64])) {
        let n = self.half_extent;
        let side = (2 * n + 1) as usize;
        let mut p = vec![0.0; self.dim];
        for idx in 0..self.len() {
            let mut rem = idx;
            for k in (0..self.dim).rev() {
                p[k] = ((rem % side) as i64 - n) as f64 * self.scale;
                rem /= side;
            }
            f(&p);
        }
    }

    fn truncation_radius(&self, x: &[f64]) -> Option<f64> {
        Some(window_gap(x, -self.half_extent, self.half_extent, self.scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice2(n: i64) -> Vec<Point> {
        UniformlyDiscreteSet::lattice(2, -n, n).unwrap().points().to_vec()
    }

    #[test]
    fn square_lattice_thresholds() {
        let pts = lattice2(3);
        assert!(verify_uniform_discreteness(&pts, 0.49));
        assert!(verify_uniform_discreteness(&pts, 0.5));
        assert!(!verify_uniform_discreteness(&pts, 0.6));
    }

    #[test]
    fn empty_and_duplicates() {
        assert!(verify_uniform_discreteness(&[], 1.0));
        assert!(!verify_uniform_discreteness(&[vec![0.0], vec![0.0]], 0.1));
        assert!(max_discreteness_radius(&[vec![1.0]]).is_err());
    }

    #[test]
    fn perturbed_lattice_brute_force() {
        // ‖u_n‖ ≤ 0.2 keeps every pair at distance ≥ 0.6 = 2·0.3.
        let pts: Vec<Point> = lattice2(4)
            .into_iter()
            .map(|p| {
                let t = 1.7 * p[0] + 0.9 * p[1] * p[1];
                vec![p[0] + 0.2 * t.cos() / 2f64.sqrt(), p[1] + 0.2 * t.sin() / 2f64.sqrt()]
            })
            .collect();
        let mut min = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                min = min.min(distance(&pts[i], &pts[j]));
            }
        }
        assert!(min >= 0.6 - 1e-12);
        assert!(verify_uniform_discreteness(&pts, 0.3 - 1e-12));
    }

    #[test]
    fn max_radius_examples() {
        let z: Vec<Point> = (-5..=5).map(|n| vec![n as f64]).collect();
        assert_eq!(max_discreteness_radius(&z).unwrap(), 0.5);
        assert_eq!(max_discreteness_radius(&[vec![0.0], vec![3.0]]).unwrap(), 1.5);
    }

    #[test]
    fn deformed_lattice_examples() {
        let id = deformed_lattice(|x| Ok(x.to_vec()), &[-3.0, -3.0], &[3.0, 3.0]).unwrap();
        assert_eq!(id.len(), 49);
        assert_eq!(id.radius(), 0.5);
        let half = deformed_lattice(|x| Ok(x.iter().map(|v| v / 2.0).collect()), &[-3.0], &[3.0]).unwrap();
        assert_eq!(half.radius(), 0.25);
        assert_eq!(half.labels().unwrap()[0], vec![-3]);
        let failing = deformed_lattice(|_| Err(Error::InvalidArgument("boom".into())), &[0.0], &[1.0]);
        assert!(failing.is_err());
    }

    #[test]
    fn lattice_enumeration_matches_set() {
        let lazy = IntegerLattice::new(2, 2);
        let mut seen = Vec::new();
        lazy.for_each_center(&mut |p| seen.push(p.to_vec()));
        assert_eq!(seen, UniformlyDiscreteSet::lattice(2, -2, 2).unwrap().points());
        assert_eq!(lazy.truncation_radius(&[0.25, -1.0]), Some(2.0));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let set = UniformlyDiscreteSet::lattice(2, -1, 2).unwrap();
        let path = dir.path().join("c.csv");
        set.write_csv(&path).unwrap();
        let back = UniformlyDiscreteSet::read_csv(&path).unwrap();
        assert_eq!(back.points(), set.points());
        assert_eq!(back.labels(), set.labels());
        assert_eq!(back.radius(), 0.5);
    }
}
