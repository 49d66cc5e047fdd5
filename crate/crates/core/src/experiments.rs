//! Batch experiments behind the CLI. Each run writes CSV tables, a JSON
//! summary per stage and `verdict.json` into the output directory.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, FamilyKind};
use crate::discrete_sets::{deformed_lattice, IntegerLattice, UniformlyDiscreteSet};
use crate::grid::{multiplication_operator, Grid, GridFunction};
use crate::localization::{
    build_extremely_localized_family, build_power_law_family, certify_exponential, certify_s_localized,
    WannierFamily, ORTHONORMAL_TOLERANCE,
};
use crate::models::{
    apply_y, build_deformed_hamiltonian, build_gubanov, build_kronig_penney, compute_spectrum, deform_gwb,
    extract_gwb, find_spectral_islands, span_residual, spectral_projection, Direction, ExtractionOptions,
    GubanovMap, Hamiltonian, SpectralIsland,
};
use crate::report::{num, write_csv, write_json};
use crate::roe_ops::{
    build_intertwiner, decay_rows, fit_decay_rows, measure_propagation, probe_local_compactness, probe_propagation,
    truncation_bound, ConvolutionOperator, ProductOperator, RankOneSumOperator, NORM_FLOOR,
};
use crate::series_bounds::{report_from_sum, tail_sums};
use crate::{Error, Result};

/// One checked stage of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub experiment: String,
    pub pass: bool,
    pub stages: Vec<Stage>,
}

impl Verdict {
    fn new(kind: ExperimentKind, stages: Vec<Stage>) -> Self {
        let pass = !stages.is_empty() && stages.iter().all(|s| s.pass);
        Verdict { experiment: kind.name().into(), pass, stages }
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }
}

fn stage(name: impl Into<String>, pass: bool, detail: Value) -> Stage {
    Stage { name: name.into(), pass, detail }
}

/// Runs the experiment named in the config and writes its reports to `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    let verdict = match config.kind {
        ExperimentKind::LemmaSweep => run_lemma_sweep(config, out)?,
        ExperimentKind::Decay => run_decay(config, out)?,
        ExperimentKind::ModelPipeline => run_model_pipeline(config, out)?,
        ExperimentKind::Probes => run_probes(config, out)?,
    };
    write_json(&out.join("config.json"), config)?;
    write_json(&out.join("verdict.json"), &verdict)?;
    Ok(verdict)
}

fn sample_points(rng: &mut ChaCha8Rng, dim: usize, count: usize, range: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..dim).map(|_| rng.gen_range(-range..=range)).collect()).collect()
}

/// Tail sums over `ℤ^d ∩ [-N, N]^d` against the lemma bound.
///
/// Rows whose `s` violates `s > d/2` are flagged and left out of the pass
/// rate.
pub fn run_lemma_sweep(config: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let d = config.grid.dim;
    if d == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    let sw = &config.sweep;
    let lattice = IntegerLattice::new(d, sw.lattice_extent);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let xs = sample_points(&mut rng, d, sw.samples, sw.x_range);
    let sums: Vec<Vec<Vec<f64>>> = xs.par_iter().map(|x| tail_sums(&lattice, x, &sw.cutoffs, &sw.s)).collect();

    let mut header = vec!["d".to_string(), "s".into(), "R".into(), "eps".into()];
    header.extend((1..=d).map(|k| format!("x{k}")));
    header.extend(["S".into(), "B".into(), "slack".into(), "omitted".into(), "status".into()]);
    let mut rows = Vec::new();
    let (mut evaluated, mut passed, mut violated) = (0usize, 0usize, 0usize);
    let mut worst_slack = f64::INFINITY;
    let mut worst_ratio: f64 = 0.0;
    for (si, &s) in sw.s.iter().enumerate() {
        for (ri, &r) in sw.cutoffs.iter().enumerate() {
            for (x, per_x) in xs.iter().zip(&sums) {
                let sum = per_x[si][ri];
                let mut row = vec![d.to_string(), num(s), num(r)];
                match report_from_sum(&lattice, x, r, s, None, sum) {
                    Ok(rep) => {
                        evaluated += 1;
                        passed += rep.pass as usize;
                        worst_slack = worst_slack.min(rep.slack);
                        worst_ratio = worst_ratio.max(rep.sum / rep.bound);
                        row.push(num(rep.eps));
                        row.extend(x.iter().map(|v| num(*v)));
                        row.extend([num(sum), num(rep.bound), num(rep.slack)]);
                        row.push(rep.truncation_residual.map(num).unwrap_or_default());
                        row.push(if rep.pass { "pass" } else { "fail" }.into());
                    }
                    Err(Error::Hypothesis(_)) => {
                        violated += 1;
                        row.push(String::new());
                        row.extend(x.iter().map(|v| num(*v)));
                        row.extend([num(sum), String::new(), String::new(), String::new()]);
                        row.push("hypothesis violated".into());
                    }
                    Err(e) => return Err(e),
                }
                rows.push(row);
            }
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&out.join("lemma_sweep.csv"), &header_refs, &rows)?;
    let pass_rate = if evaluated == 0 { 0.0 } else { passed as f64 / evaluated as f64 };
    let summary = json!({
        "dim": d,
        "lattice_extent": sw.lattice_extent,
        "samples": sw.samples,
        "evaluated": evaluated,
        "passed": passed,
        "hypothesis_violated": violated,
        "pass_rate": pass_rate,
        "worst_slack": if evaluated == 0 { Value::Null } else { json!(worst_slack) },
        "worst_ratio": worst_ratio,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(Verdict::new(config.kind, vec![stage("lemma", evaluated > 0 && passed == evaluated, summary)]))
}

/// Intertwiner diagnostics for a family against ball indicators on the same
/// centers: MvN residuals, bounded norms `‖V − V^R‖` and decay fits.
fn decay_stages(
    family: &mut WannierFamily,
    config: &ExperimentConfig,
    out: &Path,
    prefix: &str,
) -> Result<Vec<Stage>> {
    let grid = family.grid().clone();
    let d = grid.dim();
    let phi = build_extremely_localized_family(family.centers(), &grid)?;
    let v = build_intertwiner(family, &phi)?;
    let mvn = v.mvn_residuals()?;
    let tol = &config.tolerances;
    let mut stages = vec![stage(
        format!("{prefix}mvn"),
        mvn.source <= tol.mvn && mvn.target <= tol.mvn,
        json!({ "source": mvn.source, "target": mvn.target, "tolerance": tol.mvn }),
    )];

    let cutoffs = &config.sweep.cutoffs;
    let rows = decay_rows(&v, cutoffs)?;
    let radius = family.centers().radius();
    let mut csv_rows = Vec::new();
    let mut fits = Vec::new();
    for &s in &config.sweep.s {
        if s <= d as f64 / 2.0 {
            for row in &rows {
                csv_rows.push(vec![num(s), num(row.cutoff), num(row.norm), String::new(), "hypothesis violated".into()]);
            }
            fits.push(json!({ "s": s, "status": "hypothesis violated" }));
            continue;
        }
        let moment = certify_s_localized(family, s)?;
        let mut bounded = true;
        for row in &rows {
            let (bound, status) = match truncation_bound(d, s, moment, radius, row.cutoff) {
                Ok(b) => {
                    let ok = row.norm * row.norm <= b;
                    bounded &= ok;
                    (num(b), if ok { "pass" } else { "fail" })
                }
                Err(Error::Hypothesis(_)) => (String::new(), "hypothesis violated"),
                Err(e) => return Err(e),
            };
            csv_rows.push(vec![num(s), num(row.cutoff), num(row.norm), bound, status.into()]);
        }
        let fit = match fit_decay_rows(rows.clone(), d, s) {
            Ok(f) => {
                let pass = f.slope <= f.target + tol.slope;
                json!({ "s": s, "moment": moment, "slope": f.slope, "target": f.target,
                        "status": if pass { "pass" } else { "fail" }, "bounded": bounded })
            }
            Err(Error::Underflow { remaining }) => {
                let exact = rows.iter().filter(|r| r.cutoff >= radius).all(|r| r.norm < NORM_FLOOR);
                json!({ "s": s, "moment": moment, "remaining": remaining,
                        "status": if exact { "exact" } else { "underflow" }, "bounded": bounded })
            }
            Err(e) => return Err(e),
        };
        fits.push(fit);
    }
    write_csv(&out.join(format!("{prefix}decay.csv")), &["s", "R", "norm", "bound", "status"], &csv_rows)?;
    for f in &fits {
        let s = f["s"].as_f64().unwrap_or(f64::NAN);
        let status = f["status"].as_str().unwrap_or("");
        let ok = matches!(status, "pass" | "exact" | "hypothesis violated") && f["bounded"].as_bool().unwrap_or(true);
        stages.push(stage(format!("{prefix}decay s={s}"), ok, f.clone()));
    }
    Ok(stages)
}

fn lattice_centers(config: &ExperimentConfig) -> Result<UniformlyDiscreteSet> {
    let [lo, hi] = config.family.lattice;
    UniformlyDiscreteSet::lattice(config.grid.dim, lo, hi)
}

/// Decay of `‖V − V^R‖` for a synthetic or model family.
pub fn run_decay(config: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let grid = config.grid.build()?;
    let mut stages = Vec::new();
    let mut family = match config.family.kind {
        FamilyKind::PowerLaw => build_power_law_family(&lattice_centers(config)?, &grid, config.family.exponent)?,
        FamilyKind::ExtremelyLocalized => build_extremely_localized_family(&lattice_centers(config)?, &grid)?,
        FamilyKind::Model => {
            let (family, model_stages) = model_family(config, &grid, out)?;
            stages.extend(model_stages);
            family
        }
    };
    stages.push(stage(
        "orthonormality",
        family.is_orthonormal(),
        json!({ "residual": family.orthonormality_residual(), "centers": family.len() }),
    ));
    stages.extend(decay_stages(&mut family, config, out, "")?);
    family.manifest().write(&out.join("family.json"))?;
    Ok(Verdict::new(config.kind, stages))
}

struct ModelRun {
    hamiltonian: Hamiltonian,
    island: Option<SpectralIsland>,
    stage: Stage,
}

fn island_stage(config: &ExperimentConfig, grid: &Arc<Grid>, map: Option<&GubanovMap>, out: &Path, tag: &str) -> Result<ModelRun> {
    let m = &config.model;
    let hamiltonian = match map {
        Some(map) => build_deformed_hamiltonian(map, grid, m.v0, m.a)?,
        None => build_kronig_penney(grid, m.v0, m.a)?,
    };
    let spectrum = compute_spectrum(&hamiltonian, m.eigenpairs, config.seed)?;
    let islands = find_spectral_islands(&spectrum, m.gap_tol, m.energy_cap);
    spectrum.write_csv(&out.join(format!("spectrum{tag}.csv")), &islands)?;
    write_json(&out.join(format!("islands{tag}.json")), &islands)?;
    let island = islands.first().cloned();
    let detail = json!({
        "islands": islands.len(),
        "lowest": island,
        "energy_cap": m.energy_cap,
        "gap_tol": m.gap_tol,
    });
    Ok(ModelRun { hamiltonian, stage: stage(format!("island{tag}"), island.is_some(), detail), island })
}

/// Extracts and certifies the Wannier family of the lowest island.
fn model_family(config: &ExperimentConfig, grid: &Arc<Grid>, out: &Path) -> Result<(WannierFamily, Vec<Stage>)> {
    let run = island_stage(config, grid, None, out, "")?;
    let mut stages = vec![run.stage];
    let island = run
        .island
        .ok_or_else(|| Error::NotLocalized("no spectral island below the energy cap".into()))?;
    let spectrum = compute_spectrum(&run.hamiltonian, config.model.eigenpairs, config.seed)?;
    let p = spectral_projection(&run.hamiltonian, &spectrum, &island)?;
    let options = ExtractionOptions { cluster_gap: config.model.cluster_gap };
    let mut family = extract_gwb(&p, &options)?;
    let span = span_residual(&family, &p)?;
    let offset = family
        .centers()
        .points()
        .iter()
        .map(|c| c.iter().map(|v| (v - v.round()).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    stages.push(stage(
        "extraction",
        span <= ORTHONORMAL_TOLERANCE && family.is_orthonormal() && offset <= 0.1,
        json!({
            "members": family.len(),
            "span_residual": span,
            "orthonormality_residual": family.orthonormality_residual(),
            "max_center_offset": offset,
            "radius": family.centers().radius(),
        }),
    ));
    let alpha = config.model.alpha;
    let moment = certify_exponential(&mut family, alpha)?;
    stages.push(stage(
        "certify_exponential",
        moment.is_finite(),
        json!({ "alpha": alpha, "moment": moment }),
    ));
    Ok((family, stages))
}

/// Largest `Y` residuals over Gaussian test functions placed well inside
/// the box.
fn transport_residuals(map: &GubanovMap, grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Result<(f64, f64, f64)> {
    let reach = (grid.half_width() / 3.0).min(1.5);
    let gaussians: Vec<GridFunction> = (0..3)
        .map(|_| {
            let c: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-reach..reach)).collect();
            let k = rng.gen_range(-1.0..1.0);
            let mut f = GridFunction::from_fn(grid, |x| {
                let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
                Complex64::from_polar((-r2 / 0.5).exp(), k * x[0])
            });
            f.scale(1.0 / f.norm());
            f
        })
        .collect();
    let mapped = gaussians
        .iter()
        .map(|f| apply_y(map, f, Direction::Forward, None))
        .collect::<Result<Vec<_>>>()?;
    let mut round_trip: f64 = 0.0;
    let mut unitarity: f64 = 0.0;
    let mut inner: f64 = 0.0;
    for (f, yf) in gaussians.iter().zip(&mapped) {
        let back = apply_y(map, yf, Direction::Inverse, None)?;
        round_trip = round_trip.max(back.sub(f)?.norm());
        unitarity = unitarity.max((yf.norm() - f.norm()).abs());
    }
    for i in 0..gaussians.len() {
        for j in i + 1..gaussians.len() {
            let a = mapped[i].inner_product(&mapped[j])? - gaussians[i].inner_product(&gaussians[j])?;
            inner = inner.max(a.norm());
        }
    }
    Ok((round_trip, unitarity, inner))
}

/// Kronig-Penney island, Wannier extraction, certification, and for every
/// `ξ` the deformed lattice, island persistence, transport by `Y` and the
/// decay experiment on the transported family.
pub fn run_model_pipeline(config: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let grid = config.grid.build()?;
    let maps = config
        .sweep
        .xi
        .iter()
        .map(|&xi| build_gubanov(config.model.deformation(xi)?, grid.dim()))
        .collect::<Result<Vec<_>>>()?;
    let (family, mut stages) = model_family(config, &grid, out)?;
    family.manifest().write(&out.join("family.json"))?;
    let base_island = stages[0].detail["lowest"].clone();
    let base_size = base_island["end"].as_u64().unwrap_or(0) - base_island["start"].as_u64().unwrap_or(0);
    let alpha = config.model.alpha;
    let h = grid.spacing();
    let l = grid.half_width();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    for (&xi, map) in config.sweep.xi.iter().zip(&maps) {
        let tag = format!("_xi{xi}");
        let lo = vec![-l; grid.dim()];
        let hi = vec![l; grid.dim()];
        let lattice = deformed_lattice(|n| map.inverse(n), &lo, &hi)?;
        let floor = (1.0 - 2.0 * xi) / 2.0 - 2.0 * h;
        stages.push(stage(
            format!("deformed_lattice{tag}"),
            lattice.radius() >= floor,
            json!({ "xi": xi, "radius": lattice.radius(), "floor": floor, "points": lattice.len() }),
        ));

        let run = island_stage(config, &grid, Some(map), out, &tag)?;
        let persists = run.island.as_ref().is_some_and(|i| i.len() as u64 == base_size);
        stages.push(Stage { pass: persists, ..run.stage });

        let (round_trip, unitarity, inner) = transport_residuals(map, &grid, &mut rng)?;
        let t = config.tolerances.transport;
        stages.push(stage(
            format!("transport{tag}"),
            round_trip <= t && unitarity <= t && inner <= t,
            json!({ "round_trip": round_trip, "unitarity": unitarity, "inner_product": inner, "tolerance": t }),
        ));

        let input = family.exponential_record(alpha).map(|r| r.constant).unwrap_or(f64::NAN);
        let beta = alpha * (1.0 - 2.0 * map.xi());
        let deformed = match deform_gwb(map, &family, alpha) {
            Ok(f) => f,
            Err(Error::Certification(msg)) => {
                stages.push(stage(
                    format!("deform{tag}"),
                    false,
                    json!({ "alpha": alpha, "beta": beta, "input_moment": input, "error": msg }),
                ));
                continue;
            }
            Err(e) => return Err(e),
        };
        let output = deformed.exponential_record(beta).map(|r| r.constant).unwrap_or(f64::NAN);
        let member_unitarity = deformed
            .members()
            .iter()
            .map(|m| (m.norm() - 1.0).abs())
            .fold(0.0, f64::max);
        let mut transported = if deformed.is_orthonormal() { deformed.clone() } else { deformed.orthonormalized()? };
        let relaxed = certify_exponential(&mut transported, beta)?;
        stages.push(stage(
            format!("deform{tag}"),
            output <= input * (1.0 + config.tolerances.certification),
            json!({
                "xi": xi,
                "alpha": alpha,
                "beta": beta,
                "input_moment": input,
                "moment": output,
                "ratio": output / input,
                "member_unitarity": member_unitarity,
                "orthonormality_residual": deformed.orthonormality_residual(),
                "moment_after_lowdin": relaxed,
            }),
        ));
        transported.manifest().write(&out.join(format!("family{tag}.json")))?;
        stages.extend(decay_stages(&mut transported, config, out, &format!("xi{xi}_"))?);
    }
    Ok(Verdict::new(config.kind, stages))
}

/// Propagation and local-compactness probes on multiplication, convolution,
/// spectral-projection, truncated-intertwiner and composed operators.
pub fn run_probes(config: &ExperimentConfig, out: &Path) -> Result<Verdict> {
    let grid = config.grid.build()?;
    let h = grid.spacing();
    let sw = &config.sweep;
    let seed = config.seed;
    let sources = sw.sources;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut stages = Vec::new();
    let mut record = |name: String, lo: f64, hi: f64, measured: f64, residual: f64, pass: bool, rows: &mut Vec<Vec<String>>| {
        rows.push(vec![name.clone(), num(lo), num(hi), num(measured), num(residual), pass.to_string()]);
        stages.push(stage(name, pass, json!({ "expected": [lo, hi], "measured": measured, "probe_residual": residual })));
    };

    let mult = multiplication_operator(GridFunction::from_real_fn(&grid, |x| x.iter().map(|v| v.cos()).product()));
    let measured = measure_propagation(&mult, sources, seed)?;
    let probe = probe_propagation(&mult, 2.0 * h, sw.trials, seed)?;
    record("multiplication".into(), 0.0, 2.0 * h, measured, probe.max_residual, measured <= 2.0 * h && probe.pass, &mut rows);

    let kernels = sw
        .kernel_radii
        .iter()
        .map(|&r| ConvolutionOperator::from_fn(&grid, r, |x| Complex64::new((-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let mut measured_kernels = Vec::new();
    for (k, &r) in kernels.iter().zip(&sw.kernel_radii) {
        let r0 = k.support_radius();
        let m = measure_propagation(k, sources, seed)?;
        let probe = probe_propagation(k, r0 + 2.0 * h, sw.trials, seed)?;
        let pass = m >= r0 - 1e-9 && m <= r0 + 2.0 * h && probe.pass;
        record(format!("convolution R0={r}"), r0, r0 + 2.0 * h, m, probe.max_residual, pass, &mut rows);
        measured_kernels.push(m);
    }
    if kernels.len() >= 2 {
        let product = ProductOperator::new(vec![&kernels[0], &kernels[1]])?;
        let expected = measured_kernels[0] + measured_kernels[1];
        let m = measure_propagation(&product, sources, seed)?;
        let probe = probe_propagation(&product, expected + 4.0 * h, sw.trials, seed)?;
        let pass = (m - expected).abs() <= 4.0 * h && probe.pass;
        record("composition".into(), expected - 4.0 * h, expected + 4.0 * h, m, probe.max_residual, pass, &mut rows);
    }

    let centers = lattice_centers(config)?;
    let phi = build_extremely_localized_family(&centers, &grid)?;
    let r = centers.radius();
    let projection = RankOneSumOperator::projection(phi.members_arc().clone())?;
    let m = measure_propagation(&projection, sources, seed)?;
    let probe = probe_propagation(&projection, 2.0 * r, sw.trials, seed)?;
    record("projection".into(), 0.0, 2.0 * r, m, probe.max_residual, m <= 2.0 * r && probe.pass, &mut rows);

    let psi = build_power_law_family(&centers, &grid, config.family.exponent)?;
    let v = build_intertwiner(&psi, &phi)?;
    let window = GridFunction::ball_indicator(&grid, &vec![0.0; grid.dim()], 1.0);
    let mut ranks = Vec::new();
    for &cut in &sw.cutoffs {
        let vr = v.truncate(cut)?;
        let op = vr.operator();
        let m = measure_propagation(op, sources, seed)?;
        let hi = cut + r + 4.0 * h;
        let probe = probe_propagation(op, hi, sw.trials, seed)?;
        record(format!("truncated R={cut}"), cut, hi, m, probe.max_residual, m >= cut - 1e-9 && m <= hi && probe.pass, &mut rows);

        let composed = ProductOperator::new(vec![op, &kernels[0]])?;
        let expected = hi + measured_kernels[0];
        let mc = measure_propagation(&composed, sources, seed)?;
        let probe = probe_propagation(&composed, expected, sw.trials, seed)?;
        record(format!("truncated R={cut} with convolution"), 0.0, expected, mc, probe.max_residual, mc <= expected && probe.pass, &mut rows);
        ranks.push(json!({ "cutoff": cut, "rank": probe_local_compactness(op, &window)? }));
    }
    write_csv(&out.join("probes.csv"), &["operator", "expected_lo", "expected_hi", "measured", "probe_residual", "pass"], &rows)?;
    let bound = centers.len();
    let finite = ranks.iter().all(|x| x["rank"].as_u64().is_some_and(|k| k as usize <= bound));
    let detail = json!({ "window_radius": 1.0, "ranks": ranks, "rank_bound": bound });
    write_json(&out.join("local_compactness.json"), &detail)?;
    stages.push(stage("local_compactness", finite, detail));
    Ok(Verdict::new(config.kind, stages))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn lemma_sweep_flags_hypothesis_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new(ExperimentKind::LemmaSweep);
        c.sweep.s = vec![0.4, 1.0];
        c.sweep.samples = 5;
        c.sweep.lattice_extent = 50;
        let v = run(&c, dir.path()).unwrap();
        assert!(v.pass);
        assert_eq!(v.stages[0].detail["hypothesis_violated"], 20);
        let csv = std::fs::read_to_string(dir.path().join("lemma_sweep.csv")).unwrap();
        assert!(csv.contains("hypothesis violated"));
    }

    #[test]
    fn extremely_localized_decay_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new(ExperimentKind::Decay);
        c.family.kind = FamilyKind::ExtremelyLocalized;
        c.family.lattice = [-3, 3];
        c.grid.half_width = 5.0;
        c.sweep.cutoffs = vec![0.5, 1.0, 2.0, 3.0];
        let v = run(&c, dir.path()).unwrap();
        assert!(v.pass, "{v:?}");
        assert_eq!(v.stage("decay s=1.2").unwrap().detail["status"], "exact");
    }

    #[test]
    fn uncertified_s_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new(ExperimentKind::Decay);
        c.family.lattice = [-3, 3];
        c.sweep.s = vec![2.0 - 0.5 + 0.5];
        assert!(matches!(run(&c, dir.path()), Err(Error::NotLocalized(_))));
    }

    #[test]
    fn strong_deformation_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new(ExperimentKind::ModelPipeline);
        c.sweep.xi = vec![0.6];
        assert!(matches!(run(&c, dir.path()), Err(Error::DeformationTooStrong(_))));
    }
}
