//! Partial-sum histograms, deviation-vs-partial-sum sweeps, sparsification
//! reduction statistics and an operation-count cost ledger.

use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::bnn::{and_dot, map_signed, BinaryTensor, TilePlan, WeightTile};
use crate::dataset::Dataset;
use crate::devices::{Conduction, DeviceModel, WireModel, WirePreset};
use crate::model::Model;
use crate::par::{self, Parallelism};
use crate::pipeline::{Engine, EngineConfig, VmmStats};
use crate::readout::dummy_compensate;
use crate::rng;
use crate::solver::{
    linear_ladder_current, solve_column_dense, solve_column_fast, ColumnProblem, SolverSettings,
    Topology,
};
use crate::sparsify::{adc_bits_required, sparsify_activation, SparseActivation, SparseXbarTile};
use crate::{Error, Result};

/// Counts of ideal AND partial sums, indexed `0..=n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialSumHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
    pub mean: f64,
    /// Per-layer breakdown (empty for synthetic workloads).
    pub layers: Vec<(String, Vec<u64>)>,
}

impl PartialSumHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        let mean = histogram_mean(&counts);
        Self {
            counts,
            total,
            mean,
            layers: Vec::new(),
        }
    }
}

pub fn histogram_mean(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let s: f64 = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| k as f64 * c as f64)
        .sum();
    s / total as f64
}

/// Histograms with BinSparX off and on, plus `1 - mean_on / mean_off`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionReport {
    pub baseline: PartialSumHistogram,
    pub binsparx: PartialSumHistogram,
    pub reduction: f64,
}

impl ReductionReport {
    pub fn new(baseline: PartialSumHistogram, binsparx: PartialSumHistogram) -> Self {
        let reduction = if baseline.mean > 0.0 {
            1.0 - binsparx.mean / baseline.mean
        } else {
            0.0
        };
        Self {
            baseline,
            binsparx,
            reduction,
        }
    }
}

/// Ideal partial-sum histogram of a model over a dataset.
pub fn profile_partial_sums(
    model: &Model,
    data: &Dataset,
    n: usize,
    m: usize,
    binsparx: bool,
    parallelism: Parallelism,
) -> Result<PartialSumHistogram> {
    let engine = Engine::new(EngineConfig::ideal(n, m, binsparx))?;
    let cm = engine.compile(model)?;
    let rep = engine.infer(&cm, data, parallelism)?;
    let mut all = VmmStats::new(n);
    for l in &rep.layers {
        all.merge(&l.stats);
    }
    let mut h = PartialSumHistogram::from_counts(all.histogram);
    h.layers = rep
        .layers
        .into_iter()
        .map(|l| (l.name, l.stats.histogram))
        .collect();
    Ok(h)
}

/// Both BinSparX settings over the same model and data.
pub fn profile_model(
    model: &Model,
    data: &Dataset,
    n: usize,
    m: usize,
    parallelism: Parallelism,
) -> Result<ReductionReport> {
    let off = profile_partial_sums(model, data, n, m, false, parallelism)?;
    let on = profile_partial_sums(model, data, n, m, true, parallelism)?;
    Ok(ReductionReport::new(off, on))
}

/// Uniform random ±1 workloads: `pairs` independent (n×m tile, activation)
/// draws, each contributing `m` column sums. Both settings see the same draws.
pub fn profile_uniform_random(
    n: usize,
    m: usize,
    pairs: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<ReductionReport> {
    if n == 0 || m == 0 {
        return Err(Error::Config("tile dimensions must be positive".into()));
    }
    let plan = TilePlan::covering(n, m, n, m)?;
    let per_pair = par::try_map_range(parallelism, pairs, |i| {
        let mut r = rng::stream(seed, 0xA1, i as u64);
        let w = BinaryTensor::random(vec![n, m], &mut r);
        let x: Vec<i8> = (0..n)
            .map(|_| if r.gen::<bool>() { 1 } else { -1 })
            .collect();
        let tile = &crate::bnn::tile_weights(&w, &plan)?[0];
        let mapped = map_signed(&x);
        let off = column_sums(
            &SparseXbarTile::unflipped(tile),
            &SparseActivation::unflipped(&mapped),
        );
        let on = column_sums(
            &SparseXbarTile::sparsified(tile),
            &sparsify_activation(&mapped)?,
        );
        Ok::<_, Error>((off, on))
    })?;
    let mut off = vec![0u64; n + 1];
    let mut on = vec![0u64; n + 1];
    for (a, b) in &per_pair {
        for &s in a {
            off[s as usize] += 1;
        }
        for &s in b {
            on[s as usize] += 1;
        }
    }
    Ok(ReductionReport::new(
        PartialSumHistogram::from_counts(off),
        PartialSumHistogram::from_counts(on),
    ))
}

fn column_sums(tile: &SparseXbarTile, act: &SparseActivation) -> Vec<u32> {
    (0..tile.logical_cols)
        .map(|c| and_dot(&act.mapped, tile.column(c)))
        .collect()
}

/// Normalized deviation statistics for one target ON-count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationPoint {
    pub x: usize,
    pub samples: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub nonconverged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationSweep {
    pub quantum: f64,
    pub points: Vec<DeviationPoint>,
}

impl DeviationSweep {
    pub fn mean_at(&self, x: usize) -> Option<f64> {
        self.points.iter().find(|p| p.x == x).map(|p| p.mean)
    }
}

/// Random stored/gate bits with exactly `x` coincident ones; every other row
/// is uniform over (stored, gate) in {(0,0), (0,1), (1,0)}.
pub fn sample_column<R: Rng + ?Sized>(n: usize, x: usize, r: &mut R) -> (Vec<u8>, Vec<u8>) {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(r);
    let mut stored = vec![0u8; n];
    let mut gates = vec![0u8; n];
    for (k, &row) in rows.iter().enumerate() {
        if k < x {
            stored[row] = 1;
            gates[row] = 1;
        } else {
            match r.gen_range(0..3) {
                0 => {}
                1 => gates[row] = 1,
                _ => stored[row] = 1,
            }
        }
    }
    (stored, gates)
}

/// For each `x`, solves `trials` random columns with exactly `x` ON cells and
/// records `|x * quantum - i| / quantum`, where `i` is dummy-compensated when
/// the engine has a dummy column. Non-convergent columns still contribute
/// their last iterate and are counted.
pub fn sweep_deviation(
    xs: &[usize],
    trials: usize,
    engine: &Engine,
    parallelism: Parallelism,
) -> Result<DeviationSweep> {
    let cfg = engine.config();
    let n = cfg.n;
    if trials == 0 {
        return Err(Error::Config("trials per x must be at least 1".into()));
    }
    if let Some(&x) = xs.iter().find(|&&x| x > n) {
        return Err(Error::Config(format!("x = {x} exceeds n = {n}")));
    }
    let quantum = engine.adc().quantum;
    let jobs = xs.len() * trials;
    let samples = par::try_map_range(parallelism, jobs, |j| {
        let (xi, t) = (j / trials, j % trials);
        let x = xs[xi];
        let mut r = rng::stream(cfg.seed, 0xD0 + x as u64, t as u64);
        let (stored, gates) = sample_column(n, x, &mut r);
        let v = cfg.device.v_nominal;
        let p = ColumnProblem::new(&stored, &gates, &cfg.device, &cfg.wire, v, cfg.topology)?;
        let res = solve_column_fast(&p, &cfg.solver)?;
        let mut ok = res.converged;
        let mut i = res.i_out;
        if cfg.dummy {
            let zeros = vec![0u8; n];
            let q = ColumnProblem::new(&zeros, &gates, &cfg.device, &cfg.wire, v, cfg.topology)?;
            let d = solve_column_fast(&q, &cfg.solver)?;
            ok &= d.converged;
            i = dummy_compensate(i, d.i_out);
        }
        Ok::<_, Error>(((x as f64 * quantum - i).abs() / quantum, ok))
    })?;
    let points = xs
        .iter()
        .enumerate()
        .map(|(xi, &x)| {
            let chunk = &samples[xi * trials..(xi + 1) * trials];
            let mut p = DeviationPoint {
                x,
                samples: trials,
                mean: 0.0,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
                nonconverged: 0,
            };
            for &(d, ok) in chunk {
                p.mean += d;
                p.min = p.min.min(d);
                p.max = p.max.max(d);
                p.nonconverged += usize::from(!ok);
            }
            p.mean /= trials as f64;
            p
        })
        .collect();
    Ok(DeviationSweep { quantum, points })
}

/// Fast-vs-dense agreement for one (wire preset, ON current) case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverCase {
    pub preset: WirePreset,
    pub i_on: f64,
    pub columns: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub nonconverged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverValidation {
    pub rows: usize,
    pub cases: Vec<SolverCase>,
    /// Worst relative error of either solver against the closed-form ladder
    /// for a column of linear, fully-ON cells.
    pub linear_max_rel_error: f64,
    pub budget: f64,
}

impl SolverValidation {
    pub fn max_rel_error(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() <= self.budget
            && self.linear_max_rel_error <= 1e-9
            && self.cases.iter().all(|c| c.nonconverged == 0)
    }
}

/// Compares the fast solver with the dense nodal oracle on random columns
/// (uniform stored and gate bits) for every preset and ON current, using the
/// SRAM device model and the given topology.
#[allow(clippy::too_many_arguments)]
pub fn validate_solver(
    presets: &[WirePreset],
    i_ons: &[f64],
    rows: usize,
    columns: usize,
    settings: &SolverSettings,
    topology: Topology,
    seed: u64,
    parallelism: Parallelism,
) -> Result<SolverValidation> {
    let mut cases = Vec::new();
    for (pi, &preset) in presets.iter().enumerate() {
        for (ci, &i_on) in i_ons.iter().enumerate() {
            let dev = DeviceModel::sram8t(i_on);
            dev.validate()?;
            let wire = WireModel::preset(preset);
            let stream = 0xB0 + (pi * i_ons.len() + ci) as u64;
            let errs = par::try_map_range(parallelism, columns, |j| {
                let mut r = rng::stream(seed, stream, j as u64);
                let stored: Vec<u8> = (0..rows).map(|_| r.gen_range(0..2)).collect();
                let gates: Vec<u8> = (0..rows).map(|_| r.gen_range(0..2)).collect();
                let p = ColumnProblem::new(&stored, &gates, &dev, &wire, dev.v_nominal, topology)?;
                let fast = solve_column_fast(&p, settings)?;
                let dense = solve_column_dense(&p, settings)?;
                let rel =
                    (fast.i_out - dense.i_out).abs() / dense.i_out.abs().max(f64::MIN_POSITIVE);
                Ok::<_, Error>((rel, fast.converged && dense.converged))
            })?;
            cases.push(SolverCase {
                preset,
                i_on,
                columns,
                max_rel_error: errs.iter().map(|e| e.0).fold(0.0, f64::max),
                mean_rel_error: errs.iter().map(|e| e.0).sum::<f64>() / columns.max(1) as f64,
                nonconverged: errs.iter().filter(|e| !e.1).count(),
            });
        }
    }
    Ok(SolverValidation {
        rows,
        cases,
        linear_max_rel_error: linear_ladder_check()?,
        budget: 5e-3,
    })
}

/// Worst relative error of both solvers against the closed-form ladder.
pub fn linear_ladder_check() -> Result<f64> {
    let d = DeviceModel::sram8t(1e-6)
        .without_leakage()
        .with_conduction(Conduction::Linear);
    let g = d.i_on / d.v_nominal;
    let fast_settings = SolverSettings {
        tol: 1e-13,
        max_iter: 10_000,
        damping: 0.5,
    };
    // nodal KCL residuals bottom out near 1e-11 i_on from round-off
    let dense_settings = SolverSettings {
        tol: 1e-10,
        ..fast_settings
    };
    let mut worst = 0.0f64;
    for (n, r) in [
        (1usize, 40.0),
        (16, 25.0),
        (64, 40.0),
        (64, 8.0),
        (128, 25.0),
    ] {
        let mut w = WireModel::preset(WirePreset::Custom);
        w.r_bl_per_cell = r;
        w.r_sl_per_cell = r;
        w.r_driver = 1e3;
        let ones = vec![1u8; n];
        let p = ColumnProblem::new(&ones, &ones, &d, &w, d.v_nominal, Topology::SameEnd)?;
        let expect = linear_ladder_current(n, 2.0 * r, g, w.r_driver, d.v_nominal);
        let fast = solve_column_fast(&p, &fast_settings)?.require_converged()?;
        let dense = solve_column_dense(&p, &dense_settings)?.require_converged()?;
        worst = worst
            .max(((fast.i_out - expect) / expect).abs())
            .max(((dense.i_out - expect) / expect).abs());
    }
    Ok(worst)
}

/// Operation and storage counts for one VMM of a `rows × cols` matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub n: usize,
    pub m: usize,
    pub rows: usize,
    pub cols: usize,
    pub tiles: usize,
    pub adc_bits_baseline: u32,
    pub adc_bits_binsparx: u32,
    pub binsparx: bool,
    /// ADC conversions (one per logical column per row-tile).
    pub adc_conversions: usize,
    /// Eq. 1 correction additions (three per conversion).
    pub eq1_additions: usize,
    /// Cross-row-tile accumulation additions.
    pub adder_tree_additions: usize,
    /// Runtime `sum_i > n/2` comparisons (one per row-tile).
    pub comparators: usize,
    /// Activation bit inversions plus output sign flips.
    pub xor_flips: usize,
    /// `n - sum_i` subtractions (one per row-tile, worst case).
    pub subtractor_uses: usize,
    /// `column_flip` register storage: m bits per tile.
    pub column_flip_register_bits: usize,
    /// Offline weight-column comparisons performed once at programming time.
    pub offline_weight_comparisons: usize,
}

pub fn cost_report(cfg: &EngineConfig, rows: usize, cols: usize) -> Result<CostReport> {
    let plan = TilePlan::covering(cfg.n, cfg.m, rows, cols)?;
    let conversions = plan.row_tiles * cols;
    let bx = cfg.binsparx;
    let on = |v: usize| if bx { v } else { 0 };
    Ok(CostReport {
        n: cfg.n,
        m: cfg.m,
        rows,
        cols,
        tiles: plan.tile_count(),
        adc_bits_baseline: adc_bits_required(cfg.n, false)?,
        adc_bits_binsparx: adc_bits_required(cfg.n, true)?,
        binsparx: bx,
        adc_conversions: conversions,
        eq1_additions: 3 * conversions,
        adder_tree_additions: (plan.row_tiles - 1) * cols,
        comparators: on(plan.row_tiles),
        xor_flips: on(rows + conversions),
        subtractor_uses: on(plan.row_tiles),
        column_flip_register_bits: on(plan.tile_count() * cfg.m),
        offline_weight_comparisons: on(conversions),
    })
}

/// Flip statistics for a set of tiles (used by the sparsify report).
pub fn flipped_fraction(tiles: &[WeightTile]) -> f64 {
    let (mut f, mut t) = (0usize, 0usize);
    for tile in tiles {
        let s = SparseXbarTile::sparsified(tile);
        f += s.flipped_columns();
        t += tile.logical_cols;
    }
    if t == 0 {
        0.0
    } else {
        f as f64 / t as f64
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

/// CSV with the resolved config embedded as leading `#` comment lines.
pub fn write_csv_with_config(
    path: &Path,
    config_toml: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for line in config_toml.lines() {
        writeln!(out, "# {line}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    let cerr = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    w.write_record(header).map_err(cerr)?;
    for r in rows {
        w.write_record(&r).map_err(cerr)?;
    }
    w.flush().map_err(io)
}

pub fn write_histogram_csv(path: &Path, config_toml: &str, counts: &[u64]) -> Result<()> {
    write_csv_with_config(
        path,
        config_toml,
        &["bin", "count"],
        counts
            .iter()
            .enumerate()
            .map(|(b, c)| vec![b.to_string(), c.to_string()]),
    )
}

pub fn write_sweep_csv(path: &Path, config_toml: &str, sweep: &DeviationSweep) -> Result<()> {
    write_csv_with_config(
        path,
        config_toml,
        &["x", "mean", "min", "max", "samples"],
        sweep.points.iter().map(|p| {
            vec![
                p.x.to_string(),
                format!("{:.9}", p.mean),
                format!("{:.9}", p.min),
                format!("{:.9}", p.max),
                p.samples.to_string(),
            ]
        }),
    )
}

#[derive(Serialize)]
struct Artifact<'a, C: Serialize, T: Serialize> {
    config: &'a C,
    result: &'a T,
}

/// Pretty JSON `{"config": ..., "result": ...}`.
pub fn write_json<C: Serialize, T: Serialize>(path: &Path, config: &C, result: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &Artifact { config, result })?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom_pmf(n: usize) -> Vec<f64> {
        // exact binomial(n, 1/2) probabilities via Pascal's triangle
        let mut row = vec![1.0f64];
        for _ in 0..n {
            let mut next = vec![0.0; row.len() + 1];
            for (k, &v) in row.iter().enumerate() {
                next[k] += v / 2.0;
                next[k + 1] += v / 2.0;
            }
            row = next;
        }
        row
    }

    /// E[AND sum] = E[ones in stored column] * E[ones in gates] / n, since
    /// placements are independent and uniform.
    fn expected_uniform_means(n: usize) -> (f64, f64) {
        let p = binom_pmf(n);
        let e_w: f64 = p
            .iter()
            .enumerate()
            .map(|(k, &q)| q * if 2 * k >= n { (n - k) as f64 } else { k as f64 })
            .sum();
        let e_i: f64 = p
            .iter()
            .enumerate()
            .map(|(k, &q)| q * if 2 * k > n { (n - k) as f64 } else { k as f64 })
            .sum();
        (n as f64 / 4.0, e_w * e_i / n as f64)
    }

    #[test]
    fn exact_uniform_reduction() {
        let (off, on) = expected_uniform_means(64);
        assert_eq!(off, 16.0);
        assert!((on - 12.9788).abs() < 1e-3, "{on}");
        let red = 1.0 - on / off;
        assert!((red - 0.18883).abs() < 1e-4, "{red}");
    }

    #[test]
    fn uniform_profile_matches_enumeration() {
        let rep = profile_uniform_random(64, 64, 4000, 7, Parallelism::Parallel).unwrap();
        let (off, on) = expected_uniform_means(64);
        assert_eq!(rep.baseline.total, 4000 * 64);
        assert!((rep.baseline.mean - off).abs() / off < 0.02);
        assert!((rep.binsparx.mean - on).abs() / on < 0.02);
        let recomputed =
            1.0 - histogram_mean(&rep.binsparx.counts) / histogram_mean(&rep.baseline.counts);
        assert_eq!(rep.reduction, recomputed);
        assert!(rep.binsparx.counts[33..].iter().all(|&c| c == 0));
    }

    #[test]
    fn all_negative_weights_give_zero_sums() {
        let model = Model {
            name: "neg".into(),
            input_len: 64,
            layers: vec![crate::model::LayerSpec::Dense {
                name: "fc".into(),
                weights: BinaryTensor::filled(vec![64, 8], -1).unwrap(),
                full_precision: false,
            }],
        };
        let ds = crate::dataset::teacher_dataset(&model, 20, 1).unwrap();
        let h = profile_partial_sums(&model, &ds, 64, 8, false, Parallelism::Sequential).unwrap();
        assert_eq!(h.counts[0], 20 * 8);
        assert_eq!(h.total, 20 * 8);
        assert_eq!(h.layers.len(), 1);
    }

    #[test]
    fn histogram_conservation_multi_tile() {
        let m = crate::dataset::toy_model(
            crate::dataset::ToySpec {
                inputs: 100,
                hidden: 40,
                classes: 5,
            },
            2,
        );
        let ds = crate::dataset::teacher_dataset(&m, 30, 2).unwrap();
        let h = profile_partial_sums(&m, &ds, 32, 16, true, Parallelism::Parallel).unwrap();
        // fc1: 4 row-tiles x 40 cols, fc2: 2 row-tiles x 5 cols
        assert_eq!(h.total, 30 * (4 * 40 + 2 * 5));
        assert_eq!(h.counts.iter().sum::<u64>(), h.total);
    }

    #[test]
    fn sample_column_has_exact_overlap() {
        let mut r = rng::root(9);
        for x in [0, 1, 17, 64] {
            let (s, g) = sample_column(64, x, &mut r);
            assert_eq!(and_dot(&g, &s) as usize, x);
        }
    }

    #[test]
    fn sweep_zero_parasitics_no_leakage() {
        let mut cfg = EngineConfig::new(32, 32);
        cfg.device = DeviceModel::sram8t(1e-6).without_leakage();
        cfg.wire = WireModel::ideal();
        let e = Engine::new(cfg).unwrap();
        let s = sweep_deviation(&[0, 5, 16, 32], 20, &e, Parallelism::Parallel).unwrap();
        for p in &s.points {
            assert!(p.max < 1e-9, "{p:?}");
            assert_eq!(p.samples, 20);
        }
    }

    #[test]
    fn sweep_leakage_floor() {
        let mut cfg = EngineConfig::new(64, 64);
        cfg.wire = WireModel::ideal();
        let e = Engine::new(cfg.clone()).unwrap();
        let s = sweep_deviation(&[0], 10, &e, Parallelism::Sequential).unwrap();
        let floor = 64.0 * cfg.device.i_off / e.adc().quantum;
        assert!((s.points[0].mean - floor).abs() / floor < 1e-6);
    }

    #[test]
    fn sweep_is_deterministic_across_parallelism() {
        let mut cfg = EngineConfig::new(64, 64);
        cfg.wire = WireModel::preset(WirePreset::M4);
        let e = Engine::new(cfg).unwrap();
        let a = sweep_deviation(&[4, 8], 30, &e, Parallelism::Parallel).unwrap();
        let b = sweep_deviation(&[4, 8], 30, &e, Parallelism::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.mean_at(8).unwrap() > a.mean_at(4).unwrap());
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let e = Engine::new(EngineConfig::new(8, 8)).unwrap();
        assert!(sweep_deviation(&[9], 1, &e, Parallelism::Sequential).is_err());
        assert!(sweep_deviation(&[1], 0, &e, Parallelism::Sequential).is_err());
    }

    #[test]
    fn solver_validation_small() {
        let v = validate_solver(
            &[WirePreset::M3],
            &[1e-6],
            16,
            20,
            &SolverSettings::default(),
            Topology::OppositeEnds,
            3,
            Parallelism::Parallel,
        )
        .unwrap();
        assert_eq!(v.cases.len(), 1);
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn cost_examples() {
        let mut cfg = EngineConfig::new(64, 64);
        let c = cost_report(&cfg, 128, 100).unwrap();
        assert_eq!((c.adc_bits_baseline, c.adc_bits_binsparx), (6, 5));
        assert_eq!(c.tiles, 4);
        assert_eq!(c.column_flip_register_bits, 4 * 64);
        assert_eq!(c.adder_tree_additions, 100);
        cfg.binsparx = false;
        let c = cost_report(&cfg, 128, 100).unwrap();
        assert_eq!(
            (
                c.comparators,
                c.xor_flips,
                c.subtractor_uses,
                c.column_flip_register_bits
            ),
            (0, 0, 0, 0)
        );
    }

    #[test]
    fn csv_embeds_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/h.csv");
        write_histogram_csv(&p, "[run]\nseed = 3", &[1, 2]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "# [run]\n# seed = 3\nbin,count\n0,1\n1,2\n");
    }
}
