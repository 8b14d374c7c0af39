//! End-to-end VMM engine and desk-scale BNN inference.
//!
//! For every row-tile the activation sub-vector is (optionally) sparsified,
//! each column of each programmed tile is read out (ideal ON-cell count, or a
//! solved non-ideal current with optional dummy compensation), digitized,
//! corrected with Eq. 1 and the flip signs, and accumulated across row-tiles
//! in exact integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::bnn::{and_dot, map_signed, signed_dot, tile_weights, BinaryTensor, TilePlan};
use crate::dataset::Dataset;
use crate::devices::{DeviceModel, WireModel};
use crate::model::{ConvGeometry, LayerSpec, Model};
use crate::par::{self, Parallelism};
use crate::readout::{dummy_compensate, full_precision_bits, AdcModel};
use crate::solver::{solve_column_fast, ColumnProblem, SolverSettings, Topology};
use crate::sparsify::{
    adc_bits_required, postprocess_column, sparsify_activation, sparsify_report, SparseActivation,
    SparseXbarTile, SparsifyReport,
};
use crate::{Error, Result};

/// ADC width selection: `"auto"`, `"full"` or a fixed bit count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AdcBits {
    /// `log2(n)`, one bit less with BinSparX.
    #[default]
    Auto,
    /// Wide enough for every sum `0..=n`.
    Full,
    Fixed(u32),
}

impl Serialize for AdcBits {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AdcBits::Auto => s.serialize_str("auto"),
            AdcBits::Full => s.serialize_str("full"),
            AdcBits::Fixed(b) => s.serialize_u32(*b),
        }
    }
}

impl<'de> Deserialize<'de> for AdcBits {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Bits(u32),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Bits(b) => Ok(AdcBits::Fixed(b)),
            Raw::Name(n) if n == "auto" => Ok(AdcBits::Auto),
            Raw::Name(n) if n == "full" => Ok(AdcBits::Full),
            Raw::Name(n) => Err(serde::de::Error::custom(format!(
                "ADC bits must be \"auto\", \"full\" or an integer, got \"{n}\""
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdcSetting {
    pub bits: AdcBits,
    /// Defaults to `i_on`, or `i_on - i_hrs` with the dummy column.
    pub quantum: Option<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub n: usize,
    pub m: usize,
    pub topology: Topology,
    pub binsparx: bool,
    pub nonidealities: bool,
    pub device: DeviceModel,
    pub wire: WireModel,
    pub adc: AdcSetting,
    pub dummy: bool,
    pub solver: SolverSettings,
    pub best_effort: bool,
    pub seed: u64,
}

impl EngineConfig {
    /// 64x64, SRAM at 1 uA, M3 wiring, BinSparX on, auto ADC.
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            topology: Topology::OppositeEnds,
            binsparx: true,
            nonidealities: true,
            device: DeviceModel::sram8t(1e-6),
            wire: WireModel::preset(crate::devices::WirePreset::M3),
            adc: AdcSetting::default(),
            dummy: false,
            solver: SolverSettings::default(),
            best_effort: false,
            seed: 1,
        }
    }

    /// Ideal counting path with a full-precision ADC.
    pub fn ideal(n: usize, m: usize, binsparx: bool) -> Self {
        Self {
            binsparx,
            nonidealities: false,
            adc: AdcSetting {
                bits: AdcBits::Full,
                ..Default::default()
            },
            ..Self::new(n, m)
        }
    }
}

/// Per-run readout statistics; merged deterministically across workers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VmmStats {
    /// Histogram of ideal AND partial sums, index = sum (0..=n).
    pub histogram: Vec<u64>,
    pub columns: u64,
    /// Sum of |digitized - ideal| over all columns.
    pub abs_error: u64,
    /// Columns with a non-zero digitization error.
    pub error_columns: u64,
    pub clamp_events: u64,
    pub nonconverged: u64,
}

impl VmmStats {
    pub fn new(n: usize) -> Self {
        Self {
            histogram: vec![0; n + 1],
            ..Default::default()
        }
    }

    pub fn merge(&mut self, other: &VmmStats) {
        if self.histogram.len() < other.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        self.columns += other.columns;
        self.abs_error += other.abs_error;
        self.error_columns += other.error_columns;
        self.clamp_events += other.clamp_events;
        self.nonconverged += other.nonconverged;
    }

    pub fn mean_partial_sum(&self) -> f64 {
        let total: u64 = self.histogram.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let weighted: u64 = self
            .histogram
            .iter()
            .enumerate()
            .map(|(s, &c)| s as u64 * c)
            .sum();
        weighted as f64 / total as f64
    }

    pub fn mean_abs_error(&self) -> f64 {
        if self.columns == 0 {
            0.0
        } else {
            self.abs_error as f64 / self.columns as f64
        }
    }
}

/// A weight matrix programmed onto a grid of Xbar tiles.
#[derive(Clone, Debug)]
pub struct ProgrammedMatrix {
    pub plan: TilePlan,
    /// Row-tile major.
    pub tiles: Vec<SparseXbarTile>,
}

impl ProgrammedMatrix {
    pub fn tile(&self, rt: usize, ct: usize) -> &SparseXbarTile {
        &self.tiles[rt * self.plan.col_tiles + ct]
    }
}

/// The engine is immutable once built and can be shared across threads.
#[derive(Clone, Debug)]
pub struct Engine {
    config: EngineConfig,
    adc: AdcModel,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.device.validate()?;
        config.wire.validate()?;
        config.solver.validate()?;
        if config.n == 0 || config.m == 0 {
            return Err(Error::Config("tile dimensions must be positive".into()));
        }
        let bits = match config.adc.bits {
            AdcBits::Auto => adc_bits_required(config.n, config.binsparx)?,
            AdcBits::Full => full_precision_bits(config.n),
            AdcBits::Fixed(b) => b,
        };
        let d = &config.device;
        let quantum = config.adc.quantum.unwrap_or(if config.dummy {
            d.i_on - d.i_hrs
        } else {
            d.i_on
        });
        let adc = AdcModel::new(bits, quantum, config.adc.offset)?;
        Ok(Self { config, adc })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn adc(&self) -> &AdcModel {
        &self.adc
    }

    /// Tiles `w` (`[rows, cols]`) and applies static sparsification if enabled.
    pub fn program(&self, w: &BinaryTensor) -> Result<ProgrammedMatrix> {
        let (rows, cols) = w.matrix_dims()?;
        let plan = TilePlan::covering(self.config.n, self.config.m, rows, cols)?;
        self.program_with(w, plan)
    }

    pub fn program_with(&self, w: &BinaryTensor, plan: TilePlan) -> Result<ProgrammedMatrix> {
        if plan.n != self.config.n || plan.m != self.config.m {
            return Err(Error::Config(format!(
                "plan tiles are {}x{}, engine arrays are {}x{}",
                plan.n, plan.m, self.config.n, self.config.m
            )));
        }
        let tiles = tile_weights(w, &plan)?
            .iter()
            .map(|t| {
                if self.config.binsparx {
                    SparseXbarTile::sparsified(t)
                } else {
                    SparseXbarTile::unflipped(t)
                }
            })
            .collect();
        Ok(ProgrammedMatrix { plan, tiles })
    }

    fn solve(&self, stored: &[u8], gates: &[u8]) -> Result<(f64, bool)> {
        let c = &self.config;
        let p = ColumnProblem::new(
            stored,
            gates,
            &c.device,
            &c.wire,
            c.device.v_nominal,
            c.topology,
        )?;
        let r = solve_column_fast(&p, &c.solver)?;
        if !r.converged && !c.best_effort {
            return Err(Error::NonConvergence {
                iterations: r.iterations,
                residual: r.residual,
            });
        }
        Ok((r.i_out, r.converged))
    }

    /// Non-ideal VMM of one signed activation row against a programmed matrix.
    pub fn vmm(&self, pm: &ProgrammedMatrix, activation: &[i8]) -> Result<(Vec<i64>, VmmStats)> {
        let plan = &pm.plan;
        if activation.len() != plan.rows {
            return Err(Error::Shape(format!(
                "activation length {} != weight rows {}",
                activation.len(),
                plan.rows
            )));
        }
        let n = plan.n;
        let cfg = &self.config;
        let mapped = crate::bnn::to_mapped_values(activation)?;
        let mut out = vec![0i64; plan.cols];
        let mut stats = VmmStats::new(n);
        let zeros = vec![0u8; n];

        for rt in 0..plan.row_tiles {
            let lr = plan.logical_rows(rt);
            let sub = &mapped[rt * n..rt * n + lr];
            let act = if cfg.binsparx {
                sparsify_activation(sub)?
            } else {
                SparseActivation::unflipped(sub)
            };
            let mut gates = act.mapped.clone();
            gates.resize(n, 0);
            let cap = (lr as u32).div_ceil(2);

            let i_dummy = if cfg.nonidealities && cfg.dummy {
                let (i, ok) = self.solve(&zeros, &gates)?;
                stats.nonconverged += u64::from(!ok);
                Some(i)
            } else {
                None
            };

            for ct in 0..plan.col_tiles {
                let tile = pm.tile(rt, ct);
                for c in 0..tile.logical_cols {
                    let column = tile.column(c);
                    let ideal = and_dot(&gates, column);
                    if cfg.binsparx {
                        assert!(
                            ideal <= cap,
                            "BinSparX partial-sum cap violated: {ideal} > {cap}"
                        );
                    }
                    let current = if cfg.nonidealities {
                        let (i, ok) = self.solve(column, &gates)?;
                        stats.nonconverged += u64::from(!ok);
                        match i_dummy {
                            Some(d) => dummy_compensate(i, d),
                            None => i,
                        }
                    } else {
                        ideal as f64 * self.adc.quantum + self.adc.offset
                    };
                    let q = self.adc.quantize(current);
                    stats.histogram[ideal as usize] += 1;
                    stats.columns += 1;
                    stats.clamp_events += u64::from(q.clamped);
                    let err = (q.level as i64 - ideal as i64).unsigned_abs();
                    stats.abs_error += err;
                    stats.error_columns += u64::from(err != 0);
                    out[ct * plan.m + c] += postprocess_column(q.level as i64, &act, tile, c)?;
                }
            }
        }
        Ok((out, stats))
    }

    /// Lowers every weight-bearing layer onto Xbar tiles.
    pub fn compile(&self, model: &Model) -> Result<CompiledModel> {
        model.validate()?;
        let mut layers = Vec::with_capacity(model.layers.len());
        for l in &model.layers {
            let compiled = match l {
                LayerSpec::Dense {
                    weights,
                    full_precision,
                    ..
                } => CompiledLayer::Matrix {
                    programmed: if *full_precision {
                        None
                    } else {
                        Some(Box::new(self.program(weights)?))
                    },
                    weights: weights.clone(),
                    conv: None,
                },
                LayerSpec::Conv {
                    weights,
                    full_precision,
                    ..
                } => {
                    let g = ConvGeometry::of(l)?;
                    let wm = g.weight_matrix(weights)?;
                    CompiledLayer::Matrix {
                        programmed: if *full_precision {
                            None
                        } else {
                            Some(Box::new(self.program(&wm)?))
                        },
                        weights: wm,
                        conv: Some(g),
                    }
                }
                LayerSpec::Sign { .. } | LayerSpec::Threshold { .. } => CompiledLayer::Elementwise,
            };
            layers.push(compiled);
        }
        Ok(CompiledModel {
            model: model.clone(),
            layers,
        })
    }

    /// One forward pass; returns the final integer outputs and per-layer stats
    /// (one entry per model layer; element-wise layers stay empty).
    pub fn forward(&self, cm: &CompiledModel, input: &[i8]) -> Result<(Vec<i64>, Vec<VmmStats>)> {
        let mut stats = vec![VmmStats::new(self.config.n); cm.layers.len()];
        let mut act = Act::Binary(input.to_vec());
        for (li, (spec, layer)) in cm.model.layers.iter().zip(&cm.layers).enumerate() {
            act = match (layer, spec) {
                (
                    CompiledLayer::Matrix {
                        programmed,
                        weights,
                        conv,
                    },
                    _,
                ) => {
                    let x = act.binary(spec.name())?;
                    let rows: Vec<Vec<i8>> = match conv {
                        Some(g) => g.im2col(&x),
                        None => vec![x],
                    };
                    let cols = weights.matrix_dims()?.1;
                    let mut outs = Vec::with_capacity(rows.len() * cols);
                    for r in &rows {
                        let y = match programmed {
                            Some(pm) => {
                                let (y, s) = self.vmm(pm, r)?;
                                stats[li].merge(&s);
                                y
                            }
                            None => software_vmm(weights, r)?,
                        };
                        outs.push(y);
                    }
                    // conv outputs are channel-major: [oc, oh, ow]
                    let flat = if conv.is_some() {
                        (0..cols)
                            .flat_map(|oc| outs.iter().map(move |y| y[oc]))
                            .collect()
                    } else {
                        outs.pop().unwrap_or_default()
                    };
                    Act::Integer(flat)
                }
                (CompiledLayer::Elementwise, LayerSpec::Sign { .. }) => act.sign(),
                (CompiledLayer::Elementwise, LayerSpec::Threshold { thresholds, .. }) => {
                    act.threshold(thresholds)?
                }
                _ => unreachable!("compiled layer kinds mirror the model"),
            };
        }
        Ok((act.integer(), stats))
    }

    /// Runs a dataset through the model; deterministic for any parallelism.
    pub fn infer(
        &self,
        cm: &CompiledModel,
        data: &Dataset,
        parallelism: Parallelism,
    ) -> Result<InferenceReport> {
        data.validate()?;
        if data.is_empty() {
            return Err(Error::Shape("dataset is empty".into()));
        }
        if data.dim() != cm.model.input_len {
            return Err(Error::Shape(format!(
                "dataset features have length {}, model expects {}",
                data.dim(),
                cm.model.input_len
            )));
        }
        let results = par::try_map_range(parallelism, data.len(), |i| {
            self.forward(cm, &data.features[i])
        })?;
        let mut layer_stats = vec![VmmStats::new(self.config.n); cm.layers.len()];
        let mut predictions = Vec::with_capacity(data.len());
        for (logits, stats) in &results {
            predictions.push(argmax(logits));
            for (acc, s) in layer_stats.iter_mut().zip(stats) {
                acc.merge(s);
            }
        }
        let correct = predictions
            .iter()
            .zip(&data.labels)
            .filter(|(p, l)| p == l)
            .count();
        let layers = cm
            .model
            .layers
            .iter()
            .zip(layer_stats)
            .filter(|(_, s)| s.columns > 0)
            .map(|(l, s)| LayerReport {
                name: l.name().to_string(),
                mean_partial_sum: s.mean_partial_sum(),
                mean_abs_error: s.mean_abs_error(),
                stats: s,
            })
            .collect();
        Ok(InferenceReport {
            predictions,
            labels: data.labels.clone(),
            accuracy: correct as f64 / data.len() as f64,
            layers,
        })
    }
}

#[derive(Clone, Debug)]
pub enum CompiledLayer {
    Matrix {
        /// `None` for full-precision layers computed in software.
        programmed: Option<Box<ProgrammedMatrix>>,
        weights: BinaryTensor,
        conv: Option<ConvGeometry>,
    },
    Elementwise,
}

#[derive(Clone, Debug)]
pub struct CompiledModel {
    pub model: Model,
    pub layers: Vec<CompiledLayer>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerReport {
    pub name: String,
    pub mean_partial_sum: f64,
    pub mean_abs_error: f64,
    pub stats: VmmStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InferenceReport {
    pub predictions: Vec<u32>,
    pub labels: Vec<u32>,
    pub accuracy: f64,
    pub layers: Vec<LayerReport>,
}

enum Act {
    Binary(Vec<i8>),
    Integer(Vec<i64>),
}

impl Act {
    fn binary(&self, layer: &str) -> Result<Vec<i8>> {
        match self {
            Act::Binary(v) => Ok(v.clone()),
            Act::Integer(_) => Err(Error::Shape(format!(
                "layer {layer} needs binary inputs; add a sign or threshold layer before it"
            ))),
        }
    }

    fn sign(self) -> Act {
        match self {
            Act::Integer(v) => {
                Act::Binary(v.iter().map(|&x| if x >= 0 { 1 } else { -1 }).collect())
            }
            b => b,
        }
    }

    fn threshold(self, t: &[crate::model::FoldedThreshold]) -> Result<Act> {
        let v = self.integer();
        let group = v.len() / t.len();
        Ok(Act::Binary(
            v.iter()
                .enumerate()
                .map(|(i, &x)| t[i / group].apply(x))
                .collect(),
        ))
    }

    fn integer(self) -> Vec<i64> {
        match self {
            Act::Integer(v) => v,
            Act::Binary(v) => v.into_iter().map(i64::from).collect(),
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[i64]) -> u32 {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best as u32
}

fn software_vmm(w: &BinaryTensor, x: &[i8]) -> Result<Vec<i64>> {
    let (rows, cols) = w.matrix_dims()?;
    if x.len() != rows {
        return Err(Error::Shape(format!("input {} != rows {rows}", x.len())));
    }
    let wv = w.values();
    Ok((0..cols)
        .map(|c| {
            let col: Vec<i8> = (0..rows).map(|r| wv[r * cols + c]).collect();
            signed_dot(x, &col)
        })
        .collect())
}

/// Pure software BNN forward pass (no tiling, no mapping, no ADC).
pub fn reference_forward(model: &Model, input: &[i8]) -> Result<Vec<i64>> {
    model.validate()?;
    let mut x: Vec<i64> = input.iter().map(|&v| v as i64).collect();
    for l in &model.layers {
        x = match l {
            LayerSpec::Dense { weights, .. } => {
                let (rows, cols) = weights.matrix_dims()?;
                let w = weights.values();
                (0..cols)
                    .map(|c| (0..rows).map(|r| x[r] * w[r * cols + c] as i64).sum())
                    .collect()
            }
            LayerSpec::Conv {
                weights,
                input_shape: [ic, h, wd],
                stride,
                padding,
                ..
            } => {
                let [oc, _, kh, kw] = weights.shape() else {
                    unreachable!("validated");
                };
                let (oh, ow) = (
                    (h + 2 * padding - kh) / stride + 1,
                    (wd + 2 * padding - kw) / stride + 1,
                );
                let w = weights.values();
                let mut out = vec![0i64; oc * oh * ow];
                for o in 0..*oc {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut s = 0;
                            for c in 0..*ic {
                                for ky in 0..*kh {
                                    for kx in 0..*kw {
                                        let y = (oy * stride + ky) as isize - *padding as isize;
                                        let xx = (ox * stride + kx) as isize - *padding as isize;
                                        let v = if y < 0
                                            || xx < 0
                                            || y as usize >= *h
                                            || xx as usize >= *wd
                                        {
                                            -1
                                        } else {
                                            x[(c * h + y as usize) * wd + xx as usize]
                                        };
                                        s += v * w[((o * ic + c) * kh + ky) * kw + kx] as i64;
                                    }
                                }
                            }
                            out[(o * oh + oy) * ow + ox] = s;
                        }
                    }
                }
                out
            }
            LayerSpec::Sign { .. } => x.iter().map(|&v| if v >= 0 { 1 } else { -1 }).collect(),
            LayerSpec::Threshold { thresholds, .. } => {
                let g = x.len() / thresholds.len();
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| thresholds[i / g].apply(v) as i64)
                    .collect()
            }
        };
    }
    Ok(x)
}

pub fn reference_predict(model: &Model, input: &[i8]) -> Result<u32> {
    Ok(argmax(&reference_forward(model, input)?))
}

/// Plain signed VMM `x * W` for a `[rows, cols]` matrix.
pub fn signed_vmm(w: &BinaryTensor, x: &[i8]) -> Result<Vec<i64>> {
    software_vmm(w, x)
}

/// Convenience: ideal VMM of many rows, in parallel.
pub fn vmm_batch(
    engine: &Engine,
    pm: &ProgrammedMatrix,
    rows: &[Vec<i8>],
    parallelism: Parallelism,
) -> Result<Vec<(Vec<i64>, VmmStats)>> {
    par::try_map_range(parallelism, rows.len(), |i| engine.vmm(pm, &rows[i]))
}

/// Mapped form of a signed vector (re-exported for callers building columns).
pub fn mapped(v: &[i8]) -> Vec<u8> {
    map_signed(v)
}

/// One programmed tile in a sparsified mapping file. Bit vectors are written
/// as `0`/`1` strings; `columns[c]` holds the stored bits of column `c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TileMapping {
    pub row_tile: usize,
    pub col_tile: usize,
    pub logical_rows: usize,
    pub logical_cols: usize,
    pub column_flip: String,
    pub sum_wprime: Vec<u32>,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerMapping {
    pub report: SparsifyReport,
    pub rows: usize,
    pub cols: usize,
    pub row_tiles: usize,
    pub col_tiles: usize,
    pub tiles: Vec<TileMapping>,
    pub probes: usize,
    pub probe_mismatches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseMapping {
    pub model: String,
    pub n: usize,
    pub m: usize,
    pub layers: Vec<LayerMapping>,
}

impl SparseMapping {
    pub fn verified(&self) -> bool {
        self.layers.iter().all(|l| l.probe_mismatches == 0)
    }
}

fn bit_string(bits: impl IntoIterator<Item = bool>) -> String {
    bits.into_iter()
        .map(|b| if b { '1' } else { '0' })
        .collect()
}

/// Statically sparsifies every Xbar-mapped layer and checks each one on
/// `probes` random inputs against the plain signed VMM (ideal readout).
pub fn sparsify_model(
    model: &Model,
    n: usize,
    m: usize,
    probes: usize,
    seed: u64,
) -> Result<SparseMapping> {
    model.validate()?;
    let engine = Engine::new(EngineConfig::ideal(n, m, true))?;
    let mut layers = Vec::new();
    for (li, l) in model.layers.iter().enumerate() {
        let w = match l {
            LayerSpec::Dense {
                weights,
                full_precision: false,
                ..
            } => weights.clone(),
            LayerSpec::Conv {
                weights,
                full_precision: false,
                ..
            } => ConvGeometry::of(l)?.weight_matrix(weights)?,
            _ => continue,
        };
        let (rows, cols) = w.matrix_dims()?;
        let pm = engine.program(&w)?;
        let mut r = crate::rng::stream(seed, 0x5A, li as u64);
        let mut mismatches = 0;
        for _ in 0..probes {
            let x = BinaryTensor::random(vec![rows], &mut r);
            if engine.vmm(&pm, x.values())?.0 != signed_vmm(&w, x.values())? {
                mismatches += 1;
            }
        }
        let weight_tiles = tile_weights(&w, &pm.plan)?;
        layers.push(LayerMapping {
            report: sparsify_report(l.name(), &weight_tiles, n)?,
            rows,
            cols,
            row_tiles: pm.plan.row_tiles,
            col_tiles: pm.plan.col_tiles,
            tiles: pm
                .tiles
                .iter()
                .map(|t| TileMapping {
                    row_tile: t.row_tile,
                    col_tile: t.col_tile,
                    logical_rows: t.logical_rows,
                    logical_cols: t.logical_cols,
                    column_flip: bit_string(t.column_flip[..t.logical_cols].iter().copied()),
                    sum_wprime: t.sum_wprime[..t.logical_cols].to_vec(),
                    columns: (0..t.logical_cols)
                        .map(|c| bit_string(t.column(c)[..t.logical_rows].iter().map(|&b| b == 1)))
                        .collect(),
                })
                .collect(),
            probes,
            probe_mismatches: mismatches,
        });
    }
    Ok(SparseMapping {
        model: model.name.clone(),
        n,
        m,
        layers,
    })
}
