//! Binary tensors, the NAND-Net dot-product identity and Xbar tiling.
//!
//! Signed tensors hold `{-1,+1}`; mapped tensors hold the hardware `{0,1}`
//! encoding related by `v = 2v' - 1`. With that mapping the XNOR dot product
//! becomes an AND dot product plus corrections:
//!
//! ```text
//! sum(I*W) = 4*sum(I'W') - 2*sum(I') - 2*sum(W') + n
//! ```
//!
//! All arithmetic here is integer and exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn shape_len(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Tensor with every element in `{-1, +1}`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTensor {
    shape: Vec<usize>,
    values: Vec<i8>,
}

impl BinaryTensor {
    pub fn new(shape: Vec<usize>, values: Vec<i8>) -> Result<Self> {
        if shape_len(&shape) != values.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {} elements, got {}",
                shape,
                shape_len(&shape),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::Domain(format!(
                "element {} is {}, expected -1 or +1",
                pos, values[pos]
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn vector(values: Vec<i8>) -> Result<Self> {
        Self::new(vec![values.len()], values)
    }

    /// Uniformly random signs.
    pub fn random<R: Rng + ?Sized>(shape: Vec<usize>, rng: &mut R) -> Self {
        let values = (0..shape_len(&shape))
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        Self { shape, values }
    }

    pub fn filled(shape: Vec<usize>, value: i8) -> Result<Self> {
        let len = shape_len(&shape);
        Self::new(shape, vec![value; len])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(rows, cols)` of a 2-D tensor.
    pub fn matrix_dims(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Shape(format!(
                "expected a matrix, got shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn to_mapped(&self) -> MappedTensor {
        to_mapped(self)
    }
}

/// Tensor with every element in `{0, 1}`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappedTensor {
    shape: Vec<usize>,
    values: Vec<u8>,
}

impl MappedTensor {
    pub fn new(shape: Vec<usize>, values: Vec<u8>) -> Result<Self> {
        if shape_len(&shape) != values.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {} elements, got {}",
                shape,
                shape_len(&shape),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|&v| v > 1) {
            return Err(Error::Domain(format!(
                "element {} is {}, expected 0 or 1",
                pos, values[pos]
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn vector(values: Vec<u8>) -> Result<Self> {
        Self::new(vec![values.len()], values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn count_ones(&self) -> u32 {
        count_ones(&self.values)
    }

    pub fn to_signed(&self) -> BinaryTensor {
        to_signed(self)
    }
}

/// `v' = (v + 1) / 2`.
pub fn to_mapped(t: &BinaryTensor) -> MappedTensor {
    MappedTensor {
        shape: t.shape.clone(),
        values: map_signed(&t.values),
    }
}

/// `v = 2v' - 1`.
pub fn to_signed(t: &MappedTensor) -> BinaryTensor {
    BinaryTensor {
        shape: t.shape.clone(),
        values: t.values.iter().map(|&v| 2 * v as i8 - 1).collect(),
    }
}

/// Slice-level mapping for callers that already validated their data.
pub(crate) fn map_signed(values: &[i8]) -> Vec<u8> {
    values.iter().map(|&v| u8::from(v > 0)).collect()
}

/// Checked slice-level mapping.
pub fn to_mapped_values(values: &[i8]) -> Result<Vec<u8>> {
    if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
        return Err(Error::Domain(format!(
            "element {} is {}, expected -1 or +1",
            pos, values[pos]
        )));
    }
    Ok(map_signed(values))
}

pub fn count_ones(bits: &[u8]) -> u32 {
    bits.iter().map(|&b| b as u32).sum()
}

/// Ideal AND dot product `sum(I'W')`.
pub fn and_dot(i_mapped: &[u8], w_mapped: &[u8]) -> u32 {
    i_mapped
        .iter()
        .zip(w_mapped)
        .map(|(&a, &b)| (a & b) as u32)
        .sum()
}

/// Plain signed dot product, the reference every hardware path must match.
pub fn signed_dot(i: &[i8], w: &[i8]) -> i64 {
    i.iter().zip(w).map(|(&a, &b)| a as i64 * b as i64).sum()
}

/// Eq. 1 correction: `4*and_sum - 2*sum_i - 2*sum_w + n`.
#[inline]
pub fn nandnet_correct(and_sum: i64, sum_i: i64, sum_w: i64, n: i64) -> i64 {
    4 * and_sum - 2 * sum_i - 2 * sum_w + n
}

/// Signed dot product of the un-mapped vectors, computed from their `{0,1}`
/// forms through the AND identity.
pub fn nandnet_dot(i_mapped: &[u8], w_mapped: &[u8]) -> Result<i64> {
    if i_mapped.len() != w_mapped.len() {
        return Err(Error::Shape(format!(
            "activation length {} != weight length {}",
            i_mapped.len(),
            w_mapped.len()
        )));
    }
    if i_mapped.iter().chain(w_mapped).any(|&v| v > 1) {
        return Err(Error::Domain("mapped vectors must be 0/1".into()));
    }
    Ok(nandnet_correct(
        and_dot(i_mapped, w_mapped) as i64,
        count_ones(i_mapped) as i64,
        count_ones(w_mapped) as i64,
        i_mapped.len() as i64,
    ))
}

/// How a weight matrix is laid onto a grid of `n x m` Xbar tiles.
///
/// Cells beyond the matrix edge are padding: they store 0 (HRS), their rows
/// receive activation 0, and the Eq. 1 constant `n` counts only logical rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilePlan {
    pub n: usize,
    pub m: usize,
    pub rows: usize,
    pub cols: usize,
    pub row_tiles: usize,
    pub col_tiles: usize,
}

impl TilePlan {
    /// Smallest grid of `n x m` tiles covering a `rows x cols` matrix.
    pub fn covering(n: usize, m: usize, rows: usize, cols: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Config("tile dimensions must be positive".into()));
        }
        Self::with_grid(
            n,
            m,
            rows,
            cols,
            rows.div_ceil(n).max(1),
            cols.div_ceil(m).max(1),
        )
    }

    pub fn with_grid(
        n: usize,
        m: usize,
        rows: usize,
        cols: usize,
        row_tiles: usize,
        col_tiles: usize,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Config("tile dimensions must be positive".into()));
        }
        if n * row_tiles < rows || m * col_tiles < cols {
            return Err(Error::Shape(format!(
                "{}x{} grid of {}x{} tiles does not cover a {}x{} matrix",
                row_tiles, col_tiles, n, m, rows, cols
            )));
        }
        Ok(Self {
            n,
            m,
            rows,
            cols,
            row_tiles,
            col_tiles,
        })
    }

    /// Un-padded rows in row-tile `rt`.
    pub fn logical_rows(&self, rt: usize) -> usize {
        self.rows.saturating_sub(rt * self.n).min(self.n)
    }

    /// Un-padded columns in column-tile `ct`.
    pub fn logical_cols(&self, ct: usize) -> usize {
        self.cols.saturating_sub(ct * self.m).min(self.m)
    }

    pub fn tile_count(&self) -> usize {
        self.row_tiles * self.col_tiles
    }
}

/// One mapped `n x m` weight sub-matrix, stored column-major so each Xbar
/// column is contiguous.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightTile {
    pub row_tile: usize,
    pub col_tile: usize,
    pub n: usize,
    pub m: usize,
    pub logical_rows: usize,
    pub logical_cols: usize,
    bits: Vec<u8>,
    /// Precomputed `sum(W')` per column.
    pub sum_wprime: Vec<u32>,
}

impl WeightTile {
    pub fn column(&self, c: usize) -> &[u8] {
        &self.bits[c * self.n..(c + 1) * self.n]
    }

    pub fn bit(&self, r: usize, c: usize) -> u8 {
        self.bits[c * self.n + r]
    }
}

/// Splits a `rows x cols` signed matrix into mapped tiles, row-tile major.
pub fn tile_weights(w: &BinaryTensor, plan: &TilePlan) -> Result<Vec<WeightTile>> {
    let (rows, cols) = w.matrix_dims()?;
    if rows != plan.rows || cols != plan.cols {
        return Err(Error::Shape(format!(
            "plan is for a {}x{} matrix, got {}x{}",
            plan.rows, plan.cols, rows, cols
        )));
    }
    let mut tiles = Vec::with_capacity(plan.tile_count());
    for rt in 0..plan.row_tiles {
        for ct in 0..plan.col_tiles {
            let lr = plan.logical_rows(rt);
            let lc = plan.logical_cols(ct);
            let mut bits = vec![0u8; plan.n * plan.m];
            let mut sums = vec![0u32; plan.m];
            for c in 0..lc {
                for r in 0..lr {
                    let v = w.values[(rt * plan.n + r) * cols + ct * plan.m + c];
                    let b = u8::from(v > 0);
                    bits[c * plan.n + r] = b;
                    sums[c] += b as u32;
                }
            }
            tiles.push(WeightTile {
                row_tile: rt,
                col_tile: ct,
                n: plan.n,
                m: plan.m,
                logical_rows: lr,
                logical_cols: lc,
                bits,
                sum_wprime: sums,
            });
        }
    }
    Ok(tiles)
}

/// Inverse of [`tile_weights`]; padding is dropped.
pub fn untile(tiles: &[WeightTile], plan: &TilePlan) -> Result<BinaryTensor> {
    if tiles.len() != plan.tile_count() {
        return Err(Error::Shape(format!(
            "expected {} tiles, got {}",
            plan.tile_count(),
            tiles.len()
        )));
    }
    let mut values = vec![0i8; plan.rows * plan.cols];
    for t in tiles {
        for c in 0..t.logical_cols {
            for r in 0..t.logical_rows {
                let idx = (t.row_tile * plan.n + r) * plan.cols + t.col_tile * plan.m + c;
                values[idx] = 2 * t.bit(r, c) as i8 - 1;
            }
        }
    }
    BinaryTensor::new(vec![plan.rows, plan.cols], values)
}

/// Multi-bit layout used only for partial-sum profiling: two's-complement
/// weights with one bit per memory cell, activations bit-streamed LSB first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiBitPlan {
    pub weight_bits: u32,
    pub activation_bits: u32,
}

impl MultiBitPlan {
    pub fn new(weight_bits: u32, activation_bits: u32) -> Result<Self> {
        if !(2..=16).contains(&weight_bits) {
            return Err(Error::Config(format!(
                "weight_bits must be in 2..=16, got {weight_bits}"
            )));
        }
        if !(1..=16).contains(&activation_bits) {
            return Err(Error::Config(format!(
                "activation_bits must be in 1..=16, got {activation_bits}"
            )));
        }
        Ok(Self {
            weight_bits,
            activation_bits,
        })
    }

    pub fn weight_range(&self) -> (i32, i32) {
        let half = 1i32 << (self.weight_bits - 1);
        (-half, half - 1)
    }

    pub fn activation_max(&self) -> u32 {
        (1u32 << self.activation_bits) - 1
    }
}

/// Ideal per-column AND-plane partial sums of a multi-bit layer.
///
/// `weights` is a `rows x cols` row-major matrix, `activations` a
/// `batch x rows` row-major matrix. Every weight bit occupies its own Xbar
/// column and every activation bit is one input cycle. The output is ordered
/// by input, row-tile, logical column, weight bit, then activation bit.
pub fn multibit_partial_sums(
    weights: &[i32],
    rows: usize,
    cols: usize,
    activations: &[u32],
    plan: &MultiBitPlan,
    tile_n: usize,
) -> Result<Vec<u32>> {
    if tile_n == 0 {
        return Err(Error::Config("tile_n must be positive".into()));
    }
    if weights.len() != rows * cols {
        return Err(Error::Shape(format!(
            "{} weights for a {}x{} matrix",
            weights.len(),
            rows,
            cols
        )));
    }
    if rows == 0 || !activations.len().is_multiple_of(rows) {
        return Err(Error::Shape(format!(
            "{} activations is not a multiple of {} rows",
            activations.len(),
            rows
        )));
    }
    let (lo, hi) = plan.weight_range();
    if let Some(w) = weights.iter().find(|&&w| w < lo || w > hi) {
        return Err(Error::Domain(format!(
            "weight {w} outside {}-bit two's complement range",
            plan.weight_bits
        )));
    }
    if let Some(a) = activations.iter().find(|&&a| a > plan.activation_max()) {
        return Err(Error::Domain(format!(
            "activation {a} outside {}-bit unsigned range",
            plan.activation_bits
        )));
    }

    let wmask = (1u32 << plan.weight_bits) - 1;
    let batch = activations.len() / rows;
    let row_tiles = rows.div_ceil(tile_n);
    let mut out = Vec::with_capacity(
        batch * row_tiles * cols * (plan.weight_bits * plan.activation_bits) as usize,
    );
    for b in 0..batch {
        let act = &activations[b * rows..(b + 1) * rows];
        for rt in 0..row_tiles {
            let r0 = rt * tile_n;
            let r1 = (r0 + tile_n).min(rows);
            for c in 0..cols {
                for wb in 0..plan.weight_bits {
                    for ab in 0..plan.activation_bits {
                        let mut s = 0u32;
                        for r in r0..r1 {
                            let wbits = (weights[r * cols + c] as u32) & wmask;
                            s += ((wbits >> wb) & 1) & ((act[r] >> ab) & 1);
                        }
                        out.push(s);
                    }
                }
            }
        }
    }
    Ok(out)
}
