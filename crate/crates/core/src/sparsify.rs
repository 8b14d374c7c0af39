//! BinSparX: static weight-column and dynamic activation sparsification.
//!
//! A weight column with `sum(W) >= 0` is stored negated and a mapped
//! activation with `sum(I') > n/2` is applied complemented, so every stored
//! column and every applied activation holds at most `ceil(n/2)` ones. The
//! Eq. 1 result of the stored data is multiplied by
//! `(-1)^(activation_flip XOR column_flip)` to restore the original dot
//! product exactly.

use log::warn;
use serde::Serialize;

use crate::bnn::{count_ones, nandnet_correct, WeightTile};
use crate::{Error, Result};

/// Outcome of sparsifying one signed weight column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseColumn {
    pub stored: Vec<u8>,
    pub flip: bool,
    pub sum_wprime: u32,
}

/// Stores `-col` when `sum(col) >= 0`, else `col`, in the `{0,1}` domain.
pub fn sparsify_weight_column(col: &[i8]) -> Result<SparseColumn> {
    if let Some(pos) = col.iter().position(|&v| v != 1 && v != -1) {
        return Err(Error::Domain(format!(
            "weight element {} is {}, expected -1 or +1",
            pos, col[pos]
        )));
    }
    let sum: i64 = col.iter().map(|&v| v as i64).sum();
    let flip = sum >= 0;
    let stored: Vec<u8> = col
        .iter()
        .map(|&v| u8::from(if flip { v < 0 } else { v > 0 }))
        .collect();
    let sum_wprime = count_ones(&stored);
    Ok(SparseColumn {
        stored,
        flip,
        sum_wprime,
    })
}

/// Mapped-domain variant: flips when `2*sum(W') >= n`.
fn sparsify_mapped_column(bits: &[u8]) -> (bool, u32) {
    let ones = count_ones(bits);
    (2 * ones as usize >= bits.len(), ones)
}

/// An `n x m` tile as programmed into an Xbar: post-flip bits, the
/// `column_flip` register and post-flip `sum(W')` constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseXbarTile {
    pub row_tile: usize,
    pub col_tile: usize,
    /// Physical rows.
    pub n: usize,
    pub m: usize,
    /// Rows used in Eq. 1; rows beyond are padding.
    pub logical_rows: usize,
    pub logical_cols: usize,
    stored: Vec<u8>,
    pub column_flip: Vec<bool>,
    pub sum_wprime: Vec<u32>,
}

impl SparseXbarTile {
    /// Applies static weight sparsification to every logical column.
    pub fn sparsified(tile: &WeightTile) -> Self {
        Self::build(tile, true)
    }

    /// Programs the tile as-is (BinSparX disabled); all flips are 0.
    pub fn unflipped(tile: &WeightTile) -> Self {
        Self::build(tile, false)
    }

    fn build(tile: &WeightTile, sparsify: bool) -> Self {
        let n = tile.n;
        let lr = tile.logical_rows;
        let mut stored = vec![0u8; n * tile.m];
        let mut flips = vec![false; tile.m];
        let mut sums = vec![0u32; tile.m];
        for c in 0..tile.logical_cols {
            let src = &tile.column(c)[..lr];
            let dst = &mut stored[c * n..c * n + lr];
            let flip = sparsify && sparsify_mapped_column(src).0;
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = if flip { 1 - s } else { s };
            }
            flips[c] = flip;
            sums[c] = count_ones(dst);
        }
        Self {
            row_tile: tile.row_tile,
            col_tile: tile.col_tile,
            n,
            m: tile.m,
            logical_rows: lr,
            logical_cols: tile.logical_cols,
            stored,
            column_flip: flips,
            sum_wprime: sums,
        }
    }

    /// Physical column `c` (length `n`, padding rows are 0).
    pub fn column(&self, c: usize) -> &[u8] {
        &self.stored[c * self.n..(c + 1) * self.n]
    }

    pub fn flipped_columns(&self) -> usize {
        self.column_flip.iter().filter(|&&f| f).count()
    }
}

/// A mapped activation sub-vector after dynamic sparsification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseActivation {
    pub mapped: Vec<u8>,
    pub activation_flip: bool,
    /// The `sum(I')` forwarded to Eq. 1 post-processing: the original count,
    /// or `n - count` after a flip.
    pub sum_i_report: u32,
}

impl SparseActivation {
    /// Pass-through used when BinSparX is disabled.
    pub fn unflipped(i_mapped: &[u8]) -> Self {
        Self {
            mapped: i_mapped.to_vec(),
            activation_flip: false,
            sum_i_report: count_ones(i_mapped),
        }
    }
}

/// Complements every bit iff `sum(I') > n/2` (strict).
pub fn sparsify_activation(i_mapped: &[u8]) -> Result<SparseActivation> {
    if i_mapped.iter().any(|&v| v > 1) {
        return Err(Error::Domain("activation must be 0/1".into()));
    }
    let n = i_mapped.len() as u32;
    let ones = count_ones(i_mapped);
    if 2 * ones > n {
        Ok(SparseActivation {
            mapped: i_mapped.iter().map(|&v| 1 - v).collect(),
            activation_flip: true,
            sum_i_report: n - ones,
        })
    } else {
        Ok(SparseActivation {
            mapped: i_mapped.to_vec(),
            activation_flip: false,
            sum_i_report: ones,
        })
    }
}

/// Eq. 1 correction followed by the flip sign fix-up.
///
/// `raw_and_sum` is the digitized `sum(I'W')` of the stored column under the
/// applied activation.
pub fn postprocess_column(
    raw_and_sum: i64,
    act: &SparseActivation,
    tile: &SparseXbarTile,
    column: usize,
) -> Result<i64> {
    if column >= tile.m {
        return Err(Error::Shape(format!(
            "column {} out of range for a tile with {} columns",
            column, tile.m
        )));
    }
    let v = nandnet_correct(
        raw_and_sum,
        act.sum_i_report as i64,
        tile.sum_wprime[column] as i64,
        tile.logical_rows as i64,
    );
    Ok(apply_flip_sign(
        v,
        act.activation_flip,
        tile.column_flip[column],
    ))
}

/// `v * (-1)^(activation_flip XOR column_flip)`.
#[inline]
pub fn apply_flip_sign(v: i64, activation_flip: bool, column_flip: bool) -> i64 {
    if activation_flip ^ column_flip {
        -v
    } else {
        v
    }
}

/// ADC resolution needed for `n` simultaneously asserted rows: `log2(n)`
/// bits, or `log2(n) - 1` with BinSparX.
pub fn adc_bits_required(n: usize, binsparx_enabled: bool) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "array rows must be a power of two, got {n}"
        )));
    }
    let log = n.trailing_zeros();
    if !binsparx_enabled {
        return Ok(log);
    }
    if log == 0 {
        return Err(Error::Config(
            "a single-row array leaves no ADC bits with BinSparX".into(),
        ));
    }
    if log == 1 {
        warn!("n = 2 with BinSparX needs a 0-bit ADC; configure the ADC width explicitly");
    }
    Ok(log - 1)
}

/// Per-layer summary written by the `sparsify` subcommand.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SparsifyReport {
    pub layer: String,
    pub columns: usize,
    pub columns_flipped: usize,
    pub flipped_fraction: f64,
    pub mean_ones_before: f64,
    pub mean_ones_after: f64,
    pub adc_bits_before: u32,
    pub adc_bits_after: u32,
}

/// Summarises static sparsification over already tiled weights.
pub fn sparsify_report(layer: &str, tiles: &[WeightTile], n: usize) -> Result<SparsifyReport> {
    let mut columns = 0usize;
    let mut flipped = 0usize;
    let mut before = 0u64;
    let mut after = 0u64;
    for t in tiles {
        let s = SparseXbarTile::sparsified(t);
        for c in 0..t.logical_cols {
            columns += 1;
            before += t.sum_wprime[c] as u64;
            after += s.sum_wprime[c] as u64;
            flipped += s.column_flip[c] as usize;
        }
    }
    let denom = columns.max(1) as f64;
    Ok(SparsifyReport {
        layer: layer.to_string(),
        columns,
        columns_flipped: flipped,
        flipped_fraction: flipped as f64 / denom,
        mean_ones_before: before as f64 / denom,
        mean_ones_after: after as f64 / denom,
        adc_bits_before: adc_bits_required(n, false)?,
        adc_bits_after: adc_bits_required(n, true)?,
    })
}
