//! BNN layer descriptions, batch-norm folding and the JSON model manifest.
//!
//! A manifest lists layers in order. Weight-bearing layers point at a raw
//! little-endian blob of `int8` values in `{-1,+1}` (row-major), relative to
//! the manifest file:
//!
//! ```json
//! {
//!   "name": "toy",
//!   "input_shape": [256],
//!   "layers": [
//!     {"name": "fc1", "kind": "dense", "shape": [256, 128], "weights": "fc1.bin"},
//!     {"name": "bn1", "kind": "threshold", "thresholds": [0, 3], "directions": ["ge", "le"]},
//!     {"name": "fc2", "kind": "dense", "shape": [128, 10], "weights": "fc2.bin",
//!      "full_precision": true}
//!   ]
//! }
//! ```
//!
//! Dense weights are `[inputs, outputs]`. Conv weights are
//! `[out_channels, in_channels, kh, kw]` with `input_shape: [c, h, w]`,
//! `stride` and `padding` (padded pixels read as -1).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bnn::BinaryTensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// +1 when `x >= threshold`.
    Ge,
    /// +1 when `x <= threshold`.
    Le,
}

/// Integer threshold equivalent to `sign(BN(x))` on integer inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldedThreshold {
    pub threshold: i64,
    pub direction: Direction,
}

impl FoldedThreshold {
    pub fn apply(&self, x: i64) -> i8 {
        let on = match self.direction {
            Direction::Ge => x >= self.threshold,
            Direction::Le => x <= self.threshold,
        };
        if on {
            1
        } else {
            -1
        }
    }
}

/// Binary sign with `sign(0) = +1`.
pub fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Folds `gamma * (x - mean) / sqrt(var + eps) + beta` followed by `sign`
/// into one integer threshold per channel.
///
/// With `t = mean - beta * sqrt(var + eps) / gamma`, `BN(x) >= 0` is
/// `x >= t` for `gamma > 0` and `x <= t` for `gamma < 0`; on integers these
/// become `x >= ceil(t)` and `x <= floor(t)`.
pub fn fold_batchnorm(
    gamma: &[f64],
    beta: &[f64],
    mean: &[f64],
    var: &[f64],
    eps: f64,
) -> Result<Vec<FoldedThreshold>> {
    let len = gamma.len();
    if beta.len() != len || mean.len() != len || var.len() != len {
        return Err(Error::Shape("batch-norm parameter lengths differ".into()));
    }
    (0..len)
        .map(|c| {
            let (g, b, mu, v) = (gamma[c], beta[c], mean[c], var[c]);
            if g == 0.0 {
                return Err(Error::Fold(format!("gamma is zero in channel {c}")));
            }
            if (v + eps).is_nan() || v + eps <= 0.0 {
                return Err(Error::Fold(format!("var + eps <= 0 in channel {c}")));
            }
            let t = mu - b * (v + eps).sqrt() / g;
            let clamp = |x: f64| x.clamp(i64::MIN as f64, i64::MAX as f64) as i64;
            Ok(if g > 0.0 {
                FoldedThreshold {
                    threshold: clamp(t.ceil()),
                    direction: Direction::Ge,
                }
            } else {
                FoldedThreshold {
                    threshold: clamp(t.floor()),
                    direction: Direction::Le,
                }
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Dense {
        name: String,
        /// `[inputs, outputs]`.
        weights: BinaryTensor,
        full_precision: bool,
    },
    Conv {
        name: String,
        /// `[out_channels, in_channels, kh, kw]`.
        weights: BinaryTensor,
        input_shape: [usize; 3],
        stride: usize,
        padding: usize,
        full_precision: bool,
    },
    Sign {
        name: String,
    },
    /// Folded batch-norm + sign. Thresholds broadcast over equal-size
    /// channel-major groups of the input.
    Threshold {
        name: String,
        thresholds: Vec<FoldedThreshold>,
    },
}

impl LayerSpec {
    pub fn name(&self) -> &str {
        match self {
            LayerSpec::Dense { name, .. }
            | LayerSpec::Conv { name, .. }
            | LayerSpec::Sign { name }
            | LayerSpec::Threshold { name, .. } => name,
        }
    }

    /// Output length for an input of length `input_len`.
    pub fn output_len(&self, input_len: usize) -> Result<usize> {
        match self {
            LayerSpec::Dense { name, weights, .. } => {
                let (rows, cols) = weights.matrix_dims()?;
                if rows != input_len {
                    return Err(Error::Shape(format!(
                        "layer {name}: expects {rows} inputs, got {input_len}"
                    )));
                }
                Ok(cols)
            }
            LayerSpec::Conv { name, .. } => {
                let g = ConvGeometry::of(self)?;
                if g.input_len() != input_len {
                    return Err(Error::Shape(format!(
                        "layer {name}: expects {} inputs, got {input_len}",
                        g.input_len()
                    )));
                }
                Ok(g.out_channels * g.out_h * g.out_w)
            }
            LayerSpec::Sign { .. } => Ok(input_len),
            LayerSpec::Threshold { name, thresholds } => {
                if thresholds.is_empty() || !input_len.is_multiple_of(thresholds.len()) {
                    return Err(Error::Shape(format!(
                        "layer {name}: {} thresholds do not divide {input_len} inputs",
                        thresholds.len()
                    )));
                }
                Ok(input_len)
            }
        }
    }
}

/// Shape bookkeeping for im2col lowering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub in_channels: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_channels: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn of(layer: &LayerSpec) -> Result<Self> {
        let LayerSpec::Conv {
            name,
            weights,
            input_shape,
            stride,
            padding,
            ..
        } = layer
        else {
            return Err(Error::Shape("not a convolution layer".into()));
        };
        let [oc, ic, kh, kw] = match weights.shape() {
            &[a, b, c, d] => [a, b, c, d],
            s => {
                return Err(Error::Shape(format!(
                    "layer {name}: conv weights must be 4-D, got {s:?}"
                )))
            }
        };
        let [c, h, w] = *input_shape;
        if c != ic {
            return Err(Error::Shape(format!(
                "layer {name}: weights expect {ic} input channels, input has {c}"
            )));
        }
        if *stride == 0 || kh == 0 || kw == 0 {
            return Err(Error::Shape(format!("layer {name}: zero stride or kernel")));
        }
        if h + 2 * padding < kh || w + 2 * padding < kw {
            return Err(Error::Shape(format!(
                "layer {name}: kernel larger than input"
            )));
        }
        Ok(Self {
            in_channels: c,
            in_h: h,
            in_w: w,
            out_channels: oc,
            kh,
            kw,
            stride: *stride,
            padding: *padding,
            out_h: (h + 2 * padding - kh) / stride + 1,
            out_w: (w + 2 * padding - kw) / stride + 1,
        })
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.in_h * self.in_w
    }

    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kh * self.kw
    }

    /// im2col: one row of length `patch_len` per output position, ordered
    /// `(channel, ky, kx)` to match the weight layout.
    pub fn im2col(&self, input: &[i8]) -> Vec<Vec<i8>> {
        let mut patches = Vec::with_capacity(self.out_h * self.out_w);
        for oy in 0..self.out_h {
            for ox in 0..self.out_w {
                let mut p = Vec::with_capacity(self.patch_len());
                for c in 0..self.in_channels {
                    for ky in 0..self.kh {
                        for kx in 0..self.kw {
                            let y = (oy * self.stride + ky) as isize - self.padding as isize;
                            let x = (ox * self.stride + kx) as isize - self.padding as isize;
                            let inside = y >= 0
                                && x >= 0
                                && (y as usize) < self.in_h
                                && (x as usize) < self.in_w;
                            p.push(if inside {
                                input[(c * self.in_h + y as usize) * self.in_w + x as usize]
                            } else {
                                -1
                            });
                        }
                    }
                }
                patches.push(p);
            }
        }
        patches
    }

    /// Conv weights reshaped to a `[patch_len, out_channels]` matrix.
    pub fn weight_matrix(&self, weights: &BinaryTensor) -> Result<BinaryTensor> {
        let pl = self.patch_len();
        let w = weights.values();
        let mut m = vec![0i8; pl * self.out_channels];
        for oc in 0..self.out_channels {
            for k in 0..pl {
                m[k * self.out_channels + oc] = w[oc * pl + k];
            }
        }
        BinaryTensor::new(vec![pl, self.out_channels], m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    pub input_len: usize,
    pub layers: Vec<LayerSpec>,
}

impl Model {
    /// Checks that adjacent layers agree; returns the output length.
    pub fn validate(&self) -> Result<usize> {
        if self.layers.is_empty() {
            return Err(Error::Shape("model has no layers".into()));
        }
        let mut len = self.input_len;
        for l in &self.layers {
            len = l.output_len(len)?;
        }
        Ok(len)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub input_shape: Vec<usize>,
    pub layers: Vec<ManifestLayer>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    /// int8 restricted to -1/+1.
    #[default]
    Sign,
    Int8,
    Uint8,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLayer {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub dtype: Dtype,
    #[serde(default, skip_serializing_if = "is_default")]
    pub full_precision: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_shape: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thresholds: Vec<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<Direction>,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// Reads a raw little-endian int8 blob.
pub fn read_int8_blob(path: &Path, expected: usize) -> Result<Vec<i8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected {
        return Err(Error::Shape(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            expected,
            bytes.len()
        )));
    }
    Ok(bytes.into_iter().map(|b| b as i8).collect())
}

/// Reads a raw uint8 blob.
pub fn read_uint8_blob(path: &Path, expected: usize) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected {
        return Err(Error::Shape(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            expected,
            bytes.len()
        )));
    }
    Ok(bytes)
}

fn write_blob(path: &Path, values: &[i8]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().map(|&v| v as u8).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads a manifest and its weight blobs.
pub fn load_model(manifest_path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    model_from_manifest(&manifest, base)
}

pub fn model_from_manifest(manifest: &Manifest, base: &Path) -> Result<Model> {
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for l in &manifest.layers {
        let weights = || -> Result<BinaryTensor> {
            let rel = l
                .weights
                .as_ref()
                .ok_or_else(|| Error::Shape(format!("layer {} has no weights file", l.name)))?;
            if l.dtype != Dtype::Sign {
                return Err(Error::Domain(format!(
                    "layer {}: binary inference needs dtype \"sign\"",
                    l.name
                )));
            }
            let count = l.shape.iter().product();
            let values = read_int8_blob(&base.join(rel), count)?;
            BinaryTensor::new(l.shape.clone(), values)
        };
        let layer = match l.kind.as_str() {
            "dense" => LayerSpec::Dense {
                name: l.name.clone(),
                weights: weights()?,
                full_precision: l.full_precision,
            },
            "conv" => LayerSpec::Conv {
                name: l.name.clone(),
                weights: weights()?,
                input_shape: l.input_shape.ok_or_else(|| {
                    Error::Shape(format!("conv layer {} needs input_shape", l.name))
                })?,
                stride: l.stride.unwrap_or(1),
                padding: l.padding.unwrap_or(0),
                full_precision: l.full_precision,
            },
            "sign" => LayerSpec::Sign {
                name: l.name.clone(),
            },
            "threshold" => {
                let dirs = if l.directions.is_empty() {
                    vec![Direction::Ge; l.thresholds.len()]
                } else {
                    l.directions.clone()
                };
                if dirs.len() != l.thresholds.len() {
                    return Err(Error::Shape(format!(
                        "layer {}: {} thresholds but {} directions",
                        l.name,
                        l.thresholds.len(),
                        dirs.len()
                    )));
                }
                LayerSpec::Threshold {
                    name: l.name.clone(),
                    thresholds: l
                        .thresholds
                        .iter()
                        .zip(dirs)
                        .map(|(&threshold, direction)| FoldedThreshold {
                            threshold,
                            direction,
                        })
                        .collect(),
                }
            }
            other => {
                return Err(Error::Shape(format!(
                    "layer {}: unknown kind \"{other}\"",
                    l.name
                )))
            }
        };
        layers.push(layer);
    }
    let model = Model {
        name: manifest.name.clone(),
        input_len: manifest.input_shape.iter().product(),
        layers,
    };
    model.validate()?;
    Ok(model)
}

/// Writes `manifest.json` plus one blob per weight-bearing layer into `dir`.
pub fn save_model(model: &Model, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layers = Vec::new();
    for l in &model.layers {
        let entry = match l {
            LayerSpec::Dense {
                name,
                weights,
                full_precision,
            } => {
                let file = format!("{name}.bin");
                write_blob(&dir.join(&file), weights.values())?;
                ManifestLayer {
                    name: name.clone(),
                    kind: "dense".into(),
                    shape: weights.shape().to_vec(),
                    weights: Some(file),
                    full_precision: *full_precision,
                    ..Default::default()
                }
            }
            LayerSpec::Conv {
                name,
                weights,
                input_shape,
                stride,
                padding,
                full_precision,
            } => {
                let file = format!("{name}.bin");
                write_blob(&dir.join(&file), weights.values())?;
                ManifestLayer {
                    name: name.clone(),
                    kind: "conv".into(),
                    shape: weights.shape().to_vec(),
                    weights: Some(file),
                    full_precision: *full_precision,
                    input_shape: Some(*input_shape),
                    stride: Some(*stride),
                    padding: Some(*padding),
                    ..Default::default()
                }
            }
            LayerSpec::Sign { name } => ManifestLayer {
                name: name.clone(),
                kind: "sign".into(),
                ..Default::default()
            },
            LayerSpec::Threshold { name, thresholds } => ManifestLayer {
                name: name.clone(),
                kind: "threshold".into(),
                thresholds: thresholds.iter().map(|t| t.threshold).collect(),
                directions: thresholds.iter().map(|t| t.direction).collect(),
                ..Default::default()
            },
        };
        layers.push(entry);
    }
    let manifest = Manifest {
        name: model.name.clone(),
        input_shape: vec![model.input_len],
        layers,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
