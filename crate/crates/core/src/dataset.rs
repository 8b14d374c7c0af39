//! Dataset ingestion (IDX, CSV) and synthetic desk-scale workloads.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::Rng;

use crate::bnn::BinaryTensor;
use crate::model::{LayerSpec, Model};
use crate::pipeline::reference_predict;
use crate::rng;
use crate::{Error, Result};

/// Binarized inputs with integer class labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    pub features: Vec<Vec<i8>>,
    pub labels: Vec<u32>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        let d = self.dim();
        if let Some(i) = self.features.iter().position(|f| f.len() != d) {
            return Err(Error::Shape(format!("sample {i} has a different length")));
        }
        if self.features.iter().flatten().any(|&v| v != 1 && v != -1) {
            return Err(Error::Domain("features must be -1/+1".into()));
        }
        Ok(())
    }
}

fn read_u32_be(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_be_bytes(b))
}

/// Reads an unsigned-byte IDX file; returns `(dims, data)`.
pub fn read_idx(path: &Path) -> Result<(Vec<usize>, Vec<u8>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let magic = read_u32_be(&mut r, path)?;
    let perr = |msg: String| Error::Parse {
        path: path.display().to_string(),
        row: 0,
        col: 0,
        msg,
    };
    if magic >> 16 != 0 || (magic >> 8) & 0xff != 0x08 {
        return Err(perr(format!("unsupported IDX magic {magic:#010x}")));
    }
    let ndim = (magic & 0xff) as usize;
    let dims = (0..ndim)
        .map(|_| read_u32_be(&mut r, path).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let count: usize = dims.iter().product();
    let mut data = Vec::with_capacity(count);
    r.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
    if data.len() != count {
        return Err(perr(format!(
            "expected {count} bytes of data, found {}",
            data.len()
        )));
    }
    Ok((dims, data))
}

pub fn write_idx(path: &Path, dims: &[usize], data: &[u8]) -> Result<()> {
    let mut out = vec![0, 0, 0x08, dims.len() as u8];
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(data);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// IDX images and labels; a pixel `>= 128` maps to +1.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let (idims, pixels) = read_idx(images)?;
    let (ldims, lab) = read_idx(labels)?;
    let n = *idims.first().unwrap_or(&0);
    if ldims.len() != 1 || ldims[0] != n {
        return Err(Error::Shape(format!("{n} images but label dims {ldims:?}")));
    }
    let dim: usize = idims[1..].iter().product();
    let features = pixels
        .chunks(dim.max(1))
        .take(n)
        .map(|c| c.iter().map(|&p| if p >= 128 { 1 } else { -1 }).collect())
        .collect();
    let ds = Dataset {
        features,
        labels: lab.into_iter().map(u32::from).collect(),
    };
    ds.validate()?;
    Ok(ds)
}

/// CSV rows `label,f1,f2,...`; a feature `>= 0.5` maps to +1 (so both
/// `-1/+1` and `0/1` encodings read correctly). A non-numeric first row is
/// treated as a header.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ds = Dataset::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let label_field = fields.next().unwrap_or_default();
        let label: u32 = match label_field.parse() {
            Ok(l) => l,
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    row: i + 1,
                    col: 1,
                    msg: format!("bad label '{label_field}'"),
                })
            }
        };
        let feats = fields
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>()
                    .map(|v| if v >= 0.5 { 1i8 } else { -1 })
                    .map_err(|_| Error::Parse {
                        path: path.display().to_string(),
                        row: i + 1,
                        col: c + 2,
                        msg: format!("bad feature '{f}'"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        ds.labels.push(label);
        ds.features.push(feats);
    }
    ds.validate()?;
    Ok(ds)
}

pub fn write_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let mut s = String::new();
    for (f, l) in ds.features.iter().zip(&ds.labels) {
        s.push_str(&l.to_string());
        for v in f {
            s.push(',');
            s.push_str(&v.to_string());
        }
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Shape of the synthetic two-layer teacher BNN.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToySpec {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            inputs: 256,
            hidden: 128,
            classes: 10,
        }
    }
}

/// Random dense -> sign -> dense BNN.
pub fn toy_model(spec: ToySpec, seed: u64) -> Model {
    let mut r = rng::stream(seed, 0x70, 0);
    Model {
        name: "toy".into(),
        input_len: spec.inputs,
        layers: vec![
            LayerSpec::Dense {
                name: "fc1".into(),
                weights: BinaryTensor::random(vec![spec.inputs, spec.hidden], &mut r),
                full_precision: false,
            },
            LayerSpec::Sign {
                name: "act1".into(),
            },
            LayerSpec::Dense {
                name: "fc2".into(),
                weights: BinaryTensor::random(vec![spec.hidden, spec.classes], &mut r),
                full_precision: false,
            },
        ],
    }
}

/// Uniform random inputs labelled by the model's own exact prediction, so the
/// software accuracy is 1 by construction.
pub fn teacher_dataset(model: &Model, samples: usize, seed: u64) -> Result<Dataset> {
    let mut r = rng::stream(seed, 0x71, 0);
    let mut ds = Dataset::default();
    for _ in 0..samples {
        let x: Vec<i8> = (0..model.input_len)
            .map(|_| if r.gen::<bool>() { 1 } else { -1 })
            .collect();
        ds.labels.push(reference_predict(model, &x)?);
        ds.features.push(x);
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idx_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img.idx");
        let lab = dir.path().join("lab.idx");
        let pixels: Vec<u8> = (0..2 * 3 * 3).map(|i| (i * 20) as u8).collect();
        write_idx(&img, &[2, 3, 3], &pixels).unwrap();
        write_idx(&lab, &[2], &[7, 1]).unwrap();
        let ds = load_idx(&img, &lab).unwrap();
        assert_eq!(ds.labels, vec![7, 1]);
        assert_eq!(ds.dim(), 9);
        assert_eq!(ds.features[0][6], -1); // 120
        assert_eq!(ds.features[0][7], 1); // 140
    }

    #[test]
    fn idx_errors() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img.idx");
        std::fs::write(&img, [0u8, 0, 0x0d, 1, 0, 0, 0, 1, 0, 0, 0, 0]).unwrap();
        assert!(matches!(read_idx(&img), Err(Error::Parse { .. })));
        write_idx(&img, &[2, 2], &[1, 2, 3]).unwrap();
        assert!(read_idx(&img).is_err());
    }

    #[test]
    fn csv_round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let ds = Dataset {
            features: vec![vec![1, -1, 1], vec![-1, -1, 1]],
            labels: vec![3, 0],
        };
        write_csv(&p, &ds).unwrap();
        assert_eq!(load_csv(&p).unwrap(), ds);

        std::fs::write(&p, "label,a,b\n1,0,1\n0,1,0.2\n").unwrap();
        let ds = load_csv(&p).unwrap();
        assert_eq!(ds.features, vec![vec![-1, 1], vec![1, -1]]);

        std::fs::write(&p, "1,0,1\n0,1\n").unwrap();
        assert!(matches!(load_csv(&p), Err(Error::Shape(_))));
        std::fs::write(&p, "1,0,1\nx,1,1\n").unwrap();
        assert!(matches!(load_csv(&p), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn teacher_labels_are_deterministic() {
        let m = toy_model(
            ToySpec {
                inputs: 64,
                hidden: 32,
                classes: 4,
            },
            5,
        );
        let a = teacher_dataset(&m, 50, 5).unwrap();
        let b = teacher_dataset(&m, 50, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.labels.iter().all(|&l| l < 4));
        assert_eq!(a.dim(), 64);
    }
}
