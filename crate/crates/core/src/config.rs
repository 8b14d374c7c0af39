//! Sectioned run configuration (TOML).
//!
//! Every field has a default; unknown keys are rejected. Kind-dependent
//! device values are optional in the file and filled in by
//! [`RunConfig::resolved`], whose output is what gets echoed into artifacts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::devices::{
    load_device_lut, Conduction, DeviceKind, DeviceLuts, DeviceModel, LutFormat, WireModel,
    WirePreset,
};
use crate::par::Parallelism;
use crate::pipeline::{AdcBits, AdcSetting, EngineConfig};
use crate::solver::{SolverSettings, Topology};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub array: ArraySection,
    pub device: DeviceSection,
    pub wire: WireSection,
    pub adc: AdcSection,
    pub dummy: DummySection,
    pub binsparx: BinsparxSection,
    pub solver: SolverSection,
    pub run: RunSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    pub n: usize,
    pub m: usize,
    pub topology: Topology,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            n: 64,
            m: 64,
            topology: Topology::OppositeEnds,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    #[default]
    Saturating,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub kind: DeviceKind,
    pub i_on: f64,
    pub i_hrs: Option<f64>,
    pub i_off: Option<f64>,
    pub v_nominal: f64,
    pub v_knee: Option<f64>,
    pub curve: CurveKind,
    /// CSV LUT for stored-1 cells.
    pub lut: Option<PathBuf>,
    /// CSV LUT for stored-0 cells.
    pub lut_hrs: Option<PathBuf>,
    pub v_gate_on: Option<f64>,
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            kind: DeviceKind::Sram8t,
            i_on: 1e-6,
            i_hrs: None,
            i_off: None,
            v_nominal: crate::devices::DEFAULT_V_NOMINAL,
            v_knee: None,
            curve: CurveKind::Saturating,
            lut: None,
            lut_hrs: None,
            v_gate_on: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WireSection {
    pub preset: WirePreset,
    pub r_bl_per_cell: Option<f64>,
    pub r_sl_per_cell: Option<f64>,
    pub r_driver: Option<f64>,
    pub r_sink: Option<f64>,
}

impl Default for WireSection {
    fn default() -> Self {
        Self {
            preset: WirePreset::M3,
            r_bl_per_cell: None,
            r_sl_per_cell: None,
            r_driver: None,
            r_sink: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdcSection {
    pub bits: AdcBits,
    pub quantum: Option<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DummySection {
    pub enabled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinsparxSection {
    pub enabled: bool,
}

impl Default for BinsparxSection {
    fn default() -> Self {
        Self { enabled: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Keep going (and count) when a column fails to converge.
    pub best_effort: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            tol: s.tol,
            max_iter: s.max_iter,
            damping: s.damping,
            best_effort: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub trials: usize,
    pub output_dir: PathBuf,
    /// Disable every non-ideality (ideal counting path).
    pub ideal: bool,
    pub parallelism: Parallelism,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 10_000,
            output_dir: PathBuf::from("out"),
            ideal: false,
            parallelism: Parallelism::Parallel,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // LUT paths are relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.device.lut, &mut cfg.device.lut_hrs]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Copy with every kind-dependent default made explicit.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        let base = DeviceModel::of_kind(c.device.kind, c.device.i_on);
        c.device.i_hrs.get_or_insert(base.i_hrs);
        c.device.i_off.get_or_insert(base.i_off);
        c.device.v_knee.get_or_insert(c.device.v_nominal / 2.0);
        if c.device.lut.is_some() {
            c.device.v_gate_on.get_or_insert(c.device.v_nominal);
        }
        let w = WireModel::preset(c.wire.preset);
        c.wire.r_bl_per_cell.get_or_insert(w.r_bl_per_cell);
        c.wire.r_sl_per_cell.get_or_insert(w.r_sl_per_cell);
        c.wire.r_driver.get_or_insert(w.r_driver);
        c.wire.r_sink.get_or_insert(w.r_sink);
        c
    }

    pub fn device_model(&self) -> Result<DeviceModel> {
        let r = self.resolved();
        let d = &r.device;
        let conduction = match d.curve {
            CurveKind::Saturating => Conduction::Saturating {
                v_knee: d.v_knee.unwrap_or(d.v_nominal / 2.0),
            },
            CurveKind::Linear => Conduction::Linear,
        };
        let lut = match &d.lut {
            Some(path) => Some(DeviceLuts {
                stored_one: Arc::new(load_device_lut(path, LutFormat::Csv)?),
                stored_zero: match &d.lut_hrs {
                    Some(p) => Some(Arc::new(load_device_lut(p, LutFormat::Csv)?)),
                    None => None,
                },
                v_gate_on: d.v_gate_on.unwrap_or(d.v_nominal),
            }),
            None => None,
        };
        let model = DeviceModel {
            kind: d.kind,
            i_on: d.i_on,
            i_hrs: d.i_hrs.unwrap_or_default(),
            i_off: d.i_off.unwrap_or_default(),
            v_nominal: d.v_nominal,
            conduction,
            lut,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn wire_model(&self) -> Result<WireModel> {
        let r = self.resolved();
        let w = WireModel {
            r_bl_per_cell: r.wire.r_bl_per_cell.unwrap_or_default(),
            r_sl_per_cell: r.wire.r_sl_per_cell.unwrap_or_default(),
            r_driver: r.wire.r_driver.unwrap_or_default(),
            r_sink: r.wire.r_sink.unwrap_or_default(),
            preset: r.wire.preset,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn engine_config(&self) -> Result<EngineConfig> {
        let solver = SolverSettings {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            damping: self.solver.damping,
        };
        solver.validate()?;
        if self.array.n == 0 || self.array.m == 0 {
            return Err(Error::Config("array n and m must be positive".into()));
        }
        Ok(EngineConfig {
            n: self.array.n,
            m: self.array.m,
            topology: self.array.topology,
            binsparx: self.binsparx.enabled,
            nonidealities: !self.run.ideal,
            device: self.device_model()?,
            wire: self.wire_model()?,
            adc: AdcSetting {
                bits: self.adc.bits,
                quantum: self.adc.quantum,
                offset: self.adc.offset,
            },
            dummy: self.dummy.enabled,
            solver,
            best_effort: self.solver.best_effort,
            seed: self.run.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        let e = c.engine_config().unwrap();
        assert_eq!(e.n, 64);
        assert!(e.binsparx);
        assert_eq!(e.wire.r_bl_per_cell, 40.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("[array]\nrows = 3\n").is_err());
        assert!(RunConfig::from_toml_str("[bogus]\n").is_err());
    }

    #[test]
    fn sections_parse() {
        let text = r#"
            [array]
            n = 128
            topology = "same-end"
            [device]
            kind = "reram1t1r"
            i_on = 2e-6
            [wire]
            preset = "M6"
            r_driver = 500.0
            [adc]
            bits = 6
            [binsparx]
            enabled = false
            [run]
            seed = 9
            parallelism = "sequential"
        "#;
        let c = RunConfig::from_toml_str(text).unwrap();
        let e = c.engine_config().unwrap();
        assert_eq!(e.n, 128);
        assert_eq!(e.topology, Topology::SameEnd);
        assert_eq!(e.device.i_hrs, 0.1e-6);
        assert_eq!(e.wire.r_bl_per_cell, 8.0);
        assert_eq!(e.wire.r_driver, 500.0);
        assert_eq!(e.adc.bits, AdcBits::Fixed(6));
        assert!(!e.binsparx);
        assert_eq!(c.run.parallelism, Parallelism::Sequential);

        let auto = RunConfig::from_toml_str("[adc]\nbits = \"auto\"\n").unwrap();
        assert_eq!(auto.adc.bits, AdcBits::Auto);
        let full = RunConfig::from_toml_str("[adc]\nbits = \"full\"\n").unwrap();
        assert_eq!(full.adc.bits, AdcBits::Full);
    }

    #[test]
    fn resolved_round_trips_through_toml() {
        let c = RunConfig::default().resolved();
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.resolved(), c);
    }

    #[test]
    fn invalid_values_rejected() {
        let c = RunConfig::from_toml_str("[device]\ni_on = 1e-8\n").unwrap();
        assert!(c.engine_config().is_ok());
        // the fixed 0.1 uA HRS current exceeds this ON current
        let c = RunConfig::from_toml_str("[device]\nkind = \"reram1t1r\"\ni_on = 5e-8\n").unwrap();
        assert!(matches!(c.engine_config(), Err(Error::Config(_))));
        let c = RunConfig::from_toml_str("[solver]\ndamping = 1.5\n").unwrap();
        assert!(c.engine_config().is_err());
        let c = RunConfig::from_toml_str("[wire]\nr_driver = -1.0\n").unwrap();
        assert!(c.engine_config().is_err());
    }
}
