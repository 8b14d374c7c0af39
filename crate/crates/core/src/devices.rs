//! Bitcell I–V models and parasitic wire/driver resistances.
//!
//! The parametric conduction curve is a saturating
//! `I(v) = I_target * tanh(v / v_knee) / tanh(v_nominal / v_knee)`, pinned so
//! that `I(v_nominal) = I_target`. A [`DeviceLut`] attached to the model
//! replaces it. Wire presets are stand-in magnitudes; only their ordering
//! `M3 > M4 > M6` is meaningful.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Sram8t,
    Reram1t1r,
}

/// Shape of the gate-on conduction branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "curve")]
pub enum Conduction {
    /// `tanh` saturation with knee voltage `v_knee`.
    Saturating { v_knee: f64 },
    /// Ohmic, `I = I_target * v / v_nominal`.
    Linear,
}

pub const SRAM_ON_OFF_RATIO: f64 = 1e5;
pub const RERAM_HRS_CURRENT: f64 = 0.1e-6;
pub const DEFAULT_V_NOMINAL: f64 = 0.7;

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceModel {
    pub kind: DeviceKind,
    /// Stored 1, gate on, at `v_nominal`.
    pub i_on: f64,
    /// Stored 0, gate on, at `v_nominal` (ReRAM HRS path).
    pub i_hrs: f64,
    /// Gate-off leakage, independent of bias.
    pub i_off: f64,
    pub v_nominal: f64,
    pub conduction: Conduction,
    pub lut: Option<DeviceLuts>,
}

/// Tabulated replacements for the parametric curves, one per stored state.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceLuts {
    pub stored_one: Arc<DeviceLut>,
    pub stored_zero: Option<Arc<DeviceLut>>,
    /// Gate voltage applied for an asserted wordline.
    pub v_gate_on: f64,
}

impl DeviceModel {
    /// 8T-SRAM defaults: `i_off = i_on / 1e5`, stored 0 conducts only leakage.
    pub fn sram8t(i_on: f64) -> Self {
        Self {
            kind: DeviceKind::Sram8t,
            i_on,
            i_hrs: i_on / SRAM_ON_OFF_RATIO,
            i_off: i_on / SRAM_ON_OFF_RATIO,
            v_nominal: DEFAULT_V_NOMINAL,
            conduction: Conduction::Saturating {
                v_knee: DEFAULT_V_NOMINAL / 2.0,
            },
            lut: None,
        }
    }

    /// 1T-1ReRAM defaults: `i_hrs = 0.1 uA`, gate-off leakage `i_on / 1e5`.
    pub fn reram1t1r(i_on: f64) -> Self {
        Self {
            kind: DeviceKind::Reram1t1r,
            i_on,
            i_hrs: RERAM_HRS_CURRENT,
            i_off: i_on / SRAM_ON_OFF_RATIO,
            v_nominal: DEFAULT_V_NOMINAL,
            conduction: Conduction::Saturating {
                v_knee: DEFAULT_V_NOMINAL / 2.0,
            },
            lut: None,
        }
    }

    pub fn of_kind(kind: DeviceKind, i_on: f64) -> Self {
        match kind {
            DeviceKind::Sram8t => Self::sram8t(i_on),
            DeviceKind::Reram1t1r => Self::reram1t1r(i_on),
        }
    }

    /// Copy with `i_off` and the HRS branch set to zero.
    pub fn without_leakage(mut self) -> Self {
        self.i_off = 0.0;
        self.i_hrs = 0.0;
        self
    }

    pub fn with_conduction(mut self, conduction: Conduction) -> Self {
        self.conduction = conduction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.i_on, self.i_hrs, self.i_off, self.v_nominal]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("device parameters must be finite".into()));
        }
        if !(self.i_on > self.i_hrs && self.i_hrs >= self.i_off && self.i_off >= 0.0) {
            return Err(Error::Config(format!(
                "device currents must satisfy i_on > i_hrs >= i_off >= 0 (got {:e}, {:e}, {:e})",
                self.i_on, self.i_hrs, self.i_off
            )));
        }
        if self.v_nominal <= 0.0 {
            return Err(Error::Config("v_nominal must be positive".into()));
        }
        if let Conduction::Saturating { v_knee } = self.conduction {
            if !(v_knee > 0.0 && v_knee.is_finite()) {
                return Err(Error::Config("v_knee must be positive".into()));
            }
        }
        Ok(())
    }

    /// Current on the gate-on branch for `stored` (before any LUT override).
    fn branch_target(&self, stored: bool) -> Option<f64> {
        match (stored, self.kind) {
            (true, _) => Some(self.i_on),
            (false, DeviceKind::Reram1t1r) => Some(self.i_hrs),
            // SRAM: a stored 0 leaves the read stack off.
            (false, DeviceKind::Sram8t) => None,
        }
    }

    fn shape(&self, v: f64) -> f64 {
        match self.conduction {
            Conduction::Saturating { v_knee } => {
                (v / v_knee).tanh() / (self.v_nominal / v_knee).tanh()
            }
            Conduction::Linear => v / self.v_nominal,
        }
    }

    fn shape_slope(&self, v: f64) -> f64 {
        match self.conduction {
            Conduction::Saturating { v_knee } => {
                let c = (v / v_knee).cosh();
                1.0 / (v_knee * c * c * (self.v_nominal / v_knee).tanh())
            }
            Conduction::Linear => 1.0 / self.v_nominal,
        }
    }

    /// Cell current without the `v >= 0` precondition; reverse bias mirrors
    /// the forward curve. Used inside solver iterations.
    pub(crate) fn current(&self, stored: bool, gate: bool, v: f64) -> f64 {
        if let Some(luts) = &self.lut {
            let lut = if stored {
                Some(&luts.stored_one)
            } else {
                luts.stored_zero.as_ref()
            };
            if let Some(lut) = lut {
                let vg = if gate { luts.v_gate_on } else { 0.0 };
                let i = lut.query(vg, v.abs()).current;
                return i.copysign(v);
            }
        }
        if !gate {
            return self.i_off;
        }
        match self.branch_target(stored) {
            Some(target) => target * self.shape(v),
            None => self.i_off,
        }
    }

    /// `dI/dv` of [`Self::current`]; LUT branches use a central difference.
    pub(crate) fn conductance(&self, stored: bool, gate: bool, v: f64) -> f64 {
        let uses_lut = self
            .lut
            .as_ref()
            .is_some_and(|l| stored || l.stored_zero.is_some());
        if uses_lut {
            let h = 1e-6;
            return (self.current(stored, gate, v + h) - self.current(stored, gate, v - h))
                / (2.0 * h);
        }
        if !gate {
            return 0.0;
        }
        match self.branch_target(stored) {
            Some(target) => target * self.shape_slope(v),
            None => 0.0,
        }
    }
}

/// Cell current at a non-negative cell bias `v_cell`.
pub fn cell_current(model: &DeviceModel, stored_bit: u8, gate_on: u8, v_cell: f64) -> Result<f64> {
    if v_cell < 0.0 || v_cell.is_nan() {
        return Err(Error::Domain(format!(
            "cell voltage must be non-negative, got {v_cell}"
        )));
    }
    if stored_bit > 1 || gate_on > 1 {
        return Err(Error::Domain("stored and gate bits must be 0 or 1".into()));
    }
    Ok(model.current(stored_bit == 1, gate_on == 1, v_cell))
}

/// Result of a LUT lookup; `clamped` marks queries outside the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LutSample {
    pub current: f64,
    pub clamped: bool,
}

/// Bilinear table of current over (gate voltage, device voltage).
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceLut {
    gate_axis: Vec<f64>,
    v_axis: Vec<f64>,
    /// Row `i` holds the currents at `v_axis[i]`.
    currents: Vec<f64>,
}

fn strictly_increasing(xs: &[f64]) -> Option<usize> {
    xs.windows(2)
        .position(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
}

impl DeviceLut {
    pub fn new(gate_axis: Vec<f64>, v_axis: Vec<f64>, currents: Vec<f64>) -> Result<Self> {
        if gate_axis.is_empty() || v_axis.is_empty() {
            return Err(Error::Config("LUT axes must be non-empty".into()));
        }
        if let Some(i) = strictly_increasing(&gate_axis) {
            return Err(Error::Config(format!(
                "LUT gate axis not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = strictly_increasing(&v_axis) {
            return Err(Error::Config(format!(
                "LUT voltage axis not strictly increasing at index {}",
                i + 1
            )));
        }
        if currents.len() != gate_axis.len() * v_axis.len() {
            return Err(Error::Shape(format!(
                "LUT body has {} samples, axes need {}",
                currents.len(),
                gate_axis.len() * v_axis.len()
            )));
        }
        if let Some(i) = currents.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Config(format!(
                "LUT current at flat index {i} is negative or not finite"
            )));
        }
        Ok(Self {
            gate_axis,
            v_axis,
            currents,
        })
    }

    /// Tabulates `f(gate, v)` on the given axes.
    pub fn tabulate(
        gate_axis: Vec<f64>,
        v_axis: Vec<f64>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let currents = v_axis
            .iter()
            .flat_map(|&v| gate_axis.iter().map(move |&g| (g, v)))
            .map(|(g, v)| f(g, v))
            .collect();
        Self::new(gate_axis, v_axis, currents)
    }

    pub fn gate_axis(&self) -> &[f64] {
        &self.gate_axis
    }

    pub fn v_axis(&self) -> &[f64] {
        &self.v_axis
    }

    pub fn at(&self, vi: usize, gi: usize) -> f64 {
        self.currents[vi * self.gate_axis.len() + gi]
    }

    pub fn query(&self, v_gate: f64, v_dev: f64) -> LutSample {
        let (gi, gt, gc) = locate(&self.gate_axis, v_gate);
        let (vi, vt, vc) = locate(&self.v_axis, v_dev);
        let g1 = (gi + 1).min(self.gate_axis.len() - 1);
        let v1 = (vi + 1).min(self.v_axis.len() - 1);
        let c00 = self.at(vi, gi);
        let c01 = self.at(vi, g1);
        let c10 = self.at(v1, gi);
        let c11 = self.at(v1, g1);
        let lo = c00 + (c01 - c00) * gt;
        let hi = c10 + (c11 - c10) * gt;
        LutSample {
            current: lo + (hi - lo) * vt,
            clamped: gc || vc,
        }
    }

    /// Writes the CSV form accepted by [`load_device_lut`].
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("v_device");
        for g in &self.gate_axis {
            s.push_str(&format!(",{g:e}"));
        }
        s.push('\n');
        for (vi, v) in self.v_axis.iter().enumerate() {
            s.push_str(&format!("{v:e}"));
            for gi in 0..self.gate_axis.len() {
                s.push_str(&format!(",{:e}", self.at(vi, gi)));
            }
            s.push('\n');
        }
        s
    }
}

/// Returns `(lower index, fraction, clamped)` for `x` on a sorted axis.
fn locate(axis: &[f64], x: f64) -> (usize, f64, bool) {
    let last = axis.len() - 1;
    if axis.len() == 1 {
        return (0, 0.0, x != axis[0]);
    }
    if x <= axis[0] {
        return (0, 0.0, x < axis[0]);
    }
    if x >= axis[last] {
        return (last - 1, 1.0, x > axis[last]);
    }
    let hi = axis.partition_point(|&a| a <= x);
    let lo = hi - 1;
    (lo, (x - axis[lo]) / (axis[hi] - axis[lo]), false)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LutFormat {
    #[default]
    Csv,
}

/// Reads a LUT CSV: the header row lists gate voltages after a label cell,
/// each body row starts with the device voltage followed by currents in A.
pub fn load_device_lut(path: &Path, format: LutFormat) -> Result<DeviceLut> {
    let LutFormat::Csv = format;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lut_csv(&text, &path.display().to_string())
}

pub fn parse_lut_csv(text: &str, origin: &str) -> Result<DeviceLut> {
    let perr = |row: usize, col: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        row,
        col,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        records.push(rec.map_err(|e| perr(row + 1, 0, e.to_string()))?);
    }
    let header = records
        .first()
        .ok_or_else(|| perr(1, 0, "empty LUT file".into()))?;
    let num = |row: usize, col: usize, s: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| perr(row, col, format!("'{s}' is not a number")))?;
        if v.is_nan() {
            return Err(perr(row, col, "NaN value".into()));
        }
        Ok(v)
    };
    let gate_axis = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, s)| num(1, c + 1, s))
        .collect::<Result<Vec<_>>>()?;
    if gate_axis.is_empty() {
        return Err(perr(1, 2, "header has no gate-voltage columns".into()));
    }
    if let Some(i) = strictly_increasing(&gate_axis) {
        return Err(perr(1, i + 3, "gate axis not strictly increasing".into()));
    }
    let mut v_axis = Vec::new();
    let mut currents = Vec::new();
    for (ri, rec) in records.iter().enumerate().skip(1) {
        let row = ri + 1;
        if rec.len() != gate_axis.len() + 1 {
            return Err(perr(
                row,
                rec.len(),
                format!("expected {} fields, got {}", gate_axis.len() + 1, rec.len()),
            ));
        }
        let v = num(row, 1, &rec[0])?;
        if v_axis.last().is_some_and(|&prev| v <= prev) {
            return Err(perr(row, 1, "voltage axis not strictly increasing".into()));
        }
        v_axis.push(v);
        for (c, s) in rec.iter().enumerate().skip(1) {
            let i = num(row, c + 1, s)?;
            if i < 0.0 || !i.is_finite() {
                return Err(perr(row, c + 1, format!("invalid current {i}")));
            }
            currents.push(i);
        }
    }
    if v_axis.is_empty() {
        return Err(perr(2, 1, "LUT has no voltage rows".into()));
    }
    DeviceLut::new(gate_axis, v_axis, currents)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WirePreset {
    M3,
    M4,
    M6,
    #[serde(rename = "custom")]
    Custom,
}

/// Parasitic resistances of one Xbar column, per cell pitch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireModel {
    pub r_bl_per_cell: f64,
    pub r_sl_per_cell: f64,
    pub r_driver: f64,
    /// Cancelled by the op-amp virtual ground; carried for reporting.
    pub r_sink: f64,
    pub preset: WirePreset,
}

pub const DEFAULT_R_DRIVER: f64 = 1e3;
pub const DEFAULT_R_SINK: f64 = 1e3;

impl WireModel {
    pub fn preset(p: WirePreset) -> Self {
        let r = match p {
            WirePreset::M3 => 40.0,
            WirePreset::M4 => 25.0,
            WirePreset::M6 => 8.0,
            WirePreset::Custom => 0.0,
        };
        Self {
            r_bl_per_cell: r,
            r_sl_per_cell: r,
            r_driver: DEFAULT_R_DRIVER,
            r_sink: DEFAULT_R_SINK,
            preset: p,
        }
    }

    /// No parasitics at all.
    pub fn ideal() -> Self {
        Self {
            r_bl_per_cell: 0.0,
            r_sl_per_cell: 0.0,
            r_driver: 0.0,
            r_sink: 0.0,
            preset: WirePreset::Custom,
        }
    }

    /// Custom preset from resistance per unit length and the bitcell height.
    pub fn from_geometry(
        bl_res_per_um: f64,
        sl_res_per_um: f64,
        cell_height_um: f64,
        r_driver: f64,
    ) -> Result<Self> {
        Ok(Self {
            r_bl_per_cell: wire_resistance_from_geometry(bl_res_per_um, cell_height_um)?,
            r_sl_per_cell: wire_resistance_from_geometry(sl_res_per_um, cell_height_um)?,
            r_driver,
            r_sink: DEFAULT_R_SINK,
            preset: WirePreset::Custom,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.r_bl_per_cell,
            self.r_sl_per_cell,
            self.r_driver,
            self.r_sink,
        ];
        if all.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Config(
                "wire resistances must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-cell wire resistance: `res_per_um * cell_height_um`.
pub fn wire_resistance_from_geometry(res_per_um: f64, cell_height_um: f64) -> Result<f64> {
    if !(res_per_um > 0.0 && cell_height_um > 0.0)
        || !res_per_um.is_finite()
        || !cell_height_um.is_finite()
    {
        return Err(Error::Domain(format!(
            "resistance per length and cell height must be positive, got {res_per_um} and {cell_height_um}"
        )));
    }
    Ok(res_per_um * cell_height_um)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn cell_current_examples() {
        let d = DeviceModel::sram8t(1e-6);
        let i = cell_current(&d, 1, 1, d.v_nominal).unwrap();
        assert!((i - 1e-6).abs() < 1e-18);
        assert_eq!(cell_current(&d, 1, 0, 0.3).unwrap(), d.i_off);
        assert_eq!(cell_current(&d, 0, 0, 0.3).unwrap(), d.i_off);
        assert_eq!(cell_current(&d, 1, 1, 0.0).unwrap(), 0.0);
        assert!(matches!(
            cell_current(&d, 1, 1, -0.1),
            Err(Error::Domain(_))
        ));

        let r = DeviceModel::reram1t1r(1e-6);
        let hrs = cell_current(&r, 0, 1, r.v_nominal).unwrap();
        assert!((hrs - 0.1e-6).abs() < 1e-18);
    }

    #[test]
    fn default_ratios() {
        for i_on in [1e-6, 2e-6] {
            let s = DeviceModel::sram8t(i_on);
            assert!(s.i_on / s.i_off > 1e4);
            s.validate().unwrap();
            let r = DeviceModel::reram1t1r(i_on);
            let ratio = r.i_on / r.i_hrs;
            assert!((10.0..=50.0).contains(&ratio), "ratio {ratio}");
            r.validate().unwrap();
        }
    }

    #[test]
    fn monotone_in_bias() {
        for d in [DeviceModel::sram8t(2e-6), DeviceModel::reram1t1r(1e-6)] {
            for (s, g) in [(1, 1), (0, 1), (1, 0), (0, 0)] {
                let mut prev = cell_current(&d, s, g, 0.0).unwrap();
                for k in 1..=700 {
                    let i = cell_current(&d, s, g, k as f64 * 1e-3).unwrap();
                    assert!(i - prev > -1e-15);
                    prev = i;
                }
            }
        }
    }

    #[test]
    fn conductance_matches_finite_difference() {
        let d = DeviceModel::reram1t1r(2e-6);
        for v in [0.0, 0.1, 0.35, 0.69] {
            for s in [true, false] {
                let h = 1e-7;
                let fd = (d.current(s, true, v + h) - d.current(s, true, v - h)) / (2.0 * h);
                assert!((fd - d.conductance(s, true, v)).abs() < 1e-9 * d.i_on / d.v_nominal);
            }
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let mut d = DeviceModel::reram1t1r(1e-6);
        d.i_hrs = 2e-6;
        assert!(d.validate().is_err());
        let mut d = DeviceModel::sram8t(1e-6);
        d.i_off = -1.0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn geometry() {
        assert!((wire_resistance_from_geometry(100.0, 0.2).unwrap() - 20.0).abs() < 1e-12);
        assert!(wire_resistance_from_geometry(0.0, 0.2).is_err());
        assert!(wire_resistance_from_geometry(10.0, -1.0).is_err());
        let (rho, h) = (125.0, 0.32);
        let w = WireModel::from_geometry(rho, rho, h, 1e3).unwrap();
        assert_eq!(w.r_bl_per_cell, rho * h);
        assert_eq!(w.r_sl_per_cell, 40.0);
    }

    #[test]
    fn preset_ordering() {
        let r = |p| WireModel::preset(p).r_bl_per_cell;
        assert!(r(WirePreset::M3) > r(WirePreset::M4));
        assert!(r(WirePreset::M4) > r(WirePreset::M6));
    }

    fn small_lut() -> DeviceLut {
        DeviceLut::new(vec![0.0, 1.0], vec![0.0, 0.5], vec![0.0, 1.0, 2.0, 5.0]).unwrap()
    }

    #[test]
    fn lut_grid_points_and_centre() {
        let l = small_lut();
        assert_eq!(l.query(1.0, 0.5).current, 5.0);
        assert_eq!(l.query(0.0, 0.5).current, 2.0);
        assert_eq!(l.query(1.0, 0.0).current, 1.0);
        let c = l.query(0.5, 0.25);
        assert!((c.current - 2.0).abs() < 1e-15);
        assert!(!c.clamped);
        let out = l.query(2.0, 0.25);
        assert!(out.clamped);
        assert!((out.current - 3.0).abs() < 1e-15);
    }

    /// Independent bilinear evaluation: interpolate along voltage first.
    fn oracle_bilinear(l: &DeviceLut, g: f64, v: f64) -> f64 {
        let ga = l.gate_axis();
        let va = l.v_axis();
        let gi = (0..ga.len() - 1).find(|&i| g <= ga[i + 1]).unwrap();
        let vi = (0..va.len() - 1).find(|&i| v <= va[i + 1]).unwrap();
        let lerp = |a: f64, b: f64, t: f64| a * (1.0 - t) + b * t;
        let tv = (v - va[vi]) / (va[vi + 1] - va[vi]);
        let tg = (g - ga[gi]) / (ga[gi + 1] - ga[gi]);
        let left = lerp(l.at(vi, gi), l.at(vi + 1, gi), tv);
        let right = lerp(l.at(vi, gi + 1), l.at(vi + 1, gi + 1), tv);
        lerp(left, right, tg)
    }

    #[test]
    fn lut_random_grid_against_oracle() {
        let mut r = rng::root(9);
        let axis = |r: &mut rng::Rng| {
            let mut x = 0.0;
            (0..16)
                .map(|_| {
                    x += r.gen_range(0.01..0.1);
                    x
                })
                .collect::<Vec<f64>>()
        };
        let ga = axis(&mut r);
        let va = axis(&mut r);
        let body: Vec<f64> = (0..256).map(|_| r.gen_range(0.0..1e-6)).collect();
        let l = DeviceLut::new(ga.clone(), va.clone(), body).unwrap();
        for _ in 0..2000 {
            let g = r.gen_range(ga[0]..ga[15]);
            let v = r.gen_range(va[0]..va[15]);
            let a = l.query(g, v).current;
            let b = oracle_bilinear(&l, g, v);
            assert!((a - b).abs() <= 1e-12 * 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn lut_csv_round_trip_and_errors() {
        let l = small_lut();
        let parsed = parse_lut_csv(&l.to_csv_string(), "mem").unwrap();
        assert_eq!(parsed, l);

        let err = |s: &str| parse_lut_csv(s, "mem").unwrap_err();
        assert!(matches!(
            err("v,0,1\n0,1,2\n0.5,3\n"),
            Error::Parse { row: 3, .. }
        ));
        assert!(matches!(err("v,1,0\n0,1,2\n"), Error::Parse { row: 1, .. }));
        assert!(matches!(
            err("v,0,1\n0,1,2\n0,3,4\n"),
            Error::Parse { row: 3, col: 1, .. }
        ));
        assert!(matches!(
            err("v,0,1\n0,1,-2\n"),
            Error::Parse { row: 2, col: 3, .. }
        ));
        assert!(matches!(
            err("v,0,1\n0,NaN,2\n"),
            Error::Parse { row: 2, col: 2, .. }
        ));
    }

    #[test]
    fn lut_generated_from_parametric_agrees() {
        let base = DeviceModel::reram1t1r(2e-6);
        let v_axis: Vec<f64> = (0..=140).map(|k| k as f64 * 0.005).collect();
        let mk = |stored: bool| {
            let b = base.clone();
            DeviceLut::tabulate(vec![0.0, base.v_nominal], v_axis.clone(), move |g, v| {
                b.current(stored, g > 0.0, v)
            })
            .map(Arc::new)
            .unwrap()
        };
        let mut lutted = base.clone();
        lutted.lut = Some(DeviceLuts {
            stored_one: mk(true),
            stored_zero: Some(mk(false)),
            v_gate_on: base.v_nominal,
        });
        for k in 1..=700 {
            let v = k as f64 * 1e-3;
            for (s, g) in [(1, 1), (0, 1), (1, 0)] {
                let a = cell_current(&base, s, g, v).unwrap();
                let b = cell_current(&lutted, s, g, v).unwrap();
                assert!((a - b).abs() <= 0.01 * a.abs().max(1e-12), "v={v} {a} {b}");
            }
        }
    }
}
