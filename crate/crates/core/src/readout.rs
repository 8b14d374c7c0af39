//! Current sensing, dummy-column compensation and ADC quantization.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform ADC: level `k` corresponds to `offset + k * quantum`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdcModel {
    pub bits: u32,
    pub quantum: f64,
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quantized {
    pub level: u32,
    pub clamped: bool,
}

impl AdcModel {
    pub fn new(bits: u32, quantum: f64, offset: f64) -> Result<Self> {
        if !(1..=31).contains(&bits) {
            return Err(Error::Config(format!(
                "ADC bits must be in 1..=31, got {bits}"
            )));
        }
        if !(quantum > 0.0 && quantum.is_finite()) {
            return Err(Error::Config(format!(
                "ADC quantum must be positive, got {quantum}"
            )));
        }
        if !offset.is_finite() {
            return Err(Error::Config("ADC offset must be finite".into()));
        }
        Ok(Self {
            bits,
            quantum,
            offset,
        })
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    pub fn max_level(&self) -> u32 {
        self.levels() - 1
    }

    pub fn quantize(&self, i: f64) -> Quantized {
        adc_quantize(i, self)
    }
}

/// `clamp(round_half_even((i - offset) / quantum), 0, 2^bits - 1)`.
pub fn adc_quantize(i: f64, adc: &AdcModel) -> Quantized {
    let x = ((i - adc.offset) / adc.quantum).round_ties_even();
    let max = adc.max_level() as f64;
    if x.is_nan() || x < 0.0 {
        Quantized {
            level: 0,
            clamped: true,
        }
    } else if x > max {
        Quantized {
            level: adc.max_level(),
            clamped: true,
        }
    } else {
        Quantized {
            level: x as u32,
            clamped: false,
        }
    }
}

/// Analog subtraction of the all-HRS dummy column, floored at zero.
pub fn dummy_compensate(i_data: f64, i_dummy: f64) -> f64 {
    (i_data - i_dummy).max(0.0)
}

/// Bits needed to represent every sum `0..=max_sum` without clamping.
pub fn full_precision_bits(max_sum: usize) -> u32 {
    (usize::BITS - max_sum.leading_zeros()).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{DeviceModel, WireModel, WirePreset};
    use crate::rng;
    use crate::solver::{solve_column_fast, ColumnProblem, SolverSettings, Topology};
    use rand::seq::SliceRandom;
    use rand::Rng;

    const UA: f64 = 1e-6;

    #[test]
    fn quantize_examples() {
        let adc = AdcModel::new(6, UA, 0.0).unwrap();
        assert_eq!(adc.quantize(9.4 * UA).level, 9);
        let q = adc.quantize(70.0 * UA);
        assert_eq!(
            q,
            Quantized {
                level: 63,
                clamped: true
            }
        );
        // ties to even
        assert_eq!(adc.quantize(2.5 * UA).level, 2);
        assert_eq!(adc.quantize(3.5 * UA).level, 4);
        assert!(adc.quantize(-0.7 * UA).clamped);
    }

    #[test]
    fn invalid_adc() {
        assert!(AdcModel::new(0, UA, 0.0).is_err());
        assert!(AdcModel::new(5, 0.0, 0.0).is_err());
    }

    #[test]
    fn error_bounded_by_half_quantum_in_range() {
        let adc = AdcModel::new(5, UA, 0.0).unwrap();
        let mut r = rng::root(31);
        for _ in 0..10_000 {
            let i = r.gen_range(0.0..31.5 * UA);
            let q = adc.quantize(i);
            assert!(!q.clamped);
            assert!((q.level as f64 * UA - i).abs() <= UA / 2.0 + 1e-18);
        }
    }

    #[test]
    fn full_precision_widths() {
        assert_eq!(full_precision_bits(64), 7);
        assert_eq!(full_precision_bits(63), 6);
        assert_eq!(full_precision_bits(32), 6);
        assert_eq!(full_precision_bits(0), 1);
        assert_eq!(full_precision_bits(1), 1);
    }

    #[test]
    fn dummy_examples() {
        // 32 asserted rows over all-HRS cells at 0.1 uA each
        let i_dummy = 32.0 * 0.1 * UA;
        assert!((i_dummy - 3.2 * UA).abs() < 1e-18);
        let i_data = 10.0 * UA + i_dummy;
        assert!((dummy_compensate(i_data, i_dummy) - 10.0 * UA).abs() < 1e-18);
        assert_eq!(dummy_compensate(5.0 * UA, 0.0), 5.0 * UA);
        assert_eq!(dummy_compensate(1.0 * UA, 2.0 * UA), 0.0);
    }

    #[test]
    fn dummy_cancels_hrs_without_parasitics() {
        let d = DeviceModel::reram1t1r(1e-6);
        let w = WireModel::ideal();
        let mut r = rng::root(32);
        let s = SolverSettings::default();
        for _ in 0..100 {
            let stored: Vec<u8> = (0..64).map(|_| r.gen_range(0..2)).collect();
            let gates: Vec<u8> = (0..64).map(|_| r.gen_range(0..2)).collect();
            let all_hrs = vec![0u8; 64];
            let p =
                ColumnProblem::new(&stored, &gates, &d, &w, d.v_nominal, Topology::OppositeEnds)
                    .unwrap();
            let q = ColumnProblem::new(
                &all_hrs,
                &gates,
                &d,
                &w,
                d.v_nominal,
                Topology::OppositeEnds,
            )
            .unwrap();
            let data = solve_column_fast(&p, &s).unwrap().i_out;
            let dummy = solve_column_fast(&q, &s).unwrap().i_out;
            let on = p.on_cells() as f64;
            let expect = on * (d.i_on - d.i_hrs);
            assert!((dummy_compensate(data, dummy) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn dummy_helps_with_parasitics() {
        let d = DeviceModel::reram1t1r(1e-6);
        let w = WireModel::preset(WirePreset::M4);
        let s = SolverSettings::default();
        let mut r = rng::root(33);
        let (mut comp, mut raw) = (0.0, 0.0);
        for _ in 0..200 {
            // at least 8 HRS cells with the gate on
            let mut rows: Vec<usize> = (0..64).collect();
            rows.shuffle(&mut r);
            let mut stored = vec![0u8; 64];
            let mut gates = vec![0u8; 64];
            for &k in &rows[..8] {
                gates[k] = 1;
            }
            for &k in &rows[8..] {
                stored[k] = r.gen_range(0..2);
                gates[k] = r.gen_range(0..2);
            }
            let p =
                ColumnProblem::new(&stored, &gates, &d, &w, d.v_nominal, Topology::OppositeEnds)
                    .unwrap();
            let zeros = vec![0u8; 64];
            let q = ColumnProblem::new(&zeros, &gates, &d, &w, d.v_nominal, Topology::OppositeEnds)
                .unwrap();
            let data = solve_column_fast(&p, &s).unwrap().i_out;
            let dummy = solve_column_fast(&q, &s).unwrap().i_out;
            let x = p.on_cells() as f64;
            raw += (data / d.i_on - x).abs();
            comp += (dummy_compensate(data, dummy) / (d.i_on - d.i_hrs) - x).abs();
        }
        assert!(comp < raw, "compensated {comp} vs raw {raw}");
    }
}
