//! Output current of one Xbar column under IR drop.
//!
//! Rows are driven through the access-transistor gates, which draw no
//! steady-state current, so each column is an independent ladder:
//!
//! ```text
//!  v_drive ─ r_driver ─┬─ r_bl ─ BL0 ─ r_bl ─ BL1 ─ … ─ BL(n-1)
//!                           cell0        cell1            cell(n-1)
//!                       SL0 ─ r_sl ─ SL1 ─ … ─ SL(n-1) ─ r_sl ─ op-amp (0 V)
//! ```
//!
//! Every row owns one BL segment (between it and the driver side) and one SL
//! segment (between it and the sense side). The sense node is an ideal virtual
//! ground, so `r_sink` never enters the solve.
//!
//! [`solve_column_fast`] is a damped fixed-point iteration on the cell
//! currents; [`solve_column_dense`] is full nodal analysis with Newton–Raphson
//! and serves as its oracle.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::devices::{DeviceModel, WireModel};
use crate::{Error, Result};

/// Where the sense amplifier sits relative to the driver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// Driver feeds row 0, sense at row n-1.
    #[default]
    OppositeEnds,
    /// Driver and sense both at row 0.
    SameEnd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Relative tolerance, in units of `i_on`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial damping factor in (0, 1].
    pub damping: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            damping: 0.5,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config("solver tol must be > 0".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config("solver damping must lie in (0, 1]".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("solver max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// One column: stored bits, applied gate bits and the electrical setting.
#[derive(Clone, Copy, Debug)]
pub struct ColumnProblem<'a> {
    pub stored: &'a [u8],
    pub gates: &'a [u8],
    pub device: &'a DeviceModel,
    pub wire: &'a WireModel,
    pub v_drive: f64,
    pub topology: Topology,
}

impl<'a> ColumnProblem<'a> {
    pub fn new(
        stored: &'a [u8],
        gates: &'a [u8],
        device: &'a DeviceModel,
        wire: &'a WireModel,
        v_drive: f64,
        topology: Topology,
    ) -> Result<Self> {
        let p = Self {
            stored,
            gates,
            device,
            wire,
            v_drive,
            topology,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stored.len() != self.gates.len() {
            return Err(Error::Shape(format!(
                "{} stored bits but {} gate bits",
                self.stored.len(),
                self.gates.len()
            )));
        }
        if self.stored.iter().chain(self.gates).any(|&b| b > 1) {
            return Err(Error::Domain("column bits must be 0 or 1".into()));
        }
        if !(self.v_drive > 0.0 && self.v_drive.is_finite()) {
            return Err(Error::Config("v_drive must be positive".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.stored.len()
    }

    fn cell(&self, k: usize) -> (bool, bool) {
        (self.stored[k] == 1, self.gates[k] == 1)
    }

    /// Number of cells with stored = 1 and gate = 1.
    pub fn on_cells(&self) -> usize {
        self.stored
            .iter()
            .zip(self.gates)
            .filter(|(&s, &g)| s & g == 1)
            .count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSolveResult {
    /// Current into the sense virtual ground.
    pub i_out: f64,
    pub v_bl: Vec<f64>,
    pub v_sl: Vec<f64>,
    pub i_cell: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Fast solver: max |f(v) - i| / i_on. Dense solver: max KCL error / i_on.
    pub residual: f64,
}

impl ColumnSolveResult {
    /// Turns an unconverged result into [`Error::NonConvergence`].
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }
}

/// Zero-parasitic reference: ON-cell count times `i_on`.
pub fn ideal_column_current(p: &ColumnProblem) -> f64 {
    p.on_cells() as f64 * p.device.i_on
}

/// Node voltages implied by a set of cell currents.
fn node_voltages(p: &ColumnProblem, i: &[f64], v_bl: &mut [f64], v_sl: &mut [f64]) {
    let n = i.len();
    let w = p.wire;
    let total: f64 = i.iter().sum();

    // BL: segment k carries every cell current at or beyond k.
    let mut beyond = total;
    let mut v = p.v_drive - w.r_driver * total;
    for k in 0..n {
        v -= w.r_bl_per_cell * beyond;
        v_bl[k] = v;
        beyond -= i[k];
    }

    match p.topology {
        Topology::OppositeEnds => {
            // SL segment after row k carries every cell current at or before k.
            let mut before = total;
            let mut v = 0.0;
            for k in (0..n).rev() {
                v += w.r_sl_per_cell * before;
                v_sl[k] = v;
                before -= i[k];
            }
        }
        Topology::SameEnd => {
            // SL segment toward row 0 carries the currents at or beyond k.
            let mut beyond = total;
            let mut v = 0.0;
            for k in 0..n {
                v += w.r_sl_per_cell * beyond;
                v_sl[k] = v;
                beyond -= i[k];
            }
        }
    }
}

/// Damped fixed-point solve of the column.
///
/// Cells start at their ideal-bias currents. Each sweep recomputes node
/// voltages from the current estimates and relaxes every cell toward the
/// device current at its new bias. The damping factor is halved whenever the
/// residual grows. Non-convergence is reported through `converged = false`.
pub fn solve_column_fast(
    p: &ColumnProblem,
    settings: &SolverSettings,
) -> Result<ColumnSolveResult> {
    p.validate()?;
    settings.validate()?;
    let n = p.n();
    let dev = p.device;
    let scale = dev.i_on;
    let mut i: Vec<f64> = (0..n)
        .map(|k| {
            let (s, g) = p.cell(k);
            dev.current(s, g, p.v_drive)
        })
        .collect();
    let mut v_bl = vec![0.0; n];
    let mut v_sl = vec![0.0; n];
    let mut target = vec![0.0; n];
    let mut alpha = settings.damping;
    let mut prev_residual = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iter {
        iterations += 1;
        node_voltages(p, &i, &mut v_bl, &mut v_sl);
        residual = 0.0;
        for k in 0..n {
            let (s, g) = p.cell(k);
            target[k] = dev.current(s, g, v_bl[k] - v_sl[k]);
            residual = f64::max(residual, (target[k] - i[k]).abs() / scale);
        }
        if residual < settings.tol {
            converged = true;
            break;
        }
        if residual > prev_residual {
            alpha = (alpha * 0.5).max(1e-6);
        }
        prev_residual = residual;
        for k in 0..n {
            i[k] += alpha * (target[k] - i[k]);
        }
    }
    if !converged {
        node_voltages(p, &i, &mut v_bl, &mut v_sl);
    }
    Ok(ColumnSolveResult {
        i_out: i.iter().sum(),
        v_bl,
        v_sl,
        i_cell: i,
        iterations,
        converged,
        residual,
    })
}

const SOURCE: usize = usize::MAX;
const GROUND: usize = usize::MAX - 1;

/// Disjoint-set over the 2n column nodes plus the two fixed nodes, used to
/// merge nodes joined by zero-resistance segments.
struct Nodes {
    parent: Vec<usize>,
    n: usize,
}

impl Nodes {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..2 * n + 2).collect(),
            n,
        }
    }

    fn slot(&self, node: usize) -> usize {
        match node {
            SOURCE => 2 * self.n,
            GROUND => 2 * self.n + 1,
            x => x,
        }
    }

    fn find(&mut self, node: usize) -> usize {
        let mut x = self.slot(node);
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        // fixed nodes stay representatives
        let (keep, drop) = if rb >= 2 * self.n { (rb, ra) } else { (ra, rb) };
        self.parent[drop] = keep;
    }
}

fn bl(k: usize) -> usize {
    2 * k
}

fn sl(k: usize) -> usize {
    2 * k + 1
}

/// Full nodal analysis with Newton–Raphson on the 2n node voltages.
///
/// Zero-resistance segments merge their end nodes. Each Newton step stamps
/// resistor conductances and the linearised cells into a dense Jacobian and
/// solves it by LU. Steps are limited to 0.1 V per node.
pub fn solve_column_dense(
    p: &ColumnProblem,
    settings: &SolverSettings,
) -> Result<ColumnSolveResult> {
    p.validate()?;
    settings.validate()?;
    let n = p.n();
    let dev = p.device;
    let w = p.wire;

    let mut resistors: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * n + 1);
    for k in 0..n {
        let from = if k == 0 { SOURCE } else { bl(k - 1) };
        let r = if k == 0 {
            w.r_driver + w.r_bl_per_cell
        } else {
            w.r_bl_per_cell
        };
        resistors.push((from, bl(k), r));
        let to = match p.topology {
            Topology::OppositeEnds if k + 1 == n => GROUND,
            Topology::OppositeEnds => sl(k + 1),
            Topology::SameEnd if k == 0 => GROUND,
            Topology::SameEnd => sl(k - 1),
        };
        resistors.push((sl(k), to, w.r_sl_per_cell));
    }

    let mut nodes = Nodes::new(n);
    for &(a, b, r) in &resistors {
        if r == 0.0 {
            nodes.union(a, b);
        }
    }
    let src = nodes.find(SOURCE);
    let gnd = nodes.find(GROUND);
    if src == gnd {
        return Err(Error::Solver("driver shorted to the sense node".into()));
    }

    // Map group representatives to unknown indices.
    let mut index = vec![usize::MAX; 2 * n + 2];
    let mut unknowns = 0;
    let mut group_of = vec![0usize; 2 * n];
    for (node, g) in group_of.iter_mut().enumerate() {
        *g = nodes.find(node);
        if *g != src && *g != gnd && index[*g] == usize::MAX {
            index[*g] = unknowns;
            unknowns += 1;
        }
    }
    let fixed = |g: usize| -> Option<f64> {
        if g == src {
            Some(p.v_drive)
        } else if g == gnd {
            Some(0.0)
        } else {
            None
        }
    };
    let group = |node: usize, nodes: &mut Nodes| nodes.find(node);

    let res_groups: Vec<(usize, usize, f64)> = resistors
        .iter()
        .filter(|r| r.2 > 0.0)
        .map(|&(a, b, r)| (group(a, &mut nodes), group(b, &mut nodes), 1.0 / r))
        .collect();

    let mut x = DVector::<f64>::zeros(unknowns);
    for (node, &g) in group_of.iter().enumerate().take(2 * n) {
        if index[g] != usize::MAX {
            // BL nodes start at the drive level, SL nodes at ground.
            x[index[g]] = if node % 2 == 0 { p.v_drive } else { 0.0 };
        }
    }
    let volt = |g: usize, x: &DVector<f64>| fixed(g).unwrap_or_else(|| x[index[g]]);

    let scale = dev.i_on;
    let mut residual;
    let mut iterations = 0;
    let mut converged = false;
    let mut jac = DMatrix::<f64>::zeros(unknowns, unknowns);
    let mut f = DVector::<f64>::zeros(unknowns);

    loop {
        // KCL: f[u] = net current leaving unknown group u.
        jac.fill(0.0);
        f.fill(0.0);
        for &(a, b, g) in &res_groups {
            let i_ab = g * (volt(a, &x) - volt(b, &x));
            let (ia, ib) = (index[a], index[b]);
            if ia != usize::MAX {
                f[ia] += i_ab;
                jac[(ia, ia)] += g;
                if ib != usize::MAX {
                    jac[(ia, ib)] -= g;
                }
            }
            if ib != usize::MAX {
                f[ib] -= i_ab;
                jac[(ib, ib)] += g;
                if ia != usize::MAX {
                    jac[(ib, ia)] -= g;
                }
            }
        }
        for k in 0..n {
            let (a, b) = (group_of[bl(k)], group_of[sl(k)]);
            if a == b {
                continue;
            }
            let (s, gt) = p.cell(k);
            let v = volt(a, &x) - volt(b, &x);
            let i = dev.current(s, gt, v);
            let g = dev.conductance(s, gt, v);
            let (ia, ib) = (index[a], index[b]);
            if ia != usize::MAX {
                f[ia] += i;
                jac[(ia, ia)] += g;
                if ib != usize::MAX {
                    jac[(ia, ib)] -= g;
                }
            }
            if ib != usize::MAX {
                f[ib] -= i;
                jac[(ib, ib)] += g;
                if ia != usize::MAX {
                    jac[(ib, ia)] -= g;
                }
            }
        }
        residual = f.amax() / scale;
        if unknowns == 0 || residual < settings.tol {
            converged = true;
            residual = if unknowns == 0 { 0.0 } else { residual };
            break;
        }
        if iterations >= settings.max_iter {
            break;
        }
        iterations += 1;
        let step = jac
            .clone()
            .lu()
            .solve(&(-&f))
            .ok_or_else(|| Error::Solver("singular nodal Jacobian".into()))?;
        let biggest = step.amax();
        let limit = 0.1;
        if biggest > limit {
            x += step * (limit / biggest);
        } else {
            x += step;
        }
    }

    let mut v_bl = vec![0.0; n];
    let mut v_sl = vec![0.0; n];
    let mut i_cell = vec![0.0; n];
    for k in 0..n {
        v_bl[k] = volt(group_of[bl(k)], &x);
        v_sl[k] = volt(group_of[sl(k)], &x);
        let (s, g) = p.cell(k);
        i_cell[k] = if group_of[bl(k)] == group_of[sl(k)] {
            0.0
        } else {
            dev.current(s, g, v_bl[k] - v_sl[k])
        };
    }
    // Current delivered into the virtual ground by every element touching it.
    let mut i_out = 0.0;
    for &(a, b, g) in &res_groups {
        if b == gnd && a != gnd {
            i_out += g * volt(a, &x);
        } else if a == gnd && b != gnd {
            i_out += g * volt(b, &x);
        }
    }
    for k in 0..n {
        if group_of[sl(k)] == gnd && group_of[bl(k)] != gnd {
            i_out += i_cell[k];
        }
    }

    Ok(ColumnSolveResult {
        i_out,
        v_bl,
        v_sl,
        i_cell,
        iterations,
        converged,
        residual,
    })
}

/// Closed-form input current of a uniform resistive ladder.
///
/// `sections` identical sections, each a series resistance `r_series`
/// followed by a shunt conductance `g_shunt` to the return rail, driven by
/// `v_drive` through `r_source`. With the ABCD section matrix
/// `M = [[1 + RG, R], [G, 1]]` and `cosh(theta) = 1 + RG/2`,
/// `M^N = U_{N-1} M - U_{N-2} I` where `U_k = sinh((k+1) theta) / sinh(theta)`.
/// The open-circuited far end gives an input admittance
/// `G U_{N-1} / ((1 + RG) U_{N-1} - U_{N-2})`.
///
/// A same-end column of identical linear ON cells is exactly this ladder with
/// `r_series = r_bl + r_sl`.
pub fn linear_ladder_current(
    sections: usize,
    r_series: f64,
    g_shunt: f64,
    r_source: f64,
    v_drive: f64,
) -> f64 {
    if sections == 0 || g_shunt == 0.0 {
        return 0.0;
    }
    let rg = r_series * g_shunt;
    let u = |k: i64| -> f64 {
        // U_k(cosh theta); U_{-1} = 0
        if k < 0 {
            return 0.0;
        }
        if rg == 0.0 {
            return (k + 1) as f64;
        }
        let theta = (1.0 + rg / 2.0).acosh();
        ((k + 1) as f64 * theta).sinh() / theta.sinh()
    };
    let n = sections as i64;
    let a = (1.0 + rg) * u(n - 1) - u(n - 2);
    let c = g_shunt * u(n - 1);
    v_drive / (r_source + a / c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{Conduction, WirePreset};
    use crate::rng;
    use rand::Rng;

    fn problem<'a>(
        stored: &'a [u8],
        gates: &'a [u8],
        d: &'a DeviceModel,
        w: &'a WireModel,
    ) -> ColumnProblem<'a> {
        ColumnProblem::new(stored, gates, d, w, d.v_nominal, Topology::OppositeEnds).unwrap()
    }

    #[test]
    fn zero_parasitics_give_ideal_current() {
        let d = DeviceModel::sram8t(1e-6).without_leakage();
        let w = WireModel::ideal();
        let stored = [1, 1, 0, 1, 1, 0, 1, 1];
        let gates = [1, 0, 1, 1, 1, 1, 0, 1];
        let p = problem(&stored, &gates, &d, &w);
        let k = p.on_cells() as f64;
        let fast = solve_column_fast(&p, &SolverSettings::default()).unwrap();
        let dense = solve_column_dense(&p, &SolverSettings::default()).unwrap();
        assert!(fast.converged && dense.converged);
        assert!((fast.i_out - k * 1e-6).abs() < 1e-18);
        assert!((dense.i_out - k * 1e-6).abs() < 1e-18);
        assert_eq!(ideal_column_current(&p), k * 1e-6);
    }

    #[test]
    fn gates_off_leak_only() {
        let d = DeviceModel::sram8t(1e-6);
        let w = WireModel::preset(WirePreset::M3);
        let stored = [1u8; 16];
        let gates = [0u8; 16];
        let p = problem(&stored, &gates, &d, &w);
        let r = solve_column_fast(&p, &SolverSettings::default()).unwrap();
        assert!((r.i_out - 16.0 * d.i_off).abs() < 1e-20);
        assert_eq!(ideal_column_current(&p), 0.0);
    }

    #[test]
    fn small_column_matches_dense() {
        let d = DeviceModel::sram8t(1e-6);
        let mut w = WireModel::preset(WirePreset::Custom);
        w.r_bl_per_cell = 20.0;
        w.r_sl_per_cell = 20.0;
        w.r_driver = 1e3;
        let stored = [1, 1, 0, 1];
        let gates = [1, 1, 1, 1];
        let p = problem(&stored, &gates, &d, &w);
        let s = SolverSettings::default();
        let fast = solve_column_fast(&p, &s)
            .unwrap()
            .require_converged()
            .unwrap();
        let dense = solve_column_dense(&p, &s)
            .unwrap()
            .require_converged()
            .unwrap();
        let rel = (fast.i_out - dense.i_out).abs() / dense.i_out;
        assert!(rel < 1e-3, "relative difference {rel}");
        assert!(fast.i_out < ideal_column_current(&p));
    }

    #[test]
    fn conservation_and_voltage_ordering() {
        let mut r = rng::root(21);
        let s = SolverSettings::default();
        for dev in [DeviceModel::sram8t(2e-6), DeviceModel::reram1t1r(1e-6)] {
            for preset in [WirePreset::M3, WirePreset::M6] {
                let w = WireModel::preset(preset);
                for topo in [Topology::OppositeEnds, Topology::SameEnd] {
                    let stored: Vec<u8> = (0..64).map(|_| r.gen_range(0..2)).collect();
                    let gates: Vec<u8> = (0..64).map(|_| r.gen_range(0..2)).collect();
                    let p =
                        ColumnProblem::new(&stored, &gates, &dev, &w, dev.v_nominal, topo).unwrap();
                    for res in [
                        solve_column_fast(&p, &s).unwrap(),
                        solve_column_dense(&p, &s).unwrap(),
                    ] {
                        assert!(res.converged);
                        // each node may violate KCL by up to tol * i_on
                        let sum: f64 = res.i_cell.iter().sum();
                        assert!((res.i_out - sum).abs() / dev.i_on < 64.0 * s.tol);
                        for k in 0..64 {
                            assert!(res.v_bl[k] >= res.v_sl[k]);
                            assert!((0.0..=p.v_drive).contains(&res.v_bl[k]));
                            assert!((0.0..=p.v_drive).contains(&res.v_sl[k]));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn degradation_is_monotone_in_resistance() {
        let d = DeviceModel::sram8t(2e-6);
        let mut r = rng::root(22);
        let stored: Vec<u8> = (0..64).map(|_| r.gen_range(0..2)).collect();
        let gates: Vec<u8> = (0..64).map(|_| r.gen_range(0..2)).collect();
        let s = SolverSettings {
            tol: 1e-10,
            ..Default::default()
        };
        let run = |w: &WireModel| {
            let p = problem(&stored, &gates, &d, w);
            solve_column_fast(&p, &s)
                .unwrap()
                .require_converged()
                .unwrap()
                .i_out
        };
        let mut prev = f64::INFINITY;
        for step in 0..=20 {
            let mut w = WireModel::preset(WirePreset::M3);
            w.r_bl_per_cell = step as f64 * 5.0;
            let i = run(&w);
            assert!(i <= prev + 1e-15);
            prev = i;
        }
        let mut prev = f64::INFINITY;
        for step in 0..=20 {
            let mut w = WireModel::preset(WirePreset::M3);
            w.r_driver = step as f64 * 250.0;
            let i = run(&w);
            assert!(i <= prev + 1e-15);
            prev = i;
        }
    }

    #[test]
    fn linear_device_matches_closed_form() {
        let d = DeviceModel::sram8t(1e-6)
            .without_leakage()
            .with_conduction(Conduction::Linear);
        let g = d.i_on / d.v_nominal;
        for (n, r) in [
            (1usize, 40.0),
            (4, 20.0),
            (64, 40.0),
            (64, 8.0),
            (128, 25.0),
        ] {
            let mut w = WireModel::preset(WirePreset::Custom);
            w.r_bl_per_cell = r;
            w.r_sl_per_cell = r;
            w.r_driver = 1e3;
            let stored = vec![1u8; n];
            let gates = vec![1u8; n];
            let p = ColumnProblem::new(&stored, &gates, &d, &w, d.v_nominal, Topology::SameEnd)
                .unwrap();
            let expect = linear_ladder_current(n, 2.0 * r, g, w.r_driver, d.v_nominal);
            let tight = SolverSettings {
                tol: 1e-13,
                max_iter: 10_000,
                damping: 0.5,
            };
            // KCL residuals bottom out near 1e-11 i_on from round-off in the
            // wire branches, so the nodal oracle stops a little earlier.
            let dense = solve_column_dense(
                &p,
                &SolverSettings {
                    tol: 1e-10,
                    ..tight
                },
            )
            .unwrap();
            let fast = solve_column_fast(&p, &tight).unwrap();
            assert!(dense.converged && fast.converged);
            assert!(((dense.i_out - expect) / expect).abs() < 1e-9, "n={n}");
            assert!(((fast.i_out - expect) / expect).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn closed_form_small_cases() {
        // one section: V / (Rs + R + 1/G)
        let i = linear_ladder_current(1, 10.0, 0.01, 5.0, 1.0);
        assert!((i - 1.0 / 115.0).abs() < 1e-15);
        // two sections by hand: Z = R + (1/G || (R + 1/G))
        let (r, g) = (10.0, 0.01);
        let inner: f64 = r + 1.0 / g;
        let z = r + 1.0 / (g + 1.0 / inner);
        let i = linear_ladder_current(2, r, g, 0.0, 1.0);
        assert!((i - 1.0 / z).abs() < 1e-15);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let d = DeviceModel::sram8t(2e-6);
        let mut w = WireModel::preset(WirePreset::M3);
        w.r_driver = 1e7;
        let stored = [1u8; 64];
        let gates = [1u8; 64];
        let p = problem(&stored, &gates, &d, &w);
        let s = SolverSettings {
            max_iter: 3,
            ..Default::default()
        };
        let r = solve_column_fast(&p, &s).unwrap();
        assert!(!r.converged);
        assert!(r.residual > s.tol);
        assert!(matches!(
            r.require_converged(),
            Err(Error::NonConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn large_parasitics_still_converge() {
        let d = DeviceModel::sram8t(2e-6);
        let mut w = WireModel::preset(WirePreset::M3);
        w.r_driver = 1e6;
        let stored = [1u8; 64];
        let gates = [1u8; 64];
        let p = problem(&stored, &gates, &d, &w);
        let s = SolverSettings {
            max_iter: 100_000,
            ..Default::default()
        };
        let fast = solve_column_fast(&p, &s).unwrap();
        let dense = solve_column_dense(&p, &s).unwrap();
        assert!(fast.converged && dense.converged);
        assert!((fast.i_out - dense.i_out).abs() / dense.i_out < 5e-3);
        assert!(fast.i_out < 0.7 / 1e6);
    }

    #[test]
    fn shape_errors() {
        let d = DeviceModel::sram8t(1e-6);
        let w = WireModel::ideal();
        assert!(ColumnProblem::new(&[1, 0], &[1], &d, &w, 0.7, Topology::SameEnd).is_err());
        assert!(ColumnProblem::new(&[1], &[1], &d, &w, 0.0, Topology::SameEnd).is_err());
        assert!(ColumnProblem::new(&[2], &[1], &d, &w, 0.7, Topology::SameEnd).is_err());
    }
}
