// SPDX-License-Identifier: Apache-2.0

//! Deterministic levelized cycle simulator.
//!
//! Evaluation is single-pass over the topological gate order; registers use
//! enable semantics (`enable = 0` holds state, realizing the gated clock).
//! One step settles the circuit with the current register state, captures
//! enabled registers, re-settles with the new state, and then counts as a
//! toggle every net whose settled value differs from the previous step's
//! settled value — zero-delay semantics, at most one functional transition
//! per net per cycle, no glitches.
//!
//! The toggle baseline is the power-on state: all inputs zero, registers at
//! their reset values. Weighted toggle totals multiply each net's count by
//! `1 + fanout` as a crude load proxy.

use serde::Serialize;
use thiserror::Error;

use crate::multipliers::{
    expected_product, OperationMode, VariantTag, PROBE_INC_INPUT, PROBE_M4_HIGH, PROBE_MERGE_COUT,
    PROBE_MERGE_TOP, PROBE_SELECT, PROBE_TWIN_PREKILL,
};
use crate::netlist::{Circuit, GateKind, NetId, PortDir, ValidationReport};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("circuit does not validate:\n{0}")]
    InvalidCircuit(ValidationReport),
    #[error("unknown port '{0}'")]
    UnknownPort(String),
    #[error("port '{port}' is {width} bits; value {value:#x} does not fit")]
    ValueTooWide { port: String, width: usize, value: u128 },
    #[error("missing input assignment for port '{0}'")]
    MissingInput(String),
    #[error("mode {mode} is not supported by variant {variant}")]
    UnsupportedMode { variant: VariantTag, mode: OperationMode },
    #[error("exhaustive verification is limited to widths <= 8, got {0}")]
    ExhaustiveTooWide(u32),
    #[error(transparent)]
    Gen(#[from] crate::multipliers::GenError),
}

#[derive(Clone, Copy)]
struct Op {
    kind: GateKind,
    a: u32,
    b: u32,
    c: u32,
    out: u32,
}

#[derive(Clone, Copy)]
struct RegOp {
    d: u32,
    q: u32,
    enable: u32,
}

/// Per-net and aggregate switching counts; the dynamic-power proxy.
#[derive(Clone, Debug, Default)]
pub struct ToggleStats {
    pub per_net: Vec<u64>,
    pub total: u64,
    pub weighted_total: u64,
    pub cycles: u64,
}

impl ToggleStats {
    pub fn toggles_per_cycle(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.total as f64 / self.cycles as f64
        }
    }

    pub fn weighted_per_cycle(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.weighted_total as f64 / self.cycles as f64
        }
    }

    /// Stats from independent runs merge by addition.
    pub fn merge(&mut self, other: &ToggleStats) {
        if self.per_net.len() < other.per_net.len() {
            self.per_net.resize(other.per_net.len(), 0);
        }
        for (a, b) in self.per_net.iter_mut().zip(other.per_net.iter()) {
            *a += b;
        }
        self.total += other.total;
        self.weighted_total += other.weighted_total;
        self.cycles += other.cycles;
    }
}

/// A single-owner simulation of one immutable circuit.
pub struct Simulator<'a> {
    circuit: &'a Circuit,
    ops: Vec<Op>,
    reg_ops: Vec<RegOp>,
    input_nets: Vec<Vec<u32>>,
    input_names: Vec<String>,
    pending: Vec<u128>,
    values: Vec<bool>,
    prev: Vec<bool>,
    regs: Vec<bool>,
    weights: Vec<u64>,
    toggles: Vec<u64>,
    total_toggles: u64,
    weighted_toggles: u64,
    cycles: u64,
}

impl<'a> Simulator<'a> {
    /// Levelize and compile the circuit, then settle the power-on state
    /// (all inputs zero, registers at reset) as the toggle baseline.
    pub fn new(circuit: &'a Circuit) -> Result<Self, SimError> {
        let report = circuit.validate();
        if !report.is_clean() {
            return Err(SimError::InvalidCircuit(report));
        }
        let order = circuit.levelize().expect("validated circuits are acyclic");
        let ops = order
            .iter()
            .map(|&i| {
                let g = &circuit.gates[i];
                let pick = |slot: usize| g.inputs.get(slot).map_or(0, |n| n.0);
                Op {
                    kind: g.kind,
                    a: pick(0),
                    b: pick(1),
                    c: pick(2),
                    out: g.output.0,
                }
            })
            .collect();
        let reg_ops = circuit
            .registers
            .iter()
            .map(|r| RegOp {
                d: r.d.0,
                q: r.q.0,
                enable: r.enable.0,
            })
            .collect();
        let mut input_nets = Vec::new();
        let mut input_names = Vec::new();
        for p in circuit.ports.iter().filter(|p| p.dir == PortDir::In) {
            input_nets.push(p.bits.iter().map(|n| n.0).collect());
            input_names.push(p.name.clone());
        }
        let nets = circuit.net_count as usize;
        let weights = circuit
            .fanout_counts()
            .iter()
            .map(|&f| 1 + f as u64)
            .collect();
        let mut sim = Simulator {
            circuit,
            ops,
            reg_ops,
            input_nets,
            input_names,
            pending: vec![0; circuit.input_ports().count()],
            values: vec![false; nets],
            prev: vec![false; nets],
            regs: circuit.registers.iter().map(|r| r.reset).collect(),
            weights,
            toggles: vec![0; nets],
            total_toggles: 0,
            weighted_toggles: 0,
            cycles: 0,
        };
        sim.settle_current();
        sim.prev.copy_from_slice(&sim.values);
        Ok(sim)
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    pub fn input_port_names(&self) -> &[String] {
        &self.input_names
    }

    fn input_index(&self, port: &str) -> Result<usize, SimError> {
        self.input_names
            .iter()
            .position(|n| n == port)
            .ok_or_else(|| SimError::UnknownPort(port.to_string()))
    }

    /// Stage a value on an input port; it is applied by the next settle or
    /// step and held until changed.
    pub fn set_input(&mut self, port: &str, value: u128) -> Result<(), SimError> {
        let idx = self.input_index(port)?;
        let width = self.input_nets[idx].len();
        if width < 128 && value >> width != 0 {
            return Err(SimError::ValueTooWide {
                port: port.to_string(),
                width,
                value,
            });
        }
        self.pending[idx] = value;
        Ok(())
    }

    /// Stage a value by input-port position (declaration order).
    pub fn set_input_by_index(&mut self, idx: usize, value: u128) {
        self.pending[idx] = value;
    }

    fn apply_inputs(&mut self) {
        for (nets, &value) in self.input_nets.iter().zip(self.pending.iter()) {
            for (bit, &net) in nets.iter().enumerate() {
                self.values[net as usize] = (value >> bit) & 1 != 0;
            }
        }
    }

    fn apply_regs(&mut self) {
        for (r, &v) in self.reg_ops.iter().zip(self.regs.iter()) {
            self.values[r.q as usize] = v;
        }
    }

    fn eval_gates(&mut self) {
        for op in &self.ops {
            let v = op.kind.eval(
                self.values[op.a as usize],
                self.values[op.b as usize],
                self.values[op.c as usize],
            );
            self.values[op.out as usize] = v;
        }
    }

    /// Combinational settle with the staged inputs and the current register
    /// state. No cycle or toggle accounting.
    pub fn settle_current(&mut self) {
        self.apply_inputs();
        self.apply_regs();
        self.eval_gates();
    }

    /// One clock step: settle, capture enabled registers, settle with the
    /// new state, then account one toggle for every net that changed since
    /// the previous step. Returns the number of nets that toggled.
    pub fn step(&mut self) -> u64 {
        self.settle_current();
        if !self.reg_ops.is_empty() {
            let mut changed = false;
            for (i, r) in self.reg_ops.iter().enumerate() {
                if self.values[r.enable as usize] {
                    let d = self.values[r.d as usize];
                    if self.regs[i] != d {
                        self.regs[i] = d;
                        changed = true;
                    }
                }
            }
            if changed {
                self.apply_regs();
                self.eval_gates();
            }
        }
        let mut delta = 0u64;
        let mut weighted = 0u64;
        for i in 0..self.values.len() {
            if self.values[i] != self.prev[i] {
                self.prev[i] = self.values[i];
                self.toggles[i] += 1;
                delta += 1;
                weighted += self.weights[i];
            }
        }
        self.total_toggles += delta;
        self.weighted_toggles += weighted;
        self.cycles += 1;
        delta
    }

    pub fn net_value(&self, net: NetId) -> bool {
        self.values[net.index()]
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn register_values(&self) -> &[bool] {
        &self.regs
    }

    pub fn set_register_values(&mut self, regs: &[bool]) {
        self.regs.copy_from_slice(regs);
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    /// Read a port (input or output) as an integer, LSB at bit 0.
    pub fn output(&self, port: &str) -> Result<u128, SimError> {
        let p = self
            .circuit
            .port(port)
            .ok_or_else(|| SimError::UnknownPort(port.to_string()))?;
        let mut v = 0u128;
        for (bit, n) in p.bits.iter().enumerate() {
            v |= (self.values[n.index()] as u128) << bit;
        }
        Ok(v)
    }

    pub fn toggle_stats(&self) -> ToggleStats {
        ToggleStats {
            per_net: self.toggles.clone(),
            total: self.total_toggles,
            weighted_total: self.weighted_toggles,
            cycles: self.cycles,
        }
    }

    /// Step once per stimulus; each stimulus assigns all input ports in
    /// declaration order. Returns the aggregate toggle statistics.
    pub fn run(&mut self, vectors: &[Vec<u128>]) -> ToggleStats {
        for v in vectors {
            debug_assert_eq!(v.len(), self.pending.len());
            self.pending.copy_from_slice(v);
            self.step();
        }
        self.toggle_stats()
    }
}

/// One-shot settle of a combinational snapshot: registers sit at their reset
/// values, the assignment must cover every input port. Returns the value of
/// every net.
pub fn settle(circuit: &Circuit, inputs: &[(&str, u128)]) -> Result<Vec<bool>, SimError> {
    let mut sim = Simulator::new(circuit)?;
    for name in sim.input_port_names().to_vec() {
        if !inputs.iter().any(|(n, _)| *n == name) {
            return Err(SimError::MissingInput(name));
        }
    }
    for (name, v) in inputs {
        sim.set_input(name, *v)?;
    }
    sim.settle_current();
    Ok(sim.values().to_vec())
}

/// Verification case source.
#[derive(Clone, Copy, Debug)]
pub enum VerifyStrategy {
    Exhaustive,
    Random { seed: u64, cases: u64 },
}

impl VerifyStrategy {
    fn describe(self) -> String {
        match self {
            VerifyStrategy::Exhaustive => "exhaustive".to_string(),
            VerifyStrategy::Random { seed, cases } => {
                format!("random(seed={seed:#x}, cases={cases})")
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Mismatch {
    pub case_index: u64,
    pub x: u64,
    pub y: u64,
    pub expected: String,
    pub actual: String,
}

/// Carry-headroom and carry-kill monitor results. The headroom bounds hold
/// per sub-product, so they are checked in every mode; the twin carry-kill
/// check only applies to twin-mode cases (the carry flows legitimately in
/// full mode).
#[derive(Clone, Debug, Default, Serialize)]
pub struct MonitorSummary {
    /// Merge adder overflow (bit N plus twice its carry-out) exceeded 1.
    pub merge_overflow_violations: u64,
    /// M4's high half was all-ones.
    pub m4_saturation_violations: u64,
    /// The select carry fired while the incrementer input was all-ones,
    /// which would wrap the selected increment.
    pub increment_wrap_violations: u64,
    /// The pre-kill ripple carry was high in twin mode.
    pub carry_kill_violations: u64,
    pub cases_checked: u64,
}

impl MonitorSummary {
    pub fn is_clean(&self) -> bool {
        self.merge_overflow_violations == 0
            && self.m4_saturation_violations == 0
            && self.increment_wrap_violations == 0
            && self.carry_kill_violations == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub variant: String,
    pub mode: String,
    pub width: u32,
    pub strategy: String,
    pub passes: u64,
    pub failures: u64,
    pub first_failure: Option<Mismatch>,
    pub monitor: Option<MonitorSummary>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures == 0 && self.monitor.as_ref().is_none_or(|m| m.is_clean())
    }
}

struct Probes {
    merge_top: Option<u32>,
    merge_cout: Option<u32>,
    select: Option<u32>,
    m4_high: Vec<u32>,
    inc_input: Vec<u32>,
    twin_prekill: Option<u32>,
}

fn parse_probe_net(meta: &std::collections::BTreeMap<String, String>, key: &str) -> Option<u32> {
    meta.get(key).and_then(|s| s.parse().ok())
}

fn parse_probe_nets(meta: &std::collections::BTreeMap<String, String>, key: &str) -> Vec<u32> {
    meta.get(key)
        .map(|s| s.split(',').filter_map(|t| t.parse().ok()).collect())
        .unwrap_or_default()
}

impl Probes {
    fn from_circuit(c: &Circuit) -> Probes {
        let meta = &c.meta.extra;
        Probes {
            merge_top: parse_probe_net(meta, PROBE_MERGE_TOP),
            merge_cout: parse_probe_net(meta, PROBE_MERGE_COUT),
            select: parse_probe_net(meta, PROBE_SELECT),
            m4_high: parse_probe_nets(meta, PROBE_M4_HIGH),
            inc_input: parse_probe_nets(meta, PROBE_INC_INPUT),
            twin_prekill: parse_probe_net(meta, PROBE_TWIN_PREKILL),
        }
    }

    fn any(&self) -> bool {
        self.merge_top.is_some() || self.twin_prekill.is_some()
    }

    fn check(&self, sim: &Simulator, mode: OperationMode, summary: &mut MonitorSummary) {
        summary.cases_checked += 1;
        if let (Some(top), Some(cout)) = (self.merge_top, self.merge_cout) {
            let overflow = sim.values[top as usize] as u8 + 2 * sim.values[cout as usize] as u8;
            if overflow > 1 {
                summary.merge_overflow_violations += 1;
            }
        }
        if !self.m4_high.is_empty() && self.m4_high.iter().all(|&n| sim.values[n as usize]) {
            summary.m4_saturation_violations += 1;
        }
        if let Some(select) = self.select {
            if sim.values[select as usize]
                && !self.inc_input.is_empty()
                && self.inc_input.iter().all(|&n| sim.values[n as usize])
            {
                summary.increment_wrap_violations += 1;
            }
        }
        if mode == OperationMode::Twin {
            if let Some(prekill) = self.twin_prekill {
                if sim.values[prekill as usize] {
                    summary.carry_kill_violations += 1;
                }
            }
        }
    }
}

/// Drive one `(x, y)` case through a simulator in the given mode and return
/// the product port value. Sequential circuits are driven as one clock step
/// and the output is read the same step the operands are captured.
pub fn drive_case(
    sim: &mut Simulator,
    variant: VariantTag,
    mode: OperationMode,
    x: u64,
    y: u64,
) -> Result<u128, SimError> {
    sim.set_input("x", x as u128)?;
    sim.set_input("y", y as u128)?;
    match variant {
        VariantTag::TwinRegular => {
            sim.set_input("twin", (mode == OperationMode::Twin) as u128)?;
        }
        VariantTag::RecursiveBecGated => {
            sim.set_input("mode", mode.code() as u128)?;
        }
        _ => {}
    }
    if sim.circuit().registers.is_empty() {
        sim.settle_current();
    } else {
        sim.step();
    }
    sim.output("p")
}

/// Differential verification of a circuit against the wide-integer golden
/// model. Exhaustive strategy covers all operand pairs (widths up to 8);
/// the random strategy draws seeded uniform pairs. Invariant monitors run
/// whenever the circuit carries probe annotations.
pub fn verify(
    circuit: &Circuit,
    variant: VariantTag,
    mode: OperationMode,
    strategy: VerifyStrategy,
) -> Result<VerifyReport, SimError> {
    use rand::{Rng, SeedableRng};

    if !variant.supported_modes().contains(&mode) {
        return Err(SimError::UnsupportedMode { variant, mode });
    }
    let width = circuit.meta.width;
    let probes = Probes::from_circuit(circuit);
    let mut monitor = probes.any().then(MonitorSummary::default);
    let mut sim = Simulator::new(circuit)?;
    let mut passes = 0u64;
    let mut failures = 0u64;
    let mut first_failure = None;

    let mut run_case = |sim: &mut Simulator, index: u64, x: u64, y: u64| -> Result<(), SimError> {
        let actual = drive_case(sim, variant, mode, x, y)?;
        let expected = expected_product(variant, mode, width, x, y)?;
        if actual == expected {
            passes += 1;
        } else {
            failures += 1;
            if first_failure.is_none() {
                first_failure = Some(Mismatch {
                    case_index: index,
                    x,
                    y,
                    expected: format!("{expected:#x}"),
                    actual: format!("{actual:#x}"),
                });
            }
        }
        if let Some(m) = monitor.as_mut() {
            probes.check(sim, mode, m);
        }
        Ok(())
    };

    match strategy {
        VerifyStrategy::Exhaustive => {
            if width > 8 {
                return Err(SimError::ExhaustiveTooWide(width));
            }
            let limit = 1u64 << width;
            let mut index = 0;
            for x in 0..limit {
                for y in 0..limit {
                    run_case(&mut sim, index, x, y)?;
                    index += 1;
                }
            }
        }
        VerifyStrategy::Random { seed, cases } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mask = if width == 64 {
                u64::MAX
            } else {
                (1u64 << width) - 1
            };
            for index in 0..cases {
                let x = rng.gen::<u64>() & mask;
                let y = rng.gen::<u64>() & mask;
                run_case(&mut sim, index, x, y)?;
            }
        }
    }

    Ok(VerifyReport {
        variant: variant.as_str().to_string(),
        mode: mode.as_str().to_string(),
        width,
        strategy: strategy.describe(),
        passes,
        failures,
        first_failure,
        monitor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks;
    use crate::multipliers::{gen_recursive_bec_gated, gen_recursive_rca, PROBE_ENABLES};
    use crate::netlist::{CircuitBuilder, Driver};
    use crate::blocks::ReductionPolicy;
    use rand::{Rng, SeedableRng};

    #[test]
    fn settle_evaluates_primitives() {
        let mut b = CircuitBuilder::new("prims", 0, "test");
        let a = b.input_port("a", 1);
        let inv = b.inv(a[0]);
        let one = b.const1();
        b.output_port("ninv", &[inv]);
        b.output_port("one", &[one]);
        let c = b.finish();
        let values = settle(&c, &[("a", 1)]).unwrap();
        assert!(!values[inv.index()]);
        assert!(values[one.index()]);
        let values = settle(&c, &[("a", 0)]).unwrap();
        assert!(values[inv.index()]);
        assert!(values[one.index()]);
    }

    #[test]
    fn settle_requires_all_inputs() {
        let mut b = CircuitBuilder::new("t", 0, "test");
        let a = b.input_port("a", 1);
        let x = b.input_port("b", 1);
        let o = b.and2(a[0], x[0]);
        b.output_port("o", &[o]);
        let c = b.finish();
        assert!(matches!(
            settle(&c, &[("a", 1)]),
            Err(SimError::MissingInput(p)) if p == "b"
        ));
    }

    #[test]
    fn hold_semantics_keep_q_constant() {
        let mut b = CircuitBuilder::new("reg", 0, "test");
        let d = b.input_port("d", 1);
        let en = b.input_port("en", 1);
        let q = b.add_register(d[0], en[0], false);
        b.output_port("q", &[q]);
        let c = b.finish();
        let mut sim = Simulator::new(&c).unwrap();
        sim.set_input("en", 0).unwrap();
        for i in 0..10u64 {
            sim.set_input("d", (i % 2) as u128).unwrap();
            sim.step();
            assert_eq!(sim.output("q").unwrap(), 0, "held register moved");
        }
        let stats = sim.toggle_stats();
        assert_eq!(stats.per_net[q.index()], 0, "held q contributed toggles");
        // Enabled register captures.
        sim.set_input("en", 1).unwrap();
        sim.set_input("d", 1).unwrap();
        sim.step();
        assert_eq!(sim.output("q").unwrap(), 1);
    }

    #[test]
    fn inverter_sequence_counts_one_flip_per_net() {
        let mut b = CircuitBuilder::new("inv", 0, "test");
        let a = b.input_port("a", 1);
        let o = b.inv(a[0]);
        b.output_port("o", &[o]);
        let c = b.finish();
        let mut sim = Simulator::new(&c).unwrap();
        sim.set_input("a", 0).unwrap();
        sim.step();
        sim.set_input("a", 1).unwrap();
        sim.step();
        // Input and output each flip exactly once across the 0,1 sequence.
        assert_eq!(sim.toggle_stats().total, 2);
    }

    #[test]
    fn empty_run_and_constant_fixed_point() {
        let c = gen_recursive_rca(4, ReductionPolicy::Dadda).unwrap();
        let mut sim = Simulator::new(&c).unwrap();
        let stats = sim.run(&[]);
        assert_eq!(stats.cycles, 0);
        assert_eq!(stats.total, 0);

        let vectors: Vec<Vec<u128>> = (0..5).map(|_| vec![9, 13]).collect();
        let mut sim = Simulator::new(&c).unwrap();
        sim.pending.copy_from_slice(&[9, 13]);
        sim.step();
        let after_first = sim.toggle_stats().total;
        let stats = sim.run(&vectors);
        assert_eq!(
            stats.total, after_first,
            "constant vectors toggled nets after the first cycle"
        );
    }

    #[test]
    fn settling_twice_changes_nothing() {
        let c = gen_recursive_rca(8, ReductionPolicy::Wallace).unwrap();
        let mut sim = Simulator::new(&c).unwrap();
        sim.set_input("x", 0xAB).unwrap();
        sim.set_input("y", 0x5C).unwrap();
        sim.settle_current();
        let first = sim.values().to_vec();
        sim.settle_current();
        assert_eq!(sim.values(), &first[..]);
    }

    #[test]
    fn runs_are_deterministic() {
        let c = crate::multipliers::gen_hpm_plain(16, ReductionPolicy::HpmRegular).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let vectors: Vec<Vec<u128>> = (0..500)
            .map(|_| vec![rng.gen::<u64>() as u128 & 0xffff, rng.gen::<u64>() as u128 & 0xffff])
            .collect();
        let s1 = Simulator::new(&c).unwrap().run(&vectors);
        let s2 = Simulator::new(&c).unwrap().run(&vectors);
        assert_eq!(s1.per_net, s2.per_net);
        assert_eq!(s1.total, s2.total);
        assert_eq!(s1.weighted_total, s2.weighted_total);
    }

    /// Iterate-until-stable reference evaluator; slow but obviously correct.
    fn fixed_point_eval(c: &Circuit, inputs: &[(&str, u128)]) -> Vec<bool> {
        let mut values = vec![false; c.net_count as usize];
        for (name, v) in inputs {
            let p = c.port(name).unwrap();
            for (bit, n) in p.bits.iter().enumerate() {
                values[n.index()] = (v >> bit) & 1 != 0;
            }
        }
        for r in &c.registers {
            values[r.q.index()] = r.reset;
        }
        for _pass in 0..c.gates.len() + 2 {
            let mut changed = false;
            for g in &c.gates {
                let pick = |slot: usize| g.inputs.get(slot).is_some_and(|n| values[n.index()]);
                let v = g.kind.eval(pick(0), pick(1), pick(2));
                if values[g.output.index()] != v {
                    values[g.output.index()] = v;
                    changed = true;
                }
            }
            if !changed {
                return values;
            }
        }
        panic!("no fixed point");
    }

    #[test]
    fn single_pass_matches_fixed_point_exhaustively_at_n4() {
        let c = gen_recursive_rca(4, ReductionPolicy::HpmRegular).unwrap();
        for x in 0..16u128 {
            for y in 0..16u128 {
                let fast = settle(&c, &[("x", x), ("y", y)]).unwrap();
                let slow = fixed_point_eval(&c, &[("x", x), ("y", y)]);
                assert_eq!(fast, slow, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn single_pass_matches_fixed_point_on_random_vectors_at_n8() {
        let c = gen_recursive_rca(8, ReductionPolicy::Dadda).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let x = (rng.gen::<u64>() & 0xff) as u128;
            let y = (rng.gen::<u64>() & 0xff) as u128;
            let fast = settle(&c, &[("x", x), ("y", y)]).unwrap();
            let slow = fixed_point_eval(&c, &[("x", x), ("y", y)]);
            assert_eq!(fast, slow, "x={x} y={y}");
        }
    }

    #[test]
    fn verify_exhaustive_n4() {
        let c = gen_recursive_rca(4, ReductionPolicy::Dadda).unwrap();
        let report = verify(
            &c,
            VariantTag::RecursiveRca,
            OperationMode::Full,
            VerifyStrategy::Exhaustive,
        )
        .unwrap();
        assert_eq!(report.passes, 256);
        assert_eq!(report.failures, 0);
        assert!(report.monitor.as_ref().unwrap().is_clean());
        assert!(report.ok());
    }

    #[test]
    fn verify_finds_an_injected_fault() {
        let mut c = gen_recursive_rca(4, ReductionPolicy::Dadda).unwrap();
        // Logically remove one inverter by turning it into a buffer.
        let idx = c
            .gates
            .iter()
            .position(|g| g.kind == GateKind::Inv)
            .or_else(|| c.gates.iter().position(|g| g.kind == GateKind::Xor2))
            .unwrap();
        if c.gates[idx].kind == GateKind::Xor2 {
            c.gates[idx].kind = GateKind::Or2;
        } else {
            c.gates[idx].kind = GateKind::Buf;
        }
        let report = verify(
            &c,
            VariantTag::RecursiveRca,
            OperationMode::Full,
            VerifyStrategy::Exhaustive,
        )
        .unwrap();
        assert!(report.failures > 0);
        assert!(report.first_failure.is_some());
    }

    #[test]
    fn gating_cone_stays_silent_in_single_mode() {
        let c = gen_recursive_bec_gated(8, ReductionPolicy::HpmRegular).unwrap();
        let enables: Vec<u32> = c.meta.extra[PROBE_ENABLES]
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        let held: Vec<usize> = c
            .registers
            .iter()
            .filter(|r| r.enable.0 == enables[1] || r.enable.0 == enables[2])
            .map(|r| r.q.index())
            .collect();

        // Exclusive fanout cone of the held banks: nets reachable from their
        // q outputs but not from any varying source (input ports or other
        // register outputs).
        let order = c.levelize().unwrap();
        let mut from_held = vec![false; c.net_count as usize];
        let mut from_varying = vec![false; c.net_count as usize];
        for &q in &held {
            from_held[q] = true;
        }
        for p in c.input_ports() {
            for n in &p.bits {
                from_varying[n.index()] = true;
            }
        }
        for r in &c.registers {
            if !held.contains(&r.q.index()) {
                from_varying[r.q.index()] = true;
            }
        }
        for &gi in &order {
            let g = &c.gates[gi];
            let h = g.inputs.iter().any(|n| from_held[n.index()]);
            let v = g.inputs.iter().any(|n| from_varying[n.index()]);
            if h {
                from_held[g.output.index()] = true;
            }
            if v {
                from_varying[g.output.index()] = true;
            }
        }
        let exclusive: Vec<usize> = (0..c.net_count as usize)
            .filter(|&n| from_held[n] && !from_varying[n])
            .collect();
        assert!(!exclusive.is_empty(), "cone computation found nothing");

        let mut sim = Simulator::new(&c).unwrap();
        // Load all banks once in full mode, then hold M2/M3/M4.
        sim.set_input("x", 0x5A).unwrap();
        sim.set_input("y", 0xC3).unwrap();
        sim.set_input("mode", OperationMode::Full.code() as u128).unwrap();
        sim.step();
        let baseline = sim.toggle_stats();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        sim.set_input("mode", OperationMode::OnlyM1.code() as u128).unwrap();
        for _ in 0..200 {
            sim.set_input("x", (rng.gen::<u64>() & 0xff) as u128).unwrap();
            sim.set_input("y", (rng.gen::<u64>() & 0xff) as u128).unwrap();
            sim.step();
        }
        let after = sim.toggle_stats();
        for &n in &exclusive {
            assert_eq!(
                after.per_net[n], baseline.per_net[n],
                "net n{n} toggled inside the held cone"
            );
        }
    }

    #[test]
    fn single_mode_toggles_less_than_full_mode() {
        let c = gen_recursive_bec_gated(8, ReductionPolicy::HpmRegular).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let pairs: Vec<(u128, u128)> = (0..1000)
            .map(|_| ((rng.gen::<u64>() & 0xff) as u128, (rng.gen::<u64>() & 0xff) as u128))
            .collect();
        let run_mode = |mode: OperationMode| {
            let mut sim = Simulator::new(&c).unwrap();
            let vectors: Vec<Vec<u128>> = pairs
                .iter()
                .map(|&(x, y)| vec![x, y, mode.code() as u128])
                .collect();
            sim.run(&vectors)
        };
        let single = run_mode(OperationMode::OnlyM1);
        let full = run_mode(OperationMode::Full);
        assert!(
            single.weighted_total < full.weighted_total,
            "single {} !< full {}",
            single.weighted_total,
            full.weighted_total
        );
    }

    #[test]
    fn weighted_totals_use_fanout_plus_one() {
        let mut b = CircuitBuilder::new("w", 0, "test");
        let a = b.input_port("a", 1);
        let x = b.inv(a[0]);
        let y = b.inv(x);
        let z = b.inv(x);
        b.output_port("y", &[y]);
        b.output_port("z", &[z]);
        let c = b.finish();
        let mut sim = Simulator::new(&c).unwrap();
        sim.set_input("a", 0).unwrap();
        sim.step();
        sim.set_input("a", 1).unwrap();
        sim.step();
        // a: fanout 1 -> weight 2; x: fanout 2 -> weight 3;
        // y, z: fanout 1 (port) -> weight 2 each. All toggle once.
        assert_eq!(sim.toggle_stats().weighted_total, 2 + 3 + 2 + 2);
        // Driver map sanity for the same circuit.
        let drivers = c.driver_map();
        assert_eq!(drivers[a[0].index()], Some(Driver::Input(0, 0)));
        assert_eq!(drivers[x.index()], Some(Driver::Gate(0)));
    }

    #[test]
    fn stats_merge_by_addition() {
        let c = crate::multipliers::gen_hpm_plain(4, ReductionPolicy::Dadda).unwrap();
        let vectors: Vec<Vec<u128>> = vec![vec![3, 5], vec![9, 2], vec![15, 15]];
        let mut whole = Simulator::new(&c).unwrap().run(&vectors);
        let empty = ToggleStats::default();
        let mut merged = empty.clone();
        merged.merge(&whole);
        assert_eq!(merged.total, whole.total);
        whole.merge(&empty);
        assert_eq!(merged.total, whole.total);
    }

    #[test]
    fn reduction_identity_case_keeps_blocks_usable() {
        // Direct use of blocks in a sequential circuit exercises settle +
        // step together.
        let mut b = CircuitBuilder::new("mix", 0, "test");
        let a = b.input_port("a", 2);
        let en = b.const1();
        let q0 = b.add_register(a[0], en, false);
        let q1 = b.add_register(a[1], en, false);
        let (s, cy) = blocks::gen_half_adder(&mut b, q0, q1);
        b.output_port("o", &[s, cy]);
        let c = b.finish();
        let mut sim = Simulator::new(&c).unwrap();
        sim.set_input("a", 0b11).unwrap();
        sim.step();
        assert_eq!(sim.output("o").unwrap(), 0b10);
    }
}
