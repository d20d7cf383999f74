// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlist intermediate representation.
//!
//! Every generator in this crate targets [`Circuit`]: a flat, immutable
//! collection of single-bit nets, primitive gates, enable-controlled
//! registers, and named ports. The simulator and the metric passes consume
//! the same structure, so the representation is deliberately minimal:
//!
//! * every net has exactly one driver (a gate output, a register `q`, or an
//!   input-port bit),
//! * the combinational subgraph is acyclic (registers are cut points),
//! * bit index 0 is the least significant bit everywhere.
//!
//! Circuits are built through [`CircuitBuilder`], which allocates a fresh
//! output net for every gate and register so the single-driver rule holds by
//! construction. Hand-assembled or deserialized circuits are checked with
//! [`Circuit::validate`].

use std::collections::BinaryHeap;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of one single-bit signal inside a circuit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetId(pub u32);

impl NetId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// A bus is an ordered list of nets, index 0 = LSB.
pub type Bus = Vec<NetId>;

/// Primitive gate kinds. Arity is fixed per kind; `MUX2` inputs are ordered
/// `(select, in0, in1)` and the output equals `in0` when `select` is 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Const0,
    Const1,
    Buf,
    Inv,
    And2,
    Or2,
    Xor2,
    Nand2,
    Nor2,
    Mux2,
}

impl GateKind {
    pub const ALL: [GateKind; 10] = [
        GateKind::Const0,
        GateKind::Const1,
        GateKind::Buf,
        GateKind::Inv,
        GateKind::And2,
        GateKind::Or2,
        GateKind::Xor2,
        GateKind::Nand2,
        GateKind::Nor2,
        GateKind::Mux2,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Const0 | GateKind::Const1 => 0,
            GateKind::Buf | GateKind::Inv => 1,
            GateKind::Mux2 => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
            GateKind::Buf => "BUF",
            GateKind::Inv => "INV",
            GateKind::And2 => "AND2",
            GateKind::Or2 => "OR2",
            GateKind::Xor2 => "XOR2",
            GateKind::Nand2 => "NAND2",
            GateKind::Nor2 => "NOR2",
            GateKind::Mux2 => "MUX2",
        }
    }

    pub fn parse(s: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == s)
    }

    /// Evaluate the gate function over up to three input values. Unused
    /// slots are ignored; for `MUX2` the slots are `(select, in0, in1)`.
    #[inline]
    pub fn eval(self, x0: bool, x1: bool, x2: bool) -> bool {
        match self {
            GateKind::Const0 => false,
            GateKind::Const1 => true,
            GateKind::Buf => x0,
            GateKind::Inv => !x0,
            GateKind::And2 => x0 & x1,
            GateKind::Or2 => x0 | x1,
            GateKind::Xor2 => x0 ^ x1,
            GateKind::Nand2 => !(x0 & x1),
            GateKind::Nor2 => !(x0 | x1),
            GateKind::Mux2 => {
                if x0 {
                    x2
                } else {
                    x1
                }
            }
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

/// One register bit. `q` is driven only by the register; when `enable` is 0
/// at a clock step the register holds its previous state. The gated clock of
/// the low-power designs is modeled through `enable` (a cycle simulator has
/// no clock waveform to gate), and the area model charges the gating AND
/// separately per enable group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub d: NetId,
    pub q: NetId,
    pub enable: NetId,
    pub reset: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDir {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub dir: PortDir,
    pub bits: Bus,
}

/// Design annotations. `name`, `width`, and `variant` are first-class keys of
/// the netlist document; everything else (policy, reduction counter tallies,
/// probe net ids) lives in `extra`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CircuitMeta {
    pub name: String,
    pub width: u32,
    pub variant: String,
    pub extra: BTreeMap<String, String>,
}

/// An immutable gate-level circuit. See the module docs for the structural
/// invariants; [`Circuit::validate`] checks all of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub meta: CircuitMeta,
    pub net_count: u32,
    pub gates: Vec<Gate>,
    pub registers: Vec<Register>,
    pub ports: Vec<Port>,
}

/// Who drives a net.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    /// Gate index in `Circuit::gates`.
    Gate(u32),
    /// Register index in `Circuit::registers` (the net is that register's q).
    Register(u32),
    /// Input-port bit: (port index, bit index).
    Input(u32, u32),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("arity mismatch: {kind} expects {expected} inputs, got {got}")]
    ArityMismatch {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("unknown input net {net} for {kind} gate (net table has {count} nets)")]
    UnknownNet {
        kind: GateKind,
        net: NetId,
        count: u32,
    },
    #[error("bus width mismatch in {context}: {left} vs {right}")]
    WidthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },
}

/// Incremental builder for [`Circuit`]. All nets referenced by gates and
/// registers must already exist in this builder; gate and register outputs
/// are always freshly allocated.
#[derive(Debug)]
pub struct CircuitBuilder {
    name: String,
    width: u32,
    variant: String,
    extra: BTreeMap<String, String>,
    net_count: u32,
    gates: Vec<Gate>,
    registers: Vec<Register>,
    ports: Vec<Port>,
    consts: [Option<NetId>; 2],
    tree_full_adders: u64,
    tree_half_adders: u64,
}

impl CircuitBuilder {
    pub fn new(name: impl Into<String>, width: u32, variant: impl Into<String>) -> Self {
        CircuitBuilder {
            name: name.into(),
            width,
            variant: variant.into(),
            extra: BTreeMap::new(),
            net_count: 0,
            gates: Vec::new(),
            registers: Vec::new(),
            ports: Vec::new(),
            consts: [None, None],
            tree_full_adders: 0,
            tree_half_adders: 0,
        }
    }

    fn fresh_net(&mut self) -> NetId {
        let id = NetId(self.net_count);
        self.net_count += 1;
        id
    }

    /// Declare an input port of `width` bits and return its (fresh, undriven)
    /// nets, LSB first.
    pub fn input_port(&mut self, name: impl Into<String>, width: usize) -> Bus {
        let bits: Bus = (0..width).map(|_| self.fresh_net()).collect();
        self.ports.push(Port {
            name: name.into(),
            dir: PortDir::In,
            bits: bits.clone(),
        });
        bits
    }

    /// Declare an output port over already-driven nets, LSB first.
    pub fn output_port(&mut self, name: impl Into<String>, bits: &[NetId]) {
        self.ports.push(Port {
            name: name.into(),
            dir: PortDir::Out,
            bits: bits.to_vec(),
        });
    }

    /// Append a gate; allocates and returns a fresh output net.
    pub fn add_gate(&mut self, kind: GateKind, inputs: &[NetId]) -> Result<NetId, BuildError> {
        if inputs.len() != kind.arity() {
            return Err(BuildError::ArityMismatch {
                kind,
                expected: kind.arity(),
                got: inputs.len(),
            });
        }
        for &n in inputs {
            if n.0 >= self.net_count {
                return Err(BuildError::UnknownNet {
                    kind,
                    net: n,
                    count: self.net_count,
                });
            }
        }
        let output = self.fresh_net();
        self.gates.push(Gate {
            kind,
            inputs: inputs.to_vec(),
            output,
        });
        Ok(output)
    }

    fn must_gate(&mut self, kind: GateKind, inputs: &[NetId]) -> NetId {
        match self.add_gate(kind, inputs) {
            Ok(n) => n,
            Err(e) => panic!("construction fault: {e}"),
        }
    }

    /// Constant-0 net, allocated once per circuit.
    pub fn const0(&mut self) -> NetId {
        if let Some(n) = self.consts[0] {
            return n;
        }
        let n = self.must_gate(GateKind::Const0, &[]);
        self.consts[0] = Some(n);
        n
    }

    /// Constant-1 net, allocated once per circuit.
    pub fn const1(&mut self) -> NetId {
        if let Some(n) = self.consts[1] {
            return n;
        }
        let n = self.must_gate(GateKind::Const1, &[]);
        self.consts[1] = Some(n);
        n
    }

    pub fn buf(&mut self, a: NetId) -> NetId {
        self.must_gate(GateKind::Buf, &[a])
    }

    pub fn inv(&mut self, a: NetId) -> NetId {
        self.must_gate(GateKind::Inv, &[a])
    }

    pub fn and2(&mut self, a: NetId, b: NetId) -> NetId {
        self.must_gate(GateKind::And2, &[a, b])
    }

    pub fn or2(&mut self, a: NetId, b: NetId) -> NetId {
        self.must_gate(GateKind::Or2, &[a, b])
    }

    pub fn xor2(&mut self, a: NetId, b: NetId) -> NetId {
        self.must_gate(GateKind::Xor2, &[a, b])
    }

    /// Output equals `in0` when `select` is 0, `in1` when it is 1.
    pub fn mux2(&mut self, select: NetId, in0: NetId, in1: NetId) -> NetId {
        self.must_gate(GateKind::Mux2, &[select, in0, in1])
    }

    /// Append one register bit and return its `q` net.
    pub fn add_register(&mut self, d: NetId, enable: NetId, reset: bool) -> NetId {
        assert!(
            d.0 < self.net_count && enable.0 < self.net_count,
            "construction fault: register references unknown net"
        );
        let q = self.fresh_net();
        self.registers.push(Register {
            d,
            q,
            enable,
            reset,
        });
        q
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.extra.insert(key.into(), value.into());
    }

    pub fn net_count(&self) -> u32 {
        self.net_count
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Reduction-tree counter bookkeeping; only `gen_reduction` calls these,
    /// so final-adder full adders are not mixed into the tallies.
    pub(crate) fn note_tree_counters(&mut self, full: u64, half: u64) {
        self.tree_full_adders += full;
        self.tree_half_adders += half;
    }

    /// Running (full adder, half adder) tallies of reduction-tree counter
    /// placements.
    pub fn tree_counters(&self) -> (u64, u64) {
        (self.tree_full_adders, self.tree_half_adders)
    }

    pub fn finish(mut self) -> Circuit {
        if self.tree_full_adders > 0 || self.tree_half_adders > 0 {
            self.extra
                .insert("counters_fa".into(), self.tree_full_adders.to_string());
            self.extra
                .insert("counters_ha".into(), self.tree_half_adders.to_string());
        }
        Circuit {
            meta: CircuitMeta {
                name: self.name,
                width: self.width,
                variant: self.variant,
                extra: self.extra,
            },
            net_count: self.net_count,
            gates: self.gates,
            registers: self.registers,
            ports: self.ports,
        }
    }
}

/// One structural violation found by [`Circuit::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MultiDriver { net: NetId },
    UndrivenInput { net: NetId, user: String },
    DanglingPort { port: String, bit: usize },
    DanglingRef { net: NetId, user: String },
    CombinationalCycle { gates: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MultiDriver { net } => write!(f, "multi-driver on net {net}"),
            Violation::UndrivenInput { net, user } => {
                write!(f, "undriven input net {net} ({user})")
            }
            Violation::DanglingPort { port, bit } => {
                write!(f, "dangling output port bit {port}[{bit}]")
            }
            Violation::DanglingRef { net, user } => {
                write!(f, "reference to unknown net {net} ({user})")
            }
            Violation::CombinationalCycle { gates } => {
                write!(f, "combinational cycle through gates {:?}", gates)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return f.write_str("pass");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("combinational cycle through gates {gates:?}")]
pub struct CycleError {
    pub gates: Vec<usize>,
}

impl Circuit {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn input_ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.dir == PortDir::In)
    }

    pub fn output_ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.dir == PortDir::Out)
    }

    /// Driver of every net, or `None` where a net is undriven.
    pub fn driver_map(&self) -> Vec<Option<Driver>> {
        let mut map = vec![None; self.net_count as usize];
        for (i, g) in self.gates.iter().enumerate() {
            if let Some(slot) = map.get_mut(g.output.index()) {
                *slot = Some(Driver::Gate(i as u32));
            }
        }
        for (i, r) in self.registers.iter().enumerate() {
            if let Some(slot) = map.get_mut(r.q.index()) {
                *slot = Some(Driver::Register(i as u32));
            }
        }
        for (pi, p) in self.ports.iter().enumerate() {
            if p.dir == PortDir::In {
                for (bi, n) in p.bits.iter().enumerate() {
                    if let Some(slot) = map.get_mut(n.index()) {
                        *slot = Some(Driver::Input(pi as u32, bi as u32));
                    }
                }
            }
        }
        map
    }

    /// Number of consumers per net: gate inputs, register `d`/`enable` pins,
    /// and output-port bits all count as one load each.
    pub fn fanout_counts(&self) -> Vec<u32> {
        let mut fan = vec![0u32; self.net_count as usize];
        for g in &self.gates {
            for n in &g.inputs {
                if let Some(slot) = fan.get_mut(n.index()) {
                    *slot += 1;
                }
            }
        }
        for r in &self.registers {
            for n in [r.d, r.enable] {
                if let Some(slot) = fan.get_mut(n.index()) {
                    *slot += 1;
                }
            }
        }
        for p in &self.ports {
            if p.dir == PortDir::Out {
                for n in &p.bits {
                    if let Some(slot) = fan.get_mut(n.index()) {
                        *slot += 1;
                    }
                }
            }
        }
        fan
    }

    pub fn gate_counts(&self) -> BTreeMap<GateKind, usize> {
        let mut counts = BTreeMap::new();
        for g in &self.gates {
            *counts.entry(g.kind).or_insert(0) += 1;
        }
        counts
    }

    /// Check every structural invariant; violations are report content, not
    /// errors. Circuits emitted by the generators in this crate validate
    /// clean.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let count = self.net_count;
        let in_range = |n: NetId| n.0 < count;

        for (i, g) in self.gates.iter().enumerate() {
            let user = format!("gate g{i} {}", g.kind);
            for &n in &g.inputs {
                if !in_range(n) {
                    violations.push(Violation::DanglingRef {
                        net: n,
                        user: user.clone(),
                    });
                }
            }
            if !in_range(g.output) {
                violations.push(Violation::DanglingRef {
                    net: g.output,
                    user: user.clone(),
                });
            }
        }
        for (i, r) in self.registers.iter().enumerate() {
            let user = format!("register r{i}");
            for n in [r.d, r.q, r.enable] {
                if !in_range(n) {
                    violations.push(Violation::DanglingRef {
                        net: n,
                        user: user.clone(),
                    });
                }
            }
        }
        for p in &self.ports {
            for &n in &p.bits {
                if !in_range(n) {
                    violations.push(Violation::DanglingRef {
                        net: n,
                        user: format!("port {}", p.name),
                    });
                }
            }
        }
        if !violations.is_empty() {
            // Driver and cycle analysis would index out of bounds.
            return ValidationReport { violations };
        }

        let mut driver_count = vec![0u32; count as usize];
        for g in &self.gates {
            driver_count[g.output.index()] += 1;
        }
        for r in &self.registers {
            driver_count[r.q.index()] += 1;
        }
        for p in &self.ports {
            if p.dir == PortDir::In {
                for n in &p.bits {
                    driver_count[n.index()] += 1;
                }
            }
        }
        for (i, &c) in driver_count.iter().enumerate() {
            if c > 1 {
                violations.push(Violation::MultiDriver {
                    net: NetId(i as u32),
                });
            }
        }

        for (i, g) in self.gates.iter().enumerate() {
            for &n in &g.inputs {
                if driver_count[n.index()] == 0 {
                    violations.push(Violation::UndrivenInput {
                        net: n,
                        user: format!("gate g{i} {}", g.kind),
                    });
                }
            }
        }
        for (i, r) in self.registers.iter().enumerate() {
            for n in [r.d, r.enable] {
                if driver_count[n.index()] == 0 {
                    violations.push(Violation::UndrivenInput {
                        net: n,
                        user: format!("register r{i}"),
                    });
                }
            }
        }
        for p in &self.ports {
            if p.dir == PortDir::Out {
                for (bi, &n) in p.bits.iter().enumerate() {
                    if driver_count[n.index()] == 0 {
                        violations.push(Violation::DanglingPort {
                            port: p.name.clone(),
                            bit: bi,
                        });
                    }
                }
            }
        }

        if let Err(e) = self.levelize() {
            violations.push(Violation::CombinationalCycle { gates: e.gates });
        }

        ValidationReport { violations }
    }

    /// Topological order of the combinational subgraph as gate indices.
    /// Register `q` nets and input ports are level-0 sources; ties are broken
    /// by ascending gate insertion index, so the order is deterministic.
    pub fn levelize(&self) -> Result<Vec<usize>, CycleError> {
        let n_gates = self.gates.len();
        let mut producer = vec![u32::MAX; self.net_count as usize];
        for (i, g) in self.gates.iter().enumerate() {
            if g.output.0 < self.net_count {
                producer[g.output.index()] = i as u32;
            }
        }
        let mut indegree = vec![0u32; n_gates];
        let mut consumers: Vec<Vec<u32>> = vec![Vec::new(); n_gates];
        for (i, g) in self.gates.iter().enumerate() {
            for &input in &g.inputs {
                if input.0 >= self.net_count {
                    continue;
                }
                let p = producer[input.index()];
                if p != u32::MAX {
                    consumers[p as usize].push(i as u32);
                    indegree[i] += 1;
                }
            }
        }

        let mut ready = BinaryHeap::new();
        for (i, &d) in indegree.iter().enumerate() {
            if d == 0 {
                ready.push(std::cmp::Reverse(i as u32));
            }
        }
        let mut order = Vec::with_capacity(n_gates);
        while let Some(std::cmp::Reverse(g)) = ready.pop() {
            order.push(g as usize);
            for &c in &consumers[g as usize] {
                indegree[c as usize] -= 1;
                if indegree[c as usize] == 0 {
                    ready.push(std::cmp::Reverse(c));
                }
            }
        }
        if order.len() != n_gates {
            let gates = indegree
                .iter()
                .enumerate()
                .filter(|(_, &d)| d > 0)
                .map(|(i, _)| i)
                .collect();
            return Err(CycleError { gates });
        }
        Ok(order)
    }
}
