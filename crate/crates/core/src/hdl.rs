// SPDX-License-Identifier: Apache-2.0

//! Flat structural HDL export and the matching reader.
//!
//! One primitive instance per gate, one `DFFE` storage primitive per
//! register bit, nets named `n<i>` after their ids, input-port bits bound
//! with `assign n<i> = port[bit];` and output bits with
//! `assign port[bit] = n<i>;`. Design annotations ride in `//` header
//! comments so a round trip through [`emit`] and [`parse`] reconstructs the
//! circuit exactly, meta included. The text is plain enough for external
//! structural simulators.
//!
//! Instance pin names: unary gates `(.a, .y)`, binary `(.a, .b, .y)`,
//! `MUX2 (.s, .a, .b, .y)` with `.a` selected when `.s` is 0, constants
//! `(.y)`, and `DFFE (.d, .en, .q)` with an optional `#(.RESET(1'b1))`
//! parameter.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use regex::Regex;
use thiserror::Error;

use crate::netlist::{
    Circuit, CircuitMeta, Gate, GateKind, NetId, Port, PortDir, Register,
};

#[derive(Debug, Error)]
pub enum HdlError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("module is missing required header comment '{0}'")]
    MissingHeader(&'static str),
    #[error("port '{port}' bit {bit} has no net binding")]
    UnboundPortBit { port: String, bit: usize },
}

fn err(line: usize, message: impl Into<String>) -> HdlError {
    HdlError::Parse {
        line,
        message: message.into(),
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Emit the circuit as flat structural HDL text.
pub fn emit(circuit: &Circuit) -> String {
    let mut out = String::new();
    let meta = &circuit.meta;
    writeln!(out, "// netlist: {}", meta.name).unwrap();
    writeln!(out, "// width: {}", meta.width).unwrap();
    writeln!(out, "// variant: {}", meta.variant).unwrap();
    for (k, v) in &meta.extra {
        writeln!(out, "// meta {k}: {v}").unwrap();
    }
    writeln!(out, "module {} (", sanitize(&meta.name)).unwrap();
    for (i, p) in circuit.ports.iter().enumerate() {
        let dir = match p.dir {
            PortDir::In => "input",
            PortDir::Out => "output",
        };
        let range = if p.bits.len() > 1 {
            format!("[{}:0] ", p.bits.len() - 1)
        } else {
            String::new()
        };
        let comma = if i + 1 < circuit.ports.len() { "," } else { "" };
        writeln!(out, "  {dir} {range}{}{comma}", p.name).unwrap();
    }
    writeln!(out, ");").unwrap();

    for chunk_start in (0..circuit.net_count).step_by(16) {
        let names: Vec<String> = (chunk_start..(chunk_start + 16).min(circuit.net_count))
            .map(|i| format!("n{i}"))
            .collect();
        writeln!(out, "  wire {};", names.join(", ")).unwrap();
    }

    for p in circuit.ports.iter().filter(|p| p.dir == PortDir::In) {
        for (bit, n) in p.bits.iter().enumerate() {
            if p.bits.len() > 1 {
                writeln!(out, "  assign {n} = {}[{bit}];", p.name).unwrap();
            } else {
                writeln!(out, "  assign {n} = {};", p.name).unwrap();
            }
        }
    }

    for (i, g) in circuit.gates.iter().enumerate() {
        let pins = match g.kind.arity() {
            0 => format!(".y({})", g.output),
            1 => format!(".a({}), .y({})", g.inputs[0], g.output),
            2 => format!(
                ".a({}), .b({}), .y({})",
                g.inputs[0], g.inputs[1], g.output
            ),
            _ => format!(
                ".s({}), .a({}), .b({}), .y({})",
                g.inputs[0], g.inputs[1], g.inputs[2], g.output
            ),
        };
        writeln!(out, "  {} g{i} ({pins});", g.kind.name()).unwrap();
    }
    for (i, r) in circuit.registers.iter().enumerate() {
        let param = if r.reset { " #(.RESET(1'b1))" } else { "" };
        writeln!(
            out,
            "  DFFE{param} r{i} (.d({}), .en({}), .q({}));",
            r.d, r.enable, r.q
        )
        .unwrap();
    }

    for p in circuit.ports.iter().filter(|p| p.dir == PortDir::Out) {
        for (bit, n) in p.bits.iter().enumerate() {
            if p.bits.len() > 1 {
                writeln!(out, "  assign {}[{bit}] = {n};", p.name).unwrap();
            } else {
                writeln!(out, "  assign {} = {n};", p.name).unwrap();
            }
        }
    }
    writeln!(out, "endmodule").unwrap();
    out
}

fn parse_net(token: &str, line: usize) -> Result<NetId, HdlError> {
    token
        .strip_prefix('n')
        .and_then(|s| s.parse::<u32>().ok())
        .map(NetId)
        .ok_or_else(|| err(line, format!("expected a net name, got '{token}'")))
}

/// Parse HDL text produced by [`emit`] back into a circuit.
pub fn parse(text: &str) -> Result<Circuit, HdlError> {
    let port_re = Regex::new(r"^(input|output)\s+(?:\[(\d+):0\]\s+)?(\w+),?$").unwrap();
    let inst_re =
        Regex::new(r"^(\w+)(?:\s+#\(\.RESET\(1'b([01])\)\))?\s+(\w+)\s+\((.*)\);$").unwrap();
    let pin_re = Regex::new(r"^\.(\w+)\((\w+)\)$").unwrap();
    let assign_re = Regex::new(r"^assign\s+(\S+)\s*=\s*(\S+);$").unwrap();
    let bit_re = Regex::new(r"^(\w+)\[(\d+)\]$").unwrap();

    let mut name = None;
    let mut width = None;
    let mut variant = None;
    let mut extra = BTreeMap::new();
    let mut net_count: u32 = 0;
    let mut ports: Vec<Port> = Vec::new();
    let mut gates: Vec<Gate> = Vec::new();
    let mut registers: Vec<Register> = Vec::new();
    // Port-bit bindings collected from assigns: port name -> (bit -> net).
    let mut bindings: BTreeMap<String, BTreeMap<usize, NetId>> = BTreeMap::new();
    let mut declared_width: BTreeMap<String, usize> = BTreeMap::new();

    for (line_no, raw) in text.lines().enumerate() {
        let line = line_no + 1;
        let t = raw.trim();
        if t.is_empty() || t == ");" || t == "endmodule" || t.starts_with("module ") {
            continue;
        }
        if let Some(rest) = t.strip_prefix("// ") {
            if let Some(v) = rest.strip_prefix("netlist: ") {
                name = Some(v.to_string());
            } else if let Some(v) = rest.strip_prefix("width: ") {
                width = v.parse().ok();
            } else if let Some(v) = rest.strip_prefix("variant: ") {
                variant = Some(v.to_string());
            } else if let Some(v) = rest.strip_prefix("meta ") {
                if let Some((k, val)) = v.split_once(": ") {
                    extra.insert(k.to_string(), val.to_string());
                }
            }
            continue;
        }
        if t.starts_with("//") {
            continue;
        }
        if let Some(c) = port_re.captures(t) {
            let dir = if &c[1] == "input" {
                PortDir::In
            } else {
                PortDir::Out
            };
            let bits = c.get(2).map_or(1, |m| m.as_str().parse::<usize>().unwrap() + 1);
            declared_width.insert(c[3].to_string(), bits);
            ports.push(Port {
                name: c[3].to_string(),
                dir,
                bits: Vec::new(),
            });
            continue;
        }
        if let Some(rest) = t.strip_prefix("wire ") {
            let rest = rest.trim_end_matches(';');
            for tok in rest.split(',') {
                let n = parse_net(tok.trim(), line)?;
                net_count = net_count.max(n.0 + 1);
            }
            continue;
        }
        if let Some(c) = assign_re.captures(t) {
            let (lhs, rhs) = (&c[1], &c[2]);
            let (port_side, net_side, _is_output) = if lhs.starts_with('n')
                && lhs[1..].chars().all(|ch| ch.is_ascii_digit())
            {
                (rhs, lhs, false)
            } else {
                (lhs, rhs, true)
            };
            let net = parse_net(net_side, line)?;
            let (pname, bit) = match bit_re.captures(port_side) {
                Some(b) => (b[1].to_string(), b[2].parse::<usize>().unwrap()),
                None => (port_side.to_string(), 0),
            };
            bindings.entry(pname).or_default().insert(bit, net);
            continue;
        }
        if let Some(c) = inst_re.captures(t) {
            let kind_name = &c[1];
            let reset = c.get(2).is_some_and(|m| m.as_str() == "1");
            let mut pins: BTreeMap<String, NetId> = BTreeMap::new();
            for pin in c[4].split(", ") {
                let p = pin_re
                    .captures(pin.trim())
                    .ok_or_else(|| err(line, format!("malformed pin '{pin}'")))?;
                pins.insert(p[1].to_string(), parse_net(&p[2], line)?);
            }
            let pin = |name: &str| -> Result<NetId, HdlError> {
                pins.get(name)
                    .copied()
                    .ok_or_else(|| err(line, format!("missing pin .{name}")))
            };
            if kind_name == "DFFE" {
                registers.push(Register {
                    d: pin("d")?,
                    q: pin("q")?,
                    enable: pin("en")?,
                    reset,
                });
            } else {
                let kind = GateKind::parse(kind_name)
                    .ok_or_else(|| err(line, format!("unknown primitive '{kind_name}'")))?;
                let inputs = match kind.arity() {
                    0 => vec![],
                    1 => vec![pin("a")?],
                    2 => vec![pin("a")?, pin("b")?],
                    _ => vec![pin("s")?, pin("a")?, pin("b")?],
                };
                gates.push(Gate {
                    kind,
                    inputs,
                    output: pin("y")?,
                });
            }
            continue;
        }
        return Err(err(line, format!("unrecognized line '{t}'")));
    }

    let name = name.ok_or(HdlError::MissingHeader("netlist"))?;
    let width = width.ok_or(HdlError::MissingHeader("width"))?;
    let variant = variant.ok_or(HdlError::MissingHeader("variant"))?;

    for p in &mut ports {
        let want = declared_width[&p.name];
        let bound = bindings.remove(&p.name).unwrap_or_default();
        for bit in 0..want {
            let net = bound.get(&bit).copied().ok_or_else(|| {
                HdlError::UnboundPortBit {
                    port: p.name.clone(),
                    bit,
                }
            })?;
            p.bits.push(net);
        }
    }

    Ok(Circuit {
        meta: CircuitMeta {
            name,
            width,
            variant,
            extra,
        },
        net_count,
        gates,
        registers,
        ports,
    })
}
