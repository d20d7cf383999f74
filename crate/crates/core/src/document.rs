// SPDX-License-Identifier: Apache-2.0

//! The netlist document: a canonical JSON encoding of [`Circuit`].
//!
//! Top-level keys are `name`, `width`, `variant`, `meta`, `nets` (net count),
//! `gates`, `registers`, and `ports`. Arrays keep insertion order, the meta
//! map is key-sorted, and no field is floating point, so serialization is a
//! fixed point: `serialize(deserialize(serialize(c))) == serialize(c)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{
    Circuit, CircuitMeta, Gate, GateKind, NetId, Port, PortDir, Register, ValidationReport,
};

#[derive(Debug, Error)]
pub enum DocError {
    #[error("malformed document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("dangling reference: {context} references net {net} but the net table has {count} nets")]
    DanglingRef {
        context: String,
        net: u32,
        count: u32,
    },
    #[error("arity mismatch in document: gate {index} ({kind}) has {got} inputs, expects {expected}")]
    Arity {
        index: usize,
        kind: GateKind,
        got: usize,
        expected: usize,
    },
    #[error("cannot serialize an invalid circuit:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Serialize, Deserialize)]
struct DocGate {
    kind: GateKind,
    inputs: Vec<u32>,
    output: u32,
}

#[derive(Serialize, Deserialize)]
struct DocRegister {
    d: u32,
    q: u32,
    enable: u32,
    reset: u8,
}

#[derive(Serialize, Deserialize)]
struct DocPort {
    name: String,
    dir: PortDir,
    bits: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct NetlistDoc {
    name: String,
    width: u32,
    variant: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, String>,
    nets: u32,
    gates: Vec<DocGate>,
    registers: Vec<DocRegister>,
    ports: Vec<DocPort>,
}

impl From<&Circuit> for NetlistDoc {
    fn from(c: &Circuit) -> Self {
        NetlistDoc {
            name: c.meta.name.clone(),
            width: c.meta.width,
            variant: c.meta.variant.clone(),
            meta: c.meta.extra.clone(),
            nets: c.net_count,
            gates: c
                .gates
                .iter()
                .map(|g| DocGate {
                    kind: g.kind,
                    inputs: g.inputs.iter().map(|n| n.0).collect(),
                    output: g.output.0,
                })
                .collect(),
            registers: c
                .registers
                .iter()
                .map(|r| DocRegister {
                    d: r.d.0,
                    q: r.q.0,
                    enable: r.enable.0,
                    reset: r.reset as u8,
                })
                .collect(),
            ports: c
                .ports
                .iter()
                .map(|p| DocPort {
                    name: p.name.clone(),
                    dir: p.dir,
                    bits: p.bits.iter().map(|n| n.0).collect(),
                })
                .collect(),
        }
    }
}

fn check_net(net: u32, count: u32, context: impl FnOnce() -> String) -> Result<NetId, DocError> {
    if net >= count {
        return Err(DocError::DanglingRef {
            context: context(),
            net,
            count,
        });
    }
    Ok(NetId(net))
}

impl NetlistDoc {
    fn into_circuit(self) -> Result<Circuit, DocError> {
        let count = self.nets;
        let mut gates = Vec::with_capacity(self.gates.len());
        for (i, g) in self.gates.into_iter().enumerate() {
            if g.inputs.len() != g.kind.arity() {
                return Err(DocError::Arity {
                    index: i,
                    kind: g.kind,
                    got: g.inputs.len(),
                    expected: g.kind.arity(),
                });
            }
            let mut inputs = Vec::with_capacity(g.inputs.len());
            for n in g.inputs {
                inputs.push(check_net(n, count, || format!("gate {i}"))?);
            }
            let output = check_net(g.output, count, || format!("gate {i}"))?;
            gates.push(Gate {
                kind: g.kind,
                inputs,
                output,
            });
        }
        let mut registers = Vec::with_capacity(self.registers.len());
        for (i, r) in self.registers.into_iter().enumerate() {
            registers.push(Register {
                d: check_net(r.d, count, || format!("register {i}"))?,
                q: check_net(r.q, count, || format!("register {i}"))?,
                enable: check_net(r.enable, count, || format!("register {i}"))?,
                reset: r.reset != 0,
            });
        }
        let mut ports = Vec::with_capacity(self.ports.len());
        for p in self.ports.into_iter() {
            let mut bits = Vec::with_capacity(p.bits.len());
            for n in p.bits {
                bits.push(check_net(n, count, || format!("port {}", p.name))?);
            }
            ports.push(Port {
                name: p.name,
                dir: p.dir,
                bits,
            });
        }
        Ok(Circuit {
            meta: CircuitMeta {
                name: self.name,
                width: self.width,
                variant: self.variant,
                extra: self.meta,
            },
            net_count: count,
            gates,
            registers,
            ports,
        })
    }
}

/// Serialize a validated circuit to its canonical document text.
pub fn to_json(circuit: &Circuit) -> Result<String, DocError> {
    let report = circuit.validate();
    if !report.is_clean() {
        return Err(DocError::Invalid(report));
    }
    let doc = NetlistDoc::from(circuit);
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Parse a netlist document. Reference and arity errors are reported with
/// the offending element; structural problems beyond that (multi-driver,
/// cycles) are left to [`Circuit::validate`].
pub fn from_json(text: &str) -> Result<Circuit, DocError> {
    let doc: NetlistDoc = serde_json::from_str(text)?;
    doc.into_circuit()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::CircuitBuilder;

    fn tiny() -> Circuit {
        let mut b = CircuitBuilder::new("tiny", 1, "test");
        let a = b.input_port("a", 1);
        let x = b.inv(a[0]);
        b.output_port("o", &[x]);
        b.set_meta("policy", "none");
        b.finish()
    }

    #[test]
    fn round_trip_is_identity() {
        let c = tiny();
        let text = to_json(&c).unwrap();
        let back = from_json(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn serialization_is_a_fixed_point() {
        let c = tiny();
        let once = to_json(&c).unwrap();
        let twice = to_json(&from_json(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn generated_multiplier_reserializes_byte_identically() {
        let c = crate::multipliers::gen_hpm_plain(8, crate::blocks::ReductionPolicy::Dadda)
            .unwrap();
        let once = to_json(&c).unwrap();
        let again = to_json(&from_json(&once).unwrap()).unwrap();
        assert_eq!(once, again);
    }

    #[test]
    fn empty_circuit_with_one_input_round_trips() {
        let mut b = CircuitBuilder::new("ports_only", 1, "test");
        b.input_port("a", 1);
        let c = b.finish();
        let back = from_json(&to_json(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn dangling_reference_is_reported() {
        let text = r#"{
            "name": "bad", "width": 1, "variant": "test",
            "nets": 2,
            "gates": [{"kind": "INV", "inputs": [999], "output": 1}],
            "registers": [],
            "ports": [{"name": "a", "dir": "in", "bits": [0]}]
        }"#;
        let err = from_json(text).unwrap_err();
        assert!(err.to_string().contains("dangling reference"));
        assert!(err.to_string().contains("999"));
    }

    #[test]
    fn unknown_gate_kind_is_reported() {
        let text = r#"{
            "name": "bad", "width": 1, "variant": "test",
            "nets": 1,
            "gates": [{"kind": "XNOR9", "inputs": [0, 0], "output": 0}],
            "registers": [],
            "ports": []
        }"#;
        let err = from_json(text).unwrap_err();
        assert!(matches!(err, DocError::Malformed(_)));
    }

    #[test]
    fn document_arity_mismatch_is_reported() {
        let text = r#"{
            "name": "bad", "width": 1, "variant": "test",
            "nets": 3,
            "gates": [{"kind": "AND2", "inputs": [0], "output": 2}],
            "registers": [],
            "ports": [{"name": "a", "dir": "in", "bits": [0, 1]}]
        }"#;
        let err = from_json(text).unwrap_err();
        assert!(matches!(err, DocError::Arity { .. }));
    }

    #[test]
    fn invalid_circuit_refuses_to_serialize() {
        let mut c = tiny();
        c.gates[0].inputs[0] = c.gates[0].output;
        assert!(matches!(to_json(&c), Err(DocError::Invalid(_))));
    }
}
