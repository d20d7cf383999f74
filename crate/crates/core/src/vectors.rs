// SPDX-License-Identifier: Apache-2.0

//! Stimulus vector files: one line per cycle of whitespace-separated
//! `port=hexvalue` tokens; lines starting with `#` are comments. Every line
//! must assign every input port. Trace output uses the same token format
//! with the output ports appended.

use thiserror::Error;

use crate::netlist::{Circuit, PortDir};
use crate::sim::Simulator;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("line {line}: malformed token '{token}' (expected port=hexvalue)")]
    Malformed { line: usize, token: String },
    #[error("line {line}: unknown input port '{port}'")]
    UnknownPort { line: usize, port: String },
    #[error("line {line}: missing assignment for input port '{port}'")]
    MissingPort { line: usize, port: String },
    #[error("line {line}: value {value:#x} does not fit port '{port}' ({width} bits)")]
    TooWide {
        line: usize,
        port: String,
        width: usize,
        value: u128,
    },
}

/// Parse a vector file into per-cycle stimuli aligned with the circuit's
/// input-port declaration order.
pub fn parse_vectors(circuit: &Circuit, text: &str) -> Result<Vec<Vec<u128>>, VectorError> {
    let inputs: Vec<(&str, usize)> = circuit
        .input_ports()
        .map(|p| (p.name.as_str(), p.bits.len()))
        .collect();
    let mut out = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = line_no + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut values: Vec<Option<u128>> = vec![None; inputs.len()];
        for token in trimmed.split_whitespace() {
            let (name, hex) = token.split_once('=').ok_or_else(|| VectorError::Malformed {
                line,
                token: token.to_string(),
            })?;
            let value = u128::from_str_radix(hex, 16).map_err(|_| VectorError::Malformed {
                line,
                token: token.to_string(),
            })?;
            let idx = inputs
                .iter()
                .position(|(n, _)| *n == name)
                .ok_or_else(|| VectorError::UnknownPort {
                    line,
                    port: name.to_string(),
                })?;
            let width = inputs[idx].1;
            if width < 128 && value >> width != 0 {
                return Err(VectorError::TooWide {
                    line,
                    port: name.to_string(),
                    width,
                    value,
                });
            }
            values[idx] = Some(value);
        }
        let mut row = Vec::with_capacity(inputs.len());
        for (i, v) in values.into_iter().enumerate() {
            match v {
                Some(v) => row.push(v),
                None => {
                    return Err(VectorError::MissingPort {
                        line,
                        port: inputs[i].0.to_string(),
                    })
                }
            }
        }
        out.push(row);
    }
    Ok(out)
}

fn hex_token(name: &str, width: usize, value: u128) -> String {
    let digits = width.div_ceil(4).max(1);
    format!("{name}={value:0digits$x}")
}

/// Format one stimulus as a vector-file line.
pub fn format_vector_line(circuit: &Circuit, stimulus: &[u128]) -> String {
    circuit
        .input_ports()
        .zip(stimulus.iter())
        .map(|(p, &v)| hex_token(&p.name, p.bits.len(), v))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Format one settled cycle as a trace line: the inputs followed by the
/// output ports read from the simulator.
pub fn format_trace_line(sim: &Simulator, stimulus: &[u128]) -> String {
    let circuit = sim.circuit();
    let mut tokens: Vec<String> = circuit
        .input_ports()
        .zip(stimulus.iter())
        .map(|(p, &v)| hex_token(&p.name, p.bits.len(), v))
        .collect();
    for p in circuit.ports.iter().filter(|p| p.dir == PortDir::Out) {
        let v = sim.output(&p.name).expect("output port exists");
        tokens.push(hex_token(&p.name, p.bits.len(), v));
    }
    tokens.join(" ")
}
