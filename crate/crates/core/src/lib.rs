// SPDX-License-Identifier: Apache-2.0

//! Gate-level workbench for twin-precision and recursive multipliers.
//!
//! The crate generates four unsigned multiplier architectures as flat gate
//! netlists, simulates them cycle by cycle with switching-activity counting,
//! verifies them exhaustively or randomly against a wide-integer golden
//! model, and compares them with technology-independent area, depth, and
//! power proxies.
//!
//! Modules:
//!
//! * [`netlist`] — the circuit IR, builder, validation, and levelization.
//! * [`document`] — the canonical JSON netlist document.
//! * [`blocks`] — partial products, column compression, adders, the BEC
//!   incrementer, bus muxes, and the mode decoder.
//! * [`multipliers`] — the four multiplier assemblies and the golden model.
//! * [`sim`] — the levelized simulator, toggle statistics, verification.
//! * [`vectors`] — the stimulus and trace file format.
//! * [`metrics`] — area/depth/power proxies and the comparison report.
//! * [`hdl`] — flat structural HDL export and the matching parser.

pub mod blocks;
pub mod document;
pub mod hdl;
pub mod metrics;
pub mod multipliers;
pub mod netlist;
pub mod sim;
pub mod vectors;

pub use blocks::ReductionPolicy;
pub use multipliers::{gen_variant, OperationMode, VariantTag};
pub use netlist::{Circuit, CircuitBuilder, GateKind, NetId};
pub use sim::{Simulator, VerifyStrategy};
