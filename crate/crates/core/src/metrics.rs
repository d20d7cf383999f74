// SPDX-License-Identifier: Apache-2.0

//! Technology-independent area, depth, and power proxies, plus the
//! comparison-report generator.
//!
//! Area uses static-CMOS transistor-count proxies per gate kind, a per-bit
//! register cost, and one clock-gate charge per distinct non-constant enable
//! net. Depth is the longest weighted source-to-sink path over the levelized
//! graph. Power is the fanout-weighted toggle rate measured by the
//! simulator. None of these claim physical units; reports carry published
//! 90 nm reference percentages alongside the proxies for direction only.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multipliers::{OperationMode, VariantTag};
use crate::netlist::{Circuit, Driver, GateKind};
use crate::sim::{SimError, Simulator, ToggleStats};

pub const DISCLAIMER: &str = "area/depth/power figures are technology-independent structural \
proxies (transistor-count area, unit-delay depth, zero-delay fanout-weighted toggle power); \
reference percentages are published 90 nm synthesis results shown for direction only";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("area table has no cost entry for gate kind {0}")]
    MissingCost(GateKind),
    #[error("table constraint violated: {0}")]
    BadTable(String),
    #[error("designs must share one width: found {0} and {1}")]
    WidthMismatch(u32, u32),
    #[error("baseline design '{0}' is not in the design list")]
    MissingBaseline(String),
    #[error("circuit '{0}' carries an unknown variant tag '{1}'")]
    UnknownVariant(String, String),
    #[error("malformed table file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Unit area cost per gate kind plus register and clock-gating charges.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AreaTable {
    pub gates: BTreeMap<GateKind, u64>,
    pub register_bit: u64,
    pub clock_gate_per_bank: u64,
}

impl AreaTable {
    /// Conventional static-CMOS transistor counts.
    pub fn transistor_counts() -> AreaTable {
        let gates = BTreeMap::from([
            (GateKind::Const0, 0),
            (GateKind::Const1, 0),
            (GateKind::Buf, 2),
            (GateKind::Inv, 2),
            (GateKind::And2, 6),
            (GateKind::Or2, 6),
            (GateKind::Xor2, 10),
            (GateKind::Nand2, 4),
            (GateKind::Nor2, 4),
            (GateKind::Mux2, 12),
        ]);
        AreaTable {
            gates,
            register_bit: 24,
            clock_gate_per_bank: 6,
        }
    }

    pub fn from_json(text: &str) -> Result<AreaTable, MetricsError> {
        let table: AreaTable = serde_json::from_str(text)?;
        for kind in [GateKind::Const0, GateKind::Const1] {
            if table.gates.get(&kind).copied().unwrap_or(0) != 0 {
                return Err(MetricsError::BadTable(format!("{kind} must cost 0")));
            }
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn cost(&self, kind: GateKind) -> Result<u64, MetricsError> {
        self.gates
            .get(&kind)
            .copied()
            .ok_or(MetricsError::MissingCost(kind))
    }
}

/// Propagation cost per gate kind; registers are path endpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DelayTable {
    pub gates: BTreeMap<GateKind, u64>,
}

impl DelayTable {
    /// Unit delay for every logic gate; buffers and constants are free.
    pub fn unit() -> DelayTable {
        let mut gates = BTreeMap::new();
        for kind in GateKind::ALL {
            let cost = match kind {
                GateKind::Const0 | GateKind::Const1 | GateKind::Buf => 0,
                _ => 1,
            };
            gates.insert(kind, cost);
        }
        DelayTable { gates }
    }

    /// Two-level sensitivity table: inverting gates cost 1, composite gates
    /// cost 2.
    pub fn two_level() -> DelayTable {
        let mut gates = BTreeMap::new();
        for kind in GateKind::ALL {
            let cost = match kind {
                GateKind::Const0 | GateKind::Const1 => 0,
                GateKind::Buf | GateKind::Inv | GateKind::Nand2 | GateKind::Nor2 => 1,
                _ => 2,
            };
            gates.insert(kind, cost);
        }
        DelayTable { gates }
    }

    pub fn from_json(text: &str) -> Result<DelayTable, MetricsError> {
        let table: DelayTable = serde_json::from_str(text)?;
        for (&kind, &cost) in &table.gates {
            let zero_ok = matches!(kind, GateKind::Const0 | GateKind::Const1 | GateKind::Buf);
            if cost == 0 && !zero_ok {
                return Err(MetricsError::BadTable(format!(
                    "{kind} must have a positive delay"
                )));
            }
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn cost(&self, kind: GateKind) -> Result<u64, MetricsError> {
        self.gates
            .get(&kind)
            .copied()
            .ok_or(MetricsError::MissingCost(kind))
    }
}

/// Number of gated register banks: distinct enable nets not driven by a
/// constant-1 gate. Each bank is charged one clock-gate.
pub fn gated_bank_count(circuit: &Circuit) -> usize {
    let drivers = circuit.driver_map();
    let mut banks = BTreeSet::new();
    for r in &circuit.registers {
        let always_on = matches!(
            drivers[r.enable.index()],
            Some(Driver::Gate(g)) if circuit.gates[g as usize].kind == GateKind::Const1
        );
        if !always_on {
            banks.insert(r.enable);
        }
    }
    banks.len()
}

/// Total area proxy: gate costs plus register bits plus one clock-gate per
/// gated bank.
pub fn area(circuit: &Circuit, table: &AreaTable) -> Result<u64, MetricsError> {
    let mut total = 0u64;
    for g in &circuit.gates {
        total += table.cost(g.kind)?;
    }
    total += circuit.registers.len() as u64 * table.register_bit;
    total += gated_bank_count(circuit) as u64 * table.clock_gate_per_bank;
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthReport {
    pub depth: u64,
    /// Gate indices along one critical path, source side first. Ties are
    /// broken toward smaller gate indices so the reported path is
    /// deterministic.
    pub critical_path: Vec<usize>,
}

/// Longest weighted path from any source (input port bit or register q) to
/// any sink (output port bit or register d/enable pin).
pub fn depth(circuit: &Circuit, table: &DelayTable) -> Result<DepthReport, MetricsError> {
    let order = circuit
        .levelize()
        .expect("depth requires a validated circuit");
    let nets = circuit.net_count as usize;
    let mut arrival = vec![0u64; nets];
    let mut pred_gate = vec![usize::MAX; nets];

    for &gi in &order {
        let g = &circuit.gates[gi];
        let cost = table.cost(g.kind)?;
        let mut best = 0u64;
        for n in &g.inputs {
            best = best.max(arrival[n.index()]);
        }
        arrival[g.output.index()] = best + cost;
        pred_gate[g.output.index()] = gi;
    }

    let mut sink_nets: Vec<usize> = Vec::new();
    for p in circuit.output_ports() {
        sink_nets.extend(p.bits.iter().map(|n| n.index()));
    }
    for r in &circuit.registers {
        sink_nets.push(r.d.index());
        sink_nets.push(r.enable.index());
    }
    let mut best_net: Option<usize> = None;
    for &n in &sink_nets {
        match best_net {
            None => best_net = Some(n),
            Some(b) if arrival[n] > arrival[b] || (arrival[n] == arrival[b] && n < b) => {
                best_net = Some(n)
            }
            _ => {}
        }
    }
    let best = best_net.map_or(0, |n| arrival[n]);

    let mut path = Vec::new();
    if let Some(mut n) = best_net {
        while pred_gate[n] != usize::MAX {
            let gi = pred_gate[n];
            path.push(gi);
            let g = &circuit.gates[gi];
            // Step to the input that determined this gate's arrival.
            let target = arrival[g.output.index()] - table.cost(g.kind).unwrap_or(0);
            let mut next = None;
            let mut next_pred = usize::MAX;
            for input in &g.inputs {
                if arrival[input.index()] == target && pred_gate[input.index()] < next_pred {
                    next = Some(input.index());
                    next_pred = pred_gate[input.index()];
                }
            }
            match next {
                Some(m) => n = m,
                None => break,
            }
        }
    }
    path.reverse();
    Ok(DepthReport {
        depth: best,
        critical_path: path,
    })
}

/// Power proxy summary for one workload run.
#[derive(Clone, Debug, Serialize)]
pub struct PowerSummary {
    pub cycles: u64,
    pub total_toggles: u64,
    pub weighted_toggles: u64,
    pub toggles_per_cycle: f64,
    pub weighted_toggles_per_cycle: f64,
}

impl From<ToggleStats> for PowerSummary {
    fn from(stats: ToggleStats) -> Self {
        PowerSummary {
            cycles: stats.cycles,
            total_toggles: stats.total,
            weighted_toggles: stats.weighted_total,
            toggles_per_cycle: stats.toggles_per_cycle(),
            weighted_toggles_per_cycle: stats.weighted_per_cycle(),
        }
    }
}

/// Run a workload through a fresh simulator and summarize switching.
pub fn power_proxy(circuit: &Circuit, vectors: &[Vec<u128>]) -> Result<PowerSummary, MetricsError> {
    let mut sim = Simulator::new(circuit)?;
    Ok(sim.run(vectors).into())
}

/// Workload parameters; operand streams are derived from the seed so every
/// design and mode row sees the same operand entropy.
#[derive(Clone, Copy, Debug)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub vectors: u64,
}

/// Default vector counts: 10000 up to 16 bits, 15000 beyond.
pub fn default_vector_count(width: u32) -> u64 {
    if width <= 16 {
        10000
    } else {
        15000
    }
}

pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// Published 90 nm reference percentages (proposed versus the twin baseline)
/// printed next to the measured proxies.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceDeltas {
    pub width: u32,
    pub area_pct: f64,
    pub time_pct: f64,
    /// Power deltas per operation row: full, twin, single. The 16-bit full
    /// figure is reported without a sign in the source and is taken as
    /// +3.476 (slightly worse).
    pub power_pct: [f64; 3],
    pub pdp_pct: f64,
}

pub const REFERENCE_90NM: [ReferenceDeltas; 2] = [
    ReferenceDeltas {
        width: 16,
        area_pct: 1.357,
        time_pct: -13.334,
        power_pct: [3.476, -5.261, -19.927],
        pdp_pct: -10.1106,
    },
    ReferenceDeltas {
        width: 32,
        area_pct: 3.190,
        time_pct: -22.727,
        power_pct: [-29.835, -35.278, -34.618],
        pdp_pct: -45.7825,
    },
];

pub fn reference_for(width: u32) -> Option<&'static ReferenceDeltas> {
    REFERENCE_90NM.iter().find(|r| r.width == width)
}

#[derive(Clone, Debug, Serialize)]
pub struct OpRow {
    pub label: String,
    pub mode: String,
    pub toggles_per_cycle: f64,
    pub weighted_toggles_per_cycle: f64,
    /// Depth proxy times weighted toggles per cycle.
    pub pdp: f64,
    pub power_delta_pct: Option<f64>,
    pub pdp_delta_pct: Option<f64>,
    pub reference_power_delta_pct: Option<f64>,
    pub reference_pdp_delta_pct: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignReport {
    pub tag: String,
    pub area: u64,
    pub depth: u64,
    pub area_delta_pct: Option<f64>,
    pub depth_delta_pct: Option<f64>,
    pub reference_area_delta_pct: Option<f64>,
    pub reference_time_delta_pct: Option<f64>,
    pub rows: Vec<OpRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub width: u32,
    pub policy: String,
    pub seed: u64,
    pub vectors: u64,
    pub baseline: String,
    pub area_table: String,
    pub delay_table: String,
    pub disclaimer: String,
    pub designs: Vec<DesignReport>,
}

fn delta_pct(candidate: f64, baseline: f64) -> f64 {
    100.0 * (candidate - baseline) / baseline
}

/// The operation-type rows a design supports: full width always; the twin
/// and single rows for the designs that implement them. The single row on
/// the twin baseline zeroes the operand high halves (its usage restriction);
/// the gated design takes the raw operands in only-M1 mode.
fn row_plan(variant: VariantTag, width: u32) -> Vec<(String, OperationMode, bool)> {
    let half = width / 2;
    let mut rows = vec![(
        format!("One {width} x {width}"),
        OperationMode::Full,
        false,
    )];
    match variant {
        VariantTag::TwinRegular => {
            rows.push((format!("Two {half} x {half}"), OperationMode::Twin, false));
            rows.push((format!("One {half} x {half}"), OperationMode::Twin, true));
        }
        VariantTag::RecursiveBecGated => {
            rows.push((format!("Two {half} x {half}"), OperationMode::Twin, false));
            rows.push((format!("One {half} x {half}"), OperationMode::OnlyM1, false));
        }
        _ => {}
    }
    rows
}

fn stimulus_for(
    circuit: &Circuit,
    variant: VariantTag,
    mode: OperationMode,
    x: u64,
    y: u64,
) -> Vec<u128> {
    let mut row = Vec::with_capacity(3);
    for p in circuit.input_ports() {
        let v = match p.name.as_str() {
            "x" => x as u128,
            "y" => y as u128,
            "twin" => (mode == OperationMode::Twin) as u128,
            "mode" => mode.code() as u128,
            other => panic!("unexpected input port '{other}' on {variant}"),
        };
        row.push(v);
    }
    row
}

/// Generate the shared operand stream for a comparison run.
pub fn operand_stream(width: u32, spec: &WorkloadSpec) -> Vec<(u64, u64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let mask = if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    };
    (0..spec.vectors)
        .map(|_| (rng.gen::<u64>() & mask, rng.gen::<u64>() & mask))
        .collect()
}

/// Build the comparison report for a set of same-width designs against a
/// named baseline. Rows mirror the published comparison: one full-width
/// operation, two half-width operations, one half-width operation.
pub fn compare(
    designs: &[&Circuit],
    workload: &WorkloadSpec,
    baseline_tag: &str,
    area_table: &AreaTable,
    delay_table: &DelayTable,
    table_names: (&str, &str),
) -> Result<ComparisonReport, MetricsError> {
    let width = designs
        .first()
        .map(|c| c.meta.width)
        .expect("at least one design");
    for c in designs {
        if c.meta.width != width {
            return Err(MetricsError::WidthMismatch(width, c.meta.width));
        }
    }
    if !designs.iter().any(|c| c.meta.variant == baseline_tag) {
        return Err(MetricsError::MissingBaseline(baseline_tag.to_string()));
    }
    let operands = operand_stream(width, workload);

    struct Measured {
        tag: String,
        area: u64,
        depth: u64,
        rows: Vec<(String, String, f64, f64, f64)>,
    }

    let mut measured = Vec::new();
    for circuit in designs {
        let variant = VariantTag::parse(&circuit.meta.variant).ok_or_else(|| {
            MetricsError::UnknownVariant(circuit.meta.name.clone(), circuit.meta.variant.clone())
        })?;
        let a = area(circuit, area_table)?;
        let d = depth(circuit, delay_table)?.depth;
        let mut rows = Vec::new();
        for (label, mode, mask_high) in row_plan(variant, width) {
            let low_mask = (1u64 << (width / 2)) - 1;
            let vectors: Vec<Vec<u128>> = operands
                .iter()
                .map(|&(x, y)| {
                    let (x, y) = if mask_high {
                        (x & low_mask, y & low_mask)
                    } else {
                        (x, y)
                    };
                    stimulus_for(circuit, variant, mode, x, y)
                })
                .collect();
            let mut sim = Simulator::new(circuit)?;
            let stats = sim.run(&vectors);
            let weighted = stats.weighted_per_cycle();
            rows.push((
                label,
                mode.as_str().to_string(),
                stats.toggles_per_cycle(),
                weighted,
                d as f64 * weighted,
            ));
        }
        measured.push(Measured {
            tag: circuit.meta.variant.clone(),
            area: a,
            depth: d,
            rows,
        });
    }

    let baseline = measured
        .iter()
        .position(|m| m.tag == baseline_tag)
        .expect("baseline checked above");
    let base_area = measured[baseline].area as f64;
    let base_depth = measured[baseline].depth as f64;
    let base_rows: Vec<(String, f64, f64)> = measured[baseline]
        .rows
        .iter()
        .map(|(label, _, _, w, pdp)| (label.clone(), *w, *pdp))
        .collect();

    let reference = reference_for(width);
    let mut out_designs = Vec::new();
    for m in &measured {
        let is_proposed_vs_twin =
            m.tag == VariantTag::RecursiveBecGated.as_str() && baseline_tag == "twin-regular";
        let mut rows = Vec::new();
        for (row_idx, (label, mode, tpc, wpc, pdp)) in m.rows.iter().enumerate() {
            let base = base_rows.iter().find(|(l, _, _)| l == label);
            rows.push(OpRow {
                label: label.clone(),
                mode: mode.clone(),
                toggles_per_cycle: *tpc,
                weighted_toggles_per_cycle: *wpc,
                pdp: *pdp,
                power_delta_pct: base.map(|(_, bw, _)| delta_pct(*wpc, *bw)),
                pdp_delta_pct: base.map(|(_, _, bp)| delta_pct(*pdp, *bp)),
                reference_power_delta_pct: reference
                    .filter(|_| is_proposed_vs_twin)
                    .map(|r| r.power_pct[row_idx]),
                reference_pdp_delta_pct: reference
                    .filter(|_| is_proposed_vs_twin && row_idx == 0)
                    .map(|r| r.pdp_pct),
            });
        }
        out_designs.push(DesignReport {
            tag: m.tag.clone(),
            area: m.area,
            depth: m.depth,
            area_delta_pct: Some(delta_pct(m.area as f64, base_area)),
            depth_delta_pct: Some(delta_pct(m.depth as f64, base_depth)),
            reference_area_delta_pct: reference
                .filter(|_| is_proposed_vs_twin)
                .map(|r| r.area_pct),
            reference_time_delta_pct: reference
                .filter(|_| is_proposed_vs_twin)
                .map(|r| r.time_pct),
            rows,
        });
    }

    Ok(ComparisonReport {
        width,
        policy: designs[0]
            .meta
            .extra
            .get("policy")
            .cloned()
            .unwrap_or_default(),
        seed: workload.seed,
        vectors: workload.vectors,
        baseline: baseline_tag.to_string(),
        area_table: table_names.0.to_string(),
        delay_table: table_names.1.to_string(),
        disclaimer: DISCLAIMER.to_string(),
        designs: out_designs,
    })
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "comparison @ width {} | policy {} | seed {:#x} | {} vectors | baseline {}\n",
            self.width, self.policy, self.seed, self.vectors, self.baseline
        ));
        out.push_str(&format!("note: {}\n\n", self.disclaimer));
        for d in &self.designs {
            out.push_str(&format!(
                "design {:<22} area {:>8} ({:>+8.3}% | ref {})   depth {:>5} ({:>+8.3}% | ref {})\n",
                d.tag,
                d.area,
                d.area_delta_pct.unwrap_or(0.0),
                d.reference_area_delta_pct
                    .map_or("    n/a".to_string(), |v| format!("{v:+7.3}%")),
                d.depth,
                d.depth_delta_pct.unwrap_or(0.0),
                d.reference_time_delta_pct
                    .map_or("    n/a".to_string(), |v| format!("{v:+7.3}%")),
            ));
            out.push_str(&format!(
                "  {:<16} {:<8} {:>14} {:>14} {:>14} {:>10} {:>10} {:>10}\n",
                "operation", "mode", "toggles/cyc", "weighted/cyc", "pdp", "Δpower%", "Δpdp%", "refΔpow%"
            ));
            for r in &d.rows {
                out.push_str(&format!(
                    "  {:<16} {:<8} {:>14.3} {:>14.3} {:>14.1} {:>10} {:>10} {:>10}\n",
                    r.label,
                    r.mode,
                    r.toggles_per_cycle,
                    r.weighted_toggles_per_cycle,
                    r.pdp,
                    r.power_delta_pct
                        .map_or("n/a".to_string(), |v| format!("{v:+.3}")),
                    r.pdp_delta_pct
                        .map_or("n/a".to_string(), |v| format!("{v:+.3}")),
                    r.reference_power_delta_pct
                        .map_or("n/a".to_string(), |v| format!("{v:+.3}")),
                ));
            }
            out.push('\n');
        }
        out
    }

    /// Flat CSV rendering, one line per design row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "width,policy,seed,vectors,baseline,design,area,depth,area_delta_pct,depth_delta_pct,\
             operation,mode,toggles_per_cycle,weighted_toggles_per_cycle,pdp,power_delta_pct,\
             pdp_delta_pct,reference_power_delta_pct\n",
        );
        let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v}"));
        for d in &self.designs {
            for r in &d.rows {
                out.push_str(&format!(
                    "{},{},{:#x},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    self.width,
                    self.policy,
                    self.seed,
                    self.vectors,
                    self.baseline,
                    d.tag,
                    d.area,
                    d.depth,
                    fmt_opt(d.area_delta_pct),
                    fmt_opt(d.depth_delta_pct),
                    r.label,
                    r.mode,
                    r.toggles_per_cycle,
                    r.weighted_toggles_per_cycle,
                    r.pdp,
                    fmt_opt(r.power_delta_pct),
                    fmt_opt(r.pdp_delta_pct),
                    fmt_opt(r.reference_power_delta_pct),
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{gen_bec, gen_mux_bus, gen_rca, ReductionPolicy};
    use crate::multipliers::{
        gen_recursive, gen_recursive_bec_gated, gen_twin_regular, IncrementerKind, InputStaging,
    };
    use crate::netlist::CircuitBuilder;

    #[test]
    fn area_is_a_weighted_gate_sum() {
        let table = AreaTable::transistor_counts();
        let mut b = CircuitBuilder::new("t", 0, "test");
        let a = b.input_port("a", 2);
        let x = b.and2(a[0], a[1]);
        let y = b.and2(a[0], a[1]);
        let z = b.and2(x, y);
        let w = b.inv(z);
        b.output_port("o", &[w]);
        let c = b.finish();
        // 3 AND2 at 6 plus 1 INV at 2.
        assert_eq!(area(&c, &table).unwrap(), 20);

        let empty = CircuitBuilder::new("e", 0, "test").finish();
        assert_eq!(area(&empty, &table).unwrap(), 0);
    }

    #[test]
    fn area_reports_missing_cost_entries() {
        let mut table = AreaTable::transistor_counts();
        table.gates.remove(&GateKind::Xor2);
        let mut b = CircuitBuilder::new("t", 0, "test");
        let a = b.input_port("a", 2);
        let x = b.xor2(a[0], a[1]);
        b.output_port("o", &[x]);
        let c = b.finish();
        assert!(matches!(
            area(&c, &table),
            Err(MetricsError::MissingCost(GateKind::Xor2))
        ));
    }

    #[test]
    fn adding_a_gate_never_decreases_area() {
        let table = AreaTable::transistor_counts();
        let mut b = CircuitBuilder::new("t", 0, "test");
        let a = b.input_port("a", 1);
        let x = b.inv(a[0]);
        b.output_port("o", &[x]);
        let before = b.finish();
        let mut b = CircuitBuilder::new("t", 0, "test");
        let a = b.input_port("a", 1);
        let x = b.inv(a[0]);
        let y = b.buf(x);
        b.output_port("o", &[y]);
        let after = b.finish();
        assert!(area(&after, &table).unwrap() >= area(&before, &table).unwrap());
    }

    #[test]
    fn gated_banks_are_counted_per_enable_net() {
        let c = gen_recursive_bec_gated(8, ReductionPolicy::Dadda).unwrap();
        // Three gated enables (t1, t2, t3); the mode register is always-on.
        assert_eq!(gated_bank_count(&c), 3);
    }

    #[test]
    fn depth_of_an_inverter_chain_is_its_length() {
        let table = DelayTable::unit();
        for k in [1usize, 3, 7] {
            let mut b = CircuitBuilder::new("chain", 0, "test");
            let a = b.input_port("a", 1);
            let mut n = a[0];
            for _ in 0..k {
                n = b.inv(n);
            }
            b.output_port("o", &[n]);
            let c = b.finish();
            let report = depth(&c, &table).unwrap();
            assert_eq!(report.depth, k as u64);
            assert_eq!(report.critical_path.len(), k);
        }
    }

    /// Enumerate all source-to-sink paths of the 5-gate full adder by DFS;
    /// the oracle pins the overall depth at 3 and the cin-to-carry path
    /// at 2 under unit delays.
    #[test]
    fn full_adder_paths_match_enumeration() {
        let mut b = CircuitBuilder::new("fa", 0, "test");
        let a = b.input_port("a", 1);
        let x = b.input_port("b", 1);
        let cin = b.input_port("cin", 1);
        let (s, cy) = crate::blocks::gen_full_adder(&mut b, a[0], x[0], cin[0]);
        b.output_port("sum", &[s]);
        b.output_port("carry", &[cy]);
        let c = b.finish();

        fn longest_from(c: &Circuit, net: crate::netlist::NetId) -> u64 {
            let mut best = 0;
            for (gi, g) in c.gates.iter().enumerate() {
                if g.inputs.contains(&net) {
                    let _ = gi;
                    best = best.max(1 + longest_from(c, g.output));
                }
            }
            best
        }
        assert_eq!(longest_from(&c, a[0]), 3);
        assert_eq!(longest_from(&c, cin[0]), 2);
        let report = depth(&c, &DelayTable::unit()).unwrap();
        assert_eq!(report.depth, 3);
    }

    #[test]
    fn depth_reports_are_deterministic() {
        let c = gen_twin_regular(8, ReductionPolicy::Dadda).unwrap();
        let a = depth(&c, &DelayTable::unit()).unwrap();
        let b = depth(&c, &DelayTable::unit()).unwrap();
        assert_eq!(a, b);
        assert!(a.depth > 0);
        assert!(!a.critical_path.is_empty());
    }

    fn increment_select_block(k: usize, kind: IncrementerKind) -> Circuit {
        let mut b = CircuitBuilder::new("incsel", k as u32, "test");
        let x = b.input_port("x", k);
        let sel = b.input_port("sel", 1);
        let inc = match kind {
            IncrementerKind::Bec => gen_bec(&mut b, &x),
            IncrementerKind::RcaCarryOne => {
                let zero = b.const0();
                let one = b.const1();
                let zeros = vec![zero; k];
                gen_rca(&mut b, &x, &zeros, one).unwrap().0
            }
        };
        let out = gen_mux_bus(&mut b, sel[0], &x, &inc).unwrap();
        b.output_port("o", &out);
        b.finish()
    }

    #[test]
    fn bec_block_is_smaller_and_no_deeper_than_the_rca_block() {
        let area_table = AreaTable::transistor_counts();
        let delay_table = DelayTable::unit();
        for n in [4u32, 8, 16, 32, 64] {
            let k = (n / 2) as usize;
            let bec = increment_select_block(k, IncrementerKind::Bec);
            let rca = increment_select_block(k, IncrementerKind::RcaCarryOne);
            assert!(bec.gates.len() < rca.gates.len(), "gate count at n={n}");
            assert!(
                area(&bec, &area_table).unwrap() < area(&rca, &area_table).unwrap(),
                "area at n={n}"
            );
            let db = depth(&bec, &delay_table).unwrap().depth;
            let dr = depth(&rca, &delay_table).unwrap().depth;
            assert!(db <= dr, "depth at n={n}: {db} > {dr}");
        }
    }

    #[test]
    fn bec_variant_beats_rca_variant_with_equivalent_registers() {
        let table = AreaTable::transistor_counts();
        for n in [4u32, 8, 16, 32, 64] {
            let gated_bec = gen_recursive(
                n,
                ReductionPolicy::HpmRegular,
                IncrementerKind::Bec,
                InputStaging::GatedBanks,
            )
            .unwrap();
            let gated_rca = gen_recursive(
                n,
                ReductionPolicy::HpmRegular,
                IncrementerKind::RcaCarryOne,
                InputStaging::GatedBanks,
            )
            .unwrap();
            assert!(
                area(&gated_bec, &table).unwrap() < area(&gated_rca, &table).unwrap(),
                "n={n}"
            );
        }
    }

    #[test]
    fn constant_workload_stops_toggling_after_the_first_cycle() {
        let c = gen_twin_regular(8, ReductionPolicy::Dadda).unwrap();
        let vectors: Vec<Vec<u128>> = (0..10).map(|_| vec![0xAB, 0xCD, 0]).collect();
        let first = power_proxy(&c, &vectors[..1]).unwrap();
        let all = power_proxy(&c, &vectors).unwrap();
        assert_eq!(first.total_toggles, all.total_toggles);
    }

    #[test]
    fn self_baseline_comparison_has_zero_deltas() {
        let c = gen_twin_regular(8, ReductionPolicy::Dadda).unwrap();
        let report = compare(
            &[&c],
            &WorkloadSpec {
                seed: 1,
                vectors: 50,
            },
            "twin-regular",
            &AreaTable::transistor_counts(),
            &DelayTable::unit(),
            ("default", "unit"),
        )
        .unwrap();
        let d = &report.designs[0];
        assert_eq!(d.area_delta_pct, Some(0.0));
        assert_eq!(d.depth_delta_pct, Some(0.0));
        for r in &d.rows {
            assert_eq!(r.power_delta_pct, Some(0.0));
            assert_eq!(r.pdp_delta_pct, Some(0.0));
        }
        assert_eq!(
            d.rows.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
            vec!["One 8 x 8", "Two 4 x 4", "One 4 x 4"]
        );
    }

    #[test]
    fn delta_columns_recompute_from_absolutes() {
        let twin = gen_twin_regular(8, ReductionPolicy::HpmRegular).unwrap();
        let gated = gen_recursive_bec_gated(8, ReductionPolicy::HpmRegular).unwrap();
        let report = compare(
            &[&twin, &gated],
            &WorkloadSpec {
                seed: DEFAULT_SEED,
                vectors: 100,
            },
            "twin-regular",
            &AreaTable::transistor_counts(),
            &DelayTable::unit(),
            ("default", "unit"),
        )
        .unwrap();
        let base = &report.designs[0];
        for d in &report.designs {
            assert_eq!(
                d.area_delta_pct.unwrap(),
                100.0 * (d.area as f64 - base.area as f64) / base.area as f64
            );
            for r in &d.rows {
                if let Some(pd) = r.power_delta_pct {
                    let b = base.rows.iter().find(|b| b.label == r.label).unwrap();
                    assert_eq!(
                        pd,
                        100.0 * (r.weighted_toggles_per_cycle - b.weighted_toggles_per_cycle)
                            / b.weighted_toggles_per_cycle
                    );
                }
            }
        }
        // JSON round-trip keeps the check exact.
        let json = report.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let d1 = &parsed["designs"][1];
        assert_eq!(
            d1["area_delta_pct"].as_f64().unwrap(),
            report.designs[1].area_delta_pct.unwrap()
        );
    }

    #[test]
    fn table_files_round_trip_and_validate() {
        let at = AreaTable::transistor_counts();
        let parsed = AreaTable::from_json(&at.to_json()).unwrap();
        assert_eq!(parsed.gates, at.gates);
        let bad = r#"{"gates": {"CONST0": 3}, "register_bit": 1, "clock_gate_per_bank": 1}"#;
        assert!(AreaTable::from_json(bad).is_err());

        let dt = DelayTable::two_level();
        let parsed = DelayTable::from_json(&dt.to_json()).unwrap();
        assert_eq!(parsed.gates, dt.gates);
        let bad = r#"{"gates": {"AND2": 0}}"#;
        assert!(DelayTable::from_json(bad).is_err());
    }
}
