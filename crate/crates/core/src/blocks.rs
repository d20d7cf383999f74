// SPDX-License-Identifier: Apache-2.0

//! Parameterized generators for the arithmetic building blocks: the partial
//! product array, the column-compression tree, ripple-carry adders, the
//! binary-to-excess-1 incrementer, bus multiplexers, and the operation-mode
//! decoder.
//!
//! All generators append literal structures to a [`CircuitBuilder`]; nothing
//! is simplified, so an adder stage with a constant-zero operand stays an
//! adder stage. This keeps the area and delay proxies comparable across
//! design variants.

use std::collections::VecDeque;

use crate::netlist::{BuildError, Bus, CircuitBuilder, NetId};

/// Reduction placement policy. Placement depends only on the column height
/// profile, never on net values, so identical profiles always produce
/// identical counter placements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionPolicy {
    /// Per pass, every column places `h/3` full adders plus one half adder
    /// when the remainder is 2.
    Wallace,
    /// Reduce to the next height bound of the sequence 2, 3, 4, 6, 9, 13, …
    /// with the minimum number of counters; counters consume the oldest bits
    /// of a column and append their sum at the back.
    Dadda,
    /// Same stage bounds and counter counts as `Dadda`, but each counter's
    /// sum is chained straight into the next counter of the same column,
    /// giving the regular serial wiring of the reference reduction tree.
    HpmRegular,
}

impl ReductionPolicy {
    pub const ALL: [ReductionPolicy; 3] = [
        ReductionPolicy::Wallace,
        ReductionPolicy::Dadda,
        ReductionPolicy::HpmRegular,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReductionPolicy::Wallace => "wallace",
            ReductionPolicy::Dadda => "dadda",
            ReductionPolicy::HpmRegular => "hpm-regular",
        }
    }

    pub fn parse(s: &str) -> Option<ReductionPolicy> {
        ReductionPolicy::ALL.iter().copied().find(|p| p.as_str() == s)
    }
}

impl std::fmt::Display for ReductionPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-weight stacks of partial-product nets. The integer value represented
/// is `sum over w of 2^w * (ones in column w)` for any input assignment, and
/// every reduction step preserves it.
#[derive(Clone, Debug, Default)]
pub struct ColumnStack {
    columns: Vec<VecDeque<NetId>>,
}

impl ColumnStack {
    pub fn new(columns: usize) -> Self {
        ColumnStack {
            columns: vec![VecDeque::new(); columns],
        }
    }

    pub fn push(&mut self, weight: usize, net: NetId) {
        if weight >= self.columns.len() {
            self.columns.resize(weight + 1, VecDeque::new());
        }
        self.columns[weight].push_back(net);
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn heights(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.len()).collect()
    }

    pub fn column(&self, weight: usize) -> impl Iterator<Item = NetId> + '_ {
        self.columns[weight].iter().copied()
    }

    pub fn max_height(&self) -> usize {
        self.columns.iter().map(|c| c.len()).max().unwrap_or(0)
    }
}

/// The reduced form of a column stack: two LSB-aligned rows whose sum equals
/// the original stack value. Positions where a column ended up shorter than
/// two bits are padded with the shared constant-0 net; `heights` records the
/// real occupancy so assemblies can tell padding from content.
#[derive(Clone, Debug)]
pub struct TwoRowForm {
    pub sum: Bus,
    pub carry: Bus,
    pub heights: Vec<usize>,
}

impl TwoRowForm {
    pub fn width(&self) -> usize {
        self.sum.len()
    }
}

/// Decoder outputs gating the four operand register groups.
#[derive(Clone, Copy, Debug)]
pub struct GatingSignals {
    pub t1: NetId,
    pub t2: NetId,
    pub t3: NetId,
}

/// Emit the N*N AND-gate partial product array. The bit `y[j] & x[i]` lands
/// in column `i + j`, giving the diamond profile with column height
/// `min(w + 1, 2N - 1 - w)`.
pub fn gen_ppg(b: &mut CircuitBuilder, x: &[NetId], y: &[NetId]) -> Result<ColumnStack, BuildError> {
    if x.len() != y.len() {
        return Err(BuildError::WidthMismatch {
            context: "gen_ppg",
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    let mut stack = ColumnStack::new(2 * n - 1);
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            let pp = b.and2(xi, yj);
            stack.push(i + j, pp);
        }
    }
    Ok(stack)
}

/// The (3,2) counter: `sum = (a ^ b) ^ cin`, `carry = a*b + (a ^ b)*cin`.
/// Fixed five-gate decomposition (2 XOR2, 2 AND2, 1 OR2) so the area and
/// delay proxies are deterministic.
pub fn gen_full_adder(b: &mut CircuitBuilder, a: NetId, bb: NetId, cin: NetId) -> (NetId, NetId) {
    let axb = b.xor2(a, bb);
    let sum = b.xor2(axb, cin);
    let g1 = b.and2(a, bb);
    let g2 = b.and2(axb, cin);
    let carry = b.or2(g1, g2);
    (sum, carry)
}

/// The (2,2) counter: `sum = a ^ b`, `carry = a & b`.
pub fn gen_half_adder(b: &mut CircuitBuilder, a: NetId, bb: NetId) -> (NetId, NetId) {
    let sum = b.xor2(a, bb);
    let carry = b.and2(a, bb);
    (sum, carry)
}

fn dadda_targets(max_height: usize) -> Vec<usize> {
    let mut bounds = vec![2usize];
    while *bounds.last().unwrap() < max_height {
        let next = bounds.last().unwrap() * 3 / 2;
        bounds.push(next);
    }
    bounds.pop(); // the first bound >= max_height is not a stage target
    bounds.reverse();
    bounds
}

/// Apply counters per policy until every column height is at most 2.
///
/// Counter placement preserves the stack value by construction: a counter at
/// weight `w` consumes bits of weight `2^w` and returns its sum at `2^w`
/// plus its carry at `2^(w+1)`.
pub fn gen_reduction(
    b: &mut CircuitBuilder,
    stack: ColumnStack,
    policy: ReductionPolicy,
) -> TwoRowForm {
    let requested_width = stack.column_count();
    let mut cols = stack.columns;
    let (fa, ha) = match policy {
        ReductionPolicy::Wallace => reduce_wallace(b, &mut cols),
        ReductionPolicy::Dadda => reduce_dadda(b, &mut cols, false),
        ReductionPolicy::HpmRegular => reduce_dadda(b, &mut cols, true),
    };
    b.note_tree_counters(fa, ha);

    while cols.len() > requested_width && cols.last().is_some_and(|c| c.is_empty()) {
        cols.pop();
    }
    let zero = b.const0();
    let mut sum = Vec::with_capacity(cols.len());
    let mut carry = Vec::with_capacity(cols.len());
    let mut heights = Vec::with_capacity(cols.len());
    for col in &cols {
        debug_assert!(col.len() <= 2, "reduction left a column above height 2");
        heights.push(col.len());
        sum.push(col.front().copied().unwrap_or(zero));
        carry.push(col.get(1).copied().unwrap_or(zero));
    }
    TwoRowForm {
        sum,
        carry,
        heights,
    }
}

fn reduce_wallace(b: &mut CircuitBuilder, cols: &mut Vec<VecDeque<NetId>>) -> (u64, u64) {
    let mut fa = 0u64;
    let mut ha = 0u64;
    let mut passes = 0;
    while cols.iter().any(|c| c.len() > 2) {
        passes += 1;
        assert!(passes < 256, "wallace reduction failed to converge");
        let mut next: Vec<VecDeque<NetId>> = vec![VecDeque::new(); cols.len() + 1];
        for (w, col) in cols.iter_mut().enumerate() {
            while col.len() >= 3 {
                let a = col.pop_front().unwrap();
                let x = col.pop_front().unwrap();
                let c = col.pop_front().unwrap();
                let (s, cy) = gen_full_adder(b, a, x, c);
                fa += 1;
                next[w].push_back(s);
                next[w + 1].push_back(cy);
            }
            if col.len() == 2 {
                let a = col.pop_front().unwrap();
                let x = col.pop_front().unwrap();
                let (s, cy) = gen_half_adder(b, a, x);
                ha += 1;
                next[w].push_back(s);
                next[w + 1].push_back(cy);
            }
            if let Some(rest) = col.pop_front() {
                next[w].push_back(rest);
            }
        }
        if next.last().is_some_and(|c| c.is_empty()) {
            next.pop();
        }
        *cols = next;
    }
    (fa, ha)
}

fn reduce_dadda(
    b: &mut CircuitBuilder,
    cols: &mut Vec<VecDeque<NetId>>,
    chain_sums: bool,
) -> (u64, u64) {
    let mut fa = 0u64;
    let mut ha = 0u64;
    let max_height = cols.iter().map(|c| c.len()).max().unwrap_or(0);
    for target in dadda_targets(max_height) {
        let mut w = 0;
        while w < cols.len() {
            while cols[w].len() > target {
                if cols[w].len() == target + 1 {
                    let a = cols[w].pop_front().unwrap();
                    let x = cols[w].pop_front().unwrap();
                    let (s, cy) = gen_half_adder(b, a, x);
                    ha += 1;
                    place_sum(&mut cols[w], s, chain_sums);
                    place_carry(cols, w + 1, cy);
                } else {
                    let a = cols[w].pop_front().unwrap();
                    let x = cols[w].pop_front().unwrap();
                    let c = cols[w].pop_front().unwrap();
                    let (s, cy) = gen_full_adder(b, a, x, c);
                    fa += 1;
                    place_sum(&mut cols[w], s, chain_sums);
                    place_carry(cols, w + 1, cy);
                }
            }
            w += 1;
        }
    }
    (fa, ha)
}

fn place_sum(col: &mut VecDeque<NetId>, sum: NetId, chain: bool) {
    if chain {
        col.push_front(sum);
    } else {
        col.push_back(sum);
    }
}

fn place_carry(cols: &mut Vec<VecDeque<NetId>>, weight: usize, carry: NetId) {
    if weight >= cols.len() {
        cols.resize(weight + 1, VecDeque::new());
    }
    cols[weight].push_back(carry);
}

/// Ripple-carry adder: a chain of `k` full adders with the carry rippling
/// from bit 0. Value contract: `sum + 2^k * cout = a + b + cin`.
pub fn gen_rca(
    b: &mut CircuitBuilder,
    a: &[NetId],
    bb: &[NetId],
    cin: NetId,
) -> Result<(Bus, NetId), BuildError> {
    if a.len() != bb.len() {
        return Err(BuildError::WidthMismatch {
            context: "gen_rca",
            left: a.len(),
            right: bb.len(),
        });
    }
    assert!(!a.is_empty(), "gen_rca requires width >= 1");
    let mut carry = cin;
    let mut sum = Vec::with_capacity(a.len());
    for (&ai, &bi) in a.iter().zip(bb.iter()) {
        let (s, c) = gen_full_adder(b, ai, bi, carry);
        sum.push(s);
        carry = c;
    }
    Ok((sum, carry))
}

/// Binary-to-excess-1 converter: `out = (x + 1) mod 2^k`, built as
/// `out[0] = !x[0]`, `out[i] = x[i] ^ (x[0] & … & x[i-1])`. Exactly one INV,
/// `k - 1` XOR2 and `max(k - 2, 0)` AND2 gates; no carry-out is produced
/// because every consumer in this crate proves the increment cannot wrap.
pub fn gen_bec(b: &mut CircuitBuilder, x: &[NetId]) -> Bus {
    assert!(!x.is_empty(), "gen_bec requires width >= 1");
    let mut out = Vec::with_capacity(x.len());
    out.push(b.inv(x[0]));
    let mut chain = x[0];
    for i in 1..x.len() {
        out.push(b.xor2(x[i], chain));
        if i + 1 < x.len() {
            chain = b.and2(x[i], chain);
        }
    }
    out
}

/// Per-bit 2:1 multiplexer over two buses; output follows `a` when `sel` is
/// 0 and `bb` when it is 1.
pub fn gen_mux_bus(
    b: &mut CircuitBuilder,
    sel: NetId,
    a: &[NetId],
    bb: &[NetId],
) -> Result<Bus, BuildError> {
    if a.len() != bb.len() {
        return Err(BuildError::WidthMismatch {
            context: "gen_mux_bus",
            left: a.len(),
            right: bb.len(),
        });
    }
    Ok(a.iter()
        .zip(bb.iter())
        .map(|(&ai, &bi)| b.mux2(sel, ai, bi))
        .collect())
}

/// The 2-to-3 operation-mode decoder:
/// `t1 = !m1 | m0`, `t2 = m1 & m0`, `t3 = m1 | !m0`.
///
/// Truth table over the mode code `m1 m0`:
///
/// | mode | t1 | t2 | t3 |
/// |------|----|----|----|
/// | 00   | 1  | 0  | 1  |
/// | 01   | 1  | 0  | 0  |
/// | 10   | 0  | 0  | 1  |
/// | 11   | 1  | 1  | 1  |
pub fn gen_mode_decoder(b: &mut CircuitBuilder, mode: &[NetId]) -> Result<GatingSignals, BuildError> {
    if mode.len() != 2 {
        return Err(BuildError::WidthMismatch {
            context: "gen_mode_decoder",
            left: mode.len(),
            right: 2,
        });
    }
    let (m0, m1) = (mode[0], mode[1]);
    let not_m1 = b.inv(m1);
    let t1 = b.or2(not_m1, m0);
    let t2 = b.and2(m1, m0);
    let not_m0 = b.inv(m0);
    let t3 = b.or2(m1, not_m0);
    Ok(GatingSignals { t1, t2, t3 })
}

/// Pure height arithmetic of the staged reduction: returns the number of
/// (3,2) and (2,2) counters the `dadda`/`hpm-regular` policies place for a
/// given column profile, without building any netlist.
pub fn dadda_counter_counts(heights: &[usize]) -> (u64, u64) {
    let mut cols: Vec<usize> = heights.to_vec();
    let mut fa = 0u64;
    let mut ha = 0u64;
    let max_height = cols.iter().copied().max().unwrap_or(0);
    for target in dadda_targets(max_height) {
        let mut w = 0;
        while w < cols.len() {
            while cols[w] > target {
                if cols[w] == target + 1 {
                    ha += 1;
                    cols[w] -= 1;
                } else {
                    fa += 1;
                    cols[w] -= 2;
                }
                if w + 1 >= cols.len() {
                    cols.push(0);
                }
                cols[w + 1] += 1;
            }
            w += 1;
        }
    }
    (fa, ha)
}

/// Column heights of an N x N partial product array.
pub fn ppg_heights(n: usize) -> Vec<usize> {
    (0..2 * n - 1).map(|w| (w + 1).min(2 * n - 1 - w)).collect()
}
