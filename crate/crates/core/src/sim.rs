//! Logic simulation over the hypergraph: single-pass combinational
//! evaluation (flip-flop outputs as free inputs), three-valued evaluation
//! for justification, and cycle-accurate sequential simulation.

use crate::hypergraph::{CellId, Driver, HCellKind, Hypergraph, NetId};
use crate::library::TruthTable;

/// Net values indexed by `NetId`.
pub type NetValues = Vec<bool>;

fn cell_truth(h: &Hypergraph, cell: CellId) -> &TruthTable {
    &h.cell_type(cell)
        .comb()
        .expect("combinational cell")
        .truth
}

/// Evaluate all combinational cells in topological order. `values` must hold
/// the desired values for primary inputs and flip-flop outputs; constants
/// are overwritten with their fixed value.
pub fn eval_comb(h: &Hypergraph, values: &mut NetValues) {
    debug_assert_eq!(values.len(), h.net_count());
    for &(net, v) in h.constants() {
        values[net.idx()] = v;
    }
    for &cid in h.comb_topo() {
        let cell = h.cell(cid);
        let (inputs, output) = match &cell.kind {
            HCellKind::Comb { inputs, output } => (inputs, *output),
            HCellKind::Seq { .. } => unreachable!(),
        };
        let tt = cell_truth(h, cid);
        let mut row = 0u64;
        for (i, net) in inputs.iter().enumerate() {
            if values[net.idx()] {
                row |= 1 << i;
            }
        }
        values[output.idx()] = tt.eval_row(row);
    }
}

/// Three-valued logic for justification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ternary {
    Zero,
    One,
    X,
}

impl Ternary {
    pub fn from_bool(b: bool) -> Ternary {
        if b {
            Ternary::One
        } else {
            Ternary::Zero
        }
    }

    pub fn known(self) -> Option<bool> {
        match self {
            Ternary::Zero => Some(false),
            Ternary::One => Some(true),
            Ternary::X => None,
        }
    }
}

/// Ternary cell output: a defined value only if every completion of the X
/// inputs agrees.
pub fn eval_cell_ternary(tt: &TruthTable, inputs: &[Ternary]) -> Ternary {
    let mut base = 0u64;
    let mut free = Vec::new();
    for (i, v) in inputs.iter().enumerate() {
        match v {
            Ternary::One => base |= 1 << i,
            Ternary::Zero => {}
            Ternary::X => free.push(i),
        }
    }
    let first = tt.eval_row(base);
    for m in 1u64..(1 << free.len()) {
        let mut row = base;
        for (j, &i) in free.iter().enumerate() {
            if m >> j & 1 == 1 {
                row |= 1 << i;
            }
        }
        if tt.eval_row(row) != first {
            return Ternary::X;
        }
    }
    Ternary::from_bool(first)
}

/// Evaluate the combinational subgraph in three-valued logic.
pub fn eval_comb_ternary(h: &Hypergraph, values: &mut Vec<Ternary>) {
    debug_assert_eq!(values.len(), h.net_count());
    for &(net, v) in h.constants() {
        values[net.idx()] = Ternary::from_bool(v);
    }
    for &cid in h.comb_topo() {
        let cell = h.cell(cid);
        let (inputs, output) = match &cell.kind {
            HCellKind::Comb { inputs, output } => (inputs, *output),
            HCellKind::Seq { .. } => unreachable!(),
        };
        let tt = cell_truth(h, cid);
        let ins: Vec<Ternary> = inputs.iter().map(|n| values[n.idx()]).collect();
        values[output.idx()] = eval_cell_ternary(tt, &ins);
    }
}

/// Cycle-accurate simulator. Flip-flops update synchronously each step:
/// reset (active high) dominates, enable holds the previous value when low.
pub struct CycleSim<'a> {
    h: &'a Hypergraph,
    /// Current net values; flip-flop Q entries hold persistent state.
    pub values: NetValues,
}

impl<'a> CycleSim<'a> {
    pub fn new(h: &'a Hypergraph) -> CycleSim<'a> {
        CycleSim {
            h,
            values: vec![false; h.net_count()],
        }
    }

    /// Apply primary inputs, settle the combinational logic, then clock
    /// every flip-flop once. Returns the settled pre-clock snapshot; the
    /// internal state advances to the post-clock values.
    pub fn step(&mut self, pi_values: &[(NetId, bool)]) -> NetValues {
        for &(net, v) in pi_values {
            self.values[net.idx()] = v;
        }
        eval_comb(self.h, &mut self.values);
        let snapshot = self.values.clone();
        let mut next: Vec<(NetId, bool)> = Vec::with_capacity(self.h.seq_cells().len());
        for &cid in self.h.seq_cells() {
            if let HCellKind::Seq { d, q, rst, en, .. } = &self.h.cell(cid).kind {
                let v = if rst.map(|r| self.values[r.idx()]).unwrap_or(false) {
                    false
                } else if en.map(|e| self.values[e.idx()]).unwrap_or(true) {
                    self.values[d.idx()]
                } else {
                    self.values[q.idx()]
                };
                next.push((*q, v));
            }
        }
        for (q, v) in next {
            self.values[q.idx()] = v;
        }
        snapshot
    }

    pub fn reset_state(&mut self) {
        for v in self.values.iter_mut() {
            *v = false;
        }
    }
}

/// Values of the comparison points of a design under the full-scan view:
/// primary outputs plus every flip-flop D pin, keyed so they can be matched
/// across netlist variants.
pub fn observation_points(h: &Hypergraph, values: &NetValues) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for &po in h.primary_outputs() {
        out.push((format!("po:{}", h.net_name(po)), values[po.idx()]));
    }
    for &cid in h.seq_cells() {
        if let HCellKind::Seq { d, .. } = &h.cell(cid).kind {
            out.push((format!("ff:{}", h.cell(cid).name), values[d.idx()]));
        }
    }
    out
}

/// Free inputs of the combinational view: primary inputs plus flip-flop Q
/// nets, with stable names shared across netlist variants of one design.
pub fn free_inputs(h: &Hypergraph) -> Vec<(String, NetId)> {
    let mut out = Vec::new();
    for &pi in h.primary_inputs() {
        out.push((format!("pi:{}", h.net_name(pi)), pi));
    }
    for &cid in h.seq_cells() {
        if let HCellKind::Seq { q, .. } = &h.cell(cid).kind {
            out.push((format!("ff:{}", h.cell(cid).name), *q));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Designations;
    use crate::library::CellLibrary;
    use crate::netlist::parse_netlist;

    fn build(src: &str) -> Hypergraph {
        let lib = CellLibrary::default_library();
        let n = parse_netlist(src, &lib).unwrap();
        Hypergraph::build(&n, &lib, &Designations::default()).unwrap()
    }

    #[test]
    fn comb_eval_c17() {
        let h = build(crate::fixtures::C17);
        let mut v = vec![false; h.net_count()];
        // All inputs low: first-level NANDs go high, so the output NANDs
        // see (1,1) and go low.
        eval_comb(&h, &mut v);
        assert!(v[h.net_id("N10").unwrap().idx()]);
        assert!(v[h.net_id("N16").unwrap().idx()]);
        assert!(!v[h.net_id("N22").unwrap().idx()]);
        assert!(!v[h.net_id("N23").unwrap().idx()]);
        // N2 = 1 makes N16 = NAND(1, 1) = 0, so N22 = NAND(1, 0) = 1.
        v.fill(false);
        v[h.net_id("N2").unwrap().idx()] = true;
        eval_comb(&h, &mut v);
        assert!(v[h.net_id("N22").unwrap().idx()]);
    }

    #[test]
    fn ternary_and() {
        let lib = CellLibrary::default_library();
        let tt = lib.get("AND2").unwrap().comb().unwrap().truth;
        assert_eq!(
            eval_cell_ternary(&tt, &[Ternary::Zero, Ternary::X]),
            Ternary::Zero
        );
        assert_eq!(
            eval_cell_ternary(&tt, &[Ternary::One, Ternary::X]),
            Ternary::X
        );
        assert_eq!(
            eval_cell_ternary(&tt, &[Ternary::One, Ternary::One]),
            Ternary::One
        );
    }

    #[test]
    fn cycle_sim_shift() {
        let h = build(
            "module m (clk, rst, d, o);
               input clk, rst, d; output o;
               wire q0;
               DFFR f0 (.d(d), .clk(clk), .rst(rst), .q(q0));
               DFFR f1 (.d(q0), .clk(clk), .rst(rst), .q(o));
             endmodule",
        );
        let mut sim = CycleSim::new(&h);
        let d = h.net_id("d").unwrap();
        let o = h.net_id("o").unwrap();
        let rst = h.net_id("rst").unwrap();
        sim.step(&[(d, true), (rst, false)]);
        sim.step(&[(d, false), (rst, false)]);
        let v = sim.step(&[(d, false), (rst, false)]);
        assert!(v[o.idx()], "the 1 shifts through after two clocks");
        // Reset clears.
        sim.step(&[(rst, true)]);
        let v = sim.step(&[(rst, false)]);
        assert!(!v[o.idx()]);
    }

    #[test]
    fn enable_holds() {
        let h = build(
            "module m (clk, en, d, o);
               input clk, en, d; output o;
               DFFE f (.d(d), .clk(clk), .en(en), .q(o));
             endmodule",
        );
        let mut sim = CycleSim::new(&h);
        let d = h.net_id("d").unwrap();
        let en = h.net_id("en").unwrap();
        let o = h.net_id("o").unwrap();
        sim.step(&[(d, true), (en, true)]);
        assert!(sim.values[o.idx()]);
        sim.step(&[(d, false), (en, false)]);
        assert!(sim.values[o.idx()], "disabled flop holds");
        sim.step(&[(d, false), (en, true)]);
        assert!(!sim.values[o.idx()]);
    }
}
