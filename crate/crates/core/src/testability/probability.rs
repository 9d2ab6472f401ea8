//! Vectorless static signal probability.
//!
//! Each net's probability of sitting at logic 1 is propagated through the
//! combinational subgraph in topological order, treating gate inputs as
//! independent (the standard vectorless heuristic; exact on fanout-free
//! logic). Per cell the computation is exact over the truth table: p1(out)
//! is the total probability of the satisfying input rows. Sequential loops
//! are resolved by damped fixed-point iteration of p1(Q) toward p1(D).

use crate::hypergraph::{Driver, HCellKind, Hypergraph, NetId};
use std::collections::BTreeMap;

/// Damping factor for the sequential fixed point.
const DAMPING: f64 = 0.5;
/// Per-net convergence tolerance.
const TOLERANCE: f64 = 1e-9;
/// Iteration cap for the sequential fixed point.
const MAX_ITER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetProbability {
    /// Probability of the net at logic 1.
    pub p1: f64,
}

impl NetProbability {
    #[inline]
    pub fn p0(&self) -> f64 {
        1.0 - self.p1
    }

    /// Transition activity: p0 * p1 (at most 0.25).
    #[inline]
    pub fn p_trans(&self) -> f64 {
        self.p0() * self.p1
    }

    /// The rarer level and its probability.
    pub fn rare(&self) -> (bool, f64) {
        if self.p1 <= self.p0() {
            (true, self.p1)
        } else {
            (false, self.p0())
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbabilityMap {
    values: Vec<NetProbability>,
    /// False when the sequential iteration hit its cap; the last iterate is
    /// kept.
    pub converged: bool,
    /// Max per-net change of the final iteration.
    pub residual: f64,
    pub iterations: usize,
}

impl ProbabilityMap {
    #[inline]
    pub fn get(&self, net: NetId) -> NetProbability {
        self.values[net.idx()]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-cell evaluation plan: distinct input nets and the pin mask each one
/// occupies, so a net wired to several pins of one gate is counted once.
fn distinct_inputs(inputs: &[NetId]) -> Vec<(NetId, u64)> {
    let mut out: Vec<(NetId, u64)> = Vec::new();
    for (pin, net) in inputs.iter().enumerate() {
        match out.iter_mut().find(|(n, _)| n == net) {
            Some((_, mask)) => *mask |= 1 << pin,
            None => out.push((*net, 1 << pin)),
        }
    }
    out
}

pub fn compute_probabilities(h: &Hypergraph, pi_bias: &BTreeMap<String, f64>) -> ProbabilityMap {
    let n = h.net_count();
    let mut p1 = vec![0.5f64; n];
    for net in h.net_ids() {
        match h.driver(net) {
            Driver::Input => {
                if let Some(b) = pi_bias.get(h.net_name(net)) {
                    p1[net.idx()] = b.clamp(0.0, 1.0);
                }
            }
            Driver::Const(v) => p1[net.idx()] = if v { 1.0 } else { 0.0 },
            Driver::Cell(_) => {}
        }
    }
    // Flip-flop outputs may also carry a bias as their starting point.
    for &cid in h.seq_cells() {
        if let HCellKind::Seq { q, .. } = &h.cell(cid).kind {
            if let Some(b) = pi_bias.get(h.net_name(*q)) {
                p1[q.idx()] = b.clamp(0.0, 1.0);
            }
        }
    }

    let comb_pass = |p1: &mut Vec<f64>| {
        for &cid in h.comb_topo() {
            let cell = h.cell(cid);
            let (inputs, output) = match &cell.kind {
                HCellKind::Comb { inputs, output } => (inputs, *output),
                HCellKind::Seq { .. } => unreachable!(),
            };
            let tt = &h.cell_type(cid).comb().expect("comb cell").truth;
            let distinct = distinct_inputs(inputs);
            let mut acc = 0.0f64;
            'rows: for row in 0..(1u64 << inputs.len()) {
                if !tt.eval_row(row) {
                    continue;
                }
                let mut prod = 1.0f64;
                for &(net, mask) in &distinct {
                    let bits = row & mask;
                    // Rows assigning different values to pins of one net
                    // are unrealizable.
                    if bits != 0 && bits != mask {
                        continue 'rows;
                    }
                    let p = p1[net.idx()];
                    prod *= if bits != 0 { p } else { 1.0 - p };
                }
                acc += prod;
            }
            p1[output.idx()] = acc;
        }
    };

    if h.seq_cells().is_empty() {
        comb_pass(&mut p1);
        return ProbabilityMap {
            values: p1.into_iter().map(|p1| NetProbability { p1 }).collect(),
            converged: true,
            residual: 0.0,
            iterations: 1,
        };
    }

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        comb_pass(&mut p1);
        residual = 0.0;
        for &cid in h.seq_cells() {
            if let HCellKind::Seq { d, q, .. } = &h.cell(cid).kind {
                let old = p1[q.idx()];
                let new = (1.0 - DAMPING) * old + DAMPING * p1[d.idx()];
                residual = residual.max((new - old).abs());
                p1[q.idx()] = new;
            }
        }
        if residual < TOLERANCE {
            break;
        }
    }
    // Final combinational pass so every net reflects the settled state.
    comb_pass(&mut p1);

    ProbabilityMap {
        values: p1.into_iter().map(|p1| NetProbability { p1 }).collect(),
        converged: residual < TOLERANCE,
        residual,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Designations;
    use crate::library::CellLibrary;
    use crate::netlist::parse_netlist;
    use crate::sim::eval_comb;

    fn build(src: &str) -> Hypergraph {
        let lib = CellLibrary::default_library();
        let n = parse_netlist(src, &lib).unwrap();
        Hypergraph::build(&n, &lib, &Designations::default()).unwrap()
    }

    fn probs(h: &Hypergraph) -> ProbabilityMap {
        compute_probabilities(h, &BTreeMap::new())
    }

    #[test]
    fn and_gate_table_values() {
        let h = build(
            "module m (a, b, y); input a, b; output y;
             AND2 g (.a(a), .b(b), .y(y)); endmodule",
        );
        let p = probs(&h);
        let y = p.get(h.net_id("y").unwrap());
        assert_eq!(y.p1, 0.25);
        assert_eq!(y.p_trans(), 0.1875);
    }

    #[test]
    fn not_gate_table_values() {
        let h = build(
            "module m (a, y); input a; output y; INV g (.a(a), .y(y)); endmodule",
        );
        let p = probs(&h);
        let y = p.get(h.net_id("y").unwrap());
        assert_eq!(y.p1, 0.5);
        assert_eq!(y.p_trans(), 0.25);
    }

    #[test]
    fn eight_input_and() {
        let src = "
            module m (i0,i1,i2,i3,i4,i5,i6,i7, y);
              input i0,i1,i2,i3,i4,i5,i6,i7; output y;
              wire a, b;
              AND4 g1 (.a(i0), .b(i1), .c(i2), .d(i3), .y(a));
              AND4 g2 (.a(i4), .b(i5), .c(i6), .d(i7), .y(b));
              AND2 g3 (.a(a), .b(b), .y(y));
            endmodule";
        let h = build(src);
        let p = probs(&h);
        let y = p.get(h.net_id("y").unwrap());
        assert!((y.p1 - 2f64.powi(-8)).abs() < 1e-15);
    }

    #[test]
    fn pi_bias_applies() {
        let h = build(
            "module m (a, y); input a; output y; BUF g (.a(a), .y(y)); endmodule",
        );
        let mut bias = BTreeMap::new();
        bias.insert("a".to_string(), 0.9);
        let p = compute_probabilities(&h, &bias);
        assert_eq!(p.get(h.net_id("y").unwrap()).p1, 0.9);
    }

    #[test]
    fn constants_are_fixed() {
        let h = build(
            "module m (a, y); input a; output y;
             AND2 g (.a(a), .b(1'b1), .y(y)); endmodule",
        );
        let p = probs(&h);
        assert_eq!(p.get(h.net_id("y").unwrap()).p1, 0.5);
        let c1 = h.constants()[0].0;
        assert_eq!(p.get(c1).p1, 1.0);
        assert_eq!(p.get(c1).p_trans(), 0.0);
    }

    /// Fanout-free tree: vectorless probability is exact, checked against
    /// exhaustive simulation.
    #[test]
    fn fanout_free_tree_matches_exhaustive() {
        let src = "
            module m (i0,i1,i2,i3,i4,i5, y);
              input i0,i1,i2,i3,i4,i5; output y;
              wire a, b, c;
              NAND2 g1 (.a(i0), .b(i1), .y(a));
              NOR2 g2 (.a(i2), .b(i3), .y(b));
              XOR2 g3 (.a(i4), .b(i5), .y(c));
              MUX2 g4 (.a(a), .b(b), .s(c), .y(y));
            endmodule";
        let h = build(src);
        let p = probs(&h);
        let pis: Vec<NetId> = h.primary_inputs().to_vec();
        let mut count = vec![0u64; h.net_count()];
        let total = 1u64 << pis.len();
        let mut values = vec![false; h.net_count()];
        for m in 0..total {
            for (i, pi) in pis.iter().enumerate() {
                values[pi.idx()] = m >> i & 1 == 1;
            }
            eval_comb(&h, &mut values);
            for net in h.net_ids() {
                if values[net.idx()] {
                    count[net.idx()] += 1;
                }
            }
        }
        for net in h.net_ids() {
            let freq = count[net.idx()] as f64 / total as f64;
            assert!(
                (p.get(net).p1 - freq).abs() < 1e-12,
                "net {} computed {} vs exhaustive {}",
                h.net_name(net),
                p.get(net).p1,
                freq
            );
        }
    }

    #[test]
    fn sequential_fixed_point_is_stable() {
        // A toggling flop: q' = !q. The damped fixed point settles at 0.5.
        let h = build(
            "module m (clk, o);
               input clk; output o;
               wire q, nq;
               DFF f (.d(nq), .clk(clk), .q(q));
               INV g (.a(q), .y(nq));
               BUF b (.a(q), .y(o));
             endmodule",
        );
        let p = probs(&h);
        assert!(p.converged);
        assert!((p.get(h.net_id("q").unwrap()).p1 - 0.5).abs() < 1e-8);
        // Rerunning from the converged state changes nothing: feed the
        // converged Q value back as a bias.
        let mut bias = BTreeMap::new();
        bias.insert("q".to_string(), p.get(h.net_id("q").unwrap()).p1);
        let p2 = compute_probabilities(&h, &bias);
        for net in h.net_ids() {
            assert!((p.get(net).p1 - p2.get(net).p1).abs() < 1e-8);
        }
    }

    #[test]
    fn repeated_pin_is_not_squared() {
        // AND2 with both pins tied to the same net is just a buffer.
        let h = build(
            "module m (a, y); input a; output y;
             AND2 g (.a(a), .b(a), .y(y)); endmodule",
        );
        let p = probs(&h);
        assert_eq!(p.get(h.net_id("y").unwrap()).p1, 0.5);
    }
}
