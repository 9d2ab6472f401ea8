//! Structural per-net features: immediate and level-2 fanin/fanout counts
//! and gate-hop distances to the nearest flip-flop D pin, flip-flop Q
//! output, primary input, and primary output.
//!
//! Distances count combinational cells traversed; flip-flops are never
//! traversed. Consistent with the full-scan cut used everywhere else,
//! flip-flop Q nets anchor the input-side distances at 0 and nets feeding a
//! flip-flop D pin anchor the output-side distances at 0. Nets that cannot
//! reach an anchor get the design-relative sentinel (cell count + 1).

use crate::hypergraph::{Driver, Hypergraph, HypergraphError, NetId, PinRole};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuralFeatures {
    pub fanin_l1: u32,
    pub fanout_l1: u32,
    pub fanin_l2: u32,
    pub fanout_l2: u32,
    pub dist_ff_d: u32,
    pub dist_ff_q: u32,
    pub dist_pi: u32,
    pub dist_po: u32,
}

#[derive(Debug, Clone)]
pub struct StructuralMap {
    values: Vec<StructuralFeatures>,
    /// Strictly greater than any realizable distance in the design.
    pub sentinel: u32,
}

impl StructuralMap {
    #[inline]
    pub fn get(&self, net: NetId) -> StructuralFeatures {
        self.values[net.idx()]
    }

    pub fn get_by_name(
        &self,
        h: &Hypergraph,
        net: &str,
    ) -> Result<StructuralFeatures, HypergraphError> {
        Ok(self.get(h.net_id(net)?))
    }
}

/// Multi-source BFS over the net graph induced by combinational cells.
/// `forward` walks driver-to-output edges (distance *from* the anchors);
/// otherwise edges are reversed (distance *to* the anchors).
fn bfs(h: &Hypergraph, anchors: &[NetId], forward: bool, sentinel: u32) -> Vec<u32> {
    let mut dist = vec![sentinel; h.net_count()];
    let mut queue: VecDeque<NetId> = VecDeque::new();
    for &a in anchors {
        if dist[a.idx()] != 0 {
            dist[a.idx()] = 0;
            queue.push_back(a);
        }
    }
    while let Some(net) = queue.pop_front() {
        let d = dist[net.idx()];
        let mut visit = |next: NetId| {
            if dist[next.idx()] > d + 1 {
                dist[next.idx()] = d + 1;
                queue.push_back(next);
            }
        };
        if forward {
            // One combinational cell forward: net -> sink cell -> its output.
            for &(cell, role) in h.sinks(net) {
                if matches!(role, PinRole::Data(_)) && !h.cell(cell).is_seq() {
                    visit(h.cell(cell).output_net());
                }
            }
        } else if let Driver::Cell(c) = h.driver(net) {
            if !h.cell(c).is_seq() {
                for &input in h.cell(c).data_inputs() {
                    visit(input);
                }
            }
        }
    }
    dist
}

pub fn compute_structural(h: &Hypergraph) -> StructuralMap {
    let sentinel = h.cells.len() as u32 + 1;

    let fanin_l1: Vec<u32> = h.net_ids().map(|n| h.fanin(n).len() as u32).collect();
    let fanout_l1: Vec<u32> = h
        .net_ids()
        .map(|n| {
            h.sinks(n)
                .iter()
                .filter(|(_, r)| r.traversable())
                .count() as u32
        })
        .collect();
    let fanin_l2: Vec<u32> = h
        .net_ids()
        .map(|n| h.fanin(n).iter().map(|i| fanin_l1[i.idx()]).sum())
        .collect();
    let fanout_l2: Vec<u32> = h
        .net_ids()
        .map(|n| h.fanout(n).iter().map(|o| fanout_l1[o.idx()]).sum())
        .collect();

    // Input-side anchors.
    let pi_anchors: Vec<NetId> = h
        .net_ids()
        .filter(|n| {
            matches!(h.driver(*n), Driver::Input | Driver::Const(_)) || h.is_ff_output(*n)
        })
        .collect();
    let q_anchors: Vec<NetId> = h.net_ids().filter(|n| h.is_ff_output(*n)).collect();
    // Output-side anchors.
    let po_anchors: Vec<NetId> = h
        .net_ids()
        .filter(|n| h.is_primary_output(*n) || h.feeds_ff_d(*n))
        .collect();
    let d_anchors: Vec<NetId> = h.net_ids().filter(|n| h.feeds_ff_d(*n)).collect();

    let dist_pi = bfs(h, &pi_anchors, true, sentinel);
    let dist_ff_q = bfs(h, &q_anchors, true, sentinel);
    let dist_po = bfs(h, &po_anchors, false, sentinel);
    let dist_ff_d = bfs(h, &d_anchors, false, sentinel);

    let values = h
        .net_ids()
        .map(|n| StructuralFeatures {
            fanin_l1: fanin_l1[n.idx()],
            fanout_l1: fanout_l1[n.idx()],
            fanin_l2: fanin_l2[n.idx()],
            fanout_l2: fanout_l2[n.idx()],
            dist_ff_d: dist_ff_d[n.idx()],
            dist_ff_q: dist_ff_q[n.idx()],
            dist_pi: dist_pi[n.idx()],
            dist_po: dist_po[n.idx()],
        })
        .collect();
    StructuralMap { values, sentinel }
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
    fn nand_into_inv() {
        let h = build(
            "module m (a, b, y);
               input a, b; output y;
               wire n1;
               NAND2 g1 (.a(a), .b(b), .y(n1));
               INV g2 (.a(n1), .y(y));
             endmodule",
        );
        let s = compute_structural(&h);
        let n1 = s.get(h.net_id("n1").unwrap());
        assert_eq!(n1.fanin_l1, 2);
        assert_eq!(n1.fanout_l1, 1);
        assert_eq!(n1.fanin_l2, 0, "level-1 inputs are primary inputs");
        let a = s.get(h.net_id("a").unwrap());
        assert_eq!(a.dist_pi, 0);
        assert_eq!(n1.dist_pi, 1);
        assert_eq!(a.fanout_l2, 1, "n1 feeds one pin");
    }

    #[test]
    fn c17_distances() {
        let h = build(crate::fixtures::C17);
        let s = compute_structural(&h);
        // N3 reaches N22 via g10/g22 in 2 hops and via g11/g16/g22 in 3.
        assert_eq!(s.get_by_name(&h, "N3").unwrap().dist_po, 2);
        assert_eq!(s.get_by_name(&h, "N22").unwrap().dist_po, 0);
        assert_eq!(s.get_by_name(&h, "N16").unwrap().dist_po, 1);
        // N16's driver sees PI N2 directly.
        assert_eq!(s.get_by_name(&h, "N16").unwrap().dist_pi, 1);
        assert_eq!(s.get_by_name(&h, "N22").unwrap().dist_pi, 2);
        // No flip-flops anywhere: sentinel distances.
        assert_eq!(s.get_by_name(&h, "N3").unwrap().dist_ff_d, s.sentinel);
        assert_eq!(s.get_by_name(&h, "N3").unwrap().dist_ff_q, s.sentinel);
    }

    #[test]
    fn ff_anchoring() {
        let h = build(
            "module m (clk, d, o);
               input clk, d; output o;
               wire w, q, x;
               INV g1 (.a(d), .y(w));
               DFF f (.d(w), .clk(clk), .q(q));
               INV g2 (.a(q), .y(x));
               INV g3 (.a(x), .y(o));
             endmodule",
        );
        let s = compute_structural(&h);
        assert_eq!(s.get_by_name(&h, "w").unwrap().dist_ff_d, 0);
        assert_eq!(s.get_by_name(&h, "d").unwrap().dist_ff_d, 1);
        assert_eq!(s.get_by_name(&h, "q").unwrap().dist_ff_q, 0);
        assert_eq!(s.get_by_name(&h, "x").unwrap().dist_ff_q, 1);
        // Q anchors the input side, D the output side.
        assert_eq!(s.get_by_name(&h, "q").unwrap().dist_pi, 0);
        assert_eq!(s.get_by_name(&h, "w").unwrap().dist_po, 0);
        assert_eq!(s.get_by_name(&h, "x").unwrap().dist_po, 1);
        // dist_ff_q = 0 exactly for flip-flop-driven nets.
        for net in h.net_ids() {
            let zero = s.get(net).dist_ff_q == 0;
            assert_eq!(zero, h.is_ff_output(net), "net {}", h.net_name(net));
        }
    }

    #[test]
    fn fanout_count_cross_check() {
        for src in [
            crate::fixtures::C17.to_string(),
            crate::netlist::emit_netlist(&crate::fixtures::uart_ish()),
        ] {
            let h = build(&src);
            let s = compute_structural(&h);
            let total_fanout: u64 = h.net_ids().map(|n| s.get(n).fanout_l1 as u64).sum();
            let total_pins: u64 = h
                .cells
                .iter()
                .map(|c| c.data_inputs().len() as u64)
                .sum();
            assert_eq!(total_fanout, total_pins);
        }
    }

    #[test]
    fn triangle_property_on_uart() {
        let src = crate::netlist::emit_netlist(&crate::fixtures::uart_ish());
        let h = build(&src);
        let s = compute_structural(&h);
        for u in h.net_ids() {
            for v in h.fanout(u) {
                assert!(
                    s.get(u).dist_po <= s.get(v).dist_po.saturating_add(1),
                    "triangle violated at {} -> {}",
                    h.net_name(u),
                    h.net_name(v)
                );
            }
        }
    }
}
