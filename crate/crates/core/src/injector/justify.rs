//! Backtracking justification of simultaneous net values over the
//! combinational cone, under the full-scan assumption (flip-flop outputs are
//! free pseudo-primary inputs). Decisions are made only at free inputs;
//! implications are propagated by three-valued simulation of the cone.
//! Falls back to random simulation when the cone support is too wide or the
//! backtrack budget runs out.

use crate::hypergraph::{CellId, Driver, HCellKind, Hypergraph, NetId};
use crate::sim::{eval_cell_ternary, Ternary};
use rand::Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub enum Justification {
    /// Values for the cone's free inputs, keyed by net name. Unlisted
    /// inputs are don't-care.
    Satisfiable { witness: BTreeMap<String, bool> },
    Unsatisfiable,
    /// Budget exhausted without a verdict.
    Undecided,
}

#[derive(Debug, Clone)]
pub struct JustifyBudget {
    /// Backtrack limit for the decision search.
    pub max_backtracks: usize,
    /// Cone supports wider than this skip the search and go straight to
    /// random simulation.
    pub max_support: usize,
    /// Vectors for the random-simulation fallback.
    pub random_vectors: usize,
}

impl Default for JustifyBudget {
    fn default() -> Self {
        JustifyBudget {
            max_backtracks: 50_000,
            max_support: 64,
            random_vectors: 20_000,
        }
    }
}

struct ConeView<'a> {
    h: &'a Hypergraph,
    /// Combinational cells of the cone, topologically ordered.
    cells: Vec<CellId>,
    /// Free inputs (PIs and flip-flop outputs) feeding the cone.
    support: Vec<NetId>,
}

impl<'a> ConeView<'a> {
    fn new(h: &'a Hypergraph, goals: &[(NetId, bool)]) -> ConeView<'a> {
        let seeds: Vec<NetId> = goals.iter().map(|(n, _)| *n).collect();
        let cone = h.comb_fanin_cone(&seeds);
        let cells: Vec<CellId> = h
            .comb_topo()
            .iter()
            .copied()
            .filter(|c| cone.contains(&h.cell(*c).output_net()))
            .collect();
        let support: Vec<NetId> = cone
            .iter()
            .copied()
            .filter(|n| match h.driver(*n) {
                Driver::Input => true,
                Driver::Const(_) => false,
                Driver::Cell(c) => h.cell(c).is_seq(),
            })
            .collect();
        ConeView { h, cells, support }
    }

    fn eval_ternary(&self, values: &mut [Ternary]) {
        for &cid in &self.cells {
            let cell = self.h.cell(cid);
            if let HCellKind::Comb { inputs, output } = &cell.kind {
                let tt = &self.h.cell_type(cid).comb().expect("comb").truth;
                let ins: Vec<Ternary> = inputs.iter().map(|n| values[n.idx()]).collect();
                values[output.idx()] = eval_cell_ternary(tt, &ins);
            }
        }
    }

    fn eval_binary(&self, values: &mut [bool]) {
        for &cid in &self.cells {
            let cell = self.h.cell(cid);
            if let HCellKind::Comb { inputs, output } = &cell.kind {
                let tt = &self.h.cell_type(cid).comb().expect("comb").truth;
                let mut row = 0u64;
                for (i, n) in inputs.iter().enumerate() {
                    if values[n.idx()] {
                        row |= 1 << i;
                    }
                }
                values[output.idx()] = tt.eval_row(row);
            }
        }
    }
}

pub fn justify(
    h: &Hypergraph,
    goals: &[(NetId, bool)],
    budget: &JustifyBudget,
    rng: &mut impl Rng,
) -> Justification {
    // Trivially contradictory goal sets.
    let mut wanted: BTreeMap<NetId, bool> = BTreeMap::new();
    for (net, v) in goals {
        if let Some(prev) = wanted.insert(*net, *v) {
            if prev != *v {
                return Justification::Unsatisfiable;
            }
        }
    }
    let cone = ConeView::new(h, goals);
    if cone.support.len() <= budget.max_support {
        match search(h, &cone, goals, budget.max_backtracks) {
            SearchResult::Sat(witness) => return Justification::Satisfiable { witness },
            SearchResult::Unsat => return Justification::Unsatisfiable,
            SearchResult::BudgetExhausted => {}
        }
    }
    random_fallback(h, &cone, goals, budget.random_vectors, rng)
}

enum SearchResult {
    Sat(BTreeMap<String, bool>),
    Unsat,
    BudgetExhausted,
}

fn search(
    h: &Hypergraph,
    cone: &ConeView,
    goals: &[(NetId, bool)],
    max_backtracks: usize,
) -> SearchResult {
    let n = h.net_count();
    let mut values = vec![Ternary::X; n];
    for &(net, v) in h.constants() {
        values[net.idx()] = Ternary::from_bool(v);
    }
    // (input net, value, second branch already taken)
    let mut stack: Vec<(NetId, bool, bool)> = Vec::new();
    let mut backtracks = 0usize;

    let propagate = |stack: &[(NetId, bool, bool)], values: &mut Vec<Ternary>| {
        for v in values.iter_mut() {
            *v = Ternary::X;
        }
        for &(net, val) in h.constants() {
            values[net.idx()] = Ternary::from_bool(val);
        }
        for &(pi, v, _) in stack {
            values[pi.idx()] = Ternary::from_bool(v);
        }
        cone.eval_ternary(values);
    };

    propagate(&stack, &mut values);
    loop {
        // Conflict?
        let conflict = goals
            .iter()
            .any(|(net, v)| values[net.idx()].known().is_some_and(|k| k != *v));
        if conflict {
            // Backtrack: flip the deepest single-branch decision.
            loop {
                match stack.pop() {
                    None => return SearchResult::Unsat,
                    Some((pi, v, false)) => {
                        backtracks += 1;
                        if backtracks > max_backtracks {
                            return SearchResult::BudgetExhausted;
                        }
                        stack.push((pi, !v, true));
                        break;
                    }
                    Some((_, _, true)) => continue,
                }
            }
            propagate(&stack, &mut values);
            continue;
        }
        // Satisfied?
        if goals
            .iter()
            .all(|(net, v)| values[net.idx()].known() == Some(*v))
        {
            let witness = stack
                .iter()
                .map(|(pi, v, _)| (h.net_name(*pi).to_string(), *v))
                .collect();
            return SearchResult::Sat(witness);
        }
        // Pick an open objective and backtrace it to a free input.
        let (obj_net, obj_val) = goals
            .iter()
            .copied()
            .find(|(net, _)| values[net.idx()] == Ternary::X)
            .expect("no conflict and not satisfied implies an open goal");
        match backtrace(h, &values, obj_net, obj_val) {
            Some((pi, v)) => {
                stack.push((pi, v, false));
                propagate(&stack, &mut values);
            }
            None => {
                // No X-path: treat as a conflict on this branch.
                loop {
                    match stack.pop() {
                        None => return SearchResult::Unsat,
                        Some((pi, v, false)) => {
                            backtracks += 1;
                            if backtracks > max_backtracks {
                                return SearchResult::BudgetExhausted;
                            }
                            stack.push((pi, !v, true));
                            break;
                        }
                        Some((_, _, true)) => continue,
                    }
                }
                propagate(&stack, &mut values);
            }
        }
    }
}

/// Walk from an X-valued objective toward a free input whose assignment may
/// help produce `want` on `net`.
fn backtrace(
    h: &Hypergraph,
    values: &[Ternary],
    mut net: NetId,
    mut want: bool,
) -> Option<(NetId, bool)> {
    for _ in 0..h.net_count() + 1 {
        match h.driver(net) {
            Driver::Input => return Some((net, want)),
            Driver::Const(_) => return None,
            Driver::Cell(c) if h.cell(c).is_seq() => return Some((net, want)),
            Driver::Cell(c) => {
                let cell = h.cell(c);
                let HCellKind::Comb { inputs, .. } = &cell.kind else {
                    unreachable!()
                };
                let cubes = &h.cell_type(c).comb().expect("comb").cubes;
                // Prefer a forcing cube consistent with current knowns that
                // still has an X literal to drive.
                let mut next: Option<(NetId, bool)> = None;
                'cubes: for cube in &cubes.forcing[want as usize] {
                    let mut x_lit = None;
                    for (pin, val) in cube.literals(inputs.len()) {
                        let in_net = inputs[pin];
                        match values[in_net.idx()].known() {
                            Some(k) if k != val => continue 'cubes,
                            Some(_) => {}
                            None => x_lit = Some((in_net, val)),
                        }
                    }
                    if let Some(l) = x_lit {
                        next = Some(l);
                        break;
                    }
                }
                // Fallback: any X input, aiming at any cube literal.
                if next.is_none() {
                    'outer: for cube in &cubes.forcing[want as usize] {
                        for (pin, val) in cube.literals(inputs.len()) {
                            if values[inputs[pin].idx()] == Ternary::X {
                                next = Some((inputs[pin], val));
                                break 'outer;
                            }
                        }
                    }
                }
                let (n, v) = next?;
                net = n;
                want = v;
            }
        }
    }
    None
}

fn random_fallback(
    h: &Hypergraph,
    cone: &ConeView,
    goals: &[(NetId, bool)],
    vectors: usize,
    rng: &mut impl Rng,
) -> Justification {
    let mut values = vec![false; h.net_count()];
    for _ in 0..vectors {
        for &s in &cone.support {
            values[s.idx()] = rng.gen();
        }
        for &(net, v) in h.constants() {
            values[net.idx()] = v;
        }
        cone.eval_binary(&mut values);
        if goals.iter().all(|(net, v)| values[net.idx()] == *v) {
            let witness = cone
                .support
                .iter()
                .map(|s| (h.net_name(*s).to_string(), values[s.idx()]))
                .collect();
            return Justification::Satisfiable { witness };
        }
    }
    Justification::Undecided
}

/// Binary-simulate the cone under `witness` (unlisted inputs low) and check
/// every goal. Used to validate witnesses independently of the search.
pub fn verify_witness(
    h: &Hypergraph,
    goals: &[(NetId, bool)],
    witness: &BTreeMap<String, bool>,
) -> bool {
    let cone = ConeView::new(h, goals);
    let mut values = vec![false; h.net_count()];
    for (name, v) in witness {
        if let Ok(id) = h.net_id(name) {
            values[id.idx()] = *v;
        }
    }
    for &(net, v) in h.constants() {
        values[net.idx()] = v;
    }
    cone.eval_binary(&mut values);
    goals.iter().all(|(net, v)| values[net.idx()] == *v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Designations;
    use crate::library::CellLibrary;
    use crate::netlist::parse_netlist;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn build(src: &str) -> Hypergraph {
        let lib = CellLibrary::default_library();
        let n = parse_netlist(src, &lib).unwrap();
        Hypergraph::build(&n, &lib, &Designations::default()).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn independent_cones_concatenate() {
        let h = build(
            "module m (a, b, c, d, x, y);
               input a, b, c, d; output x, y;
               AND2 g1 (.a(a), .b(b), .y(x));
               NOR2 g2 (.a(c), .b(d), .y(y));
             endmodule",
        );
        let goals = [(h.net_id("x").unwrap(), true), (h.net_id("y").unwrap(), true)];
        match justify(&h, &goals, &JustifyBudget::default(), &mut rng()) {
            Justification::Satisfiable { witness } => {
                assert!(verify_witness(&h, &goals, &witness));
                assert_eq!(witness.get("a"), Some(&true));
                assert_eq!(witness.get("c"), Some(&false));
            }
            other => panic!("expected sat, got {other:?}"),
        }
    }

    #[test]
    fn complementary_goals_unsat() {
        let h = build(
            "module m (x, p, q);
               input x; output p, q;
               BUF g1 (.a(x), .y(p));
               INV g2 (.a(x), .y(q));
             endmodule",
        );
        let goals = [(h.net_id("p").unwrap(), true), (h.net_id("q").unwrap(), true)];
        assert!(matches!(
            justify(&h, &goals, &JustifyBudget::default(), &mut rng()),
            Justification::Unsatisfiable
        ));
    }

    #[test]
    fn reconvergent_unsat_detected() {
        // y = a & !a is never 1.
        let h = build(
            "module m (a, y);
               input a; output y;
               wire na;
               INV g1 (.a(a), .y(na));
               AND2 g2 (.a(a), .b(na), .y(y));
             endmodule",
        );
        let goals = [(h.net_id("y").unwrap(), true)];
        assert!(matches!(
            justify(&h, &goals, &JustifyBudget::default(), &mut rng()),
            Justification::Unsatisfiable
        ));
    }

    #[test]
    fn ff_outputs_are_free() {
        let h = build(
            "module m (clk, d, o);
               input clk, d; output o;
               wire q, w;
               DFF f (.d(d), .clk(clk), .q(q));
               AND2 g (.a(q), .b(d), .y(w));
               BUF b (.a(w), .y(o));
             endmodule",
        );
        let goals = [(h.net_id("w").unwrap(), true)];
        match justify(&h, &goals, &JustifyBudget::default(), &mut rng()) {
            Justification::Satisfiable { witness } => {
                assert_eq!(witness.get("q"), Some(&true));
            }
            other => panic!("expected sat, got {other:?}"),
        }
    }

    /// Exhaustive oracle: for cones with small support, the justifier's
    /// verdict must match brute-force enumeration.
    #[test]
    fn matches_exhaustive_oracle() {
        let h = build(crate::fixtures::C17);
        let nets: Vec<NetId> = h.net_ids().collect();
        let support: Vec<NetId> = h.primary_inputs().to_vec();
        let mut r = rng();
        for trial in 0..200 {
            // Random goal set over 1..=3 nets.
            let k = 1 + trial % 3;
            let mut goals = Vec::new();
            for j in 0..k {
                let net = nets[(trial * 7 + j * 13) % nets.len()];
                goals.push((net, (trial + j) % 2 == 0));
            }
            // Oracle.
            let mut sat = false;
            let mut values = vec![false; h.net_count()];
            'outer: for m in 0..(1u32 << support.len()) {
                for (i, pi) in support.iter().enumerate() {
                    values[pi.idx()] = m >> i & 1 == 1;
                }
                crate::sim::eval_comb(&h, &mut values);
                if goals.iter().all(|(net, v)| values[net.idx()] == *v) {
                    sat = true;
                    break 'outer;
                }
            }
            match justify(&h, &goals, &JustifyBudget::default(), &mut r) {
                Justification::Satisfiable { witness } => {
                    assert!(sat, "justifier found witness where oracle says unsat");
                    assert!(verify_witness(&h, &goals, &witness));
                }
                Justification::Unsatisfiable => assert!(!sat, "justifier missed a witness"),
                Justification::Undecided => panic!("budget should suffice on c17"),
            }
        }
    }
}
