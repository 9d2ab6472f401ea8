//! Trojan subcircuit construction: randomized trigger trees whose output is
//! logic 1 exactly when every trigger net holds its rare value, plus
//! sequential bodies (counters and small FSMs) gated by that trigger.

use super::InjectError;
use crate::hypergraph::NetId;
use crate::library::{CellLibrary, CellType};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A net reference inside an un-materialized subcircuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubNet {
    /// Tap of an existing host net.
    Host(NetId),
    Local(u32),
}

#[derive(Debug, Clone)]
pub struct SubCell {
    pub ty: String,
    /// (pin, connection) for every pin of the cell type.
    pub pins: Vec<(String, SubNet)>,
}

#[derive(Debug, Clone)]
pub struct Subcircuit {
    pub cells: Vec<SubCell>,
    pub n_locals: u32,
    /// The single assert output driving the payload splice.
    pub output: u32,
    /// The trigger-tree output (equals `output` for combinational bodies).
    pub enable: u32,
    /// Gate levels from the taps to the trigger-tree output.
    pub trigger_depth: u32,
    pub uses_seq: bool,
}

impl Subcircuit {
    fn new() -> Subcircuit {
        Subcircuit {
            cells: Vec::new(),
            n_locals: 0,
            output: 0,
            enable: 0,
            trigger_depth: 0,
            uses_seq: false,
        }
    }

    fn fresh(&mut self) -> u32 {
        self.n_locals += 1;
        self.n_locals - 1
    }

    fn comb(&mut self, ct: &CellType, inputs: &[SubNet]) -> SubNet {
        debug_assert_eq!(ct.inputs.len(), inputs.len());
        let out = self.fresh();
        let mut pins: Vec<(String, SubNet)> = ct
            .inputs
            .iter()
            .cloned()
            .zip(inputs.iter().copied())
            .collect();
        pins.push((ct.output.clone(), SubNet::Local(out)));
        self.cells.push(SubCell {
            ty: ct.name.clone(),
            pins,
        });
        SubNet::Local(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeqKind {
    Counter {
        width: u32,
        max: u32,
    },
    Fsm {
        states: u32,
        /// Advance past the assert state back to the first state.
        wrap: bool,
        /// Fall back to the first state when the trigger is inactive.
        decay: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeqParams {
    pub kind: SeqKind,
}

struct GatePool<'a> {
    inv: &'a CellType,
    /// (arity, cell) per family, ascending arity.
    and: Vec<&'a CellType>,
    nand: Vec<&'a CellType>,
    nor: Vec<&'a CellType>,
}

impl<'a> GatePool<'a> {
    fn new(lib: &'a CellLibrary) -> Result<GatePool<'a>, InjectError> {
        let get = |name: &str| lib.get(name).filter(|c| !c.is_seq());
        let family = |prefix: &str| -> Vec<&CellType> {
            (2..=4)
                .filter_map(|k| get(&format!("{prefix}{k}")))
                .collect()
        };
        let inv = get("INV").ok_or_else(|| InjectError::MissingCell { name: "INV".into() })?;
        let and = family("AND");
        let nand = family("NAND");
        let nor = family("NOR");
        if and.is_empty() && nand.is_empty() && nor.is_empty() {
            return Err(InjectError::MissingCell {
                name: "AND2/NAND2/NOR2".into(),
            });
        }
        Ok(GatePool { inv, and, nand, nor })
    }

    fn arities(&self) -> Vec<usize> {
        let mut a: Vec<usize> = self
            .and
            .iter()
            .chain(&self.nand)
            .chain(&self.nor)
            .map(|c| c.inputs.len())
            .collect();
        a.sort();
        a.dedup();
        a
    }

    fn of(&self, family: Family, arity: usize) -> Option<&'a CellType> {
        let list = match family {
            Family::And => &self.and,
            Family::Nand => &self.nand,
            Family::Nor => &self.nor,
        };
        list.iter().copied().find(|c| c.inputs.len() == arity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    And,
    Nand,
    Nor,
}

/// A wire carrying the conjunction of a subset of trigger literals, possibly
/// inverted, at a known gate depth.
#[derive(Debug, Clone, Copy)]
struct Term {
    net: SubNet,
    inverted: bool,
    depth: u32,
}

/// Build a randomized gate tree over the trigger taps whose output is 1
/// exactly when every trigger net holds its rare value.
pub fn build_trigger_tree(
    lib: &CellLibrary,
    triggers: &[(NetId, bool)],
    rng: &mut impl Rng,
) -> Result<Subcircuit, InjectError> {
    let pool = GatePool::new(lib)?;
    let mut sub = Subcircuit::new();
    let mut terms: Vec<Term> = triggers
        .iter()
        .map(|(net, rare)| Term {
            net: SubNet::Host(*net),
            // rare value 0 means the literal is the net's complement, so
            // the raw tap is the inverted literal.
            inverted: !rare,
            depth: 0,
        })
        .collect();
    debug_assert!(!terms.is_empty());

    let arities = pool.arities();
    while terms.len() > 1 {
        let max_k = *arities.iter().filter(|k| **k <= terms.len()).max().unwrap_or(&2);
        let k = if max_k <= 2 {
            2.min(terms.len())
        } else {
            // Bias toward narrow gates for deeper trees.
            let choices: Vec<usize> = arities.iter().copied().filter(|k| *k <= max_k).collect();
            let weights: Vec<usize> = choices.iter().map(|k| 2usize.pow(5 - *k as u32)).collect();
            let total: usize = weights.iter().sum();
            let mut pick = rng.gen_range(0..total);
            let mut sel = choices[0];
            for (c, w) in choices.iter().zip(&weights) {
                if pick < *w {
                    sel = *c;
                    break;
                }
                pick -= *w;
            }
            sel
        };
        let k = k.min(terms.len()).max(2);
        let mut children: Vec<Term> = Vec::with_capacity(k);
        for _ in 0..k {
            let idx = rng.gen_range(0..terms.len());
            children.push(terms.swap_remove(idx));
        }

        // Candidate realizations given the children's polarities after
        // optional inverter unification.
        let all_pos = children.iter().all(|t| !t.inverted);
        let all_neg = children.iter().all(|t| t.inverted);
        let mut options: Vec<(Family, bool /* unify to inverted */, bool /* out inverted */)> =
            Vec::new();
        if pool.of(Family::And, k).is_some() {
            options.push((Family::And, false, false));
        }
        if pool.of(Family::Nand, k).is_some() {
            options.push((Family::Nand, false, true));
        }
        if pool.of(Family::Nor, k).is_some() {
            options.push((Family::Nor, true, false));
        }
        // Prefer options that avoid inverters when the children already
        // agree, but keep the choice randomized.
        let preferred: Vec<_> = options
            .iter()
            .copied()
            .filter(|(_, unify_inv, _)| (all_pos && !unify_inv) || (all_neg && *unify_inv))
            .collect();
        let (family, unify_inverted, out_inverted) = if !preferred.is_empty() && rng.gen_bool(0.7)
        {
            *preferred.choose(rng).unwrap()
        } else {
            *options.choose(rng).unwrap()
        };

        let mut depth = 0u32;
        let inputs: Vec<SubNet> = children
            .iter()
            .map(|t| {
                let mut net = t.net;
                let mut d = t.depth;
                if t.inverted != unify_inverted {
                    net = sub.comb(pool.inv, &[net]);
                    d += 1;
                }
                depth = depth.max(d);
                net
            })
            .collect();
        let ct = pool.of(family, k).expect("option was availability-checked");
        let out = sub.comb(ct, &inputs);
        terms.push(Term {
            net: out,
            inverted: out_inverted,
            depth: depth + 1,
        });
    }

    let mut root = terms.pop().unwrap();
    if root.inverted {
        root = Term {
            net: sub.comb(pool.inv, &[root.net]),
            inverted: false,
            depth: root.depth + 1,
        };
    }
    // Keep the trigger tree at least two gate levels deep.
    while root.depth < 2 {
        root = Term {
            net: sub.comb(pool.inv, &[root.net]),
            inverted: true,
            depth: root.depth + 1,
        };
        root = Term {
            net: sub.comb(pool.inv, &[root.net]),
            inverted: false,
            depth: root.depth + 1,
        };
    }
    let SubNet::Local(out) = root.net else {
        unreachable!("single-trigger trees still pass through the depth padding")
    };
    sub.output = out;
    sub.enable = out;
    sub.trigger_depth = root.depth;
    Ok(sub)
}

struct FfPins<'a> {
    ct: &'a CellType,
    d: String,
    q: String,
    clk: String,
    rst: Option<String>,
}

fn pick_ff<'a>(lib: &'a CellLibrary, want_rst: bool) -> Result<FfPins<'a>, InjectError> {
    let ct = lib
        .find_dff(want_rst, false)
        .or_else(|| lib.find_dff(false, false))
        .ok_or(InjectError::LibraryMissingSequentialCell)?;
    let seq = ct.seq().expect("find_dff returns sequential cells");
    Ok(FfPins {
        ct,
        d: seq.d.clone(),
        q: seq.q.clone(),
        clk: seq.clk.clone(),
        rst: seq.rst.clone(),
    })
}

/// Append a flip-flop driving the pre-declared local `q`.
fn add_ff(sub: &mut Subcircuit, ff: &FfPins, d: SubNet, q: u32, clk: NetId, rst: Option<NetId>) {
    let mut pins = vec![
        (ff.d.clone(), d),
        (ff.clk.clone(), SubNet::Host(clk)),
        (ff.q.clone(), SubNet::Local(q)),
    ];
    if let Some(rpin) = &ff.rst {
        pins.push((
            rpin.clone(),
            SubNet::Host(rst.expect("reset pin requires a host reset net")),
        ));
    }
    sub.cells.push(SubCell {
        ty: ff.ct.name.clone(),
        pins,
    });
    sub.uses_seq = true;
}

/// AND-reduce `literals` (net, positive?) with 2-input gates and inverters.
fn and_reduce(
    sub: &mut Subcircuit,
    pool: &GatePool,
    literals: &[(SubNet, bool)],
) -> Result<SubNet, InjectError> {
    let and2 = pool
        .of(Family::And, 2)
        .ok_or_else(|| InjectError::MissingCell { name: "AND2".into() })?;
    let mut acc: Option<SubNet> = None;
    for (net, positive) in literals {
        let term = if *positive {
            *net
        } else {
            sub.comb(pool.inv, &[*net])
        };
        acc = Some(match acc {
            None => term,
            Some(prev) => sub.comb(and2, &[prev, term]),
        });
    }
    acc.ok_or_else(|| InjectError::MissingCell {
        name: "empty conjunction".into(),
    })
}

fn or_reduce(
    sub: &mut Subcircuit,
    pool: &GatePool,
    terms: &[SubNet],
) -> Result<SubNet, InjectError> {
    // OR(a, b) = NOT(NOR(a, b)) keeps the pool requirements small.
    if terms.is_empty() {
        return Err(InjectError::MissingCell {
            name: "empty disjunction".into(),
        });
    }
    let nor2 = pool.of(Family::Nor, 2);
    let nand2 = pool.of(Family::Nand, 2);
    let mut acc = terms[0];
    for t in &terms[1..] {
        acc = if let Some(nor2) = nor2 {
            let n = sub.comb(nor2, &[acc, *t]);
            sub.comb(pool.inv, &[n])
        } else if let Some(nand2) = nand2 {
            // OR(a, b) = NAND(!a, !b)
            let na = sub.comb(pool.inv, &[acc]);
            let nb = sub.comb(pool.inv, &[*t]);
            sub.comb(nand2, &[na, nb])
        } else {
            return Err(InjectError::MissingCell { name: "NOR2/NAND2".into() });
        };
    }
    Ok(acc)
}

/// Counter body: the trigger output enables a ripple counter; the assert
/// output compares the count against a chosen maximum.
pub fn build_counter_body(
    lib: &CellLibrary,
    sub: &mut Subcircuit,
    clk: NetId,
    rst: Option<NetId>,
    width: u32,
    max: u32,
    rng: &mut impl Rng,
) -> Result<(), InjectError> {
    let _ = rng;
    let pool = GatePool::new(lib)?;
    let xor2 = lib
        .get("XOR2")
        .filter(|c| !c.is_seq())
        .ok_or_else(|| InjectError::MissingCell { name: "XOR2".into() })?;
    let and2 = pool
        .of(Family::And, 2)
        .ok_or_else(|| InjectError::MissingCell { name: "AND2".into() })?;
    let ff = pick_ff(lib, rst.is_some())?;
    let enable = SubNet::Local(sub.enable);

    // Declare the state bits first so the increment logic can reference
    // them before the flip-flop cells are appended.
    let bits: Vec<u32> = (0..width).map(|_| sub.fresh()).collect();
    let mut carry = enable;
    let mut d_nets = Vec::new();
    for (i, &b) in bits.iter().enumerate() {
        let d = sub.comb(xor2, &[SubNet::Local(b), carry]);
        d_nets.push(d);
        if i + 1 < bits.len() {
            carry = sub.comb(and2, &[carry, SubNet::Local(b)]);
        }
    }
    for (&b, d) in bits.iter().zip(d_nets) {
        add_ff(sub, &ff, d, b, clk, rst);
    }

    let literals: Vec<(SubNet, bool)> = bits
        .iter()
        .enumerate()
        .map(|(i, &b)| (SubNet::Local(b), max >> i & 1 == 1))
        .collect();
    let assert = and_reduce(sub, &pool, &literals)?;
    let SubNet::Local(out) = assert else { unreachable!() };
    sub.output = out;
    Ok(())
}

/// FSM body: trigger-driven transitions along a randomized state encoding,
/// asserting in the final state.
pub fn build_fsm_body(
    lib: &CellLibrary,
    sub: &mut Subcircuit,
    clk: NetId,
    rst: Option<NetId>,
    states: u32,
    wrap: bool,
    decay: bool,
    rng: &mut impl Rng,
) -> Result<(), InjectError> {
    let pool = GatePool::new(lib)?;
    let ff = pick_ff(lib, rst.is_some())?;
    let width = 32 - (states - 1).leading_zeros();
    let width = width.max(1);

    // Encoding: state 0 is all-zero (the reset state); the rest of the
    // codes are a seeded shuffle.
    let mut rest: Vec<u32> = (1..(1u32 << width)).collect();
    rest.shuffle(rng);
    let codes: Vec<u32> = std::iter::once(0).chain(rest).take(states as usize).collect();

    let enable = SubNet::Local(sub.enable);
    let not_enable = sub.comb(pool.inv, &[enable]);
    let bits: Vec<u32> = (0..width).map(|_| sub.fresh()).collect();

    // next(state, en): advance along the code sequence when en, otherwise
    // stay or decay to the start; unused codes recover to the start.
    let next_code = |idx: usize, en: bool| -> u32 {
        if en {
            if idx + 1 < codes.len() {
                codes[idx + 1]
            } else if wrap {
                codes[0]
            } else {
                codes[idx]
            }
        } else if decay {
            codes[0]
        } else {
            codes[idx]
        }
    };

    // One AND-reduced minterm per (reachable state, enable value) whose
    // next-state has the target bit set.
    let mut d_nets: Vec<SubNet> = Vec::new();
    for bit in 0..width {
        let mut minterms: Vec<SubNet> = Vec::new();
        for (idx, &code) in codes.iter().enumerate() {
            for en in [false, true] {
                if next_code(idx, en) >> bit & 1 == 0 {
                    continue;
                }
                let mut literals: Vec<(SubNet, bool)> = bits
                    .iter()
                    .enumerate()
                    .map(|(j, &b)| (SubNet::Local(b), code >> j & 1 == 1))
                    .collect();
                literals.push(if en { (enable, true) } else { (not_enable, true) });
                minterms.push(and_reduce(sub, &pool, &literals)?);
            }
        }
        let d = if minterms.is_empty() {
            // This bit is never set: tie it to a constant-0 conjunction.
            let always = and_reduce(sub, &pool, &[(enable, true), (enable, false)])?;
            always
        } else {
            or_reduce(sub, &pool, &minterms)?
        };
        d_nets.push(d);
    }
    for (&b, d) in bits.iter().zip(d_nets) {
        add_ff(sub, &ff, d, b, clk, rst);
    }

    let assert_code = codes[codes.len() - 1];
    let literals: Vec<(SubNet, bool)> = bits
        .iter()
        .enumerate()
        .map(|(j, &b)| (SubNet::Local(b), assert_code >> j & 1 == 1))
        .collect();
    let assert = and_reduce(sub, &pool, &literals)?;
    let SubNet::Local(out) = assert else { unreachable!() };
    sub.output = out;
    Ok(())
}

