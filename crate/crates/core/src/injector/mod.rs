//! Automated Trojan insertion for pseudo-self-referencing training data:
//! rare-net trigger selection with a threshold sweep, randomized trigger
//! trees, counter/FSM sequential bodies, payload selection, XOR splicing,
//! and justification-backed validity checks.

mod builder;
mod justify;

pub use builder::{SeqKind, SeqParams, SubCell, SubNet, Subcircuit};
pub use justify::{justify, verify_witness, Justification, JustifyBudget};

use crate::features::FeatureExtraction;
use crate::hypergraph::{Designations, HCellKind, Hypergraph, HypergraphError, NetId};
use crate::library::CellLibrary;
use crate::netlist::{Cell, Netlist, NetlistError, PinConn};
use crate::seeding::derive_seed;
use crate::sim::{eval_comb, free_inputs, observation_points};
use crate::structural::StructuralMap;
use crate::testability::{ProbabilityMap, ScoapMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Prefix family reserved for injected cells and nets.
pub const RESERVED_PREFIX: &str = "troj";

#[derive(Debug, Error)]
pub enum InjectError {
    #[error("only {found} trigger candidates below threshold {threshold} (need {required})")]
    InsufficientCandidates {
        threshold: f64,
        found: usize,
        required: usize,
    },
    #[error("no valid payload net outside the trigger cone")]
    NoValidPayload,
    #[error("library has no flip-flop cell")]
    LibraryMissingSequentialCell,
    #[error("sequential Trojan needs a clock but the host has none")]
    NoClockAvailable,
    #[error("name `{name}` collides with the reserved Trojan prefix")]
    NameCollision { name: String },
    #[error("library is missing a required cell: {name}")]
    MissingCell { name: String },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error("instance {instance}: exhausted the threshold sweep: {last}")]
    GenerationExhausted { instance: usize, last: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrojanClass {
    Comb,
    Seq,
}

impl std::fmt::Display for TrojanClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrojanClass::Comb => write!(f, "comb"),
            TrojanClass::Seq => write!(f, "seq"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriggerSpec {
    pub trigger_count: usize,
    pub rarity_threshold: f64,
    /// (net, rare value) pairs feeding the trigger tree.
    pub trigger_nets: Vec<(String, bool)>,
    pub tree_seed: u64,
}

/// Everything recorded about one inserted Trojan; doubles as the labeled
/// ground truth for the instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrojanInstance {
    pub kind: TrojanClass,
    pub trigger: TriggerSpec,
    pub payload_net: String,
    pub inserted_cells: Vec<String>,
    pub trojan_nets: BTreeSet<String>,
    /// Trigger-tree output: 1 exactly when all trigger nets sit at their
    /// rare values.
    pub enable_net: String,
    /// Assert output driving the payload XOR.
    pub output_net: String,
    pub seq_params: Option<SeqParams>,
    /// Free-input assignment justifying the trigger condition.
    pub witness: Option<BTreeMap<String, bool>>,
}

/// All nets whose rarer level falls below `threshold`, rarest first.
/// Clock/reset nets, constants, and reserved-prefix nets are excluded.
pub fn select_trigger_candidates(
    h: &Hypergraph,
    probs: &ProbabilityMap,
    threshold: f64,
    required: usize,
) -> Result<Vec<(NetId, bool)>, InjectError> {
    let mut candidates: Vec<(f64, NetId, bool)> = Vec::new();
    for net in h.net_ids() {
        if h.excluded_from_trojan_roles(net)
            || h.is_const(net)
            || h.net_name(net).starts_with(RESERVED_PREFIX)
        {
            continue;
        }
        let (rare_value, rarity) = probs.get(net).rare();
        if rarity < threshold {
            candidates.push((rarity, net, rare_value));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| h.net_name(a.1).cmp(h.net_name(b.1)))
    });
    if candidates.len() < required {
        return Err(InjectError::InsufficientCandidates {
            threshold,
            found: candidates.len(),
            required,
        });
    }
    Ok(candidates.into_iter().map(|(_, n, v)| (n, v)).collect())
}

/// Pick a victim net: outside the trigger cone, spliceable, reaching a
/// primary output, with combinational observability in the lower half of
/// the design's distribution.
pub fn select_payload(
    h: &Hypergraph,
    scoap_full: &ScoapMap,
    structural: &StructuralMap,
    trigger_cone: &BTreeSet<NetId>,
    rng: &mut impl Rng,
) -> Result<NetId, InjectError> {
    let mut cos: Vec<u64> = h.net_ids().map(|n| scoap_full.get(n).co).collect();
    cos.sort_unstable();
    let median = cos[cos.len() / 2];
    let eligible: Vec<NetId> = h
        .net_ids()
        .filter(|&net| {
            !trigger_cone.contains(&net)
                && !h.excluded_from_trojan_roles(net)
                && !h.is_const(net)
                && !h.is_primary_output(net)
                && !h.net_name(net).starts_with(RESERVED_PREFIX)
                && h.sinks(net).iter().any(|(_, r)| r.traversable())
                && structural.get(net).dist_po < structural.sentinel
                && scoap_full.get(net).co <= median
        })
        .collect();
    if eligible.is_empty() {
        return Err(InjectError::NoValidPayload);
    }
    Ok(eligible[rng.gen_range(0..eligible.len())])
}

/// Host clock/reset nets a sequential Trojan body should use.
fn host_clock_reset(h: &Hypergraph) -> Result<(NetId, Option<NetId>), InjectError> {
    let mut clock = None;
    let mut reset = None;
    for net in h.net_ids() {
        if clock.is_none() && h.is_clock(net) {
            clock = Some(net);
        }
        if reset.is_none() && h.is_reset(net) {
            reset = Some(net);
        }
    }
    if clock.is_none() {
        // Fall back to the clock of the first flip-flop.
        for &cid in h.seq_cells() {
            if let HCellKind::Seq { clk, rst, .. } = &h.cell(cid).kind {
                clock = Some(*clk);
                if reset.is_none() {
                    reset = *rst;
                }
                break;
            }
        }
    }
    clock.map(|c| (c, reset)).ok_or(InjectError::NoClockAvailable)
}

/// Build a combinational Trojan: a randomized trigger tree.
pub fn build_combinational_trojan(
    lib: &CellLibrary,
    triggers: &[(NetId, bool)],
    seed: u64,
) -> Result<Subcircuit, InjectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    builder::build_trigger_tree(lib, triggers, &mut rng)
}

/// Build a sequential Trojan: the trigger tree gates a counter or FSM body.
pub fn build_sequential_trojan(
    lib: &CellLibrary,
    h: &Hypergraph,
    triggers: &[(NetId, bool)],
    seed: u64,
) -> Result<(Subcircuit, SeqParams), InjectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (clk, rst) = host_clock_reset(h)?;
    let rst = if lib.find_dff(true, false).is_some() {
        rst
    } else {
        None
    };
    let mut sub = builder::build_trigger_tree(lib, triggers, &mut rng)?;
    let kind = if rng.gen_bool(0.5) {
        let width = rng.gen_range(2..=8u32);
        let max = rng.gen_range(1..(1u32 << width));
        builder::build_counter_body(lib, &mut sub, clk, rst, width, max, &mut rng)?;
        SeqKind::Counter { width, max }
    } else {
        let states = rng.gen_range(3..=8u32);
        let wrap = rng.gen_bool(0.5);
        let decay = rng.gen_bool(0.5);
        builder::build_fsm_body(lib, &mut sub, clk, rst, states, wrap, decay, &mut rng)?;
        SeqKind::Fsm { states, wrap, decay }
    };
    Ok((sub, SeqParams { kind }))
}

pub struct InsertedTrojan {
    pub netlist: Netlist,
    pub inserted_cells: Vec<String>,
    pub trojan_nets: BTreeSet<String>,
    pub enable_net: String,
    pub output_net: String,
    pub payload_net: String,
}

/// Materialize `sub` into the host netlist under `prefix` and splice its
/// output into `victim` through an XOR. Trigger nets are tapped, never cut;
/// every sink pin of the victim is rewired to the XOR output.
pub fn insert_trojan(
    host: &Netlist,
    h: &Hypergraph,
    lib: &CellLibrary,
    sub: &Subcircuit,
    victim: NetId,
    prefix: &str,
) -> Result<InsertedTrojan, InjectError> {
    for name in host.net_names() {
        if name.starts_with(prefix) {
            return Err(InjectError::NameCollision { name: name.into() });
        }
    }
    for cell in &host.cells {
        if cell.name.starts_with(prefix) {
            return Err(InjectError::NameCollision {
                name: cell.name.clone(),
            });
        }
    }
    let xor = lib
        .get("XOR2")
        .filter(|c| !c.is_seq())
        .ok_or_else(|| InjectError::MissingCell { name: "XOR2".into() })?;
    let victim_name = h.net_name(victim).to_string();
    let local_name = |i: u32| format!("{prefix}n{i}");
    let pay_net = format!("{prefix}pay");
    let resolve = |s: &SubNet| -> String {
        match s {
            SubNet::Host(n) => h.net_name(*n).to_string(),
            SubNet::Local(i) => local_name(*i),
        }
    };

    let mut cells: Vec<Cell> = Vec::with_capacity(host.cells.len() + sub.cells.len() + 1);
    for cell in &host.cells {
        let ct = lib.get(&cell.cell_type).expect("host validated");
        let mut new_cell = cell.clone();
        for (pin, conn) in &mut new_cell.pins {
            if *pin == ct.output {
                continue;
            }
            if let PinConn::Net(net) = conn {
                if *net == victim_name {
                    *net = pay_net.clone();
                }
            }
        }
        cells.push(new_cell);
    }
    let mut inserted_cells = Vec::new();
    let mut trojan_nets: BTreeSet<String> = (0..sub.n_locals).map(local_name).collect();
    trojan_nets.insert(pay_net.clone());
    for (j, sc) in sub.cells.iter().enumerate() {
        let name = format!("{prefix}g{j}");
        inserted_cells.push(name.clone());
        cells.push(Cell {
            name,
            cell_type: sc.ty.clone(),
            pins: sc.pins.iter().map(|(p, s)| (p.clone(), PinConn::Net(resolve(s)))).collect(),
        });
    }
    let splice_name = format!("{prefix}px");
    inserted_cells.push(splice_name.clone());
    cells.push(Cell {
        name: splice_name,
        cell_type: xor.name.clone(),
        pins: vec![
            (xor.inputs[0].clone(), PinConn::Net(victim_name)),
            (xor.inputs[1].clone(), PinConn::Net(local_name(sub.output))),
            (xor.output.clone(), PinConn::Net(pay_net.clone())),
        ],
    });

    let mut wires = host.wires.clone();
    wires.extend(trojan_nets.iter().cloned());
    let netlist = Netlist {
        name: host.name.clone(),
        cells,
        inputs: host.inputs.clone(),
        outputs: host.outputs.clone(),
        wires,
    };
    netlist.validate(lib)?;
    Ok(InsertedTrojan {
        netlist,
        inserted_cells,
        trojan_nets,
        enable_net: local_name(sub.enable),
        output_net: local_name(sub.output),
        payload_net: h.net_name(victim).to_string(),
    })
}

/// Justify all trigger nets at their rare values simultaneously under the
/// full-scan assumption.
pub fn validate_trigger(
    h: &Hypergraph,
    triggers: &[(NetId, bool)],
    budget: &JustifyBudget,
    rng: &mut impl Rng,
) -> Justification {
    justify(h, triggers, budget, rng)
}

#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub class: TrojanClass,
    pub trigger_count: usize,
    pub instances: usize,
    /// Threshold sweep bounds; thresholds step by x10 from lo to hi.
    pub sweep_lo: f64,
    pub sweep_hi: f64,
    pub seed: u64,
    pub budget: JustifyBudget,
    pub attempts_per_threshold: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            class: TrojanClass::Comb,
            trigger_count: 8,
            instances: 50,
            sweep_lo: 1e-4,
            sweep_hi: 1e-1,
            seed: 0,
            budget: JustifyBudget::default(),
            attempts_per_threshold: 25,
        }
    }
}

pub fn sweep_thresholds(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = lo;
    while t < hi * (1.0 + 1e-12) && t < 0.5 {
        out.push(t);
        t *= 10.0;
    }
    if out.is_empty() {
        out.push(lo);
    }
    out
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub design_id: String,
    pub netlist: Netlist,
    pub record: TrojanInstance,
}

/// Generate `instances` validated Trojan-inserted variants of the host
/// design. Each instance sweeps the rarity threshold upward until a
/// satisfiable trigger set with a legal payload is found.
pub fn generate_training_set(
    host: &Netlist,
    lib: &CellLibrary,
    designations: &Designations,
    fx: &FeatureExtraction,
    cfg: &GenerateConfig,
) -> Result<Vec<GeneratedInstance>, InjectError> {
    let h = Hypergraph::build(host, lib, designations)?;
    let thresholds = sweep_thresholds(cfg.sweep_lo, cfg.sweep_hi);

    let generate_one = |i: usize| -> Result<GeneratedInstance, InjectError> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            cfg.seed,
            &format!("inject/{}/{}", cfg.class, cfg.trigger_count),
            i as u64,
        ));
        let mut last: Option<InjectError> = None;
        for &threshold in &thresholds {
            let candidates = match select_trigger_candidates(
                &h,
                &fx.probabilities,
                threshold,
                cfg.trigger_count,
            ) {
                Ok(c) => c,
                Err(e) => {
                    last = Some(e);
                    continue;
                }
            };
            for _ in 0..cfg.attempts_per_threshold {
                let mut picked: Vec<(NetId, bool)> = Vec::with_capacity(cfg.trigger_count);
                let mut pool = candidates.clone();
                for _ in 0..cfg.trigger_count {
                    let idx = rng.gen_range(0..pool.len());
                    picked.push(pool.swap_remove(idx));
                }
                let witness = match validate_trigger(&h, &picked, &cfg.budget, &mut rng) {
                    Justification::Satisfiable { witness } => witness,
                    Justification::Unsatisfiable | Justification::Undecided => continue,
                };
                let tree_seed = rng.gen::<u64>();
                let (sub, seq_params) = match cfg.class {
                    TrojanClass::Comb => {
                        (build_combinational_trojan(lib, &picked, tree_seed)?, None)
                    }
                    TrojanClass::Seq => {
                        let (s, p) = build_sequential_trojan(lib, &h, &picked, tree_seed)?;
                        (s, Some(p))
                    }
                };
                let cone_seeds: Vec<NetId> = picked.iter().map(|(n, _)| *n).collect();
                let cone = h.comb_fanin_cone(&cone_seeds);
                let victim =
                    match select_payload(&h, &fx.scoap_full, &fx.structural, &cone, &mut rng) {
                        Ok(v) => v,
                        Err(e) => {
                            last = Some(e);
                            continue;
                        }
                    };
                let prefix = {
                    let mut p = format!("{RESERVED_PREFIX}{i}_");
                    while host.net_names().any(|n| n.starts_with(&p))
                        || host.cells.iter().any(|c| c.name.starts_with(&p))
                    {
                        p = format!("{}x_", &p[..p.len() - 1]);
                    }
                    p
                };
                let inserted = insert_trojan(host, &h, lib, &sub, victim, &prefix)?;
                // The payload rule forbids combinational loops; verify.
                if Hypergraph::build(&inserted.netlist, lib, designations).is_err() {
                    last = Some(InjectError::NoValidPayload);
                    continue;
                }
                let record = TrojanInstance {
                    kind: cfg.class,
                    trigger: TriggerSpec {
                        trigger_count: cfg.trigger_count,
                        rarity_threshold: threshold,
                        trigger_nets: picked
                            .iter()
                            .map(|(n, v)| (h.net_name(*n).to_string(), *v))
                            .collect(),
                        tree_seed,
                    },
                    payload_net: inserted.payload_net.clone(),
                    inserted_cells: inserted.inserted_cells,
                    trojan_nets: inserted.trojan_nets,
                    enable_net: inserted.enable_net,
                    output_net: inserted.output_net,
                    seq_params,
                    witness: Some(witness),
                };
                return Ok(GeneratedInstance {
                    design_id: format!("{}_t{}_i{:03}", cfg.class, cfg.trigger_count, i),
                    netlist: inserted.netlist,
                    record,
                });
            }
            if last.is_none() {
                last = Some(InjectError::NoValidPayload);
            }
        }
        Err(InjectError::GenerationExhausted {
            instance: i,
            last: last
                .map(|e| e.to_string())
                .unwrap_or_else(|| "no feasible threshold".into()),
        })
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..cfg.instances)
            .into_par_iter()
            .map(generate_one)
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..cfg.instances).map(generate_one).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StealthOutcome {
    pub vectors: usize,
    /// Observation-point mismatches on vectors where the Trojan output was 0.
    pub inactive_mismatches: usize,
    /// Vectors that activated the Trojan output.
    pub activations: usize,
}

/// Dual-simulate the clean and Trojan-inserted designs over random vectors
/// on the combinational view (flip-flop outputs are free inputs). Primary
/// outputs and host flip-flop D pins must match whenever the Trojan output
/// is inactive.
pub fn stealth_check(
    lib: &CellLibrary,
    designations: &Designations,
    clean: &Netlist,
    trojaned: &Netlist,
    record: &TrojanInstance,
    vectors: usize,
    seed: u64,
) -> Result<StealthOutcome, InjectError> {
    let hc = Hypergraph::build(clean, lib, designations)?;
    let ht = Hypergraph::build(trojaned, lib, designations)?;
    let out_net = ht.net_id(&record.output_net)?;
    let free_t = free_inputs(&ht);
    let free_c: BTreeMap<String, NetId> = free_inputs(&hc).into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vc = vec![false; hc.net_count()];
    let mut vt = vec![false; ht.net_count()];
    let mut outcome = StealthOutcome {
        vectors,
        inactive_mismatches: 0,
        activations: 0,
    };
    for _ in 0..vectors {
        for (key, net) in &free_t {
            let v: bool = rng.gen();
            vt[net.idx()] = v;
            if let Some(cnet) = free_c.get(key) {
                vc[cnet.idx()] = v;
            }
        }
        eval_comb(&hc, &mut vc);
        eval_comb(&ht, &mut vt);
        if vt[out_net.idx()] {
            outcome.activations += 1;
            continue;
        }
        let obs_c = observation_points(&hc, &vc);
        let obs_t: BTreeMap<String, bool> = observation_points(&ht, &vt).into_iter().collect();
        if obs_c.iter().any(|(k, v)| obs_t.get(k) != Some(v)) {
            outcome.inactive_mismatches += 1;
        }
    }
    Ok(outcome)
}

/// Simulate the recorded witness on the Trojan-inserted design and check
/// that the trigger tree fires.
pub fn witness_activates(
    lib: &CellLibrary,
    designations: &Designations,
    trojaned: &Netlist,
    record: &TrojanInstance,
) -> Result<bool, InjectError> {
    let h = Hypergraph::build(trojaned, lib, designations)?;
    let Some(witness) = &record.witness else {
        return Ok(false);
    };
    let mut values = vec![false; h.net_count()];
    for (name, v) in witness {
        if let Ok(id) = h.net_id(name) {
            values[id.idx()] = *v;
        }
    }
    eval_comb(&h, &mut values);
    let enable = h.net_id(&record.enable_net)?;
    Ok(values[enable.idx()])
}

#[cfg(test)]
mod tests;
