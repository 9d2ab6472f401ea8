//! SCOAP controllability/observability measures, generalized to arbitrary
//! library cells through their truth-table cube sets.
//!
//! Controllability of a cell output to value v is `1 + min` over the prime
//! cubes forcing v of the summed input controllabilities; observability of an
//! input pin is the output observability plus 1 plus the cheapest sensitizing
//! assignment of the remaining pins. The full-scan variant cuts the graph at
//! flip-flops (Q controllable like a primary input, D observable like a
//! primary output, sequential measures identically zero). The no-scan
//! variant propagates through flip-flops with an added clocking cost and +1
//! sequential depth per crossing, iterated to a fixed point with saturating
//! arithmetic over sequential loops.

use crate::hypergraph::{Driver, HCellKind, Hypergraph, NetId, PinRole};
use crate::library::Cube;

/// Values saturate at this ceiling instead of overflowing or becoming an
/// infinity sentinel.
pub const DEFAULT_SCOAP_CEILING: u64 = (1 << 31) - 1;

/// Sweep cap for the no-scan fixed point.
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoapValues {
    pub cc0: u64,
    pub cc1: u64,
    pub co: u64,
    pub sc0: u64,
    pub sc1: u64,
    pub so: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanVariant {
    FullScan,
    NoScan,
}

#[derive(Debug, Clone)]
pub struct ScoapMap {
    pub variant: ScanVariant,
    pub ceiling: u64,
    values: Vec<ScoapValues>,
    /// False when the no-scan fixed point hit the sweep cap.
    pub converged: bool,
}

impl ScoapMap {
    #[inline]
    pub fn get(&self, net: NetId) -> ScoapValues {
        self.values[net.idx()]
    }
}

/// Euclidean norms of the controllability pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllabilityNorm {
    pub net_cc: f64,
    pub net_sc: f64,
}

pub fn controllability_norms(scoap: &ScoapMap) -> Vec<ControllabilityNorm> {
    scoap
        .values
        .iter()
        .map(|v| ControllabilityNorm {
            net_cc: (v.cc0 as f64).hypot(v.cc1 as f64),
            net_sc: (v.sc0 as f64).hypot(v.sc1 as f64),
        })
        .collect()
}

#[inline]
fn sat_add(a: u64, b: u64, ceiling: u64) -> u64 {
    a.saturating_add(b).min(ceiling)
}

/// Sum one controllability array over a cube's literals, counting a net once
/// even when it occupies several pins. `None` when the cube binds pins of
/// one net to conflicting values.
fn cube_cost(cube: Cube, inputs: &[NetId], cost0: &[u64], cost1: &[u64], ceiling: u64) -> Option<u64> {
    let mut total = 0u64;
    let mut done: u64 = 0;
    for (pin, net) in inputs.iter().enumerate() {
        let Some(v) = cube.specifies(pin) else {
            continue;
        };
        // Check other pins of the same net for conflicts.
        let mut first_pin = pin;
        for (p2, n2) in inputs.iter().enumerate() {
            if n2 == net {
                first_pin = first_pin.min(p2);
                if let Some(v2) = cube.specifies(p2) {
                    if v2 != v {
                        return None;
                    }
                }
            }
        }
        if done >> first_pin & 1 == 1 {
            continue;
        }
        done |= 1 << first_pin;
        let c = if v { cost1[net.idx()] } else { cost0[net.idx()] };
        total = sat_add(total, c, ceiling);
    }
    Some(total)
}

fn min_cube_cost(
    cubes: &[Cube],
    inputs: &[NetId],
    cost0: &[u64],
    cost1: &[u64],
    ceiling: u64,
) -> u64 {
    cubes
        .iter()
        .filter_map(|c| cube_cost(*c, inputs, cost0, cost1, ceiling))
        .min()
        .unwrap_or(ceiling)
}

struct FfCosts {
    /// Clock pulse: cc1(clk) + cc0(clk).
    kappa: u64,
    /// Holding reset inactive: cc0(rst).
    rho_off: u64,
    /// Holding enable active: cc1(en).
    eps_on: u64,
    /// Asserting reset: cc1(rst), ceiling when there is no reset pin.
    rho_on: u64,
    /// Sequential costs of the same conditions.
    sigma_off: u64,
    sigma_en: u64,
    sigma_rst: u64,
    has_rst: bool,
}

fn ff_costs(
    clk: NetId,
    rst: Option<NetId>,
    en: Option<NetId>,
    cc0: &[u64],
    cc1: &[u64],
    sc0: &[u64],
    sc1: &[u64],
    ceiling: u64,
) -> FfCosts {
    FfCosts {
        kappa: sat_add(cc1[clk.idx()], cc0[clk.idx()], ceiling),
        rho_off: rst.map(|r| cc0[r.idx()]).unwrap_or(0),
        eps_on: en.map(|e| cc1[e.idx()]).unwrap_or(0),
        rho_on: rst.map(|r| cc1[r.idx()]).unwrap_or(ceiling),
        sigma_off: rst.map(|r| sc0[r.idx()]).unwrap_or(0),
        sigma_en: en.map(|e| sc1[e.idx()]).unwrap_or(0),
        sigma_rst: rst.map(|r| sc1[r.idx()]).unwrap_or(ceiling),
        has_rst: rst.is_some(),
    }
}

pub fn compute_scoap(h: &Hypergraph, variant: ScanVariant, ceiling: u64) -> ScoapMap {
    let n = h.net_count();
    let mut cc0 = vec![ceiling; n];
    let mut cc1 = vec![ceiling; n];
    let mut sc0 = vec![ceiling; n];
    let mut sc1 = vec![ceiling; n];

    for net in h.net_ids() {
        match h.driver(net) {
            Driver::Input => {
                cc0[net.idx()] = 1;
                cc1[net.idx()] = 1;
                sc0[net.idx()] = 0;
                sc1[net.idx()] = 0;
            }
            Driver::Const(v) => {
                if v {
                    cc1[net.idx()] = 1;
                    sc1[net.idx()] = 0;
                } else {
                    cc0[net.idx()] = 1;
                    sc0[net.idx()] = 0;
                }
            }
            Driver::Cell(_) => {}
        }
    }
    if variant == ScanVariant::FullScan {
        // Scan access: Q is directly controllable.
        for &cid in h.seq_cells() {
            if let HCellKind::Seq { q, .. } = &h.cell(cid).kind {
                cc0[q.idx()] = 1;
                cc1[q.idx()] = 1;
                sc0[q.idx()] = 0;
                sc1[q.idx()] = 0;
            }
        }
    }

    let comb_cc_pass = |cc0: &mut Vec<u64>, cc1: &mut Vec<u64>, sc0: &mut Vec<u64>, sc1: &mut Vec<u64>| {
        for &cid in h.comb_topo() {
            let cell = h.cell(cid);
            let (inputs, output) = match &cell.kind {
                HCellKind::Comb { inputs, output } => (inputs, *output),
                HCellKind::Seq { .. } => unreachable!(),
            };
            let cubes = &h.cell_type(cid).comb().expect("comb cell").cubes;
            cc0[output.idx()] = sat_add(
                1,
                min_cube_cost(&cubes.forcing[0], inputs, cc0, cc1, ceiling),
                ceiling,
            );
            cc1[output.idx()] = sat_add(
                1,
                min_cube_cost(&cubes.forcing[1], inputs, cc0, cc1, ceiling),
                ceiling,
            );
            sc0[output.idx()] = min_cube_cost(&cubes.forcing[0], inputs, sc0, sc1, ceiling);
            sc1[output.idx()] = min_cube_cost(&cubes.forcing[1], inputs, sc0, sc1, ceiling);
        }
    };

    let mut converged = true;
    match variant {
        ScanVariant::FullScan => {
            comb_cc_pass(&mut cc0, &mut cc1, &mut sc0, &mut sc1);
            // Sequential measures are identically zero under full scan.
            for v in sc0.iter_mut().chain(sc1.iter_mut()) {
                *v = 0;
            }
        }
        ScanVariant::NoScan => {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                comb_cc_pass(&mut cc0, &mut cc1, &mut sc0, &mut sc1);
                let mut changed = false;
                for &cid in h.seq_cells() {
                    if let HCellKind::Seq { d, q, clk, rst, en } = &h.cell(cid).kind {
                        let f = ff_costs(*clk, *rst, *en, &cc0, &cc1, &sc0, &sc1, ceiling);
                        let drive = sat_add(f.kappa, sat_add(f.rho_off, f.eps_on, ceiling), ceiling);
                        let new_cc1 = sat_add(cc1[d.idx()], drive, ceiling);
                        let mut new_cc0 = sat_add(cc0[d.idx()], drive, ceiling);
                        let seq_extra = sat_add(f.sigma_off, f.sigma_en, ceiling);
                        let new_sc1 = sat_add(sc1[d.idx()], sat_add(seq_extra, 1, ceiling), ceiling);
                        let mut new_sc0 =
                            sat_add(sc0[d.idx()], sat_add(seq_extra, 1, ceiling), ceiling);
                        if f.has_rst {
                            new_cc0 = new_cc0.min(sat_add(f.rho_on, f.kappa, ceiling));
                            new_sc0 = new_sc0.min(sat_add(f.sigma_rst, 1, ceiling));
                        }
                        for (slot, new) in [
                            (&mut cc1[q.idx()], new_cc1),
                            (&mut cc0[q.idx()], new_cc0),
                            (&mut sc1[q.idx()], new_sc1),
                            (&mut sc0[q.idx()], new_sc0),
                        ] {
                            if *slot != new {
                                *slot = new;
                                changed = true;
                            }
                        }
                    }
                }
                if !changed {
                    break;
                }
                if sweeps >= MAX_SWEEPS {
                    converged = false;
                    break;
                }
            }
        }
    }

    // Observability, in reverse topological order. Under full scan every
    // flip-flop D pin is a capture point; under no scan only primary outputs
    // are, and crossing a flip-flop costs a clock pulse and +1 sequential.
    let mut co = vec![ceiling; n];
    let mut so = vec![ceiling; n];
    for &po in h.primary_outputs() {
        co[po.idx()] = 0;
        so[po.idx()] = 0;
    }
    if variant == ScanVariant::FullScan {
        for net in h.net_ids() {
            if h.feeds_ff_d(net) {
                co[net.idx()] = 0;
                so[net.idx()] = 0;
            }
        }
    }

    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for &cid in h.comb_topo().iter().rev() {
            let cell = h.cell(cid);
            let (inputs, output) = match &cell.kind {
                HCellKind::Comb { inputs, output } => (inputs, *output),
                HCellKind::Seq { .. } => unreachable!(),
            };
            let cubes = &h.cell_type(cid).comb().expect("comb cell").cubes;
            for (pin, net) in inputs.iter().enumerate() {
                let sens = &cubes.sensitizing[pin];
                if sens.is_empty() {
                    continue;
                }
                let sens_cc = min_cube_cost(sens, inputs, &cc0, &cc1, ceiling);
                let sens_sc = min_cube_cost(sens, inputs, &sc0, &sc1, ceiling);
                let cand_co = sat_add(co[output.idx()], sat_add(1, sens_cc, ceiling), ceiling);
                let cand_so = sat_add(so[output.idx()], sens_sc, ceiling);
                if cand_co < co[net.idx()] {
                    co[net.idx()] = cand_co;
                    changed = true;
                }
                if cand_so < so[net.idx()] {
                    so[net.idx()] = cand_so;
                    changed = true;
                }
            }
        }
        if variant == ScanVariant::NoScan {
            for &cid in h.seq_cells() {
                if let HCellKind::Seq { d, q, clk, rst, en } = &h.cell(cid).kind {
                    let f = ff_costs(*clk, *rst, *en, &cc0, &cc1, &sc0, &sc1, ceiling);
                    let drive = sat_add(f.kappa, sat_add(f.rho_off, f.eps_on, ceiling), ceiling);
                    let cand_co = sat_add(co[q.idx()], drive, ceiling);
                    let seq_extra = sat_add(f.sigma_off, f.sigma_en, ceiling);
                    let cand_so = sat_add(so[q.idx()], sat_add(seq_extra, 1, ceiling), ceiling);
                    if cand_co < co[d.idx()] {
                        co[d.idx()] = cand_co;
                        changed = true;
                    }
                    if cand_so < so[d.idx()] {
                        so[d.idx()] = cand_so;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            converged = false;
            break;
        }
    }
    if variant == ScanVariant::FullScan {
        for v in so.iter_mut() {
            *v = 0;
        }
    }

    let values = (0..n)
        .map(|i| ScoapValues {
            cc0: cc0[i],
            cc1: cc1[i],
            co: co[i],
            sc0: sc0[i],
            sc1: sc1[i],
            so: so[i],
        })
        .collect();
    ScoapMap {
        variant,
        ceiling,
        values,
        converged,
    }
}

/// Re-check the controllability recurrence at every combinational node.
/// Used by tests as a post-computation invariant.
pub fn recurrence_holds(h: &Hypergraph, map: &ScoapMap) -> bool {
    let n = h.net_count();
    let mut cc0 = vec![0u64; n];
    let mut cc1 = vec![0u64; n];
    for net in h.net_ids() {
        cc0[net.idx()] = map.get(net).cc0;
        cc1[net.idx()] = map.get(net).cc1;
    }
    for &cid in h.comb_topo() {
        let cell = h.cell(cid);
        let (inputs, output) = match &cell.kind {
            HCellKind::Comb { inputs, output } => (inputs, *output),
            HCellKind::Seq { .. } => unreachable!(),
        };
        let cubes = &h.cell_type(cid).comb().expect("comb cell").cubes;
        let want0 = sat_add(
            1,
            min_cube_cost(&cubes.forcing[0], inputs, &cc0, &cc1, map.ceiling),
            map.ceiling,
        );
        let want1 = sat_add(
            1,
            min_cube_cost(&cubes.forcing[1], inputs, &cc0, &cc1, map.ceiling),
            map.ceiling,
        );
        if cc0[output.idx()] != want0 || cc1[output.idx()] != want1 {
            return false;
        }
    }
    true
}
