//! Directed hypergraph over a netlist: cells and PI/PO pseudo-nodes joined by
//! net-labeled edges, with a topological order over the combinational
//! subgraph (flip-flops cut: Q outputs become pseudo-primary inputs, D inputs
//! pseudo-primary outputs).

use crate::library::{CellKind, CellLibrary, CellType};
use crate::netlist::{Netlist, PinConn};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HypergraphError {
    #[error("combinational loop through nets: {}", cycle.join(" -> "))]
    CombinationalLoop { cycle: Vec<String> },
    #[error("unknown net `{0}`")]
    UnknownNet(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u32);

impl NetId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl CellId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    /// Primary input.
    Input,
    /// Constant pseudo-input.
    Const(bool),
    Cell(CellId),
}

/// How a net attaches to a sink cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PinRole {
    /// Combinational data input, by library pin position.
    Data(u8),
    FfD,
    FfClk,
    FfRst,
    FfEn,
}

impl PinRole {
    /// Clock/reset/enable pins are not traversed by any graph analysis.
    pub fn traversable(self) -> bool {
        matches!(self, PinRole::Data(_) | PinRole::FfD)
    }
}

#[derive(Debug, Clone)]
pub enum HCellKind {
    Comb {
        /// Input nets in library pin order.
        inputs: Vec<NetId>,
        output: NetId,
    },
    Seq {
        d: NetId,
        q: NetId,
        clk: NetId,
        rst: Option<NetId>,
        en: Option<NetId>,
    },
}

#[derive(Debug, Clone)]
pub struct HCell {
    pub name: String,
    pub type_idx: usize,
    pub kind: HCellKind,
}

impl HCell {
    pub fn output_net(&self) -> NetId {
        match &self.kind {
            HCellKind::Comb { output, .. } => *output,
            HCellKind::Seq { q, .. } => *q,
        }
    }

    /// Input nets traversed by graph analyses: all data pins for
    /// combinational cells, the D pin only for flip-flops.
    pub fn data_inputs(&self) -> &[NetId] {
        match &self.kind {
            HCellKind::Comb { inputs, .. } => inputs,
            HCellKind::Seq { d, .. } => std::slice::from_ref(d),
        }
    }

    pub fn is_seq(&self) -> bool {
        matches!(self.kind, HCellKind::Seq { .. })
    }
}

/// Clock and reset nets designated by configuration. They are excluded from
/// trigger/payload candidate sets and never traversed as data.
#[derive(Debug, Clone, Default)]
pub struct Designations {
    pub clocks: BTreeSet<String>,
    pub resets: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct Hypergraph {
    types: Vec<CellType>,
    pub cells: Vec<HCell>,
    net_names: Vec<String>,
    net_index: HashMap<String, NetId>,
    drivers: Vec<Driver>,
    sinks: Vec<Vec<(CellId, PinRole)>>,
    pis: Vec<NetId>,
    pos: Vec<NetId>,
    consts: Vec<(NetId, bool)>,
    clock_nets: BTreeSet<NetId>,
    reset_nets: BTreeSet<NetId>,
    /// Combinational cells in topological order.
    comb_topo: Vec<CellId>,
    seq_cells: Vec<CellId>,
}

impl Hypergraph {
    pub fn build(
        netlist: &Netlist,
        library: &CellLibrary,
        designations: &Designations,
    ) -> Result<Hypergraph, HypergraphError> {
        let mut net_names: Vec<String> = Vec::new();
        let mut net_index: HashMap<String, NetId> = HashMap::new();
        let add_net = |name: &str, names: &mut Vec<String>, index: &mut HashMap<String, NetId>| {
            if let Some(id) = index.get(name) {
                return *id;
            }
            let id = NetId(names.len() as u32);
            names.push(name.to_string());
            index.insert(name.to_string(), id);
            id
        };
        for net in netlist.net_names() {
            add_net(net, &mut net_names, &mut net_index);
        }

        // Shared constant pseudo-nets, created on demand with fresh names.
        let mut const_ids: [Option<NetId>; 2] = [None, None];
        let mut make_const = |value: bool,
                              names: &mut Vec<String>,
                              index: &mut HashMap<String, NetId>|
         -> NetId {
            if let Some(id) = const_ids[value as usize] {
                return id;
            }
            let mut name = format!("const{}", value as u8);
            while index.contains_key(&name) {
                name.push('_');
            }
            let id = NetId(names.len() as u32);
            names.push(name.clone());
            index.insert(name, id);
            const_ids[value as usize] = Some(id);
            id
        };

        let mut types: Vec<CellType> = Vec::new();
        let mut type_index: HashMap<String, usize> = HashMap::new();
        let mut cells: Vec<HCell> = Vec::new();
        for cell in &netlist.cells {
            let ct = library
                .get(&cell.cell_type)
                .expect("netlist validated before hypergraph construction");
            let type_idx = *type_index.entry(cell.cell_type.clone()).or_insert_with(|| {
                types.push(ct.clone());
                types.len() - 1
            });
            let mut resolve = |pin: &str| -> NetId {
                match cell.pin(pin).expect("validated: all pins connected") {
                    PinConn::Net(net) => *net_index.get(net).expect("validated net"),
                    PinConn::Const(b) => make_const(*b, &mut net_names, &mut net_index),
                }
            };
            let kind = match &ct.kind {
                CellKind::Comb(_) => HCellKind::Comb {
                    inputs: ct.inputs.iter().map(|p| resolve(p)).collect(),
                    output: resolve(&ct.output),
                },
                CellKind::Seq(s) => HCellKind::Seq {
                    d: resolve(&s.d),
                    q: resolve(&s.q),
                    clk: resolve(&s.clk),
                    rst: s.rst.as_ref().map(|p| resolve(p)),
                    en: s.en.as_ref().map(|p| resolve(p)),
                },
            };
            cells.push(HCell {
                name: cell.name.clone(),
                type_idx,
                kind,
            });
        }

        let n_nets = net_names.len();
        let mut drivers = vec![Driver::Input; n_nets];
        let mut driven = vec![false; n_nets];
        let mut sinks: Vec<Vec<(CellId, PinRole)>> = vec![Vec::new(); n_nets];
        let mut consts = Vec::new();
        for (i, v) in const_ids.iter().enumerate() {
            if let Some(id) = v {
                drivers[id.idx()] = Driver::Const(i == 1);
                driven[id.idx()] = true;
                consts.push((*id, i == 1));
            }
        }
        for pi in &netlist.inputs {
            driven[net_index[pi].idx()] = true;
        }
        for (ci, cell) in cells.iter().enumerate() {
            let cid = CellId(ci as u32);
            match &cell.kind {
                HCellKind::Comb { inputs, output } => {
                    drivers[output.idx()] = Driver::Cell(cid);
                    driven[output.idx()] = true;
                    for (pin_idx, net) in inputs.iter().enumerate() {
                        sinks[net.idx()].push((cid, PinRole::Data(pin_idx as u8)));
                    }
                }
                HCellKind::Seq { d, q, clk, rst, en } => {
                    drivers[q.idx()] = Driver::Cell(cid);
                    driven[q.idx()] = true;
                    sinks[d.idx()].push((cid, PinRole::FfD));
                    sinks[clk.idx()].push((cid, PinRole::FfClk));
                    if let Some(r) = rst {
                        sinks[r.idx()].push((cid, PinRole::FfRst));
                    }
                    if let Some(e) = en {
                        sinks[e.idx()].push((cid, PinRole::FfEn));
                    }
                }
            }
        }
        for s in &mut sinks {
            s.sort();
        }

        let pis: Vec<NetId> = netlist.inputs.iter().map(|n| net_index[n]).collect();
        let pos: Vec<NetId> = netlist.outputs.iter().map(|n| net_index[n]).collect();
        let clock_nets = designations
            .clocks
            .iter()
            .filter_map(|n| net_index.get(n).copied())
            .collect();
        let reset_nets = designations
            .resets
            .iter()
            .filter_map(|n| net_index.get(n).copied())
            .collect();

        let mut graph = Hypergraph {
            types,
            cells,
            net_names,
            net_index,
            drivers,
            sinks,
            pis,
            pos,
            consts,
            clock_nets,
            reset_nets,
            comb_topo: Vec::new(),
            seq_cells: Vec::new(),
        };
        graph.seq_cells = (0..graph.cells.len() as u32)
            .map(CellId)
            .filter(|c| graph.cells[c.idx()].is_seq())
            .collect();
        graph.comb_topo = graph.sort_combinational()?;
        Ok(graph)
    }

    /// Kahn's algorithm over combinational cells only; flip-flop Q outputs
    /// count as sources. On failure, reports one cycle by net names.
    fn sort_combinational(&self) -> Result<Vec<CellId>, HypergraphError> {
        let n = self.cells.len();
        let mut indegree = vec![0usize; n];
        let mut order = Vec::new();
        let mut queue: Vec<CellId> = Vec::new();
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.is_seq() {
                continue;
            }
            let deg = cell
                .data_inputs()
                .iter()
                .filter(|net| matches!(self.drivers[net.idx()], Driver::Cell(c) if !self.cells[c.idx()].is_seq()))
                .count();
            indegree[i] = deg;
            if deg == 0 {
                queue.push(CellId(i as u32));
            }
        }
        while let Some(cid) = queue.pop() {
            order.push(cid);
            let out = self.cells[cid.idx()].output_net();
            for &(sink, role) in &self.sinks[out.idx()] {
                if !role.traversable() || self.cells[sink.idx()].is_seq() {
                    continue;
                }
                // One sinks[] entry per pin, matching the per-pin indegree.
                indegree[sink.idx()] -= 1;
                if indegree[sink.idx()] == 0 {
                    queue.push(sink);
                }
            }
        }
        let comb_count = self.cells.iter().filter(|c| !c.is_seq()).count();
        if order.len() == comb_count {
            return Ok(order);
        }
        Err(HypergraphError::CombinationalLoop {
            cycle: self.find_cycle(&indegree),
        })
    }

    /// Walk driver edges among unsorted cells until a repeat: the cycle.
    fn find_cycle(&self, indegree: &[usize]) -> Vec<String> {
        let start = (0..self.cells.len())
            .find(|&i| !self.cells[i].is_seq() && indegree[i] > 0)
            .expect("a cycle exists");
        let mut path: Vec<usize> = vec![start];
        let mut seen: HashMap<usize, usize> = HashMap::new();
        seen.insert(start, 0);
        let mut current = start;
        loop {
            let next = self.cells[current]
                .data_inputs()
                .iter()
                .find_map(|net| match self.drivers[net.idx()] {
                    Driver::Cell(c) if !self.cells[c.idx()].is_seq() && indegree[c.idx()] > 0 => {
                        Some(c.idx())
                    }
                    _ => None,
                })
                .expect("unsorted cell must have an unsorted driver");
            if let Some(&pos) = seen.get(&next) {
                let mut cycle: Vec<String> = path[pos..]
                    .iter()
                    .map(|&c| self.net_names[self.cells[c].output_net().idx()].clone())
                    .collect();
                cycle.reverse();
                return cycle;
            }
            seen.insert(next, path.len());
            path.push(next);
            current = next;
        }
    }

    pub fn net_count(&self) -> usize {
        self.net_names.len()
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.net_names[id.idx()]
    }

    pub fn net_id(&self, name: &str) -> Result<NetId, HypergraphError> {
        self.net_index
            .get(name)
            .copied()
            .ok_or_else(|| HypergraphError::UnknownNet(name.to_string()))
    }

    pub fn net_ids(&self) -> impl Iterator<Item = NetId> {
        (0..self.net_names.len() as u32).map(NetId)
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.drivers[net.idx()]
    }

    pub fn sinks(&self, net: NetId) -> &[(CellId, PinRole)] {
        &self.sinks[net.idx()]
    }

    pub fn cell(&self, id: CellId) -> &HCell {
        &self.cells[id.idx()]
    }

    pub fn cell_type(&self, id: CellId) -> &CellType {
        &self.types[self.cells[id.idx()].type_idx]
    }

    pub fn primary_inputs(&self) -> &[NetId] {
        &self.pis
    }

    pub fn primary_outputs(&self) -> &[NetId] {
        &self.pos
    }

    pub fn constants(&self) -> &[(NetId, bool)] {
        &self.consts
    }

    pub fn comb_topo(&self) -> &[CellId] {
        &self.comb_topo
    }

    pub fn seq_cells(&self) -> &[CellId] {
        &self.seq_cells
    }

    pub fn is_primary_input(&self, net: NetId) -> bool {
        matches!(self.drivers[net.idx()], Driver::Input)
            && self.pis.contains(&net)
    }

    pub fn is_primary_output(&self, net: NetId) -> bool {
        self.pos.contains(&net)
    }

    pub fn is_const(&self, net: NetId) -> bool {
        matches!(self.drivers[net.idx()], Driver::Const(_))
    }

    /// Driven by a flip-flop Q pin.
    pub fn is_ff_output(&self, net: NetId) -> bool {
        matches!(self.drivers[net.idx()], Driver::Cell(c) if self.cells[c.idx()].is_seq())
    }

    /// Feeds at least one flip-flop D pin.
    pub fn feeds_ff_d(&self, net: NetId) -> bool {
        self.sinks[net.idx()]
            .iter()
            .any(|(_, r)| *r == PinRole::FfD)
    }

    pub fn is_clock(&self, net: NetId) -> bool {
        self.clock_nets.contains(&net)
    }

    pub fn is_reset(&self, net: NetId) -> bool {
        self.reset_nets.contains(&net)
    }

    /// Designated clock/reset nets plus anything wired to a flip-flop
    /// clock or reset pin.
    pub fn excluded_from_trojan_roles(&self, net: NetId) -> bool {
        self.is_clock(net)
            || self.is_reset(net)
            || self.sinks[net.idx()]
                .iter()
                .any(|(_, r)| matches!(r, PinRole::FfClk | PinRole::FfRst))
    }

    /// Input nets of the cell driving `net`; empty for primary inputs and
    /// constants. Flip-flops contribute their D net.
    pub fn fanin(&self, net: NetId) -> Vec<NetId> {
        match self.drivers[net.idx()] {
            Driver::Input | Driver::Const(_) => Vec::new(),
            Driver::Cell(c) => {
                let mut nets: Vec<NetId> = self.cells[c.idx()].data_inputs().to_vec();
                nets.sort();
                nets.dedup();
                nets
            }
        }
    }

    /// For each sink cell reached through a data pin, that cell's output net.
    pub fn fanout(&self, net: NetId) -> Vec<NetId> {
        let mut nets: Vec<NetId> = self.sinks[net.idx()]
            .iter()
            .filter(|(_, r)| r.traversable())
            .map(|(c, _)| self.cells[c.idx()].output_net())
            .collect();
        nets.sort();
        nets.dedup();
        nets
    }

    pub fn fanin_by_name(&self, net: &str) -> Result<Vec<String>, HypergraphError> {
        let id = self.net_id(net)?;
        Ok(self
            .fanin(id)
            .into_iter()
            .map(|n| self.net_name(n).to_string())
            .collect())
    }

    pub fn fanout_by_name(&self, net: &str) -> Result<Vec<String>, HypergraphError> {
        let id = self.net_id(net)?;
        Ok(self
            .fanout(id)
            .into_iter()
            .map(|n| self.net_name(n).to_string())
            .collect())
    }

    /// Backward closure over combinational cells from `seeds`, stopping at
    /// primary inputs, constants, and flip-flop outputs. Includes the seeds.
    pub fn comb_fanin_cone(&self, seeds: &[NetId]) -> BTreeSet<NetId> {
        let mut cone: BTreeSet<NetId> = BTreeSet::new();
        let mut stack: Vec<NetId> = seeds.to_vec();
        while let Some(net) = stack.pop() {
            if !cone.insert(net) {
                continue;
            }
            if let Driver::Cell(c) = self.drivers[net.idx()] {
                if !self.cells[c.idx()].is_seq() {
                    for &input in self.cells[c.idx()].data_inputs() {
                        if !cone.contains(&input) {
                            stack.push(input);
                        }
                    }
                }
            }
        }
        cone
    }

    /// Primary inputs, constants, and flip-flop Q nets feeding the
    /// combinational cone of `seeds`.
    pub fn cone_support(&self, seeds: &[NetId]) -> Vec<NetId> {
        self.comb_fanin_cone(seeds)
            .into_iter()
            .filter(|net| !matches!(self.drivers[net.idx()], Driver::Cell(c) if !self.cells[c.idx()].is_seq()))
            .collect()
    }
}
