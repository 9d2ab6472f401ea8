//! Structural gate-level netlist parsing and emission.
//!
//! The accepted dialect is deliberately narrow: a single module, scalar or
//! bus port/wire declarations, and gate instantiations with named port
//! connections. Behavioural constructs are rejected, positional connections
//! are rejected, and buses are flattened to scalar nets at parse time
//! (`a[3]` becomes `a_3_`).

use crate::library::CellLibrary;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: behavioural construct `{construct}` is not supported")]
    BehavioralConstruct { line: usize, construct: String },
    #[error("line {line}: positional port connections are not supported (instance `{instance}`)")]
    PositionalConnection { line: usize, instance: String },
    #[error("instance `{instance}`: unknown cell type `{cell_type}`")]
    UnknownCellType {
        instance: String,
        cell_type: String,
    },
    #[error("net `{net}` has multiple drivers")]
    MultipleDrivers { net: String },
    #[error("instance `{instance}`: required pin `{pin}` is unconnected")]
    DanglingPin { instance: String, pin: String },
    #[error("instance `{instance}`: pin `{pin}` is not declared by cell type `{cell_type}`")]
    UnknownPin {
        instance: String,
        pin: String,
        cell_type: String,
    },
    #[error("net `{net}` is used but has no driver")]
    UndrivenNet { net: String },
    #[error("duplicate instance name `{instance}`")]
    DuplicateInstance { instance: String },
    #[error("port `{port}` is declared both input and output")]
    OverlappingPort { port: String },
    #[error("line {line}: whole-bus connection `{name}` is not supported; connect individual bits")]
    BusConnection { line: usize, name: String },
    #[error("name collision after flattening: `{name}`")]
    NameCollision { name: String },
}

/// A pin-to-net connection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PinConn {
    Net(String),
    Const(bool),
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub name: String,
    pub cell_type: String,
    /// (pin name, connection), in declaration order.
    pub pins: Vec<(String, PinConn)>,
}

impl Cell {
    pub fn pin(&self, name: &str) -> Option<&PinConn> {
        self.pins.iter().find(|(p, _)| p == name).map(|(_, c)| c)
    }
}

/// An immutable structural netlist. All net names are flat scalars.
#[derive(Debug, Clone, Default)]
pub struct Netlist {
    pub name: String,
    pub cells: Vec<Cell>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Internal nets (everything that is neither input nor output).
    pub wires: Vec<String>,
}

impl Netlist {
    /// Every net name: inputs, outputs, then internal wires.
    pub fn net_names(&self) -> impl Iterator<Item = &str> {
        self.inputs
            .iter()
            .chain(self.outputs.iter())
            .chain(self.wires.iter())
            .map(|s| s.as_str())
    }

    pub fn net_count(&self) -> usize {
        self.inputs.len() + self.outputs.len() + self.wires.len()
    }

    pub fn has_net(&self, name: &str) -> bool {
        self.net_names().any(|n| n == name)
    }

    /// Structural equality up to cell order and wire declaration order.
    pub fn same_graph(&self, other: &Netlist) -> bool {
        let sorted = |v: &[String]| -> Vec<String> {
            let mut v = v.to_vec();
            v.sort();
            v
        };
        let cell_key = |c: &Cell| {
            let mut pins = c.pins.clone();
            pins.sort_by(|a, b| a.0.cmp(&b.0));
            (c.name.clone(), c.cell_type.clone(), pins)
        };
        let mut a: Vec<_> = self.cells.iter().map(cell_key).collect();
        let mut b: Vec<_> = other.cells.iter().map(cell_key).collect();
        a.sort();
        b.sort();
        sorted(&self.inputs) == sorted(&other.inputs)
            && sorted(&self.outputs) == sorted(&other.outputs)
            && sorted(&self.wires) == sorted(&other.wires)
            && a == b
    }

    /// Check all netlist invariants against a library: known cell types,
    /// complete pin sets, single drivers, no undriven nets, disjoint ports.
    pub fn validate(&self, library: &CellLibrary) -> Result<(), NetlistError> {
        let inputs: BTreeSet<&str> = self.inputs.iter().map(|s| s.as_str()).collect();
        let outputs: BTreeSet<&str> = self.outputs.iter().map(|s| s.as_str()).collect();
        if let Some(p) = inputs.intersection(&outputs).next() {
            return Err(NetlistError::OverlappingPort {
                port: p.to_string(),
            });
        }

        let mut known: HashSet<&str> = HashSet::new();
        for n in self.net_names() {
            known.insert(n);
        }

        let mut seen_inst: HashSet<&str> = HashSet::new();
        let mut drivers: HashMap<&str, u32> = HashMap::new();
        for pi in &self.inputs {
            drivers.insert(pi, 1);
        }
        let mut used_as_input: BTreeSet<&str> = BTreeSet::new();

        for cell in &self.cells {
            if !seen_inst.insert(&cell.name) {
                return Err(NetlistError::DuplicateInstance {
                    instance: cell.name.clone(),
                });
            }
            let ct = library.get(&cell.cell_type).ok_or_else(|| {
                NetlistError::UnknownCellType {
                    instance: cell.name.clone(),
                    cell_type: cell.cell_type.clone(),
                }
            })?;
            let mut connected: BTreeSet<&str> = BTreeSet::new();
            for (pin, conn) in &cell.pins {
                let is_output = *pin == ct.output;
                if !is_output && !ct.inputs.iter().any(|p| p == pin) {
                    return Err(NetlistError::UnknownPin {
                        instance: cell.name.clone(),
                        pin: pin.clone(),
                        cell_type: cell.cell_type.clone(),
                    });
                }
                if !connected.insert(pin) {
                    return Err(NetlistError::UnknownPin {
                        instance: cell.name.clone(),
                        pin: pin.clone(),
                        cell_type: cell.cell_type.clone(),
                    });
                }
                match conn {
                    PinConn::Net(net) => {
                        if !known.contains(net.as_str()) {
                            return Err(NetlistError::UndrivenNet { net: net.clone() });
                        }
                        if is_output {
                            *drivers.entry(net).or_insert(0) += 1;
                        } else {
                            used_as_input.insert(net);
                        }
                    }
                    PinConn::Const(_) => {
                        if is_output {
                            return Err(NetlistError::MultipleDrivers {
                                net: format!("constant on output pin of {}", cell.name),
                            });
                        }
                    }
                }
            }
            for pin in ct.inputs.iter().chain(std::iter::once(&ct.output)) {
                if !connected.contains(pin.as_str()) {
                    return Err(NetlistError::DanglingPin {
                        instance: cell.name.clone(),
                        pin: pin.clone(),
                    });
                }
            }
        }

        for (net, count) in &drivers {
            if *count > 1 {
                return Err(NetlistError::MultipleDrivers {
                    net: net.to_string(),
                });
            }
        }
        for net in used_as_input.iter().chain(outputs.iter()) {
            if drivers.get(net).copied().unwrap_or(0) == 0 {
                return Err(NetlistError::UndrivenNet {
                    net: net.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Parse a structural netlist and validate it against `library`.
pub fn parse_netlist(source: &str, library: &CellLibrary) -> Result<Netlist, NetlistError> {
    let netlist = Parser::new(source)?.parse()?;
    netlist.validate(library)?;
    Ok(netlist)
}

/// Emit deterministic netlist text: ports and wires in declaration order,
/// cells sorted by instance name. `parse_netlist(emit_netlist(n))` is
/// graph-identical to `n`.
pub fn emit_netlist(n: &Netlist) -> String {
    let mut out = String::new();
    let ports: Vec<&str> = n
        .inputs
        .iter()
        .chain(n.outputs.iter())
        .map(|s| s.as_str())
        .collect();
    let _ = write!(out, "module {} (", n.name);
    for (i, p) in ports.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(p);
    }
    out.push_str(");\n");
    for i in &n.inputs {
        let _ = writeln!(out, "  input {i};");
    }
    for o in &n.outputs {
        let _ = writeln!(out, "  output {o};");
    }
    for w in &n.wires {
        let _ = writeln!(out, "  wire {w};");
    }
    let mut cells: Vec<&Cell> = n.cells.iter().collect();
    cells.sort_by(|a, b| a.name.cmp(&b.name));
    for c in cells {
        let _ = write!(out, "  {} {} (", c.cell_type, c.name);
        for (i, (pin, conn)) in c.pins.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            match conn {
                PinConn::Net(net) => {
                    let _ = write!(out, ".{pin}({net})");
                }
                PinConn::Const(b) => {
                    let _ = write!(out, ".{pin}(1'b{})", *b as u8);
                }
            }
        }
        out.push_str(");\n");
    }
    out.push_str("endmodule\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Keyword(&'static str),
    Number(u64),
    ConstBit(bool),
    Sym(char),
}

const KEYWORDS: &[&str] = &["module", "endmodule", "input", "output", "inout", "wire"];
const BEHAVIORAL: &[&str] = &[
    "assign", "always", "initial", "reg", "function", "task", "if", "case", "generate",
];

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    /// Declared bus ranges by base name: (msb, lsb).
    buses: HashMap<String, (u64, u64)>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    wires: Vec<String>,
    declared: HashSet<String>,
    referenced: BTreeSet<String>,
    cells: Vec<Cell>,
    module_name: String,
    header_ports: Vec<String>,
    /// Source name -> flattened name, to detect collisions.
    flat_names: HashMap<String, String>,
}

impl Parser {
    fn new(source: &str) -> Result<Parser, NetlistError> {
        Ok(Parser {
            tokens: lex(source)?,
            pos: 0,
            buses: HashMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wires: Vec::new(),
            declared: HashSet::new(),
            referenced: BTreeSet::new(),
            cells: Vec::new(),
            module_name: String::new(),
            header_ports: Vec::new(),
            flat_names: HashMap::new(),
        })
    }

    fn line(&self) -> usize {
        self.tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(|(_, l)| *l)
            .unwrap_or(0)
    }

    fn err(&self, msg: impl Into<String>) -> NetlistError {
        NetlistError::Syntax {
            line: self.line(),
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<(), NetlistError> {
        match self.next() {
            Some(Tok::Sym(s)) if s == c => Ok(()),
            other => Err(self.err(format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn expect_ident(&mut self) -> Result<String, NetlistError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(self.err(format!("expected identifier, found {other:?}"))),
        }
    }

    /// Register a flattened name, erroring if two distinct source names map
    /// to the same flat name.
    fn flatten(&mut self, source_name: &str) -> Result<String, NetlistError> {
        let flat: String = source_name
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        for (src, f) in &self.flat_names {
            if *f == flat && src != source_name {
                return Err(NetlistError::NameCollision { name: flat });
            }
        }
        self.flat_names
            .insert(source_name.to_string(), flat.clone());
        Ok(flat)
    }

    fn bit_name(&mut self, base: &str, idx: u64) -> Result<String, NetlistError> {
        self.flatten(&format!("{base}[{idx}]"))
    }

    fn parse(mut self) -> Result<Netlist, NetlistError> {
        match self.next() {
            Some(Tok::Keyword("module")) => {}
            _ => return Err(self.err("expected `module`")),
        }
        self.module_name = self.expect_ident()?;
        if self.peek() == Some(&Tok::Sym('(')) {
            self.next();
            self.parse_port_list()?;
        }
        self.expect_sym(';')?;

        loop {
            match self.peek().cloned() {
                None => return Err(self.err("missing `endmodule`")),
                Some(Tok::Keyword("endmodule")) => {
                    self.next();
                    break;
                }
                Some(Tok::Keyword(kw @ ("input" | "output" | "wire"))) => {
                    self.next();
                    self.parse_declaration(kw)?;
                }
                Some(Tok::Keyword("inout")) => {
                    return Err(NetlistError::BehavioralConstruct {
                        line: self.line(),
                        construct: "inout".into(),
                    });
                }
                Some(Tok::Ident(word)) if BEHAVIORAL.contains(&word.as_str()) => {
                    return Err(NetlistError::BehavioralConstruct {
                        line: self.line(),
                        construct: word,
                    });
                }
                Some(Tok::Ident(_)) => self.parse_instance()?,
                Some(t) => return Err(self.err(format!("unexpected token {t:?}"))),
            }
        }

        // Ports named in the header but never direction-declared.
        for p in std::mem::take(&mut self.header_ports) {
            if !self.declared.contains(&p) && !self.buses.contains_key(&p) {
                return Err(NetlistError::Syntax {
                    line: 0,
                    msg: format!("port `{p}` has no direction declaration"),
                });
            }
        }

        // Implicit nets: referenced in connections but never declared.
        let declared = self.declared.clone();
        let mut wires = self.wires.clone();
        for net in &self.referenced {
            if !declared.contains(net) {
                wires.push(net.clone());
            }
        }
        // Drop declared wires that nothing references.
        let referenced = &self.referenced;
        wires.retain(|w| referenced.contains(w));

        Ok(Netlist {
            name: self.module_name,
            cells: self.cells,
            inputs: self.inputs,
            outputs: self.outputs,
            wires,
        })
    }

    fn parse_range(&mut self) -> Result<Option<(u64, u64)>, NetlistError> {
        if self.peek() != Some(&Tok::Sym('[')) {
            return Ok(None);
        }
        self.next();
        let msb = match self.next() {
            Some(Tok::Number(n)) => n,
            other => return Err(self.err(format!("expected bus msb, found {other:?}"))),
        };
        self.expect_sym(':')?;
        let lsb = match self.next() {
            Some(Tok::Number(n)) => n,
            other => return Err(self.err(format!("expected bus lsb, found {other:?}"))),
        };
        self.expect_sym(']')?;
        Ok(Some((msb, lsb)))
    }

    fn declare(
        &mut self,
        direction: &str,
        range: Option<(u64, u64)>,
        name: &str,
    ) -> Result<(), NetlistError> {
        let names: Vec<String> = match range {
            None => vec![self.flatten(name)?],
            Some((msb, lsb)) => {
                self.buses.insert(name.to_string(), (msb, lsb));
                let (lo, hi) = (msb.min(lsb), msb.max(lsb));
                (lo..=hi)
                    .map(|i| self.bit_name(name, i))
                    .collect::<Result<_, _>>()?
            }
        };
        for n in names {
            if self.declared.contains(&n) {
                // `input a;` followed by `wire a;` is tolerated; conflicting
                // directions are caught by validate() via OverlappingPort.
                if direction == "input" && !self.inputs.contains(&n) {
                    self.inputs.push(n.clone());
                    self.wires.retain(|w| *w != n);
                } else if direction == "output" && !self.outputs.contains(&n) {
                    self.outputs.push(n.clone());
                    self.wires.retain(|w| *w != n);
                }
                continue;
            }
            self.declared.insert(n.clone());
            match direction {
                "input" => self.inputs.push(n),
                "output" => self.outputs.push(n),
                _ => self.wires.push(n),
            }
        }
        Ok(())
    }

    fn parse_port_list(&mut self) -> Result<(), NetlistError> {
        if self.peek() == Some(&Tok::Sym(')')) {
            self.next();
            return Ok(());
        }
        loop {
            // ANSI style: direction [range] name. Non-ANSI: bare name.
            let direction = match self.peek() {
                Some(Tok::Keyword(kw @ ("input" | "output"))) => {
                    let kw = *kw;
                    self.next();
                    Some(kw)
                }
                Some(Tok::Keyword("inout")) => {
                    return Err(NetlistError::BehavioralConstruct {
                        line: self.line(),
                        construct: "inout".into(),
                    })
                }
                _ => None,
            };
            let range = self.parse_range()?;
            let name = self.expect_ident()?;
            match direction {
                Some(kw) => self.declare(kw, range, &name)?,
                None => {
                    let flat = self.flatten(&name)?;
                    self.header_ports.push(flat);
                }
            }
            match self.next() {
                Some(Tok::Sym(',')) => continue,
                Some(Tok::Sym(')')) => return Ok(()),
                other => return Err(self.err(format!("expected `,` or `)`, found {other:?}"))),
            }
        }
    }

    fn parse_declaration(&mut self, direction: &'static str) -> Result<(), NetlistError> {
        let range = self.parse_range()?;
        loop {
            let name = self.expect_ident()?;
            self.declare(direction, range, &name)?;
            match self.next() {
                Some(Tok::Sym(',')) => continue,
                Some(Tok::Sym(';')) => return Ok(()),
                other => return Err(self.err(format!("expected `,` or `;`, found {other:?}"))),
            }
        }
    }

    fn parse_connection(&mut self) -> Result<Option<PinConn>, NetlistError> {
        match self.peek().cloned() {
            Some(Tok::Sym(')')) => Ok(None),
            Some(Tok::ConstBit(b)) => {
                self.next();
                Ok(Some(PinConn::Const(b)))
            }
            Some(Tok::Ident(name)) => {
                self.next();
                if self.peek() == Some(&Tok::Sym('[')) {
                    self.next();
                    let idx = match self.next() {
                        Some(Tok::Number(n)) => n,
                        other => {
                            return Err(self.err(format!("expected bit index, found {other:?}")))
                        }
                    };
                    self.expect_sym(']')?;
                    let flat = self.bit_name(&name, idx)?;
                    self.referenced.insert(flat.clone());
                    Ok(Some(PinConn::Net(flat)))
                } else {
                    if self.buses.contains_key(&name) {
                        return Err(NetlistError::BusConnection {
                            line: self.line(),
                            name,
                        });
                    }
                    let flat = self.flatten(&name)?;
                    self.referenced.insert(flat.clone());
                    Ok(Some(PinConn::Net(flat)))
                }
            }
            other => Err(self.err(format!("expected net reference, found {other:?}"))),
        }
    }

    fn parse_instance(&mut self) -> Result<(), NetlistError> {
        let cell_type = self.expect_ident()?;
        let instance = self.expect_ident()?;
        let instance = self.flatten(&instance)?;
        self.expect_sym('(')?;
        let mut pins = Vec::new();
        if self.peek() != Some(&Tok::Sym(')')) {
            loop {
                if self.peek() != Some(&Tok::Sym('.')) {
                    return Err(NetlistError::PositionalConnection {
                        line: self.line(),
                        instance,
                    });
                }
                self.next();
                let pin = self.expect_ident()?;
                self.expect_sym('(')?;
                let conn = self.parse_connection()?;
                self.expect_sym(')')?;
                if let Some(conn) = conn {
                    pins.push((pin, conn));
                }
                // An omitted connection `.pin()` is simply not recorded;
                // validate() reports it as a dangling pin.
                match self.next() {
                    Some(Tok::Sym(',')) => continue,
                    Some(Tok::Sym(')')) => break,
                    other => {
                        return Err(self.err(format!("expected `,` or `)`, found {other:?}")))
                    }
                }
            }
        } else {
            self.next();
        }
        self.expect_sym(';')?;
        self.cells.push(Cell {
            name: instance,
            cell_type,
            pins,
        });
        Ok(())
    }
}

fn lex(source: &str) -> Result<Vec<(Tok, usize)>, NetlistError> {
    let mut out = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line = 1usize;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '/' => {
                chars.next();
                match chars.peek() {
                    Some('/') => {
                        for c in chars.by_ref() {
                            if c == '\n' {
                                line += 1;
                                break;
                            }
                        }
                    }
                    Some('*') => {
                        chars.next();
                        let mut prev = ' ';
                        for c in chars.by_ref() {
                            if c == '\n' {
                                line += 1;
                            }
                            if prev == '*' && c == '/' {
                                break;
                            }
                            prev = c;
                        }
                    }
                    _ => {
                        return Err(NetlistError::Syntax {
                            line,
                            msg: "stray `/`".into(),
                        })
                    }
                }
            }
            '\\' => {
                // Escaped identifier: backslash to next whitespace.
                chars.next();
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                if s.is_empty() {
                    return Err(NetlistError::Syntax {
                        line,
                        msg: "empty escaped identifier".into(),
                    });
                }
                out.push((Tok::Ident(s), line));
            }
            c if c.is_ascii_digit() => {
                let mut num = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        num.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if chars.peek() == Some(&'\'') {
                    chars.next();
                    let base = chars.next();
                    let digit = chars.next();
                    match (base, digit) {
                        (Some('b' | 'B' | 'd' | 'D' | 'h' | 'H'), Some('0')) => {
                            out.push((Tok::ConstBit(false), line))
                        }
                        (Some('b' | 'B' | 'd' | 'D' | 'h' | 'H'), Some('1')) => {
                            out.push((Tok::ConstBit(true), line))
                        }
                        _ => {
                            return Err(NetlistError::Syntax {
                                line,
                                msg: format!("unsupported literal starting `{num}'`"),
                            })
                        }
                    }
                } else {
                    let v = num.parse::<u64>().map_err(|_| NetlistError::Syntax {
                        line,
                        msg: format!("bad number `{num}`"),
                    })?;
                    out.push((Tok::Number(v), line));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if let Some(kw) = KEYWORDS.iter().find(|k| **k == s) {
                    out.push((Tok::Keyword(kw), line));
                } else if BEHAVIORAL.contains(&s.as_str()) {
                    return Err(NetlistError::BehavioralConstruct {
                        line,
                        construct: s,
                    });
                } else {
                    out.push((Tok::Ident(s), line));
                }
            }
            '(' | ')' | '[' | ']' | ',' | ';' | ':' | '.' => {
                chars.next();
                out.push((Tok::Sym(c), line));
            }
            other => {
                return Err(NetlistError::Syntax {
                    line,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lib() -> CellLibrary {
        CellLibrary::default_library()
    }

    const TWO_GATE: &str = "
        module two (i0, i1, o0);
          input i0, i1;
          output o0;
          wire n1;
          NAND2 g1 (.a(i0), .b(i1), .y(n1));
          INV g2 (.a(n1), .y(o0));
        endmodule
    ";

    #[test]
    fn parses_two_gate() {
        let n = parse_netlist(TWO_GATE, &lib()).unwrap();
        assert_eq!(n.cells.len(), 2);
        assert_eq!(n.net_count(), 4);
        assert_eq!(n.inputs, vec!["i0", "i1"]);
        assert_eq!(n.outputs, vec!["o0"]);
    }

    #[test]
    fn rejects_double_driver() {
        let src = "
            module bad (i0, i1, o0);
              input i0, i1; output o0; wire n1;
              NAND2 g1 (.a(i0), .b(i1), .y(n1));
              INV g2 (.a(n1), .y(o0));
              INV g3 (.a(i0), .y(n1));
            endmodule
        ";
        match parse_netlist(src, &lib()) {
            Err(NetlistError::MultipleDrivers { net }) => assert_eq!(net, "n1"),
            other => panic!("expected MultipleDrivers, got {other:?}"),
        }
    }

    #[test]
    fn rejects_behavioral() {
        let src = "module bad (a, y); input a; output y; assign y = a; endmodule";
        assert!(matches!(
            parse_netlist(src, &lib()),
            Err(NetlistError::BehavioralConstruct { .. })
        ));
    }

    #[test]
    fn rejects_positional() {
        let src = "
            module bad (a, y); input a; output y;
            INV g1 (a, y);
            endmodule
        ";
        assert!(matches!(
            parse_netlist(src, &lib()),
            Err(NetlistError::PositionalConnection { .. })
        ));
    }

    #[test]
    fn rejects_unknown_cell() {
        let src = "module bad (a, y); input a; output y; FOO g1 (.a(a), .y(y)); endmodule";
        assert!(matches!(
            parse_netlist(src, &lib()),
            Err(NetlistError::UnknownCellType { .. })
        ));
    }

    #[test]
    fn rejects_dangling_pin() {
        let src = "module bad (a, y); input a; output y; NAND2 g1 (.a(a), .y(y)); endmodule";
        match parse_netlist(src, &lib()) {
            Err(NetlistError::DanglingPin { pin, .. }) => assert_eq!(pin, "b"),
            other => panic!("expected DanglingPin, got {other:?}"),
        }
    }

    #[test]
    fn flattens_buses() {
        let src = "
            module bus (d, q);
              input [1:0] d;
              output q;
              AND2 g1 (.a(d[0]), .b(d[1]), .y(q));
            endmodule
        ";
        let n = parse_netlist(src, &lib()).unwrap();
        assert_eq!(n.inputs, vec!["d_0_", "d_1_"]);
    }

    #[test]
    fn ansi_ports() {
        let src = "
            module ansi (input a, input b, output y);
              AND2 g1 (.a(a), .b(b), .y(y));
            endmodule
        ";
        let n = parse_netlist(src, &lib()).unwrap();
        assert_eq!(n.inputs.len(), 2);
        assert_eq!(n.outputs.len(), 1);
    }

    #[test]
    fn constants_allowed_on_inputs() {
        let src = "
            module c (a, y);
              input a; output y;
              AND2 g1 (.a(a), .b(1'b1), .y(y));
            endmodule
        ";
        let n = parse_netlist(src, &lib()).unwrap();
        assert_eq!(n.cells[0].pin("b"), Some(&PinConn::Const(true)));
    }

    #[test]
    fn empty_netlist_round_trips() {
        let src = "module empty (a, b); input a; output b; BUF g (.a(a), .y(b)); endmodule";
        let n = parse_netlist(src, &lib()).unwrap();
        let text = emit_netlist(&n);
        let n2 = parse_netlist(&text, &lib()).unwrap();
        assert!(n.same_graph(&n2));
    }

    #[test]
    fn c17_shape() {
        let src = crate::fixtures::C17;
        let n = parse_netlist(src, &lib()).unwrap();
        assert_eq!(n.cells.len(), 6);
        assert_eq!(n.net_count(), 11);
        assert_eq!(n.inputs.len(), 5);
        assert_eq!(n.outputs.len(), 2);
    }

    #[test]
    fn c17_round_trip_isomorphic() {
        let n = parse_netlist(crate::fixtures::C17, &lib()).unwrap();
        let n2 = parse_netlist(&emit_netlist(&n), &lib()).unwrap();
        assert!(n.same_graph(&n2));
    }

    #[test]
    fn undriven_net_rejected() {
        let src = "
            module u (a, y); input a; output y;
            AND2 g1 (.a(a), .b(ghost), .y(y));
            endmodule
        ";
        match parse_netlist(src, &lib()) {
            Err(NetlistError::UndrivenNet { net }) => assert_eq!(net, "ghost"),
            other => panic!("expected UndrivenNet, got {other:?}"),
        }
    }
}
