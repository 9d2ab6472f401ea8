//! Cell library: per-type pin lists plus either a Boolean output expression
//! (combinational) or D/Q/clock pin roles (flip-flops).
//!
//! Combinational behaviour is normalized to a truth table at load time, and
//! the cube sets every downstream analysis needs (forcing cubes per output
//! value, sensitizing cubes per input pin) are precomputed here once per
//! cell type.

use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Hard cap on combinational cell arity; truth tables are stored in a u64.
pub const MAX_CELL_INPUTS: usize = 6;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("invalid library JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cell `{cell}`: expression parse error: {msg}")]
    ExprParse { cell: String, msg: String },
    #[error("cell `{cell}`: expression references undeclared pin `{pin}`")]
    UndeclaredPin { cell: String, pin: String },
    #[error("cell `{cell}`: has {n} inputs, maximum is {MAX_CELL_INPUTS}")]
    TooManyInputs { cell: String, n: usize },
    #[error("cell `{cell}`: combinational cells need at least one input")]
    NoInputs { cell: String },
    #[error("cell `{cell}`: duplicate pin name `{pin}`")]
    DuplicatePin { cell: String, pin: String },
    #[error("cell `{cell}`: needs exactly one of `expr` or `seq`")]
    MissingBody { cell: String },
    #[error("cell `{cell}`: sequential role `{role}` names pin `{pin}` which is not declared")]
    BadSeqRole {
        cell: String,
        role: &'static str,
        pin: String,
    },
}

/// Boolean expression over input pin names.
#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    Const(bool),
    Var(String),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Xor(Vec<BoolExpr>),
}

impl BoolExpr {
    /// Parse `a & !(b | c) ^ 1` style expressions. `~` and `!` both negate.
    pub fn parse(text: &str) -> Result<BoolExpr, String> {
        let tokens = tokenize(text)?;
        let mut p = ExprParser { tokens, pos: 0 };
        let e = p.or_expr()?;
        if p.pos != p.tokens.len() {
            return Err(format!("trailing input at token {}", p.pos));
        }
        Ok(e)
    }

    fn eval(&self, assign: &dyn Fn(&str) -> bool) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Var(v) => assign(v),
            BoolExpr::Not(e) => !e.eval(assign),
            BoolExpr::And(es) => es.iter().all(|e| e.eval(assign)),
            BoolExpr::Or(es) => es.iter().any(|e| e.eval(assign)),
            BoolExpr::Xor(es) => es.iter().fold(false, |acc, e| acc ^ e.eval(assign)),
        }
    }

    fn vars(&self, out: &mut Vec<String>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            BoolExpr::Not(e) => e.vars(out),
            BoolExpr::And(es) | BoolExpr::Or(es) | BoolExpr::Xor(es) => {
                for e in es {
                    e.vars(out)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Const(bool),
    And,
    Or,
    Xor,
    Not,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                chars.next();
            }
            '&' => {
                chars.next();
                out.push(Token::And);
            }
            '|' => {
                chars.next();
                out.push(Token::Or);
            }
            '^' => {
                chars.next();
                out.push(Token::Xor);
            }
            '!' | '~' => {
                chars.next();
                out.push(Token::Not);
            }
            '(' => {
                chars.next();
                out.push(Token::LParen);
            }
            ')' => {
                chars.next();
                out.push(Token::RParen);
            }
            '0' => {
                chars.next();
                out.push(Token::Const(false));
            }
            '1' => {
                chars.next();
                out.push(Token::Const(true));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(s));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct ExprParser {
    tokens: Vec<Token>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn or_expr(&mut self) -> Result<BoolExpr, String> {
        let mut terms = vec![self.xor_expr()?];
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            terms.push(self.xor_expr()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            BoolExpr::Or(terms)
        })
    }

    fn xor_expr(&mut self) -> Result<BoolExpr, String> {
        let mut terms = vec![self.and_expr()?];
        while self.peek() == Some(&Token::Xor) {
            self.pos += 1;
            terms.push(self.and_expr()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            BoolExpr::Xor(terms)
        })
    }

    fn and_expr(&mut self) -> Result<BoolExpr, String> {
        let mut terms = vec![self.unary()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            terms.push(self.unary()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            BoolExpr::And(terms)
        })
    }

    fn unary(&mut self) -> Result<BoolExpr, String> {
        match self.peek().cloned() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(BoolExpr::Not(Box::new(self.unary()?)))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let e = self.or_expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Token::Ident(s)) => {
                self.pos += 1;
                Ok(BoolExpr::Var(s))
            }
            Some(Token::Const(b)) => {
                self.pos += 1;
                Ok(BoolExpr::Const(b))
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

/// Truth table over up to [`MAX_CELL_INPUTS`] inputs. Row index bit i is the
/// value of input pin i; bit `row` of `bits` is the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthTable {
    pub n_inputs: usize,
    pub bits: u64,
}

impl TruthTable {
    pub fn from_expr(expr: &BoolExpr, inputs: &[String]) -> TruthTable {
        let n = inputs.len();
        debug_assert!(n <= MAX_CELL_INPUTS);
        let mut bits = 0u64;
        for row in 0..(1u64 << n) {
            let v = expr.eval(&|name: &str| {
                let idx = inputs.iter().position(|p| p == name).unwrap();
                row >> idx & 1 == 1
            });
            if v {
                bits |= 1 << row;
            }
        }
        TruthTable { n_inputs: n, bits }
    }

    #[inline]
    pub fn eval_row(&self, row: u64) -> bool {
        self.bits >> row & 1 == 1
    }

    /// Evaluate with input values packed little-endian into `row`.
    #[inline]
    pub fn eval(&self, values: &[bool]) -> bool {
        let mut row = 0u64;
        for (i, v) in values.iter().enumerate() {
            if *v {
                row |= 1 << i;
            }
        }
        self.eval_row(row)
    }
}

/// Partial input assignment: `care` masks the specified pins, `values` their
/// values (only bits under `care` are meaningful).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cube {
    pub care: u8,
    pub values: u8,
}

impl Cube {
    #[inline]
    pub fn specifies(&self, input: usize) -> Option<bool> {
        if self.care >> input & 1 == 1 {
            Some(self.values >> input & 1 == 1)
        } else {
            None
        }
    }

    /// Iterate (input index, required value) pairs.
    pub fn literals(&self, n_inputs: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        let care = self.care;
        let values = self.values;
        (0..n_inputs).filter_map(move |i| {
            if care >> i & 1 == 1 {
                Some((i, values >> i & 1 == 1))
            } else {
                None
            }
        })
    }
}

/// All rows consistent with `cube` produce output `want`.
fn cube_forces(tt: &TruthTable, cube: Cube, want: bool) -> bool {
    let n = tt.n_inputs;
    for row in 0..(1u64 << n) {
        if row as u8 & cube.care == cube.values & cube.care && tt.eval_row(row) != want {
            return false;
        }
    }
    true
}

/// All rows consistent with `cube` (which must not specify `input`) make the
/// output flip when `input` flips.
fn cube_sensitizes(tt: &TruthTable, cube: Cube, input: usize) -> bool {
    let n = tt.n_inputs;
    let ibit = 1u64 << input;
    for row in 0..(1u64 << n) {
        if row & ibit != 0 {
            continue;
        }
        if row as u8 & cube.care == cube.values & cube.care
            && tt.eval_row(row) == tt.eval_row(row | ibit)
        {
            return false;
        }
    }
    true
}

/// Keep only cubes not subsumed by a more general one in the same list.
fn prime_filter(cubes: Vec<Cube>) -> Vec<Cube> {
    let mut keep = Vec::new();
    'outer: for (i, c) in cubes.iter().enumerate() {
        for (j, d) in cubes.iter().enumerate() {
            if i != j
                && d.care & c.care == d.care
                && d.values & d.care == c.values & d.care
                && d.care != c.care
            {
                continue 'outer;
            }
        }
        keep.push(*c);
    }
    keep
}

fn enumerate_cubes(n: usize, pin_mask: u8, pred: impl Fn(Cube) -> bool) -> Vec<Cube> {
    let mut out = Vec::new();
    let full = ((1u16 << n) - 1) as u8 & pin_mask;
    // All care subsets of the allowed pins, all value patterns under each.
    let mut care = full;
    loop {
        let mut values = care;
        loop {
            let cube = Cube { care, values };
            if pred(cube) {
                out.push(cube);
            }
            if values == 0 {
                break;
            }
            values = (values - 1) & care;
        }
        if care == 0 {
            break;
        }
        care = (care - 1) & full;
    }
    prime_filter(out)
}

/// Precomputed cube sets for one combinational cell type.
#[derive(Debug, Clone)]
pub struct CubeSets {
    /// `forcing[v]`: prime cubes that force the output to `v`.
    pub forcing: [Vec<Cube>; 2],
    /// `sensitizing[i]`: prime cubes over the other pins that propagate a
    /// change on input `i` to the output. Empty if the output never depends
    /// on input `i`.
    pub sensitizing: Vec<Vec<Cube>>,
}

impl CubeSets {
    fn compute(tt: &TruthTable) -> CubeSets {
        let n = tt.n_inputs;
        let all = ((1u16 << n) - 1) as u8;
        let forcing0 = enumerate_cubes(n, all, |c| cube_forces(tt, c, false));
        let forcing1 = enumerate_cubes(n, all, |c| cube_forces(tt, c, true));
        let sensitizing = (0..n)
            .map(|i| enumerate_cubes(n, all & !(1 << i), |c| cube_sensitizes(tt, c, i)))
            .collect();
        CubeSets {
            forcing: [forcing0, forcing1],
            sensitizing,
        }
    }
}

/// Pin roles of a flip-flop cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqCell {
    pub d: String,
    pub q: String,
    pub clk: String,
    /// Synchronous-dominant reset to 0, active high.
    pub rst: Option<String>,
    /// Clock enable, active high; Q holds when low.
    pub en: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CombCell {
    pub expr: BoolExpr,
    pub truth: TruthTable,
    pub cubes: CubeSets,
}

#[derive(Debug, Clone)]
pub enum CellKind {
    Comb(CombCell),
    Seq(SeqCell),
}

/// One library entry: declared input pins (in order), the single output pin,
/// and the cell behaviour.
#[derive(Debug, Clone)]
pub struct CellType {
    pub name: String,
    pub inputs: Vec<String>,
    pub output: String,
    pub kind: CellKind,
}

impl CellType {
    pub fn is_seq(&self) -> bool {
        matches!(self.kind, CellKind::Seq(_))
    }

    pub fn seq(&self) -> Option<&SeqCell> {
        match &self.kind {
            CellKind::Seq(s) => Some(s),
            CellKind::Comb(_) => None,
        }
    }

    pub fn comb(&self) -> Option<&CombCell> {
        match &self.kind {
            CellKind::Comb(c) => Some(c),
            CellKind::Seq(_) => None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawLibrary {
    cells: BTreeMap<String, RawCell>,
}

#[derive(Debug, Deserialize)]
struct RawCell {
    inputs: Vec<String>,
    output: String,
    #[serde(default)]
    expr: Option<String>,
    #[serde(default)]
    seq: Option<RawSeq>,
}

#[derive(Debug, Deserialize)]
struct RawSeq {
    d: String,
    q: String,
    clk: String,
    #[serde(default)]
    rst: Option<String>,
    #[serde(default)]
    en: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CellLibrary {
    cells: BTreeMap<String, CellType>,
}

pub const DEFAULT_LIBRARY_JSON: &str = include_str!("../data/default_cells.json");

impl CellLibrary {
    /// The library shipped with the toolkit: INV/BUF, AND/OR/NAND/NOR/XOR/XNOR
    /// in 2..4-input arities, MUX2, and DFF variants with optional reset and
    /// enable pins.
    pub fn default_library() -> CellLibrary {
        CellLibrary::from_json(DEFAULT_LIBRARY_JSON).expect("embedded default library is valid")
    }

    pub fn from_json(text: &str) -> Result<CellLibrary, LibraryError> {
        let raw: RawLibrary = serde_json::from_str(text)?;
        let mut cells = BTreeMap::new();
        for (name, rc) in raw.cells {
            let cell = Self::build_cell(&name, rc)?;
            cells.insert(name, cell);
        }
        Ok(CellLibrary { cells })
    }

    fn build_cell(name: &str, rc: RawCell) -> Result<CellType, LibraryError> {
        let cell = name.to_string();
        if rc.inputs.len() > MAX_CELL_INPUTS {
            return Err(LibraryError::TooManyInputs {
                cell,
                n: rc.inputs.len(),
            });
        }
        let mut seen = Vec::new();
        for p in rc.inputs.iter().chain(std::iter::once(&rc.output)) {
            if seen.contains(&p) {
                return Err(LibraryError::DuplicatePin {
                    cell,
                    pin: p.clone(),
                });
            }
            seen.push(p);
        }
        let kind = match (rc.expr, rc.seq) {
            (Some(expr_text), None) => {
                if rc.inputs.is_empty() {
                    return Err(LibraryError::NoInputs { cell });
                }
                let expr =
                    BoolExpr::parse(&expr_text).map_err(|msg| LibraryError::ExprParse {
                        cell: cell.clone(),
                        msg,
                    })?;
                let mut used = Vec::new();
                expr.vars(&mut used);
                for v in &used {
                    if !rc.inputs.contains(v) {
                        return Err(LibraryError::UndeclaredPin {
                            cell,
                            pin: v.clone(),
                        });
                    }
                }
                let truth = TruthTable::from_expr(&expr, &rc.inputs);
                let cubes = CubeSets::compute(&truth);
                CellKind::Comb(CombCell { expr, truth, cubes })
            }
            (None, Some(seq)) => {
                let check = |role: &'static str, pin: &str| -> Result<(), LibraryError> {
                    if pin == rc.output || rc.inputs.iter().any(|p| p == pin) {
                        Ok(())
                    } else {
                        Err(LibraryError::BadSeqRole {
                            cell: name.to_string(),
                            role,
                            pin: pin.to_string(),
                        })
                    }
                };
                check("d", &seq.d)?;
                check("q", &seq.q)?;
                check("clk", &seq.clk)?;
                if let Some(r) = &seq.rst {
                    check("rst", r)?;
                }
                if let Some(e) = &seq.en {
                    check("en", e)?;
                }
                CellKind::Seq(SeqCell {
                    d: seq.d,
                    q: seq.q,
                    clk: seq.clk,
                    rst: seq.rst,
                    en: seq.en,
                })
            }
            _ => return Err(LibraryError::MissingBody { cell }),
        };
        Ok(CellType {
            name: name.to_string(),
            inputs: rc.inputs,
            output: rc.output,
            kind,
        })
    }

    pub fn get(&self, name: &str) -> Option<&CellType> {
        self.cells.get(name)
    }

    pub fn cell_names(&self) -> impl Iterator<Item = &str> {
        self.cells.keys().map(|s| s.as_str())
    }

    /// Flip-flop cell whose optional pins match the request exactly.
    pub fn find_dff(&self, want_rst: bool, want_en: bool) -> Option<&CellType> {
        self.cells.values().find(|c| match &c.kind {
            CellKind::Seq(s) => s.rst.is_some() == want_rst && s.en.is_some() == want_en,
            CellKind::Comb(_) => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_default_library() {
        let lib = CellLibrary::default_library();
        for name in ["INV", "BUF", "AND2", "NAND4", "XOR3", "XNOR2", "MUX2", "DFF", "DFFR"] {
            assert!(lib.get(name).is_some(), "missing {name}");
        }
        let nand2 = lib.get("NAND2").unwrap();
        let tt = nand2.comb().unwrap().truth;
        assert_eq!(tt.bits & 0xf, 0b0111);
    }

    #[test]
    fn expr_precedence() {
        // a | b & c parses as a | (b & c)
        let e = BoolExpr::parse("a | b & c").unwrap();
        let tt = TruthTable::from_expr(&e, &["a".into(), "b".into(), "c".into()]);
        assert!(tt.eval(&[true, false, false]));
        assert!(!tt.eval(&[false, true, false]));
        assert!(tt.eval(&[false, true, true]));
    }

    #[test]
    fn rejects_undeclared_pin() {
        let json = r#"{"cells":{"BAD":{"inputs":["a"],"output":"y","expr":"a & b"}}}"#;
        match CellLibrary::from_json(json) {
            Err(LibraryError::UndeclaredPin { pin, .. }) => assert_eq!(pin, "b"),
            other => panic!("expected UndeclaredPin, got {other:?}"),
        }
    }

    #[test]
    fn rejects_seven_inputs() {
        let json = r#"{"cells":{"BIG":{"inputs":["a","b","c","d","e","f","g"],"output":"y","expr":"a"}}}"#;
        assert!(matches!(
            CellLibrary::from_json(json),
            Err(LibraryError::TooManyInputs { n: 7, .. })
        ));
    }

    #[test]
    fn and2_cubes() {
        let lib = CellLibrary::default_library();
        let and2 = lib.get("AND2").unwrap().comb().unwrap();
        // Forcing to 1 needs both inputs; forcing to 0 needs either one low.
        assert_eq!(and2.cubes.forcing[1].len(), 1);
        assert_eq!(and2.cubes.forcing[1][0].care, 0b11);
        assert_eq!(and2.cubes.forcing[1][0].values & 0b11, 0b11);
        assert_eq!(and2.cubes.forcing[0].len(), 2);
        for c in &and2.cubes.forcing[0] {
            assert_eq!(c.care.count_ones(), 1);
        }
        // Sensitizing input 0 requires input 1 = 1.
        let s = &and2.cubes.sensitizing[0];
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].specifies(1), Some(true));
    }

    #[test]
    fn xor_cubes_have_no_dont_cares() {
        let lib = CellLibrary::default_library();
        let xor2 = lib.get("XOR2").unwrap().comb().unwrap();
        // XOR output is never forced by a partial assignment.
        for v in 0..2 {
            for c in &xor2.cubes.forcing[v] {
                assert_eq!(c.care, 0b11);
            }
            assert_eq!(xor2.cubes.forcing[v].len(), 2);
        }
        // Any value of the other pin sensitizes: the empty cube is prime.
        assert_eq!(xor2.cubes.sensitizing[0].len(), 1);
        assert_eq!(xor2.cubes.sensitizing[0][0].care, 0);
    }

    #[test]
    fn mux_semantics() {
        let lib = CellLibrary::default_library();
        let mux = lib.get("MUX2").unwrap();
        assert_eq!(mux.inputs, vec!["a", "b", "s"]);
        let tt = mux.comb().unwrap().truth;
        // s=0 selects a, s=1 selects b
        assert!(tt.eval(&[true, false, false]));
        assert!(!tt.eval(&[true, false, true]));
        assert!(tt.eval(&[false, true, true]));
    }
}
