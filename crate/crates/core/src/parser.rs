//! Recursive-descent parser for the expression language.
//!
//! Produces an [`ExprGraph`]: a DAG whose leaves are input variables or
//! numeric constants and whose internal nodes are registered primitives.
//! Structurally identical subtrees are merged during construction
//! (hash-consing), so repeated references to the same variable or
//! subexpression share one node and downstream sweeps see real fan-out.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::primitive::Primitive;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExprKind {
    /// Input variable; payload indexes the graph's input-name list.
    Var(usize),
    /// Numeric constant. All partials of a constant leaf are zero.
    Const(f64),
    Prim(Primitive),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprNode {
    pub kind: ExprKind,
    /// Ordered child references; empty for leaves.
    pub children: Vec<NodeId>,
}

/// Parsed expression DAG. Nodes are stored in creation order, so every
/// child id is smaller than its parent's id and the vector order is a
/// topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprGraph {
    nodes: Vec<ExprNode>,
    /// Input variable names in order of first appearance in the text.
    inputs: Vec<String>,
    root: NodeId,
}

impl ExprGraph {
    pub fn nodes(&self) -> &[ExprNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &ExprNode {
        &self.nodes[id]
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Assemble a graph from raw parts without invariant checks. Intended
    /// for tests and tools; `build_tape` re-validates what it needs.
    pub fn from_raw_parts(nodes: Vec<ExprNode>, inputs: Vec<String>, root: NodeId) -> Self {
        ExprGraph { nodes, inputs, root }
    }
}

/// Incrementally builds an [`ExprGraph`] with hash-consing. Also used by the
/// symbolic differentiation oracle to extend an existing graph.
pub struct GraphBuilder {
    nodes: Vec<ExprNode>,
    inputs: Vec<String>,
    var_ids: HashMap<String, NodeId>,
    interned: HashMap<InternKey, NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum InternKey {
    Const(u64),
    Prim(Primitive, Vec<NodeId>),
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder {
            nodes: Vec::new(),
            inputs: Vec::new(),
            var_ids: HashMap::new(),
            interned: HashMap::new(),
        }
    }

    /// Start from an existing graph, preserving node ids, so new nodes can
    /// reference old ones.
    pub fn extending(graph: &ExprGraph) -> Self {
        let mut b = GraphBuilder {
            nodes: graph.nodes.clone(),
            inputs: graph.inputs.clone(),
            var_ids: HashMap::new(),
            interned: HashMap::new(),
        };
        for (id, node) in b.nodes.iter().enumerate() {
            match node.kind {
                ExprKind::Var(v) => {
                    b.var_ids.insert(b.inputs[v].clone(), id);
                }
                ExprKind::Const(c) => {
                    b.interned.insert(InternKey::Const(c.to_bits()), id);
                }
                ExprKind::Prim(p) => {
                    b.interned
                        .insert(InternKey::Prim(p, node.children.clone()), id);
                }
            }
        }
        b
    }

    pub fn var(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.var_ids.get(name) {
            return id;
        }
        let input_idx = self.inputs.len();
        self.inputs.push(name.to_string());
        let id = self.push(ExprKind::Var(input_idx), Vec::new());
        self.var_ids.insert(name.to_string(), id);
        id
    }

    pub fn constant(&mut self, value: f64) -> NodeId {
        let key = InternKey::Const(value.to_bits());
        if let Some(&id) = self.interned.get(&key) {
            return id;
        }
        let id = self.push(ExprKind::Const(value), Vec::new());
        self.interned.insert(key, id);
        id
    }

    pub fn prim(&mut self, prim: Primitive, children: Vec<NodeId>) -> NodeId {
        debug_assert_eq!(children.len(), prim.arity());
        let key = InternKey::Prim(prim, children.clone());
        if let Some(&id) = self.interned.get(&key) {
            return id;
        }
        let id = self.push(ExprKind::Prim(prim), children);
        self.interned.insert(key, id);
        id
    }

    pub fn is_const(&self, id: NodeId, value: f64) -> bool {
        matches!(self.nodes[id].kind, ExprKind::Const(c) if c == value)
    }

    pub fn finish(self, root: NodeId) -> ExprGraph {
        ExprGraph {
            nodes: self.nodes,
            inputs: self.inputs,
            root,
        }
    }

    fn push(&mut self, kind: ExprKind, children: Vec<NodeId>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(ExprNode { kind, children });
        id
    }
}

impl Default for GraphBuilder {
    fn default() -> Self {
        Self::new()
    }
}

/// Parse expression text into an [`ExprGraph`].
///
/// Grammar:
/// ```text
/// expr   := term (('+'|'-') term)*
/// term   := factor (('*'|'/') factor)*
/// factor := unary ('^' factor)?          // right-associative power
/// unary  := '-' unary | atom
/// atom   := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
/// ```
pub fn parse(text: &str) -> Result<ExprGraph> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        builder: GraphBuilder::new(),
        text_len: text.len(),
    };
    let root = p.expr()?;
    match p.peek() {
        None => Ok(p.builder.finish(root)),
        Some(tok) => Err(Error::Syntax {
            offset: tok.offset,
            message: format!("unexpected '{}'", tok.kind.describe()),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Number(n) => format!("{n}"),
            TokKind::Ident(s) => s.clone(),
            TokKind::Plus => "+".into(),
            TokKind::Minus => "-".into(),
            TokKind::Star => "*".into(),
            TokKind::Slash => "/".into(),
            TokKind::Caret => "^".into(),
            TokKind::LParen => "(".into(),
            TokKind::RParen => ")".into(),
            TokKind::Comma => ",".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let offset = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b',' => {
                let kind = match c {
                    b'+' => TokKind::Plus,
                    b'-' => TokKind::Minus,
                    b'*' => TokKind::Star,
                    b'/' => TokKind::Slash,
                    b'^' => TokKind::Caret,
                    b'(' => TokKind::LParen,
                    b')' => TokKind::RParen,
                    _ => TokKind::Comma,
                };
                tokens.push(Token { kind, offset });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("invalid number literal '{lit}'"),
                })?;
                tokens.push(Token {
                    kind: TokKind::Number(value),
                    offset: start,
                });
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(Error::Syntax {
                    offset,
                    message: format!("unexpected character '{}'", &text[i..].chars().next().unwrap()),
                });
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    builder: GraphBuilder,
    text_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokKind) -> Result<()> {
        match self.peek() {
            Some(tok) if tok.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("expected '{}', found '{}'", kind.describe(), tok.kind.describe()),
            }),
            None => Err(Error::Syntax {
                offset: self.text_len,
                message: format!("expected '{}', found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<NodeId> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokKind::Plus) {
                let rhs = self.term()?;
                lhs = self.builder.prim(Primitive::Add, vec![lhs, rhs]);
            } else if self.eat(&TokKind::Minus) {
                let rhs = self.term()?;
                lhs = self.builder.prim(Primitive::Sub, vec![lhs, rhs]);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<NodeId> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(&TokKind::Star) {
                let rhs = self.factor()?;
                lhs = self.builder.prim(Primitive::Mul, vec![lhs, rhs]);
            } else if self.eat(&TokKind::Slash) {
                let rhs = self.factor()?;
                lhs = self.builder.prim(Primitive::Div, vec![lhs, rhs]);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<NodeId> {
        let base = self.unary()?;
        if self.eat(&TokKind::Caret) {
            let exponent = self.factor()?;
            Ok(self.builder.prim(Primitive::Pow, vec![base, exponent]))
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<NodeId> {
        if self.eat(&TokKind::Minus) {
            let inner = self.unary()?;
            Ok(self.builder.prim(Primitive::Neg, vec![inner]))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<NodeId> {
        let tok = match self.bump() {
            Some(tok) => tok,
            None => {
                return Err(Error::Syntax {
                    offset: self.text_len,
                    message: "unexpected end of input".into(),
                })
            }
        };
        match tok.kind {
            TokKind::Number(value) => Ok(self.builder.constant(value)),
            TokKind::Ident(name) => {
                if self.eat(&TokKind::LParen) {
                    let mut args = vec![self.expr()?];
                    while self.eat(&TokKind::Comma) {
                        args.push(self.expr()?);
                    }
                    self.expect(TokKind::RParen)?;
                    let prim = Primitive::from_call_name(&name).ok_or(Error::UnknownFunction {
                        offset: tok.offset,
                        name: name.clone(),
                    })?;
                    if args.len() != prim.arity() {
                        return Err(Error::Arity {
                            offset: tok.offset,
                            name,
                            expected: prim.arity(),
                            found: args.len(),
                        });
                    }
                    Ok(self.builder.prim(prim, args))
                } else {
                    Ok(self.builder.var(&name))
                }
            }
            TokKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(inner)
            }
            other => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected '{}'", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn internal_count(g: &ExprGraph) -> usize {
        g.nodes()
            .iter()
            .filter(|n| matches!(n.kind, ExprKind::Prim(_)))
            .count()
    }

    fn leaf_count(g: &ExprGraph) -> usize {
        g.nodes().len() - internal_count(g)
    }

    #[test]
    fn worked_example_has_three_leaves_and_three_ops() {
        let g = parse("(x1 + x2) / (x2 * x3)").unwrap();
        assert_eq!(leaf_count(&g), 3);
        assert_eq!(internal_count(&g), 3);
        assert_eq!(g.inputs(), &["x1", "x2", "x3"]);
        let root = g.node(g.root());
        assert_eq!(root.kind, ExprKind::Prim(Primitive::Div));
    }

    #[test]
    fn single_variable_is_root_leaf() {
        let g = parse("x1").unwrap();
        assert_eq!(g.nodes().len(), 1);
        assert_eq!(g.root(), 0);
        assert_eq!(g.node(0).kind, ExprKind::Var(0));
    }

    #[test]
    fn identical_subtrees_share_one_node() {
        let g = parse("sin(x1) * sin(x1)").unwrap();
        // x1, sin, mul
        assert_eq!(g.nodes().len(), 3);
        let root = g.node(g.root());
        assert_eq!(root.kind, ExprKind::Prim(Primitive::Mul));
        assert_eq!(root.children[0], root.children[1]);
    }

    #[test]
    fn parse_is_deterministic() {
        let a = parse("exp(x1) + tanh(x2) * x1 ^ 2").unwrap();
        let b = parse("exp(x1) + tanh(x2) * x1 ^ 2").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn power_is_right_associative() {
        let g = parse("x1 ^ x2 ^ x3").unwrap();
        let root = g.node(g.root());
        assert_eq!(root.kind, ExprKind::Prim(Primitive::Pow));
        // left child is the bare variable, right child the nested pow
        assert_eq!(g.node(root.children[0]).kind, ExprKind::Var(0));
        assert_eq!(g.node(root.children[1]).kind, ExprKind::Prim(Primitive::Pow));
    }

    #[test]
    fn unary_minus_lowers_to_neg_primitive() {
        let g = parse("-x1").unwrap();
        assert_eq!(g.node(g.root()).kind, ExprKind::Prim(Primitive::Neg));
        let g = parse("x1 - x2").unwrap();
        assert_eq!(g.node(g.root()).kind, ExprKind::Prim(Primitive::Sub));
    }

    #[test]
    fn syntax_error_reports_byte_offset() {
        let err = parse("x1 + + x2").unwrap_err();
        match err {
            Error::Syntax { offset, .. } => assert_eq!(offset, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse("x1 + (x2 * 3").unwrap_err() {
            Error::Syntax { offset, .. } => assert_eq!(offset, 12),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_function_and_arity_errors() {
        match parse("sinh(x1)").unwrap_err() {
            Error::UnknownFunction { name, offset } => {
                assert_eq!(name, "sinh");
                assert_eq!(offset, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse("pow(x1)").unwrap_err() {
            Error::Arity { expected, found, .. } => {
                assert_eq!(expected, 2);
                assert_eq!(found, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse("sin(x1, x2)").unwrap_err() {
            Error::Arity { expected, found, .. } => {
                assert_eq!(expected, 1);
                assert_eq!(found, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn number_literals_with_exponents() {
        let g = parse("1.5e-2 * x1 + .5 + 2E3").unwrap();
        let consts: Vec<f64> = g
            .nodes()
            .iter()
            .filter_map(|n| match n.kind {
                ExprKind::Const(c) => Some(c),
                _ => None,
            })
            .collect();
        assert!(consts.contains(&0.015));
        assert!(consts.contains(&0.5));
        assert!(consts.contains(&2000.0));
    }
}
