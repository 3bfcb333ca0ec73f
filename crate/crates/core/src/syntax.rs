//! Text syntax for Borel codes.
//!
//! ```text
//! node    := (union node+) | (inter node+) | (leaf clopen) | (ref name)
//!          | (union-omega node+) | (inter-omega node+)
//! clopen  := empty | full | {[bits], [bits], ...}
//! file    := (def name node)* node
//! ```
//!
//! Any node except `ref` may carry `:rank <ordinal>` among its arguments. The
//! `-omega` forms denote nodes with infinitely many children cycling through
//! the listed ones. A file with `def` bindings is read as a finite, possibly
//! cyclic, node table; a file without them as an explicit tree.
//!
//! `#` starts a comment that runs to the end of the line.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::codes::{BorelCode, ChildCount, ClopenCode, CodeGraph, GraphNode, Label, LazySource};
use crate::ordinals::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unbound reference ({0})")]
    UnboundRef(String),
    #[error("name {0} is defined twice")]
    DuplicateDef(String),
    #[error("-omega nodes cannot appear in a file with defs")]
    OmegaInGraph,
    #[error("cannot print code: {0}")]
    Unprintable(&'static str),
}

#[derive(Debug, Clone)]
enum Kind {
    Union,
    Inter,
    Leaf(ClopenCode),
}

#[derive(Debug, Clone)]
enum Expr {
    Node {
        kind: Kind,
        omega: bool,
        rank: Option<Ordinal>,
        children: Vec<Expr>,
    },
    Ref(String),
}

#[derive(Debug)]
enum Form {
    Def(String, Expr),
    Bound(Ordinal),
    Pos(Expr),
    Neg(Expr),
    Expr(Expr),
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str) -> Self {
        Reader { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        self.error_at(self.pos, msg)
    }

    fn error_at<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, SyntaxError> {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        Err(SyntaxError::Parse {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        loop {
            let r = self.rest();
            let trimmed = r.trim_start();
            self.pos += r.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), SyntaxError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.error(format!("expected '{c}'"))
        }
    }

    fn word(&mut self) -> Result<&'a str, SyntaxError> {
        self.skip_ws();
        let r = self.rest();
        let len = r
            .find(|c: char| c.is_whitespace() || "(){}".contains(c))
            .unwrap_or(r.len());
        if len == 0 {
            return self.error("expected a word");
        }
        self.pos += len;
        Ok(&r[..len])
    }

    fn ordinal(&mut self) -> Result<Ordinal, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        match Ordinal::parse_prefix(self.rest()) {
            Ok((o, used)) => {
                self.pos += used;
                Ok(o)
            }
            Err(e) => self.error_at(start, e.to_string()),
        }
    }

    fn clopen(&mut self) -> Result<ClopenCode, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let text = if self.rest().starts_with('{') {
            let Some(end) = self.rest().find('}') else {
                return self.error("unterminated clopen set");
            };
            let t = &self.rest()[..=end];
            self.pos += end + 1;
            t
        } else {
            self.word()?
        };
        text.parse()
            .or_else(|e: crate::codes::CodeError| self.error_at(start, e.to_string()))
    }

    fn form(&mut self) -> Result<Form, SyntaxError> {
        let start = self.pos;
        self.expect('(')?;
        let head = self.word()?;
        let form = match head {
            "def" => {
                let name = self.word()?.to_string();
                let body = self.expr()?;
                Form::Def(name, body)
            }
            "bound" => Form::Bound(self.ordinal()?),
            "pos" => Form::Pos(self.expr()?),
            "neg" => Form::Neg(self.expr()?),
            _ => {
                self.pos = start;
                return self.expr().map(Form::Expr);
            }
        };
        self.expect(')')?;
        Ok(form)
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.expect('(')?;
        let head_pos = self.pos;
        let head = self.word()?;
        if head == "ref" {
            let name = self.word()?.to_string();
            self.expect(')')?;
            return Ok(Expr::Ref(name));
        }
        let (kind, omega) = match head {
            "union" => (Kind::Union, false),
            "inter" => (Kind::Inter, false),
            "union-omega" => (Kind::Union, true),
            "inter-omega" => (Kind::Inter, true),
            "leaf" => (Kind::Leaf(ClopenCode::empty()), false),
            other => return self.error_at(head_pos, format!("unknown node kind '{other}'")),
        };
        let mut rank = None;
        let mut children = Vec::new();
        let mut leaf_set = None;
        loop {
            match self.peek() {
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some(':') => {
                    let kw_pos = self.pos;
                    if self.word()? != ":rank" {
                        return self.error_at(kw_pos, "expected ':rank'");
                    }
                    if rank.is_some() {
                        return self.error_at(kw_pos, "duplicate :rank");
                    }
                    rank = Some(self.ordinal()?);
                }
                Some(_) if matches!(kind, Kind::Leaf(_)) => {
                    if leaf_set.is_some() {
                        return self.error("a leaf takes exactly one clopen set");
                    }
                    leaf_set = Some(self.clopen()?);
                }
                Some('(') => children.push(self.expr()?),
                Some(_) => return self.error("expected a child node, ':rank', or ')'"),
                None => return self.error("unexpected end of input"),
            }
        }
        let kind = match kind {
            Kind::Leaf(_) => match leaf_set {
                Some(c) => Kind::Leaf(c),
                None => return self.error_at(head_pos, "leaf without a clopen set"),
            },
            k => {
                if children.is_empty() {
                    return self.error_at(head_pos, "union/inter needs at least one child");
                }
                k
            }
        };
        Ok(Expr::Node {
            kind,
            omega,
            rank,
            children,
        })
    }
}

fn label_of(kind: &Kind) -> Label {
    match kind {
        Kind::Union => Label::Union,
        Kind::Inter => Label::Intersection,
        Kind::Leaf(c) => Label::Leaf(c.clone()),
    }
}

fn build_tree(e: &Expr) -> Result<BorelCode, SyntaxError> {
    match e {
        Expr::Ref(name) => Err(SyntaxError::UnboundRef(name.clone())),
        Expr::Node {
            kind,
            omega,
            rank,
            children,
        } => {
            let kids = children
                .iter()
                .map(build_tree)
                .collect::<Result<Vec<_>, _>>()?;
            let code = if *omega {
                BorelCode::lazy_cycle(label_of(kind), kids)
            } else {
                BorelCode::tree(label_of(kind), kids)
            };
            Ok(match rank {
                Some(r) => code.ranked(r.clone()),
                None => code,
            })
        }
    }
}

struct Flattener<'a> {
    defs: &'a HashMap<String, usize>,
    nodes: Vec<GraphNode>,
}

impl Flattener<'_> {
    fn flatten(&mut self, e: &Expr, slot: Option<usize>) -> Result<usize, SyntaxError> {
        match e {
            Expr::Ref(name) => {
                let target = *self
                    .defs
                    .get(name)
                    .ok_or_else(|| SyntaxError::UnboundRef(name.clone()))?;
                match slot {
                    // (def a (ref b)) aliases a to b
                    Some(s) => {
                        self.nodes[s].children = vec![target];
                        self.nodes[s].label = Label::Union;
                        Ok(s)
                    }
                    None => Ok(target),
                }
            }
            Expr::Node {
                kind,
                omega,
                rank,
                children,
            } => {
                if *omega {
                    return Err(SyntaxError::OmegaInGraph);
                }
                let id = match slot {
                    Some(s) => s,
                    None => {
                        self.nodes.push(GraphNode {
                            name: None,
                            label: Label::Union,
                            rank: None,
                            children: Vec::new(),
                        });
                        self.nodes.len() - 1
                    }
                };
                let kids = children
                    .iter()
                    .map(|c| self.flatten(c, None))
                    .collect::<Result<Vec<_>, _>>()?;
                let node = &mut self.nodes[id];
                node.label = label_of(kind);
                node.rank = rank.clone();
                node.children = kids;
                Ok(id)
            }
        }
    }
}

fn build_graph(defs: &[(String, Expr)], root: &Expr) -> Result<BorelCode, SyntaxError> {
    let mut index = HashMap::new();
    let mut nodes = Vec::new();
    for (name, _) in defs {
        if index.insert(name.clone(), nodes.len()).is_some() {
            return Err(SyntaxError::DuplicateDef(name.clone()));
        }
        nodes.push(GraphNode {
            name: Some(name.clone()),
            label: Label::Union,
            rank: None,
            children: Vec::new(),
        });
    }
    let mut fl = Flattener {
        defs: &index,
        nodes,
    };
    for (i, (_, body)) in defs.iter().enumerate() {
        fl.flatten(body, Some(i))?;
    }
    let root_id = fl.flatten(root, None)?;
    let graph = CodeGraph::new(fl.nodes).expect("flattened graph is well formed");
    Ok(BorelCode::from_graph(Arc::new(graph), root_id).expect("root id in range"))
}

/// Parses a code file: optional `(def name node)` bindings followed by one
/// root node.
pub fn parse_code_file(text: &str) -> Result<BorelCode, SyntaxError> {
    let mut r = Reader::new(text);
    let mut defs = Vec::new();
    let mut root = None;
    while !r.at_end() {
        let pos = r.pos;
        match r.form()? {
            Form::Def(name, body) => {
                if root.is_some() {
                    return r.error_at(pos, "definitions must precede the root expression");
                }
                defs.push((name, body));
            }
            Form::Expr(e) => {
                if root.is_some() {
                    return r.error_at(pos, "more than one root expression");
                }
                root = Some(e);
            }
            _ => return r.error_at(pos, "only def forms and one root node are allowed here"),
        }
    }
    let Some(root) = root else {
        return r.error("missing root expression");
    };
    if defs.is_empty() {
        build_tree(&root)
    } else {
        build_graph(&defs, &root)
    }
}

/// The contents of a decoration family file: `(bound <ordinal>)` once, then
/// any number of `(pos node)` and `(neg node)` forms.
#[derive(Debug, Clone)]
pub struct FamilyFile {
    pub bound: Ordinal,
    pub positives: Vec<BorelCode>,
    pub negatives: Vec<BorelCode>,
}

pub fn parse_family_file(text: &str) -> Result<FamilyFile, SyntaxError> {
    let mut r = Reader::new(text);
    let mut bound = None;
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    while !r.at_end() {
        let pos = r.pos;
        match r.form()? {
            Form::Bound(b) => {
                if bound.replace(b).is_some() {
                    return r.error_at(pos, "duplicate (bound ...)");
                }
            }
            Form::Pos(e) => positives.push(build_tree(&e)?),
            Form::Neg(e) => negatives.push(build_tree(&e)?),
            _ => return r.error_at(pos, "expected (bound ...), (pos ...), or (neg ...)"),
        }
    }
    let Some(bound) = bound else {
        return r.error("missing (bound <ordinal>)");
    };
    Ok(FamilyFile {
        bound,
        positives,
        negatives,
    })
}

/// Parses a single node expression without `def` support.
pub fn parse_node(text: &str) -> Result<BorelCode, SyntaxError> {
    let mut r = Reader::new(text);
    let e = r.expr()?;
    if !r.at_end() {
        return r.error("trailing input");
    }
    build_tree(&e)
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

struct Printer {
    graph: Option<Arc<CodeGraph>>,
    names: BTreeMap<usize, String>,
}

impl Printer {
    fn head(label: &Label, omega: bool) -> &'static str {
        match (label, omega) {
            (Label::Union, false) => "union",
            (Label::Intersection, false) => "inter",
            (Label::Union, true) => "union-omega",
            (Label::Intersection, true) => "inter-omega",
            (Label::Leaf(_), _) => "leaf",
        }
    }

    fn open(out: &mut String, label: &Label, omega: bool, rank: Option<&Ordinal>) {
        out.push('(');
        out.push_str(Self::head(label, omega));
        if let Some(r) = rank {
            let _ = write!(out, " :rank {r}");
        }
        if let Label::Leaf(c) = label {
            let _ = write!(out, " {c}");
        }
    }

    fn register_graph(&mut self, g: &Arc<CodeGraph>, root: usize) -> Result<(), SyntaxError> {
        if let Some(existing) = &self.graph {
            if Arc::ptr_eq(existing, g) {
                return Ok(());
            }
            return Err(SyntaxError::Unprintable(
                "code mixes more than one graph presentation",
            ));
        }
        let reach = g.reachable(root);
        let mut indegree = vec![0usize; g.len()];
        for &v in &reach {
            for &c in &g.nodes()[v].children {
                indegree[c] += 1;
            }
        }
        let taken: Vec<&str> = g.nodes().iter().filter_map(|n| n.name.as_deref()).collect();
        for &v in &reach {
            let needs_name = indegree[v] >= 2 || (v == root && indegree[v] >= 1);
            match &g.nodes()[v].name {
                Some(n) => {
                    self.names.insert(v, n.clone());
                }
                None if needs_name => {
                    let mut name = format!("n{v}");
                    while taken.contains(&name.as_str()) {
                        name.push('_');
                    }
                    self.names.insert(v, name);
                }
                None => {}
            }
        }
        self.graph = Some(g.clone());
        Ok(())
    }

    fn graph_body(&self, id: usize, out: &mut String) {
        let g = self.graph.as_ref().expect("registered");
        let n = &g.nodes()[id];
        Self::open(out, &n.label, false, n.rank.as_ref());
        for &c in &n.children {
            out.push(' ');
            self.graph_node(c, out);
        }
        out.push(')');
    }

    fn graph_node(&self, id: usize, out: &mut String) {
        match self.names.get(&id) {
            Some(name) => {
                let _ = write!(out, "(ref {name})");
            }
            None => self.graph_body(id, out),
        }
    }

    fn code(&mut self, t: &BorelCode, out: &mut String) -> Result<(), SyntaxError> {
        if let Some((g, id)) = t.graph_ref() {
            self.register_graph(g, id)?;
            self.graph_node(id, out);
            return Ok(());
        }
        let (omega, kids) = match (t.lazy_source(), t.child_count()) {
            (Some(LazySource::Cycle(items)), ChildCount::Infinite) => (true, items.clone()),
            (_, ChildCount::Infinite) => {
                return Err(SyntaxError::Unprintable(
                    "infinite generator without a finite description",
                ))
            }
            _ => (false, t.children().expect("finite child count")),
        };
        Self::open(out, t.label(), omega, t.rank());
        for c in &kids {
            out.push(' ');
            self.code(c, out)?;
        }
        out.push(')');
        Ok(())
    }
}

/// Renders a code in the file syntax; graph presentations get their `def`
/// bindings first. Fails for infinite generators that are not cycles.
pub fn print_code(t: &BorelCode) -> Result<String, SyntaxError> {
    let mut p = Printer {
        graph: None,
        names: BTreeMap::new(),
    };
    let mut body = String::new();
    p.code(t, &mut body)?;
    let mut out = String::new();
    if p.graph.is_some() {
        for (&id, name) in &p.names {
            let _ = write!(out, "(def {name} ");
            p.graph_body(id, &mut out);
            out.push_str(")\n");
        }
    }
    out.push_str(&body);
    Ok(out)
}
