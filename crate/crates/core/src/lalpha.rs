//! Finite levels of the constructible hierarchy: first-order formulas over
//! finite membership structures, the definable-powerset step, and Borel
//! codes for sets of reals represented in a level.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::codes::{BorelCode, ChildCount, ClopenCode, Label};
use crate::ordinals::Ordinal;

/// Largest representation window accepted by [`code_of_definable`]; the
/// clopen set fixing bit `n` has `2^n` maximal cylinders.
pub const MAX_WINDOW: usize = 20;

/// Default element cap for [`build_hierarchy`].
pub const DEFAULT_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LalphaError {
    #[error("formula syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("elements {0} and {1} have the same members")]
    NotExtensional(String, String),
    #[error("membership has a cycle through {0}")]
    IllFounded(String),
    #[error("numbering is not injective")]
    NonInjectiveNumbering,
    #[error("numbering refers to element {0} outside the structure")]
    NumberingOutOfRange(usize),
    #[error("window {window} must cover the numbering ({numbered}) and be at most {max}")]
    BadWindow {
        window: usize,
        numbered: usize,
        max: usize,
    },
    #[error("next level would have up to 2^{size} elements, over the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("structure file line {line}: {msg}")]
    StructureSyntax { line: usize, msg: String },
}

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    In(String, String),
    Eq(String, String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        let mut var = |v: &String, bound: &Vec<&str>| {
            if !bound.contains(&v.as_str()) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::In(a, b) | Formula::Eq(a, b) => {
                var(a, bound);
                var(b, bound);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(v);
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::In(..) | Formula::Eq(..) => 1,
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.size(),
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.size() + r.size(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists(..) | Formula::Forall(..) => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Not(_) => 3,
            _ => 4,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            write!(f, "(")?;
        }
        match self {
            Formula::True => write!(f, "true")?,
            Formula::False => write!(f, "false")?,
            Formula::In(a, b) => write!(f, "in({a},{b})")?,
            Formula::Eq(a, b) => write!(f, "{a} = {b}")?,
            Formula::Not(g) => {
                write!(f, "!")?;
                g.write_prec(f, 3)?;
            }
            Formula::And(l, r) => {
                l.write_prec(f, 2)?;
                write!(f, " & ")?;
                r.write_prec(f, 3)?;
            }
            Formula::Or(l, r) => {
                l.write_prec(f, 1)?;
                write!(f, " | ")?;
                r.write_prec(f, 2)?;
            }
            Formula::Exists(v, g) => {
                write!(f, "exists {v}. ")?;
                g.write_prec(f, 0)?;
            }
            Formula::Forall(v, g) => {
                write!(f, "forall {v}. ")?;
                g.write_prec(f, 0)?;
            }
        }
        if wrap {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

impl std::str::FromStr for Formula {
    type Err = LalphaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

const KEYWORDS: [&str; 5] = ["exists", "forall", "in", "true", "false"];

struct FormulaParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> FormulaParser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T, LalphaError> {
        Err(LalphaError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), LalphaError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(&format!("expected '{tok}'"))
        }
    }

    fn ident(&mut self) -> Result<&'a str, LalphaError> {
        self.ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        let first_ok = rest
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        if len == 0 || !first_ok {
            return self.err("expected an identifier");
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn variable(&mut self) -> Result<String, LalphaError> {
        let start = self.pos;
        let id = self.ident()?;
        if KEYWORDS.contains(&id) {
            self.pos = start;
            return self.err("expected a variable");
        }
        Ok(id.to_string())
    }

    fn formula(&mut self) -> Result<Formula, LalphaError> {
        let mut f = self.conj()?;
        while self.eat("|") {
            f = Formula::Or(Box::new(f), Box::new(self.conj()?));
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, LalphaError> {
        let mut f = self.unary()?;
        while self.eat("&") {
            f = Formula::And(Box::new(f), Box::new(self.unary()?));
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, LalphaError> {
        if self.eat("!") {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        self.ws();
        let start = self.pos;
        let id = self.ident()?;
        match id {
            "exists" | "forall" => {
                let v = self.variable()?;
                self.expect(".")?;
                let body = Box::new(self.formula()?);
                Ok(if id == "exists" {
                    Formula::Exists(v, body)
                } else {
                    Formula::Forall(v, body)
                })
            }
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            "in" => {
                self.expect("(")?;
                let a = self.variable()?;
                self.expect(",")?;
                let b = self.variable()?;
                self.expect(")")?;
                Ok(Formula::In(a, b))
            }
            _ => {
                self.pos = start;
                let a = self.variable()?;
                self.expect("=")?;
                let b = self.variable()?;
                Ok(Formula::Eq(a, b))
            }
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, LalphaError> {
    let mut p = FormulaParser { src: text, pos: 0 };
    let f = p.formula()?;
    p.ws();
    if p.pos != text.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Structures
// ---------------------------------------------------------------------------

/// How an element produced by [`def_step`] was first defined: a formula in
/// the variable `y` and the parameters bound to its other free variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub formula: Formula,
    pub params: Vec<(String, usize)>,
}

/// A finite, extensional, well-founded membership structure. Element ids are
/// indices; `members[e]` lists the ids belonging to `e`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FinStructure {
    members: Vec<BTreeSet<usize>>,
    names: Vec<String>,
    origin: Vec<Option<Definition>>,
}

impl FinStructure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(names: Vec<String>, membership: &[(usize, usize)]) -> Result<Self, LalphaError> {
        let mut members = vec![BTreeSet::new(); names.len()];
        for &(a, b) in membership {
            members[b].insert(a);
        }
        let origin = vec![None; names.len()];
        let s = FinStructure {
            members,
            names,
            origin,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), LalphaError> {
        let mut seen: HashMap<&BTreeSet<usize>, usize> = HashMap::new();
        for (i, m) in self.members.iter().enumerate() {
            if let Some(&j) = seen.get(m) {
                return Err(LalphaError::NotExtensional(
                    self.names[j].clone(),
                    self.names[i].clone(),
                ));
            }
            seen.insert(m, i);
        }
        // 0 unvisited, 1 on stack, 2 done
        let mut state = vec![0u8; self.len()];
        fn dfs(s: &FinStructure, v: usize, state: &mut [u8]) -> Result<(), LalphaError> {
            state[v] = 1;
            for &m in &s.members[v] {
                match state[m] {
                    1 => return Err(LalphaError::IllFounded(s.names[m].clone())),
                    0 => dfs(s, m, state)?,
                    _ => {}
                }
            }
            state[v] = 2;
            Ok(())
        }
        for v in 0..self.len() {
            if state[v] == 0 {
                dfs(self, v, &mut state)?;
            }
        }
        Ok(())
    }

    /// Reads `elem <name>` lines followed by `in <a> <b>` lines (a ∈ b).
    pub fn from_text(text: &str) -> Result<Self, LalphaError> {
        let mut names = Vec::new();
        let mut index = HashMap::new();
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| LalphaError::StructureSyntax { line: i + 1, msg };
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["elem", name] => {
                    if !pairs.is_empty() {
                        return Err(err("elem lines must precede in lines".into()));
                    }
                    if index.insert(name.to_string(), names.len()).is_some() {
                        return Err(err(format!("duplicate element {name}")));
                    }
                    names.push(name.to_string());
                }
                ["in", a, b] => {
                    let look = |n: &str| {
                        index
                            .get(n)
                            .copied()
                            .ok_or_else(|| err(format!("unknown element {n}")))
                    };
                    pairs.push((look(a)?, look(b)?));
                }
                _ => return Err(err(format!("cannot read '{line}'"))),
            }
        }
        Self::new(names, &pairs)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self, e: usize) -> &BTreeSet<usize> {
        &self.members[e]
    }

    pub fn name(&self, e: usize) -> &str {
        &self.names[e]
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn origin(&self, e: usize) -> Option<&Definition> {
        self.origin[e].as_ref()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.members[b].contains(&a)
    }

    /// Whether `self` is an ∈-initial segment of `other`: same ids, same
    /// member sets.
    pub fn is_initial_segment_of(&self, other: &FinStructure) -> bool {
        self.len() <= other.len() && self.members[..] == other.members[..self.len()]
    }

    /// The element with exactly these members, if any.
    pub fn element_with(&self, members: &BTreeSet<usize>) -> Option<usize> {
        self.members.iter().position(|m| m == members)
    }

    /// The canonical numbering: `h[n]` is the von Neumann natural `n`, for
    /// as long as those are present.
    pub fn numbering(&self) -> Vec<usize> {
        let mut h: Vec<usize> = Vec::new();
        let mut want = BTreeSet::new();
        while let Some(e) = self.element_with(&want) {
            h.push(e);
            want.insert(e);
        }
        h
    }

    fn push(&mut self, members: BTreeSet<usize>, origin: Definition) {
        let inner: Vec<&str> = members.iter().map(|&m| self.names[m].as_str()).collect();
        self.names.push(format!("{{{}}}", inner.join(",")));
        self.members.push(members);
        self.origin.push(Some(origin));
    }
}

pub fn eval_formula(
    s: &FinStructure,
    phi: &Formula,
    assignment: &HashMap<String, usize>,
) -> Result<bool, LalphaError> {
    let mut env: Vec<(&str, usize)> = assignment.iter().map(|(k, &v)| (k.as_str(), v)).collect();
    eval_in(s, phi, &mut env)
}

fn eval_in<'a>(
    s: &FinStructure,
    phi: &'a Formula,
    env: &mut Vec<(&'a str, usize)>,
) -> Result<bool, LalphaError> {
    let get = |v: &String, env: &Vec<(&str, usize)>| {
        env.iter()
            .rev()
            .find(|(k, _)| *k == v.as_str())
            .map(|&(_, e)| e)
            .ok_or_else(|| LalphaError::UnboundVariable(v.clone()))
    };
    Ok(match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::In(a, b) => s.contains(get(a, env)?, get(b, env)?),
        Formula::Eq(a, b) => get(a, env)? == get(b, env)?,
        Formula::Not(f) => !eval_in(s, f, env)?,
        Formula::And(l, r) => eval_in(s, l, env)? && eval_in(s, r, env)?,
        Formula::Or(l, r) => eval_in(s, l, env)? || eval_in(s, r, env)?,
        Formula::Exists(v, f) | Formula::Forall(v, f) => {
            let universal = matches!(phi, Formula::Forall(..));
            let mut result = universal;
            for e in 0..s.len() {
                env.push((v, e));
                let b = eval_in(s, f, env);
                env.pop();
                if b? != universal {
                    result = !universal;
                    break;
                }
            }
            result
        }
    })
}

// ---------------------------------------------------------------------------
// Def
// ---------------------------------------------------------------------------

fn var(s: &str) -> String {
    s.to_string()
}

fn atoms(vars: &[&str]) -> Vec<Formula> {
    let mut out = vec![Formula::True, Formula::False];
    for a in vars {
        for b in vars {
            out.push(Formula::In(var(a), var(b)));
            if a != b {
                out.push(Formula::Eq(var(a), var(b)));
            }
        }
    }
    out
}

/// Formulas in `y`, `z` and a bound `u`, of size at most three, ordered by
/// size and then by printed syntax.
fn small_formulas() -> Vec<Formula> {
    let outer = atoms(&["y", "z"]);
    let inner: Vec<Formula> = atoms(&["y", "z", "u"])
        .into_iter()
        .filter(|f| f.free_vars().contains("u"))
        .collect();
    let quantify = |body: &Formula| {
        [
            Formula::Exists(var("u"), Box::new(body.clone())),
            Formula::Forall(var("u"), Box::new(body.clone())),
        ]
    };
    let mut by_size: BTreeMap<usize, Vec<Formula>> = BTreeMap::new();
    by_size.insert(1, outer.clone());
    let mut two: Vec<Formula> = outer.iter().map(|f| Formula::Not(Box::new(f.clone()))).collect();
    two.extend(inner.iter().flat_map(quantify));
    by_size.insert(2, two.clone());
    let mut three: Vec<Formula> = two.iter().map(|f| Formula::Not(Box::new(f.clone()))).collect();
    for l in &outer {
        for r in &outer {
            three.push(Formula::And(Box::new(l.clone()), Box::new(r.clone())));
            three.push(Formula::Or(Box::new(l.clone()), Box::new(r.clone())));
        }
    }
    for body in &inner {
        three.extend(quantify(&Formula::Not(Box::new(body.clone()))));
    }
    by_size.insert(3, three);
    let mut out = Vec::new();
    for (_, mut fs) in by_size {
        fs.sort_by_cached_key(|f| f.to_string());
        fs.dedup();
        out.extend(fs);
    }
    out
}

/// `y = z1 | ... | y = zk`, or `false` for no parameters.
fn listing(k: usize) -> Formula {
    (1..=k)
        .map(|i| Formula::Eq(var("y"), format!("z{i}")))
        .reduce(|l, r| Formula::Or(Box::new(l), Box::new(r)))
        .unwrap_or(Formula::False)
}

fn subsets_in_order(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..=n).flat_map(move |k| combinations(n, k))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Adds one element for each subset of the domain definable with
/// parameters and not already present. Candidate definitions are tried in a
/// fixed order: small formulas in `y` and one parameter `z`, then explicit
/// listings, which make every subset definable.
pub fn def_step(s: &FinStructure) -> FinStructure {
    let mut out = s.clone();
    let mut known: HashSet<BTreeSet<usize>> = s.members.iter().cloned().collect();
    let n = s.len();
    let mut consider = |set: BTreeSet<usize>, def: Definition, out: &mut FinStructure| {
        if known.insert(set.clone()) {
            out.push(set, def);
        }
    };
    for phi in small_formulas() {
        let uses_z = phi.free_vars().contains("z");
        let params: Vec<Option<usize>> = if uses_z {
            (0..n).map(Some).collect()
        } else {
            vec![None]
        };
        for z in params {
            let mut env = HashMap::new();
            if let Some(z) = z {
                env.insert(var("z"), z);
            }
            let set: BTreeSet<usize> = (0..n)
                .filter(|&y| {
                    env.insert(var("y"), y);
                    eval_formula(s, &phi, &env).expect("enumerated formulas are closed over y, z")
                })
                .collect();
            let def = Definition {
                formula: phi.clone(),
                params: z.map(|z| vec![(var("z"), z)]).unwrap_or_default(),
            };
            consider(set, def, &mut out);
        }
    }
    for subset in subsets_in_order(n) {
        let set: BTreeSet<usize> = subset.iter().copied().collect();
        let def = Definition {
            formula: listing(subset.len()),
            params: subset
                .iter()
                .enumerate()
                .map(|(i, &e)| (format!("z{}", i + 1), e))
                .collect(),
        };
        consider(set, def, &mut out);
    }
    out
}

/// Levels `0..=n` starting from the empty structure.
pub fn build_hierarchy(n: usize, cap: usize) -> Result<Vec<FinStructure>, LalphaError> {
    let mut levels = vec![FinStructure::empty()];
    for _ in 0..n {
        let last = levels.last().expect("nonempty");
        let size = last.len();
        if size >= usize::BITS as usize || (1usize << size) > cap {
            return Err(LalphaError::TooLarge { size, cap });
        }
        let next = def_step(last);
        levels.push(next);
    }
    Ok(levels)
}

/// Index of the first level satisfying a sentence.
pub fn first_stage_satisfying(
    levels: &[FinStructure],
    sentence: &Formula,
) -> Result<Option<usize>, LalphaError> {
    for (i, s) in levels.iter().enumerate() {
        if eval_formula(s, sentence, &HashMap::new())? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Codes
// ---------------------------------------------------------------------------

/// A code for the reals X such that some element x satisfies `phi` (with
/// `x_var` bound to x) and represents X: for every n below `window`, X(n)
/// is 1 exactly when `h[n]` is a member of x. Bits outside the numbering
/// are 0. Leaves have rank 0, the representation clause 1, each witness 2,
/// and the root 3.
pub fn code_of_definable(
    s: &FinStructure,
    phi: &Formula,
    x_var: &str,
    params: &HashMap<String, usize>,
    h: &[usize],
    window: usize,
) -> Result<BorelCode, LalphaError> {
    let mut seen = HashSet::new();
    for &e in h {
        if e >= s.len() {
            return Err(LalphaError::NumberingOutOfRange(e));
        }
        if !seen.insert(e) {
            return Err(LalphaError::NonInjectiveNumbering);
        }
    }
    if window < h.len() || window > MAX_WINDOW {
        return Err(LalphaError::BadWindow {
            window,
            numbered: h.len(),
            max: MAX_WINDOW,
        });
    }
    if let Some(v) = phi
        .free_vars()
        .into_iter()
        .find(|v| v != x_var && !params.contains_key(v))
    {
        return Err(LalphaError::UnboundVariable(v));
    }
    let mut witnesses = Vec::new();
    for x in 0..s.len() {
        let mut env = params.clone();
        env.insert(x_var.to_string(), x);
        let holds = eval_formula(s, phi, &env)?;
        let decided = BorelCode::leaf(if holds {
            ClopenCode::full()
        } else {
            ClopenCode::empty()
        })
        .ranked(Ordinal::zero());
        let bits: Vec<bool> = (0..window)
            .map(|n| n < h.len() && s.contains(h[n], x))
            .collect();
        let represents = BorelCode::lazy(Label::Intersection, ChildCount::Finite(window), move |n| {
            BorelCode::leaf(ClopenCode::bit_equals(n, bits[n])).ranked(Ordinal::zero())
        })
        .ranked(Ordinal::one());
        witnesses.push(
            BorelCode::intersection(vec![decided, represents]).ranked(Ordinal::natural(2u64)),
        );
    }
    Ok(BorelCode::union(witnesses).ranked(Ordinal::natural(3u64)))
}

/// The k-th output denotes the k-th input minus all earlier ones.
pub fn layered_difference(codes: &[BorelCode]) -> Vec<BorelCode> {
    (0..codes.len())
        .map(|k| {
            let mut parts = vec![codes[k].clone()];
            parts.extend(codes[..k].iter().map(BorelCode::negate));
            let rank = parts
                .iter()
                .map(|p| p.rank().cloned())
                .collect::<Option<Vec<_>>>()
                .map(|rs| rs.into_iter().max().expect("nonempty").successor());
            let node = BorelCode::intersection(parts);
            match rank {
                Some(r) => node.ranked(r),
                None => node,
            }
        })
        .collect()
}
