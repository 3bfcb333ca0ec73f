//! Finitely presented partitions of the naturals, their 2-block
//! coarsenings, and the adversarial coloring against the dual Ramsey
//! statement.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::codes::Point;
use crate::stagecraft::{StageError, StageRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RamseyError {
    #[error("map is not strictly increasing")]
    NotMonotone,
    #[error("coarsening would have an empty block")]
    EmptyBlock,
    #[error("partition has finitely many blocks")]
    FinitelyManyBlocks,
    #[error("eventual rule needs a nonempty pattern")]
    EmptyPattern,
    #[error("partition syntax: {0}")]
    Syntax(String),
    #[error(transparent)]
    Registry(#[from] StageError),
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// What happens from the cutoff on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Eventual {
    /// `n >= cutoff` lies in block `pattern[(n - cutoff) % m]`; labels may
    /// repeat table blocks. Finitely many blocks.
    Cycle(Vec<usize>),
    /// Each window of `w = pattern.len()` positions from the cutoff on
    /// starts fresh blocks, split by `pattern`. Infinitely many blocks.
    Linear(Vec<usize>),
}

/// A partition of the naturals given by a finite table and an eventual
/// rule. Blocks are numbered in order of least element.
#[derive(Debug, Clone, Eq)]
pub struct FinPartition {
    table: Vec<usize>,
    rule: Eventual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockCount {
    Finite(usize),
    Infinite,
}

/// Renumbers labels by first appearance.
fn first_appearance(labels: &[usize]) -> (Vec<usize>, HashMap<usize, usize>) {
    let mut map = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map)
}

fn primitive_period(p: &[usize]) -> usize {
    (1..=p.len())
        .find(|&d| p.len() % d == 0 && (d..p.len()).all(|i| p[i] == p[i - d]))
        .expect("the full length is a period")
}

impl FinPartition {
    pub fn new(table: Vec<usize>, rule: Eventual) -> Result<Self, RamseyError> {
        match &rule {
            Eventual::Cycle(p) | Eventual::Linear(p) if p.is_empty() => {
                return Err(RamseyError::EmptyPattern)
            }
            _ => {}
        }
        Ok(Self::canonical(table, rule))
    }

    fn canonical(mut table: Vec<usize>, rule: Eventual) -> Self {
        match rule {
            Eventual::Cycle(mut pattern) => {
                pattern.truncate(primitive_period(&pattern));
                while let (Some(&t), Some(&p)) = (table.last(), pattern.last()) {
                    if t != p {
                        break;
                    }
                    table.pop();
                    pattern.rotate_right(1);
                }
                let mut all = table.clone();
                all.extend(&pattern);
                let (labels, _) = first_appearance(&all);
                let (t, p) = labels.split_at(table.len());
                FinPartition {
                    table: t.to_vec(),
                    rule: Eventual::Cycle(p.to_vec()),
                }
            }
            Eventual::Linear(pattern) => FinPartition {
                table: first_appearance(&table).0,
                rule: Eventual::Linear(first_appearance(&pattern).0),
            },
        }
    }

    /// Every natural in its own block.
    pub fn singletons() -> Self {
        Self::canonical(vec![], Eventual::Linear(vec![0]))
    }

    /// Blocks `{w*i, ..., w*i + w - 1}`.
    pub fn intervals(width: usize) -> Self {
        Self::canonical(vec![], Eventual::Linear(vec![0; width.max(1)]))
    }

    /// Block of `n` for `n` below the cutoff, then cycling through `base..base+m`.
    pub fn periodic(table: Vec<usize>, base: usize, m: usize) -> Result<Self, RamseyError> {
        Self::new(table, Eventual::Cycle((base..base + m).collect()))
    }

    pub fn tail(table: Vec<usize>, block: usize) -> Self {
        Self::canonical(table, Eventual::Cycle(vec![block]))
    }

    pub fn cutoff(&self) -> usize {
        self.table.len()
    }

    pub fn rule(&self) -> &Eventual {
        &self.rule
    }

    fn table_blocks(&self) -> usize {
        self.table.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn block_of(&self, n: usize) -> usize {
        if n < self.table.len() {
            return self.table[n];
        }
        let k = n - self.table.len();
        match &self.rule {
            Eventual::Cycle(p) => p[k % p.len()],
            Eventual::Linear(p) => {
                let r = p.iter().max().expect("nonempty") + 1;
                self.table_blocks() + (k / p.len()) * r + p[k % p.len()]
            }
        }
    }

    pub fn block_count(&self) -> BlockCount {
        match &self.rule {
            Eventual::Cycle(p) => {
                BlockCount::Finite(self.table.iter().chain(p).max().expect("nonempty pattern") + 1)
            }
            Eventual::Linear(_) => BlockCount::Infinite,
        }
    }

    fn rule_width(&self) -> usize {
        match &self.rule {
            Eventual::Cycle(p) | Eventual::Linear(p) => p.len(),
        }
    }

    /// A prefix length on which two partitions agree only if they are equal.
    pub fn comparison_window(&self, other: &FinPartition) -> usize {
        self.cutoff().max(other.cutoff()) + 2 * lcm(self.rule_width(), other.rule_width())
    }

    fn from_samples(values: &[usize], cutoff: usize, period: usize) -> Self {
        Self::canonical(
            values[..cutoff].to_vec(),
            Eventual::Cycle(values[cutoff..cutoff + period].to_vec()),
        )
    }

    /// Merges the blocks of `self` into two: block `j` goes to side
    /// `chi.bit(j)`.
    pub fn coarsen_by_indicator(&self, chi: &Point) -> Result<FinPartition, RamseyError> {
        let (cutoff, period) = match &self.rule {
            Eventual::Cycle(p) => (self.cutoff(), p.len()),
            Eventual::Linear(p) => {
                let r = p.iter().max().expect("nonempty") + 1;
                let base = self.table_blocks();
                let s = chi.prefix().len();
                let q0 = s.saturating_sub(base).div_ceil(r);
                let windows = chi.period().len() / gcd(chi.period().len(), r);
                (self.cutoff() + q0 * p.len(), windows * p.len())
            }
        };
        let values: Vec<usize> = (0..cutoff + period)
            .map(|n| usize::from(chi.bit(self.block_of(n))))
            .collect();
        let q = Self::from_samples(&values, cutoff, period);
        if q.block_count() != BlockCount::Finite(2) {
            return Err(RamseyError::EmptyBlock);
        }
        Ok(q)
    }

    /// Whether every block of `self` lies inside a block of `coarse`.
    pub fn is_refined_by(&self, coarse: &FinPartition) -> bool {
        let w = self.comparison_window(coarse);
        let mut image: HashMap<usize, usize> = HashMap::new();
        (0..w).all(|n| *image.entry(self.block_of(n)).or_insert(coarse.block_of(n)) == coarse.block_of(n))
    }
}

impl PartialEq for FinPartition {
    fn eq(&self, other: &Self) -> bool {
        self.block_count() == other.block_count()
            && (0..self.comparison_window(other)).all(|n| self.block_of(n) == other.block_of(n))
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for FinPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let table: Vec<String> = self
            .table
            .iter()
            .enumerate()
            .map(|(n, b)| format!("{n}->{b}"))
            .collect();
        write!(f, "table: {}; rule: ", table.join(","))?;
        match &self.rule {
            Eventual::Cycle(p) if p.len() == 1 => write!(f, "tail({})", p[0]),
            Eventual::Cycle(p) if p.windows(2).all(|w| w[1] == w[0] + 1) => {
                write!(f, "periodic({},{})", p[0], p.len())
            }
            Eventual::Cycle(p) => write!(f, "cycle({})", join(p)),
            Eventual::Linear(p) => write!(f, "linear({})", join(p)),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>, RamseyError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| RamseyError::Syntax(format!("bad number '{x}'")))
        })
        .collect()
}

impl FromStr for FinPartition {
    type Err = RamseyError;

    /// `table: 0->0,1->1; rule: periodic(base,m) | tail(b) | cycle(..) | linear(..)`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = |m: &str| RamseyError::Syntax(m.to_string());
        let (t, r) = s.split_once(';').ok_or_else(|| syntax("expected 'table: ...; rule: ...'"))?;
        let t = t.trim().strip_prefix("table:").ok_or_else(|| syntax("missing 'table:'"))?;
        let mut table = Vec::new();
        for (i, entry) in t.split(',').map(str::trim).filter(|e| !e.is_empty()).enumerate() {
            let (k, v) = entry
                .split_once("->")
                .or_else(|| entry.split_once('→'))
                .ok_or_else(|| syntax("table entries look like n->b"))?;
            let k: usize = k.trim().parse().map_err(|_| syntax("bad table key"))?;
            if k != i {
                return Err(syntax("table keys must run 0, 1, 2, ..."));
            }
            table.push(v.trim().parse().map_err(|_| syntax("bad table value"))?);
        }
        let r = r.trim().strip_prefix("rule:").ok_or_else(|| syntax("missing 'rule:'"))?.trim();
        let (head, args) = r
            .strip_suffix(')')
            .and_then(|r| r.split_once('('))
            .ok_or_else(|| syntax("rule looks like name(args)"))?;
        let args = parse_list(args)?;
        let rule = match (head.trim(), args.as_slice()) {
            ("periodic", [base, m]) => Eventual::Cycle((*base..base + m).collect()),
            ("tail", [b]) => Eventual::Cycle(vec![*b]),
            ("cycle", _) => Eventual::Cycle(args),
            ("linear", _) => Eventual::Linear(args),
            _ => return Err(syntax("unknown rule")),
        };
        FinPartition::new(table, rule)
    }
}

/// A strictly increasing map: a finite table, then `i -> slope * i + offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneMap {
    table: Vec<usize>,
    slope: usize,
    offset: usize,
}

impl MonotoneMap {
    pub fn new(table: Vec<usize>, slope: usize, offset: usize) -> Result<Self, RamseyError> {
        let f = MonotoneMap {
            table,
            slope,
            offset,
        };
        let n = f.table.len();
        if slope == 0 || (0..n).any(|i| f.apply(i) >= f.apply(i + 1)) {
            return Err(RamseyError::NotMonotone);
        }
        Ok(f)
    }

    pub fn linear(slope: usize, offset: usize) -> Result<Self, RamseyError> {
        Self::new(Vec::new(), slope, offset)
    }

    pub fn apply(&self, i: usize) -> usize {
        self.table
            .get(i)
            .copied()
            .unwrap_or(self.slope * i + self.offset)
    }

    /// The indicator of `{f(i) : i >= n}` as a point.
    pub fn range_indicator(&self, n: usize) -> Point {
        let start = n.max(self.table.len());
        let edge = self.slope * start + self.offset;
        let mut prefix = vec![false; edge];
        for i in n..start {
            prefix[self.table[i]] = true;
        }
        let mut period = vec![false; self.slope];
        period[0] = true;
        Point::new(prefix, period).expect("slope is positive")
    }
}

/// `f(p)`: `q1` is the union of the blocks `p_{f(i)}`, `q0` the rest.
pub fn coarsen_f(p: &FinPartition, f: &MonotoneMap) -> Result<FinPartition, RamseyError> {
    finite_modification(p, f, 0)
}

/// The n-th finite modification of `f(p)`: `q1` takes only the blocks
/// `p_{f(i)}` with `i >= n`.
pub fn finite_modification(
    p: &FinPartition,
    f: &MonotoneMap,
    n: usize,
) -> Result<FinPartition, RamseyError> {
    if p.block_count() != BlockCount::Infinite {
        return Err(RamseyError::FinitelyManyBlocks);
    }
    p.coarsen_by_indicator(&f.range_indicator(n))
}

/// The 2-block coarsenings of `p` whose merge indicator fits in `budget`
/// bits of prefix plus period, each with that indicator, without
/// duplicates. A partition with k blocks yields all of its coarsenings.
pub fn coarsenings_2(p: &FinPartition, budget: usize) -> Vec<(FinPartition, Point)> {
    let indicators: Vec<Point> = match p.block_count() {
        BlockCount::Finite(k) => (0..1u64 << k)
            .map(|mask| {
                let bits: Vec<bool> = (0..k).map(|j| (mask >> j) & 1 == 1).collect();
                Point::new(bits, vec![false]).expect("nonempty period")
            })
            .collect(),
        BlockCount::Infinite => Point::enumerate(budget),
    };
    let mut out: Vec<(FinPartition, Point)> = Vec::new();
    for chi in indicators {
        if let Ok(q) = p.coarsen_by_indicator(&chi) {
            if !out.iter().any(|(r, _)| *r == q) {
                out.push((q, chi));
            }
        }
    }
    out
}

/// A fixed list of partitions with infinitely many blocks: varying
/// merged prefixes in front of intervals or alternating pairs.
pub fn sample_partitions(count: usize) -> Vec<FinPartition> {
    (0..count)
        .map(|i| {
            let table = vec![0; i % 3];
            let width = 1 + (i / 3) % 3;
            let pattern = if i % 2 == 0 {
                vec![0; width]
            } else {
                (0..2 * width).map(|j| j % 2).collect()
            };
            FinPartition::new(table, Eventual::Linear(pattern)).expect("nonempty pattern")
        })
        .collect()
}

/// The mock dominating map of a stage.
pub fn stage_map(stage: u64) -> MonotoneMap {
    let s = stage as usize;
    MonotoneMap::linear(s + 2, s + 1).expect("slope at least 2")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryEntry {
    pub id: String,
    pub stage: u64,
    pub index: u64,
    /// Finite-modification indices and coarsenings colored 0 and 1.
    pub q: [(usize, FinPartition); 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryReport {
    pub entries: Vec<AdversaryEntry>,
    pub monochromatic: usize,
    pub all_distinct: bool,
}

/// For each registered partition, in stage order, picks the first two
/// finite modifications of `f_stage(p)` not used before and colors them 0
/// and 1.
pub fn adversary_coloring(
    r: &StageRegistry,
    ps: &[(String, FinPartition)],
) -> Result<AdversaryReport, RamseyError> {
    let mut order = Vec::with_capacity(ps.len());
    for (id, p) in ps {
        let (stage, index) = r
            .get(id)
            .ok_or_else(|| StageError::Unregistered(id.clone()))?;
        order.push((stage, index, id, p));
    }
    order.sort_by_key(|&(s, i, _, _)| (s, i));
    let mut used: Vec<FinPartition> = Vec::new();
    let mut entries = Vec::new();
    for (stage, index, id, p) in order {
        let f = stage_map(stage);
        let mut picks = Vec::with_capacity(2);
        let mut n = 0;
        while picks.len() < 2 {
            let q = finite_modification(p, &f, n)?;
            if !used.contains(&q) {
                used.push(q.clone());
                picks.push((n, q));
            }
            n += 1;
        }
        let q1 = picks.pop().expect("two picks");
        let q0 = picks.pop().expect("two picks");
        entries.push(AdversaryEntry {
            id: id.clone(),
            stage,
            index,
            q: [q0, q1],
        });
    }
    // colors are 0 and 1 by position; a p is monochromatic only if its two
    // picks coincide or fail to coarsen it
    let monochromatic = entries
        .iter()
        .filter(|e| {
            let p = &ps.iter().find(|(id, _)| *id == e.id).expect("entry from ps").1;
            e.q[0].1 == e.q[1].1 || !p.is_refined_by(&e.q[0].1) || !p.is_refined_by(&e.q[1].1)
        })
        .count();
    let all_distinct = used
        .iter()
        .enumerate()
        .all(|(i, a)| used[i + 1..].iter().all(|b| a != b));
    Ok(AdversaryReport {
        entries,
        monochromatic,
        all_distinct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(a: usize, b: usize) -> MonotoneMap {
        MonotoneMap::linear(a, b).unwrap()
    }

    fn is_even_split(q: &FinPartition, evens_from: usize) -> bool {
        (0..200).all(|n| {
            let in_q1 = n % 2 == 0 && n >= evens_from;
            (q.block_of(n) == q.block_of(evens_from)) == in_q1
        })
    }

    #[test]
    fn evens_and_odds() {
        let p = FinPartition::singletons();
        let q = coarsen_f(&p, &lin(2, 0)).unwrap();
        assert!(is_even_split(&q, 0));
        assert_eq!(q.to_string(), "table: ; rule: periodic(0,2)");
        assert_eq!(coarsen_f(&p, &lin(1, 0)), Err(RamseyError::EmptyBlock));
        let q1 = finite_modification(&p, &lin(2, 0), 1).unwrap();
        assert!(is_even_split(&q1, 2));
        assert_eq!(q1.block_of(0), q1.block_of(1));
        assert_eq!(finite_modification(&p, &lin(2, 0), 0).unwrap(), q);
    }

    #[test]
    fn modifications_are_distinct() {
        let p = FinPartition::intervals(3);
        let f = lin(3, 1);
        let qs: Vec<FinPartition> = (0..=10).map(|n| finite_modification(&p, &f, n).unwrap()).collect();
        for i in 0..qs.len() {
            for j in i + 1..qs.len() {
                assert_ne!(qs[i], qs[j], "{i} {j}");
            }
            assert!(p.is_refined_by(&qs[i]));
        }
    }

    #[test]
    fn monotone_maps_are_checked() {
        assert_eq!(MonotoneMap::new(vec![0, 0], 2, 5), Err(RamseyError::NotMonotone));
        assert_eq!(MonotoneMap::new(vec![0, 9], 2, 0), Err(RamseyError::NotMonotone));
        assert_eq!(MonotoneMap::linear(0, 3), Err(RamseyError::NotMonotone));
        let f = MonotoneMap::new(vec![0, 3], 2, 1).unwrap();
        assert_eq!((0..4).map(|i| f.apply(i)).collect::<Vec<_>>(), vec![0, 3, 5, 7]);
    }

    #[test]
    fn three_blocks_have_three_coarsenings() {
        let p = FinPartition::periodic(vec![], 0, 3).unwrap();
        let cs = coarsenings_2(&p, 0);
        assert_eq!(cs.len(), 3);
        for (q, _) in &cs {
            assert!(p.is_refined_by(q));
            assert_eq!(q.block_count(), BlockCount::Finite(2));
        }
    }

    #[test]
    fn coarsen_f_is_enumerated() {
        let p = FinPartition::singletons();
        let cs = coarsenings_2(&p, 2);
        let q = coarsen_f(&p, &lin(2, 0)).unwrap();
        assert!(cs.iter().any(|(r, _)| *r == q));
    }

    #[test]
    fn canonical_forms_and_text() {
        let p: FinPartition = "table: 0->5,1->7; rule: tail(7)".parse().unwrap();
        assert_eq!(p.to_string(), "table: 0->0; rule: tail(1)");
        let q: FinPartition = "table: 0→0,1→1,2→2; rule: periodic(1,2)".parse().unwrap();
        assert_eq!(q.to_string(), "table: 0->0; rule: periodic(1,2)");
        for s in [
            "table: ; rule: linear(0)",
            "table: 0->0,1->1; rule: linear(0,1,0)",
            "table: 0->0; rule: cycle(1,0,2)",
        ] {
            let p: FinPartition = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<FinPartition>().unwrap(), p);
        }
        assert!("table: 1->0; rule: tail(0)".parse::<FinPartition>().is_err());
        assert!("rule: tail(0)".parse::<FinPartition>().is_err());
        assert!("table: ; rule: cycle()".parse::<FinPartition>().is_err());
    }

    #[test]
    fn adversary_single() {
        let mut r = StageRegistry::new();
        r.register("p", 0, 0).unwrap();
        let rep = adversary_coloring(&r, &[("p".into(), FinPartition::singletons())]).unwrap();
        assert_eq!(rep.entries.len(), 1);
        assert_eq!(rep.monochromatic, 0);
        assert!(rep.all_distinct);
        assert!(matches!(
            adversary_coloring(&StageRegistry::new(), &[("p".into(), FinPartition::singletons())]),
            Err(RamseyError::Registry(StageError::Unregistered(_)))
        ));
    }
}
