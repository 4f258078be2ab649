//! The universal design object and its axiomatic verifier.
//!
//! A [`Design`] is a point set `0..n`, a partition of the points into groups
//! and a family of blocks. GDDs, PBDs and TDs are all stored this way; a PBD
//! simply has every group a singleton. The verifiers in this module count
//! every pair of points explicitly and are used as the oracle for all the
//! constructions elsewhere in the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Points, groups and blocks, stored canonically.
///
/// Groups and blocks are sorted internally and then lexicographically.
/// Blocks flagged as distinguished are exempt from the block-size check
/// (this is how a PBD carries its one oversized or size-one block `B0`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    n: usize,
    groups: Vec<Vec<usize>>,
    blocks: Vec<Vec<usize>>,
    distinguished: Vec<usize>,
    meta: Map<String, Value>,
}

impl Design {
    /// Builds a design, checking that the groups partition `0..n` and every
    /// block is a nonempty set of valid points.
    pub fn new(n: usize, groups: Vec<Vec<usize>>, blocks: Vec<Vec<usize>>) -> Result<Self> {
        Ok(Self::from_parts(n, groups, blocks, Vec::new(), Map::new())?.0)
    }

    /// A design with singleton groups.
    pub fn pbd(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(n, (0..n).map(|p| vec![p]).collect(), blocks)
    }

    /// Full constructor. Returns the design together with the map from the
    /// caller's block indices to canonical block indices.
    pub fn from_parts(
        n: usize,
        mut groups: Vec<Vec<usize>>,
        mut blocks: Vec<Vec<usize>>,
        distinguished: Vec<usize>,
        meta: Map<String, Value>,
    ) -> Result<(Self, Vec<usize>)> {
        let mut seen = vec![false; n];
        for g in groups.iter_mut() {
            if g.is_empty() {
                return Err(Error::schema("groups", "empty group"));
            }
            g.sort_unstable();
            for &p in g.iter() {
                if p >= n {
                    return Err(Error::schema("groups", format!("point {p} out of range 0..{n}")));
                }
                if seen[p] {
                    return Err(Error::schema("groups", format!("point {p} lies in two groups")));
                }
                seen[p] = true;
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::schema("groups", format!("point {p} is in no group")));
        }
        groups.sort();

        for (i, b) in blocks.iter_mut().enumerate() {
            if b.is_empty() {
                return Err(Error::schema("blocks", format!("block {i} is empty")));
            }
            b.sort_unstable();
            if let Some(&p) = b.iter().find(|&&p| p >= n) {
                return Err(Error::schema(
                    "blocks",
                    format!("block {i} references point {p} outside 0..{n}"),
                ));
            }
            if b.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::schema("blocks", format!("block {i} repeats a point")));
            }
        }
        for &d in &distinguished {
            if d >= blocks.len() {
                return Err(Error::schema("distinguished", format!("block index {d} out of range")));
            }
        }

        let mut order: Vec<usize> = (0..blocks.len()).collect();
        order.sort_by(|&a, &b| blocks[a].cmp(&blocks[b]).then(a.cmp(&b)));
        let mut remap = vec![0; blocks.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut slots: Vec<Option<Vec<usize>>> = blocks.into_iter().map(Some).collect();
        let blocks: Vec<Vec<usize>> = order.iter().map(|&old| slots[old].take().unwrap()).collect();
        let mut distinguished: Vec<usize> = distinguished.iter().map(|&d| remap[d]).collect();
        distinguished.sort_unstable();
        distinguished.dedup();

        Ok((
            Design {
                n,
                groups,
                blocks,
                distinguished,
                meta,
            },
            remap,
        ))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn distinguished(&self) -> &[usize] {
        &self.distinguished
    }

    pub fn is_distinguished(&self, block: usize) -> bool {
        self.distinguished.binary_search(&block).is_ok()
    }

    pub fn meta(&self) -> &Map<String, Value> {
        &self.meta
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub(crate) fn meta_mut(&mut self) -> &mut Map<String, Value> {
        &mut self.meta
    }

    /// `group_of()[p]` is the index of the group containing `p`.
    pub fn group_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (gi, g) in self.groups.iter().enumerate() {
            for &p in g {
                out[p] = gi;
            }
        }
        out
    }

    /// Index of a block given as a sorted point list.
    pub fn block_index(&self, block: &[usize]) -> Option<usize> {
        self.blocks.binary_search_by(|b| b.as_slice().cmp(block)).ok()
    }

    /// Indices of blocks containing `p`.
    pub fn blocks_through(&self, p: usize) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.binary_search(&p).is_ok())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn block_sizes(&self) -> BTreeSet<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn has_singleton_groups(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }
}

/// Multiset of group sizes, rendered in exponential notation with sizes in
/// decreasing order, e.g. `"29^1 5^44"`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GddType(BTreeMap<usize, usize>);

impl GddType {
    pub fn from_sizes(sizes: impl IntoIterator<Item = usize>) -> Self {
        let mut map = BTreeMap::new();
        for s in sizes {
            *map.entry(s).or_insert(0) += 1;
        }
        GddType(map)
    }

    /// Sizes with multiplicities, largest size first.
    pub fn parts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().rev().map(|(&s, &c)| (s, c))
    }

    pub fn multiplicity(&self, size: usize) -> usize {
        self.0.get(&size).copied().unwrap_or(0)
    }

    pub fn group_count(&self) -> usize {
        self.0.values().sum()
    }

    pub fn point_count(&self) -> usize {
        self.0.iter().map(|(s, c)| s * c).sum()
    }

    /// `Some((size, count))` when every group has the same size.
    pub fn uniform(&self) -> Option<(usize, usize)> {
        if self.0.len() == 1 {
            self.0.iter().next().map(|(&s, &c)| (s, c))
        } else {
            None
        }
    }
}

impl fmt::Display for GddType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, c) in self.parts() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{s}^{c}")?;
        }
        Ok(())
    }
}

impl FromStr for GddType {
    type Err = Error;

    /// Accepts any order and repeated sizes: `"5^44 5^1"` parses to `5^45`.
    fn from_str(s: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for tok in s.split_whitespace() {
            let (size, count) = match tok.split_once('^') {
                Some((a, b)) => (a, b),
                None => (tok, "1"),
            };
            let size: usize = size
                .parse()
                .map_err(|_| Error::Parse(format!("bad group size in type token `{tok}`")))?;
            let count: usize = count
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in type token `{tok}`")))?;
            if size == 0 {
                return Err(Error::Parse("group sizes must be positive".into()));
            }
            if count > 0 {
                *map.entry(size).or_insert(0) += count;
            }
        }
        Ok(GddType(map))
    }
}

impl Serialize for GddType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The set `K` of admissible block sizes; every element is at least 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockSizeSet(BTreeSet<usize>);

impl BlockSizeSet {
    pub fn new(sizes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = sizes.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidInput("block size set is empty".into()));
        }
        if let Some(&s) = set.iter().find(|&&s| s < 2) {
            return Err(Error::InvalidInput(format!("block size {s} is below 2")));
        }
        Ok(BlockSizeSet(set))
    }

    pub fn single(k: usize) -> Result<Self> {
        Self::new([k])
    }

    pub fn contains(&self, size: usize) -> bool {
        self.0.contains(&size)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &BlockSizeSet) -> BlockSizeSet {
        BlockSizeSet(self.0.union(&other.0).copied().collect())
    }
}

impl fmt::Display for BlockSizeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for BlockSizeSet {
    type Err = Error;

    /// Comma separated, e.g. `"4,5"`.
    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad block size `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// A pair that must be covered lies in no block.
    PairUncovered,
    /// A pair lies in more than one block.
    PairRepeated,
    /// A block meets some group in two or more points.
    GroupMeetsBlockTwice,
    /// A block contains two points of the same group.
    WithinGroupPair,
    BlockSizeNotInK,
    /// A PBD must have singleton groups.
    GroupNotSingleton,
    /// Two blocks of a claimed parallel class share a point.
    BlocksIntersect,
    /// A point is missed by a claimed parallel class.
    PointUncovered,
    BlockIndexOutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Pair(usize, usize),
    Block(usize),
    Blocks(usize, usize),
    Group(usize),
    Point(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Witness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of a verification. At most [`VerificationReport::MAX_RECORDED`]
/// violations are kept; `violation_count` is the full total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub const MAX_RECORDED: usize = 64;

    fn collect() -> ReportBuilder {
        ReportBuilder::default()
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    pub fn has(&self, axiom: Axiom) -> bool {
        self.violations.iter().any(|v| v.axiom == axiom)
    }

    /// Converts a failing report into [`Error::VerificationFailed`].
    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::VerificationFailed(Box::new(self)))
        }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first() {
            None => f.write_str("pass"),
            Some(v) => write!(
                f,
                "fail ({} violations; first: {:?} at {:?})",
                self.violation_count, v.axiom, v.witness
            ),
        }
    }
}

#[derive(Default)]
struct ReportBuilder {
    count: usize,
    violations: Vec<Violation>,
}

impl ReportBuilder {
    fn push(&mut self, axiom: Axiom, witness: Witness) {
        self.count += 1;
        if self.violations.len() < VerificationReport::MAX_RECORDED {
            self.violations.push(Violation { axiom, witness });
        }
    }

    fn finish(self) -> VerificationReport {
        VerificationReport {
            verdict: if self.count == 0 { Verdict::Pass } else { Verdict::Fail },
            violation_count: self.count,
            violations: self.violations,
        }
    }
}

/// Triangular pair counter over `0..n`, saturating at 255.
struct PairCounter {
    counts: Vec<u8>,
}

impl PairCounter {
    fn new(n: usize) -> Self {
        PairCounter {
            counts: vec![0; n * n.saturating_sub(1) / 2],
        }
    }

    #[inline]
    fn index(a: usize, b: usize) -> usize {
        debug_assert!(a < b);
        b * (b - 1) / 2 + a
    }

    #[inline]
    fn bump(&mut self, a: usize, b: usize) {
        let c = &mut self.counts[Self::index(a, b)];
        *c = c.saturating_add(1);
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> u8 {
        self.counts[Self::index(a, b)]
    }
}

enum SizeRule<'a> {
    In(&'a BlockSizeSet),
    AtLeastTwo,
}

impl SizeRule<'_> {
    fn admits(&self, size: usize) -> bool {
        match self {
            SizeRule::In(k) => k.contains(size),
            SizeRule::AtLeastTwo => size >= 2,
        }
    }
}

fn check_gdd(d: &Design, sizes: SizeRule<'_>, report: &mut ReportBuilder) {
    let group_of = d.group_of();
    let mut counter = PairCounter::new(d.n());
    let mut hit: Vec<usize> = Vec::new();

    for (bi, block) in d.blocks().iter().enumerate() {
        if !d.is_distinguished(bi) && !sizes.admits(block.len()) {
            report.push(Axiom::BlockSizeNotInK, Witness::Block(bi));
        }
        hit.clear();
        hit.extend(block.iter().map(|&p| group_of[p]));
        hit.sort_unstable();
        if hit.windows(2).any(|w| w[0] == w[1]) {
            report.push(Axiom::GroupMeetsBlockTwice, Witness::Block(bi));
        }
        for (i, &a) in block.iter().enumerate() {
            for &b in &block[i + 1..] {
                if group_of[a] == group_of[b] {
                    report.push(Axiom::WithinGroupPair, Witness::Pair(a, b));
                } else {
                    counter.bump(a, b);
                }
            }
        }
    }

    for b in 1..d.n() {
        for a in 0..b {
            if group_of[a] == group_of[b] {
                continue;
            }
            match counter.get(a, b) {
                0 => report.push(Axiom::PairUncovered, Witness::Pair(a, b)),
                1 => {}
                _ => report.push(Axiom::PairRepeated, Witness::Pair(a, b)),
            }
        }
    }
}

/// The group type of `d`.
pub fn compute_type(d: &Design) -> GddType {
    GddType::from_sizes(d.groups().iter().map(Vec::len))
}

/// Checks the K-GDD axioms by counting all `C(n,2)` pairs: every pair from
/// different groups lies in exactly one block, no block meets a group twice,
/// and every non-distinguished block has size in `k`.
pub fn verify_gdd(d: &Design, k: &BlockSizeSet) -> VerificationReport {
    let mut report = VerificationReport::collect();
    check_gdd(d, SizeRule::In(k), &mut report);
    report.finish()
}

/// [`verify_gdd`] with no restriction on block sizes beyond `>= 2`.
pub fn verify_gdd_structure(d: &Design) -> VerificationReport {
    let mut report = VerificationReport::collect();
    check_gdd(d, SizeRule::AtLeastTwo, &mut report);
    report.finish()
}

/// Checks the (v,K)-PBD axioms: singleton groups, every pair of points in
/// exactly one block, non-distinguished block sizes in `k`.
pub fn verify_pbd(d: &Design, k: &BlockSizeSet) -> VerificationReport {
    let mut report = VerificationReport::collect();
    for (gi, g) in d.groups().iter().enumerate() {
        if g.len() != 1 {
            report.push(Axiom::GroupNotSingleton, Witness::Group(gi));
        }
    }
    check_gdd(d, SizeRule::In(k), &mut report);
    report.finish()
}

/// Checks that the blocks at `class` are pairwise disjoint and cover every
/// point of `d`.
pub fn verify_parallel_class(d: &Design, class: &[usize]) -> VerificationReport {
    let mut report = VerificationReport::collect();
    let mut owner: Vec<Option<usize>> = vec![None; d.n()];
    for &bi in class {
        let Some(block) = d.blocks().get(bi) else {
            report.push(Axiom::BlockIndexOutOfRange, Witness::Block(bi));
            continue;
        };
        for &p in block {
            match owner[p] {
                Some(prev) => report.push(Axiom::BlocksIntersect, Witness::Blocks(prev, bi)),
                None => owner[p] = Some(bi),
            }
        }
    }
    for (p, o) in owner.iter().enumerate() {
        if o.is_none() {
            report.push(Axiom::PointUncovered, Witness::Point(p));
        }
    }
    report.finish()
}

/// `Some((k, m))` if `d` verifies as a TD(k,m): `k` groups of size `m` and
/// every block a transversal.
pub fn as_td(d: &Design) -> Option<(usize, usize)> {
    let (m, k) = compute_type(d).uniform()?;
    if k < 2 || d.blocks().len() != m * m || d.blocks().iter().any(|b| b.len() != k) {
        return None;
    }
    let kset = BlockSizeSet::single(k).ok()?;
    verify_gdd(d, &kset).passed().then_some((k, m))
}
