//! Sets of pairwise-disjoint blocks: exact maximum search, greedy maximal
//! selection, the counting lower bound for transversal designs, and the
//! construction of a TD(l,u) with `u` disjoint blocks from a TD(l+1,u).

use serde::Serialize;
use serde_json::{json, Map};

use crate::design::{as_td, Design};
use crate::error::{Error, Result};

/// Default block-count limit for [`find_disjoint_blocks_exact`].
pub const DEFAULT_EXACT_CAP: usize = 250;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisjointBlockSet {
    /// Block indices, ascending.
    pub blocks: Vec<usize>,
    /// Whether the set is known to be of maximum size.
    pub exact: bool,
}

impl DisjointBlockSet {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn from_points(n: usize, pts: &[usize]) -> Self {
        let mut b = Self::new(n);
        for &p in pts {
            b.0[p / 64] |= 1 << (p % 64);
        }
        b
    }

    fn disjoint(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == 0)
    }

    fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct Exact<'a> {
    bits: &'a [Bits],
    sizes: Vec<usize>,
    n: usize,
    chosen: Vec<usize>,
    best: Vec<usize>,
    ceiling: usize,
}

impl Exact<'_> {
    fn bound(&self, cands: &[usize]) -> usize {
        if cands.is_empty() {
            return 0;
        }
        let mut reach = Bits::new(self.n);
        let mut min_size = usize::MAX;
        for &c in cands {
            reach.union_with(&self.bits[c]);
            min_size = min_size.min(self.sizes[c]);
        }
        cands.len().min(reach.count() / min_size.max(1))
    }

    fn branch(&mut self, cands: &[usize]) {
        if self.chosen.len() > self.best.len() {
            self.best = self.chosen.clone();
        }
        if self.best.len() >= self.ceiling {
            return;
        }
        if self.chosen.len() + self.bound(cands) <= self.best.len() {
            return;
        }
        for (pos, &c) in cands.iter().enumerate() {
            // the blocks at pos.. bound everything reachable from here on
            if self.chosen.len() + self.bound(&cands[pos..]) <= self.best.len() {
                return;
            }
            let next: Vec<usize> = cands[pos + 1..]
                .iter()
                .copied()
                .filter(|&o| self.bits[c].disjoint(&self.bits[o]))
                .collect();
            self.chosen.push(c);
            self.branch(&next);
            self.chosen.pop();
            if self.best.len() >= self.ceiling {
                return;
            }
        }
    }
}

/// Maximum set of pairwise-disjoint blocks by branch and bound, branching
/// on blocks in index order. Designs with more than `cap` blocks are
/// refused.
pub fn find_disjoint_blocks_exact(d: &Design, cap: usize) -> Result<DisjointBlockSet> {
    let nb = d.blocks().len();
    if nb > cap {
        return Err(Error::SizeLimitExceeded { blocks: nb, cap });
    }
    if nb == 0 {
        return Ok(DisjointBlockSet {
            blocks: Vec::new(),
            exact: true,
        });
    }
    let bits: Vec<Bits> = d.blocks().iter().map(|b| Bits::from_points(d.n(), b)).collect();
    let sizes: Vec<usize> = d.blocks().iter().map(Vec::len).collect();
    let min_size = *sizes.iter().min().unwrap();
    let mut search = Exact {
        bits: &bits,
        sizes,
        n: d.n(),
        chosen: Vec::new(),
        best: Vec::new(),
        ceiling: (d.n() / min_size.max(1)).min(nb),
    };
    let all: Vec<usize> = (0..nb).collect();
    search.branch(&all);
    Ok(DisjointBlockSet {
        blocks: search.best,
        exact: true,
    })
}

/// Maximal (not necessarily maximum) disjoint set: scan blocks in index
/// order and keep each one that misses everything kept so far.
pub fn find_disjoint_blocks_greedy(d: &Design) -> DisjointBlockSet {
    let mut used = vec![false; d.n()];
    let mut blocks = Vec::new();
    for (i, b) in d.blocks().iter().enumerate() {
        if b.iter().all(|&p| !used[p]) {
            for &p in b {
                used[p] = true;
            }
            blocks.push(i);
        }
    }
    DisjointBlockSet { blocks, exact: false }
}

/// `ceil(u^2 / (l(u-1) + 1))`, the number of disjoint blocks every TD(l,u)
/// is guaranteed to contain. `None` unless `l, u >= 2`.
pub fn lemma4_bound(ell: usize, u: usize) -> Option<usize> {
    if ell < 2 || u < 2 {
        return None;
    }
    Some((u * u).div_ceil(ell * (u - 1) + 1))
}

/// Deletes the last group of a TD(l+1,u). The `u` blocks that passed
/// through the first point of that group become pairwise disjoint blocks of
/// the resulting TD(l,u).
pub fn parallel_class_from_td(td: &Design) -> Result<(Design, DisjointBlockSet)> {
    let (k, u) = as_td(td).ok_or_else(|| Error::InvalidInput("input is not a verified TD".into()))?;
    if k < 3 {
        return Err(Error::InvalidInput(format!(
            "TD({k},{u}) has too few groups to shorten"
        )));
    }
    let last = td.groups().last().unwrap();
    let pivot = last[0];
    let mut keep = vec![true; td.n()];
    for &x in last {
        keep[x] = false;
    }
    let mut label = vec![usize::MAX; td.n()];
    let mut next = 0;
    for x in 0..td.n() {
        if keep[x] {
            label[x] = next;
            next += 1;
        }
    }
    let shrink = |b: &Vec<usize>| b.iter().filter(|&&x| keep[x]).map(|&x| label[x]).collect::<Vec<_>>();
    let groups = td.groups()[..k - 1].iter().map(shrink).collect();
    let blocks = td.blocks().iter().map(shrink).collect();
    let mut meta = Map::new();
    meta.insert("construction".into(), json!("td_shortened"));
    meta.insert("removed_group".into(), json!(last));
    let (design, remap) = Design::from_parts(next, groups, blocks, Vec::new(), meta)?;
    let mut disjoint: Vec<usize> = td.blocks_through(pivot).iter().map(|&b| remap[b]).collect();
    disjoint.sort_unstable();
    Ok((
        design,
        DisjointBlockSet {
            blocks: disjoint,
            exact: true,
        },
    ))
}
