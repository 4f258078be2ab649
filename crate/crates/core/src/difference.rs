//! Difference families over small abelian groups (cyclic first) and their
//! development into BIBDs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::design::{verify_pbd, BlockSizeSet, Design};
use crate::error::{Error, Result};

/// A finite abelian group `Z_{n_1} x ... x Z_{n_r}`, elements encoded as
/// integers in mixed radix (first factor most significant).
#[derive(Debug, Clone)]
pub struct AbelianGroup {
    moduli: Vec<usize>,
    order: usize,
    add: Vec<usize>,
    neg: Vec<usize>,
}

impl AbelianGroup {
    pub fn new(moduli: &[usize]) -> Result<Self> {
        if moduli.is_empty() || moduli.iter().any(|&n| n < 1) {
            return Err(Error::InvalidFamily(format!("bad group moduli {moduli:?}")));
        }
        let order: usize = moduli.iter().product();
        let digits = |mut x: usize| -> Vec<usize> {
            let mut d = vec![0; moduli.len()];
            for (slot, &n) in d.iter_mut().zip(moduli).rev() {
                *slot = x % n;
                x /= n;
            }
            d
        };
        let encode = |d: &[usize]| d.iter().zip(moduli).fold(0, |acc, (&x, &n)| acc * n + x);
        let elems: Vec<Vec<usize>> = (0..order).map(digits).collect();
        let mut add = vec![0; order * order];
        let mut neg = vec![0; order];
        for a in 0..order {
            let na: Vec<usize> = elems[a].iter().zip(moduli).map(|(&x, &n)| (n - x) % n).collect();
            neg[a] = encode(&na);
            for b in 0..order {
                let s: Vec<usize> = elems[a]
                    .iter()
                    .zip(&elems[b])
                    .zip(moduli)
                    .map(|((&x, &y), &n)| (x + y) % n)
                    .collect();
                add[a * order + b] = encode(&s);
            }
        }
        Ok(AbelianGroup {
            moduli: moduli.to_vec(),
            order,
            add,
            neg,
        })
    }

    pub fn cyclic(v: usize) -> Result<Self> {
        Self::new(&[v])
    }

    pub fn moduli(&self) -> &[usize] {
        &self.moduli
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.order + b]
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        self.neg[a]
    }

    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg[b])
    }

    /// Smallest subgroup containing `gens`.
    fn span(&self, gens: &[usize]) -> Vec<usize> {
        let mut members = vec![false; self.order];
        members[0] = true;
        let mut list = vec![0];
        let mut i = 0;
        while i < list.len() {
            let x = list[i];
            for &g in gens {
                let y = self.add(x, g);
                if !members[y] {
                    members[y] = true;
                    list.push(y);
                }
            }
            i += 1;
        }
        list.sort_unstable();
        list
    }

    /// A subgroup of order `k`, grown greedily from the smallest elements.
    fn subgroup_of_order(&self, k: usize) -> Option<Vec<usize>> {
        if !self.order.is_multiple_of(k) {
            return None;
        }
        let mut gens = Vec::new();
        let mut current = vec![0];
        for x in 1..self.order {
            if current.len() == k {
                break;
            }
            if current.binary_search(&x).is_ok() {
                continue;
            }
            gens.push(x);
            let grown = self.span(&gens);
            if grown.len() <= k && k.is_multiple_of(grown.len()) {
                current = grown;
            } else {
                gens.pop();
            }
        }
        (current.len() == k).then_some(current)
    }
}

/// Invariant-factor decompositions `n_1 | n_2 | ... | n_r` of every abelian
/// group of order `v`, cyclic group first.
pub fn abelian_groups_of_order(v: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: usize, out: &mut Vec<Vec<usize>>) {
        if rest == 1 {
            out.push(prefix.clone());
            return;
        }
        let lower = prefix.last().copied().unwrap_or(1);
        for d in 2..=rest {
            if rest.is_multiple_of(d) && d % lower == 0 && (d == rest || (rest / d).is_multiple_of(d)) {
                prefix.push(d);
                rec(prefix, rest / d, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    if v >= 2 {
        rec(&mut Vec::new(), v, &mut out);
    }
    out.sort_by_key(|m| m.len());
    out
}

/// Base blocks over an abelian group of order `v` (Z_v unless `group` names
/// other invariant factors). `orbit_lengths[i]` is the number of distinct
/// translates of base block `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceFamily {
    pub v: usize,
    pub base_blocks: Vec<Vec<usize>>,
    pub orbit_lengths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Vec<usize>>,
}

impl DifferenceFamily {
    /// A cyclic family in which every base block has a full orbit.
    pub fn full(v: usize, base_blocks: Vec<Vec<usize>>) -> Self {
        let orbit_lengths = vec![v; base_blocks.len()];
        DifferenceFamily {
            v,
            base_blocks,
            orbit_lengths,
            group: None,
        }
    }

    pub fn group(&self) -> Result<AbelianGroup> {
        match &self.group {
            None => AbelianGroup::cyclic(self.v),
            Some(moduli) => {
                let g = AbelianGroup::new(moduli)?;
                if g.order() != self.v {
                    return Err(Error::InvalidFamily(format!(
                        "group {moduli:?} has order {}, not {}",
                        g.order(),
                        self.v
                    )));
                }
                Ok(g)
            }
        }
    }
}

/// Develops every base block through its distinct translates and verifies
/// the result as a PBD on the group's `v` elements.
pub fn develop_difference_family(df: &DifferenceFamily) -> Result<Design> {
    let v = df.v;
    if v < 2 {
        return Err(Error::InvalidFamily(format!("modulus {v} is below 2")));
    }
    if df.base_blocks.len() != df.orbit_lengths.len() {
        return Err(Error::InvalidFamily(
            "base_blocks and orbit_lengths differ in length".into(),
        ));
    }
    let group = df.group()?;
    let mut blocks = Vec::new();
    for (base, &len) in df.base_blocks.iter().zip(&df.orbit_lengths) {
        let mut sorted = base.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != base.len() || sorted.iter().any(|&x| x >= v) {
            return Err(Error::InvalidFamily(format!("{base:?} is not a subset of the group")));
        }
        let mut orbit = BTreeSet::new();
        for g in 0..v {
            let mut b: Vec<usize> = base.iter().map(|&x| group.add(x, g)).collect();
            b.sort_unstable();
            orbit.insert(b);
        }
        if orbit.len() != len {
            return Err(Error::InvalidFamily(format!(
                "{base:?} has {} distinct translates, orbit length says {len}",
                orbit.len()
            )));
        }
        blocks.extend(orbit);
    }
    let sizes =
        BlockSizeSet::new(df.base_blocks.iter().map(Vec::len)).map_err(|e| Error::InvalidFamily(e.to_string()))?;
    let design = Design::pbd(v, blocks)?
        .with_meta("construction", "difference_family")
        .with_meta("family", serde_json::to_value(df).expect("plain data"));
    let report = verify_pbd(&design, &sizes);
    if !report.passed() {
        return Err(Error::InvalidFamily(format!("development is not a PBD: {report}")));
    }
    Ok(design)
}

/// Number of full orbits, and whether one short orbit (a subgroup of order
/// `k`) is needed.
fn orbit_plan(v: usize, k: usize) -> Result<(bool, usize)> {
    if k < 2 || v < k {
        return Err(Error::Infeasible { v, k });
    }
    let per_block = k * (k - 1);
    if (v - 1).is_multiple_of(per_block) {
        return Ok((false, (v - 1) / per_block));
    }
    if v.is_multiple_of(k) && (v - k).is_multiple_of(per_block) {
        return Ok((true, (v - k) / per_block));
    }
    Err(Error::Infeasible { v, k })
}

struct Search<'a> {
    group: &'a AbelianGroup,
    k: usize,
    covered: Vec<bool>,
    blocks: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// Tries to add `e` to `block`; marks its new differences on success.
    fn try_add(&mut self, block: &[usize], e: usize) -> bool {
        let mut marked = Vec::with_capacity(2 * block.len());
        for &x in block {
            let d = self.group.sub(e, x);
            let nd = self.group.neg(d);
            if d == nd || self.covered[d] || self.covered[nd] {
                for m in marked {
                    self.covered[m] = false;
                }
                return false;
            }
            self.covered[d] = true;
            self.covered[nd] = true;
            marked.push(d);
            marked.push(nd);
        }
        true
    }

    fn remove(&mut self, block: &[usize], e: usize) {
        for &x in block {
            let d = self.group.sub(e, x);
            self.covered[d] = false;
            self.covered[self.group.neg(d)] = false;
        }
    }

    fn fill(&mut self, remaining: usize) -> bool {
        if remaining == 0 {
            return true;
        }
        let v = self.group.order();
        let Some(d) = (1..v).find(|&d| !self.covered[d]) else {
            return false;
        };
        // some translate of the block covering difference d contains {0, d}
        let mut block = vec![0];
        if !self.try_add(&block, d) {
            return false;
        }
        block.push(d);
        let found = self.extend(&mut block, 1, remaining);
        if !found {
            self.remove(&block[..1], d);
        }
        found
    }

    fn extend(&mut self, block: &mut Vec<usize>, min: usize, remaining: usize) -> bool {
        if block.len() == self.k {
            let mut sorted = block.clone();
            sorted.sort_unstable();
            self.blocks.push(sorted);
            if self.fill(remaining - 1) {
                return true;
            }
            self.blocks.pop();
            return false;
        }
        let v = self.group.order();
        let need = self.k - block.len();
        for e in min..v {
            if v - e < need {
                break;
            }
            if block.contains(&e) || !self.try_add(block, e) {
                continue;
            }
            block.push(e);
            if self.extend(block, e + 1, remaining) {
                return true;
            }
            block.pop();
            self.remove(block, e);
        }
        false
    }
}

/// Deterministic backtracking search for a (v,k,1) difference family over
/// one given group.
///
/// Uses only full orbits when `k(k-1) | v-1`; otherwise, when `k | v` and
/// `k(k-1) | v-k`, a subgroup of order `k` is taken as the one short-orbit
/// base block. Each full base block is normalised to contain `0` and the
/// smallest difference not yet covered; the first family in that search
/// order wins.
pub fn search_difference_family_in(group: &AbelianGroup, k: usize) -> Result<DifferenceFamily> {
    let v = group.order();
    let (short, full) = orbit_plan(v, k)?;
    let mut search = Search {
        group,
        k,
        covered: vec![false; v],
        blocks: Vec::new(),
    };
    let mut base_blocks = Vec::new();
    let mut orbit_lengths = Vec::new();
    if short {
        let sub = group.subgroup_of_order(k).ok_or(Error::NotFound { v, k })?;
        for &a in &sub {
            for &b in &sub {
                if a != b {
                    search.covered[group.sub(a, b)] = true;
                }
            }
        }
        base_blocks.push(sub);
        orbit_lengths.push(v / k);
    }
    if !search.fill(full) {
        return Err(Error::NotFound { v, k });
    }
    orbit_lengths.extend(std::iter::repeat_n(v, search.blocks.len()));
    base_blocks.append(&mut search.blocks);
    Ok(DifferenceFamily {
        v,
        base_blocks,
        orbit_lengths,
        group: (group.moduli().len() > 1).then(|| group.moduli().to_vec()),
    })
}

/// [`search_difference_family_in`] over Z_v, then over the other abelian
/// groups of order `v` in [`abelian_groups_of_order`] order.
pub fn search_difference_family(v: usize, k: usize) -> Result<DifferenceFamily> {
    orbit_plan(v, k)?;
    for moduli in abelian_groups_of_order(v) {
        let group = AbelianGroup::new(&moduli)?;
        match search_difference_family_in(&group, k) {
            Ok(df) => return Ok(df),
            Err(Error::NotFound { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NotFound { v, k })
}
