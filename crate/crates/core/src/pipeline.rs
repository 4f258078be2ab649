//! PBDs with an explicit parallel class, re-read as GDDs.
//!
//! Starting from a TD(l+1,m), truncate its last group to `t` points, weight
//! the first `l` groups by `u` and the last by `v`, and apply WFC with
//! TD(l,u) ingredients on blocks of size `l` and a K-GDD of type `u^l v^1`
//! on blocks of size `l+1`. The result is a K-GDD of type `(mu)^l (tv)^1`.
//! Filling each group of size `mu` with an `(mu+1,K)`-PBD through a new
//! point `inf` and closing the last group with `inf` as the block `B0`
//! yields a PBD on `mul + tv + 1` points.
//!
//! The parallel class comes from the deleted points of the truncated group:
//! each deleted point leaves a class of `m` disjoint blocks of size `l`.
//! With `alpha` disjoint blocks available in the TD(l,u), `ceil(u/alpha)`
//! such classes suffice; class `i` is inflated at every copy index in
//! `T_i`, the `i`-th run of at most `alpha` consecutive indices, and those
//! inflated blocks are prescribed inside the ingredients. Together with `B0`
//! they partition the points and become the groups of a K-GDD of type
//! `l^(mu) (tv+1)^1`.

use serde::Serialize;
use serde_json::json;

use crate::base::{build_affine_plane, build_projective_plane, build_td, delete_point, truncate_td};
use crate::design::{
    as_td, compute_type, verify_gdd, verify_parallel_class, verify_pbd, BlockSizeSet, Design, GddType,
};
use crate::difference::{develop_difference_family, search_difference_family};
use crate::disjoint::{find_disjoint_blocks_exact, find_disjoint_blocks_greedy, DEFAULT_EXACT_CAP};
use crate::error::{Error, Result};
use crate::gf::is_prime_power;
use crate::wfc::{
    apply_wfc_stipulated, DesignResolver, RuleSupplier, Stipulations, TdResolver, TypePattern, Weighting,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Theorem1Params {
    pub ell: usize,
    pub m: usize,
    pub u: usize,
    pub v: usize,
    pub t: usize,
    #[serde(rename = "K", serialize_with = "ser_k")]
    pub k: BlockSizeSet,
}

fn ser_k<S: serde::Serializer>(k: &BlockSizeSet, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(k.iter())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Theorem3Params {
    #[serde(flatten)]
    pub base: Theorem1Params,
    pub alpha: usize,
}

impl Theorem1Params {
    /// Number of deleted points whose classes are used.
    fn classes_needed(&self, alpha: usize) -> usize {
        self.u.div_ceil(alpha)
    }

    /// Checks the parameter constraints for `alpha` available disjoint blocks.
    pub fn check(&self, alpha: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::PreconditionViolated(msg));
        if self.ell < 2 || self.m == 0 || self.u == 0 || self.v == 0 || alpha == 0 {
            return bad("l >= 2 and m, u, v, alpha >= 1 are required".into());
        }
        if self.u > self.m {
            return bad(format!("u = {} exceeds m = {}", self.u, self.m));
        }
        if !self.k.contains(self.ell) {
            return bad(format!("l = {} is not in K = {{{}}}", self.ell, self.k));
        }
        let c = self.classes_needed(alpha);
        if self.t + c > self.m {
            return bad(format!(
                "t = {} exceeds m - ceil(u/alpha) = {}",
                self.t,
                self.m as isize - c as isize
            ));
        }
        Ok(())
    }

    /// Type `l^(mu) (tv+1)^1` of the final GDD.
    pub fn expected_type(&self) -> GddType {
        let mut sizes = vec![self.ell; self.m * self.u];
        sizes.push(self.t * self.v + 1);
        GddType::from_sizes(sizes)
    }
}

/// Ingredient roles, by their external names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    TdMaster,
    TdSmall,
    GddUv,
    PbdFill,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::TdMaster, Role::TdSmall, Role::GddUv, Role::PbdFill];

    pub fn name(self) -> &'static str {
        match self {
            Role::TdMaster => "td_master",
            Role::TdSmall => "td_small",
            Role::GddUv => "gdd_uv",
            Role::PbdFill => "pbd_fill",
        }
    }

    pub fn from_name(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name() == s)
    }
}

/// The four ingredient designs: TD(l+1,m), TD(l,u), K-GDD of type
/// `u^l v^1` and `(mu+1,K)`-PBD. `td_small_disjoint` optionally names
/// pairwise-disjoint blocks of `td_small` by index.
#[derive(Debug, Clone, Default)]
pub struct Ingredients {
    pub td_master: Option<Design>,
    pub td_small: Option<Design>,
    pub td_small_disjoint: Option<Vec<usize>>,
    pub gdd_uv: Option<Design>,
    pub pbd_fill: Option<Design>,
}

impl Ingredients {
    pub fn get(&self, role: Role) -> Option<&Design> {
        match role {
            Role::TdMaster => self.td_master.as_ref(),
            Role::TdSmall => self.td_small.as_ref(),
            Role::GddUv => self.gdd_uv.as_ref(),
            Role::PbdFill => self.pbd_fill.as_ref(),
        }
    }

    pub fn set(&mut self, role: Role, d: Design) {
        match role {
            Role::TdMaster => self.td_master = Some(d),
            Role::TdSmall => {
                self.td_small = Some(d);
                self.td_small_disjoint = None;
            }
            Role::GddUv => self.gdd_uv = Some(d),
            Role::PbdFill => self.pbd_fill = Some(d),
        }
    }

    /// Fills `role` from a direct construction if one applies to `p`.
    pub fn fill_builtin(&mut self, role: Role, p: &Theorem1Params) -> Result<()> {
        let missing = |what: String| Error::IngredientMissing(format!("{}: {what}", role.name()));
        match role {
            Role::TdMaster => {
                let td = build_td(p.ell + 1, p.m)
                    .map_err(|e| missing(format!("no built-in TD({},{}): {e}", p.ell + 1, p.m)))?;
                self.td_master = Some(td);
            }
            Role::TdSmall => {
                let (td, blocks) = TdResolver::td_with_disjoint(p.ell, p.u)
                    .map_err(|e| missing(format!("no built-in TD({},{}): {e}", p.ell, p.u)))?;
                let idx = blocks.iter().map(|b| td.block_index(b).unwrap()).collect();
                self.td_small = Some(td);
                self.td_small_disjoint = Some(idx);
            }
            Role::GddUv => {
                let d = if p.u == p.v && p.k.contains(p.ell + 1) && p.ell < p.u + 1 {
                    build_td(p.ell + 1, p.u).ok()
                } else if p.u == p.v && p.ell == p.u + 1 && is_prime_power(p.ell as u64) {
                    Some(delete_point(&build_affine_plane(p.ell)?.design, 0)?)
                } else {
                    None
                };
                self.gdd_uv =
                    Some(d.ok_or_else(|| missing(format!("no built-in K-GDD of type {}^{} {}^1", p.u, p.ell, p.v)))?);
            }
            Role::PbdFill => {
                let n = p.m * p.u + 1;
                let d = builtin_pbd(n, &p.k).ok_or_else(|| missing(format!("no built-in ({n},{{{}}})-PBD", p.k)))?;
                self.pbd_fill = Some(d);
            }
        }
        Ok(())
    }
}

/// A (n,k,1)-BIBD for some `k` in `K`: a projective or affine plane when the
/// parameters fit, otherwise a searched difference family.
fn builtin_pbd(n: usize, k: &BlockSizeSet) -> Option<Design> {
    let sizes: Vec<usize> = k.iter().collect();
    for &s in sizes.iter().rev() {
        let q = s - 1;
        if q * q + q + 1 == n && is_prime_power(q as u64) {
            return build_projective_plane(q).ok();
        }
        if s * s == n && is_prime_power(s as u64) {
            return build_affine_plane(s).ok().map(|a| a.design);
        }
    }
    sizes
        .iter()
        .rev()
        .find_map(|&s| search_difference_family(n, s).ok())
        .and_then(|df| develop_difference_family(&df).ok())
}

/// Output of a pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// The WFC output, a K-GDD of type `(mu)^l (tv)^1`.
    pub wfc: Design,
    /// PBD on `mul + tv + 1` points; `B0` is its only distinguished block.
    pub pbd: Design,
    pub infinity: usize,
    pub b0: usize,
    /// Block indices of `pbd` forming the parallel class, ascending.
    pub parallel_class: Vec<usize>,
    /// The K-GDD whose groups are the parallel class.
    pub gdd: Design,
}

pub fn theorem1(p: &Theorem1Params, ingredients: &Ingredients) -> Result<PipelineResult> {
    run(p, 1, ingredients, "theorem1")
}

pub fn theorem3(p: &Theorem3Params, ingredients: &Ingredients) -> Result<PipelineResult> {
    run(&p.base, p.alpha, ingredients, "theorem3")
}

fn require(ing: &Ingredients, role: Role) -> Result<&Design> {
    ing.get(role)
        .ok_or_else(|| Error::IngredientMissing(role.name().to_string()))
}

fn invalid(role: Role, msg: String) -> Error {
    Error::IngredientInvalid(format!("{}: {msg}", role.name()))
}

/// Pairwise-disjoint blocks of `td_small`, at least `alpha` of them.
fn disjoint_blocks(td: &Design, given: Option<&[usize]>, alpha: usize) -> Result<Vec<Vec<usize>>> {
    let idx: Vec<usize> = match given {
        Some(idx) => {
            let mut used = vec![false; td.n()];
            for &b in idx {
                let block = td
                    .blocks()
                    .get(b)
                    .ok_or_else(|| invalid(Role::TdSmall, format!("disjoint block index {b} out of range")))?;
                for &x in block {
                    if used[x] {
                        return Err(invalid(Role::TdSmall, "listed disjoint blocks intersect".into()));
                    }
                    used[x] = true;
                }
            }
            idx.to_vec()
        }
        None if alpha == 1 => vec![0],
        None => match find_disjoint_blocks_exact(td, DEFAULT_EXACT_CAP) {
            Ok(set) => set.blocks,
            Err(Error::SizeLimitExceeded { .. }) => find_disjoint_blocks_greedy(td).blocks,
            Err(e) => return Err(e),
        },
    };
    if idx.len() < alpha {
        return Err(Error::AlphaUnavailable {
            required: alpha,
            found: idx.len(),
        });
    }
    Ok(idx[..alpha].iter().map(|&b| td.blocks()[b].clone()).collect())
}

fn run(p: &Theorem1Params, alpha: usize, ing: &Ingredients, name: &str) -> Result<PipelineResult> {
    p.check(alpha)?;
    let (ell, m, u, v, t) = (p.ell, p.m, p.u, p.v, p.t);
    let k = &p.k;

    let td_master = require(ing, Role::TdMaster)?;
    let td_small = require(ing, Role::TdSmall)?;
    let gdd_uv = require(ing, Role::GddUv)?;
    let pbd_fill = require(ing, Role::PbdFill)?;

    if as_td(td_master) != Some((ell + 1, m)) {
        return Err(invalid(Role::TdMaster, format!("not a TD({},{m})", ell + 1)));
    }
    if as_td(td_small) != Some((ell, u)) {
        return Err(invalid(Role::TdSmall, format!("not a TD({ell},{u})")));
    }
    let uv_type = GddType::from_sizes(std::iter::repeat_n(u, ell).chain([v]));
    if compute_type(gdd_uv) != uv_type {
        return Err(invalid(
            Role::GddUv,
            format!("type {} is not {uv_type}", compute_type(gdd_uv)),
        ));
    }
    let report = verify_gdd(gdd_uv, k);
    if !report.passed() {
        return Err(invalid(Role::GddUv, format!("not a {{{k}}}-GDD: {report}")));
    }
    if pbd_fill.n() != m * u + 1 {
        return Err(invalid(
            Role::PbdFill,
            format!("has {} points, need {}", pbd_fill.n(), m * u + 1),
        ));
    }
    let report = verify_pbd(pbd_fill, k);
    if !report.passed() {
        return Err(invalid(
            Role::PbdFill,
            format!("not a ({},{{{k}}})-PBD: {report}", m * u + 1),
        ));
    }
    let disjoint = disjoint_blocks(td_small, ing.td_small_disjoint.as_deref(), alpha)?;

    let trunc = truncate_td(td_master, t)?;
    let master = &trunc.design;
    let last_group: &[usize] = trunc.last_group.map(|g| master.groups()[g].as_slice()).unwrap_or(&[]);
    let mut weights = vec![u; master.n()];
    for &x in last_group {
        weights[x] = v;
    }
    let w = Weighting::new(weights)?;
    let offsets = w.offsets();

    // class i of deleted point i is inflated at the copy indices T_i
    let classes = p.classes_needed(alpha);
    let mut stipulations = Stipulations::new();
    let mut class_blocks = Vec::with_capacity(m * u);
    for i in 0..classes {
        let copies: Vec<usize> = (i * alpha..((i + 1) * alpha).min(u)).collect();
        for &b in &trunc.deleted_classes[i] {
            stipulations.insert(b, copies.iter().map(|&j| vec![j; ell]).collect());
            for &j in &copies {
                class_blocks.push(master.blocks()[b].iter().map(|&x| offsets[x] + j).collect::<Vec<_>>());
            }
        }
    }

    let supplier = RuleSupplier::new(k.clone())
        .rule(
            TypePattern::Exact(GddType::from_sizes(std::iter::repeat_n(u, ell))),
            DesignResolver::new(td_small.clone(), disjoint, k.clone())?,
        )
        .rule(
            TypePattern::Exact(uv_type),
            DesignResolver::new(gdd_uv.clone(), Vec::new(), k.clone())?,
        );
    let wfc = apply_wfc_stipulated(master, &w, &supplier, &stipulations)?;

    let mut tail: Vec<usize> = last_group.iter().flat_map(|&x| offsets[x]..offsets[x] + v).collect();
    tail.sort_unstable();
    let infinity = wfc.n();
    let mut blocks: Vec<Vec<usize>> = wfc.blocks().to_vec();
    for g in wfc.groups().iter().filter(|g| **g != tail) {
        debug_assert_eq!(g.len(), m * u);
        for b in pbd_fill.blocks() {
            blocks.push(b.iter().map(|&x| if x == m * u { infinity } else { g[x] }).collect());
        }
    }
    let mut b0_points = tail;
    b0_points.push(infinity);
    blocks.push(b0_points);
    let b0_raw = blocks.len() - 1;
    let n = infinity + 1;
    let (pbd, remap) = Design::from_parts(
        n,
        (0..n).map(|x| vec![x]).collect(),
        blocks,
        vec![b0_raw],
        Default::default(),
    )?;
    let b0 = remap[b0_raw];
    let report = verify_pbd(&pbd, k);
    if !report.passed() {
        return Err(Error::VerificationFailed(Box::new(report)));
    }

    let mut parallel_class = Vec::with_capacity(m * u + 1);
    for mut b in class_blocks {
        b.sort_unstable();
        let idx = pbd
            .block_index(&b)
            .ok_or_else(|| Error::IngredientInvalid(format!("prescribed block {b:?} missing from the PBD")))?;
        parallel_class.push(idx);
    }
    parallel_class.push(b0);
    parallel_class.sort_unstable();
    let report = verify_parallel_class(&pbd, &parallel_class);
    if !report.passed() {
        return Err(Error::VerificationFailed(Box::new(report)));
    }

    let mut in_class = vec![false; pbd.blocks().len()];
    for &i in &parallel_class {
        in_class[i] = true;
    }
    let groups = parallel_class.iter().map(|&i| pbd.blocks()[i].clone()).collect();
    let rest = pbd
        .blocks()
        .iter()
        .enumerate()
        .filter(|(i, _)| !in_class[*i])
        .map(|(_, b)| b.clone())
        .collect();
    let params = json!({"ell": ell, "m": m, "u": u, "v": v, "t": t, "alpha": alpha, "K": k.iter().collect::<Vec<_>>()});
    let gdd = Design::new(n, groups, rest)?
        .with_meta("construction", name)
        .with_meta("parameters", params.clone())
        .with_meta("infinity", infinity);
    let report = verify_gdd(&gdd, k);
    if !report.passed() {
        return Err(Error::VerificationFailed(Box::new(report)));
    }
    let ty = compute_type(&gdd);
    if ty != p.expected_type() {
        return Err(Error::InvalidInput(format!(
            "constructed type {ty}, expected {}",
            p.expected_type()
        )));
    }
    let gdd = gdd.with_meta("type", ty.to_string());
    let pbd = pbd
        .with_meta("construction", format!("{name}_pbd"))
        .with_meta("parameters", params)
        .with_meta("infinity", infinity)
        .with_meta("parallel_class", json!(parallel_class));

    Ok(PipelineResult {
        wfc,
        pbd,
        infinity,
        b0,
        parallel_class,
        gdd,
    })
}

/// Parameters for a 5-GDD of type `5^(4m) (4t+1)^1`.
pub fn corollary2_params(m: usize, t: usize) -> Result<Theorem1Params> {
    if m <= 10 {
        return Err(Error::PreconditionViolated(format!("m = {m} must exceed 10")));
    }
    if m % 5 > 1 {
        return Err(Error::PreconditionViolated(format!("m = {m} is not 0 or 1 mod 5")));
    }
    if t > m - 4 {
        return Err(Error::PreconditionViolated(format!(
            "t = {t} exceeds m - 4 = {}",
            m - 4
        )));
    }
    Ok(Theorem1Params {
        ell: 5,
        m,
        u: 4,
        v: 4,
        t,
        k: BlockSizeSet::single(5)?,
    })
}

/// Completes `supplied` for [`corollary2_params`]`(m, _)`. The fixed
/// ingredients are TD(5,4) from PG(2,4) minus a point and the 5-GDD of type
/// 4^6 from AG(2,5) minus a point. TD(6,m) and the (4m+1,5,1)-BIBD are kept
/// from `supplied` when present, otherwise built.
pub fn corollary2_ingredients(m: usize, mut supplied: Ingredients) -> Result<Ingredients> {
    if supplied.td_master.is_none() {
        supplied.td_master = Some(
            build_td(6, m)
                .map_err(|e| Error::IngredientMissing(format!("td_master: TD(6,{m}) must be imported ({e})")))?,
        );
    }
    if supplied.pbd_fill.is_none() {
        supplied.pbd_fill = Some(
            search_difference_family(4 * m + 1, 5)
                .and_then(|df| develop_difference_family(&df))
                .map_err(|e| Error::IngredientMissing(format!("pbd_fill: ({},5,1)-BIBD: {e}", 4 * m + 1)))?,
        );
    }
    supplied.td_small = Some(delete_point(&build_projective_plane(4)?, 0)?);
    supplied.td_small_disjoint = None;
    supplied.gdd_uv = Some(delete_point(&build_affine_plane(5)?.design, 0)?);
    Ok(supplied)
}

pub fn corollary2_with(m: usize, t: usize, supplied: Ingredients) -> Result<PipelineResult> {
    let p = corollary2_params(m, t)?;
    theorem1(&p, &corollary2_ingredients(m, supplied)?)
}

pub fn corollary2(m: usize, t: usize) -> Result<PipelineResult> {
    corollary2_with(m, t, Ingredients::default())
}

/// TD(q,q) from AG(2,q): the vertical lines are the groups, the other lines
/// the blocks. Returns the design and the indices of the `q` lines of slope
/// zero, which are pairwise disjoint.
pub fn td_from_affine_plane(q: usize) -> Result<(Design, Vec<usize>)> {
    let ag = build_affine_plane(q)?;
    let groups: Vec<Vec<usize>> = ag.classes[q].iter().map(|&b| ag.design.blocks()[b].clone()).collect();
    let blocks: Vec<Vec<usize>> = ag.classes[..q]
        .concat()
        .iter()
        .map(|&b| ag.design.blocks()[b].clone())
        .collect();
    let td = Design::new(q * q, groups, blocks)?
        .with_meta("construction", "td_from_affine_plane")
        .with_meta("q", q);
    let disjoint = ag.classes[0]
        .iter()
        .map(|&b| td.block_index(&ag.design.blocks()[b]).unwrap())
        .collect();
    Ok((td, disjoint))
}

/// Parameters for a {7,8}-GDD of type `7^(7m) (7t+1)^1`.
pub fn corollary5_params(m: usize, t: usize) -> Result<Theorem3Params> {
    if m < 7 {
        return Err(Error::PreconditionViolated(format!("m = {m} is below u = 7")));
    }
    if t > m - 1 {
        return Err(Error::PreconditionViolated(format!(
            "t = {t} exceeds m - 1 = {}",
            m - 1
        )));
    }
    Ok(Theorem3Params {
        base: Theorem1Params {
            ell: 7,
            m,
            u: 7,
            v: 7,
            t,
            k: BlockSizeSet::new([7, 8])?,
        },
        alpha: 7,
    })
}

/// The two fixed ingredients: the 8-GDD of type 7^8 from PG(2,7) minus a
/// point, and TD(7,7) with 7 disjoint blocks from AG(2,7).
pub fn corollary5_fixed_ingredients() -> Result<(Design, Design, Vec<usize>)> {
    let gdd_uv = delete_point(&build_projective_plane(7)?, 0)?;
    let (td_small, disjoint) = td_from_affine_plane(7)?;
    Ok((gdd_uv, td_small, disjoint))
}

/// All ingredients for [`corollary5_params`]`(m, _)`. Needs a
/// (7m+1,7,1)-BIBD; TD(8,m) is built when `m` is a prime power and
/// otherwise must be supplied.
pub fn corollary5_ingredients(m: usize, bibd: Option<Design>, td_master: Option<Design>) -> Result<Ingredients> {
    let bibd = bibd.ok_or_else(|| Error::IngredientMissing(format!("pbd_fill: ({},7,1)-BIBD", 7 * m + 1)))?;
    let td_master = match td_master {
        Some(td) => td,
        None => build_td(8, m)
            .map_err(|e| Error::IngredientMissing(format!("td_master: TD(8,{m}) must be imported ({e})")))?,
    };
    let (gdd_uv, td_small, disjoint) = corollary5_fixed_ingredients()?;
    Ok(Ingredients {
        td_master: Some(td_master),
        td_small: Some(td_small),
        td_small_disjoint: Some(disjoint),
        gdd_uv: Some(gdd_uv),
        pbd_fill: Some(bibd),
    })
}

pub fn corollary5(m: usize, t: usize, bibd: Option<Design>, td_master: Option<Design>) -> Result<PipelineResult> {
    let p = corollary5_params(m, t)?;
    theorem3(&p, &corollary5_ingredients(m, bibd, td_master)?)
}
