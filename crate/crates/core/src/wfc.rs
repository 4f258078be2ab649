//! Wilson's Fundamental Construction with prescribed ingredient blocks.
//!
//! Every master point `x` of weight `w(x)` is inflated to the expanded
//! points `(x, 0) .. (x, w(x) - 1)`, labelled row-major: master point first,
//! then copy index. Every master block `A` is replaced by an ingredient
//! K-GDD of type `{w(x) : x in A}` whose groups are the inflated points.
//! A request may also name transversals that the ingredient must contain
//! verbatim; built-in resolvers satisfy these by relabelling inside groups
//! ([`align_ingredient`]).

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::base::build_td;
use crate::design::{compute_type, verify_gdd, verify_gdd_structure, BlockSizeSet, Design, GddType};
use crate::disjoint::parallel_class_from_td;
use crate::error::{Error, Result};
use crate::io::load_design;

/// Positive weight per master point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Weighting(Vec<usize>);

impl Weighting {
    pub fn new(weights: Vec<usize>) -> Result<Self> {
        if let Some(x) = weights.iter().position(|&w| w == 0) {
            return Err(Error::InvalidWeighting(format!("point {x} has weight 0")));
        }
        Ok(Weighting(weights))
    }

    pub fn uniform(n: usize, w: usize) -> Result<Self> {
        Self::new(vec![w; n])
    }

    pub fn weight(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// First expanded label of every master point.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.0
            .iter()
            .map(|&w| {
                let o = acc;
                acc += w;
                o
            })
            .collect()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// What WFC asks of a supplier for one master block.
///
/// Positions `j = 0..points.len()` index the master points of the block.
/// Local labels run over the expanded points in the same row-major order,
/// so position `j`, copy `i` is `local_offsets()[j] + i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngredientRequest {
    pub block_index: usize,
    pub points: Vec<usize>,
    pub weights: Vec<usize>,
    /// Prescribed transversals, as one copy index per position.
    pub required: Vec<Vec<usize>>,
}

impl IngredientRequest {
    pub fn gdd_type(&self) -> GddType {
        GddType::from_sizes(self.weights.iter().copied())
    }

    pub fn local_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.weights
            .iter()
            .map(|&w| {
                let o = acc;
                acc += w;
                o
            })
            .collect()
    }

    pub fn local_n(&self) -> usize {
        self.weights.iter().sum()
    }

    pub fn local_groups(&self) -> Vec<Vec<usize>> {
        self.local_offsets()
            .iter()
            .zip(&self.weights)
            .map(|(&o, &w)| (o..o + w).collect())
            .collect()
    }

    /// The required transversals in local labels.
    pub fn required_blocks(&self) -> Vec<Vec<usize>> {
        let offsets = self.local_offsets();
        self.required
            .iter()
            .map(|labels| labels.iter().zip(&offsets).map(|(&i, &o)| o + i).collect())
            .collect()
    }

    fn check(&self) -> Result<()> {
        for r in &self.required {
            if r.len() != self.points.len() || r.iter().zip(&self.weights).any(|(&i, &w)| i >= w) {
                return Err(Error::InvalidInput(format!(
                    "required block {r:?} is not a transversal of block {}",
                    self.block_index
                )));
            }
        }
        for (a, ra) in self.required.iter().enumerate() {
            for rb in &self.required[a + 1..] {
                if ra.iter().zip(rb).any(|(x, y)| x == y) {
                    return Err(Error::InvalidInput(format!(
                        "required blocks of master block {} intersect",
                        self.block_index
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Resolves ingredient requests. Implementations must be side-effect free
/// per request; WFC may call them concurrently.
pub trait IngredientSupplier: Sync {
    /// The `K` every returned ingredient satisfies.
    fn block_sizes(&self) -> &BlockSizeSet;

    /// A K-GDD on `0..req.local_n()` with groups `req.local_groups()` that
    /// contains every block of `req.required_blocks()`.
    fn resolve(&self, req: &IngredientRequest) -> Result<Design>;
}

/// Relabels the groups of `ing` onto the positions of `req` (matching group
/// sizes to weights in ascending order) and, if the request prescribes
/// blocks, aligns the given disjoint blocks onto them.
pub fn fit_to_request(ing: &Design, disjoint: &[Vec<usize>], req: &IngredientRequest) -> Result<Design> {
    let mut positions: Vec<usize> = (0..req.weights.len()).collect();
    positions.sort_by_key(|&j| (req.weights[j], j));
    let mut groups: Vec<usize> = (0..ing.groups().len()).collect();
    groups.sort_by_key(|&g| (ing.groups()[g].len(), g));
    if positions.len() != groups.len()
        || positions
            .iter()
            .zip(&groups)
            .any(|(&j, &g)| req.weights[j] != ing.groups()[g].len())
    {
        return Err(Error::SupplierFailure(format!(
            "ingredient of type {} cannot fill a block of type {}",
            compute_type(ing),
            req.gdd_type()
        )));
    }
    let offsets = req.local_offsets();
    let mut label = vec![0; ing.n()];
    for (&j, &g) in positions.iter().zip(&groups) {
        for (i, &x) in ing.groups()[g].iter().enumerate() {
            label[x] = offsets[j] + i;
        }
    }
    let map = |b: &Vec<usize>| b.iter().map(|&x| label[x]).collect::<Vec<usize>>();
    let relabeled = Design::new(
        ing.n(),
        ing.groups().iter().map(map).collect(),
        ing.blocks().iter().map(map).collect(),
    )?;
    if req.required.is_empty() {
        return Ok(relabeled);
    }
    let disjoint: Vec<Vec<usize>> = disjoint
        .iter()
        .map(|b| {
            let mut b = map(b);
            b.sort_unstable();
            b
        })
        .collect();
    align_ingredient(&relabeled, &disjoint, &req.required_blocks())
}

/// Relabels points inside each group of `ing` so that the `j`-th block of
/// `disjoint` becomes exactly `targets[j]`.
///
/// Both lists must consist of pairwise-disjoint transversals of the groups,
/// and every entry of `disjoint` must be a block of `ing`. Points not fixed
/// by a target keep their relative order.
pub fn align_ingredient(ing: &Design, disjoint: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<Design> {
    if !verify_gdd_structure(ing).passed() {
        return Err(Error::IngredientInvalid("ingredient to align is not a GDD".into()));
    }
    if targets.len() > disjoint.len() {
        return Err(Error::TooManyTargets {
            targets: targets.len(),
            available: disjoint.len(),
        });
    }
    let group_of = ing.group_of();
    let ngroups = ing.groups().len();

    // per-group representative of each transversal
    let transversal = |b: &[usize], idx: usize| -> Result<Vec<usize>> {
        let mut rep = vec![usize::MAX; ngroups];
        for &x in b {
            if x >= ing.n() || rep[group_of[x]] != usize::MAX {
                return Err(Error::NotTransversal(idx));
            }
            rep[group_of[x]] = x;
        }
        if rep.contains(&usize::MAX) {
            return Err(Error::NotTransversal(idx));
        }
        Ok(rep)
    };
    let pairwise_disjoint = |reps: &[Vec<usize>]| -> Result<()> {
        for a in 0..reps.len() {
            for b in a + 1..reps.len() {
                if reps[a].iter().zip(&reps[b]).any(|(x, y)| x == y) {
                    return Err(Error::NotDisjoint(a, b));
                }
            }
        }
        Ok(())
    };

    let mut sources = Vec::with_capacity(disjoint.len());
    for (i, b) in disjoint.iter().enumerate() {
        let mut sorted = b.clone();
        sorted.sort_unstable();
        if ing.block_index(&sorted).is_none() {
            return Err(Error::NotABlock(sorted));
        }
        sources.push(transversal(b, i)?);
    }
    pairwise_disjoint(&sources)?;
    let dests = targets
        .iter()
        .enumerate()
        .map(|(i, b)| transversal(b, i))
        .collect::<Result<Vec<_>>>()?;
    pairwise_disjoint(&dests)?;

    let mut sigma: Vec<usize> = (0..ing.n()).collect();
    for (g, group) in ing.groups().iter().enumerate() {
        let fixed_src: Vec<usize> = sources.iter().take(dests.len()).map(|s| s[g]).collect();
        let fixed_dst: Vec<usize> = dests.iter().map(|d| d[g]).collect();
        for (&s, &d) in fixed_src.iter().zip(&fixed_dst) {
            sigma[s] = d;
        }
        let rest_src = group.iter().filter(|x| !fixed_src.contains(x));
        let rest_dst = group.iter().filter(|x| !fixed_dst.contains(x));
        for (&s, &d) in rest_src.zip(rest_dst) {
            sigma[s] = d;
        }
    }
    let blocks = ing
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&x| sigma[x]).collect())
        .collect();
    let mut out = Design::new(ing.n(), ing.groups().to_vec(), blocks)?;
    *out.meta_mut() = ing.meta().clone();
    Ok(out.with_meta("aligned_targets", json!(targets)))
}

/// Built-in ingredients: TD(k,u) from [`build_td`] for uniform types `u^k`
/// (with `u` disjoint blocks available whenever `k <= u`), the single block
/// TD(k,1), and complete bipartite 2-GDDs of type `a^1 b^1`.
#[derive(Debug, Clone)]
pub struct TdResolver {
    k: BlockSizeSet,
}

impl TdResolver {
    pub fn new(k: BlockSizeSet) -> Self {
        TdResolver { k }
    }

    /// A TD(k,u) and a list of its pairwise-disjoint blocks.
    pub fn td_with_disjoint(k: usize, u: usize) -> Result<(Design, Vec<Vec<usize>>)> {
        if u == 1 {
            let td = Design::new(k, (0..k).map(|x| vec![x]).collect(), vec![(0..k).collect()])?;
            let block = td.blocks()[0].clone();
            return Ok((td, vec![block]));
        }
        if k <= u {
            let (td, set) = parallel_class_from_td(&build_td(k + 1, u)?)?;
            let blocks = set.blocks.iter().map(|&b| td.blocks()[b].clone()).collect();
            Ok((td, blocks))
        } else {
            let td = build_td(k, u)?;
            let first = td.blocks()[0].clone();
            Ok((td, vec![first]))
        }
    }
}

impl IngredientSupplier for TdResolver {
    fn block_sizes(&self) -> &BlockSizeSet {
        &self.k
    }

    fn resolve(&self, req: &IngredientRequest) -> Result<Design> {
        let k = req.points.len();
        if !self.k.contains(k) {
            return Err(Error::SupplierFailure(format!(
                "block size {k} is not in K = {{{}}}",
                self.k
            )));
        }
        let ty = req.gdd_type();
        if let Some((u, _)) = ty.uniform() {
            let (td, disjoint) = Self::td_with_disjoint(k, u)
                .map_err(|e| Error::SupplierFailure(format!("no built-in TD({k},{u}): {e}")))?;
            return fit_to_request(&td, &disjoint, req);
        }
        if k == 2 && req.required.is_empty() {
            let (a, b) = (req.weights[0], req.weights[1]);
            let blocks = (0..a).flat_map(|x| (a..a + b).map(move |y| vec![x, y])).collect();
            return Design::new(a + b, req.local_groups(), blocks);
        }
        Err(Error::SupplierFailure(format!("no built-in ingredient of type {ty}")))
    }
}

/// A fixed ingredient design, relabelled onto each request it matches.
#[derive(Debug, Clone)]
pub struct DesignResolver {
    design: Design,
    disjoint: Vec<Vec<usize>>,
    k: BlockSizeSet,
}

impl DesignResolver {
    /// `disjoint` lists pairwise-disjoint transversal blocks (as point sets)
    /// available for prescribed blocks; it may be empty.
    pub fn new(design: Design, disjoint: Vec<Vec<usize>>, k: BlockSizeSet) -> Result<Self> {
        let report = verify_gdd(&design, &k);
        if !report.passed() {
            return Err(Error::IngredientInvalid(format!(
                "ingredient is not a {{{k}}}-GDD: {report}"
            )));
        }
        Ok(DesignResolver { design, disjoint, k })
    }

    pub fn from_file(path: &Path, k: BlockSizeSet) -> Result<Self> {
        Self::new(load_design(path)?, Vec::new(), k)
    }

    pub fn design(&self) -> &Design {
        &self.design
    }
}

impl IngredientSupplier for DesignResolver {
    fn block_sizes(&self) -> &BlockSizeSet {
        &self.k
    }

    fn resolve(&self, req: &IngredientRequest) -> Result<Design> {
        if req.required.len() > self.disjoint.len() {
            return Err(Error::SupplierFailure(format!(
                "ingredient offers {} disjoint blocks, request needs {}",
                self.disjoint.len(),
                req.required.len()
            )));
        }
        fit_to_request(&self.design, &self.disjoint, req)
    }
}

/// Which requests a rule applies to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypePattern {
    Any,
    Exact(GddType),
}

impl TypePattern {
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim() == "*" {
            Ok(TypePattern::Any)
        } else {
            Ok(TypePattern::Exact(s.parse()?))
        }
    }

    pub fn matches(&self, ty: &GddType) -> bool {
        match self {
            TypePattern::Any => true,
            TypePattern::Exact(t) => t == ty,
        }
    }
}

/// First matching rule wins.
pub struct RuleSupplier {
    k: BlockSizeSet,
    rules: Vec<(TypePattern, Box<dyn IngredientSupplier + Send>)>,
}

impl RuleSupplier {
    pub fn new(k: BlockSizeSet) -> Self {
        RuleSupplier { k, rules: Vec::new() }
    }

    pub fn rule(mut self, pattern: TypePattern, supplier: impl IngredientSupplier + Send + 'static) -> Self {
        self.rules.push((pattern, Box::new(supplier)));
        self
    }

    /// Builds a supplier from its JSON configuration; relative file paths
    /// are resolved against `base_dir`.
    pub fn from_config(config: &SupplierConfig, base_dir: &Path) -> Result<Self> {
        let k = BlockSizeSet::new(config.k.iter().copied())?;
        let mut out = RuleSupplier::new(k.clone());
        for rule in &config.rules {
            let pattern = TypePattern::parse(&rule.type_pattern)?;
            out = if rule.source == "builtin" {
                out.rule(pattern, TdResolver::new(k.clone()))
            } else {
                let path = base_dir.join(&rule.source);
                let design = load_design(&path)?;
                let disjoint = rule
                    .disjoint
                    .iter()
                    .map(|&b| {
                        design
                            .blocks()
                            .get(b)
                            .cloned()
                            .ok_or_else(|| Error::schema("disjoint", format!("block index {b} out of range")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.rule(pattern, DesignResolver::new(design, disjoint, k.clone())?)
            };
        }
        Ok(out)
    }
}

impl IngredientSupplier for RuleSupplier {
    fn block_sizes(&self) -> &BlockSizeSet {
        &self.k
    }

    fn resolve(&self, req: &IngredientRequest) -> Result<Design> {
        let ty = req.gdd_type();
        let (_, supplier) = self
            .rules
            .iter()
            .find(|(p, _)| p.matches(&ty))
            .ok_or_else(|| Error::SupplierFailure(format!("no rule for ingredient type {ty}")))?;
        supplier.resolve(req)
    }
}

/// `{"K": [..], "rules": [{"type": "4^6" | "*", "source": "builtin" | path, "disjoint": [block indices]}]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupplierConfig {
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    pub rules: Vec<SupplierRule>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupplierRule {
    #[serde(rename = "type")]
    pub type_pattern: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disjoint: Vec<usize>,
}

/// Prescribed transversals per master block index.
pub type Stipulations = BTreeMap<usize, Vec<Vec<usize>>>;

/// WFC without prescribed blocks.
pub fn apply_wfc(master: &Design, w: &Weighting, supplier: &dyn IngredientSupplier) -> Result<Design> {
    apply_wfc_stipulated(master, w, supplier, &Stipulations::new())
}

/// Applies WFC. The output has groups `{x} x 0..w(x)` merged over each
/// master group, and its blocks are the union of all ingredients; every
/// stipulated block appears verbatim.
pub fn apply_wfc_stipulated(
    master: &Design,
    w: &Weighting,
    supplier: &dyn IngredientSupplier,
    stipulations: &Stipulations,
) -> Result<Design> {
    if w.as_slice().len() != master.n() {
        return Err(Error::InvalidWeighting(format!(
            "{} weights for {} points",
            w.as_slice().len(),
            master.n()
        )));
    }
    let report = verify_gdd_structure(master);
    if !report.passed() {
        return Err(Error::InvalidInput(format!("master is not a GDD: {report}")));
    }
    if let Some(&b) = stipulations.keys().find(|&&b| b >= master.blocks().len()) {
        return Err(Error::InvalidInput(format!("stipulation for missing block {b}")));
    }
    let offsets = w.offsets();
    let k = supplier.block_sizes();

    let ingredient_blocks = master
        .blocks()
        .par_iter()
        .enumerate()
        .map(|(bi, block)| -> Result<Vec<Vec<usize>>> {
            let req = IngredientRequest {
                block_index: bi,
                points: block.clone(),
                weights: block.iter().map(|&x| w.weight(x)).collect(),
                required: stipulations.get(&bi).cloned().unwrap_or_default(),
            };
            req.check()?;
            let ing = supplier.resolve(&req)?;
            check_ingredient(&ing, &req, k)?;
            let mut to_global = Vec::with_capacity(req.local_n());
            for (&x, &wx) in req.points.iter().zip(&req.weights) {
                to_global.extend((0..wx).map(|i| offsets[x] + i));
            }
            Ok(ing
                .blocks()
                .iter()
                .map(|b| b.iter().map(|&p| to_global[p]).collect())
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let groups = master
        .groups()
        .iter()
        .map(|g| g.iter().flat_map(|&x| offsets[x]..offsets[x] + w.weight(x)).collect())
        .collect();
    let design = Design::new(w.total(), groups, ingredient_blocks.concat())?
        .with_meta("construction", "wfc")
        .with_meta("weights", json!(w.as_slice()))
        .with_meta("point_offsets", json!(offsets));
    let report = verify_gdd(&design, k);
    if !report.passed() {
        return Err(Error::VerificationFailed(Box::new(report)));
    }
    Ok(design)
}

fn check_ingredient(ing: &Design, req: &IngredientRequest, k: &BlockSizeSet) -> Result<()> {
    let bi = req.block_index;
    if ing.n() != req.local_n() || ing.groups() != req.local_groups().as_slice() {
        return Err(Error::IngredientInvalid(format!(
            "ingredient for block {bi} has the wrong groups (type {} instead of {})",
            compute_type(ing),
            req.gdd_type()
        )));
    }
    let report = verify_gdd(ing, k);
    if !report.passed() {
        return Err(Error::IngredientInvalid(format!("ingredient for block {bi}: {report}")));
    }
    for r in req.required_blocks() {
        if ing.block_index(&r).is_none() {
            return Err(Error::IngredientInvalid(format!(
                "ingredient for block {bi} lacks required block {r:?}"
            )));
        }
    }
    Ok(())
}
