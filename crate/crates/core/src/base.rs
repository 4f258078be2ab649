//! Direct constructions: transversal designs from MOLS, affine and
//! projective planes, point deletion and truncation of a TD's last group.

use serde_json::{json, Map};

use crate::design::{as_td, verify_pbd, BlockSizeSet, Design};
use crate::error::{Error, Result};
use crate::gf::FiniteField;

/// TD(k,q) from the MOLS `L_a(x,y) = a*x + y`, `a` running over the nonzero
/// elements of GF(q) in encoding order.
///
/// Point `(g, x)` (group `g`, field element `x`) gets label `g*q + x`. The
/// block for `(x, y)` is `{(0,x), (1,y), (2, L_1(x,y)), ..., (k-1, L_{k-2}(x,y))}`.
pub fn build_td(k: usize, q: usize) -> Result<Design> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("TD({k},{q}) needs at least two groups")));
    }
    let field = FiniteField::new(q)?;
    if k > q + 1 {
        return Err(Error::KTooLarge { k, q });
    }
    let groups = (0..k).map(|g| (g * q..(g + 1) * q).collect()).collect();
    let mut blocks = Vec::with_capacity(q * q);
    for x in field.elements() {
        for y in field.elements() {
            let mut b = vec![x, q + y];
            for (g, a) in (2..k).zip(1..) {
                b.push(g * q + field.add(field.mul(a, x), y));
            }
            blocks.push(b);
        }
    }
    Ok(Design::new(k * q, groups, blocks)?
        .with_meta("construction", "td")
        .with_meta("k", k)
        .with_meta("q", q)
        .with_meta("labels", "(group g, element x) -> g*q + x"))
}

/// An affine plane together with its parallel classes (block indices).
#[derive(Debug, Clone)]
pub struct AffinePlane {
    pub design: Design,
    pub classes: Vec<Vec<usize>>,
}

/// AG(2,q): point `(x, y)` is labelled `x*q + y`. Class `a < q` holds the
/// lines `y = a*x + b`; class `q` holds the vertical lines `x = c`.
pub fn build_affine_plane(q: usize) -> Result<AffinePlane> {
    let field = FiniteField::new(q)?;
    let mut blocks = Vec::with_capacity(q * (q + 1));
    let mut class_of = Vec::with_capacity(q * (q + 1));
    for a in field.elements() {
        for b in field.elements() {
            blocks.push(
                field
                    .elements()
                    .map(|x| x * q + field.add(field.mul(a, x), b))
                    .collect(),
            );
            class_of.push(a);
        }
    }
    for c in field.elements() {
        blocks.push(field.elements().map(|y| c * q + y).collect());
        class_of.push(q);
    }
    let n = q * q;
    let (design, remap) = Design::from_parts(n, (0..n).map(|p| vec![p]).collect(), blocks, Vec::new(), Map::new())?;
    let mut classes = vec![Vec::with_capacity(q); q + 1];
    for (old, &c) in class_of.iter().enumerate() {
        classes[c].push(remap[old]);
    }
    for c in classes.iter_mut() {
        c.sort_unstable();
    }
    let design = design
        .with_meta("construction", "affine_plane")
        .with_meta("q", q)
        .with_meta("labels", "(x, y) -> x*q + y")
        .with_meta("parallel_classes", json!(classes));
    Ok(AffinePlane { design, classes })
}

/// Normalised projective coordinates: (1,a,b), (0,1,a), (0,0,1).
fn projective_points(field: &FiniteField) -> Vec<[usize; 3]> {
    let mut pts = Vec::new();
    for a in field.elements() {
        for b in field.elements() {
            pts.push([1, a, b]);
        }
    }
    for a in field.elements() {
        pts.push([0, 1, a]);
    }
    pts.push([0, 0, 1]);
    pts
}

/// PG(2,q). Points and lines are both the normalised nonzero vectors of
/// GF(q)^3; point `p` lies on line `l` when `p . l = 0`.
pub fn build_projective_plane(q: usize) -> Result<Design> {
    let field = FiniteField::new(q)?;
    let pts = projective_points(&field);
    let dot = |p: &[usize; 3], l: &[usize; 3]| (0..3).fold(0, |acc, i| field.add(acc, field.mul(p[i], l[i])));
    let blocks = pts
        .iter()
        .map(|l| {
            pts.iter()
                .enumerate()
                .filter(|(_, p)| dot(p, l) == 0)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    Ok(Design::pbd(pts.len(), blocks)?
        .with_meta("construction", "projective_plane")
        .with_meta("q", q))
}

/// Removes point `p` from a (v,k,1)-BIBD. The blocks through `p` (minus `p`)
/// become the groups; the blocks avoiding `p` remain. Points above `p` shift
/// down by one.
pub fn delete_point(pbd: &Design, p: usize) -> Result<Design> {
    if p >= pbd.n() {
        return Err(Error::InvalidInput(format!("point {p} out of range 0..{}", pbd.n())));
    }
    let sizes = pbd.block_sizes();
    if sizes.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "point deletion needs a single block size, found {sizes:?}"
        )));
    }
    let k = *sizes.iter().next().unwrap();
    let kset = BlockSizeSet::single(k)?;
    if !verify_pbd(pbd, &kset).passed() {
        return Err(Error::InvalidInput(format!("input is not a ({},{k},1)-BIBD", pbd.n())));
    }
    let relabel = |x: usize| if x < p { x } else { x - 1 };
    let mut groups = Vec::new();
    let mut blocks = Vec::new();
    for b in pbd.blocks() {
        if b.contains(&p) {
            groups.push(b.iter().filter(|&&x| x != p).map(|&x| relabel(x)).collect());
        } else {
            blocks.push(b.iter().map(|&x| relabel(x)).collect());
        }
    }
    let labels: Vec<usize> = (0..pbd.n()).filter(|&x| x != p).collect();
    Ok(Design::new(pbd.n() - 1, groups, blocks)?
        .with_meta("construction", "delete_point")
        .with_meta("deleted_point", p)
        .with_meta("original_labels", json!(labels)))
}

/// A TD(l+1,m) with all but `t` points of its last group removed: an
/// {l,l+1}-GDD of type m^l t^1.
#[derive(Debug, Clone)]
pub struct TruncatedTd {
    pub design: Design,
    pub ell: usize,
    pub m: usize,
    pub t: usize,
    /// Index of the truncated last group in `design`; `None` when `t = 0`.
    pub last_group: Option<usize>,
    /// Labels (in the original TD) of the deleted points, in deletion order.
    pub deleted_points: Vec<usize>,
    /// For each deleted point, the `m` blocks of size `l` it leaves behind.
    pub deleted_classes: Vec<Vec<usize>>,
}

/// Keeps the first `t` points of the last group and deletes the rest. Each
/// deleted point lay on `m` blocks; with it removed they partition the
/// points of the first `l` groups and are recorded as that point's class.
pub fn truncate_td(td: &Design, t: usize) -> Result<TruncatedTd> {
    let (k, m) = as_td(td).ok_or_else(|| Error::InvalidInput("input is not a verified TD".into()))?;
    if t > m {
        return Err(Error::InvalidInput(format!(
            "cannot keep {t} points of a group of size {m}"
        )));
    }
    let last = td.groups().last().expect("a TD has groups");
    let deleted_points: Vec<usize> = last[t..].to_vec();

    let mut keep = vec![true; td.n()];
    for &x in &deleted_points {
        keep[x] = false;
    }
    let mut new_label = vec![usize::MAX; td.n()];
    let mut labels = Vec::new();
    for x in 0..td.n() {
        if keep[x] {
            new_label[x] = labels.len();
            labels.push(x);
        }
    }
    let groups: Vec<Vec<usize>> = td
        .groups()
        .iter()
        .map(|g| {
            g.iter()
                .filter(|&&x| keep[x])
                .map(|&x| new_label[x])
                .collect::<Vec<_>>()
        })
        .filter(|g: &Vec<usize>| !g.is_empty())
        .collect();

    // deleted point index of each block, if any
    let mut owner = Vec::with_capacity(td.blocks().len());
    let blocks: Vec<Vec<usize>> = td
        .blocks()
        .iter()
        .map(|b| {
            owner.push(deleted_points.iter().position(|d| b.contains(d)));
            b.iter().filter(|&&x| keep[x]).map(|&x| new_label[x]).collect()
        })
        .collect();

    let mut meta = Map::new();
    meta.insert("construction".into(), json!("truncate_td"));
    meta.insert("t".into(), json!(t));
    meta.insert("deleted_points".into(), json!(deleted_points));
    meta.insert("original_labels".into(), json!(labels));
    if t == 0 {
        meta.insert("dropped_last_group".into(), json!(true));
    }
    let (design, remap) = Design::from_parts(labels.len(), groups, blocks, Vec::new(), meta)?;

    let mut deleted_classes = vec![Vec::with_capacity(m); deleted_points.len()];
    for (old, o) in owner.iter().enumerate() {
        if let Some(i) = o {
            deleted_classes[*i].push(remap[old]);
        }
    }
    for c in deleted_classes.iter_mut() {
        c.sort_unstable();
    }
    let last_group = (t > 0).then(|| design.groups().len() - 1);
    Ok(TruncatedTd {
        design,
        ell: k - 1,
        m,
        t,
        last_group,
        deleted_points,
        deleted_classes,
    })
}
