#![allow(dead_code)]

use std::collections::HashMap;

use design_forge::base::{build_affine_plane, build_projective_plane, build_td, delete_point, truncate_td};
use design_forge::wfc::Weighting;
use design_forge::{BlockSizeSet, Design};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

/// Independent GDD check by counting every pair in a hash map.
pub fn oracle_gdd(d: &Design, k: &BlockSizeSet) -> bool {
    let mut group = vec![usize::MAX; d.n()];
    for (i, g) in d.groups().iter().enumerate() {
        for &x in g {
            group[x] = i;
        }
    }
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for b in d.blocks() {
        if !k.contains(b.len()) {
            return false;
        }
        for (i, &x) in b.iter().enumerate() {
            for &y in &b[i + 1..] {
                if group[x] == group[y] {
                    return false;
                }
                *seen.entry((x.min(y), x.max(y))).or_default() += 1;
            }
        }
    }
    (0..d.n()).all(|x| {
        (x + 1..d.n()).all(|y| {
            let c = seen.get(&(x, y)).copied().unwrap_or(0);
            if group[x] == group[y] {
                c == 0
            } else {
                c == 1
            }
        })
    })
}

/// Same design with points renamed by a random permutation.
pub fn relabel(d: &Design, rng: &mut StdRng) -> Design {
    let mut perm: Vec<usize> = (0..d.n()).collect();
    perm.shuffle(rng);
    let map = |s: &Vec<usize>| s.iter().map(|&x| perm[x]).collect();
    Design::new(
        d.n(),
        d.groups().iter().map(map).collect(),
        d.blocks().iter().map(map).collect(),
    )
    .unwrap()
}

/// Complete multipartite 2-GDD on a random partition of `n` points.
fn random_two_gdd(n: usize, rng: &mut StdRng) -> Design {
    let parts = rng.gen_range(2..=n.min(5));
    let mut colour: Vec<usize> = (0..n).map(|x| x % parts).collect();
    colour.shuffle(rng);
    let mut groups = vec![Vec::new(); parts];
    for (x, &c) in colour.iter().enumerate() {
        groups[c].push(x);
    }
    let mut blocks = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if colour[x] != colour[y] {
                blocks.push(vec![x, y]);
            }
        }
    }
    Design::new(n, groups, blocks).unwrap()
}

/// Small GDDs (at most 12 points) with every block size at most `max_k`.
fn structured_master(rng: &mut StdRng) -> Design {
    match rng.gen_range(0..7) {
        0 => {
            let (k, q) = [(2, 2), (3, 2), (2, 3), (3, 3), (4, 3), (2, 4), (3, 4), (2, 5)][rng.gen_range(0..8)];
            build_td(k, q).unwrap()
        }
        1 => {
            let (k, q) = [(3, 2), (3, 3), (4, 3), (3, 4)][rng.gen_range(0..4)];
            let t = rng.gen_range(0..=q);
            truncate_td(&build_td(k, q).unwrap(), t).unwrap().design
        }
        2 => build_projective_plane(2).unwrap(),
        3 => build_affine_plane(3).unwrap().design,
        4 => delete_point(&build_projective_plane(2).unwrap(), rng.gen_range(0..7)).unwrap(),
        5 => delete_point(&build_affine_plane(3).unwrap().design, rng.gen_range(0..9)).unwrap(),
        _ => build_affine_plane(2).unwrap().design,
    }
}

/// A random WFC instance: master GDD, weights in {1,2,3} and the block sizes
/// the built-in TD ingredients produce.
pub struct WfcCase {
    pub master: Design,
    pub weights: Weighting,
    pub k: BlockSizeSet,
}

pub fn random_wfc_case(rng: &mut StdRng) -> WfcCase {
    if rng.gen_bool(0.5) {
        // block size 2: any weights work, ingredients are complete bipartite
        let n = rng.gen_range(2..=12);
        let master = relabel(&random_two_gdd(n, rng), rng);
        let weights = Weighting::new((0..n).map(|_| rng.gen_range(1..=3)).collect()).unwrap();
        WfcCase {
            master,
            weights,
            k: BlockSizeSet::single(2).unwrap(),
        }
    } else {
        // uniform weight w needs a TD(s,w) for every block size s
        let master = relabel(&structured_master(rng), rng);
        let max_k = master.block_sizes().into_iter().max().unwrap();
        let choices: Vec<usize> = (1..=3).filter(|&w| w == 1 || max_k <= w + 1).collect();
        let w = *choices.choose(rng).unwrap();
        let k = BlockSizeSet::new(master.block_sizes()).unwrap();
        WfcCase {
            weights: Weighting::uniform(master.n(), w).unwrap(),
            master,
            k,
        }
    }
}

/// Group sizes of the WFC output: the weight total of each master group.
pub fn weighted_group_sizes(master: &Design, w: &Weighting) -> Vec<usize> {
    master
        .groups()
        .iter()
        .map(|g| g.iter().map(|&x| w.weight(x)).sum())
        .collect()
}
