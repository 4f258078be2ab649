//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --test acceptance`; exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use design_forge::base::{build_affine_plane, build_projective_plane, build_td};
use design_forge::design::{as_td, Axiom, Witness};
use design_forge::difference::{develop_difference_family, search_difference_family, DifferenceFamily};
use design_forge::disjoint::{find_disjoint_blocks_exact, lemma4_bound, parallel_class_from_td, DEFAULT_EXACT_CAP};
use design_forge::pipeline::{
    corollary2, corollary5_fixed_ingredients, corollary5_params, theorem1, theorem3, Ingredients, PipelineResult, Role,
    Theorem1Params, Theorem3Params,
};
use design_forge::wfc::{apply_wfc, TdResolver};
use design_forge::{compute_type, verify_gdd, verify_parallel_class, verify_pbd, BlockSizeSet, Design, Error, GddType};
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::{oracle_gdd, random_wfc_case, weighted_group_sizes};

type Check = Result<String, String>;

/// Name, check and pinned time limit.
type Criterion = (&'static str, fn() -> Check, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ty(s: &str) -> GddType {
    s.parse().unwrap()
}

/// Structural checks shared by every pipeline run.
fn check_pipeline(p: &Theorem1Params, r: &PipelineResult) -> Result<(), String> {
    let (ell, m, u, v, t) = (p.ell, p.m, p.u, p.v, p.t);
    let label = format!("l={ell} m={m} u={u} v={v} t={t}");
    ensure(r.pbd.n() == m * u * ell + t * v + 1, || {
        format!("{label}: PBD has {} points", r.pbd.n())
    })?;
    ensure(verify_pbd(&r.pbd, &p.k).passed(), || format!("{label}: PBD fails"))?;
    ensure(r.parallel_class.len() == m * u + 1, || {
        format!("{label}: class has {} blocks", r.parallel_class.len())
    })?;
    let b0 = &r.pbd.blocks()[r.b0];
    ensure(
        r.parallel_class.contains(&r.b0) && b0.len() == t * v + 1 && b0.contains(&r.infinity),
        || format!("{label}: B0 wrong"),
    )?;
    let small = r
        .parallel_class
        .iter()
        .filter(|&&i| i != r.b0)
        .all(|&i| r.pbd.blocks()[i].len() == ell);
    ensure(small, || format!("{label}: class block of wrong size"))?;
    ensure(verify_parallel_class(&r.pbd, &r.parallel_class).passed(), || {
        format!("{label}: parallel class fails")
    })?;
    ensure(verify_gdd(&r.gdd, &p.k).passed(), || {
        format!("{label}: final GDD fails")
    })?;
    ensure(compute_type(&r.gdd) == p.expected_type(), || {
        format!("{label}: type {} != {}", compute_type(&r.gdd), p.expected_type())
    })?;
    Ok(())
}

fn criterion1() -> Check {
    let k5 = BlockSizeSet::single(5).unwrap();
    let mut sizes = Vec::new();
    for t in 0..=7 {
        let r = corollary2(11, t).map_err(|e| format!("t={t}: {e}"))?;
        let s = 4 * t + 1;
        let expected = ty(&format!("5^44 {s}^1"));
        ensure(compute_type(&r.gdd) == expected, || {
            format!("t={t}: type {}", compute_type(&r.gdd))
        })?;
        ensure(r.gdd.n() == 221 + 4 * t, || format!("t={t}: {} points", r.gdd.n()))?;
        ensure(verify_gdd(&r.gdd, &k5).passed(), || {
            format!("t={t}: verification fails")
        })?;
        ensure(oracle_gdd(&r.gdd, &k5), || {
            format!("t={t}: pair-count oracle disagrees")
        })?;
        sizes.push(format!("{}", r.gdd.blocks().len()));
    }
    Ok(format!("8 instances, 5^44 (4t+1)^1, blocks {}", sizes.join("/")))
}

fn criterion2() -> Check {
    let mut runs = 0;
    for t in 0..=7 {
        let start = Instant::now();
        let r = corollary2(11, t).map_err(|e| format!("corollary2 t={t}: {e}"))?;
        ensure(start.elapsed() < Duration::from_secs(1), || {
            format!("corollary2 t={t}: too slow")
        })?;
        let p = design_forge::pipeline::corollary2_params(11, t).unwrap();
        check_pipeline(&p, &r)?;
        runs += 1;
    }
    let generic = [
        (3, 5, 3, 3, vec![3, 4], 0..=2),
        (4, 5, 4, 4, vec![4, 5], 0..=1),
        (2, 3, 2, 2, vec![2, 3], 0..=1),
    ];
    for (ell, m, u, v, k, ts) in generic {
        for t in ts {
            let p = Theorem1Params {
                ell,
                m,
                u,
                v,
                t,
                k: BlockSizeSet::new(k.clone()).unwrap(),
            };
            let mut ing = Ingredients::default();
            for role in Role::ALL {
                ing.fill_builtin(role, &p)
                    .map_err(|e| format!("{}: {e}", role.name()))?;
            }
            let start = Instant::now();
            let r = theorem1(&p, &ing).map_err(|e| format!("l={ell} m={m} t={t}: {e}"))?;
            ensure(start.elapsed() < Duration::from_secs(1), || {
                format!("l={ell} m={m} t={t}: too slow")
            })?;
            check_pipeline(&p, &r)?;
            runs += 1;
        }
    }
    Ok(format!("{runs} pipeline runs"))
}

fn criterion3() -> Check {
    let (td44, set) = parallel_class_from_td(&build_td(5, 4).unwrap()).map_err(|e| e.to_string())?;
    let base = Theorem1Params {
        ell: 4,
        m: 5,
        u: 4,
        v: 4,
        t: 4,
        k: BlockSizeSet::new([4, 5]).unwrap(),
    };
    let ing = Ingredients {
        td_master: Some(build_td(5, 5).unwrap()),
        td_small: Some(td44),
        td_small_disjoint: Some(set.blocks),
        gdd_uv: Some(build_td(5, 4).unwrap()),
        pbd_fill: Some(build_projective_plane(4).unwrap()),
    };
    let p = Theorem3Params { base, alpha: 4 };
    let r = theorem3(&p, &ing).map_err(|e| e.to_string())?;
    check_pipeline(&p.base, &r)?;
    ensure(compute_type(&r.gdd) == ty("4^20 17^1") && r.gdd.n() == 97, || {
        format!("type {}", compute_type(&r.gdd))
    })?;
    // with a single disjoint block the same t is out of range (t > m - u = 1)
    let single = theorem1(&p.base, &ing);
    ensure(matches!(single, Err(Error::PreconditionViolated(_))), || {
        "alpha = 1 accepted t = 4".to_string()
    })?;
    Ok("4^20 17^1 on 97 points; alpha = 1 rejects t = 4".into())
}

fn criterion4() -> Check {
    let mut cases = 0;
    for u in [2, 3, 4, 5, 7] {
        for ell in 2..=u + 1 {
            let td = build_td(ell, u).unwrap();
            let r = find_disjoint_blocks_exact(&td, DEFAULT_EXACT_CAP)
                .map_err(|e| e.to_string())?
                .len();
            let at = format!("TD({ell},{u}) has r = {r}");
            if ell == u + 1 {
                ensure(r == 1, || at.clone())?;
            }
            if ell == u {
                ensure(r == u, || at.clone())?;
                let (short, set) = parallel_class_from_td(&build_td(u + 1, u).unwrap()).unwrap();
                ensure(set.len() == u && as_td(&short) == Some((u, u)), || {
                    format!("shortened TD({u},{u})")
                })?;
            }
            if u >= ell && (ell, u) != (2, 2) {
                ensure(r >= 3, || at.clone())?;
            }
            ensure(r >= lemma4_bound(ell, u).unwrap(), || format!("{at}, below bound"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} transversal designs"))
}

fn criterion5() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    for i in 0..100 {
        let case = random_wfc_case(&mut rng);
        let out = apply_wfc(&case.master, &case.weights, &TdResolver::new(case.k.clone()))
            .map_err(|e| format!("master {i}: {e}"))?;
        ensure(verify_gdd(&out, &case.k).passed(), || {
            format!("master {i}: output fails")
        })?;
        let expected = GddType::from_sizes(weighted_group_sizes(&case.master, &case.weights));
        ensure(compute_type(&out) == expected, || {
            format!("master {i}: type {} != {expected}", compute_type(&out))
        })?;
    }
    Ok("100 random masters".into())
}

fn criterion6() -> Check {
    let pbd_ok = |d: &Design, k: usize| verify_pbd(d, &BlockSizeSet::single(k).unwrap()).passed();
    let fano = develop_difference_family(&DifferenceFamily::full(7, vec![vec![0, 1, 3]])).map_err(|e| e.to_string())?;
    ensure(pbd_ok(&fano, 3), || "Fano".into())?;
    for q in [2, 3, 4, 5, 7] {
        ensure(pbd_ok(&build_affine_plane(q).unwrap().design, q), || {
            format!("AG(2,{q})")
        })?;
        ensure(pbd_ok(&build_projective_plane(q).unwrap(), q + 1), || {
            format!("PG(2,{q})")
        })?;
    }
    let d13 = develop_difference_family(&DifferenceFamily::full(13, vec![vec![0, 1, 3, 9]])).unwrap();
    ensure(pbd_ok(&d13, 4), || "(13,4,1)".into())?;
    let d45 = search_difference_family(45, 5)
        .and_then(|df| develop_difference_family(&df))
        .map_err(|e| format!("(45,5,1): {e}"))?;
    ensure(pbd_ok(&d45, 5) && d45.blocks().len() == 99, || "(45,5,1)".into())?;

    // negative controls on PG(2,3)
    let pg = build_projective_plane(3).unwrap();
    let k4 = BlockSizeSet::single(4).unwrap();
    let removed = pg.blocks()[5].clone();
    let mut blocks = pg.blocks().to_vec();
    blocks.remove(5);
    let report = verify_pbd(&Design::pbd(13, blocks).unwrap(), &k4);
    let witness_ok = matches!(report.first(), Some(v) if v.axiom == Axiom::PairUncovered
        && matches!(v.witness, Witness::Pair(a, b) if removed.contains(&a) && removed.contains(&b)));
    ensure(witness_ok && report.violation_count == 6, || {
        format!("block removed: {report}")
    })?;

    let dup = pg.blocks()[2].clone();
    let mut blocks = pg.blocks().to_vec();
    blocks.push(dup.clone());
    let report = verify_pbd(&Design::pbd(13, blocks).unwrap(), &k4);
    let witness_ok = matches!(report.first(), Some(v) if v.axiom == Axiom::PairRepeated
        && matches!(v.witness, Witness::Pair(a, b) if dup.contains(&a) && dup.contains(&b)));
    ensure(witness_ok && report.violation_count == 6, || {
        format!("block duplicated: {report}")
    })?;

    // move point 0 of TD(3,3) into the second group and point 3 into the first
    let td = build_td(3, 3).unwrap();
    let mut groups = td.groups().to_vec();
    groups[0][0] = 3;
    groups[1][0] = 0;
    let swapped = Design::new(9, groups, td.blocks().to_vec()).unwrap();
    let report = verify_gdd(&swapped, &BlockSizeSet::single(3).unwrap());
    let touches = |a: usize, b: usize| [0, 3].contains(&a) || [0, 3].contains(&b);
    let witness_ok = report.has(Axiom::GroupMeetsBlockTwice)
        && report.violations.iter().all(|v| match v.witness {
            Witness::Pair(a, b) => touches(a, b),
            Witness::Block(i) => swapped.blocks()[i].iter().any(|x| [0, 3].contains(x)),
            _ => true,
        });
    ensure(!report.passed() && witness_ok, || format!("point swapped: {report}"))?;
    ensure(!oracle_gdd(&swapped, &BlockSizeSet::single(3).unwrap()), || {
        "oracle accepts swap".into()
    })?;
    Ok("Fano, AG/PG(2,q) for q in {2,3,4,5,7}, (13,4,1), (45,5,1) verified; 3 negative controls rejected with witnesses".into())
}

fn criterion7() -> Check {
    let (gdd78, td77, disjoint) = corollary5_fixed_ingredients().map_err(|e| e.to_string())?;
    ensure(compute_type(&gdd78) == ty("7^8"), || {
        format!("type {}", compute_type(&gdd78))
    })?;
    ensure(verify_gdd(&gdd78, &BlockSizeSet::single(8).unwrap()).passed(), || {
        "7^8 fails".into()
    })?;
    ensure(as_td(&td77) == Some((7, 7)), || "not a TD(7,7)".into())?;
    ensure(verify_gdd(&td77, &BlockSizeSet::single(7).unwrap()).passed(), || {
        "TD(7,7) fails".into()
    })?;
    let mut used = vec![false; td77.n()];
    for &b in &disjoint {
        for &x in &td77.blocks()[b] {
            ensure(!used[x], || "listed blocks intersect".into())?;
            used[x] = true;
        }
    }
    ensure(disjoint.len() == 7, || format!("{} disjoint blocks", disjoint.len()))?;
    for m in 7..=30 {
        for t in 0..=m {
            let ok = corollary5_params(m, t).is_ok();
            ensure(ok == (t < m), || format!("m={m} t={t}: accepted = {ok}"))?;
        }
    }
    ensure(corollary5_params(6, 0).is_err(), || "m = 6 accepted".into())?;
    Ok("7^8 and TD(7,7) with 7 disjoint blocks verify; 0 <= t <= m-1 enforced".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 corollary2 m=11, t=0..7", criterion1, Duration::from_secs(5)),
        ("2 pipeline structure", criterion2, Duration::from_secs(20)),
        ("3 alpha=4 pipeline, t=4", criterion3, Duration::from_secs(2)),
        ("4 disjoint-block grid", criterion4, Duration::from_secs(10)),
        ("5 WFC random masters", criterion5, Duration::from_secs(10)),
        ("6 oracle validation", criterion6, Duration::from_secs(5)),
        ("7 corollary5 ingredients", criterion7, Duration::from_secs(2)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let line = match result {
            Ok(_) if elapsed > limit => {
                failed += 1;
                format!("FAIL  criterion {name}: took {elapsed:.2?}, limit {limit:?}")
            }
            Ok(detail) => format!("PASS  criterion {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                format!("FAIL  criterion {name}: {why} ({elapsed:.2?})")
            }
        };
        println!("{line}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
