use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use design_forge::io::load_design;
use design_forge::manifest::{RunManifest, Source};
use design_forge::{compute_type, GddType};
use serde_json::Value;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_design-forge"))
        .args(args)
        .current_dir(dir)
        .env_remove("DESIGN_FORGE_INGREDIENTS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run_in(dir, args);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn meta_type(path: &Path) -> GddType {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["meta"]["type"].as_str().unwrap().parse().unwrap()
}

#[test]
fn corollary2_example_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["construct", "corollary2", "--m", "11", "--t", "7", "-o", "out.json"],
    );
    let out = dir.path().join("out.json");
    assert_eq!(meta_type(&out), "5^44 29^1".parse::<GddType>().unwrap());
    assert_eq!(compute_type(&load_design(&out).unwrap()).to_string(), "29^1 5^44");
    let text = ok(dir.path(), &["verify", "gdd", "--K", "5", "out.json"]);
    assert!(text.starts_with("gdd: pass"), "{text}");
    let o = run_in(dir.path(), &["verify", "gdd", "--K", "4", "out.json"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bound_prints_value() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ok(dir.path(), &["bound", "--ell", "7", "--u", "7"]).trim(), "2");
    assert_eq!(ok(dir.path(), &["bound", "--ell", "3", "--u", "4"]).trim(), "2");
    assert_eq!(code(&run_in(dir.path(), &["bound", "--ell", "1", "--u", "4"])), 2);
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "construct",
        "theorem1",
        "--ell",
        "3",
        "--m",
        "5",
        "--u",
        "3",
        "--v",
        "3",
        "--t",
        "2",
        "--K",
        "3,4",
        "-o",
        "g.json",
        "--pbd-out",
        "p.json",
    ];
    ok(a.path(), &args);
    ok(b.path(), &args);
    for f in ["g.json", "p.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
    let ma = RunManifest::load(&a.path().join("g.json.manifest.json")).unwrap();
    let mut mb = RunManifest::load(&b.path().join("g.json.manifest.json")).unwrap();
    assert_eq!(ma.digest, mb.digest);
    mb.timestamp = ma.timestamp;
    assert_eq!(ma.to_json(), mb.to_json());
    assert_eq!(ma.outputs.len(), 2);
    assert!(ma.all_passed());
    assert_eq!(ma.ingredients.len(), 4);
    assert!(ma.ingredients.iter().all(|r| r.source == Source::Builtin));
    assert_eq!(ma.argv, args);
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["construct", "projective", "--q", "3", "-o", "pg.json"]);
    ok(
        dir.path(),
        &["construct", "delete-point", "pg.json", "--point", "0", "-o", "g.json"],
    );
    let text = ok(dir.path(), &["replay", "g.json.manifest.json"]);
    assert!(text.contains("identical"), "{text}");

    // a changed input file is an invalid ingredient
    ok(dir.path(), &["construct", "projective", "--q", "2", "-o", "pg.json"]);
    assert_eq!(code(&run_in(dir.path(), &["replay", "g.json.manifest.json"])), 3);

    // editing a manifest breaks its digest
    let path = dir.path().join("pg.json.manifest.json");
    let edited = fs::read_to_string(&path).unwrap().replace("\"q\": 2", "\"q\": 4");
    fs::write(&path, edited).unwrap();
    assert_eq!(code(&run_in(dir.path(), &["replay", "pg.json.manifest.json"])), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // argument errors
    assert_eq!(code(&run_in(d, &["construct", "td", "--k", "3"])), 2);
    assert_eq!(
        code(&run_in(d, &["construct", "td", "--k", "3", "--q", "6", "-o", "x.json"])),
        2
    );
    assert_eq!(
        code(&run_in(
            d,
            &["construct", "corollary2", "--m", "12", "--t", "0", "-o", "x.json"]
        )),
        2
    );
    assert_eq!(
        code(&run_in(
            d,
            &["construct", "corollary5", "--m", "7", "--t", "7", "-o", "x.json"]
        )),
        2
    );
    assert_eq!(code(&run_in(d, &["verify", "gdd", "--K", "3", "missing.json"])), 2);
    assert!(!d.join("x.json").exists());
    // ingredient missing
    let o = run_in(d, &["construct", "corollary5", "--m", "7", "--t", "3", "-o", "x.json"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(50,7,1)-BIBD"));
    assert!(!d.join("x.json").exists());
    // a design that fails verification
    fs::write(d.join("bad.json"), r#"{"n":3,"groups":[[0],[1],[2]],"blocks":[[0,1]]}"#).unwrap();
    assert_eq!(code(&run_in(d, &["verify", "pbd", "--K", "2", "bad.json"])), 1);
    // schema error
    fs::write(d.join("schema.json"), r#"{"n":3,"groups":[[0,1],[1,2]],"blocks":[]}"#).unwrap();
    let o = run_in(d, &["verify", "gdd", "--K", "2", "schema.json"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("groups"));
}

#[test]
fn json_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("bad.json"),
        r#"{"n":3,"groups":[[0],[1],[2]],"blocks":[[0,1],[0,1,2]]}"#,
    )
    .unwrap();
    let o = run_in(d, &["--json", "verify", "pbd", "--K", "2,3", "bad.json"]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["verdict"], "fail");
    assert_eq!(v["report"]["violations"][0]["axiom"], "pair_repeated");

    let o = run_in(
        d,
        &[
            "--json",
            "construct",
            "corollary5",
            "--m",
            "7",
            "--t",
            "0",
            "-o",
            "x.json",
        ],
    );
    assert_eq!(code(&o), 3);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "error");
    assert_eq!(v["exit_code"], 3);

    let o = run_in(
        d,
        &["--json", "construct", "td", "--k", "4", "--q", "3", "-o", "td.json"],
    );
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["summary"]["type"], "3^4");
    assert_eq!(v["verification"][0]["report"]["verdict"], "pass");
}

#[test]
fn ingredient_directory_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ing = d.join("ingredients");
    fs::create_dir(&ing).unwrap();
    let o = ok(d, &["df", "search", "--v", "45", "--k", "5", "-o", "f45.json"]);
    assert!(o.contains("wrote f45.json"));
    ok(d, &["df", "develop", "f45.json", "-o", "ingredients/pbd_fill.json"]);

    let o = Command::new(env!("CARGO_BIN_EXE_design-forge"))
        .args(["construct", "corollary2", "--m", "11", "--t", "3", "-o", "c.json"])
        .current_dir(d)
        .env("DESIGN_FORGE_INGREDIENTS", &ing)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = RunManifest::load(&d.join("c.json.manifest.json")).unwrap();
    let fill = m.ingredients.iter().find(|r| r.role == "pbd_fill").unwrap();
    assert_eq!(fill.source, Source::File);
    assert!(fill.path.as_deref().unwrap().ends_with("pbd_fill.json"));

    // a non-BIBD supplied as pbd_fill is rejected as an ingredient
    ok(d, &["construct", "td", "--k", "3", "--q", "5", "-o", "td35.json"]);
    let o = run_in(
        d,
        &[
            "construct",
            "corollary2",
            "--m",
            "11",
            "--t",
            "3",
            "--ingredient",
            "pbd_fill=td35.json",
            "-o",
            "c2.json",
        ],
    );
    assert_eq!(code(&o), 3);
    let o = run_in(
        d,
        &[
            "construct",
            "corollary2",
            "--m",
            "11",
            "--t",
            "3",
            "--ingredient",
            "pbd_fill=nope.json",
            "-o",
            "c2.json",
        ],
    );
    assert_eq!(code(&o), 3);
    let o = run_in(
        d,
        &[
            "construct",
            "corollary2",
            "--m",
            "11",
            "--t",
            "3",
            "--ingredient",
            "gdd_uv=td35.json",
            "-o",
            "c2.json",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(!d.join("c2.json").exists());
}

#[test]
fn theorem3_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["construct", "td", "--k", "5", "--q", "4", "-o", "td54.json"]);
    ok(d, &["construct", "td", "--k", "5", "--q", "5", "-o", "td55.json"]);
    ok(d, &["construct", "projective", "--q", "4", "-o", "pg4.json"]);
    ok(
        d,
        &[
            "construct",
            "delete-point",
            "pg4.json",
            "--point",
            "0",
            "-o",
            "td54b.json",
        ],
    );
    let base = [
        "construct",
        "theorem3",
        "--ell",
        "4",
        "--m",
        "5",
        "--u",
        "4",
        "--v",
        "4",
        "--t",
        "4",
        "--K",
        "4,5",
        "--alpha",
        "4",
        "--ingredient",
        "td_master=td55.json",
        "--ingredient",
        "gdd_uv=td54.json",
        "--ingredient",
        "pbd_fill=pg4.json",
        "-o",
        "g.json",
        "--pbd-out",
        "p.json",
    ];
    // the small TD comes from the built-in shortened TD(5,4)
    ok(d, &base);
    assert_eq!(
        compute_type(&load_design(&d.join("g.json")).unwrap()).to_string(),
        "17^1 4^20"
    );
    ok(d, &["verify", "pbd", "--K", "4,5", "p.json"]);
    ok(d, &["verify", "parallel-class", "p.json"]);

    // PG(2,4) minus a point is a TD(5,4), not the TD(4,4) the small role needs
    let mut with_small: Vec<&str> = base.to_vec();
    with_small.extend(["--ingredient", "td_small=td54b.json"]);
    assert_eq!(code(&run_in(d, &with_small)), 3);

    // with one disjoint block, t = 4 exceeds m - u
    let o = run_in(
        d,
        &[
            "construct",
            "theorem1",
            "--ell",
            "4",
            "--m",
            "5",
            "--u",
            "4",
            "--v",
            "4",
            "--t",
            "4",
            "--K",
            "4,5",
            "-o",
            "h.json",
        ],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn base_constructions_and_disjoint_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["construct", "td", "--k", "4", "--q", "3", "-o", "td43.json"]);
    assert!(ok(d, &["verify", "td", "td43.json", "--k", "4"]).contains("TD(4,3)"));
    assert_eq!(code(&run_in(d, &["verify", "td", "td43.json", "--k", "3"])), 1);
    let text = ok(d, &["disjoint-blocks", "td43.json", "--exact"]);
    assert!(text.starts_with("1 pairwise-disjoint blocks (maximum)"), "{text}");
    let text = ok(d, &["disjoint-blocks", "td43.json", "--greedy"]);
    assert!(text.contains("(maximal)"), "{text}");
    assert_eq!(code(&run_in(d, &["disjoint-blocks", "td43.json", "--cap", "3"])), 2);

    ok(d, &["construct", "truncate", "td43.json", "--t", "1", "-o", "tr.json"]);
    let v: Value = serde_json::from_str(&fs::read_to_string(d.join("tr.json")).unwrap()).unwrap();
    assert_eq!(v["deleted_classes"].as_array().unwrap().len(), 2);
    ok(d, &["verify", "gdd", "--K", "3,4", "tr.json"]);

    ok(d, &["construct", "affine", "--q", "4", "-o", "ag.json"]);
    ok(d, &["verify", "pbd", "--K", "4", "ag.json"]);
    let text = ok(d, &["disjoint-blocks", "ag.json"]);
    assert!(text.starts_with("4 pairwise-disjoint"), "{text}");
}

#[test]
fn wfc_from_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["construct", "td", "--k", "3", "--q", "2", "-o", "m.json"]);
    ok(
        d,
        &[
            "construct",
            "wfc",
            "m.json",
            "--uniform",
            "3",
            "--K",
            "3",
            "-o",
            "w.json",
        ],
    );
    assert_eq!(
        compute_type(&load_design(&d.join("w.json")).unwrap()).to_string(),
        "6^3"
    );

    // per-point weights on a 2-GDD with a rule file
    fs::write(
        d.join("k4.json"),
        r#"{"n":4,"groups":[[0,1],[2,3]],"blocks":[[0,2],[0,3],[1,2],[1,3]]}"#,
    )
    .unwrap();
    fs::write(
        d.join("rules.json"),
        r#"{"K":[2],"rules":[{"type":"*","source":"builtin"}]}"#,
    )
    .unwrap();
    ok(
        d,
        &[
            "construct",
            "wfc",
            "k4.json",
            "--weights",
            "1,2,3,1",
            "--config",
            "rules.json",
            "-o",
            "w2.json",
        ],
    );
    assert_eq!(
        compute_type(&load_design(&d.join("w2.json")).unwrap()).to_string(),
        "4^1 3^1"
    );
    assert_eq!(
        code(&run_in(
            d,
            &[
                "construct",
                "wfc",
                "k4.json",
                "--weights",
                "1,0,3,1",
                "--K",
                "2",
                "-o",
                "z.json"
            ]
        )),
        2
    );
}
