use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use design_forge::base::{build_affine_plane, build_projective_plane, build_td, delete_point, truncate_td};
use design_forge::design::{
    as_td, compute_type, verify_gdd, verify_gdd_structure, verify_parallel_class, verify_pbd, BlockSizeSet, Design,
};
use design_forge::difference::{develop_difference_family, search_difference_family};
use design_forge::disjoint::{
    find_disjoint_blocks_exact, find_disjoint_blocks_greedy, lemma4_bound, DEFAULT_EXACT_CAP,
};
use design_forge::io::{
    design_to_string, difference_family_to_string, load_design, load_difference_family, truncated_td_to_string,
};
use design_forge::manifest::{sha256_hex, CheckRecord, IngredientRecord, OutputRecord, RunManifest, Source};
use design_forge::pipeline::{
    corollary2_ingredients, corollary2_params, corollary5_ingredients, corollary5_params, theorem1, theorem3,
    Ingredients, PipelineResult, Role, Theorem1Params, Theorem3Params,
};
use design_forge::wfc::{apply_wfc, IngredientSupplier, RuleSupplier, SupplierConfig, TdResolver, Weighting};
use design_forge::{Error, Result, VerificationReport};

/// Environment variable naming a directory of `<role>.json` ingredient files.
const INGREDIENT_DIR_VAR: &str = "DESIGN_FORGE_INGREDIENTS";

#[derive(Parser)]
#[command(
    name = "design-forge",
    version,
    about = "Construct and verify group divisible designs"
)]
struct Cli {
    /// Print a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a design, self-verify it and write it with a run manifest.
    #[command(subcommand)]
    Construct(Construct),
    /// Check a design file against the design axioms.
    #[command(subcommand)]
    Verify(Verify),
    /// Find pairwise-disjoint blocks of a design.
    DisjointBlocks(DisjointArgs),
    /// Number of disjoint blocks every TD(l,u) is guaranteed to contain.
    Bound {
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        u: usize,
    },
    /// Difference families.
    #[command(subcommand)]
    Df(Df),
    /// Re-run the invocation recorded in a manifest and compare the outputs.
    Replay { manifest: PathBuf },
}

#[derive(Args, Clone)]
struct Out {
    /// Output design file; the manifest goes to `<output>.manifest.json`.
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Subcommand)]
enum Construct {
    /// TD(k,q) from the linear Latin squares over GF(q).
    Td {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        out: Out,
    },
    /// AG(2,q) as a (q^2,q,1)-BIBD.
    Affine {
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        out: Out,
    },
    /// PG(2,q) as a (q^2+q+1,q+1,1)-BIBD.
    Projective {
        #[arg(long)]
        q: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Delete a point from a BIBD, leaving a uniform GDD.
    DeletePoint {
        input: PathBuf,
        #[arg(long)]
        point: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Keep the first t points of the last group of a TD.
    Truncate {
        input: PathBuf,
        #[arg(long)]
        t: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Weight a master GDD and fill each block with an ingredient GDD.
    Wfc(WfcArgs),
    /// PBD with a parallel class, regrouped into a GDD (one disjoint block).
    Theorem1(TheoremArgs),
    /// As theorem1, using `alpha` disjoint blocks of the small TD.
    Theorem3(Theorem3Args),
    /// 5-GDD of type 5^(4m) (4t+1)^1.
    Corollary2(CorollaryArgs),
    /// {7,8}-GDD of type 7^(7m) (7t+1)^1; needs a (7m+1,7,1)-BIBD.
    Corollary5(CorollaryArgs),
}

#[derive(Args)]
struct WfcArgs {
    master: PathBuf,
    /// Weight of every point, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required_unless_present = "uniform",
        conflicts_with = "uniform"
    )]
    weights: Option<Vec<usize>>,
    /// The same weight for every point.
    #[arg(long)]
    uniform: Option<usize>,
    /// Allowed block sizes, e.g. 4,5.
    #[arg(long = "K", required_unless_present = "config", conflicts_with = "config")]
    k: Option<BlockSizeSet>,
    /// Ingredient rules as JSON; without it every block gets a built-in TD.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    out: Out,
}

#[derive(Args)]
struct IngredientArgs {
    /// `role=path`, role one of td_master, td_small, gdd_uv, pbd_fill.
    #[arg(long = "ingredient", value_parser = parse_ingredient)]
    ingredients: Vec<(Role, PathBuf)>,
    /// Indices of pairwise-disjoint blocks of td_small.
    #[arg(long, value_delimiter = ',')]
    disjoint: Option<Vec<usize>>,
}

#[derive(Args)]
struct PipelineOut {
    #[command(flatten)]
    out: Out,
    /// Also write the intermediate PBD (with its distinguished block).
    #[arg(long)]
    pbd_out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoremArgs {
    #[arg(long)]
    ell: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    u: usize,
    #[arg(long)]
    v: usize,
    #[arg(long)]
    t: usize,
    #[arg(long = "K")]
    k: BlockSizeSet,
    #[command(flatten)]
    ingredients: IngredientArgs,
    #[command(flatten)]
    out: PipelineOut,
}

#[derive(Args)]
struct Theorem3Args {
    #[command(flatten)]
    base: TheoremArgs,
    #[arg(long)]
    alpha: usize,
}

#[derive(Args)]
struct CorollaryArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    t: usize,
    #[command(flatten)]
    ingredients: IngredientArgs,
    #[command(flatten)]
    out: PipelineOut,
}

#[derive(Subcommand)]
enum Verify {
    /// K-GDD axioms.
    Gdd {
        #[arg(long = "K")]
        k: BlockSizeSet,
        input: PathBuf,
    },
    /// (v,K)-PBD axioms.
    Pbd {
        #[arg(long = "K")]
        k: BlockSizeSet,
        input: PathBuf,
    },
    /// Transversal design: uniform groups, every block meets every group.
    Td {
        input: PathBuf,
        /// Required number of groups.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Blocks partitioning the point set.
    ParallelClass {
        input: PathBuf,
        /// Block indices; defaults to the `parallel_class` entry of the file's meta.
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<usize>>,
    },
}

#[derive(Args)]
struct DisjointArgs {
    input: PathBuf,
    /// Maximum set by branch and bound (the default).
    #[arg(long, conflicts_with = "greedy")]
    exact: bool,
    /// Maximal set by a single greedy scan.
    #[arg(long)]
    greedy: bool,
    /// Largest design (in blocks) the exact search accepts.
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    cap: usize,
}

#[derive(Subcommand)]
enum Df {
    /// Develop a family file into a BIBD.
    Develop {
        input: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Search for a (v,k,1) difference family.
    Search {
        #[arg(long)]
        v: usize,
        #[arg(long)]
        k: usize,
        /// Write the family here (with a manifest) instead of printing it.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

fn parse_ingredient(s: &str) -> std::result::Result<(Role, PathBuf), String> {
    let (role, path) = s.split_once('=').ok_or("expected role=path")?;
    let role = Role::from_name(role.trim()).ok_or_else(|| format!("unknown role `{role}`"))?;
    Ok((role, PathBuf::from(path)))
}

/// A verified construction, ready to be written.
struct Product {
    command: String,
    parameters: Value,
    ingredients: Vec<IngredientRecord>,
    checks: Vec<CheckRecord>,
    /// Output files; the first one is primary and carries the manifest.
    files: Vec<(PathBuf, String)>,
    summary: Value,
}

impl Product {
    fn new(command: &str, parameters: Value) -> Self {
        Product {
            command: command.to_string(),
            parameters,
            ingredients: Vec::new(),
            checks: Vec::new(),
            files: Vec::new(),
            summary: Value::Null,
        }
    }

    fn check(&mut self, name: &str, report: VerificationReport) {
        self.checks.push(CheckRecord {
            check: name.to_string(),
            report,
        });
    }

    fn design(&mut self, path: &Path, d: &Design) {
        self.files.push((path.to_path_buf(), design_to_string(d)));
        if self.summary.is_null() {
            self.summary = summarize(d);
        }
    }
}

fn summarize(d: &Design) -> Value {
    json!({
        "points": d.n(),
        "blocks": d.blocks().len(),
        "groups": d.groups().len(),
        "type": compute_type(d).to_string(),
    })
}

fn file_record(role: &str, path: &Path) -> Result<IngredientRecord> {
    Ok(IngredientRecord {
        role: role.to_string(),
        source: Source::File,
        path: Some(path.display().to_string()),
        sha256: sha256_hex(&fs::read(path)?),
    })
}

fn builtin_record(role: &str, d: &Design) -> IngredientRecord {
    IngredientRecord {
        role: role.to_string(),
        source: Source::Builtin,
        path: None,
        sha256: sha256_hex(design_to_string(d).as_bytes()),
    }
}

/// Input design given on the command line; unreadable files are argument errors.
fn load_input(p: &mut Product, path: &Path) -> Result<Design> {
    let d = load_design(path)?;
    p.ingredients.push(file_record("input", path)?);
    Ok(d)
}

/// Resolves ingredient files: `--ingredient` first, then the ingredient
/// directory. Unreadable ingredients are reported as invalid ingredients.
struct Loader {
    explicit: Vec<(Role, PathBuf)>,
    dir: Option<PathBuf>,
}

impl Loader {
    fn new(args: &IngredientArgs) -> Self {
        Loader {
            explicit: args.ingredients.clone(),
            dir: std::env::var_os(INGREDIENT_DIR_VAR).map(PathBuf::from),
        }
    }

    fn path(&self, role: Role) -> Option<PathBuf> {
        if let Some((_, p)) = self.explicit.iter().rev().find(|(r, _)| *r == role) {
            return Some(p.clone());
        }
        let p = self.dir.as_ref()?.join(format!("{}.json", role.name()));
        p.is_file().then_some(p)
    }

    fn load(&self, role: Role) -> Result<Option<(Design, IngredientRecord)>> {
        let Some(path) = self.path(role) else {
            return Ok(None);
        };
        let invalid = |e: Error| Error::IngredientInvalid(format!("{}: {}: {e}", role.name(), path.display()));
        let d = load_design(&path).map_err(invalid)?;
        let rec = file_record(role.name(), &path).map_err(invalid)?;
        Ok(Some((d, rec)))
    }
}

fn pipeline_product(
    name: &str,
    params: Value,
    k: &BlockSizeSet,
    ingredients: Vec<IngredientRecord>,
    r: &PipelineResult,
    out: &PipelineOut,
) -> Product {
    let mut p = Product::new(name, params);
    p.ingredients = ingredients;
    p.check("gdd", verify_gdd(&r.gdd, k));
    p.check("pbd", verify_pbd(&r.pbd, k));
    p.check("parallel_class", verify_parallel_class(&r.pbd, &r.parallel_class));
    p.design(&out.out.output, &r.gdd);
    if let Some(path) = &out.pbd_out {
        p.files.push((path.clone(), design_to_string(&r.pbd)));
    }
    p
}

/// Fills every role from a file if one is given, otherwise from a built-in.
fn theorem_ingredients(p: &Theorem1Params, args: &IngredientArgs) -> Result<(Ingredients, Vec<IngredientRecord>)> {
    let loader = Loader::new(args);
    let mut ing = Ingredients::default();
    let mut records = Vec::new();
    for role in Role::ALL {
        match loader.load(role)? {
            Some((d, rec)) => {
                ing.set(role, d);
                records.push(rec);
            }
            None => {
                ing.fill_builtin(role, p)?;
                records.push(builtin_record(role.name(), ing.get(role).expect("just filled")));
            }
        }
    }
    if let Some(idx) = &args.disjoint {
        ing.td_small_disjoint = Some(idx.clone());
    }
    Ok((ing, records))
}

fn records_for(ing: &Ingredients, files: Vec<IngredientRecord>) -> Vec<IngredientRecord> {
    Role::ALL
        .into_iter()
        .map(|role| {
            files
                .iter()
                .find(|r| r.role == role.name())
                .cloned()
                .unwrap_or_else(|| builtin_record(role.name(), ing.get(role).expect("complete ingredients")))
        })
        .collect()
}

fn only_roles(args: &IngredientArgs, allowed: &[Role], command: &str) -> Result<()> {
    if let Some((role, _)) = args.ingredients.iter().find(|(r, _)| !allowed.contains(r)) {
        return Err(Error::InvalidInput(format!(
            "{command} fixes the {} ingredient",
            role.name()
        )));
    }
    if args.disjoint.is_some() {
        return Err(Error::InvalidInput(format!(
            "{command} fixes the disjoint blocks of td_small"
        )));
    }
    Ok(())
}

fn theorem_params(a: &TheoremArgs) -> Theorem1Params {
    Theorem1Params {
        ell: a.ell,
        m: a.m,
        u: a.u,
        v: a.v,
        t: a.t,
        k: a.k.clone(),
    }
}

fn k_json(k: &BlockSizeSet) -> Value {
    json!(k.iter().collect::<Vec<_>>())
}

fn construct(c: &Construct) -> Result<Product> {
    match c {
        Construct::Td { k, q, out } => {
            let d = build_td(*k, *q)?;
            let mut p = Product::new("construct td", json!({"k": k, "q": q}));
            p.check("gdd", verify_gdd(&d, &BlockSizeSet::single(*k)?));
            p.design(&out.output, &d);
            Ok(p)
        }
        Construct::Affine { q, out } => {
            let d = build_affine_plane(*q)?.design;
            let mut p = Product::new("construct affine", json!({"q": q}));
            p.check("pbd", verify_pbd(&d, &BlockSizeSet::single(*q)?));
            p.design(&out.output, &d);
            Ok(p)
        }
        Construct::Projective { q, out } => {
            let d = build_projective_plane(*q)?;
            let mut p = Product::new("construct projective", json!({"q": q}));
            p.check("pbd", verify_pbd(&d, &BlockSizeSet::single(q + 1)?));
            p.design(&out.output, &d);
            Ok(p)
        }
        Construct::DeletePoint { input, point, out } => {
            let mut p = Product::new("construct delete-point", json!({"point": point}));
            let src = load_input(&mut p, input)?;
            let d = delete_point(&src, *point)?;
            let k = src.block_sizes().into_iter().next().expect("a BIBD has blocks");
            p.check("gdd", verify_gdd(&d, &BlockSizeSet::single(k)?));
            p.design(&out.output, &d);
            Ok(p)
        }
        Construct::Truncate { input, t, out } => {
            let mut p = Product::new("construct truncate", json!({"t": t}));
            let src = load_input(&mut p, input)?;
            let tr = truncate_td(&src, *t)?;
            let k = BlockSizeSet::new([tr.ell, tr.ell + 1])?;
            p.check("gdd", verify_gdd(&tr.design, &k));
            p.summary = summarize(&tr.design);
            p.files.push((out.output.clone(), truncated_td_to_string(&tr)));
            Ok(p)
        }
        Construct::Wfc(a) => construct_wfc(a),
        Construct::Theorem1(a) => {
            let params = theorem_params(a);
            params.check(1)?;
            let (ing, records) = theorem_ingredients(&params, &a.ingredients)?;
            let r = theorem1(&params, &ing)?;
            let json = serde_json::to_value(&params).expect("plain data");
            Ok(pipeline_product("construct theorem1", json, &a.k, records, &r, &a.out))
        }
        Construct::Theorem3(a) => {
            let params = Theorem3Params {
                base: theorem_params(&a.base),
                alpha: a.alpha,
            };
            params.base.check(a.alpha)?;
            let (ing, records) = theorem_ingredients(&params.base, &a.base.ingredients)?;
            let r = theorem3(&params, &ing)?;
            let mut json = serde_json::to_value(&params).expect("plain data");
            if let Some(idx) = &ing.td_small_disjoint {
                json["td_small_disjoint"] = json!(idx);
            }
            Ok(pipeline_product(
                "construct theorem3",
                json,
                &a.base.k,
                records,
                &r,
                &a.base.out,
            ))
        }
        Construct::Corollary2(a) => {
            let params = corollary2_params(a.m, a.t)?;
            only_roles(&a.ingredients, &[Role::TdMaster, Role::PbdFill], "corollary2")?;
            let loader = Loader::new(&a.ingredients);
            let mut supplied = Ingredients::default();
            let mut files = Vec::new();
            for role in [Role::TdMaster, Role::PbdFill] {
                if let Some((d, rec)) = loader.load(role)? {
                    supplied.set(role, d);
                    files.push(rec);
                }
            }
            let ing = corollary2_ingredients(a.m, supplied)?;
            let r = theorem1(&params, &ing)?;
            let records = records_for(&ing, files);
            let json = json!({"m": a.m, "t": a.t, "K": k_json(&params.k)});
            Ok(pipeline_product(
                "construct corollary2",
                json,
                &params.k,
                records,
                &r,
                &a.out,
            ))
        }
        Construct::Corollary5(a) => {
            let params = corollary5_params(a.m, a.t)?;
            only_roles(&a.ingredients, &[Role::TdMaster, Role::PbdFill], "corollary5")?;
            let loader = Loader::new(&a.ingredients);
            let mut files = Vec::new();
            let mut take = |role| -> Result<Option<Design>> {
                Ok(loader.load(role)?.map(|(d, rec)| {
                    files.push(rec);
                    d
                }))
            };
            let bibd = take(Role::PbdFill)?;
            let td_master = take(Role::TdMaster)?;
            let ing = corollary5_ingredients(a.m, bibd, td_master)?;
            let r = theorem3(&params, &ing)?;
            let records = records_for(&ing, files);
            let k = &params.base.k;
            let json = json!({"m": a.m, "t": a.t, "K": k_json(k), "alpha": params.alpha});
            Ok(pipeline_product("construct corollary5", json, k, records, &r, &a.out))
        }
    }
}

fn construct_wfc(a: &WfcArgs) -> Result<Product> {
    let mut p = Product::new("construct wfc", Value::Null);
    let master = load_input(&mut p, &a.master)?;
    let w = match (&a.weights, a.uniform) {
        (Some(ws), _) => Weighting::new(ws.clone())?,
        (None, Some(u)) => Weighting::uniform(master.n(), u)?,
        (None, None) => unreachable!("clap requires one of the weight options"),
    };
    let supplier: Box<dyn IngredientSupplier> = match (&a.config, &a.k) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)?;
            let config: SupplierConfig =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            p.ingredients.push(file_record("config", path)?);
            let base = path.parent().unwrap_or(Path::new("."));
            for rule in config.rules.iter().filter(|r| r.source != "builtin") {
                p.ingredients.push(file_record(
                    &format!("rule {}", rule.type_pattern),
                    &base.join(&rule.source),
                )?);
            }
            Box::new(RuleSupplier::from_config(&config, base)?)
        }
        (None, Some(k)) => Box::new(TdResolver::new(k.clone())),
        (None, None) => unreachable!("clap requires --K or --config"),
    };
    let k = supplier.block_sizes().clone();
    p.parameters = json!({"weights": w.as_slice(), "K": k_json(&k)});
    let d = apply_wfc(&master, &w, supplier.as_ref())?;
    p.check("gdd", verify_gdd(&d, &k));
    p.design(&a.out.output, &d);
    Ok(p)
}

fn df_develop(input: &Path, out: &Out) -> Result<Product> {
    let mut p = Product::new("df develop", Value::Null);
    let df = load_difference_family(input)?;
    p.ingredients.push(file_record("input", input)?);
    p.parameters = json!({"v": df.v});
    let d = develop_difference_family(&df)?;
    let k = BlockSizeSet::new(d.block_sizes())?;
    p.check("pbd", verify_pbd(&d, &k));
    p.design(&out.output, &d);
    Ok(p)
}

fn df_search(v: usize, k: usize, output: &Path) -> Result<Product> {
    let df = search_difference_family(v, k)?;
    let d = develop_difference_family(&df)?;
    let mut p = Product::new("df search", json!({"v": v, "k": k}));
    p.check("pbd", verify_pbd(&d, &BlockSizeSet::single(k)?));
    p.summary = json!({"family": df, "points": d.n(), "blocks": d.blocks().len()});
    p.files.push((output.to_path_buf(), difference_family_to_string(&df)));
    Ok(p)
}

/// The construction a command performs, if it performs one.
fn product_of(cmd: &Command) -> Option<Result<Product>> {
    match cmd {
        Command::Construct(c) => Some(construct(c)),
        Command::Df(Df::Develop { input, out }) => Some(df_develop(input, out)),
        Command::Df(Df::Search {
            v,
            k,
            output: Some(out),
        }) => Some(df_search(*v, *k, out)),
        _ => None,
    }
}

/// What a successful command reports.
struct Outcome {
    code: u8,
    text: String,
    json: Value,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Outcome { code: 0, text, json }
    }

    fn verdict(report: &VerificationReport, text: String, mut json: Value) -> Self {
        json["report"] = serde_json::to_value(report).expect("plain data");
        Outcome {
            code: if report.passed() { 0 } else { 1 },
            text,
            json,
        }
    }
}

fn first_failure(checks: &[CheckRecord]) -> Option<&CheckRecord> {
    checks.iter().find(|c| !c.report.passed())
}

fn write_product(product: Product, argv: Vec<String>) -> Result<Outcome> {
    if let Some(c) = first_failure(&product.checks) {
        return Err(Error::VerificationFailed(Box::new(c.report.clone())));
    }
    let mut manifest = RunManifest::new(product.command.clone(), argv, product.parameters);
    manifest.ingredients = product.ingredients;
    manifest.verification = product.checks;
    for (path, text) in &product.files {
        fs::write(path, text)?;
        manifest.outputs.push(OutputRecord {
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
    }
    manifest.seal();
    let primary = &product.files[0].0;
    let manifest_path = RunManifest::path_for(primary);
    fs::write(&manifest_path, manifest.to_json())?;

    let mut text = String::new();
    for (path, _) in &product.files {
        text.push_str(&format!("wrote {}\n", path.display()));
    }
    if let Some(ty) = product.summary.get("type").and_then(Value::as_str) {
        text.push_str(&format!(
            "type {ty}, {} points, {} blocks\n",
            product.summary["points"], product.summary["blocks"]
        ));
    }
    text.push_str(&format!("manifest {}", manifest_path.display()));
    let json = json!({
        "status": "ok",
        "command": product.command,
        "outputs": manifest.outputs,
        "manifest": manifest_path.display().to_string(),
        "verification": manifest.verification,
        "summary": product.summary,
    });
    Ok(Outcome::ok(text, json))
}

fn verify(v: &Verify) -> Result<Outcome> {
    match v {
        Verify::Gdd { k, input } | Verify::Pbd { k, input } => {
            let d = load_design(input)?;
            let (name, report) = match v {
                Verify::Gdd { .. } => ("gdd", verify_gdd(&d, k)),
                _ => ("pbd", verify_pbd(&d, k)),
            };
            let ty = compute_type(&d).to_string();
            let text = format!(
                "{name}: {report}\ntype {ty}, {} points, {} blocks",
                d.n(),
                d.blocks().len()
            );
            let json = json!({"check": name, "K": k_json(k), "type": ty});
            Ok(Outcome::verdict(&report, text, json))
        }
        Verify::Td { input, k } => {
            let d = load_design(input)?;
            let report = verify_gdd_structure(&d);
            let found = as_td(&d);
            let ok = found.is_some_and(|(gk, _)| k.is_none_or(|want| want == gk));
            let text = match found {
                Some((gk, m)) if ok => format!("td: pass, TD({gk},{m})"),
                Some((gk, m)) => format!("td: fail, TD({gk},{m}) has {gk} groups, not {}", k.unwrap()),
                None => format!(
                    "td: fail, not a transversal design (gdd check: {report}, type {})",
                    compute_type(&d)
                ),
            };
            let json = json!({
                "check": "td",
                "td": found.map(|(k, m)| json!({"k": k, "m": m})),
                "verdict": if ok { "pass" } else { "fail" },
                "report": report,
            });
            Ok(Outcome {
                code: if ok { 0 } else { 1 },
                text,
                json,
            })
        }
        Verify::ParallelClass { input, blocks } => {
            let d = load_design(input)?;
            let class: Vec<usize> = match blocks {
                Some(b) => b.clone(),
                None => d
                    .meta()
                    .get("parallel_class")
                    .and_then(|v| serde_json::from_value(v.clone()).ok())
                    .ok_or_else(|| Error::InvalidInput("no --blocks given and no parallel_class in meta".into()))?,
            };
            let report = verify_parallel_class(&d, &class);
            let text = format!("parallel-class ({} blocks): {report}", class.len());
            Ok(Outcome::verdict(
                &report,
                text,
                json!({"check": "parallel_class", "blocks": class}),
            ))
        }
    }
}

fn replay(path: &Path) -> Result<Outcome> {
    let recorded = RunManifest::load(path)?;
    if recorded.compute_digest() != recorded.digest {
        return Err(Error::Parse(format!(
            "{}: digest does not match contents",
            path.display()
        )));
    }
    let cli = Cli::try_parse_from(std::iter::once("design-forge".to_string()).chain(recorded.argv.iter().cloned()))
        .map_err(|e| Error::InvalidInput(format!("recorded arguments no longer parse: {e}")))?;
    let product = product_of(&cli.command)
        .ok_or_else(|| Error::InvalidInput("manifest does not record a construction".into()))??;
    for (old, new) in recorded.ingredients.iter().zip(&product.ingredients) {
        if old.sha256 != new.sha256 {
            return Err(Error::IngredientInvalid(format!(
                "{} changed since the recorded run ({})",
                old.role,
                old.path.as_deref().unwrap_or("builtin")
            )));
        }
    }
    let mut differing = Vec::new();
    for (rec, (file, text)) in recorded.outputs.iter().zip(&product.files) {
        if rec.sha256 != sha256_hex(text.as_bytes()) {
            differing.push(file.display().to_string());
        }
    }
    if recorded.outputs.len() != product.files.len() {
        differing.push("<output count>".into());
    }
    let identical = differing.is_empty();
    let text = if identical {
        format!("replay: {} output(s) identical", recorded.outputs.len())
    } else {
        format!("replay: outputs differ: {}", differing.join(", "))
    };
    let json = json!({"status": if identical { "ok" } else { "differs" }, "differing": differing});
    Ok(Outcome {
        code: if identical { 0 } else { 1 },
        text,
        json,
    })
}

fn run(cli: &Cli, argv: Vec<String>) -> Result<Outcome> {
    if let Some(product) = product_of(&cli.command) {
        return write_product(product?, argv);
    }
    match &cli.command {
        Command::Verify(v) => verify(v),
        Command::DisjointBlocks(a) => {
            let d = load_design(&a.input)?;
            let set = if a.greedy {
                find_disjoint_blocks_greedy(&d)
            } else {
                find_disjoint_blocks_exact(&d, a.cap)?
            };
            let kind = if set.exact { "maximum" } else { "maximal" };
            let text = format!("{} pairwise-disjoint blocks ({kind}): {:?}", set.len(), set.blocks);
            Ok(Outcome::ok(text, json!(set)))
        }
        Command::Bound { ell, u } => {
            let b = lemma4_bound(*ell, *u)
                .ok_or_else(|| Error::InvalidInput(format!("need l, u >= 2, got l = {ell}, u = {u}")))?;
            Ok(Outcome::ok(b.to_string(), json!({"ell": ell, "u": u, "bound": b})))
        }
        Command::Df(Df::Search { v, k, output: None }) => {
            let df = search_difference_family(*v, *k)?;
            let text = difference_family_to_string(&df).trim_end().to_string();
            Ok(Outcome::ok(text, json!(df)))
        }
        Command::Replay { manifest } => replay(manifest),
        Command::Construct(_) | Command::Df(_) => unreachable!("handled as products"),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(&cli, argv) {
        Ok(outcome) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&outcome.json).expect("plain data"));
            } else {
                println!("{}", outcome.text);
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            if cli.json {
                let mut report = json!({"status": "error", "exit_code": code, "error": e.to_string()});
                if let Error::VerificationFailed(r) = &e {
                    report["report"] = json!(r);
                }
                println!("{}", serde_json::to_string_pretty(&report).expect("plain data"));
            }
            ExitCode::from(code)
        }
    }
}
