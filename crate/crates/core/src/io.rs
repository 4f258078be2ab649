//! JSON persistence for designs and difference families.
//!
//! Designs are written as
//! `{"n", "groups", "blocks", "distinguished", "meta"}` with one group or
//! block per line, in canonical order, so files diff cleanly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::base::TruncatedTd;
use crate::design::Design;
use crate::difference::DifferenceFamily;
use crate::error::{Error, Result};

fn write_rows(out: &mut String, key: &str, rows: &[Vec<usize>], last: bool) {
    let _ = write!(out, "  \"{key}\": [");
    if rows.is_empty() {
        out.push(']');
    } else {
        out.push('\n');
        for (i, r) in rows.iter().enumerate() {
            let _ = write!(out, "    {}", serde_json::to_string(r).expect("integers serialize"));
            out.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ]");
    }
    out.push_str(if last { "\n" } else { ",\n" });
}

/// Canonical text of a design, with optional extra top-level row fields
/// (such as `deleted_classes`) placed before `meta`.
pub fn design_to_string_with(d: &Design, extra: &[(&str, &[Vec<usize>])]) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"n\": {},", d.n());
    write_rows(&mut out, "groups", d.groups(), false);
    write_rows(&mut out, "blocks", d.blocks(), false);
    let _ = writeln!(
        out,
        "  \"distinguished\": {},",
        serde_json::to_string(d.distinguished()).unwrap()
    );
    for (key, rows) in extra {
        write_rows(&mut out, key, rows, false);
    }
    let _ = writeln!(out, "  \"meta\": {}", serde_json::to_string(d.meta()).unwrap());
    out.push_str("}\n");
    out
}

pub fn design_to_string(d: &Design) -> String {
    design_to_string_with(d, &[])
}

pub fn save_design(d: &Design, path: &Path) -> Result<()> {
    fs::write(path, design_to_string(d))?;
    Ok(())
}

pub fn truncated_td_to_string(t: &TruncatedTd) -> String {
    design_to_string_with(&t.design, &[("deleted_classes", &t.deleted_classes)])
}

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str, required: bool) -> Result<Option<T>> {
    match obj.get(key) {
        None if required => Err(Error::schema(key, "missing")),
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::schema(key, e.to_string())),
    }
}

/// Parses and validates a design. Input need not be in canonical order;
/// the result is canonicalised (and `distinguished` remapped accordingly).
pub fn design_from_str(text: &str) -> Result<Design> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema("<root>", "expected a JSON object"))?;
    let n: usize = field(obj, "n", true)?.unwrap();
    let groups: Vec<Vec<usize>> = field(obj, "groups", true)?.unwrap();
    let blocks: Vec<Vec<usize>> = field(obj, "blocks", true)?.unwrap();
    let distinguished: Vec<usize> = field(obj, "distinguished", false)?.unwrap_or_default();
    let meta: Map<String, Value> = field(obj, "meta", false)?.unwrap_or_default();
    Ok(Design::from_parts(n, groups, blocks, distinguished, meta)?.0)
}

pub fn load_design(path: &Path) -> Result<Design> {
    let text = fs::read_to_string(path)?;
    design_from_str(&text)
}

pub fn load_difference_family(path: &Path) -> Result<DifferenceFamily> {
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema("<root>", "expected a JSON object"))?;
    Ok(DifferenceFamily {
        v: field(obj, "v", true)?.unwrap(),
        base_blocks: field(obj, "base_blocks", true)?.unwrap(),
        orbit_lengths: field(obj, "orbit_lengths", true)?.unwrap(),
        group: field(obj, "group", false)?,
    })
}

pub fn difference_family_to_string(df: &DifferenceFamily) -> String {
    let mut s = serde_json::to_string_pretty(df).expect("plain data");
    s.push('\n');
    s
}
