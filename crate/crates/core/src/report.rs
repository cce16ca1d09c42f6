//! Report documents and plot-ready tables.
//!
//! JSON output is deterministic: struct fields keep declaration order, maps
//! are sorted, and floats are printed in shortest round-trip form. Tables
//! render percentages to one decimal, rounding half away from zero; exact
//! fractions are rounded with integer arithmetic.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{Fraction, GroupFairnessReport, GroupLabel};
use crate::individual::IndividualFairnessReport;
use crate::oracle::OracleResult;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "report", rename_all = "snake_case")]
pub enum Payload {
    Individual(IndividualFairnessReport),
    Group(GroupFairnessReport),
    Oracle(OracleResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReportEnvelope {
    pub tool_version: String,
    /// Input role → `sha256:<hex>` of the file contents.
    pub input_digests: BTreeMap<String, String>,
    pub config: serde_json::Value,
    /// Seconds since the Unix epoch, only when supplied by the caller.
    pub timestamp: Option<u64>,
    pub payload: Payload,
}

impl AuditReportEnvelope {
    pub fn new(payload: Payload, config: serde_json::Value) -> Self {
        AuditReportEnvelope {
            tool_version: TOOL_VERSION.to_string(),
            input_digests: BTreeMap::new(),
            config,
            timestamp: None,
            payload,
        }
    }

    pub fn with_digest(mut self, role: impl Into<String>, digest: String) -> Self {
        self.input_digests.insert(role.into(), digest);
        self
    }
}

pub fn sha256_digest(mut reader: impl Read) -> std::io::Result<String> {
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("sha256:{}", hex::encode(hasher.finalize())))
}

pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    sha256_digest(f).map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_envelope(text: &str) -> Result<AuditReportEnvelope> {
    Ok(serde_json::from_str(text)?)
}

/// A named table: `key=value` preamble lines, a header, and rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub preamble: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            preamble: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    /// CSV text. Preamble entries become leading `# key=value` lines.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.preamble {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Manifest(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Manifest(format!("csv: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One-decimal percentage, half away from zero.
pub fn percent_f64(x: f64) -> String {
    let tenths = (x * 1000.0).round() as i64;
    let sign = if tenths < 0 { "-" } else { "" };
    let t = tenths.unsigned_abs();
    format!("{sign}{}.{}", t / 10, t % 10)
}

pub fn percent_exact(f: Fraction) -> String {
    let t = f.per_mille_rounded();
    format!("{}.{}", t / 10, t % 10)
}

/// Columns `image_id, text_distance, sim_gap, exact_bound`; the preamble
/// carries the empirical α (the slope of the envelope line on the scatter).
pub fn emit_scatter_table(report: &IndividualFairnessReport) -> Table {
    let mut t = Table::new("scatter", &["image_id", "text_distance", "sim_gap", "exact_bound"]);
    t.preamble.push(("alpha_empirical".into(), opt_num(report.alpha_empirical)));
    t.preamble.push(("alpha_method".into(), report.alpha_method.clone()));
    for a in &report.audits {
        t.rows.push(vec![a.image_id.clone(), num(a.text_distance), num(a.sim_gap), num(a.exact_bound)]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotFlag {
    Pivot,
    Amplified,
    Mitigated,
    Unchanged,
    Undefined,
}

impl PivotFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PivotFlag::Pivot => "pivot",
            PivotFlag::Amplified => "amplified",
            PivotFlag::Mitigated => "mitigated",
            PivotFlag::Unchanged => "unchanged",
            PivotFlag::Undefined => "undefined",
        }
    }
}

#[derive(Clone, Copy)]
enum DispValue {
    Exact(Fraction),
    Approx(f64),
}

impl DispValue {
    fn cmp(self, other: DispValue) -> std::cmp::Ordering {
        match (self, other) {
            (DispValue::Exact(a), DispValue::Exact(b)) => a.cmp(&b),
            (a, b) => a.value().total_cmp(&b.value()),
        }
    }

    fn value(self) -> f64 {
        match self {
            DispValue::Exact(f) => f.value(),
            DispValue::Approx(x) => x,
        }
    }

    fn percent(self) -> String {
        match self {
            DispValue::Exact(f) => percent_exact(f),
            DispValue::Approx(x) => percent_f64(x),
        }
    }
}

/// Compares a language's disparity with the pivot language's.
pub fn pivot_flag(is_pivot: bool, value: Option<f64>, pivot: Option<f64>) -> PivotFlag {
    flag_for(is_pivot, value.map(DispValue::Approx), pivot.map(DispValue::Approx))
}

fn flag_for(is_pivot: bool, value: Option<DispValue>, pivot: Option<DispValue>) -> PivotFlag {
    if is_pivot {
        return PivotFlag::Pivot;
    }
    match (value, pivot) {
        (Some(v), Some(p)) => match v.cmp(p) {
            std::cmp::Ordering::Greater => PivotFlag::Amplified,
            std::cmp::Ordering::Less => PivotFlag::Mitigated,
            std::cmp::Ordering::Equal => PivotFlag::Unchanged,
        },
        _ => PivotFlag::Undefined,
    }
}

fn stratum_name(s: Option<&GroupLabel>) -> String {
    s.map(|g| g.value.clone()).unwrap_or_else(|| "all".into())
}

/// Accuracy, disparity (with amplified/mitigated flags against `pivot`),
/// gap-matrix and decomposition-bound tables.
pub fn emit_group_tables(report: &GroupFairnessReport, pivot: &str) -> Result<Vec<Table>> {
    if !report.languages.iter().any(|l| l == pivot) {
        return Err(Error::Pivot(pivot.to_string()));
    }

    let mut acc = Table::new("accuracy", &["language", "stratum", "group", "correct", "total", "accuracy_pct"]);
    for l in &report.languages {
        let r = &report.acc_by_lang[l];
        acc.rows.push(vec![
            l.clone(),
            "all".into(),
            "all".into(),
            r.correct.to_string(),
            r.total.to_string(),
            r.fraction().map(percent_exact).unwrap_or_default(),
        ]);
    }
    for e in &report.acc_by_lang_group {
        acc.rows.push(vec![
            e.language.clone(),
            stratum_name(e.stratum.as_ref()),
            e.group.to_string(),
            e.rate.correct.to_string(),
            e.rate.total.to_string(),
            e.rate.fraction().map(percent_exact).unwrap_or_default(),
        ]);
    }

    let rate = |lang: &str, stratum: Option<&GroupLabel>, g: &GroupLabel| {
        report
            .acc_by_lang_group
            .iter()
            .find(|e| e.language == lang && e.stratum.as_ref() == stratum && &e.group == g)
            .and_then(|e| e.rate.fraction())
    };

    let mut disp = Table::new(
        "disp",
        &[
            "language",
            "stratum",
            "group_a",
            "group_b",
            "acc_a_pct",
            "acc_b_pct",
            "disp_pct",
            "pivot_disp_pct",
            "flag",
            "note",
        ],
    );
    disp.preamble.push(("pivot".into(), pivot.to_string()));
    for d in &report.disp_by_lang {
        let here = d.exact.map(DispValue::Exact);
        let there =
            report.disp_entry(pivot, d.stratum.as_ref(), &d.a, &d.b).and_then(|p| p.exact).map(DispValue::Exact);
        disp.rows.push(vec![
            d.language.clone(),
            stratum_name(d.stratum.as_ref()),
            d.a.to_string(),
            d.b.to_string(),
            rate(&d.language, d.stratum.as_ref(), &d.a).map(percent_exact).unwrap_or_default(),
            rate(&d.language, d.stratum.as_ref(), &d.b).map(percent_exact).unwrap_or_default(),
            here.map(DispValue::percent).unwrap_or_default(),
            there.map(DispValue::percent).unwrap_or_default(),
            flag_for(d.language == pivot, here, there).as_str().into(),
            d.undefined_reason.clone().unwrap_or_default(),
        ]);
    }
    for a in &report.average_disp {
        let here = a.disp.map(DispValue::Approx);
        let there = report
            .average_disp
            .iter()
            .find(|p| p.language == pivot && p.a == a.a && p.b == a.b && p.stratify_by == a.stratify_by)
            .and_then(|p| p.disp)
            .map(DispValue::Approx);
        disp.rows.push(vec![
            a.language.clone(),
            "Average".into(),
            a.a.to_string(),
            a.b.to_string(),
            a.acc_a.map(percent_f64).unwrap_or_default(),
            a.acc_b.map(percent_f64).unwrap_or_default(),
            here.map(DispValue::percent).unwrap_or_default(),
            there.map(DispValue::percent).unwrap_or_default(),
            flag_for(a.language == pivot, here, there).as_str().into(),
            a.undefined_reason.clone().unwrap_or_default(),
        ]);
    }

    let mut gap = Table::new("gap", &["lang_a", "lang_b", "gap", "gap_pct"]);
    for g in &report.gap_matrix {
        gap.rows.push(vec![g.lang_a.clone(), g.lang_b.clone(), num(g.gap), percent_exact(g.exact)]);
    }

    let mut prop1 =
        Table::new("prop1", &["lang_a", "lang_b", "group_a", "group_b", "p_b", "p_a", "lhs", "rhs", "holds"]);
    for c in &report.prop1_checks {
        prop1.rows.push(vec![
            c.lang_a.clone(),
            c.lang_b.clone(),
            c.a.to_string(),
            c.b.to_string(),
            num(c.p_b),
            num(c.p_a),
            num(c.lhs),
            num(c.rhs),
            c.holds.to_string(),
        ]);
    }

    Ok(vec![acc, disp, gap, prop1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{run_group_audit, OutcomeSet, Taxonomy};
    use crate::individual::{run_individual_audit, GroundedTriple};
    use crate::math::Vector;

    fn individual() -> IndividualFairnessReport {
        let v = |x: &[f64]| Vector::new(x.to_vec()).unwrap();
        let triples: Vec<GroundedTriple> = (0..3)
            .map(|i| {
                let x = i as f64 + 1.0;
                let texts =
                    BTreeMap::from([("en".to_string(), v(&[x, 1.0, 0.3])), ("de".to_string(), v(&[x, 1.1, 0.2 * x]))]);
                GroundedTriple::new(format!("img_{i}"), v(&[1.0, x, 0.5]), texts, None).unwrap()
            })
            .collect();
        run_individual_audit(&triples, "en", "de").unwrap()
    }

    fn group() -> GroupFairnessReport {
        let tax = Taxonomy::new().with_dimension("gender", ["female", "male"]).unwrap();
        let mut s = OutcomeSet::new(tax);
        let f = GroupLabel::new("gender", "female");
        let m = GroupLabel::new("gender", "male");
        for i in 0..20 {
            s.add_item(format!("i{i}"), [if i < 10 { f.clone() } else { m.clone() }]).unwrap();
            s.add_outcome(&format!("i{i}"), "en", i % 3 != 0).unwrap();
            s.add_outcome(&format!("i{i}"), "de", i % 4 != 0).unwrap();
        }
        s.add_item("lonely", [f.clone()]).unwrap();
        s.add_outcome("lonely", "ja", true).unwrap();
        run_group_audit(&s, &["en".into(), "de".into(), "ja".into()], &["gender".into()]).unwrap()
    }

    #[test]
    fn json_is_deterministic_and_round_trips() {
        let env = AuditReportEnvelope::new(Payload::Individual(individual()), serde_json::json!({"b": 1, "a": 2}))
            .with_digest("embeddings", "sha256:00".into());
        let a = emit_json(&env).unwrap();
        assert_eq!(a, emit_json(&env).unwrap());
        let back = parse_envelope(&a).unwrap();
        assert_eq!(back, env);
        assert_eq!(emit_json(&back).unwrap(), a);
        assert!(a.find("\"a\"").unwrap() < a.find("\"b\"").unwrap());

        let g = AuditReportEnvelope::new(Payload::Group(group()), serde_json::Value::Null);
        let text = emit_json(&g).unwrap();
        assert_eq!(emit_json(&parse_envelope(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn undefined_disp_serializes_with_reason() {
        let text = emit_json(&group()).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let ja = doc["disp_by_lang"].as_array().unwrap().iter().find(|d| d["language"] == "ja").unwrap();
        assert!(ja["disp"].is_null());
        assert!(ja["undefined_reason"].as_str().unwrap().contains("gender=male"));
    }

    #[test]
    fn scatter_table() {
        let r = individual();
        let t = emit_scatter_table(&r);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.column("image_id").unwrap(), vec!["img_0", "img_1", "img_2"]);
        let max_ratio = t
            .rows
            .iter()
            .map(|row| row[2].parse::<f64>().unwrap() / row[1].parse::<f64>().unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(Some(max_ratio), r.alpha_empirical);
        let max_gap = t.column("sim_gap").unwrap().iter().map(|s| s.parse::<f64>().unwrap()).fold(0.0, f64::max);
        assert_eq!(max_gap, r.audits.iter().map(|a| a.sim_gap).fold(0.0, f64::max));
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("# alpha_empirical="));

        let mut empty = r.clone();
        empty.audits.clear();
        let t = emit_scatter_table(&empty);
        assert!(t.rows.is_empty());
        assert_eq!(t.to_csv().unwrap().lines().filter(|l| !l.starts_with('#')).count(), 1);
    }

    #[test]
    fn percent_rendering() {
        assert_eq!(percent_f64(0.0745), "7.5");
        assert_eq!(percent_f64(0.074), "7.4");
        assert_eq!(percent_f64(0.0), "0.0");
        assert_eq!(percent_f64(1.0), "100.0");
        assert_eq!(percent_exact(Fraction::new(745, 10000)), "7.5");
        assert_eq!(percent_exact(Fraction::new(1, 3)), "33.3");
    }

    #[test]
    fn flags() {
        assert_eq!(pivot_flag(false, Some(0.047), Some(0.074)), PivotFlag::Mitigated);
        assert_eq!(pivot_flag(false, Some(0.032), Some(0.030)), PivotFlag::Amplified);
        assert_eq!(pivot_flag(true, Some(0.074), Some(0.074)), PivotFlag::Pivot);
        assert_eq!(pivot_flag(false, Some(0.03), Some(0.03)), PivotFlag::Unchanged);
        assert_eq!(pivot_flag(false, None, Some(0.03)), PivotFlag::Undefined);
    }

    #[test]
    fn group_tables() {
        let r = group();
        assert!(matches!(emit_group_tables(&r, "fr"), Err(Error::Pivot(_))));
        let tables = emit_group_tables(&r, "en").unwrap();
        let names: Vec<&str> = tables.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["accuracy", "disp", "gap", "prop1"]);
        let disp = &tables[1];
        let flags = disp.column("flag").unwrap();
        assert_eq!(flags[0], "pivot");
        assert_eq!(flags[2], "undefined");
        assert_eq!(tables[2].rows.len(), 9);
        for t in &tables {
            t.to_csv().unwrap();
        }
    }

    #[test]
    fn digest_of_bytes() {
        assert_eq!(
            sha256_digest(&b"abc"[..]).unwrap(),
            "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
