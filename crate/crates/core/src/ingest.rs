//! File formats.
//!
//! * Embeddings (`*.embjsonl`): one JSON object per line,
//!   `{"id":"img_0001","kind":"image","lang":null,"dim":512,"vec":[...]}`.
//!   Text records carry a language tag (`"lang":"de"`). Floats are written in
//!   shortest round-trip form, so load → write reproduces a canonical file
//!   byte for byte.
//! * Manifest (`manifest.json`): image↔caption pairing, protected groups,
//!   optional truth labels and the group taxonomy.
//! * Prompt spec (`prompts.json`): see [`PromptSpec`].
//!
//! Loading is all-or-nothing: every problem found in a file is reported with
//! its location, and nothing is returned unless the file is clean.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::group::{age_bucket, GroupLabel, Taxonomy};
use crate::individual::GroundedTriple;
use crate::math::Vector;
use crate::zeroshot::{PromptEmbeddingSet, PromptSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Image,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub kind: Kind,
    pub lang: Option<String>,
    pub vec: Vector,
}

impl EmbeddingRecord {
    pub fn dim(&self) -> usize {
        self.vec.dim()
    }
}

#[derive(Serialize)]
struct WireOut<'a> {
    id: &'a str,
    kind: Kind,
    lang: Option<&'a str>,
    dim: usize,
    vec: &'a [f64],
}

#[derive(Deserialize)]
struct WireIn {
    id: String,
    kind: Kind,
    #[serde(default)]
    lang: Option<String>,
    dim: usize,
    vec: Vec<Option<f64>>,
}

/// One problem found while loading a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestIssue {
    Parse { line: usize, message: String },
    DuplicateId { line: usize, id: String },
    InvalidVector { line: usize, id: String, reason: String },
    DanglingReference { location: String, id: String },
    Taxonomy { location: String, message: String },
    Manifest { location: String, message: String },
}

impl fmt::Display for IngestIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IngestIssue::Parse { line, message } => write!(f, "line {line}: {message}"),
            IngestIssue::DuplicateId { line, id } => write!(f, "line {line}: duplicate id `{id}`"),
            IngestIssue::InvalidVector { line, id, reason } => {
                write!(f, "line {line}: invalid vector for `{id}`: {reason}")
            }
            IngestIssue::DanglingReference { location, id } => {
                write!(f, "{location}: unknown id `{id}`")
            }
            IngestIssue::Taxonomy { location, message } | IngestIssue::Manifest { location, message } => {
                write!(f, "{location}: {message}")
            }
        }
    }
}

/// Validated embedding records, indexed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    records: Vec<EmbeddingRecord>,
    index: HashMap<String, usize>,
    warnings: Vec<String>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: EmbeddingRecord) -> Result<()> {
        if self.index.contains_key(&record.id) {
            return Err(Error::Manifest(format!("duplicate id `{}`", record.id)));
        }
        self.index.insert(record.id.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Writes the canonical line format.
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            let wire = WireOut { id: &r.id, kind: r.kind, lang: r.lang.as_deref(), dim: r.dim(), vec: r.vec.values() };
            serde_json::to_writer(&mut out, &wire)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

pub fn is_language_tag(s: &str) -> bool {
    (2..=3).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_lowercase())
}

/// Replaces bare `NaN`, `Infinity` and `-Infinity` tokens outside strings with
/// `null`, so vectors written by lenient JSON encoders still parse and the
/// offending component is reported as non-finite.
fn neutralize_non_finite(line: &str) -> std::borrow::Cow<'_, str> {
    if !(line.contains("NaN") || line.contains("Infinity")) {
        return line.into();
    }
    let mut out = String::with_capacity(line.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut rest = line;
    while let Some(c) = rest.chars().next() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if c == '"' {
            in_string = true;
        }
        let token = ["-Infinity", "Infinity", "NaN"].into_iter().find(|t| rest.starts_with(t));
        match token {
            Some(t) => {
                out.push_str("null");
                rest = &rest[t.len()..];
            }
            None => {
                out.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    out.into()
}

fn parse_line(line_no: usize, line: &str) -> std::result::Result<EmbeddingRecord, IngestIssue> {
    let cleaned = neutralize_non_finite(line);
    let wire: WireIn =
        serde_json::from_str(&cleaned).map_err(|e| IngestIssue::Parse { line: line_no, message: e.to_string() })?;
    if wire.id.is_empty() {
        return Err(IngestIssue::Parse { line: line_no, message: "empty id".into() });
    }
    if let Some(lang) = &wire.lang {
        if !is_language_tag(lang) {
            return Err(IngestIssue::Parse {
                line: line_no,
                message: format!("language tag `{lang}` is not 2-3 lowercase letters"),
            });
        }
    }
    if wire.kind == Kind::Text && wire.lang.is_none() {
        return Err(IngestIssue::Parse {
            line: line_no,
            message: format!("text record `{}` has no language", wire.id),
        });
    }
    let invalid = |reason: String| IngestIssue::InvalidVector { line: line_no, id: wire.id.clone(), reason };
    if wire.dim != wire.vec.len() {
        return Err(invalid(format!("dim is {} but vec has {} components", wire.dim, wire.vec.len())));
    }
    if let Some(i) = wire.vec.iter().position(Option::is_none) {
        return Err(invalid(format!("component {i} is not a finite number")));
    }
    let values: Vec<f64> = wire.vec.iter().map(|x| x.expect("checked")).collect();
    let vec = Vector::new(values).map_err(|e| invalid(e.to_string()))?;
    Ok(EmbeddingRecord { id: wire.id, kind: wire.kind, lang: wire.lang, vec })
}

/// Streams an embedding file one line at a time.
pub fn read_embeddings(reader: impl BufRead) -> std::result::Result<EmbeddingStore, Vec<IngestIssue>> {
    let mut store = EmbeddingStore::new();
    let mut issues = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                issues.push(IngestIssue::Parse { line: line_no, message: e.to_string() });
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line_no, &line) {
            Ok(rec) => {
                if first_seen.contains_key(&rec.id) {
                    issues.push(IngestIssue::DuplicateId { line: line_no, id: rec.id });
                } else {
                    first_seen.insert(rec.id.clone(), line_no);
                    store.insert(rec).expect("uniqueness checked");
                }
            }
            Err(issue) => issues.push(issue),
        }
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    if store.is_empty() {
        store.warnings.push("no embedding records".into());
    }
    Ok(store)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file)).map_err(|issues| Error::Ingest { path: path.to_path_buf(), issues })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestPair {
    pub image_id: String,
    pub texts: BTreeMap<String, String>,
    pub portion_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairManifest {
    pub pairs: Vec<ManifestPair>,
    pub portion_tag: Option<String>,
    pub taxonomy: Taxonomy,
    pub groups: BTreeMap<String, Vec<GroupLabel>>,
    pub truth: Option<BTreeMap<String, String>>,
    /// True when pairs do not all share one language set.
    pub ragged_languages: bool,
}

impl PairManifest {
    /// Image ids in manifest order: the pairs, or the grouped images when no
    /// pairs are listed.
    pub fn image_ids(&self) -> Vec<String> {
        if self.pairs.is_empty() {
            self.groups.keys().cloned().collect()
        } else {
            self.pairs.iter().map(|p| p.image_id.clone()).collect()
        }
    }

    pub fn group_dimensions(&self) -> Vec<String> {
        self.taxonomy.dimensions().map(str::to_string).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    image: String,
    #[serde(default)]
    texts: BTreeMap<String, String>,
    #[serde(default)]
    portion_tag: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    pairs: Vec<RawPair>,
    #[serde(default)]
    portion_tag: Option<String>,
    #[serde(default)]
    taxonomy: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    groups: BTreeMap<String, BTreeMap<String, Value>>,
    #[serde(default)]
    truth: Option<BTreeMap<String, String>>,
}

fn group_value(dim: &str, raw: &Value) -> std::result::Result<String, String> {
    match raw {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if dim == "age" => n
            .as_u64()
            .and_then(|a| u32::try_from(a).ok())
            .map(|a| age_bucket(a).to_string())
            .ok_or_else(|| format!("age `{n}` is not a non-negative integer")),
        other => Err(format!("value {other} for `{dim}` must be a string")),
    }
}

/// Parses and cross-checks a manifest against `store`.
pub fn parse_manifest(text: &str, store: &EmbeddingStore) -> std::result::Result<PairManifest, Vec<IngestIssue>> {
    let raw: RawManifest =
        serde_json::from_str(text).map_err(|e| vec![IngestIssue::Parse { line: e.line(), message: e.to_string() }])?;
    let mut issues = Vec::new();

    let mut taxonomy = Taxonomy::new();
    for (dim, values) in &raw.taxonomy {
        if let Err(e) = taxonomy.add_dimension(dim.clone(), values.iter().cloned()) {
            issues.push(IngestIssue::Taxonomy { location: format!("taxonomy.{dim}"), message: e.to_string() });
        }
    }

    let check_ref =
        |location: String, id: &str, want: Kind, lang: Option<&str>, issues: &mut Vec<IngestIssue>| match store.get(id)
        {
            None => issues.push(IngestIssue::DanglingReference { location, id: id.to_string() }),
            Some(rec) if rec.kind != want => issues.push(IngestIssue::Manifest {
                location,
                message: format!("`{id}` is a {:?} record, expected {want:?}", rec.kind),
            }),
            Some(rec) => {
                if let Some(l) = lang {
                    if rec.lang.as_deref() != Some(l) {
                        issues.push(IngestIssue::Manifest {
                            location,
                            message: format!("`{id}` has language {:?}, listed under `{l}`", rec.lang),
                        });
                    }
                }
            }
        };

    let mut pairs = Vec::with_capacity(raw.pairs.len());
    let mut lang_sets = BTreeSet::new();
    let mut seen_images = BTreeSet::new();
    for (i, p) in raw.pairs.into_iter().enumerate() {
        let loc = format!("pairs[{i}]");
        if !seen_images.insert(p.image.clone()) {
            issues.push(IngestIssue::Manifest {
                location: loc.clone(),
                message: format!("image `{}` paired twice", p.image),
            });
        }
        check_ref(format!("{loc}.image"), &p.image, Kind::Image, None, &mut issues);
        for (lang, text_id) in &p.texts {
            if !is_language_tag(lang) {
                issues.push(IngestIssue::Manifest {
                    location: format!("{loc}.texts"),
                    message: format!("bad language tag `{lang}`"),
                });
            }
            check_ref(format!("{loc}.texts.{lang}"), text_id, Kind::Text, Some(lang), &mut issues);
        }
        if !p.texts.is_empty() {
            lang_sets.insert(p.texts.keys().cloned().collect::<Vec<_>>());
        }
        pairs.push(ManifestPair { image_id: p.image, texts: p.texts, portion_tag: p.portion_tag });
    }

    let mut groups = BTreeMap::new();
    for (image, dims) in &raw.groups {
        let loc = format!("groups.{image}");
        check_ref(loc.clone(), image, Kind::Image, None, &mut issues);
        let mut labels = Vec::new();
        for (dim, value) in dims {
            match group_value(dim, value) {
                Ok(v) => {
                    let label = GroupLabel::new(dim.clone(), v);
                    if taxonomy.contains(&label) {
                        labels.push(label);
                    } else {
                        issues.push(IngestIssue::Taxonomy {
                            location: loc.clone(),
                            message: format!("undeclared group {label}"),
                        });
                    }
                }
                Err(message) => issues.push(IngestIssue::Taxonomy { location: loc.clone(), message }),
            }
        }
        groups.insert(image.clone(), labels);
    }

    if let Some(truth) = &raw.truth {
        for image in truth.keys() {
            check_ref(format!("truth.{image}"), image, Kind::Image, None, &mut issues);
        }
    }

    if !issues.is_empty() {
        return Err(issues);
    }
    Ok(PairManifest {
        pairs,
        portion_tag: raw.portion_tag,
        taxonomy,
        groups,
        truth: raw.truth,
        ragged_languages: lang_sets.len() > 1,
    })
}

pub fn load_manifest(path: impl AsRef<Path>, store: &EmbeddingStore) -> Result<PairManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, store).map_err(|issues| Error::Ingest { path: path.to_path_buf(), issues })
}

/// One [`GroundedTriple`] per manifest pair, in manifest order.
pub fn assemble_triples(manifest: &PairManifest, store: &EmbeddingStore) -> Result<Vec<GroundedTriple>> {
    let mut dim = None;
    let mut triples = Vec::with_capacity(manifest.pairs.len());
    for pair in &manifest.pairs {
        if pair.texts.len() < 2 {
            return Err(Error::MissingLanguage { item: pair.image_id.clone(), language: "<second language>".into() });
        }
        let lookup =
            |id: &str| store.get(id).map(|r| r.vec.clone()).ok_or_else(|| Error::DanglingReference(id.to_string()));
        let image = lookup(&pair.image_id)?;
        let expected = *dim.get_or_insert(image.dim());
        if image.dim() != expected {
            return Err(Error::Dimension { expected, found: image.dim() });
        }
        let mut texts = BTreeMap::new();
        for (lang, id) in &pair.texts {
            texts.insert(lang.clone(), lookup(id)?);
        }
        let tag = pair.portion_tag.clone().or_else(|| manifest.portion_tag.clone());
        triples.push(GroundedTriple::new(pair.image_id.clone(), image, texts, tag)?);
    }
    Ok(triples)
}

pub fn parse_prompt_spec(text: &str) -> Result<PromptSpec> {
    let spec: PromptSpec = serde_json::from_str(text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_prompt_spec(path: impl AsRef<Path>) -> Result<PromptSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_prompt_spec(&text)
}

/// Id under which the prompt embedding for `(lang, label)` is stored.
pub fn prompt_record_id(lang: &str, label: &str) -> String {
    format!("{lang}/{label}")
}

/// Collects the prompt embeddings for `spec` from a store of text records
/// with ids `"<lang>/<label>"`.
pub fn prompt_embeddings(
    store: &EmbeddingStore,
    spec: &PromptSpec,
    languages: &[String],
) -> Result<PromptEmbeddingSet> {
    let mut entries = BTreeMap::new();
    for lang in languages {
        for label in &spec.labels {
            let id = prompt_record_id(lang, label);
            if let Some(rec) = store.get(&id) {
                if rec.kind != Kind::Text || rec.lang.as_deref() != Some(lang) {
                    return Err(Error::PromptSpec(format!("record `{id}` must be a `{lang}` text record")));
                }
                entries.insert((lang.clone(), label.clone()), rec.vec.clone());
            }
        }
    }
    PromptEmbeddingSet::new(spec, languages, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(lines: &str) -> EmbeddingStore {
        read_embeddings(lines.as_bytes()).unwrap()
    }

    const BASIC: &str = r#"{"id":"img_1","kind":"image","lang":null,"dim":2,"vec":[1.0,0.5]}
{"id":"en_1","kind":"text","lang":"en","dim":2,"vec":[0.9,0.1]}
{"id":"de_1","kind":"text","lang":"de","dim":2,"vec":[0.8,0.3]}
"#;

    #[test]
    fn empty_file_warns() {
        let s = store("");
        assert!(s.is_empty());
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn parses_records() {
        let s = store(BASIC);
        assert_eq!(s.len(), 3);
        assert_eq!(s.get("de_1").unwrap().lang.as_deref(), Some("de"));
        assert_eq!(s.get("img_1").unwrap().kind, Kind::Image);
    }

    #[test]
    fn collects_every_issue() {
        let text = r#"{"id":"a","kind":"image","lang":null,"dim":2,"vec":[1.0,NaN]}
not json
{"id":"b","kind":"image","lang":null,"dim":3,"vec":[1.0,2.0]}
{"id":"c","kind":"image","lang":null,"dim":2,"vec":[0.0,0.0]}
{"id":"d","kind":"text","lang":"EN","dim":1,"vec":[1.0]}
{"id":"e","kind":"text","lang":null,"dim":1,"vec":[1.0]}
{"id":"f","kind":"image","lang":null,"dim":1,"vec":[-Infinity]}
{"id":"g","kind":"image","lang":null,"dim":1,"vec":[1.0]}
{"id":"g","kind":"image","lang":null,"dim":1,"vec":[2.0]}
"#;
        let issues = read_embeddings(text.as_bytes()).unwrap_err();
        assert_eq!(issues.len(), 8, "{issues:#?}");
        assert!(matches!(&issues[0], IngestIssue::InvalidVector { line: 1, id, .. } if id == "a"));
        assert!(matches!(&issues[1], IngestIssue::Parse { line: 2, .. }));
        assert!(matches!(&issues[2], IngestIssue::InvalidVector { line: 3, .. }));
        assert!(matches!(&issues[3], IngestIssue::InvalidVector { line: 4, .. }));
        assert!(matches!(&issues[4], IngestIssue::Parse { line: 5, .. }));
        assert!(matches!(&issues[5], IngestIssue::Parse { line: 6, .. }));
        assert!(matches!(&issues[6], IngestIssue::InvalidVector { line: 7, id, .. } if id == "f"));
        assert!(matches!(&issues[7], IngestIssue::DuplicateId { line: 9, id } if id == "g"));
    }

    #[test]
    fn nan_inside_strings_is_left_alone() {
        let s = store(r#"{"id":"NaN-Infinity","kind":"image","lang":null,"dim":1,"vec":[2.5]}"#);
        assert!(s.get("NaN-Infinity").is_some());
    }

    #[test]
    fn canonical_write_is_stable() {
        let s = store(BASIC);
        let mut out = Vec::new();
        s.write_to(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), BASIC);
    }

    const MULTI30K: &str = r#"{
  "portion_tag": "translation",
  "pairs": [{"image": "img_1", "texts": {"en": "en_1", "de": "de_1"}}]
}"#;

    #[test]
    fn multi30k_shaped_manifest() {
        let s = store(BASIC);
        let m = parse_manifest(MULTI30K, &s).unwrap();
        assert!(!m.ragged_languages);
        let triples = assemble_triples(&m, &s).unwrap();
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0].portion_tag.as_deref(), Some("translation"));
        assert_eq!(triples[0].text_vec_by_lang.len(), 2);
    }

    #[test]
    fn dangling_text_reference() {
        let s = store(BASIC);
        let text = MULTI30K.replace("de_1", "de_404");
        let issues = parse_manifest(&text, &s).unwrap_err();
        assert_eq!(
            issues,
            vec![IngestIssue::DanglingReference { location: "pairs[0].texts.de".into(), id: "de_404".into() }]
        );
    }

    #[test]
    fn language_mismatch_is_reported() {
        let s = store(BASIC);
        let text = MULTI30K.replace(r#""de": "de_1""#, r#""fr": "de_1""#);
        let issues = parse_manifest(&text, &s).unwrap_err();
        assert!(matches!(&issues[0], IngestIssue::Manifest { .. }));
    }

    #[test]
    fn single_language_pair_cannot_form_a_triple() {
        let s = store(BASIC);
        let m = parse_manifest(r#"{"pairs": [{"image": "img_1", "texts": {"en": "en_1"}}]}"#, &s).unwrap();
        assert!(matches!(assemble_triples(&m, &s), Err(Error::MissingLanguage { .. })));
    }

    #[test]
    fn fairface_shaped_manifest() {
        let s = store(
            r#"{"id":"f1","kind":"image","lang":null,"dim":2,"vec":[1.0,0.0]}
{"id":"f2","kind":"image","lang":null,"dim":2,"vec":[0.0,1.0]}"#,
        );
        let text = r#"{
  "taxonomy": {
    "gender": ["female", "male"],
    "race": ["White", "Black", "Indian", "East Asian", "Southeast Asian", "Middle Eastern", "Latino"],
    "age": ["0-2", "3-19", "20-49", "50-69", "70+"]
  },
  "groups": {
    "f1": {"gender": "female", "race": "Black", "age": 34},
    "f2": {"gender": "male", "race": "East Asian", "age": "0-2"}
  },
  "truth": {"f1": "female", "f2": "male"}
}"#;
        let m = parse_manifest(text, &s).unwrap();
        assert_eq!(m.group_dimensions(), vec!["age", "gender", "race"]);
        assert!(m.groups["f1"].contains(&GroupLabel::new("age", "20-49")));
        assert_eq!(m.image_ids(), vec!["f1", "f2"]);
        assert_eq!(m.truth.as_ref().unwrap()["f2"], "male");

        let bad = text.replace(r#""race": "Black""#, r#""race": "Martian""#);
        let issues = parse_manifest(&bad, &s).unwrap_err();
        assert!(matches!(&issues[0], IngestIssue::Taxonomy { .. }));
    }

    #[test]
    fn prompt_embedding_lookup() {
        let spec = PromptSpec::default_gender();
        let s = store(
            r#"{"id":"en/female","kind":"text","lang":"en","dim":2,"vec":[1.0,0.0]}
{"id":"en/male","kind":"text","lang":"en","dim":2,"vec":[0.0,1.0]}"#,
        );
        let set = prompt_embeddings(&s, &spec, &["en".into()]).unwrap();
        assert_eq!(set.dim(), 2);
        assert!(matches!(prompt_embeddings(&s, &spec, &["en".into(), "ja".into()]), Err(Error::PromptSpec(_))));
    }

    #[test]
    fn prompt_spec_file() {
        let text = serde_json::to_string(&PromptSpec::default_age()).unwrap();
        let spec = parse_prompt_spec(&text).unwrap();
        assert_eq!(spec, PromptSpec::default_age());
        let broken = text.replace("{label}", "");
        assert!(matches!(parse_prompt_spec(&broken), Err(Error::PromptSpec(_))));
    }
}
