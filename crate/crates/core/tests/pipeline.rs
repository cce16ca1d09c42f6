//! Embedding files through to reports, without the command-line front end.

use std::collections::BTreeMap;

use fairlens::group::run_group_audit_with;
use fairlens::group::GroupAuditConfig;
use fairlens::individual::{run_individual_audit, shuffled_audit};
use fairlens::ingest::{
    assemble_triples, parse_manifest, parse_prompt_spec, prompt_embeddings, read_embeddings, IngestIssue,
};
use fairlens::report::{emit_json, emit_scatter_table, parse_envelope, AuditReportEnvelope, Payload};
use fairlens::zeroshot::{run_zeroshot, ZeroShotImage};
use fairlens::Error;

const EMBEDDINGS: &str = r#"{"id":"img_a","kind":"image","lang":null,"dim":3,"vec":[1.0,0.2,0.0]}
{"id":"img_b","kind":"image","lang":null,"dim":3,"vec":[0.1,1.0,0.3]}
{"id":"img_c","kind":"image","lang":null,"dim":3,"vec":[0.9,0.1,0.4]}
{"id":"img_d","kind":"image","lang":null,"dim":3,"vec":[0.0,0.8,1.0]}
{"id":"a/en","kind":"text","lang":"en","dim":3,"vec":[0.9,0.3,0.1]}
{"id":"a/de","kind":"text","lang":"de","dim":3,"vec":[0.8,0.2,0.3]}
{"id":"b/en","kind":"text","lang":"en","dim":3,"vec":[0.2,0.9,0.2]}
{"id":"b/de","kind":"text","lang":"de","dim":3,"vec":[0.0,1.0,0.5]}
{"id":"c/en","kind":"text","lang":"en","dim":3,"vec":[1.0,0.0,0.5]}
{"id":"c/de","kind":"text","lang":"de","dim":3,"vec":[1.0,0.0,0.5]}
{"id":"d/en","kind":"text","lang":"en","dim":3,"vec":[0.1,0.7,0.9]}
{"id":"d/de","kind":"text","lang":"de","dim":3,"vec":[0.3,0.6,1.0]}
"#;

const MANIFEST: &str = r#"{
  "pairs": [
    {"image": "img_a", "texts": {"en": "a/en", "de": "a/de"}},
    {"image": "img_b", "texts": {"en": "b/en", "de": "b/de"}},
    {"image": "img_c", "texts": {"en": "c/en", "de": "c/de"}},
    {"image": "img_d", "texts": {"en": "d/en", "de": "d/de"}}
  ],
  "portion_tag": "val",
  "taxonomy": {"gender": ["female", "male"], "age": ["0-2", "3-19", "20-49", "50-69", "70+"]},
  "groups": {
    "img_a": {"gender": "female", "age": 34},
    "img_b": {"gender": "male", "age": 71},
    "img_c": {"gender": "female", "age": 2},
    "img_d": {"gender": "male", "age": 19}
  }
}"#;

const PROMPTS: &str = r#"{
  "dimension": "gender",
  "labels": ["female", "male"],
  "templates": {"en": "A photo of a {label}", "de": "Ein Foto von einer Person: {label}"},
  "surfaces": {"en": {"female": "woman", "male": "man"}, "de": {"female": "Frau", "male": "Mann"}}
}"#;

const PROMPT_EMBEDDINGS: &str = r#"{"id":"en/female","kind":"text","lang":"en","dim":3,"vec":[1.0,0.0,0.2]}
{"id":"en/male","kind":"text","lang":"en","dim":3,"vec":[0.0,1.0,0.6]}
{"id":"de/female","kind":"text","lang":"de","dim":3,"vec":[1.0,0.5,0.0]}
{"id":"de/male","kind":"text","lang":"de","dim":3,"vec":[0.0,0.2,1.0]}
"#;

#[test]
fn individual_audit_end_to_end() {
    let store = read_embeddings(EMBEDDINGS.as_bytes()).unwrap();
    let manifest = parse_manifest(MANIFEST, &store).unwrap();
    let triples = assemble_triples(&manifest, &store).unwrap();
    assert_eq!(triples.len(), 4);
    let report = run_individual_audit(&triples, "en", "de").unwrap();
    assert_eq!(report.portion_tags, ["val"]);
    // c/en and c/de coincide.
    assert_eq!(report.skipped_count, 1);
    let ratios: Vec<f64> = report.audits.iter().filter_map(|a| a.ratio).collect();
    assert_eq!(ratios.len(), 3);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(report.alpha_empirical, Some(max));
    assert_eq!(report.exact_bound_violations, 0);

    let table = emit_scatter_table(&report);
    assert_eq!(table.rows.len(), 4);

    let env = AuditReportEnvelope::new(Payload::Individual(report.clone()), serde_json::json!({}));
    let text = emit_json(&env).unwrap();
    let back = parse_envelope(&text).unwrap();
    assert_eq!(back, env);

    let a = shuffled_audit(&triples, "en", "de", 3).unwrap();
    let b = shuffled_audit(&triples, "en", "de", 3).unwrap();
    assert_eq!(a, b);
    assert!(a.shuffle.is_some());
}

#[test]
fn group_audit_end_to_end() {
    let store = read_embeddings(EMBEDDINGS.as_bytes()).unwrap();
    let manifest = parse_manifest(MANIFEST, &store).unwrap();
    let spec = parse_prompt_spec(PROMPTS).unwrap();
    let prompt_store = read_embeddings(PROMPT_EMBEDDINGS.as_bytes()).unwrap();
    let languages = vec!["en".to_string(), "de".to_string()];
    let prompts = prompt_embeddings(&prompt_store, &spec, &languages).unwrap();

    let images: Vec<ZeroShotImage> = manifest
        .image_ids()
        .into_iter()
        .map(|id| ZeroShotImage {
            vec: store.get(&id).unwrap().vec.clone(),
            groups: manifest.groups[&id].clone(),
            item_id: id,
        })
        .collect();
    let truth: BTreeMap<String, String> = images
        .iter()
        .map(|i| (i.item_id.clone(), i.groups.iter().find(|g| g.dimension == "gender").unwrap().value.clone()))
        .collect();
    let outcomes = run_zeroshot(&images, &prompts, &spec, &truth, &languages, &manifest.taxonomy).unwrap();
    assert_eq!(outcomes.len(), 8);

    let config = GroupAuditConfig { languages, group_dims: vec!["gender".into(), "age".into()], stratify_by: None };
    let report = run_group_audit_with(&outcomes, &config).unwrap();
    assert!(report.prop1_checks.iter().all(|c| c.holds));
    // Age has five values, so only gender gets decomposition checks.
    assert!(report.prop1_checks.iter().all(|c| c.a.dimension == "gender"));
    // Two buckets are empty; their disparities are undefined, not zero.
    assert!(report.disp_by_lang.iter().any(|d| d.disp.is_none() && d.undefined_reason.is_some()));
}

#[test]
fn manifest_problems_are_collected() {
    let store = read_embeddings(EMBEDDINGS.as_bytes()).unwrap();
    let bad = MANIFEST
        .replace(r#""image": "img_d""#, r#""image": "img_zz""#)
        .replace(r#""gender": "male", "age": 71"#, r#""gender": "other", "age": 71"#)
        .replace(r#""de": "a/de""#, r#""de": "a/en""#);
    let issues = parse_manifest(&bad, &store).unwrap_err();
    assert!(issues.iter().any(|i| matches!(i, IngestIssue::DanglingReference { id, .. } if id == "img_zz")));
    assert!(issues.iter().any(|i| matches!(i, IngestIssue::Taxonomy { .. })));
    assert!(issues.iter().any(|i| matches!(i, IngestIssue::Manifest { .. })));
}

#[test]
fn missing_prompt_embedding_is_reported() {
    let spec = parse_prompt_spec(PROMPTS).unwrap();
    let partial: String =
        PROMPT_EMBEDDINGS.lines().filter(|l| !l.contains("de/female")).map(|l| format!("{l}\n")).collect();
    let store = read_embeddings(partial.as_bytes()).unwrap();
    let err = prompt_embeddings(&store, &spec, &["en".into(), "de".into()]).unwrap_err();
    assert!(matches!(err, Error::PromptSpec(ref m) if m.contains("(de, female)")));
}
