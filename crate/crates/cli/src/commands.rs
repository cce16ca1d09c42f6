use std::collections::BTreeMap;
use std::path::Path;

use fairlens::group::{run_group_audit_with, GroupAuditConfig};
use fairlens::individual::{run_individual_audit, shuffled_audit};
use fairlens::ingest::{assemble_triples, load_embeddings, load_manifest, load_prompt_spec, prompt_embeddings, Kind};
use fairlens::oracle::{verify_all, OracleConfig};
use fairlens::report::{emit_group_tables, emit_json, emit_scatter_table, file_digest, AuditReportEnvelope, Payload};
use fairlens::zeroshot::{run_zeroshot, ZeroShotImage};
use fairlens::{Error, Result};
use serde_json::json;

use crate::args::{GroupArgs, IndividualArgs, TheoryArgs};
use crate::output::write_all_atomic;

/// Files to write plus the process exit code.
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub exit_code: u8,
}

fn source_date_epoch() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()
}

fn envelope(payload: Payload, config: serde_json::Value, inputs: &[(&str, &Path)]) -> Result<AuditReportEnvelope> {
    let mut env = AuditReportEnvelope::new(payload, config);
    for (role, path) in inputs {
        env = env.with_digest(*role, file_digest(path)?);
    }
    env.timestamp = source_date_epoch();
    Ok(env)
}

pub fn audit_individual(args: &IndividualArgs) -> Result<Outcome> {
    let store = load_embeddings(&args.embeddings)?;
    let manifest = load_manifest(&args.manifest, &store)?;
    let triples = assemble_triples(&manifest, &store)?;
    let report = match args.shuffle {
        Some(seed) => shuffled_audit(&triples, &args.lang_a, &args.lang_b, seed)?,
        None => run_individual_audit(&triples, &args.lang_a, &args.lang_b)?,
    };
    let kind = "individual";
    let scatter = emit_scatter_table(&report).to_csv()?;
    let config = json!({
        "subcommand": "audit-individual",
        "embeddings": args.embeddings,
        "manifest": args.manifest,
        "lang_a": args.lang_a,
        "lang_b": args.lang_b,
        "shuffle_seed": args.shuffle,
    });
    let env = envelope(
        Payload::Individual(report),
        config,
        &[("embeddings", &args.embeddings), ("manifest", &args.manifest)],
    )?;
    Ok(Outcome {
        files: vec![(format!("{kind}.report.json"), emit_json(&env)?), (format!("{kind}.scatter.csv"), scatter)],
        exit_code: 0,
    })
}

pub fn audit_group(args: &GroupArgs) -> Result<Outcome> {
    let store = load_embeddings(&args.embeddings)?;
    let manifest = load_manifest(&args.manifest, &store)?;
    let spec = load_prompt_spec(&args.prompts)?;
    let prompt_store = load_embeddings(&args.prompt_embeddings)?;

    let languages: Vec<String> =
        if args.languages.is_empty() { spec.languages().map(str::to_string).collect() } else { args.languages.clone() };
    if !languages.contains(&args.pivot) {
        return Err(Error::Pivot(args.pivot.clone()));
    }
    for l in &languages {
        if !spec.templates.contains_key(l) {
            return Err(Error::PromptSpec(format!("language `{l}` has no template")));
        }
    }
    let prompts = prompt_embeddings(&prompt_store, &spec, &languages)?;

    let mut images = Vec::new();
    for id in manifest.image_ids() {
        let rec = store.get(&id).ok_or_else(|| Error::DanglingReference(id.clone()))?;
        if rec.kind != Kind::Image {
            return Err(Error::Manifest(format!("`{id}` is not an image record")));
        }
        images.push(ZeroShotImage {
            item_id: id.clone(),
            vec: rec.vec.clone(),
            groups: manifest.groups.get(&id).cloned().unwrap_or_default(),
        });
    }
    let truth: BTreeMap<String, String> = match &manifest.truth {
        Some(t) => t.clone(),
        None => images
            .iter()
            .filter_map(|img| {
                img.groups
                    .iter()
                    .find(|g| g.dimension == spec.dimension)
                    .map(|g| (img.item_id.clone(), g.value.clone()))
            })
            .collect(),
    };

    let outcomes = run_zeroshot(&images, &prompts, &spec, &truth, &languages, &manifest.taxonomy)?;
    let group_dims = if args.group_dims.is_empty() { manifest.group_dimensions() } else { args.group_dims.clone() };
    let config = GroupAuditConfig { languages: languages.clone(), group_dims, stratify_by: args.stratify_by.clone() };
    let report = run_group_audit_with(&outcomes, &config)?;
    let tables = emit_group_tables(&report, &args.pivot)?;

    let echo = json!({
        "subcommand": "audit-group",
        "embeddings": args.embeddings,
        "manifest": args.manifest,
        "prompts": args.prompts,
        "prompt_embeddings": args.prompt_embeddings,
        "classified_dimension": spec.dimension,
        "languages": languages,
        "pivot": args.pivot,
        "group_dims": config.group_dims,
        "stratify_by": config.stratify_by,
    });
    let env = envelope(
        Payload::Group(report),
        echo,
        &[
            ("embeddings", &args.embeddings),
            ("manifest", &args.manifest),
            ("prompts", &args.prompts),
            ("prompt_embeddings", &args.prompt_embeddings),
        ],
    )?;
    let mut files = vec![("group.report.json".to_string(), emit_json(&env)?)];
    for t in tables {
        files.push((format!("group.{}.csv", t.name), t.to_csv()?));
    }
    Ok(Outcome { files, exit_code: 0 })
}

pub fn verify_theory(args: &TheoryArgs) -> Result<Outcome> {
    let config = OracleConfig {
        seed: args.seed,
        trials: args.trials,
        dim_range: args.dims,
        rho_fraction_range: args.rho_range,
        tolerance: args.tolerance,
    };
    config.validate()?;
    let result = verify_all(&config)?;
    for s in &result.checked {
        eprintln!(
            "{:?}: checked {} violations {} min slack {:e}",
            s.inequality, s.checked, s.violations, s.min_slack_observed
        );
    }
    let exit_code = if result.all_hold() { 0 } else { 1 };
    for v in &result.violations {
        eprintln!(
            "violation {:?} trial {}: lhs {} > rhs {}; replay: {}",
            v.inequality, v.trial, v.lhs, v.rhs, v.inputs
        );
    }
    let echo = json!({ "subcommand": "verify-theory" });
    let env = envelope(Payload::Oracle(result), echo, &[])?;
    Ok(Outcome { files: vec![("theory.report.json".into(), emit_json(&env)?)], exit_code })
}

pub fn finish(out: &Path, outcome: Outcome) -> Result<u8> {
    write_all_atomic(out, &outcome.files)?;
    Ok(outcome.exit_code)
}
