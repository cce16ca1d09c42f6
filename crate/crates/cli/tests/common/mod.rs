//! Synthetic input files shared by the CLI tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;

pub const LANGS: [&str; 3] = ["en", "de", "ja"];
pub const GENDERS: [&str; 2] = ["female", "male"];
pub const RACES: [&str; 2] = ["White", "Black"];

#[derive(Debug, Clone)]
pub struct FixtureOptions {
    pub images: usize,
    pub dim: usize,
    pub seed: u64,
    /// Adds a manifest pair whose image id is absent from the embeddings.
    pub dangling: bool,
    /// `(lang, label)` prompt embedding left out of the prompt file.
    pub drop_prompt: Option<(&'static str, &'static str)>,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions { images: 24, dim: 8, seed: 7, dangling: false, drop_prompt: None }
    }
}

pub struct Fixture {
    pub dir: TempDir,
    pub embeddings: PathBuf,
    pub manifest: PathBuf,
    pub prompts: PathBuf,
    pub prompt_embeddings: PathBuf,
}

impl Fixture {
    pub fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn noisy(rng: &mut ChaCha8Rng, base: &[f64], scale: f64) -> Vec<f64> {
    base.iter().map(|x| x + scale * rng.random_range(-1.0..1.0)).collect()
}

fn record(id: &str, kind: &str, lang: Option<&str>, vec: &[f64]) -> String {
    let v = json!({ "id": id, "kind": kind, "lang": lang, "dim": vec.len(), "vec": vec });
    serde_json::to_string(&v).unwrap()
}

fn write_lines(path: &Path, lines: &[String]) {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).unwrap();
}

pub fn write_fixture(opts: &FixtureOptions) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let base: Vec<Vec<f64>> =
        GENDERS.iter().map(|_| (0..opts.dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();

    let mut lines = Vec::new();
    let mut pairs = Vec::new();
    let mut groups = serde_json::Map::new();
    for i in 0..opts.images {
        let id = format!("img_{i:03}");
        let g = i % 2;
        let image = noisy(&mut rng, &base[g], 0.9);
        lines.push(record(&id, "image", None, &image));
        let mut texts = serde_json::Map::new();
        for lang in ["en", "de"] {
            let tid = format!("{id}/{lang}");
            lines.push(record(&tid, "text", Some(lang), &noisy(&mut rng, &image, 0.3)));
            texts.insert(lang.into(), Value::String(tid));
        }
        pairs.push(json!({ "image": id, "texts": texts }));
        groups.insert(id, json!({ "gender": GENDERS[g], "race": RACES[(i / 2) % 2] }));
    }
    if opts.dangling {
        pairs.push(json!({ "image": "img_missing", "texts": {} }));
    }

    let mut prompt_lines = Vec::new();
    for lang in LANGS {
        for (g, label) in GENDERS.iter().enumerate() {
            if opts.drop_prompt == Some((lang, label)) {
                continue;
            }
            let v = noisy(&mut rng, &base[g], 0.4);
            prompt_lines.push(record(&format!("{lang}/{label}"), "text", Some(lang), &v));
        }
    }

    let manifest = json!({
        "pairs": pairs,
        "taxonomy": { "gender": GENDERS, "race": RACES },
        "groups": groups,
    });
    let prompts = json!({
        "dimension": "gender",
        "labels": GENDERS,
        "templates": {
            "en": "A photo of a {label}",
            "de": "Ein Foto von einer Person: {label}",
            "ja": "{label}の写真",
        },
        "surfaces": {
            "en": { "female": "woman", "male": "man" },
            "de": { "female": "Frau", "male": "Mann" },
            "ja": { "female": "女性", "male": "男性" },
        },
    });

    let fx = Fixture {
        embeddings: dir.path().join("embeddings.embjsonl"),
        manifest: dir.path().join("manifest.json"),
        prompts: dir.path().join("prompts.json"),
        prompt_embeddings: dir.path().join("prompts.embjsonl"),
        dir,
    };
    write_lines(&fx.embeddings, &lines);
    write_lines(&fx.prompt_embeddings, &prompt_lines);
    std::fs::write(&fx.manifest, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    std::fs::write(&fx.prompts, serde_json::to_string_pretty(&prompts).unwrap()).unwrap();
    fx
}

pub fn individual_args(fx: &Fixture, out: &Path) -> Vec<String> {
    vec![
        "audit-individual".into(),
        "--embeddings".into(),
        fx.embeddings.display().to_string(),
        "--manifest".into(),
        fx.manifest.display().to_string(),
        "--lang-a".into(),
        "en".into(),
        "--lang-b".into(),
        "de".into(),
        "--out".into(),
        out.display().to_string(),
    ]
}

pub fn group_args(fx: &Fixture, out: &Path) -> Vec<String> {
    vec![
        "audit-group".into(),
        "--embeddings".into(),
        fx.embeddings.display().to_string(),
        "--manifest".into(),
        fx.manifest.display().to_string(),
        "--prompts".into(),
        fx.prompts.display().to_string(),
        "--prompt-embeddings".into(),
        fx.prompt_embeddings.display().to_string(),
        "--languages".into(),
        "en,de,ja".into(),
        "--pivot".into(),
        "en".into(),
        "--stratify-by".into(),
        "race".into(),
        "--out".into(),
        out.display().to_string(),
    ]
}

/// Sorted `(file name, bytes)` for every regular file in `dir`.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = match std::fs::read_dir(dir) {
        Ok(rd) => rd
            .map(|e| e.unwrap())
            .filter(|e| e.file_type().unwrap().is_file())
            .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
            .collect(),
        Err(_) => Vec::new(),
    };
    files.sort();
    files
}

/// Names of every entry in `dir`, including hidden ones.
pub fn dir_entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = match std::fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect(),
        Err(_) => Vec::new(),
    };
    names.sort();
    names
}
