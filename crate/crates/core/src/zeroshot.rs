//! Zero-shot classification by prompt similarity.
//!
//! A [`PromptSpec`] renders one prompt per label and language from a template
//! with a single `{label}` slot. Prompt strings are rendered here, but their
//! embeddings come from outside (see [`crate::ingest`]); an image is labelled
//! with the prompt its embedding is most cosine-similar to.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupLabel, OutcomeSet, Taxonomy, AGE_BUCKETS};
use crate::math::{argmax_similarity, Vector};

pub const LABEL_SLOT: &str = "{label}";

/// Labels, per-language templates and per-language surface forms for one
/// classification dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub dimension: String,
    /// Canonical label order; ties in classification go to the earliest label.
    pub labels: Vec<String>,
    pub templates: BTreeMap<String, String>,
    pub surfaces: BTreeMap<String, BTreeMap<String, String>>,
}

impl PromptSpec {
    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::PromptSpec(format!("`{}` declares no labels", self.dimension)));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.labels.iter().find(|l| !seen.insert(*l)) {
            return Err(Error::PromptSpec(format!("label `{dup}` listed twice")));
        }
        if self.templates.is_empty() {
            return Err(Error::PromptSpec("no templates declared".into()));
        }
        for (lang, template) in &self.templates {
            let slots = template.matches(LABEL_SLOT).count();
            if slots != 1 {
                return Err(Error::PromptSpec(format!("template for `{lang}` has {slots} label slots, expected 1")));
            }
            for label in &self.labels {
                self.surface(lang, label)?;
            }
        }
        Ok(())
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    fn surface(&self, lang: &str, label: &str) -> Result<&str> {
        self.surfaces
            .get(lang)
            .and_then(|m| m.get(label))
            .map(String::as_str)
            .ok_or_else(|| Error::PromptSpec(format!("no surface form for `{label}` in `{lang}`")))
    }

    pub fn render(&self, lang: &str, label: &str) -> Result<String> {
        let template =
            self.templates.get(lang).ok_or_else(|| Error::PromptSpec(format!("language `{lang}` not declared")))?;
        Ok(template.replacen(LABEL_SLOT, self.surface(lang, label)?, 1))
    }

    fn english(dimension: &str, template: &str, pairs: &[(&str, &str)]) -> Self {
        let surfaces = pairs.iter().map(|(l, s)| (l.to_string(), s.to_string())).collect();
        PromptSpec {
            dimension: dimension.into(),
            labels: pairs.iter().map(|(l, _)| l.to_string()).collect(),
            templates: BTreeMap::from([("en".to_string(), template.to_string())]),
            surfaces: BTreeMap::from([("en".to_string(), surfaces)]),
        }
    }

    /// Gender prompts: "A photo of a woman" / "A photo of a man".
    pub fn default_gender() -> Self {
        Self::english("gender", "A photo of a {label}", &[("female", "woman"), ("male", "man")])
    }

    /// Race prompts in table column order. "Indian" is rendered as "South Eastern".
    pub fn default_race() -> Self {
        Self::english(
            "race",
            "A photo of a(n) {label} person",
            &[
                ("White", "White"),
                ("Black", "Black"),
                ("Indian", "South Eastern"),
                ("East Asian", "East Asian"),
                ("Southeast Asian", "Southeast Asian"),
                ("Middle Eastern", "Middle Eastern"),
                ("Latino", "Latino"),
            ],
        )
    }

    pub fn default_age() -> Self {
        let surfaces = ["0 to 2", "3 to 19", "20 to 49", "50 to 69", "more than 70"];
        let pairs: Vec<(&str, &str)> = AGE_BUCKETS.iter().copied().zip(surfaces).collect();
        Self::english("age", "A photo of a person aged {label} years", &pairs)
    }
}

/// Rendered prompts for `lang`, in label order.
pub fn render_prompts(spec: &PromptSpec, lang: &str) -> Result<Vec<(String, String)>> {
    spec.labels.iter().map(|label| Ok((label.clone(), spec.render(lang, label)?))).collect()
}

/// Prompt embeddings for every (language, label) of a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptEmbeddingSet {
    labels: Vec<String>,
    by_lang: BTreeMap<String, Vec<Vector>>,
    dim: usize,
}

impl PromptEmbeddingSet {
    /// Builds the set from `(language, label) → vector`. Every label of `spec`
    /// must be present for every language in `languages`.
    pub fn new(
        spec: &PromptSpec,
        languages: &[String],
        mut entries: BTreeMap<(String, String), Vector>,
    ) -> Result<Self> {
        let mut dim = None;
        let mut by_lang = BTreeMap::new();
        for lang in languages {
            let mut row = Vec::with_capacity(spec.labels.len());
            for label in &spec.labels {
                let v = entries
                    .remove(&(lang.clone(), label.clone()))
                    .ok_or_else(|| Error::PromptSpec(format!("missing prompt embedding for ({lang}, {label})")))?;
                match dim {
                    None => dim = Some(v.dim()),
                    Some(d) if d != v.dim() => return Err(Error::Dimension { expected: d, found: v.dim() }),
                    _ => {}
                }
                row.push(v);
            }
            by_lang.insert(lang.clone(), row);
        }
        let dim = dim.ok_or_else(|| Error::PromptSpec("no languages requested".into()))?;
        Ok(PromptEmbeddingSet { labels: spec.labels.clone(), by_lang, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prompts(&self, lang: &str) -> Option<&[Vector]> {
        self.by_lang.get(lang).map(Vec::as_slice)
    }
}

/// Label whose prompt is most similar to `image` in `language`.
pub fn classify<'a>(image: &Vector, prompts: &'a PromptEmbeddingSet, language: &str) -> Result<&'a str> {
    let row =
        prompts.prompts(language).ok_or_else(|| Error::PromptSpec(format!("no prompt embeddings for `{language}`")))?;
    let idx = argmax_similarity(image, row)?;
    Ok(&prompts.labels[idx])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotImage {
    pub item_id: String,
    pub vec: Vector,
    pub groups: Vec<GroupLabel>,
}

/// Classifies every image in every language and records whether the
/// predicted label matches `truth`.
pub fn run_zeroshot(
    images: &[ZeroShotImage],
    prompts: &PromptEmbeddingSet,
    spec: &PromptSpec,
    truth: &BTreeMap<String, String>,
    languages: &[String],
    taxonomy: &Taxonomy,
) -> Result<OutcomeSet> {
    let mut truths = Vec::with_capacity(images.len());
    for img in images {
        let t =
            truth.get(&img.item_id).ok_or_else(|| Error::Manifest(format!("no truth label for `{}`", img.item_id)))?;
        if !spec.labels.contains(t) {
            return Err(Error::Manifest(format!(
                "truth `{t}` for `{}` is not a `{}` label",
                img.item_id, spec.dimension
            )));
        }
        truths.push(t);
    }
    let mut set = OutcomeSet::new(taxonomy.clone());
    for img in images {
        set.add_item(img.item_id.clone(), img.groups.iter().cloned())?;
    }
    for lang in languages {
        for (img, t) in images.iter().zip(&truths) {
            let predicted = classify(&img.vec, prompts, lang)?;
            set.add_outcome(&img.item_id, lang, predicted == t.as_str())?;
        }
    }
    Ok(set)
}
