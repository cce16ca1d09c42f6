//! Individual fairness across languages.
//!
//! For an image `v` and two captions `t_a`, `t_b` of it in different languages
//! the audit compares the similarity gap `|cos(v, t_a) − cos(v, t_b)|` with the
//! Euclidean distance `‖t_a − t_b‖`. A model is α-fair when the gap never
//! exceeds α times the distance; the empirical α of a dataset is the largest
//! observed ratio.
//!
//! Three bounds on the gap are provided:
//!
//! * [`exact_angle_gap_bound`]: `√(2(1 − cos θ))`, θ the angle between the
//!   captions. Holds for every image vector.
//! * [`lemma1_bound`]: the supremum of the above over captions inside a ball of
//!   radius ρ around `t_a`.
//! * [`theorem1_bound`]: the first-order form `‖t_a − t_b‖ / ‖t_a‖`, only
//!   meaningful when the distance is small relative to `‖t_a‖`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{chord_distance, cosine_similarity, euclidean_distance, Vector};

/// Text distances below this are treated as coincident captions and skipped.
pub const SKIP_DISTANCE: f64 = 1e-12;
/// Rounding allowance when comparing a gap against an exact bound.
pub const BOUND_TOLERANCE: f64 = 1e-9;
/// `distance / ‖t_a‖` at or below which the first-order bound is checked.
pub const THEOREM1_CUTOFF: f64 = 0.1;
/// Multiplicative slack on the first-order bound inside the cutoff.
pub const THEOREM1_SLACK: f64 = 1.01;

/// One image with captions of it in two or more languages.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedTriple {
    pub image_id: String,
    pub image_vec: Vector,
    pub text_vec_by_lang: BTreeMap<String, Vector>,
    pub portion_tag: Option<String>,
}

impl GroundedTriple {
    pub fn new(
        image_id: impl Into<String>,
        image_vec: Vector,
        text_vec_by_lang: BTreeMap<String, Vector>,
        portion_tag: Option<String>,
    ) -> Result<Self> {
        let image_id = image_id.into();
        if text_vec_by_lang.len() < 2 {
            return Err(Error::MissingLanguage { item: image_id, language: "<second language>".into() });
        }
        let dim = image_vec.dim();
        for t in text_vec_by_lang.values() {
            if t.dim() != dim {
                return Err(Error::Dimension { expected: dim, found: t.dim() });
            }
        }
        Ok(GroundedTriple { image_id, image_vec, text_vec_by_lang, portion_tag })
    }

    pub fn text(&self, lang: &str) -> Result<&Vector> {
        self.text_vec_by_lang
            .get(lang)
            .ok_or_else(|| Error::MissingLanguage { item: self.image_id.clone(), language: lang.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAudit {
    pub image_id: String,
    /// Image whose captions were used, when it differs from `image_id`
    /// (shuffled audits).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub captions_of: Option<String>,
    pub lang_a: String,
    pub lang_b: String,
    pub sim_a: f64,
    pub sim_b: f64,
    pub sim_gap: f64,
    pub text_distance: f64,
    /// `sim_gap / text_distance`; `None` when the pair was skipped.
    pub ratio: Option<f64>,
    pub exact_bound: f64,
    pub approx_bound: f64,
}

impl PairAudit {
    pub fn is_skipped(&self) -> bool {
        self.ratio.is_none()
    }

    pub fn violates_exact_bound(&self) -> bool {
        self.sim_gap > self.exact_bound + BOUND_TOLERANCE
    }

    pub fn theorem1_qualified(&self) -> bool {
        self.approx_bound <= THEOREM1_CUTOFF
    }

    pub fn violates_theorem1(&self) -> bool {
        self.theorem1_qualified() && self.sim_gap > THEOREM1_SLACK * self.approx_bound + BOUND_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleInfo {
    pub seed: u64,
    pub prng: String,
    /// `permutation[i]` is the triple whose image was paired with triple `i`'s captions.
    pub permutation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualFairnessReport {
    pub lang_a: String,
    pub lang_b: String,
    pub portion_tags: Vec<String>,
    pub audits: Vec<PairAudit>,
    /// Largest non-skipped ratio; `None` if every pair was skipped.
    pub alpha_empirical: Option<f64>,
    pub alpha_method: String,
    pub ratio_p95: Option<f64>,
    pub ratio_p99: Option<f64>,
    pub mean_text_distance: f64,
    pub skipped_count: usize,
    pub exact_bound_violations: usize,
    pub theorem1_qualified_count: usize,
    pub theorem1_qualified_violations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle: Option<ShuffleInfo>,
}

/// `sim_gap / text_distance`, or `None` below [`SKIP_DISTANCE`].
pub fn gap_distance_ratio(sim_gap: f64, text_distance: f64) -> Option<f64> {
    (text_distance >= SKIP_DISTANCE).then(|| sim_gap / text_distance)
}

/// `√(2(1 − cos θ))` for the angle θ between two caption vectors. Evaluated as
/// the chord between their normalizations.
pub fn exact_angle_gap_bound(t_a: &Vector, t_b: &Vector) -> Result<f64> {
    chord_distance(t_a, t_b)
}

/// `√(2(1 − √(1 − (ρ/‖t‖)²)))`, defined for `0 ≤ ρ < ‖t‖`.
pub fn lemma1_bound(rho: f64, t_norm: f64) -> Result<f64> {
    if !(t_norm > 0.0 && t_norm.is_finite()) {
        return Err(Error::Domain(format!("norm must be positive, got {t_norm}")));
    }
    if !(0.0..t_norm).contains(&rho) {
        return Err(Error::Domain(format!("radius {rho} must satisfy 0 <= rho < {t_norm}")));
    }
    let r = rho / t_norm;
    // 1 − √(1 − r²) rewritten as r² / (1 + √(1 − r²)) to avoid cancellation.
    let c = (1.0 - r * r).sqrt();
    Ok(r * (2.0 / (1.0 + c)).sqrt())
}

pub fn theorem1_bound(distance: f64, t_norm: f64) -> Result<f64> {
    if t_norm.is_nan() || t_norm <= 0.0 {
        return Err(Error::Domain(format!("norm must be positive, got {t_norm}")));
    }
    if distance.is_nan() || distance < 0.0 {
        return Err(Error::Domain(format!("distance must be non-negative, got {distance}")));
    }
    Ok(distance / t_norm)
}

fn audit_vectors(
    image_id: &str,
    image: &Vector,
    t_a: &Vector,
    t_b: &Vector,
    lang_a: &str,
    lang_b: &str,
) -> Result<PairAudit> {
    let sim_a = cosine_similarity(image, t_a)?.value();
    let sim_b = cosine_similarity(image, t_b)?.value();
    let sim_gap = (sim_a - sim_b).abs();
    let text_distance = euclidean_distance(t_a, t_b)?;
    Ok(PairAudit {
        image_id: image_id.to_string(),
        captions_of: None,
        lang_a: lang_a.to_string(),
        lang_b: lang_b.to_string(),
        sim_a,
        sim_b,
        sim_gap,
        text_distance,
        ratio: gap_distance_ratio(sim_gap, text_distance),
        exact_bound: exact_angle_gap_bound(t_a, t_b)?,
        approx_bound: theorem1_bound(text_distance, t_a.norm())?,
    })
}

/// Audits one triple for the language pair `(lang_a, lang_b)`. `lang_a`
/// supplies the reference norm for the first-order bound.
pub fn audit_pair(triple: &GroundedTriple, lang_a: &str, lang_b: &str) -> Result<PairAudit> {
    let t_a = triple.text(lang_a)?;
    let t_b = triple.text(lang_b)?;
    audit_vectors(&triple.image_id, &triple.image_vec, t_a, t_b, lang_a, lang_b)
}

/// Nearest-rank quantile of an ascending slice.
fn nearest_rank(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn summarize(
    lang_a: &str,
    lang_b: &str,
    triples: &[GroundedTriple],
    audits: Vec<PairAudit>,
) -> IndividualFairnessReport {
    let mut ratios: Vec<f64> = audits.iter().filter_map(|a| a.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let mut portion_tags: Vec<String> = triples.iter().filter_map(|t| t.portion_tag.clone()).collect();
    portion_tags.sort();
    portion_tags.dedup();
    IndividualFairnessReport {
        lang_a: lang_a.to_string(),
        lang_b: lang_b.to_string(),
        portion_tags,
        alpha_empirical: ratios.last().copied(),
        alpha_method: "max".into(),
        ratio_p95: nearest_rank(&ratios, 0.95),
        ratio_p99: nearest_rank(&ratios, 0.99),
        mean_text_distance: audits.iter().map(|a| a.text_distance).sum::<f64>() / audits.len().max(1) as f64,
        skipped_count: audits.iter().filter(|a| a.is_skipped()).count(),
        exact_bound_violations: audits.iter().filter(|a| a.violates_exact_bound()).count(),
        theorem1_qualified_count: audits.iter().filter(|a| a.theorem1_qualified()).count(),
        theorem1_qualified_violations: audits.iter().filter(|a| a.violates_theorem1()).count(),
        audits,
        shuffle: None,
    }
}

pub fn run_individual_audit(
    triples: &[GroundedTriple],
    lang_a: &str,
    lang_b: &str,
) -> Result<IndividualFairnessReport> {
    if triples.is_empty() {
        return Err(Error::Manifest("individual audit needs at least one triple".into()));
    }
    let audits = triples
        .par_iter()
        .enumerate()
        .map(|(index, t)| audit_pair(t, lang_a, lang_b).map_err(|e| Error::AtTriple { index, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(lang_a, lang_b, triples, audits))
}

pub const SHUFFLE_PRNG: &str = "ChaCha8 (seed_from_u64), Fisher-Yates from the last index";

/// Permutation of `0..n` drawn by Fisher–Yates over a ChaCha8 stream seeded
/// with `seed`.
pub fn shuffle_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Pairs each triple's captions with another triple's image (the dissimilar
/// image-caption audit) and audits the result.
pub fn shuffled_audit(
    triples: &[GroundedTriple],
    lang_a: &str,
    lang_b: &str,
    seed: u64,
) -> Result<IndividualFairnessReport> {
    if triples.len() < 2 {
        return Err(Error::DegenerateShuffle(triples.len()));
    }
    let permutation = shuffle_permutation(triples.len(), seed);
    let audits = triples
        .par_iter()
        .zip(permutation.par_iter())
        .enumerate()
        .map(|(index, (captions, &src))| {
            let image = &triples[src];
            let at = |e| Error::AtTriple { index, source: Box::new(e) };
            let t_a = captions.text(lang_a).map_err(at)?;
            let t_b = captions.text(lang_b).map_err(at)?;
            let mut audit = audit_vectors(&image.image_id, &image.image_vec, t_a, t_b, lang_a, lang_b).map_err(at)?;
            if src != index {
                audit.captions_of = Some(captions.image_id.clone());
            }
            Ok(audit)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = summarize(lang_a, lang_b, triples, audits);
    report.shuffle = Some(ShuffleInfo { seed, prng: SHUFFLE_PRNG.into(), permutation });
    Ok(report)
}
