//! Randomized checks of the individual- and group-fairness bounds.
//!
//! Every verifier draws `trials` independent instances and never stops early,
//! so slack statistics cover the whole sample. Trial `i` of a verifier draws
//! from ChaCha8 keyed by `(seed, verifier)` on stream `i`; results are
//! therefore identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::group::{prop1_check, GroupLabel, OutcomeSet, Taxonomy};
use crate::individual::{exact_angle_gap_bound, lemma1_bound, theorem1_bound, THEOREM1_CUTOFF, THEOREM1_SLACK};
use crate::math::{cosine_similarity, euclidean_distance, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    pub trials: u64,
    pub dim_range: (usize, usize),
    pub rho_fraction_range: (f64, f64),
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed: 1,
            trials: 100_000,
            dim_range: (2, 512),
            rho_fraction_range: (0.01, 0.99),
            tolerance: 1e-9,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let (dmin, dmax) = self.dim_range;
        let (lo, hi) = self.rho_fraction_range;
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if dmin == 0 || dmin > dmax {
            return Err(Error::Domain(format!("bad dimension range {dmin}..={dmax}")));
        }
        if !(0.0 <= lo && lo < hi && hi < 1.0) {
            return Err(Error::Domain(format!("rho fraction range ({lo}, {hi}) must satisfy 0 <= lo < hi < 1")));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// Gap bounded by the ball-radius bound.
    Lemma1,
    /// Gap bounded by `√(2(1 − cos θ))`.
    ExactAngle,
    /// Gap bounded by `1.01 · distance/‖t‖` when `distance/‖t‖ ≤ 0.1`.
    Theorem1Qualified,
    /// Cross-lingual cross-group decomposition bound.
    Prop1,
}

impl Inequality {
    pub fn is_exact(self) -> bool {
        !matches!(self, Inequality::Theorem1Qualified)
    }

    fn salt(self) -> u64 {
        match self {
            Inequality::Lemma1 => 0x4c45_4d4d_4131,
            Inequality::ExactAngle => 0x4555_4331,
            Inequality::Theorem1Qualified => 0x5448_4d31,
            Inequality::Prop1 => 0x0050_524f_5031,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityStats {
    pub inequality: Inequality,
    pub exact: bool,
    pub checked: u64,
    pub violations: u64,
    /// Largest `rhs − lhs` seen.
    pub max_slack_observed: f64,
    /// Smallest `rhs − lhs` seen; near zero means the bound was nearly attained.
    pub min_slack_observed: f64,
    pub mean_slack: f64,
    /// First-order bound only: largest `gap·‖t‖/distance` seen.
    pub max_tightness_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub inequality: Inequality,
    pub trial: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub inputs: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub config: OracleConfig,
    pub checked: Vec<InequalityStats>,
    pub violations: Vec<Violation>,
}

impl OracleResult {
    pub fn stats(&self, inequality: Inequality) -> Option<&InequalityStats> {
        self.checked.iter().find(|s| s.inequality == inequality)
    }

    pub fn violation_count(&self, inequality: Inequality) -> u64 {
        self.stats(inequality).map_or(0, |s| s.violations)
    }

    /// True when no exact inequality was violated.
    pub fn exact_inequalities_hold(&self) -> bool {
        self.checked.iter().filter(|s| s.exact).all(|s| s.violations == 0)
    }

    pub fn all_hold(&self) -> bool {
        self.checked.iter().all(|s| s.violations == 0)
    }

    fn merge(mut self, other: OracleResult) -> OracleResult {
        self.checked.extend(other.checked);
        self.violations.extend(other.violations);
        self
    }
}

struct Trial {
    lhs: f64,
    rhs: f64,
    tightness: Option<f64>,
    inputs: Option<Box<dyn FnOnce() -> serde_json::Value + Send>>,
}

fn trial_rng(config: &OracleConfig, which: Inequality, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ which.salt());
    rng.set_stream(trial);
    rng
}

fn run<F>(config: &OracleConfig, which: Inequality, trial_fn: F) -> Result<OracleResult>
where
    F: Fn(&mut ChaCha8Rng) -> Option<Trial> + Sync,
{
    config.validate()?;
    let trials: Vec<Option<Trial>> =
        (0..config.trials).into_par_iter().map(|i| trial_fn(&mut trial_rng(config, which, i))).collect();

    let mut stats = InequalityStats {
        inequality: which,
        exact: which.is_exact(),
        checked: 0,
        violations: 0,
        max_slack_observed: f64::NEG_INFINITY,
        min_slack_observed: f64::INFINITY,
        mean_slack: 0.0,
        max_tightness_ratio: None,
    };
    let mut slack_sum = 0.0;
    let mut violations = Vec::new();
    for (i, t) in trials.into_iter().enumerate() {
        let Some(t) = t else { continue };
        let slack = t.rhs - t.lhs;
        stats.checked += 1;
        slack_sum += slack;
        stats.max_slack_observed = stats.max_slack_observed.max(slack);
        stats.min_slack_observed = stats.min_slack_observed.min(slack);
        if let Some(r) = t.tightness {
            stats.max_tightness_ratio = Some(stats.max_tightness_ratio.map_or(r, |m: f64| m.max(r)));
        }
        if t.lhs > t.rhs + config.tolerance {
            stats.violations += 1;
            violations.push(Violation {
                inequality: which,
                trial: i as u64,
                lhs: t.lhs,
                rhs: t.rhs,
                inputs: t.inputs.map_or(serde_json::Value::Null, |f| f()),
            });
        }
    }
    if stats.checked > 0 {
        stats.mean_slack = slack_sum / stats.checked as f64;
    } else {
        stats.max_slack_observed = 0.0;
        stats.min_slack_observed = 0.0;
    }
    Ok(OracleResult { config: config.clone(), checked: vec![stats], violations })
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Gaussian direction with a log-uniform norm in `[1e-2, 1e2]`.
fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let raw = gaussian(rng, dim);
        let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            let scale = 10f64.powf(rng.random_range(-2.0..2.0)) / n;
            return Vector::new(raw.into_iter().map(|x| x * scale).collect()).expect("nonzero");
        }
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let raw = gaussian(rng, dim);
        let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return raw.into_iter().map(|x| x / n).collect();
        }
    }
}

fn offset(t: &Vector, dir: &[f64], radius: f64) -> Vector {
    Vector::new(t.values().iter().zip(dir).map(|(x, d)| x + radius * d).collect())
        .expect("offset stays inside the ball around a nonzero centre")
}

/// With probability 1/3, the image direction that maximizes the gap between
/// `a` and `b` (plus a little noise); otherwise a random vector.
fn image_vector(rng: &mut ChaCha8Rng, a: &Vector, b: &Vector) -> Vector {
    let dim = a.dim();
    if rng.random_range(0..3) == 0 {
        let noise = gaussian(rng, dim);
        let raw: Vec<f64> = a
            .values()
            .iter()
            .zip(b.values())
            .zip(&noise)
            .map(|((x, y), e)| x / a.norm() - y / b.norm() + 1e-3 * e / (dim as f64).sqrt())
            .collect();
        if let Ok(v) = Vector::new(raw) {
            return v;
        }
    }
    random_vector(rng, dim)
}

fn gap(v: &Vector, a: &Vector, b: &Vector) -> f64 {
    let sa = cosine_similarity(v, a).expect("dims agree").value();
    let sb = cosine_similarity(v, b).expect("dims agree").value();
    (sa - sb).abs()
}

fn vector_inputs(
    pairs: Vec<(&'static str, &Vector)>,
    extra: serde_json::Value,
) -> Box<dyn FnOnce() -> serde_json::Value + Send> {
    let owned: Vec<(&'static str, Vec<f64>)> = pairs.into_iter().map(|(k, v)| (k, v.values().to_vec())).collect();
    Box::new(move || {
        let mut m = serde_json::Map::new();
        for (k, v) in owned {
            m.insert(k.to_string(), json!(v));
        }
        m.insert("extra".into(), extra);
        serde_json::Value::Object(m)
    })
}

fn draw_dim(rng: &mut ChaCha8Rng, config: &OracleConfig) -> usize {
    rng.random_range(config.dim_range.0..=config.dim_range.1)
}

/// Gap between `t` and a point drawn uniformly from the ball of radius
/// `ρ = fraction·‖t‖` around it, against the ball bound.
pub fn verify_lemma1(config: &OracleConfig) -> Result<OracleResult> {
    let (lo, hi) = config.rho_fraction_range;
    run(config, Inequality::Lemma1, |rng| {
        let dim = draw_dim(rng, config);
        let t = random_vector(rng, dim);
        let fraction = rng.random_range(lo..hi);
        let rho = fraction * t.norm();
        let dir = unit_direction(rng, dim);
        let radius = rho * rng.random::<f64>().powf(1.0 / dim as f64);
        let t2 = offset(&t, &dir, radius);
        let v = image_vector(rng, &t, &t2);
        let lhs = gap(&v, &t, &t2);
        let rhs = lemma1_bound(rho, t.norm()).expect("rho < ‖t‖");
        Some(Trial {
            lhs,
            rhs,
            tightness: None,
            inputs: Some(vector_inputs(vec![("v", &v), ("t", &t), ("t_prime", &t2)], json!({ "rho": rho }))),
        })
    })
}

/// Gap between two arbitrary captions against `√(2(1 − cos θ))`.
pub fn verify_exact_angle_bound(config: &OracleConfig) -> Result<OracleResult> {
    run(config, Inequality::ExactAngle, |rng| {
        let dim = draw_dim(rng, config);
        let ta = random_vector(rng, dim);
        let tb = if rng.random::<bool>() {
            random_vector(rng, dim)
        } else {
            // nearby caption, relative offset log-uniform in [1e-6, 1]
            let rel = 10f64.powf(rng.random_range(-6.0..0.0));
            let dir = unit_direction(rng, dim);
            offset(&ta, &dir, rel * ta.norm() * 0.999)
        };
        let v = image_vector(rng, &ta, &tb);
        let lhs = gap(&v, &ta, &tb);
        let rhs = exact_angle_gap_bound(&ta, &tb).expect("dims agree");
        Some(Trial {
            lhs,
            rhs,
            tightness: None,
            inputs: Some(vector_inputs(vec![("v", &v), ("t_a", &ta), ("t_b", &tb)], json!(null))),
        })
    })
}

/// First-order bound, checked only where `distance/‖t‖ ≤ 0.1`, with 1% slack.
pub fn verify_theorem1(config: &OracleConfig) -> Result<OracleResult> {
    run(config, Inequality::Theorem1Qualified, |rng| {
        let dim = draw_dim(rng, config);
        let t = random_vector(rng, dim);
        let fraction = THEOREM1_CUTOFF * (1.0 - rng.random::<f64>());
        let dir = unit_direction(rng, dim);
        let t2 = offset(&t, &dir, fraction * t.norm());
        let distance = euclidean_distance(&t, &t2).expect("dims agree");
        let approx = theorem1_bound(distance, t.norm()).expect("positive norm");
        if approx > THEOREM1_CUTOFF || distance == 0.0 {
            return None;
        }
        let v = image_vector(rng, &t, &t2);
        let lhs = gap(&v, &t, &t2);
        Some(Trial {
            lhs,
            rhs: THEOREM1_SLACK * approx,
            tightness: Some(lhs / approx),
            inputs: Some(vector_inputs(vec![("v", &v), ("t", &t), ("t_prime", &t2)], json!(null))),
        })
    })
}

/// Random binary-partition outcome sets for two languages over the same
/// items; cohort sizes in `2..=200`.
pub fn verify_prop1(config: &OracleConfig) -> Result<OracleResult> {
    let taxonomy = Taxonomy::new().with_dimension("group", ["a", "b"])?;
    let a = GroupLabel::new("group", "a");
    let b = GroupLabel::new("group", "b");
    run(config, Inequality::Prop1, |rng| {
        let n_a = rng.random_range(2..=200usize);
        let n_b = rng.random_range(2..=200usize);
        let mut set = OutcomeSet::new(taxonomy.clone());
        for i in 0..n_a + n_b {
            let g = if i < n_a { a.clone() } else { b.clone() };
            set.add_item(i.to_string(), [g]).expect("declared group");
        }
        let mut summary = Vec::new();
        for lang in ["L", "L'"] {
            let (q_a, q_b): (f64, f64) = (rng.random(), rng.random());
            let mut correct = [0usize; 2];
            for i in 0..n_a + n_b {
                let q = if i < n_a { q_a } else { q_b };
                let ok = rng.random::<f64>() < q;
                correct[usize::from(i >= n_a)] += usize::from(ok);
                set.add_outcome(&i.to_string(), lang, ok).expect("fresh outcome");
            }
            summary.push(json!({ "language": lang, "correct_a": correct[0], "correct_b": correct[1] }));
        }
        let c = prop1_check(&set, "L", "L'", &a, &b).expect("binary partition by construction");
        let extra = json!({ "n_a": n_a, "n_b": n_b, "languages": summary });
        Some(Trial { lhs: c.lhs, rhs: c.rhs, tightness: None, inputs: Some(Box::new(move || extra)) })
    })
}

/// Runs all four verifiers.
pub fn verify_all(config: &OracleConfig) -> Result<OracleResult> {
    Ok(verify_lemma1(config)?
        .merge(verify_exact_angle_bound(config)?)
        .merge(verify_theorem1(config)?)
        .merge(verify_prop1(config)?))
}
