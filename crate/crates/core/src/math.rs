//! Vector arithmetic shared by every metric.
//!
//! All accumulation happens in `f64` without compensated summation. Zero
//! vectors and non-finite components are rejected when a [`Vector`] is built,
//! so cosine similarity is always defined downstream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed before a computed cosine is treated as out of range.
pub const SIMILARITY_EPSILON: f64 = 1e-12;

/// A finite, nonzero embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector {
    values: Vec<f64>,
    norm: f64,
}

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidVector("vector has no components".into()));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidVector(format!("component {i} is not finite ({})", values[i])));
        }
        let norm = l2_norm(&values);
        if norm == 0.0 {
            return Err(Error::InvalidVector("zero vector".into()));
        }
        if !norm.is_finite() {
            return Err(Error::InvalidVector("norm overflows f64".into()));
        }
        Ok(Vector { values, norm })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Returns `self * factor`; fails if the result is no longer a valid vector.
    pub fn scaled(&self, factor: f64) -> Result<Vector> {
        Vector::new(self.values.iter().map(|x| x * factor).collect())
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot(&self.values, &other.values))
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Vector::new(values)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.values
    }
}

/// Cosine similarity clamped into `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    /// Clamps `raw` into `[-1, 1]`. Values further out than
    /// [`SIMILARITY_EPSILON`] indicate a bug upstream and trip a debug assertion.
    pub fn from_raw(raw: f64) -> Self {
        debug_assert!(
            (-1.0 - SIMILARITY_EPSILON..=1.0 + SIMILARITY_EPSILON).contains(&raw),
            "cosine {raw} outside [-1, 1]"
        );
        SimilarityScore(raw.clamp(-1.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine_similarity(v: &Vector, t: &Vector) -> Result<SimilarityScore> {
    check_dims(v.dim(), t.dim())?;
    let raw = dot(&v.values, &t.values) / (v.norm * t.norm);
    Ok(SimilarityScore::from_raw(raw))
}

pub fn euclidean_distance(a: &Vector, b: &Vector) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Distance between the unit vectors `a/‖a‖` and `b/‖b‖`.
///
/// Equal to `√(2(1 − cos θ))` for the angle θ between `a` and `b`, but free of
/// the cancellation in `1 − cos θ` when θ is small.
pub fn chord_distance(a: &Vector, b: &Vector) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| {
            let d = x / a.norm - y / b.norm;
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// Index of the candidate most cosine-similar to `query`. Ties go to the
/// smallest index.
pub fn argmax_similarity<'a, I>(query: &Vector, candidates: I) -> Result<usize>
where
    I: IntoIterator<Item = &'a Vector>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.into_iter().enumerate() {
        let s = cosine_similarity(query, c)?.value();
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyCandidates)
}
