//! Group fairness: matching accuracy per language, the cross-lingual gap,
//! the per-language group rate gap (`disp`), and the decomposition bound that
//! ties them together for a binary protected attribute:
//!
//! ```text
//! |acc_a(L) − acc_b(L')| ≤ gap(L, L') + p_b·disp(L)(a, b) + p_a·disp(L')(a, b)
//! ```
//!
//! Accuracies are held as exact [`Fraction`]s of correct over total records,
//! so gaps and disparities are computed from integers and rounded once.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rounding allowance for the decomposition bound and the mixture identity.
pub const PROP1_TOLERANCE: f64 = 1e-9;
/// How far `p_a + p_b` may stray from 1 for a partition to count as binary.
pub const PARTITION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupLabel {
    pub dimension: String,
    pub value: String,
}

impl GroupLabel {
    pub fn new(dimension: impl Into<String>, value: impl Into<String>) -> Self {
        GroupLabel { dimension: dimension.into(), value: value.into() }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.dimension, self.value)
    }
}

/// Age buckets used for the age dimension. Age 2 falls in the first bucket.
pub const AGE_BUCKETS: [&str; 5] = ["0-2", "3-19", "20-49", "50-69", "70+"];

pub fn age_bucket(age: u32) -> &'static str {
    match age {
        0..=2 => AGE_BUCKETS[0],
        3..=19 => AGE_BUCKETS[1],
        20..=49 => AGE_BUCKETS[2],
        50..=69 => AGE_BUCKETS[3],
        _ => AGE_BUCKETS[4],
    }
}

/// Declared protected-group dimensions and their values, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Taxonomy {
    dims: BTreeMap<String, Vec<String>>,
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dimension<S: Into<String>>(
        mut self,
        dimension: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        self.add_dimension(dimension, values)?;
        Ok(self)
    }

    pub fn add_dimension<S: Into<String>>(
        &mut self,
        dimension: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Result<()> {
        let dimension = dimension.into();
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if dimension.is_empty() || values.iter().any(String::is_empty) {
            return Err(Error::Taxonomy("empty dimension or value name".into()));
        }
        let unique: HashSet<&String> = values.iter().collect();
        if values.is_empty() || unique.len() != values.len() {
            return Err(Error::Taxonomy(format!("dimension `{dimension}` needs distinct, non-empty values")));
        }
        if self.dims.insert(dimension.clone(), values).is_some() {
            return Err(Error::Taxonomy(format!("dimension `{dimension}` declared twice")));
        }
        Ok(())
    }

    pub fn values(&self, dimension: &str) -> Option<&[String]> {
        self.dims.get(dimension).map(Vec::as_slice)
    }

    pub fn dimensions(&self) -> impl Iterator<Item = &str> {
        self.dims.keys().map(String::as_str)
    }

    pub fn labels(&self, dimension: &str) -> Option<Vec<GroupLabel>> {
        self.values(dimension).map(|vs| vs.iter().map(|v| GroupLabel::new(dimension, v.clone())).collect())
    }

    pub fn contains(&self, label: &GroupLabel) -> bool {
        self.values(&label.dimension).is_some_and(|vs| vs.contains(&label.value))
    }

    pub fn check(&self, label: &GroupLabel) -> Result<()> {
        if self.contains(label) {
            Ok(())
        } else {
            Err(Error::Taxonomy(format!("undeclared group {label}")))
        }
    }
}

/// Exact ratio of two counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "fraction with zero denominator");
        Fraction { num, den }
    }

    pub fn zero() -> Self {
        Fraction { num: 0, den: 1 }
    }

    /// Correctly rounded when both parts are below 2^53.
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `|self − other|`, reduced.
    pub fn abs_diff(self, other: Fraction) -> Fraction {
        let l = self.num as u128 * other.den as u128;
        let r = other.num as u128 * self.den as u128;
        let num = l.abs_diff(r);
        let den = self.den as u128 * other.den as u128;
        let g = gcd(num, den).max(1);
        let (num, den) = (num / g, den / g);
        Fraction {
            num: u64::try_from(num).expect("count product exceeds u64"),
            den: u64::try_from(den).expect("count product exceeds u64"),
        }
    }

    /// Value in tenths of a percent, rounded half away from zero.
    pub fn per_mille_rounded(self) -> u64 {
        let n = self.num as u128;
        let d = self.den as u128;
        ((2000 * n + d) / (2 * d)) as u64
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// A single matching outcome as it appears in external data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub item_id: String,
    pub language: String,
    pub groups: Vec<GroupLabel>,
    pub correct: bool,
}

#[derive(Debug, Clone)]
struct Item {
    id: String,
    groups: Vec<GroupLabel>,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    item: u32,
    language: u16,
    correct: bool,
}

/// Matching outcomes per (item, language), with each item's protected groups.
///
/// Items are registered once with their groups; outcomes then reference them
/// by id. An item may carry at most one value per dimension.
#[derive(Debug, Clone)]
pub struct OutcomeSet {
    taxonomy: Taxonomy,
    items: Vec<Item>,
    item_index: HashMap<String, u32>,
    languages: Vec<String>,
    records: Vec<Outcome>,
    seen: HashSet<(u32, u16)>,
}

impl OutcomeSet {
    pub fn new(taxonomy: Taxonomy) -> Self {
        OutcomeSet {
            taxonomy,
            items: Vec::new(),
            item_index: HashMap::new(),
            languages: Vec::new(),
            records: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn from_records(taxonomy: Taxonomy, records: impl IntoIterator<Item = OutcomeRecord>) -> Result<Self> {
        let mut set = OutcomeSet::new(taxonomy);
        for r in records {
            match set.item_index.get(&r.item_id) {
                Some(&i) => {
                    let mut a = set.items[i as usize].groups.clone();
                    let mut b = r.groups.clone();
                    a.sort();
                    b.sort();
                    if a != b {
                        return Err(Error::Taxonomy(format!("item `{}` listed with inconsistent groups", r.item_id)));
                    }
                }
                None => set.add_item(r.item_id.clone(), r.groups)?,
            }
            set.add_outcome(&r.item_id, &r.language, r.correct)?;
        }
        Ok(set)
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn add_item(&mut self, id: impl Into<String>, groups: impl IntoIterator<Item = GroupLabel>) -> Result<()> {
        let id = id.into();
        if self.item_index.contains_key(&id) {
            return Err(Error::Taxonomy(format!("item `{id}` registered twice")));
        }
        let groups: Vec<GroupLabel> = groups.into_iter().collect();
        let mut dims = HashSet::new();
        for g in &groups {
            self.taxonomy.check(g)?;
            if !dims.insert(g.dimension.as_str()) {
                return Err(Error::Taxonomy(format!("item `{id}` has several values for `{}`", g.dimension)));
            }
        }
        let idx = u32::try_from(self.items.len()).expect("more than u32::MAX items");
        self.item_index.insert(id.clone(), idx);
        self.items.push(Item { id, groups });
        Ok(())
    }

    pub fn add_outcome(&mut self, item_id: &str, language: &str, correct: bool) -> Result<()> {
        let item = *self.item_index.get(item_id).ok_or_else(|| Error::DanglingReference(item_id.to_string()))?;
        let lang = match self.languages.iter().position(|l| l == language) {
            Some(i) => i as u16,
            None => {
                self.languages.push(language.to_string());
                (self.languages.len() - 1) as u16
            }
        };
        if !self.seen.insert((item, lang)) {
            return Err(Error::Manifest(format!("duplicate outcome for `{item_id}` in `{language}`")));
        }
        self.records.push(Outcome { item, language: lang, correct });
        Ok(())
    }

    /// Languages in order of first appearance.
    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = OutcomeRecord> + '_ {
        self.records.iter().map(|r| {
            let item = &self.items[r.item as usize];
            OutcomeRecord {
                item_id: item.id.clone(),
                language: self.languages[r.language as usize].clone(),
                groups: item.groups.clone(),
                correct: r.correct,
            }
        })
    }

    fn language_index(&self, language: &str) -> Option<u16> {
        self.languages.iter().position(|l| l == language).map(|i| i as u16)
    }

    /// Correct/total among records in `language` whose item carries every label in `filter`.
    fn tally(&self, language: &str, filter: &[&GroupLabel]) -> (u64, u64) {
        let Some(lang) = self.language_index(language) else {
            return (0, 0);
        };
        let (mut correct, mut total) = (0u64, 0u64);
        for r in self.records.iter().filter(|r| r.language == lang) {
            let groups = &self.items[r.item as usize].groups;
            if filter.iter().all(|f| groups.contains(f)) {
                total += 1;
                correct += u64::from(r.correct);
            }
        }
        (correct, total)
    }

    fn cohort_rate(&self, language: &str, filter: &[&GroupLabel]) -> Option<Fraction> {
        let (c, n) = self.tally(language, filter);
        (n > 0).then(|| Fraction::new(c, n))
    }
}

pub fn accuracy_fraction(outcomes: &OutcomeSet, language: &str) -> Result<Fraction> {
    outcomes.cohort_rate(language, &[]).ok_or_else(|| Error::EmptyCohort(language.to_string()))
}

/// Fraction of `language` records matched correctly.
pub fn accuracy(outcomes: &OutcomeSet, language: &str) -> Result<f64> {
    accuracy_fraction(outcomes, language).map(Fraction::value)
}

/// Accuracy within one group, `None` when the group has no records in `language`.
pub fn group_accuracy(outcomes: &OutcomeSet, language: &str, group: &GroupLabel) -> Result<Option<Fraction>> {
    outcomes.taxonomy.check(group)?;
    Ok(outcomes.cohort_rate(language, &[group]))
}

pub fn gap_fraction(outcomes: &OutcomeSet, lang_a: &str, lang_b: &str) -> Result<Fraction> {
    Ok(accuracy_fraction(outcomes, lang_a)?.abs_diff(accuracy_fraction(outcomes, lang_b)?))
}

/// `|acc(L) − acc(L')|`.
pub fn gap(outcomes: &OutcomeSet, lang_a: &str, lang_b: &str) -> Result<f64> {
    gap_fraction(outcomes, lang_a, lang_b).map(Fraction::value)
}

fn disp_within(
    outcomes: &OutcomeSet,
    language: &str,
    a: &GroupLabel,
    b: &GroupLabel,
    stratum: Option<&GroupLabel>,
) -> Result<Option<Fraction>> {
    outcomes.taxonomy.check(a)?;
    outcomes.taxonomy.check(b)?;
    if let Some(s) = stratum {
        outcomes.taxonomy.check(s)?;
    }
    accuracy_fraction(outcomes, language)?;
    let filter = |g| match stratum {
        Some(s) => vec![s, g],
        None => vec![g],
    };
    let acc_a = outcomes.cohort_rate(language, &filter(a));
    let acc_b = outcomes.cohort_rate(language, &filter(b));
    Ok(acc_a.zip(acc_b).map(|(x, y)| x.abs_diff(y)))
}

pub fn disp_fraction(
    outcomes: &OutcomeSet,
    language: &str,
    a: &GroupLabel,
    b: &GroupLabel,
) -> Result<Option<Fraction>> {
    disp_within(outcomes, language, a, b, None)
}

/// `|acc_a(L) − acc_b(L)|`; `None` (undefined) if either cohort is empty.
pub fn disp(outcomes: &OutcomeSet, language: &str, a: &GroupLabel, b: &GroupLabel) -> Result<Option<f64>> {
    Ok(disp_fraction(outcomes, language, a, b)?.map(Fraction::value))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BinaryPartition {
    p_a: f64,
    p_b: f64,
    acc: Fraction,
    acc_a: Fraction,
    acc_b: Fraction,
}

fn binary_partition(outcomes: &OutcomeSet, language: &str, a: &GroupLabel, b: &GroupLabel) -> Result<BinaryPartition> {
    outcomes.taxonomy.check(a)?;
    outcomes.taxonomy.check(b)?;
    if a.dimension != b.dimension || a == b {
        return Err(Error::Partition(format!("{a} and {b} are not two values of one dimension")));
    }
    let (c, n) = outcomes.tally(language, &[]);
    if n == 0 {
        return Err(Error::EmptyCohort(language.to_string()));
    }
    let (ca, na) = outcomes.tally(language, &[a]);
    let (cb, nb) = outcomes.tally(language, &[b]);
    if na + nb != n {
        return Err(Error::Partition(format!(
            "{} of {n} `{language}` records are in neither {a} nor {b}",
            n - na - nb
        )));
    }
    if na == 0 || nb == 0 {
        return Err(Error::Partition(format!("empty cohort for {a} or {b} in `{language}`")));
    }
    let (p_a, p_b) = (na as f64 / n as f64, nb as f64 / n as f64);
    debug_assert!((p_a + p_b - 1.0).abs() <= PARTITION_TOLERANCE);
    Ok(BinaryPartition {
        p_a,
        p_b,
        acc: Fraction::new(c, n),
        acc_a: Fraction::new(ca, na),
        acc_b: Fraction::new(cb, nb),
    })
}

/// `acc(L) − (p_a·acc_a(L) + p_b·acc_b(L))` for a binary partition.
pub fn mixture_residual(outcomes: &OutcomeSet, language: &str, a: &GroupLabel, b: &GroupLabel) -> Result<f64> {
    let bp = binary_partition(outcomes, language, a, b)?;
    Ok(bp.acc.value() - (bp.p_a * bp.acc_a.value() + bp.p_b * bp.acc_b.value()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Check {
    pub lang_a: String,
    pub lang_b: String,
    pub a: GroupLabel,
    pub b: GroupLabel,
    /// Share of group `b` among `lang_a` records.
    pub p_b: f64,
    /// Share of group `a` among `lang_b` records.
    pub p_a: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the cross-lingual, cross-group decomposition bound for languages
/// `(lang_a, lang_b)` and groups `(a, b)`.
///
/// Proportions are measured per language: `p_b` in `lang_a` and `p_a` in
/// `lang_b`. When both languages cover the same items these coincide with the
/// population shares.
pub fn prop1_check(
    outcomes: &OutcomeSet,
    lang_a: &str,
    lang_b: &str,
    a: &GroupLabel,
    b: &GroupLabel,
) -> Result<Prop1Check> {
    let l = binary_partition(outcomes, lang_a, a, b)?;
    let lp = binary_partition(outcomes, lang_b, a, b)?;
    let lhs = l.acc_a.abs_diff(lp.acc_b).value();
    let gap = l.acc.abs_diff(lp.acc).value();
    let disp_l = l.acc_a.abs_diff(l.acc_b).value();
    let disp_lp = lp.acc_a.abs_diff(lp.acc_b).value();
    let rhs = gap + l.p_b * disp_l + lp.p_a * disp_lp;
    Ok(Prop1Check {
        lang_a: lang_a.to_string(),
        lang_b: lang_b.to_string(),
        a: a.clone(),
        b: b.clone(),
        p_b: l.p_b,
        p_a: lp.p_a,
        lhs,
        rhs,
        holds: lhs <= rhs + PROP1_TOLERANCE,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAuditConfig {
    pub languages: Vec<String>,
    pub group_dims: Vec<String>,
    /// Optional dimension whose values split every disparity into strata
    /// (e.g. gender gaps within each race).
    pub stratify_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub correct: u64,
    pub total: u64,
    pub accuracy: Option<f64>,
}

impl RateEntry {
    fn from_tally((correct, total): (u64, u64)) -> Self {
        RateEntry { correct, total, accuracy: (total > 0).then(|| Fraction::new(correct, total).value()) }
    }

    pub fn fraction(&self) -> Option<Fraction> {
        (self.total > 0).then(|| Fraction::new(self.correct, self.total))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub lang_a: String,
    pub lang_b: String,
    pub gap: f64,
    pub exact: Fraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracyEntry {
    pub language: String,
    pub stratum: Option<GroupLabel>,
    pub group: GroupLabel,
    #[serde(flatten)]
    pub rate: RateEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispEntry {
    pub language: String,
    pub stratum: Option<GroupLabel>,
    pub a: GroupLabel,
    pub b: GroupLabel,
    pub disp: Option<f64>,
    pub exact: Option<Fraction>,
    pub undefined_reason: Option<String>,
}

/// Disparity between stratum-averaged accuracies of two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageDispEntry {
    pub language: String,
    pub stratify_by: String,
    pub a: GroupLabel,
    pub b: GroupLabel,
    pub acc_a: Option<f64>,
    pub acc_b: Option<f64>,
    pub disp: Option<f64>,
    pub strata_used: usize,
    pub undefined_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionEntry {
    pub language: String,
    pub group: GroupLabel,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFairnessReport {
    pub languages: Vec<String>,
    pub group_dims: Vec<String>,
    pub stratify_by: Option<String>,
    pub acc_by_lang: BTreeMap<String, RateEntry>,
    pub gap_matrix: Vec<GapEntry>,
    pub acc_by_lang_group: Vec<GroupAccuracyEntry>,
    pub disp_by_lang: Vec<DispEntry>,
    pub average_disp: Vec<AverageDispEntry>,
    pub proportions: Vec<ProportionEntry>,
    pub prop1_checks: Vec<Prop1Check>,
    pub warnings: Vec<String>,
    pub metadata: BTreeMap<String, String>,
}

impl GroupFairnessReport {
    pub fn gap(&self, lang_a: &str, lang_b: &str) -> Option<f64> {
        self.gap_matrix.iter().find(|g| g.lang_a == lang_a && g.lang_b == lang_b).map(|g| g.gap)
    }

    pub fn disp_entry(
        &self,
        language: &str,
        stratum: Option<&GroupLabel>,
        a: &GroupLabel,
        b: &GroupLabel,
    ) -> Option<&DispEntry> {
        self.disp_by_lang
            .iter()
            .find(|d| d.language == language && d.stratum.as_ref() == stratum && &d.a == a && &d.b == b)
    }
}

pub fn run_group_audit(
    outcomes: &OutcomeSet,
    languages: &[String],
    group_dims: &[String],
) -> Result<GroupFairnessReport> {
    run_group_audit_with(
        outcomes,
        &GroupAuditConfig { languages: languages.to_vec(), group_dims: group_dims.to_vec(), stratify_by: None },
    )
}

/// Full group audit. Empty cohorts become undefined entries plus a warning;
/// only configuration errors (no languages, undeclared dimensions) abort.
pub fn run_group_audit_with(outcomes: &OutcomeSet, config: &GroupAuditConfig) -> Result<GroupFairnessReport> {
    let tax = outcomes.taxonomy();
    if config.languages.is_empty() {
        return Err(Error::Manifest("group audit needs at least one language".into()));
    }
    let mut dims = Vec::new();
    for d in &config.group_dims {
        dims.push((d.clone(), tax.labels(d).ok_or_else(|| Error::Taxonomy(format!("undeclared dimension `{d}`")))?));
    }
    let strata: Vec<GroupLabel> = match &config.stratify_by {
        Some(s) => tax.labels(s).ok_or_else(|| Error::Taxonomy(format!("undeclared dimension `{s}`")))?,
        None => Vec::new(),
    };

    let mut warnings = Vec::new();
    let mut acc_by_lang = BTreeMap::new();
    for l in &config.languages {
        let entry = RateEntry::from_tally(outcomes.tally(l, &[]));
        if entry.total == 0 {
            warnings.push(format!("no records for language `{l}`"));
        }
        acc_by_lang.insert(l.clone(), entry);
    }

    let mut gap_matrix = Vec::new();
    for la in &config.languages {
        for lb in &config.languages {
            let (Some(fa), Some(fb)) = (acc_by_lang[la].fraction(), acc_by_lang[lb].fraction()) else {
                continue;
            };
            let exact = fa.abs_diff(fb);
            gap_matrix.push(GapEntry { lang_a: la.clone(), lang_b: lb.clone(), gap: exact.value(), exact });
        }
    }

    let mut acc_by_lang_group = Vec::new();
    let mut disp_by_lang = Vec::new();
    let mut average_disp = Vec::new();
    let mut proportions = Vec::new();
    let mut prop1_checks = Vec::new();

    for l in &config.languages {
        let total = acc_by_lang[l].total;
        for (dim, labels) in &dims {
            let stratum_options: Vec<Option<&GroupLabel>> =
                std::iter::once(None).chain(strata.iter().filter(|s| &s.dimension != dim).map(Some)).collect();
            for stratum in &stratum_options {
                let mut rates = Vec::with_capacity(labels.len());
                for g in labels {
                    let filter: Vec<&GroupLabel> = stratum.iter().copied().chain([g]).collect();
                    let rate = RateEntry::from_tally(outcomes.tally(l, &filter));
                    if stratum.is_none() && total > 0 {
                        proportions.push(ProportionEntry {
                            language: l.clone(),
                            group: g.clone(),
                            proportion: rate.total as f64 / total as f64,
                        });
                    }
                    rates.push(rate.clone());
                    acc_by_lang_group.push(GroupAccuracyEntry {
                        language: l.clone(),
                        stratum: stratum.cloned(),
                        group: g.clone(),
                        rate,
                    });
                }
                for i in 0..labels.len() {
                    for j in i + 1..labels.len() {
                        let (a, b) = (&labels[i], &labels[j]);
                        let exact = rates[i].fraction().zip(rates[j].fraction()).map(|(x, y)| x.abs_diff(y));
                        let undefined_reason = exact.is_none().then(|| {
                            let empty: Vec<String> = [(a, &rates[i]), (b, &rates[j])]
                                .iter()
                                .filter(|(_, r)| r.total == 0)
                                .map(|(g, _)| g.to_string())
                                .collect();
                            let within = stratum.map(|s| format!(" within {s}")).unwrap_or_default();
                            format!("empty cohort {}{within} in `{l}`", empty.join(", "))
                        });
                        if let Some(reason) = &undefined_reason {
                            warnings.push(format!("disp({a}, {b}) undefined: {reason}"));
                        }
                        disp_by_lang.push(DispEntry {
                            language: l.clone(),
                            stratum: stratum.cloned(),
                            a: a.clone(),
                            b: b.clone(),
                            disp: exact.map(Fraction::value),
                            exact,
                            undefined_reason,
                        });
                    }
                }
            }

            if let Some(stratify_by) = config.stratify_by.as_ref().filter(|s| *s != dim) {
                for i in 0..labels.len() {
                    for j in i + 1..labels.len() {
                        average_disp.push(average_entry(outcomes, l, stratify_by, &strata, &labels[i], &labels[j]));
                    }
                }
            }
        }
    }

    for (dim, labels) in &dims {
        if labels.len() != 2 {
            continue;
        }
        for la in &config.languages {
            for lb in &config.languages {
                if la == lb {
                    continue;
                }
                for (a, b) in [(&labels[0], &labels[1]), (&labels[1], &labels[0])] {
                    match prop1_check(outcomes, la, lb, a, b) {
                        Ok(c) => {
                            if !c.holds {
                                warnings.push(format!(
                                    "decomposition bound failed for {la}/{lb} {a}/{b}: {} > {}",
                                    c.lhs, c.rhs
                                ));
                            }
                            prop1_checks.push(c);
                        }
                        Err(e) => warnings.push(format!("{dim}: skipped bound check {la}/{lb}: {e}")),
                    }
                }
            }
        }
    }

    let mut metadata = BTreeMap::new();
    if config.stratify_by.is_some() {
        metadata.insert(
            "average_method".into(),
            "macro average of per-stratum accuracies over defined strata; disp of the averages".into(),
        );
    }
    metadata.insert("prop1_proportions".into(), "p_b measured in lang_a, p_a measured in lang_b".into());

    Ok(GroupFairnessReport {
        languages: config.languages.clone(),
        group_dims: config.group_dims.clone(),
        stratify_by: config.stratify_by.clone(),
        acc_by_lang,
        gap_matrix,
        acc_by_lang_group,
        disp_by_lang,
        average_disp,
        proportions,
        prop1_checks,
        warnings,
        metadata,
    })
}

fn average_entry(
    outcomes: &OutcomeSet,
    language: &str,
    stratify_by: &str,
    strata: &[GroupLabel],
    a: &GroupLabel,
    b: &GroupLabel,
) -> AverageDispEntry {
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    let mut used = 0usize;
    for s in strata {
        let ra = outcomes.cohort_rate(language, &[s, a]);
        let rb = outcomes.cohort_rate(language, &[s, b]);
        if let (Some(x), Some(y)) = (ra, rb) {
            sum_a += x.value();
            sum_b += y.value();
            used += 1;
        }
    }
    let (acc_a, acc_b) = if used > 0 { (Some(sum_a / used as f64), Some(sum_b / used as f64)) } else { (None, None) };
    AverageDispEntry {
        language: language.to_string(),
        stratify_by: stratify_by.to_string(),
        a: a.clone(),
        b: b.clone(),
        acc_a,
        acc_b,
        disp: acc_a.zip(acc_b).map(|(x, y)| (x - y).abs()),
        strata_used: used,
        undefined_reason: (used == 0).then(|| format!("no stratum of `{stratify_by}` has both cohorts")),
    }
}
