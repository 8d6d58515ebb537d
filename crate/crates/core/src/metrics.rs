//! Evaluation maths: confusion matrices, precision/recall/F, Cohen's and
//! Fleiss' κ, Landis-Koch bands and validity percentages.
//!
//! All functions are generic over [`Scalar`] so they can be evaluated in
//! floating point or exactly over rationals. Zero denominators never produce
//! NaN: they yield `0` (or `1` for κ with full chance agreement) and set a
//! `degenerate` flag on the result.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("confusion matrix has no observations")]
    EmptyMatrix,
    #[error("confusion matrix must be square: {labels} labels but {rows} rows")]
    NotSquare { labels: usize, rows: usize },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("{what} must be in {range}, got {value}")]
    OutOfRange {
        what: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("no observations to compare")]
    EmptyInput,
    #[error("item `{item}` has {found} votes, expected {expected}")]
    RaggedVotes {
        item: String,
        expected: u64,
        found: u64,
    },
    #[error("item `{item}` has {found} vote columns, expected {expected}")]
    RaggedCategories {
        item: String,
        expected: usize,
        found: usize,
    },
    #[error("at least two raters per item are required, got {0}")]
    TooFewRaters(u64),
    #[error("validity needs total > 0")]
    ZeroTotal,
    #[error("correct count {correct} exceeds total {total}")]
    CorrectExceedsTotal { correct: u64, total: u64 },
}

pub type Result<T, E = MetricError> = std::result::Result<T, E>;

/// A value plus a flag telling whether a zero-denominator convention was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored<T> {
    pub value: T,
    pub degenerate: bool,
}

impl<T> Scored<T> {
    fn exact(value: T) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    fn degenerate(value: T) -> Self {
        Self {
            value,
            degenerate: true,
        }
    }
}

/// Square multi-class confusion matrix; rows are truth, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(MetricError::DuplicateLabel(l.clone()));
            }
        }
        let n = labels.len();
        Ok(Self {
            labels,
            counts: vec![vec![0; n]; n],
        })
    }

    pub fn from_counts<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        let mut m = Self::new(labels)?;
        let n = m.labels.len();
        if counts.len() != n || counts.iter().any(|row| row.len() != n) {
            return Err(MetricError::NotSquare {
                labels: n,
                rows: counts.len(),
            });
        }
        m.counts = counts;
        Ok(m)
    }

    /// Builds a matrix from `(truth, prediction)` pairs.
    pub fn from_pairs<'a, S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut m = Self::new(labels)?;
        for (truth, pred) in pairs {
            m.record(truth, pred)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, truth: &str, prediction: &str) -> Result<()> {
        let t = self.index_of(truth)?;
        let p = self.index_of(prediction)?;
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: &str, prediction: &str) -> Result<u64> {
        Ok(self.counts[self.index_of(truth)?][self.index_of(prediction)?])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| MetricError::UnknownClass(label.to_owned()))
    }

    /// Merges classes through `map`, producing a matrix over `labels`.
    pub fn collapse<S: Into<String>>(
        &self,
        labels: impl IntoIterator<Item = S>,
        map: impl Fn(&str) -> String,
    ) -> Result<Self> {
        let mut out = Self::new(labels)?;
        for (t, row) in self.counts.iter().enumerate() {
            let tt = out.index_of(&map(&self.labels[t]))?;
            for (p, &c) in row.iter().enumerate() {
                let pp = out.index_of(&map(&self.labels[p]))?;
                out.counts[tt][pp] += c;
            }
        }
        Ok(out)
    }

    /// One-vs-rest (TP, FP, FN) for class index `i`.
    fn one_vs_rest(&self, i: usize) -> (u64, u64, u64) {
        let tp = self.counts[i][i];
        let predicted: u64 = self.counts.iter().map(|row| row[i]).sum();
        let actual: u64 = self.counts[i].iter().sum();
        (tp, predicted - tp, actual - tp)
    }
}

/// Precision, recall and F1 of one class or an aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub degenerate: bool,
}

fn safe_ratio<T: Scalar>(num: u64, den: u64) -> Scored<T> {
    if den == 0 {
        Scored::degenerate(T::zero())
    } else {
        Scored::exact(T::ratio(num, den))
    }
}

/// Harmonic mean of precision and recall; `0` (degenerate) when both are zero.
pub fn harmonic_f1<T: Scalar>(precision: T, recall: T) -> Scored<T> {
    let sum = precision.clone() + recall.clone();
    if sum == T::zero() {
        return Scored::degenerate(T::zero());
    }
    let two = T::from_count(2);
    Scored::exact(two * precision * recall / sum)
}

/// Precision, recall and F1 from true-positive, false-positive and false-negative counts.
pub fn prf_from_counts<T: Scalar>(tp: u64, fp: u64, fn_: u64) -> Prf<T> {
    let p = safe_ratio::<T>(tp, tp + fp);
    let r = safe_ratio::<T>(tp, tp + fn_);
    let f = harmonic_f1(p.value.clone(), r.value.clone());
    Prf {
        precision: p.value,
        recall: r.value,
        f1: f.value,
        degenerate: p.degenerate || r.degenerate || f.degenerate,
    }
}

/// One-vs-rest precision, recall and F1 for `class`.
pub fn per_class_prf<T: Scalar>(m: &ConfusionMatrix, class: &str) -> Result<Prf<T>> {
    let i = m.index_of(class)?;
    let (tp, fp, fn_) = m.one_vs_rest(i);
    Ok(prf_from_counts(tp, fp, fn_))
}

/// Trace over total.
pub fn accuracy<T: Scalar>(m: &ConfusionMatrix) -> Result<T> {
    let total = m.total();
    if total == 0 {
        return Err(MetricError::EmptyMatrix);
    }
    Ok(T::ratio(m.trace(), total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Pool TP/FP/FN over classes.
    Micro,
    /// Average the per-class values.
    Macro,
}

/// Aggregated P/R/F1 over all classes.
pub fn aggregate_prf<T: Scalar>(m: &ConfusionMatrix, mode: Averaging) -> Result<Prf<T>> {
    let classes: Vec<&str> = m.labels.iter().map(String::as_str).collect();
    aggregate_prf_over(m, mode, &classes)
}

/// Aggregated P/R/F1 over a subset of classes.
pub fn aggregate_prf_over<T: Scalar>(
    m: &ConfusionMatrix,
    mode: Averaging,
    classes: &[&str],
) -> Result<Prf<T>> {
    if m.total() == 0 {
        return Err(MetricError::EmptyMatrix);
    }
    if classes.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let idx: Vec<usize> = classes
        .iter()
        .map(|c| m.index_of(c))
        .collect::<Result<_>>()?;
    match mode {
        Averaging::Micro => {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for &i in &idx {
                let (a, b, c) = m.one_vs_rest(i);
                tp += a;
                fp += b;
                fn_ += c;
            }
            Ok(prf_from_counts(tp, fp, fn_))
        }
        Averaging::Macro => {
            let n = T::from_count(idx.len() as u64);
            let mut acc = Prf {
                precision: T::zero(),
                recall: T::zero(),
                f1: T::zero(),
                degenerate: false,
            };
            for &i in &idx {
                let (a, b, c) = m.one_vs_rest(i);
                let prf: Prf<T> = prf_from_counts(a, b, c);
                acc.precision = acc.precision + prf.precision;
                acc.recall = acc.recall + prf.recall;
                acc.f1 = acc.f1 + prf.f1;
                acc.degenerate |= prf.degenerate;
            }
            Ok(Prf {
                precision: acc.precision / n.clone(),
                recall: acc.recall / n.clone(),
                f1: acc.f1 / n,
                degenerate: acc.degenerate,
            })
        }
    }
}

/// Which F-β formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FBetaVariant {
    /// `(1+β²)·P·R / (β²·P + R)`.
    #[default]
    Standard,
    /// `(1+β)·P·R / (β·P + R)`: β enters linearly. This is the form that
    /// yields 0.5126 and 0.4873 for the published fine/coarse filter scores at β = 0.2.
    Linear,
}

impl std::str::FromStr for FBetaVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Self::Standard),
            "linear" => Ok(Self::Linear),
            other => Err(format!("unknown F-beta variant `{other}` (standard|linear)")),
        }
    }
}

fn check_unit<T: Scalar>(what: &'static str, v: &T) -> Result<()> {
    if !(*v >= T::zero() && *v <= T::one()) {
        return Err(MetricError::OutOfRange {
            what,
            range: "[0, 1]",
            value: v.as_f64(),
        });
    }
    Ok(())
}

/// F-β score from precision and recall.
pub fn f_beta<T: Scalar>(precision: T, recall: T, beta: T, variant: FBetaVariant) -> Result<Scored<T>> {
    check_unit("precision", &precision)?;
    check_unit("recall", &recall)?;
    // Written negated so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(beta > T::zero()) {
        return Err(MetricError::OutOfRange {
            what: "beta",
            range: "(0, inf)",
            value: beta.as_f64(),
        });
    }
    if precision == T::zero() && recall == T::zero() {
        return Ok(Scored::degenerate(T::zero()));
    }
    let weight = match variant {
        FBetaVariant::Standard => beta.clone() * beta,
        FBetaVariant::Linear => beta,
    };
    let num = (T::one() + weight.clone()) * precision.clone() * recall.clone();
    let den = weight * precision + recall;
    Ok(Scored::exact(num / den))
}

fn kappa_from<T: Scalar>(observed: T, chance: T) -> Scored<T> {
    if chance == T::one() {
        return Scored::degenerate(T::one());
    }
    Scored::exact((observed - chance.clone()) / (T::one() - chance))
}

/// Cohen's κ for two raters labelling the same items.
pub fn cohen_kappa<T: Scalar, L: Ord>(pairs: &[(L, L)]) -> Result<Scored<T>> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let n = pairs.len() as u64;
    let mut marg: BTreeMap<&L, (u64, u64)> = BTreeMap::new();
    let mut agree = 0u64;
    for (a, b) in pairs {
        if a == b {
            agree += 1;
        }
        marg.entry(a).or_default().0 += 1;
        marg.entry(b).or_default().1 += 1;
    }
    let chance_num: u64 = marg.values().map(|(x, y)| x * y).sum();
    Ok(kappa_from(T::ratio(agree, n), T::ratio(chance_num, n * n)))
}

/// Per-item vote counts over a fixed category list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingsTable {
    pub items: Vec<String>,
    pub categories: Vec<String>,
    /// `votes[i][j]`: number of raters putting item `i` in category `j`.
    pub votes: Vec<Vec<u64>>,
}

impl RatingsTable {
    /// Builds a table from raw labels per item. Categories are sorted.
    pub fn from_labels<I, L>(rows: I) -> Self
    where
        I: IntoIterator<Item = (String, Vec<L>)>,
        L: AsRef<str>,
    {
        let rows: Vec<(String, Vec<L>)> = rows.into_iter().collect();
        let mut cats: Vec<String> = rows
            .iter()
            .flat_map(|(_, ls)| ls.iter().map(|l| l.as_ref().to_owned()))
            .collect();
        cats.sort();
        cats.dedup();
        let votes = rows
            .iter()
            .map(|(_, ls)| {
                let mut v = vec![0u64; cats.len()];
                for l in ls {
                    let j = cats.binary_search_by(|c| c.as_str().cmp(l.as_ref())).unwrap();
                    v[j] += 1;
                }
                v
            })
            .collect();
        Self {
            items: rows.into_iter().map(|(id, _)| id).collect(),
            categories: cats,
            votes,
        }
    }

    /// Checks the constant-raters precondition and returns the rater count.
    pub fn raters_per_item(&self) -> Result<u64> {
        let Some(first) = self.votes.first() else {
            return Err(MetricError::EmptyInput);
        };
        let k = self.categories.len();
        let expected: u64 = first.iter().sum();
        for (i, row) in self.votes.iter().enumerate() {
            let item = self.items.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
            if row.len() != k {
                return Err(MetricError::RaggedCategories {
                    item,
                    expected: k,
                    found: row.len(),
                });
            }
            let found: u64 = row.iter().sum();
            if found != expected {
                return Err(MetricError::RaggedVotes {
                    item,
                    expected,
                    found,
                });
            }
        }
        Ok(expected)
    }
}

/// Fleiss' κ for a constant number of raters per item.
pub fn fleiss_kappa<T: Scalar>(table: &RatingsTable) -> Result<Scored<T>> {
    let n = table.raters_per_item()?;
    if n < 2 {
        return Err(MetricError::TooFewRaters(n));
    }
    let items = table.votes.len() as u64;
    let sum_sq: u64 = table.votes.iter().flatten().map(|c| c * c).sum();
    // Mean per-item agreement: (Σ n_ij² − N·n) / (N·n·(n−1)).
    let observed = T::ratio(sum_sq - items * n, items * n * (n - 1));
    let k = table.categories.len();
    let col_sq: u64 = (0..k)
        .map(|j| {
            let c: u64 = table.votes.iter().map(|row| row[j]).sum();
            c * c
        })
        .sum();
    let chance = T::ratio(col_sq, (items * n) * (items * n));
    Ok(kappa_from(observed, chance))
}

/// Landis-Koch interpretation bands; right-closed intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementBand {
    Poor,
    Slight,
    Fair,
    Moderate,
    Substantial,
    AlmostPerfect,
}

impl fmt::Display for AgreementBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Poor => "Poor",
            Self::Slight => "Slight",
            Self::Fair => "Fair",
            Self::Moderate => "Moderate",
            Self::Substantial => "Substantial",
            Self::AlmostPerfect => "Almost perfect",
        })
    }
}

/// Maps κ to its band: `<0` Poor, `[0, .2]` Slight, `(.2, .4]` Fair,
/// `(.4, .6]` Moderate, `(.6, .8]` Substantial, `(.8, 1]` Almost perfect.
pub fn landis_koch<T: Scalar>(kappa: &T) -> Result<AgreementBand> {
    let minus_one = T::zero() - T::one();
    if !(*kappa >= minus_one && *kappa <= T::one()) {
        return Err(MetricError::OutOfRange {
            what: "kappa",
            range: "[-1, 1]",
            value: kappa.as_f64(),
        });
    }
    let band = if *kappa < T::zero() {
        AgreementBand::Poor
    } else if *kappa <= T::ratio(1, 5) {
        AgreementBand::Slight
    } else if *kappa <= T::ratio(2, 5) {
        AgreementBand::Fair
    } else if *kappa <= T::ratio(3, 5) {
        AgreementBand::Moderate
    } else if *kappa <= T::ratio(4, 5) {
        AgreementBand::Substantial
    } else {
        AgreementBand::AlmostPerfect
    };
    Ok(band)
}

/// Percentage `100·correct/total`.
pub fn validity<T: Scalar>(correct: u64, total: u64) -> Result<T> {
    if total == 0 {
        return Err(MetricError::ZeroTotal);
    }
    if correct > total {
        return Err(MetricError::CorrectExceedsTotal { correct, total });
    }
    Ok(T::ratio(100 * correct, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn f1_from_published_pairs() {
        for (p, r, f) in [(0.8276, 0.1765, 0.2909), (0.2106, 0.6519, 0.3184)] {
            let got = harmonic_f1(p, r).value;
            assert!(close(got, f, 0.0005), "F1({p},{r}) = {got}");
        }
    }

    #[test]
    fn diagonal_matrix_is_perfect() {
        let m = ConfusionMatrix::from_counts(["a", "b", "c"], vec![vec![3, 0, 0], vec![0, 2, 0], vec![0, 0, 5]])
            .unwrap();
        for c in ["a", "b", "c"] {
            let prf: Prf<f64> = per_class_prf(&m, c).unwrap();
            assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(accuracy::<f64>(&m).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_cases() {
        let uniform = ConfusionMatrix::from_counts(["a", "b"], vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(accuracy::<f64>(&uniform).unwrap(), 0.5);
        // Hand count: trace 4+3+1 = 8 of 13.
        let m = ConfusionMatrix::from_counts(
            ["x", "y", "z"],
            vec![vec![4, 1, 0], vec![2, 3, 1], vec![0, 1, 1]],
        )
        .unwrap();
        assert_eq!(accuracy::<Exact>(&m).unwrap(), Exact::new(8, 13));
        let empty = ConfusionMatrix::new(["a"]).unwrap();
        assert_eq!(accuracy::<f64>(&empty), Err(MetricError::EmptyMatrix));
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let m = ConfusionMatrix::from_counts(["a", "b"], vec![vec![0, 0], vec![0, 4]]).unwrap();
        let prf: Prf<f64> = per_class_prf(&m, "a").unwrap();
        assert!(prf.degenerate);
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
        assert!(matches!(per_class_prf::<f64>(&m, "q"), Err(MetricError::UnknownClass(_))));
    }

    #[test]
    fn linear_f_beta_reproduces_published_values() {
        let fine = f_beta(0.6727, 0.2341, 0.2, FBetaVariant::Linear).unwrap();
        let coarse = f_beta(0.5079, 0.4051, 0.2, FBetaVariant::Linear).unwrap();
        assert!(close(fine.value, 0.5126, 0.0005), "{}", fine.value);
        assert!(close(coarse.value, 0.4873, 0.0005), "{}", coarse.value);
    }

    #[test]
    fn standard_f_beta_identities() {
        for beta in [0.2, 1.0, 3.0] {
            let v = f_beta(0.4, 0.4, beta, FBetaVariant::Standard).unwrap();
            assert!(close(v.value, 0.4, 1e-12));
        }
        let f1 = harmonic_f1(0.3, 0.7).value;
        assert_eq!(f_beta(0.3, 0.7, 1.0, FBetaVariant::Standard).unwrap().value, f1);
        let zero = f_beta(0.0, 0.0, 0.5, FBetaVariant::Standard).unwrap();
        assert!(zero.degenerate);
        assert!(f_beta(1.2, 0.5, 1.0, FBetaVariant::Standard).is_err());
        assert!(f_beta(0.2, 0.5, 0.0, FBetaVariant::Standard).is_err());
    }

    #[test]
    fn cohen_hand_cases_are_exact() {
        let k0: Scored<Exact> = cohen_kappa(&[("x", "x"), ("x", "y"), ("y", "x"), ("y", "y")]).unwrap();
        assert_eq!(k0.value, Exact::from_integer(0));
        let k_half: Scored<Exact> = cohen_kappa(&[("x", "x"), ("x", "x"), ("x", "y"), ("y", "y")]).unwrap();
        assert_eq!(k_half.value, Exact::new(1, 2));
        let same: Scored<f64> = cohen_kappa(&[("a", "a"), ("b", "b"), ("c", "c")]).unwrap();
        assert_eq!(same.value, 1.0);
        let empty: Result<Scored<f64>> = cohen_kappa::<f64, &str>(&[]);
        assert_eq!(empty, Err(MetricError::EmptyInput));
    }

    #[test]
    fn cohen_full_chance_agreement_is_degenerate_one() {
        let k: Scored<f64> = cohen_kappa(&[("a", "a"), ("a", "a")]).unwrap();
        assert!(k.degenerate);
        assert_eq!(k.value, 1.0);
    }

    #[test]
    fn fleiss_hand_cases_are_exact() {
        let unanimous = RatingsTable {
            items: vec!["1".into(), "2".into()],
            categories: vec!["A".into(), "B".into()],
            votes: vec![vec![3, 0], vec![0, 3]],
        };
        let k: Scored<Exact> = fleiss_kappa(&unanimous).unwrap();
        assert_eq!(k.value, Exact::from_integer(1));
        assert!(!k.degenerate);

        let split = RatingsTable {
            votes: vec![vec![2, 1], vec![1, 2]],
            ..unanimous.clone()
        };
        let k: Scored<Exact> = fleiss_kappa(&split).unwrap();
        assert_eq!(k.value, Exact::new(-1, 3));

        let single = RatingsTable {
            items: vec!["1".into(), "2".into()],
            categories: vec!["A".into()],
            votes: vec![vec![4], vec![4]],
        };
        let k: Scored<f64> = fleiss_kappa(&single).unwrap();
        assert!(k.degenerate);
        assert_eq!(k.value, 1.0);
    }

    #[test]
    fn fleiss_rejects_ragged_tables() {
        let t = RatingsTable {
            items: vec!["a".into(), "b".into()],
            categories: vec!["x".into(), "y".into()],
            votes: vec![vec![2, 1], vec![1, 1]],
        };
        match fleiss_kappa::<f64>(&t) {
            Err(MetricError::RaggedVotes { item, .. }) => assert_eq!(item, "b"),
            other => panic!("unexpected {other:?}"),
        }
        let one = RatingsTable {
            items: vec!["a".into()],
            categories: vec!["x".into()],
            votes: vec![vec![1]],
        };
        assert_eq!(fleiss_kappa::<f64>(&one), Err(MetricError::TooFewRaters(1)));
    }

    #[test]
    fn ratings_from_labels() {
        let t = RatingsTable::from_labels(vec![
            ("r1".to_string(), vec!["b", "a", "a"]),
            ("r2".to_string(), vec!["c", "c", "a"]),
        ]);
        assert_eq!(t.categories, ["a", "b", "c"]);
        assert_eq!(t.votes, vec![vec![2, 1, 0], vec![1, 0, 2]]);
    }

    #[test]
    fn landis_koch_published_readings() {
        assert_eq!(landis_koch(&0.61).unwrap(), AgreementBand::Substantial);
        assert_eq!(landis_koch(&0.39).unwrap(), AgreementBand::Fair);
        assert_eq!(landis_koch(&0.558).unwrap(), AgreementBand::Moderate);
    }

    #[test]
    fn landis_koch_boundaries_are_right_closed() {
        assert_eq!(landis_koch(&-0.01).unwrap(), AgreementBand::Poor);
        assert_eq!(landis_koch(&0.0).unwrap(), AgreementBand::Slight);
        assert_eq!(landis_koch(&0.2).unwrap(), AgreementBand::Slight);
        assert_eq!(landis_koch(&0.4).unwrap(), AgreementBand::Fair);
        assert_eq!(landis_koch(&0.6).unwrap(), AgreementBand::Moderate);
        assert_eq!(landis_koch(&0.8).unwrap(), AgreementBand::Substantial);
        assert_eq!(landis_koch(&1.0).unwrap(), AgreementBand::AlmostPerfect);
        assert_eq!(landis_koch(&Exact::new(2, 5)).unwrap(), AgreementBand::Fair);
        assert!(landis_koch(&1.01).is_err());
        assert!(landis_koch(&f64::NAN).is_err());
    }

    #[test]
    fn validity_percentages() {
        assert_eq!(validity::<f64>(37, 100).unwrap(), 37.0);
        let v: f64 = validity(139, 158).unwrap();
        assert!(close(v, 87.97, 0.005));
        assert_eq!(v.round(), 88.0);
        assert_eq!(validity::<f64>(0, 5).unwrap(), 0.0);
        assert_eq!(validity::<f64>(0, 0), Err(MetricError::ZeroTotal));
        assert!(validity::<f64>(6, 5).is_err());
    }

    #[test]
    fn reconstructed_binary_matrix_matches_overall_scores() {
        // Rows: truth need/none; columns: flagged/unflagged.
        let m = ConfusionMatrix::from_counts(["need", "none"], vec![vec![131, 27], vec![417, 1801]]).unwrap();
        let prf: Prf<f64> = per_class_prf(&m, "need").unwrap();
        assert!(close(prf.precision, 0.2391, 0.0005));
        assert!(close(prf.recall, 0.8291, 0.0005));
    }

    #[test]
    fn aggregation_modes() {
        let single = ConfusionMatrix::from_counts(["a"], vec![vec![5]]).unwrap();
        let agg: Prf<f64> = aggregate_prf(&single, Averaging::Micro).unwrap();
        assert_eq!(agg, per_class_prf(&single, "a").unwrap());

        let sym = ConfusionMatrix::from_counts(["a", "b"], vec![vec![3, 1], vec![1, 3]]).unwrap();
        let macro_: Prf<f64> = aggregate_prf(&sym, Averaging::Macro).unwrap();
        let a: Prf<f64> = per_class_prf(&sym, "a").unwrap();
        assert!(close(macro_.f1, a.f1, 1e-15));
        let micro: Prf<Exact> = aggregate_prf(&sym, Averaging::Micro).unwrap();
        assert_eq!(micro.precision, Exact::new(3, 4));
    }

    #[test]
    fn collapse_merges_classes() {
        let m = ConfusionMatrix::from_counts(
            ["explicit", "potential", "none"],
            vec![vec![2, 1, 1], vec![0, 0, 0], vec![1, 3, 10]],
        )
        .unwrap();
        let b = m
            .collapse(["need", "none"], |l| if l == "none" { "none".into() } else { "need".into() })
            .unwrap();
        assert_eq!(b.counts(), &[vec![3, 1], vec![4, 10]]);
    }
}
