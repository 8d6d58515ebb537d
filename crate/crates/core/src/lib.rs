//! Explanation-need triage for app-store reviews: detection, taxonomy
//! categorization, team assignment, answer-source resolution, evaluation
//! metrics and the human-in-the-loop workflow.

pub mod agreement;
pub mod assignment;
pub mod corpus;
pub mod defaults;
pub mod detect;
pub mod jsonl;
pub mod metrics;
pub mod report;
pub mod scalar;
pub mod sources;
pub mod taxonomy;
pub mod text;
pub mod workflow;

pub use scalar::Scalar;

/// Exact rational scalar for reproducing hand-derived values without rounding.
pub type Exact = num_rational::Ratio<i128>;

/// Default floating-point scalar.
pub type Real = f64;
pub type Prf = metrics::Prf<Real>;
pub type Scored = metrics::Scored<Real>;
pub type DetectionReport = detect::DetectionReport<Real>;
pub type FilterReport = taxonomy::FilterReport<Real>;
pub type DeltaReport = taxonomy::DeltaReport<Real>;
pub type HitReport = assignment::HitReport<Real>;
pub type AddressabilityReport = workflow::reports::AddressabilityReport<Real>;
