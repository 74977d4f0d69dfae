//! Macrorealism certification: moments and candidate probabilities,
//! Leggett-Garg inequalities, NSIT witnesses, quasi-probabilities, the Fine
//! construction, monotonicity conditions and feasibility of partial moment
//! sets.

mod feasibility;
mod fine;
mod inequalities;
mod moments;
mod nsit;
mod quasi;
mod stats;

pub use feasibility::{feasible_completion, Bound, BoundKind, Certificate, Completion, FM_SLACK};
pub use fine::fine_extension;
pub use inequalities::{
    check_lg2, check_lg3, check_lg4, check_monotonicity, check_nonnegativity, ConditionResult,
    InequalityReport, Verdict, MARGIN_TOL,
};
pub use moments::{
    candidate_probability, moments_from_tables, CandidateProbability, MomentKey, MomentSet,
    SignedDistribution,
};
pub use nsit::{check_nsit, Defect, NsitVerdict, WitnessReport, WITNESS_TOL};
pub use quasi::{
    check_appendix_identities, decoherence_functional, quasi_probability, QuasiProbability,
    IDENTITY_TOL,
};
