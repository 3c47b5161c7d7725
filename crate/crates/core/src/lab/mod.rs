//! Admissible variations and trial-based checks.
//!
//! Two kinds of variations are produced. Band variations `η = ζ/σ` have
//! `ση = ζ` in a prescribed angular band by construction but are not
//! measure-preserving; they exercise the inequalities, which are statements
//! about fields. Flow variations `v = u ∘ φ_s`, with `φ_s` the flow of a
//! divergence-free field supported in an annulus, are measure-preserving
//! and exercise the energy gaps; their band content is measured, not
//! imposed.
//!
//! Every suite runs its trials through [`Execution`](crate::par::Execution),
//! seeds trial `t` with [`trial_seed`](crate::rng::trial_seed) and returns a
//! [`SuiteReport`] with one [`TrialRecord`] per trial.

mod fields;
mod flow;
mod gaps;
mod inequalities;
mod report;

pub use fields::{
    make_band_variation, random_band_field, random_pressure, random_test_field, BandSpec, BandVariation,
};
pub use flow::{
    make_measure_preserving_variation, random_flow, FlowSpec, FlowVariation, GridInterpolant, PointMap,
    StreamFunction,
};
pub use gaps::{energy_gap_compressible, energy_gap_incompressible, GapOptions};
pub use inequalities::{
    det_identity, h_tilde, h_zero_mode_rewrite, poincare_ratio, verify_det_identity, verify_h_lower_bound,
    verify_poincare, verify_weighted_fourier, zero_mode_rewrite_integral, DetIdentity, HPart, HSetup,
};
pub use report::{rel_diff, SuiteReport, TrialRecord};
