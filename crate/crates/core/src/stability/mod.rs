//! Lyapunov certificates, the constants of the resulting bounds, and checks
//! of both against plants and simulated arcs.

pub mod bound;
pub mod certificate;
pub mod constants;
pub mod verify;

pub use bound::{check_pt_bound, BoundReport, BoundWitness, BOUND_TOL};
pub use certificate::{
    InputChannel, LyapunovCertificate, LyapunovFunction, ModeCertificate, QuadraticForm,
};
pub use constants::{
    activation_condition, activation_constants, dwell_constants, min_dwell_time, ratio_r,
    ActivationCondition, ConstantsSummary, TheoremConstants,
};
pub use verify::{
    verify_certificate, CertificateReport, CheckKind, CheckSummary, SampleSpec, Witness,
};
