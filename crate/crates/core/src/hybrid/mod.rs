//! Hybrid time domains, arcs, systems with clocks, and the two-scale simulator.

pub mod arc;
pub mod clock;
pub mod domain;
pub mod export;
pub mod sim;
pub mod solver;
pub mod system;

pub use arc::{map_time_scale, ArcInterval, Direction, HybridArc, Sample, TimeScale};
pub use clock::{ActivationClock, ClockSpec};
pub use domain::{htd_stats, DomainInterval, HtdStats, HybridTime, HybridTimeDomain};
pub use export::{arc_rows, csv_header, write_arc_csv, write_arc_json, ArcDocument, ArcRow};
pub use sim::{compare_scales, simulate, JumpSchedule, MatchReport, ScheduledJump, SimSetup};
pub use solver::{integrate_flow, FlowSegment, Method, SolverConfig};
pub use system::{apply_jump, FlowContext, HybridState, HybridSystem, JUMP_TOL};
