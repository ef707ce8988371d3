//! Switching signals, the BU-ADT/BU-AAT classes, and their generation.

pub mod conditions;
pub mod generator;
pub mod io;
pub mod signal;

pub use conditions::{
    adt_bound, bu_adt_bound, bu_adt_closed_forms, unstable_activation, validate_bu_aat,
    validate_bu_adt, AatParams, AdtParams, ClosedForms, ValidationReport,
};
pub use generator::{
    generate_signal, GeneratedSignal, GeneratorPolicy, ModeSelection, SwitchTrigger,
};
pub use io::{load_signal, read_signal_csv, save_signal, write_signal_csv, SignalMeta};
pub use signal::{ModePartition, Piece, SwitchingSignal};
