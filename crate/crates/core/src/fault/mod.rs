//! Fault models, fault distribution tables and injection campaigns.

pub mod fdt;
pub mod inject;
pub mod model;
pub mod traceset;

pub use fdt::{
    build_fdt, diagonal_distribution, estimate_fdt, ineffectiveness_rate, Fdt, FdtError,
    MAX_ESTIMATE_WIDTH, MAX_EXACT_WIDTH,
};
pub use inject::{
    collect_ineffective, count_ineffective, fault_window, faulted_decrypt, intermediate_histogram,
    run_trial, trial_rng, CollectError, CollectOptions, FaultLocation, FaultSpec,
    FaultedDecryption, Histogram, HistogramError, SpecError, TraceSet, Trial, TrialPath,
    WindowFault, CAMPAIGN_AD, CAMPAIGN_MSG, DEFAULT_TRIAL_CAP,
};
pub use model::{width_mask, FaultModel, ParseModelError};
pub use traceset::{header_line, parse_trace_set, write_trace_set, TraceSetError};
