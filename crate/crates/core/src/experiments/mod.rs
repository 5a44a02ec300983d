//! Convergence sweeps, slope fits and verification suites, plus the CSV and
//! config plumbing used by the command-line tool. Everything here runs in f64.

mod config;
mod records;
mod sweeps;
mod verify;

pub use config::{parse_config, parse_levels};
pub use records::{fit_rate, read_csv, validate_records, write_csv, RateFit, SweepRecord, SWEEP_COLUMNS};
pub use sweeps::{discrete_constant_sweep, upper_bound_sweep, ConstantDiagnostics, ConstantSweepReport, LevelFailure, SweepReport};
pub use verify::{
    covering_ratio, interp_concentration_exponent, interpolation_errors, verify_covering, verify_functional_inequalities,
    verify_interp_concentration, verify_interp_error, verify_minimizing_sequence, ConcentrationReport, CoveringReport, CubeConstant,
    FittedConstant, InequalityReport, InterpRecord, InterpReport, MinSeqRecord, MinSeqReport, PoincareCheck, DOUBLING_TOL,
};
