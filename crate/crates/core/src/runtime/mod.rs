//! Grid execution: per-cell workers exchanging center networks through a
//! snapshot board.

pub mod board;
pub mod executor;

pub use board::{CellSnapshot, SnapshotBoard};
pub use executor::{run_grid, CellResult, ExecutionMode, GridExecutor, GridResult, ProgressRow, RunSpec};
