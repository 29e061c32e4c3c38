//! Experiment campaigns built on the library: collapse heatmaps of the
//! closed-form model and the neural method ablation.

pub mod ablation;
pub mod heatmap;
pub mod render;

pub use ablation::{ablation_run, run_ablation, AblationMetric, AblationReport, AblationRow, AblationRun, AblationSpec};
pub use heatmap::{
    disc_collapse_heatmap, mode_collapse_heatmap, AxisSpec, DiscHeatmapSpec, HeatmapResult, ModeHeatmapSpec,
};
pub use render::{heatmap_table, parse_pgm, render_pgm};
