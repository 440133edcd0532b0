//! Batch front end for the melt-pool surrogate pipeline: configuration,
//! cached stages and sweep studies. The `hetmfgp` binary is a thin argument
//! parser over [`Pipeline`].

pub mod config;
pub mod pipeline;

pub use config::{PipelineConfig, SCHEMA_VERSION};
pub use hetmfgp::{Fidelity, Output};
pub use pipeline::{
    Cell, EvaluationReport, OutputMetrics, Pipeline, RunArtifacts, Stage, SweepRow, OUTPUTS,
};
