//! Multi-fidelity Gaussian-process surrogates over heterogeneous input spaces,
//! applied to melt-pool geometry in laser-directed energy deposition.
//!
//! The crate is organised bottom-up:
//!
//! * [`thermal`] evaluates a two-input moving Gaussian-source model (low
//!   fidelity) and a five-input powder-coupled model (high fidelity), and
//!   extracts melt-pool depth and width from the liquidus isotherm.
//! * [`doe`] builds Latin hypercube and factorial designs over the process
//!   window and turns them into persisted datasets.
//! * [`gp`] is a zero-mean Matérn 5/2 Gaussian process with ARD lengthscales.
//! * [`imc`] calibrates the affine map that projects the five-dimensional
//!   input space onto the two-dimensional one.
//! * [`mfgp`] fuses both fidelities with autoregressive co-kriging.
//! * [`analysis`] holds the error metrics, Pearson and Sobol sensitivities and
//!   the semi-ellipse melt-pool boundaries.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod doe;
pub mod error;
pub mod gp;
pub mod imc;
pub mod mfgp;
pub mod optim;
pub mod quadrature;
pub mod thermal;
pub mod util;

pub use error::{Error, Result};

/// Which melt-pool quantity a surrogate or map targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Depth,
    Width,
}

impl Output {
    pub const ALL: [Output; 2] = [Output::Depth, Output::Width];

    pub fn name(self) -> &'static str {
        match self {
            Output::Depth => "depth",
            Output::Width => "width",
        }
    }
}

impl std::fmt::Display for Output {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fidelity tier of a thermal model or dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Fidelity {
    Lf,
    Hf,
}

impl Fidelity {
    /// Number of process inputs the model of this fidelity accepts.
    pub fn input_dim(self) -> usize {
        match self {
            Fidelity::Lf => 2,
            Fidelity::Hf => 5,
        }
    }
}

impl std::fmt::Display for Fidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Fidelity::Lf => "LF",
            Fidelity::Hf => "HF",
        })
    }
}
