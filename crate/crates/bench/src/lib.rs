//! Shared fixtures for the benchmarks.

use hetmfgp::doe::{lhs_sample, ParameterWindow};
use hetmfgp::gp::{GpModel, InputScaler, KernelParams, Standardizer};
use hetmfgp::thermal::{
    EagarTsai, LaserParams, MaterialProperties, PowderCoupling, PowderFedModel,
};

pub fn lf_model(nodes: usize) -> EagarTsai {
    EagarTsai::new(MaterialProperties::in625(), LaserParams::default(), nodes)
        .expect("default LF model")
}

pub fn hf_model(nodes: usize) -> PowderFedModel {
    PowderFedModel::new(
        MaterialProperties::in625(),
        LaserParams::default(),
        PowderCoupling::default(),
        nodes,
    )
    .expect("default HF model")
}

/// Smooth synthetic response over the HF window, roughly pool-depth sized.
pub fn hf_rows(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let window = ParameterWindow::hf();
    let x = lhs_sample(&window, n, seed).expect("valid design").points;
    let y = x
        .iter()
        .map(|r| {
            let u = window.to_unit(r);
            1e-3 * (0.5 + 0.4 * u[0] - 0.2 * u[1] + 0.05 * u[2] - 0.05 * u[3]
                + 0.05 * u[4]
                + 0.1 * u[0] * u[1])
        })
        .collect();
    (x, y)
}

/// A 2-D LF surrogate on unit inputs with pinned hyperparameters.
pub fn lf_surrogate(n_side: usize) -> GpModel {
    let x: Vec<Vec<f64>> = (0..n_side * n_side)
        .map(|i| {
            vec![
                (i % n_side) as f64 / (n_side - 1) as f64,
                (i / n_side) as f64 / (n_side - 1) as f64,
            ]
        })
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|u| 1.0 + u[0] - 0.5 * u[1] + 0.3 * u[0] * u[1])
        .collect();
    GpModel::with_params(
        &x,
        &y,
        InputScaler::identity(2),
        Standardizer::fit(&y),
        KernelParams {
            signal_variance: 1.0,
            lengthscales: vec![0.6, 0.6],
            nugget: 1e-8,
        },
    )
    .expect("well-posed surrogate")
}
