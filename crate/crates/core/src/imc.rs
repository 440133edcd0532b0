//! Input-mapping calibration: an affine map `g(x) = A x + b` from the
//! five-dimensional HF input space onto the LF input space, chosen so the LF
//! surrogate evaluated at `g(x)` reproduces the HF outputs.
//!
//! Everything happens on the unit-cube input scale and on the LF
//! surrogate's standardised output scale. The loss is
//!
//! ```text
//! L(A, b) = Σᵢ (yᵢ − m_LF(A xᵢ + b))² + λ (‖A − A₀‖_F + ‖b − b₀‖₂)
//! ```
//!
//! with `m_LF` the LF GP posterior mean, so the LF model itself is never
//! re-run during the search.

use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doe::lhs_unit;
use crate::error::{Error, Result};
use crate::gp::{GpModel, InputScaler};
use crate::optim::{Bounds, NelderMead};
use crate::Output;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub output: Output,
    /// `A`, one row per LF input.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl AffineMap {
    /// `[I | 0]`: picks the leading `lf_dim` HF inputs, which are the shared
    /// ones.
    pub fn selector(lf_dim: usize, hf_dim: usize, output: Output) -> Self {
        assert!(lf_dim <= hf_dim, "selector needs lf_dim <= hf_dim");
        Self {
            output,
            a: (0..lf_dim)
                .map(|i| {
                    (0..hf_dim)
                        .map(|j| if i == j { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect(),
            b: vec![0.0; lf_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.input_dim();
        if self.a.len() != self.b.len() || d == 0 || self.a.iter().any(|r| r.len() != d) {
            return Err(Error::invalid(format!(
                "inconsistent affine map shape: {} rows, b of length {}",
                self.a.len(),
                self.b.len()
            )));
        }
        if self
            .a
            .iter()
            .flatten()
            .chain(&self.b)
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("affine map has non-finite entries"));
        }
        Ok(())
    }

    /// `A` row-major followed by `b`.
    pub fn params(&self) -> Vec<f64> {
        self.a.iter().flatten().chain(&self.b).copied().collect()
    }

    pub fn with_params(&self, beta: &[f64]) -> Self {
        let (rows, cols) = (self.output_dim(), self.input_dim());
        debug_assert_eq!(beta.len(), rows * cols + rows);
        Self {
            output: self.output,
            a: beta[..rows * cols]
                .chunks(cols)
                .map(<[f64]>::to_vec)
                .collect(),
            b: beta[rows * cols..].to_vec(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + bi)
            .collect()
    }

    /// `‖A − A₀‖_F + ‖b − b₀‖₂`.
    pub fn distance(&self, nominal: &AffineMap) -> f64 {
        let da: f64 = self
            .a
            .iter()
            .flatten()
            .zip(nominal.a.iter().flatten())
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        let db: f64 = self
            .b
            .iter()
            .zip(&nominal.b)
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        da.sqrt() + db.sqrt()
    }
}

/// Maps unit-scale HF rows to unit-scale pseudo LF inputs. No clamping: the
/// image may leave the LF window.
pub fn apply_map(map: &AffineMap, x_hf: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    map.validate()?;
    if let Some(r) = x_hf.iter().find(|r| r.len() != map.input_dim()) {
        return Err(Error::invalid(format!(
            "HF row has {} inputs, map expects {}",
            r.len(),
            map.input_dim()
        )));
    }
    Ok(x_hf.iter().map(|x| map.apply(x)).collect())
}

/// HF training data on the scales the loss works in.
#[derive(Debug, Clone, PartialEq)]
pub struct ImcData {
    /// Unit-scale HF inputs.
    pub x: Vec<Vec<f64>>,
    /// HF outputs standardised with the LF surrogate's standardiser.
    pub y: Vec<f64>,
}

impl ImcData {
    pub fn new(
        x_raw: &[Vec<f64>],
        y_raw: &[f64],
        hf_scaler: &InputScaler,
        surrogate: &GpModel,
    ) -> Result<Self> {
        if x_raw.len() != y_raw.len() {
            return Err(Error::invalid(format!(
                "{} HF rows but {} outputs",
                x_raw.len(),
                y_raw.len()
            )));
        }
        let s = surrogate.standardizer();
        Ok(Self {
            x: x_raw.iter().map(|r| hf_scaler.scale(r)).collect(),
            y: y_raw.iter().map(|v| s.forward(*v)).collect(),
        })
    }
}

fn check_problem(map: &AffineMap, data: &ImcData, surrogate: &GpModel) -> Result<()> {
    map.validate()?;
    if map.output_dim() != surrogate.input_dim() {
        return Err(Error::invalid(format!(
            "map produces {} inputs, surrogate takes {}",
            map.output_dim(),
            surrogate.input_dim()
        )));
    }
    if data.x.len() != data.y.len() || data.x.iter().any(|r| r.len() != map.input_dim()) {
        return Err(Error::invalid("HF data shape does not match the map"));
    }
    Ok(())
}

fn data_loss(map: &AffineMap, data: &ImcData, surrogate: &GpModel) -> f64 {
    data.x
        .iter()
        .zip(&data.y)
        .map(|(x, y)| (y - surrogate.mean_scaled(&map.apply(x))).powi(2))
        .sum()
}

/// Regularised squared loss of `map` on `data`.
pub fn imc_loss(
    map: &AffineMap,
    data: &ImcData,
    surrogate: &GpModel,
    lambda: f64,
    nominal: &AffineMap,
) -> Result<f64> {
    check_problem(map, data, surrogate)?;
    if nominal.params().len() != map.params().len() {
        return Err(Error::invalid(
            "nominal map shape differs from the fitted map",
        ));
    }
    Ok(data_loss(map, data, surrogate) + lambda * map.distance(nominal))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImcConfig {
    /// λ ≥ 0.
    pub lambda: f64,
    /// β₀; `None` means the shared-input selector `[I | 0]`, `b = 0`.
    pub nominal: Option<AffineMap>,
    /// Total simplex iterations across all arms.
    pub max_iterations: usize,
    /// ε: an arm stops once its simplex values agree to within ε; the
    /// search stops once a restart from the incumbent gains less than ε.
    pub tolerance: f64,
    pub seed: u64,
    /// Starts besides β₀, drawn by LHS in a box of half-width `spread`
    /// around it.
    pub perturbed_starts: usize,
    pub spread: f64,
}

impl Default for ImcConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            nominal: None,
            max_iterations: 20_000,
            tolerance: 1e-10,
            seed: 0,
            perturbed_starts: 4,
            spread: 0.5,
        }
    }
}

impl ImcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("IMC needs at least one iteration"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("IMC tolerance must be positive"));
        }
        if !(self.spread >= 0.0) {
            return Err(Error::invalid("start spread must be non-negative"));
        }
        Ok(())
    }
}

/// Iteration history of a β search.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchTrace {
    /// Best loss seen so far, one entry per iteration; non-increasing.
    pub best_loss: Vec<f64>,
    /// `‖β_n − β_{n−1}‖₂` between the current best vertices of consecutive
    /// iterations.
    pub step: Vec<f64>,
    pub evaluations: usize,
}

/// Strategy for minimising the IMC loss over β.
pub trait BetaOptimizer {
    /// Returns the best β found and the search history.
    fn minimize(
        &self,
        loss: &dyn Fn(&[f64]) -> f64,
        beta0: &[f64],
        config: &ImcConfig,
    ) -> (Vec<f64>, SearchTrace);
}

/// Nelder–Mead arms run one after another from β₀ and seeded LHS
/// perturbations, then restarted from the incumbent until a restart stops
/// paying off. Iterations are counted across arms.
#[derive(Debug, Clone, Copy, Default)]
pub struct MultiStartSimplex;

impl BetaOptimizer for MultiStartSimplex {
    fn minimize(
        &self,
        loss: &dyn Fn(&[f64]) -> f64,
        beta0: &[f64],
        config: &ImcConfig,
    ) -> (Vec<f64>, SearchTrace) {
        let dim = beta0.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut starts = vec![beta0.to_vec()];
        if config.perturbed_starts > 0 {
            starts.extend(
                lhs_unit(config.perturbed_starts, dim, &mut rng)
                    .into_iter()
                    .map(|u| {
                        u.iter()
                            .zip(beta0)
                            .map(|(t, b)| b + config.spread * (2.0 * t - 1.0))
                            .collect()
                    }),
            );
        }

        let bounds = Bounds::unbounded(dim);
        let mut trace = SearchTrace::default();
        let mut best_x = beta0.to_vec();
        let mut best_f = loss(beta0);
        trace.evaluations += 1;
        let mut prev_vertex = beta0.to_vec();
        let mut step = 0.2;

        let mut arm = 0;
        loop {
            let used = trace.best_loss.len();
            if used >= config.max_iterations {
                break;
            }
            let polishing = arm >= starts.len();
            let x0 = if polishing {
                best_x.clone()
            } else {
                starts[arm].clone()
            };
            let before = best_f;
            let nm = NelderMead::new(dim)
                .with_step(step)
                .with_ftol(config.tolerance)
                .with_max_iterations(config.max_iterations - used);
            let result = nm.minimize_observed(loss, &x0, &bounds, |rec| {
                if rec.best_value < best_f {
                    best_f = rec.best_value;
                    best_x.clone_from(&rec.best_x);
                }
                trace.best_loss.push(best_f);
                let d = rec
                    .best_x
                    .iter()
                    .zip(&prev_vertex)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>();
                trace.step.push(d.sqrt());
                prev_vertex.clone_from(&rec.best_x);
                ControlFlow::Continue(())
            });
            trace.evaluations += result.evaluations;
            if result.value < best_f {
                best_f = result.value;
                best_x = result.x;
            }
            arm += 1;
            if polishing {
                if before - best_f < config.tolerance {
                    break;
                }
                step *= 0.5;
            }
        }
        (best_x, trace)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImcResult {
    pub map: AffineMap,
    pub nominal: AffineMap,
    pub lambda: f64,
    /// Regularised loss at the fitted map.
    pub final_loss: f64,
    /// Squared-error part of `final_loss`.
    pub data_loss: f64,
    /// Loss at β₀.
    pub initial_loss: f64,
    pub trace: SearchTrace,
    /// False when no start improved on β₀, in which case `map` is β₀.
    pub improved: bool,
}

impl ImcResult {
    pub fn iterations(&self) -> usize {
        self.trace.best_loss.len()
    }

    /// First iteration after which the best-so-far loss is within `frac` of
    /// the total reduction from the initial loss.
    pub fn iterations_to_within(&self, frac: f64) -> usize {
        let total = self.initial_loss - self.final_loss;
        self.trace
            .best_loss
            .iter()
            .position(|l| l - self.final_loss <= frac * total)
            .map_or(0, |i| i + 1)
    }
}

pub fn fit_imc(
    data: &ImcData,
    surrogate: &GpModel,
    output: Output,
    config: &ImcConfig,
) -> Result<ImcResult> {
    fit_imc_with(&MultiStartSimplex, data, surrogate, output, config)
}

pub fn fit_imc_with<O: BetaOptimizer>(
    optimizer: &O,
    data: &ImcData,
    surrogate: &GpModel,
    output: Output,
    config: &ImcConfig,
) -> Result<ImcResult> {
    config.validate()?;
    let hf_dim = data.x.first().map_or(0, Vec::len);
    let lf_dim = surrogate.input_dim();
    if data.x.is_empty() {
        return Err(Error::invalid("IMC needs HF data"));
    }
    let nominal = match &config.nominal {
        Some(m) => AffineMap {
            output,
            ..m.clone()
        },
        None => AffineMap::selector(lf_dim, hf_dim, output),
    };
    check_problem(&nominal, data, surrogate)?;
    if 2 * data.x.len() < lf_dim * hf_dim {
        log::warn!(
            "{} HF rows for {} map parameters: the fit is under-determined",
            data.x.len(),
            lf_dim * hf_dim + lf_dim
        );
    }
    let loss = |beta: &[f64]| {
        let m = nominal.with_params(beta);
        data_loss(&m, data, surrogate) + config.lambda * m.distance(&nominal)
    };
    let beta0 = nominal.params();
    let initial_loss = loss(&beta0);
    let (beta, trace) = optimizer.minimize(&loss, &beta0, config);
    let mut final_loss = loss(&beta);
    let improved = final_loss < initial_loss;
    let map = if improved {
        nominal.with_params(&beta)
    } else {
        log::warn!("IMC: no start improved on the nominal map; returning it unchanged");
        final_loss = initial_loss;
        nominal.clone()
    };
    Ok(ImcResult {
        data_loss: data_loss(&map, data, surrogate),
        map,
        nominal,
        lambda: config.lambda,
        final_loss,
        initial_loss,
        trace,
        improved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{KernelParams, Standardizer};

    fn toy_surrogate() -> GpModel {
        let x: Vec<Vec<f64>> = (0..5)
            .flat_map(|i| (0..5).map(move |j| vec![i as f64 / 4.0, j as f64 / 4.0]))
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| r[0] - 0.5 * r[1] + 0.3 * r[0] * r[1])
            .collect();
        GpModel::with_params(
            &x,
            &y,
            InputScaler::identity(2),
            Standardizer::identity(),
            KernelParams {
                signal_variance: 1.0,
                lengthscales: vec![0.6, 0.6],
                nugget: 1e-8,
            },
        )
        .unwrap()
    }

    #[test]
    fn selector_picks_shared_columns() {
        let m = AffineMap::selector(2, 5, Output::Depth);
        let x = vec![vec![0.1, 0.2, 0.3, 0.4, 0.5], vec![0.9, 0.8, 0.7, 0.6, 0.5]];
        assert_eq!(
            apply_map(&m, &x).unwrap(),
            vec![vec![0.1, 0.2], vec![0.9, 0.8]]
        );
        let c = AffineMap {
            output: Output::Depth,
            a: vec![vec![0.0; 5]; 2],
            b: vec![0.25, -3.0],
        };
        assert!(apply_map(&c, &x)
            .unwrap()
            .iter()
            .all(|g| g == &[0.25, -3.0]));
        assert!(apply_map(&m, &[vec![0.0; 4]]).is_err());
    }

    #[test]
    fn params_round_trip() {
        let m = AffineMap::selector(2, 5, Output::Width);
        let beta: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
        assert_eq!(m.with_params(&beta).params(), beta);
        assert_eq!(m.distance(&m), 0.0);
    }

    #[test]
    fn loss_regularisation_vanishes_at_nominal() {
        let s = toy_surrogate();
        let nominal = AffineMap::selector(2, 3, Output::Depth);
        let data = ImcData {
            x: vec![vec![0.2, 0.4, 0.9], vec![0.7, 0.1, 0.3]],
            y: vec![0.0, 0.0],
        };
        let l0 = imc_loss(&nominal, &data, &s, 0.0, &nominal).unwrap();
        let l1 = imc_loss(&nominal, &data, &s, 1e3, &nominal).unwrap();
        assert_eq!(l0, l1);
    }

    // Two points, hand-assembled from the surrogate mean at the mapped
    // inputs and the Frobenius/Euclidean penalty.
    #[test]
    fn loss_matches_hand_computation() {
        let s = toy_surrogate();
        let nominal = AffineMap::selector(2, 3, Output::Depth);
        let map = AffineMap {
            output: Output::Depth,
            a: vec![vec![0.9, 0.0, 0.2], vec![0.1, 1.0, 0.0]],
            b: vec![0.05, -0.1],
        };
        let data = ImcData {
            x: vec![vec![0.2, 0.4, 0.9], vec![0.7, 0.1, 0.3]],
            y: vec![0.3, -0.2],
        };
        let g0 = [0.9 * 0.2 + 0.2 * 0.9 + 0.05, 0.1 * 0.2 + 0.4 - 0.1];
        let g1 = [0.9 * 0.7 + 0.2 * 0.3 + 0.05, 0.1 * 0.7 + 0.1 - 0.1];
        let r0 = 0.3 - s.mean_scaled(&g0);
        let r1 = -0.2 - s.mean_scaled(&g1);
        let pen_a = (0.01f64 + 0.04 + 0.01).sqrt();
        let pen_b = (0.05f64 * 0.05 + 0.01).sqrt();
        let expected = r0 * r0 + r1 * r1 + 0.5 * (pen_a + pen_b);
        let got = imc_loss(&map, &data, &s, 0.5, &nominal).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn perfect_fit_has_zero_loss() {
        let s = toy_surrogate();
        let map = AffineMap {
            output: Output::Depth,
            a: vec![vec![0.5, 0.2, 0.1], vec![0.0, 0.7, 0.3]],
            b: vec![0.1, 0.0],
        };
        let x = vec![
            vec![0.2, 0.4, 0.9],
            vec![0.7, 0.1, 0.3],
            vec![0.5, 0.5, 0.5],
        ];
        let y = x.iter().map(|r| s.mean_scaled(&map.apply(r))).collect();
        let data = ImcData { x, y };
        let nominal = AffineMap::selector(2, 3, Output::Depth);
        assert!(imc_loss(&map, &data, &s, 0.0, &nominal).unwrap() < 1e-24);
    }

    #[test]
    fn huge_lambda_pins_nominal() {
        let s = toy_surrogate();
        let x: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![i as f64 / 7.0, 0.5, (i % 3) as f64 / 2.0])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 0.8 * r[0] + 0.1 * r[2]).collect();
        let data = ImcData { x, y };
        let cfg = ImcConfig {
            lambda: 1e6,
            ..ImcConfig::default()
        };
        let r = fit_imc(&data, &s, Output::Depth, &cfg).unwrap();
        assert!(r.map.distance(&r.nominal) < 1e-3);
        assert!(r.trace.best_loss.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fit_is_deterministic() {
        let s = toy_surrogate();
        let x: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![i as f64 / 5.0, 1.0 - i as f64 / 5.0, 0.3])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 0.5).collect();
        let data = ImcData { x, y };
        let cfg = ImcConfig {
            max_iterations: 500,
            ..ImcConfig::default()
        };
        let a = fit_imc(&data, &s, Output::Width, &cfg).unwrap();
        let b = fit_imc(&data, &s, Output::Width, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iterations() <= 500);
    }

    #[test]
    fn config_validation() {
        let bad = ImcConfig {
            lambda: -1.0,
            ..ImcConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ImcConfig {
            max_iterations: 0,
            ..ImcConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
