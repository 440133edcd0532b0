//! Zero-mean Gaussian-process regression with an ARD Matérn 5/2 kernel.
//!
//! Inputs are mapped affinely onto the unit cube and targets are
//! standardised before fitting; hyperparameters maximise the log marginal
//! likelihood over a multi-start simplex search in log space.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doe::{lhs_unit, ParameterWindow};
use crate::error::{Error, Result};
use crate::optim::{multi_start, Bounds, NelderMead};

/// Numerical floor on the nugget.
pub const NUGGET_FLOOR: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// σ_f², in squared standardised output units.
    pub signal_variance: f64,
    /// One per input dimension, in scaled input units.
    pub lengthscales: Vec<f64>,
    /// σ_n², added to the diagonal of the training covariance.
    pub nugget: f64,
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::invalid(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if self
            .lengthscales
            .iter()
            .any(|l| !(*l > 0.0 && l.is_finite()))
        {
            return Err(Error::invalid(format!(
                "lengthscales must be positive, got {:?}",
                self.lengthscales
            )));
        }
        if !(self.nugget >= 0.0 && self.nugget.is_finite()) {
            return Err(Error::invalid(format!(
                "nugget must be non-negative, got {}",
                self.nugget
            )));
        }
        Ok(())
    }

    fn from_log(theta: &[f64]) -> Self {
        let d = theta.len() - 2;
        Self {
            signal_variance: theta[0].exp(),
            lengthscales: theta[1..=d].iter().map(|t| t.exp()).collect(),
            nugget: theta[d + 1].exp(),
        }
    }
}

/// `σ_f² (1 + √5 r + 5r²/3) exp(−√5 r)` with `r` the lengthscale-weighted
/// distance.
pub fn matern52(x: &[f64], x2: &[f64], params: &KernelParams) -> f64 {
    debug_assert_eq!(x.len(), params.lengthscales.len());
    let r2: f64 = x
        .iter()
        .zip(x2)
        .zip(&params.lengthscales)
        .map(|((a, b), l)| ((a - b) / l).powi(2))
        .sum();
    matern52_r(r2.sqrt(), params.signal_variance)
}

#[inline]
fn matern52_r(r: f64, signal_variance: f64) -> f64 {
    let s = SQRT5 * r;
    signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Affine map of raw inputs onto the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InputScaler {
    pub fn from_window(window: &ParameterWindow) -> Self {
        Self {
            lower: window.dims().iter().map(|d| d.lower).collect(),
            upper: window.dims().iter().map(|d| d.upper).collect(),
        }
    }

    /// For inputs that are already scaled.
    pub fn identity(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn scale(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }
}

/// `(y − mean) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub scale: f64,
}

impl Standardizer {
    /// Sample mean and standard deviation; a constant sample gets unit
    /// scale.
    pub fn fit(y: &[f64]) -> Self {
        if y.is_empty() {
            return Self::identity();
        }
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        Self {
            mean,
            scale: if sd > 0.0 { sd } else { 1.0 },
        }
    }

    pub fn identity() -> Self {
        Self {
            mean: 0.0,
            scale: 1.0,
        }
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean) / self.scale
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }

    pub fn inverse_variance(&self, v: f64) -> f64 {
        v * self.scale * self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub restarts: usize,
    pub seed: u64,
    pub lengthscale_bounds: (f64, f64),
    pub signal_variance_bounds: (f64, f64),
    pub nugget_bounds: (f64, f64),
    /// Simplex iterations per restart; `None` uses the optimiser default.
    pub max_iterations: Option<usize>,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            lengthscale_bounds: (1e-2, 1e2),
            signal_variance_bounds: (1e-2, 1e2),
            nugget_bounds: (1e-8, 1.0),
            max_iterations: None,
        }
    }
}

impl GpConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn log_bounds(&self, d: usize) -> Result<Bounds> {
        for (name, (lo, hi)) in [
            ("lengthscale", self.lengthscale_bounds),
            ("signal variance", self.signal_variance_bounds),
            ("nugget", self.nugget_bounds),
        ] {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::invalid(format!(
                    "{name} bounds must satisfy 0 < lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        let mut lower = vec![self.signal_variance_bounds.0.ln()];
        let mut upper = vec![self.signal_variance_bounds.1.ln()];
        lower.extend(std::iter::repeat(self.lengthscale_bounds.0.ln()).take(d));
        upper.extend(std::iter::repeat(self.lengthscale_bounds.1.ln()).take(d));
        lower.push(self.nugget_bounds.0.max(NUGGET_FLOOR).ln());
        upper.push(self.nugget_bounds.1.ln());
        Ok(Bounds::new(lower, upper))
    }
}

/// Scaled training inputs and standardised targets.
#[derive(Debug, Clone)]
struct Training {
    x: Vec<Vec<f64>>,
    y: DVector<f64>,
}

impl Training {
    fn covariance(&self, params: &KernelParams) -> DMatrix<f64> {
        let n = self.x.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = params.signal_variance + params.nugget.max(NUGGET_FLOOR);
            for j in 0..i {
                let v = matern52(&self.x[i], &self.x[j], params);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Cholesky factor, escalating diagonal jitter ×10 from 1e-10 to 1e-4
    /// when the plain factorisation fails. Returns the jitter used.
    fn factorize(
        &self,
        params: &KernelParams,
    ) -> std::result::Result<(Cholesky<f64, Dyn>, f64), DMatrix<f64>> {
        let k = self.covariance(params);
        if let Some(c) = Cholesky::new(k.clone()) {
            return Ok((c, 0.0));
        }
        let mut jitter = 1e-10;
        while jitter <= 1e-4 * (1.0 + 1e-9) {
            let mut kj = k.clone();
            for i in 0..kj.nrows() {
                kj[(i, i)] += jitter;
            }
            if let Some(c) = Cholesky::new(kj) {
                return Ok((c, jitter));
            }
            jitter *= 10.0;
        }
        Err(k)
    }

    fn log_marginal_likelihood(&self, params: &KernelParams) -> f64 {
        match self.factorize(params) {
            Ok((chol, _)) => lml_from_factor(&chol, &self.y),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

fn lml_from_factor(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> f64 {
    let alpha = chol.solve(y);
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    -0.5 * y.dot(&alpha) - log_det_half - 0.5 * y.len() as f64 * LN_2PI
}

/// A conditioned GP. Immutable once built; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct GpModel {
    training: Training,
    params: KernelParams,
    input_scaler: InputScaler,
    output: Standardizer,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpModel {
    /// Conditions a GP with fixed hyperparameters. `x` is in raw units,
    /// `y` in raw output units.
    pub fn with_params(
        x: &[Vec<f64>],
        y: &[f64],
        input_scaler: InputScaler,
        output: Standardizer,
        params: KernelParams,
    ) -> Result<Self> {
        check_data(x, y, input_scaler.dim())?;
        params.validate()?;
        if params.lengthscales.len() != input_scaler.dim() {
            return Err(Error::invalid(format!(
                "{} lengthscales for {}-dimensional inputs",
                params.lengthscales.len(),
                input_scaler.dim()
            )));
        }
        let training = Training {
            x: x.iter().map(|r| input_scaler.scale(r)).collect(),
            y: DVector::from_iterator(y.len(), y.iter().map(|v| output.forward(*v))),
        };
        Self::condition(training, params, input_scaler, output)
    }

    fn condition(
        training: Training,
        params: KernelParams,
        input_scaler: InputScaler,
        output: Standardizer,
    ) -> Result<Self> {
        let (chol, jitter) = training.factorize(&params).map_err(|k| {
            Error::Fit(format!(
                "covariance not positive definite even with 1e-4 jitter (condition estimate {:.3e})",
                condition_estimate(&k)
            ))
        })?;
        if jitter > 0.0 {
            log::warn!("GP covariance needed diagonal jitter {jitter:e}");
        }
        let alpha = chol.solve(&training.y);
        Ok(Self {
            training,
            params,
            input_scaler,
            output,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn input_scaler(&self) -> &InputScaler {
        &self.input_scaler
    }

    pub fn standardizer(&self) -> Standardizer {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.input_scaler.dim()
    }

    pub fn n_train(&self) -> usize {
        self.training.x.len()
    }

    /// Diagonal jitter that had to be added on top of the nugget.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Log evidence of the standardised training targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        lml_from_factor(&self.chol, &self.training.y)
    }

    /// Log evidence of this model's training data under other
    /// hyperparameters; `-inf` when the covariance cannot be factorised.
    pub fn log_marginal_likelihood_at(&self, params: &KernelParams) -> f64 {
        self.training.log_marginal_likelihood(params)
    }

    /// Posterior mean and latent variance for raw-unit queries, in raw
    /// output units.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some(bad) = x.iter().find(|r| r.len() != self.input_dim()) {
            return Err(Error::invalid(format!(
                "query has {} inputs, model expects {}",
                bad.len(),
                self.input_dim()
            )));
        }
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| self.input_scaler.scale(r)).collect();
        let (m, v) = self.predict_scaled(&scaled);
        Ok((
            m.into_iter().map(|z| self.output.inverse(z)).collect(),
            v.into_iter()
                .map(|s| self.output.inverse_variance(s))
                .collect(),
        ))
    }

    /// Posterior mean and latent variance for queries already on the
    /// model's unit scale, in standardised output units.
    pub fn predict_scaled(&self, x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_train();
        let m = x.len();
        let mut ks = DMatrix::zeros(n, m);
        for (j, q) in x.iter().enumerate() {
            for (i, t) in self.training.x.iter().enumerate() {
                ks[(i, j)] = matern52(t, q, &self.params);
            }
        }
        let mean = ks.tr_mul(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor has a positive diagonal");
        let var = (0..m)
            .map(|j| {
                let s = self.params.signal_variance - v.column(j).norm_squared();
                if s < -1e-10 {
                    log::warn!("negative predictive variance {s:e} clamped to 0");
                }
                s.max(0.0)
            })
            .collect();
        (mean.iter().copied().collect(), var)
    }

    /// Posterior mean only, on the unit scale and in standardised units.
    pub fn mean_scaled(&self, x: &[f64]) -> f64 {
        self.training
            .x
            .iter()
            .zip(self.alpha.iter())
            .map(|(t, a)| a * matern52(t, x, &self.params))
            .sum()
    }

    pub fn to_snapshot(&self) -> GpSnapshot {
        GpSnapshot {
            inputs: self.training.x.clone(),
            targets: self.training.y.iter().copied().collect(),
            params: self.params.clone(),
            input_scaler: self.input_scaler.clone(),
            standardizer: self.output,
        }
    }

    pub fn from_snapshot(s: GpSnapshot) -> Result<Self> {
        check_data(&s.inputs, &s.targets, s.input_scaler.dim())?;
        s.params.validate()?;
        let training = Training {
            y: DVector::from_vec(s.targets),
            x: s.inputs,
        };
        Self::condition(training, s.params, s.input_scaler, s.standardizer)
    }
}

/// Serialised form of a [`GpModel`]: training data on the model's internal
/// scales plus everything needed to re-derive the factorisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSnapshot {
    /// Scaled training inputs.
    pub inputs: Vec<Vec<f64>>,
    /// Standardised training targets.
    pub targets: Vec<f64>,
    pub params: KernelParams,
    pub input_scaler: InputScaler,
    pub standardizer: Standardizer,
}

impl Serialize for GpModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_snapshot().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GpModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        GpModel::from_snapshot(GpSnapshot::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

fn check_data(x: &[Vec<f64>], y: &[f64], dim: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "{} input rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::invalid("no training data"));
    }
    if let Some(r) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::invalid(format!(
            "training row has {} inputs, expected {dim}",
            r.len()
        )));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    Ok(())
}

fn condition_estimate(k: &DMatrix<f64>) -> f64 {
    let eig = k.clone().symmetric_eigenvalues();
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Drops rows that coincide (within 1e-10) with an earlier row on the unit
/// scale. Returns the kept indices.
fn dedupe(scaled: &[Vec<f64>]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::with_capacity(scaled.len());
    for (i, row) in scaled.iter().enumerate() {
        let dup = kept.iter().any(|&k| {
            scaled[k]
                .iter()
                .zip(row)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                < 1e-10
        });
        if !dup {
            kept.push(i);
        }
    }
    if kept.len() < scaled.len() {
        log::warn!(
            "dropped {} duplicate training rows",
            scaled.len() - kept.len()
        );
    }
    kept
}

/// Maximum-likelihood fit with targets standardised by their own sample
/// statistics.
pub fn fit_gp(
    x: &[Vec<f64>],
    y: &[f64],
    input_scaler: InputScaler,
    config: &GpConfig,
) -> Result<GpModel> {
    fit_gp_standardized(x, y, input_scaler, Standardizer::fit(y), config)
}

/// Maximum-likelihood fit with a caller-supplied output standardiser.
pub fn fit_gp_standardized(
    x: &[Vec<f64>],
    y: &[f64],
    input_scaler: InputScaler,
    output: Standardizer,
    config: &GpConfig,
) -> Result<GpModel> {
    let d = input_scaler.dim();
    check_data(x, y, d)?;
    if x.len() < 2 {
        return Err(Error::invalid("GP fit needs at least two training points"));
    }
    if config.restarts == 0 {
        return Err(Error::invalid("GP fit needs at least one restart"));
    }
    let scaled: Vec<Vec<f64>> = x.iter().map(|r| input_scaler.scale(r)).collect();
    let keep = dedupe(&scaled);
    let training = Training {
        x: keep.iter().map(|&i| scaled[i].clone()).collect(),
        y: DVector::from_iterator(keep.len(), keep.iter().map(|&i| output.forward(y[i]))),
    };

    let bounds = config.log_bounds(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts: Vec<Vec<f64>> = lhs_unit(config.restarts, d + 2, &mut rng)
        .into_iter()
        .map(|u| {
            u.iter()
                .zip(bounds.lower.iter().zip(&bounds.upper))
                .map(|(t, (lo, hi))| lo + t * (hi - lo))
                .collect()
        })
        .collect();
    let mut nm = NelderMead::new(d + 2).with_step(0.5);
    if let Some(it) = config.max_iterations {
        nm = nm.with_max_iterations(it);
    }
    let objective =
        |theta: &[f64]| -training.log_marginal_likelihood(&KernelParams::from_log(theta));
    let (_, best) = multi_start(&nm, objective, &starts, &bounds).expect("at least one restart");
    if !best.value.is_finite() {
        return Err(Error::Fit(
            "every restart failed to factorise the training covariance".into(),
        ));
    }
    let params = KernelParams::from_log(&best.x);
    if bounds.touches(&best.x) {
        log::debug!("GP hyperparameters at a search bound: {params:?}");
    }
    GpModel::condition(training, params, input_scaler, output)
}

/// Fits a GP to `y − ρ·m` on already-scaled inputs, with ρ profiled out at
/// every hyperparameter trial by its generalised-least-squares estimate
/// `ρ̂ = mᵀK⁻¹y / mᵀK⁻¹m` (clamped to `rho_bounds`). Targets are used as
/// given, without standardisation. Returns the residual GP and ρ̂.
pub(crate) fn fit_profiled(
    x: &[Vec<f64>],
    y: &[f64],
    m: &[f64],
    config: &GpConfig,
    rho_bounds: (f64, f64),
) -> Result<(GpModel, f64)> {
    let d = x.first().map_or(0, Vec::len);
    check_data(x, y, d)?;
    if m.len() != y.len() {
        return Err(Error::invalid(
            "scaled-mean vector length differs from targets",
        ));
    }
    if x.len() < 2 {
        return Err(Error::invalid("GP fit needs at least two training points"));
    }
    let keep = dedupe(x);
    let xs: Vec<Vec<f64>> = keep.iter().map(|&i| x[i].clone()).collect();
    let yv = DVector::from_iterator(keep.len(), keep.iter().map(|&i| y[i]));
    let mv = DVector::from_iterator(keep.len(), keep.iter().map(|&i| m[i]));
    let clamp_rho = |r: f64| {
        if r.is_finite() {
            r.clamp(rho_bounds.0, rho_bounds.1)
        } else {
            0.0
        }
    };
    let scaler = InputScaler::identity(d);
    let output = Standardizer::identity();

    // exact linear relation: no discrepancy left to model
    let mm = mv.norm_squared();
    let rho_ls = if mm > 0.0 {
        clamp_rho(mv.dot(&yv) / mm)
    } else {
        0.0
    };
    let resid = &yv - &mv * rho_ls;
    if resid.norm() <= 1e-12 * yv.norm().max(f64::MIN_POSITIVE) {
        log::warn!("HF data is an exact multiple of the LF mean; discrepancy GP left at its floor");
        let params = KernelParams {
            signal_variance: config.signal_variance_bounds.0,
            lengthscales: vec![1.0; d],
            nugget: NUGGET_FLOOR,
        };
        let training = Training { x: xs, y: resid };
        return Ok((
            GpModel::condition(training, params, scaler, output)?,
            rho_ls,
        ));
    }

    let profile = |params: &KernelParams, training: &Training| -> Option<(f64, f64)> {
        let (chol, _) = training.factorize(params).ok()?;
        let ki_m = chol.solve(&mv);
        let denom = mv.dot(&ki_m);
        let rho = if denom > 0.0 {
            clamp_rho(ki_m.dot(&yv) / denom)
        } else {
            0.0
        };
        let r = &yv - &mv * rho;
        Some((lml_from_factor(&chol, &r), rho))
    };
    let probe = Training {
        x: xs.clone(),
        y: yv.clone(),
    };
    let bounds = config.log_bounds(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts: Vec<Vec<f64>> = lhs_unit(config.restarts.max(1), d + 2, &mut rng)
        .into_iter()
        .map(|u| {
            u.iter()
                .zip(bounds.lower.iter().zip(&bounds.upper))
                .map(|(t, (lo, hi))| lo + t * (hi - lo))
                .collect()
        })
        .collect();
    let mut nm = NelderMead::new(d + 2).with_step(0.5);
    if let Some(it) = config.max_iterations {
        nm = nm.with_max_iterations(it);
    }
    let objective = |theta: &[f64]| match profile(&KernelParams::from_log(theta), &probe) {
        Some((lml, _)) => -lml,
        None => f64::INFINITY,
    };
    let (_, best) = multi_start(&nm, objective, &starts, &bounds).expect("at least one restart");
    let params = KernelParams::from_log(&best.x);
    let (_, rho) = profile(&params, &probe).ok_or_else(|| {
        Error::Fit("every restart failed to factorise the discrepancy covariance".into())
    })?;
    let training = Training {
        x: xs,
        y: &yv - &mv * rho,
    };
    Ok((GpModel::condition(training, params, scaler, output)?, rho))
}

/// Mean R² of `k`-fold cross-validation, folds taken as contiguous blocks
/// of a seeded permutation.
pub fn cross_validate_r2(
    x: &[Vec<f64>],
    y: &[f64],
    input_scaler: &InputScaler,
    config: &GpConfig,
    k: usize,
) -> Result<f64> {
    use rand::seq::SliceRandom;
    if k < 2 || k > x.len() {
        return Err(Error::invalid(format!(
            "cannot split {} rows into {k} folds",
            x.len()
        )));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed));
    let mut preds = vec![0.0; x.len()];
    for f in 0..k {
        let lo = f * x.len() / k;
        let hi = (f + 1) * x.len() / k;
        let held: Vec<usize> = order[lo..hi].to_vec();
        let train: Vec<usize> = order
            .iter()
            .copied()
            .filter(|i| !held.contains(i))
            .collect();
        let model = fit_gp(
            &train.iter().map(|&i| x[i].clone()).collect::<Vec<_>>(),
            &train.iter().map(|&i| y[i]).collect::<Vec<_>>(),
            input_scaler.clone(),
            config,
        )?;
        let (m, _) = model.predict(&held.iter().map(|&i| x[i].clone()).collect::<Vec<_>>())?;
        for (&i, v) in held.iter().zip(m) {
            preds[i] = v;
        }
    }
    crate::analysis::r_squared(y, &preds)
}
