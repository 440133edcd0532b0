//! Error metrics, correlation and variance-based sensitivities, and the
//! semi-ellipse melt-pool cross-section.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doe::{lhs_unit, ParameterWindow};
use crate::error::{Error, Result};
use crate::Output;

fn check_pair(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::invalid(format!(
            "{} truths but {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    Ok(())
}

/// Coefficient of determination `1 − SS_res / SS_tot`; negative when the
/// predictions are worse than the mean.
pub fn r_squared(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat)?;
    if y.len() < 2 {
        return Err(Error::invalid("R² needs at least two points"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::invalid("R² is undefined for constant truths"));
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// `‖y − ŷ‖₂ / ‖y‖₂`.
pub fn relative_l2(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat)?;
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid(
            "relative L2 is undefined for an all-zero truth",
        ));
    }
    let err = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(err / norm)
}

/// Root mean of the predictive variances.
pub fn sigma_avg(variances: &[f64]) -> Result<f64> {
    if variances.is_empty() {
        return Err(Error::invalid("no variances"));
    }
    if let Some(v) = variances.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::invalid(format!("negative or NaN variance {v}")));
    }
    Ok((variances.iter().sum::<f64>() / variances.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub output: Output,
    pub r_squared: f64,
    pub relative_l2: f64,
    pub sigma_avg: f64,
    pub n_points: usize,
    /// Seeds of the runs averaged into this report.
    pub seeds: Vec<u64>,
}

impl MetricsReport {
    pub fn evaluate(
        output: Output,
        truth: &[f64],
        mean: &[f64],
        variance: &[f64],
        seed: u64,
    ) -> Result<Self> {
        check_pair(truth, variance)?;
        Ok(Self {
            output,
            r_squared: r_squared(truth, mean)?,
            relative_l2: relative_l2(truth, mean)?,
            sigma_avg: sigma_avg(variance)?,
            n_points: truth.len(),
            seeds: vec![seed],
        })
    }

    /// Arithmetic mean of each metric over repeated runs of one output.
    pub fn average(reports: &[MetricsReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::invalid("nothing to average"))?;
        if reports.iter().any(|r| r.output != first.output) {
            return Err(Error::invalid(
                "cannot average reports for different outputs",
            ));
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Ok(Self {
            output: first.output,
            r_squared: avg(|r| r.r_squared),
            relative_l2: avg(|r| r.relative_l2),
            sigma_avg: avg(|r| r.sigma_avg),
            n_points: first.n_points,
            seeds: reports
                .iter()
                .flat_map(|r| r.seeds.iter().copied())
                .collect(),
        })
    }
}

/// Sample Pearson correlation of each input column with `y`; `None` where a
/// column is constant.
pub fn pearson(x: &[Vec<f64>], y: &[f64]) -> Result<Vec<Option<f64>>> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::invalid(format!(
            "Pearson needs n >= 3 matching rows, got {n} and {}",
            y.len()
        )));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("ragged input matrix"));
    }
    let centred = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / n as f64;
        v.into_iter().map(|a| a - m).collect::<Vec<_>>()
    };
    let yc = centred(y.to_vec());
    let syy: f64 = yc.iter().map(|v| v * v).sum();
    if syy == 0.0 {
        return Err(Error::invalid("output is constant"));
    }
    Ok((0..d)
        .map(|j| {
            let xc = centred(x.iter().map(|r| r[j]).collect());
            let sxx: f64 = xc.iter().map(|v| v * v).sum();
            if sxx == 0.0 {
                return None;
            }
            let sxy: f64 = xc.iter().zip(&yc).map(|(a, b)| a * b).sum();
            Some(sxy / (sxx * syy).sqrt())
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolIndices {
    pub names: Vec<String>,
    pub first_order: Vec<f64>,
    pub total_order: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    /// Some estimate came out negative through sampling noise; values are
    /// reported unclamped.
    pub negative_estimates: bool,
}

/// Reorders each column of `x` so its ranks follow a linearly decorrelated
/// version of the sample (Iman–Conover). Marginals are untouched, so the
/// Latin hypercube property survives.
fn decorrelate(x: &mut [Vec<f64>]) {
    let n = x.len();
    let d = x[0].len();
    let mut s = DMatrix::from_fn(n, d, |i, j| x[i][j]);
    for mut col in s.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let cov = s.transpose() * &s / n as f64;
    let Some(chol) = cov.cholesky() else { return };
    // T = S L^{-T} has identity sample covariance
    let lt = chol.l().transpose();
    let Some(lt_inv) = lt.try_inverse() else {
        return;
    };
    let t = s * lt_inv;
    for j in 0..d {
        let mut sorted: Vec<f64> = x.iter().map(|r| r[j]).collect();
        sorted.sort_by(f64::total_cmp);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| t[(a, j)].total_cmp(&t[(b, j)]));
        for (rank, &row) in order.iter().enumerate() {
            x[row][j] = sorted[rank];
        }
    }
}

/// First- and total-order Sobol indices of `predictor` over `window`.
///
/// `A` and `B` are the two halves of one `2d`-dimensional Latin hypercube of
/// `n` rows; `AB_i` is `A` with column `i` taken from `B`. The predictor is
/// called once on the stacked `(d + 2)·n` rows `[A; B; AB_1; …; AB_d]`.
/// S1 uses `mean(f_B (f_ABi − f_A)) / V`, ST uses `mean((f_A − f_ABi)²) / 2V`.
pub fn sobol_indices<F>(
    window: &ParameterWindow,
    predictor: F,
    n: usize,
    seed: u64,
) -> Result<SobolIndices>
where
    F: FnOnce(&[Vec<f64>]) -> Result<Vec<f64>>,
{
    if n < 256 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "Sobol base sample must be a power of two >= 256, got {n}"
        )));
    }
    let d = window.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = lhs_unit(n, 2 * d, &mut rng);
    decorrelate(&mut unit);

    let mut rows = Vec::with_capacity((d + 2) * n);
    rows.extend(unit.iter().map(|u| window.from_unit(&u[..d])));
    rows.extend(unit.iter().map(|u| window.from_unit(&u[d..])));
    for i in 0..d {
        rows.extend(unit.iter().map(|u| {
            let mut ab = u[..d].to_vec();
            ab[i] = u[d + i];
            window.from_unit(&ab)
        }));
    }
    let f = predictor(&rows)?;
    if f.len() != rows.len() {
        return Err(Error::invalid(format!(
            "predictor returned {} values for {} rows",
            f.len(),
            rows.len()
        )));
    }
    let (fa, rest) = f.split_at(n);
    let (fb, fab) = rest.split_at(n);
    let all = &f[..2 * n];
    let mean = all.iter().sum::<f64>() / (2 * n) as f64;
    let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (2 * n) as f64;
    if !(var > 0.0) {
        return Err(Error::invalid(
            "predictor output has zero variance; Sobol indices are undefined",
        ));
    }
    let mut first_order = Vec::with_capacity(d);
    let mut total_order = Vec::with_capacity(d);
    for i in 0..d {
        let fi = &fab[i * n..(i + 1) * n];
        let s1 = (0..n).map(|k| fb[k] * (fi[k] - fa[k])).sum::<f64>() / n as f64 / var;
        let st = (0..n).map(|k| (fa[k] - fi[k]).powi(2)).sum::<f64>() / (2 * n) as f64 / var;
        first_order.push(s1);
        total_order.push(st);
    }
    let negative_estimates = first_order.iter().chain(&total_order).any(|&v| v < 0.0);
    if negative_estimates {
        log::warn!("Sobol estimates below zero from sampling noise: S1 {first_order:?}, ST {total_order:?}");
    }
    Ok(SobolIndices {
        names: window.names().into_iter().map(str::to_owned).collect(),
        first_order,
        total_order,
        n,
        seed,
        negative_estimates,
    })
}

/// Lower half of the melt-pool cross-section in the (y, z) plane, for the
/// predicted mean and the μ ± 2σ extents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseBoundary {
    pub mean: Vec<[f64; 2]>,
    pub upper: Vec<[f64; 2]>,
    pub lower: Vec<[f64; 2]>,
}

pub fn ellipse_boundary(
    depth: f64,
    width: f64,
    sigma_depth: f64,
    sigma_width: f64,
    resolution: usize,
) -> Result<EllipseBoundary> {
    if !(depth > 0.0 && width > 0.0) {
        return Err(Error::invalid(format!(
            "ellipse needs positive axes, got depth {depth}, width {width}"
        )));
    }
    if !(sigma_depth >= 0.0 && sigma_width >= 0.0) {
        return Err(Error::invalid("standard deviations must be non-negative"));
    }
    if resolution < 3 {
        return Err(Error::invalid("ellipse needs at least 3 boundary points"));
    }
    // t = y / semi-axis, Chebyshev-spaced so the steep ends are resolved;
    // an odd count puts a sample exactly on the axis
    let ts: Vec<f64> = (0..resolution)
        .map(|k| {
            if 2 * k + 1 == resolution {
                0.0
            } else {
                -(std::f64::consts::PI * k as f64 / (resolution - 1) as f64).cos()
            }
        })
        .collect();
    let curve = |a: f64, b: f64| -> Vec<[f64; 2]> {
        ts.iter()
            .map(|&t| [a * t, -b * (1.0 - t * t).max(0.0).sqrt()])
            .collect()
    };
    Ok(EllipseBoundary {
        mean: curve(width / 2.0, depth),
        upper: curve((width + 2.0 * sigma_width) / 2.0, depth + 2.0 * sigma_depth),
        lower: curve(
            ((width - 2.0 * sigma_width) / 2.0).max(0.0),
            (depth - 2.0 * sigma_depth).max(0.0),
        ),
    })
}

impl EllipseBoundary {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "y_mean", "z_mean", "y_upper", "z_upper", "y_lower", "z_lower",
        ])?;
        for ((m, u), l) in self.mean.iter().zip(&self.upper).zip(&self.lower) {
            let rec: Vec<String> = [m[0], m[1], u[0], u[1], l[0], l[1]]
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("formatted floats are ASCII"))
    }
}
