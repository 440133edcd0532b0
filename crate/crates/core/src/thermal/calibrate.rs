//! Fit the LF source width factor φ and absorptivity α_L to HF melt pools.

use serde::{Deserialize, Serialize};

use super::{melt_pool_geometry, EagarTsai, GridSpec, LaserParams, LfInput, MeltPoolGeometry};
use crate::analysis::r_squared;
use crate::doe::Dataset;
use crate::error::{Error, Result};
use crate::optim::{Bounds, NelderMead};
use crate::util::mean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBounds {
    pub sigma_factor: (f64, f64),
    pub absorptivity: (f64, f64),
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        Self {
            sigma_factor: (0.2, 1.2),
            absorptivity: (0.15, 0.7),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfCalibration {
    pub sigma_factor: f64,
    pub absorptivity: f64,
    pub r_squared_depth: f64,
    pub r_squared_width: f64,
    /// Calibrated LF pools on the target rows, in row order.
    pub fitted: Vec<MeltPoolGeometry>,
    /// The optimum sits on a bound of the search box.
    pub clamped: bool,
    pub evaluations: usize,
}

impl LfCalibration {
    pub fn laser(&self, beam_radius: f64) -> LaserParams {
        LaserParams {
            beam_radius,
            absorptivity: self.absorptivity,
            sigma_factor: self.sigma_factor,
        }
    }
}

/// Minimises the summed squared mismatch of LF against target pools, each
/// output normalised by its mean target value so depth and width weigh in
/// equally. Only the first two input columns (P, v) of `target` are used.
pub fn calibrate_lf(
    target: &Dataset,
    template: &EagarTsai,
    grid: &GridSpec,
    bounds: &CalibrationBounds,
) -> Result<LfCalibration> {
    if target.len() < 2 {
        return Err(Error::Calibration("need at least two target rows".into()));
    }
    let inputs: Vec<LfInput> = target
        .inputs
        .iter()
        .map(|x| LfInput::from_window_units(x))
        .collect::<Result<_>>()?;
    let depth_scale = mean(&target.depth);
    let width_scale = mean(&target.width);
    if depth_scale <= 0.0 || width_scale <= 0.0 {
        return Err(Error::Calibration("target pools are all empty".into()));
    }

    let beam_radius = template.laser().beam_radius;
    let pools = |params: &[f64]| -> Result<Vec<MeltPoolGeometry>> {
        let laser = LaserParams {
            beam_radius,
            sigma_factor: params[0],
            absorptivity: params[1],
        };
        let model = template.with_laser(laser)?;
        inputs
            .iter()
            .map(|inp| melt_pool_geometry(&model, inp, grid))
            .collect()
    };
    let objective = |params: &[f64]| -> f64 {
        match pools(params) {
            Ok(p) => p
                .iter()
                .zip(target.depth.iter().zip(&target.width))
                .map(|(g, (d, w))| {
                    ((g.depth - d) / depth_scale).powi(2) + ((g.width - w) / width_scale).powi(2)
                })
                .sum(),
            Err(_) => f64::INFINITY,
        }
    };

    let box_ = Bounds::new(
        vec![bounds.sigma_factor.0, bounds.absorptivity.0],
        vec![bounds.sigma_factor.1, bounds.absorptivity.1],
    );
    let mut start = vec![template.laser().sigma_factor, template.laser().absorptivity];
    box_.project(&mut start);
    let mut nm = NelderMead::new(2).with_max_iterations(200).with_ftol(1e-9);
    nm.xtol = 1e-5;
    nm.initial_step = vec![
        0.1 * (bounds.sigma_factor.1 - bounds.sigma_factor.0),
        0.1 * (bounds.absorptivity.1 - bounds.absorptivity.0),
    ];
    let best = nm.minimize(objective, &start, &box_);
    if !best.value.is_finite() {
        return Err(Error::Calibration(
            "every trial parameter set failed to produce a melt pool on the grid".into(),
        ));
    }
    let fitted = pools(&best.x)?;
    if fitted.iter().all(|g| g.depth == 0.0 && g.width == 0.0) {
        return Err(Error::Calibration(
            "calibrated LF model produces no melt pool on any row".into(),
        ));
    }
    let clamped = box_.touches(&best.x);
    if clamped {
        log::warn!(
            "LF calibration optimum {:?} lies on the search bounds",
            best.x
        );
    }
    let lf_depth: Vec<f64> = fitted.iter().map(|g| g.depth).collect();
    let lf_width: Vec<f64> = fitted.iter().map(|g| g.width).collect();
    Ok(LfCalibration {
        sigma_factor: best.x[0],
        absorptivity: best.x[1],
        r_squared_depth: r_squared(&target.depth, &lf_depth)?,
        r_squared_width: r_squared(&target.width, &lf_width)?,
        fitted,
        clamped,
        evaluations: best.evaluations,
    })
}
