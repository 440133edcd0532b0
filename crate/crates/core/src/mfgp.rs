//! Autoregressive co-kriging across heterogeneous input spaces.
//!
//! `y_HF(x) = ρ · y_LF(g(x)) + γ(g(x))`, with `g` the fitted affine map and
//! independent GP priors on `y_LF` and the discrepancy `γ`. Training is
//! recursive: the LF GP is fitted first, its posterior mean `m` is taken at
//! the mapped HF inputs, then ρ and the discrepancy GP are fitted to the HF
//! targets, with ρ profiled by generalised least squares. The relation is
//! expressed in raw outputs divided by the LF standard deviation: shifting
//! by the LF mean as well would turn `y_HF = ρ y_LF` into an affine relation
//! whose offset the zero-mean discrepancy would have to absorb.

use serde::{Deserialize, Serialize};

use crate::doe::{Dataset, ParameterWindow};
use crate::error::{Error, Result};
use crate::gp::{fit_gp, fit_profiled, GpConfig, GpModel, GpSnapshot, InputScaler, Standardizer};
use crate::imc::{apply_map, fit_imc, AffineMap, ImcConfig, ImcData, ImcResult};
use crate::{Fidelity, Output};

pub const SCHEMA: &str = "hetmfgp-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfgpConfig {
    pub lf_gp: GpConfig,
    pub discrepancy_gp: GpConfig,
    pub rho_bounds: (f64, f64),
}

impl Default for MfgpConfig {
    fn default() -> Self {
        Self {
            lf_gp: GpConfig::default(),
            // residuals can be far smaller than the LF spread
            discrepancy_gp: GpConfig {
                signal_variance_bounds: (1e-6, 1e2),
                ..GpConfig::default()
            },
            rho_bounds: (-5.0, 5.0),
        }
    }
}

impl MfgpConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.lf_gp.seed = seed;
        self.discrepancy_gp.seed = seed.wrapping_add(1);
        self
    }
}

#[derive(Debug, Clone)]
pub struct HetMfgpModel {
    output: Output,
    lf: Option<GpModel>,
    discrepancy: GpModel,
    rho: f64,
    map: AffineMap,
    hf_scaler: InputScaler,
    standardizer: Standardizer,
}

impl HetMfgpModel {
    /// Assembles a model from fitted parts. The discrepancy GP must work on
    /// the unit LF scale with identity output standardisation; its outputs,
    /// and ρ times the LF GP's, are mapped to physical units by
    /// `standardizer`.
    pub fn from_parts(
        output: Output,
        lf: Option<GpModel>,
        discrepancy: GpModel,
        rho: f64,
        map: AffineMap,
        hf_scaler: InputScaler,
        standardizer: Standardizer,
    ) -> Result<Self> {
        map.validate()?;
        if !rho.is_finite() {
            return Err(Error::invalid("ρ must be finite"));
        }
        if discrepancy.input_dim() != map.output_dim() {
            return Err(Error::invalid(format!(
                "discrepancy GP takes {} inputs, map produces {}",
                discrepancy.input_dim(),
                map.output_dim()
            )));
        }
        if let Some(lf) = &lf {
            if lf.input_dim() != map.output_dim() {
                return Err(Error::invalid("LF GP and map disagree on the LF dimension"));
            }
        }
        if hf_scaler.dim() != map.input_dim() {
            return Err(Error::invalid(
                "HF scaler and map disagree on the HF dimension",
            ));
        }
        Ok(Self {
            output,
            lf,
            discrepancy,
            rho,
            map,
            hf_scaler,
            standardizer,
        })
    }

    pub fn output(&self) -> Output {
        self.output
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn map(&self) -> &AffineMap {
        &self.map
    }

    pub fn lf_gp(&self) -> Option<&GpModel> {
        self.lf.as_ref()
    }

    pub fn discrepancy(&self) -> &GpModel {
        &self.discrepancy
    }

    pub fn standardizer(&self) -> Standardizer {
        self.standardizer
    }

    /// Pseudo LF inputs (unit scale) of raw HF queries.
    pub fn pseudo_inputs(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if let Some(r) = x.iter().find(|r| r.len() != self.hf_scaler.dim()) {
            return Err(Error::invalid(format!(
                "query has {} inputs, model expects {}",
                r.len(),
                self.hf_scaler.dim()
            )));
        }
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| self.hf_scaler.scale(r)).collect();
        apply_map(&self.map, &scaled)
    }

    /// Posterior mean `ρ μ_LF + μ_γ` and variance `ρ² σ²_LF + σ²_γ` at raw
    /// HF queries, in output units.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.pseudo_inputs(x)?;
        let s = self.standardizer;
        let (mut mean, mut var) = self.discrepancy.predict_scaled(&g);
        if let Some(lf) = &self.lf {
            if self.rho != 0.0 {
                let (ml, vl) = lf.predict_scaled(&g);
                let ls = lf.standardizer();
                let ratio = ls.scale / s.scale;
                for i in 0..g.len() {
                    mean[i] += self.rho * s.forward(ls.inverse(ml[i]));
                    var[i] += (self.rho * ratio).powi(2) * vl[i];
                }
            }
        }
        Ok((
            mean.into_iter().map(|m| s.inverse(m)).collect(),
            var.into_iter().map(|v| s.inverse_variance(v)).collect(),
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct Bundle {
    schema: String,
    output: Output,
    rho: f64,
    map: AffineMap,
    hf_scaler: InputScaler,
    standardizer: Standardizer,
    lf: Option<GpSnapshot>,
    discrepancy: GpSnapshot,
}

impl Serialize for HetMfgpModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Bundle {
            schema: SCHEMA.into(),
            output: self.output,
            rho: self.rho,
            map: self.map.clone(),
            hf_scaler: self.hf_scaler.clone(),
            standardizer: self.standardizer,
            lf: self.lf.as_ref().map(GpModel::to_snapshot),
            discrepancy: self.discrepancy.to_snapshot(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HetMfgpModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let b = Bundle::deserialize(d)?;
        if b.schema != SCHEMA {
            return Err(D::Error::custom(format!(
                "unsupported model schema {:?}, expected {SCHEMA:?}",
                b.schema
            )));
        }
        let lf =
            b.lf.map(GpModel::from_snapshot)
                .transpose()
                .map_err(D::Error::custom)?;
        let disc = GpModel::from_snapshot(b.discrepancy).map_err(D::Error::custom)?;
        HetMfgpModel::from_parts(
            b.output,
            lf,
            disc,
            b.rho,
            b.map,
            b.hf_scaler,
            b.standardizer,
        )
        .map_err(D::Error::custom)
    }
}

fn check_fidelity(d: &Dataset, want: Fidelity) -> Result<()> {
    if d.fidelity != want {
        return Err(Error::invalid(format!(
            "expected a {want} dataset, got {}",
            d.fidelity
        )));
    }
    d.validate()
}

/// Fits the LF GP on an LF dataset (inputs scaled by its window).
pub fn fit_lf_gp(lf: &Dataset, output: Output, config: &GpConfig) -> Result<GpModel> {
    check_fidelity(lf, Fidelity::Lf)?;
    fit_gp(
        &lf.inputs,
        lf.output(output),
        InputScaler::from_window(&lf.provenance.window),
        config,
    )
}

/// Second training stage given an already fitted LF GP (or none).
pub fn train_mfgp_with_surrogate(
    lf_gp: Option<GpModel>,
    hf: &Dataset,
    output: Output,
    map: &AffineMap,
    config: &MfgpConfig,
) -> Result<HetMfgpModel> {
    check_fidelity(hf, Fidelity::Hf)?;
    if hf.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least two HF rows, got {}",
            hf.len()
        )));
    }
    if map.output != output {
        return Err(Error::invalid(format!(
            "map was fitted for {}, not {output}",
            map.output
        )));
    }
    let hf_scaler = InputScaler::from_window(&hf.provenance.window);
    let y = hf.output(output);
    let standardizer = match &lf_gp {
        Some(lf) => Standardizer {
            mean: 0.0,
            scale: lf.standardizer().scale,
        },
        None => Standardizer::fit(y),
    };
    let scaled: Vec<Vec<f64>> = hf.inputs.iter().map(|r| hf_scaler.scale(r)).collect();
    let g = apply_map(map, &scaled)?;
    let y_std: Vec<f64> = y.iter().map(|v| standardizer.forward(*v)).collect();
    let m: Vec<f64> = match &lf_gp {
        Some(lf) => g
            .iter()
            .map(|p| standardizer.forward(lf.standardizer().inverse(lf.mean_scaled(p))))
            .collect(),
        None => vec![0.0; g.len()],
    };
    let rho_bounds = if lf_gp.is_some() {
        config.rho_bounds
    } else {
        (0.0, 0.0)
    };
    let (discrepancy, rho) = fit_profiled(&g, &y_std, &m, &config.discrepancy_gp, rho_bounds)?;
    HetMfgpModel::from_parts(
        output,
        lf_gp,
        discrepancy,
        rho,
        map.clone(),
        hf_scaler,
        standardizer,
    )
}

/// Recursive two-stage training with a given map. `lf = None` or an empty
/// LF dataset gives the single-fidelity model with ρ = 0.
pub fn train_mfgp(
    lf: Option<&Dataset>,
    hf: &Dataset,
    output: Output,
    map: &AffineMap,
    config: &MfgpConfig,
) -> Result<HetMfgpModel> {
    let lf_gp = match lf {
        Some(d) if !d.is_empty() => Some(fit_lf_gp(d, output, &config.lf_gp)?),
        _ => None,
    };
    train_mfgp_with_surrogate(lf_gp, hf, output, map, config)
}

/// The full chain: LF GP, input-mapping calibration against it, then the
/// co-kriging fit. Without LF data the map stays at its nominal value.
pub fn fit_het_mfgp(
    lf: Option<&Dataset>,
    hf: &Dataset,
    output: Output,
    imc: &ImcConfig,
    config: &MfgpConfig,
) -> Result<(HetMfgpModel, Option<ImcResult>)> {
    check_fidelity(hf, Fidelity::Hf)?;
    let lf_gp = match lf {
        Some(d) if !d.is_empty() => Some(fit_lf_gp(d, output, &config.lf_gp)?),
        _ => None,
    };
    let (map, imc_result) = match &lf_gp {
        Some(gp) => {
            let hf_scaler = InputScaler::from_window(&hf.provenance.window);
            let data = ImcData::new(&hf.inputs, hf.output(output), &hf_scaler, gp)?;
            let r = fit_imc(&data, gp, output, imc)?;
            (r.map.clone(), Some(r))
        }
        None => {
            let lf_dim = Fidelity::Lf.input_dim();
            let nominal = imc
                .nominal
                .clone()
                .map(|m| AffineMap { output, ..m })
                .unwrap_or_else(|| AffineMap::selector(lf_dim, hf.provenance.window.dim(), output));
            (nominal, None)
        }
    };
    let model = train_mfgp_with_surrogate(lf_gp, hf, output, &map, config)?;
    Ok((model, imc_result))
}

/// Single-fidelity baseline: a GP on the raw HF inputs over `window`.
pub fn fit_hf_gp(
    hf: &Dataset,
    output: Output,
    window: &ParameterWindow,
    config: &GpConfig,
) -> Result<GpModel> {
    check_fidelity(hf, Fidelity::Hf)?;
    fit_gp(
        &hf.inputs,
        hf.output(output),
        InputScaler::from_window(window),
        config,
    )
}
