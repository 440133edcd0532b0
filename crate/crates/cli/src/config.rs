use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use hetmfgp::doe::ParameterWindow;
use hetmfgp::gp::GpConfig;
use hetmfgp::imc::ImcConfig;
use hetmfgp::mfgp::MfgpConfig;
use hetmfgp::thermal::{
    CalibrationBounds, GridSpec, LaserParams, MaterialProperties, PowderCoupling,
};
use hetmfgp::Fidelity;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything a run depends on. Stored as one JSON document; every field
/// except `schema_version` may be omitted and takes its default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// Five-dimensional HF window; the LF window is its first two dimensions.
    pub window: ParameterWindow,
    pub material: MaterialProperties,
    pub laser: LaserParams,
    pub coupling: PowderCoupling,
    pub grid: GridSpec,
    pub quadrature_nodes: usize,
    pub n_hf: usize,
    pub n_lf: usize,
    pub n_test: usize,
    pub lambda: f64,
    pub seed: u64,
    pub repeats: usize,
    pub calibration: CalibrationSettings,
    pub gp: GpSettings,
    pub sobol: SobolSettings,
    pub ellipse: EllipseSettings,
    pub sweep: SweepSettings,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    /// Factorial levels in P and v; the other inputs sit at their midpoints.
    pub levels: [usize; 2],
    pub bounds: CalibrationBounds,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            levels: [3, 3],
            bounds: CalibrationBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSettings {
    pub restarts: usize,
    pub max_iterations: Option<usize>,
    /// Upper bound of ρ's search interval; the interval is symmetric.
    pub rho_limit: f64,
    pub imc_max_iterations: usize,
}

impl Default for GpSettings {
    fn default() -> Self {
        Self {
            restarts: GpConfig::default().restarts,
            max_iterations: None,
            rho_limit: MfgpConfig::default().rho_bounds.1,
            imc_max_iterations: ImcConfig::default().max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolSettings {
    pub samples: usize,
}

impl Default for SobolSettings {
    fn default() -> Self {
        Self { samples: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipseSettings {
    /// HF process point in window units; the window midpoint when absent.
    pub point: Option<Vec<f64>>,
    pub resolution: usize,
}

impl Default for EllipseSettings {
    fn default() -> Self {
        Self {
            point: None,
            resolution: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub n_hf: Vec<usize>,
    pub n_lf: Vec<usize>,
    pub lambda: Vec<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            n_hf: vec![5, 10, 20, 30],
            n_lf: vec![0, 10, 20, 30, 40],
            lambda: vec![0.01],
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            window: ParameterWindow::hf(),
            material: MaterialProperties::in625(),
            laser: LaserParams::default(),
            coupling: PowderCoupling::default(),
            grid: GridSpec::default(),
            quadrature_nodes: 64,
            n_hf: 20,
            n_lf: 20,
            n_test: 100,
            lambda: 0.01,
            seed: 42,
            repeats: 10,
            calibration: CalibrationSettings::default(),
            gp: GpSettings::default(),
            sobol: SobolSettings::default(),
            ellipse: EllipseSettings::default(),
            sweep: SweepSettings::default(),
            output_dir: PathBuf::from("run"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()
            .with_context(|| format!("validating config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        self.window.validate()?;
        ensure!(
            self.window.dim() == Fidelity::Hf.input_dim(),
            "window must have {} dimensions, got {}",
            Fidelity::Hf.input_dim(),
            self.window.dim()
        );
        self.material.validate()?;
        self.laser.validate()?;
        self.grid.validate()?;
        ensure!(
            self.quadrature_nodes >= 2,
            "quadrature_nodes must be at least 2"
        );
        ensure!(self.n_hf >= 2, "n_hf must be at least 2, got {}", self.n_hf);
        ensure!(self.n_lf != 1, "n_lf must be 0 or at least 2");
        ensure!(self.n_test >= 2, "n_test must be at least 2");
        ensure!(
            self.lambda.is_finite() && self.lambda >= 0.0,
            "lambda must be finite and non-negative"
        );
        ensure!(self.repeats >= 1, "repeats must be at least 1");
        ensure!(
            self.calibration.levels.iter().all(|&l| l >= 2),
            "calibration needs at least two levels per input"
        );
        ensure!(self.gp.restarts >= 1, "gp.restarts must be at least 1");
        ensure!(
            self.gp.rho_limit.is_finite() && self.gp.rho_limit > 0.0,
            "gp.rho_limit must be positive"
        );
        ensure!(
            self.sobol.samples >= 256 && self.sobol.samples.is_power_of_two(),
            "sobol.samples must be a power of two of at least 256"
        );
        ensure!(
            self.ellipse.resolution >= 3,
            "ellipse.resolution must be at least 3"
        );
        if let Some(p) = &self.ellipse.point {
            ensure!(
                self.window.contains(p),
                "ellipse.point {p:?} lies outside the window"
            );
        }
        ensure!(
            !self.sweep.n_hf.is_empty()
                && !self.sweep.n_lf.is_empty()
                && !self.sweep.lambda.is_empty(),
            "sweep lists must be non-empty"
        );
        ensure!(
            self.sweep.n_hf.iter().all(|&n| n >= 2),
            "sweep n_hf entries must be at least 2"
        );
        ensure!(
            self.sweep.n_lf.iter().all(|&n| n != 1),
            "sweep n_lf entries must be 0 or at least 2"
        );
        ensure!(
            self.sweep.lambda.iter().all(|l| l.is_finite() && *l >= 0.0),
            "sweep lambda entries must be finite and non-negative"
        );
        Ok(())
    }

    pub fn lf_window(&self) -> ParameterWindow {
        self.window
            .leading(Fidelity::Lf.input_dim())
            .expect("validated window")
    }

    pub fn gp_config(&self, seed: u64) -> GpConfig {
        GpConfig {
            restarts: self.gp.restarts,
            max_iterations: self.gp.max_iterations,
            ..GpConfig::default()
        }
        .with_seed(seed)
    }

    pub fn mfgp_config(&self, seed: u64) -> MfgpConfig {
        let mut c = MfgpConfig {
            rho_bounds: (-self.gp.rho_limit, self.gp.rho_limit),
            ..MfgpConfig::default()
        }
        .with_seed(seed);
        for g in [&mut c.lf_gp, &mut c.discrepancy_gp] {
            g.restarts = self.gp.restarts;
            g.max_iterations = self.gp.max_iterations;
        }
        c
    }

    pub fn imc_config(&self, lambda: f64, seed: u64) -> ImcConfig {
        ImcConfig {
            lambda,
            seed,
            max_iterations: self.gp.imc_max_iterations,
            ..ImcConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        let back: PipelineConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!((c.n_hf, c.n_lf, c.n_test, c.repeats), (20, 20, 100, 10));
        assert_eq!(c.lambda, 0.01);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"schema_version": 1, "n_hf": 5}"#).unwrap();
        assert_eq!(c.n_hf, 5);
        assert_eq!(c.n_lf, 20);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            PipelineConfig {
                schema_version: 2,
                ..PipelineConfig::default()
            },
            PipelineConfig {
                n_hf: 1,
                ..PipelineConfig::default()
            },
            PipelineConfig {
                repeats: 0,
                ..PipelineConfig::default()
            },
            PipelineConfig {
                lambda: -1.0,
                ..PipelineConfig::default()
            },
            PipelineConfig {
                window: ParameterWindow::lf(),
                ..PipelineConfig::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"n_hff": 3}"#).is_err());
    }
}
