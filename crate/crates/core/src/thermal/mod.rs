//! Analytical melt-pool thermal models and isotherm extraction.
//!
//! Everything in here works in SI units. [`units`] converts from the process
//! window units (W, mm/s, g/min, dL/min, mm) used by designs and datasets.

mod calibrate;
mod geometry;
mod hf;
mod lf;

pub use calibrate::{calibrate_lf, CalibrationBounds, LfCalibration};
pub use geometry::{melt_pool_geometry, temperature_plane, GridSpec, Plane, TemperatureGrid};
pub use hf::{hf_temperature, PowderCoupling, PowderFedModel};
pub use lf::{lf_temperature, EagarTsai, Horizon};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conversion factors from process-window units to SI.
pub mod units {
    pub const MM: f64 = 1e-3;
    pub const MM_PER_S: f64 = 1e-3;
    /// g/min to kg/s
    pub const G_PER_MIN: f64 = 1e-3 / 60.0;
    /// dL/min to m³/s
    pub const DL_PER_MIN: f64 = 1e-4 / 60.0;
}

/// A model that maps a field point in the source-attached frame to a
/// temperature. `z` points out of the substrate, so the part is `z <= 0`.
pub trait ThermalModel: Sync {
    type Input: Sync;

    fn temperature(&self, point: [f64; 3], input: &Self::Input) -> Result<f64>;

    fn material(&self) -> &MaterialProperties;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialProperties {
    /// kg/m³
    pub density: f64,
    /// J/(kg·K)
    pub specific_heat: f64,
    /// m²/s
    pub diffusivity: f64,
    /// W/(m·K)
    pub conductivity: f64,
    /// K
    pub liquidus_temperature: f64,
    /// K
    pub ambient_temperature: f64,
}

impl MaterialProperties {
    /// IN625 with properties representative of the near-liquidus range.
    pub fn in625() -> Self {
        Self {
            density: 8440.0,
            specific_heat: 600.0,
            diffusivity: 3.95e-6,
            conductivity: 20.0,
            liquidus_temperature: 1623.0,
            ambient_temperature: 298.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("density", self.density),
            ("specific_heat", self.specific_heat),
            ("diffusivity", self.diffusivity),
            ("conductivity", self.conductivity),
            ("liquidus_temperature", self.liquidus_temperature),
            ("ambient_temperature", self.ambient_temperature),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "material {name} must be positive, got {v}"
                )));
            }
        }
        if self.liquidus_temperature <= self.ambient_temperature {
            return Err(Error::invalid(
                "liquidus temperature must exceed ambient temperature",
            ));
        }
        let implied = self.conductivity / (self.density * self.specific_heat);
        if ((self.diffusivity - implied) / implied).abs() > 0.01 {
            log::warn!(
                "diffusivity {:.4e} differs from k/(rho*c) = {:.4e} by more than 1%",
                self.diffusivity,
                implied
            );
        }
        Ok(())
    }
}

impl Default for MaterialProperties {
    fn default() -> Self {
        Self::in625()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    /// r_L, m. Shared by both fidelities.
    pub beam_radius: f64,
    /// α_L in (0, 1].
    pub absorptivity: f64,
    /// φ, with the Gaussian standard deviation σ_L = φ·r_L.
    pub sigma_factor: f64,
}

impl LaserParams {
    pub fn sigma(&self) -> f64 {
        self.sigma_factor * self.beam_radius
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beam_radius.is_finite() && self.beam_radius > 0.0) {
            return Err(Error::invalid(format!(
                "beam radius must be positive, got {}",
                self.beam_radius
            )));
        }
        if !(self.absorptivity > 0.0 && self.absorptivity <= 1.0) {
            return Err(Error::invalid(format!(
                "absorptivity must lie in (0, 1], got {}",
                self.absorptivity
            )));
        }
        if !(self.sigma_factor.is_finite() && self.sigma_factor > 0.0) {
            return Err(Error::invalid(format!(
                "sigma factor must be positive, got {}",
                self.sigma_factor
            )));
        }
        Ok(())
    }
}

impl Default for LaserParams {
    fn default() -> Self {
        Self {
            beam_radius: 1.0e-3,
            absorptivity: 0.35,
            sigma_factor: 0.5,
        }
    }
}

/// Five-parameter process point of the high-fidelity model (SI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfInput {
    /// W
    pub laser_power: f64,
    /// m/s
    pub scan_velocity: f64,
    /// kg/s
    pub powder_flow: f64,
    /// m³/s
    pub gas_flow: f64,
    /// m
    pub nozzle_height: f64,
}

impl HfInput {
    /// From `[P (W), v (mm/s), ṁ (g/min), g_sh (dL/min), H (mm)]`.
    pub fn from_window_units(x: &[f64]) -> Result<Self> {
        if x.len() != 5 {
            return Err(Error::invalid(format!(
                "HF input needs 5 values, got {}",
                x.len()
            )));
        }
        Ok(Self {
            laser_power: x[0],
            scan_velocity: x[1] * units::MM_PER_S,
            powder_flow: x[2] * units::G_PER_MIN,
            gas_flow: x[3] * units::DL_PER_MIN,
            nozzle_height: x[4] * units::MM,
        })
    }

    pub fn to_window_units(&self) -> [f64; 5] {
        [
            self.laser_power,
            self.scan_velocity / units::MM_PER_S,
            self.powder_flow / units::G_PER_MIN,
            self.gas_flow / units::DL_PER_MIN,
            self.nozzle_height / units::MM,
        ]
    }

    pub fn lf_part(&self) -> LfInput {
        LfInput {
            laser_power: self.laser_power,
            scan_velocity: self.scan_velocity,
        }
    }
}

/// Two-parameter process point of the low-fidelity model (SI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfInput {
    /// W
    pub laser_power: f64,
    /// m/s
    pub scan_velocity: f64,
}

impl LfInput {
    /// From `[P (W), v (mm/s)]`; extra trailing values are ignored so HF rows
    /// can be passed directly.
    pub fn from_window_units(x: &[f64]) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::invalid(format!(
                "LF input needs 2 values, got {}",
                x.len()
            )));
        }
        Ok(Self {
            laser_power: x[0],
            scan_velocity: x[1] * units::MM_PER_S,
        })
    }

    pub fn to_window_units(&self) -> [f64; 2] {
        [self.laser_power, self.scan_velocity / units::MM_PER_S]
    }
}

/// Depth δ and full width ω of the region above liquidus, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeltPoolGeometry {
    pub depth: f64,
    pub width: f64,
}

impl MeltPoolGeometry {
    pub fn get(&self, output: crate::Output) -> f64 {
        match output {
            crate::Output::Depth => self.depth,
            crate::Output::Width => self.width,
        }
    }
}

pub(crate) fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < 8 {
        return Err(Error::invalid(format!(
            "quadrature needs at least 8 nodes, got {nodes}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in625_is_consistent() {
        let m = MaterialProperties::in625();
        m.validate().unwrap();
        let implied = m.conductivity / (m.density * m.specific_heat);
        assert!(((m.diffusivity - implied) / implied).abs() < 0.01);
    }

    #[test]
    fn material_rejects_inverted_temperatures() {
        let mut m = MaterialProperties::in625();
        m.liquidus_temperature = 200.0;
        assert!(m.validate().is_err());
        m = MaterialProperties::in625();
        m.density = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn laser_bounds() {
        let mut l = LaserParams::default();
        l.validate().unwrap();
        l.absorptivity = 1.2;
        assert!(l.validate().is_err());
        l.absorptivity = 1.0;
        l.validate().unwrap();
        l.sigma_factor = -1.0;
        assert!(l.validate().is_err());
    }

    #[test]
    fn window_unit_round_trip() {
        let x = [850.0, 7.5, 5.0, 3.5, 5.0];
        let hf = HfInput::from_window_units(&x).unwrap();
        assert!((hf.scan_velocity - 7.5e-3).abs() < 1e-15);
        assert!((hf.powder_flow - 5.0e-3 / 60.0).abs() < 1e-18);
        let back = hf.to_window_units();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12 * b.abs());
        }
        assert!(HfInput::from_window_units(&x[..4]).is_err());
        assert_eq!(LfInput::from_window_units(&x).unwrap(), hf.lf_part());
    }
}
