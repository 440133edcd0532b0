//! Powder-coupled moving-source model (five process inputs).
//!
//! The steady temperature rise is the superposition of moving point sources
//! over the beam disk `ξ² + η² ≤ r_L²`:
//!
//! ```text
//! ΔT = 1/(2π k) ∬ [α_L I_A(ξ,η) + I_p(ξ,η)] · exp(−v (x − ξ + R) / (2a)) / R  dη dξ
//! R  = √((x − ξ)² + (y − η)² + z²)
//! ```
//!
//! `I_A` is the beam after attenuation by the powder stream and `I_p` the
//! energy carried by the heated powder. Both are Gaussian. The attenuation
//! exponent is `c₁ ṁ H / g_sh`: more powder and a longer stand-off absorb
//! more of the beam, faster carrier gas dilutes the stream. The powder
//! returns a fraction `c₂` of the power it intercepts to the pool; since
//! `c₂ > α_L`, stronger attenuation means slightly more heat in the part.
//!
//! The disk integral is evaluated in polar coordinates centred on the field
//! point's surface projection. There `dA = r dr dθ` and `R = √(r² + z²)`, so
//! the kernel carries the bounded factor `r / R` and points on the surface
//! inside the beam need no special treatment.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{check_nodes, HfInput, LaserParams, MaterialProperties, ThermalModel};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowderCoupling {
    /// c₁ in m²/kg; multiplies ṁ·H/g_sh.
    pub attenuation_coefficient: f64,
    /// c₂, fraction of intercepted beam power returned by the powder.
    pub powder_efficiency: f64,
    /// 1/e² radius of the powder energy distribution relative to r_L.
    pub powder_radius_factor: f64,
}

impl Default for PowderCoupling {
    fn default() -> Self {
        Self {
            attenuation_coefficient: 7.0,
            powder_efficiency: 0.45,
            powder_radius_factor: 1.0,
        }
    }
}

impl PowderCoupling {
    pub fn attenuation_exponent(&self, input: &HfInput) -> f64 {
        self.attenuation_coefficient * input.powder_flow * input.nozzle_height / input.gas_flow
    }

    fn validate(&self) -> Result<()> {
        if !(self.attenuation_coefficient >= 0.0
            && self.powder_efficiency >= 0.0
            && self.powder_radius_factor > 0.0)
        {
            return Err(Error::invalid(format!("invalid powder coupling {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PowderFedModel {
    material: MaterialProperties,
    laser: LaserParams,
    coupling: PowderCoupling,
    rule: GaussLegendre,
    // nodes of the full-turn angular rule, cos and sin precomputed
    full_turn: Vec<(f64, f64, f64)>,
}

impl PowderFedModel {
    pub fn new(
        material: MaterialProperties,
        laser: LaserParams,
        coupling: PowderCoupling,
        nodes: usize,
    ) -> Result<Self> {
        material.validate()?;
        laser.validate()?;
        coupling.validate()?;
        check_nodes(nodes)?;
        let rule = GaussLegendre::new(nodes)?;
        let full_turn = rule
            .on_interval(0.0, 2.0 * PI)
            .map(|(th, w)| (th.cos(), th.sin(), w))
            .collect();
        Ok(Self {
            material,
            laser,
            coupling,
            rule,
            full_turn,
        })
    }

    pub fn laser(&self) -> &LaserParams {
        &self.laser
    }

    pub fn coupling(&self) -> &PowderCoupling {
        &self.coupling
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.rule.len()
    }

    /// Beam power reaching the substrate after absorption, plus the powder
    /// contribution: the effective heat input in W.
    pub fn absorbed_power(&self, input: &HfInput) -> f64 {
        let att = (-self.coupling.attenuation_exponent(input)).exp();
        input.laser_power
            * (self.laser.absorptivity * att + self.coupling.powder_efficiency * (1.0 - att))
    }

    fn surface_flux(&self, input: &HfInput) -> Flux {
        let r_l = self.laser.beam_radius;
        let att = (-self.coupling.attenuation_exponent(input)).exp();
        let beam_power = input.laser_power * att;
        let powder_power = self.coupling.powder_efficiency * input.laser_power * (1.0 - att);
        let r_p = self.coupling.powder_radius_factor * r_l;
        let beam_peak = self.laser.absorptivity * 2.0 * beam_power / (PI * r_l * r_l);
        let powder_peak = 2.0 * powder_power / (PI * r_p * r_p);
        Flux {
            beam_peak,
            beam_decay: 2.0 / (r_l * r_l),
            powder_peak,
            powder_decay: 2.0 / (r_p * r_p),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Flux {
    beam_peak: f64,
    beam_decay: f64,
    powder_peak: f64,
    powder_decay: f64,
}

impl Flux {
    /// q(s²)·exp(extra), folding both Gaussians into as few exps as possible.
    #[inline]
    fn weighted(&self, s2: f64, extra: f64) -> f64 {
        if self.beam_decay == self.powder_decay {
            (self.beam_peak + self.powder_peak) * (extra - self.beam_decay * s2).exp()
        } else {
            self.beam_peak * (extra - self.beam_decay * s2).exp()
                + self.powder_peak * (extra - self.powder_decay * s2).exp()
        }
    }
}

impl ThermalModel for PowderFedModel {
    type Input = HfInput;

    fn temperature(&self, point: [f64; 3], input: &HfInput) -> Result<f64> {
        let [x0, y0, z0] = point;
        if z0 > 0.0 {
            return Err(Error::invalid(format!(
                "field point z = {z0} lies above the substrate surface"
            )));
        }
        if !(input.gas_flow > 0.0) {
            return Err(Error::invalid("carrier gas flow must be positive"));
        }
        let m = &self.material;
        if input.laser_power == 0.0 {
            return Ok(m.ambient_temperature);
        }
        let flux = self.surface_flux(input);
        let v_over_2a = input.scan_velocity / (2.0 * m.diffusivity);
        let r_l = self.laser.beam_radius;
        let z2 = z0 * z0;

        // contribution of a ray leaving the field point in direction (c, s)
        // between radial distances r1 < r2
        let ray = |c: f64, s: f64, r1: f64, r2: f64| -> f64 {
            let half = 0.5 * (r2 - r1);
            let mid = 0.5 * (r2 + r1);
            let mut acc = 0.0;
            for (&t, &w) in self.rule.nodes().iter().zip(self.rule.weights()) {
                let r = mid + half * t;
                let xi = x0 + r * c;
                let eta = y0 + r * s;
                let big_r = (r * r + z2).sqrt();
                // x − ξ = −r c
                let kernel_exp = -v_over_2a * (big_r - r * c);
                acc += w * flux.weighted(xi * xi + eta * eta, kernel_exp) * (r / big_r);
            }
            acc * half
        };

        let d2 = x0 * x0 + y0 * y0;
        let d = d2.sqrt();
        let integral = if d < r_l {
            self.full_turn
                .iter()
                .map(|&(c, s, w)| {
                    let proj = x0 * c + y0 * s;
                    let r_max = -proj + (proj * proj + r_l * r_l - d2).sqrt();
                    w * ray(c, s, 0.0, r_max)
                })
                .sum::<f64>()
        } else {
            // rays within the cone tangent to the disk; parametrise the
            // angular offset by sin(δθ) = (r_L / d) sin ψ so chord lengths
            // stay smooth up to the tangent directions
            let toward = (-y0).atan2(-x0);
            let ratio = r_l / d;
            self.rule
                .on_interval(-FRAC_PI_2, FRAC_PI_2)
                .map(|(psi, w)| {
                    let sin_off = ratio * psi.sin();
                    let off = sin_off.asin();
                    let jac = ratio * psi.cos() / off.cos();
                    let th = toward + off;
                    let chord_half = r_l * psi.cos();
                    let mid = d * off.cos();
                    w * jac * ray(th.cos(), th.sin(), mid - chord_half, mid + chord_half)
                })
                .sum::<f64>()
        };

        let rise = integral / (2.0 * PI * m.conductivity);
        if !rise.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite HF integrand at ({x0:e}, {y0:e}, {z0:e}) m"
            )));
        }
        Ok(m.ambient_temperature + rise)
    }

    fn material(&self) -> &MaterialProperties {
        &self.material
    }
}

/// One-shot evaluation with the default powder coupling.
pub fn hf_temperature(
    point: [f64; 3],
    input: &HfInput,
    material: &MaterialProperties,
    laser: &LaserParams,
    nodes: usize,
) -> Result<f64> {
    PowderFedModel::new(
        material.clone(),
        laser.clone(),
        PowderCoupling::default(),
        nodes,
    )?
    .temperature(point, input)
}
