//! Designs over the process window and the datasets evaluated on them.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::{
    melt_pool_geometry, EagarTsai, GridSpec, HfInput, LfInput, MeltPoolGeometry, PowderFedModel,
    ThermalModel,
};
use crate::util::{content_hash, read_to_string, write_atomic};
use crate::{Fidelity, Output};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDim {
    pub name: String,
    pub unit: String,
    pub lower: f64,
    pub upper: f64,
}

/// Box of admissible process parameters, in window units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterWindow {
    dims: Vec<WindowDim>,
}

impl ParameterWindow {
    pub fn new(dims: Vec<WindowDim>) -> Result<Self> {
        let w = Self { dims };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::invalid("parameter window has no dimensions"));
        }
        for (i, d) in self.dims.iter().enumerate() {
            if !(d.lower < d.upper && d.lower.is_finite() && d.upper.is_finite()) {
                return Err(Error::invalid(format!(
                    "window dimension {} needs lower < upper, got [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
            if self.dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::invalid(format!(
                    "duplicate window dimension {}",
                    d.name
                )));
            }
        }
        Ok(())
    }

    /// The five-input window, ordered `P, v, mdot, gsh, H`.
    pub fn hf() -> Self {
        let dim = |name: &str, unit: &str, lower, upper| WindowDim {
            name: name.into(),
            unit: unit.into(),
            lower,
            upper,
        };
        Self {
            dims: vec![
                dim("P", "W", 700.0, 1000.0),
                dim("v", "mm/s", 5.0, 10.0),
                dim("mdot", "g/min", 3.0, 7.0),
                dim("gsh", "dL/min", 2.0, 5.0),
                dim("H", "mm", 3.0, 7.0),
            ],
        }
    }

    /// The two shared inputs `P, v`.
    pub fn lf() -> Self {
        Self {
            dims: Self::hf().dims[..2].to_vec(),
        }
    }

    pub fn for_fidelity(fidelity: Fidelity) -> Self {
        match fidelity {
            Fidelity::Lf => Self::lf(),
            Fidelity::Hf => Self::hf(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[WindowDim] {
        &self.dims
    }

    pub fn names(&self) -> Vec<&str> {
        self.dims.iter().map(|d| d.name.as_str()).collect()
    }

    /// The first `n` dimensions.
    pub fn leading(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.dim() {
            return Err(Error::invalid(format!(
                "cannot take {n} of {} window dimensions",
                self.dim()
            )));
        }
        Ok(Self {
            dims: self.dims[..n].to_vec(),
        })
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| 0.5 * (d.lower + d.upper))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .dims
                .iter()
                .zip(x)
                .all(|(d, &v)| d.lower <= v && v <= d.upper)
    }

    /// Window units to the unit cube (no clamping).
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(x)
            .map(|(d, &v)| (v - d.lower) / (d.upper - d.lower))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(u)
            .map(|(d, &v)| d.lower + v * (d.upper - d.lower))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    Lhs,
    Factorial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub points: Vec<Vec<f64>>,
    pub window: ParameterWindow,
    pub seed: Option<u64>,
    pub kind: DesignKind,
}

impl Design {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }
}

/// `n` points of a jittered Latin hypercube on `[0, 1]^d`: every column
/// visits each of the `n` bins exactly once.
pub fn lhs_unit<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (row, &bin) in points.iter_mut().zip(&perm) {
            row[j] = (bin as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

pub fn lhs_sample(window: &ParameterWindow, n: usize, seed: u64) -> Result<Design> {
    window.validate()?;
    if n == 0 {
        return Err(Error::invalid("LHS needs at least one point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = lhs_unit(n, window.dim(), &mut rng)
        .iter()
        .map(|u| window.from_unit(u))
        .collect();
    Ok(Design {
        points,
        window: window.clone(),
        seed: Some(seed),
        kind: DesignKind::Lhs,
    })
}

/// Evenly spaced levels per dimension, endpoints included; a single level
/// sits at the midpoint. The last dimension varies fastest.
pub fn full_factorial(window: &ParameterWindow, levels: &[usize]) -> Result<Design> {
    window.validate()?;
    if levels.len() != window.dim() {
        return Err(Error::invalid(format!(
            "{} level counts for a {}-dimensional window",
            levels.len(),
            window.dim()
        )));
    }
    if levels.contains(&0) {
        return Err(Error::invalid("every dimension needs at least one level"));
    }
    let axes: Vec<Vec<f64>> = window
        .dims
        .iter()
        .zip(levels)
        .map(|(d, &l)| {
            if l == 1 {
                vec![0.5 * (d.lower + d.upper)]
            } else {
                (0..l)
                    .map(|k| d.lower + (d.upper - d.lower) * k as f64 / (l - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(Design {
        points,
        window: window.clone(),
        seed: None,
        kind: DesignKind::Factorial,
    })
}

/// Fixed stage offsets for deriving sub-seeds from a pipeline's root seed.
pub mod seeds {
    pub const LF_TRAIN: u64 = 1;
    pub const HF_TRAIN: u64 = 2;
    pub const TEST: u64 = 3;
    pub const GP: u64 = 4;
    pub const IMC: u64 = 5;
    pub const MFGP: u64 = 6;
    pub const SOBOL: u64 = 7;

    /// Sub-seed for `stage` in seed repeat `repeat`.
    pub fn derive(root: u64, stage: u64, repeat: u64) -> u64 {
        root.wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15))
            .wrapping_add(repeat.wrapping_mul(0xD1B5_4A32_D192_ED03))
    }
}

/// A thermal model ready to be evaluated on window-unit design rows.
#[derive(Debug, Clone)]
pub enum Simulator {
    Lf(EagarTsai),
    Hf(PowderFedModel),
}

impl Simulator {
    pub fn fidelity(&self) -> Fidelity {
        match self {
            Simulator::Lf(_) => Fidelity::Lf,
            Simulator::Hf(_) => Fidelity::Hf,
        }
    }

    pub fn geometry(&self, x: &[f64], grid: &GridSpec) -> Result<MeltPoolGeometry> {
        match self {
            Simulator::Lf(m) => melt_pool_geometry(m, &LfInput::from_window_units(x)?, grid),
            Simulator::Hf(m) => melt_pool_geometry(m, &HfInput::from_window_units(x)?, grid),
        }
    }

    /// Hash of everything that influences the simulated pools.
    pub fn config_hash(&self, grid: &GridSpec) -> String {
        let desc = match self {
            Simulator::Lf(m) => serde_json::json!({
                "model": "LF",
                "material": m.material(),
                "laser": m.laser(),
                "horizon": m.horizon(),
                "nodes": m.quadrature_nodes(),
                "grid": grid,
            }),
            Simulator::Hf(m) => serde_json::json!({
                "model": "HF",
                "material": m.material(),
                "laser": m.laser(),
                "coupling": m.coupling(),
                "nodes": m.quadrature_nodes(),
                "grid": grid,
            }),
        };
        content_hash(&desc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub window: ParameterWindow,
    pub seed: Option<u64>,
    pub design: DesignKind,
    pub config_hash: String,
}

/// Evaluated design: inputs in window units, outputs in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub fidelity: Fidelity,
    pub inputs: Vec<Vec<f64>>,
    pub depth: Vec<f64>,
    pub width: Vec<f64>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(
        fidelity: Fidelity,
        inputs: Vec<Vec<f64>>,
        depth: Vec<f64>,
        width: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        let d = Self {
            fidelity,
            inputs,
            depth,
            width,
            provenance,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.inputs.len();
        if self.depth.len() != n || self.width.len() != n {
            return Err(Error::invalid(format!(
                "{n} input rows but {} depths and {} widths",
                self.depth.len(),
                self.width.len()
            )));
        }
        let d = self.fidelity.input_dim();
        if let Some((i, row)) = self.inputs.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::invalid(format!(
                "{} dataset row {i} has {} inputs, expected {d}",
                self.fidelity,
                row.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn output(&self, output: Output) -> &[f64] {
        match output {
            Output::Depth => &self.depth,
            Output::Width => &self.width,
        }
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            inputs: self.inputs[..n].to_vec(),
            depth: self.depth[..n].to_vec(),
            width: self.width[..n].to_vec(),
            ..self.clone()
        }
    }

    fn header(&self) -> Vec<&'static str> {
        let mut h = match self.fidelity {
            Fidelity::Lf => vec!["P", "v"],
            Fidelity::Hf => vec!["P", "v", "mdot", "gsh", "H"],
        };
        h.extend(["depth", "width"]);
        h
    }

    /// CSV text with 17 significant digits, which round-trips every f64.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for i in 0..self.len() {
            let row: Vec<String> = self.inputs[i]
                .iter()
                .chain([&self.depth[i], &self.width[i]])
                .map(|v| format!("{v:.16e}"))
                .collect();
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("formatted floats are ASCII"))
    }

    /// Path of the provenance sidecar next to a dataset CSV.
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes the CSV and its provenance sidecar, each atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = serde_json::json!({
            "fidelity": self.fidelity,
            "rows": self.len(),
            "provenance": self.provenance,
        });
        write_atomic(
            &Self::sidecar_path(path),
            serde_json::to_string_pretty(&meta)?.as_bytes(),
        )?;
        write_atomic(path, self.to_csv()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let format_err = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let meta: serde_json::Value =
            serde_json::from_str(&read_to_string(&Self::sidecar_path(path))?)?;
        let fidelity: Fidelity = serde_json::from_value(meta["fidelity"].clone())?;
        let provenance: Provenance = serde_json::from_value(meta["provenance"].clone())?;

        let text = read_to_string(path)?;
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let d = fidelity.input_dim();
        let (mut inputs, mut depth, mut width) = (Vec::new(), Vec::new(), Vec::new());
        let mut skeleton = Dataset {
            fidelity,
            inputs: Vec::new(),
            depth: Vec::new(),
            width: Vec::new(),
            provenance,
        };
        if header != skeleton.header() {
            return Err(format_err(format!(
                "unexpected header {header:?} for a {fidelity} dataset"
            )));
        }
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| format_err(format!("row {i}: {e}")))?;
            if vals.len() != d + 2 {
                return Err(format_err(format!(
                    "row {i} has {} fields, expected {}",
                    vals.len(),
                    d + 2
                )));
            }
            inputs.push(vals[..d].to_vec());
            depth.push(vals[d]);
            width.push(vals[d + 1]);
        }
        skeleton.inputs = inputs;
        skeleton.depth = depth;
        skeleton.width = width;
        skeleton.validate()?;
        Ok(skeleton)
    }
}

/// Evaluates every design row; rows run in parallel but keep design order.
pub fn generate_dataset(design: &Design, sim: &Simulator, grid: &GridSpec) -> Result<Dataset> {
    let fidelity = sim.fidelity();
    if design.dim() != fidelity.input_dim() {
        return Err(Error::invalid(format!(
            "{}-dimensional design for a {fidelity} model",
            design.dim()
        )));
    }
    let pools: Vec<MeltPoolGeometry> = design
        .points
        .par_iter()
        .enumerate()
        .map(|(row, x)| {
            sim.geometry(x, grid).map_err(|e| Error::Row {
                row,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Dataset::new(
        fidelity,
        design.points.clone(),
        pools.iter().map(|g| g.depth).collect(),
        pools.iter().map(|g| g.width).collect(),
        Provenance {
            window: design.window.clone(),
            seed: design.seed,
            design: design.kind,
            config_hash: sim.config_hash(grid),
        },
    )
}
