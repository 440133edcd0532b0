//! Staged batch pipeline.
//!
//! Each stage pulls in the stages it depends on and caches what it produces
//! under the output directory. Every artifact has a `.key` file next to it
//! holding a content hash of everything the artifact was computed from; a
//! stage reuses an artifact only when that hash still matches, so editing
//! the config invalidates exactly the affected files. `--force` recomputes
//! the artifacts of the requested stage regardless.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, ensure, Context, Result};
use hetmfgp::analysis::{
    ellipse_boundary, sobol_indices, EllipseBoundary, MetricsReport, SobolIndices,
};
use hetmfgp::doe::{
    full_factorial, generate_dataset, lhs_sample, seeds, Dataset, Design, Simulator,
};
use hetmfgp::gp::{GpModel, InputScaler};
use hetmfgp::imc::{fit_imc, ImcData, ImcResult};
use hetmfgp::mfgp::{fit_hf_gp, fit_lf_gp, train_mfgp_with_surrogate, HetMfgpModel};
use hetmfgp::thermal::{calibrate_lf, EagarTsai, LfCalibration, PowderFedModel};
use hetmfgp::util::{content_hash, read_to_string, write_atomic};
use hetmfgp::{Fidelity, Output};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::PipelineConfig;

pub const OUTPUTS: [Output; 2] = [Output::Depth, Output::Width];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    GenData,
    CalibrateLf,
    FitMap,
    Train,
    Predict,
    Evaluate,
    Sobol,
    Ellipse,
    Sweep,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::CalibrateLf => "calibrate-lf",
            Stage::FitMap => "fit-map",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Evaluate => "evaluate",
            Stage::Sobol => "sobol",
            Stage::Ellipse => "ellipse",
            Stage::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn tagged<T>(stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().with_context(|| format!("stage `{stage}` failed"))
}

/// One point of the data-size / regularisation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n_hf: usize,
    pub n_lf: usize,
    pub lambda: f64,
}

impl Cell {
    /// Directory-safe label. λ plays no role without LF data.
    pub fn tag(&self) -> String {
        if self.n_lf == 0 {
            format!("hf{}_lf0", self.n_hf)
        } else {
            format!("hf{}_lf{}_lam{}", self.n_hf, self.n_lf, self.lambda)
        }
    }
}

/// Predicted means and variances of one output, row-aligned with the query.
pub type OutputPrediction = (Output, Vec<f64>, Vec<f64>);

/// A value together with the content hash it was cached under.
#[derive(Debug, Clone)]
pub struct Keyed<T> {
    pub value: T,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMetrics {
    pub output: Output,
    /// HF-only GP, averaged over repeats.
    pub gp: MetricsReport,
    /// Het-MFGP averaged over repeats; absent without LF data.
    pub het_mfgp: Option<MetricsReport>,
    pub gp_runs: Vec<MetricsReport>,
    pub het_mfgp_runs: Vec<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub cell: Cell,
    pub repeats: usize,
    pub n_test: usize,
    pub outputs: Vec<OutputMetrics>,
}

impl EvaluationReport {
    pub fn for_output(&self, output: Output) -> &OutputMetrics {
        self.outputs
            .iter()
            .find(|o| o.output == output)
            .expect("both outputs evaluated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: Cell,
    pub output: Output,
    /// Averaged over repeats; for `n_lf = 0` these are the HF-only GP's.
    pub relative_l2: Option<f64>,
    pub sigma_avg: Option<f64>,
    pub error: Option<String>,
}

/// Files a run produces for its configured cell. Optional entries are the
/// ones only some commands write.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub config: PathBuf,
    pub calibration_data: PathBuf,
    pub calibration_report: PathBuf,
    pub test_data: PathBuf,
    pub hf_data: Vec<PathBuf>,
    pub lf_data: Vec<PathBuf>,
    pub maps: Vec<PathBuf>,
    pub models: Vec<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub sobol: Option<PathBuf>,
    pub ellipse: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
}

/// The trained pair for one repeat and output.
pub struct TrainedPair {
    pub gp: Keyed<GpModel>,
    pub het_mfgp: Option<Keyed<HetMfgpModel>>,
}

pub struct Pipeline {
    config: PipelineConfig,
    out: PathBuf,
    force: Option<Stage>,
    // artifacts already recomputed by this invocation, so `force` acts once
    recomputed: Mutex<HashSet<PathBuf>>,
}

fn key_of(v: serde_json::Value) -> String {
    content_hash(&v)
}

fn key_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".key");
    PathBuf::from(p)
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

impl Pipeline {
    /// `out` overrides the config's output directory; `force` names the stage
    /// whose artifacts are recomputed even when cached.
    pub fn new(config: PipelineConfig, out: Option<PathBuf>, force: Option<Stage>) -> Result<Self> {
        config.validate()?;
        let out = out.unwrap_or_else(|| config.output_dir.clone());
        let p = Self {
            config,
            out,
            force,
            recomputed: Mutex::default(),
        };
        save_json(&p.out.join("config.json"), &p.config)?;
        Ok(p)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn cell(&self) -> Cell {
        Cell {
            n_hf: self.config.n_hf,
            n_lf: self.config.n_lf,
            lambda: self.config.lambda,
        }
    }

    fn fresh(&self, stage: Stage, path: &Path, key: &str) -> bool {
        let forced = self.force == Some(stage) && !self.recomputed.lock().unwrap().contains(path);
        !forced
            && path.exists()
            && std::fs::read_to_string(key_path(path)).is_ok_and(|k| k.trim() == key)
    }

    fn cached_json<T, F>(&self, stage: Stage, path: &Path, key: String, make: F) -> Result<Keyed<T>>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        if self.fresh(stage, path, &key) {
            if let Ok(value) = load_json(path) {
                return Ok(Keyed { value, key });
            }
            log::warn!("{} is unreadable; recomputing", path.display());
        }
        let value = make()?;
        save_json(path, &value)?;
        self.stamp(path, &key)?;
        Ok(Keyed { value, key })
    }

    fn cached_dataset<F>(
        &self,
        stage: Stage,
        path: &Path,
        key: String,
        make: F,
    ) -> Result<Keyed<Dataset>>
    where
        F: FnOnce() -> Result<Dataset>,
    {
        if self.fresh(stage, path, &key) {
            match Dataset::load(path) {
                Ok(value) => return Ok(Keyed { value, key }),
                Err(e) => log::warn!("{e}; recomputing"),
            }
        }
        let value = make()?;
        value.save(path)?;
        self.stamp(path, &key)?;
        Ok(Keyed { value, key })
    }

    fn stamp(&self, path: &Path, key: &str) -> Result<()> {
        write_atomic(&key_path(path), key.as_bytes())?;
        self.recomputed.lock().unwrap().insert(path.to_path_buf());
        Ok(())
    }

    // ---- simulators

    pub fn hf_simulator(&self) -> Result<Simulator> {
        let c = &self.config;
        Ok(Simulator::Hf(PowderFedModel::new(
            c.material.clone(),
            c.laser.clone(),
            c.coupling.clone(),
            c.quadrature_nodes,
        )?))
    }

    fn lf_template(&self) -> Result<EagarTsai> {
        let c = &self.config;
        Ok(EagarTsai::new(
            c.material.clone(),
            c.laser.clone(),
            c.quadrature_nodes,
        )?)
    }

    fn simulate(&self, design: &Design, sim: &Simulator) -> Result<Dataset> {
        log::info!("simulating {} {} pools", design.len(), sim.fidelity());
        Ok(generate_dataset(design, sim, &self.config.grid)?)
    }

    // ---- calibrate-lf

    fn calibration_paths(&self) -> (PathBuf, PathBuf) {
        let dir = self.out.join("calibration");
        (dir.join("hf_factorial.csv"), dir.join("report.json"))
    }

    pub fn calibrate_lf(&self) -> Result<Keyed<LfCalibration>> {
        tagged(Stage::CalibrateLf, || self.calibration())
    }

    fn calibration(&self) -> Result<Keyed<LfCalibration>> {
        let c = &self.config;
        let hf = self.hf_simulator()?;
        let mut levels = vec![1; c.window.dim()];
        levels[..2].copy_from_slice(&c.calibration.levels);
        let design = full_factorial(&c.window, &levels)?;
        let (data_path, report_path) = self.calibration_paths();
        let data_key = key_of(json!({ "sim": hf.config_hash(&c.grid), "design": design }));
        let data = self.cached_dataset(Stage::CalibrateLf, &data_path, data_key, || {
            self.simulate(&design, &hf)
        })?;
        let template = self.lf_template()?;
        let key = key_of(json!({
            "data": data.key,
            "template": Simulator::Lf(template.clone()).config_hash(&c.grid),
            "bounds": c.calibration.bounds,
        }));
        self.cached_json(Stage::CalibrateLf, &report_path, key, || {
            let cal = calibrate_lf(&data.value, &template, &c.grid, &c.calibration.bounds)?;
            log::info!(
                "calibrated LF: phi = {:.4}, alpha = {:.4}, R2 depth {:.4}, width {:.4}",
                cal.sigma_factor,
                cal.absorptivity,
                cal.r_squared_depth,
                cal.r_squared_width
            );
            Ok(cal)
        })
    }

    /// The LF model with the calibrated beam parameters.
    pub fn lf_simulator(&self) -> Result<Simulator> {
        let cal = self.calibration()?.value;
        let lf = self
            .lf_template()?
            .with_laser(cal.laser(self.config.laser.beam_radius))?;
        Ok(Simulator::Lf(lf))
    }

    // ---- gen-data

    fn data_path(&self, name: &str) -> PathBuf {
        self.out.join("data").join(name)
    }

    fn lhs_dataset(
        &self,
        sim: &Simulator,
        fidelity: Fidelity,
        n: usize,
        seed: u64,
        name: &str,
    ) -> Result<Keyed<Dataset>> {
        let window = match fidelity {
            Fidelity::Hf => self.config.window.clone(),
            Fidelity::Lf => self.config.lf_window(),
        };
        let key = key_of(json!({
            "sim": sim.config_hash(&self.config.grid),
            "window": window,
            "n": n,
            "seed": seed,
        }));
        self.cached_dataset(Stage::GenData, &self.data_path(name), key, || {
            self.simulate(&lhs_sample(&window, n, seed)?, sim)
        })
    }

    pub fn test_data(&self) -> Result<Keyed<Dataset>> {
        let c = &self.config;
        self.lhs_dataset(
            &self.hf_simulator()?,
            Fidelity::Hf,
            c.n_test,
            seeds::derive(c.seed, seeds::TEST, 0),
            "test.csv",
        )
    }

    pub fn hf_data(&self, n: usize, repeat: usize) -> Result<Keyed<Dataset>> {
        let seed = seeds::derive(self.config.seed, seeds::HF_TRAIN, repeat as u64);
        self.lhs_dataset(
            &self.hf_simulator()?,
            Fidelity::Hf,
            n,
            seed,
            &format!("hf_n{n}_r{repeat}.csv"),
        )
    }

    /// `None` when `n = 0`: single-fidelity mode.
    pub fn lf_data(&self, n: usize, repeat: usize) -> Result<Option<Keyed<Dataset>>> {
        if n == 0 {
            return Ok(None);
        }
        let seed = seeds::derive(self.config.seed, seeds::LF_TRAIN, repeat as u64);
        let sim = self.lf_simulator()?;
        self.lhs_dataset(
            &sim,
            Fidelity::Lf,
            n,
            seed,
            &format!("lf_n{n}_r{repeat}.csv"),
        )
        .map(Some)
    }

    fn ensure_data(&self, cell: Cell) -> Result<()> {
        self.calibration()?;
        self.test_data()?;
        for r in 0..self.config.repeats {
            self.hf_data(cell.n_hf, r)?;
            self.lf_data(cell.n_lf, r)?;
        }
        Ok(())
    }

    pub fn gen_data(&self) -> Result<()> {
        tagged(Stage::GenData, || {
            let cell = self.cell();
            if cell.n_lf == 0 {
                log::info!("n_lf = 0: no LF data, single-fidelity mode");
            }
            self.ensure_data(cell)
        })
    }

    // ---- fit-map

    fn model_dir(&self, kind: &str, cell: Cell) -> PathBuf {
        self.out.join(kind).join(cell.tag())
    }

    fn lf_gp(&self, lf: &Keyed<Dataset>, output: Output, repeat: usize) -> Result<Keyed<GpModel>> {
        let cfg =
            self.config
                .mfgp_config(seeds::derive(self.config.seed, seeds::MFGP, repeat as u64));
        let key = key_of(json!({ "lf": lf.key, "output": output, "gp": cfg.lf_gp }));
        // cheap to refit, so kept in memory only
        Ok(Keyed {
            value: fit_lf_gp(&lf.value, output, &cfg.lf_gp)?,
            key,
        })
    }

    /// IMC result for one repeat and output; `None` without LF data.
    pub fn map(
        &self,
        cell: Cell,
        repeat: usize,
        output: Output,
    ) -> Result<Option<Keyed<ImcResult>>> {
        let Some(lf) = self.lf_data(cell.n_lf, repeat)? else {
            return Ok(None);
        };
        let hf = self.hf_data(cell.n_hf, repeat)?;
        let imc = self.config.imc_config(
            cell.lambda,
            seeds::derive(self.config.seed, seeds::IMC, repeat as u64),
        );
        let lf_gp = self.lf_gp(&lf, output, repeat)?;
        let path = self
            .model_dir("maps", cell)
            .join(format!("{output}_r{repeat}.json"));
        let key = key_of(json!({ "lf_gp": lf_gp.key, "hf": hf.key, "imc": imc }));
        self.cached_json(Stage::FitMap, &path, key, || {
            let scaler = InputScaler::from_window(&hf.value.provenance.window);
            let data = ImcData::new(
                &hf.value.inputs,
                hf.value.output(output),
                &scaler,
                &lf_gp.value,
            )?;
            Ok(fit_imc(&data, &lf_gp.value, output, &imc)?)
        })
        .map(Some)
    }

    pub fn fit_maps(&self) -> Result<Vec<Keyed<ImcResult>>> {
        tagged(Stage::FitMap, || {
            let cell = self.cell();
            if cell.n_lf == 0 {
                bail!("input mapping needs LF data but n_lf = 0");
            }
            self.ensure_data(cell)?;
            self.repeat_outputs()
                .into_par_iter()
                .map(|(r, o)| Ok(self.map(cell, r, o)?.expect("LF data present")))
                .collect()
        })
    }

    fn repeat_outputs(&self) -> Vec<(usize, Output)> {
        (0..self.config.repeats)
            .flat_map(|r| OUTPUTS.map(|o| (r, o)))
            .collect()
    }

    // ---- train

    pub fn trained(&self, cell: Cell, repeat: usize, output: Output) -> Result<TrainedPair> {
        let c = &self.config;
        let hf = self.hf_data(cell.n_hf, repeat)?;
        let dir = self.model_dir("models", cell);

        let gp_cfg = c.gp_config(seeds::derive(c.seed, seeds::GP, repeat as u64));
        let gp_key =
            key_of(json!({ "hf": hf.key, "output": output, "gp": gp_cfg, "window": c.window }));
        let gp = self.cached_json(
            Stage::Train,
            &dir.join(format!("gp_{output}_r{repeat}.json")),
            gp_key,
            || Ok(fit_hf_gp(&hf.value, output, &c.window, &gp_cfg)?),
        )?;

        let het_mfgp = match self.map(cell, repeat, output)? {
            None => None,
            Some(map) => {
                let lf = self
                    .lf_data(cell.n_lf, repeat)?
                    .expect("a map implies LF data");
                let lf_gp = self.lf_gp(&lf, output, repeat)?;
                let cfg = c.mfgp_config(seeds::derive(c.seed, seeds::MFGP, repeat as u64));
                let key = key_of(
                    json!({ "map": map.key, "lf_gp": lf_gp.key, "hf": hf.key, "mfgp": cfg }),
                );
                let path = dir.join(format!("mfgp_{output}_r{repeat}.json"));
                Some(self.cached_json(Stage::Train, &path, key, || {
                    Ok(train_mfgp_with_surrogate(
                        Some(lf_gp.value),
                        &hf.value,
                        output,
                        &map.value.map,
                        &cfg,
                    )?)
                })?)
            }
        };
        Ok(TrainedPair { gp, het_mfgp })
    }

    pub fn train(&self) -> Result<()> {
        tagged(Stage::Train, || {
            let cell = self.cell();
            self.ensure_data(cell)?;
            self.repeat_outputs()
                .into_par_iter()
                .try_for_each(|(r, o)| self.trained(cell, r, o).map(drop))
        })
    }

    // ---- evaluate

    /// Trains (or loads) both models for every repeat of `cell` and scores
    /// them on the shared test set.
    pub fn evaluate_cell(&self, cell: Cell) -> Result<EvaluationReport> {
        self.ensure_data(cell)?;
        let test = self.test_data()?.value;
        let runs: Vec<(usize, Output, MetricsReport, Option<MetricsReport>)> = self
            .repeat_outputs()
            .into_par_iter()
            .map(|(r, o)| {
                let pair = self.trained(cell, r, o)?;
                let truth = test.output(o);
                let seed = r as u64;
                let (m, v) = pair.gp.value.predict(&test.inputs)?;
                let gp = MetricsReport::evaluate(o, truth, &m, &v, seed)?;
                let mf = match &pair.het_mfgp {
                    Some(model) => {
                        let (m, v) = model.value.predict(&test.inputs)?;
                        Some(MetricsReport::evaluate(o, truth, &m, &v, seed)?)
                    }
                    None => None,
                };
                Ok((r, o, gp, mf))
            })
            .collect::<Result<_>>()?;
        let outputs = OUTPUTS
            .iter()
            .map(|&o| {
                let mine: Vec<_> = runs.iter().filter(|run| run.1 == o).collect();
                let gp_runs: Vec<MetricsReport> = mine.iter().map(|run| run.2.clone()).collect();
                let het_mfgp_runs: Vec<MetricsReport> =
                    mine.iter().filter_map(|run| run.3.clone()).collect();
                Ok(OutputMetrics {
                    output: o,
                    gp: MetricsReport::average(&gp_runs)?,
                    het_mfgp: if het_mfgp_runs.is_empty() {
                        None
                    } else {
                        Some(MetricsReport::average(&het_mfgp_runs)?)
                    },
                    gp_runs,
                    het_mfgp_runs,
                })
            })
            .collect::<Result<_>>()?;
        Ok(EvaluationReport {
            cell,
            repeats: self.config.repeats,
            n_test: test.len(),
            outputs,
        })
    }

    pub fn evaluate(&self) -> Result<EvaluationReport> {
        tagged(Stage::Evaluate, || {
            let report = self.evaluate_cell(self.cell())?;
            save_json(&self.out.join("metrics.json"), &report)?;
            Ok(report)
        })
    }

    // ---- predict, sobol, ellipse: first repeat of the configured cell

    /// Mean and variance of both outputs at HF-window rows, from the
    /// Het-MFGP when LF data is configured and the HF-only GP otherwise.
    pub fn predict_rows(&self, repeat: usize, x: &[Vec<f64>]) -> Result<Vec<OutputPrediction>> {
        ensure!(
            repeat < self.config.repeats,
            "repeat {repeat} out of range 0..{}",
            self.config.repeats
        );
        let cell = self.cell();
        self.ensure_data(cell)?;
        OUTPUTS
            .iter()
            .map(|&o| {
                let pair = self.trained(cell, repeat, o)?;
                let (m, v) = match &pair.het_mfgp {
                    Some(model) => model.value.predict(x)?,
                    None => pair.gp.value.predict(x)?,
                };
                Ok((o, m, v))
            })
            .collect()
    }

    /// Reads HF inputs from a CSV whose first five columns are P, v, mdot,
    /// gsh, H (window units) and writes them back with predicted outputs.
    pub fn predict(&self, input: &Path, output: &Path, repeat: usize) -> Result<()> {
        tagged(Stage::Predict, || {
            let x = read_inputs(input)?;
            let preds = self.predict_rows(repeat, &x)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header: Vec<String> = ["P", "v", "mdot", "gsh", "H"].map(String::from).to_vec();
            for (o, _, _) in &preds {
                header.push(format!("{o}_mean"));
                header.push(format!("{o}_var"));
            }
            w.write_record(&header)?;
            for (i, row) in x.iter().enumerate() {
                let mut rec: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                for (_, m, v) in &preds {
                    rec.push(format!("{:.16e}", m[i]));
                    rec.push(format!("{:.16e}", v[i]));
                }
                w.write_record(&rec)?;
            }
            write_atomic(output, &w.into_inner()?)?;
            Ok(())
        })
    }

    pub fn sobol(&self) -> Result<Vec<SobolIndices>> {
        tagged(Stage::Sobol, || {
            let c = &self.config;
            let cell = self.cell();
            self.ensure_data(cell)?;
            let seed = seeds::derive(c.seed, seeds::SOBOL, 0);
            let mut keys = Vec::new();
            for o in OUTPUTS {
                let pair = self.trained(cell, 0, o)?;
                keys.push(pair.het_mfgp.map_or(pair.gp.key, |m| m.key));
            }
            let key = key_of(json!({ "models": keys, "n": c.sobol.samples, "seed": seed }));
            let path = self.out.join("sobol.json");
            Ok(self
                .cached_json(Stage::Sobol, &path, key, || {
                    OUTPUTS
                        .iter()
                        .map(|&o| {
                            let pair = self.trained(cell, 0, o)?;
                            let predictor = |x: &[Vec<f64>]| match &pair.het_mfgp {
                                Some(m) => m.value.predict(x).map(|p| p.0),
                                None => pair.gp.value.predict(x).map(|p| p.0),
                            };
                            Ok(sobol_indices(&c.window, predictor, c.sobol.samples, seed)?)
                        })
                        .collect()
                })?
                .value)
        })
    }

    pub fn ellipse(&self) -> Result<EllipseBoundary> {
        tagged(Stage::Ellipse, || {
            let c = &self.config;
            let point = c
                .ellipse
                .point
                .clone()
                .unwrap_or_else(|| c.window.midpoint());
            let preds = self.predict_rows(0, std::slice::from_ref(&point))?;
            let get = |o: Output| {
                preds
                    .iter()
                    .find(|p| p.0 == o)
                    .map(|p| (p.1[0], p.2[0].sqrt()))
                    .unwrap()
            };
            let (depth, sd_depth) = get(Output::Depth);
            let (width, sd_width) = get(Output::Width);
            let e = ellipse_boundary(depth, width, sd_depth, sd_width, c.ellipse.resolution)?;
            write_atomic(&self.out.join("ellipse.csv"), e.to_csv()?.as_bytes())?;
            Ok(e)
        })
    }

    // ---- sweep

    pub fn sweep(&self, n_hf: &[usize], n_lf: &[usize], lambda: &[f64]) -> Result<Vec<SweepRow>> {
        tagged(Stage::Sweep, || {
            ensure!(
                !n_hf.is_empty() && !n_lf.is_empty() && !lambda.is_empty(),
                "sweep lists must be non-empty"
            );
            let mut cells: Vec<Cell> = Vec::new();
            for &h in n_hf {
                for &l in n_lf {
                    for &lam in lambda {
                        let cell = Cell {
                            n_hf: h,
                            n_lf: l,
                            lambda: lam,
                        };
                        if !cells.iter().any(|c| c.tag() == cell.tag()) {
                            cells.push(cell);
                        }
                    }
                }
            }
            // data first and in order, so parallel cells only read shared files
            for &cell in &cells {
                self.ensure_data(cell)?;
            }
            let rows: Vec<SweepRow> = cells
                .par_iter()
                .flat_map_iter(|&cell| match self.evaluate_cell(cell) {
                    Ok(report) => report
                        .outputs
                        .iter()
                        .map(|m| {
                            let r = m.het_mfgp.as_ref().unwrap_or(&m.gp);
                            SweepRow {
                                cell,
                                output: m.output,
                                relative_l2: Some(r.relative_l2),
                                sigma_avg: Some(r.sigma_avg),
                                error: None,
                            }
                        })
                        .collect::<Vec<_>>(),
                    Err(e) => {
                        log::error!("sweep cell {} failed: {e:#}", cell.tag());
                        OUTPUTS
                            .iter()
                            .map(|&output| SweepRow {
                                cell,
                                output,
                                relative_l2: None,
                                sigma_avg: None,
                                error: Some(format!("{e:#}")),
                            })
                            .collect()
                    }
                })
                .collect();
            write_atomic(&self.out.join("sweep.csv"), sweep_csv(&rows)?.as_bytes())?;
            Ok(rows)
        })
    }

    // ---- artifacts

    pub fn artifacts(&self) -> RunArtifacts {
        let cell = self.cell();
        let (calibration_data, calibration_report) = self.calibration_paths();
        let mut hf_data = Vec::new();
        let mut lf_data = Vec::new();
        let mut maps = Vec::new();
        let mut models = Vec::new();
        for r in 0..self.config.repeats {
            hf_data.push(self.data_path(&format!("hf_n{}_r{r}.csv", cell.n_hf)));
            for o in OUTPUTS {
                models.push(
                    self.model_dir("models", cell)
                        .join(format!("gp_{o}_r{r}.json")),
                );
                if cell.n_lf > 0 {
                    maps.push(self.model_dir("maps", cell).join(format!("{o}_r{r}.json")));
                    models.push(
                        self.model_dir("models", cell)
                            .join(format!("mfgp_{o}_r{r}.json")),
                    );
                }
            }
            if cell.n_lf > 0 {
                lf_data.push(self.data_path(&format!("lf_n{}_r{r}.csv", cell.n_lf)));
            }
        }
        let optional = |name: &str| Some(self.out.join(name)).filter(|p| p.exists());
        RunArtifacts {
            config: self.out.join("config.json"),
            calibration_data,
            calibration_report,
            test_data: self.data_path("test.csv"),
            hf_data,
            lf_data,
            maps,
            models,
            metrics: optional("metrics.json"),
            sobol: optional("sobol.json"),
            ellipse: optional("ellipse.csv"),
            sweep: optional("sweep.csv"),
        }
    }

    /// Checks that every artifact exists and parses, and that the datasets
    /// were simulated with the configured models.
    pub fn verify(&self, artifacts: &RunArtifacts) -> Result<()> {
        let hf_hash = self.hf_simulator()?.config_hash(&self.config.grid);
        let check_data = |p: &PathBuf, hash: &str| -> Result<()> {
            let d = Dataset::load(p)?;
            ensure!(
                d.provenance.config_hash == hash,
                "{} was simulated with a different model configuration",
                p.display()
            );
            Ok(())
        };
        load_json::<PipelineConfig>(&artifacts.config)?;
        check_data(&artifacts.calibration_data, &hf_hash)?;
        load_json::<LfCalibration>(&artifacts.calibration_report)?;
        check_data(&artifacts.test_data, &hf_hash)?;
        for p in &artifacts.hf_data {
            check_data(p, &hf_hash)?;
        }
        if !artifacts.lf_data.is_empty() {
            let lf_hash = self.lf_simulator()?.config_hash(&self.config.grid);
            for p in &artifacts.lf_data {
                check_data(p, &lf_hash)?;
            }
        }
        for p in &artifacts.maps {
            load_json::<ImcResult>(p)?;
        }
        for p in &artifacts.models {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.starts_with("mfgp_") {
                load_json::<HetMfgpModel>(p)?;
            } else {
                load_json::<GpModel>(p)?;
            }
        }
        if let Some(p) = &artifacts.metrics {
            load_json::<EvaluationReport>(p)?;
        }
        if let Some(p) = &artifacts.sobol {
            load_json::<Vec<SobolIndices>>(p)?;
        }
        for p in [&artifacts.ellipse, &artifacts.sweep].into_iter().flatten() {
            let text = read_to_string(p)?;
            let mut r = csv::Reader::from_reader(text.as_bytes());
            for rec in r.records() {
                rec.with_context(|| format!("parsing {}", p.display()))?;
            }
        }
        Ok(())
    }
}

fn read_inputs(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read_to_string(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let expected = ["P", "v", "mdot", "gsh", "H"];
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    ensure!(
        header.len() >= expected.len() && header[..expected.len()] == expected,
        "{}: expected leading columns {expected:?}, got {header:?}",
        path.display()
    );
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {i}", path.display()))?;
        let row = (0..expected.len())
            .map(|j| {
                rec[j]
                    .trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}: row {i}, column {}", path.display(), expected[j]))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    ensure!(!rows.is_empty(), "{}: no input rows", path.display());
    Ok(rows)
}

fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "n_hf",
        "n_lf",
        "lambda",
        "output",
        "relative_l2",
        "sigma_avg",
        "error",
    ])?;
    let num = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for row in rows {
        w.write_record([
            row.cell.n_hf.to_string(),
            row.cell.n_lf.to_string(),
            row.cell.lambda.to_string(),
            row.output.to_string(),
            num(row.relative_l2),
            num(row.sigma_avg),
            row.error.clone().unwrap_or_default(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
