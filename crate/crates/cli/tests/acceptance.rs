//! End-to-end acceptance checks. Run with
//! `cargo test -p hetmfgp-cli --test acceptance --release`.
//!
//! Simulated datasets and trained models are cached under the cargo target
//! directory, so only the first run pays for the HF simulations.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{ensure, Result};
use hetmfgp::analysis::{pearson, r_squared, relative_l2, sigma_avg, sobol_indices};
use hetmfgp::doe::{
    full_factorial, generate_dataset, lhs_sample, Dataset, DesignKind, ParameterWindow, Provenance,
    Simulator, WindowDim,
};
use hetmfgp::gp::{cross_validate_r2, matern52, GpModel, InputScaler, KernelParams, Standardizer};
use hetmfgp::imc::{apply_map, fit_imc, AffineMap, ImcConfig, ImcData};
use hetmfgp::mfgp::{train_mfgp, HetMfgpModel, MfgpConfig};
use hetmfgp::thermal::{
    melt_pool_geometry, EagarTsai, GridSpec, HfInput, LfInput, PowderFedModel, ThermalModel,
};
use hetmfgp::{Fidelity, Output};
use hetmfgp_cli::{Pipeline, PipelineConfig};

/// One measured quantity against its threshold.
struct Check {
    ok: bool,
    line: String,
}

fn at_most(what: &str, value: f64, limit: f64) -> Check {
    Check {
        ok: value <= limit,
        line: format!("{what} = {value:.4e} (≤ {limit:.1e})"),
    }
}

fn at_least(what: &str, value: f64, limit: f64) -> Check {
    Check {
        ok: value >= limit,
        line: format!("{what} = {value:.6} (≥ {limit})"),
    }
}

fn holds(what: impl Into<String>, ok: bool) -> Check {
    Check {
        ok,
        line: what.into(),
    }
}

fn cache_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn pipeline() -> Result<Pipeline> {
    Pipeline::new(
        PipelineConfig::default(),
        Some(cache_dir().join("run")),
        None,
    )
}

// ---- 1

fn metric_exactness() -> Result<Vec<Check>> {
    let r2 = r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0])?;
    let l2 = relative_l2(&[3.0, 4.0], &[3.0, 0.0])?;
    let l2_zero = relative_l2(&[3.0, 4.0], &[0.0, 0.0])?;
    let s = sigma_avg(&[1.0, 9.0])?;
    Ok(vec![
        at_most("|R² − 0.5|", (r2 - 0.5).abs(), 1e-12),
        at_most("|L2 − 0.8|", (l2 - 0.8).abs(), 1e-12),
        at_most("|L2(ŷ = 0) − 1|", (l2_zero - 1.0).abs(), 1e-12),
        at_most("|σ_avg − √5|", (s - 5f64.sqrt()).abs(), 1e-12),
    ])
}

// ---- 2

fn lf_calibration(p: &Pipeline) -> Result<Vec<Check>> {
    let cal = p.calibrate_lf()?.value;
    Ok(vec![
        holds(
            format!("φ = {:.4}, α = {:.4}", cal.sigma_factor, cal.absorptivity),
            !cal.clamped,
        ),
        at_least("R²(depth)", cal.r_squared_depth, 0.95),
        at_least("R²(width)", cal.r_squared_width, 0.90),
    ])
}

// ---- 3

fn factorial_dataset(sim: &Simulator, grid: &GridSpec, name: &str) -> Result<Dataset> {
    let window = ParameterWindow::for_fidelity(sim.fidelity());
    let design = full_factorial(&window, &vec![3; window.dim()])?;
    let path = cache_dir().join(name);
    if let Ok(d) = Dataset::load(&path) {
        if d.provenance.config_hash == sim.config_hash(grid) && d.inputs == design.points {
            return Ok(d);
        }
    }
    let d = generate_dataset(&design, sim, grid)?;
    d.save(&path)?;
    Ok(d)
}

fn correlation_fingerprint(p: &Pipeline) -> Result<Vec<Check>> {
    let grid = &p.config().grid;
    let lf = factorial_dataset(&p.lf_simulator()?, grid, "lf_factorial.csv")?;
    let hf = factorial_dataset(&p.hf_simulator()?, grid, "hf_factorial.csv")?;
    let names = ["P", "v", "mdot", "gsh", "H"];
    let mut checks = Vec::new();
    for (ds, fid) in [(&lf, Fidelity::Lf), (&hf, Fidelity::Hf)] {
        for o in Output::ALL {
            let r = pearson(&ds.inputs, ds.output(o))?;
            let r: Vec<f64> = r.into_iter().map(|c| c.unwrap_or(0.0)).collect();
            // (sign, minimum |r|) per input
            let expected: &[(f64, f64)] = match fid {
                Fidelity::Lf => &[(1.0, 0.0), (-1.0, 0.0)],
                Fidelity::Hf => &[
                    (1.0, 0.0),
                    (-1.0, 0.0),
                    (1.0, 0.05),
                    (-1.0, 0.05),
                    (1.0, 0.05),
                ],
            };
            let ok = expected
                .iter()
                .zip(&r)
                .all(|(&(sign, min), &c)| c * sign > 0.0 && c.abs() >= min);
            let shown: Vec<String> = names
                .iter()
                .zip(&r)
                .map(|(n, c)| format!("{n} {c:+.3}"))
                .collect();
            checks.push(holds(format!("{fid} {o}: {}", shown.join(", ")), ok));
        }
    }
    Ok(checks)
}

// ---- 4

fn fusion_benefit(p: &Pipeline) -> Result<Vec<Check>> {
    let c = p.config();
    ensure!(
        (c.n_hf, c.n_lf, c.repeats, c.n_test, c.lambda) == (20, 20, 10, 100, 0.01),
        "fusion check expects the default configuration"
    );
    let report = p.evaluate()?;
    let mut checks = Vec::new();
    for m in &report.outputs {
        let mf = m.het_mfgp.as_ref().expect("LF data is configured");
        let l2 = mf.relative_l2 / m.gp.relative_l2;
        let sd = mf.sigma_avg / m.gp.sigma_avg;
        checks.push(at_most(
            &format!(
                "{}: L2 ratio (Het-MFGP {:.4e} / GP {:.4e})",
                m.output, mf.relative_l2, m.gp.relative_l2
            ),
            l2,
            0.6,
        ));
        checks.push(at_most(
            &format!(
                "{}: σ_avg ratio (Het-MFGP {:.4e} / GP {:.4e})",
                m.output, mf.sigma_avg, m.gp.sigma_avg
            ),
            sd,
            0.5,
        ));
    }
    Ok(checks)
}

// ---- 5

fn sweep_trends(p: &Pipeline) -> Result<Vec<Check>> {
    let rows = p.sweep(&[5, 20], &[0, 20], &[p.config().lambda])?;
    if let Some(bad) = rows.iter().find(|r| r.error.is_some()) {
        anyhow::bail!(
            "sweep cell {} failed: {}",
            bad.cell.tag(),
            bad.error.as_deref().unwrap_or_default()
        );
    }
    let l2 = |o: Output, n_hf: usize, n_lf: usize| -> f64 {
        rows.iter()
            .find(|r| r.output == o && r.cell.n_hf == n_hf && r.cell.n_lf == n_lf)
            .and_then(|r| r.relative_l2)
            .expect("sweep row present")
    };
    let mut checks = Vec::new();
    let mut inversions = 0;
    let mut large_inversion = false;
    for o in Output::ALL {
        for n_lf in [0, 20] {
            let (small, large) = (l2(o, 5, n_lf), l2(o, 20, n_lf));
            if large > small {
                inversions += 1;
                large_inversion |= large > 1.05 * small;
            }
            checks.push(holds(
                format!(
                    "{o}, N_LF = {n_lf}: L2 {small:.4e} at N_HF = 5 → {large:.4e} at N_HF = 20"
                ),
                large <= 1.05 * small,
            ));
        }
        let (hf_only, fused) = (l2(o, 20, 0), l2(o, 20, 20));
        checks.push(holds(
            format!("{o}, N_HF = 20: L2 {hf_only:.4e} with N_LF = 0 → {fused:.4e} with N_LF = 20"),
            fused < hf_only,
        ));
    }
    checks.push(holds(
        format!("{inversions} inversion(s) in N_HF, none beyond 5%"),
        inversions <= 1 && !large_inversion,
    ));
    Ok(checks)
}

// ---- 6

fn imc_recovery() -> Result<Vec<Check>> {
    let truth_fn =
        |u: &[f64]| 2.0 + u[0] - 0.6 * u[1] + 0.4 * u[0] * u[1] + 0.3 * (2.0 * u[0]).sin();
    let grid: Vec<Vec<f64>> = (0..64)
        .map(|i| vec![(i % 8) as f64 / 7.0, (i / 8) as f64 / 7.0])
        .collect();
    let gy: Vec<f64> = grid.iter().map(|u| truth_fn(u)).collect();
    let lf = GpModel::with_params(
        &grid,
        &gy,
        InputScaler::identity(2),
        Standardizer::fit(&gy),
        KernelParams {
            signal_variance: 1.0,
            lengthscales: vec![0.8, 0.8],
            nugget: 1e-10,
        },
    )?;
    let window = ParameterWindow::hf();
    let scaler = InputScaler::from_window(&window);
    let truth = AffineMap {
        output: Output::Depth,
        a: vec![
            vec![0.8, 0.1, 0.15, -0.1, 0.05],
            vec![0.05, 0.9, -0.1, 0.0, 0.1],
        ],
        b: vec![0.03, -0.02],
    };
    let s = lf.standardizer();
    let hf = |n: usize, seed: u64| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let x = lhs_sample(&window, n, seed)?.points;
        let y = x
            .iter()
            .map(|r| s.inverse(lf.mean_scaled(&truth.apply(&scaler.scale(r)))))
            .collect();
        Ok((x, y))
    };
    let (x, y) = hf(30, 1)?;
    let data = ImcData::new(&x, &y, &scaler, &lf)?;
    let (tx, ty) = hf(50, 2)?;
    let mut checks = Vec::new();
    for seed in [7, 8, 9] {
        let config = ImcConfig {
            lambda: 0.0,
            seed,
            ..ImcConfig::default()
        };
        let r = fit_imc(&data, &lf, Output::Depth, &config)?;
        let unit: Vec<Vec<f64>> = tx.iter().map(|x| scaler.scale(x)).collect();
        let worst = apply_map(&r.map, &unit)?
            .iter()
            .zip(&ty)
            .map(|(g, y)| ((s.inverse(lf.mean_scaled(g)) - y) / y).abs())
            .fold(0.0, f64::max);
        let monotone = r.trace.best_loss.windows(2).all(|w| w[1] <= w[0]);
        checks.push(at_most(
            &format!("seed {seed}: standardised loss"),
            r.final_loss,
            1e-4,
        ));
        checks.push(at_most(
            &format!("seed {seed}: worst held-out relative error"),
            worst,
            0.02,
        ));
        checks.push(holds(
            format!(
                "seed {seed}: best-so-far trace non-increasing over {} iterations",
                r.iterations()
            ),
            monotone,
        ));
    }
    Ok(checks)
}

// ---- 7

fn synthetic_dataset(fidelity: Fidelity, inputs: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Dataset> {
    Ok(Dataset::new(
        fidelity,
        inputs,
        y.clone(),
        y,
        Provenance {
            window: ParameterWindow::for_fidelity(fidelity),
            seed: None,
            design: DesignKind::Lhs,
            config_hash: String::new(),
        },
    )?)
}

fn cokriging_sanity() -> Result<Vec<Check>> {
    let f = |p: f64, v: f64| {
        let q = (p - 700.0) / 300.0;
        1e-3 * (0.4 + 0.5 * q - 0.2 * (v - 5.0) / 5.0 + 0.1 * q * q)
    };
    let lf_x = lhs_sample(&ParameterWindow::lf(), 25, 1)?.points;
    let lf_y: Vec<f64> = lf_x.iter().map(|r| f(r[0], r[1])).collect();
    let hf_x: Vec<Vec<f64>> = lf_x
        .iter()
        .map(|r| vec![r[0], r[1], 5.0, 3.5, 5.0])
        .collect();
    let lf = synthetic_dataset(Fidelity::Lf, lf_x, lf_y.clone())?;
    let hf = synthetic_dataset(Fidelity::Hf, hf_x, lf_y.iter().map(|v| 2.0 * v).collect())?;
    let selector = AffineMap::selector(2, 5, Output::Depth);
    let m = train_mfgp(
        Some(&lf),
        &hf,
        Output::Depth,
        &selector,
        &MfgpConfig::default(),
    )?;

    // ρ = 0 collapses the model onto its discrepancy GP.
    let g: Vec<Vec<f64>> = (0..6)
        .map(|i| vec![i as f64 / 5.0, ((i * 3) % 5) as f64 / 4.0])
        .collect();
    let gy: Vec<f64> = g.iter().map(|r| r[0] - r[1]).collect();
    let disc = GpModel::with_params(
        &g,
        &gy,
        InputScaler::identity(2),
        Standardizer::identity(),
        KernelParams {
            signal_variance: 0.7,
            lengthscales: vec![0.4, 0.9],
            nugget: 1e-6,
        },
    )?;
    let s = Standardizer {
        mean: 1e-3,
        scale: 2e-4,
    };
    let zero = HetMfgpModel::from_parts(
        Output::Width,
        Some(disc.clone()),
        disc.clone(),
        0.0,
        AffineMap::selector(2, 5, Output::Width),
        InputScaler::from_window(&ParameterWindow::hf()),
        s,
    )?;
    let q = lhs_sample(&ParameterWindow::hf(), 10, 4)?.points;
    let (mean, var) = zero.predict(&q)?;
    let (dm, dv) = disc.predict_scaled(&zero.pseudo_inputs(&q)?);
    let gap = (0..q.len())
        .map(|i| {
            (mean[i] - s.inverse(dm[i]))
                .abs()
                .max((var[i] - s.inverse_variance(dv[i])).abs())
        })
        .fold(0.0, f64::max);
    Ok(vec![
        holds(
            format!("ρ̂ = {:.4} for y_HF = 2·y_LF (∈ [1.9, 2.1])", m.rho()),
            (1.9..=2.1).contains(&m.rho()),
        ),
        at_most("ρ = 0 vs discrepancy GP, max |Δ|", gap, 1e-10),
    ])
}

// ---- 8

fn solve3(k: [[f64; 3]; 3], rhs: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(k);
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut m = k;
        for r in 0..3 {
            m[r][c] = rhs[r];
        }
        *o = det(m) / d;
    }
    out
}

fn gp_suite(p: &Pipeline) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // three-point posterior against Cramer's rule
    let params = KernelParams {
        signal_variance: 1.7,
        lengthscales: vec![0.35],
        nugget: 1e-2,
    };
    let xs = [0.1, 0.45, 0.9];
    let ys = [1.0, -0.5, 0.25];
    let x: Vec<Vec<f64>> = xs.iter().map(|v| vec![*v]).collect();
    let gp = GpModel::with_params(
        &x,
        &ys,
        InputScaler::identity(1),
        Standardizer::identity(),
        params.clone(),
    )?;
    let k = |a: f64, b: f64| matern52(&[a], &[b], &params);
    let mut kk = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            kk[i][j] = k(xs[i], xs[j]) + if i == j { params.nugget } else { 0.0 };
        }
    }
    let alpha = solve3(kk, ys);
    let mut worst: f64 = 0.0;
    for q in [0.0, 0.3, 0.6, 1.2] {
        let kq = [k(xs[0], q), k(xs[1], q), k(xs[2], q)];
        let w = solve3(kk, kq);
        let mean: f64 = (0..3).map(|i| kq[i] * alpha[i]).sum();
        let var = params.signal_variance - (0..3).map(|i| kq[i] * w[i]).sum::<f64>();
        let (pm, pv) = gp.predict(&[vec![q]])?;
        worst = worst.max((pm[0] - mean).abs()).max((pv[0] - var).abs());
    }
    checks.push(at_most(
        "3-point posterior vs explicit solve, max |Δ|",
        worst,
        1e-10,
    ));

    // trained models of the default run
    let cell = p.cell();
    let test = p.test_data()?.value;
    let hf = p.hf_data(cell.n_hf, 0)?.value;
    for o in Output::ALL {
        let gp = p.trained(cell, 0, o)?.gp.value;
        let s = gp.standardizer();
        let (mean, _) = gp.predict(&hf.inputs)?;
        let tol = 3.0 * s.inverse_variance(gp.params().nugget).sqrt();
        let miss = mean
            .iter()
            .zip(hf.output(o))
            .map(|(m, y)| (m - y).abs())
            .fold(0.0, f64::max);
        checks.push(at_most(
            &format!("{o}: HF-GP training residual (3σ_n = {tol:.3e})"),
            miss,
            tol,
        ));

        let unit: Vec<Vec<f64>> = test
            .inputs
            .iter()
            .map(|x| gp.input_scaler().scale(x))
            .collect();
        let (_, var) = gp.predict_scaled(&unit);
        let excess = var
            .iter()
            .map(|v| v - gp.params().signal_variance)
            .fold(f64::MIN, f64::max);
        checks.push(at_most(
            &format!("{o}: max(σ² − σ_f²) over the test set"),
            excess,
            1e-8,
        ));
    }

    let lf = p
        .lf_data(cell.n_lf, 0)?
        .expect("LF data is configured")
        .value;
    for o in Output::ALL {
        let cv = cross_validate_r2(
            &lf.inputs,
            lf.output(o),
            &InputScaler::from_window(&lf.provenance.window),
            &p.config().gp_config(0),
            5,
        )?;
        checks.push(at_least(
            &format!("{o}: LF-GP 5-fold CV R² on {} points", lf.len()),
            cv,
            0.99,
        ));
    }
    Ok(checks)
}

// ---- 9

fn sobol_suite(p: &Pipeline) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let unit_box = ParameterWindow::new(
        (0..4)
            .map(|i| WindowDim {
                name: format!("x{}", i + 1),
                unit: String::new(),
                lower: 0.0,
                upper: 1.0,
            })
            .collect(),
    )?;
    let s = sobol_indices(&unit_box, |x| Ok(x.iter().map(|r| r[0]).collect()), 4096, 1)?;
    let expected = [1.0, 0.0, 0.0, 0.0];
    let dev = (0..4)
        .map(|i| {
            (s.first_order[i] - expected[i])
                .abs()
                .max((s.total_order[i] - expected[i]).abs())
        })
        .fold(0.0, f64::max);
    checks.push(at_most("f = x₁: max |S − (1, 0, 0, 0)|", dev, 0.02));

    let (a, b) = (7.0, 0.1);
    let cube = ParameterWindow::new(
        (0..3)
            .map(|i| WindowDim {
                name: format!("x{}", i + 1),
                unit: String::new(),
                lower: -PI,
                upper: PI,
            })
            .collect(),
    )?;
    let ishigami = |x: &[Vec<f64>]| {
        Ok(x.iter()
            .map(|r| r[0].sin() + a * r[1].sin().powi(2) + b * r[2].powi(4) * r[0].sin())
            .collect())
    };
    let s = sobol_indices(&cube, ishigami, 1 << 14, 2)?;
    let pi4 = PI.powi(4);
    let var = a * a / 8.0 + b * pi4 / 5.0 + b * b * pi4 * pi4 / 18.0 + 0.5;
    let analytic = [
        0.5 * (1.0 + b * pi4 / 5.0).powi(2) / var,
        a * a / 8.0 / var,
        0.0,
    ];
    let dev = (0..3)
        .map(|i| (s.first_order[i] - analytic[i]).abs())
        .fold(0.0, f64::max);
    checks.push(at_most(
        &format!(
            "Ishigami S1 {:.3?} vs {:.3?}: max |Δ|",
            s.first_order, analytic
        ),
        dev,
        0.05,
    ));

    let indices = p.sobol()?;
    let depth = &indices[Output::ALL
        .iter()
        .position(|o| *o == Output::Depth)
        .unwrap()];
    checks.push(at_least(
        &format!(
            "depth surrogate S1 {:.3?}: S1(P) + S1(v)",
            depth.first_order
        ),
        depth.first_order[0] + depth.first_order[1],
        0.8,
    ));
    Ok(checks)
}

// ---- 10

fn thermal_numerics(p: &Pipeline) -> Result<Vec<Check>> {
    let c = p.config();
    let lf = |nodes| EagarTsai::new(c.material.clone(), c.laser.clone(), nodes);
    let hf = |nodes| {
        PowderFedModel::new(
            c.material.clone(),
            c.laser.clone(),
            c.coupling.clone(),
            nodes,
        )
    };
    let (lf1, lf2, hf1, hf2) = (
        lf(c.quadrature_nodes)?,
        lf(2 * c.quadrature_nodes)?,
        hf(c.quadrature_nodes)?,
        hf(2 * c.quadrature_nodes)?,
    );
    let grid = &c.grid;
    let fine = grid.refined();
    let rel = |a: f64, b: f64| (a - b).abs() / b;

    let (mut nodes_worst, mut grid_worst): (f64, f64) = (0.0, 0.0);
    for x in full_factorial(&ParameterWindow::lf(), &[2, 2])?.points {
        let i = LfInput::from_window_units(&x)?;
        let base = melt_pool_geometry(&lf1, &i, grid)?;
        let n = melt_pool_geometry(&lf2, &i, grid)?;
        let g = melt_pool_geometry(&lf1, &i, &fine)?;
        nodes_worst = nodes_worst
            .max(rel(n.depth, base.depth))
            .max(rel(n.width, base.width));
        grid_worst = grid_worst
            .max(rel(g.depth, base.depth))
            .max(rel(g.width, base.width));
    }
    let window = ParameterWindow::hf();
    let mut hf_points = vec![window.midpoint()];
    hf_points.extend(lhs_sample(&window, 3, 5)?.points);
    for x in &hf_points {
        let i = HfInput::from_window_units(x)?;
        let base = melt_pool_geometry(&hf1, &i, grid)?;
        let n = melt_pool_geometry(&hf2, &i, grid)?;
        let g = melt_pool_geometry(&hf1, &i, &fine)?;
        nodes_worst = nodes_worst
            .max(rel(n.depth, base.depth))
            .max(rel(n.width, base.width));
        grid_worst = grid_worst
            .max(rel(g.depth, base.depth))
            .max(rel(g.width, base.width));
    }

    let ambient = c.material.ambient_temperature;
    let points = [
        [0.0, 0.0, 0.0],
        [-1e-3, 4e-4, -2e-4],
        [5e-4, 1.2e-3, 0.0],
        [-3e-3, -7e-4, -1e-3],
    ];
    let lf_cold = LfInput::from_window_units(&[0.0, 5.0])?;
    let hf_cold = HfInput::from_window_units(&[0.0, 5.0, 5.0, 3.5, 5.0])?;
    let mut cold_ok = true;
    for pt in points {
        cold_ok &=
            lf1.temperature(pt, &lf_cold)? == ambient && hf1.temperature(pt, &hf_cold)? == ambient;
    }
    let lf_hot = LfInput::from_window_units(&window.midpoint())?;
    let hf_hot = HfInput::from_window_units(&window.midpoint())?;
    let mut asym: f64 = 0.0;
    for pt in &points[1..] {
        let mirror = [pt[0], -pt[1], pt[2]];
        let a = lf1.temperature(*pt, &lf_hot)?;
        asym = asym.max((a - lf1.temperature(mirror, &lf_hot)?).abs() / a);
        let a = hf1.temperature(*pt, &hf_hot)?;
        asym = asym.max((a - hf1.temperature(mirror, &hf_hot)?).abs() / a);
    }
    Ok(vec![
        at_most(
            "node doubling, max relative change in depth/width",
            nodes_worst,
            0.01,
        ),
        at_most(
            "grid halving, max relative change in depth/width",
            grid_worst,
            0.01,
        ),
        holds(
            format!("P = 0 gives T₀ = {ambient} K exactly at every probe"),
            cold_ok,
        ),
        at_most("y-mirror relative asymmetry", asym, 1e-12),
    ])
}

type Criterion<'a> = Box<dyn Fn() -> Result<Vec<Check>> + 'a>;

fn main() -> ExitCode {
    let _ = env_logger::builder().is_test(true).try_init();
    let p = match pipeline() {
        Ok(p) => p,
        Err(e) => {
            println!("[FAIL] cannot set up the acceptance run: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<(&str, Criterion)> = vec![
        ("metric exactness", Box::new(metric_exactness)),
        ("LF calibration", Box::new(|| lf_calibration(&p))),
        (
            "correlation fingerprint",
            Box::new(|| correlation_fingerprint(&p)),
        ),
        ("fusion benefit", Box::new(|| fusion_benefit(&p))),
        ("sweep trends", Box::new(|| sweep_trends(&p))),
        ("IMC recovery", Box::new(imc_recovery)),
        ("co-kriging sanity", Box::new(cokriging_sanity)),
        ("GP suite", Box::new(|| gp_suite(&p))),
        ("Sobol suite", Box::new(|| sobol_suite(&p))),
        ("thermal numerics", Box::new(|| thermal_numerics(&p))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(checks) => {
                let ok = checks.iter().all(|c| c.ok);
                failed += usize::from(!ok);
                println!(
                    "[{}] {:>2}. {name} ({secs:.1} s)",
                    if ok { "PASS" } else { "FAIL" },
                    i + 1
                );
                for c in checks {
                    println!("       {} {}", if c.ok { "ok  " } else { "MISS" }, c.line);
                }
            }
            Err(e) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name} ({secs:.1} s): {e:#}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
