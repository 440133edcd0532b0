//! IMC on HF data manufactured as LF ∘ (A*, b*), where the true map is known.

use hetmfgp::doe::{lhs_sample, ParameterWindow};
use hetmfgp::gp::{GpModel, InputScaler, KernelParams, Standardizer};
use hetmfgp::imc::{apply_map, fit_imc, AffineMap, ImcConfig, ImcData, ImcResult};
use hetmfgp::Output;

fn lf_truth(u: &[f64]) -> f64 {
    2.0 + u[0] - 0.6 * u[1] + 0.4 * u[0] * u[1] + 0.3 * (2.0 * u[0]).sin()
}

fn surrogate() -> GpModel {
    let x: Vec<Vec<f64>> = (0..64)
        .map(|i| vec![(i % 8) as f64 / 7.0, (i / 8) as f64 / 7.0])
        .collect();
    let y: Vec<f64> = x.iter().map(|u| lf_truth(u)).collect();
    GpModel::with_params(
        &x,
        &y,
        InputScaler::identity(2),
        Standardizer::fit(&y),
        KernelParams {
            signal_variance: 1.0,
            lengthscales: vec![0.8, 0.8],
            nugget: 1e-10,
        },
    )
    .unwrap()
}

fn true_map() -> AffineMap {
    AffineMap {
        output: Output::Depth,
        a: vec![
            vec![0.8, 0.1, 0.15, -0.1, 0.05],
            vec![0.05, 0.9, -0.1, 0.0, 0.1],
        ],
        b: vec![0.03, -0.02],
    }
}

struct Problem {
    gp: GpModel,
    scaler: InputScaler,
    train: ImcData,
    test_x: Vec<Vec<f64>>,
    test_y: Vec<f64>,
}

fn problem() -> Problem {
    let gp = surrogate();
    let window = ParameterWindow::hf();
    let scaler = InputScaler::from_window(&window);
    let truth = true_map();
    let hf = |n: usize, seed: u64| {
        let x = lhs_sample(&window, n, seed).unwrap().points;
        let y: Vec<f64> = x
            .iter()
            .map(|r| {
                gp.standardizer()
                    .inverse(gp.mean_scaled(&truth.apply(&scaler.scale(r))))
            })
            .collect();
        (x, y)
    };
    let (x, y) = hf(30, 1);
    let train = ImcData::new(&x, &y, &scaler, &gp).unwrap();
    let (test_x, test_y) = hf(50, 2);
    Problem {
        gp,
        scaler,
        train,
        test_x,
        test_y,
    }
}

fn fit(p: &Problem, lambda: f64) -> ImcResult {
    let config = ImcConfig {
        lambda,
        seed: 7,
        ..ImcConfig::default()
    };
    fit_imc(&p.train, &p.gp, Output::Depth, &config).unwrap()
}

fn assert_monotone(r: &ImcResult) {
    assert!(!r.trace.best_loss.is_empty());
    for w in r.trace.best_loss.windows(2) {
        assert!(
            w[1] <= w[0],
            "best-so-far loss rose from {} to {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn recovers_a_known_map() {
    let p = problem();
    let r = fit(&p, 0.0);
    assert_monotone(&r);
    assert!(r.final_loss <= 1e-4, "standardised loss {}", r.final_loss);

    let unit: Vec<Vec<f64>> = p.test_x.iter().map(|x| p.scaler.scale(x)).collect();
    let mapped = apply_map(&r.map, &unit).unwrap();
    let worst = mapped
        .iter()
        .zip(&p.test_y)
        .map(|(g, y)| ((p.gp.standardizer().inverse(p.gp.mean_scaled(g)) - y) / y).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "worst held-out relative error {worst}");
}

#[test]
fn larger_lambda_pulls_toward_the_nominal_map() {
    let p = problem();
    let mut last = f64::INFINITY;
    for lambda in [0.0, 1e-3, 1e-2, 1e-1, 1.0, 1e6] {
        let r = fit(&p, lambda);
        assert_monotone(&r);
        let d = r.map.distance(&r.nominal);
        assert!(d <= last + 1e-6, "λ = {lambda}: distance {d} after {last}");
        last = d;
    }
    assert!(last <= 1e-3, "λ = 1e6 leaves the map {last} from nominal");
}
