//! Protocol-level behavior beyond the acceptance gate: reconstruction
//! quality, the support-detection variant, and the unrolled forward pass
//! on their reference ensembles.

use ndarray::Array2;
use rfn_csc::dictionary::{build_dictionary, ricker};
use rfn_csc::metrics::{reconstruction_score, support_corr};
use rfn_csc::rfn::RfnKernel;
use rfn_csc::solvers::{
    rfn_support_detect, solve_image, unrolled_forward, AmplitudeMode, BetaSchedule, SolverConfig,
    SolverKind, TauSchedule, UnrolledLayer,
};
use rfn_csc::synthgen::{
    gen_reflectivity, gen_traces, table1_rows_default, ReflectivityModel, SAMPLE_INTERVAL,
};

const W0: f64 = 80.0 * std::f64::consts::PI;

#[test]
fn reconstruction_score_on_reference_row() {
    let rows = table1_rows_default();
    let row = &rows[0];
    let model = ReflectivityModel {
        p: row.p,
        sigma_r: 3.0,
        mu_r: 0.0,
        delta_k: row.delta_k(),
        l_x: 60,
        j: 300,
        seed: 20240711,
    };
    let x = gen_reflectivity(&model).unwrap();
    let d = build_dictionary(vec![ricker(row.omega0, SAMPLE_INTERVAL).unwrap()], 60).unwrap();
    let y = gen_traces(&x, &d, None).unwrap();
    let mut cfg = SolverConfig::new(
        BetaSchedule::new(vec![row.beta1, row.beta2], 0.5).unwrap(),
        TauSchedule::new(row.tau.clone()).unwrap(),
        RfnKernel::gaussian(row.l_h, row.sigma_h).unwrap(),
    )
    .unwrap();
    cfg.amplitude_mode = AmplitudeMode::LeastSquares;
    let solved = solve_image(&y, &d, &cfg, SolverKind::RfnIta).unwrap();
    let rho_y = reconstruction_score(&y, &d, &solved.x).unwrap();
    assert!(rho_y >= 0.99, "reconstruction correlation {rho_y}");
}

#[test]
fn support_detect_exact_on_separated_spikes() {
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    let d = build_dictionary(vec![ricker(W0, SAMPLE_INTERVAL).unwrap()], 60).unwrap();
    let l_s = 2 * d.l_d - 1;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(88);
    let mut cfg = SolverConfig::new(
        BetaSchedule::new(vec![0.95], 0.5).unwrap(),
        TauSchedule::new(vec![1e-6]).unwrap(),
        RfnKernel::rectangular(d.l_d).unwrap(),
    )
    .unwrap();
    cfg.amplitude_mode = AmplitudeMode::SupportOnly;
    cfg.max_iters = 1;
    for _ in 0..100 {
        let mut x = Array1::zeros(60);
        let mut pos: Vec<usize> = vec![];
        for _ in 0..100 {
            if pos.len() >= 3 {
                break;
            }
            let c = rng.gen_range(0..60usize);
            if pos.iter().all(|&q| q.abs_diff(c) >= l_s) {
                pos.push(c);
            }
        }
        for &p in &pos {
            let ratio = 10f64.powf(rng.gen_range(-3.0..=0.0));
            x[p] = 3.0 * ratio * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        let y = d.apply(x.view()).unwrap();
        let run = rfn_support_detect(y.view(), &d, &cfg).unwrap();
        let got: Vec<usize> = (0..60).filter(|&k| run.x[k] != 0.0).collect();
        let mut want = pos.clone();
        want.sort_unstable();
        assert_eq!(got, want);
    }
}

#[test]
fn support_detect_ensemble_scores() {
    let model = ReflectivityModel {
        p: 0.1,
        sigma_r: 3.0,
        mu_r: 0.0,
        delta_k: 5,
        l_x: 60,
        j: 400,
        seed: 31,
    };
    let x = gen_reflectivity(&model).unwrap();
    let d = build_dictionary(vec![ricker(W0, SAMPLE_INTERVAL).unwrap()], 60).unwrap();
    let y = gen_traces(&x, &d, None).unwrap();

    // fixed-parameter single detection pass
    let mut cfg = SolverConfig::new(
        BetaSchedule::new(vec![0.95], 0.5).unwrap(),
        TauSchedule::new(vec![0.25, 1.0]).unwrap(),
        RfnKernel::gaussian(11, 2.0).unwrap(),
    )
    .unwrap();
    cfg.amplitude_mode = AmplitudeMode::SupportOnly;
    cfg.max_iters = 1;
    let mut xh = Array2::zeros((60, 400));
    for j in 0..400 {
        let run = rfn_support_detect(y.column(j), &d, &cfg).unwrap();
        xh.column_mut(j).assign(&run.x);
    }
    let single_pass = support_corr(&x, &xh).unwrap();
    assert!(
        single_pass >= 0.84,
        "single-pass support score {single_pass}"
    );

    // the two-threshold schedule of the learned variant runs much cruder
    // without trained kernels
    let mut cfg2 = cfg.clone();
    cfg2.beta = BetaSchedule::new(vec![0.90, 0.57], 0.5).unwrap();
    cfg2.max_iters = 2;
    let mut xh2 = Array2::zeros((60, 400));
    for j in 0..400 {
        let run = rfn_support_detect(y.column(j), &d, &cfg2).unwrap();
        xh2.column_mut(j).assign(&run.x);
    }
    let two_pass = support_corr(&x, &xh2).unwrap();
    assert!(two_pass >= 0.5, "two-pass support score {two_pass}");
}

#[test]
fn unrolled_two_layer_support_on_sparse_ensemble() {
    let unit = build_dictionary(
        vec![ricker(W0, SAMPLE_INTERVAL).unwrap().normalized().unwrap()],
        60,
    )
    .unwrap();
    let model = ReflectivityModel {
        p: 0.02,
        sigma_r: 3.0,
        mu_r: 0.0,
        delta_k: 5,
        l_x: 60,
        j: 600,
        seed: 92,
    };
    let x = gen_reflectivity(&model).unwrap();
    let y = gen_traces(&x, &unit, None).unwrap();
    // hand-set gains: the first layer's step compensates the soft-gate
    // margin times the unit-norm kernel's center value
    let layers = [
        UnrolledLayer {
            dict: unit.clone(),
            beta: 0.90,
            step: 4.04,
        },
        UnrolledLayer {
            dict: unit.clone(),
            beta: 0.57,
            step: 0.5,
        },
    ];
    let kernel = RfnKernel::gaussian(11, 2.0).unwrap();
    let tau = TauSchedule::new(vec![0.25, 1.0]).unwrap();
    let mut xh = Array2::zeros((60, 600));
    for j in 0..600 {
        let out = unrolled_forward(y.column(j), &layers, &kernel, &tau).unwrap();
        xh.column_mut(j).assign(&out);
    }
    let score = support_corr(&x, &xh).unwrap();
    assert!(score >= 0.90, "unrolled support score {score}");
}
