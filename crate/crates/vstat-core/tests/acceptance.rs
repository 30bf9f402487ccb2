//! Acceptance gate: every criterion the library promises, run at its stated
//! budget and tolerance. Each test prints one pass/fail line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::f64::consts::PI;
use std::sync::Arc;
use vstat_core::bounds::{self, VariantInput};
use vstat_core::experiments::{
    calibrate_c, dominance_check, rff_convergence_study, scaling_study, ExperimentConfig,
    Pipeline, XGridConfig,
};
use vstat_core::hoeffding::{self, Marginal};
use vstat_core::kernels::{polar_constant, KernelSpec};
use vstat_core::mixing::{alpha_lower_bound, generate_path, ProcessKind, ProcessSpec};
use vstat_core::quadrature;
use vstat_core::report::{ArtifactMeta, CsvTable};
use vstat_core::rff::{build_expansion, decompose_sign_measure, ApproxBudget};
use vstat_core::vstat::{combined_centered_vstat, v_features, v_naive};

fn pass(id: u32, label: &str) {
    println!("criterion {id:02} ({label}): PASS");
}

/// Criterion 1: Feature-route V_k equals naive enumeration within relative 1e-10 for
/// m = 2, p in {1, 2}, n <= 50, over 100 seeds.
#[test]
fn criterion_01_oracle_equivalence() {
    let spec = KernelSpec::gaussian(2, 1);
    let process = ProcessSpec::new(ProcessKind::Ar1 { rho: 0.3 }, 1).unwrap();
    let marginal = Marginal::StandardNormal { d: 1 };
    for seed in 0..100u64 {
        let budget = ApproxBudget::proportional(32, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let exp = Arc::new(build_expansion(&spec, &budget, 7 + seed).unwrap());
        let n = 10 + (seed as usize % 41); // 10..=50
        let path = generate_path(&process, n, 5000 + seed).unwrap();
        for p in [1usize, 2] {
            let comp = hoeffding::tensor_component(exp.clone(), &marginal, p, 2000, seed).unwrap();
            let (feat, _) = v_features(&comp, &path).unwrap();
            let naive = v_naive(&comp, &path).unwrap();
            let scale = naive.values.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
            for (a, b) in feat.values.iter().zip(&naive.values) {
                assert!(
                    (a - b).abs() <= 1e-10 * scale,
                    "seed {seed} p {p}: {a} vs {b}"
                );
            }
        }
    }
    pass(1, "oracle equivalence of feature and naive V_k");
}

/// Criterion 2: Every f_p with p >= 2 passes the 3-stderr degeneracy check at 5
/// support-grid points with N = 1e5 Monte Carlo draws, for the gaussian
/// and laplacian kernels under point-mass and standard-normal marginals.
#[test]
fn criterion_02_degeneracy() {
    for spec in [KernelSpec::gaussian(2, 1), KernelSpec::laplacian(2, 1)] {
        for marginal in [
            Marginal::PointMass(vec![0.0]),
            Marginal::StandardNormal { d: 1 },
        ] {
            let kernel = Arc::new(spec.clone());
            let f2 = hoeffding::component(kernel, &marginal, 2, 500, 11).unwrap();
            let grid: Vec<Vec<Vec<f64>>> = match &marginal {
                Marginal::PointMass(atom) => vec![vec![atom.clone()]; 5],
                _ => [-2.0f64, -1.0, 0.0, 1.0, 2.0]
                    .iter()
                    .map(|&x| vec![vec![x]])
                    .collect(),
            };
            let rep =
                hoeffding::check_degeneracy(&f2, &marginal, &grid, 100_000, 13, 3.0).unwrap();
            assert!(
                rep.all_pass,
                "{} under {marginal:?}: {:?}",
                spec.name(),
                rep.rows
                    .iter()
                    .map(|r| (r.estimate, r.stderr))
                    .collect::<Vec<_>>()
            );
        }
    }
    pass(2, "degeneracy of every level-2 component at 3 stderr");
}

/// Criterion 3: Bochner identity: quadrature of |fhat0| matches f0(0) within 1e-3
/// for the gaussian, cauchy, laplacian, and hat bases.
#[test]
fn criterion_03_bochner_identity() {
    for (spec, f0_at_zero) in [
        (KernelSpec::gaussian(2, 1), 1.0),
        (KernelSpec::cauchy(2, 1), 2.0),
        (KernelSpec::laplacian(2, 1), 1.0),
        (KernelSpec::hat(2, 1), 1.0),
    ] {
        let mass = quadrature::integrate(
            |u| spec.transform_factor(u).norm(),
            -3000.0,
            3000.0,
            1e-9,
        )
        .unwrap();
        assert!(
            (mass - f0_at_zero).abs() < 1e-3,
            "{}: {mass} vs {f0_at_zero}",
            spec.name()
        );
    }
    pass(3, "Bochner identity |fhat0| mass = f0(0) within 1e-3");
}

/// Criterion 4: Uniform approximation: gaussian m = 2, d = 1, box M = 2 — the median
/// sup-grid error over 20 seeds is <= 0.05 at 4000 total features, and the
/// log-log error slope over D in {250, 1000, 4000, 16000} lies in
/// [-0.65, -0.35].
#[test]
fn criterion_04_rff_uniform_approximation() {
    let spec = KernelSpec::gaussian(2, 1);
    let builder = |d: usize, seed: u64| {
        let budget = ApproxBudget::proportional(d, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        build_expansion(&spec, &budget, seed)
    };
    let report = rff_convergence_study(
        &spec,
        &builder,
        &[250, 1000, 4000, 16000],
        2.0,
        20,
        424242,
        41,
    )
    .unwrap();
    let at_4000 = report
        .rows
        .iter()
        .find(|r| r.features == 4000)
        .unwrap()
        .median_error;
    assert!(at_4000 <= 0.05, "median error at D=4000: {at_4000}");
    assert!(
        (-0.65..=-0.35).contains(&report.slope),
        "slope {}",
        report.slope
    );
    pass(4, "uniform approximation level and Monte Carlo rate");
}

/// Criterion 5: Expansion budget: every built expansion keeps its coefficient mass
/// below 2^m ||fhat||_{L1} + 1e-9 with bases bounded by 1.
#[test]
fn criterion_05_expansion_budget() {
    for spec in [
        KernelSpec::gaussian(2, 1),
        KernelSpec::cauchy(2, 1),
        KernelSpec::laplacian(2, 1),
        KernelSpec::hat(2, 1),
        KernelSpec::cosine(2, 1),
        KernelSpec::gaussian(3, 1),
    ] {
        let parts = decompose_sign_measure(&spec).unwrap();
        for seed in [1u64, 2, 3] {
            let budget = ApproxBudget::proportional(64, &parts.masses).unwrap();
            let exp = build_expansion(&spec, &budget, seed).unwrap();
            assert!(
                exp.coefficient_sum() <= exp.coefficient_budget + 1e-9,
                "{} seed {seed}",
                spec.name()
            );
            assert_eq!(exp.basis_bound, 1.0);
            for x in [-7.3f64, 0.4, 19.0] {
                for b in exp.bases.iter().take(16) {
                    assert!(b.eval(&[x]).abs() <= 1.0 + 1e-15);
                }
            }
        }
    }
    pass(5, "coefficient budget F <= 2^m l1 and unit basis bound");
}

/// Criterion 6: Concentration scaling, iid standard-normal data, gaussian kernel:
/// max/min over n in {128, 256, 512} of n median(T_2) <= 2 and of
/// sqrt(n) median(T_1) <= 2, at R = 500.
#[test]
fn criterion_06_concentration_scaling() {
    let cfg = ExperimentConfig::from_json(
        r#"{"kernel":"gaussian","process":"iid-normal","m":2,
            "nList":[128,256,512],"R":500,"seed":2026,"D":256,
            "meanSamples":200000}"#,
    )
    .unwrap();
    let pipeline = Pipeline::build(&cfg).unwrap();
    for p in [2usize, 1] {
        let report = scaling_study(&pipeline, p, &[128, 256, 512], 500).unwrap();
        assert!(
            report.spread <= 2.0,
            "p = {p}: scaled medians {:?} spread {}",
            report
                .rows
                .iter()
                .map(|r| r.scaled_median)
                .collect::<Vec<_>>(),
            report.spread
        );
    }
    pass(6, "n^{-p/2} concentration scale for p = 1, 2");
}

/// Criterion 7: Calibrated dominance: C calibrated at n = 256 (R = 2000) yields a
/// curve that dominates a fresh empirical tail at n = 512 at every grid
/// point, for the iid and ar1(0.5) processes.
#[test]
fn criterion_07_calibrated_dominance() {
    for process in ["iid-normal", r#"{"kind":"ar1","rho":0.5}"#] {
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"kernel":"gaussian","process":{},"m":2,"p":2,
                "nList":[256,512],"R":2000,"seed":90125,"D":256,
                "meanSamples":200000}}"#,
            if process.starts_with('{') {
                process.to_string()
            } else {
                format!("\"{process}\"")
            }
        ))
        .unwrap();
        let pipeline = Pipeline::build(&cfg).unwrap();
        let calibration_tail = pipeline
            .empirical_tail(2, 256, 2000, &XGridConfig::Auto("auto".into()))
            .unwrap();
        let bc_256 = bounds::constants_for(
            VariantInput::PositiveDefinite { base_at_zero: 1.0 },
            2,
            256,
            &pipeline.mixing,
        )
        .unwrap();
        let cal = calibrate_c(&calibration_tail, &bc_256).unwrap();
        assert!(cal.c_star > 0.0 && !cal.capped);
        if process == "iid-normal" {
            // regression value pinned with this seed (90125)
            assert!(
                (cal.c_star - 1.342288542459759e3).abs() / 1.342288542459759e3 < 1e-6,
                "C* drifted: {}",
                cal.c_star
            );
        }

        let fresh_tail = pipeline
            .empirical_tail(2, 512, 2000, &XGridConfig::Auto("auto".into()))
            .unwrap();
        let bc_512 = bounds::constants_for(
            VariantInput::PositiveDefinite { base_at_zero: 1.0 },
            2,
            512,
            &pipeline.mixing,
        )
        .unwrap()
        .with_c(cal.c_star);
        let dom = dominance_check(&fresh_tail, &bc_512).unwrap();
        assert!(
            dom.pass,
            "{process}: C* = {} failed at {:?}",
            cal.c_star,
            dom.rows
                .iter()
                .filter(|r| r.bound < r.phat)
                .map(|r| (r.x, r.phat, r.bound))
                .collect::<Vec<_>>()
        );
    }
    pass(7, "calibrated curve dominates a fresh tail at doubled n");
}

/// Criterion 8: The combined centered statistic stays below the binomial-weighted
/// sum of per-level maximal statistics on every tested path (m = 2, 50
/// paths).
#[test]
fn criterion_08_combined_bound() {
    let spec = KernelSpec::gaussian(2, 1);
    let budget = ApproxBudget::proportional(48, &[1.0, 0.0, 0.0, 0.0]).unwrap();
    let exp = Arc::new(build_expansion(&spec, &budget, 33).unwrap());
    let marginal = Marginal::StandardNormal { d: 1 };
    let decomp = hoeffding::decompose_tensor(exp, &marginal, 50_000, 17).unwrap();
    let process = ProcessSpec::new(ProcessKind::Ar1 { rho: 0.5 }, 1).unwrap();
    for seed in 0..50u64 {
        let path = generate_path(&process, 30, 31_000 + seed).unwrap();
        let combined = combined_centered_vstat(&decomp, &path, Some(1)).unwrap();
        assert!(
            combined.statistic <= combined.bound + 1e-9 * (1.0 + combined.bound),
            "seed {seed}: {} > {}",
            combined.statistic,
            combined.bound
        );
    }
    pass(8, "combined centered statistic below its binomial bound");
}

/// Criterion 9: Mollifier: the damped-product transform matches quadrature of the
/// space-domain convolution within 1e-6 at 21 frequencies, and the sup
/// distance to the base decreases when h halves.
#[test]
fn criterion_09_mollifier() {
    let spec = KernelSpec::gaussian(2, 1);
    let h = 0.5;
    let mk = spec.mollify(h).unwrap();
    for i in 0..21 {
        let u = -1.0 + 0.1 * i as f64;
        let analytic = spec.transform_factor(u).re * (-2.0 * PI * PI * h * h * u * u).exp();
        // the integrand carries the inner convolution's ~1e-10 noise, so
        // the outer tolerance stays two decades above it
        let quad = quadrature::integrate(
            |x| mk.base_eval(&[x]) * (-2.0 * PI * u * x).cos(),
            -12.0,
            12.0,
            1e-8,
        )
        .unwrap();
        assert!(
            (analytic - quad).abs() < 1e-6,
            "u = {u}: {analytic} vs {quad}"
        );
    }
    let sup_distance = |h: f64| {
        let mk = spec.mollify(h).unwrap();
        let mut worst = 0.0f64;
        for i in 0..61 {
            let x = -3.0 + 0.1 * i as f64;
            worst = worst.max((mk.base_eval(&[x]) - spec.base_eval(&[x])).abs());
        }
        worst
    };
    assert!(sup_distance(0.25) < sup_distance(0.5));
    pass(9, "mollifier transform identity and contraction in h");
}

/// Criterion 10: Mixing oracle: the two-state chain at q = 0.1 gives the exact
/// enumeration value 0.2 at gap 1, depth 1, and the documented envelope
/// gamma1 e^{-gamma2 i} dominates the enumerated lower bounds for
/// i = 1..6.
#[test]
fn criterion_10_mixing_oracle() {
    let spec = ProcessSpec::new(ProcessKind::TwoStateChain { q: 0.1 }, 1).unwrap();
    let lb = alpha_lower_bound(&spec, 1, 1).unwrap();
    assert!((lb - 0.2).abs() < 1e-12, "alpha lower bound {lb}");
    for i in 1..=6usize {
        let lb = alpha_lower_bound(&spec, i, 2).unwrap();
        let envelope = spec.gamma1 * (-spec.gamma2 * i as f64).exp();
        assert!(lb <= envelope + 1e-12, "i = {i}: {lb} > {envelope}");
    }
    pass(10, "exact mixing lower bound and envelope domination");
}

/// Criterion 11: Constant formulas match independently computed values to 6
/// significant digits, and the polar constants are exact.
#[test]
fn criterion_11_constant_formulas() {
    let mixing = bounds::MixingConstants::new(1.0, 1.0).unwrap();
    let bc = bounds::constants_for(
        VariantInput::PositiveDefinite { base_at_zero: 1.0 },
        1,
        1000,
        &mixing,
    )
    .unwrap();
    // independent high-precision evaluations: 912.205657166167,
    // 95.4341659886112
    assert!(
        (bc.a - 912.205657166167).abs() / 912.205657166167 < 5e-7,
        "A = {}",
        bc.a
    );
    assert!(
        (bc.m_const - 95.4341659886112).abs() / 95.4341659886112 < 5e-7,
        "M = {}",
        bc.m_const
    );
    assert_eq!(polar_constant(1).unwrap(), 2.0);
    assert_eq!(polar_constant(2).unwrap(), 2.0 * PI);
    assert_eq!(polar_constant(3).unwrap(), 4.0 * PI);
    pass(11, "pinned constants to 6 significant digits");
}

/// Criterion 12: Determinism: re-running an experiment end to end produces
/// byte-identical CSV artifacts.
#[test]
fn criterion_12_determinism() {
    let cfg_text = r#"{"kernel":"gaussian","process":"iid-normal","m":2,"p":2,
        "nList":[64],"R":80,"seed":31337,"D":64,"meanSamples":5000}"#;
    let render = || {
        let cfg = ExperimentConfig::from_json(cfg_text).unwrap();
        let pipeline = Pipeline::build(&cfg).unwrap();
        let tail = pipeline
            .empirical_tail(2, 64, 80, &XGridConfig::Auto("auto".into()))
            .unwrap();
        let bc = bounds::constants_for(
            VariantInput::PositiveDefinite { base_at_zero: 1.0 },
            2,
            64,
            &pipeline.mixing,
        )
        .unwrap();
        let meta = ArtifactMeta::new(&cfg.canonical_json(), cfg.seed);
        let mut table = CsvTable::new(&["x", "phat", "wilsonLo", "wilsonHi", "bound"]);
        for (i, &x) in tail.xs.iter().enumerate() {
            table.push_row(vec![
                vstat_core::report::format_float(x),
                vstat_core::report::format_float(tail.phat[i]),
                vstat_core::report::format_float(tail.wilson_lo[i]),
                vstat_core::report::format_float(tail.wilson_hi[i]),
                vstat_core::report::format_float(bounds::tail_bound(&bc, x).unwrap()),
            ]);
        }
        table.render(&meta)
    };
    let first = render();
    let second = render();
    assert_eq!(first, second);
    assert!(first.starts_with("# config_hash="));
    pass(12, "byte-identical artifacts on re-run");
}
