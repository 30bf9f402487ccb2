//! Closed-form and cross-route oracles for the Hoeffding decomposition:
//! Gaussian conditional expectations, tensor vs Monte Carlo component
//! agreement, reconstruction of the kernel from its components, and
//! degeneracy of every level >= 2.

use std::sync::Arc;
use vstat_core::hoeffding::{
    basis_moments, check_degeneracy, component, decompose, tensor_component, theta, Marginal,
};
use vstat_core::kernels::{KernelSpec, SymmetricKernel};
use vstat_core::quadrature;
use vstat_core::rff::{build_expansion, decompose_sign_measure, ApproxBudget};

fn gaussian_expansion(features: usize, seed: u64) -> Arc<vstat_core::FeatureExpansion> {
    let spec = KernelSpec::gaussian(2, 1);
    let parts = decompose_sign_measure(&spec).unwrap();
    let budget = ApproxBudget::proportional(features, &parts.masses).unwrap();
    Arc::new(build_expansion(&spec, &budget, seed).unwrap())
}

/// theta of the gaussian kernel under the standard normal marginal is
/// 1/sqrt(3) (X - Y is normal with variance 2).
#[test]
fn theta_closed_form() {
    let g = Arc::new(KernelSpec::gaussian(2, 1));
    let marginal = Marginal::StandardNormal { d: 1 };
    let est = theta(g.as_ref(), &marginal, 400_000, 12).unwrap();
    let exact = 1.0 / 3.0f64.sqrt();
    assert!(
        (est.value - exact).abs() < 3.0 * est.stderr,
        "{} vs {exact} (se {})",
        est.value,
        est.stderr
    );
}

/// f1(x) = e^{-x^2/4}/sqrt(2) - 1/sqrt(3) for the gaussian kernel under
/// the standard normal marginal.
#[test]
fn first_component_closed_form() {
    let g = Arc::new(KernelSpec::gaussian(2, 1));
    let marginal = Marginal::StandardNormal { d: 1 };
    let f1 = component(g, &marginal, 1, 400_000, 4).unwrap();
    for x in [0.0f64, 1.0, 2.0] {
        let exact = (-x * x / 4.0).exp() / 2.0f64.sqrt() - 1.0 / 3.0f64.sqrt();
        let got = f1.eval(&[&[x]]);
        assert!(
            (got - exact).abs() < 3.0 * f1.stderr,
            "x={x}: {got} vs {exact} (se {})",
            f1.stderr
        );
    }
}

/// Tensor closed form against the Monte Carlo recursion on the same
/// expansion, at 50 grid points.
#[test]
fn tensor_and_recursion_agree() {
    let exp = gaussian_expansion(64, 9);
    let marginal = Marginal::StandardNormal { d: 1 };
    let tensor = tensor_component(exp.clone(), &marginal, 2, 60_000, 31).unwrap();
    let mc = component(exp.clone(), &marginal, 2, 60_000, 77).unwrap();
    let combined = (tensor.stderr * tensor.stderr + mc.stderr * mc.stderr).sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let x = [-2.0 + 4.0 * (i as f64) / 49.0];
        let y = [2.0 - 4.0 * (i as f64) / 49.0];
        let a = tensor.eval(&[&x, &y]);
        let b = mc.eval(&[&x, &y]);
        worst = worst.max((a - b).abs());
    }
    assert!(
        worst < 3.0 * combined.max(1e-3),
        "worst gap {worst}, combined se {combined}"
    );
}

/// Reconstruction: f(x1..xm) - theta = sum_p sum_subsets f_p at random
/// points; exact by construction of the recursion, so the tolerance is
/// floating-point, far inside the 5-stderr contract.
#[test]
fn reconstruction_m2_and_m3() {
    let marginal = Marginal::StandardNormal { d: 1 };
    for m in [2usize, 3] {
        let kernel = Arc::new(KernelSpec::gaussian(m, 1));
        let decomp = decompose(kernel.clone(), &marginal, 4000, 13).unwrap();
        let theta = decomp.theta.value;
        let mut rng_x = 0.37f64;
        for trial in 0..50 {
            // low-discrepancy-ish deterministic points in [-2, 2]
            let points: Vec<Vec<f64>> = (0..m)
                .map(|j| {
                    rng_x = (rng_x * 997.0 + 0.618 * (trial + j + 1) as f64).fract();
                    vec![4.0 * rng_x - 2.0]
                })
                .collect();
            let args: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
            let direct = kernel.eval_args(&args) - theta;
            let mut recon = 0.0;
            for p in 1..=m {
                let comp = decomp.component(p);
                for mask in 1usize..(1 << m) {
                    if mask.count_ones() as usize != p {
                        continue;
                    }
                    let sub: Vec<&[f64]> = (0..m)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| args[i])
                        .collect();
                    recon += comp.eval(&sub);
                }
            }
            assert!(
                (direct - recon).abs() < 1e-10 * (1.0 + direct.abs()),
                "m={m} trial {trial}: {direct} vs {recon}"
            );
        }
    }
}

/// Every computed component is symmetric in its arguments.
#[test]
fn component_symmetry() {
    let marginal = Marginal::StandardNormal { d: 1 };
    let kernel = Arc::new(KernelSpec::gaussian(3, 1));
    let f3 = component(kernel, &marginal, 3, 2000, 3).unwrap();
    let (a, b, c) = ([0.3], [-1.2], [0.9]);
    let v = f3.eval(&[&a, &b, &c]);
    for perm in [
        [&b[..], &a[..], &c[..]],
        [&c[..], &b[..], &a[..]],
        [&b[..], &c[..], &a[..]],
    ] {
        assert!((f3.eval(&perm) - v).abs() < 1e-10 * (1.0 + v.abs()));
    }
}

/// Degeneracy of f_2 under both marginals and kernels used by the
/// acceptance gate, at a smaller budget here.
#[test]
fn degeneracy_of_level_two() {
    for kernel in [KernelSpec::gaussian(2, 1), KernelSpec::laplacian(2, 1)] {
        for marginal in [
            Marginal::PointMass(vec![0.0]),
            Marginal::StandardNormal { d: 1 },
        ] {
            let k = Arc::new(kernel.clone());
            let f2 = component(k, &marginal, 2, 1000, 5).unwrap();
            let grid: Vec<Vec<Vec<f64>>> = [-2.0f64, -1.0, 0.0, 1.0, 2.0]
                .iter()
                .map(|&x| vec![vec![x]])
                .collect();
            let rep = check_degeneracy(&f2, &marginal, &grid, 20_000, 8, 3.0).unwrap();
            assert!(
                rep.all_pass,
                "{} under {marginal:?}: {:?}",
                kernel.name(),
                rep.rows
                    .iter()
                    .map(|r| (r.estimate, r.stderr))
                    .collect::<Vec<_>>()
            );
        }
    }
}

/// Basis moments: bounded by 1 for trigonometric bases, equal to 1 when a
/// constant basis is present, and matching a quadrature oracle for the
/// gaussian expansion under the standard normal marginal.
#[test]
fn basis_moment_oracles() {
    let exp = gaussian_expansion(16, 21);
    let marginal = Marginal::StandardNormal { d: 1 };
    for a in [1.0, 3.0] {
        let mu = basis_moments(&exp, &marginal, a, 50_000, 3).unwrap();
        assert!(mu.value <= 1.0 + 3.0 * mu.stderr + 1e-9);
    }

    // constant (zero-frequency cosine) basis forces mu_a = 1
    let mut with_const = (*exp).clone();
    with_const.bases.push(vstat_core::rff::TrigBasis {
        trig: vstat_core::rff::Trig::Cos,
        freq: vec![0.0],
    });
    let mu = basis_moments(&with_const, &marginal, 1.0, 10_000, 3).unwrap();
    assert!((mu.value - 1.0).abs() < 1e-12);

    // quadrature oracle for E |cos(2 pi u X)| on one basis
    let u = match exp.bases.first() {
        Some(b) => b.freq[0],
        None => unreachable!(),
    };
    let oracle = quadrature::integrate(
        |x| {
            let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            (2.0 * std::f64::consts::PI * u * x).cos().abs() * density
        },
        -10.0,
        10.0,
        1e-10,
    )
    .unwrap();
    let draws = marginal.draw_many(200_000, 77);
    let mc: f64 = draws
        .iter()
        .map(|x| (2.0 * std::f64::consts::PI * u * x[0]).cos().abs())
        .sum::<f64>()
        / draws.len() as f64;
    assert!(
        (mc - oracle).abs() < 3.0 * 1.0 / (200_000f64).sqrt() + 1e-3,
        "mc {mc} vs quadrature {oracle}"
    );
}

/// Degeneracy detection: a fully nondegenerate kernel reports r = 1; the
/// explicit-level override threads through the combined statistic.
#[test]
fn degeneracy_level_detection() {
    let marginal = Marginal::StandardNormal { d: 1 };
    let kernel = Arc::new(KernelSpec::gaussian(2, 1));
    let decomp = decompose(kernel, &marginal, 2000, 3).unwrap();
    assert_eq!(decomp.degeneracy_level, 1);
    let summary = decomp.to_summary();
    assert_eq!(summary["degeneracyLevel"], 1);
    assert!(summary["components"].as_array().unwrap().len() == 2);
}
