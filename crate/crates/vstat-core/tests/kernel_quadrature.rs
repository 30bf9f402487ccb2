//! Quadrature cross-checks on the kernel catalog: the Bochner identity,
//! transform conventions, mollifier identities, moment monotonicity in the
//! truncation range, and the Fourier tail condition.

use std::f64::consts::PI;
use vstat_core::kernels::KernelSpec;
use vstat_core::quadrature;

/// For every PD base, quadrature of |fhat0| equals f0(0): the library's
/// l1 value is the analytic shortcut and the quadrature here is the oracle.
#[test]
fn bochner_identity_by_quadrature() {
    for (spec, f0_at_zero) in [
        (KernelSpec::gaussian(2, 1), 1.0),
        (KernelSpec::cauchy(2, 1), 2.0),
        (KernelSpec::laplacian(2, 1), 1.0),
        (KernelSpec::hat(2, 1), 1.0),
    ] {
        let mass = quadrature::integrate(
            |u| spec.transform_factor(u).norm(),
            -2000.0,
            2000.0,
            1e-9,
        )
        .unwrap();
        assert!(
            (mass - f0_at_zero).abs() < 1e-3,
            "{}: quadrature {mass} vs f0(0) = {f0_at_zero}",
            spec.name()
        );
        assert!((spec.fourier_l1_norm().unwrap() - f0_at_zero).abs() < 1e-9);
    }
}

/// The registered analytic transforms equal direct quadrature of
/// f0(x) e^{-2 pi i u x} at several frequencies (convention check).
#[test]
fn transforms_match_direct_quadrature() {
    // per-kernel truncation: the cauchy base decays like 1/x^2, so its
    // direct integral needs a wide range and a looser tolerance (the tail
    // beyond R contributes ~ 4/R at u = 0)
    for (spec, range, tol) in [
        (KernelSpec::gaussian(2, 1), 60.0, 1e-5),
        (KernelSpec::cauchy(2, 1), 4000.0, 2e-3),
        (KernelSpec::laplacian(2, 1), 60.0, 1e-5),
        (KernelSpec::hat(2, 1), 2.0, 1e-8),
        (KernelSpec::cosine(2, 1), 2.0, 1e-8),
    ] {
        for u in [0.0, 0.17, 0.5, 1.3] {
            let direct = quadrature::integrate(
                |x| spec.base_eval(&[x]) * (-2.0 * PI * u * x).cos(),
                -range,
                range,
                1e-10,
            )
            .unwrap();
            let registered = spec.transform_factor(u).re;
            assert!(
                (direct - registered).abs() < tol,
                "{} at u = {u}: direct {direct} vs registered {registered}",
                spec.name()
            );
        }
    }
}

/// Mollifier identities: the damped transform equals the quadrature
/// transform of the space-domain convolution, the value at zero frequency
/// is unchanged, and halving h tightens the sup distance to the base.
#[test]
fn mollifier_consistency() {
    let spec = KernelSpec::gaussian(2, 1);
    let h = 0.6;
    let mk = spec.mollify(h).unwrap();

    // 21-point frequency grid: analytic product formula vs quadrature of
    // the convolved base
    for i in 0..21 {
        let u = -1.0 + 0.1 * i as f64;
        let analytic = spec.transform_factor(u).re * (-2.0 * PI * PI * h * h * u * u).exp();
        // outer tolerance two decades above the inner convolution noise
        let quad = quadrature::integrate(
            |x| mk.base_eval(&[x]) * (-2.0 * PI * u * x).cos(),
            -12.0,
            12.0,
            1e-8,
        )
        .unwrap();
        assert!(
            (analytic - quad).abs() < 1e-6,
            "u = {u}: analytic {analytic} vs quadrature {quad}"
        );
    }
    assert!(
        (mk.fourier_transform(&[0.0]).unwrap().re - spec.fourier_transform(&[0.0]).unwrap().re)
            .abs()
            < 1e-12
    );
    // |fhat_h| <= |fhat| pointwise
    for u in [0.1, 0.5, 2.0] {
        assert!(mk.fourier_transform(&[u]).unwrap().norm() <= spec.fourier_transform(&[u]).unwrap().norm() + 1e-15);
    }

    // sup |f_h - f| on [-3, 3] decreases when h halves from 0.5 to 0.25
    let sup_distance = |h: f64| {
        let mk = spec.mollify(h).unwrap();
        let mut worst = 0.0f64;
        for i in 0..61 {
            let x = -3.0 + 0.1 * i as f64;
            worst = worst.max((mk.base_eval(&[x]) - spec.base_eval(&[x])).abs());
        }
        worst
    };
    let coarse = sup_distance(0.5);
    let fine = sup_distance(0.25);
    assert!(fine < coarse, "sup at h=0.25 {fine} vs h=0.5 {coarse}");
}

/// The mollified gaussian has the closed form
/// (1+h^2)^{-1/2} exp(-x^2 / (2 (1+h^2))).
#[test]
fn mollified_gaussian_closed_form() {
    let spec = KernelSpec::gaussian(2, 1);
    let mk = spec.mollify(1.0).unwrap();
    for x in [0.0f64, 0.7, -1.9] {
        let exact = (1.0f64 + 1.0).powf(-0.5) * (-x * x / 4.0).exp();
        assert!((mk.base_eval(&[x]) - exact).abs() < 1e-8);
    }
}

/// Mollification restores finite moments: the laplacian base has an
/// infinite first transform moment, its mollified version a finite one.
#[test]
fn mollifier_restores_moments() {
    let spec = KernelSpec::laplacian(2, 1);
    assert!(spec.fourier_moment(1.0).unwrap().is_infinite());
    let mk = spec.mollify(0.5).unwrap();
    let mu1 = mk.spec.fourier_moment(1.0).unwrap();
    assert!(mu1.is_finite() && mu1 > 0.0);
}

/// Truncated moment integrals are nondecreasing in the truncation range.
#[test]
fn laplacian_truncated_moments_monotone_in_range() {
    let spec = KernelSpec::laplacian(2, 1);
    for q in [0.5f64, 1.0, 2.0] {
        let mut prev = 0.0f64;
        for range in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let val = quadrature::integrate(
                |u| spec.transform_factor(u).norm() * u.abs().powf(q),
                -range,
                range,
                1e-10,
            )
            .unwrap();
            assert!(val >= prev - 1e-12, "q={q} range={range}: {val} < {prev}");
            prev = val;
        }
    }
}

/// Fourier tail condition: the cosine base passes with (L, eps) = (2, 1),
/// the gaussian passes easily, the hat base fails a far-too-small L.
#[test]
fn fourier_tail_condition() {
    let radii: Vec<f64> = (0..=600).map(|i| i as f64 * 0.02).collect();
    let cosine = KernelSpec::cosine(2, 1);
    let rep = cosine.check_fourier_tail(2.0, 1.0, &radii).unwrap();
    assert!(rep.pass, "cosine worst ratio {}", rep.worst_ratio);

    let gaussian = KernelSpec::gaussian(2, 1);
    let rep = gaussian.check_fourier_tail(2.6, 1.0, &radii).unwrap();
    assert!(rep.pass, "gaussian worst ratio {}", rep.worst_ratio);

    let hat = KernelSpec::hat(2, 1);
    let rep = hat.check_fourier_tail(0.001, 1.0, &radii).unwrap();
    assert!(!rep.pass);
    assert!(rep.worst_radius < 0.5);
}

/// Moment order zero is the transform mass by definition.
#[test]
fn zeroth_moment_is_mass() {
    for spec in [
        KernelSpec::gaussian(2, 1),
        KernelSpec::cosine(2, 1),
        KernelSpec::laplacian(2, 2),
    ] {
        assert_eq!(
            spec.fourier_moment(0.0).unwrap(),
            spec.fourier_l1_norm().unwrap()
        );
    }
}
