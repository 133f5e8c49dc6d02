use residue_index_core::equivariant_residue::*;
use residue_index_core::fourier::Fourier;
use residue_index_core::linalg::CMat;
use residue_index_core::mellin::*;
use residue_index_core::symbol_calculus::*;
use residue_index_core::{cis_tau, Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn lifted_abs(n: usize) -> SpectralOperator {
    SpectralOperator::multiplier(n, 1, |k| CMat::scalar(1, c((k.abs() as f64).max(1.0), 0.0)))
}

fn inverse_abs_xi(depth: usize) -> ClassicalSymbol {
    parametrix(&ClassicalSymbol::abs_xi(1, depth), depth).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn heat_trace_geometric_series() {
    let n = 200;
    let id = SpectralOperator::identity(2 * n + 1);
    for &t in &[0.05, 0.3, 1.0] {
        let got = heat_trace(&id, &id, &lifted_abs(n), t).unwrap();
        let e = libm::exp(-t);
        let tail = libm::exp(-t * n as f64);
        let want = e + 2.0 * e * (1.0 - tail) / (1.0 - e);
        assert!((got - c(want, 0.0)).norm() < 1e-12 * want);
    }
}

#[test]
fn heat_trace_rotation_poisson_kernel() {
    let n = 400;
    let alpha = 0.3;
    let id = SpectralOperator::identity(2 * n + 1);
    let u = SpectralOperator::multiplier(n, 1, |k| CMat::scalar(1, cis_tau(k as f64 * alpha)));
    let t = 0.2;
    let got = heat_trace(&id, &u, &lifted_abs(n), t).unwrap();
    let z = cis_tau(alpha) * libm::exp(-t);
    let want = libm::exp(-t) + 2.0 * (z / (c(1.0, 0.0) - z)).re;
    assert!((got - c(want, 0.0)).norm() < 1e-12);
    assert!(got.im.abs() < 1e-10);
}

#[test]
fn heat_trace_large_time_keeps_lowest_mode() {
    let n = 20;
    let id = SpectralOperator::identity(2 * n + 1);
    let q = SpectralOperator::multiplier(n, 1, |k| CMat::scalar(1, c((k * k) as f64 + 1.0, 0.0)));
    let t = 40.0;
    let got = heat_trace(&id, &id, &q, t).unwrap();
    assert!((got.re / libm::exp(-t) - 1.0).abs() < 1e-12);
}

#[test]
fn heat_trace_errors() {
    let id = SpectralOperator::identity(5);
    let q = lifted_abs(2);
    assert!(matches!(heat_trace(&id, &id, &q, 0.0), Err(Error::NonPositiveTime(_))));
    assert!(matches!(heat_trace(&SpectralOperator::identity(3), &id, &q, 1.0), Err(Error::ShapeMismatch(_))));
}

#[test]
fn dense_heat_trace_matches_non_diagonal_q() {
    // Q = V diag V* for a unitary V: trace is invariant.
    let n = 4;
    let d = 2 * n + 1;
    let lam: Vec<f64> = (0..d).map(|i| 1.0 + i as f64).collect();
    let mut rng = 1u64;
    let mut next = || {
        rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (rng >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let h = CMat::from_fn(d, d, |_, _| c(next(), next()));
    let h = &h + &h.adjoint();
    let (_, v) = residue_index_core::linalg::hermitian_eigen(&h);
    let qd = CMat::diag(&lam.iter().map(|&l| c(l, 0.0)).collect::<Vec<_>>());
    let q = SpectralOperator { matrix: &(&v * &qd) * &v.adjoint() };
    let id = SpectralOperator::identity(d);
    let got = heat_trace(&id, &id, &q, 0.4).unwrap();
    let want: f64 = lam.iter().map(|l| libm::exp(-0.4 * l)).sum();
    assert!((got.re - want).abs() < 1e-12);
}

/// Closed-form zeta case: P = 1/max(|n|,1), Q = max(|n|,1), U = id.
fn closed_form_sample(n: usize, t_grid: Vec<f64>) -> HeatTraceSample {
    let p = SpectralOperator::multiplier(n, 1, |k| CMat::scalar(1, c(1.0 / (k.abs() as f64).max(1.0), 0.0)));
    let id = SpectralOperator::identity(2 * n + 1);
    let q = lifted_abs(n);
    let values = t_grid.iter().map(|&t| heat_trace(&p, &id, &q, t).unwrap().re).collect();
    HeatTraceSample { t_grid, values, truncation: n, kernel: HeatKernel::Poisson, doubling_delta: None }
}

#[test]
fn mellin_closed_form_returns_two() {
    let sample = closed_form_sample(1024, geometric_grid(0.01, 1.0, 40));
    let fit = mellin_residue_oracle(&sample, &MellinConfig::for_kernel(HeatKernel::Poisson)).unwrap();
    assert!((fit.residue - 2.0).abs() < 1e-3, "residue {}", fit.residue);
    assert!(fit.residual < 1e-4);
}

#[test]
fn mellin_is_stable_under_grid_refinement() {
    let a = closed_form_sample(1024, geometric_grid(0.01, 1.0, 40));
    let b = closed_form_sample(1024, geometric_grid(0.01, 1.0, 79));
    let cfg = MellinConfig::for_kernel(HeatKernel::Poisson);
    let ra = mellin_residue_oracle(&a, &cfg).unwrap().residue;
    let rb = mellin_residue_oracle(&b, &cfg).unwrap().residue;
    assert!((ra - rb).abs() < 1e-4);
}

#[test]
fn mellin_without_fixed_points_returns_zero() {
    let n = 1024;
    let alpha = 0.5 * (libm::sqrt(5.0) - 1.0);
    let id = SpectralOperator::identity(2 * n + 1);
    let u = SpectralOperator::multiplier(n, 1, |k| CMat::scalar(1, cis_tau(k as f64 * alpha)));
    let t_grid = geometric_grid(0.01, 1.0, 40);
    let values = t_grid.iter().map(|&t| heat_trace(&id, &u, &lifted_abs(n), t).unwrap().re).collect();
    let sample = HeatTraceSample { t_grid, values, truncation: n, kernel: HeatKernel::Poisson, doubling_delta: None };
    let fit = mellin_residue_oracle(&sample, &MellinConfig::for_kernel(HeatKernel::Poisson)).unwrap();
    assert!(fit.residue.abs() < 1e-3, "residue {}", fit.residue);
}

#[test]
fn localized_residue_without_fixed_points_vanishes() {
    let p = FiberSymbol::constant_in_y(inverse_abs_xi(2));
    let action = FiberAction::new(CircleDiffeo::rotation(0.618).unwrap(), Fourier::scalar_const(c(1.0, 0.0))).unwrap();
    assert_eq!(localized_residue_fixed_circles(&p, &action, DEFAULT_NONDEGENERACY_FLOOR).unwrap(), c(0.0, 0.0));
}

#[test]
fn localized_residue_identity_integrates_wodzicki() {
    // P = ψ(y)/|ξ| with ψ = 2 + cos 2πy: ∫ψ dy · 2 = 4.
    let psi = Fourier::scalar_modes(&[(0, c(2.0, 0.0)), (1, c(0.5, 0.0)), (-1, c(0.5, 0.0))]);
    let p = FiberSymbol::new(vec![(psi, inverse_abs_xi(2))]).unwrap();
    let r = localized_residue_fixed_circles(&p, &FiberAction::identity(1), 1e-6).unwrap();
    assert!((r - c(4.0, 0.0)).norm() < 1e-14);
}

#[test]
fn localized_residue_of_order_zero_is_zero() {
    let mut a = ClassicalSymbol::identity(1, 2);
    a = a.scale(c(3.0, 0.0));
    let p = FiberSymbol::constant_in_y(a);
    let action = FiberAction::new(CircleDiffeo::two_fixed_points(0.5, 0.0).unwrap(), Fourier::scalar_const(c(1.0, 0.0))).unwrap();
    assert_eq!(localized_residue_fixed_circles(&p, &action, 1e-6).unwrap(), c(0.0, 0.0));
}

#[test]
fn localized_residue_is_linear_and_kills_commutators() {
    let d = CircleDiffeo::two_fixed_points(0.6, 0.2).unwrap();
    let action = FiberAction::new(d, Fourier::scalar_const(c(1.0, 0.0))).unwrap();
    let a = ClassicalSymbol::multiplication(Fourier::scalar_modes(&[(0, c(1.0, 0.0)), (1, c(0.3, 0.0))]), 3);
    let b = inverse_abs_xi(3).scale(c(0.7, 0.0));
    let comm = compose(&a, &b, 3).unwrap().sub(&compose(&b, &a, 3).unwrap()).unwrap();
    let r = localized_residue_fixed_circles(&FiberSymbol::constant_in_y(comm), &action, 1e-6).unwrap();
    assert!(r.norm() < 5e-3);
    let p1 = FiberSymbol::constant_in_y(inverse_abs_xi(2));
    let r1 = localized_residue_fixed_circles(&p1, &action, 1e-6).unwrap();
    let r3 = localized_residue_fixed_circles(&p1.add(&p1.scale(c(2.0, 0.0))), &action, 1e-6).unwrap();
    assert!((r3 - r1 * 3.0).norm() < 1e-12);
    // 2·(1/|1-1.8| + 1/|1-0.6|)
    assert!((r1 - c(2.0 * (1.0 / 0.8 + 1.0 / 0.4), 0.0)).norm() < 1e-12);
}

fn fixed_circle_config(modes: usize, anisotropy: f64) -> SeparableHeatConfig {
    SeparableHeatConfig::fixed_circle(modes, anisotropy)
}

#[test]
fn separable_trace_matches_dense_trace() {
    let n = 6;
    let d = CircleDiffeo::two_fixed_points(0.5, 0.1).unwrap();
    let bmap = Fourier::scalar_modes(&[(0, c(1.0, 0.0)), (1, c(0.2, 0.1)), (-1, c(0.1, 0.0))]);
    let action = FiberAction::new(d, bmap).unwrap();
    let a = inverse_abs_xi(3);
    let p = FiberSymbol::constant_in_y(a.clone());
    let cfg = SeparableHeatConfig { modes: n, anisotropy: 1.3, quadrature: 4096, t_grid: vec![0.01, 0.05] };
    let sep = separable_values(&p, &action, n, &cfg).unwrap();
    // Dense: basis index (k_x, m_y), x-major.
    let px = SpectralOperator::from_symbol(n, &a, &CMat::zeros(1, 1));
    let uy = SpectralOperator::pullback(n, &action, 4096);
    let dim = 2 * n + 1;
    let p2 = SpectralOperator { matrix: px.matrix.kron(&CMat::identity(dim)) };
    let u2 = SpectralOperator { matrix: CMat::identity(dim).kron(&uy.matrix) };
    let q2 = SpectralOperator::multiplier(n, dim, |k| {
        CMat::diag(
            &(-(n as i64)..=n as i64)
                .map(|m| {
                    let l = (k * k) as f64 + 1.69 * (m * m) as f64;
                    c(libm::sqrt(if l == 0.0 { 1.0 } else { l }), 0.0)
                })
                .collect::<Vec<_>>(),
        )
    });
    for (i, &t) in cfg.t_grid.iter().enumerate() {
        let dense = heat_trace_with(&p2, &u2, &q2, t, HeatKernel::Gaussian).unwrap();
        assert!((dense - sep[i]).norm() < 1e-10 * dense.norm(), "t = {t}: {dense} vs {}", sep[i]);
    }
}

#[test]
fn fixed_circle_cross_check_spec_example() {
    // h(y) = y + 0.15 sin(2πy)/π, P = 1/|ξ|, trivial bundle.
    let d = CircleDiffeo::two_fixed_points(0.3, 0.0).unwrap();
    let action = FiberAction::new(d, Fourier::scalar_const(c(1.0, 0.0))).unwrap();
    let p = FiberSymbol::constant_in_y(inverse_abs_xi(3));
    let local = localized_residue_fixed_circles(&p, &action, 1e-6).unwrap().re;
    let sample = separable_heat_trace(&p, &action, &fixed_circle_config(512, 1.0)).unwrap();
    let fit = mellin_residue_oracle(&sample, &MellinConfig::for_kernel(HeatKernel::Gaussian)).unwrap();
    assert!(rel(fit.residue, local) <= 5e-3, "local {local} vs oracle {} (fit residual {:e})", fit.residue, fit.residual);
}

#[test]
fn residue_does_not_depend_on_weight() {
    let d = CircleDiffeo::two_fixed_points(0.7, 0.2).unwrap();
    let action = FiberAction::new(d, Fourier::scalar_const(c(1.0, 0.0))).unwrap();
    let p = FiberSymbol::constant_in_y(inverse_abs_xi(3));
    let cfg = MellinConfig::for_kernel(HeatKernel::Gaussian);
    let r1 = mellin_residue_oracle(&separable_heat_trace(&p, &action, &fixed_circle_config(512, 1.0)).unwrap(), &cfg).unwrap();
    let r2 = mellin_residue_oracle(&separable_heat_trace(&p, &action, &fixed_circle_config(512, 1.7)).unwrap(), &cfg).unwrap();
    assert!(rel(r1.residue, r2.residue) <= 5e-3, "{} vs {}", r1.residue, r2.residue);
}

#[test]
fn index_density_winding_number() {
    // T = 1 + σ_P(β - 1)J with σ_P = diag(θ(ξ), θ(-ξ)) and J = diag(1, 0).
    let depth = 4;
    let beta = Fourier::scalar_modes(&[(1, c(1.0, 0.0))]);
    let plus = Fourier::from_modes(2, 2, &[(0, CMat::diag(&[c(0.0, 0.0), c(1.0, 0.0)])), (1, CMat::diag(&[c(1.0, 0.0), c(0.0, 0.0)]))]);
    let minus = Fourier::constant(CMat::identity(2));
    let mut t = ClassicalSymbol::zero(0, depth, 2, 2);
    t.set_component(HomogeneousComponent::new(0, plus, minus).unwrap()).unwrap();
    let t_inv = parametrix(&t, depth).unwrap();
    let q = ClassicalSymbol::abs_xi(1, depth);
    let dens = index_density(&t, &t_inv, &q).unwrap();
    assert_eq!(dens.order(), -1);
    // Winding oracle: (1/2πi) ∮ β^{-1} dβ by the trapezoid rule.
    let m = 64;
    let mut w = c(0.0, 0.0);
    for j in 0..m {
        let x0 = j as f64 / m as f64;
        let x1 = (j + 1) as f64 / m as f64;
        let (b0, b1) = (beta.eval(x0)[(0, 0)], beta.eval(x1)[(0, 0)]);
        w += (b1 / b0).ln();
    }
    let winding = w / c(0.0, residue_index_core::cis_tau(0.0).re * std::f64::consts::TAU);
    let r = wodzicki_residue(&dens).unwrap();
    assert!((r - winding).norm() < 1e-12, "residue {r} vs winding {winding}");
}

#[test]
fn index_density_trivial_cases() {
    let q = ClassicalSymbol::abs_xi(1, 3);
    let id = ClassicalSymbol::identity(2, 3);
    assert!(index_density(&id, &id, &q).unwrap().is_zero());
    let mut t = ClassicalSymbol::zero(0, 3, 2, 2);
    t.set_component(HomogeneousComponent::new(0, Fourier::constant(CMat::diag(&[c(2.0, 0.0), c(1.0, 0.0)])), Fourier::constant(CMat::identity(2))).unwrap())
        .unwrap();
    let ti = parametrix(&t, 3).unwrap();
    assert!(index_density(&t, &ti, &q).unwrap().components()[0].is_zero());
}
