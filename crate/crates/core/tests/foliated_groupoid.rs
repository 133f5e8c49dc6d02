use std::sync::Arc;

use residue_index_core::foliated_groupoid::*;
use residue_index_core::linalg::{composite_gauss, CMat};
use residue_index_core::{Error, C64};

struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Smooth, not band-limited in `b`, compactly supported in `t ∈ [lo, hi]`.
fn random_profile(rng: &mut Rng, period: f64, lo: f64, hi: f64) -> impl Fn(f64, f64) -> C64 {
    let a = rng.range(-1.0, 1.0);
    let ph = rng.next();
    let z = C64::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    move |b: f64, t: f64| {
        let u = std::f64::consts::TAU * (b / period - ph);
        (c(1.0) + z * u.sin()) * (a * u.cos()).exp() * bump((t - center) / half)
    }
}

fn random_function(rng: &mut Rng, pres: &Arc<HolonomyPresentation>, flag: SupportFlag, span: (f64, f64)) -> GroupoidFunction {
    let mut f = GroupoidFunction::zero(pres.clone(), flag);
    for s in 0..pres.sheets().len() {
        let sheet = pres.sheets()[s];
        let period = match pres.components()[sheet.range].kind {
            ComponentKind::Periodic { period } => period,
            ComponentKind::Infinite { length } => length,
            ComponentKind::Fixed { .. } => 1.0,
        };
        let lo = rng.range(span.0, 0.5 * (span.0 + span.1));
        let hi = rng.range(lo + 0.3 * (span.1 - span.0), span.1 + 0.3 * (span.1 - span.0)).min(span.1);
        let hi = hi.max(lo + 0.2);
        let prof = random_profile(rng, period, lo, hi);
        let infinite = matches!(pres.components()[sheet.range].kind, ComponentKind::Infinite { .. });
        f = f
            .with_sheet(s, lo, hi, move |b, t| if infinite { prof(b, t) * bump((b - 0.5 * period) / (0.4 * period)) } else { prof(b, t) })
            .unwrap();
    }
    f
}

fn presentation_with_holonomy() -> Arc<HolonomyPresentation> {
    // Two circles of period 1 joined by a sheet, plus a half-turn holonomy.
    let comps = vec![TransversalComponent::periodic(1.0), TransversalComponent::periodic(1.0)];
    let gens = [Sheet { range: 0, source: 0, shift: 16 }, Sheet { range: 1, source: 0, shift: 5 }];
    Arc::new(HolonomyPresentation::new(comps, 1.0 / 32.0, &gens, 8).unwrap())
}

fn s1(points: usize) -> Arc<HolonomyPresentation> {
    Arc::new(HolonomyPresentation::product(1.0, points).unwrap())
}

#[test]
fn presentation_closes_and_rejects_long_words() {
    let p = presentation_with_holonomy();
    assert_eq!(p.sheets().len(), 8);
    for a in 0..p.sheets().len() {
        let inv = p.inverse(a);
        let u = p.compose(a, inv).unwrap();
        assert!(p.sheets()[u].is_unit());
    }
    let comps = vec![TransversalComponent::periodic(1.0)];
    let r = HolonomyPresentation::new(comps, 1.0 / 32.0, &[Sheet { range: 0, source: 0, shift: 3 }], 8);
    assert!(matches!(r, Err(Error::WordLengthOverflow(8))));
    let comps = vec![TransversalComponent::infinite(2.0)];
    let r = HolonomyPresentation::new(comps, 1.0 / 32.0, &[Sheet { range: 0, source: 0, shift: 1 }], 8);
    assert!(matches!(r, Err(Error::WordLengthOverflow(_))));
    let r = HolonomyPresentation::new(vec![TransversalComponent::fixed(0.0)], 0.1, &[], 8);
    assert!(matches!(r, Err(Error::ZeroExpansionRate(_))));
}

#[test]
fn holonomy_preserves_lebesgue_measure() {
    let p = presentation_with_holonomy();
    let d = p.holonomy_defect(|_, b| (std::f64::consts::TAU * b).cos().exp() + 0.3 * (2.0 * std::f64::consts::TAU * b).sin());
    assert!(d <= 1e-10, "{d}");
}

#[test]
fn mollifier_is_an_approximate_unit() {
    let pres = s1(512);
    let mut rng = Rng(7);
    let g = random_function(&mut rng, &pres, SupportFlag::Full, (-0.6, 0.6));
    let mut errs = Vec::new();
    for eps in [0.08, 0.04, 0.02] {
        let norm: f64 = (-200..=200).map(|k| bump(k as f64 / 512.0 / eps)).sum::<f64>() / 512.0;
        let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Full)
            .on_units(0, -eps, eps, |_, t| c(bump(t / eps) / norm))
            .unwrap();
        errs.push(f.convolve(&g).unwrap().sub(&g).unwrap().max_abs() / g.max_abs());
    }
    assert!(errs[1] < 0.35 * errs[0] && errs[2] < 0.35 * errs[1], "{errs:?}");
}

#[test]
fn positive_support_is_preserved() {
    let pres = s1(64);
    let mut rng = Rng(11);
    let f = random_function(&mut rng, &pres, SupportFlag::Positive, (0.1, 1.2));
    let g = random_function(&mut rng, &pres, SupportFlag::Positive, (0.2, 0.9));
    let fg = f.convolve(&g).unwrap();
    assert_eq!(fg.flag(), SupportFlag::Positive);
    let d = fg.sheet(0).unwrap();
    assert!(d.t_start >= 1);
    let r = GroupoidFunction::zero(pres.clone(), SupportFlag::Positive).on_units(0, 0.0, 0.5, |_, _| c(1.0));
    assert!(matches!(r, Err(Error::SupportTouchesZero)));
}

#[test]
fn convolution_is_associative() {
    let pres = presentation_with_holonomy();
    let mut rng = Rng(3);
    for _ in 0..5 {
        let f = random_function(&mut rng, &pres, SupportFlag::Full, (-0.8, 0.8));
        let g = random_function(&mut rng, &pres, SupportFlag::Full, (-0.8, 0.8));
        let k = random_function(&mut rng, &pres, SupportFlag::Full, (-0.8, 0.8));
        let a = f.convolve(&g).unwrap().convolve(&k).unwrap();
        let b = f.convolve(&g.convolve(&k).unwrap()).unwrap();
        let err = a.sub(&b).unwrap().max_abs() / a.max_abs();
        assert!(err <= 1e-8, "{err}");
    }
}

#[test]
fn representation_is_a_star_homomorphism() {
    let pres = presentation_with_holonomy();
    let mut rng = Rng(5);
    for _ in 0..5 {
        let f = random_function(&mut rng, &pres, SupportFlag::Full, (-1.5, 1.5));
        let g = random_function(&mut rng, &pres, SupportFlag::Full, (-1.5, 1.5));
        let rf = f.represent().unwrap().matrix;
        let rg = g.represent().unwrap().matrix;
        let rfg = f.convolve(&g).unwrap().represent().unwrap().matrix;
        let err = (&rfg - &rf.matmul(&rg)).max_abs() / rfg.max_abs();
        assert!(err <= 1e-6, "{err}");
        let radj = f.adjoint().represent().unwrap().matrix;
        assert!((&radj - &rf.adjoint()).max_abs() <= 1e-12 * rf.max_abs());
    }
    let zero = GroupoidFunction::zero(pres.clone(), SupportFlag::Full);
    assert!(zero.represent().unwrap().matrix.is_zero());
}

#[test]
fn product_kernel_sums_over_periods() {
    let pres = s1(32);
    let mut rng = Rng(9);
    let prof = random_profile(&mut rng, 1.0, -1.7, 2.3);
    let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Full).on_units(0, -1.7, 2.3, &prof).unwrap();
    let m = f.represent().unwrap().matrix;
    let h = 1.0 / 32.0;
    for i in 0..32 {
        for j in 0..32 {
            let (b, bp) = (i as f64 * h, j as f64 * h);
            let k: C64 = (-4..=4).map(|n| prof(b, n as f64 + bp - b)).sum();
            assert!((m[(i, j)] - k * h).norm() <= 1e-13);
        }
    }
}

#[test]
fn unit_supported_trace_is_localized() {
    let pres = s1(64);
    let mut rng = Rng(13);
    for _ in 0..5 {
        let prof = random_profile(&mut rng, 1.0, -0.45, 0.45);
        let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Full).on_units(0, -0.45, 0.45, &prof).unwrap();
        assert!((f.trace_formula().unwrap() - f.trace_localized()).norm() <= 1e-14);
    }
    let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Full).on_units(0, -0.3, 0.3, |_, t| c(2.5 * bump(t / 0.3))).unwrap();
    assert!((f.trace_localized() - c(2.5)).norm() <= 1e-12);
    let f = GroupoidFunction::zero(pres, SupportFlag::Full).on_units(0, 0.2, 0.7, |_, t| c(bump((t - 0.45) / 0.25))).unwrap();
    assert_eq!(f.trace_localized(), c(0.0));
}

#[test]
fn non_unit_part_carries_the_difference() {
    let pres = presentation_with_holonomy();
    let mut rng = Rng(17);
    let f = random_function(&mut rng, &pres, SupportFlag::Full, (-2.5, 2.5));
    let mut unit_only = GroupoidFunction::zero(pres.clone(), SupportFlag::Full);
    for c0 in 0..2 {
        let prof = random_profile(&mut rng, 1.0, -0.4, 0.4);
        unit_only = unit_only.on_units(c0, -0.4, 0.4, &prof).unwrap();
    }
    let sum = f.add(&unit_only).unwrap();
    let lhs = sum.trace_formula().unwrap() - sum.trace_localized();
    let rhs = f.trace_formula().unwrap() - f.trace_localized();
    assert!((lhs - rhs).norm() <= 1e-12);
}

fn orbit() -> OrbitData {
    OrbitData {
        period: 1.0,
        h_prime: CMat::scalar(1, c(2.0)),
        j: GradedEndo::new(CMat::scalar(1, c(2.0)), CMat::scalar(1, c(0.5))).unwrap(),
    }
}

fn fixed_point() -> FixedPointData {
    FixedPointData { kappa: CMat::scalar(1, c(1.0)), j: GradedEndo::scalar_even(c(0.3)) }
}

fn fixed_presentation() -> Arc<HolonomyPresentation> {
    let comps = vec![TransversalComponent::periodic(1.0), TransversalComponent::fixed(1.0)];
    Arc::new(HolonomyPresentation::new(comps, 1.0 / 32.0, &[], 8).unwrap())
}

fn commutator_defect(f: &GroupoidFunction, g: &GroupoidFunction, tr: impl Fn(&GroupoidFunction) -> C64) -> f64 {
    let fg = f.convolve(g).unwrap();
    let gf = g.convolve(f).unwrap();
    (tr(&fg) - tr(&gf)).norm() / (f.l1_norm() * g.l1_norm())
}

#[test]
fn all_four_traces_annihilate_commutators() {
    let mut rng = Rng(23);
    let pres = presentation_with_holonomy();
    let orbit_pres = s1(32);
    let fpres = fixed_presentation();
    let (o, fp) = (orbit(), fixed_point());
    let mut worst = [0.0f64; 5];
    for _ in 0..20 {
        let f = random_function(&mut rng, &pres, SupportFlag::Full, (-2.2, 2.2));
        let g = random_function(&mut rng, &pres, SupportFlag::Full, (-2.2, 2.2));
        worst[0] = worst[0].max(commutator_defect(&f, &g, |x| x.trace_formula().unwrap()));
        worst[1] = worst[1].max(commutator_defect(&f, &g, |x| x.trace_localized()));
        let f = random_function(&mut rng, &orbit_pres, SupportFlag::Full, (-2.2, 2.2));
        let g = random_function(&mut rng, &orbit_pres, SupportFlag::Full, (-2.2, 2.2));
        worst[2] = worst[2].max(commutator_defect(&f, &g, |x| theta_trace(&o, x, 16, 1e-9).unwrap()));
        let f = random_function(&mut rng, &fpres, SupportFlag::Positive, (0.1, 2.0));
        let g = random_function(&mut rng, &fpres, SupportFlag::Positive, (0.1, 2.0));
        worst[3] = worst[3].max(commutator_defect(&f, &g, |x| w_trace(&fp, x, 1).unwrap()));
        worst[4] = worst[4].max(commutator_defect(&f, &g, |x| x.trace_formula_fixed().unwrap().total()));
    }
    for (name, w) in ["Tr", "Tr0", "Theta", "W", "Tr fixed"].iter().zip(worst) {
        assert!(w <= 1e-8, "{name}: {w}");
    }
}

#[test]
fn operator_trace_matches_kernel_diagonal_integral() {
    let pres = s1(64);
    let mut rng = Rng(29);
    let (nodes, weights) = composite_gauss(0.0, 1.0, 7, 13);
    for _ in 0..10 {
        let lo = rng.range(-2.6, -0.5);
        let hi = rng.range(0.5, 2.6);
        let prof = random_profile(&mut rng, 1.0, lo, hi);
        let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Full).on_units(0, lo, hi, &prof).unwrap();
        let tr = f.trace_formula().unwrap();
        assert!((f.represent().unwrap().matrix.trace() - tr).norm() <= 1e-12);
        let interp = f.interpolant(0).unwrap();
        let mut diag = C64::new(0.0, 0.0);
        for (&b, &w) in nodes.iter().zip(&weights) {
            let k: C64 = (-3..=3).map(|n| interp.eval(b, n as f64)).sum();
            diag += k * w;
        }
        assert!((diag - tr).norm() <= 1e-6 * tr.norm().max(1.0), "{tr} vs {diag}");
    }
}

/// `∫∫ f(u, t) δ_ε(u (e^{κt} - 1)) du dt` with a Gaussian mollifier.
fn mollified_dirac(f: impl Fn(f64, f64) -> f64, kappa: f64, t_support: (f64, f64), eps: f64) -> f64 {
    let (tn, tw) = composite_gauss(t_support.0, t_support.1, 40, 16);
    let mut total = 0.0;
    for (&t, &wt) in tn.iter().zip(&tw) {
        let a = ((kappa * t).exp() - 1.0).abs();
        let l = 12.0 * eps / a;
        let (un, uw) = composite_gauss(-l, l, 24, 16);
        let inner: f64 = un
            .iter()
            .zip(&uw)
            .map(|(&u, &w)| {
                let x = u * a / eps;
                w * f(u, t) * (-0.5 * x * x).exp() / ((2.0 * std::f64::consts::PI).sqrt() * eps)
            })
            .sum();
        total += wt * inner;
    }
    total
}

#[test]
fn fixed_point_term_matches_mollified_dirac_kernel() {
    let kappa = 1.0;
    let comps = vec![TransversalComponent::fixed(kappa)];
    let pres = Arc::new(HolonomyPresentation::new(comps, 1.0 / 256.0, &[], 8).unwrap());
    let chart = |u: f64, t: f64| bump(u / 0.5) * bump((t - 1.0) / 0.6);
    let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Positive).on_units(0, 0.4, 1.6, |_, t| c(chart(0.0, t))).unwrap();
    let parts = f.trace_formula_fixed().unwrap();
    let oracle = mollified_dirac(chart, kappa, (0.4, 1.6), 1e-3);
    let rel = (parts.fixed.re - oracle).abs() / oracle;
    assert!(rel <= 1e-4, "{} vs {oracle}: {rel}", parts.fixed.re);
    let rep = f.represent().unwrap();
    assert!((rep.dirac[0].trace_weight - parts.fixed).norm() <= 1e-14);
    let full = GroupoidFunction::zero(pres, SupportFlag::Full).on_units(0, -0.4, 0.4, |_, t| c(bump(t / 0.4))).unwrap();
    assert!(matches!(full.trace_formula(), Err(Error::FixedWithFullSupport)));
    assert!(matches!(full.represent(), Err(Error::UnresolvedDirac(_))));
    assert!(matches!(full.trace_formula_fixed(), Err(Error::SupportTouchesZero)));
}

#[test]
fn fixed_variant_reduces_away_from_fixed_points() {
    let pres = fixed_presentation();
    let mut rng = Rng(31);
    let prof = random_profile(&mut rng, 1.0, 0.3, 2.4);
    let f = GroupoidFunction::zero(pres, SupportFlag::Positive).on_units(0, 0.3, 2.4, &prof).unwrap();
    let parts = f.trace_formula_fixed().unwrap();
    assert_eq!(parts.fixed, c(0.0));
    assert!((parts.total() - parts.periodic).norm() == 0.0);
}

#[test]
fn theta_trace_examples() {
    let pres = s1(32);
    let o = orbit();
    let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Full).on_units(0, 1.1, 1.9, |_, t| c(bump((t - 1.5) / 0.4))).unwrap();
    assert_eq!(theta_trace(&o, &f, 16, 1e-9).unwrap(), c(0.0));
    let graded = OrbitData { j: GradedEndo::new(CMat::scalar(1, c(1.5)), CMat::scalar(1, c(1.5))).unwrap(), ..o.clone() };
    let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Full).on_units(0, -2.5, 2.5, |b, t| c((1.0 + b) * bump(t / 2.5))).unwrap();
    assert!(theta_trace(&graded, &f, 16, 1e-9).unwrap().norm() <= 1e-15);
    // Single period in the support: weight tr_s(j)/|1 - 2| times the orbit integral.
    let f = GroupoidFunction::zero(pres, SupportFlag::Full).on_units(0, 0.6, 1.4, |b, t| c((1.0 + b) * bump((t - 1.0) / 0.4))).unwrap();
    let orbit_integral = (0..32).map(|i| 1.0 + i as f64 / 32.0).sum::<f64>() / 32.0 * bump(0.0);
    let expected = (2.0 - 0.5) / 1.0 * orbit_integral;
    assert!((theta_trace(&o, &f, 16, 1e-9).unwrap() - c(expected)).norm() <= 1e-12);
}

#[test]
fn theta_weight_is_conjugation_invariant() {
    let h = CMat::from_rows(&[&[c(2.0), c(1.0)], &[c(0.0), c(-0.5)]]);
    let j = GradedEndo::new(CMat::from_rows(&[&[c(1.0), c(0.2)], &[c(0.0), c(3.0)]]), CMat::scalar(1, c(0.7))).unwrap();
    let s = CMat::from_rows(&[&[c(1.0), C64::new(0.3, 0.1)], &[c(-0.4), c(2.0)]]);
    let si = s.inverse(1e-12).unwrap();
    let a = OrbitData { period: 1.0, h_prime: h.clone(), j: j.clone() };
    let b = OrbitData {
        period: 1.0,
        h_prime: si.matmul(&h).matmul(&s),
        j: GradedEndo::new(si.matmul(&j.plus).matmul(&s), j.minus.clone()).unwrap(),
    };
    for n in [-3, -1, 1, 2, 5] {
        let (wa, wb) = (a.weight(n, 1e-12).unwrap(), b.weight(n, 1e-12).unwrap());
        assert!((wa - wb).norm() <= 1e-10 * wa.norm(), "{n}: {wa} {wb}");
    }
    let degenerate = OrbitData { period: 1.0, h_prime: CMat::scalar(1, c(1.0)), j };
    assert!(matches!(degenerate.weight(1, 1e-12), Err(Error::DegenerateOrbit(_))));
}

#[test]
fn w_trace_examples() {
    let pres = fixed_presentation();
    let f = GroupoidFunction::zero(pres.clone(), SupportFlag::Positive).on_units(1, 0.2, 1.8, |_, t| c(bump((t - 1.0) / 0.8))).unwrap();
    let symmetric = FixedPointData { kappa: CMat::scalar(1, c(1.0)), j: GradedEndo::new(CMat::scalar(1, c(0.4)), CMat::scalar(1, c(0.4))).unwrap() };
    assert!(w_trace(&symmetric, &f, 1).unwrap().norm() <= 1e-15);
    // Geometric-series oracle: e^{0.3t}/(e^t - 1) = Σ_k e^{(0.3-k)t} against t(2-t) on [0, 2] shifted.
    let fp = fixed_point();
    let g = |t: f64| (t - 0.5).powi(2) * (2.5 - t).powi(2);
    let value = w_trace_fn(&fp, |t| c(g(t)), (0.5, 2.5), 8, 12).unwrap();
    let mut series = 0.0;
    for k in 1..200 {
        let (nodes, weights) = composite_gauss(0.5, 2.5, 8, 12);
        series += nodes.iter().zip(&weights).map(|(&t, &w)| w * g(t) * ((0.3 - k as f64) * t).exp()).sum::<f64>();
    }
    assert!((value.re - series).abs() <= 1e-10 * series.abs());
    assert!(matches!(w_trace_fn(&fp, c, (0.0, 1.0), 4, 8), Err(Error::SupportTouchesZero)));
}

fn flow_grid() -> FlowGrid {
    FlowGrid { n_theta: 16, n_b: 32, period: 1.0, omega: 0.6180339887 }
}

fn flow_function(rng: &mut Rng, grid: FlowGrid) -> FlowFunction {
    let prof = random_profile(rng, 1.0, -0.7, 0.7);
    let z = C64::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
    FlowFunction::from_fn(grid, -0.7, 0.7, move |th, b, t| prof(b, t) * (c(1.0) + z * (std::f64::consts::TAU * th).cos()))
}

#[test]
fn rho_is_multiplicative_and_preserves_idempotents() {
    let grid = flow_grid();
    let alpha = |th: f64, _b: f64| std::f64::consts::FRAC_PI_4 + 0.3 * (std::f64::consts::TAU * th).sin();
    let c1 = move |th: f64, b: f64| alpha(th, b).cos();
    let c2 = move |th: f64, b: f64| alpha(th, b).sin();
    let cuts: [&dyn Fn(f64, f64) -> f64; 2] = [&c1, &c2];
    let mut rng = Rng(37);
    for _ in 0..3 {
        let f = flow_function(&mut rng, grid);
        let g = flow_function(&mut rng, grid);
        let lhs = rho(&f.convolve(&g).unwrap(), &cuts).unwrap();
        let rhs = rho(&f, &cuts).unwrap().convolve(&rho(&g, &cuts).unwrap()).unwrap();
        let err = lhs.max_diff(&rhs).unwrap() / lhs.max_abs();
        assert!(err <= 1e-6, "{err}");
    }
    let one: [&dyn Fn(f64, f64) -> f64; 1] = [&|_, _| 1.0];
    let f = flow_function(&mut rng, grid);
    assert_eq!(rho(&f, &one).unwrap().max_diff(&f).unwrap(), 0.0);
    let bad: [&dyn Fn(f64, f64) -> f64; 2] = [&c1, &|_, _| 0.5];
    assert!(matches!(rho(&f, &bad), Err(Error::PartitionViolated(_))));

    // Rank-one projection e(b, t) = Σ_n χ(b + n) χ(b + n + t) on the transversal.
    let pres = Arc::new(HolonomyPresentation::product(1.0, 32).unwrap());
    let chi = |x: f64| bump((x - 0.5) / 0.45);
    let norm: f64 = (0..32).map(|i| chi(i as f64 / 32.0).powi(2)).sum::<f64>() / 32.0;
    let e = GroupoidFunction::zero(pres, SupportFlag::Full)
        .on_units(0, -1.0, 1.0, |b, t| c((-2..=2).map(|n| chi(b + n as f64) * chi(b + n as f64 + t)).sum::<f64>() / norm))
        .unwrap();
    let defect = e.convolve(&e).unwrap().sub(&e).unwrap().max_abs();
    assert!(defect <= 1e-12, "{defect}");
    let re = rho(&FlowFunction::from_transversal(grid, &e).unwrap(), &cuts).unwrap();
    let d = re.convolve(&re).unwrap().max_diff(&re).unwrap();
    assert!(d <= 1e-6 + defect, "{d}");
}

#[test]
fn detect_orbits_certifies_or_refuses() {
    let golden = FoliatedFlowSystem::product(1.0, "0.6180339887").unwrap();
    let r = detect_orbits(&golden, 1000, 1e-9);
    assert!(!r.is_degenerate() && r.orbits.is_empty() && r.min_gap > 1e-4);
    let half = FoliatedFlowSystem::product(1.0, "0.5").unwrap();
    let r = detect_orbits(&half, 1000, 1e-9);
    assert!(r.is_degenerate());
    assert!(matches!(r.certify(), Err(Error::Degenerate(_))));
    let decl = FoliatedFlowSystem::Declarative { orbits: vec![orbit()], fixed_points: vec![fixed_point()] };
    let r = detect_orbits(&decl, 20, 1e-9).certify().unwrap();
    assert_eq!(r.orbits, vec![orbit()]);
    assert!(r.min_gap >= 0.5 - 1e-12);
    let bad = FoliatedFlowSystem::Declarative {
        orbits: vec![OrbitData { period: 1.0, h_prime: CMat::scalar(1, c(-1.0)), j: GradedEndo::scalar_even(c(1.0)) }],
        fixed_points: vec![],
    };
    assert!(detect_orbits(&bad, 4, 1e-9).is_degenerate());
    let rotating = FoliatedFlowSystem::Declarative {
        orbits: vec![],
        fixed_points: vec![FixedPointData { kappa: CMat::from_rows(&[&[c(0.0), c(-1.0)], &[c(1.0), c(0.0)]]), j: GradedEndo::scalar_even(c(0.0)) }],
    };
    assert!(detect_orbits(&rotating, 4, 1e-9).is_degenerate());
    assert_eq!(Rational::parse_decimal("0.50").unwrap(), Rational { num: 1, den: 2 });
    assert!(Rational::parse_decimal("1/2").is_err());
}
