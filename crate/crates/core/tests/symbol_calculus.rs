use proptest::prelude::*;
use residue_index_core::fourier::Fourier;
use residue_index_core::linalg::CMat;
use residue_index_core::symbol_calculus::*;
use residue_index_core::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

struct Rng(u64);

impl Rng {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

fn random_fourier(rng: &mut Rng, n: usize, kmax: i64) -> Fourier {
    let modes: Vec<(i64, CMat)> =
        (-kmax..=kmax).map(|k| (k, CMat::from_fn(n, n, |_, _| c(rng.next(), rng.next())))).collect();
    Fourier::from_modes(n, n, &modes)
}

fn random_symbol(rng: &mut Rng, order: i32, depth: usize, n: usize) -> ClassicalSymbol {
    let comps = (0..=depth)
        .map(|k| {
            HomogeneousComponent::new(order - k as i32, random_fourier(rng, n, 2), random_fourier(rng, n, 2)).unwrap()
        })
        .collect();
    ClassicalSymbol::new(order, comps).unwrap()
}

fn beta_symbol(depth: usize) -> ClassicalSymbol {
    ClassicalSymbol::multiplication(Fourier::scalar_modes(&[(1, c(1.0, 0.0))]), depth)
}

/// `(1+ξ²)^{1/2} = |ξ| Σ_r binom(1/2, r) ξ^{-2r}`.
fn japanese_bracket(depth: usize) -> ClassicalSymbol {
    let mut s = ClassicalSymbol::zero(1, depth, 1, 1);
    let mut binom = 1.0;
    for r in 0..=depth / 2 {
        if r > 0 {
            binom *= (0.5 - (r - 1) as f64) / r as f64;
        }
        s.set_component(HomogeneousComponent::even(1 - 2 * r as i32, Fourier::scalar_const(c(binom, 0.0)))).unwrap();
    }
    s
}

fn rel_diff(a: &ClassicalSymbol, b: &ClassicalSymbol) -> f64 {
    a.sub(b).unwrap().max_abs() / a.max_abs().max(b.max_abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn composition_is_associative(seed in 1u64..u64::MAX, oa in -1i32..=1, ob in -1i32..=1, oc in -1i32..=1, depth in 1usize..=6) {
        let mut rng = Rng(seed);
        let a = random_symbol(&mut rng, oa, depth, 2);
        let b = random_symbol(&mut rng, ob, depth, 2);
        let cc = random_symbol(&mut rng, oc, depth, 2);
        let left = compose(&compose(&a, &b, depth).unwrap(), &cc, depth).unwrap();
        let right = compose(&a, &compose(&b, &cc, depth).unwrap(), depth).unwrap();
        prop_assert!(rel_diff(&left, &right) <= 1e-12, "relative defect {}", rel_diff(&left, &right));
    }

    #[test]
    fn residue_kills_commutators(seed in 1u64..u64::MAX, oa in -2i32..=1, depth in 2usize..=6) {
        let mut rng = Rng(seed);
        let ob = -1 - oa;
        let a = random_symbol(&mut rng, oa, depth, 2);
        let b = random_symbol(&mut rng, ob, depth, 2);
        let ab = compose(&a, &b, depth).unwrap();
        let ba = compose(&b, &a, depth).unwrap();
        let r = wodzicki_residue(&ab.sub(&ba).unwrap()).unwrap();
        prop_assert!(r.norm() <= 1e-10, "residue {}", r);
    }
}

#[test]
fn leading_term_is_multiplicative() {
    let mut rng = Rng(7);
    let a = random_symbol(&mut rng, 1, 3, 2);
    let b = random_symbol(&mut rng, -1, 3, 2);
    let ab = compose(&a, &b, 3).unwrap();
    let want = leading_symbol(&a).mul(&leading_symbol(&b), 64).unwrap();
    assert_eq!(leading_symbol(&ab), want);
}

#[test]
fn homogeneity_is_exact() {
    let mut rng = Rng(11);
    let a = random_symbol(&mut rng, 1, 2, 2);
    for comp in a.components() {
        for &lam in &[0.5, 2.0, 7.25] {
            for &xi in &[1.0, -1.0, 3.0] {
                let v1 = comp.eval(0.3, lam * xi);
                let v2 = comp.eval(0.3, xi).scale_re(libm::pow(lam, comp.degree as f64));
                assert!((&v1 - &v2).max_abs() <= 1e-12 * v1.max_abs().max(1.0));
            }
        }
    }
}

#[test]
fn commutator_with_derivative_matches_fourier_modes() {
    // Exact oracle: on e_n, (2πi)^{-1}d/dx ∘ β - β ∘ (2πi)^{-1}d/dx sends e_n to
    // (n+1) e_{n+1} - n e_{n+1} = e_{n+1}, i.e. multiplication by β.
    let a = ClassicalSymbol::xi(1, 3);
    let b = beta_symbol(3);
    let d = compose(&a, &b, 3).unwrap().sub(&compose(&b, &a, 3).unwrap()).unwrap();
    for n in [-5.0, -1.0, 1.0, 4.0] {
        for x in [0.0, 0.2, 0.71] {
            let want = residue_index_core::cis_tau(x);
            assert!((d.eval(x, n)[(0, 0)] - want).norm() < 1e-14);
        }
    }
    assert!(d.component(1).unwrap().is_zero());
}

#[test]
fn parametrix_of_x_dependent_matrix_symbol() {
    // Leading coefficient 2 + cos(2πx) on the diagonal plus a coupling; lower
    // terms arbitrary.
    let mut rng = Rng(3);
    let mut a = random_symbol(&mut rng, 1, 5, 2);
    let lead = Fourier::from_modes(
        2,
        2,
        &[
            (0, CMat::from_rows(&[&[c(3.0, 0.0), c(0.2, 0.1)], &[c(0.0, 0.3), c(2.5, 0.0)]])),
            (1, CMat::scalar(2, c(0.5, 0.0))),
            (-1, CMat::scalar(2, c(0.5, 0.0))),
        ],
    );
    a.set_component(HomogeneousComponent::new(1, lead.clone(), lead.scale(c(1.5, 0.0))).unwrap()).unwrap();
    let b = parametrix(&a, 5).unwrap();
    let e = compose(&a, &b, 5).unwrap().sub(&ClassicalSymbol::identity(2, 5)).unwrap();
    let scale = a.max_abs() * b.max_abs();
    for comp in e.components() {
        assert!(comp.max_abs() <= 1e-12 * scale, "degree {} error {}", comp.degree, comp.max_abs());
    }
    // Leading coefficient is the pointwise inverse.
    let x = 0.37;
    let want = a.components()[0].plus.eval(x).inverse(1e-14).unwrap();
    assert!((&b.components()[0].plus.eval(x) - &want).max_abs() < 1e-13);
}

#[test]
fn parametrix_rejects_non_elliptic() {
    let f = Fourier::scalar_modes(&[(1, c(0.5, 0.0)), (-1, c(0.5, 0.0))]);
    let a = ClassicalSymbol::multiplication(f, 2);
    assert!(matches!(parametrix(&a, 2), Err(residue_index_core::Error::NonElliptic(_))));
}

#[test]
fn log_of_japanese_bracket_matches_taylor() {
    // ½ log(1 + ξ^{-2}) = ½ξ^{-2} - ¼ξ^{-4} + ⅙ξ^{-6} - …
    let q = japanese_bracket(6);
    let l = log_of_elliptic(&q).unwrap();
    let want = [(0, 0.0), (-1, 0.0), (-2, 0.5), (-3, 0.0), (-4, -0.25), (-5, 0.0), (-6, 1.0 / 6.0)];
    for (deg, v) in want {
        let comp = l.base.component(deg).unwrap();
        for ray in [&comp.plus, &comp.minus] {
            assert!((ray.zero_mode()[(0, 0)] - c(v, 0.0)).norm() < 1e-14, "degree {deg}");
            assert_eq!(ray.kmax(), 0);
        }
    }
    assert_eq!(l.logpart, ClassicalSymbol::identity(1, 6));
}

#[test]
fn log_then_exp_recovers_symbol() {
    let mut q = japanese_bracket(5);
    let lead = Fourier::scalar_modes(&[(0, c(2.0, 0.0)), (1, c(0.3, 0.4)), (-1, c(0.3, -0.4))]);
    q.set_component(HomogeneousComponent::new(1, lead.clone(), lead.scale(c(0.7, 0.0))).unwrap()).unwrap();
    let sub = Fourier::scalar_modes(&[(0, c(0.1, 0.0)), (2, c(0.05, 0.0))]);
    q.set_component(HomogeneousComponent::new(0, sub.clone(), sub).unwrap()).unwrap();
    let l = log_of_elliptic(&q).unwrap();
    let e = exp_pointwise(&l.base).unwrap();
    // exp(base)·|ξ| has the components of q shifted by one degree.
    for k in 0..=5 {
        let ek = &e.components()[k];
        let qk = &q.components()[k];
        let d = ek.plus.sub(&qk.plus).unwrap().max_abs().max(ek.minus.sub(&qk.minus).unwrap().max_abs());
        assert!(d < 1e-12, "component {k}: {d}");
    }
}

#[test]
fn commutator_log_trivial_cases() {
    let q = ClassicalSymbol::abs_xi(1, 4);
    let id = ClassicalSymbol::identity(2, 4);
    assert!(commutator_log(&q, &id).unwrap().is_zero());
    let mult = ClassicalSymbol::abs_xi(2, 4).scale(c(0.0, 3.0));
    assert!(commutator_log(&q, &mult).unwrap().is_zero());
}

#[test]
fn commutator_log_matches_matrix_commutator() {
    // Oracle: [log|D|, β] e_n = (log|n+1| - log|n|) e_{n+1}. Compare the
    // symbol, evaluated at ξ = n, against the exact matrix entry.
    let depth = 6;
    let q = ClassicalSymbol::abs_xi(1, depth);
    let s = commutator_log(&q, &beta_symbol(depth)).unwrap();
    assert!(s.components()[0].is_zero());
    let lead = s.component(-1).unwrap();
    assert!((lead.plus.mode(1)[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    assert!((lead.minus.mode(1)[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
    for n in [-60i64, -25, 25, 60] {
        let nf = n as f64;
        let exact = libm::log(((n + 1).abs()) as f64) - libm::log(nf.abs());
        // Symbol of β·m(n) at x = 0 is m(n).
        let got = s.eval(0.0, nf)[(0, 0)];
        assert!((got - c(exact, 0.0)).norm() < 2.0 * libm::pow(nf.abs(), -7.0), "n = {n}: {got} vs {exact}");
    }
}

#[test]
fn commutator_log_with_lower_order_q() {
    // q = (1+ξ²)^{1/2}: log q - log|ξ| is x-independent, so [ln q, β] agrees with
    // the |ξ| case up to terms involving ξ-derivatives of the base.
    let depth = 6;
    let q = japanese_bracket(depth);
    let s = commutator_log(&q, &beta_symbol(depth)).unwrap();
    for n in [-40i64, 40] {
        let nf = n as f64;
        let lq = |m: f64| 0.5 * libm::log(1.0 + m * m);
        let exact = lq(nf + 1.0) - lq(nf);
        let got = s.eval(0.0, nf)[(0, 0)];
        assert!((got - c(exact, 0.0)).norm() < 1e-10, "n = {n}: {got} vs {exact}");
    }
}

#[test]
fn residue_of_order_minus_two_is_zero() {
    let p = parametrix(&ClassicalSymbol::abs_xi(1, 3), 3).unwrap();
    let p2 = compose(&p, &p, 3).unwrap();
    assert_eq!(wodzicki_residue(&p2).unwrap(), c(0.0, 0.0));
}

#[test]
fn residue_needs_degree_minus_one() {
    let a = ClassicalSymbol::abs_xi(1, 1);
    assert!(matches!(wodzicki_residue(&a), Err(residue_index_core::Error::MissingDegree(-1))));
}
