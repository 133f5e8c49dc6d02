//! Trace axioms, the operator-trace formula and the fixed-point term.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;
use residue_index_core::foliated_groupoid::*;
use residue_index_core::linalg::{composite_gauss, CMat};
use residue_index_core::C64;

use super::{bump, Context, Rng};
use crate::report::{Criterion, TaskReport};

/// Smooth, not band-limited in `b`, compactly supported in `t ∈ [lo, hi]`.
fn random_profile(rng: &mut Rng, period: f64, lo: f64, hi: f64) -> impl Fn(f64, f64) -> C64 + Send + Sync {
    let a = rng.range(-1.0, 1.0);
    let ph = rng.next_f64();
    let z = C64::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    move |b: f64, t: f64| {
        let u = TAU * (b / period - ph);
        (C64::new(1.0, 0.0) + z * u.sin()) * (a * u.cos()).exp() * bump((t - center) / half)
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
        let hi = rng.range(lo + 0.3 * (span.1 - span.0), span.1 + 0.3 * (span.1 - span.0)).min(span.1).max(lo + 0.2);
        let prof = random_profile(rng, period, lo, hi);
        f = f.with_sheet(s, lo, hi, prof).expect("profile fits the presentation");
    }
    f
}

/// Two circles joined by a sheet, plus a half-turn holonomy.
fn holonomy_presentation(word_length: usize) -> Result<Arc<HolonomyPresentation>, residue_index_core::Error> {
    let comps = vec![TransversalComponent::periodic(1.0), TransversalComponent::periodic(1.0)];
    let gens = [Sheet { range: 0, source: 0, shift: 16 }, Sheet { range: 1, source: 0, shift: 5 }];
    Ok(Arc::new(HolonomyPresentation::new(comps, 1.0 / 32.0, &gens, word_length)?))
}

fn commutator_defect(f: &GroupoidFunction, g: &GroupoidFunction, tr: impl Fn(&GroupoidFunction) -> C64) -> f64 {
    let (Ok(fg), Ok(gf)) = (f.convolve(g), g.convolve(f)) else { return f64::NAN };
    (tr(&fg) - tr(&gf)).norm() / (f.l1_norm() * g.l1_norm())
}

/// `∫∫ f(u, t) δ_ε(u (e^{κt} - 1)) du dt` with a Gaussian mollifier.
pub fn mollified_dirac(f: impl Fn(f64, f64) -> f64, kappa: f64, t_support: (f64, f64), eps: f64) -> f64 {
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
                w * f(u, t) * (-0.5 * x * x).exp() / ((2.0 * PI).sqrt() * eps)
            })
            .sum();
        total += wt * inner;
    }
    total
}

struct Pairs {
    holonomy: (GroupoidFunction, GroupoidFunction),
    orbit: (GroupoidFunction, GroupoidFunction),
    fixed: (GroupoidFunction, GroupoidFunction),
}

pub fn run(ctx: &Context<'_>) -> TaskReport {
    let num = &ctx.config.numerics;
    let tol = &ctx.config.tolerances;
    let mut report = TaskReport::new("trace-suite");
    let pres = match holonomy_presentation(num.word_length) {
        Ok(p) => p,
        Err(e) => {
            report.status = crate::report::TaskStatus::Error;
            report.note(e.to_string());
            return report;
        }
    };
    let orbit_pres = Arc::new(HolonomyPresentation::product(1.0, 32).expect("valid grid"));
    let fixed_pres = Arc::new(HolonomyPresentation::new(vec![TransversalComponent::periodic(1.0), TransversalComponent::fixed(1.0)], 1.0 / 32.0, &[], 8).expect("valid grid"));
    let orbit = OrbitData {
        period: 1.0,
        h_prime: CMat::scalar(1, C64::new(2.0, 0.0)),
        j: GradedEndo::new(CMat::scalar(1, C64::new(2.0, 0.0)), CMat::scalar(1, C64::new(0.5, 0.0))).expect("square blocks"),
    };
    let fp = FixedPointData { kappa: CMat::scalar(1, C64::new(1.0, 0.0)), j: GradedEndo::scalar_even(C64::new(0.3, 0.0)) };

    let mut rng = Rng::new(num.seed ^ 0x7472_6163_6573);
    let pairs: Vec<Pairs> = (0..num.trace_pairs)
        .map(|_| Pairs {
            holonomy: (random_function(&mut rng, &pres, SupportFlag::Full, (-2.2, 2.2)), random_function(&mut rng, &pres, SupportFlag::Full, (-2.2, 2.2))),
            orbit: (random_function(&mut rng, &orbit_pres, SupportFlag::Full, (-2.2, 2.2)), random_function(&mut rng, &orbit_pres, SupportFlag::Full, (-2.2, 2.2))),
            fixed: (random_function(&mut rng, &fixed_pres, SupportFlag::Positive, (0.1, 2.0)), random_function(&mut rng, &fixed_pres, SupportFlag::Positive, (0.1, 2.0))),
        })
        .collect();
    let defects: Vec<[f64; 4]> = pairs
        .par_iter()
        .map(|p| {
            let (f, g) = &p.holonomy;
            let tr = commutator_defect(f, g, |x| x.trace_formula().unwrap_or(C64::new(f64::NAN, 0.0)));
            let tr0 = commutator_defect(f, g, |x| x.trace_localized());
            let (f, g) = &p.orbit;
            let theta = commutator_defect(f, g, |x| theta_trace(&orbit, x, num.n_max, num.degeneracy_floor).unwrap_or(C64::new(f64::NAN, 0.0)));
            let (f, g) = &p.fixed;
            let w = commutator_defect(f, g, |x| w_trace(&fp, x, 1).unwrap_or(C64::new(f64::NAN, 0.0)));
            [tr, tr0, theta, w]
        })
        .collect();
    for (k, name) in ["trace_axiom_tr", "trace_axiom_tr0", "trace_axiom_theta", "trace_axiom_w"].iter().enumerate() {
        let worst = defects.iter().map(|d| d[k]).fold(0.0f64, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) });
        report.criteria.push(Criterion::at_most(4, name, worst, tol.trace));
    }

    // Operator trace against Gauss-Legendre integration of the kernel diagonal.
    let s1 = Arc::new(HolonomyPresentation::product(1.0, 64).expect("valid grid"));
    let (nodes, weights) = composite_gauss(0.0, 1.0, 7, 13);
    let functions: Vec<GroupoidFunction> = (0..num.kernel_samples)
        .map(|_| {
            let lo = rng.range(-2.6, -0.5);
            let hi = rng.range(0.5, 2.6);
            let prof = random_profile(&mut rng, 1.0, lo, hi);
            GroupoidFunction::zero(s1.clone(), SupportFlag::Full).on_units(0, lo, hi, prof).expect("profile fits")
        })
        .collect();
    let kernel: Vec<f64> = functions
        .par_iter()
        .map(|f| {
            let (Ok(tr), Ok(interp)) = (f.trace_formula(), f.interpolant(0)) else { return f64::NAN };
            let mut diag = C64::new(0.0, 0.0);
            for (&b, &w) in nodes.iter().zip(&weights) {
                let k: C64 = (-3..=3).map(|n| interp.eval(b, n as f64)).sum();
                diag += k * w;
            }
            (diag - tr).norm() / tr.norm().max(1.0)
        })
        .collect();
    let worst = kernel.iter().fold(0.0f64, |m, &v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) });
    report.criteria.push(Criterion::at_most(5, "trace_vs_kernel_diagonal", worst, tol.kernel));

    // Fixed-point term against a mollified Dirac kernel.
    let kappa = 1.0;
    let fixed = Arc::new(HolonomyPresentation::new(vec![TransversalComponent::fixed(kappa)], 1.0 / 256.0, &[], 8).expect("valid grid"));
    let chart = |u: f64, t: f64| bump(u / 0.5) * bump((t - 1.0) / 0.6);
    let f = GroupoidFunction::zero(fixed, SupportFlag::Positive).on_units(0, 0.4, 1.6, |_, t| C64::new(chart(0.0, t), 0.0)).expect("profile fits");
    let oracle = mollified_dirac(chart, kappa, (0.4, 1.6), 1e-3);
    let rel = match f.trace_formula_fixed() {
        Ok(parts) => (parts.fixed.re - oracle).abs() / oracle.abs(),
        Err(_) => f64::NAN,
    };
    report.value("fixed_term_oracle", oracle);
    report.criteria.push(Criterion::at_most(5, "fixed_term_vs_mollified_dirac", rel, tol.dirac));
    report.finish()
}
