//! Residue of `1/|ξ|`, closed-form Mellin validation and randomized
//! fixed-point cross-checks.

use rayon::prelude::*;
use residue_index_core::equivariant_residue::{localized_residue_fixed_circles, separable_values, CircleDiffeo, FiberAction, FiberSymbol, SeparableHeatConfig};
use residue_index_core::fourier::Fourier;
use residue_index_core::linalg::CMat;
use residue_index_core::mellin::{geometric_grid, mellin_residue_oracle, HeatKernel, HeatTraceSample, MellinConfig, MellinFit};
use residue_index_core::symbol_calculus::{wodzicki_residue, ClassicalSymbol, HomogeneousComponent};
use residue_index_core::C64;

use super::{Context, Rng};
use crate::cache::Cache;
use crate::report::{Criterion, TaskReport};

/// `ζ(s)` by Euler-Maclaurin summation with 20 terms and six Bernoulli corrections.
pub fn zeta(s: f64) -> f64 {
    const B: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let n = 20.0f64;
    let mut sum: f64 = (1..20).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s;
    let mut fact = 2.0;
    for (k, b) in B.iter().enumerate() {
        let two_k = 2 * (k + 1);
        sum += b / fact * rising * n.powf(-s - two_k as f64 + 1.0);
        rising *= (s + two_k as f64 - 1.0) * (s + two_k as f64);
        fact *= ((two_k + 1) * (two_k + 2)) as f64;
    }
    sum
}

/// Residue of `2ζ(1 + z)` at `z = 0` from the symmetric difference quotient.
pub fn zeta_residue_oracle() -> f64 {
    let z = 1e-3;
    0.5 * (z * 2.0 * zeta(1.0 + z) + (-z) * 2.0 * zeta(1.0 - z))
}

fn inverse_abs_xi(depth: usize) -> ClassicalSymbol {
    let comp = HomogeneousComponent::even(-1, Fourier::scalar_const(C64::new(1.0, 0.0)));
    let mut s = ClassicalSymbol::zero(-1, depth, 1, 1);
    s.set_component(comp).expect("degree -1 exists");
    s
}

/// `Tr(P e^{-tQ})` with `P = 1/max(|n|,1)` and `Q = max(|n|,1)` on `|n| ≤ N`.
fn closed_form_values(n: usize, t_grid: &[f64]) -> Vec<C64> {
    t_grid
        .iter()
        .map(|&t| {
            let mut s = (-t).exp();
            for k in (1..=n).rev() {
                let k = k as f64;
                s += 2.0 * (-t * k).exp() / k;
            }
            C64::new(s, 0.0)
        })
        .collect()
}

fn record_fit(report: &mut TaskReport, series: &str, sample: &HeatTraceSample, fit: &MellinFit, cfg: &MellinConfig) {
    for (&t, &v) in sample.t_grid.iter().zip(&sample.values) {
        report.tables.heat_traces.push((series.into(), t, v));
    }
    for (b, &c) in cfg.basis.iter().zip(&fit.coefficients) {
        report.tables.fit_bases.push((series.into(), b.power, b.log_power, c));
    }
}

/// One randomized fixed-point case: order −1 symbol, hyperbolic two-fixed-point
/// map with `h' ≥ 1 - a - |b| > 0.28`, trivial (even cases) or non-trivial 2×2
/// bundle map.
#[derive(Debug)]
struct CrossCase {
    symbol: FiberSymbol,
    action: FiberAction,
}

fn random_matrix(rng: &mut Rng, scale: f64) -> CMat {
    CMat::from_fn(2, 2, |_, _| C64::new(rng.range(-scale, scale), rng.range(-scale, scale)))
}

fn random_case(rng: &mut Rng, index: usize, depth: usize) -> CrossCase {
    let a = rng.range(0.3, 0.6);
    let b = rng.range(-0.2 * a, 0.2 * a);
    let diffeo = CircleDiffeo::two_fixed_points(a, b).expect("hyperbolic map");
    let bundle = if index.is_multiple_of(2) {
        Fourier::constant(CMat::identity(2))
    } else {
        let m0 = &CMat::identity(2) + &random_matrix(rng, 0.2);
        Fourier::from_modes(2, 2, &[(0, m0), (1, random_matrix(rng, 0.15)), (-1, random_matrix(rng, 0.15))])
    };
    let action = FiberAction::new(diffeo, bundle).expect("invertible bundle map");
    let ray = |rng: &mut Rng| {
        let m0 = &CMat::identity(2) + &random_matrix(rng, 0.3);
        Fourier::from_modes(2, 2, &[(0, m0), (1, random_matrix(rng, 0.3)), (-1, random_matrix(rng, 0.3))])
    };
    let mut sym = ClassicalSymbol::zero(-1, depth, 2, 2);
    let lead = HomogeneousComponent::new(-1, ray(rng), ray(rng)).expect("shapes agree");
    sym.set_component(lead).expect("degree -1 exists");
    let sub = HomogeneousComponent::new(-2, Fourier::constant(random_matrix(rng, 1.0)), Fourier::constant(random_matrix(rng, 1.0))).expect("shapes agree");
    sym.set_component(sub).expect("degree -2 exists");
    CrossCase { symbol: FiberSymbol::constant_in_y(sym), action }
}

struct CrossResult {
    local: f64,
    oracle: f64,
    relative: f64,
    doubling: f64,
    residual: f64,
    sample: HeatTraceSample,
    fit: MellinFit,
}

fn run_case(case: &CrossCase, modes: usize, floor: f64, cache: &Cache) -> Result<CrossResult, String> {
    let local = localized_residue_fixed_circles(&case.symbol, &case.action, floor).map_err(|e| e.to_string())?.re;
    let cfg = SeparableHeatConfig::fixed_circle(modes, 1.0);
    let key = Cache::operator_hash(&format!("separable|{:?}|{:?}|{:?}|{}", case.symbol, case.action, cfg.t_grid, cfg.anisotropy));
    let values = |n: usize| cache.get_or_compute(&key, n, || separable_values(&case.symbol, &case.action, n, &cfg).map_err(|e| e.to_string()));
    let half = values(modes)?;
    let full = values(2 * modes)?;
    let hmax = full.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(f64::MIN_POSITIVE);
    let doubling = full.iter().zip(&half).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / hmax;
    let sample = HeatTraceSample {
        t_grid: cfg.t_grid.clone(),
        values: full.iter().map(|z| z.re).collect(),
        truncation: 2 * modes,
        kernel: HeatKernel::Gaussian,
        doubling_delta: Some(doubling),
    };
    let fit = mellin_residue_oracle(&sample, &MellinConfig::for_kernel(HeatKernel::Gaussian)).map_err(|e| e.to_string())?;
    let relative = (fit.residue - local).abs() / local.abs().max(1e-300);
    Ok(CrossResult { local, oracle: fit.residue, relative, doubling, residual: fit.residual, sample, fit })
}

pub fn run(ctx: &Context<'_>) -> TaskReport {
    let cfg = ctx.config;
    let tol = &cfg.tolerances;
    let num = &cfg.numerics;
    let mut report = TaskReport::new("residue-crosscheck");

    let residue = wodzicki_residue(&inverse_abs_xi(num.depth)).map(|z| z.re).unwrap_or(f64::NAN);
    let zeta_oracle = zeta_residue_oracle();
    report.value("wodzicki_residue", residue);
    report.value("zeta_oracle", zeta_oracle);
    report.criteria.push(Criterion::at_most(1, "wodzicki_vs_zeta", (residue - zeta_oracle).abs(), tol.residue));

    let t_grid = geometric_grid(0.01, 1.0, 40);
    let n = num.mellin_modes;
    let key = Cache::operator_hash(&format!("closed-form|{t_grid:?}"));
    let full = ctx.cache.get_or_compute::<String>(&key, n, || Ok(closed_form_values(n, &t_grid))).unwrap_or_default();
    let half = ctx.cache.get_or_compute::<String>(&key, n / 2, || Ok(closed_form_values(n / 2, &t_grid))).unwrap_or_default();
    let hmax = full.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let doubling = full.iter().zip(&half).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / hmax;
    let sample = HeatTraceSample { t_grid, values: full.iter().map(|z| z.re).collect(), truncation: n, kernel: HeatKernel::Poisson, doubling_delta: Some(doubling) };
    let mcfg = MellinConfig::for_kernel(HeatKernel::Poisson);
    match mellin_residue_oracle(&sample, &mcfg) {
        Ok(fit) => {
            report.value("mellin_residue", fit.residue);
            report.certificate("mellin_fit_residual", fit.residual);
            report.certificate("mellin_doubling_delta", doubling);
            report.criteria.push(Criterion::at_most(2, "mellin_closed_form", (fit.residue - zeta_oracle).abs(), tol.mellin));
            report.criteria.push(Criterion::at_most(2, "mellin_fit_residual", fit.residual, tol.fit_residual));
            record_fit(&mut report, "closed_form", &sample, &fit, &mcfg);
        }
        Err(e) => {
            report.criteria.push(Criterion::at_most(2, "mellin_closed_form", f64::NAN, tol.mellin));
            report.note(format!("closed-form fit: {e}"));
        }
    }

    let mut rng = Rng::new(num.seed);
    let cases: Vec<CrossCase> = (0..num.crosscheck_cases).map(|i| random_case(&mut rng, i, 3)).collect();
    let results: Vec<Result<CrossResult, String>> =
        cases.par_iter().map(|c| run_case(c, num.crosscheck_modes, num.degeneracy_floor, ctx.cache)).collect();
    let mut worst = 0.0f64;
    let mut failed = false;
    let (mut worst_doubling, mut worst_residual) = (0.0f64, 0.0f64);
    let gcfg = MellinConfig::for_kernel(HeatKernel::Gaussian);
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(r) => {
                worst = worst.max(r.relative);
                worst_doubling = worst_doubling.max(r.doubling);
                worst_residual = worst_residual.max(r.residual);
                report.value(&format!("crosscheck_{i:02}_local"), r.local);
                report.value(&format!("crosscheck_{i:02}_oracle"), r.oracle);
                record_fit(&mut report, &format!("crosscheck_{i:02}"), &r.sample, &r.fit, &gcfg);
            }
            Err(e) => {
                failed = true;
                report.note(format!("cross-check {i}: {e}"));
            }
        }
    }
    report.certificate("crosscheck_doubling_delta", worst_doubling);
    report.certificate("crosscheck_fit_residual", worst_residual);
    report.criteria.push(Criterion::at_most(3, "fixed_point_crosscheck", if failed { f64::NAN } else { worst }, tol.crosscheck));
    report.finish()
}
