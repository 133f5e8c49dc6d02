//! Symbol identities, the analytic pairing on S1 and the geometric side on
//! declarative systems.

use std::f64::consts::TAU;
use std::sync::Arc;

use residue_index_core::foliated_groupoid::*;
use residue_index_core::fourier::Fourier;
use residue_index_core::index_harness::*;
use residue_index_core::linalg::CMat;
use residue_index_core::{Error, C64};

use super::{bump, Context};
use crate::config::{DeclarativeSpec, MatrixSpec, S1Spec, ModeSpec, ProjectorSpec, RunConfig, SystemSpec, WeightSpec};
use crate::report::{Criterion, TaskReport, TaskStatus};

fn matrix(m: &MatrixSpec) -> CMat {
    let (r, c) = m.shape();
    CMat::from_fn(r, c, |i, j| C64::new(m.re[i][j], m.im.as_ref().map_or(0.0, |im| im[i][j])))
}

fn fourier(modes: &[ModeSpec], rank: usize) -> Fourier {
    let list: Vec<(i64, CMat)> = modes.iter().map(|m| (m.mode, matrix(&m.value()))).collect();
    Fourier::from_modes(rank, rank, &list)
}

/// `D₊` from the config; `D₋` is taken from the config or as the formal adjoint
/// `a₋ = a₊*`, `b₋ = b₊* + (2πi)^{-1}(a₊*)′`.
pub fn leafwise_operator(cfg: &RunConfig) -> Result<LeafwiseOperator, Error> {
    let op = &cfg.operator;
    let a_plus = fourier(&op.a_plus, op.rank);
    let b_plus = fourier(&op.b_plus, op.rank);
    let (a_minus, b_minus) = match (&op.a_minus, &op.b_minus) {
        (Some(a), Some(b)) => (fourier(a, op.rank), fourier(b, op.rank)),
        _ => {
            let a_adj = a_plus.adjoint();
            let b = b_plus.adjoint().add(&a_adj.deriv().scale(C64::new(0.0, -1.0 / TAU)))?;
            (a_adj, b)
        }
    };
    LeafwiseOperator::new(a_plus, b_plus, a_minus, b_minus)
}

pub fn pairing_config(cfg: &RunConfig, truncation: usize) -> PairingConfig {
    let mut p = PairingConfig::new(truncation);
    p.depth = cfg.numerics.depth;
    p.weight = match cfg.operator.weight {
        WeightSpec::Abs => Weight::Abs,
        WeightSpec::Bracket => Weight::Bracket,
    };
    p.j = match &cfg.operator.j {
        ProjectorSpec::Plus => None,
        ProjectorSpec::Matrix(m) => Some(matrix(m)),
    };
    p.bott = Fourier::scalar_modes(&[(cfg.operator.bott_winding, C64::new(1.0, 0.0))]);
    p.n_max = cfg.numerics.n_max;
    p.floor = cfg.numerics.degeneracy_floor;
    p.defect_tolerance = cfg.tolerances.idempotent.max(1e-6);
    p
}

/// Seed idempotent on the transversal circle: `χ ⊗ χ` projection plus a
/// self-adjoint perturbation of size `δ`.
pub fn seed(pres: &Arc<HolonomyPresentation>, period: f64, center: f64, halfwidth: f64, delta: f64) -> Result<GroupoidFunction, Error> {
    let chi = move |b: f64| bump((b / period - center) / halfwidth);
    let e0 = rank_one_projection(pres, &chi)?;
    let p = GroupoidFunction::zero(pres.clone(), SupportFlag::Full).on_units(0, -0.5 * period, 0.5 * period, |b, t| {
        let w = bump(2.0 * t / period);
        C64::new(w * (TAU * b / period).cos(), w * 0.3 * t / period)
    })?;
    let v = p.add(&p.adjoint())?;
    e0.linear_combination(C64::new(1.0, 0.0), &v, C64::new(delta, 0.0))
}

fn symbol_identities(report: &mut TaskReport, cfg: &RunConfig, d: &LeafwiseOperator) -> Result<(), Error> {
    let susp = build_suspension(d, cfg.numerics.truncation, cfg.numerics.depth)?;
    let defects = susp.sigma_defects(24);
    let pc = pairing_config(cfg, cfg.numerics.truncation);
    let j = pc.j.clone().unwrap_or_else(|| plus_projector(&susp));
    let toeplitz = build_toeplitz(&susp, &j, &pc.bott)?;
    let lead = toeplitz.leading_defect()?;
    let kernels = index_kernels(&susp, &toeplitz, pc.weight)?;
    let order_drop = kernels.k1.component(kernels.k1.order()).map_or(0.0, |c| c.max_abs());
    let tol = cfg.tolerances.symbol;
    report.certificate("sigma_f_squared", defects.f_squared);
    report.certificate("sigma_p_squared", defects.p_squared);
    report.certificate("sigma_p_heaviside", defects.heaviside);
    report.certificate("sigma_t_inverse", lead);
    report.certificate("commutator_log_leading", order_drop);
    report.criteria.push(Criterion::at_most(6, "sigma_f_squared", defects.f_squared, tol));
    report.criteria.push(Criterion::at_most(6, "sigma_p_squared", defects.p_squared.max(defects.heaviside), tol));
    report.criteria.push(Criterion::at_most(6, "sigma_t_inverse", lead, tol));
    report.criteria.push(Criterion::at_most(6, "commutator_log_order_drop", order_drop, tol));
    Ok(())
}

fn s1_pairing(report: &mut TaskReport, cfg: &RunConfig, d: &LeafwiseOperator, period: f64, omega: &str, points: usize) -> Result<(), Error> {
    let system = FoliatedFlowSystem::product(period, omega)?;
    let degeneracy = detect_orbits(&system, cfg.numerics.n_max, cfg.numerics.degeneracy_floor);
    report.certificate("min_degeneracy_gap", degeneracy.min_gap);
    let degeneracy = degeneracy.certify()?;
    let pres = Arc::new(HolonomyPresentation::product(period, points)?);
    let i = &cfg.idempotent;
    let seed = seed(&pres, period, i.center, i.halfwidth, i.perturbation)?;
    let mut icfg = IdempotentConfig::new(cfg.tolerances.idempotent, period);
    icfg.max_iterations = cfg.numerics.idempotent_max_iterations;
    let idem = approximate_idempotent(&seed, &icfg)?;
    report.certificate("idempotent_defect", idem.defect);
    report.certificate("idempotent_spectral_gap", idem.spectral_gap);
    report.certificate("idempotent_iterations", (idem.history.len() - 1) as f64);
    for (k, h) in idem.history.iter().enumerate() {
        report.tables.contributions.push(("idempotent_defect".into(), k as i64, *h));
    }
    let n = cfg.numerics.truncation;
    let r = analytic_pairing(&system, d, &idem.e, &pairing_config(cfg, n))?;
    let r2 = analytic_pairing(&system, d, &idem.e, &pairing_config(cfg, 2 * n))?;
    let empty = degeneracy.orbits.is_empty() && degeneracy.fixed_points.is_empty();
    let integrality = integrality_check(r2.route_b, cfg.tolerances.pairing, empty);
    report.value("pairing_route_a", r2.route_a);
    report.value("pairing_route_b", r2.route_b);
    report.value("pairing_route_b_at_n", r.route_b);
    report.value("connes_euler_route_a", r2.chi_a);
    report.value("connes_euler_route_b", r2.chi_b);
    report.value("nearest_integer", integrality.nearest as f64);
    report.certificate("route_b_doubling_delta", r2.doubling_delta);
    report.certificate("route_b_fit_residual", r2.fit_residual);
    report.certificate("route_b_fit_condition", r2.fit_condition);
    if let Some(msg) = integrality.inconsistency {
        report.note(msg);
    }
    for t in &r2.terms {
        let a = (t.coefficients[0] * t.residues_a[0] + t.coefficients[1] * t.residues_a[1]).re;
        report.tables.contributions.push(("arrow_route_a".into(), t.n, a));
        if let Some(b) = t.residues_b {
            report.tables.contributions.push(("arrow_route_b".into(), t.n, (t.coefficients[0] * b[0] + t.coefficients[1] * b[1]).re));
        }
    }
    for (k, series) in ["unit_k1", "unit_k2"].iter().enumerate() {
        for (&t, &v) in r2.t_grid.iter().zip(&r2.unit_traces[k]) {
            report.tables.heat_traces.push(((*series).into(), t, v));
        }
    }
    let tol = cfg.tolerances.pairing;
    let advisory = idem.defect > 1e-6;
    let mut push = |name: &str, v: f64| {
        let mut c = Criterion::at_most(7, name, v, tol);
        c.advisory = advisory;
        report.criteria.push(c);
    };
    push("pairing_minus_connes_euler", (r2.route_a - r2.chi_a).abs().max((r2.route_b - r2.chi_b).abs()));
    push("route_a_vs_route_b", (r2.route_a - r2.route_b).abs());
    push("distance_to_integer", integrality.distance);
    push("doubling_drift", (r2.route_b - r.route_b).abs());
    let c = Criterion::at_most(7, "idempotent_defect", idem.defect, cfg.tolerances.idempotent);
    report.criteria.push(c);
    Ok(())
}

/// Coefficients of `(t - a)²(b - t)²`, lowest degree first.
fn quartic(a: f64, b: f64) -> Vec<f64> {
    let mul = |p: &[f64], q: &[f64]| {
        let mut r = vec![0.0; p.len() + q.len() - 1];
        for (i, x) in p.iter().enumerate() {
            for (j, y) in q.iter().enumerate() {
                r[i + j] += x * y;
            }
        }
        r
    };
    mul(&mul(&[-a, 1.0], &[-a, 1.0]), &mul(&[b, -1.0], &[b, -1.0]))
}

fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &x| acc * t + x)
}

/// `∫_a^b p(t) e^{ct} dt` by repeated integration by parts.
fn exp_moment(p: &[f64], c: f64, a: f64, b: f64) -> f64 {
    let anti = |t: f64| {
        let mut d = p.to_vec();
        let mut s = 0.0;
        let mut j = 0;
        while !d.is_empty() {
            s += if j % 2 == 0 { 1.0 } else { -1.0 } * poly_eval(&d, t) / c.powi(j + 1);
            d = d.iter().enumerate().skip(1).map(|(i, &x)| i as f64 * x).collect();
            j += 1;
        }
        (c * t).exp() * s
    };
    anti(b) - anti(a)
}

/// Hand-expanded oracles for scalar data: finite `n`-sum for `Θ` and the
/// geometric series `e^{λt}/(e^{κt} - 1) = Σ_k e^{(λ - kκ)t}` for `W`.
fn theta_oracle(o: &OrbitData, p: &[f64], (a, b): (f64, f64)) -> Option<f64> {
    if o.h_prime.rows() != 1 {
        return None;
    }
    let h = o.h_prime[(0, 0)].re;
    let jp = (o.j.plus.rows() == 1).then(|| o.j.plus[(0, 0)].re);
    let jm = (o.j.minus.rows() == 1).then(|| o.j.minus[(0, 0)].re);
    let mut s = 0.0;
    let mut n = (a / o.period).ceil() as i32;
    while n as f64 * o.period <= b {
        let str = jp.map_or(0.0, |x| x.powi(n)) - jm.map_or(0.0, |x| x.powi(n));
        s += str / (1.0 - h.powi(n)).abs() * poly_eval(p, n as f64 * o.period) * o.period;
        n += 1;
    }
    Some(s)
}

fn w_oracle(fp: &FixedPointData, p: &[f64], (a, b): (f64, f64)) -> Option<f64> {
    if fp.kappa.rows() != 1 || fp.kappa[(0, 0)].re <= 0.0 || fp.j.plus.rows() > 1 || fp.j.minus.rows() > 1 {
        return None;
    }
    let kappa = fp.kappa[(0, 0)].re;
    let series = |lambda: f64| -> f64 {
        let mut s = 0.0;
        for k in 1..=100_000 {
            let term = exp_moment(p, lambda - k as f64 * kappa, a, b);
            s += term;
            if term.abs() <= 1e-18 * s.abs().max(1e-300) {
                break;
            }
        }
        s
    };
    let plus = if fp.j.plus.rows() == 1 { series(fp.j.plus[(0, 0)].re) } else { 0.0 };
    let minus = if fp.j.minus.rows() == 1 { series(fp.j.minus[(0, 0)].re) } else { 0.0 };
    Some(plus - minus)
}

fn declarative(report: &mut TaskReport, cfg: &RunConfig) -> Result<(), Error> {
    let SystemSpec::Declarative(DeclarativeSpec { orbits, fixed_points }) = &cfg.system else { unreachable!("declarative systems only") };
    let orbits: Vec<OrbitData> = orbits
        .iter()
        .map(|o| Ok(OrbitData { period: o.period, h_prime: matrix(&o.h_prime), j: GradedEndo::new(matrix(&o.j_plus), matrix(&o.j_minus))? }))
        .collect::<Result<_, Error>>()?;
    let fixed: Vec<FixedPointData> = fixed_points
        .iter()
        .map(|f| Ok(FixedPointData { kappa: matrix(&f.kappa), j: GradedEndo::new(matrix(&f.j_plus), matrix(&f.j_minus))? }))
        .collect::<Result<_, Error>>()?;
    let system = FoliatedFlowSystem::Declarative { orbits: orbits.clone(), fixed_points: fixed.clone() };
    let degeneracy = detect_orbits(&system, cfg.numerics.n_max, cfg.numerics.degeneracy_floor);
    report.certificate("min_degeneracy_gap", degeneracy.min_gap);
    let degeneracy = degeneracy.certify()?;
    let support = (cfg.geometric.t_lo, cfg.geometric.t_hi);
    let p = quartic(support.0, support.1);
    let periods: Vec<f64> = orbits.iter().map(|o| o.period).collect();
    let on_orbit = |k: usize, v: f64, t: f64| C64::new(poly_eval(&p, t) * (1.0 + 0.5 * (TAU * v / periods[k]).cos()), 0.0);
    let at_fixed = |_: usize, t: f64| C64::new(poly_eval(&p, t), 0.0);
    let e = OrbitRestriction { on_orbit: &on_orbit, at_fixed: &at_fixed, t_support: support, flag: SupportFlag::Positive };
    let quad = Quadrature { panels: cfg.numerics.quadrature_panels, order: cfg.numerics.quadrature_order };
    let g = geometric_pairing(&degeneracy, &e, GeometricVariant::Positive, None, quad, cfg.numerics.n_max, cfg.numerics.degeneracy_floor)?;
    report.value("geometric_pairing", g.total);
    let mut worst = 0.0f64;
    let mut checked = true;
    for (k, (o, v)) in orbits.iter().zip(&g.orbit_terms).enumerate() {
        report.tables.contributions.push(("theta".into(), k as i64, v.re));
        match theta_oracle(o, &p, support) {
            Some(x) => worst = worst.max((x - v.re).abs()),
            None => checked = false,
        }
    }
    for (k, (f, v)) in fixed.iter().zip(&g.fixed_terms).enumerate() {
        report.tables.contributions.push(("w".into(), k as i64, v.re));
        match w_oracle(f, &p, support) {
            Some(x) => worst = worst.max((x - v.re).abs()),
            None => checked = false,
        }
    }
    if checked {
        report.criteria.push(Criterion::at_most(8, "geometric_vs_series_oracles", worst, cfg.tolerances.geometric));
    } else {
        report.note("series oracles need scalar orbit and fixed-point data");
    }
    Ok(())
}

pub fn run(ctx: &Context<'_>) -> TaskReport {
    let cfg = ctx.config;
    let mut report = TaskReport::new("index-pairing");
    let outcome = (|| -> Result<(), Error> {
        match &cfg.system {
            SystemSpec::S1(S1Spec { period, omega, points }) => {
                let d = leafwise_operator(cfg)?;
                let omega_value = Rational::parse_decimal(omega)?.to_f64();
                report.certificate("invariance_defect", d.invariance_defect(omega_value, *period));
                symbol_identities(&mut report, cfg, &d)?;
                s1_pairing(&mut report, cfg, &d, *period, omega, *points)
            }
            SystemSpec::Declarative(_) => declarative(&mut report, cfg),
        }
    })();
    if let Err(e) = outcome {
        report.status = if e.is_degeneracy() { TaskStatus::Refused } else { TaskStatus::Error };
        report.note(e.to_string());
        if report.status == TaskStatus::Refused {
            report.values.clear();
        }
    }
    report.finish()
}
