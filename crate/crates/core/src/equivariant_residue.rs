//! Localized residues `Res_{z=0} Tr(P U_g Q^{-z})` on `S¹_x × S¹_y`, where `g`
//! acts on the fiber circle `y` only.
//!
//! Two evaluations are provided: the fixed-point formula built from the
//! degree −1 symbol component, and heat traces on truncated Fourier bases that
//! feed [`crate::mellin::mellin_residue_oracle`].

use alloc::format;
use alloc::vec::Vec;

use crate::fourier::Fourier;
use crate::linalg::{hermitian_function, CMat};
use crate::mellin::{HeatKernel, HeatTraceSample};
use crate::symbol_calculus::{commutator_log, compose, ClassicalSymbol};
use crate::{cis_tau, Error, Result, C64, TAU};

pub const DEFAULT_NONDEGENERACY_FLOOR: f64 = 1e-6;

/// A fixed point `x*` of the lift together with `h'(x*)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoint {
    pub x: f64,
    pub slope: f64,
}

/// Orientation-preserving circle diffeomorphism with lift `h(x) = x + p(x)`,
/// `p` periodic and real.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleDiffeo {
    periodic: Fourier,
    fixed_points: Vec<FixedPoint>,
    identity: bool,
}

const SCAN_POINTS: usize = 4096;

impl CircleDiffeo {
    /// Validate the lift and locate all fixed points. Fails if some fixed
    /// point has `|1 - h'| < floor`.
    pub fn new(periodic: Fourier, floor: f64) -> Result<Self> {
        if periodic.shape() != (1, 1) {
            return Err(Error::InvalidDiffeo("periodic part must be scalar".into()));
        }
        for (k, c) in periodic.iter_modes() {
            let d = (c[(0, 0)] - periodic.mode(-k)[(0, 0)].conj()).norm();
            if d > 1e-12 {
                return Err(Error::InvalidDiffeo(format!("periodic part is not real (mode {k})")));
            }
        }
        let dp = periodic.deriv();
        for j in 0..SCAN_POINTS {
            let x = j as f64 / SCAN_POINTS as f64;
            if 1.0 + dp.eval(x)[(0, 0)].re <= 0.0 {
                return Err(Error::InvalidDiffeo(format!("lift is not increasing at {x}")));
            }
        }
        let identity = periodic.is_zero();
        let mut d = CircleDiffeo { periodic, fixed_points: Vec::new(), identity };
        if !identity {
            d.fixed_points = d.locate_fixed_points(floor)?;
        }
        Ok(d)
    }

    pub fn identity() -> Self {
        CircleDiffeo { periodic: Fourier::zero(1, 1), fixed_points: Vec::new(), identity: true }
    }

    /// `h(x) = x + α`.
    pub fn rotation(alpha: f64) -> Result<Self> {
        Self::new(Fourier::scalar_const(C64::new(alpha, 0.0)), DEFAULT_NONDEGENERACY_FLOOR)
    }

    /// `h(y) = y + a sin(2πy)/(2π) + b sin(4πy)/(4π)`: fixed points 0 and ½
    /// with `h' = 1 + a + b` and `1 - a + b` when `|b| < |a|`.
    pub fn two_fixed_points(a: f64, b: f64) -> Result<Self> {
        let s1 = a / (2.0 * TAU);
        let s2 = b / (4.0 * TAU);
        let f = Fourier::scalar_modes(&[
            (1, C64::new(0.0, -s1)),
            (-1, C64::new(0.0, s1)),
            (2, C64::new(0.0, -s2)),
            (-2, C64::new(0.0, s2)),
        ]);
        Self::new(f, DEFAULT_NONDEGENERACY_FLOOR)
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn periodic_part(&self) -> &Fourier {
        &self.periodic
    }

    pub fn lift(&self, x: f64) -> f64 {
        x + self.periodic.eval(x)[(0, 0)].re
    }

    pub fn derivative(&self, x: f64) -> f64 {
        1.0 + self.periodic.deriv().eval(x)[(0, 0)].re
    }

    pub fn fixed_points(&self) -> &[FixedPoint] {
        &self.fixed_points
    }

    fn locate_fixed_points(&self, floor: f64) -> Result<Vec<FixedPoint>> {
        let g = |x: f64| self.periodic.eval(x)[(0, 0)].re;
        let dg = self.periodic.deriv();
        let dgf = |x: f64| dg.eval(x)[(0, 0)].re;
        let n = SCAN_POINTS;
        let vals: Vec<f64> = (0..n).map(|j| g(j as f64 / n as f64)).collect();
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut roots: Vec<f64> = Vec::new();
        for j in 0..n {
            let (x0, x1) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
            let (g0, g1) = (vals[j], vals[(j + 1) % n]);
            let root = if g0 == 0.0 {
                Some(x0)
            } else if g0 * g1 < 0.0 {
                Some(refine_root(&g, &dgf, x0, x1))
            } else if g0.abs() < 1e-9 * scale && g0.abs() <= g1.abs() && g0.abs() <= vals[(j + n - 1) % n].abs() {
                // Touching zero without a sign change: double root.
                Some(x0)
            } else {
                None
            };
            if let Some(r) = root {
                let r = r - libm::floor(r);
                if !roots.iter().any(|&q| (q - r).abs() < 1e-9 || (q - r).abs() > 1.0 - 1e-9) {
                    roots.push(r);
                }
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
            .into_iter()
            .map(|x| {
                let slope = 1.0 + dgf(x);
                let gap = (1.0 - slope).abs();
                if gap < floor {
                    Err(Error::DegenerateFixedPoint { point: x, gap })
                } else {
                    Ok(FixedPoint { x, slope })
                }
            })
            .collect()
    }
}

fn refine_root(g: &impl Fn(f64) -> f64, dg: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if (gx < 0.0) == (glo < 0.0) {
            lo = x;
            glo = gx;
        } else {
            hi = x;
        }
        let d = dg(x);
        let newton = x - gx / d;
        x = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 || gx.abs() < 1e-16 {
            break;
        }
    }
    x
}

/// `(Uφ)(x, y) = B(y) φ(x, h(y))`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberAction {
    pub diffeo: CircleDiffeo,
    pub bundle_map: Fourier,
}

impl FiberAction {
    pub fn new(diffeo: CircleDiffeo, bundle_map: Fourier) -> Result<Self> {
        let (r, c) = bundle_map.shape();
        if r != c {
            return Err(Error::ShapeMismatch(format!("bundle map shape {:?}", bundle_map.shape())));
        }
        let n = SCAN_POINTS / 4;
        let scale = libm::pow(bundle_map.max_abs().max(1e-300), r as f64);
        for j in 0..n {
            let y = j as f64 / n as f64;
            if bundle_map.eval(y).det().norm() < 1e-12 * scale {
                return Err(Error::SingularBundleMap(y));
            }
        }
        Ok(FiberAction { diffeo, bundle_map })
    }

    pub fn identity(rank: usize) -> Self {
        FiberAction { diffeo: CircleDiffeo::identity(), bundle_map: Fourier::constant(CMat::identity(rank)) }
    }

    pub fn rank(&self) -> usize {
        self.bundle_map.shape().0
    }
}

/// Operator `Σ_j ψ_j(y) ⊗ Op_x(A_j)` on `S¹_x × S¹_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberSymbol {
    pub terms: Vec<(Fourier, ClassicalSymbol)>,
}

impl FiberSymbol {
    pub fn new(terms: Vec<(Fourier, ClassicalSymbol)>) -> Result<Self> {
        let shape = terms.first().map(|t| t.1.shape()).ok_or_else(|| Error::Invalid("empty fiber symbol".into()))?;
        for (psi, a) in &terms {
            if psi.shape() != (1, 1) || a.shape() != shape {
                return Err(Error::ShapeMismatch("fiber symbol terms disagree in shape".into()));
            }
        }
        Ok(FiberSymbol { terms })
    }

    /// A symbol with no `y` dependence.
    pub fn constant_in_y(a: ClassicalSymbol) -> Self {
        FiberSymbol { terms: alloc::vec![(Fourier::scalar_const(C64::new(1.0, 0.0)), a)] }
    }

    pub fn rank(&self) -> usize {
        self.terms[0].1.shape().0
    }

    pub fn scale(&self, s: C64) -> Self {
        FiberSymbol { terms: self.terms.iter().map(|(p, a)| (p.clone(), a.scale(s))).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FiberSymbol { terms }
    }
}

fn residue_matrix(a: &ClassicalSymbol) -> Result<CMat> {
    let (r, c) = a.shape();
    if a.order() < -1 {
        return Ok(CMat::zeros(r, c));
    }
    Ok(a.component(-1).ok_or(Error::MissingDegree(-1))?.ray_sum_mean())
}

/// Fixed-point formula: `Σ_{y*} Σ_j ψ_j(y*) tr[R_j B(y*)] / |1 - h'(y*)|`
/// where `R_j = ∫(a_{j,-1}(x,+1) + a_{j,-1}(x,-1))dx`. For the identity the
/// fixed set is the whole circle and the sum becomes `∫ dy`.
pub fn localized_residue_fixed_circles(p: &FiberSymbol, action: &FiberAction, floor: f64) -> Result<C64> {
    if p.rank() != action.rank() {
        return Err(Error::ShapeMismatch(format!("symbol rank {} vs bundle rank {}", p.rank(), action.rank())));
    }
    let mut total = C64::new(0.0, 0.0);
    for (psi, a) in &p.terms {
        let r = residue_matrix(a)?;
        if action.diffeo.is_identity() {
            let weighted = psi_times(psi, &action.bundle_map)?;
            total += (&r * &weighted.zero_mode()).trace();
            continue;
        }
        for fp in action.diffeo.fixed_points() {
            let gap = (1.0 - fp.slope).abs();
            if gap < floor {
                return Err(Error::DegenerateFixedPoint { point: fp.x, gap });
            }
            let w = psi.eval(fp.x)[(0, 0)] / gap;
            total += (&r * &action.bundle_map.eval(fp.x)).trace() * w;
        }
    }
    Ok(total)
}

/// `ψ(y)·B(y)` for scalar `ψ`.
fn psi_times(psi: &Fourier, b: &Fourier) -> Result<Fourier> {
    let n = b.shape().0;
    let modes: Vec<(i64, CMat)> = psi.iter_modes().map(|(k, c)| (k, CMat::scalar(n, c[(0, 0)]))).collect();
    Fourier::from_modes(n, n, &modes).mul(b, usize::MAX)
}

/// Operator on the truncated basis `{e_k ⊗ v}`, ordered mode-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOperator {
    pub matrix: CMat,
}

impl SpectralOperator {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn identity(dim: usize) -> Self {
        SpectralOperator { matrix: CMat::identity(dim) }
    }

    /// Diagonal Fourier multiplier on modes `-n..=n`, fiber rank `r`.
    pub fn multiplier(n: usize, r: usize, f: impl Fn(i64) -> CMat) -> Self {
        let blocks: Vec<CMat> = (-(n as i64)..=n as i64).map(f).collect();
        assert!(blocks.iter().all(|b| b.rows() == r && b.cols() == r));
        SpectralOperator { matrix: CMat::direct_sum(&blocks) }
    }

    /// `Op(a)` with left quantization: entry `(m, k)` is `â(m - k; ξ = k)`,
    /// with the symbol replaced by `at_zero` at `k = 0`.
    pub fn from_symbol(n: usize, a: &ClassicalSymbol, at_zero: &CMat) -> Self {
        let r = a.shape().0;
        let dim = (2 * n + 1) * r;
        let mut m = CMat::zeros(dim, dim);
        for (ci, k) in (-(n as i64)..=n as i64).enumerate() {
            // Fourier coefficients in x of the total symbol at ξ = k.
            let mut coeff: Vec<(i64, CMat)> = Vec::new();
            if k == 0 {
                coeff.push((0, at_zero.clone()));
            } else {
                for comp in a.components() {
                    let ray = if k > 0 { &comp.plus } else { &comp.minus };
                    let w = libm::pow((k as f64).abs(), comp.degree as f64);
                    for (j, c) in ray.iter_modes() {
                        coeff.push((j, c.scale_re(w)));
                    }
                }
            }
            for (j, c) in coeff {
                let row = k + j;
                if row.unsigned_abs() as usize > n {
                    continue;
                }
                let ri = (row + n as i64) as usize;
                for a_ in 0..r {
                    for b_ in 0..r {
                        m[(ri * r + a_, ci * r + b_)] += c[(a_, b_)];
                    }
                }
            }
        }
        SpectralOperator { matrix: m }
    }

    /// Multiplication by `f(x)`: entry `(m, k)` is `f̂(m - k)`.
    pub fn multiplication(n: usize, f: &Fourier) -> Self {
        let r = f.shape().0;
        let dim = (2 * n + 1) * r;
        let mut m = CMat::zeros(dim, dim);
        for ci in 0..=2 * n {
            for ri in 0..=2 * n {
                let c = f.mode(ri as i64 - ci as i64);
                for a_ in 0..r {
                    for b_ in 0..r {
                        m[(ri * r + a_, ci * r + b_)] = c[(a_, b_)];
                    }
                }
            }
        }
        SpectralOperator { matrix: m }
    }

    /// `(Uφ)(y) = B(y) φ(h(y))` by trapezoid quadrature on `quad` points.
    pub fn pullback(n: usize, action: &FiberAction, quad: usize) -> Self {
        let r = action.rank();
        let dim = (2 * n + 1) * r;
        let mut m = CMat::zeros(dim, dim);
        let ys: Vec<f64> = (0..quad).map(|j| j as f64 / quad as f64).collect();
        let bs: Vec<CMat> = ys.iter().map(|&y| action.bundle_map.eval(y)).collect();
        let hs: Vec<f64> = ys.iter().map(|&y| action.diffeo.lift(y)).collect();
        for (ci, k) in (-(n as i64)..=n as i64).enumerate() {
            for (ri, mm) in (-(n as i64)..=n as i64).enumerate() {
                let mut acc = CMat::zeros(r, r);
                for q in 0..quad {
                    let ph = cis_tau(k as f64 * hs[q] - mm as f64 * ys[q]);
                    acc.add_assign_scaled(&bs[q], ph);
                }
                let acc = acc.scale_re(1.0 / quad as f64);
                for a_ in 0..r {
                    for b_ in 0..r {
                        m[(ri * r + a_, ci * r + b_)] = acc[(a_, b_)];
                    }
                }
            }
        }
        SpectralOperator { matrix: m }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch(format!("dimensions {} and {}", self.dim(), other.dim())));
        }
        Ok(SpectralOperator { matrix: &self.matrix * &other.matrix })
    }
}

/// `Tr(P U e^{-tQ})`, or `e^{-tQ²}` for the Gaussian kernel.
pub fn heat_trace_with(p: &SpectralOperator, u: &SpectralOperator, q: &SpectralOperator, t: f64, kernel: HeatKernel) -> Result<C64> {
    if t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let d = p.dim();
    if u.dim() != d || q.dim() != d {
        return Err(Error::ShapeMismatch(format!("dimensions {}, {}, {}", d, u.dim(), q.dim())));
    }
    let defect = q.matrix.hermitian_defect();
    if defect > 1e-10 * q.matrix.max_abs().max(1.0) {
        return Err(Error::NotSelfAdjoint(defect));
    }
    let f = |l: f64| match kernel {
        HeatKernel::Poisson => libm::exp(-t * l),
        HeatKernel::Gaussian => libm::exp(-t * l * l),
    };
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || q.matrix[(i, j)].norm() == 0.0));
    if diagonal {
        // tr(P U e) = Σ_i (PU)_{ii} f(q_ii) without forming PU.
        let mut s = C64::new(0.0, 0.0);
        for i in 0..d {
            let w = f(q.matrix[(i, i)].re);
            if w == 0.0 {
                continue;
            }
            let pu: C64 = (0..d).map(|k| p.matrix[(i, k)] * u.matrix[(k, i)]).sum();
            s += pu * w;
        }
        return Ok(s);
    }
    let e = hermitian_function(&q.matrix, |l| C64::new(f(l), 0.0));
    Ok((&(&p.matrix * &u.matrix) * &e).trace())
}

/// `Tr(P U e^{-tQ})`.
pub fn heat_trace(p: &SpectralOperator, u: &SpectralOperator, q: &SpectralOperator, t: f64) -> Result<C64> {
    heat_trace_with(p, u, q, t, HeatKernel::Poisson)
}

/// Parameters of the Fourier-block heat trace on `S¹_x × S¹_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableHeatConfig {
    /// Fourier cutoff `N` in both directions. Values are reported at `2N`;
    /// the change from `N` to `2N` is the doubling certificate.
    pub modes: usize,
    /// `Q² = D_x² + c² D_y²` with the `(0,0)` mode lifted to 1.
    pub anisotropy: f64,
    pub quadrature: usize,
    pub t_grid: Vec<f64>,
}

impl SeparableHeatConfig {
    /// Window for fixed-circle problems: `t_min` puts the truncation error of
    /// the `2N` values below `1e-8`, and the grid spans two decades above it.
    pub fn fixed_circle(modes: usize, anisotropy: f64) -> Self {
        let two_n = (2 * modes) as f64;
        let t_min = libm::log(1e8) / (two_n * two_n);
        SeparableHeatConfig { modes, anisotropy, quadrature: 0, t_grid: crate::mellin::geometric_grid(t_min, 100.0 * t_min, 40) }
    }
}

/// Gaussian heat trace `Tr(P U e^{-tQ²})` for `P = Σ ψ_j ⊗ Op(A_j)` and a fiber
/// action, evaluated blockwise: the kernel factorizes over the two circles and
/// only diagonal x-blocks contribute.
pub fn separable_heat_trace(p: &FiberSymbol, action: &FiberAction, cfg: &SeparableHeatConfig) -> Result<HeatTraceSample> {
    if p.rank() != action.rank() {
        return Err(Error::ShapeMismatch("symbol and bundle ranks differ".into()));
    }
    if let Some(&t) = cfg.t_grid.iter().find(|&&t| t <= 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let half = separable_values(p, action, cfg.modes, cfg)?;
    let full = separable_values(p, action, 2 * cfg.modes, cfg)?;
    let hmax = full.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(f64::MIN_POSITIVE);
    let delta = full.iter().zip(&half).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / hmax;
    Ok(HeatTraceSample {
        t_grid: cfg.t_grid.clone(),
        values: full.iter().map(|z| z.re).collect(),
        truncation: 2 * cfg.modes,
        kernel: HeatKernel::Gaussian,
        doubling_delta: Some(delta),
    })
}

/// Complex values of the separable heat trace at cutoff `n`.
pub fn separable_values(p: &FiberSymbol, action: &FiberAction, n: usize, cfg: &SeparableHeatConfig) -> Result<Vec<C64>> {
    let r = p.rank();
    let nq = cfg.quadrature.max(8 * n + 64);
    let ys: Vec<f64> = (0..nq).map(|j| j as f64 / nq as f64).collect();
    let z: Vec<C64> = ys.iter().map(|&y| cis_tau(action.diffeo.lift(y) - y)).collect();
    let bs: Vec<CMat> = ys.iter().map(|&y| action.bundle_map.eval(y)).collect();
    let c2 = cfg.anisotropy * cfg.anisotropy;
    let mut out = alloc::vec![C64::new(0.0, 0.0); cfg.t_grid.len()];
    for (psi, a) in &p.terms {
        // Diagonal symbol values â_0(k), zero at k = 0.
        let diag: Vec<CMat> = (-(n as i64)..=n as i64)
            .map(|k| {
                if k == 0 {
                    return CMat::zeros(r, r);
                }
                let mut s = CMat::zeros(r, r);
                for comp in a.components() {
                    let ray = if k > 0 { &comp.plus } else { &comp.minus };
                    s.add_assign_scaled(&ray.zero_mode(), C64::new(libm::pow((k as f64).abs(), comp.degree as f64), 0.0));
                }
                s
            })
            .collect();
        // V(m) = ∫ ψ B e^{2πim(h-y)} dy for |m| ≤ n.
        let wb: Vec<CMat> = ys.iter().zip(&bs).map(|(&y, b)| b.scale(psi.eval(y)[(0, 0)] / nq as f64)).collect();
        let mut v_pos: Vec<CMat> = Vec::with_capacity(n + 1);
        let mut v_neg: Vec<CMat> = Vec::with_capacity(n + 1);
        let mut zp: Vec<C64> = alloc::vec![C64::new(1.0, 0.0); nq];
        for _m in 0..=n {
            let mut acc_p = CMat::zeros(r, r);
            let mut acc_n = CMat::zeros(r, r);
            for q in 0..nq {
                acc_p.add_assign_scaled(&wb[q], zp[q]);
                acc_n.add_assign_scaled(&wb[q], zp[q].conj());
            }
            v_pos.push(acc_p);
            v_neg.push(acc_n);
            for q in 0..nq {
                zp[q] *= z[q];
            }
        }
        for (ti, &t) in cfg.t_grid.iter().enumerate() {
            let mut x = CMat::zeros(r, r);
            for (i, d) in diag.iter().enumerate() {
                let k = i as f64 - n as f64;
                x.add_assign_scaled(d, C64::new(libm::exp(-t * k * k), 0.0));
            }
            let mut y = v_pos[0].clone();
            for m in 1..=n {
                let w = C64::new(libm::exp(-t * c2 * (m * m) as f64), 0.0);
                y.add_assign_scaled(&v_pos[m], w);
                y.add_assign_scaled(&v_neg[m], w);
            }
            // (0,0) lift: eigenvalue 1 instead of 0.
            let lift = (&diag[n] * &v_pos[0]).trace() * (libm::exp(-t) - 1.0);
            out[ti] += (&x * &y).trace() + lift;
        }
    }
    Ok(out)
}

/// `σ_{T^{-1}} ∘ [ln q, T]` with its zero leading term removed: an order −1
/// symbol whose residue is the local index density.
pub fn index_density(t: &ClassicalSymbol, t_inv: &ClassicalSymbol, q: &ClassicalSymbol) -> Result<ClassicalSymbol> {
    let c = commutator_log(q, t)?;
    let depth = t_inv.depth().min(c.depth());
    compose(t_inv, &c, depth)?.drop_zero_leading()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_fixed_point_map() {
        let d = CircleDiffeo::two_fixed_points(0.6, 0.1).unwrap();
        let fps = d.fixed_points();
        assert_eq!(fps.len(), 2);
        assert!(fps[0].x.abs() < 1e-12 && (fps[0].slope - 1.7).abs() < 1e-12);
        assert!((fps[1].x - 0.5).abs() < 1e-12 && (fps[1].slope - 0.5).abs() < 1e-12);
        assert!((d.lift(1.3) - d.lift(0.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_has_no_fixed_points() {
        let d = CircleDiffeo::rotation(0.618).unwrap();
        assert!(d.fixed_points().is_empty());
        assert!(!d.is_identity());
    }

    #[test]
    fn tangential_fixed_point_is_refused() {
        // p(y) = 0.1(1 - cos 2πy) touches zero at y = 0 with h'(0) = 1.
        let f = Fourier::scalar_modes(&[(0, C64::new(0.1, 0.0)), (1, C64::new(-0.05, 0.0)), (-1, C64::new(-0.05, 0.0))]);
        let r = CircleDiffeo::new(f, DEFAULT_NONDEGENERACY_FLOOR);
        assert!(matches!(r, Err(Error::DegenerateFixedPoint { .. })));
    }

    #[test]
    fn non_monotone_lift_is_rejected() {
        assert!(CircleDiffeo::two_fixed_points(1.5, 0.0).is_err());
    }
}
