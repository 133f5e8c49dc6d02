//! Suspension, Toeplitz operator and the two sides of the index pairing.
//!
//! The fiber `M′ = S¹_x × leaf` is handled in the fiber-ray model: symbols are
//! restricted to leaf covariable `η = 0`, so they are classical symbols on the
//! `x` circle with values in `End(E)`, and the leaf circle enters only through
//! the holonomy action on it. With `u = 1 + ρ(e)(g - 1)J` (`g` the Bott
//! element, `J` a projector on `E` commuting with the grading) the index
//! density splits as `E ⊗ K₁ + (E*E) ⊗ K₂` with
//! `K₁ = [ln q, σ_P(g - 1)J]` and `K₂ = σ_P(ḡ - 1)J ∘ K₁`. Route A takes
//! symbolic residues of `K_j`; route B fits heat traces of their truncated
//! matrices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::equivariant_residue::{localized_residue_fixed_circles, CircleDiffeo, FiberAction, FiberSymbol};
use crate::foliated_groupoid::{
    detect_orbits, theta_trace_fn, w_trace_fn, DegeneracyReport, FoliatedFlowSystem, GroupoidFunction, SupportFlag,
};
use crate::fourier::{sample_count, Fourier};
use crate::linalg::{hermitian_eigen, hermitian_function, CMat};
use crate::mellin::{fixed_circle_basis, geometric_grid, mellin_residue_oracle, HeatKernel, HeatTraceSample, MellinConfig};
use crate::symbol_calculus::{commutator_log, compose, ClassicalSymbol, HomogeneousComponent};
use crate::{cis_tau, Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// `D = [[0, D₋], [D₊, 0]]` on `E⁺ ⊕ E⁻` over the leaf circle, with
/// `D_± = a_±(θ) (2πi)^{-1} d/dθ + b_±(θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafwiseOperator {
    pub rank_plus: usize,
    pub rank_minus: usize,
    pub a_plus: Fourier,
    pub b_plus: Fourier,
    pub a_minus: Fourier,
    pub b_minus: Fourier,
    pub self_adjoint: bool,
}

impl LeafwiseOperator {
    pub fn new(a_plus: Fourier, b_plus: Fourier, a_minus: Fourier, b_minus: Fourier) -> Result<Self> {
        let (rm, rp) = a_plus.shape();
        if b_plus.shape() != (rm, rp) || a_minus.shape() != (rp, rm) || b_minus.shape() != (rp, rm) {
            return Err(Error::ShapeMismatch("D_± coefficients must map E⁺ → E⁻ and E⁻ → E⁺".into()));
        }
        if rm != rp {
            return Err(Error::NonElliptic(format!("E⁺ has rank {rp} but E⁻ has rank {rm}")));
        }
        for (name, a) in [("a_plus", &a_plus), ("a_minus", &a_minus)] {
            let m = a.min_abs_det(sample_count(a.kmax()));
            let scale = libm::pow(a.max_abs().max(1e-300), rp as f64);
            if !(m > 1e-12 * scale) {
                return Err(Error::NonElliptic(format!("{name} is singular (min |det| = {m:e})")));
            }
        }
        let mut d = LeafwiseOperator { rank_plus: rp, rank_minus: rm, a_plus, b_plus, a_minus, b_minus, self_adjoint: false };
        d.self_adjoint = d.self_adjointness_defect() <= 1e-10;
        Ok(d)
    }

    /// `D_± = (2πi)^{-1} d/dθ` on trivial line bundles, i.e. `-i d/dθ` in the
    /// angle variable.
    pub fn dirac_circle() -> Self {
        let one = Fourier::scalar_const(ONE);
        let zero = Fourier::scalar_const(ZERO);
        LeafwiseOperator::new(one.clone(), zero.clone(), one, zero).expect("constant coefficients")
    }

    pub fn rank(&self) -> usize {
        self.rank_plus + self.rank_minus
    }

    fn leaf_matrix(a: &Fourier, b: &Fourier, modes: usize) -> CMat {
        let (r, c) = a.shape();
        let m = 2 * modes + 1;
        let mut out = CMat::zeros(r * m, c * m);
        for (i, mi) in (-(modes as i64)..=modes as i64).enumerate() {
            for (j, mj) in (-(modes as i64)..=modes as i64).enumerate() {
                let (ak, bk) = (a.mode(mi - mj), b.mode(mi - mj));
                for p in 0..r {
                    for q in 0..c {
                        out[(i * r + p, j * c + q)] = ak[(p, q)] * mj as f64 + bk[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// Largest entry of `D₋ - D₊*` on leaf modes `|m| ≤ 8`.
    pub fn self_adjointness_defect(&self) -> f64 {
        let dp = Self::leaf_matrix(&self.a_plus, &self.b_plus, 8);
        let dm = Self::leaf_matrix(&self.a_minus, &self.b_minus, 8);
        (&dm - &dp.adjoint()).max_abs()
    }

    /// Largest change of the coefficients under the leaf rotation `θ ↦ θ + ωt`
    /// induced by the flow, over sampled `t ∈ (0, period]`.
    pub fn invariance_defect(&self, omega: f64, period: f64) -> f64 {
        let mut worst = 0.0f64;
        for f in [&self.a_plus, &self.b_plus, &self.a_minus, &self.b_minus] {
            for (k, c) in f.iter_modes() {
                if k == 0 {
                    continue;
                }
                for s in 1..=16 {
                    let t = period * s as f64 / 16.0;
                    worst = worst.max(c.max_abs() * (cis_tau(k as f64 * omega * t) - ONE).norm());
                }
            }
        }
        worst
    }

    /// Principal symbol of `Q` at `(θ, ξ, η)`.
    pub fn q_leading(&self, theta: f64, xi: f64, eta: f64) -> CMat {
        let (rp, rm) = (self.rank_plus, self.rank_minus);
        let ap = self.a_plus.eval(theta);
        let am = self.a_minus.eval(theta);
        CMat::from_fn(rp + rm, rp + rm, |i, j| match (i < rp, j < rp) {
            (true, true) => if i == j { C64::new(xi, 0.0) } else { ZERO },
            (false, false) => if i == j { C64::new(-xi, 0.0) } else { ZERO },
            (true, false) => am[(i, j - rp)] * eta,
            (false, true) => ap[(i - rp, j)] * eta,
        })
    }

    /// `Q` on `x`-mode `n` and leaf modes `|m| ≤ leaf_modes`, ordered
    /// `[E⁺ modes, E⁻ modes]`.
    pub fn q_block(&self, n: i64, leaf_modes: usize) -> CMat {
        let dp = Self::leaf_matrix(&self.a_plus, &self.b_plus, leaf_modes);
        let dm = Self::leaf_matrix(&self.a_minus, &self.b_minus, leaf_modes);
        let (p, m) = (dm.rows(), dp.rows());
        CMat::from_fn(p + m, p + m, |i, j| match (i < p, j < p) {
            (true, true) => if i == j { C64::new(n as f64, 0.0) } else { ZERO },
            (false, false) => if i == j { C64::new(-(n as f64), 0.0) } else { ZERO },
            (true, false) => dm[(i, j - p)],
            (false, true) => dp[(i - p, j)],
        })
    }
}

/// Admissible weight for `ln|Q|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    /// `|Q|` with zero modes lifted to 1.
    Abs,
    /// `(1 + Q²)^{1/2}`.
    Bracket,
}

impl Weight {
    fn log_of(self, lambda: f64) -> f64 {
        match self {
            Weight::Abs => {
                if lambda.abs() < 1e-12 {
                    0.0
                } else {
                    libm::log(lambda.abs())
                }
            }
            Weight::Bracket => 0.5 * libm::log1p(lambda * lambda),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionData {
    pub operator: LeafwiseOperator,
    pub truncation: usize,
    pub depth: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SigmaDefects {
    /// `max |σ_F² - 1|`.
    pub f_squared: f64,
    /// `max |σ_P² - σ_P|`.
    pub p_squared: f64,
    /// `max |σ_P(θ, ξ, 0) - diag(θ(ξ), θ(-ξ))|`.
    pub heaviside: f64,
}

/// `Q = [[ξ, D₋], [D₊, -ξ]]` on `S¹_x × leaf`.
pub fn build_suspension(d: &LeafwiseOperator, truncation: usize, depth: usize) -> Result<SuspensionData> {
    let defect = d.self_adjointness_defect();
    if defect > 1e-10 {
        return Err(Error::NotSelfAdjoint(defect));
    }
    if truncation == 0 {
        return Err(Error::Invalid("truncation must be positive".into()));
    }
    Ok(SuspensionData { operator: d.clone(), truncation, depth })
}

impl SuspensionData {
    pub fn rank(&self) -> usize {
        self.operator.rank()
    }

    /// `σ_F = sign(σ_Q)` by Hermitian functional calculus.
    pub fn f_leading(&self, theta: f64, xi: f64, eta: f64) -> CMat {
        let q = self.operator.q_leading(theta, xi, eta);
        hermitian_function(&q, |l| C64::new(if l > 0.0 { 1.0 } else { -1.0 }, 0.0))
    }

    pub fn p_leading(&self, theta: f64, xi: f64, eta: f64) -> CMat {
        let f = self.f_leading(theta, xi, eta);
        (&CMat::identity(f.rows()) + &f).scale_re(0.5)
    }

    /// Symbol identities on a grid of leaf points and cosphere directions.
    pub fn sigma_defects(&self, samples: usize) -> SigmaDefects {
        let r = self.rank();
        let id = CMat::identity(r);
        let mut d = SigmaDefects::default();
        for i in 0..samples {
            let theta = i as f64 / samples as f64;
            for k in 0..samples {
                let phi = core::f64::consts::TAU * (k as f64 + 0.5) / samples as f64;
                let (xi, eta) = (libm::cos(phi), libm::sin(phi));
                let f = self.f_leading(theta, xi, eta);
                d.f_squared = d.f_squared.max((&f.matmul(&f) - &id).max_abs());
                let p = self.p_leading(theta, xi, eta);
                d.p_squared = d.p_squared.max((&p.matmul(&p) - &p).max_abs());
            }
            for xi in [1.0, -1.0] {
                let p = self.p_leading(theta, xi, 0.0);
                d.heaviside = d.heaviside.max((&p - &heaviside(self.operator.rank_plus, self.operator.rank_minus, xi)).max_abs());
            }
        }
        d
    }

    /// `σ_P` on the `η = 0` rays.
    pub fn p_ray(&self) -> ClassicalSymbol {
        let (rp, rm) = (self.operator.rank_plus, self.operator.rank_minus);
        let mut s = ClassicalSymbol::zero(0, self.depth, rp + rm, rp + rm);
        let c = HomogeneousComponent::new(
            0,
            Fourier::constant(heaviside(rp, rm, 1.0)),
            Fourier::constant(heaviside(rp, rm, -1.0)),
        )
        .expect("shapes agree");
        s.set_component(c).expect("degree 0 exists");
        s
    }

    /// Scalar symbol of the weight on the `η = 0` rays.
    pub fn q_ray(&self, weight: Weight) -> ClassicalSymbol {
        match weight {
            Weight::Abs => ClassicalSymbol::abs_xi(1, self.depth),
            Weight::Bracket => {
                // (1 + ξ²)^{1/2} = |ξ| Σ_k binom(1/2, k) |ξ|^{-2k}.
                let mut s = ClassicalSymbol::abs_xi(1, self.depth);
                let mut coeff = 1.0;
                for k in 1.. {
                    let degree = 1 - 2 * k;
                    if (1 - degree) as usize > self.depth {
                        break;
                    }
                    coeff *= (0.5 - (k - 1) as f64) / k as f64;
                    s.set_component(HomogeneousComponent::even(degree, Fourier::scalar_const(C64::new(coeff, 0.0)))).expect("degree within depth");
                }
                s
            }
        }
    }

    /// `Q` on `x`-mode `n` and the constant leaf mode (the `η = 0` slice).
    pub fn flat_block(&self, n: i64) -> CMat {
        self.operator.q_block(n, 0)
    }

    /// Eigenvalues of `Q` over `|n| ≤ modes` and leaf modes `|m| ≤ leaf_modes`,
    /// zero eigenvalues lifted to 1.
    pub fn q_spectrum(&self, modes: usize, leaf_modes: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for n in -(modes as i64)..=modes as i64 {
            let (ev, _) = hermitian_eigen(&self.operator.q_block(n, leaf_modes));
            out.extend(ev.into_iter().map(|l| if l.abs() < 1e-12 { 1.0 } else { l }));
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        out
    }
}

fn heaviside(rp: usize, rm: usize, xi: f64) -> CMat {
    let pos = if xi > 0.0 { ONE } else { ZERO };
    let neg = if xi < 0.0 { ONE } else { ZERO };
    let entries: Vec<C64> = (0..rp).map(|_| pos).chain((0..rm).map(|_| neg)).collect();
    CMat::diag(&entries)
}

/// `σ_T = 1 + σ_P(g - 1)J` and `σ_{T^{-1}} = 1 + σ_P(ḡ - 1)J` with the
/// coefficient `ρ(e)` replaced by a formal idempotent.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzData {
    pub j: CMat,
    pub bott: Fourier,
    pub sigma_t: ClassicalSymbol,
    pub sigma_t_inv: ClassicalSymbol,
}

/// `e^{2πix}`.
pub fn bott_generator() -> Fourier {
    Fourier::scalar_modes(&[(1, ONE)])
}

/// Projector onto `E⁺`.
pub fn plus_projector(susp: &SuspensionData) -> CMat {
    let (rp, rm) = (susp.operator.rank_plus, susp.operator.rank_minus);
    heaviside(rp, rm, 1.0)
}

pub fn build_toeplitz(susp: &SuspensionData, j: &CMat, bott: &Fourier) -> Result<ToeplitzData> {
    let r = susp.rank();
    if j.rows() != r || j.cols() != r {
        return Err(Error::ShapeMismatch(format!("J must be {r}×{r}")));
    }
    if (&j.matmul(j) - j).max_abs() > 1e-12 {
        return Err(Error::Invalid("J is not a projector".into()));
    }
    let grading = (&heaviside(susp.operator.rank_plus, susp.operator.rank_minus, 1.0).scale_re(2.0) - &CMat::identity(r)).clone();
    if (&j.matmul(&grading) - &grading.matmul(j)).max_abs() > 1e-12 {
        return Err(Error::Invalid("J must commute with the grading".into()));
    }
    if bott.shape() != (1, 1) {
        return Err(Error::ShapeMismatch("the Bott element is scalar".into()));
    }
    let depth = susp.depth;
    let sigma_p = susp.p_ray();
    let coeff = |g: &Fourier| -> Result<ClassicalSymbol> {
        let gm1 = g.sub(&Fourier::scalar_const(ONE))?;
        let modes: Vec<(i64, CMat)> = gm1.iter_modes().map(|(k, c)| (k, j.scale(c[(0, 0)]))).collect();
        let a = ClassicalSymbol::multiplication(Fourier::from_modes(r, r, &modes), depth);
        compose(&sigma_p, &a, depth)
    };
    let id = ClassicalSymbol::identity(r, depth);
    let sigma_t = id.add(&coeff(bott)?)?;
    let conj = bott.adjoint();
    let sigma_t_inv = id.add(&coeff(&conj)?)?;
    Ok(ToeplitzData { j: j.clone(), bott: bott.clone(), sigma_t, sigma_t_inv })
}

impl ToeplitzData {
    /// `max |(σ_T ∘ σ_{T^{-1}})₀ - 1|` on the order-0 component.
    pub fn leading_defect(&self) -> Result<f64> {
        let r = self.j.rows();
        let prod = compose(&self.sigma_t, &self.sigma_t_inv, self.sigma_t.depth())?;
        let lead = prod.component(0).ok_or(Error::MissingDegree(0))?;
        let id = Fourier::constant(CMat::identity(r));
        Ok(lead.plus.sub(&id)?.max_abs().max(lead.minus.sub(&id)?.max_abs()))
    }
}

/// `K₁ = [ln q, σ_T - 1]` and `K₂ = (σ_{T^{-1}} - 1) ∘ K₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexKernels {
    pub k1: ClassicalSymbol,
    pub k2: ClassicalSymbol,
}

pub fn index_kernels(susp: &SuspensionData, toeplitz: &ToeplitzData, weight: Weight) -> Result<IndexKernels> {
    let r = susp.rank();
    let depth = susp.depth;
    let id = ClassicalSymbol::identity(r, depth);
    let a = toeplitz.sigma_t.sub(&id)?;
    let a_inv = toeplitz.sigma_t_inv.sub(&id)?;
    let k1 = commutator_log(&susp.q_ray(weight), &a)?;
    let k2 = compose(&a_inv, &k1, depth)?;
    Ok(IndexKernels { k1, k2 })
}

/// Block operator on `x`-modes `|n| ≤ N`, blocks of size `rank(E)`.
#[derive(Clone, Debug, Default)]
struct BlockOp {
    blocks: BTreeMap<(i64, i64), CMat>,
}

impl BlockOp {
    fn add_block(&mut self, key: (i64, i64), m: CMat) {
        match self.blocks.get_mut(&key) {
            Some(b) => *b = &*b + &m,
            None => {
                self.blocks.insert(key, m);
            }
        }
    }

    fn mul(&self, other: &BlockOp) -> BlockOp {
        let mut by_row: BTreeMap<i64, Vec<(i64, &CMat)>> = BTreeMap::new();
        for (&(r, c), m) in &other.blocks {
            by_row.entry(r).or_default().push((c, m));
        }
        let mut out = BlockOp::default();
        for (&(r, k), a) in &self.blocks {
            if let Some(row) = by_row.get(&k) {
                for &(c, b) in row {
                    out.add_block((r, c), a.matmul(b));
                }
            }
        }
        out
    }

    fn sub(&self, other: &BlockOp) -> BlockOp {
        let mut out = self.clone();
        for (&k, m) in &other.blocks {
            out.add_block(k, m.scale_re(-1.0));
        }
        out
    }
}

/// Truncated matrices of the flat model at cutoff `N`.
struct FlatMatrices {
    /// `Tr(K_j e^{-tQ²})` per time, for `j = 1, 2`.
    values: [Vec<f64>; 2],
}

fn flat_matrices(susp: &SuspensionData, toeplitz: &ToeplitzData, weight: Weight, n_cut: usize, t_grid: &[f64]) -> FlatMatrices {
    let n_cut = n_cut as i64;
    let r = susp.rank();
    let mut p = BlockOp::default();
    let mut l = BlockOp::default();
    let mut spectra = Vec::new();
    for n in -n_cut..=n_cut {
        let (ev, vecs) = hermitian_eigen(&susp.flat_block(n));
        let proj = |f: &dyn Fn(f64) -> f64| {
            let d: Vec<C64> = ev.iter().map(|&x| C64::new(f(x), 0.0)).collect();
            vecs.matmul(&CMat::diag(&d)).matmul(&vecs.adjoint())
        };
        p.add_block((n, n), proj(&|x| if x > 1e-12 { 1.0 } else { 0.0 }));
        l.add_block((n, n), proj(&|x| weight.log_of(x)));
        spectra.push((ev, vecs));
    }
    let jop = {
        let mut b = BlockOp::default();
        for n in -n_cut..=n_cut {
            b.add_block((n, n), toeplitz.j.clone());
        }
        b
    };
    let mult = |g: &Fourier| {
        let mut b = BlockOp::default();
        for (k, c) in g.iter_modes() {
            for n in -n_cut..=n_cut {
                if (n + k).abs() <= n_cut {
                    b.add_block((n + k, n), CMat::scalar(r, c[(0, 0)]));
                }
            }
        }
        for n in -n_cut..=n_cut {
            b.add_block((n, n), CMat::scalar(r, -ONE));
        }
        b
    };
    let a = p.mul(&mult(&toeplitz.bott)).mul(&jop).mul(&p);
    let a_inv = p.mul(&mult(&toeplitz.bott.adjoint())).mul(&jop).mul(&p);
    let k1 = l.mul(&a).sub(&a.mul(&l));
    let k2 = a_inv.mul(&k1);
    let mut values = [vec![0.0; t_grid.len()], vec![0.0; t_grid.len()]];
    for (idx, k) in [&k1, &k2].into_iter().enumerate() {
        for (i, n) in (-n_cut..=n_cut).enumerate() {
            let Some(kb) = k.blocks.get(&(n, n)) else { continue };
            let (ev, vecs) = &spectra[i];
            // tr(K e^{-tQ²}) = Σ_λ e^{-tλ²} ⟨v_λ, K v_λ⟩.
            let kv = vecs.adjoint().matmul(kb).matmul(vecs);
            for (ti, &t) in t_grid.iter().enumerate() {
                let mut s = 0.0;
                for (m, &lam) in ev.iter().enumerate() {
                    s += (kv[(m, m)] * libm::exp(-t * lam * lam)).re;
                }
                values[idx][ti] += s;
            }
        }
    }
    FlatMatrices { values }
}

/// `Σ_m e^{2πimα} e^{-tm²}`: trace of a leaf rotation against the leaf heat
/// kernel, summed over all leaf modes through theta inversion
/// `√(π/t) Σ_k e^{-π²(α - k)²/t}`.
fn leaf_factor(alpha: f64, t: f64) -> f64 {
    let pi = core::f64::consts::PI;
    let a = alpha - libm::round(alpha);
    let mut s = 0.0;
    for k in -3i32..=3 {
        let d = a - k as f64;
        s += libm::exp(-pi * pi * d * d / t);
    }
    libm::sqrt(pi / t) * s
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairingConfig {
    /// Matrix cutoff `N` of route B; values are taken at `2N`.
    pub truncation: usize,
    pub depth: usize,
    pub weight: Weight,
    /// Projector `J` on `E`; `None` means the projector onto `E⁺`.
    pub j: Option<CMat>,
    pub bott: Fourier,
    pub n_max: i64,
    pub floor: f64,
    /// Largest admissible `max |e*e - e|`.
    pub defect_tolerance: f64,
    /// Length of the leaf circle.
    pub leaf_length: f64,
    pub mellin: MellinConfig,
}

impl PairingConfig {
    pub fn new(truncation: usize) -> Self {
        let mut mellin = MellinConfig::for_kernel(HeatKernel::Gaussian);
        mellin.basis = fixed_circle_basis();
        PairingConfig {
            truncation,
            depth: 6,
            weight: Weight::Abs,
            j: None,
            bott: bott_generator(),
            n_max: 1000,
            floor: 1e-9,
            defect_tolerance: 1e-6,
            leaf_length: 1.0,
            mellin,
        }
    }
}

/// Contribution of the arrows `(b, np)` for one `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrowTerm {
    pub n: i64,
    /// Leaf rotation of the arrow.
    pub rotation: f64,
    /// `∫ E(b, np) db` and `∫ (E*E)(b, np) db`.
    pub coefficients: [C64; 2],
    pub residues_a: [C64; 2],
    /// `None` when the coefficients vanish and no fit was attempted.
    pub residues_b: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairingResult {
    pub route_a: f64,
    pub route_b: f64,
    /// Unit-sheet (`Tr₀`) part of each route.
    pub chi_a: f64,
    pub chi_b: f64,
    pub terms: Vec<ArrowTerm>,
    pub idempotent_defect: f64,
    /// Largest relative change of route-B heat traces between `N` and `2N`.
    pub doubling_delta: f64,
    pub fit_residual: f64,
    pub fit_condition: f64,
    pub degeneracy: DegeneracyReport,
    /// Time grid and unit-arrow heat traces `Tr(K_j e^{-tQ²})` at `2N`.
    pub t_grid: Vec<f64>,
    pub unit_traces: [Vec<f64>; 2],
}

/// Heat traces below this are rounding noise of an identically vanishing
/// diagonal; their residue is 0 and no fit is attempted.
const ZERO_TRACE: f64 = 1e-9;

fn fit_residue(values: Vec<f64>, coarse: &[f64], t_grid: &[f64], n: usize, cfg: &MellinConfig, stats: &mut (f64, f64, f64)) -> Result<f64> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale <= ZERO_TRACE {
        return Ok(0.0);
    }
    let delta = if scale > 0.0 {
        values.iter().zip(coarse).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
    } else {
        0.0
    };
    let sample = HeatTraceSample { t_grid: t_grid.to_vec(), values, truncation: n, kernel: HeatKernel::Gaussian, doubling_delta: Some(delta) };
    let fit = mellin_residue_oracle(&sample, cfg).map_err(|e| Error::Unconverged(format!("route B fit: {e}")))?;
    stats.0 = stats.0.max(delta);
    stats.1 = stats.1.max(fit.residual);
    stats.2 = stats.2.max(fit.condition);
    Ok(fit.residue)
}

fn idempotent_defect(e: &GroupoidFunction) -> Result<(GroupoidFunction, f64)> {
    let ee = e.convolve(e)?;
    let d = ee.sub(e)?.max_abs();
    Ok((ee, d))
}

/// `⟨[τ], Ind(D, [e])⟩ = C∘Res(T^{-1}[ln|Q|, T])` on the product system, by
/// both routes. `e` lives on the unit sheet of the transversal circle.
pub fn analytic_pairing(system: &FoliatedFlowSystem, d: &LeafwiseOperator, e: &GroupoidFunction, cfg: &PairingConfig) -> Result<PairingResult> {
    let FoliatedFlowSystem::Product { period, omega } = system else {
        return Err(Error::Invalid("the analytic pairing needs the product family".into()));
    };
    let degeneracy = detect_orbits(system, cfg.n_max, cfg.floor).certify()?;
    let pres = e.presentation();
    if pres.sheets().len() != 1 || (pres.points(0) as f64 * pres.step() - period).abs() > 1e-9 * period {
        return Err(Error::ShapeMismatch("e must live on the transversal circle of the system".into()));
    }
    let (ee, defect) = idempotent_defect(e)?;
    if defect > cfg.defect_tolerance {
        return Err(Error::Unconverged(format!("idempotent defect {defect:e} above {:e}", cfg.defect_tolerance)));
    }
    let susp = build_suspension(d, cfg.truncation, cfg.depth)?;
    let j = cfg.j.clone().unwrap_or_else(|| plus_projector(&susp));
    let toeplitz = build_toeplitz(&susp, &j, &cfg.bott)?;
    let kernels = index_kernels(&susp, &toeplitz, cfg.weight)?;
    let r = susp.rank();

    // Coefficients Σ_i h E(b_i, np) per n.
    let nb = pres.points(0) as i64;
    let h = pres.step();
    let mut coeffs: BTreeMap<i64, [C64; 2]> = BTreeMap::new();
    for (idx, f) in [e, &ee].into_iter().enumerate() {
        let Some(sd) = f.sheet(0) else { continue };
        for k in sd.t_start..sd.t_start + sd.n_t as i64 {
            if k.rem_euclid(nb) != 0 {
                continue;
            }
            let s: C64 = (0..nb as usize).map(|i| f.value(0, i, k)).sum::<C64>() * h;
            coeffs.entry(k / nb).or_insert([ZERO; 2])[idx] += s;
        }
    }
    coeffs.entry(0).or_insert([ZERO; 2]);

    let n2 = 2 * cfg.truncation;
    let t_min = libm::log(1e8) / (n2 as f64 * n2 as f64);
    let t_grid = geometric_grid(t_min, 100.0 * t_min, 40);
    let fine = flat_matrices(&susp, &toeplitz, cfg.weight, n2, &t_grid);
    let coarse = flat_matrices(&susp, &toeplitz, cfg.weight, cfg.truncation, &t_grid);
    let scale = coeffs.values().flat_map(|c| c.iter()).fold(0.0f64, |m, z| m.max(z.norm()));
    let w = omega.to_f64();
    let mut stats = (0.0f64, 0.0f64, 0.0f64);
    let mut terms = Vec::new();
    let (mut route_a, mut route_b, mut chi_a, mut chi_b) = (0.0, 0.0, 0.0, 0.0);
    for (&n, c) in &coeffs {
        let rot = {
            let x = w * n as f64 * period;
            x - libm::floor(x)
        };
        let action = if rot == 0.0 { FiberAction::identity(r) } else { FiberAction::new(CircleDiffeo::rotation(rot)?, Fourier::constant(CMat::identity(r)))? };
        let mut res_a = [ZERO; 2];
        for (k, sym) in [&kernels.k1, &kernels.k2].into_iter().enumerate() {
            res_a[k] = localized_residue_fixed_circles(&FiberSymbol::constant_in_y(sym.clone()), &action, cfg.floor)? * cfg.leaf_length;
        }
        let live = c.iter().any(|z| z.norm() > 1e-13 * scale.max(1e-300));
        let res_b = if live {
            let mut out = [0.0; 2];
            for k in 0..2 {
                let (vf, vc): (Vec<f64>, Vec<f64>) = if n == 0 {
                    (fine.values[k].clone(), coarse.values[k].clone())
                } else {
                    t_grid
                        .iter()
                        .enumerate()
                        .map(|(i, &t)| (fine.values[k][i] * leaf_factor(rot, t), coarse.values[k][i] * leaf_factor(rot, t)))
                        .unzip()
                };
                let leaf = if n == 0 { cfg.leaf_length } else { 1.0 };
                out[k] = leaf * fit_residue(vf, &vc, &t_grid, n2, &cfg.mellin, &mut stats)?;
            }
            Some(out)
        } else {
            None
        };
        let va = (c[0] * res_a[0] + c[1] * res_a[1]).re;
        route_a += va;
        let vb = res_b.map_or(0.0, |rb| (c[0] * rb[0] + c[1] * rb[1]).re);
        route_b += vb;
        if n == 0 {
            chi_a = va;
            chi_b = vb;
        }
        terms.push(ArrowTerm { n, rotation: rot, coefficients: *c, residues_a: res_a, residues_b: res_b });
    }
    Ok(PairingResult {
        route_a,
        route_b,
        chi_a,
        chi_b,
        terms,
        idempotent_defect: defect,
        doubling_delta: stats.0,
        fit_residual: stats.1,
        fit_condition: stats.2,
        degeneracy,
        t_grid,
        unit_traces: fine.values,
    })
}

/// `χ(D, [e]) = ⟨τ₀, Ind(D, [e])⟩`: the unit-sheet part of the pairing.
pub fn connes_euler(system: &FoliatedFlowSystem, d: &LeafwiseOperator, e: &GroupoidFunction, cfg: &PairingConfig) -> Result<(f64, f64)> {
    let r = analytic_pairing(system, d, e, cfg)?;
    Ok((r.chi_a, r.chi_b))
}

/// Approximate idempotent with its iteration log.
#[derive(Clone, Debug, PartialEq)]
pub struct IdempotentReport {
    pub e: GroupoidFunction,
    pub defect: f64,
    /// `max |e*e - e|` before each iteration and after the last.
    pub history: Vec<f64>,
    /// Smallest `|λ - 1/2|` over the spectrum of the seed's representation.
    pub spectral_gap: f64,
    pub t_support: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdempotentConfig {
    pub tolerance: f64,
    /// Smallest admissible distance of the seed's spectrum from 1/2.
    pub min_gap: f64,
    /// The cutoff is 1 on `|t| ≤ keep` and 0 for `|t| ≥ cut`.
    pub keep: f64,
    pub cut: f64,
    pub max_iterations: usize,
}

impl IdempotentConfig {
    pub fn new(tolerance: f64, period: f64) -> Self {
        IdempotentConfig { tolerance, min_gap: 0.1, keep: 1.5 * period, cut: 2.5 * period, max_iterations: 40 }
    }
}

fn smooth_cutoff(t: f64, keep: f64, cut: f64) -> f64 {
    let a = t.abs();
    if a <= keep {
        return 1.0;
    }
    if a >= cut {
        return 0.0;
    }
    let s = (a - keep) / (cut - keep);
    let f = |x: f64| if x > 0.0 { libm::exp(-1.0 / x) } else { 0.0 };
    f(1.0 - s) / (f(1.0 - s) + f(s))
}

/// Iterates `x ↦ 3x² - 2x³` in the convolution algebra, cutting the growing
/// `t`-support smoothly, until `max |e*e - e| ≤ tolerance`.
pub fn approximate_idempotent(seed: &GroupoidFunction, cfg: &IdempotentConfig) -> Result<IdempotentReport> {
    let scale = seed.max_abs().max(1e-300);
    let asym = seed.sub(&seed.adjoint())?.max_abs();
    if asym > 1e-10 * scale {
        return Err(Error::NotSelfAdjoint(asym));
    }
    let rep = seed.represent()?;
    let (ev, _) = hermitian_eigen(&rep.matrix);
    let gap = ev.iter().fold(f64::INFINITY, |m, &l| m.min((l - 0.5).abs()));
    if gap < cfg.min_gap {
        return Err(Error::NoSpectralGap(format!("spectrum within {gap:e} of 1/2")));
    }
    let mut e = seed.clone();
    let (mut ee, mut defect) = idempotent_defect(&e)?;
    let mut history = vec![defect];
    let mut stalls = 0;
    let mut iter = 0;
    while defect > cfg.tolerance {
        if iter == cfg.max_iterations {
            return Err(Error::Stagnated(defect));
        }
        iter += 1;
        let eee = ee.convolve(&e)?;
        let next = ee.linear_combination(C64::new(3.0, 0.0), &eee, C64::new(-2.0, 0.0))?;
        let next = next.map_time(|t| smooth_cutoff(t, cfg.keep, cfg.cut)).trimmed();
        let (nee, nd) = idempotent_defect(&next)?;
        history.push(nd);
        if nd >= 0.5 * defect {
            stalls += 1;
            if stalls >= 2 {
                return Err(Error::Stagnated(nd));
            }
        } else {
            stalls = 0;
        }
        e = next;
        ee = nee;
        defect = nd;
    }
    let t_support = e.sheet(0).map_or((0.0, 0.0), |d| {
        let h = e.presentation().step();
        (d.t_start as f64 * h, (d.t_start + d.n_t as i64 - 1) as f64 * h)
    });
    Ok(IdempotentReport { e, defect, history, spectral_gap: gap, t_support })
}

/// Rank-one projection `e(b, t) = Σ_n χ(b + np) χ(b + np + t)` on the
/// transversal circle, normalized by the grid norm of `χ`.
pub fn rank_one_projection(pres: &alloc::sync::Arc<crate::foliated_groupoid::HolonomyPresentation>, chi: &dyn Fn(f64) -> f64) -> Result<GroupoidFunction> {
    let period = pres.points(0) as f64 * pres.step();
    let h = pres.step();
    let norm: f64 = (0..pres.points(0)).map(|i| { let c = chi(i as f64 * h); c * c }).sum::<f64>() * h;
    if !(norm > 0.0) {
        return Err(Error::Invalid("cut-off χ vanishes on the grid".into()));
    }
    GroupoidFunction::zero(pres.clone(), SupportFlag::Full).on_units(0, -period, period, |b, t| {
        let mut s = 0.0;
        for n in -2..=2 {
            let x = b + n as f64 * period;
            s += chi(x) * chi(x + t);
        }
        C64::new(s / norm, 0.0)
    })
}

/// Which theorem the geometric side evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometricVariant {
    /// Transverse flow: `χ(D, [e]) + Σ_Π Θ_Π(e)`.
    Orbits,
    /// `e ∈ C_c^∞(V⋊ℝ₊*)`: `Σ_Π Θ_Π(e) + Σ_v W_v(e)`.
    Positive,
}

/// Restrictions of `e` to the periodic orbits and fixed points.
pub struct OrbitRestriction<'a> {
    /// `e(v, t)` for orbit `k` at orbit coordinate `v ∈ [0, p_k)`.
    pub on_orbit: &'a dyn Fn(usize, f64, f64) -> C64,
    /// `e(v_k, t)` at fixed point `k`.
    pub at_fixed: &'a dyn Fn(usize, f64) -> C64,
    pub t_support: (f64, f64),
    pub flag: SupportFlag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometricTerms {
    pub orbit_terms: Vec<C64>,
    pub fixed_terms: Vec<C64>,
    pub chi: Option<f64>,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub panels: usize,
    pub order: usize,
}

pub fn geometric_pairing(
    report: &DegeneracyReport,
    e: &OrbitRestriction<'_>,
    variant: GeometricVariant,
    chi: Option<f64>,
    quad: Quadrature,
    n_max: i64,
    floor: f64,
) -> Result<GeometricTerms> {
    if report.is_degenerate() {
        return Err(Error::Degenerate(report.issues.join("; ")));
    }
    let mut orbit_terms = Vec::with_capacity(report.orbits.len());
    for (k, o) in report.orbits.iter().enumerate() {
        orbit_terms.push(theta_trace_fn(o, |v, t| (e.on_orbit)(k, v, t), e.t_support, n_max, floor, quad.panels, quad.order)?);
    }
    let mut total: f64 = orbit_terms.iter().map(|z| z.re).sum();
    let mut fixed_terms = Vec::new();
    let chi = match variant {
        GeometricVariant::Orbits => {
            if !report.fixed_points.is_empty() {
                return Err(Error::FlagMismatch("fixed points need the positive-time variant".into()));
            }
            let c = chi.ok_or_else(|| Error::Invalid("the transverse variant needs χ(D, [e])".into()))?;
            total += c;
            Some(c)
        }
        GeometricVariant::Positive => {
            if e.flag != SupportFlag::Positive || !(e.t_support.0 > 0.0) {
                return Err(Error::FlagMismatch("the fixed-point variant needs e supported in t > 0".into()));
            }
            for (k, fp) in report.fixed_points.iter().enumerate() {
                let w = w_trace_fn(fp, |t| (e.at_fixed)(k, t), e.t_support, quad.panels, quad.order)?;
                total += w.re;
                fixed_terms.push(w);
            }
            None
        }
    };
    Ok(GeometricTerms { orbit_terms, fixed_terms, chi, total })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralityReport {
    pub value: f64,
    pub nearest: i64,
    pub distance: f64,
    pub pass: bool,
    /// Set when the value is not an integer although the orbit sum is empty.
    pub inconsistency: Option<String>,
}

pub fn integrality_check(value: f64, tolerance: f64, empty_orbit_sum: bool) -> IntegralityReport {
    let nearest = libm::round(value);
    let distance = (value - nearest).abs();
    let pass = distance <= tolerance;
    let inconsistency = (!pass && empty_orbit_sum)
        .then(|| format!("χ = {value} is not an integer although the orbit sum is empty: degeneracy or tolerance failure"));
    IntegralityReport { value, nearest: nearest as i64, distance, pass, inconsistency }
}
