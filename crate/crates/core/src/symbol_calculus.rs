//! Classical and log-polyhomogeneous symbols on circle fibers.
//!
//! A symbol is stored ray by ray: on `ξ > 0` and `ξ < 0` each homogeneous
//! component of degree `d` is `c_±(x)|ξ|^d`, with `c_±` a matrix-valued
//! Fourier series. The frequency variable is the integer Fourier index `n` of
//! `e^{2πinx}`, so the left-quantized product reads
//!
//! `σ_{ab} = Σ_j (1/j!) ∂_ξ^j a · (2πi)^{-j} ∂_x^j b`.

use alloc::format;
use alloc::vec::Vec;

use crate::fourier::{sample_count, Fourier};
use crate::linalg::CMat;
use crate::{Error, Result, C64, TAU};

pub const DEFAULT_DEPTH: usize = 6;
pub const DEFAULT_MODE_CAP: usize = 48;

/// One homogeneous term `c_+(x)|ξ|^d` (ξ > 0), `c_-(x)|ξ|^d` (ξ < 0).
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousComponent {
    pub degree: i32,
    pub plus: Fourier,
    pub minus: Fourier,
}

fn falling(d: i32, j: usize) -> f64 {
    (0..j).map(|i| (d - i as i32) as f64).product()
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|i| i as f64).product()
}

/// `(1/j!) (2πi)^{-j}`.
fn calculus_coeff(j: usize) -> C64 {
    let base = C64::new(0.0, -1.0 / TAU);
    base.powu(j as u32) / factorial(j)
}

/// Embed a scalar series as `f(x)·1_n`.
fn scalar_to_matrix(f: &Fourier, n: usize) -> Fourier {
    if f.shape() == (n, n) {
        return f.clone();
    }
    let modes: Vec<(i64, CMat)> = f.iter_modes().map(|(k, c)| (k, CMat::scalar(n, c[(0, 0)]))).collect();
    Fourier::from_modes(n, n, &modes)
}

impl HomogeneousComponent {
    pub fn new(degree: i32, plus: Fourier, minus: Fourier) -> Result<Self> {
        if plus.shape() != minus.shape() {
            return Err(Error::ShapeMismatch(format!("rays {:?} vs {:?}", plus.shape(), minus.shape())));
        }
        Ok(HomogeneousComponent { degree, plus, minus })
    }

    pub fn zero(degree: i32, rows: usize, cols: usize) -> Self {
        HomogeneousComponent { degree, plus: Fourier::zero(rows, cols), minus: Fourier::zero(rows, cols) }
    }

    /// Same x-dependent coefficient on both rays.
    pub fn even(degree: i32, c: Fourier) -> Self {
        HomogeneousComponent { degree, plus: c.clone(), minus: c }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.plus.shape()
    }

    pub fn is_zero(&self) -> bool {
        self.plus.is_zero() && self.minus.is_zero()
    }

    pub fn max_abs(&self) -> f64 {
        self.plus.max_abs().max(self.minus.max_abs())
    }

    /// Value at `(x, ξ)`, `ξ ≠ 0`.
    pub fn eval(&self, x: f64, xi: f64) -> CMat {
        assert!(xi != 0.0, "homogeneous symbols are evaluated off ξ = 0");
        let ray = if xi > 0.0 { &self.plus } else { &self.minus };
        ray.eval(x).scale_re(libm::pow(xi.abs(), self.degree as f64))
    }

    /// `∂_ξ^j`, exact: on the negative ray `|ξ|^d = (-ξ)^d` picks up `(-1)^j`.
    pub fn deriv_xi(&self, j: usize) -> Self {
        let f = falling(self.degree, j);
        let s = if j.is_multiple_of(2) { f } else { -f };
        HomogeneousComponent {
            degree: self.degree - j as i32,
            plus: self.plus.scale(C64::new(f, 0.0)),
            minus: self.minus.scale(C64::new(s, 0.0)),
        }
    }

    pub fn deriv_x(&self, j: usize) -> Self {
        HomogeneousComponent { degree: self.degree, plus: self.plus.deriv_n(j), minus: self.minus.deriv_n(j) }
    }

    pub fn scale(&self, s: C64) -> Self {
        HomogeneousComponent { degree: self.degree, plus: self.plus.scale(s), minus: self.minus.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.degree != other.degree {
            return Err(Error::Invalid(format!("adding degrees {} and {}", self.degree, other.degree)));
        }
        Ok(HomogeneousComponent { degree: self.degree, plus: self.plus.add(&other.plus)?, minus: self.minus.add(&other.minus)? })
    }

    /// Raywise pointwise product; degrees add.
    pub fn mul(&self, other: &Self, cap: usize) -> Result<Self> {
        Ok(HomogeneousComponent {
            degree: self.degree + other.degree,
            plus: self.plus.mul(&other.plus, cap)?,
            minus: self.minus.mul(&other.minus, cap)?,
        })
    }

    /// `∫₀¹ (c_+ + c_-) dx` as a matrix.
    pub fn ray_sum_mean(&self) -> CMat {
        &self.plus.zero_mode() + &self.minus.zero_mode()
    }
}

/// Truncated expansion with degrees `order, order-1, …, order-depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalSymbol {
    order: i32,
    components: Vec<HomogeneousComponent>,
    mode_cap: usize,
}

impl ClassicalSymbol {
    pub fn new(order: i32, components: Vec<HomogeneousComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Invalid("symbol needs at least one component".into()));
        }
        let shape = components[0].shape();
        for (k, c) in components.iter().enumerate() {
            if c.degree != order - k as i32 {
                return Err(Error::Invalid(format!("component {k} has degree {} (expected {})", c.degree, order - k as i32)));
            }
            if c.shape() != shape {
                return Err(Error::ShapeMismatch(format!("component {k} has shape {:?}", c.shape())));
            }
        }
        let cap = components
            .iter()
            .map(|c| c.plus.kmax().max(c.minus.kmax()))
            .max()
            .unwrap_or(0)
            .max(DEFAULT_MODE_CAP);
        Ok(ClassicalSymbol { order, components, mode_cap: cap })
    }

    /// Zero symbol of the given order, depth and shape.
    pub fn zero(order: i32, depth: usize, rows: usize, cols: usize) -> Self {
        let components = (0..=depth).map(|k| HomogeneousComponent::zero(order - k as i32, rows, cols)).collect();
        ClassicalSymbol { order, components, mode_cap: DEFAULT_MODE_CAP }
    }

    pub fn identity(n: usize, depth: usize) -> Self {
        Self::multiplication(Fourier::constant(CMat::identity(n)), depth)
    }

    /// Multiplication by a function of `x`: a single degree-0 component.
    pub fn multiplication(f: Fourier, depth: usize) -> Self {
        let (r, c) = f.shape();
        let mut s = Self::zero(0, depth, r, c);
        s.components[0] = HomogeneousComponent::even(0, f);
        s
    }

    /// `ξ·1_n`, the symbol of `(2πi)^{-1} d/dx`.
    pub fn xi(n: usize, depth: usize) -> Self {
        let mut s = Self::zero(1, depth, n, n);
        s.components[0] = HomogeneousComponent {
            degree: 1,
            plus: Fourier::constant(CMat::identity(n)),
            minus: Fourier::constant(CMat::scalar(n, C64::new(-1.0, 0.0))),
        };
        s
    }

    /// `|ξ|·1_n`.
    pub fn abs_xi(n: usize, depth: usize) -> Self {
        let mut s = Self::zero(1, depth, n, n);
        s.components[0] = HomogeneousComponent::even(1, Fourier::constant(CMat::identity(n)));
        s
    }

    pub fn with_mode_cap(mut self, cap: usize) -> Self {
        self.mode_cap = cap;
        self
    }

    pub fn mode_cap(&self) -> usize {
        self.mode_cap
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn depth(&self) -> usize {
        self.components.len() - 1
    }

    pub fn shape(&self) -> (usize, usize) {
        self.components[0].shape()
    }

    pub fn components(&self) -> &[HomogeneousComponent] {
        &self.components
    }

    pub fn component(&self, degree: i32) -> Option<&HomogeneousComponent> {
        if degree > self.order {
            return None;
        }
        self.components.get((self.order - degree) as usize)
    }

    /// Replace the component of the given degree.
    pub fn set_component(&mut self, c: HomogeneousComponent) -> Result<()> {
        let k = self.order - c.degree;
        if k < 0 || k as usize >= self.components.len() || c.shape() != self.shape() {
            return Err(Error::Invalid(format!("no slot for degree {}", c.degree)));
        }
        self.components[k as usize] = c;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    /// Keep the first `depth + 1` components.
    pub fn truncate(&self, depth: usize) -> Result<Self> {
        if depth > self.depth() {
            return Err(Error::DepthExceeded { requested: depth, available: self.depth() });
        }
        let mut s = self.clone();
        s.components.truncate(depth + 1);
        Ok(s)
    }

    /// View inside a higher-order calculus by prepending zero components.
    pub fn pad_to_order(&self, order: i32) -> Self {
        let (r, c) = self.shape();
        let mut comps: Vec<HomogeneousComponent> =
            (0..(order - self.order).max(0)).map(|k| HomogeneousComponent::zero(order - k, r, c)).collect();
        comps.extend(self.components.iter().cloned());
        ClassicalSymbol { order: order.max(self.order), components: comps, mode_cap: self.mode_cap }
    }

    /// Remove a leading component that vanishes exactly.
    pub fn drop_zero_leading(&self) -> Result<Self> {
        if !self.components[0].is_zero() {
            return Err(Error::Invalid(format!("degree {} component is not zero", self.order)));
        }
        if self.components.len() < 2 {
            return Err(Error::DepthExceeded { requested: 1, available: 0 });
        }
        Ok(ClassicalSymbol { order: self.order - 1, components: self.components[1..].to_vec(), mode_cap: self.mode_cap })
    }

    pub fn eval(&self, x: f64, xi: f64) -> CMat {
        let (r, c) = self.shape();
        let mut out = CMat::zeros(r, c);
        for comp in &self.components {
            out.add_assign_scaled(&comp.eval(x, xi), C64::new(1.0, 0.0));
        }
        out
    }

    fn aligned(&self, other: &Self) -> Result<(Self, Self)> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        let order = self.order.max(other.order);
        let a = self.pad_to_order(order);
        let b = other.pad_to_order(order);
        let depth = a.depth().min(b.depth());
        Ok((a.truncate(depth)?, b.truncate(depth)?))
    }

    /// Sum; the result keeps the coarser lowest retained degree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other)?;
        let components = a.components.iter().zip(&b.components).map(|(x, y)| x.add(y)).collect::<Result<Vec<_>>>()?;
        Ok(ClassicalSymbol { order: a.order, components, mode_cap: a.mode_cap.min(b.mode_cap) })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        ClassicalSymbol { order: self.order, components: self.components.iter().map(|c| c.scale(s)).collect(), mode_cap: self.mode_cap }
    }

    /// Ellipticity of the leading term on `sample_count(K)` points per ray.
    pub fn is_elliptic(&self) -> bool {
        self.ellipticity_margin() > 1e-10
    }

    /// `min |det c_±(x_j)|` relative to the coefficient scale.
    pub fn ellipticity_margin(&self) -> f64 {
        let lead = &self.components[0];
        let (r, c) = lead.shape();
        if r != c {
            return 0.0;
        }
        let n = sample_count(lead.plus.kmax().max(lead.minus.kmax()));
        let scale = libm::pow(lead.max_abs().max(f64::MIN_POSITIVE), r as f64);
        lead.plus.min_abs_det(n).min(lead.minus.min_abs_det(n)) / scale
    }
}

/// Leading homogeneous component.
pub fn leading_symbol(a: &ClassicalSymbol) -> HomogeneousComponent {
    a.components[0].clone()
}

/// Sum of the product terms with `jmin ≤ j`, collected by degree.
fn product_terms(a: &ClassicalSymbol, b: &ClassicalSymbol, depth: usize, jmin: usize) -> Result<Vec<HomogeneousComponent>> {
    let cap = a.mode_cap.min(b.mode_cap);
    let order = a.order + b.order;
    let (r, c) = (a.shape().0, b.shape().1);
    let mut out: Vec<HomogeneousComponent> = (0..=depth).map(|k| HomogeneousComponent::zero(order - k as i32, r, c)).collect();
    for (p, ap) in a.components.iter().enumerate().take(depth + 1) {
        for j in jmin..=depth - p {
            let dap = ap.deriv_xi(j);
            if dap.is_zero() {
                continue;
            }
            let coef = calculus_coeff(j);
            for (q, bq) in b.components.iter().enumerate().take(depth + 1 - p - j) {
                let term = dap.mul(&bq.deriv_x(j), cap)?.scale(coef);
                let k = p + q + j;
                out[k] = out[k].add(&term)?;
            }
        }
    }
    Ok(out)
}

/// Asymptotic left-quantized product truncated at `depth`.
pub fn compose(a: &ClassicalSymbol, b: &ClassicalSymbol, depth: usize) -> Result<ClassicalSymbol> {
    if a.shape().1 != b.shape().0 {
        return Err(Error::ShapeMismatch(format!("{:?} ∘ {:?}", a.shape(), b.shape())));
    }
    let available = a.depth().min(b.depth());
    if depth > available {
        return Err(Error::DepthExceeded { requested: depth, available });
    }
    let components = product_terms(a, b, depth, 0)?;
    Ok(ClassicalSymbol { order: a.order + b.order, components, mode_cap: a.mode_cap.min(b.mode_cap) })
}

/// Pointwise (j = 0 only) product, used for functions of a single symbol.
fn pointwise(a: &ClassicalSymbol, b: &ClassicalSymbol, depth: usize) -> Result<ClassicalSymbol> {
    let order = a.order + b.order;
    let cap = a.mode_cap.min(b.mode_cap);
    let (r, c) = (a.shape().0, b.shape().1);
    let mut out: Vec<HomogeneousComponent> = (0..=depth).map(|k| HomogeneousComponent::zero(order - k as i32, r, c)).collect();
    for (p, ap) in a.components.iter().enumerate().take(depth + 1) {
        for (q, bq) in b.components.iter().enumerate().take(depth + 1 - p) {
            out[p + q] = out[p + q].add(&ap.mul(bq, cap)?)?;
        }
    }
    Ok(ClassicalSymbol { order, components: out, mode_cap: cap })
}

/// Right inverse of an elliptic symbol modulo degrees below `-order - depth`.
pub fn parametrix(a: &ClassicalSymbol, depth: usize) -> Result<ClassicalSymbol> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::NonElliptic(format!("non-square shape {:?}", a.shape())));
    }
    if depth > a.depth() {
        return Err(Error::DepthExceeded { requested: depth, available: a.depth() });
    }
    if !a.is_elliptic() {
        return Err(Error::NonElliptic(format!("leading determinant margin {:e}", a.ellipticity_margin())));
    }
    let cap = a.mode_cap;
    let lead = &a.components[0];
    let inv = HomogeneousComponent {
        degree: -a.order,
        plus: lead.plus.pointwise_inverse(cap)?,
        minus: lead.minus.pointwise_inverse(cap)?,
    };
    let mut b = ClassicalSymbol { order: -a.order, components: alloc::vec![inv.clone()], mode_cap: cap };
    for k in 1..=depth {
        // Error of a ∘ b at relative depth k with b_k still zero.
        b.components.push(HomogeneousComponent::zero(-a.order - k as i32, r, c));
        let a_k = a.truncate(k)?;
        let err = product_terms(&a_k, &b, k, 0)?;
        let bk = inv.mul(&err[k], cap)?.scale(C64::new(-1.0, 0.0));
        b.components[k] = HomogeneousComponent { degree: -a.order - k as i32, ..bk };
    }
    Ok(b)
}

/// `ln q = base + logpart·log|ξ|`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogSymbol {
    pub base: ClassicalSymbol,
    pub logpart: ClassicalSymbol,
}

fn check_positive_scalar(q: &ClassicalSymbol) -> Result<()> {
    if q.shape() != (1, 1) {
        return Err(Error::NotPositiveScalar(format!("shape {:?}", q.shape())));
    }
    if q.order != 1 {
        return Err(Error::NotPositiveScalar(format!("order {}", q.order)));
    }
    if !q.is_elliptic() {
        return Err(Error::NonElliptic("leading coefficient vanishes".into()));
    }
    let lead = &q.components[0];
    let n = sample_count(lead.plus.kmax().max(lead.minus.kmax()));
    let scale = lead.max_abs();
    for ray in [&lead.plus, &lead.minus] {
        for v in ray.samples(n) {
            let z = v[(0, 0)];
            if z.re <= 0.0 || z.im.abs() > 1e-12 * scale {
                return Err(Error::NotPositiveScalar(format!("leading value {z}")));
            }
        }
    }
    Ok(())
}

/// Logarithm of a positive scalar elliptic symbol of order one.
pub fn log_of_elliptic(q: &ClassicalSymbol) -> Result<LogSymbol> {
    check_positive_scalar(q)?;
    let depth = q.depth();
    let cap = q.mode_cap;
    let lead = &q.components[0];
    let n = sample_count(cap);
    let log_ray = |f: &Fourier| f.map_pointwise(n, cap, |m| Ok(CMat::scalar(1, C64::new(libm::log(m[(0, 0)].re), 0.0))));
    let inv_ray = |f: &Fourier| f.pointwise_inverse(cap);
    let log0 = HomogeneousComponent { degree: 0, plus: log_ray(&lead.plus)?, minus: log_ray(&lead.minus)? };
    let inv0 = HomogeneousComponent { degree: 0, plus: inv_ray(&lead.plus)?, minus: inv_ray(&lead.minus)? };
    // rho = (q - q_1)/q_1 |ξ|^{-1}, components of degree -1..-depth.
    let mut rho = ClassicalSymbol::zero(0, depth, 1, 1).with_mode_cap(cap);
    for k in 1..=depth {
        let ck = &q.components[k];
        let r = ck.mul(&inv0, cap)?;
        rho.components[k] = HomogeneousComponent { degree: -(k as i32), plus: r.plus, minus: r.minus };
    }
    let mut base = ClassicalSymbol::zero(0, depth, 1, 1).with_mode_cap(cap);
    base.components[0] = log0;
    let mut power = rho.clone();
    for r in 1..=depth {
        let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
        base = base.add(&power.scale(C64::new(sign / r as f64, 0.0)))?;
        power = pointwise(&power, &rho, depth)?;
    }
    let logpart = ClassicalSymbol::identity(1, depth).scale(C64::new(q.order as f64, 0.0)).with_mode_cap(cap);
    Ok(LogSymbol { base, logpart })
}

/// `exp` of an order-0 scalar symbol at the level of pointwise products.
pub fn exp_pointwise(a: &ClassicalSymbol) -> Result<ClassicalSymbol> {
    if a.shape() != (1, 1) || a.order != 0 {
        return Err(Error::NotPositiveScalar("exp needs an order-0 scalar".into()));
    }
    let depth = a.depth();
    let cap = a.mode_cap;
    let n = sample_count(cap);
    let lead = &a.components[0];
    let exp_ray = |f: &Fourier| f.map_pointwise(n, cap, |m| Ok(CMat::scalar(1, m[(0, 0)].exp())));
    let mut e0 = ClassicalSymbol::zero(0, depth, 1, 1).with_mode_cap(cap);
    e0.components[0] = HomogeneousComponent { degree: 0, plus: exp_ray(&lead.plus)?, minus: exp_ray(&lead.minus)? };
    let mut rest = a.clone();
    rest.components[0] = HomogeneousComponent::zero(0, 1, 1);
    let mut sum = ClassicalSymbol::identity(1, depth).with_mode_cap(cap);
    let mut power = ClassicalSymbol::identity(1, depth).with_mode_cap(cap);
    for r in 1..=depth {
        power = pointwise(&power, &rest, depth)?.scale(C64::new(1.0 / r as f64, 0.0));
        sum = sum.add(&power)?;
    }
    pointwise(&e0, &sum, depth)
}

/// `[ln q, a]`, classical. The returned symbol has order `a.order` with an
/// exactly zero leading component.
pub fn commutator_log(q: &ClassicalSymbol, a: &ClassicalSymbol) -> Result<ClassicalSymbol> {
    let lq = log_of_elliptic(q)?;
    let depth = a.depth().min(lq.base.depth());
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::ShapeMismatch(format!("commutator needs a square symbol, got {:?}", a.shape())));
    }
    let cap = a.mode_cap.min(lq.base.mode_cap);
    let order = a.order;
    let mut out: Vec<HomogeneousComponent> = (0..=depth).map(|k| HomogeneousComponent::zero(order - k as i32, r, r)).collect();
    let weight = lq.logpart.components[0].plus.zero_mode()[(0, 0)];
    // log|ξ| ∘ a - a ∘ log|ξ| = Σ_{j≥1} coeff_j ∂_ξ^j log|ξ| ∂_x^j a.
    let dlog = HomogeneousComponent {
        degree: -1,
        plus: Fourier::constant(CMat::identity(r)),
        minus: Fourier::constant(CMat::scalar(r, C64::new(-1.0, 0.0))),
    };
    for j in 1..=depth {
        let dj = dlog.deriv_xi(j - 1).scale(calculus_coeff(j) * weight);
        for (p, ap) in a.components.iter().enumerate().take(depth + 1 - j) {
            let term = dj.mul(&ap.deriv_x(j), cap)?;
            out[p + j] = out[p + j].add(&term)?;
        }
    }
    // Base part: j = 0 terms cancel since the base is scalar.
    let base = ClassicalSymbol {
        order: 0,
        components: lq
            .base
            .components
            .iter()
            .take(depth + 1)
            .map(|h| HomogeneousComponent { degree: h.degree, plus: scalar_to_matrix(&h.plus, r), minus: scalar_to_matrix(&h.minus, r) })
            .collect(),
        mode_cap: cap,
    };
    let a_d = a.truncate(depth)?;
    let left = product_terms(&base, &a_d, depth, 1)?;
    let right = product_terms(&a_d, &base, depth, 1)?;
    for k in 0..=depth {
        out[k] = out[k].add(&left[k])?.add(&right[k].scale(C64::new(-1.0, 0.0)))?;
    }
    Ok(ClassicalSymbol { order, components: out, mode_cap: cap })
}

/// `∫₀¹ tr[a_{-1}(x, +1) + a_{-1}(x, -1)] dx`.
pub fn wodzicki_residue(a: &ClassicalSymbol) -> Result<C64> {
    if a.order < -1 {
        return Ok(C64::new(0.0, 0.0));
    }
    let c = a.component(-1).ok_or(Error::MissingDegree(-1))?;
    Ok(c.ray_sum_mean().trace())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn beta() -> Fourier {
        Fourier::scalar_modes(&[(1, c(1.0, 0.0))])
    }

    #[test]
    fn identity_is_neutral() {
        let id = ClassicalSymbol::identity(1, 3);
        let b = ClassicalSymbol::multiplication(beta(), 3);
        assert_eq!(compose(&id, &b, 3).unwrap(), b);
    }

    #[test]
    fn xi_commutator_with_beta() {
        // [(2πi)^{-1}d/dx, β] = β exactly; its symbol commutator is β in degree 0.
        let a = ClassicalSymbol::xi(1, 2);
        let b = ClassicalSymbol::multiplication(beta(), 2);
        let d = compose(&a, &b, 2).unwrap().sub(&compose(&b, &a, 2).unwrap()).unwrap();
        assert!(d.component(1).unwrap().is_zero());
        let d0 = d.component(0).unwrap();
        assert!((d0.plus.mode(1)[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((d0.minus.mode(1)[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(d.component(-1).unwrap().is_zero());
    }

    #[test]
    fn residue_of_inverse_abs_xi() {
        let a = ClassicalSymbol::abs_xi(1, 2);
        let p = parametrix(&a, 2).unwrap();
        assert_eq!(wodzicki_residue(&p).unwrap(), c(2.0, 0.0));
    }

    #[test]
    fn padded_leading_is_zero() {
        let p = parametrix(&ClassicalSymbol::abs_xi(1, 2), 2).unwrap();
        let padded = p.pad_to_order(0);
        assert!(leading_symbol(&padded).is_zero());
        assert_eq!(padded.depth(), 3);
    }

    #[test]
    fn log_of_scaled_abs_xi() {
        let q = ClassicalSymbol::abs_xi(1, 3).scale(c(3.0, 0.0));
        let l = log_of_elliptic(&q).unwrap();
        let b0 = &l.base.components()[0];
        assert!((b0.plus.zero_mode()[(0, 0)].re - libm::log(3.0)).abs() < 1e-14);
        assert!(l.base.components()[1..].iter().all(|h| h.is_zero()));
    }

    #[test]
    fn log_rejects_non_positive() {
        let q = ClassicalSymbol::xi(1, 2);
        assert!(matches!(log_of_elliptic(&q), Err(Error::NotPositiveScalar(_))));
    }
}
