//! Matrix-valued trigonometric polynomials on the unit circle `[0, 1)`.

use alloc::format;
use alloc::vec::Vec;

use crate::linalg::CMat;
use crate::{cis_tau, Error, Result, C64, TAU};

/// `f(x) = Σ_{|k| ≤ K} c_k e^{2πikx}` with matrix coefficients of a fixed shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Fourier {
    rows: usize,
    cols: usize,
    kmax: usize,
    coeffs: Vec<CMat>,
}

impl Fourier {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Fourier { rows, cols, kmax: 0, coeffs: alloc::vec![CMat::zeros(rows, cols)] }
    }

    pub fn constant(m: CMat) -> Self {
        Fourier { rows: m.rows(), cols: m.cols(), kmax: 0, coeffs: alloc::vec![m] }
    }

    pub fn scalar_const(z: C64) -> Self {
        Self::constant(CMat::scalar(1, z))
    }

    /// Build from `(mode, coefficient)` pairs; repeated modes are summed.
    pub fn from_modes(rows: usize, cols: usize, modes: &[(i64, CMat)]) -> Self {
        let kmax = modes.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut f = Fourier { rows, cols, kmax, coeffs: alloc::vec![CMat::zeros(rows, cols); 2 * kmax + 1] };
        for (k, c) in modes {
            assert_eq!((c.rows(), c.cols()), (rows, cols), "coefficient shape");
            let i = (*k + kmax as i64) as usize;
            f.coeffs[i] = &f.coeffs[i] + c;
        }
        f
    }

    /// Scalar series from `(mode, value)` pairs.
    pub fn scalar_modes(modes: &[(i64, C64)]) -> Self {
        let m: Vec<(i64, CMat)> = modes.iter().map(|&(k, z)| (k, CMat::scalar(1, z))).collect();
        Self::from_modes(1, 1, &m)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn mode(&self, k: i64) -> CMat {
        if k.unsigned_abs() as usize > self.kmax {
            CMat::zeros(self.rows, self.cols)
        } else {
            self.coeffs[(k + self.kmax as i64) as usize].clone()
        }
    }

    fn mode_ref(&self, k: i64) -> Option<&CMat> {
        if k.unsigned_abs() as usize > self.kmax {
            None
        } else {
            Some(&self.coeffs[(k + self.kmax as i64) as usize])
        }
    }

    pub fn zero_mode(&self) -> CMat {
        self.mode(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_shape(&self, other: &Fourier) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }

    pub fn add(&self, other: &Fourier) -> Result<Fourier> {
        self.check_shape(other)?;
        let kmax = self.kmax.max(other.kmax);
        let coeffs = (-(kmax as i64)..=kmax as i64)
            .map(|k| match (self.mode_ref(k), other.mode_ref(k)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => CMat::zeros(self.rows, self.cols),
            })
            .collect();
        Ok(Fourier { rows: self.rows, cols: self.cols, kmax, coeffs }.trimmed())
    }

    pub fn sub(&self, other: &Fourier) -> Result<Fourier> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Fourier {
        Fourier {
            rows: self.rows,
            cols: self.cols,
            kmax: self.kmax,
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Left-multiply every coefficient by a constant matrix.
    pub fn left_mul_const(&self, m: &CMat) -> Fourier {
        Fourier { rows: m.rows(), cols: self.cols, kmax: self.kmax, coeffs: self.coeffs.iter().map(|c| m * c).collect() }
    }

    /// Pointwise matrix product, truncated to modes `|k| ≤ cap`.
    pub fn mul(&self, other: &Fourier, cap: usize) -> Result<Fourier> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!("{:?} * {:?}", self.shape(), other.shape())));
        }
        let kmax = (self.kmax + other.kmax).min(cap);
        let mut coeffs = alloc::vec![CMat::zeros(self.rows, other.cols); 2 * kmax + 1];
        let one = C64::new(1.0, 0.0);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ka = i as i64 - self.kmax as i64;
            for (j, b) in other.coeffs.iter().enumerate() {
                let kb = j as i64 - other.kmax as i64;
                let k = ka + kb;
                if k.unsigned_abs() as usize > kmax || b.is_zero() {
                    continue;
                }
                coeffs[(k + kmax as i64) as usize].add_assign_scaled(&(a * b), one);
            }
        }
        Ok(Fourier { rows: self.rows, cols: other.cols, kmax, coeffs }.trimmed())
    }

    /// `d/dx`, exact on coefficients.
    pub fn deriv(&self) -> Fourier {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.scale(C64::new(0.0, TAU * (i as f64 - self.kmax as f64))))
            .collect();
        Fourier { rows: self.rows, cols: self.cols, kmax: self.kmax, coeffs }
    }

    pub fn deriv_n(&self, n: usize) -> Fourier {
        let mut f = self.clone();
        for _ in 0..n {
            f = f.deriv();
        }
        f
    }

    pub fn eval(&self, x: f64) -> CMat {
        let mut out = CMat::zeros(self.rows, self.cols);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = i as f64 - self.kmax as f64;
            out.add_assign_scaled(c, cis_tau(k * x));
        }
        out
    }

    /// Values at `x_j = j/n`.
    pub fn samples(&self, n: usize) -> Vec<CMat> {
        (0..n).map(|j| self.eval(j as f64 / n as f64)).collect()
    }

    /// Discrete Fourier coefficients of equispaced samples, modes `|k| ≤ kmax`.
    pub fn from_samples(samples: &[CMat], kmax: usize) -> Fourier {
        let n = samples.len();
        assert!(n > 2 * kmax, "too few samples for requested modes");
        let (rows, cols) = (samples[0].rows(), samples[0].cols());
        let inv_n = 1.0 / n as f64;
        let coeffs = (-(kmax as i64)..=kmax as i64)
            .map(|k| {
                let mut c = CMat::zeros(rows, cols);
                for (j, s) in samples.iter().enumerate() {
                    let ph = ((-k * j as i64).rem_euclid(n as i64)) as f64 * inv_n;
                    c.add_assign_scaled(s, cis_tau(ph).scale(inv_n));
                }
                c
            })
            .collect();
        Fourier { rows, cols, kmax, coeffs }.chopped(1e-15).trimmed()
    }

    /// Apply a pointwise map through sampling on `n` points, keeping modes `|k| ≤ cap`.
    pub fn map_pointwise(&self, n: usize, cap: usize, f: impl Fn(&CMat) -> Result<CMat>) -> Result<Fourier> {
        if self.kmax == 0 {
            return Ok(Fourier::constant(f(&self.coeffs[0])?));
        }
        let vals: Result<Vec<CMat>> = self.samples(n).iter().map(f).collect();
        Ok(Fourier::from_samples(&vals?, cap.min((n - 1) / 2)))
    }

    /// Zero out coefficients whose entries are below `tol` times the largest.
    fn chopped(mut self, tol: f64) -> Fourier {
        let m = self.max_abs();
        if m == 0.0 {
            return self;
        }
        for c in self.coeffs.iter_mut() {
            *c = c.map(|z| {
                let re = if z.re.abs() <= tol * m { 0.0 } else { z.re };
                let im = if z.im.abs() <= tol * m { 0.0 } else { z.im };
                C64::new(re, im)
            });
        }
        self
    }

    /// Drop exactly-zero outer modes.
    fn trimmed(mut self) -> Fourier {
        while self.kmax > 0 && self.coeffs[0].is_zero() && self.coeffs[2 * self.kmax].is_zero() {
            self.coeffs.remove(2 * self.kmax);
            self.coeffs.remove(0);
            self.kmax -= 1;
        }
        self
    }

    /// Smallest `min_j |det f(x_j)|` over `n` sample points (square only).
    pub fn min_abs_det(&self, n: usize) -> f64 {
        self.samples(n).iter().map(|m| m.det().norm()).fold(f64::INFINITY, f64::min)
    }

    /// Pointwise inverse via sampling on `n ≥ 4K` points.
    pub fn pointwise_inverse(&self, cap: usize) -> Result<Fourier> {
        let n = sample_count(self.kmax.max(cap));
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.map_pointwise(n, cap, |m| {
            m.inverse(1e-12).ok_or_else(|| Error::NonElliptic(format!("singular value of magnitude ~{scale:e}")))
        })
    }

    pub fn adjoint(&self) -> Fourier {
        // conj(f)(x) has coefficient conj(c_{-k})^T at mode k.
        let coeffs = (-(self.kmax as i64)..=self.kmax as i64).map(|k| self.mode(-k).adjoint()).collect();
        Fourier { rows: self.cols, cols: self.rows, kmax: self.kmax, coeffs }
    }

    /// Iterator over `(mode, coefficient)`.
    pub fn iter_modes(&self) -> impl Iterator<Item = (i64, &CMat)> {
        let k0 = self.kmax as i64;
        self.coeffs.iter().enumerate().map(move |(i, c)| (i as i64 - k0, c))
    }
}

/// Number of sample points used for pointwise nonlinear maps on a series with
/// `k` modes: at least `4k`, never fewer than 64.
pub fn sample_count(k: usize) -> usize {
    (4 * k + 4).max(64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta() -> Fourier {
        Fourier::scalar_modes(&[(1, C64::new(1.0, 0.0))])
    }

    #[test]
    fn product_of_modes_shifts() {
        let b = beta();
        let b2 = b.mul(&b, 16).unwrap();
        assert_eq!(b2.mode(2)[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(b2.kmax(), 2);
        let bbar = b.adjoint();
        let one = b.mul(&bbar, 16).unwrap();
        assert_eq!(one.kmax(), 0);
        assert_eq!(one.mode(0)[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn derivative_is_exact() {
        let b = beta();
        let db = b.deriv();
        assert_eq!(db.mode(1)[(0, 0)], C64::new(0.0, TAU));
    }

    #[test]
    fn inverse_converges_geometrically() {
        // 2 + cos(2πx) has inverse with coefficients decaying like (2-√3)^|k|.
        let f = Fourier::scalar_modes(&[(0, C64::new(2.0, 0.0)), (1, C64::new(0.5, 0.0)), (-1, C64::new(0.5, 0.0))]);
        let g = f.pointwise_inverse(32).unwrap();
        let one = f.mul(&g, 40).unwrap();
        for (k, c) in one.iter_modes() {
            let want = if k == 0 { 1.0 } else { 0.0 };
            assert!((c[(0, 0)] - C64::new(want, 0.0)).norm() < 1e-15, "mode {k}");
        }
    }

    #[test]
    fn sampling_roundtrip() {
        let f = Fourier::scalar_modes(&[(-3, C64::new(0.2, 0.1)), (0, C64::new(1.0, 0.0)), (2, C64::new(0.0, -0.7))]);
        let g = Fourier::from_samples(&f.samples(16), 7);
        let d = f.sub(&g).unwrap();
        assert!(d.max_abs() < 1e-14);
    }
}
