//! Small dense complex matrices, Hermitian eigensolver, SVD least squares
//! and Gauss-Legendre quadrature.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::C64;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, C64::new(1.0, 0.0))
    }

    pub fn scalar(n: usize, s: C64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn add_assign_scaled(&mut self, other: &CMat, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Integer power; negative exponents need an invertible matrix.
    pub fn powi(&self, n: i64, tol: f64) -> Option<CMat> {
        assert!(self.is_square());
        let mut base = if n < 0 { self.inverse(tol)? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = CMat::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base);
            }
            base = base.matmul(&base);
            e >>= 1;
        }
        Some(acc)
    }

    /// Matrix exponential by scaling and squaring of a Taylor series.
    pub fn expm(&self) -> CMat {
        assert!(self.is_square());
        let norm = self.data.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
        let mut squarings = 0u32;
        while norm / libm::pow(2.0, squarings as f64) > 0.25 {
            squarings += 1;
        }
        let a = self.scale_re(libm::pow(2.0, -(squarings as f64)));
        let mut term = CMat::identity(self.rows);
        let mut sum = term.clone();
        for k in 1..=20 {
            term = term.matmul(&a).scale_re(1.0 / k as f64);
            sum = &sum + &term;
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum
    }

    /// Determinant by partial-pivot elimination.
    pub fn det(&self) -> C64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().partial_cmp(&a[(j, col)].norm()).unwrap())
                .unwrap();
            if a[(piv, col)].norm() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if piv != col {
                a.swap_rows(piv, col);
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for r in col + 1..n {
                let f = a[(r, col)] / p;
                for c in col..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= f * v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Gauss-Jordan inverse. `None` when a pivot falls below `tol` times the
    /// largest entry.
    pub fn inverse(&self, tol: f64) -> Option<CMat> {
        assert!(self.is_square());
        let n = self.rows;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().partial_cmp(&a[(j, col)].norm()).unwrap())
                .unwrap();
            if a[(piv, col)].norm() <= tol * scale {
                return None;
            }
            a.swap_rows(piv, col);
            inv.swap_rows(piv, col);
            let p = a[(col, col)].inv();
            for c in 0..n {
                a[(col, c)] *= p;
                inv[(col, c)] *= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f.norm() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let av = a[(col, c)];
                    let iv = inv[(col, c)];
                    a[(r, c)] -= f * av;
                    inv[(r, c)] -= f * iv;
                }
            }
        }
        Some(inv)
    }

    /// Max entry deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[CMat]) -> CMat {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = CMat::zeros(r, c);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(ro + i, co + j)] = b[(i, j)];
                }
            }
            ro += b.rows;
            co += b.cols;
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMat) -> CMat {
        CMat::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, o: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "dimension mismatch in add");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, o: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "dimension mismatch in sub");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, o: &CMat) -> CMat {
        self.matmul(o)
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale_re(-1.0)
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns ascending eigenvalues and the unitary whose columns are
/// the eigenvectors.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    assert!(a.is_square());
    let n = a.rows();
    let mut m = a.clone();
    let mut v = CMat::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)].norm_sqr();
                }
            }
        }
        if libm::sqrt(off) <= 1e-15 * scale * (n as f64) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Phase-strip to a real symmetric 2x2 problem.
                let ph = apq / r;
                let theta = 0.5 * libm::atan2(2.0 * r, aqq - app);
                let c = libm::cos(theta);
                let s = libm::sin(theta);
                // Rotation G acts on columns p,q: G = [[c, s*ph], [-s*conj(ph), c]].
                let g_pp = C64::new(c, 0.0);
                let g_pq = ph * s;
                let g_qp = -ph.conj() * s;
                let g_qq = C64::new(c, 0.0);
                // m <- G^H m G
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * g_pp + mkq * g_qp;
                    m[(k, q)] = mkp * g_pq + mkq * g_qq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = g_pp.conj() * mpk + g_qp.conj() * mqk;
                    m[(q, k)] = g_pq.conj() * mpk + g_qq.conj() * mqk;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let vals = idx.iter().map(|&i| m[(i, i)].re).collect();
    let vecs = CMat::from_fn(n, n, |r, c| v[(r, idx[c])]);
    (vals, vecs)
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(a: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let n = vals.len();
    let fd: Vec<C64> = vals.iter().map(|&l| f(l)).collect();
    CMat::from_fn(n, n, |i, j| {
        let mut s = C64::new(0.0, 0.0);
        for k in 0..n {
            s += vecs[(i, k)] * fd[k] * vecs[(j, k)].conj();
        }
        s
    })
}

/// Real least-squares solution with diagnostics.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coeffs: Vec<f64>,
    /// 2-norm condition number of the column-equilibrated design matrix.
    pub condition: f64,
    pub residuals: Vec<f64>,
}

/// Solve `min |A c - b|` for a real row-major `m x k` design matrix using a
/// one-sided Jacobi SVD on column-equilibrated `A`.
pub fn least_squares(a: &[f64], m: usize, k: usize, b: &[f64]) -> LeastSquares {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), m);
    assert!(m >= k, "underdetermined least squares");
    let mut colscale = vec![0.0; k];
    for j in 0..k {
        let s: f64 = (0..m).map(|i| a[i * k + j] * a[i * k + j]).sum();
        colscale[j] = if s > 0.0 { libm::sqrt(s) } else { 1.0 };
    }
    // Column-major working copy U (m x k); V accumulates rotations.
    let mut u: Vec<Vec<f64>> = (0..k).map(|j| (0..m).map(|i| a[i * k + j] / colscale[j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..k).map(|j| (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let x = u[p][i];
                    let y = u[q][i];
                    u[p][i] = c * x - s * y;
                    u[q][i] = s * x + c * y;
                }
                for i in 0..k {
                    let x = v[p][i];
                    let y = v[q][i];
                    v[p][i] = c * x - s * y;
                    v[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = u.iter().map(|col| libm::sqrt(col.iter().map(|x| x * x).sum::<f64>())).collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let smin = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    // c_scaled = V diag(1/sigma) U^T b
    let mut cs = vec![0.0; k];
    for j in 0..k {
        if sigma[j] <= smax * 1e-15 {
            continue;
        }
        let ub: f64 = u[j].iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (sigma[j] * sigma[j]);
        for i in 0..k {
            cs[i] += v[j][i] * ub;
        }
    }
    let coeffs: Vec<f64> = cs.iter().zip(&colscale).map(|(c, s)| c / s).collect();
    let residuals = (0..m)
        .map(|i| (0..k).map(|j| a[i * k + j] * coeffs[j]).sum::<f64>() - b[i])
        .collect();
    LeastSquares { coeffs, condition, residuals }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inverse_roundtrip() {
        let a = CMat::from_rows(&[&[c(2.0, 1.0), c(0.5, 0.0)], &[c(-1.0, 0.3), c(1.0, -2.0)]]);
        let inv = a.inverse(1e-14).unwrap();
        let e = &(&a * &inv) - &CMat::identity(2);
        assert!(e.max_abs() < 1e-14);
        let d = a.det();
        let expect = c(2.0, 1.0) * c(1.0, -2.0) - c(0.5, 0.0) * c(-1.0, 0.3);
        assert!((d - expect).norm() < 1e-14);
    }

    #[test]
    fn singular_has_no_inverse() {
        let a = CMat::from_rows(&[&[c(1.0, 0.0), c(2.0, 0.0)], &[c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(a.inverse(1e-12).is_none());
    }

    #[test]
    fn jacobi_reconstructs_hermitian() {
        let a = CMat::from_rows(&[
            &[c(2.0, 0.0), c(1.0, 1.0), c(0.0, -0.5)],
            &[c(1.0, -1.0), c(-1.0, 0.0), c(0.3, 0.0)],
            &[c(0.0, 0.5), c(0.3, 0.0), c(0.5, 0.0)],
        ]);
        let (vals, vecs) = hermitian_eigen(&a);
        let back = CMat::from_fn(3, 3, |i, j| (0..3).map(|k| vecs[(i, k)] * vals[k] * vecs[(j, k)].conj()).sum());
        assert!((&back - &a).max_abs() < 1e-13);
        let u = &vecs.adjoint() * &vecs;
        assert!((&u - &CMat::identity(3)).max_abs() < 1e-13);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = vals.iter().sum();
        assert!((tr - 1.5).abs() < 1e-13);
    }

    #[test]
    fn least_squares_recovers_polynomial() {
        let ts: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for &t in &ts {
            a.extend_from_slice(&[1.0, t, t * t]);
            b.push(3.0 - 2.0 * t + 0.5 * t * t);
        }
        let ls = least_squares(&a, ts.len(), 3, &b);
        assert!((ls.coeffs[0] - 3.0).abs() < 1e-12);
        assert!((ls.coeffs[1] + 2.0).abs() < 1e-12);
        assert!((ls.coeffs[2] - 0.5).abs() < 1e-12);
        assert!(ls.condition.is_finite());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let (x, w) = composite_gauss(0.0, 2.0, 4, 6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::exp(*x)).sum();
        assert!((s - (libm::exp(2.0) - 1.0)).abs() < 1e-13);
    }
}
