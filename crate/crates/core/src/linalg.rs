//! Small dense complex matrices and a factored Toeplitz inverse.
//!
//! The per-block systems solved here are at most a few hundred rows, so a
//! straightforward row-major layout with Cholesky and Gauss-Jordan kernels is
//! all that is needed for setup work. The only per-iteration hot path is
//! [`ToeplitzInverse::apply`], which runs in FFT time.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "matvec width mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for (r, yr) in y.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc_re += a.re * b.re - a.im * b.im;
                acc_im += a.re * b.im + a.im * b.re;
            }
            *yr = Complex64::new(acc_re, acc_im);
        }
        y
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
///
/// Failure means the matrix is not positive definite, which the callers treat
/// as a structural bug in the regularized systems they build.
pub fn cholesky_lower(a: &CMat) -> Result<CMat> {
    assert_eq!(a.rows, a.cols, "cholesky needs a square matrix");
    let n = a.rows;
    let mut l = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)].conj();
            }
            if i == j {
                if sum.re <= 0.0 || sum.im.abs() > 1e-9 * (1.0 + sum.re.abs()) {
                    return Err(Error::Domain(format!(
                        "matrix is not positive definite (pivot {} = {})",
                        i, sum.re
                    )));
                }
                l[(i, j)] = Complex64::new(sum.re.sqrt(), 0.0);
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Inverse of a Hermitian positive-definite matrix via its Cholesky factor.
pub fn hermitian_inverse(a: &CMat) -> Result<CMat> {
    let l = cholesky_lower(a)?;
    let n = a.rows;
    let mut inv = CMat::zeros(n, n);
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for rhs in 0..n {
        for v in col.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        col[rhs] = Complex64::new(1.0, 0.0);
        // Forward solve L w = e, then backward solve L^H x = w.
        for i in 0..n {
            let mut sum = col[i];
            for k in 0..i {
                sum -= l[(i, k)] * col[k];
            }
            col[i] = sum / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut sum = col[i];
            for k in i + 1..n {
                sum -= l[(k, i)].conj() * col[k];
            }
            col[i] = sum / l[(i, i)];
        }
        for i in 0..n {
            inv[(i, rhs)] = col[i];
        }
    }
    Ok(inv)
}

/// General inverse by Gauss-Jordan elimination with partial pivoting.
///
/// Verification-only path: slower and less structured than the Cholesky
/// route, which makes it a useful independent cross-check.
pub fn gauss_inverse(a: &CMat) -> Option<CMat> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut work = a.clone();
    let mut inv = CMat::identity(n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| {
            work[(r1, col)]
                .norm()
                .partial_cmp(&work[(r2, col)].norm())
                .unwrap()
        })?;
        if work[(pivot, col)].norm() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                work.data.swap(pivot * n + j, col * n + j);
                inv.data.swap(pivot * n + j, col * n + j);
            }
        }
        let diag = work[(col, col)];
        for j in 0..n {
            work[(col, j)] /= diag;
            inv[(col, j)] /= diag;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work[(r, col)];
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = work[(col, j)];
                let v = inv[(col, j)];
                work[(r, j)] -= factor * w;
                inv[(r, j)] -= factor * v;
            }
        }
    }
    Some(inv)
}

/// Inverse of a Hermitian positive-definite Toeplitz matrix, held in the
/// Gohberg-Semencul factored form.
///
/// The inverse of a Toeplitz matrix is determined by the first column `x` of
/// that inverse: with `d = x[0]` (real and positive here),
///
/// ```text
/// T^-1 = (L(x) L(x)^H - L(s) L(s)^H) / d,    s = (0, x[K-1]*, .., x[1]*),
/// ```
///
/// where `L(v)` is lower-triangular Toeplitz with first column `v`. Each
/// triangular factor acts as a one-sided convolution, so applying the inverse
/// costs a handful of length-2K FFT passes rather than a dense K^2 matvec.
/// That keeps the per-iteration cost of the consensus solvers at FFT scaling
/// while the dense factorization runs only once per workspace.
#[derive(Debug, Clone)]
pub struct ToeplitzInverse {
    k: usize,
    len: usize,
    delta: f64,
    /// Spectra of the zero-padded factor columns.
    af: Vec<Complex64>,
    bf: Vec<Complex64>,
}

impl ToeplitzInverse {
    pub fn new(m: &CMat) -> Result<Self> {
        assert_eq!(m.rows, m.cols, "factored inverse needs a square matrix");
        let k = m.rows;
        let scale = m.max_abs();
        for r in 1..k {
            for c in 1..k {
                if (m[(r, c)] - m[(r - 1, c - 1)]).norm() > 1e-9 * scale {
                    return Err(Error::Domain(format!(
                        "matrix is not Toeplitz at ({r}, {c})"
                    )));
                }
            }
        }
        let inv = hermitian_inverse(m)?;
        let x: Vec<Complex64> = (0..k).map(|r| inv[(r, 0)]).collect();
        let delta = x[0].re;
        if !(delta > 0.0) || x[0].im.abs() > 1e-9 * delta {
            return Err(Error::Domain(format!(
                "leading inverse entry {} is not positive real",
                x[0]
            )));
        }
        let len = (2 * k).next_power_of_two();
        let plan = crate::fft::dft(len);
        let mut scratch = Vec::new();
        let zero = Complex64::new(0.0, 0.0);
        let mut af = vec![zero; len];
        af[..k].copy_from_slice(&x);
        plan.forward(&mut af, &mut scratch);
        let mut bf = vec![zero; len];
        for j in 1..k {
            bf[j] = x[k - j].conj();
        }
        plan.forward(&mut bf, &mut scratch);
        Ok(ToeplitzInverse { k, len, delta, af, bf })
    }

    /// Applies `T^-1` to `r` through the factored form.
    pub fn apply(&self, r: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(r.len(), self.k, "apply width mismatch");
        let plan = crate::fft::dft(self.len);
        let mut scratch = Vec::new();
        let zero = Complex64::new(0.0, 0.0);
        let mut rf = vec![zero; self.len];
        rf[..self.k].copy_from_slice(r);
        plan.forward(&mut rf, &mut scratch);
        // One factor pair: u = L(v) (L(v)^H r), via correlation then convolution.
        let mut pair = |vf: &[Complex64]| -> Vec<Complex64> {
            let mut buf: Vec<Complex64> =
                vf.iter().zip(&rf).map(|(v, w)| v.conj() * w).collect();
            plan.inverse(&mut buf, &mut scratch);
            for slot in buf[self.k..].iter_mut() {
                *slot = zero;
            }
            plan.forward(&mut buf, &mut scratch);
            for (slot, v) in buf.iter_mut().zip(vf) {
                *slot *= v;
            }
            plan.inverse(&mut buf, &mut scratch);
            buf
        };
        let ua = pair(&self.af);
        let ub = pair(&self.bf);
        // Two unnormalized round trips leave a factor len^2.
        let norm = 1.0 / (self.delta * (self.len * self.len) as f64);
        ua[..self.k]
            .iter()
            .zip(&ub[..self.k])
            .map(|(a, b)| (a - b) * norm)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hpd(n: usize, seed: u64) -> CMat {
        // B^H B + n I is Hermitian positive definite for any B.
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut b = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = c(next(), next());
            }
        }
        let mut a = b.hermitian().matmul(&b);
        for i in 0..n {
            a[(i, i)] += c(n as f64, 0.0);
        }
        a
    }

    #[test]
    fn cholesky_inverse_matches_gauss_jordan() {
        let a = random_hpd(9, 7);
        let inv1 = hermitian_inverse(&a).unwrap();
        let inv2 = gauss_inverse(&a).unwrap();
        assert!(inv1.sub(&inv2).max_abs() < 1e-10);
        let residual = a.matmul(&inv1).sub(&CMat::identity(9)).max_abs();
        assert!(residual < 1e-10, "A * inv(A) off identity by {residual}");
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = CMat::identity(3);
        a[(1, 1)] = c(-2.0, 0.0);
        assert!(cholesky_lower(&a).is_err());
    }

    fn toeplitz_from_generator(t: &[Complex64]) -> CMat {
        let k = t.len();
        let mut m = CMat::zeros(k, k);
        for r in 0..k {
            for col in 0..k {
                m[(r, col)] = if col >= r { t[col - r] } else { t[r - col].conj() };
            }
        }
        m
    }

    #[test]
    fn factored_toeplitz_inverse_matches_dense() {
        for &k in &[1usize, 2, 3, 5, 8, 28, 56] {
            let mut state = 0x5eed ^ k as u64;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            // Diagonally dominant generator keeps the matrix positive definite.
            let mut t = vec![c(k as f64 + 1.0, 0.0)];
            for _ in 1..k {
                t.push(c(next(), next()));
            }
            let m = toeplitz_from_generator(&t);
            let dense = hermitian_inverse(&m).unwrap();
            let fast = ToeplitzInverse::new(&m).unwrap();
            let r: Vec<Complex64> = (0..k).map(|_| c(next(), next())).collect();
            let want = dense.matvec(&r);
            let got = fast.apply(&r);
            let err: f64 = want
                .iter()
                .zip(&got)
                .map(|(w, g)| (w - g).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let base: f64 = want.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
            assert!(err <= 1e-10 * base.max(1e-12), "k={k}: off by {err} vs {base}");
        }
    }

    #[test]
    fn factored_inverse_rejects_non_toeplitz() {
        let m = random_hpd(4, 11);
        assert!(ToeplitzInverse::new(&m).is_err());
    }

    #[test]
    fn matvec_matches_manual_expansion() {
        let m = CMat::from_rows(vec![
            vec![c(1.0, 1.0), c(0.0, -2.0)],
            vec![c(3.0, 0.0), c(1.0, 1.0)],
        ]);
        let x = vec![c(2.0, 0.0), c(0.0, 1.0)];
        let y = m.matvec(&x);
        assert!((y[0] - c(4.0, 2.0)).norm() < 1e-15);
        assert!((y[1] - c(5.0, 1.0)).norm() < 1e-15);
    }
}
