//! Complex Schur decomposition and eigenvectors of a dense matrix.
//!
//! Householder reduction to upper Hessenberg form followed by single-shift
//! complex QR iteration (Wilkinson shift, exceptional shifts on stagnation),
//! then back-substitution on the triangular factor for the eigenvectors.
//! The kernel is generic over the real scalar so the same code runs in `f64`
//! and in double-double.

use std::ops::Neg;

use num_complex::{Complex, Complex64};
use num_traits::{Num, Zero};

use crate::dd::DoubleDouble;
use crate::matrix::ComplexMatrix;

/// Real scalar usable by the Schur kernel.
pub trait Real: Copy + Num + Neg<Output = Self> + PartialOrd + Send + Sync {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn epsilon() -> Self;
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

impl Real for DoubleDouble {
    fn from_f64(x: f64) -> Self {
        DoubleDouble::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        DoubleDouble::to_f64(self)
    }
    fn sqrt(self) -> Self {
        DoubleDouble::sqrt(self)
    }
    fn abs(self) -> Self {
        DoubleDouble::abs(self)
    }
    fn epsilon() -> Self {
        DoubleDouble::EPSILON
    }
}

type C<R> = Complex<R>;

#[inline]
fn cabs1<R: Real>(z: C<R>) -> R {
    z.re.abs() + z.im.abs()
}

#[inline]
fn cabs<R: Real>(z: C<R>) -> R {
    let s = z.re.abs().max_r(z.im.abs());
    if s.is_zero() {
        return R::zero();
    }
    let (a, b) = (z.re / s, z.im / s);
    s * (a * a + b * b).sqrt()
}

#[inline]
fn csqrt<R: Real>(z: C<R>) -> C<R> {
    // Principal square root.
    let r = cabs(z);
    if r.is_zero() {
        return C::new(R::zero(), R::zero());
    }
    let half = R::from_f64(0.5);
    let re = ((r + z.re) * half).sqrt();
    let im = ((r - z.re) * half).sqrt();
    if z.im < R::zero() {
        C::new(re, -im)
    } else {
        C::new(re, im)
    }
}

trait MaxR {
    fn max_r(self, other: Self) -> Self;
}

impl<R: Real> MaxR for R {
    fn max_r(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// Row-major working matrix.
struct Work<R: Real> {
    n: usize,
    a: Vec<C<R>>,
}

impl<R: Real> Work<R> {
    fn identity(n: usize) -> Self {
        let mut a = vec![C::new(R::zero(), R::zero()); n * n];
        for i in 0..n {
            a[i * n + i] = C::new(R::one(), R::zero());
        }
        Self { n, a }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> C<R> {
        self.a[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, z: C<R>) {
        self.a[i * self.n + j] = z;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchurFailure {
    /// QR iteration exhausted its budget while isolating this eigenvalue.
    NoConvergence { index: usize },
}

/// Eigenvalues and right eigenvectors (columns, Dirac-normalized) of `a`,
/// in the order they appear on the diagonal of the Schur factor.
pub struct RawEigen {
    pub values: Vec<Complex64>,
    pub vectors: Vec<Vec<Complex64>>,
}

pub fn eigen<R: Real>(a: &ComplexMatrix) -> Result<RawEigen, SchurFailure> {
    eigen_split::<R>(a, None)
}

/// As [`eigen`] for the matrix `head + tail`, where `tail` carries the
/// low-order parts of entries that `f64` cannot hold. Only a working
/// precision finer than `f64` sees the tail.
pub fn eigen_split<R: Real>(head: &ComplexMatrix, tail: Option<&ComplexMatrix>) -> Result<RawEigen, SchurFailure> {
    let n = head.dim();
    let lift = |z: &Complex64| C::new(R::from_f64(z.re), R::from_f64(z.im));
    let mut entries: Vec<C<R>> = head.as_slice().iter().map(lift).collect();
    if let Some(t) = tail {
        for (e, z) in entries.iter_mut().zip(t.as_slice()) {
            *e = *e + lift(z);
        }
    }
    let mut h = Work::<R> { n, a: entries };
    let mut z = Work::<R>::identity(n);
    if n == 0 {
        return Ok(RawEigen {
            values: vec![],
            vectors: vec![],
        });
    }
    hessenberg(&mut h, &mut z);
    qr_iterate(&mut h, &mut z)?;
    let vectors = triangular_eigenvectors(&h, &z);
    let values = (0..n)
        .map(|i| {
            let d = h.get(i, i);
            Complex64::new(d.re.to_f64(), d.im.to_f64())
        })
        .collect();
    Ok(RawEigen { values, vectors })
}

/// Householder reduction `H = Q^H A Q`, with `Q` accumulated into `z`.
fn hessenberg<R: Real>(h: &mut Work<R>, z: &mut Work<R>) {
    let n = h.n;
    let zero = C::new(R::zero(), R::zero());
    for k in 0..n.saturating_sub(2) {
        let mut scale = R::zero();
        for i in k + 1..n {
            scale = scale + cabs1(h.get(i, k));
        }
        if scale.is_zero() {
            continue;
        }
        let mut v: Vec<C<R>> = (k + 1..n).map(|i| h.get(i, k) / C::new(scale, R::zero())).collect();
        let mut sq = R::zero();
        for x in &v {
            sq = sq + x.re * x.re + x.im * x.im;
        }
        let xnorm = sq.sqrt();
        let x0 = v[0];
        let x0abs = cabs(x0);
        let phase = if x0abs.is_zero() {
            C::new(R::one(), R::zero())
        } else {
            x0 / C::new(x0abs, R::zero())
        };
        // v = x + phase*|x| e1, reflector I - 2 v v^H / (v^H v)
        v[0] = x0 + phase * C::new(xnorm, R::zero());
        let mut vnorm2 = R::zero();
        for x in &v {
            vnorm2 = vnorm2 + x.re * x.re + x.im * x.im;
        }
        if vnorm2.is_zero() {
            continue;
        }
        let two_over = C::new(R::from_f64(2.0) / vnorm2, R::zero());

        // Left: rows k+1.., all columns from k.
        for j in k..n {
            let mut s = zero;
            for (t, i) in (k + 1..n).enumerate() {
                s = s + v[t].conj() * h.get(i, j);
            }
            s = s * two_over;
            for (t, i) in (k + 1..n).enumerate() {
                let val = h.get(i, j) - v[t] * s;
                h.set(i, j, val);
            }
        }
        // Right: all rows, columns k+1..
        for i in 0..n {
            let mut s = zero;
            for (t, j) in (k + 1..n).enumerate() {
                s = s + h.get(i, j) * v[t];
            }
            s = s * two_over;
            for (t, j) in (k + 1..n).enumerate() {
                let val = h.get(i, j) - s * v[t].conj();
                h.set(i, j, val);
            }
        }
        for i in 0..n {
            let mut s = zero;
            for (t, j) in (k + 1..n).enumerate() {
                s = s + z.get(i, j) * v[t];
            }
            s = s * two_over;
            for (t, j) in (k + 1..n).enumerate() {
                let val = z.get(i, j) - s * v[t].conj();
                z.set(i, j, val);
            }
        }
        for i in k + 2..n {
            h.set(i, k, zero);
        }
    }
}

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with real `c` such that
/// `G [x; y] = [r; 0]`.
fn givens<R: Real>(x: C<R>, y: C<R>) -> (R, C<R>) {
    let zero = C::new(R::zero(), R::zero());
    if y.is_zero() {
        return (R::one(), zero);
    }
    let ay = cabs(y);
    if x.is_zero() {
        return (R::zero(), y.conj() / C::new(ay, R::zero()));
    }
    let ax = cabs(x);
    let scale = ax.max_r(ay);
    let (sx, sy) = (ax / scale, ay / scale);
    let norm = scale * (sx * sx + sy * sy).sqrt();
    let c = ax / norm;
    let s = (x / C::new(ax, R::zero())) * y.conj() / C::new(norm, R::zero());
    (c, s)
}

fn qr_iterate<R: Real>(h: &mut Work<R>, z: &mut Work<R>) -> Result<(), SchurFailure> {
    let n = h.n;
    let zero = C::new(R::zero(), R::zero());
    let eps = R::epsilon();
    let mut hnorm = R::zero();
    for x in &h.a {
        hnorm = hnorm.max_r(cabs1(*x));
    }
    let small = R::from_f64(f64::MIN_POSITIVE) / eps;
    let max_iter = 30 * n.max(10);

    let mut hi = n - 1;
    let mut iter = 0usize;
    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = cabs1(h.get(lo, lo - 1));
            let mut diag = cabs1(h.get(lo, lo)) + cabs1(h.get(lo - 1, lo - 1));
            if diag.is_zero() {
                diag = hnorm;
            }
            if sub <= eps * diag || sub <= small {
                h.set(lo, lo - 1, zero);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(SchurFailure::NoConvergence { index: hi });
        }

        let shift = if iter % 10 == 0 {
            // Exceptional shift.
            let t = cabs1(h.get(hi, hi - 1)) * R::from_f64(0.75);
            h.get(hi, hi) + C::new(t, R::zero())
        } else {
            wilkinson_shift(
                h.get(hi - 1, hi - 1),
                h.get(hi - 1, hi),
                h.get(hi, hi - 1),
                h.get(hi, hi),
            )
        };

        let mut x = h.get(lo, lo) - shift;
        let mut y = h.get(lo + 1, lo);
        for k in lo..hi {
            if k > lo {
                x = h.get(k, k - 1);
                y = h.get(k + 1, k - 1);
            }
            let (c, s) = givens(x, y);
            let cc = C::new(c, R::zero());
            let start = if k > lo { k - 1 } else { k };
            for j in start..n {
                let a = h.get(k, j);
                let b = h.get(k + 1, j);
                h.set(k, j, cc * a + s * b);
                h.set(k + 1, j, cc * b - s.conj() * a);
            }
            let end = (k + 2).min(hi);
            for i in 0..=end {
                let a = h.get(i, k);
                let b = h.get(i, k + 1);
                h.set(i, k, a * cc + b * s.conj());
                h.set(i, k + 1, b * cc - a * s);
            }
            for i in 0..n {
                let a = z.get(i, k);
                let b = z.get(i, k + 1);
                z.set(i, k, a * cc + b * s.conj());
                z.set(i, k + 1, b * cc - a * s);
            }
            if k > lo {
                h.set(k + 1, k - 1, zero);
            }
        }
    }
    Ok(())
}

/// Eigenvalue of the trailing 2x2 block closer to its last diagonal entry.
fn wilkinson_shift<R: Real>(a: C<R>, b: C<R>, c: C<R>, d: C<R>) -> C<R> {
    let half = C::new(R::from_f64(0.5), R::zero());
    let tr_half = (a + d) * half;
    let diff_half = (a - d) * half;
    let disc = csqrt(diff_half * diff_half + b * c);
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if cabs1(l1 - d) <= cabs1(l2 - d) {
        l1
    } else {
        l2
    }
}

/// Back-substitution on the upper-triangular Schur factor `t`, then
/// back-transformation by `z`.
fn triangular_eigenvectors<R: Real>(t: &Work<R>, z: &Work<R>) -> Vec<Vec<Complex64>> {
    let n = t.n;
    let zero = C::new(R::zero(), R::zero());
    let eps = R::epsilon();
    let mut tnorm = R::zero();
    for i in 0..n {
        for j in i..n {
            tnorm = tnorm.max_r(cabs1(t.get(i, j)));
        }
    }
    let smlnum = R::from_f64(f64::MIN_POSITIVE) * R::from_f64(n as f64) / eps;
    let big = R::from_f64(1e200);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t.get(k, k);
        let smin = (eps * cabs1(lambda)).max_r(eps * tnorm).max_r(smlnum);
        let mut y = vec![zero; k + 1];
        y[k] = C::new(R::one(), R::zero());
        for i in (0..k).rev() {
            let mut s = zero;
            for j in i + 1..=k {
                s = s + t.get(i, j) * y[j];
            }
            let mut denom = t.get(i, i) - lambda;
            if cabs1(denom) < smin {
                denom = C::new(smin, R::zero());
            }
            y[i] = -s / denom;
            if cabs1(y[i]) > big {
                let inv = C::new(R::one() / cabs1(y[i]), R::zero());
                for v in y.iter_mut() {
                    *v = *v * inv;
                }
            }
        }
        let mut v: Vec<C<R>> = (0..n)
            .map(|i| {
                let mut s = zero;
                for (j, yj) in y.iter().enumerate() {
                    s = s + z.get(i, j) * *yj;
                }
                s
            })
            .collect();
        let mut nrm = R::zero();
        let mut vmax = R::zero();
        for x in &v {
            vmax = vmax.max_r(cabs(*x));
        }
        if !vmax.is_zero() {
            for x in v.iter_mut() {
                *x = *x / C::new(vmax, R::zero());
                nrm = nrm + x.re * x.re + x.im * x.im;
            }
            let nrm = C::new(nrm.sqrt(), R::zero());
            for x in v.iter_mut() {
                *x = *x / nrm;
            }
        }
        out.push(v.iter().map(|x| Complex64::new(x.re.to_f64(), x.im.to_f64())).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::norm2;

    fn residual(a: &ComplexMatrix, lambda: Complex64, v: &[Complex64]) -> f64 {
        let av = a.mul_vec(v);
        av.iter()
            .zip(v)
            .map(|(x, y)| (x - lambda * y).norm())
            .fold(0.0, f64::max)
    }

    fn random_matrix(n: usize, seed: u64) -> ComplexMatrix {
        // Small LCG; only needs to be deterministic.
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let entries = (0..n * n).map(|_| Complex64::new(next(), next())).collect();
        ComplexMatrix::from_row_major(n, entries).unwrap()
    }

    #[test]
    fn random_matrices_have_small_residuals_in_both_precisions() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (12, 4), (40, 5)] {
            let a = random_matrix(n, seed);
            for raw in [eigen::<f64>(&a).unwrap(), eigen::<DoubleDouble>(&a).unwrap()] {
                for (l, v) in raw.values.iter().zip(&raw.vectors) {
                    assert!((norm2(v) - 1.0).abs() < 1e-14);
                    let r = residual(&a, *l, v);
                    assert!(r < 1e-12 * a.norm_inf().max(1.0), "n={n} r={r}");
                }
            }
        }
    }

    #[test]
    fn trace_is_preserved() {
        let a = random_matrix(17, 99);
        let raw = eigen::<DoubleDouble>(&a).unwrap();
        let tr: Complex64 = a.diagonal().iter().sum();
        let sum: Complex64 = raw.values.iter().sum();
        assert!((tr - sum).norm() < 1e-13);
    }

    #[test]
    fn jordan_block_perturbation_scales_with_precision() {
        // [[0,1],[eps^2,0]] has eigenvalues +-eps; a pure Jordan block
        // splits by O(sqrt(u)) in working precision u.
        let a = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        ])
        .unwrap();
        let raw = eigen::<DoubleDouble>(&a).unwrap();
        for l in raw.values {
            assert!(l.norm() < 1e-15);
        }
    }

    #[test]
    fn empty_and_scalar() {
        let a = ComplexMatrix::zeros(0);
        assert!(eigen::<f64>(&a).unwrap().values.is_empty());
        let b = ComplexMatrix::from_rows(&[vec![Complex64::new(2.0, -1.0)]]).unwrap();
        let raw = eigen::<f64>(&b).unwrap();
        assert_eq!(raw.values, vec![Complex64::new(2.0, -1.0)]);
    }
}
