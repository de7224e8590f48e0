//! Eigen-decomposition of small dense real matrices.
//!
//! Eigenvalues come from balancing, elimination to upper Hessenberg form and
//! the Francis double-shift QR iteration. Eigenvectors are recovered by
//! complex inverse iteration on the original matrix.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_complex::Complex64;

use super::matrix::{frobenius, Matrix};
use crate::error::{Error, Result};

/// Largest matrix order accepted by [`eigen`].
pub const MAX_ORDER: usize = 64;

/// Eigenvalues with paired unit eigenvectors.
///
/// Ordered by real part descending, then imaginary part descending. Each
/// vector has unit 2-norm and its largest-modulus component is real and
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSet {
    pub values: Vec<Complex64>,
    pub vectors: Vec<Vec<Complex64>>,
}

/// 1-based square scratch array, matching the classic formulation of the
/// Hessenberg QR algorithm.
struct Work {
    n: usize,
    a: Vec<f64>,
}

impl Work {
    fn new(m: &Matrix) -> Self {
        let n = m.rows();
        let mut a = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Self { n, a }
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        self.a[i as usize * (self.n + 1) + j as usize]
    }

    #[inline]
    fn set(&mut self, i: isize, j: isize, v: f64) {
        let n1 = self.n + 1;
        self.a[i as usize * n1 + j as usize] = v;
    }

    #[inline]
    fn sub(&mut self, i: isize, j: isize, v: f64) {
        let n1 = self.n + 1;
        self.a[i as usize * n1 + j as usize] -= v;
    }

    fn balance(&mut self) {
        const RADIX: f64 = 2.0;
        let n = self.n as isize;
        let sqrdx = RADIX * RADIX;
        let mut done = false;
        while !done {
            done = true;
            for i in 1..=n {
                let mut r = 0.0;
                let mut c = 0.0;
                for j in 1..=n {
                    if j != i {
                        c += libm::fabs(self.at(j, i));
                        r += libm::fabs(self.at(i, j));
                    }
                }
                if c != 0.0 && r != 0.0 {
                    let mut g = r / RADIX;
                    let mut f = 1.0;
                    let s = c + r;
                    while c < g {
                        f *= RADIX;
                        c *= sqrdx;
                    }
                    g = r * RADIX;
                    while c > g {
                        f /= RADIX;
                        c /= sqrdx;
                    }
                    if (c + r) / f < 0.95 * s {
                        done = false;
                        let g = 1.0 / f;
                        for j in 1..=n {
                            let v = self.at(i, j) * g;
                            self.set(i, j, v);
                        }
                        for j in 1..=n {
                            let v = self.at(j, i) * f;
                            self.set(j, i, v);
                        }
                    }
                }
            }
        }
    }

    /// Gaussian elimination with pivoting to upper Hessenberg form.
    fn hessenberg(&mut self) {
        let n = self.n as isize;
        for m in 2..n {
            let mut x = 0.0;
            let mut i = m;
            for j in m..=n {
                if libm::fabs(self.at(j, m - 1)) > libm::fabs(x) {
                    x = self.at(j, m - 1);
                    i = j;
                }
            }
            if i != m {
                for j in (m - 1)..=n {
                    let (p, q) = (self.at(i, j), self.at(m, j));
                    self.set(i, j, q);
                    self.set(m, j, p);
                }
                for j in 1..=n {
                    let (p, q) = (self.at(j, i), self.at(j, m));
                    self.set(j, i, q);
                    self.set(j, m, p);
                }
            }
            if x != 0.0 {
                for i in (m + 1)..=n {
                    let mut y = self.at(i, m - 1);
                    if y != 0.0 {
                        y /= x;
                        self.set(i, m - 1, y);
                        for j in m..=n {
                            let v = y * self.at(m, j);
                            self.sub(i, j, v);
                        }
                        for j in 1..=n {
                            let v = y * self.at(j, i);
                            self.sub(j, m, -v);
                        }
                    }
                }
            }
        }
        for i in 1..=n {
            for j in 1..(i - 1).max(1) {
                self.set(i, j, 0.0);
            }
        }
    }

    /// Francis double-shift QR on the Hessenberg matrix; returns (re, im).
    fn hqr(&mut self, max_sweeps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n as isize;
        let mut wr = vec![0.0; self.n + 1];
        let mut wi = vec![0.0; self.n + 1];
        let mut anorm = 0.0;
        for i in 1..=n {
            for j in (i - 1).max(1)..=n {
                anorm += libm::fabs(self.at(i, j));
            }
        }
        let mut nn = n;
        let mut t = 0.0;
        let mut sweeps = 0usize;
        let (mut p, mut q, mut r): (f64, f64, f64);
        while nn >= 1 {
            let mut its = 0usize;
            loop {
                let mut l = nn;
                while l >= 2 {
                    let mut s = libm::fabs(self.at(l - 1, l - 1)) + libm::fabs(self.at(l, l));
                    if s == 0.0 {
                        s = anorm;
                    }
                    if libm::fabs(self.at(l, l - 1)) + s == s {
                        self.set(l, l - 1, 0.0);
                        break;
                    }
                    l -= 1;
                }
                let mut x = self.at(nn, nn);
                if l == nn {
                    wr[nn as usize] = x + t;
                    wi[nn as usize] = 0.0;
                    nn -= 1;
                } else {
                    let mut y = self.at(nn - 1, nn - 1);
                    let mut w = self.at(nn, nn - 1) * self.at(nn - 1, nn);
                    if l == nn - 1 {
                        p = 0.5 * (y - x);
                        q = p * p + w;
                        let mut z = libm::sqrt(libm::fabs(q));
                        x += t;
                        if q >= 0.0 {
                            z = p + libm::copysign(z, p);
                            wr[nn as usize - 1] = x + z;
                            wr[nn as usize] = x + z;
                            if z != 0.0 {
                                wr[nn as usize] = x - w / z;
                            }
                            wi[nn as usize - 1] = 0.0;
                            wi[nn as usize] = 0.0;
                        } else {
                            wr[nn as usize - 1] = x + p;
                            wr[nn as usize] = x + p;
                            wi[nn as usize - 1] = -z;
                            wi[nn as usize] = z;
                        }
                        nn -= 2;
                    } else {
                        sweeps += 1;
                        if sweeps > max_sweeps {
                            return Err(Error::NoConvergence(max_sweeps));
                        }
                        if its > 0 && its.is_multiple_of(10) {
                            // exceptional shift
                            t += x;
                            for i in 1..=nn {
                                self.sub(i, i, x);
                            }
                            let s = libm::fabs(self.at(nn, nn - 1)) + libm::fabs(self.at(nn - 1, nn - 2));
                            x = 0.75 * s;
                            y = x;
                            w = -0.4375 * s * s;
                        }
                        its += 1;
                        let mut m = nn - 2;
                        let mut z;
                        loop {
                            z = self.at(m, m);
                            let rr = x - z;
                            let s = y - z;
                            p = (rr * s - w) / self.at(m + 1, m) + self.at(m, m + 1);
                            q = self.at(m + 1, m + 1) - z - rr - s;
                            r = self.at(m + 2, m + 1);
                            let s = libm::fabs(p) + libm::fabs(q) + libm::fabs(r);
                            p /= s;
                            q /= s;
                            r /= s;
                            if m == l {
                                break;
                            }
                            let u = libm::fabs(self.at(m, m - 1)) * (libm::fabs(q) + libm::fabs(r));
                            let v = libm::fabs(p)
                                * (libm::fabs(self.at(m - 1, m - 1)) + libm::fabs(z) + libm::fabs(self.at(m + 1, m + 1)));
                            if u + v == v {
                                break;
                            }
                            m -= 1;
                        }
                        for i in (m + 2)..=nn {
                            self.set(i, i - 2, 0.0);
                            if i != m + 2 {
                                self.set(i, i - 3, 0.0);
                            }
                        }
                        let mut k = m;
                        while k < nn {
                            if k != m {
                                p = self.at(k, k - 1);
                                q = self.at(k + 1, k - 1);
                                r = 0.0;
                                if k != nn - 1 {
                                    r = self.at(k + 2, k - 1);
                                }
                                x = libm::fabs(p) + libm::fabs(q) + libm::fabs(r);
                                if x != 0.0 {
                                    p /= x;
                                    q /= x;
                                    r /= x;
                                }
                            }
                            let s = libm::copysign(libm::sqrt(p * p + q * q + r * r), p);
                            if s != 0.0 {
                                if k == m {
                                    if l != m {
                                        let v = -self.at(k, k - 1);
                                        self.set(k, k - 1, v);
                                    }
                                } else {
                                    self.set(k, k - 1, -s * x);
                                }
                                p += s;
                                x = p / s;
                                y = q / s;
                                z = r / s;
                                q /= p;
                                r /= p;
                                for j in k..=nn {
                                    p = self.at(k, j) + q * self.at(k + 1, j);
                                    if k != nn - 1 {
                                        p += r * self.at(k + 2, j);
                                        self.sub(k + 2, j, p * z);
                                    }
                                    self.sub(k + 1, j, p * y);
                                    self.sub(k, j, p * x);
                                }
                                let mmin = if nn < k + 3 { nn } else { k + 3 };
                                for i in l..=mmin {
                                    p = x * self.at(i, k) + y * self.at(i, k + 1);
                                    if k != nn - 1 {
                                        p += z * self.at(i, k + 2);
                                        self.sub(i, k + 2, p * r);
                                    }
                                    self.sub(i, k + 1, p * q);
                                    self.sub(i, k, p);
                                }
                            }
                            k += 1;
                        }
                    }
                }
                if !(l < nn - 1) {
                    break;
                }
            }
        }
        wr.remove(0);
        wi.remove(0);
        Ok((wr, wi))
    }
}

fn cabs(z: Complex64) -> f64 {
    libm::hypot(z.re, z.im)
}

fn cmp_eig(a: &Complex64, b: &Complex64) -> Ordering {
    b.re.partial_cmp(&a.re)
        .unwrap_or(Ordering::Equal)
        .then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
}

/// Solves `(A − μI)·x = b` in complex arithmetic; zero pivots are replaced by
/// `floor` so that exact eigenvalue shifts still produce a direction.
fn shifted_solve(a: &Matrix, mu: Complex64, b: &[Complex64], floor: f64) -> Vec<Complex64> {
    let n = a.rows();
    let mut m: Vec<Complex64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { mu } else { Complex64::new(0.0, 0.0) };
            m.push(Complex64::new(a[(i, j)], 0.0) - d);
        }
    }
    let mut y = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if cabs(m[r * n + col]) > cabs(m[piv * n + col]) {
                piv = r;
            }
        }
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
            }
            y.swap(piv, col);
        }
        if cabs(m[col * n + col]) < floor {
            m[col * n + col] = Complex64::new(floor, 0.0);
        }
        let p = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m[col * n + j];
                m[r * n + j] -= f * v;
            }
            let v = y[col];
            y[r] -= f * v;
        }
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= m[i * n + j] * y[j];
        }
        y[i] = s / m[i * n + i];
    }
    y
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let nrm = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
    if nrm > 0.0 && nrm.is_finite() {
        for z in v.iter_mut() {
            *z /= nrm;
        }
    }
    nrm
}

/// Rotates the phase so the largest-modulus component is real and positive.
fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if cabs(*z) > cabs(v[best]) * (1.0 + 1e-9) {
            best = i;
        }
    }
    let z = v[best];
    let r = cabs(z);
    if r > 0.0 {
        let phase = z.conj() / r;
        for c in v.iter_mut() {
            *c *= phase;
        }
        v[best] = Complex64::new(cabs(v[best]), 0.0);
    }
}

fn residual(a: &Matrix, lambda: Complex64, v: &[Complex64]) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        let mut s = -lambda * v[i];
        for j in 0..n {
            s += v[j] * a[(i, j)];
        }
        acc += s.norm_sqr();
    }
    libm::sqrt(acc)
}

fn project_out(v: &mut [Complex64], basis: &[&Vec<Complex64>]) {
    for u in basis {
        let c: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
        for (x, y) in v.iter_mut().zip(u.iter()) {
            *x -= c * y;
        }
    }
}

fn start_vector(n: usize, k: usize) -> Vec<Complex64> {
    // deterministic, generic start (no component vanishes, differs per k)
    (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * (k as f64 + 1.618_033_988_75);
            Complex64::new(1.0 + 0.5 * libm::sin(t * 1.3), 0.25 * libm::cos(t * 0.7))
        })
        .collect()
}

fn inverse_iteration(
    a: &Matrix,
    lambda: Complex64,
    start: Vec<Complex64>,
    against: &[&Vec<Complex64>],
    scale: f64,
) -> Option<Vec<Complex64>> {
    let shift = lambda + Complex64::new(1e-10 * scale, 0.0);
    let floor = 1e-14 * scale;
    let mut v = start;
    project_out(&mut v, against);
    if normalize(&mut v) == 0.0 {
        return None;
    }
    for _ in 0..3 {
        let mut w = shifted_solve(a, shift, &v, floor);
        if !w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        normalize(&mut w);
        project_out(&mut w, against);
        if normalize(&mut w) < 1e-6 {
            return None;
        }
        v = w;
    }
    Some(v)
}

/// Full eigen-decomposition of a real square matrix of order ≤ 64.
///
/// Exceeding `100·n` QR sweeps is a [`Error::NoConvergence`] failure.
pub fn eigen(a: &Matrix) -> Result<EigenSet> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidDimension(n));
    }
    if let Some(index) = a.as_slice().iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }

    let mut work = Work::new(a);
    work.balance();
    work.hessenberg();
    let (wr, wi) = work.hqr(100 * n)?;
    let mut values: Vec<Complex64> = wr.iter().zip(&wi).map(|(&re, &im)| Complex64::new(re, im)).collect();
    values.sort_by(cmp_eig);

    let scale = frobenius(a).max(1.0);
    let tol = 1e-8 * scale;
    let cluster_tol = 1e-6 * scale;
    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = values[k];
        // second member of a conjugate pair reuses the conjugated vector
        if lambda.im < 0.0 && k > 0 && values[k - 1].im > 0.0 && cabs(values[k - 1].conj() - lambda) <= cluster_tol {
            let v = vectors[k - 1].iter().map(|z| z.conj()).collect();
            vectors.push(v);
            continue;
        }
        let cluster: Vec<&Vec<Complex64>> =
            (0..k).filter(|&j| cabs(values[j] - lambda) <= cluster_tol).map(|j| &vectors[j]).collect();
        let plain = inverse_iteration(a, lambda, start_vector(n, k), &[], scale);
        let mut chosen = plain.clone();
        if !cluster.is_empty() {
            if let Some(v) = inverse_iteration(a, lambda, start_vector(n, k), &cluster, scale) {
                if residual(a, lambda, &v) <= tol {
                    chosen = Some(v);
                }
            }
        }
        let mut v = chosen.ok_or(Error::NoConvergence(100 * n))?;
        fix_phase(&mut v);
        vectors.push(v);
    }
    Ok(EigenSet { values, vectors })
}
