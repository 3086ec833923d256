//! Dense and sparse linear-algebra kernels: complex Schur form, Kronecker-sum
//! (Sylvester) solves, matrix exponential, Lanczos norm estimates and
//! shift-invert Arnoldi.

use crate::error::{Error, Result};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

pub type CMat = Mat<C64>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn real_to_complex(m: &Mat<f64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    let mut y = vec![ZERO; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == ZERO {
            continue;
        }
        let col = a.col_as_slice(j);
        for (yi, aij) in y.iter_mut().zip(col) {
            *yi += aij * xj;
        }
    }
    y
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product Σ conj(x_i) y_i.
pub fn dotc(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn col_vec(x: &[C64]) -> CMat {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.col_as_slice(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.col_as_slice(j).iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

pub fn conj_transpose(a: &CMat) -> CMat {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

/// Complex Schur decomposition `A = Z T Z^H`, `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: CMat,
    pub z: CMat,
}

fn hessenberg(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = identity(n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = norm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vn = norm2(&v);
        if vn == 0.0 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= vn;
        }
        // H <- (I - 2vv^H) H on rows k+1..n
        for j in 0..n {
            let mut s = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + idx, j)];
            }
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, j)] -= vi * s * 2.0;
            }
        }
        // H <- H (I - 2vv^H) on columns k+1..n, same for Q
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let mut s = ZERO;
                for (idx, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + idx)] * vi;
                }
                for (idx, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + idx)] -= s * vi.conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

/// Complex Schur form by Hessenberg reduction and single-shift QR iterations.
pub fn schur(a: &CMat) -> Result<Schur> {
    let n = a.nrows();
    let (mut h, mut z) = hessenberg(a);
    if n <= 1 {
        return Ok(Schur { t: h, z });
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 60 * n {
            return Err(Error::Numerical("complex Schur QR iteration did not converge".into()));
        }
        let mu = if iter % 11 == 0 {
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, h[(hi, hi - 1)].norm() * 0.5)
        } else {
            let a11 = h[(hi - 1, hi - 1)];
            let a12 = h[(hi - 1, hi)];
            let a21 = h[(hi, hi - 1)];
            let a22 = h[(hi, hi)];
            let tr = (a11 + a22) * 0.5;
            let disc = ((a11 - a22) * 0.5 * ((a11 - a22) * 0.5) + a12 * a21).sqrt();
            let e1 = tr + disc;
            let e2 = tr - disc;
            if (e1 - a22).norm() < (e2 - a22).norm() { e1 } else { e2 }
        };
        let mut x = h[(l, l)] - mu;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            if k > l {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let col0 = if k > l { k - 1 } else { l };
            for j in col0..n {
                let p = h[(k, j)];
                let q = h[(k + 1, j)];
                h[(k, j)] = p * c + s * q;
                h[(k + 1, j)] = -s.conj() * p + q * c;
            }
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            let rmax = (k + 2).min(hi);
            for i in 0..=rmax {
                let p = h[(i, k)];
                let q = h[(i, k + 1)];
                h[(i, k)] = p * c + q * s.conj();
                h[(i, k + 1)] = -p * s + q * c;
            }
            for i in 0..n {
                let p = z[(i, k)];
                let q = z[(i, k + 1)];
                z[(i, k)] = p * c + q * s.conj();
                z[(i, k + 1)] = -p * s + q * c;
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { t: h, z })
}

/// Solve `(T - shift I) x = b` for upper-triangular `T`, in place.
pub fn upper_shift_solve(t: &CMat, shift: C64, b: &mut [C64]) {
    let n = t.nrows();
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= t[(i, j)] * b[j];
        }
        b[i] = s / (t[(i, i)] - shift);
    }
}

/// Solve `(T - shift I)^H x = b` for upper-triangular `T`, in place.
pub fn upper_shift_solve_adjoint(t: &CMat, shift: C64, b: &mut [C64]) {
    let n = t.nrows();
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= t[(j, i)].conj() * b[j];
        }
        b[i] = s / (t[(i, i)] - shift).conj();
    }
}

/// Kronecker sum `A ⊗ I + I ⊗ B` acting on vectors indexed `i * nb + j`.
#[derive(Debug, Clone)]
pub struct KroneckerSum {
    pub a: CMat,
    pub b: CMat,
}

impl KroneckerSum {
    pub fn dim(&self) -> usize {
        self.a.nrows() * self.b.nrows()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let (na, nb) = (self.a.nrows(), self.b.nrows());
        let mut y = vec![ZERO; na * nb];
        for i in 0..na {
            for k in 0..na {
                let aik = self.a[(i, k)];
                if aik == ZERO {
                    continue;
                }
                for j in 0..nb {
                    y[i * nb + j] += aik * x[k * nb + j];
                }
            }
            for j in 0..nb {
                let mut s = ZERO;
                for l in 0..nb {
                    s += self.b[(j, l)] * x[i * nb + l];
                }
                y[i * nb + j] += s;
            }
        }
        y
    }

    pub fn to_dense(&self) -> CMat {
        let (na, nb) = (self.a.nrows(), self.b.nrows());
        let n = na * nb;
        let mut m = CMat::zeros(n, n);
        for i in 0..na {
            for k in 0..na {
                for j in 0..nb {
                    m[(i * nb + j, k * nb + j)] += self.a[(i, k)];
                }
            }
            for j in 0..nb {
                for l in 0..nb {
                    m[(i * nb + j, i * nb + l)] += self.b[(j, l)];
                }
            }
        }
        m
    }

    pub fn to_sparse(&self) -> Result<SparseColMat<usize, C64>> {
        let (na, nb) = (self.a.nrows(), self.b.nrows());
        let mut trip = Vec::new();
        for i in 0..na {
            for j in 0..nb {
                let r = i * nb + j;
                for k in 0..na {
                    let v = self.a[(i, k)];
                    if v != ZERO {
                        trip.push(Triplet::new(r, k * nb + j, v));
                    }
                }
                for l in 0..nb {
                    let v = self.b[(j, l)];
                    if v != ZERO {
                        trip.push(Triplet::new(r, i * nb + l, v));
                    }
                }
            }
        }
        SparseColMat::try_new_from_triplets(na * nb, na * nb, &trip)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))
    }

    pub fn factor(&self) -> Result<KronSchur> {
        let sa = schur(&self.a)?;
        let sb = schur(&self.b)?;
        Ok(KronSchur { sa, sb })
    }
}

/// Schur factors of both Kronecker-sum terms; solves shifted systems in
/// `O(na² nb + na nb²)` by a Bartels–Stewart sweep.
#[derive(Debug, Clone)]
pub struct KronSchur {
    sa: Schur,
    sb: Schur,
}

impl KronSchur {
    /// Largest modulus on the diagonals of the two triangular factors.
    pub fn diagonal_scale(&self) -> f64 {
        let d = |t: &CMat| (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0, f64::max);
        d(&self.sa.t) + d(&self.sb.t)
    }

    fn to_mat(&self, x: &[C64]) -> CMat {
        let (na, nb) = (self.sa.t.nrows(), self.sb.t.nrows());
        Mat::from_fn(na, nb, |i, j| x[i * nb + j])
    }

    fn transform_in(&self, f: &CMat) -> CMat {
        // G = Q^H F conj(P)
        let pbar = Mat::from_fn(self.sb.z.nrows(), self.sb.z.ncols(), |i, j| self.sb.z[(i, j)].conj());
        self.sa.z.adjoint() * f * &pbar
    }

    fn transform_out(&self, y: &CMat) -> Vec<C64> {
        // X = Q Y P^T
        let x = &self.sa.z * y * self.sb.z.transpose();
        let (na, nb) = (x.nrows(), x.ncols());
        let mut out = vec![ZERO; na * nb];
        for i in 0..na {
            for j in 0..nb {
                out[i * nb + j] = x[(i, j)];
            }
        }
        out
    }

    /// Solve `(A ⊗ I + I ⊗ B - λ) x = f`.
    pub fn solve(&self, lambda: C64, f: &[C64]) -> Vec<C64> {
        let g = self.transform_in(&self.to_mat(f));
        let (na, nb) = (g.nrows(), g.ncols());
        let s = &self.sb.t;
        let mut y = CMat::zeros(na, nb);
        for j in (0..nb).rev() {
            let mut rhs: Vec<C64> = (0..na).map(|i| g[(i, j)]).collect();
            for k in j + 1..nb {
                let sjk = s[(j, k)];
                if sjk != ZERO {
                    for i in 0..na {
                        rhs[i] -= sjk * y[(i, k)];
                    }
                }
            }
            upper_shift_solve(&self.sa.t, lambda - s[(j, j)], &mut rhs);
            for i in 0..na {
                y[(i, j)] = rhs[i];
            }
        }
        self.transform_out(&y)
    }

    /// Solve `(A ⊗ I + I ⊗ B - λ)^H x = f`.
    pub fn solve_adjoint(&self, lambda: C64, f: &[C64]) -> Vec<C64> {
        let g = self.transform_in(&self.to_mat(f));
        let (na, nb) = (g.nrows(), g.ncols());
        let s = &self.sb.t;
        let mut y = CMat::zeros(na, nb);
        for j in 0..nb {
            let mut rhs: Vec<C64> = (0..na).map(|i| g[(i, j)]).collect();
            for k in 0..j {
                let skj = s[(k, j)].conj();
                if skj != ZERO {
                    for i in 0..na {
                        rhs[i] -= skj * y[(i, k)];
                    }
                }
            }
            upper_shift_solve_adjoint(&self.sa.t, lambda - s[(j, j)], &mut rhs);
            for i in 0..na {
                y[(i, j)] = rhs[i];
            }
        }
        self.transform_out(&y)
    }
}

/// A factorization of `M - σ` usable for forward and adjoint solves.
pub enum ShiftedFactor {
    Dense(PartialPivLu<C64>),
    Sparse(faer::sparse::linalg::solvers::Lu<usize, C64>),
    Kron(std::sync::Arc<KronSchur>, C64),
}

impl ShiftedFactor {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        match self {
            ShiftedFactor::Dense(lu) => {
                let mut m = col_vec(b);
                lu.solve_in_place(&mut m);
                m.col_as_slice(0).to_vec()
            }
            ShiftedFactor::Sparse(lu) => {
                let mut m = col_vec(b);
                lu.solve_in_place(&mut m);
                m.col_as_slice(0).to_vec()
            }
            ShiftedFactor::Kron(k, s) => k.solve(*s, b),
        }
    }

    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        match self {
            ShiftedFactor::Dense(lu) => {
                let mut m = col_vec(b);
                lu.solve_adjoint_in_place(&mut m);
                m.col_as_slice(0).to_vec()
            }
            ShiftedFactor::Sparse(lu) => {
                let mut m = col_vec(b);
                lu.solve_adjoint_in_place(&mut m);
                m.col_as_slice(0).to_vec()
            }
            ShiftedFactor::Kron(k, s) => k.solve_adjoint(*s, b),
        }
    }
}

/// Deterministic, non-degenerate starting vector.
pub fn start_vector(n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n)
        .map(|i| {
            let t = i as f64 + 1.0;
            C64::new(1.0 + 0.37 * (1.7 * t).sin(), 0.21 * (0.61 * t).cos())
        })
        .collect();
    let nv = norm2(&v);
    v.into_iter().map(|x| x / nv).collect()
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator by
/// Lanczos with full reorthogonalization.
pub fn lanczos_max<F: FnMut(&[C64]) -> Vec<C64>>(n: usize, mut op: F, max_iter: usize, rel_tol: f64) -> f64 {
    let m = max_iter.min(n).max(1);
    let mut basis: Vec<Vec<C64>> = vec![start_vector(n)];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev = f64::NAN;
    let mut stable = 0;
    for k in 0..m {
        let mut w = op(&basis[k]);
        let a = dotc(&basis[k], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = dotc(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm2(&w);
        let theta = tridiag_max(&alpha, &beta);
        if theta.is_finite() && prev.is_finite() && (theta - prev).abs() <= rel_tol * theta.abs() {
            stable += 1;
            if stable >= 2 {
                return theta;
            }
        } else {
            stable = 0;
        }
        prev = theta;
        if b <= 1e-14 * theta.abs().max(1e-300) || k + 1 == m {
            return theta;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    prev
}

fn tridiag_max(alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len();
    let t = Mat::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    t.self_adjoint_eigenvalues(Side::Lower)
        .ok()
        .and_then(|v| v.last().copied())
        .unwrap_or(f64::NAN)
}

/// Operator 2-norm of a dense matrix.
pub fn spectral_norm(a: &CMat) -> f64 {
    let ah = conj_transpose(a);
    let v = lanczos_max(a.ncols(), |x| matvec(&ah, &matvec(a, x)), 80, 1e-13);
    v.max(0.0).sqrt()
}

/// Smallest singular value of the matrix behind a shifted factorization.
pub fn sigma_min(factor: &ShiftedFactor, n: usize, rel_tol: f64) -> f64 {
    let v = lanczos_max(n, |x| factor.solve(&factor.solve_adjoint(x)), 80, rel_tol);
    1.0 / v.max(1e-300).sqrt()
}

#[allow(clippy::excessive_precision)]
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let theta13 = 5.371920351148152;
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("matrix exponential of a non-finite matrix".into()));
    }
    let s = if norm > theta13 { (norm / theta13).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(s);
    let a1 = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let ident = identity(n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = PADE13;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> CMat {
        Mat::from_fn(n, n, |i, j| {
            a6[(i, j)] * c6 + a4[(i, j)] * c4 + a2[(i, j)] * c2 + ident[(i, j)] * c0
        })
    };
    let inner_u = &a6 * &lin(b[13], b[11], b[9], 0.0);
    let u_poly = Mat::from_fn(n, n, |i, j| inner_u[(i, j)]) + lin(b[7], b[5], b[3], b[1]);
    let u = &a1 * &u_poly;
    let inner_v = &a6 * &lin(b[12], b[10], b[8], 0.0);
    let v = inner_v + lin(b[6], b[4], b[2], b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let lu = q.partial_piv_lu();
    let mut r = lu.solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    for j in 0..n {
        if r.col_as_slice(j).iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::Numerical("matrix exponential overflowed".into()));
        }
    }
    Ok(r)
}

/// One converged eigenpair with its residual recomputed from the original operator.
#[derive(Debug, Clone)]
pub struct RitzPair {
    pub lambda: C64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Shift-invert Arnoldi: the `k` eigenvalues nearest `sigma`.
///
/// `solve` applies `(A - σ)^{-1}`; `apply` applies `A` and is used only for
/// residual certificates and refinement.
pub fn shift_invert_arnoldi<S, A>(
    n: usize,
    solve: S,
    apply: A,
    sigma: C64,
    k: usize,
    tol: f64,
    max_restarts: usize,
) -> Result<(Vec<RitzPair>, usize)>
where
    S: Fn(&[C64]) -> Vec<C64>,
    A: Fn(&[C64]) -> Vec<C64>,
{
    let k = k.min(n);
    let m = (2 * k + 20).max(30).min(n);
    let mut v0 = start_vector(n);
    let mut best: Vec<RitzPair> = Vec::new();
    let mut iterations = 0;
    for _restart in 0..=max_restarts {
        let mut basis: Vec<Vec<C64>> = vec![v0.clone()];
        let mut h = CMat::zeros(m + 1, m);
        let mut size = m;
        for j in 0..m {
            iterations += 1;
            let mut w = solve(&basis[j]);
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dotc(q, &w);
                    h[(i, j)] += c;
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = norm2(&w);
            h[(j + 1, j)] = C64::new(b, 0.0);
            if b < 1e-13 {
                size = j + 1;
                break;
            }
            basis.push(w.into_iter().map(|x| x / b).collect());
        }
        let hm = Mat::from_fn(size, size, |i, j| h[(i, j)]);
        let eig = hm
            .eigen()
            .map_err(|e| Error::Numerical(format!("Ritz eigenproblem failed: {e:?}")))?;
        let mut ritz: Vec<(C64, Vec<C64>)> = (0..size)
            .map(|i| {
                let theta = eig.S()[i];
                let y: Vec<C64> = (0..size).map(|r| eig.U()[(r, i)]).collect();
                (theta, y)
            })
            .collect();
        ritz.sort_by(|a, b| b.0.norm().partial_cmp(&a.0.norm()).unwrap_or(std::cmp::Ordering::Equal));
        let mut pairs = Vec::new();
        for (theta, y) in ritz.iter().take(k) {
            if theta.norm() == 0.0 {
                continue;
            }
            let mut x = vec![ZERO; n];
            for (c, q) in y.iter().zip(&basis) {
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi += c * qi;
                }
            }
            // one step of inverse iteration sharpens the vector
            let mut x = solve(&x);
            let nx = norm2(&x);
            for xi in x.iter_mut() {
                *xi /= nx;
            }
            let ax = apply(&x);
            let lambda = dotc(&x, &ax);
            let res: Vec<C64> = ax.iter().zip(&x).map(|(a, b)| a - lambda * b).collect();
            pairs.push(RitzPair { lambda, vector: x, residual: norm2(&res) });
        }
        let converged = pairs.iter().filter(|p| p.residual <= tol * p.lambda.norm().max(1.0)).count();
        best = pairs;
        if converged >= k {
            break;
        }
        let mut next = vec![ZERO; n];
        for p in best.iter().filter(|p| p.residual > tol * p.lambda.norm().max(1.0)) {
            for (a, b) in next.iter_mut().zip(&p.vector) {
                *a += b;
            }
        }
        for p in &best {
            for (a, b) in next.iter_mut().zip(&p.vector) {
                *a += b * 0.1;
            }
        }
        let nn = norm2(&next);
        if nn == 0.0 {
            break;
        }
        v0 = next.into_iter().map(|x| x / nn).collect();
    }
    let _ = sigma;
    Ok((best, iterations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> CMat {
        Mat::from_fn(n, n, |i, j| {
            let t = (i * 7 + j * 13) as f64;
            C64::new((0.3 * t).sin() + if i == j { 3.0 } else { 0.0 }, (0.17 * t).cos())
        })
    }

    fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
        let mut m = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    #[test]
    fn schur_reconstructs_and_is_triangular() {
        let a = test_matrix(40);
        let s = schur(&a).unwrap();
        let rec = &s.z * &s.t * s.z.adjoint();
        assert!(max_abs_diff(&rec, &a) < 1e-11 * frobenius(&a));
        let ztz = s.z.adjoint() * &s.z;
        assert!(max_abs_diff(&ztz, &identity(40)) < 1e-12);
        for j in 0..40 {
            for i in j + 1..40 {
                assert_eq!(s.t[(i, j)], ZERO);
            }
        }
        let mut ev: Vec<C64> = a.eigenvalues().unwrap();
        let mut diag: Vec<C64> = (0..40).map(|i| s.t[(i, i)]).collect();
        let key = |z: &C64| (z.re * 1e6).round() * 1e7 + z.im;
        ev.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        diag.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (x, y) in ev.iter().zip(&diag) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn kronecker_solves_match_dense() {
        let a = test_matrix(7);
        let b = Mat::from_fn(5, 5, |i, j| test_matrix(5)[(i, j)] * 0.5);
        let ks = KroneckerSum { a, b };
        let dense = ks.to_dense();
        let f = start_vector(35);
        let lambda = C64::new(0.3, -0.2);
        let fac = ks.factor().unwrap();
        let x = fac.solve(lambda, &f);
        let mut r = matvec(&dense, &x);
        for (ri, (xi, fi)) in r.iter_mut().zip(x.iter().zip(&f)) {
            *ri -= lambda * xi + fi;
        }
        assert!(norm2(&r) < 1e-12);
        let xa = fac.solve_adjoint(lambda, &f);
        let dh = conj_transpose(&dense);
        let mut r = matvec(&dh, &xa);
        for (ri, (xi, fi)) in r.iter_mut().zip(xa.iter().zip(&f)) {
            *ri -= lambda.conj() * xi + fi;
        }
        assert!(norm2(&r) < 1e-12);
        let y = ks.apply(&f);
        let yd = matvec(&dense, &f);
        assert!(norm2(&y.iter().zip(&yd).map(|(p, q)| p - q).collect::<Vec<_>>()) < 1e-13);
    }

    #[test]
    fn expm_on_normal_matrix_matches_eigendecomposition() {
        // unitary similarity of a diagonal matrix
        let n = 12;
        let q = schur(&test_matrix(n)).unwrap().z;
        let d: Vec<C64> = (0..n).map(|i| C64::new(-(i as f64) * 1.3, 0.7 * i as f64)).collect();
        let a = &q * Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { ZERO }) * q.adjoint();
        let e = expm(&a).unwrap();
        let expect = &q * Mat::from_fn(n, n, |i, j| if i == j { d[i].exp() } else { ZERO }) * q.adjoint();
        assert!(max_abs_diff(&e, &expect) < 1e-12);
    }

    #[test]
    fn expm_of_nilpotent_is_polynomial() {
        let a = Mat::from_fn(3, 3, |i, j| if j == i + 1 { C64::new(40.0, 0.0) } else { ZERO });
        let e = expm(&a).unwrap();
        assert!((e[(0, 2)] - C64::new(800.0, 0.0)).norm() < 1e-9);
        assert!((e[(0, 0)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn norms_and_sigma_min() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { if i == 0 { ONE } else { C64::new(0.0, 2.0) } } else { ZERO });
        assert!((spectral_norm(&a) - 2.0).abs() < 1e-12);
        let fac = ShiftedFactor::Dense(a.partial_piv_lu());
        assert!((sigma_min(&fac, 2, 1e-12) - 1.0).abs() < 1e-12);
        let m = test_matrix(30);
        let sv = m.singular_values().unwrap();
        assert!((spectral_norm(&m) - sv[0]).abs() < 1e-10 * sv[0]);
        let fac = ShiftedFactor::Dense(m.partial_piv_lu());
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((sigma_min(&fac, 30, 1e-13) - smin).abs() < 1e-8 * smin);
    }

    #[test]
    fn arnoldi_finds_eigenvalues_nearest_shift() {
        let n = 60;
        let a = test_matrix(n);
        let sigma = C64::new(3.1, 0.2);
        let shifted = Mat::from_fn(n, n, |i, j| a[(i, j)] - if i == j { sigma } else { ZERO });
        let fac = ShiftedFactor::Dense(shifted.partial_piv_lu());
        let (pairs, _) = shift_invert_arnoldi(n, |x| fac.solve(x), |x| matvec(&a, x), sigma, 3, 1e-10, 10).unwrap();
        let mut ev = a.eigenvalues().unwrap();
        ev.sort_by(|x, y| (x - sigma).norm().partial_cmp(&(y - sigma).norm()).unwrap());
        for p in &pairs {
            assert!(p.residual < 1e-10);
            assert!(ev[..3].iter().any(|e| (e - p.lambda).norm() < 1e-9));
        }
    }
}
