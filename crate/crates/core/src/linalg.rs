//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Smallest singular value. When it is tiny relative to the largest, the
/// SVD value loses relative accuracy, so `1 / ||m^{-1}||_2` is used instead.
pub fn sigma_min(m: &CMat) -> f64 {
    let s = singular_values(m);
    let (Some(&hi), Some(&lo)) = (s.first(), s.last()) else { return 0.0 };
    if m.is_square() && lo < 1e-6 * hi {
        if let Some(inv) = inverse(m) {
            let ni = norm2(&inv);
            if ni.is_finite() && ni > 0.0 {
                return 1.0 / ni;
            }
        }
    }
    lo
}

/// True when `m` is singular to working precision after scaling every row
/// to unit norm (a scaling that does not move the phase of `det m`).
pub fn numerically_singular(m: &CMat) -> bool {
    let mut e = m.clone();
    for mut r in e.row_iter_mut() {
        let n = r.norm();
        if n == 0.0 || !n.is_finite() {
            return true;
        }
        r /= C64::new(n, 0.0);
    }
    !(sigma_min(&e) > m.nrows() as f64 * f64::EPSILON * norm_fro(&e))
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn norm_fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest singular value with its left and right singular vectors,
/// so that `m * v = s * u`.
pub fn smallest_singular_triplet(m: &CMat) -> (f64, CVec, CVec) {
    let n = m.ncols();
    let svd = m.clone().svd(true, true);
    let s = &svd.singular_values;
    let mut k = 0;
    for i in 1..s.len() {
        if s[i] < s[k] {
            k = i;
        }
    }
    let u = svd.u.as_ref().expect("svd u").column(k).into_owned();
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let v = CVec::from_iterator(n, v_t.row(k).iter().map(|z| z.conj()));
    (s[k], u, v)
}

/// Determinant in polar form: `det = exp(log_abs) * phase`, `|phase| = 1`.
///
/// Accumulating per-pivot phases keeps large problems free of overflow.
#[derive(Clone, Copy, Debug)]
pub struct PolarDet {
    pub log_abs: f64,
    pub phase: C64,
    pub singular: bool,
}

pub fn det_polar(m: &CMat) -> PolarDet {
    let n = m.nrows();
    let lu = m.clone().lu();
    let u = lu.u();
    let mut log_abs = 0.0;
    let mut phase = C64::new(lu.p().determinant::<f64>(), 0.0);
    let mut singular = false;
    for i in 0..n {
        let d = u[(i, i)];
        let a = d.norm();
        if a == 0.0 || !a.is_finite() {
            singular = true;
            continue;
        }
        log_abs += a.ln();
        phase *= d / a;
        // keep the running product on the unit circle
        phase /= phase.norm();
    }
    PolarDet {
        log_abs: if singular { f64::NEG_INFINITY } else { log_abs },
        phase,
        singular,
    }
}

pub fn det(m: &CMat) -> C64 {
    let p = det_polar(m);
    if p.singular {
        C64::new(0.0, 0.0)
    } else {
        p.phase * p.log_abs.exp()
    }
}

pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

pub fn solve_vec(a: &CMat, b: &CVec) -> Option<CVec> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().lu().try_inverse()
}

pub fn cond2(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Eigenvalues and unit-norm right eigenvectors of a general complex matrix.
///
/// Uses the complex Schur form followed by back substitution on the
/// triangular factor.
pub fn eig(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NoConvergence("complex Schur decomposition".into()))?;
    let (q, t) = schur.unpack();
    let lambdas: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let tnorm = norm_fro(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut x = CMat::zeros(n, n);
    for k in 0..n {
        x[(k, k)] = C64::new(1.0, 0.0);
        let lk = t[(k, k)];
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * x[(j, k)];
            }
            let mut d = t[(i, i)] - lk;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            x[(i, k)] = -s / d;
        }
    }
    let mut v = q * x;
    for k in 0..n {
        let nrm = v.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for i in 0..n {
                v[(i, k)] /= nrm;
            }
        }
    }
    Ok((lambdas, v))
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NoConvergence("complex Schur decomposition".into()))?;
    let t = schur.unpack().1;
    Ok((0..m.nrows()).map(|i| t[(i, i)]).collect())
}

/// Diagonal similarity balancing (Parlett-Reinsch, radix 2).
///
/// Returns `(b, d)` with `b = D^{-1} m D` and `D = diag(d)`.
pub fn balance(m: &CMat) -> (CMat, Vec<f64>) {
    let n = m.nrows();
    let mut b = m.clone();
    let mut d = vec![1.0; n];
    let radix = 2.0f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].norm();
                    r += b[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            // column sum scales by f and row sum by 1/f: aim for f^2 ~ r / c
            let mut f = 1.0;
            let mut cc = c;
            while cc < r / radix {
                cc *= radix * radix;
                f *= radix;
            }
            while cc >= r * radix {
                cc /= radix * radix;
                f /= radix;
            }
            let cc2 = c * f;
            let rr2 = r / f;
            if (cc2 + rr2) < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                }
                for j in 0..n {
                    b[(j, i)] *= f;
                }
            }
        }
    }
    (b, d)
}

/// Finite eigenvalues of the pencil `K - lambda M` by shift-and-invert.
///
/// Eigenvalues `mu` of `(K - shift M)^{-1} M` map to `lambda = shift + 1/mu`;
/// those with `|mu|` below `inf_tol * max|mu|` are treated as infinite.
pub fn pencil_eigenvalues(k: &CMat, m: &CMat, shift: C64, inf_tol: f64) -> Result<Vec<C64>> {
    let a = k - m * shift;
    let lu = a.lu();
    let op = lu
        .solve(m)
        .ok_or_else(|| Error::InvalidArgument("pencil shift is an eigenvalue".into()))?;
    let mus = eigenvalues(&op)?;
    let mmax = mus.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(mus
        .into_iter()
        .filter(|mu| mu.norm() > inf_tol * mmax)
        .map(|mu| shift + mu.inv())
        .collect())
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                let jf = j as f64;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
