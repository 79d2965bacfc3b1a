//! Resonances of `-psi'' + V psi = lambda psi` on `(0, b)` with `psi(0) = 0`
//! and the outgoing condition `psi'(b) = i sqrt(lambda) psi(b)`, where `V`
//! is `V0` on `(a, b)` and zero elsewhere.
//!
//! The exact problem is the 6x6 shooting function built from transfer
//! matrices; the rational approximation is a linear pencil `K - lambda M`
//! whose leading 6x6 Schur complement approximates it.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::counting::{count_arg_det, Contour, CountCertificate, CountOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, C64};
use crate::matfun::{on_negative_ray, MatFun};
use crate::refine::{newton_bordered, EigenPair, NewtonOptions};
use crate::special::transfer::{transfer_matrix, transfer_matrix_dc};
use crate::special::zolotarev::{zolotarev_invsqrt, RationalInvSqrt};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResonanceParams {
    #[serde(rename = "V0")]
    pub v0: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for ResonanceParams {
    fn default() -> Self {
        ResonanceParams { v0: 5.0, a: 2.0, b: 3.0 }
    }
}

impl ResonanceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return Err(Error::InvalidArgument(format!("V0 must be finite and non-negative, got {}", self.v0)));
        }
        if !(self.a > 0.0 && self.b > self.a && self.b.is_finite()) {
            return Err(Error::InvalidArgument(format!("need 0 < a < b, got a = {}, b = {}", self.a, self.b)));
        }
        Ok(())
    }
}

fn put2(m: &mut CMat, r: usize, c: usize, b: &nalgebra::Matrix2<C64>) {
    for i in 0..2 {
        for j in 0..2 {
            m[(r + i, c + j)] = b[(i, j)];
        }
    }
}

/// The 6x6 shooting matrix acting on `(u(0), u(a), u(b))`, `u = (psi, psi')`.
pub fn shooting_matrix(p: &ResonanceParams, lambda: C64) -> Result<CMat> {
    if on_negative_ray(lambda) {
        return Err(Error::Domain(lambda));
    }
    let mut t = CMat::zeros(6, 6);
    put2(&mut t, 0, 0, &transfer_matrix(-lambda, p.a));
    put2(&mut t, 2, 2, &transfer_matrix(c64(p.v0, 0.0) - lambda, p.b - p.a));
    for i in 0..4 {
        t[(i, i + 2)] = c64(-1.0, 0.0);
    }
    t[(4, 0)] = c64(1.0, 0.0);
    t[(5, 4)] = c64(0.0, -1.0) * lambda.sqrt();
    t[(5, 5)] = c64(1.0, 0.0);
    Ok(t)
}

pub fn shooting_matrix_deriv(p: &ResonanceParams, lambda: C64) -> Result<CMat> {
    if on_negative_ray(lambda) {
        return Err(Error::Domain(lambda));
    }
    let mut t = CMat::zeros(6, 6);
    put2(&mut t, 0, 0, &-transfer_matrix_dc(-lambda, p.a));
    put2(&mut t, 2, 2, &-transfer_matrix_dc(c64(p.v0, 0.0) - lambda, p.b - p.a));
    t[(5, 4)] = c64(0.0, -0.5) / lambda.sqrt();
    Ok(t)
}

/// Discretization parameters for the rational approximation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceConfig {
    pub params: ResonanceParams,
    /// Chebyshev points per subinterval.
    pub n: usize,
    #[serde(rename = "N_Z")]
    pub n_z: usize,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        ResonanceConfig { params: ResonanceParams::default(), n: 40, n_z: 20, m: 0.1, big_m: 500.0 }
    }
}

impl ResonanceConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!("need at least 3 Chebyshev points, got {}", self.n)));
        }
        if self.n_z == 0 {
            return Err(Error::InvalidArgument("N_Z must be positive".into()));
        }
        Ok(())
    }
}

/// Chebyshev points `x_j = cos(pi j / (n-1))` and the differentiation matrix.
pub fn cheb_diff(n: usize) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let nn = n - 1;
    let x: Vec<f64> = (0..n).map(|j| (std::f64::consts::PI * j as f64 / nn as f64).cos()).collect();
    let c = |i: usize| -> f64 {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        if i == 0 || i == nn {
            2.0 * s
        } else {
            s
        }
    };
    let mut d = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Where each block lives in the pencil.
#[derive(Clone, Debug, Serialize)]
pub struct BlockMap {
    pub u_all: Range<usize>,
    pub psi_0a: Range<usize>,
    pub psi_ab: Range<usize>,
    pub zolotarev: Range<usize>,
}

#[derive(Clone, Debug)]
pub struct ResonancePencil {
    pub config: ResonanceConfig,
    pub k: CMat,
    pub m: CMat,
    pub blocks: BlockMap,
    pub rational: RationalInvSqrt,
}

impl ResonancePencil {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// `A(lambda) = K - lambda M`.
    pub fn matrix(&self, lambda: C64) -> CMat {
        &self.k - &self.m * lambda
    }

    /// The pencil as a matrix function (for Newton polishing and counting).
    pub fn matfun(&self) -> MatFun {
        MatFun::pencil(self.k.clone(), self.m.clone()).expect("square pencil")
    }

    /// Leading 6x6 Schur complement `A11 - A12 A22^{-1} A21`.
    pub fn schur(&self, lambda: C64) -> Result<CMat> {
        let a = self.matrix(lambda);
        let nd = self.dim();
        let a11 = a.view((0, 0), (6, 6)).into_owned();
        let a12 = a.view((0, 6), (6, nd - 6)).into_owned();
        let a21 = a.view((6, 0), (nd - 6, 6)).into_owned();
        let a22 = a.view((6, 6), (nd - 6, nd - 6)).into_owned();
        let x = linalg::solve(&a22, &a21).ok_or_else(|| Error::SingularJacobian(lambda))?;
        Ok(a11 - a12 * x)
    }

    /// Schur complement of the bordered rational block alone; approximates
    /// `-i sqrt(lambda)`.
    pub fn zolotarev_schur(&self, lambda: C64) -> Result<C64> {
        let z = self.blocks.zolotarev.clone();
        let a = self.matrix(lambda);
        let sub = a.view((z.start, z.start), (z.len(), z.len())).into_owned();
        let rhs = CMat::from_fn(z.len(), 1, |i, _| a[(z.start + i, 4)]);
        let x = linalg::solve(&sub, &rhs).ok_or_else(|| Error::SingularJacobian(lambda))?;
        let row: C64 = (0..z.len()).map(|j| a[(5, z.start + j)] * x[(j, 0)]).sum();
        Ok(-row)
    }

    /// Finite eigenvalues of the pencil (dense, shift-invert about `shift`).
    pub fn eigenvalues(&self, shift: C64) -> Result<Vec<C64>> {
        linalg::pencil_eigenvalues(&self.k, &self.m, shift, 1e-12)
    }
}

pub fn resonance_pencil(cfg: &ResonanceConfig) -> Result<ResonancePencil> {
    cfg.validate()?;
    let p = &cfg.params;
    let n = cfg.n;
    let rational = zolotarev_invsqrt(cfg.m, cfg.big_m, cfg.n_z)?;
    let o1 = 6;
    let o2 = 6 + n;
    let z0 = 6 + 2 * n;
    let dim = z0 + cfg.n_z + 1;
    let mut k = CMat::zeros(dim, dim);
    let mut m = CMat::zeros(dim, dim);
    let one = c64(1.0, 0.0);

    // constant part of the shooting matrix
    for i in 0..4 {
        k[(i, i + 2)] = -one;
    }
    k[(4, 0)] = one;
    k[(5, 5)] = one;

    let (_, dx) = cheb_diff(n);
    // (row block of T, input u columns, aux offset, interval length, potential)
    for (trow, ucol, o, len, v) in [(0, 0, o1, p.a, 0.0), (2, 2, o2, p.b - p.a, p.v0)] {
        // s = len (1 - x) / 2, so d/ds = -(2/len) d/dx and s_0 = 0, s_{n-1} = len
        let ds = dx.map(|e| e * (-2.0 / len));
        let d2 = &ds * &ds;
        for j in 0..n {
            // value and derivative at the right end feed the shooting rows
            k[(trow + 1, o + j)] = c64(ds[(n - 1, j)], 0.0);
            // value and derivative at the left end equal the incoming u
            k[(o + 1, o + j)] = c64(ds[(0, j)], 0.0);
        }
        k[(trow, o + n - 1)] = one;
        k[(o, o)] = one;
        k[(o, ucol)] = -one;
        k[(o + 1, ucol + 1)] = -one;
        for i in 1..n - 1 {
            for j in 0..n {
                k[(o + 1 + i, o + j)] = c64(-d2[(i, j)], 0.0);
            }
            k[(o + 1 + i, o + i)] += c64(v, 0.0);
            m[(o + 1 + i, o + i)] = one;
        }
    }

    // bordered block whose Schur complement is -i / r(lambda)
    k[(5, z0)] = c64(0.0, 1.0);
    k[(z0, 4)] = one;
    for (j, (&xi, &g)) in rational.poles.iter().zip(&rational.weights).enumerate() {
        let r = z0 + 1 + j;
        k[(z0, r)] = c64(g, 0.0);
        k[(r, z0)] = one;
        k[(r, r)] = c64(xi, 0.0);
        m[(r, r)] = one;
    }

    Ok(ResonancePencil {
        config: cfg.clone(),
        k,
        m,
        blocks: BlockMap { u_all: 0..6, psi_0a: o1..o1 + n, psi_ab: o2..o2 + n, zolotarev: z0..dim },
        rational,
    })
}

/// Default certification contour: ellipse with centre 252.9, semi-axes
/// 252.1 (real) and 120 (imaginary).
pub const DEFAULT_ELLIPSE: (f64, f64, f64, f64) = (252.9, 0.0, 252.1, 120.0);

pub fn default_contour() -> Result<Contour> {
    let (cx, cy, rx, ry) = DEFAULT_ELLIPSE;
    Contour::ellipse(c64(cx, cy), rx, ry, 512)
}

/// One certified eigenvalue: pencil value, refined value, and their distance.
#[derive(Clone, Debug, Serialize)]
pub struct ResonanceRow {
    pub pencil: [f64; 2],
    pub refined: [f64; 2],
    pub delta: f64,
    pub residual: f64,
    pub iters: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub config: ResonanceConfig,
    pub contour_id: String,
    pub eps: f64,
    pub pencil_dim: usize,
    pub finite_pencil_eigenvalues: usize,
    /// Sorted by increasing real part.
    pub rows: Vec<ResonanceRow>,
    /// Smallest `sigma_min(T)` over the guard samples on the contour.
    pub min_sigma_t: f64,
    pub count_t: CountCertificate,
    pub count_pencil: CountCertificate,
    pub pencil_enumerated: usize,
    pub counts_equal: bool,
    /// Largest `||T - T_hat||_2` over the guard samples.
    pub max_perturbation: f64,
    /// Largest `||T - T_hat||_2 / sigma_min(T)` over the guard samples.
    pub max_perturbation_ratio: f64,
    pub rational_error: f64,
}

/// Guard samples per contour edge.
const GUARD_POINTS_PER_EDGE: usize = 4;

/// Counts, refines, and certifies the resonances inside `contour`.
///
/// Fails with `GuardFailed` when `sigma_min(T) <= eps` somewhere on the
/// contour. Unequal counts are reported through `counts_equal`.
pub fn resonance_certify(cfg: &ResonanceConfig, eps: f64, contour: &Contour) -> Result<ResonanceReport> {
    let pencil = resonance_pencil(cfg)?;
    let t = MatFun::resonance(cfg.params);
    let pts = contour.sample_points(GUARD_POINTS_PER_EDGE);
    let samples: Vec<Result<(f64, f64, C64)>> = pts
        .par_iter()
        .map(|&z| {
            let tz = t.eval(z)?;
            let s = linalg::sigma_min(&tz);
            let pert = linalg::norm2(&(tz - pencil.schur(z)?));
            Ok((s, pert, z))
        })
        .collect();
    let mut min_sigma = f64::INFINITY;
    let mut worst = c64(0.0, 0.0);
    let mut max_pert: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for r in samples {
        let (s, p, z) = r?;
        if s < min_sigma {
            min_sigma = s;
            worst = z;
        }
        max_pert = max_pert.max(p);
        max_ratio = max_ratio.max(p / s);
    }
    if !(min_sigma > eps) {
        return Err(Error::GuardFailed { z: worst, sigma: min_sigma, threshold: eps });
    }

    let opts = CountOptions::default();
    let count_t = count_arg_det(&t, contour, &opts)?;
    let pencil_fun = pencil.matfun();
    let count_pencil = count_arg_det(&pencil_fun, contour, &opts)?;

    let eigs = pencil.eigenvalues(c64(100.0, 10.0))?;
    let finite = eigs.len();
    let inside: Vec<C64> = eigs.into_iter().filter(|&z| contour.winding_number(z) == 1).collect();
    let newton = NewtonOptions::default();
    let polished: Vec<Result<(C64, EigenPair)>> = inside
        .par_iter()
        .map(|&z| {
            let p = newton_bordered(&pencil_fun, z, None, &newton)?;
            let r = newton_bordered(&t, p.lambda, None, &newton)?;
            Ok((p.lambda, r))
        })
        .collect();
    let mut rows = Vec::with_capacity(polished.len());
    for r in polished {
        let (pz, e) = r?;
        rows.push(ResonanceRow {
            pencil: [pz.re, pz.im],
            refined: [e.lambda.re, e.lambda.im],
            delta: (e.lambda - pz).norm(),
            residual: e.residual,
            iters: e.iterations,
        });
    }
    rows.sort_by(|a, b| a.pencil[0].total_cmp(&b.pencil[0]));
    let enumerated = rows.len();
    let counts_equal = count_t.count == count_pencil.count && count_pencil.count == enumerated as i64;
    Ok(ResonanceReport {
        config: cfg.clone(),
        contour_id: contour.id().to_string(),
        eps,
        pencil_dim: pencil.dim(),
        finite_pencil_eigenvalues: finite,
        rows,
        min_sigma_t: min_sigma,
        count_t,
        count_pencil,
        pencil_enumerated: enumerated,
        counts_equal,
        max_perturbation: max_pert,
        max_perturbation_ratio: max_ratio,
        rational_error: pencil.rational.recorded_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_identity_rows() {
        let p = ResonanceParams::default();
        let lambda = c64(1.3, -0.4);
        let t = shooting_matrix(&p, lambda).unwrap();
        let u0 = nalgebra::Vector2::new(c64(0.0, 0.0), c64(1.0, 0.0));
        let ua = transfer_matrix(-lambda, p.a) * u0;
        let ub = transfer_matrix(c64(p.v0, 0.0) - lambda, p.b - p.a) * ua;
        let u = linalg::CVec::from_vec(vec![u0[0], u0[1], ua[0], ua[1], ub[0], ub[1]]);
        let r = &t * &u;
        for i in 0..5 {
            assert!(r[i].norm() < 1e-14, "row {i}: {}", r[i]);
        }
    }

    #[test]
    fn rejects_cut() {
        let p = ResonanceParams::default();
        assert!(matches!(shooting_matrix(&p, c64(-1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn cheb_diff_exact_on_cubics() {
        let (x, d) = cheb_diff(6);
        for i in 0..6 {
            let deriv: f64 = (0..6).map(|j| d[(i, j)] * x[j].powi(3)).sum();
            assert!((deriv - 3.0 * x[i] * x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn pencil_dimensions() {
        let cfg = ResonanceConfig::default();
        let pen = resonance_pencil(&cfg).unwrap();
        assert_eq!(pen.dim(), 6 + 2 * 40 + 21);
        assert_eq!(pen.blocks.zolotarev.len(), 21);
        // M vanishes on the first six rows and on the boundary rows of each block
        for r in [0, 5, 6, 7, 46, 47, 86] {
            assert!(pen.m.row(r).iter().all(|e| e.norm() == 0.0));
        }
    }
}
