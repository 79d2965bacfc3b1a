//! `T(z) = -zI + A0 + A1 e^{-z}` with `A0` a companion matrix and `A1` of
//! rank one.
//!
//! The built-in instance has `A0 = [[0,1,0],[0,0,1],[c0,c1,c2]]` and
//! `A1 = mu e3 v^T` with `v = (v1, v2, 1)`, so the nonzero eigenvalue of `A1`
//! is `mu = -13.3519`. Since `adj(A0 - zI) e3 = (1, z, z^2)`,
//! `det T(z) = -p(z) + mu e^{-z} q(z)` with `p` the characteristic polynomial
//! of `A0` and `q(z) = v1 + v2 z + z^2`. Requiring `p + mu q =
//! (z^2 + 9 pi^2)(z - r)` and a vanishing derivative at `3 pi i` gives
//! `v1 = 9 pi^2 - 18 pi^2 / mu`, `v2 = -2r / mu`: double eigenvalues at
//! `+-3 pi i` for every real `r` (here `r = -1`).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Deserialize;

use super::hadeler::{rows_to_matrix, Provenance};
use crate::error::{Error, Result};
use crate::grid::{self, Grid, RegionField};
use crate::linalg::{self, c64, to_complex, CMat, C64};
use crate::matfun::{Domain, MatFun, ScalarTerm, Term};

pub const SYNTHETIC_MU: f64 = -13.3519;
pub const SYNTHETIC_R: f64 = -1.0;

#[derive(Clone, Debug)]
pub struct DelayInstance {
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub provenance: Provenance,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DelayFile {
    #[serde(default)]
    nlevp: Option<String>,
    #[serde(rename = "A0")]
    a0: Vec<Vec<f64>>,
    #[serde(rename = "A1")]
    a1: Vec<Vec<f64>>,
}

fn is_companion(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    if !a.is_square() || n < 2 {
        return false;
    }
    let exact = |i: usize, j: usize, v: f64| (a[(i, j)] - v).abs() <= 1e-14;
    // which entries are free: last row, first row, last column, or first column
    let layouts: [&dyn Fn(usize, usize) -> Option<f64>; 4] = [
        &|i, j| (i < n - 1).then(|| if j == i + 1 { 1.0 } else { 0.0 }),
        &|i, j| (i > 0).then(|| if j + 1 == i { 1.0 } else { 0.0 }),
        &|i, j| (j < n - 1).then(|| if i == j + 1 { 1.0 } else { 0.0 }),
        &|i, j| (j > 0).then(|| if i + 1 == j { 1.0 } else { 0.0 }),
    ];
    layouts.iter().any(|want| (0..n).all(|i| (0..n).all(|j| want(i, j).is_none_or(|v| exact(i, j, v)))))
}

impl DelayInstance {
    pub fn synthetic() -> Self {
        let mu = SYNTHETIC_MU;
        let r = SYNTHETIC_R;
        let pi2 = PI * PI;
        let v = [9.0 * pi2 - 18.0 * pi2 / mu, -2.0 * r / mu, 1.0];
        // P(z) = (z^2 + 9 pi^2)(z - r) = z^3 - r z^2 + 9 pi^2 z - 9 pi^2 r
        let pc = [-9.0 * pi2 * r, 9.0 * pi2, -r];
        // p = P - mu q, p(z) = z^3 - c2 z^2 - c1 z - c0
        let c = [-(pc[0] - mu * v[0]), -(pc[1] - mu * v[1]), -(pc[2] - mu * v[2])];
        let a0 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, c[0], c[1], c[2]]);
        let a1 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, mu * v[0], mu * v[1], mu * v[2]]);
        DelayInstance { a0, a1, provenance: Provenance::Synthetic { seed: 0 } }
    }

    pub fn new(a0: DMatrix<f64>, a1: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        if !is_companion(&a0) {
            return Err(Error::NotCompanion("A0 does not have companion structure".into()));
        }
        if a1.shape() != a0.shape() {
            return Err(Error::DimensionMismatch { expected: a0.nrows(), found: a1.nrows(), context: "A1".into() });
        }
        let s = linalg::singular_values(&to_complex(&a1));
        if !(s[0] > 0.0) || s[1] > 1e-12 * s[0] {
            return Err(Error::NotRankOne(s.get(1).copied().unwrap_or(0.0)));
        }
        Ok(DelayInstance { a0, a1, provenance })
    }

    /// Reads `{"nlevp": "time_delay", "A0": [[..]], "A1": [[..]]}`.
    pub fn from_json(text: &str, path: &str) -> Result<Self> {
        let f: DelayFile = serde_json::from_str(text).map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if let Some(tag) = &f.nlevp {
            if tag != "time_delay" {
                return Err(Error::parse("nlevp", format!("expected \"time_delay\", found \"{tag}\"")));
            }
        }
        Self::new(rows_to_matrix(&f.a0, "A0")?, rows_to_matrix(&f.a1, "A1")?, Provenance::File(path.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }

    pub fn matfun(&self) -> MatFun {
        let n = self.dim();
        let terms = vec![
            Term::new(ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(-1.0, 0.0)]), CMat::identity(n, n)),
            Term::new(ScalarTerm::one(), to_complex(&self.a0)),
            Term::new(ScalarTerm::ExpScaled(c64(-1.0, 0.0)), to_complex(&self.a1)),
        ];
        MatFun::split(n, terms, Domain::WholePlane).expect("consistent dimensions")
    }
}

/// `V^{-1} A1 V = diag(mu_1, 0, ..)` and `E = V^{-1} A0 V` with diagonal
/// trailing block.
#[derive(Clone, Debug)]
pub struct DelayBasis {
    pub v: CMat,
    pub mu: C64,
    pub d1: Vec<C64>,
    pub e: CMat,
}

pub fn delay_basis(inst: &DelayInstance) -> Result<DelayBasis> {
    let n = inst.dim();
    let a1 = to_complex(&inst.a1);
    let a0 = to_complex(&inst.a0);
    let scale = linalg::norm2(&a1);
    let mu = a1.trace();
    if !(mu.norm() > 1e-12 * scale) {
        return Err(Error::NilpotentA1);
    }
    // A1 = s u w^*: the eigenvector is u, the kernel is spanned by w's complement
    let svd = a1.clone().svd(true, true);
    let k0 = (0..n).max_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).unwrap_or(0);
    let u = svd.u.as_ref().expect("u").column(k0).into_owned();
    let vt = svd.v_t.as_ref().expect("v_t");
    let kernel: Vec<usize> = (0..n).filter(|&i| i != k0).collect();
    let mut v = CMat::zeros(n, n);
    v.set_column(0, &u);
    for (c, &i) in kernel.iter().enumerate() {
        let col = linalg::CVec::from_iterator(n, vt.row(i).iter().map(|z| z.conj()));
        v.set_column(c + 1, &col);
    }
    // diagonalize the trailing block of V^{-1} A0 V inside the kernel
    let v_inv = linalg::inverse(&v).ok_or_else(|| Error::TrailingBlockDefective)?;
    let e = &v_inv * &a0 * &v;
    let m = n - 1;
    let e22 = e.view((1, 1), (m, m)).into_owned();
    let (_, w) = linalg::eig(&e22)?;
    if !(linalg::cond2(&w) < 1e10) {
        return Err(Error::TrailingBlockDefective);
    }
    let mut blk = linalg::identity(n);
    blk.view_mut((1, 1), (m, m)).copy_from(&w);
    let v = v * blk;
    let v_inv = linalg::inverse(&v).ok_or(Error::TrailingBlockDefective)?;
    let e = &v_inv * &a0 * &v;
    let d1m = &v_inv * &a1 * &v;
    let tol = 1e-10 * (linalg::norm_fro(&a0) + scale);
    for i in 1..n {
        for j in 1..n {
            if i != j && e[(i, j)].norm() > tol {
                return Err(Error::TrailingBlockDefective);
            }
        }
    }
    let mut d1 = vec![c64(0.0, 0.0); n];
    d1[0] = d1m[(0, 0)];
    let off = linalg::norm_fro(&(&d1m - CMat::from_diagonal(&linalg::CVec::from_vec(d1.clone()))));
    if off > 1e-10 * scale {
        return Err(Error::NotRankOne(off));
    }
    Ok(DelayBasis { v, mu: d1[0], d1, e })
}

impl DelayBasis {
    /// Column sums of `|E|`.
    pub fn rho(&self) -> Vec<f64> {
        self.e.column_iter().map(|c| c.iter().map(|z| z.norm()).sum()).collect()
    }

    /// `-zI + D1 e^{-z}`.
    pub fn diagonal_matfun(&self) -> MatFun {
        let n = self.d1.len();
        let d1 = CMat::from_diagonal(&linalg::CVec::from_vec(self.d1.clone()));
        let terms = vec![
            Term::new(ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(-1.0, 0.0)]), CMat::identity(n, n)),
            Term::new(ScalarTerm::ExpScaled(c64(-1.0, 0.0)), d1),
        ];
        MatFun::split(n, terms, Domain::WholePlane).expect("consistent dimensions")
    }

    pub fn e_matfun(&self) -> MatFun {
        let n = self.d1.len();
        MatFun::split(n, vec![Term::new(ScalarTerm::one(), self.e.clone())], Domain::WholePlane).expect("consistent dimensions")
    }

    /// `-zI + D1 e^{-z} + E`.
    pub fn matfun(&self) -> MatFun {
        self.diagonal_matfun().add(&self.e_matfun()).expect("same dimension")
    }

    /// Column Gershgorin field (`alpha = 0`) of the split `(-zI + D1 e^{-z}, E)`.
    pub fn gershgorin_field(&self, grid: &Grid) -> Result<RegionField> {
        grid::gershgorin_field_split(&self.diagonal_matfun(), &self.e_matfun(), grid, 0.0)
    }
}

/// Region `max_i (gamma_i |e^{-z}| - |d_i - z|) >= 0` where `d_i` are the
/// eigenvalues of `A0`, and `gamma_i` the row sums of `|V0^{-1} A1 V0|` in the
/// eigenbasis `V0` of `A0`.
pub fn delay_second_bound(inst: &DelayInstance, grid: &Grid) -> Result<RegionField> {
    let a0 = to_complex(&inst.a0);
    let (d, v0) = linalg::eig(&a0)?;
    let v0_inv = linalg::inverse(&v0).ok_or_else(|| Error::DefectiveMatrix("A0 is not diagonalizable".into()))?;
    if !(linalg::cond2(&v0) < 1e10) {
        return Err(Error::DefectiveMatrix("A0 eigenbasis is ill-conditioned".into()));
    }
    let eb = &v0_inv * to_complex(&inst.a1) * &v0;
    let gamma: Vec<f64> = eb.row_iter().map(|r| r.iter().map(|z| z.norm()).sum()).collect();
    Ok(grid::custom_field(grid, &Domain::WholePlane, "delay_second_bound", |z| {
        let ez = (-z).exp().norm();
        d.iter().zip(&gamma).map(|(&di, &g)| g * ez - (di - z).norm()).reduce(f64::max)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_structure() {
        let inst = DelayInstance::synthetic();
        let checked = DelayInstance::new(inst.a0.clone(), inst.a1.clone(), Provenance::Synthetic { seed: 0 }).unwrap();
        let b = delay_basis(&checked).unwrap();
        assert!((b.mu - SYNTHETIC_MU).norm() < 1e-10);
        // det T vanishes to second order at 3 pi i
        let t = inst.matfun();
        let z0 = c64(0.0, 3.0 * PI);
        let d0 = linalg::det(&t.eval(z0).unwrap()).norm();
        assert!(d0 < 1e-9, "{d0}");
        // halving the offset quarters |det|
        let dh = linalg::det(&t.eval(z0 + 1e-3).unwrap()).norm();
        let dh2 = linalg::det(&t.eval(z0 + 5e-4).unwrap()).norm();
        assert!((dh / dh2 - 4.0).abs() < 0.05, "{}", dh / dh2);
    }

    #[test]
    fn rank_and_companion_checks() {
        let a0 = DelayInstance::synthetic().a0;
        let a1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 0.0]));
        assert!(matches!(DelayInstance::new(a0.clone(), a1, Provenance::Synthetic { seed: 0 }), Err(Error::NotRankOne(_))));
        let mut bad = a0.clone();
        bad[(0, 0)] = 1.0;
        let a1 = DelayInstance::synthetic().a1;
        assert!(matches!(DelayInstance::new(bad, a1, Provenance::Synthetic { seed: 0 }), Err(Error::NotCompanion(_))));
    }

    #[test]
    fn nilpotent_rejected() {
        let a0 = DelayInstance::synthetic().a0;
        let a1 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let inst = DelayInstance::new(a0, a1, Provenance::Synthetic { seed: 0 }).unwrap();
        assert!(matches!(delay_basis(&inst), Err(Error::NilpotentA1)));
    }

    #[test]
    fn basis_identity_case() {
        let a0 = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 0.0, 4.0, 0.0, 0.0, 0.0, 5.0]);
        let a1 = DMatrix::from_row_slice(3, 3, &[-2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let inst = DelayInstance { a0, a1, provenance: Provenance::Synthetic { seed: 0 } };
        let b = delay_basis(&inst).unwrap();
        assert!((b.mu - c64(-2.0, 0.0)).norm() < 1e-14);
        // V is the identity up to unit scalings and the order of the kernel columns
        assert!((b.v[(0, 0)].norm() - 1.0).abs() < 1e-14);
        for j in 0..3 {
            let big = b.v.column(j).iter().filter(|z| (z.norm() - 1.0).abs() < 1e-14).count();
            let zero = b.v.column(j).iter().filter(|z| z.norm() < 1e-14).count();
            assert_eq!((big, zero), (1, 2));
        }
    }

    #[test]
    fn similarity_preserves_determinant_zeros() {
        let inst = DelayInstance::synthetic();
        let b = delay_basis(&inst).unwrap();
        let t = inst.matfun();
        let tt = b.matfun();
        let v_inv = linalg::inverse(&b.v).unwrap();
        for z in [c64(0.5, 1.0), c64(-1.0, 4.0)] {
            let lhs = &v_inv * t.eval(z).unwrap() * &b.v;
            assert!(linalg::norm_fro(&(lhs - tt.eval(z).unwrap())) < 1e-10 * linalg::norm_fro(&tt.eval(z).unwrap()));
        }
    }
}
