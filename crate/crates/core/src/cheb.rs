//! Chebyshev interpolation of matrix functions on a real interval and the
//! colleague-matrix linearization of the interpolant.

use std::f64::consts::PI;

use serde_json::{json, Value};

use crate::counting::Contour;
use crate::error::{Error, Result};
use crate::grid::{self, Grid, RegionField};
use crate::linalg::{self, c64, CMat, C64};
use crate::linear::{self, ClusterCount, Disk};
use crate::matfun::{matrix_json, MatFun, ScalarTerm};

/// `Q(x) = sum_j A_j T_j(x)` with `z = mid + half x`.
#[derive(Clone, Debug)]
pub struct ChebApprox {
    pub z_min: f64,
    pub z_max: f64,
    pub coeffs: Vec<CMat>,
}

impl ChebApprox {
    /// Interpolates `f` at the `degree + 1` points `cos(pi k / degree)`.
    pub fn from_fn<F>(f: F, dim: usize, z_min: f64, z_max: f64, degree: usize) -> Result<Self>
    where
        F: Fn(C64) -> Result<CMat>,
    {
        if degree == 0 {
            return Err(Error::InvalidArgument("degree must be at least 1".into()));
        }
        if !(z_min < z_max) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(Error::InvalidArgument(format!("degenerate interval [{z_min}, {z_max}]")));
        }
        let n = degree;
        let mid = 0.5 * (z_min + z_max);
        let half = 0.5 * (z_max - z_min);
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let x = (PI * k as f64 / n as f64).cos();
            let v = f(c64(mid + half * x, 0.0))?;
            if v.nrows() != dim || v.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.nrows(), context: "sampled matrix".into() });
            }
            samples.push(v);
        }
        // A_j = (2/n) sum'' f(x_k) cos(pi j k / n), halved at j = 0, n
        let mut coeffs = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let mut a = CMat::zeros(dim, dim);
            for (k, s) in samples.iter().enumerate() {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                let c = (PI * ((j * k) % (2 * n)) as f64 / n as f64).cos();
                a += s * c64(w * c, 0.0);
            }
            let scale = if j == 0 || j == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
            coeffs.push(a * c64(scale, 0.0));
        }
        Ok(ChebApprox { z_min, z_max, coeffs })
    }

    pub fn from_matfun(t: &MatFun, z_min: f64, z_max: f64, degree: usize) -> Result<Self> {
        Self::from_fn(|z| t.eval(z), t.dim(), z_min, z_max, degree)
    }

    pub fn from_scalar(s: &ScalarTerm, z_min: f64, z_max: f64, degree: usize) -> Result<Self> {
        Self::from_fn(|z| Ok(CMat::from_element(1, 1, s.eval(z)?)), 1, z_min, z_max, degree)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn to_x(&self, z: C64) -> C64 {
        (z - 0.5 * (self.z_min + self.z_max)) / (0.5 * (self.z_max - self.z_min))
    }

    pub fn to_z(&self, x: C64) -> C64 {
        x * (0.5 * (self.z_max - self.z_min)) + 0.5 * (self.z_min + self.z_max)
    }

    /// `|dz/dx|`.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.z_max - self.z_min)
    }

    /// Clenshaw evaluation of `Q` at `x`.
    pub fn eval_x(&self, x: C64) -> CMat {
        let m = self.dim();
        let mut b1 = CMat::zeros(m, m);
        let mut b2 = CMat::zeros(m, m);
        for a in self.coeffs.iter().skip(1).rev() {
            let b0 = a + &b1 * (x * 2.0) - &b2;
            b2 = b1;
            b1 = b0;
        }
        &self.coeffs[0] + &b1 * x - b2
    }

    pub fn eval(&self, z: C64) -> CMat {
        self.eval_x(self.to_x(z))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "interval": [self.z_min, self.z_max],
            "degree": self.degree(),
            "coefficients": self.coeffs.iter().map(matrix_json).collect::<Vec<_>>(),
        })
    }
}

/// `max_j ||A_j||_2 / sigma_min(A_n)`: the condition number of `A_n` measured
/// against the coefficient scale, so a numerically vanishing leading
/// coefficient counts as ill-conditioned.
pub fn leading_condition(ch: &ChebApprox) -> f64 {
    let smin = linalg::sigma_min(&ch.coeffs[ch.degree()]);
    let scale = ch.coeffs.iter().map(linalg::norm2).fold(0.0, f64::max);
    if smin > 0.0 {
        scale / smin
    } else {
        f64::INFINITY
    }
}

/// Block colleague matrix of `Q` (size `n m` for degree `n`, dimension `m`),
/// with `det(A_n^{-1} Q(x)) = (-1)^{nm} 2^{(n-1)m} det(C - xI)`.
pub fn colleague_matrix(ch: &ChebApprox) -> Result<CMat> {
    let n = ch.degree();
    let m = ch.dim();
    let an = &ch.coeffs[n];
    let cond = leading_condition(ch);
    if !(cond <= 1e12) {
        return Err(Error::IllConditionedLeadingCoeff(cond));
    }
    let an_inv = linalg::inverse(an).ok_or(Error::IllConditionedLeadingCoeff(f64::INFINITY))?;
    if n == 1 {
        return Ok(-(&an_inv * &ch.coeffs[0]));
    }
    let eye = linalg::identity(m);
    let half = c64(0.5, 0.0);
    let mut c = CMat::zeros(n * m, n * m);
    c.view_mut((0, m), (m, m)).copy_from(&eye);
    for j in 1..n - 1 {
        c.view_mut((j * m, (j - 1) * m), (m, m)).copy_from(&(&eye * half));
        c.view_mut((j * m, (j + 1) * m), (m, m)).copy_from(&(&eye * half));
    }
    let last = (n - 1) * m;
    for j in 0..n {
        let mut blk = -(&an_inv * &ch.coeffs[j]) * half;
        if j == n - 2 {
            blk += &eye * half;
        }
        c.view_mut((last, j * m), (m, m)).copy_from(&blk);
    }
    Ok(c)
}

#[derive(Clone, Debug)]
pub struct ColleagueSystem {
    pub c: CMat,
    /// Eigenvector basis of `C` (balancing folded in), `S^{-1} C S = D_C`.
    pub s: CMat,
    pub s_inv: CMat,
    /// Eigenvalues of `C` in the rescaled variable `x`.
    pub eigenvalues: Vec<C64>,
    /// Perturbation radii per eigenvalue (absolute row or column sums of `S^{-1} E_0 S`).
    pub rho: Vec<f64>,
    pub column_sums: bool,
    pub balancing: Vec<f64>,
    pub leading_cond: f64,
    pub residual: f64,
}

/// Linearizes `ch`, balances and diagonalizes `C`, and computes the radii for
/// a remainder multiplying `b_coeff` (the `E_0` block `A_n^{-1} b_coeff / 2` in
/// the last block row, first block column).
pub fn colleague(ch: &ChebApprox, b_coeff: &CMat, column_sums: bool) -> Result<ColleagueSystem> {
    let m = ch.dim();
    if b_coeff.nrows() != m || b_coeff.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b_coeff.nrows(), context: "remainder coefficient".into() });
    }
    let c = colleague_matrix(ch)?;
    let n = ch.degree();
    let leading_cond = leading_condition(ch);
    let (bal, d) = linalg::balance(&c);
    let (eigenvalues, v) = linalg::eig(&bal)?;
    let dmat = CMat::from_diagonal(&linalg::CVec::from_iterator(d.len(), d.iter().map(|&x| c64(x, 0.0))));
    let s = dmat * v;
    let s_inv = linalg::inverse(&s).ok_or_else(|| Error::DefectiveColleague(f64::INFINITY))?;
    let dc = CMat::from_diagonal(&linalg::CVec::from_vec(eigenvalues.clone()));
    let residual = linalg::norm_fro(&(&s_inv * &c * &s - &dc)) / linalg::norm_fro(&c).max(f64::MIN_POSITIVE);
    if !(residual <= 1e-8) {
        return Err(Error::DefectiveColleague(residual));
    }
    let an_inv = linalg::inverse(&ch.coeffs[n]).ok_or(Error::IllConditionedLeadingCoeff(f64::INFINITY))?;
    let mut e0 = CMat::zeros(n * m, n * m);
    e0.view_mut(((n - 1) * m, 0), (m, m)).copy_from(&(an_inv * b_coeff * c64(0.5, 0.0)));
    let p = &s_inv * e0 * &s;
    let rho = (0..n * m)
        .map(|j| {
            if column_sums {
                p.column(j).iter().map(|z| z.norm()).sum()
            } else {
                p.row(j).iter().map(|z| z.norm()).sum()
            }
        })
        .collect();
    Ok(ColleagueSystem { c, s, s_inv, eigenvalues, rho, column_sums, balancing: d, leading_cond, residual })
}

impl ColleagueSystem {
    /// Eigenvalues mapped back to `z`.
    pub fn z_eigenvalues(&self, ch: &ChebApprox) -> Vec<C64> {
        self.eigenvalues.iter().map(|&x| ch.to_z(x)).collect()
    }

    /// Disks `B(z(lambda_j), eps rho_j |dz/dx|)`.
    pub fn disks(&self, ch: &ChebApprox, eps: f64) -> Result<Vec<Disk>> {
        self.eigenvalues
            .iter()
            .zip(&self.rho)
            .enumerate()
            .map(|(j, (&x, &r))| Disk::new(ch.to_z(x), eps * r * ch.half_width(), format!("colleague {j}")))
            .collect()
    }
}

/// Cluster count with the number of colleague eigenvalues in the same circle.
#[derive(Clone, Debug)]
pub struct CertifiedCluster {
    pub cluster: ClusterCount,
    pub colleague_inside: usize,
}

#[derive(Clone, Debug)]
pub struct EpsDisks {
    /// `|r(z)|` with `r = exact - q`.
    pub field: RegionField,
    pub disks: Vec<Disk>,
    /// Per disk: closed disk lies in `{|r| < eps}`.
    pub inside: Vec<bool>,
    pub certified: Vec<CertifiedCluster>,
}

/// Points on the boundary of a disk used to test `|r| < eps` (by the maximum
/// principle the boundary maximum bounds the interior).
const BOUNDARY_SAMPLES: usize = 64;

fn boundary_max(r: &impl Fn(C64) -> Result<C64>, center: C64, radius: f64) -> Result<f64> {
    let mut m = r(center)?.norm();
    for k in 0..BOUNDARY_SAMPLES {
        let th = 2.0 * PI * k as f64 / BOUNDARY_SAMPLES as f64;
        m = m.max(r(center + C64::from_polar(radius, th))?.norm());
    }
    Ok(m)
}

/// Remainder field and certified disk clusters for `T` whose scalar part
/// `exact` is replaced by its interpolant on the same interval and degree.
pub fn eps_disks(cs: &ColleagueSystem, ch: &ChebApprox, exact: &ScalarTerm, eps: f64, grid: &Grid, t: &MatFun) -> Result<EpsDisks> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let q = ChebApprox::from_scalar(exact, ch.z_min, ch.z_max, ch.degree())?;
    let r = |z: C64| -> Result<C64> { Ok(exact.eval(z)? - q.eval(z)[(0, 0)]) };
    let field = grid::custom_field(grid, &exact.natural_domain(), "remainder", |z| r(z).ok().map(|v| v.norm()));
    let disks = cs.disks(ch, eps)?;
    let inside = disks
        .iter()
        .map(|d| boundary_max(&r, d.center, d.radius).map(|v| v < eps))
        .collect::<Result<Vec<bool>>>()?;
    let mut certified = Vec::new();
    let zs = cs.z_eigenvalues(ch);
    for members in linear::disk_clusters(&disks) {
        if !members.iter().all(|&i| inside[i]) {
            continue;
        }
        let sub: Vec<Disk> = members.iter().map(|&i| disks[i].clone()).collect();
        let center = sub.iter().map(|d| d.center).sum::<C64>() / sub.len() as f64;
        let reach = sub.iter().map(|d| (d.center - center).norm() + d.radius).fold(0.0, f64::max);
        let radius = reach * 1.05 + 1e-12 * (1.0 + center.norm());
        // the enclosing circle must itself stay in the region and away from other disks
        if boundary_max(&r, center, radius)? >= eps {
            continue;
        }
        let circle = Disk::new(center, radius, "")?;
        if disks.iter().enumerate().any(|(i, d)| !members.contains(&i) && circle.overlaps(d)) {
            continue;
        }
        let mut counts = linear::count_in_disk_union(t, &sub, None, 0.05, 1e-12 * (1.0 + center.norm()))?;
        let mut cluster = counts.remove(0);
        cluster.disks = members;
        let contour = Contour::circle(cluster.center, cluster.radius, linear::CLUSTER_CIRCLE_VERTICES)?;
        let colleague_inside = zs.iter().filter(|&&z| contour.winding_number(z) == 1).count();
        certified.push(CertifiedCluster { cluster, colleague_inside });
    }
    Ok(EpsDisks { field, disks, inside, certified })
}

/// Extent of the `alpha = 1` Gershgorin union of `t` along the real axis,
/// padded by 5% on each side.
pub fn gershgorin_real_interval(t: &MatFun, re_min: f64, re_max: f64, samples: usize) -> Result<Option<(f64, f64)>> {
    if samples < 2 || !(re_min < re_max) {
        return Err(Error::InvalidArgument("need at least two samples on a nondegenerate range".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..samples {
        let x = re_min + (re_max - re_min) * k as f64 / (samples - 1) as f64;
        let z = c64(x, 0.0);
        if !t.contains(z) {
            continue;
        }
        let (d, e) = t.diagonal_split(z)?;
        if grid::margins(&d, &e, 1.0).iter().any(|&g| g >= 0.0) {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if lo > hi {
        return Ok(None);
    }
    let pad = 0.05 * (hi - lo).max(f64::EPSILON * (1.0 + hi.abs()));
    Ok(Some((lo - pad, hi + pad)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[f64]) -> ScalarTerm {
        ScalarTerm::Polynomial(c.iter().map(|&x| c64(x, 0.0)).collect())
    }

    #[test]
    fn identity_and_t2_coefficients() {
        let ch = ChebApprox::from_scalar(&poly(&[0.0, 1.0]), -1.0, 1.0, 3).unwrap();
        let a: Vec<f64> = ch.coeffs.iter().map(|m| m[(0, 0)].re).collect();
        for (j, v) in a.iter().enumerate() {
            assert!((v - if j == 1 { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
        let t2 = ChebApprox::from_scalar(&poly(&[-1.0, 0.0, 2.0]), -1.0, 1.0, 2).unwrap();
        assert!((t2.coeffs[2][(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(t2.coeffs[0][(0, 0)].norm() < 1e-15 && t2.coeffs[1][(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn colleague_roots_of_t2_and_x() {
        let t2 = ChebApprox::from_scalar(&poly(&[-1.0, 0.0, 2.0]), -1.0, 1.0, 2).unwrap();
        let mut ev: Vec<f64> = linalg::eigenvalues(&colleague_matrix(&t2).unwrap()).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        let r = 0.5f64.sqrt();
        assert!((ev[0] + r).abs() < 1e-14 && (ev[1] - r).abs() < 1e-14);
        let x = ChebApprox::from_scalar(&poly(&[0.0, 1.0]), -1.0, 1.0, 1).unwrap();
        let c = colleague_matrix(&x).unwrap();
        assert_eq!(c.nrows(), 1);
        assert!(c[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn nodes_reproduced() {
        let f = ScalarTerm::ExpMinusOne(c64(1.0, 0.0));
        let ch = ChebApprox::from_scalar(&f, -2.0, 1.0, 9).unwrap();
        for k in 0..=9 {
            let x = (PI * k as f64 / 9.0).cos();
            let z = ch.to_z(c64(x, 0.0));
            let want = f.eval(z).unwrap();
            assert!((ch.eval(z)[(0, 0)] - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn leading_coefficient_guard() {
        let ch = ChebApprox::from_scalar(&poly(&[1.0, 2.0]), -1.0, 1.0, 3).unwrap();
        assert!(matches!(colleague_matrix(&ch), Err(Error::IllConditionedLeadingCoeff(_))));
    }
}
