//! Comparison against linear problems: pencil pseudospectra, uniform
//! Gershgorin disks and nonlinear Bauer-Fike disks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::counting::{count_arg_det, Contour, CountCertificate, CountOptions};
use crate::error::{Error, Result};
use crate::grid::{self, Grid, RegionField};
use crate::linalg::{self, c64, CMat, C64};
use crate::matfun::MatFun;

#[derive(Clone, Debug, PartialEq)]
pub struct Disk {
    pub center: C64,
    pub radius: f64,
    pub label: String,
}

impl Disk {
    pub fn new(center: C64, radius: f64, label: impl Into<String>) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid disk: center {center}, radius {radius}")));
        }
        Ok(Disk { center, radius, label: label.into() })
    }

    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() <= self.radius
    }

    pub fn overlaps(&self, other: &Disk) -> bool {
        (self.center - other.center).norm() <= self.radius + other.radius
    }

    pub fn to_json(&self) -> Value {
        json!({ "center": [self.center.re, self.center.im], "radius": self.radius, "label": self.label })
    }
}

pub fn disks_json(disks: &[Disk]) -> Value {
    Value::Array(disks.iter().map(Disk::to_json).collect())
}

pub fn in_union(disks: &[Disk], z: C64) -> bool {
    disks.iter().any(|d| d.contains(z))
}

/// `sigma_min(A - zB)` on the grid.
pub fn pencil_pseudospectrum_field(a: &CMat, b: &CMat, grid: &Grid) -> Result<RegionField> {
    let t = MatFun::pencil(a.clone(), b.clone())?;
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let scale = 1.0 + grid.re_max.abs().max(grid.re_min.abs()).max(grid.im_max.abs()).max(grid.im_min.abs());
    let regular = (0..=n).any(|_| {
        let z = c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
        !linalg::numerically_singular(&(a - b * z))
    });
    if n > 0 && !regular {
        return Err(Error::SingularPencil);
    }
    Ok(grid::sigma_min_field(&t, grid))
}

/// Disks `B(d_i, r_i^alpha c_i^(1-alpha))` from caller-supplied uniform bounds.
pub fn uniform_gershgorin_disks(d: &[C64], r: &[f64], c: &[f64], alpha: f64) -> Result<Vec<Disk>> {
    if r.len() != d.len() || c.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            found: if r.len() != d.len() { r.len() } else { c.len() },
            context: "uniform row/column bounds".into(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    d.iter()
        .enumerate()
        .map(|(i, &di)| Disk::new(di, r[i].powf(alpha) * c[i].powf(1.0 - alpha), format!("row {i}")))
        .collect()
}

/// Eigentriples of a diagonalizable matrix with unit right eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub values: Vec<C64>,
    /// Right eigenvectors as unit columns.
    pub v: CMat,
    /// `V^{-1}`; row `i` is `w_i^*`.
    pub v_inv: CMat,
    /// `sec(theta_i) = ||w_i||_2`.
    pub sec: Vec<f64>,
}

pub fn eigen_basis(a: &CMat) -> Result<EigenBasis> {
    let (values, v) = linalg::eig(a)?;
    let n = values.len();
    let v_inv = linalg::inverse(&v).ok_or_else(|| Error::DefectiveMatrix("eigenvector matrix is singular".into()))?;
    let bio = &v_inv * &v;
    for i in 0..n {
        // w_i^* v_i after rescaling w_i to unit length
        let w_norm = v_inv.row(i).norm();
        let cos = bio[(i, i)].norm() / w_norm;
        if !(cos >= 1e-12) {
            return Err(Error::DefectiveMatrix(format!("eigenvalue {} has w^* v = {cos:.3e}", values[i])));
        }
    }
    let err = linalg::norm_fro(&(bio - linalg::identity(n)));
    if !(err <= 1e-10 * (n as f64).max(1.0)) {
        return Err(Error::DefectiveMatrix(format!("eigenbasis biorthogonality error {err:.3e}")));
    }
    let sec = (0..n).map(|i| v_inv.row(i).norm()).collect();
    Ok(EigenBasis { values, v, v_inv, sec })
}

fn check_bound(a: &CMat, f: &DMatrix<f64>) -> Result<()> {
    if f.nrows() != a.nrows() || f.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: f.nrows(), context: "bound matrix F".into() });
    }
    if f.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("bound matrix F must be finite and entrywise non-negative".into()));
    }
    Ok(())
}

/// Disks `B(lambda_i, n ||F||_2 sec(theta_i))` for `A - zI + E(z)` with `|E(z)| <= F`.
pub fn bauer_fike_disks(a: &CMat, f: &DMatrix<f64>) -> Result<Vec<Disk>> {
    check_bound(a, f)?;
    let basis = eigen_basis(a)?;
    let n = a.nrows() as f64;
    let fn2 = f.clone().singular_values().max();
    basis
        .values
        .iter()
        .zip(&basis.sec)
        .enumerate()
        .map(|(i, (&l, &s))| Disk::new(l, n * fn2 * s, format!("eigenvalue {i}")))
        .collect()
}

/// Sharper radii `e_i^T |V^{-1}| F |V| e` from the same eigenbasis.
pub fn bauer_fike_sharp_disks(a: &CMat, f: &DMatrix<f64>) -> Result<Vec<Disk>> {
    check_bound(a, f)?;
    let basis = eigen_basis(a)?;
    let abs_inv = basis.v_inv.map(|z| z.norm());
    let abs_v = basis.v.map(|z| z.norm());
    let m = abs_inv * f * abs_v;
    basis
        .values
        .iter()
        .enumerate()
        .map(|(i, &l)| Disk::new(l, m.row(i).sum(), format!("eigenvalue {i}")))
        .collect()
}

/// Result of counting inside one cluster of overlapping disks.
#[derive(Clone, Debug)]
pub struct ClusterCount {
    /// Indices into the input disk list.
    pub disks: Vec<usize>,
    pub center: C64,
    pub radius: f64,
    /// False when the enclosing circle meets a disk of another cluster; no
    /// counts are computed then.
    pub isolated: bool,
    pub t: Option<CountCertificate>,
    pub reference: Option<CountCertificate>,
}

impl ClusterCount {
    pub fn to_json(&self) -> Value {
        json!({
            "disks": self.disks,
            "center": [self.center.re, self.center.im],
            "radius": self.radius,
            "isolated": self.isolated,
            "n_t": self.t.as_ref().map(|c| c.count),
            "n_reference": self.reference.as_ref().map(|c| c.count),
        })
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut k = i;
    while parent[k] != r {
        let next = parent[k];
        parent[k] = r;
        k = next;
    }
    r
}

/// Groups overlapping disks into clusters (ordered by smallest disk index).
pub fn disk_clusters(disks: &[Disk]) -> Vec<Vec<usize>> {
    let n = disks.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if disks[i].overlaps(&disks[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Vertices of each cluster's enclosing circle.
pub const CLUSTER_CIRCLE_VERTICES: usize = 128;

/// Counts eigenvalues of `t` (and of `reference`, when given) inside a circle
/// around every disk cluster. The circle encloses the cluster with relative
/// padding `pad` (and an absolute floor `min_radius`).
pub fn count_in_disk_union(
    t: &MatFun,
    disks: &[Disk],
    reference: Option<&MatFun>,
    pad: f64,
    min_radius: f64,
) -> Result<Vec<ClusterCount>> {
    let clusters = disk_clusters(disks);
    let opts = CountOptions::default();
    let mut out = Vec::with_capacity(clusters.len());
    for members in clusters {
        let k = members.len() as f64;
        let center = members.iter().map(|&i| disks[i].center).sum::<C64>() / k;
        let reach = members.iter().map(|&i| (disks[i].center - center).norm() + disks[i].radius).fold(0.0, f64::max);
        let radius = (reach * (1.0 + pad)).max(reach + min_radius);
        let circle = Disk { center, radius, label: String::new() };
        let isolated = disks.iter().enumerate().all(|(i, d)| members.contains(&i) || !circle.overlaps(d));
        let (tc, rc) = if isolated {
            let contour = Contour::circle(center, radius, CLUSTER_CIRCLE_VERTICES)?
                .with_id(format!("cluster[{}]", members.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")));
            let tc = count_arg_det(t, &contour, &opts)?;
            let rc = reference.map(|r| count_arg_det(r, &contour, &opts)).transpose()?;
            (Some(tc), rc)
        } else {
            (None, None)
        };
        out.push(ClusterCount { disks: members, center, radius, isolated, t: tc, reference: rc });
    }
    Ok(out)
}
