//! `T(z) = B(e^z - 1) + A z^2 - alpha I` with `A`, `B` real symmetric
//! positive definite, and its simplified form in the `(B, A)` eigenbasis.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{self, Grid, RegionField};
use crate::linalg::{c64, to_complex, CMat};
use crate::matfun::{Domain, MatFun, ScalarTerm, Term};

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    File(String),
    Synthetic { seed: u64 },
}

#[derive(Clone, Debug)]
pub struct HadelerInstance {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub alpha: f64,
    pub provenance: Provenance,
}

pub const SYNTHETIC_DIM: usize = 8;
pub const SYNTHETIC_ALPHA: f64 = 100.0;

/// Random orthogonal `Q` (QR of a uniform matrix) times a diagonal with
/// entries uniform in `[1, 10]`.
fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(1.0..10.0)));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub(crate) fn check_spd(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::NotSpd(format!("{name} is not a nonempty square matrix")));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotSpd(format!("{name} is not symmetric")));
    }
    if m.clone().cholesky().is_none() {
        return Err(Error::NotSpd(format!("{name} is not positive definite")));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HadelerFile {
    #[serde(default)]
    nlevp: Option<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    alpha: f64,
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::parse(name, "rows have different lengths"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

impl HadelerInstance {
    pub fn synthetic(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_spd(SYNTHETIC_DIM, &mut rng);
        let b = random_spd(SYNTHETIC_DIM, &mut rng);
        HadelerInstance { a, b, alpha: SYNTHETIC_ALPHA, provenance: Provenance::Synthetic { seed } }
    }

    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, alpha: f64, provenance: Provenance) -> Result<Self> {
        check_spd(&a, "A")?;
        check_spd(&b, "B")?;
        if a.shape() != b.shape() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows(), context: "B".into() });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        Ok(HadelerInstance { a, b, alpha, provenance })
    }

    /// Reads `{"nlevp": "hadeler", "A": [[..]], "B": [[..]], "alpha": x}`.
    pub fn from_json(text: &str, path: &str) -> Result<Self> {
        let f: HadelerFile = serde_json::from_str(text).map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if let Some(tag) = &f.nlevp {
            if tag != "hadeler" {
                return Err(Error::parse("nlevp", format!("expected \"hadeler\", found \"{tag}\"")));
            }
        }
        let a = rows_to_matrix(&f.a, "A")?;
        let b = rows_to_matrix(&f.b, "B")?;
        Self::new(a, b, f.alpha, Provenance::File(path.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matfun(&self) -> MatFun {
        let n = self.dim();
        let terms = vec![
            Term::new(ScalarTerm::ExpMinusOne(c64(1.0, 0.0)), to_complex(&self.b)),
            Term::new(ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]), to_complex(&self.a)),
            Term::new(ScalarTerm::constant(c64(-self.alpha, 0.0)), CMat::identity(n, n)),
        ];
        MatFun::split(n, terms, Domain::WholePlane).expect("consistent dimensions")
    }
}

/// `U^T T(z) U = D_B e^z + I z^2 + E` with `U^T A U = I`, `U^T B U = D_B`.
#[derive(Clone, Debug)]
pub struct HadelerSimplified {
    pub beta: Vec<f64>,
    pub e: DMatrix<f64>,
    pub u: DMatrix<f64>,
}

pub fn hadeler_simplify(inst: &HadelerInstance) -> Result<HadelerSimplified> {
    let l = inst.a.clone().cholesky().ok_or(Error::PencilNotDefinite)?.l();
    let l_inv = l.clone().try_inverse().ok_or(Error::PencilNotDefinite)?;
    let m = &l_inv * &inst.b * l_inv.transpose();
    let eig = ((&m + m.transpose()) * 0.5).symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let w = DMatrix::from_fn(m.nrows(), m.nrows(), |i, j| eig.eigenvectors[(i, order[j])]);
    let beta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let u = l_inv.transpose() * w;
    let n = inst.dim();
    let e = -(u.transpose() * (DMatrix::identity(n, n) * inst.alpha + &inst.b) * &u);
    Ok(HadelerSimplified { beta, e, u })
}

impl HadelerSimplified {
    /// Row sums of `|E|`.
    pub fn rho(&self) -> Vec<f64> {
        self.e.row_iter().map(|r| r.iter().map(|x| x.abs()).sum()).collect()
    }

    /// `D_B e^z + I z^2`.
    pub fn diagonal_matfun(&self) -> MatFun {
        let n = self.beta.len();
        let db = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.beta.clone()));
        let terms = vec![
            Term::new(ScalarTerm::ExpScaled(c64(1.0, 0.0)), to_complex(&db)),
            Term::new(ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]), CMat::identity(n, n)),
        ];
        MatFun::split(n, terms, Domain::WholePlane).expect("consistent dimensions")
    }

    pub fn e_matfun(&self) -> MatFun {
        let n = self.beta.len();
        MatFun::split(n, vec![Term::new(ScalarTerm::one(), to_complex(&self.e))], Domain::WholePlane).expect("consistent dimensions")
    }

    /// `D_B e^z + I z^2 + E`.
    pub fn matfun(&self) -> MatFun {
        self.diagonal_matfun().add(&self.e_matfun()).expect("same dimension")
    }

    /// Split-form Gershgorin field `max_j (rho_j - |beta_j e^z + z^2|)` for `alpha = 1`.
    pub fn gershgorin_field(&self, grid: &Grid) -> Result<RegionField> {
        grid::gershgorin_field_split(&self.diagonal_matfun(), &self.e_matfun(), grid, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn synthetic_is_deterministic_and_spd() {
        let a = HadelerInstance::synthetic(1);
        let b = HadelerInstance::synthetic(1);
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
        check_spd(&a.a, "A").unwrap();
        let ev = a.a.clone().symmetric_eigen().eigenvalues;
        assert!(ev.iter().all(|&x| (1.0 - 1e-9..=10.0 + 1e-9).contains(&x)));
    }

    #[test]
    fn nonsymmetric_file_rejected() {
        let text = r#"{"nlevp": "hadeler", "A": [[2, 1], [0, 2]], "B": [[1, 0], [0, 1]], "alpha": 1}"#;
        assert!(matches!(HadelerInstance::from_json(text, "x.json"), Err(Error::NotSpd(_))));
    }

    #[test]
    fn simplify_identity_case() {
        let inst = HadelerInstance::new(
            DMatrix::identity(2, 2),
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0])),
            3.0,
            Provenance::Synthetic { seed: 0 },
        )
        .unwrap();
        let s = hadeler_simplify(&inst).unwrap();
        assert!((s.beta[0] - 1.0).abs() < 1e-14 && (s.beta[1] - 4.0).abs() < 1e-14);
        assert!((s.u.abs() - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn simplified_form_residual() {
        let inst = HadelerInstance::synthetic(1);
        let s = hadeler_simplify(&inst).unwrap();
        assert!(s.beta.iter().all(|&b| b > 0.0));
        let t = inst.matfun();
        let tt = s.matfun();
        let u = to_complex(&s.u);
        for z in [c64(0.3, 1.0), c64(-2.0, 5.0), c64(1.5, -0.5)] {
            let lhs = u.transpose() * t.eval(z).unwrap() * &u;
            let rhs = tt.eval(z).unwrap();
            assert!(linalg::norm_fro(&(lhs - &rhs)) <= 1e-10 * linalg::norm_fro(&rhs));
        }
    }
}
