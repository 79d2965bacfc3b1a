//! Constructive side of the pseudospectrum definitions.

use crate::linalg::{self, CMat, CVec};

/// Rank-one `E0 = -s u v^*` with `T v = s u`, `s = sigma_min(T)`: `T + E0`
/// is singular and `||E0||_2 = s`.
pub fn rank_one_singularizer(t: &CMat) -> CMat {
    let (s, u, v) = linalg::smallest_singular_triplet(t);
    -(u * v.adjoint()) * num_complex::Complex64::new(s, 0.0)
}

/// `E = -r x^* / ||x||^2`, the minimal perturbation with `(T + E) x = 0`
/// when `T x = r`.
pub fn backward_error_perturbation(r: &CVec, x: &CVec) -> CMat {
    let nx = x.norm_squared();
    -(r * x.adjoint()) / num_complex::Complex64::new(nx, 0.0)
}
