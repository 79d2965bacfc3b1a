//! Closed-form zero sets of `beta e^z + z^2` and `-z + mu e^{-z}`, the curves
//! they lie on, and Taylor-remainder disk bounds around them.

use serde::Serialize;

use super::lambert::lambert_w;
use crate::error::{Error, Result};
use crate::linalg::{c64, C64};

/// `z_m(theta) = (2 theta + (2m - 1) pi)(cot theta + i)`.
pub fn hadeler_curve(m: i64, theta: f64) -> C64 {
    let s = 2.0 * theta + (2 * m - 1) as f64 * std::f64::consts::PI;
    c64(s / theta.tan(), s)
}

/// `f(z) = beta e^z + z^2`.
pub fn hadeler_scalar(beta: f64, z: C64) -> C64 {
    z.exp() * beta + z * z
}

/// Zeros `-2 W_k(+- i sqrt(beta) / 2)` for every `k` in `ks`, `+` before `-`.
pub fn hadeler_zeros(beta: f64, ks: impl IntoIterator<Item = i64>) -> Result<Vec<C64>> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let h = beta.sqrt() / 2.0;
    let mut out = Vec::new();
    for k in ks {
        for sign in [1.0, -1.0] {
            out.push(lambert_w(k, c64(0.0, sign * h))? * -2.0);
        }
    }
    Ok(out)
}

/// Zeros `W_k(mu)` of `z e^z = mu`.
pub fn delay_zeros(mu: C64, ks: impl IntoIterator<Item = i64>) -> Result<Vec<C64>> {
    if mu == c64(0.0, 0.0) {
        return Err(Error::InvalidArgument("mu must be nonzero".into()));
    }
    ks.into_iter().map(|k| lambert_w(k, mu)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TaylorDiskBound {
    pub lambda_hat: [f64; 2],
    pub b: [f64; 2],
    pub rho: f64,
    pub radius: f64,
    pub condition_holds: bool,
}

/// Disk bound around a zero `lambda_hat` of `beta e^z + z^2`.
pub fn taylor_disk(lambda_hat: C64, rho: f64) -> Result<TaylorDiskBound> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let b = lambda_hat * (2.0 - lambda_hat);
    let nb = b.norm();
    if nb == 0.0 {
        return Err(Error::ZeroDerivative);
    }
    let radius = 2.0 * rho / nb;
    let lhs = 1.0 + 0.5 * lambda_hat.norm_sqr() * radius.exp();
    let rhs = nb * nb / (4.0 * rho);
    Ok(TaylorDiskBound {
        lambda_hat: [lambda_hat.re, lambda_hat.im],
        b: [b.re, b.im],
        rho,
        radius,
        condition_holds: lhs < rhs,
    })
}

/// `beta` for which `lambda_hat` is a zero of `beta e^z + z^2`.
pub fn beta_for_zero(lambda_hat: C64) -> C64 {
    -(lambda_hat * lambda_hat) * (-lambda_hat).exp()
}

/// Minimum of `|beta e^z + z^2|` over `samples` points of the circle of
/// radius `bound.radius` about `bound.lambda_hat`.
pub fn min_on_circle(bound: &TaylorDiskBound, samples: usize) -> f64 {
    let lh = c64(bound.lambda_hat[0], bound.lambda_hat[1]);
    let beta = beta_for_zero(lh);
    (0..samples)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
            let z = lh + C64::from_polar(bound.radius, t);
            (z.exp() * beta + z * z).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest `|lambda_hat|` among the zeros for `k` in `-k_max..=k_max` at
/// which the disk condition fails (0 if it holds everywhere).
pub fn taylor_threshold(beta: f64, rho: f64, k_max: i64) -> Result<f64> {
    let mut r = 0.0f64;
    for z in hadeler_zeros(beta, -k_max..=k_max)? {
        match taylor_disk(z, rho) {
            Ok(t) if t.condition_holds => {}
            Ok(_) | Err(Error::ZeroDerivative) => r = r.max(z.norm()),
            Err(e) => return Err(e),
        }
    }
    Ok(r)
}
