//! Lambert W on all branches.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::linalg::{c64, C64};

const MAX_ITER: usize = 60;

/// Branch index of `w` as a value of W at `z`: `W_k(z) = w` exactly when
/// `w + Log w = Log z + 2 pi i k` (principal logarithms). Real negative `w`
/// sit on a cut of that identity and are classified directly.
pub fn branch_index(w: C64, z: C64) -> i64 {
    if w.im == 0.0 && w.re < 0.0 {
        // real values on (-1/e, 0): W_0 above -1, W_{-1} below
        return if w.re >= -1.0 { 0 } else { -1 };
    }
    ((w + w.ln() - z.ln()) / c64(0.0, 2.0 * PI)).re.round() as i64
}

fn near_branch_point_series(z: C64, negative_root: bool) -> C64 {
    let mut p = (c64(2.0, 0.0) * (z * E + 1.0)).sqrt();
    if negative_root {
        p = -p;
    }
    -1.0 + p - p * p / 3.0 + p * p * p * (11.0 / 72.0)
}

fn asymptotic(z: C64, k: i64) -> C64 {
    let l1 = z.ln() + c64(0.0, 2.0 * PI * k as f64);
    l1 - l1.ln()
}

fn halley(z: C64, mut w: C64) -> C64 {
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        if wp1.norm() == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (wp1 * 2.0);
        if denom.norm() == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * w.norm().max(1e-300) {
            break;
        }
    }
    w
}

/// Branch `k` of Lambert W at `z`.
pub fn lambert_w(k: i64, z: C64) -> Result<C64> {
    if !z.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite argument {z}")));
    }
    if z == c64(0.0, 0.0) {
        return if k == 0 {
            Ok(c64(0.0, 0.0))
        } else {
            Err(Error::InvalidArgument("W_k(0) is infinite for k != 0".into()))
        };
    }
    // Which branches meet the branch point -1/e from this side of the axis.
    let upper = z.im >= 0.0;
    let touches_bp = k == 0 || (k == -1 && upper) || (k == 1 && !upper);
    let d_bp = (z * E + 1.0).norm();
    if touches_bp && d_bp <= 4.0 * f64::EPSILON {
        return Ok(c64(-1.0, 0.0));
    }

    let mut guesses = Vec::with_capacity(3);
    if touches_bp && d_bp < 0.5 {
        guesses.push(near_branch_point_series(z, k != 0));
    }
    if k != 0 && touches_bp && z.im == 0.0 && z.re < 0.0 && z.re > -1.0 / E {
        // real value below -1; keep the iteration on the real axis
        let l = (-z.re).ln();
        guesses.push(c64(l - (-l).ln(), 0.0));
    }
    if k == 0 && z.norm() < 0.5 {
        guesses.push(z * (1.0 - z));
    }
    if k == 0 {
        guesses.push((z + 1.0).ln());
    }
    guesses.push(asymptotic(z, k));

    let tol = 1e-12 * (1.0 + z.norm());
    let mut best: Option<(f64, C64)> = None;
    for g in guesses {
        let w = halley(z, g);
        if !w.is_finite() {
            continue;
        }
        let res = (w * w.exp() - z).norm();
        if branch_index(w, z) == k && res <= tol {
            return Ok(w);
        }
        if best.map_or(true, |(r, _)| res < r) {
            best = Some((res, w));
        }
    }
    Err(Error::NoConvergence(format!(
        "Lambert W branch {k} at {z}: best residual {:.3e}",
        best.map_or(f64::INFINITY, |b| b.0)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(lambert_w(0, c64(0.0, 0.0)).unwrap(), c64(0.0, 0.0));
        assert!((lambert_w(0, c64(E, 0.0)).unwrap() - 1.0).norm() < 1e-14);
        assert!((lambert_w(-1, c64(-1.0 / E, 0.0)).unwrap() + 1.0).norm() < 1e-14);
        assert!((lambert_w(0, c64(-1.0 / E, 0.0)).unwrap() + 1.0).norm() < 1e-14);
    }

    #[test]
    fn real_branches() {
        let w = lambert_w(-1, c64(-0.2, 0.0)).unwrap();
        assert!(w.im.abs() < 1e-14 && w.re < -1.0);
        let w = lambert_w(0, c64(-0.2, 0.0)).unwrap();
        assert!(w.im.abs() < 1e-14 && w.re > -1.0);
        for x in [-0.3, -0.1, -1e-3, -1e-12] {
            let w = lambert_w(-1, c64(x, 0.0)).unwrap();
            assert!(w.im == 0.0 && w.re < -1.0, "{x}: {w}");
            assert!((w * w.exp() - x).norm() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn residual_and_branch_across_plane() {
        for k in -5..=5 {
            for &(re, im) in &[(1.0, 0.0), (-13.3519, 0.0), (0.0, 1.0), (-0.3, 1e-3), (-0.36, -1e-3), (1e3, -1e3), (1e-3, 0.0)] {
                let z = c64(re, im);
                let w = lambert_w(k, z).unwrap();
                assert!((w * w.exp() - z).norm() <= 1e-12 * (1.0 + z.norm()), "k={k} z={z}");
                assert_eq!(branch_index(w, z), k);
            }
        }
    }

    #[test]
    fn zero_with_nonzero_branch_is_rejected() {
        assert!(lambert_w(2, c64(0.0, 0.0)).is_err());
    }
}
