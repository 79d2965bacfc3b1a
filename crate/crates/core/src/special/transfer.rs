//! Closed-form exponentials of `x [[0, 1], [c, 0]]`.
//!
//! `exp(x G) = [[C, S], [c S, C]]` with `C = cosh(sqrt(c) x)` and
//! `S = sinh(sqrt(c) x) / sqrt(c)`. Both are entire in `c`; near `c = 0`
//! a power series in `c x^2` is used so no square-root branch is involved.

use nalgebra::Matrix2;

use crate::linalg::{c64, C64};

/// Below this value of `|c x^2|` the series form is used.
const SERIES_LIMIT: f64 = 1.0;

/// `(C, S)` as above.
pub fn cosh_sinhc(c: C64, x: f64) -> (C64, C64) {
    let t = c * x * x;
    if t.norm() < SERIES_LIMIT {
        // C = sum t^k/(2k)!, S = x sum t^k/(2k+1)!
        let mut cc = c64(0.0, 0.0);
        let mut ss = c64(0.0, 0.0);
        let mut term_c = c64(1.0, 0.0);
        let mut term_s = c64(1.0, 0.0);
        for k in 0..40 {
            cc += term_c;
            ss += term_s;
            let kf = k as f64;
            term_c *= t / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
            term_s *= t / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
            if term_c.norm() < 1e-18 * cc.norm() && term_s.norm() < 1e-18 * ss.norm() {
                break;
            }
        }
        (cc, ss * x)
    } else {
        let s = c.sqrt();
        ((s * x).cosh(), (s * x).sinh() / s)
    }
}

/// `d S / d c`, series-safe near zero.
fn dsinhc_dc(c: C64, x: f64, cc: C64, ss: C64) -> C64 {
    let t = c * x * x;
    if t.norm() < SERIES_LIMIT {
        // x^3 sum_{k>=1} k t^(k-1) / (2k+1)!
        let mut sum = c64(0.0, 0.0);
        let mut tk = c64(1.0, 0.0); // t^(k-1)
        let mut fact = 6.0; // (2k+1)! for k = 1
        for k in 1..40 {
            let term = tk * (k as f64 / fact);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
            tk *= t;
            let kf = k as f64;
            fact *= (2.0 * kf + 2.0) * (2.0 * kf + 3.0);
        }
        sum * x * x * x
    } else {
        (cc * x - ss) / (c * 2.0)
    }
}

/// `exp(x [[0, 1], [c, 0]])`.
pub fn transfer_matrix(c: C64, x: f64) -> Matrix2<C64> {
    let (cc, ss) = cosh_sinhc(c, x);
    Matrix2::new(cc, ss, c * ss, cc)
}

/// Derivative of [`transfer_matrix`] with respect to `c`.
pub fn transfer_matrix_dc(c: C64, x: f64) -> Matrix2<C64> {
    let (cc, ss) = cosh_sinhc(c, x);
    let dcc = ss * (x / 2.0);
    let dss = dsinhc_dc(c, x, cc, ss);
    // d(cS)/dc = S + c dS/dc
    Matrix2::new(dcc, dss, ss + c * dss, dcc)
}
