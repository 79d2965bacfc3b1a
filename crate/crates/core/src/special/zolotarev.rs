//! Best rational approximation of `z^{-1/2}` on `[m, M]`.
//!
//! Poles and weights come from Jacobi elliptic functions of modulus
//! `k' = sqrt(1 - m/M)`; `K(k')` and `sn, cn, dn` are evaluated with the
//! arithmetic-geometric mean and descending Landen recursion.

use serde::Serialize;

use crate::error::{Error, Result};

/// AGM ladder for modulus `k` given the complementary value `kc = sqrt(1 - k^2)`.
struct Agm {
    a: Vec<f64>,
    c: Vec<f64>,
}

impl Agm {
    fn new(kc: f64) -> Self {
        let k = (1.0 - kc * kc).max(0.0).sqrt();
        let (mut a, mut b, mut c) = (1.0f64, kc, k);
        let mut av = vec![a];
        let mut cv = vec![c];
        for _ in 0..64 {
            if c.abs() <= f64::EPSILON * a {
                break;
            }
            let an = 0.5 * (a + b);
            let bn = (a * b).sqrt();
            c = 0.5 * (a - b);
            a = an;
            b = bn;
            av.push(a);
            cv.push(c);
        }
        Agm { a: av, c: cv }
    }

    /// Complete elliptic integral of the first kind.
    fn complete_k(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 / self.a.last().unwrap()
    }

    /// `(sn, cn, dn)` at real argument `u`.
    fn sncndn(&self, u: f64) -> (f64, f64, f64) {
        let n = self.a.len() - 1;
        let mut phi = 2f64.powi(n as i32) * self.a[n] * u;
        let mut prev = phi;
        for i in (1..=n).rev() {
            prev = phi;
            phi = 0.5 * (phi + (self.c[i] / self.a[i] * phi.sin()).asin());
        }
        let (s, c) = phi.sin_cos();
        let ratio = (prev - phi).cos();
        let dn = if n > 0 && ratio.abs() > 1e-8 {
            c / ratio
        } else {
            let k = self.c[0];
            ((1.0 - k * s) * (1.0 + k * s)).max(0.0).sqrt()
        };
        (s, c, dn)
    }
}

/// Complete elliptic integral `K(k)` with `kc = sqrt(1 - k^2)` supplied directly.
pub fn elliptic_k_complement(kc: f64) -> f64 {
    Agm::new(kc).complete_k()
}

/// Jacobi `(sn, cn, dn)(u | k)` with `kc = sqrt(1 - k^2)` supplied directly.
pub fn jacobi_sncndn(u: f64, kc: f64) -> (f64, f64, f64) {
    Agm::new(kc).sncndn(u)
}

/// `r(z) = sum_j weights[j] / (z - poles[j]) ~ z^{-1/2}` on `[m, M]`.
#[derive(Clone, Debug, Serialize)]
pub struct RationalInvSqrt {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(rename = "N_Z")]
    pub n_z: usize,
    pub poles: Vec<f64>,
    pub weights: Vec<f64>,
    pub recorded_error: f64,
}

/// Number of log-spaced samples used to record the accuracy.
pub const ERROR_SAMPLES: usize = 10_000;

impl RationalInvSqrt {
    pub fn eval<T>(&self, z: T) -> T
    where
        T: Copy + std::ops::Sub<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Div<Output = T> + From<f64>,
    {
        let mut acc = T::from(0.0);
        for (&xi, &g) in self.poles.iter().zip(&self.weights) {
            acc = acc + T::from(g) / (z - xi);
        }
        acc
    }

    /// `sqrt(x) r(x) - 1` at real `x > 0`.
    pub fn relative_error(&self, x: f64) -> f64 {
        x.sqrt() * self.eval(x) - 1.0
    }

    /// Log-spaced sample points on `[m, M]`.
    pub fn sample_points(&self, count: usize) -> Vec<f64> {
        let (lm, lmm) = (self.m.ln(), self.big_m.ln());
        (0..count).map(|i| (lm + (lmm - lm) * i as f64 / (count - 1) as f64).exp()).collect()
    }

    pub fn sampled_max_error(&self, count: usize) -> f64 {
        self.sample_points(count).into_iter().map(|x| self.relative_error(x).abs()).fold(0.0, f64::max)
    }
}

pub fn zolotarev_invsqrt(m: f64, big_m: f64, n_z: usize) -> Result<RationalInvSqrt> {
    if !(m > 0.0 && m < big_m && big_m.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < m < M, got m = {m}, M = {big_m}")));
    }
    if n_z == 0 {
        return Err(Error::InvalidArgument("pole count must be positive".into()));
    }
    let kc = (m / big_m).sqrt();
    let agm = Agm::new(kc);
    let kp = agm.complete_k();
    let nf = n_z as f64;
    let mut poles = Vec::with_capacity(n_z);
    let mut weights = Vec::with_capacity(n_z);
    for j in 1..=n_z {
        let u = (j as f64 - 0.5) * kp / nf;
        let (sn, cn, dn) = agm.sncndn(u);
        poles.push(-m * (sn / cn).powi(2));
        weights.push(2.0 * m.sqrt() * kp * dn / (std::f64::consts::PI * nf * cn * cn));
    }
    let mut r = RationalInvSqrt { m, big_m, n_z, poles, weights, recorded_error: 0.0 };
    r.recorded_error = r.sampled_max_error(ERROR_SAMPLES);
    Ok(r)
}
