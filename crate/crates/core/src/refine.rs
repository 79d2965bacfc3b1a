//! Newton refinement of eigenpairs on the bordered system
//! `T(lambda) v = 0`, `c^* v = 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, CVec, C64};
use crate::matfun::MatFun;

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: C64,
    /// Unit 2-norm.
    pub v: CVec,
    /// `||T(lambda) v||_2`.
    pub residual: f64,
    pub iterations: usize,
    /// `|lambda_{k+1} - lambda_k|` for every Newton step taken.
    pub steps: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub maxit: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, maxit: 20, restarts: 3, seed: 0 }
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    let v = CVec::from_fn(n, |_, _| c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let nv = v.norm();
    v / c64(nv, 0.0)
}

fn residual_of(t: &CMat, v: &CVec) -> f64 {
    (t * v).norm() / v.norm()
}

enum Attempt {
    Done(EigenPair),
    Singular,
}

fn newton_with_border(f: &MatFun, lambda0: C64, v0: &CVec, c: &CVec, opts: &NewtonOptions) -> Result<Attempt> {
    let n = f.dim();
    let cn = c.dotc(v0);
    if cn.norm() == 0.0 {
        return Ok(Attempt::Singular);
    }
    // scale so that c^* v = 1
    let mut v = v0 / cn;
    let mut lambda = lambda0;
    let mut steps = Vec::new();
    let mut converged_at: Option<usize> = None;
    for it in 0..opts.maxit {
        let t = f.eval(lambda)?;
        let res = residual_of(&t, &v);
        let scale = linalg::norm_fro(&t);
        if converged_at.is_none() && res <= opts.tol * scale {
            converged_at = Some(it);
        }
        if let Some(k) = converged_at {
            // one polishing step past the tolerance
            if it > k {
                break;
            }
        }
        let dt = f.eval_deriv(lambda)?;
        let mut j = CMat::zeros(n + 1, n + 1);
        j.view_mut((0, 0), (n, n)).copy_from(&t);
        let tv = &dt * &v;
        for i in 0..n {
            j[(i, n)] = tv[i];
            j[(n, i)] = c[i].conj();
        }
        let mut rhs = CVec::zeros(n + 1);
        let r = &t * &v;
        for i in 0..n {
            rhs[i] = -r[i];
        }
        rhs[n] = -(c.dotc(&v) - 1.0);
        let Some(delta) = linalg::solve_vec(&j, &rhs) else { return Ok(Attempt::Singular) };
        if delta.iter().any(|z| !z.is_finite()) {
            return Ok(Attempt::Singular);
        }
        let dl = delta[n];
        let new_lambda = lambda + dl;
        if !f.contains(new_lambda) {
            return Err(Error::DomainExit(new_lambda));
        }
        for i in 0..n {
            v[i] += delta[i];
        }
        lambda = new_lambda;
        steps.push(dl.norm());
    }
    let t = f.eval(lambda)?;
    let nv = v.norm();
    let v = v / c64(nv, 0.0);
    let residual = (&t * &v).norm();
    if residual > opts.tol * linalg::norm_fro(&t) {
        return Err(Error::NoConvergence(format!(
            "Newton from {lambda0} stopped at {lambda} with residual {residual:.3e} after {} steps",
            steps.len()
        )));
    }
    Ok(Attempt::Done(EigenPair { lambda, v, residual, iterations: steps.len(), steps }))
}

/// Bordered Newton from `lambda0`. With no `v0`, the right singular vector
/// of `sigma_min(T(lambda0))` is used. The border `c` is frozen at `v0`;
/// a singular Jacobian triggers up to `opts.restarts` random borders.
pub fn newton_bordered(f: &MatFun, lambda0: C64, v0: Option<&CVec>, opts: &NewtonOptions) -> Result<EigenPair> {
    if !f.contains(lambda0) {
        return Err(Error::Domain(lambda0));
    }
    let v0 = match v0 {
        Some(v) => {
            if v.len() != f.dim() {
                return Err(Error::DimensionMismatch { expected: f.dim(), found: v.len(), context: "initial vector".into() });
            }
            v / c64(v.norm(), 0.0)
        }
        None => linalg::smallest_singular_triplet(&f.eval(lambda0)?).2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut c = v0.clone();
    for _ in 0..=opts.restarts {
        match newton_with_border(f, lambda0, &v0, &c, opts)? {
            Attempt::Done(p) => return Ok(p),
            Attempt::Singular => c = random_unit(f.dim(), &mut rng),
        }
    }
    Err(Error::SingularJacobian(lambda0))
}

#[derive(Clone, Debug)]
pub struct BatchItem {
    pub start: C64,
    pub result: std::result::Result<EigenPair, Error>,
    /// Index into `BatchResult::eigenpairs` of the kept representative.
    pub representative: Option<usize>,
}

impl BatchItem {
    pub fn delta(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|p| (p.lambda - self.start).norm())
    }
}

#[derive(Clone, Debug)]
pub struct BatchResult {
    pub items: Vec<BatchItem>,
    pub eigenpairs: Vec<EigenPair>,
}

/// Refines every start independently, then deduplicates converged values
/// closer than `dedup_tol` (keeping the smaller residual), in input order.
pub fn refine_batch(f: &MatFun, starts: &[C64], opts: &NewtonOptions, dedup_tol: f64) -> BatchResult {
    let results: Vec<std::result::Result<EigenPair, Error>> =
        starts.par_iter().map(|&s| newton_bordered(f, s, None, opts)).collect();
    let mut eigenpairs: Vec<EigenPair> = Vec::new();
    let mut items = Vec::with_capacity(starts.len());
    for (&start, result) in starts.iter().zip(results) {
        let mut representative = None;
        if let Ok(p) = &result {
            match eigenpairs.iter().position(|q| (q.lambda - p.lambda).norm() < dedup_tol) {
                Some(k) => {
                    if p.residual < eigenpairs[k].residual {
                        eigenpairs[k] = p.clone();
                    }
                    representative = Some(k);
                }
                None => {
                    eigenpairs.push(p.clone());
                    representative = Some(eigenpairs.len() - 1);
                }
            }
        }
        items.push(BatchItem { start, result, representative });
    }
    BatchResult { items, eigenpairs }
}

/// Export rows `{lambda, residual, iters, start, delta}` (failed items carry
/// `status`).
pub fn batch_json(b: &BatchResult) -> Value {
    Value::Array(
        b.items
            .iter()
            .map(|it| match &it.result {
                Ok(p) => json!({
                    "lambda": [p.lambda.re, p.lambda.im],
                    "residual": p.residual,
                    "iters": p.iterations,
                    "start": [it.start.re, it.start.im],
                    "delta": (p.lambda - it.start).norm(),
                    "status": "converged",
                }),
                Err(e) => json!({
                    "start": [it.start.re, it.start.im],
                    "status": e.to_string(),
                }),
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::{Domain, ScalarTerm, Term};

    fn scalar(term: ScalarTerm, extra: Option<ScalarTerm>) -> MatFun {
        let mut terms = vec![Term::new(term, CMat::identity(1, 1))];
        if let Some(e) = extra {
            terms.push(Term::new(e, CMat::identity(1, 1)));
        }
        MatFun::split(1, terms, Domain::WholePlane).unwrap()
    }

    #[test]
    fn square_root_of_four() {
        let f = scalar(ScalarTerm::Polynomial(vec![c64(-4.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]), None);
        let p = newton_bordered(&f, c64(1.9, 0.0), None, &NewtonOptions::default()).unwrap();
        assert!((p.lambda - 2.0).norm() < 1e-12);
    }

    #[test]
    fn exp_minus_one_root() {
        let f = scalar(ScalarTerm::ExpMinusOne(c64(1.0, 0.0)), None);
        let p = newton_bordered(&f, c64(0.3, 0.2), None, &NewtonOptions::default()).unwrap();
        assert!(p.lambda.norm() < 1e-12);
        assert!(p.residual <= 1e-12);
    }

    #[test]
    fn batch_dedup_and_failures() {
        let f = scalar(ScalarTerm::Polynomial(vec![c64(-4.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]), None);
        let b = refine_batch(&f, &[c64(1.9, 0.0), c64(2.1, 0.0), c64(-1.7, 0.1)], &NewtonOptions::default(), 1e-8);
        assert_eq!(b.eigenpairs.len(), 2);
        assert_eq!(b.items[0].representative, b.items[1].representative);
        let g = scalar(ScalarTerm::ExpScaled(c64(1.0, 0.0)), None);
        let b = refine_batch(&g, &[c64(0.0, 0.0)], &NewtonOptions::default(), 1e-8);
        assert!(b.items[0].result.is_err());
        assert!(b.eigenpairs.is_empty());
    }
}
