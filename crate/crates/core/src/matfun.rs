//! Analytic matrix-valued functions `T : Omega -> C^{n x n}`.
//!
//! Most problems are stored in split form `T(z) = sum_i f_i(z) A_i` with
//! scalar functions drawn from [`ScalarTerm`]; each term carries a closed
//! form derivative so `T'` is exact. The Schrödinger shooting function is a
//! builtin with its own analytic derivative.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMat, C64};
use crate::problems::resonance::{self, ResonanceParams};

/// Scalar analytic factor of a split-form term.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarTerm {
    /// `sum_k coeffs[k] z^k` (ascending powers).
    Polynomial(Vec<C64>),
    /// `exp(a z)`.
    ExpScaled(C64),
    /// `exp(a z) - 1`.
    ExpMinusOne(C64),
    /// Principal square root, cut along `(-inf, 0]`.
    SqrtPrincipal,
    /// `1 / (z - xi)`.
    RationalPole(C64),
}

/// True when `z` lies on the closed negative real ray `(-inf, 0]`.
pub fn on_negative_ray(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0
}

impl ScalarTerm {
    pub fn constant(c: C64) -> Self {
        ScalarTerm::Polynomial(vec![c])
    }

    pub fn one() -> Self {
        ScalarTerm::constant(c64(1.0, 0.0))
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        match self {
            ScalarTerm::Polynomial(c) => Ok(c.iter().rev().fold(c64(0.0, 0.0), |acc, &a| acc * z + a)),
            ScalarTerm::ExpScaled(a) => Ok((a * z).exp()),
            ScalarTerm::ExpMinusOne(a) => Ok(expm1(a * z)),
            ScalarTerm::SqrtPrincipal => {
                if on_negative_ray(z) {
                    Err(Error::Domain(z))
                } else {
                    Ok(z.sqrt())
                }
            }
            ScalarTerm::RationalPole(xi) => {
                if z == *xi {
                    Err(Error::Domain(z))
                } else {
                    Ok((z - xi).inv())
                }
            }
        }
    }

    pub fn deriv(&self, z: C64) -> Result<C64> {
        match self {
            ScalarTerm::Polynomial(c) => {
                let mut acc = c64(0.0, 0.0);
                for (k, &a) in c.iter().enumerate().skip(1).rev() {
                    acc = acc * z + a * k as f64;
                }
                Ok(acc)
            }
            ScalarTerm::ExpScaled(a) | ScalarTerm::ExpMinusOne(a) => Ok(a * (a * z).exp()),
            ScalarTerm::SqrtPrincipal => {
                if on_negative_ray(z) {
                    Err(Error::Domain(z))
                } else {
                    Ok(0.5 / z.sqrt())
                }
            }
            ScalarTerm::RationalPole(xi) => {
                if z == *xi {
                    Err(Error::Domain(z))
                } else {
                    let d = z - xi;
                    Ok(-(d * d).inv())
                }
            }
        }
    }

    /// Largest domain on which the scalar is analytic (poles aside).
    pub fn natural_domain(&self) -> Domain {
        match self {
            ScalarTerm::SqrtPrincipal => Domain::PlaneMinusRay,
            _ => Domain::WholePlane,
        }
    }
}

/// `exp(w) - 1` without cancellation near `w = 0`.
fn expm1(w: C64) -> C64 {
    if w.norm() < 1e-5 {
        // w + w^2/2 + w^3/6 + w^4/24
        w * (1.0 + w * (0.5 + w * (1.0 / 6.0 + w / 24.0)))
    } else {
        w.exp() - 1.0
    }
}

/// Domain of definition.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    WholePlane,
    /// `C \ (-inf, 0]`.
    PlaneMinusRay,
    /// Closed axis-aligned rectangle with corners `lo` (min) and `hi` (max).
    Rectangle { lo: C64, hi: C64 },
    Intersection(Vec<Domain>),
}

impl Domain {
    pub fn rectangle(a: C64, b: C64) -> Self {
        Domain::Rectangle {
            lo: c64(a.re.min(b.re), a.im.min(b.im)),
            hi: c64(a.re.max(b.re), a.im.max(b.im)),
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return false;
        }
        match self {
            Domain::WholePlane => true,
            Domain::PlaneMinusRay => !on_negative_ray(z),
            Domain::Rectangle { lo, hi } => z.re >= lo.re && z.re <= hi.re && z.im >= lo.im && z.im <= hi.im,
            Domain::Intersection(parts) => parts.iter().all(|d| d.contains(z)),
        }
    }

    /// True when the closed segment `[a, b]` meets the complement of the domain.
    pub fn segment_leaves(&self, a: C64, b: C64) -> bool {
        match self {
            Domain::WholePlane => false,
            Domain::PlaneMinusRay => {
                if on_negative_ray(a) || on_negative_ray(b) {
                    return true;
                }
                if (a.im > 0.0) == (b.im > 0.0) && a.im != 0.0 && b.im != 0.0 {
                    return false;
                }
                if a.im == b.im {
                    // horizontal segment on the axis, both ends positive
                    return false;
                }
                let t = a.im / (a.im - b.im);
                let x = a.re + t * (b.re - a.re);
                x <= 0.0
            }
            Domain::Rectangle { .. } => !self.contains(a) || !self.contains(b),
            Domain::Intersection(parts) => parts.iter().any(|d| d.segment_leaves(a, b)),
        }
    }

    pub fn intersect(&self, other: &Domain) -> Domain {
        match (self, other) {
            (Domain::WholePlane, d) | (d, Domain::WholePlane) => d.clone(),
            (a, b) if a == b => a.clone(),
            (Domain::Intersection(p), Domain::Intersection(q)) => {
                let mut v = p.clone();
                for d in q {
                    if !v.contains(d) {
                        v.push(d.clone());
                    }
                }
                Domain::Intersection(v)
            }
            (Domain::Intersection(p), d) | (d, Domain::Intersection(p)) => {
                let mut v = p.clone();
                if !v.contains(d) {
                    v.push(d.clone());
                }
                Domain::Intersection(v)
            }
            (a, b) => Domain::Intersection(vec![a.clone(), b.clone()]),
        }
    }
}

/// One split-form term `f(z) * A`.
#[derive(Clone, Debug)]
pub struct Term {
    pub scalar: ScalarTerm,
    pub matrix: CMat,
}

impl Term {
    pub fn new(scalar: ScalarTerm, matrix: CMat) -> Self {
        Term { scalar, matrix }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Split(Vec<Term>),
    Resonance(ResonanceParams),
    Combination(Vec<(C64, MatFun)>),
    DiagonalPart(Box<MatFun>),
    OffDiagonalPart(Box<MatFun>),
}

/// An analytic matrix-valued function with exact derivative.
///
/// Immutable after construction; evaluation is pure and thread safe.
#[derive(Clone, Debug)]
pub struct MatFun {
    n: usize,
    repr: Repr,
    domain: Domain,
}

impl MatFun {
    pub fn split(n: usize, terms: Vec<Term>, domain: Domain) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::parse("terms", "term list is empty"));
        }
        let mut dom = domain;
        for (i, t) in terms.iter().enumerate() {
            if t.matrix.nrows() != n || t.matrix.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: if t.matrix.nrows() != n { t.matrix.nrows() } else { t.matrix.ncols() },
                    context: format!("terms[{i}].matrix"),
                });
            }
            dom = dom.intersect(&t.scalar.natural_domain());
        }
        Ok(MatFun { n, repr: Repr::Split(terms), domain: dom })
    }

    /// Constant-plus-linear pencil `A - z B`.
    pub fn pencil(a: CMat, b: CMat) -> Result<Self> {
        let n = a.nrows();
        MatFun::split(
            n,
            vec![
                Term::new(ScalarTerm::one(), a),
                Term::new(ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(-1.0, 0.0)]), b),
            ],
            Domain::WholePlane,
        )
    }

    pub fn resonance(params: ResonanceParams) -> Self {
        MatFun { n: 6, repr: Repr::Resonance(params), domain: Domain::PlaneMinusRay }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match &self.repr {
            Repr::Split(t) => Some(t),
            _ => None,
        }
    }

    pub fn resonance_params(&self) -> Option<&ResonanceParams> {
        match &self.repr {
            Repr::Resonance(p) => Some(p),
            _ => None,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = self.domain.intersect(&domain);
        self
    }

    pub fn contains(&self, z: C64) -> bool {
        self.domain.contains(z)
    }

    pub fn eval(&self, z: C64) -> Result<CMat> {
        if !self.domain.contains(z) {
            return Err(Error::Domain(z));
        }
        self.eval_unchecked(z, false)
    }

    pub fn eval_deriv(&self, z: C64) -> Result<CMat> {
        if !self.domain.contains(z) {
            return Err(Error::Domain(z));
        }
        self.eval_unchecked(z, true)
    }

    fn eval_unchecked(&self, z: C64, deriv: bool) -> Result<CMat> {
        match &self.repr {
            Repr::Split(terms) => {
                let mut m = CMat::zeros(self.n, self.n);
                for t in terms {
                    let f = if deriv { t.scalar.deriv(z)? } else { t.scalar.eval(z)? };
                    if f != c64(0.0, 0.0) {
                        m += &t.matrix * f;
                    }
                }
                Ok(m)
            }
            Repr::Resonance(p) => {
                if deriv {
                    resonance::shooting_matrix_deriv(p, z)
                } else {
                    resonance::shooting_matrix(p, z)
                }
            }
            Repr::Combination(parts) => {
                let mut m = CMat::zeros(self.n, self.n);
                for (w, f) in parts {
                    m += f.eval_unchecked(z, deriv)? * *w;
                }
                Ok(m)
            }
            Repr::DiagonalPart(f) => {
                let full = f.eval_unchecked(z, deriv)?;
                Ok(CMat::from_diagonal(&full.diagonal()))
            }
            Repr::OffDiagonalPart(f) => {
                let mut full = f.eval_unchecked(z, deriv)?;
                full.fill_diagonal(c64(0.0, 0.0));
                Ok(full)
            }
        }
    }

    /// `T(z) = diag(d) + E`, with `d` the diagonal of `T(z)`.
    pub fn diagonal_split(&self, z: C64) -> Result<(Vec<C64>, CMat)> {
        let mut m = self.eval(z)?;
        let d: Vec<C64> = (0..self.n).map(|i| m[(i, i)]).collect();
        m.fill_diagonal(c64(0.0, 0.0));
        Ok((d, m))
    }

    /// Diagonal part as a matrix function (split form stays split form).
    pub fn diagonal_part(&self) -> MatFun {
        match &self.repr {
            Repr::Split(terms) => MatFun {
                n: self.n,
                repr: Repr::Split(
                    terms
                        .iter()
                        .map(|t| Term::new(t.scalar.clone(), CMat::from_diagonal(&t.matrix.diagonal())))
                        .collect(),
                ),
                domain: self.domain.clone(),
            },
            _ => MatFun { n: self.n, repr: Repr::DiagonalPart(Box::new(self.clone())), domain: self.domain.clone() },
        }
    }

    pub fn off_diagonal_part(&self) -> MatFun {
        match &self.repr {
            Repr::Split(terms) => MatFun {
                n: self.n,
                repr: Repr::Split(
                    terms
                        .iter()
                        .map(|t| {
                            let mut m = t.matrix.clone();
                            m.fill_diagonal(c64(0.0, 0.0));
                            Term::new(t.scalar.clone(), m)
                        })
                        .collect(),
                ),
                domain: self.domain.clone(),
            },
            _ => MatFun { n: self.n, repr: Repr::OffDiagonalPart(Box::new(self.clone())), domain: self.domain.clone() },
        }
    }

    /// `sum_i w_i F_i`. Split-form inputs are merged into one term list.
    pub fn linear_combination(parts: &[(C64, &MatFun)]) -> Result<MatFun> {
        let n = parts.first().map(|p| p.1.n).ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        if let Some((_, f)) = parts.iter().find(|(_, f)| f.n != n) {
            return Err(Error::DimensionMismatch { expected: n, found: f.n, context: "linear combination".into() });
        }
        let domain = parts.iter().fold(Domain::WholePlane, |d, (_, f)| d.intersect(&f.domain));
        if parts.iter().all(|(_, f)| matches!(f.repr, Repr::Split(_))) {
            let mut terms = Vec::new();
            for (w, f) in parts {
                for t in f.terms().unwrap() {
                    terms.push(Term::new(t.scalar.clone(), &t.matrix * *w));
                }
            }
            return MatFun::split(n, terms, domain);
        }
        Ok(MatFun {
            n,
            repr: Repr::Combination(parts.iter().map(|(w, f)| (*w, (*f).clone())).collect()),
            domain,
        })
    }

    pub fn add(&self, other: &MatFun) -> Result<MatFun> {
        MatFun::linear_combination(&[(c64(1.0, 0.0), self), (c64(1.0, 0.0), other)])
    }

    pub fn sub(&self, other: &MatFun) -> Result<MatFun> {
        MatFun::linear_combination(&[(c64(1.0, 0.0), self), (c64(-1.0, 0.0), other)])
    }

    pub fn scaled(&self, w: C64) -> MatFun {
        MatFun::linear_combination(&[(w, self)]).expect("single-part combination")
    }

    /// `P^T T(z) P` for a permutation `perm` (row/column `i` of the result is
    /// row/column `perm[i]` of `T`). Split form only.
    pub fn permuted(&self, perm: &[usize]) -> Result<MatFun> {
        let terms = self
            .terms()
            .ok_or_else(|| Error::InvalidArgument("permutation needs split form".into()))?;
        let n = self.n;
        let terms = terms
            .iter()
            .map(|t| Term::new(t.scalar.clone(), CMat::from_fn(n, n, |i, j| t.matrix[(perm[i], perm[j])])))
            .collect();
        MatFun::split(n, terms, self.domain.clone())
    }

    /// `L T(z) R` for constant matrices. Split form only.
    pub fn transformed(&self, left: &CMat, right: &CMat) -> Result<MatFun> {
        let terms = self
            .terms()
            .ok_or_else(|| Error::InvalidArgument("basis change needs split form".into()))?;
        let terms = terms.iter().map(|t| Term::new(t.scalar.clone(), left * &t.matrix * right)).collect();
        MatFun::split(left.nrows(), terms, self.domain.clone())
    }
}

// ---------------------------------------------------------------------------
// Problem files

/// Parsed problem document: the matrix function plus an optional NLEVP tag.
#[derive(Clone, Debug)]
pub struct ProblemDocument {
    pub matfun: MatFun,
    pub nlevp: Option<String>,
}

pub fn parse_problem(text: &str) -> Result<MatFun> {
    parse_problem_document(text).map(|d| d.matfun)
}

pub fn parse_problem_document(text: &str) -> Result<ProblemDocument> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| Error::parse("$", "top level must be an object"))?;
    let nlevp = match obj.get("nlevp") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(Error::parse("nlevp", "expected a string")),
    };
    if let Some(b) = obj.get("builtin") {
        let name = b.as_str().ok_or_else(|| Error::parse("builtin", "expected a string"))?;
        if name != "resonance" {
            return Err(Error::parse("builtin", format!("unknown builtin '{name}'")));
        }
        let mut p = ResonanceParams::default();
        if let Some(params) = obj.get("params") {
            let po = params.as_object().ok_or_else(|| Error::parse("params", "expected an object"))?;
            for (key, slot) in [("V0", &mut p.v0), ("a", &mut p.a), ("b", &mut p.b)] {
                if let Some(x) = po.get(key) {
                    *slot = x.as_f64().ok_or_else(|| Error::parse(format!("params.{key}"), "expected a number"))?;
                }
            }
        }
        p.validate()?;
        return Ok(ProblemDocument { matfun: MatFun::resonance(p), nlevp });
    }
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::parse("n", "missing or not a non-negative integer"))? as usize;
    if n == 0 {
        return Err(Error::parse("n", "dimension must be positive"));
    }
    let domain = match obj.get("domain") {
        None => Domain::WholePlane,
        Some(d) => parse_domain(d, "domain")?,
    };
    let terms_v = obj
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("terms", "missing or not an array"))?;
    if terms_v.is_empty() {
        return Err(Error::parse("terms", "term list is empty"));
    }
    let mut terms = Vec::with_capacity(terms_v.len());
    for (i, t) in terms_v.iter().enumerate() {
        let path = format!("terms[{i}]");
        let scalar = parse_scalar(t.get("scalar").ok_or_else(|| Error::parse(&path, "missing 'scalar'"))?, &format!("{path}.scalar"))?;
        let matrix = parse_matrix(t.get("matrix").ok_or_else(|| Error::parse(&path, "missing 'matrix'"))?, n, &format!("{path}.matrix"))?;
        terms.push(Term::new(scalar, matrix));
    }
    Ok(ProblemDocument { matfun: MatFun::split(n, terms, domain)?, nlevp })
}

fn parse_complex(v: &Value, path: &str) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(c64(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or_else(|| Error::parse(path, "real part is not a number"))?;
            let im = a[1].as_f64().ok_or_else(|| Error::parse(path, "imaginary part is not a number"))?;
            Ok(c64(re, im))
        }
        _ => Err(Error::parse(path, "expected [re, im]")),
    }
}

fn parse_scalar(v: &Value, path: &str) -> Result<ScalarTerm> {
    let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::parse(path, "missing 'kind'"))?;
    let field = |name: &str| -> Result<C64> {
        let p = format!("{path}.{name}");
        parse_complex(v.get(name).ok_or_else(|| Error::parse(&p, "missing"))?, &p)
    };
    match kind {
        "polynomial" => {
            let p = format!("{path}.coeffs");
            let arr = v.get("coeffs").and_then(Value::as_array).ok_or_else(|| Error::parse(&p, "missing or not an array"))?;
            if arr.is_empty() {
                return Err(Error::parse(&p, "empty coefficient list"));
            }
            let coeffs = arr
                .iter()
                .enumerate()
                .map(|(k, c)| parse_complex(c, &format!("{p}[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(ScalarTerm::Polynomial(coeffs))
        }
        "exp_scaled" => Ok(ScalarTerm::ExpScaled(field("a")?)),
        "exp_minus_one" => Ok(ScalarTerm::ExpMinusOne(field("a")?)),
        "sqrt_principal" => Ok(ScalarTerm::SqrtPrincipal),
        "rational_pole" => Ok(ScalarTerm::RationalPole(field("xi")?)),
        other => Err(Error::parse(format!("{path}.kind"), format!("unknown scalar kind '{other}'"))),
    }
}

fn parse_matrix(v: &Value, n: usize, path: &str) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| Error::parse(path, "expected an array of rows"))?;
    if rows.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rows.len(), context: format!("{path} rows") });
    }
    let mut m = CMat::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_array().ok_or_else(|| Error::parse(format!("{path}[{i}]"), "expected a row array"))?;
        if r.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: r.len(), context: format!("{path}[{i}] columns") });
        }
        for (j, x) in r.iter().enumerate() {
            m[(i, j)] = parse_complex(x, &format!("{path}[{i}][{j}]"))?;
        }
    }
    Ok(m)
}

fn parse_domain(v: &Value, path: &str) -> Result<Domain> {
    let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::parse(path, "missing 'kind'"))?;
    match kind {
        "whole_plane" => Ok(Domain::WholePlane),
        "plane_minus_ray" => Ok(Domain::PlaneMinusRay),
        "rectangle" => {
            let p = format!("{path}.corners");
            let c = v.get("corners").and_then(Value::as_array).filter(|a| a.len() == 2).ok_or_else(|| Error::parse(&p, "expected two corners"))?;
            Ok(Domain::rectangle(parse_complex(&c[0], &format!("{p}[0]"))?, parse_complex(&c[1], &format!("{p}[1]"))?))
        }
        "intersection" => {
            let p = format!("{path}.parts");
            let parts = v.get("parts").and_then(Value::as_array).ok_or_else(|| Error::parse(&p, "expected an array"))?;
            let mut d = Domain::WholePlane;
            for (i, q) in parts.iter().enumerate() {
                d = d.intersect(&parse_domain(q, &format!("{p}[{i}]"))?);
            }
            Ok(d)
        }
        other => Err(Error::parse(format!("{path}.kind"), format!("unknown domain kind '{other}'"))),
    }
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())).collect())
}

fn domain_json(d: &Domain) -> Value {
    match d {
        Domain::WholePlane => json!({"kind": "whole_plane"}),
        Domain::PlaneMinusRay => json!({"kind": "plane_minus_ray"}),
        Domain::Rectangle { lo, hi } => json!({"kind": "rectangle", "corners": [complex_json(*lo), complex_json(*hi)]}),
        Domain::Intersection(p) => json!({"kind": "intersection", "parts": p.iter().map(domain_json).collect::<Vec<_>>()}),
    }
}

fn scalar_json(s: &ScalarTerm) -> Value {
    match s {
        ScalarTerm::Polynomial(c) => json!({"kind": "polynomial", "coeffs": c.iter().map(|z| complex_json(*z)).collect::<Vec<_>>()}),
        ScalarTerm::ExpScaled(a) => json!({"kind": "exp_scaled", "a": complex_json(*a)}),
        ScalarTerm::ExpMinusOne(a) => json!({"kind": "exp_minus_one", "a": complex_json(*a)}),
        ScalarTerm::SqrtPrincipal => json!({"kind": "sqrt_principal"}),
        ScalarTerm::RationalPole(xi) => json!({"kind": "rational_pole", "xi": complex_json(*xi)}),
    }
}

/// Problem-file representation; only split-form and the resonance builtin
/// can be written.
pub fn problem_json(f: &MatFun) -> Result<Value> {
    match &f.repr {
        Repr::Split(terms) => Ok(json!({
            "n": f.n,
            "domain": domain_json(&f.domain),
            "terms": terms.iter().map(|t| json!({"scalar": scalar_json(&t.scalar), "matrix": matrix_json(&t.matrix)})).collect::<Vec<_>>(),
        })),
        Repr::Resonance(p) => Ok(json!({"builtin": "resonance", "params": {"V0": p.v0, "a": p.a, "b": p.b}})),
        _ => Err(Error::InvalidArgument("only split-form or builtin functions serialize".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: [f64; 4]) -> CMat {
        CMat::from_row_slice(2, 2, &a.map(|x| c64(x, 0.0)))
    }

    fn z_poly() -> ScalarTerm {
        ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(1.0, 0.0)])
    }

    #[test]
    fn eval_direct_substitution() {
        let t = MatFun::split(
            2,
            vec![Term::new(ScalarTerm::one(), m2([1.0, 0.0, 0.0, 0.0])), Term::new(z_poly(), m2([0.0, 1.0, 0.0, 1.0]))],
            Domain::WholePlane,
        )
        .unwrap();
        let m = t.eval(c64(2.0, 0.0)).unwrap();
        assert_eq!(m, m2([1.0, 2.0, 0.0, 2.0]));
        let (d, e) = t.diagonal_split(c64(3.0, 0.0)).unwrap();
        assert_eq!(d, vec![c64(1.0, 0.0), c64(3.0, 0.0)]);
        assert_eq!(e, m2([0.0, 3.0, 0.0, 0.0]));
    }

    #[test]
    fn expm1_identity_vanishes_at_zero() {
        let t = MatFun::split(2, vec![Term::new(ScalarTerm::ExpMinusOne(c64(1.0, 0.0)), CMat::identity(2, 2))], Domain::WholePlane).unwrap();
        assert_eq!(t.eval(c64(0.0, 0.0)).unwrap(), CMat::zeros(2, 2));
    }

    #[test]
    fn exp_minus_z_derivative_at_zero() {
        let t = MatFun::split(2, vec![Term::new(ScalarTerm::ExpScaled(c64(-1.0, 0.0)), CMat::identity(2, 2))], Domain::WholePlane).unwrap();
        assert_eq!(t.eval_deriv(c64(0.0, 0.0)).unwrap(), -CMat::identity(2, 2));
    }

    #[test]
    fn pencil_derivative_is_minus_b() {
        let b = m2([1.0, 2.0, 3.0, 4.0]);
        let t = MatFun::pencil(m2([5.0, 6.0, 7.0, 8.0]), b.clone()).unwrap();
        for z in [c64(0.0, 0.0), c64(1.5, -2.0), c64(-7.0, 3.0)] {
            assert_eq!(t.eval_deriv(z).unwrap(), -&b);
        }
    }

    #[test]
    fn sqrt_rejects_cut() {
        let t = MatFun::split(1, vec![Term::new(ScalarTerm::SqrtPrincipal, CMat::identity(1, 1))], Domain::WholePlane).unwrap();
        assert_eq!(t.domain(), &Domain::PlaneMinusRay);
        assert!(matches!(t.eval(c64(-1.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(t.eval(c64(0.0, 0.0)), Err(Error::Domain(_))));
        assert!(t.eval(c64(-1.0, 1e-300)).is_ok());
    }

    #[test]
    fn segment_crossing_cut() {
        let d = Domain::PlaneMinusRay;
        assert!(d.segment_leaves(c64(-1.0, 0.5), c64(-1.0, -0.5)));
        assert!(!d.segment_leaves(c64(1.0, 0.5), c64(1.0, -0.5)));
        assert!(!d.segment_leaves(c64(-1.0, 0.5), c64(-2.0, 0.5)));
    }

    #[test]
    fn parse_time_delay_form() {
        let text = r#"{"n": 2, "terms": [
            {"scalar": {"kind": "polynomial", "coeffs": [[0,0],[-1,0]]}, "matrix": [[[1,0],[0,0]],[[0,0],[1,0]]]},
            {"scalar": {"kind": "polynomial", "coeffs": [[1,0]]}, "matrix": [[[0,0],[1,0]],[[-2,0],[-3,0]]]},
            {"scalar": {"kind": "exp_scaled", "a": [-1,0]}, "matrix": [[[0,0],[0,0]],[[0,0],[5,0]]]}
        ]}"#;
        let t = parse_problem(text).unwrap();
        let z = c64(0.3, 0.2);
        let m = t.eval(z).unwrap();
        let expect = m2([0.0, 1.0, -2.0, -3.0]) - CMat::identity(2, 2) * z + m2([0.0, 0.0, 0.0, 5.0]) * (-z).exp();
        assert!((m - expect).norm() < 1e-15);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_problem(r#"{"n": 2, "terms": []}"#), Err(Error::Parse { .. })));
        let bad = r#"{"n": 3, "terms": [{"scalar": {"kind": "polynomial", "coeffs": [[1,0]]}, "matrix": [[[1,0],[0,0]],[[0,0],[1,0]]]}]}"#;
        assert!(matches!(parse_problem(bad), Err(Error::DimensionMismatch { .. })));
        let garbled = "{\"n\": 2,\n \"terms\": [";
        match parse_problem(garbled) {
            Err(Error::Parse { location, .. }) => assert!(location.contains("line 2")),
            other => panic!("unexpected {other:?}"),
        }
        let unknown = r#"{"n": 1, "terms": [{"scalar": {"kind": "gamma"}, "matrix": [[[1,0]]]}]}"#;
        match parse_problem(unknown) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "terms[0].scalar.kind"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn problem_json_roundtrip() {
        let t = MatFun::split(
            2,
            vec![
                Term::new(ScalarTerm::SqrtPrincipal, m2([1.0, 2.0, 3.0, 4.0])),
                Term::new(ScalarTerm::RationalPole(c64(2.0, 1.0)), m2([0.5, 0.0, 0.0, 1.0])),
            ],
            Domain::rectangle(c64(-3.0, -3.0), c64(3.0, 3.0)),
        )
        .unwrap();
        let back = parse_problem(&problem_json(&t).unwrap().to_string()).unwrap();
        let z = c64(0.7, -0.4);
        assert_eq!(t.eval(z).unwrap(), back.eval(z).unwrap());
        assert_eq!(t.domain(), back.domain());
    }

    #[test]
    fn combination_of_builtin_and_split() {
        let r = MatFun::resonance(ResonanceParams::default());
        let c = MatFun::split(6, vec![Term::new(ScalarTerm::one(), CMat::identity(6, 6))], Domain::WholePlane).unwrap();
        let s = r.add(&c).unwrap();
        let z = c64(1.3, -0.2);
        let diff = s.eval(z).unwrap() - r.eval(z).unwrap() - CMat::identity(6, 6);
        assert!(diff.norm() < 1e-14);
        let d = r.diagonal_part().eval(z).unwrap() + r.off_diagonal_part().eval(z).unwrap() - r.eval(z).unwrap();
        assert!(d.norm() == 0.0);
    }
}
