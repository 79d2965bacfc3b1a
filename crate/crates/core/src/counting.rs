//! Eigenvalue counting inside closed contours by the argument principle,
//! and the homotopy guard that transfers counts between two functions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{self, Component, RegionField, Rule};
use crate::linalg::{self, c64, CMat, C64};
use crate::matfun::MatFun;

/// Simple closed polygon, stored counterclockwise without repeating the
/// first vertex.
#[derive(Clone, Debug)]
pub struct Contour {
    vertices: Vec<C64>,
    id: String,
}

fn orient(a: C64, b: C64, c: C64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn on_segment(a: C64, b: C64, p: C64) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

/// Closed segments `[a, b]` and `[c, d]` share a point.
pub fn segments_intersect(a: C64, b: C64, c: C64, d: C64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

impl Contour {
    /// Validates simplicity; clockwise input is reversed.
    pub fn polygon(mut vertices: Vec<C64>, id: impl Into<String>) -> Result<Self> {
        if vertices.len() >= 2 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidArgument(format!("contour needs at least 3 vertices, got {n}")));
        }
        if vertices.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument("contour vertex is not finite".into()));
        }
        for k in 0..n {
            let (a, b) = (vertices[k], vertices[(k + 1) % n]);
            if a == b {
                return Err(Error::InvalidArgument(format!("repeated contour vertex {a}")));
            }
            // adjacent segments may only share their common vertex
            let c = vertices[(k + 2) % n];
            if orient(a, b, c) == 0.0 && (c - b).re * (a - b).re + (c - b).im * (a - b).im > 0.0 {
                return Err(Error::InvalidArgument(format!("contour folds back at {b}")));
            }
        }
        if n > 3 {
            for i in 0..n {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                for j in i + 2..n {
                    if i == 0 && j == n - 1 {
                        continue;
                    }
                    if segments_intersect(a, b, vertices[j], vertices[(j + 1) % n]) {
                        return Err(Error::InvalidArgument(format!("contour is not simple (segments {i} and {j} meet)")));
                    }
                }
            }
        }
        let area2: f64 = (0..n).map(|k| { let (a, b) = (vertices[k], vertices[(k + 1) % n]); a.re * b.im - b.re * a.im }).sum();
        if area2 < 0.0 {
            vertices.reverse();
        }
        Ok(Contour { vertices, id: id.into() })
    }

    pub fn circle(center: C64, r: f64, n: usize) -> Result<Self> {
        Contour::ellipse(center, r, r, n).map(|c| c.with_id(format!("circle:{},{},{}", center.re, center.im, r)))
    }

    pub fn ellipse(center: C64, rx: f64, ry: f64, n: usize) -> Result<Self> {
        if !(rx > 0.0 && ry > 0.0) {
            return Err(Error::InvalidArgument("ellipse radii must be positive".into()));
        }
        let v = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                center + c64(rx * t.cos(), ry * t.sin())
            })
            .collect();
        Contour::polygon(v, format!("ellipse:{},{},{},{}", center.re, center.im, rx, ry))
    }

    pub fn rectangle(lo: C64, hi: C64) -> Result<Self> {
        Contour::polygon(vec![lo, c64(hi.re, lo.im), hi, c64(lo.re, hi.im)], format!("rect:{},{},{},{}", lo.re, lo.im, hi.re, hi.im))
    }

    /// `circle:cx,cy,r`, `ellipse:cx,cy,rx,ry`, `rect:x0,y0,x1,y1`, or
    /// `poly:PATH` (JSON list of `[re, im]`).
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').ok_or_else(|| Error::InvalidArgument(format!("bad contour spec '{spec}'")))?;
        let nums = || -> Result<Vec<f64>> {
            rest.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad number '{s}' in contour spec"))))
                .collect()
        };
        match kind {
            "circle" => match nums()?.as_slice() {
                [cx, cy, r] => Contour::circle(c64(*cx, *cy), *r, 256),
                _ => Err(Error::InvalidArgument("circle needs cx,cy,r".into())),
            },
            "ellipse" => match nums()?.as_slice() {
                [cx, cy, rx, ry] => Contour::ellipse(c64(*cx, *cy), *rx, *ry, 512),
                _ => Err(Error::InvalidArgument("ellipse needs cx,cy,rx,ry".into())),
            },
            "rect" => match nums()?.as_slice() {
                [x0, y0, x1, y1] => Contour::rectangle(c64(*x0, *y0), c64(*x1, *y1)),
                _ => Err(Error::InvalidArgument("rect needs x0,y0,x1,y1".into())),
            },
            "poly" => {
                let text = std::fs::read_to_string(rest)?;
                let pts: Vec<[f64; 2]> = serde_json::from_str(&text)
                    .map_err(|e| Error::parse(format!("{rest}: line {} column {}", e.line(), e.column()), e.to_string()))?;
                Contour::polygon(pts.into_iter().map(|p| c64(p[0], p[1])).collect(), spec)
            }
            _ => Err(Error::InvalidArgument(format!("unknown contour kind '{kind}'"))),
        }
    }

    /// `{"id": ..., "vertices": [[re, im], ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"id": self.id, "vertices": grid::contours_json(std::slice::from_ref(&self.vertices))[0]})
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn vertices(&self) -> &[C64] {
        &self.vertices
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn segment(&self, k: usize) -> (C64, C64) {
        (self.vertices[k], self.vertices[(k + 1) % self.vertices.len()])
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn winding_number(&self, z: C64) -> i64 {
        grid::winding_number(&self.vertices, z)
    }

    /// Vertices plus `per_segment - 1` equispaced interior points per edge.
    pub fn sample_points(&self, per_segment: usize) -> Vec<C64> {
        let m = per_segment.max(1);
        (0..self.len())
            .flat_map(|k| {
                let (a, b) = self.segment(k);
                (0..m).map(move |i| a + (b - a) * (i as f64 / m as f64))
            })
            .collect()
    }

    /// Contour translated by `dz` at each vertex (same id).
    pub fn perturbed(&self, dz: &[C64]) -> Result<Self> {
        let v = self.vertices.iter().zip(dz).map(|(a, d)| a + d).collect();
        Contour::polygon(v, self.id.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    ArgDet,
    TraceQuadrature,
}

/// Result of a count. `count` is zeros minus poles enclosed (poles occur
/// only for rational terms).
#[derive(Clone, Debug, Serialize)]
pub struct CountCertificate {
    pub count: i64,
    pub method: CountMethod,
    pub min_margin: f64,
    pub residual: f64,
    pub contour_id: String,
    pub evaluations: usize,
}

/// Acceptance bounds.
pub const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_2;
/// Largest gap between a piece's phase step and the step predicted from
/// `tr(T^{-1} T')` at either end.
pub const MAX_RATE_MISMATCH: f64 = std::f64::consts::FRAC_PI_4;
pub const ARG_RESIDUAL_BOUND: f64 = 0.05;
pub const TRACE_RESIDUAL_BOUND: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct CountOptions {
    /// Bisection depth limit per edge piece.
    pub max_depth: usize,
    /// Pieces each edge is cut into before adaptive bisection.
    pub initial_pieces: usize,
    /// Absolute floor for `sigma_min` on the contour. Points where the
    /// row-equilibrated `T(z)` is numerically singular, or where `sigma_min`
    /// is below `n eps` times its geometric mean over the contour
    /// vertices, are always rejected.
    pub sigma_floor: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions { max_depth: 40, initial_pieces: 4, sigma_floor: 0.0 }
    }
}

struct PointEval {
    phase: C64,
    /// `tr(T^{-1} T')`, the logarithmic derivative of `det T`.
    log_deriv: C64,
    sigma: f64,
}

/// `n eps` times the geometric mean of `sigma_min` over the contour vertices.
fn contour_floor(t: &MatFun, contour: &Contour) -> Result<f64> {
    let norms: Vec<Result<f64>> = contour.vertices().par_iter().map(|&z| Ok(linalg::sigma_min(&t.eval(z)?))).collect();
    let mut log_sum = 0.0;
    for v in &norms {
        let x = *v.as_ref().map_err(Clone::clone)?;
        log_sum += x.max(f64::MIN_POSITIVE).ln();
    }
    Ok(t.dim() as f64 * f64::EPSILON * (log_sum / norms.len().max(1) as f64).exp())
}

fn eval_point(t: &MatFun, z: C64, floor: f64) -> Result<PointEval> {
    let m = t.eval(z)?;
    let sigma = linalg::sigma_min(&m);
    if !(sigma > floor) || linalg::numerically_singular(&m) {
        return Err(Error::SingularOnContour { z, sigma });
    }
    let d = linalg::det_polar(&m);
    if d.singular {
        return Err(Error::SingularOnContour { z, sigma });
    }
    let x = linalg::solve(&m, &t.eval_deriv(z)?).ok_or(Error::SingularOnContour { z, sigma })?;
    Ok(PointEval { phase: d.phase, log_deriv: x.trace(), sigma })
}

struct EdgeResult {
    total: f64,
    max_step: f64,
    min_sigma: f64,
    evals: usize,
}

fn edge_phase(t: &MatFun, a: C64, b: C64, opts: &CountOptions, floor: f64) -> Result<EdgeResult> {
    if t.domain().segment_leaves(a, b) {
        return Err(Error::Domain(if t.contains(a) { b } else { a }));
    }
    let pieces = opts.initial_pieces.max(1);
    let at = |s: f64| a + (b - a) * s;
    let mut res = EdgeResult { total: 0.0, max_step: 0.0, min_sigma: f64::INFINITY, evals: 0 };
    let mut p0 = eval_point(t, a, floor)?;
    res.evals += 1;
    res.min_sigma = p0.sigma;
    for k in 0..pieces {
        let (s0, s1) = (k as f64 / pieces as f64, (k + 1) as f64 / pieces as f64);
        let p1 = eval_point(t, at(s1), floor)?;
        res.evals += 1;
        res.min_sigma = res.min_sigma.min(p1.sigma);
        // explicit stack of (s_lo, eval_lo, s_hi, eval_hi, depth)
        let mut stack = vec![(s0, (p0.phase, p0.log_deriv), s1, (p1.phase, p1.log_deriv), 0usize)];
        while let Some((lo, plo, hi, phi, depth)) = stack.pop() {
            let step = (phi.0 / plo.0).arg();
            // phase change predicted by the tangent at each end
            let dz = (b - a) * (hi - lo);
            let consistent = [plo.1, phi.1].iter().all(|g| (g * dz).im.abs() < MAX_PHASE_STEP && ((g * dz).im - step).abs() < MAX_RATE_MISMATCH);
            if step.abs() < MAX_PHASE_STEP && consistent {
                res.total += step;
                res.max_step = res.max_step.max(step.abs());
                continue;
            }
            if depth >= opts.max_depth {
                return Err(Error::NoConvergence(format!("phase refinement depth exceeded near z = {}", at(lo))));
            }
            let mid = 0.5 * (lo + hi);
            let pm = eval_point(t, at(mid), floor)?;
            res.evals += 1;
            res.min_sigma = res.min_sigma.min(pm.sigma);
            // process the lower half first to keep a deterministic order
            stack.push((mid, (pm.phase, pm.log_deriv), hi, phi, depth + 1));
            stack.push((lo, plo, mid, (pm.phase, pm.log_deriv), depth + 1));
        }
        p0 = p1;
    }
    Ok(res)
}

/// Winding number of `det T` along the contour by phase accumulation.
pub fn count_arg_det(t: &MatFun, contour: &Contour, opts: &CountOptions) -> Result<CountCertificate> {
    let floor = contour_floor(t, contour)?.max(opts.sigma_floor);
    let edges: Vec<Result<EdgeResult>> =
        (0..contour.len()).into_par_iter().map(|k| { let (a, b) = contour.segment(k); edge_phase(t, a, b, opts, floor) }).collect();
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    let mut min_sigma = f64::INFINITY;
    let mut evals = 0;
    for e in edges {
        let e = e?;
        total += e.total;
        max_step = max_step.max(e.max_step);
        min_sigma = min_sigma.min(e.min_sigma);
        evals += e.evals;
    }
    let raw = total / (2.0 * std::f64::consts::PI);
    let count = raw.round();
    if (raw - count).abs() >= ARG_RESIDUAL_BOUND {
        return Err(Error::NoConvergence(format!("accumulated phase {raw} is not integral")));
    }
    Ok(CountCertificate {
        count: count as i64,
        method: CountMethod::ArgDet,
        min_margin: min_sigma,
        residual: max_step,
        contour_id: contour.id.clone(),
        evaluations: evals,
    })
}

/// `(1 / 2 pi i) oint tr(T^{-1} T') dz` by Gauss-Legendre on every edge,
/// doubling panels until the result is within the residual bound of an
/// integer.
pub fn count_trace(t: &MatFun, contour: &Contour, panels: usize, order: usize, max_panels: usize) -> Result<CountCertificate> {
    let (x, w) = linalg::gauss_legendre(order.max(1));
    let mut panels = panels.max(1);
    let mut evals = 0;
    for k in 0..contour.len() {
        let (a, b) = contour.segment(k);
        if t.domain().segment_leaves(a, b) {
            return Err(Error::Domain(a));
        }
    }
    let floor = contour_floor(t, contour)?;
    loop {
        let mut nodes = Vec::new();
        for k in 0..contour.len() {
            let (a, b) = contour.segment(k);
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let pa = a + h * p as f64;
                for (xi, wi) in x.iter().zip(&w) {
                    nodes.push((pa + h * (0.5 * (xi + 1.0)), h * (0.5 * wi)));
                }
            }
        }
        let vals: Vec<Result<(C64, f64)>> = nodes
            .par_iter()
            .map(|&(z, dz)| {
                let m = t.eval(z)?;
                let sigma = linalg::sigma_min(&m);
                if !(sigma > floor) || linalg::numerically_singular(&m) {
                    return Err(Error::SingularOnContour { z, sigma });
                }
                let dm = t.eval_deriv(z)?;
                let x = linalg::solve(&m, &dm).ok_or(Error::SingularOnContour { z, sigma })?;
                Ok((x.trace() * dz, sigma))
            })
            .collect();
        evals += nodes.len();
        let mut sum = c64(0.0, 0.0);
        let mut min_sigma = f64::INFINITY;
        for v in vals {
            let (s, sigma) = v?;
            sum += s;
            min_sigma = min_sigma.min(sigma);
        }
        let raw = sum / c64(0.0, 2.0 * std::f64::consts::PI);
        let count = raw.re.round();
        let residual = (raw - count).norm();
        if residual < TRACE_RESIDUAL_BOUND {
            return Ok(CountCertificate {
                count: count as i64,
                method: CountMethod::TraceQuadrature,
                min_margin: min_sigma,
                residual,
                contour_id: contour.id.clone(),
                evaluations: evals,
            });
        }
        if panels * 2 > max_panels {
            return Err(Error::NoConvergence(format!("trace quadrature residual {residual:.3e} at {panels} panels per edge")));
        }
        panels *= 2;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GuardReport {
    pub passed: bool,
    /// Smallest `sigma_min` of the row-equilibrated `D + sE` over the
    /// evaluated cell centers.
    pub min_margin: f64,
    pub threshold: f64,
    /// Failing cell, or the smallest margin when passed.
    pub worst_s: f64,
    pub worst_z: [f64; 2],
    /// `sigma_min` at the failing cell center.
    pub failed_sigma: Option<f64>,
    /// Cells of `[0, 1] x Gamma` evaluated.
    pub cells: usize,
}

#[derive(Clone, Debug)]
pub struct GuardOptions {
    /// Initial `s` samples (cells along `[0, 1]` are `s_samples - 1`).
    pub s_samples: usize,
    /// Initial cells along each contour edge.
    pub points_per_segment: usize,
    /// Fails outright when `sigma_min` of the row-equilibrated `D + sE` is
    /// at most this.
    pub rel_threshold: f64,
    /// Bisection depth limit per initial cell.
    pub max_depth: usize,
}

impl Default for GuardOptions {
    fn default() -> Self {
        GuardOptions { s_samples: 11, points_per_segment: 2, rel_threshold: 1e-10, max_depth: 24 }
    }
}

/// Safety factor on the first-order variation bound of a cell.
const GUARD_SAFETY: f64 = 1.5;

/// `(D, E, D', E')` at `z`.
type Quad = (CMat, CMat, CMat, CMat);

struct GuardCell {
    s0: f64,
    s1: f64,
    z0: C64,
    z1: C64,
    depth: usize,
}

struct CellOutcome {
    sigma: f64,
    s: f64,
    z: C64,
    evaluated: usize,
    failed: Option<f64>,
}

/// Certifies one initial cell by bisection. With `W` the row equilibration
/// of `M = D + sE` at the cell center (fixed over the cell, so it does not
/// change singularity), a cell passes when `sigma_min(W M)` exceeds the
/// bound `||W E|| ds / 2 + ||W (D' + sE')|| |dz| / 2` (times a safety
/// factor) on its variation across the cell.
fn guard_cell<F>(first: GuardCell, opts: &GuardOptions, quad: &F) -> Result<CellOutcome>
where
    F: Fn(C64) -> Result<Quad>,
{
    let mut out = CellOutcome { sigma: f64::INFINITY, s: 0.0, z: first.z0, evaluated: 0, failed: None };
    let mut stack = vec![first];
    while let Some(c) = stack.pop() {
        let (sc, zc) = (0.5 * (c.s0 + c.s1), (c.z0 + c.z1) * 0.5);
        let (d, e, dd, de) = quad(zc)?;
        let mut m = &d + &e * c64(sc, 0.0);
        let mut e = e;
        let mut dm = dd + de * c64(sc, 0.0);
        for i in 0..m.nrows() {
            let r = m.row(i).norm();
            if r > 0.0 && r.is_finite() {
                let w = c64(1.0 / r, 0.0);
                m.row_mut(i).scale_mut(1.0 / r);
                e.row_mut(i).iter_mut().for_each(|x| *x *= w);
                dm.row_mut(i).iter_mut().for_each(|x| *x *= w);
            }
        }
        let sigma = linalg::sigma_min(&m);
        out.evaluated += 1;
        if sigma < out.sigma {
            out.sigma = sigma;
            out.s = sc;
            out.z = zc;
        }
        let fail = |out: &mut CellOutcome| {
            out.failed = Some(sigma);
            out.s = sc;
            out.z = zc;
        };
        if !(sigma > opts.rel_threshold) {
            fail(&mut out);
            return Ok(out);
        }
        let ds_term = linalg::norm2(&e) * 0.5 * (c.s1 - c.s0);
        let dz_term = linalg::norm2(&dm) * 0.5 * (c.z1 - c.z0).norm();
        if sigma > GUARD_SAFETY * (ds_term + dz_term) {
            continue;
        }
        if c.depth >= opts.max_depth {
            fail(&mut out);
            return Ok(out);
        }
        let depth = c.depth + 1;
        if ds_term >= dz_term {
            stack.push(GuardCell { s0: sc, depth, ..c });
            stack.push(GuardCell { s1: sc, depth, ..c });
        } else {
            stack.push(GuardCell { z0: zc, depth, ..c });
            stack.push(GuardCell { z1: zc, depth, ..c });
        }
    }
    Ok(out)
}

fn guard_from_values<F>(contour: &Contour, opts: &GuardOptions, quad: F) -> Result<GuardReport>
where
    F: Fn(C64) -> Result<Quad> + Sync,
{
    let ns = opts.s_samples.max(2) - 1;
    let nz = opts.points_per_segment.max(1);
    let mut cells = Vec::with_capacity(contour.len() * ns * nz);
    for k in 0..contour.len() {
        let (a, b) = contour.segment(k);
        for p in 0..nz {
            let (z0, z1) = (a + (b - a) * (p as f64 / nz as f64), a + (b - a) * ((p + 1) as f64 / nz as f64));
            for i in 0..ns {
                cells.push(GuardCell { s0: i as f64 / ns as f64, s1: (i + 1) as f64 / ns as f64, z0, z1, depth: 0 });
            }
        }
    }
    let results: Vec<Result<CellOutcome>> = cells.into_par_iter().map(|c| guard_cell(c, opts, &quad)).collect();
    let mut rep = GuardReport { passed: true, min_margin: f64::INFINITY, threshold: 0.0, worst_s: 0.0, worst_z: [0.0, 0.0], failed_sigma: None, cells: 0 };
    let mut failed_at = None;
    for r in results {
        let r = r?;
        rep.cells += r.evaluated;
        rep.min_margin = rep.min_margin.min(r.sigma);
        if let (Some(fs), None) = (r.failed, failed_at) {
            failed_at = Some((r.s, r.z, fs));
        }
        if failed_at.is_none() && r.sigma <= rep.min_margin {
            rep.worst_s = r.s;
            rep.worst_z = [r.z.re, r.z.im];
        }
    }
    if let Some((s, z, fs)) = failed_at {
        rep.passed = false;
        rep.failed_sigma = Some(fs);
        rep.worst_s = s;
        rep.worst_z = [z.re, z.im];
    }
    rep.threshold = opts.rel_threshold;
    Ok(rep)
}

/// Checks that `D(z) + s E(z)` stays nonsingular for `s` in `[0, 1]` and `z`
/// on the contour, by adaptive bisection of `[0, 1] x Gamma` against a
/// first-order bound on the variation of `sigma_min`.
pub fn homotopy_guard(d: &MatFun, e: &MatFun, contour: &Contour, opts: &GuardOptions) -> Result<GuardReport> {
    guard_from_values(contour, opts, |z| Ok((d.eval(z)?, e.eval(z)?, d.eval_deriv(z)?, e.eval_deriv(z)?)))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairCertificate {
    pub n_t: i64,
    pub n_reference: i64,
    pub guard: GuardReport,
    pub t: CountCertificate,
    pub reference: CountCertificate,
}

/// Guard on the path from `reference` to `t`, then count both.
pub fn certify_contour(t: &MatFun, reference: &MatFun, contour: &Contour, guard: &GuardOptions, count: &CountOptions) -> Result<PairCertificate> {
    let g = guard_from_values(contour, guard, |z| {
        let r = reference.eval(z)?;
        let e = t.eval(z)? - &r;
        let dr = reference.eval_deriv(z)?;
        let de = t.eval_deriv(z)? - &dr;
        Ok((r, e, dr, de))
    })?;
    if !g.passed {
        let sigma = g.failed_sigma.unwrap_or(g.min_margin);
        return Err(Error::GuardFailed { z: c64(g.worst_z[0], g.worst_z[1]), sigma, threshold: g.threshold });
    }
    let ct = count_arg_det(t, contour, count)?;
    let cr = count_arg_det(reference, contour, count)?;
    Ok(PairCertificate { n_t: ct.count, n_reference: cr.count, guard: g, t: ct, reference: cr })
}

/// Certified counts for an unflagged component of a Gershgorin `field`
/// (membership `value >= 0`).
///
/// The level-set polygon is tried first. When the guard rejects it (the
/// component is thinner than the grid resolves), rectangles around the
/// component padded by 1 to [`MAX_BOX_PAD`] cells are tried, skipping any
/// that hold masked points or member points of other components.
pub fn certify_component(t: &MatFun, reference: &MatFun, field: &RegionField, comp: &Component) -> Result<(Contour, PairCertificate)> {
    let poly = grid::extract_contour(field, comp)?;
    let contour = Contour::polygon(poly, format!("component-{}", comp.id))?;
    let (guard, count) = (GuardOptions::default(), CountOptions::default());
    let first = match certify_contour(t, reference, &contour, &guard, &count) {
        Ok(cert) => return Ok((contour, cert)),
        Err(e @ Error::GuardFailed { .. }) => e,
        Err(e) => return Err(e),
    };
    for pad in 1..=MAX_BOX_PAD {
        let Some(rect) = padded_box(field, comp, pad) else { break };
        let rect = rect.with_id(format!("component-{}-box{pad}", comp.id));
        match certify_contour(t, reference, &rect, &guard, &count) {
            Ok(cert) => return Ok((rect, cert)),
            Err(Error::GuardFailed { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(first)
}

/// Largest padding, in cells, of the fallback rectangles.
pub const MAX_BOX_PAD: usize = 4;

/// Rectangle through the grid points `pad` cells outside the component's index
/// box, or `None` if it leaves the grid or encloses foreign points.
fn padded_box(field: &RegionField, comp: &Component, pad: usize) -> Option<Contour> {
    let g = &field.grid;
    let (mut i0, mut j0, mut i1, mut j1) = (usize::MAX, usize::MAX, 0, 0);
    for &c in &comp.cells {
        let (i, j) = g.coords(c);
        (i0, j0, i1, j1) = (i0.min(i), j0.min(j), i1.max(i), j1.max(j));
    }
    if i0 < pad || j0 < pad || i1 + pad >= g.nx || j1 + pad >= g.ny {
        return None;
    }
    let (i0, j0, i1, j1) = (i0 - pad, j0 - pad, i1 + pad, j1 + pad);
    for j in j0..=j1 {
        for i in i0..=i1 {
            let idx = g.index(i, j);
            if !field.mask[idx] || (field.member(idx, Rule::AtLeast(0.0)) && comp.cells.binary_search(&idx).is_err()) {
                return None;
            }
        }
    }
    Contour::rectangle(g.point(i0, j0), g.point(i1, j1)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::{Domain, ScalarTerm, Term};

    fn zpoly() -> ScalarTerm {
        ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(1.0, 0.0)])
    }

    fn zi(n: usize) -> MatFun {
        MatFun::split(n, vec![Term::new(zpoly(), CMat::identity(n, n))], Domain::WholePlane).unwrap()
    }

    #[test]
    fn polygon_validation() {
        let sq = vec![c64(0.0, 0.0), c64(0.0, 1.0), c64(1.0, 1.0), c64(1.0, 0.0)];
        let c = Contour::polygon(sq, "sq").unwrap();
        assert_eq!(c.winding_number(c64(0.5, 0.5)), 1);
        let bow = vec![c64(0.0, 0.0), c64(1.0, 1.0), c64(1.0, 0.0), c64(0.0, 1.0)];
        assert!(Contour::polygon(bow, "bow").is_err());
        assert!(Contour::polygon(vec![c64(0.0, 0.0), c64(1.0, 0.0)], "x").is_err());
    }

    #[test]
    fn counts_z_identity() {
        let c = Contour::circle(c64(0.0, 0.0), 1.0, 64).unwrap();
        let a = count_arg_det(&zi(2), &c, &CountOptions::default()).unwrap();
        assert_eq!(a.count, 2);
        assert!(a.residual < MAX_PHASE_STEP);
        let t = count_trace(&zi(2), &c, 8, 10, 1024).unwrap();
        assert_eq!(t.count, 2);
    }

    #[test]
    fn exp_minus_one_zeros() {
        let t = MatFun::split(2, vec![Term::new(ScalarTerm::ExpMinusOne(c64(1.0, 0.0)), CMat::identity(2, 2))], Domain::WholePlane).unwrap();
        let scalar = MatFun::split(1, vec![Term::new(ScalarTerm::ExpMinusOne(c64(1.0, 0.0)), CMat::identity(1, 1))], Domain::WholePlane).unwrap();
        for (center, expect) in [(c64(0.0, 0.0), 1), (c64(0.0, 2.0 * std::f64::consts::PI), 1), (c64(3.0, 0.0), 0)] {
            let c = Contour::circle(center, 1.0, 128).unwrap();
            assert_eq!(count_arg_det(&scalar, &c, &CountOptions::default()).unwrap().count, expect);
            assert_eq!(count_arg_det(&t, &c, &CountOptions::default()).unwrap().count, 2 * expect);
        }
    }

    #[test]
    fn equal_end_phases_do_not_alias() {
        // z^20 has the same phase at both ends of every edge of this square
        let mut coeffs = vec![c64(0.0, 0.0); 21];
        coeffs[20] = c64(1.0, 0.0);
        let t = MatFun::split(1, vec![Term::new(ScalarTerm::Polynomial(coeffs), CMat::identity(1, 1))], Domain::WholePlane).unwrap();
        let sq = Contour::rectangle(c64(-1.0, -1.0), c64(1.0, 1.0)).unwrap();
        let opts = CountOptions { initial_pieces: 1, ..CountOptions::default() };
        assert_eq!(count_arg_det(&t, &sq, &opts).unwrap().count, 20);
    }

    #[test]
    fn singular_on_contour_reported() {
        let c = Contour::circle(c64(0.0, 0.0), 1.0, 4).unwrap();
        let t = MatFun::split(
            1,
            vec![Term::new(ScalarTerm::Polynomial(vec![c64(-1.0, 0.0), c64(1.0, 0.0)]), CMat::identity(1, 1))],
            Domain::WholePlane,
        )
        .unwrap();
        assert!(matches!(count_arg_det(&t, &c, &CountOptions::default()), Err(Error::SingularOnContour { .. })));
    }

    #[test]
    fn guard_detects_crossing() {
        let two = MatFun::split(2, vec![Term::new(ScalarTerm::one(), CMat::identity(2, 2) * c64(2.0, 0.0))], Domain::WholePlane).unwrap();
        let c = Contour::circle(c64(0.0, 0.0), 1.0, 64).unwrap();
        let g = homotopy_guard(&zi(2), &two, &c, &GuardOptions::default()).unwrap();
        assert!(!g.passed);
        assert!((g.worst_s - 0.5).abs() < 1e-3, "{g:?}");
        assert!((c64(g.worst_z[0], g.worst_z[1]) + 1.0).norm() < 1e-2, "{g:?}");
        let zero = MatFun::split(2, vec![Term::new(ScalarTerm::one(), CMat::zeros(2, 2))], Domain::WholePlane).unwrap();
        assert!(homotopy_guard(&zi(2), &zero, &c, &GuardOptions::default()).unwrap().passed);
    }
}
