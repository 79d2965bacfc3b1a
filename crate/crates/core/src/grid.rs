//! Indicator fields on rectangular grids, connected components, and
//! component boundary contours.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, C64};
use crate::matfun::{Domain, MatFun};

/// Uniform grid; point `(i, j)` has index `j * nx + i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let finite = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite());
        if !finite || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidArgument(format!(
                "grid axes must be finite and increasing: [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points per axis, got {nx} x {ny}")));
        }
        Ok(Grid { re_min, re_max, im_min, im_max, nx, ny })
    }

    /// Parses `re0,re1,im0,im1,nx,ny`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(Error::InvalidArgument(format!("grid spec needs 6 fields, got '{spec}'")));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad grid number '{s}'")));
        let u = |s: &str| s.parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad grid count '{s}'")));
        Grid::new(f(parts[0])?, f(parts[1])?, f(parts[2])?, f(parts[3])?, u(parts[4])?, u(parts[5])?)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        (self.re_max - self.re_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.im_max - self.im_min) / (self.ny - 1) as f64
    }

    pub fn re(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.re_max
        } else {
            self.re_min + i as f64 * self.hx()
        }
    }

    pub fn im(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.im_max
        } else {
            self.im_min + j as f64 * self.hy()
        }
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        c64(self.re(i), self.im(j))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn point_at(&self, idx: usize) -> C64 {
        let (i, j) = self.coords(idx);
        self.point(i, j)
    }

    /// Index of the grid point nearest to `z` (clamped to the grid).
    pub fn nearest(&self, z: C64) -> usize {
        let i = ((z.re - self.re_min) / self.hx()).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((z.im - self.im_min) / self.hy()).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        self.index(i, j)
    }

    pub fn refined(&self) -> Grid {
        Grid { nx: 2 * self.nx - 1, ny: 2 * self.ny - 1, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    Gershgorin { alpha: f64 },
    SigmaMin,
    PertNorm,
    Custom { label: String },
}

/// Sampled indicator. `values` holds the scalar indicator (union margin
/// `max_j g_j`, `sigma_min`, or a norm); `per_row` holds the Gershgorin
/// margins for each row when present. Masked points hold NaN.
#[derive(Clone, Debug)]
pub struct RegionField {
    pub grid: Grid,
    pub kind: FieldKind,
    pub values: Vec<f64>,
    pub per_row: Option<Vec<Vec<f64>>>,
    pub mask: Vec<bool>,
    pub domain: Domain,
}

/// Membership rule for components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rule {
    /// `value >= level`; Gershgorin membership is `AtLeast(0.0)`.
    AtLeast(f64),
    /// `value < level`; pseudospectral membership is `Below(eps)`.
    Below(f64),
}

impl Rule {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Rule::AtLeast(l) => v >= l,
            Rule::Below(l) => v < l,
        }
    }
}

impl RegionField {
    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn member(&self, idx: usize, rule: Rule) -> bool {
        self.mask[idx] && rule.holds(self.values[idx])
    }

    /// Default rule for the field kind (`eps` used for sigma_min / norm fields).
    pub fn default_rule(&self, eps: f64) -> Rule {
        match self.kind {
            FieldKind::Gershgorin { .. } => Rule::AtLeast(0.0),
            _ => Rule::Below(eps),
        }
    }

    /// Field restricted to row `j` of the Gershgorin payload.
    pub fn row_field(&self, row: usize) -> Option<RegionField> {
        let per = self.per_row.as_ref()?;
        let values = per.iter().map(|v| v.get(row).copied().unwrap_or(f64::NAN)).collect();
        Some(RegionField { values, per_row: None, ..self.clone() })
    }

    /// Pointwise combination of two fields on the same grid (masks and'ed).
    pub fn combine(&self, other: &RegionField, kind: FieldKind, f: impl Fn(f64, f64) -> f64) -> Result<RegionField> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        let mask: Vec<bool> = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .zip(&mask)
            .map(|((a, b), m)| if *m { f(*a, *b) } else { f64::NAN })
            .collect();
        Ok(RegionField {
            grid: self.grid.clone(),
            kind,
            values,
            per_row: None,
            mask,
            domain: self.domain.intersect(&other.domain),
        })
    }

    /// CSV with header `re,im,value`, row-major.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 72);
        s.push_str("re,im,value\n");
        for (idx, v) in self.values.iter().enumerate() {
            let z = self.grid.point_at(idx);
            let _ = writeln!(s, "{},{},{}", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(*v));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "grid": self.grid,
            "kind": self.kind,
            "values": self.values.iter().map(|v| json_f64(*v)).collect::<Vec<_>>(),
            "per_row": self.per_row.as_ref().map(|p| p.iter().map(|r| r.iter().map(|v| json_f64(*v)).collect::<Vec<_>>()).collect::<Vec<_>>()),
            "mask": self.mask,
        })
    }
}

/// Seventeen significant digits; `nan`/`inf` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Evaluates `f` at every grid point in parallel; `None` masks the point.
pub fn sample<F>(grid: &Grid, domain: &Domain, f: F) -> (Vec<f64>, Vec<bool>)
where
    F: Fn(C64) -> Option<f64> + Sync,
{
    let out: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let z = grid.point_at(idx);
            if domain.contains(z) {
                f(z)
            } else {
                None
            }
        })
        .collect();
    let mask = out.iter().map(Option::is_some).collect();
    let values = out.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    (values, mask)
}

/// `r^alpha c^(1-alpha) - |d|` with `0^0 = 1`.
pub fn gershgorin_margin(d: C64, r: f64, c: f64, alpha: f64) -> f64 {
    r.powf(alpha) * c.powf(1.0 - alpha) - d.norm()
}

/// Per-row margins for a diagonal `d` and off-split `e` (diagonal of `e`
/// included in the sums).
pub fn margins(d: &[C64], e: &CMat, alpha: f64) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .map(|j| {
            let r: f64 = (0..n).map(|k| e[(j, k)].norm()).sum();
            let c: f64 = (0..n).map(|i| e[(i, j)].norm()).sum();
            gershgorin_margin(d[j], r, c, alpha)
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")))
    }
}

fn margin_field<F>(grid: &Grid, domain: &Domain, alpha: f64, split: F) -> RegionField
where
    F: Fn(C64) -> Option<(Vec<C64>, CMat)> + Sync,
{
    let out: Vec<Option<Vec<f64>>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let z = grid.point_at(idx);
            if !domain.contains(z) {
                return None;
            }
            split(z).map(|(d, e)| margins(&d, &e, alpha))
        })
        .collect();
    let mask: Vec<bool> = out.iter().map(Option::is_some).collect();
    let values = out
        .iter()
        .map(|m| m.as_ref().map_or(f64::NAN, |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
        .collect();
    let per_row = out.into_iter().map(|m| m.unwrap_or_default()).collect();
    RegionField {
        grid: grid.clone(),
        kind: FieldKind::Gershgorin { alpha },
        values,
        per_row: Some(per_row),
        mask,
        domain: domain.clone(),
    }
}

/// Generalized Gershgorin margins of `T = diag(T) + E`.
pub fn gershgorin_field(t: &MatFun, grid: &Grid, alpha: f64) -> Result<RegionField> {
    check_alpha(alpha)?;
    Ok(margin_field(grid, t.domain(), alpha, |z| t.diagonal_split(z).ok()))
}

/// Gershgorin margins for an explicit split `T = D + E` with `D` diagonal.
pub fn gershgorin_field_split(d: &MatFun, e: &MatFun, grid: &Grid, alpha: f64) -> Result<RegionField> {
    check_alpha(alpha)?;
    if d.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: d.dim(), found: e.dim(), context: "Gershgorin split".into() });
    }
    let domain = d.domain().intersect(e.domain());
    Ok(margin_field(grid, &domain, alpha, |z| {
        let dm = d.eval(z).ok()?;
        let em = e.eval(z).ok()?;
        Some(((0..dm.nrows()).map(|i| dm[(i, i)]).collect(), em))
    }))
}

pub fn sigma_min_field(t: &MatFun, grid: &Grid) -> RegionField {
    let (values, mask) = sample(grid, t.domain(), |z| t.eval(z).ok().map(|m| linalg::sigma_min(&m)));
    RegionField { grid: grid.clone(), kind: FieldKind::SigmaMin, values, per_row: None, mask, domain: t.domain().clone() }
}

pub fn pert_norm_field(e: &MatFun, grid: &Grid) -> RegionField {
    let (values, mask) = sample(grid, e.domain(), |z| e.eval(z).ok().map(|m| linalg::norm2(&m)));
    RegionField { grid: grid.clone(), kind: FieldKind::PertNorm, values, per_row: None, mask, domain: e.domain().clone() }
}

/// Scalar field from an arbitrary pointwise function.
pub fn custom_field<F>(grid: &Grid, domain: &Domain, label: &str, f: F) -> RegionField
where
    F: Fn(C64) -> Option<f64> + Sync,
{
    let (values, mask) = sample(grid, domain, f);
    RegionField {
        grid: grid.clone(),
        kind: FieldKind::Custom { label: label.to_string() },
        values,
        per_row: None,
        mask,
        domain: domain.clone(),
    }
}

// ---------------------------------------------------------------------------
// Components

#[derive(Clone, Debug, Default, Serialize)]
pub struct ComponentCounts {
    pub n_t: usize,
    pub n_reference: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub id: usize,
    /// Grid point indices, ascending.
    pub cells: Vec<usize>,
    pub touches_grid_border: bool,
    pub touches_domain_exclusion: bool,
    pub counts: Option<ComponentCounts>,
}

impl Component {
    pub fn flagged(&self) -> bool {
        self.touches_grid_border || self.touches_domain_exclusion
    }

    pub fn contains_point(&self, grid: &Grid, z: C64) -> bool {
        self.cells.binary_search(&grid.nearest(z)).is_ok()
    }
}

const N4: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const N8: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

fn neighbor(grid: &Grid, i: usize, j: usize, d: (i64, i64)) -> Option<(usize, usize)> {
    let ni = i as i64 + d.0;
    let nj = j as i64 + d.1;
    if ni < 0 || nj < 0 || ni >= grid.nx as i64 || nj >= grid.ny as i64 {
        None
    } else {
        Some((ni as usize, nj as usize))
    }
}

/// 4-connected components of member points. Links whose segment leaves the
/// domain are cut; contact with masked points or cut links sets
/// `touches_domain_exclusion`.
pub fn components(field: &RegionField, rule: Rule) -> Vec<Component> {
    let g = &field.grid;
    let member: Vec<bool> = (0..g.len()).map(|idx| field.member(idx, rule)).collect();
    let mut label = vec![usize::MAX; g.len()];
    let mut out = Vec::new();
    for start in 0..g.len() {
        if !member[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut cells = Vec::new();
        let mut border = false;
        let mut excl = false;
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(idx) = queue.pop_front() {
            cells.push(idx);
            let (i, j) = g.coords(idx);
            let z = g.point(i, j);
            if i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1 {
                border = true;
            }
            for d in N8 {
                let Some((ni, nj)) = neighbor(g, i, j, d) else { continue };
                let nidx = g.index(ni, nj);
                let leaves = field.domain.segment_leaves(z, g.point(ni, nj));
                if !field.mask[nidx] || leaves {
                    excl = true;
                    continue;
                }
                if N4.contains(&d) && member[nidx] && label[nidx] == usize::MAX {
                    label[nidx] = id;
                    queue.push_back(nidx);
                }
            }
        }
        cells.sort_unstable();
        out.push(Component { id, cells, touches_grid_border: border, touches_domain_exclusion: excl, counts: None });
    }
    out
}

/// Closed counterclockwise boundary of the component's cell union (each
/// point owns the `hx x hy` rectangle centred on it). Holes are filled and
/// diagonal pinches widened so the loop is simple; the polyline therefore
/// runs half a cell outside the member points.
pub fn extract_contour(field: &RegionField, comp: &Component) -> Result<Vec<C64>> {
    if comp.flagged() {
        return Err(Error::FlaggedComponent);
    }
    let g = &field.grid;
    // padded occupancy, index (i + 1, j + 1)
    let (w, h) = (g.nx + 2, g.ny + 2);
    let mut filled = vec![false; w * h];
    for &idx in &comp.cells {
        let (i, j) = g.coords(idx);
        filled[(j + 1) * w + i + 1] = true;
    }
    loop {
        // exterior = complement cells reachable from the padding
        let mut ext = vec![false; w * h];
        let mut queue = VecDeque::from([0usize]);
        ext[0] = true;
        while let Some(p) = queue.pop_front() {
            let (x, y) = (p % w, p / w);
            for (dx, dy) in N4 {
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                if !filled[q] && !ext[q] {
                    ext[q] = true;
                    queue.push_back(q);
                }
            }
        }
        for (f, e) in filled.iter_mut().zip(&ext) {
            *f = !e;
        }
        // widen diagonal pinches
        let mut changed = false;
        for y in 0..h - 1 {
            for x in 0..w - 1 {
                let a = filled[y * w + x];
                let b = filled[y * w + x + 1];
                let c = filled[(y + 1) * w + x];
                let d = filled[(y + 1) * w + x + 1];
                if a && d && !b && !c {
                    filled[y * w + x + 1] = true;
                    changed = true;
                } else if b && c && !a && !d {
                    filled[y * w + x] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if filled[..w].iter().any(|&f| f) || filled[(h - 1) * w..].iter().any(|&f| f) || (0..h).any(|y| filled[y * w] || filled[y * w + w - 1]) {
        return Err(Error::FlaggedComponent);
    }
    // directed boundary edges between corners; corner (p, q) sits at the
    // lower-left of padded cell (p, q)
    let mut next: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if !filled[y * w + x] {
                continue;
            }
            if !filled[(y - 1) * w + x] {
                next.insert((x, y), (x + 1, y));
            }
            if !filled[y * w + x + 1] {
                next.insert((x + 1, y), (x + 1, y + 1));
            }
            if !filled[(y + 1) * w + x] {
                next.insert((x + 1, y + 1), (x, y + 1));
            }
            if !filled[y * w + x - 1] {
                next.insert((x, y + 1), (x, y));
            }
        }
    }
    let start = *next.keys().min().ok_or(Error::FlaggedComponent)?;
    let mut corners = vec![start];
    let mut cur = next[&start];
    while cur != start {
        corners.push(cur);
        cur = *next.get(&cur).ok_or_else(|| Error::NoConvergence("open boundary trace".into()))?;
        if corners.len() > next.len() {
            return Err(Error::NoConvergence("boundary trace did not close".into()));
        }
    }
    if corners.len() != next.len() {
        return Err(Error::NoConvergence("component boundary is not a single loop".into()));
    }
    // drop collinear corners
    let nc = corners.len();
    let mut keep = Vec::with_capacity(nc);
    for k in 0..nc {
        let a = corners[(k + nc - 1) % nc];
        let b = corners[k];
        let c = corners[(k + 1) % nc];
        let d1 = (b.0 as i64 - a.0 as i64, b.1 as i64 - a.1 as i64);
        let d2 = (c.0 as i64 - b.0 as i64, c.1 as i64 - b.1 as i64);
        if d1 != d2 {
            keep.push(b);
        }
    }
    let (hx, hy) = (g.hx(), g.hy());
    let poly: Vec<C64> = keep
        .into_iter()
        .map(|(p, q)| c64(g.re_min + (p as f64 - 1.5) * hx, g.im_min + (q as f64 - 1.5) * hy))
        .collect();
    let np = poly.len();
    for k in 0..np {
        if field.domain.segment_leaves(poly[k], poly[(k + 1) % np]) {
            return Err(Error::FlaggedComponent);
        }
    }
    Ok(poly)
}

/// Winding number of a closed polygon about `z` (0 when `z` is on it).
pub fn winding_number(poly: &[C64], z: C64) -> i64 {
    let n = poly.len();
    let mut wn = 0i64;
    for k in 0..n {
        let a = poly[k] - z;
        let b = poly[(k + 1) % n] - z;
        let cross = a.re * b.im - a.im * b.re;
        if a.im <= 0.0 {
            if b.im > 0.0 && cross > 0.0 {
                wn += 1;
            }
        } else if b.im <= 0.0 && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

pub fn contours_json(polys: &[Vec<C64>]) -> Value {
    Value::Array(polys.iter().map(|p| Value::Array(p.iter().map(|z| json!([z.re, z.im])).collect())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::{ScalarTerm, Term};

    fn example1() -> MatFun {
        let z = ScalarTerm::Polynomial(vec![c64(0.0, 0.0), c64(1.0, 0.0)]);
        let a0 = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let a1 = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        MatFun::split(2, vec![Term::new(ScalarTerm::one(), a0), Term::new(z, a1)], Domain::WholePlane).unwrap()
    }

    #[test]
    fn grid_indexing() {
        let g = Grid::parse("-2,2,-1,1,5,3").unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g.point(4, 2), c64(2.0, 1.0));
        assert_eq!(g.coords(g.index(3, 1)), (3, 1));
        assert!(Grid::parse("1,0,0,1,3,3").is_err());
        assert!(Grid::parse("0,1,0,1,1,3").is_err());
    }

    #[test]
    fn example1_union_shape() {
        let g = Grid::new(-2.0, 2.0, -2.0, 2.0, 41, 41).unwrap();
        let f = gershgorin_field(&example1(), &g, 1.0).unwrap();
        for idx in 0..g.len() {
            let z = g.point_at(idx);
            let expect = z.norm() >= 1.0 || z.norm() == 0.0;
            assert_eq!(f.member(idx, Rule::AtLeast(0.0)), expect, "z = {z}");
        }
        let comps = components(&f, Rule::AtLeast(0.0));
        assert_eq!(comps.len(), 2);
        let inner = comps.iter().find(|c| !c.flagged()).unwrap();
        assert_eq!(inner.cells, vec![g.index(20, 20)]);
        let poly = extract_contour(&f, inner).unwrap();
        assert_eq!(poly.len(), 4);
        assert_eq!(winding_number(&poly, c64(0.0, 0.0)), 1);
        assert!(comps.iter().any(|c| c.touches_grid_border));
    }

    #[test]
    fn disk_contour_winding() {
        let g = Grid::new(-2.0, 2.0, -2.0, 2.0, 81, 81).unwrap();
        let f = custom_field(&g, &Domain::WholePlane, "abs", |z| Some(z.norm() - 1.0));
        let comps = components(&f, Rule::Below(0.0));
        assert_eq!(comps.len(), 1);
        let poly = extract_contour(&f, &comps[0]).unwrap();
        for idx in 0..g.len() {
            let z = g.point_at(idx);
            let inside = comps[0].cells.binary_search(&idx).is_ok();
            assert_eq!(winding_number(&poly, z), inside as i64);
        }
        let r = poly.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(r > 1.0 && r < 1.0 + 2.0 * g.hx());
    }

    #[test]
    fn pinch_and_hole() {
        let g = Grid::new(0.0, 6.0, 0.0, 6.0, 7, 7).unwrap();
        // ring around (3,3) plus a diagonal pinch
        let members = [(2, 2), (3, 2), (4, 2), (2, 3), (4, 3), (2, 4), (3, 4), (4, 4), (5, 5)];
        let f = custom_field(&g, &Domain::WholePlane, "set", |z| {
            Some(if members.contains(&(z.re as i64, z.im as i64)) { 1.0 } else { 0.0 })
        });
        let comps = components(&f, Rule::AtLeast(0.5));
        assert_eq!(comps.len(), 2);
        let ring = comps.iter().find(|c| c.cells.len() == 8).unwrap();
        let poly = extract_contour(&f, ring).unwrap();
        assert_eq!(winding_number(&poly, c64(3.0, 3.0)), 1);
        assert_eq!(winding_number(&poly, c64(5.0, 5.0)), 0);
    }

    #[test]
    fn masked_points_never_member() {
        let t = MatFun::split(1, vec![Term::new(ScalarTerm::SqrtPrincipal, CMat::identity(1, 1))], Domain::WholePlane).unwrap();
        let g = Grid::new(-1.0, 1.0, -1.0, 1.0, 21, 21).unwrap();
        let f = sigma_min_field(&t, &g);
        for idx in 0..g.len() {
            if !f.mask[idx] {
                assert!(!f.member(idx, Rule::Below(10.0)));
            }
        }
        assert!(f.mask.iter().any(|m| !m));
    }

    #[test]
    fn csv_header_and_precision() {
        let g = Grid::new(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let f = custom_field(&g, &Domain::WholePlane, "c", |_| Some(1.0 / 3.0));
        let csv = f.to_csv();
        assert!(csv.starts_with("re,im,value\n"));
        assert!(csv.contains("3.3333333333333331e-1"));
    }
}
