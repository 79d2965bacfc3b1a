//! Per-application pipelines behind `nlep demo`.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::output::{cjson, points_json, Outputs};
use super::component_report;
use crate::cheb::{self, ChebApprox};
use crate::counting::{count_arg_det, Contour, CountOptions};
use crate::error::{Error, Result};
use crate::grid::{self, FieldKind, Grid, Rule};
use crate::linalg::{c64, to_complex, C64};
use crate::linear::disks_json;
use crate::matfun::{MatFun, ScalarTerm};
use crate::problems::delay::{delay_basis, delay_second_bound, DelayInstance};
use crate::problems::hadeler::{hadeler_simplify, HadelerInstance};
use crate::problems::resonance::{default_contour, resonance_certify, resonance_pencil, ResonanceConfig};
use crate::refine::{refine_batch, NewtonOptions};
use crate::special::hadeler::{delay_zeros, hadeler_zeros, taylor_disk};

pub struct DemoOptions {
    pub data: Option<PathBuf>,
    pub seed: u64,
    pub grid: Option<String>,
    pub eps: Vec<f64>,
    pub contour: Option<String>,
}

impl DemoOptions {
    fn grid(&self, default: &str) -> Result<Grid> {
        Grid::parse(self.grid.as_deref().unwrap_or(default))
    }

    fn eps(&self, default: f64) -> Result<f64> {
        let e = self.eps.first().copied().unwrap_or(default);
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!("--eps must be positive, got {e}")));
        }
        Ok(e)
    }
}

fn read_data(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Newton from every start; converged, deduplicated eigenvalues.
fn refine_all(t: &MatFun, starts: &[C64]) -> Vec<C64> {
    let b = refine_batch(t, starts, &NewtonOptions::default(), 1e-8);
    let mut out: Vec<C64> = b.eigenpairs.iter().map(|p| p.lambda).collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

pub const HADELER_GRID: &str = "-12,8,-40,40,161,641";
pub const HADELER_DEGREE: usize = 20;
pub const HADELER_BRANCHES: i64 = 6;

pub fn hadeler(opts: &DemoOptions, out: &Path) -> Result<()> {
    let mut o = Outputs::new(out, "demo hadeler")?;
    let inst = match &opts.data {
        Some(p) => {
            o.input(&p.display().to_string());
            HadelerInstance::from_json(&read_data(p)?, &p.display().to_string())?
        }
        None => {
            eprintln!("note: no --data given, using the synthetic Hadeler instance (seed {})", opts.seed);
            HadelerInstance::synthetic(opts.seed)
        }
    };
    let grid = opts.grid(HADELER_GRID)?;
    let eps = opts.eps(1e-10)?;
    o.param("seed", opts.seed);
    o.param("grid", &grid);
    o.param("eps", eps);
    o.param("alpha", inst.alpha);
    o.param("degree", HADELER_DEGREE);

    let t = inst.matfun();
    let simp = hadeler_simplify(&inst)?;
    let tt = simp.matfun();
    let reference = simp.diagonal_matfun();
    o.json(
        "instance.json",
        &json!({
            "A": inst.a.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
            "B": inst.b.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
            "alpha": inst.alpha,
            "beta": simp.beta,
            "rho": simp.rho(),
        }),
    )?;

    // Gershgorin regions of the simplified problem
    let field = simp.gershgorin_field(&grid)?;
    let (report, polys, _) = component_report(&field, Rule::AtLeast(0.0), Some((&tt, &reference)))?;
    o.text("gershgorin.csv", &field.to_csv())?;
    o.json("gershgorin.json", &field.to_json())?;
    o.json("components.json", &report)?;
    o.json("contours.json", &grid::contours_json(&polys))?;
    o.lap("gershgorin");

    // closed-form zeros of beta_j e^z + z^2 and their Taylor disks
    let rho = simp.rho();
    let mut approx = Vec::new();
    let mut taylor = Vec::new();
    for (j, &b) in simp.beta.iter().enumerate() {
        for z in hadeler_zeros(b, -HADELER_BRANCHES..=HADELER_BRANCHES)? {
            approx.push(z);
            if let Ok(d) = taylor_disk(z, rho[j]) {
                taylor.push(json!({ "row": j, "bound": d }));
            }
        }
    }
    o.json("approximations.json", &points_json(&approx))?;
    o.json("taylor_disks.json", &Value::Array(taylor))?;

    // Chebyshev interpolant on the Gershgorin extent of the real axis
    let (z_min, z_max) = cheb::gershgorin_real_interval(&tt, grid.re_min.min(-60.0), grid.re_max.max(60.0), 24_001)?
        .ok_or_else(|| Error::NoConvergence("Gershgorin union does not meet the real axis".into()))?;
    let ch = ChebApprox::from_matfun(&t, z_min, z_max, HADELER_DEGREE)?;
    let cs = cheb::colleague(&ch, &to_complex(&inst.b), false)?;
    let zs = cs.z_eigenvalues(&ch);
    let exact = ScalarTerm::ExpMinusOne(c64(1.0, 0.0));
    let ed = cheb::eps_disks(&cs, &ch, &exact, eps, &grid, &t)?;
    o.json("cheb.json", &ch.to_json())?;
    o.json(
        "colleague.json",
        &json!({
            "interval": [z_min, z_max],
            "eigenvalues": points_json(&zs),
            "rho": cs.rho,
            "balancing": cs.balancing,
            "balancing_method": "diagonal similarity, radix 2, row/column 1-norm equalization",
            "leading_condition": cs.leading_cond,
            "residual": cs.residual,
        }),
    )?;
    o.text("remainder.csv", &ed.field.to_csv())?;
    o.json(
        "eps_disks.json",
        &json!({
            "eps": eps,
            "disks": disks_json(&ed.disks),
            "inside": ed.inside,
            "certified": ed.certified.iter().map(|c| {
                let mut v = c.cluster.to_json();
                v["colleague_inside"] = json!(c.colleague_inside);
                v
            }).collect::<Vec<_>>(),
        }),
    )?;
    o.lap("colleague");

    // eigenvalues of T: Newton from the colleague eigenvalues near the interval
    // and from the closed-form zeros
    let mut starts: Vec<C64> = zs.iter().copied().filter(|z| z.re >= z_min - 1.0 && z.re <= z_max + 1.0 && z.im.abs() <= 1.0).collect();
    starts.extend(approx.iter().copied());
    let eig = refine_all(&t, &starts);
    o.json("eigenvalues.json", &points_json(&eig))?;
    let sig = grid::sigma_min_field(&t, &grid);
    o.text("sigma_min.csv", &sig.to_csv())?;
    o.lap("refine");

    println!("Hadeler: n = {}, alpha = {}", inst.dim(), inst.alpha);
    println!("beta = {:?}", simp.beta);
    println!("Chebyshev interval [{z_min:.4}, {z_max:.4}], degree {HADELER_DEGREE}, max rho = {:.4}", cs.rho.iter().copied().fold(0.0, f64::max));
    let certified: usize = ed.certified.iter().filter(|c| c.cluster.t.is_some()).count();
    println!("eps = {eps:e}: {} disks inside the remainder region, {certified} certified clusters", ed.inside.iter().filter(|b| **b).count());
    println!("{} refined eigenvalues", eig.len());
    o.finish()?;
    Ok(())
}

pub const DELAY_GRID: &str = "-15,30,-45,45,181,361";
pub const DELAY_BRANCHES: i64 = 6;

pub fn timedelay(opts: &DemoOptions, out: &Path) -> Result<()> {
    let mut o = Outputs::new(out, "demo timedelay")?;
    let inst = match &opts.data {
        Some(p) => {
            o.input(&p.display().to_string());
            DelayInstance::from_json(&read_data(p)?, &p.display().to_string())?
        }
        None => {
            eprintln!("warning: no --data given, using the synthetic time-delay instance");
            DelayInstance::synthetic()
        }
    };
    let grid = opts.grid(DELAY_GRID)?;
    o.param("grid", &grid);
    let t = inst.matfun();
    let basis = delay_basis(&inst)?;
    let tt = basis.matfun();
    let reference = basis.diagonal_matfun();

    let field = basis.gershgorin_field(&grid)?;
    let (report, polys, _) = component_report(&field, Rule::AtLeast(0.0), Some((&tt, &reference)))?;
    o.text("gershgorin.csv", &field.to_csv())?;
    o.json("gershgorin.json", &field.to_json())?;
    o.json("components.json", &report)?;
    o.json("contours.json", &grid::contours_json(&polys))?;
    let second = delay_second_bound(&inst, &grid)?;
    o.text("second_bound.csv", &second.to_csv())?;
    let both = field.combine(&second, FieldKind::Custom { label: "intersection".into() }, f64::min)?;
    o.text("intersection.csv", &both.to_csv())?;
    o.lap("gershgorin");

    let mut approx = vec![c64(0.0, 0.0); inst.dim() - 1];
    approx.extend(delay_zeros(basis.mu, -DELAY_BRANCHES..=DELAY_BRANCHES)?);
    o.json("approximations.json", &points_json(&approx))?;

    let z0 = c64(0.0, 3.0 * std::f64::consts::PI);
    let small = Contour::circle(z0, 0.1, 128)?.with_id("circle-3pi-i");
    let near = count_arg_det(&t, &small, &CountOptions::default())?;
    let eig = refine_all(&t, &approx);
    o.json("eigenvalues.json", &points_json(&eig))?;
    let sig = grid::sigma_min_field(&t, &grid);
    o.text("sigma_min.csv", &sig.to_csv())?;
    o.json(
        "delay.json",
        &json!({
            "A0": inst.a0.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
            "A1": inst.a1.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
            "mu1": cjson(basis.mu),
            "rho": basis.rho(),
            "count_near_3pi_i": serde_json::to_value(&near).unwrap_or(Value::Null),
        }),
    )?;
    o.lap("refine");

    println!("time delay: mu1 = {:.6}{:+.2e}i", basis.mu.re, basis.mu.im);
    if let Some(rows) = report.as_array() {
        for r in rows.iter().filter(|r| r.get("n_t").is_some()) {
            println!("component {}: n_T~ = {}, n_T^ = {}", r["id"], r["n_t"], r["n_reference"]);
        }
    }
    println!("count on |z - 3 pi i| = 0.1: {}", near.count);
    o.finish()?;
    Ok(())
}

pub const RESONANCE_GRID: &str = "0,500,-60,10,201,57";

pub fn resonance(opts: &DemoOptions, out: &Path) -> Result<()> {
    let mut o = Outputs::new(out, "demo resonance")?;
    let cfg = ResonanceConfig::default();
    let eps = opts.eps(1e-8)?;
    let contour = match &opts.contour {
        Some(s) => Contour::parse(s)?,
        None => default_contour()?,
    };
    let grid = opts.grid(RESONANCE_GRID)?;
    o.param("config", &cfg);
    o.param("eps", eps);
    o.param("contour", contour.id());
    o.param("grid", &grid);
    let report = resonance_certify(&cfg, eps, &contour)?;
    o.lap("certify");
    let mut rows = report.rows.clone();
    rows.sort_by(|a, b| b.refined[0].total_cmp(&a.refined[0]));
    let mut csv = String::from("pencil_re,pencil_im,refined_re,refined_im,error\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            grid::fmt_f64(r.pencil[0]),
            grid::fmt_f64(r.pencil[1]),
            grid::fmt_f64(r.refined[0]),
            grid::fmt_f64(r.refined[1]),
            grid::fmt_f64(r.delta)
        ));
    }
    o.text("resonance_table.csv", &csv)?;
    o.json("resonance.json", &serde_json::to_value(&report).map_err(|e| Error::Io(e.to_string()))?)?;
    o.json("contour.json", &contour.to_json())?;
    o.json("eigenvalues.json", &Value::Array(rows.iter().map(|r| json!(r.refined)).collect()))?;
    o.json("approximations.json", &Value::Array(rows.iter().map(|r| json!(r.pencil)).collect()))?;

    let t = MatFun::resonance(cfg.params);
    let pencil = resonance_pencil(&cfg)?;
    let sig = grid::sigma_min_field(&t, &grid);
    o.text("sigma_min.csv", &sig.to_csv())?;
    let err = grid::custom_field(&grid, t.domain(), "t_minus_t_hat", |z| {
        let a = t.eval(z).ok()?;
        let b = pencil.schur(z).ok()?;
        Some(crate::linalg::norm2(&(a - b)))
    });
    o.text("perturbation.csv", &err.to_csv())?;
    o.lap("fields");

    println!("{:>22}  {:>10}", "Eigenvalue", "Error");
    for r in &rows {
        let sign = if r.refined[1] < 0.0 { '-' } else { '+' };
        println!("{:>10.2} {sign} {:>6.2}i  {:>10.2e}", r.refined[0], r.refined[1].abs(), r.delta);
    }
    println!(
        "counts inside {}: T = {}, pencil = {} (enumerated {}), min sigma_min(T) = {:.3e}",
        contour.id(),
        report.count_t.count,
        report.count_pencil.count,
        report.pencil_enumerated,
        report.min_sigma_t
    );
    println!(
        "max ||T - T_hat|| on contour = {:.3e}, max ratio to sigma_min = {:.3}",
        report.max_perturbation, report.max_perturbation_ratio
    );
    if !report.counts_equal {
        eprintln!("warning: counts differ");
    }
    o.finish()?;
    Ok(())
}
