//! Command-line front end. Exit codes: 0 ok, 2 usage or input error,
//! 3 numerical failure.

mod demo;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::counting::{self, count_arg_det, count_trace, Contour, CountOptions};
use crate::error::{Error, Result};
use crate::grid::{self, Grid, Rule};
use crate::matfun::{parse_problem, MatFun};
use output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "nlep", version, about = "Localize and count eigenvalues of nonlinear matrix functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Gershgorin margin field, components and optional certified counts.
    Gershgorin {
        #[arg(long)]
        problem: PathBuf,
        /// re0,re1,im0,im1,nx,ny
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Certify every unflagged component against the diagonal part.
        #[arg(long)]
        count: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// sigma_min field and its level-set contours.
    Pseudospectrum {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Eigenvalue count inside a contour.
    Count {
        #[arg(long)]
        problem: PathBuf,
        /// circle:cx,cy,r | ellipse:cx,cy,rx,ry | rect:x0,y0,x1,y1 | poly:PATH
        #[arg(long, allow_hyphen_values = true)]
        contour: String,
        #[arg(long, value_enum, default_value_t = Method::ArgDet)]
        method: Method,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Full pipeline for one application.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        /// NLEVP matrices as JSON.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        contour: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    ArgDet,
    Trace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Hadeler,
    Timedelay,
    Resonance,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_USAGE
    } else {
        EXIT_NUMERICAL
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gershgorin { problem, grid, alpha, count, out } => cmd_gershgorin(&problem, &grid, alpha, count, &out),
        Command::Pseudospectrum { problem, grid, eps, out } => cmd_pseudospectrum(&problem, &grid, &eps, &out),
        Command::Count { problem, contour, method, out } => cmd_count(&problem, &contour, method, &out),
        Command::Demo { name, data, seed, grid, eps, contour, out } => {
            let opts = demo::DemoOptions { data, seed, grid, eps, contour };
            match name {
                DemoName::Hadeler => demo::hadeler(&opts, &out),
                DemoName::Timedelay => demo::timedelay(&opts, &out),
                DemoName::Resonance => demo::resonance(&opts, &out),
            }
        }
    }
}

pub fn load_problem(path: &Path) -> Result<MatFun> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&text)
}

fn bbox(grid: &Grid, cells: &[usize]) -> Value {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &c in cells {
        let z = grid.point_at(c);
        lo = [lo[0].min(z.re), lo[1].min(z.im)];
        hi = [hi[0].max(z.re), hi[1].max(z.im)];
    }
    json!({ "re": [lo[0], hi[0]], "im": [lo[1], hi[1]] })
}

/// Components of `field` under `rule` with contours (unflagged only) and,
/// when `certify` is given, certified counts against its reference.
pub(crate) fn component_report(
    field: &grid::RegionField,
    rule: Rule,
    certify: Option<(&MatFun, &MatFun)>,
) -> Result<(Value, Vec<Vec<crate::linalg::C64>>, i64)> {
    let mut comps = grid::components(field, rule);
    let mut rows = Vec::new();
    let mut polys = Vec::new();
    let mut total = 0i64;
    for c in comps.iter_mut() {
        let mut row = json!({
            "id": c.id,
            "cells": c.cells.len(),
            "bbox": bbox(&field.grid, &c.cells),
            "touches_grid_border": c.touches_grid_border,
            "touches_domain_exclusion": c.touches_domain_exclusion,
            "flagged": c.flagged(),
        });
        if !c.flagged() {
            match certify {
                Some((t, reference)) => match counting::certify_component(t, reference, field, c) {
                    Ok((contour, cert)) => {
                        c.counts = Some(grid::ComponentCounts { n_t: cert.n_t.max(0) as usize, n_reference: cert.n_reference.max(0) as usize });
                        total += cert.n_t;
                        row["contour_id"] = json!(contour.id());
                        row["certificate"] = serde_json::to_value(&cert).unwrap_or(Value::Null);
                        row["n_t"] = json!(cert.n_t);
                        row["n_reference"] = json!(cert.n_reference);
                        polys.push(contour.vertices().to_vec());
                    }
                    Err(e @ Error::GuardFailed { .. }) => {
                        eprintln!("warning: component {} not certified: {e}", c.id);
                        row["certify_error"] = json!(e.to_string());
                        polys.push(grid::extract_contour(field, c)?);
                    }
                    Err(e) => return Err(e),
                },
                None => polys.push(grid::extract_contour(field, c)?),
            }
        }
        rows.push(row);
    }
    Ok((Value::Array(rows), polys, total))
}

pub fn cmd_gershgorin(problem: &Path, grid_spec: &str, alpha: f64, count: bool, out: &Path) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("--alpha must lie in [0, 1], got {alpha}")));
    }
    let grid = Grid::parse(grid_spec)?;
    let t = load_problem(problem)?;
    let mut o = Outputs::new(out, "gershgorin")?;
    o.input(&problem.display().to_string());
    o.param("grid", &grid);
    o.param("alpha", alpha);
    o.param("count", count);
    let field = grid::gershgorin_field(&t, &grid, alpha)?;
    o.lap("field");
    let reference = t.diagonal_part();
    let (report, polys, total) = component_report(&field, Rule::AtLeast(0.0), count.then_some((&t, &reference)))?;
    o.lap("components");
    o.text("gershgorin.csv", &field.to_csv())?;
    o.json("gershgorin.json", &field.to_json())?;
    o.json("components.json", &report)?;
    o.json("contours.json", &grid::contours_json(&polys))?;
    let n = report.as_array().map_or(0, Vec::len);
    println!("components: {n}");
    if let Some(rows) = report.as_array() {
        for r in rows {
            match (r.get("n_t"), r.get("n_reference")) {
                (Some(nt), Some(nr)) => println!("component {}: n_T = {nt}, n_D = {nr}", r["id"]),
                _ if r.get("certify_error").is_some() => println!("component {}: not certified", r["id"]),
                _ => println!("component {}: flagged = {}", r["id"], r["flagged"]),
            }
        }
    }
    if count {
        println!("total count: {total}");
    }
    o.finish()?;
    Ok(())
}

pub fn cmd_pseudospectrum(problem: &Path, grid_spec: &str, eps: &[f64], out: &Path) -> Result<()> {
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::InvalidArgument(format!("--eps levels must be positive, got {e}")));
    }
    let grid = Grid::parse(grid_spec)?;
    let t = load_problem(problem)?;
    let mut o = Outputs::new(out, "pseudospectrum")?;
    o.input(&problem.display().to_string());
    o.param("grid", &grid);
    o.param("eps", eps);
    let field = grid::sigma_min_field(&t, &grid);
    o.lap("field");
    o.text("sigma_min.csv", &field.to_csv())?;
    o.json("sigma_min.json", &field.to_json())?;
    let mut levels = Vec::new();
    for &e in eps {
        let (report, polys, _) = component_report(&field, Rule::Below(e), None)?;
        println!("eps {e:e}: {} components, {} closed contours", report.as_array().map_or(0, Vec::len), polys.len());
        levels.push(json!({ "eps": e, "components": report, "contours": grid::contours_json(&polys) }));
    }
    o.json("pseudospectrum_contours.json", &Value::Array(levels))?;
    o.finish()?;
    Ok(())
}

pub fn cmd_count(problem: &Path, contour_spec: &str, method: Method, out: &Path) -> Result<()> {
    let contour = Contour::parse(contour_spec)?;
    let t = load_problem(problem)?;
    let mut o = Outputs::new(out, "count")?;
    o.input(&problem.display().to_string());
    o.param("contour", contour_spec);
    o.param("method", format!("{method:?}"));
    let cert = match method {
        Method::ArgDet => count_arg_det(&t, &contour, &CountOptions::default())?,
        Method::Trace => count_trace(&t, &contour, 4, 16, 1 << 12)?,
    };
    let v = serde_json::to_value(&cert).map_err(|e| Error::Io(e.to_string()))?;
    o.json("certificate.json", &v)?;
    o.json("contour.json", &contour.to_json())?;
    println!("{}", serde_json::to_string(&v).unwrap_or_default());
    o.finish()?;
    Ok(())
}
