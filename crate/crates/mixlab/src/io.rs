//! CSV and JSON emission. Numbers are written with 17 significant digits in
//! scientific notation, independent of locale; files are written to a
//! temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, OdeTrace};
use crate::descent_pde::{alpha_eff, EvolutionState};
use crate::error::{MixError, Result};
use crate::scalar::Scalar;
use crate::subsolution::SubsolutionSnapshot;
use crate::torus_field::{GridFunction, MixParams};

/// 17 significant digits, round-trip exact for f64.
pub fn fmt_num<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn row<T: Scalar>(out: &mut String, cols: &[T]) {
    let cells: Vec<String> = cols.iter().map(|&c| fmt_num(c)).collect();
    let _ = writeln!(out, "{}", cells.join(","));
}

/// Writes `bytes` to `path` atomically: nothing appears at `path` unless the
/// whole write succeeds.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// "x,value" rows on the periodic grid.
pub fn grid_to_csv<T: Scalar>(f: &GridFunction<T>) -> String {
    let mut out = String::from("x,value\n");
    for (j, &v) in f.values().iter().enumerate() {
        row(&mut out, &[f.x(j), v]);
    }
    out
}

/// Parses the output of [`grid_to_csv`]. The period is recovered from the
/// first abscissa, x₀ = −L/2.
pub fn grid_from_csv(text: &str) -> Result<GridFunction<f64>> {
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(MixError::InvalidGrid(format!(
                "line {}: expected two columns",
                lineno + 1
            )));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| MixError::InvalidGrid(format!("line {}: {e}", lineno + 1)))
        };
        xs.push(parse(a)?);
        vals.push(parse(b)?);
    }
    let first = *xs
        .first()
        .ok_or_else(|| MixError::InvalidGrid("no samples".into()))?;
    let period = -2.0 * first;
    let n = xs.len();
    for (j, &x) in xs.iter().enumerate() {
        let expect = -period / 2.0 + period * j as f64 / n as f64;
        if (x - expect).abs() > 1e-9 * period.abs().max(1.0) {
            return Err(MixError::InvalidGrid(format!(
                "abscissa {j} is {x}, expected {expect}"
            )));
        }
    }
    GridFunction::new(period, vals)
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    period: f64,
    values: Vec<f64>,
}

pub fn grid_to_json<T: Scalar>(f: &GridFunction<T>) -> String {
    let g = GridJson {
        period: f.period().as_f64(),
        values: f.values().iter().map(|v| v.as_f64()).collect(),
    };
    serde_json::to_string_pretty(&g).expect("serializable")
}

pub fn grid_from_json(text: &str) -> Result<GridFunction<f64>> {
    let g: GridJson =
        serde_json::from_str(text).map_err(|e| MixError::InvalidGrid(e.to_string()))?;
    GridFunction::new(g.period, g.values)
}

/// "t,h,q,alpha_eff,lambda".
pub fn trajectory_csv<T: Scalar>(states: &[EvolutionState<T>], params: &MixParams<T>) -> String {
    let mut out = String::from("t,h,q,alpha_eff,lambda\n");
    for s in states {
        row(
            &mut out,
            &[s.t, s.h, s.q(params), alpha_eff(s.h, params), s.lambda],
        );
    }
    out
}

/// "t,q,alpha".
pub fn ode_trace_csv<T: Scalar>(trace: &OdeTrace<T>) -> String {
    let mut out = String::from("t,q,alpha\n");
    for i in 0..trace.len() {
        row(
            &mut out,
            &[trace.times[i], trace.q_values[i], trace.alpha_values[i]],
        );
    }
    out
}

/// "r0,old_bound,new_bound,gap".
pub fn bounds_csv<T: Scalar>(rows: &[BoundReport<T>]) -> String {
    let mut out = String::from("r0,old_bound,new_bound,gap\n");
    for r in rows {
        row(&mut out, &[r.r0, r.old_bound, r.new_bound, r.gap]);
    }
    out
}

/// "x,rho,m1,e,w".
pub fn snapshot_csv<T: Scalar>(s: &SubsolutionSnapshot<T>) -> String {
    let mut out = String::from("x,rho,m1,e,w\n");
    for j in 0..s.w.n() {
        row(
            &mut out,
            &[
                s.w.x(j),
                s.rho.values()[j],
                s.m1.values()[j],
                s.e.values()[j],
                s.w.values()[j],
            ],
        );
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotManifest {
    pub t: f64,
    pub alpha: f64,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
}

pub fn snapshot_manifest<T: Scalar>(s: &SubsolutionSnapshot<T>, t_final: T) -> String {
    let m = SnapshotManifest {
        t: s.t.as_f64(),
        alpha: s.alpha.as_f64(),
        lambda: s.lambda.as_f64(),
        t_final: t_final.as_f64(),
    };
    serde_json::to_string_pretty(&m).expect("serializable")
}
