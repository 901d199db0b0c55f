//! Artifact emission: the JSON/CSV/SVG formats produced by the command-line
//! front-end, plus the atomic file writer they share.
//!
//! Serialization is deliberately kept out of the math modules; everything
//! here is a pure function from finished results to bytes, so identical
//! inputs yield byte-identical outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_rational::BigRational;
use serde_json::{json, Value};

use crate::cf::CFExpansion;
use crate::geometry::{CellComplex, GenCircle};
use crate::ring::{FieldConfig, QuadInt};
use crate::stats::{DirichletSeries, ModqTable, MomentTable};
use crate::transfer::{PressureCurve, SpectralResult, UlamOperator};
use crate::Result;

// ---------------------------------------------------------------------------
// Atomic writes
// ---------------------------------------------------------------------------

/// Write through a sibling temp file and rename, so a failed run never
/// leaves a partial artifact behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| "out".into());
    name.push(".tmp~");
    let tmp = path.with_file_name(name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

/// Integer of O_d as {"a", "b", "show"}: omega-basis coordinates as decimal
/// strings plus the human-readable rendering.
pub fn quadint_json(x: &QuadInt) -> Value {
    json!({
        "a": x.a.to_string(),
        "b": x.b.to_string(),
        "show": x.to_string(),
    })
}

fn rational_str(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Expansion record: {field, num, den, digits[], length, costs{}} with all
/// integers as decimal strings.
pub fn expansion_json(e: &CFExpansion) -> Value {
    json!({
        "field": e.input.num.d,
        "num": quadint_json(&e.input.num),
        "den": quadint_json(&e.input.den),
        "digits": e.digits.iter().map(quadint_json).collect::<Vec<_>>(),
        "length": e.length(),
        "costs": e.costs,
    })
}

fn curve_json(g: &GenCircle) -> Value {
    json!({
        "A": g.a.to_string(),
        "B_re": g.bu.to_string(),
        "B_omega": g.bv.to_string(),
        "C": g.c.to_string(),
    })
}

/// Partition export: {field, n0, curves[], cells[]} with rationals as
/// "p/q" strings.
pub fn partition_json(complex: &CellComplex) -> Value {
    let cells: Vec<Value> = complex
        .cells
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "dim": c.dim,
                "sign_vector": c.sign_vector,
                "rep_points": c
                    .rep_points
                    .iter()
                    .map(|(u, v)| vec![rational_str(u), rational_str(v)])
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "field": complex.d,
        "n0": complex.n0,
        "curves": complex.curves.iter().map(curve_json).collect::<Vec<_>>(),
        "cells": cells,
    })
}

/// Spectral report: {d, m, A_max, sigma, u, lambda, residual, tail, Lambda,
/// s0_curve[], mu_hat, delta_hat}.
pub fn spectral_json(
    op: &UlamOperator,
    res: &SpectralResult,
    lambda_exp: f64,
    pressure: Option<&PressureCurve>,
) -> Value {
    json!({
        "d": op.d,
        "m": op.m,
        "A_max": op.a_max,
        "sigma": op.sigma,
        "u": op.u,
        "lambda": res.lambda,
        "residual": res.residual,
        "tail": res.truncation_tail,
        "Lambda": lambda_exp,
        "s0_curve": pressure
            .map(|p| p.samples.iter().map(|&(w, s)| vec![w, s]).collect::<Vec<_>>())
            .unwrap_or_default(),
        "mu_hat": pressure.map(|p| p.mu_hat),
        "delta_hat": pressure.map(|p| p.delta_hat),
    })
}

// ---------------------------------------------------------------------------
// CSV emitters (headers pinned)
// ---------------------------------------------------------------------------

/// Density dump: one row per Ulam box center.
pub fn density_csv(op: &UlamOperator, psi: &[f64]) -> String {
    let mut out = String::from("x,y,psi\n");
    for (b, &p) in op.boxes.iter().zip(psi) {
        let _ = writeln!(out, "{},{},{}", b.center.0, b.center.1, p);
    }
    out
}

/// Moment table rows at each checkpoint, one block per cost.
pub fn moments_csv(t: &MomentTable) -> String {
    let mut out = String::from("N,count,mean,var,ks,cost\n");
    for cost in &t.tables {
        for r in &cost.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.n_max, r.count, r.mean, r.variance, r.ks, cost.cost_id
            );
        }
    }
    out
}

/// Residue histogram rows, one per class a in 0..q.
pub fn modq_csv(t: &ModqTable) -> String {
    let mut out = String::from("N,q,a,count,deviation\n");
    for (a, &c) in t.counts.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.n_max, t.q, a, c, t.deviation
        );
    }
    out
}

/// Dirichlet partial-sum rows across all requested twists; the fit column
/// is empty for purely imaginary w.
pub fn dirichlet_csv(series: &[DirichletSeries]) -> String {
    let mut out = String::from("N,w_re,w_im,partial_re,partial_im,fit_slope\n");
    for s in series {
        let slope = s
            .fit_slope
            .map(|v| v.to_string())
            .unwrap_or_default();
        for &(n, re, im) in &s.partials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                n, s.w.0, s.w.1, re, im, slope
            );
        }
    }
    out
}

// ---------------------------------------------------------------------------
// SVG partition rendering
// ---------------------------------------------------------------------------

const SVG_WIDTH: f64 = 640.0;
const SVG_ROWS: usize = 320;

fn palette(id: usize) -> String {
    format!("hsl({},62%,79%)", (id * 47) % 360)
}

/// Figure-style rendering of the partition: 2-cells shaded by component,
/// family curves stroked on top, all in real coordinates.
pub fn partition_svg(complex: &CellComplex, cfg: &FieldConfig) -> String {
    let sd = (cfg.d as f64).sqrt();
    let (umax, vmax) = crate::geometry::domain_extents(cfg);
    let (umax, vmax) = (
        crate::ring::ratio_to_f64(&umax),
        crate::ring::ratio_to_f64(&vmax),
    );
    let (x1, y1) = (umax * 1.02, vmax * sd * 1.02);
    let (x0, y0) = (-x1, -y1);
    let scale = SVG_WIDTH / (x1 - x0);
    let height = (y1 - y0) * scale;
    let px = |x: f64| (x - x0) * scale;
    let py = |y: f64| (y1 - y) * scale;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">",
        SVG_WIDTH, height, SVG_WIDTH, height
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    // shade 2-cells: run-length encode classification rows
    let cols = SVG_WIDTH as usize;
    let dx = (x1 - x0) / cols as f64;
    let dy = (y1 - y0) / SVG_ROWS as f64;
    for j in 0..SVG_ROWS {
        let y = y0 + (j as f64 + 0.5) * dy;
        let mut run: Option<(usize, usize, usize)> = None; // (cell, start, end)
        for i in 0..cols {
            let x = x0 + (i as f64 + 0.5) * dx;
            let cell = complex.classify_f64(x, y);
            match (run, cell) {
                (Some((c, s, e)), Some(n)) if n == c && e + 1 == i => {
                    run = Some((c, s, i));
                }
                _ => {
                    if let Some((c, s, e)) = run {
                        emit_run(&mut out, c, s, e, j, dx, dy, scale);
                    }
                    run = cell.map(|c| (c, i, i));
                }
            }
        }
        if let Some((c, s, e)) = run {
            emit_run(&mut out, c, s, e, j, dx, dy, scale);
        }
    }

    // curves: a|z|^2 + 2(bu u + d bv v) + c = 0 is a circle of center
    // (-bu/a, -bv sd/a) and radius sqrt(bu^2 + d bv^2 - ac)/|a| in (x, y),
    // or a line when a = 0
    for g in &complex.curves {
        let a = bigint_f64(&g.a);
        let bu = bigint_f64(&g.bu);
        let bv = bigint_f64(&g.bv);
        let c = bigint_f64(&g.c);
        let d = cfg.d as f64;
        if a == 0.0 {
            // 2 bu x + 2 sd bv y + c = 0
            let (nx, ny) = (2.0 * bu, 2.0 * sd * bv);
            let pts = clip_line(nx, ny, c, x0, x1, y0, y1);
            if let Some(((ax, ay), (bx, by))) = pts {
                let _ = writeln!(
                    out,
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333\" stroke-width=\"1.1\"/>",
                    px(ax), py(ay), px(bx), py(by)
                );
            }
        } else {
            let cx = -bu / a;
            let cy = -bv * sd / a;
            let r = (bu * bu + d * bv * bv - a * c).sqrt() / a.abs();
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1.1\"/>",
                px(cx), py(cy), r * scale
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One shaded horizontal run; rows count upward in math coordinates, so
/// row j's top edge sits at SVG y = (rows - 1 - j) * dy * scale.
fn emit_run(out: &mut String, cell: usize, start: usize, end: usize, row: usize, dx: f64, dy: f64, scale: f64) {
    let _ = writeln!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
        start as f64 * dx * scale,
        (SVG_ROWS - 1 - row) as f64 * dy * scale,
        (end - start + 1) as f64 * dx * scale,
        dy * scale + 0.3,
        palette(cell)
    );
}

fn bigint_f64(x: &num_bigint::BigInt) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(0.0)
}

/// Clip the line nx*x + ny*y + c = 0 to the viewport; returns two boundary
/// points or None if it misses the box.
fn clip_line(
    nx: f64,
    ny: f64,
    c: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
) -> Option<((f64, f64), (f64, f64))> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut push = |x: f64, y: f64| {
        if x >= x0 - 1e-9 && x <= x1 + 1e-9 && y >= y0 - 1e-9 && y <= y1 + 1e-9 {
            if !pts.iter().any(|&(a, b): &(f64, f64)| (a - x).abs() + (b - y).abs() < 1e-9) {
                pts.push((x, y));
            }
        }
    };
    if ny != 0.0 {
        push(x0, -(c + nx * x0) / ny);
        push(x1, -(c + nx * x1) / ny);
    }
    if nx != 0.0 {
        push(-(c + ny * y0) / nx, y0);
        push(-(c + ny * y1) / nx, y1);
    }
    if pts.len() >= 2 {
        Some((pts[0], pts[1]))
    } else {
        None
    }
}
