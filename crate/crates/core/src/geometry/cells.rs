//! Cell decomposition of I_d induced by the stabilized curve family, and
//! the statistical Markov-compatibility check of the digit regions.
//!
//! 0-cells are certified floating intersections of curve pairs; 1-cells are
//! the maximal arcs between them; 2-cells are connected components of the
//! complement, found by sign-vector classification refined with a grid
//! flood fill (identical sign vectors can still belong to different
//! components). Exactness enters where it matters: every stored
//! representative point is an exact rational whose sign vector and domain
//! membership are re-verified with exact arithmetic.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GenCircle;
use crate::ring::fast::FastField;
use crate::ring::{FieldConfig, QuadInt};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Cell {
    pub id: usize,
    pub dim: u8,
    /// Side of each family curve: -1 / 0 (on the curve) / +1, exact for the
    /// stored representative of 2-cells, floating-certified otherwise.
    pub sign_vector: Vec<i8>,
    /// Exact rational representatives in sqrt-basis (u, v) coordinates.
    /// For dim < 2 these are dyadic certified approximations of points on
    /// the cell; for dim = 2 they are exactly interior.
    pub rep_points: Vec<(BigRational, BigRational)>,
    /// Real-coordinate bounding box (x0, x1, y0, y1).
    pub bbox: (f64, f64, f64, f64),
    /// Grid pixels claimed (2-cells only).
    pub pixel_count: usize,
}

#[derive(Debug, Clone)]
pub struct CellComplex {
    pub d: u8,
    pub curves: Vec<GenCircle>,
    /// 2-cells first (ids equal grid component ids), then 1-cells, then
    /// 0-cells.
    pub cells: Vec<Cell>,
    /// Incidence pairs (lower-dimensional cell id, touching 2-cell id).
    pub adjacency: Vec<(usize, usize)>,
    pub n0: usize,
    pub resolution: usize,
    pub two_cell_count: usize,
    /// Pixel component ids, row-major (v-major), -1 = outside I or on a
    /// curve at pixel-center precision.
    grid: Vec<i32>,
    /// Grid rectangle in (u, v) coordinates: (u0, v0, du, dv).
    rect: (f64, f64, f64, f64),
}

/// Half-extents of the bounding rectangle of I in exact (u, v) coordinates.
pub(crate) fn domain_extents(cfg: &FieldConfig) -> (BigRational, BigRational) {
    // u in [-1/2, 1/2]; v in [-vmax, vmax] with vmax = ymax/sqrt(d):
    // 1/2 for d = 1, 2 and (d+1)/(4d) for the hexagonal fields.
    let vmax = if cfg.d % 4 != 3 {
        BigRational::new(1.into(), 2.into())
    } else {
        BigRational::new((cfg.d as i64 + 1).into(), (4 * cfg.d as i64).into())
    };
    (BigRational::new(1.into(), 2.into()), vmax)
}

fn ratio_f64(x: &BigRational) -> f64 {
    crate::ring::ratio_to_f64(x)
}

/// Signs of all curves at a floating point; None if any evaluation is too
/// close to zero to call.
fn sign_vector_f64(curves: &[GenCircle], x: f64, y: f64, tol: f64) -> Option<Vec<i8>> {
    let mut sv = Vec::with_capacity(curves.len());
    for g in curves {
        let e = g.eval_f64(x, y);
        if e.abs() <= tol {
            return None;
        }
        sv.push(if e > 0.0 { 1 } else { -1 });
    }
    Some(sv)
}

// ---------------------------------------------------------------------------
// 0-cells: pairwise intersections
// ---------------------------------------------------------------------------

/// All intersection points of the pair in real coordinates (0, 1 or 2).
fn intersect_f64(g1: &GenCircle, g2: &GenCircle) -> Vec<(f64, f64)> {
    use super::ShapeF64::*;
    match (g1.shape_f64(), g2.shape_f64()) {
        (Line { foot: f1, dir: d1 }, Line { foot: f2, dir: d2 }) => {
            // f1 + t d1 = f2 + s d2
            let det = d1.0 * (-d2.1) - (-d2.0) * d1.1;
            if det.abs() < 1e-14 {
                return vec![];
            }
            let (rx, ry) = (f2.0 - f1.0, f2.1 - f1.1);
            let t = (rx * (-d2.1) - (-d2.0) * ry) / det;
            vec![(f1.0 + t * d1.0, f1.1 + t * d1.1)]
        }
        (Line { foot, dir }, Circle { center, radius })
        | (Circle { center, radius }, Line { foot, dir }) => {
            // |foot + t dir - center|^2 = r^2
            let (ex, ey) = (foot.0 - center.0, foot.1 - center.1);
            let b = ex * dir.0 + ey * dir.1;
            let c = ex * ex + ey * ey - radius * radius;
            let disc = b * b - c;
            if disc < -1e-14 {
                return vec![];
            }
            let s = disc.max(0.0).sqrt();
            let mut out = vec![];
            for t in [-b - s, -b + s] {
                out.push((foot.0 + t * dir.0, foot.1 + t * dir.1));
            }
            out
        }
        (Circle { center: c1, radius: r1 }, Circle { center: c2, radius: r2 }) => {
            let (dx, dy) = (c2.0 - c1.0, c2.1 - c1.1);
            let dd = (dx * dx + dy * dy).sqrt();
            if dd < 1e-14 || dd > r1 + r2 + 1e-12 || dd < (r1 - r2).abs() - 1e-12 {
                return vec![];
            }
            let a = (r1 * r1 - r2 * r2 + dd * dd) / (2.0 * dd);
            let h2 = r1 * r1 - a * a;
            let h = h2.max(0.0).sqrt();
            let (mx, my) = (c1.0 + a * dx / dd, c1.1 + a * dy / dd);
            vec![
                (mx + h * dy / dd, my - h * dx / dd),
                (mx - h * dy / dd, my + h * dx / dd),
            ]
        }
    }
}

/// Parameter of a real point along a curve (t for lines, angle for circles).
fn param_on(g: &GenCircle, x: f64, y: f64) -> f64 {
    match g.shape_f64() {
        super::ShapeF64::Line { foot, dir } => (x - foot.0) * dir.0 + (y - foot.1) * dir.1,
        super::ShapeF64::Circle { center, .. } => (y - center.1).atan2(x - center.0),
    }
}

fn point_at(g: &GenCircle, t: f64) -> (f64, f64) {
    match g.shape_f64() {
        super::ShapeF64::Line { foot, dir } => (foot.0 + t * dir.0, foot.1 + t * dir.1),
        super::ShapeF64::Circle { center, radius } => {
            (center.0 + radius * t.cos(), center.1 + radius * t.sin())
        }
    }
}

// ---------------------------------------------------------------------------
// build_cells
// ---------------------------------------------------------------------------

pub fn build_cells(
    curves: &[GenCircle],
    cfg: &FieldConfig,
    resolution: usize,
) -> Result<CellComplex> {
    build_cells_with_n0(curves, cfg, resolution, 0)
}

/// Like `build_cells` but records the stabilization depth that produced the
/// curve family.
pub fn build_cells_with_n0(
    curves: &[GenCircle],
    cfg: &FieldConfig,
    resolution: usize,
    n0: usize,
) -> Result<CellComplex> {
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} < 64"
        )));
    }
    let (umax, vmax) = domain_extents(cfg);
    let sd = (cfg.d as f64).sqrt();
    let (u0, v0) = (-ratio_f64(&umax), -ratio_f64(&vmax));
    let du = 2.0 * ratio_f64(&umax) / resolution as f64;
    let dv = 2.0 * ratio_f64(&vmax) / resolution as f64;

    // --- 0-cells: certified pairwise intersections inside closed I ---
    let mut zero_pts: BTreeMap<(i64, i64), (f64, f64)> = BTreeMap::new();
    for i in 0..curves.len() {
        for j in (i + 1)..curves.len() {
            for (x, y) in intersect_f64(&curves[i], &curves[j]) {
                // certification: both exact forms vanish to 1e-10 at the
                // floating candidate (relative to coefficient scale)
                let ok = [&curves[i], &curves[j]].iter().all(|g| {
                    let scale = 1.0 + g.eval_f64(0.0, 0.0).abs() + x * x + y * y;
                    g.eval_f64(x, y).abs() <= 1e-10 * scale.max(1.0) * 100.0
                });
                if !ok || !cfg.closed_domain_contains_f64(x, y, 1e-9) {
                    continue;
                }
                let key = ((x * 1e8).round() as i64, (y * 1e8).round() as i64);
                zero_pts.entry(key).or_insert((x, y));
            }
        }
    }
    let zero_cells: Vec<(f64, f64)> = zero_pts.into_values().collect();

    // --- 2-cells: sign-vector flood fill over the pixel grid ---
    let res = resolution;
    let idx = |i: usize, j: usize| j * res + i;
    let center = |i: usize, j: usize| (u0 + (i as f64 + 0.5) * du, v0 + (j as f64 + 0.5) * dv);
    // key per pixel: signature of signs, or None for outside/boundary
    let mut keys: Vec<Option<Vec<i8>>> = vec![None; res * res];
    for j in 0..res {
        for i in 0..res {
            let (u, v) = center(i, j);
            let (x, y) = (u, v * sd);
            if !cfg.closed_domain_contains_f64(x, y, -1e-12) {
                continue;
            }
            keys[idx(i, j)] = sign_vector_f64(curves, x, y, 1e-12);
        }
    }
    let mut grid: Vec<i32> = vec![-1; res * res];
    let mut comp_pixels: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for j in 0..res {
        for i in 0..res {
            if grid[idx(i, j)] >= 0 || keys[idx(i, j)].is_none() {
                continue;
            }
            let comp = comp_pixels.len() as i32;
            let key = keys[idx(i, j)].clone().unwrap();
            let mut pixels = Vec::new();
            stack.push((i, j));
            grid[idx(i, j)] = comp;
            while let Some((ci, cj)) = stack.pop() {
                pixels.push((ci, cj));
                let mut neighbors: [(usize, usize); 4] = [(usize::MAX, 0); 4];
                let mut n = 0;
                if ci > 0 {
                    neighbors[n] = (ci - 1, cj);
                    n += 1;
                }
                if ci + 1 < res {
                    neighbors[n] = (ci + 1, cj);
                    n += 1;
                }
                if cj > 0 {
                    neighbors[n] = (ci, cj - 1);
                    n += 1;
                }
                if cj + 1 < res {
                    neighbors[n] = (ci, cj + 1);
                    n += 1;
                }
                for &(ni, nj) in &neighbors[..n] {
                    if grid[idx(ni, nj)] < 0 && keys[idx(ni, nj)].as_ref() == Some(&key) {
                        grid[idx(ni, nj)] = comp;
                        stack.push((ni, nj));
                    }
                }
            }
            comp_pixels.push(pixels);
        }
    }

    // exact rational center of a pixel
    let exact_center = |i: usize, j: usize| -> (BigRational, BigRational) {
        let res_b = BigRational::from_integer((res as i64).into());
        let two = BigRational::from_integer(2.into());
        let iu = BigRational::from_integer((2 * i as i64 + 1).into());
        let jv = BigRational::from_integer((2 * j as i64 + 1).into());
        let u = -&umax + &two * &umax * iu / (&two * &res_b);
        let v = -&vmax + &two * &vmax * jv / (&two * &res_b);
        (u, v)
    };

    let mut cells: Vec<Cell> = Vec::new();
    for (comp, pixels) in comp_pixels.iter().enumerate() {
        // representatives: first pixel, plus the pixel farthest from the
        // component bbox border (a deep interior point)
        let (mut i0, mut i1, mut j0, mut j1) = (res, 0usize, res, 0usize);
        for &(i, j) in pixels {
            i0 = i0.min(i);
            i1 = i1.max(i);
            j0 = j0.min(j);
            j1 = j1.max(j);
        }
        let deep = pixels
            .iter()
            .max_by_key(|&&(i, j)| {
                let m = (i - i0).min(i1 - i).min(j - j0).min(j1 - j);
                (m, std::cmp::Reverse((j, i)))
            })
            .copied()
            .unwrap();
        let mut reps = vec![exact_center(pixels[0].0, pixels[0].1)];
        if deep != pixels[0] {
            reps.push(exact_center(deep.0, deep.1));
        }
        // exact sign vector at the first representative; must be zero-free
        let (ru, rv) = reps[0].clone();
        let sv: Vec<i8> = curves
            .iter()
            .map(|g| {
                let e = g.eval_uv(&ru, &rv);
                if e.is_zero() {
                    0
                } else if e.is_positive() {
                    1
                } else {
                    -1
                }
            })
            .collect();
        if sv.contains(&0) {
            return Err(Error::ResolutionTooCoarse {
                cell: comp,
                resolution,
            });
        }
        cells.push(Cell {
            id: comp,
            dim: 2,
            sign_vector: sv,
            rep_points: reps,
            bbox: (
                u0 + i0 as f64 * du,
                u0 + (i1 + 1) as f64 * du,
                (v0 + j0 as f64 * dv) * sd,
                (v0 + (j1 + 1) as f64 * dv) * sd,
            ),
            pixel_count: pixels.len(),
        });
    }
    let two_cell_count = cells.len();

    // --- 1-cells: arcs between consecutive 0-cells on each curve ---
    let mut one_cell_mids: Vec<(usize, f64, f64)> = Vec::new(); // (curve idx, x, y)
    for (ci, g) in curves.iter().enumerate() {
        let mut params: Vec<f64> = zero_cells
            .iter()
            .filter(|&&(x, y)| {
                let scale = 1.0 + x * x + y * y;
                g.eval_f64(x, y).abs() <= 1e-8 * scale * 100.0
            })
            .map(|&(x, y)| param_on(g, x, y))
            .collect();
        params.sort_by(|a, b| a.partial_cmp(b).unwrap());
        params.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let is_circle = !g.is_line();
        let mut mids: Vec<f64> = Vec::new();
        if params.is_empty() {
            // curve with no crossings: a single closed arc (circle) or a
            // chord (line) — locate any in-domain point by sampling
            let n = 256;
            for k in 0..n {
                let t = if is_circle {
                    -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64
                } else {
                    super::LINE_RANGE * (2.0 * (k as f64 + 0.5) / n as f64 - 1.0)
                };
                let (x, y) = point_at(g, t);
                if cfg.closed_domain_contains_f64(x, y, -1e-9) {
                    mids.push(t);
                    break;
                }
            }
        } else {
            for w in params.windows(2) {
                mids.push(0.5 * (w[0] + w[1]));
            }
            if is_circle {
                // wrap-around arc between last and first
                let wrap = 0.5 * (params[params.len() - 1] + params[0] + 2.0 * std::f64::consts::PI);
                mids.push(wrap);
            } else {
                // line tails beyond the extreme crossings
                mids.push(params[0] - 0.25);
                mids.push(params[params.len() - 1] + 0.25);
            }
        }
        for t in mids {
            let (x, y) = point_at(g, t);
            if cfg.closed_domain_contains_f64(x, y, 1e-9) {
                one_cell_mids.push((ci, x, y));
            }
        }
    }

    // adjacency probes go through the same classifier the public API uses;
    // a probe that cannot be resolved (wedged between two curves at this
    // resolution) is dropped rather than treated as fatal
    let probe_cell = |x: f64, y: f64| -> Option<usize> {
        let (u, v) = (x, y / sd);
        let i = ((u - u0) / du).floor() as isize;
        let j = ((v - v0) / dv).floor() as isize;
        if i < 0 || j < 0 || i >= res as isize || j >= res as isize {
            return None;
        }
        let c = grid[idx(i as usize, j as usize)];
        if c >= 0 {
            return Some(c as usize);
        }
        // at probe time `cells` holds exactly the 2-cells
        let sv = sign_vector_f64(curves, x, y, 1e-13)?;
        cells
            .iter()
            .find(|cell| cell.sign_vector == sv)
            .map(|cell| cell.id)
    };

    let mut adjacency: Vec<(usize, usize)> = Vec::new();
    let mut one_cell_records: Vec<(usize, f64, f64, Vec<(usize, usize)>)> = Vec::new();
    for &(ci, x, y) in one_cell_mids.iter() {
        let id = cells.len() + one_cell_records.len();
        let g = &curves[ci];
        // normal direction for side probes
        let (nx, ny) = match g.shape_f64() {
            super::ShapeF64::Line { dir, .. } => (-dir.1, dir.0),
            super::ShapeF64::Circle { center, .. } => {
                let (ex, ey) = (x - center.0, y - center.1);
                let n = (ex * ex + ey * ey).sqrt();
                (ex / n, ey / n)
            }
        };
        let probe = 1.75 * du.max(dv * sd);
        let mut incident = Vec::new();
        for side in [-1.0, 1.0] {
            let (px, py) = (x + side * probe * nx, y + side * probe * ny);
            if !cfg.closed_domain_contains_f64(px, py, -1e-9) {
                continue; // boundary arcs have only one interior side
            }
            if let Some(c) = probe_cell(px, py) {
                incident.push((id, c));
            }
        }
        one_cell_records.push((ci, x, y, incident));
    }
    for (ci, x, y, incident) in one_cell_records {
        let id = cells.len();
        adjacency.extend(incident);
        let sv: Vec<i8> = curves
            .iter()
            .enumerate()
            .map(|(m, h)| {
                if m == ci {
                    return 0;
                }
                let e = h.eval_f64(x, y);
                if e.abs() <= 1e-10 {
                    0
                } else if e > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        cells.push(Cell {
            id,
            dim: 1,
            sign_vector: sv,
            rep_points: vec![(
                BigRational::from_float(x).unwrap_or_else(BigRational::zero),
                BigRational::from_float(y / sd).unwrap_or_else(BigRational::zero),
            )],
            bbox: (x, x, y, y),
            pixel_count: 0,
        });
    }

    for &(x, y) in &zero_cells {
        let id = cells.len();
        let sv: Vec<i8> = curves
            .iter()
            .map(|g| {
                let e = g.eval_f64(x, y);
                if e.abs() <= 1e-8 {
                    0
                } else if e > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        cells.push(Cell {
            id,
            dim: 0,
            sign_vector: sv,
            rep_points: vec![(
                BigRational::from_float(x).unwrap_or_else(BigRational::zero),
                BigRational::from_float(y / sd).unwrap_or_else(BigRational::zero),
            )],
            bbox: (x, x, y, y),
            pixel_count: 0,
        });
    }

    Ok(CellComplex {
        d: cfg.d,
        curves: curves.to_vec(),
        cells,
        adjacency,
        n0,
        resolution,
        two_cell_count,
        grid,
        rect: (u0, v0, du, dv),
    })
}

impl CellComplex {
    pub fn two_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().take(self.two_cell_count)
    }

    /// Component pixels of a 2-cell (for sampling).
    fn pixels_of(&self, comp: usize) -> Vec<(usize, usize)> {
        let res = self.resolution;
        let mut out = Vec::new();
        for j in 0..res {
            for i in 0..res {
                if self.grid[j * res + i] == comp as i32 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// 2-cell id containing the floating point, or None if the point is
    /// outside I or too close to a curve to take sides. The grid resolves
    /// position; the query's own sign vector arbitrates, since a classified
    /// pixel can still have a curve running through it away from its center.
    pub fn classify_f64(&self, x: f64, y: f64) -> Option<usize> {
        let sd = (self.d as f64).sqrt();
        let (u0, v0, du, dv) = self.rect;
        let res = self.resolution as isize;
        let (u, v) = (x, y / sd);
        let i = ((u - u0) / du).floor() as isize;
        let j = ((v - v0) / dv).floor() as isize;
        if i < 0 || j < 0 || i >= res || j >= res {
            return None;
        }
        let sv = sign_vector_f64(&self.curves, x, y, 1e-13)?;
        // own pixel first, then the 8-neighborhood: distinct components
        // sharing a sign vector are never this close together
        for (ni, nj) in [
            (i, j),
            (i - 1, j),
            (i + 1, j),
            (i, j - 1),
            (i, j + 1),
            (i - 1, j - 1),
            (i + 1, j - 1),
            (i - 1, j + 1),
            (i + 1, j + 1),
        ] {
            if ni < 0 || nj < 0 || ni >= res || nj >= res {
                continue;
            }
            let c = self.grid[(nj * res + ni) as usize];
            if c >= 0 && self.cells[c as usize].sign_vector == sv {
                return Some(c as usize);
            }
        }
        None
    }

    /// Total area of the 2-cells in real coordinates.
    pub fn two_cell_area(&self) -> f64 {
        let sd = (self.d as f64).sqrt();
        let (_, _, du, dv) = self.rect;
        let pixel_area = du * (dv * sd);
        self.two_cells().map(|c| c.pixel_count as f64).sum::<f64>() * pixel_area
    }
}

// ---------------------------------------------------------------------------
// verify_markov
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MarkovViolation {
    pub alpha: String,
    pub cell: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ViolationReport {
    pub triples_tested: u64,
    pub membership_violations: Vec<MarkovViolation>,
    pub image_violations: Vec<MarkovViolation>,
}

impl ViolationReport {
    pub fn total_violations(&self) -> usize {
        self.membership_violations.len() + self.image_violations.len()
    }
}

/// Admissible-digit candidates with 1 <= qnorm <= bound, in deterministic
/// (qnorm, a, b) order. Digits of norm 1 have empty regions and simply
/// never claim a cell.
pub fn digit_candidates(cfg: &FieldConfig, norm_bound: i64) -> Vec<QuadInt> {
    let ff = FastField::new(cfg);
    let mut out: Vec<(i64, i64, i64)> = Vec::new();
    let lim = (norm_bound as f64).sqrt() as i64 + 2;
    let range = if cfg.d % 4 == 3 { 2 * lim } else { lim };
    for a in -range..=range {
        for b in -range..=range {
            let n = ff.qnorm((a, b));
            if n >= 1 && n <= norm_bound {
                out.push((n, a, b));
            }
        }
    }
    out.sort();
    out.into_iter()
        .map(|(_, a, b)| QuadInt::from_i64(cfg.d, a, b))
        .collect()
}

/// Exact membership z in TO_alpha for z = w/q: z must lie in the strict
/// domain and its preimage h_alpha(z) = 1/(z + alpha) must too.
fn to_alpha_contains(ff: &FastField, w: (i64, i64), q: i64, alpha: (i64, i64)) -> bool {
    if !ff.strict_contains(w, q) {
        return false;
    }
    // h = q / (w + alpha q); strict test on coords of conj-multiplied form
    let wa = (w.0 + alpha.0 * q, w.1 + alpha.1 * q);
    let den_norm = ff.qnorm(wa);
    if den_norm == 0 {
        return false;
    }
    let hw = ff.mul((q, 0), ff.conj(wa));
    ff.strict_contains(hw, den_norm)
}

/// Samples every (digit, 2-cell) pair: (1) all sample points of a cell must
/// agree on membership in TO_alpha; (2) when a cell is inside TO_alpha, all
/// images under h_alpha must land in one cell of the complex. Violations
/// are returned as data with witnesses.
pub fn verify_markov(
    complex: &CellComplex,
    cfg: &FieldConfig,
    digit_norm_bound: i64,
    samples: u64,
    seed: u64,
) -> Result<ViolationReport> {
    let ff = FastField::new(cfg);
    let digits = digit_candidates(cfg, digit_norm_bound);
    let alphas: Vec<(i64, i64)> = digits
        .iter()
        .map(|a| (i64::try_from(&a.a).unwrap(), i64::try_from(&a.b).unwrap()))
        .collect();
    let n_two = complex.two_cell_count;
    if n_two == 0 || alphas.is_empty() {
        return Err(Error::InvalidArgument(
            "empty complex or digit set".into(),
        ));
    }
    let per_cell =
        ((samples as usize).div_ceil(alphas.len() * n_two)).clamp(6, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let res = complex.resolution as i64;
    let (umax, vmax) = domain_extents(cfg);
    // common denominator for exact sample coordinates: u = pu / (32 res D),
    // with D clearing the rectangle rationals
    let denom_max: i64 = i64::try_from(umax.denom().max(vmax.denom())).unwrap();
    let du_den: i64 = 32 * res * denom_max;

    let mut report = ViolationReport::default();

    // exact samples per 2-cell: (w, q) pairs in O_d over common q
    let mut cell_samples: Vec<Vec<((i64, i64), i64)>> = Vec::with_capacity(n_two);
    for comp in 0..n_two {
        let pixels = complex.pixels_of(comp);
        let mut pts = Vec::with_capacity(per_cell);
        let mut guard = 0;
        while pts.len() < per_cell && guard < 200 * per_cell {
            guard += 1;
            let &(i, j) = &pixels[rng.gen_range(0..pixels.len())];
            let (ru, rv) = (rng.gen_range(1..16i64), rng.gen_range(1..16i64));
            // u = -umax + (16 i + ru) * (2 umax) / (16 res), exact with
            // denominator du_den; likewise v
            let unum = -du_den / 2 + (16 * i as i64 + ru) * (du_den / (16 * res));
            let vnum_span = ratio_num_scaled(&vmax, du_den); // vmax scaled
            let vnum = -vnum_span + (16 * j as i64 + rv) * (2 * vnum_span / (16 * res));
            // convert (u, v) = (unum, vnum)/du_den to an O_d fraction w/q
            let (w, q) = uv_to_fraction(cfg, unum, vnum, du_den);
            if !ff.strict_contains(w, q) {
                continue;
            }
            // the sample must carry the cell's exact sign vector
            if !exact_signs_match(complex, comp, cfg.d, w, q) {
                continue;
            }
            pts.push((w, q));
        }
        if pts.is_empty() {
            return Err(Error::ResolutionTooCoarse {
                cell: comp,
                resolution: complex.resolution,
            });
        }
        cell_samples.push(pts);
    }

    for (ai, &alpha) in alphas.iter().enumerate() {
        for comp in 0..n_two {
            let pts = &cell_samples[comp];
            let mut inside = 0usize;
            for &(w, q) in pts {
                if to_alpha_contains(&ff, w, q, alpha) {
                    inside += 1;
                }
                report.triples_tested += 1;
            }
            if inside != 0 && inside != pts.len() {
                report.membership_violations.push(MarkovViolation {
                    alpha: digits[ai].to_string(),
                    cell: comp,
                    detail: format!(
                        "{inside}/{} samples inside TO_alpha",
                        pts.len()
                    ),
                });
                continue;
            }
            if inside == 0 {
                continue;
            }
            // branch image: all h_alpha(samples) must share one 2-cell
            let mut target: Option<usize> = None;
            let mut consistent = true;
            for &(w, q) in pts {
                let wa = (w.0 + alpha.0 * q, w.1 + alpha.1 * q);
                let den_norm = ff.qnorm(wa);
                let hw = ff.mul((q, 0), ff.conj(wa));
                let (x, y) = fraction_to_xy(cfg, hw, den_norm);
                match complex.classify_f64(x, y) {
                    Some(c) => {
                        if let Some(t) = target {
                            if t != c {
                                consistent = false;
                            }
                        } else {
                            target = Some(c);
                        }
                    }
                    None => {
                        // image fell on a curve at float precision; skip
                        // this sample rather than guess
                    }
                }
            }
            if !consistent {
                report.image_violations.push(MarkovViolation {
                    alpha: digits[ai].to_string(),
                    cell: comp,
                    detail: "h_alpha images straddle two cells".into(),
                });
            }
        }
    }
    Ok(report)
}

/// vmax scaled to the common denominator (vmax * den must be integral).
fn ratio_num_scaled(x: &BigRational, den: i64) -> i64 {
    let scaled = x * BigRational::from_integer(den.into());
    debug_assert!(scaled.is_integer());
    i64::try_from(&scaled.to_integer()).unwrap()
}

/// (u, v) = (unum, vnum)/den as an O_d fraction w/q.
fn uv_to_fraction(cfg: &FieldConfig, unum: i64, vnum: i64, den: i64) -> ((i64, i64), i64) {
    if cfg.d % 4 != 3 {
        // z = (unum + vnum sqrt(-d))/den
        ((unum, vnum), den)
    } else {
        // sqrt(-d) = 2w - 1: z = (unum - vnum + 2 vnum w)/den
        ((unum - vnum, 2 * vnum), den)
    }
}

fn fraction_to_xy(cfg: &FieldConfig, w: (i64, i64), q: i64) -> (f64, f64) {
    let sd = (cfg.d as f64).sqrt();
    let (u2, v2) = if cfg.d % 4 == 3 {
        (2 * w.0 + w.1, w.1)
    } else {
        (2 * w.0, 2 * w.1)
    };
    let qq = 2.0 * q as f64;
    (u2 as f64 / qq, v2 as f64 * sd / qq)
}

/// Exact sign-vector agreement between a sample and its 2-cell.
fn exact_signs_match(
    complex: &CellComplex,
    comp: usize,
    d: u8,
    w: (i64, i64),
    q: i64,
) -> bool {
    let (u2, v2) = if d % 4 == 3 {
        (2 * w.0 + w.1, w.1)
    } else {
        (2 * w.0, 2 * w.1)
    };
    let u = BigRational::new(u2.into(), (2 * q).into());
    let v = BigRational::new(v2.into(), (2 * q).into());
    complex.cells[comp]
        .sign_vector
        .iter()
        .zip(complex.curves.iter())
        .all(|(&s, g)| {
            let e = g.eval_uv(&u, &v);
            match s {
                1 => e.is_positive(),
                -1 => e.is_negative(),
                _ => false,
            }
        })
}
