//! Rational ensembles Sigma_n = {z in I' with ht(z)^2 = n} and
//! Omega_N = union of Sigma_n for n <= N, their cost statistics (moments,
//! Kolmogorov-Smirnov distance to the Gaussian, mod-q equidistribution), and
//! Dirichlet partial sums with power-law fits.
//!
//! The heavy passes run on integer pairs through `FastField`; the exact
//! `QuadRat` path is reserved for enumeration oracles and streamed output.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cf::{expand, CFExpansion, CostFunction};
use crate::ring::fast::FastField;
use crate::ring::{FieldConfig, QuadInt, QuadRat};
use crate::{Error, Result};

type Pair = (i64, i64);

/// Expansion-length cap honored by the fast integer path; the height bound
/// ln(n)/ln(1/R) + 1 must stay below it.
const LENGTH_CAP: f64 = 190.0;

/// KS samples beyond this size are thinned by reservoir sampling.
const KS_RESERVOIR_CAP: usize = 1_000_000;

// ---------------------------------------------------------------------------
// Ensemble specification
// ---------------------------------------------------------------------------

/// Height-sliced ensemble: canonical reduced fractions a/b in the strict
/// domain with qnorm(b) <= n_max (ht(z) = |b| on I, so ht^2 = qnorm(b)).
#[derive(Debug, Clone, Copy)]
pub struct OmegaSpec {
    pub d: u8,
    pub n_max: i64,
}

impl OmegaSpec {
    pub fn new(d: u8, n_max: i64) -> Result<Self> {
        let spec = OmegaSpec { d, n_max };
        spec.config()?;
        Ok(spec)
    }

    /// Field table entry, after validating that every expansion in range
    /// terminates within the integer path's digit cap.
    pub fn config(&self) -> Result<&'static FieldConfig> {
        let cfg = FieldConfig::new(self.d)?;
        if self.n_max < 1 {
            return Err(Error::InvalidArgument(format!(
                "ensemble bound N = {} must be positive",
                self.n_max
            )));
        }
        let bound = (self.n_max as f64).ln() / (1.0 / cfg.r_sq_f64()).ln() + 1.0;
        if bound > LENGTH_CAP {
            return Err(Error::InvalidArgument(format!(
                "N = {} exceeds the digit cap for d = {} (length bound {bound:.0})",
                self.n_max, self.d
            )));
        }
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// Lattice scans
// ---------------------------------------------------------------------------

/// Numerator bounding box covering b * I for qnorm(b) = n, with one unit of
/// slack; exact membership is decided by `strict_contains`.
fn for_each_numerator(ff: &FastField, n: i64, mut f: impl FnMut(Pair)) {
    let r = (ff.r_sq() * n as f64).sqrt();
    if ff.is3 {
        let bmax = (2.0 * r / (ff.d as f64).sqrt()).floor() as i64 + 1;
        for b in -bmax..=bmax {
            let mid = -b as f64 / 2.0;
            let lo = (mid - r).floor() as i64 - 1;
            let hi = (mid + r).ceil() as i64 + 1;
            for a in lo..=hi {
                f((a, b));
            }
        }
    } else {
        let amax = r.floor() as i64 + 1;
        let bmax = (r / (ff.d as f64).sqrt()).floor() as i64 + 1;
        for a in -amax..=amax {
            for b in -bmax..=bmax {
                f((a, b));
            }
        }
    }
}

/// All lattice points with 1 <= qnorm <= n_max, canonical associates only,
/// bucketed by qnorm.
fn canonical_denominators(ff: &FastField, n_max: i64) -> Vec<Vec<Pair>> {
    let mut buckets = vec![Vec::new(); (n_max + 1) as usize];
    let r = (n_max as f64).sqrt();
    let (amax, bmax) = if ff.is3 {
        let bm = (2.0 * r / (ff.d as f64).sqrt()).floor() as i64 + 1;
        ((r.ceil() as i64) + bm / 2 + 1, bm)
    } else {
        (
            r.floor() as i64 + 1,
            (r / (ff.d as f64).sqrt()).floor() as i64 + 1,
        )
    };
    for a in -amax..=amax {
        for b in -bmax..=bmax {
            let p = (a, b);
            if p == (0, 0) {
                continue;
            }
            let n = ff.qnorm(p);
            if n <= n_max && ff.canonical_associate(p) == p {
                buckets[n as usize].push(p);
            }
        }
    }
    buckets
}

/// Visit every reduced fraction of Sigma_n once: for each canonical
/// denominator of norm n, scan numerators, keep strict-domain members, and
/// keep only unit-gcd pairs (detected from the expansion's terminal norm).
/// The callback receives the pair and its digit word.
fn scan_sigma(
    ff: &FastField,
    denominators: &[Pair],
    n: i64,
    digits: &mut Vec<Pair>,
    mut f: impl FnMut(Pair, Pair, &[Pair]),
) {
    for &b in denominators {
        for_each_numerator(ff, n, |a| {
            let w = ff.mul(a, ff.conj(b));
            if !ff.strict_contains(w, n) {
                return;
            }
            let tail = ff
                .expand(a, b, digits)
                .expect("expansion terminates within the validated cap");
            if tail == 1 {
                f(a, b, digits);
            }
        });
    }
}

// ---------------------------------------------------------------------------
// Exact enumeration
// ---------------------------------------------------------------------------

/// All of Sigma_n as exact canonical fractions, ordered by denominator then
/// numerator coordinates.
pub fn enumerate_sigma(cfg: &FieldConfig, n: i64) -> Result<Vec<QuadRat>> {
    if n < 1 {
        return Ok(Vec::new());
    }
    OmegaSpec::new(cfg.d, n)?;
    let ff = FastField::new(cfg);
    let denominators: Vec<Pair> = canonical_denominators(&ff, n)
        .swap_remove(n as usize);
    let mut pairs: Vec<(Pair, Pair)> = Vec::new();
    let mut digits = Vec::new();
    scan_sigma(&ff, &denominators, n, &mut digits, |a, b, _| {
        pairs.push((b, a));
    });
    pairs.sort_unstable();
    pairs
        .into_iter()
        .map(|(b, a)| {
            QuadRat::new(
                QuadInt::from_i64(cfg.d, a.0, a.1),
                QuadInt::from_i64(cfg.d, b.0, b.1),
            )
        })
        .collect()
}

/// Stream Omega_N in deterministic order (by ht^2, then by canonical form),
/// expanding each fraction exactly once.
pub fn enumerate_omega<F>(spec: &OmegaSpec, mut f: F) -> Result<u64>
where
    F: FnMut(&QuadRat, &CFExpansion) -> Result<()>,
{
    let cfg = spec.config()?;
    let mut count = 0u64;
    for n in 1..=spec.n_max {
        for z in enumerate_sigma(cfg, n)? {
            let e = expand(&z, cfg)?;
            f(&z, &e)?;
            count += 1;
        }
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// Exact length histogram (cost = word length)
// ---------------------------------------------------------------------------

/// rows[n][l] = #{z in Sigma_n : l(z) = l}. Exact integer data; every
/// length-cost statistic of Omega_N derives from prefix sums of this table.
#[derive(Debug, Clone)]
pub struct LengthHistogram {
    pub d: u8,
    pub n_max: i64,
    pub rows: Vec<Vec<u64>>,
}

/// One parallel pass over all reduced pairs with qnorm(b) <= n_max.
pub fn length_histogram(spec: &OmegaSpec) -> Result<LengthHistogram> {
    let cfg = spec.config()?;
    let ff = FastField::new(cfg);
    let buckets = canonical_denominators(&ff, spec.n_max);
    let ns: Vec<i64> = (1..=spec.n_max).collect();
    let chunks: Vec<Vec<Vec<u64>>> = ns
        .par_chunks(512)
        .map(|chunk| {
            let mut digits = Vec::new();
            let mut out = Vec::with_capacity(chunk.len());
            for &n in chunk {
                let mut row: Vec<u64> = Vec::new();
                scan_sigma(&ff, &buckets[n as usize], n, &mut digits, |_, _, ds| {
                    let l = ds.len();
                    if row.len() <= l {
                        row.resize(l + 1, 0);
                    }
                    row[l] += 1;
                });
                out.push(row);
            }
            out
        })
        .collect();
    let mut rows = vec![Vec::new()];
    for chunk in chunks {
        rows.extend(chunk);
    }
    Ok(LengthHistogram {
        d: spec.d,
        n_max: spec.n_max,
        rows,
    })
}

impl LengthHistogram {
    pub fn sigma_count(&self, n: i64) -> u64 {
        self.rows
            .get(n as usize)
            .map(|r| r.iter().sum())
            .unwrap_or(0)
    }

    /// Aggregated length counts over Omega_N for N = n_max.
    pub fn length_counts(&self, n_max: i64) -> Vec<u64> {
        let mut counts: Vec<u64> = Vec::new();
        for row in self.rows.iter().take(n_max as usize + 1).skip(1) {
            if counts.len() < row.len() {
                counts.resize(row.len(), 0);
            }
            for (l, &c) in row.iter().enumerate() {
                counts[l] += c;
            }
        }
        counts
    }

    pub fn count(&self, n_max: i64) -> u64 {
        self.length_counts(n_max).iter().sum()
    }

    /// Population mean and variance of the length over Omega_N.
    pub fn mean_variance(&self, n_max: i64) -> Result<(f64, f64)> {
        let counts = self.length_counts(n_max);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidArgument(format!(
                "Omega_{n_max} is empty"
            )));
        }
        let t = total as f64;
        let mean = weighted_sum(&counts, |l| l as f64) / t;
        let var = weighted_sum(&counts, |l| (l as f64 - mean) * (l as f64 - mean)) / t;
        Ok((mean, var))
    }

    /// Exact KS distance between the standardized length distribution and
    /// the standard normal, evaluated at every atom.
    pub fn ks_at(&self, n_max: i64) -> Result<f64> {
        let counts = self.length_counts(n_max);
        let total: u64 = counts.iter().sum();
        let (mean, var) = self.mean_variance(n_max)?;
        if var <= 0.0 {
            return Err(Error::DegenerateSample);
        }
        let sd = var.sqrt();
        let t = total as f64;
        let mut cum = 0u64;
        let mut d = 0.0f64;
        for (l, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let x = (l as f64 - mean) / sd;
            let p = phi(x);
            d = d.max((p - cum as f64 / t).abs());
            cum += c;
            d = d.max((cum as f64 / t - p).abs());
        }
        Ok(d)
    }

    /// Residue histogram of the length mod q and the deviation from 1/q.
    pub fn modq(&self, n_max: i64, q: u32) -> Result<(Vec<u64>, f64)> {
        if q == 0 {
            return Err(Error::InvalidArgument("q must be positive".into()));
        }
        let counts = self.length_counts(n_max);
        let mut residues = vec![0u64; q as usize];
        for (l, &c) in counts.iter().enumerate() {
            residues[l % q as usize] += c;
        }
        let total: u64 = residues.iter().sum();
        if total == 0 {
            return Err(Error::InvalidArgument(format!("Omega_{n_max} is empty")));
        }
        let dev = residues
            .iter()
            .map(|&c| (c as f64 / total as f64 - 1.0 / q as f64).abs())
            .fold(0.0, f64::max);
        Ok((residues, dev))
    }

    /// Partial sum of the Dirichlet series at real w: sum over Omega_N of
    /// e^{w l(z)}.
    pub fn dirichlet_real(&self, n_max: i64, w: f64) -> f64 {
        let counts = self.length_counts(n_max);
        weighted_sum(&counts, |l| (w * l as f64).exp())
    }

    /// Partial sum at purely imaginary w = i tau, as (re, im).
    pub fn dirichlet_imag(&self, n_max: i64, tau: f64) -> (f64, f64) {
        let counts = self.length_counts(n_max);
        let re = weighted_sum(&counts, |l| (tau * l as f64).cos());
        let im = weighted_sum(&counts, |l| (tau * l as f64).sin());
        (re, im)
    }
}

fn weighted_sum(counts: &[u64], f: impl Fn(usize) -> f64) -> f64 {
    counts
        .iter()
        .enumerate()
        .map(|(l, &c)| c as f64 * f(l))
        .sum()
}

// ---------------------------------------------------------------------------
// Fast cost evaluation on digit words
// ---------------------------------------------------------------------------

enum FastCost<'a> {
    Len,
    LogAbs,
    Table {
        table: &'a BTreeMap<(i64, i64), u32>,
        default: u32,
    },
}

impl<'a> FastCost<'a> {
    fn of(cost: &'a CostFunction) -> Self {
        match cost {
            CostFunction::ConstantOne => FastCost::Len,
            CostFunction::LogAbs => FastCost::LogAbs,
            CostFunction::CustomInteger { table, default, .. } => FastCost::Table {
                table,
                default: *default,
            },
        }
    }

    fn value(&self, ff: &FastField, digits: &[Pair]) -> f64 {
        match self {
            FastCost::Len => digits.len() as f64,
            FastCost::LogAbs => digits
                .iter()
                .map(|&p| 0.5 * (ff.qnorm(p) as f64).ln())
                .sum(),
            FastCost::Table { .. } => self.int_value(digits).expect("table cost is integral") as f64,
        }
    }

    fn int_value(&self, digits: &[Pair]) -> Option<i64> {
        match self {
            FastCost::Len => Some(digits.len() as i64),
            FastCost::LogAbs => None,
            FastCost::Table { table, default } => Some(
                digits
                    .iter()
                    .map(|p| *table.get(p).unwrap_or(default) as i64)
                    .sum(),
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov machinery
// ---------------------------------------------------------------------------

/// Abramowitz-Stegun 7.1.26 rational approximation of erf (1.5e-7 absolute).
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Standard normal CDF.
fn phi(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Center and scale a sample by its own mean and standard deviation.
pub fn standardize(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::DegenerateSample);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    let sd = var.sqrt();
    Ok(xs.iter().map(|x| (x - mean) / sd).collect())
}

/// Sup distance between the empirical CDF of an (already standardized)
/// sample and the standard normal CDF.
pub fn ks_normal(sample: &[f64]) -> Result<f64> {
    if sample.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "KS needs at least 100 points, got {}",
            sample.len()
        )));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let p = phi(x);
        d = d.max((p - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - p).abs());
    }
    Ok(d)
}

/// Fixed-capacity uniform reservoir (algorithm R), fed in deterministic
/// ensemble order.
struct KsReservoir {
    buf: Vec<f64>,
    seen: u64,
    rng: ChaCha8Rng,
}

impl KsReservoir {
    fn new(seed: u64) -> Self {
        KsReservoir {
            buf: Vec::new(),
            seen: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn push(&mut self, v: f64) {
        self.seen += 1;
        if self.buf.len() < KS_RESERVOIR_CAP {
            self.buf.push(v);
        } else {
            let j = self.rng.gen_range(0..self.seen);
            if (j as usize) < KS_RESERVOIR_CAP {
                self.buf[j as usize] = v;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Moment table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MomentRow {
    pub n_max: i64,
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub ks: f64,
    /// Residue counts of the integer cost mod q; empty for real-valued costs.
    pub modq: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct CostMoments {
    pub cost_id: String,
    pub integer_valued: bool,
    pub rows: Vec<MomentRow>,
}

#[derive(Debug, Clone)]
pub struct MomentTable {
    pub d: u8,
    pub q: u32,
    pub tables: Vec<CostMoments>,
}

struct CostAcc {
    sum: f64,
    sumsq: f64,
    modq: Option<Vec<u64>>,
    ks: KsReservoir,
}

/// One streaming pass over Omega_{max grid} accumulating count, sum, and
/// sum-of-squares per cost, with rows emitted at each checkpoint. KS uses
/// the exact sample below the reservoir cap and a seeded reservoir above it.
pub fn moment_table(
    spec: &OmegaSpec,
    costs: &[CostFunction],
    n_grid: &[i64],
    q: u32,
) -> Result<MomentTable> {
    let cfg = spec.config()?;
    if costs.is_empty() {
        return Err(Error::InvalidArgument("no cost functions given".into()));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    validate_grid(n_grid, spec.n_max)?;
    let ff = FastField::new(cfg);
    let buckets = canonical_denominators(&ff, spec.n_max);

    let mut accs: Vec<CostAcc> = costs
        .iter()
        .enumerate()
        .map(|(k, c)| CostAcc {
            sum: 0.0,
            sumsq: 0.0,
            modq: c.integer_valued().then(|| vec![0u64; q as usize]),
            ks: KsReservoir::new(0x5854_u64 ^ (k as u64) << 8),
        })
        .collect();
    let mut count = 0u64;
    let mut tables: Vec<CostMoments> = costs
        .iter()
        .map(|c| CostMoments {
            cost_id: c.id(),
            integer_valued: c.integer_valued(),
            rows: Vec::new(),
        })
        .collect();

    // chunks aligned so that no chunk straddles a checkpoint
    let mut edges: Vec<i64> = Vec::new();
    let mut lo = 1i64;
    for &g in n_grid {
        while lo <= g {
            let hi = (lo + 63).min(g);
            edges.push(hi);
            lo = hi + 1;
        }
    }
    let mut grid_iter = n_grid.iter().peekable();
    let mut start = 1i64;
    for hi in edges {
        let ns: Vec<i64> = (start..=hi).collect();
        start = hi + 1;
        // per-n partials: (count, per-cost (sum, sumsq, modq, values))
        type NPartial = (u64, Vec<(f64, f64, Vec<u64>, Vec<f64>)>);
        let partials: Vec<NPartial> = ns
            .par_iter()
            .map(|&n| {
                let mut digits = Vec::new();
                let mut c = 0u64;
                let mut per: Vec<(f64, f64, Vec<u64>, Vec<f64>)> = costs
                    .iter()
                    .map(|_| (0.0, 0.0, vec![0u64; q as usize], Vec::new()))
                    .collect();
                let fasts: Vec<FastCost> = costs.iter().map(FastCost::of).collect();
                scan_sigma(&ff, &buckets[n as usize], n, &mut digits, |_, _, ds| {
                    c += 1;
                    for (fc, acc) in fasts.iter().zip(per.iter_mut()) {
                        let v = fc.value(&ff, ds);
                        acc.0 += v;
                        acc.1 += v * v;
                        if let Some(iv) = fc.int_value(ds) {
                            acc.2[iv.rem_euclid(q as i64) as usize] += 1;
                        }
                        acc.3.push(v);
                    }
                });
                (c, per)
            })
            .collect();
        for (c, per) in partials {
            count += c;
            for (acc, (s, s2, mq, values)) in accs.iter_mut().zip(per.into_iter()) {
                acc.sum += s;
                acc.sumsq += s2;
                if let Some(m) = acc.modq.as_mut() {
                    for (t, v) in m.iter_mut().zip(mq) {
                        *t += v;
                    }
                }
                for v in values {
                    acc.ks.push(v);
                }
            }
        }
        if grid_iter.peek() == Some(&&hi) {
            grid_iter.next();
            for (acc, table) in accs.iter_mut().zip(tables.iter_mut()) {
                if count == 0 {
                    return Err(Error::InvalidArgument(format!("Omega_{hi} is empty")));
                }
                let t = count as f64;
                let mean = acc.sum / t;
                let variance = (acc.sumsq / t - mean * mean).max(0.0);
                if variance <= 0.0 {
                    return Err(Error::DegenerateSample);
                }
                let sd = variance.sqrt();
                let standardized: Vec<f64> =
                    acc.ks.buf.iter().map(|v| (v - mean) / sd).collect();
                let ks = ks_normal(&standardized)?;
                table.rows.push(MomentRow {
                    n_max: hi,
                    count,
                    mean,
                    variance,
                    ks,
                    modq: acc.modq.clone().unwrap_or_default(),
                });
            }
        }
    }
    Ok(MomentTable {
        d: spec.d,
        q,
        tables,
    })
}

fn validate_grid(n_grid: &[i64], n_max: i64) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::InvalidArgument("empty checkpoint grid".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] < 1 {
        return Err(Error::InvalidArgument(
            "checkpoint grid must be positive and strictly increasing".into(),
        ));
    }
    if *n_grid.last().unwrap() > n_max {
        return Err(Error::InvalidArgument(format!(
            "checkpoint {} exceeds the ensemble bound {n_max}",
            n_grid.last().unwrap()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Mod-q equidistribution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ModqTable {
    pub d: u8,
    pub n_max: i64,
    pub cost_id: String,
    pub q: u32,
    pub counts: Vec<u64>,
    pub total: u64,
    pub deviation: f64,
}

/// Residues of an integer-valued cost over Omega_N and the max deviation of
/// their frequencies from the uniform 1/q.
pub fn modq_table(spec: &OmegaSpec, cost: &CostFunction, q: u32) -> Result<ModqTable> {
    let cfg = spec.config()?;
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    if !cost.integer_valued() {
        return Err(Error::InvalidArgument(format!(
            "cost '{}' is not integer-valued",
            cost.id()
        )));
    }
    let ff = FastField::new(cfg);
    let buckets = canonical_denominators(&ff, spec.n_max);
    let ns: Vec<i64> = (1..=spec.n_max).collect();
    let partials: Vec<Vec<u64>> = ns
        .par_chunks(512)
        .map(|chunk| {
            let fc = FastCost::of(cost);
            let mut digits = Vec::new();
            let mut counts = vec![0u64; q as usize];
            for &n in chunk {
                scan_sigma(&ff, &buckets[n as usize], n, &mut digits, |_, _, ds| {
                    let v = fc.int_value(ds).expect("integer cost");
                    counts[v.rem_euclid(q as i64) as usize] += 1;
                });
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; q as usize];
    for p in partials {
        for (t, v) in counts.iter_mut().zip(p) {
            *t += v;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument(format!(
            "Omega_{} is empty",
            spec.n_max
        )));
    }
    let deviation = counts
        .iter()
        .map(|&c| (c as f64 / total as f64 - 1.0 / q as f64).abs())
        .fold(0.0, f64::max);
    Ok(ModqTable {
        d: spec.d,
        n_max: spec.n_max,
        cost_id: cost.id(),
        q,
        counts,
        total,
        deviation,
    })
}

// ---------------------------------------------------------------------------
// Dirichlet partial sums
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DirichletSeries {
    pub d: u8,
    pub w: (f64, f64),
    pub cost_id: String,
    /// Cumulative partial sums (N, re, im) at each checkpoint.
    pub partials: Vec<(i64, f64, f64)>,
    /// For real w: least-squares slope of log |S_N| against log N.
    pub fit_slope: Option<f64>,
    /// For imaginary w: |S_N(i tau)| / S_N(0) at each checkpoint.
    pub decay_ratios: Option<Vec<(i64, f64)>>,
}

/// Partial sums of the twisted counting series sum_z e^{w C(z)} over
/// Omega_N at each checkpoint. Real w fits the power law; purely imaginary
/// w reports cancellation ratios.
pub fn dirichlet_partial(
    spec: &OmegaSpec,
    cost: &CostFunction,
    w: (f64, f64),
    n_grid: &[i64],
) -> Result<DirichletSeries> {
    let cfg = spec.config()?;
    validate_grid(n_grid, spec.n_max)?;
    let real = w.1 == 0.0;
    if real {
        if w.0.abs() > 0.05 {
            return Err(Error::InvalidArgument(format!(
                "real twist w = {} outside [-0.05, 0.05]",
                w.0
            )));
        }
    } else {
        if w.0 != 0.0 {
            return Err(Error::InvalidArgument(
                "twist must be real or purely imaginary".into(),
            ));
        }
        if w.1.abs() >= std::f64::consts::PI || w.1 == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "imaginary twist tau = {} outside (0, pi)",
                w.1
            )));
        }
    }
    let ff = FastField::new(cfg);
    let buckets = canonical_denominators(&ff, spec.n_max);
    let top = *n_grid.last().unwrap();
    let ns: Vec<i64> = (1..=top).collect();
    // per-n sums (re, im, count), merged in order
    let per_n: Vec<(f64, f64, u64)> = ns
        .par_chunks(512)
        .map(|chunk| {
            let fc = FastCost::of(cost);
            let mut digits = Vec::new();
            let mut out = Vec::with_capacity(chunk.len());
            for &n in chunk {
                let (mut re, mut im, mut c) = (0.0f64, 0.0f64, 0u64);
                scan_sigma(&ff, &buckets[n as usize], n, &mut digits, |_, _, ds| {
                    let v = fc.value(&ff, ds);
                    if real {
                        re += (w.0 * v).exp();
                    } else {
                        re += (w.1 * v).cos();
                        im += (w.1 * v).sin();
                    }
                    c += 1;
                });
                out.push((re, im, c));
            }
            out
        })
        .flatten()
        .collect();

    let mut partials = Vec::with_capacity(n_grid.len());
    let mut ratios = Vec::with_capacity(n_grid.len());
    let (mut re, mut im, mut c) = (0.0f64, 0.0f64, 0u64);
    let mut grid_iter = n_grid.iter().peekable();
    for (i, &(r, j, k)) in per_n.iter().enumerate() {
        re += r;
        im += j;
        c += k;
        let n = i as i64 + 1;
        if grid_iter.peek() == Some(&&n) {
            grid_iter.next();
            partials.push((n, re, im));
            if c > 0 {
                ratios.push((n, (re * re + im * im).sqrt() / c as f64));
            }
        }
    }
    let fit_slope = if real && partials.len() >= 2 {
        let xs: Vec<f64> = partials.iter().map(|&(n, ..)| (n as f64).ln()).collect();
        let ys: Vec<f64> = partials.iter().map(|&(_, r, _)| r.max(1e-300).ln()).collect();
        Some(linear_fit(&xs, &ys).0)
    } else {
        None
    };
    Ok(DirichletSeries {
        d: spec.d,
        w,
        cost_id: cost.id(),
        partials,
        fit_slope,
        decay_ratios: (!real).then_some(ratios),
    })
}

/// Least-squares line through (xs, ys): (slope, intercept, R^2).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "fit needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::quad_gcd;
    use std::collections::BTreeSet;

    fn cfg(d: u8) -> &'static FieldConfig {
        FieldConfig::new(d).unwrap()
    }

    /// Brute-force |Sigma_n|: loop over every denominator of norm n (all
    /// associates), every numerator, dedup field elements by canonical form.
    fn brute_sigma_count(d: u8, n: i64) -> usize {
        let fc = cfg(d);
        let ff = FastField::new(fc);
        let mut seen: BTreeSet<(Pair, Pair)> = BTreeSet::new();
        let lim = (n as f64).sqrt() as i64 + 2;
        let range = if fc.d % 4 == 3 { 2 * lim } else { lim };
        for ba in -range..=range {
            for bb in -range..=range {
                let b = (ba, bb);
                if b == (0, 0) || ff.qnorm(b) != n {
                    continue;
                }
                for_each_numerator(&ff, n, |a| {
                    let w = ff.mul(a, ff.conj(b));
                    if !ff.strict_contains(w, n) {
                        return;
                    }
                    let g = quad_gcd(
                        &QuadInt::from_i64(d, a.0, a.1),
                        &QuadInt::from_i64(d, b.0, b.1),
                    )
                    .unwrap();
                    if !g.is_unit() {
                        return;
                    }
                    let z = QuadRat::new(
                        QuadInt::from_i64(d, a.0, a.1),
                        QuadInt::from_i64(d, b.0, b.1),
                    )
                    .unwrap();
                    let key = (
                        (
                            i64::try_from(&z.num.a).unwrap(),
                            i64::try_from(&z.num.b).unwrap(),
                        ),
                        (
                            i64::try_from(&z.den.a).unwrap(),
                            i64::try_from(&z.den.b).unwrap(),
                        ),
                    );
                    seen.insert(key);
                });
            }
        }
        seen.len()
    }

    #[test]
    fn sigma_matches_brute_force_enumeration() {
        for d in [1u8, 3] {
            for n in 1..=60 {
                let fast = enumerate_sigma(cfg(d), n).unwrap().len();
                let brute = brute_sigma_count(d, n);
                assert_eq!(fast, brute, "Sigma_{n} cardinality mismatch for d={d}");
            }
        }
    }

    #[test]
    fn sigma_one_is_the_origin_in_every_field() {
        for d in [1u8, 2, 3, 7, 11] {
            let s1 = enumerate_sigma(cfg(d), 1).unwrap();
            assert_eq!(s1.len(), 1, "d={d}");
            assert!(s1[0].is_zero(), "d={d}");
        }
    }

    #[test]
    fn gaussian_sigma_is_empty_off_the_two_square_norms() {
        for n in 1..=100i64 {
            let empty = enumerate_sigma(cfg(1), n).unwrap().is_empty();
            if n % 4 == 3 {
                assert!(empty, "n={n} should admit no denominators");
            }
        }
    }

    #[test]
    fn omega_stream_is_ordered_reduced_and_bounded() {
        let fc = cfg(2);
        let spec = OmegaSpec::new(2, 120).unwrap();
        let mut keys: Vec<(i64, (i64, i64, i64, i64))> = Vec::new();
        let mut seen = BTreeSet::new();
        let count = enumerate_omega(&spec, |z, e| {
            let n = i64::try_from(&z.den.qnorm()).unwrap();
            assert!(n <= 120);
            // strict domain membership and ht = |den|
            assert!(crate::ring::strict_domain_contains(z, fc));
            assert!(i64::try_from(&e.input.den.qnorm()).unwrap() == n);
            // length law against the contraction rate
            let bound = (n as f64).ln() / (1.0 / fc.r_sq_f64()).ln() + 1.0;
            assert!((e.length() as f64) <= bound + 1e-9, "length law at n={n}");
            // reconstruction through the convergent matrix
            match e.convergents.last() {
                Some(m) => {
                    let back = m.mobius_at_zero().unwrap();
                    assert!(back.eq_value(z), "reconstruction failed");
                }
                None => assert!(z.is_zero(), "only 0 has the empty word"),
            }
            let key = (
                i64::try_from(&z.num.a).unwrap(),
                i64::try_from(&z.num.b).unwrap(),
                i64::try_from(&z.den.a).unwrap(),
                i64::try_from(&z.den.b).unwrap(),
            );
            assert!(seen.insert(key), "duplicate canonical fraction");
            keys.push((n, key));
            Ok(())
        })
        .unwrap();
        assert_eq!(count as usize, keys.len());
        let sum: usize = (1..=120)
            .map(|n| enumerate_sigma(fc, n).unwrap().len())
            .sum();
        assert_eq!(count as usize, sum, "|Omega_N| = sum of |Sigma_n|");
        assert!(
            keys.windows(2).all(|w| w[0].0 <= w[1].0),
            "stream ordered by ht^2"
        );
    }

    #[test]
    fn histogram_agrees_with_the_exact_stream() {
        let spec = OmegaSpec::new(1, 300).unwrap();
        let hist = length_histogram(&spec).unwrap();
        let mut expected = vec![vec![0u64; 0]; 301];
        enumerate_omega(&spec, |z, e| {
            let n = i64::try_from(&z.den.qnorm()).unwrap() as usize;
            let l = e.length();
            if expected[n].len() <= l {
                expected[n].resize(l + 1, 0);
            }
            expected[n][l] += 1;
            Ok(())
        })
        .unwrap();
        for n in 1..=300usize {
            assert_eq!(hist.rows[n], expected[n], "row {n}");
        }
        assert_eq!(
            hist.count(300),
            expected.iter().map(|r| r.iter().sum::<u64>()).sum::<u64>()
        );
    }

    #[test]
    fn histogram_moments_grow_along_the_grid() {
        let spec = OmegaSpec::new(1, 2048).unwrap();
        let hist = length_histogram(&spec).unwrap();
        let grid = [256i64, 512, 1024, 2048];
        let mut prev_mean = 0.0;
        for &n in &grid {
            let (mean, var) = hist.mean_variance(n).unwrap();
            assert!(mean > prev_mean, "mean not increasing at {n}");
            assert!(var > 0.0);
            prev_mean = mean;
        }
        // counts grow ~ N^2
        let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = grid
            .iter()
            .map(|&n| (hist.count(n) as f64).ln())
            .collect();
        let (slope, _, r2) = linear_fit(&xs, &ys);
        assert!((slope - 2.0).abs() < 0.1, "count growth slope {slope}");
        assert!(r2 > 0.999);
    }

    #[test]
    fn ks_calibration_on_synthetic_samples() {
        // Irwin-Hall(12) - 6 is a classic near-normal variate with unit
        // variance; its true KS distance to the normal is ~2e-3
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let sample: Vec<f64> = (0..100_000)
            .map(|_| (0..12).map(|_| rng.gen_range(0.0..1.0)).sum::<f64>() - 6.0)
            .collect();
        let ks = ks_normal(&sample).unwrap();
        assert!(ks <= 0.01, "near-normal sample scored {ks}");
        // constant standardized sample sits half a unit from Phi
        let ks0 = ks_normal(&vec![0.0; 200]).unwrap();
        assert!((ks0 - 0.5).abs() < 1e-6);
        assert!(matches!(
            ks_normal(&[0.0; 10]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            standardize(&[2.0; 50]),
            Err(Error::DegenerateSample)
        ));
        let std = standardize(&sample).unwrap();
        assert!(std.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn moment_table_is_consistent_with_the_histogram() {
        let spec = OmegaSpec::new(1, 512).unwrap();
        let hist = length_histogram(&spec).unwrap();
        let costs = [
            CostFunction::ConstantOne,
            CostFunction::LogAbs,
            CostFunction::CustomInteger {
                name: "three".into(),
                table: BTreeMap::new(),
                default: 3,
            },
        ];
        let grid = [128i64, 256, 512];
        let table = moment_table(&spec, &costs, &grid, 2).unwrap();
        assert_eq!(table.tables.len(), 3);
        let len_rows = &table.tables[0].rows;
        for (row, &n) in len_rows.iter().zip(grid.iter()) {
            assert_eq!(row.count, hist.count(n), "count at {n}");
            let (mean, var) = hist.mean_variance(n).unwrap();
            assert!((row.mean - mean).abs() < 1e-12);
            assert!((row.variance - var).abs() < 1e-9);
            let (residues, _) = hist.modq(n, 2).unwrap();
            assert_eq!(row.modq, residues);
            // sample is below the reservoir cap, so the KS here is exact
            let ks = hist.ks_at(n).unwrap();
            assert!((row.ks - ks).abs() < 1e-12, "ks at {n}");
        }
        // a cost that charges 3 per digit scales the length moments
        let three = &table.tables[2].rows;
        for (row, base) in three.iter().zip(len_rows.iter()) {
            assert!((row.mean - 3.0 * base.mean).abs() < 1e-9);
            assert!((row.variance - 9.0 * base.variance).abs() < 1e-6);
        }
        // logabs rows carry no residue histogram
        assert!(table.tables[1].rows.iter().all(|r| r.modq.is_empty()));
        assert!(table.tables[1].rows.iter().all(|r| r.ks > 0.0 && r.ks < 1.0));
    }

    #[test]
    fn modq_properties() {
        let spec = OmegaSpec::new(1, 400).unwrap();
        let len = CostFunction::ConstantOne;
        let t1 = modq_table(&spec, &len, 1).unwrap();
        assert_eq!(t1.deviation, 0.0, "q = 1 is trivially uniform");
        assert_eq!(t1.counts.len(), 1);
        let t2 = modq_table(&spec, &len, 2).unwrap();
        assert_eq!(t2.total, t2.counts.iter().sum::<u64>());
        let hist = length_histogram(&spec).unwrap();
        let (residues, dev) = hist.modq(400, 2).unwrap();
        assert_eq!(t2.counts, residues);
        assert!((t2.deviation - dev).abs() < 1e-15);
        assert!(matches!(
            modq_table(&spec, &CostFunction::LogAbs, 2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn dirichlet_partials_and_validation() {
        let spec = OmegaSpec::new(1, 1024).unwrap();
        let len = CostFunction::ConstantOne;
        let grid = [128i64, 256, 512, 1024];
        let s0 = dirichlet_partial(&spec, &len, (0.0, 0.0), &grid).unwrap();
        let hist = length_histogram(&spec).unwrap();
        for &(n, re, im) in &s0.partials {
            assert_eq!(re, hist.count(n) as f64, "w=0 partial is the count");
            assert_eq!(im, 0.0);
        }
        let slope = s0.fit_slope.unwrap();
        assert!((slope - 2.0).abs() < 0.15, "growth exponent {slope}");
        // a positive twist grows strictly faster
        let s_pos = dirichlet_partial(&spec, &len, (0.02, 0.0), &grid).unwrap();
        assert!(s_pos.fit_slope.unwrap() > slope);
        // imaginary twists cancel: ratio below 1 and matching the histogram
        let tau = std::f64::consts::FRAC_PI_2;
        let si = dirichlet_partial(&spec, &len, (0.0, tau), &grid).unwrap();
        assert!(si.fit_slope.is_none());
        let ratios = si.decay_ratios.as_ref().unwrap();
        for &(n, ratio) in ratios {
            let (re, im) = hist.dirichlet_imag(n, tau);
            let expected = (re * re + im * im).sqrt() / hist.count(n) as f64;
            assert!((ratio - expected).abs() < 1e-12);
            assert!(ratio < 1.0);
        }
        for bad in [(0.1, 0.0), (0.01, 0.5), (0.0, 3.5), (0.0, -4.0)] {
            assert!(
                dirichlet_partial(&spec, &len, bad, &grid).is_err(),
                "twist {bad:?} should be rejected"
            );
        }
        assert!(dirichlet_partial(&spec, &len, (0.0, 0.0), &[]).is_err());
        assert!(dirichlet_partial(&spec, &len, (0.0, 0.0), &[8, 4]).is_err());
    }
}
