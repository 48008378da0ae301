//! Local-wise mutual information (LMI) maps.
//!
//! For every pixel of a guide image, the fixed guide window (realized by the
//! periodic extension operator) is paired against a set of shifted probe
//! windows (the sliding extension). Each pairing is scored by plug-in mutual
//! information over an estimated joint density; the per-pixel map stores the
//! maximum MI and the shift attaining it.
//!
//! Two implementations are provided: [`lmi_map`], which caches binned images
//! and runs data-parallel over rows, and [`lmi_map_bruteforce`], a naive
//! per-pixel per-offset loop used as a verification oracle. Both route every
//! pairing through the same plug-in MI kernel, so values agree exactly and
//! argmax ties break identically.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{min_max_scale, to_u8, Image};

/// Density estimator backing the MI computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Discrete joint histogram; the plug-in MI then satisfies
    /// MI(A, B) <= H(A) exactly.
    Histogram,
    /// Gaussian kernel density evaluated on a bins x bins grid.
    GaussianKernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Bin count per axis (histogram mode and the kernel evaluation grid).
    pub bins: usize,
    /// Kernel bandwidth (kernel mode only).
    pub bandwidth: f64,
    /// Closed interval over which densities are estimated.
    pub value_range: (f64, f64),
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            kind: EstimatorKind::Histogram,
            bins: 8,
            bandwidth: 0.1,
            value_range: (0.0, 1.0),
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!(
                "estimator bins must be >= 2, got {}",
                self.bins
            )));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "estimator bandwidth must be > 0, got {}",
                self.bandwidth
            )));
        }
        if !(self.value_range.0 < self.value_range.1) {
            return Err(Error::InvalidConfig(format!(
                "estimator value range must be non-empty, got {:?}",
                self.value_range
            )));
        }
        Ok(())
    }

    /// Bin index of a value, clamping to the value range. Returns the index
    /// and whether the value was out of range.
    #[inline]
    fn bin_index(&self, v: f64) -> (usize, bool) {
        let (lo, hi) = self.value_range;
        let clamped = !(v >= lo && v <= hi);
        let v = v.clamp(lo, hi);
        let idx = ((v - lo) / (hi - lo) * self.bins as f64) as usize;
        (idx.min(self.bins - 1), clamped)
    }
}

/// Configuration of the LMI layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiConfig {
    /// Odd window side length in pixels.
    pub window_delta: usize,
    /// Number of sliding offsets per axis.
    pub shift_steps_k: usize,
    /// Periodic tiling multiple; patch queries are valid within
    /// `tiling_extent_k * window_delta` of the center.
    pub tiling_extent_k: usize,
    pub estimator: EstimatorConfig,
    /// Value assigned to pixels whose guide window (or every probe window)
    /// has zero variance.
    pub degenerate_value: f64,
}

impl Default for LmiConfig {
    fn default() -> Self {
        Self {
            window_delta: 5,
            shift_steps_k: 5,
            tiling_extent_k: 1,
            estimator: EstimatorConfig::default(),
            degenerate_value: 0.0,
        }
    }
}

impl LmiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_delta < 3 || self.window_delta % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "window_delta must be odd and >= 3, got {}",
                self.window_delta
            )));
        }
        if self.shift_steps_k < 1 {
            return Err(Error::InvalidConfig("shift_steps_k must be >= 1".into()));
        }
        if self.tiling_extent_k < 1 {
            return Err(Error::InvalidConfig("tiling_extent_k must be >= 1".into()));
        }
        self.estimator.validate()
    }

    /// Per-axis shift increment: delta/k rounded to the nearest pixel, at
    /// least 1.
    pub fn shift_increment(&self) -> i64 {
        ((self.window_delta as f64 / self.shift_steps_k as f64).round() as i64).max(1)
    }

    /// Per-axis offsets, centered so the zero offset is always in the set.
    pub fn axis_offsets(&self) -> Vec<i64> {
        let dt = self.shift_increment();
        let center = (self.shift_steps_k as i64 - 1) / 2;
        (0..self.shift_steps_k as i64)
            .map(|j| (j - center) * dt)
            .collect()
    }

    /// The full k^2 offset grid in row-major order (dy outer, dx inner).
    pub fn offsets(&self) -> Vec<(i64, i64)> {
        let axis = self.axis_offsets();
        let mut out = Vec::with_capacity(axis.len() * axis.len());
        for &dy in &axis {
            for &dx in &axis {
                out.push((dy, dx));
            }
        }
        out
    }

    fn check_window_fits(&self, shape: (usize, usize)) -> Result<()> {
        let d = self.window_delta;
        if d > shape.0 || d > shape.1 {
            return Err(Error::WindowExceedsImage {
                window: d,
                height: shape.0,
                width: shape.1,
            });
        }
        Ok(())
    }
}

/// Per-pixel map of maximal local MI values and the shifts attaining them.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiMap {
    /// MI estimates in nats, same spatial shape as the inputs.
    pub values: Array2<f64>,
    /// `(dy, dx)` offset attaining the per-pixel maximum.
    pub argmax_shift: Array2<(i64, i64)>,
}

impl LmiMap {
    /// Export as 8-bit PGM with values min-max scaled.
    pub fn write_pgm<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let scaled = min_max_scale(&self.values);
        let (h, w) = scaled.dim();
        let mut out = Vec::with_capacity(h * w + 32);
        write!(out, "P5\n{w} {h}\n255\n")?;
        for v in scaled.iter() {
            out.push(to_u8(*v));
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Export as raw little-endian f32 grid: magic "LMI1", u32 height,
    /// u32 width, u32 reserved, then row-major payload.
    pub fn write_raw<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let (h, w) = self.values.dim();
        let mut out = Vec::with_capacity(16 + h * w * 4);
        out.extend_from_slice(b"LMI1");
        out.extend_from_slice(&(h as u32).to_le_bytes());
        out.extend_from_slice(&(w as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        for v in self.values.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Read back a raw export.
    pub fn read_raw_values<P: AsRef<Path>>(path: P) -> Result<Array2<f32>> {
        let bytes = fs::read(path)?;
        if bytes.len() < 16 || &bytes[0..4] != b"LMI1" {
            return Err(Error::ImageFormat("bad LMI1 header".into()));
        }
        let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if bytes.len() != 16 + h * w * 4 {
            return Err(Error::ImageFormat("LMI1 payload size mismatch".into()));
        }
        let mut vals = Vec::with_capacity(h * w);
        for chunk in bytes[16..].chunks_exact(4) {
            vals.push(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
        Array2::from_shape_vec((h, w), vals)
            .map_err(|e| Error::ImageFormat(format!("LMI1 shape: {e}")))
    }
}

#[inline]
fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// The delta-window of `x` centered at `center`, with whole-image periodic
/// wraparound at the boundary. Equivalent to querying the periodic extension
/// at zero offset; see [`periodic_extension_at`].
pub fn periodic_extension(
    x: &Image,
    center: (usize, usize),
    cfg: &LmiConfig,
) -> Result<Array2<f64>> {
    periodic_extension_at(x, center, (0, 0), cfg)
}

/// Query the periodic extension of `x` anchored at `center` with a window at
/// `offset`. The extension tiles the base window with period delta, so
/// queries at offsets that are multiples of delta return the identical patch.
/// Offsets are valid within the `tiling_extent_k * delta` neighborhood.
pub fn periodic_extension_at(
    x: &Image,
    center: (usize, usize),
    offset: (i64, i64),
    cfg: &LmiConfig,
) -> Result<Array2<f64>> {
    cfg.check_window_fits(x.dim())?;
    let d = cfg.window_delta;
    let extent = (cfg.tiling_extent_k * d) as i64;
    if offset.0.abs() > extent || offset.1.abs() > extent {
        return Err(Error::OffsetOutsideExtent(offset.0, offset.1));
    }
    let base = centered_window(x, center, d);
    let mut out = Array2::zeros((d, d));
    for u in 0..d {
        for v in 0..d {
            out[[u, v]] = base[[wrap(offset.0 + u as i64, d), wrap(offset.1 + v as i64, d)]];
        }
    }
    Ok(out)
}

fn centered_window(x: &Image, center: (usize, usize), d: usize) -> Array2<f64> {
    let (h, w) = x.dim();
    let r = (d / 2) as i64;
    Array2::from_shape_fn((d, d), |(u, v)| {
        x[[
            wrap(center.0 as i64 + u as i64 - r, h),
            wrap(center.1 as i64 + v as i64 - r, w),
        ]]
    })
}

/// The k^2 shifted probe windows of `y` around `center`: for each offset tau
/// in the centered offset grid, the delta-window of `y` centered at
/// `center + tau` (the window indicator masks everything else out). Returns
/// `(offset, patch)` pairs in row-major offset order.
pub fn sliding_extension(
    y: &Image,
    center: (usize, usize),
    cfg: &LmiConfig,
) -> Result<Vec<((i64, i64), Array2<f64>)>> {
    cfg.check_window_fits(y.dim())?;
    let (h, w) = y.dim();
    Ok(cfg
        .offsets()
        .into_iter()
        .map(|(dy, dx)| {
            let c = (
                wrap(center.0 as i64 + dy, h),
                wrap(center.1 as i64 + dx, w),
            );
            ((dy, dx), centered_window(y, c, cfg.window_delta))
        })
        .collect())
}

/// Joint density over a bins x bins grid, normalized to sum 1. Histogram
/// mode also retains the raw counts so MI can be evaluated through the exact
/// integer plug-in kernel.
#[derive(Debug, Clone)]
pub struct JointDensity {
    /// Probability table, guide variable on rows.
    pub table: Array2<f64>,
    counts: Option<(Vec<u64>, u64)>,
    /// Number of samples clamped into the value range.
    pub clamped: usize,
}

impl JointDensity {
    /// Wrap an externally supplied probability table; it must sum to 1
    /// within 1e-9.
    pub fn from_probabilities(table: Array2<f64>) -> Result<Self> {
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "joint table sums to {sum}, expected 1"
            )));
        }
        Ok(Self {
            table,
            counts: None,
            clamped: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.table.nrows()
    }

    /// Marginal over the guide (row) variable.
    pub fn marginal_rows(&self) -> Vec<f64> {
        self.table
            .rows()
            .into_iter()
            .map(|r| r.iter().sum())
            .collect()
    }

    /// Marginal over the probe (column) variable.
    pub fn marginal_cols(&self) -> Vec<f64> {
        (0..self.table.ncols())
            .map(|c| self.table.column(c).iter().sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self {
            table: self.table.t().to_owned(),
            counts: self.counts.as_ref().map(|(c, n)| {
                let b = self.bins();
                let mut t = vec![0u64; b * b];
                for g in 0..b {
                    for p in 0..b {
                        t[p * b + g] = c[g * b + p];
                    }
                }
                (t, *n)
            }),
            clamped: self.clamped,
        }
    }
}

/// Estimate the joint density of two paired sample vectors.
pub fn estimate_joint_density(a: &[f64], b: &[f64], est: &EstimatorConfig) -> Result<JointDensity> {
    est.validate()?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: (a.len(), 1),
            got: (b.len(), 1),
        });
    }
    let bins = est.bins;
    match est.kind {
        EstimatorKind::Histogram => {
            let mut counts = vec![0u64; bins * bins];
            let mut clamped = 0usize;
            for (&va, &vb) in a.iter().zip(b) {
                let (ia, ca) = est.bin_index(va);
                let (ib, cb) = est.bin_index(vb);
                clamped += ca as usize + cb as usize;
                counts[ia * bins + ib] += 1;
            }
            let n = a.len() as u64;
            let table = Array2::from_shape_fn((bins, bins), |(g, p)| {
                counts[g * bins + p] as f64 / n as f64
            });
            Ok(JointDensity {
                table,
                counts: Some((counts, n)),
                clamped,
            })
        }
        EstimatorKind::GaussianKernel => {
            let (lo, hi) = est.value_range;
            let step = (hi - lo) / bins as f64;
            let centers: Vec<f64> = (0..bins).map(|j| lo + (j as f64 + 0.5) * step).collect();
            let inv2h2 = 1.0 / (2.0 * est.bandwidth * est.bandwidth);
            let mut clamped = 0usize;
            let mut table = Array2::zeros((bins, bins));
            for (&va, &vb) in a.iter().zip(b) {
                let ca = !(va >= lo && va <= hi);
                let cb = !(vb >= lo && vb <= hi);
                clamped += ca as usize + cb as usize;
                let va = va.clamp(lo, hi);
                let vb = vb.clamp(lo, hi);
                for (g, &cg) in centers.iter().enumerate() {
                    let wg = (-(cg - va) * (cg - va) * inv2h2).exp();
                    for (p, &cp) in centers.iter().enumerate() {
                        table[[g, p]] += wg * (-(cp - vb) * (cp - vb) * inv2h2).exp();
                    }
                }
            }
            let total: f64 = table.iter().sum();
            if total > 0.0 {
                table.mapv_inplace(|v| v / total);
            }
            Ok(JointDensity {
                table,
                counts: None,
                clamped,
            })
        }
    }
}

/// Plug-in mutual information of a joint density, in nats, with
/// 0 * log 0 := 0. Non-negative.
pub fn mi_from_density(joint: &JointDensity) -> f64 {
    match &joint.counts {
        Some((counts, n)) => mi_plugin_counts(counts, joint.bins(), *n, ln_u64),
        None => {
            let px = joint.marginal_rows();
            let py = joint.marginal_cols();
            let mut mi = 0.0;
            for (g, row) in joint.table.rows().into_iter().enumerate() {
                for (p, &v) in row.iter().enumerate() {
                    if v > 0.0 {
                        mi += v * (v / (px[g] * py[p])).ln();
                    }
                }
            }
            mi.max(0.0)
        }
    }
}

#[inline]
fn ln_u64(i: u64) -> f64 {
    (i as f64).ln()
}

/// Exact integer plug-in MI kernel shared by every histogram path:
/// MI = sum (c/n) * (ln(c*n) - ln(row*col)). Both the cached map and the
/// brute-force oracle go through this function so per-offset values are
/// bitwise identical.
fn mi_plugin_counts<F: Fn(u64) -> f64>(counts: &[u64], bins: usize, n: u64, ln_int: F) -> f64 {
    let mut rows = vec![0u64; bins];
    let mut cols = vec![0u64; bins];
    for g in 0..bins {
        for p in 0..bins {
            let c = counts[g * bins + p];
            rows[g] += c;
            cols[p] += c;
        }
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for g in 0..bins {
        for p in 0..bins {
            let c = counts[g * bins + p];
            if c > 0 {
                mi += (c as f64 / nf) * (ln_int(c * n) - ln_int(rows[g] * cols[p]));
            }
        }
    }
    mi.max(0.0)
}

#[inline]
fn zero_variance(samples: &[f64]) -> bool {
    samples.iter().all(|&v| v == samples[0])
}

/// Offsets whose MI lies within this band of the maximum count as ties.
/// Mathematically equal MI values can land an ulp apart when their joint
/// tables differ (e.g. a shifted patch that is an exact function of the
/// guide patch on quantized images); the band keeps the tie-breaking rule
/// effective in those cases.
const TIE_EPS: f64 = 1e-12;

/// Deterministic per-pixel selection: the stored value is the exact float
/// maximum over the offset set; among offsets within [`TIE_EPS`] of it, the
/// smallest L1 offset wins, then the first in row-major enumeration order.
fn select_best(entries: &[((i64, i64), f64)]) -> (f64, (i64, i64)) {
    let max = entries
        .iter()
        .map(|e| e.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut best_shift = (0, 0);
    let mut best_l1 = i64::MAX;
    for (shift, mi) in entries {
        if *mi >= max - TIE_EPS {
            let l1 = shift.0.abs() + shift.1.abs();
            if l1 < best_l1 {
                best_l1 = l1;
                best_shift = *shift;
            }
        }
    }
    (max, best_shift)
}

fn check_same_shape(a: &Image, b: &Image) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Compute the LMI map of `probe` against `guide`.
///
/// For each pixel, the fixed guide window is paired with every shifted probe
/// window; the plug-in MI of each pairing is estimated and the maximum kept.
/// If the guide window, or every probe window, has zero variance the pixel
/// takes `cfg.degenerate_value` with zero shift.
pub fn lmi_map(guide: &Image, probe: &Image, cfg: &LmiConfig) -> Result<LmiMap> {
    cfg.validate()?;
    check_same_shape(guide, probe)?;
    cfg.check_window_fits(guide.dim())?;

    if cfg.estimator.kind != EstimatorKind::Histogram {
        return lmi_map_generic(guide, probe, cfg, false);
    }

    let (h, w) = guide.dim();
    let d = cfg.window_delta;
    let r = (d / 2) as i64;
    let bins = cfg.estimator.bins;
    let offsets = cfg.offsets();
    let n = (d * d) as u64;

    // Guide-side work is shared across all offsets: bin every pixel once.
    let bin_of = |img: &Image| -> Vec<u16> {
        img.iter()
            .map(|&v| cfg.estimator.bin_index(v).0 as u16)
            .collect()
    };
    let guide_bins = bin_of(guide);
    let probe_bins = bin_of(probe);
    let guide_flat = guide.as_slice().expect("standard layout");
    let probe_flat = probe.as_slice().expect("standard layout");

    // ln memo for every integer product that can occur: c*n and row*col
    // are both bounded by n^2.
    let ln_table: Vec<f64> = (0..=(n * n)).map(ln_u64).collect();
    let ln_int = |i: u64| ln_table[i as usize];

    let rows_out: Vec<(Vec<f64>, Vec<(i64, i64)>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut vals = vec![0.0; w];
            let mut shifts = vec![(0i64, 0i64); w];
            let mut counts = vec![0u64; bins * bins];
            // Wrapped row indices of the window at this y, reused across x.
            let wy: Vec<usize> = (0..d).map(|u| wrap(y as i64 + u as i64 - r, h)).collect();
            for x in 0..w {
                let wx: Vec<usize> = (0..d).map(|v| wrap(x as i64 + v as i64 - r, w)).collect();
                // Degenerate guide window.
                let g0 = guide_flat[wy[0] * w + wx[0]];
                let guide_const = wy
                    .iter()
                    .all(|&yy| wx.iter().all(|&xx| guide_flat[yy * w + xx] == g0));
                if guide_const {
                    vals[x] = cfg.degenerate_value;
                    continue;
                }
                let mut best = Best::new();
                let mut all_probe_const = true;
                for &(dy, dx) in &offsets {
                    counts.iter_mut().for_each(|c| *c = 0);
                    let mut p0 = f64::NAN;
                    let mut probe_const = true;
                    for (u, &yy) in wy.iter().enumerate() {
                        let py = wrap(y as i64 + dy + u as i64 - r, h);
                        for (v, &xx) in wx.iter().enumerate() {
                            let px = wrap(x as i64 + dx + v as i64 - r, w);
                            let pv = probe_flat[py * w + px];
                            if u == 0 && v == 0 {
                                p0 = pv;
                            } else if pv != p0 {
                                probe_const = false;
                            }
                            let gb = guide_bins[yy * w + xx] as usize;
                            let pb = probe_bins[py * w + px] as usize;
                            counts[gb * bins + pb] += 1;
                        }
                    }
                    all_probe_const &= probe_const;
                    let mi = mi_plugin_counts(&counts, bins, n, ln_int);
                    best.consider(mi, (dy, dx));
                }
                if all_probe_const {
                    vals[x] = cfg.degenerate_value;
                    shifts[x] = (0, 0);
                } else {
                    vals[x] = best.mi;
                    shifts[x] = best.shift;
                }
            }
            (vals, shifts)
        })
        .collect();

    let mut values = Array2::zeros((h, w));
    let mut argmax_shift = Array2::from_elem((h, w), (0i64, 0i64));
    for (y, (vals, shifts)) in rows_out.into_iter().enumerate() {
        for x in 0..w {
            values[[y, x]] = vals[x];
            argmax_shift[[y, x]] = shifts[x];
        }
    }
    Ok(LmiMap {
        values,
        argmax_shift,
    })
}

/// Guard for the brute-force oracle.
const BRUTEFORCE_SIZE_LIMIT: usize = 64;

/// Naive per-pixel, per-offset reference implementation of [`lmi_map`] with
/// no caching or parallelism. Limited to small images unless `force` is set.
pub fn lmi_map_bruteforce(
    guide: &Image,
    probe: &Image,
    cfg: &LmiConfig,
    force: bool,
) -> Result<LmiMap> {
    cfg.validate()?;
    check_same_shape(guide, probe)?;
    cfg.check_window_fits(guide.dim())?;
    let (h, w) = guide.dim();
    if !force && (h > BRUTEFORCE_SIZE_LIMIT || w > BRUTEFORCE_SIZE_LIMIT) {
        return Err(Error::SizeGuard {
            height: h,
            width: w,
            limit: BRUTEFORCE_SIZE_LIMIT,
        });
    }
    lmi_map_generic(guide, probe, cfg, true)
}

/// Shared straightforward implementation: gathers fresh patches per pixel
/// and per offset and estimates each joint density from scratch.
fn lmi_map_generic(guide: &Image, probe: &Image, cfg: &LmiConfig, _naive: bool) -> Result<LmiMap> {
    let (h, w) = guide.dim();
    let mut values = Array2::zeros((h, w));
    let mut argmax_shift = Array2::from_elem((h, w), (0i64, 0i64));
    for y in 0..h {
        for x in 0..w {
            let gpatch = periodic_extension(guide, (y, x), cfg)?;
            let gsamples: Vec<f64> = gpatch.iter().cloned().collect();
            if zero_variance(&gsamples) {
                values[[y, x]] = cfg.degenerate_value;
                continue;
            }
            let stack = sliding_extension(probe, (y, x), cfg)?;
            let mut best = Best::new();
            let mut all_probe_const = true;
            for (shift, ppatch) in &stack {
                let psamples: Vec<f64> = ppatch.iter().cloned().collect();
                all_probe_const &= zero_variance(&psamples);
                let joint = estimate_joint_density(&gsamples, &psamples, &cfg.estimator)?;
                best.consider(mi_from_density(&joint), *shift);
            }
            if all_probe_const {
                values[[y, x]] = cfg.degenerate_value;
            } else {
                values[[y, x]] = best.mi;
                argmax_shift[[y, x]] = best.shift;
            }
        }
    }
    Ok(LmiMap {
        values,
        argmax_shift,
    })
}
