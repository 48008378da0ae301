//! Image quality and statistical similarity metrics: MSE, PSNR, SSIM and
//! global mutual information, plus per-run CSV reports.
//!
//! MSE/PSNR/SSIM are computed on the 8-bit scale (images in [0, 1] are
//! multiplied by 255) so magnitudes are directly comparable across tools.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::lmi::{estimate_joint_density, mi_from_density, EstimatorConfig, EstimatorKind};

const DATA_RANGE: f64 = 255.0;

fn check_same_shape(a: &Image, b: &Image) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Mean squared error on the 8-bit scale.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_same_shape(a, b)?;
    let n = a.len() as f64;
    let sum: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(&x, &y)| {
            let d = (x - y) * DATA_RANGE;
            d * d
        })
        .sum();
    Ok(sum / n)
}

/// Peak signal-to-noise ratio in dB; identical images report +inf.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let e = mse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (DATA_RANGE * DATA_RANGE / e).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as i64;
    let mut k = [0.0; SSIM_WINDOW];
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let x = (i as i64 - r) as f64;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Separable valid-mode filtering with the SSIM window.
fn filter_valid(img: &Array2<f64>, k: &[f64; SSIM_WINDOW]) -> Array2<f64> {
    let (h, w) = img.dim();
    let wo = w - SSIM_WINDOW + 1;
    let ho = h - SSIM_WINDOW + 1;
    let mut horiz = Array2::zeros((h, wo));
    for y in 0..h {
        for x in 0..wo {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                acc += kv * img[[y, x + i]];
            }
            horiz[[y, x]] = acc;
        }
    }
    let mut out = Array2::zeros((ho, wo));
    for y in 0..ho {
        for x in 0..wo {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                acc += kv * horiz[[y + i, x]];
            }
            out[[y, x]] = acc;
        }
    }
    out
}

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5),
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2 with L = 255, averaged over windows that
/// lie fully inside the image.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_same_shape(a, b)?;
    let (h, w) = a.dim();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidConfig(format!(
            "image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let c1 = (0.01 * DATA_RANGE) * (0.01 * DATA_RANGE);
    let c2 = (0.03 * DATA_RANGE) * (0.03 * DATA_RANGE);
    let x = a.mapv(|v| v * DATA_RANGE);
    let y = b.mapv(|v| v * DATA_RANGE);
    let k = gaussian_kernel();

    let ux = filter_valid(&x, &k);
    let uy = filter_valid(&y, &k);
    let uxx = filter_valid(&x.mapv(|v| v * v), &k);
    let uyy = filter_valid(&y.mapv(|v| v * v), &k);
    let uxy = filter_valid(&(&x * &y), &k);

    let mut acc = 0.0;
    for ((i, j), &mx) in ux.indexed_iter() {
        let my = uy[[i, j]];
        let vx = uxx[[i, j]] - mx * mx;
        let vy = uyy[[i, j]] - my * my;
        let cov = uxy[[i, j]] - mx * my;
        let s = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
            / ((mx * mx + my * my + c1) * (vx + vy + c2));
        acc += s;
    }
    Ok(acc / ux.len() as f64)
}

/// Plug-in mutual information of the joint pixel histogram, in nats.
pub fn global_mi(a: &Image, b: &Image, bins: usize) -> Result<f64> {
    check_same_shape(a, b)?;
    let est = EstimatorConfig {
        kind: EstimatorKind::Histogram,
        bins,
        ..Default::default()
    };
    let av: Vec<f64> = a.iter().cloned().collect();
    let bv: Vec<f64> = b.iter().cloned().collect();
    let jd = estimate_joint_density(&av, &bv, &est)?;
    Ok(mi_from_density(&jd))
}

/// Default bin count for whole-image MI.
pub const GLOBAL_MI_BINS: usize = 64;

/// Per-pair metric row of a translation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    /// SSIM against the target-domain ground truth.
    pub ssim_tar: f64,
    /// SSIM against the guidance (source) image.
    pub ssim_src: f64,
    pub mse: f64,
    pub psnr: f64,
    pub mi: f64,
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub rows: Vec<(String, PairMetrics)>,
    pub mean: PairMetrics,
    pub std: PairMetrics,
}

fn aggregate<F: Fn(&PairMetrics) -> f64>(rows: &[(String, PairMetrics)], f: F) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|(_, m)| f(m)).sum::<f64>() / n;
    let var = rows
        .iter()
        .map(|(_, m)| {
            let d = f(m) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

/// Score each (prediction, guide, target) triple and aggregate.
pub fn evaluate_run(
    pred: &[(String, Image)],
    guide: &[(String, Image)],
    target: &[(String, Image)],
) -> Result<MetricsReport> {
    if pred.is_empty() {
        return Err(Error::Dataset("no prediction images to evaluate".into()));
    }
    if pred.len() != guide.len() || pred.len() != target.len() {
        return Err(Error::Dataset(format!(
            "count mismatch: {} predictions, {} guides, {} targets",
            pred.len(),
            guide.len(),
            target.len()
        )));
    }
    let mut rows = Vec::with_capacity(pred.len());
    for ((pid, p), ((_, g), (_, t))) in pred.iter().zip(guide.iter().zip(target.iter())) {
        let id = pid.trim_end_matches(".pgm").trim_end_matches(".png");
        rows.push((
            id.to_string(),
            PairMetrics {
                ssim_tar: ssim(p, t)?,
                ssim_src: ssim(p, g)?,
                mse: mse(p, t)?,
                psnr: psnr(p, t)?,
                mi: global_mi(p, t, GLOBAL_MI_BINS)?,
            },
        ));
    }
    let agg = |f: fn(&PairMetrics) -> f64| aggregate(&rows, f);
    let (m_st, s_st) = agg(|m| m.ssim_tar);
    let (m_ss, s_ss) = agg(|m| m.ssim_src);
    let (m_mse, s_mse) = agg(|m| m.mse);
    let (m_psnr, s_psnr) = agg(|m| m.psnr);
    let (m_mi, s_mi) = agg(|m| m.mi);
    Ok(MetricsReport {
        rows,
        mean: PairMetrics {
            ssim_tar: m_st,
            ssim_src: m_ss,
            mse: m_mse,
            psnr: m_psnr,
            mi: m_mi,
        },
        std: PairMetrics {
            ssim_tar: s_st,
            ssim_src: s_ss,
            mse: s_mse,
            psnr: s_psnr,
            mi: s_mi,
        },
    })
}

impl MetricsReport {
    /// Render as CSV with header `pair_id,ssim_tar,ssim_src,mse,psnr,mi` and
    /// an aggregate block appended.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_id,ssim_tar,ssim_src,mse,psnr,mi\n");
        let fmt = |id: &str, m: &PairMetrics| {
            format!(
                "{id},{},{},{},{},{}\n",
                m.ssim_tar, m.ssim_src, m.mse, m.psnr, m.mi
            )
        };
        for (id, m) in &self.rows {
            out.push_str(&fmt(id, m));
        }
        out.push_str(&fmt("mean", &self.mean));
        out.push_str(&fmt("std", &self.std));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_image(seed: u64, h: usize, w: usize) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((h, w), |_| rng.gen::<f64>())
    }

    #[test]
    fn mse_identity_and_offset() {
        let x = rand_image(1, 16, 16);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        // Constant offset of 0.1 is 25.5 on the 8-bit scale.
        let y = x.mapv(|v| v + 0.1);
        assert_abs_diff_eq!(mse(&x, &y).unwrap(), 650.25, epsilon = 1e-9);
    }

    #[test]
    fn mse_matches_double_loop_oracle() {
        let a = rand_image(2, 9, 13);
        let b = rand_image(3, 9, 13);
        let mut acc = 0.0;
        for y in 0..9 {
            for x in 0..13 {
                let d = (a[[y, x]] - b[[y, x]]) * 255.0;
                acc += d * d;
            }
        }
        assert_abs_diff_eq!(mse(&a, &b).unwrap(), acc / (9.0 * 13.0), epsilon = 1e-9);
    }

    #[test]
    fn psnr_identity_and_known_value() {
        let x = rand_image(4, 16, 16);
        assert!(psnr(&x, &x).unwrap().is_infinite());
        // mse 650.25 -> 255^2/650.25 = 100 -> 20 dB exactly.
        let y = x.mapv(|v| v + 0.1);
        assert_abs_diff_eq!(psnr(&x, &y).unwrap(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn psnr_decreases_as_mse_grows() {
        let x = rand_image(5, 16, 16);
        let mut prev = f64::INFINITY;
        for k in 1..=5 {
            let y = x.mapv(|v| v + 0.02 * k as f64);
            let p = psnr(&x, &y).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn psnr_mse_consistency_identity() {
        let a = rand_image(6, 12, 12);
        let b = rand_image(7, 12, 12);
        let e = mse(&a, &b).unwrap();
        let p = psnr(&a, &b).unwrap();
        assert_eq!(p, 10.0 * (255.0f64 * 255.0 / e).log10());
    }

    #[test]
    fn ssim_identity_is_one() {
        let x = rand_image(8, 16, 16);
        assert_abs_diff_eq!(ssim(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_two_constant_closed_form() {
        // Constant 0 vs constant 255: variance terms vanish and the value
        // reduces to C1 / (255^2 + C1).
        let a = Array2::zeros((16, 16));
        let b = Array2::from_elem((16, 16), 1.0);
        assert_abs_diff_eq!(
            ssim(&a, &b).unwrap(),
            9.999000099990003e-05,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = Array2::zeros((8, 8));
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn metric_symmetry() {
        let a = rand_image(9, 16, 16);
        let b = rand_image(10, 16, 16);
        assert_abs_diff_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap(), epsilon = 1e-9);
        assert_abs_diff_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap(), epsilon = 1e-9);
        assert_abs_diff_eq!(
            global_mi(&a, &b, 64).unwrap(),
            global_mi(&b, &a, 64).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn global_mi_self_is_entropy() {
        let a = rand_image(11, 32, 32);
        let mi = global_mi(&a, &a, 64).unwrap();
        // Plug-in entropy of the binned image.
        let mut counts = [0u32; 64];
        for &v in a.iter() {
            let b = ((v * 64.0) as usize).min(63);
            counts[b] += 1;
        }
        let n = a.len() as f64;
        let h: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum();
        assert_abs_diff_eq!(mi, h, epsilon = 1e-9);
    }

    #[test]
    fn global_mi_independent_noise_near_zero() {
        let a = rand_image(12, 64, 64);
        let b = rand_image(13, 64, 64);
        let mi = global_mi(&a, &b, 64).unwrap();
        // Plug-in bias dominates; bound from the spec'd experiment scale.
        assert!(mi >= 0.0);
        assert!(mi < 0.6, "bias-dominated MI {mi}");
    }

    #[test]
    fn global_mi_invariant_under_inversion() {
        let a = rand_image(14, 32, 32);
        let b = a.mapv(|v| 1.0 - v);
        assert_abs_diff_eq!(
            global_mi(&a, &b, 64).unwrap(),
            global_mi(&a, &a, 64).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn evaluate_run_identity_rows_and_aggregates() {
        let imgs: Vec<(String, Image)> = (0..3)
            .map(|i| (format!("{i:04}.pgm"), rand_image(20 + i, 16, 16)))
            .collect();
        let guides: Vec<(String, Image)> = (0..3)
            .map(|i| (format!("{i:04}.pgm"), rand_image(30 + i, 16, 16)))
            .collect();
        let report = evaluate_run(&imgs, &guides, &imgs).unwrap();
        for (_, m) in &report.rows {
            assert_abs_diff_eq!(m.ssim_tar, 1.0, epsilon = 1e-12);
            assert_eq!(m.mse, 0.0);
            assert!(m.psnr.is_infinite());
        }
        // Aggregate mean equals the mean of rows.
        let hand: f64 =
            report.rows.iter().map(|(_, m)| m.ssim_src).sum::<f64>() / report.rows.len() as f64;
        assert_abs_diff_eq!(report.mean.ssim_src, hand, epsilon = 1e-12);

        let csv = report.to_csv();
        assert!(csv.starts_with("pair_id,ssim_tar,ssim_src,mse,psnr,mi\n"));
        assert_eq!(csv.lines().count(), 1 + 3 + 2);
        assert!(csv.contains("\nmean,"));
        assert!(csv.contains("\nstd,"));
    }

    /// 32x32 8-bit noise image from a 32-bit LCG, reproducible in any
    /// language: s <- s*1664525 + 1013904223 (mod 2^32), pixel = s >> 24.
    fn lcg_image(seed: u32) -> Image {
        let mut s = seed;
        Array2::from_shape_fn((32, 32), |_| {
            s = s.wrapping_mul(1664525).wrapping_add(1013904223);
            (s >> 24) as f64 / 255.0
        })
    }

    #[test]
    fn ssim_agrees_with_reference_implementation() {
        // Frozen outputs of an independent reference implementation
        // (Gaussian-weighted single-scale SSIM, sigma 1.5, data range 255)
        // on ten LCG fixtures.
        let expected = [
            0.9230319069097002,
            0.9296235949299635,
            0.9141190476363104,
            0.9222842025342607,
            0.9202777610648643,
            0.918368807616541,
            0.9200783672161649,
            0.9242387718116593,
            0.9235446968504472,
            0.9187383218079312,
        ];
        for (k, want) in expected.iter().enumerate() {
            let a = lcg_image(1000 + k as u32);
            let n = lcg_image(2000 + k as u32);
            // b = (3a + n) / 4 in exact 8-bit integer arithmetic.
            let b = ndarray::Zip::from(&a).and(&n).map_collect(|&x, &y| {
                let xi = (x * 255.0).round() as u16;
                let yi = (y * 255.0).round() as u16;
                ((xi * 3 + yi) / 4) as f64 / 255.0
            });
            let got = ssim(&a, &b).unwrap();
            assert!(
                (got - want).abs() < 1e-4,
                "fixture {k}: {got} vs reference {want}"
            );
        }
    }

    #[test]
    fn evaluate_run_rejects_empty_and_mismatched() {
        assert!(evaluate_run(&[], &[], &[]).is_err());
        let a = vec![("a".to_string(), rand_image(1, 16, 16))];
        assert!(evaluate_run(&a, &a, &[]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn psnr_consistency_property(seed in 0u64..50) {
            let a = rand_image(seed, 12, 12);
            let b = rand_image(seed + 1000, 12, 12);
            let e = mse(&a, &b).unwrap();
            if e > 0.0 {
                let p = psnr(&a, &b).unwrap();
                proptest::prop_assert!((p - 10.0 * (255.0f64 * 255.0 / e).log10()).abs() == 0.0);
            }
        }
    }
}
