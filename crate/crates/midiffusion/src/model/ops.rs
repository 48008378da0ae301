//! Dense primitives for the score network: 3x3 same-padding convolution,
//! 2x2 average pooling, nearest-neighbor upsampling, and activations, each
//! with its exact reverse-mode counterpart.
//!
//! Feature maps are `[channels, height, width]` in standard layout;
//! convolution weights are `[out, in, 3, 3]`.

use ndarray::{Array1, Array3, Array4, Axis};

pub type FeatureMap = Array3<f64>;

fn pad1(x: &FeatureMap) -> FeatureMap {
    let (c, h, w) = x.dim();
    let mut out = Array3::zeros((c, h + 2, w + 2));
    out.slice_mut(ndarray::s![.., 1..h + 1, 1..w + 1]).assign(x);
    out
}

/// 3x3 convolution with zero same-padding.
pub fn conv3x3_forward(x: &FeatureMap, weight: &Array4<f64>, bias: &Array1<f64>) -> FeatureMap {
    let (cin, h, w) = x.dim();
    let cout = weight.dim().0;
    debug_assert_eq!(weight.dim(), (cout, cin, 3, 3));
    let xp = pad1(x);
    let xs = xp.as_slice().expect("standard layout");
    let row = w + 2;
    let plane = (h + 2) * row;
    let mut out = Array3::zeros((cout, h, w));
    for co in 0..cout {
        let mut o = out.index_axis_mut(Axis(0), co);
        let os = o.as_slice_mut().expect("standard layout");
        os.fill(bias[co]);
        for ci in 0..cin {
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = weight[[co, ci, ky, kx]];
                    for y in 0..h {
                        let src = &xs[ci * plane + (y + ky) * row + kx..][..w];
                        let dst = &mut os[y * w..][..w];
                        for i in 0..w {
                            dst[i] += wv * src[i];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Gradients of [`conv3x3_forward`] with respect to input, weight, and bias.
pub fn conv3x3_backward(
    x: &FeatureMap,
    weight: &Array4<f64>,
    d_out: &FeatureMap,
) -> (FeatureMap, Array4<f64>, Array1<f64>) {
    let (cin, h, w) = x.dim();
    let cout = weight.dim().0;
    let xp = pad1(x);
    let xs = xp.as_slice().expect("standard layout");
    let row = w + 2;
    let plane = (h + 2) * row;

    let mut d_w = Array4::zeros(weight.dim());
    let mut d_b = Array1::zeros(cout);
    let mut d_xp = Array3::<f64>::zeros((cin, h + 2, w + 2));
    {
        let dxs = d_xp.as_slice_mut().expect("standard layout");
        for co in 0..cout {
            let go = d_out.index_axis(Axis(0), co);
            let gs = go.as_slice().expect("standard layout");
            d_b[co] = gs.iter().sum();
            for ci in 0..cin {
                for ky in 0..3 {
                    for kx in 0..3 {
                        let mut acc = 0.0;
                        let wv = weight[[co, ci, ky, kx]];
                        for y in 0..h {
                            let src = &xs[ci * plane + (y + ky) * row + kx..][..w];
                            let g = &gs[y * w..][..w];
                            let dst = &mut dxs[ci * plane + (y + ky) * row + kx..][..w];
                            for i in 0..w {
                                acc += g[i] * src[i];
                                dst[i] += wv * g[i];
                            }
                        }
                        d_w[[co, ci, ky, kx]] = acc;
                    }
                }
            }
        }
    }
    let d_x = d_xp.slice(ndarray::s![.., 1..h + 1, 1..w + 1]).to_owned();
    (d_x, d_w, d_b)
}

/// 2x2 average pooling; height and width must be even.
pub fn avgpool2_forward(x: &FeatureMap) -> FeatureMap {
    let (c, h, w) = x.dim();
    debug_assert!(h % 2 == 0 && w % 2 == 0);
    let mut out = Array3::zeros((c, h / 2, w / 2));
    for ci in 0..c {
        for y in 0..h / 2 {
            for xx in 0..w / 2 {
                out[[ci, y, xx]] = 0.25
                    * (x[[ci, 2 * y, 2 * xx]]
                        + x[[ci, 2 * y, 2 * xx + 1]]
                        + x[[ci, 2 * y + 1, 2 * xx]]
                        + x[[ci, 2 * y + 1, 2 * xx + 1]]);
            }
        }
    }
    out
}

pub fn avgpool2_backward(d_out: &FeatureMap) -> FeatureMap {
    let (c, h2, w2) = d_out.dim();
    let mut d_x = Array3::zeros((c, h2 * 2, w2 * 2));
    for ci in 0..c {
        for y in 0..h2 {
            for xx in 0..w2 {
                let g = 0.25 * d_out[[ci, y, xx]];
                d_x[[ci, 2 * y, 2 * xx]] = g;
                d_x[[ci, 2 * y, 2 * xx + 1]] = g;
                d_x[[ci, 2 * y + 1, 2 * xx]] = g;
                d_x[[ci, 2 * y + 1, 2 * xx + 1]] = g;
            }
        }
    }
    d_x
}

/// Nearest-neighbor 2x upsampling.
pub fn upsample2_forward(x: &FeatureMap) -> FeatureMap {
    let (c, h, w) = x.dim();
    let mut out = Array3::zeros((c, h * 2, w * 2));
    for ci in 0..c {
        for y in 0..h {
            for xx in 0..w {
                let v = x[[ci, y, xx]];
                out[[ci, 2 * y, 2 * xx]] = v;
                out[[ci, 2 * y, 2 * xx + 1]] = v;
                out[[ci, 2 * y + 1, 2 * xx]] = v;
                out[[ci, 2 * y + 1, 2 * xx + 1]] = v;
            }
        }
    }
    out
}

pub fn upsample2_backward(d_out: &FeatureMap) -> FeatureMap {
    let (c, h2, w2) = d_out.dim();
    let mut d_x = Array3::zeros((c, h2 / 2, w2 / 2));
    for ci in 0..c {
        for y in 0..h2 / 2 {
            for xx in 0..w2 / 2 {
                d_x[[ci, y, xx]] = d_out[[ci, 2 * y, 2 * xx]]
                    + d_out[[ci, 2 * y, 2 * xx + 1]]
                    + d_out[[ci, 2 * y + 1, 2 * xx]]
                    + d_out[[ci, 2 * y + 1, 2 * xx + 1]];
            }
        }
    }
    d_x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Silu,
    Relu,
}

impl Activation {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "silu" => Some(Self::Silu),
            "relu" => Some(Self::Relu),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Silu => "silu",
            Self::Relu => "relu",
        }
    }

    pub fn forward(&self, x: &FeatureMap) -> FeatureMap {
        match self {
            Self::Silu => x.mapv(|v| v * sigmoid(v)),
            Self::Relu => x.mapv(|v| v.max(0.0)),
        }
    }

    /// Chain `d_y` through the activation evaluated at pre-activation `x`.
    pub fn backward(&self, x: &FeatureMap, d_y: &FeatureMap) -> FeatureMap {
        match self {
            Self::Silu => {
                let mut d_x = d_y.clone();
                ndarray::Zip::from(&mut d_x).and(x).for_each(|g, &v| {
                    let s = sigmoid(v);
                    *g *= s * (1.0 + v * (1.0 - s));
                });
                d_x
            }
            Self::Relu => {
                let mut d_x = d_y.clone();
                ndarray::Zip::from(&mut d_x)
                    .and(x)
                    .for_each(|g, &v| *g *= if v > 0.0 { 1.0 } else { 0.0 });
                d_x
            }
        }
    }
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{Array1, Array3, Array4};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn randn3(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Array3<f64> {
        Array3::from_shape_fn((c, h, w), |_| rng.gen::<f64>() - 0.5)
    }

    #[test]
    fn conv_identity_kernel_passes_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = randn3(&mut rng, 1, 5, 6);
        let mut w = Array4::zeros((1, 1, 3, 3));
        w[[0, 0, 1, 1]] = 1.0;
        let out = conv3x3_forward(&x, &w, &Array1::zeros(1));
        assert_eq!(out, x);
    }

    #[test]
    fn conv_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = randn3(&mut rng, 2, 4, 5);
        let w = Array4::from_shape_fn((3, 2, 3, 3), |_| rng.gen::<f64>() - 0.5);
        let b = Array1::from_shape_fn(3, |_| rng.gen::<f64>() - 0.5);
        // Loss = sum(out * g) for a fixed random g makes d_out = g.
        let g = randn3(&mut rng, 3, 4, 5);
        let loss = |x: &Array3<f64>, w: &Array4<f64>, b: &Array1<f64>| {
            (conv3x3_forward(x, w, b) * &g).sum()
        };
        let (d_x, d_w, d_b) = conv3x3_backward(&x, &w, &g);

        let h = 1e-6;
        for idx in [(0, 0, 0), (1, 2, 3), (0, 3, 4)] {
            let mut xp = x.clone();
            xp[idx] += h;
            let mut xm = x.clone();
            xm[idx] -= h;
            let fd = (loss(&xp, &w, &b) - loss(&xm, &w, &b)) / (2.0 * h);
            assert_abs_diff_eq!(d_x[idx], fd, epsilon = 1e-6);
        }
        for idx in [(0, 0, 0, 0), (2, 1, 2, 2), (1, 0, 1, 0)] {
            let mut wp = w.clone();
            wp[idx] += h;
            let mut wm = w.clone();
            wm[idx] -= h;
            let fd = (loss(&x, &wp, &b) - loss(&x, &wm, &b)) / (2.0 * h);
            assert_abs_diff_eq!(d_w[idx], fd, epsilon = 1e-6);
        }
        for i in 0..3 {
            let mut bp = b.clone();
            bp[i] += h;
            let mut bm = b.clone();
            bm[i] -= h;
            let fd = (loss(&x, &w, &bp) - loss(&x, &w, &bm)) / (2.0 * h);
            assert_abs_diff_eq!(d_b[i], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn pool_and_upsample_are_adjoint_shaped() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = randn3(&mut rng, 2, 6, 8);
        let pooled = avgpool2_forward(&x);
        assert_eq!(pooled.dim(), (2, 3, 4));
        let back = avgpool2_backward(&pooled);
        assert_eq!(back.dim(), x.dim());
        // Pool backward distributes each gradient equally.
        assert_abs_diff_eq!(back[[0, 0, 0]], pooled[[0, 0, 0]] * 0.25, epsilon = 1e-15);

        let up = upsample2_forward(&pooled);
        assert_eq!(up.dim(), (2, 6, 8));
        let down = upsample2_backward(&up);
        // Summing the four copies recovers 4x the source.
        assert_abs_diff_eq!(down[[1, 2, 3]], 4.0 * pooled[[1, 2, 3]], epsilon = 1e-15);
    }

    #[test]
    fn activation_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = randn3(&mut rng, 1, 3, 3).mapv(|v| v * 4.0);
        let ones = Array3::from_elem(x.dim(), 1.0);
        let h = 1e-6;
        for act in [Activation::Silu, Activation::Relu] {
            let d = act.backward(&x, &ones);
            for idx in [(0, 0, 0), (0, 1, 2), (0, 2, 1)] {
                let mut xp = x.clone();
                xp[idx] += h;
                let mut xm = x.clone();
                xm[idx] -= h;
                let fd = (act.forward(&xp).sum() - act.forward(&xm).sum()) / (2.0 * h);
                assert_abs_diff_eq!(d[idx], fd, epsilon = 1e-5);
            }
        }
    }
}
