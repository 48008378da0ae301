//! The time-conditioned score network s(x_t, lmi, t).
//!
//! A small convolutional encoder-decoder with additive skip connections.
//! The noisy image and the LMI map enter as two input channels; the noise
//! level enters as Fourier features of log sigma, projected per block into a
//! per-channel bias. The final 3x3 convolution is zero-initialized, so an
//! untrained network outputs the zero field. The network predicts
//! sigma * score (the normalized noise direction); callers divide by sigma.
//!
//! All gradients are exact reverse-mode, written by hand against the
//! primitives in [`ops`].
//!
//! Parameter count: with base width w, depth d, embedding size E,
//!
//! ```text
//! enc_in:   9*2*w + w + w*E
//! down[l]:  9*(w*2^l)*(w*2^(l+1)) + w*2^(l+1) + w*2^(l+1)*E   l = 0..d
//! up[l]:    9*(w*2^(l+1))*(w*2^l) + w*2^l + w*2^l*E           l = d-1..0
//! out:      9*w + 1
//! ```
//!
//! which [`ModelConfig::param_count`] evaluates in closed form.

pub mod ops;

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use ops::{Activation, FeatureMap};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Input channels; 2 for the noisy image plus the LMI map.
    pub input_channels: usize,
    pub base_width: usize,
    /// Number of down/up resolution levels.
    pub depth: usize,
    /// Size of the Fourier time embedding; must be even.
    pub time_embed_dim: usize,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_channels: 2,
            base_width: 32,
            depth: 2,
            time_embed_dim: 16,
            activation: Activation::Silu,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_channels != 2 {
            return Err(Error::InvalidConfig(format!(
                "input_channels must be 2 (noisy image + LMI map), got {}",
                self.input_channels
            )));
        }
        if self.depth < 1 {
            return Err(Error::InvalidConfig("depth must be >= 1".into()));
        }
        if self.base_width < 8 {
            return Err(Error::InvalidConfig("base_width must be >= 8".into()));
        }
        if self.time_embed_dim < 2 || self.time_embed_dim % 2 != 0 {
            return Err(Error::InvalidConfig(
                "time_embed_dim must be even and >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Closed-form total parameter count (see the module docs).
    pub fn param_count(&self) -> usize {
        let (w, d, e) = (self.base_width, self.depth, self.time_embed_dim);
        let conv = |ci: usize, co: usize| 9 * ci * co + co;
        let mut n = conv(self.input_channels, w) + w * e;
        for l in 0..d {
            let (ci, co) = (w << l, w << (l + 1));
            n += conv(ci, co) + co * e;
        }
        for l in (0..d).rev() {
            let (ci, co) = (w << (l + 1), w << l);
            n += conv(ci, co) + co * e;
        }
        n + conv(w, 1)
    }

    /// Spatial shapes must be divisible by 2^depth for the pooling ladder.
    pub fn check_spatial(&self, shape: (usize, usize)) -> Result<()> {
        let f = 1usize << self.depth;
        if shape.0 % f != 0 || shape.1 % f != 0 || shape.0 == 0 || shape.1 == 0 {
            return Err(Error::InvalidConfig(format!(
                "spatial shape {shape:?} not divisible by 2^depth = {f}"
            )));
        }
        Ok(())
    }
}

/// One convolution block: 3x3 conv + optional time projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock {
    pub weight: Array4<f64>,
    pub bias: Array1<f64>,
    /// `[out_channels, embed_dim]` projection of the time features, added as
    /// a per-channel bias before the activation. Absent on the output block.
    pub time_proj: Option<Array2<f64>>,
}

impl ConvBlock {
    fn zeros(cin: usize, cout: usize, embed: Option<usize>) -> Self {
        Self {
            weight: Array4::zeros((cout, cin, 3, 3)),
            bias: Array1::zeros(cout),
            time_proj: embed.map(|e| Array2::zeros((cout, e))),
        }
    }

    fn kaiming_uniform(&mut self, rng: &mut ChaCha12Rng) {
        let fan_in = self.weight.dim().1 * 9;
        let bound = (6.0 / fan_in as f64).sqrt();
        for v in self.weight.iter_mut() {
            *v = rng.gen_range(-bound..bound);
        }
        if let Some(p) = &mut self.time_proj {
            let bound = (6.0 / p.dim().1 as f64).sqrt();
            for v in p.iter_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
    }
}

/// Every trainable tensor of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub enc_in: ConvBlock,
    /// Encoder blocks, shallow to deep.
    pub down: Vec<ConvBlock>,
    /// Decoder blocks, deep to shallow.
    pub up: Vec<ConvBlock>,
    pub out: ConvBlock,
}

impl ParamSet {
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let (w, d, e) = (cfg.base_width, cfg.depth, cfg.time_embed_dim);
        Ok(Self {
            enc_in: ConvBlock::zeros(cfg.input_channels, w, Some(e)),
            down: (0..d)
                .map(|l| ConvBlock::zeros(w << l, w << (l + 1), Some(e)))
                .collect(),
            up: (0..d)
                .rev()
                .map(|l| ConvBlock::zeros(w << (l + 1), w << l, Some(e)))
                .collect(),
            out: ConvBlock::zeros(w, 1, None),
        })
    }

    /// Visit `(name, flat data)` for every tensor, in a fixed order.
    pub fn for_each_tensor<F: FnMut(&str, &[f64], &[usize])>(&self, mut f: F) {
        let mut visit = |name: &str, b: &ConvBlock| {
            f(
                &format!("{name}.weight"),
                b.weight.as_slice().unwrap(),
                b.weight.shape(),
            );
            f(
                &format!("{name}.bias"),
                b.bias.as_slice().unwrap(),
                b.bias.shape(),
            );
            if let Some(p) = &b.time_proj {
                f(
                    &format!("{name}.time_proj"),
                    p.as_slice().unwrap(),
                    p.shape(),
                );
            }
        };
        visit("enc_in", &self.enc_in);
        for (i, b) in self.down.iter().enumerate() {
            visit(&format!("down{i}"), b);
        }
        for (i, b) in self.up.iter().enumerate() {
            visit(&format!("up{i}"), b);
        }
        visit("out", &self.out);
    }

    /// Mutable flat views of every tensor, in the same fixed order.
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        fn push<'a>(v: &mut Vec<(String, &'a mut [f64])>, name: &str, b: &'a mut ConvBlock) {
            v.push((format!("{name}.weight"), b.weight.as_slice_mut().unwrap()));
            v.push((format!("{name}.bias"), b.bias.as_slice_mut().unwrap()));
            if let Some(p) = &mut b.time_proj {
                v.push((format!("{name}.time_proj"), p.as_slice_mut().unwrap()));
            }
        }
        let mut v = Vec::new();
        push(&mut v, "enc_in", &mut self.enc_in);
        for (i, b) in self.down.iter_mut().enumerate() {
            push(&mut v, &format!("down{i}"), b);
        }
        for (i, b) in self.up.iter_mut().enumerate() {
            push(&mut v, &format!("up{i}"), b);
        }
        push(&mut v, "out", &mut self.out);
        v
    }

    pub fn total_len(&self) -> usize {
        let mut n = 0;
        self.for_each_tensor(|_, d, _| n += d.len());
        n
    }

    /// self += alpha * other, tensor by tensor.
    pub fn axpy(&mut self, alpha: f64, other: &ParamSet) {
        let mut theirs = Vec::new();
        other.for_each_tensor(|_, d, _| theirs.push(d.to_vec()));
        for ((_, mine), o) in self.tensors_mut().into_iter().zip(theirs) {
            for (m, v) in mine.iter_mut().zip(o) {
                *m += alpha * v;
            }
        }
    }

    pub fn iter_all(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.total_len());
        self.for_each_tensor(|_, d, _| v.extend_from_slice(d));
        v
    }
}

/// Fan-in-scaled (Kaiming uniform) initialization; the output block stays
/// zero so the untrained score is the zero field.
pub fn init(cfg: &ModelConfig, seed: u64) -> Result<ParamSet> {
    let mut params = ParamSet::zeros(cfg)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    params.enc_in.kaiming_uniform(&mut rng);
    for b in &mut params.down {
        b.kaiming_uniform(&mut rng);
    }
    for b in &mut params.up {
        b.kaiming_uniform(&mut rng);
    }
    Ok(params)
}

/// Fourier features of log sigma: [sin(2^j u), cos(2^j u)] pairs.
fn time_features(sigma: f64, dim: usize) -> Vec<f64> {
    let u = sigma.ln();
    let mut phi = Vec::with_capacity(dim);
    for j in 0..dim / 2 {
        let f = (1u64 << j) as f64;
        phi.push((f * u).sin());
        phi.push((f * u).cos());
    }
    phi
}

fn add_time_bias(pre: &mut FeatureMap, proj: &Array2<f64>, phi: &[f64]) {
    let (c, h, w) = pre.dim();
    for ch in 0..c {
        let bias: f64 = proj.row(ch).iter().zip(phi).map(|(p, f)| p * f).sum();
        pre.slice_mut(ndarray::s![ch, .., ..])
            .mapv_inplace(|v| v + bias);
    }
    let _ = (h, w);
}

/// Activations retained by the forward pass for the backward pass.
pub struct Cache {
    phi: Vec<f64>,
    input: FeatureMap,
    pre_enc: FeatureMap,
    /// Per down block: pooled input and pre-activation.
    down_in: Vec<FeatureMap>,
    down_pre: Vec<FeatureMap>,
    /// Per up block: upsampled input and pre-activation.
    up_in: Vec<FeatureMap>,
    up_pre: Vec<FeatureMap>,
    out_in: FeatureMap,
}

fn stack_input(noisy: &Image, lmi: &Image) -> Result<FeatureMap> {
    if noisy.dim() != lmi.dim() {
        return Err(Error::ShapeMismatch {
            expected: noisy.dim(),
            got: lmi.dim(),
        });
    }
    let (h, w) = noisy.dim();
    let mut x = Array3::zeros((2, h, w));
    x.slice_mut(ndarray::s![0, .., ..]).assign(noisy);
    x.slice_mut(ndarray::s![1, .., ..]).assign(lmi);
    Ok(x)
}

/// Evaluate the network. `sigma` is the noise level sigma(t) of the current
/// time; the raw output approximates sigma * score.
pub fn forward(
    params: &ParamSet,
    cfg: &ModelConfig,
    noisy: &Image,
    lmi: &Image,
    sigma: f64,
) -> Result<Image> {
    forward_cached(params, cfg, noisy, lmi, sigma).map(|(o, _)| o)
}

/// Forward pass that also returns the activation cache for [`backward`].
pub fn forward_cached(
    params: &ParamSet,
    cfg: &ModelConfig,
    noisy: &Image,
    lmi: &Image,
    sigma: f64,
) -> Result<(Image, Cache)> {
    cfg.check_spatial(noisy.dim())?;
    let input = stack_input(noisy, lmi)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be > 0, got {sigma}")));
    }
    let act = cfg.activation;
    let phi = time_features(sigma, cfg.time_embed_dim);

    let mut pre_enc = ops::conv3x3_forward(&input, &params.enc_in.weight, &params.enc_in.bias);
    add_time_bias(&mut pre_enc, params.enc_in.time_proj.as_ref().unwrap(), &phi);
    let e0 = act.forward(&pre_enc);

    let mut enc = vec![e0];
    let mut down_in = Vec::new();
    let mut down_pre = Vec::new();
    for b in &params.down {
        let pooled = ops::avgpool2_forward(enc.last().unwrap());
        let mut pre = ops::conv3x3_forward(&pooled, &b.weight, &b.bias);
        add_time_bias(&mut pre, b.time_proj.as_ref().unwrap(), &phi);
        enc.push(act.forward(&pre));
        down_in.push(pooled);
        down_pre.push(pre);
    }

    let mut x = enc.last().unwrap().clone();
    let mut up_in = Vec::new();
    let mut up_pre = Vec::new();
    for (i, b) in params.up.iter().enumerate() {
        let upsampled = ops::upsample2_forward(&x);
        let mut pre = ops::conv3x3_forward(&upsampled, &b.weight, &b.bias);
        add_time_bias(&mut pre, b.time_proj.as_ref().unwrap(), &phi);
        let skip = &enc[cfg.depth - 1 - i];
        x = act.forward(&pre) + skip;
        up_in.push(upsampled);
        up_pre.push(pre);
    }

    let out3 = ops::conv3x3_forward(&x, &params.out.weight, &params.out.bias);
    let (_, h, w) = out3.dim();
    let out = out3
        .index_axis_move(ndarray::Axis(0), 0)
        .into_shape_with_order((h, w))
        .expect("single channel");
    Ok((
        out,
        Cache {
            phi,
            input,
            pre_enc,
            down_in,
            down_pre,
            up_in,
            up_pre,
            out_in: x,
        },
    ))
}

fn proj_grad(d_pre: &FeatureMap, phi: &[f64]) -> Array2<f64> {
    let (c, _, _) = d_pre.dim();
    let mut g = Array2::zeros((c, phi.len()));
    for ch in 0..c {
        let s: f64 = d_pre.index_axis(ndarray::Axis(0), ch).sum();
        for (e, &f) in phi.iter().enumerate() {
            g[[ch, e]] = s * f;
        }
    }
    g
}

/// Exact reverse-mode gradients of a scalar loss with output gradient
/// `d_out`, with respect to every parameter. Returns the gradient set and
/// the gradient with respect to the two input channels.
pub fn backward(
    params: &ParamSet,
    cfg: &ModelConfig,
    cache: &Cache,
    d_out: &Image,
) -> Result<(ParamSet, FeatureMap)> {
    let act = cfg.activation;
    let mut grads = ParamSet::zeros(cfg)?;
    let (h, w) = d_out.dim();
    let d_out3 = d_out
        .clone()
        .into_shape_with_order((1, h, w))
        .expect("reshape");

    let (mut d_x, d_w, d_b) = ops::conv3x3_backward(&cache.out_in, &params.out.weight, &d_out3);
    grads.out.weight = d_w;
    grads.out.bias = d_b;

    // Decoder, last executed block first. d_x holds the gradient at the
    // block's post-skip output.
    let mut d_enc: Vec<Option<FeatureMap>> = vec![None; cfg.depth + 1];
    for i in (0..cfg.depth).rev() {
        let level = cfg.depth - 1 - i;
        // Skip connection contributes the same gradient to the encoder side.
        d_enc[level] = Some(match d_enc[level].take() {
            Some(g) => g + &d_x,
            None => d_x.clone(),
        });
        let d_pre = act.backward(&cache.up_pre[i], &d_x);
        let b = &params.up[i];
        grads.up[i].time_proj = Some(proj_grad(&d_pre, &cache.phi));
        let (d_up_in, d_w, d_b) = ops::conv3x3_backward(&cache.up_in[i], &b.weight, &d_pre);
        grads.up[i].weight = d_w;
        grads.up[i].bias = d_b;
        d_x = ops::upsample2_backward(&d_up_in);
    }
    // d_x is now the gradient at the bottleneck feature e_d.
    d_enc[cfg.depth] = Some(match d_enc[cfg.depth].take() {
        Some(g) => g + &d_x,
        None => d_x,
    });

    // Encoder, deep to shallow.
    for l in (0..cfg.depth).rev() {
        let d_e = d_enc[l + 1].take().expect("populated above");
        let d_pre = act.backward(&cache.down_pre[l], &d_e);
        let b = &params.down[l];
        grads.down[l].time_proj = Some(proj_grad(&d_pre, &cache.phi));
        let (d_pooled, d_w, d_b) = ops::conv3x3_backward(&cache.down_in[l], &b.weight, &d_pre);
        grads.down[l].weight = d_w;
        grads.down[l].bias = d_b;
        let d_prev = ops::avgpool2_backward(&d_pooled);
        d_enc[l] = Some(match d_enc[l].take() {
            Some(g) => g + &d_prev,
            None => d_prev,
        });
    }

    let d_e0 = d_enc[0].take().expect("populated above");
    let d_pre = act.backward(&cache.pre_enc, &d_e0);
    grads.enc_in.time_proj = Some(proj_grad(&d_pre, &cache.phi));
    let (d_input, d_w, d_b) = ops::conv3x3_backward(&cache.input, &params.enc_in.weight, &d_pre);
    grads.enc_in.weight = d_w;
    grads.enc_in.bias = d_b;
    Ok((grads, d_input))
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 4] = b"MIDF";
const VERSION: u32 = 1;

/// Extra (non-model) tensors carried in a checkpoint, e.g. optimizer state.
pub type ExtraTensors = Vec<(String, Vec<usize>, Vec<f64>)>;

fn activation_id(a: Activation) -> f64 {
    match a {
        Activation::Silu => 0.0,
        Activation::Relu => 1.0,
    }
}

fn activation_from_id(id: f64) -> Result<Activation> {
    match id as i64 {
        0 => Ok(Activation::Silu),
        1 => Ok(Activation::Relu),
        other => Err(Error::CheckpointFormat(format!(
            "unknown activation id {other}"
        ))),
    }
}

/// Serialize a checkpoint: magic "MIDF", u32 version, u32 tensor count, then
/// per tensor a u16 name length, the name bytes, u8 ndim, u32 dims, and a
/// little-endian f32 payload.
pub fn serialize(cfg: &ModelConfig, params: &ParamSet, extra: &ExtraTensors) -> Vec<u8> {
    let mut tensors: Vec<(String, Vec<usize>, Vec<f64>)> = vec![(
        "meta.model".into(),
        vec![5],
        vec![
            cfg.input_channels as f64,
            cfg.base_width as f64,
            cfg.depth as f64,
            cfg.time_embed_dim as f64,
            activation_id(cfg.activation),
        ],
    )];
    params.for_each_tensor(|name, data, shape| {
        tensors.push((name.to_string(), shape.to_vec(), data.to_vec()));
    });
    tensors.extend(extra.iter().cloned());

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, shape, data) in &tensors {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(shape.len() as u8);
        for d in shape {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for v in data {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn save_checkpoint<P: AsRef<Path>>(
    path: P,
    cfg: &ModelConfig,
    params: &ParamSet,
    extra: &ExtraTensors,
) -> Result<()> {
    fs::write(path, serialize(cfg, params, extra))?;
    Ok(())
}

struct RawCheckpoint {
    tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
}

fn deserialize_raw(bytes: &[u8]) -> Result<RawCheckpoint> {
    let fail = |msg: &str| Error::CheckpointFormat(msg.to_string());
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(fail("truncated checkpoint"));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 4)? != MAGIC {
        return Err(fail("bad magic (expected MIDF)"));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::CheckpointFormat(format!(
            "unsupported version {version}"
        )));
    }
    let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut pos, name_len)?.to_vec())
            .map_err(|_| fail("non-utf8 tensor name"))?;
        let ndim = take(&mut pos, 1)?[0] as usize;
        let mut shape = Vec::with_capacity(ndim);
        let mut len = 1usize;
        for _ in 0..ndim {
            let d = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
            shape.push(d);
            len = len
                .checked_mul(d)
                .ok_or_else(|| fail("tensor size overflow"))?;
        }
        let payload = take(&mut pos, len * 4)?;
        let data: Vec<f64> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        tensors.push((name, shape, data));
    }
    if pos != bytes.len() {
        return Err(fail("trailing bytes after last tensor"));
    }
    Ok(RawCheckpoint { tensors })
}

/// A loaded checkpoint: model config, parameters, and any extra tensors.
#[derive(Debug)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ParamSet,
    pub extra: ExtraTensors,
}

/// Deserialize a checkpoint. When `expected` is given, its architecture must
/// match the stored one; every model tensor is shape-checked and mismatches
/// are reported with both shapes.
pub fn deserialize(bytes: &[u8], expected: Option<&ModelConfig>) -> Result<Checkpoint> {
    let raw = deserialize_raw(bytes)?;
    let meta = raw
        .tensors
        .iter()
        .find(|(n, _, _)| n == "meta.model")
        .ok_or_else(|| Error::CheckpointFormat("missing meta.model tensor".into()))?;
    if meta.2.len() != 5 {
        return Err(Error::CheckpointFormat("meta.model must have 5 entries".into()));
    }
    let config = ModelConfig {
        input_channels: meta.2[0] as usize,
        base_width: meta.2[1] as usize,
        depth: meta.2[2] as usize,
        time_embed_dim: meta.2[3] as usize,
        activation: activation_from_id(meta.2[4])?,
    };
    config.validate()?;
    if let Some(exp) = expected {
        if *exp != config {
            return Err(Error::CheckpointMismatch(format!(
                "expected architecture {exp:?}, checkpoint holds {config:?}"
            )));
        }
    }

    let mut params = ParamSet::zeros(&config)?;
    let mut expected_shapes: Vec<(String, Vec<usize>)> = Vec::new();
    params.for_each_tensor(|name, _, shape| {
        expected_shapes.push((name.to_string(), shape.to_vec()));
    });

    let mut extra = ExtraTensors::new();
    let mut filled = vec![false; expected_shapes.len()];
    {
        let mut slots = params.tensors_mut();
        for (name, shape, data) in &raw.tensors {
            if name == "meta.model" {
                continue;
            }
            match expected_shapes.iter().position(|(n, _)| n == name) {
                Some(i) => {
                    if expected_shapes[i].1 != *shape {
                        return Err(Error::CheckpointMismatch(format!(
                            "tensor {name}: expected shape {:?}, checkpoint holds {:?}",
                            expected_shapes[i].1, shape
                        )));
                    }
                    slots[i].1.copy_from_slice(data);
                    filled[i] = true;
                }
                None => extra.push((name.clone(), shape.clone(), data.clone())),
            }
        }
    }
    if let Some(missing) = filled.iter().position(|f| !f) {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint is missing tensor {}",
            expected_shapes[missing].0
        )));
    }
    Ok(Checkpoint {
        config,
        params,
        extra,
    })
}

pub fn load_checkpoint<P: AsRef<Path>>(path: P, expected: Option<&ModelConfig>) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    deserialize(&bytes, expected)
}
