//! Paired synthetic "modalities": structure fields rendered through two
//! different appearance maps plus per-modality texture noise. The pairs are
//! pixel-aligned, so translation quality can be scored against ground truth
//! at desk scale.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::image::{load_image, min_max_scale, save_pgm, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Blobs,
    Stripes,
    VoronoiCells,
}

impl Structure {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "blobs" => Some(Self::Blobs),
            "stripes" => Some(Self::Stripes),
            "voronoi-cells" | "voronoi" => Some(Self::VoronoiCells),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Blobs => "blobs",
            Self::Stripes => "stripes",
            Self::VoronoiCells => "voronoi-cells",
        }
    }
}

/// Pointwise intensity remap applied to a structure field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AppearanceMap {
    Identity,
    Invert,
    Gamma(f64),
    /// Threshold remap onto two output levels.
    TwoLevelRemap { low: f64, high: f64 },
}

impl AppearanceMap {
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            Self::Identity => v,
            Self::Invert => 1.0 - v,
            Self::Gamma(g) => v.powf(*g),
            Self::TwoLevelRemap { low, high } => {
                if v < 0.5 {
                    *low
                } else {
                    *high
                }
            }
        }
    }

    /// Parse `identity`, `invert`, `gamma:2.0`, or `two-level:0.2,0.8`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => return Some(Self::Identity),
            "invert" => return Some(Self::Invert),
            _ => {}
        }
        if let Some(v) = s.strip_prefix("gamma:") {
            return v.parse().ok().map(Self::Gamma);
        }
        if let Some(v) = s.strip_prefix("two-level:") {
            let (lo, hi) = v.split_once(',')?;
            return Some(Self::TwoLevelRemap {
                low: lo.parse().ok()?,
                high: hi.parse().ok()?,
            });
        }
        None
    }

    pub fn render(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Invert => "invert".into(),
            Self::Gamma(g) => format!("gamma:{g}"),
            Self::TwoLevelRemap { low, high } => format!("two-level:{low},{high}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalityPairSpec {
    pub structure: Structure,
    /// Pixels per side (square images).
    pub size: usize,
    pub appearance_f: AppearanceMap,
    pub appearance_g: AppearanceMap,
    pub texture_noise_f: f64,
    pub texture_noise_g: f64,
    pub seed: u64,
}

impl Default for ModalityPairSpec {
    fn default() -> Self {
        Self {
            structure: Structure::Blobs,
            size: 32,
            appearance_f: AppearanceMap::Identity,
            appearance_g: AppearanceMap::Invert,
            texture_noise_f: 0.02,
            texture_noise_g: 0.02,
            seed: 0,
        }
    }
}

impl ModalityPairSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < 16 {
            return Err(Error::InvalidConfig(format!(
                "size must be >= 16, got {}",
                self.size
            )));
        }
        for m in [&self.appearance_f, &self.appearance_g] {
            if let AppearanceMap::Gamma(g) = m {
                if !(*g > 0.0) {
                    return Err(Error::InvalidConfig(format!("gamma must be > 0, got {g}")));
                }
            }
        }
        if self.appearance_f == self.appearance_g {
            return Err(Error::InvalidConfig(
                "the two appearance maps must differ".into(),
            ));
        }
        if self.texture_noise_f < 0.0 || self.texture_noise_g < 0.0 {
            return Err(Error::InvalidConfig("texture noise must be >= 0".into()));
        }
        Ok(())
    }
}

/// One generated pair with the structure seed it derives from.
#[derive(Debug, Clone)]
pub struct PairSample {
    pub structure_seed: u64,
    pub g: Image,
    pub f: Image,
}

pub(crate) fn split_seed(seed: u64, salt: u64) -> u64 {
    // SplitMix64 step over seed ^ salted constant.
    let mut z = seed ^ salt.wrapping_mul(0x9E3779B97F4A7C15);
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn render_structure(structure: Structure, size: usize, seed: u64) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let s = size as f64;
    match structure {
        Structure::Blobs => {
            let k = rng.gen_range(4..=8);
            let bumps: Vec<(f64, f64, f64, f64)> = (0..k)
                .map(|_| {
                    (
                        rng.gen_range(0.0..s),
                        rng.gen_range(0.0..s),
                        rng.gen_range(s / 10.0..s / 4.0),
                        rng.gen_range(0.5..1.0),
                    )
                })
                .collect();
            let field = Array2::from_shape_fn((size, size), |(y, x)| {
                bumps
                    .iter()
                    .map(|(cy, cx, sig, amp)| {
                        let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
                        amp * (-d2 / (2.0 * sig * sig)).exp()
                    })
                    .sum()
            });
            min_max_scale(&field)
        }
        Structure::Stripes => {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let freq = rng.gen_range(2.0..5.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            Array2::from_shape_fn((size, size), |(y, x)| {
                let u = (x as f64 * theta.cos() + y as f64 * theta.sin()) / s;
                0.5 + 0.5 * (std::f64::consts::TAU * freq * u + phase).sin()
            })
        }
        Structure::VoronoiCells => {
            let m = rng.gen_range(6..=12);
            let sites: Vec<(f64, f64, f64)> = (0..m)
                .map(|_| (rng.gen_range(0.0..s), rng.gen_range(0.0..s), rng.gen()))
                .collect();
            Array2::from_shape_fn((size, size), |(y, x)| {
                sites
                    .iter()
                    .min_by(|a, b| {
                        let da = (y as f64 - a.0).powi(2) + (x as f64 - a.1).powi(2);
                        let db = (y as f64 - b.0).powi(2) + (x as f64 - b.1).powi(2);
                        da.partial_cmp(&db).unwrap()
                    })
                    .map(|site| site.2)
                    .unwrap()
            })
        }
    }
}

fn render_modality(base: &Image, map: AppearanceMap, noise: f64, seed: u64) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    base.mapv(|v| {
        let z: f64 = StandardNormal.sample(&mut rng);
        (map.apply(v) + noise * z).clamp(0.0, 1.0)
    })
}

/// Draw `n` structure fields and render each through both appearance maps.
pub fn make_pair_dataset(spec: &ModalityPairSpec, n: usize) -> Result<Vec<PairSample>> {
    spec.validate()?;
    Ok((0..n)
        .map(|i| {
            let structure_seed = split_seed(spec.seed, i as u64);
            let base = render_structure(spec.structure, spec.size, structure_seed);
            let g = render_modality(
                &base,
                spec.appearance_g,
                spec.texture_noise_g,
                split_seed(structure_seed, 1),
            );
            let f = render_modality(
                &base,
                spec.appearance_f,
                spec.texture_noise_f,
                split_seed(structure_seed, 2),
            );
            PairSample {
                structure_seed,
                g,
                f,
            }
        })
        .collect())
}

/// Deterministic disjoint split; the union equals the input.
pub fn split_dataset<T>(items: Vec<T>, train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if items.is_empty() {
        return Err(Error::Dataset("cannot split an empty dataset".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = items.len();
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Fisher-Yates.
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    for (rank, &idx) in order.iter().enumerate() {
        let item = slots[idx].take().unwrap();
        if rank < n_train {
            train.push(item);
        } else {
            test.push(item);
        }
    }
    Ok((train, test))
}

/// On-disk dataset layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub pair: ModalityPairSpec,
    pub train_count: usize,
    pub test_count: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            pair: ModalityPairSpec::default(),
            train_count: 256,
            test_count: 64,
        }
    }
}

/// Write `train_F/*.pgm`, `test_G/*.pgm`, `test_F/*.pgm` and `manifest.csv`
/// (filename, structure_seed, modality).
pub fn write_dataset(spec: &DatasetSpec, out_dir: &Path) -> Result<()> {
    let pairs = make_pair_dataset(&spec.pair, spec.train_count + spec.test_count)?;
    let (train, test) = (&pairs[..spec.train_count], &pairs[spec.train_count..]);
    for sub in ["train_F", "test_G", "test_F"] {
        fs::create_dir_all(out_dir.join(sub))?;
    }
    let mut manifest = String::from("filename,structure_seed,modality\n");
    for (i, p) in train.iter().enumerate() {
        let name = format!("train_F/{i:04}.pgm");
        save_pgm(&p.f, &out_dir.join(&name))?;
        manifest.push_str(&format!("{name},{},F\n", p.structure_seed));
    }
    for (i, p) in test.iter().enumerate() {
        let gname = format!("test_G/{i:04}.pgm");
        let fname = format!("test_F/{i:04}.pgm");
        save_pgm(&p.g, &out_dir.join(&gname))?;
        save_pgm(&p.f, &out_dir.join(&fname))?;
        manifest.push_str(&format!("{gname},{},G\n", p.structure_seed));
        manifest.push_str(&format!("{fname},{},F\n", p.structure_seed));
    }
    fs::write(out_dir.join("manifest.csv"), manifest)?;
    Ok(())
}

/// Load every image of a directory, sorted by file name.
pub fn load_dir_images(dir: &Path) -> Result<Vec<(String, Image)>> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".pgm") || n.ends_with(".png"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Dataset(format!(
            "no images found in {}",
            dir.display()
        )));
    }
    names
        .into_iter()
        .map(|n| load_image(dir.join(&n)).map(|img| (n, img)))
        .collect()
}
