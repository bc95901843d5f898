use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::ColorSpaceTag;
use crate::imaging::{BinaryMask, ImageBuffer};
use crate::lut::Lut3D;

/// Smooth color field over normalized coordinates (u, v) ∈ [0,1]².
#[derive(Debug, Clone, PartialEq)]
struct Field {
    base: [f64; 3],
    du: [f64; 3],
    dv: [f64; 3],
    waves: Vec<([f64; 3], f64, f64, f64)>,
}

impl Field {
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let c = |rng: &mut R, lo: f64, hi: f64| [rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi)];
        Self {
            base: c(rng, 0.15, 0.85),
            du: c(rng, -0.25, 0.25),
            dv: c(rng, -0.25, 0.25),
            waves: (0..3)
                .map(|_| {
                    (
                        c(rng, -0.08, 0.08),
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect(),
        }
    }

    fn at(&self, u: f64, v: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for c in 0..3 {
            let mut x = self.base[c] + self.du[c] * (u - 0.5) + self.dv[c] * (v - 0.5);
            for (amp, fu, fv, ph) in &self.waves {
                x += amp[c] * (2.0 * PI * (fu * u + fv * v) + ph).sin();
            }
            out[c] = x.clamp(0.02, 0.98);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ellipse {
    cu: f64,
    cv: f64,
    ru: f64,
    rv: f64,
}

impl Ellipse {
    fn contains(&self, u: f64, v: f64) -> bool {
        let a = (u - self.cu) / self.ru;
        let b = (v - self.cv) / self.rv;
        a * a + b * b <= 1.0
    }
}

/// Procedural portrait: a background field and a head-and-torso subject
/// with its own field.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    background: Field,
    subject: Field,
    blobs: Vec<Ellipse>,
    grain: f64,
    grain_seed: u64,
}

impl Scene {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let torso = Ellipse {
            cu: rng.random_range(0.35..0.65),
            cv: rng.random_range(0.72..0.85),
            ru: rng.random_range(0.2..0.28),
            rv: rng.random_range(0.35..0.45),
        };
        let head_r = rng.random_range(0.12..0.17);
        let head = Ellipse {
            cu: torso.cu + rng.random_range(-0.05..0.05),
            cv: torso.cv - torso.rv - head_r * 0.5,
            ru: head_r * 0.7,
            rv: head_r,
        };
        Self {
            background: Field::random(rng),
            subject: Field::random(rng),
            blobs: vec![torso, head],
            grain: 0.01,
            grain_seed: rng.random(),
        }
    }
}

#[inline]
fn hash_noise(seed: u64, y: usize, x: usize, c: usize) -> f64 {
    // splitmix64 on the pixel coordinates
    let mut z = seed ^ ((y as u64) << 40) ^ ((x as u64) << 16) ^ c as u64;
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Renders the scene at `height`×`width`; the mask marks subject pixels.
pub fn render_scene(scene: &Scene, height: usize, width: usize) -> (ImageBuffer<f32>, BinaryMask) {
    let coord = |y: usize, x: usize| ((x as f64 + 0.5) / width as f64, (y as f64 + 0.5) / height as f64);
    let mask = BinaryMask::from_fn(height, width, |y, x| {
        let (u, v) = coord(y, x);
        scene.blobs.iter().any(|e| e.contains(u, v))
    });
    let img = ImageBuffer::from_fn(height, width, ColorSpaceTag::SrgbNonlinear, |y, x| {
        let (u, v) = coord(y, x);
        let field = if mask.get(y, x) { &scene.subject } else { &scene.background };
        let c = field.at(u, v);
        [0, 1, 2].map(|k| (c[k] + scene.grain * hash_noise(scene.grain_seed, y, x, k)).clamp(0.0, 1.0) as f32)
    });
    (img, mask)
}

/// Smooth random color transform sampled on an S³ lattice: per-channel
/// gamma, a near-identity channel mix and a low-frequency wave.
pub fn random_smooth_lut(size: usize, strength: f64, seed: u64) -> Lut3D<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma: [f64; 3] = [0, 1, 2].map(|_| rng.random_range(0.8..1.25));
    let mut mix = [[0.0; 3]; 3];
    for (r, row) in mix.iter_mut().enumerate() {
        for (c, m) in row.iter_mut().enumerate() {
            *m = if r == c { 1.0 } else { 0.0 } + rng.random_range(-1.0..1.0) * strength;
        }
    }
    let waves: [([f64; 3], f64); 3] =
        [0, 1, 2].map(|_| ([0, 1, 2].map(|_| rng.random_range(-1.5..1.5)), rng.random_range(0.0..2.0 * PI)));
    Lut3D::from_fn(size, |x| {
        let y = [0, 1, 2].map(|c| x[c].powf(gamma[c]));
        [0, 1, 2].map(|c| {
            let mut z: f64 = (0..3).map(|k| mix[c][k] * y[k]).sum();
            let (w, ph) = waves[c];
            z += strength * (PI * (w[0] * x[0] + w[1] * x[1] + w[2] * x[2]) + ph).sin();
            z.clamp(0.0, 1.0) as f32
        })
    })
    .expect("size checked by caller")
}
