//! 3D lookup tables: lattice construction, trilinear application, basis
//! blending and analytic gradients.

mod apply;
pub mod cube;
pub(crate) mod interp;
mod lattice;
pub mod stream;

pub use apply::{
    apply, apply_raw, apply_slice, blend_luts, gradients, scatter, scatter_into, weight_gradients, AsLut, BlendGradient,
    LutBlend,
};
pub use cube::{load_cube, read_cube, save_cube, write_cube};
pub use lattice::{Lut3D, DEFAULT_LUT_SIZE};
pub use stream::{apply_file, DEFAULT_TILE_ROWS};

/// Default number of basis LUTs in an image-adaptive blend.
pub const DEFAULT_BASIS_COUNT: usize = 5;

pub fn make_identity<T: crate::Scalar>(size: usize) -> crate::Result<Lut3D<T>> {
    Lut3D::identity(size)
}

pub fn perturb<T: crate::Scalar>(lut: &Lut3D<T>, magnitude: f64, seed: u64) -> Lut3D<T> {
    lut.perturb(magnitude, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::ColorSpaceTag;
    use crate::imaging::ImageBuffer;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image<T: crate::Scalar>(h: usize, w: usize, seed: u64) -> ImageBuffer<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageBuffer::from_fn(h, w, ColorSpaceTag::SrgbNonlinear, |_, _| {
            [T::lit(rng.random()), T::lit(rng.random()), T::lit(rng.random())]
        })
    }

    /// Independent trilinear reference: nested 1D lerps in f64.
    fn lerp_oracle(lut: &Lut3D<f64>, rgb: [f64; 3]) -> [f64; 3] {
        let s = lut.size();
        let pos: Vec<(usize, f64)> = rgb
            .iter()
            .map(|&v| {
                let x = v.clamp(0.0, 1.0) * (s - 1) as f64;
                let i = (x.floor() as usize).min(s - 2);
                (i, x - i as f64)
            })
            .collect();
        let lerp = |a: [f64; 3], b: [f64; 3], t: f64| [0, 1, 2].map(|c| a[c] + (b[c] - a[c]) * t);
        let (r, g, b) = (pos[0], pos[1], pos[2]);
        let e = |dr, dg, db| lut.entry(r.0 + dr, g.0 + dg, b.0 + db);
        let c00 = lerp(e(0, 0, 0), e(1, 0, 0), r.1);
        let c10 = lerp(e(0, 1, 0), e(1, 1, 0), r.1);
        let c01 = lerp(e(0, 0, 1), e(1, 0, 1), r.1);
        let c11 = lerp(e(0, 1, 1), e(1, 1, 1), r.1);
        lerp(lerp(c00, c10, g.1), lerp(c01, c11, g.1), b.1)
    }

    #[test]
    fn identity_reproduces_input() {
        for seed in 0..5 {
            let img = random_image::<f32>(17, 23, seed);
            let out = apply(&Lut3D::identity(33).unwrap(), &img).unwrap();
            assert!(out.max_abs_diff(&img) < 1e-6);
        }
    }

    #[test]
    fn node_inputs_return_entries_exactly() {
        for size in [2usize, 5, 10, 17, 33] {
            let lut = Lut3D::<f32>::identity(size).unwrap().perturb(0.2, size as u64);
            let d = (size - 1) as f32;
            for (r, g, b) in [(0, 0, 0), (size - 1, size - 1, size - 1), (1, size / 2, size - 2), (size - 1, 0, 1)] {
                let img = ImageBuffer::filled(1, 1, [r as f32 / d, g as f32 / d, b as f32 / d], ColorSpaceTag::SrgbNonlinear);
                let out = apply(&lut, &img).unwrap();
                assert_eq!(out.pixel(0, 0), lut.entry(r, g, b), "size {size} node {r},{g},{b}");
            }
        }
    }

    #[test]
    fn center_of_s2_cube_averages_corners() {
        let lut = Lut3D::<f64>::identity(2).unwrap().perturb(0.4, 5);
        let img = ImageBuffer::filled(1, 1, [0.5; 3], ColorSpaceTag::SrgbNonlinear);
        let out = apply_raw(&lut, &img).unwrap().pixel(0, 0);
        for c in 0..3 {
            let mean: f64 = lut.entries().iter().map(|e| e[c]).sum::<f64>() / 8.0;
            assert!((out[c] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn output_is_clamped_and_lab_rejected() {
        let lut = Lut3D::<f32>::from_fn(3, |v| [v[0] as f32 * 2.0 - 0.5, 0.5, 0.5]).unwrap();
        let img = random_image::<f32>(8, 8, 1);
        let out = apply(&lut, &img).unwrap();
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let raw = apply_raw(&lut, &img).unwrap();
        assert!(raw.data().iter().any(|&v| !(0.0..=1.0).contains(&v)));
        let lab = img.with_tag(ColorSpaceTag::Cielab);
        assert!(apply(&lut, &lab).is_err());
    }

    #[test]
    fn one_hot_blend_equals_basis() {
        let basis: Vec<Lut3D<f32>> = (0..5).map(|i| Lut3D::identity(9).unwrap().perturb(0.1, i)).collect();
        let img = random_image::<f32>(12, 12, 3);
        for n in 0..5 {
            let mut w = vec![0.0f32; 5];
            w[n] = 1.0;
            let blend = LutBlend::new(basis.clone(), w).unwrap();
            assert_eq!(apply(&blend, &img).unwrap(), apply(&basis[n], &img).unwrap());
        }
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let blend = LutBlend::new(vec![Lut3D::<f64>::identity(5).unwrap(); 2], vec![1.0, 0.5]).unwrap();
        let img = random_image::<f64>(6, 6, 2);
        let g = gradients(&blend, &img, &vec![0.0; img.data().len()]).unwrap();
        assert!(g.weights.iter().all(|&v| v == 0.0));
        assert!(g.basis.iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn node_pixel_puts_all_mass_on_one_entry() {
        let size = 5;
        let blend = LutBlend::new(vec![Lut3D::<f64>::identity(size).unwrap()], vec![1.0]).unwrap();
        let img = ImageBuffer::filled(1, 1, [0.25, 0.5, 0.75], ColorSpaceTag::SrgbNonlinear);
        let g = gradients(&blend, &img, &[1.0, 2.0, 3.0]).unwrap();
        let hit = blend.basis()[0].index(1, 2, 3);
        for (i, v) in g.basis[0].iter().enumerate() {
            if i == hit {
                assert_eq!(*v, [1.0, 2.0, 3.0]);
            } else {
                assert_eq!(*v, [0.0; 3]);
            }
        }
    }

    /// Loss used for the finite-difference checks: Σ u · apply_raw(blend, x).
    fn linear_loss(blend: &LutBlend<f64>, img: &ImageBuffer<f64>, up: &[f64]) -> f64 {
        apply_raw(blend, img).unwrap().data().iter().zip(up).map(|(a, b)| a * b).sum()
    }

    fn rel_err(a: f64, n: f64) -> f64 {
        let scale = a.abs().max(n.abs());
        if scale < 1e-12 {
            0.0
        } else {
            (a - n).abs() / scale
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let size = 4;
        let basis: Vec<Lut3D<f64>> = (0..3).map(|i| Lut3D::identity(size).unwrap().perturb(0.2, 10 + i)).collect();
        let blend = LutBlend::new(basis, vec![0.7, 0.2, -0.4]).unwrap();
        let img = random_image::<f64>(8, 8, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let up: Vec<f64> = (0..img.data().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = gradients(&blend, &img, &up).unwrap();
        let h = 1e-3;
        for n in 0..3 {
            let mut w = blend.weights().to_vec();
            w[n] += h;
            let plus = linear_loss(&LutBlend::new(blend.basis().to_vec(), w.clone()).unwrap(), &img, &up);
            w[n] -= 2.0 * h;
            let minus = linear_loss(&LutBlend::new(blend.basis().to_vec(), w).unwrap(), &img, &up);
            let num = (plus - minus) / (2.0 * h);
            assert!(rel_err(g.weights[n], num) < 1e-4, "weight {n}: {} vs {num}", g.weights[n]);
            for e in 0..size * size * size {
                for c in 0..3 {
                    let mut b = blend.basis().to_vec();
                    b[n].entries_mut()[e][c] += h;
                    let plus = linear_loss(&LutBlend::new(b.clone(), blend.weights().to_vec()).unwrap(), &img, &up);
                    b[n].entries_mut()[e][c] -= 2.0 * h;
                    let minus = linear_loss(&LutBlend::new(b, blend.weights().to_vec()).unwrap(), &img, &up);
                    let num = (plus - minus) / (2.0 * h);
                    assert!(rel_err(g.basis[n][e][c], num) < 1e-4, "basis {n} entry {e}.{c}");
                }
            }
        }
    }

    #[test]
    fn chunked_scatter_matches_sequential() {
        let img = random_image::<f32>(300, 300, 8);
        let up: Vec<f32> = img.data().iter().map(|v| v - 0.5).collect();
        let par = scatter(9, &img, &up).unwrap();
        let mut seq = vec![[0.0; 3]; 729];
        scatter_into(9, img.data(), &up, &mut seq);
        for (a, b) in par.iter().zip(&seq) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-9 * (1.0 + b[c].abs()));
            }
        }
        assert_eq!(par, scatter(9, &img, &up).unwrap());
    }

    #[test]
    fn monotone_lut_gives_monotone_output() {
        let lut = Lut3D::<f64>::from_fn(7, |v| [v[0].powf(0.7), (v[0] + v[1]) / 2.0, v[2] * v[2]]).unwrap();
        assert!(lut.is_monotone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let p: [f64; 3] = [rng.random(), rng.random(), rng.random()];
            let c = rng.random_range(0..3);
            let mut q = p;
            q[c] = (q[c] + rng.random::<f64>() * 0.3).min(1.0);
            let a = interp::eval(&lut, p);
            let b = interp::eval(&lut, q);
            for k in 0..3 {
                assert!(b[k] >= a[k] - 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn matches_lerp_oracle(seed in any::<u64>(), size in 2usize..9, r in 0.0f64..=1.0, g in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let lut = Lut3D::<f64>::identity(size).unwrap().perturb(0.3, seed);
            let got = interp::eval(&lut, [r, g, b]);
            let want = lerp_oracle(&lut, [r, g, b]);
            for c in 0..3 {
                prop_assert!((got[c] - want[c]).abs() < 1e-12);
            }
        }

        #[test]
        fn blend_is_linear_in_weights(seed in any::<u64>(), u in proptest::collection::vec(-1.0f64..1.0, 3), v in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let basis: Vec<Lut3D<f64>> = (0..3).map(|i| Lut3D::identity(5).unwrap().perturb(0.3, seed ^ i)).collect();
            let img = random_image::<f64>(5, 7, seed);
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let a = apply_raw(&LutBlend::new(basis.clone(), u).unwrap(), &img).unwrap();
            let b = apply_raw(&LutBlend::new(basis.clone(), v).unwrap(), &img).unwrap();
            let s = apply_raw(&LutBlend::new(basis, sum).unwrap(), &img).unwrap();
            for i in 0..s.data().len() {
                prop_assert!((s.data()[i] - a.data()[i] - b.data()[i]).abs() < 1e-12);
            }
        }
    }
}
