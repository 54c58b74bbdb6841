use proptest::prelude::*;

use hintkit::dataset::icosphere;
use hintkit::geometry::{CameraSpec, ForegroundMask};
use hintkit::image::HdrImage;
use hintkit::lighting::{sample_lighting, EnvMap, EnvPool, Light, LightingCategory};
use hintkit::math::DVec3;
use hintkit::packing::{
    composite, pack_direct, pack_multiplied, permute_color_channels, ColorPermutation, ControlPacket, FeatureMap,
    PackOptions, PacketLayout, RadianceHintSet,
};
use hintkit::render::{render_radiance_hints, RenderSettings, SceneLights};
use hintkit::rng::rng_from;

fn image(w: usize, h: usize, values: &[f32]) -> HdrImage {
    let mut img = HdrImage::new(w, h);
    for (i, p) in img.pixels.iter_mut().enumerate() {
        let v = |k: usize| values[(3 * i + k) % values.len()];
        *p = [v(0), v(1), v(2)];
    }
    img
}

fn arb_dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..9, 1usize..9)
}

fn arb_values() -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(0.0f32..50.0, 1..64)
}

fn hint_set(w: usize, h: usize, n: usize, values: &[f32]) -> RadianceHintSet {
    let hints = (0..n)
        .map(|k| {
            let shifted: Vec<f32> = values.iter().map(|v| v * (k + 1) as f32).collect();
            image(w, h, &shifted)
        })
        .collect();
    RadianceHintSet::new(hints).unwrap()
}

fn same_bits(a: &[f32], b: &[f32]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #[test]
    fn channel_count_law((w, h) in arb_dims(), n in 3usize..=5, with_mask in any::<bool>(), values in arb_values()) {
        let hints = hint_set(w, h, n, &values);
        let mask = ForegroundMask::full(w, h);
        let opts = PackOptions { include_mask: with_mask };
        let m = pack_multiplied(&FeatureMap::constant(w, h, 3 * n, 0.5), &hints, &mask, opts).unwrap();
        let d = pack_direct(&image(w, h, &values), &hints, &mask, opts).unwrap();
        let extra = usize::from(with_mask);
        prop_assert_eq!(m.channel_count(), 3 * n + extra);
        prop_assert_eq!(d.channel_count(), 3 + 3 * n + extra);
        prop_assert_eq!(PacketLayout::Multiplied.channel_count(n, with_mask), m.channel_count());
        prop_assert_eq!(PacketLayout::Direct.channel_count(n, with_mask), d.channel_count());
    }

    #[test]
    fn ones_features_reproduce_hints((w, h) in arb_dims(), n in 3usize..=5, values in arb_values()) {
        let hints = hint_set(w, h, n, &values);
        let p = pack_multiplied(&FeatureMap::constant(w, h, 3 * n, 1.0), &hints, &ForegroundMask::full(w, h), PackOptions::default()).unwrap();
        for c in 0..3 * n {
            prop_assert!(same_bits(&p.channels[c], &hints.flat_channel(c)));
        }
    }

    #[test]
    fn product_matches_elementwise_loop((w, h) in arb_dims(), values in arb_values(), features in prop::collection::vec(-3.0f32..3.0, 1..32)) {
        let hints = hint_set(w, h, 4, &values);
        let channels: Vec<Vec<f32>> = (0..12)
            .map(|c| (0..w * h).map(|i| features[(c * 7 + i) % features.len()]).collect())
            .collect();
        let fm = FeatureMap::new(w, h, channels.clone()).unwrap();
        let p = pack_multiplied(&fm, &hints, &ForegroundMask::full(w, h), PackOptions::default()).unwrap();
        for c in 0..12 {
            let img = &hints.hints[c / 3];
            for i in 0..w * h {
                prop_assert_eq!(p.channels[c][i].to_bits(), (channels[c][i] * img.pixels[i][c % 3]).to_bits());
            }
        }
    }

    #[test]
    fn dlcp_round_trip_is_bit_exact((w, h) in arb_dims(), n in 3usize..=5, values in arb_values(), direct in any::<bool>()) {
        let hints = hint_set(w, h, n, &values);
        let mask = ForegroundMask::new(w, h, (0..w * h).map(|i| (i % 5) as f32 / 4.0).collect());
        let p = if direct {
            pack_direct(&image(w, h, &values), &hints, &mask, PackOptions::default()).unwrap()
        } else {
            pack_multiplied(&FeatureMap::constant(w, h, 3 * n, 2.0), &hints, &mask, PackOptions::default()).unwrap()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.dlcp");
        p.write(&path).unwrap();
        let q = ControlPacket::read(&path).unwrap();
        prop_assert_eq!(q.layout, p.layout);
        prop_assert_eq!(q.channels.len(), p.channels.len());
        for (a, b) in q.channels.iter().zip(&p.channels) {
            prop_assert!(same_bits(a, b));
        }
        prop_assert_eq!(q.provenance, p.provenance);
    }

    #[test]
    fn permutation_inverse_and_oracle(id in 0usize..6, rgb in prop::array::uniform3(-10.0f32..10.0)) {
        let perm = ColorPermutation::from_id(id).unwrap();
        let out = perm.apply(rgb);
        let order = perm.order();
        for i in 0..3 {
            prop_assert_eq!(out[i].to_bits(), rgb[order[i]].to_bits());
        }
        let back = perm.inverse().apply(out);
        prop_assert!(same_bits(&back, &rgb));
    }

    #[test]
    fn permutations_form_a_group(a in 0usize..6, b in 0usize..6) {
        let (pa, pb) = (ColorPermutation::from_id(a).unwrap(), ColorPermutation::from_id(b).unwrap());
        let rgb = [1.0f32, 2.0, 3.0];
        let composed = pb.apply(pa.apply(rgb));
        prop_assert!(ColorPermutation::ALL.iter().any(|p| p.apply(rgb) == composed));
    }

    #[test]
    fn images_permute_bit_exactly((w, h) in arb_dims(), values in arb_values(), id in 0usize..6) {
        let perm = ColorPermutation::from_id(id).unwrap();
        let img = image(w, h, &values);
        let there = permute_color_channels(std::slice::from_ref(&img), perm);
        let back = permute_color_channels(&there, perm.inverse());
        prop_assert_eq!(&back[0].pixels, &img.pixels);
    }

    #[test]
    fn composite_is_convex((w, h) in arb_dims(), fg in arb_values(), bg in arb_values(), m in prop::collection::vec(0.0f32..=1.0, 1..64)) {
        let f = image(w, h, &fg);
        let b = image(w, h, &bg);
        let mask = ForegroundMask::new(w, h, (0..w * h).map(|i| m[i % m.len()]).collect());
        let out = composite(&f, &b, &mask).unwrap();
        for i in 0..w * h {
            for c in 0..3 {
                let (x, y, o) = (f.pixels[i][c], b.pixels[i][c], out.pixels[i][c]);
                prop_assert!(x.min(y) <= o && o <= x.max(y));
            }
        }
    }

    #[test]
    fn sampled_lighting_stays_in_range(seed in any::<u64>(), cat in 1u8..=5) {
        let mut pool = EnvPool::new();
        pool.insert("sky", EnvMap::uniform(8, [1.0, 0.9, 0.7]));
        let category = LightingCategory::from_index(cat).unwrap();
        let spec = sample_lighting(category, &pool, &mut rng_from(seed, &[])).unwrap();
        spec.validate().unwrap();
        prop_assert_eq!(spec.category, Some(category));
        for light in &spec.lights {
            match light {
                Light::Point { position, power, .. } => {
                    let r = position.length();
                    prop_assert!((4.0..=5.0).contains(&r));
                    prop_assert!((position.y / r).acos().to_degrees() <= 60.0 + 1e-9);
                    prop_assert!((500.0..=1500.0).contains(power));
                }
                Light::Area { center, normal, edge_length, .. } => {
                    prop_assert!((5.0..=10.0).contains(edge_length));
                    prop_assert!((normal.normalize() + center.normalize()).length() < 1e-9);
                }
                Light::Environment { monochrome, .. } => {
                    prop_assert_eq!(*monochrome, category == LightingCategory::MonochromeEnvironment);
                }
                Light::UniformAmbient { radiance } => prop_assert!(radiance.min_element() > 0.0),
            }
        }
        let points = spec.point_lights().count();
        match category {
            LightingCategory::Point => prop_assert_eq!(points, 1),
            LightingCategory::MultiPoint => prop_assert_eq!(points, 3),
            _ => prop_assert_eq!(points, 0),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn renders_are_independent_of_tiling(seed in any::<u64>(), tile in 1usize..20) {
        let mesh = icosphere(2, 0.5);
        let mut pool = EnvPool::new();
        pool.insert("sky", EnvMap::uniform(8, [1.0, 0.9, 0.7]));
        let spec = sample_lighting(LightingCategory::Point, &pool, &mut rng_from(seed, &[1])).unwrap();
        let lights = SceneLights::resolve(&spec, &pool).unwrap();
        let camera = CameraSpec::new(DVec3::new(0.3, 0.4, 2.5), DVec3::ZERO, 28.0, 13, 11);
        let base = RenderSettings::default().with_spp(3).with_seed(seed);
        let tiled = RenderSettings { tile_size: tile, ..base };
        let (a, _) = render_radiance_hints(&mesh, &lights, &camera, &base, 3).unwrap();
        let (b, _) = render_radiance_hints(&mesh, &lights, &camera, &tiled, 3).unwrap();
        for (x, y) in a.hints.iter().zip(&b.hints) {
            prop_assert_eq!(&x.pixels, &y.pixels);
            prop_assert!(x.pixels.iter().flatten().all(|v| v.is_finite() && *v >= 0.0));
        }
    }
}
