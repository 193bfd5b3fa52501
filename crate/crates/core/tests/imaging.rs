mod common;

use hfmt_core::imaging::{
    binarize_adaptive, binarize_fixed, connected_components, label_components, load_pnm, save_pnm,
};
use hfmt_core::{BinaryImage, Image, Polarity};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_image() -> impl Strategy<Value = Image> {
    (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h)
            .prop_map(move |px| Image::new(w, h, px).unwrap())
    })
}

fn arb_mask() -> impl Strategy<Value = BinaryImage> {
    (1usize..20, 1usize..20).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<bool>(), w * h)
            .prop_map(move |m| BinaryImage::new(w, h, m).unwrap())
    })
}

proptest! {
    #[test]
    fn pnm_round_trip(img in arb_image()) {
        prop_assert_eq!(load_pnm(&save_pnm(&img)).unwrap(), img);
    }

    #[test]
    fn polarities_partition_the_frame(img in arb_image(), t in any::<u8>()) {
        let bright = binarize_fixed(&img, t, Polarity::Bright);
        let dark = binarize_fixed(&img, t, Polarity::Dark);
        for (b, d) in bright.mask().iter().zip(dark.mask()) {
            prop_assert_ne!(b, d);
        }
    }

    #[test]
    fn labels_match_flood_fill(mask in arb_mask(), min_area in 1usize..4) {
        let blobs = connected_components(&mask, min_area);
        let oracle = common::flood_fill(&mask, min_area);
        prop_assert_eq!(blobs.len(), oracle.len());
        for (i, (b, o)) in blobs.iter().zip(&oracle).enumerate() {
            prop_assert_eq!(b.label as usize, i + 1);
            prop_assert_eq!(b.area, o.area);
            prop_assert_eq!(b.centroid, o.centroid);
            prop_assert_eq!(b.bbox, o.bbox);
        }
    }

    #[test]
    fn label_map_covers_foreground(mask in arb_mask()) {
        let map = label_components(&mask);
        for (l, &m) in map.labels.iter().zip(mask.mask()) {
            prop_assert_eq!(*l != 0, m);
        }
        let total: usize = map.blobs.iter().map(|b| b.area).sum();
        prop_assert_eq!(total, mask.count());
    }
}

#[test]
fn flood_fill_agreement_on_dense_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for density in [0.1, 0.3, 0.5, 0.7] {
        for _ in 0..10 {
            let mask = common::random_mask(&mut rng, 64, 64, density);
            let blobs = connected_components(&mask, 1);
            let oracle = common::flood_fill(&mask, 1);
            assert_eq!(blobs.len(), oracle.len());
            for (b, o) in blobs.iter().zip(&oracle) {
                assert_eq!((b.area, b.centroid, b.bbox), (o.area, o.centroid, o.bbox));
            }
        }
    }
}

#[test]
fn adaptive_threshold_survives_illumination_gradient() {
    // bright 4-pixel strip riding on a ramp steeper than its contrast
    let (w, h) = (80, 40);
    let on_strip = |x: usize| (38..42).contains(&x);
    let img = Image::from_fn(w, h, |x, y| {
        let base = 40.0 + x as f64 + 0.3 * y as f64;
        let v = if on_strip(x) { base + 40.0 } else { base };
        v.round() as u8
    });

    let strip_min = (0..h).flat_map(|y| (38..42).map(move |x| (x, y)));
    let strip_min = strip_min.map(|(x, y)| img.get(x, y)).min().unwrap();
    let floor_max = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, _)| !on_strip(x))
        .map(|(x, y)| img.get(x, y))
        .max()
        .unwrap();
    assert!(
        floor_max > strip_min,
        "no global threshold separates the strip"
    );

    let adaptive = binarize_adaptive(&img, 15, -20).unwrap();
    for y in 0..h {
        for x in 0..w {
            assert_eq!(adaptive.get(x, y), on_strip(x), "pixel ({x}, {y})");
        }
    }
}
