//! Optimized stages against their brute-force definitions.

mod support;

use rand::Rng;
use support::*;

#[test]
fn block_boxes_match_flood_fill() {
    seeded_cases(
        11,
        1000,
        |rng| (random_map(rng, 32, 32), rng.gen_range(0..12)),
        |(map, min_area)| compare_boxes(map, *min_area),
    )
    .unwrap();
}

#[test]
fn smear_matches_per_run_fill() {
    seeded_cases(
        12,
        1000,
        |rng| {
            let map = random_map(rng, 16, 16);
            (map, rng.gen_range(0..8), rng.gen_range(0..8), rng.gen_range(0..8))
        },
        |(map, h, v, f)| compare_smear(map, *h, *v, *f),
    )
    .unwrap();
}

#[test]
fn separable_blur_matches_direct_convolution() {
    seeded_cases(
        13,
        200,
        |rng| (random_gray(rng, 8, 8), rng.gen_range(0.5f32..3.0), rng.gen_range(1..5)),
        |(img, sigma, radius)| compare_blur(img, *sigma, *radius),
    )
    .unwrap();
}

#[test]
fn iou_matches_pixel_count() {
    seeded_cases(
        14,
        1000,
        |rng| (random_box(rng, 24, 24), random_box(rng, 24, 24)),
        |(a, b)| compare_iou(a, b),
    )
    .unwrap();
}

#[test]
fn smear_oracle_fills_only_bounded_gaps() {
    let map = docdecomp::BinaryMap::from_fn(9, 1, |x, _| matches!(x, 1 | 4));
    let out = oracle_smear(&map, 3, 1, 1);
    let row: String = out.data().iter().map(|&b| if b { '#' } else { '.' }).collect();
    assert_eq!(row, ".####....");
}
