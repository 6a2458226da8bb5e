//! Brute-force oracles, seeded input generators and property checks shared
//! by the integration suites and the acceptance runner.
#![allow(dead_code)]

use std::collections::VecDeque;

use docdecomp::classify::{label_text_block, ElementLabel, LineMetrics, Region};
use docdecomp::edge::{canny, gaussian_blur, sobel, CannyParams, DirectionBin};
use docdecomp::harness::{match_regions, GroundTruth, TruthRegion};
use docdecomp::orient::auto_orient;
use docdecomp::segment::connected_black_boxes;
use docdecomp::smear::smear;
use docdecomp::{BBox, BinaryMap, DecompositionConfig, GrayImage};
use rand::Rng;

pub type Check = Result<(), String>;

// ---- generators ----

pub fn random_map(rng: &mut impl Rng, max_w: usize, max_h: usize) -> BinaryMap {
    let w = rng.gen_range(1..=max_w);
    let h = rng.gen_range(1..=max_h);
    let density: f64 = rng.gen_range(0.05..0.6);
    BinaryMap::from_fn(w, h, |_, _| rng.gen_bool(density))
}

pub fn random_gray(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.gen())
}

/// Random blocks of flat gray: strong, well-separated edges.
pub fn random_patchwork(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
    let mut img = GrayImage::new(w, h, rng.gen());
    for _ in 0..rng.gen_range(1..6) {
        let x0 = rng.gen_range(0..w);
        let y0 = rng.gen_range(0..h);
        let x1 = rng.gen_range(x0..w);
        let y1 = rng.gen_range(y0..h);
        let v = rng.gen();
        for y in y0..=y1 {
            for x in x0..=x1 {
                img.set(x, y, v);
            }
        }
    }
    img
}

pub fn random_box(rng: &mut impl Rng, w: usize, h: usize) -> BBox {
    let x0 = rng.gen_range(0..w);
    let y0 = rng.gen_range(0..h);
    BBox::new(x0, y0, rng.gen_range(x0..w), rng.gen_range(y0..h))
}

pub fn random_label(rng: &mut impl Rng) -> ElementLabel {
    ElementLabel::ALL[rng.gen_range(0..4)]
}

// ---- oracles ----

/// Flood fill each 4-connected component, drop small boxes, then merge any
/// intersecting pair until none remain.
pub fn oracle_boxes(map: &BinaryMap, min_area: usize) -> Vec<BBox> {
    let (w, h) = (map.width(), map.height());
    let mut seen = vec![false; w * h];
    let mut boxes = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            if !map.get(sx, sy) || seen[sy * w + sx] {
                continue;
            }
            let mut b = BBox::new(sx, sy, sx, sy);
            let mut queue = VecDeque::from([(sx, sy)]);
            seen[sy * w + sx] = true;
            while let Some((x, y)) = queue.pop_front() {
                b = b.union(&BBox::new(x, y, x, y));
                let mut push = |nx: usize, ny: usize| {
                    if map.get(nx, ny) && !seen[ny * w + nx] {
                        seen[ny * w + nx] = true;
                        queue.push_back((nx, ny));
                    }
                };
                if x > 0 {
                    push(x - 1, y);
                }
                if x + 1 < w {
                    push(x + 1, y);
                }
                if y > 0 {
                    push(x, y - 1);
                }
                if y + 1 < h {
                    push(x, y + 1);
                }
            }
            if b.area() >= min_area.max(1) {
                boxes.push(b);
            }
        }
    }
    'outer: loop {
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].intersects(&boxes[j]) {
                    let merged = boxes[i].union(&boxes[j]);
                    boxes.swap_remove(j);
                    boxes[i] = merged;
                    continue 'outer;
                }
            }
        }
        break;
    }
    boxes.sort_by_key(|b| (b.y0, b.x0, b.y1, b.x1));
    boxes
}

/// A white pixel is filled when walking both ways along the line finds
/// black, and the white stretch between those anchors is shorter than
/// `thresh`.
fn naive_fill(map: &BinaryMap, thresh: usize, horizontal: bool) -> BinaryMap {
    let (w, h) = (map.width(), map.height());
    BinaryMap::from_fn(w, h, |x, y| {
        if map.get(x, y) {
            return true;
        }
        let (pos, len) = if horizontal { (x, w) } else { (y, h) };
        let at = |i: usize| if horizontal { map.get(i, y) } else { map.get(x, i) };
        let before = (0..pos).rev().find(|&i| at(i));
        let after = (pos + 1..len).find(|&i| at(i));
        match (before, after) {
            (Some(a), Some(b)) => b - a - 1 < thresh,
            _ => false,
        }
    })
}

pub fn oracle_smear(map: &BinaryMap, h: usize, v: usize, f: usize) -> BinaryMap {
    let mut cur = map.clone();
    loop {
        let hp = naive_fill(&cur, h, true);
        let vp = naive_fill(&cur, v, false);
        let both = BinaryMap::from_fn(cur.width(), cur.height(), |x, y| hp.get(x, y) || vp.get(x, y));
        let next = naive_fill(&both, f, true);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Full 2-D convolution with a product kernel and clamped borders.
pub fn oracle_blur(img: &GrayImage, sigma: f64, radius: usize) -> GrayImage {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let k: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let (w, h) = (img.width() as isize, img.height() as isize);
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for j in -r..=r {
            for i in -r..=r {
                let sx = (x as isize + i).clamp(0, w - 1) as usize;
                let sy = (y as isize + j).clamp(0, h - 1) as usize;
                acc += k[(i + r) as usize] * k[(j + r) as usize] * img.get(sx, sy) as f64;
            }
        }
        acc.round().clamp(0.0, 255.0) as u8
    })
}

pub fn oracle_iou(a: &BBox, b: &BBox) -> f64 {
    let mut inter = 0usize;
    let mut union = 0usize;
    for y in a.y0.min(b.y0)..=a.y1.max(b.y1) {
        for x in a.x0.min(b.x0)..=a.x1.max(b.x1) {
            let (ia, ib) = (a.contains(x, y), b.contains(x, y));
            inter += (ia && ib) as usize;
            union += (ia || ib) as usize;
        }
    }
    inter as f64 / union as f64
}

// ---- property checks ----

pub fn check_smear(map: &BinaryMap, h: usize, v: usize, f: usize) -> Check {
    let once = smear(map, h, v, f);
    for (i, (&a, &b)) in map.data().iter().zip(once.data()).enumerate() {
        if a && !b {
            return Err(format!("black pixel {i} turned white"));
        }
    }
    if smear(&once, h, v, f) != once {
        return Err("second smear changed the map".into());
    }
    Ok(())
}

fn blurred_magnitudes(img: &GrayImage, p: &CannyParams) -> (Vec<f32>, Vec<f32>) {
    let g = sobel(&gaussian_blur(img, p.sigma, p.radius)).expect("image is at least 3x3");
    (g.magnitude, g.direction)
}

/// No edge pixel has edge pixels on both sides along its own quantized
/// gradient direction.
pub fn check_canny_thin(img: &GrayImage, p: &CannyParams) -> Check {
    let edges = canny(img, p).map_err(|e| e.to_string())?;
    let (_, dir) = blurred_magnitudes(img, p);
    let (w, h) = (img.width(), img.height());
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if !edges.get(x, y) {
                continue;
            }
            let (dx, dy) = DirectionBin::from_radians(dir[y * w + x]).offset();
            let fwd = edges.get((x as isize + dx) as usize, (y as isize + dy) as usize);
            let back = edges.get((x as isize - dx) as usize, (y as isize - dy) as usize);
            if fwd && back {
                return Err(format!("edge at ({x},{y}) is thick along its gradient"));
            }
        }
    }
    Ok(())
}

/// Every edge pixel is strong or 8-connected through edge pixels to a
/// strong one.
pub fn check_hysteresis_sound(img: &GrayImage, p: &CannyParams) -> Check {
    let edges = canny(img, p).map_err(|e| e.to_string())?;
    let (mag, _) = blurred_magnitudes(img, p);
    let (w, h) = (img.width(), img.height());
    let mut reached = vec![false; w * h];
    let mut queue: VecDeque<usize> = (0..w * h)
        .filter(|&i| edges.data()[i] && mag[i].min(255.0) >= p.high)
        .collect();
    for &i in &queue {
        reached[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let k = ny as usize * w + nx as usize;
                if edges.data()[k] && !reached[k] {
                    reached[k] = true;
                    queue.push_back(k);
                }
            }
        }
    }
    match (0..w * h).find(|&i| edges.data()[i] && !reached[i]) {
        Some(i) => Err(format!("edge pixel {i} has no path to a strong pixel")),
        None => Ok(()),
    }
}

pub fn check_uniform_empty(w: usize, h: usize, value: u8, p: &CannyParams) -> Check {
    let edges = canny(&GrayImage::new(w, h, value), p).map_err(|e| e.to_string())?;
    if edges.count_true() != 0 {
        return Err(format!("{} edges on a uniform {w}x{h} image", edges.count_true()));
    }
    Ok(())
}

/// Raising `low` with `high` fixed never adds an edge pixel.
pub fn check_low_monotone(img: &GrayImage, low_a: f32, low_b: f32, p: &CannyParams) -> Check {
    let (lo, hi) = if low_a <= low_b { (low_a, low_b) } else { (low_b, low_a) };
    let loose = canny(img, &CannyParams { low: lo, ..*p }).map_err(|e| e.to_string())?;
    let strict = canny(img, &CannyParams { low: hi, ..*p }).map_err(|e| e.to_string())?;
    match (0..loose.data().len()).find(|&i| strict.data()[i] && !loose.data()[i]) {
        Some(i) => Err(format!("low {hi} kept pixel {i} that low {lo} dropped")),
        None => Ok(()),
    }
}

pub fn check_quarter_identity(img: &GrayImage) -> Check {
    let mut r = img.clone();
    for _ in 0..4 {
        r = r.rotate_quarter(1);
    }
    if &r != img {
        return Err("four quarter turns changed the image".into());
    }
    Ok(())
}

/// A second orientation pass finds nothing left to correct.
pub fn check_auto_orient_idempotent(page: &GrayImage, cfg: &DecompositionConfig) -> Check {
    let first = auto_orient(page, cfg);
    if !first.flags.is_empty() {
        return Err(format!("first pass flagged {:?}", first.flags));
    }
    let second = auto_orient(&first.page, cfg);
    let angle = second.skew_degrees();
    if angle.abs() >= cfg.skew_fine_step || second.turns_applied() != 0 {
        return Err(format!(
            "second pass: angle {angle}, turns {} (first: angle {}, turns {})",
            second.turns_applied(),
            first.skew_degrees(),
            first.turns_applied()
        ));
    }
    Ok(())
}

pub fn check_label_at_dominant(dominant: usize, lines: usize, cfg: &DecompositionConfig) -> Check {
    let thresholds = cfg.resolve(dominant as f64).map_err(|e| e.to_string())?;
    let metrics: Vec<LineMetrics> = (0..lines)
        .map(|i| LineMetrics {
            band_top: i * (dominant + 5),
            band_bottom: i * (dominant + 5) + dominant - 1,
            line_height: dominant,
            matra_row: i * (dominant + 5),
            matra_index: 0,
            matra_black: dominant * 3,
            median_black: dominant,
        })
        .collect();
    match label_text_block(&metrics, dominant, &thresholds) {
        ElementLabel::Column => Ok(()),
        other => Err(format!("dominant {dominant} labeled {other}")),
    }
}

pub fn check_match_identities(preds: &[Region], truth: &GroundTruth, iou_min: f64) -> Check {
    let rep = match_regions(preds, truth, iou_min);
    for c in &rep.classes {
        let n_truth = truth.regions.iter().filter(|r| r.label == c.label).count();
        let n_pred = preds.iter().filter(|r| r.label == c.label).count();
        if c.counts.tp + c.counts.fn_ != n_truth {
            return Err(format!("{}: TP + FN != {n_truth}", c.label));
        }
        if c.counts.tp + c.counts.fp != n_pred {
            return Err(format!("{}: TP + FP != {n_pred}", c.label));
        }
        for v in [c.precision, c.recall, c.accuracy] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{}: metric {v} outside [0, 1]", c.label));
            }
        }
    }
    Ok(())
}

pub fn random_regions(rng: &mut impl Rng, n: usize, w: usize, h: usize) -> Vec<Region> {
    (0..n)
        .map(|_| Region {
            label: random_label(rng),
            bbox: random_box(rng, w, h),
            line_height: None,
        })
        .collect()
}

pub fn random_truth(rng: &mut impl Rng, n: usize, w: usize, h: usize) -> GroundTruth {
    GroundTruth {
        width: w,
        height: h,
        regions: (0..n)
            .map(|_| TruthRegion {
                label: random_label(rng),
                bbox: random_box(rng, w, h),
            })
            .collect(),
        skew: 0.0,
        turns: 0,
    }
}

// ---- oracle comparisons ----

pub fn compare_boxes(map: &BinaryMap, min_area: usize) -> Check {
    let got: Vec<BBox> = connected_black_boxes(map, min_area).iter().map(|b| b.bbox).collect();
    let want = oracle_boxes(map, min_area);
    if got != want {
        return Err(format!("{map:?} min_area {min_area}: got {got:?}, oracle {want:?}"));
    }
    Ok(())
}

pub fn compare_smear(map: &BinaryMap, h: usize, v: usize, f: usize) -> Check {
    let got = smear(map, h, v, f);
    let want = oracle_smear(map, h, v, f);
    if got != want {
        return Err(format!("{map:?} with ({h}, {v}, {f}): got {got:?}, oracle {want:?}"));
    }
    Ok(())
}

pub fn compare_blur(img: &GrayImage, sigma: f32, radius: usize) -> Check {
    let got = gaussian_blur(img, sigma, radius);
    let want = oracle_blur(img, sigma as f64, radius);
    for (i, (&a, &b)) in got.data().iter().zip(want.data()).enumerate() {
        if a.abs_diff(b) > 1 {
            return Err(format!("pixel {i}: blur {a}, oracle {b}"));
        }
    }
    Ok(())
}

pub fn compare_iou(a: &BBox, b: &BBox) -> Check {
    let (got, want) = (a.iou(b), oracle_iou(a, b));
    if (got - want).abs() > 1e-12 {
        return Err(format!("{a:?} vs {b:?}: iou {got}, oracle {want}"));
    }
    Ok(())
}

/// Runs `check` on `cases` inputs drawn from a seeded generator and returns
/// the first failure with its case index.
pub fn seeded_cases<T>(
    seed: u64,
    cases: usize,
    mut generate: impl FnMut(&mut rand_chacha::ChaCha8Rng) -> T,
    mut check: impl FnMut(&T) -> Check,
) -> Check {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in 0..cases {
        let input = generate(&mut rng);
        check(&input).map_err(|e| format!("case {i}: {e}"))?;
    }
    Ok(())
}
