//! Run-length smoothing of the edge map into solid element blobs, and
//! discovery of the white bands (element separators) between them.

use crate::raster::{BBox, BinaryMap};

/// Per-pixel lengths of the maximal same-color runs through each pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunValueMap {
    pub width: usize,
    pub height: usize,
    pub h_run: Vec<u32>,
    pub v_run: Vec<u32>,
}

impl RunValueMap {
    pub fn h(&self, x: usize, y: usize) -> u32 {
        self.h_run[y * self.width + x]
    }

    pub fn v(&self, x: usize, y: usize) -> u32 {
        self.v_run[y * self.width + x]
    }
}

/// Calls `f(start, len, value)` for each maximal run of equal values.
fn for_each_run<T: Copy + PartialEq>(line: impl Iterator<Item = T>, mut f: impl FnMut(usize, usize, T)) {
    let mut start = 0;
    let mut current: Option<T> = None;
    let mut i = 0;
    for v in line {
        match current {
            Some(c) if c == v => {}
            Some(c) => {
                f(start, i - start, c);
                start = i;
                current = Some(v);
            }
            None => current = Some(v),
        }
        i += 1;
    }
    if let Some(c) = current {
        f(start, i - start, c);
    }
}

pub fn run_values(map: &BinaryMap) -> RunValueMap {
    let (w, h) = (map.width(), map.height());
    let mut h_run = vec![0u32; w * h];
    let mut v_run = vec![0u32; w * h];
    for y in 0..h {
        for_each_run(map.row(y).iter().copied(), |start, len, _| {
            h_run[y * w + start..y * w + start + len].fill(len as u32);
        });
    }
    for x in 0..w {
        for_each_run((0..h).map(|y| map.get(x, y)), |start, len, _| {
            for y in start..start + len {
                v_run[y * w + x] = len as u32;
            }
        });
    }
    RunValueMap {
        width: w,
        height: h,
        h_run,
        v_run,
    }
}

/// Fills white runs shorter than `thresh` that have black on both ends.
/// `get`/`set` address the line by position.
fn fill_line(len: usize, thresh: usize, get: impl Fn(usize) -> bool, mut set: impl FnMut(usize)) {
    let mut last_black: Option<usize> = None;
    for i in 0..len {
        if get(i) {
            if let Some(prev) = last_black {
                let gap = i - prev - 1;
                if gap > 0 && gap < thresh {
                    (prev + 1..i).for_each(&mut set);
                }
            }
            last_black = Some(i);
        }
    }
}

/// One horizontal smoothing pass.
pub fn fill_horizontal(map: &BinaryMap, thresh: usize) -> BinaryMap {
    let mut out = map.clone();
    let w = map.width();
    for y in 0..map.height() {
        let row = map.row(y);
        let dst = &mut out.data_mut()[y * w..(y + 1) * w];
        fill_line(w, thresh, |i| row[i], |i| dst[i] = true);
    }
    out
}

/// One vertical smoothing pass.
pub fn fill_vertical(map: &BinaryMap, thresh: usize) -> BinaryMap {
    let mut out = map.clone();
    let (w, h) = (map.width(), map.height());
    for x in 0..w {
        let src = map.data();
        let dst = out.data_mut();
        fill_line(h, thresh, |i| src[i * w + x], |i| dst[i * w + x] = true);
    }
    out
}

fn or_in_place(acc: &mut BinaryMap, other: &BinaryMap) {
    for (a, &b) in acc.data_mut().iter_mut().zip(other.data()) {
        *a |= b;
    }
}

/// Run-length smoothing.
///
/// One round fills short bounded white runs horizontally (`h_thresh`) and
/// vertically (`v_thresh`) on the same input, unions the two, then closes
/// residual horizontal gaps shorter than `final_h`. Rounds repeat until
/// nothing changes, so the result is a fixed point: smearing it again is a
/// no-op. Black pixels never turn white and runs touching the border are
/// never filled.
pub fn smear(edges: &BinaryMap, h_thresh: usize, v_thresh: usize, final_h: usize) -> BinaryMap {
    let mut current = edges.clone();
    loop {
        let mut next = fill_horizontal(&current, h_thresh);
        or_in_place(&mut next, &fill_vertical(&current, v_thresh));
        let next = fill_horizontal(&next, final_h);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Maximal all-white bands of rows and columns inside a scope.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeparatorSet {
    /// Inclusive row ranges.
    pub horizontal: Vec<(usize, usize)>,
    /// Inclusive column ranges.
    pub vertical: Vec<(usize, usize)>,
}

fn white_bands(is_white: impl Iterator<Item = (usize, bool)>, min_len: usize) -> Vec<(usize, usize)> {
    let mut bands = Vec::new();
    let mut start: Option<usize> = None;
    let mut last = 0;
    for (i, white) in is_white {
        match (white, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_len {
                    bands.push((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
        last = i;
    }
    if let Some(s) = start {
        if last + 1 - s >= min_len {
            bands.push((s, last));
        }
    }
    bands
}

/// White row bands at least `min_h_gap` thick and white column bands at
/// least `min_v_gap` wide, restricted to `scope`. Bands touching the scope
/// border (page margins) are included.
pub fn find_separators(smeared: &BinaryMap, scope: BBox, min_h_gap: usize, min_v_gap: usize) -> SeparatorSet {
    let row_white = |y: usize| !smeared.row(y)[scope.x0..=scope.x1].iter().any(|&b| b);
    let col_white = |x: usize| !(scope.y0..=scope.y1).any(|y| smeared.get(x, y));
    SeparatorSet {
        horizontal: white_bands((scope.y0..=scope.y1).map(|y| (y, row_white(y))), min_h_gap.max(1)),
        vertical: white_bands((scope.x0..=scope.x1).map(|x| (x, col_white(x))), min_v_gap.max(1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(bits: &[u8]) -> BinaryMap {
        BinaryMap::from_vec(bits.len(), 1, bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn run_values_examples() {
        let r = run_values(&row(&[0, 0, 0, 0, 0]));
        assert_eq!(r.h_run, vec![5; 5]);
        assert_eq!(r.v_run, vec![1; 5]);

        let r = run_values(&row(&[1, 0, 0, 1, 1]));
        assert_eq!(r.h_run, vec![1, 2, 2, 2, 2]);
    }

    #[test]
    fn run_values_transpose_swaps() {
        let m = BinaryMap::from_fn(7, 5, |x, y| (x * 3 + y * y) % 4 == 0);
        let a = run_values(&m);
        let b = run_values(&m.transpose());
        for y in 0..5 {
            for x in 0..7 {
                assert_eq!(a.h(x, y), b.v(y, x));
                assert_eq!(a.v(x, y), b.h(y, x));
            }
        }
    }

    #[test]
    fn smear_hand_example() {
        let out = smear(&row(&[1, 0, 0, 1, 0, 0, 0]), 3, 1, 1);
        assert_eq!(out, row(&[1, 1, 1, 1, 0, 0, 0]));
    }

    #[test]
    fn smear_leaves_empty_map_empty() {
        let m = BinaryMap::new(9, 9, false);
        assert_eq!(smear(&m, 5, 5, 5), m);
    }

    #[test]
    fn border_runs_stay_white() {
        let out = smear(&row(&[0, 0, 1, 0, 1, 0, 0]), 10, 10, 10);
        assert_eq!(out, row(&[0, 0, 1, 1, 1, 0, 0]));
    }

    #[test]
    fn gap_equal_to_threshold_is_kept() {
        let out = smear(&row(&[1, 0, 0, 0, 1]), 3, 1, 1);
        assert_eq!(out, row(&[1, 0, 0, 0, 1]));
        let out = smear(&row(&[1, 0, 0, 0, 1]), 4, 1, 1);
        assert_eq!(out, row(&[1, 1, 1, 1, 1]));
    }

    #[test]
    fn separators_examples() {
        let mut m = BinaryMap::new(8, 30, false);
        let scope = m.full_box();
        let all = find_separators(&m, scope, 1, 1);
        assert_eq!(all.horizontal, vec![(0, 29)]);
        assert_eq!(all.vertical, vec![(0, 7)]);

        for x in 0..8 {
            m.set(x, 10, true);
            m.set(x, 20, true);
        }
        let s = find_separators(&m, scope, 5, 1);
        assert_eq!(s.horizontal, vec![(0, 9), (11, 19), (21, 29)]);
        assert!(s.vertical.is_empty());

        let s = find_separators(&m, scope, 11, 1);
        assert!(s.horizontal.is_empty());
    }

    #[test]
    fn separators_respect_scope() {
        let mut m = BinaryMap::new(10, 10, false);
        m.set(0, 5, true);
        let s = find_separators(&m, BBox::new(2, 0, 9, 9), 1, 1);
        assert_eq!(s.horizontal, vec![(0, 9)]);
        assert_eq!(s.vertical, vec![(2, 9)]);
    }
}
