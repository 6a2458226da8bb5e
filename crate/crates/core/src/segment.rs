//! Black-box extraction from the smeared map and cutting of the page into
//! candidate blocks.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::{BBox, BinaryMap, GrayImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub bbox: BBox,
    /// Smeared-map pixels inside `bbox`.
    pub black_pixel_count: usize,
    /// Edge-map pixels inside `bbox`.
    pub edge_pixel_count: usize,
}

impl Block {
    pub fn edge_density(&self) -> f64 {
        self.edge_pixel_count as f64 / self.bbox.area() as f64
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let grand = self.parent[self.parent[a as usize] as usize];
            self.parent[a as usize] = grand;
            a = grand;
        }
        a
    }

    /// The smaller root wins, which keeps label order deterministic.
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Bounding boxes of the 4-connected components of `true` pixels, in order
/// of each component's first pixel in raster order.
pub fn component_boxes(map: &BinaryMap) -> Vec<BBox> {
    let (w, h) = (map.width(), map.height());
    const NONE: u32 = u32::MAX;
    let mut labels = vec![NONE; w * h];
    let mut uf = UnionFind::new();

    for y in 0..h {
        for x in 0..w {
            if !map.get(x, y) {
                continue;
            }
            let left = if x > 0 { labels[y * w + x - 1] } else { NONE };
            let up = if y > 0 { labels[(y - 1) * w + x] } else { NONE };
            labels[y * w + x] = match (left, up) {
                (NONE, NONE) => uf.make(),
                (l, NONE) => l,
                (NONE, u) => u,
                (l, u) => {
                    uf.union(l, u);
                    l.min(u)
                }
            };
        }
    }

    let mut root_slot = vec![NONE; uf.parent.len()];
    let mut boxes: Vec<BBox> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == NONE {
                continue;
            }
            let root = uf.find(l) as usize;
            if root_slot[root] == NONE {
                root_slot[root] = boxes.len() as u32;
                boxes.push(BBox::new(x, y, x, y));
            } else {
                let b = &mut boxes[root_slot[root] as usize];
                b.x0 = b.x0.min(x);
                b.x1 = b.x1.max(x);
                b.y1 = y;
            }
        }
    }
    boxes
}

/// Unions intersecting boxes until no two boxes intersect.
pub fn merge_overlapping(mut boxes: Vec<BBox>) -> Vec<BBox> {
    loop {
        let mut merged_any = false;
        let mut out: Vec<BBox> = Vec::with_capacity(boxes.len());
        for b in boxes {
            let mut cur = b;
            // absorb every already-kept box that intersects; repeat because the
            // union can reach boxes it did not touch before
            loop {
                let before = out.len();
                out.retain(|o| {
                    if o.intersects(&cur) {
                        cur = cur.union(o);
                        false
                    } else {
                        true
                    }
                });
                if out.len() == before {
                    break;
                }
                merged_any = true;
            }
            out.push(cur);
        }
        boxes = out;
        if !merged_any {
            return boxes;
        }
    }
}

/// Candidate element blocks of a smeared map.
///
/// Components whose bounding box covers fewer than `min_area` pixels are
/// dropped as noise; the remaining boxes are merged while any two
/// intersect, then sorted by `(y0, x0)`. `edge_pixel_count` is zero until
/// [`cut_blocks`] fills it in.
pub fn connected_black_boxes(smeared: &BinaryMap, min_area: usize) -> Vec<Block> {
    let min_area = min_area.max(1);
    let kept: Vec<BBox> = component_boxes(smeared)
        .into_iter()
        .filter(|b| b.area() >= min_area)
        .collect();
    let mut merged = merge_overlapping(kept);
    merged.sort_by_key(|b| (b.y0, b.x0, b.y1, b.x1));
    merged
        .into_iter()
        .map(|bbox| Block {
            bbox,
            black_pixel_count: smeared.count_in(bbox),
            edge_pixel_count: 0,
        })
        .collect()
}

/// Pairs each block with its crop of the original page and refreshes its
/// pixel counts from `edges` and `smeared`.
pub fn cut_blocks(
    page: &GrayImage,
    edges: &BinaryMap,
    smeared: &BinaryMap,
    blocks: &[Block],
) -> Result<Vec<(Block, GrayImage)>> {
    blocks
        .iter()
        .map(|b| {
            let crop = page.crop(b.bbox)?;
            let block = Block {
                bbox: b.bbox,
                black_pixel_count: smeared.count_in(b.bbox),
                edge_pixel_count: edges.count_in(b.bbox),
            };
            Ok((block, crop))
        })
        .collect()
}
