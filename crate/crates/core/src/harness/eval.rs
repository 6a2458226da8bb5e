//! Region-level scoring of predictions against ground truth.

use serde::{Deserialize, Serialize};

use crate::classify::{ElementLabel, Region};
use crate::harness::synth::GroundTruth;
use crate::raster::BBox;

/// Confusion counts for one class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }

    fn add(&mut self, o: &ClassCounts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub label: ElementLabel,
    pub predicted: BBox,
    pub truth: BBox,
    pub iou: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: ElementLabel,
    pub counts: ClassCounts,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
}

/// Per-class counts in report order plus the matched pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_min: f64,
    pub classes: Vec<ClassMetrics>,
    pub matches: Vec<MatchedPair>,
}

impl EvalReport {
    fn from_counts(iou_min: f64, counts: [ClassCounts; 4], matches: Vec<MatchedPair>) -> Self {
        let classes = ElementLabel::ALL
            .iter()
            .zip(counts)
            .map(|(&label, counts)| ClassMetrics {
                label,
                counts,
                precision: counts.precision(),
                recall: counts.recall(),
                accuracy: counts.accuracy(),
            })
            .collect();
        Self {
            iou_min,
            classes,
            matches,
        }
    }

    pub fn empty(iou_min: f64) -> Self {
        Self::from_counts(iou_min, [ClassCounts::default(); 4], Vec::new())
    }

    pub fn class(&self, label: ElementLabel) -> &ClassMetrics {
        self.classes.iter().find(|c| c.label == label).expect("every label is reported")
    }

    /// Sums the counts of `reports` and concatenates their matches.
    pub fn aggregate<'a>(iou_min: f64, reports: impl IntoIterator<Item = &'a EvalReport>) -> Self {
        let mut counts = [ClassCounts::default(); 4];
        let mut matches = Vec::new();
        for r in reports {
            for (acc, c) in counts.iter_mut().zip(&r.classes) {
                acc.add(&c.counts);
            }
            matches.extend(r.matches.iter().cloned());
        }
        Self::from_counts(iou_min, counts, matches)
    }

    /// Fixed-width table with one row per class, in report order.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<14} {:>9} {:>9} {:>9} {:>5} {:>5} {:>5} {:>5}\n",
            "Class", "Precision", "Recall", "Accuracy", "TP", "FP", "FN", "TN"
        );
        for c in &self.classes {
            out.push_str(&format!(
                "{:<14} {:>8.2}% {:>8.2}% {:>8.2}% {:>5} {:>5} {:>5} {:>5}\n",
                c.label.table_name(),
                100.0 * c.precision,
                100.0 * c.recall,
                100.0 * c.accuracy,
                c.counts.tp,
                c.counts.fp,
                c.counts.fn_,
                c.counts.tn
            ));
        }
        out
    }
}

/// Greedy per-class matching by descending IoU.
///
/// A prediction is a true positive when it pairs with a still-unmatched
/// truth region of the same label at IoU at least `iou_min`. For class `c`,
/// true negatives are truth regions of other classes that no `c`
/// prediction overlaps at `iou_min` or more.
pub fn match_regions(predicted: &[Region], truth: &GroundTruth, iou_min: f64) -> EvalReport {
    assert!(iou_min > 0.0 && iou_min <= 1.0, "iou_min must lie in (0, 1]");
    let mut counts = [ClassCounts::default(); 4];
    let mut matches = Vec::new();

    for (ci, &label) in ElementLabel::ALL.iter().enumerate() {
        let preds: Vec<BBox> = predicted.iter().filter(|r| r.label == label).map(|r| r.bbox).collect();
        let truths: Vec<BBox> = truth.regions.iter().filter(|r| r.label == label).map(|r| r.bbox).collect();

        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (pi, p) in preds.iter().enumerate() {
            for (ti, t) in truths.iter().enumerate() {
                let iou = p.iou(t);
                if iou >= iou_min {
                    pairs.push((iou, pi, ti));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut p_used = vec![false; preds.len()];
        let mut t_used = vec![false; truths.len()];
        for (iou, pi, ti) in pairs {
            if p_used[pi] || t_used[ti] {
                continue;
            }
            p_used[pi] = true;
            t_used[ti] = true;
            matches.push(MatchedPair {
                label,
                predicted: preds[pi],
                truth: truths[ti],
                iou,
            });
        }

        let tp = p_used.iter().filter(|&&u| u).count();
        let tn = truth
            .regions
            .iter()
            .filter(|r| r.label != label)
            .filter(|r| preds.iter().all(|p| p.iou(&r.bbox) < iou_min))
            .count();
        counts[ci] = ClassCounts {
            tp,
            fp: preds.len() - tp,
            fn_: truths.len() - tp,
            tn,
        };
    }
    EvalReport::from_counts(iou_min, counts, matches)
}
