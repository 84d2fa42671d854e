//! Classification metrics: unweighted accuracy (mean per-class recall),
//! weighted accuracy (plain accuracy), macro-F1, and the confusion matrix.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Metrics over a labeled prediction set. Confusion rows are true classes,
/// columns are predictions.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub ua: f64,
    pub wa: f64,
    pub macro_f1: f64,
    pub confusion: Tensor,
    pub precision: Tensor,
    pub recall: Tensor,
    pub f1: Tensor,
}

/// Compute UA / WA / macro-F1 and the confusion matrix.
///
/// Classes with no true instances contribute recall 0 and are still counted
/// in UA's mean. Per-class F1 is 0 whenever precision + recall is 0.
pub fn compute_metrics(
    true_labels: &[usize],
    pred_labels: &[usize],
    num_classes: usize,
) -> Result<MetricsReport> {
    if true_labels.len() != pred_labels.len() {
        return Err(Error::ShapeMismatch {
            op: "compute_metrics",
            left: vec![true_labels.len()],
            right: vec![pred_labels.len()],
        });
    }
    if true_labels.is_empty() {
        return Err(Error::InvalidArgument {
            context: "compute_metrics",
            reason: "label lists must be non-empty".into(),
        });
    }
    if num_classes == 0 {
        return Err(Error::InvalidArgument {
            context: "compute_metrics",
            reason: "num_classes must be positive".into(),
        });
    }
    for &l in true_labels.iter().chain(pred_labels) {
        if l >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: l,
                vocab: num_classes,
            });
        }
    }

    let c = num_classes;
    let mut confusion = Tensor::zeros(&[c, c]);
    for (&t, &p) in true_labels.iter().zip(pred_labels) {
        let v = confusion.at2(t, p) + 1.0;
        confusion.set2(t, p, v);
    }

    let total = true_labels.len() as f64;
    let mut correct = 0.0;
    for k in 0..c {
        correct += confusion.at2(k, k);
    }
    let wa = correct / total;

    let mut precision = Tensor::zeros(&[c]);
    let mut recall = Tensor::zeros(&[c]);
    let mut f1 = Tensor::zeros(&[c]);
    let mut ua_acc = 0.0;
    let mut f1_acc = 0.0;
    for k in 0..c {
        let tp = confusion.at2(k, k);
        let true_count: f64 = (0..c).map(|j| confusion.at2(k, j)).sum();
        let pred_count: f64 = (0..c).map(|i| confusion.at2(i, k)).sum();
        let r = if true_count > 0.0 { tp / true_count } else { 0.0 };
        let p = if pred_count > 0.0 { tp / pred_count } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        precision.data_mut()[k] = p;
        recall.data_mut()[k] = r;
        f1.data_mut()[k] = f;
        ua_acc += r;
        f1_acc += f;
    }

    Ok(MetricsReport {
        ua: ua_acc / c as f64,
        wa,
        macro_f1: f1_acc / c as f64,
        confusion,
        precision,
        recall,
        f1,
    })
}

impl MetricsReport {
    pub fn num_classes(&self) -> usize {
        self.confusion.dims()[0]
    }

    /// Line-oriented `key=value` rendering. The confusion matrix is rows
    /// joined by `;`, entries by `,`.
    pub fn to_text(&self) -> String {
        let c = self.num_classes();
        let confusion_rows: Vec<String> = (0..c)
            .map(|i| {
                (0..c)
                    .map(|j| format!("{}", self.confusion.at2(i, j) as u64))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        format!(
            "ua={}\nwa={}\nmacro_f1={}\nconfusion={}\n",
            self.ua,
            self.wa,
            self.macro_f1,
            confusion_rows.join(";")
        )
    }

    /// JSON rendering with documented keys: `ua`, `wa`, `macro_f1`,
    /// `confusion`, `per_class`.
    pub fn to_json(&self) -> String {
        let c = self.num_classes();
        let confusion: Vec<Vec<u64>> = (0..c)
            .map(|i| (0..c).map(|j| self.confusion.at2(i, j) as u64).collect())
            .collect();
        let doc = serde_json::json!({
            "ua": self.ua,
            "wa": self.wa,
            "macro_f1": self.macro_f1,
            "confusion": confusion,
            "per_class": {
                "precision": self.precision.data(),
                "recall": self.recall.data(),
                "f1": self.f1.data(),
            },
        });
        serde_json::to_string_pretty(&doc).expect("metrics document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn perfect_predictions() {
        let labels = vec![0, 1, 2, 1, 0, 2];
        let m = compute_metrics(&labels, &labels, 3).unwrap();
        assert_eq!(m.ua, 1.0);
        assert_eq!(m.wa, 1.0);
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn hand_computed_fixture() {
        // confusion [[1,1],[0,2]]: WA = 3/4, UA = (1/2 + 1)/2 = 3/4,
        // macro-F1 = (2/3 + 4/5)/2.
        let t = vec![0, 0, 1, 1];
        let p = vec![0, 1, 1, 1];
        let m = compute_metrics(&t, &p, 2).unwrap();
        assert!((m.wa - 0.75).abs() <= 1e-12);
        assert!((m.ua - 0.75).abs() <= 1e-12);
        let want_f1 = (2.0 / 3.0 + 0.8) / 2.0;
        assert!((m.macro_f1 - want_f1).abs() <= 1e-12);
        assert_eq!(m.confusion.data(), &[1.0, 1.0, 0.0, 2.0]);
    }

    #[test]
    fn total_miss_is_zero() {
        let m = compute_metrics(&[0, 1], &[1, 0], 2).unwrap();
        assert_eq!(m.ua, 0.0);
        assert_eq!(m.wa, 0.0);
        assert_eq!(m.macro_f1, 0.0);
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = Rng::seed_from_u64(10);
        let n = 40;
        let t: Vec<usize> = (0..n).map(|_| rng.below(3)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.below(3)).collect();
        let base = compute_metrics(&t, &p, 3).unwrap();
        let mut idx: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut idx);
        let ts: Vec<usize> = idx.iter().map(|&i| t[i]).collect();
        let ps: Vec<usize> = idx.iter().map(|&i| p[i]).collect();
        let shuffled = compute_metrics(&ts, &ps, 3).unwrap();
        assert_eq!(base.ua, shuffled.ua);
        assert_eq!(base.wa, shuffled.wa);
        assert_eq!(base.macro_f1, shuffled.macro_f1);
    }

    #[test]
    fn balanced_inputs_make_ua_equal_wa() {
        let mut rng = Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c = 2 + rng.below(4);
            let per = 5 + rng.below(5);
            let mut t = Vec::new();
            let mut p = Vec::new();
            for class in 0..c {
                for _ in 0..per {
                    t.push(class);
                    p.push(rng.below(c));
                }
            }
            let m = compute_metrics(&t, &p, c).unwrap();
            assert!(
                (m.ua - m.wa).abs() <= 1e-12,
                "balanced UA {} != WA {}",
                m.ua,
                m.wa
            );
        }
    }

    #[test]
    fn confusion_row_sums_match_true_counts_and_metrics_in_range() {
        let mut rng = Rng::seed_from_u64(12);
        let n = 60;
        let c = 4;
        let t: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
        let m = compute_metrics(&t, &p, c).unwrap();
        for k in 0..c {
            let row_sum: f64 = (0..c).map(|j| m.confusion.at2(k, j)).sum();
            let count = t.iter().filter(|&&x| x == k).count() as f64;
            assert_eq!(row_sum, count);
        }
        for v in [m.ua, m.wa, m.macro_f1] {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn absent_class_counts_as_zero_recall() {
        // Class 2 never appears in truth; UA averages over all 3 classes.
        let m = compute_metrics(&[0, 1], &[0, 1], 3).unwrap();
        assert!((m.ua - 2.0 / 3.0).abs() <= 1e-12);
        assert_eq!(m.wa, 1.0);
    }

    #[test]
    fn input_validation() {
        assert!(compute_metrics(&[0], &[0, 1], 2).is_err());
        assert!(compute_metrics(&[], &[], 2).is_err());
        assert!(compute_metrics(&[2], &[0], 2).is_err());
        assert!(compute_metrics(&[0], &[5], 2).is_err());
    }

    #[test]
    fn text_rendering_has_documented_keys() {
        let m = compute_metrics(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        let text = m.to_text();
        assert!(text.contains("ua=0.75"));
        assert!(text.contains("wa=0.75"));
        assert!(text.contains("macro_f1="));
        assert!(text.contains("confusion=1,1;0,2"));
        let json = m.to_json();
        for key in ["\"ua\"", "\"wa\"", "\"macro_f1\"", "\"confusion\"", "\"per_class\""] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
    }
}
