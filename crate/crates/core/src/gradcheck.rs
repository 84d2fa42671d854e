//! Central finite differences, the oracle every analytic gradient in the
//! crate is checked against.

use crate::error::{Error, Result};
use crate::losses::{
    cross_entropy, segment_kl_loss, KlDirection, LabelSequence, Segment, SegmentedLogits,
};
use crate::rng::Rng;
use crate::similarity::{pdist_loss, EmbeddingPair};
use crate::tensor::Tensor;

/// Default perturbation step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Relative tolerance every analytic gradient must meet.
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// Denominator floor for the relative-error metric: entries smaller than
/// this are compared absolutely at `tol * REL_FLOOR`.
pub const REL_FLOOR: f64 = 1e-3;

/// Central-difference gradient of a scalar function of a tensor:
/// `(f(x + h e_i) - f(x - h e_i)) / 2h` per entry.
pub fn finite_diff_grad<F>(f: F, x: &Tensor, h: f64) -> Result<Tensor>
where
    F: Fn(&Tensor) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument {
            context: "finite_diff_grad",
            reason: format!("step h must be positive, got {h}"),
        });
    }
    let mut grad = Tensor::zeros(x.dims());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let fp = f(&probe)?;
        probe.data_mut()[i] = orig - h;
        let fm = f(&probe)?;
        probe.data_mut()[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite {
                context: "finite difference evaluation",
                index: i,
            });
        }
        grad.data_mut()[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Worst per-entry relative error between two gradients. The denominator is
/// floored so that near-zero entries degrade to an absolute comparison
/// instead of dividing by zero.
pub fn max_rel_error(analytic: &Tensor, numeric: &Tensor, floor: f64) -> f64 {
    assert_eq!(analytic.dims(), numeric.dims(), "gradient shape mismatch");
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Outcome of the finite-difference check for one loss operation.
#[derive(Debug, Clone)]
pub struct OpGradReport {
    pub op: &'static str,
    pub trials: usize,
    pub max_rel_err: f64,
    pub worst_shape: Vec<usize>,
    pub pass: bool,
}

impl std::fmt::Display for OpGradReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<22} trials={:<3} max_rel_err={:.3e} worst_shape={:?} {}",
            self.op,
            self.trials,
            self.max_rel_err,
            self.worst_shape,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn random_weights(rng: &mut Rng, len: usize) -> crate::attention::TokenWeights {
    let mut raw = Tensor::zeros(&[len]);
    for v in raw.data_mut() {
        *v = 0.05 + rng.next_f64();
    }
    crate::attention::normalize_weights(&raw).expect("positive weights")
}

fn check_pdist(rng: &mut Rng, trials: usize) -> Result<OpGradReport> {
    let mut worst = 0.0;
    let mut worst_shape = Vec::new();
    for _ in 0..trials {
        let rows = 3 + rng.below(8);
        let et = 2 + rng.below(7);
        let es = 2 + rng.below(7);
        let teacher = rng.normal_tensor(&[rows, et], 1.0);
        let student = rng.normal_tensor(&[rows, es], 1.0);
        let w = random_weights(rng, rows);

        let pair = EmbeddingPair::new(&teacher, &student)?;
        let (_, analytic) = pdist_loss(&pair, &w)?;
        let numeric = finite_diff_grad(
            |s| {
                let pair = EmbeddingPair::new(&teacher, s)?;
                Ok(pdist_loss(&pair, &w)?.0)
            },
            &student,
            DEFAULT_FD_STEP,
        )?;
        let err = max_rel_error(&analytic, &numeric, REL_FLOOR);
        if err > worst {
            worst = err;
            worst_shape = vec![rows, et, es];
        }
    }
    Ok(OpGradReport {
        op: "pdist_loss",
        trials,
        max_rel_err: worst,
        worst_shape,
        pass: worst < GRAD_TOLERANCE,
    })
}

fn random_segmented(rng: &mut Rng, spans: crate::attention::SegmentSpans, v: usize) -> SegmentedLogits {
    let logits = rng.normal_tensor(&[spans.total(), v], 2.0);
    SegmentedLogits::new(logits, spans).expect("valid segmented logits")
}

fn check_segment_kl(
    rng: &mut Rng,
    trials: usize,
    direction: KlDirection,
) -> Result<OpGradReport> {
    let mut worst = 0.0;
    let mut worst_shape = Vec::new();
    for trial in 0..trials {
        let la = 1 + rng.below(4);
        let lp = rng.below(3);
        let lr = 1 + rng.below(3);
        let v = 3 + rng.below(6);
        let t = [0.7, 1.0, 2.0, 4.0][rng.below(4)];
        let spans = crate::attention::SegmentSpans::new(la, lp, lr)?;
        let segment = if trial % 2 == 0 {
            Segment::Audio
        } else {
            Segment::Response
        };
        let teacher = random_segmented(rng, spans, v);
        let student = random_segmented(rng, spans, v);

        let (_, analytic) = segment_kl_loss(&teacher, &student, segment, t, direction)?;
        let range = spans.segment_range(segment);
        let seg_rows: Vec<&[f64]> = range.clone().map(|i| student.logits().row(i)).collect();
        let seg = Tensor::from_rows(&seg_rows)?;
        let numeric = finite_diff_grad(
            |x| {
                let mut patched = student.logits().clone();
                for (k, i) in range.clone().enumerate() {
                    patched.row_mut(i).copy_from_slice(x.row(k));
                }
                let patched = SegmentedLogits::new(patched, spans)?;
                Ok(segment_kl_loss(&teacher, &patched, segment, t, direction)?.0)
            },
            &seg,
            DEFAULT_FD_STEP,
        )?;
        let err = max_rel_error(&analytic, &numeric, REL_FLOOR);
        if err > worst {
            worst = err;
            worst_shape = vec![la, lp, lr, v];
        }
    }
    Ok(OpGradReport {
        op: match direction {
            KlDirection::Forward => "segment_kl (forward)",
            KlDirection::Reverse => "segment_kl (reverse)",
        },
        trials,
        max_rel_err: worst,
        worst_shape,
        pass: worst < GRAD_TOLERANCE,
    })
}

fn check_cross_entropy(rng: &mut Rng, trials: usize) -> Result<OpGradReport> {
    let mut worst = 0.0;
    let mut worst_shape = Vec::new();
    for _ in 0..trials {
        let la = 1 + rng.below(3);
        let lp = rng.below(3);
        let lr = 1 + rng.below(4);
        let v = 3 + rng.below(6);
        let spans = crate::attention::SegmentSpans::new(la, lp, lr)?;
        let student = random_segmented(rng, spans, v);
        let ids: Vec<usize> = (0..lr).map(|_| rng.below(v)).collect();
        let labels = LabelSequence::new(ids, v)?;

        let (_, analytic) = cross_entropy(&student, &labels)?;
        let range = spans.segment_range(Segment::Response);
        let seg_rows: Vec<&[f64]> = range.clone().map(|i| student.logits().row(i)).collect();
        let seg = Tensor::from_rows(&seg_rows)?;
        let numeric = finite_diff_grad(
            |x| {
                let mut patched = student.logits().clone();
                for (k, i) in range.clone().enumerate() {
                    patched.row_mut(i).copy_from_slice(x.row(k));
                }
                let patched = SegmentedLogits::new(patched, spans)?;
                Ok(cross_entropy(&patched, &labels)?.0)
            },
            &seg,
            DEFAULT_FD_STEP,
        )?;
        let err = max_rel_error(&analytic, &numeric, REL_FLOOR);
        if err > worst {
            worst = err;
            worst_shape = vec![lr, v];
        }
    }
    Ok(OpGradReport {
        op: "cross_entropy",
        trials,
        max_rel_err: worst,
        worst_shape,
        pass: worst < GRAD_TOLERANCE,
    })
}

/// Run the finite-difference check for every loss operation with an
/// analytic gradient. `trials` random shapes per operation.
pub fn run_gradcheck(seed: u64, trials: usize) -> Result<Vec<OpGradReport>> {
    if trials == 0 {
        return Err(Error::InvalidArgument {
            context: "gradcheck",
            reason: "trials must be at least 1".into(),
        });
    }
    let mut rng = Rng::seed_from_u64(seed);
    Ok(vec![
        check_pdist(&mut rng, trials)?,
        check_segment_kl(&mut rng, trials, KlDirection::Forward)?,
        check_segment_kl(&mut rng, trials, KlDirection::Reverse)?,
        check_cross_entropy(&mut rng, trials)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_exact() {
        let x = Tensor::new(&[2], vec![1.0, 2.0]).unwrap();
        let grad = finite_diff_grad(
            |t| Ok(t.data().iter().map(|v| v * v).sum()),
            &x,
            DEFAULT_FD_STEP,
        )
        .unwrap();
        assert!((grad.data()[0] - 2.0).abs() < 1e-6);
        assert!((grad.data()[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let x = Tensor::new(&[3], vec![0.5, -1.0, 2.0]).unwrap();
        let grad = finite_diff_grad(|_| Ok(3.25), &x, DEFAULT_FD_STEP).unwrap();
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn quadratic_form_matches_analytic_within_1e8() {
        // f(x) = x^T M x with symmetric M has gradient 2 M x; central
        // differences evaluate quadratics exactly up to rounding.
        let mut rng = Rng::seed_from_u64(21);
        let raw = rng.normal_tensor(&[4, 4], 1.0);
        let m = raw.add(&raw.transpose()).unwrap().scaled(0.5);
        let x = rng.normal_tensor(&[4], 1.0);
        let f = |v: &Tensor| {
            let mut acc = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    acc += v.data()[i] * m.at2(i, j) * v.data()[j];
                }
            }
            Ok(acc)
        };
        let numeric = finite_diff_grad(f, &x, DEFAULT_FD_STEP).unwrap();
        for i in 0..4 {
            let mut analytic = 0.0;
            for j in 0..4 {
                analytic += 2.0 * m.at2(i, j) * x.data()[j];
            }
            assert!(
                (numeric.data()[i] - analytic).abs() < 1e-8,
                "entry {i}: {} vs {}",
                numeric.data()[i],
                analytic
            );
        }
    }

    #[test]
    fn non_finite_evaluation_names_the_index() {
        let x = Tensor::new(&[2], vec![0.0, 0.0]).unwrap();
        let err = finite_diff_grad(
            |t| {
                if t.data()[1] > 0.0 {
                    Ok(f64::NAN)
                } else {
                    Ok(0.0)
                }
            },
            &x,
            DEFAULT_FD_STEP,
        )
        .unwrap_err();
        assert!(err.to_string().contains("index 1"), "{err}");
    }

    #[test]
    fn rejects_non_positive_step() {
        let x = Tensor::new(&[1], vec![0.0]).unwrap();
        assert!(finite_diff_grad(|_| Ok(0.0), &x, 0.0).is_err());
        assert!(finite_diff_grad(|_| Ok(0.0), &x, -1.0).is_err());
    }

    #[test]
    fn gradcheck_rejects_zero_trials() {
        assert!(run_gradcheck(0, 0).is_err());
    }

    #[test]
    fn perturbed_gradient_is_caught() {
        // A deliberate +1e-2 bias on one analytic entry must trip the check.
        let mut rng = Rng::seed_from_u64(3);
        let teacher = rng.normal_tensor(&[6, 4], 1.0);
        let student = rng.normal_tensor(&[6, 3], 1.0);
        let w = crate::attention::TokenWeights::uniform(6);
        let pair = EmbeddingPair::new(&teacher, &student).unwrap();
        let (_, mut analytic) = pdist_loss(&pair, &w).unwrap();
        analytic.data_mut()[0] += 1e-2;
        let numeric = finite_diff_grad(
            |s| {
                let pair = EmbeddingPair::new(&teacher, s)?;
                Ok(pdist_loss(&pair, &w)?.0)
            },
            &student,
            DEFAULT_FD_STEP,
        )
        .unwrap();
        let err = max_rel_error(&analytic, &numeric, REL_FLOOR);
        assert!(err > GRAD_TOLERANCE, "bias not caught: {err}");
    }
}
