//! Sigmoid cross-entropy summed over classes.

use crate::types::LabelVector;

/// Logistic function, split on sign so neither branch overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln σ(s) + (1-y) ln(1-σ(s))]` evaluated as `max(s,0) - s*y + ln(1+e^{-|s|})`.
#[inline]
pub fn bce_term(score: f64, label: bool) -> f64 {
    let y = if label { 1.0 } else { 0.0 };
    score.max(0.0) - score * y + (-score.abs()).exp().ln_1p()
}

pub fn bce_loss(scores: &[f64], labels: &LabelVector) -> f64 {
    debug_assert_eq!(scores.len(), labels.num_classes());
    scores
        .iter()
        .zip(labels.as_slice())
        .map(|(&s, &y)| bce_term(s, y))
        .sum()
}

/// `dL/ds_j = σ(s_j) - y_j`.
pub fn bce_grad(scores: &[f64], labels: &LabelVector) -> Vec<f64> {
    scores
        .iter()
        .zip(labels.as_slice())
        .map(|(&s, &y)| sigmoid(s) - if y { 1.0 } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use rand::Rng;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        let lo = sigmoid(-1000.0);
        assert!((0.0..=1e-300).contains(&lo));
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!(sigmoid(-700.0) > 0.0);
        let mut rng = RngState::new(3);
        for _ in 0..1000 {
            let x = rng.random_range(-50.0..50.0);
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_scores_cost_ln2_per_class() {
        let y = LabelVector::from_indices(2, &[0]).unwrap();
        let l = bce_loss(&[0.0, 0.0], &y);
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((l - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn three_class_example() {
        let y = LabelVector::from_indices(3, &[0, 2]).unwrap();
        let l = bce_loss(&[2.0, -1.0, 0.5], &y);
        assert!((l - 0.914267).abs() < 1e-6, "{l}");
        assert!((bce_term(2.0, true) - 0.126928).abs() < 1e-6);
        assert!((bce_term(-1.0, false) - 0.313262).abs() < 1e-6);
        assert!((bce_term(0.5, true) - 0.474077).abs() < 1e-6);
    }

    #[test]
    fn positive_label_loss_decreases_to_zero() {
        let mut prev = f64::INFINITY;
        for s in [-40.0, -5.0, 0.0, 5.0, 40.0, 800.0] {
            let l = bce_term(s, true);
            assert!(l.is_finite() && l >= 0.0 && l < prev);
            prev = l;
        }
        assert!(bce_term(800.0, true) < 1e-300);
        assert!((bce_term(-800.0, true) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn output_gradient() {
        let y = LabelVector::from_indices(1, &[0]).unwrap();
        assert_eq!(bce_grad(&[0.0], &y), vec![-0.5]);
    }
}
