use super::{Counterfactual, CounterfactualError, Result};
use crate::classifier::LinearModel;

/// Closed-form nearest opposite-class point for a linear model.
///
/// Projects `x` onto `w·x + b = 0`, then steps `eps = max(1e-6 * |score| / ‖w‖, 1e-9)`
/// further along the normal so the result is strictly classified the other way.
/// The reported distance is `|score| / ‖w‖ + eps`.
pub fn oracle_projection(model: &LinearModel, x: &[f64]) -> Result<Counterfactual> {
    if x.len() != model.feature_count() {
        return Err(CounterfactualError::LengthMismatch(
            x.len(),
            model.feature_count(),
        ));
    }
    let norm = model.weight_norm();
    if norm == 0.0 {
        return Err(CounterfactualError::ZeroWeights);
    }
    let score = model.score_unchecked(x);
    let origin_class = model.predict_unchecked(x);
    // Class 0 origins move towards positive score, class 1 origins towards negative.
    let direction = if origin_class == 0 { 1.0 } else { -1.0 };
    let mut eps = (1e-6 * score.abs() / norm).max(1e-9);

    loop {
        let step = -score / (norm * norm);
        let push = direction * eps / norm;
        let c: Vec<f64> = x
            .iter()
            .zip(&model.weights)
            .map(|(v, w)| v + (step + push) * w)
            .collect();
        if model.predict_unchecked(&c) != origin_class {
            return Ok(Counterfactual::found(
                0,
                x.to_vec(),
                c,
                score.abs() / norm + eps,
                0,
            ));
        }
        // Rounding ate the nudge; widen it.
        eps *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perpendicular_drop() {
        let model = LinearModel::new(vec![0.0, 1.0], 0.0);
        let cf = oracle_projection(&model, &[5.0, 3.0]).unwrap();
        let c = cf.c_star.unwrap();
        assert_eq!(c[0], 5.0);
        assert!(c[1] < 0.0 && c[1] > -1e-5);
        assert!((cf.distance.unwrap() - 3.0).abs() < 1e-5);
        assert!(cf.distance.unwrap() > 3.0);
    }

    #[test]
    fn boundary_point_moves_by_epsilon() {
        let model = LinearModel::new(vec![1.0, -1.0], 0.0);
        let cf = oracle_projection(&model, &[3.0, 3.0]).unwrap();
        assert_eq!(model.predict(&[3.0, 3.0]).unwrap(), 1);
        assert_eq!(model.predict(cf.c_star.as_ref().unwrap()).unwrap(), 0);
        assert!(cf.distance.unwrap() < 1e-8);
    }

    #[test]
    fn matches_signed_distance_from_either_side() {
        let model = LinearModel::new(vec![1.0, 1.0], -2.0);
        for x in [[0.0, 0.0], [4.0, 1.0]] {
            let cf = oracle_projection(&model, &x).unwrap();
            let sbd = model.signed_boundary_distance(&x).unwrap().abs();
            assert!((cf.distance.unwrap() - sbd).abs() <= 1e-6 * sbd + 1e-12);
            assert_ne!(
                model.predict(cf.c_star.as_ref().unwrap()).unwrap(),
                model.predict(&x).unwrap()
            );
        }
        assert!(matches!(
            oracle_projection(&LinearModel::zeros(2), &[1.0, 1.0]),
            Err(CounterfactualError::ZeroWeights)
        ));
    }
}
