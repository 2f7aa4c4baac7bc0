//! Critical load level baseline: a single threshold on total system load.

use crate::error::{Error, Result};
use crate::learn::svm::{best_bias, BinarySvm};

/// Finds the threshold on total load that minimizes `Σ max(0, 1 − y·(σ·P − b))`
/// over both orientations `σ = ±1`, returning it as a one-feature classifier.
///
/// The penalty `c` only scales the objective, so it does not move the
/// optimum; it is recorded on the returned model for bookkeeping.
pub fn train_cll(total_load: &[f64], y: &[f64], c: f64) -> Result<BinarySvm> {
    if total_load.len() != y.len() {
        return Err(Error::Dimension(format!("{} loads but {} labels", total_load.len(), y.len())));
    }
    let n_pos = y.iter().filter(|&&t| t > 0.0).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::SingleClass(format!("{} rows, {n_pos} positive", y.len())));
    }
    let flipped: Vec<f64> = total_load.iter().map(|v| -v).collect();
    let (b_up, v_up) = best_bias(total_load, y);
    let (b_dn, v_dn) = best_bias(&flipped, y);
    let (sigma, b, slack) = if v_dn < v_up { (-1.0, b_dn, v_dn) } else { (1.0, b_up, v_up) };
    Ok(BinarySvm { w: vec![sigma], b, c, class_pair: (0, 1), slack_sum: slack, duality_gap: 0.0, converged: true, iterations: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_of_separable_gap() {
        let m = train_cll(&[1.0, 2.0, 4.0, 5.0], &[-1.0, -1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(m.w, vec![1.0]);
        assert!((m.b - 3.0).abs() < 1e-12);
    }

    #[test]
    fn picks_descending_orientation() {
        let m = train_cll(&[1.0, 2.0, 4.0, 5.0], &[1.0, 1.0, -1.0, -1.0], 1.0).unwrap();
        assert_eq!(m.w, vec![-1.0]);
        assert!((m.b + 3.0).abs() < 1e-12);
    }
}
