use crate::data::{mean, Dataset};
use crate::error::{Error, Result};

/// Standard error of the bound with the control weights held fixed:
/// `sqrt(s₁²/n₁ + Σ wᵢ² (Yᵢ − μ_w)²)`, where `s₁²` is the unbiased variance of
/// the treated outcomes and `μ_w = Σ wᵢ Yᵢ`.
///
/// `weights` follows the order of [`Dataset::control_outcomes`].
pub fn conditional_se(data: &Dataset, weights: &[f64]) -> Result<f64> {
    let n1 = data.n1();
    if n1 < 2 {
        return Err(Error::TooFewTreated(n1));
    }
    let controls = data.control_outcomes();
    if weights.len() != controls.len() {
        return Err(Error::LengthMismatch {
            what: "weights",
            got: weights.len(),
            expected: controls.len(),
        });
    }
    let treated = data.treated_outcomes();
    let m1 = mean(&treated);
    let s1 = treated.iter().map(|y| (y - m1).powi(2)).sum::<f64>() / (n1 - 1) as f64;
    let mu_w: f64 = weights.iter().zip(&controls).map(|(w, y)| w * y).sum();
    let control_term: f64 = weights
        .iter()
        .zip(&controls)
        .map(|(w, y)| w * w * (y - mu_w).powi(2))
        .sum();
    Ok((s1 / n1 as f64 + control_term).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_outcomes_have_zero_se() {
        let d = Dataset::from_arms(&[1.0, 1.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(conditional_se(&d, &[1.0 / 3.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn uniform_weights_by_hand() {
        // s1² = 0.5, n1 = 2; controls {0, 2}: μ = 1, Σ (1/4)·1 = 0.5.
        let d = Dataset::from_arms(&[1.0, 2.0], &[0.0, 2.0]).unwrap();
        let se = conditional_se(&d, &[0.5, 0.5]).unwrap();
        assert!((se - (0.25f64 + 0.5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn point_mass_drops_control_term() {
        let d = Dataset::from_arms(&[1.0, 2.0], &[0.0, 2.0, 5.0]).unwrap();
        let se = conditional_se(&d, &[0.0, 0.0, 1.0]).unwrap();
        assert!((se - 0.5).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let d = Dataset::from_arms(&[1.0], &[0.0]).unwrap();
        assert_eq!(conditional_se(&d, &[1.0]), Err(Error::TooFewTreated(1)));
        let d = Dataset::from_arms(&[1.0, 2.0], &[0.0]).unwrap();
        assert!(matches!(
            conditional_se(&d, &[0.5, 0.5]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
