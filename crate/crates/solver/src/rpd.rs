use crate::SolveError;

/// Relative percentage deviation of an objective from a reference value:
/// `100 * (z - z_best) / z_best`.
pub fn compute_rpd(objective: f64, reference: f64) -> Result<f64, SolveError> {
    if !(reference > 0.0) {
        return Err(SolveError::Config(format!(
            "reference objective must be positive, got {reference}"
        )));
    }
    Ok(100.0 * (objective - reference) / reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_objective_is_zero_percent() {
        assert_eq!(compute_rpd(577.0, 577.0).unwrap(), 0.0);
    }

    #[test]
    fn ten_percent_example() {
        assert!((compute_rpd(11.0, 10.0).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_reference_is_rejected() {
        assert!(compute_rpd(5.0, 0.0).is_err());
        assert!(compute_rpd(5.0, -3.0).is_err());
    }
}
