use super::schmidt::schmidt_decompose;
use super::state::{DensityOperator, PureState};
use crate::error::Result;

/// `-Σ p log p` with `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `S(ρ) = -Tr(ρ log ρ)` in nats.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    shannon_entropy(&rho.spectrum())
}

/// Entropy of either reduced state, computed as the Shannon entropy of the
/// Schmidt coefficients.
pub fn entanglement_entropy(psi: &PureState, dim_a: usize, dim_b: usize) -> Result<f64> {
    Ok(shannon_entropy(&schmidt_decompose(psi, dim_a, dim_b)?.coefficients))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_diagonal};

    #[test]
    fn pure_state_has_zero_entropy() {
        let psi = PureState::normalized(vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 0.5)]).unwrap();
        assert!(von_neumann_entropy(&psi.density()).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_entropy_is_log_dim() {
        let rho = DensityOperator::maximally_mixed(4);
        assert!((von_neumann_entropy(&rho) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_entropy_matches_scalar_formula() {
        let rho = DensityOperator::new(from_real_diagonal(&[0.8, 0.2])).unwrap();
        let expected = -0.8f64 * 0.8f64.ln() - 0.2f64 * 0.2f64.ln();
        assert!((von_neumann_entropy(&rho) - expected).abs() < 1e-12);
        assert!((expected - 0.500402).abs() < 1e-6);
    }

    #[test]
    fn entanglement_entropy_examples() {
        let sep = PureState::basis(4, 1).unwrap();
        assert!(entanglement_entropy(&sep, 2, 2).unwrap().abs() < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
        assert!((entanglement_entropy(&bell, 2, 2).unwrap() - 2f64.ln()).abs() < 1e-12);

        let skewed = PureState::new(vec![
            c(0.8f64.sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.2f64.sqrt(), 0.0),
        ])
        .unwrap();
        let oracle = von_neumann_entropy(&DensityOperator::new(from_real_diagonal(&[0.8, 0.2])).unwrap());
        assert!((entanglement_entropy(&skewed, 2, 2).unwrap() - oracle).abs() < 1e-12);
    }
}
