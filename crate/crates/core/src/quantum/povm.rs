use super::state::DensityOperator;
use super::PSD_TOL;
use crate::error::{check_dim, QldpError, Result};
use crate::linalg::{self, CMatrix};

/// Completeness and positivity tolerance for POVM elements.
pub const POVM_TOL: f64 = 1e-10;

/// Positive operator-valued measure `{M_k}` with `Σ_k M_k = I`.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| QldpError::InvalidArgument("POVM needs at least one element".into()))?;
        let dim = linalg::ensure_square(first)?;
        let mut total = CMatrix::zeros(dim, dim);
        for (k, m) in elements.iter().enumerate() {
            check_dim(dim, linalg::ensure_square(m)?)?;
            linalg::ensure_finite(m)?;
            if !linalg::is_hermitian(m, POVM_TOL) {
                return Err(QldpError::InvalidArgument(format!("POVM element {k} is not Hermitian")));
            }
            let min_eig = linalg::eigenvalues_desc(m).last().copied().unwrap_or(0.0);
            if min_eig < -POVM_TOL {
                return Err(QldpError::InvalidArgument(format!(
                    "POVM element {k} is not PSD (min eigenvalue {min_eig:e})"
                )));
            }
            total += m;
        }
        let err = linalg::max_abs(&(total - CMatrix::identity(dim, dim)));
        if err > POVM_TOL {
            return Err(QldpError::InvalidArgument(format!(
                "POVM elements do not sum to identity (error {err:e})"
            )));
        }
        Ok(Self { dim, elements })
    }

    /// Two-outcome measurement `{|φ⟩⟨φ|, I − |φ⟩⟨φ|}`.
    pub fn binary(phi: &super::PureState) -> Result<Self> {
        let p = phi.projector();
        let n = phi.dim();
        Self::new(vec![p.clone(), CMatrix::identity(n, n) - p])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }
}

/// `Pr[k|ρ] = Tr(M_k ρ)`, clamped at zero from `-1e-10`.
pub fn born_probabilities(rho: &DensityOperator, povm: &Povm) -> Result<Vec<f64>> {
    check_dim(povm.dim(), rho.dim())?;
    let r = rho.matrix();
    povm.elements()
        .iter()
        .map(|m| {
            let p = linalg::trace(&(m * r)).re;
            if p < -PSD_TOL {
                Err(QldpError::InvalidState(format!("negative outcome probability {p:e}")))
            } else {
                Ok(p.max(0.0))
            }
        })
        .collect()
}
