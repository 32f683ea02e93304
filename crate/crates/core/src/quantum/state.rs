use serde::{Deserialize, Serialize};

use super::{DENSITY_TOL, NORM_TOL, PSD_TOL};
use crate::error::{check_dim, QldpError, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};

/// Normalised state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalised to within `1e-12`.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(QldpError::InvalidState("empty state vector".into()));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QldpError::InvalidState("non-finite amplitude".into()));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(QldpError::InvalidState(format!(
                "state is not normalised: ‖ψ‖² = {norm_sqr}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalises arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(QldpError::InvalidState("cannot normalise zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn from_vector(v: &CVector) -> Result<Self> {
        Self::normalized(v.iter().copied().collect())
    }

    /// Computational basis state `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(QldpError::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn to_vector(&self) -> CVector {
        CVector::from_column_slice(&self.amplitudes)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMatrix {
        linalg::projector(&self.to_vector())
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: self.projector(),
        }
    }

    /// `⟨ψ|M|ψ⟩` (real part).
    pub fn expectation(&self, m: &CMatrix) -> Result<f64> {
        check_dim(self.dim(), m.nrows())?;
        check_dim(self.dim(), m.ncols())?;
        Ok(linalg::expectation(m, &self.to_vector()))
    }

    /// Global-phase-insensitive comparison via projectors.
    pub fn projector_distance(&self, other: &PureState) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        linalg::max_abs(&(self.projector() - other.projector()))
    }
}

/// Hermitian positive semidefinite unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        linalg::ensure_square(&matrix)?;
        linalg::ensure_finite(&matrix)?;
        let herm = linalg::hermiticity_error(&matrix);
        if herm > DENSITY_TOL {
            return Err(QldpError::InvalidState(format!(
                "density operator is not Hermitian (error {herm:e})"
            )));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(QldpError::InvalidState(format!(
                "density operator trace is {tr}, expected 1"
            )));
        }
        let min_eig = linalg::eigenvalues_desc(&matrix)
            .last()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -PSD_TOL {
            return Err(QldpError::InvalidState(format!(
                "density operator is not PSD (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { matrix })
    }

    /// Maximally mixed state `I/N`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Eigenvalues, descending, with `[-1e-10, 0)` clamped to zero.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::eigenvalues_desc(&self.matrix)
            .into_iter()
            .map(|p| if (-PSD_TOL..0.0).contains(&p) { 0.0 } else { p })
            .collect()
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            matrix: linalg::kron(&self.matrix, &other.matrix),
        }
    }
}

fn check_bipartite(dim: usize, dim_a: usize, dim_b: usize) -> Result<()> {
    if dim_a == 0 || dim_b == 0 {
        return Err(QldpError::InvalidArgument("subsystem dimension must be positive".into()));
    }
    check_dim(dim_a * dim_b, dim)
}

/// `ρ_A[i,j] = Σ_k ρ[(i,k),(j,k)]`.
pub fn partial_trace_b(rho: &DensityOperator, dim_a: usize, dim_b: usize) -> Result<DensityOperator> {
    check_bipartite(rho.dim(), dim_a, dim_b)?;
    let m = rho.matrix();
    let reduced = CMatrix::from_fn(dim_a, dim_a, |i, j| {
        (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
    });
    DensityOperator::new(linalg::hermitian_part(&reduced))
}

/// `ρ_B[k,l] = Σ_i ρ[(i,k),(i,l)]`.
pub fn partial_trace_a(rho: &DensityOperator, dim_a: usize, dim_b: usize) -> Result<DensityOperator> {
    check_bipartite(rho.dim(), dim_a, dim_b)?;
    let m = rho.matrix();
    let reduced = CMatrix::from_fn(dim_b, dim_b, |k, l| {
        (0..dim_a).map(|i| m[(i * dim_b + k, i * dim_b + l)]).sum()
    });
    DensityOperator::new(linalg::hermitian_part(&reduced))
}
