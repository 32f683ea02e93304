use super::state::PureState;
use crate::error::{check_dim, QldpError, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// `|ψ⟩ = Σ_j √λ_j |j_A⟩ ⊗ |j_B⟩` with `λ` zero-padded to `min(dimA, dimB)`
/// and sorted descending.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub rank: usize,
    pub coefficients: Vec<f64>,
    /// Unitary whose first columns are the `|j_A⟩`.
    pub basis_a: CMatrix,
    /// Unitary whose first columns are the `|j_B⟩`.
    pub basis_b: CMatrix,
}

/// Coefficients below this are counted as zero when reporting the rank.
const RANK_TOL: f64 = 1e-14;

impl SchmidtDecomposition {
    /// Rebuilds `Σ_j √λ_j |j_A⟩ ⊗ |j_B⟩`.
    pub fn reconstruct(&self) -> Result<PureState> {
        let dim_a = self.basis_a.nrows();
        let dim_b = self.basis_b.nrows();
        let mut v = CVector::zeros(dim_a * dim_b);
        for (j, &lambda) in self.coefficients.iter().enumerate() {
            if lambda <= 0.0 {
                continue;
            }
            let a = self.basis_a.column(j).into_owned();
            let b = self.basis_b.column(j).into_owned();
            v += linalg::kron_vec(&a, &b) * c(lambda.sqrt(), 0.0);
        }
        PureState::from_vector(&v)
    }
}

/// Reshapes `ψ` into its `dimA × dimB` amplitude matrix and takes its SVD.
///
/// With `M = U Σ V†` the Schmidt vectors are `|j_A⟩ = U e_j` and
/// `|j_B⟩ = conj(V e_j)`, and `λ_j = σ_j²`.
pub fn schmidt_decompose(psi: &PureState, dim_a: usize, dim_b: usize) -> Result<SchmidtDecomposition> {
    if dim_a == 0 || dim_b == 0 {
        return Err(QldpError::InvalidArgument("subsystem dimension must be positive".into()));
    }
    check_dim(dim_a * dim_b, psi.dim())?;
    let amps = psi.amplitudes();
    let m = CMatrix::from_fn(dim_a, dim_b, |i, k| amps[i * dim_b + k]);
    let n = dim_a.min(dim_b);

    let svd = m.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let raw: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let total: f64 = raw.iter().sum();
    let mut coefficients: Vec<f64> = raw.iter().map(|x| x / total).collect();
    coefficients.resize(n, 0.0);

    let cols_a = CMatrix::from_fn(dim_a, n, |r, k| u[(r, order[k])]);
    // Row k of V† is the conjugate of column k of V, so conj(V e_k) is the
    // transpose of that row without conjugation.
    let cols_b = CMatrix::from_fn(dim_b, n, |r, k| v_t[(order[k], r)]);

    let rank = coefficients.iter().filter(|&&x| x > RANK_TOL).count();
    Ok(SchmidtDecomposition {
        rank,
        coefficients,
        basis_a: linalg::complete_basis(&cols_a),
        basis_b: linalg::complete_basis(&cols_b),
    })
}
