use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::entropy::shannon_entropy;
use super::state::PureState;
use crate::error::{QldpError, Result};
use crate::linalg::{self, c, CVector};

/// Random point on the probability simplex.
///
/// The Dirichlet concentration is itself drawn log-uniformly from
/// `[0.05, 2]` so that samples range from nearly-pure to nearly-uniform.
pub fn random_simplex_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let concentration = (rng.random_range(0.05f64.ln()..2f64.ln())).exp();
    let gamma = Gamma::new(concentration, 1.0).expect("positive shape");
    let mut draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if !(total > 0.0) {
        let mut e = vec![0.0; n];
        e[rng.random_range(0..n)] = 1.0;
        return e;
    }
    draws.iter_mut().for_each(|x| *x /= total);
    draws
}

/// Moves `λ` along the segment toward the uniform vector just far enough to
/// reach `H(λ) ≥ s`. Returns `λ` unchanged if it is already feasible.
///
/// `H` is concave along the segment and maximal at the uniform end, so the
/// crossing point is unique and bisection lands on the feasible side.
pub fn mix_to_entropy(lambda: &[f64], s: f64) -> Vec<f64> {
    let n = lambda.len();
    let max_entropy = (n as f64).ln();
    if shannon_entropy(lambda) >= s {
        return lambda.to_vec();
    }
    let uniform = 1.0 / n as f64;
    let mix = |t: f64| -> Vec<f64> { lambda.iter().map(|&l| (1.0 - t) * l + t * uniform).collect() };
    if s >= max_entropy - 1e-15 {
        return vec![uniform; n];
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shannon_entropy(&mix(mid)) >= s {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    mix(hi)
}

/// Draws a pure bipartite state in `ℍ_s`, the set of states whose
/// entanglement entropy is at least `s`.
///
/// Schmidt coefficients are sampled on the simplex and mixed toward uniform
/// until the entropy constraint holds; the Schmidt bases are Haar-random.
pub fn sample_state_in_domain<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    s: f64,
    rng: &mut R,
) -> Result<PureState> {
    if dim_a == 0 || dim_b == 0 {
        return Err(QldpError::InvalidArgument("subsystem dimension must be positive".into()));
    }
    let n = dim_a.min(dim_b);
    let max_entropy = (n as f64).ln();
    if !(0.0..=max_entropy + 1e-12).contains(&s) {
        return Err(QldpError::Infeasible { s, max: max_entropy });
    }
    let lambda = mix_to_entropy(&random_simplex_point(n, rng), s.min(max_entropy));
    let ua = linalg::haar_unitary(dim_a, rng);
    let ub = linalg::haar_unitary(dim_b, rng);
    let mut v = CVector::zeros(dim_a * dim_b);
    for (j, &l) in lambda.iter().enumerate() {
        let a = ua.column(j).into_owned();
        let b = ub.column(j).into_owned();
        v += linalg::kron_vec(&a, &b) * c(l.sqrt(), 0.0);
    }
    PureState::from_vector(&v)
}

/// Seeded convenience wrapper around [`sample_state_in_domain`].
pub fn sample_state_with_entropy(dim_a: usize, dim_b: usize, s: f64, seed: u64) -> Result<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_state_in_domain(dim_a, dim_b, s, &mut rng)
}
