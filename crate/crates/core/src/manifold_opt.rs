//! Riemannian optimisation of the privacy energy
//! `F(λ, U_A, U_B) = Tr(Λ^{1/2} Ã Λ^{1/2} B̃)` with `Ã = U_A K_a U_A†` and
//! `B̃ = U_B K_b U_B†`, over Schmidt weights with `H(λ) ≥ s` and two unitaries.
//!
//! The state behind a point is `Σ_j √λ_j (U_A† e_j) ⊗ (U_B^T e_j)`; with that
//! basis convention `F = ⟨ψ|K_a ⊗ K_b^T|ψ⟩`. `K_b^T` has the spectrum of
//! `K_b`, so extremal values over all points coincide with those of
//! `K_a ⊗ K_b`.
//!
//! Internally the weights are parametrised as `λ = softmax(θ)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, QldpError, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::privacy_energy::Extremum;
use crate::quantum::{mix_to_entropy, random_simplex_point, shannon_entropy, PureState};

/// Floor applied to `λ_j` where the `1/√λ_j` factor of `∂F/∂λ` appears.
pub const LAMBDA_FLOOR: f64 = 1e-14;
/// Coordinates with `λ_j` at or below this count as boundary in KKT fits.
pub const BOUNDARY_TOL: f64 = 1e-12;

const ARMIJO_C: f64 = 1e-4;
const CONTRACTION: f64 = 0.5;
const MIN_STEP: f64 = 1e-14;
const ACTIVE_TOL: f64 = 1e-10;
const KKT_ACTIVE_TOL: f64 = 1e-8;

/// `(λ, U_A, U_B)` with `λ` on the simplex and both matrices unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    pub lambda: Vec<f64>,
    pub unitary_a: CMatrix,
    pub unitary_b: CMatrix,
}

impl ManifoldPoint {
    pub fn new(lambda: Vec<f64>, unitary_a: CMatrix, unitary_b: CMatrix) -> Result<Self> {
        let n = lambda.len();
        if n == 0 {
            return Err(QldpError::InvalidArgument("empty weight vector".into()));
        }
        check_dim(n, linalg::ensure_square(&unitary_a)?)?;
        check_dim(n, linalg::ensure_square(&unitary_b)?)?;
        if lambda.iter().any(|&l| !(l >= -BOUNDARY_TOL)) || (lambda.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(QldpError::InvalidArgument("weights are not on the simplex".into()));
        }
        for u in [&unitary_a, &unitary_b] {
            if linalg::unitarity_error(u) > 1e-10 {
                return Err(QldpError::InvalidArgument("matrix is not unitary".into()));
            }
        }
        Ok(Self {
            lambda: lambda.into_iter().map(|l| l.max(0.0)).collect(),
            unitary_a,
            unitary_b,
        })
    }

    /// Identity unitaries with the given weights.
    pub fn aligned(lambda: Vec<f64>) -> Result<Self> {
        let n = lambda.len();
        Self::new(lambda, CMatrix::identity(n, n), CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.lambda)
    }
}

fn sqrt_weights(lambda: &[f64], floor: f64) -> Vec<f64> {
    lambda.iter().map(|&l| l.max(floor).sqrt()).collect()
}

fn rotate(u: &CMatrix, k: &CMatrix) -> CMatrix {
    u * k * u.adjoint()
}

/// `D M D` for diagonal `D = diag(d)`.
fn sandwich(d: &[f64], m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (d[i] * d[j]))
}

/// `Tr(D Ã D B̃)` for real diagonal `D`.
fn energy_with_amplitudes(x: &[f64], a: &CMatrix, b: &CMatrix) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            total += x[j] * x[k] * (a[(j, k)] * b[(k, j)]).re;
        }
    }
    total
}

fn check_observables(k_a: &CMatrix, k_b: &CMatrix, n: usize) -> Result<()> {
    check_dim(n, linalg::ensure_square(k_a)?)?;
    check_dim(n, linalg::ensure_square(k_b)?)?;
    Ok(())
}

/// `Tr(Λ^{1/2} U_A K_a U_A† Λ^{1/2} U_B K_b U_B†)`.
pub fn objective(k_a: &CMatrix, k_b: &CMatrix, point: &ManifoldPoint) -> Result<f64> {
    check_observables(k_a, k_b, point.dim())?;
    Ok(objective_unchecked(k_a, k_b, &point.lambda, &point.unitary_a, &point.unitary_b))
}

/// The same formula for arbitrary (not necessarily unitary) matrices and
/// non-negative weights; used for finite-difference checks.
pub fn objective_unchecked(k_a: &CMatrix, k_b: &CMatrix, lambda: &[f64], u_a: &CMatrix, u_b: &CMatrix) -> f64 {
    let x = sqrt_weights(lambda, 0.0);
    energy_with_amplitudes(&x, &rotate(u_a, k_a), &rotate(u_b, k_b))
}

/// Euclidean gradients with respect to the real inner product `Re Tr(G† dU)`.
#[derive(Debug, Clone)]
pub struct EuclideanGradients {
    pub grad_ua: CMatrix,
    pub grad_ub: CMatrix,
    pub grad_lambda: Vec<f64>,
}

/// `∇_{U_A}F = 2Λ^{1/2}B̃Λ^{1/2}U_A K_a`, `∇_{U_B}F = 2Λ^{1/2}ÃΛ^{1/2}U_B K_b`
/// and `∂F/∂λ_j = (ÃΛ^{1/2}B̃ + B̃Λ^{1/2}Ã)_jj / (2√λ_j)`, with `λ` floored at
/// [`LAMBDA_FLOOR`] in the `λ`-gradient.
pub fn euclidean_gradients(k_a: &CMatrix, k_b: &CMatrix, point: &ManifoldPoint) -> Result<EuclideanGradients> {
    check_observables(k_a, k_b, point.dim())?;
    Ok(euclidean_gradients_unchecked(k_a, k_b, &point.lambda, &point.unitary_a, &point.unitary_b))
}

pub fn euclidean_gradients_unchecked(
    k_a: &CMatrix,
    k_b: &CMatrix,
    lambda: &[f64],
    u_a: &CMatrix,
    u_b: &CMatrix,
) -> EuclideanGradients {
    let a = rotate(u_a, k_a);
    let b = rotate(u_b, k_b);
    let x = sqrt_weights(lambda, 0.0);
    let two = c(2.0, 0.0);
    let grad_ua = sandwich(&x, &b) * u_a * k_a * two;
    let grad_ub = sandwich(&x, &a) * u_b * k_b * two;

    let xf = sqrt_weights(lambda, LAMBDA_FLOOR);
    let n = lambda.len();
    let grad_lambda = (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for k in 0..n {
                acc += xf[k] * ((a[(j, k)] * b[(k, j)]).re + (b[(j, k)] * a[(k, j)]).re);
            }
            acc / (2.0 * xf[j])
        })
        .collect();
    EuclideanGradients {
        grad_ua,
        grad_ub,
        grad_lambda,
    }
}

/// Projection onto the tangent space of the unitary group at `U`:
/// `U · skew(U† G)`.
pub fn riemannian_gradient(u: &CMatrix, euclid: &CMatrix) -> CMatrix {
    u * linalg::skew(&(u.adjoint() * euclid))
}

/// Optimiser settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 2000,
            tol: 1e-8,
            seed: 42,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 || !(self.tol > 0.0) {
            return Err(QldpError::Config(
                "optimizer restarts, max_iters and tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Multipliers and residuals of the first-order optimality system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    pub grad_ua_norm: f64,
    pub grad_ub_norm: f64,
    pub stationarity_lambda: f64,
    pub primal_feas: f64,
    pub dual_feas: f64,
    pub compl_slack: f64,
    pub nu: f64,
    pub xi: f64,
    pub eta: Vec<f64>,
}

impl KktResidual {
    /// Largest of the residual fields.
    pub fn max_residual(&self) -> f64 {
        [
            self.grad_ua_norm,
            self.grad_ub_norm,
            self.stationarity_lambda,
            self.primal_feas,
            self.dual_feas,
            self.compl_slack,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Fits `(ν, ξ, η)` by least squares and reports the residuals.
///
/// Interior coordinates (`λ_j > 1e-12`) satisfy
/// `∂F/∂λ_j = ν ± ξ(1 + log λ_j)` (plus for max, minus for min); boundary
/// coordinates are checked through `η_j ≥ 0` and `η_j λ_j = 0`.
pub fn kkt_residuals(
    k_a: &CMatrix,
    k_b: &CMatrix,
    point: &ManifoldPoint,
    s: f64,
    direction: Extremum,
) -> Result<KktResidual> {
    let grads = euclidean_gradients(k_a, k_b, point)?;
    let grad_ua_norm = riemannian_gradient(&point.unitary_a, &grads.grad_ua).norm();
    let grad_ub_norm = riemannian_gradient(&point.unitary_b, &grads.grad_ub).norm();
    let sign = match direction {
        Extremum::Max => 1.0,
        Extremum::Min => -1.0,
    };
    let lambda = &point.lambda;
    let g = &grads.grad_lambda;
    let entropy = shannon_entropy(lambda);
    let interior: Vec<usize> = (0..lambda.len()).filter(|&j| lambda[j] > BOUNDARY_TOL).collect();
    let logs: Vec<f64> = interior.iter().map(|&j| 1.0 + lambda[j].ln()).collect();
    let gi: Vec<f64> = interior.iter().map(|&j| g[j]).collect();
    let m = interior.len() as f64;

    let active = entropy - s <= KKT_ACTIVE_TOL;
    let log_spread = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_c = logs.iter().sum::<f64>() / m;
    let mean_g = gi.iter().sum::<f64>() / m;
    let (nu, xi) = if active && log_spread >= 1e-12 {
        let cov: f64 = logs.iter().zip(&gi).map(|(c, g)| (c - mean_c) * (g - mean_g)).sum();
        let var: f64 = logs.iter().map(|c| (c - mean_c).powi(2)).sum();
        let xi = sign * cov / var;
        (mean_g - sign * xi * mean_c, xi)
    } else {
        (mean_g, 0.0)
    };
    let stationarity_lambda = logs
        .iter()
        .zip(&gi)
        .map(|(c, g)| (g - nu - sign * xi * c).abs())
        .fold(0.0, f64::max);
    let eta: Vec<f64> = (0..lambda.len())
        .map(|j| {
            if lambda[j] > BOUNDARY_TOL {
                0.0
            } else {
                sign * (nu - g[j])
            }
        })
        .collect();
    let min_eta = eta.iter().cloned().fold(0.0, f64::min);
    let primal_feas = (s - entropy).max(0.0) + (lambda.iter().sum::<f64>() - 1.0).abs();
    let dual_feas = 0.0f64.max(-xi).max(-min_eta);
    let compl_slack = (xi * (entropy - s)).abs()
        + eta
            .iter()
            .zip(lambda)
            .map(|(e, l)| (e * l).abs())
            .fold(0.0, f64::max);
    Ok(KktResidual {
        grad_ua_norm,
        grad_ub_norm,
        stationarity_lambda,
        primal_feas,
        dual_feas,
        compl_slack,
        nu,
        xi,
        eta,
    })
}

/// `‖Λ^{1/2}B̃Λ^{1/2}Ã − ÃΛ^{1/2}B̃Λ^{1/2}‖_F`; vanishes when the `U_A`
/// gradient does.
pub fn commutation_residual(k_a: &CMatrix, k_b: &CMatrix, point: &ManifoldPoint) -> Result<f64> {
    check_observables(k_a, k_b, point.dim())?;
    let a = rotate(&point.unitary_a, k_a);
    let b = rotate(&point.unitary_b, k_b);
    let x = sqrt_weights(&point.lambda, 0.0);
    let m = sandwich(&x, &b);
    Ok((&m * &a - &a * &m).norm())
}

/// Bipartite state `Σ_j √λ_j (U_A† e_j) ⊗ (U_B^T e_j)`.
pub fn reconstruct_state(point: &ManifoldPoint) -> Result<PureState> {
    let n = point.dim();
    let a_basis = point.unitary_a.adjoint();
    let b_basis = point.unitary_b.transpose();
    let mut v = CVector::zeros(n * n);
    for j in 0..n {
        let a = a_basis.column(j).into_owned();
        let b = b_basis.column(j).into_owned();
        v += linalg::kron_vec(&a, &b) * c(point.lambda[j].sqrt(), 0.0);
    }
    PureState::from_vector(&v)
}

/// Outcome of [`optimize`].
#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub value: f64,
    pub point: ManifoldPoint,
    pub residual: KktResidual,
    /// Whether the best restart met the gradient tolerance.
    pub converged: bool,
    pub iterations: usize,
    pub restart: usize,
}

struct Run {
    value: f64,
    theta: Vec<f64>,
    u_a: CMatrix,
    u_b: CMatrix,
    converged: bool,
    iterations: usize,
}

/// Previous iterate and its search directions, for the Barzilai–Borwein step.
type Snapshot = (Vec<f64>, CMatrix, CMatrix, Vec<f64>, CMatrix, CMatrix);

struct Problem<'a> {
    k_a: &'a CMatrix,
    k_b: &'a CMatrix,
    s: f64,
    sign: f64,
    fixed_lambda: bool,
}

/// `λ = softmax(θ)`.
fn softmax(theta: &[f64]) -> Vec<f64> {
    let top = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = theta.iter().map(|t| (t - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

impl Problem<'_> {
    fn value(&self, theta: &[f64], u_a: &CMatrix, u_b: &CMatrix) -> f64 {
        let x = sqrt_weights(&softmax(theta), 0.0);
        self.sign * energy_with_amplitudes(&x, &rotate(u_a, self.k_a), &rotate(u_b, self.k_b))
    }

    /// Ascent directions for `sign · F` in `(θ, U_A, U_B)`.
    fn directions(&self, theta: &[f64], u_a: &CMatrix, u_b: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
        let n = theta.len();
        let lambda = softmax(theta);
        let x = sqrt_weights(&lambda, 0.0);
        let a = rotate(u_a, self.k_a);
        let b = rotate(u_b, self.k_b);
        let scale = c(2.0 * self.sign, 0.0);
        let d_a = riemannian_gradient(u_a, &(sandwich(&x, &b) * u_a * self.k_a * scale));
        let d_b = riemannian_gradient(u_b, &(sandwich(&x, &a) * u_b * self.k_b * scale));
        if self.fixed_lambda {
            return (vec![0.0; n], d_a, d_b);
        }
        // ∂F/∂θ_j = x_j (Sx)_j − λ_j F.
        let sx: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|k| (a[(j, k)] * b[(k, j)]).re * x[k]).sum())
            .collect();
        let f = dot(&x, &sx);
        let mut g: Vec<f64> = (0..n).map(|j| self.sign * (x[j] * sx[j] - lambda[j] * f)).collect();
        let entropy = shannon_entropy(&lambda);
        if entropy - self.s <= ACTIVE_TOL {
            // ∂H/∂θ_j = −λ_j (log λ_j + H).
            let h: Vec<f64> = lambda
                .iter()
                .map(|&l| if l > 0.0 { -l * (l.ln() + entropy) } else { 0.0 })
                .collect();
            let hh = dot(&h, &h);
            let gh = dot(&g, &h);
            if hh > 1e-300 && gh < 0.0 {
                g.iter_mut().zip(&h).for_each(|(gi, hi)| *gi -= gh / hh * hi);
            }
        }
        (g, d_a, d_b)
    }

    /// Exact maximiser of `sign · F` over `U_A` with everything else fixed,
    /// then over `U_B`: `Tr(U K U† M)` is extremal when `U K U†` shares the
    /// eigenbasis of `M` with eigenvalues matched in (anti-)sorted order.
    fn block_update(&self, theta: &[f64], u_b: &CMatrix) -> (CMatrix, CMatrix) {
        let x = sqrt_weights(&softmax(theta), 0.0);
        let m_a = sandwich(&x, &rotate(u_b, self.k_b));
        let new_a = align(self.k_a, &m_a, self.sign);
        let m_b = sandwich(&x, &rotate(&new_a, self.k_a));
        let new_b = align(self.k_b, &m_b, self.sign);
        (new_a, new_b)
    }

    /// `θ + t g`, shifted to max 0 and cooled toward uniform (`θ ↦ cθ`)
    /// just enough to restore `H ≥ s`.
    fn retract(&self, theta: &[f64], g: &[f64], t: f64) -> Vec<f64> {
        if self.fixed_lambda {
            return theta.to_vec();
        }
        let mut y: Vec<f64> = theta.iter().zip(g).map(|(a, b)| a + t * b).collect();
        let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        y.iter_mut().for_each(|v| *v -= top);
        let entropy_at = |c: f64| shannon_entropy(&softmax(&y.iter().map(|v| c * v).collect::<Vec<_>>()));
        if entropy_at(1.0) >= self.s {
            return y;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if entropy_at(mid) >= self.s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON {
                break;
            }
        }
        y.into_iter().map(|v| lo * v).collect()
    }

    fn run(&self, n: usize, config: &OptimizerConfig, seed: u64) -> Run {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u_a = linalg::haar_unitary(n, &mut rng);
        let mut u_b = linalg::haar_unitary(n, &mut rng);
        let mut theta: Vec<f64> = if self.fixed_lambda {
            vec![0.0; n]
        } else {
            mix_to_entropy(&random_simplex_point(n, &mut rng), self.s)
                .iter()
                .map(|l| l.max(1e-12).ln())
                .collect()
        };
        theta = self.retract(&theta, &vec![0.0; n], 0.0);
        let mut value = self.value(&theta, &u_a, &u_b);
        let mut converged = false;
        let mut iterations = 0;
        let mut previous: Option<Snapshot> = None;
        for it in 0..config.max_iters {
            iterations = it + 1;
            let (ua_new, ub_new) = self.block_update(&theta, &u_b);
            let v_new = self.value(&theta, &ua_new, &ub_new);
            if v_new >= value {
                u_a = ua_new;
                u_b = ub_new;
                value = v_new;
            }
            let (g, d_a, d_b) = self.directions(&theta, &u_a, &u_b);
            let slope = dot(&g, &g) + d_a.norm_squared() + d_b.norm_squared();
            if slope.sqrt() <= config.tol {
                converged = true;
                break;
            }
            // Barzilai-Borwein trial step from the last displacement.
            let mut t = match &previous {
                Some((pt, pa, pb, pg, pda, pdb)) => {
                    let st: Vec<f64> = theta.iter().zip(pt).map(|(a, b)| a - b).collect();
                    let yt: Vec<f64> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
                    let (sa, sb) = (&u_a - pa, &u_b - pb);
                    let (ya, yb) = (&d_a - pda, &d_b - pdb);
                    let ss = dot(&st, &st) + sa.norm_squared() + sb.norm_squared();
                    let sy = dot(&st, &yt) + linalg::real_inner(&sa, &ya) + linalg::real_inner(&sb, &yb);
                    if sy < 0.0 {
                        (ss / -sy).clamp(1e-6, 1e6)
                    } else {
                        1.0
                    }
                }
                None => 1.0,
            };
            previous = Some((theta.clone(), u_a.clone(), u_b.clone(), g.clone(), d_a.clone(), d_b.clone()));
            let mut accepted = false;
            while t >= MIN_STEP {
                let theta_new = self.retract(&theta, &g, t);
                let ua_new = linalg::qf(&(&u_a + &d_a * c(t, 0.0)));
                let ub_new = linalg::qf(&(&u_b + &d_b * c(t, 0.0)));
                let v_new = self.value(&theta_new, &ua_new, &ub_new);
                if v_new >= value + ARMIJO_C * t * slope {
                    theta = theta_new;
                    u_a = ua_new;
                    u_b = ub_new;
                    value = v_new;
                    accepted = true;
                    break;
                }
                t *= CONTRACTION;
            }
            if !accepted {
                // No ascent at machine precision: treat small gradients as converged.
                converged = slope.sqrt() <= 1e-6;
                break;
            }
        }
        Run {
            value,
            theta,
            u_a,
            u_b,
            converged,
            iterations,
        }
    }
}

/// Unitary `U` maximising (`sign > 0`) or minimising `Tr(U K U† M)`.
fn align(k: &CMatrix, m: &CMatrix, sign: f64) -> CMatrix {
    let (_, wk) = linalg::hermitian_eigen(k);
    let (_, mut vm) = linalg::hermitian_eigen(m);
    if sign < 0.0 {
        let n = vm.ncols();
        vm = CMatrix::from_fn(n, n, |i, j| vm[(i, n - 1 - j)]);
    }
    vm * wk.adjoint()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn spectral_norm(k: &CMatrix) -> f64 {
    linalg::eigenvalues_desc(k)
        .into_iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Mass below which trailing weights may be dropped by [`polish_support`].
const DROP_MASS: f64 = 1e-6;

/// Softmax weights never reach the boundary of the simplex, and the gradient
/// vanishes as a weight approaches zero. Tries zeroing the smallest weights
/// (total mass at most [`DROP_MASS`]), mixing the rest toward uniform until
/// `H ≥ s`, and keeps the best feasible candidate if it is no worse.
fn polish_support<F: Fn(&[f64]) -> f64>(lambda: Vec<f64>, s: f64, signed_value: F) -> Vec<f64> {
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&i, &j| lambda[i].total_cmp(&lambda[j]));
    let mut best_value = signed_value(&lambda);
    let mut best = lambda.clone();
    let mut dropped = 0.0;
    for k in 1..lambda.len() {
        dropped += lambda[order[k - 1]];
        if dropped > DROP_MASS {
            break;
        }
        let mut cand = lambda.clone();
        for &j in &order[..k] {
            cand[j] = 0.0;
        }
        let support: Vec<usize> = order[k..].to_vec();
        let total: f64 = support.iter().map(|&j| cand[j]).sum();
        let sub: Vec<f64> = support.iter().map(|&j| cand[j] / total).collect();
        let sub = mix_to_entropy(&sub, s);
        if shannon_entropy(&sub) < s - 1e-12 {
            continue;
        }
        for (&j, &x) in support.iter().zip(&sub) {
            cand[j] = x;
        }
        let v = signed_value(&cand);
        if v >= best_value {
            best_value = v;
            best = cand;
        }
    }
    best
}

/// Maximises or minimises `F` over points with `H(λ) ≥ s`.
///
/// Runs `config.restarts` independent projected-gradient ascents (seeds
/// `config.seed + r`) in parallel and keeps the best value. At `s = log N`
/// the weights are pinned to uniform and only the unitaries move.
pub fn optimize(
    k_a: &CMatrix,
    k_b: &CMatrix,
    s: f64,
    direction: Extremum,
    config: &OptimizerConfig,
) -> Result<OptimizeResult> {
    config.validate()?;
    let n = linalg::ensure_square(k_a)?;
    check_observables(k_a, k_b, n)?;
    for k in [k_a, k_b] {
        linalg::ensure_finite(k)?;
        if !linalg::is_hermitian(k, 1e-10) {
            return Err(QldpError::InvalidArgument("observable is not Hermitian".into()));
        }
    }
    let log_n = (n as f64).ln();
    if !(0.0..=log_n + 1e-12).contains(&s) {
        return Err(QldpError::InvalidArgument(format!(
            "entropy level {s} outside [0, log {n}]"
        )));
    }
    let s = s.min(log_n);
    let (na, nb) = (spectral_norm(k_a), spectral_norm(k_b));
    let unit = |k: &CMatrix, norm: f64| if norm > 0.0 { k * c(1.0 / norm, 0.0) } else { k.clone() };
    let (ka_n, kb_n) = (unit(k_a, na), unit(k_b, nb));
    let problem = Problem {
        k_a: &ka_n,
        k_b: &kb_n,
        s,
        sign: match direction {
            Extremum::Max => 1.0,
            Extremum::Min => -1.0,
        },
        fixed_lambda: s >= log_n - 1e-12,
    };
    let runs: Vec<Run> = (0..config.restarts)
        .into_par_iter()
        .map(|r| problem.run(n, config, config.seed.wrapping_add(r as u64)))
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|acc, cur| if cur.1.value > acc.1.value { cur } else { acc })
        .expect("at least one restart");

    let sign = problem.sign;
    let lambda = polish_support(softmax(&best.theta), s, |l| {
        sign * objective_unchecked(k_a, k_b, l, &best.u_a, &best.u_b)
    });
    let point = ManifoldPoint {
        lambda,
        unitary_a: best.u_a,
        unitary_b: best.u_b,
    };
    let value = objective_unchecked(k_a, k_b, &point.lambda, &point.unitary_a, &point.unitary_b);
    let residual = kkt_residuals(k_a, k_b, &point, s, direction)?;
    Ok(OptimizeResult {
        value,
        point,
        residual,
        converged: best.converged,
        iterations: best.iterations,
        restart,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, max_abs, random_psd};
    use crate::privacy_energy::{j_max, j_min_exact_max_entanglement, j_min_lower_bound, solve_gibbs_max, SpectrumPair};
    use rand::Rng;

    fn diag(v: &[f64]) -> CMatrix {
        linalg::from_real_diagonal(v)
    }

    fn random_point(n: usize, rng: &mut ChaCha8Rng) -> ManifoldPoint {
        ManifoldPoint::new(random_simplex_point(n, rng), haar_unitary(n, rng), haar_unitary(n, rng)).unwrap()
    }

    fn half_half_spectrum() -> [f64; 4] {
        [3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0]
    }

    fn quick() -> OptimizerConfig {
        OptimizerConfig {
            restarts: 4,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn boundary_minimum_is_reached_exactly() {
        let ka = diag(&[0.5, 0.5, 0.0, 0.0]);
        let kb = diag(&half_half_spectrum());
        let r = optimize(&ka, &kb, std::f64::consts::LN_2, Extremum::Min, &quick()).unwrap();
        assert!(r.value.abs() < 1e-14, "{}", r.value);
        assert!(r.point.entropy() >= std::f64::consts::LN_2 - 1e-12);
    }

    #[test]
    fn aligned_diagonal_objective() {
        let lambda = vec![0.5, 0.3, 0.2];
        let p = ManifoldPoint::aligned(lambda.clone()).unwrap();
        let (a, b) = ([0.9, 0.4, 0.1], [0.7, 0.5, 0.2]);
        let f = objective(&diag(&a), &diag(&b), &p).unwrap();
        let want: f64 = (0..3).map(|j| lambda[j] * a[j] * b[j]).sum();
        assert!((f - want).abs() < 1e-15);
    }

    #[test]
    fn objective_matches_direct_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [2, 3, 4] {
            for _ in 0..5 {
                let (ka, kb) = (random_psd(n, &mut rng), random_psd(n, &mut rng));
                let p = random_point(n, &mut rng);
                let psi = reconstruct_state(&p).unwrap();
                let direct = psi.expectation(&linalg::kron(&ka, &kb.transpose())).unwrap();
                assert!((objective(&ka, &kb, &p).unwrap() - direct).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn product_point_gives_product_of_diagonal_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (ka, kb) = (random_psd(3, &mut rng), random_psd(3, &mut rng));
        let (ua, ub) = (haar_unitary(3, &mut rng), haar_unitary(3, &mut rng));
        let p = ManifoldPoint::new(vec![1.0, 0.0, 0.0], ua.clone(), ub.clone()).unwrap();
        let want = (rotate(&ua, &ka)[(0, 0)] * rotate(&ub, &kb)[(0, 0)]).re;
        assert!((objective(&ka, &kb, &p).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = ManifoldPoint::aligned(vec![0.5, 0.5]).unwrap();
        assert!(objective(&CMatrix::identity(3, 3), &CMatrix::identity(2, 2), &p).is_err());
        assert!(ManifoldPoint::new(vec![0.5, 0.6], CMatrix::identity(2, 2), CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn riemannian_gradient_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(4, &mut rng);
        let h = random_psd(4, &mut rng);
        assert!(max_abs(&riemannian_gradient(&u, &(&u * &h))) < 1e-12);
        let s = linalg::skew(&linalg::random_ginibre(4, 4, &mut rng));
        assert!(max_abs(&(riemannian_gradient(&u, &(&u * &s)) - &u * &s)) < 1e-12);
        let g = linalg::random_ginibre(4, 4, &mut rng);
        let pulled = u.adjoint() * riemannian_gradient(&u, &g);
        assert!(max_abs(&(&pulled + pulled.adjoint())) < 1e-12);
        assert!(max_abs(&(&pulled - linalg::skew(&(u.adjoint() * &g)))) < 1e-12);
    }

    #[test]
    fn identity_observables_have_no_unitary_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let id = CMatrix::identity(3, 3);
        let p = random_point(3, &mut rng);
        let g = euclidean_gradients(&id, &id, &p).unwrap();
        assert!(riemannian_gradient(&p.unitary_a, &g.grad_ua).norm() < 1e-12);
        assert!(riemannian_gradient(&p.unitary_b, &g.grad_ub).norm() < 1e-12);
        assert!((objective(&id, &id, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    fn fd_check(ka: &CMatrix, kb: &CMatrix, p: &ManifoldPoint) {
        let h = 1e-5;
        let g = euclidean_gradients(ka, kb, p).unwrap();
        let n = p.dim();
        let f = |l: &[f64], ua: &CMatrix, ub: &CMatrix| objective_unchecked(ka, kb, l, ua, ub);
        for (which, grad) in [(0, &g.grad_ua), (1, &g.grad_ub)] {
            let mut fd = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    for (unit, part) in [(c(1.0, 0.0), 0), (c(0.0, 1.0), 1)] {
                        let mut e = CMatrix::zeros(n, n);
                        e[(i, j)] = unit * h;
                        let (plus, minus) = if which == 0 {
                            (f(&p.lambda, &(&p.unitary_a + &e), &p.unitary_b), f(&p.lambda, &(&p.unitary_a - &e), &p.unitary_b))
                        } else {
                            (f(&p.lambda, &p.unitary_a, &(&p.unitary_b + &e)), f(&p.lambda, &p.unitary_a, &(&p.unitary_b - &e)))
                        };
                        let d = (plus - minus) / (2.0 * h);
                        if part == 0 {
                            fd[(i, j)].re = d;
                        } else {
                            fd[(i, j)].im = d;
                        }
                    }
                }
            }
            assert!(max_abs(&(&fd - grad)) <= 1e-6 * max_abs(grad).max(1e-12));
        }
        let scale = g.grad_lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..n {
            let mut lp = p.lambda.clone();
            let mut lm = p.lambda.clone();
            lp[j] += h;
            lm[j] -= h;
            let d = (f(&lp, &p.unitary_a, &p.unitary_b) - f(&lm, &p.unitary_a, &p.unitary_b)) / (2.0 * h);
            assert!((d - g.grad_lambda[j]).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let (ka, kb) = (random_psd(3, &mut rng), random_psd(3, &mut rng));
            let lambda = mix_to_entropy(&random_simplex_point(3, &mut rng), 0.6);
            let p = ManifoldPoint::new(lambda, haar_unitary(3, &mut rng), haar_unitary(3, &mut rng)).unwrap();
            fd_check(&ka, &kb, &p);
        }
    }

    #[test]
    fn gibbs_witness_is_stationary() {
        let a = [0.9, 0.6, 0.3, 0.1];
        let b = [0.8, 0.5, 0.4, 0.2];
        let spec = SpectrumPair::new(a.to_vec(), b.to_vec()).unwrap();
        for s in [0.3, 0.9, 1.2] {
            let sol = solve_gibbs_max(&spec.mu(), s).unwrap();
            let p = ManifoldPoint::aligned(sol.weights.clone()).unwrap();
            let r = kkt_residuals(&diag(&a), &diag(&b), &p, s, Extremum::Max).unwrap();
            assert!(r.max_residual() <= 1e-8, "{r:?}");
            assert!((r.xi - 1.0 / sol.gamma).abs() <= 1e-6 * r.xi);
            assert!(r.eta.iter().all(|&e| e == 0.0));
            assert!(commutation_residual(&diag(&a), &diag(&b), &p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn vertex_witness_has_positive_boundary_multipliers() {
        let a = half_half_spectrum();
        let p = ManifoldPoint::aligned(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let r = kkt_residuals(&diag(&a), &diag(&a), &p, 0.3, Extremum::Max).unwrap();
        assert_eq!(r.xi, 0.0);
        assert!((r.nu - 9.0 / 64.0).abs() < 1e-12);
        assert!(r.eta[0] == 0.0 && r.eta[1] == 0.0);
        assert!(r.eta[2] > 0.0 && r.eta[3] > 0.0);
        assert!((r.eta[2] - 8.0 / 64.0).abs() < 1e-9);
        assert!(r.max_residual() <= 1e-8);
    }

    #[test]
    fn random_point_is_not_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (ka, kb) = (random_psd(4, &mut rng), random_psd(4, &mut rng));
        let p = random_point(4, &mut rng);
        let r = kkt_residuals(&ka, &kb, &p, 0.0, Extremum::Max).unwrap();
        assert!(r.grad_ua_norm > 1e-3);
    }

    #[test]
    fn optimizer_reaches_closed_form_for_block_depolarizing_spectra() {
        let k = diag(&half_half_spectrum());
        let log4 = 4f64.ln();
        let max = optimize(&k, &k, log4, Extremum::Max, &quick()).unwrap();
        assert!((max.value - 5.0 / 64.0).abs() <= 1e-6);
        let min = optimize(&k, &k, log4, Extremum::Min, &quick()).unwrap();
        assert!((min.value - 3.0 / 64.0).abs() <= 1e-6, "{}", min.value);
        assert!(min.value > 2.0 / 64.0);
        let top = optimize(&k, &k, 0.0, Extremum::Max, &quick()).unwrap();
        assert!((top.value - 9.0 / 64.0).abs() <= 1e-6);
    }

    #[test]
    fn optimizer_matches_j_max_on_random_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let a: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let spec = SpectrumPair::new(a.clone(), b.clone()).unwrap();
            for s in [0.2, 0.8, 1.2] {
                let closed = j_max(&spec, s).unwrap().value;
                let got = optimize(&diag(&a), &diag(&b), s, Extremum::Max, &quick()).unwrap();
                assert!(got.value <= closed + 1e-6);
                assert!((got.value - closed).abs() <= 1e-6, "s={s}: {} vs {closed}", got.value);
                assert!(got.point.entropy() >= s - 1e-10);
                let lower = j_min_lower_bound(&spec, s).unwrap().value;
                let min = optimize(&diag(&a), &diag(&b), s, Extremum::Min, &quick()).unwrap();
                assert!(min.value >= lower - 1e-8);
            }
            let exact = j_min_exact_max_entanglement(&spec);
            let min = optimize(&diag(&a), &diag(&b), 4f64.ln(), Extremum::Min, &quick()).unwrap();
            assert!((min.value - exact).abs() <= 1e-6);
        }
    }

    #[test]
    fn optimizer_output_point_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (ka, kb) = (random_psd(3, &mut rng), random_psd(3, &mut rng));
        let r = optimize(&ka, &kb, 0.7, Extremum::Max, &quick()).unwrap();
        assert!(linalg::unitarity_error(&r.point.unitary_a) <= 1e-10);
        assert!(linalg::unitarity_error(&r.point.unitary_b) <= 1e-10);
        assert!((r.point.lambda.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(r.point.entropy() >= 0.7 - 1e-10);
        assert!((objective(&ka, &kb, &r.point).unwrap() - r.value).abs() < 1e-12);
        assert!(r.converged);
        let scale = spectral_norm(&ka) * spectral_norm(&kb);
        assert!(commutation_residual(&ka, &kb, &r.point).unwrap() <= 1e-7 * scale);
    }

    #[test]
    fn optimizer_rejects_bad_input() {
        let k = CMatrix::identity(2, 2);
        assert!(optimize(&k, &k, 1.0, Extremum::Max, &quick()).is_err());
        assert!(optimize(&k, &k, -0.1, Extremum::Max, &quick()).is_err());
        let bad = OptimizerConfig { restarts: 0, ..quick() };
        assert!(optimize(&k, &k, 0.1, Extremum::Max, &bad).is_err());
    }

    #[test]
    fn config_json_fragment() {
        let c: OptimizerConfig = serde_json::from_str(r#"{"restarts": 8, "max_iters": 2000, "tol": 1e-8, "seed": 42}"#).unwrap();
        assert_eq!(c, OptimizerConfig::default());
        let partial: OptimizerConfig = serde_json::from_str(r#"{"restarts": 2}"#).unwrap();
        assert_eq!(partial.max_iters, 2000);
    }
}
