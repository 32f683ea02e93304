//! Closed-form extremal privacy energies over entanglement-constrained states.
//!
//! For local observables with spectra `α` and `β` (descending) the maximal
//! energy over states with entanglement entropy at least `s` depends only on
//! `μ_j = α_j β_j`; the relaxed lower bound on the minimal energy depends on
//! `μ̃_j = α_j β_N`. Both switch from a vertex value to a Gibbs value once `s`
//! exceeds the log-degeneracy of the extremal entry.

use serde::{Deserialize, Serialize};

use crate::error::{QldpError, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::shannon_entropy;

/// Default relative tolerance used to decide eigenvalue degeneracy.
pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// Below this spread the vector is treated as constant.
pub const SPREAD_FLOOR: f64 = 1e-14;
/// Slack allowed when comparing `s` against `log N`.
pub const ENTROPY_SLACK: f64 = 1e-12;

const GIBBS_TOL: f64 = 1e-12;
const GIBBS_MAX_ITERS: usize = 200;
const GAMMA_CAP: f64 = 1e8;

/// Which end of the spectrum an operation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    LowEntanglement,
    HighEntanglement,
    MaxEntanglement,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::LowEntanglement => "low",
            RegimeTag::HighEntanglement => "high",
            RegimeTag::MaxEntanglement => "max",
        }
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regime tag together with its threshold `log d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRegime {
    pub tag: RegimeTag,
    pub threshold: f64,
}

/// Relative size below which a computed eigenvalue is treated as zero.
pub const EIGEN_ZERO_REL: f64 = 1e-12;

/// Descending eigenvalues with eigensolver noise around zero removed.
pub fn observable_spectrum(k: &CMatrix) -> Vec<f64> {
    let mut values = linalg::eigenvalues_desc(k);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut values {
        if v.abs() <= EIGEN_ZERO_REL * scale {
            *v = 0.0;
        }
    }
    values
}

/// Spectra of the two local induced observables, both sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPair {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

fn clean_spectrum(mut v: Vec<f64>, name: &str) -> Result<Vec<f64>> {
    for x in v.iter_mut() {
        if !x.is_finite() {
            return Err(QldpError::InvalidArgument(format!("{name} has non-finite entries")));
        }
        if *x < -1e-12 {
            return Err(QldpError::InvalidArgument(format!(
                "{name} has a negative entry {x}"
            )));
        }
        *x = x.max(0.0);
    }
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

impl SpectrumPair {
    /// Sorts both inputs descending and clamps entries in `[-1e-12, 0)` to zero.
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(QldpError::InvalidArgument("empty spectrum".into()));
        }
        if alpha.len() != beta.len() {
            return Err(QldpError::DimensionMismatch {
                expected: alpha.len(),
                actual: beta.len(),
            });
        }
        Ok(Self {
            alpha: clean_spectrum(alpha, "alpha")?,
            beta: clean_spectrum(beta, "beta")?,
        })
    }

    /// Spectra of two Hermitian PSD observables. Eigenvalues within
    /// [`EIGEN_ZERO_REL`] of zero relative to the largest are set to zero.
    pub fn from_observables(k_a: &CMatrix, k_b: &CMatrix) -> Result<Self> {
        linalg::ensure_square(k_a)?;
        linalg::ensure_square(k_b)?;
        Self::new(observable_spectrum(k_a), observable_spectrum(k_b))
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `μ_j = α_j β_j`, descending.
    pub fn mu(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.beta).map(|(a, b)| a * b).collect()
    }

    /// `μ̃_j = α_j β_N`, descending.
    pub fn mu_tilde(&self) -> Vec<f64> {
        let b_min = *self.beta.last().expect("non-empty");
        self.alpha.iter().map(|a| a * b_min).collect()
    }

    /// The pair with the roles of the two subsystems exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
        }
    }

    pub fn scaled(&self, ca: f64, cb: f64) -> Result<Self> {
        Self::new(
            self.alpha.iter().map(|a| a * ca).collect(),
            self.beta.iter().map(|b| b * cb).collect(),
        )
    }

    pub fn max_entropy(&self) -> f64 {
        (self.dim() as f64).ln()
    }
}

/// Number of entries of a descending vector equal to its extremal entry,
/// where "equal" means within `rel_tol · (v₁ − v_N)`.
pub fn degeneracy_count(values: &[f64], extremal: Extremum, rel_tol: f64) -> Result<usize> {
    let (first, last) = match (values.first(), values.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(QldpError::InvalidArgument("empty vector".into())),
    };
    let spread = first - last;
    if spread < SPREAD_FLOOR {
        return Ok(values.len());
    }
    let tol = rel_tol * spread;
    let count = match extremal {
        Extremum::Max => values.iter().filter(|&&v| first - v <= tol).count(),
        Extremum::Min => values.iter().filter(|&&v| v - last <= tol).count(),
    };
    Ok(count)
}

/// Entropy-constrained Gibbs optimiser `λ_j ∝ exp(±γ v_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSolution {
    pub direction: Extremum,
    pub gamma: f64,
    /// `Σ_j exp(±γ v_j)`; may overflow to infinity for large `γ`.
    pub partition: f64,
    pub log_partition: f64,
    pub weights: Vec<f64>,
    pub entropy: f64,
    pub energy: f64,
}

/// Gibbs weights, `log Z` and energy at a fixed inverse temperature.
fn gibbs_at(values: &[f64], gamma: f64, sign: f64) -> (Vec<f64>, f64) {
    let shift = values
        .iter()
        .map(|&v| sign * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = values
        .iter()
        .map(|&v| (gamma * (sign * v - shift)).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / z).collect();
    (weights, gamma * shift + z.ln())
}

fn energy(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

fn uniform_solution(values: &[f64], direction: Extremum) -> GibbsSolution {
    let n = values.len();
    let weights = vec![1.0 / n as f64; n];
    GibbsSolution {
        direction,
        gamma: 0.0,
        partition: n as f64,
        log_partition: (n as f64).ln(),
        entropy: (n as f64).ln(),
        energy: energy(values, &weights),
        weights,
    }
}

/// Signature shared by Gibbs solvers; lets callers inject alternatives.
pub type GibbsSolver = fn(&[f64], f64, Extremum, f64) -> Result<GibbsSolution>;

/// Solves `H(λ(γ)) = s` with `λ_j ∝ exp(γ v_j)` (max) or `exp(−γ v_j)` (min)
/// by bisection on `γ ≥ 0`.
///
/// `values` must be sorted descending. Requires `log d < s ≤ log N` where `d`
/// is the degeneracy of the targeted extremal entry; a constant vector
/// returns the uniform solution with `γ = 0`.
pub fn solve_gibbs(values: &[f64], s: f64, direction: Extremum, rel_tol: f64) -> Result<GibbsSolution> {
    let n = values.len();
    if n == 0 {
        return Err(QldpError::InvalidArgument("empty vector".into()));
    }
    let log_n = (n as f64).ln();
    if s > log_n + ENTROPY_SLACK || s.is_nan() {
        return Err(QldpError::Infeasible { s, max: log_n });
    }
    let d = degeneracy_count(values, direction, rel_tol)?;
    if d == n {
        return Ok(uniform_solution(values, direction));
    }
    let threshold = (d as f64).ln();
    if s <= threshold {
        return Err(QldpError::Regime { s, threshold });
    }
    if s >= log_n - ENTROPY_SLACK {
        return Ok(uniform_solution(values, direction));
    }
    let sign = match direction {
        Extremum::Max => 1.0,
        Extremum::Min => -1.0,
    };
    let entropy_at = |g: f64| shannon_entropy(&gibbs_at(values, g, sign).0);

    let mut lo = 0.0;
    let mut hi = 1.0;
    while entropy_at(hi) > s && hi <= GAMMA_CAP {
        lo = hi;
        hi *= 2.0;
    }
    let mut gamma = hi;
    for _ in 0..GIBBS_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let h = entropy_at(mid);
        gamma = mid;
        if (h - s).abs() <= GIBBS_TOL || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if h > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (weights, log_partition) = gibbs_at(values, gamma, sign);
    Ok(GibbsSolution {
        direction,
        gamma,
        partition: log_partition.exp(),
        log_partition,
        entropy: shannon_entropy(&weights),
        energy: energy(values, &weights),
        weights,
    })
}

/// Max-direction Gibbs solver with the default degeneracy tolerance.
pub fn solve_gibbs_max(mu: &[f64], s: f64) -> Result<GibbsSolution> {
    solve_gibbs(mu, s, Extremum::Max, DEFAULT_REL_TOL)
}

/// Optimal Schmidt weights behind a closed-form value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Uniform weight on the `d` extremal coordinates.
    Vertex { weights: Vec<f64> },
    Gibbs(GibbsSolution),
}

impl Witness {
    pub fn weights(&self) -> &[f64] {
        match self {
            Witness::Vertex { weights } => weights,
            Witness::Gibbs(g) => &g.weights,
        }
    }
}

/// Closed-form energy with its regime and witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    pub regime: PhaseRegime,
    pub witness: Witness,
}

/// Knobs for the closed forms: degeneracy tolerance and the Gibbs solver.
#[derive(Debug, Clone, Copy)]
pub struct EnergySettings {
    pub rel_tol: f64,
    pub gibbs: GibbsSolver,
}

impl Default for EnergySettings {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            gibbs: solve_gibbs,
        }
    }
}

fn check_entropy(s: f64, n: usize) -> Result<f64> {
    let log_n = (n as f64).ln();
    if !(0.0..=log_n + ENTROPY_SLACK).contains(&s) {
        return Err(QldpError::InvalidArgument(format!(
            "entropy level {s} outside [0, log {n}]"
        )));
    }
    Ok(s.min(log_n))
}

fn extremal_energy(values: &[f64], s: f64, direction: Extremum, settings: &EnergySettings) -> Result<EnergyValue> {
    let n = values.len();
    let s = check_entropy(s, n)?;
    let log_n = (n as f64).ln();
    let d = degeneracy_count(values, direction, settings.rel_tol)?;
    let threshold = (d as f64).ln();
    if s <= threshold {
        let (value, range) = match direction {
            Extremum::Max => (values[0], 0..d),
            Extremum::Min => (values[n - 1], n - d..n),
        };
        let mut weights = vec![0.0; n];
        for w in &mut weights[range] {
            *w = 1.0 / d as f64;
        }
        return Ok(EnergyValue {
            value,
            regime: PhaseRegime {
                tag: RegimeTag::LowEntanglement,
                threshold,
            },
            witness: Witness::Vertex { weights },
        });
    }
    let tag = if s >= log_n - ENTROPY_SLACK {
        RegimeTag::MaxEntanglement
    } else {
        RegimeTag::HighEntanglement
    };
    let sol = (settings.gibbs)(values, s, direction, settings.rel_tol)?;
    Ok(EnergyValue {
        value: sol.energy,
        regime: PhaseRegime { tag, threshold },
        witness: Witness::Gibbs(sol),
    })
}

/// Maximal privacy energy over states with entanglement entropy ≥ `s`.
pub fn j_max(spec: &SpectrumPair, s: f64) -> Result<EnergyValue> {
    j_max_with(spec, s, &EnergySettings::default())
}

pub fn j_max_with(spec: &SpectrumPair, s: f64, settings: &EnergySettings) -> Result<EnergyValue> {
    extremal_energy(&spec.mu(), s, Extremum::Max, settings)
}

/// Relaxed lower bound on the minimal privacy energy, built from `μ̃`.
///
/// At `s = log N` this returns the relaxed value `mean(μ̃)` tagged
/// `MaxEntanglement`; the exact minimum there is
/// [`j_min_exact_max_entanglement`].
pub fn j_min_lower_bound(spec: &SpectrumPair, s: f64) -> Result<EnergyValue> {
    j_min_lower_bound_with(spec, s, &EnergySettings::default())
}

pub fn j_min_lower_bound_with(spec: &SpectrumPair, s: f64, settings: &EnergySettings) -> Result<EnergyValue> {
    extremal_energy(&spec.mu_tilde(), s, Extremum::Min, settings)
}

/// Exact minimal energy at maximal entanglement: `(1/N) Σ_j α_j β_{N−j+1}`.
pub fn j_min_exact_max_entanglement(spec: &SpectrumPair) -> f64 {
    let n = spec.dim();
    spec.alpha
        .iter()
        .zip(spec.beta.iter().rev())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n as f64
}

/// Slack functions for the spectral inequalities the closed forms rest on.
/// Each returns the smallest margin; a negative value is a violation.
pub mod lemmas {
    use crate::linalg::{self, CMatrix};

    /// `min_j σ_j(X) − σ_j(P†XP)` for an isometry `P`.
    pub fn interlacing_slack(x: &CMatrix, p: &CMatrix) -> f64 {
        let full = linalg::eigenvalues_desc(x);
        let compressed = linalg::eigenvalues_desc(&(p.adjoint() * x * p));
        compressed
            .iter()
            .zip(&full)
            .map(|(c, f)| f - c)
            .fold(f64::INFINITY, f64::min)
    }

    /// `(Tr(XY) − Σσ_j(X)σ_{N+1−j}(Y), Σσ_j(X)σ_j(Y) − Tr(XY))` for PSD `X, Y`.
    pub fn trace_inequality_slacks(x: &CMatrix, y: &CMatrix) -> (f64, f64) {
        let sx = linalg::eigenvalues_desc(x);
        let sy = linalg::eigenvalues_desc(y);
        let tr = linalg::trace(&(x * y)).re;
        let lower: f64 = sx.iter().zip(sy.iter().rev()).map(|(a, b)| a * b).sum();
        let upper: f64 = sx.iter().zip(&sy).map(|(a, b)| a * b).sum();
        (tr - lower, upper - tr)
    }

    /// `Σ y_j x_j − Σ y_j z_j` given descending non-negative `x`, `y` and
    /// partial sums of `z` dominated by those of `x`.
    pub fn majorization_slack(x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let yx: f64 = y.iter().zip(x).map(|(a, b)| a * b).sum();
        let yz: f64 = y.iter().zip(z).map(|(a, b)| a * b).sum();
        yx - yz
    }

    /// True when every prefix sum of `z` is at most the matching one of `x`.
    pub fn prefix_dominated(z: &[f64], x: &[f64]) -> bool {
        let (mut sz, mut sx) = (0.0, 0.0);
        z.iter().zip(x).all(|(a, b)| {
            sz += a;
            sx += b;
            sz <= sx
        })
    }
}
