//! Leakage `ε*(s)` of a product mechanism: outer search over rank-one local
//! measurement directions, closed-form bounds for the block-depolarizing
//! family, and an exact Born-rule soundness check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{BlockDepolarizing, KrausChannel, ProductMechanism};
use crate::error::{QldpError, Result};
use crate::linalg::{self, c, CMatrix};
use crate::manifold_opt::{optimize, OptimizerConfig};
use crate::privacy_energy::{
    j_max_with, j_min_exact_max_entanglement, j_min_lower_bound_with, observable_spectrum, EnergySettings, EnergyValue, Extremum,
    PhaseRegime, SpectrumPair, ENTROPY_SLACK,
};
use crate::quantum::{sample_state_in_domain, PureState};

/// Energies at or below this are treated as zero, giving `ε = +∞`.
pub const ZERO_ENERGY: f64 = 1e-14;

/// `(0, ±∞, NaN)`-aware serde for leakage values: infinity is the string `"inf"`.
pub mod inf_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// `log(J_max / J_min)`, or `+∞` when `J_min` vanishes.
pub fn log_ratio(j_max: f64, j_min: f64) -> f64 {
    if j_min <= ZERO_ENERGY {
        f64::INFINITY
    } else {
        (j_max / j_min).ln()
    }
}

/// Outer-search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PovmSearchConfig {
    /// Points per axis of the weight grid (block-depolarizing mechanisms).
    pub grid_points: usize,
    pub refinement_iters: usize,
    /// Random starts for generic mechanisms.
    pub restarts: usize,
    pub seed: u64,
    /// Points per axis of the coarse grid on which the numerical minimum is
    /// also evaluated.
    pub numeric_grid_points: usize,
}

impl Default for PovmSearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 101,
            refinement_iters: 60,
            restarts: 16,
            seed: 7,
            numeric_grid_points: 3,
        }
    }
}

impl PovmSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 || self.refinement_iters == 0 || self.restarts == 0 || self.numeric_grid_points == 0 {
            return Err(QldpError::Config(
                "povm search needs grid_points ≥ 2 and positive refinement_iters, restarts, numeric_grid_points"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Closed-form bound for one pair of local spectra.
#[derive(Debug, Clone)]
pub struct SpectralBound {
    pub epsilon: f64,
    pub j_max: EnergyValue,
    pub j_min_bound: EnergyValue,
    /// Whether the larger lower bound came from exchanging the subsystems.
    pub swapped: bool,
}

/// `log(J_max / J̃_min)` where `J̃_min` is the larger of the relaxed bounds
/// for the two subsystem orderings (each is a valid lower bound).
pub fn spectral_bound(spec: &SpectrumPair, s: f64, settings: &EnergySettings) -> Result<SpectralBound> {
    let j_max = j_max_with(spec, s, settings)?;
    let direct = j_min_lower_bound_with(spec, s, settings)?;
    let flipped = j_min_lower_bound_with(&spec.swapped(), s, settings)?;
    let (j_min_bound, swapped) = if flipped.value > direct.value {
        (flipped, true)
    } else {
        (direct, false)
    };
    Ok(SpectralBound {
        epsilon: log_ratio(j_max.value, j_min_bound.value),
        j_max,
        j_min_bound,
        swapped,
    })
}

/// Result of [`epsilon_star`]; all leakages are in nats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub s: f64,
    pub j_max: f64,
    pub j_min_bound: f64,
    pub j_min_exact_if_max_ent: Option<f64>,
    /// Numerical estimate of `J_min` at the argmax of `epsilon_numeric`.
    pub j_min_numeric: f64,
    #[serde(with = "inf_float")]
    pub epsilon_upper: f64,
    #[serde(with = "inf_float")]
    pub epsilon_numeric: f64,
    pub regime_max: PhaseRegime,
    pub regime_min: PhaseRegime,
    pub argmax_povm: (PureState, PureState),
    /// Spectra of the induced observables at `argmax_povm`.
    pub argmax_spectra: SpectrumPair,
    /// Even-block weights `(p, q)` of the argmax for block-depolarizing mechanisms.
    pub argmax_weights: Option<(f64, f64)>,
    pub numeric_converged: bool,
    pub metadata: ReportMetadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub version: String,
    pub search: PovmSearchConfig,
    pub optimizer: OptimizerConfig,
}

struct Candidate {
    phis: (PureState, PureState),
    weights: Option<(f64, f64)>,
    spec: SpectrumPair,
    bound: SpectralBound,
}

fn spectra_for(mech: &ProductMechanism, phi_a: &PureState, phi_b: &PureState) -> Result<SpectrumPair> {
    let (k_a, k_b) = mech.induced_observables(phi_a, phi_b)?;
    SpectrumPair::from_observables(&k_a, &k_b)
}

fn local_spectrum(channel: &KrausChannel, t: f64) -> Result<Vec<f64>> {
    let phi = BlockDepolarizing::direction_with_weight(t);
    Ok(observable_spectrum(&channel.induced_observable(&phi)?))
}

fn candidate_at(mech: &ProductMechanism, p: f64, q: f64, s: f64, settings: &EnergySettings) -> Result<Candidate> {
    let spec = SpectrumPair::new(local_spectrum(mech.channel_a(), p)?, local_spectrum(mech.channel_b(), q)?)?;
    let bound = spectral_bound(&spec, s, settings)?;
    Ok(Candidate {
        phis: (
            BlockDepolarizing::direction_with_weight(p),
            BlockDepolarizing::direction_with_weight(q),
        ),
        weights: Some((p, q)),
        spec,
        bound,
    })
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.bound.epsilon > b.bound.epsilon
}

/// Golden-section maximisation of `f` on `[lo, hi]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid search over even-block weights `(p, q) ∈ [0, 1]²` followed by
/// coordinatewise golden-section refinement. Returns the best candidate and
/// the coarse numeric candidates.
fn search_block_depolarizing(
    mech: &ProductMechanism,
    s: f64,
    config: &PovmSearchConfig,
    settings: &EnergySettings,
) -> Result<(Candidate, Vec<Candidate>)> {
    let g = config.grid_points;
    let ts: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
    let spec_a = ts
        .iter()
        .map(|&t| local_spectrum(mech.channel_a(), t))
        .collect::<Result<Vec<_>>>()?;
    let spec_b = ts
        .iter()
        .map(|&t| local_spectrum(mech.channel_b(), t))
        .collect::<Result<Vec<_>>>()?;
    let epsilon_at = |i: usize, j: usize| -> Result<f64> {
        let spec = SpectrumPair::new(spec_a[i].clone(), spec_b[j].clone())?;
        Ok(spectral_bound(&spec, s, settings)?.epsilon)
    };
    let rows: Vec<(usize, usize, f64)> = (0..g)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize, f64)> {
            let mut best = (i, 0, f64::NEG_INFINITY);
            for j in 0..g {
                let e = epsilon_at(i, j)?;
                if e > best.2 {
                    best = (i, j, e);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let (bi, bj, _) = rows
        .into_iter()
        .fold((0, 0, f64::NEG_INFINITY), |acc, r| if r.2 > acc.2 { r } else { acc });

    let mut best = candidate_at(mech, ts[bi], ts[bj], s, settings)?;
    if best.bound.epsilon.is_finite() {
        let h = 1.0 / (g - 1) as f64;
        let eval = |p: f64, q: f64| {
            candidate_at(mech, p, q, s, settings)
                .map(|c| c.bound.epsilon)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let (mut p, mut q) = (ts[bi], ts[bj]);
        let rounds = 2;
        let per_axis = (config.refinement_iters / (2 * rounds)).max(1);
        for _ in 0..rounds {
            let (np, _) = golden_max(|x| eval(x, q), (p - h).max(0.0), (p + h).min(1.0), per_axis);
            let (nq, _) = golden_max(|y| eval(np, y), (q - h).max(0.0), (q + h).min(1.0), per_axis);
            let cand = candidate_at(mech, np, nq, s, settings)?;
            if better(&cand, &best) {
                best = cand;
                p = np;
                q = nq;
            }
        }
    }

    let m = config.numeric_grid_points.min(g);
    let idx: Vec<usize> = if m == 1 {
        vec![g - 1]
    } else {
        (0..m).map(|k| (k * (g - 1) + (m - 1) / 2) / (m - 1)).collect()
    };
    let mut coarse = Vec::new();
    for &i in &idx {
        for &j in &idx {
            coarse.push(candidate_at(mech, ts[i], ts[j], s, settings)?);
        }
    }
    Ok((best, coarse))
}

fn perturb(phi: &PureState, sigma: f64, rng: &mut ChaCha8Rng) -> PureState {
    let v = phi.to_vector() + linalg::random_unit_vector(phi.dim(), rng) * c(sigma, 0.0);
    PureState::from_vector(&v).unwrap_or_else(|_| phi.clone())
}

/// Random restarts with stochastic hill-climbing on each projective sphere.
fn search_generic(
    mech: &ProductMechanism,
    s: f64,
    config: &PovmSearchConfig,
    settings: &EnergySettings,
) -> Result<(Candidate, Vec<Candidate>)> {
    let (da, db) = mech.dims();
    let evaluate = |phi_a: PureState, phi_b: PureState| -> Result<Candidate> {
        let spec = spectra_for(mech, &phi_a, &phi_b)?;
        let bound = spectral_bound(&spec, s, settings)?;
        Ok(Candidate {
            phis: (phi_a, phi_b),
            weights: None,
            spec,
            bound,
        })
    };
    let mut results = (0..config.restarts)
        .into_par_iter()
        .map(|r| -> Result<Candidate> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
            let (a0, b0) = if r == 0 {
                (PureState::basis(da, 0)?, PureState::basis(db, 0)?)
            } else {
                (
                    PureState::from_vector(&linalg::random_unit_vector(da, &mut rng))?,
                    PureState::from_vector(&linalg::random_unit_vector(db, &mut rng))?,
                )
            };
            let mut cur = evaluate(a0, b0)?;
            let mut sigma = 0.5;
            for it in 0..config.refinement_iters {
                if cur.bound.epsilon.is_infinite() {
                    break;
                }
                let (pa, pb) = if it % 2 == 0 {
                    (perturb(&cur.phis.0, sigma, &mut rng), cur.phis.1.clone())
                } else {
                    (cur.phis.0.clone(), perturb(&cur.phis.1, sigma, &mut rng))
                };
                let cand = evaluate(pa, pb)?;
                if better(&cand, &cur) {
                    cur = cand;
                    sigma = (sigma * 1.5).min(1.0);
                } else {
                    sigma = (sigma * 0.8).max(1e-6);
                }
            }
            Ok(cur)
        })
        .collect::<Result<Vec<_>>>()?;
    // Stable order: best first, ties by restart index.
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&i, &j| results[j].bound.epsilon.total_cmp(&results[i].bound.epsilon));
    let keep = config.numeric_grid_points * config.numeric_grid_points;
    let mut taken: Vec<Option<Candidate>> = results.drain(..).map(Some).collect();
    let best = taken[order[0]].take().expect("present");
    let coarse = order[1..]
        .iter()
        .take(keep)
        .filter_map(|&i| taken[i].take())
        .collect();
    Ok((best, coarse))
}

struct NumericMin {
    value: f64,
    converged: bool,
}

fn numeric_j_min(cand: &Candidate, s: f64, optimizer: &OptimizerConfig) -> Result<NumericMin> {
    let spec = &cand.spec;
    if s >= spec.max_entropy() - ENTROPY_SLACK {
        return Ok(NumericMin {
            value: j_min_exact_max_entanglement(spec),
            converged: true,
        });
    }
    let k_a = linalg::from_real_diagonal(spec.alpha());
    let k_b = linalg::from_real_diagonal(spec.beta());
    let run = optimize(&k_a, &k_b, s, Extremum::Min, optimizer)?;
    Ok(NumericMin {
        value: run.value,
        converged: run.converged,
    })
}

/// `ε*(s)` for a product mechanism.
///
/// `epsilon_upper` maximises `log(J_max / J̃_min)` over local directions;
/// `epsilon_numeric` replaces `J̃_min` by a min-direction optimiser estimate
/// on the argmax and a coarse candidate set, and is exact at `s = log N`.
pub fn epsilon_star(
    mech: &ProductMechanism,
    s: f64,
    search: &PovmSearchConfig,
    optimizer: &OptimizerConfig,
) -> Result<PrivacyReport> {
    epsilon_star_with(mech, s, search, optimizer, &EnergySettings::default())
}

pub fn epsilon_star_with(
    mech: &ProductMechanism,
    s: f64,
    search: &PovmSearchConfig,
    optimizer: &OptimizerConfig,
    settings: &EnergySettings,
) -> Result<PrivacyReport> {
    search.validate()?;
    optimizer.validate()?;
    let (da, db) = mech.dims();
    if da != db {
        return Err(QldpError::InvalidArgument(format!(
            "subsystems must have equal dimension, got {da} and {db}"
        )));
    }
    let log_n = (da as f64).ln();
    if !(0.0..=log_n + ENTROPY_SLACK).contains(&s) {
        return Err(QldpError::InvalidArgument(format!(
            "entropy level {s} outside [0, log {da}]"
        )));
    }
    let s = s.min(log_n);
    let (best, coarse) = if mech.block_depolarizing_betas().is_some() {
        search_block_depolarizing(mech, s, search, settings)?
    } else {
        search_generic(mech, s, search, settings)?
    };

    let numeric: Vec<(usize, NumericMin)> = std::iter::once(&best)
        .chain(coarse.iter())
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, cand)| numeric_j_min(cand, s, optimizer).map(|m| (k, m)))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<&Candidate> = std::iter::once(&best).chain(coarse.iter()).collect();
    let (num_idx, num_min) = numeric
        .into_iter()
        .map(|(k, m)| {
            let e = log_ratio(all[k].bound.j_max.value, m.value);
            (k, m, e)
        })
        .fold(None::<(usize, NumericMin, f64)>, |acc, cur| match acc {
            Some(a) if a.2 >= cur.2 => Some(a),
            _ => Some(cur),
        })
        .map(|(k, m, _)| (k, m))
        .expect("at least one candidate");
    let num_cand = all[num_idx];
    let epsilon_numeric = log_ratio(num_cand.bound.j_max.value, num_min.value);
    let at_max = s >= log_n - ENTROPY_SLACK;
    Ok(PrivacyReport {
        s,
        j_max: best.bound.j_max.value,
        j_min_bound: best.bound.j_min_bound.value,
        j_min_exact_if_max_ent: at_max.then(|| j_min_exact_max_entanglement(&best.spec)),
        j_min_numeric: num_min.value,
        epsilon_upper: best.bound.epsilon,
        epsilon_numeric,
        regime_max: best.bound.j_max.regime,
        regime_min: best.bound.j_min_bound.regime,
        argmax_povm: best.phis.clone(),
        argmax_spectra: best.spec.clone(),
        argmax_weights: best.weights,
        numeric_converged: num_min.converged,
        metadata: ReportMetadata {
            version: crate::VERSION.to_string(),
            search: *search,
            optimizer: *optimizer,
        },
    })
}

/// Root `τ ∈ [1/2, 1]` of `s = log 2 + H_b(τ)` for `s ∈ [log 2, log 4]`.
pub fn binary_weight_for_entropy(s: f64) -> Result<f64> {
    let ln2 = std::f64::consts::LN_2;
    if !(ln2 - ENTROPY_SLACK..=2.0 * ln2 + ENTROPY_SLACK).contains(&s) {
        return Err(QldpError::InvalidArgument(format!("entropy {s} outside [log 2, log 4]")));
    }
    let h = |t: f64| {
        let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
        term(t) + term(1.0 - t)
    };
    let target = s - ln2;
    let (mut lo, mut hi) = (0.5, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form upper bound on `ε*(s)` for `N_βA ⊗ N_βB`, maximised over
/// the even-block weights `(p, q) ∈ [1/2, 1]²` on a 101-point grid per axis.
///
/// Below `log 2` the ratio is `v(p)v(q) / (w(p)w(q))`; above, with `τ` from
/// the binary-entropy equation,
/// `J_max = τ v(p)v(q) + (1−τ) w(p)w(q)` and
/// `J̃_min = (1−τ) v(p)w(q) + τ w(p)w(q)` (or the same with `p, q` exchanged,
/// whichever is larger).
pub fn block_depolarizing_epsilon_bound(beta_a: f64, beta_b: f64, s: f64) -> Result<f64> {
    let a = BlockDepolarizing::new(beta_a)?;
    let b = BlockDepolarizing::new(beta_b)?;
    let ln2 = std::f64::consts::LN_2;
    if !(0.0..=2.0 * ln2 + ENTROPY_SLACK).contains(&s) {
        return Err(QldpError::InvalidArgument(format!("entropy level {s} outside [0, log 4]")));
    }
    let tau = if s <= ln2 { 1.0 } else { binary_weight_for_entropy(s)? };
    let grid: Vec<f64> = (0..=100).map(|i| 0.5 + 0.5 * i as f64 / 100.0).collect();
    let mut best = f64::NEG_INFINITY;
    for &p in &grid {
        for &q in &grid {
            let (vp, wp, vq, wq) = (a.v(p), a.w(p), b.v(q), b.w(q));
            let j_max = tau * vp * vq + (1.0 - tau) * wp * wq;
            let j_min = ((1.0 - tau) * vp * wq + tau * wp * wq).max((1.0 - tau) * vq * wp + tau * wq * wp);
            best = best.max(log_ratio(j_max, j_min));
        }
    }
    Ok(best)
}

/// Outcome of [`empirical_ratio_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCheck {
    #[serde(with = "inf_float")]
    pub max_log_ratio: f64,
    pub pass: bool,
    pub events_checked: usize,
}

/// Exact Born probabilities `⟨ψ|E_A†(M_a) ⊗ E_B†(M_b)|ψ⟩` of the four
/// outcomes of the binary product measurement built from `(φ_a, φ_b)`.
fn outcome_observables(mech: &ProductMechanism, phi_a: &PureState, phi_b: &PureState) -> Result<Vec<CMatrix>> {
    let (da, db) = mech.dims();
    let pa = phi_a.projector();
    let pb = phi_b.projector();
    let ka = [
        mech.channel_a().adjoint_apply(&pa)?,
        mech.channel_a().adjoint_apply(&(CMatrix::identity(da, da) - &pa))?,
    ];
    let kb = [
        mech.channel_b().adjoint_apply(&pb)?,
        mech.channel_b().adjoint_apply(&(CMatrix::identity(db, db) - &pb))?,
    ];
    Ok(ka
        .iter()
        .flat_map(|a| kb.iter().map(move |b| linalg::kron(a, b)))
        .collect())
}

/// Samples `trials` pairs of states in the entanglement domain and checks
/// that every outcome event of every binary product measurement satisfies
/// `log(Pr[T|ρ] / Pr[T|ρ']) ≤ ε + 1e-8`. Measurement directions are
/// `directions` plus one Haar-random pair per trial. `ε = +∞` passes
/// vacuously.
pub fn empirical_ratio_check(
    mech: &ProductMechanism,
    s: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
    directions: &[(PureState, PureState)],
) -> Result<EmpiricalCheck> {
    let (da, db) = mech.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fixed = Vec::with_capacity(directions.len());
    for (a, b) in directions {
        fixed.push(outcome_observables(mech, a, b)?);
    }
    let mut worst = f64::NEG_INFINITY;
    let mut events = 0;
    for _ in 0..trials {
        let psi = sample_state_in_domain(da, db, s, &mut rng)?.to_vector();
        let psi2 = sample_state_in_domain(da, db, s, &mut rng)?.to_vector();
        let phi_a = PureState::from_vector(&linalg::random_unit_vector(da, &mut rng))?;
        let phi_b = PureState::from_vector(&linalg::random_unit_vector(db, &mut rng))?;
        let random = outcome_observables(mech, &phi_a, &phi_b)?;
        for obs in fixed.iter().chain(std::iter::once(&random)) {
            let p: Vec<f64> = obs.iter().map(|k| linalg::expectation(k, &psi).max(0.0)).collect();
            let p2: Vec<f64> = obs.iter().map(|k| linalg::expectation(k, &psi2).max(0.0)).collect();
            for mask in 1u32..(1 << p.len()) {
                let sum = |q: &[f64]| -> f64 {
                    q.iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, v)| v)
                        .sum()
                };
                let (x, y) = (sum(&p), sum(&p2));
                events += 1;
                for (num, den) in [(x, y), (y, x)] {
                    let r = if num <= 0.0 {
                        continue;
                    } else if den <= 0.0 {
                        f64::INFINITY
                    } else {
                        (num / den).ln()
                    };
                    worst = worst.max(r);
                }
            }
        }
    }
    let pass = epsilon.is_infinite() || worst <= epsilon + 1e-8;
    Ok(EmpiricalCheck {
        max_log_ratio: worst.max(0.0),
        pass,
        events_checked: events,
    })
}
