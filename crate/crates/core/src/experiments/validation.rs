//! The numbered correctness criteria behind `selftest` and the acceptance
//! suite. Every criterion computes its own reference values and reports a
//! single pass/fail line.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::ProductMechanism;
use crate::error::{QldpError, Result};
use crate::linalg::{self, c, CMatrix};
use crate::manifold_opt::{
    euclidean_gradients_unchecked, kkt_residuals, optimize, ManifoldPoint, OptimizerConfig,
};
use crate::privacy_energy::{
    j_max_with, j_min_lower_bound_with, lemmas, solve_gibbs, EnergySettings, Extremum, GibbsSolution,
    SpectrumPair, Witness,
};
use crate::qldp_analyzer::{empirical_ratio_check, epsilon_star_with, spectral_bound, PovmSearchConfig, PrivacyReport};
use crate::quantum::{random_simplex_point, sample_state_in_domain, PureState};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(format!("level must be 'quick' or 'full', got {other:?}")),
        }
    }
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "low-entanglement plateau"),
    (2, "high-entanglement decrease"),
    (3, "threshold continuity"),
    (4, "privatization of a non-private channel"),
    (5, "optimizer max agrees with closed form"),
    (6, "exact minimum at maximal entanglement"),
    (7, "Monte-Carlo energy sandwich"),
    (8, "KKT certificate at the Gibbs witness"),
    (9, "gradient finite differences"),
    (10, "spectral inequality suite"),
    (11, "empirical Born-ratio soundness"),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub elapsed_ms: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} [{}]: {} ({}; {:.0} ms)",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail,
            self.elapsed_ms
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelftestReport {
    pub level: Level,
    pub pass: bool,
    pub outcomes: Vec<CriterionOutcome>,
}

impl SelftestReport {
    pub fn failed(&self) -> Vec<&CriterionOutcome> {
        self.outcomes.iter().filter(|o| !o.pass).collect()
    }
}

struct Ctx<'a> {
    settings: &'a EnergySettings,
    search: PovmSearchConfig,
    optimizer: OptimizerConfig,
    instances: usize,
    states: usize,
    pairs: usize,
}

impl<'a> Ctx<'a> {
    fn new(level: Level, settings: &'a EnergySettings) -> Self {
        let (instances, states, pairs) = match level {
            Level::Quick => (6, 100, 100),
            Level::Full => (30, 500, 500),
        };
        Self {
            settings,
            search: PovmSearchConfig::default(),
            optimizer: OptimizerConfig::default(),
            instances,
            states,
            pairs,
        }
    }

    fn report(&self, mech: &ProductMechanism, s: f64) -> Result<PrivacyReport> {
        epsilon_star_with(mech, s, &self.search, &self.optimizer, self.settings)
    }

    fn upper(&self, beta_a: f64, beta_b: f64, s: f64) -> Result<f64> {
        Ok(self.report(&ProductMechanism::block_depolarizing(beta_a, beta_b)?, s)?.epsilon_upper)
    }
}

type Verdict = Result<(bool, String)>;

/// Runs one criterion; errors are reported as failures.
pub fn run_criterion(id: u8, level: Level, settings: &EnergySettings) -> CriterionOutcome {
    let ctx = Ctx::new(level, settings);
    let start = Instant::now();
    let verdict: Verdict = match id {
        1 => plateau(&ctx),
        2 => high_regime(&ctx),
        3 => continuity(&ctx),
        4 => privatization(&ctx),
        5 => optimizer_max(&ctx),
        6 => max_entanglement_min(&ctx),
        7 => sandwich(&ctx),
        8 => kkt_certificate(&ctx),
        9 => gradients(&ctx),
        10 => inequalities(&ctx),
        11 => born_ratios(&ctx),
        _ => Err(QldpError::InvalidArgument(format!("unknown criterion {id}"))),
    };
    let (pass, detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        id,
        name: CRITERIA
            .iter()
            .find(|(k, _)| *k == id)
            .map(|(_, n)| n.to_string())
            .unwrap_or_default(),
        pass,
        detail,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

pub fn run_selftest(level: Level, settings: &EnergySettings) -> SelftestReport {
    let outcomes: Vec<_> = CRITERIA.iter().map(|&(id, _)| run_criterion(id, level, settings)).collect();
    SelftestReport {
        level,
        pass: outcomes.iter().all(|o| o.pass),
        outcomes,
    }
}

/// Gibbs solver with the inverse temperature halved: self-consistent weights
/// at the wrong entropy. Used to check that the suite detects a broken solver.
pub fn corrupted_gibbs(values: &[f64], s: f64, direction: Extremum, rel_tol: f64) -> Result<GibbsSolution> {
    let mut sol = solve_gibbs(values, s, direction, rel_tol)?;
    let gamma = 0.5 * sol.gamma;
    let sign = match direction {
        Extremum::Max => 1.0,
        Extremum::Min => -1.0,
    };
    let top = values.iter().map(|v| sign * gamma * v).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = values.iter().map(|v| (sign * gamma * v - top).exp()).collect();
    let z: f64 = raw.iter().sum();
    sol.gamma = gamma;
    sol.weights = raw.iter().map(|w| w / z).collect();
    sol.log_partition = z.ln() + top;
    sol.partition = sol.log_partition.exp();
    sol.energy = sol.weights.iter().zip(values).map(|(w, v)| w * v).sum();
    sol.entropy = -sol.weights.iter().filter(|&&w| w > 0.0).map(|w| w * w.ln()).sum::<f64>();
    Ok(sol)
}

fn plateau(ctx: &Ctx) -> Verdict {
    let target = 2.0 * 3f64.ln();
    let mut worst = 0.0f64;
    for s in [0.0, 0.2, 0.4, 0.69] {
        worst = worst.max((ctx.upper(0.5, 0.5, s)? - target).abs());
    }
    Ok((worst <= 1e-4, format!("max |ε − 2 log 3| = {worst:.2e}")))
}

/// Root of `log 2 + H_b(τ) = s` on `[1/2, 1]`.
fn tau_oracle(s: f64) -> f64 {
    let f = |t: f64| {
        let h = if t >= 1.0 { 0.0 } else { -t * t.ln() - (1.0 - t) * (1.0 - t).ln() };
        LN2 + h - s
    };
    let (mut lo, mut hi) = (0.5, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn high_regime(ctx: &Ctx) -> Verdict {
    let top = (ctx.upper(0.5, 0.5, 4f64.ln())? - 2.5f64.ln()).abs();
    let grid: Vec<f64> = (1..=20).map(|k| LN2 + LN2 * k as f64 / 20.0).collect();
    let values = grid
        .iter()
        .map(|&s| ctx.upper(0.5, 0.5, s))
        .collect::<Result<Vec<_>>>()?;
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let formula = grid
        .iter()
        .zip(&values)
        .map(|(&s, &e)| {
            let t = tau_oracle(s);
            (e - ((8.0 * t + 1.0) / (3.0 - 2.0 * t)).ln()).abs()
        })
        .fold(0.0f64, f64::max);
    Ok((
        top <= 1e-4 && decreasing && formula <= 1e-4,
        format!("|ε(log 4) − log 2.5| = {top:.2e}; strictly decreasing: {decreasing}; max τ-formula gap {formula:.2e}"),
    ))
}

fn continuity(ctx: &Ctx) -> Verdict {
    let below = ctx.upper(0.5, 0.5, LN2 - 1e-6)?;
    let above = ctx.upper(0.5, 0.5, LN2 + 1e-6)?;
    let gap = (below - above).abs();
    Ok((gap <= 1e-3, format!("jump across log 2 = {gap:.2e}")))
}

fn privatization(ctx: &Ctx) -> Verdict {
    let mech = ProductMechanism::block_depolarizing(0.0, 0.5)?;
    let mut all_inf = true;
    for s in [0.0, 0.3, 0.6, LN2] {
        let r = ctx.report(&mech, s)?;
        all_inf &= r.epsilon_upper.is_infinite() && r.epsilon_numeric.is_infinite();
    }
    let gap = (ctx.report(&mech, 4f64.ln())?.epsilon_upper - 3f64.ln()).abs();
    Ok((
        all_inf && gap <= 1e-4,
        format!("infinite up to log 2: {all_inf}; |ε(log 4) − log 3| = {gap:.2e}"),
    ))
}

struct Instance {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    k_a: CMatrix,
    k_b: CMatrix,
}

fn instances(n: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut draw = || -> Vec<f64> {
                let mut v: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            };
            let (alpha, beta) = (draw(), draw());
            let ua = linalg::haar_unitary(4, &mut rng);
            let ub = linalg::haar_unitary(4, &mut rng);
            let k_a = linalg::hermitian_part(&(&ua * linalg::from_real_diagonal(&alpha) * ua.adjoint()));
            let k_b = linalg::hermitian_part(&(&ub * linalg::from_real_diagonal(&beta) * ub.adjoint()));
            Instance { alpha, beta, k_a, k_b }
        })
        .collect()
}

fn optimizer_max(ctx: &Ctx) -> Verdict {
    let levels = [0.2, 0.8, 1.2, 4f64.ln()];
    let worst = instances(ctx.instances, 501)
        .par_iter()
        .map(|inst| -> Result<f64> {
            let spec = SpectrumPair::new(inst.alpha.clone(), inst.beta.clone())?;
            let mut w = 0.0f64;
            for s in levels {
                let closed = j_max_with(&spec, s, ctx.settings)?.value;
                let opt = optimize(&inst.k_a, &inst.k_b, s, Extremum::Max, &ctx.optimizer)?.value;
                w = w.max((closed - opt).abs());
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok((
        worst <= 1e-6,
        format!("{} instances × 4 levels; max |J_max − optimum| = {worst:.2e}", ctx.instances),
    ))
}

fn max_entanglement_min(ctx: &Ctx) -> Verdict {
    let s = 4f64.ln();
    let rows = instances(ctx.instances, 501)
        .par_iter()
        .map(|inst| -> Result<(f64, bool)> {
            let n = inst.alpha.len();
            let exact = (0..n).map(|j| inst.alpha[j] * inst.beta[n - 1 - j]).sum::<f64>() / n as f64;
            let spec = SpectrumPair::new(inst.alpha.clone(), inst.beta.clone())?;
            let relaxed = j_min_lower_bound_with(&spec, s, ctx.settings)?.value;
            let opt = optimize(&inst.k_a, &inst.k_b, s, Extremum::Min, &ctx.optimizer)?.value;
            Ok(((opt - exact).abs(), opt > relaxed))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let exceeds = rows.iter().all(|r| r.1);
    Ok((
        worst <= 1e-6 && exceeds,
        format!("max |optimum − anti-aligned sum| = {worst:.2e}; above relaxed bound: {exceeds}"),
    ))
}

fn sandwich(ctx: &Ctx) -> Verdict {
    let mechanisms = [(0.5, 0.5), (0.0, 0.5), (0.25, 0.75)];
    let levels = [0.2, 0.6, 1.0, 4f64.ln()];
    let cells: Vec<(usize, f64, f64, f64)> = mechanisms
        .iter()
        .enumerate()
        .flat_map(|(i, &(a, b))| levels.iter().map(move |&s| (i, a, b, s)))
        .collect();
    let violations = cells
        .par_iter()
        .enumerate()
        .map(|(k, &(_, ba, bb, s))| -> Result<usize> {
            let mech = ProductMechanism::block_depolarizing(ba, bb)?;
            let report = ctx.report(&mech, s)?;
            let mut rng = ChaCha8Rng::seed_from_u64(700 + k as u64);
            let random = (
                PureState::from_vector(&linalg::random_unit_vector(4, &mut rng))?,
                PureState::from_vector(&linalg::random_unit_vector(4, &mut rng))?,
            );
            let mut bad = 0;
            for (phis, known) in [(report.argmax_povm.clone(), true), (random, false)] {
                let (k_a, k_b) = mech.induced_observables(&phis.0, &phis.1)?;
                let (hi, lo) = if known {
                    (report.j_max, report.j_min_bound)
                } else {
                    let b = spectral_bound(&SpectrumPair::from_observables(&k_a, &k_b)?, s, ctx.settings)?;
                    (b.j_max.value, b.j_min_bound.value)
                };
                let k = linalg::kron(&k_a, &k_b);
                for _ in 0..ctx.states {
                    let psi = sample_state_in_domain(4, 4, s, &mut rng)?.to_vector();
                    let e = linalg::expectation(&k, &psi);
                    if e < lo - 1e-8 || e > hi + 1e-8 {
                        bad += 1;
                    }
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok((
        violations == 0,
        format!("{} cells × {} states × 2 directions; violations: {violations}", cells.len(), ctx.states),
    ))
}

fn kkt_certificate(ctx: &Ctx) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    let mut worst_res = 0.0f64;
    let mut worst_xi = 0.0f64;
    let count = 20;
    for _ in 0..count {
        let mut draw = || -> Vec<f64> { (0..4).map(|_| rng.random_range(0.05..1.0)).collect() };
        let spec = SpectrumPair::new(draw(), draw())?;
        let s = rng.random_range(0.3..1.3);
        let sol = match j_max_with(&spec, s, ctx.settings)?.witness {
            Witness::Gibbs(sol) => sol,
            Witness::Vertex { .. } => return Ok((false, format!("no Gibbs witness at s = {s}"))),
        };
        let point = ManifoldPoint::aligned(sol.weights.clone())?;
        let k_a = linalg::from_real_diagonal(spec.alpha());
        let k_b = linalg::from_real_diagonal(spec.beta());
        let res = kkt_residuals(&k_a, &k_b, &point, s, Extremum::Max)?;
        worst_res = worst_res.max(res.max_residual());
        let inv_gamma = 1.0 / sol.gamma;
        worst_xi = worst_xi.max((res.xi - inv_gamma).abs() / inv_gamma);
    }
    Ok((
        worst_res <= 1e-8 && worst_xi <= 1e-6,
        format!("{count} witnesses; max residual {worst_res:.2e}; max |ξγ − 1| = {worst_xi:.2e}"),
    ))
}

/// `Re Tr(Λ^{1/2} U_A K_a U_A† Λ^{1/2} U_B K_b U_B†)` written out directly.
fn energy_reference(k_a: &CMatrix, k_b: &CMatrix, lambda: &[f64], u_a: &CMatrix, u_b: &CMatrix) -> f64 {
    let root = linalg::from_real_diagonal(&lambda.iter().map(|l| l.sqrt()).collect::<Vec<_>>());
    let m = &root * u_a * k_a * u_a.adjoint() * &root * u_b * k_b * u_b.adjoint();
    linalg::trace(&m).re
}

fn gradients(_ctx: &Ctx) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let h = 1e-5;
    let n = 4;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let k_a = linalg::random_psd(n, &mut rng);
        let k_b = linalg::random_psd(n, &mut rng);
        let lambda: Vec<f64> = random_simplex_point(n, &mut rng)
            .iter()
            .map(|l| 0.5 * l + 0.5 / n as f64)
            .collect();
        let u_a = linalg::haar_unitary(n, &mut rng);
        let u_b = linalg::haar_unitary(n, &mut rng);
        let g = euclidean_gradients_unchecked(&k_a, &k_b, &lambda, &u_a, &u_b);
        for side in 0..2 {
            let grad = if side == 0 { &g.grad_ua } else { &g.grad_ub };
            let scale = linalg::max_abs(grad).max(1e-300);
            for i in 0..n {
                for j in 0..n {
                    for unit in [c(1.0, 0.0), c(0.0, 1.0)] {
                        let mut e = CMatrix::zeros(n, n);
                        e[(i, j)] = unit * h;
                        let f = |sign: f64| {
                            let d = &e * c(sign, 0.0);
                            if side == 0 {
                                energy_reference(&k_a, &k_b, &lambda, &(&u_a + d), &u_b)
                            } else {
                                energy_reference(&k_a, &k_b, &lambda, &u_a, &(&u_b + d))
                            }
                        };
                        let fd = (f(1.0) - f(-1.0)) / (2.0 * h);
                        let analytic = (grad[(i, j)].conj() * unit).re;
                        worst = worst.max((fd - analytic).abs() / scale);
                    }
                }
            }
        }
        let scale = g.grad_lambda.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for j in 0..n {
            let shifted = |d: f64| {
                let mut l = lambda.clone();
                l[j] += d;
                energy_reference(&k_a, &k_b, &l, &u_a, &u_b)
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            worst = worst.max((fd - g.grad_lambda[j]).abs() / scale);
        }
    }
    Ok((worst <= 1e-6, format!("20 points; max relative gap {worst:.2e}")))
}

fn inequalities(_ctx: &Ctx) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let slack = -1e-10;
    let count = 200;
    let (mut inter, mut trace, mut major) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for _ in 0..count {
        let n = 5;
        let m = rng.random_range(1..n);
        let x = linalg::hermitian_part(&linalg::random_ginibre(n, n, &mut rng));
        let p = linalg::random_isometry(n, m, &mut rng);
        let full = linalg::eigenvalues_desc(&x);
        let comp = linalg::eigenvalues_desc(&(p.adjoint() * &x * &p));
        for j in 0..m {
            inter = inter.min(full[j] - comp[j]).min(comp[j] - full[j + n - m]);
        }
        inter = inter.min(lemmas::interlacing_slack(&x, &p));
    }
    for _ in 0..count {
        let n = 4;
        let x = linalg::random_psd(n, &mut rng);
        let y = linalg::random_psd(n, &mut rng);
        let sx = linalg::eigenvalues_desc(&x);
        let sy = linalg::eigenvalues_desc(&y);
        let tr = linalg::trace(&(&x * &y)).re;
        let hi: f64 = (0..n).map(|j| sx[j] * sy[j]).sum();
        let lo: f64 = (0..n).map(|j| sx[j] * sy[n - 1 - j]).sum();
        let (a, b) = lemmas::trace_inequality_slacks(&x, &y);
        trace = trace.min(hi - tr).min(tr - lo).min(a).min(b);
    }
    for _ in 0..count {
        let n = 6;
        let mut x = random_simplex_point(n, &mut rng);
        x.sort_by(|a, b| b.total_cmp(a));
        let mut z = vec![0.0; n];
        let weights = random_simplex_point(3, &mut rng);
        for w in weights {
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            for j in 0..n {
                z[j] += w * x[perm[j]];
            }
        }
        z.sort_by(|a, b| b.total_cmp(a));
        let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        y.sort_by(|a, b| b.total_cmp(a));
        let (mut px, mut pz) = (0.0, 0.0);
        for j in 0..n {
            px += x[j];
            pz += z[j];
            major = major.min(px - pz);
        }
        let direct: f64 = (0..n).map(|j| y[j] * (x[j] - z[j])).sum();
        major = major.min(direct).min(lemmas::majorization_slack(&x, &y, &z));
    }
    let pass = inter >= slack && trace >= slack && major >= slack;
    Ok((
        pass,
        format!("{count} instances each; min slacks: interlacing {inter:.2e}, trace {trace:.2e}, majorization {major:.2e}"),
    ))
}

fn born_ratios(ctx: &Ctx) -> Verdict {
    let configs = [
        (0.5, 0.5, 0.3),
        (0.5, 0.5, 4f64.ln()),
        (0.0, 0.5, 0.3),
        (0.0, 0.5, 1.0),
        (0.25, 0.75, 0.8),
    ];
    let results = configs
        .par_iter()
        .enumerate()
        .map(|(k, &(ba, bb, s))| -> Result<(bool, f64, f64)> {
            let mech = ProductMechanism::block_depolarizing(ba, bb)?;
            let r = ctx.report(&mech, s)?;
            let check = empirical_ratio_check(&mech, s, r.epsilon_upper, ctx.pairs, 1100 + k as u64, &[r.argmax_povm])?;
            Ok((check.pass, check.max_log_ratio, r.epsilon_upper))
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = results.iter().all(|r| r.0);
    let margin = results
        .iter()
        .filter(|r| r.2.is_finite())
        .map(|r| r.2 - r.1)
        .fold(f64::INFINITY, f64::min);
    Ok((
        pass,
        format!("{} configurations × {} pairs; min ε − observed = {margin:.3e}", configs.len(), ctx.pairs),
    ))
}
