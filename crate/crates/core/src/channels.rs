//! CPTP maps in Kraus form, their adjoints, product mechanisms and the
//! two-qubit block-depolarizing family.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, QldpError, Result};
use crate::linalg::{self, c, CMatrix, C64};
use crate::quantum::{DensityOperator, PureState};

/// Tolerance for `Σ_k E(k)† E(k) = I` and for Hermiticity of observables.
pub const CHANNEL_TOL: f64 = 1e-10;

/// Quantum channel `ρ ↦ Σ_k E(k) ρ E(k)†`.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| QldpError::InvalidChannel("no Kraus operators".into()))?;
        let dim = linalg::ensure_square(first)?;
        let mut completeness = CMatrix::zeros(dim, dim);
        for k in &kraus {
            check_dim(dim, linalg::ensure_square(k)?)?;
            linalg::ensure_finite(k)?;
            completeness += k.adjoint() * k;
        }
        let err = linalg::max_abs(&(completeness - CMatrix::identity(dim, dim)));
        if err > CHANNEL_TOL {
            return Err(QldpError::InvalidChannel(format!(
                "Kraus operators are not complete: ‖Σ E†E − I‖ = {err:e}"
            )));
        }
        Ok(Self { dim, kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![CMatrix::identity(dim, dim)],
        }
    }

    /// Conjugation by a fixed unitary.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ_k E(k) ρ E(k)†`.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        check_dim(self.dim, rho.dim())?;
        let r = rho.matrix();
        let out = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * r * k.adjoint());
        DensityOperator::new(linalg::hermitian_part(&out))
    }

    /// Heisenberg-picture action `Σ_k E(k)† X E(k)` on a Hermitian observable.
    pub fn adjoint_apply(&self, observable: &CMatrix) -> Result<CMatrix> {
        check_dim(self.dim, linalg::ensure_square(observable)?)?;
        linalg::ensure_finite(observable)?;
        let herm = linalg::hermiticity_error(observable);
        if herm > CHANNEL_TOL {
            return Err(QldpError::InvalidArgument(format!(
                "observable is not Hermitian (error {herm:e})"
            )));
        }
        let out = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * observable * k);
        Ok(linalg::hermitian_part(&out))
    }

    /// `K_φ = E†(|φ⟩⟨φ|)`.
    pub fn induced_observable(&self, phi: &PureState) -> Result<CMatrix> {
        check_dim(self.dim, phi.dim())?;
        self.adjoint_apply(&phi.projector())
    }

    /// `E ⊗ F` with Kraus set `{E(k) ⊗ F(l)}`.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| linalg::kron(a, b)))
            .collect();
        KrausChannel {
            dim: self.dim * other.dim,
            kraus,
        }
    }

    /// Random channel from a Haar isometry `C^dim → C^(dim·count)`.
    pub fn random<R: rand::Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Self {
        let v = linalg::random_isometry(dim * count, dim, rng);
        let kraus = (0..count)
            .map(|k| v.rows(k * dim, dim).into_owned())
            .collect();
        Self { dim, kraus }
    }
}

/// Two-qubit block-depolarizing channel
/// `N_β(ρ) = (1−β) Tr(P₀ρ) P₀/2 + (1−β) Tr(P₁ρ) P₁/2 + β I/4`,
/// where `P₀ = |00⟩⟨00| + |11⟩⟨11|` and `P₁ = I − P₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockDepolarizing {
    beta: f64,
}

const EVEN: [usize; 2] = [0, 3];
const ODD: [usize; 2] = [1, 2];

fn ket_bra(u: usize, v: usize, scale: f64) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(u, v)] = c(scale, 0.0);
    m
}

fn block_projector(indices: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(4, 4);
    for &i in indices {
        p[(i, i)] = c(1.0, 0.0);
    }
    p
}

impl BlockDepolarizing {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(QldpError::InvalidArgument(format!(
                "block-depolarizing parameter must lie in [0, 1], got {beta}"
            )));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn even_projector() -> CMatrix {
        block_projector(&EVEN)
    }

    pub fn odd_projector() -> CMatrix {
        block_projector(&ODD)
    }

    /// Kraus set `{√((1−β)/2)|u⟩⟨v| : u, v in the same parity block}
    /// ∪ {√(β/4)|u⟩⟨v| : all u, v}`; zero-weight operators are dropped.
    pub fn kraus_channel(&self) -> KrausChannel {
        let mut kraus = Vec::new();
        if self.beta < 1.0 {
            let a = ((1.0 - self.beta) / 2.0).sqrt();
            for block in [EVEN, ODD] {
                for &u in &block {
                    for &v in &block {
                        kraus.push(ket_bra(u, v, a));
                    }
                }
            }
        }
        if self.beta > 0.0 {
            let b = (self.beta / 4.0).sqrt();
            for u in 0..4 {
                for v in 0..4 {
                    kraus.push(ket_bra(u, v, b));
                }
            }
        }
        KrausChannel::new(kraus).expect("block-depolarizing Kraus set is complete")
    }

    /// Direct superoperator evaluation, independent of the Kraus set.
    pub fn apply_direct(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        check_dim(4, rho.dim())?;
        let (p0, p1) = (Self::even_projector(), Self::odd_projector());
        let t0 = linalg::trace(&(&p0 * rho.matrix())).re;
        let t1 = linalg::trace(&(&p1 * rho.matrix())).re;
        let out = p0 * c((1.0 - self.beta) * t0 / 2.0, 0.0)
            + p1 * c((1.0 - self.beta) * t1 / 2.0, 0.0)
            + CMatrix::identity(4, 4) * c(self.beta / 4.0, 0.0);
        DensityOperator::new(out)
    }

    /// `N_β†(M) = (1−β)(Tr(P₀M)/2 P₀ + Tr(P₁M)/2 P₁) + β Tr(M)/4 I`.
    pub fn adjoint_direct(&self, m: &CMatrix) -> Result<CMatrix> {
        check_dim(4, linalg::ensure_square(m)?)?;
        let (p0, p1) = (Self::even_projector(), Self::odd_projector());
        let t0 = linalg::trace(&(&p0 * m));
        let t1 = linalg::trace(&(&p1 * m));
        let tr = linalg::trace(m);
        Ok(p0 * (t0 * (1.0 - self.beta) / 2.0)
            + p1 * (t1 * (1.0 - self.beta) / 2.0)
            + CMatrix::identity(4, 4) * (tr * self.beta / 4.0))
    }

    /// `v(t) = (1−β)t/2 + β/4`.
    pub fn v(&self, t: f64) -> f64 {
        (1.0 - self.beta) * t / 2.0 + self.beta / 4.0
    }

    /// `w(t) = 1/2 − v(t)`.
    pub fn w(&self, t: f64) -> f64 {
        0.5 - self.v(t)
    }

    /// Spectrum of the induced observable of a rank-one element with even
    /// weight `t = ⟨φ|P₀|φ⟩`, sorted descending.
    pub fn induced_spectrum(&self, t: f64) -> [f64; 4] {
        let (v, w) = (self.v(t), self.w(t));
        let (hi, lo) = if v >= w { (v, w) } else { (w, v) };
        [hi, hi, lo, lo]
    }

    /// Rank-one direction with even weight `t`: `√t|00⟩ + √(1−t)|01⟩`.
    pub fn direction_with_weight(t: f64) -> PureState {
        let t = t.clamp(0.0, 1.0);
        PureState::normalized(vec![
            c(t.sqrt(), 0.0),
            c((1.0 - t).sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ])
        .expect("unit vector")
    }
}

/// Kraus form of `N_β`.
pub fn block_depolarizing(beta: f64) -> Result<KrausChannel> {
    Ok(BlockDepolarizing::new(beta)?.kraus_channel())
}

/// One Kraus operator in JSON: either `dim²` row-major `[re, im]` pairs or
/// `dim` rows of `dim` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorJson {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

impl OperatorJson {
    fn to_matrix(&self, dim: usize) -> Result<CMatrix> {
        let entries: Vec<[f64; 2]> = match self {
            OperatorJson::Flat(v) => v.clone(),
            OperatorJson::Rows(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(QldpError::Config(format!("operator must be {dim}x{dim}")));
                }
                rows.concat()
            }
        };
        if entries.len() != dim * dim {
            return Err(QldpError::Config(format!(
                "operator has {} entries, expected {}",
                entries.len(),
                dim * dim
            )));
        }
        Ok(CMatrix::from_fn(dim, dim, |i, j| {
            let [re, im] = entries[i * dim + j];
            C64::new(re, im)
        }))
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        OperatorJson::Rows(
            (0..n)
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }
}

/// JSON description of a local channel.
///
/// ```json
/// {"kind": "block_depolarizing", "beta": 0.5}
/// {"kind": "kraus", "dim": 2, "operators": [[[1,0],[0,0],[0,0],[1,0]]]}
/// {"kind": "identity", "dim": 4}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    BlockDepolarizing { beta: f64 },
    Kraus { dim: usize, operators: Vec<OperatorJson> },
    Identity { dim: usize },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<KrausChannel> {
        match self {
            ChannelSpec::BlockDepolarizing { beta } => block_depolarizing(*beta),
            ChannelSpec::Kraus { dim, operators } => {
                if *dim == 0 {
                    return Err(QldpError::Config("channel dimension must be positive".into()));
                }
                let kraus = operators
                    .iter()
                    .map(|op| op.to_matrix(*dim))
                    .collect::<Result<Vec<_>>>()?;
                KrausChannel::new(kraus)
            }
            ChannelSpec::Identity { dim } => {
                if *dim == 0 {
                    return Err(QldpError::Config("channel dimension must be positive".into()));
                }
                Ok(KrausChannel::identity(*dim))
            }
        }
    }

    pub fn block_depolarizing_beta(&self) -> Option<f64> {
        match self {
            ChannelSpec::BlockDepolarizing { beta } => Some(*beta),
            _ => None,
        }
    }
}

/// Product mechanism `E = E_A ⊗ E_B`.
#[derive(Debug, Clone)]
pub struct ProductMechanism {
    channel_a: KrausChannel,
    channel_b: KrausChannel,
    betas: Option<(f64, f64)>,
}

impl ProductMechanism {
    pub fn new(channel_a: KrausChannel, channel_b: KrausChannel) -> Self {
        Self {
            channel_a,
            channel_b,
            betas: None,
        }
    }

    pub fn from_specs(a: &ChannelSpec, b: &ChannelSpec) -> Result<Self> {
        let mut mech = Self::new(a.build()?, b.build()?);
        if let (Some(ba), Some(bb)) = (a.block_depolarizing_beta(), b.block_depolarizing_beta()) {
            mech.betas = Some((ba, bb));
        }
        Ok(mech)
    }

    /// `N_βA ⊗ N_βB`.
    pub fn block_depolarizing(beta_a: f64, beta_b: f64) -> Result<Self> {
        Self::from_specs(
            &ChannelSpec::BlockDepolarizing { beta: beta_a },
            &ChannelSpec::BlockDepolarizing { beta: beta_b },
        )
    }

    pub fn channel_a(&self) -> &KrausChannel {
        &self.channel_a
    }

    pub fn channel_b(&self) -> &KrausChannel {
        &self.channel_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.channel_a.dim(), self.channel_b.dim())
    }

    /// Parameters when both sides are block-depolarizing channels.
    pub fn block_depolarizing_betas(&self) -> Option<(f64, f64)> {
        self.betas
    }

    /// `(K_a, K_b)` for rank-one local elements `|φ_a⟩⟨φ_a|`, `|φ_b⟩⟨φ_b|`.
    pub fn induced_observables(&self, phi_a: &PureState, phi_b: &PureState) -> Result<(CMatrix, CMatrix)> {
        Ok((
            self.channel_a.induced_observable(phi_a)?,
            self.channel_b.induced_observable(phi_b)?,
        ))
    }

    /// Full-system Kraus channel; the Kraus count is the product of the two.
    pub fn joint_channel(&self) -> KrausChannel {
        self.channel_a.tensor(&self.channel_b)
    }

    /// `(E_A ⊗ E_B)(ρ)` on the joint system.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let (da, db) = self.dims();
        check_dim(da * db, rho.dim())?;
        let id_a = CMatrix::identity(da, da);
        let id_b = CMatrix::identity(db, db);
        let r = rho.matrix();
        let after_b = self.channel_b.kraus().iter().fold(CMatrix::zeros(da * db, da * db), |acc, k| {
            let big = linalg::kron(&id_a, k);
            acc + &big * r * big.adjoint()
        });
        let after_a = self.channel_a.kraus().iter().fold(CMatrix::zeros(da * db, da * db), |acc, k| {
            let big = linalg::kron(k, &id_b);
            acc + &big * &after_b * big.adjoint()
        });
        DensityOperator::new(linalg::hermitian_part(&after_a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, random_density_matrix, random_psd, random_unit_vector};
    use crate::quantum::von_neumann_entropy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> DensityOperator {
        DensityOperator::new(random_density_matrix(dim, rng)).unwrap()
    }

    #[test]
    fn identity_channel_leaves_state_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_state(3, &mut rng);
        let out = KrausChannel::identity(3).apply(&rho).unwrap();
        assert!(max_abs(&(out.matrix() - rho.matrix())) < 1e-15);
    }

    #[test]
    fn completeness_holds_for_sample_betas() {
        for beta in [0.0, 0.25, 0.5, 1.0] {
            let ch = block_depolarizing(beta).unwrap();
            let total = ch.kraus().iter().fold(CMatrix::zeros(4, 4), |acc, k| acc + k.adjoint() * k);
            assert!(max_abs(&(total - CMatrix::identity(4, 4))) <= 1e-10, "beta={beta}");
        }
    }

    #[test]
    fn fully_depolarizing_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = block_depolarizing(1.0).unwrap();
        for _ in 0..5 {
            let out = ch.apply(&random_state(4, &mut rng)).unwrap();
            assert!(max_abs(&(out.matrix() - DensityOperator::maximally_mixed(4).matrix())) < 1e-12);
        }
    }

    #[test]
    fn beta_zero_on_00_gives_half_even_projector() {
        let rho = PureState::basis(4, 0).unwrap().density();
        let out = block_depolarizing(0.0).unwrap().apply(&rho).unwrap();
        let expected = BlockDepolarizing::even_projector() * c(0.5, 0.0);
        assert!(max_abs(&(out.matrix() - expected)) < 1e-12);
        assert!((von_neumann_entropy(&out) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn kraus_form_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for beta in [0.0, 0.3, 0.5, 0.9, 1.0] {
            let bd = BlockDepolarizing::new(beta).unwrap();
            let ch = bd.kraus_channel();
            for _ in 0..5 {
                let rho = random_state(4, &mut rng);
                let a = ch.apply(&rho).unwrap();
                let b = bd.apply_direct(&rho).unwrap();
                assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-12);
                let m = random_psd(4, &mut rng);
                let a = ch.adjoint_apply(&m).unwrap();
                let b = bd.adjoint_direct(&m).unwrap();
                assert!(max_abs(&(a - b)) < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_is_unital() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let channels = [
            block_depolarizing(0.3).unwrap(),
            KrausChannel::random(4, 3, &mut rng),
            KrausChannel::identity(4),
        ];
        for ch in &channels {
            let out = ch.adjoint_apply(&CMatrix::identity(4, 4)).unwrap();
            assert!(max_abs(&(out - CMatrix::identity(4, 4))) <= 1e-10);
        }
    }

    #[test]
    fn adjoint_explicit_form_for_rank_one_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let beta = 0.37;
        let ch = block_depolarizing(beta).unwrap();
        for _ in 0..10 {
            let psi = PureState::from_vector(&random_unit_vector(4, &mut rng)).unwrap();
            let m = psi.projector();
            let t = psi.expectation(&BlockDepolarizing::even_projector()).unwrap();
            let expected = BlockDepolarizing::even_projector() * c((1.0 - beta) * t / 2.0, 0.0)
                + BlockDepolarizing::odd_projector() * c((1.0 - beta) * (1.0 - t) / 2.0, 0.0)
                + CMatrix::identity(4, 4) * c(beta / 4.0, 0.0);
            assert!(max_abs(&(ch.adjoint_apply(&m).unwrap() - expected)) < 1e-12);
        }
    }

    #[test]
    fn adjoint_duality_under_trace_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ch = KrausChannel::random(3, 4, &mut rng);
        for _ in 0..50 {
            let x = random_psd(3, &mut rng);
            let rho = random_state(3, &mut rng);
            let lhs = linalg::trace(&(ch.adjoint_apply(&x).unwrap() * rho.matrix()));
            let rhs = linalg::trace(&(&x * ch.apply(&rho).unwrap().matrix()));
            assert!((lhs - rhs).norm() <= 1e-10);
        }
    }

    #[test]
    fn adjoint_rejects_non_hermitian_input() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(block_depolarizing(0.5).unwrap().adjoint_apply(&m).is_err());
    }

    #[test]
    fn induced_observable_examples() {
        let zero = PureState::basis(2, 0).unwrap();
        let k = KrausChannel::identity(2).induced_observable(&zero).unwrap();
        assert!(max_abs(&(k - zero.projector())) < 1e-15);

        let phi = PureState::basis(4, 0).unwrap();
        let spec = linalg::eigenvalues_desc(&block_depolarizing(0.5).unwrap().induced_observable(&phi).unwrap());
        for (got, want) in spec.iter().zip([3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0]) {
            assert!((got - want).abs() < 1e-12);
        }

        // Evaluating the adjoint formula at β = 0, t = 1 gives {1/2, 1/2, 0, 0};
        // the {1, 1, 0, 0} quoted for this case differs only by a factor 2,
        // which cancels in every leakage ratio.
        let spec0 = linalg::eigenvalues_desc(&block_depolarizing(0.0).unwrap().induced_observable(&phi).unwrap());
        for (got, want) in spec0.iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let quoted = [1.0, 1.0, 0.0, 0.0];
        assert!((spec0[0] / spec0[1] - quoted[0] / quoted[1]).abs() < 1e-12);
    }

    #[test]
    fn spectrum_law_over_weight_grid() {
        for beta in [0.0, 0.25, 0.5, 0.8] {
            let bd = BlockDepolarizing::new(beta).unwrap();
            let ch = bd.kraus_channel();
            for i in 0..=10 {
                let t = i as f64 / 10.0;
                let phi = BlockDepolarizing::direction_with_weight(t);
                let got = linalg::eigenvalues_desc(&ch.induced_observable(&phi).unwrap());
                let (v, w) = (bd.v(t), bd.w(t));
                let mut want = [v, v, w, w];
                want.sort_by(|a, b| b.total_cmp(a));
                for (g, e) in got.iter().zip(want) {
                    assert!((g - e).abs() <= 1e-10);
                }
                assert_eq!(bd.induced_spectrum(t), want);
            }
        }
    }

    #[test]
    fn choi_state_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let channels = [block_depolarizing(0.0).unwrap(), block_depolarizing(0.6).unwrap(), KrausChannel::random(4, 2, &mut rng)];
        let mut omega = crate::linalg::CVector::zeros(16);
        for i in 0..4 {
            omega[i * 4 + i] = c(0.5, 0.0);
        }
        let rho = PureState::from_vector(&omega).unwrap().density();
        for ch in channels {
            let extended = ProductMechanism::new(ch, KrausChannel::identity(4));
            let out = extended.apply(&rho).unwrap();
            let min = *linalg::eigenvalues_desc(out.matrix()).last().unwrap();
            assert!(min >= -1e-10);
            assert!((linalg::trace(out.matrix()).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_out_of_range_is_rejected() {
        assert!(block_depolarizing(-0.1).is_err());
        assert!(block_depolarizing(1.1).is_err());
    }

    #[test]
    fn incomplete_kraus_set_is_rejected() {
        assert!(KrausChannel::new(vec![CMatrix::identity(2, 2) * c(0.5, 0.0)]).is_err());
    }

    #[test]
    fn channel_spec_json_round_trip() {
        let spec: ChannelSpec = serde_json::from_str(r#"{"kind": "block_depolarizing", "beta": 0.5}"#).unwrap();
        assert_eq!(spec, ChannelSpec::BlockDepolarizing { beta: 0.5 });

        let flat: ChannelSpec = serde_json::from_str(
            r#"{"kind": "kraus", "dim": 2, "operators": [[[1,0],[0,0],[0,0],[1,0]]]}"#,
        )
        .unwrap();
        assert_eq!(flat.build().unwrap().dim(), 2);

        let rows: ChannelSpec = serde_json::from_str(
            r#"{"kind": "kraus", "dim": 2, "operators": [[[[0,0],[1,0]],[[1,0],[0,0]]]]}"#,
        )
        .unwrap();
        assert!(rows.build().is_ok());

        let bad: ChannelSpec =
            serde_json::from_str(r#"{"kind": "kraus", "dim": 2, "operators": [[[0.5,0],[0,0],[0,0],[0.5,0]]]}"#).unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn trace_preserved_for_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let ch = KrausChannel::random(3, 3, &mut rng);
            let out = ch.apply(&random_state(3, &mut rng)).unwrap();
            assert!((linalg::trace(out.matrix()).re - 1.0).abs() <= 1e-12);
        }
    }
}
