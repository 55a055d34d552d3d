//! Density operators, Gibbs states, special states, distances, and the
//! seeded random-state corpus generators.

use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix, HermitianOperator, SubsystemDims, RANK_TOL};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
/// Relative floor below which a Gibbs state counts as rank deficient.
const FULL_RANK_TOL: f64 = 1e-12;

/// Positive semidefinite, unit-trace operator with declared subsystem dims.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: HermitianOperator,
    dims: SubsystemDims,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator, dims: SubsystemDims) -> Result<Self> {
        Self::with_tols(op, dims, PSD_TOL, TRACE_TOL)
    }

    pub fn with_tols(
        op: HermitianOperator,
        dims: SubsystemDims,
        psd_tol: f64,
        trace_tol: f64,
    ) -> Result<Self> {
        if dims.product() != op.dim() {
            return Err(Error::DimMismatch(format!(
                "dims product {} != operator dim {}",
                dims.product(),
                op.dim()
            )));
        }
        let min_eig = op.min_eigenvalue();
        if min_eig < -psd_tol {
            return Err(Error::NotPsd(min_eig));
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > trace_tol {
            return Err(Error::BadTrace {
                trace: tr,
                expected: 1.0,
                tol: trace_tol,
            });
        }
        Ok(Self { op, dims })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dims(&self) -> &SubsystemDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Marginal on the listed factors.
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityOperator> {
        let op = self.op.partial_trace(&self.dims, keep)?;
        let dims = self.dims.select(keep)?;
        DensityOperator::with_tols(op, dims, 1e-7, 1e-7)
    }

    pub fn purity(&self) -> f64 {
        self.op.inner(&self.op)
    }
}

/// Positive semidefinite operator with trace at most one.
#[derive(Debug, Clone)]
pub struct SubnormalizedState {
    op: HermitianOperator,
    dims: SubsystemDims,
}

impl SubnormalizedState {
    pub fn new(op: HermitianOperator, dims: SubsystemDims) -> Result<Self> {
        Self::with_tols(op, dims, PSD_TOL, TRACE_TOL)
    }

    pub fn with_tols(
        op: HermitianOperator,
        dims: SubsystemDims,
        psd_tol: f64,
        trace_tol: f64,
    ) -> Result<Self> {
        if dims.product() != op.dim() {
            return Err(Error::DimMismatch(format!(
                "dims product {} != operator dim {}",
                dims.product(),
                op.dim()
            )));
        }
        let min_eig = op.min_eigenvalue();
        if min_eig < -psd_tol {
            return Err(Error::NotPsd(min_eig));
        }
        let tr = op.trace();
        if tr > 1.0 + trace_tol || tr < -trace_tol {
            return Err(Error::BadTrace {
                trace: tr,
                expected: 1.0,
                tol: trace_tol,
            });
        }
        Ok(Self { op, dims })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dims(&self) -> &SubsystemDims {
        &self.dims
    }
}

impl From<DensityOperator> for SubnormalizedState {
    fn from(d: DensityOperator) -> Self {
        Self {
            op: d.op,
            dims: d.dims,
        }
    }
}

/// Couple of a bipartite state rho_AB and the (full rank) Gibbs state of A.
#[derive(Debug, Clone)]
pub struct ThermoState {
    rho: DensityOperator,
    gamma: DensityOperator,
}

impl ThermoState {
    pub fn new(rho: DensityOperator, gamma: DensityOperator) -> Result<Self> {
        if rho.dims().len() != 2 {
            return Err(Error::DimMismatch(format!(
                "thermo state needs bipartite dims [|A|,|B|], got {:?}",
                rho.dims().dims()
            )));
        }
        if gamma.dim() != rho.dims().dim(0) {
            return Err(Error::DimMismatch(format!(
                "gamma dim {} != |A| = {}",
                gamma.dim(),
                rho.dims().dim(0)
            )));
        }
        let eig = gamma.op().eig()?;
        let lam_max = eig.values[0];
        let lam_min = *eig.values.last().unwrap();
        if lam_min <= FULL_RANK_TOL * lam_max {
            return Err(Error::RankDeficientGibbs(lam_min));
        }
        Ok(Self { rho, gamma })
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn gamma(&self) -> &DensityOperator {
        &self.gamma
    }

    pub fn dim_a(&self) -> usize {
        self.rho.dims().dim(0)
    }

    pub fn dim_b(&self) -> usize {
        self.rho.dims().dim(1)
    }

    pub fn rho_b(&self) -> Result<DensityOperator> {
        self.rho.marginal(&[1])
    }

    pub fn rho_a(&self) -> Result<DensityOperator> {
        self.rho.marginal(&[0])
    }

    /// gamma_A (x) rho_B, the conditionally Gibbs reference point.
    pub fn gibbs_reference(&self) -> Result<HermitianOperator> {
        Ok(self.gamma.op().tensor(self.rho_b()?.op()))
    }
}

/// Hamiltonian of one of Alice's systems, in units where beta_b * E is
/// dimensionless.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    op: HermitianOperator,
}

impl Hamiltonian {
    pub fn new(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn trivial(dim: usize) -> Self {
        Self {
            op: HermitianOperator::zeros(dim),
        }
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// Gibbs state e^{-beta H} / Tr[e^{-beta H}] with beta = beta_b * ln 2.
pub fn gibbs_state(h: &Hamiltonian, beta_b: f64) -> Result<DensityOperator> {
    if !(beta_b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta_b must be positive, got {beta_b}"
        )));
    }
    let eig = h.op().eig()?;
    let beta = beta_b * std::f64::consts::LN_2;
    // log-sum-exp for stability
    let e_min = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig.values.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let d = h.dim();
    let diag = DVector::from_iterator(d, weights.iter().map(|&w| C64::new(w / z, 0.0)));
    let mat = &eig.vectors * CMatrix::from_diagonal(&diag) * eig.vectors.adjoint();
    DensityOperator::new(
        HermitianOperator::from_herm_unchecked(mat),
        SubsystemDims::new(&[d])?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialState {
    /// pi_dA = 1/dA (tensored with pi_dB when dB > 1)
    Uniform,
    /// |0><0|_dA (tensored with pi_dB when dB > 1)
    PureDefault,
    /// Phi = (1/dA) sum_{i,j} |ii><jj|, requires dA == dB
    MaxEntangled,
    /// Phi-bar = (1/dA) sum_i |ii><ii|, requires dA == dB
    MaxClassical,
}

pub fn special_state(kind: SpecialState, d_a: usize, d_b: usize) -> Result<DensityOperator> {
    if d_a == 0 || d_b == 0 {
        return Err(Error::InvalidParameter("dims must be positive".into()));
    }
    match kind {
        SpecialState::Uniform | SpecialState::PureDefault => {
            let a = match kind {
                SpecialState::Uniform => {
                    HermitianOperator::identity(d_a).scale(1.0 / d_a as f64)
                }
                _ => HermitianOperator::basis_projector(d_a, 0),
            };
            if d_b == 1 {
                DensityOperator::new(a, SubsystemDims::new(&[d_a])?)
            } else {
                let b = HermitianOperator::identity(d_b).scale(1.0 / d_b as f64);
                DensityOperator::new(a.tensor(&b), SubsystemDims::new(&[d_a, d_b])?)
            }
        }
        SpecialState::MaxEntangled => {
            if d_a != d_b {
                return Err(Error::DimMismatch(format!(
                    "maximally entangled state needs dA == dB, got {d_a} x {d_b}"
                )));
            }
            let d = d_a;
            let mut m = CMatrix::zeros(d * d, d * d);
            for i in 0..d {
                for j in 0..d {
                    m[(i * d + i, j * d + j)] = C64::new(1.0 / d as f64, 0.0);
                }
            }
            DensityOperator::new(
                HermitianOperator::from_herm_unchecked(m),
                SubsystemDims::new(&[d, d])?,
            )
        }
        SpecialState::MaxClassical => {
            if d_a != d_b {
                return Err(Error::DimMismatch(format!(
                    "maximally classically correlated state needs dA == dB, got {d_a} x {d_b}"
                )));
            }
            let d = d_a;
            let mut m = CMatrix::zeros(d * d, d * d);
            for i in 0..d {
                m[(i * d + i, i * d + i)] = C64::new(1.0 / d as f64, 0.0);
            }
            DensityOperator::new(
                HermitianOperator::from_herm_unchecked(m),
                SubsystemDims::new(&[d, d])?,
            )
        }
    }
}

/// (1/2) || rho - sigma ||_1 for normalized states.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch(format!(
            "trace distance needs equal dims, got {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(0.5 * rho.op().sub(sigma.op()).trace_norm())
}

/// Generalized trace distance (1/2)(||rho - tau||_1 + |Tr rho - Tr tau|)
/// on subnormalized operators.
pub fn gen_trace_distance(rho: &HermitianOperator, tau: &HermitianOperator) -> Result<f64> {
    if rho.dim() != tau.dim() {
        return Err(Error::DimMismatch(format!(
            "generalized trace distance needs equal dims, got {} vs {}",
            rho.dim(),
            tau.dim()
        )));
    }
    let one_norm = rho.sub(tau).trace_norm();
    Ok(0.5 * (one_norm + (rho.trace() - tau.trace()).abs()))
}

/// Membership in the eps-ball of subnormalized states around rho.
pub fn in_epsilon_ball(
    rho: &DensityOperator,
    tau: &SubnormalizedState,
    eps: f64,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in [0,1], got {eps}"
        )));
    }
    Ok(gen_trace_distance(rho.op(), tau.op())? <= eps + 1e-9)
}

/// Rank-revealing purification; the purifying factor C is appended as the
/// last subsystem with |C| = rank(rho).
pub fn purify(rho: &DensityOperator) -> Result<DensityOperator> {
    let eig = rho.op().eig()?;
    let lam_max = eig.values[0].max(0.0);
    let thr = RANK_TOL * lam_max;
    let rank = eig.values.iter().filter(|&&v| v > thr).count().max(1);
    let d = rho.dim();
    let mut psi = nalgebra::DVector::<C64>::zeros(d * rank);
    for (c, &lam) in eig.values.iter().take(rank).enumerate() {
        let amp = lam.max(0.0).sqrt();
        for r in 0..d {
            psi[r * rank + c] += eig.vectors[(r, c)] * C64::new(amp, 0.0);
        }
    }
    let mat = &psi * psi.adjoint();
    let dims = rho.dims().concat(&SubsystemDims::new(&[rank])?);
    DensityOperator::with_tols(
        HermitianOperator::from_herm_unchecked(mat),
        dims,
        1e-7,
        1e-7,
    )
}

fn random_unit_vector(rng: &mut ChaCha12Rng, dim: usize) -> DVector<C64> {
    let mut v = DVector::<C64>::zeros(dim);
    for k in 0..dim {
        // Box-Muller from uniform draws keeps the stream portable.
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        v[k] = C64::new(
            r * (2.0 * std::f64::consts::PI * u2).cos(),
            r * (2.0 * std::f64::consts::PI * u2).sin(),
        );
    }
    let n = v.norm();
    v.scale_mut(1.0 / n);
    v
}

/// Deterministic random density operator of the given Schmidt rank, produced
/// as the partial trace of a random pure state.
pub fn random_state(dims: &SubsystemDims, rank: usize, seed: u64) -> Result<DensityOperator> {
    let d = dims.product();
    if rank == 0 || rank > d {
        return Err(Error::InvalidParameter(format!(
            "rank must lie in 1..={d}, got {rank}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let psi = random_unit_vector(&mut rng, d * rank);
    let mut rho = CMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..rank {
                acc += psi[r * rank + k] * psi[c * rank + k].conj();
            }
            rho[(r, c)] = acc;
        }
    }
    DensityOperator::new(HermitianOperator::from_herm_unchecked(rho), dims.clone())
}

/// Random bipartite state paired with the Gibbs state of the given
/// Hamiltonian on A.
pub fn random_thermo_state(
    dims: &SubsystemDims,
    h: &Hamiltonian,
    beta_b: f64,
    seed: u64,
) -> Result<ThermoState> {
    if dims.len() != 2 {
        return Err(Error::DimMismatch(format!(
            "thermo state needs bipartite dims, got {:?}",
            dims.dims()
        )));
    }
    if h.dim() != dims.dim(0) {
        return Err(Error::DimMismatch(format!(
            "hamiltonian dim {} != |A| = {}",
            h.dim(),
            dims.dim(0)
        )));
    }
    let rho = random_state(dims, dims.product(), seed)?;
    let gamma = gibbs_state(h, beta_b)?;
    ThermoState::new(rho, gamma)
}

/// Whether rho_AB is conditionally Gibbs, i.e. equal to gamma_A (x) rho_B.
pub fn is_conditionally_gibbs(ts: &ThermoState, tol: f64) -> Result<bool> {
    let reference = ts.gibbs_reference()?;
    Ok(ts.rho().op().sub(&reference).trace_norm() <= tol)
}
