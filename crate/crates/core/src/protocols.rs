//! Constructive achievability: synthesizes the explicit measure-and-prepare
//! channels behind the one-shot preparation and erasure theorems, accounts
//! for battery work, and verifies end to end.
//!
//! Battery dims are integer ceilings of the proofs' real-valued bounds; both
//! the ideal (real) and integer works are reported so the rounding gap stays
//! visible. Batteries are kept at dense-Choi-friendly sizes so every
//! synthesized channel can be pushed through the covariance predicate.

use crate::channels::{
    apply_channel_op, compose_channels, identity_channel, is_cond_thermal_covariant,
    permutation_channel, tensor_channels, ChoiOperator, ThermoOperation,
};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator, SubsystemDims};
use crate::smoothing::{
    i_max_up_smoothed, i_min_down_smoothed, SmoothParams, SmoothedWitness,
};
use crate::states::{DensityOperator, ThermoState};

/// Hard cap on battery dimensions.
pub const BATTERY_DIM_CAP: u64 = 1 << 20;
/// Largest Choi dimension the builders will materialize densely.
pub const MAX_CHOI_DIM: usize = 4096;

#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub smooth: SmoothParams,
    /// Output battery dimension |A_1| for erasure (the proof takes it to
    /// infinity; larger values shrink the integer rounding loss).
    pub erasure_battery_out: usize,
    pub max_choi_dim: usize,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            smooth: SmoothParams::default(),
            erasure_battery_out: 8,
            max_choi_dim: MAX_CHOI_DIM,
        }
    }
}

/// A synthesized free operation over battery (x) system together with its
/// work ledger.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub operation: ThermoOperation,
    pub d_battery_in: usize,
    pub d_battery_out: usize,
    /// Work of the real-valued (pre-rounding) construction, in bits.
    pub ideal_work_bits: f64,
    /// Work actually charged by the integer battery dims, in bits.
    pub integer_work_bits: f64,
    pub target_error: f64,
    sys_in: SubsystemDims,
    sys_out: SubsystemDims,
    gamma_sys_in: DensityOperator,
    gamma_sys_out: DensityOperator,
    composite_of: Option<Box<(Protocol, Protocol)>>,
}

impl Protocol {
    pub fn sys_in_dims(&self) -> &SubsystemDims {
        &self.sys_in
    }

    pub fn sys_out_dims(&self) -> &SubsystemDims {
        &self.sys_out
    }

    pub fn gamma_sys_in(&self) -> &DensityOperator {
        &self.gamma_sys_in
    }

    pub fn gamma_sys_out(&self) -> &DensityOperator {
        &self.gamma_sys_out
    }

    /// Covariance residual of the protocol channel: the dense Choi predicate
    /// for atomic protocols, and for composites the data-processing bound
    /// d_in * b * r_second + b' * r_first, which upper-bounds the true
    /// residual and vanishes with the parts' residuals.
    pub fn covariance_residual_bound(&self) -> Result<f64> {
        match &self.composite_of {
            None => {
                let (_, r) = is_cond_thermal_covariant(&self.operation, 1e-7)?;
                Ok(r)
            }
            Some(parts) => {
                let r1 = parts.0.covariance_residual_bound()?;
                let r2 = parts.1.covariance_residual_bound()?;
                let d_in = self.operation.channel.d_in() as f64;
                let ext2 = parts.0.d_battery_out as f64;
                let ext1 = parts.1.d_battery_in as f64;
                Ok(d_in * ext2 * r2 + ext1 * r1)
            }
        }
    }

    fn check_ledger(&self) -> Result<()> {
        if self.integer_work_bits < self.ideal_work_bits - 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "integer work {} fell below ideal work {}",
                self.integer_work_bits, self.ideal_work_bits
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerificationReport {
    pub covariance_residual: f64,
    pub achieved_error: f64,
    pub work_bits: f64,
    pub pass: bool,
}

/// Clips tiny negative eigenvalues (solver noise) from a nominally PSD
/// operator.
fn clip_psd(m: &HermitianOperator) -> HermitianOperator {
    m.powf_on_support(1.0, 0.0)
}

/// Clips the spectrum into [0, 1].
fn clip_to_box(m: &HermitianOperator) -> Result<HermitianOperator> {
    let eig = m.eig()?;
    let d = m.dim();
    let diag = nalgebra::DVector::from_iterator(
        d,
        eig.values
            .iter()
            .map(|&v| nalgebra::Complex::new(v.clamp(0.0, 1.0), 0.0)),
    );
    let mat = &eig.vectors * CMatrix::from_diagonal(&diag) * eig.vectors.adjoint();
    Ok(HermitianOperator::from_herm_unchecked(mat))
}

fn two_outcome_choi(
    effect: &HermitianOperator,
    prep_hit: &HermitianOperator,
    prep_miss: &HermitianOperator,
) -> HermitianOperator {
    let d_in = effect.dim();
    let d_out = prep_hit.dim();
    let mut j = CMatrix::zeros(d_in * d_out, d_in * d_out);
    let e = effect.matrix();
    let h = prep_hit.matrix();
    let m = prep_miss.matrix();
    for i in 0..d_in {
        for jj in 0..d_in {
            // transpose of the effect enters the Choi block structure
            let w_hit = e[(jj, i)];
            let w_miss = (if i == jj {
                nalgebra::Complex::new(1.0, 0.0)
            } else {
                nalgebra::Complex::new(0.0, 0.0)
            }) - w_hit;
            for k in 0..d_out {
                for l in 0..d_out {
                    j[(i * d_out + k, jj * d_out + l)] = w_hit * h[(k, l)] + w_miss * m[(k, l)];
                }
            }
        }
    }
    HermitianOperator::from_herm_unchecked(j)
}

fn battery_dim(x: f64) -> Result<usize> {
    let v = (x - 1e-12).ceil().max(1.0);
    if v > BATTERY_DIM_CAP as f64 {
        return Err(Error::BatteryOverflow(v as u64));
    }
    Ok(v as usize)
}

/// Builds the preparation channel N_{A0 A -> A1 A B} from the smoothed
/// max-mutual-information witness: the witness tau is lifted to a
/// normalized state on the output battery and the two-outcome
/// measure-and-prepare channel of the achievability proof is assembled.
pub fn build_preparation_protocol(
    ts: &ThermoState,
    eps: f64,
    params: &ProtocolParams,
) -> Result<Protocol> {
    let d_a = ts.dim_a();
    let d_b = ts.dim_b();
    let smoothed = i_max_up_smoothed(ts, eps, &params.smooth)?;
    let SmoothedWitness::Ball { t, tau, sigma_b } = &smoothed.witness else {
        return Err(Error::InvalidParameter("witness missing".into()));
    };
    let t = *t;
    // witness cleanup: solver noise is clipped; everything is re-verified
    // end to end afterwards
    let tau = clip_psd(tau);
    let sigma = clip_psd(sigma_b);
    let sigma = sigma.scale(1.0 / sigma.trace());
    let tau_b = tau.partial_trace(&SubsystemDims::new(&[d_a, d_b])?, &[1])?;
    let diff = clip_psd(&sigma.sub(&tau_b));

    let d_bat_out = battery_dim(1.0 + 1.0 / t)?.max(2);
    let d_bat_in = battery_dim(t * d_bat_out as f64 / d_a as f64)?;

    // tau' = |0><0| (x) tau + (1 - |0><0|)/(|A1|-1) (x) gamma (x) (sigma - tau_B)
    let mut rest = HermitianOperator::identity(d_bat_out);
    rest = rest.sub(&HermitianOperator::basis_projector(d_bat_out, 0));
    rest = rest.scale(1.0 / (d_bat_out as f64 - 1.0));
    let lifted = HermitianOperator::basis_projector(d_bat_out, 0)
        .tensor(&tau)
        .add(&rest.tensor(&ts.gamma().op().tensor(&diff)));
    let lifted = lifted.scale(1.0 / lifted.trace());

    let d_out_total = d_bat_out * d_a * d_b;
    let d_in_total = d_bat_in * d_a;
    if d_in_total * d_out_total > params.max_choi_dim {
        return Err(Error::InvalidParameter(format!(
            "preparation choi dim {} exceeds cap {}; lower the battery dims",
            d_in_total * d_out_total,
            params.max_choi_dim
        )));
    }

    // second preparation: (|A0||A| pi_{A1} (x) gamma (x) sigma - tau') / (|A0||A| - 1)
    let scale_big = (d_bat_in * d_a) as f64;
    let pi_out = HermitianOperator::identity(d_bat_out).scale(1.0 / d_bat_out as f64);
    let bound = pi_out.tensor(&ts.gamma().op().tensor(&sigma)).scale(scale_big);
    let mut miss = bound.sub(&lifted);
    if miss.min_eigenvalue() < -1e-7 {
        return Err(Error::InvalidParameter(format!(
            "preparation witness violates the battery bound by {:.3e}",
            -miss.min_eigenvalue()
        )));
    }
    miss = clip_psd(&miss);
    let miss = miss.scale(1.0 / miss.trace());

    let effect = HermitianOperator::basis_projector(d_in_total, 0);
    let choi_op = two_outcome_choi(&effect, &lifted, &miss);
    let channel = ChoiOperator::new(
        choi_op,
        SubsystemDims::new(&[d_in_total, 1])?,
        SubsystemDims::new(&[d_bat_out * d_a, d_b])?,
    )?;
    let pi_in = DensityOperator::new(
        HermitianOperator::identity(d_in_total).scale(1.0 / d_in_total as f64),
        SubsystemDims::new(&[d_in_total])?,
    )?;
    let gamma_out = DensityOperator::new(
        pi_out.tensor(ts.gamma().op()),
        SubsystemDims::new(&[d_bat_out * d_a])?,
    )?;
    let operation = ThermoOperation::new(channel, pi_in, gamma_out)?;

    let ideal = smoothed.bits - (d_a as f64).log2();
    let integer = (d_bat_in as f64).log2() - (d_bat_out as f64).log2();
    let proto = Protocol {
        operation,
        d_battery_in: d_bat_in,
        d_battery_out: d_bat_out,
        ideal_work_bits: ideal,
        integer_work_bits: integer,
        target_error: eps,
        sys_in: SubsystemDims::new(&[d_a, 1])?,
        sys_out: SubsystemDims::new(&[d_a, d_b])?,
        gamma_sys_in: DensityOperator::new(
            HermitianOperator::identity(d_a).scale(1.0 / d_a as f64),
            SubsystemDims::new(&[d_a])?,
        )?,
        gamma_sys_out: ts.gamma().clone(),
        composite_of: None,
    };
    proto.check_ledger()?;
    Ok(proto)
}

/// Builds the erasure channel N_{A0 A B -> A1 A} from the smoothed
/// min-mutual-information test operator via the Omega construction.
pub fn build_erasure_protocol(
    ts: &ThermoState,
    eps: f64,
    params: &ProtocolParams,
) -> Result<Protocol> {
    let d_a = ts.dim_a();
    let d_b = ts.dim_b();
    if params.erasure_battery_out < 2 {
        return Err(Error::InvalidParameter(
            "erasure battery |A1| must be at least 2".into(),
        ));
    }
    let smoothed = i_min_down_smoothed(ts, eps, &params.smooth)?;
    let SmoothedWitness::Test { lambda } = &smoothed.witness else {
        return Err(Error::InvalidParameter("witness missing".into()));
    };
    let lambda = clip_to_box(lambda)?;
    let sqrt_gamma = ts.gamma().op().powf_on_support(0.5, 1e-14);
    let weighted = sqrt_gamma
        .tensor(&HermitianOperator::identity(d_b))
        .sandwich(&lambda);
    let traced = weighted.partial_trace(&SubsystemDims::new(&[d_a, d_b])?, &[1])?;
    // lambda in [0,1] makes this at most 1
    let t = traced.op_norm();

    let d_bat_out = params.erasure_battery_out;
    let denom = (d_bat_out * d_a) as f64;
    let d_bat_in = battery_dim(denom * t)?.max(2);
    if (d_bat_in as f64) > denom + 1e-9 {
        return Err(Error::InvalidParameter(
            "erasure battery bound exceeded; test operator norm above one".into(),
        ));
    }

    let d_in_total = d_bat_in * d_a * d_b;
    let d_out_total = d_bat_out * d_a;
    if d_in_total * d_out_total > params.max_choi_dim {
        return Err(Error::InvalidParameter(format!(
            "erasure choi dim {} exceeds cap {}; lower erasure_battery_out",
            d_in_total * d_out_total,
            params.max_choi_dim
        )));
    }

    // Omega = |0><0| (x) Lambda + |1><1| (x) 1_A (x) (|A0|/(|A1||A|) 1_B - Tr_A[Lambda gamma])
    let level = d_bat_in as f64 / denom;
    let d_op = HermitianOperator::identity(d_b).scale(level).sub(&traced);
    let omega = HermitianOperator::basis_projector(d_bat_in, 0)
        .tensor(&lambda)
        .add(
            &HermitianOperator::basis_projector(d_bat_in, 1)
                .tensor(&HermitianOperator::identity(d_a).tensor(&d_op)),
        );

    let hit = HermitianOperator::basis_projector(d_out_total, 0);
    let mut miss = HermitianOperator::identity(d_out_total).sub(&hit);
    miss = miss.scale(1.0 / (d_out_total as f64 - 1.0));
    let choi_op = two_outcome_choi(&omega, &hit, &miss);
    let channel = ChoiOperator::new(
        choi_op,
        SubsystemDims::new(&[d_bat_in * d_a, d_b])?,
        SubsystemDims::new(&[d_out_total, 1])?,
    )?;
    let pi_bat_in = HermitianOperator::identity(d_bat_in).scale(1.0 / d_bat_in as f64);
    let gamma_in = DensityOperator::new(
        pi_bat_in.tensor(ts.gamma().op()),
        SubsystemDims::new(&[d_bat_in * d_a])?,
    )?;
    let pi_out = DensityOperator::new(
        HermitianOperator::identity(d_out_total).scale(1.0 / d_out_total as f64),
        SubsystemDims::new(&[d_out_total])?,
    )?;
    let operation = ThermoOperation::new(channel, gamma_in, pi_out)?;

    let ideal = (d_a as f64).log2() + t.log2();
    let integer = (d_bat_in as f64).log2() - (d_bat_out as f64).log2();
    let proto = Protocol {
        operation,
        d_battery_in: d_bat_in,
        d_battery_out: d_bat_out,
        ideal_work_bits: ideal,
        integer_work_bits: integer,
        target_error: eps,
        sys_in: SubsystemDims::new(&[d_a, d_b])?,
        sys_out: SubsystemDims::new(&[d_a, 1])?,
        gamma_sys_in: ts.gamma().clone(),
        gamma_sys_out: DensityOperator::new(
            HermitianOperator::identity(d_a).scale(1.0 / d_a as f64),
            SubsystemDims::new(&[d_a])?,
        )?,
        composite_of: None,
    };
    proto.check_ledger()?;
    Ok(proto)
}

/// Runs the protocol on `input`, compares against the target, and checks
/// the covariance predicate.
pub fn verify_protocol(
    p: &Protocol,
    input: &ThermoState,
    target: &DensityOperator,
    eps: f64,
) -> Result<VerificationReport> {
    let full_in = HermitianOperator::basis_projector(p.d_battery_in, 0).tensor(input.rho().op());
    let out = apply_channel_op(&p.operation.channel, &full_in)?;
    let expected =
        HermitianOperator::basis_projector(p.d_battery_out, 0).tensor(target.op());
    let achieved_error = 0.5 * out.sub(&expected).trace_norm();
    let covariance_residual = p.covariance_residual_bound()?;
    let pass = covariance_residual <= 1e-7 && achieved_error <= eps + 1e-6;
    Ok(VerificationReport {
        covariance_residual,
        achieved_error,
        work_bits: p.integer_work_bits,
        pass,
    })
}

/// Sequential composition; batteries multiply and the work ledgers add.
pub fn compose_protocols(p1: &Protocol, p2: &Protocol, max_choi_dim: usize) -> Result<Protocol> {
    if p1.sys_out.dims() != p2.sys_in.dims() {
        return Err(Error::DimMismatch(format!(
            "interface mismatch: {:?} vs {:?}",
            p1.sys_out.dims(),
            p2.sys_in.dims()
        )));
    }
    if p1
        .gamma_sys_out
        .op()
        .sub(p2.gamma_sys_in.op())
        .trace_norm()
        > 1e-9
    {
        return Err(Error::InvalidParameter(
            "interface Gibbs states differ".into(),
        ));
    }
    let (b1, b2) = (p1.d_battery_in, p2.d_battery_in);
    let (b1o, b3) = (p1.d_battery_out, p2.d_battery_out);
    let (da, db) = (p1.sys_in.dim(0), p1.sys_in.dim(1));
    let (da_mid, db_mid) = (p1.sys_out.dim(0), p1.sys_out.dim(1));
    let (da_out, db_out) = (p2.sys_out.dim(0), p2.sys_out.dim(1));

    let d_in_total = b1 * b2 * da * db;
    let d_out_total = b1o * b3 * da_out * db_out;
    if d_in_total * d_out_total > max_choi_dim {
        return Err(Error::DimMismatch(format!(
            "composite choi dim {} exceeds cap {max_choi_dim}",
            d_in_total * d_out_total
        )));
    }

    // [b1, b2, A, B] -> [b1, A, B, b2]
    let perm_in = permutation_channel(&SubsystemDims::new(&[b1, b2, da, db])?, &[0, 2, 3, 1])?;
    let step1 = tensor_channels(
        &p1.operation.channel,
        &identity_channel(&SubsystemDims::new(&[b2])?),
    );
    let acc = compose_channels(&step1, &perm_in)?;
    // [b1out, A'', B'', b2] -> [b2, A'', B'', b1out]
    let perm_mid = permutation_channel(
        &SubsystemDims::new(&[b1o, da_mid, db_mid, b2])?,
        &[3, 1, 2, 0],
    )?;
    let acc = compose_channels(&perm_mid, &acc)?;
    let step2 = tensor_channels(
        &p2.operation.channel,
        &identity_channel(&SubsystemDims::new(&[b1o])?),
    );
    let acc = compose_channels(&step2, &acc)?;
    // [b3, A', B', b1out] -> [b1out, b3, A', B']
    let perm_out = permutation_channel(
        &SubsystemDims::new(&[b3, da_out, db_out, b1o])?,
        &[3, 0, 1, 2],
    )?;
    let acc = compose_channels(&perm_out, &acc)?;

    let channel = ChoiOperator::new(
        acc.op().clone(),
        SubsystemDims::new(&[b1 * b2 * da, db])?,
        SubsystemDims::new(&[b1o * b3 * da_out, db_out])?,
    )?;
    let pi_bat_in = HermitianOperator::identity(b1 * b2).scale(1.0 / (b1 * b2) as f64);
    let gamma_in = DensityOperator::new(
        pi_bat_in.tensor(p1.gamma_sys_in.op()),
        SubsystemDims::new(&[b1 * b2 * da])?,
    )?;
    let pi_bat_out = HermitianOperator::identity(b1o * b3).scale(1.0 / (b1o * b3) as f64);
    let gamma_out = DensityOperator::new(
        pi_bat_out.tensor(p2.gamma_sys_out.op()),
        SubsystemDims::new(&[b1o * b3 * da_out])?,
    )?;
    let operation = ThermoOperation::new(channel, gamma_in, gamma_out)?;

    let proto = Protocol {
        operation,
        d_battery_in: b1 * b2,
        d_battery_out: b1o * b3,
        ideal_work_bits: p1.ideal_work_bits + p2.ideal_work_bits,
        integer_work_bits: p1.integer_work_bits + p2.integer_work_bits,
        target_error: p1.target_error + p2.target_error,
        sys_in: p1.sys_in.clone(),
        sys_out: p2.sys_out.clone(),
        gamma_sys_in: p1.gamma_sys_in.clone(),
        gamma_sys_out: p2.gamma_sys_out.clone(),
        composite_of: Some(Box::new((p1.clone(), p2.clone()))),
    };
    proto.check_ledger()?;
    Ok(proto)
}

/// Work-neutral identity protocol on a system, for composition tests.
pub fn identity_protocol(gamma_sys: &DensityOperator, d_b: usize) -> Result<Protocol> {
    let d_a = gamma_sys.dim();
    let dims = SubsystemDims::new(&[d_a, d_b])?;
    let channel = identity_channel(&dims);
    let operation = ThermoOperation::new(channel, gamma_sys.clone(), gamma_sys.clone())?;
    Ok(Protocol {
        operation,
        d_battery_in: 1,
        d_battery_out: 1,
        ideal_work_bits: 0.0,
        integer_work_bits: 0.0,
        target_error: 0.0,
        sys_in: dims.clone(),
        sys_out: dims,
        gamma_sys_in: gamma_sys.clone(),
        gamma_sys_out: gamma_sys.clone(),
        composite_of: None,
    })
}

/// The default pure state |0><0|_A with trivial B, as a thermo state with
/// uniform Gibbs reference (trivial Hamiltonian).
pub fn default_pure_input(d_a: usize) -> Result<ThermoState> {
    let rho = DensityOperator::new(
        HermitianOperator::basis_projector(d_a, 0).tensor(&HermitianOperator::identity(1)),
        SubsystemDims::new(&[d_a, 1])?,
    )?;
    let pi = DensityOperator::new(
        HermitianOperator::identity(d_a).scale(1.0 / d_a as f64),
        SubsystemDims::new(&[d_a])?,
    )?;
    ThermoState::new(rho, pi)
}
