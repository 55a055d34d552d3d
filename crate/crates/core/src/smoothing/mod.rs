//! The SDP engine and every eps-smoothed quantity.
//!
//! Smoothing balls follow the generalized-trace-distance convention on
//! subnormalized states; the ball membership inside SDPs is encoded through
//! the P/N trace-norm decomposition rho - tau = P - N with P, N >= 0, which
//! is exact for feasibility (Tr P + Tr N >= ||rho - tau||_1 with equality
//! achievable at the Jordan decomposition).

mod oracle;
mod sdp;

pub use oracle::{classical_oracle, OracleKind};
pub use sdp::{sdp_solve, BlockId, SdpParams, SdpProblem, SdpSolution};

use crate::divergences::d_max;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator, SubsystemDims};
use crate::states::{gen_trace_distance, DensityOperator, ThermoState};

/// Parameters shared by the smoothed-quantity solvers.
#[derive(Debug, Clone, Copy)]
pub struct SmoothParams {
    pub sdp: SdpParams,
    /// Bisection bracket width, in bits, for quantities solved by
    /// log-bisection over a per-t feasibility SDP.
    pub bisect_tol_bits: f64,
    /// Slack added to eps when testing per-t ball feasibility, absorbing
    /// solver noise at the boundary.
    pub feas_slack: f64,
}

impl Default for SmoothParams {
    fn default() -> Self {
        Self {
            sdp: SdpParams::default(),
            bisect_tol_bits: 1e-4,
            feas_slack: 1e-7,
        }
    }
}

impl SmoothParams {
    pub fn with_bisect_tol(bits: f64) -> Self {
        Self {
            bisect_tol_bits: bits,
            ..Self::default()
        }
    }
}

/// Optimal witness returned alongside a smoothed value.
#[derive(Debug, Clone)]
pub enum SmoothedWitness {
    /// Optimal test operator Lambda for sup-type (hypothesis-testing)
    /// quantities.
    Test { lambda: HermitianOperator },
    /// Optimal (t, tau, sigma_B) triple for ball-smoothed max quantities.
    Ball {
        t: f64,
        tau: HermitianOperator,
        sigma_b: HermitianOperator,
    },
}

#[derive(Debug, Clone)]
pub struct SmoothedValue {
    pub bits: f64,
    pub eps: f64,
    pub witness: SmoothedWitness,
}

fn check_eps_sup(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in [0,1) for smoothed quantities, got {eps}"
        )));
    }
    Ok(())
}

fn ptrace_a_raw(m: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d_b, d_b);
    for i in 0..d_b {
        for j in 0..d_b {
            let mut acc = nalgebra::Complex::new(0.0, 0.0);
            for a in 0..d_a {
                acc += m[(a * d_b + i, a * d_b + j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Smoothed generalized min-mutual information: sup over tests Lambda of
/// -log2 ||Tr_A[Lambda gamma_A]||_inf subject to 0 <= Lambda <= 1 and
/// Tr[Lambda rho] >= 1 - eps, as one direct SDP.
pub fn i_min_down_smoothed(
    ts: &ThermoState,
    eps: f64,
    params: &SmoothParams,
) -> Result<SmoothedValue> {
    check_eps_sup(eps)?;
    let d_a = ts.dim_a();
    let d_b = ts.dim_b();
    let d = d_a * d_b;
    let rho = ts.rho().op().clone();
    let sqrt_gamma = ts.gamma().op().powf_on_support(0.5, 1e-14);
    let sqrt_gamma_ext = sqrt_gamma.tensor(&HermitianOperator::identity(d_b));

    let mut p = SdpProblem::new();
    let lam = p.add_hermitian_block("lambda", d);
    let t = p.add_scalar_block("t");
    p.set_objective_min(&[(t, HermitianOperator::identity(1))], 0.0);
    p.add_psd_from_block(lam, 1.0, &HermitianOperator::zeros(d));
    p.add_psd_from_block(lam, -1.0, &HermitianOperator::identity(d));
    p.add_scalar_ineq(&[(lam, rho)], 1.0 - eps);
    p.add_psd_map(d_b, &[lam, t], |blocks| {
        let lam_m = &blocks[lam_index()];
        let t_val = blocks[1][(0, 0)].re;
        let weighted = sqrt_gamma_ext.matrix() * lam_m * sqrt_gamma_ext.matrix();
        CMatrix::identity(d_b, d_b).scale(t_val) - ptrace_a_raw(&weighted, d_a, d_b)
    });
    let sol = sdp_solve(&p, &params.sdp)?;
    let t_opt = sol.scalar(t).max(f64::MIN_POSITIVE);
    Ok(SmoothedValue {
        bits: -t_opt.log2(),
        eps,
        witness: SmoothedWitness::Test {
            lambda: sol.block(lam),
        },
    })
}

// Block index of lambda in the closure above; the blocks slice is ordered by
// insertion so lambda is 0 and t is 1.
const fn lam_index() -> usize {
    0
}

struct BallFeasibility {
    distance: f64,
    tau: HermitianOperator,
    sigma: HermitianOperator,
}

/// Phase-I solve: the minimum generalized trace distance from rho to a
/// subnormalized tau admitting sigma_B with tau <= t gamma (x) sigma and
/// tau_B <= sigma.
fn max_info_ball_distance(ts: &ThermoState, t: f64, sdp: &SdpParams) -> Result<BallFeasibility> {
    let d_a = ts.dim_a();
    let d_b = ts.dim_b();
    let d = d_a * d_b;
    let rho = ts.rho().op().clone();
    let gamma = ts.gamma().op().clone();

    let mut p = SdpProblem::new();
    let tau = p.add_hermitian_block("tau", d);
    let pos = p.add_hermitian_block("p", d);
    let neg = p.add_hermitian_block("n", d);
    let sig = p.add_hermitian_block("sigma", d_b);
    let half_id = HermitianOperator::identity(d).scale(0.5);
    p.set_objective_min(
        &[
            (pos, half_id.clone()),
            (neg, half_id.clone()),
            (tau, half_id.scale(-1.0)),
        ],
        0.5 * rho.trace(),
    );
    for id in [tau, pos, neg] {
        p.add_psd_from_block(id, 1.0, &HermitianOperator::zeros(d));
    }
    p.add_psd_from_block(sig, 1.0, &HermitianOperator::zeros(d_b));
    p.add_scalar_eq(&[(sig, HermitianOperator::identity(d_b))], 1.0);
    p.add_scalar_ineq(&[(tau, HermitianOperator::identity(d).scale(-1.0))], -1.0);
    p.add_zero_lincomb(&[(tau, -1.0), (pos, -1.0), (neg, 1.0)], &rho);
    let gm = gamma.matrix().clone();
    p.add_psd_map(d, &[tau, sig], move |blocks| {
        gm.kronecker(&blocks[3]).scale(t) - &blocks[0]
    });
    p.add_psd_map(d_b, &[tau, sig], move |blocks| {
        &blocks[3] - ptrace_a_raw(&blocks[0], d_a, d_b)
    });
    let sol = sdp_solve(&p, sdp)?;
    Ok(BallFeasibility {
        distance: sol.primal_value,
        tau: sol.block(tau),
        sigma: sol.block(sig),
    })
}

/// Smoothed generalized max-mutual information, via log-bisection over t
/// with a per-t ball-feasibility SDP.
pub fn i_max_up_smoothed(
    ts: &ThermoState,
    eps: f64,
    params: &SmoothParams,
) -> Result<SmoothedValue> {
    check_eps_sup(eps)?;
    let rho_b = ts.rho_b()?;
    let reference = ts.gamma().op().tensor(rho_b.op());
    let unsmoothed = d_max(ts.rho().op(), &reference)?;
    if unsmoothed.is_infinite() {
        return Err(Error::InvalidParameter(
            "max-mutual information diverges: rho outside supp(gamma (x) rho_B)".into(),
        ));
    }
    let threshold = eps + params.feas_slack;
    let mut lo = -40.0f64;
    let mut hi = unsmoothed.value + 1.0;

    // the unsmoothed witness (rho, rho_B) is feasible at hi; verify and widen
    // once in case of solver noise at the boundary
    let mut best: BallFeasibility;
    let mut attempts = 0;
    loop {
        let f = max_info_ball_distance(ts, hi.exp2(), &params.sdp)?;
        if f.distance <= threshold {
            best = f;
            break;
        }
        attempts += 1;
        if attempts > 2 {
            return Err(Error::BracketFailure(format!(
                "upper bracket {hi} bits infeasible (distance {} > {threshold})",
                f.distance
            )));
        }
        hi += 2.0;
    }
    // quick floor check
    let floor = max_info_ball_distance(ts, lo.exp2(), &params.sdp)?;
    if floor.distance <= threshold {
        return Ok(SmoothedValue {
            bits: lo,
            eps,
            witness: SmoothedWitness::Ball {
                t: lo.exp2(),
                tau: floor.tau,
                sigma_b: floor.sigma,
            },
        });
    }
    while hi - lo > params.bisect_tol_bits {
        let mid = 0.5 * (hi + lo);
        let f = max_info_ball_distance(ts, mid.exp2(), &params.sdp)?;
        if f.distance <= threshold {
            best = f;
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SmoothedValue {
        bits: hi,
        eps,
        witness: SmoothedWitness::Ball {
            t: hi.exp2(),
            tau: best.tau,
            sigma_b: best.sigma,
        },
    })
}

/// Smoothed alternative generalized max-mutual information; bisection-free
/// because dropping the tau_B <= sigma_B constraint linearizes through the
/// substitution X = t sigma.
pub fn i_max_down_smoothed(
    ts: &ThermoState,
    eps: f64,
    params: &SmoothParams,
) -> Result<SmoothedValue> {
    check_eps_sup(eps)?;
    let d_a = ts.dim_a();
    let d_b = ts.dim_b();
    let d = d_a * d_b;
    let rho = ts.rho().op().clone();
    let gamma = ts.gamma().op().clone();

    let mut p = SdpProblem::new();
    let tau = p.add_hermitian_block("tau", d);
    let pos = p.add_hermitian_block("p", d);
    let neg = p.add_hermitian_block("n", d);
    let x = p.add_hermitian_block("x", d_b);
    p.set_objective_min(&[(x, HermitianOperator::identity(d_b))], 0.0);
    for id in [tau, pos, neg] {
        p.add_psd_from_block(id, 1.0, &HermitianOperator::zeros(d));
    }
    p.add_psd_from_block(x, 1.0, &HermitianOperator::zeros(d_b));
    p.add_scalar_ineq(&[(tau, HermitianOperator::identity(d).scale(-1.0))], -1.0);
    p.add_zero_lincomb(&[(tau, -1.0), (pos, -1.0), (neg, 1.0)], &rho);
    let half_id = HermitianOperator::identity(d).scale(0.5);
    // (1/2)(Tr P + Tr N + Tr rho - Tr tau) <= eps
    p.add_scalar_ineq(
        &[
            (pos, half_id.scale(-1.0)),
            (neg, half_id.scale(-1.0)),
            (tau, half_id),
        ],
        0.5 * rho.trace() - eps,
    );
    let gm = gamma.matrix().clone();
    p.add_psd_map(d, &[tau, x], move |blocks| {
        gm.kronecker(&blocks[3]) - &blocks[0]
    });
    let sol = sdp_solve(&p, &params.sdp)?;
    let t_opt = sol.primal_value.max(f64::MIN_POSITIVE);
    let x_opt = sol.block(x);
    Ok(SmoothedValue {
        bits: t_opt.log2(),
        eps,
        witness: SmoothedWitness::Ball {
            t: t_opt,
            tau: sol.block(tau),
            sigma_b: x_opt.scale(1.0 / t_opt),
        },
    })
}

fn uniform_thermo(rho: &DensityOperator) -> Result<ThermoState> {
    let d_a = rho.dims().dim(0);
    let pi = DensityOperator::new(
        HermitianOperator::identity(d_a).scale(1.0 / d_a as f64),
        SubsystemDims::new(&[d_a])?,
    )?;
    ThermoState::new(rho.clone(), pi)
}

/// Smoothed conditional min-entropy, through the gamma = pi identity
/// H_min^{v,eps} = log2|A| - I_max^{^,eps}(rho || pi_A).
pub fn h_min_cond_smoothed(
    rho: &DensityOperator,
    eps: f64,
    params: &SmoothParams,
) -> Result<SmoothedValue> {
    let ts = uniform_thermo(rho)?;
    let d_a = rho.dims().dim(0) as f64;
    let v = i_max_up_smoothed(&ts, eps, params)?;
    Ok(SmoothedValue {
        bits: d_a.log2() - v.bits,
        eps,
        witness: v.witness,
    })
}

/// Smoothed conditional max-entropy, through the gamma = pi identity
/// H_max^{^,eps} = log2|A| - I_min^{v,eps}(rho || pi_A).
pub fn h_max_cond_smoothed(
    rho: &DensityOperator,
    eps: f64,
    params: &SmoothParams,
) -> Result<SmoothedValue> {
    let ts = uniform_thermo(rho)?;
    let d_a = rho.dims().dim(0) as f64;
    let v = i_min_down_smoothed(&ts, eps, params)?;
    Ok(SmoothedValue {
        bits: d_a.log2() - v.bits,
        eps,
        witness: v.witness,
    })
}

/// Checks that a returned witness satisfies its defining constraints within
/// `tol`; used by tests and by the protocol builders before lifting.
pub fn witness_violation(ts: &ThermoState, eps: f64, value: &SmoothedValue) -> Result<f64> {
    let mut worst = 0.0f64;
    match &value.witness {
        SmoothedWitness::Test { lambda } => {
            worst = worst.max(-lambda.min_eigenvalue());
            worst = worst.max(
                -(HermitianOperator::identity(lambda.dim())
                    .sub(lambda)
                    .min_eigenvalue()),
            );
            let overlap = lambda.inner(ts.rho().op());
            worst = worst.max(1.0 - eps - overlap);
        }
        SmoothedWitness::Ball { t, tau, sigma_b } => {
            worst = worst.max(-tau.min_eigenvalue());
            worst = worst.max(tau.trace() - 1.0);
            worst = worst.max(-sigma_b.min_eigenvalue());
            worst = worst.max(gen_trace_distance(ts.rho().op(), tau)? - eps);
            let bound = ts.gamma().op().tensor(sigma_b).scale(*t);
            worst = worst.max(-(bound.sub(tau).min_eigenvalue()));
            let d_a = ts.dim_a();
            let d_b = ts.dim_b();
            let tau_b = tau.partial_trace(&SubsystemDims::new(&[d_a, d_b])?, &[1])?;
            worst = worst.max(-(sigma_b.sub(&tau_b).min_eigenvalue()));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditional::{i_max_down, i_max_up, i_min_down};
    use crate::states::{random_state, special_state, SpecialState};

    fn uniform_gamma(d: usize) -> DensityOperator {
        DensityOperator::new(
            HermitianOperator::identity(d).scale(1.0 / d as f64),
            SubsystemDims::new(&[d]).unwrap(),
        )
        .unwrap()
    }

    fn random_ts(seed: u64) -> ThermoState {
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let rho = random_state(&dims, 4, seed).unwrap();
        ThermoState::new(rho, uniform_gamma(2)).unwrap()
    }

    #[test]
    fn i_min_down_smoothed_recovers_closed_form_at_zero() {
        for seed in [3u64, 4, 5] {
            let ts = random_ts(seed);
            let smoothed = i_min_down_smoothed(&ts, 0.0, &SmoothParams::default()).unwrap();
            let exact = i_min_down(&ts).unwrap();
            assert!(
                (smoothed.bits - exact.bits).abs() < 1e-5,
                "{} vs {}",
                smoothed.bits,
                exact.bits
            );
        }
    }

    #[test]
    fn i_min_down_smoothed_nondecreasing_in_eps() {
        let ts = random_ts(9);
        let mut prev = f64::NEG_INFINITY;
        for eps in [0.0, 0.05, 0.1, 0.2] {
            let v = i_min_down_smoothed(&ts, eps, &SmoothParams::default()).unwrap();
            assert!(v.bits >= prev - 1e-7, "eps={eps}: {} < {prev}", v.bits);
            prev = v.bits;
        }
    }

    #[test]
    fn i_max_up_smoothed_recovers_closed_form_at_zero() {
        for seed in [11u64, 12] {
            let ts = random_ts(seed);
            let smoothed = i_max_up_smoothed(&ts, 0.0, &SmoothParams::default()).unwrap();
            let exact = i_max_up(&ts).unwrap();
            assert!(
                (smoothed.bits - exact.bits).abs() < 1e-4,
                "{} vs {}",
                smoothed.bits,
                exact.bits
            );
        }
    }

    #[test]
    fn i_max_up_smoothed_on_max_entangled() {
        let phi = special_state(SpecialState::MaxEntangled, 2, 2).unwrap();
        let ts = ThermoState::new(phi, uniform_gamma(2)).unwrap();
        let v = i_max_up_smoothed(&ts, 0.0, &SmoothParams::default()).unwrap();
        assert!((v.bits - 2.0).abs() < 1e-3, "{}", v.bits);
    }

    #[test]
    fn i_max_down_smoothed_recovers_closed_form_at_zero() {
        for seed in [21u64, 22] {
            let ts = random_ts(seed);
            let smoothed = i_max_down_smoothed(&ts, 0.0, &SmoothParams::default()).unwrap();
            let exact = i_max_down(&ts).unwrap();
            assert!(
                (smoothed.bits - exact.bits).abs() < 1e-5,
                "{} vs {}",
                smoothed.bits,
                exact.bits
            );
        }
    }

    #[test]
    fn smoothed_ordering_down_below_up() {
        for seed in [31u64, 32, 33] {
            let ts = random_ts(seed);
            let down = i_max_down_smoothed(&ts, 0.1, &SmoothParams::default()).unwrap();
            let up = i_max_up_smoothed(&ts, 0.1, &SmoothParams::default()).unwrap();
            assert!(down.bits <= up.bits + 1e-4, "{} vs {}", down.bits, up.bits);
        }
    }

    #[test]
    fn witnesses_satisfy_their_constraints() {
        let ts = random_ts(41);
        for eps in [0.0, 0.1] {
            let v = i_min_down_smoothed(&ts, eps, &SmoothParams::default()).unwrap();
            assert!(witness_violation(&ts, eps, &v).unwrap() <= 1e-7);
            let v = i_max_up_smoothed(&ts, eps, &SmoothParams::default()).unwrap();
            assert!(witness_violation(&ts, eps + 2e-7, &v).unwrap() <= 1e-6);
            let v = i_max_down_smoothed(&ts, eps, &SmoothParams::default()).unwrap();
            // the down-witness drops the marginal-ordering constraint
            if let SmoothedWitness::Ball { t, tau, sigma_b } = &v.witness {
                assert!(tau.min_eigenvalue() > -1e-7);
                let bound = ts.gamma().op().tensor(sigma_b).scale(*t);
                assert!(bound.sub(tau).min_eigenvalue() > -1e-7);
            } else {
                panic!("expected ball witness");
            }
        }
    }

    #[test]
    fn h_smoothed_special_values() {
        let phi = special_state(SpecialState::MaxEntangled, 2, 2).unwrap();
        let v = h_min_cond_smoothed(&phi, 0.0, &SmoothParams::default()).unwrap();
        assert!((v.bits + 1.0).abs() < 1e-3, "{}", v.bits);

        let pi_sigma = special_state(SpecialState::Uniform, 2, 2).unwrap();
        let v = h_max_cond_smoothed(&pi_sigma, 0.0, &SmoothParams::default()).unwrap();
        assert!((v.bits - 1.0).abs() < 1e-5, "{}", v.bits);
    }

    #[test]
    fn eps_one_rejected() {
        let ts = random_ts(51);
        assert!(i_min_down_smoothed(&ts, 1.0, &SmoothParams::default()).is_err());
        assert!(i_max_up_smoothed(&ts, 1.0, &SmoothParams::default()).is_err());
    }
}
