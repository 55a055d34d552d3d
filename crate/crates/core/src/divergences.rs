//! Relative-entropy family on pairs of (sub)normalized states.
//!
//! All values are in bits. Support-sensitive divergences return an explicit
//! infinity flag instead of a large float so that downstream work-cost
//! formulas can distinguish genuinely infinite cost.

use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, RANK_TOL};
use crate::smoothing::{sdp_solve, SdpProblem, SdpParams};

/// Tolerance below which |alpha - 1| delegates Renyi values to the Umegaki
/// relative entropy.
const ALPHA_NEAR_ONE: f64 = 1e-4;
/// Relative mass threshold for declaring a support violation.
const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    /// Value in bits; `f64::INFINITY` when the divergence diverges.
    pub value: f64,
    /// True iff supp(rho) is not contained in supp(sigma).
    pub support_violation: bool,
}

impl DivergenceValue {
    fn finite(value: f64) -> Self {
        Self {
            value,
            support_violation: false,
        }
    }

    fn infinite() -> Self {
        Self {
            value: f64::INFINITY,
            support_violation: true,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

fn check_dims(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch(format!(
            "divergence needs equal dims, got {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// Mass of rho outside the support of sigma, relative to Tr rho.
fn support_leak(rho: &HermitianOperator, sigma: &HermitianOperator) -> f64 {
    let p = sigma.support_projector(RANK_TOL);
    let inside = p.inner(rho);
    let total = rho.trace();
    if total <= 0.0 {
        return 0.0;
    }
    ((total - inside) / total).max(0.0)
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Max-relative entropy log2 || sigma^{-1/2} rho sigma^{-1/2} ||_inf.
pub fn d_max(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<DivergenceValue> {
    check_dims(rho, sigma)?;
    if support_leak(rho, sigma) > SUPPORT_TOL {
        return Ok(DivergenceValue::infinite());
    }
    let s = sigma.pinv_sqrt();
    let inner = s.sandwich(rho);
    Ok(DivergenceValue::finite(inner.op_norm().log2()))
}

/// Min-relative entropy -log2 Tr[rho^0 sigma].
pub fn d_min(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<DivergenceValue> {
    check_dims(rho, sigma)?;
    let p = rho.support_projector(RANK_TOL);
    let overlap = p.inner(sigma);
    if overlap <= 0.0 {
        return Ok(DivergenceValue::infinite());
    }
    Ok(DivergenceValue::finite(-overlap.log2()))
}

/// Umegaki relative entropy Tr[rho log2 rho] - Tr[rho log2 sigma].
pub fn d_umegaki(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<DivergenceValue> {
    check_dims(rho, sigma)?;
    if support_leak(rho, sigma) > SUPPORT_TOL {
        return Ok(DivergenceValue::infinite());
    }
    let er = rho.eig()?;
    let es = sigma.eig()?;
    let lam_max_r = er.values[0].max(0.0);
    let lam_max_s = es.values[0].max(0.0);
    let thr_r = RANK_TOL * lam_max_r;
    let thr_s = RANK_TOL * lam_max_s;
    let mut acc = 0.0;
    for &lam in &er.values {
        acc += xlog2x(lam.max(0.0));
    }
    // cross term in the two eigenbases
    let overlap = er.vectors.adjoint() * &es.vectors;
    for (i, &lam) in er.values.iter().enumerate() {
        if lam <= thr_r {
            continue;
        }
        for (j, &mu) in es.values.iter().enumerate() {
            let w = overlap[(i, j)].norm_sqr();
            if w < 1e-16 {
                continue;
            }
            if mu <= thr_s {
                // support leak below detection threshold; treat as boundary
                continue;
            }
            acc -= lam * w * mu.log2();
        }
    }
    Ok(DivergenceValue::finite(acc))
}

/// Sandwiched Renyi relative entropy for alpha in [1/2, 1) u (1, inf).
pub fn d_sandwiched(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    alpha: f64,
) -> Result<DivergenceValue> {
    check_dims(rho, sigma)?;
    if !(alpha >= 0.5 && (alpha < 1.0 || alpha > 1.0)) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sandwiched alpha must lie in [1/2,1) u (1,inf), got {alpha}"
        )));
    }
    if (alpha - 1.0).abs() < ALPHA_NEAR_ONE {
        return d_umegaki(rho, sigma);
    }
    if alpha > 1.0 && support_leak(rho, sigma) > SUPPORT_TOL {
        return Ok(DivergenceValue::infinite());
    }
    let exponent = (1.0 - alpha) / (2.0 * alpha);
    let s = sigma.powf_on_support(exponent, RANK_TOL);
    let inner = s.sandwich(rho);
    // Tr[inner^alpha] in log space; large alpha overflows f64 otherwise.
    let eig = inner.eig()?;
    let lam_max = eig.values[0].max(0.0);
    if lam_max <= 0.0 {
        return Ok(DivergenceValue::infinite());
    }
    let thr = RANK_TOL * lam_max;
    let scaled: f64 = eig
        .values
        .iter()
        .filter(|&&v| v > thr)
        .map(|&v| (v / lam_max).powf(alpha))
        .sum();
    let log_tr = alpha * lam_max.log2() + scaled.log2();
    Ok(DivergenceValue::finite(log_tr / (alpha - 1.0)))
}

/// Petz-Renyi relative entropy for alpha in [0, 1) u (1, 2].
pub fn d_petz(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    alpha: f64,
) -> Result<DivergenceValue> {
    check_dims(rho, sigma)?;
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "petz alpha must lie in [0,1) u (1,2], got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return d_min(rho, sigma);
    }
    if (alpha - 1.0).abs() < ALPHA_NEAR_ONE {
        return d_umegaki(rho, sigma);
    }
    if alpha > 1.0 && support_leak(rho, sigma) > SUPPORT_TOL {
        return Ok(DivergenceValue::infinite());
    }
    let ra = rho.powf_on_support(alpha, RANK_TOL);
    let sa = sigma.powf_on_support(1.0 - alpha, RANK_TOL);
    let tr = ra.inner(&sa);
    if tr <= 0.0 {
        return Ok(DivergenceValue::infinite());
    }
    Ok(DivergenceValue::finite(tr.log2() / (alpha - 1.0)))
}

/// Smoothed min-relative entropy, solved as the hypothesis-testing SDP
/// min Tr[Lambda sigma] over 0 <= Lambda <= 1 with Tr[Lambda rho] >= 1 - eps.
pub fn d_min_smoothed(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    eps: f64,
) -> Result<DivergenceValue> {
    check_dims(rho, sigma)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in [0,1], got {eps}"
        )));
    }
    if eps >= 1.0 {
        // Lambda = 0 is feasible and drives Tr[Lambda sigma] to zero.
        return Ok(DivergenceValue {
            value: f64::INFINITY,
            support_violation: false,
        });
    }
    if eps == 0.0 {
        // Tr[Lambda rho] >= 1 pins Lambda to the identity on supp(rho) and
        // off-support weight only adds cost, so the optimum is exactly
        // Lambda = rho^0; the feasible set has no interior there and the
        // analytic value is the min-relative entropy.
        return d_min(rho, sigma);
    }
    let d = rho.dim();
    let mut p = SdpProblem::new();
    let lam = p.add_hermitian_block("lambda", d);
    p.set_objective_min(&[(lam, sigma.clone())], 0.0);
    p.add_psd_from_block(lam, 1.0, &HermitianOperator::zeros(d)); // Lambda >= 0
    p.add_psd_from_block(lam, -1.0, &HermitianOperator::identity(d)); // 1 - Lambda >= 0
    p.add_scalar_ineq(&[(lam, rho.clone())], 1.0 - eps); // Tr[Lambda rho] >= 1-eps
    let sol = sdp_solve(&p, &SdpParams::default())?;
    let opt = sol.primal_value.max(0.0);
    if opt <= 0.0 {
        return Ok(DivergenceValue {
            value: f64::INFINITY,
            support_violation: false,
        });
    }
    Ok(DivergenceValue::finite(-opt.log2()))
}
