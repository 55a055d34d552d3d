//! Conditional entropies, generalized mutual informations, and the
//! conditional Helmholtz free energy (unsmoothed).
//!
//! Sign conventions are pinned by the gamma = pi identities
//! I_max^ = log2|A| - H_min^v and I_min^v = log2|A| - H_max^^; unit tests
//! enforce both.

use crate::divergences::{d_max, d_sandwiched, d_umegaki};
use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, SubsystemDims, RANK_TOL};
use crate::smoothing::{sdp_solve, SdpParams, SdpProblem};
use crate::states::{DensityOperator, Hamiltonian, ThermoState};
use nalgebra::Complex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CondEntropyVariant {
    MinDown,
    MaxUp,
    VonNeumann,
    SandwichedDown(f64),
    PetzUp(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondEntropyValue {
    pub bits: f64,
    pub variant: CondEntropyVariant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MutualInfoVariant {
    MaxUp,
    MinDown,
    Umegaki,
    MaxDown,
    PetzDown(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualInfoValue {
    /// Value in bits; infinite on support violation.
    pub bits: f64,
    pub variant: MutualInfoVariant,
}

fn bipartite(rho: &DensityOperator) -> Result<(usize, usize)> {
    if rho.dims().len() != 2 {
        return Err(Error::DimMismatch(format!(
            "conditional entropy needs bipartite dims [|A|,|B|], got {:?}",
            rho.dims().dims()
        )));
    }
    Ok((rho.dims().dim(0), rho.dims().dim(1)))
}

pub fn von_neumann_entropy(op: &HermitianOperator) -> f64 {
    let eig = op.eig().expect("hermitian eig");
    -eig.values
        .iter()
        .map(|&v| if v > 0.0 { v * v.log2() } else { 0.0 })
        .sum::<f64>()
}

/// Conditional min-entropy -log2 || rho_B^{-1/2} rho_AB rho_B^{-1/2} ||_inf.
pub fn h_min_cond(rho: &DensityOperator) -> Result<CondEntropyValue> {
    let (d_a, _) = bipartite(rho)?;
    let rho_b = rho.marginal(&[1])?;
    let w = HermitianOperator::identity(d_a).tensor(&rho_b.op().pinv_sqrt());
    let inner = w.sandwich(rho.op());
    Ok(CondEntropyValue {
        bits: -inner.op_norm().log2(),
        variant: CondEntropyVariant::MinDown,
    })
}

/// Conditional max-entropy log2 || Tr_A[rho_AB^0] ||_inf.
pub fn h_max_cond(rho: &DensityOperator) -> Result<CondEntropyValue> {
    bipartite(rho)?;
    let proj = rho.op().support_projector(RANK_TOL);
    let tb = proj.partial_trace(rho.dims(), &[1])?;
    Ok(CondEntropyValue {
        bits: tb.op_norm().log2(),
        variant: CondEntropyVariant::MaxUp,
    })
}

/// Conditional von Neumann entropy S(AB) - S(B).
pub fn h_vn_cond(rho: &DensityOperator) -> Result<CondEntropyValue> {
    bipartite(rho)?;
    let rho_b = rho.marginal(&[1])?;
    Ok(CondEntropyValue {
        bits: von_neumann_entropy(rho.op()) - von_neumann_entropy(rho_b.op()),
        variant: CondEntropyVariant::VonNeumann,
    })
}

fn uniform_reference(rho: &DensityOperator) -> Result<(f64, HermitianOperator)> {
    let (d_a, _) = bipartite(rho)?;
    let rho_b = rho.marginal(&[1])?;
    let pi = HermitianOperator::identity(d_a).scale(1.0 / d_a as f64);
    Ok(((d_a as f64).log2(), pi.tensor(rho_b.op())))
}

/// Conditional sandwiched Renyi entropy (down-arrow construction).
pub fn h_sandwiched_down(rho: &DensityOperator, alpha: f64) -> Result<CondEntropyValue> {
    let (log_a, reference) = uniform_reference(rho)?;
    let d = d_sandwiched(rho.op(), &reference, alpha)?;
    Ok(CondEntropyValue {
        bits: log_a - d.value,
        variant: CondEntropyVariant::SandwichedDown(alpha),
    })
}

/// Conditional Petz-Renyi entropy (up-arrow construction). The inner
/// infimum over sigma_B has the Hoelder closed form
/// (alpha/(alpha-1)) log2 Tr[(Tr_A[(pi^{(1-alpha)/2} (x) 1) rho^alpha
/// (pi^{(1-alpha)/2} (x) 1)])^{1/alpha}].
pub fn h_petz_up(rho: &DensityOperator, alpha: f64) -> Result<CondEntropyValue> {
    let (d_a, _) = bipartite(rho)?;
    if !(0.0 < alpha && alpha <= 2.0) || (alpha - 1.0).abs() < 1e-4 {
        return Err(Error::InvalidParameter(format!(
            "petz-up alpha must lie in (0,1) u (1,2], away from 1, got {alpha}"
        )));
    }
    let pi = DensityOperator::new(
        HermitianOperator::identity(d_a).scale(1.0 / d_a as f64),
        SubsystemDims::new(&[d_a])?,
    )?;
    let ts = ThermoState::new(rho.clone(), pi)?;
    let m = petz_kernel(&ts, alpha)?;
    let info =
        (alpha / (alpha - 1.0)) * m.powf_on_support(1.0 / alpha, 1e-14).trace().log2();
    Ok(CondEntropyValue {
        bits: (d_a as f64).log2() - info,
        variant: CondEntropyVariant::PetzUp(alpha),
    })
}

/// Generalized max-mutual information D_max(rho_AB || gamma_A (x) rho_B).
pub fn i_max_up(ts: &ThermoState) -> Result<MutualInfoValue> {
    let rho_b = ts.rho_b()?;
    let reference = ts.gamma().op().tensor(rho_b.op());
    let d = d_max(ts.rho().op(), &reference)?;
    Ok(MutualInfoValue {
        bits: d.value,
        variant: MutualInfoVariant::MaxUp,
    })
}

/// Generalized min-mutual information -log2 || Tr_A[rho_AB^0 gamma_A] ||_inf.
pub fn i_min_down(ts: &ThermoState) -> Result<MutualInfoValue> {
    let d_b = ts.dim_b();
    let proj = ts.rho().op().support_projector(RANK_TOL);
    let sqrt_gamma = ts.gamma().op().powf_on_support(0.5, 1e-14);
    let weighted = sqrt_gamma
        .tensor(&HermitianOperator::identity(d_b))
        .sandwich(&proj);
    let tb = weighted.partial_trace(ts.rho().dims(), &[1])?;
    Ok(MutualInfoValue {
        bits: -tb.op_norm().log2(),
        variant: MutualInfoVariant::MinDown,
    })
}

/// Generalized Umegaki mutual information D(rho_AB || gamma_A (x) rho_B),
/// evaluated through its closed form.
pub fn i_umegaki(ts: &ThermoState) -> Result<MutualInfoValue> {
    let rho_b = ts.rho_b()?;
    let reference = ts.gamma().op().tensor(rho_b.op());
    let d = d_umegaki(ts.rho().op(), &reference)?;
    Ok(MutualInfoValue {
        bits: d.value,
        variant: MutualInfoVariant::Umegaki,
    })
}

/// Alternative generalized max-mutual information
/// inf_sigma D_max(rho || gamma (x) sigma), as the SDP
/// min Tr X s.t. gamma (x) X >= rho, X >= 0.
pub fn i_max_down(ts: &ThermoState) -> Result<MutualInfoValue> {
    let d_b = ts.dim_b();
    let d = ts.rho().dim();
    let mut p = SdpProblem::new();
    let x = p.add_hermitian_block("x", d_b);
    p.set_objective_min(&[(x, HermitianOperator::identity(d_b))], 0.0);
    p.add_psd_from_block(x, 1.0, &HermitianOperator::zeros(d_b));
    let gm = ts.gamma().op().matrix().clone();
    let rho_neg = ts.rho().op().scale(-1.0);
    p.add_psd_map(d, &[x], move |blocks| {
        gm.kronecker(&blocks[0]) + rho_neg.matrix().clone()
    });
    let sol = sdp_solve(&p, &SdpParams::default())?;
    Ok(MutualInfoValue {
        bits: sol.primal_value.max(f64::MIN_POSITIVE).log2(),
        variant: MutualInfoVariant::MaxDown,
    })
}

/// Tr_A[(gamma^{(1-alpha)/2} (x) 1) rho^alpha (gamma^{(1-alpha)/2} (x) 1)],
/// the B-side kernel of the Petz quantity.
fn petz_kernel(ts: &ThermoState, alpha: f64) -> Result<HermitianOperator> {
    let d_b = ts.dim_b();
    let ra = ts.rho().op().powf_on_support(alpha, RANK_TOL);
    let gw = ts
        .gamma()
        .op()
        .powf_on_support((1.0 - alpha) / 2.0, 1e-14)
        .tensor(&HermitianOperator::identity(d_b));
    gw.sandwich(&ra).partial_trace(ts.rho().dims(), &[1])
}

/// Maximizes (alpha < 1) or minimizes (alpha > 1) Tr[M sigma^p] over density
/// operators sigma by projected gradient ascent/descent with Armijo
/// backtracking; returns (optimal value, optimizer).
fn optimize_trace_power(
    m: &HermitianOperator,
    p: f64,
    maximize: bool,
    start: &HermitianOperator,
) -> Result<(f64, HermitianOperator)> {
    let d = m.dim();
    let floor = 1e-13;
    let objective = |sigma: &HermitianOperator| -> f64 {
        // negative powers blow up at the boundary; clamping the spectrum
        // keeps the barrier finite without distorting interior values
        if p < 0.0 {
            let eig = sigma.eig().expect("hermitian eig");
            let vt = eig.vectors.adjoint() * m.matrix() * &eig.vectors;
            return eig
                .values
                .iter()
                .enumerate()
                .map(|(i, &s)| vt[(i, i)].re * s.max(floor).powf(p))
                .sum();
        }
        let sp = sigma.powf_on_support(p, 1e-15);
        m.inner(&sp)
    };
    let gradient = |sigma: &HermitianOperator| -> HermitianOperator {
        let eig = sigma.eig().expect("hermitian eig");
        let vals: Vec<f64> = eig.values.iter().map(|&v| v.max(floor)).collect();
        let mtil = eig.vectors.adjoint() * m.matrix() * &eig.vectors;
        let mut g = mtil.clone();
        for i in 0..d {
            for j in 0..d {
                let (si, sj) = (vals[i], vals[j]);
                let dd = if (si - sj).abs() < 1e-12 * si.max(sj) {
                    p * si.powf(p - 1.0)
                } else {
                    (si.powf(p) - sj.powf(p)) / (si - sj)
                };
                g[(i, j)] *= Complex::new(dd, 0.0);
            }
        }
        HermitianOperator::from_herm_unchecked(&eig.vectors * g * eig.vectors.adjoint())
    };

    let sign = if maximize { 1.0 } else { -1.0 };
    let mut sigma = start.clone();
    let mut value = objective(&sigma);
    let mut step = 1.0f64;
    let grad_tol = 1e-8;
    for _ in 0..2000 {
        let grad = gradient(&sigma).scale(sign);
        // projected-gradient residual at unit step
        let probe = project_to_density(&sigma.add(&grad))?;
        let residual = probe.sub(&sigma).trace_norm();
        if residual <= grad_tol {
            return Ok((value, sigma));
        }
        let mut accepted = false;
        let mut s = step;
        for _ in 0..60 {
            let cand = project_to_density(&sigma.add(&grad.scale(s)))?;
            let cand_val = objective(&cand);
            let gain = sign * (cand_val - value);
            let decrease = cand.sub(&sigma).inner(&grad);
            if gain >= 1e-4 * decrease.max(0.0) && gain > 0.0 {
                sigma = cand;
                value = cand_val;
                step = (s * 2.0).min(1e6);
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            // no ascent direction left at line-search resolution
            return Ok((value, sigma));
        }
    }
    Ok((value, sigma))
}

/// Projects a Hermitian operator onto the density-operator set (Frobenius
/// projection: eigenvalues onto the probability simplex).
fn project_to_density(h: &HermitianOperator) -> Result<HermitianOperator> {
    let eig = h.eig()?;
    let d = h.dim();
    let mut v = eig.values.clone();
    // simplex projection (Held-Wolfe-Crowder)
    let mut sorted = v.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    for val in &mut v {
        *val = (*val - theta).max(0.0);
    }
    let diag = nalgebra::DVector::from_iterator(d, v.iter().map(|&x| Complex::new(x, 0.0)));
    let mat = &eig.vectors * nalgebra::DMatrix::from_diagonal(&diag) * eig.vectors.adjoint();
    Ok(HermitianOperator::from_herm_unchecked(mat))
}

fn petz_down_info(ts: &ThermoState, alpha: f64) -> Result<f64> {
    if !(0.0..2.0 + 1e-12).contains(&alpha) || (alpha - 1.0).abs() < 1e-4 {
        return Err(Error::InvalidParameter(format!(
            "petz alpha must lie in [0,1) u (1,2], away from 1, got {alpha}"
        )));
    }
    let m = petz_kernel(ts, alpha)?;
    let p = 1.0 - alpha;
    let d_b = ts.dim_b();
    if alpha == 0.0 {
        // linear objective: the optimum is the top eigenvalue of M
        return Ok(-m.op_norm().log2());
    }
    let maximize = alpha < 1.0;
    let start = DensityOperator::new(
        HermitianOperator::identity(d_b).scale(1.0 / d_b as f64),
        SubsystemDims::new(&[d_b])?,
    )?;
    let (mut best, _) = optimize_trace_power(&m, p, maximize, start.op())?;
    // certificate: random probes must not beat the optimum
    let mut beaten = false;
    for k in 0..20u64 {
        let probe = crate::states::random_state(&SubsystemDims::new(&[d_b])?, d_b, 0xabc0 + k)?;
        let probe_val = m.inner(&probe.op().powf_on_support(p, 1e-15));
        let improves = if maximize {
            probe_val > best + 1e-9
        } else {
            probe_val < best - 1e-9
        };
        if improves {
            // restart from the better probe
            let (v2, _) = optimize_trace_power(&m, p, maximize, probe.op())?;
            let better = if maximize { v2 > best } else { v2 < best };
            if better {
                best = v2;
            }
            let still = if maximize {
                probe_val > best + 1e-6
            } else {
                probe_val < best - 1e-6
            };
            if still {
                beaten = true;
            }
        }
    }
    if beaten {
        return Err(Error::NonConvergence(
            "a random probe beat the projected-gradient optimum by more than 1e-6".into(),
        ));
    }
    Ok(best.log2() / (alpha - 1.0))
}

/// Generalized Petz-Renyi mutual information
/// inf_sigma Petz_alpha(rho || gamma (x) sigma) for alpha in [0, 1).
pub fn i_petz_down(ts: &ThermoState, alpha: f64) -> Result<MutualInfoValue> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "i_petz_down needs alpha in [0,1), got {alpha}"
        )));
    }
    let bits = if alpha == 0.0 {
        i_min_down(ts)?.bits
    } else {
        petz_down_info(ts, alpha)?
    };
    Ok(MutualInfoValue {
        bits,
        variant: MutualInfoVariant::PetzDown(alpha),
    })
}

/// Conditional Helmholtz free energy Tr[H rho_A] - (1/beta_b) H(A|B), in
/// the energy units of the Hamiltonian.
pub fn helmholtz_cond(ts: &ThermoState, h: &Hamiltonian, beta_b: f64) -> Result<f64> {
    if !(beta_b > 0.0) {
        return Err(Error::InvalidParameter("beta_b must be positive".into()));
    }
    if h.dim() != ts.dim_a() {
        return Err(Error::DimMismatch(format!(
            "hamiltonian dim {} != |A| = {}",
            h.dim(),
            ts.dim_a()
        )));
    }
    let rho_a = ts.rho_a()?;
    let energy = h.op().inner(rho_a.op());
    Ok(energy - h_vn_cond(ts.rho())?.bits / beta_b)
}

/// Unconditional Helmholtz free energy Tr[H rho] - (1/beta_b) S(rho).
pub fn helmholtz(rho: &DensityOperator, h: &Hamiltonian, beta_b: f64) -> Result<f64> {
    if h.dim() != rho.dim() {
        return Err(Error::DimMismatch(format!(
            "hamiltonian dim {} != state dim {}",
            h.dim(),
            rho.dim()
        )));
    }
    Ok(h.op().inner(rho.op()) - von_neumann_entropy(rho.op()) / beta_b)
}
