//! Top-level work-cost, rate, and AEP-experiment API.
//!
//! Work is reported in bits (multiples of kT ln 2); converting n copies at
//! inverse temperature beta_b ln 2 = 1/(kT) divides the bit count by
//! beta_b. At eps = 0 every one-shot cost is evaluated through its exact
//! closed form; smoothed costs go through the SDP engine; protocol-method
//! reports come from the synthesized channels.

use crate::conditional::{
    h_max_cond, h_min_cond, h_petz_up, h_sandwiched_down, h_vn_cond, i_max_up, i_min_down,
    i_umegaki,
};
use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, SubsystemDims};
use crate::protocols::{build_erasure_protocol, build_preparation_protocol, ProtocolParams};
use crate::smoothing::{
    classical_oracle, i_max_down_smoothed, i_max_up_smoothed, i_min_down_smoothed, OracleKind,
    SmoothParams,
};
use crate::states::{random_state, special_state, DensityOperator, SpecialState, ThermoState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkMethod {
    ClosedForm,
    Sdp,
    Protocol,
}

#[derive(Debug, Clone)]
pub struct WorkReport {
    /// Work in multiples of kT ln 2; positive means invested.
    pub work_bits: f64,
    pub beta_b: f64,
    pub epsilon: f64,
    pub method: WorkMethod,
    pub diagnostics: String,
}

fn check_beta(beta_b: f64) -> Result<()> {
    if !(beta_b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta_b must be positive, got {beta_b}"
        )));
    }
    Ok(())
}

/// One-shot work cost of preparing (rho_AB, gamma_A) from the default pure
/// state: W = -(1/beta_b)(log2|A| - I_max^{^,eps}).
pub fn w_prep_oneshot(
    ts: &ThermoState,
    eps: f64,
    beta_b: f64,
    params: &SmoothParams,
) -> Result<WorkReport> {
    check_beta(beta_b)?;
    let log_a = (ts.dim_a() as f64).log2();
    let (info, method, diagnostics) = if eps == 0.0 {
        (
            i_max_up(ts)?.bits,
            WorkMethod::ClosedForm,
            "max-mutual information closed form".to_string(),
        )
    } else {
        let v = i_max_up_smoothed(ts, eps, params)?;
        (
            v.bits,
            WorkMethod::Sdp,
            format!("bisection to {} bits", params.bisect_tol_bits),
        )
    };
    Ok(WorkReport {
        work_bits: -(log_a - info) / beta_b,
        beta_b,
        epsilon: eps,
        method,
        diagnostics,
    })
}

/// One-shot work cost of erasing (rho_AB, gamma_A) to the default pure
/// state: W = (1/beta_b)(log2|A| - I_min^{v,eps}).
pub fn w_eras_oneshot(
    ts: &ThermoState,
    eps: f64,
    beta_b: f64,
    params: &SmoothParams,
) -> Result<WorkReport> {
    check_beta(beta_b)?;
    let log_a = (ts.dim_a() as f64).log2();
    let (info, method, diagnostics) = if eps == 0.0 {
        (
            i_min_down(ts)?.bits,
            WorkMethod::ClosedForm,
            "min-mutual information closed form".to_string(),
        )
    } else {
        let v = i_min_down_smoothed(ts, eps, params)?;
        (v.bits, WorkMethod::Sdp, "direct SDP".to_string())
    };
    Ok(WorkReport {
        work_bits: (log_a - info) / beta_b,
        beta_b,
        epsilon: eps,
        method,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Prep,
    Eras,
}

/// Trivial-Hamiltonian specialization through the smoothed conditional
/// entropies; must agree with the general operations at gamma = pi.
pub fn w_oneshot_uniform(
    rho: &DensityOperator,
    direction: Direction,
    eps: f64,
    beta_b: f64,
    params: &SmoothParams,
) -> Result<WorkReport> {
    check_beta(beta_b)?;
    if rho.dims().len() != 2 {
        return Err(Error::DimMismatch("bipartite state expected".into()));
    }
    let d_a = rho.dims().dim(0);
    let pi = DensityOperator::new(
        HermitianOperator::identity(d_a).scale(1.0 / d_a as f64),
        SubsystemDims::new(&[d_a])?,
    )?;
    let ts = ThermoState::new(rho.clone(), pi)?;
    let (work, method) = match (direction, eps == 0.0) {
        (Direction::Prep, true) => (-h_min_cond(rho)?.bits / beta_b, WorkMethod::ClosedForm),
        (Direction::Eras, true) => (h_max_cond(rho)?.bits / beta_b, WorkMethod::ClosedForm),
        (Direction::Prep, false) => {
            let v = i_max_up_smoothed(&ts, eps, params)?;
            (-((d_a as f64).log2() - v.bits) / beta_b, WorkMethod::Sdp)
        }
        (Direction::Eras, false) => {
            let v = i_min_down_smoothed(&ts, eps, params)?;
            (((d_a as f64).log2() - v.bits) / beta_b, WorkMethod::Sdp)
        }
    };
    Ok(WorkReport {
        work_bits: work,
        beta_b,
        epsilon: eps,
        method,
        diagnostics: "uniform-gibbs path".to_string(),
    })
}

/// Work charged by the synthesized achievability protocol (ideal ledger).
pub fn w_oneshot_protocol(
    ts: &ThermoState,
    direction: Direction,
    eps: f64,
    beta_b: f64,
    params: &ProtocolParams,
) -> Result<WorkReport> {
    check_beta(beta_b)?;
    let p = match direction {
        Direction::Prep => build_preparation_protocol(ts, eps, params)?,
        Direction::Eras => build_erasure_protocol(ts, eps, params)?,
    };
    Ok(WorkReport {
        work_bits: p.ideal_work_bits / beta_b,
        beta_b,
        epsilon: eps,
        method: WorkMethod::Protocol,
        diagnostics: format!(
            "battery {} -> {}, integer work {}",
            p.d_battery_in, p.d_battery_out, p.integer_work_bits
        ),
    })
}

/// Asymptotic per-copy work cost of converting one state to another:
/// (1/beta_b)(I(sigma||gamma') - I(rho||gamma)).
pub fn w_asymptotic(ts_from: &ThermoState, ts_to: &ThermoState, beta_b: f64) -> Result<WorkReport> {
    check_beta(beta_b)?;
    let from = i_umegaki(ts_from)?.bits;
    let to = i_umegaki(ts_to)?.bits;
    Ok(WorkReport {
        work_bits: (to - from) / beta_b,
        beta_b,
        epsilon: 0.0,
        method: WorkMethod::ClosedForm,
        diagnostics: format!("I_from {from} bits, I_to {to} bits"),
    })
}

/// Asymptotic rate of converting one state to another without work
/// investment: I(rho||gamma) / I(sigma||gamma').
pub fn rate_asymptotic(ts_from: &ThermoState, ts_to: &ThermoState) -> Result<f64> {
    let from = i_umegaki(ts_from)?.bits;
    let to = i_umegaki(ts_to)?.bits;
    if to.abs() < 1e-12 {
        if from.abs() < 1e-12 {
            return Ok(1.0);
        }
        return Err(Error::InvalidParameter(
            "rate diverges: target state is free".into(),
        ));
    }
    Ok(from / to)
}

#[derive(Debug, Clone, Copy)]
pub struct AepPoint {
    pub n: usize,
    pub eps: f64,
    /// (1/n) I_max^{^, eps+eps'}(rho^n || gamma^n)
    pub value_bits: f64,
    /// (1/n) I_max^{v, eps+eps'}(rho^n || gamma^n)
    pub lower_bound: f64,
    /// (1/n) (I_max^{v, eps'}(rho^n || gamma^n) + log2(2/eps^2))
    pub upper_bound: f64,
}

fn diagonal_of(ts: &ThermoState) -> Option<(Vec<f64>, Vec<f64>)> {
    let off = |m: &HermitianOperator| -> f64 {
        let mut acc = 0.0;
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                if i != j {
                    acc += m.matrix()[(i, j)].norm();
                }
            }
        }
        acc
    };
    if off(ts.rho().op()) > 1e-12 || off(ts.gamma().op()) > 1e-12 {
        return None;
    }
    let r = (0..ts.rho().dim())
        .map(|i| ts.rho().op().matrix()[(i, i)].re)
        .collect();
    let g = (0..ts.gamma().dim())
        .map(|i| ts.gamma().op().matrix()[(i, i)].re)
        .collect();
    Some((r, g))
}

/// Per-copy smoothed max-mutual information of n-fold products, with the
/// one-shot equipartition bounds at each n.
pub fn aep_experiment(
    ts: &ThermoState,
    eps: f64,
    eps_prime: f64,
    n_max: usize,
    classical_fast_path: bool,
    params: &SmoothParams,
) -> Result<Vec<AepPoint>> {
    if !(0.0 < eps && eps < 1.0) || !(0.0 < eps_prime && eps + eps_prime < 1.0) {
        return Err(Error::InvalidParameter(
            "need eps, eps' > 0 with eps + eps' < 1".into(),
        ));
    }
    let slack = (2.0 / (eps * eps)).log2();
    let d_a = ts.dim_a();
    let d_b = ts.dim_b();
    let mut out = Vec::with_capacity(n_max);
    if classical_fast_path {
        let Some((r, g)) = diagonal_of(ts) else {
            return Err(Error::InvalidParameter(
                "classical fast path requires diagonal rho and gamma".into(),
            ));
        };
        for n in 1..=n_max {
            let da_n = d_a.checked_pow(n as u32).ok_or(Error::InvalidParameter(
                "dimension overflow".into(),
            ))?;
            let db_n = d_b.checked_pow(n as u32).ok_or(Error::InvalidParameter(
                "dimension overflow".into(),
            ))?;
            if da_n.saturating_mul(db_n) > (1 << 20) {
                return Err(Error::DimMismatch(format!(
                    "classical path dimension {} too large at n = {n}",
                    da_n * db_n
                )));
            }
            // joint diagonal reordered to (A^n, B^n)-major
            let mut r_n = vec![0.0f64; da_n * db_n];
            for (idx, item) in r_n.iter_mut().enumerate() {
                let (mut ia, mut jb) = (idx / db_n, idx % db_n);
                let mut val = 1.0;
                for _ in 0..n {
                    let a = ia % d_a;
                    let b = jb % d_b;
                    val *= r[a * d_b + b];
                    ia /= d_a;
                    jb /= d_b;
                }
                *item = val;
            }
            let mut g_n = vec![0.0f64; da_n];
            for (idx, item) in g_n.iter_mut().enumerate() {
                let mut ia = idx;
                let mut val = 1.0;
                for _ in 0..n {
                    val *= g[ia % d_a];
                    ia /= d_a;
                }
                *item = val;
            }
            let total = eps + eps_prime;
            let value =
                classical_oracle(OracleKind::IMaxUpSmoothed, &r_n, &g_n, (da_n, db_n), total)?;
            let lower =
                classical_oracle(OracleKind::IMaxDownSmoothed, &r_n, &g_n, (da_n, db_n), total)?;
            let upper = classical_oracle(
                OracleKind::IMaxDownSmoothed,
                &r_n,
                &g_n,
                (da_n, db_n),
                eps_prime,
            )? + slack;
            out.push(AepPoint {
                n,
                eps,
                value_bits: value / n as f64,
                lower_bound: lower / n as f64,
                upper_bound: upper / n as f64,
            });
        }
        return Ok(out);
    }
    // quantum path: explicit tensor powers through the SDP engine
    let mut rho_n = ts.rho().op().clone();
    let mut gamma_n = ts.gamma().op().clone();
    for n in 1..=n_max {
        if rho_n.dim() > 64 {
            return Err(Error::DimMismatch(format!(
                "quantum path dimension {} too large at n = {n}",
                rho_n.dim()
            )));
        }
        let da_n = d_a.pow(n as u32);
        let db_n = d_b.pow(n as u32);
        // reorder ((AB)^n) -> (A^n, B^n)
        let mut factor_dims = Vec::new();
        let mut order = Vec::new();
        for _ in 0..n {
            factor_dims.push(d_a);
            factor_dims.push(d_b);
        }
        for k in 0..n {
            order.push(2 * k);
        }
        for k in 0..n {
            order.push(2 * k + 1);
        }
        let rho_sorted = rho_n.permute_subsystems(&SubsystemDims::new(&factor_dims)?, &order)?;
        let state = DensityOperator::with_tols(
            rho_sorted,
            SubsystemDims::new(&[da_n, db_n])?,
            1e-7,
            1e-7,
        )?;
        let gamma_state =
            DensityOperator::with_tols(gamma_n.clone(), SubsystemDims::new(&[da_n])?, 1e-7, 1e-7)?;
        let ts_n = ThermoState::new(state, gamma_state)?;
        let total = eps + eps_prime;
        let value = i_max_up_smoothed(&ts_n, total, params)?.bits;
        let lower = i_max_down_smoothed(&ts_n, total, params)?.bits;
        let upper = i_max_down_smoothed(&ts_n, eps_prime, params)?.bits + slack;
        out.push(AepPoint {
            n,
            eps,
            value_bits: value / n as f64,
            lower_bound: lower / n as f64,
            upper_bound: upper / n as f64,
        });
        if n < n_max {
            rho_n = rho_n.tensor(ts.rho().op());
            gamma_n = gamma_n.tensor(ts.gamma().op());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub dims_list: Vec<(usize, usize)>,
    pub samples_per_dims: usize,
    pub seed: u64,
    pub sandwiched_alphas: Vec<f64>,
    pub petz_alphas: Vec<f64>,
    pub duality_samples: usize,
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dims_list: vec![(2, 2), (2, 3), (3, 3)],
            samples_per_dims: 67,
            seed: 2024,
            sandwiched_alphas: vec![0.6, 2.0, 8.0],
            petz_alphas: vec![0.5, 1.5, 2.0],
            duality_samples: 100,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub states_checked: usize,
    pub sandwich_violations: usize,
    pub max_sandwich_defect: f64,
    pub special_table_max_error: f64,
    pub duality_checked: usize,
    pub duality_max_residual: f64,
}

/// Sandwich, special-state, and duality sweep over a random state corpus.
pub fn entropy_sandwich_sweep(config: &SweepConfig) -> Result<SweepReport> {
    let mut states_checked = 0usize;
    let mut violations = 0usize;
    let mut max_defect = 0.0f64;
    let mut seed = config.seed;
    for &(d_a, d_b) in &config.dims_list {
        let dims = SubsystemDims::new(&[d_a, d_b])?;
        for _ in 0..config.samples_per_dims {
            seed += 1;
            let rho = random_state(&dims, d_a * d_b, seed)?;
            let lo = h_min_cond(&rho)?.bits;
            let mid = h_vn_cond(&rho)?.bits;
            let hi = h_max_cond(&rho)?.bits;
            let mut inner_lo = mid;
            let mut inner_hi = mid;
            for &alpha in &config.sandwiched_alphas {
                let v = h_sandwiched_down(&rho, alpha)?.bits;
                inner_lo = inner_lo.min(v);
                inner_hi = inner_hi.max(v);
            }
            for &alpha in &config.petz_alphas {
                let v = h_petz_up(&rho, alpha)?.bits;
                inner_lo = inner_lo.min(v);
                inner_hi = inner_hi.max(v);
            }
            let defect = (lo - inner_lo).max(inner_hi - hi);
            max_defect = max_defect.max(defect);
            if defect > config.tol {
                violations += 1;
            }
            states_checked += 1;
        }
    }

    // special-state table, items (i)-(iv)
    let mut table_err = 0.0f64;
    for d in [2usize, 3] {
        let log_d = (d as f64).log2();
        let sigma = random_state(&SubsystemDims::new(&[d])?, d, config.seed ^ 0xfeed)?;
        let pi_sigma = DensityOperator::new(
            HermitianOperator::identity(d)
                .scale(1.0 / d as f64)
                .tensor(sigma.op()),
            SubsystemDims::new(&[d, d])?,
        )?;
        let pure_sigma = DensityOperator::new(
            HermitianOperator::basis_projector(d, 0).tensor(sigma.op()),
            SubsystemDims::new(&[d, d])?,
        )?;
        let phibar = special_state(SpecialState::MaxClassical, d, d)?;
        let phi = special_state(SpecialState::MaxEntangled, d, d)?;
        for (state, expect) in [
            (pi_sigma, log_d),
            (pure_sigma, 0.0),
            (phibar, 0.0),
            (phi, -log_d),
        ] {
            for f in [h_min_cond, h_vn_cond, h_max_cond] {
                table_err = table_err.max((f(&state)?.bits - expect).abs());
            }
        }
    }

    // duality on random pure tripartite states, dims (2, 2, 4)
    let tri = SubsystemDims::new(&[2, 2, 4])?;
    let mut duality_max = 0.0f64;
    for k in 0..config.duality_samples {
        let psi = random_state(&tri, 1, config.seed ^ (0xd0 + k as u64))?;
        let rho_ab = DensityOperator::with_tols(
            psi.op().partial_trace(&tri, &[0, 1])?,
            SubsystemDims::new(&[2, 2])?,
            1e-7,
            1e-7,
        )?;
        let rho_ac = DensityOperator::with_tols(
            psi.op().partial_trace(&tri, &[0, 2])?,
            SubsystemDims::new(&[2, 4])?,
            1e-7,
            1e-7,
        )?;
        let sum = h_min_cond(&rho_ab)?.bits + h_max_cond(&rho_ac)?.bits;
        duality_max = duality_max.max(sum.abs());
    }

    Ok(SweepReport {
        states_checked,
        sandwich_violations: violations,
        max_sandwich_defect: max_defect,
        special_table_max_error: table_err,
        duality_checked: config.duality_samples,
        duality_max_residual: duality_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{gibbs_state, Hamiltonian};

    fn pi(d: usize) -> DensityOperator {
        DensityOperator::new(
            HermitianOperator::identity(d).scale(1.0 / d as f64),
            SubsystemDims::new(&[d]).unwrap(),
        )
        .unwrap()
    }

    fn uniform_ts(rho: DensityOperator) -> ThermoState {
        let d_a = rho.dims().dim(0);
        ThermoState::new(rho, pi(d_a)).unwrap()
    }

    #[test]
    fn prep_and_eras_special_values() {
        let phi = special_state(SpecialState::MaxEntangled, 2, 2).unwrap();
        let ts = uniform_ts(phi);
        let w = w_prep_oneshot(&ts, 0.0, 1.0, &SmoothParams::default()).unwrap();
        assert!((w.work_bits - 1.0).abs() < 1e-9, "{}", w.work_bits);
        assert_eq!(w.method, WorkMethod::ClosedForm);
        let w = w_eras_oneshot(&ts, 0.0, 1.0, &SmoothParams::default()).unwrap();
        assert!((w.work_bits + 1.0).abs() < 1e-9);

        // Landauer: erasing pi_A (x) sigma_B costs exactly one bit
        let sigma = random_state(&SubsystemDims::new(&[2]).unwrap(), 2, 5).unwrap();
        let rho = DensityOperator::new(
            pi(2).op().tensor(sigma.op()),
            SubsystemDims::new(&[2, 2]).unwrap(),
        )
        .unwrap();
        let ts = uniform_ts(rho);
        let w = w_eras_oneshot(&ts, 0.0, 1.0, &SmoothParams::default()).unwrap();
        assert!((w.work_bits - 1.0).abs() < 1e-9);
        let w = w_prep_oneshot(&ts, 0.0, 1.0, &SmoothParams::default()).unwrap();
        assert!((w.work_bits + 1.0).abs() < 1e-9);

        // Phi-bar erasure is free
        let phibar = special_state(SpecialState::MaxClassical, 2, 2).unwrap();
        let w = w_eras_oneshot(&uniform_ts(phibar), 0.0, 1.0, &SmoothParams::default()).unwrap();
        assert!(w.work_bits.abs() < 1e-9);
    }

    #[test]
    fn prep_monotone_in_eps() {
        let rho = random_state(&SubsystemDims::new(&[2, 2]).unwrap(), 4, 9).unwrap();
        let ts = uniform_ts(rho);
        let mut prev = f64::INFINITY;
        for eps in [0.0, 0.05, 0.15] {
            let w = w_prep_oneshot(&ts, eps, 1.0, &SmoothParams::default())
                .unwrap()
                .work_bits;
            assert!(w <= prev + 2e-4, "eps {eps}: {w} > {prev}");
            prev = w;
        }
    }

    #[test]
    fn uniform_path_agrees_with_general() {
        for seed in 0..10u64 {
            let rho = random_state(&SubsystemDims::new(&[2, 2]).unwrap(), 4, 700 + seed).unwrap();
            let ts = uniform_ts(rho.clone());
            for (dir, general) in [
                (
                    Direction::Prep,
                    w_prep_oneshot(&ts, 0.0, 1.0, &SmoothParams::default()).unwrap(),
                ),
                (
                    Direction::Eras,
                    w_eras_oneshot(&ts, 0.0, 1.0, &SmoothParams::default()).unwrap(),
                ),
            ] {
                let uni = w_oneshot_uniform(&rho, dir, 0.0, 1.0, &SmoothParams::default()).unwrap();
                assert!(
                    (uni.work_bits - general.work_bits).abs() < 1e-6,
                    "{:?}: {} vs {}",
                    dir,
                    uni.work_bits,
                    general.work_bits
                );
            }
        }
    }

    #[test]
    fn asymptotic_properties() {
        let h = Hamiltonian::new(HermitianOperator::from_diag(&[0.0, 0.9]));
        let gamma = gibbs_state(&h, 1.0).unwrap();
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let rho = random_state(&dims, 4, 11).unwrap();
        let sigma = random_state(&dims, 4, 12).unwrap();
        let ts_r = ThermoState::new(rho, gamma.clone()).unwrap();
        let ts_s = ThermoState::new(sigma, gamma.clone()).unwrap();

        // same state both sides -> 0
        let w = w_asymptotic(&ts_r, &ts_r, 1.0).unwrap();
        assert!(w.work_bits.abs() < 1e-12);

        // antisymmetry
        let ab = w_asymptotic(&ts_r, &ts_s, 1.3).unwrap().work_bits;
        let ba = w_asymptotic(&ts_s, &ts_r, 1.3).unwrap().work_bits;
        assert!((ab + ba).abs() < 1e-9);

        // trivial Hamiltonian case equals the conditional-negentropy change
        let ts_u = uniform_ts(random_state(&dims, 4, 13).unwrap());
        let ts_v = uniform_ts(random_state(&dims, 4, 14).unwrap());
        let w = w_asymptotic(&ts_u, &ts_v, 1.0).unwrap().work_bits;
        let expect = (1.0 - h_vn_cond(ts_v.rho()).unwrap().bits)
            - (1.0 - h_vn_cond(ts_u.rho()).unwrap().bits);
        assert!((w - expect).abs() < 1e-9);

        // reversibility: prep = -eras as formula identity
        let prep = -(1.0 - i_umegaki(&ts_r).unwrap().bits);
        let eras = 1.0 - i_umegaki(&ts_r).unwrap().bits;
        assert!((prep + eras).abs() < 1e-12);
    }

    #[test]
    fn rate_identities() {
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let rho = random_state(&dims, 4, 21).unwrap();
        let ts = uniform_ts(rho);
        assert!((rate_asymptotic(&ts, &ts).unwrap() - 1.0).abs() < 1e-12);

        let phi = uniform_ts(special_state(SpecialState::MaxEntangled, 2, 2).unwrap());
        let phibar = uniform_ts(special_state(SpecialState::MaxClassical, 2, 2).unwrap());
        let r = rate_asymptotic(&phi, &phibar).unwrap();
        assert!((r - 2.0).abs() < 1e-9, "{r}");
        let back = rate_asymptotic(&phibar, &phi).unwrap();
        assert!((r * back - 1.0).abs() < 1e-9);
    }

    #[test]
    fn aep_classical_fast_path() {
        let rho = DensityOperator::new(
            HermitianOperator::from_diag(&[0.9, 0.1]),
            SubsystemDims::new(&[2, 1]).unwrap(),
        )
        .unwrap();
        let ts = uniform_ts(rho);
        let pts =
            aep_experiment(&ts, 0.1, 0.1, 10, true, &SmoothParams::default()).unwrap();
        assert_eq!(pts.len(), 10);
        for p in &pts {
            assert!(
                p.lower_bound <= p.value_bits + 1e-9 && p.value_bits <= p.upper_bound + 1e-9,
                "n={}: {} {} {}",
                p.n,
                p.lower_bound,
                p.value_bits,
                p.upper_bound
            );
        }
        // independent tail-cut evaluation at n = 10, eps_total = 0.2:
        // the top binomial class carries 0.9^10 and the rest 0.651322, so
        // the cap solves c + 0.651322 = 0.8 and the value is
        // (1/10) log2(c * 2^10)
        let c = 0.8 - (1.0 - 0.9f64.powi(10));
        let expect = (c * 1024.0).log2() / 10.0;
        let last = pts.last().unwrap();
        assert!(
            (last.value_bits - expect).abs() < 1e-9,
            "{} vs {expect}",
            last.value_bits
        );
    }

    #[test]
    fn aep_quantum_path_single_copy_consistency() {
        let rho = random_state(&SubsystemDims::new(&[2, 2]).unwrap(), 4, 31).unwrap();
        let ts = uniform_ts(rho);
        let params = SmoothParams::default();
        let pts = aep_experiment(&ts, 0.1, 0.1, 1, false, &params).unwrap();
        assert_eq!(pts.len(), 1);
        let p = &pts[0];
        assert!(p.lower_bound <= p.value_bits + 2e-4 && p.value_bits <= p.upper_bound + 2e-4);
        // n = 1 must reproduce the direct single-copy quantities
        let direct = i_max_up_smoothed(&ts, 0.2, &params).unwrap().bits;
        assert!((p.value_bits - direct).abs() < 1e-9);
    }

    #[test]
    fn aep_quantum_free_state_two_copies() {
        // trivial B keeps the two-copy blocks at dimension 4
        let gamma = gibbs_state(
            &Hamiltonian::new(HermitianOperator::from_diag(&[0.0, 0.5])),
            1.0,
        )
        .unwrap();
        let rho = DensityOperator::new(
            gamma.op().tensor(&HermitianOperator::identity(1)),
            SubsystemDims::new(&[2, 1]).unwrap(),
        )
        .unwrap();
        let ts = ThermoState::new(rho, gamma).unwrap();
        let params = SmoothParams::with_bisect_tol(1e-3);
        let pts = aep_experiment(&ts, 0.1, 0.1, 2, false, &params).unwrap();
        for p in &pts {
            // smoothing pushes a free state's value slightly negative; it
            // must never look resourceful beyond the bisection slack
            assert!(p.value_bits <= 1e-3, "n={}: {}", p.n, p.value_bits);
        }
    }

    #[test]
    fn sweep_runs_clean_on_small_corpus() {
        let config = SweepConfig {
            samples_per_dims: 5,
            duality_samples: 10,
            ..Default::default()
        };
        let report = entropy_sandwich_sweep(&config).unwrap();
        assert_eq!(report.sandwich_violations, 0, "{report:?}");
        assert!(report.special_table_max_error < 1e-9);
        assert!(report.duality_max_residual < 1e-6);
    }
}
