//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (run with `-- --nocapture` to see the lines for passing
//! criteria). Every tolerance is pinned in code.

use sidework::channels::PREDICATE_TOL;
use sidework::conditional::{h_max_cond, h_min_cond, h_vn_cond};
use sidework::linalg::{HermitianOperator, SubsystemDims};
use sidework::protocols::ProtocolParams;
use sidework::smoothing::{SdpParams, SmoothParams};
use sidework::states::{
    gibbs_state, random_state, special_state, DensityOperator, Hamiltonian, SpecialState,
    ThermoState,
};
use sidework::*;
use std::time::Instant;

fn report(id: u32, name: &str, started: Instant, outcome: std::result::Result<String, String>) {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => println!("acceptance {id:02} {name}: PASS ({detail}; {secs:.2}s)"),
        Err(detail) => {
            println!("acceptance {id:02} {name}: FAIL ({detail}; {secs:.2}s)");
            panic!("criterion {id} failed: {detail}");
        }
    }
}

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

fn random_gibbs(seed: u64) -> DensityOperator {
    let rho = random_state(&SubsystemDims::new(&[2]).unwrap(), 2, seed).unwrap();
    // mix toward uniform so the Gibbs state stays comfortably full rank
    let op = rho.op().scale(0.8).add(&pi(2).op().scale(0.2));
    DensityOperator::new(op, SubsystemDims::new(&[2]).unwrap()).unwrap()
}

/// Criterion 1: the special-state table for |A| in {2, 3} at 1e-9.
#[test]
fn criterion_01_special_state_table() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let mut max_err = 0.0f64;
        for d in [2usize, 3] {
            let log_d = (d as f64).log2();
            let sigma = random_state(&SubsystemDims::new(&[d]).unwrap(), d, 11).unwrap();
            let dims = SubsystemDims::new(&[d, d]).unwrap();
            let cases = [
                (
                    DensityOperator::new(pi(d).op().tensor(sigma.op()), dims.clone()).unwrap(),
                    log_d,
                ),
                (
                    DensityOperator::new(
                        HermitianOperator::basis_projector(d, 0).tensor(sigma.op()),
                        dims.clone(),
                    )
                    .unwrap(),
                    0.0,
                ),
                (special_state(SpecialState::MaxClassical, d, d).unwrap(), 0.0),
                (
                    special_state(SpecialState::MaxEntangled, d, d).unwrap(),
                    -log_d,
                ),
            ];
            for (state, expect) in cases {
                for f in [h_min_cond, h_vn_cond, h_max_cond] {
                    let v = f(&state).map_err(|e| e.to_string())?.bits;
                    max_err = max_err.max((v - expect).abs());
                }
            }
        }
        if max_err > 1e-9 {
            return Err(format!("max error {max_err:.3e} > 1e-9"));
        }
        Ok(format!("max error {max_err:.3e}"))
    };
    report(1, "special-state table", started, run());
}

/// Criterion 2: sandwich theorem on 200 random states at 1e-7.
#[test]
fn criterion_02_sandwich() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let mut violations = 0usize;
        let mut checked = 0usize;
        let mut seed = 100u64;
        for (d_a, d_b) in [(2usize, 2usize), (2, 3), (3, 3)] {
            let dims = SubsystemDims::new(&[d_a, d_b]).unwrap();
            for _ in 0..67 {
                seed += 1;
                let rho = random_state(&dims, d_a * d_b, seed).unwrap();
                let lo = h_min_cond(&rho).unwrap().bits;
                let mid = h_vn_cond(&rho).unwrap().bits;
                let hi = h_max_cond(&rho).unwrap().bits;
                if lo > mid + 1e-7 || mid > hi + 1e-7 {
                    violations += 1;
                }
                checked += 1;
            }
        }
        if violations > 0 {
            return Err(format!("{violations} violations out of {checked}"));
        }
        Ok(format!("{checked} states, zero violations"))
    };
    report(2, "sandwich theorem", started, run());
}

/// Criterion 3: min/max duality on 100 random pure (2,2,4) states at 1e-6.
#[test]
fn criterion_03_duality() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let tri = SubsystemDims::new(&[2, 2, 4]).unwrap();
        let mut max_residual = 0.0f64;
        for k in 0..100u64 {
            let psi = random_state(&tri, 1, 300 + k).unwrap();
            let rho_ab = DensityOperator::with_tols(
                psi.op().partial_trace(&tri, &[0, 1]).unwrap(),
                SubsystemDims::new(&[2, 2]).unwrap(),
                1e-7,
                1e-7,
            )
            .unwrap();
            let rho_ac = DensityOperator::with_tols(
                psi.op().partial_trace(&tri, &[0, 2]).unwrap(),
                SubsystemDims::new(&[2, 4]).unwrap(),
                1e-7,
                1e-7,
            )
            .unwrap();
            let sum = h_min_cond(&rho_ab).unwrap().bits + h_max_cond(&rho_ac).unwrap().bits;
            max_residual = max_residual.max(sum.abs());
        }
        if max_residual > 1e-6 {
            return Err(format!("max residual {max_residual:.3e} > 1e-6"));
        }
        Ok(format!("100 states, max residual {max_residual:.3e}"))
    };
    report(3, "min/max duality", started, run());
}

/// Criterion 4: eps = 0 recovery of closed forms on 50 random (2,2)
/// instances; 1e-4 for the bisection-limited quantity, 1e-5 for direct SDPs.
#[test]
fn criterion_04_eps_zero_recovery() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let params = SmoothParams::default();
        let mut worst_bisect = 0.0f64;
        let mut worst_direct = 0.0f64;
        for k in 0..50u64 {
            let rho = random_state(&dims, 4, 400 + k).unwrap();
            let gamma = random_gibbs(450 + k);
            let ts = ThermoState::new(rho.clone(), gamma.clone()).unwrap();

            let up = i_max_up_smoothed(&ts, 0.0, &params).map_err(|e| e.to_string())?;
            worst_bisect = worst_bisect.max((up.bits - i_max_up(&ts).unwrap().bits).abs());

            let down = i_min_down_smoothed(&ts, 0.0, &params).map_err(|e| e.to_string())?;
            worst_direct = worst_direct.max((down.bits - i_min_down(&ts).unwrap().bits).abs());

            let alt = i_max_down_smoothed(&ts, 0.0, &params).map_err(|e| e.to_string())?;
            worst_direct = worst_direct.max((alt.bits - i_max_down(&ts).unwrap().bits).abs());

            let reference = gamma.op().tensor(ts.rho_b().unwrap().op());
            let dm = d_min_smoothed(rho.op(), &reference, 0.0).map_err(|e| e.to_string())?;
            worst_direct =
                worst_direct.max((dm.value - d_min(rho.op(), &reference).unwrap().value).abs());
        }
        if worst_bisect > 1e-4 {
            return Err(format!("bisection-limited error {worst_bisect:.3e} > 1e-4"));
        }
        if worst_direct > 1e-5 {
            return Err(format!("direct-SDP error {worst_direct:.3e} > 1e-5"));
        }
        Ok(format!(
            "50 instances, bisection {worst_bisect:.2e}, direct {worst_direct:.2e}"
        ))
    };
    report(4, "eps=0 recovery", started, run());
}

/// Criterion 5: classical oracle equivalence on 30 random diagonal (2,2)
/// instances at eps in {0.05, 0.1, 0.2}, each within 1e-6.
#[test]
fn criterion_05_classical_oracle() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let tight = SmoothParams {
            sdp: SdpParams {
                gap_tol: 1e-9,
                feas_tol: 1e-9,
                max_iter: 500,
            },
            bisect_tol_bits: 5e-8,
            feas_slack: 5e-9,
        };
        let mut rng_seed = 500u64;
        let mut worst = 0.0f64;
        for _ in 0..30 {
            rng_seed += 1;
            // random diagonal instance with full-rank diagonal gamma
            let probe = random_state(&dims, 4, rng_seed).unwrap();
            let mut r: Vec<f64> = (0..4).map(|i| probe.op().matrix()[(i, i)].re).collect();
            let total: f64 = r.iter().sum();
            for v in &mut r {
                *v /= total;
            }
            let gprobe = random_state(&SubsystemDims::new(&[2]).unwrap(), 2, rng_seed ^ 77).unwrap();
            let g: Vec<f64> = (0..2)
                .map(|i| 0.8 * gprobe.op().matrix()[(i, i)].re + 0.1)
                .collect();
            let rho = DensityOperator::new(HermitianOperator::from_diag(&r), dims.clone()).unwrap();
            let gamma = DensityOperator::new(
                HermitianOperator::from_diag(&g),
                SubsystemDims::new(&[2]).unwrap(),
            )
            .unwrap();
            let ts = ThermoState::new(rho.clone(), gamma).unwrap();
            for eps in [0.05, 0.1, 0.2] {
                let sdp = i_min_down_smoothed(&ts, eps, &tight).map_err(|e| e.to_string())?;
                let oracle =
                    classical_oracle(OracleKind::IMinDownSmoothed, &r, &g, (2, 2), eps).unwrap();
                worst = worst.max((sdp.bits - oracle).abs());

                let sdp = i_max_up_smoothed(&ts, eps, &tight).map_err(|e| e.to_string())?;
                let oracle =
                    classical_oracle(OracleKind::IMaxUpSmoothed, &r, &g, (2, 2), eps).unwrap();
                worst = worst.max((sdp.bits - oracle).abs());

                let sdp = i_max_down_smoothed(&ts, eps, &tight).map_err(|e| e.to_string())?;
                let oracle =
                    classical_oracle(OracleKind::IMaxDownSmoothed, &r, &g, (2, 2), eps).unwrap();
                worst = worst.max((sdp.bits - oracle).abs());

                // hypothesis-testing divergence against a diagonal sigma
                let s: Vec<f64> = vec![0.4, 0.25, 0.2, 0.15];
                let sigma_op = HermitianOperator::from_diag(&s);
                let dm = d_min_smoothed(rho.op(), &sigma_op, eps).map_err(|e| e.to_string())?;
                let oracle =
                    classical_oracle(OracleKind::DMinSmoothed, &r, &s, (2, 2), eps).unwrap();
                worst = worst.max((dm.value - oracle).abs());
            }
        }
        if worst > 1e-6 {
            return Err(format!("worst disagreement {worst:.3e} > 1e-6"));
        }
        Ok(format!("30 instances x 3 eps, worst {worst:.2e}"))
    };
    report(5, "classical oracle equivalence", started, run());
}

/// Criterion 6: one-shot theorems end to end on 20 random (2,2) thermo
/// states at eps = 0.1: covariance at 1e-7, error at eps + 1e-6, ideal work
/// within 3e-4 of the theorem formulas.
#[test]
fn criterion_06_one_shot_end_to_end() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let params = ProtocolParams::default();
        let eps = 0.1;
        let mut worst_gap = 0.0f64;
        let mut worst_err = 0.0f64;
        let mut worst_cov = 0.0f64;
        for k in 0..20u64 {
            let rho = random_state(&dims, 4, 600 + k).unwrap();
            let gamma = random_gibbs(650 + k);
            let ts = ThermoState::new(rho.clone(), gamma.clone()).unwrap();

            let prep = build_preparation_protocol(&ts, eps, &params).map_err(|e| e.to_string())?;
            let formula = i_max_up_smoothed(&ts, eps, &params.smooth)
                .map_err(|e| e.to_string())?
                .bits
                - 1.0;
            worst_gap = worst_gap.max((prep.ideal_work_bits - formula).abs());
            let input = default_pure_input(2).unwrap();
            let rep = verify_protocol(&prep, &input, &rho, eps).map_err(|e| e.to_string())?;
            worst_err = worst_err.max(rep.achieved_error - eps);
            worst_cov = worst_cov.max(rep.covariance_residual);
            if !rep.pass {
                return Err(format!("preparation verification failed at seed {k}: {rep:?}"));
            }

            let eras = build_erasure_protocol(&ts, eps, &params).map_err(|e| e.to_string())?;
            let formula = 1.0
                - i_min_down_smoothed(&ts, eps, &params.smooth)
                    .map_err(|e| e.to_string())?
                    .bits;
            worst_gap = worst_gap.max((eras.ideal_work_bits - formula).abs());
            let target = DensityOperator::new(
                HermitianOperator::basis_projector(2, 0),
                SubsystemDims::new(&[2]).unwrap(),
            )
            .unwrap();
            let rep = verify_protocol(&eras, &ts, &target, eps).map_err(|e| e.to_string())?;
            worst_err = worst_err.max(rep.achieved_error - eps);
            worst_cov = worst_cov.max(rep.covariance_residual);
            if !rep.pass {
                return Err(format!("erasure verification failed at seed {k}: {rep:?}"));
            }
        }
        if worst_gap > 3e-4 {
            return Err(format!("work gap {worst_gap:.3e} > 3e-4"));
        }
        Ok(format!(
            "20 states, work gap {worst_gap:.2e}, error slack {worst_err:.2e}, covariance {worst_cov:.2e}"
        ))
    };
    report(6, "one-shot theorems end-to-end", started, run());
}

/// Criterion 7: Landauer reproduction at 1e-9.
#[test]
fn criterion_07_landauer() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let sigma = random_state(&SubsystemDims::new(&[2]).unwrap(), 2, 700).unwrap();
        let rho = DensityOperator::new(
            pi(2).op().tensor(sigma.op()),
            SubsystemDims::new(&[2, 2]).unwrap(),
        )
        .unwrap();
        let ts = uniform_ts(rho);
        let w = w_eras_oneshot(&ts, 0.0, 1.0, &SmoothParams::default()).unwrap();
        if (w.work_bits - 1.0).abs() > 1e-9 {
            return Err(format!("erasure work {} != 1 bit", w.work_bits));
        }
        Ok(format!("erasure work {} bits", w.work_bits))
    };
    report(7, "Landauer reproduction", started, run());
}

/// Criterion 8: smoothed-quantity monotonicity under 100 sampled free
/// operations (increase at most 1e-5) and the embedding identity with
/// |A'| in {2, 3} (offset log2|A'| within 1e-4).
#[test]
fn criterion_08_monotonicity_and_embedding() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let eps = 0.1;
        let params = SmoothParams::with_bisect_tol(1e-6);
        let gamma = random_gibbs(800);
        let mut worst_increase = f64::NEG_INFINITY;
        for k in 0..100u64 {
            let rho = random_state(&dims, 4, 810 + k).unwrap();
            let ts = ThermoState::new(rho.clone(), gamma.clone()).unwrap();
            let op = random_free_operation(&dims, &dims, &gamma, &gamma, 900 + k)
                .map_err(|e| e.to_string())?;
            let out = apply_channel(&op.channel, &rho).map_err(|e| e.to_string())?;
            let ts_out = ThermoState::new(out, gamma.clone()).unwrap();

            let before = i_max_up_smoothed(&ts, eps, &params).map_err(|e| e.to_string())?;
            let after = i_max_up_smoothed(&ts_out, eps, &params).map_err(|e| e.to_string())?;
            worst_increase = worst_increase.max(after.bits - before.bits);

            let before = i_min_down_smoothed(&ts, eps, &params).map_err(|e| e.to_string())?;
            let after = i_min_down_smoothed(&ts_out, eps, &params).map_err(|e| e.to_string())?;
            worst_increase = worst_increase.max(after.bits - before.bits);
        }
        if worst_increase > 1e-5 {
            return Err(format!("monotonicity violated by {worst_increase:.3e}"));
        }

        // embedding identity
        let params = SmoothParams::with_bisect_tol(1e-5);
        let mut worst_offset = 0.0f64;
        for d_anc in [2usize, 3] {
            let rho = random_state(&dims, 4, 950 + d_anc as u64).unwrap();
            let gamma = random_gibbs(960 + d_anc as u64);
            let ts = ThermoState::new(rho.clone(), gamma.clone()).unwrap();
            let embedded_rho = DensityOperator::new(
                HermitianOperator::basis_projector(d_anc, 0).tensor(rho.op()),
                SubsystemDims::new(&[d_anc * 2, 2]).unwrap(),
            )
            .unwrap();
            let embedded_gamma = DensityOperator::new(
                HermitianOperator::identity(d_anc)
                    .scale(1.0 / d_anc as f64)
                    .tensor(gamma.op()),
                SubsystemDims::new(&[d_anc * 2]).unwrap(),
            )
            .unwrap();
            let ts_emb = ThermoState::new(embedded_rho, embedded_gamma).unwrap();
            let offset = (d_anc as f64).log2();

            let base = i_max_up_smoothed(&ts, eps, &params).map_err(|e| e.to_string())?;
            let emb = i_max_up_smoothed(&ts_emb, eps, &params).map_err(|e| e.to_string())?;
            worst_offset = worst_offset.max((emb.bits - base.bits - offset).abs());

            let base = i_min_down_smoothed(&ts, eps, &params).map_err(|e| e.to_string())?;
            let emb = i_min_down_smoothed(&ts_emb, eps, &params).map_err(|e| e.to_string())?;
            worst_offset = worst_offset.max((emb.bits - base.bits - offset).abs());
        }
        if worst_offset > 1e-4 {
            return Err(format!("embedding offset error {worst_offset:.3e} > 1e-4"));
        }
        Ok(format!(
            "100 free ops, worst increase {worst_increase:.2e}; embedding offset {worst_offset:.2e}"
        ))
    };
    report(8, "monotonicity and embedding", started, run());
}

/// Criterion 9: one-shot AEP bounds for classical diag(0.9, 0.1) with
/// gamma = pi_2 and eps = eps' = 0.1: the chain holds at each n <= 10 and
/// the per-copy value at n = 10 is within 0.15 bits of 0.5310.
#[test]
fn criterion_09_aep_bounds() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let rho = DensityOperator::new(
            HermitianOperator::from_diag(&[0.9, 0.1]),
            SubsystemDims::new(&[2, 1]).unwrap(),
        )
        .unwrap();
        let ts = uniform_ts(rho);
        let pts = aep_experiment(&ts, 0.1, 0.1, 10, true, &SmoothParams::default())
            .map_err(|e| e.to_string())?;
        for p in &pts {
            if p.lower_bound > p.value_bits + 1e-9 || p.value_bits > p.upper_bound + 1e-9 {
                return Err(format!(
                    "chain violated at n = {}: {} {} {}",
                    p.n, p.lower_bound, p.value_bits, p.upper_bound
                ));
            }
        }
        let last = pts.last().unwrap();
        let target = 0.5310;
        if (last.value_bits - target).abs() > 0.15 {
            return Err(format!(
                "per-copy value at n = 10 is {:.4}, not within 0.15 of {target}",
                last.value_bits
            ));
        }
        Ok(format!(
            "chain holds for n <= 10; value at n = 10 is {:.4}",
            last.value_bits
        ))
    };
    report(9, "one-shot AEP bounds", started, run());
}

/// Criterion 10: triangle inequality via composed protocols on 10 random
/// (2,2) triples at eps = eps' = 0.1, slack 3e-4.
#[test]
fn criterion_10_triangle_inequality() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let params = ProtocolParams {
            erasure_battery_out: 2,
            ..Default::default()
        };
        let eps = 0.1;
        let mut worst_slack = f64::NEG_INFINITY;
        for k in 0..10u64 {
            let rho = random_state(&dims, 4, 1000 + k).unwrap();
            let sigma = random_state(&dims, 4, 1050 + k).unwrap();
            let ts_rho = uniform_ts(rho.clone());
            let ts_sigma = uniform_ts(sigma.clone());

            let eras = build_erasure_protocol(&ts_rho, eps, &params).map_err(|e| e.to_string())?;
            let prep =
                build_preparation_protocol(&ts_sigma, eps, &params).map_err(|e| e.to_string())?;
            let comp = compose_protocols(&eras, &prep, 1 << 22).map_err(|e| e.to_string())?;

            // the composite realizes the conversion within eps + eps'
            let rep =
                verify_protocol(&comp, &ts_rho, &sigma, 2.0 * eps).map_err(|e| e.to_string())?;
            if !rep.pass {
                return Err(format!("composite verification failed at seed {k}: {rep:?}"));
            }

            // W^{eps+eps'}(rho;sigma) <= composite work <= W_eras + W_prep + 3e-4
            let w_eras = w_eras_oneshot(&ts_rho, eps, 1.0, &params.smooth)
                .map_err(|e| e.to_string())?
                .work_bits;
            let w_prep = w_prep_oneshot(&ts_sigma, eps, 1.0, &params.smooth)
                .map_err(|e| e.to_string())?
                .work_bits;
            worst_slack = worst_slack.max(comp.ideal_work_bits - (w_eras + w_prep));
        }
        if worst_slack > 3e-4 {
            return Err(format!("triangle slack {worst_slack:.3e} > 3e-4"));
        }
        Ok(format!("10 triples, worst slack {worst_slack:.2e}"))
    };
    report(10, "triangle inequality", started, run());
}

/// Criterion 11: equivalence of the covariance predicate and the
/// Gibbs-preserving + nonsignaling pair on 200 channels at matched 1e-8,
/// with at least 50 free and 50 non-free samples.
#[test]
fn criterion_11_predicate_equivalence() {
    let started = Instant::now();
    let run = || -> std::result::Result<String, String> {
        let dims = SubsystemDims::new(&[2, 2]).unwrap();
        let mut free = 0usize;
        let mut nonfree = 0usize;
        for k in 0..200u64 {
            let gamma = random_gibbs(1100 + (k % 7));
            let op = if k % 2 == 0 {
                random_free_operation(&dims, &dims, &gamma, &gamma, 1200 + k)
                    .map_err(|e| e.to_string())?
            } else {
                let ch = random_channel(&dims, &dims, 2, 1300 + k).map_err(|e| e.to_string())?;
                ThermoOperation::new(ch, gamma.clone(), gamma.clone()).unwrap()
            };
            let (covariant, _) = is_cond_thermal_covariant(&op, PREDICATE_TOL).unwrap();
            let (preserving, _) = is_cond_gibbs_preserving(&op, PREDICATE_TOL).unwrap();
            let (nonsignaling, _) =
                is_nonsignaling_a_to_b(&op.channel, 2, 2, PREDICATE_TOL).unwrap();
            if covariant != (preserving && nonsignaling) {
                return Err(format!(
                    "predicates disagree at sample {k}: covariant={covariant}, preserving={preserving}, nonsignaling={nonsignaling}"
                ));
            }
            if covariant {
                free += 1;
            } else {
                nonfree += 1;
            }
        }
        if free < 50 || nonfree < 50 {
            return Err(format!("coverage too thin: {free} free, {nonfree} non-free"));
        }
        Ok(format!("200 channels agree; {free} free, {nonfree} non-free"))
    };
    report(11, "predicate equivalence", started, run());
}
