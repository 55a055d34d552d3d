//! Brute-force oracle for smoothed quantities on commuting (diagonal) data.
//!
//! For diagonal inputs a pinching argument makes the diagonal restriction of
//! every smoothing SDP exact, and the restricted programs collapse to
//! fractional-knapsack and water-filling forms that are solved here exactly
//! (up to a log-space bisection where the parameter enters nonlinearly).
//! Nothing in this module touches the SDP engine; it is the independent
//! side of the dual-route check.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// Smoothed min-relative entropy; `other_diag` is the full diagonal of
    /// sigma on the joint space.
    DMinSmoothed,
    /// Smoothed generalized min-mutual information; `other_diag` is the
    /// diagonal of gamma_A.
    IMinDownSmoothed,
    /// Smoothed generalized max-mutual information (marginal-dominated
    /// variant); `other_diag` is the diagonal of gamma_A.
    IMaxUpSmoothed,
    /// Smoothed alternative generalized max-mutual information;
    /// `other_diag` is the diagonal of gamma_A.
    IMaxDownSmoothed,
}

/// Evaluates the requested smoothed quantity on diagonal data, in bits.
/// `rho_diag` is A-major over the joint basis with shape `dims = (|A|, |B|)`.
pub fn classical_oracle(
    kind: OracleKind,
    rho_diag: &[f64],
    other_diag: &[f64],
    dims: (usize, usize),
    eps: f64,
) -> Result<f64> {
    let (d_a, d_b) = dims;
    if rho_diag.len() != d_a * d_b {
        return Err(Error::DimMismatch(format!(
            "rho diag length {} != |A||B| = {}",
            rho_diag.len(),
            d_a * d_b
        )));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in [0,1), got {eps}"
        )));
    }
    if rho_diag.iter().any(|&v| v < -1e-12) || other_diag.iter().any(|&v| v < -1e-12) {
        return Err(Error::NotPsd(-1.0));
    }
    match kind {
        OracleKind::DMinSmoothed => {
            if other_diag.len() != rho_diag.len() {
                return Err(Error::DimMismatch(
                    "sigma diag length must match rho".into(),
                ));
            }
            Ok(dmin_smoothed(rho_diag, other_diag, eps))
        }
        OracleKind::IMinDownSmoothed => {
            check_gamma(other_diag, d_a)?;
            Ok(imin_down_smoothed(rho_diag, other_diag, d_a, d_b, eps))
        }
        OracleKind::IMaxUpSmoothed => {
            check_gamma(other_diag, d_a)?;
            Ok(imax_up_smoothed(rho_diag, other_diag, d_a, d_b, eps))
        }
        OracleKind::IMaxDownSmoothed => {
            check_gamma(other_diag, d_a)?;
            Ok(imax_down_smoothed(rho_diag, other_diag, d_a, d_b, eps))
        }
    }
}

fn check_gamma(gamma: &[f64], d_a: usize) -> Result<()> {
    if gamma.len() != d_a {
        return Err(Error::DimMismatch(format!(
            "gamma diag length {} != |A| = {d_a}",
            gamma.len()
        )));
    }
    if gamma.iter().any(|&g| g <= 0.0) {
        return Err(Error::RankDeficientGibbs(
            gamma.iter().cloned().fold(f64::INFINITY, f64::min),
        ));
    }
    Ok(())
}

/// Greedy Neyman-Pearson: minimize sum lambda_i s_i subject to
/// sum lambda_i r_i >= 1 - eps and 0 <= lambda <= 1.
fn dmin_smoothed(r: &[f64], s: &[f64], eps: f64) -> f64 {
    let total: f64 = r.iter().sum();
    let needed = (1.0 - eps).min(total);
    if needed <= 0.0 {
        return f64::INFINITY;
    }
    let mut order: Vec<usize> = (0..r.len()).filter(|&i| r[i] > 0.0).collect();
    order.sort_by(|&i, &j| (s[i] * r[j]).partial_cmp(&(s[j] * r[i])).unwrap());
    let mut cost = 0.0;
    let mut gathered = 0.0;
    for &i in &order {
        if gathered >= needed - 1e-15 {
            break;
        }
        let take = ((needed - gathered) / r[i]).min(1.0);
        cost += take * s[i];
        gathered += take * r[i];
    }
    if cost <= 0.0 {
        return f64::INFINITY;
    }
    -cost.log2()
}

/// Fractional knapsack: max sum lambda_i v_i with sum lambda_i w_i <= budget,
/// items pre-sorted by v/w descending; returns the attained value.
fn knapsack_sorted(items: &[(f64, f64)], budget: f64) -> f64 {
    let mut value = 0.0;
    let mut used = 0.0;
    for &(v, w) in items {
        if used >= budget {
            break;
        }
        let take = ((budget - used) / w).min(1.0);
        value += take * v;
        used += take * w;
    }
    value
}

/// Exact breakpoint scan for the smoothed min-mutual information on
/// diagonals: minimal t with F(t) >= 1 - eps where
/// F(t) = sum_j max { sum_i lambda_ij r_ij : sum_i lambda_ij g_i <= t }.
fn imin_down_smoothed(r: &[f64], g: &[f64], d_a: usize, d_b: usize, eps: f64) -> f64 {
    let total: f64 = r.iter().sum();
    let needed = (1.0 - eps).min(total);
    if needed <= 0.0 {
        return f64::INFINITY;
    }
    // per-column items sorted by r/g descending
    let mut columns: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d_b);
    let mut breakpoints = vec![0.0f64];
    for j in 0..d_b {
        let mut items: Vec<(f64, f64)> = (0..d_a)
            .filter(|&i| r[i * d_b + j] > 0.0)
            .map(|i| (r[i * d_b + j], g[i]))
            .collect();
        items.sort_by(|a, b| (b.0 * a.1).partial_cmp(&(a.0 * b.1)).unwrap());
        let mut acc = 0.0;
        for &(_, w) in &items {
            acc += w;
            breakpoints.push(acc);
        }
        columns.push(items);
    }
    breakpoints.push(1.0);
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let f_of = |t: f64| -> f64 {
        columns
            .iter()
            .map(|items| knapsack_sorted(items, t))
            .sum()
    };

    let mut prev_t = 0.0;
    let mut prev_f = 0.0;
    for &t in breakpoints.iter().skip(1) {
        let f = f_of(t);
        if f >= needed - 1e-15 {
            // linear interpolation on this segment
            let t_star = if f > prev_f {
                prev_t + (needed - prev_f) / (f - prev_f) * (t - prev_t)
            } else {
                t
            };
            if t_star <= 0.0 {
                return f64::INFINITY;
            }
            return -t_star.log2();
        }
        prev_t = t;
        prev_f = f;
    }
    // unreachable: budget t = 1 collects the clamped mass by construction
    f64::NEG_INFINITY
}

/// Piecewise-linear concave function represented as consecutive
/// (slope, width) segments starting from the origin.
struct Segments(Vec<(f64, f64)>);

/// Segments of s -> sum_i min(r_i, c_i s) for positive rates c_i.
fn concave_min_sum_segments(pairs: &[(f64, f64)]) -> Segments {
    // saturation points r/c ascending
    let mut pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|&&(r, _)| r > 0.0)
        .map(|&(r, c)| (r / c, c))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut slope: f64 = pts.iter().map(|&(_, c)| c).sum();
    let mut segs = Vec::with_capacity(pts.len());
    let mut x = 0.0;
    for &(sat, c) in &pts {
        if sat > x {
            segs.push((slope, sat - x));
            x = sat;
        }
        slope -= c;
    }
    // flat tail
    segs.push((0.0, f64::INFINITY));
    Segments(segs)
}

/// Segments of s -> min(q(s), s) for concave q through the origin.
fn clip_by_identity(q: Segments) -> Segments {
    let mut out = Vec::new();
    let mut x = 0.0;
    let mut qx = 0.0;
    let mut crossed = false;
    for &(m, w) in &q.0 {
        if crossed {
            out.push((m, w));
            continue;
        }
        // on this segment q(s) = qx + m (s - x); the identity is s
        let end = x + w;
        let q_end = qx + m * w;
        if qx >= x - 1e-15 && q_end >= end - 1e-12 {
            // q stays above the identity on the whole segment
            out.push((1.0, w));
        } else if qx <= x + 1e-15 && m <= 1.0 {
            // q is at or below the identity and falling behind
            out.push((m, w));
            crossed = true;
        } else {
            // crossing inside the segment: q(s*) = s*
            let s_star = (qx - m * x) / (1.0 - m);
            out.push((1.0, s_star - x));
            out.push((m, end - s_star));
            crossed = true;
        }
        x = end;
        qx = q_end;
        if w.is_infinite() {
            break;
        }
    }
    Segments(out)
}

/// Greedy allocation of a unit budget across concave piecewise-linear
/// column objectives: global sort by slope is exact because slopes fall
/// within each column.
fn waterfill(columns: &[Segments], budget: f64) -> f64 {
    let mut all: Vec<(f64, f64)> = Vec::new();
    for c in columns {
        for &(m, w) in &c.0 {
            if m > 0.0 {
                all.push((m, w));
            }
        }
    }
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut rem = budget;
    let mut acc = 0.0;
    for (m, w) in all {
        if rem <= 0.0 {
            break;
        }
        let take = rem.min(w);
        acc += m * take;
        rem -= take;
    }
    acc
}

fn imax_up_smoothed(r: &[f64], g: &[f64], d_a: usize, d_b: usize, eps: f64) -> f64 {
    let total: f64 = r.iter().sum();
    let needed = (1.0 - eps).min(total);
    let best_at = |t: f64| -> f64 {
        let columns: Vec<Segments> = (0..d_b)
            .map(|j| {
                let pairs: Vec<(f64, f64)> = (0..d_a)
                    .map(|i| (r[i * d_b + j], t * g[i]))
                    .collect();
                clip_by_identity(concave_min_sum_segments(&pairs))
            })
            .collect();
        waterfill(&columns, 1.0)
    };
    // bracket from the unsmoothed closed form
    let mut hi: f64 = 0.0;
    for j in 0..d_b {
        let col_mass: f64 = (0..d_a).map(|i| r[i * d_b + j]).sum();
        if col_mass <= 0.0 {
            continue;
        }
        for i in 0..d_a {
            if r[i * d_b + j] > 0.0 {
                hi = hi.max((r[i * d_b + j] / (g[i] * col_mass)).log2());
            }
        }
    }
    hi += 1.0;
    let mut lo: f64 = -60.0;
    if best_at(lo.exp2()) >= needed - 1e-13 {
        return lo;
    }
    for _ in 0..80 {
        let mid = 0.5 * (hi + lo);
        if best_at(mid.exp2()) >= needed - 1e-13 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn imax_down_smoothed(r: &[f64], g: &[f64], d_a: usize, d_b: usize, eps: f64) -> f64 {
    // Per column: drain the level profile r_ij / g_i (widths g_i) from the
    // top; segments carry level-drop rate 1 / (active width).
    #[derive(Clone, Copy)]
    struct Seg {
        rate: f64,
        mass: f64,
        drop: f64,
    }
    let mut segs: Vec<Seg> = Vec::new();
    let mut total_level = 0.0;
    for j in 0..d_b {
        let mut levels: Vec<(f64, f64)> = (0..d_a)
            .map(|i| (r[i * d_b + j] / g[i], g[i]))
            .filter(|&(l, _)| l > 0.0)
            .collect();
        levels.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        if levels.is_empty() {
            continue;
        }
        total_level += levels[0].0;
        let mut width = 0.0;
        for (k, &(level, w)) in levels.iter().enumerate() {
            width += w;
            let next = levels.get(k + 1).map_or(0.0, |&(l, _)| l);
            let drop = level - next;
            if drop > 0.0 {
                segs.push(Seg {
                    rate: 1.0 / width,
                    mass: width * drop,
                    drop,
                });
            }
        }
    }
    segs.sort_by(|a, b| b.rate.partial_cmp(&a.rate).unwrap());
    let mut budget = eps;
    let mut level_sum = total_level;
    for s in segs {
        if budget <= 0.0 {
            break;
        }
        let frac = (budget / s.mass).min(1.0);
        level_sum -= frac * s.drop;
        budget -= frac * s.mass;
    }
    level_sum.max(f64::MIN_POSITIVE).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dmin_matches_vertex_enumeration() {
        // exhaustive box-vertex + single-fractional enumeration at dim 4
        let cases = [
            (vec![0.4, 0.3, 0.2, 0.1], vec![0.1, 0.2, 0.3, 0.4], 0.1),
            (vec![0.7, 0.1, 0.1, 0.1], vec![0.25, 0.25, 0.25, 0.25], 0.2),
            (vec![0.5, 0.5, 0.0, 0.0], vec![0.05, 0.45, 0.25, 0.25], 0.05),
        ];
        for (r, s, eps) in cases {
            let fast = dmin_smoothed(&r, &s, eps);
            let needed = 1.0 - eps;
            let mut min_cost = f64::INFINITY;
            let n = r.len();
            for mask in 0u32..(1 << n) {
                let lam: Vec<f64> = (0..n)
                    .map(|i| if mask & (1 << i) != 0 { 1.0 } else { 0.0 })
                    .collect();
                let got: f64 = lam.iter().zip(&r).map(|(l, ri)| l * ri).sum();
                // one fractional coordinate on top of the mask
                for f in 0..=n {
                    let mut lam = lam.clone();
                    if f < n {
                        if lam[f] == 1.0 || r[f] == 0.0 {
                            continue;
                        }
                        let need_more = needed - got;
                        if need_more <= 0.0 || need_more >= r[f] {
                            continue;
                        }
                        lam[f] = need_more / r[f];
                    } else if got < needed - 1e-12 {
                        continue;
                    }
                    let cost: f64 = lam.iter().zip(&s).map(|(l, si)| l * si).sum();
                    min_cost = min_cost.min(cost);
                }
            }
            // every LP vertex has at most one fractional coordinate, so the
            // enumeration is exhaustive
            let best = -min_cost.log2();
            assert!((fast - best).abs() < 1e-10, "{fast} vs {best}");
        }
    }

    #[test]
    fn imin_down_reduces_to_dmin_for_trivial_b() {
        let r = [0.5, 0.3, 0.15, 0.05];
        let g = [0.4, 0.3, 0.2, 0.1];
        for eps in [0.0, 0.05, 0.2] {
            let a = imin_down_smoothed(&r, &g, 4, 1, eps);
            let b = dmin_smoothed(&r, &g, eps);
            assert!((a - b).abs() < 1e-10, "eps={eps}: {a} vs {b}");
        }
    }

    #[test]
    fn imin_down_uniform_gamma_hand_value() {
        // rho = diag(0.9, 0.1) on A with trivial B, gamma = pi_2:
        // minimal t with max(0.9, collected) ... knapsack gives
        // t* = 0.5 * (1 - eps - 0.9)/0.1 ... for eps = 0, t* = 1 -> value 0...
        // items sorted by r/g: (0.9,0.5), (0.1,0.5); F(t):
        // t=0.5 -> 0.9; t=1.0 -> 1.0. need 1-eps.
        let r = [0.9, 0.1];
        let g = [0.5, 0.5];
        // eps=0: t*=1, value 0
        assert!(imin_down_smoothed(&r, &g, 2, 1, 0.0).abs() < 1e-12);
        // eps=0.1: need 0.9 -> t*=0.5, value 1
        assert!((imin_down_smoothed(&r, &g, 2, 1, 0.1) - 1.0).abs() < 1e-12);
        // eps=0.05: need 0.95 -> t* = 0.5 + 0.5*(0.05/0.1) = 0.75
        let expect = -(0.75f64).log2();
        assert!((imin_down_smoothed(&r, &g, 2, 1, 0.05) - expect).abs() < 1e-12);
    }

    #[test]
    fn imax_up_trivial_b_matches_tail_cut() {
        let r = [0.9, 0.1];
        let g = [0.5, 0.5];
        for eps in [0.05, 0.1, 0.2] {
            let fast = imax_up_smoothed(&r, &g, 2, 1, eps);
            // independent tail-cut: min t with sum_i min(r_i, t g_i) >= 1-eps
            let mut lo = -60.0f64;
            let mut hi = 2.0f64;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let t = mid.exp2();
                let mass: f64 = r.iter().zip(&g).map(|(&ri, &gi)| ri.min(t * gi)).sum();
                if mass >= 1.0 - eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((fast - hi).abs() < 1e-8, "eps={eps}: {fast} vs {hi}");
        }
    }

    #[test]
    fn imax_up_matches_sigma_grid_at_2x2() {
        let r = [0.35, 0.25, 0.3, 0.1]; // A-major 2x2
        let g = [0.6, 0.4];
        let eps = 0.1;
        let fast = imax_up_smoothed(&r, &g, 2, 2, eps);
        // grid over sigma = (q, 1-q) with exact inner mass evaluation
        let feasible_at = |t: f64| -> bool {
            let mut best = 0.0f64;
            let steps = 4000;
            for k in 0..=steps {
                let q = k as f64 / steps as f64;
                let sig = [q, 1.0 - q];
                let mut mass = 0.0;
                for j in 0..2 {
                    let cap: f64 = (0..2).map(|i| r[i * 2 + j].min(t * g[i] * sig[j])).sum();
                    mass += cap.min(sig[j]);
                }
                best = best.max(mass);
            }
            best >= 1.0 - eps
        };
        let mut lo = -20.0f64;
        let mut hi = 4.0f64;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible_at(mid.exp2()) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((fast - hi).abs() < 2e-3, "{fast} vs {hi}");
    }

    #[test]
    fn imax_down_zero_eps_is_peak_sum() {
        let r = [0.35, 0.25, 0.3, 0.1];
        let g = [0.6, 0.4];
        let v = imax_down_smoothed(&r, &g, 2, 2, 0.0);
        let expect = ((0.35f64 / 0.6).max(0.3 / 0.4) + (0.25f64 / 0.6).max(0.1 / 0.4)).log2();
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn imax_down_drain_hand_case() {
        // trivial B: drain diag(0.9, 0.1) against gamma = (0.5, 0.5)
        let r = [0.9, 0.1];
        let g = [0.5, 0.5];
        // levels 1.8 (width .5) then 0.2 (width .5): eps = 0.1 drains the
        // top level by 0.1/0.5 = 0.2 to 1.6
        let v = imax_down_smoothed(&r, &g, 2, 1, 0.1);
        assert!((v - 1.6f64.log2()).abs() < 1e-12, "{v}");
        // draining down to the second level costs 0.5*1.6 = 0.8
        let v = imax_down_smoothed(&r, &g, 2, 1, 0.85);
        // after merging: level 0.2 with width 1.0, remaining budget 0.05
        // drains to 0.15
        assert!((v - 0.15f64.log2()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn oracle_entry_point_validates() {
        let r = [0.5, 0.5];
        assert!(classical_oracle(OracleKind::IMinDownSmoothed, &r, &[0.5, 0.5], (2, 1), 0.1).is_ok());
        assert!(classical_oracle(OracleKind::IMinDownSmoothed, &r, &[0.5], (2, 1), 0.1).is_err());
        assert!(
            classical_oracle(OracleKind::IMinDownSmoothed, &r, &[0.5, 0.5], (2, 1), 1.0).is_err()
        );
        assert!(
            classical_oracle(OracleKind::IMinDownSmoothed, &r, &[1.0, 0.0], (2, 1), 0.1).is_err()
        );
    }
}
