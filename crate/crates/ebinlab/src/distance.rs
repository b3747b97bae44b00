//! Certified two-sided estimation of the Riemannian distance between
//! metric fields.
//!
//! Upper bounds come from the infimum over implemented path families
//! (sound because `d ≤ L` for any admissible path). Lower bounds come from
//! the volume-Lipschitz inequality `|√Vol(Y,g1) − √Vol(Y,g0)| ≤ (√n/4) d`
//! and the Θ inequality `Θ_Y ≤ d(√n d + 2√Vol(M, base))`, inverted. Both
//! lower bounds evaluate only analytically certified quantities, so
//! `lower ≤ upper` holds on every pair, an implementation defect aside.

use crate::config::RunConfig;
use crate::field::{
    l2_norm, theta_lower_integral, volume, MetricField, RegionMask, ScalarField,
};
use crate::linalg::{det_sym, inv_sym, Mat};
use crate::path::{path_length, three_piece_path, LengthReport, MetricPath};
use crate::spd::{eigen_summary, theta_lower_bound, PsdPoint, SpdPoint, SymMat};
use crate::{Error, Result};
use serde::Serialize;

/// Path witness behind an upper bound.
#[derive(Debug, Clone)]
pub struct UpperWitness {
    /// Which candidate family won (`linear`, `three_piece(s,w)`,
    /// `conformal`, `optimized(m)`).
    pub label: String,
    pub path: MetricPath,
    pub length: LengthReport,
}

/// Which inequality realized the lower bound, and on which mask.
#[derive(Debug, Clone, Serialize)]
pub struct LowerWitness {
    pub kind: LowerKind,
    pub mask: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerKind {
    Volume,
    Theta,
}

/// Certified interval for `d(g0, g1)` with witnesses.
#[derive(Debug, Clone)]
pub struct DistanceEstimate {
    pub lower: f64,
    pub upper: f64,
    pub upper_witness: UpperWitness,
    pub lower_witness: LowerWitness,
    pub certified: bool,
}

/// Standard mask family: the full grid plus superlevel sets of the
/// nodewise θ lower bound at the 0.5/0.75/0.9 quantiles. Any measurable
/// set gives a valid bound; these chase the largest gap.
pub fn standard_masks(
    g0: &MetricField,
    g1: &MetricField,
    config: &RunConfig,
) -> Result<Vec<(String, RegionMask)>> {
    g0.same_grid(g1)?;
    let tol = &config.tolerances;
    let gref = SpdPoint::with_tolerances(SymMat::identity(g0.grid().dim), tol)?;
    let node_theta: Vec<f64> = (0..g0.grid().len())
        .map(|i| {
            let a = PsdPoint::with_tolerances(*g0.value(i), tol)?;
            let b = PsdPoint::with_tolerances(*g1.value(i), tol)?;
            Ok(theta_lower_bound(&gref, &a, &b))
        })
        .collect::<Result<_>>()?;
    let mut sorted = node_theta.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut masks = vec![("full".to_string(), RegionMask::full(g0.grid().clone()))];
    for q in [0.5, 0.75, 0.9] {
        let cut = sorted[((sorted.len() - 1) as f64 * q) as usize];
        let member: Vec<bool> = node_theta.iter().map(|&v| v >= cut).collect();
        masks.push((format!("theta_q{q}"), RegionMask::new(g0.grid().clone(), member)?));
    }
    Ok(masks)
}

/// `max_Y (4/√n) |√Vol(Y,g1) − √Vol(Y,g0)|` over the given masks.
pub fn lower_bound_volume(
    g0: &MetricField,
    g1: &MetricField,
    masks: &[(String, RegionMask)],
) -> Result<LowerWitness> {
    g0.same_grid(g1)?;
    let n = g0.grid().dim as f64;
    let mut best = LowerWitness { kind: LowerKind::Volume, mask: "full".into(), value: 0.0 };
    for (name, mask) in masks {
        let v0 = volume(g0, mask)?;
        let v1 = volume(g1, mask)?;
        let bound = 4.0 / n.sqrt() * (v1.sqrt() - v0.sqrt()).abs();
        if bound > best.value {
            best = LowerWitness { kind: LowerKind::Volume, mask: name.clone(), value: bound };
        }
    }
    Ok(best)
}

/// Θ-inversion lower bound: from `Θ_Y ≤ d(√n d + 2√V)` with
/// `V = Vol(M, base)`, solving the quadratic gives
/// `d ≥ (√(V + √n Θ_Y) − √V)/√n`; evaluated with the certified Θ minorant
/// and symmetrized over the base field.
pub fn lower_bound_theta(
    g0: &MetricField,
    g1: &MetricField,
    masks: &[(String, RegionMask)],
    config: &RunConfig,
) -> Result<LowerWitness> {
    g0.same_grid(g1)?;
    let tol = &config.tolerances;
    let full = RegionMask::full(g0.grid().clone());
    let v_base = [volume(g0, &full)?, volume(g1, &full)?];
    let mut best = LowerWitness { kind: LowerKind::Theta, mask: "full".into(), value: 0.0 };
    for (name, mask) in masks {
        let theta = theta_lower_integral(g0, g1, mask, tol)?;
        for v in v_base {
            let bound = invert_theta_quadratic(theta, v, g0.grid().dim);
            if bound > best.value {
                best = LowerWitness { kind: LowerKind::Theta, mask: name.clone(), value: bound };
            }
        }
    }
    Ok(best)
}

/// Solve `theta = d(√n d + 2√v)` for d ≥ 0.
pub fn invert_theta_quadratic(theta: f64, v: f64, dim: usize) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    let n = dim as f64;
    ((v + n.sqrt() * theta).sqrt() - v.sqrt()) / n.sqrt()
}

/// Detect a pointwise-conformal relation `g1 = λ·g0` and return the
/// exponential coordinate σ with `g1 = (1 + (n/4)σ)^{4/n} g0`.
pub fn detect_conformal(g0: &MetricField, g1: &MetricField) -> Option<ScalarField> {
    let n = g0.grid().dim as f64;
    let mut sigma = Vec::with_capacity(g0.grid().len());
    for (a, b) in g0.values().iter().zip(g1.values().iter()) {
        let da = det_sym(a);
        let db = det_sym(b);
        if !(da > 0.0 && db > 0.0) {
            return None;
        }
        let lambda = (db / da).powf(1.0 / n);
        let residual = b.sub(&a.scale(lambda)).max_abs();
        if residual > 1e-8 * (1.0 + b.max_abs()) {
            return None;
        }
        sigma.push(4.0 / n * (lambda.powf(n / 4.0) - 1.0));
    }
    ScalarField::new(g0.grid().clone(), sigma).ok()
}

/// Infimum of path lengths over the implemented families: the straight
/// segment, the (s, w)-tuned three-piece construction over the carrier of
/// the difference, the conformal route when `g1` lies on `g0`'s conformal
/// orbit, and a node-optimized piecewise-linear path.
pub fn upper_bound(g0: &MetricField, g1: &MetricField, config: &RunConfig) -> Result<UpperWitness> {
    g0.same_grid(g1)?;
    let tol = &config.tolerances;
    let t_nodes = config.quadrature.t_nodes;
    if g0.diff(g1)?.max_abs() <= tol.eps_lin * (1.0 + g0.tensor().max_abs()) {
        let path = MetricPath::linear(g0.clone(), g1.clone())?;
        return Ok(UpperWitness {
            label: "constant".into(),
            path,
            length: LengthReport { value: 0.0, error_estimate: 0.0 },
        });
    }
    let mut candidates: Vec<UpperWitness> = Vec::new();

    let linear = MetricPath::linear(g0.clone(), g1.clone())?;
    let linear_len = path_length(&linear, t_nodes, tol)?;
    candidates.push(UpperWitness { label: "linear".into(), path: linear, length: linear_len });

    if let Some(witness) = tuned_three_piece(g0, g1, config)? {
        candidates.push(witness);
    }

    if let Some(sigma) = detect_conformal(g0, g1) {
        let path = MetricPath::conformal_geodesic(g0.clone(), sigma)?;
        let length = path_length(&path, t_nodes, tol)?;
        candidates.push(UpperWitness { label: "conformal".into(), path, length });
    }

    if config.budget.path_iters > 0 {
        if let Some((path, length)) = optimize_field_path(g0, g1, config)? {
            candidates.push(UpperWitness {
                label: format!("optimized(m={})", config.budget.path_nodes),
                path,
                length,
            });
        }
    }

    // Deterministic winner: first of the minimal lengths in fixed order.
    let best = candidates
        .into_iter()
        .min_by(|a, b| a.length.value.partial_cmp(&b.length.value).unwrap())
        .expect("at least the linear candidate exists");
    Ok(best)
}

/// The (s, w)-tuned three-piece path: golden-section search over `ln s`
/// for each candidate width, within the configured evaluation budget.
/// Tuning lengths use a coarse single-level quadrature; the winner is
/// re-measured at full resolution. `None` when the fields coincide.
pub fn tuned_three_piece(
    g0: &MetricField,
    g1: &MetricField,
    config: &RunConfig,
) -> Result<Option<UpperWitness>> {
    let tol = &config.tolerances;
    let region = g0.carrier(g1, tol)?;
    if region.count() == 0 {
        return Ok(None);
    }
    let coarse_nodes = (config.quadrature.t_nodes / 4).max(16);
    let budget = &config.budget;
    let (lo, hi) = budget.log_s_range;
    let per_width = (budget.three_piece_evals / budget.widths.len().max(1)).max(3);
    let mut best: Option<(f64, usize, f64)> = None; // (s, w, coarse length)
    for &w in &budget.widths {
        let eval = |ln_s: f64| -> Result<f64> {
            let s = ln_s.exp().clamp(f64::MIN_POSITIVE, 1.0);
            let p = three_piece_path(g0, g1, &region, s, w)?;
            crate::path::path_length_quick(&p, coarse_nodes, tol)
        };
        // Golden-section bracketing on [lo, hi].
        let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = eval(x1)?;
        let mut f2 = eval(x2)?;
        let mut evals = 2usize;
        while evals < per_width {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = eval(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = eval(x2)?;
            }
            evals += 1;
        }
        // Also test the range ends; the optimum often sits on them.
        for (s_candidate, len) in
            [(x1.exp(), f1), (x2.exp(), f2), (hi.exp(), eval(hi)?), (lo.exp(), eval(lo)?)]
        {
            if best.is_none() || len < best.unwrap().2 {
                best = Some((s_candidate.clamp(f64::MIN_POSITIVE, 1.0), w, len));
            }
        }
    }
    let Some((s, w, _)) = best else { return Ok(None) };
    let path = three_piece_path(g0, g1, &region, s, w)?;
    let length = path_length(&path, config.quadrature.t_nodes, tol)?;
    Ok(Some(UpperWitness { label: format!("three_piece(s={s:.3e},w={w})"), path, length }))
}

/// Gradient descent with backtracking on the interior nodes of a
/// piecewise-linear field path; endpoints fixed, every node kept inside
/// the cone. Returns the optimized path as a sampled witness.
fn optimize_field_path(
    g0: &MetricField,
    g1: &MetricField,
    config: &RunConfig,
) -> Result<Option<(MetricPath, LengthReport)>> {
    let tol = &config.tolerances;
    let budget = &config.budget;
    let m = budget.path_nodes;
    let grid = g0.grid().clone();
    let cell = grid.cell_volume();
    let total = m + 2;
    let mut chain: Vec<Vec<SymMat>> = (0..total)
        .map(|i| {
            let t = i as f64 / (total - 1) as f64;
            g0.values()
                .iter()
                .zip(g1.values().iter())
                .map(|(a, b)| a.scale(1.0 - t).add(&b.scale(t)))
                .collect()
        })
        .collect();
    let mut best = chain_length(&chain, cell);
    if !best.is_finite() {
        return Ok(None);
    }
    let mut lr = 0.05;
    for _ in 0..budget.path_iters {
        let grads = chain_gradients(&chain, cell);
        let mut accepted = false;
        for _ in 0..20 {
            let candidate: Vec<Vec<SymMat>> = chain
                .iter()
                .enumerate()
                .map(|(i, nodes)| {
                    if i == 0 || i == total - 1 {
                        nodes.clone()
                    } else {
                        nodes
                            .iter()
                            .zip(grads[i].iter())
                            .map(|(nv, gv)| nv.sub(&gv.scale(lr)))
                            .collect()
                    }
                })
                .collect();
            let inside = candidate[1..total - 1]
                .iter()
                .all(|nodes| nodes.iter().all(|v| eigen_summary(v).lambda_min > tol.eps_pd));
            if inside {
                let len = chain_length(&candidate, cell);
                if len < best {
                    let improved = (best - len) > budget.rel_improvement * best;
                    chain = candidate;
                    best = len;
                    lr *= 1.5;
                    accepted = improved;
                    break;
                }
            }
            lr *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let samples: Vec<(f64, MetricField)> = chain
        .into_iter()
        .enumerate()
        .map(|(i, nodes)| {
            let t = i as f64 / (total - 1) as f64;
            Ok((t, MetricField::classified(grid.clone(), nodes, tol)?))
        })
        .collect::<Result<_>>()?;
    let path = MetricPath::sampled(samples)?;
    let length = path_length(&path, config.quadrature.t_nodes, tol)?;
    Ok(Some((path, length)))
}

const SEG_QUAD: usize = 5;

fn simpson_weight(j: usize, n: usize) -> f64 {
    if j == 0 || j == n {
        1.0
    } else if j % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Plain-quadrature length of a chain of field snapshots (optimizer
/// objective; the honest length is re-measured by `path_length`).
fn chain_length(chain: &[Vec<SymMat>], cell: f64) -> f64 {
    let mut total = 0.0;
    for seg in chain.windows(2) {
        let h = 1.0 / (SEG_QUAD - 1) as f64;
        let mut acc = 0.0;
        for j in 0..SEG_QUAD {
            let t = j as f64 * h;
            let mut f = 0.0;
            for (p, q) in seg[0].iter().zip(seg[1].iter()) {
                let g = p.scale(1.0 - t).add(&q.scale(t));
                let hm = q.sub(p);
                let Some(ginv) = inv_sym(&g) else { return f64::INFINITY };
                let gm = Mat::from_sym(&ginv);
                let gh = gm.mul(&Mat::from_sym(&hm));
                let det = det_sym(&g);
                if det <= 0.0 {
                    return f64::INFINITY;
                }
                f += gh.mul(&gh).trace() * det.sqrt() * cell;
            }
            acc += simpson_weight(j, SEG_QUAD - 1) * f.max(0.0).sqrt();
        }
        total += acc * h / 3.0;
    }
    total
}

/// Analytic gradient of `chain_length` with respect to every node entry.
fn chain_gradients(chain: &[Vec<SymMat>], cell: f64) -> Vec<Vec<SymMat>> {
    let dim = chain[0][0].dim();
    let grid_len = chain[0].len();
    let mut grads: Vec<Vec<SymMat>> =
        chain.iter().map(|_| vec![SymMat::zero(dim); grid_len]).collect();
    for (seg_idx, seg) in chain.windows(2).enumerate() {
        let h = 1.0 / (SEG_QUAD - 1) as f64;
        for j in 0..SEG_QUAD {
            let t = j as f64 * h;
            let wq = simpson_weight(j, SEG_QUAD - 1) * h / 3.0;
            // First pass: the integrand value F(t).
            let mut f = 0.0;
            for (p, q) in seg[0].iter().zip(seg[1].iter()) {
                let g = p.scale(1.0 - t).add(&q.scale(t));
                let hm = q.sub(p);
                let Some(ginv) = inv_sym(&g) else { continue };
                let gm = Mat::from_sym(&ginv);
                let gh = gm.mul(&Mat::from_sym(&hm));
                let det = det_sym(&g);
                if det > 0.0 {
                    f += gh.mul(&gh).trace() * det.sqrt() * cell;
                }
            }
            if f <= 0.0 || !f.is_finite() {
                continue;
            }
            let scale = wq / (2.0 * f.sqrt());
            // Second pass: per-node Frobenius gradients.
            for (x, (p, q)) in seg[0].iter().zip(seg[1].iter()).enumerate() {
                let g = p.scale(1.0 - t).add(&q.scale(t));
                let hm = q.sub(p);
                let Some(ginv) = inv_sym(&g) else { continue };
                let gm = Mat::from_sym(&ginv);
                let hmat = Mat::from_sym(&hm);
                let gh = gm.mul(&hmat);
                let tr = gh.mul(&gh).trace();
                let det = det_sym(&g);
                if det <= 0.0 {
                    continue;
                }
                let sqrt_det = det.sqrt();
                // dF/dg = (-2 g⁻¹hg⁻¹hg⁻¹ + ½ tr · g⁻¹) √det g · cell
                let ghg = gh.mul(&gh).mul(&gm).symmetrized();
                let df_dg = ghg
                    .scale(-2.0 * sqrt_det * cell)
                    .add(&ginv.scale(0.5 * tr * sqrt_det * cell));
                // dF/dh = 2 g⁻¹hg⁻¹ √det g · cell
                let df_dh = gm.mul(&hmat).mul(&gm).symmetrized().scale(2.0 * sqrt_det * cell);
                for (node, gsign, hsign) in [(seg_idx, 1.0 - t, -1.0), (seg_idx + 1, t, 1.0)] {
                    let acc = &mut grads[node][x];
                    for i in 0..dim {
                        for jj in i..dim {
                            let mult = if i == jj { 1.0 } else { 2.0 };
                            let dv = scale
                                * mult
                                * (gsign * df_dg.get(i, jj) + hsign * df_dh.get(i, jj));
                            acc.set(i, jj, acc.get(i, jj) + dv);
                        }
                    }
                }
            }
        }
    }
    grads
}

/// Combined two-sided estimate. `lower ≤ upper` is enforced: a violation
/// falsifies an implementation, not the theory, so it is a hard error.
pub fn estimate(g0: &MetricField, g1: &MetricField, config: &RunConfig) -> Result<DistanceEstimate> {
    let masks = standard_masks(g0, g1, config)?;
    let lower_vol = lower_bound_volume(g0, g1, &masks)?;
    let lower_theta = lower_bound_theta(g0, g1, &masks, config)?;
    let lower_witness = if lower_theta.value > lower_vol.value { lower_theta } else { lower_vol };
    let upper_witness = upper_bound(g0, g1, config)?;
    let lower = lower_witness.value;
    let upper = upper_witness.length.value;
    if lower > upper * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "soundness violation: lower {lower} > upper {upper}"
        )));
    }
    let certified = upper_witness.length.error_estimate <= (0.01 * upper).max(1e-8);
    Ok(DistanceEstimate { lower: lower.min(upper), upper, upper_witness, lower_witness, certified })
}

/// L² norm of `g1 − g0` against the Euclidean reference; the right-hand
/// side of the `upper ≤ K‖g1−g0‖_g` surrogate bound.
pub fn reference_norm_of_difference(g0: &MetricField, g1: &MetricField) -> Result<f64> {
    let reference = MetricField::euclidean(g0.grid().clone())?;
    l2_norm(&reference, &g0.diff(g1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{amenability_audit, norm_equivalence_constant, FieldKind, TorusGrid};
    use crate::path::collapse_constant;
    use crate::spd::sample_sym;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit2(nodes: usize) -> TorusGrid {
        TorusGrid::unit(2, nodes).unwrap()
    }

    fn config() -> RunConfig {
        RunConfig::default()
    }

    fn random_field(grid: &TorusGrid, rng: &mut ChaCha8Rng, spread: f64) -> MetricField {
        let vals = (0..grid.len())
            .map(|_| SymMat::identity(grid.dim).add(&sample_sym(grid.dim, rng, spread)))
            .collect();
        MetricField::new(grid.clone(), vals, FieldKind::Metric).unwrap()
    }

    #[test]
    fn identical_fields_give_zero_interval() {
        let g = MetricField::euclidean(unit2(8)).unwrap();
        let est = estimate(&g, &g.clone(), &config()).unwrap();
        assert_eq!(est.lower, 0.0);
        assert_eq!(est.upper, 0.0);
        assert_eq!(est.upper_witness.label, "constant");
    }

    #[test]
    fn volume_lower_bound_case() {
        let g0 = MetricField::euclidean(unit2(8)).unwrap();
        let g1 = MetricField::constant(unit2(8), SymMat::identity(2).scale(4.0), FieldKind::Metric)
            .unwrap();
        let masks = vec![("full".to_string(), RegionMask::full(unit2(8)))];
        let lw = lower_bound_volume(&g0, &g1, &masks).unwrap();
        let expect = 2.0 * (2.0_f64).sqrt();
        assert!((lw.value - expect).abs() < 1e-10, "{} vs {expect}", lw.value);
    }

    #[test]
    fn theta_inversion_identity() {
        // Substituting the returned d back into the quadratic reproduces Θ.
        for (theta, v, n) in [(3.0 * (2.0_f64).sqrt(), 1.0, 2usize), (0.7, 2.5, 3), (12.0, 0.3, 1)]
        {
            let d = invert_theta_quadratic(theta, v, n);
            let back = d * ((n as f64).sqrt() * d + 2.0 * v.sqrt());
            assert!((back - theta).abs() < 1e-10, "n={n}: {back} vs {theta}");
        }
        // Spec'd point: V = 1, Θ = 3√n ⇒ d = (√(1+3n) − 1)/√n.
        let d = invert_theta_quadratic(3.0 * (2.0_f64).sqrt(), 1.0, 2);
        let expect = ((7.0_f64).sqrt() - 1.0) / (2.0_f64).sqrt();
        assert!((d - expect).abs() < 1e-12);
    }

    #[test]
    fn torus_pair_upper_bound_tracks_collapse_constant() {
        let k = 256.0;
        let grid = unit2(16);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let g1 =
            MetricField::constant(grid.clone(), SymMat::diag(&[1.0, 1.0 / k]), FieldKind::Metric)
                .unwrap();
        let mut cfg = config();
        cfg.budget.path_iters = 0; // closed-form candidates only
        let w = upper_bound(&g0, &g1, &cfg).unwrap();
        let c2 = collapse_constant(2).unwrap();
        let bound = c2 * (1.0 + k.powf(-0.25)) * 1.05;
        assert!(w.length.value <= bound, "{} vs {bound} ({})", w.length.value, w.label);
    }

    #[test]
    fn conformal_route_detected_and_tight() {
        let grid = unit2(16);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let sigma =
            ScalarField::from_fn(grid.clone(), |x| 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin())
                .unwrap();
        let g1 = crate::path::conformal_exp(&g0, &sigma, &config().tolerances).unwrap();
        let detected = detect_conformal(&g0, &g1).expect("conformal pair");
        for (a, b) in detected.values().iter().zip(sigma.values().iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        let mut cfg = config();
        cfg.budget.path_iters = 0;
        let w = upper_bound(&g0, &g1, &cfg).unwrap();
        let cap = (2.0_f64).sqrt() * sigma.l2_norm(&g0).unwrap() * 1.02;
        assert!(w.length.value <= cap, "{} vs {cap} ({})", w.length.value, w.label);
    }

    #[test]
    fn small_support_pair_obeys_diameter_shape() {
        // Fields agreeing outside a quarter-torus E with tiny equal volumes
        // inside: upper ≤ 2 C(n) √δ (1 + .05).
        let grid = unit2(16);
        let eps = 0.01;
        let inside = |x: &[f64]| x[0] < 0.5 && x[1] < 0.5;
        let g0 = MetricField::from_fn(grid.clone(), FieldKind::Metric, |x| {
            if inside(x) {
                SymMat::identity(2).scale(eps)
            } else {
                SymMat::identity(2)
            }
        })
        .unwrap();
        let g1 = MetricField::from_fn(grid.clone(), FieldKind::Metric, |x| {
            if inside(x) {
                SymMat::diag(&[2.0 * eps, eps / 2.0])
            } else {
                SymMat::identity(2)
            }
        })
        .unwrap();
        let delta = 0.25 * eps;
        let mut cfg = config();
        cfg.budget.path_iters = 0;
        let w = upper_bound(&g0, &g1, &cfg).unwrap();
        let cap = 2.0 * collapse_constant(2).unwrap() * delta.sqrt() * 1.05;
        assert!(w.length.value <= cap, "{} vs {cap} ({})", w.length.value, w.label);
    }

    #[test]
    fn estimate_sound_and_symmetric_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let grid = unit2(8);
        let mut cfg = config();
        cfg.budget.path_iters = 5;
        cfg.budget.three_piece_evals = 9;
        for _ in 0..10 {
            let a = random_field(&grid, &mut rng, 0.35);
            let b = random_field(&grid, &mut rng, 0.35);
            let ab = estimate(&a, &b, &cfg).unwrap();
            let ba = estimate(&b, &a, &cfg).unwrap();
            assert!(ab.lower <= ab.upper);
            assert!((ab.lower - ba.lower).abs() < 1e-9, "lower bounds symmetric by construction");
            assert!(ab.upper <= 2.0 * ba.upper && ba.upper <= 2.0 * ab.upper);
        }
    }

    #[test]
    fn witness_length_reevaluates() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let grid = unit2(8);
        let cfg = config();
        let a = random_field(&grid, &mut rng, 0.3);
        let b = random_field(&grid, &mut rng, 0.3);
        let est = estimate(&a, &b, &cfg).unwrap();
        let re =
            path_length(&est.upper_witness.path, cfg.quadrature.t_nodes, &cfg.tolerances).unwrap();
        assert!(
            (re.value - est.upper).abs()
                <= (1e-12 + est.upper_witness.length.error_estimate) * 2.0 + 1e-9
        );
    }

    #[test]
    fn approximate_triangle_inequality_via_concatenation() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let grid = unit2(8);
        let mut cfg = config();
        cfg.budget.path_iters = 0;
        for _ in 0..5 {
            let a = random_field(&grid, &mut rng, 0.3);
            let b = random_field(&grid, &mut rng, 0.3);
            let c = random_field(&grid, &mut rng, 0.3);
            let ab = upper_bound(&a, &b, &cfg).unwrap().length.value;
            let bc = upper_bound(&b, &c, &cfg).unwrap().length.value;
            let ac = upper_bound(&a, &c, &cfg).unwrap().length.value;
            assert!(ac <= ab + bc + 1e-6 * (1.0 + ab + bc));
        }
    }

    #[test]
    fn amenable_family_norm_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let grid = unit2(8);
        let mut cfg = config();
        cfg.budget.path_iters = 0;
        let fields: Vec<MetricField> = (0..8).map(|_| random_field(&grid, &mut rng, 0.3)).collect();
        let report = amenability_audit(&fields).unwrap();
        let k = norm_equivalence_constant(&report, 2).unwrap();
        for pair in fields.chunks(2) {
            let upper = upper_bound(&pair[0], &pair[1], &cfg).unwrap().length.value;
            let norm = reference_norm_of_difference(&pair[0], &pair[1]).unwrap();
            assert!(upper <= k * norm * (1.0 + 1e-9), "{upper} vs K·norm = {}", k * norm);
        }
    }

    #[test]
    fn optimizer_does_not_hurt() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        let grid = unit2(4);
        let a = random_field(&grid, &mut rng, 0.4);
        let b = random_field(&grid, &mut rng, 0.4);
        let mut cfg = config();
        cfg.budget.path_iters = 0;
        let without = upper_bound(&a, &b, &cfg).unwrap().length.value;
        cfg.budget.path_iters = 30;
        let with = upper_bound(&a, &b, &cfg).unwrap().length.value;
        assert!(with <= without * (1.0 + 1e-9));
    }
}
