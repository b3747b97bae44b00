//! Built-in reproduction suites: every numbered check runs at a pinned
//! tolerance with a pinned seed and reports measured-versus-expected data.
//! The `spd`, `torus`, and `bounds` suites partition the twelve checks.

use crate::config::RunConfig;
use crate::distance::{
    detect_conformal, estimate, invert_theta_quadratic, reference_norm_of_difference,
    tuned_three_piece, upper_bound,
};
use crate::field::{
    amenability_audit, l2_norm, norm_equivalence_constant, volume, FieldKind, MetricField,
    RegionMask, ScalarField, TensorField, TorusGrid,
};
use crate::linalg::{inv_sym, Mat};
use crate::omega::{classify_points, example_sequences, omega_limit, PointClass, Verdict};
use crate::path::{
    boundary_shift_path, collapse_constant, conformal_exp, path_length, MetricPath,
};
use crate::spd::{
    eigen_summary, sample_spd, sample_sym, spd_geodesic, theta_distance, PsdPoint, SpdPoint,
    SymMat, ThetaOpts,
};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of one numbered check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    /// Measured-vs-expected lines for the summary table.
    pub details: Vec<String>,
}

impl CriterionResult {
    fn new(id: usize, name: &str) -> Self {
        CriterionResult { id, name: name.to_string(), pass: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.pass &= ok;
        self.details.push(format!("{} {detail}", if ok { "ok " } else { "FAIL" }));
    }
}

/// The checks belonging to a named suite.
pub fn suite_criteria(suite: &str) -> Result<&'static [usize]> {
    match suite {
        "spd" => Ok(&[1, 2, 3]),
        "torus" => Ok(&[4, 8, 9, 10, 12]),
        "bounds" => Ok(&[5, 6, 7, 11]),
        other => Err(Error::InvalidParameter(format!("unknown suite {other}"))),
    }
}

pub fn run_suite(suite: &str) -> Result<Vec<CriterionResult>> {
    suite_criteria(suite)?.iter().map(|&id| run_criterion(id)).collect()
}

pub fn run_criterion(id: usize) -> Result<CriterionResult> {
    match id {
        1 => geodesic_exactness(),
        2 => theta_conformal_rays(),
        3 => det_lipschitz_bound(),
        4 => three_piece_constant(),
        5 => interval_soundness(),
        6 => inversion_identity(),
        7 => conformal_lipschitz(),
        8 => omega_classification(),
        9 => volume_convergence(),
        10 => torus_equivalence_matrix(),
        11 => amenable_family_bounds(),
        12 => boundary_path_finiteness(),
        other => Err(Error::InvalidParameter(format!("unknown criterion {other}"))),
    }
}

fn unit2(nodes: usize) -> TorusGrid {
    TorusGrid::unit(2, nodes).expect("valid grid")
}

// 1. Closed-form geodesics satisfy the geodesic ODE and match RK4.
fn geodesic_exactness() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(1, "spd geodesic exactness");
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for n in [2usize, 3] {
        let mut max_residual = 0.0_f64;
        let mut max_rk4_gap = 0.0_f64;
        for _ in 0..100 {
            let g0 = sample_spd(n, &mut rng);
            let h = sample_sym(n, &mut rng, 0.5);
            // Finite-difference second derivative against g' g⁻¹ g'. All
            // three samples share one eigendecomposition so eigenvector
            // roundoff cancels in the difference instead of being blown up
            // by the 1/eps² factor.
            let geo = SharedGeodesic::new(&g0, &h);
            let eps = 1e-4;
            for i in 1..=10 {
                let t = i as f64 / 11.0;
                let gm = geo.at(t - eps);
                let gc = geo.at(t);
                let gp = geo.at(t + eps);
                let second = gp.add(&gm).sub(&gc.scale(2.0)).scale(1.0 / (eps * eps));
                let deriv = geo.deriv(t);
                let accel = Mat::from_sym(&deriv)
                    .mul(&Mat::from_sym(&inv_sym(&gc).unwrap()))
                    .mul(&Mat::from_sym(&deriv))
                    .symmetrized();
                max_residual = max_residual.max(second.sub(&accel).max_abs());
            }
            // RK4 on (g, a): g' = a, a' = a g⁻¹ a.
            let rk4 = rk4_geodesic(&g0, &h, 1.0, 2000);
            let closed = spd_geodesic(&g0, &h, 1.0)?;
            max_rk4_gap = max_rk4_gap.max(closed.mat().sub(&rk4).max_abs());
        }
        result.check(max_residual < 1e-6, format!("n={n} ODE residual {max_residual:.2e} < 1e-6"));
        result.check(max_rk4_gap < 1e-6, format!("n={n} RK4 gap {max_rk4_gap:.2e} < 1e-6"));
    }
    Ok(result)
}

/// Geodesic evaluator with a frozen spectral basis: `g_t = S V e^{tΛ} Vᵀ S`
/// with `S = g₀^{1/2}` and `(Λ, V)` the eigen data of `S⁻¹ h S⁻¹`.
struct SharedGeodesic {
    s: Mat,
    v: Mat,
    lambda: [f64; 3],
    dim: usize,
}

impl SharedGeodesic {
    fn new(g0: &SpdPoint, h: &SymMat) -> Self {
        let s_sym = crate::linalg::sym_matfun(g0.mat(), f64::sqrt);
        let s_inv = Mat::from_sym(&inv_sym(&s_sym).unwrap());
        let middle = s_inv.mul(&Mat::from_sym(h)).mul(&s_inv).symmetrized();
        let (lambda, v) = crate::linalg::sym_eigen(&middle);
        SharedGeodesic { s: Mat::from_sym(&s_sym), v, lambda, dim: g0.dim() }
    }

    fn reconstruct(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let mut core = Mat::zero(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = 0.0;
                for k in 0..self.dim {
                    acc += self.v.get(i, k) * f(self.lambda[k]) * self.v.get(j, k);
                }
                core.set(i, j, acc);
            }
        }
        self.s.mul(&core).mul(&self.s).symmetrized()
    }

    fn at(&self, t: f64) -> SymMat {
        self.reconstruct(|l| (t * l).exp())
    }

    fn deriv(&self, t: f64) -> SymMat {
        self.reconstruct(|l| l * (t * l).exp())
    }
}

fn rk4_geodesic(g0: &SpdPoint, h: &SymMat, t_end: f64, steps: usize) -> SymMat {
    let mut g = *g0.mat();
    let mut a = *h;
    let dt = t_end / steps as f64;
    let accel = |g: &SymMat, a: &SymMat| -> SymMat {
        let ginv = inv_sym(g).expect("interior of cone");
        let am = Mat::from_sym(a);
        am.mul(&Mat::from_sym(&ginv)).mul(&am).symmetrized()
    };
    for _ in 0..steps {
        let k1g = a;
        let k1a = accel(&g, &a);
        let k2g = a.add(&k1a.scale(dt / 2.0));
        let k2a = accel(&g.add(&k1g.scale(dt / 2.0)), &k2g);
        let k3g = a.add(&k2a.scale(dt / 2.0));
        let k3a = accel(&g.add(&k2g.scale(dt / 2.0)), &k3g);
        let k4g = a.add(&k3a.scale(dt));
        let k4a = accel(&g.add(&k3g.scale(dt)), &k4g);
        g = g.add(&k1g.add(&k2g.scale(2.0)).add(&k3g.scale(2.0)).add(&k4g).scale(dt / 6.0));
        a = a.add(&k1a.add(&k2a.scale(2.0)).add(&k3a.scale(2.0)).add(&k4a).scale(dt / 6.0));
    }
    g
}

// 2. θ on conformal rays matches (2/√n)(1 − ε^{n/2}) within 2%.
fn theta_conformal_rays() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(2, "pointwise theta on conformal rays");
    for n in [2usize, 3] {
        for eps in [0.5, 0.1, 0.01] {
            let gref = SpdPoint::new(SymMat::identity(n))?;
            let a = PsdPoint::new(SymMat::identity(n))?;
            let b = PsdPoint::new(SymMat::identity(n).scale(eps))?;
            let est = theta_distance(&gref, &a, &b, &ThetaOpts::default());
            let expect = 2.0 / (n as f64).sqrt() * (1.0 - eps.powf(n as f64 / 2.0));
            let ok = est.value >= expect * 0.98 && est.value <= expect * 1.02 && est.certified;
            result.check(
                ok,
                format!("n={n} eps={eps}: theta {:.6} in {expect:.6}·[0.98,1.02]", est.value),
            );
        }
    }
    Ok(result)
}

// 3. Determinant Lipschitz bound against the certified θ upper bound.
fn det_lipschitz_bound() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(3, "determinant Lipschitz inequality");
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let gref = SpdPoint::new(SymMat::identity(2))?;
    let opts = ThetaOpts::default();
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let a = random_psd(&mut rng, i % 10 == 3);
        let b = random_psd(&mut rng, i % 10 == 7);
        let est = theta_distance(&gref, &a, &b, &opts);
        let lhs = (a.summary().sqrt_det - b.summary().sqrt_det).abs();
        let rhs = (2.0_f64).sqrt() / 2.0 * est.value;
        if lhs > rhs * (1.0 + 1e-9) + 1e-12 {
            violations += 1;
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    result.check(violations == 0, format!("0 violations in 1000 pairs (got {violations}, max ratio {worst:.6})"));
    Ok(result)
}

fn random_psd(rng: &mut ChaCha8Rng, make_singular: bool) -> PsdPoint {
    if make_singular {
        // Rotated rank-one tensor: a genuine boundary point.
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let scale: f64 = rng.gen_range(0.2..2.0);
        let (c, s) = (angle.cos(), angle.sin());
        let mut m = SymMat::zero(2);
        m.set(0, 0, scale * c * c);
        m.set(0, 1, scale * c * s);
        m.set(1, 1, scale * s * s);
        PsdPoint::new(m).expect("rank-one is PSD")
    } else {
        PsdPoint::from_spd(&sample_spd(2, rng))
    }
}

// 4. Three-piece upper bound against the collapse constant at k ∈ {16, 256}.
fn three_piece_constant() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(4, "three-piece collapse bound");
    let grid = unit2(16);
    let config = RunConfig::default();
    let c2 = collapse_constant(2)?;
    for k in [16.0, 256.0] {
        let g0 = MetricField::euclidean(grid.clone())?;
        let g1 = MetricField::constant(grid.clone(), SymMat::diag(&[1.0, 1.0 / k]), FieldKind::Metric)?;
        let tuned = tuned_three_piece(&g0, &g1, &config)?.expect("fields differ");
        let bound = c2 * (1.0 + k.powf(-0.25)) * 1.05;
        result.check(
            tuned.length.value <= bound,
            format!("k={k}: tuned three-piece {:.4} <= {bound:.4}", tuned.length.value),
        );
        // Diameter surrogate d(g1_k, g2_k) ≤ 2 C(2) k^{-1/4} (1 + 5%).
        let g2k =
            MetricField::constant(grid.clone(), SymMat::identity(2).scale(1.0 / k), FieldKind::Metric)?;
        let upper = upper_bound(&g1, &g2k, &config)?;
        let diam = 2.0 * c2 * k.powf(-0.25) * 1.05;
        result.check(
            upper.length.value <= diam,
            format!("k={k}: upper(g1,g2) {:.4} <= {diam:.4} ({})", upper.length.value, upper.label),
        );
    }
    Ok(result)
}

// 5. lower ≤ upper over a ≥500-pair random corpus; zero violations.
fn interval_soundness() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(5, "interval soundness on random corpus");
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut config = RunConfig::default();
    config.budget.three_piece_evals = 9;
    config.budget.path_iters = 3;
    config.quadrature.t_nodes = 32;
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut worst_gap: f64 = f64::INFINITY;
    for dim in [1usize, 2, 3] {
        let grid = match dim {
            1 => TorusGrid::unit(1, 16)?,
            2 => TorusGrid::unit(2, 8)?,
            _ => TorusGrid::unit(3, 4)?,
        };
        let pairs = if dim == 2 { 300 } else { 100 };
        for _ in 0..pairs {
            let spread = rng.gen_range(0.1..0.45);
            let a = random_metric_field(&grid, &mut rng, spread)?;
            let b = random_metric_field(&grid, &mut rng, spread)?;
            match estimate(&a, &b, &config) {
                Ok(est) => {
                    checked += 1;
                    if est.upper > 0.0 {
                        worst_gap = worst_gap.min(est.upper - est.lower);
                    }
                }
                // estimate() fails hard on a soundness violation.
                Err(_) => violations += 1,
            }
        }
    }
    result.check(
        checked >= 500 && violations == 0,
        format!("{checked} pairs, {violations} violations, min upper-lower gap {worst_gap:.3e}"),
    );
    Ok(result)
}

fn random_metric_field(grid: &TorusGrid, rng: &mut ChaCha8Rng, spread: f64) -> Result<MetricField> {
    let values = (0..grid.len())
        .map(|_| {
            let m = sample_sym(grid.dim, rng, spread);
            let floor = eigen_summary(&m).lambda_min;
            let shift = (-floor).max(0.0) + rng.gen_range(0.25..0.8);
            let mut g = m;
            for i in 0..grid.dim {
                g.set(i, i, g.get(i, i) + shift);
            }
            g
        })
        .collect();
    MetricField::new(grid.clone(), values, FieldKind::Metric)
}

// 6. The Θ-inversion reproduces Θ when substituted back (algebraic identity).
fn inversion_identity() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(6, "theta inversion identity");
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let theta: f64 = rng.gen_range(0.0..10.0);
        let v: f64 = rng.gen_range(0.01..5.0);
        let n = rng.gen_range(1..=3usize);
        let d = invert_theta_quadratic(theta, v, n);
        let back = d * ((n as f64).sqrt() * d + 2.0 * v.sqrt());
        worst = worst.max((back - theta).abs());
    }
    result.check(worst < 1e-10, format!("max |reconstructed - theta| = {worst:.2e} < 1e-10"));
    Ok(result)
}

// 7. Conformal Lipschitz: route length ≤ √n ‖τ − σ‖_{g0} (1 + 2%).
fn conformal_lipschitz() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(7, "conformal Lipschitz bound");
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let grid = unit2(32);
    let config = RunConfig::default();
    let tau_pi = 2.0 * std::f64::consts::PI;
    let mut worst_ratio: f64 = 0.0;
    let mut checked = 0usize;
    for _ in 0..50 {
        // Bounded base metric and two smooth conformal coordinates.
        let (a0, b0): (f64, f64) = (rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
        let g0 = MetricField::from_fn(grid.clone(), FieldKind::Metric, |x| {
            SymMat::identity(2).scale(1.0 + a0 * (tau_pi * x[0]).sin() + b0 * (tau_pi * x[1]).cos())
        })?;
        let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let smooth = |c: &[f64]| {
            let c = c.to_vec();
            ScalarField::from_fn(grid.clone(), move |x| {
                c[0] * (tau_pi * x[0]).sin()
                    + c[1] * (tau_pi * x[1]).cos()
                    + c[2] * (tau_pi * x[0]).cos() * (tau_pi * x[1]).sin()
            })
            .expect("grid matches")
        };
        let sigma = smooth(&coeffs[..3]);
        let tau = smooth(&coeffs[3..]);
        let psi_sigma = conformal_exp(&g0, &sigma, &config.tolerances)?;
        let psi_tau = conformal_exp(&g0, &tau, &config.tolerances)?;
        let varsigma = detect_conformal(&psi_sigma, &psi_tau)
            .ok_or_else(|| Error::InvalidParameter("conformal pair not detected".into()))?;
        let route = MetricPath::conformal_geodesic(psi_sigma.clone(), varsigma)?;
        let length = path_length(&route, config.quadrature.t_nodes, &config.tolerances)?.value;
        let diff = ScalarField::new(
            grid.clone(),
            tau.values().iter().zip(sigma.values().iter()).map(|(t, s)| t - s).collect(),
        )?;
        let bound = (2.0_f64).sqrt() * diff.l2_norm(&g0)?;
        if bound > 1e-12 {
            worst_ratio = worst_ratio.max(length / bound);
        }
        checked += 1;
    }
    result.check(
        checked == 50 && worst_ratio <= 1.02,
        format!("50 pairs, max route/bound ratio {worst_ratio:.6} <= 1.02"),
    );
    Ok(result)
}

// 8. Half-torus collapse: classification and limit exact off a 2-cell band.
fn omega_classification() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(8, "omega classification accuracy");
    let grid = unit2(32);
    let config = RunConfig::default();
    let ks: Vec<f64> = (1..=12).map(|k| k as f64).collect();
    let seq = example_sequences("half_collapse", &grid, &ks)?;
    let classes = classify_points(&seq, &config.sequence);
    let limit = omega_limit(&seq, &config.sequence, &config.tolerances)?;
    let shape0 = grid.shape[0] as f64;
    let h = grid.period[0] / shape0;
    let mut band = 0usize;
    let mut correct = 0usize;
    let mut graded = 0usize;
    let mut max_limit_err: f64 = 0.0;
    for x in 0..grid.len() {
        let c0 = grid.coords(x)[0];
        // Jump columns sit at x0 = 0.5 and the wrap at x0 = 0.
        let d_to_jump = [0.0_f64, 0.5]
            .iter()
            .map(|j| {
                let d = (c0 - j).abs();
                d.min(grid.period[0] - d)
            })
            .fold(f64::INFINITY, f64::min);
        if d_to_jump <= 2.0 * h {
            band += 1;
            continue;
        }
        graded += 1;
        let inside = c0 < 0.5;
        let expect_class = if inside { PointClass::Converged } else { PointClass::Collapsed };
        if classes[x] == expect_class {
            correct += 1;
        }
        let expect_limit = if inside { SymMat::identity(2) } else { SymMat::zero(2) };
        max_limit_err = max_limit_err.max(limit.value(x).sub(&expect_limit).max_abs());
    }
    let accuracy = correct as f64 / graded.max(1) as f64;
    result.check(
        accuracy >= 0.99,
        format!("class accuracy {accuracy:.4} >= 0.99 off a {band}-node band"),
    );
    result.check(max_limit_err < 1e-6, format!("limit error {max_limit_err:.2e} < 1e-6 off band"));
    Ok(result)
}

// 9. Volume convergence along the generator suites.
fn volume_convergence() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(9, "volume convergence of generator suites");
    let grid = unit2(32);
    let config = RunConfig::default();
    let j_ladder = |j_max: u32| -> Vec<f64> { (1..=j_max).map(|j| 4.0_f64.powi(j as i32)).collect() };
    let suites: Vec<(&str, Vec<f64>)> = vec![
        ("g1", j_ladder(14)),
        ("g2", j_ladder(14)),
        ("g3", j_ladder(4)),
        ("g4", j_ladder(14)),
        ("half_collapse", (1..=12).map(|k| k as f64).collect()),
        ("conformal", (2..=16).map(|k| k as f64).collect()),
    ];
    for (kind, ks) in suites {
        let seq = example_sequences(kind, &grid, &ks)?;
        let limit = omega_limit(&seq, &config.sequence, &config.tolerances)?;
        let deflated = crate::field::deflated_set(seq.terms(), config.tolerances.delta_num)?;
        let masks = [
            ("full", RegionMask::full(grid.clone())),
            ("deflated", deflated.clone()),
            ("inflated", deflated.complement()),
        ];
        let mut worst_gap: f64 = 0.0;
        for (_, mask) in &masks {
            let final_vol = volume(seq.terms().last().unwrap(), mask)?;
            let limit_vol = volume(&limit, mask)?;
            worst_gap = worst_gap.max((final_vol - limit_vol).abs());
        }
        result.check(worst_gap < 1e-3, format!("{kind}: max |Vol(Y,g_K) - Vol(Y,limit)| {worst_gap:.2e} < 1e-3"));
        let corridor = volume(seq.terms().last().unwrap(), &deflated)?;
        result.check(corridor < 1e-2, format!("{kind}: Vol(deflated, g_K) {corridor:.2e} < 1e-2"));
    }
    Ok(result)
}

/// Configuration for the torus equivalence matrix: thresholds sized to the
/// 32² grid (the margin must exceed the (4/√n)·√(1/shape) volume floor a
/// grid line carries, and the upper threshold the C(2)(k^{-1/4}+√(1/shape))
/// plateau), plus a deep `s` range so the tuner can damp the middle leg of
/// wide-coefficient pairs.
fn torus_matrix_config() -> RunConfig {
    let mut config = RunConfig::default();
    config.budget.three_piece_evals = 28;
    config.budget.widths = vec![1];
    config.budget.log_s_range = ((1e-120_f64).ln(), 0.0);
    config.budget.path_iters = 0;
    config.quadrature.t_nodes = 32;
    config.sequence.equiv_upper_tol = 1.0;
    config.sequence.inequiv_lower_margin = 0.55;
    config.theta.max_iters = 20;
    config
}

// 10. The four torus families: all six pairs equivalent, each inequivalent
// to the constant-identity sequence.
fn torus_equivalence_matrix() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(10, "torus equivalence matrix");
    let grid = unit2(32);
    let config = torus_matrix_config();
    let js: Vec<f64> = (1..=6).map(|j| 4.0_f64.powi(j)).collect();
    // e^{k·x} must stay inside f64 range on [0,1): cap g3's ladder at 4^4.
    let js_g3: Vec<f64> = js.iter().map(|k| k.min(256.0)).collect();
    let names = ["g1", "g2", "g3", "g4"];
    let seqs: Vec<_> = names
        .iter()
        .map(|kind| {
            let ks = if *kind == "g3" { &js_g3 } else { &js };
            example_sequences(kind, &grid, ks)
        })
        .collect::<Result<Vec<_>>>()?;
    for i in 0..4 {
        for j in i + 1..4 {
            let rep = crate::omega::equivalence_test(&seqs[i], &seqs[j], &config)?;
            result.check(
                rep.verdict == Verdict::Equivalent,
                format!(
                    "{} vs {}: {:?} (final upper {:.3}, lower {:.3})",
                    names[i],
                    names[j],
                    rep.verdict,
                    rep.termwise_upper.last().unwrap(),
                    rep.termwise_lower.last().unwrap()
                ),
            );
        }
    }
    let ones: Vec<MetricField> =
        (0..js.len()).map(|_| MetricField::euclidean(grid.clone())).collect::<Result<_>>()?;
    let const_i = crate::omega::MetricSequence::new(ones)?;
    for (name, seq) in names.iter().zip(seqs.iter()) {
        let rep = crate::omega::equivalence_test(seq, &const_i, &config)?;
        result.check(
            rep.verdict == Verdict::Inequivalent,
            format!(
                "{name} vs const-I: {:?} (final lower {:.3})",
                rep.verdict,
                rep.termwise_lower.last().unwrap()
            ),
        );
    }
    Ok(result)
}

// 11. Audited amenable family: upper ≤ K‖g1-g0‖ and the Monte-Carlo
// norm-ratio check.
fn amenable_family_bounds() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(11, "amenable family norm bounds");
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let grid = unit2(16);
    let mut config = RunConfig::default();
    config.budget.path_iters = 0;
    config.budget.three_piece_evals = 9;
    let fields: Vec<MetricField> =
        (0..100).map(|_| random_metric_field(&grid, &mut rng, 0.3)).collect::<Result<_>>()?;
    let report = amenability_audit(&fields)?;
    let k = norm_equivalence_constant(&report, 2)?;
    let mut worst_pair: f64 = 0.0;
    for pair in fields.chunks(2) {
        let upper = upper_bound(&pair[0], &pair[1], &config)?.length.value;
        let norm = reference_norm_of_difference(&pair[0], &pair[1])?;
        if norm > 0.0 {
            worst_pair = worst_pair.max(upper / (k * norm));
        }
    }
    result.check(
        worst_pair <= 1.0 + 1e-9,
        format!("50 pairs: max upper/(K·norm) = {worst_pair:.6} <= 1 (K = {k:.3})"),
    );
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..200 {
        let h = TensorField::new(
            grid.clone(),
            (0..grid.len()).map(|_| sample_sym(2, &mut rng, 1.0)).collect(),
        )?;
        let ga = &fields[rng.gen_range(0..fields.len())];
        let gb = &fields[rng.gen_range(0..fields.len())];
        let (na, nb) = (l2_norm(ga, &h)?, l2_norm(gb, &h)?);
        if na > 0.0 && nb > 0.0 {
            worst_ratio = worst_ratio.max((na / nb).max(nb / na));
        }
    }
    result.check(
        worst_ratio <= k * (1.0 + 1e-9),
        format!("200 sampled h: max norm ratio {worst_ratio:.4} <= K = {k:.4}"),
    );
    Ok(result)
}

// 12. Boundary-approach paths: finite, monotone in δ, quadrature converges.
fn boundary_path_finiteness() -> Result<CriterionResult> {
    let mut result = CriterionResult::new(12, "boundary path finiteness");
    let grid = unit2(16);
    let config = RunConfig::default();
    let g0 = MetricField::constant(grid, SymMat::diag(&[1.0, 0.0]), FieldKind::Semimetric)?;
    let mut prev = f64::INFINITY;
    for delta in [0.1, 0.01, 0.001] {
        let path = boundary_shift_path(&g0, delta, &config.tolerances)?;
        let coarse = path_length(&path, 64, &config.tolerances)?;
        let fine = path_length(&path, 128, &config.tolerances)?;
        let finite = coarse.value.is_finite() && fine.value.is_finite();
        let monotone = fine.value < prev;
        let rel_change = (fine.value - coarse.value).abs() / fine.value.max(1e-300);
        result.check(
            finite && monotone && rel_change < 1e-3,
            format!(
                "delta={delta}: length {:.6}, refinement change {rel_change:.2e} < 1e-3",
                fine.value
            ),
        );
        prev = fine.value;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_partition_criteria() {
        let mut all: Vec<usize> = ["spd", "torus", "bounds"]
            .iter()
            .flat_map(|s| suite_criteria(s).unwrap().iter().copied())
            .collect();
        all.sort_unstable();
        assert_eq!(all, (1..=12).collect::<Vec<_>>());
        assert!(suite_criteria("nope").is_err());
    }
}
