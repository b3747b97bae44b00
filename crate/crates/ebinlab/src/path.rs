//! Constructible path families in the space of metric fields, with a
//! certified length functional.
//!
//! The length of a path `g_t` is `∫₀¹ ‖g'_t‖_{g_t} dt` where the norm is
//! the L² norm of the field at `g_t`. Closed-form kinds differentiate
//! analytically; sampled paths use central differences. The t-quadrature
//! always substitutes `t = u⁴/2` (mirrored on the right half), which makes
//! the `t^{-3/4}`-type speed blowup at a degenerate endpoint a bounded,
//! smooth integrand while leaving smooth integrands smooth.

use crate::field::{MetricField, MetricFieldFile, RegionMask, ScalarField, TorusGrid};
use crate::linalg::{det_sym, inv_sym};
use crate::spd::SymMat;
use crate::{Error, Result, Tolerances};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// One-parameter family of metric fields on `[0,1]`.
#[derive(Debug, Clone)]
pub enum MetricPath {
    /// Straight segment `(1-t) g0 + t g1`.
    Linear { g0: MetricField, g1: MetricField },
    /// `g_t = (1 + (n/4) t ρ)^{4/n} g0`, the conformal-orbit geodesic.
    ConformalGeodesic { g0: MetricField, rho: ScalarField },
    /// Same family addressed by its endpoint: `t = 1` gives
    /// `(1 + (n/4) σ)^{4/n} g0`.
    ConformalExp { g0: MetricField, sigma: ScalarField },
    /// `((1-t) + t f) · g`: scaling toward the cutoff profile.
    ProfileScale { g: MetricField, f: ScalarField },
    /// `f · ((1-t) g0 + t g1)`: the damped middle leg.
    ProfileLinear { f: ScalarField, g0: MetricField, g1: MetricField },
    /// Concatenation g0 → f·g0 → f·g1 → g1 in equal thirds.
    ThreePiece {
        g0: MetricField,
        g1: MetricField,
        region: RegionMask,
        s: f64,
        w: usize,
        profile: CutoffProfile,
    },
    /// Piecewise-linear interpolation of stored samples.
    Sampled { samples: Vec<(f64, MetricField)> },
}

/// Smoothstep cutoff between the eroded and dilated region.
#[derive(Debug, Clone)]
pub struct CutoffProfile {
    pub s: f64,
    pub w: usize,
    pub values: ScalarField,
}

impl CutoffProfile {
    /// Profile with `f = 1` outside the region, `f = s` on the region
    /// eroded by `w+1` cells, and a C¹ smoothstep ramp across the inner
    /// boundary band (Chebyshev grid distance, periodic wrap).
    ///
    /// The ramp sits strictly inside the region: the fields only shrink
    /// where they are allowed to differ, so the collapse-leg length stays
    /// controlled by the region's intrinsic volume.
    pub fn build(region: &RegionMask, s: f64, w: usize) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter("cutoff s must lie in (0, 1]".into()));
        }
        let grid = region.grid().clone();
        let n = grid.len();
        if region.count() == 0 || s == 1.0 {
            return Ok(CutoffProfile { s, w, values: ScalarField::constant(grid, 1.0)? });
        }
        // Depth: distance (in cells) to the complement; 0 outside.
        let depth = chebyshev_distance_transform(&grid, region.members(), false);
        let span = (w.max(1) + 1) as f64;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let d = if depth[i] == u32::MAX { f64::INFINITY } else { depth[i] as f64 };
            let x = ((span - d) / span).clamp(0.0, 1.0);
            let ramp = x * x * (3.0 - 2.0 * x);
            values.push(s + (1.0 - s) * ramp);
        }
        Ok(CutoffProfile { s, w, values: ScalarField::new(grid, values)? })
    }
}

/// Multi-source BFS distance (in cells, Chebyshev metric, periodic wrap).
/// `to_members = true` measures distance to the member set, else to its
/// complement.
fn chebyshev_distance_transform(grid: &TorusGrid, members: &[bool], to_members: bool) -> Vec<u32> {
    let n = grid.len();
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for (i, &m) in members.iter().enumerate() {
        if m == to_members {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    // Chebyshev neighborhood: all nonzero offsets in {-1,0,1}^dim.
    let mut offsets: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..grid.dim {
        let mut next = Vec::new();
        for base in &offsets {
            for d in [-1i64, 0, 1] {
                let mut o = base.clone();
                o.push(d);
                next.push(o);
            }
        }
        offsets = next;
    }
    offsets.retain(|o| o.iter().any(|&d| d != 0));
    while let Some(node) = queue.pop_front() {
        let idx = grid.unflatten(node);
        for off in &offsets {
            let neighbor: Vec<usize> = idx
                .iter()
                .enumerate()
                .map(|(ax, &i)| {
                    let s = grid.shape[ax] as i64;
                    ((i as i64 + off[ax]).rem_euclid(s)) as usize
                })
                .collect();
            let nb = grid.flatten(&neighbor);
            if dist[nb] == u32::MAX {
                dist[nb] = dist[node] + 1;
                queue.push_back(nb);
            }
        }
    }
    dist
}

impl MetricPath {
    pub fn linear(g0: MetricField, g1: MetricField) -> Result<Self> {
        g0.same_grid(&g1)?;
        Ok(MetricPath::Linear { g0, g1 })
    }

    pub fn conformal_geodesic(g0: MetricField, rho: ScalarField) -> Result<Self> {
        if g0.grid() != rho.grid() {
            return Err(Error::ShapeMismatch("rho grid".into()));
        }
        Ok(MetricPath::ConformalGeodesic { g0, rho })
    }

    pub fn sampled(samples: Vec<(f64, MetricField)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("sampled path needs >= 2 samples".into()));
        }
        let mut sorted = samples;
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(MetricPath::Sampled { samples: sorted })
    }

    pub fn grid(&self) -> &TorusGrid {
        match self {
            MetricPath::Linear { g0, .. } => g0.grid(),
            MetricPath::ConformalGeodesic { g0, .. } => g0.grid(),
            MetricPath::ConformalExp { g0, .. } => g0.grid(),
            MetricPath::ProfileScale { g, .. } => g.grid(),
            MetricPath::ProfileLinear { g0, .. } => g0.grid(),
            MetricPath::ThreePiece { g0, .. } => g0.grid(),
            MetricPath::Sampled { samples } => samples[0].1.grid(),
        }
    }

    /// Raw node values at parameter `t`. Endpoints reproduce the stored
    /// fields exactly.
    fn values_at(&self, t: f64) -> Result<Vec<SymMat>> {
        match self {
            MetricPath::Linear { g0, g1 } => {
                if t == 0.0 {
                    return Ok(g0.values().to_vec());
                }
                if t == 1.0 {
                    return Ok(g1.values().to_vec());
                }
                Ok(g0
                    .values()
                    .iter()
                    .zip(g1.values().iter())
                    .map(|(a, b)| a.scale(1.0 - t).add(&b.scale(t)))
                    .collect())
            }
            MetricPath::ConformalGeodesic { g0, rho } | MetricPath::ConformalExp { g0, sigma: rho } => {
                let n = g0.grid().dim as f64;
                let mut out = Vec::with_capacity(g0.values().len());
                for (node, (g, r)) in g0.values().iter().zip(rho.values().iter()).enumerate() {
                    let base = 1.0 + n / 4.0 * t * r;
                    if !(base > 0.0) {
                        return Err(Error::DomainViolation {
                            node,
                            what: format!("1 + (n/4) t rho = {base:e} not positive"),
                        });
                    }
                    out.push(g.scale(base.powf(4.0 / n)));
                }
                Ok(out)
            }
            MetricPath::ProfileScale { g, f } => Ok(g
                .values()
                .iter()
                .zip(f.values().iter())
                .map(|(m, fv)| m.scale((1.0 - t) + t * fv))
                .collect()),
            MetricPath::ProfileLinear { f, g0, g1 } => Ok(g0
                .values()
                .iter()
                .zip(g1.values().iter())
                .zip(f.values().iter())
                .map(|((a, b), fv)| a.scale(1.0 - t).add(&b.scale(t)).scale(*fv))
                .collect()),
            MetricPath::ThreePiece { .. } => {
                let (piece, local) = self.three_piece_local(t);
                piece.values_at(local)
            }
            MetricPath::Sampled { samples } => {
                let (lo, hi, local) = bracket(samples, t);
                if local == 0.0 {
                    return Ok(samples[lo].1.values().to_vec());
                }
                Ok(samples[lo]
                    .1
                    .values()
                    .iter()
                    .zip(samples[hi].1.values().iter())
                    .map(|(a, b)| a.scale(1.0 - local).add(&b.scale(local)))
                    .collect())
            }
        }
    }

    /// Time derivative of the node values at `t` (analytic for closed-form
    /// kinds, central differences for sampled paths).
    fn deriv_at(&self, t: f64) -> Result<Vec<SymMat>> {
        match self {
            MetricPath::Linear { g0, g1 } => {
                Ok(g0.values().iter().zip(g1.values().iter()).map(|(a, b)| b.sub(a)).collect())
            }
            MetricPath::ConformalGeodesic { g0, rho } | MetricPath::ConformalExp { g0, sigma: rho } => {
                let n = g0.grid().dim as f64;
                let mut out = Vec::with_capacity(g0.values().len());
                for (node, (g, r)) in g0.values().iter().zip(rho.values().iter()).enumerate() {
                    let base = 1.0 + n / 4.0 * t * r;
                    if !(base > 0.0) {
                        return Err(Error::DomainViolation {
                            node,
                            what: format!("1 + (n/4) t rho = {base:e} not positive"),
                        });
                    }
                    out.push(g.scale(r * base.powf(4.0 / n - 1.0)));
                }
                Ok(out)
            }
            MetricPath::ProfileScale { g, f } => Ok(g
                .values()
                .iter()
                .zip(f.values().iter())
                .map(|(m, fv)| m.scale(fv - 1.0))
                .collect()),
            MetricPath::ProfileLinear { f, g0, g1 } => Ok(g0
                .values()
                .iter()
                .zip(g1.values().iter())
                .zip(f.values().iter())
                .map(|((a, b), fv)| b.sub(a).scale(*fv))
                .collect()),
            MetricPath::ThreePiece { .. } => {
                let (piece, local) = self.three_piece_local(t);
                let sign = if matches!(t, t if t > 2.0 / 3.0) { -3.0 } else { 3.0 };
                Ok(piece.deriv_at(local)?.into_iter().map(|m| m.scale(sign)).collect())
            }
            MetricPath::Sampled { samples } => {
                // Central difference over the bracketing window.
                let (lo, hi, _) = bracket(samples, t);
                let l = lo.saturating_sub(usize::from(t <= samples[lo].0 && lo > 0));
                let h = (hi + usize::from(t >= samples[hi].0 && hi + 1 < samples.len()))
                    .min(samples.len() - 1);
                let dt = samples[h].0 - samples[l].0;
                if dt <= 0.0 {
                    return Err(Error::InvalidParameter("degenerate sample spacing".into()));
                }
                Ok(samples[l]
                    .1
                    .values()
                    .iter()
                    .zip(samples[h].1.values().iter())
                    .map(|(a, b)| b.sub(a).scale(1.0 / dt))
                    .collect())
            }
        }
    }

    fn three_piece_local(&self, t: f64) -> (MetricPath, f64) {
        let MetricPath::ThreePiece { g0, g1, profile, .. } = self else {
            unreachable!("caller checks the kind")
        };
        if t <= 1.0 / 3.0 {
            (
                MetricPath::ProfileScale { g: g0.clone(), f: profile.values.clone() },
                (3.0 * t).clamp(0.0, 1.0),
            )
        } else if t <= 2.0 / 3.0 {
            (
                MetricPath::ProfileLinear {
                    f: profile.values.clone(),
                    g0: g0.clone(),
                    g1: g1.clone(),
                },
                (3.0 * t - 1.0).clamp(0.0, 1.0),
            )
        } else {
            // Last leg runs the scale family of g1 backwards.
            (
                MetricPath::ProfileScale { g: g1.clone(), f: profile.values.clone() },
                (3.0 - 3.0 * t).clamp(0.0, 1.0),
            )
        }
    }

    /// The three component paths of a three-piece construction.
    pub fn three_piece_components(&self) -> Option<[MetricPath; 3]> {
        let MetricPath::ThreePiece { g0, g1, profile, .. } = self else { return None };
        Some([
            MetricPath::ProfileScale { g: g0.clone(), f: profile.values.clone() },
            MetricPath::ProfileLinear { f: profile.values.clone(), g0: g0.clone(), g1: g1.clone() },
            MetricPath::ProfileScale { g: g1.clone(), f: profile.values.clone() },
        ])
    }

    /// Evaluate to a validated field; kind is classified from the data.
    pub fn at(&self, t: f64, tol: &Tolerances) -> Result<MetricField> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("t = {t} outside [0,1]")));
        }
        MetricField::classified(self.grid().clone(), self.values_at(t)?, tol)
    }

    /// L² speed `‖g'_t‖_{g_t}` at parameter `t`.
    pub fn speed(&self, t: f64) -> Result<f64> {
        let values = self.values_at(t)?;
        let deriv = self.deriv_at(t)?;
        Ok(speed_from_values(&values, &deriv, self.grid().cell_volume()))
    }
}

fn bracket(samples: &[(f64, MetricField)], t: f64) -> (usize, usize, f64) {
    if t <= samples[0].0 {
        return (0, 0, 0.0);
    }
    for i in 0..samples.len() - 1 {
        let (t0, t1) = (samples[i].0, samples[i + 1].0);
        if t <= t1 {
            return (i, i + 1, ((t - t0) / (t1 - t0)).clamp(0.0, 1.0));
        }
    }
    (samples.len() - 1, samples.len() - 1, 0.0)
}

/// `‖h‖_g` for raw node values: `√(Σ tr(g⁻¹hg⁻¹h)·√det g · cell)`.
/// Degenerate nodes contribute +∞, which the substituted quadrature keeps
/// integrable at path endpoints.
pub(crate) fn speed_from_values(values: &[SymMat], deriv: &[SymMat], cell: f64) -> f64 {
    let mut acc = 0.0;
    for (g, h) in values.iter().zip(deriv.iter()) {
        let Some(ginv) = inv_sym(g) else { return f64::INFINITY };
        let gm = crate::linalg::Mat::from_sym(&ginv);
        let hm = crate::linalg::Mat::from_sym(h);
        let gh = gm.mul(&hm);
        let tr = gh.mul(&gh).trace();
        let det = det_sym(g);
        if det < 0.0 {
            return f64::INFINITY;
        }
        acc += tr * det.sqrt() * cell;
    }
    acc.max(0.0).sqrt()
}

/// Quadrature result with a refinement-based error estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LengthReport {
    pub value: f64,
    /// |value − value at half resolution|.
    pub error_estimate: f64,
}

/// Which endpoints get the regularizing substitution.
#[derive(Debug, Clone, Copy)]
struct SubFlags {
    left: bool,
    right: bool,
}

/// Composite Simpson over `[0,1]`. Flagged endpoints integrate their half
/// of the interval under the substitution `t = u⁴/2` (mirrored on the
/// right), which turns an integrable `t^{-3/4}`-type speed blowup into a
/// bounded smooth integrand; unflagged halves use the plain rule, which is
/// near-exact for smooth speeds. The substituted endpoint samples at
/// `u = 1e-3` (so `t = 5e-13` stays representable next to 0 and 1) where
/// the integrand already sits on its finite limit.
fn integrate_speed(
    speed: &dyn Fn(f64) -> Result<f64>,
    subintervals: usize,
    flags: SubFlags,
) -> Result<f64> {
    let n = subintervals.max(4).div_ceil(2) * 2;
    let simpson_weight = |j: usize, n: usize| -> f64 {
        if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let plain = |a: f64, b: f64, n: usize| -> Result<f64> {
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for j in 0..=n {
            let s = speed((a + j as f64 * h).clamp(0.0, 1.0))?;
            acc += simpson_weight(j, n) * if s.is_finite() { s } else { f64::INFINITY };
        }
        Ok(acc * h / 3.0)
    };
    let substituted = |right_half: bool, n: usize| -> Result<f64> {
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for j in 0..=n {
            let u = (j as f64 * h).max(1e-3);
            let t = if right_half { 1.0 - 0.5 * u * u * u * u } else { 0.5 * u * u * u * u };
            let jacobian = 2.0 * u * u * u;
            let s = speed(t.clamp(0.0, 1.0))?;
            acc += simpson_weight(j, n) * if s.is_finite() { s * jacobian } else { f64::INFINITY };
        }
        Ok(acc * h / 3.0)
    };
    match (flags.left, flags.right) {
        (false, false) => plain(0.0, 1.0, n),
        (true, true) => Ok(substituted(false, n)? + substituted(true, n)?),
        (true, false) => Ok(substituted(false, n)? + plain(0.5, 1.0, n)?),
        (false, true) => Ok(plain(0.0, 0.5, n)? + substituted(true, n)?),
    }
}

/// An endpoint counts as near-degenerate (and gets the substitution) when
/// some node's minimal eigenvalue sits under 1e-3 of the field scale; the
/// speed there can climb like `t^{-3/4}` and would wreck the plain rule.
fn near_degenerate(values: &[SymMat]) -> bool {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.max_abs()));
    values
        .iter()
        .any(|v| crate::spd::eigen_summary(v).lambda_min < 1e-3 * (1.0 + scale))
}

impl MetricPath {
    /// Substitution flags for a non-concatenated path kind.
    fn sub_flags(&self) -> Result<SubFlags> {
        Ok(match self {
            // The collapse leg ((1-t)+tf)^{n/4-1} steepens toward t = 1
            // whenever the profile dips meaningfully below one.
            MetricPath::ProfileScale { f, .. } => SubFlags {
                left: false,
                right: f.values().iter().fold(1.0_f64, |m, v| m.min(*v)) < 0.5,
            },
            // The conformal families have constant L² speed in t.
            MetricPath::ConformalGeodesic { .. } | MetricPath::ConformalExp { .. } => {
                SubFlags { left: false, right: false }
            }
            _ => SubFlags {
                left: near_degenerate(&self.values_at(0.0)?),
                right: near_degenerate(&self.values_at(1.0)?),
            },
        })
    }
}

/// Path length by composite Simpson in t with `t_nodes` subintervals
/// (per half, after substitution), refined once for the error estimate.
/// Three-piece paths integrate per piece; sampled paths per segment.
pub fn path_length(path: &MetricPath, t_nodes: usize, tol: &Tolerances) -> Result<LengthReport> {
    if t_nodes < 8 {
        return Err(Error::InvalidParameter("t_nodes must be >= 8".into()));
    }
    match path {
        MetricPath::ThreePiece { .. } => {
            let pieces = path.three_piece_components().expect("three-piece kind");
            let mut value = 0.0;
            let mut err = 0.0;
            for piece in &pieces {
                let r = path_length(&piece.clone(), t_nodes, tol)?;
                value += r.value;
                err += r.error_estimate;
            }
            Ok(LengthReport { value, error_estimate: err })
        }
        MetricPath::Sampled { samples } => {
            let segs = samples.len() - 1;
            let per_seg = (t_nodes / segs).max(8);
            let mut value = 0.0;
            let mut err = 0.0;
            for i in 0..segs {
                let seg =
                    MetricPath::Linear { g0: samples[i].1.clone(), g1: samples[i + 1].1.clone() };
                let r = path_length(&seg, per_seg, tol)?;
                value += r.value;
                err += r.error_estimate;
            }
            Ok(LengthReport { value, error_estimate: err })
        }
        _ => {
            let flags = path.sub_flags()?;
            let f = |t: f64| path.speed(t);
            let coarse = integrate_speed(&f, t_nodes / 2, flags)?;
            let fine = integrate_speed(&f, t_nodes, flags)?;
            Ok(LengthReport { value: fine, error_estimate: (fine - coarse).abs() })
        }
    }
}

/// Single-level length without the refinement pass; what optimizer and
/// tuner loops compare with.
pub(crate) fn path_length_quick(path: &MetricPath, t_nodes: usize, tol: &Tolerances) -> Result<f64> {
    match path {
        MetricPath::ThreePiece { .. } => {
            let pieces = path.three_piece_components().expect("three-piece kind");
            let mut value = 0.0;
            for piece in &pieces {
                value += path_length_quick(&piece.clone(), t_nodes, tol)?;
            }
            Ok(value)
        }
        MetricPath::Sampled { samples } => {
            let segs = samples.len() - 1;
            let per_seg = (t_nodes / segs).max(8);
            let mut value = 0.0;
            for i in 0..segs {
                let seg =
                    MetricPath::Linear { g0: samples[i].1.clone(), g1: samples[i + 1].1.clone() };
                value += path_length_quick(&seg, per_seg, tol)?;
            }
            Ok(value)
        }
        _ => {
            let flags = path.sub_flags()?;
            integrate_speed(&|t| path.speed(t), t_nodes, flags)
        }
    }
}

/// Pointwise conformal geodesic `(1 + (n/4) t ρ)^{4/n} g0` as a field.
pub fn conformal_geodesic(
    g0: &MetricField,
    rho: &ScalarField,
    t: f64,
    tol: &Tolerances,
) -> Result<MetricField> {
    let path = MetricPath::conformal_geodesic(g0.clone(), rho.clone())?;
    MetricField::classified(g0.grid().clone(), path.values_at(t)?, tol)
}

/// Conformal exponential `exp_g(σ g) = (1 + (n/4) σ)^{4/n} g`; equals the
/// conformal geodesic at `t = 1`.
pub fn conformal_exp(g0: &MetricField, sigma: &ScalarField, tol: &Tolerances) -> Result<MetricField> {
    conformal_geodesic(g0, sigma, 1.0, tol)
}

/// Three-piece construction: `g0 → f·g0 → f·((1-t)g0 + t g1) → g1` with a
/// smoothstep cutoff `f` built from the region (`f ≡ 1` when the region is
/// empty, collapsing the outer legs to constants).
pub fn three_piece_path(
    g0: &MetricField,
    g1: &MetricField,
    region: &RegionMask,
    s: f64,
    w: usize,
) -> Result<MetricPath> {
    g0.same_grid(g1)?;
    if g0.grid() != region.grid() {
        return Err(Error::ShapeMismatch("region grid".into()));
    }
    let profile = CutoffProfile::build(region, s, w)?;
    Ok(MetricPath::ThreePiece {
        g0: g0.clone(),
        g1: g1.clone(),
        region: region.clone(),
        s,
        w,
        profile,
    })
}

/// Length constant of the scale-to-cutoff leg: `√n` for n ≥ 4, and
/// `√n · ∫₀¹ (1-t)^{n/4-1} dt = 4/√n` for n ≤ 3.
pub fn collapse_constant(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let nf = n as f64;
    Ok(if n >= 4 { nf.sqrt() } else { 4.0 / nf.sqrt() })
}

/// Straight path from `g0 + δ·I` back to the (possibly degenerate) `g0`.
/// Finite length for any PSD `g0`; lengths shrink to zero with δ.
pub fn boundary_shift_path(g0: &MetricField, delta: f64, tol: &Tolerances) -> Result<MetricPath> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let id = SymMat::identity(g0.grid().dim);
    let shifted_vals: Vec<SymMat> =
        g0.values().iter().map(|m| m.add(&id.scale(delta))).collect();
    let shifted = MetricField::classified(g0.grid().clone(), shifted_vals, tol)?;
    MetricPath::linear(shifted, g0.clone())
}

// ---------------------------------------------------------------------
// Serialization for replay
// ---------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathFile {
    Linear { g0: MetricFieldFile, g1: MetricFieldFile },
    ConformalGeodesic { g0: MetricFieldFile, rho: Vec<f64> },
    ConformalExp { g0: MetricFieldFile, sigma: Vec<f64> },
    ProfileScale { g: MetricFieldFile, f: Vec<f64> },
    ProfileLinear { f: Vec<f64>, g0: MetricFieldFile, g1: MetricFieldFile },
    ThreePiece { g0: MetricFieldFile, g1: MetricFieldFile, region: Vec<bool>, s: f64, w: usize },
    Sampled { samples: Vec<(f64, MetricFieldFile)> },
}

impl MetricPath {
    pub fn to_file(&self) -> PathFile {
        match self {
            MetricPath::Linear { g0, g1 } => {
                PathFile::Linear { g0: g0.to_file(), g1: g1.to_file() }
            }
            MetricPath::ConformalGeodesic { g0, rho } => {
                PathFile::ConformalGeodesic { g0: g0.to_file(), rho: rho.values().to_vec() }
            }
            MetricPath::ConformalExp { g0, sigma } => {
                PathFile::ConformalExp { g0: g0.to_file(), sigma: sigma.values().to_vec() }
            }
            MetricPath::ProfileScale { g, f } => {
                PathFile::ProfileScale { g: g.to_file(), f: f.values().to_vec() }
            }
            MetricPath::ProfileLinear { f, g0, g1 } => PathFile::ProfileLinear {
                f: f.values().to_vec(),
                g0: g0.to_file(),
                g1: g1.to_file(),
            },
            MetricPath::ThreePiece { g0, g1, region, s, w, .. } => PathFile::ThreePiece {
                g0: g0.to_file(),
                g1: g1.to_file(),
                region: region.members().to_vec(),
                s: *s,
                w: *w,
            },
            MetricPath::Sampled { samples } => PathFile::Sampled {
                samples: samples.iter().map(|(t, f)| (*t, f.to_file())).collect(),
            },
        }
    }

    pub fn from_file(file: &PathFile, tol: &Tolerances) -> Result<Self> {
        let load = |f: &MetricFieldFile| MetricField::from_file_with(f, tol);
        Ok(match file {
            PathFile::Linear { g0, g1 } => MetricPath::Linear { g0: load(g0)?, g1: load(g1)? },
            PathFile::ConformalGeodesic { g0, rho } => {
                let g0 = load(g0)?;
                let rho = ScalarField::new(g0.grid().clone(), rho.clone())?;
                MetricPath::ConformalGeodesic { g0, rho }
            }
            PathFile::ConformalExp { g0, sigma } => {
                let g0 = load(g0)?;
                let sigma = ScalarField::new(g0.grid().clone(), sigma.clone())?;
                MetricPath::ConformalExp { g0, sigma }
            }
            PathFile::ProfileScale { g, f } => {
                let g = load(g)?;
                let f = ScalarField::new(g.grid().clone(), f.clone())?;
                MetricPath::ProfileScale { g, f }
            }
            PathFile::ProfileLinear { f, g0, g1 } => {
                let g0 = load(g0)?;
                let f = ScalarField::new(g0.grid().clone(), f.clone())?;
                MetricPath::ProfileLinear { f, g0, g1: load(g1)? }
            }
            PathFile::ThreePiece { g0, g1, region, s, w } => {
                let g0 = load(g0)?;
                let region = RegionMask::new(g0.grid().clone(), region.clone())?;
                three_piece_path(&g0, &load(g1)?, &region, *s, *w)?
            }
            PathFile::Sampled { samples } => MetricPath::sampled(
                samples
                    .iter()
                    .map(|(t, f)| Ok((*t, load(f)?)))
                    .collect::<Result<Vec<_>>>()?,
            )?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldKind;
    use crate::spd::sample_sym;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit2(nodes: usize) -> TorusGrid {
        TorusGrid::unit(2, nodes).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn constant_path_has_zero_length() {
        let g = MetricField::euclidean(unit2(8)).unwrap();
        let p = MetricPath::linear(g.clone(), g).unwrap();
        let r = path_length(&p, 16, &tol()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn linear_identity_to_double_matches_analytic_integral() {
        // speed² = 2/(1+t) on the unit torus, so L = ∫√(2/(1+t)) = 4 − 2√2.
        let g0 = MetricField::euclidean(unit2(8)).unwrap();
        let g1 = MetricField::constant(unit2(8), SymMat::identity(2).scale(2.0), FieldKind::Metric)
            .unwrap();
        let p = MetricPath::linear(g0, g1).unwrap();
        let r = path_length(&p, 64, &tol()).unwrap();
        let expect = 4.0 - 2.0 * (2.0_f64).sqrt();
        assert!((r.value - expect).abs() < 1e-8, "{} vs {expect}", r.value);
        assert!(r.error_estimate < 1e-6);
    }

    #[test]
    fn length_invariant_under_orientation_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = unit2(4);
        let mk = |rng: &mut ChaCha8Rng| {
            let vals = (0..grid.len())
                .map(|_| SymMat::identity(2).add(&sample_sym(2, rng, 0.3)))
                .collect();
            MetricField::new(grid.clone(), vals, FieldKind::Metric).unwrap()
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let fwd = path_length(&MetricPath::linear(a.clone(), b.clone()).unwrap(), 64, &tol())
            .unwrap()
            .value;
        let bwd = path_length(&MetricPath::linear(b, a).unwrap(), 64, &tol()).unwrap().value;
        assert!((fwd - bwd).abs() < 1e-10 * (1.0 + fwd));
    }

    #[test]
    fn conformal_geodesic_cases() {
        let grid = unit2(8);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let zero = ScalarField::constant(grid.clone(), 0.0).unwrap();
        let same = conformal_geodesic(&g0, &zero, 0.7, &tol()).unwrap();
        assert_eq!(same.values(), g0.values());
        let two = ScalarField::constant(grid.clone(), 2.0).unwrap();
        let scaled = conformal_geodesic(&g0, &two, 1.0, &tol()).unwrap();
        assert!((scaled.value(0).get(0, 0) - 4.0).abs() < 1e-12);
        let at0 = conformal_geodesic(&g0, &two, 0.0, &tol()).unwrap();
        assert_eq!(at0.values(), g0.values());
        // Domain violation names the offending node.
        let bad = ScalarField::constant(grid, -3.0).unwrap();
        match conformal_geodesic(&g0, &bad, 1.0, &tol()) {
            Err(Error::DomainViolation { node, .. }) => assert_eq!(node, 0),
            other => panic!("expected domain violation, got {other:?}"),
        }
    }

    #[test]
    fn conformal_exp_solves_for_epsilon() {
        let grid = unit2(8);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let eps: f64 = 0.04;
        let sigma = ScalarField::constant(grid.clone(), -2.0 + 2.0 * eps.sqrt()).unwrap();
        let out = conformal_exp(&g0, &sigma, &tol()).unwrap();
        assert!((out.value(0).get(0, 0) - eps).abs() < 1e-12);
        // Same formula as the geodesic at t = 1, exactly.
        let geo = conformal_geodesic(&g0, &sigma, 1.0, &tol()).unwrap();
        assert_eq!(out.values(), geo.values());
    }

    #[test]
    fn conformal_length_is_sqrt_n_times_rho_norm() {
        // The conformal-orbit geodesic from g0 with velocity ρ g0 has
        // length √n ‖ρ‖_{g0} (constant speed in the q-parameterization).
        let grid = unit2(16);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let rho = ScalarField::from_fn(grid.clone(), |x| {
            0.4 + 0.2 * (2.0 * std::f64::consts::PI * x[0]).sin()
        })
        .unwrap();
        let p = MetricPath::conformal_geodesic(g0.clone(), rho.clone()).unwrap();
        let r = path_length(&p, 64, &tol()).unwrap();
        let expect = (2.0_f64).sqrt() * rho.l2_norm(&g0).unwrap();
        assert!((r.value - expect).abs() < 1e-6 * expect, "{} vs {expect}", r.value);
    }

    #[test]
    fn three_piece_degenerates_to_linear() {
        let grid = unit2(8);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let g1 = MetricField::constant(grid.clone(), SymMat::diag(&[2.0, 1.5]), FieldKind::Metric)
            .unwrap();
        let linear_len =
            path_length(&MetricPath::linear(g0.clone(), g1.clone()).unwrap(), 32, &tol())
                .unwrap()
                .value;
        // Empty region: f ≡ 1, outer pieces constant.
        let empty = RegionMask::empty(grid.clone());
        let p = three_piece_path(&g0, &g1, &empty, 0.3, 1).unwrap();
        let r = path_length(&p, 32, &tol()).unwrap();
        assert!((r.value - linear_len).abs() < 1e-9);
        // s = 1 likewise.
        let full = RegionMask::full(grid.clone());
        let p1 = three_piece_path(&g0, &g1, &full, 1.0, 1).unwrap();
        let r1 = path_length(&p1, 32, &tol()).unwrap();
        assert!((r1.value - linear_len).abs() < 1e-9);
        // Endpoints exact.
        assert_eq!(p.at(0.0, &tol()).unwrap().values(), g0.values());
        assert_eq!(p.at(1.0, &tol()).unwrap().values(), g1.values());
    }

    #[test]
    fn three_piece_middle_leg_scales_like_s_to_the_n_quarter() {
        let grid = unit2(8);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let g1 = MetricField::constant(grid.clone(), SymMat::diag(&[1.0, 0.25]), FieldKind::Metric)
            .unwrap();
        let full = RegionMask::full(grid.clone());
        let mid_len = |s: f64| {
            let p = three_piece_path(&g0, &g1, &full, s, 1).unwrap();
            let pieces = p.three_piece_components().unwrap();
            path_length(&pieces[1], 32, &tol()).unwrap().value
        };
        let (a, b) = (mid_len(0.1), mid_len(0.001));
        // n = 2: middle length ∝ s^{1/2}, so the ratio across two decades
        // of s is 10.
        assert!((a / b - 10.0).abs() < 0.1, "ratio {}", a / b);
    }

    #[test]
    fn three_piece_tracks_collapse_bound_on_torus_pair() {
        // Outer legs stay under C(2)(√Vol(g0) + √Vol(g1)) for every s, and
        // the middle leg vanishes as s → 0 at the √s rate.
        let k = 16.0;
        let grid = unit2(16);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let g1 = MetricField::constant(grid.clone(), SymMat::diag(&[1.0, 1.0 / k]), FieldKind::Metric)
            .unwrap();
        let full = RegionMask::full(grid.clone());
        let c2 = collapse_constant(2).unwrap();
        let outer_bound = c2 * (1.0 + k.powf(-0.25));
        let mut mids = Vec::new();
        for s in [0.1, 0.01, 0.001] {
            let p = three_piece_path(&g0, &g1, &full, s, 1).unwrap();
            let pieces = p.three_piece_components().unwrap();
            let outer = path_length(&pieces[0], 64, &tol()).unwrap().value
                + path_length(&pieces[2], 64, &tol()).unwrap().value;
            assert!(outer <= outer_bound * 1.01, "outer {outer} vs {outer_bound}");
            mids.push(path_length(&pieces[1], 64, &tol()).unwrap().value);
        }
        assert!((mids[0] / mids[1] - 10.0_f64.sqrt()).abs() < 0.2);
        assert!(mids[2] < 0.11 * mids[0], "sqrt(s) decay: {mids:?}");
        // Whole-path length stays under the collapse bound for every s
        // (at k = 16 the tuner would sit near s = 1, i.e. the linear path).
        let total = path_length(
            &three_piece_path(&g0, &g1, &full, 0.001, 1).unwrap(),
            64,
            &tol(),
        )
        .unwrap()
        .value;
        assert!(total <= outer_bound * 1.05, "{total} vs bound {outer_bound}");
    }

    #[test]
    fn collapse_constant_values() {
        assert!((collapse_constant(4).unwrap() - 2.0).abs() < 1e-15);
        assert!((collapse_constant(2).unwrap() - 2.0 * (2.0_f64).sqrt()).abs() < 1e-15);
        assert!((collapse_constant(1).unwrap() - 4.0).abs() < 1e-15);
        assert!(collapse_constant(0).is_err());
        // Cross-check the n ≤ 3 factor by quadrature of √n (1-t)^{n/4-1}
        // under the regularizing substitution 1-t = y⁴ᐟⁿ · … : with
        // x = (1-t)^{n/4} the integrand is the constant 4/n.
        for n in [1usize, 2, 3] {
            let nf = n as f64;
            let steps = 200_000;
            let mut acc = 0.0;
            for i in 0..steps {
                let y = (i as f64 + 0.5) / steps as f64;
                acc += 4.0 * y.powf(nf - 1.0) / steps as f64;
            }
            let expect = collapse_constant(n).unwrap() / nf.sqrt();
            assert!((acc - expect).abs() < 1e-4, "n={n}");
        }
    }

    #[test]
    fn boundary_shift_lengths_decrease_with_delta() {
        let grid = unit2(8);
        let g0 = MetricField::constant(grid.clone(), SymMat::diag(&[1.0, 0.0]), FieldKind::Semimetric)
            .unwrap();
        let mut prev = f64::INFINITY;
        for delta in [0.1, 0.01, 0.001] {
            let p = boundary_shift_path(&g0, delta, &tol()).unwrap();
            let r = path_length(&p, 64, &tol()).unwrap();
            assert!(r.value.is_finite());
            assert!(r.value < prev);
            prev = r.value;
        }
    }

    #[test]
    fn boundary_shift_from_zero_field_matches_collapse_integral() {
        // δI → 0 on the unit torus: L = C(n)·δ^{n/4} exactly (constant
        // fields make the collapse-leg bound an equality).
        let grid = unit2(8);
        let zero =
            MetricField::constant(grid.clone(), SymMat::zero(2), FieldKind::Semimetric).unwrap();
        let delta = 0.3;
        let p = boundary_shift_path(&zero, delta, &tol()).unwrap();
        let r = path_length(&p, 128, &tol()).unwrap();
        let expect = collapse_constant(2).unwrap() * delta.powf(0.5);
        assert!((r.value - expect).abs() < 1e-4 * expect, "{} vs {expect}", r.value);
    }

    #[test]
    fn ordinary_metric_boundary_shift_is_plain_linear() {
        let grid = unit2(8);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let p = boundary_shift_path(&g0, 0.5, &tol()).unwrap();
        let direct = MetricPath::linear(
            MetricField::constant(grid, SymMat::identity(2).scale(1.5), FieldKind::Metric).unwrap(),
            g0,
        )
        .unwrap();
        let a = path_length(&p, 32, &tol()).unwrap().value;
        let b = path_length(&direct, 32, &tol()).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn cutoff_profile_sandwich() {
        let grid = unit2(16);
        let region = RegionMask::from_fn(grid.clone(), |x| x[0] < 0.5);
        let s = 0.2;
        let w = 2;
        let profile = CutoffProfile::build(&region, s, w).unwrap();
        let depth = chebyshev_distance_transform(&grid, region.members(), false);
        for i in 0..grid.len() {
            let f = profile.values.value(i);
            assert!(f >= s - 1e-15 && f <= 1.0 + 1e-15);
            if region.contains(i) && depth[i] > w as u32 + 1 {
                assert_eq!(f, s, "eroded core keeps f = s");
            }
            if !region.contains(i) {
                assert_eq!(f, 1.0, "outside the region f = 1");
            }
        }
    }

    #[test]
    fn sampled_path_roundtrip_and_length() {
        let grid = unit2(4);
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let g1 = MetricField::constant(grid.clone(), SymMat::identity(2).scale(2.0), FieldKind::Metric)
            .unwrap();
        let linear = MetricPath::linear(g0.clone(), g1.clone()).unwrap();
        let samples: Vec<(f64, MetricField)> = (0..=8)
            .map(|i| {
                let t = i as f64 / 8.0;
                (t, linear.at(t, &tol()).unwrap())
            })
            .collect();
        let sampled = MetricPath::sampled(samples).unwrap();
        let ls = path_length(&sampled, 64, &tol()).unwrap().value;
        let ll = path_length(&linear, 64, &tol()).unwrap().value;
        assert!((ls - ll).abs() < 1e-6 * ll);
        // JSON replay.
        let file = sampled.to_file();
        let json = serde_json::to_string(&file).unwrap();
        let back: PathFile = serde_json::from_str(&json).unwrap();
        let restored = MetricPath::from_file(&back, &tol()).unwrap();
        let lr = path_length(&restored, 64, &tol()).unwrap().value;
        assert_eq!(ls, lr);
    }
}
