//! Grid-discretized (semi)metric fields on flat-torus charts.
//!
//! Fields are point samples on a uniform periodic grid; integrals use the
//! midpoint rule (each node is the midpoint of its cell), which is
//! spectrally accurate for smooth periodic integrands. The fixed reference
//! metric is the Euclidean field, so the reference volume element is just
//! the cell volume.

use crate::spd::{
    eigen_summary, theta_distance, theta_lower_bound, PsdPoint, SpdPoint, SymMat, ThetaOpts,
};
use crate::{Error, Result, Tolerances};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Uniform periodic grid on a flat-torus chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub period: Vec<f64>,
}

impl TorusGrid {
    pub fn new(dim: usize, shape: &[usize], period: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dim {dim} not in 1..=3")));
        }
        if shape.len() != dim || period.len() != dim {
            return Err(Error::InvalidParameter("shape/period length must equal dim".into()));
        }
        if shape.iter().any(|&s| s < 4) {
            return Err(Error::InvalidParameter("shape entries must be >= 4".into()));
        }
        if period.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("periods must be positive".into()));
        }
        Ok(TorusGrid { dim, shape: shape.to_vec(), period: period.to_vec() })
    }

    /// Unit torus `[0,1)^dim` with equal node counts per axis.
    pub fn unit(dim: usize, nodes_per_axis: usize) -> Result<Self> {
        TorusGrid::new(dim, &vec![nodes_per_axis; dim], &vec![1.0; dim])
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.period
            .iter()
            .zip(self.shape.iter())
            .map(|(p, &s)| p / s as f64)
            .product()
    }

    /// Node coordinates, row-major flat index.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let idx = self.unflatten(flat);
        idx.iter()
            .enumerate()
            .map(|(ax, &i)| i as f64 * self.period[ax] / self.shape[ax] as f64)
            .collect()
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim];
        for ax in (0..self.dim).rev() {
            idx[ax] = flat % self.shape[ax];
            flat /= self.shape[ax];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let mut flat = 0usize;
        for ax in 0..self.dim {
            flat = flat * self.shape[ax] + (idx[ax] % self.shape[ax]);
        }
        flat
    }

    /// Wrapping per-axis grid distance (in cells) between node indices.
    fn axis_dist(&self, ax: usize, a: usize, b: usize) -> usize {
        let s = self.shape[ax];
        let d = a.abs_diff(b) % s;
        d.min(s - d)
    }

    /// Chebyshev grid distance between flat node indices, with wrapping.
    pub fn chebyshev(&self, a: usize, b: usize) -> usize {
        let ia = self.unflatten(a);
        let ib = self.unflatten(b);
        (0..self.dim).map(|ax| self.axis_dist(ax, ia[ax], ib[ax])).max().unwrap_or(0)
    }
}

/// Symmetric tensor field with no sign constraint: tangent vectors to the
/// space of metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: TorusGrid,
    values: Vec<SymMat>,
}

impl TensorField {
    pub fn new(grid: TorusGrid, values: Vec<SymMat>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|m| m.dim() != grid.dim || !m.is_finite()) {
            return Err(Error::InvalidParameter("tensor values must be finite and match dim".into()));
        }
        Ok(TensorField { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> SymMat) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        TensorField::new(grid, values)
    }

    pub fn constant(grid: TorusGrid, value: SymMat) -> Result<Self> {
        let values = vec![value; grid.len()];
        TensorField::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[SymMat] {
        &self.values
    }

    pub fn value(&self, node: usize) -> &SymMat {
        &self.values[node]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.max_abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Metric,
    Semimetric,
}

/// Grid-sampled (semi)metric field.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    tensor: TensorField,
    kind: FieldKind,
}

impl MetricField {
    /// Validating constructor: `Metric` requires `λ_min > eps_pd` at every
    /// node, `Semimetric` requires `λ_min ≥ -eps_psd`.
    pub fn new(grid: TorusGrid, values: Vec<SymMat>, kind: FieldKind) -> Result<Self> {
        Self::with_tolerances(grid, values, kind, &Tolerances::default())
    }

    pub fn with_tolerances(
        grid: TorusGrid,
        values: Vec<SymMat>,
        kind: FieldKind,
        tol: &Tolerances,
    ) -> Result<Self> {
        let tensor = TensorField::new(grid, values)?;
        for (node, v) in tensor.values.iter().enumerate() {
            let s = eigen_summary(v);
            match kind {
                FieldKind::Metric => {
                    if !(s.lambda_min > tol.eps_pd) {
                        return Err(Error::NotPositiveDefinite(format!(
                            "node {node}: lambda_min = {:e}",
                            s.lambda_min
                        )));
                    }
                }
                FieldKind::Semimetric => {
                    if s.lambda_min < -tol.eps_psd {
                        return Err(Error::NotPositiveSemidefinite(format!(
                            "node {node}: lambda_min = {:e}",
                            s.lambda_min
                        )));
                    }
                }
            }
        }
        Ok(MetricField { tensor, kind })
    }

    /// Classify the kind from the data: `Metric` when strictly positive
    /// definite everywhere, `Semimetric` otherwise. Used by path evaluation
    /// where interior fields may brush the boundary.
    pub fn classified(grid: TorusGrid, values: Vec<SymMat>, tol: &Tolerances) -> Result<Self> {
        let tensor = TensorField::new(grid, values)?;
        let metric = tensor
            .values
            .iter()
            .all(|v| eigen_summary(v).lambda_min > tol.eps_pd);
        let kind = if metric { FieldKind::Metric } else { FieldKind::Semimetric };
        for (node, v) in tensor.values.iter().enumerate() {
            if eigen_summary(v).lambda_min < -tol.eps_psd {
                return Err(Error::NotPositiveSemidefinite(format!("node {node}")));
            }
        }
        Ok(MetricField { tensor, kind })
    }

    pub fn from_fn(grid: TorusGrid, kind: FieldKind, f: impl Fn(&[f64]) -> SymMat) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        MetricField::new(grid, values, kind)
    }

    pub fn constant(grid: TorusGrid, value: SymMat, kind: FieldKind) -> Result<Self> {
        let values = vec![value; grid.len()];
        MetricField::new(grid, values, kind)
    }

    pub fn euclidean(grid: TorusGrid) -> Result<Self> {
        let id = SymMat::identity(grid.dim);
        MetricField::constant(grid, id, FieldKind::Metric)
    }

    pub fn grid(&self) -> &TorusGrid {
        self.tensor.grid()
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[SymMat] {
        self.tensor.values()
    }

    pub fn value(&self, node: usize) -> &SymMat {
        self.tensor.value(node)
    }

    pub fn tensor(&self) -> &TensorField {
        &self.tensor
    }

    pub fn same_grid(&self, other: &MetricField) -> Result<()> {
        if self.grid() != other.grid() {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Pointwise difference as a tangent field.
    pub fn diff(&self, other: &MetricField) -> Result<TensorField> {
        self.same_grid(other)?;
        let values = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| b.sub(a))
            .collect();
        TensorField::new(self.grid().clone(), values)
    }

    /// Support of the difference: nodes where the fields disagree beyond
    /// `eps_lin` relative to entry scale.
    pub fn carrier(&self, other: &MetricField, tol: &Tolerances) -> Result<RegionMask> {
        self.same_grid(other)?;
        let member = self
            .values()
            .iter()
            .zip(other.values().iter())
            .map(|(a, b)| a.sub(b).max_abs() > tol.eps_lin * (1.0 + a.max_abs().max(b.max_abs())))
            .collect();
        RegionMask::new(self.grid().clone(), member)
    }
}

/// Scalar field on the same grids (conformal factors, cutoff profiles).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch("scalar field length".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite scalar value".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        ScalarField::new(grid, values)
    }

    pub fn constant(grid: TorusGrid, v: f64) -> Result<Self> {
        let values = vec![v; grid.len()];
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    /// L² norm with respect to a (semi)metric field's volume element.
    pub fn l2_norm(&self, g: &MetricField) -> Result<f64> {
        if self.grid != *g.grid() {
            return Err(Error::ShapeMismatch("scalar field vs metric grid".into()));
        }
        let cell = self.grid.cell_volume();
        let mut acc = 0.0;
        for (v, m) in self.values.iter().zip(g.values().iter()) {
            acc += v * v * eigen_summary(m).sqrt_det * cell;
        }
        Ok(acc.sqrt())
    }
}

/// Boolean node mask.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    grid: TorusGrid,
    member: Vec<bool>,
}

impl RegionMask {
    pub fn new(grid: TorusGrid, member: Vec<bool>) -> Result<Self> {
        if member.len() != grid.len() {
            return Err(Error::ShapeMismatch("mask length".into()));
        }
        Ok(RegionMask { grid, member })
    }

    pub fn full(grid: TorusGrid) -> Self {
        let member = vec![true; grid.len()];
        RegionMask { grid, member }
    }

    pub fn empty(grid: TorusGrid) -> Self {
        let member = vec![false; grid.len()];
        RegionMask { grid, member }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> bool) -> Self {
        let member = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        RegionMask { grid, member }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn contains(&self, node: usize) -> bool {
        self.member[node]
    }

    pub fn members(&self) -> &[bool] {
        &self.member
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&b| b).count()
    }

    pub fn union(&self, other: &RegionMask) -> RegionMask {
        let member = self.member.iter().zip(other.member.iter()).map(|(a, b)| a | b).collect();
        RegionMask { grid: self.grid.clone(), member }
    }

    pub fn complement(&self) -> RegionMask {
        let member = self.member.iter().map(|b| !b).collect();
        RegionMask { grid: self.grid.clone(), member }
    }

    /// Volume of the mask under the Euclidean reference: node count times
    /// cell volume.
    pub fn reference_volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }
}

/// L² scalar product `(h,k)_g = ∫ tr(g⁻¹ h g⁻¹ k) dμ_g` by midpoint
/// quadrature.
pub fn l2_inner(g: &MetricField, h: &TensorField, k: &TensorField) -> Result<f64> {
    if g.grid() != h.grid() || g.grid() != k.grid() {
        return Err(Error::ShapeMismatch("l2_inner fields on different grids".into()));
    }
    if g.kind() != FieldKind::Metric {
        return Err(Error::NotPositiveDefinite("l2_inner requires kind=metric".into()));
    }
    let cell = g.grid().cell_volume();
    let tol = Tolerances::default();
    let mut acc = 0.0;
    for ((gm, hv), kv) in g.values().iter().zip(h.values().iter()).zip(k.values().iter()) {
        let p = SpdPoint::with_tolerances(*gm, &tol)?;
        acc += crate::spd::inner(&p, hv, kv)? * p.summary().sqrt_det * cell;
    }
    Ok(acc)
}

/// L² norm `‖h‖_g`.
pub fn l2_norm(g: &MetricField, h: &TensorField) -> Result<f64> {
    Ok(l2_inner(g, h, h)?.max(0.0).sqrt())
}

/// Volume of a masked region: `Σ √det g(x) · cell_volume` over member nodes.
pub fn volume(g: &MetricField, region: &RegionMask) -> Result<f64> {
    if g.grid() != region.grid() {
        return Err(Error::ShapeMismatch("volume mask on different grid".into()));
    }
    let cell = g.grid().cell_volume();
    let mut acc = 0.0;
    for (v, &inside) in g.values().iter().zip(region.members().iter()) {
        if inside {
            acc += eigen_summary(v).sqrt_det * cell;
        }
    }
    Ok(acc)
}

/// Θ pseudometric estimate over a region, with certification metadata.
#[derive(Debug, Clone, Copy)]
pub struct ThetaIntegral {
    /// Quadrature of the per-node θ estimates (upper-flavored).
    pub value: f64,
    /// Quadrature of the analytic per-node lower bounds; sound minorant of
    /// the true Θ.
    pub lower: f64,
    /// False when any node's interior-path optimizer failed to converge.
    pub certified: bool,
}

/// `Θ_Y(g0,g1) = ∫_Y θ_x(g0(x), g1(x)) dμ_ref` against the Euclidean
/// reference.
pub fn theta_pseudometric(
    g0: &MetricField,
    g1: &MetricField,
    region: &RegionMask,
    opts: &ThetaOpts,
) -> Result<ThetaIntegral> {
    let reference = MetricField::euclidean(g0.grid().clone())?;
    theta_pseudometric_with_ref(g0, g1, region, &reference, opts)
}

/// Θ with an explicit reference field. The value is reference-independent
/// up to quadrature and optimizer tolerance; exposed for that test.
pub fn theta_pseudometric_with_ref(
    g0: &MetricField,
    g1: &MetricField,
    region: &RegionMask,
    reference: &MetricField,
    opts: &ThetaOpts,
) -> Result<ThetaIntegral> {
    g0.same_grid(g1)?;
    g0.same_grid(reference)?;
    if g0.grid() != region.grid() {
        return Err(Error::ShapeMismatch("theta mask on different grid".into()));
    }
    let tol = &opts.tolerances;
    let cell = g0.grid().cell_volume();
    use rayon::prelude::*;
    let nodes: Vec<usize> = (0..g0.grid().len()).filter(|&i| region.contains(i)).collect();
    let per_node: Vec<(f64, f64, bool)> = nodes
        .par_iter()
        .map(|&i| {
            let gref = SpdPoint::with_tolerances(*reference.value(i), tol)
                .expect("reference field is a metric");
            let a = PsdPoint::with_tolerances(*g0.value(i), tol).expect("validated field");
            let b = PsdPoint::with_tolerances(*g1.value(i), tol).expect("validated field");
            let est = theta_distance(&gref, &a, &b, opts);
            let weight = gref.summary().sqrt_det * cell;
            (est.value * weight, est.lower * weight, est.certified)
        })
        .collect();
    let mut out = ThetaIntegral { value: 0.0, lower: 0.0, certified: true };
    for (v, l, c) in per_node {
        out.value += v;
        out.lower += l;
        out.certified &= c;
    }
    Ok(out)
}

/// Sound minorant of Θ_Y from the determinant-Lipschitz bound alone; cheap
/// (no path optimization) and what the distance lower bounds consume.
pub fn theta_lower_integral(
    g0: &MetricField,
    g1: &MetricField,
    region: &RegionMask,
    tol: &Tolerances,
) -> Result<f64> {
    g0.same_grid(g1)?;
    if g0.grid() != region.grid() {
        return Err(Error::ShapeMismatch("theta mask on different grid".into()));
    }
    let gref = SpdPoint::with_tolerances(SymMat::identity(g0.grid().dim), tol)?;
    let cell = g0.grid().cell_volume();
    let mut acc = 0.0;
    for i in 0..g0.grid().len() {
        if !region.contains(i) {
            continue;
        }
        let a = PsdPoint::with_tolerances(*g0.value(i), tol)?;
        let b = PsdPoint::with_tolerances(*g1.value(i), tol)?;
        acc += theta_lower_bound(&gref, &a, &b) * cell;
    }
    Ok(acc)
}

/// Amenability audit of a family of fields against the Euclidean reference.
#[derive(Debug, Clone, Serialize)]
pub struct AmenabilityReport {
    pub lambda_min_inf: f64,
    pub coeff_sup: f64,
    pub det_inf: f64,
    pub det_sup: f64,
    /// Present when the family is amenable: (delta, C).
    pub is_amenable_with: Option<(f64, f64)>,
    /// Always present: the quasi-amenability constant C.
    pub is_quasi_amenable_with: f64,
}

/// Infima/suprema of eigenvalue and coefficient bounds over all nodes of
/// all fields; certifies amenability constants when the minimal eigenvalue
/// stays positive.
pub fn amenability_audit(fields: &[MetricField]) -> Result<AmenabilityReport> {
    let first = fields.first().ok_or(Error::EmptySequence)?;
    let mut lambda_min_inf = f64::INFINITY;
    let mut coeff_sup: f64 = 0.0;
    let mut det_inf = f64::INFINITY;
    let mut det_sup: f64 = 0.0;
    for f in fields {
        first.same_grid(f)?;
        for v in f.values() {
            let s = eigen_summary(v);
            lambda_min_inf = lambda_min_inf.min(s.lambda_min);
            coeff_sup = coeff_sup.max(v.max_abs());
            det_inf = det_inf.min(s.det);
            det_sup = det_sup.max(s.det);
        }
    }
    let is_amenable_with =
        if lambda_min_inf > 0.0 { Some((lambda_min_inf, coeff_sup)) } else { None };
    Ok(AmenabilityReport {
        lambda_min_inf,
        coeff_sup,
        det_inf,
        det_sup,
        is_amenable_with,
        is_quasi_amenable_with: coeff_sup,
    })
}

/// Norm-equivalence constant for an audited amenable family.
///
/// Per-point the ratio `tr_g̃(h²)·√det G̃ / tr(h²)` is sandwiched between
/// `√det_inf / λ_max²` and `√det_sup / δ²`, where the eigenvalue ceiling
/// comes from `λ_max ≤ min(n·C, det_sup/δ^{n-1})`. The returned K covers
/// both the pairwise bound inside the family and the bound against the
/// Euclidean reference.
pub fn norm_equivalence_constant(report: &AmenabilityReport, dim: usize) -> Result<f64> {
    let (delta, c) = report.is_amenable_with.ok_or(Error::NotAmenable)?;
    let n = dim as f64;
    let lambda_max = (n * c).min(report.det_sup / delta.powi(dim as i32 - 1));
    let r_lo = report.det_inf.max(0.0).sqrt() / (lambda_max * lambda_max);
    let r_hi = report.det_sup.sqrt() / (delta * delta);
    let k2 = r_hi.max(1.0) / r_lo.min(1.0);
    Ok(k2.sqrt())
}

/// Deflated-set surrogate of a sequence: nodes where the determinant dips
/// below `delta_num` at some term. The universal quantifier of the exact
/// definition cannot be evaluated on finite data; `delta_num` stands in
/// for it and every report states the value used.
pub fn deflated_set(seq: &[MetricField], delta_num: f64) -> Result<RegionMask> {
    let first = seq.first().ok_or(Error::EmptySequence)?;
    if !(delta_num > 0.0) {
        return Err(Error::InvalidParameter("delta_num must be positive".into()));
    }
    for f in seq {
        first.same_grid(f)?;
    }
    let member = (0..first.grid().len())
        .map(|i| {
            seq.iter()
                .map(|f| eigen_summary(f.value(i)).det)
                .fold(f64::INFINITY, f64::min)
                < delta_num
        })
        .collect();
    RegionMask::new(first.grid().clone(), member)
}

// ---------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------

/// On-disk form of a metric field. Floats survive the round trip exactly:
/// serde_json emits shortest-representation decimals.
#[derive(Debug, Serialize, Deserialize)]
pub struct MetricFieldFile {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub period: Vec<f64>,
    pub kind: FieldKind,
    /// Row-major over the grid; each entry is the upper-triangular list.
    pub values: Vec<Vec<f64>>,
}

impl MetricField {
    pub fn to_file(&self) -> MetricFieldFile {
        MetricFieldFile {
            dim: self.grid().dim,
            shape: self.grid().shape.clone(),
            period: self.grid().period.clone(),
            kind: self.kind,
            values: self.values().iter().map(|m| m.upper().to_vec()).collect(),
        }
    }

    pub fn from_file(file: &MetricFieldFile) -> Result<Self> {
        Self::from_file_with(file, &Tolerances::default())
    }

    pub fn from_file_with(file: &MetricFieldFile, tol: &Tolerances) -> Result<Self> {
        let grid = TorusGrid::new(file.dim, &file.shape, &file.period)?;
        let values = file
            .values
            .iter()
            .map(|v| SymMat::from_upper(file.dim, v))
            .collect::<Result<Vec<_>>>()?;
        MetricField::with_tolerances(grid, values, file.kind, tol)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_file())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, &Tolerances::default())
    }

    pub fn load_with(path: &Path, tol: &Tolerances) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: MetricFieldFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            offset: byte_offset(&text, e.line(), e.column()),
            what: e.to_string(),
        })?;
        Self::from_file_with(&file, tol)
    }
}

/// Byte offset of a (line, column) position in a text; serde_json reports
/// positions 1-based.
pub(crate) fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0usize;
    for (i, l) in text.split('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1);
        }
        offset += l.len() + 1;
    }
    offset
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::sample_sym;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit2(nodes: usize) -> TorusGrid {
        TorusGrid::unit(2, nodes).unwrap()
    }

    #[test]
    fn grid_invariants() {
        assert!(TorusGrid::new(2, &[3, 8], &[1.0, 1.0]).is_err());
        let g = TorusGrid::new(2, &[8, 4], &[2.0, 1.0]).unwrap();
        assert_eq!(g.len(), 32);
        assert!((g.cell_volume() - 2.0 / 32.0).abs() < 1e-15);
        // Periodic indexing wraps exactly.
        assert_eq!(g.flatten(&[8, 4]), g.flatten(&[0, 0]));
        assert_eq!(g.chebyshev(g.flatten(&[0, 0]), g.flatten(&[7, 3])), 1);
    }

    #[test]
    fn l2_inner_constant_cases() {
        let g = MetricField::euclidean(unit2(8)).unwrap();
        let h = TensorField::constant(unit2(8), SymMat::identity(2)).unwrap();
        assert!((l2_inner(&g, &h, &h).unwrap() - 2.0).abs() < 1e-12);
        let hd = TensorField::constant(unit2(8), SymMat::diag(&[1.0, 0.0])).unwrap();
        assert!((l2_inner(&g, &hd, &hd).unwrap() - 1.0).abs() < 1e-12);
        let zero = TensorField::constant(unit2(8), SymMat::zero(2)).unwrap();
        assert_eq!(l2_inner(&g, &zero, &zero).unwrap(), 0.0);
    }

    #[test]
    fn l2_inner_refinement_matches_analytic() {
        // Smooth periodic integrand: spectral accuracy, so successive grid
        // refinements already agree with the analytic value; Richardson
        // extrapolation of the two finest levels is used as the oracle.
        // h = (s/√2)·I with s = 1 + ½ sin(2πx)cos(2πy):
        // ∫ tr(h²) = ∫ s² = 1 + ¼·(½·½) = 1.0625.
        let analytic = 1.0625;
        let mut results = Vec::new();
        for nodes in [8usize, 16, 32] {
            let grid = unit2(nodes);
            let g = MetricField::euclidean(grid.clone()).unwrap();
            let h = TensorField::from_fn(grid, |x| {
                let s = 1.0
                    + 0.5
                        * (2.0 * std::f64::consts::PI * x[0]).sin()
                        * (2.0 * std::f64::consts::PI * x[1]).cos();
                SymMat::identity(2).scale(s / (2.0_f64).sqrt())
            })
            .unwrap();
            results.push(l2_inner(&g, &h, &h).unwrap());
        }
        let extrapolated = results[2] + (results[2] - results[1]);
        assert!((extrapolated - analytic).abs() < 1e-8, "{extrapolated} vs {analytic}");
        assert!((results[2] - analytic).abs() < 1e-8);
    }

    #[test]
    fn volume_cases() {
        let g = MetricField::euclidean(unit2(8)).unwrap();
        let full = RegionMask::full(unit2(8));
        assert!((volume(&g, &full).unwrap() - 1.0).abs() < 1e-12);
        let k = 4.0;
        let gk = MetricField::constant(unit2(8), SymMat::diag(&[1.0, 1.0 / k]), FieldKind::Metric)
            .unwrap();
        assert!((volume(&gk, &full).unwrap() - 1.0 / k.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn volume_exponential_profile_against_analytic_integral() {
        // diag(e^{kt}, e^{-2kt}): analytic volume 2(1-e^{-k/2})/k. Node
        // sampling sees the wrap discontinuity, so the error is O(h) and
        // must shrink linearly under refinement.
        let k = 1.0;
        let analytic = 2.0 * (1.0 - (-k / 2.0_f64).exp()) / k;
        let mut errs = Vec::new();
        for nodes in [32usize, 64] {
            let grid = unit2(nodes);
            let g = MetricField::from_fn(grid.clone(), FieldKind::Metric, |x| {
                SymMat::diag(&[(k * x[0]).exp(), (-2.0 * k * x[0]).exp()])
            })
            .unwrap();
            let v = volume(&g, &RegionMask::full(grid)).unwrap();
            errs.push((v - analytic).abs());
        }
        assert!(errs[1] < 0.6 * errs[0], "O(h) refinement: {errs:?}");
        assert!(errs[1] < 5e-3);
    }

    #[test]
    fn volume_additive_on_disjoint_masks() {
        let grid = unit2(8);
        let g = MetricField::from_fn(grid.clone(), FieldKind::Metric, |x| {
            SymMat::diag(&[1.0 + x[0], 1.0 + x[1]])
        })
        .unwrap();
        let left = RegionMask::from_fn(grid.clone(), |x| x[0] < 0.5);
        let right = left.complement();
        let v = volume(&g, &RegionMask::full(grid)).unwrap();
        let split = volume(&g, &left).unwrap() + volume(&g, &right).unwrap();
        // Same quadrature terms on both sides; only summation order differs.
        assert!((v - split).abs() <= 1e-14 * v);
    }

    #[test]
    fn theta_pseudometric_cases() {
        let grid = unit2(8);
        let opts = ThetaOpts::default();
        let g = MetricField::euclidean(grid.clone()).unwrap();
        let same = theta_pseudometric(&g, &g, &RegionMask::full(grid.clone()), &opts).unwrap();
        assert_eq!(same.value, 0.0);
        let eps = 0.25;
        let ge = MetricField::constant(grid.clone(), SymMat::identity(2).scale(eps), FieldKind::Metric)
            .unwrap();
        let full = theta_pseudometric(&g, &ge, &RegionMask::full(grid.clone()), &opts).unwrap();
        let expect = (2.0_f64).sqrt() * (1.0 - eps);
        assert!((full.value - expect).abs() < 0.02 * expect, "{} vs {expect}", full.value);
        let none = theta_pseudometric(&g, &ge, &RegionMask::empty(grid), &opts).unwrap();
        assert_eq!(none.value, 0.0);
    }

    #[test]
    fn theta_monotone_and_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = unit2(4);
        let opts = ThetaOpts::default();
        let fields: Vec<MetricField> = (0..3)
            .map(|_| {
                let vals = (0..grid.len())
                    .map(|_| {
                        let m = sample_sym(2, &mut rng, 0.3);
                        SymMat::identity(2).add(&m)
                    })
                    .collect();
                MetricField::new(grid.clone(), vals, FieldKind::Metric).unwrap()
            })
            .collect();
        let sub = RegionMask::from_fn(grid.clone(), |x| x[0] < 0.5);
        let full = RegionMask::full(grid.clone());
        let t_sub = theta_pseudometric(&fields[0], &fields[1], &sub, &opts).unwrap().value;
        let t_full = theta_pseudometric(&fields[0], &fields[1], &full, &opts).unwrap().value;
        assert!(t_sub <= t_full + 1e-12);
        let ab = theta_pseudometric(&fields[0], &fields[1], &full, &opts).unwrap().value;
        let bc = theta_pseudometric(&fields[1], &fields[2], &full, &opts).unwrap().value;
        let ac = theta_pseudometric(&fields[0], &fields[2], &full, &opts).unwrap().value;
        // Triangle up to per-node optimizer tolerance.
        assert!(ac <= ab + bc + 0.02 * (ab + bc));
    }

    #[test]
    fn theta_reference_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let grid = unit2(4);
        let opts = ThetaOpts::default();
        let full = RegionMask::full(grid.clone());
        let ref_i = MetricField::euclidean(grid.clone()).unwrap();
        let ref_2i =
            MetricField::constant(grid.clone(), SymMat::identity(2).scale(2.0), FieldKind::Metric)
                .unwrap();
        for _ in 0..10 {
            let mk = |rng: &mut ChaCha8Rng| {
                let vals = (0..grid.len())
                    .map(|_| SymMat::identity(2).add(&sample_sym(2, rng, 0.3)))
                    .collect();
                MetricField::new(grid.clone(), vals, FieldKind::Metric).unwrap()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let t1 = theta_pseudometric_with_ref(&a, &b, &full, &ref_i, &opts).unwrap().value;
            let t2 = theta_pseudometric_with_ref(&a, &b, &full, &ref_2i, &opts).unwrap().value;
            assert!((t1 - t2).abs() <= 0.02 * t1.max(t2) + 1e-9, "{t1} vs {t2}");
        }
    }

    #[test]
    fn amenability_audit_cases() {
        let grid = unit2(4);
        let id = MetricField::euclidean(grid.clone()).unwrap();
        let report = amenability_audit(std::slice::from_ref(&id)).unwrap();
        assert_eq!(report.is_amenable_with, Some((1.0, 1.0)));
        let family: Vec<MetricField> = (1..=10)
            .map(|k| {
                MetricField::constant(
                    grid.clone(),
                    SymMat::diag(&[1.0, 1.0 / k as f64]),
                    FieldKind::Metric,
                )
                .unwrap()
            })
            .collect();
        let report = amenability_audit(&family).unwrap();
        let (delta, c) = report.is_amenable_with.unwrap();
        assert!((delta - 0.1).abs() < 1e-12);
        assert!((c - 1.0).abs() < 1e-12);
        assert!(report.det_inf >= delta.powi(2) - 1e-12);
    }

    #[test]
    fn audit_bounds_convex_combinations() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let grid = unit2(4);
        let mk = |rng: &mut ChaCha8Rng| {
            let vals = (0..grid.len())
                .map(|_| SymMat::identity(2).add(&sample_sym(2, rng, 0.4)))
                .collect();
            MetricField::new(grid.clone(), vals, FieldKind::Metric).unwrap()
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let report = amenability_audit(&[a.clone(), b.clone()]).unwrap();
        let (delta, c) = report.is_amenable_with.unwrap();
        for _ in 0..20 {
            let t: f64 = rng.gen_range(0.0..1.0);
            let vals: Vec<SymMat> = a
                .values()
                .iter()
                .zip(b.values().iter())
                .map(|(x, y)| x.scale(1.0 - t).add(&y.scale(t)))
                .collect();
            let combo = MetricField::new(grid.clone(), vals, FieldKind::Metric).unwrap();
            for v in combo.values() {
                let s = eigen_summary(v);
                assert!(s.lambda_min >= delta - 1e-12);
                assert!(v.max_abs() <= c + 1e-12);
            }
        }
    }

    #[test]
    fn norm_equivalence_certified_by_sampling() {
        let grid = unit2(4);
        let id = MetricField::euclidean(grid.clone()).unwrap();
        let report = amenability_audit(std::slice::from_ref(&id)).unwrap();
        let k = norm_equivalence_constant(&report, 2).unwrap();
        assert!((k - 1.0).abs() < 1e-12);

        let two =
            MetricField::constant(grid.clone(), SymMat::identity(2).scale(2.0), FieldKind::Metric)
                .unwrap();
        let family = [id.clone(), two.clone()];
        let report = amenability_audit(&family).unwrap();
        let k = norm_equivalence_constant(&report, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let h = TensorField::new(
                grid.clone(),
                (0..grid.len()).map(|_| sample_sym(2, &mut rng, 1.0)).collect(),
            )
            .unwrap();
            let n0 = l2_norm(&family[0], &h).unwrap();
            let n1 = l2_norm(&family[1], &h).unwrap();
            if n0 > 0.0 && n1 > 0.0 {
                let ratio = n1 / n0;
                assert!(ratio <= k + 1e-12 && ratio >= 1.0 / k - 1e-12);
            }
        }
        // Shrinking delta leaves K nondecreasing.
        let mut base = report.clone();
        let mut prev = k;
        for delta in [0.1, 0.01] {
            base.is_amenable_with = Some((delta, base.coeff_sup));
            let next = norm_equivalence_constant(&base, 2).unwrap();
            assert!(next >= prev - 1e-12);
            prev = next;
        }
    }

    #[test]
    fn deflated_set_cases() {
        let grid = unit2(8);
        let id = MetricField::euclidean(grid.clone()).unwrap();
        let constant: Vec<MetricField> = vec![id.clone(), id.clone(), id];
        assert_eq!(deflated_set(&constant, 1e-6).unwrap().count(), 0);
        let seq: Vec<MetricField> = (1..=10)
            .map(|k| {
                MetricField::constant(
                    grid.clone(),
                    SymMat::diag(&[1.0, 1.0 / k as f64]),
                    FieldKind::Metric,
                )
                .unwrap()
            })
            .collect();
        let mask = deflated_set(&seq, 0.2).unwrap();
        assert_eq!(mask.count(), grid.len());
    }

    #[test]
    fn file_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let grid = TorusGrid::new(2, &[4, 8], &[1.0, 2.5]).unwrap();
        let vals: Vec<SymMat> = (0..grid.len())
            .map(|_| SymMat::identity(2).add(&sample_sym(2, &mut rng, 0.3)))
            .collect();
        let field = MetricField::new(grid, vals, FieldKind::Metric).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.json");
        field.save(&path).unwrap();
        let back = MetricField::load(&path).unwrap();
        assert_eq!(field, back);
    }

    #[test]
    fn malformed_json_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"dim\": 2, \"shape\": [4,4], oops").unwrap();
        match MetricField::load(&path) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
