//! Dense linear algebra for symmetric matrices of dimension 1..=3.
//!
//! Everything here is sized for the pointwise cone work: closed forms where
//! they are simple (n ≤ 2), cyclic Jacobi for n = 3. No allocation.

use crate::spd::SymMat;

/// Small general (not necessarily symmetric) matrix, row-major.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Mat {
    pub dim: usize,
    pub a: [f64; 9],
}

impl Mat {
    pub fn zero(dim: usize) -> Self {
        Mat { dim, a: [0.0; 9] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Mat::zero(dim);
        for i in 0..dim {
            m.a[i * 3 + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * 3 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * 3 + j] = v;
    }

    pub fn from_sym(s: &SymMat) -> Self {
        let n = s.dim();
        let mut m = Mat::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, s.get(i, j));
            }
        }
        m
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        let n = self.dim;
        let mut out = Mat::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Symmetric part, as a SymMat. Used to clean up products that are
    /// symmetric in exact arithmetic.
    pub fn symmetrized(&self) -> SymMat {
        let n = self.dim;
        let mut s = SymMat::zero(n);
        for i in 0..n {
            for j in i..n {
                s.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
            }
        }
        s
    }
}

/// Determinant by cofactor expansion (exact formula at these sizes).
pub(crate) fn det_sym(m: &SymMat) -> f64 {
    match m.dim() {
        1 => m.get(0, 0),
        2 => m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(0, 1),
        3 => {
            let (a, b, c) = (m.get(0, 0), m.get(0, 1), m.get(0, 2));
            let (d, e) = (m.get(1, 1), m.get(1, 2));
            let f = m.get(2, 2);
            a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)
        }
        _ => unreachable!("dim limited to 1..=3"),
    }
}

/// Inverse of a symmetric matrix via the adjugate.
pub(crate) fn inv_sym(m: &SymMat) -> Option<SymMat> {
    let det = det_sym(m);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let n = m.dim();
    let mut out = SymMat::zero(n);
    match n {
        1 => out.set(0, 0, 1.0 / det),
        2 => {
            out.set(0, 0, m.get(1, 1) / det);
            out.set(0, 1, -m.get(0, 1) / det);
            out.set(1, 1, m.get(0, 0) / det);
        }
        3 => {
            let (a, b, c) = (m.get(0, 0), m.get(0, 1), m.get(0, 2));
            let (d, e) = (m.get(1, 1), m.get(1, 2));
            let f = m.get(2, 2);
            out.set(0, 0, (d * f - e * e) / det);
            out.set(0, 1, (c * e - b * f) / det);
            out.set(0, 2, (b * e - c * d) / det);
            out.set(1, 1, (a * f - c * c) / det);
            out.set(1, 2, (b * c - a * e) / det);
            out.set(2, 2, (a * d - b * b) / det);
        }
        _ => unreachable!(),
    }
    Some(out)
}

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues plus an
/// orthogonal matrix of column eigenvectors.
pub(crate) fn sym_eigen(m: &SymMat) -> ([f64; 3], Mat) {
    let n = m.dim();
    match n {
        1 => {
            let mut vals = [0.0; 3];
            vals[0] = m.get(0, 0);
            (vals, Mat::identity(1))
        }
        2 => {
            let (a, b, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 1));
            let tr = a + d;
            let gap = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
            let l0 = 0.5 * (tr - gap);
            let l1 = 0.5 * (tr + gap);
            let mut v = Mat::identity(2);
            if b.abs() > 0.0 {
                // Eigenvector for l0: (b, l0 - a), normalized.
                let (mut x, mut y) = (b, l0 - a);
                let norm = (x * x + y * y).sqrt();
                if norm > 0.0 {
                    x /= norm;
                    y /= norm;
                    v.set(0, 0, x);
                    v.set(1, 0, y);
                    v.set(0, 1, -y);
                    v.set(1, 1, x);
                }
            } else if a > d {
                // Already diagonal but out of order: swap basis vectors.
                v.set(0, 0, 0.0);
                v.set(1, 0, 1.0);
                v.set(0, 1, 1.0);
                v.set(1, 1, 0.0);
            }
            let mut vals = [0.0; 3];
            vals[0] = l0;
            vals[1] = l1;
            (vals, v)
        }
        3 => jacobi3(m),
        _ => unreachable!(),
    }
}

/// Cyclic Jacobi for 3×3 symmetric matrices. Converges to machine precision
/// in a handful of sweeps.
fn jacobi3(m: &SymMat) -> ([f64; 3], Mat) {
    let mut a = Mat::from_sym(m);
    let mut v = Mat::identity(3);
    let scale = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| a.get(i, j).abs())
        .fold(0.0_f64, f64::max)
        .max(1.0);
    for _sweep in 0..30 {
        let off = a.get(0, 1).abs() + a.get(0, 2).abs() + a.get(1, 2).abs();
        if off <= 3.0 * f64::EPSILON * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a.get(p, q);
            if apq.abs() <= f64::EPSILON * scale * 1e-2 {
                continue;
            }
            let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // Rotate rows/columns p and q.
            for k in 0..3 {
                let akp = a.get(k, p);
                let akq = a.get(k, q);
                a.set(k, p, c * akp - s * akq);
                a.set(k, q, s * akp + c * akq);
            }
            for k in 0..3 {
                let apk = a.get(p, k);
                let aqk = a.get(q, k);
                a.set(p, k, c * apk - s * aqk);
                a.set(q, k, s * apk + c * aqk);
            }
            for k in 0..3 {
                let vkp = v.get(k, p);
                let vkq = v.get(k, q);
                v.set(k, p, c * vkp - s * vkq);
                v.set(k, q, s * vkp + c * vkq);
            }
        }
    }
    let mut vals = [a.get(0, 0), a.get(1, 1), a.get(2, 2)];
    // Sort ascending, permuting eigenvector columns along.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals = [vals[order[0]], vals[order[1]], vals[order[2]]];
    let mut sorted_v = Mat::zero(3);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..3 {
            sorted_v.set(k, new_col, v.get(k, old_col));
        }
    }
    vals = sorted_vals;
    (vals, sorted_v)
}

/// Apply a scalar function to a symmetric matrix through its spectrum.
pub(crate) fn sym_matfun(m: &SymMat, f: impl Fn(f64) -> f64) -> SymMat {
    let n = m.dim();
    let (vals, v) = sym_eigen(m);
    let mut out = SymMat::zero(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += v.get(i, k) * f(vals[k]) * v.get(j, k);
            }
            out.set(i, j, acc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::SymMat;

    fn sym3(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> SymMat {
        SymMat::from_upper(3, &[a, b, c, d, e, f]).unwrap()
    }

    #[test]
    fn eigen_diagonal_sorted() {
        let m = sym3(3.0, 0.0, 0.0, 1.0, 0.0, 2.0);
        let (vals, _) = sym_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = sym3(2.0, 0.3, -0.1, 1.5, 0.4, 3.0);
        let (vals, v) = sym_eigen(&m);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += v.get(i, k) * vals[k] * v.get(j, k);
                }
                assert!((acc - m.get(i, j)).abs() < 1e-12, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn det_matches_eigenvalue_product() {
        let m = sym3(2.0, 0.3, -0.1, 1.5, 0.4, 3.0);
        let (vals, _) = sym_eigen(&m);
        let prod = vals[0] * vals[1] * vals[2];
        assert!((prod - det_sym(&m)).abs() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = sym3(2.0, 0.3, -0.1, 1.5, 0.4, 3.0);
        let inv = inv_sym(&m).unwrap();
        let prod = Mat::from_sym(&m).mul(&Mat::from_sym(&inv));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn matfun_exp_log_inverse() {
        let m = sym3(1.2, 0.2, 0.1, 0.9, -0.3, 1.7);
        let e = sym_matfun(&m, f64::exp);
        let back = sym_matfun(&e, f64::ln);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - m.get(i, j)).abs() < 1e-10);
            }
        }
    }
}
