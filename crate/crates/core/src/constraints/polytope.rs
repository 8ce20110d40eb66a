//! Half-space polytopes intersected with the simplex: vertex enumeration,
//! affine rank, and linear maximisation over the vertex set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const VERTEX_FEAS_TOL: f64 = 1e-9;
const VERTEX_DEDUP_TOL: f64 = 1e-9;
const MAX_BASES: f64 = 2e6;

/// The half-space `normal · θ ≤ offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// `offset - normal·θ`; nonnegative inside.
    pub fn slack(&self, theta: &[f64]) -> f64 {
        self.offset - self.normal.iter().zip(theta).map(|(c, t)| c * t).sum::<f64>()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Vertices of `{θ ≥ 0, Σθ = 1, c_j·θ ≤ d_j}` by basis enumeration: every
/// choice of `m-1` tight inequalities plus the simplex equality.
pub(crate) fn enumerate_vertices(m: usize, halfspaces: &[Halfspace]) -> Result<Vec<Vec<f64>>> {
    // rows G θ ≤ h: nonnegativity first, then the user half-spaces
    let mut rows: Vec<(Vec<f64>, f64)> = (0..m)
        .map(|i| {
            let mut r = vec![0.0; m];
            r[i] = -1.0;
            (r, 0.0)
        })
        .collect();
    rows.extend(halfspaces.iter().map(|h| (h.normal.clone(), h.offset)));

    let k = m - 1;
    let bases = binomial(rows.len(), k);
    if bases > MAX_BASES {
        return Err(Error::InvalidParameter(format!(
            "polytope too large for vertex enumeration ({bases} candidate bases)"
        )));
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for (r, &row) in idx.iter().enumerate() {
            for c in 0..m {
                a[(r, c)] = rows[row].0[c];
            }
            b[r] = rows[row].1;
        }
        for c in 0..m {
            a[(k, c)] = 1.0;
        }
        b[k] = 1.0;
        let lu = a.lu();
        if let Some(x) = lu.solve(&b) {
            let ok = x.iter().all(|v| v.is_finite())
                && rows
                    .iter()
                    .all(|(g, h)| g.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= h + VERTEX_FEAS_TOL);
            if ok {
                let v: Vec<f64> = x.iter().map(|&t| t.max(0.0)).collect();
                let dup = vertices.iter().any(|w| w.iter().zip(&v).all(|(p, q)| (p - q).abs() <= VERTEX_DEDUP_TOL));
                if !dup {
                    vertices.push(v);
                }
            }
        }
        if k == 0 || !next_combination(&mut idx, rows.len()) {
            break;
        }
    }
    Ok(vertices)
}

/// Dimension of the affine hull of a point set.
pub(crate) fn affine_rank(points: &[Vec<f64>]) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let dim = points[0].len();
    let diffs = DMatrix::from_fn(points.len() - 1, dim, |r, c| points[r + 1][c] - points[0][c]);
    diffs.rank(1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_vertices_without_constraints() {
        let v = enumerate_vertices(3, &[]).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(affine_rank(&v), 2);
    }

    #[test]
    fn cut_simplex() {
        // θ_1 ≤ 0.5 on the triangle: a quadrilateral
        let v = enumerate_vertices(3, &[Halfspace::new(vec![1.0, 0.0, 0.0], 0.5)]).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|p| p[0] <= 0.5 + 1e-12));
        assert!(v.iter().any(|p| (p[0] - 0.5).abs() < 1e-12));
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut idx = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut idx, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
    }
}
