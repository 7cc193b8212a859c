//! Thin singular value decomposition by one-sided Jacobi rotations.
//!
//! Pairs of columns are rotated until every pair is numerically
//! orthogonal; the column norms are then the singular values. When the
//! matrix is wider than tall the transpose is decomposed instead so the
//! rotations always act on the shorter side.

/// Column-major dense matrix: `columns[j][i]` is row `i`, column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub columns: Vec<Vec<f64>>,
}

impl DenseMatrix {
    pub fn from_columns(rows: usize, columns: Vec<Vec<f64>>) -> Self {
        debug_assert!(columns.iter().all(|c| c.len() == rows));
        Self { rows, columns }
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let cols = self.cols();
        let columns = (0..self.rows)
            .map(|i| (0..cols).map(|j| self.columns[j][i]).collect())
            .collect();
        DenseMatrix {
            rows: cols,
            columns,
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.columns.iter().flatten().map(|x| x * x).sum()
    }
}

/// `A = U diag(s) V^T`, truncated to the numerical rank.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, each of length `rows`.
    pub u: Vec<Vec<f64>>,
    /// Nonincreasing, strictly positive.
    pub s: Vec<f64>,
    /// Right singular vectors, each of length `cols`.
    pub v: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 80;

impl Svd {
    pub fn compute(a: &DenseMatrix) -> Svd {
        if a.rows >= a.cols() {
            jacobi(a)
        } else {
            let t = jacobi(&a.transpose());
            Svd {
                u: t.v,
                s: t.s,
                v: t.u,
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Keeps the `r` largest singular triplets.
    pub fn truncate(mut self, r: usize) -> Svd {
        self.u.truncate(r);
        self.s.truncate(r);
        self.v.truncate(r);
        self
    }

    pub fn reconstruct(&self, rows: usize, cols: usize) -> DenseMatrix {
        let mut columns = vec![vec![0.0; rows]; cols];
        for ((u, &s), v) in self.u.iter().zip(&self.s).zip(&self.v) {
            for (j, col) in columns.iter_mut().enumerate() {
                let f = s * v[j];
                if f != 0.0 {
                    for (x, ui) in col.iter_mut().zip(u) {
                        *x += f * ui;
                    }
                }
            }
        }
        DenseMatrix { rows, columns }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (p, q) = (*x, *y);
        *x = c * p - s * q;
        *y = s * p + c * q;
    }
}

// Requires rows >= cols.
fn jacobi(a: &DenseMatrix) -> Svd {
    let n = a.cols();
    let mut w = a.columns.clone();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = w.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut triplets: Vec<(f64, usize)> = w
        .iter()
        .enumerate()
        .map(|(j, col)| (dot(col, col).sqrt(), j))
        .collect();
    triplets.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let largest = triplets.first().map(|t| t.0).unwrap_or(0.0);
    let tol = largest * f64::EPSILON * (a.rows.max(n) as f64);
    let mut out = Svd {
        u: Vec::new(),
        s: Vec::new(),
        v: Vec::new(),
    };
    for (sigma, j) in triplets {
        if sigma <= tol || sigma == 0.0 {
            break;
        }
        out.u.push(w[j].iter().map(|x| x / sigma).collect());
        out.s.push(sigma);
        out.v.push(v[j].clone());
    }
    out
}
