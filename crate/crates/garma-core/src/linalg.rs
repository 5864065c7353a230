//! Dense symmetric matrix support, sized for parameter dimensions (k+p+q is
//! rarely above ten, so no external linear algebra is warranted).

use alloc::vec;
use alloc::vec::Vec;

/// Square matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data length mismatch");
        Matrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rank-one update `self += w * g * g'`.
    pub fn add_scaled_outer(&mut self, w: f64, g: &[f64]) {
        debug_assert_eq!(g.len(), self.dim);
        for i in 0..self.dim {
            let wi = w * g[i];
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            for (rj, &gj) in row.iter_mut().zip(g.iter()) {
                *rj += wi * gj;
            }
        }
    }

    /// Cholesky factor L with `self = L L'`, or None when the matrix is not
    /// positive definite to working precision.
    fn cholesky(&self) -> Option<Vec<f64>> {
        let d = self.dim;
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    // scale-aware pivot test
                    let floor = self.get(i, i).abs().max(1.0) * 1e-13;
                    if s <= floor {
                        return None;
                    }
                    l[i * d + i] = libm::sqrt(s);
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Some(l)
    }

    /// Solves `self * x = b` for symmetric positive definite `self`.
    pub fn solve_spd(&self, b: &[f64]) -> Option<Vec<f64>> {
        debug_assert_eq!(b.len(), self.dim);
        let l = self.cholesky()?;
        Some(chol_solve(&l, self.dim, b))
    }

    /// Full inverse for symmetric positive definite `self`.
    pub fn inverse_spd(&self) -> Option<Matrix> {
        let d = self.dim;
        let l = self.cholesky()?;
        let mut inv = Matrix::zeros(d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.fill(0.0);
            e[j] = 1.0;
            let col = chol_solve(&l, d, &e);
            for i in 0..d {
                inv.set(i, j, col[i]);
            }
        }
        Some(inv)
    }

    /// Quadratic form `g' * self * g`.
    pub fn quad_form(&self, g: &[f64]) -> f64 {
        debug_assert_eq!(g.len(), self.dim);
        let mut total = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.get(i, j) * g[j];
            }
            total += g[i] * row;
        }
        total
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.dim).fold(0.0f64, |m, i| m.max(self.get(i, i)))
    }
}

fn chol_solve(l: &[f64], d: usize, b: &[f64]) -> Vec<f64> {
    // forward substitution L z = b
    let mut z = vec![0.0; d];
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * z[k];
        }
        z[i] = s / l[i * d + i];
    }
    // back substitution L' x = z
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut s = z[i];
        for k in (i + 1)..d {
            s -= l[k * d + i] * x[k];
        }
        x[i] = s / l[i * d + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn solves_known_system() {
        let a = Matrix::from_rows(2, vec![4.0, 1.0, 1.0, 3.0]);
        let x = a.solve_spd(&[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_matches_solve() {
        let a = Matrix::from_rows(3, vec![5.0, 1.0, 0.5, 1.0, 4.0, 1.0, 0.5, 1.0, 3.0]);
        let inv = a.inverse_spd().unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = a.solve_spd(&b).unwrap();
        for i in 0..3 {
            let xi: f64 = (0..3).map(|j| inv.get(i, j) * b[j]).sum();
            assert!((xi - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_singular() {
        let a = Matrix::from_rows(2, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(a.solve_spd(&[1.0, 1.0]).is_none());
        assert!(a.inverse_spd().is_none());
    }

    #[test]
    fn outer_update_accumulates() {
        let mut a = Matrix::zeros(2);
        a.add_scaled_outer(2.0, &[1.0, 3.0]);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(0, 1), 6.0);
        assert_eq!(a.get(1, 1), 18.0);
    }
}
