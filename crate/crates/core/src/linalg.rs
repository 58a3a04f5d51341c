//! Small dense linear algebra: LU with partial pivoting, inverses, and
//! infinity-norm condition estimates. State spaces here are desk-scale, so a
//! plain row-major kernel is all that is needed.

use crate::error::{Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.add_to(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

// Pivots below this magnitude are treated as exact rank deficiency. The
// committor systems legitimately carry pivots at scales like eps^20, so the
// cutoff must sit far below any meaningful escape rate.
const PIVOT_FLOOR: f64 = 1e-300;

pub fn lu_factor(a: &Mat) -> Result<Lu> {
    let n = a.n();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu.get(k, k).abs();
        for i in (k + 1)..n {
            let v = lu.get(i, k).abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best < PIVOT_FLOOR || !best.is_finite() {
            return Err(Error::SingularMatrix);
        }
        if p != k {
            for j in 0..n {
                let t = lu.get(k, j);
                lu.set(k, j, lu.get(p, j));
                lu.set(p, j, t);
            }
            perm.swap(k, p);
        }
        let piv = lu.get(k, k);
        for i in (k + 1)..n {
            let m = lu.get(i, k) / piv;
            lu.set(i, k, m);
            if m != 0.0 {
                for j in (k + 1)..n {
                    lu.add_to(i, j, -m * lu.get(k, j));
                }
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 1..n {
            for j in 0..i {
                y[i] -= self.lu.get(i, j) * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                y[i] -= self.lu.get(i, j) * y[j];
            }
            y[i] /= self.lu.get(i, i);
        }
        y
    }
}

pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    Ok(lu_factor(a)?.solve(b))
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    let n = a.n();
    let lu = lu_factor(a)?;
    let mut inv = Mat::zeros(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    Ok(inv)
}

/// Infinity-norm condition number via the explicit inverse. An empty system
/// is perfectly conditioned by convention.
pub fn condition_inf(a: &Mat) -> Result<f64> {
    if a.n() == 0 {
        return Ok(1.0);
    }
    Ok(a.norm_inf() * inverse(a)?.norm_inf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = solve(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Mat::from_rows(&[
            vec![4.0, 1.0, 0.0],
            vec![-1.0, 3.0, 0.5],
            vec![0.2, 0.0, 2.0],
        ]);
        let inv = inverse(&a).unwrap();
        let prod = a.matmul(&inv);
        let err = prod.sub(&Mat::identity(3)).norm_inf();
        assert!(err < 1e-12, "A·A⁻¹ far from I: {err}");
    }

    #[test]
    fn detects_singularity() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(lu_factor(&a), Err(Error::SingularMatrix)));
    }

    #[test]
    fn condition_of_identity_is_one() {
        assert!((condition_inf(&Mat::identity(4)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn keeps_tiny_but_regular_pivots() {
        // Diagonal entries near eps^8 are legitimate, not rank deficiency.
        let a = Mat::from_rows(&[vec![1e-32, 0.0], vec![-1.0, 1.0]]);
        let x = solve(&a, &[1e-32, 0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!((x[1] - 1.0).abs() < 1e-9);
    }
}
