use num_complex::Complex64;

use super::csr::{norm2, ComplexCsrMatrix};
use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Incomplete LU factorization with the sparsity pattern of the matrix.
/// `L` (unit diagonal, stored strictly below) and `U` share the CSR arrays.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    n: usize,
    row_offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &ComplexCsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let row_offsets = a.row_offsets().to_vec();
        let cols = a.col_indices().to_vec();
        let mut vals = a.values().to_vec();
        let mut diag = vec![0; n];
        for (i, d) in diag.iter_mut().enumerate() {
            *d = (row_offsets[i]..row_offsets[i + 1])
                .find(|&k| cols[k] == i)
                .ok_or_else(|| Error::SingularMatrix(format!("ILU(0): row {i} has no diagonal entry")))?;
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let row = row_offsets[i]..row_offsets[i + 1];
            for k in row.clone() {
                pos[cols[k]] = k;
            }
            for idx in row.clone() {
                let k = cols[idx];
                if k >= i {
                    break;
                }
                let pivot = vals[diag[k]];
                if pivot == ZERO {
                    return Err(Error::SingularMatrix(format!("ILU(0): zero pivot in row {k}")));
                }
                let lik = vals[idx] / pivot;
                vals[idx] = lik;
                for idx2 in diag[k] + 1..row_offsets[k + 1] {
                    let p = pos[cols[idx2]];
                    if p != usize::MAX {
                        let ukj = vals[idx2];
                        vals[p] -= lik * ukj;
                    }
                }
            }
            if vals[diag[i]] == ZERO {
                return Err(Error::SingularMatrix(format!("ILU(0): zero pivot in row {i}")));
            }
            for k in row {
                pos[cols[k]] = usize::MAX;
            }
        }
        Ok(Self {
            n,
            row_offsets,
            cols,
            vals,
            diag,
        })
    }

    /// `z = (LU)⁻¹ r`.
    pub fn apply(&self, r: &[Complex64]) -> Vec<Complex64> {
        let mut z = r.to_vec();
        for i in 0..self.n {
            let mut s = z[i];
            for k in self.row_offsets[i]..self.diag[i] {
                s -= self.vals[k] * z[self.cols[k]];
            }
            z[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..self.row_offsets[i + 1] {
                s -= self.vals[k] * z[self.cols[k]];
            }
            z[i] = s / self.vals[self.diag[i]];
        }
        z
    }
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Right-preconditioned restarted GMRES from a zero initial guess. Returns
/// the solution and the number of inner iterations. Convergence is judged
/// on the recomputed residual `‖b - Ax‖ / ‖b‖`.
pub fn gmres(
    a: &ComplexCsrMatrix,
    b: &[Complex64],
    restart: usize,
    max_iter: usize,
    tol: f64,
    ilu0: bool,
) -> Result<(Vec<Complex64>, usize)> {
    if restart == 0 || max_iter == 0 || !(tol > 0.0) {
        return Err(invalid("GMRES needs restart > 0, max_iter > 0 and tol > 0"));
    }
    let n = a.nrows();
    let precond = if ilu0 { Some(Ilu0::new(a)?) } else { None };
    let apply_m = |v: &[Complex64]| match &precond {
        Some(p) => p.apply(v),
        None => v.to_vec(),
    };
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![ZERO; n], 0));
    }
    let mut x = vec![ZERO; n];
    let mut best = (f64::INFINITY, x.clone());
    let mut iterations = 0;
    loop {
        let ax = a.matvec(&x)?;
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if rel <= tol {
            return Ok((x, iterations));
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: best.0,
                best: best.1,
            });
        }
        let m = restart;
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut z: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iterations < max_iter {
            let zk = apply_m(&v[k]);
            let mut w = a.matvec(&zk)?;
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = dotc(vi, &w);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = Complex64::new(hn, 0.0);
            for i in 0..k {
                let (x0, y0) = (h[i][k], h[i + 1][k]);
                h[i][k] = cs[i] * x0 + sn[i] * y0;
                h[i + 1][k] = -sn[i].conj() * x0 + cs[i] * y0;
            }
            let (p, q) = (h[k][k], h[k + 1][k]);
            let d = (p.norm_sqr() + q.norm_sqr()).sqrt();
            if p.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = Complex64::new(1.0, 0.0);
            } else {
                cs[k] = p.norm() / d;
                sn[k] = p / p.norm() * q.conj() / d;
            }
            h[k][k] = cs[k] * p + sn[k] * q;
            h[k + 1][k] = ZERO;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].norm() / bnorm <= tol * 0.5 || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&z[j]) {
                *xi += yj * zi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ilu0_is_exact_for_tridiagonal() {
        // No fill-in for tridiagonal matrices, so ILU(0) = LU.
        let n = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, Complex64::new(3.0, 1.0)));
            if i + 1 < n {
                t.push((i, i + 1, Complex64::new(1.0, -0.5)));
                t.push((i + 1, i, Complex64::new(-0.7, 0.2)));
            }
        }
        let a = ComplexCsrMatrix::from_triplets(n, n, &t).unwrap();
        let ilu = Ilu0::new(&a).unwrap();
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let z = ilu.apply(&a.matvec(&x).unwrap());
        for i in 0..n {
            assert!((z[i] - x[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn missing_diagonal_rejected() {
        let a = ComplexCsrMatrix::from_triplets(2, 2, &[(0, 1, Complex64::new(1.0, 0.0)), (1, 0, Complex64::new(1.0, 0.0))])
            .unwrap();
        assert!(matches!(Ilu0::new(&a), Err(Error::SingularMatrix(_))));
    }
}
