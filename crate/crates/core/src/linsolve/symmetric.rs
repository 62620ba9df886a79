//! Direct solves of complex symmetric (`A = Aᵀ`, not Hermitian) systems.
//!
//! `A = Aᵣ + iAᵢ` is factored through its real symmetric indefinite
//! embedding
//!
//! ```text
//! [ Aᵣ   Aᵢ ] [  xᵣ ]   [ bᵣ ]
//! [ Aᵢ  -Aᵣ ] [ -xᵢ ] = [ bᵢ ]
//! ```
//!
//! with the two parts of each unknown interleaved, an AMD ordering of the
//! pattern and supernodal Bunch-Kaufman `LBLᵀ`. The fill follows the pattern
//! of `A` instead of `AᵀA`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use num_complex::Complex64;

use super::csr::{norm2, ComplexCsrMatrix};
use crate::error::{Error, Result};

/// Relative asymmetry `|a_ij - a_ji|` (against the largest entry) accepted as
/// symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Whether the pattern is symmetric and `|a_ij - a_ji| <= SYMMETRY_TOL max|a|`.
pub fn is_complex_symmetric(a: &ComplexCsrMatrix) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let amax = a.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let tol = SYMMETRY_TOL * amax;
    (0..a.nrows()).all(|i| {
        let (cols, vals) = a.row(i);
        cols.iter().zip(vals).all(|(&j, &v)| {
            let (cj, _) = a.row(j);
            cj.binary_search(&i).is_ok() && (a.get(j, i) - v).norm() <= tol
        })
    })
}

struct Factor {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    perm_fwd: Vec<usize>,
    perm_inv: Vec<usize>,
}

fn factor(a: &ComplexCsrMatrix, par: Par) -> Result<Factor> {
    let n = 2 * a.nrows();
    let mut trip = Vec::with_capacity(3 * a.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j > i {
                continue;
            }
            // Average both triangles; they agree to SYMMETRY_TOL.
            let v = 0.5 * (v + a.get(j, i));
            let (r, c) = (2 * i, 2 * j);
            trip.push(Triplet::new(r, c, v.re));
            trip.push(Triplet::new(r + 1, c, v.im));
            trip.push(Triplet::new(r + 1, c + 1, -v.re));
            if i != j {
                trip.push(Triplet::new(r, c + 1, v.im));
            }
        }
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::SingularMatrix(format!("symmetric embedding: {e:?}")))?;
    let symbolic = factorize_symbolic_cholesky(
        m.symbolic(),
        Side::Lower,
        SymmetricOrdering::Amd,
        CholeskySymbolicParams {
            supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
            ..Default::default()
        },
    )
    .map_err(|e| Error::SingularMatrix(format!("symbolic factorization: {e:?}")))?;
    let mut f = Factor {
        values: vec![0.0; symbolic.len_val()],
        subdiag: vec![0.0; n],
        perm_fwd: vec![0; n],
        perm_inv: vec![0; n],
        symbolic,
    };
    let params = Default::default();
    let mut mem = MemBuffer::try_new(f.symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, params))
        .map_err(|_| Error::SingularMatrix("out of memory in LBLT workspace".into()))?;
    f.symbolic.factorize_numeric_intranode_lblt::<f64>(
        &mut f.values,
        &mut f.subdiag,
        &mut f.perm_fwd,
        &mut f.perm_inv,
        m.as_ref(),
        Side::Lower,
        par,
        MemStack::new(&mut mem),
        params,
    );
    Ok(f)
}

impl Factor {
    fn solve(&self, b: &[Complex64], par: Par) -> Vec<Complex64> {
        let n = b.len();
        let mut rhs = Mat::<f64>::from_fn(2 * n, 1, |k, _| if k % 2 == 0 { b[k / 2].re } else { b[k / 2].im });
        let perm = faer::perm::PermRef::new_checked(&self.perm_fwd, &self.perm_inv, 2 * n);
        let lblt = faer::sparse::linalg::cholesky::IntranodeLbltRef::new(&self.symbolic, &self.values, &self.subdiag, perm);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, par));
        lblt.solve_in_place_with_conj(Conj::No, rhs.as_mut(), par, MemStack::new(&mut mem));
        (0..n).map(|k| Complex64::new(rhs[(2 * k, 0)], -rhs[(2 * k + 1, 0)])).collect()
    }
}

/// Refinement steps after the first solve.
const MAX_REFINEMENT: usize = 5;

/// Solves `Ax = b` for complex symmetric `A` with iterative refinement.
pub fn solve_symmetric(a: &ComplexCsrMatrix, b: &[Complex64], par: Par) -> Result<Vec<Complex64>> {
    let f = factor(a, par)?;
    let nb = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = f.solve(b, par);
    let residual = |x: &[Complex64]| -> Result<Vec<Complex64>> {
        Ok(a.matvec(x)?.iter().zip(b).map(|(p, q)| q - p).collect())
    };
    let mut r = residual(&x)?;
    let mut rel = norm2(&r) / nb;
    for _ in 0..MAX_REFINEMENT {
        if !rel.is_finite() || rel <= 1e-14 {
            break;
        }
        let dx = f.solve(&r, par);
        let cand: Vec<Complex64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
        let rc = residual(&cand)?;
        let rel_c = norm2(&rc) / nb;
        if !(rel_c < 0.5 * rel) {
            break;
        }
        (x, r, rel) = (cand, rc, rel_c);
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularMatrix("zero pivot in symmetric factorization".into()));
    }
    Ok(x)
}
