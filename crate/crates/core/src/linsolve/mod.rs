//! Complex sparse matrices and linear solves: sparse LU (faer) or restarted
//! GMRES with an ILU(0) right preconditioner.

mod csr;
mod gmres;
mod symmetric;

use std::time::Instant;

use faer::sparse::{SparseRowMat, SymbolicSparseRowMat};
use faer::{Col, Par};
use num_complex::Complex64;

pub use csr::{norm2, ComplexCsrMatrix, Triplet};
pub use gmres::{gmres, Ilu0};
pub use symmetric::{is_complex_symmetric, solve_symmetric, SYMMETRY_TOL};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverMethod {
    DirectLu,
    Gmres {
        restart: usize,
        max_iter: usize,
        tol: f64,
        ilu0: bool,
    },
}

impl SolverMethod {
    /// Tolerance the returned residual is checked against.
    pub fn tolerance(&self) -> f64 {
        match self {
            SolverMethod::DirectLu => DIRECT_TOL,
            SolverMethod::Gmres { tol, .. } => *tol,
        }
    }
}

/// Residual bound reported for direct solves.
pub const DIRECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: String,
    /// Zero for direct solves.
    pub iterations: usize,
    /// `‖b - Ax‖₂ / ‖b‖₂`, recomputed from the returned `x`
    /// (absolute when `b = 0`).
    pub relative_residual: f64,
    pub wall_time_s: f64,
}

/// Selects serial (`threads <= 1`) or multithreaded dense kernels inside the
/// sparse factorization.
pub fn set_solver_threads(threads: usize) {
    faer::set_global_parallelism(if threads <= 1 { Par::Seq } else { Par::rayon(threads) });
}

pub fn relative_residual(a: &ComplexCsrMatrix, x: &[Complex64], b: &[Complex64]) -> Result<f64> {
    let ax = a.matvec(x)?;
    let r = norm2(&ax.iter().zip(b).map(|(p, q)| q - p).collect::<Vec<_>>());
    let nb = norm2(b);
    Ok(if nb > 0.0 { r / nb } else { r })
}

pub fn solve(a: &ComplexCsrMatrix, b: &[Complex64], method: &SolverMethod) -> Result<(Vec<Complex64>, SolveReport)> {
    if a.nrows() != a.ncols() {
        return Err(invalid("matrix must be square"));
    }
    if b.len() != a.nrows() {
        return Err(invalid(format!("right-hand side of length {} for {} rows", b.len(), a.nrows())));
    }
    let start = Instant::now();
    let (x, iterations, name) = match *method {
        // Pivoting in the symmetric factorization stays inside supernodes; LU
        // takes over when it breaks down.
        SolverMethod::DirectLu if is_complex_symmetric(a) => match solve_symmetric(a, b, faer::get_global_parallelism()) {
            Ok(x) => (x, 0, "direct_lblt".to_string()),
            Err(Error::SingularMatrix(_)) => (solve_direct(a, b)?, 0, "direct_lu".to_string()),
            Err(e) => return Err(e),
        },
        SolverMethod::DirectLu => (solve_direct(a, b)?, 0, "direct_lu".to_string()),
        SolverMethod::Gmres {
            restart,
            max_iter,
            tol,
            ilu0,
        } => {
            let (x, it) = gmres(a, b, restart, max_iter, tol, ilu0)?;
            let name = format!("gmres({restart}){}", if ilu0 { "+ilu0" } else { "" });
            (x, it, name)
        }
    };
    let relative_residual = relative_residual(a, &x, b)?;
    Ok((
        x,
        SolveReport {
            method: name,
            iterations,
            relative_residual,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    ))
}

fn solve_direct(a: &ComplexCsrMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let symbolic = SymbolicSparseRowMat::<usize>::new_checked(n, n, a.row_offsets().to_vec(), None, a.col_indices().to_vec());
    let mat = SparseRowMat::<usize, Complex64>::new(symbolic, a.values().to_vec());
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::SingularMatrix(format!("sparse LU failed: {e:?}")))?;
    let rhs = Col::<Complex64>::from_fn(n, |i| b[i]);
    let sol = faer::prelude::Solve::solve(&lu, &rhs);
    let x: Vec<Complex64> = (0..n).map(|i| sol[i]).collect();
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularMatrix("zero pivot in sparse LU".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gmres_method(tol: f64) -> SolverMethod {
        SolverMethod::Gmres {
            restart: 30,
            max_iter: 2000,
            tol,
            ilu0: true,
        }
    }

    /// Diagonally dominant non-Hermitian tridiagonal-plus-random matrix.
    fn test_matrix(n: usize, seed: u64) -> ComplexCsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(4.0, 1.0)));
            if i + 1 < n {
                t.push((i, i + 1, c(-1.0, 0.3)));
                t.push((i + 1, i, c(-1.0, -0.2)));
            }
            let j = rng.random_range(0..n);
            t.push((i, j, c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))));
        }
        ComplexCsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn diagonal_system() {
        let d = [c(2.0, 1.0), c(-1.0, 3.0), c(0.5, 0.0)];
        let a = ComplexCsrMatrix::from_triplets(3, 3, &[(0, 0, d[0]), (1, 1, d[1]), (2, 2, d[2])]).unwrap();
        let b = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, -2.0)];
        for m in [SolverMethod::DirectLu, gmres_method(1e-14)] {
            let (x, rep) = solve(&a, &b, &m).unwrap();
            for i in 0..3 {
                assert!((x[i] - b[i] / d[i]).norm() < 1e-14);
            }
            assert!(rep.relative_residual < 1e-14);
        }
    }

    #[test]
    fn direct_and_gmres_agree() {
        let n = 200;
        let a = test_matrix(n, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Complex64> = (0..n).map(|_| c(rng.random(), rng.random())).collect();
        let b = a.matvec(&xs).unwrap();
        let (x1, r1) = solve(&a, &b, &SolverMethod::DirectLu).unwrap();
        let (x2, r2) = solve(&a, &b, &gmres_method(1e-12)).unwrap();
        assert_eq!(r1.iterations, 0);
        assert!(r2.iterations > 0);
        assert!(r1.relative_residual < 1e-13);
        assert!(r2.relative_residual <= 1e-12);
        let err = norm2(&x1.iter().zip(&xs).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm2(&xs);
        assert!(err < 1e-12);
        let err = norm2(&x2.iter().zip(&xs).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm2(&xs);
        assert!(err < 1e-10);
    }

    #[test]
    fn unpreconditioned_gmres() {
        let a = test_matrix(60, 6);
        let b: Vec<Complex64> = (0..60).map(|i| c(i as f64, 1.0)).collect();
        let m = SolverMethod::Gmres {
            restart: 60,
            max_iter: 500,
            tol: 1e-10,
            ilu0: false,
        };
        let (_, rep) = solve(&a, &b, &m).unwrap();
        assert!(rep.relative_residual <= 1e-10);
    }

    #[test]
    fn singular_matrix_reported() {
        let a = ComplexCsrMatrix::from_triplets(2, 2, &[(0, 0, c(1.0, 0.0)), (0, 1, c(1.0, 0.0))]).unwrap();
        let r = solve(&a, &[c(1.0, 0.0), c(1.0, 0.0)], &SolverMethod::DirectLu);
        assert!(matches!(r, Err(Error::SingularMatrix(_))), "{r:?}");
    }

    #[test]
    fn gmres_failure_carries_best_iterate() {
        let a = test_matrix(100, 7);
        let b = vec![c(1.0, 0.0); 100];
        let m = SolverMethod::Gmres {
            restart: 2,
            max_iter: 3,
            tol: 1e-14,
            ilu0: false,
        };
        match solve(&a, &b, &m) {
            Err(Error::NotConverged { best, residual, .. }) => {
                assert_eq!(best.len(), 100);
                assert!(residual > 1e-14 && residual < 1.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn dimension_checks() {
        let a = ComplexCsrMatrix::from_triplets(2, 3, &[]).unwrap();
        assert!(solve(&a, &[c(0.0, 0.0); 2], &SolverMethod::DirectLu).is_err());
        let a = ComplexCsrMatrix::identity(2);
        assert!(solve(&a, &[c(0.0, 0.0); 3], &SolverMethod::DirectLu).is_err());
    }

    /// Complex symmetric saddle point `[[K, C], [Cᵀ, 0]]`: zero diagonal in
    /// the second block.
    fn saddle_matrix(n: usize, m: usize, seed: u64) -> ComplexCsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(3.0, 0.5)));
            if i + 1 < n {
                let v = c(-1.0, 0.2);
                t.push((i, i + 1, v));
                t.push((i + 1, i, v));
            }
        }
        for k in 0..m {
            for _ in 0..3 {
                let i = rng.random_range(0..n);
                let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                t.push((i, n + k, v));
                t.push((n + k, i, v));
            }
        }
        ComplexCsrMatrix::from_triplets(n + m, n + m, &t).unwrap()
    }

    #[test]
    fn zero_diagonal_falls_back_to_lu() {
        let a = saddle_matrix(150, 20, 8);
        assert!(is_complex_symmetric(&a));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<Complex64> = (0..170).map(|_| c(rng.random(), rng.random())).collect();
        let b = a.matvec(&xs).unwrap();
        let (x, rep) = solve(&a, &b, &SolverMethod::DirectLu).unwrap();
        assert!(rep.relative_residual < 1e-13, "{} {}", rep.method, rep.relative_residual);
        let err = norm2(&x.iter().zip(&xs).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm2(&xs);
        assert!(err < 1e-10, "{err}");
    }

    /// Complex symmetric, indefinite real part, nonzero diagonal.
    fn symmetric_indefinite(n: usize, seed: u64) -> ComplexCsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            let s = if i % 3 == 0 { -1.0 } else { 1.0 };
            t.push((i, i, c(s * 2.0, 0.01)));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v = c(rng.random_range(-1.0..1.0), rng.random_range(-0.1..0.1));
                    t.push((i, j, v));
                    t.push((j, i, v));
                }
            }
        }
        ComplexCsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn symmetric_indefinite_uses_lblt() {
        let a = symmetric_indefinite(300, 8);
        assert!(is_complex_symmetric(&a));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<Complex64> = (0..300).map(|_| c(rng.random(), rng.random())).collect();
        let b = a.matvec(&xs).unwrap();
        let (x, rep) = solve(&a, &b, &SolverMethod::DirectLu).unwrap();
        assert_eq!(rep.method, "direct_lblt");
        assert!(rep.relative_residual < 1e-13, "{}", rep.relative_residual);
        let err = norm2(&x.iter().zip(&xs).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm2(&xs);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn nonsymmetric_uses_lu() {
        let a = test_matrix(50, 10);
        assert!(!is_complex_symmetric(&a));
        let (_, rep) = solve(&a, &[c(1.0, 0.0); 50], &SolverMethod::DirectLu).unwrap();
        assert_eq!(rep.method, "direct_lu");
    }

    #[test]
    fn hermitian_is_not_complex_symmetric() {
        let t = [(0, 0, c(2.0, 0.0)), (0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0)), (1, 1, c(2.0, 0.0))];
        let a = ComplexCsrMatrix::from_triplets(2, 2, &t).unwrap();
        assert!(!is_complex_symmetric(&a));
        let (x, rep) = solve(&a, &[c(1.0, 0.0), c(0.0, 0.0)], &SolverMethod::DirectLu).unwrap();
        assert_eq!(rep.method, "direct_lu");
        assert!((a.matvec(&x).unwrap()[0] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_symmetric_reported() {
        let one = c(1.0, 0.0);
        let a = ComplexCsrMatrix::from_triplets(2, 2, &[(0, 0, one), (0, 1, one), (1, 0, one), (1, 1, one)]).unwrap();
        let r = solve(&a, &[one, c(0.0, 0.0)], &SolverMethod::DirectLu);
        assert!(matches!(r, Err(Error::SingularMatrix(_))), "{r:?}");
    }
}
