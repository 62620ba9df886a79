//! Vector-valued polynomials of total degree at most 2 in three variables.

use nalgebra::Matrix3;

use crate::mesh::Vec3;

pub const N_MONOMIALS: usize = 10;

/// Exponents of `1, x, y, z, x², xy, xz, y², yz, z²`.
pub const EXPONENTS: [[u8; 3]; N_MONOMIALS] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 2, 0],
    [0, 1, 1],
    [0, 0, 2],
];

pub fn monomial_index(e: [u8; 3]) -> usize {
    EXPONENTS
        .iter()
        .position(|&x| x == e)
        .expect("monomial of degree at most 2")
}

fn monomials(x: &Vec3) -> [f64; N_MONOMIALS] {
    let (a, b, c) = (x.x, x.y, x.z);
    [1.0, a, b, c, a * a, a * b, a * c, b * b, b * c, c * c]
}

/// `d[j][m]` is the derivative of monomial `m` with respect to coordinate `j`.
fn monomial_derivatives(x: &Vec3) -> [[f64; N_MONOMIALS]; 3] {
    let (a, b, c) = (x.x, x.y, x.z);
    [
        [0.0, 1.0, 0.0, 0.0, 2.0 * a, b, c, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, a, 0.0, 2.0 * b, c, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, a, 0.0, b, 2.0 * c],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecPoly {
    /// `coeffs[i][m]`: coefficient of monomial `m` in component `i`.
    pub coeffs: [[f64; N_MONOMIALS]; 3],
}

impl Default for VecPoly {
    fn default() -> Self {
        Self::zero()
    }
}

impl VecPoly {
    pub fn zero() -> Self {
        Self {
            coeffs: [[0.0; N_MONOMIALS]; 3],
        }
    }

    /// Adds `coef * x^e` to component `comp`.
    pub fn add_term(&mut self, comp: usize, coef: f64, e: [u8; 3]) -> &mut Self {
        self.coeffs[comp][monomial_index(e)] += coef;
        self
    }

    pub fn axpy(&mut self, a: f64, other: &VecPoly) {
        for i in 0..3 {
            for m in 0..N_MONOMIALS {
                self.coeffs[i][m] += a * other.coeffs[i][m];
            }
        }
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        let mono = monomials(x);
        Vec3::from_fn(|i, _| (0..N_MONOMIALS).map(|m| self.coeffs[i][m] * mono[m]).sum())
    }

    /// `J[i][j] = d u_i / d x_j`.
    pub fn jacobian(&self, x: &Vec3) -> Matrix3<f64> {
        let d = monomial_derivatives(x);
        Matrix3::from_fn(|i, j| (0..N_MONOMIALS).map(|m| self.coeffs[i][m] * d[j][m]).sum())
    }

    pub fn curl(&self, x: &Vec3) -> Vec3 {
        let j = self.jacobian(x);
        Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
    }

    pub fn div(&self, x: &Vec3) -> f64 {
        self.jacobian(x).trace()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivatives() {
        // u = (y z, x², 3x - z²)
        let mut u = VecPoly::zero();
        u.add_term(0, 1.0, [0, 1, 1])
            .add_term(1, 1.0, [2, 0, 0])
            .add_term(2, 3.0, [1, 0, 0])
            .add_term(2, -1.0, [0, 0, 2]);
        let x = Vec3::new(0.3, -0.7, 1.1);
        let v = u.eval(&x);
        assert!((v - Vec3::new(-0.77, 0.09, 0.9 - 1.21)).norm() < 1e-15);
        // curl = (0 - 0, y - 3, 2x - z)
        assert!((u.curl(&x) - Vec3::new(0.0, -0.7 - 3.0, 0.6 - 1.1)).norm() < 1e-15);
        // div = 0 + 0 - 2z
        assert!((u.div(&x) + 2.2).abs() < 1e-15);
    }

    #[test]
    fn index_round_trip() {
        for (m, e) in EXPONENTS.iter().enumerate() {
            assert_eq!(monomial_index(*e), m);
        }
    }
}
