//! Physical parameters, the nonlocal dispersion relation, the manufactured
//! unit-cube case and plane-wave sources.
//!
//! Time-harmonic fields carry the factor `exp(-iωt)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fespaces::CVec3;
use crate::mesh::Vec3;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Coefficients of the coupled Maxwell / hydrodynamic Drude system.
/// Index 1 refers to the metal region, index 2 to its complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalParams {
    pub omega: f64,
    pub omega_p: f64,
    pub gamma: f64,
    pub beta: f64,
    pub eps0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps_inf: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::unit()
    }
}

impl PhysicalParams {
    /// Every parameter equal to 1.
    pub fn unit() -> Self {
        Self {
            omega: 1.0,
            omega_p: 1.0,
            gamma: 1.0,
            beta: 1.0,
            eps0: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            eps1: 1.0,
            eps2: 1.0,
            eps_inf: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega,
            self.omega_p,
            self.gamma,
            self.beta,
            self.eps0,
            self.mu1,
            self.mu2,
            self.eps1,
            self.eps2,
            self.eps_inf,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(invalid("physical parameters must be finite"));
        }
        if self.omega <= 0.0 {
            return Err(invalid("omega must be positive"));
        }
        if self.omega_p < 0.0 || self.gamma < 0.0 || self.beta < 0.0 {
            return Err(invalid("omega_p, gamma and beta must be non-negative"));
        }
        if [self.mu1, self.mu2, self.eps1, self.eps2, self.eps0].iter().any(|&x| x <= 0.0) {
            return Err(invalid("mu_i, eps_i and eps0 must be positive"));
        }
        Ok(())
    }

    /// `(mu, eps)` in the metal region or outside it.
    pub fn coefficients(&self, in_metal: bool) -> (f64, f64) {
        if in_metal {
            (self.mu1, self.eps1)
        } else {
            (self.mu2, self.eps2)
        }
    }

    /// Silver-like nanosphere parameters in units where lengths are in nm and
    /// the speed of light is 1 (so eps0 = mu0 = 1 and frequencies are wave
    /// numbers in 1/nm). `omega_over_omega_p` sets the driving frequency.
    pub fn nanosphere_scaled(omega_over_omega_p: f64) -> Self {
        let omega_p = si_rate_to_per_nm(8.65e15);
        Self {
            omega: omega_over_omega_p * omega_p,
            omega_p,
            gamma: si_rate_to_per_nm(8.65e13),
            beta: si_speed_to_relative(8.29e5),
            ..Self::unit()
        }
    }
}

/// Angular frequency in rad/s to a wave number in 1/nm (c = 1).
pub fn si_rate_to_per_nm(rate: f64) -> f64 {
    rate * 1e-9 / SPEED_OF_LIGHT
}

/// Speed in m/s relative to the speed of light.
pub fn si_speed_to_relative(v: f64) -> f64 {
    v / SPEED_OF_LIGHT
}

/// Smallest admissible `|ω(ω + iγ) - β²k²|`.
pub const POLE_TOL: f64 = 1e-30;

/// Spatially dispersive relative permittivity
/// `ε(ω, k) = ε_∞ - ω_p² / (ω(ω + iγ) - β²k²)`.
pub fn nonlocal_permittivity(params: &PhysicalParams, k: f64) -> Result<Complex64> {
    let w = params.omega;
    let denom = Complex64::new(w * w - params.beta * params.beta * k * k, w * params.gamma);
    if denom.norm() < POLE_TOL {
        return Err(Error::Pole(denom.norm()));
    }
    Ok(params.eps_inf - params.omega_p * params.omega_p / denom)
}

/// Local Drude permittivity `ε_∞ - ω_p² / (ω(ω + iγ))`.
pub fn drude_permittivity(params: &PhysicalParams) -> Result<Complex64> {
    nonlocal_permittivity(&PhysicalParams { beta: 0.0, ..*params }, 0.0)
}

/// Exact solution on the unit cube with every parameter equal to 1:
/// `E = (exp(-iz), 0, 0)`, `J = (sin πx, sin πy, i sin πz)`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedCase {
    params: PhysicalParams,
}

pub fn manufactured_case_unit_cube(params: &PhysicalParams) -> Result<ManufacturedCase> {
    let p = params;
    let ones = [p.omega, p.omega_p, p.gamma, p.beta, p.eps0, p.mu1, p.mu2, p.eps1, p.eps2];
    if ones.iter().any(|&x| x != 1.0) {
        return Err(invalid("the manufactured case requires every physical parameter to be 1"));
    }
    Ok(ManufacturedCase { params: *params })
}

impl ManufacturedCase {
    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn e_exact(&self, x: &Vec3) -> CVec3 {
        CVec3::new(Complex64::new(0.0, -x.z).exp(), 0.0.into(), 0.0.into())
    }

    pub fn curl_e_exact(&self, x: &Vec3) -> CVec3 {
        CVec3::new(0.0.into(), -I * Complex64::new(0.0, -x.z).exp(), 0.0.into())
    }

    pub fn j_exact(&self, x: &Vec3) -> CVec3 {
        use std::f64::consts::PI;
        CVec3::new(
            (PI * x.x).sin().into(),
            (PI * x.y).sin().into(),
            I * (PI * x.z).sin(),
        )
    }

    pub fn div_j_exact(&self, x: &Vec3) -> Complex64 {
        use std::f64::consts::PI;
        PI * ((PI * x.x).cos() + (PI * x.y).cos() + I * (PI * x.z).cos())
    }

    /// `∇×∇×E - ω²E - iωJ`; the first two terms cancel.
    pub fn f1(&self, x: &Vec3) -> CVec3 {
        -self.j_exact(x) * I
    }

    /// `ω(ω + iγ)J + β²∇(∇·J) - iωω_p²ε₀E` with `∇(∇·J) = -π²J`.
    pub fn f2(&self, x: &Vec3) -> CVec3 {
        let pi2 = std::f64::consts::PI.powi(2);
        self.j_exact(x) * Complex64::new(1.0 - pi2, 1.0) - self.e_exact(x) * I
    }

    /// `(∇×E)×n - iω(n×E)×n` for the outward unit normal `n`.
    pub fn g(&self, x: &Vec3, n: &Vec3) -> CVec3 {
        let nc = n.map(Complex64::from);
        let e = self.e_exact(x);
        self.curl_e_exact(x).cross(&nc) - nc.cross(&e).cross(&nc) * I
    }
}

/// Plane wave `E = A p exp(i k d·x)` in a homogeneous medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    pub direction: Vec3,
    pub polarization: Vec3,
    pub amplitude: Complex64,
    pub omega: f64,
    pub eps: f64,
    pub mu: f64,
}

impl IncidentWave {
    pub fn new(direction: Vec3, polarization: Vec3, amplitude: Complex64, omega: f64, eps: f64, mu: f64) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-12 || (polarization.norm() - 1.0).abs() > 1e-12 {
            return Err(invalid("direction and polarization must be unit vectors"));
        }
        if direction.dot(&polarization).abs() > 1e-12 {
            return Err(invalid("polarization must be orthogonal to the direction"));
        }
        if !(omega > 0.0 && eps > 0.0 && mu > 0.0) {
            return Err(invalid("omega, eps and mu must be positive"));
        }
        Ok(Self {
            direction,
            polarization,
            amplitude,
            omega,
            eps,
            mu,
        })
    }

    /// `E = exp(i k y) e_x` in vacuum-like units (`eps = mu = 1`).
    pub fn along_y(omega: f64) -> Self {
        Self::new(Vec3::y(), Vec3::x(), Complex64::new(1.0, 0.0), omega, 1.0, 1.0).expect("valid wave")
    }

    pub fn wavenumber(&self) -> f64 {
        self.omega * (self.eps * self.mu).sqrt()
    }

    fn phase(&self, x: &Vec3) -> Complex64 {
        self.amplitude * (I * self.wavenumber() * self.direction.dot(x)).exp()
    }

    pub fn e(&self, x: &Vec3) -> CVec3 {
        self.polarization.map(Complex64::from) * self.phase(x)
    }

    pub fn curl_e(&self, x: &Vec3) -> CVec3 {
        self.direction.cross(&self.polarization).map(Complex64::from) * (I * self.wavenumber() * self.phase(x))
    }

    /// `H = ∇×E / (iωμ)`.
    pub fn h(&self, x: &Vec3) -> CVec3 {
        self.curl_e(x) / (I * self.omega * self.mu)
    }

    /// Silver–Müller data `g = iω(H - n×E)×n` at `x` with outward normal `n`.
    pub fn silver_muller_data(&self, x: &Vec3, n: &Vec3) -> CVec3 {
        let nc = n.map(Complex64::from);
        (self.h(x) - nc.cross(&self.e(x))).cross(&nc) * (I * self.omega)
    }
}

/// Boundary data of a plane wave as a function of point and outward normal.
pub fn plane_wave_source(wave: &IncidentWave) -> impl Fn(&Vec3, &Vec3) -> CVec3 + Sync + '_ {
    move |x, n| wave.silver_muller_data(x, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Field<'a> = dyn Fn(&Vec3) -> CVec3 + 'a;

    /// Sixth-order central first derivative along `j`.
    fn d1(f: &Field<'_>, x: &Vec3, j: usize, h: f64) -> CVec3 {
        let c = [(-3.0, -1.0), (-2.0, 9.0), (-1.0, -45.0), (1.0, 45.0), (2.0, -9.0), (3.0, 1.0)];
        c.iter()
            .map(|&(s, w)| f(&(x + Vec3::ith(j, s * h))) * Complex64::from(w))
            .sum::<CVec3>()
            / Complex64::from(60.0 * h)
    }

    /// Sixth-order second derivative `∂_i ∂_j`.
    fn d2(f: &Field<'_>, x: &Vec3, i: usize, j: usize, h: f64) -> CVec3 {
        if i == j {
            let c = [(-3.0, 2.0), (-2.0, -27.0), (-1.0, 270.0), (0.0, -490.0), (1.0, 270.0), (2.0, -27.0), (3.0, 2.0)];
            c.iter()
                .map(|&(s, w)| f(&(x + Vec3::ith(j, s * h))) * Complex64::from(w))
                .sum::<CVec3>()
                / Complex64::from(180.0 * h * h)
        } else {
            d1(&|y: &Vec3| d1(f, y, j, h), x, i, h)
        }
    }

    fn fd_curl(f: &Field<'_>, x: &Vec3, h: f64) -> CVec3 {
        let g: Vec<CVec3> = (0..3).map(|j| d1(f, x, j, h)).collect();
        CVec3::new(g[1][2] - g[2][1], g[2][0] - g[0][2], g[0][1] - g[1][0])
    }

    /// `∇(∇·u)` and `Δu`.
    fn fd_grad_div_and_laplacian(f: &Field<'_>, x: &Vec3, h: f64) -> (CVec3, CVec3) {
        let mut gd = CVec3::zeros();
        let mut lap = CVec3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let dij = d2(f, x, i, j, h);
                gd[i] += dij[j];
                if i == j {
                    lap += dij;
                }
            }
        }
        (gd, lap)
    }

    fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Vec3::from_fn(|_, _| rng.random_range(0.05..0.95))).collect()
    }

    #[test]
    fn permittivity_examples() {
        let p = PhysicalParams::unit();
        let e = nonlocal_permittivity(&p, 0.0).unwrap();
        assert!((e - Complex64::new(0.5, 0.5)).norm() < 1e-14);
        let p0 = PhysicalParams { omega_p: 0.0, ..p };
        for k in [0.0, 0.5, 3.0] {
            assert_eq!(nonlocal_permittivity(&p0, k).unwrap(), Complex64::new(1.0, 0.0));
        }
        let drude = PhysicalParams { beta: 0.0, omega: 2.0, gamma: 0.3, ..p };
        let w = 2.0;
        let expect = 1.0 - 1.0 / (w * Complex64::new(w, 0.3));
        assert_eq!(nonlocal_permittivity(&drude, 7.0).unwrap(), expect);
        assert_eq!(drude_permittivity(&drude).unwrap(), expect);
    }

    #[test]
    fn pole_is_reported() {
        let p = PhysicalParams { gamma: 0.0, ..PhysicalParams::unit() };
        assert!(matches!(nonlocal_permittivity(&p, 1.0), Err(Error::Pole(_))));
    }

    #[test]
    fn permittivity_tends_to_background_at_high_frequency() {
        let p = PhysicalParams { omega: 1e8, ..PhysicalParams::unit() };
        assert!((nonlocal_permittivity(&p, 1.0).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn manufactured_rejects_other_parameters() {
        let p = PhysicalParams { gamma: 0.5, ..PhysicalParams::unit() };
        assert!(manufactured_case_unit_cube(&p).is_err());
    }

    #[test]
    fn manufactured_closed_forms() {
        use std::f64::consts::PI;
        let m = manufactured_case_unit_cube(&PhysicalParams::unit()).unwrap();
        let x = Vec3::new(0.3, 0.6, 0.2);
        let f1 = m.f1(&x);
        assert!((f1[0] - Complex64::new(0.0, -(PI * 0.3).sin())).norm() < 1e-15);
        assert!((f1[1] - Complex64::new(0.0, -(PI * 0.6).sin())).norm() < 1e-15);
        assert!((f1[2] - Complex64::new((PI * 0.2).sin(), 0.0)).norm() < 1e-15);
        let f2x = Complex64::new(1.0 - PI * PI, 1.0) * (PI * 0.3).sin() - I * Complex64::new(0.0, -0.2).exp();
        assert!((m.f2(&x)[0] - f2x).norm() < 1e-14);
        let top = Vec3::new(0.4, 0.7, 1.0);
        let g = m.g(&top, &Vec3::z());
        let expect = CVec3::new(-2.0 * I * Complex64::new(0.0, -1.0).exp(), 0.0.into(), 0.0.into());
        assert!((g - expect).norm() < 1e-15);
    }

    #[test]
    fn manufactured_current_has_zero_normal_trace() {
        let m = manufactured_case_unit_cube(&PhysicalParams::unit()).unwrap();
        for p in random_points(20, 4) {
            for axis in 0..3 {
                for side in [0.0, 1.0] {
                    let mut x = p;
                    x[axis] = side;
                    assert!(m.j_exact(&x)[axis].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn manufactured_strong_form_matches_finite_differences() {
        let m = manufactured_case_unit_cube(&PhysicalParams::unit()).unwrap();
        let h = 1e-2;
        let e = |x: &Vec3| m.e_exact(x);
        let j = |x: &Vec3| m.j_exact(x);
        for x in random_points(100, 1) {
            let (gd_e, lap_e) = fd_grad_div_and_laplacian(&e, &x, h);
            let curl_curl = gd_e - lap_e;
            let r1 = curl_curl - m.e_exact(&x) - m.j_exact(&x) * I - m.f1(&x);
            assert!(r1.norm() < 1e-10, "f1 residual {}", r1.norm());
            let (gd_j, _) = fd_grad_div_and_laplacian(&j, &x, h);
            let r2 = m.j_exact(&x) * Complex64::new(1.0, 1.0) + gd_j - m.e_exact(&x) * I - m.f2(&x);
            assert!(r2.norm() < 1e-10, "f2 residual {}", r2.norm());
            assert!((fd_curl(&e, &x, h) - m.curl_e_exact(&x)).norm() < 1e-10);
            let div: Complex64 = (0..3).map(|k| d1(&j, &x, k, h)[k]).sum();
            assert!((div - m.div_j_exact(&x)).norm() < 1e-10);
        }
    }

    #[test]
    fn manufactured_boundary_data_matches_finite_differences() {
        let m = manufactured_case_unit_cube(&PhysicalParams::unit()).unwrap();
        let e = |x: &Vec3| m.e_exact(x);
        for (k, p) in random_points(100, 2).iter().enumerate() {
            let axis = k % 3;
            let side = (k / 3) % 2;
            let mut x = *p;
            x[axis] = side as f64;
            let n = Vec3::ith(axis, if side == 0 { -1.0 } else { 1.0 });
            let nc = n.map(Complex64::from);
            let curl = fd_curl(&e, &x, 1e-2);
            let et = nc.cross(&m.e_exact(&x)).cross(&nc);
            let expect = curl.cross(&nc) - et * I;
            assert!((m.g(&x, &n) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn plane_wave_satisfies_maxwell() {
        let w = IncidentWave::along_y(0.7);
        let e = |x: &Vec3| w.e(x);
        let h = |x: &Vec3| w.h(x);
        for x in random_points(20, 3) {
            // ∇×E = iωμH and ∇×H = -iωεE
            let ce = fd_curl(&e, &x, 1e-2);
            assert!((ce - w.h(&x) * (I * w.omega * w.mu)).norm() < 1e-12);
            let ch = fd_curl(&h, &x, 1e-2);
            assert!((ch + w.e(&x) * (I * w.omega * w.eps)).norm() < 1e-12);
            // H = -exp(iωy) e_z
            let expect = CVec3::new(0.0.into(), 0.0.into(), -(I * 0.7 * x.y).exp());
            assert!((w.h(&x) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn plane_wave_data_is_tangential() {
        let w = IncidentWave::along_y(1.3);
        let g = plane_wave_source(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
            let x = n * 20.0;
            assert!(g(&x, &n).dot(&n.map(Complex64::from)).norm() < 1e-13);
        }
        let zero = IncidentWave { amplitude: 0.0.into(), ..w };
        assert_eq!(zero.silver_muller_data(&Vec3::x(), &Vec3::x()), CVec3::zeros());
    }

    #[test]
    fn invalid_waves_rejected() {
        let one = Complex64::new(1.0, 0.0);
        assert!(IncidentWave::new(Vec3::y(), Vec3::y(), one, 1.0, 1.0, 1.0).is_err());
        assert!(IncidentWave::new(Vec3::y() * 2.0, Vec3::x(), one, 1.0, 1.0, 1.0).is_err());
        assert!(IncidentWave::new(Vec3::y(), Vec3::x(), one, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn nanosphere_units() {
        let p = PhysicalParams::nanosphere_scaled(1.0);
        assert!((p.omega_p - 0.028853).abs() < 1e-5);
        assert!((p.gamma / p.omega_p - 0.01).abs() < 1e-14);
        assert!((p.beta - 2.7652e-3).abs() < 1e-6);
        p.validate().unwrap();
    }

    #[test]
    fn validation() {
        assert!(PhysicalParams::unit().validate().is_ok());
        assert!(PhysicalParams { omega: 0.0, ..PhysicalParams::unit() }.validate().is_err());
        assert!(PhysicalParams { gamma: -1.0, ..PhysicalParams::unit() }.validate().is_err());
        assert!(PhysicalParams { eps2: 0.0, ..PhysicalParams::unit() }.validate().is_err());
    }
}
