//! Symmetric quadrature rules with positive weights on the reference
//! tetrahedron `{(0,0,0),(1,0,0),(0,1,0),(0,0,1)}` (volume 1/6) and the
//! reference triangle `{(0,0),(1,0),(0,1)}` (area 1/2).

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

pub type TetRule = QuadratureRule<3>;
pub type TriRule = QuadratureRule<2>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; D], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

pub const MAX_DEGREE: usize = 6;

/// Builds a rule from barycentric orbits `(barycentric, weight)` where the
/// barycentric tuple is expanded over all its distinct permutations.
fn from_orbits<const D: usize, const B: usize>(orbits: &[([f64; B], f64)], exact_degree: usize) -> QuadratureRule<D> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (bary, w) in orbits {
        let mut perms: Vec<[f64; B]> = Vec::new();
        permutations(*bary, &mut |p| {
            if !perms.iter().any(|q| q == &p) {
                perms.push(p);
            }
        });
        for p in perms {
            let mut x = [0.0; D];
            x.copy_from_slice(&p[1..]);
            points.push(x);
            weights.push(*w);
        }
    }
    QuadratureRule {
        points,
        weights,
        exact_degree,
    }
}

fn permutations<const B: usize>(v: [f64; B], f: &mut impl FnMut([f64; B])) {
    fn rec<const B: usize>(v: &mut [f64; B], k: usize, f: &mut impl FnMut([f64; B])) {
        if k == B {
            f(*v);
            return;
        }
        for i in k..B {
            v.swap(k, i);
            rec(v, k + 1, f);
            v.swap(k, i);
        }
    }
    let mut v = v;
    rec(&mut v, 0, f);
}

/// Rule on the reference tetrahedron exact for polynomials of total degree
/// `degree` (the returned rule may be exact to a higher degree).
pub fn tet_rule(degree: usize) -> Result<TetRule> {
    let rule = match degree {
        0 | 1 => from_orbits(&[([0.25; 4], 1.0 / 6.0)], 1),
        2 => {
            let a = 0.138_196_601_125_010_5;
            let b = 1.0 - 3.0 * a;
            from_orbits(&[([b, a, a, a], 1.0 / 24.0)], 2)
        }
        3..=5 => {
            // 14-point degree-5 rule (Walkington).
            let a1 = 0.092_735_250_310_891_226_402_82;
            let a2 = 0.310_885_919_263_300_609_797_35;
            let a3 = 0.045_503_704_125_649_649_492_7;
            let b3 = 0.5 - a3;
            from_orbits(
                &[
                    ([1.0 - 3.0 * a1, a1, a1, a1], 0.073_493_043_116_361_949_544_6 / 6.0),
                    ([1.0 - 3.0 * a2, a2, a2, a2], 0.112_687_925_718_015_850_799_4 / 6.0),
                    ([a3, a3, b3, b3], 0.042_546_020_777_081_466_438_1 / 6.0),
                ],
                5,
            )
        }
        6 => {
            // 24-point degree-6 rule (Keast).
            let a1 = 0.214_602_871_259_151_684;
            let a2 = 0.040_673_958_534_611_339_7;
            let a3 = 0.322_337_890_142_275_646;
            let (b, c, d) = (
                0.063_661_001_875_017_529_9,
                0.269_672_331_458_315_867,
                0.603_005_664_791_649_076,
            );
            from_orbits(
                &[
                    ([1.0 - 3.0 * a1, a1, a1, a1], 0.006_653_791_709_694_645_06),
                    ([1.0 - 3.0 * a2, a2, a2, a2], 0.001_679_535_175_886_776_20),
                    ([1.0 - 3.0 * a3, a3, a3, a3], 0.009_226_196_923_942_398_43),
                    ([b, b, c, d], 0.008_035_714_285_714_282_48),
                ],
                6,
            )
        }
        _ => return Err(invalid(format!("tetrahedron rule degree {degree} not in [0, {MAX_DEGREE}]"))),
    };
    Ok(rule)
}

/// Rule on the reference triangle exact for polynomials of total degree `degree`.
pub fn tri_rule(degree: usize) -> Result<TriRule> {
    let rule = match degree {
        0 | 1 => from_orbits(&[([1.0 / 3.0; 3], 0.5)], 1),
        2 => from_orbits(&[([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 6.0)], 2),
        3 | 4 => {
            let a1 = 0.445_948_490_915_965;
            let a2 = 0.091_576_213_509_771;
            from_orbits(
                &[
                    ([1.0 - 2.0 * a1, a1, a1], 0.223_381_589_678_011 / 2.0),
                    ([1.0 - 2.0 * a2, a2, a2], 0.109_951_743_655_322 / 2.0),
                ],
                4,
            )
        }
        5 => {
            let a1 = 0.470_142_064_105_115;
            let a2 = 0.101_286_507_323_456;
            from_orbits(
                &[
                    ([1.0 / 3.0; 3], 0.225 / 2.0),
                    ([1.0 - 2.0 * a1, a1, a1], 0.132_394_152_788_506 / 2.0),
                    ([1.0 - 2.0 * a2, a2, a2], 0.125_939_180_544_827 / 2.0),
                ],
                5,
            )
        }
        6 => {
            let a1 = 0.249_286_745_170_910;
            let a2 = 0.063_089_014_491_502;
            from_orbits(
                &[
                    ([1.0 - 2.0 * a1, a1, a1], 0.116_786_275_726_379 / 2.0),
                    ([1.0 - 2.0 * a2, a2, a2], 0.050_844_906_370_207 / 2.0),
                    (
                        [0.053_145_049_844_817, 0.310_352_451_033_784, 0.636_502_499_121_399],
                        0.082_851_075_618_374 / 2.0,
                    ),
                ],
                6,
            )
        }
        _ => return Err(invalid(format!("triangle rule degree {degree} not in [0, {MAX_DEGREE}]"))),
    };
    Ok(rule)
}

/// Gauss–Legendre rule on `[0, 1]` with `n` points (exact to degree `2n - 1`), `n` in 1..=4.
pub fn gauss_line(n: usize) -> Vec<(f64, f64)> {
    let (x, w): (&[f64], &[f64]) = match n {
        1 => (&[0.0], &[2.0]),
        2 => (&[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8], &[1.0, 1.0]),
        3 => (
            &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        ),
        4 => (
            &[
                -0.861_136_311_594_052_6,
                -0.339_981_043_584_856_3,
                0.339_981_043_584_856_3,
                0.861_136_311_594_052_6,
            ],
            &[
                0.347_854_845_137_453_9,
                0.652_145_154_862_546_1,
                0.652_145_154_862_546_1,
                0.347_854_845_137_453_9,
            ],
        ),
        _ => panic!("gauss_line supports 1..=4 points"),
    };
    x.iter().zip(w).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}
