//! Symmetric Gauss rules on the reference triangle and Gauss–Legendre rules
//! on the unit interval.
//!
//! Triangle rules are stored as barycentric points with weights summing to
//! the reference area 1/2. All weights are positive. Degrees 3 and 7 reuse
//! the next rule up, since the minimal symmetric rules of those degrees carry
//! a negative weight.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    /// Barycentric coordinates `(l0, l1, l2)`; the reference point is `(l1, l2)`.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(reference point, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(b, &w)| ([b[1], b[2]], w))
    }
}

enum Orbit {
    Centroid(f64),
    /// `(a, a, 1 − 2a)` and permutations.
    Two(f64, f64),
    /// all permutations of `(a, b, 1 − a − b)`.
    Six(f64, f64, f64),
}

fn expand(degree: usize, orbits: &[Orbit]) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for orbit in orbits {
        match *orbit {
            Orbit::Centroid(w) => {
                points.push([1.0 / 3.0; 3]);
                weights.push(0.5 * w);
            }
            Orbit::Two(a, w) => {
                let b = 1.0 - 2.0 * a;
                for p in [[a, a, b], [a, b, a], [b, a, a]] {
                    points.push(p);
                    weights.push(0.5 * w);
                }
            }
            Orbit::Six(a, b, w) => {
                let c = 1.0 - a - b;
                for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    points.push(p);
                    weights.push(0.5 * w);
                }
            }
        }
    }
    QuadratureRule {
        degree,
        points,
        weights,
    }
}

/// Symmetric rule exact for polynomials of total degree `degree` (1..=9).
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    use Orbit::*;
    let rule = match degree {
        1 => expand(1, &[Centroid(1.0)]),
        2 => expand(2, &[Two(1.0 / 6.0, 1.0 / 3.0)]),
        3 | 4 => expand(
            degree,
            &[
                Two(0.445_948_490_915_964_83, 0.223_381_589_678_011_36),
                Two(0.091_576_213_509_770_76, 0.109_951_743_655_321_95),
            ],
        ),
        5 => {
            let s = 15f64.sqrt();
            expand(
                5,
                &[
                    Centroid(9.0 / 40.0),
                    Two((6.0 + s) / 21.0, (155.0 + s) / 1200.0),
                    Two((6.0 - s) / 21.0, (155.0 - s) / 1200.0),
                ],
            )
        }
        6 => expand(
            6,
            &[
                Two(0.249_286_745_170_926_4, 0.116_786_275_726_353_42),
                Two(0.063_089_014_491_499_12, 0.050_844_906_370_202_315),
                Six(0.053_145_049_844_827_71, 0.310_352_451_033_772_46, 0.082_851_075_618_388_82),
            ],
        ),
        7 | 8 => expand(
            degree,
            &[
                Centroid(0.144_315_607_677_787),
                Two(0.459_292_588_292_723, 0.095_091_634_267_285),
                Two(0.170_569_307_751_760, 0.103_217_370_534_718),
                Two(0.050_547_228_317_031, 0.032_458_497_623_198),
                Six(0.008_394_777_409_958, 0.263_112_829_634_638, 0.027_230_314_174_435),
            ],
        ),
        9 => expand(
            9,
            &[
                Centroid(0.097_135_796_285_723_12),
                Two(0.489_682_519_200_193_84, 0.031_334_700_224_536_67),
                Two(0.437_089_591_495_078_03, 0.077_827_541_005_979_37),
                Two(0.188_203_535_619_671, 0.079_647_738_927_195),
                Two(0.044_729_513_394_389_714, 0.025_577_675_658_628_153),
                Six(0.036_838_412_055_021_01, 0.221_962_989_160_433_44, 0.043_283_539_377_543_236),
            ],
        ),
        d => return Err(Error::QuadratureDegree(d)),
    };
    Ok(rule)
}

/// Three-point Gauss–Legendre rule on `[0, 1]` (exact to degree 5).
pub fn gauss_legendre_3() -> [(f64, f64); 3] {
    let d = 0.5 * (3.0f64 / 5.0).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
