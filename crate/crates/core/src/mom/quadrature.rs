//! Symmetric quadrature rules on triangles in barycentric form.

use crate::vec3::Vec3;

/// Points as barycentric triples with weights summing to one, so that
/// `integral = area * sum(w_i f(p_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Seven-point rule exact for polynomials of degree 5.
    pub fn seven_point() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        let third = 1.0 / 3.0;
        let b1 = 1.0 - 2.0 * a1;
        let b2 = 1.0 - 2.0 * a2;
        TriangleRule {
            points: vec![
                [third, third, third],
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: vec![0.225, w1, w1, w1, w2, w2, w2],
        }
    }

    /// The seven-point rule applied on the four midpoint subtriangles.
    pub fn composite_28() -> Self {
        Self::seven_point().subdivided(1)
    }

    /// This rule applied on the `4^levels` triangles of repeated midpoint
    /// subdivision.
    pub fn subdivided(&self, levels: u32) -> Self {
        let mut subs = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
        for _ in 0..levels {
            let mut next = Vec::with_capacity(subs.len() * 4);
            for [a, b, c] in subs {
                let mid = |p: [f64; 3], q: [f64; 3]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])];
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]]);
            }
            subs = next;
        }
        let scale = 1.0 / subs.len() as f64;
        let mut points = Vec::with_capacity(subs.len() * self.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for sub in &subs {
            for (p, &w) in self.points.iter().zip(&self.weights) {
                let mut q = [0.0; 3];
                for (corner, &pc) in sub.iter().zip(p) {
                    for k in 0..3 {
                        q[k] += pc * corner[k];
                    }
                }
                points.push(q);
                weights.push(w * scale);
            }
        }
        TriangleRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical points on triangle `tri`.
    pub fn map(&self, tri: [Vec3; 3]) -> Vec<Vec3> {
        self.points
            .iter()
            .map(|b| {
                let mut p = [0.0; 3];
                for k in 0..3 {
                    p[k] = b[0] * tri[0][k] + b[1] * tri[1][k] + b[2] * tri[2][k];
                }
                p
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Integral of x^a y^b over the unit right triangle divided by its area.
    fn monomial_mean(a: u32, b: u32) -> f64 {
        2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn rule_mean(rule: &TriangleRule, a: u32, b: u32) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
            .sum()
    }

    #[test]
    fn weights_sum_to_one() {
        for rule in [TriangleRule::seven_point(), TriangleRule::composite_28()] {
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for p in &rule.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
                assert!(p.iter().all(|&c| c > 0.0));
            }
        }
    }

    #[test]
    fn exact_through_degree_five() {
        let deep = TriangleRule::seven_point().subdivided(3);
        assert_eq!(deep.len(), 7 * 64);
        for rule in [TriangleRule::seven_point(), TriangleRule::composite_28(), deep] {
            for a in 0..=5 {
                for b in 0..=5 - a {
                    let err = (rule_mean(&rule, a, b) - monomial_mean(a, b)).abs();
                    assert!(err < 1e-15, "x^{a} y^{b}: {err}");
                }
            }
        }
    }

    #[test]
    fn seven_point_is_not_exact_at_degree_six() {
        let rule = TriangleRule::seven_point();
        assert!((rule_mean(&rule, 6, 0) - monomial_mean(6, 0)).abs() > 1e-6);
    }
}
