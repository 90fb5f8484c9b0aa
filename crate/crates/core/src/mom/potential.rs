//! Closed-form integrals of the static kernel `1/R` over a flat triangle.

use crate::vec3::{self, Vec3};

/// `scalar = ∫ 1/|r - r'| dS'` and `vector = ∫ r' / |r - r'| dS'` over the
/// triangle with vertices `tri`, for an observation point `r` anywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticIntegrals {
    pub scalar: f64,
    pub vector: Vec3,
}

/// `ln((R+ + s+)/(R- + s-))` in the form that avoids cancellation.
fn edge_log(s_plus: f64, s_minus: f64, r_plus: f64, r_minus: f64) -> f64 {
    if s_plus + s_minus >= 0.0 {
        ((r_plus + s_plus) / (r_minus + s_minus)).ln()
    } else {
        ((r_minus - s_minus) / (r_plus - s_plus)).ln()
    }
}

pub fn static_integrals(r: Vec3, tri: [Vec3; 3]) -> StaticIntegrals {
    let e1 = vec3::sub(tri[1], tri[0]);
    let e2 = vec3::sub(tri[2], tri[0]);
    let normal = vec3::normalize(vec3::cross(e1, e2));
    let d = vec3::dot(vec3::sub(r, tri[0]), normal);
    let rho = vec3::sub(r, vec3::scale(normal, d));
    let scale = vec3::norm(e1).max(vec3::norm(e2));
    let tiny = 1e-12 * scale;

    let mut scalar = 0.0;
    let mut in_plane = [0.0; 3];
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let len = vec3::dist(a, b);
        let t_hat = vec3::scale(vec3::sub(b, a), 1.0 / len);
        let u_hat = vec3::cross(t_hat, normal);
        let s_minus = vec3::dot(vec3::sub(a, rho), t_hat);
        let s_plus = vec3::dot(vec3::sub(b, rho), t_hat);
        let t0 = vec3::dot(vec3::sub(a, rho), u_hat);
        let r0_sq = t0 * t0 + d * d;
        let r_minus = vec3::dist(r, a);
        let r_plus = vec3::dist(r, b);
        let on_line = r0_sq.sqrt() < tiny;
        let f2 = if on_line { 0.0 } else { edge_log(s_plus, s_minus, r_plus, r_minus) };
        let beta = if on_line || t0.abs() < tiny {
            0.0
        } else {
            (t0 * s_plus / (r0_sq + d.abs() * r_plus)).atan() - (t0 * s_minus / (r0_sq + d.abs() * r_minus)).atan()
        };
        scalar += t0 * f2 - d.abs() * beta;
        let edge_term = r0_sq * f2 + s_plus * r_plus - s_minus * r_minus;
        in_plane = vec3::add(in_plane, vec3::scale(u_hat, 0.5 * edge_term));
    }
    StaticIntegrals {
        scalar,
        vector: vec3::add(in_plane, vec3::scale(rho, scalar)),
    }
}
