//! Quaternion helpers on raw `[w, x, y, z]` arrays, with the derivatives
//! the loss needs.

use nalgebra::{Quaternion, Vector3};

pub(crate) type Q = [f64; 4];

pub(crate) fn norm(q: &Q) -> f64 {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt()
}

pub(crate) fn normalized(q: &Q) -> Q {
    let n = norm(q);
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

pub(crate) fn conj(q: &Q) -> Q {
    [q[0], -q[1], -q[2], -q[3]]
}

pub(crate) fn dot(a: &Q, b: &Q) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub(crate) fn mul(a: &Q, b: &Q) -> Q {
    let p = Quaternion::new(a[0], a[1], a[2], a[3]) * Quaternion::new(b[0], b[1], b[2], b[3]);
    [p.w, p.i, p.j, p.k]
}

/// `R(q) x` for a unit quaternion.
pub(crate) fn rotate(q: &Q, x: &Vector3<f64>) -> Vector3<f64> {
    let w = q[0];
    let v = Vector3::new(q[1], q[2], q[3]);
    x * (w * w - v.dot(&v)) + v * (2.0 * v.dot(x)) + v.cross(x) * (2.0 * w)
}

/// Gradient of `g · R(q) x` with respect to the four components of `q`,
/// holding the rotation formula's unit-norm form fixed.
pub(crate) fn rotate_grad(q: &Q, x: &Vector3<f64>, g: &Vector3<f64>) -> Q {
    let w = q[0];
    let v = Vector3::new(q[1], q[2], q[3]);
    let gw = 2.0 * (w * g.dot(x) + g.dot(&v.cross(x)));
    let gv = x * (2.0 * v.dot(g)) - v * (2.0 * x.dot(g)) + g * (2.0 * v.dot(x)) + x.cross(g) * (2.0 * w);
    [gw, gv.x, gv.y, gv.z]
}

/// Gradient of `g · R(q)ᵀ x` with respect to `q`.
pub(crate) fn rotate_t_grad(q: &Q, x: &Vector3<f64>, g: &Vector3<f64>) -> Q {
    let d = rotate_grad(&conj(q), x, g);
    [d[0], -d[1], -d[2], -d[3]]
}

/// Chains a gradient taken at `q / |q|` back to the raw components.
pub(crate) fn through_normalization(raw: &Q, g: &Q) -> Q {
    let n = norm(raw);
    let u = [raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n];
    let s = dot(&u, g);
    [(g[0] - u[0] * s) / n, (g[1] - u[1] * s) / n, (g[2] - u[2] * s) / n, (g[3] - u[3] * s) / n]
}
