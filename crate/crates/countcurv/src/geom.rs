//! Small fixed-dimension vector helpers over `&[f64]` slices.
//!
//! Points live in at most [`crate::lattice::MAX_DIM`] dimensions; the
//! runtime dimension is carried alongside the slices.

pub const MAXD: usize = 4;

pub type Vect = [f64; MAXD];

#[inline]
pub fn from_slice(x: &[f64]) -> Vect {
    let mut v = [0.0; MAXD];
    v[..x.len()].copy_from_slice(x);
    v
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vect {
    let mut out = [0.0; MAXD];
    for k in 0..a.len() {
        out[k] = a[k] - b[k];
    }
    out
}

#[inline]
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vect {
    let mut out = [0.0; MAXD];
    for k in 0..a.len() {
        out[k] = a[k] + s * b[k];
    }
    out
}

#[inline]
pub fn dot(a: &[f64], b: &[f64], dim: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..dim {
        acc += a[k] * b[k];
    }
    acc
}

#[inline]
pub fn norm2(a: &[f64], dim: usize) -> f64 {
    dot(a, a, dim)
}

#[inline]
pub fn norm(a: &[f64], dim: usize) -> f64 {
    norm2(a, dim).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64], dim: usize) -> f64 {
    let mut acc = 0.0;
    for k in 0..dim {
        let d = a[k] - b[k];
        acc += d * d;
    }
    acc.sqrt()
}

#[inline]
pub fn scale(a: &[f64], s: f64, dim: usize) -> Vect {
    let mut out = [0.0; MAXD];
    for k in 0..dim {
        out[k] = a[k] * s;
    }
    out
}

#[inline]
pub fn midpoint(a: &[f64], b: &[f64], dim: usize) -> Vect {
    let mut out = [0.0; MAXD];
    for k in 0..dim {
        out[k] = 0.5 * (a[k] + b[k]);
    }
    out
}

/// Normalizes in place; returns the original norm.
#[inline]
pub fn normalize(a: &mut [f64], dim: usize) -> f64 {
    let n = norm(a, dim);
    if n > 0.0 {
        for k in 0..dim {
            a[k] /= n;
        }
    }
    n
}
