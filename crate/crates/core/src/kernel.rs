//! Wendland C2 ("quintic") smoothing kernel with support radius 2h.
//!
//! ```text
//! W(q) = sigma_d / h^d * (1 - q/2)^4 * (1 + 2q),   q = r/h < 2
//! sigma_2 = 7 / (4 pi),  sigma_3 = 21 / (16 pi)
//! ```

use std::f64::consts::PI;

use crate::neighbor::NeighborList;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub h: f64,
    pub dim: usize,
    pub support_radius: f64,
    pub norm_const: f64,
}

impl KernelSpec {
    /// Panics when `h <= 0` or `dim` is not 2 or 3.
    pub fn new(h: f64, dim: usize) -> Self {
        assert!(h > 0.0 && h.is_finite(), "smoothing length must be positive, got {h}");
        let sigma = match dim {
            2 => 7.0 / (4.0 * PI),
            3 => 21.0 / (16.0 * PI),
            _ => panic!("kernel dimension must be 2 or 3, got {dim}"),
        };
        Self {
            h,
            dim,
            support_radius: 2.0 * h,
            norm_const: sigma / h.powi(dim as i32),
        }
    }

    /// Smoothing length for a lattice spacing (h = 1.3 dx).
    pub fn for_spacing(dx: f64, dim: usize) -> Self {
        Self::new(1.3 * dx, dim)
    }

    pub fn value(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "kernel distance must be non-negative, got {r}");
        let q = r / self.h;
        if q >= 2.0 {
            return 0.0;
        }
        let t = 1.0 - 0.5 * q;
        let t2 = t * t;
        self.norm_const * t2 * t2 * (1.0 + 2.0 * q)
    }

    /// dW/dr, non-positive on [0, 2h).
    pub fn derivative(&self, r: f64) -> f64 {
        let q = r / self.h;
        if q >= 2.0 {
            return 0.0;
        }
        let t = 1.0 - 0.5 * q;
        -5.0 * q * t * t * t * self.norm_const / self.h
    }

    /// Gradient of W with respect to the position of the particle the
    /// displacement `r_vec = r_a - r_b` points to.
    pub fn gradient(&self, r_vec: &Vec3) -> Vec3 {
        let r = r_vec.norm();
        if r == 0.0 || r >= self.support_radius {
            return Vec3::zeros();
        }
        r_vec * (self.derivative(r) / r)
    }
}

pub fn kernel_value(r: f64, spec: &KernelSpec) -> f64 {
    spec.value(r)
}

pub fn kernel_gradient(r_vec: &Vec3, spec: &KernelSpec) -> Vec3 {
    spec.gradient(r_vec)
}

/// Shepard-normalized kernel mean of `values` around particle `a`:
/// `sum_b V_b F_b W_ab / sum_b V_b W_ab`, self term included.
///
/// Falls back to the particle's own value when the weight sum vanishes.
pub fn shepard_weighted_mean(
    a: usize,
    values: &[f64],
    volumes: &[f64],
    neighbors: &NeighborList,
    spec: &KernelSpec,
) -> f64 {
    let w0 = spec.value(0.0);
    let mut num = volumes[a] * values[a] * w0;
    let mut den = volumes[a] * w0;
    for n in neighbors.of(a) {
        let vw = volumes[n.j] * n.w;
        num += vw * values[n.j];
        den += vw;
    }
    if den > 0.0 {
        num / den
    } else {
        values[a]
    }
}
