//! Small 2×2 matrix types for contrast tensors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex symmetric (not Hermitian) 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a22: Complex64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        a11: Complex64::new(0.0, 0.0),
        a12: Complex64::new(0.0, 0.0),
        a22: Complex64::new(0.0, 0.0),
    };

    pub fn new(a11: Complex64, a12: Complex64, a22: Complex64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub fn scalar(q: Complex64) -> Self {
        Sym2 { a11: q, a12: Complex64::new(0.0, 0.0), a22: q }
    }

    pub fn diag(d1: Complex64, d2: Complex64) -> Self {
        Sym2 { a11: d1, a12: Complex64::new(0.0, 0.0), a22: d2 }
    }

    pub fn identity() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// True when the matrix is `q·I` with real `q`.
    pub fn is_real_scalar(&self) -> bool {
        self.a12 == Complex64::new(0.0, 0.0)
            && self.a11 == self.a22
            && self.a11.im == 0.0
    }

    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a12 * v[0] + self.a22 * v[1],
        ]
    }

    pub fn sub(&self, other: &Sym2) -> Sym2 {
        Sym2 {
            a11: self.a11 - other.a11,
            a12: self.a12 - other.a12,
            a22: self.a22 - other.a22,
        }
    }

    pub fn scale(&self, s: Complex64) -> Sym2 {
        Sym2 { a11: self.a11 * s, a12: self.a12 * s, a22: self.a22 * s }
    }

    pub fn conj(&self) -> Sym2 {
        Sym2 { a11: self.a11.conj(), a12: self.a12.conj(), a22: self.a22.conj() }
    }

    pub fn frobenius(&self) -> f64 {
        (self.a11.norm_sqr() + 2.0 * self.a12.norm_sqr() + self.a22.norm_sqr()).sqrt()
    }

    pub fn re(&self) -> RealSym2 {
        RealSym2 { a: self.a11.re, b: self.a12.re, c: self.a22.re }
    }

    pub fn im(&self) -> RealSym2 {
        RealSym2 { a: self.a11.im, b: self.a12.im, c: self.a22.im }
    }
}

/// Real symmetric 2×2 matrix `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RealSym2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Eigendecomposition `M = Uᵀ diag(λ1, λ2) U` with `U` the rotation by `angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigen2 {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Rotation angle θ such that the eigenvectors are (cos θ, sin θ) and (−sin θ, cos θ).
    pub angle: f64,
}

impl RealSym2 {
    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn eigen(&self) -> Eigen2 {
        let angle = 0.5 * (2.0 * self.b).atan2(self.a - self.c);
        let (s, c) = angle.sin_cos();
        // Rayleigh quotients along the rotated axes; exact for the diagonalizing angle.
        let lambda1 = c * c * self.a + 2.0 * s * c * self.b + s * s * self.c;
        let lambda2 = s * s * self.a - 2.0 * s * c * self.b + c * c * self.c;
        Eigen2 { lambda1, lambda2, angle }
    }

    pub fn inverse(&self) -> Option<RealSym2> {
        let det = self.det();
        if det == 0.0 {
            return None;
        }
        Some(RealSym2 { a: self.c / det, b: -self.b / det, c: self.a / det })
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }
}

impl Eigen2 {
    /// Rebuilds `Uᵀ diag(f(λ1), f(λ2)) U`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealSym2 {
        let (s, c) = self.angle.sin_cos();
        let (l1, l2) = (f(self.lambda1), f(self.lambda2));
        RealSym2 {
            a: c * c * l1 + s * s * l2,
            b: s * c * (l1 - l2),
            c: s * s * l1 + c * c * l2,
        }
    }
}

/// General real 2×2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real2x2(pub [[f64; 2]; 2]);

impl Real2x2 {
    pub fn product(a: &RealSym2, b: &RealSym2) -> Real2x2 {
        Real2x2([
            [a.a * b.a + a.b * b.b, a.a * b.b + a.b * b.c],
            [a.b * b.a + a.c * b.b, a.b * b.b + a.c * b.c],
        ])
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let [[p, q], [r, s]] = self.0;
        let fro2 = p * p + q * q + r * r + s * s;
        let det = p * s - q * r;
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        (0.5 * (fro2 + disc)).sqrt()
    }
}
