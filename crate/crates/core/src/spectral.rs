//! Coefficients with respect to the orthonormal quasi-periodic basis
//! `φ_j(x) = (4πρ)^{-1/2} exp(i(j1+α)x1 + i j2 π x2/ρ)` and the discrete
//! transforms to and from collocation samples.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::problem::Grid;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients `ĉ(j)` in FFT-natural order, `coeffs[i1 * N2 + i2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub alpha: f64,
    pub coeffs: Vec<Complex64>,
}

/// Two-component field `(g1, g2)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSpectralField {
    pub g1: SpectralField,
    pub g2: SpectralField,
}

impl SpectralField {
    pub fn zeros(grid: Grid, alpha: f64) -> Self {
        SpectralField { grid, alpha, coeffs: vec![ZERO; grid.len()] }
    }

    pub fn from_coeffs(grid: Grid, alpha: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), found: coeffs.len() });
        }
        Ok(SpectralField { grid, alpha, coeffs })
    }

    /// The basis function `φ_j`.
    pub fn basis(grid: Grid, alpha: f64, j: [i64; 2]) -> Option<Self> {
        let mut f = Self::zeros(grid, alpha);
        let idx = grid.index(grid.slot1(j[0])?, grid.slot2(j[1])?);
        f.coeffs[idx] = Complex64::new(1.0, 0.0);
        Some(f)
    }

    pub fn coeff(&self, j: [i64; 2]) -> Option<Complex64> {
        Some(self.coeffs[self.grid.index(self.grid.slot1(j[0])?, self.grid.slot2(j[1])?)])
    }

    /// Squared L² norm on the period cell (Parseval).
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        SpectralField { grid: self.grid, alpha: self.alpha, coeffs }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        SpectralField { grid: self.grid, alpha: self.alpha, coeffs }
    }

    pub fn scale(&self, s: Complex64) -> SpectralField {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        SpectralField { grid: self.grid, alpha: self.alpha, coeffs }
    }

    /// Copies coefficients by frequency onto another grid with the same `ρ_box`,
    /// zero-padding or truncating as needed.
    pub fn resample(&self, target: Grid) -> SpectralField {
        let mut out = SpectralField::zeros(target, self.alpha);
        for i1 in 0..self.grid.n1() {
            let Some(t1) = target.slot1(self.grid.freq1(i1)) else { continue };
            for i2 in 0..self.grid.n2() {
                let Some(t2) = target.slot2(self.grid.freq2(i2)) else { continue };
                out.coeffs[target.index(t1, t2)] = self.coeffs[self.grid.index(i1, i2)];
            }
        }
        out
    }

    /// Evaluates the trigonometric polynomial at an arbitrary point.
    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        let g = &self.grid;
        let e1: Vec<Complex64> = (0..g.n1()).map(|i1| (I * (g.freq1(i1) as f64 * x[0])).exp()).collect();
        let e2: Vec<Complex64> = (0..g.n2()).map(|i2| (I * (g.kz(g.freq2(i2)) * x[1])).exp()).collect();
        let mut sum = ZERO;
        for (i1, a) in e1.iter().enumerate() {
            let row = &self.coeffs[i1 * g.n2()..(i1 + 1) * g.n2()];
            let inner: Complex64 = row.iter().zip(&e2).map(|(c, b)| c * b).sum();
            sum += a * inner;
        }
        (I * self.alpha * x[0]).exp() * sum / (4.0 * PI * g.rho_box()).sqrt()
    }
}

impl VectorSpectralField {
    pub fn zeros(grid: Grid, alpha: f64) -> Self {
        VectorSpectralField { g1: SpectralField::zeros(grid, alpha), g2: SpectralField::zeros(grid, alpha) }
    }
}

/// FFT plans and phase factors for one grid and one α.
#[derive(Clone)]
pub struct Transform {
    grid: Grid,
    alpha: f64,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
    /// `e^{iαx1}` at each column of nodes.
    phase: Vec<Complex64>,
    /// `(−1)^{j}` per storage position along each axis.
    sign1: Vec<f64>,
    sign2: Vec<f64>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("grid", &self.grid).field("alpha", &self.alpha).finish()
    }
}

fn parity(j: i64) -> f64 {
    if j.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Transform {
    pub fn new(grid: Grid, alpha: f64) -> Self {
        let mut planner = FftPlanner::new();
        let phase = (0..grid.n1()).map(|m| (I * alpha * grid.x1(m)).exp()).collect();
        Transform {
            fwd1: planner.plan_fft_forward(grid.n1()),
            inv1: planner.plan_fft_inverse(grid.n1()),
            fwd2: planner.plan_fft_forward(grid.n2()),
            inv2: planner.plan_fft_inverse(grid.n2()),
            phase,
            sign1: (0..grid.n1()).map(|i| parity(grid.freq1(i))).collect(),
            sign2: (0..grid.n2()).map(|i| parity(grid.freq2(i))).collect(),
            grid,
            alpha,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn fft2(&self, data: &mut [Complex64], forward: bool) {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let (f1, f2) = if forward { (&self.fwd1, &self.fwd2) } else { (&self.inv1, &self.inv2) };
        data.par_chunks_mut(n2).for_each(|row| f2.process(row));
        let mut t = vec![ZERO; n1 * n2];
        for m1 in 0..n1 {
            for m2 in 0..n2 {
                t[m2 * n1 + m1] = data[m1 * n2 + m2];
            }
        }
        t.par_chunks_mut(n1).for_each(|col| f1.process(col));
        for m1 in 0..n1 {
            for m2 in 0..n2 {
                data[m1 * n2 + m2] = t[m2 * n1 + m1];
            }
        }
    }

    /// Samples at the nodes (`values[m1 * N2 + m2]`) to coefficients.
    pub fn to_spectral(&self, values: &[Complex64]) -> Result<SpectralField> {
        let g = &self.grid;
        if values.len() != g.len() {
            return Err(Error::ShapeMismatch { expected: g.len(), found: values.len() });
        }
        let n2 = g.n2();
        let mut data: Vec<Complex64> = values
            .par_chunks(n2)
            .enumerate()
            .flat_map_iter(|(m1, row)| {
                let p = self.phase[m1].conj();
                row.iter().map(move |v| v * p)
            })
            .collect();
        self.fft2(&mut data, true);
        let scale = g.cell_area() / (4.0 * PI * g.rho_box()).sqrt();
        data.par_chunks_mut(n2).enumerate().for_each(|(i1, row)| {
            let s1 = self.sign1[i1] * scale;
            for (c, s2) in row.iter_mut().zip(&self.sign2) {
                *c *= s1 * s2;
            }
        });
        Ok(SpectralField { grid: *g, alpha: self.alpha, coeffs: data })
    }

    /// Coefficients to samples at the nodes.
    pub fn to_physical(&self, field: &SpectralField) -> Result<Vec<Complex64>> {
        let g = &self.grid;
        if field.coeffs.len() != g.len() {
            return Err(Error::ShapeMismatch { expected: g.len(), found: field.coeffs.len() });
        }
        let n2 = g.n2();
        let mut data = field.coeffs.clone();
        data.par_chunks_mut(n2).enumerate().for_each(|(i1, row)| {
            let s1 = self.sign1[i1];
            for (c, s2) in row.iter_mut().zip(&self.sign2) {
                *c *= s1 * s2;
            }
        });
        self.fft2(&mut data, false);
        let scale = 1.0 / (4.0 * PI * g.rho_box()).sqrt();
        data.par_chunks_mut(n2).enumerate().for_each(|(m1, row)| {
            let p = self.phase[m1] * scale;
            for v in row.iter_mut() {
                *v *= p;
            }
        });
        Ok(data)
    }
}

/// One-shot forward transform.
pub fn to_spectral(grid: Grid, alpha: f64, values: &[Complex64]) -> Result<SpectralField> {
    Transform::new(grid, alpha).to_spectral(values)
}

/// One-shot inverse transform.
pub fn to_physical(field: &SpectralField) -> Result<Vec<Complex64>> {
    Transform::new(field.grid, field.alpha).to_physical(field)
}
