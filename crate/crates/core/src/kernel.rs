//! Closed-form Fourier coefficients of the periodized quasi-periodic Green's kernel.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{check_order, Grid, IncidentWave};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative threshold on `|λ_j|` below which the degenerate branch is used.
pub const LAMBDA_EPS: f64 = 1e-8;

/// Squared wavenumber and quasi-periodicity. `k_squared = −1` gives the
/// kernel of `Δ − 1` used for the coercive reference operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub k_squared: f64,
    pub alpha: f64,
}

impl KernelParams {
    pub fn new(k_squared: f64, alpha: f64) -> Self {
        KernelParams { k_squared, alpha }
    }

    pub fn from_wave(wave: &IncidentWave) -> Self {
        KernelParams { k_squared: wave.k() * wave.k(), alpha: wave.alpha() }
    }

    /// Parameters of the coercive reference operator (`k² = −1`, same α).
    pub fn coercive(alpha: f64) -> Self {
        KernelParams { k_squared: -1.0, alpha }
    }

    fn lambda_eps(&self) -> f64 {
        LAMBDA_EPS * self.k_squared.abs().max(1.0)
    }

    pub fn beta(&self, j1: i64) -> Result<Complex64> {
        let aj = j1 as f64 + self.alpha;
        check_order(self.k_squared, self.alpha, j1).map_err(|_| Error::RayleighAnomaly {
            order: j1,
            k: self.k_squared.max(0.0).sqrt(),
            alpha: self.alpha,
        })?;
        Ok(sqrt_upper(self.k_squared - aj * aj))
    }

    pub fn lambda(&self, j: [i64; 2], rho_box: f64) -> f64 {
        let aj = j[0] as f64 + self.alpha;
        let kz = j[1] as f64 * PI / rho_box;
        self.k_squared - aj * aj - kz * kz
    }

    /// Coefficient and whether the degenerate branch was taken.
    pub fn coefficient(&self, j: [i64; 2], rho_box: f64) -> Result<(Complex64, bool)> {
        let beta = self.beta(j[0])?;
        let lambda = self.lambda(j, rho_box);
        if lambda.abs() <= self.lambda_eps() {
            if j[1] == 0 {
                return Err(Error::DegenerateAtZeroJ2 { j1: j[0] });
            }
            return Ok((degenerate_value(j[1], rho_box), true));
        }
        Ok((generic_value(beta, j[1], lambda, rho_box), false))
    }
}

/// Square root with `Im ≥ 0`, positive real for positive arguments.
fn sqrt_upper(d: f64) -> Complex64 {
    if d >= 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-d).sqrt())
    }
}

fn generic_value(beta: Complex64, j2: i64, lambda: f64, rho_box: f64) -> Complex64 {
    let sign = if j2 % 2 == 0 { 1.0 } else { -1.0 };
    (sign * (I * beta * rho_box).exp() - 1.0) / ((4.0 * PI * rho_box).sqrt() * lambda)
}

fn degenerate_value(j2: i64, rho_box: f64) -> Complex64 {
    I / (4.0 * j2 as f64) * (rho_box / PI).powf(1.5)
}

/// Evaluates the generic branch at a prescribed `λ`, bypassing the branch switch.
/// Used to probe continuity around degenerate modes.
pub fn generic_branch(beta: Complex64, j2: i64, lambda: f64, rho_box: f64) -> Complex64 {
    generic_value(beta, j2, lambda, rho_box)
}

/// `β_j = (k² − α_j²)^{1/2}` on the radiating branch.
pub fn beta(j1: i64, k: f64, alpha: f64) -> Result<Complex64> {
    KernelParams::new(k * k, alpha).beta(j1)
}

/// Fourier coefficient `K̂_ρ(j)` of the kernel periodized with period `2ρ_box` in `x2`.
pub fn kernel_coefficient(j: [i64; 2], k: f64, alpha: f64, rho_box: f64) -> Result<Complex64> {
    KernelParams::new(k * k, alpha).coefficient(j, rho_box).map(|(c, _)| c)
}

/// Table of kernel coefficients on a grid, stored in FFT-natural order.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    params: KernelParams,
    n1: usize,
    n2: usize,
    rho_box: f64,
    coeffs: Vec<Complex64>,
    degenerate_modes: Vec<[i64; 2]>,
}

pub fn kernel_table(grid: &Grid, wave: &IncidentWave) -> Result<KernelTable> {
    KernelTable::new(grid, KernelParams::from_wave(wave))
}

impl KernelTable {
    pub fn new(grid: &Grid, params: KernelParams) -> Result<Self> {
        let (n1, n2) = (grid.n1(), grid.n2());
        let rho = grid.rho_box();
        let rows: Vec<Vec<(Complex64, bool)>> = (0..n1)
            .into_par_iter()
            .map(|i1| {
                let j1 = grid.freq1(i1);
                (0..n2)
                    .map(|i2| params.coefficient([j1, grid.freq2(i2)], rho))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut coeffs = Vec::with_capacity(n1 * n2);
        let mut degenerate_modes = Vec::new();
        for (i1, row) in rows.into_iter().enumerate() {
            for (i2, (c, degenerate)) in row.into_iter().enumerate() {
                if degenerate {
                    degenerate_modes.push([grid.freq1(i1), grid.freq2(i2)]);
                }
                coeffs.push(c);
            }
        }
        Ok(KernelTable { params, n1, n2, rho_box: rho, coeffs, degenerate_modes })
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn k_squared(&self) -> f64 {
        self.params.k_squared
    }

    pub fn rho_box(&self) -> f64 {
        self.rho_box
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Coefficients in FFT-natural order, `coeffs[i1 * N2 + i2]`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degenerate_modes(&self) -> &[[i64; 2]] {
        &self.degenerate_modes
    }

    /// Coefficient at mathematical frequency `j`, if it lies on the table.
    pub fn get(&self, j: [i64; 2]) -> Option<Complex64> {
        let i1 = crate::problem::freq_to_natural(j[0], self.n1)?;
        let i2 = crate::problem::freq_to_natural(j[1], self.n2)?;
        Some(self.coeffs[i1 * self.n2 + i2])
    }

    /// Convolution multiplier `sqrt(4πρ_box)·K̂(j)` at storage index `idx`.
    pub fn multiplier(&self, idx: usize) -> Complex64 {
        (4.0 * PI * self.rho_box).sqrt() * self.coeffs[idx]
    }

    /// `max |K̂(j)|·(1 + α_{j1}² + (j2π/ρ)²)` over the shell `|j|_∞ = s`.
    pub fn shell_decay(&self, s: i64) -> f64 {
        let mut best = 0.0f64;
        for i1 in 0..self.n1 {
            let j1 = crate::problem::natural_to_freq(i1, self.n1);
            for i2 in 0..self.n2 {
                let j2 = crate::problem::natural_to_freq(i2, self.n2);
                if j1.abs().max(j2.abs()) != s {
                    continue;
                }
                let aj = j1 as f64 + self.params.alpha;
                let kz = j2 as f64 * PI / self.rho_box;
                best = best.max(self.coeffs[i1 * self.n2 + i2].norm() * (1.0 + aj * aj + kz * kz));
            }
        }
        best
    }

    /// Binary snapshot: `N1, N2` as u64 LE, then `k², α, ρ_box` as f64 LE, then
    /// the coefficients as (re, im) f64 LE pairs in storage order.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.n1 as u64).to_le_bytes())?;
        w.write_all(&(self.n2 as u64).to_le_bytes())?;
        for v in [self.params.k_squared, self.params.alpha, self.rho_box] {
            w.write_all(&v.to_le_bytes())?;
        }
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`KernelTable::write_to`]. Degenerate modes
    /// are recomputed from the header.
    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let n1 = u64::from_le_bytes(next(&mut r)?) as usize;
        let n2 = u64::from_le_bytes(next(&mut r)?) as usize;
        let k_squared = f64::from_le_bytes(next(&mut r)?);
        let alpha = f64::from_le_bytes(next(&mut r)?);
        let rho_box = f64::from_le_bytes(next(&mut r)?);
        let grid = Grid::new(n1, n2, rho_box)?;
        let params = KernelParams::new(k_squared, alpha);
        let mut coeffs = Vec::with_capacity(n1 * n2);
        for _ in 0..n1 * n2 {
            let re = f64::from_le_bytes(next(&mut r)?);
            let im = f64::from_le_bytes(next(&mut r)?);
            coeffs.push(Complex64::new(re, im));
        }
        let mut degenerate_modes = Vec::new();
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let j = [grid.freq1(i1), grid.freq2(i2)];
                if params.lambda(j, rho_box).abs() <= params.lambda_eps() {
                    degenerate_modes.push(j);
                }
            }
        }
        Ok(KernelTable { params, n1, n2, rho_box, coeffs, degenerate_modes })
    }
}

/// Truncated series value with a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail: f64,
}

/// Partial sum `(i/4π) Σ_{|j|≤J} β_j⁻¹ exp(iα_j x1 + iβ_j|x2|)` of the
/// quasi-periodic Green's function.
///
/// The tail bound is the first omitted term on each side, summed as a
/// geometric series with ratio `exp(−|x2|)`; it is infinite while order `J+1`
/// still propagates.
pub fn greens_series(x: [f64; 2], params: KernelParams, order: usize) -> Result<SeriesValue> {
    let ax2 = x[1].abs();
    if ax2 < 1e-3 {
        return Err(Error::SlowConvergence { x2: ax2, tail: f64::INFINITY });
    }
    let j_max = order as i64;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in -j_max..=j_max {
        let b = params.beta(j)?;
        let aj = j as f64 + params.alpha;
        sum += (I * (aj * x[0] + b * ax2)).exp() / b;
    }
    let value = I / (4.0 * PI) * sum;
    let tail = tail_bound(params, ax2, j_max + 1);
    Ok(SeriesValue { value, tail })
}

/// Smallest truncation order whose tail bound is below `tol`, then the sum.
pub fn greens_series_to(x: [f64; 2], params: KernelParams, tol: f64) -> Result<SeriesValue> {
    let ax2 = x[1].abs();
    if ax2 < 1e-3 {
        return Err(Error::SlowConvergence { x2: ax2, tail: f64::INFINITY });
    }
    let mut j = (params.k_squared.max(0.0).sqrt() + params.alpha.abs()).ceil() as i64 + 1;
    while tail_bound(params, ax2, j + 1) > tol {
        j += 1;
        if j > 1_000_000 {
            return Err(Error::SlowConvergence { x2: ax2, tail: tail_bound(params, ax2, j + 1) });
        }
    }
    greens_series(x, params, j as usize)
}

fn tail_bound(params: KernelParams, ax2: f64, first: i64) -> f64 {
    let ratio = (-ax2).exp();
    [first, -first]
        .iter()
        .map(|&j| {
            let aj = j as f64 + params.alpha;
            let d = aj * aj - params.k_squared;
            if d <= 0.0 {
                f64::INFINITY
            } else {
                let bt = d.sqrt();
                (-bt * ax2).exp() / (4.0 * PI * bt) / (1.0 - ratio)
            }
        })
        .sum()
}
