//! Raster contrast files.
//!
//! Layout: header `u64 N1, u64 N2, f64 ρ_box`, then per cell, row-major with
//! `m1` outer, the four complex entries `q11, q12, q21, q22` as little-endian
//! `f64` pairs. Cell `(m1, m2)` covers
//! `[−π + m1Δ1, −π + (m1+1)Δ1) × [−ρ + m2Δ2, −ρ + (m2+1)Δ2)`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::{wrap_x1, ContrastField};
use crate::tensor::Sym2;

/// Relative tolerance of the symmetry check `|q12 − q21|`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Piecewise-constant contrast on a uniform raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub n1: usize,
    pub n2: usize,
    pub rho_box: f64,
    /// `[q11, q12, q21, q22]` per cell.
    pub cells: Vec<[Complex64; 4]>,
}

impl Raster {
    pub fn new(n1: usize, n2: usize, rho_box: f64, cells: Vec<[Complex64; 4]>) -> Result<Self> {
        if n1 == 0 || n2 == 0 || !(rho_box > 0.0) {
            return Err(Error::InvalidGrid(format!("raster {n1} × {n2} with ρ_box = {rho_box}")));
        }
        if cells.len() != n1 * n2 {
            return Err(Error::ShapeMismatch { expected: n1 * n2, found: cells.len() });
        }
        Ok(Raster { n1, n2, rho_box, cells })
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n1 = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let n2 = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let rho_box = f64::from_le_bytes(b8);
        let count = n1.checked_mul(n2).filter(|&c| c <= 1 << 26).ok_or_else(|| {
            Error::InvalidGrid(format!("raster header {n1} × {n2} is too large"))
        })?;
        let mut cells = Vec::with_capacity(count);
        for _ in 0..count {
            let mut cell = [Complex64::new(0.0, 0.0); 4];
            for z in &mut cell {
                r.read_exact(&mut b8)?;
                let re = f64::from_le_bytes(b8);
                r.read_exact(&mut b8)?;
                *z = Complex64::new(re, f64::from_le_bytes(b8));
            }
            cells.push(cell);
        }
        Raster::new(n1, n2, rho_box, cells)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.n1 as u64).to_le_bytes())?;
        w.write_all(&(self.n2 as u64).to_le_bytes())?;
        w.write_all(&self.rho_box.to_le_bytes())?;
        for cell in &self.cells {
            for z in cell {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        Raster::read_from(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    fn step1(&self) -> f64 {
        2.0 * PI / self.n1 as f64
    }

    fn step2(&self) -> f64 {
        2.0 * self.rho_box / self.n2 as f64
    }

    /// Half-height of the smallest band `|x2| ≤ h` containing every nonzero cell.
    pub fn half_height(&self) -> f64 {
        let s2 = self.step2();
        let mut h = 0.0f64;
        for m2 in 0..self.n2 {
            if (0..self.n1).any(|m1| self.cells[m1 * self.n2 + m2].iter().any(|z| *z != Complex64::new(0.0, 0.0))) {
                let lo = -self.rho_box + s2 * m2 as f64;
                h = h.max(lo.abs()).max((lo + s2).abs());
            }
        }
        h
    }

    /// Converts to a contrast field after checking symmetry cell by cell.
    pub fn to_contrast(&self) -> Result<ContrastField> {
        let (s1, s2) = (self.step1(), self.step2());
        let mut values = Vec::with_capacity(self.cells.len());
        for (idx, [q11, q12, q21, q22]) in self.cells.iter().enumerate() {
            let scale = q11.norm().max(q22.norm()).max(q12.norm()).max(1.0);
            let defect = (q12 - q21).norm();
            if defect > SYMMETRY_TOL * scale {
                let (m1, m2) = (idx / self.n2, idx % self.n2);
                return Err(Error::NonSymmetric {
                    x1: -PI + s1 * (m1 as f64 + 0.5),
                    x2: -self.rho_box + s2 * (m2 as f64 + 0.5),
                    defect,
                });
            }
            values.push(Sym2::new(*q11, 0.5 * (q12 + q21), *q22));
        }
        let isotropic = values.iter().all(Sym2::is_real_scalar);
        let (n1, n2, rho) = (self.n1, self.n2, self.rho_box);
        let sampler = move |x1: f64, x2: f64| {
            if x2.abs() >= rho {
                return Sym2::ZERO;
            }
            // Nodes on cell edges belong to the cell above and to the right.
            let m1 = (((wrap_x1(x1) + PI) / s1 + 1e-9).floor() as usize).min(n1 - 1);
            let m2 = (((x2 + rho) / s2 + 1e-9).floor() as usize).min(n2 - 1);
            values[m1 * n2 + m2]
        };
        Ok(ContrastField::new(sampler, self.half_height(), isotropic).with_label("raster"))
    }
}
