//! Matrix-free application of the volume potential and of `A: v ↦ v − div V_k(Q∇v)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::problem::{Grid, Problem};
use crate::spectral::{SpectralField, Transform, VectorSpectralField};
use crate::tensor::Sym2;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest grid for which [`assemble_dense`] builds a matrix.
pub const DENSE_LIMIT: usize = 4096;

fn check_table(grid: &Grid, alpha: f64, table: &KernelTable) -> Result<()> {
    let (n1, n2) = table.shape();
    if n1 * n2 != grid.len() || n1 != grid.n1() {
        return Err(Error::ShapeMismatch { expected: grid.len(), found: n1 * n2 });
    }
    if table.rho_box() != grid.rho_box() || table.alpha() != alpha {
        return Err(Error::Config(format!(
            "kernel table (ρ = {}, α = {}) does not match the field (ρ = {}, α = {})",
            table.rho_box(),
            table.alpha(),
            grid.rho_box(),
            alpha
        )));
    }
    Ok(())
}

/// Exact gradient of the trigonometric polynomial.
pub fn grad_spectral(u: &SpectralField) -> VectorSpectralField {
    let g = u.grid;
    let mut out = VectorSpectralField::zeros(g, u.alpha);
    for i1 in 0..g.n1() {
        let a = g.freq1(i1) as f64 + u.alpha;
        for i2 in 0..g.n2() {
            let idx = g.index(i1, i2);
            let c = u.coeffs[idx];
            out.g1.coeffs[idx] = I * a * c;
            out.g2.coeffs[idx] = I * g.kz(g.freq2(i2)) * c;
        }
    }
    out
}

/// Spectral divergence `i α_{j1} ĝ1 + i (j2π/ρ) ĝ2`.
pub fn div_spectral(g: &VectorSpectralField) -> SpectralField {
    let grid = g.g1.grid;
    let mut out = SpectralField::zeros(grid, g.g1.alpha);
    for i1 in 0..grid.n1() {
        let a = grid.freq1(i1) as f64 + g.g1.alpha;
        for i2 in 0..grid.n2() {
            let idx = grid.index(i1, i2);
            out.coeffs[idx] = I * a * g.g1.coeffs[idx] + I * grid.kz(grid.freq2(i2)) * g.g2.coeffs[idx];
        }
    }
    out
}

/// `V_k g` as the multiplier `sqrt(4πρ_box)·K̂(j)·ĝ(j)`.
pub fn volume_potential(g: &SpectralField, table: &KernelTable) -> Result<SpectralField> {
    check_table(&g.grid, g.alpha, table)?;
    let coeffs = g.coeffs.iter().enumerate().map(|(idx, c)| table.multiplier(idx) * c).collect();
    Ok(SpectralField { grid: g.grid, alpha: g.alpha, coeffs })
}

/// `L_k g = div V_k g`.
pub fn div_potential(g: &VectorSpectralField, table: &KernelTable) -> Result<SpectralField> {
    if g.g1.grid != g.g2.grid {
        return Err(Error::ShapeMismatch { expected: g.g1.grid.len(), found: g.g2.grid.len() });
    }
    volume_potential(&div_spectral(g), table)
}

/// Pointwise product of a sampled contrast with a sampled vector field.
fn multiply(q: &[Sym2], v1: &mut [Complex64], v2: &mut [Complex64]) {
    q.par_iter().zip(v1.par_iter_mut().zip(v2.par_iter_mut())).for_each(|(q, (a, b))| {
        let [x, y] = q.mul_vec([*a, *b]);
        *a = x;
        *b = y;
    });
}

/// The forward operator `A` bound to one problem and one kernel table.
#[derive(Debug, Clone)]
pub struct ForwardOperator<'a> {
    table: &'a KernelTable,
    transform: Transform,
    q: Vec<Sym2>,
    /// Transform on the 3/2-padded grid, present when dealiasing.
    padded: Option<Transform>,
    q_zero: bool,
}

fn padded_size(n: usize) -> usize {
    let m = (3 * n).div_ceil(2);
    m + m % 2
}

impl<'a> ForwardOperator<'a> {
    pub fn new(problem: &Problem, table: &'a KernelTable, dealias: bool) -> Result<Self> {
        let grid = *problem.grid();
        check_table(&grid, problem.alpha(), table)?;
        let transform = Transform::new(grid, problem.alpha());
        let (padded, q) = if dealias {
            let pg = Grid::new(padded_size(grid.n1()), padded_size(grid.n2()), grid.rho_box())?;
            let mut q = Vec::with_capacity(pg.len());
            for m1 in 0..pg.n1() {
                for m2 in 0..pg.n2() {
                    let [x1, x2] = pg.node(m1, m2);
                    q.push(problem.contrast().sample(x1, x2));
                }
            }
            (Some(Transform::new(pg, problem.alpha())), q)
        } else {
            (None, problem.q_grid().to_vec())
        };
        let q_zero = q.iter().all(Sym2::is_zero);
        Ok(ForwardOperator { table, transform, q, padded, q_zero })
    }

    pub fn grid(&self) -> &Grid {
        self.transform.grid()
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn table(&self) -> &KernelTable {
        self.table
    }

    /// Coefficients of `Q ∇u`.
    pub fn flux(&self, u: &SpectralField) -> Result<VectorSpectralField> {
        let grad = grad_spectral(u);
        match &self.padded {
            None => self.product(&self.transform, &grad),
            Some(pt) => {
                let pg = *pt.grid();
                let big = VectorSpectralField { g1: grad.g1.resample(pg), g2: grad.g2.resample(pg) };
                let prod = self.product(pt, &big)?;
                let grid = *self.grid();
                Ok(VectorSpectralField { g1: prod.g1.resample(grid), g2: prod.g2.resample(grid) })
            }
        }
    }

    fn product(&self, t: &Transform, g: &VectorSpectralField) -> Result<VectorSpectralField> {
        let mut v1 = t.to_physical(&g.g1)?;
        let mut v2 = t.to_physical(&g.g2)?;
        multiply(&self.q, &mut v1, &mut v2);
        Ok(VectorSpectralField { g1: t.to_spectral(&v1)?, g2: t.to_spectral(&v2)? })
    }

    /// Coefficients of `Q g` for a vector field sampled at the (unpadded) nodes.
    pub fn flux_of_samples(&self, mut g1: Vec<Complex64>, mut g2: Vec<Complex64>) -> Result<VectorSpectralField> {
        let grid = *self.grid();
        if g1.len() != grid.len() || g2.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), found: g1.len().min(g2.len()) });
        }
        match &self.padded {
            None => {
                multiply(&self.q, &mut g1, &mut g2);
                Ok(VectorSpectralField {
                    g1: self.transform.to_spectral(&g1)?,
                    g2: self.transform.to_spectral(&g2)?,
                })
            }
            Some(_) => {
                // Interpolate to the padded grid through the coefficients.
                let g = VectorSpectralField {
                    g1: self.transform.to_spectral(&g1)?,
                    g2: self.transform.to_spectral(&g2)?,
                };
                let pt = self.padded.as_ref().expect("padded transform");
                let pg = *pt.grid();
                let big = VectorSpectralField { g1: g.g1.resample(pg), g2: g.g2.resample(pg) };
                let prod = self.product(pt, &big)?;
                Ok(VectorSpectralField { g1: prod.g1.resample(grid), g2: prod.g2.resample(grid) })
            }
        }
    }

    /// `L_k(Q∇u)`.
    pub fn apply_potential(&self, u: &SpectralField) -> Result<SpectralField> {
        if self.q_zero {
            return Ok(SpectralField::zeros(u.grid, u.alpha));
        }
        div_potential(&self.flux(u)?, self.table)
    }

    /// `A u = u − L_k(Q∇u)`.
    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        if u.coeffs.len() != self.grid().len() {
            return Err(Error::ShapeMismatch { expected: self.grid().len(), found: u.coeffs.len() });
        }
        Ok(u.sub(&self.apply_potential(u)?))
    }

    /// `A` acting on a raw coefficient vector.
    pub fn apply_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let u = SpectralField::from_coeffs(*self.grid(), self.transform.alpha(), x.to_vec())?;
        Ok(self.apply(&u)?.coeffs)
    }
}

/// `A u` for a problem and table, without dealiasing.
pub fn apply_forward(u: &SpectralField, problem: &Problem, table: &KernelTable) -> Result<SpectralField> {
    ForwardOperator::new(problem, table, false)?.apply(u)
}

/// Dense matrix of `A` in the coefficient basis; column `m` is `A e_m`.
pub fn assemble_dense(problem: &Problem, table: &KernelTable) -> Result<DMatrix<Complex64>> {
    assemble_dense_with(&ForwardOperator::new(problem, table, false)?)
}

pub fn assemble_dense_with(op: &ForwardOperator<'_>) -> Result<DMatrix<Complex64>> {
    let n = op.grid().len();
    if n > DENSE_LIMIT {
        return Err(Error::SizeGuard { size: n, limit: DENSE_LIMIT });
    }
    let cols: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|m| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[m] = Complex64::new(1.0, 0.0);
            op.apply_vec(&e)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(n, n, |r, c| cols[c][r]))
}

/// Spectral Laplacian multiplier `−(α_{j1}² + (j2π/ρ)²)` at storage index `idx`.
pub fn laplacian_symbol(grid: &Grid, alpha: f64, idx: usize) -> f64 {
    let i1 = idx / grid.n2();
    let i2 = idx % grid.n2();
    let a = grid.freq1(i1) as f64 + alpha;
    let kz = grid.freq2(i2) as f64 * PI / grid.rho_box();
    -(a * a + kz * kz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_table, KernelParams};
    use crate::problem::{build_problem, ContrastField, IncidentWave};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(grid: Grid, alpha: f64, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..grid.len()).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        SpectralField::from_coeffs(grid, alpha, coeffs).unwrap()
    }

    fn random_problem(n: usize, seed: u64) -> Problem {
        let wave = IncidentWave::from_angle(0.9, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid::new(n, n, 1.0).unwrap();
        let vals: Vec<Sym2> = (0..grid.len())
            .map(|_| {
                Sym2::new(
                    c(rng.random_range(-1.0..2.0), rng.random_range(0.0..0.5)),
                    c(rng.random_range(-0.5..0.5), 0.0),
                    c(rng.random_range(-1.0..2.0), rng.random_range(0.0..0.5)),
                )
            })
            .collect();
        let contrast = ContrastField::new(
            move |x1, x2| {
                if x2.abs() >= 0.5 {
                    return Sym2::ZERO;
                }
                let m1 = (((x1 + PI) / (2.0 * PI) * n as f64).round() as usize) % n;
                let m2 = (((x2 + 1.0) / 2.0 * n as f64).round() as usize) % n;
                vals[m1 * n + m2]
            },
            0.5,
            false,
        );
        build_problem(wave, contrast, grid).unwrap()
    }

    #[test]
    fn gradient_of_basis_and_constant() {
        let grid = Grid::new(8, 8, 1.0).unwrap();
        let phi = SpectralField::basis(grid, 0.0, [1, 0]).unwrap();
        let g = grad_spectral(&phi);
        assert_eq!(g.g1.coeff([1, 0]), Some(c(0.0, 1.0)));
        assert_eq!(g.g2.norm(), 0.0);
        let one = SpectralField::basis(grid, 0.0, [0, 0]).unwrap();
        let g = grad_spectral(&one);
        assert_eq!(g.g1.norm() + g.g2.norm(), 0.0);
    }

    #[test]
    fn div_grad_is_laplacian() {
        let grid = Grid::new(8, 8, 1.3).unwrap();
        let u = random_field(grid, 0.2, 1);
        let lap = div_spectral(&grad_spectral(&u));
        for idx in 0..grid.len() {
            let expected = laplacian_symbol(&grid, 0.2, idx) * u.coeffs[idx];
            assert!((lap.coeffs[idx] - expected).norm() < 1e-12 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn potential_multiplier_on_basis() {
        let wave = IncidentWave::from_angle(0.9, 0.1).unwrap();
        let grid = Grid::new(8, 8, 1.2).unwrap();
        let table = kernel_table(&grid, &wave).unwrap();
        for j in [[0, 0], [2, -3], [-4, 1]] {
            let phi = SpectralField::basis(grid, wave.alpha(), j).unwrap();
            let out = volume_potential(&phi, &table).unwrap();
            let expected = (4.0 * PI * 1.2f64).sqrt() * table.get(j).unwrap();
            assert_eq!(out.coeff(j), Some(expected));
            assert!(out.norm() - expected.norm() < 1e-15);
        }
        let zero = SpectralField::zeros(grid, wave.alpha());
        assert_eq!(volume_potential(&zero, &table).unwrap(), zero);
    }

    #[test]
    fn zero_contrast_gives_identity() {
        let wave = IncidentWave::from_angle(0.9, 0.0).unwrap();
        let grid = Grid::new(8, 8, 1.0).unwrap();
        let problem = build_problem(wave, ContrastField::zero(), grid).unwrap();
        let table = kernel_table(&grid, &wave).unwrap();
        let u = random_field(grid, wave.alpha(), 2);
        assert_eq!(apply_forward(&u, &problem, &table).unwrap(), u);
        let dense = assemble_dense(&problem, &table).unwrap();
        assert_eq!(dense, DMatrix::identity(64, 64));
    }

    #[test]
    fn dense_matches_matrix_free() {
        let problem = random_problem(8, 5);
        let table = kernel_table(problem.grid(), problem.wave()).unwrap();
        let op = ForwardOperator::new(&problem, &table, false).unwrap();
        let dense = assemble_dense(&problem, &table).unwrap();
        for seed in 0..10 {
            let u = random_field(*problem.grid(), problem.alpha(), 100 + seed);
            let mf = op.apply(&u).unwrap();
            let dv = &dense * nalgebra::DVector::from_vec(u.coeffs.clone());
            let err = mf.coeffs.iter().zip(dv.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "seed {seed}: {err}");
        }
    }

    #[test]
    fn linearity() {
        let problem = random_problem(8, 9);
        let table = kernel_table(problem.grid(), problem.wave()).unwrap();
        let u = random_field(*problem.grid(), problem.alpha(), 1);
        let v = random_field(*problem.grid(), problem.alpha(), 2);
        let lhs = apply_forward(&u.add(&v), &problem, &table).unwrap();
        let rhs = apply_forward(&u, &problem, &table).unwrap().add(&apply_forward(&v, &problem, &table).unwrap());
        assert!(lhs.sub(&rhs).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn dense_guard() {
        let wave = IncidentWave::from_angle(0.9, 0.0).unwrap();
        let grid = Grid::new(128, 64, 1.0).unwrap();
        let problem = build_problem(wave, ContrastField::zero(), grid).unwrap();
        let table = kernel_table(&grid, &wave).unwrap();
        assert!(matches!(assemble_dense(&problem, &table), Err(Error::SizeGuard { size: 8192, limit: 4096 })));
    }

    #[test]
    fn mismatched_table_is_rejected() {
        let problem = random_problem(8, 1);
        let other = Grid::new(8, 8, 2.0).unwrap();
        let table = KernelTable::new(&other, KernelParams::from_wave(problem.wave())).unwrap();
        assert!(ForwardOperator::new(&problem, &table, false).is_err());
    }

    #[test]
    fn dealiasing_agrees_for_smooth_data() {
        let wave = IncidentWave::from_angle(0.9, 0.3).unwrap();
        let grid = Grid::new(32, 32, 2.0).unwrap();
        let contrast = ContrastField::new(
            |x1, x2| {
                let r2 = (x1 * x1 + x2 * x2) / 0.64;
                if r2 >= 1.0 {
                    Sym2::ZERO
                } else {
                    Sym2::scalar(c((1.0 - 1.0 / (1.0 - r2)).exp(), 0.0))
                }
            },
            0.8,
            false,
        );
        let problem = build_problem(wave, contrast, grid).unwrap();
        let table = kernel_table(&grid, &wave).unwrap();
        let a = ForwardOperator::new(&problem, &table, false).unwrap();
        let b = ForwardOperator::new(&problem, &table, true).unwrap();
        let mut u = SpectralField::zeros(grid, wave.alpha());
        for j in [[0, 0], [1, -1], [-2, 2]] {
            u = u.add(&SpectralField::basis(grid, wave.alpha(), j).unwrap());
        }
        let pa = a.apply_potential(&u).unwrap();
        let pb = b.apply_potential(&u).unwrap();
        let d = pa.sub(&pb).norm();
        assert!(d < 1e-2 * pa.norm(), "{d} vs {}", pa.norm());
    }
}
