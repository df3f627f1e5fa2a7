//! Problem definition: incident wave, contrast, discretization grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::Sym2;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative tolerance for `|k² − α_j²|` below which order `j` counts as anomalous.
pub const ANOMALY_TOLERANCE: f64 = 1e-10;

/// Minimal computational box half-height as a multiple of the support half-height
/// when the box is chosen automatically.
pub const DEFAULT_BOX_FACTOR: f64 = 2.5;

/// Downward-travelling plane wave `u^i(x) = exp(i k x·d)` with `d2 < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    k: f64,
    direction: [f64; 2],
}

impl IncidentWave {
    pub fn new(k: f64, direction: [f64; 2]) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidWave(format!("wavenumber must be positive, got {k}")));
        }
        let norm = direction[0].hypot(direction[1]);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWave(format!("|d| = {norm} is not 1")));
        }
        if direction[1] >= 0.0 {
            return Err(Error::InvalidWave(format!(
                "d2 = {} must be negative (incidence from above)",
                direction[1]
            )));
        }
        Ok(IncidentWave { k, direction })
    }

    /// Direction `d = (sin θ, −cos θ)` for an angle θ (radians) measured from the downward normal.
    pub fn from_angle(k: f64, theta: f64) -> Result<Self> {
        Self::new(k, [theta.sin(), -theta.cos()])
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn direction(&self) -> [f64; 2] {
        self.direction
    }

    /// Quasi-periodicity parameter α = k·d1.
    pub fn alpha(&self) -> f64 {
        self.k * self.direction[0]
    }

    pub fn alpha_j(&self, j: i64) -> f64 {
        j as f64 + self.alpha()
    }

    /// Fails with [`Error::RayleighAnomaly`] if order `j` is anomalous.
    pub fn check_order(&self, j: i64) -> Result<()> {
        check_order(self.k * self.k, self.alpha(), j).map_err(|_| Error::RayleighAnomaly {
            order: j,
            k: self.k,
            alpha: self.alpha(),
        })
    }

    /// Checks `k² ≠ α_j²` for every order that can come close, `|j| ≤ k + |α| + 1`.
    pub fn check_non_resonance(&self) -> Result<()> {
        let bound = (self.k + self.alpha().abs() + 1.0).ceil() as i64;
        (-bound..=bound).try_for_each(|j| self.check_order(j))
    }

    pub fn value(&self, x: [f64; 2]) -> Complex64 {
        let phase = self.k * (x[0] * self.direction[0] + x[1] * self.direction[1]);
        Complex64::from_polar(1.0, phase)
    }

    /// Value and gradient `∇u^i = i k d u^i` at a point.
    pub fn value_and_gradient(&self, x: [f64; 2]) -> (Complex64, [Complex64; 2]) {
        let u = self.value(x);
        let iku = I * self.k * u;
        (u, [iku * self.direction[0], iku * self.direction[1]])
    }
}

pub(crate) fn check_order(k_squared: f64, alpha: f64, j: i64) -> std::result::Result<(), ()> {
    let aj = j as f64 + alpha;
    if (k_squared - aj * aj).abs() < ANOMALY_TOLERANCE * k_squared.abs().max(1.0) {
        Err(())
    } else {
        Ok(())
    }
}

/// Evaluates the incident field and its gradient at each point.
pub fn incident_field(wave: &IncidentWave, points: &[[f64; 2]]) -> Vec<(Complex64, [Complex64; 2])> {
    points.iter().map(|&x| wave.value_and_gradient(x)).collect()
}

pub type Sampler = Arc<dyn Fn(f64, f64) -> Sym2 + Send + Sync>;
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Upper and lower boundary graphs `ζ±(x1)` of a support `ζ− < x2 < ζ+`.
#[derive(Clone)]
pub struct SupportGraphs {
    pub upper: Profile,
    pub lower: Profile,
}

impl SupportGraphs {
    pub fn flat(lower: f64, upper: f64) -> Self {
        SupportGraphs { upper: Arc::new(move |_| upper), lower: Arc::new(move |_| lower) }
    }
}

impl fmt::Debug for SupportGraphs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SupportGraphs")
            .field("upper(0)", &(self.upper)(0.0))
            .field("lower(0)", &(self.lower)(0.0))
            .finish()
    }
}

/// Contrast `Q = ε_r⁻¹ − I` as a point sampler on the period cell.
///
/// The sampler must be 2π-periodic in `x1`, symmetric-valued and vanish for
/// `|x2| > half_height`.
#[derive(Clone)]
pub struct ContrastField {
    sampler: Sampler,
    half_height: f64,
    isotropic: bool,
    graphs: Option<SupportGraphs>,
    label: String,
}

impl fmt::Debug for ContrastField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContrastField")
            .field("label", &self.label)
            .field("half_height", &self.half_height)
            .field("isotropic", &self.isotropic)
            .field("graphs", &self.graphs)
            .finish()
    }
}

/// Reduces `x1` into `[−π, π)`.
pub fn wrap_x1(x1: f64) -> f64 {
    (x1 + PI).rem_euclid(2.0 * PI) - PI
}

impl ContrastField {
    pub fn new(
        sampler: impl Fn(f64, f64) -> Sym2 + Send + Sync + 'static,
        half_height: f64,
        isotropic: bool,
    ) -> Self {
        ContrastField {
            sampler: Arc::new(sampler),
            half_height,
            isotropic,
            graphs: None,
            label: "custom".into(),
        }
    }

    pub fn with_graphs(mut self, graphs: SupportGraphs) -> Self {
        self.graphs = Some(graphs);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn zero() -> Self {
        ContrastField::new(|_, _| Sym2::ZERO, 0.0, true).with_label("vacuum")
    }

    /// Homogeneous layer `|x2| < h` filled with `q`.
    pub fn slab(h: f64, q: Sym2) -> Self {
        ContrastField::new(move |_, x2| if x2.abs() < h { q } else { Sym2::ZERO }, h, q.is_real_scalar())
            .with_graphs(SupportGraphs::flat(-h, h))
            .with_label("slab")
    }

    /// Two stacked layers: `q_upper` on `0 ≤ x2 < h`, `q_lower` on `−h < x2 < 0`.
    pub fn two_layer(h: f64, q_upper: Sym2, q_lower: Sym2) -> Self {
        let isotropic = q_upper.is_real_scalar() && q_lower.is_real_scalar();
        ContrastField::new(
            move |_, x2| {
                if x2.abs() >= h {
                    Sym2::ZERO
                } else if x2 >= 0.0 {
                    q_upper
                } else {
                    q_lower
                }
            },
            h,
            isotropic,
        )
        .with_graphs(SupportGraphs::flat(-h, h))
        .with_label("two-layer")
    }

    /// Rectangle `|x1| < half_width`, `|x2| < h`, repeated periodically.
    pub fn rectangle(half_width: f64, h: f64, q: Sym2) -> Self {
        let full = half_width >= PI;
        let field = ContrastField::new(
            move |x1, x2| {
                if x2.abs() < h && wrap_x1(x1).abs() < half_width {
                    q
                } else {
                    Sym2::ZERO
                }
            },
            h,
            q.is_real_scalar(),
        )
        .with_label("rectangle");
        if full {
            field.with_graphs(SupportGraphs::flat(-h, h))
        } else {
            field
        }
    }

    /// Disc of the given radius centred at `center`, repeated periodically.
    pub fn circle(center: [f64; 2], radius: f64, q: Sym2) -> Self {
        ContrastField::new(
            move |x1, x2| {
                let dx = wrap_x1(x1 - center[0]);
                let dy = x2 - center[1];
                if dx * dx + dy * dy < radius * radius {
                    q
                } else {
                    Sym2::ZERO
                }
            },
            center[1].abs() + radius,
            q.is_real_scalar(),
        )
        .with_label("circle")
    }

    pub fn sample(&self, x1: f64, x2: f64) -> Sym2 {
        (self.sampler)(x1, x2)
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    pub fn graphs(&self) -> Option<&SupportGraphs> {
        self.graphs.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Rescales the contrast by a complex factor.
    pub fn scaled(&self, s: Complex64) -> ContrastField {
        let inner = self.sampler.clone();
        ContrastField {
            sampler: Arc::new(move |x1, x2| inner(x1, x2).scale(s)),
            half_height: self.half_height,
            isotropic: self.isotropic && s.im == 0.0,
            graphs: self.graphs.clone(),
            label: self.label.clone(),
        }
    }

    pub fn conj(&self) -> ContrastField {
        let inner = self.sampler.clone();
        ContrastField {
            sampler: Arc::new(move |x1, x2| inner(x1, x2).conj()),
            half_height: self.half_height,
            isotropic: self.isotropic,
            graphs: self.graphs.clone(),
            label: self.label.clone(),
        }
    }
}

/// Scan resolution used to locate the support of a contrast given only by a sampler.
#[derive(Debug, Clone, Copy)]
pub struct SupportScan {
    pub n1: usize,
    pub n2: usize,
    /// Half-height of the scanned strip.
    pub half_height: f64,
}

/// Builds `Q = ε_r⁻¹ − I` from a sampler of the inverse relative permittivity.
///
/// The support half-height is located by scanning the strip and refining the
/// outermost transition by bisection.
pub fn contrast_from_permittivity(
    eps_r_inv: impl Fn(f64, f64) -> [[Complex64; 2]; 2] + Send + Sync + 'static,
    scan: SupportScan,
) -> Result<ContrastField> {
    let eps_r_inv = Arc::new(eps_r_inv);
    let to_q = {
        let eps_r_inv = eps_r_inv.clone();
        move |x1: f64, x2: f64| -> std::result::Result<Sym2, f64> {
            let m = eps_r_inv(x1, x2);
            let q11 = m[0][0] - 1.0;
            let q22 = m[1][1] - 1.0;
            let scale = (q11.norm_sqr() + q22.norm_sqr() + m[0][1].norm_sqr() + m[1][0].norm_sqr()).sqrt();
            let defect = (m[0][1] - m[1][0]).norm();
            if defect > 1e-12 * scale {
                return Err(defect);
            }
            Ok(Sym2::new(q11, 0.5 * (m[0][1] + m[1][0]), q22))
        }
    };

    let xs1: Vec<f64> = (0..scan.n1).map(|m| -PI + 2.0 * PI * m as f64 / scan.n1 as f64).collect();
    let xs2: Vec<f64> = (0..=scan.n2)
        .map(|m| -scan.half_height + 2.0 * scan.half_height * m as f64 / scan.n2 as f64)
        .collect();

    let mut isotropic = true;
    let mut outer = 0.0f64;
    let mut any = false;
    for &x2 in &xs2 {
        for &x1 in &xs1 {
            let q = to_q(x1, x2).map_err(|defect| Error::NonSymmetric { x1, x2, defect })?;
            if !q.is_zero() {
                any = true;
                outer = outer.max(x2.abs());
                isotropic &= q.is_real_scalar();
            }
        }
    }

    let half_height = if any {
        let step = 2.0 * scan.half_height / scan.n2 as f64;
        let row_nonzero = |x2: f64| {
            xs1.iter().any(|&x1| {
                to_q(x1, x2).map(|q| !q.is_zero()).unwrap_or(true) || to_q(x1, -x2).map(|q| !q.is_zero()).unwrap_or(true)
            })
        };
        let (mut lo, mut hi) = (outer, (outer + step).min(scan.half_height));
        if row_nonzero(hi) {
            hi
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if row_nonzero(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    } else {
        0.0
    };

    let sampler = move |x1: f64, x2: f64| to_q(x1, x2).unwrap_or(Sym2::ZERO);
    Ok(ContrastField::new(sampler, half_height, isotropic).with_label("permittivity"))
}

/// Tensor-product collocation grid on `[−π, π) × [−ρ_box, ρ_box)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n1: usize,
    n2: usize,
    rho_box: f64,
}

impl Grid {
    pub fn new(n1: usize, n2: usize, rho_box: f64) -> Result<Self> {
        if n1 < 2 || n1 % 2 != 0 || n2 < 2 || n2 % 2 != 0 {
            return Err(Error::InvalidGrid(format!("mode counts must be even and ≥ 2, got {n1}×{n2}")));
        }
        if !(rho_box.is_finite() && rho_box > 0.0) {
            return Err(Error::InvalidGrid(format!("box half-height must be positive, got {rho_box}")));
        }
        Ok(Grid { n1, n2, rho_box })
    }

    /// Grid whose box is the smallest `ρ_box ≥ 2.5 h` that places `x2 = ±h`
    /// halfway between two nodes.
    pub fn with_default_box(n1: usize, n2: usize, half_height: f64) -> Result<Self> {
        Self::new(n1, n2, default_box_height(n2, half_height))
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rho_box(&self) -> f64 {
        self.rho_box
    }

    pub fn step1(&self) -> f64 {
        2.0 * PI / self.n1 as f64
    }

    pub fn step2(&self) -> f64 {
        2.0 * self.rho_box / self.n2 as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.step1() * self.step2()
    }

    pub fn x1(&self, m1: usize) -> f64 {
        -PI + self.step1() * m1 as f64
    }

    pub fn x2(&self, m2: usize) -> f64 {
        -self.rho_box + self.step2() * m2 as f64
    }

    pub fn node(&self, m1: usize, m2: usize) -> [f64; 2] {
        [self.x1(m1), self.x2(m2)]
    }

    /// Flat storage index of node / mode `(m1, m2)`.
    pub fn index(&self, m1: usize, m2: usize) -> usize {
        m1 * self.n2 + m2
    }

    /// Mathematical frequency of storage position `i1` (FFT-natural order).
    pub fn freq1(&self, i1: usize) -> i64 {
        natural_to_freq(i1, self.n1)
    }

    pub fn freq2(&self, i2: usize) -> i64 {
        natural_to_freq(i2, self.n2)
    }

    /// Storage position of frequency `j1`, if it lies in `[−N1/2, N1/2)`.
    pub fn slot1(&self, j1: i64) -> Option<usize> {
        freq_to_natural(j1, self.n1)
    }

    pub fn slot2(&self, j2: i64) -> Option<usize> {
        freq_to_natural(j2, self.n2)
    }

    /// Vertical wavenumber `j2 π / ρ_box`.
    pub fn kz(&self, j2: i64) -> f64 {
        j2 as f64 * PI / self.rho_box
    }
}

/// Maps FFT-natural position `0..N/2−1, N/2..N−1` to frequency `0..N/2−1, −N/2..−1`.
pub fn natural_to_freq(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

pub fn freq_to_natural(j: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if j < -half || j >= half {
        None
    } else if j >= 0 {
        Some(j as usize)
    } else {
        Some((j + n as i64) as usize)
    }
}

/// Smallest `ρ ≥ 2.5 h` with `h N2 / (2ρ)` a half-integer, so that the nodes
/// straddle `x2 = ±h` symmetrically.
pub fn default_box_height(n2: usize, half_height: f64) -> f64 {
    if half_height <= 0.0 {
        return 1.0;
    }
    let target = DEFAULT_BOX_FACTOR * half_height;
    // ρ = h N2 / (2n + 1); pick the largest n with ρ ≥ target.
    let n_max = ((half_height * n2 as f64 / target - 1.0) / 2.0).floor();
    if n_max < 0.0 {
        return target;
    }
    half_height * n2 as f64 / (2.0 * n_max + 1.0)
}

/// Fully specified scattering problem with the contrast sampled on the grid.
#[derive(Debug, Clone)]
pub struct Problem {
    wave: IncidentWave,
    contrast: ContrastField,
    grid: Grid,
    q_grid: Vec<Sym2>,
    rho_ref: f64,
}

/// Validates the inputs and samples the contrast at every grid node.
pub fn build_problem(wave: IncidentWave, contrast: ContrastField, grid: Grid) -> Result<Problem> {
    wave.check_non_resonance()?;
    let h = contrast.half_height();
    if grid.rho_box() < 2.0 * h {
        return Err(Error::Geometry(format!(
            "box half-height {} is below twice the support half-height {}",
            grid.rho_box(),
            h
        )));
    }
    let mut q_grid = Vec::with_capacity(grid.len());
    for m1 in 0..grid.n1() {
        for m2 in 0..grid.n2() {
            let [x1, x2] = grid.node(m1, m2);
            let q = contrast.sample(x1, x2);
            if x2.abs() > h && !q.is_zero() {
                return Err(Error::Geometry(format!(
                    "contrast is nonzero at x2 = {x2}, outside its declared half-height {h}"
                )));
            }
            q_grid.push(q);
        }
    }
    let rho_ref = h + 0.1 * (grid.rho_box() - h);
    Ok(Problem { wave, contrast, grid, q_grid, rho_ref })
}

impl Problem {
    pub fn wave(&self) -> &IncidentWave {
        &self.wave
    }

    pub fn contrast(&self) -> &ContrastField {
        &self.contrast
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Contrast samples, stored as `q_grid[m1 * N2 + m2]`.
    pub fn q_grid(&self) -> &[Sym2] {
        &self.q_grid
    }

    pub fn q_at(&self, m1: usize, m2: usize) -> Sym2 {
        self.q_grid[self.grid.index(m1, m2)]
    }

    pub fn rho_ref(&self) -> f64 {
        self.rho_ref
    }

    pub fn half_height(&self) -> f64 {
        self.contrast.half_height()
    }

    pub fn alpha(&self) -> f64 {
        self.wave.alpha()
    }

    pub fn is_zero_contrast(&self) -> bool {
        self.q_grid.iter().all(Sym2::is_zero)
    }

    pub fn is_lossless(&self) -> bool {
        self.q_grid.iter().all(|q| q.a11.im == 0.0 && q.a12.im == 0.0 && q.a22.im == 0.0)
    }

    /// Overrides the Rayleigh reference height; must satisfy `h < ρ_ref ≤ ρ_box`.
    pub fn with_reference_height(mut self, rho_ref: f64) -> Result<Self> {
        let h = self.half_height();
        if !(rho_ref > h && rho_ref <= self.grid.rho_box()) {
            return Err(Error::Geometry(format!(
                "reference height {rho_ref} must lie in ({h}, {}]",
                self.grid.rho_box()
            )));
        }
        self.rho_ref = rho_ref;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn anomaly_at_normal_incidence_k1() {
        let wave = IncidentWave::from_angle(1.0, 0.0).unwrap();
        match wave.check_order(1) {
            Err(Error::RayleighAnomaly { order: 1, .. }) => {}
            other => panic!("expected anomaly, got {other:?}"),
        }
        assert!(matches!(wave.check_non_resonance(), Err(Error::RayleighAnomaly { .. })));
    }

    #[test]
    fn zero_contrast_problem() {
        let wave = IncidentWave::from_angle(1.3, 0.2).unwrap();
        let grid = Grid::new(8, 8, 1.0).unwrap();
        let p = build_problem(wave, ContrastField::zero(), grid).unwrap();
        assert!(p.q_grid().iter().all(Sym2::is_zero));
        assert!(p.is_zero_contrast());
    }

    #[test]
    fn box_too_small_is_rejected() {
        let wave = IncidentWave::from_angle(1.3, 0.0).unwrap();
        let grid = Grid::new(8, 8, 1.5).unwrap();
        let slab = ContrastField::slab(1.0, Sym2::scalar(c(3.0, 0.0)));
        assert!(matches!(build_problem(wave, slab, grid), Err(Error::Geometry(_))));
    }

    #[test]
    fn wave_validation() {
        assert!(IncidentWave::new(1.0, [0.0, 1.0]).is_err());
        assert!(IncidentWave::new(1.0, [0.6, -0.7]).is_err());
        assert!(IncidentWave::new(-1.0, [0.0, -1.0]).is_err());
        assert!(IncidentWave::new(1.0, [0.6, -0.8]).is_ok());
    }

    #[test]
    fn incident_field_at_origin_and_normal_incidence() {
        let wave = IncidentWave::new(2.0, [0.0, -1.0]).unwrap();
        let out = incident_field(&wave, &[[0.0, 0.0], [0.7, 0.0]]);
        assert_eq!(out[0].0, c(1.0, 0.0));
        assert_eq!(out[0].1, [c(0.0, 0.0), c(0.0, -2.0)]);
        assert!((out[1].0 - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn incident_field_is_quasi_periodic() {
        let wave = IncidentWave::from_angle(1.7, 0.4).unwrap();
        let alpha = wave.alpha();
        let a = wave.value([PI, 0.3]);
        let b = wave.value([-PI, 0.3]);
        let expected = Complex64::from_polar(1.0, 2.0 * PI * alpha);
        assert!((a / b - expected).norm() < 1e-12);
    }

    #[test]
    fn incident_gradient_matches_central_differences() {
        let wave = IncidentWave::from_angle(2.3, -0.35).unwrap();
        let x = [0.4, -0.2];
        let (_, g) = wave.value_and_gradient(x);
        let mut prev = f64::INFINITY;
        for step in [1e-2, 5e-3, 2.5e-3] {
            let d1 = (wave.value([x[0] + step, x[1]]) - wave.value([x[0] - step, x[1]])) / (2.0 * step);
            let d2 = (wave.value([x[0], x[1] + step]) - wave.value([x[0], x[1] - step])) / (2.0 * step);
            let err = (d1 - g[0]).norm().max((d2 - g[1]).norm());
            assert!(err < 2.3f64.powi(3) * step * step);
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn permittivity_vacuum_has_zero_support() {
        let scan = SupportScan { n1: 16, n2: 32, half_height: 2.0 };
        let q = contrast_from_permittivity(|_, _| [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]], scan).unwrap();
        assert_eq!(q.half_height(), 0.0);
        assert!(q.sample(0.1, 0.2).is_zero());
    }

    #[test]
    fn permittivity_slab_support_is_located() {
        let scan = SupportScan { n1: 16, n2: 40, half_height: 2.0 };
        let q = contrast_from_permittivity(
            |_, x2| {
                let v = if x2.abs() < 0.5 { 4.0 } else { 1.0 };
                [[c(v, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(v, 0.0)]]
            },
            scan,
        )
        .unwrap();
        assert!((q.half_height() - 0.5).abs() < 1e-12, "h = {}", q.half_height());
        assert_eq!(q.sample(0.0, 0.1), Sym2::scalar(c(3.0, 0.0)));
        assert!(q.is_isotropic());
    }

    #[test]
    fn permittivity_subtracts_identity() {
        let scan = SupportScan { n1: 4, n2: 4, half_height: 1.0 };
        let q = contrast_from_permittivity(
            |_, _| [[c(2.0, 0.1), c(0.0, 0.0)], [c(0.0, 0.0), c(3.0, 0.1)]],
            scan,
        )
        .unwrap();
        assert_eq!(q.sample(0.0, 0.0), Sym2::diag(c(1.0, 0.1), c(2.0, 0.1)));
    }

    #[test]
    fn permittivity_rejects_asymmetric_tensor() {
        let scan = SupportScan { n1: 4, n2: 4, half_height: 1.0 };
        let r = contrast_from_permittivity(
            |_, _| [[c(2.0, 0.0), c(0.5, 0.0)], [c(0.4, 0.0), c(3.0, 0.0)]],
            scan,
        );
        assert!(matches!(r, Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn frequency_index_map() {
        let n = 8;
        let freqs: Vec<i64> = (0..n).map(|i| natural_to_freq(i, n)).collect();
        assert_eq!(freqs, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for (i, &j) in freqs.iter().enumerate() {
            assert_eq!(freq_to_natural(j, n), Some(i));
        }
        assert_eq!(freq_to_natural(4, n), None);
        assert_eq!(freq_to_natural(-5, n), None);
    }

    #[test]
    fn default_box_straddles_support_edges() {
        for (n2, h) in [(256usize, 0.5), (64, 0.3), (128, 1.0)] {
            let rho = default_box_height(n2, h);
            assert!(rho >= DEFAULT_BOX_FACTOR * h - 1e-12);
            let t = h * n2 as f64 / (2.0 * rho);
            assert!((t - t.floor() - 0.5).abs() < 1e-9, "n2={n2}, h={h}, rho={rho}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let wave = IncidentWave::from_angle(0.8, 0.1).unwrap();
        let contrast = ContrastField::circle([0.3, 0.0], 0.6, Sym2::diag(c(2.0, 0.0), c(1.0, 0.5)));
        let grid = Grid::with_default_box(16, 16, contrast.half_height()).unwrap();
        let a = build_problem(wave, contrast.clone(), grid).unwrap();
        let b = build_problem(wave, contrast.clone(), grid).unwrap();
        assert_eq!(a.q_grid(), b.q_grid());
        for m1 in 0..16 {
            for m2 in 0..16 {
                let [x1, x2] = grid.node(m1, m2);
                assert_eq!(a.q_at(m1, m2), contrast.sample(x1, x2));
            }
        }
    }
}
