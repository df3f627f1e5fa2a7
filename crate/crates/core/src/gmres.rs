//! Restarted GMRES with modified Gram–Schmidt and Givens rotations.

use num_complex::Complex64;

use crate::error::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub(crate) struct GmresOutcome {
    pub x: Vec<Complex64>,
    /// Relative residual estimate after each inner iteration, starting with the initial one.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub breakdown: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GmresParams {
    pub tol: f64,
    pub max_iterations: usize,
    pub restart: usize,
    /// Hessenberg subdiagonal threshold relative to `‖b‖`.
    pub breakdown: f64,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Rotation `(c, s)` zeroing `b` in `[a; b]`, with real `c`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, b.conj() / b.norm());
    }
    let r = a.norm().hypot(b.norm());
    let c = a.norm() / r;
    let s = (a / a.norm()) * b.conj() / r;
    (c, s)
}

/// Solves `A x = b` from a zero initial guess.
pub(crate) fn gmres(
    apply: impl Fn(&[Complex64]) -> Result<Vec<Complex64>>,
    b: &[Complex64],
    p: GmresParams,
) -> Result<GmresOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![ZERO; n];
    let mut history = vec![if bnorm == 0.0 { 0.0 } else { 1.0 }];
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x, history, iterations: 0, converged: true, breakdown: false });
    }
    let mut iterations = 0;
    let mut r = b.to_vec();
    loop {
        let beta = norm(&r);
        if beta / bnorm <= p.tol {
            return Ok(GmresOutcome { x, history, iterations, converged: true, breakdown: false });
        }
        if iterations >= p.max_iterations {
            return Ok(GmresOutcome { x, history, iterations, converged: false, breakdown: false });
        }
        let m = p.restart.min(p.max_iterations - iterations);
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|c| c / beta).collect()];
        let mut h: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<(f64, Complex64)> = Vec::with_capacity(m);
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        let mut broke = false;
        for k in 0..m {
            let mut w = apply(&v[k])?;
            let mut col = vec![ZERO; k + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &w);
                col[i] = hij;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hij * vj;
                }
            }
            let hnext = norm(&w);
            col[k + 1] = Complex64::new(hnext, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let a = col[i];
                let bb = col[i + 1];
                col[i] = c * a + s * bb;
                col[i + 1] = -s.conj() * a + c * bb;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = ZERO;
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            cs.push((c, s));
            h.push(col);
            iterations += 1;
            k_used = k + 1;
            let est = g[k + 1].norm() / bnorm;
            history.push(est);
            if est <= p.tol {
                break;
            }
            if hnext < p.breakdown * bnorm {
                broke = true;
                break;
            }
            v.push(w.iter().map(|c| c / hnext).collect());
        }
        // Back substitution on the triangular factor.
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vi;
            }
        }
        let ax = apply(&x)?;
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        if broke {
            let rel = norm(&r) / bnorm;
            return Ok(GmresOutcome {
                x,
                history,
                iterations,
                converged: rel <= p.tol,
                breakdown: rel > p.tol,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> GmresParams {
        GmresParams { tol: 1e-12, max_iterations: 200, restart: 50, breakdown: 1e-14 }
    }

    fn random_system(n: usize, seed: u64) -> (DMatrix<Complex64>, Vec<Complex64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 4.0 } else { 0.0 };
            Complex64::new(d + rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)) / (n as f64).sqrt().max(1.0)
                + Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let b = (0..n).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        (a, b)
    }

    #[test]
    fn solves_random_system() {
        let (a, b) = random_system(30, 1);
        let out = gmres(|x| Ok((&a * DVector::from_vec(x.to_vec())).data.as_vec().clone()), &b, params()).unwrap();
        assert!(out.converged);
        let r = DVector::from_vec(b.clone()) - &a * DVector::from_vec(out.x.clone());
        assert!(r.norm() / norm(&b) < 1e-11);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn restarts_still_converge() {
        let (a, b) = random_system(40, 2);
        let p = GmresParams { restart: 5, ..params() };
        let out = gmres(|x| Ok((&a * DVector::from_vec(x.to_vec())).data.as_vec().clone()), &b, p).unwrap();
        assert!(out.converged, "{:?}", out.history.last());
    }

    #[test]
    fn zero_rhs() {
        let out = gmres(|x| Ok(x.to_vec()), &[ZERO; 5], params()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
        assert!(out.x.iter().all(|c| *c == ZERO));
    }

    #[test]
    fn identity_one_iteration() {
        let b = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1)];
        let out = gmres(|x| Ok(x.to_vec()), &b, params()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.x.iter().zip(&b).all(|(x, b)| (x - b).norm() < 1e-15));
    }

    #[test]
    fn singular_system_breaks_down() {
        // A = diag(1, 0); b has a component in the null direction.
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let out = gmres(|x| Ok(vec![x[0], ZERO]), &b, params()).unwrap();
        assert!(out.breakdown);
        assert!(!out.converged);
    }

    #[test]
    fn iteration_cap() {
        let (a, b) = random_system(30, 3);
        let p = GmresParams { max_iterations: 3, ..params() };
        let out = gmres(|x| Ok((&a * DVector::from_vec(x.to_vec())).data.as_vec().clone()), &b, p).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }
}
