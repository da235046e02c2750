//! Eigendecomposition of real symmetric arrowhead matrices
//!
//! ```text
//!     [ apex  z^T ]
//! A = [           ]
//!     [  z     D  ]
//! ```
//!
//! with `D = diag(d)` strictly increasing. Costs O(n^2) instead of the
//! O(n^3) of a dense solver.
//!
//! Each eigenvalue is found as a root of the secular equation
//! `lambda - apex - sum_k z_k^2 / (lambda - d_k) = 0`, expressed as an offset
//! from its nearest pole so that `lambda - d_k` keeps full relative accuracy.
//! The border is then recomputed from the computed eigenvalues (Löwner
//! formula) which makes the eigenvectors numerically orthogonal.

use crate::error::{CcaError, Result};

const MAX_ITERATIONS: usize = 200;

/// Eigenpairs of an arrowhead matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct ArrowheadEigen {
    values: Vec<f64>,
    // row-major: vectors[i * n + j] is component i of eigenvector j
    vectors: Vec<f64>,
    n: usize,
}

impl ArrowheadEigen {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Component `i` of eigenvector `j`.
    #[inline]
    pub fn component(&self, i: usize, j: usize) -> f64 {
        self.vectors[i * self.n + j]
    }

    /// Row `i` of the eigenvector matrix (component `i` of every eigenvector).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }
}

/// A root stored as `d[pole] + offset`.
#[derive(Debug, Clone, Copy)]
struct ShiftedRoot {
    pole: usize,
    offset: f64,
}

struct Secular<'a> {
    apex: f64,
    d: &'a [f64],
    z: &'a [f64],
}

impl Secular<'_> {
    /// Secular function and the pieces needed for the pole-aware step,
    /// at `d[pole] + mu`: returns `(f, c, dc)` where `c` is everything
    /// except the `mu` and `z_pole^2 / mu` terms.
    fn eval(&self, pole: usize, mu: f64) -> (f64, f64, f64) {
        let sigma = self.d[pole];
        let mut c = self.apex - sigma;
        let mut dc = 0.0;
        for (j, (&dj, &zj)) in self.d.iter().zip(self.z).enumerate() {
            if j == pole {
                continue;
            }
            let denom = mu - (dj - sigma);
            let w = zj * zj / denom;
            c += w;
            dc -= w / denom;
        }
        let zp = self.z[pole];
        let f = mu - c - zp * zp / mu;
        (f, c, dc)
    }

    /// Finds the root lying between `pole` and the bracket end `far`
    /// (an offset relative to `d[pole]`, any sign).
    fn solve(&self, pole: usize, far: f64) -> Result<ShiftedRoot> {
        let z2 = self.z[pole] * self.z[pole];
        let positive = far > 0.0;
        // f -> -inf just right of the pole, +inf just left of it
        let (mut lo, mut hi) = if positive { (0.0, far) } else { (far, 0.0) };
        let mut mu = 0.5 * far;
        for _ in 0..MAX_ITERATIONS {
            let (f, c, dc) = self.eval(pole, mu);
            if !f.is_finite() {
                return Err(CcaError::numerical("non-finite secular function value"));
            }
            if f == 0.0 {
                return Ok(ShiftedRoot { pole, offset: mu });
            }
            if f < 0.0 {
                lo = mu;
            } else {
                hi = mu;
            }
            // Solve  mu - c - dc (mu - mu_n) - z^2 / mu = 0  exactly.
            let a = 1.0 - dc;
            let b = c - dc * mu;
            let s = (b * b + 4.0 * a * z2).sqrt();
            let proposal = if positive {
                if b >= 0.0 {
                    (b + s) / (2.0 * a)
                } else {
                    2.0 * z2 / (s - b)
                }
            } else if b <= 0.0 {
                (b - s) / (2.0 * a)
            } else {
                -2.0 * z2 / (b + s)
            };
            let next = if proposal > lo && proposal < hi {
                proposal
            } else {
                0.5 * (lo + hi)
            };
            let converged = (next - mu).abs() <= 4.0 * f64::EPSILON * next.abs()
                || (hi - lo) <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs());
            mu = next;
            if converged {
                return Ok(ShiftedRoot { pole, offset: mu });
            }
        }
        Err(CcaError::numerical(format!(
            "secular equation did not converge near pole {pole}"
        )))
    }
}

/// Full eigendecomposition of the arrowhead matrix with corner `apex`,
/// diagonal `diag` (strictly increasing) and border `border`.
///
/// Index 0 of every eigenvector is the apex component; index `k + 1`
/// corresponds to `diag[k]`.
pub fn arrowhead_eigen(apex: f64, diag: &[f64], border: &[f64]) -> Result<ArrowheadEigen> {
    if diag.len() != border.len() {
        return Err(CcaError::validation("diagonal and border lengths differ"));
    }
    if diag.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CcaError::validation("arrowhead diagonal must be strictly increasing"));
    }
    if !apex.is_finite() || diag.iter().chain(border).any(|v| !v.is_finite()) {
        return Err(CcaError::numerical("non-finite matrix entry"));
    }
    let n = diag.len() + 1;

    let z_norm = border.iter().map(|z| z * z).sum::<f64>().sqrt();
    let scale = diag.iter().fold(apex.abs().max(z_norm), |acc, d| acc.max(d.abs()));
    let tol = 8.0 * f64::EPSILON * scale;

    // Split off (numerically) uncoupled modes.
    let (active, deflated): (Vec<usize>, Vec<usize>) = (0..diag.len()).partition(|&k| border[k].abs() > tol);
    let d: Vec<f64> = active.iter().map(|&k| diag[k]).collect();
    let z: Vec<f64> = active.iter().map(|&k| border[k]).collect();
    let m = d.len();

    // (eigenvalue, eigenvector) in full coordinates
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    for &k in &deflated {
        let mut v = vec![0.0; n];
        v[k + 1] = 1.0;
        pairs.push((diag[k], v));
    }

    if m == 0 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        pairs.push((apex, v));
    } else {
        let secular = Secular { apex, d: &d, z: &z };
        let lower = apex.min(d[0]) - z_norm * (1.0 + 1e-12) - tol;
        let upper = apex.max(d[m - 1]) + z_norm * (1.0 + 1e-12) + tol;

        let mut roots = Vec::with_capacity(m + 1);
        roots.push(secular.solve(0, lower - d[0])?);
        for t in 1..m {
            let half_gap = 0.5 * (d[t] - d[t - 1]);
            let (f_mid, _, _) = secular.eval(t - 1, half_gap);
            let root = if f_mid >= 0.0 {
                secular.solve(t - 1, half_gap)?
            } else {
                secular.solve(t, -half_gap)?
            };
            roots.push(root);
        }
        roots.push(secular.solve(m - 1, upper - d[m - 1])?);

        // d[t] - lambda_i, with lambda_i = d[pole] + offset
        let gap = |t: usize, i: usize| -> f64 {
            let r = roots[i];
            (d[t] - d[r.pole]) - r.offset
        };

        // Löwner reconstruction of the border
        let mut z_hat = vec![0.0; m];
        for t in 0..m {
            let mut prod = gap(t, t).abs() * gap(t, t + 1).abs();
            for j in 0..t {
                prod *= gap(t, j).abs() / (d[t] - d[j]).abs();
            }
            for j in t + 1..m {
                prod *= gap(t, j + 1).abs() / (d[j] - d[t]).abs();
            }
            z_hat[t] = prod.sqrt().copysign(z[t]);
        }

        for (i, r) in roots.iter().enumerate() {
            let lambda = d[r.pole] + r.offset;
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            let mut norm2 = 1.0;
            for t in 0..m {
                let x = -z_hat[t] / gap(t, i);
                v[active[t] + 1] = x;
                norm2 += x * x;
            }
            let inv = 1.0 / norm2.sqrt();
            if !inv.is_finite() || inv == 0.0 {
                return Err(CcaError::numerical("degenerate arrowhead eigenvector"));
            }
            v.iter_mut().for_each(|x| *x *= inv);
            pairs.push((lambda, v));
        }
    }

    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (j, (lambda, v)) in pairs.into_iter().enumerate() {
        values.push(lambda);
        for (i, x) in v.into_iter().enumerate() {
            vectors[i * n + j] = x;
        }
    }
    Ok(ArrowheadEigen { values, vectors, n })
}
