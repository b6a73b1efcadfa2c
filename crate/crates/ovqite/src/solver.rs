//! Linear solvers for the per-step update: a singular-value-truncated
//! pseudo-inverse and a maximum-likelihood solver for linear problems whose
//! design matrix is itself noisy.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for the pseudo-inverse solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinvConfig {
    /// Singular values below `rcond * sigma_max` are truncated.
    pub rcond: f64,
}

impl PinvConfig {
    pub fn new(rcond: f64) -> Result<Self> {
        if !(rcond > 0.0 && rcond < 1.0) {
            return Err(Error::Validation(format!(
                "rcond must lie in (0, 1), got {rcond}"
            )));
        }
        Ok(PinvConfig { rcond })
    }
}

/// Diagnostics from one pseudo-inverse solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Singular values in descending order.
    pub singular_values: Vec<f64>,
    /// Number of singular values kept above the threshold.
    pub kept: usize,
    /// ||A x - b||.
    pub residual: f64,
}

/// Solves A x = b through the truncated-SVD pseudo-inverse: reciprocals are
/// kept only for singular values sigma_i >= sigma_max * rcond, the rest are
/// zeroed, and x = V Sigma'^{-1} U^T b.
pub fn pinv_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    cfg: &PinvConfig,
) -> Result<(DVector<f64>, SolveReport)> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Validation("empty matrix".into()));
    }
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows, vector length {}",
            a.nrows(),
            b.len()
        )));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let threshold = sigma_max * cfg.rcond;

    // x = V diag(sigma') U^T b with sigma' = 1/sigma above the cutoff.
    let mut kept = 0usize;
    let ut_b = u.transpose() * b;
    let mut scaled = DVector::zeros(svd.singular_values.len());
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma >= threshold && sigma > 0.0 {
            scaled[i] = ut_b[i] / sigma;
            kept += 1;
        }
    }
    let x = v_t.transpose() * scaled;
    let residual = (a * &x - b).norm();
    Ok((
        x,
        SolveReport {
            singular_values,
            kept,
            residual,
        },
    ))
}

/// Covariance of the noisy design matrix entries Cov(A_{i,m}, A_{j,l}).
///
/// The dense form stores the flattened (m*k) x (m*k) matrix with row-major
/// pair index i*k + m; the diagonal form keeps one variance per entry, which
/// is the natural shape for independent shot-noise estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum OmegaA {
    Zero,
    /// Entry-wise variances, same shape as A.
    Diagonal(DMatrix<f64>),
    /// Full covariance over flattened index pairs.
    Dense(DMatrix<f64>),
}

impl OmegaA {
    /// The m x m contraction (x^T Omega_A x)_{i,j} = sum_{m,l} x_m x_l
    /// Cov(A_{i,m}, A_{j,l}).
    fn contract(&self, x: &DVector<f64>, rows: usize) -> DMatrix<f64> {
        let k = x.len();
        match self {
            OmegaA::Zero => DMatrix::zeros(rows, rows),
            OmegaA::Diagonal(var) => {
                let mut out = DMatrix::zeros(rows, rows);
                for i in 0..rows {
                    let mut acc = 0.0;
                    for m in 0..k {
                        acc += x[m] * x[m] * var[(i, m)];
                    }
                    out[(i, i)] = acc;
                }
                out
            }
            OmegaA::Dense(w) => {
                let mut out = DMatrix::zeros(rows, rows);
                for i in 0..rows {
                    for jj in 0..rows {
                        let mut acc = 0.0;
                        for m in 0..k {
                            for l in 0..k {
                                acc += x[m] * x[l] * w[(i * k + m, jj * k + l)];
                            }
                        }
                        out[(i, jj)] = acc;
                    }
                }
                out
            }
        }
    }

    /// d(x^T Omega_A x)/dx_s as an m x m matrix:
    /// sum_l x_l Cov(A_{i,s}, A_{j,l}) + sum_m x_m Cov(A_{i,m}, A_{j,s}).
    fn contract_derivative(&self, x: &DVector<f64>, rows: usize, s: usize) -> DMatrix<f64> {
        let k = x.len();
        match self {
            OmegaA::Zero => DMatrix::zeros(rows, rows),
            OmegaA::Diagonal(var) => {
                let mut out = DMatrix::zeros(rows, rows);
                for i in 0..rows {
                    out[(i, i)] = 2.0 * x[s] * var[(i, s)];
                }
                out
            }
            OmegaA::Dense(w) => {
                let mut out = DMatrix::zeros(rows, rows);
                for i in 0..rows {
                    for jj in 0..rows {
                        let mut acc = 0.0;
                        for l in 0..k {
                            acc += x[l] * w[(i * k + s, jj * k + l)];
                        }
                        for m in 0..k {
                            acc += x[m] * w[(i * k + m, jj * k + s)];
                        }
                        out[(i, jj)] = acc;
                    }
                }
                out
            }
        }
    }
}

/// Error-in-variables regression instance: observed design A and target b
/// with known covariances, plus an optional Gaussian prior of variance
/// `lambda` on the solution (infinity disables it).
#[derive(Debug, Clone)]
pub struct EivProblem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub omega_b: DMatrix<f64>,
    pub omega_a: OmegaA,
    pub lambda: f64,
}

impl EivProblem {
    fn validate(&self) -> Result<()> {
        if self.a.nrows() != self.b.len() {
            return Err(Error::Dimension(format!(
                "A has {} rows, b length {}",
                self.a.nrows(),
                self.b.len()
            )));
        }
        if self.omega_b.nrows() != self.a.nrows() || self.omega_b.ncols() != self.a.nrows() {
            return Err(Error::Dimension("Omega_B shape mismatch".into()));
        }
        match &self.omega_a {
            OmegaA::Zero => {}
            OmegaA::Diagonal(v) => {
                if v.shape() != self.a.shape() {
                    return Err(Error::Dimension("diagonal Omega_A shape mismatch".into()));
                }
            }
            OmegaA::Dense(w) => {
                let flat = self.a.nrows() * self.a.ncols();
                if w.nrows() != flat || w.ncols() != flat {
                    return Err(Error::Dimension("dense Omega_A shape mismatch".into()));
                }
            }
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(Error::Validation(format!(
                "prior variance must be positive (or infinite), got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    fn omega_d(&self, x: &DVector<f64>) -> DMatrix<f64> {
        &self.omega_b + self.omega_a.contract(x, self.a.nrows())
    }
}

struct OmegaDecomposition {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
}

fn decompose(omega_d: DMatrix<f64>) -> Result<OmegaDecomposition> {
    let chol = omega_d
        .cholesky()
        .ok_or_else(|| Error::Solver("Omega_D is not positive definite".into()))?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(OmegaDecomposition { chol, log_det })
}

/// Log-likelihood of x under the error-in-variables model:
/// l(x) = -1/2 d^T Omega_D^{-1} d - 1/2 log det Omega_D - ||x||^2 / (2 lambda)
/// with d = b - A x and Omega_D = Omega_B + x^T Omega_A x.
pub fn eiv_log_likelihood(p: &EivProblem, x: &DVector<f64>) -> Result<f64> {
    p.validate()?;
    if x.len() != p.a.ncols() {
        return Err(Error::Dimension(format!(
            "x has length {}, A has {} columns",
            x.len(),
            p.a.ncols()
        )));
    }
    let d = &p.b - &p.a * x;
    let dec = decompose(p.omega_d(x))?;
    let solved = dec.chol.solve(&d);
    let quad = d.dot(&solved);
    let prior = if p.lambda.is_finite() {
        x.norm_squared() / (2.0 * p.lambda)
    } else {
        0.0
    };
    Ok(-0.5 * quad - 0.5 * dec.log_det - prior)
}

/// Gradient of [`eiv_log_likelihood`]:
/// dl/dx_s = a_s^T K d + 1/2 d^T K C_s K d - 1/2 tr(K C_s) - x_s / lambda
/// with K = Omega_D^{-1}, C_s = d(x^T Omega_A x)/dx_s and a_s column s of A.
pub fn eiv_gradient(p: &EivProblem, x: &DVector<f64>) -> Result<DVector<f64>> {
    p.validate()?;
    if x.len() != p.a.ncols() {
        return Err(Error::Dimension(format!(
            "x has length {}, A has {} columns",
            x.len(),
            p.a.ncols()
        )));
    }
    let rows = p.a.nrows();
    let d = &p.b - &p.a * x;
    let dec = decompose(p.omega_d(x))?;
    let kd = dec.chol.solve(&d);
    let mut grad = DVector::zeros(x.len());
    for s in 0..x.len() {
        let a_s = p.a.column(s);
        let mut g = a_s.dot(&kd);
        match &p.omega_a {
            OmegaA::Zero => {}
            _ => {
                let c_s = p.omega_a.contract_derivative(x, rows, s);
                // 1/2 (K d)^T C_s (K d)
                g += 0.5 * kd.dot(&(&c_s * &kd));
                // -1/2 tr(K C_s): solve K column by column.
                let kc = dec.chol.solve(&c_s);
                g -= 0.5 * kc.trace();
            }
        }
        if p.lambda.is_finite() {
            g -= x[s] / p.lambda;
        }
        grad[s] = g;
    }
    Ok(grad)
}

/// Result of the maximum-likelihood ascent.
#[derive(Debug, Clone)]
pub struct EivSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Maximizes the error-in-variables likelihood by gradient ascent from
/// x = 0 with Armijo backtracking (initial step 1, shrink 0.5).
pub fn eiv_solve(p: &EivProblem, max_iters: usize, tol: f64) -> Result<EivSolution> {
    p.validate()?;
    decompose(p.omega_b.clone())
        .map_err(|_| Error::Solver("Omega_B must be positive definite".into()))?;
    let mut x = DVector::zeros(p.a.ncols());
    let mut value = eiv_log_likelihood(p, &x)?;
    let mut gradient = eiv_gradient(p, &x)?;
    let mut iterations = 0;
    let mut stagnant = 0u32;
    const ARMIJO: f64 = 1e-4;
    const MIN_STEP: f64 = 1e-16;
    // Near the maximum the likelihood improvements fall below double
    // precision and value comparisons become noise; stop once several
    // accepted steps in a row make no resolvable progress.
    const STAGNATION_LIMIT: u32 = 3;

    while gradient.norm() > tol && iterations < max_iters && stagnant < STAGNATION_LIMIT {
        let g_norm_sq = gradient.norm_squared();
        let mut step = 1.0;
        let mut accepted = false;
        while step >= MIN_STEP {
            let candidate = &x + step * &gradient;
            match eiv_log_likelihood(p, &candidate) {
                Ok(candidate_value) if candidate_value >= value + ARMIJO * step * g_norm_sq => {
                    if candidate_value - value <= 1e-15 * (1.0 + value.abs()) {
                        stagnant += 1;
                    } else {
                        stagnant = 0;
                    }
                    x = candidate;
                    value = candidate_value;
                    accepted = true;
                    break;
                }
                // Insufficient increase or positive-definiteness lost: shrink.
                Ok(_) | Err(Error::Solver(_)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            let g_norm = gradient.norm();
            if g_norm <= tol.max(1e-10) {
                break;
            }
            return Err(Error::Solver(format!(
                "line search failed at iteration {iterations}: gradient norm {g_norm:.3e}, \
                 likelihood {value:.6e}"
            )));
        }
        gradient = eiv_gradient(p, &x)?;
        iterations += 1;
    }
    let gradient_norm = gradient.norm();
    Ok(EivSolution {
        x,
        iterations,
        gradient_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_identity_passthrough() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let cfg = PinvConfig::new(1e-10).unwrap();
        let (x, report) = pinv_solve(&a, &b, &cfg).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
        assert_eq!(report.kept, 2);
        assert!(report.residual < 1e-14);
    }

    #[test]
    fn pinv_truncates_small_modes() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-8]));
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let cfg = PinvConfig::new(1e-4).unwrap();
        let (x, report) = pinv_solve(&a, &b, &cfg).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert_eq!(x[1], 0.0);
        assert_eq!(report.kept, 1);
        assert_eq!(report.singular_values.len(), 2);
        assert!(report.singular_values[0] >= report.singular_values[1]);
    }

    #[test]
    fn pinv_rejects_empty_and_mismatched() {
        let cfg = PinvConfig::new(1e-6).unwrap();
        let empty = DMatrix::<f64>::zeros(0, 0);
        assert!(pinv_solve(&empty, &DVector::zeros(0), &cfg).is_err());
        let a = DMatrix::<f64>::identity(2, 2);
        assert!(pinv_solve(&a, &DVector::zeros(3), &cfg).is_err());
    }

    #[test]
    fn rcond_validation() {
        assert!(PinvConfig::new(0.0).is_err());
        assert!(PinvConfig::new(1.0).is_err());
        assert!(PinvConfig::new(1e-6).is_ok());
    }

    #[test]
    fn eiv_likelihood_reduces_to_least_squares() {
        // Omega_A = 0, Omega_B = I, no prior: l(x) = -1/2 ||b - Ax||^2 + const.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.5]);
        let p = EivProblem {
            a: a.clone(),
            b: b.clone(),
            omega_b: DMatrix::identity(3, 3),
            omega_a: OmegaA::Zero,
            lambda: f64::INFINITY,
        };
        let x = DVector::from_vec(vec![0.3, -0.2]);
        let l = eiv_log_likelihood(&p, &x).unwrap();
        let expected = -0.5 * (&b - &a * &x).norm_squared();
        assert!((l - expected).abs() < 1e-12);

        // x = 0 leaves Omega_D = Omega_B exactly.
        let l0 = eiv_log_likelihood(&p, &DVector::zeros(2)).unwrap();
        assert!((l0 + 0.5 * b.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn eiv_gradient_zero_omega_a_is_gls() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 1.0, 0.7, 0.2]);
        let b = DVector::from_vec(vec![0.4, -1.0, 0.9]);
        let omega_b = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0, 2.0]));
        let p = EivProblem {
            a: a.clone(),
            b: b.clone(),
            omega_b: omega_b.clone(),
            omega_a: OmegaA::Zero,
            lambda: f64::INFINITY,
        };
        let x = DVector::from_vec(vec![0.1, -0.4]);
        let grad = eiv_gradient(&p, &x).unwrap();
        let expected = a.transpose() * omega_b.try_inverse().unwrap() * (&b - &a * &x);
        assert!((grad - expected).norm() < 1e-12);
    }

    #[test]
    fn eiv_solve_matches_least_squares() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 2.8, -0.9]);
        let p = EivProblem {
            a: a.clone(),
            b: b.clone(),
            omega_b: DMatrix::identity(4, 4),
            omega_a: OmegaA::Zero,
            lambda: f64::INFINITY,
        };
        let sol = eiv_solve(&p, 500, 1e-10).unwrap();
        let normal = (a.transpose() * &a).try_inverse().unwrap() * a.transpose() * &b;
        assert!(
            (&sol.x - &normal).norm() < 1e-6,
            "{} vs {}",
            sol.x,
            normal
        );
    }

    #[test]
    fn eiv_solve_matches_ridge() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.3, 0.3]);
        let b = DVector::from_vec(vec![0.7, -0.1, 1.1]);
        let sigma_sq = 0.5;
        let lambda = 2.0;
        let p = EivProblem {
            a: a.clone(),
            b: b.clone(),
            omega_b: DMatrix::identity(3, 3) * sigma_sq,
            omega_a: OmegaA::Zero,
            lambda,
        };
        let sol = eiv_solve(&p, 1000, 1e-12).unwrap();
        let k = a.ncols();
        let ridge = (a.transpose() * &a / sigma_sq + DMatrix::identity(k, k) / lambda)
            .try_inverse()
            .unwrap()
            * a.transpose()
            * &b
            / sigma_sq;
        assert!((&sol.x - &ridge).norm() < 1e-6, "{} vs {}", sol.x, ridge);
    }
}
