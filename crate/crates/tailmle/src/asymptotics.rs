//! Closed-form second-order function, asymptotic bias and covariance of the
//! standardized estimators, and plug-in confidence intervals.
//!
//! The standardized pair `sqrt(k) * (gamma_hat - gamma0, sigma_hat/a(k/n) - 1)`
//! is asymptotically bivariate normal with mean `lambda * mu` and covariance
//! `Sigma`; `mu` depends on `(gamma0, rho)` through three distinct regimes and
//! `Sigma` on `gamma0` alone.

use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::numerics::{dyadic_breakpoints, integrate_adaptive, inverse_normal_cdf};

/// Parameters whose magnitude falls below this are treated as exactly zero
/// in the regime dispatch. The three regimes are genuinely distinct limits;
/// no interpolation is performed across them.
const CASE_ZERO_EPS: f64 = 1e-14;

/// Absolute error target for the quadrature oracle.
const QUADRATURE_TOL: f64 = 1e-10;

/// A second-order regime: true shape, second-order parameter, and the limit
/// `lambda` of `sqrt(k) * Phi(k/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderSpec {
    pub gamma0: f64,
    pub rho: f64,
    pub lambda: f64,
}

impl SecondOrderSpec {
    pub fn new(gamma0: f64, rho: f64, lambda: f64) -> Result<Self> {
        if !(gamma0 > -0.5) || !gamma0.is_finite() {
            return Err(Error::InvalidInput(format!("gamma0 must be > -1/2, got {gamma0}")));
        }
        if !(rho <= 0.0) {
            return Err(Error::InvalidInput(format!("rho must be <= 0, got {rho}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite lambda: {lambda}")));
        }
        Ok(Self { gamma0, rho, lambda })
    }
}

/// Symmetric 2x2 matrix in (shape, scale) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2x2 {
    pub var_gamma: f64,
    pub cov: f64,
    pub var_sigma: f64,
}

impl Sym2x2 {
    pub fn det(&self) -> f64 {
        self.var_gamma * self.var_sigma - self.cov * self.cov
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.var_gamma + self.var_sigma);
        let r = (0.25 * (self.var_gamma - self.var_sigma).powi(2) + self.cov * self.cov).sqrt();
        (mean - r, mean + r)
    }
}

/// The limit law: bias direction `mu`, its scale `lambda`, and covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticLaw {
    pub mu: [f64; 2],
    pub sigma: Sym2x2,
    pub lambda: f64,
    pub gamma0: f64,
}

impl AsymptoticLaw {
    /// Mean of the standardized pair, `lambda * mu`.
    pub fn bias(&self) -> [f64; 2] {
        [self.lambda * self.mu[0], self.lambda * self.mu[1]]
    }

    /// Asymptotic standard errors of `gamma_hat` and of `sigma_hat` relative
    /// to its centering, for k upper order statistics.
    pub fn std_errs(&self, k: usize) -> (f64, f64) {
        let sqrt_k = (k as f64).sqrt();
        (self.sigma.var_gamma.sqrt() / sqrt_k, self.sigma.var_sigma.sqrt() / sqrt_k)
    }
}

/// Second-order limit function. Three regimes:
/// `(x^-(gamma0+rho) - 1)/(gamma0+rho)` for `rho < 0` (read as `-log x` when
/// `gamma0 + rho = 0`), `-x^-gamma0 log(x)/gamma0` for `gamma0 != rho = 0`,
/// and `log^2 x` for `gamma0 = rho = 0`.
pub fn psi(x: f64, gamma0: f64, rho: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("psi requires x > 0, got {x}")));
    }
    if rho > CASE_ZERO_EPS {
        return Err(Error::InvalidInput(format!("rho must be <= 0, got {rho}")));
    }
    let log_x = x.ln();
    if rho < -CASE_ZERO_EPS {
        let s = gamma0 + rho;
        if s.abs() <= CASE_ZERO_EPS {
            Ok(-log_x)
        } else {
            Ok((-s * log_x).exp_m1() / s)
        }
    } else if gamma0.abs() > CASE_ZERO_EPS {
        Ok(-(-gamma0 * log_x).exp() * log_x / gamma0)
    } else {
        Ok(log_x * log_x)
    }
}

/// Closed-form bias direction of the standardized pair:
/// exact case match on `(gamma0, rho)`, no interpolation across regimes.
pub fn bias_mu(gamma0: f64, rho: f64) -> Result<[f64; 2]> {
    if !(gamma0 > -0.5) || !gamma0.is_finite() {
        return Err(Error::InvalidInput(format!("gamma0 must be > -1/2, got {gamma0}")));
    }
    if rho > CASE_ZERO_EPS {
        return Err(Error::InvalidInput(format!("rho must be <= 0, got {rho}")));
    }
    if rho < -CASE_ZERO_EPS {
        let denom = (1.0 - rho) * (gamma0 - rho + 1.0);
        Ok([
            rho * (gamma0 + 1.0) / denom,
            (1.0 - 2.0 * rho + gamma0 - rho * gamma0) / denom,
        ])
    } else if gamma0.abs() > CASE_ZERO_EPS {
        Ok([1.0, 1.0 / gamma0])
    } else {
        Ok([2.0, 0.0])
    }
}

/// Quadrature oracle for [`bias_mu`]: evaluates the two bias integrals of
/// the limit theorem by adaptive Gauss-Kronrod integration on (0, 1], with
/// a geometric cascade of panels toward the integrable singularity at 0.
///
/// For `gamma0 != 0` the components are
/// `(gamma0+1)^2/gamma0 * int (t^g - (2g+1) t^2g) Psi(t) dt` and
/// `(gamma0+1)/gamma0 * int ((g+1)(2g+1) t^2g - t^g) Psi(t) dt`;
/// at `gamma0 = 0` they are read as the limits
/// `-int (2 + log t) Psi(t) dt` and `int (3 + log t) Psi(t) dt`.
pub fn bias_mu_numeric(gamma0: f64, rho: f64) -> Result<[f64; 2]> {
    if !(gamma0 > -0.5) || !gamma0.is_finite() {
        return Err(Error::InvalidInput(format!("gamma0 must be > -1/2, got {gamma0}")));
    }
    if rho > CASE_ZERO_EPS {
        return Err(Error::InvalidInput(format!("rho must be <= 0, got {rho}")));
    }
    let edges = dyadic_breakpoints(300);
    let quad = |weight: &dyn Fn(f64) -> f64, tol: f64| -> Result<f64> {
        let q = integrate_adaptive(
            |t| weight(t) * psi(t, gamma0, rho).expect("t in (0,1)"),
            &edges,
            tol,
            20_000,
        )?;
        Ok(q.value)
    };

    if gamma0.abs() > CASE_ZERO_EPS {
        let g = gamma0;
        let pre1 = (g + 1.0) * (g + 1.0) / g;
        let pre2 = (g + 1.0) / g;
        let tol1 = QUADRATURE_TOL / pre1.abs().max(1.0);
        let tol2 = QUADRATURE_TOL / pre2.abs().max(1.0);
        let i1 = quad(&|t: f64| t.powf(g) - (2.0 * g + 1.0) * t.powf(2.0 * g), tol1)?;
        let i2 = quad(
            &|t: f64| (g + 1.0) * (2.0 * g + 1.0) * t.powf(2.0 * g) - t.powf(g),
            tol2,
        )?;
        Ok([pre1 * i1, pre2 * i2])
    } else {
        let i1 = quad(&|t: f64| 2.0 + t.ln(), QUADRATURE_TOL)?;
        let i2 = quad(&|t: f64| 3.0 + t.ln(), QUADRATURE_TOL)?;
        Ok([-i1, i2])
    }
}

/// Limit covariance of the standardized pair:
/// `[[ (1+g)^2, -(1+g) ], [ -(1+g), 2 + 2g + g^2 ]]`.
pub fn covariance_sigma(gamma0: f64) -> Result<Sym2x2> {
    if !(gamma0 > -0.5) || !gamma0.is_finite() {
        return Err(Error::InvalidInput(format!("gamma0 must be > -1/2, got {gamma0}")));
    }
    let one_plus = 1.0 + gamma0;
    Ok(Sym2x2 {
        var_gamma: one_plus * one_plus,
        cov: -one_plus,
        var_sigma: 2.0 + 2.0 * gamma0 + gamma0 * gamma0,
    })
}

/// Bundles the bias vector and covariance for a second-order regime.
pub fn asymptotic_law(spec: &SecondOrderSpec) -> Result<AsymptoticLaw> {
    Ok(AsymptoticLaw {
        mu: bias_mu(spec.gamma0, spec.rho)?,
        sigma: covariance_sigma(spec.gamma0)?,
        lambda: spec.lambda,
        gamma0: spec.gamma0,
    })
}

/// Two-sided confidence intervals for shape and scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceIntervals {
    pub gamma: (f64, f64),
    pub sigma: (f64, f64),
    pub level: f64,
    pub z: f64,
}

fn z_for_level(level: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidInput(format!(
            "confidence level must be in [0, 1), got {level}"
        )));
    }
    if level == 0.0 {
        Ok(0.0)
    } else {
        inverse_normal_cdf(0.5 * (1.0 + level))
    }
}

/// Plug-in confidence intervals from the limit law with `lambda` treated as
/// zero: `gamma_hat +- z (1+gamma_hat)/sqrt(k)` and
/// `sigma_hat (1 +- z sqrt(2+2g+g^2)/sqrt(k))`. The shape interval is
/// clamped below at -1/2 and the scale interval at 0.
pub fn confidence_interval(fit: &FitResult, level: f64) -> Result<ConfidenceIntervals> {
    if !fit.converged {
        return Err(Error::InvalidInput("confidence interval requires a converged fit".into()));
    }
    if !(fit.gamma_hat > -0.5) {
        return Err(Error::InvalidInput(format!(
            "confidence interval requires gamma_hat > -1/2, got {}",
            fit.gamma_hat
        )));
    }
    let z = z_for_level(level)?;
    interval_at(fit, level, z, fit.gamma_hat, fit.sigma_hat)
}

/// Bias-corrected variant: when the caller supplies `(rho, lambda)`, the
/// interval centers are shifted by `-lambda mu / sqrt(k)` with `mu`
/// evaluated at the fitted shape.
pub fn confidence_interval_corrected(
    fit: &FitResult,
    level: f64,
    rho: f64,
    lambda: f64,
) -> Result<ConfidenceIntervals> {
    if !fit.converged {
        return Err(Error::InvalidInput("confidence interval requires a converged fit".into()));
    }
    if !(fit.gamma_hat > -0.5) {
        return Err(Error::InvalidInput(format!(
            "confidence interval requires gamma_hat > -1/2, got {}",
            fit.gamma_hat
        )));
    }
    let z = z_for_level(level)?;
    let mu = bias_mu(fit.gamma_hat, rho)?;
    let sqrt_k = (fit.k as f64).sqrt();
    let gamma_center = fit.gamma_hat - lambda * mu[0] / sqrt_k;
    let sigma_center = fit.sigma_hat * (1.0 - lambda * mu[1] / sqrt_k);
    interval_at(fit, level, z, gamma_center, sigma_center)
}

fn interval_at(
    fit: &FitResult,
    level: f64,
    z: f64,
    gamma_center: f64,
    sigma_center: f64,
) -> Result<ConfidenceIntervals> {
    let sqrt_k = (fit.k as f64).sqrt();
    let g = fit.gamma_hat;
    let half_gamma = z * (1.0 + g) / sqrt_k;
    let rel_sigma = z * (2.0 + 2.0 * g + g * g).sqrt() / sqrt_k;
    Ok(ConfidenceIntervals {
        gamma: ((gamma_center - half_gamma).max(-0.5), gamma_center + half_gamma),
        sigma: ((sigma_center * (1.0 - rel_sigma)).max(0.0), sigma_center * (1.0 + rel_sigma)),
        level,
        z,
    })
}
