//! Excess-set construction and the three tail estimators: generalized Pareto
//! maximum likelihood via a one-dimensional profile root search, the explicit
//! moment-ratio estimator for the shape-zero regime, and the log-spacing
//! moment estimator.

use crate::error::{Error, Result};
use crate::gpd::{GpdParams, GAMMA_ZERO_EPS};
use crate::numerics::brent_root;

/// Default relative tolerance for the shape-zero manifold test.
pub const DEFAULT_ZERO_GAMMA_TOL: f64 = 1e-12;

/// The top-k excesses over the (n-k)-th ascending order statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessSet {
    threshold: f64,
    /// Descending; each entry >= 0.
    excesses: Vec<f64>,
    n: usize,
}

/// Selects the k largest values and the (n-k)-th ascending order statistic.
fn top_k_and_threshold(sample: &[f64], k: usize) -> Result<(f64, Vec<f64>)> {
    let n = sample.len();
    if k < 2 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    if let Some(bad) = sample.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample value: {bad}")));
    }
    let mut values = sample.to_vec();
    let (_, threshold, top) = values.select_nth_unstable_by(n - k - 1, f64::total_cmp);
    let threshold = *threshold;
    let mut top = top.to_vec();
    top.sort_by(|a, b| b.total_cmp(a));
    Ok((threshold, top))
}

impl ExcessSet {
    /// Builds an excess set from raw parts. `excesses` may be given in any
    /// order; they are stored descending. Requires `2 <= k < n` and
    /// nonnegative finite excesses.
    pub fn new(threshold: f64, mut excesses: Vec<f64>, n: usize) -> Result<Self> {
        let k = excesses.len();
        if k < 2 || k >= n {
            return Err(Error::InvalidK { k, n });
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite threshold: {threshold}")));
        }
        if let Some(bad) = excesses.iter().find(|y| !y.is_finite() || **y < 0.0) {
            return Err(Error::InvalidInput(format!("invalid excess: {bad}")));
        }
        excesses.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { threshold, excesses, n })
    }

    /// Extracts the top-k excesses from a raw sample. Ties with the
    /// threshold are kept as zero excesses.
    pub fn extract(sample: &[f64], k: usize) -> Result<Self> {
        let (threshold, top) = top_k_and_threshold(sample, k)?;
        let excesses: Vec<f64> = top.iter().map(|x| x - threshold).collect();
        Ok(Self { threshold, excesses, n: sample.len() })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Excesses in descending order.
    pub fn excesses(&self) -> &[f64] {
        &self.excesses
    }

    pub fn k(&self) -> usize {
        self.excesses.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_excess(&self) -> f64 {
        self.excesses[0]
    }

    pub fn mean_excess(&self) -> f64 {
        self.excesses.iter().sum::<f64>() / self.k() as f64
    }

    fn mean_square_excess(&self) -> f64 {
        self.excesses.iter().map(|y| y * y).sum::<f64>() / self.k() as f64
    }
}

/// See [`ExcessSet::extract`].
pub fn extract_excesses(sample: &[f64], k: usize) -> Result<ExcessSet> {
    ExcessSet::extract(sample, k)
}

/// Which estimator produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Mle,
    ExplicitZero,
    Moment,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Mle => "mle",
            EstimatorKind::ExplicitZero => "explicit_zero",
            EstimatorKind::Moment => "moment",
        }
    }
}

/// A fitted shape/scale pair with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub gamma_hat: f64,
    pub sigma_hat: f64,
    /// Profile parameter, `gamma_hat / sigma_hat`.
    pub theta_hat: f64,
    pub loglik: f64,
    /// Left-minus-right of the two simplified likelihood equations at the
    /// estimate. May be non-finite for non-MLE estimates outside the
    /// likelihood support.
    pub residuals: (f64, f64),
    pub k: usize,
    pub n: usize,
    pub converged: bool,
    pub method: EstimatorKind,
    /// Number of admissible stationary points found by the profile search
    /// (zero for the non-MLE estimators).
    pub admissible_roots: usize,
}

/// Sum of generalized Pareto log-densities over the excesses. Returns
/// `-inf` (not an error) when the parameters violate the support condition,
/// so search code can reject the point.
pub fn log_likelihood(e: &ExcessSet, gamma: f64, sigma: f64) -> f64 {
    let Ok(params) = GpdParams::new(gamma, sigma) else {
        return f64::NEG_INFINITY;
    };
    let mut total = 0.0;
    for &y in e.excesses() {
        let lp = params.log_pdf(y).expect("excesses are finite");
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += lp;
    }
    total
}

/// `((1+w) log(1+w) - w) / w^2`, the stable kernel of the shape score;
/// equals 1/2 at w = 0.
fn log1p_kernel(w: f64) -> f64 {
    if w.abs() < 1e-3 {
        // Series sum_{m>=2} (-w)^m / (m (m-1)) / w^2.
        0.5 + w * (-1.0 / 6.0 + w * (1.0 / 12.0 + w * (-1.0 / 20.0 + w / 30.0)))
    } else {
        ((1.0 + w) * w.ln_1p() - w) / (w * w)
    }
}

/// Score vector: the two likelihood-equation sums over all excesses, with
/// the exact shape-zero limit expressions on the `|gamma| < 1e-12` branch.
pub fn score(e: &ExcessSet, gamma: f64, sigma: f64) -> Result<(f64, f64)> {
    if !gamma.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "score requires finite gamma and sigma > 0, got gamma={gamma}, sigma={sigma}"
        )));
    }
    let zero_branch = gamma.abs() < GAMMA_ZERO_EPS;
    let mut d_gamma = 0.0;
    let mut d_sigma = 0.0;
    for &y in e.excesses() {
        let u = y / sigma;
        if zero_branch {
            d_gamma += 0.5 * u * u - u;
            d_sigma += (u - 1.0) / sigma;
        } else {
            let w = gamma * u;
            let t = 1.0 + w;
            if t <= 0.0 {
                return Err(Error::SupportViolation);
            }
            // (1/g^2) log(1+w) - (1/g + 1) u/(1+w), regrouped so the two
            // O(u/g) pieces cancel analytically instead of numerically.
            d_gamma += (u * u * log1p_kernel(w) - u) / t;
            d_sigma += ((1.0 + gamma) * u / t - 1.0) / sigma;
        }
    }
    Ok((d_gamma, d_sigma))
}

/// Mean of `log(1 + theta y)` over the excesses: the profile value of the
/// shape parameter at profile parameter `theta = gamma/sigma`.
pub fn profile_gamma(theta: f64, e: &ExcessSet) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::DomainViolation(format!("non-finite theta: {theta}")));
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    if theta < 0.0 && 1.0 + theta * e.max_excess() <= 0.0 {
        return Err(Error::DomainViolation(format!(
            "theta = {theta:e} at or below -1/max_excess = {:e}",
            -1.0 / e.max_excess()
        )));
    }
    Ok(e.excesses().iter().map(|&y| (theta * y).ln_1p()).sum::<f64>() / e.k() as f64)
}

/// Tests the shape-zero manifold condition: the likelihood equations hold
/// with `gamma = 0` if and only if `(1/2k) sum y^2 = (mean y)^2`, in which
/// case the scale estimate is the mean excess. `tol` is relative to
/// `(mean y)^2`.
pub fn check_zero_gamma(e: &ExcessSet, tol: f64) -> Option<f64> {
    let m1 = e.mean_excess();
    if !(m1 > 0.0) {
        return None;
    }
    let half_ms = 0.5 * e.mean_square_excess();
    if (half_ms - m1 * m1).abs() <= tol * (m1 * m1) {
        Some(m1)
    } else {
        None
    }
}

/// In one pass over the excesses: mean log(1+theta y) and mean 1/(1+theta y).
fn profile_terms(e: &ExcessSet, theta: f64) -> (f64, f64) {
    let mut log_sum = 0.0;
    let mut inv_sum = 0.0;
    for &y in e.excesses() {
        let w = theta * y;
        log_sum += w.ln_1p();
        inv_sum += 1.0 / (1.0 + w);
    }
    let k = e.k() as f64;
    (log_sum / k, inv_sum / k)
}

/// The profile equation whose roots are MLE candidates:
/// `g(theta) = mean 1/(1+theta y) - 1/(1 + mean log(1+theta y))`.
fn profile_equation(e: &ExcessSet, theta: f64) -> f64 {
    let (gamma, inv_mean) = profile_terms(e, theta);
    inv_mean - 1.0 / (1.0 + gamma)
}

/// Left-minus-right residuals of the two simplified likelihood equations at
/// `(gamma, sigma)`. Non-finite when the support condition fails.
pub fn simplified_residuals(e: &ExcessSet, gamma: f64, sigma: f64) -> (f64, f64) {
    if gamma == 0.0 {
        let (log_mean, inv_mean) = profile_terms(e, 0.0);
        return (log_mean, inv_mean - 1.0);
    }
    let theta = gamma / sigma;
    if theta < 0.0 && 1.0 + theta * e.max_excess() <= 0.0 {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let (log_mean, inv_mean) = profile_terms(e, theta);
    (log_mean - gamma, inv_mean - 1.0 / (1.0 + gamma))
}

/// Options for the maximum likelihood profile search.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative tolerance on the profile parameter at a refined root.
    pub theta_rel_tol: f64,
    /// Bracketing grid density, points per decade of |theta| on each side.
    pub grid_points_per_decade: usize,
    /// Upper search bound as a multiple of 1/mean_excess.
    pub theta_max_factor: f64,
    /// Lower grid magnitude as a multiple of 1/mean_excess.
    pub theta_min_factor: f64,
    /// Relative tolerance of the shape-zero manifold test.
    pub zero_gamma_tol: f64,
    /// Acceptance threshold for the likelihood-equation residuals.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            theta_rel_tol: 1e-12,
            grid_points_per_decade: 8,
            theta_max_factor: 1e6,
            theta_min_factor: 1e-9,
            zero_gamma_tol: DEFAULT_ZERO_GAMMA_TOL,
            residual_tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// Shape estimates at or below this boundary are rejected; the likelihood
/// is maximized over gamma > -1/2 only.
const GAMMA_LOWER_BOUND: f64 = -0.5;

/// Maximum likelihood fit of (gamma, sigma) to an excess set.
///
/// The two likelihood equations are reduced to a root search in the profile
/// parameter `theta = gamma/sigma`: brackets of `g` are located on a
/// logarithmic grid over `(-1/max_excess, 0)` and `(0, theta_max]` and
/// refined by Brent's method. The shape-zero manifold is consulted first;
/// among multiple admissible roots the log-likelihood maximizer is returned.
pub fn solve_mle(e: &ExcessSet, opts: &SolverOptions) -> Result<FitResult> {
    let y_max = e.max_excess();
    if !(y_max > 0.0) {
        return Err(Error::NoInteriorSolution("all excesses are zero".into()));
    }
    let y_min = *e.excesses().last().expect("k >= 2");
    if y_max == y_min {
        // Constant positive excesses force log(1+gamma) = gamma, i.e.
        // gamma = 0, but the shape-zero manifold condition fails.
        return Err(Error::NoInteriorSolution("constant excesses".into()));
    }

    if let Some(sigma) = check_zero_gamma(e, opts.zero_gamma_tol) {
        let loglik = log_likelihood(e, 0.0, sigma);
        return Ok(FitResult {
            gamma_hat: 0.0,
            sigma_hat: sigma,
            theta_hat: 0.0,
            loglik,
            residuals: simplified_residuals(e, 0.0, sigma),
            k: e.k(),
            n: e.n(),
            converged: true,
            method: EstimatorKind::Mle,
            admissible_roots: 1,
        });
    }

    let mean = e.mean_excess();
    let theta_floor = opts.theta_min_factor / mean;
    let theta_max = opts.theta_max_factor / mean;
    let theta_neg_bound = -(1.0 - 1e-10) / y_max;

    let mut candidates: Vec<f64> = Vec::new();
    let mut scan_side = |lo_mag: f64, hi_mag: f64, sign: f64| {
        if !(lo_mag < hi_mag) {
            return;
        }
        let decades = (hi_mag / lo_mag).log10();
        let points = (decades * opts.grid_points_per_decade as f64).ceil() as usize + 1;
        let step = (hi_mag / lo_mag).powf(1.0 / (points - 1).max(1) as f64);
        let mut prev: Option<(f64, f64)> = None;
        let mut mag = lo_mag;
        for i in 0..points {
            // On the negative side the grid walks from the boundary toward 0.
            let theta = sign * mag;
            let g = profile_equation(e, theta);
            if g == 0.0 {
                candidates.push(theta);
            } else if let Some((theta_prev, g_prev)) = prev {
                if g_prev.signum() != g.signum() {
                    if let Ok(root) = brent_root(
                        |t| profile_equation(e, t),
                        theta_prev,
                        theta,
                        g_prev,
                        g,
                        opts.theta_rel_tol,
                        opts.max_iter,
                    ) {
                        candidates.push(root);
                    }
                }
            }
            prev = Some((theta, g));
            mag = if i + 2 == points { hi_mag } else { mag * step };
        }
    };

    scan_side(theta_floor, theta_max, 1.0);
    scan_side(theta_floor, -theta_neg_bound, -1.0);

    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() <= 1e-8 * a.abs().max(b.abs()));

    let mut best: Option<FitResult> = None;
    let mut admissible = 0usize;
    for theta in candidates {
        let Ok(gamma) = profile_gamma(theta, e) else { continue };
        if gamma <= GAMMA_LOWER_BOUND + 1e-10 {
            continue;
        }
        let sigma = gamma / theta;
        if !(sigma > 0.0) || !sigma.is_finite() {
            continue;
        }
        let residuals = simplified_residuals(e, gamma, sigma);
        if residuals.0.abs().max(residuals.1.abs()) > opts.residual_tol {
            continue;
        }
        admissible += 1;
        let loglik = log_likelihood(e, gamma, sigma);
        if best.as_ref().map_or(true, |b| loglik > b.loglik) {
            best = Some(FitResult {
                gamma_hat: gamma,
                sigma_hat: sigma,
                theta_hat: theta,
                loglik,
                residuals,
                k: e.k(),
                n: e.n(),
                converged: true,
                method: EstimatorKind::Mle,
                admissible_roots: 0,
            });
        }
    }

    match best {
        Some(mut fit) => {
            fit.admissible_roots = admissible;
            Ok(fit)
        }
        None => Err(Error::ConvergenceFailure(format!(
            "no admissible root of the profile equation in ({:e}, 0) u (0, {:e}] for k={}",
            theta_neg_bound,
            theta_max,
            e.k()
        ))),
    }
}

/// Explicit estimator for the shape-zero regime, built from the first two
/// excess moments `m1, m2`:
/// `gamma* = 1 - (1 - m1^2/m2)^(-1) / 2` and `a* = 2 m1^3 / m2`.
pub fn explicit_zero_estimator(e: &ExcessSet) -> Result<(f64, f64)> {
    let m1 = e.mean_excess();
    let m2 = e.mean_square_excess();
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSample("second excess moment is zero".into()));
    }
    let ratio = m1 * m1 / m2;
    let denom = 1.0 - ratio;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateSample(format!(
            "moment ratio m1^2/m2 = {ratio} leaves a zero denominator"
        )));
    }
    let gamma_star = 1.0 - 0.5 / denom;
    let a_star = 2.0 * m1 * m1 * m1 / m2;
    Ok((gamma_star, a_star))
}

/// Moment (log-spacing) estimator over the top k order statistics:
/// `gamma_mom = M1 + 1 - (1 - M1^2/M2)^(-1) / 2` with
/// `M_j = mean (log X_(n-i) - log X_(n-k))^j`, `i = 0..k-1`, and scale
/// `a** = 2 M1^3 / M2`. Requires a strictly positive threshold.
pub fn moment_estimator(sample: &[f64], k: usize) -> Result<(f64, f64)> {
    let (threshold, top) = top_k_and_threshold(sample, k)?;
    if threshold <= 0.0 {
        return Err(Error::RequiresPositiveThreshold(threshold));
    }
    let log_threshold = threshold.ln();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for &x in &top {
        let spacing = x.ln() - log_threshold;
        m1 += spacing;
        m2 += spacing * spacing;
    }
    m1 /= k as f64;
    m2 /= k as f64;
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSample("all top order statistics tie the threshold".into()));
    }
    let ratio = m1 * m1 / m2;
    let denom = 1.0 - ratio;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateSample(format!(
            "log-moment ratio M1^2/M2 = {ratio} leaves a zero denominator"
        )));
    }
    let gamma_mom = m1 + 1.0 - 0.5 / denom;
    let a_star_star = 2.0 * m1 * m1 * m1 / m2;
    Ok((gamma_mom, a_star_star))
}

/// Packages any (gamma, sigma) estimate as a [`FitResult`] with the
/// likelihood diagnostics evaluated at that point.
pub fn evaluate_fit(e: &ExcessSet, gamma_hat: f64, sigma_hat: f64, method: EstimatorKind) -> FitResult {
    FitResult {
        gamma_hat,
        sigma_hat,
        theta_hat: if gamma_hat == 0.0 { 0.0 } else { gamma_hat / sigma_hat },
        loglik: log_likelihood(e, gamma_hat, sigma_hat),
        residuals: simplified_residuals(e, gamma_hat, sigma_hat),
        k: e.k(),
        n: e.n(),
        converged: true,
        method,
        admissible_roots: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(excesses: &[f64]) -> ExcessSet {
        ExcessSet::new(0.0, excesses.to_vec(), excesses.len() + 1).unwrap()
    }

    #[test]
    fn extract_basic_bookkeeping() {
        let e = extract_excesses(&[1.0, 5.0, 3.0, 2.0, 4.0], 2).unwrap();
        assert_eq!(e.threshold(), 3.0);
        assert_eq!(e.excesses(), &[2.0, 1.0]);
        assert_eq!(e.k(), 2);
        assert_eq!(e.n(), 5);
    }

    #[test]
    fn extract_total_ties() {
        let e = extract_excesses(&[7.0, 7.0, 7.0, 7.0], 2).unwrap();
        assert_eq!(e.threshold(), 7.0);
        assert_eq!(e.excesses(), &[0.0, 0.0]);
    }

    #[test]
    fn extract_rejects_bad_k_and_values() {
        assert!(matches!(
            extract_excesses(&[1.0, 2.0, 3.0], 3),
            Err(Error::InvalidK { k: 3, n: 3 })
        ));
        assert!(matches!(
            extract_excesses(&[1.0, 2.0, 3.0], 1),
            Err(Error::InvalidK { .. })
        ));
        assert!(extract_excesses(&[1.0, f64::NAN, 3.0], 2).is_err());
    }

    #[test]
    fn extract_is_permutation_invariant() {
        let base = vec![0.3, -1.0, 2.5, 2.5, 9.1, 4.0, 0.0];
        let mut shuffled = base.clone();
        shuffled.reverse();
        shuffled.swap(1, 4);
        let a = extract_excesses(&base, 3).unwrap();
        let b = extract_excesses(&shuffled, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn log_likelihood_reference_values() {
        assert!((log_likelihood(&set(&[1.0, 1.0]), 0.0, 1.0) + 2.0).abs() < 1e-12);
        let ll = log_likelihood(&set(&[1.0, 0.0]), 0.0, 0.5);
        assert!((ll - (2.0 * 2.0_f64.ln() - 2.0)).abs() < 1e-12, "got {ll}");
        assert_eq!(log_likelihood(&set(&[2.0, 0.1]), -1.0, 1.0), f64::NEG_INFINITY);
        assert_eq!(log_likelihood(&set(&[1.0, 0.5]), 0.5, -1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn score_zero_shape_reference_values() {
        let (d_gamma, _) = score(&set(&[2.0, 2.0]), 0.0, 1.0).unwrap();
        assert!(d_gamma.abs() < 1e-14);
        let sigma = 1.7;
        let (_, d_sigma) = score(&set(&[sigma, sigma]), 0.0, sigma).unwrap();
        assert!(d_sigma.abs() < 1e-14);
        assert!(matches!(score(&set(&[3.0, 1.0]), -0.5, 1.0), Err(Error::SupportViolation)));
    }

    #[test]
    fn score_matches_finite_differences() {
        let e = set(&[0.2, 1.4, 3.7, 0.9, 2.2, 0.05]);
        for (gamma, sigma) in [(0.4, 1.2), (-0.2, 2.0), (1.5, 0.7), (1e-9, 1.0)] {
            let (dg, ds) = score(&e, gamma, sigma).unwrap();
            let h = 1e-6;
            let fd_g = (log_likelihood(&e, gamma + h, sigma) - log_likelihood(&e, gamma - h, sigma))
                / (2.0 * h);
            let fd_s = (log_likelihood(&e, gamma, sigma + h) - log_likelihood(&e, gamma, sigma - h))
                / (2.0 * h);
            assert!((dg - fd_g).abs() < 1e-5, "gamma={gamma}: {dg} vs {fd_g}");
            assert!((ds - fd_s).abs() < 1e-5, "gamma={gamma}: {ds} vs {fd_s}");
        }
    }

    #[test]
    fn score_continuous_across_zero_shape_branch() {
        let e = set(&[0.2, 1.4, 3.7, 0.9]);
        let (dg0, ds0) = score(&e, 0.0, 1.3).unwrap();
        let (dg1, ds1) = score(&e, 1e-11, 1.3).unwrap();
        assert!((dg0 - dg1).abs() < 1e-9);
        assert!((ds0 - ds1).abs() < 1e-9);
    }

    #[test]
    fn profile_gamma_reference_values() {
        let e = set(&[1.0, 0.0]);
        assert_eq!(profile_gamma(0.0, &e).unwrap(), 0.0);
        assert!((profile_gamma(1.0, &e).unwrap() - 0.5 * 2.0_f64.ln()).abs() < 1e-15);
        assert!(matches!(profile_gamma(-1.0, &e), Err(Error::DomainViolation(_))));
        assert!(matches!(profile_gamma(-1.5, &e), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn zero_gamma_manifold_detection() {
        assert_eq!(check_zero_gamma(&set(&[1.0, 0.0]), 1e-12), Some(0.5));
        assert_eq!(check_zero_gamma(&set(&[1.0, 1.0]), 1e-12), None);
        for c in [0.5, 1.0, 3.0] {
            assert_eq!(check_zero_gamma(&set(&[c, 0.0]), 1e-12), Some(c / 2.0));
        }
        assert_eq!(check_zero_gamma(&set(&[0.0, 0.0]), 1e-12), None);
    }

    #[test]
    fn solve_mle_takes_zero_branch_exactly() {
        let fit = solve_mle(&set(&[1.0, 0.0]), &SolverOptions::default()).unwrap();
        assert_eq!(fit.gamma_hat, 0.0);
        assert_eq!(fit.sigma_hat, 0.5);
        assert_eq!(fit.theta_hat, 0.0);
        assert!(fit.converged);
        assert_eq!(fit.residuals, (0.0, 0.0));
    }

    #[test]
    fn solve_mle_rejects_degenerate_sets() {
        assert!(matches!(
            solve_mle(&set(&[0.0, 0.0, 0.0]), &SolverOptions::default()),
            Err(Error::NoInteriorSolution(_))
        ));
        assert!(matches!(
            solve_mle(&set(&[2.0, 2.0, 2.0]), &SolverOptions::default()),
            Err(Error::NoInteriorSolution(_))
        ));
    }

    #[test]
    fn solve_mle_consistent_on_exact_gpd_excesses() {
        let params = GpdParams::new(0.5, 1.0).unwrap();
        let excesses = params.sample(10_000, 91);
        let e = ExcessSet::new(0.0, excesses, 20_000).unwrap();
        let fit = solve_mle(&e, &SolverOptions::default()).unwrap();
        assert!((fit.gamma_hat - 0.5).abs() < 0.05, "gamma_hat {}", fit.gamma_hat);
        assert!((fit.sigma_hat - 1.0).abs() < 0.05, "sigma_hat {}", fit.sigma_hat);
        assert!(fit.converged);
        assert!(fit.admissible_roots >= 1);
    }

    #[test]
    fn solve_mle_satisfies_both_equation_forms() {
        // At the returned root the raw likelihood equations and the
        // simplified system must vanish together. The raw forms are
        // evaluated here from first principles, independent of the solver.
        let params = GpdParams::new(-0.2, 2.0).unwrap();
        let excesses = params.sample(2_000, 7);
        let e = ExcessSet::new(0.0, excesses, 5_000).unwrap();
        let fit = solve_mle(&e, &SolverOptions::default()).unwrap();
        assert!(fit.residuals.0.abs() <= 1e-8 && fit.residuals.1.abs() <= 1e-8);

        let (g, s) = (fit.gamma_hat, fit.sigma_hat);
        let k = e.k() as f64;
        let mut eq1 = 0.0;
        let mut eq2 = 0.0;
        for &y in e.excesses() {
            let w = g * y / s;
            eq1 += (1.0 + w).ln() / (g * g) - (1.0 / g + 1.0) * (y / s) / (1.0 + w);
            eq2 += (1.0 / g + 1.0) * w / (1.0 + w);
        }
        // Equation scale: per-excess averages.
        assert!((eq1 / k).abs() < 1e-8, "raw shape equation {}", eq1 / k);
        assert!((eq2 / k - 1.0).abs() < 1e-8, "raw scale equation {}", eq2 / k);

        let (dg, ds) = score(&e, g, s).unwrap();
        assert!(dg.abs() < 1e-6 && ds.abs() < 1e-6, "score ({dg}, {ds})");
    }

    #[test]
    fn solve_mle_fit_is_local_maximum() {
        let params = GpdParams::new(0.3, 1.0).unwrap();
        let excesses = params.sample(500, 3);
        let e = ExcessSet::new(0.0, excesses, 1_000).unwrap();
        let fit = solve_mle(&e, &SolverOptions::default()).unwrap();
        for dg in [-1e-4, 0.0, 1e-4] {
            for ds in [-1e-4, 0.0, 1e-4] {
                if dg == 0.0 && ds == 0.0 {
                    continue;
                }
                let ll = log_likelihood(&e, fit.gamma_hat + dg, fit.sigma_hat + ds);
                assert!(
                    ll <= fit.loglik,
                    "perturbation ({dg}, {ds}) improves loglik: {ll} > {}",
                    fit.loglik
                );
            }
        }
    }

    #[test]
    fn solve_mle_negative_shape_recovery() {
        let params = GpdParams::new(-0.3, 1.0).unwrap();
        let excesses = params.sample(10_000, 17);
        let e = ExcessSet::new(0.0, excesses, 20_000).unwrap();
        let fit = solve_mle(&e, &SolverOptions::default()).unwrap();
        assert!((fit.gamma_hat + 0.3).abs() < 0.05, "gamma_hat {}", fit.gamma_hat);
        assert!((fit.sigma_hat - 1.0).abs() < 0.05, "sigma_hat {}", fit.sigma_hat);
    }

    #[test]
    fn solve_mle_shift_scale_equivariance() {
        let params = GpdParams::new(0.4, 1.5).unwrap();
        let mut sample = params.sample(3_000, 23);
        // Shift so the sample is a location family, then fit both.
        for x in sample.iter_mut() {
            *x += 10.0;
        }
        let base = solve_mle(&extract_excesses(&sample, 300).unwrap(), &SolverOptions::default())
            .unwrap();
        let a = 3.25;
        let b = -7.0;
        let transformed: Vec<f64> = sample.iter().map(|x| a * x + b).collect();
        let fit = solve_mle(
            &extract_excesses(&transformed, 300).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((fit.gamma_hat - base.gamma_hat).abs() < 1e-9);
        assert!((fit.sigma_hat / base.sigma_hat - a).abs() < 1e-9 * a);
    }

    #[test]
    fn explicit_zero_reference_values() {
        let (gamma, a) = explicit_zero_estimator(&set(&[1.0, 0.0])).unwrap();
        assert_eq!(gamma, 0.0);
        assert_eq!(a, 0.5);
        assert!(matches!(
            explicit_zero_estimator(&set(&[1.0, 1.0])),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            explicit_zero_estimator(&set(&[0.0, 0.0])),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn explicit_zero_consistent_on_exponential_excesses() {
        let params = GpdParams::new(0.0, 1.0).unwrap();
        let excesses = params.sample(10_000, 57);
        let e = ExcessSet::new(0.0, excesses, 20_000).unwrap();
        let (gamma, a) = explicit_zero_estimator(&e).unwrap();
        assert!(gamma.abs() < 0.05, "gamma* {gamma}");
        assert!((a - 1.0).abs() < 0.05, "a* {a}");
    }

    #[test]
    fn explicit_zero_is_shift_scale_equivariant() {
        let params = GpdParams::new(0.0, 1.0).unwrap();
        let sample = params.sample(2_000, 5);
        let e = extract_excesses(&sample, 200).unwrap();
        let (g0, a0) = explicit_zero_estimator(&e).unwrap();
        let a = 0.125; // power of two: scaling is exact in floating point
        let transformed: Vec<f64> = sample.iter().map(|x| a * x + 4.0).collect();
        let et = extract_excesses(&transformed, 200).unwrap();
        let (g1, a1) = explicit_zero_estimator(&et).unwrap();
        assert!((g0 - g1).abs() < 1e-12);
        assert!((a1 / a0 - a).abs() < 1e-12 * a);
    }

    #[test]
    fn moment_estimator_reference_values() {
        let e1 = std::f64::consts::E;
        let sample = [e1, e1 * e1, e1 * e1 * e1];
        let (gamma, a) = moment_estimator(&sample, 2).unwrap();
        assert!((gamma + 2.5).abs() < 1e-12, "gamma_mom {gamma}");
        assert!((a - 2.7).abs() < 1e-12, "a** {a}");
    }

    #[test]
    fn moment_estimator_error_paths() {
        assert!(matches!(
            moment_estimator(&[5.0, 5.0, 5.0, 5.0], 2),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            moment_estimator(&[-1.0, -0.5, 1.0, 2.0], 3),
            Err(Error::RequiresPositiveThreshold(_))
        ));
        assert!(matches!(moment_estimator(&[1.0, 2.0], 2), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn moment_estimator_consistent_on_pareto_tail() {
        // Strict Pareto: X = 1/U has tail index 1.
        let uniform = GpdParams::new(0.0, 1.0).unwrap();
        let sample: Vec<f64> = uniform
            .sample(1_000_000, 11)
            .iter()
            .map(|y| (-y).exp().recip()) // U = exp(-Y) is uniform on (0,1]
            .collect();
        let (gamma, _) = moment_estimator(&sample, 10_000).unwrap();
        assert!((gamma - 1.0).abs() < 0.1, "gamma_mom {gamma}");
    }
}
