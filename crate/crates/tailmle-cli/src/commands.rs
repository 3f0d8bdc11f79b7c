//! Command implementations. Each command renders a document and an exit
//! code: 0 on success, 1 when every requested estimator failed, 2 for
//! usage/input errors.

use crate::input::read_numbers;
use crate::output::{csv_escape, csv_float, float17, Json};
use crate::{Cli, Command, EstimatorArg, Format};
use std::path::Path;
use tailmle::{
    asymptotic_law, confidence_interval, evaluate_fit, explicit_zero_estimator, extract_excesses,
    k_schedule, moment_estimator, run_monte_carlo, solve_mle, AsymptoticLaw, EstimatorKind,
    ExcessSet, FitResult, KChoice, MonteCarloConfig, MonteCarloReport, SecondOrderModel,
    SecondOrderSpec, SolverOptions,
};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn estimators(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

fn usage(e: tailmle::Error) -> CliError {
    CliError::usage(e.to_string())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let seed = resolve_seed(cli.seed)?;
    let (text, code) = match &cli.command {
        Command::Fit { input, k, estimator, level } => {
            cmd_fit(input, *k, *estimator, *level, format_or(cli.format, Format::Json)?)?
        }
        Command::Asymptotics { gamma0, rho, lambda } => (
            cmd_asymptotics(*gamma0, *rho, *lambda, format_or(cli.format, Format::Json)?)?,
            0,
        ),
        Command::Simulate { gamma0, rho, c, n, k, lambda, reps, estimator } => (
            cmd_simulate(
                *gamma0,
                *rho,
                *c,
                *n,
                *k,
                *lambda,
                *reps,
                *estimator,
                seed,
                format_or(cli.format, Format::Json)?,
            )?,
            0,
        ),
        Command::Sweep { input, k_min, k_max, k_step, estimator, level } => {
            if cli.format == Some(Format::Json) {
                return Err(CliError::usage("sweep emits plot-ready csv only; drop --format json"));
            }
            (cmd_sweep(input, *k_min, *k_max, *k_step, *estimator, *level)?, 0)
        }
    };

    match &cli.output {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if code != 0 {
        return Err(CliError::estimators("all requested estimators failed"));
    }
    Ok(())
}

fn format_or(format: Option<Format>, default: Format) -> Result<Format, CliError> {
    Ok(format.unwrap_or(default))
}

/// --seed flag, TAILMLE_SEED environment fallback, default 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("TAILMLE_SEED") {
        Ok(raw) => raw
            .parse::<u64>()
            .map_err(|_| CliError::usage(format!("TAILMLE_SEED is not a u64: {raw:?}"))),
        Err(_) => Ok(0),
    }
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct Enriched {
    fit: FitResult,
    stderr_gamma: Option<f64>,
    stderr_sigma: Option<f64>,
    ci_gamma: Option<(f64, f64)>,
    ci_sigma: Option<(f64, f64)>,
    warnings: Vec<String>,
}

fn fit_one(
    estimator: EstimatorKind,
    sample: &[f64],
    excess: &ExcessSet,
) -> tailmle::Result<FitResult> {
    match estimator {
        EstimatorKind::Mle => solve_mle(excess, &SolverOptions::default()),
        EstimatorKind::ExplicitZero => explicit_zero_estimator(excess)
            .map(|(gamma, scale)| evaluate_fit(excess, gamma, scale, estimator)),
        EstimatorKind::Moment => moment_estimator(sample, excess.k())
            .map(|(gamma, scale)| evaluate_fit(excess, gamma, scale, estimator)),
    }
}

fn enrich(fit: FitResult, level: f64) -> Result<Enriched, CliError> {
    let mut warnings = Vec::new();
    if !(fit.residuals.0.is_finite() && fit.residuals.1.is_finite()) {
        warnings.push("estimate lies outside the likelihood support; residuals are not finite".into());
    }
    let (stderr_gamma, stderr_sigma, ci_gamma, ci_sigma) = if fit.gamma_hat > -0.5 {
        let sqrt_k = (fit.k as f64).sqrt();
        let g = fit.gamma_hat;
        let se_g = (1.0 + g) / sqrt_k;
        let se_s = fit.sigma_hat * (2.0 + 2.0 * g + g * g).sqrt() / sqrt_k;
        match confidence_interval(&fit, level) {
            Ok(ci) => (Some(se_g), Some(se_s), Some(ci.gamma), Some(ci.sigma)),
            Err(e) => return Err(CliError::usage(e.to_string())),
        }
    } else {
        warnings.push("shape estimate at or below -1/2; standard errors and intervals unavailable".into());
        (None, None, None, None)
    };
    Ok(Enriched { fit, stderr_gamma, stderr_sigma, ci_gamma, ci_sigma, warnings })
}

enum Entry {
    Ok(Enriched),
    Failed(EstimatorKind, String),
}

fn cmd_fit(
    input: &Path,
    k: usize,
    estimator: EstimatorArg,
    level: f64,
    format: Format,
) -> Result<(String, u8), CliError> {
    if !(0.0..1.0).contains(&level) {
        return Err(CliError::usage(format!("--level must be in [0, 1), got {level}")));
    }
    let sample = read_numbers(input)?;
    let excess = extract_excesses(&sample, k).map_err(usage)?;

    let mut entries = Vec::new();
    let mut successes = 0usize;
    for est in estimator.kinds() {
        match fit_one(est, &sample, &excess) {
            Ok(fit) => {
                successes += 1;
                entries.push(Entry::Ok(enrich(fit, level)?));
            }
            Err(e) => entries.push(Entry::Failed(est, e.to_string())),
        }
    }

    let text = match format {
        Format::Json => fit_json(input, &excess, level, &entries),
        Format::Csv => fit_csv(&excess, &entries),
    };
    Ok((text, if successes == 0 { 1 } else { 0 }))
}

fn fit_json(input: &Path, excess: &ExcessSet, level: f64, entries: &[Entry]) -> String {
    let estimators = entries
        .iter()
        .map(|entry| match entry {
            Entry::Ok(e) => {
                let fit = &e.fit;
                Json::Object(vec![
                    ("estimator", Json::Str(fit.method.name().into())),
                    ("gamma_hat", Json::Float(fit.gamma_hat)),
                    ("sigma_hat", Json::Float(fit.sigma_hat)),
                    ("theta_hat", Json::Float(fit.theta_hat)),
                    ("loglik", Json::float_or_null(fit.loglik)),
                    (
                        "residuals",
                        if fit.residuals.0.is_finite() && fit.residuals.1.is_finite() {
                            Json::pair(fit.residuals)
                        } else {
                            Json::Null
                        },
                    ),
                    ("k", Json::Int(fit.k as u64)),
                    ("n", Json::Int(fit.n as u64)),
                    ("threshold", Json::Float(excess.threshold())),
                    ("converged", Json::Bool(fit.converged)),
                    ("admissible_roots", Json::Int(fit.admissible_roots as u64)),
                    ("stderr_gamma", opt_float(e.stderr_gamma)),
                    ("stderr_sigma", opt_float(e.stderr_sigma)),
                    ("ci_gamma", opt_pair(e.ci_gamma)),
                    ("ci_sigma", opt_pair(e.ci_sigma)),
                    (
                        "warnings",
                        Json::Array(e.warnings.iter().map(|w| Json::Str(w.clone())).collect()),
                    ),
                ])
            }
            Entry::Failed(est, message) => Json::Object(vec![
                ("estimator", Json::Str(est.name().into())),
                ("error", Json::Str(message.clone())),
            ]),
        })
        .collect();

    Json::Object(vec![
        ("command", Json::Str("fit".into())),
        ("input", Json::Str(input.display().to_string())),
        ("n", Json::Int(excess.n() as u64)),
        ("k", Json::Int(excess.k() as u64)),
        ("threshold", Json::Float(excess.threshold())),
        ("level", Json::Float(level)),
        ("estimators", Json::Array(estimators)),
    ])
    .render()
}

fn fit_csv(excess: &ExcessSet, entries: &[Entry]) -> String {
    let mut out = String::from(
        "estimator,gamma_hat,sigma_hat,theta_hat,loglik,residual_gamma,residual_sigma,k,n,\
         threshold,converged,stderr_gamma,stderr_sigma,ci_gamma_lo,ci_gamma_hi,ci_sigma_lo,\
         ci_sigma_hi,error\n",
    );
    for entry in entries {
        match entry {
            Entry::Ok(e) => {
                let fit = &e.fit;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},\n",
                    fit.method.name(),
                    float17(fit.gamma_hat),
                    float17(fit.sigma_hat),
                    float17(fit.theta_hat),
                    csv_float(Some(fit.loglik)),
                    csv_float(Some(fit.residuals.0)),
                    csv_float(Some(fit.residuals.1)),
                    fit.k,
                    fit.n,
                    float17(excess.threshold()),
                    fit.converged,
                    csv_float(e.stderr_gamma),
                    csv_float(e.stderr_sigma),
                    csv_float(e.ci_gamma.map(|c| c.0)),
                    csv_float(e.ci_gamma.map(|c| c.1)),
                    csv_float(e.ci_sigma.map(|c| c.0)),
                    csv_float(e.ci_sigma.map(|c| c.1)),
                ));
            }
            Entry::Failed(est, message) => {
                out.push_str(&format!(
                    "{},,,,,,,{},{},{},,,,,,,,{}\n",
                    est.name(),
                    excess.k(),
                    excess.n(),
                    float17(excess.threshold()),
                    csv_escape(message),
                ));
            }
        }
    }
    out
}

fn opt_float(x: Option<f64>) -> Json {
    match x {
        Some(v) => Json::float_or_null(v),
        None => Json::Null,
    }
}

fn opt_pair(x: Option<(f64, f64)>) -> Json {
    match x {
        Some(p) => Json::pair(p),
        None => Json::Null,
    }
}

// ---------------------------------------------------------------------------
// asymptotics
// ---------------------------------------------------------------------------

fn law_json(law: &AsymptoticLaw) -> Vec<(&'static str, Json)> {
    vec![
        ("mu", Json::pair((law.mu[0], law.mu[1]))),
        ("lambda_mu", Json::pair((law.bias()[0], law.bias()[1]))),
        (
            "sigma",
            Json::Array(vec![
                Json::pair((law.sigma.var_gamma, law.sigma.cov)),
                Json::pair((law.sigma.cov, law.sigma.var_sigma)),
            ]),
        ),
        ("det_sigma", Json::Float(law.sigma.det())),
    ]
}

fn cmd_asymptotics(gamma0: f64, rho: f64, lambda: f64, format: Format) -> Result<String, CliError> {
    let spec = SecondOrderSpec::new(gamma0, rho, lambda).map_err(usage)?;
    let law = asymptotic_law(&spec).map_err(usage)?;
    Ok(match format {
        Format::Json => {
            let mut fields = vec![
                ("command", Json::Str("asymptotics".into())),
                ("gamma0", Json::Float(gamma0)),
                ("rho", Json::Float(rho)),
                ("lambda", Json::Float(lambda)),
            ];
            fields.extend(law_json(&law));
            Json::Object(fields).render()
        }
        Format::Csv => {
            let b = law.bias();
            format!(
                "gamma0,rho,lambda,mu_gamma,mu_sigma,lambda_mu_gamma,lambda_mu_sigma,\
                 sigma_gamma_gamma,sigma_gamma_sigma,sigma_sigma_sigma,det_sigma\n\
                 {},{},{},{},{},{},{},{},{},{},{}\n",
                float17(gamma0),
                float17(rho),
                float17(lambda),
                float17(law.mu[0]),
                float17(law.mu[1]),
                float17(b[0]),
                float17(b[1]),
                float17(law.sigma.var_gamma),
                float17(law.sigma.cov),
                float17(law.sigma.var_sigma),
                float17(law.sigma.det()),
            )
        }
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    gamma0: f64,
    rho: Option<f64>,
    c: f64,
    n: usize,
    k: Option<usize>,
    lambda: Option<f64>,
    reps: usize,
    estimator: EstimatorArg,
    seed: u64,
    format: Format,
) -> Result<String, CliError> {
    if c != 0.0 && rho.is_none() {
        return Err(CliError::usage("--rho is required when --c is nonzero"));
    }
    let model = SecondOrderModel::second_order(gamma0, rho.unwrap_or(0.0), c).map_err(usage)?;
    let k = match (k, lambda) {
        (Some(k), None) => KChoice::Fixed(k),
        (None, Some(lambda)) => KChoice::Fixed(k_schedule(&model, n, lambda).map_err(usage)?),
        (Some(_), Some(_)) => {
            return Err(CliError::usage("pass exactly one of --k and --lambda, not both"))
        }
        (None, None) => return Err(CliError::usage("pass one of --k and --lambda")),
    };
    let cfg = MonteCarloConfig {
        model,
        n,
        k,
        replications: reps,
        estimators: estimator.kinds(),
        seed,
    };
    let report = run_monte_carlo(&cfg).map_err(usage)?;
    Ok(match format {
        Format::Json => simulate_json(&report),
        Format::Csv => simulate_csv(&report),
    })
}

fn simulate_json(report: &MonteCarloReport) -> String {
    let estimators = report
        .estimators
        .iter()
        .map(|s| {
            Json::Object(vec![
                ("estimator", Json::Str(s.estimator.name().into())),
                ("used", Json::Int(s.used as u64)),
                ("failures", Json::Int(s.failures as u64)),
                ("mean", Json::pair((s.mean[0], s.mean[1]))),
                (
                    "covariance",
                    Json::Array(vec![
                        Json::pair((s.var_gamma, s.cov)),
                        Json::pair((s.cov, s.var_sigma)),
                    ]),
                ),
                ("z_scores", Json::pair((s.z_scores[0], s.z_scores[1]))),
            ])
        })
        .collect();
    let diffs = report
        .shape_diffs
        .iter()
        .map(|d| {
            Json::Object(vec![
                ("first", Json::Str(d.first.name().into())),
                ("second", Json::Str(d.second.name().into())),
                ("mean_abs_scaled_diff", Json::float_or_null(d.mean_abs)),
                ("used", Json::Int(d.used as u64)),
            ])
        })
        .collect();

    let mut target = vec![("gamma0", Json::Float(report.target.gamma0))];
    target.extend(law_json(&report.target));

    Json::Object(vec![
        ("command", Json::Str("simulate".into())),
        ("gamma0", Json::Float(report.gamma0)),
        ("rho", Json::Float(report.rho)),
        ("c", Json::Float(report.c)),
        ("n", Json::Int(report.n as u64)),
        ("k", Json::Int(report.k as u64)),
        ("replications", Json::Int(report.replications as u64)),
        ("seed", Json::Int(report.seed)),
        ("a_true", Json::Float(report.a_true)),
        ("lambda", Json::Float(report.lambda)),
        ("target", Json::Object(target)),
        ("estimators", Json::Array(estimators)),
        ("shape_diffs", Json::Array(diffs)),
        ("excessive_failures", Json::Bool(report.excessive_failures)),
    ])
    .render()
}

fn simulate_csv(report: &MonteCarloReport) -> String {
    let mut out = String::from(
        "estimator,used,failures,mean_gamma,mean_sigma,var_gamma,cov,var_sigma,z_gamma,z_sigma,\
         target_mean_gamma,target_mean_sigma,target_var_gamma,target_cov,target_var_sigma\n",
    );
    let bias = report.target.bias();
    for s in &report.estimators {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.estimator.name(),
            s.used,
            s.failures,
            csv_float(Some(s.mean[0])),
            csv_float(Some(s.mean[1])),
            csv_float(Some(s.var_gamma)),
            csv_float(Some(s.cov)),
            csv_float(Some(s.var_sigma)),
            csv_float(Some(s.z_scores[0])),
            csv_float(Some(s.z_scores[1])),
            float17(bias[0]),
            float17(bias[1]),
            float17(report.target.sigma.var_gamma),
            float17(report.target.sigma.cov),
            float17(report.target.sigma.var_sigma),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn cmd_sweep(
    input: &Path,
    k_min: usize,
    k_max: usize,
    k_step: usize,
    estimator: EstimatorArg,
    level: f64,
) -> Result<String, CliError> {
    let kind = match estimator {
        EstimatorArg::All => {
            return Err(CliError::usage("sweep takes a single estimator, not 'all'"))
        }
        other => other.kinds()[0],
    };
    if !(0.0..1.0).contains(&level) {
        return Err(CliError::usage(format!("--level must be in [0, 1), got {level}")));
    }
    let sample = read_numbers(input)?;
    let n = sample.len();
    if !(2 <= k_min && k_min < k_max && k_max < n) {
        return Err(CliError::usage(format!(
            "sweep requires 2 <= k_min < k_max < n, got k_min={k_min}, k_max={k_max}, n={n}"
        )));
    }
    if k_step == 0 {
        return Err(CliError::usage("--k-step must be >= 1"));
    }

    let mut out = String::from("k,gamma_hat,sigma_hat,stderr_gamma,residual_max,error\n");
    let mut k = k_min;
    while k <= k_max {
        match extract_excesses(&sample, k)
            .and_then(|excess| fit_one(kind, &sample, &excess))
        {
            Ok(fit) => {
                let stderr_gamma = if fit.gamma_hat > -0.5 {
                    Some((1.0 + fit.gamma_hat) / (fit.k as f64).sqrt())
                } else {
                    None
                };
                let residual_max = fit.residuals.0.abs().max(fit.residuals.1.abs());
                out.push_str(&format!(
                    "{k},{},{},{},{},\n",
                    float17(fit.gamma_hat),
                    float17(fit.sigma_hat),
                    csv_float(stderr_gamma),
                    csv_float(Some(residual_max)),
                ));
            }
            Err(e) => {
                out.push_str(&format!("{k},,,,,{}\n", csv_escape(&e.to_string())));
            }
        }
        k += k_step;
    }
    Ok(out)
}
