//! Exponential-stability certificate for the event-triggered closed loop.
//!
//! Given gains `K1, K2`, a multiplier weight `α ∈ (1/2, 1)`, the perturbation
//! weight `λ` and the triggering design `(β, β0, θ)`, the closed loop obeys
//! `E(t) ≤ 𝒢 e^{−δt} E(0)` provided:
//!
//! * `0 < λ < λ* = min{2K2/(2ε+1), K1/√(2K1²+ε), 1/3}`,
//! * `μ > μ_min` and both 2×2 matrices `D1`, `D2` are negative definite,
//! * `0 ≤ β < λC/(2μ)` and `θ > δ/2`,
//!
//! where `C = min{2α−1, (3−2α)/4}`, `δ = (λC−2μβ)/(1−3λ)`,
//! `δ̂ = 2μβ0/(1−3λ)` and `𝒢 = (1+3λ)/(1−3λ)·(1 + δ̂/(2θ−δ))`.
//!
//! Strict inequalities are tested with the slack [`Real::strict_tol`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Which Young's-inequality weight `ε` to use.
///
/// The stated design formula and the weight that makes the interior
/// estimate close with constant `(3−2α)/4` differ; both are available.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonVariant {
    /// `ε = (2K2(1+α) + 2K1(1−α)) / (3−2α)`.
    #[default]
    TheoremStatement,
    /// `ε = (2K2²(1+α²) + 2K1²(1−α)²) / (3−2α)`.
    ProofFormula,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateInputs<T> {
    #[serde(rename = "K1")]
    pub k1: T,
    #[serde(rename = "K2")]
    pub k2: T,
    pub alpha: T,
    pub lambda: T,
    pub mu: T,
    pub beta: T,
    pub beta0: T,
    pub theta: T,
    #[serde(default)]
    pub epsilon_variant: EpsilonVariant,
}

impl<T: Real> CertificateInputs<T> {
    pub fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        let positive = [
            ("K1", self.k1),
            ("K2", self.k2),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("beta0", self.beta0),
            ("theta", self.theta),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.beta >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.alpha > half && self.alpha < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (1/2, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sym2<T> {
    pub a11: T,
    pub a12: T,
    pub a22: T,
}

impl<T: Real> Sym2<T> {
    pub fn trace(&self) -> T {
        self.a11 + self.a22
    }

    pub fn det(&self) -> T {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    /// Trace/determinant test.
    pub fn is_negative_definite(&self) -> bool {
        self.trace() < T::zero() && self.det() > T::zero()
    }

    /// Same test where values within `tol` of the boundary count as failing.
    pub fn is_negative_definite_tol(&self, tol: T) -> bool {
        self.trace() < -tol && self.det() > tol
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (T, T) {
        let two = T::lit(2.0);
        let mean = self.trace() / two;
        let r = ((self.a11 - self.a22) / two).hypot(self.a12);
        (mean - r, mean + r)
    }
}

/// A failed condition of the certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    LambdaNotBelowLambdaStar { lambda: f64, lambda_star: f64 },
    MuDenominatorNonPositive { branch: usize, denominator: f64 },
    MuNotAboveMin { mu: f64, mu_min: f64 },
    D1NotNegativeDefinite { trace: f64, det: f64 },
    D2NotNegativeDefinite { trace: f64, det: f64 },
    BetaTooLarge { beta: f64, bound: f64 },
    DeltaNotPositive { delta: f64 },
    ThetaNotAboveHalfDelta { theta: f64, half_delta: f64 },
    GrowthNotAboveOne { g: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LambdaNotBelowLambdaStar { lambda, lambda_star } => {
                write!(f, "lambda = {lambda} is not below lambda* = {lambda_star}")
            }
            Violation::MuDenominatorNonPositive {
                branch,
                denominator,
            } => write!(
                f,
                "mu lower bound branch {branch} has nonpositive denominator {denominator}"
            ),
            Violation::MuNotAboveMin { mu, mu_min } => {
                write!(f, "mu = {mu} is not above mu_min = {mu_min}")
            }
            Violation::D1NotNegativeDefinite { trace, det } => {
                write!(f, "D1 not negative definite (trace {trace}, det {det})")
            }
            Violation::D2NotNegativeDefinite { trace, det } => {
                write!(f, "D2 not negative definite (trace {trace}, det {det})")
            }
            Violation::BetaTooLarge { beta, bound } => {
                write!(f, "beta = {beta} is not below lambda*C/(2mu) = {bound}")
            }
            Violation::DeltaNotPositive { delta } => write!(f, "delta = {delta} is not positive"),
            Violation::ThetaNotAboveHalfDelta { theta, half_delta } => {
                write!(f, "theta = {theta} is not above delta/2 = {half_delta}")
            }
            Violation::GrowthNotAboveOne { g } => write!(f, "G = {g} is not above 1"),
        }
    }
}

fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Result of [`certify`]. Derived constants are reported even when invalid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate<T> {
    pub inputs: CertificateInputs<T>,
    pub epsilon: T,
    pub lambda_star: T,
    #[serde(rename = "C")]
    pub c: T,
    /// `None` when a branch denominator is nonpositive.
    pub mu_min: Option<T>,
    pub delta: T,
    pub delta_hat: T,
    #[serde(rename = "G")]
    pub g: T,
    #[serde(rename = "D1")]
    pub d1: Sym2<T>,
    #[serde(rename = "D2")]
    pub d2: Sym2<T>,
    pub d1_negative_definite: bool,
    pub d2_negative_definite: bool,
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl<T: Real> Certificate<T> {
    /// `𝒢 e^{−δt} E(0)`.
    pub fn envelope(&self, t: T, e0: T) -> T {
        self.g * (-self.delta * t).exp() * e0
    }
}

pub fn derive_epsilon<T: Real>(k1: T, k2: T, alpha: T, variant: EpsilonVariant) -> Result<T> {
    if !(k1 > T::zero() && k2 > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "gains must be positive, got K1={k1}, K2={k2}"
        )));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let denom = T::lit(3.0) - two * alpha;
    Ok(match variant {
        EpsilonVariant::TheoremStatement => {
            (two * k2 * (one + alpha) + two * k1 * (one - alpha)) / denom
        }
        EpsilonVariant::ProofFormula => {
            let oma = one - alpha;
            (two * k2 * k2 * (one + alpha * alpha) + two * k1 * k1 * oma * oma) / denom
        }
    })
}

/// `min{2K2/(2ε+1), K1/√(2K1²+ε), 1/3}`.
pub fn derive_lambda_star<T: Real>(k1: T, k2: T, epsilon: T) -> T {
    let two = T::lit(2.0);
    let b1 = two * k2 / (two * epsilon + T::one());
    let b2 = k1 / (two * k1 * k1 + epsilon).sqrt();
    b1.min(b2).min(T::one() / T::lit(3.0))
}

/// `C = min{2α − 1, (3 − 2α)/4}`.
pub fn derive_c<T: Real>(alpha: T) -> T {
    let two = T::lit(2.0);
    (two * alpha - T::one()).min((T::lit(3.0) - two * alpha) / T::lit(4.0))
}

/// The three lower-bound branches for `μ`, as `(numerator, denominator)` pairs.
fn mu_branches<T: Real>(k1: T, k2: T, epsilon: T, lambda: T) -> [(T, T); 2] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let l2 = lambda * lambda;
    [
        (
            k2 * k2 - two * epsilon * l2,
            four * k2 - two * lambda - four * lambda * epsilon,
        ),
        (
            k1 * k1 - l2 * epsilon - two * l2 * k1 * k1,
            four * k1 - two * lambda - two * lambda * epsilon - four * lambda * k1 * k1,
        ),
    ]
}

/// `max{(K2²−2ελ²)/(4K2−2λ−4λε), (K1²−λ²ε−2λ²K1²)/(4K1−2λ−2λε−4λK1²), λ/2}`.
///
/// Requires `0 < λ < λ*`; a nonpositive denominator is reported by branch.
pub fn derive_mu_min<T: Real>(k1: T, k2: T, epsilon: T, lambda: T) -> Result<T> {
    let lambda_star = derive_lambda_star(k1, k2, epsilon);
    if !(lambda > T::zero()) || !(lambda < lambda_star - T::strict_tol()) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} must lie in (0, lambda* = {lambda_star})"
        )));
    }
    let mut out = lambda / T::lit(2.0);
    for (i, (num, den)) in mu_branches(k1, k2, epsilon, lambda).into_iter().enumerate() {
        if !(den > T::strict_tol()) {
            return Err(Error::InvalidParameter(format!(
                "mu lower bound branch {} has nonpositive denominator {den}",
                i + 1
            )));
        }
        out = out.max(num / den);
    }
    Ok(out)
}

/// Builds `D1`, `D2` and reports whether both are negative definite.
pub fn check_d_matrices<T: Real>(k1: T, k2: T, epsilon: T, lambda: T, mu: T) -> (Sym2<T>, Sym2<T>, bool) {
    let half = T::lit(0.5);
    let d1 = Sym2 {
        a11: half * lambda - mu,
        a12: mu - half * k2,
        a22: lambda * epsilon - mu,
    };
    let d2 = Sym2 {
        a11: half * lambda - mu,
        a12: mu - half * k1,
        a22: half * lambda * epsilon + lambda * k1 * k1 - mu,
    };
    let tol = T::strict_tol();
    let ok = d1.is_negative_definite_tol(tol) && d2.is_negative_definite_tol(tol);
    (d1, d2, ok)
}

/// Decay constants of the certified envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope<T> {
    pub delta: T,
    pub delta_hat: T,
    pub g: T,
}

fn envelope_raw<T: Real>(c: T, lambda: T, mu: T, beta: T, beta0: T, theta: T) -> Envelope<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let denom = one - three * lambda;
    let delta = (lambda * c - two * mu * beta) / denom;
    let delta_hat = two * mu * beta0 / denom;
    let g = (one + three * lambda) / denom * (one + delta_hat / (two * theta - delta));
    Envelope {
        delta,
        delta_hat,
        g,
    }
}

/// `δ`, `δ̂` and `𝒢`; rejects `λ ≥ 1/3`, `β ≥ λC/(2μ)` and `θ ≤ δ/2`.
pub fn derive_envelope<T: Real>(c: T, lambda: T, mu: T, beta: T, beta0: T, theta: T) -> Result<Envelope<T>> {
    let tol = T::strict_tol();
    let two = T::lit(2.0);
    if !(lambda < T::one() / T::lit(3.0) - tol) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be below 1/3")));
    }
    let beta_bound = lambda * c / (two * mu);
    if !(beta >= T::zero() && beta < beta_bound - tol) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} must lie in [0, {beta_bound})"
        )));
    }
    let env = envelope_raw(c, lambda, mu, beta, beta0, theta);
    if !(theta > env.delta / two + tol) {
        return Err(Error::InvalidParameter(format!(
            "theta = {theta} must exceed delta/2 = {}",
            env.delta / two
        )));
    }
    Ok(env)
}

/// Evaluates every condition and derived constant for `inputs`.
pub fn certify<T: Real>(inputs: &CertificateInputs<T>) -> Result<Certificate<T>> {
    inputs.validate()?;
    let CertificateInputs {
        k1,
        k2,
        alpha,
        lambda,
        mu,
        beta,
        beta0,
        theta,
        epsilon_variant,
    } = *inputs;
    let tol = T::strict_tol();
    let two = T::lit(2.0);
    let mut violations = Vec::new();

    let epsilon = derive_epsilon(k1, k2, alpha, epsilon_variant)?;
    let lambda_star = derive_lambda_star(k1, k2, epsilon);
    let c = derive_c(alpha);

    if !(lambda < lambda_star - tol) {
        violations.push(Violation::LambdaNotBelowLambdaStar {
            lambda: f64_of(lambda),
            lambda_star: f64_of(lambda_star),
        });
    }

    let mut mu_min = Some(lambda / two);
    for (i, (num, den)) in mu_branches(k1, k2, epsilon, lambda).into_iter().enumerate() {
        if den > tol {
            mu_min = mu_min.map(|m| m.max(num / den));
        } else {
            violations.push(Violation::MuDenominatorNonPositive {
                branch: i + 1,
                denominator: f64_of(den),
            });
            mu_min = None;
        }
    }
    if let Some(m) = mu_min {
        if !(mu > m + tol) {
            violations.push(Violation::MuNotAboveMin {
                mu: f64_of(mu),
                mu_min: f64_of(m),
            });
        }
    }

    let (d1, d2, _) = check_d_matrices(k1, k2, epsilon, lambda, mu);
    let d1_negative_definite = d1.is_negative_definite_tol(tol);
    let d2_negative_definite = d2.is_negative_definite_tol(tol);
    if !d1_negative_definite {
        violations.push(Violation::D1NotNegativeDefinite {
            trace: f64_of(d1.trace()),
            det: f64_of(d1.det()),
        });
    }
    if !d2_negative_definite {
        violations.push(Violation::D2NotNegativeDefinite {
            trace: f64_of(d2.trace()),
            det: f64_of(d2.det()),
        });
    }

    let beta_bound = lambda * c / (two * mu);
    if !(beta < beta_bound - tol) {
        violations.push(Violation::BetaTooLarge {
            beta: f64_of(beta),
            bound: f64_of(beta_bound),
        });
    }

    let env = envelope_raw(c, lambda, mu, beta, beta0, theta);
    if !(env.delta > tol) {
        violations.push(Violation::DeltaNotPositive {
            delta: f64_of(env.delta),
        });
    }
    if !(theta > env.delta / two + tol) {
        violations.push(Violation::ThetaNotAboveHalfDelta {
            theta: f64_of(theta),
            half_delta: f64_of(env.delta / two),
        });
    }
    if !(env.g > T::one() + tol) {
        violations.push(Violation::GrowthNotAboveOne { g: f64_of(env.g) });
    }

    Ok(Certificate {
        inputs: *inputs,
        epsilon,
        lambda_star,
        c,
        mu_min,
        delta: env.delta,
        delta_hat: env.delta_hat,
        g: env.g,
        d1,
        d2,
        d1_negative_definite,
        d2_negative_definite,
        valid: violations.is_empty(),
        violations,
    })
}

/// Grid used by [`search_for_rate_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchGrid {
    /// Values of `α`, all inside `(1/2, 1)`.
    pub alphas: Vec<f64>,
    /// Fractions of `λ*` tried for `λ`, all inside `(0, 1)`.
    pub lambda_fractions: Vec<f64>,
    /// Number of `μ` values, spread over `(μ_min, 10 μ_min]`.
    pub mu_steps: usize,
    /// Fractions of `λC/(2μ)` tried for `β`, all inside `[0, 1)`.
    pub beta_fractions: Vec<f64>,
    pub epsilon_variant: EpsilonVariant,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            alphas: (1..20).map(|i| 0.5 + 0.025 * i as f64).collect(),
            lambda_fractions: (1..20).map(|i| 0.05 * i as f64).collect(),
            mu_steps: 20,
            beta_fractions: (0..10).map(|i| 0.1 * i as f64).collect(),
            epsilon_variant: EpsilonVariant::TheoremStatement,
        }
    }
}

/// Best outcome found at one `(α, λ)` grid point of an infeasible search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPointDiagnosis<T> {
    pub alpha: T,
    pub lambda: T,
    /// Largest certified `δ` at this point, if any candidate was valid.
    pub best_delta: Option<T>,
    /// What stopped this point: a certificate violation or `target_delta`.
    pub binding: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Infeasibility<T> {
    pub target_delta: T,
    /// Largest `δ` over all valid grid candidates.
    pub best_delta: Option<T>,
    pub best: Option<Certificate<T>>,
    pub points: Vec<GridPointDiagnosis<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome<T> {
    Feasible { certificate: Certificate<T> },
    Infeasible { report: Infeasibility<T> },
}

/// Grid search for a certificate with `δ ≥ target_delta`, default grid.
pub fn search_for_rate<T: Real>(k1: T, k2: T, target_delta: T, beta0: T, theta: T) -> Result<SearchOutcome<T>> {
    search_for_rate_with(k1, k2, target_delta, beta0, theta, &SearchGrid::default())
}

/// Walks `α → λ → μ → β` in design order. Among valid candidates reaching the
/// target, returns the one with smallest `(𝒢, λ, μ)` lexicographically.
pub fn search_for_rate_with<T: Real>(
    k1: T,
    k2: T,
    target_delta: T,
    beta0: T,
    theta: T,
    grid: &SearchGrid,
) -> Result<SearchOutcome<T>> {
    if !(target_delta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "target decay rate must be > 0, got {target_delta}"
        )));
    }
    let mut best_feasible: Option<Certificate<T>> = None;
    let mut best_any: Option<Certificate<T>> = None;
    let mut points = Vec::new();

    for &alpha_f in &grid.alphas {
        let alpha = T::lit(alpha_f);
        let epsilon = derive_epsilon(k1, k2, alpha, grid.epsilon_variant)?;
        let lambda_star = derive_lambda_star(k1, k2, epsilon);
        let c = derive_c(alpha);
        for &lf in &grid.lambda_fractions {
            let lambda = T::lit(lf) * lambda_star;
            let mut point_best: Option<T> = None;
            let mut binding = String::from("target_delta");
            let mu_min = match derive_mu_min(k1, k2, epsilon, lambda) {
                Ok(m) => m,
                Err(e) => {
                    points.push(GridPointDiagnosis {
                        alpha,
                        lambda,
                        best_delta: None,
                        binding: e.to_string(),
                    });
                    continue;
                }
            };
            for j in 1..=grid.mu_steps {
                let mu = mu_min
                    * (T::one()
                        + T::lit(9.0) * T::lit(j as f64) / T::lit(grid.mu_steps as f64));
                let beta_bound = lambda * c / (T::lit(2.0) * mu);
                for &bf in &grid.beta_fractions {
                    let inputs = CertificateInputs {
                        k1,
                        k2,
                        alpha,
                        lambda,
                        mu,
                        beta: T::lit(bf) * beta_bound,
                        beta0,
                        theta,
                        epsilon_variant: grid.epsilon_variant,
                    };
                    let cert = certify(&inputs)?;
                    if !cert.valid {
                        if point_best.is_none() {
                            binding = cert.violations[0].to_string();
                        }
                        continue;
                    }
                    point_best = Some(point_best.map_or(cert.delta, |d: T| d.max(cert.delta)));
                    if best_any.as_ref().is_none_or(|b| cert.delta > b.delta) {
                        best_any = Some(cert.clone());
                    }
                    if cert.delta >= target_delta
                        && best_feasible.as_ref().is_none_or(|b| better(&cert, b))
                    {
                        best_feasible = Some(cert);
                    }
                }
            }
            points.push(GridPointDiagnosis {
                alpha,
                lambda,
                best_delta: point_best,
                binding,
            });
        }
    }

    Ok(match best_feasible {
        Some(certificate) => SearchOutcome::Feasible { certificate },
        None => SearchOutcome::Infeasible {
            report: Infeasibility {
                target_delta,
                best_delta: best_any.as_ref().map(|c| c.delta),
                best: best_any,
                points,
            },
        },
    })
}

fn better<T: Real>(a: &Certificate<T>, b: &Certificate<T>) -> bool {
    let ka = (a.g, a.inputs.lambda, a.inputs.mu);
    let kb = (b.g, b.inputs.lambda, b.inputs.mu);
    ka.partial_cmp(&kb) == Some(std::cmp::Ordering::Less)
}
