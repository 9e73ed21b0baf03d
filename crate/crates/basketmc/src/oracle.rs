//! Closed-form law of the k-th ordered default time in the permanent-shock
//! model (d = 0) with independent names.
//!
//! Under that model the inter-default gaps are independent exponentials:
//! the k-th gap has rate `a * beta_{k-1}` with `beta_j = (n-j)(1+jc)`, so
//! `tau^k` is hypoexponential. With distinct rates the density has the
//! partial-fraction form `sum_j alpha_{k,j} a e^{-beta_j a t}`; when rates
//! collide (e.g. c = 1/(n-1)) or the coefficients blow up, evaluation falls
//! back to a uniformised phase-type convolution, which is unconditionally
//! stable (all terms nonnegative).
//!
//! This oracle validates the Monte Carlo engine for the product copula; it
//! is never a pricing route for other copulas.

use crate::contagion::{Decay, IntensityParams};
use crate::error::Error;
use crate::Result;

/// Relative gap below which two exit rates are treated as equal.
const RATE_COLLISION_TOL: f64 = 1e-9;
/// Partial-fraction coefficients above this magnitude lose too many digits
/// to cancellation; the stable path takes over.
const COEFF_CONDITION_CAP: f64 = 1e8;

/// `beta_j = (n - j)(1 + j c)`, the exit-rate multiplier while j names are
/// already in default.
pub fn beta(j: usize, n: usize, c: f64) -> Result<f64> {
    if j >= n {
        return Err(Error::invalid(
            "oracle.j",
            format!("index {j} out of range for n = {n}"),
        ));
    }
    let jf = j as f64;
    Ok((n as f64 - jf) * (1.0 + jf * c))
}

fn check_model(k: usize, n: usize, p: &IntensityParams) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(
            "oracle.k",
            format!("order {k} out of range for n = {n}"),
        ));
    }
    if p.decay != Decay::Zero {
        return Err(Error::UnsupportedModel(format!(
            "analytic order-statistic law requires d = 0 (got d = {})",
            p.decay.value()
        )));
    }
    Ok(())
}

/// Exit rates `a * beta_0 .. a * beta_{k-1}` of the first k inter-default
/// gaps.
fn gap_rates(k: usize, n: usize, p: &IntensityParams) -> Result<Vec<f64>> {
    check_model(k, n, p)?;
    (0..k).map(|j| Ok(p.a * beta(j, n, p.c)?)).collect()
}

/// Hypoexponential density in explicit exponential-mixture form,
/// `f(t) = sum_j coeffs[j] e^{-rates[j] t}`. Only representable when the
/// rates are distinct and the partial fractions are well conditioned.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoexpDensity {
    rates: Vec<f64>,
    coeffs: Vec<f64>,
}

impl HypoexpDensity {
    /// Law of the k-th ordered default time out of n names.
    pub fn for_order_statistic(k: usize, n: usize, p: &IntensityParams) -> Result<Self> {
        let rates = gap_rates(k, n, p)?;
        match partial_fraction_coeffs(&rates) {
            Some(coeffs) => Ok(Self { rates, coeffs }),
            None => Err(Error::UnsupportedModel(
                "coinciding or ill-conditioned rates: no stable partial-fraction form".into(),
            )),
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        // The alternating coefficients cancel to zero at t = 0 for k >= 2;
        // clamp the roundoff residue of that cancellation.
        self.rates
            .iter()
            .zip(&self.coeffs)
            .map(|(&r, &c)| c * (-r * t).exp())
            .sum::<f64>()
            .max(0.0)
    }

    /// Term-by-term integral of the density, clamped to [0, 1].
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let p: f64 = self
            .rates
            .iter()
            .zip(&self.coeffs)
            .map(|(&r, &c)| c / r * (-(-r * t).exp_m1()))
            .sum();
        p.clamp(0.0, 1.0)
    }
}

/// `alpha_j * a` for the mixture form, via the standard partial-fraction
/// residues `prod_{m != j} rate_m / (rate_m - rate_j)` scaled by `rate_j`.
/// Returns None when rates collide or coefficients exceed the condition cap.
fn partial_fraction_coeffs(rates: &[f64]) -> Option<Vec<f64>> {
    for (i, &ri) in rates.iter().enumerate() {
        for &rj in &rates[i + 1..] {
            if (ri - rj).abs() < RATE_COLLISION_TOL * ri.max(rj) {
                return None;
            }
        }
    }
    let mut coeffs = Vec::with_capacity(rates.len());
    for (j, &rj) in rates.iter().enumerate() {
        let mut prod = rj;
        for (m, &rm) in rates.iter().enumerate() {
            if m != j {
                prod *= rm / (rm - rj);
            }
        }
        coeffs.push(prod);
    }
    if coeffs.iter().any(|c| c.abs() > COEFF_CONDITION_CAP) {
        return None;
    }
    Some(coeffs)
}

/// Density of the k-th ordered default time at `t`.
pub fn density_tau_k(k: usize, t: f64, n: usize, p: &IntensityParams) -> Result<f64> {
    let rates = gap_rates(k, n, p)?;
    if t < 0.0 {
        return Ok(0.0);
    }
    match partial_fraction_coeffs(&rates) {
        Some(coeffs) => Ok(rates
            .iter()
            .zip(&coeffs)
            .map(|(&r, &c)| c * (-r * t).exp())
            .sum::<f64>()
            .max(0.0)),
        None => Ok(phase_type_point(&rates, t).0),
    }
}

/// `P(tau^k <= t)`.
pub fn cdf_tau_k(k: usize, t: f64, n: usize, p: &IntensityParams) -> Result<f64> {
    let rates = gap_rates(k, n, p)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    match partial_fraction_coeffs(&rates) {
        Some(coeffs) => {
            let p: f64 = rates
                .iter()
                .zip(&coeffs)
                .map(|(&r, &c)| c / r * (-(-r * t).exp_m1()))
                .sum();
            Ok(p.clamp(0.0, 1.0))
        }
        None => Ok(phase_type_point(&rates, t).1),
    }
}

/// Density and CDF of the hypoexponential via uniformisation of its
/// phase-type chain. All intermediate quantities are nonnegative, so the
/// evaluation is stable for coinciding rates; Poisson weights are carried
/// in log space to survive large `max_rate * t`.
fn phase_type_point(rates: &[f64], t: f64) -> (f64, f64) {
    let k = rates.len();
    debug_assert!(k > 0);
    let lam = rates.iter().fold(0.0_f64, |m, &r| m.max(r));
    let q = lam * t;

    let mut v = vec![0.0; k];
    v[0] = 1.0;
    let mut in_last = 0.0;
    let mut in_transient = 0.0;
    let mut logw = -q;
    let lnq = q.ln();
    let cap = (q + 80.0 * (q + 1.0).sqrt() + 200.0) as usize;

    let mut m = 0usize;
    loop {
        if logw > -745.0 {
            let w = logw.exp();
            in_last += w * v[k - 1];
            in_transient += w * v.iter().sum::<f64>();
        }
        if m >= cap || (m as f64 > q && logw < -45.0) {
            break;
        }
        for j in (0..k).rev() {
            let stay = v[j] * (1.0 - rates[j] / lam);
            let arrive = if j > 0 {
                v[j - 1] * rates[j - 1] / lam
            } else {
                0.0
            };
            v[j] = stay + arrive;
        }
        m += 1;
        logw += lnq - (m as f64).ln();
    }

    (rates[k - 1] * in_last, (1.0 - in_transient).clamp(0.0, 1.0))
}
