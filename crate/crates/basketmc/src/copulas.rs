//! Correlated uniform variates and their sorted exponential thresholds.
//!
//! Three dependence structures are supported: the product copula
//! (independent names), a Marshall-Olkin exponential copula whose common
//! shock produces exactly tied coordinates (simultaneous defaults), and the
//! one-factor Gaussian copula. Every sampler emits uniforms clamped to
//! `[CLAMP, 1 - CLAMP]` so the threshold transform `-ln(1-u)` stays finite.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::math::normal_cdf;
use crate::Result;

/// Uniforms are clamped this far away from 0 and 1. Exact endpoints are
/// measure-zero events but reachable in floating point.
pub const CLAMP: f64 = 1e-15;

/// Dependence structure for the names' default-time quantiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CopulaSpec {
    /// Independent names.
    Product,
    /// Marshall-Olkin exponential copula: a common shock with rate `c0`
    /// competes with idiosyncratic shocks of rate `c1`.
    Exponential { c0: f64, c1: f64 },
    /// One-factor Gaussian copula with loading `rho` on the systematic
    /// factor.
    GaussianOneFactor { rho: f64 },
}

impl CopulaSpec {
    /// Check the parameter invariants, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        match *self {
            CopulaSpec::Product => Ok(()),
            CopulaSpec::Exponential { c0, c1 } => {
                if !(c0 > 0.0 && c0.is_finite()) {
                    return Err(Error::invalid("copula.c0", "must be a positive rate"));
                }
                if !(c1 > 0.0 && c1.is_finite()) {
                    return Err(Error::invalid("copula.c1", "must be a positive rate"));
                }
                Ok(())
            }
            CopulaSpec::GaussianOneFactor { rho } => {
                if rho.is_nan() || rho.abs() > 1.0 {
                    return Err(Error::invalid("copula.rho", "|rho| must be <= 1"));
                }
                Ok(())
            }
        }
    }
}

/// Per-path uniforms, every component strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct UniformVector {
    values: Vec<f64>,
}

impl UniformVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &u) in values.iter().enumerate() {
            if !(u > 0.0 && u < 1.0) {
                return Err(Error::invalid(
                    "uniforms",
                    format!("component {i} = {u} is not strictly inside (0, 1)"),
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ascending standard-exponential thresholds `E*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedThresholds {
    values: Vec<f64>,
}

impl SortedThresholds {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &e) in values.iter().enumerate() {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::invalid(
                    "thresholds",
                    format!("component {i} = {e} is not finite and nonnegative"),
                ));
            }
            if i > 0 && values[i - 1] > e {
                return Err(Error::invalid("thresholds", "not ascending"));
            }
        }
        Ok(Self { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// State shared between a path's portfolio draw and its counterparty
/// coordinate, so the counterparty can be coupled into the same copula
/// without touching the portfolio stream.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SharedFactor {
    None,
    /// Systematic normal factor of the Gaussian copula.
    Systemic(f64),
    /// Common-shock arrival of the exponential copula.
    CommonShock(f64),
}

fn clamp_unit(u: f64) -> f64 {
    u.clamp(CLAMP, 1.0 - CLAMP)
}

/// Standard exponential variate with the given rate.
fn exp_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p() / rate
}

/// Draw `n` correlated uniforms under `spec`. Marginals are uniform on
/// (0, 1) for every copula.
pub fn sample_uniforms<R: Rng + ?Sized>(
    spec: &CopulaSpec,
    n: usize,
    rng: &mut R,
) -> Result<UniformVector> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::invalid("run.n_names", "must be at least 1"));
    }
    let mut values = Vec::with_capacity(n);
    sample_uniforms_into(spec, n, rng, &mut values);
    Ok(UniformVector { values })
}

/// Hot-path sampler writing into a reused buffer. Assumes `spec` validated.
///
/// Draw order is fixed per copula (factor first, then names in index order)
/// so results are reproducible from the stream alone.
pub(crate) fn sample_uniforms_into<R: Rng + ?Sized>(
    spec: &CopulaSpec,
    n: usize,
    rng: &mut R,
    out: &mut Vec<f64>,
) -> SharedFactor {
    out.clear();
    match *spec {
        CopulaSpec::Product => {
            for _ in 0..n {
                out.push(clamp_unit(rng.random()));
            }
            SharedFactor::None
        }
        CopulaSpec::Exponential { c0, c1 } => {
            let t0 = exp_draw(rng, c0);
            let total = c0 + c1;
            for _ in 0..n {
                let ti = exp_draw(rng, c1);
                let s = t0.min(ti);
                // Survival-form uniform: keeps common-shock ties exact and
                // reproduces the simultaneous-jump joint law.
                out.push(clamp_unit((-total * s).exp()));
            }
            SharedFactor::CommonShock(t0)
        }
        CopulaSpec::GaussianOneFactor { rho } => {
            let z: f64 = rng.sample(StandardNormal);
            let idio = (1.0 - rho * rho).sqrt();
            for _ in 0..n {
                let zi: f64 = rng.sample(StandardNormal);
                out.push(clamp_unit(normal_cdf(rho * z + idio * zi)));
            }
            SharedFactor::Systemic(z)
        }
    }
}

/// Counterparty coordinate of the same copula, drawn from a dedicated
/// stream. Shares the systematic factor / common shock with the portfolio.
pub(crate) fn counterparty_uniform<R: Rng + ?Sized>(
    spec: &CopulaSpec,
    factor: SharedFactor,
    rng: &mut R,
) -> f64 {
    match (*spec, factor) {
        (CopulaSpec::Product, _) => clamp_unit(rng.random()),
        (CopulaSpec::Exponential { c0, c1 }, SharedFactor::CommonShock(t0)) => {
            let tb = exp_draw(rng, c1);
            clamp_unit((-(c0 + c1) * t0.min(tb)).exp())
        }
        (CopulaSpec::GaussianOneFactor { rho }, SharedFactor::Systemic(z)) => {
            let zb: f64 = rng.sample(StandardNormal);
            clamp_unit(normal_cdf(rho * z + (1.0 - rho * rho).sqrt() * zb))
        }
        // A factor of the wrong shape means the portfolio draw used a
        // different spec; unreachable through PathSampler.
        _ => unreachable!("copula shared factor does not match the spec"),
    }
}

/// Transform uniforms to thresholds `-ln(1-u)` and sort ascending.
///
/// The sort is stable, so exactly tied uniforms (exponential-copula common
/// shocks) stay adjacent.
pub fn to_sorted_thresholds(u: &UniformVector) -> SortedThresholds {
    let mut values = Vec::with_capacity(u.len());
    thresholds_into(u.as_slice(), &mut values);
    SortedThresholds { values }
}

pub(crate) fn thresholds_into(uniforms: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for &u in uniforms {
        debug_assert!(u > 0.0 && u < 1.0, "uniform {u} escaped clamping");
        out.push(threshold(u));
    }
    out.sort_by(f64::total_cmp);
}

/// Single-coordinate threshold transform.
pub(crate) fn threshold(u: f64) -> f64 {
    -(-u).ln_1p()
}
