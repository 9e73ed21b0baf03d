//! Ordered default times from sorted exponential thresholds under the
//! homogeneous contagion intensity
//!
//! ```text
//! lambda_i(t) = a (1 + sum_{j != i} c e^{-d (t - tau_j)} 1{tau_j <= t})
//! ```
//!
//! With permanent shocks (d = 0) the cumulative hazard is piecewise linear
//! and the ordered times follow a closed-form recursion. With decaying
//! shocks the k-th time solves the strictly increasing, strictly concave
//! equation `F_k(t) = 0`, which Newton from the previous default time hits
//! with monotone quadratic convergence; a bracketed bisection stands behind
//! it. Without contagion (c = 0, or d = infinity) every branch reduces to
//! `tau_k = E*_k / a`, and all three compute it with identical arithmetic so
//! fixed-seed runs agree bit for bit across those parameterisations.

use crate::copulas::SortedThresholds;
use crate::error::Error;
use crate::Result;

/// Decay of a contagion shock. Stored as an explicit variant rather than a
/// bare float so `d = infinity` is a first-class model, not an overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// Permanent shocks (d = 0): closed-form recursion applies.
    Zero,
    /// Exponentially fading shocks with rate d > 0.
    Finite(f64),
    /// Instantly vanishing shocks: no contagion effect on any default time.
    Infinite,
}

impl Decay {
    /// Numeric value, with infinity for the symbolic variant.
    pub fn value(&self) -> f64 {
        match *self {
            Decay::Zero => 0.0,
            Decay::Finite(d) => d,
            Decay::Infinite => f64::INFINITY,
        }
    }
}

/// Homogeneous contagion triple (a, c, d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityParams {
    /// Unconditional default intensity (1/years).
    pub a: f64,
    /// Contagion multiplier per prior default (dimensionless).
    pub c: f64,
    /// Shock decay rate.
    pub decay: Decay,
}

impl IntensityParams {
    /// Build from raw numbers; `d` may be `f64::INFINITY`.
    pub fn new(a: f64, c: f64, d: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(
                "intensity.a",
                "must be a positive finite rate",
            ));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid("intensity.c", "must be finite and >= 0"));
        }
        let decay = if d == 0.0 {
            Decay::Zero
        } else if d == f64::INFINITY {
            Decay::Infinite
        } else if d > 0.0 && d.is_finite() {
            Decay::Finite(d)
        } else {
            return Err(Error::invalid(
                "intensity.d",
                "must be >= 0 (infinity allowed)",
            ));
        };
        Ok(Self { a, c, decay })
    }
}

/// Ordered default times of one simulated path, optionally with the
/// counterparty's default time.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultTimeline {
    /// Nondecreasing default times, `tau[0]` being the first default.
    pub tau: Vec<f64>,
    pub counterparty_tau: Option<f64>,
}

impl DefaultTimeline {
    pub fn n(&self) -> usize {
        self.tau.len()
    }

    /// Number of portfolio defaults at or before `t`.
    pub fn defaults_by(&self, t: f64) -> usize {
        self.tau.partition_point(|&x| x <= t)
    }
}

/// Counterparty hazard parameters: `lambda_B(t) = a_B (1 + c_B N(t))` where
/// `N` counts portfolio defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterpartyParams {
    pub a_b: f64,
    pub c_b: f64,
}

impl CounterpartyParams {
    pub fn new(a_b: f64, c_b: f64) -> Result<Self> {
        if !(a_b > 0.0 && a_b.is_finite()) {
            return Err(Error::invalid(
                "counterparty.a_b",
                "must be a positive finite rate",
            ));
        }
        if !(c_b >= 0.0 && c_b.is_finite()) {
            return Err(Error::invalid(
                "counterparty.c_b",
                "must be finite and >= 0",
            ));
        }
        Ok(Self { a_b, c_b })
    }
}

/// Ordered default times for permanent shocks (d = 0).
///
/// Panics if the parameters carry a nonzero decay; use [`ordered_defaults`]
/// to dispatch on `d`.
pub fn ordered_defaults_no_decay(p: &IntensityParams, e: &SortedThresholds) -> DefaultTimeline {
    assert!(matches!(p.decay, Decay::Zero), "requires d = 0");
    let mut tau = Vec::with_capacity(e.len());
    defaults_zero_into(p.a, p.c, e.as_slice(), &mut tau);
    DefaultTimeline {
        tau,
        counterparty_tau: None,
    }
}

/// Ordered default times for decaying shocks (0 < d < infinity).
pub fn ordered_defaults_with_decay(
    p: &IntensityParams,
    e: &SortedThresholds,
) -> Result<DefaultTimeline> {
    let d = match p.decay {
        Decay::Finite(d) => d,
        _ => panic!("requires 0 < d < infinity"),
    };
    let mut tau = Vec::with_capacity(e.len());
    defaults_finite_into(p.a, p.c, d, e.as_slice(), &mut tau)?;
    Ok(DefaultTimeline {
        tau,
        counterparty_tau: None,
    })
}

/// Dispatch on the decay variant.
pub fn ordered_defaults(p: &IntensityParams, e: &SortedThresholds) -> Result<DefaultTimeline> {
    let mut tau = Vec::with_capacity(e.len());
    ordered_defaults_into(p, e.as_slice(), &mut tau)?;
    Ok(DefaultTimeline {
        tau,
        counterparty_tau: None,
    })
}

/// Hot-path generator writing into a reused buffer.
pub(crate) fn ordered_defaults_into(
    p: &IntensityParams,
    e: &[f64],
    tau: &mut Vec<f64>,
) -> Result<()> {
    match p.decay {
        Decay::Zero => {
            defaults_zero_into(p.a, p.c, e, tau);
            Ok(())
        }
        Decay::Finite(d) => defaults_finite_into(p.a, p.c, d, e, tau),
        Decay::Infinite => {
            defaults_direct_into(p.a, e, tau);
            Ok(())
        }
    }
}

/// `tau_k = e_k / a`: no contagion effect on any default time.
fn defaults_direct_into(a: f64, e: &[f64], tau: &mut Vec<f64>) {
    tau.clear();
    for &ek in e {
        tau.push(ek / a);
    }
}

fn defaults_zero_into(a: f64, c: f64, e: &[f64], tau: &mut Vec<f64>) {
    if c == 0.0 {
        // Identical arithmetic to the d = infinity branch, so fixed-seed
        // estimates agree bit for bit across c = 0 and d = infinity.
        defaults_direct_into(a, e, tau);
        return;
    }
    tau.clear();
    if e.is_empty() {
        return;
    }
    let mut prev = e[0] / a;
    tau.push(prev);
    for (i, pair) in e.windows(2).enumerate() {
        // Solving for default k = i + 2 with i + 1 earlier defaults.
        let denom = a * (1.0 + (i as f64 + 1.0) * c);
        prev += (pair[1] - pair[0]) / denom;
        tau.push(prev);
    }
}

/// Running contagion state at the previous default time `tau_prev`:
/// `w = sum_i e^{-d (tau_prev - tau_i)}` and
/// `v = sum_i (1 - e^{-d (tau_prev - tau_i)})`, over earlier defaults i.
///
/// Both are sums of values in [0, 1], so they stay exact for any d, and the
/// cumulative hazard bracket `v + w (1 - e^{-d (t - tau_prev)})` evaluates
/// without cancellation via `expm1` even as d -> 0.
struct DecayState {
    v: f64,
    w: f64,
    tau_prev: f64,
}

impl DecayState {
    fn advance(&mut self, d: f64, t: f64) {
        let delta = t - self.tau_prev;
        self.v += self.w * (-(-d * delta).exp_m1());
        self.w = self.w * (-d * delta).exp() + 1.0;
        self.tau_prev = t;
    }
}

fn defaults_finite_into(a: f64, c: f64, d: f64, e: &[f64], tau: &mut Vec<f64>) -> Result<()> {
    if c == 0.0 {
        defaults_direct_into(a, e, tau);
        return Ok(());
    }
    tau.clear();
    if e.is_empty() {
        return Ok(());
    }
    let first = e[0] / a;
    tau.push(first);
    let mut state = DecayState {
        v: 0.0,
        w: 1.0,
        tau_prev: first,
    };
    for (i, pair) in e.windows(2).enumerate() {
        let t = solve_next_default(a, c, d, i + 2, &state, pair[0], pair[1])?;
        state.advance(d, t);
        tau.push(t);
    }
    Ok(())
}

/// Total hazard accumulated by the next defaulter at `t >= tau_prev`, minus
/// its threshold: `F(t) = a t + (a c / d) (v + w (1 - e^{-d (t-tau_prev)})) - e_k`.
fn total_hazard_gap(a: f64, c: f64, d: f64, state: &DecayState, e_k: f64, t: f64) -> f64 {
    let em = -(-d * (t - state.tau_prev)).exp_m1();
    a * t + (a * c / d) * (state.v + state.w * em) - e_k
}

fn solve_next_default(
    a: f64,
    c: f64,
    d: f64,
    k: usize,
    state: &DecayState,
    e_prev: f64,
    e_k: f64,
) -> Result<f64> {
    let tau_prev = state.tau_prev;
    let ftol = 1e-12 * e_k.max(1.0);
    let mut t = tau_prev;
    for _ in 0..100 {
        let f = total_hazard_gap(a, c, d, state, e_k, t);
        if f.abs() < ftol {
            return Ok(t);
        }
        let fp = a * (1.0 + c * state.w * (-d * (t - tau_prev)).exp());
        let step = f / fp;
        let next = (t - step).max(tau_prev);
        if step.abs() < 1e-12 * t.abs().max(1.0) {
            return Ok(next);
        }
        t = next;
    }

    // F is increasing and concave, so Newton from tau_prev converges
    // monotonically; reaching the cap means pathological parameters.
    // Fall back to bisection on a guaranteed bracket: F' >= a gives
    // F(tau_prev + (e_k - e_prev)/a + 1) >= F(tau_prev) + (e_k - e_prev) + a > 0
    // up to the previous solve's residual.
    let mut lo = tau_prev;
    let mut hi = tau_prev + (e_k - e_prev) / a + 1.0;
    let mut f_hi = total_hazard_gap(a, c, d, state, e_k, hi);
    let mut widen = 0;
    while f_hi < 0.0 {
        widen += 1;
        if widen > 64 {
            return Err(Error::RootSolve {
                k,
                a,
                c,
                d,
                message: format!("no sign change up to t = {hi}"),
            });
        }
        hi = tau_prev + (hi - tau_prev) * 2.0;
        f_hi = total_hazard_gap(a, c, d, state, e_k, hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid.clamp(lo, hi));
        }
        let f = total_hazard_gap(a, c, d, state, e_k, mid);
        if f.abs() < ftol || hi - lo < 1e-13 * hi.abs().max(1.0) {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Counterparty default time: the unique `t` with
/// `int_0^t a_B (1 + c_B N(s)) ds = e_b`.
///
/// The cumulative hazard is piecewise linear with slope `a_B (1 + c_B j)`
/// between the j-th and (j+1)-th portfolio defaults, so the inversion is
/// exact segment-by-segment arithmetic. The result may exceed any contract
/// maturity; callers truncate.
pub fn counterparty_default_time(
    cp: &CounterpartyParams,
    timeline: &DefaultTimeline,
    e_b: f64,
) -> f64 {
    counterparty_default_time_from_slice(cp, &timeline.tau, e_b)
}

pub(crate) fn counterparty_default_time_from_slice(
    cp: &CounterpartyParams,
    tau: &[f64],
    e_b: f64,
) -> f64 {
    debug_assert!(e_b >= 0.0);
    let mut hazard = 0.0;
    let mut prev = 0.0;
    for (j, &t) in tau.iter().enumerate() {
        let slope = cp.a_b * (1.0 + cp.c_b * j as f64);
        let segment = slope * (t - prev);
        if e_b <= hazard + segment {
            return prev + (e_b - hazard) / slope;
        }
        hazard += segment;
        prev = t;
    }
    let slope = cp.a_b * (1.0 + cp.c_b * tau.len() as f64);
    prev + (e_b - hazard) / slope
}
