//! Per-path contingent and fee leg present values for kth-to-default CDSs
//! and CDO tranches, optional counterparty-survival gating, and the swap
//! rate estimator.
//!
//! A kth-to-default CDS pays (1-R) at the k-th default if it lands before
//! maturity; the fee leg earns on the payment grid and accrues into the
//! default period. CDO tranche losses settle at payment dates only. A
//! default exactly at a payment date belongs to the period ending there:
//! the survival term uses the strict indicator, the accrual term the closed
//! one, so nothing is double counted.

use crate::contagion::DefaultTimeline;
use crate::error::Error;
use crate::math::KahanSum;
use crate::Result;

/// Contract grid and market conventions shared by every product.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractTerms {
    /// Maturity T (years).
    pub maturity: f64,
    /// Payment dates t_1 < ... < t_N = T; t_0 = 0 is implicit.
    pub payment_dates: Vec<f64>,
    /// Recovery rate R in [0, 1].
    pub recovery: f64,
    /// Flat continuously compounded rate r >= 0.
    pub rate: f64,
    /// When set, the portfolio loss fraction is scaled by (1-R) before
    /// tranching. Off by default: the quoted CDO loss is the defaulted
    /// fraction of names.
    pub loss_given_default_scaling: bool,
}

impl ContractTerms {
    pub fn new(maturity: f64, payment_dates: Vec<f64>, recovery: f64, rate: f64) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::invalid(
                "contract.maturity",
                "must be positive and finite",
            ));
        }
        if payment_dates.is_empty() {
            return Err(Error::invalid(
                "contract.payment_dates",
                "needs at least one date",
            ));
        }
        let mut prev = 0.0;
        for (i, &t) in payment_dates.iter().enumerate() {
            if !(t > prev && t.is_finite()) {
                return Err(Error::invalid(
                    "contract.payment_dates",
                    format!("date {i} = {t} is not strictly increasing from t_0 = 0"),
                ));
            }
            prev = t;
        }
        if (prev - maturity).abs() > 1e-9 * maturity.max(1.0) {
            return Err(Error::invalid(
                "contract.payment_dates",
                format!("last date {prev} must equal the maturity {maturity}"),
            ));
        }
        let mut payment_dates = payment_dates;
        *payment_dates.last_mut().expect("nonempty") = maturity;
        if !(0.0..=1.0).contains(&recovery) {
            return Err(Error::invalid("contract.recovery", "must lie in [0, 1]"));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::invalid("contract.rate", "must be finite and >= 0"));
        }
        Ok(Self {
            maturity,
            payment_dates,
            recovery,
            rate,
            loss_given_default_scaling: false,
        })
    }

    /// N equally spaced payments ending at the maturity.
    pub fn equally_spaced(
        maturity: f64,
        payments: usize,
        recovery: f64,
        rate: f64,
    ) -> Result<Self> {
        if payments == 0 {
            return Err(Error::invalid("contract.payments", "must be at least 1"));
        }
        let dates = (1..=payments)
            .map(|i| maturity * (i as f64 / payments as f64))
            .collect();
        Self::new(maturity, dates, recovery, rate)
    }

    pub fn with_loss_scaling(mut self, on: bool) -> Self {
        self.loss_given_default_scaling = on;
        self
    }

    /// Discount factor B(t) = e^{-rt}.
    pub fn discount(&self, t: f64) -> f64 {
        (-self.rate * t).exp()
    }

    fn loss_scale(&self) -> f64 {
        if self.loss_given_default_scaling {
            1.0 - self.recovery
        } else {
            1.0
        }
    }
}

/// Tranche attachment points 0 = k_0 < k_1 < ... < k_M = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TrancheSpec {
    attachments: Vec<f64>,
}

impl TrancheSpec {
    pub fn new(attachments: Vec<f64>) -> Result<Self> {
        if attachments.len() < 2 {
            return Err(Error::invalid(
                "tranches.attachments",
                "needs at least two points",
            ));
        }
        if attachments[0] != 0.0 {
            return Err(Error::invalid(
                "tranches.attachments",
                "first point must be 0",
            ));
        }
        if *attachments.last().expect("nonempty") != 1.0 {
            return Err(Error::invalid(
                "tranches.attachments",
                "last point must be 1",
            ));
        }
        for w in attachments.windows(2) {
            if w[0].is_nan() || w[1].is_nan() || w[1] <= w[0] {
                return Err(Error::invalid(
                    "tranches.attachments",
                    "must be strictly increasing",
                ));
            }
        }
        Ok(Self { attachments })
    }

    /// Number of tranches M.
    pub fn count(&self) -> usize {
        self.attachments.len() - 1
    }

    /// (attachment, detachment) of tranche `l` (0-based).
    pub fn bounds(&self, l: usize) -> (f64, f64) {
        (self.attachments[l], self.attachments[l + 1])
    }

    pub fn attachments(&self) -> &[f64] {
        &self.attachments
    }
}

/// Present values of one contract's two legs on a single path, per unit
/// notional; the fee leg is quoted at swap rate 1.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LegPair {
    pub contingent_pv: f64,
    pub fee_pv_per_unit_rate: f64,
}

/// A Monte Carlo estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub paths: u64,
    pub seed: u64,
}

/// kth-to-default CDS legs on one path.
pub fn cds_legs_on_path(k: usize, timeline: &DefaultTimeline, terms: &ContractTerms) -> LegPair {
    assert!(k >= 1 && k <= timeline.n(), "order k out of range");
    let tau_k = timeline.tau[k - 1];
    let contingent_pv = if tau_k <= terms.maturity {
        (1.0 - terms.recovery) * terms.discount(tau_k)
    } else {
        0.0
    };
    let mut fee = 0.0;
    let mut prev = 0.0;
    for &ti in &terms.payment_dates {
        if tau_k > ti {
            fee += (ti - prev) * terms.discount(ti);
        } else if tau_k > prev {
            fee += (tau_k - prev) * terms.discount(tau_k);
        }
        prev = ti;
    }
    LegPair {
        contingent_pv,
        fee_pv_per_unit_rate: fee,
    }
}

/// kth-to-default CDS legs gated by counterparty survival: the protection
/// payment requires the counterparty to outlive the default, each fee
/// period requires it to outlive the period end, and the accrued stub
/// requires it to outlive the default time.
pub fn cds_legs_with_counterparty(
    k: usize,
    timeline: &DefaultTimeline,
    terms: &ContractTerms,
) -> Result<LegPair> {
    let tau_b = timeline
        .counterparty_tau
        .ok_or(Error::MissingCounterparty)?;
    assert!(k >= 1 && k <= timeline.n(), "order k out of range");
    let tau_k = timeline.tau[k - 1];
    let contingent_pv = if tau_k <= terms.maturity && tau_b >= tau_k {
        (1.0 - terms.recovery) * terms.discount(tau_k)
    } else {
        0.0
    };
    let mut fee = 0.0;
    let mut prev = 0.0;
    for &ti in &terms.payment_dates {
        if tau_k > ti {
            if tau_b > ti {
                fee += (ti - prev) * terms.discount(ti);
            }
        } else if tau_k > prev && tau_b > tau_k {
            fee += (tau_k - prev) * terms.discount(tau_k);
        }
        prev = ti;
    }
    Ok(LegPair {
        contingent_pv,
        fee_pv_per_unit_rate: fee,
    })
}

/// Cumulative portfolio loss fraction at `t`: defaulted names over n.
/// Piecewise constant, right continuous, nondecreasing.
pub fn portfolio_loss(timeline: &DefaultTimeline, t: f64, n: usize) -> f64 {
    timeline.defaults_by(t) as f64 / n as f64
}

/// Loss absorbed by the tranche [lo, hi) when the portfolio loss is `loss`.
pub fn tranche_loss(loss: f64, lo: f64, hi: f64) -> f64 {
    (loss - lo).clamp(0.0, hi - lo)
}

/// CDO tranche legs on one path; losses settle at the payment dates.
pub fn cdo_legs_on_path(
    l: usize,
    timeline: &DefaultTimeline,
    terms: &ContractTerms,
    tranches: &TrancheSpec,
) -> LegPair {
    cdo_legs_gated(l, timeline, terms, tranches, f64::INFINITY)
}

/// CDO tranche legs with every period term additionally gated by
/// counterparty survival at the period end.
pub fn cdo_legs_with_counterparty(
    l: usize,
    timeline: &DefaultTimeline,
    terms: &ContractTerms,
    tranches: &TrancheSpec,
) -> Result<LegPair> {
    let tau_b = timeline
        .counterparty_tau
        .ok_or(Error::MissingCounterparty)?;
    Ok(cdo_legs_gated(l, timeline, terms, tranches, tau_b))
}

fn cdo_legs_gated(
    l: usize,
    timeline: &DefaultTimeline,
    terms: &ContractTerms,
    tranches: &TrancheSpec,
    tau_b: f64,
) -> LegPair {
    let (lo, hi) = tranches.bounds(l);
    let width = hi - lo;
    let scale = terms.loss_scale();
    let n = timeline.n();
    let mut contingent = 0.0;
    let mut fee = 0.0;
    let mut prev_loss = 0.0;
    let mut prev_t = 0.0;
    for &ti in &terms.payment_dates {
        if tau_b <= ti {
            break;
        }
        let ll = tranche_loss(scale * portfolio_loss(timeline, ti, n), lo, hi);
        let b = terms.discount(ti);
        contingent += b * (ll - prev_loss);
        fee += (ti - prev_t) * b * (width - ll);
        prev_loss = ll;
        prev_t = ti;
    }
    LegPair {
        contingent_pv: contingent,
        fee_pv_per_unit_rate: fee,
    }
}

/// Swap rate equating the two legs, with the standard error propagated by
/// the delta method. `mean_covariance` is the covariance of the two mean
/// estimators (the ratio's error is not the ratio of errors).
pub fn swap_rate(
    contingent: &MCEstimate,
    fee: &MCEstimate,
    mean_covariance: f64,
) -> Result<MCEstimate> {
    if fee.value.is_nan() || fee.value <= 0.0 {
        return Err(Error::DegenerateContract { fee: fee.value });
    }
    let value = contingent.value / fee.value;
    let var = (contingent.std_error / fee.value).powi(2)
        + (contingent.value * fee.std_error / (fee.value * fee.value)).powi(2)
        - 2.0 * contingent.value * mean_covariance / fee.value.powi(3);
    Ok(MCEstimate {
        value,
        std_error: var.max(0.0).sqrt(),
        paths: contingent.paths,
        seed: contingent.seed,
    })
}

/// Joint accumulator of one target's two legs across paths: first and
/// second moments plus the cross moment, all Kahan compensated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LegAccumulator {
    paths: u64,
    contingent: KahanSum,
    fee: KahanSum,
    contingent_sq: KahanSum,
    fee_sq: KahanSum,
    cross: KahanSum,
}

impl LegAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, legs: &LegPair) {
        self.paths += 1;
        self.contingent.add(legs.contingent_pv);
        self.fee.add(legs.fee_pv_per_unit_rate);
        self.contingent_sq
            .add(legs.contingent_pv * legs.contingent_pv);
        self.fee_sq
            .add(legs.fee_pv_per_unit_rate * legs.fee_pv_per_unit_rate);
        self.cross
            .add(legs.contingent_pv * legs.fee_pv_per_unit_rate);
    }

    /// Fold another accumulator into this one. Order of folds is the
    /// caller's contract; the driver folds in block-index order.
    pub fn absorb(&mut self, other: &LegAccumulator) {
        self.paths += other.paths;
        self.contingent.absorb(&other.contingent);
        self.fee.absorb(&other.fee);
        self.contingent_sq.absorb(&other.contingent_sq);
        self.fee_sq.absorb(&other.fee_sq);
        self.cross.absorb(&other.cross);
    }

    pub fn paths(&self) -> u64 {
        self.paths
    }

    fn mean_se(&self, sum: &KahanSum, sum_sq: &KahanSum) -> (f64, f64) {
        let m = self.paths as f64;
        let mean = sum.value() / m;
        if self.paths < 2 {
            return (mean, 0.0);
        }
        let var = ((sum_sq.value() - m * mean * mean) / (m - 1.0)).max(0.0);
        (mean, (var / m).sqrt())
    }

    pub fn contingent_estimate(&self, seed: u64) -> MCEstimate {
        let (value, std_error) = self.mean_se(&self.contingent, &self.contingent_sq);
        MCEstimate {
            value,
            std_error,
            paths: self.paths,
            seed,
        }
    }

    pub fn fee_estimate(&self, seed: u64) -> MCEstimate {
        let (value, std_error) = self.mean_se(&self.fee, &self.fee_sq);
        MCEstimate {
            value,
            std_error,
            paths: self.paths,
            seed,
        }
    }

    /// Covariance of the two mean estimators.
    pub fn mean_covariance(&self) -> f64 {
        if self.paths < 2 {
            return 0.0;
        }
        let m = self.paths as f64;
        let mc = self.contingent.value() / m;
        let mf = self.fee.value() / m;
        (self.cross.value() - m * mc * mf) / (m - 1.0) / m
    }

    /// Swap rate estimate for this target.
    pub fn swap_rate_estimate(&self, seed: u64) -> Result<MCEstimate> {
        swap_rate(
            &self.contingent_estimate(seed),
            &self.fee_estimate(seed),
            self.mean_covariance(),
        )
    }
}
