//! Deterministic block-partitioned Monte Carlo execution.
//!
//! The path budget is split into a fixed number of logical blocks, each
//! owning a derived RNG sub-stream keyed on the block index (never on
//! worker identity). Workers steal whole blocks; partial accumulators are
//! folded in block-index order, so a fixed (seed, paths, blocks) triple
//! produces bit-identical estimates for any worker count.
//!
//! The per-path pipeline is copula -> thresholds -> ordered defaults ->
//! counterparty time -> per-target legs. All requested targets share each
//! path's timeline, and stream consumption never depends on the target
//! set, so pricing several targets in one run matches pricing each alone.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::contagion::{
    counterparty_default_time_from_slice, ordered_defaults_into, CounterpartyParams,
    DefaultTimeline, IntensityParams,
};
use crate::copulas::{
    counterparty_uniform, sample_uniforms_into, threshold, thresholds_into, CopulaSpec,
};
use crate::error::Error;
use crate::pricing::{
    cdo_legs_on_path, cdo_legs_with_counterparty, cds_legs_on_path, cds_legs_with_counterparty,
    ContractTerms, LegAccumulator, MCEstimate, TrancheSpec,
};
use crate::Result;

/// Counterparty sub-streams live in a disjoint stream namespace so a path's
/// portfolio draws are identical whether or not a counterparty is present.
const COUNTERPARTY_STREAM_BASE: u64 = 1 << 32;

/// One requested output of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    /// kth-to-default CDS rate (k is 1-based).
    Cds { k: usize },
    /// Same contract gated by counterparty survival.
    CdsCounterparty { k: usize },
    /// CDO tranche rate (0-based tranche index).
    Tranche { index: usize },
    /// Same tranche gated by counterparty survival.
    TrancheCounterparty { index: usize },
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Target::Cds { k } => write!(f, "cds:{k}"),
            Target::CdsCounterparty { k } => write!(f, "cds_ccr:{k}"),
            Target::Tranche { index } => write!(f, "tranche:{index}"),
            Target::TrancheCounterparty { index } => write!(f, "tranche_ccr:{index}"),
        }
    }
}

/// A full description of one Monte Carlo pricing run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub n_names: usize,
    pub paths: u64,
    pub seed: u64,
    /// Physical worker threads. Never affects results.
    pub workers: usize,
    /// Logical sub-stream count; part of the reproducibility key.
    pub blocks: u32,
    pub copula: CopulaSpec,
    pub intensity: IntensityParams,
    pub counterparty: Option<CounterpartyParams>,
    pub terms: ContractTerms,
    pub tranches: Option<TrancheSpec>,
    pub targets: Vec<Target>,
}

/// Default number of logical blocks.
pub const DEFAULT_BLOCKS: u32 = 256;

impl SimulationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_names == 0 {
            return Err(Error::invalid("run.n_names", "must be at least 1"));
        }
        if self.paths == 0 {
            return Err(Error::invalid("run.paths", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("run.workers", "must be at least 1"));
        }
        if self.blocks == 0 {
            return Err(Error::invalid("run.blocks", "must be at least 1"));
        }
        self.copula.validate()?;
        IntensityParams::new(
            self.intensity.a,
            self.intensity.c,
            self.intensity.decay.value(),
        )?;
        if let Some(cp) = &self.counterparty {
            CounterpartyParams::new(cp.a_b, cp.c_b)?;
        }
        ContractTerms::new(
            self.terms.maturity,
            self.terms.payment_dates.clone(),
            self.terms.recovery,
            self.terms.rate,
        )?;
        if self.targets.is_empty() {
            return Err(Error::invalid("targets", "at least one target is required"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for target in &self.targets {
            if !seen.insert(*target) {
                return Err(Error::invalid(
                    "targets",
                    format!("duplicate target {target}"),
                ));
            }
            match *target {
                Target::Cds { k } | Target::CdsCounterparty { k } => {
                    if k == 0 || k > self.n_names {
                        return Err(Error::invalid(
                            "targets.cds",
                            format!("order {k} out of range for n = {}", self.n_names),
                        ));
                    }
                }
                Target::Tranche { index } | Target::TrancheCounterparty { index } => {
                    let tranches = self.tranches.as_ref().ok_or_else(|| {
                        Error::invalid("tranches", "tranche targets require attachment points")
                    })?;
                    if index >= tranches.count() {
                        return Err(Error::invalid(
                            "targets.tranches",
                            format!(
                                "index {index} out of range for {} tranches",
                                tranches.count()
                            ),
                        ));
                    }
                }
            }
            if matches!(
                target,
                Target::CdsCounterparty { .. } | Target::TrancheCounterparty { .. }
            ) && self.counterparty.is_none()
            {
                return Err(Error::invalid(
                    "counterparty",
                    "counterparty-gated targets require counterparty parameters",
                ));
            }
        }
        Ok(())
    }

    /// Paths assigned to one block: the budget split as evenly as possible,
    /// earlier blocks taking the remainder.
    pub fn block_size(&self, block: u32) -> u64 {
        let base = self.paths / self.blocks as u64;
        let rem = self.paths % self.blocks as u64;
        base + u64::from((block as u64) < rem)
    }

    /// Hash of every result-affecting parameter; guards merges.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.n_names.hash(&mut h);
        self.paths.hash(&mut h);
        self.seed.hash(&mut h);
        self.blocks.hash(&mut h);
        match self.copula {
            CopulaSpec::Product => 0u8.hash(&mut h),
            CopulaSpec::Exponential { c0, c1 } => {
                1u8.hash(&mut h);
                c0.to_bits().hash(&mut h);
                c1.to_bits().hash(&mut h);
            }
            CopulaSpec::GaussianOneFactor { rho } => {
                2u8.hash(&mut h);
                rho.to_bits().hash(&mut h);
            }
        }
        self.intensity.a.to_bits().hash(&mut h);
        self.intensity.c.to_bits().hash(&mut h);
        self.intensity.decay.value().to_bits().hash(&mut h);
        if let Some(cp) = &self.counterparty {
            cp.a_b.to_bits().hash(&mut h);
            cp.c_b.to_bits().hash(&mut h);
        }
        self.terms.maturity.to_bits().hash(&mut h);
        for &t in &self.terms.payment_dates {
            t.to_bits().hash(&mut h);
        }
        self.terms.recovery.to_bits().hash(&mut h);
        self.terms.rate.to_bits().hash(&mut h);
        self.terms.loss_given_default_scaling.hash(&mut h);
        if let Some(tr) = &self.tranches {
            for &a in tr.attachments() {
                a.to_bits().hash(&mut h);
            }
        }
        for t in &self.targets {
            t.hash(&mut h);
        }
        h.finish()
    }
}

/// Portfolio RNG of one block: a dedicated ChaCha stream of the seed.
pub fn block_rng(seed: u64, block: u32) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Counterparty RNG of one block, disjoint from every portfolio stream.
pub fn counterparty_rng(seed: u64, block: u32) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(COUNTERPARTY_STREAM_BASE + block as u64);
    rng
}

/// Reusable per-path pipeline: copula draw, threshold sort, default-time
/// construction, counterparty time.
pub struct PathSampler<'a> {
    copula: &'a CopulaSpec,
    intensity: &'a IntensityParams,
    counterparty: Option<&'a CounterpartyParams>,
    n: usize,
    uniforms: Vec<f64>,
    thresholds: Vec<f64>,
}

impl<'a> PathSampler<'a> {
    pub fn new(
        copula: &'a CopulaSpec,
        intensity: &'a IntensityParams,
        counterparty: Option<&'a CounterpartyParams>,
        n: usize,
    ) -> Self {
        Self {
            copula,
            intensity,
            counterparty,
            n,
            uniforms: Vec::with_capacity(n),
            thresholds: Vec::with_capacity(n),
        }
    }

    pub fn for_plan(plan: &'a SimulationPlan) -> Self {
        Self::new(
            &plan.copula,
            &plan.intensity,
            plan.counterparty.as_ref(),
            plan.n_names,
        )
    }

    /// Generate one timeline into a reused buffer. The portfolio stream is
    /// consumed identically whether or not a counterparty is configured;
    /// the counterparty coordinate draws from its own stream.
    pub fn sample_into(
        &mut self,
        rng: &mut ChaCha12Rng,
        cp_rng: &mut ChaCha12Rng,
        timeline: &mut DefaultTimeline,
    ) -> Result<()> {
        let factor = sample_uniforms_into(self.copula, self.n, rng, &mut self.uniforms);
        thresholds_into(&self.uniforms, &mut self.thresholds);
        ordered_defaults_into(self.intensity, &self.thresholds, &mut timeline.tau)?;
        timeline.counterparty_tau = self.counterparty.map(|cp| {
            let u_b = counterparty_uniform(self.copula, factor, cp_rng);
            counterparty_default_time_from_slice(cp, &timeline.tau, threshold(u_b))
        });
        Ok(())
    }

    pub fn sample(
        &mut self,
        rng: &mut ChaCha12Rng,
        cp_rng: &mut ChaCha12Rng,
    ) -> Result<DefaultTimeline> {
        let mut timeline = DefaultTimeline {
            tau: Vec::with_capacity(self.n),
            counterparty_tau: None,
        };
        self.sample_into(rng, cp_rng, &mut timeline)?;
        Ok(timeline)
    }
}

/// Accumulated leg moments of one block, one accumulator per plan target.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartial {
    fingerprint: u64,
    pub block: u32,
    accumulators: Vec<LegAccumulator>,
}

impl BlockPartial {
    pub fn accumulators(&self) -> &[LegAccumulator] {
        &self.accumulators
    }
}

/// Simulate one block of paths sequentially on the caller's thread.
pub fn simulate_block(plan: &SimulationPlan, block: u32) -> Result<BlockPartial> {
    plan.validate()?;
    let mut rng = block_rng(plan.seed, block);
    let mut cp_rng = counterparty_rng(plan.seed, block);
    let mut sampler = PathSampler::for_plan(plan);
    let mut timeline = DefaultTimeline {
        tau: Vec::with_capacity(plan.n_names),
        counterparty_tau: None,
    };
    let mut accumulators = vec![LegAccumulator::new(); plan.targets.len()];
    let tranches = plan.tranches.as_ref();

    for path in 0..plan.block_size(block) {
        let tag_path = |e: Error| Error::PathFailure {
            block: block as u64,
            path_in_block: path,
            source: Box::new(e),
        };
        sampler
            .sample_into(&mut rng, &mut cp_rng, &mut timeline)
            .map_err(tag_path)?;
        for (target, acc) in plan.targets.iter().zip(&mut accumulators) {
            let legs = match *target {
                Target::Cds { k } => cds_legs_on_path(k, &timeline, &plan.terms),
                Target::CdsCounterparty { k } => {
                    cds_legs_with_counterparty(k, &timeline, &plan.terms).map_err(tag_path)?
                }
                Target::Tranche { index } => {
                    cdo_legs_on_path(index, &timeline, &plan.terms, tranches.expect("validated"))
                }
                Target::TrancheCounterparty { index } => cdo_legs_with_counterparty(
                    index,
                    &timeline,
                    &plan.terms,
                    tranches.expect("validated"),
                )
                .map_err(tag_path)?,
            };
            acc.push(&legs);
        }
    }
    Ok(BlockPartial {
        fingerprint: plan.fingerprint(),
        block,
        accumulators,
    })
}

/// Fold block partials in block-index order and form the rate estimates.
///
/// The fold is the engine's single canonical accumulation order: a
/// workers=1 run performs exactly this fold, so merged results equal
/// sequential results bit for bit.
pub fn merge(
    plan: &SimulationPlan,
    partials: &[BlockPartial],
) -> Result<BTreeMap<Target, MCEstimate>> {
    let totals = merge_accumulators(plan, partials)?;
    let mut out = BTreeMap::new();
    for (target, acc) in plan.targets.iter().zip(&totals) {
        out.insert(*target, acc.swap_rate_estimate(plan.seed)?);
    }
    Ok(out)
}

/// The merged per-target accumulators, exposed for estimator-level checks.
pub fn merge_accumulators(
    plan: &SimulationPlan,
    partials: &[BlockPartial],
) -> Result<Vec<LegAccumulator>> {
    let expected = plan.fingerprint();
    for p in partials {
        if p.fingerprint != expected {
            return Err(Error::MergeMismatch {
                expected,
                got: p.fingerprint,
            });
        }
    }
    let mut ordered: Vec<&BlockPartial> = partials.iter().collect();
    ordered.sort_by_key(|p| p.block);
    let mut totals = vec![LegAccumulator::new(); plan.targets.len()];
    for partial in ordered {
        for (total, acc) in totals.iter_mut().zip(&partial.accumulators) {
            total.absorb(acc);
        }
    }
    Ok(totals)
}

/// Execute the full plan: simulate every block (in parallel over
/// `plan.workers` threads) and merge.
pub fn run(plan: &SimulationPlan) -> Result<BTreeMap<Target, MCEstimate>> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    let partials: Result<Vec<BlockPartial>> = pool.install(|| {
        (0..plan.blocks)
            .into_par_iter()
            .map(|block| simulate_block(plan, block))
            .collect()
    });
    merge(plan, &partials?)
}
