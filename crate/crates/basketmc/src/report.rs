//! CSV reports: the four benchmark result tables and analytic density
//! dumps.
//!
//! Every table uses the shared benchmark data (40 names, a = 0.01, r = 0.05,
//! T = 3 with 6 equal payments, R = 0.5, equity/mezzanine/senior tranches at
//! 0.15 and 0.30) and quotes each cell as a rate plus its standard error.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::config::GridSpec;
use crate::contagion::{CounterpartyParams, IntensityParams};
use crate::copulas::CopulaSpec;
use crate::driver::{run, SimulationPlan, Target, DEFAULT_BLOCKS};
use crate::error::Error;
use crate::oracle;
use crate::pricing::{ContractTerms, MCEstimate, TrancheSpec};
use crate::Result;

/// Names in the benchmark portfolio.
pub const BENCHMARK_NAMES: usize = 40;
/// Benchmark base hazard rate.
pub const BENCHMARK_BASE_HAZARD: f64 = 0.01;
/// kth-to-default orders quoted in the CDS tables.
pub const BENCHMARK_CDS_ORDERS: [usize; 6] = [1, 2, 5, 10, 20, 30];

/// 3-year semiannual contract at r = 0.05, R = 0.5.
pub fn benchmark_terms() -> ContractTerms {
    ContractTerms::equally_spaced(3.0, 6, 0.5, 0.05).expect("static terms")
}

/// Equity / mezzanine / senior attachments 0-0.15-0.3-1.
pub fn benchmark_tranches() -> TrancheSpec {
    TrancheSpec::new(vec![0.0, 0.15, 0.3, 1.0]).expect("static tranches")
}

/// Execution knobs of a table reproduction.
#[derive(Debug, Clone, Copy)]
pub struct TableOptions {
    pub paths: u64,
    pub seed: u64,
    pub workers: usize,
    pub precision: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            paths: 1_000_000,
            seed: 1,
            workers: 1,
            precision: 4,
        }
    }
}

fn benchmark_plan(
    copula: CopulaSpec,
    c: f64,
    d: f64,
    counterparty: Option<CounterpartyParams>,
    targets: Vec<Target>,
    opts: &TableOptions,
) -> Result<SimulationPlan> {
    Ok(SimulationPlan {
        n_names: BENCHMARK_NAMES,
        paths: opts.paths,
        seed: opts.seed,
        workers: opts.workers,
        blocks: DEFAULT_BLOCKS,
        copula,
        intensity: IntensityParams::new(BENCHMARK_BASE_HAZARD, c, d)?,
        counterparty,
        terms: benchmark_terms(),
        tranches: Some(benchmark_tranches()),
        targets,
    })
}

fn tranche_targets() -> Vec<Target> {
    (0..3).map(|index| Target::Tranche { index }).collect()
}

fn cds_and_tranche_targets() -> Vec<Target> {
    let mut targets: Vec<Target> = BENCHMARK_CDS_ORDERS
        .iter()
        .map(|&k| Target::Cds { k })
        .collect();
    targets.extend(tranche_targets());
    targets
}

/// Human label of a tranche: `0-0.15`, `0.15-0.3`, `0.3-1`.
pub fn tranche_label(tranches: &TrancheSpec, index: usize) -> String {
    let (lo, hi) = tranches.bounds(index);
    format!("{lo}-{hi}")
}

/// Display label of a target for the `price` command.
pub fn target_label(target: &Target, tranches: Option<&TrancheSpec>) -> String {
    match *target {
        Target::Cds { k } => format!("cds_{k}"),
        Target::CdsCounterparty { k } => format!("cds_{k}_ccr"),
        Target::Tranche { index } => match tranches {
            Some(spec) => format!("tranche_{}", tranche_label(spec, index)),
            None => format!("tranche_{index}"),
        },
        Target::TrancheCounterparty { index } => match tranches {
            Some(spec) => format!("tranche_{}_ccr", tranche_label(spec, index)),
            None => format!("tranche_{index}_ccr"),
        },
    }
}

fn push_cell(row: &mut String, est: &MCEstimate, precision: usize) {
    let _ = write!(
        row,
        ",{:.prec$},{:.prec$}",
        est.value,
        est.std_error,
        prec = precision
    );
}

/// CSV of the `price` command: one row per requested target.
pub fn price_csv(
    plan: &SimulationPlan,
    results: &BTreeMap<Target, MCEstimate>,
    precision: usize,
) -> String {
    let mut out = String::from("target,rate,std_error,paths,seed\n");
    for (target, est) in results {
        let _ = writeln!(
            out,
            "{},{:.prec$},{:.prec$},{},{}",
            target_label(target, plan.tranches.as_ref()),
            est.value,
            est.std_error,
            est.paths,
            est.seed,
            prec = precision
        );
    }
    out
}

/// Reproduce benchmark table 1-4 as CSV.
pub fn reproduce_table(id: u8, opts: &TableOptions) -> Result<String> {
    match id {
        1 => table_gaussian_cdo(opts, false),
        2 => table_copula_comparison(opts),
        3 => table_decay_sweep(opts),
        4 => table_gaussian_cdo(opts, true),
        other => Err(Error::invalid("table.id", format!("unknown table {other}"))),
    }
}

/// Tables 1 and 4: CDO rates under the Gaussian copula over a grid of
/// (rho, c); table 4 adds counterparty-gated columns with a_B = a/10 and
/// c_B = c.
fn table_gaussian_cdo(opts: &TableOptions, with_counterparty: bool) -> Result<String> {
    let rhos = [0.0, 0.5, 0.9];
    let cs = [0.0, 0.3, 3.0];
    let tranches = benchmark_tranches();

    let mut header = String::from("rho,tranche");
    for c in cs {
        if with_counterparty {
            let _ = write!(
                header,
                ",c{c}_gausc_rate,c{c}_gausc_se,c{c}_gausccr_rate,c{c}_gausccr_se"
            );
        } else {
            let _ = write!(header, ",c{c}_rate,c{c}_se");
        }
    }
    let mut out = header;
    out.push('\n');

    for &rho in &rhos {
        // One run per c; rows are tranches, so collect per-c maps first.
        let mut per_c = Vec::new();
        for &c in &cs {
            let counterparty = with_counterparty
                .then(|| CounterpartyParams::new(BENCHMARK_BASE_HAZARD / 10.0, c))
                .transpose()?;
            let mut targets = tranche_targets();
            if with_counterparty {
                targets.extend((0..3).map(|index| Target::TrancheCounterparty { index }));
            }
            let plan = benchmark_plan(
                CopulaSpec::GaussianOneFactor { rho },
                c,
                0.0,
                counterparty,
                targets,
                opts,
            )?;
            per_c.push(run(&plan)?);
        }
        for index in 0..3 {
            let mut row = format!("{rho},{}", tranche_label(&tranches, index));
            for results in &per_c {
                push_cell(
                    &mut row,
                    &results[&Target::Tranche { index }],
                    opts.precision,
                );
                if with_counterparty {
                    push_cell(
                        &mut row,
                        &results[&Target::TrancheCounterparty { index }],
                        opts.precision,
                    );
                }
            }
            out.push_str(&row);
            out.push('\n');
        }
    }
    Ok(out)
}

/// Table 2: basket CDS and CDO rates for the three copulas at
/// c in {0, 0.3, 3}, with the exponential copula at (c0, c1) = (0.01, 0.1)
/// and the Gaussian at rho = 0.5.
fn table_copula_comparison(opts: &TableOptions) -> Result<String> {
    let cs = [0.0, 0.3, 3.0];
    let copulas: [(&str, CopulaSpec); 3] = [
        ("prodc", CopulaSpec::Product),
        ("expc", CopulaSpec::Exponential { c0: 0.01, c1: 0.1 }),
        ("gausc", CopulaSpec::GaussianOneFactor { rho: 0.5 }),
    ];
    let tranches = benchmark_tranches();

    let mut out = String::from("target");
    for c in cs {
        for (name, _) in &copulas {
            let _ = write!(out, ",c{c}_{name}_rate,c{c}_{name}_se");
        }
    }
    out.push('\n');

    let mut results = Vec::new();
    for &c in &cs {
        for (_, copula) in &copulas {
            let plan = benchmark_plan(*copula, c, 0.0, None, cds_and_tranche_targets(), opts)?;
            results.push(run(&plan)?);
        }
    }

    for &k in &BENCHMARK_CDS_ORDERS {
        let mut row = format!("k={k}");
        for cell in &results {
            push_cell(&mut row, &cell[&Target::Cds { k }], opts.precision);
        }
        out.push_str(&row);
        out.push('\n');
    }
    for index in 0..3 {
        let mut row = tranche_label(&tranches, index);
        for cell in &results {
            push_cell(&mut row, &cell[&Target::Tranche { index }], opts.precision);
        }
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}

/// Table 3: decay-rate sweep d in {0, 1, 10, 100, inf} under the Gaussian
/// copula at rho = 0.5, c = 3.
fn table_decay_sweep(opts: &TableOptions) -> Result<String> {
    let ds = [
        (0.0, "d0"),
        (1.0, "d1"),
        (10.0, "d10"),
        (100.0, "d100"),
        (f64::INFINITY, "dinf"),
    ];
    let tranches = benchmark_tranches();

    let mut out = String::from("target");
    for (_, name) in &ds {
        let _ = write!(out, ",{name}_rate,{name}_se");
    }
    out.push('\n');

    let mut results = Vec::new();
    for &(d, _) in &ds {
        let plan = benchmark_plan(
            CopulaSpec::GaussianOneFactor { rho: 0.5 },
            3.0,
            d,
            None,
            cds_and_tranche_targets(),
            opts,
        )?;
        results.push(run(&plan)?);
    }

    for &k in &BENCHMARK_CDS_ORDERS {
        let mut row = format!("k={k}");
        for cell in &results {
            push_cell(&mut row, &cell[&Target::Cds { k }], opts.precision);
        }
        out.push_str(&row);
        out.push('\n');
    }
    for index in 0..3 {
        let mut row = tranche_label(&tranches, index);
        for cell in &results {
            push_cell(&mut row, &cell[&Target::Tranche { index }], opts.precision);
        }
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}

/// Tabulate the analytic density and CDF of the k-th default time on a
/// grid (permanent-shock model only).
pub fn density_csv(
    k: usize,
    n: usize,
    a: f64,
    c: f64,
    grid: &GridSpec,
    precision: usize,
) -> Result<String> {
    let p = IntensityParams::new(a, c, 0.0)?;
    let mut out = String::from("t,f,F\n");
    for t in grid.points() {
        let f = oracle::density_tau_k(k, t, n, &p)?;
        let cdf = oracle::cdf_tau_k(k, t, n, &p)?;
        let _ = writeln!(out, "{t:.prec$},{f:.prec$e},{cdf:.prec$}", prec = precision);
    }
    Ok(out)
}
