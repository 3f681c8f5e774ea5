//! Seeded, replicated experiments and their CSV tables.
//!
//! Replicate `j` of an experiment draws only from the streams keyed by
//! `(seed, j)`, replicates run in batches on a worker pool, and each batch
//! is folded into the estimator in replicate order. The output is therefore
//! a pure function of the configuration and the seed.

pub mod config;
pub mod io;

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

pub use config::{
    config_from_strs, parse_pairs, CoalescentModel, Estimator, ExperimentConfig, GammaSpec, Kind,
};
pub use io::{
    compare_curves, read_csv, read_curve, write_csv, CompareRecord, EstimateRecord, ExactRecord,
    RateRecord, ScalingRecord,
};

use crate::cannings::{simulate_annealed, tally_pair_coalescences, CanningsModel, CoalescenceTally};
use crate::coalescent::{simulate_lambda, simulate_xi, MergerSampler, TimeChange};
use crate::error::{Error, Result};
use crate::exact::{expected_branch_lengths, normalize};
use crate::offspring::{epsilon_schedule, population_time_scale, EnvironmentModel, Regime, Schedule};
use crate::quenched::{sample_quenched_tree, PopulationAncestry};
use crate::rates::{
    beta_pd_paintbox, beta_pd_rates, delta0_beta_rates, delta0_pd_paintbox, delta0_pd_rates, kingman_rates,
    BetaPdParams, Delta0BetaParams, Delta0PdParams, LambdaRateTable, PaintboxRates, XiRateTable, XI_TABLE_CAP,
};
use crate::spectrum::BranchLengthSpectrum;
use crate::streams::{derive_seed, replicate_rng, Purpose};

/// Replicates handed to the pool at a time.
const BATCH: u64 = 1024;

/// Pair experiments per random stream in a `c_N` estimate.
const PAIR_CHUNK: u64 = 10_000;

/// Fraction of replicates allowed to hit the generation cap.
pub const ABORT_FRACTION: f64 = 1e-3;

/// Running sums over replicate spectra, enough for both estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumAccumulator {
    reps: u64,
    ratio: Vec<f64>,
    ratio_sq: Vec<f64>,
    len: Vec<f64>,
    len_sq: Vec<f64>,
    len_total: Vec<f64>,
    total: f64,
    total_sq: f64,
}

impl SpectrumAccumulator {
    pub fn new(n: usize) -> Self {
        let z = vec![0.0; n - 1];
        Self {
            reps: 0,
            ratio: z.clone(),
            ratio_sq: z.clone(),
            len: z.clone(),
            len_sq: z.clone(),
            len_total: z,
            total: 0.0,
            total_sq: 0.0,
        }
    }

    pub fn reps(&self) -> u64 {
        self.reps
    }

    pub fn push(&mut self, s: &BranchLengthSpectrum) {
        let total = s.total();
        self.reps += 1;
        self.total += total;
        self.total_sq += total * total;
        for (i, &l) in s.lengths.iter().enumerate() {
            let r = l / total;
            self.ratio[i] += r;
            self.ratio_sq[i] += r * r;
            self.len[i] += l;
            self.len_sq[i] += l * l;
            self.len_total[i] += l * total;
        }
    }

    pub fn finish(&self, estimator: Estimator) -> Vec<EstimateRecord> {
        let m = self.reps as f64;
        (0..self.ratio.len())
            .map(|i| {
                let (mean, stderr) = match estimator {
                    Estimator::MeanOfRatios => {
                        let mean = self.ratio[i] / m;
                        let var = if self.reps > 1 {
                            ((self.ratio_sq[i] - m * mean * mean) / (m - 1.0)).max(0.0)
                        } else {
                            0.0
                        };
                        (mean, (var / m).sqrt())
                    }
                    Estimator::RatioOfMeans => {
                        let phi = self.len[i] / self.total;
                        let resid = self.len_sq[i] - 2.0 * phi * self.len_total[i]
                            + phi * phi * self.total_sq;
                        let se = if self.reps > 1 {
                            (resid.max(0.0) / (m * (m - 1.0))).sqrt() / (self.total / m)
                        } else {
                            0.0
                        };
                        (phi, se)
                    }
                };
                EstimateRecord {
                    i: i + 1,
                    mean,
                    stderr,
                    reps: self.reps,
                }
            })
            .collect()
    }
}

/// The environment of a population of size `pop_size`: `eps` if given,
/// otherwise the named schedule, otherwise the schedule of the regime.
pub fn build_environment(cfg: &ExperimentConfig, pop_size: usize) -> Result<EnvironmentModel> {
    let n = pop_size as u64;
    let eps = match (cfg.eps, cfg.schedule, cfg.regime) {
        (Some(e), _, _) => e,
        (None, Some(s), _) => epsilon_schedule(s, cfg.alpha, cfg.kappa, cfg.c, n)?,
        (None, None, Regime::TypeA) => epsilon_schedule(Schedule::TypeA, cfg.alpha, cfg.kappa, cfg.c, n)?,
        (None, None, Regime::TypeB) => epsilon_schedule(Schedule::TypeB, cfg.alpha, cfg.kappa, cfg.c, n)?,
        (None, None, Regime::Fixed) => 0.0,
    };
    let zeta = cfg.zeta.resolve(n, cfg.alpha);
    EnvironmentModel::new(cfg.regime, cfg.alpha, cfg.kappa, eps, zeta)
}

pub fn build_model(cfg: &ExperimentConfig, pop_size: usize) -> Result<CanningsModel> {
    CanningsModel::new(build_environment(cfg, pop_size)?, pop_size)
}

pub fn build_lambda_rates(cfg: &ExperimentConfig) -> Result<LambdaRateTable> {
    match cfg.model {
        CoalescentModel::Kingman => kingman_rates(cfg.n),
        CoalescentModel::Delta0Beta => {
            let mut p = Delta0BetaParams::new(cfg.alpha, cfg.gamma.resolve(cfg.kappa)?, cfg.kappa, cfg.c);
            p.c_kappa = cfg.c_kappa;
            delta0_beta_rates(cfg.n, &p)
        }
        m => Err(Error::Config(format!("{m:?} has simultaneous mergers; use coalescent-xi"))),
    }
}

pub fn build_xi_rates(cfg: &ExperimentConfig) -> Result<XiRateTable> {
    match cfg.model {
        CoalescentModel::Delta0Pd => {
            let mut p = Delta0PdParams::new(cfg.alpha, cfg.kappa, cfg.c);
            p.c_kappa = cfg.c_kappa;
            delta0_pd_rates(cfg.n, &p)
        }
        CoalescentModel::BetaPd => beta_pd_rates(
            cfg.n,
            &BetaPdParams {
                alpha: cfg.alpha,
                beta: cfg.beta,
                c: cfg.c,
                normalize: cfg.normalize,
            },
        ),
        m => Err(Error::Config(format!("{m:?} has no simultaneous mergers; use coalescent-lambda"))),
    }
}

/// Ξ jump chain for simulation: the enumerated table up to its cap, the
/// paintbox construction beyond it.
pub enum XiSampler {
    Table(XiRateTable),
    Paintbox(PaintboxRates),
}

impl MergerSampler for XiSampler {
    fn n(&self) -> usize {
        match self {
            XiSampler::Table(t) => t.n(),
            XiSampler::Paintbox(p) => p.n(),
        }
    }

    fn event_rate(&self, b: usize) -> f64 {
        match self {
            XiSampler::Table(t) => t.event_rate(b),
            XiSampler::Paintbox(p) => p.event_rate(b),
        }
    }

    fn sample_groups<R: Rng + ?Sized>(&self, b: usize, rng: &mut R, groups: &mut Vec<usize>) {
        match self {
            XiSampler::Table(t) => t.sample_groups(b, rng, groups),
            XiSampler::Paintbox(p) => p.sample_groups(b, rng, groups),
        }
    }
}

pub fn build_xi_sampler(cfg: &ExperimentConfig) -> Result<XiSampler> {
    if cfg.n <= XI_TABLE_CAP {
        return build_xi_rates(cfg).map(XiSampler::Table);
    }
    match cfg.model {
        CoalescentModel::Delta0Pd => {
            let mut p = Delta0PdParams::new(cfg.alpha, cfg.kappa, cfg.c);
            p.c_kappa = cfg.c_kappa;
            delta0_pd_paintbox(cfg.n, &p).map(XiSampler::Paintbox)
        }
        CoalescentModel::BetaPd => beta_pd_paintbox(
            cfg.n,
            &BetaPdParams {
                alpha: cfg.alpha,
                beta: cfg.beta,
                c: cfg.c,
                normalize: cfg.normalize,
            },
        )
        .map(XiSampler::Paintbox),
        m => Err(Error::Config(format!("{m:?} has no simultaneous mergers; use coalescent-lambda"))),
    }
}

/// One replicate generator per experiment kind, sharing immutable state.
pub enum Simulator {
    Annealed { model: CanningsModel, max_generations: u64 },
    Quenched { model: CanningsModel, max_generations: u64 },
    Lambda { rates: LambdaRateTable, time: TimeChange },
    Xi { rates: XiSampler, time: TimeChange },
}

impl Simulator {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match cfg.kind {
            Kind::Annealed => Simulator::Annealed {
                model: build_model(cfg, cfg.pop_size)?,
                max_generations: cfg.max_generations,
            },
            Kind::Quenched => Simulator::Quenched {
                model: build_model(cfg, cfg.pop_size)?,
                max_generations: cfg.max_generations,
            },
            Kind::CoalescentLambda => Simulator::Lambda {
                rates: build_lambda_rates(cfg)?,
                time: TimeChange::exponential(cfg.rho),
            },
            Kind::CoalescentXi => Simulator::Xi {
                rates: build_xi_sampler(cfg)?,
                time: TimeChange::exponential(cfg.rho),
            },
            k => return Err(Error::Config(format!("{k:?} is not a replicated simulation"))),
        })
    }

    /// Replicate `index`; a pure function of `(seed, index)`.
    pub fn replicate(&self, n: usize, seed: u64, index: u64) -> Result<BranchLengthSpectrum> {
        match self {
            Simulator::Annealed { model, max_generations } => {
                let mut rng = replicate_rng(seed, index, Purpose::Replicate);
                simulate_annealed(n, model, *max_generations, &mut rng)
            }
            Simulator::Quenched { model, max_generations } => {
                let mut anc_rng = replicate_rng(seed, index, Purpose::Ancestry);
                let mut sample_rng = replicate_rng(seed, index, Purpose::Sampling);
                let mut anc = PopulationAncestry::new(model.pop_size());
                sample_quenched_tree(&mut anc, n, model, *max_generations, &mut anc_rng, &mut sample_rng)
                    .map(|t| t.spectrum)
            }
            Simulator::Lambda { rates, time } => {
                let mut rng = replicate_rng(seed, index, Purpose::Replicate);
                Ok(simulate_lambda(n, rates, time, &mut rng))
            }
            Simulator::Xi { rates, time } => {
                let mut rng = replicate_rng(seed, index, Purpose::Replicate);
                Ok(simulate_xi(n, rates, time, &mut rng))
            }
        }
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs `reps` replicates and folds them in index order. Replicates that hit
/// the generation cap are left out; more than `ABORT_FRACTION` of them fails
/// the run.
pub fn replicate_spectra(
    sim: &Simulator,
    n: usize,
    reps: u64,
    seed: u64,
    threads: usize,
) -> Result<SpectrumAccumulator> {
    let pool = pool(threads)?;
    let mut acc = SpectrumAccumulator::new(n);
    let mut aborted = 0usize;
    let mut start = 0;
    while start < reps {
        let end = (start + BATCH).min(reps);
        let batch: Vec<Result<BranchLengthSpectrum>> =
            pool.install(|| (start..end).into_par_iter().map(|j| sim.replicate(n, seed, j)).collect());
        for r in batch {
            match r {
                Ok(s) => acc.push(&s),
                Err(Error::GenerationCap { .. }) => aborted += 1,
                Err(e) => return Err(e),
            }
        }
        start = end;
    }
    let limit = (ABORT_FRACTION * reps as f64).floor() as usize;
    if aborted > limit || acc.reps() == 0 {
        return Err(Error::AbortThreshold {
            aborted,
            total: reps as usize,
            limit,
        });
    }
    Ok(acc)
}

pub fn simulate_spectrum(cfg: &ExperimentConfig) -> Result<Vec<EstimateRecord>> {
    cfg.validate()?;
    let sim = Simulator::from_config(cfg)?;
    let acc = replicate_spectra(&sim, cfg.n, cfg.reps, cfg.seed, cfg.threads)?;
    Ok(acc.finish(cfg.estimator))
}

pub fn exact_spectrum(cfg: &ExperimentConfig) -> Result<Vec<ExactRecord>> {
    let lengths = expected_branch_lengths(cfg.n, &build_lambda_rates(cfg)?)?;
    let phi = normalize(lengths.clone());
    Ok(lengths
        .into_iter()
        .zip(phi)
        .enumerate()
        .map(|(i, (l, p))| ExactRecord {
            i: i + 1,
            expected_length: l,
            phi: p,
        })
        .collect())
}

/// Monte Carlo `c_N` for every population size of the sweep, with
/// `cfg.reps` pair experiments each.
pub fn cn_scaling_report(cfg: &ExperimentConfig) -> Result<Vec<ScalingRecord>> {
    cfg.validate()?;
    if !(cfg.kappa >= 2.0) {
        return Err(Error::domain(format!("kappa must be ≥ 2, got {}", cfg.kappa)));
    }
    let pool = pool(cfg.threads)?;
    let chunks = cfg.reps.div_ceil(PAIR_CHUNK);
    let mut rows = Vec::with_capacity(cfg.pop_sizes.len());
    for &pop in &cfg.pop_sizes {
        let model = build_model(cfg, pop)?;
        let seed = derive_seed(cfg.seed, pop as u64);
        let tallies: Vec<CoalescenceTally> = pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let reps = PAIR_CHUNK.min(cfg.reps - c * PAIR_CHUNK);
                    let mut rng = replicate_rng(seed, c, Purpose::Replicate);
                    tally_pair_coalescences(&model, reps, &mut rng)
                })
                .collect()
        });
        let est = tallies
            .into_iter()
            .fold(CoalescenceTally::default(), CoalescenceTally::merge)
            .estimate();
        rows.push(ScalingRecord {
            pop_size: pop,
            c_hat: est.estimate,
            c_hat_se: est.stderr,
            compensated: population_time_scale(cfg.kappa, pop as u64) * est.estimate,
        });
    }
    Ok(rows)
}

/// Every rate of the configured table, `b` from 2 to `n`.
pub fn rate_records(cfg: &ExperimentConfig) -> Result<Vec<RateRecord>> {
    let mut rows = Vec::new();
    if cfg.model.is_xi() {
        let table = build_xi_rates(cfg)?;
        for b in 2..=cfg.n {
            for (c, rate) in table.configurations(b) {
                rows.push(RateRecord {
                    b,
                    config: c.label(),
                    total_rate: rate,
                });
            }
        }
    } else {
        let table = build_lambda_rates(cfg)?;
        for b in 2..=cfg.n {
            for k in 2..=b {
                rows.push(RateRecord {
                    b,
                    config: k.to_string(),
                    total_rate: table.total_rate(b, k),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Spectrum(Vec<EstimateRecord>),
    Exact(Vec<ExactRecord>),
    Scaling(Vec<ScalingRecord>),
}

impl ExperimentOutput {
    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        match self {
            ExperimentOutput::Spectrum(r) => write_csv(r, path),
            ExperimentOutput::Exact(r) => write_csv(r, path),
            ExperimentOutput::Scaling(r) => write_csv(r, path),
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    Ok(match cfg.kind {
        Kind::Exact => ExperimentOutput::Exact(exact_spectrum(cfg)?),
        Kind::CnScaling => ExperimentOutput::Scaling(cn_scaling_report(cfg)?),
        _ => ExperimentOutput::Spectrum(simulate_spectrum(cfg)?),
    })
}
