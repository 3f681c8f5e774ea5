//! The haploid Cannings model with potential offspring, and its annealed
//! ancestral process.
//!
//! Each generation every individual produces a random number of potential
//! offspring; if there are at least `N` of them, `N` are sampled uniformly
//! without replacement to form the next generation, otherwise the
//! population is left unchanged. Tracing a sample backwards, the current
//! blocks are a uniform subset of the survivors, so the parents they pick
//! follow a multivariate hypergeometric law given the family sizes.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::offspring::{EnvironmentModel, GenerationLaws, OffspringSampler};
use crate::spectrum::BranchLengthSpectrum;

/// A population of constant size reproducing in a random environment.
#[derive(Debug, Clone)]
pub struct CanningsModel {
    env: EnvironmentModel,
    pop_size: usize,
    favorable: OffspringSampler,
    normal: OffspringSampler,
}

impl CanningsModel {
    pub fn new(env: EnvironmentModel, pop_size: usize) -> Result<Self> {
        if pop_size < 2 {
            return Err(Error::domain("population size must be at least 2"));
        }
        if pop_size > 1 << 23 {
            return Err(Error::domain("population size above 2^23 is not supported"));
        }
        Ok(Self {
            favorable: OffspringSampler::new(env.favorable()),
            normal: OffspringSampler::new(env.normal()),
            env,
            pop_size,
        })
    }

    pub fn env(&self) -> &EnvironmentModel {
        &self.env
    }

    pub fn pop_size(&self) -> usize {
        self.pop_size
    }

    /// Draws the potential-offspring counts of one generation into `x`
    /// and returns the environment together with `S_N = Σ x_i`.
    pub fn reproduce_one_generation<R: Rng + ?Sized>(
        &self,
        x: &mut Vec<u64>,
        rng: &mut R,
    ) -> (GenerationLaws, u64) {
        let laws = self.env.draw_generation_laws(self.pop_size, rng);
        x.clear();
        let sampler = match laws {
            GenerationLaws::AllFavorable => &self.favorable,
            _ => &self.normal,
        };
        let mut total = 0u64;
        for _ in 0..self.pop_size {
            let v = sampler.sample(rng);
            total += v;
            x.push(v);
        }
        if let GenerationLaws::OneFavorable(i) = laws {
            total -= x[i];
            x[i] = self.favorable.sample(rng);
            total += x[i];
        }
        (laws, total)
    }
}

/// Parents of the blocks in one generation, as a nondecreasing list with
/// one entry per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyAssignment {
    parents: Vec<usize>,
}

impl FamilyAssignment {
    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    /// `(parent, number of blocks)` for every parent receiving a block.
    pub fn counts(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &p in &self.parents {
            match out.last_mut() {
                Some((q, c)) if *q == p => *c += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// Block counts `b_1, …, b_N`.
    pub fn dense(&self, pop_size: usize) -> Vec<usize> {
        let mut b = vec![0; pop_size];
        for &p in &self.parents {
            b[p] += 1;
        }
        b
    }
}

/// Draws `m` distinct positions uniformly from `0..total` into `out`,
/// sorted increasingly.
fn sorted_distinct_positions<R: Rng + ?Sized>(m: usize, total: u64, out: &mut Vec<u64>, rng: &mut R) {
    out.clear();
    if 4 * m as u64 > total {
        let picks = rand::seq::index::sample(rng, total as usize, m);
        out.extend(picks.iter().map(|i| i as u64));
        out.sort_unstable();
        return;
    }
    while out.len() < m {
        let v = rng.random_range(0..total);
        if let Err(pos) = out.binary_search(&v) {
            out.insert(pos, v);
        }
    }
}

/// Finds the parent of each sorted position, stopping at the last one.
fn parents_of_positions(x: &[u64], positions: &[u64], parents: &mut Vec<usize>) {
    parents.clear();
    let mut upper = 0u64;
    let mut parent = 0usize;
    for &pos in positions {
        while pos >= upper + x[parent] {
            upper += x[parent];
            parent += 1;
        }
        parents.push(parent);
    }
}

/// Multivariate hypergeometric assignment of `m` blocks to families of
/// potential-offspring sizes `x` with `total = Σ x_i`. Returns `None` for a
/// failed generation (`total < N`).
pub fn assign_blocks_to_families<R: Rng + ?Sized>(
    m: usize,
    x: &[u64],
    total: u64,
    rng: &mut R,
) -> Option<FamilyAssignment> {
    debug_assert_eq!(x.iter().sum::<u64>(), total);
    if total < x.len() as u64 {
        return None;
    }
    assert!(m as u64 <= total, "more blocks than potential offspring");
    let mut positions = Vec::with_capacity(m);
    sorted_distinct_positions(m, total, &mut positions, rng);
    let mut parents = Vec::with_capacity(m);
    parents_of_positions(x, &positions, &mut parents);
    Some(FamilyAssignment { parents })
}

/// Block sizes of the current sample genealogy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartitionState {
    sizes: Vec<usize>,
    n: usize,
}

impl BlockPartitionState {
    pub fn singletons(n: usize) -> Self {
        Self {
            sizes: vec![1; n],
            n,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn block_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }
}

/// Scratch buffers reused across generations.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    x: Vec<u64>,
    positions: Vec<u64>,
    parents: Vec<usize>,
    merged: Vec<usize>,
}

/// What one ancestral step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// `S_N < N`; the blocks were left unchanged.
    Failed,
    /// Number of mergers that happened (zero if all parents were distinct).
    Merged(usize),
}

/// One generation back in time: accrues a generation of length to every
/// block, draws the generation, and merges blocks with a common parent.
pub fn ancestral_step<R: Rng + ?Sized>(
    state: &mut BlockPartitionState,
    spectrum: &mut BranchLengthSpectrum,
    model: &CanningsModel,
    ws: &mut Workspace,
    rng: &mut R,
) -> StepOutcome {
    spectrum.accrue(&state.sizes, 1.0);
    let (_, total) = model.reproduce_one_generation(&mut ws.x, rng);
    if total < model.pop_size as u64 {
        return StepOutcome::Failed;
    }
    let m = state.sizes.len();
    sorted_distinct_positions(m, total, &mut ws.positions, rng);
    parents_of_positions(&ws.x, &ws.positions, &mut ws.parents);
    // blocks are matched to the sorted positions in uniformly random order
    state.sizes.shuffle(rng);
    ws.merged.clear();
    let mut mergers = 0;
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        let mut size = state.sizes[i];
        while j < m && ws.parents[j] == ws.parents[i] {
            size += state.sizes[j];
            j += 1;
        }
        if j - i > 1 {
            mergers += 1;
        }
        ws.merged.push(size);
        i = j;
    }
    std::mem::swap(&mut state.sizes, &mut ws.merged);
    StepOutcome::Merged(mergers)
}

/// Runs the annealed ancestral process of a sample of size `n` to its most
/// recent common ancestor. Lengths are in generations.
pub fn simulate_annealed<R: Rng + ?Sized>(
    n: usize,
    model: &CanningsModel,
    max_generations: u64,
    rng: &mut R,
) -> Result<BranchLengthSpectrum> {
    if n < 2 || n > model.pop_size {
        return Err(Error::domain(format!(
            "sample size {n} must lie in [2, N = {}]",
            model.pop_size
        )));
    }
    let mut state = BlockPartitionState::singletons(n);
    let mut spectrum = BranchLengthSpectrum::zeros(n);
    let mut ws = Workspace::default();
    let mut generations = 0u64;
    while state.block_count() > 1 {
        if generations == max_generations {
            return Err(Error::GenerationCap { cap: max_generations });
        }
        ancestral_step(&mut state, &mut spectrum, model, &mut ws, rng);
        generations += 1;
    }
    Ok(spectrum)
}

/// Probability that two given individuals of one generation share a parent,
/// given the potential-offspring counts: `Σ x_i(x_i - 1) / (S(S - 1))`, and
/// zero in a failed generation.
pub fn pair_coalescence_given_counts(x: &[u64], total: u64) -> f64 {
    if total < x.len() as u64 || total < 2 {
        return 0.0;
    }
    let pairs: f64 = x
        .iter()
        .filter(|&&v| v > 1)
        .map(|&v| v as f64 * (v - 1) as f64)
        .sum();
    pairs / (total as f64 * (total - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoalescenceEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: u64,
}

/// Counts, over `reps` independent generations, how often two fixed
/// individuals share a parent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoalescenceTally {
    pub hits: u64,
    pub reps: u64,
}

impl CoalescenceTally {
    pub fn merge(self, other: Self) -> Self {
        Self {
            hits: self.hits + other.hits,
            reps: self.reps + other.reps,
        }
    }

    /// Fraction of hits with its binomial standard error.
    pub fn estimate(self) -> CoalescenceEstimate {
        let p = self.hits as f64 / self.reps as f64;
        CoalescenceEstimate {
            estimate: p,
            stderr: (p * (1.0 - p) / self.reps as f64).sqrt(),
            reps: self.reps,
        }
    }
}

/// Runs `reps` pair experiments. Each draws a generation and then decides
/// whether the pair coalesces with its exact conditional probability.
pub fn tally_pair_coalescences<R: Rng + ?Sized>(
    model: &CanningsModel,
    reps: u64,
    rng: &mut R,
) -> CoalescenceTally {
    let mut x = Vec::with_capacity(model.pop_size);
    let mut hits = 0;
    for _ in 0..reps {
        let (_, total) = model.reproduce_one_generation(&mut x, rng);
        let q = pair_coalescence_given_counts(&x, total);
        if q > 0.0 && rng.random::<f64>() < q {
            hits += 1;
        }
    }
    CoalescenceTally { hits, reps }
}

/// Monte Carlo estimate of the coalescence probability `c_N`.
pub fn estimate_coalescence_probability<R: Rng + ?Sized>(
    model: &CanningsModel,
    reps: u64,
    rng: &mut R,
) -> CoalescenceEstimate {
    tally_pair_coalescences(model, reps, rng).estimate()
}
