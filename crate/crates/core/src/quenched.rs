//! Quenched genealogies: sample trees read off one realised population
//! ancestry.
//!
//! The ancestry grows forwards in time from a founder generation. Level `i`
//! of generation `g ≥ 1` points to the level of its parent in generation
//! `g - 1`. A sample drawn from the newest generation has a complete tree
//! once all its lineages meet within the recorded generations, which is the
//! case exactly when they descend from the same founder.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};

use crate::cannings::CanningsModel;
use crate::error::{Error, Result};
use crate::spectrum::BranchLengthSpectrum;

/// Default limit on the number of recorded generations per replicate.
pub const DEFAULT_MAX_GENERATIONS: u64 = 1_000_000;

/// Bytes of pointer storage per chunk.
const CHUNK_POINTERS: usize = 1 << 20;

/// Above this many potential offspring a family's survivors are drawn from
/// the hypergeometric law directly rather than one offspring at a time.
const DIRECT_SURVIVAL_LIMIT: u64 = 16;

/// Append-only record of parent pointers, stored in fixed-size chunks.
#[derive(Debug, Clone)]
pub struct PopulationAncestry {
    pop_size: usize,
    generations_per_chunk: usize,
    chunks: Vec<Vec<u32>>,
    generations: u64,
    /// Founder level of every individual of the newest generation.
    founders: Vec<u32>,
    x: Vec<u64>,
    next_founders: Vec<u32>,
}

impl PopulationAncestry {
    /// A founder generation only: `A_i(0) = i`.
    pub fn new(pop_size: usize) -> Self {
        Self {
            pop_size,
            generations_per_chunk: (CHUNK_POINTERS / pop_size).max(1),
            chunks: Vec::new(),
            generations: 0,
            founders: (0..pop_size as u32).collect(),
            x: Vec::with_capacity(pop_size),
            next_founders: vec![0; pop_size],
        }
    }

    pub fn pop_size(&self) -> usize {
        self.pop_size
    }

    /// Number of generations recorded after the founders.
    pub fn generations(&self) -> u64 {
        self.generations
    }

    /// Parent levels (in generation `g - 1`) of every level of generation
    /// `g`, for `1 ≤ g ≤ generations()`.
    pub fn parents(&self, g: u64) -> &[u32] {
        assert!(g >= 1 && g <= self.generations, "generation {g} not recorded");
        let idx = (g - 1) as usize;
        let chunk = &self.chunks[idx / self.generations_per_chunk];
        let start = (idx % self.generations_per_chunk) * self.pop_size;
        &chunk[start..start + self.pop_size]
    }

    /// `A_i(g)`.
    pub fn pointer(&self, g: u64, i: usize) -> usize {
        if g == 0 {
            i
        } else {
            self.parents(g)[i] as usize
        }
    }

    pub fn founders(&self) -> &[u32] {
        &self.founders
    }

    fn push_generation(&mut self) -> &mut [u32] {
        let used = (self.generations as usize) % self.generations_per_chunk;
        if used == 0 {
            self.chunks
                .push(Vec::with_capacity(self.generations_per_chunk * self.pop_size));
        }
        let chunk = self.chunks.last_mut().expect("chunk exists");
        let start = chunk.len();
        chunk.resize(start + self.pop_size, 0);
        self.generations += 1;
        &mut chunk[start..]
    }
}

/// Number of survivors of a family of `x` potential offspring when `need`
/// more survivors are still to be picked from the `pool` not yet examined.
fn family_survivors<R: Rng + ?Sized>(x: u64, pool: u64, need: u64, rng: &mut R) -> u64 {
    if need == 0 || x == 0 {
        return 0;
    }
    if need == pool {
        return x;
    }
    if x <= DIRECT_SURVIVAL_LIMIT {
        return sequential_survivors(x, pool, need, rng);
    }
    match Hypergeometric::new(pool, x, need) {
        Ok(h) => h.sample(rng),
        // The library's inverse-transform start underflows for some very
        // skewed parameters; the law is symmetric in `x` and `need`.
        Err(_) => sequential_survivors(x.min(need), pool, x.max(need), rng),
    }
}

/// Hypergeometric draw by examining the `x` family members one at a time.
fn sequential_survivors<R: Rng + ?Sized>(x: u64, mut pool: u64, mut need: u64, rng: &mut R) -> u64 {
    let mut kept = 0;
    for _ in 0..x {
        if rng.random_range(0..pool) < need {
            kept += 1;
            need -= 1;
        }
        pool -= 1;
    }
    kept
}

/// Records one more generation: draws the potential offspring, keeps `N`
/// of them uniformly without replacement, and places the survivors on
/// uniformly shuffled levels. A failed generation records the identity.
pub fn extend_ancestry<R: Rng + ?Sized>(anc: &mut PopulationAncestry, model: &CanningsModel, rng: &mut R) {
    assert_eq!(anc.pop_size, model.pop_size(), "ancestry and model disagree on N");
    let mut x = std::mem::take(&mut anc.x);
    let (_, total) = model.reproduce_one_generation(&mut x, rng);
    let n = anc.pop_size;
    let mut next = std::mem::take(&mut anc.next_founders);
    {
        let founders = anc.founders.clone();
        let ptr = anc.push_generation();
        if total < n as u64 {
            for (i, p) in ptr.iter_mut().enumerate() {
                *p = i as u32;
            }
        } else {
            let mut pool = total;
            let mut need = n as u64;
            let mut filled = 0usize;
            for (parent, &xi) in x.iter().enumerate() {
                if need == 0 {
                    break;
                }
                let kept = family_survivors(xi, pool, need, rng) as usize;
                ptr[filled..filled + kept].fill(parent as u32);
                filled += kept;
                pool -= xi;
                need -= kept as u64;
            }
            debug_assert_eq!(filled, n);
            ptr.shuffle(rng);
        }
        for (j, &p) in ptr.iter().enumerate() {
            next[j] = founders[p as usize];
        }
    }
    std::mem::swap(&mut anc.founders, &mut next);
    anc.next_founders = next;
    anc.x = x;
}

/// A complete sample tree and how it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedTree {
    pub spectrum: BranchLengthSpectrum,
    /// Generations from the sample back to its most recent common ancestor.
    pub height: u64,
    /// Samples drawn, including the discarded incomplete ones.
    pub attempts: u64,
}

/// Draws samples of size `n` from the newest generation, extending the
/// ancestry by one generation after every incomplete sample, and reads the
/// spectrum off the first complete tree.
///
/// `ancestry_rng` drives the population and `sample_rng` the choice of
/// sampled levels, so the ancestry does not depend on the samples drawn.
pub fn sample_quenched_tree<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    anc: &mut PopulationAncestry,
    n: usize,
    model: &CanningsModel,
    max_generations: u64,
    ancestry_rng: &mut R1,
    sample_rng: &mut R2,
) -> Result<QuenchedTree> {
    let pop = anc.pop_size;
    if n < 2 || n > pop {
        return Err(Error::domain(format!("sample size {n} must lie in [2, N = {pop}]")));
    }
    let mut attempts = 0u64;
    let levels = loop {
        attempts += 1;
        let picks = rand::seq::index::sample(sample_rng, pop, n).into_vec();
        let first = anc.founders[picks[0]];
        if picks.iter().all(|&l| anc.founders[l] == first) {
            break picks;
        }
        if anc.generations >= max_generations {
            return Err(Error::GenerationCap { cap: max_generations });
        }
        extend_ancestry(anc, model, ancestry_rng);
    };
    let (spectrum, height) = trace_tree(anc, &levels);
    Ok(QuenchedTree {
        spectrum,
        height,
        attempts,
    })
}

/// Follows the sampled levels of the newest generation back to their
/// common ancestor, one generation of length per block per step.
pub fn trace_tree(anc: &PopulationAncestry, levels: &[usize]) -> (BranchLengthSpectrum, u64) {
    let n = levels.len();
    let mut spectrum = BranchLengthSpectrum::zeros(n);
    let mut blocks: Vec<(u32, usize)> = levels.iter().map(|&l| (l as u32, 1)).collect();
    let mut sizes = Vec::with_capacity(n);
    let mut g = anc.generations;
    let mut height = 0;
    while blocks.len() > 1 {
        assert!(g >= 1, "sample lineages do not meet within the recorded ancestry");
        sizes.clear();
        sizes.extend(blocks.iter().map(|b| b.1));
        spectrum.accrue(&sizes, 1.0);
        let parents = anc.parents(g);
        for b in blocks.iter_mut() {
            b.0 = parents[b.0 as usize];
        }
        blocks.sort_unstable_by_key(|b| b.0);
        blocks.dedup_by(|later, kept| {
            if later.0 == kept.0 {
                kept.1 += later.1;
                true
            } else {
                false
            }
        });
        g -= 1;
        height += 1;
    }
    (spectrum, height)
}
