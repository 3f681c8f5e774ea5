//! Continuous-time simulation of Λ- and Ξ-coalescents, optionally under a
//! deterministic time change `G`.
//!
//! Under a time change the jump chain is unchanged; only the holding times
//! are transformed. Given current time `τ` and total rate `λ`, the holding
//! time `t` solves `λ (G(τ + t) - G(τ)) = -log(1 - U)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::rates::{LambdaRateTable, PaintboxRates, XiRateTable};
use crate::spectrum::BranchLengthSpectrum;

/// The clock transform `G`.
#[derive(Clone)]
pub enum TimeChange {
    /// `G(t) = t`.
    Identity,
    /// `G(t) = (e^{ρt} - 1)/ρ`, and `G(t) = t` when `ρ = 0`.
    Exponential { rho: f64 },
    /// Any continuous, strictly increasing `G` with `G(0) = 0`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for TimeChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeChange::Identity => write!(f, "Identity"),
            TimeChange::Exponential { rho } => write!(f, "Exponential {{ rho: {rho} }}"),
            TimeChange::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl TimeChange {
    pub fn exponential(rho: f64) -> Self {
        assert!(rho >= 0.0 && rho.is_finite(), "rho must be a finite nonnegative number");
        if rho == 0.0 {
            TimeChange::Identity
        } else {
            TimeChange::Exponential { rho }
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        match self {
            TimeChange::Identity => t,
            TimeChange::Exponential { rho } => (rho * t).exp_m1() / rho,
            TimeChange::Custom(g) => g(t),
        }
    }

    /// `G(τ + t) - G(τ)`.
    pub fn increment(&self, tau: f64, t: f64) -> f64 {
        match self {
            TimeChange::Identity => t,
            TimeChange::Exponential { rho } => (rho * tau).exp() * (rho * t).exp_m1() / rho,
            TimeChange::Custom(g) => g(tau + t) - g(tau),
        }
    }
}

/// Holding time from a state with total rate `lambda` entered at time `tau`,
/// by inversion of the uniform `u ∈ [0, 1)`.
pub fn sample_holding_time(lambda: f64, tau: f64, tc: &TimeChange, u: f64) -> f64 {
    let target = -(-u).ln_1p() / lambda;
    match tc {
        TimeChange::Identity => target,
        TimeChange::Exponential { rho } => (target * rho * (-rho * tau).exp()).ln_1p() / rho,
        TimeChange::Custom(_) => invert_increment(tc, tau, target),
    }
}

/// Solves `G(τ + t) - G(τ) = target` for `t` by bracketing and bisection.
fn invert_increment(tc: &TimeChange, tau: f64, target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let mut hi = target.max(f64::MIN_POSITIVE);
    while tc.increment(tau, hi) < target {
        hi *= 2.0;
        assert!(hi.is_finite(), "time change is bounded below the required increment");
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tc.increment(tau, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// One holding-time draw, reported to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldingDraw {
    pub blocks: usize,
    pub rate: f64,
    pub tau: f64,
    pub u: f64,
    pub t: f64,
}

impl HoldingDraw {
    /// `|λ (G(τ+t) - G(τ)) + log(1 - U)|`, relative to `max(1, -log(1-U))`.
    pub fn inversion_error(&self, tc: &TimeChange) -> f64 {
        let e = -(-self.u).ln_1p();
        (self.rate * tc.increment(self.tau, self.t) - e).abs() / e.max(1.0)
    }
}

/// Removes `k` uniformly chosen blocks and returns the size of their union.
fn merge_random<R: Rng + ?Sized>(blocks: &mut Vec<usize>, k: usize, rng: &mut R) -> usize {
    let mut merged = 0;
    for _ in 0..k {
        let i = rng.random_range(0..blocks.len());
        merged += blocks.swap_remove(i);
    }
    merged
}

fn draw_holding<R: Rng + ?Sized>(
    blocks: usize,
    rate: f64,
    tau: f64,
    tc: &TimeChange,
    rng: &mut R,
    observe: &mut impl FnMut(&HoldingDraw),
) -> f64 {
    let u: f64 = rng.random();
    let t = sample_holding_time(rate, tau, tc, u);
    let draw = HoldingDraw {
        blocks,
        rate,
        tau,
        u,
        t,
    };
    debug_assert!(draw.inversion_error(tc) < 1e-10, "inversion failed: {draw:?}");
    observe(&draw);
    t
}

/// Λ-coalescent spectrum started from `n` singletons.
pub fn simulate_lambda<R: Rng + ?Sized>(
    n: usize,
    rates: &LambdaRateTable,
    tc: &TimeChange,
    rng: &mut R,
) -> BranchLengthSpectrum {
    simulate_lambda_observed(n, rates, tc, rng, &mut |_| {})
}

/// As [`simulate_lambda`], reporting every holding-time draw to `observe`.
pub fn simulate_lambda_observed<R: Rng + ?Sized>(
    n: usize,
    rates: &LambdaRateTable,
    tc: &TimeChange,
    rng: &mut R,
    observe: &mut impl FnMut(&HoldingDraw),
) -> BranchLengthSpectrum {
    assert!(n >= 2 && n <= rates.n(), "sample size {n} outside the rate table");
    let mut spectrum = BranchLengthSpectrum::zeros(n);
    let mut blocks = vec![1usize; n];
    let mut tau = 0.0;
    while blocks.len() > 1 {
        let b = blocks.len();
        let t = draw_holding(b, rates.event_rate(b), tau, tc, rng, observe);
        spectrum.accrue(&blocks, t);
        tau += t;
        let k = rates.sample_merger_size(b, rng.random());
        let merged = merge_random(&mut blocks, k, rng);
        blocks.push(merged);
    }
    spectrum
}

/// Ξ-coalescent spectrum started from `n` singletons.
/// Jump chain of a Ξ-coalescent: the event rate at `b` blocks and a draw of
/// the merging group sizes.
pub trait MergerSampler {
    fn n(&self) -> usize;
    fn event_rate(&self, b: usize) -> f64;
    fn sample_groups<R: Rng + ?Sized>(&self, b: usize, rng: &mut R, groups: &mut Vec<usize>);
}

impl MergerSampler for XiRateTable {
    fn n(&self) -> usize {
        XiRateTable::n(self)
    }

    fn event_rate(&self, b: usize) -> f64 {
        XiRateTable::event_rate(self, b)
    }

    fn sample_groups<R: Rng + ?Sized>(&self, b: usize, rng: &mut R, groups: &mut Vec<usize>) {
        groups.clear();
        groups.extend(self.sample_configuration(b, rng.random()).iter().map(|&k| k as usize));
    }
}

impl MergerSampler for PaintboxRates {
    fn n(&self) -> usize {
        PaintboxRates::n(self)
    }

    fn event_rate(&self, b: usize) -> f64 {
        PaintboxRates::event_rate(self, b)
    }

    fn sample_groups<R: Rng + ?Sized>(&self, b: usize, rng: &mut R, groups: &mut Vec<usize>) {
        PaintboxRates::sample_groups(self, b, rng, groups)
    }
}

pub fn simulate_xi<S: MergerSampler + ?Sized, R: Rng + ?Sized>(
    n: usize,
    rates: &S,
    tc: &TimeChange,
    rng: &mut R,
) -> BranchLengthSpectrum {
    simulate_xi_observed(n, rates, tc, rng, &mut |_| {})
}

pub fn simulate_xi_observed<S: MergerSampler + ?Sized, R: Rng + ?Sized>(
    n: usize,
    rates: &S,
    tc: &TimeChange,
    rng: &mut R,
    observe: &mut impl FnMut(&HoldingDraw),
) -> BranchLengthSpectrum {
    assert!(n >= 2 && n <= rates.n(), "sample size {n} outside the rate table");
    let mut spectrum = BranchLengthSpectrum::zeros(n);
    let mut blocks = vec![1usize; n];
    let mut merged = Vec::with_capacity(n / 2);
    let mut groups = Vec::with_capacity(n / 2);
    let mut tau = 0.0;
    while blocks.len() > 1 {
        let b = blocks.len();
        let t = draw_holding(b, rates.event_rate(b), tau, tc, rng, observe);
        spectrum.accrue(&blocks, t);
        tau += t;
        rates.sample_groups(b, rng, &mut groups);
        merged.clear();
        for &k in &groups {
            merged.push(merge_random(&mut blocks, k, rng));
        }
        blocks.extend_from_slice(&merged);
    }
    spectrum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{delta0_pd_rates, kingman_rates, Delta0PdParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn holding_time_by_hand() {
        let tc = TimeChange::exponential(1.0);
        let u = 1.0 - (-1.0f64).exp();
        assert!((sample_holding_time(1.0, 0.0, &tc, u) - 2f64.ln()).abs() < 1e-14);
        assert!(sample_holding_time(1.0, 0.0, &tc, 1e-300) < 1e-250);
        assert!(
            (sample_holding_time(2.0, 5.0, &TimeChange::Identity, u) - 0.5).abs() < 1e-15
        );
    }

    #[test]
    fn small_rho_approaches_identity() {
        let slow = TimeChange::exponential(1e-8);
        for &t in &[0.0, 0.1, 1.0, 3.0] {
            assert!((slow.g(t) - TimeChange::Identity.g(t)).abs() < 1e-6);
        }
        assert!(matches!(TimeChange::exponential(0.0), TimeChange::Identity));
    }

    #[test]
    fn custom_time_change_inverts() {
        let rho = 2.0;
        let custom = TimeChange::Custom(Arc::new(move |t: f64| (rho * t).exp_m1() / rho));
        let exact = TimeChange::exponential(rho);
        for &(lambda, tau, u) in &[(1.0, 0.0, 0.3), (10.0, 0.7, 0.99), (45.0, 1.2, 0.01)] {
            let a = sample_holding_time(lambda, tau, &custom, u);
            let b = sample_holding_time(lambda, tau, &exact, u);
            // G(τ+t) - G(τ) loses digits to cancellation when t ≪ τ.
            assert!((a - b).abs() < 1e-9 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn two_lineages_total_length() {
        let rates = kingman_rates(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let reps = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..reps {
            let s = simulate_lambda(2, &rates, &TimeChange::Identity, &mut rng);
            assert_eq!(s.relative(), vec![1.0]);
            sum += s.total();
            sq += s.total() * s.total();
        }
        let mean = sum / reps as f64;
        let se = ((sq / reps as f64 - mean * mean) / reps as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn star_table_gives_star_tree() {
        let rates = LambdaRateTable::from_totals(10, |b, k| if k == b { 1e12 } else { 1.0 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut r1 = 0.0;
        for _ in 0..100 {
            r1 += simulate_lambda(10, &rates, &TimeChange::Identity, &mut rng).relative()[0];
        }
        assert!(r1 / 100.0 > 0.999);
    }

    #[test]
    fn spectra_sum_to_one_and_are_seeded() {
        let rates = delta0_pd_rates(12, &Delta0PdParams::new(0.4, 2.0, 5.0)).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            simulate_xi(12, &rates, &TimeChange::exponential(1.0), &mut rng)
        };
        assert_eq!(run(3), run(3));
        for seed in 0..200 {
            let s = run(seed);
            let total: f64 = s.relative().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(s.lengths.iter().all(|&l| l >= 0.0));
        }
    }

    #[test]
    fn pd_small_alpha_large_c_favours_big_mergers() {
        let rates = delta0_pd_rates(20, &Delta0PdParams::new(0.01, 2.0, 1000.0)).unwrap();
        let top = rates
            .configurations(20)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert_eq!(top.parts, vec![20]);
    }

    #[test]
    fn holding_survival_matches_time_change() {
        // P(T > t) = exp(-λ (G(τ+t) - G(τ))); compare at a few quantiles
        let tc = TimeChange::exponential(2.0);
        let (lambda, tau) = (3.0, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_holding_time(lambda, tau, &tc, rng.random()))
            .collect();
        for &t in &[0.01, 0.05, 0.1, 0.2] {
            let want = (-lambda * tc.increment(tau, t)).exp();
            let got = draws.iter().filter(|&&d| d > t).count() as f64 / draws.len() as f64;
            let se = (want * (1.0 - want) / draws.len() as f64).sqrt();
            assert!((got - want).abs() < 4.0 * se, "t={t}: {got} vs {want}");
        }
    }
}
