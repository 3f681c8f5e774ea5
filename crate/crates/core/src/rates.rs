//! Transition-rate tables of the limiting coalescents.
//!
//! Tables hold total rates: the rate at which *some* merger of the given
//! shape happens among `b` blocks. Per-group rates are recovered by dividing
//! out the number of ways to choose the merging groups.

use rand::Rng;

use crate::error::{Error, Result};
use crate::offspring::{mean_approx, mean_approx_unchecked};
use crate::partitions::for_each_merger_configuration;
use crate::special::{beta, binomial, falling_factorial, incomplete_beta, ln_factorial};

/// Largest sample size for which a Ξ table is enumerated. The number of
/// configurations at `b` blocks is the partition number `p(b)`.
pub const XI_TABLE_CAP: usize = 60;

/// Total rates `λ_{b,k}` of a Λ-coalescent for `2 ≤ k ≤ b ≤ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRateTable {
    n: usize,
    /// `totals[b][k]`, zero for `k < 2`.
    totals: Vec<Vec<f64>>,
    /// `cumulative[b][k] = Σ_{j ≤ k} totals[b][j]`.
    cumulative: Vec<Vec<f64>>,
}

impl LambdaRateTable {
    /// Builds a table from a function giving the total rate of a `k`-merger
    /// among `b` blocks.
    pub fn from_totals(n: usize, mut total: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("rate tables need n ≥ 2"));
        }
        let mut totals = vec![Vec::new(); n + 1];
        let mut cumulative = vec![Vec::new(); n + 1];
        for b in 2..=n {
            let mut row = vec![0.0; b + 1];
            let mut cum = vec![0.0; b + 1];
            let mut acc = 0.0;
            for k in 2..=b {
                let r = total(b, k);
                if !(r >= 0.0) || !r.is_finite() {
                    return Err(Error::domain(format!("rate for b={b}, k={k} is {r}")));
                }
                row[k] = r;
                acc += r;
                cum[k] = acc;
            }
            if !(acc > 0.0) {
                return Err(Error::domain(format!("no mergers possible with {b} blocks")));
            }
            totals[b] = row;
            cumulative[b] = cum;
        }
        Ok(Self {
            n,
            totals,
            cumulative,
        })
    }

    /// Builds a table from per-group rates, multiplying by `C(b, k)`.
    pub fn from_per_group(n: usize, mut per_group: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_totals(n, |b, k| binomial(b as u64, k as u64) * per_group(b, k))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_rate(&self, b: usize, k: usize) -> f64 {
        if b < 2 || b > self.n || k < 2 || k > b {
            return 0.0;
        }
        self.totals[b][k]
    }

    /// Rate at which one specific group of `k` of the `b` blocks merges.
    pub fn per_group_rate(&self, b: usize, k: usize) -> f64 {
        self.total_rate(b, k) / binomial(b as u64, k as u64)
    }

    /// Total rate of leaving a state with `b` blocks.
    pub fn event_rate(&self, b: usize) -> f64 {
        if b < 2 || b > self.n {
            return 0.0;
        }
        self.cumulative[b][b]
    }

    /// Merger size for a uniform `u ∈ [0, 1)`, with `P(k) ∝ λ_{b,k}`.
    pub fn sample_merger_size(&self, b: usize, u: f64) -> usize {
        let cum = &self.cumulative[b];
        let target = u * cum[b];
        let idx = cum[2..=b].partition_point(|&c| c <= target);
        // rounding can leave the target at the top; fall back to the
        // largest size with positive rate
        let mut k = (idx + 2).min(b);
        while self.totals[b][k] == 0.0 && k > 2 {
            k -= 1;
        }
        k
    }
}

/// Kingman coalescent: only pairs merge, each at rate one.
pub fn kingman_rates(n: usize) -> Result<LambdaRateTable> {
    LambdaRateTable::from_totals(n, |b, k| {
        if k == 2 {
            binomial(b as u64, 2)
        } else {
            0.0
        }
    })
}

/// `C_κ = (2/m²)(1{κ=2} + 1{κ>2} c_κ / (2^κ (κ-2)(κ-1)))`, with
/// `m = mean_approx(κ)`. `c_kappa` defaults to `(κ + 2 + κ²)/2`, the
/// midpoint of the interval `(κ+2, κ²)` that contains it.
pub fn kingman_coefficient(kappa: f64, c_kappa: Option<f64>) -> Result<f64> {
    let m = mean_approx(kappa)?;
    let base = 2.0 / (m * m);
    if kappa == 2.0 {
        return Ok(base);
    }
    let ck = c_kappa.unwrap_or((kappa + 2.0 + kappa * kappa) / 2.0);
    if !(ck > 0.0) {
        return Err(Error::domain(format!("c_kappa must be positive, got {ck}")));
    }
    Ok(base * ck / (2f64.powf(kappa) * (kappa - 2.0) * (kappa - 1.0)))
}

/// `γ = K/(m + K)` when `ζ(N)/N → K`, and `γ = 1` when `ζ(N)/N → ∞`
/// (`ratio = None`).
pub fn gamma_from_zeta_ratio(ratio: Option<f64>, m: f64) -> f64 {
    match ratio {
        Some(k) => k / (m + k),
        None => 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta0BetaParams {
    pub alpha: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub c: f64,
    pub c_kappa: Option<f64>,
}

impl Delta0BetaParams {
    pub fn new(alpha: f64, gamma: f64, kappa: f64, c: f64) -> Self {
        Self {
            alpha,
            gamma,
            kappa,
            c,
            c_kappa: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::domain(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::domain(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }
}

/// δ₀-Beta(γ, 2-α, α) coalescent, normalized so that `λ_{2,2} = 1`:
/// `λ_{b,k} = C(b,k) (C_κ 1{k=2} + (αc/m^α) B(γ, k-α, b-k+α)) / C_{κ,α,γ}`.
pub fn delta0_beta_rates(n: usize, params: &Delta0BetaParams) -> Result<LambdaRateTable> {
    params.validate()?;
    let Delta0BetaParams {
        alpha,
        gamma,
        kappa,
        c,
        c_kappa,
    } = *params;
    let m = mean_approx(kappa)?;
    let kingman = kingman_coefficient(kappa, c_kappa)?;
    let weight = alpha * c / m.powf(alpha);
    let normalizer = kingman + weight * incomplete_beta(gamma, 2.0 - alpha, alpha)?;
    let mut failure = None;
    let table = LambdaRateTable::from_totals(n, |b, k| {
        let shape_b = (b - k) as f64 + alpha;
        let part = match incomplete_beta(gamma, k as f64 - alpha, shape_b) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let pair = if k == 2 { kingman } else { 0.0 };
        binomial(b as u64, k as u64) * (pair + weight * part) / normalizer
    });
    match failure {
        Some(e) => Err(e),
        None => table,
    }
}

/// A simultaneous-merger shape among `b` blocks: groups of sizes
/// `k_1 ≤ ⋯ ≤ k_r` merge, the remaining `s = b - Σ k_i` blocks do not.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MergerConfiguration {
    pub b: usize,
    pub parts: Vec<usize>,
}

impl MergerConfiguration {
    pub fn new(b: usize, mut parts: Vec<usize>) -> Result<Self> {
        parts.sort_unstable();
        if parts.is_empty() || parts[0] < 2 || parts.iter().sum::<usize>() > b {
            return Err(Error::domain(format!(
                "invalid merger configuration {parts:?} for {b} blocks"
            )));
        }
        Ok(Self { b, parts })
    }

    pub fn r(&self) -> usize {
        self.parts.len()
    }

    pub fn s(&self) -> usize {
        self.b - self.parts.iter().sum::<usize>()
    }

    /// `"2+3"` style label.
    pub fn label(&self) -> String {
        label(&self.parts)
    }
}

fn label<T: ToString>(parts: &[T]) -> String {
    parts.iter().map(ToString::to_string).collect::<Vec<_>>().join("+")
}

/// Probability that a given set of groups of sizes `k_1, …, k_r` merges,
/// with the other `s` blocks untouched, under Poisson–Dirichlet(α, 0):
/// `α^{r+s-1} (r+s-1)!/(b-1)! Π (k_i - 1 - α)_{k_i - 1}`.
pub fn pd_transition_probability(cfg: &MergerConfiguration, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let r = cfg.r();
    let s = cfg.s();
    let mut p = alpha.powi((r + s - 1) as i32) * (ln_factorial((r + s - 1) as u64)
        - ln_factorial(cfg.b as u64 - 1))
    .exp();
    for &k in &cfg.parts {
        p *= falling_factorial(k as f64 - 1.0 - alpha, k as u32 - 1);
    }
    Ok(p)
}

/// Log-space ingredients for the PD weights and their multiplicities.
struct PdTerms {
    ln_alpha: f64,
    /// `ln Π_{i=1}^{k-1} (i - α)`.
    ln_rising: Vec<f64>,
    ln_fact: Vec<f64>,
}

impl PdTerms {
    fn new(n: usize, alpha: f64) -> Self {
        let mut ln_rising = vec![0.0; n + 1];
        for k in 2..=n {
            ln_rising[k] = ln_rising[k - 1] + ((k - 1) as f64 - alpha).ln();
        }
        Self {
            ln_alpha: alpha.ln(),
            ln_rising,
            ln_fact: (0..=n as u64).map(ln_factorial).collect(),
        }
    }

    fn ln_probability(&self, b: usize, parts: &[usize], s: usize) -> f64 {
        let j = parts.len() + s - 1;
        let mut v = j as f64 * self.ln_alpha + self.ln_fact[j] - self.ln_fact[b - 1];
        for &k in parts {
            v += self.ln_rising[k];
        }
        v
    }

    /// `ln( b!/(Π k_i! s!) / Π_j (#{i: k_i = j})! )`: the number of ways to
    /// pick the groups.
    fn ln_multiplicity(&self, b: usize, parts: &[usize], s: usize) -> f64 {
        let mut v = self.ln_fact[b] - self.ln_fact[s];
        let mut run = 0usize;
        for (i, &k) in parts.iter().enumerate() {
            v -= self.ln_fact[k];
            run += 1;
            if i + 1 == parts.len() || parts[i + 1] != k {
                v -= self.ln_fact[run];
                run = 0;
            }
        }
        v
    }
}

/// Configurations available to one block count, with their total rates.
#[derive(Debug, Clone, PartialEq)]
struct XiLevel {
    parts: Vec<u8>,
    offsets: Vec<u32>,
    /// Total rates in enumeration order.
    rates: Vec<f64>,
    /// Configuration indices by decreasing rate.
    order: Vec<u32>,
    /// Running sums of `rates` taken in `order`.
    cumulative: Vec<f64>,
}

impl XiLevel {
    fn parts(&self, idx: usize) -> &[u8] {
        &self.parts[self.offsets[idx] as usize..self.offsets[idx + 1] as usize]
    }
}

/// Total rates of every simultaneous-merger configuration of a
/// Ξ-coalescent, for `2 ≤ b ≤ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiRateTable {
    n: usize,
    levels: Vec<XiLevel>,
}

impl XiRateTable {
    /// `rate(b, parts, s)` returns the total rate of the configuration.
    fn build(n: usize, mut rate: impl FnMut(usize, &[usize], usize) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("rate tables need n ≥ 2"));
        }
        if n > XI_TABLE_CAP {
            return Err(Error::CapExceeded { n, cap: XI_TABLE_CAP });
        }
        let mut levels = Vec::with_capacity(n + 1);
        levels.resize_with(2, || XiLevel {
            parts: Vec::new(),
            offsets: vec![0],
            rates: Vec::new(),
            order: Vec::new(),
            cumulative: Vec::new(),
        });
        for b in 2..=n {
            let mut parts = Vec::new();
            let mut offsets = vec![0u32];
            let mut rates = Vec::new();
            let mut bad = None;
            for_each_merger_configuration(b, |p| {
                let s = b - p.iter().sum::<usize>();
                let r = rate(b, p, s);
                if !(r >= 0.0) || !r.is_finite() {
                    bad.get_or_insert((label(p), r));
                }
                parts.extend(p.iter().map(|&k| k as u8));
                offsets.push(parts.len() as u32);
                rates.push(r);
            });
            if let Some((cfg, r)) = bad {
                return Err(Error::domain(format!("rate of {cfg} at b={b} is {r}")));
            }
            let mut order: Vec<u32> = (0..rates.len() as u32).collect();
            order.sort_by(|&i, &j| rates[j as usize].total_cmp(&rates[i as usize]).then(i.cmp(&j)));
            let mut acc = 0.0;
            let cumulative = order
                .iter()
                .map(|&i| {
                    acc += rates[i as usize];
                    acc
                })
                .collect::<Vec<_>>();
            if !(acc > 0.0) {
                return Err(Error::domain(format!("no mergers possible with {b} blocks")));
            }
            levels.push(XiLevel {
                parts,
                offsets,
                rates,
                order,
                cumulative,
            });
        }
        Ok(Self { n, levels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total rate of leaving a state with `b` blocks.
    pub fn event_rate(&self, b: usize) -> f64 {
        self.levels[b].cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn configuration_count(&self, b: usize) -> usize {
        self.levels[b].rates.len()
    }

    /// Configurations at `b` blocks in enumeration order with their rates.
    pub fn configurations(&self, b: usize) -> impl Iterator<Item = (MergerConfiguration, f64)> + '_ {
        let level = &self.levels[b];
        (0..level.rates.len()).map(move |i| {
            let parts = level.parts(i).iter().map(|&k| k as usize).collect();
            (MergerConfiguration { b, parts }, level.rates[i])
        })
    }

    /// Total rate of one configuration; zero if it is not listed.
    pub fn rate(&self, cfg: &MergerConfiguration) -> f64 {
        if cfg.b < 2 || cfg.b > self.n {
            return 0.0;
        }
        let level = &self.levels[cfg.b];
        (0..level.rates.len())
            .find(|&i| level.parts(i).iter().map(|&k| k as usize).eq(cfg.parts.iter().copied()))
            .map_or(0.0, |i| level.rates[i])
    }

    /// Group sizes of a configuration drawn with probability proportional
    /// to its rate, for a uniform `u ∈ [0, 1)`.
    pub fn sample_configuration(&self, b: usize, u: f64) -> &[u8] {
        let level = &self.levels[b];
        let target = u * level.cumulative[level.cumulative.len() - 1];
        let mut pos = level.cumulative.partition_point(|&c| c <= target);
        pos = pos.min(level.order.len() - 1);
        while level.rates[level.order[pos] as usize] == 0.0 && pos > 0 {
            pos -= 1;
        }
        level.parts(level.order[pos] as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta0PdParams {
    pub alpha: f64,
    pub kappa: f64,
    pub c: f64,
    pub c_kappa: Option<f64>,
}

impl Delta0PdParams {
    pub fn new(alpha: f64, kappa: f64, c: f64) -> Self {
        Self {
            alpha,
            kappa,
            c,
            c_kappa: None,
        }
    }
}

fn check_pd_alpha_c(alpha: f64, c: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::domain(format!("c must be positive, got {c}")));
    }
    Ok(())
}

/// δ₀-Poisson–Dirichlet(α, 0) coalescent. A configuration's total rate is
/// its multiplicity times `(1{r=1,k_1=2} C_κ + c p) / (C_κ + c(1-α))`.
pub fn delta0_pd_rates(n: usize, params: &Delta0PdParams) -> Result<XiRateTable> {
    let Delta0PdParams {
        alpha,
        kappa,
        c,
        c_kappa,
    } = *params;
    check_pd_alpha_c(alpha, c)?;
    let kingman = kingman_coefficient(kappa, c_kappa)?;
    let denom = kingman + c * (1.0 - alpha);
    let terms = PdTerms::new(n.min(XI_TABLE_CAP), alpha);
    XiRateTable::build(n, |b, parts, s| {
        let mult = terms.ln_multiplicity(b, parts, s);
        let pd = c * (mult + terms.ln_probability(b, parts, s)).exp();
        let pair = if parts == [2] {
            binomial(b as u64, 2) * kingman
        } else {
            0.0
        };
        (pair + pd) / denom
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPdParams {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    /// Divide every rate by `λ_{2;2;0}` so that the pair rate is one.
    pub normalize: bool,
}

/// `C_β = β B(2-β, β) / m^β` with `m = 1 + (1 + 2^{1-β})/(2(β-1))`.
pub fn beta_pd_coefficient(beta_exp: f64) -> Result<f64> {
    if !(beta_exp > 1.0 && beta_exp < 2.0) {
        return Err(Error::domain(format!("beta must lie in (1, 2), got {beta_exp}")));
    }
    let m = mean_approx_unchecked(beta_exp);
    Ok(beta_exp * beta(2.0 - beta_exp, beta_exp) / m.powf(beta_exp))
}

/// Beta(2-β, β)–Poisson–Dirichlet(α, 0) coalescent. A configuration's total
/// rate is its multiplicity times
/// `(1{r=1} C_β B(k-β, b-k+β) + c p) / (C_β + c(1-α))`.
pub fn beta_pd_rates(n: usize, params: &BetaPdParams) -> Result<XiRateTable> {
    let BetaPdParams {
        alpha,
        beta: beta_exp,
        c,
        normalize,
    } = *params;
    check_pd_alpha_c(alpha, c)?;
    let cb = beta_pd_coefficient(beta_exp)?;
    let denom = cb + c * (1.0 - alpha);
    let terms = PdTerms::new(n.min(XI_TABLE_CAP), alpha);
    let group_rate = |b: usize, parts: &[usize], s: usize| {
        let mult = terms.ln_multiplicity(b, parts, s);
        let pd = c * (mult + terms.ln_probability(b, parts, s)).exp();
        let single = if parts.len() == 1 {
            let k = parts[0];
            binomial(b as u64, k as u64) * cb * beta(k as f64 - beta_exp, (b - k) as f64 + beta_exp)
        } else {
            0.0
        };
        (single + pd) / denom
    };
    let scale = if normalize { group_rate(2, &[2], 0) } else { 1.0 };
    XiRateTable::build(n, |b, parts, s| group_rate(b, parts, s) / scale)
}

/// A Ξ-coalescent whose simultaneous mergers come from a
/// Poisson–Dirichlet(α, 0) paintbox, represented without enumerating
/// configurations. At `b` blocks the paintbox fires at rate
/// `w (1 - α^{b-1})`, the complement being the all-singletons partition, and
/// the groups are a Chinese-restaurant partition conditioned to contain a
/// merger. Single mergers of any other origin sit in a Λ table.
#[derive(Debug, Clone)]
pub struct PaintboxRates {
    single: LambdaRateTable,
    alpha: f64,
    weight: f64,
}

impl PaintboxRates {
    pub fn n(&self) -> usize {
        self.single.n()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn paintbox_rate(&self, b: usize) -> f64 {
        self.weight * -((b - 1) as f64 * self.alpha.ln()).exp_m1()
    }

    pub fn single_rate(&self, b: usize) -> f64 {
        self.single.event_rate(b)
    }

    pub fn event_rate(&self, b: usize) -> f64 {
        self.single_rate(b) + self.paintbox_rate(b)
    }

    /// Group sizes of one event among `b` blocks, largest first.
    pub fn sample_groups<R: Rng + ?Sized>(&self, b: usize, rng: &mut R, groups: &mut Vec<usize>) {
        groups.clear();
        let single = self.single_rate(b);
        if rng.random::<f64>() * self.event_rate(b) < single {
            groups.push(self.single.sample_merger_size(b, rng.random()));
            return;
        }
        loop {
            groups.clear();
            groups.push(1);
            for j in 1..b {
                let mut u = rng.random::<f64>() * j as f64 - groups.len() as f64 * self.alpha;
                if u < 0.0 {
                    groups.push(1);
                    continue;
                }
                let last = groups.len() - 1;
                let mut t = 0;
                while t < last {
                    u -= groups[t] as f64 - self.alpha;
                    if u < 0.0 {
                        break;
                    }
                    t += 1;
                }
                groups[t] += 1;
            }
            groups.retain(|&k| k >= 2);
            if !groups.is_empty() {
                groups.sort_unstable_by(|a, b| b.cmp(a));
                return;
            }
        }
    }
}

/// δ₀–Poisson–Dirichlet coalescent for any sample size.
pub fn delta0_pd_paintbox(n: usize, params: &Delta0PdParams) -> Result<PaintboxRates> {
    let Delta0PdParams {
        alpha,
        kappa,
        c,
        c_kappa,
    } = *params;
    check_pd_alpha_c(alpha, c)?;
    let kingman = kingman_coefficient(kappa, c_kappa)?;
    let denom = kingman + c * (1.0 - alpha);
    let single = LambdaRateTable::from_totals(n, |b, k| {
        if k == 2 {
            binomial(b as u64, 2) * kingman / denom
        } else {
            0.0
        }
    })?;
    Ok(PaintboxRates {
        single,
        alpha,
        weight: c / denom,
    })
}

/// Beta–Poisson–Dirichlet coalescent for any sample size.
pub fn beta_pd_paintbox(n: usize, params: &BetaPdParams) -> Result<PaintboxRates> {
    let BetaPdParams {
        alpha,
        beta: beta_exp,
        c,
        normalize,
    } = *params;
    check_pd_alpha_c(alpha, c)?;
    let cb = beta_pd_coefficient(beta_exp)?;
    let denom = cb + c * (1.0 - alpha);
    let single_total =
        |b: usize, k: usize| binomial(b as u64, k as u64) * cb * beta(k as f64 - beta_exp, (b - k) as f64 + beta_exp);
    let scale = if normalize {
        (single_total(2, 2) + c * (1.0 - alpha)) / denom
    } else {
        1.0
    };
    let single = LambdaRateTable::from_totals(n, |b, k| single_total(b, k) / denom / scale)?;
    Ok(PaintboxRates {
        single,
        alpha,
        weight: c / denom / scale,
    })
}
