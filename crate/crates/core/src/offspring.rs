//! Truncated heavy-tailed laws for the number of potential offspring, and the
//! random environments that switch an individual between two tail exponents.
//!
//! The law with exponent `a` and bound `ζ` puts mass
//! `h_a(ζ) (k^{-a} - (k+1)^{-a})` on `k ∈ {1, …, ζ}`, where
//! `h_a(ζ) = 1 / (1 - (1+ζ)^{-a})` makes the weights sum to one. Its upper
//! tail telescopes, `P(X ≥ k) = h_a(ζ) (k^{-a} - (1+ζ)^{-a})`, which gives a
//! closed-form inverse CDF.

use rand::Rng;

use crate::error::{Error, Result};

/// Largest value drawn from an unbounded law. Keeps the total of a
/// generation of up to 2^23 individuals inside `u64`.
pub const UNBOUNDED_CAP: u64 = 1 << 40;

/// Number of leading atoms tabulated by [`OffspringSampler`].
const HEAD_ATOMS: u64 = 1024;

/// Upper bound `ζ` on the number of potential offspring of one individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zeta {
    Finite(u64),
    Infinite,
}

impl Zeta {
    /// Largest value a draw can take.
    pub fn bound(self) -> u64 {
        match self {
            Zeta::Finite(z) => z,
            Zeta::Infinite => UNBOUNDED_CAP,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Zeta::Finite(_))
    }
}

/// How `ζ` is derived from the population size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaPolicy {
    /// `ζ = ⌊K N⌋`.
    ConstMultiple(f64),
    /// `ζ = ⌊N log N⌋`.
    NLogN,
    /// `ζ = ⌊N^{1/α} log N⌋`.
    NPowInvAlphaLogN,
    /// `ζ = ⌊√N⌋`, the `ζ/N → 0` regime.
    SqrtN,
    /// A fixed bound independent of `N`.
    Fixed(u64),
    Infinite,
}

impl ZetaPolicy {
    pub fn resolve(self, pop_size: u64, alpha: f64) -> Zeta {
        let n = pop_size as f64;
        let raw = match self {
            ZetaPolicy::ConstMultiple(k) => (k * n).floor(),
            ZetaPolicy::NLogN => (n * n.ln()).floor(),
            ZetaPolicy::NPowInvAlphaLogN => (n.powf(1.0 / alpha) * n.ln()).floor(),
            ZetaPolicy::SqrtN => n.sqrt().floor(),
            ZetaPolicy::Fixed(z) => return Zeta::Finite(z.max(1)),
            ZetaPolicy::Infinite => return Zeta::Infinite,
        };
        if !raw.is_finite() || raw >= UNBOUNDED_CAP as f64 {
            Zeta::Infinite
        } else {
            Zeta::Finite((raw as u64).max(1))
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let policy = match s {
            "NlogN" => ZetaPolicy::NLogN,
            "N_pow_inv_alpha_logN" => ZetaPolicy::NPowInvAlphaLogN,
            "sqrtN" => ZetaPolicy::SqrtN,
            "infinite" => ZetaPolicy::Infinite,
            _ => {
                if let Some(k) = s.strip_prefix("const:") {
                    let k: f64 = k
                        .parse()
                        .map_err(|_| Error::Config(format!("bad zeta multiple `{k}`")))?;
                    if !(k > 0.0) {
                        return Err(Error::Config("zeta multiple must be positive".into()));
                    }
                    ZetaPolicy::ConstMultiple(k)
                } else if let Some(z) = s.strip_prefix("fixed:") {
                    let z: u64 = z
                        .parse()
                        .map_err(|_| Error::Config(format!("bad zeta bound `{z}`")))?;
                    ZetaPolicy::Fixed(z)
                } else {
                    return Err(Error::Config(format!("unknown zeta policy `{s}`")));
                }
            }
        };
        Ok(policy)
    }
}

/// The law `p_k(a)` on `{1, …, ζ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    exponent: f64,
    zeta: Zeta,
    normalizer: f64,
    /// `(1+ζ)^{-a}`, zero for an unbounded law.
    bound_tail: f64,
}

impl OffspringLaw {
    pub fn new(exponent: f64, zeta: Zeta) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::domain(format!(
                "tail exponent must be positive, got {exponent}"
            )));
        }
        if zeta == Zeta::Finite(0) {
            return Err(Error::domain("zeta must be at least 1"));
        }
        let (normalizer, bound_tail) = match zeta {
            Zeta::Finite(z) => {
                let log_bound = (z as f64).ln_1p();
                // 1 - (1+ζ)^{-a}, without cancellation for small a·log(1+ζ)
                let mass = -(-exponent * log_bound).exp_m1();
                (1.0 / mass, (-exponent * log_bound).exp())
            }
            Zeta::Infinite => (1.0, 0.0),
        };
        Ok(Self {
            exponent,
            zeta,
            normalizer,
            bound_tail,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn zeta(&self) -> Zeta {
        self.zeta
    }

    /// `h_a(ζ)`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 || k > self.zeta.bound() {
            return 0.0;
        }
        let kf = k as f64;
        // k^{-a} - (k+1)^{-a} = k^{-a} (1 - (1 + 1/k)^{-a})
        let gap = -(-self.exponent * (1.0 / kf).ln_1p()).exp_m1();
        self.normalizer * kf.powf(-self.exponent) * gap
    }

    /// `P(X ≥ k)`.
    pub fn tail(&self, k: u64) -> f64 {
        if k <= 1 {
            return 1.0;
        }
        if k > self.zeta.bound() {
            return 0.0;
        }
        let v = self.normalizer * ((k as f64).powf(-self.exponent) - self.bound_tail);
        v.clamp(0.0, 1.0)
    }

    /// `P(X ≤ k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        1.0 - self.tail(k.saturating_add(1))
    }

    /// Largest `k` with `P(X ≥ k) ≥ level`, for `level ∈ (0, 1]`.
    ///
    /// This is the inverse CDF evaluated at `1 - level`.
    pub fn quantile_from_tail(&self, level: f64) -> u64 {
        let bound = self.zeta.bound();
        let x = (level / self.normalizer + self.bound_tail).powf(-1.0 / self.exponent);
        let mut k = if x.is_finite() && x < bound as f64 {
            (x.floor() as u64).max(1)
        } else {
            bound
        };
        // one step of correction for rounding in the power
        if k < bound && self.tail(k + 1) >= level {
            k += 1;
        } else if k > 1 && self.tail(k) < level {
            k -= 1;
        }
        k
    }

    /// Draws one value by inverting the closed-form tail.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        self.quantile_from_tail(1.0 - u)
    }

    /// Inverse CDF by bisection on the tail; a slow cross-check for
    /// [`OffspringLaw::quantile_from_tail`].
    pub fn quantile_by_bisection(&self, level: f64) -> u64 {
        let (mut lo, mut hi) = (1u64, self.zeta.bound());
        // invariant: tail(lo) ≥ level, and the answer lies in [lo, hi]
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if self.tail(mid) >= level {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    /// `E[X]`.
    pub fn mean(&self) -> f64 {
        // E[X] = Σ_{k≥1} P(X ≥ k) = h (Σ_{k=1}^{ζ} k^{-a} - ζ (1+ζ)^{-a})
        match self.zeta {
            Zeta::Finite(z) => {
                let powers = power_sum(self.exponent, z);
                self.normalizer * (powers - z as f64 * self.bound_tail)
            }
            Zeta::Infinite => {
                if self.exponent <= 1.0 {
                    f64::INFINITY
                } else {
                    power_sum(self.exponent, u64::MAX)
                }
            }
        }
    }
}

/// `Σ_{k=1}^{upper} k^{-a}`; `upper = u64::MAX` stands for the full series.
fn power_sum(a: f64, upper: u64) -> f64 {
    const DIRECT: u64 = 1000;
    if upper <= DIRECT {
        return (1..=upper).map(|k| (k as f64).powf(-a)).sum();
    }
    let head: f64 = (1..DIRECT).map(|k| (k as f64).powf(-a)).sum();
    let m = DIRECT as f64;
    // Euler–Maclaurin for Σ_{k=m}^{Z} k^{-a}
    let f = |x: f64| x.powf(-a);
    let d1 = |x: f64| -a * x.powf(-a - 1.0);
    let d3 = |x: f64| -a * (a + 1.0) * (a + 2.0) * x.powf(-a - 3.0);
    let integral_from_m = |z: Option<f64>| -> f64 {
        if (a - 1.0).abs() < 1e-15 {
            z.map_or(f64::INFINITY, |z| z.ln() - m.ln())
        } else {
            let upper = z.map_or(0.0, |z| z.powf(1.0 - a));
            (upper - m.powf(1.0 - a)) / (1.0 - a)
        }
    };
    if upper == u64::MAX {
        head + integral_from_m(None) + f(m) / 2.0 - d1(m) / 12.0 + d3(m) / 720.0
    } else {
        let z = upper as f64;
        head + integral_from_m(Some(z)) + (f(m) + f(z)) / 2.0 + (d1(z) - d1(m)) / 12.0
            - (d3(z) - d3(m)) / 720.0
    }
}

/// Fast inverse-CDF sampler for one [`OffspringLaw`].
///
/// The first [`HEAD_ATOMS`] atoms are tabulated with a guide table, so a draw
/// costs one uniform and, on average, about one comparison; draws beyond the
/// table use the closed-form tail inverse. The map from the uniform to the
/// returned value is the same as [`OffspringLaw::sample`] up to rounding.
#[derive(Debug, Clone)]
pub struct OffspringSampler {
    law: OffspringLaw,
    /// `cdf[k-1] = P(X ≤ k)` for `k ≤ head`.
    cdf: Vec<f64>,
    guide: Vec<u32>,
    head_mass: f64,
}

impl OffspringSampler {
    pub fn new(law: &OffspringLaw) -> Self {
        let head = law.zeta().bound().min(HEAD_ATOMS);
        let mut cdf: Vec<f64> = (1..=head).map(|k| law.cdf(k)).collect();
        if head == law.zeta().bound() {
            *cdf.last_mut().expect("head is non-empty") = 1.0;
        }
        let head_mass = *cdf.last().expect("head is non-empty");
        let slots = 2 * cdf.len();
        let mut guide = Vec::with_capacity(slots);
        let mut k = 0usize;
        for j in 0..slots {
            let level = j as f64 / slots as f64;
            while k + 1 < cdf.len() && cdf[k] <= level {
                k += 1;
            }
            guide.push(k as u32);
        }
        Self {
            law: law.clone(),
            cdf,
            guide,
            head_mass,
        }
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }

    /// Smallest `k` with `P(X ≤ k) > u`.
    #[inline]
    pub fn quantile(&self, u: f64) -> u64 {
        if u >= self.head_mass {
            let head = self.cdf.len() as u64;
            return self.law.quantile_from_tail(1.0 - u).max(head + 1);
        }
        let slot = (u * self.guide.len() as f64) as usize;
        let mut k = self.guide[slot.min(self.guide.len() - 1)] as usize;
        while self.cdf[k] <= u {
            k += 1;
        }
        k as u64 + 1
    }
}

/// `m = 1 + (1 + 2^{1-κ}) / (2(κ - 1))`, the approximation of the limiting
/// mean number of potential offspring used by the rate formulas.
pub fn mean_approx(kappa: f64) -> Result<f64> {
    if !(kappa >= 2.0) {
        return Err(Error::domain(format!("mean_approx needs kappa ≥ 2, got {kappa}")));
    }
    Ok(mean_approx_unchecked(kappa))
}

/// Same formula without the `κ ≥ 2` restriction (used with `β ∈ (1, 2)`).
pub(crate) fn mean_approx_unchecked(exponent: f64) -> f64 {
    1.0 + (1.0 + 2f64.powf(1.0 - exponent)) / (2.0 * (exponent - 1.0))
}

/// `C_κ^N`: `N / log N` for `κ = 2`, `N` for `κ > 2`.
pub fn population_time_scale(kappa: f64, pop_size: u64) -> f64 {
    let n = pop_size as f64;
    if kappa > 2.0 {
        n
    } else {
        n / n.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// `ε_N = c N^{α-2} (1{κ>2} + 1{κ=2} log N)`, for `1 ≤ α < 2`.
    TypeA,
    /// `ε̄_N = c N^{α-1} (1{κ>2} + 1{κ=2} log N)`, for `0 < α ≤ 1`; the
    /// constant `c` when `α = 1` and `κ > 2`.
    TypeB,
    /// `ε_N = c / C_κ^N`, the Poisson–Dirichlet regime.
    InverseTimeScale,
}

/// Per-generation probability of a favourable environment.
pub fn epsilon_schedule(
    schedule: Schedule,
    alpha: f64,
    kappa: f64,
    c: f64,
    pop_size: u64,
) -> Result<f64> {
    if !(kappa >= 2.0) {
        return Err(Error::domain(format!("kappa must be ≥ 2, got {kappa}")));
    }
    if !(c > 0.0) {
        return Err(Error::domain(format!("c must be positive, got {c}")));
    }
    if pop_size < 2 {
        return Err(Error::domain("population size must be at least 2"));
    }
    let n = pop_size as f64;
    let log_factor = if kappa > 2.0 { 1.0 } else { n.ln() };
    let eps = match schedule {
        Schedule::TypeA => {
            if !(1.0..2.0).contains(&alpha) {
                return Err(Error::domain(format!(
                    "Type A schedule needs 1 ≤ alpha < 2, got {alpha}"
                )));
            }
            c * n.powf(alpha - 2.0) * log_factor
        }
        Schedule::TypeB => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::domain(format!(
                    "Type B schedule needs 0 < alpha ≤ 1, got {alpha}"
                )));
            }
            if alpha == 1.0 && kappa > 2.0 {
                c
            } else {
                c * n.powf(alpha - 1.0) * log_factor
            }
        }
        Schedule::InverseTimeScale => c / population_time_scale(kappa, pop_size),
    };
    if eps >= 1.0 {
        return Err(Error::Schedule { eps, pop_size });
    }
    Ok(eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// A favourable generation switches every individual to the `α` law.
    TypeA,
    /// A favourable generation switches one uniformly chosen individual.
    TypeB,
    /// Every individual always uses the `κ` law.
    Fixed,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "TypeA" | "typeA" => Ok(Regime::TypeA),
            "B" | "TypeB" | "typeB" => Ok(Regime::TypeB),
            "fixed" | "Fixed" => Ok(Regime::Fixed),
            other => Err(Error::Config(format!("unknown regime `{other}`"))),
        }
    }
}

/// A random environment over two offspring laws sharing one bound `ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentModel {
    regime: Regime,
    eps: f64,
    favorable: OffspringLaw,
    normal: OffspringLaw,
}

impl EnvironmentModel {
    /// `eps` may be 0 or 1 to pin the environment in tests; the models of
    /// interest have `0 < eps < 1`.
    pub fn new(regime: Regime, alpha: f64, kappa: f64, eps: f64, zeta: Zeta) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::domain(format!("eps must lie in [0, 1], got {eps}")));
        }
        Ok(Self {
            regime,
            eps,
            favorable: OffspringLaw::new(alpha, zeta)?,
            normal: OffspringLaw::new(kappa, zeta)?,
        })
    }

    /// Every individual follows `law` in every generation.
    pub fn fixed(law: OffspringLaw) -> Self {
        Self {
            regime: Regime::Fixed,
            eps: 0.0,
            favorable: law.clone(),
            normal: law,
        }
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn favorable(&self) -> &OffspringLaw {
        &self.favorable
    }

    pub fn normal(&self) -> &OffspringLaw {
        &self.normal
    }

    pub fn zeta(&self) -> Zeta {
        self.normal.zeta()
    }

    /// Which individuals use the favourable law this generation.
    pub fn draw_generation_laws<R: Rng + ?Sized>(
        &self,
        pop_size: usize,
        rng: &mut R,
    ) -> GenerationLaws {
        match self.regime {
            Regime::Fixed => GenerationLaws::AllNormal,
            Regime::TypeA => {
                if rng.random::<f64>() < self.eps {
                    GenerationLaws::AllFavorable
                } else {
                    GenerationLaws::AllNormal
                }
            }
            Regime::TypeB => {
                if rng.random::<f64>() < self.eps {
                    GenerationLaws::OneFavorable(rng.random_range(0..pop_size))
                } else {
                    GenerationLaws::AllNormal
                }
            }
        }
    }
}

/// Per-generation assignment of laws to individuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerationLaws {
    AllNormal,
    AllFavorable,
    /// Only the individual at this index uses the favourable law.
    OneFavorable(usize),
}

impl GenerationLaws {
    pub fn is_favorable(self, index: usize) -> bool {
        match self {
            GenerationLaws::AllNormal => false,
            GenerationLaws::AllFavorable => true,
            GenerationLaws::OneFavorable(i) => i == index,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pmf_small_cases() {
        let law = OffspringLaw::new(1.0, Zeta::Finite(1)).unwrap();
        assert_eq!(law.pmf(1), 1.0);

        let law = OffspringLaw::new(1.0, Zeta::Finite(3)).unwrap();
        assert!((law.pmf(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((law.pmf(2) - 2.0 / 9.0).abs() < 1e-15);
        assert!((law.pmf(3) - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(law.pmf(4), 0.0);

        let law = OffspringLaw::new(2.0, Zeta::Finite(10)).unwrap();
        assert_eq!(law.pmf(11), 0.0);
        assert_eq!(law.pmf(0), 0.0);
    }

    #[test]
    fn normalizer_closed_form() {
        for &(a, z) in &[(0.25, 10u64), (1.0, 3), (2.0, 1000)] {
            let law = OffspringLaw::new(a, Zeta::Finite(z)).unwrap();
            let expect = 1.0 / (1.0 - (1.0 + z as f64).powf(-a));
            assert!((law.normalizer() - expect).abs() < 1e-12 * expect);
        }
        assert_eq!(OffspringLaw::new(1.5, Zeta::Infinite).unwrap().normalizer(), 1.0);
    }

    #[test]
    fn normalization_grid() {
        for &a in &[0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
            for &z in &[1u64, 10, 1000, 1_000_000] {
                let law = OffspringLaw::new(a, Zeta::Finite(z)).unwrap();
                // sum smallest terms first
                let total: f64 = (1..=z).rev().map(|k| law.pmf(k)).sum();
                assert!((total - 1.0).abs() < 1e-12, "a={a} z={z} total={total}");
            }
        }
    }

    #[test]
    fn tail_identity() {
        for &a in &[0.25, 1.0, 3.0] {
            let z = 500u64;
            let law = OffspringLaw::new(a, Zeta::Finite(z)).unwrap();
            let mut acc = 0.0;
            for k in (1..=z).rev() {
                acc += law.pmf(k);
                assert!((acc - law.tail(k)).abs() < 1e-12, "a={a} k={k}");
            }
        }
    }

    #[test]
    fn pmf_strictly_decreasing() {
        let law = OffspringLaw::new(1.5, Zeta::Finite(2000)).unwrap();
        for k in 1..2000 {
            assert!(law.pmf(k) > law.pmf(k + 1));
        }
    }

    #[test]
    fn degenerate_law_always_one() {
        let law = OffspringLaw::new(1.0, Zeta::Finite(1)).unwrap();
        let sampler = OffspringSampler::new(&law);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert_eq!(law.sample(&mut rng), 1);
            assert_eq!(sampler.sample(&mut rng), 1);
        }
    }

    #[test]
    fn closed_form_inverse_matches_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(a, zeta) in &[
            (0.5, Zeta::Finite(100_000)),
            (1.0, Zeta::Finite(3)),
            (2.0, Zeta::Finite(6907)),
            (1.5, Zeta::Infinite),
        ] {
            let law = OffspringLaw::new(a, zeta).unwrap();
            for _ in 0..5000 {
                let level = 1.0 - rng.random::<f64>();
                assert_eq!(
                    law.quantile_from_tail(level),
                    law.quantile_by_bisection(level),
                    "a={a} level={level}"
                );
            }
        }
    }

    #[test]
    fn table_sampler_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(a, zeta) in &[
            (2.0, Zeta::Finite(44)),
            (1.0, Zeta::Finite(100_000)),
            (0.01, Zeta::Finite(6907)),
        ] {
            let law = OffspringLaw::new(a, zeta).unwrap();
            let sampler = OffspringSampler::new(&law);
            for _ in 0..20_000 {
                let u: f64 = rng.random();
                assert_eq!(sampler.quantile(u), law.quantile_from_tail(1.0 - u), "u={u}");
            }
        }
    }

    #[test]
    fn sampler_is_seed_deterministic() {
        let law = OffspringLaw::new(1.0, Zeta::Finite(1000)).unwrap();
        let sampler = OffspringSampler::new(&law);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sampler.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn empirical_frequencies_three_atoms() {
        let law = OffspringLaw::new(1.0, Zeta::Finite(3)).unwrap();
        let sampler = OffspringSampler::new(&law);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 1_000_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[sampler.sample(&mut rng) as usize] += 1;
        }
        for (k, p) in [(1, 2.0 / 3.0), (2, 2.0 / 9.0), (3, 1.0 / 9.0)] {
            let freq = counts[k] as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * se, "k={k} freq={freq}");
        }
    }

    #[test]
    fn mean_matches_direct_sum() {
        for &(a, z) in &[(2.0, 44u64), (1.0, 6907), (0.5, 5000), (3.0, 100_000)] {
            let law = OffspringLaw::new(a, Zeta::Finite(z)).unwrap();
            let direct: f64 = (1..=z).rev().map(|k| k as f64 * law.pmf(k)).sum();
            assert!((law.mean() - direct).abs() < 1e-9 * direct, "a={a} z={z}");
        }
    }

    #[test]
    fn mean_approx_values() {
        assert!((mean_approx(2.0).unwrap() - 1.75).abs() < 1e-15);
        assert!((mean_approx(3.0).unwrap() - 1.3125).abs() < 1e-15);
        assert!((mean_approx(1e9).unwrap() - 1.0).abs() < 1e-8);
        assert!(mean_approx(1.9).is_err());
        let grid: Vec<f64> = (0..=80).map(|i| 2.0 + i as f64 * 0.1).collect();
        for w in grid.windows(2) {
            assert!(mean_approx(w[1]).unwrap() < mean_approx(w[0]).unwrap());
        }
    }

    #[test]
    fn mean_approx_inside_bracket() {
        // 1 + 2^{1-κ}/(κ-1) < m < 1 + 1/(κ-1)
        for &kappa in &[2.0, 2.5, 3.0, 5.0] {
            let m = mean_approx(kappa).unwrap();
            assert!(m > 1.0 + 2f64.powf(1.0 - kappa) / (kappa - 1.0));
            assert!(m < 1.0 + 1.0 / (kappa - 1.0));
        }
    }

    #[test]
    fn schedules() {
        let e = epsilon_schedule(Schedule::TypeA, 1.0, 2.0, 1.0, 1000).unwrap();
        assert!((e - 1000f64.ln() / 1000.0).abs() < 1e-15);
        assert!((e - 6.9078e-3).abs() < 1e-7);
        let e = epsilon_schedule(Schedule::TypeA, 1.5, 3.0, 1.0, 10_000).unwrap();
        assert!((e - 0.01).abs() < 1e-15);
        let e = epsilon_schedule(Schedule::TypeB, 0.5, 2.0, 1.0, 100).unwrap();
        assert!((e - 0.1 * 100f64.ln()).abs() < 1e-15);
        assert!((e - 0.46052).abs() < 1e-5);
        assert_eq!(epsilon_schedule(Schedule::TypeB, 1.0, 3.0, 0.3, 100).unwrap(), 0.3);
        assert!(matches!(
            epsilon_schedule(Schedule::TypeA, 1.5, 2.0, 50.0, 100),
            Err(Error::Schedule { .. })
        ));
        assert!(epsilon_schedule(Schedule::TypeA, 0.5, 2.0, 1.0, 1000).is_err());
        assert!(epsilon_schedule(Schedule::TypeB, 1.5, 2.0, 1.0, 1000).is_err());
        let e = epsilon_schedule(Schedule::InverseTimeScale, 0.5, 2.0, 1.0, 3000).unwrap();
        assert!((e - 3000f64.ln() / 3000.0).abs() < 1e-15);
    }

    #[test]
    fn zeta_policies() {
        assert_eq!(ZetaPolicy::SqrtN.resolve(2000, 1.0), Zeta::Finite(44));
        assert_eq!(ZetaPolicy::NLogN.resolve(1000, 1.0), Zeta::Finite(6907));
        assert_eq!(ZetaPolicy::ConstMultiple(1.0).resolve(1000, 1.0), Zeta::Finite(1000));
        assert_eq!(
            ZetaPolicy::NPowInvAlphaLogN.resolve(1000, 0.5),
            Zeta::Finite(6_907_755)
        );
        assert_eq!(ZetaPolicy::NPowInvAlphaLogN.resolve(1000, 0.01), Zeta::Infinite);
        assert_eq!(ZetaPolicy::parse("const:2.5").unwrap(), ZetaPolicy::ConstMultiple(2.5));
        assert_eq!(ZetaPolicy::parse("fixed:1").unwrap(), ZetaPolicy::Fixed(1));
        assert!(ZetaPolicy::parse("bogus").is_err());
    }

    #[test]
    fn environment_assignments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let env = EnvironmentModel::new(Regime::TypeA, 1.0, 2.0, 1.0, Zeta::Finite(10)).unwrap();
        for _ in 0..100 {
            assert_eq!(env.draw_generation_laws(7, &mut rng), GenerationLaws::AllFavorable);
        }
        let fixed = EnvironmentModel::new(Regime::Fixed, 1.0, 2.0, 0.5, Zeta::Finite(10)).unwrap();
        for _ in 0..100 {
            assert_eq!(fixed.draw_generation_laws(7, &mut rng), GenerationLaws::AllNormal);
        }
        assert!(EnvironmentModel::new(Regime::TypeA, 1.0, 2.0, 1.5, Zeta::Finite(10)).is_err());
    }

    #[test]
    fn type_b_lucky_index_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let env = EnvironmentModel::new(Regime::TypeB, 0.5, 2.0, 1.0, Zeta::Finite(10)).unwrap();
        let draws = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            match env.draw_generation_laws(5, &mut rng) {
                GenerationLaws::OneFavorable(i) => counts[i] += 1,
                other => panic!("unexpected {other:?}"),
            }
        }
        let p = 0.2;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - p).abs() < 3.0 * se);
        }
    }
}
