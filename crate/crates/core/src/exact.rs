//! Exact expected branch lengths `E[L_i(n)]` of Λ-coalescents.
//!
//! [`expected_branch_lengths`] follows one fixed leaf set `A` of size `b`.
//! While no block mixes leaves of `A` with leaves outside it, the state is
//! the pair `(x, y)` of block counts inside and outside `A`; `A` is itself a
//! block exactly when `x = 1`. By exchangeability
//! `E[L_b] = C(n, b) · E[time with x = 1]`, and the chain on `(x, y)` has
//! `O(n²)` states, so the whole spectrum costs `O(n⁴)` operations.
//!
//! Two slower constructions serve as cross-checks: the chain lumped to
//! integer partitions of `n`, and the chain on labelled set partitions.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rates::LambdaRateTable;
use crate::special::binomial;

/// Default upper limit on `n` for [`expected_branch_lengths`].
pub const DEFAULT_EXACT_CAP: usize = 100;

/// Upper limit on `n` for the integer-partition chain.
pub const LUMPED_CAP: usize = 40;

/// Upper limit on `n` for the labelled brute force.
pub const BRUTE_FORCE_CAP: usize = 8;

fn check_n(n: usize, rates: &LambdaRateTable, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if n < 2 {
        return Err(Error::domain("sample size must be at least 2"));
    }
    if n > rates.n() {
        return Err(Error::domain(format!(
            "rate table covers n ≤ {}, asked for {n}",
            rates.n()
        )));
    }
    Ok(())
}

/// `E[L_1], …, E[L_{n-1}]` for the coalescent with the given rates.
pub fn expected_branch_lengths(n: usize, rates: &LambdaRateTable) -> Result<Vec<f64>> {
    expected_branch_lengths_with_cap(n, rates, DEFAULT_EXACT_CAP)
}

pub fn expected_branch_lengths_with_cap(
    n: usize,
    rates: &LambdaRateTable,
    cap: usize,
) -> Result<Vec<f64>> {
    check_n(n, rates, cap)?;
    // per-group rates λ_{m,ℓ} and binomials C(j, ℓ)
    let per_group: Vec<Vec<f64>> = (0..=n)
        .map(|m| (0..=m).map(|l| if m >= 2 && l >= 2 { rates.per_group_rate(m, l) } else { 0.0 }).collect())
        .collect();
    let choose: Vec<Vec<f64>> = (0..=n)
        .map(|j| (0..=j).map(|l| binomial(j as u64, l as u64)).collect())
        .collect();
    let event: Vec<f64> = (0..=n).map(|m| rates.event_rate(m)).collect();

    let mut out = Vec::with_capacity(n - 1);
    let mut visit = vec![0.0f64; (n + 1) * (n + 1)];
    for b in 1..n {
        let outside = n - b;
        visit.iter_mut().for_each(|v| *v = 0.0);
        let at = |x: usize, y: usize| x * (n + 1) + y;
        visit[at(b, outside)] = 1.0;
        let mut time_as_block = 0.0;
        // every transition lowers x + y, so sweep by decreasing total
        for m in (2..=n).rev() {
            let x_lo = m.saturating_sub(outside).max(1);
            let x_hi = (m - 1).min(b);
            if x_lo > x_hi {
                continue;
            }
            for x in x_lo..=x_hi {
                let y = m - x;
                let p = visit[at(x, y)];
                if p == 0.0 {
                    continue;
                }
                let scale = p / event[m];
                if x == 1 {
                    time_as_block += scale;
                }
                for l in 2..=x {
                    visit[at(x - l + 1, y)] += scale * choose[x][l] * per_group[m][l];
                }
                for l in 2..=y {
                    visit[at(x, y - l + 1)] += scale * choose[y][l] * per_group[m][l];
                }
            }
        }
        out.push(binomial(n as u64, b as u64) * time_as_block);
    }
    Ok(out)
}

/// `φ_i(n) = E[L_i] / Σ_j E[L_j]`.
pub fn phi(n: usize, rates: &LambdaRateTable) -> Result<Vec<f64>> {
    Ok(normalize(expected_branch_lengths(n, rates)?))
}

pub fn normalize(lengths: Vec<f64>) -> Vec<f64> {
    let total: f64 = lengths.iter().sum();
    lengths.into_iter().map(|l| l / total).collect()
}

/// `i^{-1} / Σ_{j<n} j^{-1}`.
pub fn kingman_phi(n: usize) -> Vec<f64> {
    let harmonic: f64 = (1..n).map(|j| 1.0 / j as f64).sum();
    (1..n).map(|i| 1.0 / i as f64 / harmonic).collect()
}

/// The same expectation from the chain lumped to integer partitions of `n`
/// (block-size multisets). Feasible only for small `n`.
pub fn lumped_branch_lengths(n: usize, rates: &LambdaRateTable) -> Result<Vec<f64>> {
    check_n(n, rates, LUMPED_CAP)?;
    let mut lengths = vec![0.0; n - 1];
    // states keyed by block sizes in nonincreasing order, grouped by count
    let mut levels: Vec<HashMap<Vec<u8>, f64>> = vec![HashMap::new(); n + 1];
    levels[n].insert(vec![1u8; n], 1.0);
    let mut pick = Vec::new();
    for m in (2..=n).rev() {
        let level = std::mem::take(&mut levels[m]);
        let mut states: Vec<(Vec<u8>, f64)> = level.into_iter().collect();
        states.sort_by(|a, b| a.0.cmp(&b.0));
        for (parts, p) in states {
            let scale = p / rates.event_rate(m);
            for &s in &parts {
                lengths[s as usize - 1] += scale;
            }
            // distinct part values with their multiplicities
            let mut values: Vec<(u8, usize)> = Vec::new();
            for &s in &parts {
                match values.last_mut() {
                    Some((v, c)) if *v == s => *c += 1,
                    _ => values.push((s, 1)),
                }
            }
            for k in 2..=m {
                let rate = rates.per_group_rate(m, k);
                if rate == 0.0 {
                    continue;
                }
                pick.clear();
                pick.resize(values.len(), 0usize);
                sub_multisets(&values, 0, k, 1.0, &mut pick, &mut |ways, pick| {
                    let mut next: Vec<u8> = Vec::with_capacity(m - k + 1);
                    let mut merged = 0usize;
                    for (&(v, c), &j) in values.iter().zip(pick.iter()) {
                        merged += v as usize * j;
                        next.extend(std::iter::repeat_n(v, c - j));
                    }
                    next.push(merged as u8);
                    next.sort_unstable_by(|a, b| b.cmp(a));
                    *levels[m - k + 1].entry(next).or_insert(0.0) += scale * ways * rate;
                });
            }
        }
    }
    Ok(lengths)
}

/// Enumerates choices of `j_v ≤ c_v` blocks of each distinct size with
/// `Σ j_v = k`, passing the number of ways `Π C(c_v, j_v)`.
fn sub_multisets(
    values: &[(u8, usize)],
    idx: usize,
    k: usize,
    ways: f64,
    pick: &mut Vec<usize>,
    visit: &mut impl FnMut(f64, &[usize]),
) {
    if k == 0 {
        visit(ways, pick);
        return;
    }
    if idx == values.len() {
        return;
    }
    let c = values[idx].1;
    let rest: usize = values[idx + 1..].iter().map(|v| v.1).sum();
    let lo = k.saturating_sub(rest);
    for j in lo..=c.min(k) {
        pick[idx] = j;
        sub_multisets(values, idx + 1, k - j, ways * binomial(c as u64, j as u64), pick, visit);
    }
    pick[idx] = 0;
}

/// Expected time during which each leaf set is a block, on the labelled
/// chain over set partitions of `{0, …, n-1}`. Leaf sets are bit masks.
pub fn labelled_block_times(n: usize, rates: &LambdaRateTable) -> Result<HashMap<u16, f64>> {
    check_n(n, rates, BRUTE_FORCE_CAP)?;
    let mut times: HashMap<u16, f64> = HashMap::new();
    let mut levels: Vec<HashMap<Vec<u16>, f64>> = vec![HashMap::new(); n + 1];
    levels[n].insert((0..n).map(|i| 1u16 << i).collect(), 1.0);
    for m in (2..=n).rev() {
        let mut states: Vec<(Vec<u16>, f64)> = std::mem::take(&mut levels[m]).into_iter().collect();
        states.sort_by(|a, b| a.0.cmp(&b.0));
        for (blocks, p) in states {
            let scale = p / rates.event_rate(m);
            for &mask in &blocks {
                *times.entry(mask).or_insert(0.0) += scale;
            }
            for subset in 1u32..(1 << m) {
                let k = subset.count_ones() as usize;
                if k < 2 {
                    continue;
                }
                let rate = rates.per_group_rate(m, k);
                if rate == 0.0 {
                    continue;
                }
                let mut merged = 0u16;
                let mut next = Vec::with_capacity(m - k + 1);
                for (i, &mask) in blocks.iter().enumerate() {
                    if subset >> i & 1 == 1 {
                        merged |= mask;
                    } else {
                        next.push(mask);
                    }
                }
                next.push(merged);
                next.sort_unstable();
                *levels[m - k + 1].entry(next).or_insert(0.0) += scale * rate;
            }
        }
    }
    Ok(times)
}

/// `E[L_i(n)]` from the labelled chain, for `n ≤ 8`.
pub fn brute_force_spectrum(n: usize, rates: &LambdaRateTable) -> Result<Vec<f64>> {
    let times = labelled_block_times(n, rates)?;
    let mut lengths = vec![0.0; n - 1];
    for (mask, t) in times {
        let size = mask.count_ones() as usize;
        if size < n {
            lengths[size - 1] += t;
        }
    }
    Ok(lengths)
}
