//! Enumeration of merger configurations and integer partitions.

/// Calls `visit` on every simultaneous-merger configuration available to
/// `b` blocks: nondecreasing group sizes `2 ≤ k_1 ≤ ⋯ ≤ k_r` with
/// `Σ k_i ≤ b`. Configurations come in lexicographic order on
/// `(r, k_1, …, k_r)`.
pub fn for_each_merger_configuration(b: usize, mut visit: impl FnMut(&[usize])) {
    let mut parts = Vec::with_capacity(b / 2);
    for r in 1..=b / 2 {
        fill_groups(&mut parts, r, 2, b, &mut visit);
    }
}

fn fill_groups(
    parts: &mut Vec<usize>,
    remaining: usize,
    min_part: usize,
    budget: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if remaining == 0 {
        visit(parts);
        return;
    }
    // every later part is at least `k`, so `remaining * k ≤ budget`
    let mut k = min_part;
    while k * remaining <= budget {
        parts.push(k);
        fill_groups(parts, remaining - 1, k, budget - k, visit);
        parts.pop();
        k += 1;
    }
}

pub fn merger_configurations(b: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_merger_configuration(b, |p| out.push(p.to_vec()));
    out
}

/// All partitions of `n` as nonincreasing part lists, in reverse
/// lexicographic order starting from `[n]`.
pub fn integer_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut parts = Vec::with_capacity(n);
    partitions_rec(n, n, &mut parts, &mut out);
    out
}

fn partitions_rec(rest: usize, max_part: usize, parts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if rest == 0 {
        out.push(parts.clone());
        return;
    }
    for k in (1..=max_part.min(rest)).rev() {
        parts.push(k);
        partitions_rec(rest - k, k, parts, out);
        parts.pop();
    }
}
