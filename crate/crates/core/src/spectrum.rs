/// Branch lengths indexed by the number of leaves subtended: `lengths[i-1]`
/// is the total length of branches ancestral to exactly `i` of the `n`
/// sampled leaves, `1 ≤ i ≤ n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLengthSpectrum {
    pub lengths: Vec<f64>,
}

impl BranchLengthSpectrum {
    /// All-zero spectrum for a sample of size `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            lengths: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn sample_size(&self) -> usize {
        self.lengths.len() + 1
    }

    /// `L = Σ_i ℓ_i`.
    pub fn total(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// `R_i = ℓ_i / L`. Sums to one up to rounding when `L > 0`.
    pub fn relative(&self) -> Vec<f64> {
        let total = self.total();
        self.lengths.iter().map(|l| l / total).collect()
    }

    /// Adds `dt` to the class of every block in `sizes`.
    pub(crate) fn accrue(&mut self, sizes: &[usize], dt: f64) {
        for &s in sizes {
            self.lengths[s - 1] += dt;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_sums_to_one() {
        let s = BranchLengthSpectrum {
            lengths: vec![3.0, 1.5, 0.5],
        };
        assert_eq!(s.total(), 5.0);
        assert_eq!(s.relative(), vec![0.6, 0.3, 0.1]);
        assert_eq!(s.sample_size(), 4);
    }

    #[test]
    fn accrue_by_class() {
        let mut s = BranchLengthSpectrum::zeros(4);
        s.accrue(&[1, 1, 2], 0.5);
        assert_eq!(s.lengths, vec![1.0, 0.5, 0.0]);
    }
}
