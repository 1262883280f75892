use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const GENE_MIN: f64 = 0.0;
pub const GENE_MAX: f64 = 100.0;

/// Fixed-length real-valued genome used by the diagnostics. Genes always lie
/// in `[GENE_MIN, GENE_MAX]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericGenome {
    genes: Vec<f64>,
}

impl NumericGenome {
    /// Builds a genome, clamping every gene into range.
    pub fn new(genes: Vec<f64>) -> Self {
        NumericGenome {
            genes: genes.into_iter().map(clamp_gene).collect(),
        }
    }

    pub fn zeros(len: usize) -> Self {
        NumericGenome { genes: vec![0.0; len] }
    }

    /// Genes drawn uniformly from `[GENE_MIN, max]`.
    pub fn random<R: Rng + ?Sized>(len: usize, max: f64, rng: &mut R) -> Self {
        let hi = clamp_gene(max);
        let genes = (0..len).map(|_| rng.random_range(GENE_MIN..=hi)).collect();
        NumericGenome { genes }
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Stable identity of the gene values, used as the phylogeny genotype key.
    pub fn key_bits(&self) -> impl Iterator<Item = u64> + '_ {
        self.genes.iter().map(|g| (g + 0.0).to_bits())
    }
}

fn clamp_gene(g: f64) -> f64 {
    g.clamp(GENE_MIN, GENE_MAX)
}

/// Adds a `N(0, sigma)` draw to each gene with probability `per_gene_rate`,
/// clamping the result into range. The input genome is left untouched.
///
/// Panics if `sigma` is not finite and positive or the rate is outside [0, 1].
pub fn mutate_gaussian<R: Rng + ?Sized>(
    genome: &NumericGenome,
    per_gene_rate: f64,
    sigma: f64,
    rng: &mut R,
) -> NumericGenome {
    assert!((0.0..=1.0).contains(&per_gene_rate), "per-gene rate must be in [0, 1]");
    assert!(sigma > 0.0, "sigma must be positive");
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite");
    let genes = genome
        .genes
        .iter()
        .map(|&g| {
            if per_gene_rate > 0.0 && rng.random::<f64>() < per_gene_rate {
                clamp_gene(g + normal.sample(rng))
            } else {
                g
            }
        })
        .collect();
    NumericGenome { genes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = RngStream::new(3);
        let g = NumericGenome::random(50, 100.0, rng.init());
        let m = mutate_gaussian(&g, 0.0, 1.0, rng.mutation());
        assert_eq!(g, m);
    }

    #[test]
    fn upper_bound_clamps() {
        let mut rng = RngStream::new(11);
        let g = NumericGenome::new(vec![100.0; 200]);
        let m = mutate_gaussian(&g, 1.0, 1.0, rng.mutation());
        assert!(m.genes().iter().all(|&x| x <= 100.0));
        // roughly half the draws are positive and must have stuck at the bound
        let at_bound = m.genes().iter().filter(|&&x| x == 100.0).count();
        assert!(at_bound > 60, "{at_bound}");
    }

    #[test]
    fn new_clamps_out_of_range() {
        let g = NumericGenome::new(vec![-3.0, 50.0, 120.0]);
        assert_eq!(g.genes(), &[0.0, 50.0, 100.0]);
    }

    #[test]
    fn gaussian_moments() {
        // Genes start mid-range so no draw reaches a bound.
        let n = 10_000;
        let g = NumericGenome::new(vec![50.0; n]);
        let mut rng = RngStream::new(2024);
        let m = mutate_gaussian(&g, 1.0, 1.0, rng.mutation());
        let d: Vec<f64> = m.genes().iter().map(|x| x - 50.0).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() <= 3.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() <= 0.05, "sd {}", var.sqrt());
    }

    proptest! {
        #[test]
        fn mutation_stays_in_range(
            genes in prop::collection::vec(0.0f64..=100.0, 1..64),
            rate in 0.0f64..=1.0,
            sigma in 0.01f64..50.0,
            seed: u64,
        ) {
            let g = NumericGenome::new(genes);
            let mut rng = RngStream::new(seed);
            let m = mutate_gaussian(&g, rate, sigma, rng.mutation());
            prop_assert_eq!(m.len(), g.len());
            prop_assert!(m.genes().iter().all(|&x| (GENE_MIN..=GENE_MAX).contains(&x)));
        }

        #[test]
        fn mutation_is_deterministic(seed: u64, rate in 0.0f64..=1.0) {
            let g = NumericGenome::new(vec![10.0, 99.5, 0.5, 42.0]);
            let a = mutate_gaussian(&g, rate, 1.0, RngStream::new(seed).mutation());
            let b = mutate_gaussian(&g, rate, 1.0, RngStream::new(seed).mutation());
            prop_assert_eq!(a, b);
        }
    }
}
