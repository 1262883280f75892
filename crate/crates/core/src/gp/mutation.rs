use rand::Rng;
use serde::{Deserialize, Serialize};

use super::machine::{Instruction, LinearProgram};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationRates {
    pub insertion: f64,
    pub deletion: f64,
    pub substitution: f64,
    /// Per-program probability of one slip (segment duplication or deletion).
    pub slip: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        MutationRates { insertion: 0.001, deletion: 0.001, substitution: 0.001, slip: 0.05 }
    }
}

impl MutationRates {
    pub fn none() -> Self {
        MutationRates { insertion: 0.0, deletion: 0.0, substitution: 0.0, slip: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MutationCounts {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub slip_duplications: usize,
    pub slip_deletions: usize,
}

fn chance<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    p > 0.0 && rng.random::<f64>() < p
}

/// Mutates a copy of `program` and returns it with a tally of what happened.
///
/// Each original instruction independently may have a random instruction
/// inserted before it, be deleted, or be replaced. Afterwards a slip picks two
/// positions and duplicates or deletes (even odds) the segment between them.
/// The result keeps between 1 and `max_len` instructions.
pub fn mutate_program_counted<R: Rng + ?Sized>(
    program: &LinearProgram,
    rates: &MutationRates,
    max_len: usize,
    rng: &mut R,
) -> (LinearProgram, MutationCounts) {
    let mut counts = MutationCounts::default();
    let mut code: Vec<Instruction> = Vec::with_capacity(program.len() + 4);
    for &inst in program.instructions() {
        if chance(rates.insertion, rng) {
            code.push(Instruction::random(rng));
            counts.insertions += 1;
        }
        if chance(rates.deletion, rng) {
            counts.deletions += 1;
            continue;
        }
        if chance(rates.substitution, rng) {
            code.push(Instruction::random(rng));
            counts.substitutions += 1;
        } else {
            code.push(inst);
        }
    }
    if code.is_empty() {
        // every instruction was deleted; keep one so the program stays valid
        code.push(Instruction::random(rng));
    }
    if chance(rates.slip, rng) {
        let x = rng.random_range(0..code.len());
        let y = rng.random_range(0..code.len());
        let (i, j) = (x.min(y), x.max(y));
        if rng.random::<bool>() {
            let segment: Vec<Instruction> = code[i..=j].to_vec();
            code.splice(j + 1..j + 1, segment);
            counts.slip_duplications += 1;
        } else if j - i + 1 < code.len() {
            code.drain(i..=j);
            counts.slip_deletions += 1;
        }
    }
    code.truncate(max_len.max(1));
    let mut out = program.clone();
    *out.instructions_mut() = code;
    (out, counts)
}

pub fn mutate_program<R: Rng + ?Sized>(
    program: &LinearProgram,
    rates: &MutationRates,
    max_len: usize,
    rng: &mut R,
) -> LinearProgram {
    mutate_program_counted(program, rates, max_len, rng).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn zero_rates_identity() {
        let mut rng = RngStream::new(1);
        let p = LinearProgram::random(40, rng.init());
        assert_eq!(mutate_program(&p, &MutationRates::none(), 64, rng.mutation()), p);
    }

    #[test]
    fn slip_duplication_grows_by_segment() {
        let rates = MutationRates { slip: 1.0, ..MutationRates::none() };
        let mut rng = RngStream::new(2);
        let p = LinearProgram::random(20, rng.init());
        let mut seen_dup = false;
        for _ in 0..200 {
            let (m, c) = mutate_program_counted(&p, &rates, 1000, rng.mutation());
            if c.slip_duplications == 1 {
                seen_dup = true;
                let grown = m.len() - p.len();
                assert!(grown >= 1 && grown <= p.len());
                // the copy is inserted after the segment, so the head is unchanged
                assert_eq!(&m.instructions()[..1], &p.instructions()[..1]);
            }
            if c.slip_deletions == 1 {
                assert!(m.len() < p.len() && !m.is_empty());
            }
        }
        assert!(seen_dup);
    }

    #[test]
    fn slip_capped_at_max_len() {
        let rates = MutationRates { slip: 1.0, ..MutationRates::none() };
        let mut rng = RngStream::new(3);
        let p = LinearProgram::random(64, rng.init());
        for _ in 0..100 {
            assert!(mutate_program(&p, &rates, 64, rng.mutation()).len() <= 64);
        }
    }

    #[test]
    fn insertion_rate_audit() {
        let rates = MutationRates::default();
        let mut rng = RngStream::new(4);
        let p = LinearProgram::random(64, rng.init());
        let n = 10_000;
        let total: usize =
            (0..n).map(|_| mutate_program_counted(&p, &rates, 64, rng.mutation()).1.insertions).sum();
        let mean = total as f64 / n as f64;
        // Binomial(64, 0.001): mean 0.064, sd of the average ~ 0.0025
        assert!((mean - 0.064).abs() < 4.0 * (0.064f64 * 0.999 / n as f64).sqrt(), "{mean}");
    }

    proptest! {
        #[test]
        fn mutants_are_valid(seed: u64, len in 1usize..=64, heavy: bool) {
            let rates = if heavy {
                MutationRates { insertion: 0.3, deletion: 0.3, substitution: 0.3, slip: 0.5 }
            } else {
                MutationRates::default()
            };
            let mut rng = RngStream::new(seed);
            let p = LinearProgram::random(len, rng.init());
            let m = mutate_program(&p, &rates, 64, rng.mutation());
            prop_assert!(!m.is_empty() && m.len() <= 64);
            prop_assert!(m.instructions().iter().all(|i| i.args.iter().all(|&a| (a as usize) < super::super::machine::NUM_REGISTERS)));
        }
    }
}
