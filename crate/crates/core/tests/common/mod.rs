#![allow(dead_code)]

use phyloest::{GenotypeKey, Phylogeny, TaxonId};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random forest together with the parent links used to build it, kept
/// independently of the phylogeny so oracles do not read it back.
pub struct RandomTree {
    pub phylo: Phylogeny,
    /// `ids[i]` is the taxon created for node `i`.
    pub ids: Vec<TaxonId>,
    pub parent: Vec<Option<usize>>,
    /// `scores[i][c]` is node `i`'s evaluation on case `c`, if any.
    pub scores: Vec<Vec<Option<f64>>>,
}

/// Builds `n` taxa; each new node attaches to a uniformly chosen earlier node
/// (or starts a new root with probability `root_p`). Each (node, case) pair is
/// evaluated with probability `eval_p`, scored with a value unique to the node.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize, num_cases: usize, root_p: f64, eval_p: f64) -> RandomTree {
    let mut phylo = Phylogeny::new(num_cases);
    let mut ids = Vec::with_capacity(n);
    let mut parent = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let p = if i == 0 || rng.random::<f64>() < root_p { None } else { Some(rng.random_range(0..i)) };
        let id = phylo.register_birth(GenotypeKey(i as u64), p.map(|p| ids[p])).unwrap();
        ids.push(id);
        parent.push(p);
        let mut row = vec![None; num_cases];
        for (c, slot) in row.iter_mut().enumerate() {
            if rng.random::<f64>() < eval_p {
                let s = (i * num_cases + c) as f64;
                phylo.record_evaluation(id, c, s).unwrap();
                *slot = Some(s);
            }
        }
        scores.push(row);
    }
    RandomTree { phylo, ids, parent, scores }
}

/// All-pairs shortest paths over the undirected parent links (Floyd-Warshall);
/// `None` when nodes are in different trees.
pub fn all_pairs(parent: &[Option<usize>]) -> Vec<Vec<Option<u32>>> {
    let n = parent.len();
    let mut d = vec![vec![None; n]; n];
    for i in 0..n {
        d[i][i] = Some(0);
        if let Some(p) = parent[i] {
            d[i][p] = Some(1);
            d[p][i] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(kj) = d[k][j] {
                    if d[i][j].is_none_or(|ij| ik + kj < ij) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

/// One randomized population history replayed onto a phylogeny: each step
/// evaluates some individuals, then replaces the population with offspring
/// of random parents (clones share their parent's taxon).
pub struct Trace {
    pub phylo: Phylogeny,
    pub population: Vec<TaxonId>,
    next_key: u64,
    keys: std::collections::HashMap<TaxonId, GenotypeKey>,
}

impl Trace {
    pub fn new(pop: usize, num_cases: usize) -> Self {
        let mut phylo = Phylogeny::new(num_cases);
        let mut keys = std::collections::HashMap::new();
        let population = (0..pop)
            .map(|i| {
                let key = GenotypeKey(i as u64);
                let id = phylo.register_birth(key, None).unwrap();
                keys.insert(id, key);
                id
            })
            .collect();
        Trace { phylo, population, next_key: pop as u64, keys }
    }

    pub fn step(&mut self, rng: &mut ChaCha8Rng, clone_p: f64, eval_p: f64) {
        let num_cases = self.phylo.num_cases();
        for &t in &self.population {
            for c in 0..num_cases {
                if rng.random::<f64>() < eval_p {
                    // same genotype, same score
                    let s = ((self.keys[&t].0 * 7 + c as u64) % 5) as f64;
                    self.phylo.record_evaluation(t, c, s).unwrap();
                }
            }
        }
        let gen = self.phylo.generation() + 1;
        self.phylo.set_generation(gen);
        let mut next = Vec::with_capacity(self.population.len());
        for _ in 0..self.population.len() {
            let &parent = self.population.choose(rng).unwrap();
            let key = if rng.random::<f64>() < clone_p {
                self.keys[&parent]
            } else {
                self.next_key += 1;
                GenotypeKey(self.next_key)
            };
            let id = self.phylo.register_birth(key, Some(parent)).unwrap();
            self.keys.insert(id, key);
            next.push(id);
        }
        for &t in &self.population {
            self.phylo.register_death(t).unwrap();
        }
        self.population = next;
    }

    pub fn extant(&self) -> Vec<TaxonId> {
        let mut v = self.population.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}
