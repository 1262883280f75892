//! Runtime phylogeny tracking at genotype granularity.
//!
//! Taxa are stored in a hash map keyed by a monotonically increasing id, so ids
//! are never reused and a lower id always means an older taxon. Each taxon
//! carries the scores it has been directly evaluated on; the two searches
//! used for fitness estimation walk the tree looking for the closest taxon
//! that carries a score for a given training case.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TaxonId(pub u64);

impl fmt::Display for TaxonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Opaque genotype identity supplied by the caller (typically a hash of the
/// genome).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GenotypeKey(pub u64);

#[derive(Clone, Debug)]
pub struct Taxon {
    id: TaxonId,
    parent: Option<TaxonId>,
    genotype: GenotypeKey,
    origin_generation: u64,
    extant_count: usize,
    // kept sorted ascending; ids are allocated in increasing order
    children: Vec<TaxonId>,
    // dense, NaN = not evaluated; empty until the first evaluation lands
    evals: Vec<f64>,
    num_evaluated: usize,
}

impl Taxon {
    pub fn id(&self) -> TaxonId {
        self.id
    }

    pub fn parent(&self) -> Option<TaxonId> {
        self.parent
    }

    pub fn genotype(&self) -> GenotypeKey {
        self.genotype
    }

    pub fn origin_generation(&self) -> u64 {
        self.origin_generation
    }

    pub fn extant_count(&self) -> usize {
        self.extant_count
    }

    pub fn is_extant(&self) -> bool {
        self.extant_count > 0
    }

    pub fn children(&self) -> &[TaxonId] {
        &self.children
    }

    pub fn evaluation(&self, case: usize) -> Option<f64> {
        self.evals.get(case).copied().filter(|s| !s.is_nan())
    }

    pub fn num_evaluated(&self) -> usize {
        self.num_evaluated
    }

    /// All recorded `(case, score)` pairs in case order.
    pub fn evaluations(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.evals
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_nan())
            .map(|(i, s)| (i, *s))
    }

    fn neighbours(&self) -> impl Iterator<Item = TaxonId> + '_ {
        self.parent.into_iter().chain(self.children.iter().copied())
    }
}

#[derive(Clone, Debug)]
pub struct Phylogeny {
    taxa: HashMap<TaxonId, Taxon>,
    next_id: u64,
    num_cases: usize,
    generation: u64,
    // taxa that went extinct since the last prune
    newly_extinct: Vec<TaxonId>,
}

impl Phylogeny {
    /// An empty phylogeny whose taxa can be annotated with scores on
    /// `num_cases` training cases.
    pub fn new(num_cases: usize) -> Self {
        Phylogeny {
            taxa: HashMap::new(),
            next_id: 0,
            num_cases,
            generation: 0,
            newly_extinct: Vec::new(),
        }
    }

    pub fn num_cases(&self) -> usize {
        self.num_cases
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Sets the generation stamped on newly created taxa.
    pub fn set_generation(&mut self, generation: u64) {
        self.generation = generation;
    }

    pub fn len(&self) -> usize {
        self.taxa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxa.is_empty()
    }

    pub fn get(&self, id: TaxonId) -> Option<&Taxon> {
        self.taxa.get(&id)
    }

    pub fn contains(&self, id: TaxonId) -> bool {
        self.taxa.contains_key(&id)
    }

    fn taxon(&self, id: TaxonId) -> Result<&Taxon> {
        self.taxa.get(&id).ok_or(Error::UnknownTaxon(id))
    }

    fn taxon_mut(&mut self, id: TaxonId) -> Result<&mut Taxon> {
        self.taxa.get_mut(&id).ok_or(Error::UnknownTaxon(id))
    }

    /// All stored taxa in id order.
    pub fn taxa_sorted(&self) -> Vec<&Taxon> {
        let mut v: Vec<&Taxon> = self.taxa.values().collect();
        v.sort_unstable_by_key(|t| t.id);
        v
    }

    pub fn extant_total(&self) -> usize {
        self.taxa.values().map(|t| t.extant_count).sum()
    }

    /// Registers one new individual. An offspring whose genotype matches its
    /// parent's joins the parent taxon; anything else founds a new taxon
    /// (a root when `parent` is `None`).
    pub fn register_birth(&mut self, genotype: GenotypeKey, parent: Option<TaxonId>) -> Result<TaxonId> {
        if let Some(pid) = parent {
            let p = self.taxon_mut(pid)?;
            if p.genotype == genotype {
                p.extant_count += 1;
                return Ok(pid);
            }
        }
        let id = TaxonId(self.next_id);
        self.next_id += 1;
        if let Some(pid) = parent {
            // ids grow monotonically, so pushing keeps children sorted
            self.taxa.get_mut(&pid).expect("checked above").children.push(id);
        }
        self.taxa.insert(
            id,
            Taxon {
                id,
                parent,
                genotype,
                origin_generation: self.generation,
                extant_count: 1,
                children: Vec::new(),
                evals: Vec::new(),
                num_evaluated: 0,
            },
        );
        Ok(id)
    }

    pub fn register_death(&mut self, id: TaxonId) -> Result<()> {
        let t = self.taxon_mut(id)?;
        if t.extant_count == 0 {
            return Err(Error::NotExtant(id));
        }
        t.extant_count -= 1;
        if t.extant_count == 0 {
            self.newly_extinct.push(id);
        }
        Ok(())
    }

    /// Stores `score` for `case` on the taxon, replacing any earlier score for
    /// the same case.
    pub fn record_evaluation(&mut self, id: TaxonId, case: usize, score: f64) -> Result<()> {
        let num_cases = self.num_cases;
        if case >= num_cases {
            return Err(Error::CaseOutOfRange { index: case, num_cases });
        }
        let t = self.taxon_mut(id)?;
        if t.evals.is_empty() {
            t.evals = vec![f64::NAN; num_cases];
        }
        if t.evals[case].is_nan() {
            t.num_evaluated += 1;
        }
        t.evals[case] = score;
        Ok(())
    }

    /// Removes every extinct taxon without extant descendants and returns how
    /// many were removed.
    ///
    /// Only taxa that went extinct since the previous call (and their
    /// ancestors) are inspected, so a call costs time proportional to the
    /// removed branch lengths.
    pub fn prune_extinct(&mut self) -> usize {
        let mut removed = 0;
        let pending = std::mem::take(&mut self.newly_extinct);
        for start in pending {
            let mut cur = Some(start);
            while let Some(id) = cur {
                let Some(t) = self.taxa.get(&id) else { break };
                if t.extant_count > 0 || !t.children.is_empty() {
                    break;
                }
                let parent = t.parent;
                self.taxa.remove(&id);
                removed += 1;
                if let Some(pid) = parent {
                    if let Some(p) = self.taxa.get_mut(&pid) {
                        if let Ok(pos) = p.children.binary_search(&id) {
                            p.children.remove(pos);
                        }
                    }
                }
                cur = parent;
            }
        }
        removed
    }

    /// Removes extinct taxa farther than `max_distance` edges from every
    /// extant taxon. Searches from extant taxa bounded by `max_distance` give
    /// the same answers afterwards; children of removed taxa become roots.
    pub fn trim_distant(&mut self, max_distance: u32) -> usize {
        let mut seen: HashSet<TaxonId> = HashSet::new();
        let mut frontier: Vec<TaxonId> = self
            .taxa
            .values()
            .filter(|t| t.is_extant())
            .map(|t| t.id)
            .collect();
        seen.extend(frontier.iter().copied());
        for _ in 0..max_distance {
            let mut next = Vec::new();
            for id in &frontier {
                for n in self.taxa[id].neighbours() {
                    if seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        if seen.len() == self.taxa.len() {
            return 0;
        }
        let doomed: Vec<TaxonId> = self
            .taxa
            .keys()
            .filter(|id| !seen.contains(id))
            .copied()
            .collect();
        for id in &doomed {
            let t = self.taxa.remove(id).expect("present");
            for c in t.children {
                if let Some(child) = self.taxa.get_mut(&c) {
                    child.parent = None;
                }
            }
            if let Some(pid) = t.parent {
                if let Some(p) = self.taxa.get_mut(&pid) {
                    if let Ok(pos) = p.children.binary_search(id) {
                        p.children.remove(pos);
                    }
                }
            }
        }
        self.newly_extinct.retain(|id| seen.contains(id));
        doomed.len()
    }

    /// Taxa on the line of descent of `start`: `start` itself, then its
    /// parent, and so on, at most `max_depth` edges up.
    pub fn lineage(&self, start: TaxonId, max_depth: u32) -> Result<Vec<TaxonId>> {
        let mut out = vec![start];
        let mut cur = self.taxon(start)?;
        while out.len() <= max_depth as usize {
            let Some(pid) = cur.parent else { break };
            out.push(pid);
            cur = self.taxon(pid)?;
        }
        Ok(out)
    }

    /// Walks from `start` up through its ancestors (at most `max_depth` edges)
    /// and returns the score and edge distance of the first taxon evaluated on
    /// `case`.
    pub fn nearest_evaluated_ancestor(
        &self,
        start: TaxonId,
        case: usize,
        max_depth: u32,
    ) -> Option<(f64, u32)> {
        let mut cur = self.taxa.get(&start)?;
        let mut dist = 0u32;
        loop {
            if let Some(s) = cur.evaluation(case) {
                return Some((s, dist));
            }
            if dist == max_depth {
                return None;
            }
            cur = self.taxa.get(&cur.parent?)?;
            dist += 1;
        }
    }

    /// Every taxon within `max_distance` undirected edges of `start`, ordered
    /// by distance and then by id.
    pub fn relatives_within(&self, start: TaxonId, max_distance: u32) -> Vec<(TaxonId, u32)> {
        let mut out = Vec::new();
        self.bfs_levels(start, max_distance, |level, dist| {
            out.extend(level.iter().map(|&id| (id, dist)));
            false
        });
        out
    }

    /// Breadth-first search over parent and child edges from `start` for the
    /// closest taxon evaluated on `case`, at most `max_distance` edges away.
    /// Ties at equal distance go to the lowest taxon id.
    pub fn nearest_evaluated_relative(
        &self,
        start: TaxonId,
        case: usize,
        max_distance: u32,
    ) -> Option<(f64, u32)> {
        let mut hit = None;
        self.bfs_levels(start, max_distance, |level, dist| {
            hit = level
                .iter()
                .find_map(|id| self.taxa[id].evaluation(case))
                .map(|s| (s, dist));
            hit.is_some()
        });
        hit
    }

    /// Visits BFS levels in order, each sorted by id, until `visit` returns
    /// true or the distance bound is reached.
    fn bfs_levels<F>(&self, start: TaxonId, max_distance: u32, mut visit: F)
    where
        F: FnMut(&[TaxonId], u32) -> bool,
    {
        if !self.taxa.contains_key(&start) {
            return;
        }
        let mut seen = HashSet::from([start]);
        let mut level = vec![start];
        let mut dist = 0;
        loop {
            if visit(&level, dist) || dist == max_distance {
                return;
            }
            let mut next = Vec::new();
            for id in &level {
                for n in self.taxa[id].neighbours() {
                    if seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            if next.is_empty() {
                return;
            }
            next.sort_unstable();
            level = next;
            dist += 1;
        }
    }

    /// Checks parent/child link consistency and acyclicity. Intended for tests
    /// and debug assertions.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        for t in self.taxa.values() {
            if let Some(p) = t.parent {
                let parent = self
                    .taxa
                    .get(&p)
                    .ok_or_else(|| format!("taxon {} has missing parent {p}", t.id))?;
                if parent.children.binary_search(&t.id).is_err() {
                    return Err(format!("parent {p} does not list child {}", t.id));
                }
                if p >= t.id {
                    return Err(format!("parent {p} is not older than child {}", t.id));
                }
            }
            if !t.children.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("children of {} not sorted", t.id));
            }
            for c in &t.children {
                match self.taxa.get(c) {
                    Some(child) if child.parent == Some(t.id) => {}
                    _ => return Err(format!("child {c} of {} does not point back", t.id)),
                }
            }
        }
        // parents are strictly older than children, so links cannot form a cycle
        Ok(())
    }

    /// Writes one CSV row per stored taxon:
    /// `id,ancestor_id,origin_generation,extant_count,num_evaluated_cases`.
    /// Roots have an empty `ancestor_id`.
    pub fn write_snapshot<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "id",
            "ancestor_id",
            "origin_generation",
            "extant_count",
            "num_evaluated_cases",
        ])?;
        for t in self.taxa_sorted() {
            w.write_record([
                t.id.to_string(),
                t.parent.map(|p| p.to_string()).unwrap_or_default(),
                t.origin_generation.to_string(),
                t.extant_count.to_string(),
                t.num_evaluated.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
