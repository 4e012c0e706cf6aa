//! Crash-precedence partial orders over the fault-prone stations.
//!
//! A [`Poset`] is stored as its transitive reduction (the cover pairs) plus
//! bitset rows of the full strict order in both directions, so that
//! comparability and crash-legality queries are a handful of word operations.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::StationId;

/// Default element cap for the exact antichain / chain-cover entry points.
pub const DEFAULT_EXACT_CAP: usize = 20;

/// Below this many elements the maximum antichain is brute-forced.
const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosetError {
    #[error("relation closure contains a cycle through {0}")]
    CycleDetected(StationId),
    #[error("relation mentions {0}, which is not an element")]
    UnknownElement(StationId),
    #[error("{0} is not in the fault-prone set")]
    NotFaultProne(StationId),
    #[error("poset has {size} elements, exact-solve cap is {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("chain lengths sum to {sum}, expected {expected}")]
    BadLengths { sum: usize, expected: usize },
    #[error("edge density {0} outside [0, 1]")]
    BadDensity(f64),
    #[error("duplicate element {0}")]
    DuplicateElement(StationId),
    #[error("batch crash of {0} violates the order")]
    IllegalBatch(StationId),
}

/// A finite strict partial order on station ids.
#[derive(Clone, Debug)]
pub struct Poset {
    elements: Vec<StationId>,
    index: BTreeMap<StationId, usize>,
    covers: Vec<(StationId, StationId)>,
    /// `below[i]`: indices strictly preceding element `i`.
    below: Vec<FixedBitSet>,
    /// `above[i]`: indices strictly following element `i`.
    above: Vec<FixedBitSet>,
}

/// A partition of the elements into chains, each listed bottom-up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDecomposition {
    pub chains: Vec<Vec<StationId>>,
}

impl ChainDecomposition {
    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }
}

impl PartialEq for Poset {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements && self.covers == other.covers
    }
}

impl Eq for Poset {}

/// Builds the transitive reduction of the transitive closure of `relations`.
/// A pair `(a, b)` means `a` must crash before `b` may.
pub fn build_poset(
    elements: &BTreeSet<StationId>,
    relations: &BTreeSet<(StationId, StationId)>,
) -> Result<Poset, PosetError> {
    Poset::new(elements.iter().copied(), relations.iter().copied())
}

impl Poset {
    pub fn new<E, R>(elements: E, relations: R) -> Result<Self, PosetError>
    where
        E: IntoIterator<Item = StationId>,
        R: IntoIterator<Item = (StationId, StationId)>,
    {
        let mut elements: Vec<StationId> = elements.into_iter().collect();
        elements.sort_unstable();
        if let Some(w) = elements.windows(2).find(|w| w[0] == w[1]) {
            return Err(PosetError::DuplicateElement(w[0]));
        }
        let n = elements.len();
        let index: BTreeMap<StationId, usize> =
            elements.iter().enumerate().map(|(i, &s)| (s, i)).collect();

        let mut above = vec![FixedBitSet::with_capacity(n); n];
        for (a, b) in relations {
            let ia = *index.get(&a).ok_or(PosetError::UnknownElement(a))?;
            let ib = *index.get(&b).ok_or(PosetError::UnknownElement(b))?;
            above[ia].insert(ib);
        }

        // Warshall closure on bitset rows.
        for k in 0..n {
            let row_k = above[k].clone();
            for row in above.iter_mut() {
                if row.contains(k) {
                    row.union_with(&row_k);
                }
            }
        }
        if let Some(i) = (0..n).find(|&i| above[i].contains(i)) {
            return Err(PosetError::CycleDetected(elements[i]));
        }

        let mut below = vec![FixedBitSet::with_capacity(n); n];
        for (i, row) in above.iter().enumerate() {
            for j in row.ones() {
                below[j].insert(i);
            }
        }

        let mut covers = Vec::new();
        for a in 0..n {
            for b in above[a].ones() {
                if above[a].is_disjoint(&below[b]) {
                    covers.push((elements[a], elements[b]));
                }
            }
        }
        covers.sort_unstable();

        Ok(Poset {
            elements,
            index,
            covers,
            below,
            above,
        })
    }

    /// The empty order on `elements` (every pair incomparable).
    pub fn antichain_of(elements: &[StationId]) -> Self {
        Poset::new(elements.iter().copied(), std::iter::empty())
            .expect("an antichain has no relations to violate")
    }

    /// A linear order in the given sequence.
    pub fn chain_of(sequence: &[StationId]) -> Result<Self, PosetError> {
        Poset::new(
            sequence.iter().copied(),
            sequence.windows(2).map(|w| (w[0], w[1])),
        )
    }

    pub fn elements(&self) -> &[StationId] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn covers(&self) -> &[(StationId, StationId)] {
        &self.covers
    }

    pub fn contains(&self, s: StationId) -> bool {
        self.index.contains_key(&s)
    }

    pub fn index_of(&self, s: StationId) -> Option<usize> {
        self.index.get(&s).copied()
    }

    /// `a` strictly precedes `b`.
    pub fn precedes(&self, a: StationId, b: StationId) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(ia), Some(ib)) => self.above[ia].contains(ib),
            _ => false,
        }
    }

    pub fn comparable(&self, a: StationId, b: StationId) -> bool {
        self.precedes(a, b) || self.precedes(b, a)
    }

    /// Strict predecessors of `s`, ascending.
    pub fn predecessors(&self, s: StationId) -> Vec<StationId> {
        self.index_of(s)
            .map(|i| self.below[i].ones().map(|j| self.elements[j]).collect())
            .unwrap_or_default()
    }

    /// Whether `candidate` may be crashed once `already_crashed` are down.
    pub fn crash_is_legal(
        &self,
        already_crashed: &BTreeSet<StationId>,
        candidate: StationId,
    ) -> Result<bool, PosetError> {
        let i = self
            .index_of(candidate)
            .ok_or(PosetError::NotFaultProne(candidate))?;
        Ok(self.below[i]
            .ones()
            .all(|j| already_crashed.contains(&self.elements[j])))
    }

    /// Same as [`Poset::crash_is_legal`] over an index bitset of crashed elements.
    pub(crate) fn legal_by_index(&self, crashed: &FixedBitSet, i: usize) -> bool {
        self.below[i].is_subset(crashed)
    }

    /// Validates a same-round batch: the batch is ordered topologically and each
    /// member is checked with the earlier batch members counted as crashed.
    /// Returns the batch in the order it may be applied.
    pub fn validate_batch(
        &self,
        already_crashed: &BTreeSet<StationId>,
        batch: &[StationId],
    ) -> Result<Vec<StationId>, PosetError> {
        let mut crashed = FixedBitSet::with_capacity(self.len());
        for s in already_crashed {
            if let Some(i) = self.index_of(*s) {
                crashed.insert(i);
            }
        }
        let mut idx = Vec::with_capacity(batch.len());
        for &s in batch {
            idx.push(self.index_of(s).ok_or(PosetError::NotFaultProne(s))?);
        }
        // Sorting by predecessor count is a linear extension of the order.
        idx.sort_by_key(|&i| (self.below[i].count_ones(..), i));
        idx.dedup();
        let mut ordered = Vec::with_capacity(idx.len());
        for i in idx {
            if !self.legal_by_index(&crashed, i) {
                return Err(PosetError::IllegalBatch(self.elements[i]));
            }
            crashed.insert(i);
            ordered.push(self.elements[i]);
        }
        Ok(ordered)
    }

    /// A linear extension of the order (ascending by depth, then id).
    pub fn topological_order(&self) -> Vec<StationId> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by_key(|&i| (self.below[i].count_ones(..), i));
        idx.into_iter().map(|i| self.elements[i]).collect()
    }

    /// Maximum antichain, exact, refusing posets above [`DEFAULT_EXACT_CAP`].
    pub fn max_antichain(&self) -> Result<BTreeSet<StationId>, PosetError> {
        self.max_antichain_capped(DEFAULT_EXACT_CAP)
    }

    pub fn max_antichain_capped(&self, cap: usize) -> Result<BTreeSet<StationId>, PosetError> {
        self.check_cap(cap)?;
        if self.len() < BRUTE_FORCE_LIMIT {
            Ok(self.brute_force_antichain())
        } else {
            Ok(self.konig_antichain())
        }
    }

    /// Minimum chain cover via maximum matching on the comparability split.
    pub fn min_chain_cover(&self) -> Result<ChainDecomposition, PosetError> {
        self.min_chain_cover_capped(DEFAULT_EXACT_CAP)
    }

    pub fn min_chain_cover_capped(&self, cap: usize) -> Result<ChainDecomposition, PosetError> {
        self.check_cap(cap)?;
        Ok(self.chain_cover_uncapped())
    }

    /// Thickness (maximum antichain size) with no size cap. Polynomial.
    pub fn thickness(&self) -> usize {
        self.len() - self.matching().0
    }

    fn check_cap(&self, cap: usize) -> Result<(), PosetError> {
        if self.len() > cap {
            Err(PosetError::TooLarge {
                size: self.len(),
                cap,
            })
        } else {
            Ok(())
        }
    }

    fn brute_force_antichain(&self) -> BTreeSet<StationId> {
        let n = self.len();
        let mut best: u64 = 0;
        for mask in 0u64..(1u64 << n) {
            if mask.count_ones() <= best.count_ones() {
                continue;
            }
            let independent = (0..n).filter(|&i| mask >> i & 1 == 1).all(|i| {
                self.above[i]
                    .ones()
                    .chain(self.below[i].ones())
                    .all(|j| mask >> j & 1 == 0)
            });
            if independent {
                best = mask;
            }
        }
        (0..n)
            .filter(|&i| best >> i & 1 == 1)
            .map(|i| self.elements[i])
            .collect()
    }

    /// Kuhn's augmenting-path matching on left copy -> right copy along `a < b`.
    /// Returns (matching size, match_of_right).
    fn matching(&self) -> (usize, Vec<Option<usize>>) {
        let n = self.len();
        let mut match_right: Vec<Option<usize>> = vec![None; n];
        let mut size = 0;
        for u in 0..n {
            let mut seen = FixedBitSet::with_capacity(n);
            if self.augment(u, &mut seen, &mut match_right) {
                size += 1;
            }
        }
        (size, match_right)
    }

    fn augment(&self, u: usize, seen: &mut FixedBitSet, match_right: &mut [Option<usize>]) -> bool {
        for v in self.above[u].ones() {
            if seen.put(v) {
                continue;
            }
            let free = match match_right[v] {
                None => true,
                Some(w) => self.augment(w, seen, match_right),
            };
            if free {
                match_right[v] = Some(u);
                return true;
            }
        }
        false
    }

    fn chain_cover_uncapped(&self) -> ChainDecomposition {
        let n = self.len();
        let (_, match_right) = self.matching();
        let mut next: Vec<Option<usize>> = vec![None; n];
        for (v, m) in match_right.iter().enumerate() {
            if let Some(u) = m {
                next[*u] = Some(v);
            }
        }
        let mut chains = Vec::new();
        for start in (0..n).filter(|&v| match_right[v].is_none()) {
            let mut chain = vec![self.elements[start]];
            let mut cur = start;
            while let Some(v) = next[cur] {
                chain.push(self.elements[v]);
                cur = v;
            }
            chains.push(chain);
        }
        ChainDecomposition { chains }
    }

    /// König: the vertices reachable from free left vertices by alternating
    /// paths give a minimum vertex cover whose complement is a maximum antichain.
    fn konig_antichain(&self) -> BTreeSet<StationId> {
        let n = self.len();
        let (_, match_right) = self.matching();
        let mut match_left: Vec<Option<usize>> = vec![None; n];
        for (v, m) in match_right.iter().enumerate() {
            if let Some(u) = m {
                match_left[*u] = Some(v);
            }
        }
        let mut left_seen = FixedBitSet::with_capacity(n);
        let mut right_seen = FixedBitSet::with_capacity(n);
        let mut stack: Vec<usize> = (0..n).filter(|&u| match_left[u].is_none()).collect();
        for &u in &stack {
            left_seen.insert(u);
        }
        while let Some(u) = stack.pop() {
            for v in self.above[u].ones() {
                if right_seen.put(v) {
                    continue;
                }
                if let Some(w) = match_right[v] {
                    if !left_seen.put(w) {
                        stack.push(w);
                    }
                }
            }
        }
        (0..n)
            .filter(|&x| left_seen.contains(x) && !right_seen.contains(x))
            .map(|x| self.elements[x])
            .collect()
    }

    /// Renames elements through `mapping` (must be injective on the elements).
    pub fn relabel(&self, mapping: &BTreeMap<StationId, StationId>) -> Result<Poset, PosetError> {
        let map = |s: StationId| *mapping.get(&s).unwrap_or(&s);
        Poset::new(
            self.elements.iter().map(|&s| map(s)),
            self.covers.iter().map(|&(a, b)| (map(a), map(b))),
        )
    }
}

/// Families of orders used by the adversary hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PosetFamily {
    /// Linear order (Linearly-Ordered adversary).
    Chain { f: usize },
    /// No relations (Weakly-Adaptive adversary).
    Antichain { f: usize },
    /// Disjoint chains of the given lengths, no cross relations.
    KChains { lengths: Vec<usize> },
    /// Random DAG, deterministic in `seed`.
    Random {
        f: usize,
        edge_density: f64,
        seed: u64,
    },
}

impl PosetFamily {
    pub fn size(&self) -> usize {
        match self {
            PosetFamily::Chain { f }
            | PosetFamily::Antichain { f }
            | PosetFamily::Random { f, .. } => *f,
            PosetFamily::KChains { lengths } => lengths.iter().sum(),
        }
    }

    /// `k` near-equal chain lengths summing to `f`.
    pub fn even_chains(f: usize, k: usize) -> Self {
        let k = k.max(1).min(f.max(1));
        let lengths = (0..k).map(|j| f / k + usize::from(j < f % k)).collect();
        PosetFamily::KChains { lengths }
    }
}

/// Generates a family member over elements `1..=f`.
pub fn generate(kind: &PosetFamily) -> Result<Poset, PosetError> {
    let elements: Vec<StationId> = (1..=kind.size() as u32).map(StationId).collect();
    generate_over(kind, &elements)
}

/// Generates a family member over the given elements, in the given order.
pub fn generate_over(kind: &PosetFamily, elements: &[StationId]) -> Result<Poset, PosetError> {
    if elements.len() != kind.size() {
        return Err(PosetError::BadLengths {
            sum: kind.size(),
            expected: elements.len(),
        });
    }
    match kind {
        PosetFamily::Chain { .. } => Poset::chain_of(elements),
        PosetFamily::Antichain { .. } => Ok(Poset::antichain_of(elements)),
        PosetFamily::KChains { lengths } => {
            let mut relations = Vec::new();
            let mut start = 0;
            for &len in lengths {
                let chain = &elements[start..start + len];
                relations.extend(chain.windows(2).map(|w| (w[0], w[1])));
                start += len;
            }
            Poset::new(elements.iter().copied(), relations)
        }
        PosetFamily::Random {
            edge_density, seed, ..
        } => {
            if !(0.0..=1.0).contains(edge_density) {
                return Err(PosetError::BadDensity(*edge_density));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut order = elements.to_vec();
            order.shuffle(&mut rng);
            let mut relations = Vec::new();
            for i in 0..order.len() {
                for j in i + 1..order.len() {
                    if rng.gen_bool(*edge_density) {
                        relations.push((order[i], order[j]));
                    }
                }
            }
            Poset::new(elements.iter().copied(), relations)
        }
    }
}

/// Poset literal as written in configuration files: either explicit
/// elements and covers, or a family to be laid over the fault-prone set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PosetLiteral {
    Explicit {
        elements: Vec<StationId>,
        #[serde(default)]
        covers: Vec<(StationId, StationId)>,
    },
    Family(FamilyLiteral),
}

/// Family literal; sizes default to the fault-prone set size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyLiteral {
    Chain,
    Antichain,
    KChains {
        #[serde(default)]
        lengths: Option<Vec<usize>>,
        #[serde(default)]
        k: Option<usize>,
    },
    Random {
        edge_density: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl PosetLiteral {
    /// Resolves the literal. Explicit literals ignore `fault_prone`; families
    /// are generated over it in ascending order.
    pub fn resolve(&self, fault_prone: &[StationId]) -> Result<Poset, PosetError> {
        match self {
            PosetLiteral::Explicit { elements, covers } => {
                Poset::new(elements.iter().copied(), covers.iter().copied())
            }
            PosetLiteral::Family(fam) => {
                let f = fault_prone.len();
                let kind = match fam {
                    FamilyLiteral::Chain => PosetFamily::Chain { f },
                    FamilyLiteral::Antichain => PosetFamily::Antichain { f },
                    FamilyLiteral::KChains {
                        lengths: Some(l), ..
                    } => PosetFamily::KChains { lengths: l.clone() },
                    FamilyLiteral::KChains { lengths: None, k } => {
                        PosetFamily::even_chains(f, k.unwrap_or(1))
                    }
                    FamilyLiteral::Random { edge_density, seed } => PosetFamily::Random {
                        f,
                        edge_density: *edge_density,
                        seed: *seed,
                    },
                };
                generate_over(&kind, fault_prone)
            }
        }
    }

    pub fn from_poset(poset: &Poset) -> Self {
        PosetLiteral::Explicit {
            elements: poset.elements.clone(),
            covers: poset.covers.clone(),
        }
    }
}
