//! Causal orderings of complete DAGs and the equivalence classes that let
//! estimators avoid sweeping all `d!` permutations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::{Cholesky, PdMatrix};
use crate::nodeset::NodeSet;

pub const MAX_PARENT_SET_DIM: usize = 24;
pub const MAX_PEV_CLASS_DIM: usize = 16;
pub const MAX_BRUTE_FORCE_DIM: usize = 8;
pub const MAX_EV_SEARCH_DIM: usize = 20;

/// Two scores tie when `|a − b| ≤ 1e-9 · max(1, |a|, |b|)`.
pub const TIE_TOLERANCE: f64 = 1e-9;

pub fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * 1f64.max(a.abs()).max(b.abs())
}

fn check_dim(d: usize, max: usize, what: &'static str) -> Result<()> {
    if d > max {
        Err(Error::DimensionTooLarge { d, max, what })
    } else {
        Ok(())
    }
}

fn check_pair(d: usize, i: usize, j: usize) -> Result<()> {
    if d < 2 || i >= d || j >= d || i == j {
        Err(invalid(format!("need distinct nodes i, j < d (got d={d}, i={i}, j={j})")))
    } else {
        Ok(())
    }
}

/// A complete DAG given by its causal ordering: `perm[t]` is the node at position `t`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct CompleteOrdering {
    perm: Vec<usize>,
    position: Vec<usize>,
}

impl CompleteOrdering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut position = vec![usize::MAX; d];
        for (t, &k) in perm.iter().enumerate() {
            if k >= d || position[k] != usize::MAX {
                return Err(invalid(format!("{perm:?} is not a permutation of 0..{d}")));
            }
            position[k] = t;
        }
        Ok(CompleteOrdering { perm, position })
    }

    pub fn identity(d: usize) -> Self {
        CompleteOrdering { perm: (0..d).collect(), position: (0..d).collect() }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn position(&self, k: usize) -> usize {
        self.position[k]
    }

    /// `a <_G b`.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.position[a] < self.position[b]
    }

    /// Parents of `k` in the complete DAG: every earlier node.
    pub fn predecessors(&self, k: usize) -> NodeSet {
        self.perm[..self.position[k]].iter().copied().collect()
    }

    /// Descendants of `k` in the complete DAG: every later node.
    pub fn successors(&self, k: usize) -> NodeSet {
        self.perm[self.position[k] + 1..].iter().copied().collect()
    }
}

impl TryFrom<Vec<usize>> for CompleteOrdering {
    type Error = Error;
    fn try_from(perm: Vec<usize>) -> Result<Self> {
        CompleteOrdering::new(perm)
    }
}

impl From<CompleteOrdering> for Vec<usize> {
    fn from(o: CompleteOrdering) -> Self {
        o.perm
    }
}

impl fmt::Debug for CompleteOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.perm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    IBeforeJ,
    JBeforeI,
}

/// Parent sets of the cause `i` and response `j` shared by a group of
/// complete DAGs. `parents_j` is `None` where only `p(i)` matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HypothesisClass {
    pub direction: Direction,
    pub parents_i: NodeSet,
    pub parents_j: Option<NodeSet>,
}

impl HypothesisClass {
    /// Class of an ordering. With `with_parents_j` the class also fixes `p(j)`.
    pub fn of_ordering(order: &CompleteOrdering, i: usize, j: usize, with_parents_j: bool) -> Self {
        let direction = if order.precedes(i, j) { Direction::IBeforeJ } else { Direction::JBeforeI };
        HypothesisClass {
            direction,
            parents_i: order.predecessors(i),
            parents_j: with_parents_j.then(|| order.predecessors(j)),
        }
    }

    /// Checks the consistency constraints between direction and parent sets.
    pub fn is_realizable(&self, i: usize, j: usize) -> bool {
        let pi = self.parents_i;
        match self.direction {
            Direction::IBeforeJ => {
                !pi.contains(i)
                    && !pi.contains(j)
                    && self.parents_j.is_none_or(|pj| pj.contains(i) && !pj.contains(j) && pi.is_subset(pj))
            }
            Direction::JBeforeI => {
                pi.contains(j)
                    && !pi.contains(i)
                    && self.parents_j.is_none_or(|pj| !pj.contains(i) && !pj.contains(j) && pj.is_subset(pi))
            }
        }
    }
}

impl fmt::Display for HypothesisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::IBeforeJ => "i<j",
            Direction::JBeforeI => "j<i",
        };
        write!(f, "{dir} p(i)={}", self.parents_i)?;
        if let Some(pj) = self.parents_j {
            write!(f, " p(j)={pj}")?;
        }
        Ok(())
    }
}

/// The nodes other than `i` and `j`, ascending.
fn others(d: usize, i: usize, j: usize) -> Vec<usize> {
    (0..d).filter(|&k| k != i && k != j).collect()
}

fn spread(bits: u32, nodes: &[usize]) -> NodeSet {
    nodes
        .iter()
        .enumerate()
        .filter(|(b, _)| bits & (1 << b) != 0)
        .map(|(_, &k)| k)
        .collect()
}

/// All `2^{d−2}` subsets of `V ∖ {i, j}`, ascending by bitmask.
pub fn enumerate_parent_sets(d: usize, i: usize, j: usize) -> Result<impl Iterator<Item = NodeSet>> {
    check_dim(d, MAX_PARENT_SET_DIM, "parent-set enumeration")?;
    check_pair(d, i, j)?;
    let rest = others(d, i, j);
    Ok((0..1u32 << rest.len()).map(move |bits| spread(bits, &rest)))
}

/// All `2 · 3^{d−2}` classes of `(direction, p(i), p(j))`.
///
/// Each node other than `i, j` is placed before both, between, or after
/// both. Classes with `i` first come first; within a direction the
/// placement of the lowest-index node varies fastest.
pub fn enumerate_pev_classes(d: usize, i: usize, j: usize) -> Result<Vec<HypothesisClass>> {
    check_dim(d, MAX_PEV_CLASS_DIM, "partial-EV class enumeration")?;
    check_pair(d, i, j)?;
    let rest = others(d, i, j);
    let count = 3usize.pow(rest.len() as u32);
    let mut out = Vec::with_capacity(2 * count);
    for direction in [Direction::IBeforeJ, Direction::JBeforeI] {
        for code in 0..count {
            let (mut before, mut between) = (NodeSet::EMPTY, NodeSet::EMPTY);
            let mut c = code;
            for &k in &rest {
                match c % 3 {
                    0 => before = before.with(k),
                    1 => between = between.with(k),
                    _ => {}
                }
                c /= 3;
            }
            let class = match direction {
                Direction::IBeforeJ => HypothesisClass {
                    direction,
                    parents_i: before,
                    parents_j: Some(before.union(between).with(i)),
                },
                Direction::JBeforeI => HypothesisClass {
                    direction,
                    parents_i: before.union(between).with(j),
                    parents_j: Some(before),
                },
            };
            out.push(class);
        }
    }
    Ok(out)
}

/// All `d!` orderings in lexicographic order of `perm`.
pub fn enumerate_all_orderings(d: usize) -> Result<Vec<CompleteOrdering>> {
    check_dim(d, MAX_BRUTE_FORCE_DIM, "brute-force ordering enumeration")?;
    let mut perm: Vec<usize> = (0..d).collect();
    let mut out = Vec::new();
    loop {
        out.push(CompleteOrdering::new(perm.clone())?);
        // next lexicographic permutation
        let Some(p) = (1..d).rev().find(|&t| perm[t - 1] < perm[t]) else {
            return Ok(out);
        };
        let pivot = p - 1;
        let swap = (p..d).rev().find(|&t| perm[t] > perm[pivot]).expect("successor exists");
        perm.swap(pivot, swap);
        perm[p..].reverse();
    }
}

/// Subset dynamic program for the fully homoscedastic search.
///
/// An ordering's score is `Σ_k (prec)_{k,k|d(k)}`; the equal-variance dual
/// likelihood is maximized exactly where this score is minimal. Two tables
/// are kept over all `2^d` node subsets:
///
/// * `suffix[S]`: best score of arranging `S` as the final `|S|` positions,
///   with the set of nodes that can open that arrangement optimally;
/// * `prefix[U]`: best score of arranging `V ∖ U` in front of a fixed tail `U`,
///   with the set of nodes that can close that arrangement optimally.
#[derive(Debug, Clone)]
pub struct EvOptimum {
    d: usize,
    min_score: f64,
    suffix: Vec<f64>,
    suffix_first: Vec<NodeSet>,
    prefix: Vec<f64>,
    prefix_last: Vec<NodeSet>,
}

/// Runs the subset DP on a precision matrix.
pub fn ev_optimal_orderings(prec: &PdMatrix) -> Result<EvOptimum> {
    let d = prec.dim();
    check_dim(d, MAX_EV_SEARCH_DIM, "equal-variance ordering search")?;
    let states = 1usize << d;
    let full = NodeSet::full(d);

    // f(S) = min_{k∈S} [ prec_{k,k|S∖k} + f(S∖k) ], using prec_{k,k|S∖k} = 1 / ((prec_SS)⁻¹)_kk.
    let mut suffix = vec![f64::INFINITY; states];
    let mut suffix_first = vec![NodeSet::EMPTY; states];
    suffix[0] = 0.0;
    for bits in 1..states as u32 {
        let s = NodeSet::from_bits(bits);
        let idx = s.to_vec();
        let chol = Cholesky::new(&prec.submatrix(&idx, &idx))?;
        let cands: Vec<(usize, f64)> = idx
            .iter()
            .zip(chol.inverse_diagonal())
            .map(|(&k, inv)| (k, 1.0 / inv + suffix[s.without(k).bits() as usize]))
            .collect();
        let (best, firsts) = argmin_ties(&cands);
        suffix[bits as usize] = best;
        suffix_first[bits as usize] = firsts;
    }

    // h(U) = min_{k∉U} [ prec_{k,k|U} + h(U∪k) ], h(V) = 0.
    let mut prefix = vec![f64::INFINITY; states];
    let mut prefix_last = vec![NodeSet::EMPTY; states];
    prefix[full.bits() as usize] = 0.0;
    for bits in (0..full.bits()).rev() {
        let u = NodeSet::from_bits(bits);
        let tail = u.to_vec();
        let missing = u.complement(d).to_vec();
        let cands: Vec<(usize, f64)> = if tail.is_empty() {
            missing.iter().map(|&k| (k, prec.get(k, k) + prefix[u.with(k).bits() as usize])).collect()
        } else {
            let chol = Cholesky::new(&prec.submatrix(&tail, &tail))?;
            let w = chol.whiten(&prec.submatrix(&tail, &missing));
            missing
                .iter()
                .enumerate()
                .map(|(c, &k)| {
                    let cond = prec.get(k, k) - w.column(c).norm_squared();
                    (k, cond + prefix[u.with(k).bits() as usize])
                })
                .collect()
        };
        let (best, lasts) = argmin_ties(&cands);
        prefix[bits as usize] = best;
        prefix_last[bits as usize] = lasts;
    }

    Ok(EvOptimum { d, min_score: suffix[full.bits() as usize], suffix, suffix_first, prefix, prefix_last })
}

fn argmin_ties(cands: &[(usize, f64)]) -> (f64, NodeSet) {
    let best = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let set = cands.iter().filter(|c| ties(c.1, best)).map(|c| c.0).collect();
    (best, set)
}

impl EvOptimum {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Minimal `Σ_k (prec)_{k,k|d(k)}` over all orderings.
    pub fn min_score(&self) -> f64 {
        self.min_score
    }

    /// Best score of arranging the node set `s` as the tail of an ordering.
    pub fn suffix_score(&self, s: NodeSet) -> f64 {
        self.suffix[s.bits() as usize]
    }

    /// Best score contributed by the nodes outside `u` when `u` is the tail.
    pub fn prefix_score(&self, u: NodeSet) -> f64 {
        self.prefix[u.bits() as usize]
    }

    /// One optimal ordering, choosing the lowest-index node at each tie.
    pub fn witness(&self) -> CompleteOrdering {
        let mut s = NodeSet::full(self.d);
        let mut perm = Vec::with_capacity(self.d);
        while !s.is_empty() {
            let k = self.suffix_first[s.bits() as usize].iter().next().expect("non-empty argmin");
            perm.push(k);
            s = s.without(k);
        }
        CompleteOrdering::new(perm).expect("DP path is a permutation")
    }

    /// Every ordering attaining the minimum (within tie tolerance), up to `limit`.
    pub fn optimal_orderings(&self, limit: usize) -> Vec<CompleteOrdering> {
        let mut out = Vec::new();
        let mut perm = Vec::with_capacity(self.d);
        self.collect(NodeSet::full(self.d), &mut perm, &mut out, limit);
        out
    }

    fn collect(&self, s: NodeSet, perm: &mut Vec<usize>, out: &mut Vec<CompleteOrdering>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if s.is_empty() {
            out.push(CompleteOrdering::new(perm.clone()).expect("DP path is a permutation"));
            return;
        }
        for k in self.suffix_first[s.bits() as usize].iter() {
            perm.push(k);
            self.collect(s.without(k), perm, out, limit);
            perm.pop();
        }
    }

    /// Distinct successor sets `d(node)` over all optimal orderings, ascending.
    ///
    /// Walks the tie graph of optimal tail states once, so the cost is
    /// bounded by the number of subsets rather than the number of orderings.
    pub fn optimal_successor_sets(&self, node: usize) -> Vec<NodeSet> {
        let states = 1usize << self.d;
        let mut seen = vec![false; states];
        let mut stack = vec![NodeSet::full(self.d)];
        seen[stack[0].bits() as usize] = true;
        let mut found = Vec::new();
        while let Some(s) = stack.pop() {
            for k in self.suffix_first[s.bits() as usize].iter() {
                let next = s.without(k);
                if k == node {
                    found.push(next);
                    continue;
                }
                if !seen[next.bits() as usize] {
                    seen[next.bits() as usize] = true;
                    stack.push(next);
                }
            }
        }
        found.sort();
        found.dedup();
        found
    }

    /// Nodes that can close an optimal front segment ahead of tail `u`.
    pub fn prefix_last(&self, u: NodeSet) -> NodeSet {
        self.prefix_last[u.bits() as usize]
    }
}

/// Brute-force score `Σ_k (prec)_{k,k|d(k)}` of one ordering.
pub fn ordering_score(prec: &PdMatrix, order: &CompleteOrdering) -> Result<f64> {
    (0..prec.dim()).map(|k| prec.conditional_entry(k, k, order.successors(k))).sum()
}
