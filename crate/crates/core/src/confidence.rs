//! Confidence regions for the total effect `i → j` by inverting dual
//! likelihood ratio tests over all causal orderings.
//!
//! For an ordering with `i` before `j`, fixing the effect at `ψ` turns the
//! constrained supremum into a function of the quadratic
//! `q(ψ) = a + 2bψ + cψ²` with `a, b, c` the entries of
//! `(Σ̂⁻¹)_{{i,j},{i,j}|d(i)∖{j}}`. Each regime accepts `ψ` when `q(ψ)` stays
//! below a class-specific threshold, which yields one closed interval per
//! class. Orderings with `j` before `i` entail a zero effect and are handled
//! by a separate zero test.

use serde::{Deserialize, Serialize};

use crate::chi2::critical_value;
use crate::dual::score_pev_class;
use crate::error::{invalid, Error, Result};
use crate::matrix::PdMatrix;
use crate::nodeset::NodeSet;
use crate::orderings::{enumerate_parent_sets, enumerate_pev_classes, ev_optimal_orderings, Direction, HypothesisClass};
use crate::scm::RegimeTag;

/// Relative width of the band around a zero discriminant treated as tangency.
pub const TANGENT_TOLERANCE: f64 = 1e-12;

/// Union of disjoint closed intervals plus an optional isolated zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub alpha: f64,
    pub n: usize,
    pub regime: RegimeTag,
    /// Sorted, pairwise disjoint `[L, U]`.
    pub intervals: Vec<[f64; 2]>,
    /// Zero belongs to the region but lies in no interval.
    pub zero_atom: bool,
}

impl ConfidenceRegion {
    /// Builds the canonical form: overlapping or touching intervals are merged.
    pub fn from_parts(mut raw: Vec<[f64; 2]>, zero: bool, alpha: f64, n: usize, regime: RegimeTag) -> Self {
        raw.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let mut intervals: Vec<[f64; 2]> = Vec::with_capacity(raw.len());
        for iv in raw {
            match intervals.last_mut() {
                Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
                _ => intervals.push(iv),
            }
        }
        let covered = intervals.iter().any(|iv| iv[0] <= 0.0 && 0.0 <= iv[1]);
        ConfidenceRegion { alpha, n, regime, intervals, zero_atom: zero && !covered }
    }

    pub fn contains(&self, psi: f64) -> bool {
        (psi == 0.0 && self.zero_atom) || self.intervals.iter().any(|iv| iv[0] <= psi && psi <= iv[1])
    }

    /// Membership with every interval widened by `tol` on both sides.
    pub fn contains_within(&self, psi: f64, tol: f64) -> bool {
        (psi.abs() <= tol && self.zero_atom) || self.intervals.iter().any(|iv| iv[0] - tol <= psi && psi <= iv[1] + tol)
    }

    /// Total length of the intervals; the isolated zero contributes nothing.
    pub fn width(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1] - iv[0]).sum()
    }

    pub fn includes_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// `self ⊆ other`, checked on the canonical forms.
    pub fn is_subset_of(&self, other: &ConfidenceRegion) -> bool {
        let ivs_inside = self
            .intervals
            .iter()
            .all(|iv| other.intervals.iter().any(|o| o[0] <= iv[0] && iv[1] <= o[1]));
        ivs_inside && (!self.zero_atom || other.includes_zero())
    }
}

/// One class's contribution: discriminant and, when real, the interval bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalComputation {
    pub class: HypothesisClass,
    pub discriminant: f64,
    pub bounds: Option<(f64, f64)>,
    /// Coefficients of `c ψ² + 2 b ψ + κ ≤ 0`, kept for diagnostics.
    pub b: f64,
    pub c: f64,
    pub kappa: f64,
}

/// Solves `c ψ² + 2 b ψ + κ ≤ 0` for `c > 0`.
fn accepted_interval(class: HypothesisClass, b: f64, c: f64, kappa: f64, c_scale: f64) -> Result<IntervalComputation> {
    if !(c > TANGENT_TOLERANCE * c_scale) {
        return Err(Error::DegenerateQuadratic { class, pivot: c });
    }
    let mut disc = b * b - c * kappa;
    let scale = (b * b).max((c * kappa).abs()).max(f64::MIN_POSITIVE);
    if disc.abs() <= TANGENT_TOLERANCE * scale {
        disc = 0.0;
    }
    let bounds = (disc >= 0.0).then(|| {
        let root = disc.sqrt();
        ((-b - root) / c, (-b + root) / c)
    });
    Ok(IntervalComputation { class, discriminant: disc, bounds, b, c, kappa })
}

fn check_args(prec: &PdMatrix, n: usize, i: usize, j: usize, alpha: f64) -> Result<()> {
    let d = prec.dim();
    if i >= d || j >= d || i == j {
        return Err(invalid(format!("need distinct nodes below {d}")));
    }
    if n < d {
        return Err(invalid(format!("sample size {n} is below the dimension {d}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// `(a, b, c) = ((Σ̂⁻¹)_{ii|S}, (Σ̂⁻¹)_{ij|S}, (Σ̂⁻¹)_{jj|S})` with `S = d(i) ∖ {j}`.
fn pair_block(prec: &PdMatrix, i: usize, j: usize, s: NodeSet) -> Result<(f64, f64, f64)> {
    prec.conditional_pair(i, j, s)
}

fn forward_class(parents_i: NodeSet, parents_j: Option<NodeSet>) -> HypothesisClass {
    HypothesisClass { direction: Direction::IBeforeJ, parents_i, parents_j }
}

/// Per-class intervals of the unrestricted regime (one per parent set of `i`).
pub fn general_intervals(prec: &PdMatrix, n: usize, i: usize, j: usize, alpha: f64) -> Result<Vec<IntervalComputation>> {
    check_args(prec, n, i, j, alpha)?;
    let d = prec.dim();
    let growth = (critical_value(1.0, alpha)? / n as f64).exp();
    enumerate_parent_sets(d, i, j)?
        .map(|parents_i| {
            let s = parents_i.with(i).with(j).complement(d);
            let (a, b, c) = pair_block(prec, i, j, s)?;
            // (Σ̂⁻¹)_{i,i|d(i)} by one more Schur step on j
            let r_i = a - b * b / c;
            accepted_interval(forward_class(parents_i, None), b, c, a - r_i * growth, prec.get(j, j))
        })
        .collect()
}

/// Region under arbitrary error variances. Always contains zero.
pub fn conf_general(prec: &PdMatrix, n: usize, i: usize, j: usize, alpha: f64) -> Result<ConfidenceRegion> {
    let raw = general_intervals(prec, n, i, j, alpha)?
        .into_iter()
        .filter_map(|c| c.bounds.map(|(l, u)| [l, u]))
        .collect();
    Ok(ConfidenceRegion::from_parts(raw, true, alpha, n, RegimeTag::General))
}

/// Intermediate quantities of the partially homoscedastic region.
#[derive(Debug, Clone)]
pub struct PevComputation {
    pub intervals: Vec<IntervalComputation>,
    /// `log K`, the minimum of `log K(G)` over all classes.
    pub log_k: f64,
    /// `log Z`, the minimum over classes with `j` before `i`.
    pub log_z: f64,
    pub zero_included: bool,
}

pub fn pev_intervals(prec: &PdMatrix, n: usize, i: usize, j: usize, alpha: f64) -> Result<PevComputation> {
    check_args(prec, n, i, j, alpha)?;
    let d = prec.dim();
    let log_det = prec.log_det()?;
    let scores = enumerate_pev_classes(d, i, j)?
        .iter()
        .map(|c| score_pev_class(prec, log_det, c, i, j))
        .collect::<Result<Vec<_>>>()?;
    let log_k = scores.iter().map(|s| s.log_k).fold(f64::INFINITY, f64::min);
    let log_z = scores
        .iter()
        .filter(|s| s.class.direction == Direction::JBeforeI)
        .map(|s| s.log_k)
        .fold(f64::INFINITY, f64::min);
    let crit2 = critical_value(2.0, alpha)?;
    let crit1 = critical_value(1.0, alpha)?;
    let n_f = n as f64;

    let mut intervals = Vec::new();
    for s in scores.iter().filter(|s| s.class.direction == Direction::IBeforeJ) {
        let d_i = s.class.parents_i.with(i).complement(d);
        let (a, b, c) = pair_block(prec, i, j, d_i.without(j))?;
        // Π_{k≠i,j} √r_k = √(det Σ̂⁻¹ / (r_i r_j))
        let log_rest = 0.5 * (log_det - s.r_i.ln() - s.r_j.ln());
        let threshold = (log_k + crit2 / (2.0 * n_f) - log_rest).exp();
        intervals.push(accepted_interval(s.class, b, c, s.r_j + a - threshold, prec.get(j, j))?);
    }
    let zero_included = log_z <= log_k + crit1 / (2.0 * n_f);
    Ok(PevComputation { intervals, log_k, log_z, zero_included })
}

/// Region under equal error variances of `i` and `j`.
pub fn conf_pev(prec: &PdMatrix, n: usize, i: usize, j: usize, alpha: f64) -> Result<ConfidenceRegion> {
    let comp = pev_intervals(prec, n, i, j, alpha)?;
    let raw = comp.intervals.iter().filter_map(|c| c.bounds.map(|(l, u)| [l, u])).collect();
    Ok(ConfidenceRegion::from_parts(raw, comp.zero_included, alpha, n, RegimeTag::PartialEv { i, j }))
}

/// Intermediate quantities of the fully homoscedastic region.
#[derive(Debug, Clone)]
pub struct EvComputation {
    pub intervals: Vec<IntervalComputation>,
    /// Minimal ordering score `Σ_k (Σ̂⁻¹)_{k,k|d(k)}`.
    pub min_score: f64,
    /// Minimal score among orderings with `j` before `i`.
    pub reverse_score: f64,
    pub zero_included: bool,
}

/// Per-class intervals of the equal-variance region.
///
/// With all variances equal the supremum for an ordering is
/// `−d log(score/d) − d`, and fixing the effect replaces `i`'s term of the
/// score by `q(ψ)`. For a successor set `T` of `i`, the remaining nodes are
/// arranged optimally: the subset search supplies the best front segment
/// ahead of `T ∪ {i}` and the best arrangement of `T`.
pub fn ev_intervals(prec: &PdMatrix, n: usize, i: usize, j: usize, alpha: f64) -> Result<EvComputation> {
    check_args(prec, n, i, j, alpha)?;
    let d = prec.dim();
    let df = d as f64;
    let n_f = n as f64;
    let search = ev_optimal_orderings(prec)?;
    let min_score = search.min_score();
    let crit2 = critical_value(2.0, alpha)?;
    let crit1 = critical_value(1.0, alpha)?;
    let budget = min_score * (crit2 / (n_f * df)).exp();

    let mut intervals = Vec::new();
    let mut reverse_score = f64::INFINITY;
    for parents_i in enumerate_parent_sets(d, i, j)? {
        let succ = parents_i.with(i).complement(d);
        let others = search.prefix_score(succ.with(i)) + search.suffix_score(succ);
        let (a, b, c) = pair_block(prec, i, j, succ.without(j))?;
        intervals.push(accepted_interval(forward_class(parents_i, None), b, c, a + others - budget, prec.get(j, j))?);

        // j moved into the front segment: successors of i exclude j
        let rev_succ = succ.without(j);
        let r_i = prec.conditional_entry(i, i, rev_succ)?;
        let rev = search.prefix_score(rev_succ.with(i)) + r_i + search.suffix_score(rev_succ);
        reverse_score = reverse_score.min(rev);
    }
    let zero_included = reverse_score <= min_score * (crit1 / (n_f * df)).exp();
    Ok(EvComputation { intervals, min_score, reverse_score, zero_included })
}

/// Region under fully equal error variances.
pub fn conf_ev(prec: &PdMatrix, n: usize, i: usize, j: usize, alpha: f64) -> Result<ConfidenceRegion> {
    let comp = ev_intervals(prec, n, i, j, alpha)?;
    let raw = comp.intervals.iter().filter_map(|c| c.bounds.map(|(l, u)| [l, u])).collect();
    Ok(ConfidenceRegion::from_parts(raw, comp.zero_included, alpha, n, RegimeTag::FullEv))
}

/// Dispatches on the regime.
pub fn confidence_region(
    prec: &PdMatrix,
    n: usize,
    i: usize,
    j: usize,
    alpha: f64,
    regime: RegimeTag,
) -> Result<ConfidenceRegion> {
    match regime {
        RegimeTag::General => conf_general(prec, n, i, j, alpha),
        RegimeTag::PartialEv { i: a, j: b } if (a, b) == (i, j) || (a, b) == (j, i) => conf_pev(prec, n, i, j, alpha),
        RegimeTag::PartialEv { .. } => Err(invalid("partial equal-variance pair must match the query pair")),
        RegimeTag::FullEv => conf_ev(prec, n, i, j, alpha),
    }
}
