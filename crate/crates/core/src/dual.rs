//! Dual likelihood `ℓ(Σ) = −log det(Σ⁻¹) − tr(Σ Σ̂⁻¹)` and the set-valued
//! total-effect estimators built on its constrained maxima.
//!
//! Every supremum is a function of conditional entries of the precision
//! matrix `Σ̂⁻¹`, so it is inverted once and reused across all classes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::PdMatrix;
use crate::nodeset::NodeSet;
use crate::orderings::{
    enumerate_parent_sets, enumerate_pev_classes, ev_optimal_orderings, ties, CompleteOrdering, Direction,
    HypothesisClass,
};
use crate::scm::RegimeTag;

pub fn dual_loglik(sigma: &PdMatrix, prec_hat: &PdMatrix) -> Result<f64> {
    let d = sigma.dim();
    if prec_hat.dim() != d {
        return Err(invalid(format!("dimension mismatch: {} vs {}", d, prec_hat.dim())));
    }
    let trace: f64 = sigma.matrix().component_mul(prec_hat.matrix()).sum();
    Ok(sigma.log_det()? - trace)
}

/// `(prec)_{k,k|d(k)}` for every node under `order`.
fn conditional_precisions(prec: &PdMatrix, order: &CompleteOrdering) -> Result<Vec<f64>> {
    (0..prec.dim()).map(|k| prec.conditional_entry(k, k, order.successors(k))).collect()
}

/// Supremum over the unrestricted model of a complete DAG. Equal for all orderings.
pub fn sup_general(prec_hat: &PdMatrix, order: &CompleteOrdering) -> Result<f64> {
    let r = conditional_precisions(prec_hat, order)?;
    Ok(-r.iter().map(|v| v.ln()).sum::<f64>() - r.len() as f64)
}

/// Supremum under `ω_i = ω_j` for one ordering.
pub fn sup_pev(prec_hat: &PdMatrix, order: &CompleteOrdering, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(invalid("cause and response must differ"));
    }
    let r = conditional_precisions(prec_hat, order)?;
    let rest: f64 = r.iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, v)| v.ln()).sum();
    Ok(-rest - 2.0 * (0.5 * (r[i] + r[j])).ln() - r.len() as f64)
}

/// Supremum under fully equal error variances for one ordering.
pub fn sup_ev(prec_hat: &PdMatrix, order: &CompleteOrdering) -> Result<f64> {
    let r = conditional_precisions(prec_hat, order)?;
    let d = r.len() as f64;
    Ok(-d * (r.iter().sum::<f64>() / d).ln() - d)
}

/// Total effect `i → j` when `i` has successor set `successors`.
///
/// Regressing `i` on its successors in the precision matrix gives the
/// coefficient of `j`; the effect is its negative, which equals the
/// covariance-side adjustment coefficient `Σ̂_{j,i|p(i)} / Σ̂_{i,i|p(i)}`.
pub fn effect_given_successors(prec_hat: &PdMatrix, i: usize, j: usize, successors: NodeSet) -> Result<f64> {
    if !successors.contains(j) {
        return Ok(0.0);
    }
    let coef = prec_hat.regression(i, successors)?;
    let pos = successors.iter().position(|k| k == j).expect("j is a successor");
    Ok(-coef[pos])
}

pub fn effect_from_ordering(prec_hat: &PdMatrix, order: &CompleteOrdering, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(invalid("cause and response must differ"));
    }
    effect_given_successors(prec_hat, i, j, order.successors(i))
}

/// Successors of `i` and `j` implied by a class with known parent sets.
pub(crate) fn class_successors(d: usize, class: &HypothesisClass, i: usize, j: usize) -> (NodeSet, Option<NodeSet>) {
    let succ_i = class.parents_i.with(i).complement(d);
    let succ_j = class.parents_j.map(|pj| pj.with(j).complement(d));
    (succ_i, succ_j)
}

/// Per-class quantities of the partially homoscedastic model.
#[derive(Debug, Clone, Copy)]
pub struct PevClassScore {
    pub class: HypothesisClass,
    /// `(Σ̂⁻¹)_{i,i|d(i)}`
    pub r_i: f64,
    /// `(Σ̂⁻¹)_{j,j|d(j)}`
    pub r_j: f64,
    /// Supremum of the dual likelihood over the class.
    pub sup: f64,
    /// `log K(G)` with `K(G) = Π_{k≠i,j} √r_k · (r_i + r_j)`.
    pub log_k: f64,
}

/// Scores one partial-EV class using `Π_k r_k = det(Σ̂⁻¹)`, so only the
/// conditional precisions of `i` and `j` are needed.
pub fn score_pev_class(
    prec_hat: &PdMatrix,
    log_det_prec: f64,
    class: &HypothesisClass,
    i: usize,
    j: usize,
) -> Result<PevClassScore> {
    let d = prec_hat.dim();
    let (succ_i, succ_j) = class_successors(d, class, i, j);
    let succ_j = succ_j.ok_or_else(|| invalid("partial-EV class needs p(j)"))?;
    let r_i = prec_hat.conditional_entry(i, i, succ_i)?;
    let r_j = prec_hat.conditional_entry(j, j, succ_j)?;
    let sup = -log_det_prec + r_i.ln() + r_j.ln() - 2.0 * (0.5 * (r_i + r_j)).ln() - d as f64;
    let log_k = 0.5 * log_det_prec + (r_i + r_j).ln() - 0.5 * (r_i * r_j).ln();
    Ok(PevClassScore { class: *class, r_i, r_j, sup, log_k })
}

/// Set of candidate effect values, each with the classes that entail it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub regime: RegimeTag,
    /// Distinct effects, ascending.
    pub values: Vec<f64>,
    /// `classes[n]` lists the classes entailing `values[n]`.
    pub classes: Vec<Vec<HypothesisClass>>,
    /// Supremum of the dual likelihood attained by the reported classes.
    pub optimum: f64,
}

impl EffectEstimate {
    pub fn contains_value(&self, v: f64, tol: f64) -> bool {
        self.values.iter().any(|x| (x - v).abs() <= tol)
    }
}

#[derive(Default)]
struct EffectSet {
    entries: Vec<(f64, Vec<HypothesisClass>)>,
}

impl EffectSet {
    fn insert(&mut self, value: f64, class: HypothesisClass) {
        match self.entries.iter_mut().find(|(v, _)| ties(*v, value)) {
            Some((_, classes)) => classes.push(class),
            None => self.entries.push((value, vec![class])),
        }
    }

    fn finish(mut self, regime: RegimeTag, optimum: f64) -> EffectEstimate {
        self.entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, classes) = self.entries.into_iter().unzip();
        EffectEstimate { regime, values, classes, optimum }
    }
}

/// Set-valued estimate of the total effect `i → j` under `regime`.
///
/// * `General`: every parent set of `i` avoiding `j` is plausible; its
///   adjustment coefficient is reported, together with zero for the
///   orderings placing `j` first.
/// * `PartialEv`: effects of all `(p(i), p(j))` classes attaining the
///   maximal partially homoscedastic supremum.
/// * `FullEv`: effects of all orderings attaining the maximal equal-variance
///   supremum, read off the subset search.
pub fn estimate_effects(prec_hat: &PdMatrix, i: usize, j: usize, regime: RegimeTag) -> Result<EffectEstimate> {
    let d = prec_hat.dim();
    if i >= d || j >= d || i == j {
        return Err(invalid(format!("need distinct nodes below {d}")));
    }
    let log_det_prec = prec_hat.log_det()?;
    let mut set = EffectSet::default();
    match regime {
        RegimeTag::General => {
            for parents_i in enumerate_parent_sets(d, i, j)? {
                let succ = parents_i.with(i).complement(d);
                let value = effect_given_successors(prec_hat, i, j, succ)?;
                set.insert(value, HypothesisClass { direction: Direction::IBeforeJ, parents_i, parents_j: None });
            }
            let reverse = HypothesisClass { direction: Direction::JBeforeI, parents_i: NodeSet::singleton(j), parents_j: None };
            set.insert(0.0, reverse);
            Ok(set.finish(regime, -log_det_prec - d as f64))
        }
        RegimeTag::PartialEv { i: a, j: b } => {
            if (a, b) != (i, j) && (a, b) != (j, i) {
                return Err(invalid("partial equal-variance pair must match the query pair"));
            }
            let scores = enumerate_pev_classes(d, i, j)?
                .iter()
                .map(|c| score_pev_class(prec_hat, log_det_prec, c, i, j))
                .collect::<Result<Vec<_>>>()?;
            let best = scores.iter().map(|s| s.sup).fold(f64::NEG_INFINITY, f64::max);
            for s in scores.iter().filter(|s| ties(s.sup, best)) {
                let (succ_i, _) = class_successors(d, &s.class, i, j);
                set.insert(effect_given_successors(prec_hat, i, j, succ_i)?, s.class);
            }
            Ok(set.finish(regime, best))
        }
        RegimeTag::FullEv => {
            let ev = ev_optimal_orderings(prec_hat)?;
            for succ in ev.optimal_successor_sets(i) {
                let direction = if succ.contains(j) { Direction::IBeforeJ } else { Direction::JBeforeI };
                let class = HypothesisClass { direction, parents_i: succ.with(i).complement(d), parents_j: None };
                set.insert(effect_given_successors(prec_hat, i, j, succ)?, class);
            }
            let df = d as f64;
            Ok(set.finish(regime, -df * (ev.min_score() / df).ln() - df))
        }
    }
}
