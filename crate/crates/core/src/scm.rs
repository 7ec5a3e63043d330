//! Linear Gaussian structural causal models `X = B X + ε`, `ε ~ N(0, diag(ω))`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::{PdMatrix, SampleMatrix};
use crate::nodeset::NodeSet;
use crate::orderings::CompleteOrdering;

/// Error-variance regime of a model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeTag {
    /// Arbitrary error variances.
    General,
    /// `ω_i = ω_j` for the cause `i` and response `j` only.
    PartialEv { i: usize, j: usize },
    /// All error variances equal.
    FullEv,
}

impl RegimeTag {
    pub fn partial_ev(i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(invalid("partial equal-variance regime needs distinct nodes"));
        }
        Ok(RegimeTag::PartialEv { i, j })
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegimeTag::General => "general",
            RegimeTag::PartialEv { .. } => "partial_ev",
            RegimeTag::FullEv => "ev",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScmDocument", into = "ScmDocument")]
pub struct LinearScm {
    weights: DMatrix<f64>,
    variances: Vec<f64>,
    order: CompleteOrdering,
    regime: RegimeTag,
}

/// JSON layout: `weights[j][i]` is the coefficient of `X_i` in the equation of `X_j`.
#[derive(Serialize, Deserialize)]
struct ScmDocument {
    d: usize,
    order: CompleteOrdering,
    weights: Vec<Vec<f64>>,
    variances: Vec<f64>,
    regime: RegimeTag,
}

impl TryFrom<ScmDocument> for LinearScm {
    type Error = Error;
    fn try_from(doc: ScmDocument) -> Result<Self> {
        if doc.weights.len() != doc.d || doc.weights.iter().any(|r| r.len() != doc.d) {
            return Err(invalid(format!("weights must be {0}x{0}", doc.d)));
        }
        let w = DMatrix::from_fn(doc.d, doc.d, |r, c| doc.weights[r][c]);
        LinearScm::new(w, doc.variances, doc.order, doc.regime)
    }
}

impl From<LinearScm> for ScmDocument {
    fn from(s: LinearScm) -> Self {
        let d = s.dim();
        ScmDocument {
            d,
            weights: (0..d).map(|r| (0..d).map(|c| s.weights[(r, c)]).collect()).collect(),
            order: s.order,
            variances: s.variances,
            regime: s.regime,
        }
    }
}

impl LinearScm {
    pub fn new(weights: DMatrix<f64>, variances: Vec<f64>, order: CompleteOrdering, regime: RegimeTag) -> Result<Self> {
        let d = order.dim();
        if weights.nrows() != d || weights.ncols() != d || variances.len() != d {
            return Err(invalid(format!("weights, variances and order must all have dimension {d}")));
        }
        if let Some(k) = variances.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(invalid(format!("error variance of node {k} must be positive")));
        }
        for j in 0..d {
            for i in 0..d {
                let w = weights[(j, i)];
                if !w.is_finite() {
                    return Err(invalid(format!("weight ({j},{i}) is not finite")));
                }
                if w != 0.0 && !order.precedes(i, j) {
                    return Err(invalid(format!("edge {i} -> {j} contradicts the causal order")));
                }
            }
        }
        Ok(LinearScm { weights, variances, order, regime })
    }

    pub fn dim(&self) -> usize {
        self.order.dim()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn order(&self) -> &CompleteOrdering {
        &self.order
    }

    pub fn regime(&self) -> RegimeTag {
        self.regime
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    pub fn parents(&self, k: usize) -> NodeSet {
        (0..self.dim()).filter(|&m| self.weights[(k, m)] != 0.0).collect()
    }

    /// Nodes reachable from `k` by a directed path.
    pub fn descendants(&self, k: usize) -> NodeSet {
        let mut reach = NodeSet::EMPTY;
        for &m in &self.order.perm()[self.order.position(k) + 1..] {
            if !self.parents(m).intersection(reach.with(k)).is_empty() {
                reach = reach.with(m);
            }
        }
        reach
    }

    /// `(I − B)⁻¹`, filled row by row along the causal order.
    pub fn total_effects(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut a = DMatrix::<f64>::identity(d, d);
        for &k in self.order.perm() {
            for m in self.parents(k).iter() {
                let w = self.weights[(k, m)];
                for c in 0..d {
                    a[(k, c)] += w * a[(m, c)];
                }
            }
        }
        a
    }

    /// `Σ = (I − B)⁻¹ Ω (I − B)⁻ᵀ`.
    pub fn covariance(&self) -> PdMatrix {
        let a = self.total_effects();
        let omega = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.variances));
        let s = &a * omega * a.transpose();
        let d = self.dim();
        let s = DMatrix::from_fn(d, d, |r, c| if r <= c { s[(r, c)] } else { s[(c, r)] });
        PdMatrix::new(s).expect("SCM covariance is positive definite")
    }

    /// Total causal effect `i → j` as the path sum `((I − B)⁻¹)_{j,i}`.
    pub fn true_effect(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        self.total_effects()[(j, i)]
    }

    /// Draws `n` observations from a fresh generator seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        self.sample_with(n, &mut ChaCha20Rng::seed_from_u64(seed))
    }

    /// Draws `n` observations. Per row, errors are drawn for nodes `0..d`
    /// in index order, then propagated along the causal order.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(Error::InvalidSampleCount);
        }
        let d = self.dim();
        let sd: Vec<f64> = self.variances.iter().map(|v| v.sqrt()).collect();
        let parents: Vec<Vec<(usize, f64)>> = (0..d)
            .map(|k| self.parents(k).iter().map(|m| (m, self.weights[(k, m)])).collect())
            .collect();
        let mut data = Vec::with_capacity(n * d);
        let mut x = vec![0.0; d];
        for _ in 0..n {
            for (xk, s) in x.iter_mut().zip(&sd) {
                let z: f64 = StandardNormal.sample(rng);
                *xk = s * z;
            }
            for &k in self.order.perm() {
                x[k] += parents[k].iter().map(|&(m, w)| w * x[m]).sum::<f64>();
            }
            data.extend_from_slice(&x);
        }
        SampleMatrix::new(n, d, data)
    }
}

/// Total effect `i → j` read off a covariance through the adjustment
/// formula `Σ_{j,i|A} / Σ_{i,i|A}` for an adjustment set `A`.
pub fn adjustment_effect(sigma: &PdMatrix, i: usize, j: usize, adjust: NodeSet) -> Result<f64> {
    let (sii, sij, _) = sigma.conditional_pair(i, j, adjust)?;
    Ok(sij / sii)
}

/// Which effect the generator must produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectTruth {
    /// `j` is a descendant of `i`.
    Nonzero,
    /// `j` is not a descendant of `i`.
    Zero,
    /// No constraint.
    Any,
}

/// How the spread parameter of the edge-weight normal law is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadKind {
    StdDev,
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub edge_probability: f64,
    pub weight_mean: f64,
    pub weight_spread: f64,
    pub spread_kind: SpreadKind,
    pub variance_range: (f64, f64),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            edge_probability: 0.5,
            weight_mean: 0.5,
            weight_spread: 0.1,
            spread_kind: SpreadKind::StdDev,
            variance_range: (0.5, 1.5),
        }
    }
}

pub const MAX_GENERATION_ATTEMPTS: usize = 1_000_000;

/// Random sparse SCM for the coverage benchmark.
///
/// Each attempt draws, in order: a uniform node permutation; for every
/// ordered pair (earlier, later) of positions an edge indicator and, if
/// present, a normal weight; then the error variances. Attempts repeat on
/// the same stream until the effect constraint holds.
pub fn generate_benchmark_scm(
    d: usize,
    regime: RegimeTag,
    truth: EffectTruth,
    i: usize,
    j: usize,
    seed: u64,
) -> Result<LinearScm> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    generate_benchmark_scm_with(d, regime, truth, i, j, &GeneratorConfig::default(), &mut rng)
}

pub fn generate_benchmark_scm_with<R: Rng + ?Sized>(
    d: usize,
    regime: RegimeTag,
    truth: EffectTruth,
    i: usize,
    j: usize,
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<LinearScm> {
    if d < 3 {
        return Err(invalid("benchmark models need d >= 3"));
    }
    if i >= d || j >= d || i == j {
        return Err(invalid(format!("need distinct query nodes below {d}")));
    }
    if let RegimeTag::PartialEv { i: a, j: b } = regime {
        if a >= d || b >= d || a == b {
            return Err(invalid("partial equal-variance nodes out of range"));
        }
    }
    let sd = match config.spread_kind {
        SpreadKind::StdDev => config.weight_spread,
        SpreadKind::Variance => config.weight_spread.sqrt(),
    };
    let weight_law = Normal::new(config.weight_mean, sd).map_err(|e| invalid(e.to_string()))?;
    let (lo, hi) = config.variance_range;
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        let mut weights = DMatrix::<f64>::zeros(d, d);
        for later in 1..d {
            for earlier in 0..later {
                if rng.gen_bool(config.edge_probability) {
                    weights[(perm[later], perm[earlier])] = weight_law.sample(rng);
                }
            }
        }
        let variances: Vec<f64> = (0..d)
            .map(|k| match regime {
                RegimeTag::FullEv => 1.0,
                RegimeTag::PartialEv { i: a, j: b } if k == a || k == b => 1.0,
                _ => rng.gen_range(lo..=hi),
            })
            .collect();
        let order = CompleteOrdering::new(perm)?;
        let scm = LinearScm::new(weights, variances, order, regime)?;
        let reaches = scm.descendants(i).contains(j);
        let ok = match truth {
            EffectTruth::Nonzero => reaches,
            EffectTruth::Zero => !reaches,
            EffectTruth::Any => true,
        };
        if ok {
            return Ok(scm);
        }
    }
    Err(Error::GenerationExhausted { attempts: MAX_GENERATION_ATTEMPTS })
}
