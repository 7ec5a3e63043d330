//! Worked example models with closed-form properties, plus seeded random
//! positive-definite matrices for sweeps.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::PdMatrix;

/// Identifiable three-node covariance: under `ω₁ = ω₂` only the ordering
/// with `p(1) = ∅, p(2) = {1}` satisfies the equal-variance constraint, and
/// the effect `1 → 2` is exactly 1.
pub fn appendix_a_sigma() -> PdMatrix {
    PdMatrix::from_rows(&[vec![1.0, 1.0, 2.0], vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 5.5]])
        .expect("fixture is positive definite")
}

/// Covariance (15 significant digits) lying in the intersection of two
/// partially homoscedastic models with orderings `1<2<3` and `3<2<1`.
pub fn appendix_b_sigma() -> PdMatrix {
    PdMatrix::from_rows(&[
        vec![1.00000000000000, 0.294584930358565, -0.176750958215139],
        vec![0.294584930358565, 1.08678028119436, 0.648086846788844],
        vec![-0.176750958215139, 0.648086846788844, 1.52145794696742],
    ])
    .expect("fixture is positive definite")
}

/// Weight matrix of the first generating model (`weights[(j, i)] = β_{j,i}`).
pub fn appendix_b_weights_1() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            0.0, 0.0, 0.0,
            0.294584930358565, 0.0, 0.0,
            -0.383006074698015, 0.700155015505460, 0.0,
        ],
    )
}

pub const APPENDIX_B_VARIANCES_1: [f64; 3] = [1.0, 1.0, 1.0];

pub fn appendix_b_weights_2() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            0.0, 0.456230601077430, -0.310510067542541,
            0.0, 0.0, 0.425964350891600,
            0.0, 0.0, 0.0,
        ],
    )
}

pub const APPENDIX_B_VARIANCES_2: [f64; 3] = [0.810718388180567, 0.810718388180567, 1.52145794696742];

/// Effect `1 → 2` entailed by the first generating model.
pub const APPENDIX_B_EFFECT: f64 = 0.294584930358565;

/// Seeded random positive-definite matrix `G Gᵀ / d + 0.1 I` with Gaussian `G`.
pub fn random_pd(d: usize, seed: u64) -> PdMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    let mut m = &g * g.transpose() / d as f64;
    for k in 0..d {
        m[(k, k)] += 0.1;
    }
    // exact symmetry
    let m = DMatrix::from_fn(d, d, |r, c| if r <= c { m[(r, c)] } else { m[(c, r)] });
    PdMatrix::new(m).expect("shifted Gram matrix is positive definite")
}
