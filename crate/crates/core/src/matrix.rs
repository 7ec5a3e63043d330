//! Dense symmetric positive-definite matrix algebra.
//!
//! Everything routes through a pivot-checked Cholesky factorization: a pivot
//! below `PIVOT_TOLERANCE` times the largest diagonal entry of the factored
//! matrix counts as singular.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::nodeset::NodeSet;

pub const PIVOT_TOLERANCE: f64 = 1e-12;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Lower-triangular Cholesky factor `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factors a symmetric matrix, reading only its lower triangle.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        let scale = (0..d).map(|k| m[(k, k)]).fold(0.0_f64, f64::max);
        let tol = PIVOT_TOLERANCE * scale;
        let mut l = DMatrix::<f64>::zeros(d, d);
        for c in 0..d {
            let mut pivot = m[(c, c)];
            for k in 0..c {
                pivot -= l[(c, k)] * l[(c, k)];
            }
            if !(pivot > tol) || !pivot.is_finite() {
                return Err(Error::SingularBlock { index: c, pivot });
            }
            let root = pivot.sqrt();
            l[(c, c)] = root;
            for r in c + 1..d {
                let mut v = m[(r, c)];
                for k in 0..c {
                    v -= l[(r, k)] * l[(c, k)];
                }
                l[(r, c)] = v / root;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L y = b` in place.
    fn forward(&self, b: &mut DMatrix<f64>) {
        let d = self.dim();
        for col in 0..b.ncols() {
            for r in 0..d {
                let mut v = b[(r, col)];
                for k in 0..r {
                    v -= self.l[(r, k)] * b[(k, col)];
                }
                b[(r, col)] = v / self.l[(r, r)];
            }
        }
    }

    /// Solves `Lᵀ x = y` in place.
    fn backward(&self, b: &mut DMatrix<f64>) {
        let d = self.dim();
        for col in 0..b.ncols() {
            for r in (0..d).rev() {
                let mut v = b[(r, col)];
                for k in r + 1..d {
                    v -= self.l[(k, r)] * b[(k, col)];
                }
                b[(r, col)] = v / self.l[(r, r)];
            }
        }
    }

    /// Returns `L⁻¹ b`, so that `bᵀ M⁻¹ c = (L⁻¹ b)ᵀ (L⁻¹ c)`.
    pub fn whiten(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        self.forward(&mut out);
        out
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        self.forward(&mut out);
        self.backward(&mut out);
        out
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        let x = self.solve(&m);
        DVector::from_column_slice(x.as_slice())
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|k| 2.0 * self.l[(k, k)].ln()).sum()
    }

    /// Diagonal of `M⁻¹`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let d = self.dim();
        let mut linv = DMatrix::<f64>::identity(d, d);
        self.forward(&mut linv);
        (0..d)
            .map(|c| (0..d).map(|r| linv[(r, c)] * linv[(r, c)]).sum())
            .collect()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut inv = self.solve(&DMatrix::identity(d, d));
        symmetrize(&mut inv);
        inv
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for r in 0..d {
        for c in r + 1..d {
            let v = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

/// Symmetric positive-definite matrix of dimension at least 2.
///
/// Holds covariances, their empirical counterparts and precision matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct PdMatrix {
    m: DMatrix<f64>,
}

impl PdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d {
            return Err(invalid(format!("matrix is {}x{}, expected square", d, m.ncols())));
        }
        if d < 2 {
            return Err(invalid(format!("dimension {d} is below the minimum of 2")));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for r in 0..d {
            for c in r + 1..d {
                if (m[(r, c)] - m[(c, r)]).abs() > SYMMETRY_TOLERANCE * scale {
                    return Err(invalid(format!("matrix is not symmetric at ({r},{c})")));
                }
            }
        }
        Cholesky::new(&m)?;
        Ok(PdMatrix { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid("rows must all have length equal to the row count"));
        }
        PdMatrix::new(DMatrix::from_fn(d, d, |r, c| rows[r][c]))
    }

    pub fn identity(d: usize) -> Result<Self> {
        PdMatrix::new(DMatrix::identity(d, d))
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        PdMatrix::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.m[(r, c)]
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::new(&self.m)
    }

    pub fn inverse(&self) -> Result<PdMatrix> {
        let inv = self.cholesky()?.inverse();
        Ok(PdMatrix { m: inv })
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(self.cholesky()?.log_det())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.m[(rows[r], cols[c])])
    }

    /// Conditional block `M_{A,B|S} = M_{A,B} − M_{A,S} (M_{S,S})⁻¹ M_{S,B}`.
    ///
    /// Index sets are 0-based. `S` must be disjoint from `A ∪ B`; for an
    /// empty `S` the plain block is returned.
    pub fn conditional_block(&self, a: &[usize], b: &[usize], s: &[usize]) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if a.iter().chain(b).chain(s).any(|&k| k >= d) {
            return Err(invalid(format!("index out of range for dimension {d}")));
        }
        if s.iter().any(|k| a.contains(k) || b.contains(k)) {
            return Err(invalid("conditioning set overlaps the block indices"));
        }
        let mut block = self.submatrix(a, b);
        if s.is_empty() {
            return Ok(block);
        }
        let chol = Cholesky::new(&self.submatrix(s, s))?;
        let wa = chol.whiten(&self.submatrix(s, a));
        let wb = if a == b { wa.clone() } else { chol.whiten(&self.submatrix(s, b)) };
        block -= wa.transpose() * wb;
        Ok(block)
    }

    /// Scalar `M_{r,c|S}` with `S` given as a node set.
    pub fn conditional_entry(&self, r: usize, c: usize, s: NodeSet) -> Result<f64> {
        Ok(self.conditional_block(&[r], &[c], &s.to_vec())?[(0, 0)])
    }

    /// The 2×2 block `M_{{u,v},{u,v}|S}` returned as `(m_uu, m_uv, m_vv)`.
    pub fn conditional_pair(&self, u: usize, v: usize, s: NodeSet) -> Result<(f64, f64, f64)> {
        let blk = self.conditional_block(&[u, v], &[u, v], &s.to_vec())?;
        Ok((blk[(0, 0)], blk[(0, 1)], blk[(1, 1)]))
    }

    /// Coefficients of regressing `target` on `regressors` in this matrix,
    /// i.e. `(M_{R,R})⁻¹ M_{R,target}`, ordered as `regressors` ascending.
    pub fn regression(&self, target: usize, regressors: NodeSet) -> Result<Vec<f64>> {
        let idx = regressors.to_vec();
        if idx.is_empty() {
            return Ok(Vec::new());
        }
        let chol = Cholesky::new(&self.submatrix(&idx, &idx))?;
        Ok(chol.solve(&self.submatrix(&idx, &[target])).as_slice().to_vec())
    }
}

/// Observations as an `n × d` row-major table.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSampleCount);
        }
        if d == 0 || data.len() != n * d {
            return Err(invalid(format!("expected {} entries for {n}x{d} samples, got {}", n * d, data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite entry in row {}", pos / d)));
        }
        Ok(SampleMatrix { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != d) {
            return Err(invalid(format!("row {r} has {} entries, expected {d}", rows[r].len())));
        }
        SampleMatrix::new(n, d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.data[l * self.d..(l + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Column means.
    pub fn means(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.d];
        for row in self.rows() {
            for (m, x) in mu.iter_mut().zip(row) {
                *m += x;
            }
        }
        mu.iter_mut().for_each(|m| *m /= self.n as f64);
        mu
    }
}

/// Uncentered empirical covariance `(1/n) Σ x xᵀ`.
pub fn empirical_covariance(data: &SampleMatrix) -> Result<PdMatrix> {
    covariance_about(data, None)
}

/// Empirical covariance about the column means (divisor `n`).
pub fn centered_covariance(data: &SampleMatrix) -> Result<PdMatrix> {
    let mu = data.means();
    covariance_about(data, Some(&mu))
}

fn covariance_about(data: &SampleMatrix, center: Option<&[f64]>) -> Result<PdMatrix> {
    let d = data.d();
    let mut m = DMatrix::<f64>::zeros(d, d);
    let mut buf = vec![0.0; d];
    for row in data.rows() {
        match center {
            Some(mu) => buf.iter_mut().zip(row.iter().zip(mu)).for_each(|(b, (x, m))| *b = x - m),
            None => buf.copy_from_slice(row),
        }
        for r in 0..d {
            for c in 0..=r {
                m[(r, c)] += buf[r] * buf[c];
            }
        }
    }
    let n = data.n() as f64;
    for r in 0..d {
        for c in 0..=r {
            let v = m[(r, c)] / n;
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
    if d < 2 {
        return Err(invalid("covariance needs at least 2 variables"));
    }
    match Cholesky::new(&m) {
        Ok(_) => Ok(PdMatrix { m }),
        Err(Error::SingularBlock { index, pivot }) => Err(Error::SingularCovariance { index, pivot }),
        Err(e) => Err(e),
    }
}
