//! Dense complex Hermitian kernel shared by every other module.
//!
//! Conventions fixed here once and used everywhere: subsystem ordering is
//! A-major (Alice's index is the slowest), `tensor` is the plain Kronecker
//! product, and all spectral routines go through one eigendecomposition
//! path with a relative rank tolerance.

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Default construction tolerance for the Hermitian defect.
pub const HERM_TOL: f64 = 1e-10;
/// Default relative rank tolerance separating genuine kernels from noise.
pub const RANK_TOL: f64 = 1e-9;

/// Ordered list of subsystem dimensions, e.g. `[|A|, |B|]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemDims(Vec<usize>);

impl SubsystemDims {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter(format!(
                "subsystem dims must be nonempty positive integers, got {dims:?}"
            )));
        }
        Ok(Self(dims.to_vec()))
    }

    pub fn product(&self) -> usize {
        self.0.iter().product()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self, k: usize) -> usize {
        self.0[k]
    }

    /// Dims of the factors listed in `keep`, in their original order.
    pub fn select(&self, keep: &[usize]) -> Result<Self> {
        for &k in keep {
            if k >= self.0.len() {
                return Err(Error::DimMismatch(format!(
                    "factor index {k} out of range for {} factors",
                    self.0.len()
                )));
            }
        }
        SubsystemDims::new(&keep.iter().map(|&k| self.0[k]).collect::<Vec<_>>())
    }

    pub fn concat(&self, other: &SubsystemDims) -> SubsystemDims {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        SubsystemDims(v)
    }
}

/// Dense complex matrix guaranteed Hermitian within `herm_tol` at construction.
///
/// The stored matrix is the Hermitian part (M + M†)/2 of the input, so all
/// downstream spectral math sees an exactly Hermitian operand.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

/// Eigendecomposition with eigenvalues sorted in descending order and
/// matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigH {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tol(mat, HERM_TOL)
    }

    pub fn with_tol(mat: CMatrix, herm_tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimMismatch(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let defect = (&mat - mat.adjoint()).norm();
        if defect > herm_tol {
            return Err(Error::NotHermitian {
                defect,
                tol: herm_tol,
            });
        }
        let herm = (&mat + mat.adjoint()).scale(0.5);
        Ok(Self { mat: herm })
    }

    /// Symmetrizes unconditionally; for operators Hermitian by construction.
    pub(crate) fn from_herm_unchecked(mat: CMatrix) -> Self {
        let herm = (&mat + mat.adjoint()).scale(0.5);
        Self { mat: herm }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut mat = CMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            mat[(i, i)] = C64::new(v, 0.0);
        }
        Self { mat }
    }

    /// Rank-one projector |k><k| in the computational basis.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        let mut mat = CMatrix::zeros(dim, dim);
        mat[(k, k)] = C64::new(1.0, 0.0);
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// Re Tr[self * other], the real Hilbert-Schmidt inner product.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let mut acc = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let a = self.mat[(i, j)];
                let b = other.mat[(j, i)];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: self.mat.scale(s),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &HermitianOperator) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    /// Kronecker product; `self` is the slow (A-major) factor.
    pub fn tensor(&self, other: &HermitianOperator) -> Self {
        Self {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// A B A† for an arbitrary complex A (result Hermitian for Hermitian self).
    pub fn conjugate_by(&self, a: &CMatrix) -> Self {
        Self::from_herm_unchecked(a * &self.mat * a.adjoint())
    }

    /// self * m * self, Hermitian whenever both operands are.
    pub fn sandwich(&self, m: &HermitianOperator) -> Self {
        Self::from_herm_unchecked(&self.mat * m.matrix() * &self.mat)
    }

    pub fn eig(&self) -> Result<EigH> {
        let eig = self.mat.clone().symmetric_eigen();
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(d, d);
        for (col, &i) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        let recon = &vectors
            * CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                d,
                values.iter().map(|&v| C64::new(v, 0.0)),
            ))
            * vectors.adjoint();
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let residual = (&recon - &self.mat).norm();
        if residual > 1e-9 * scale.max(1.0) {
            return Err(Error::EigFailure(residual));
        }
        Ok(EigH { values, vectors })
    }

    /// Largest |eigenvalue|.
    pub fn op_norm(&self) -> f64 {
        let eig = self.eig().expect("hermitian eig");
        eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sum of |eigenvalues|.
    pub fn trace_norm(&self) -> f64 {
        let eig = self.eig().expect("hermitian eig");
        eig.values.iter().map(|v| v.abs()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.eig().expect("hermitian eig");
        *eig.values.last().unwrap()
    }

    /// Projector onto eigenspaces with eigenvalue above `rank_tol * lambda_max`.
    pub fn support_projector(&self, rank_tol: f64) -> Self {
        let eig = self.eig().expect("hermitian eig");
        let lam_max = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thr = rank_tol * lam_max;
        self.spectral_map(&eig, |v| if v > thr { 1.0 } else { 0.0 })
    }

    pub fn rank(&self, rank_tol: f64) -> usize {
        let eig = self.eig().expect("hermitian eig");
        let lam_max = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thr = rank_tol * lam_max;
        eig.values.iter().filter(|&&v| v > thr).count()
    }

    /// M^{-1/2} restricted to the support (pseudoinverse square root).
    pub fn pinv_sqrt(&self) -> Self {
        self.pinv_sqrt_with_tol(RANK_TOL)
    }

    pub fn pinv_sqrt_with_tol(&self, rank_tol: f64) -> Self {
        let eig = self.eig().expect("hermitian eig");
        let lam_max = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thr = rank_tol * lam_max;
        self.spectral_map(&eig, |v| if v > thr { 1.0 / v.sqrt() } else { 0.0 })
    }

    /// Fractional power on the support; negative exponents are pseudoinverted.
    pub fn powf_on_support(&self, p: f64, rank_tol: f64) -> Self {
        let eig = self.eig().expect("hermitian eig");
        let lam_max = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thr = rank_tol * lam_max;
        self.spectral_map(&eig, |v| if v > thr { v.powf(p) } else { 0.0 })
    }

    fn spectral_map(&self, eig: &EigH, f: impl Fn(f64) -> f64) -> Self {
        let d = self.dim();
        let diag = nalgebra::DVector::from_iterator(
            d,
            eig.values.iter().map(|&v| C64::new(f(v), 0.0)),
        );
        let mat = &eig.vectors * CMatrix::from_diagonal(&diag) * eig.vectors.adjoint();
        Self::from_herm_unchecked(mat)
    }

    /// Trace over the factors not listed in `keep`; kept factors stay in
    /// their original relative order.
    pub fn partial_trace(&self, dims: &SubsystemDims, keep: &[usize]) -> Result<Self> {
        if dims.product() != self.dim() {
            return Err(Error::DimMismatch(format!(
                "dims product {} != operator dim {}",
                dims.product(),
                self.dim()
            )));
        }
        let n = dims.len();
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        for &k in &keep_sorted {
            if k >= n {
                return Err(Error::DimMismatch(format!(
                    "keep index {k} out of range for {n} factors"
                )));
            }
        }
        let discard: Vec<usize> = (0..n).filter(|k| !keep_sorted.contains(k)).collect();
        let keep_dim: usize = keep_sorted.iter().map(|&k| dims.dim(k)).product();
        let disc_dim: usize = discard.iter().map(|&k| dims.dim(k)).product();

        // Strides (A-major / row-major over factors).
        let mut stride = vec![0usize; n];
        let mut acc = 1usize;
        for k in (0..n).rev() {
            stride[k] = acc;
            acc *= dims.dim(k);
        }

        let flat = |multi_keep: usize, multi_disc: usize| -> usize {
            let mut idx = 0usize;
            let mut rem = multi_keep;
            for &k in keep_sorted.iter().rev() {
                let dk = dims.dim(k);
                idx += (rem % dk) * stride[k];
                rem /= dk;
            }
            let mut rem = multi_disc;
            for &k in discard.iter().rev() {
                let dk = dims.dim(k);
                idx += (rem % dk) * stride[k];
                rem /= dk;
            }
            idx
        };

        let mut out = CMatrix::zeros(keep_dim, keep_dim);
        for r in 0..keep_dim {
            for c in 0..keep_dim {
                let mut acc = C64::new(0.0, 0.0);
                for d in 0..disc_dim {
                    acc += self.mat[(flat(r, d), flat(c, d))];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(Self::from_herm_unchecked(out))
    }

    /// Reorders tensor factors: output factor `k` is input factor `order[k]`.
    pub fn permute_subsystems(&self, dims: &SubsystemDims, order: &[usize]) -> Result<Self> {
        let n = dims.len();
        if dims.product() != self.dim() {
            return Err(Error::DimMismatch(format!(
                "dims product {} != operator dim {}",
                dims.product(),
                self.dim()
            )));
        }
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::InvalidParameter(format!(
                "order {order:?} is not a permutation of 0..{n}"
            )));
        }
        let mut stride = vec![0usize; n];
        let mut acc = 1usize;
        for k in (0..n).rev() {
            stride[k] = acc;
            acc *= dims.dim(k);
        }
        let d = self.dim();
        // map output flat index -> input flat index
        let mut map = vec![0usize; d];
        for (out_idx, item) in map.iter_mut().enumerate() {
            let mut rem = out_idx;
            let mut in_idx = 0usize;
            for k in (0..n).rev() {
                let src = order[k];
                let dk = dims.dim(src);
                in_idx += (rem % dk) * stride[src];
                rem /= dk;
            }
            *item = in_idx;
        }
        let mut out = CMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                out[(r, c)] = self.mat[(map[r], map[c])];
            }
        }
        Ok(Self::from_herm_unchecked(out))
    }

    /// |0><0|_anc tensored in at `position` 0 (front) or 1 (back).
    pub fn embed_with_pure_ancilla(&self, d_anc: usize, position: usize) -> Result<Self> {
        if d_anc == 0 {
            return Err(Error::InvalidParameter("ancilla dim must be >= 1".into()));
        }
        if d_anc == 1 {
            return Ok(self.clone());
        }
        let anc = HermitianOperator::basis_projector(d_anc, 0);
        match position {
            0 => Ok(anc.tensor(self)),
            1 => Ok(self.tensor(&anc)),
            _ => Err(Error::InvalidParameter(format!(
                "ancilla position must be 0 (front) or 1 (back), got {position}"
            ))),
        }
    }
}

/// Kronecker product, spec-level free function.
pub fn tensor(m: &HermitianOperator, n: &HermitianOperator) -> HermitianOperator {
    m.tensor(n)
}

pub fn partial_trace(
    m: &HermitianOperator,
    dims: &SubsystemDims,
    keep: &[usize],
) -> Result<HermitianOperator> {
    m.partial_trace(dims, keep)
}

pub fn op_norm(m: &HermitianOperator) -> f64 {
    m.op_norm()
}

pub fn trace_norm(m: &HermitianOperator) -> f64 {
    m.trace_norm()
}
