//! Semidefinite programs over Hermitian variable blocks.
//!
//! Variables are free Hermitian blocks (a 1x1 block is a plain real scalar);
//! positive semidefiniteness is imposed only through explicit constraints.
//! Complex Hermitian cone constraints are realified through the standard
//! 2x-real embedding H -> [[Re H, -Im H], [Im H, Re H]] and handed to the
//! interior-point solver as scaled-triangle PSD cones. The solution is
//! decoded back into Hermitian blocks and every constraint is re-verified
//! here before a solution is accepted.

use crate::error::{Error, Result, SdpError};
use crate::linalg::{C64, CMatrix, HermitianOperator};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(usize);

#[derive(Debug, Clone)]
struct BlockSpec {
    name: String,
    dim: usize,
    offset: usize,
}

#[derive(Debug, Clone, Default)]
struct RowSection {
    /// (row, col, value) triplets of the constraint matrix A.
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
}

#[derive(Debug, Clone)]
struct PsdSection {
    /// Side length of the realified matrix (2 * complex dim).
    side: usize,
    rows: RowSection,
}

/// Solver parameters; defaults follow the library-wide tolerances.
#[derive(Debug, Clone, Copy)]
pub struct SdpParams {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: u32,
}

impl Default for SdpParams {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            feas_tol: 1e-7,
            max_iter: 500,
        }
    }
}

/// Standard-form SDP over Hermitian blocks with affine scalar and
/// PSD-ordering constraints.
pub struct SdpProblem {
    blocks: Vec<BlockSpec>,
    nvars: usize,
    q: Vec<f64>,
    obj_const: f64,
    maximize: bool,
    zero: RowSection,
    nonneg: RowSection,
    psd: Vec<PsdSection>,
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

/// Number of real parameters of a Hermitian block of dimension d.
fn nparams(dim: usize) -> usize {
    dim * dim
}

/// Decodes a parameter vector slice into the Hermitian block it represents.
fn block_from_params(dim: usize, params: &[f64]) -> HermitianOperator {
    let mut m = CMatrix::zeros(dim, dim);
    let mut k = 0;
    for i in 0..dim {
        m[(i, i)] = C64::new(params[k], 0.0);
        k += 1;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let re = params[k];
            let im = params[k + 1];
            k += 2;
            m[(i, j)] = C64::new(re, im);
            m[(j, i)] = C64::new(re, -im);
        }
    }
    HermitianOperator::from_herm_unchecked(m)
}

/// Hermitian basis element for parameter index `k` of a dim-d block.
fn basis_element(dim: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    if k < dim {
        m[(k, k)] = C64::new(1.0, 0.0);
        return m;
    }
    let mut idx = dim;
    for i in 0..dim {
        for j in (i + 1)..dim {
            if k == idx {
                m[(i, j)] = C64::new(1.0, 0.0);
                m[(j, i)] = C64::new(1.0, 0.0);
                return m;
            }
            if k == idx + 1 {
                m[(i, j)] = C64::new(0.0, 1.0);
                m[(j, i)] = C64::new(0.0, -1.0);
                return m;
            }
            idx += 2;
        }
    }
    unreachable!("parameter index out of range")
}

/// Coefficients of x -> Re Tr[C X] in the block's parameter basis.
fn linear_coeffs(c: &HermitianOperator) -> Vec<f64> {
    let d = c.dim();
    let mut out = Vec::with_capacity(nparams(d));
    for i in 0..d {
        out.push(c.matrix()[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(2.0 * c.matrix()[(i, j)].re);
            out.push(2.0 * c.matrix()[(i, j)].im);
        }
    }
    out
}

/// svec of the 2x-real embedding of a Hermitian matrix, upper triangle
/// column-stacked with off-diagonal entries scaled by sqrt(2).
fn svec_realified(h: &CMatrix) -> Vec<(usize, f64)> {
    let d = h.nrows();
    let side = 2 * d;
    let sqrt2 = std::f64::consts::SQRT_2;
    // R[(r, c)] with blocks [[Re, -Im], [Im, Re]]
    let entry = |r: usize, c: usize| -> f64 {
        let (br, ir) = (r / d, r % d);
        let (bc, ic) = (c / d, c % d);
        let z = h[(ir, ic)];
        match (br, bc) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            (1, 0) => z.im,
            _ => unreachable!(),
        }
    };
    let mut out = Vec::new();
    let mut k = 0;
    for c in 0..side {
        for r in 0..=c {
            let v = entry(r, c);
            if v != 0.0 {
                let scale = if r == c { 1.0 } else { sqrt2 };
                out.push((k, v * scale));
            }
            k += 1;
        }
    }
    out
}

fn tri(side: usize) -> usize {
    side * (side + 1) / 2
}

impl SdpProblem {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            nvars: 0,
            q: Vec::new(),
            obj_const: 0.0,
            maximize: false,
            zero: RowSection::default(),
            nonneg: RowSection::default(),
            psd: Vec::new(),
        }
    }

    pub fn add_hermitian_block(&mut self, name: &str, dim: usize) -> BlockId {
        let id = BlockId(self.blocks.len());
        self.blocks.push(BlockSpec {
            name: name.to_string(),
            dim,
            offset: self.nvars,
        });
        self.nvars += nparams(dim);
        id
    }

    /// A 1x1 block: a single free real scalar.
    pub fn add_scalar_block(&mut self, name: &str) -> BlockId {
        self.add_hermitian_block(name, 1)
    }

    pub fn block_dim(&self, id: BlockId) -> usize {
        self.blocks[id.0].dim
    }

    /// Minimize sum_k Re Tr[C_k X_k] + constant.
    pub fn set_objective_min(&mut self, terms: &[(BlockId, HermitianOperator)], constant: f64) {
        self.q = vec![0.0; self.nvars];
        self.obj_const = constant;
        self.maximize = false;
        for (id, c) in terms {
            let spec = &self.blocks[id.0];
            assert_eq!(spec.dim, c.dim(), "objective term dim mismatch");
            for (k, v) in linear_coeffs(c).into_iter().enumerate() {
                self.q[spec.offset + k] += v;
            }
        }
    }

    pub fn set_objective_max(&mut self, terms: &[(BlockId, HermitianOperator)], constant: f64) {
        self.set_objective_min(terms, constant);
        for v in &mut self.q {
            *v = -*v;
        }
        self.obj_const = constant;
        self.maximize = true;
    }

    fn scalar_row(&mut self, terms: &[(BlockId, HermitianOperator)], rhs: f64, eq: bool) {
        let section = if eq { &mut self.zero } else { &mut self.nonneg };
        let row = section.b.len();
        // s = b - A x must equal expr - rhs, so A = -coeffs and b = -rhs ... b - Ax = -rhs + coeffs*x
        for (id, c) in terms {
            let spec = &self.blocks[id.0];
            assert_eq!(spec.dim, c.dim(), "constraint term dim mismatch");
            for (k, v) in linear_coeffs(c).into_iter().enumerate() {
                if v != 0.0 {
                    section.triplets.push((row, spec.offset + k, -v));
                }
            }
        }
        section.b.push(-rhs);
    }

    /// sum_k Re Tr[C_k X_k] == rhs
    pub fn add_scalar_eq(&mut self, terms: &[(BlockId, HermitianOperator)], rhs: f64) {
        self.scalar_row(terms, rhs, true);
    }

    /// sum_k Re Tr[C_k X_k] >= rhs
    pub fn add_scalar_ineq(&mut self, terms: &[(BlockId, HermitianOperator)], rhs: f64) {
        self.scalar_row(terms, rhs, false);
    }

    /// constant + sum_k coeff_k * X_k >= 0 (all blocks of equal dim).
    pub fn add_psd_lincomb(&mut self, coeffs: &[(BlockId, f64)], constant: &HermitianOperator) {
        let dim = constant.dim();
        let mut rows = RowSection::default();
        rows.b = vec![0.0; tri(2 * dim)];
        for (k, v) in svec_realified(constant.matrix()) {
            rows.b[k] = v;
        }
        for (id, coeff) in coeffs {
            let spec = &self.blocks[id.0];
            assert_eq!(spec.dim, dim, "psd lincomb block dim mismatch");
            for p in 0..nparams(dim) {
                let img = basis_element(dim, p);
                for (k, v) in svec_realified(&img) {
                    rows.triplets.push((k, spec.offset + p, -coeff * v));
                }
            }
        }
        self.psd.push(PsdSection {
            side: 2 * dim,
            rows,
        });
    }

    /// General affine PSD constraint: f(blocks) >= 0, where f is affine and
    /// only reads the blocks listed in `touched`.
    pub fn add_psd_map(
        &mut self,
        out_dim: usize,
        touched: &[BlockId],
        f: impl Fn(&[CMatrix]) -> CMatrix,
    ) {
        let zeros: Vec<CMatrix> = self
            .blocks
            .iter()
            .map(|s| CMatrix::zeros(s.dim, s.dim))
            .collect();
        let m0 = f(&zeros);
        assert_eq!(m0.nrows(), out_dim, "psd map output dim mismatch");
        let mut rows = RowSection::default();
        rows.b = vec![0.0; tri(2 * out_dim)];
        for (k, v) in svec_realified(&m0) {
            rows.b[k] = v;
        }
        let mut args = zeros;
        for id in touched {
            let spec = self.blocks[id.0].clone();
            for p in 0..nparams(spec.dim) {
                args[id.0] = basis_element(spec.dim, p);
                let img = f(&args) - &m0;
                for (k, v) in svec_realified(&img) {
                    rows.triplets.push((k, spec.offset + p, -v));
                }
                args[id.0] = CMatrix::zeros(spec.dim, spec.dim);
            }
        }
        self.psd.push(PsdSection {
            side: 2 * out_dim,
            rows,
        });
    }

    /// constant + sum_k coeff_k * X_k == 0 as entrywise equalities.
    pub fn add_zero_lincomb(&mut self, coeffs: &[(BlockId, f64)], constant: &HermitianOperator) {
        let dim = constant.dim();
        // One equality row per real parameter of the difference.
        for p in 0..nparams(dim) {
            let e = HermitianOperator::from_herm_unchecked(basis_element(dim, p));
            // Re<E_p, const + sum c_k X_k> = 0; <E_p, E_p> normalization is
            // irrelevant for an equality.
            let terms: Vec<(BlockId, HermitianOperator)> = coeffs
                .iter()
                .map(|(id, c)| (*id, e.scale(*c)))
                .collect();
            let rhs = -e.inner(constant);
            self.add_scalar_eq(&terms, rhs);
        }
    }

    fn nrows(&self) -> usize {
        self.zero.b.len()
            + self.nonneg.b.len()
            + self.psd.iter().map(|p| tri(p.side)).sum::<usize>()
    }

    /// Sparse text dump (block sizes, objective, constraint triplets) for
    /// cross-checking against external solvers.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(
            s,
            "blocks {}",
            self.blocks
                .iter()
                .map(|b| format!("{}:{}", b.name, b.dim))
                .collect::<Vec<_>>()
                .join(" ")
        )
        .unwrap();
        writeln!(
            s,
            "objective {} const {} {}",
            if self.maximize { "max" } else { "min" },
            self.obj_const,
            self.q
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| format!("{i}:{v}"))
                .collect::<Vec<_>>()
                .join(" ")
        )
        .unwrap();
        let mut section = |name: &str, rows: &RowSection| {
            writeln!(s, "section {name} rows {}", rows.b.len()).unwrap();
            for (r, c, v) in &rows.triplets {
                writeln!(s, "a {r} {c} {v}").unwrap();
            }
            for (r, v) in rows.b.iter().enumerate() {
                if *v != 0.0 {
                    writeln!(s, "b {r} {v}").unwrap();
                }
            }
        };
        section("zero", &self.zero);
        section("nonneg", &self.nonneg);
        for (i, p) in self.psd.iter().enumerate() {
            section(&format!("psd{i} side {}", p.side), &p.rows);
        }
        s
    }
}

/// A certified solution: decoded blocks plus the re-verified gap and
/// feasibility numbers.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub primal_value: f64,
    pub dual_value: f64,
    pub max_violation: f64,
    pub iterations: u32,
    x: Vec<f64>,
    block_dims: Vec<(usize, usize)>,
}

impl SdpSolution {
    pub fn block(&self, id: BlockId) -> HermitianOperator {
        let (offset, dim) = self.block_dims[id.0];
        block_from_params(dim, &self.x[offset..offset + nparams(dim)])
    }

    pub fn scalar(&self, id: BlockId) -> f64 {
        let (offset, dim) = self.block_dims[id.0];
        assert_eq!(dim, 1);
        self.x[offset]
    }
}

fn section_residuals(section: &RowSection, x: &[f64], offset: usize, s_out: &mut [f64]) {
    for (i, b) in section.b.iter().enumerate() {
        s_out[offset + i] = *b;
    }
    for (r, c, v) in &section.triplets {
        s_out[offset + r] -= v * x[*c];
    }
}

/// Solves the program and re-verifies gap and feasibility before returning.
/// If the decoded solution misses the requested tolerances the solve is
/// retried once with tighter interior-point targets.
pub fn sdp_solve(problem: &SdpProblem, params: &SdpParams) -> Result<SdpSolution> {
    match sdp_solve_once(problem, params, 0.1) {
        Err(Error::Sdp(SdpError::ToleranceNotMet { .. })) => {
            sdp_solve_once(problem, params, 0.002)
        }
        other => other,
    }
}

fn sdp_solve_once(
    problem: &SdpProblem,
    params: &SdpParams,
    tighten: f64,
) -> Result<SdpSolution> {
    let n = problem.nvars;
    let m = problem.nrows();
    if n == 0 {
        return Err(Error::InvalidParameter("SDP has no variables".into()));
    }

    // Assemble A (m x n) and b with rows ordered zero, nonneg, psd cones.
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut b = vec![0.0; m];
    let mut row0 = 0usize;
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    {
        let mut push_section = |rows: &RowSection, row0: usize| {
            for (r, c, v) in &rows.triplets {
                trips.push((row0 + r, *c, *v));
            }
            for (r, v) in rows.b.iter().enumerate() {
                b[row0 + r] = *v;
            }
        };
        push_section(&problem.zero, row0);
    }
    if !problem.zero.b.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(problem.zero.b.len()));
    }
    row0 += problem.zero.b.len();
    {
        for (r, c, v) in &problem.nonneg.triplets {
            trips.push((row0 + r, *c, *v));
        }
        for (r, v) in problem.nonneg.b.iter().enumerate() {
            b[row0 + r] = *v;
        }
    }
    if !problem.nonneg.b.is_empty() {
        cones.push(SupportedConeT::NonnegativeConeT(problem.nonneg.b.len()));
    }
    row0 += problem.nonneg.b.len();
    for p in &problem.psd {
        for (r, c, v) in &p.rows.triplets {
            trips.push((row0 + r, *c, *v));
        }
        for (r, v) in p.rows.b.iter().enumerate() {
            b[row0 + r] = *v;
        }
        cones.push(SupportedConeT::PSDTriangleConeT(p.side));
        row0 += tri(p.side);
    }

    // triplets -> CSC with duplicate summing
    trips.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(trips.len());
    for (r, c, v) in trips {
        match merged.last_mut() {
            Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
            _ => merged.push((r, c, v)),
        }
    }
    let mut colptr = vec![0usize; n + 1];
    let mut rowval: Vec<usize> = Vec::with_capacity(merged.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(merged.len());
    for (r, c, v) in merged {
        colptr[c + 1] += 1;
        rowval.push(r);
        nzval.push(v);
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    let a = CscMatrix::new(m, n, colptr, rowval, nzval);

    let p_mat = CscMatrix::zeros((n, n));
    let mut builder = DefaultSettingsBuilder::default();
    builder
        .verbose(false)
        .max_iter(params.max_iter)
        .tol_gap_abs(params.gap_tol * tighten)
        .tol_gap_rel(params.gap_tol * tighten)
        .tol_feas(params.feas_tol * tighten);
    if tighten < 0.1 {
        // retry pass: measure residuals in problem units and lower the
        // regularization floor so the decoded blocks meet the absolute check
        builder
            .equilibrate_enable(false)
            .static_regularization_constant(1e-10);
    }
    let settings = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("solver settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p_mat, &problem.q, &a, &b, &cones, settings)
        .map_err(|e| SdpError::SolverStatus(format!("setup: {e:?}")))?;
    solver.solve();

    let status = solver.solution.status;
    match status {
        // the self-check below is the authority on whether a slow or
        // stalled iterate is acceptable
        SolverStatus::Solved
        | SolverStatus::AlmostSolved
        | SolverStatus::InsufficientProgress => {}
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Err(SdpError::Infeasible.into());
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return Err(SdpError::Unbounded.into());
        }
        SolverStatus::MaxIterations => {
            let gap: f64 = (solver.solution.obj_val - solver.solution.obj_val_dual).abs();
            return Err(SdpError::MaxIterations { gap }.into());
        }
        other => {
            return Err(SdpError::SolverStatus(format!("{other:?}")).into());
        }
    }

    let x = solver.solution.x.clone();
    let sign = if problem.maximize { -1.0 } else { 1.0 };
    let primal_value = sign * solver.solution.obj_val + problem.obj_const;
    let dual_value = sign * solver.solution.obj_val_dual + problem.obj_const;

    // Re-verify feasibility from the compiled sections.
    let mut s = vec![0.0; m];
    let mut off = 0usize;
    section_residuals(&problem.zero, &x, off, &mut s);
    let mut violation = 0.0f64;
    for i in 0..problem.zero.b.len() {
        violation = violation.max(s[i].abs());
    }
    off += problem.zero.b.len();
    section_residuals(&problem.nonneg, &x, off, &mut s);
    for i in 0..problem.nonneg.b.len() {
        violation = violation.max(-s[off + i]);
    }
    off += problem.nonneg.b.len();
    for p in &problem.psd {
        section_residuals(&p.rows, &x, off, &mut s);
        let side = p.side;
        let d = side / 2;
        // unsvec into the complex Hermitian the realified cone encodes
        let mut real = nalgebra::DMatrix::<f64>::zeros(side, side);
        let mut k = 0;
        let sqrt2 = std::f64::consts::SQRT_2;
        for c in 0..side {
            for r in 0..=c {
                let v = if r == c { s[off + k] } else { s[off + k] / sqrt2 };
                real[(r, c)] = v;
                real[(c, r)] = v;
                k += 1;
            }
        }
        let mut h = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let re = 0.5 * (real[(i, j)] + real[(d + i, d + j)]);
                let im = 0.5 * (real[(d + i, j)] - real[(i, d + j)]);
                h[(i, j)] = C64::new(re, im);
            }
        }
        let hop = HermitianOperator::from_herm_unchecked(h);
        violation = violation.max(-hop.min_eigenvalue());
        off += tri(side);
    }

    let gap = (primal_value - dual_value).abs();
    let scale = primal_value.abs().max(dual_value.abs()).max(1.0);
    if gap > params.gap_tol * scale || violation > params.feas_tol {
        return Err(SdpError::ToleranceNotMet {
            gap,
            gap_tol: params.gap_tol * scale,
            violation,
            feas_tol: params.feas_tol,
        }
        .into());
    }

    Ok(SdpSolution {
        primal_value,
        dual_value,
        max_violation: violation,
        iterations: solver.solution.iterations,
        x,
        block_dims: problem.blocks.iter().map(|b| (b.offset, b.dim)).collect(),
    })
}

/// shift + sign * X >= 0 for a single block, the common box-constraint form.
impl SdpProblem {
    pub fn add_psd_from_block(&mut self, id: BlockId, sign: f64, shift: &HermitianOperator) {
        self.add_psd_lincomb(&[(id, sign)], shift);
    }
}
