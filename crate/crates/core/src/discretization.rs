//! Matrix realizations of the Dirichlet operators and eigensolvers for
//! non-normal matrices.

use crate::cheb::ChebGrid;
use crate::error::{Error, Result};
use crate::geometry::{curvilinear_point, BoundaryCurve, PotentialField};
use crate::linalg::{self, CMat, KronSchur, KroneckerSum, ShiftedFactor};
use crate::C64;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, OnceLock};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Largest dimension handled by the dense QR eigensolver.
pub const DENSE_LIMIT: usize = 1200;
/// Largest dimension for any operator built here.
pub const DIMENSION_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Fd2,
    Cheb,
}

/// Nodes on [a, b] including both Dirichlet endpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid1D {
    pub scheme: Scheme,
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid1D {
    /// Chebyshev–Lobatto grid with `n + 1` nodes.
    pub fn cheb(n: usize, a: f64, b: f64) -> Self {
        let g = ChebGrid::new(n, a, b);
        Grid1D { scheme: Scheme::Cheb, a, b, nodes: g.nodes.clone(), weights: g.weights.clone() }
    }

    /// Uniform grid with `n` interior nodes.
    pub fn fd2(n: usize, a: f64, b: f64) -> Self {
        let dx = (b - a) / (n + 1) as f64;
        let nodes: Vec<f64> = (0..n + 2).map(|i| a + dx * i as f64).collect();
        let mut weights = vec![dx; n + 2];
        weights[0] = 0.5 * dx;
        weights[n + 1] = 0.5 * dx;
        Grid1D { scheme: Scheme::Fd2, a, b, nodes, weights }
    }

    pub fn interior(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn interior_weights(&self) -> &[f64] {
        &self.weights[1..self.weights.len() - 1]
    }

    pub fn n_interior(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Second-derivative matrix restricted to interior nodes (Dirichlet rows eliminated).
    pub fn d2_interior(&self) -> Mat<f64> {
        let m = self.n_interior();
        match self.scheme {
            Scheme::Cheb => {
                let g = ChebGrid::new(self.nodes.len() - 1, self.a, self.b);
                let d2 = g.d2();
                Mat::from_fn(m, m, |i, j| d2[(i + 1, j + 1)])
            }
            Scheme::Fd2 => {
                let dx = self.nodes[1] - self.nodes[0];
                let s = 1.0 / (dx * dx);
                Mat::from_fn(m, m, |i, j| {
                    if i == j {
                        -2.0 * s
                    } else if i.abs_diff(j) == 1 {
                        s
                    } else {
                        0.0
                    }
                })
            }
        }
    }

    /// First-derivative matrix on interior rows and interior columns.
    pub fn d1_interior(&self) -> Mat<f64> {
        let m = self.n_interior();
        match self.scheme {
            Scheme::Cheb => {
                let g = ChebGrid::new(self.nodes.len() - 1, self.a, self.b);
                let d1 = g.d1();
                Mat::from_fn(m, m, |i, j| d1[(i + 1, j + 1)])
            }
            Scheme::Fd2 => {
                let dx = self.nodes[1] - self.nodes[0];
                Mat::from_fn(m, m, |i, j| {
                    if j == i + 1 {
                        0.5 / dx
                    } else if i == j + 1 {
                        -0.5 / dx
                    } else {
                        0.0
                    }
                })
            }
        }
    }
}

/// Compressed sparse row matrix with merged duplicates.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().expect("nonempty") += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|r| {
                let mut s = ZERO;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    s += self.vals[k] * x[self.cols[k]];
                }
                s
            })
            .collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    fn shifted_faer(&self, sigma: C64) -> Result<SparseColMat<usize, C64>> {
        let mut trip: Vec<Triplet<usize, usize, C64>> = self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        for i in 0..self.n {
            trip.push(Triplet::new(i, i, -sigma));
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip).map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))
    }

    fn scaled(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for r in 0..self.n {
            for k in out.row_ptr[r]..out.row_ptr[r + 1] {
                out.vals[k] *= left[r] * right[out.cols[k]];
            }
        }
        out
    }
}

pub enum OperatorMatrix {
    Dense(CMat),
    Sparse(SparseMatrix),
    /// `A ⊗ I + I ⊗ B` with cached Schur factors.
    Kron(KroneckerSum, OnceLock<Arc<KronSchur>>),
}

impl Clone for OperatorMatrix {
    fn clone(&self) -> Self {
        match self {
            OperatorMatrix::Dense(m) => OperatorMatrix::Dense(m.clone()),
            OperatorMatrix::Sparse(m) => OperatorMatrix::Sparse(m.clone()),
            OperatorMatrix::Kron(k, c) => OperatorMatrix::Kron(k.clone(), c.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridDescriptor {
    Line { grid: Grid1D },
    Tensor { first: Grid1D, second: Grid1D },
    Polar { n_cheb: usize, radii: Vec<f64>, max_mode: usize },
    Strip { t: Grid1D, s: Grid1D, curve: String },
}

/// A discretized operator with its grid, quadrature weights and provenance.
#[derive(Clone)]
pub struct DiscreteOperator {
    pub matrix: OperatorMatrix,
    pub grid: GridDescriptor,
    /// Quadrature weight of each unknown.
    pub weights: Vec<f64>,
    pub symbol: String,
    pub h: f64,
    pub warnings: Vec<String>,
}

impl std::fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteOperator").field("symbol", &self.symbol).field("dim", &self.dim()).field("h", &self.h).finish()
    }
}

impl DiscreteOperator {
    fn new(matrix: OperatorMatrix, grid: GridDescriptor, weights: Vec<f64>, symbol: String, h: f64) -> Result<Self> {
        let op = DiscreteOperator { matrix, grid, weights, symbol, h, warnings: Vec::new() };
        if op.dim() != op.weights.len() {
            return Err(Error::InternalConsistency("operator dimension does not match the interior node count".into()));
        }
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        match &self.matrix {
            OperatorMatrix::Dense(m) => m.nrows(),
            OperatorMatrix::Sparse(m) => m.n,
            OperatorMatrix::Kron(k, _) => k.dim(),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        match &self.matrix {
            OperatorMatrix::Dense(m) => linalg::matvec(m, x),
            OperatorMatrix::Sparse(m) => m.apply(x),
            OperatorMatrix::Kron(k, _) => k.apply(x),
        }
    }

    pub fn to_dense(&self) -> Result<CMat> {
        if self.dim() > 3 * DENSE_LIMIT.max(3000) {
            return Err(Error::Capability(format!("dense conversion of a {}-dimensional operator", self.dim())));
        }
        Ok(match &self.matrix {
            OperatorMatrix::Dense(m) => m.clone(),
            OperatorMatrix::Sparse(m) => m.to_dense(),
            OperatorMatrix::Kron(k, _) => k.to_dense(),
        })
    }

    pub fn kron_schur(&self) -> Option<Result<Arc<KronSchur>>> {
        match &self.matrix {
            OperatorMatrix::Kron(k, cache) => Some(match cache.get() {
                Some(s) => Ok(s.clone()),
                None => k.factor().map(|f| cache.get_or_init(|| Arc::new(f)).clone()),
            }),
            _ => None,
        }
    }

    /// Factor `A − σ`, retrying with a small jitter when σ is numerically an eigenvalue.
    pub fn shifted_factor(&self, sigma: C64) -> Result<(ShiftedFactor, C64)> {
        let mut s = sigma;
        let probe = linalg::start_vector(self.dim());
        for attempt in 0..4 {
            let f = self.factor_once(s)?;
            let x = f.solve(&probe);
            if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                return Ok((f, s));
            }
            let j = 1e-10 * (1.0 + sigma.norm()) * 10f64.powi(attempt);
            s = sigma + C64::new(j, j);
        }
        Err(Error::Numerical(format!("shifted factorization failed near σ = {sigma}")))
    }

    fn factor_once(&self, sigma: C64) -> Result<ShiftedFactor> {
        Ok(match &self.matrix {
            OperatorMatrix::Dense(m) => {
                let n = m.nrows();
                let a = Mat::from_fn(n, n, |i, j| if i == j { m[(i, j)] - sigma } else { m[(i, j)] });
                ShiftedFactor::Dense(a.partial_piv_lu())
            }
            OperatorMatrix::Sparse(m) => {
                let a = m.shifted_faer(sigma)?;
                ShiftedFactor::Sparse(a.sp_lu().map_err(|e| Error::Numerical(format!("sparse LU failed: {e:?}")))?)
            }
            OperatorMatrix::Kron(..) => {
                let s = self.kron_schur().expect("kron")?;
                ShiftedFactor::Kron(s, sigma)
            }
        })
    }

    /// The similar operator `W^{1/2} A W^{-1/2}`, whose Euclidean norms are
    /// discrete L² norms.
    pub fn l2_similar(&self) -> DiscreteOperator {
        let sq: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let isq: Vec<f64> = sq.iter().map(|w| 1.0 / w).collect();
        let matrix = match &self.matrix {
            OperatorMatrix::Dense(m) => OperatorMatrix::Dense(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * sq[i] * isq[j])),
            OperatorMatrix::Sparse(m) => OperatorMatrix::Sparse(m.scaled(&sq, &isq)),
            OperatorMatrix::Kron(k, _) => {
                let (wa, wb) = match &self.grid {
                    GridDescriptor::Tensor { first, second } => (first.interior_weights().to_vec(), second.interior_weights().to_vec()),
                    _ => unreachable!("Kronecker operators carry tensor grids"),
                };
                let sim = |m: &CMat, w: &[f64]| Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (w[i] / w[j]).sqrt());
                OperatorMatrix::Kron(KroneckerSum { a: sim(&k.a, &wa), b: sim(&k.b, &wb) }, OnceLock::new())
            }
        };
        DiscreteOperator {
            matrix,
            grid: self.grid.clone(),
            weights: vec![1.0; self.dim()],
            symbol: format!("{} (L²-similar)", self.symbol),
            h: self.h,
            warnings: self.warnings.clone(),
        }
    }

    /// Elementwise complex conjugate of the matrix.
    pub fn conjugate(&self) -> DiscreteOperator {
        let cj = |m: &CMat| Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj());
        let matrix = match &self.matrix {
            OperatorMatrix::Dense(m) => OperatorMatrix::Dense(cj(m)),
            OperatorMatrix::Sparse(m) => {
                let mut c = m.clone();
                c.vals.iter_mut().for_each(|v| *v = v.conj());
                OperatorMatrix::Sparse(c)
            }
            OperatorMatrix::Kron(k, _) => OperatorMatrix::Kron(KroneckerSum { a: cj(&k.a), b: cj(&k.b) }, OnceLock::new()),
        };
        DiscreteOperator { matrix, grid: self.grid.clone(), weights: self.weights.clone(), symbol: format!("conj {}", self.symbol), h: self.h, warnings: self.warnings.clone() }
    }

    /// Discrete L² norm using the quadrature weights.
    pub fn weighted_norm(&self, x: &[C64]) -> f64 {
        x.iter().zip(&self.weights).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt()
    }

    /// Coordinate triplet text: a header line `rows cols nnz`, then `i j re im` per entry (0-based).
    pub fn write_triplets<W: Write>(&self, mut out: W) -> Result<()> {
        let entries: Vec<(usize, usize, C64)> = match &self.matrix {
            OperatorMatrix::Sparse(m) => m.triplets().collect(),
            _ => {
                let d = self.to_dense()?;
                let mut v = Vec::new();
                for i in 0..d.nrows() {
                    for j in 0..d.ncols() {
                        if d[(i, j)] != ZERO {
                            v.push((i, j, d[(i, j)]));
                        }
                    }
                }
                v
            }
        };
        let io = |e: std::io::Error| Error::Configuration(format!("triplet export failed: {e}"));
        writeln!(out, "% {} {} {}", self.dim(), self.dim(), entries.len()).map_err(io)?;
        for (i, j, v) in entries {
            writeln!(out, "{i} {j} {:.17e} {:.17e}", v.re, v.im).map_err(io)?;
        }
        Ok(())
    }
}

fn dense_from(d2: &Mat<f64>, scale: f64, diag: impl Fn(usize) -> C64) -> CMat {
    let n = d2.nrows();
    Mat::from_fn(n, n, |i, j| {
        let v = C64::new(scale * d2[(i, j)], 0.0);
        if i == j { v + diag(i) } else { v }
    })
}

fn one_d(grid: &Grid1D, h: f64, pot: impl Fn(f64) -> f64, symbol: String) -> Result<DiscreteOperator> {
    if grid.n_interior() == 0 {
        return Err(Error::Configuration("grid has no interior nodes".into()));
    }
    let d2 = grid.d2_interior();
    let x = grid.interior();
    let h2 = h * h;
    let matrix = match grid.scheme {
        Scheme::Cheb => OperatorMatrix::Dense(dense_from(&d2, -h2, |i| I * pot(x[i]))),
        Scheme::Fd2 => {
            let n = x.len();
            let mut trip = Vec::with_capacity(3 * n);
            for i in 0..n {
                trip.push((i, i, C64::new(-h2 * d2[(i, i)], 0.0) + I * pot(x[i])));
                if i > 0 {
                    trip.push((i, i - 1, C64::new(-h2 * d2[(i, i - 1)], 0.0)));
                }
                if i + 1 < n {
                    trip.push((i, i + 1, C64::new(-h2 * d2[(i, i + 1)], 0.0)));
                }
            }
            OperatorMatrix::Sparse(SparseMatrix::from_triplets(n, trip))
        }
    };
    DiscreteOperator::new(matrix, GridDescriptor::Line { grid: grid.clone() }, grid.interior_weights().to_vec(), symbol, h)
}

/// `−h² d²/dx² + i(V − V(0))` on (0, a) with Dirichlet conditions at both ends.
pub fn build_1d(v: &dyn Fn(f64) -> f64, a: f64, h: f64, grid: &Grid1D) -> Result<DiscreteOperator> {
    if (grid.a).abs() > 1e-14 || (grid.b - a).abs() > 1e-12 * a.max(1.0) {
        return Err(Error::Configuration(format!("grid [{}, {}] does not cover (0, {a})", grid.a, grid.b)));
    }
    let v0 = v(0.0);
    let mut op = one_d(grid, h, |x| v(x) - v0, format!("1d: -h^2 d^2 + i(V - V(0)) on (0, {a}), h = {h}"))?;
    let fd = |x: f64| {
        let d = 1e-5 * a.max(1.0);
        (v(x + d) - v(x - d)) / (2.0 * d)
    };
    for (end, slope) in [(0.0, fd(0.0)), (a, fd(a))] {
        if slope.abs() < 1e-12 {
            continue;
        }
        let ell = h.powf(2.0 / 3.0) / slope.abs().powf(1.0 / 3.0);
        let count = grid.nodes.iter().filter(|&&x| x != end && (x - end).abs() <= ell).count();
        if count < 8 {
            op.warnings.push(format!("resolution: {count} nodes within the boundary layer of width {ell:.3e} at x = {end}"));
        }
    }
    Ok(op)
}

/// `−d²/dτ² + iβ₀τ` on (0, L).
pub fn build_halfline_model(beta0: f64, grid: &Grid1D) -> Result<DiscreteOperator> {
    if beta0 == 0.0 {
        return Err(Error::HypothesisViolation("β₀ must be nonzero".into()));
    }
    one_d(grid, 1.0, |x| beta0 * x, format!("half-line Airy model, beta0 = {beta0}"))
}

/// `−d²/dξ² + q ξ²` on (−L, L) with complex coefficient q (i/2 for the tangential model).
pub fn build_harmonic_model(coefficient: C64, grid: &Grid1D) -> Result<DiscreteOperator> {
    let d2 = grid.d2_interior();
    let x = grid.interior();
    let m = dense_from(&d2, -1.0, |i| coefficient * x[i] * x[i]);
    let matrix = match grid.scheme {
        Scheme::Cheb => OperatorMatrix::Dense(m),
        Scheme::Fd2 => OperatorMatrix::Sparse(dense_to_sparse(&m)),
    };
    DiscreteOperator::new(matrix, GridDescriptor::Line { grid: grid.clone() }, grid.interior_weights().to_vec(), format!("harmonic model, q = {coefficient}"), 1.0)
}

fn dense_to_sparse(m: &CMat) -> SparseMatrix {
    let mut trip = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != ZERO {
                trip.push((i, j, m[(i, j)]));
            }
        }
    }
    SparseMatrix::from_triplets(m.nrows(), trip)
}

fn op_matrix_dense(op: &DiscreteOperator) -> Result<CMat> {
    op.to_dense()
}

/// Tensor model `L_τ ⊗ I + ε^{1/2} I ⊗ L_ξ` with τ ∈ (0, L_τ) and ξ ∈ (−L_ξ, L_ξ).
pub fn build_tensor_model(eps: f64, beta0: f64, tau: &Grid1D, xi: &Grid1D) -> Result<DiscreteOperator> {
    if !(eps > 0.0) {
        return Err(Error::Configuration("ε must be positive".into()));
    }
    let dim = tau.n_interior() * xi.n_interior();
    if dim > DIMENSION_BUDGET {
        return Err(Error::Capability(format!("tensor dimension {dim} exceeds the budget {DIMENSION_BUDGET}")));
    }
    let a = op_matrix_dense(&build_halfline_model(beta0, tau)?)?;
    let b = op_matrix_dense(&build_harmonic_model(C64::new(0.0, 0.5), xi)?)?;
    let se = eps.sqrt();
    let b = Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * se);
    tensor_operator(a, b, tau, xi, format!("tensor model, eps = {eps}, beta0 = {beta0}"), 1.0)
}

fn tensor_operator(a: CMat, b: CMat, first: &Grid1D, second: &Grid1D, symbol: String, h: f64) -> Result<DiscreteOperator> {
    let wa = first.interior_weights();
    let wb = second.interior_weights();
    let weights: Vec<f64> = wa.iter().flat_map(|x| wb.iter().map(move |y| x * y)).collect();
    DiscreteOperator::new(
        OperatorMatrix::Kron(KroneckerSum { a, b }, OnceLock::new()),
        GridDescriptor::Tensor { first: first.clone(), second: second.clone() },
        weights,
        symbol,
        h,
    )
}

/// `A ⊗ I + I ⊗ B` from two one-dimensional operators.
pub fn kron_sum(first: &DiscreteOperator, second: &DiscreteOperator) -> Result<DiscreteOperator> {
    let (GridDescriptor::Line { grid: g1 }, GridDescriptor::Line { grid: g2 }) = (&first.grid, &second.grid) else {
        return Err(Error::Configuration("Kronecker sums need one-dimensional factors".into()));
    };
    let dim = first.dim() * second.dim();
    if dim > DIMENSION_BUDGET {
        return Err(Error::Capability(format!("dimension {dim} exceeds the budget {DIMENSION_BUDGET}")));
    }
    tensor_operator(first.to_dense()?, second.to_dense()?, g1, g2, format!("{} ⊕ {}", first.symbol, second.symbol), first.h)
}

/// Rectangle with separable potential `V = f(t) + g(s)`: `−h²Δ + iV` as a Kronecker sum.
pub fn build_rect_separable(
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    h: f64,
    t: &Grid1D,
    s: &Grid1D,
) -> Result<DiscreteOperator> {
    let dim = t.n_interior() * s.n_interior();
    if dim > DIMENSION_BUDGET {
        return Err(Error::Capability(format!("dimension {dim} exceeds the budget {DIMENSION_BUDGET}")));
    }
    let a = one_d(t, h, f, String::new())?.to_dense()?;
    let b = one_d(s, h, g, String::new())?.to_dense()?;
    tensor_operator(a, b, t, s, format!("rectangle, separable potential, h = {h}"), h)
}

/// Two-dimensional potential with an optional constant removed.
pub struct Potential2D<'a> {
    pub field: &'a dyn PotentialField,
    pub shift: f64,
}

/// Polar Fourier–Chebyshev discretization of the unit-radius disk centred at the origin.
#[derive(Debug, Clone, Copy)]
pub struct PolarSpec {
    /// Chebyshev degree on [−1, 1]; must be odd so r = 0 is not a node.
    pub n_cheb: usize,
    /// Fourier modes |k| ≤ max_mode.
    pub max_mode: usize,
    pub radius: f64,
}

/// Boundary-strip discretization in curvilinear coordinates.
#[derive(Clone, Copy)]
pub struct StripSpec<'a> {
    pub curve: &'a dyn BoundaryCurve,
    pub s0: f64,
    pub half_length: f64,
    pub depth: f64,
    pub n_t: usize,
    pub n_s: usize,
}

pub enum Domain2D<'a> {
    Disk(PolarSpec),
    Strip(StripSpec<'a>),
}

/// `−h²Δ + i(V − shift)` on a disk (polar) or on a boundary strip (curvilinear).
pub fn build_2d(domain: &Domain2D<'_>, pot: &Potential2D<'_>, h: f64) -> Result<DiscreteOperator> {
    match domain {
        Domain2D::Disk(spec) => build_disk(spec, pot, h),
        Domain2D::Strip(spec) => build_strip(spec, pot, h),
    }
}

fn build_disk(spec: &PolarSpec, pot: &Potential2D<'_>, h: f64) -> Result<DiscreteOperator> {
    let n = spec.n_cheb;
    if n % 2 == 0 || n < 5 {
        return Err(Error::Configuration("polar grid needs an odd Chebyshev degree ≥ 5 to avoid the axis node".into()));
    }
    let kmax = spec.max_mode as i64;
    let cheb = ChebGrid::new(n, -spec.radius, spec.radius);
    let d1 = cheb.d1();
    let d2 = cheb.d2();
    let pos: Vec<usize> = ((n + 1) / 2..n).collect();
    let nr = pos.len();
    let nk = (2 * kmax + 1) as usize;
    let dim = nr * nk;
    if dim > DIMENSION_BUDGET {
        return Err(Error::Capability(format!("polar dimension {dim} exceeds the budget {DIMENSION_BUDGET}")));
    }
    let r: Vec<f64> = pos.iter().map(|&j| cheb.nodes[j]).collect();
    // Fourier modes of V on each circle
    let m_theta = (4 * spec.max_mode + 16).next_power_of_two().max(64);
    let mmax = 2 * kmax;
    let mut vhat = vec![vec![ZERO; nr]; (2 * mmax + 1) as usize];
    for (ir, &rr) in r.iter().enumerate() {
        let samples: Vec<f64> = (0..m_theta)
            .map(|l| {
                let th = 2.0 * PI * l as f64 / m_theta as f64;
                pot.field.value([rr * th.cos(), rr * th.sin()]) - pot.shift
            })
            .collect();
        for m in -mmax..=mmax {
            let mut acc = ZERO;
            for (l, &v) in samples.iter().enumerate() {
                let th = 2.0 * PI * l as f64 / m_theta as f64;
                acc += v * C64::from_polar(1.0, -(m as f64) * th);
            }
            vhat[(m + mmax) as usize][ir] = acc / m_theta as f64;
        }
    }
    let vscale = vhat.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let h2 = h * h;
    let mut trip = Vec::new();
    for k in -kmax..=kmax {
        let p = if k % 2 == 0 { 1.0 } else { -1.0 };
        let row0 = ((k + kmax) as usize) * nr;
        for (i, &gi) in pos.iter().enumerate() {
            for (j, &gj) in pos.iter().enumerate() {
                let mirror = n - gj;
                let a2 = d2[(gi, gj)] + p * d2[(gi, mirror)];
                let a1 = d1[(gi, gj)] + p * d1[(gi, mirror)];
                let mut v = -h2 * (a2 + a1 / r[i]);
                if i == j {
                    v += h2 * (k * k) as f64 / (r[i] * r[i]);
                }
                if v != 0.0 {
                    trip.push((row0 + i, row0 + j, C64::new(v, 0.0)));
                }
            }
        }
        for kp in -kmax..=kmax {
            let m = k - kp;
            if m.abs() > mmax {
                continue;
            }
            let col0 = ((kp + kmax) as usize) * nr;
            for i in 0..nr {
                let v = vhat[(m + mmax) as usize][i];
                if v.norm() > 1e-15 * vscale {
                    trip.push((row0 + i, col0 + i, I * v));
                }
            }
        }
    }
    let wcc = &cheb.weights;
    let mut weights = Vec::with_capacity(dim);
    for _ in 0..nk {
        for (i, &g) in pos.iter().enumerate() {
            weights.push(2.0 * PI * wcc[g] * r[i]);
        }
    }
    DiscreteOperator::new(
        OperatorMatrix::Sparse(SparseMatrix::from_triplets(dim, trip)),
        GridDescriptor::Polar { n_cheb: n, radii: r, max_mode: spec.max_mode },
        weights,
        format!("disk (radius {}), polar Fourier-Chebyshev, h = {h}", spec.radius),
        h,
    )
}

fn build_strip(spec: &StripSpec<'_>, pot: &Potential2D<'_>, h: f64) -> Result<DiscreteOperator> {
    let curve = spec.curve;
    let s_lo = spec.s0 - spec.half_length;
    let s_hi = spec.s0 + spec.half_length;
    let kmax = (0..=400)
        .map(|i| curve.curvature(s_lo + (s_hi - s_lo) * i as f64 / 400.0).abs())
        .fold(0.0, f64::max);
    if kmax > 0.0 && spec.depth >= 1.0 / kmax {
        return Err(Error::Configuration(format!("strip depth {} exceeds 1/max|κ| = {}", spec.depth, 1.0 / kmax)));
    }
    let tg = Grid1D::cheb(spec.n_t, 0.0, spec.depth);
    let sg = Grid1D::cheb(spec.n_s, s_lo, s_hi);
    let (nt, ns) = (tg.n_interior(), sg.n_interior());
    let dim = nt * ns;
    if dim > DIMENSION_BUDGET {
        return Err(Error::Capability(format!("strip dimension {dim} exceeds the budget {DIMENSION_BUDGET}")));
    }
    let dt1 = tg.d1_interior();
    let dt2 = tg.d2_interior();
    let ds1 = sg.d1_interior();
    let ds2 = sg.d2_interior();
    let h2 = h * h;
    let mut trip = Vec::with_capacity(dim * (nt + ns));
    let mut weights = Vec::with_capacity(dim);
    for (it, &t) in tg.interior().iter().enumerate() {
        for (js, &s) in sg.interior().iter().enumerate() {
            let kap = curve.curvature(s);
            let kp = curve.curvature_derivative(s);
            let g = 1.0 - t * kap;
            let row = it * ns + js;
            // Δ = u_tt − (κ/g) u_t + u_ss / g² + (t κ′ / g³) u_s
            for jt in 0..nt {
                let v = dt2[(it, jt)] - kap / g * dt1[(it, jt)];
                if v != 0.0 {
                    trip.push((row, jt * ns + js, C64::new(-h2 * v, 0.0)));
                }
            }
            for ks in 0..ns {
                let v = ds2[(js, ks)] / (g * g) + t * kp / g.powi(3) * ds1[(js, ks)];
                if v != 0.0 {
                    trip.push((row, it * ns + ks, C64::new(-h2 * v, 0.0)));
                }
            }
            let x = curvilinear_point(curve, s, t);
            trip.push((row, row, I * (pot.field.value(x) - pot.shift)));
            weights.push(tg.interior_weights()[it] * sg.interior_weights()[js] * g);
        }
    }
    DiscreteOperator::new(
        OperatorMatrix::Sparse(SparseMatrix::from_triplets(dim, trip)),
        GridDescriptor::Strip { t: tg, s: sg, curve: curve.name() },
        weights,
        format!("boundary strip of {} near s = {}, h = {h}", curve.name(), spec.s0),
        h,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    DenseQr,
    ShiftInvertArnoldi,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSolveReport {
    pub eigenvalues: Vec<C64>,
    /// ‖Au − λu‖ / ‖u‖ recomputed from the assembled matrix.
    pub residuals: Vec<f64>,
    pub accepted: Vec<bool>,
    pub method: EigenMethod,
    pub dim: usize,
    pub iterations: usize,
    pub shift: Option<C64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<C64>>,
}

impl EigenSolveReport {
    /// Leftmost accepted eigenvalue.
    pub fn leftmost(&self) -> Option<C64> {
        self.eigenvalues.iter().zip(&self.accepted).find(|(_, &a)| a).map(|(l, _)| *l)
    }

    /// Accepted eigenvalue closest to `z`.
    pub fn nearest(&self, z: C64) -> Option<C64> {
        self.eigenvalues
            .iter()
            .zip(&self.accepted)
            .filter(|(_, &a)| a)
            .map(|(l, _)| *l)
            .min_by(|a, b| (a - z).norm().partial_cmp(&(b - z).norm()).unwrap_or(std::cmp::Ordering::Equal))
    }
}

/// Residual acceptance threshold for an eigenvalue of modulus `|λ|`.
pub fn acceptance_tolerance(lambda: C64) -> f64 {
    1e-8 * lambda.norm().max(1.0)
}

fn certify(op: &DiscreteOperator, lambda: C64, v: &[C64]) -> f64 {
    let av = op.apply(v);
    let r: Vec<C64> = av.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
    linalg::norm2(&r) / linalg::norm2(v).max(1e-300)
}

/// Indices ordered by real part; eigenvalues whose real parts agree to
/// `1e-7·|λ|` are ordered by modulus (mirror-image boundary modes share a real part).
pub fn leftmost_order(values: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].re.partial_cmp(&values[j].re).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let first = values[idx[start]];
        let mut end = start + 1;
        while end < idx.len() && (values[idx[end]].re - first.re).abs() <= 1e-7 * first.norm().max(values[idx[end]].norm()) {
            end += 1;
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&i, &j| values[i].norm().partial_cmp(&values[j].norm()).unwrap_or(std::cmp::Ordering::Equal));
        out.extend(group);
        start = end;
    }
    out
}

fn sort_report(pairs: Vec<(C64, f64, Vec<C64>)>, method: EigenMethod, dim: usize, iterations: usize, shift: Option<C64>) -> EigenSolveReport {
    let vals: Vec<C64> = pairs.iter().map(|p| p.0).collect();
    let order = leftmost_order(&vals);
    let mut slots: Vec<Option<(C64, f64, Vec<C64>)>> = pairs.into_iter().map(Some).collect();
    let pairs: Vec<(C64, f64, Vec<C64>)> = order.into_iter().map(|i| slots[i].take().expect("permutation")).collect();
    EigenSolveReport {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.1).collect(),
        accepted: pairs.iter().map(|p| p.1 <= acceptance_tolerance(p.0)).collect(),
        method,
        dim,
        iterations,
        shift,
        vectors: pairs.into_iter().map(|p| p.2).collect(),
    }
}

/// Dense QR: the `k` eigenvalues of smallest real part, or nearest `shift` when one is given.
pub fn dense_eigenvalues(op: &DiscreteOperator, k: usize, shift: Option<C64>) -> Result<EigenSolveReport> {
    let a = op.to_dense()?;
    let n = a.nrows();
    let eig = a.eigen().map_err(|e| Error::Numerical(format!("dense eigensolver failed: {e:?}")))?;
    let all: Vec<C64> = (0..n).map(|i| eig.S()[i]).collect();
    let idx = match shift {
        Some(s) => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&i, &j| (all[i] - s).norm().partial_cmp(&(all[j] - s).norm()).unwrap_or(std::cmp::Ordering::Equal));
            idx
        }
        None => leftmost_order(&all),
    };
    let pairs: Vec<(C64, f64, Vec<C64>)> = idx
        .into_iter()
        .take(k)
        .map(|i| {
            let v: Vec<C64> = (0..n).map(|r| eig.U()[(r, i)]).collect();
            let l = eig.S()[i];
            (l, certify(op, l, &v), v)
        })
        .collect();
    Ok(sort_report(pairs, EigenMethod::DenseQr, n, 1, shift))
}

/// Shift-invert Arnoldi: the `k` eigenvalues nearest `shift`.
pub fn shift_invert_eigenvalues(op: &DiscreteOperator, k: usize, shift: C64) -> Result<EigenSolveReport> {
    let (factor, sigma) = op.shifted_factor(shift)?;
    let n = op.dim();
    let (pairs, iterations) = linalg::shift_invert_arnoldi(n, |x| factor.solve(x), |x| op.apply(x), sigma, k, 1e-10, 30)?;
    if pairs.is_empty() {
        return Err(Error::Numerical("shift-invert Arnoldi produced no Ritz pairs".into()));
    }
    let pairs: Vec<(C64, f64, Vec<C64>)> = pairs.into_iter().map(|p| (p.lambda, certify(op, p.lambda, &p.vector), p.vector)).collect();
    let report = sort_report(pairs, EigenMethod::ShiftInvertArnoldi, n, iterations, Some(shift));
    if !report.accepted.iter().any(|&a| a) {
        let best = report.residuals.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::Numerical(format!(
            "shift-invert Arnoldi did not converge after {iterations} iterations (best residual {best:.3e}, best iterate {})",
            report.eigenvalues[0]
        )));
    }
    Ok(report)
}

/// Dense QR up to [`DENSE_LIMIT`] unknowns, shift-invert Arnoldi beyond.
pub fn leftmost_eigenvalues(op: &DiscreteOperator, k: usize, shift: Option<C64>) -> Result<EigenSolveReport> {
    if op.dim() <= DENSE_LIMIT {
        dense_eigenvalues(op, k, shift)
    } else {
        let s = shift.ok_or_else(|| Error::Configuration(format!("a shift is required above {DENSE_LIMIT} unknowns")))?;
        shift_invert_eigenvalues(op, k, s)
    }
}

/// Interior nodes of `grid` mapped through `f`.
pub fn sample_interior(grid: &Grid1D, f: impl Fn(f64) -> C64) -> Vec<C64> {
    grid.interior().iter().map(|&x| f(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airy;
    use crate::geometry::{Circle, PolyPotential};

    fn mu1() -> f64 {
        airy::ai_zero(1).unwrap()
    }

    #[test]
    fn dirichlet_laplacian_closed_form() {
        let h = 0.1;
        for grid in [Grid1D::cheb(40, 0.0, 2.0), Grid1D::fd2(400, 0.0, 2.0)] {
            let op = build_1d(&|_| 0.0, 2.0, h, &grid).unwrap();
            let rep = dense_eigenvalues(&op, 3, None).unwrap();
            for (k, l) in rep.eigenvalues.iter().enumerate() {
                let exact = h * h * PI * PI * ((k + 1) * (k + 1)) as f64 / 4.0;
                let tol = if grid.scheme == Scheme::Cheb { 1e-10 } else { 1e-4 };
                assert!((l.re - exact).abs() <= tol * exact, "{l} vs {exact}");
                assert!(l.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_potential_gives_symmetric_matrix() {
        let op = build_1d(&|_| 3.0, 1.0, 0.05, &Grid1D::fd2(50, 0.0, 1.0)).unwrap();
        let d = op.to_dense().unwrap();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                assert_eq!(d[(i, j)], d[(j, i)]);
            }
        }
    }

    #[test]
    fn linear_potential_leftmost_eigenvalue() {
        let h = 0.01;
        let op = build_1d(&|x| x, 1.0, h, &Grid1D::cheb(200, 0.0, 1.0)).unwrap();
        assert!(op.warnings.is_empty(), "{:?}", op.warnings);
        let rep = dense_eigenvalues(&op, 4, None).unwrap();
        let expect = C64::from_polar(h.powf(2.0 / 3.0) * mu1().abs(), PI / 3.0);
        let near = rep.nearest(expect).unwrap();
        assert!((near - expect).norm() / expect.norm() < 1e-3);
        assert!(rep.accepted.iter().all(|&a| a));
    }

    #[test]
    fn coarse_grid_warns() {
        let op = build_1d(&|x| x, 1.0, 0.001, &Grid1D::fd2(30, 0.0, 1.0)).unwrap();
        assert!(!op.warnings.is_empty());
    }

    #[test]
    fn model_operators_match_closed_forms() {
        let op = build_halfline_model(1.0, &Grid1D::cheb(200, 0.0, 30.0)).unwrap();
        let rep = dense_eigenvalues(&op, 1, None).unwrap();
        let l = rep.eigenvalues[0];
        let expect = C64::from_polar(mu1().abs(), PI / 3.0);
        assert!((l - expect).norm() / expect.norm() < 1e-6, "{l}");
        let op = build_harmonic_model(C64::new(0.0, 0.5), &Grid1D::cheb(160, -12.0, 12.0)).unwrap();
        let rep = dense_eigenvalues(&op, 1, None).unwrap();
        let expect = C64::from_polar(0.5f64.sqrt(), PI / 4.0);
        assert!((rep.eigenvalues[0] - expect).norm() < 1e-6, "{}", rep.eigenvalues[0]);
    }

    #[test]
    fn dense_and_shift_invert_agree() {
        let h = 0.01;
        let op = build_1d(&|x| x, 1.0, h, &Grid1D::fd2(400, 0.0, 1.0)).unwrap();
        let d = dense_eigenvalues(&op, 3, None).unwrap();
        let target = d.eigenvalues[0];
        let s = shift_invert_eigenvalues(&op, 3, target * C64::new(1.01, 0.01)).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        assert!(s.residuals.iter().all(|&r| r <= 1e-8));
        let nearest = s.nearest(target).unwrap();
        assert!((nearest - target).norm() <= 1e-8 * target.norm().max(1.0) * 10.0, "{nearest} vs {target}");
    }

    #[test]
    fn tensor_model_matches_lattice() {
        let tau = Grid1D::cheb(60, 0.0, 16.0);
        let xi = Grid1D::cheb(60, -10.0, 10.0);
        let eps = 0.04;
        let op = build_tensor_model(eps, 1.0, &tau, &xi).unwrap();
        let expect = C64::from_polar(mu1().abs(), PI / 3.0) + eps.sqrt() * C64::from_polar(0.5f64.sqrt(), PI / 4.0);
        let rep = shift_invert_eigenvalues(&op, 2, expect + 0.01).unwrap();
        let l = rep.nearest(expect).unwrap();
        assert!((l - expect).norm() < 1e-5, "{l} vs {expect}");
    }

    #[test]
    fn separable_rectangle_adds_one_dimensional_eigenvalues() {
        let h = 0.2;
        let tg = Grid1D::cheb(24, 0.0, 1.0);
        let sg = Grid1D::cheb(20, -1.0, 1.0);
        let f = |t: f64| t;
        let g = |s: f64| s * s;
        let op = build_rect_separable(&f, &g, h, &tg, &sg).unwrap();
        let a = dense_eigenvalues(&one_d(&tg, h, f, String::new()).unwrap(), 1, None).unwrap().eigenvalues[0];
        let b = dense_eigenvalues(&one_d(&sg, h, g, String::new()).unwrap(), 1, None).unwrap().eigenvalues[0];
        let rep = dense_eigenvalues(&op, 1, None).unwrap();
        assert!((rep.eigenvalues[0] - (a + b)).norm() <= 1e-8 * (a + b).norm());
    }

    #[test]
    fn negated_potential_conjugates_the_matrix() {
        let grid = Grid1D::cheb(30, 0.0, 1.0);
        let a = build_1d(&|x| x + x * x, 1.0, 0.1, &grid).unwrap().to_dense().unwrap();
        let b = build_1d(&|x| -x - x * x, 1.0, 0.1, &grid).unwrap().to_dense().unwrap();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                assert_eq!(a[(i, j)].conj(), b[(i, j)]);
            }
        }
    }

    #[test]
    fn disk_and_strip_agree() {
        let h = 0.04;
        let v = PolyPotential::new(vec![(2, 0, 1.0), (0, 1, 1.0)]);
        let pot = Potential2D { field: &v, shift: 0.0 };
        let disk = build_2d(&Domain2D::Disk(PolarSpec { n_cheb: 61, max_mode: 30, radius: 1.0 }), &pot, h).unwrap();
        let circle = Circle { center: [0.0, 0.0], radius: 1.0 };
        let strip = build_2d(
            &Domain2D::Strip(StripSpec { curve: &circle, s0: PI / 2.0, half_length: 2.0, depth: 0.9, n_t: 40, n_s: 70 }),
            &pot,
            h,
        )
        .unwrap();
        let mu = mu1().abs();
        let predict = C64::new(0.0, 1.0) + h.powf(2.0 / 3.0) * mu * C64::from_polar(1.0, -PI / 3.0) + h * C64::from_polar(0.5f64.sqrt(), PI / 4.0);
        let a = shift_invert_eigenvalues(&disk, 3, predict).unwrap().nearest(predict).unwrap();
        let b = leftmost_eigenvalues(&strip, 3, Some(predict)).unwrap().nearest(predict).unwrap();
        assert!((a - b).norm() / a.norm() < 1e-3, "{a} vs {b}");
        // the h-order term is h/2 here, 15% of the leading real part at this h
        assert!((a.re - predict.re).abs() / predict.re < 0.03, "{a}");
    }

    #[test]
    fn triplet_export_round_trips_dimensions() {
        let op = build_1d(&|x| x, 1.0, 0.1, &Grid1D::fd2(10, 0.0, 1.0)).unwrap();
        let mut buf = Vec::new();
        op.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "% 10 10 28");
        assert_eq!(lines.count(), 28);
    }

    #[test]
    fn l2_similarity_preserves_spectrum() {
        let op = build_harmonic_model(C64::new(0.0, 0.5), &Grid1D::cheb(60, -8.0, 8.0)).unwrap();
        let a = dense_eigenvalues(&op, 3, None).unwrap();
        let b = dense_eigenvalues(&op.l2_similar(), 3, None).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).norm() < 1e-9);
        }
    }
}
