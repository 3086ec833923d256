//! Perturbative eigenvalue expansion at a boundary point of an interval:
//! Taylor data, the solvability recursion for λ_k, corrector profiles,
//! the cutoff quasimode and its residual.

use crate::cheb::ChebGrid;
use crate::discretization::Grid1D;
use crate::error::{Error, Result};
use crate::linalg::col_vec;
use crate::model::{airy_halfline_eigenfunction, HalfLineAiryModel, Normalization};
use crate::C64;
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Default Chebyshev degree for corrector solves.
pub const DEFAULT_NODES: usize = 256;
/// Default half-line length in units of |β₀|^{-1/3}.
pub const DEFAULT_LENGTH: f64 = 40.0;
/// Largest acceptable solvability defect of a corrector right-hand side.
pub const SOLVABILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoint {
    #[default]
    Left,
    Right,
}

/// One-sided Taylor data `β_j = Ṽ^{(j+1)}(0)/(j+1)!` of the potential seen from an endpoint,
/// with `Ṽ(y) = V(y)` at the left end and `Ṽ(y) = V(a − y)` at the right end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTaylor {
    pub betas: Vec<f64>,
    /// Per-coefficient absolute error estimates (zero for exact data).
    pub errors: Vec<f64>,
    pub endpoint: Endpoint,
    pub a: f64,
    /// V(0).
    pub v0: f64,
    /// V at the selected endpoint.
    pub v_end: f64,
}

impl PotentialTaylor {
    /// Exact Taylor data at the left endpoint.
    pub fn left(betas: Vec<f64>, a: f64, v0: f64) -> Result<Self> {
        let pt = PotentialTaylor { errors: vec![0.0; betas.len()], betas, endpoint: Endpoint::Left, a, v0, v_end: v0 };
        pt.check()?;
        Ok(pt)
    }

    fn check(&self) -> Result<()> {
        let scale = self.betas.iter().map(|b| b.abs()).fold(0.0, f64::max);
        match self.betas.first() {
            None => Err(Error::Configuration("empty Taylor data".into())),
            Some(b) if b.abs() < 1e-8 * scale || scale == 0.0 => {
                Err(Error::HypothesisViolation(format!("V′ vanishes at the endpoint (β₀ = {b:.3e}); the boundary-layer expansion needs V′ ≠ 0")))
            }
            _ => Ok(()),
        }
    }

    pub fn beta0(&self) -> f64 {
        self.betas[0]
    }

    /// Constant `i(V(endpoint) − V(0))` added to the physical eigenvalue.
    pub fn offset(&self) -> C64 {
        I * (self.v_end - self.v0)
    }
}

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// m-th derivative at 0 by central differences in step s, Richardson-extrapolated in s².
fn richardson_derivative(f: &dyn Fn(f64) -> f64, m: usize, s0: f64) -> (f64, f64) {
    let levels = 10;
    let ratio: f64 = 1.5;
    let mut steps = Vec::with_capacity(levels);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..levels {
        let s = s0 / ratio.powi(i as i32);
        let mut acc = 0.0;
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binomial(m, k) * f((m as f64 / 2.0 - k as f64) * s);
        }
        steps.push(s * s);
        let mut row = vec![acc / s.powi(m as i32)];
        for j in 1..=i {
            let (x0, xi) = (steps[i - j], steps[i]);
            let prev = row[j - 1];
            let up = table[i - 1][j - 1];
            row.push(prev + (prev - up) * xi / (x0 - xi));
        }
        if i > 0 {
            for j in 1..=i {
                let err = (row[j] - row[j - 1]).abs().max((row[j] - table[i - 1][j - 1]).abs());
                if err < best.1 {
                    best = (row[j], err);
                }
            }
        }
        table.push(row);
    }
    best
}

/// Numerical Taylor data of a smooth potential at an endpoint of (0, a).
pub fn taylor_from_callable(v: &dyn Fn(f64) -> f64, endpoint: Endpoint, a: f64, order: usize) -> Result<PotentialTaylor> {
    if order > 10 {
        return Err(Error::Capability("Taylor extraction supports orders up to 10".into()));
    }
    let reflected = |y: f64| match endpoint {
        Endpoint::Left => v(y),
        Endpoint::Right => v(a - y),
    };
    let mut betas = Vec::with_capacity(order + 1);
    let mut errors = Vec::with_capacity(order + 1);
    for j in 0..=order {
        let m = j + 1;
        let (d, e) = richardson_derivative(&reflected, m, 2.0);
        let f = factorial(m);
        // exact zeros come out as rounding noise
        let b = if d.abs() <= 10.0 * e { 0.0 } else { d / f };
        betas.push(b);
        errors.push(e / f);
    }
    let pt = PotentialTaylor {
        betas,
        errors,
        endpoint,
        a,
        v0: v(0.0),
        v_end: match endpoint {
            Endpoint::Left => v(0.0),
            Endpoint::Right => v(a),
        },
    };
    pt.check()?;
    Ok(pt)
}

/// Reconstruction data for the physical eigenvalue `offset + h^{2/3} Σ λ_j h^{2j/3}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scaling {
    pub eps_exponent: f64,
    pub offset: C64,
    pub endpoint: Endpoint,
    /// The alternative right-endpoint offset `i(V(a) − V(0) − a)`, kept for comparison.
    pub nominal_offset: Option<C64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionSeries {
    pub mode: usize,
    pub order: usize,
    pub lambdas: Vec<C64>,
    pub scaling: Scaling,
    /// Relative kernel component of each corrector right-hand side (Fredholm certificate).
    pub solvability_defects: Vec<f64>,
    pub taylor: PotentialTaylor,
}

impl ExpansionSeries {
    /// `Σ_{j≤N} λ_j ε^j`.
    pub fn truncated(&self, eps: f64) -> C64 {
        self.lambdas.iter().rev().fold(ZERO, |acc, l| acc * eps + l)
    }

    /// Physical eigenvalue prediction at semiclassical parameter h.
    pub fn physical(&self, h: f64) -> C64 {
        let eps = h.powf(self.scaling.eps_exponent);
        self.scaling.offset + eps * self.truncated(eps)
    }
}

/// Corrector profiles `u_0..u_N` sampled at every node of a Chebyshev grid on [0, L].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Correctors {
    pub grid: Grid1D,
    pub profiles: Vec<Vec<C64>>,
}

/// Bordered collocation solver for `(A₀ − λ₀)u = f`, `⟨v̄_n, u⟩ = 0`.
pub struct CorrectorSolver {
    pub model: HalfLineAiryModel,
    pub lambda0: C64,
    pub grid: Grid1D,
    u0: Vec<C64>,
    op: Mat<C64>,
    lu: PartialPivLu<C64>,
}

impl CorrectorSolver {
    pub fn new(model: HalfLineAiryModel, n: usize, grid: &Grid1D) -> Result<Self> {
        let pair = airy_halfline_eigenfunction(&model, n, grid, Normalization::BilinearUnit)?;
        Self::with_kernel(model, pair.eigenvalue, pair.values, grid)
    }

    /// Solver around a given kernel vector `u0` (all nodes) and eigenvalue `lambda0`.
    pub fn with_kernel(model: HalfLineAiryModel, lambda0: C64, mut u0: Vec<C64>, grid: &Grid1D) -> Result<Self> {
        // Dirichlet values are exact zeros, not rounding residue of Ai(μ_n)
        u0[0] = ZERO;
        *u0.last_mut().expect("nonempty grid") = ZERO;
        let cheb = ChebGrid::new(grid.nodes.len() - 1, grid.a, grid.b);
        let d2 = cheb.d2();
        let m = grid.nodes.len() - 2;
        let beta0 = model.beta0;
        let op = Mat::from_fn(m, m, |i, j| {
            let mut v = C64::new(-d2[(i + 1, j + 1)], 0.0);
            if i == j {
                v += I * beta0 * grid.nodes[i + 1] - lambda0;
            }
            v
        });
        let w = &grid.weights;
        let bordered = Mat::from_fn(m + 1, m + 1, |i, j| match (i < m, j < m) {
            (true, true) => op[(i, j)],
            (true, false) => u0[i + 1],
            (false, true) => w[j + 1] * u0[j + 1],
            (false, false) => ZERO,
        });
        let lu = bordered.partial_piv_lu();
        Ok(CorrectorSolver { model, lambda0, grid: grid.clone(), u0, op, lu })
    }

    pub fn kernel(&self) -> &[C64] {
        &self.u0
    }

    /// Bilinear pairing `∫ u0 f`.
    pub fn pairing(&self, f: &[C64]) -> C64 {
        self.u0.iter().zip(f).zip(&self.grid.weights).map(|((a, b), w)| a * b * *w).sum()
    }

    fn l2(&self, f: &[C64]) -> f64 {
        f.iter().zip(&self.grid.weights).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt()
    }

    /// Relative kernel component `|⟨u0, f⟩| / (‖u0‖‖f‖)`.
    pub fn defect(&self, rhs: &[C64]) -> f64 {
        let n = self.l2(rhs);
        if n == 0.0 {
            return 0.0;
        }
        self.pairing(rhs).norm() / (self.l2(&self.u0) * n)
    }

    /// Solve for the gauge-fixed corrector; `rhs` is sampled at every node.
    pub fn solve(&self, rhs: &[C64], order: usize) -> Result<Vec<C64>> {
        let defect = self.defect(rhs);
        if defect > SOLVABILITY_TOL {
            return Err(Error::InconsistentRecursion { order, defect });
        }
        let m = self.grid.nodes.len() - 2;
        let mut b: Vec<C64> = rhs[1..m + 1].to_vec();
        b.push(ZERO);
        let mut x = col_vec(&b);
        self.lu.solve_in_place(&mut x);
        let mut u = vec![ZERO];
        u.extend((0..m).map(|i| x[(i, 0)]));
        u.push(ZERO);
        // residual against the unbordered operator, after removing the tiny kernel multiplier
        let s = x[(m, 0)];
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..m {
            let mut r = -rhs[i + 1] + s * self.u0[i + 1];
            for j in 0..m {
                r += self.op[(i, j)] * u[j + 1];
            }
            num += r.norm_sqr() * self.grid.weights[i + 1];
            den += rhs[i + 1].norm_sqr() * self.grid.weights[i + 1];
        }
        if den > 0.0 && (num / den).sqrt() > 1e-8 {
            return Err(Error::Numerical(format!("corrector residual {:.3e} at order {order}", (num / den).sqrt())));
        }
        Ok(u)
    }
}

/// One corrector solve `(A₀ − λ₀)u = rhs` on the model's default grid.
pub fn solve_corrector(rhs: &[C64], model: &HalfLineAiryModel, n: usize, grid: &Grid1D) -> Result<Vec<C64>> {
    CorrectorSolver::new(*model, n, grid)?.solve(rhs, 0)
}

/// Default corrector grid `[0, 40|β₀|^{-1/3}]` with 256 Chebyshev intervals.
pub fn default_grid(beta0: f64) -> Grid1D {
    Grid1D::cheb(DEFAULT_NODES, 0.0, DEFAULT_LENGTH / beta0.abs().cbrt())
}

/// Eigenvalue coefficients λ_0..λ_N for mode n.
pub fn lambda_series(pt: &PotentialTaylor, n: usize, order: usize) -> Result<ExpansionSeries> {
    expand(pt, n, order, &default_grid(pt.beta0())).map(|(s, _)| s)
}

/// Eigenvalue coefficients and corrector profiles on a given grid.
pub fn expand(pt: &PotentialTaylor, n: usize, order: usize, grid: &Grid1D) -> Result<(ExpansionSeries, Correctors)> {
    pt.check()?;
    let flip = pt.beta0() < 0.0;
    let sgn = if flip { -1.0 } else { 1.0 };
    let betas: Vec<f64> = (0..=order).map(|j| sgn * pt.betas.get(j).copied().unwrap_or(0.0)).collect();
    let model = HalfLineAiryModel::new(betas[0])?;
    let solver = CorrectorSolver::new(model, n, grid)?;
    let x = &grid.nodes;
    let mut u: Vec<Vec<C64>> = vec![solver.kernel().to_vec()];
    let mut lambdas = vec![solver.lambda0];
    let mut defects = vec![0.0];
    for k in 1..=order {
        let mut f = vec![ZERO; x.len()];
        for j in 1..=k {
            let bj = betas[j];
            if bj != 0.0 {
                for (i, xi) in x.iter().enumerate() {
                    f[i] -= I * bj * xi.powi(j as i32 + 1) * u[k - j][i];
                }
            }
        }
        for j in 1..k {
            for i in 0..x.len() {
                f[i] += lambdas[j] * u[k - j][i];
            }
        }
        let lk = -solver.pairing(&f) / solver.pairing(solver.kernel());
        for i in 0..x.len() {
            f[i] += lk * u[0][i];
        }
        defects.push(solver.defect(&f));
        let uk = solver.solve(&f, k).map_err(|e| match e {
            Error::InconsistentRecursion { .. } => e,
            other => other.at_stage(&format!("corrector of order {k}")),
        })?;
        lambdas.push(lk);
        u.push(uk);
    }
    if flip {
        lambdas.iter_mut().for_each(|l| *l = l.conj());
        u.iter_mut().for_each(|p| p.iter_mut().for_each(|v| *v = v.conj()));
    }
    let series = ExpansionSeries {
        mode: n,
        order,
        lambdas,
        scaling: Scaling {
            eps_exponent: 2.0 / 3.0,
            offset: pt.offset(),
            endpoint: pt.endpoint,
            nominal_offset: match pt.endpoint {
                Endpoint::Left => None,
                Endpoint::Right => Some(I * (pt.v_end - pt.v0 - pt.a)),
            },
        },
        solvability_defects: defects,
        taylor: pt.clone(),
    };
    Ok((series, Correctors { grid: grid.clone(), profiles: u }))
}

/// Smooth cutoff χ_ε(y) = χ(ε^{1−ρ} y), χ = 1 on [0, c₀/2] and 0 beyond c₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub c0: f64,
    pub rho: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec { c0: 1.0, rho: 2.0 / 3.0 }
    }
}

impl CutoffSpec {
    /// Support radius `c₀ ε^{ρ−1}` in the scaled variable.
    pub fn radius(&self, eps: f64) -> f64 {
        self.c0 * eps.powf(self.rho - 1.0)
    }

    /// χ_ε and its first two derivatives at y ≥ 0 (quintic C² transition).
    pub fn eval(&self, eps: f64, y: f64) -> (f64, f64, f64) {
        let r = self.radius(eps);
        let half = 0.5 * r;
        let y = y.abs();
        if y <= half {
            return (1.0, 0.0, 0.0);
        }
        if y >= r {
            return (0.0, 0.0, 0.0);
        }
        let t = (y - half) / half;
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (1.0 - s, -ds / half, -dds / (half * half))
    }
}

/// The cutoff quasimode `ψ_ε = χ_ε Σ ε^j u_j` on the corrector grid (scaled variable).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasimodeProfile {
    pub correctors: Correctors,
    pub cutoff: CutoffSpec,
    pub eps: f64,
    /// Σ ε^j u_j before the cutoff.
    pub series_profile: Vec<C64>,
    pub values: Vec<C64>,
    pub lambda: C64,
}

pub fn assemble_quasimode(series: &ExpansionSeries, correctors: &Correctors, eps: f64, cutoff: CutoffSpec) -> Result<QuasimodeProfile> {
    if !(eps > 0.0) {
        return Err(Error::Configuration("ε must be positive".into()));
    }
    if 0.5 * cutoff.radius(eps) < 10.0 {
        return Err(Error::Configuration(format!(
            "cutoff plateau c₀ε^(ρ−1)/2 = {:.3} lies inside the quasimode core (needs ≥ 10)",
            0.5 * cutoff.radius(eps)
        )));
    }
    let nodes = &correctors.grid.nodes;
    let mut sum = vec![ZERO; nodes.len()];
    for (j, u) in correctors.profiles.iter().enumerate().take(series.order + 1) {
        let e = eps.powi(j as i32);
        for (s, v) in sum.iter_mut().zip(u) {
            *s += e * v;
        }
    }
    let values = nodes.iter().zip(&sum).map(|(&y, s)| cutoff.eval(eps, y).0 * s).collect();
    Ok(QuasimodeProfile { correctors: correctors.clone(), cutoff, eps, series_profile: sum, values, lambda: series.truncated(eps) })
}

fn residual_on(psi: &QuasimodeProfile, vfull: &dyn Fn(f64) -> f64) -> f64 {
    let g = &psi.correctors.grid;
    let cheb = ChebGrid::new(g.nodes.len() - 1, g.a, g.b);
    let d1 = cheb.d1();
    let d2 = cheb.d2();
    let u = &psi.series_profile;
    let n = u.len();
    let eps = psi.eps;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let y = g.nodes[i];
        let (c, c1, c2) = psi.cutoff.eval(eps, y);
        let mut du = ZERO;
        let mut ddu = ZERO;
        for j in 0..n {
            du += d1[(i, j)] * u[j];
            ddu += d2[(i, j)] * u[j];
        }
        let veps = vfull(y);
        let r = c * (-ddu + (I * veps - psi.lambda) * u[i]) - 2.0 * c1 * du - c2 * u[i];
        num += r.norm_sqr() * g.weights[i];
        den += psi.values[i].norm_sqr() * g.weights[i];
    }
    (num / den).sqrt()
}

/// `‖(A_ε − λ^N(ε))ψ_ε‖ / ‖ψ_ε‖` with the full scaled potential `(Ṽ(εy) − Ṽ(0))/ε`,
/// checked against a recomputation on a doubled grid.
pub fn residual_norm(psi: &QuasimodeProfile, series: &ExpansionSeries, v: &dyn Fn(f64) -> f64, eps: f64) -> Result<f64> {
    if (eps - psi.eps).abs() > 1e-15 * eps {
        return Err(Error::Configuration("ε differs from the quasimode's ε".into()));
    }
    let pt = &series.taylor;
    let a = pt.a;
    let endpoint = pt.endpoint;
    let vt = move |y: f64| match endpoint {
        Endpoint::Left => v(y),
        Endpoint::Right => v(a - y),
    };
    let base = vt(0.0);
    let vscaled = |y: f64| (vt(eps * y) - base) / eps;
    let r1 = residual_on(psi, &vscaled);
    let g = &psi.correctors.grid;
    let fine = Grid1D::cheb(2 * (g.nodes.len() - 1), g.a, g.b);
    let (_, corr) = expand(pt, series.mode, series.order, &fine)?;
    let psi2 = assemble_quasimode(series, &corr, eps, psi.cutoff)?;
    let r2 = residual_on(&psi2, &vscaled);
    let hi = r1.max(r2);
    if hi > 1e-10 && (r1 - r2).abs() > 0.1 * hi {
        return Err(Error::Accuracy { what: format!("quasimode residual under grid refinement ({r1:.3e} vs {r2:.3e})"), achieved: (r1 - r2).abs() / hi });
    }
    Ok(r1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airy;
    use std::f64::consts::PI;

    #[test]
    fn taylor_of_simple_potentials() {
        let pt = taylor_from_callable(&|x| x, Endpoint::Left, 1.0, 6).unwrap();
        assert!((pt.betas[0] - 1.0).abs() < 1e-12);
        assert!(pt.betas[1..].iter().all(|b| b.abs() < 1e-9));
        let pt = taylor_from_callable(&|x| x + 0.5 * x * x, Endpoint::Left, 1.0, 6).unwrap();
        assert!((pt.betas[1] - 0.5).abs() < 1e-9);
        assert!(pt.betas[2..].iter().all(|b| b.abs() < 1e-9));
        let pt = taylor_from_callable(&|x: f64| x.sin(), Endpoint::Left, 1.0, 6).unwrap();
        let exact = [1.0, 0.0, -1.0 / 6.0, 0.0, 1.0 / 120.0, 0.0, -1.0 / 5040.0];
        for (j, e) in exact.iter().enumerate() {
            assert!((pt.betas[j] - e).abs() <= 1e-7 * e.abs().max(1.0), "β{j} = {}", pt.betas[j]);
            assert!(pt.errors[j] <= 1e-7 * e.abs().max(1.0));
        }
        assert!(matches!(taylor_from_callable(&|x| x * x, Endpoint::Left, 1.0, 3), Err(Error::HypothesisViolation(_))));
    }

    #[test]
    fn linear_potential_series_terminates() {
        let pt = PotentialTaylor::left(vec![1.0, 0.0, 0.0, 0.0], 1.0, 0.0).unwrap();
        let s = lambda_series(&pt, 1, 4).unwrap();
        let mu1 = airy::ai_zero(1).unwrap().abs();
        assert!((s.lambdas[0] - C64::from_polar(mu1, PI / 3.0)).norm() < 1e-13);
        assert!(s.lambdas[1..].iter().all(|l| l.norm() < 1e-12));
        let h: f64 = 0.01;
        assert!((s.physical(h) - h.powf(2.0 / 3.0) * C64::from_polar(mu1, PI / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn first_correction_matches_moment_formula() {
        let pt = PotentialTaylor::left(vec![1.0, 0.5], 1.0, 0.0).unwrap();
        let s = lambda_series(&pt, 1, 1).unwrap();
        let m0 = airy::airy_moment(0, 1).unwrap();
        let m2 = airy::airy_moment(2, 1).unwrap();
        let expect = I * 0.5 * C64::from_polar(1.0, -PI / 3.0) * m2 / m0;
        assert!((s.lambdas[1] - expect).norm() < 1e-9 * expect.norm(), "{} vs {expect}", s.lambdas[1]);
    }

    #[test]
    fn negative_slope_conjugates_and_scaling() {
        let p = PotentialTaylor::left(vec![1.0, 0.3, -0.2], 1.0, 0.0).unwrap();
        let q = PotentialTaylor::left(vec![-1.0, -0.3, 0.2], 1.0, 0.0).unwrap();
        let a = lambda_series(&p, 1, 2).unwrap();
        let b = lambda_series(&q, 1, 2).unwrap();
        for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
            assert!((x.conj() - y).norm() < 1e-12);
        }
        let k = 3.0f64;
        let s1 = lambda_series(&PotentialTaylor::left(vec![1.0], 1.0, 0.0).unwrap(), 1, 0).unwrap();
        let sk = lambda_series(&PotentialTaylor::left(vec![k], 1.0, 0.0).unwrap(), 1, 0).unwrap();
        assert!((sk.lambdas[0] - k.powf(2.0 / 3.0) * s1.lambdas[0]).norm() < 1e-12);
    }

    #[test]
    fn solvability_certificates_and_grid_convergence() {
        let pt = PotentialTaylor::left(vec![1.0, 0.5, 0.25, -0.1], 1.0, 0.0).unwrap();
        let (s, c) = expand(&pt, 1, 4, &default_grid(1.0)).unwrap();
        assert!(s.solvability_defects.iter().all(|&d| d <= 1e-9), "{:?}", s.solvability_defects);
        for p in &c.profiles {
            assert!(p[0].norm() == 0.0 && p.last().unwrap().norm() < 1e-10);
        }
        let (s2, _) = expand(&pt, 1, 4, &Grid1D::cheb(512, 0.0, 80.0)).unwrap();
        for (a, b) in s.lambdas.iter().zip(&s2.lambdas) {
            assert!((a - b).norm() <= 1e-7 * a.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn corrector_solver_contract() {
        let model = HalfLineAiryModel::new(1.0).unwrap();
        let grid = default_grid(1.0);
        let solver = CorrectorSolver::new(model, 1, &grid).unwrap();
        let zero = vec![ZERO; grid.nodes.len()];
        assert!(solver.solve(&zero, 1).unwrap().iter().all(|v| v.norm() == 0.0));
        let kernel = solver.kernel().to_vec();
        assert!(matches!(solver.solve(&kernel, 3), Err(Error::InconsistentRecursion { order: 3, .. })));
        // manufactured solution g ⊥ u0
        let mut g: Vec<C64> = grid.nodes.iter().map(|&x| C64::new(x * x * (-x).exp(), x * (-0.5 * x * x).exp())).collect();
        let c = solver.pairing(&g) / solver.pairing(&kernel);
        for (gi, k) in g.iter_mut().zip(&kernel) {
            *gi -= c * k;
        }
        let cheb = ChebGrid::new(grid.nodes.len() - 1, 0.0, grid.b);
        let d2 = cheb.d2();
        let n = g.len();
        let rhs: Vec<C64> = (0..n)
            .map(|i| {
                let lap: C64 = (0..n).map(|j| d2[(i, j)] * g[j]).sum();
                -lap + (I * grid.nodes[i] - solver.lambda0) * g[i]
            })
            .collect();
        let u = solver.solve(&rhs, 1).unwrap();
        let err = u.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let gmax = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-7 * gmax, "{err}");
    }

    #[test]
    fn right_endpoint_is_the_reflected_left_endpoint() {
        let v = |x: f64| x + 0.5 * x * x;
        let a = 1.0;
        let right = taylor_from_callable(&v, Endpoint::Right, a, 3).unwrap();
        let refl = taylor_from_callable(&|y| v(a - y), Endpoint::Left, a, 3).unwrap();
        assert_eq!(right.betas, refl.betas);
        let sr = lambda_series(&right, 1, 3).unwrap();
        let sl = lambda_series(&refl, 1, 3).unwrap();
        assert_eq!(sr.lambdas, sl.lambdas);
        assert!((sr.scaling.offset - I * (v(a) - v(0.0))).norm() < 1e-15);
        assert!(sl.scaling.offset.norm() < 1e-15 + (I * (refl.v_end - refl.v0)).norm());
        assert!(sr.scaling.nominal_offset.is_some());
    }

    #[test]
    fn quasimode_contract() {
        let pt = PotentialTaylor::left(vec![1.0], 1.0, 0.0).unwrap();
        let (s, c) = expand(&pt, 1, 0, &default_grid(1.0)).unwrap();
        let cut = CutoffSpec { c0: 8.0, rho: 2.0 / 3.0 };
        assert!(matches!(assemble_quasimode(&s, &c, 0.01, CutoffSpec::default()), Err(Error::Configuration(_))));
        let q = assemble_quasimode(&s, &c, 0.01, cut).unwrap();
        assert_eq!(q.values[0], ZERO);
        let r = cut.radius(0.01);
        for (y, v) in c.grid.nodes.iter().zip(&q.values) {
            if *y >= r {
                assert_eq!(*v, ZERO);
            }
        }
        let res = residual_norm(&q, &s, &|x| x, 0.01).unwrap();
        assert!(res <= 1e-8, "{res}");
        let norms: Vec<f64> = [1e-4, 1e-3, 1e-2]
            .iter()
            .map(|&e| {
                let q = assemble_quasimode(&s, &c, e, cut).unwrap();
                q.values.iter().zip(&c.grid.weights).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt()
            })
            .collect();
        assert!(norms.iter().all(|&n| n > 0.5 && (n - norms[0]).abs() < 1e-8));
    }

    #[test]
    fn quasimode_residual_orders() {
        let v = |x: f64| x + 0.5 * x * x;
        let pt = taylor_from_callable(&v, Endpoint::Left, 1.0, 4).unwrap();
        let cut = CutoffSpec { c0: 10.0, rho: 2.0 / 3.0 };
        let eps = [0.1, 0.05, 0.025];
        let mut at = Vec::new();
        for n in 1..=3 {
            let (s, c) = expand(&pt, 1, n, &default_grid(1.0)).unwrap();
            let r: Vec<f64> = eps.iter().map(|&e| residual_norm(&assemble_quasimode(&s, &c, e, cut).unwrap(), &s, &v, e).unwrap()).collect();
            let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
            let ly: Vec<f64> = r.iter().map(|e| e.ln()).collect();
            let mx = lx.iter().sum::<f64>() / 3.0;
            let my = ly.iter().sum::<f64>() / 3.0;
            let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
            assert!(slope >= n as f64 + 0.8, "N = {n}: slope {slope}, {r:?}");
            at.push(r[1]);
        }
        assert!(at[2] < at[0]);
    }
}
