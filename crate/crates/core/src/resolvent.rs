//! Resolvent norms, pseudospectrum maps and semigroup norm curves.

use crate::airy;
use crate::discretization::{build_halfline_model, build_tensor_model, dense_eigenvalues, kron_sum, DiscreteOperator, Grid1D, OperatorMatrix, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::linalg::{self, expm, schur, spectral_norm, CMat, KronSchur, ShiftedFactor};
use crate::C64;
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

/// Largest number of map cells evaluated by [`pseudospectrum_map`].
pub const MAP_BUDGET: usize = 20_000;
/// Largest dense dimension accepted by the matrix exponential.
pub const EXPM_LIMIT: usize = 3000;
const LANCZOS_TOL: f64 = 1e-10;

/// `‖(A − λ)^{-1}‖` in the discrete L² norm, or a near-singularity flag.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResolventValue {
    pub norm: f64,
    pub sigma_min: f64,
    pub near_singular: bool,
}

enum Prepared {
    Triangular(Arc<CMat>),
    Kron(Arc<KronSchur>),
    Factor(DiscreteOperator),
}

/// Operator prepared once for repeated resolvent evaluations.
pub struct ResolventProbe {
    prepared: Prepared,
    dim: usize,
    scale: f64,
}

impl ResolventProbe {
    pub fn new(op: &DiscreteOperator) -> Result<Self> {
        let sim = op.l2_similar();
        let dim = sim.dim();
        let (prepared, scale) = match &sim.matrix {
            OperatorMatrix::Kron(..) => {
                let k = sim.kron_schur().expect("kron")?;
                let s = k.diagonal_scale();
                (Prepared::Kron(k), s)
            }
            OperatorMatrix::Dense(m) if dim <= DENSE_LIMIT => {
                let t = schur(m)?.t;
                let s = diag_scale(&t);
                (Prepared::Triangular(Arc::new(t)), s)
            }
            _ => (Prepared::Factor(sim.clone()), 1.0),
        };
        Ok(ResolventProbe { prepared, dim, scale })
    }

    pub fn eval(&self, lambda: C64) -> Result<ResolventValue> {
        let smin = match &self.prepared {
            Prepared::Triangular(t) => {
                let t = t.clone();
                let inv = linalg::lanczos_max(
                    self.dim,
                    |x| {
                        let mut y = x.to_vec();
                        linalg::upper_shift_solve_adjoint(&t, lambda, &mut y);
                        linalg::upper_shift_solve(&t, lambda, &mut y);
                        y
                    },
                    120,
                    LANCZOS_TOL,
                );
                if inv.is_finite() {
                    1.0 / inv.max(1e-300).sqrt()
                } else {
                    0.0
                }
            }
            Prepared::Kron(k) => linalg::sigma_min(&ShiftedFactor::Kron(k.clone(), lambda), self.dim, LANCZOS_TOL),
            Prepared::Factor(op) => {
                let (f, _) = op.shifted_factor(lambda)?;
                linalg::sigma_min(&f, self.dim, LANCZOS_TOL)
            }
        };
        let near = !(smin > 1e-13 * self.scale.max(lambda.norm()).max(1.0));
        Ok(ResolventValue { norm: if near { f64::INFINITY } else { 1.0 / smin }, sigma_min: smin, near_singular: near })
    }
}

fn diag_scale(t: &CMat) -> f64 {
    (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0, f64::max)
}

/// `‖(A − λ)^{-1}‖` in the discrete L² norm.
pub fn resolvent_norm(op: &DiscreteOperator, lambda: C64) -> Result<ResolventValue> {
    ResolventProbe::new(op)?.eval(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl SpectralWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.re.1 > self.re.0 && self.im.1 > self.im.0) || self.nx < 2 || self.ny < 2 {
            return Err(Error::Configuration("spectral window needs positive extents and at least 2×2 cells".into()));
        }
        Ok(())
    }

    pub fn point(&self, ix: usize, iy: usize) -> C64 {
        C64::new(
            self.re.0 + (self.re.1 - self.re.0) * ix as f64 / (self.nx - 1) as f64,
            self.im.0 + (self.im.1 - self.im.0) * iy as f64 / (self.ny - 1) as f64,
        )
    }

    pub fn cell_diagonal(&self) -> f64 {
        let dx = (self.re.1 - self.re.0) / (self.nx - 1) as f64;
        let dy = (self.im.1 - self.im.0) / (self.ny - 1) as f64;
        dx.hypot(dy)
    }

    /// Index of the node closest to `z`.
    pub fn nearest_cell(&self, z: C64) -> (usize, usize) {
        let fx = (z.re - self.re.0) / (self.re.1 - self.re.0) * (self.nx - 1) as f64;
        let fy = (z.im - self.im.0) / (self.im.1 - self.im.0) * (self.ny - 1) as f64;
        (fx.round().clamp(0.0, (self.nx - 1) as f64) as usize, fy.round().clamp(0.0, (self.ny - 1) as f64) as usize)
    }
}

/// Resolvent norms on a window; `values[iy * nx + ix]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PseudospectrumMap {
    pub window: SpectralWindow,
    pub values: Vec<f64>,
    /// Numerically singular cells, and local maxima of the norm whose `σ_min` is
    /// below half the cell diagonal (an eigenvalue may lie in the cell).
    pub flagged: Vec<bool>,
    pub operator: String,
}

impl PseudospectrumMap {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.window.nx + ix]
    }

    pub fn is_flagged(&self, ix: usize, iy: usize) -> bool {
        self.flagged[iy * self.window.nx + ix]
    }

    /// `re im log10(norm)` per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "re,im,log10_norm").map_err(io)?;
        for iy in 0..self.window.ny {
            for ix in 0..self.window.nx {
                let z = self.window.point(ix, iy);
                writeln!(out, "{:.12e},{:.12e},{:.9e}", z.re, z.im, self.value(ix, iy).log10()).map_err(io)?;
            }
        }
        Ok(())
    }

    /// Contour segments of `log10 ‖R‖` at every integer level in range.
    pub fn contours(&self) -> Vec<(i32, Vec<[C64; 2]>)> {
        let logs: Vec<f64> = self.values.iter().map(|v| v.log10().min(300.0)).collect();
        let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min).ceil() as i32;
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).floor() as i32;
        let w = &self.window;
        let at = |ix: usize, iy: usize| logs[iy * w.nx + ix];
        let mut out = Vec::new();
        for level in lo..=hi {
            let lv = level as f64;
            let mut segs = Vec::new();
            for iy in 0..w.ny - 1 {
                for ix in 0..w.nx - 1 {
                    let corners = [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)];
                    let mut pts = Vec::new();
                    for e in 0..4 {
                        let (a, b) = (corners[e], corners[(e + 1) % 4]);
                        let (fa, fb) = (at(a.0, a.1) - lv, at(b.0, b.1) - lv);
                        if (fa < 0.0) != (fb < 0.0) {
                            let s = fa / (fa - fb);
                            let za = w.point(a.0, a.1);
                            pts.push(za + (w.point(b.0, b.1) - za) * s);
                        }
                    }
                    for pair in pts.chunks(2) {
                        if pair.len() == 2 {
                            segs.push([pair[0], pair[1]]);
                        }
                    }
                }
            }
            out.push((level, segs));
        }
        out
    }

    /// Contour polylines, one block per level separated by blank lines.
    pub fn write_contours<W: Write>(&self, mut out: W) -> Result<()> {
        for (level, segs) in self.contours() {
            writeln!(out, "# level 1e{level}").map_err(io)?;
            for [a, b] in segs {
                writeln!(out, "{:.9e} {:.9e}\n{:.9e} {:.9e}\n", a.re, a.im, b.re, b.im).map_err(io)?;
            }
        }
        Ok(())
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Numerical(format!("write failed: {e}"))
}

/// Resolvent norm on every window node, spread over `jobs` threads.
pub fn pseudospectrum_map(op: &DiscreteOperator, window: SpectralWindow, jobs: usize) -> Result<PseudospectrumMap> {
    window.validate()?;
    let cells = window.nx * window.ny;
    if cells > MAP_BUDGET {
        return Err(Error::Capability(format!("{cells} cells exceed the map budget {MAP_BUDGET}")));
    }
    let probe = ResolventProbe::new(op)?;
    let jobs = jobs.max(1).min(cells);
    let half = 0.5 * window.cell_diagonal();
    let chunk = cells.div_ceil(jobs);
    let mut results: Vec<Result<Vec<ResolventValue>>> = Vec::new();
    std::thread::scope(|sc| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let probe = &probe;
                sc.spawn(move || {
                    (j * chunk..((j + 1) * chunk).min(cells))
                        .map(|c| probe.eval(window.point(c % window.nx, c / window.nx)))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        results = handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::Numerical("map worker panicked".into())))).collect();
    });
    let mut all = Vec::with_capacity(cells);
    for r in results {
        all.extend(r?);
    }
    let values: Vec<f64> = all.iter().map(|v| v.norm).collect();
    let (nx, ny) = (window.nx as isize, window.ny as isize);
    let flagged = (0..cells)
        .map(|c| {
            let v = &all[c];
            if v.near_singular {
                return true;
            }
            let (ix, iy) = ((c % window.nx) as isize, (c / window.nx) as isize);
            let peak = (-1..=1).all(|dy| {
                (-1..=1).all(|dx| {
                    let (jx, jy) = (ix + dx, iy + dy);
                    (dx == 0 && dy == 0) || jx < 0 || jy < 0 || jx >= nx || jy >= ny || values[(jy * nx + jx) as usize] <= v.norm
                })
            });
            peak && v.sigma_min < half
        })
        .collect();
    Ok(PseudospectrumMap { window, values, flagged, operator: op.symbol.clone() })
}

/// One circle of the tensor-model resolvent sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleSample {
    pub eps: f64,
    pub r: f64,
    pub max_norm: f64,
    /// max over the circle of r ε^{1/2} ‖(B_ε − λ)^{-1}‖.
    pub constant: f64,
    /// Eigenvalues of the discrete model inside the circle.
    pub enclosed: Vec<C64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorResolventReport {
    pub samples: Vec<CircleSample>,
    pub centre_lambda0: C64,
    pub centre_lambda2: C64,
    pub spread: f64,
}

/// Grids used by the tensor sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorGrids {
    pub tau: Grid1D,
    pub xi: Grid1D,
    pub points: usize,
}

impl Default for TensorGrids {
    fn default() -> Self {
        TensorGrids { tau: Grid1D::cheb(90, 0.0, 24.0), xi: Grid1D::cheb(70, -12.0, 12.0), points: 24 }
    }
}

/// Sample λ on |λ − λ₀ − ε^{1/2}λ₂| = r ε^{1/2} for every (ε, r) and record the empirical constants.
pub fn tensor_resolvent_check(eps_list: &[f64], r_list: &[f64], grids: &TensorGrids, jobs: usize) -> Result<TensorResolventReport> {
    if r_list.iter().any(|&r| !(r > 0.0 && r < 0.3)) {
        return Err(Error::Configuration("circle radii must lie in (0, 0.3)".into()));
    }
    let a = build_halfline_model(1.0, &grids.tau)?;
    let b = crate::discretization::build_harmonic_model(C64::new(0.0, 0.5), &grids.xi)?;
    let ea = dense_eigenvalues(&a, a.dim(), None)?.eigenvalues;
    let eb = dense_eigenvalues(&b, b.dim(), None)?.eigenvalues;
    let (l0, l2) = (ea[0], eb[0]);
    let mu1 = airy::ai_zero(1)?.abs();
    if (l0 - C64::from_polar(mu1, PI / 3.0)).norm() > 1e-6 || (l2 - C64::from_polar(0.5f64.sqrt(), PI / 4.0)).norm() > 1e-6 {
        return Err(Error::Accuracy { what: "tensor component ground values".into(), achieved: (l0 - C64::from_polar(mu1, PI / 3.0)).norm() });
    }
    let mut samples = Vec::new();
    for &eps in eps_list {
        let op = build_tensor_model(eps, 1.0, &grids.tau, &grids.xi)?;
        let probe = ResolventProbe::new(&op)?;
        let se = eps.sqrt();
        let centre = l0 + se * l2;
        for &r in r_list {
            let rad = r * se;
            let pts: Vec<C64> = (0..grids.points).map(|k| centre + C64::from_polar(rad, 2.0 * PI * (k as f64 + 0.5) / grids.points as f64)).collect();
            let norms = parallel_eval(&probe, &pts, jobs)?;
            let max_norm = norms.iter().cloned().fold(0.0, f64::max);
            let mut enclosed = Vec::new();
            for x in &ea {
                if (x - l0).norm() > 2.0 * rad + 4.0 {
                    continue;
                }
                for y in &eb {
                    let z = x + se * y;
                    if (z - centre).norm() < rad {
                        enclosed.push(z);
                    }
                }
            }
            samples.push(CircleSample { eps, r, max_norm, constant: rad * max_norm, enclosed });
        }
    }
    let cs: Vec<f64> = samples.iter().map(|s| s.constant).collect();
    let spread = cs.iter().cloned().fold(0.0, f64::max) / cs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TensorResolventReport { samples, centre_lambda0: l0, centre_lambda2: l2, spread })
}

fn parallel_eval(probe: &ResolventProbe, pts: &[C64], jobs: usize) -> Result<Vec<f64>> {
    let jobs = jobs.max(1).min(pts.len().max(1));
    let chunk = pts.len().div_ceil(jobs);
    let mut out = Vec::new();
    std::thread::scope(|sc| -> Result<()> {
        let hs: Vec<_> = pts.chunks(chunk).map(|c| sc.spawn(move || c.iter().map(|&z| probe.eval(z).map(|v| v.norm)).collect::<Result<Vec<f64>>>())).collect();
        for h in hs {
            out.extend(h.join().map_err(|_| Error::Numerical("resolvent worker panicked".into()))??);
        }
        Ok(())
    })?;
    Ok(out)
}

/// max over a circle of radius `r` about `centre` of `r ‖(A − λ)^{-1}‖`.
pub fn circle_constant(op: &DiscreteOperator, centre: C64, r: f64, points: usize) -> Result<f64> {
    let probe = ResolventProbe::new(op)?;
    let mut m: f64 = 0.0;
    for k in 0..points {
        let z = centre + C64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / points as f64);
        m = m.max(probe.eval(z)?.norm);
    }
    Ok(r * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemigroupMethod {
    ScalingSquaring,
    EigenBound,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemigroupNormCurve {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub method: SemigroupMethod,
}

fn semigroup_factor(a: &CMat, t: f64) -> Result<f64> {
    if a.nrows() > EXPM_LIMIT {
        return Err(Error::Capability(format!("matrix exponential of dimension {} exceeds {EXPM_LIMIT}", a.nrows())));
    }
    let m = Mat::from_fn(a.nrows(), a.ncols(), |i, j| -a[(i, j)] * t);
    Ok(spectral_norm(&expm(&m)?))
}

/// `‖e^{−tA}‖` in the discrete L² norm; Kronecker sums use `‖e^{−tA}‖‖e^{−tB}‖`.
pub fn semigroup_norm(op: &DiscreteOperator, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Configuration("semigroup time must be nonnegative".into()));
    }
    let sim = op.l2_similar();
    match &sim.matrix {
        OperatorMatrix::Kron(k, _) => Ok(semigroup_factor(&k.a, t)? * semigroup_factor(&k.b, t)?),
        _ => {
            if sim.dim() > EXPM_LIMIT {
                return Err(Error::Capability(format!("matrix exponential of dimension {} exceeds {EXPM_LIMIT}", sim.dim())));
            }
            semigroup_factor(&sim.to_dense()?, t)
        }
    }
}

pub fn semigroup_curve(op: &DiscreteOperator, times: &[f64]) -> Result<SemigroupNormCurve> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Configuration("semigroup times must be increasing".into()));
    }
    let norms = times.iter().map(|&t| semigroup_norm(op, t)).collect::<Result<Vec<_>>>()?;
    Ok(SemigroupNormCurve { times: times.to_vec(), norms, method: SemigroupMethod::ScalingSquaring })
}

/// `−d²/ds² + is` on (−L, L), second-order differences with `n` interior nodes.
pub fn airy_line_operator(half_width: f64, n: usize) -> Result<DiscreteOperator> {
    build_halfline_model(1.0, &Grid1D::fd2(n, -half_width, half_width))
}

/// Truncation of the half-plane operator: the line operator on (−L, L) in s
/// plus the Dirichlet Airy operator on (0, depth) in t.
pub fn half_plane_operator(half_width: f64, n_line: usize, depth: f64, n_half: usize) -> Result<DiscreteOperator> {
    let line = airy_line_operator(half_width, n_line)?;
    let half = build_halfline_model(1.0, &Grid1D::cheb(n_half, 0.0, depth))?;
    kron_sum(&line, &half)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginReport {
    pub h: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    /// |μ₁|/2 c_m^{2/3} h^{2/3}.
    pub predicted: f64,
    pub ratio: f64,
    pub r_squared: f64,
    pub inconclusive: bool,
}

/// Fit −d/dt log‖e^{−tA}‖ over t ∈ [6/ρ, 20/ρ], ρ the predicted rate, and compare.
pub fn spectral_margin_bounds(op: &DiscreteOperator, h: f64, c_m: f64) -> Result<MarginReport> {
    let mu1 = airy::ai_zero(1)?.abs();
    let rho = 0.5 * mu1 * c_m.powf(2.0 / 3.0) * h.powf(2.0 / 3.0);
    let sim = op.l2_similar();
    let a = sim.to_dense()?;
    if a.nrows() > EXPM_LIMIT {
        return Err(Error::Capability(format!("matrix exponential of dimension {} exceeds {EXPM_LIMIT}", a.nrows())));
    }
    let samples = 15;
    let (t0, t1) = (6.0 / rho, 20.0 / rho);
    let dt = (t1 - t0) / (samples - 1) as f64;
    let step = expm(&Mat::from_fn(a.nrows(), a.ncols(), |i, j| -a[(i, j)] * dt))?;
    let mut e = expm(&Mat::from_fn(a.nrows(), a.ncols(), |i, j| -a[(i, j)] * t0))?;
    let mut times = Vec::with_capacity(samples);
    let mut norms = Vec::with_capacity(samples);
    for k in 0..samples {
        times.push(t0 + k as f64 * dt);
        norms.push(spectral_norm(&e));
        if k + 1 < samples {
            e = &step * &e;
        }
    }
    if norms.iter().any(|n| !(*n > 0.0)) {
        return Err(Error::Numerical("semigroup norm underflowed in the fit window".into()));
    }
    let ys: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let (slope, r2) = linear_fit(&times, &ys);
    let slope = -slope;
    Ok(MarginReport { h, times, norms, slope, predicted: rho, ratio: slope / rho, r_squared: r2, inconclusive: r2 < 0.99 })
}

/// Least-squares slope and coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_1d, leftmost_eigenvalues};

    fn diag_op(d: &[C64]) -> DiscreteOperator {
        let n = d.len();
        let grid = Grid1D::fd2(n, 0.0, (n + 1) as f64);
        let mut op = build_halfline_model(1.0, &grid).unwrap();
        op.matrix = OperatorMatrix::Dense(Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) }));
        op
    }

    fn linear(h: f64, n: usize) -> DiscreteOperator {
        build_1d(&|x| x, 1.0, h, &Grid1D::cheb(n, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn normal_matrix_distance() {
        let op = diag_op(&[C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let v = resolvent_norm(&op, C64::new(0.0, 0.0)).unwrap();
        assert!((v.norm - 1.0).abs() < 1e-10);
        let s = resolvent_norm(&op, C64::new(1.0, 0.0)).unwrap();
        assert!(s.near_singular && s.norm.is_infinite());
    }

    #[test]
    fn dense_and_factored_paths_agree() {
        let op = linear(0.05, 60);
        let z = C64::new(0.05, 0.3);
        let a = resolvent_norm(&op, z).unwrap().norm;
        let probe = ResolventProbe { prepared: Prepared::Factor(op.l2_similar()), dim: op.dim(), scale: 1.0 };
        let b = probe.eval(z).unwrap().norm;
        assert!((a - b).abs() < 1e-6 * a, "{a} {b}");
    }

    #[test]
    fn resolvent_grows_towards_eigenvalue_and_dominates_distance() {
        let op = linear(0.02, 100);
        let rep = leftmost_eigenvalues(&op, 6, None).unwrap();
        let l1 = rep.eigenvalues[0];
        let mut prev = 0.0;
        for k in 1..8 {
            let z = l1 - C64::new(0.02 / k as f64, 0.0);
            let v = resolvent_norm(&op, z).unwrap().norm;
            let dist = rep.eigenvalues.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(v >= 1.0 / dist * (1.0 - 1e-8));
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn circle_constant_for_linear_potential() {
        let h = 0.01;
        let op = linear(h, 140);
        let l1 = leftmost_eigenvalues(&op, 1, None).unwrap().eigenvalues[0];
        let e = h.powf(2.0 / 3.0);
        for rs in [e.powf(1.2), 0.05, 0.1] {
            let c = circle_constant(&op, l1, rs * e, 24).unwrap();
            assert!(c >= 0.99 && c <= 50.0, "{rs}: {c}");
        }
    }

    #[test]
    fn map_flags_eigenvalue_and_is_finite_on_the_left() {
        let h = 0.05;
        let op = linear(h, 60);
        let l1 = leftmost_eigenvalues(&op, 1, None).unwrap().eigenvalues[0];
        let win = SpectralWindow { re: (0.0, 0.4), im: (0.0, 0.5), nx: 21, ny: 21 };
        let map = pseudospectrum_map(&op, win, 3).unwrap();
        let (cx, cy) = win.nearest_cell(l1);
        let near = (cx.saturating_sub(1)..=(cx + 1).min(20)).any(|i| (cy.saturating_sub(1)..=(cy + 1).min(20)).any(|j| map.is_flagged(i, j)));
        assert!(near);
        let edge = 0.5 * airy::ai_zero(1).unwrap().abs() * h.powf(2.0 / 3.0) * 0.9;
        for iy in 0..21 {
            for ix in 0..21 {
                if win.point(ix, iy).re < edge {
                    assert!(map.value(ix, iy).is_finite() && !map.is_flagged(ix, iy));
                }
                let clear = (ix.saturating_sub(1)..=(ix + 2).min(20)).all(|i| (iy.saturating_sub(1)..=(iy + 1).min(20)).all(|j| !map.is_flagged(i, j)));
                if ix + 1 < 21 && clear {
                    let q = map.value(ix, iy) / map.value(ix + 1, iy);
                    assert!(q < 10.0 && q > 0.1);
                }
            }
        }
        let conj = pseudospectrum_map(&build_1d(&|x| -x, 1.0, h, &Grid1D::cheb(60, 0.0, 1.0)).unwrap(), SpectralWindow { re: (0.0, 0.4), im: (-0.5, 0.0), nx: 21, ny: 21 }, 2).unwrap();
        for iy in 0..21 {
            for ix in 0..21 {
                let (a, b) = (map.value(ix, iy), conj.value(ix, 20 - iy));
                assert!((a - b).abs() <= 1e-6 * a.max(b) || (a.is_infinite() && b.is_infinite()));
            }
        }
        let mut csv = Vec::new();
        map.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 442);
        assert!(!map.contours().is_empty());
        let big = SpectralWindow { re: (0.0, 1.0), im: (0.0, 1.0), nx: 200, ny: 101 };
        assert!(matches!(pseudospectrum_map(&op, big, 1), Err(Error::Capability(_))));
    }

    #[test]
    fn expm_matches_normal_eigendecomposition() {
        let d = [C64::new(0.5, 1.0), C64::new(2.0, -3.0), C64::new(0.1, 0.0)];
        let op = diag_op(&d);
        let t = 1.3;
        let want = d.iter().map(|z| (-t * z.re).exp()).fold(0.0, f64::max);
        assert!((semigroup_norm(&op, t).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn airy_line_semigroup_law() {
        let op = airy_line_operator(60.0, 800).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let n = semigroup_norm(&op, t).unwrap();
            let want = (-t * t * t / 12.0f64).exp();
            assert!((n / want - 1.0).abs() < 0.01, "t = {t}: {n} vs {want}");
        }
    }

    #[test]
    fn linear_potential_curve_is_a_contraction() {
        let op = linear(0.05, 60);
        let c = semigroup_curve(&op, &[0.0, 1.0, 5.0, 20.0, 60.0]).unwrap();
        assert!((c.norms[0] - 1.0).abs() < 1e-12);
        assert!(c.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)));
        assert!(c.norms.iter().all(|&n| n > 0.0 && n <= 1.0 + 1e-10));
    }

    #[test]
    fn margin_rate_for_linear_potential() {
        let rep = spectral_margin_bounds(&linear(0.05, 60), 0.05, 1.0).unwrap();
        assert!(!rep.inconclusive, "{rep:?}");
        assert!((rep.ratio - 1.0).abs() < 0.1, "{}", rep.ratio);
        assert!(rep.norms.windows(2).all(|w| w[1] <= w[0]));
    }
}
