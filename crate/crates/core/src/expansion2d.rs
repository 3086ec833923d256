//! Two-term boundary eigenvalue asymptotics in two dimensions and the
//! associated quasimode on a boundary strip.

use crate::airy;
use crate::cheb::ChebGrid;
use crate::discretization::Grid1D;
use crate::error::{Error, Result};
use crate::expansion1d::CorrectorSolver;
use crate::geometry::{curvilinear_point, BoundaryCurve, CandidateSet, PotentialField, Vec2};
use crate::linalg::col_vec;
use crate::model::{harmonic_ground, HalfLineAiryModel, HarmonicGround, HarmonicModel};
use crate::C64;
use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Local jet of V at x₀ in (s, t) coordinates (t the inward distance) with the semiclassical scalings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaledFrame {
    pub h: f64,
    /// |V_t(x₀)|.
    pub c: f64,
    /// |V_ss(x₀)|, the curvature-corrected tangential second derivative.
    pub alpha: f64,
    /// V_tt(x₀).
    pub beta: f64,
    /// V_st(x₀).
    pub sigma_mixed: f64,
    /// α (h²/c⁴)^{1/3}.
    pub eps: f64,
    /// sign of V_t: phase e^{σ_n iπ/3} of the normal Airy layer.
    pub sigma_n: f64,
    /// sign of α: phase e^{σ_t iπ/4} of the tangential oscillator.
    pub sigma_t: f64,
    pub v0: f64,
    pub s0: f64,
    pub x0: Vec2,
    pub kappa: f64,
    /// ∇V·ν with ν outward.
    pub c_outward: f64,
    pub conjugated: bool,
}

impl RescaledFrame {
    /// τ = (c/h²)^{1/3} t.
    pub fn tau_scale(&self) -> f64 {
        (self.c / (self.h * self.h)).cbrt()
    }

    /// ξ = (α/h²)^{1/4} s.
    pub fn xi_scale(&self) -> f64 {
        (self.alpha / (self.h * self.h)).powf(0.25)
    }

    /// α/(εc²), which equals (c h)^{−2/3}.
    pub fn prefactor(&self) -> f64 {
        self.alpha / (self.eps * self.c * self.c)
    }

    /// Coefficient of iτξ at order ε^{3/4}: V_st / α.
    pub fn sigma_tilde(&self) -> f64 {
        self.sigma_mixed / self.alpha
    }

    /// Physical cutoff radius corresponding to ξ = ε^{−1/2}.
    pub fn cutoff_radius(&self) -> f64 {
        self.eps.powf(-0.5) / self.xi_scale()
    }
}

pub fn build_frame(cand: &CandidateSet, h: f64) -> Result<RescaledFrame> {
    if !cand.assumption_ok {
        return Err(Error::AssumptionViolation("αc > 0 fails on the candidate set".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Configuration("h must be positive".into()));
    }
    let p = &cand.x0;
    let vt = -p.c;
    let c = vt.abs();
    let alpha = p.alpha.abs();
    if c == 0.0 || alpha == 0.0 {
        return Err(Error::Degeneracy("vanishing normal derivative or tangential curvature at x₀".into()));
    }
    Ok(RescaledFrame {
        h,
        c,
        alpha,
        beta: p.beta,
        sigma_mixed: p.sigma_mixed,
        eps: alpha * (h * h / c.powi(4)).cbrt(),
        sigma_n: vt.signum(),
        sigma_t: p.alpha.signum(),
        v0: p.v_value,
        s0: p.s,
        x0: p.position,
        kappa: p.kappa,
        c_outward: p.c,
        conjugated: cand.conjugated,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeadingEigenvalue {
    pub lambda0: C64,
    /// Certified ground value of the tangential oscillator in this frame.
    pub lambda2: C64,
    /// √2 e^{iπ/4}, the nominal ground value.
    pub lambda2_nominal: C64,
    #[serde(rename = "Lambda")]
    pub big_lambda: C64,
    /// iV(x₀) + (ch)^{2/3} Λ.
    pub physical: C64,
    /// iV(x₀) + e^{iπ/3}|μ₁|(ch)^{2/3} + √(2α)e^{iπ/4}h.
    pub nominal_physical: C64,
    /// Coefficient s₂ of h in `physical`: √α λ₂.
    pub s2: C64,
    pub s2_nominal: C64,
}

/// Λ = λ₀ + ε^{1/2}λ₂ and its physical reconstruction; `ground` is the certified
/// ground value of −∂² + (i/2)ξ² (conjugated here when α < 0).
pub fn leading_eigenvalue(frame: &RescaledFrame, ground: C64) -> Result<LeadingEigenvalue> {
    let mu1 = airy::ai_zero(1)?.abs();
    let lambda0 = C64::from_polar(mu1, frame.sigma_n * PI / 3.0);
    let lambda2 = if frame.sigma_t > 0.0 { ground } else { ground.conj() };
    let big = lambda0 + frame.eps.sqrt() * lambda2;
    let scale = (frame.c * frame.h).powf(2.0 / 3.0);
    let nominal = HarmonicModel::nominal_ground();
    Ok(LeadingEigenvalue {
        lambda0,
        lambda2,
        lambda2_nominal: nominal,
        big_lambda: big,
        physical: I * frame.v0 + scale * big,
        nominal_physical: I * frame.v0 + C64::from_polar(mu1 * scale, PI / 3.0) + (2.0 * frame.alpha).sqrt() * C64::from_polar(1.0, PI / 4.0) * frame.h,
        s2: frame.alpha.sqrt() * lambda2,
        s2_nominal: (2.0 * frame.alpha).sqrt() * C64::from_polar(1.0, PI / 4.0),
    })
}

/// γ = σ ∫τ v₀² / ∫v₀² (bilinear) by quadrature on `grid`.
pub fn gamma_moment(model: &HalfLineAiryModel, grid: &Grid1D, sigma: f64) -> Result<C64> {
    let v: Vec<C64> = grid.nodes.iter().map(|&x| model.eigenfunction(1, x)).collect::<Result<_>>()?;
    Ok(gamma_from_profile(&v, grid, sigma))
}

fn gamma_from_profile(v: &[C64], grid: &Grid1D, sigma: f64) -> C64 {
    let mut num = ZERO;
    let mut den = ZERO;
    for ((x, v), w) in grid.nodes.iter().zip(v).zip(&grid.weights) {
        num += *x * v * v * *w;
        den += v * v * *w;
    }
    sigma * num / den
}

/// Solve `(𝓛_ξ − λ₂)w₁ = −iγξw₀` with `∫w₁w₀ = 0` by bordered collocation.
pub fn solve_w1(gamma: C64, ground: &HarmonicGround, coefficient: C64, grid: &Grid1D) -> Result<Vec<C64>> {
    let w0 = &ground.pair.values;
    let lambda2 = ground.pair.eigenvalue;
    let n = grid.nodes.len();
    let rhs: Vec<C64> = grid.nodes.iter().zip(w0).map(|(&x, w)| -I * gamma * x * w).collect();
    let w = &grid.weights;
    let pair = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).zip(w).map(|((x, y), q)| x * y * *q).sum() };
    let nrm = |a: &[C64]| a.iter().zip(w).map(|(x, q)| x.norm_sqr() * q).sum::<f64>().sqrt();
    let rn = nrm(&rhs);
    if rn > 0.0 {
        let defect = pair(w0, &rhs).norm() / (nrm(w0) * rn);
        if defect > 1e-8 {
            return Err(Error::InternalConsistency(format!("odd right-hand side has kernel component {defect:.3e}")));
        }
    } else {
        return Ok(vec![ZERO; n]);
    }
    let cheb = ChebGrid::new(n - 1, grid.a, grid.b);
    let d2 = cheb.d2();
    let m = n - 2;
    let op = |i: usize, j: usize| {
        let mut v = C64::new(-d2[(i + 1, j + 1)], 0.0);
        if i == j {
            let x = grid.nodes[i + 1];
            v += coefficient * x * x - lambda2;
        }
        v
    };
    let bordered = Mat::from_fn(m + 1, m + 1, |i, j| match (i < m, j < m) {
        (true, true) => op(i, j),
        (true, false) => w0[i + 1],
        (false, true) => w[j + 1] * w0[j + 1],
        (false, false) => ZERO,
    });
    let mut b: Vec<C64> = rhs[1..n - 1].to_vec();
    b.push(ZERO);
    let mut x = col_vec(&b);
    bordered.partial_piv_lu().solve_in_place(&mut x);
    let mut out = vec![ZERO];
    out.extend((0..m).map(|i| x[(i, 0)]));
    out.push(ZERO);
    let mut num = 0.0;
    for i in 0..m {
        let mut r = -rhs[i + 1];
        for j in 0..m {
            r += op(i, j) * out[j + 1];
        }
        num += r.norm_sqr() * w[i + 1];
    }
    let res = num.sqrt() / rn;
    if res > 1e-8 {
        return Err(Error::Numerical(format!("w₁ collocation residual {res:.3e}")));
    }
    Ok(out)
}

/// Solve `(𝓛_τ − λ₀)φ = (σ̃τ − γ)v₀`, `φ(0) = 0`, `⟨v̄₀, φ⟩ = 0`.
pub fn solve_v3(gamma: C64, sigma_tilde: f64, model: &HalfLineAiryModel, grid: &Grid1D) -> Result<Vec<C64>> {
    let solver = CorrectorSolver::new(*model, 1, grid)?;
    let v0 = solver.kernel();
    let rhs: Vec<C64> = grid.nodes.iter().zip(v0).map(|(&t, v)| (sigma_tilde * t - gamma) * v).collect();
    let defect = solver.defect(&rhs);
    if defect > 1e-8 {
        return Err(Error::InconsistentRecursion { order: 3, defect });
    }
    solver.solve(&rhs, 3)
}

/// Profiles of the two-dimensional quasimode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasimodeU {
    pub tau_grid: Grid1D,
    pub xi_grid: Grid1D,
    pub v0: Vec<C64>,
    pub w0: Vec<C64>,
    pub w1: Vec<C64>,
    /// w₃ is taken to be zero.
    pub w3: Vec<C64>,
    /// φ with v₃(τ, ξ) = −iξ w₀(ξ) φ(τ).
    pub v3_tau: Vec<C64>,
    pub gamma: C64,
    pub sigma_tilde: f64,
    pub lambda0: C64,
    pub lambda2: C64,
    pub ground: HarmonicGround,
    pub with_corrections: bool,
}

/// Default profile grids: τ ∈ [0, 40] and ξ ∈ [−14, 14].
pub fn build_quasimode(frame: &RescaledFrame, with_corrections: bool) -> Result<QuasimodeU> {
    let tau_grid = Grid1D::cheb(320, 0.0, 40.0);
    let xi_grid = Grid1D::cheb(200, -14.0, 14.0);
    build_quasimode_on(frame, with_corrections, &tau_grid, &xi_grid)
}

pub fn build_quasimode_on(frame: &RescaledFrame, with_corrections: bool, tau_grid: &Grid1D, xi_grid: &Grid1D) -> Result<QuasimodeU> {
    let model = HalfLineAiryModel::new(frame.sigma_n)?;
    let coefficient = C64::new(0.0, 0.5 * frame.sigma_t);
    let ground = harmonic_ground(&HarmonicModel { coefficient }, xi_grid)?;
    let solver = CorrectorSolver::new(model, 1, tau_grid)?;
    let v0 = solver.kernel().to_vec();
    let st = frame.sigma_tilde();
    let gamma = gamma_from_profile(&v0, tau_grid, st);
    let (w1, phi) = if with_corrections {
        (solve_w1(gamma, &ground, coefficient, xi_grid)?, solve_v3(gamma, st, &model, tau_grid)?)
    } else {
        (vec![ZERO; xi_grid.nodes.len()], vec![ZERO; tau_grid.nodes.len()])
    };
    Ok(QuasimodeU {
        tau_grid: tau_grid.clone(),
        xi_grid: xi_grid.clone(),
        w0: ground.pair.values.clone(),
        w3: vec![ZERO; xi_grid.nodes.len()],
        v0,
        w1,
        v3_tau: phi,
        gamma,
        sigma_tilde: st,
        lambda0: solver.lambda0,
        lambda2: ground.pair.eigenvalue,
        ground,
        with_corrections,
    })
}

/// A sampled profile with first and second derivatives, zero outside its grid.
struct Profile {
    cheb: ChebGrid,
    f: Vec<C64>,
    df: Vec<C64>,
    ddf: Vec<C64>,
}

impl Profile {
    fn new(grid: &Grid1D, f: &[C64]) -> Self {
        let cheb = ChebGrid::new(grid.nodes.len() - 1, grid.a, grid.b);
        let d1 = cheb.d1();
        let n = f.len();
        let df: Vec<C64> = (0..n).map(|i| (0..n).map(|j| d1[(i, j)] * f[j]).sum()).collect();
        let ddf: Vec<C64> = (0..n).map(|i| (0..n).map(|j| d1[(i, j)] * df[j]).sum()).collect();
        Profile { cheb, f: f.to_vec(), df, ddf }
    }

    fn eval(&self, x: f64) -> (C64, C64, C64) {
        if x < self.cheb.a || x > self.cheb.b {
            return (ZERO, ZERO, ZERO);
        }
        (self.cheb.interpolate(&self.f, x), self.cheb.interpolate(&self.df, x), self.cheb.interpolate(&self.ddf, x))
    }
}

/// Radial C² cutoff: 1 for ρ ≤ r, 0 for ρ ≥ 2r.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EtaCutoff {
    pub r: f64,
}

impl EtaCutoff {
    fn radial(&self, rho: f64) -> (f64, f64, f64) {
        if rho <= self.r {
            return (1.0, 0.0, 0.0);
        }
        if rho >= 2.0 * self.r {
            return (0.0, 0.0, 0.0);
        }
        let t = (rho - self.r) / self.r;
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t) / self.r;
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (self.r * self.r);
        (1.0 - s, -ds, -dds)
    }

    /// η, η_a, η_aa, η_b, η_bb at the point (a, b).
    fn eval(&self, a: f64, b: f64) -> [f64; 5] {
        let rho = (a * a + b * b).sqrt();
        let (e, d, dd) = self.radial(rho);
        if d == 0.0 && dd == 0.0 {
            return [e, 0.0, 0.0, 0.0, 0.0];
        }
        let (ua, ub) = (a / rho, b / rho);
        [e, d * ua, dd * ua * ua + d * (1.0 - ua * ua) / rho, d * ub, dd * ub * ub + d * (1.0 - ub * ub) / rho]
    }
}

/// Value and (t, s) derivatives of η·U at a point of the boundary chart.
struct Jet {
    u: C64,
    ut: C64,
    utt: C64,
    us: C64,
    uss: C64,
}

struct Evaluator<'a> {
    frame: &'a RescaledFrame,
    eta: EtaCutoff,
    v0: Profile,
    phi: Profile,
    w: Profile,
    y: Profile,
    e34: f64,
}

impl<'a> Evaluator<'a> {
    fn new(parts: &QuasimodeU, frame: &'a RescaledFrame, eta: EtaCutoff) -> Self {
        let e = frame.eps;
        let c1 = if parts.with_corrections { e.powf(0.25) } else { 0.0 };
        let w: Vec<C64> = parts.w0.iter().zip(&parts.w1).map(|(a, b)| a + c1 * b).collect();
        let y: Vec<C64> = parts.xi_grid.nodes.iter().zip(&parts.w0).map(|(&x, w)| -I * x * w).collect();
        Evaluator {
            frame,
            eta,
            v0: Profile::new(&parts.tau_grid, &parts.v0),
            phi: Profile::new(&parts.tau_grid, &parts.v3_tau),
            w: Profile::new(&parts.xi_grid, &w),
            y: Profile::new(&parts.xi_grid, &y),
            e34: if parts.with_corrections { e.powf(0.75) } else { 0.0 },
        }
    }

    fn jet(&self, t: f64, s: f64) -> Jet {
        let at = self.frame.tau_scale();
        let ax = self.frame.xi_scale();
        let (v, v1, v2) = self.v0.eval(at * t);
        let (p, p1, p2) = self.phi.eval(at * t);
        let (w, w1, w2) = self.w.eval(ax * s);
        let (y, y1, y2) = self.y.eval(ax * s);
        let e = self.e34;
        let u = v * w + e * p * y;
        let ut = at * (v1 * w + e * p1 * y);
        let utt = at * at * (v2 * w + e * p2 * y);
        let us = ax * (v * w1 + e * p * y1);
        let uss = ax * ax * (v * w2 + e * p * y2);
        let [n, na, naa, nb, nbb] = self.eta.eval(t, s);
        Jet {
            u: n * u,
            ut: n * ut + na * u,
            utt: n * utt + 2.0 * na * ut + naa * u,
            us: n * us + nb * u,
            uss: n * uss + 2.0 * nb * us + nbb * u,
        }
    }
}

/// The assembled η·U on a tensor grid in (τ, ξ), normalized in L²(dτ dξ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssembledU {
    pub tau: Grid1D,
    pub xi: Grid1D,
    /// Row-major samples, index `i_tau * n_xi + j_xi`.
    pub values: Vec<C64>,
    pub c0: f64,
    /// ‖ηU‖ / ‖U‖ before normalization.
    pub retained: f64,
    pub eta_radius_xi: f64,
}

/// η·U with cutoff radius ε^{−1/2} in ξ units on the given (τ, ξ) tensor grid.
pub fn assemble_u(parts: &QuasimodeU, frame: &RescaledFrame, tau: &Grid1D, xi: &Grid1D) -> Result<AssembledU> {
    let r = frame.cutoff_radius();
    let rt = 2.0 * r * frame.tau_scale();
    let rx = 2.0 * r * frame.xi_scale();
    if tau.a > 0.0 || tau.b < rt.min(parts.tau_grid.b) || xi.a > -rx || xi.b < rx {
        return Err(Error::Configuration(format!("assembly grid does not contain the cutoff annulus (τ ≤ {rt:.3}, |ξ| ≤ {rx:.3})")));
    }
    let ev = Evaluator::new(parts, frame, EtaCutoff { r });
    let at = frame.tau_scale();
    let ax = frame.xi_scale();
    let nx = xi.nodes.len();
    let mut values = Vec::with_capacity(tau.nodes.len() * nx);
    let mut raw = 0.0;
    let mut cut = 0.0;
    for (ti, &ta) in tau.nodes.iter().enumerate() {
        for (xj, &xa) in xi.nodes.iter().enumerate() {
            let j = ev.jet(ta / at, xa / ax);
            let [n, ..] = ev.eta.eval(ta / at, xa / ax);
            let w = tau.weights[ti] * xi.weights[xj];
            if n > 0.0 {
                raw += (j.u / n).norm_sqr() * w;
            } else {
                let (v, _, _) = ev.v0.eval(ta);
                let (wv, _, _) = ev.w.eval(xa);
                let (p, _, _) = ev.phi.eval(ta);
                let (y, _, _) = ev.y.eval(xa);
                raw += (v * wv + ev.e34 * p * y).norm_sqr() * w;
            }
            cut += j.u.norm_sqr() * w;
            values.push(j.u);
        }
    }
    let c0 = 1.0 / cut.sqrt();
    values.iter_mut().for_each(|v| *v *= c0);
    Ok(AssembledU { tau: tau.clone(), xi: xi.clone(), values, c0, retained: (cut / raw).sqrt(), eta_radius_xi: r * ax })
}

/// Relative residual split by origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual: f64,
    /// Flat operator with the quadratic jet of V, minus Λ.
    pub model_part: f64,
    /// Curvature and metric terms of the curvilinear Laplacian.
    pub metric_part: f64,
    /// V minus its quadratic jet.
    pub potential_part: f64,
    pub dominant: String,
    pub refined_residual: f64,
    pub grid: (usize, usize),
}

fn residual_on(parts: &QuasimodeU, frame: &RescaledFrame, lambda: C64, field: &dyn PotentialField, curve: &dyn BoundaryCurve, nt: usize, ns: usize) -> [f64; 4] {
    let r = frame.cutoff_radius();
    let kmax = curve.max_curvature();
    let mut tmax = (2.0 * r).min(parts.tau_grid.b / frame.tau_scale());
    if kmax > 0.0 {
        tmax = tmax.min(0.95 / kmax);
    }
    let smax = (2.0 * r).min(parts.xi_grid.b / frame.xi_scale());
    let tg = Grid1D::cheb(nt, 0.0, tmax);
    let sg = Grid1D::cheb(ns, -smax, smax);
    let ev = Evaluator::new(parts, frame, EtaCutoff { r });
    let h2 = frame.h * frame.h;
    let pre = frame.prefactor();
    let vt = frame.sigma_n * frame.c;
    let alpha = frame.sigma_t * frame.alpha;
    let mut acc = [0.0; 4];
    let mut den = 0.0;
    for (it, &t) in tg.nodes.iter().enumerate() {
        for (js, &s) in sg.nodes.iter().enumerate() {
            let sa = frame.s0 + s;
            let kap = curve.curvature(sa);
            let kp = curve.curvature_derivative(sa);
            let g = 1.0 - t * kap;
            let j = ev.jet(t, s);
            let w = tg.weights[it] * sg.weights[js] * g;
            let jet_pot = vt * t + 0.5 * alpha * s * s + frame.sigma_mixed * s * t;
            let x = curvilinear_point(curve, sa, t);
            let vfull = field.value(x) - frame.v0;
            let model = pre * (-h2 * (j.utt + j.uss) + I * jet_pot * j.u) - lambda * j.u;
            let metric = pre * (-h2 * (-kap / g * j.ut + (1.0 / (g * g) - 1.0) * j.uss + t * kp / g.powi(3) * j.us));
            let potential = pre * I * (vfull - jet_pot) * j.u;
            let total = model + metric + potential;
            acc[0] += total.norm_sqr() * w;
            acc[1] += model.norm_sqr() * w;
            acc[2] += metric.norm_sqr() * w;
            acc[3] += potential.norm_sqr() * w;
            den += j.u.norm_sqr() * w;
        }
    }
    acc.map(|a| (a / den).sqrt())
}

/// ‖(α/(εc²))(𝒜_h − iV(x₀)) − Λ)(ηU)‖ / ‖ηU‖ on the boundary chart, with a refinement check.
pub fn residual_2d(parts: &QuasimodeU, frame: &RescaledFrame, lambda: C64, field: &dyn PotentialField, curve: &dyn BoundaryCurve) -> Result<ResidualReport> {
    let (nt, ns) = (96, 120);
    let a = residual_on(parts, frame, lambda, field, curve, nt, ns);
    let b = residual_on(parts, frame, lambda, field, curve, 3 * nt / 2, 3 * ns / 2);
    if (a[0] - b[0]).abs() > 0.1 * a[0].max(b[0]) {
        return Err(Error::Accuracy { what: format!("2D residual under refinement ({:.3e} vs {:.3e})", a[0], b[0]), achieved: (a[0] - b[0]).abs() / a[0].max(b[0]) });
    }
    let names = ["model", "metric", "potential"];
    let k = (1..4).max_by(|&i, &j| a[i].partial_cmp(&a[j]).unwrap_or(std::cmp::Ordering::Equal)).unwrap_or(1);
    Ok(ResidualReport {
        residual: a[0],
        model_part: a[1],
        metric_part: a[2],
        potential_part: a[3],
        dominant: names[k - 1].to_string(),
        refined_residual: b[0],
        grid: (nt, ns),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{find_perp_points, select_candidates, Circle, PolyPotential};

    fn disk_frame(v: &PolyPotential, h: f64) -> RescaledFrame {
        let circle = Circle { center: [0.0, 0.0], radius: 1.0 };
        let cand = select_candidates(&find_perp_points(&circle, v, 2048).unwrap()).unwrap();
        build_frame(&cand, h).unwrap()
    }

    fn xy() -> PolyPotential {
        PolyPotential::new(vec![(2, 0, 1.0), (0, 1, 1.0)])
    }

    #[test]
    fn frame_values_and_scalings() {
        let f = disk_frame(&xy(), 0.01);
        assert!((f.c - 1.0).abs() < 1e-12 && (f.alpha - 1.0).abs() < 1e-12);
        assert!((f.eps - 1e-4f64.cbrt()).abs() < 1e-14);
        assert!((f.eps - f.alpha * (f.h * f.h / f.c.powi(4)).cbrt()).abs() < 1e-14);
        assert_eq!(f.sigma_n, -1.0);
        assert_eq!(f.sigma_t, 1.0);
        let g = disk_frame(&xy(), 0.01 / 8.0);
        assert!((f.eps / g.eps - 4.0).abs() < 1e-12);
        let shifted = PolyPotential::new(vec![(2, 0, 1.0), (0, 1, 1.0), (0, 0, 3.0)]);
        let s = disk_frame(&shifted, 0.01);
        assert!((s.v0 - f.v0 - 3.0).abs() < 1e-12);
        assert_eq!((s.c, s.alpha, s.eps, s.sigma_mixed), (f.c, f.alpha, f.eps, f.sigma_mixed));
    }

    #[test]
    fn leading_eigenvalue_identities() {
        let f = disk_frame(&xy(), 0.02);
        let ground = C64::from_polar(0.5f64.sqrt(), PI / 4.0);
        let le = leading_eigenvalue(&f, ground).unwrap();
        let back = (le.physical - I * f.v0) * f.prefactor();
        assert!((back - le.big_lambda).norm() < 1e-12 * le.big_lambda.norm());
        let mu1 = airy::ai_zero(1).unwrap().abs();
        let re = mu1 / 2.0 * (f.c * f.h).powf(2.0 / 3.0) + le.s2.re * f.h;
        assert!((le.physical.re - re).abs() < 1e-14);
        assert!((le.s2 - C64::new(0.5, 0.5)).norm() < 1e-15);
        assert!((le.s2_nominal - C64::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn gamma_properties() {
        let m = HalfLineAiryModel::new(1.0).unwrap();
        let grid = Grid1D::cheb(256, 0.0, 40.0);
        assert_eq!(gamma_moment(&m, &grid, 0.0).unwrap(), ZERO);
        let g1 = gamma_moment(&m, &grid, 1.0).unwrap();
        let g2 = gamma_moment(&m, &grid, 2.0).unwrap();
        assert!((g2 - 2.0 * g1).norm() < 1e-14);
        let ratio = airy::airy_moment(1, 1).unwrap() / airy::airy_moment(0, 1).unwrap();
        assert!((g1.norm() - ratio).abs() < 1e-9 * ratio, "{} vs {ratio}", g1.norm());
        assert!((ratio - 2.0 / 3.0 * airy::ai_zero(1).unwrap().abs()).abs() < 1e-9);
    }

    #[test]
    fn corrector_parities_and_constraints() {
        let v = PolyPotential::new(vec![(2, 0, 1.0), (0, 1, 1.0), (1, 1, 0.7), (1, 0, -0.7)]);
        let f = disk_frame(&v, 0.01);
        assert!((f.sigma_mixed - 0.7).abs() < 1e-12);
        let q = build_quasimode(&f, true).unwrap();
        let n = q.w0.len();
        let norm = |a: &[C64]| a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let even: Vec<C64> = (0..n).map(|i| q.w0[i] - q.w0[n - 1 - i]).collect();
        let odd: Vec<C64> = (0..n).map(|i| q.w1[i] + q.w1[n - 1 - i]).collect();
        assert!(norm(&even) <= 1e-8 * norm(&q.w0));
        assert!(norm(&odd) <= 1e-7 * norm(&q.w1));
        let pair: C64 = q.w1.iter().zip(&q.w0).zip(&q.xi_grid.weights).map(|((a, b), w)| a * b * *w).sum();
        assert!(pair.norm() < 1e-8);
        let pv: C64 = q.v3_tau.iter().zip(&q.v0).zip(&q.tau_grid.weights).map(|((a, b), w)| a * b * *w).sum();
        assert!(pv.norm() < 1e-8);
        assert_eq!(q.v3_tau[0], ZERO);
        for p in [&q.w0, &q.w1] {
            assert!(p[1].norm() < 1e-8 && p[n - 2].norm() < 1e-8);
        }
        assert!(q.v3_tau[q.v3_tau.len() - 2].norm() < 1e-8);
        // γ-solvability of the v₃ right-hand side
        let rhs: Vec<C64> = q.tau_grid.nodes.iter().zip(&q.v0).map(|(&t, v)| (q.sigma_tilde * t - q.gamma) * v).collect();
        let d: C64 = rhs.iter().zip(&q.v0).zip(&q.tau_grid.weights).map(|((a, b), w)| a * b * *w).sum();
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn w1_vanishes_without_gamma_and_is_grid_stable() {
        let g = Grid1D::cheb(160, -14.0, 14.0);
        let coefficient = C64::new(0.0, 0.5);
        let ground = harmonic_ground(&HarmonicModel { coefficient }, &g).unwrap();
        assert!(solve_w1(ZERO, &ground, coefficient, &g).unwrap().iter().all(|v| *v == ZERO));
        let w = solve_w1(C64::new(0.3, -0.2), &ground, coefficient, &g).unwrap();
        let g2 = Grid1D::cheb(320, -14.0, 14.0);
        let ground2 = harmonic_ground(&HarmonicModel { coefficient }, &g2).unwrap();
        let w2 = solve_w1(C64::new(0.3, -0.2), &ground2, coefficient, &g2).unwrap();
        let c = ChebGrid::new(320, -14.0, 14.0);
        let mut err: f64 = 0.0;
        let mut mx: f64 = 0.0;
        for (i, &x) in g.nodes.iter().enumerate() {
            err = err.max((c.interpolate(&w2, x) - w[i]).norm());
            mx = mx.max(w[i].norm());
        }
        let mut e0: f64 = 0.0;
        for (i, &x) in g.nodes.iter().enumerate() {
            e0 = e0.max((c.interpolate(&ground2.pair.values, x) - ground.pair.values[i]).norm());
        }
        assert!(err < 1e-6 * mx, "{err} {mx} w0 {e0} {} {}", ground.pair.eigenvalue, ground2.pair.eigenvalue);
    }

    #[test]
    fn manufactured_v3() {
        let m = HalfLineAiryModel::new(1.0).unwrap();
        let grid = Grid1D::cheb(256, 0.0, 40.0);
        let solver = CorrectorSolver::new(m, 1, &grid).unwrap();
        let k = solver.kernel().to_vec();
        let mut g: Vec<C64> = grid.nodes.iter().map(|&x| C64::new(x * (-x).exp(), 0.5 * x * x * (-x).exp())).collect();
        let c = solver.pairing(&g) / solver.pairing(&k);
        g.iter_mut().zip(&k).for_each(|(a, b)| *a -= c * b);
        let cheb = ChebGrid::new(256, 0.0, 40.0);
        let d2 = cheb.d2();
        let n = g.len();
        let rhs: Vec<C64> = (0..n).map(|i| -(0..n).map(|j| d2[(i, j)] * g[j]).sum::<C64>() + (I * grid.nodes[i] - solver.lambda0) * g[i]).collect();
        let u = solver.solve(&rhs, 3).unwrap();
        let e = u.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(e < 1e-7 * g.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }

    #[test]
    fn assembled_profile_contract() {
        let f = disk_frame(&xy(), 1e-3);
        let q = build_quasimode(&f, false).unwrap();
        let r = f.cutoff_radius();
        let tau = Grid1D::cheb(120, 0.0, (2.0 * r * f.tau_scale()).min(40.0));
        let xi = Grid1D::cheb(120, -2.0 * r * f.xi_scale(), 2.0 * r * f.xi_scale());
        let a = assemble_u(&q, &f, &tau, &xi).unwrap();
        assert!(a.retained >= 1.0 - 1e-6 && a.retained <= 1.0 + 1e-12, "{}", a.retained);
        let nx = xi.nodes.len();
        assert!(a.values[..nx].iter().all(|v| *v == ZERO));
        let small = Grid1D::cheb(40, -1.0, 1.0);
        assert!(matches!(assemble_u(&q, &f, &tau, &small), Err(Error::Configuration(_))));
    }

    #[test]
    fn residual_order_on_the_disk() {
        let v = xy();
        let circle = Circle { center: [0.0, 0.0], radius: 1.0 };
        let ground = C64::from_polar(0.5f64.sqrt(), PI / 4.0);
        let mut pts = Vec::new();
        for h in [0.04, 0.02, 0.01] {
            let f = disk_frame(&v, h);
            let le = leading_eigenvalue(&f, ground).unwrap();
            let r = residual_2d(&build_quasimode(&f, true).unwrap(), &f, le.big_lambda, &v, &circle).unwrap();
            assert!(r.residual.is_finite());
            assert!((r.residual - r.refined_residual).abs() < 0.01 * r.residual);
            pts.push((f.eps.ln(), r.residual.ln()));
        }
        assert!(pts.windows(2).all(|w| w[1].1 < w[0].1));
        let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
        assert!(slope >= 0.8, "{slope}");
    }

    #[test]
    fn residual_decreases_and_corrections_help() {
        let v = PolyPotential::new(vec![(2, 0, 1.0), (0, 1, 1.0), (1, 1, 0.7), (1, 0, -0.7)]);
        let circle = Circle { center: [0.0, 0.0], radius: 1.0 };
        let ground = C64::from_polar(0.5f64.sqrt(), PI / 4.0);
        let mut prev = f64::INFINITY;
        for h in [0.04, 0.02, 0.01] {
            let f = disk_frame(&v, h);
            let le = leading_eigenvalue(&f, ground).unwrap();
            let q = build_quasimode(&f, true).unwrap();
            let r = residual_2d(&q, &f, le.big_lambda, &v, &circle).unwrap();
            assert!(r.residual.is_finite() && r.residual < prev, "h = {h}: {r:?}");
            prev = r.residual;
            if h == 0.01 {
                let q0 = build_quasimode(&f, false).unwrap();
                let r0 = residual_2d(&q0, &f, le.big_lambda, &v, &circle).unwrap();
                assert!(r0.residual > r.residual, "{} vs {}", r0.residual, r.residual);
            }
        }
    }
}
