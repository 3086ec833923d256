//! The acceptance suite A1–A11 with pinned tolerances.

use crate::airy;
use crate::discretization::{build_1d, build_halfline_model, build_tensor_model, dense_eigenvalues, shift_invert_eigenvalues, Grid1D};
use crate::error::{Error, Result};
use crate::expansion1d::{assemble_quasimode, default_grid, expand, lambda_series, residual_norm, taylor_from_callable, CutoffSpec, Endpoint, PotentialTaylor, SOLVABILITY_TOL};
use crate::expansion2d::{build_frame, build_quasimode};
use crate::experiment::{boundary_eigenvalue, certified_ground, compare, numerical_1d, subleading_verdict, BoundaryEigen, GridSpec};
use crate::geometry::{find_perp_points, perp_point_at, select_candidates, Circle, Ellipse, Moved, MovedCurve, PolyPotential};
use crate::model::{airy_halfline_eigenfunction, project, tensor_sum_spectrum, HalfLineAiryModel, HarmonicModel, Normalization, TensorSumModel};
use crate::resolvent::{airy_line_operator, half_plane_operator, linear_fit, semigroup_norm, spectral_margin_bounds, tensor_resolvent_check, TensorGrids};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

pub const A1_TOL: f64 = 1e-6;
pub const A2_TOL: f64 = 1e-4;
pub const A3_LAMBDA1_TOL: f64 = 0.02;
pub const A3_ORDER_TOL: f64 = 0.15;
pub const A4_SLOPE_MARGIN: f64 = 0.8;
pub const A5_TOL: f64 = 0.10;
pub const A6_TOL: f64 = 0.15;
pub const A7_TOL: f64 = 1e-5;
pub const A8_TOL: f64 = 0.01;
pub const A8_SLACK: f64 = 0.02;
pub const A9_SPREAD: f64 = 2.0;
pub const A9_BASELINE_TOL: f64 = 0.05;
pub const A10_BAND: f64 = 0.1;

/// Frozen constants of the tensor-model circle sweep.
pub const TENSOR_BASELINE: &str = include_str!("../baselines/tensor_resolvent.json");

/// Outcome of one criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
    pub runtime_s: f64,
    pub budget_s: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:.4e} vs tolerance {:.4e} ({:.2}s of {:.0}s) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.measured,
            self.tolerance,
            self.runtime_s,
            self.budget_s,
            self.detail
        )
    }
}

/// Tolerance scaling and per-criterion overrides.
#[derive(Debug, Clone, Default)]
pub struct Tolerances {
    pub scale: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn new(scale: f64, overrides: &BTreeMap<String, f64>) -> Self {
        Tolerances { scale, overrides: overrides.clone() }
    }

    pub fn get(&self, id: &str, default: f64) -> f64 {
        self.overrides.get(id).copied().unwrap_or(default) * self.scale
    }
}

fn finish(id: &str, t: Instant, budget: f64, r: Result<(bool, f64, f64, String)>) -> CriterionResult {
    let runtime_s = t.elapsed().as_secs_f64();
    match r {
        Ok((ok, measured, tolerance, detail)) => CriterionResult { id: id.into(), passed: ok && runtime_s <= budget, measured, tolerance, detail, runtime_s, budget_s: budget },
        Err(e) => CriterionResult { id: id.into(), passed: false, measured: f64::NAN, tolerance: f64::NAN, detail: format!("error: {e}"), runtime_s, budget_s: budget },
    }
}

fn mu1() -> f64 {
    airy::ai_zero(1).map(|m| m.abs()).unwrap_or(f64::NAN)
}

/// A1: Chebyshev half-line model against |μ₁|e^{iπ/3}.
pub fn a1(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let tl = tol.get("A1", A1_TOL);
    let r = (|| {
        let op = build_halfline_model(1.0, &Grid1D::cheb(200, 0.0, 30.0))?;
        let l = dense_eigenvalues(&op, 1, None)?.eigenvalues[0];
        let want = C64::from_polar(mu1(), PI / 3.0);
        let e = (l - want).norm() / want.norm();
        Ok((e <= tl, e, tl, format!("leftmost {l:.10}")))
    })();
    finish("A1", t, 5.0, r)
}

/// A2: linear potential on the unit interval.
pub fn a2(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let tl = tol.get("A2", A2_TOL);
    let r = (|| {
        let mut errs = Vec::new();
        for h in [0.05f64, 0.02, 0.01] {
            let want = h.powf(2.0 / 3.0) * C64::from_polar(mu1(), PI / 3.0);
            let (l, _, _) = numerical_1d(&|x| x, 1.0, h, 240, want, 3)?;
            errs.push((l - want).norm() / want.norm());
        }
        let e = errs[2];
        Ok((e <= tl, e, tl, format!("relative errors {errs:?}")))
    })();
    finish("A2", t, 30.0, r)
}

/// A3: two-term expansion of x + x²/2 from an h sweep.
pub fn a3(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let tl = tol.get("A3", A3_LAMBDA1_TOL);
    let r = (|| {
        let v = |x: f64| x + 0.5 * x * x;
        let pt = PotentialTaylor::left(vec![1.0, 0.5, 0.0], 1.0, 0.0)?;
        let series = lambda_series(&pt, 1, 2)?;
        let num = [0.01, 0.005, 0.0025].iter().map(|&h| numerical_1d(&v, 1.0, h, 260, series.physical(h), 3).map(|r| (h, r.0))).collect::<Result<Vec<_>>>()?;
        let fit = compare(&series, &num)?;
        if fit.terms.len() < 2 {
            return Err(Error::Numerical("fit produced fewer than two terms".into()));
        }
        let dev = fit.terms[0].rel_deviation;
        let order = fit.terms[1].measured_order;
        let ok = dev <= tl && (order - 2.0).abs() <= A3_ORDER_TOL * tol.scale && !fit.inconclusive;
        Ok((ok, dev, tl, format!("λ₁ extracted {:.6} vs {:.6}; two-term residual order {order:.3} in ε", fit.terms[0].extracted, fit.terms[0].analytic)))
    })();
    finish("A3", t, 120.0, r)
}

/// A4: quasimode residual slopes for N = 1, 2, 3.
pub fn a4(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let margin = A4_SLOPE_MARGIN / tol.scale.max(1e-12);
    let r = (|| {
        let v = |x: f64| x + 0.5 * x * x;
        let pt = taylor_from_callable(&v, Endpoint::Left, 1.0, 4)?;
        let cut = CutoffSpec { c0: 10.0, rho: 2.0 / 3.0 };
        let eps = [0.1f64, 0.05, 0.025];
        let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let mut worst = f64::INFINITY;
        let mut slopes = Vec::new();
        for n in 1..=3usize {
            let (s, c) = expand(&pt, 1, n, &default_grid(1.0))?;
            let ly = eps.iter().map(|&e| residual_norm(&assemble_quasimode(&s, &c, e, cut)?, &s, &v, e).map(|r| r.ln())).collect::<Result<Vec<_>>>()?;
            let (slope, _) = linear_fit(&lx, &ly);
            slopes.push(slope);
            worst = worst.min(slope - n as f64);
        }
        Ok((worst >= margin, worst, margin, format!("slopes {slopes:.3?}; reported value is min(slope − N)")))
    })();
    finish("A4", t, 60.0, r)
}

/// Disk V = x² + y boundary eigenvalues for h ∈ {0.04, 0.02, 0.01}, computed once.
pub fn disk_sweep() -> Result<&'static Vec<BoundaryEigen>> {
    static SWEEP: OnceLock<std::result::Result<Vec<BoundaryEigen>, Error>> = OnceLock::new();
    SWEEP
        .get_or_init(|| {
            let v = PolyPotential::new(vec![(2, 0, 1.0), (0, 1, 1.0)]);
            let circle = Circle { center: [0.0, 0.0], radius: 1.0 };
            let cand = select_candidates(&find_perp_points(&circle, &v, 4096)?)?;
            let ground = certified_ground()?;
            [0.04, 0.02, 0.01].iter().map(|&h| boundary_eigenvalue(&circle, &v, &cand, h, &GridSpec::default(), ground)).collect()
        })
        .as_ref()
        .map_err(|e| e.clone())
}

/// A5: leading real part on the unit disk.
pub fn a5(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let tl = tol.get("A5", A5_TOL);
    let r = (|| {
        let sweep = disk_sweep()?;
        let errs: Vec<(f64, f64)> = sweep
            .iter()
            .filter(|b| b.h >= 0.02)
            .map(|b| {
                let lead = 0.5 * mu1() * b.h.powf(2.0 / 3.0);
                (b.h, (b.lambda.re - lead).abs() / lead)
            })
            .collect();
        let e = errs.iter().find(|(h, _)| *h == 0.02).map(|x| x.1).ok_or_else(|| Error::Numerical("h = 0.02 missing".into()))?;
        let shrinking = errs.windows(2).all(|w| w[1].1 < w[0].1);
        Ok((e <= tl && shrinking, e, tl, format!("relative errors of Re λ by h {errs:.4?}")))
    })();
    finish("A5", t, 600.0, r)
}

/// A6: adjudicate the coefficient of h in the disk eigenvalue.
pub fn a6(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let tl = tol.get("A6", A6_TOL);
    let r = (|| {
        let sweep = disk_sweep()?;
        let v = PolyPotential::new(vec![(2, 0, 1.0), (0, 1, 1.0)]);
        let circle = Circle { center: [0.0, 0.0], radius: 1.0 };
        let cand = select_candidates(&find_perp_points(&circle, &v, 4096)?)?;
        let frame = build_frame(&cand, 0.02)?;
        let eigs: Vec<(f64, C64)> = sweep.iter().map(|b| (b.h, b.lambda)).collect();
        let verdict = subleading_verdict(&frame, &eigs, certified_ground()?, tl)?;
        let definitive = (verdict.certified_error <= tl) != (verdict.nominal_error <= tl);
        Ok((
            definitive,
            verdict.certified_error.min(verdict.nominal_error),
            tl,
            format!(
                "{}: estimate {:.4} (extrapolated {:.4}); certified {:.4} off by {:.1}%, nominal {:.4} off by {:.1}%",
                verdict.verdict,
                verdict.estimate,
                verdict.extrapolated,
                verdict.certified,
                100.0 * verdict.certified_error,
                verdict.nominal,
                100.0 * verdict.nominal_error
            ),
        ))
    })();
    finish("A6", t, 600.0, r)
}

/// A7: tensor-model eigenvalues against the lattice of component eigenvalues.
pub fn a7(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let tl = tol.get("A7", A7_TOL);
    let r = (|| {
        let eps = 0.04;
        let tau = Grid1D::cheb(90, 0.0, 24.0);
        let xi = Grid1D::cheb(80, -13.0, 13.0);
        let op = build_tensor_model(eps, 1.0, &tau, &xi)?;
        let ground = certified_ground()?;
        let model = TensorSumModel { airy_part: HalfLineAiryModel::new(1.0)?, harmonic_part: HarmonicModel::default(), eps };
        let lattice = tensor_sum_spectrum(&model, 3, 3, ground)?;
        let mut worst: f64 = 0.0;
        for p in lattice.iter().take(4) {
            let rep = shift_invert_eigenvalues(&op, 2, p.value + C64::new(0.02, -0.01))?;
            let near = rep.nearest(p.value).ok_or_else(|| Error::Numerical("no eigenvalue near lattice point".into()))?;
            worst = worst.max((near - p.value).norm() / p.value.norm());
        }
        Ok((worst <= tl, worst, tl, format!("four leftmost lattice points, dimension {}", op.dim())))
    })();
    finish("A7", t, 60.0, r)
}

/// A8: exact semigroup law for the line operator and the half-plane bound.
pub fn a8(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let tl = tol.get("A8", A8_TOL);
    let r = (|| {
        let line = airy_line_operator(60.0, 800)?;
        let mut worst: f64 = 0.0;
        for s in [0.5f64, 1.0, 2.0] {
            let n = semigroup_norm(&line, s)?;
            worst = worst.max((n / (-s.powi(3) / 12.0).exp() - 1.0).abs());
        }
        let half = half_plane_operator(60.0, 800, 20.0, 60)?;
        let mut ratio: f64 = 0.0;
        for s in [0.5f64, 1.0, 1.5, 2.0] {
            ratio = ratio.max(semigroup_norm(&half, s)? / (-s.powi(3) / 12.0).exp());
        }
        let bound = 1.0 + A8_SLACK * tol.scale;
        Ok((worst <= tl && ratio <= bound, worst, tl, format!("half-plane norm / law ≤ {ratio:.4} (bound {bound})")))
    })();
    finish("A8", t, 120.0, r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorBaseline {
    pub grids: String,
    /// `[eps, r, constant]` rows.
    pub constants: Vec<(f64, f64, f64)>,
}

/// A9: resolvent constants on circles about the ground lattice point.
pub fn a9(tol: &Tolerances, jobs: usize) -> CriterionResult {
    let t = Instant::now();
    let tl = tol.get("A9", A9_SPREAD);
    let r = (|| {
        let base: TensorBaseline = serde_json::from_str(TENSOR_BASELINE).map_err(|e| Error::Configuration(format!("baseline: {e}")))?;
        let rep = tensor_resolvent_check(&[0.04, 0.02, 0.01], &[0.05, 0.1, 0.2], &TensorGrids::default(), jobs)?;
        let mut drift: f64 = 0.0;
        for s in &rep.samples {
            let b = base.constants.iter().find(|(e, r, _)| *e == s.eps && *r == s.r).ok_or_else(|| Error::Configuration(format!("baseline lacks ε = {}, r = {}", s.eps, s.r)))?;
            drift = drift.max((s.constant / b.2 - 1.0).abs());
        }
        let mut doubling: f64 = 0.0;
        for a in &rep.samples {
            if let Some(b) = rep.samples.iter().find(|b| b.eps == a.eps && (b.r - 0.5 * a.r).abs() < 1e-12) {
                doubling = doubling.max(b.max_norm / a.max_norm);
            }
        }
        let isolated = rep.samples.iter().all(|s| s.enclosed.len() == 1);
        let ok = rep.spread <= tl && drift <= A9_BASELINE_TOL * tol.scale && doubling <= 2.0 && isolated;
        Ok((ok, rep.spread, tl, format!("baseline drift {drift:.2e}; halving r multiplies the max norm by at most {doubling:.4}; one enclosed eigenvalue: {isolated}")))
    })();
    finish("A9", t, 300.0, r)
}

/// A10: late-time semigroup decay rate for V = x.
pub fn a10(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let band = tol.get("A10", A10_BAND);
    let r = (|| {
        let mut worst: f64 = 0.0;
        let mut ratios = Vec::new();
        let mut conclusive = true;
        for h in [0.05, 0.02] {
            let op = build_1d(&|x| x, 1.0, h, &Grid1D::cheb(120, 0.0, 1.0))?;
            let m = spectral_margin_bounds(&op, h, 1.0)?;
            conclusive &= !m.inconclusive;
            ratios.push(m.ratio);
            worst = worst.max((m.ratio - 1.0).abs());
        }
        Ok((worst <= band && conclusive, worst, band, format!("slope ratios {ratios:.5?}")))
    })();
    finish("A10", t, 120.0, r)
}

/// A11: property suites with deterministic samples.
pub fn a11(tol: &Tolerances) -> CriterionResult {
    let t = Instant::now();
    let r = property_failures(tol.scale).map(|fails| {
        let n = fails.len() as f64;
        (fails.is_empty(), n, 0.0, if fails.is_empty() { "all property checks hold".to_string() } else { fails.join("; ") })
    });
    finish("A11", t, 60.0, r)
}

fn property_failures(scale: f64) -> Result<Vec<String>> {
    let mut fails = Vec::new();
    // ODE residual on a deterministic spiral of 500 points filling |z| ≤ 20
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let r = 20.0 * ((k as f64 + 0.5) / 500.0).sqrt();
        let z = C64::from_polar(r, 2.399963 * k as f64);
        let e = airy::ai(z)?;
        let za = z * e.value;
        worst = worst.max((e.second - za).norm() / (1.0 + za.norm()));
    }
    if worst > 1e-8 * scale {
        fails.push(format!("Airy ODE residual {worst:.2e}"));
    }
    // zero certificates
    for (n, m) in airy::zero_table(10)?.zeros.iter().enumerate() {
        let e = airy::ai(C64::new(*m, 0.0))?;
        if e.value.norm() > 1e-12 * scale.max(1.0) * e.derivative.norm().max(1.0) {
            fails.push(format!("zero {} certificate {:.2e}", n + 1, e.value.norm()));
        }
    }
    // projector idempotence
    let grid = Grid1D::cheb(200, 0.0, 30.0);
    let model = HalfLineAiryModel::new(1.0)?;
    let u: Vec<C64> = grid.nodes.iter().map(|&x| C64::new(x * (-x).exp(), x * x * (-0.5 * x * x).exp())).collect();
    let p1 = project(&u, 1, &model, &grid)?;
    let p2 = project(&p1.projected, 1, &model, &grid)?;
    let d = p1.projected.iter().zip(&p2.projected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if d > 1e-10 * scale {
        fails.push(format!("projector idempotence defect {d:.2e}"));
    }
    let v1 = airy_halfline_eigenfunction(&model, 1, &grid, Normalization::BilinearUnit)?;
    if (v1.bilinear(&v1.values) - 1.0).norm() > 1e-10 * scale {
        fails.push("eigenfunction normalization".into());
    }
    // parity of the tangential profiles
    let v = PolyPotential::new(vec![(2, 0, 1.0), (0, 1, 1.0), (1, 1, 0.7), (1, 0, -0.7)]);
    let circle = Circle { center: [0.0, 0.0], radius: 1.0 };
    let cand = select_candidates(&find_perp_points(&circle, &v, 2048)?)?;
    let q = build_quasimode(&build_frame(&cand, 0.01)?, true)?;
    let n = q.w0.len();
    let nrm = |a: &[C64]| a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let even = nrm(&(0..n).map(|i| q.w0[i] - q.w0[n - 1 - i]).collect::<Vec<_>>()) / nrm(&q.w0);
    let odd = nrm(&(0..n).map(|i| q.w1[i] + q.w1[n - 1 - i]).collect::<Vec<_>>()) / nrm(&q.w1);
    let pair: C64 = q.w1.iter().zip(&q.w0).zip(&q.xi_grid.weights).map(|((a, b), w)| a * b * *w).sum();
    if even > 1e-8 * scale || odd > 1e-7 * scale || pair.norm() > 1e-8 * scale {
        fails.push(format!("parity defects even {even:.2e}, odd {odd:.2e}, pairing {:.2e}", pair.norm()));
    }
    // solvability certificates at every order
    for betas in [vec![1.0, 0.5], vec![1.0, 0.0, -1.0 / 6.0, 0.0, 1.0 / 120.0], vec![-2.0, 0.3, 0.1]] {
        let pt = PotentialTaylor::left(betas, 1.0, 0.0)?;
        for mode in 1..=2 {
            let s = lambda_series(&pt, mode, 4)?;
            let w = s.solvability_defects.iter().cloned().fold(0.0, f64::max);
            if w > SOLVABILITY_TOL * scale {
                fails.push(format!("solvability defect {w:.2e} for mode {mode}"));
            }
        }
    }
    // rigid-motion equivariance of boundary data
    let ell = Ellipse::new(1.3, 0.8)?;
    let field = PolyPotential::new(vec![(1, 0, 0.4), (0, 1, 1.0), (2, 0, 0.3), (1, 1, 0.2)]);
    let (angle, shift) = (0.7, [0.3, -1.1]);
    let moved_curve = MovedCurve { inner: ell.clone(), angle, shift };
    let moved_field = Moved { inner: field.clone(), angle, shift };
    for k in 0..16 {
        let s = 0.37 * k as f64;
        let a = perp_point_at(&ell, &field, s);
        let b = perp_point_at(&moved_curve, &moved_field, s);
        let d = (a.c - b.c).abs() + (a.alpha - b.alpha).abs() + (a.v_value - b.v_value).abs() + (a.tangential_residual - b.tangential_residual).abs();
        if d > 1e-9 * scale {
            fails.push(format!("rigid-motion defect {d:.2e} at s = {s}"));
            break;
        }
    }
    Ok(fails)
}

/// Every criterion in order.
pub fn run_all(tol_scale: f64, jobs: usize, overrides: &BTreeMap<String, f64>) -> Vec<CriterionResult> {
    let tol = Tolerances::new(tol_scale, overrides);
    vec![a1(&tol), a2(&tol), a3(&tol), a4(&tol), a5(&tol), a6(&tol), a7(&tol), a8(&tol), a9(&tol, jobs), a10(&tol), a11(&tol)]
}
