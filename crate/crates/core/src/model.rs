//! Closed-form spectra and eigenfunctions of the half-line complex Airy
//! operator, the complex harmonic oscillator and their tensor sum.

use crate::airy;
use crate::cheb::ChebGrid;
use crate::discretization::{build_harmonic_model, dense_eigenvalues, Grid1D};
use crate::error::{Error, Result};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// `−d²/dx² + iβ₀x` on the half-line with Dirichlet condition at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfLineAiryModel {
    pub beta0: f64,
}

impl HalfLineAiryModel {
    pub fn new(beta0: f64) -> Result<Self> {
        if beta0 == 0.0 || !beta0.is_finite() {
            return Err(Error::HypothesisViolation(format!("β₀ must be finite and nonzero, got {beta0}")));
        }
        Ok(HalfLineAiryModel { beta0 })
    }

    pub fn sign(&self) -> f64 {
        self.beta0.signum()
    }

    /// Complex scale `|β₀|^{1/3} e^{σiπ/6}` of the eigenfunction argument.
    pub fn argument_scale(&self) -> C64 {
        C64::from_polar(self.beta0.abs().cbrt(), self.sign() * PI / 6.0)
    }

    /// Eigenvalue `|β₀|^{2/3}|μ_n| e^{σiπ/3}`.
    pub fn eigenvalue(&self, n: usize) -> Result<C64> {
        let mu = airy::ai_zero(n)?;
        Ok(C64::from_polar(self.beta0.abs().powf(2.0 / 3.0) * mu.abs(), self.sign() * PI / 3.0))
    }

    /// Unnormalized eigenfunction `Ai(|β₀|^{1/3}e^{σiπ/6}x + μ_n)`.
    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<C64> {
        let mu = airy::ai_zero(n)?;
        Ok(airy::ai(self.argument_scale() * x + mu)?.value)
    }
}

/// `−d²/dξ² + q ξ²`; q = i/2 for the tangential model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicModel {
    pub coefficient: C64,
}

impl Default for HarmonicModel {
    fn default() -> Self {
        HarmonicModel { coefficient: C64::new(0.0, 0.5) }
    }
}

impl HarmonicModel {
    /// Exact ground pair: `w₀ = exp(−qξ²)` with `4q² = coefficient`, eigenvalue `2q`.
    pub fn analytic_ground(&self) -> (C64, C64) {
        let q = self.coefficient.sqrt() / 2.0;
        (2.0 * q, q)
    }

    /// Nominal ground value `√2 e^{iπ/4}` for the tangential model, kept for comparison.
    pub fn nominal_ground() -> C64 {
        C64::from_polar(2f64.sqrt(), PI / 4.0)
    }

    /// Nominal ground profile exponent `(1/√2)e^{iπ/4}`, i.e. `w₀ = exp(−p ξ²)`.
    pub fn nominal_ground_exponent() -> C64 {
        C64::from_polar(0.5f64.sqrt(), PI / 4.0)
    }
}

/// `𝓛_τ + ε^{1/2} 𝓛_ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorSumModel {
    pub airy_part: HalfLineAiryModel,
    pub harmonic_part: HarmonicModel,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    UnitL2,
    /// Bilinear normalization `∫ v² = 1`, with `Re v′(0) > 0` or `Re v(0) > 0` fixing the sign.
    BilinearUnit,
}

/// A sampled eigenpair on a 1D grid (values at every node, endpoints included).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub eigenvalue: C64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<C64>,
    pub normalization: Normalization,
    /// Collocation residual ‖(A − λ)u‖/‖u‖ on interior nodes.
    pub residual: f64,
}

impl EigenPair {
    pub fn bilinear(&self, other: &[C64]) -> C64 {
        self.values.iter().zip(other).zip(&self.weights).map(|((a, b), w)| a * b * *w).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt()
    }
}

fn normalize(values: &mut [C64], weights: &[f64], how: Normalization, sign_ref: C64) -> Result<()> {
    let scale = match how {
        Normalization::UnitL2 => {
            let n: f64 = values.iter().zip(weights).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt();
            C64::new(1.0 / n, 0.0)
        }
        Normalization::BilinearUnit => {
            let b: C64 = values.iter().zip(weights).map(|(v, w)| v * v * *w).sum();
            if b.norm() < 1e-14 {
                return Err(Error::Numerical("bilinear self-pairing vanishes; bilinear normalization undefined".into()));
            }
            let mut c = C64::new(1.0, 0.0) / b.sqrt();
            if (c * sign_ref).re < 0.0 {
                c = -c;
            }
            c
        }
    };
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(())
}

fn collocation_residual(grid: &Grid1D, values: &[C64], potential: impl Fn(f64) -> C64, lambda: C64) -> f64 {
    let cheb = ChebGrid::new(grid.nodes.len() - 1, grid.a, grid.b);
    let d2 = cheb.d2();
    let n = values.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..n - 1 {
        let mut lap = C64::new(0.0, 0.0);
        for j in 0..n {
            lap += d2[(i, j)] * values[j];
        }
        let r = -lap + (potential(grid.nodes[i]) - lambda) * values[i];
        num += r.norm_sqr() * grid.weights[i];
        den += values[i].norm_sqr() * grid.weights[i];
    }
    (num / den.max(1e-300)).sqrt()
}

/// First `n_max` eigenvalues `|β₀|^{2/3} μ_n e^{−σ2iπ/3}`.
pub fn airy_halfline_spectrum(model: &HalfLineAiryModel, n_max: usize) -> Result<Vec<C64>> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    (1..=n_max).map(|n| model.eigenvalue(n)).collect()
}

/// Closed-form eigenfunction sampled on a Chebyshev grid of [0, L].
pub fn airy_halfline_eigenfunction(model: &HalfLineAiryModel, n: usize, grid: &Grid1D, normalization: Normalization) -> Result<EigenPair> {
    if grid.a != 0.0 {
        return Err(Error::Domain("half-line grid must start at 0".into()));
    }
    let lambda = model.eigenvalue(n)?;
    let mut values: Vec<C64> = grid.nodes.iter().map(|&x| model.eigenfunction(n, x)).collect::<Result<_>>()?;
    let tail = values.last().map(|v| v.norm()).unwrap_or(0.0);
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if tail > 1e-10 * peak.max(1.0) {
        return Err(Error::Domain(format!("grid end L = {} too short: |v_n(L)| = {tail:.3e}", grid.b)));
    }
    let scale = model.argument_scale();
    // sign reference: v′(0) ∝ scale·Ai′(μ_n)
    let dref = scale * airy::ai(C64::new(airy::ai_zero(n)?, 0.0))?.derivative;
    normalize(&mut values, &grid.weights, normalization, dref)?;
    let beta0 = model.beta0;
    let residual = match grid.scheme {
        crate::discretization::Scheme::Cheb => collocation_residual(grid, &values, |x| I * beta0 * x, lambda),
        crate::discretization::Scheme::Fd2 => f64::NAN,
    };
    Ok(EigenPair { eigenvalue: lambda, nodes: grid.nodes.clone(), weights: grid.weights.clone(), values, normalization, residual })
}

/// Ground pair of the harmonic model by dense eigensolve, with the analytic and nominal values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicGround {
    pub pair: EigenPair,
    pub analytic_lambda: C64,
    pub analytic_q: C64,
    pub nominal_lambda: C64,
    /// True when the computed value disagrees with the nominal value by more than 1e-6 relative.
    pub nominal_discrepant: bool,
    /// The five smallest-real-part eigenvalues of the discretization.
    pub ladder: Vec<C64>,
    pub evenness_defect: f64,
}

pub fn harmonic_ground(model: &HarmonicModel, grid: &Grid1D) -> Result<HarmonicGround> {
    if (grid.a + grid.b).abs() > 1e-12 * grid.b.abs() || grid.b < 10.0 {
        return Err(Error::Domain("harmonic grid must be symmetric [−L, L] with L ≥ 10".into()));
    }
    let op = build_harmonic_model(model.coefficient, grid)?;
    let rep = dense_eigenvalues(&op, 5, None)?;
    let lambda = rep.eigenvalues[0];
    if !rep.accepted[0] {
        return Err(Error::Numerical(format!("harmonic ground pair residual {:.3e} not certified", rep.residuals[0])));
    }
    let mut values = vec![C64::new(0.0, 0.0)];
    values.extend_from_slice(&rep.vectors[0]);
    values.push(C64::new(0.0, 0.0));
    let mid = values.len() / 2;
    let centre = if values.len() % 2 == 1 { values[mid] } else { 0.5 * (values[mid - 1] + values[mid]) };
    normalize(&mut values, &grid.weights, Normalization::BilinearUnit, centre)?;
    let n = values.len();
    let nrm = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let odd = (0..n).map(|i| (values[i] - values[n - 1 - i]).norm_sqr()).sum::<f64>().sqrt();
    let coefficient = model.coefficient;
    let residual = match grid.scheme {
        crate::discretization::Scheme::Cheb => collocation_residual(grid, &values, |x| coefficient * x * x, lambda),
        crate::discretization::Scheme::Fd2 => rep.residuals[0],
    };
    let (al, aq) = model.analytic_ground();
    let nominal = HarmonicModel::nominal_ground();
    Ok(HarmonicGround {
        pair: EigenPair {
            eigenvalue: lambda,
            nodes: grid.nodes.clone(),
            weights: grid.weights.clone(),
            values,
            normalization: Normalization::BilinearUnit,
            residual,
        },
        analytic_lambda: al,
        analytic_q: aq,
        nominal_lambda: nominal,
        nominal_discrepant: (lambda - nominal).norm() > 1e-6 * nominal.norm(),
        ladder: rep.eigenvalues.clone(),
        evenness_defect: odd / nrm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub n: usize,
    pub k: usize,
    pub value: C64,
}

/// `{λ_n(𝓛_τ) + ε^{1/2}(2k − 1)λ_ground}` for n ≤ n_max, k ≤ k_max, sorted by real part.
pub fn tensor_sum_spectrum(model: &TensorSumModel, n_max: usize, k_max: usize, lambda_ground: C64) -> Result<Vec<LatticePoint>> {
    if n_max == 0 || k_max == 0 {
        return Err(Error::Domain("lattice index bounds must be at least 1".into()));
    }
    let airy = airy_halfline_spectrum(&model.airy_part, n_max)?;
    let se = model.eps.sqrt();
    let mut pts = Vec::with_capacity(n_max * k_max);
    for (i, a) in airy.iter().enumerate() {
        for k in 1..=k_max {
            pts.push(LatticePoint { n: i + 1, k, value: a + se * (2 * k - 1) as f64 * lambda_ground });
        }
    }
    pts.sort_by(|a, b| a.value.re.partial_cmp(&b.value.re).unwrap_or(std::cmp::Ordering::Equal).then((a.n, a.k).cmp(&(b.n, b.k))));
    Ok(pts)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Projection {
    pub coefficient: C64,
    pub projected: Vec<C64>,
}

/// `Π_n u = ⟨v̄_n, u⟩ v_n` with the bilinear pairing and bilinear-normalized `v_n`.
pub fn project(u: &[C64], n: usize, model: &HalfLineAiryModel, grid: &Grid1D) -> Result<Projection> {
    if u.len() != grid.nodes.len() {
        return Err(Error::Domain(format!("profile has {} samples but the grid has {}", u.len(), grid.nodes.len())));
    }
    let v = airy_halfline_eigenfunction(model, n, grid, Normalization::BilinearUnit)?;
    let coefficient = v.bilinear(u);
    let projected = v.values.iter().map(|x| coefficient * x).collect();
    Ok(Projection { coefficient, projected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(b: f64) -> HalfLineAiryModel {
        HalfLineAiryModel::new(b).unwrap()
    }

    #[test]
    fn spectrum_values_and_symmetries() {
        let s = airy_halfline_spectrum(&m(1.0), 4).unwrap();
        assert!((s[0] - C64::new(1.169053705, 2.024862)).norm() < 1e-5);
        let c = airy_halfline_spectrum(&m(-1.0), 4).unwrap();
        for (a, b) in s.iter().zip(&c) {
            assert_eq!(a.conj(), *b);
        }
        let e = airy_halfline_spectrum(&m(8.0), 4).unwrap();
        for (a, b) in s.iter().zip(&e) {
            assert!((b - 4.0 * a).norm() < 1e-12 * b.norm());
        }
        assert!(HalfLineAiryModel::new(0.0).is_err());
    }

    #[test]
    fn eigenfunction_dirichlet_and_residual() {
        let grid = Grid1D::cheb(200, 0.0, 30.0);
        let p = airy_halfline_eigenfunction(&m(1.0), 1, &grid, Normalization::BilinearUnit).unwrap();
        assert!(p.values[0].norm() <= 1e-12);
        assert!(p.residual <= 1e-6, "{}", p.residual);
        assert!((p.bilinear(&p.values) - 1.0).norm() < 1e-12);
        let short = Grid1D::cheb(60, 0.0, 4.0);
        assert!(matches!(airy_halfline_eigenfunction(&m(1.0), 1, &short, Normalization::UnitL2), Err(Error::Domain(_))));
    }

    #[test]
    fn second_mode_profile_structure() {
        let mu1 = airy::ai_zero(1).unwrap().abs();
        let mu2 = airy::ai_zero(2).unwrap().abs();
        let xs: Vec<f64> = (0..=2000).map(|i| mu2 * i as f64 / 2000.0).collect();
        // along the rotated ray x e^{−iπ/6} the profile is Ai(x + μ₂): one interior zero at |μ₂| − |μ₁|
        let ray: Vec<f64> = xs.iter().map(|&x| airy::ai(C64::new(x + airy::ai_zero(2).unwrap(), 0.0)).unwrap().value.norm()).collect();
        let minima: Vec<usize> = (1..ray.len() - 1).filter(|&i| ray[i] < ray[i - 1] && ray[i] < ray[i + 1]).collect();
        assert_eq!(minima.len(), 1);
        assert!((xs[minima[0]] - (mu2 - mu1)).abs() < 2.0 * mu2 / 2000.0);
        // on the real axis the zero is pushed off the line and leaves a single shoulder in |v₂|
        let model = m(1.0);
        let real: Vec<f64> = xs.iter().map(|&x| model.eigenfunction(2, x).unwrap().norm()).collect();
        let slope: Vec<f64> = real.windows(2).map(|w| w[1] - w[0]).collect();
        let shoulders = (1..slope.len() - 1).filter(|&i| slope[i] < slope[i - 1] && slope[i] < slope[i + 1] && slope[i] > 0.0).count();
        assert_eq!(shoulders, 1);
    }

    #[test]
    fn harmonic_ground_pair() {
        let g = harmonic_ground(&HarmonicModel::default(), &Grid1D::cheb(160, -12.0, 12.0)).unwrap();
        let exact = C64::from_polar(0.5f64.sqrt(), PI / 4.0);
        assert!((g.pair.eigenvalue - exact).norm() < 1e-8);
        assert!((g.analytic_lambda - exact).norm() < 1e-15);
        assert!(g.nominal_discrepant);
        assert!(g.evenness_defect < 1e-8);
        let ax = g.analytic_q;
        assert!((4.0 * ax * ax - C64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn harmonic_ladder() {
        let g = harmonic_ground(&HarmonicModel::default(), &Grid1D::cheb(400, -14.0, 14.0)).unwrap();
        for (k, l) in g.ladder.iter().enumerate() {
            let expect = (2 * k + 1) as f64 * g.pair.eigenvalue;
            assert!((l - expect).norm() / expect.norm() < 1e-4, "{k}: {l}");
        }
    }

    #[test]
    fn lattice_structure() {
        let t = TensorSumModel { airy_part: m(1.0), harmonic_part: HarmonicModel::default(), eps: 0.01 };
        let nominal = HarmonicModel::nominal_ground();
        let pts = tensor_sum_spectrum(&t, 3, 4, nominal).unwrap();
        let mu1 = airy::ai_zero(1).unwrap().abs();
        let p11 = pts.iter().find(|p| p.n == 1 && p.k == 1).unwrap().value;
        assert!((p11 - (C64::from_polar(mu1, PI / 3.0) + 0.1 * C64::new(1.0, 1.0))).norm() < 1e-14);
        for p in &pts {
            let base = pts.iter().find(|q| q.n == p.n && q.k == 1).unwrap().value;
            let d = p.value - base;
            assert!((d - (2 * p.k - 2) as f64 * 0.1 * nominal).norm() < 1e-14);
        }
        let t0 = TensorSumModel { eps: 0.0, ..t };
        let p = tensor_sum_spectrum(&t0, 1, 1, nominal).unwrap();
        assert_eq!(p[0].value, C64::from_polar(mu1, PI / 3.0));
    }

    #[test]
    fn projections() {
        let grid = Grid1D::cheb(200, 0.0, 30.0);
        let model = m(1.0);
        let v1 = airy_halfline_eigenfunction(&model, 1, &grid, Normalization::BilinearUnit).unwrap();
        let v2 = airy_halfline_eigenfunction(&model, 2, &grid, Normalization::BilinearUnit).unwrap();
        let p = project(&v1.values, 1, &model, &grid).unwrap();
        assert!((p.coefficient - 1.0).norm() < 1e-12);
        let p = project(&v2.values, 1, &model, &grid).unwrap();
        assert!(p.coefficient.norm() < 1e-8, "{}", p.coefficient);
        let u: Vec<C64> = grid.nodes.iter().map(|&x| C64::new(x * (-x).exp(), x * x * (-0.5 * x * x).exp())).collect();
        let p1 = project(&u, 1, &model, &grid).unwrap();
        let p2 = project(&p1.projected, 1, &model, &grid).unwrap();
        let d: f64 = p1.projected.iter().zip(&p2.projected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-10);
        assert!(matches!(project(&u[1..], 1, &model, &grid), Err(Error::Domain(_))));
    }
}
