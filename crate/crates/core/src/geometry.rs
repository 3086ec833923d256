//! Boundary curves, potentials on the plane, perpendicular boundary points
//! and the curvature-corrected tangential curvature of the potential.

use crate::error::{Error, Result};
use crate::quad;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub type Vec2 = [f64; 2];

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Closed, counterclockwise, arclength-parametrized C³ curve.
pub trait BoundaryCurve: Send + Sync {
    fn length(&self) -> f64;
    fn point(&self, s: f64) -> Vec2;
    /// Unit tangent in the direction of increasing arclength.
    fn tangent(&self, s: f64) -> Vec2;
    /// Signed curvature, positive for convex counterclockwise arcs.
    fn curvature(&self, s: f64) -> f64;
    fn curvature_derivative(&self, s: f64) -> f64;
    fn name(&self) -> String;

    /// Outward unit normal.
    fn normal(&self, s: f64) -> Vec2 {
        let t = self.tangent(s);
        [t[1], -t[0]]
    }

    fn max_curvature(&self) -> f64 {
        let n = 2048;
        let l = self.length();
        (0..n).map(|i| self.curvature(l * i as f64 / n as f64).abs()).fold(0.0, f64::max)
    }
}

fn wrap(s: f64, l: f64) -> f64 {
    let r = s.rem_euclid(l);
    if r >= l { 0.0 } else { r }
}

#[derive(Debug, Clone)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl BoundaryCurve for Circle {
    fn length(&self) -> f64 {
        2.0 * PI * self.radius
    }
    fn point(&self, s: f64) -> Vec2 {
        let th = s / self.radius;
        [self.center[0] + self.radius * th.cos(), self.center[1] + self.radius * th.sin()]
    }
    fn tangent(&self, s: f64) -> Vec2 {
        let th = s / self.radius;
        [-th.sin(), th.cos()]
    }
    fn curvature(&self, _s: f64) -> f64 {
        1.0 / self.radius
    }
    fn curvature_derivative(&self, _s: f64) -> f64 {
        0.0
    }
    fn name(&self) -> String {
        format!("circle(r={})", self.radius)
    }
}

/// Ellipse `(a cos θ, b sin θ)` reparametrized by arclength from θ = 0.
#[derive(Debug, Clone)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
    table: Vec<(f64, f64)>,
    total: f64,
}

impl Ellipse {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Configuration("ellipse semi-axes must be positive".into()));
        }
        let speed = |th: f64| (a * a * th.sin().powi(2) + b * b * th.cos().powi(2)).sqrt();
        let m = 512;
        let mut table = vec![(0.0, 0.0)];
        let mut acc = 0.0;
        for i in 0..m {
            let t0 = 2.0 * PI * i as f64 / m as f64;
            let t1 = 2.0 * PI * (i + 1) as f64 / m as f64;
            acc += quad::integrate(speed, t0, t1, 1e-15, 1e-14)?.0;
            table.push((t1, acc));
        }
        Ok(Ellipse { a, b, table, total: acc })
    }

    fn speed(&self, th: f64) -> f64 {
        (self.a * self.a * th.sin().powi(2) + self.b * self.b * th.cos().powi(2)).sqrt()
    }

    /// Parameter θ at arclength s (Newton on the tabulated arclength).
    fn theta(&self, s: f64) -> f64 {
        let s = wrap(s, self.total);
        let idx = self.table.partition_point(|&(_, acc)| acc <= s).clamp(1, self.table.len() - 1);
        let (t0, s0) = self.table[idx - 1];
        let (t1, s1) = self.table[idx];
        let mut th = t0 + (t1 - t0) * (s - s0) / (s1 - s0);
        for _ in 0..8 {
            let acc = s0 + quad::integrate(|x| self.speed(x), t0, th, 1e-16, 1e-15).map(|r| r.0).unwrap_or(0.0);
            let step = (acc - s) / self.speed(th);
            th -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        th
    }
}

impl BoundaryCurve for Ellipse {
    fn length(&self) -> f64 {
        self.total
    }
    fn point(&self, s: f64) -> Vec2 {
        let th = self.theta(s);
        [self.a * th.cos(), self.b * th.sin()]
    }
    fn tangent(&self, s: f64) -> Vec2 {
        let th = self.theta(s);
        let sp = self.speed(th);
        [-self.a * th.sin() / sp, self.b * th.cos() / sp]
    }
    fn curvature(&self, s: f64) -> f64 {
        let th = self.theta(s);
        self.a * self.b / self.speed(th).powi(3)
    }
    fn curvature_derivative(&self, s: f64) -> f64 {
        let th = self.theta(s);
        let sp = self.speed(th);
        // dκ/dθ / (ds/dθ)
        let dsp = (self.a * self.a - self.b * self.b) * th.sin() * th.cos() / sp;
        -3.0 * self.a * self.b * dsp / sp.powi(4) / sp
    }
    fn name(&self) -> String {
        format!("ellipse(a={}, b={})", self.a, self.b)
    }
}

/// Axis-aligned square with corners rounded by a C³ curvature bump.
///
/// Each corner turns the tangent by π/2 over arclength `corner` with
/// κ(u) = (π/2) B'(u) / corner, B the septic smoothstep.
#[derive(Debug, Clone)]
pub struct RoundedSquare {
    pub side: f64,
    pub corner: f64,
    corner_chord: Vec2,
}

fn smoothstep7(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u.powi(4) * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u.powi(3))
}

fn smoothstep7_d(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    140.0 * u.powi(3) * (1.0 - u).powi(3)
}

fn smoothstep7_dd(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    420.0 * u * u * (1.0 - u) * (1.0 - u) * (1.0 - 2.0 * u)
}

impl RoundedSquare {
    /// `side` is the length of each straight edge, `corner` the arclength of each rounded corner.
    pub fn new(side: f64, corner: f64) -> Result<Self> {
        if !(side > 0.0 && corner > 0.0) {
            return Err(Error::Configuration("rounded square needs positive side and corner lengths".into()));
        }
        let f = |u: f64| {
            let th = 0.5 * PI * smoothstep7(u);
            (th.cos(), th.sin())
        };
        let cx = quad::integrate(|u| f(u).0, 0.0, 1.0, 1e-16, 1e-15)?.0 * corner;
        let cy = quad::integrate(|u| f(u).1, 0.0, 1.0, 1e-16, 1e-15)?.0 * corner;
        Ok(RoundedSquare { side, corner, corner_chord: [cx, cy] })
    }

    fn segment(&self, s: f64) -> (usize, f64, bool) {
        let per = self.side + self.corner;
        let s = wrap(s, 4.0 * per);
        let q = ((s / per).floor() as usize).min(3);
        let local = s - q as f64 * per;
        if local < self.side { (q, local, true) } else { (q, local - self.side, false) }
    }

    fn rotate(v: Vec2, quarter: usize) -> Vec2 {
        match quarter % 4 {
            0 => v,
            1 => [-v[1], v[0]],
            2 => [-v[0], -v[1]],
            _ => [v[1], -v[0]],
        }
    }

    fn start_of_quarter(&self, q: usize) -> Vec2 {
        // bottom edge starts at (-side/2, y0) heading +x
        let y0 = -(self.side / 2.0 + self.corner_chord[1]);
        let mut p = [-self.side / 2.0, y0];
        for k in 0..q {
            let e = Self::rotate([self.side, 0.0], k);
            let c = Self::rotate(self.corner_chord, k);
            p = [p[0] + e[0] + c[0], p[1] + e[1] + c[1]];
        }
        p
    }
}

impl BoundaryCurve for RoundedSquare {
    fn length(&self) -> f64 {
        4.0 * (self.side + self.corner)
    }
    fn point(&self, s: f64) -> Vec2 {
        let (q, local, edge) = self.segment(s);
        let p0 = self.start_of_quarter(q);
        if edge {
            let d = Self::rotate([local, 0.0], q);
            return [p0[0] + d[0], p0[1] + d[1]];
        }
        let e = Self::rotate([self.side, 0.0], q);
        let u1 = local / self.corner;
        let cx = quad::integrate(|u| (0.5 * PI * smoothstep7(u)).cos(), 0.0, u1, 1e-16, 1e-15).map(|r| r.0).unwrap_or(0.0);
        let cy = quad::integrate(|u| (0.5 * PI * smoothstep7(u)).sin(), 0.0, u1, 1e-16, 1e-15).map(|r| r.0).unwrap_or(0.0);
        let c = Self::rotate([cx * self.corner, cy * self.corner], q);
        [p0[0] + e[0] + c[0], p0[1] + e[1] + c[1]]
    }
    fn tangent(&self, s: f64) -> Vec2 {
        let (q, local, edge) = self.segment(s);
        let th = if edge { 0.0 } else { 0.5 * PI * smoothstep7(local / self.corner) };
        Self::rotate([th.cos(), th.sin()], q)
    }
    fn curvature(&self, s: f64) -> f64 {
        let (_, local, edge) = self.segment(s);
        if edge { 0.0 } else { 0.5 * PI * smoothstep7_d(local / self.corner) / self.corner }
    }
    fn curvature_derivative(&self, s: f64) -> f64 {
        let (_, local, edge) = self.segment(s);
        if edge { 0.0 } else { 0.5 * PI * smoothstep7_dd(local / self.corner) / (self.corner * self.corner) }
    }
    fn name(&self) -> String {
        format!("rounded-square(side={}, corner={})", self.side, self.corner)
    }
}

/// The same curve traversed clockwise; used to check orientation invariance.
pub struct Reversed<C: BoundaryCurve>(pub C);

impl<C: BoundaryCurve> BoundaryCurve for Reversed<C> {
    fn length(&self) -> f64 {
        self.0.length()
    }
    fn point(&self, s: f64) -> Vec2 {
        self.0.point(wrap(-s, self.length()))
    }
    fn tangent(&self, s: f64) -> Vec2 {
        let t = self.0.tangent(wrap(-s, self.length()));
        [-t[0], -t[1]]
    }
    fn curvature(&self, s: f64) -> f64 {
        // the outward normal is kept outward, so curvature keeps its sign
        self.0.curvature(wrap(-s, self.length()))
    }
    fn curvature_derivative(&self, s: f64) -> f64 {
        -self.0.curvature_derivative(wrap(-s, self.length()))
    }
    fn normal(&self, s: f64) -> Vec2 {
        self.0.normal(wrap(-s, self.length()))
    }
    fn name(&self) -> String {
        format!("reversed {}", self.0.name())
    }
}

/// Smooth real potential on the plane with exact first and second derivatives.
pub trait PotentialField: Send + Sync {
    fn value(&self, p: Vec2) -> f64;
    fn grad(&self, p: Vec2) -> Vec2;
    /// Hessian as `[[Vxx, Vxy], [Vxy, Vyy]]`.
    fn hess(&self, p: Vec2) -> [[f64; 2]; 2];
}

/// Polynomial potential Σ c_{ij} x^i y^j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPotential {
    pub terms: Vec<(u32, u32, f64)>,
}

impl PolyPotential {
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Self {
        PolyPotential { terms }
    }

    pub fn scaled(&self, f: f64) -> Self {
        PolyPotential { terms: self.terms.iter().map(|&(i, j, c)| (i, j, c * f)).collect() }
    }
}

fn pw(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl PotentialField for PolyPotential {
    fn value(&self, p: Vec2) -> f64 {
        self.terms.iter().map(|&(i, j, c)| c * pw(p[0], i) * pw(p[1], j)).sum()
    }
    fn grad(&self, p: Vec2) -> Vec2 {
        let mut g = [0.0, 0.0];
        for &(i, j, c) in &self.terms {
            if i > 0 {
                g[0] += c * i as f64 * pw(p[0], i - 1) * pw(p[1], j);
            }
            if j > 0 {
                g[1] += c * j as f64 * pw(p[0], i) * pw(p[1], j - 1);
            }
        }
        g
    }
    fn hess(&self, p: Vec2) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for &(i, j, c) in &self.terms {
            if i > 1 {
                h[0][0] += c * (i * (i - 1)) as f64 * pw(p[0], i - 2) * pw(p[1], j);
            }
            if j > 1 {
                h[1][1] += c * (j * (j - 1)) as f64 * pw(p[0], i) * pw(p[1], j - 2);
            }
            if i > 0 && j > 0 {
                let v = c * (i * j) as f64 * pw(p[0], i - 1) * pw(p[1], j - 1);
                h[0][1] += v;
                h[1][0] += v;
            }
        }
        h
    }
}

/// Potential composed with a rigid motion: `V'(p) = V(R^T (p - shift))`.
pub struct Moved<P: PotentialField> {
    pub inner: P,
    pub angle: f64,
    pub shift: Vec2,
}

impl<P: PotentialField> Moved<P> {
    fn pull(&self, p: Vec2) -> Vec2 {
        let (s, c) = self.angle.sin_cos();
        let q = [p[0] - self.shift[0], p[1] - self.shift[1]];
        [c * q[0] + s * q[1], -s * q[0] + c * q[1]]
    }
    fn push(&self, v: Vec2) -> Vec2 {
        let (s, c) = self.angle.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }
}

impl<P: PotentialField> PotentialField for Moved<P> {
    fn value(&self, p: Vec2) -> f64 {
        self.inner.value(self.pull(p))
    }
    fn grad(&self, p: Vec2) -> Vec2 {
        self.push(self.inner.grad(self.pull(p)))
    }
    fn hess(&self, p: Vec2) -> [[f64; 2]; 2] {
        let h = self.inner.hess(self.pull(p));
        let (s, c) = self.angle.sin_cos();
        let r = [[c, -s], [s, c]];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut v = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        v += r[i][k] * h[k][l] * r[j][l];
                    }
                }
                out[i][j] = v;
            }
        }
        out
    }
}

/// Curve moved by a rigid motion (rotation about the origin, then shift).
pub struct MovedCurve<C: BoundaryCurve> {
    pub inner: C,
    pub angle: f64,
    pub shift: Vec2,
}

impl<C: BoundaryCurve> MovedCurve<C> {
    fn rot(&self, v: Vec2) -> Vec2 {
        let (s, c) = self.angle.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }
}

impl<C: BoundaryCurve> BoundaryCurve for MovedCurve<C> {
    fn length(&self) -> f64 {
        self.inner.length()
    }
    fn point(&self, s: f64) -> Vec2 {
        let p = self.rot(self.inner.point(s));
        [p[0] + self.shift[0], p[1] + self.shift[1]]
    }
    fn tangent(&self, s: f64) -> Vec2 {
        self.rot(self.inner.tangent(s))
    }
    fn curvature(&self, s: f64) -> f64 {
        self.inner.curvature(s)
    }
    fn curvature_derivative(&self, s: f64) -> f64 {
        self.inner.curvature_derivative(s)
    }
    fn name(&self) -> String {
        format!("moved {}", self.inner.name())
    }
}

/// A boundary point where ∇V is normal to the boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerpPoint {
    pub s: f64,
    pub position: Vec2,
    /// ∇V·ν with ν the outward normal.
    pub c: f64,
    /// t·D²V t − κ ∂V/∂ν.
    pub alpha: f64,
    pub grad_norm: f64,
    pub v_value: f64,
    /// Mixed derivative V_st in (s, inward t) coordinates.
    pub sigma_mixed: f64,
    pub kappa: f64,
    /// V_tt in the inward normal direction.
    pub beta: f64,
    pub tangential_residual: f64,
}

fn tangential_derivative(curve: &dyn BoundaryCurve, field: &dyn PotentialField, s: f64) -> f64 {
    dot(field.grad(curve.point(s)), curve.tangent(s))
}

fn alpha_at(curve: &dyn BoundaryCurve, field: &dyn PotentialField, s: f64) -> f64 {
    let p = curve.point(s);
    let t = curve.tangent(s);
    let nu = curve.normal(s);
    let h = field.hess(p);
    let tht = t[0] * (h[0][0] * t[0] + h[0][1] * t[1]) + t[1] * (h[1][0] * t[0] + h[1][1] * t[1]);
    tht - curve.curvature(s) * dot(field.grad(p), nu)
}

/// Full jet of the potential at a boundary point.
pub fn perp_point_at(curve: &dyn BoundaryCurve, field: &dyn PotentialField, s: f64) -> PerpPoint {
    let p = curve.point(s);
    let t = curve.tangent(s);
    let nu = curve.normal(s);
    let g = field.grad(p);
    let h = field.hess(p);
    let hv = |a: Vec2, b: Vec2| a[0] * (h[0][0] * b[0] + h[0][1] * b[1]) + a[1] * (h[1][0] * b[0] + h[1][1] * b[1]);
    let kappa = curve.curvature(s);
    PerpPoint {
        s,
        position: p,
        c: dot(g, nu),
        alpha: alpha_at(curve, field, s),
        grad_norm: dot(g, g).sqrt(),
        v_value: field.value(p),
        // x(s,t) = γ(s) − tν(s): ∂_t V = −∇V·ν, ∂_s∂_t V = −t·D²V ν − κ ∇V·t
        sigma_mixed: -hv(t, nu) - kappa * dot(g, t),
        kappa,
        beta: hv(nu, nu),
        tangential_residual: dot(g, t).abs(),
    }
}

/// Locate all isolated roots of s ↦ ∇V·t along the boundary.
pub fn find_perp_points(curve: &dyn BoundaryCurve, field: &dyn PotentialField, samples: usize) -> Result<Vec<PerpPoint>> {
    let l = curve.length();
    let m = samples.max(64);
    let ss: Vec<f64> = (0..m).map(|i| l * i as f64 / m as f64).collect();
    let f: Vec<f64> = ss.iter().map(|&s| tangential_derivative(curve, field, s)).collect();
    let scale = ss
        .iter()
        .map(|&s| {
            let g = field.grad(curve.point(s));
            dot(g, g).sqrt()
        })
        .fold(0.0, f64::max)
        .max(1e-300);
    let tiny = 1e-10 * scale;
    // degeneracy: a run of consecutive near-zero samples spanning an arc
    let mut run = 0usize;
    for k in 0..2 * m {
        if f[k % m].abs() <= tiny {
            run += 1;
            if run >= 4 {
                return Err(Error::Degeneracy(format!(
                    "∇V is normal to the boundary along an arc near s = {:.6}",
                    ss[k % m]
                )));
            }
        } else {
            run = 0;
        }
    }
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..m {
        let j = (i + 1) % m;
        let (a, b) = (ss[i], if j == 0 { l } else { ss[j] });
        let (fa, fb) = (f[i], f[j]);
        if fa == 0.0 || fa.abs() <= tiny {
            if f[(i + m - 1) % m].abs() > tiny {
                roots.push(a);
            }
            continue;
        }
        if fa * fb < 0.0 && fb.abs() > tiny {
            roots.push(refine_root(curve, field, a, b, fa, tiny));
        }
    }
    if roots.is_empty() {
        return Err(Error::Contradiction("no boundary point where ∇V is normal; the boundary set must be nonempty".into()));
    }
    let mut pts: Vec<PerpPoint> = roots.into_iter().map(|s| perp_point_at(curve, field, wrap(s, l))).collect();
    pts.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup_by(|a, b| (a.s - b.s).abs() < 1e-9 * l);
    for p in &pts {
        if p.tangential_residual > 1e-8 * p.grad_norm.max(1e-300) && p.tangential_residual > 1e-10 * scale {
            return Err(Error::Numerical(format!("perpendicular point at s = {} failed to certify", p.s)));
        }
    }
    Ok(pts)
}

fn refine_root(curve: &dyn BoundaryCurve, field: &dyn PotentialField, mut a: f64, mut b: f64, mut fa: f64, tiny: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = tangential_derivative(curve, field, mid);
        if fm.abs() <= 1e-3 * tiny || b - a < 1e-15 * curve.length() {
            a = mid;
            b = mid;
            break;
        }
        if fm * fa < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    let mut s = 0.5 * (a + b);
    // Newton polish: d/ds (∇V·t) = α
    for _ in 0..3 {
        let f = tangential_derivative(curve, field, s);
        let d = alpha_at(curve, field, s);
        if d.abs() > 0.0 && (f / d).abs() < 1e-6 {
            s -= f / d;
        }
    }
    s
}

/// The selected point x₀ and the set 𝒮 of equivalent boundary points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateSet {
    pub x0: PerpPoint,
    pub members: Vec<PerpPoint>,
    pub assumption_ok: bool,
    pub conjugated: bool,
    /// Minimizers of |∇V| with a different value of V (excluded from 𝒮).
    pub other_minimizers: Vec<PerpPoint>,
}

impl CandidateSet {
    pub fn c_m(&self) -> f64 {
        self.x0.grad_norm
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1e-300)
}

/// Pick x₀ minimizing |∇V| over the perpendicular set and assemble 𝒮.
pub fn select_candidates(perps: &[PerpPoint]) -> Result<CandidateSet> {
    if perps.is_empty() {
        return Err(Error::Contradiction("empty perpendicular set".into()));
    }
    let cm = perps.iter().map(|p| p.grad_norm).fold(f64::INFINITY, f64::min);
    let minimizers: Vec<&PerpPoint> = perps.iter().filter(|p| close(p.grad_norm, cm)).collect();
    let x0 = minimizers
        .iter()
        .filter(|p| p.alpha * p.c > 0.0)
        .min_by(|a, b| a.s.partial_cmp(&b.s).unwrap_or(std::cmp::Ordering::Equal))
        .or_else(|| minimizers.iter().min_by(|a, b| a.s.partial_cmp(&b.s).unwrap_or(std::cmp::Ordering::Equal)))
        .map(|p| (*p).clone())
        .expect("nonempty");
    let members: Vec<PerpPoint> = minimizers.iter().filter(|p| close(p.v_value, x0.v_value)).map(|p| (*p).clone()).collect();
    let others: Vec<PerpPoint> = minimizers.iter().filter(|p| !close(p.v_value, x0.v_value)).map(|p| (*p).clone()).collect();
    let signs: Vec<f64> = members.iter().map(|p| (p.alpha * p.c).signum()).collect();
    let all_pos = signs.iter().all(|&s| s > 0.0);
    if !all_pos {
        let mixed = signs.iter().any(|&s| s > 0.0);
        let detail = if mixed { "αc has mixed signs across the candidate set" } else { "αc ≤ 0 at the selected point; conjugation preserves the sign of αc" };
        return Err(Error::AssumptionViolation(format!(
            "{detail} (x₀ = ({:.6}, {:.6}), α = {:.6}, c = {:.6})",
            x0.position[0], x0.position[1], x0.alpha, x0.c
        )));
    }
    let conjugated = x0.alpha < 0.0;
    Ok(CandidateSet { x0, members, assumption_ok: true, conjugated, other_minimizers: others })
}

/// Local boundary-fitted coordinates `x(s, t) = γ(s) − t ν(s)` near `s0`.
#[derive(Debug, Clone)]
pub struct CurvilinearFrame {
    pub s0: f64,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub origin: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub width: f64,
}

impl CurvilinearFrame {
    /// Metric factor g = 1 − tκ.
    pub fn metric(&self, t: f64) -> f64 {
        1.0 - t * self.kappa
    }
}

pub fn curvilinear_frame(curve: &dyn BoundaryCurve, s0: f64, width: f64) -> Result<CurvilinearFrame> {
    let kmax = curve.max_curvature();
    if kmax > 0.0 && width >= 1.0 / kmax {
        return Err(Error::Degeneracy(format!("tube width {width} exceeds 1/max|κ| = {}", 1.0 / kmax)));
    }
    Ok(CurvilinearFrame {
        s0,
        kappa: curve.curvature(s0),
        kappa_prime: curve.curvature_derivative(s0),
        origin: curve.point(s0),
        tangent: curve.tangent(s0),
        normal: curve.normal(s0),
        width,
    })
}

/// Physical position of curvilinear coordinates (s, t).
pub fn curvilinear_point(curve: &dyn BoundaryCurve, s: f64, t: f64) -> Vec2 {
    let p = curve.point(s);
    let n = curve.normal(s);
    [p[0] - t * n[0], p[1] - t * n[1]]
}

/// Shared handles for configuration-driven use.
pub type CurveHandle = Arc<dyn BoundaryCurve>;
pub type FieldHandle = Arc<dyn PotentialField>;
