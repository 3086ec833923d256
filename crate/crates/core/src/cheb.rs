//! Chebyshev–Gauss–Lobatto collocation on an interval.

use faer::Mat;
use std::f64::consts::PI;

/// Chebyshev–Lobatto grid on `[a, b]`, nodes in increasing order.
#[derive(Debug, Clone)]
pub struct ChebGrid {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    /// Clenshaw–Curtis weights for `∫_a^b`.
    pub weights: Vec<f64>,
    bary: Vec<f64>,
}

impl ChebGrid {
    /// `n` intervals, hence `n + 1` nodes.
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        assert!(n >= 2 && b > a, "Chebyshev grid needs n >= 2 and a < b");
        let half = 0.5 * (b - a);
        let nodes: Vec<f64> = (0..=n)
            .map(|j| {
                let x = -(j as f64 * PI / n as f64).cos();
                if 2 * j == n { 0.5 * (a + b) } else { a + half * (x + 1.0) }
            })
            .collect();
        let weights = clenshaw_curtis(n).into_iter().map(|w| w * half).collect();
        let bary = (0..=n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n { 0.5 * s } else { s }
            })
            .collect();
        ChebGrid { a, b, nodes, weights, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// First-derivative collocation matrix (negative-sum diagonal).
    pub fn d1(&self) -> Mat<f64> {
        let m = self.len();
        let x = &self.nodes;
        let w = &self.bary;
        let mut d = Mat::<f64>::zeros(m, m);
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let v = (w[j] / w[i]) / (x[i] - x[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }

    /// Second-derivative collocation matrix.
    pub fn d2(&self) -> Mat<f64> {
        let d = self.d1();
        &d * &d
    }

    /// Barycentric interpolation of nodal values `f` at `x`.
    pub fn interpolate<T>(&self, f: &[T], x: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Div<f64, Output = T>,
    {
        let mut num: Option<T> = None;
        let mut den = 0.0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            let dx = x - xj;
            if dx == 0.0 {
                return f[j];
            }
            let c = self.bary[j] / dx;
            num = Some(match num {
                None => f[j] * c,
                Some(s) => s + f[j] * c,
            });
            den += c;
        }
        num.expect("non-empty grid") / den
    }

    /// Chebyshev coefficients `c_k` with `f(x) = Σ c_k T_k(ξ(x))`.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len() - 1;
        // nodes are ordered by increasing x, i.e. ξ_j = -cos(jπ/n) = cos((n-j)π/n)
        (0..=n)
            .map(|k| {
                let mut s = 0.0;
                for (j, &fj) in f.iter().enumerate() {
                    let theta = (n - j) as f64 * PI / n as f64;
                    let wt = if j == 0 || j == n { 0.5 } else { 1.0 };
                    s += wt * fj * (k as f64 * theta).cos();
                }
                let scale = if k == 0 || k == n { 1.0 } else { 2.0 };
                s * scale / n as f64
            })
            .collect()
    }
}

/// Clenshaw–Curtis weights on `[-1, 1]` for the `n + 1` Lobatto points.
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let nf = n as f64;
    for (j, wj) in w.iter_mut().enumerate() {
        let theta = j as f64 * PI / nf;
        let mut v = 1.0;
        let upper = n / 2;
        for k in 1..=upper {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            v -= b * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = c * v / nf;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_smooth_function() {
        let g = ChebGrid::new(40, 0.0, 3.0);
        let f: Vec<f64> = g.nodes.iter().map(|x| (2.0 * x).sin()).collect();
        let d = g.d1();
        let d2 = g.d2();
        for i in 0..g.len() {
            let x = g.nodes[i];
            let df: f64 = (0..g.len()).map(|j| d[(i, j)] * f[j]).sum();
            let ddf: f64 = (0..g.len()).map(|j| d2[(i, j)] * f[j]).sum();
            assert!((df - 2.0 * (2.0 * x).cos()).abs() < 1e-10);
            assert!((ddf + 4.0 * (2.0 * x).sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn clenshaw_curtis_integrates_exponential() {
        let g = ChebGrid::new(24, -1.0, 2.0);
        let s: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.exp()).sum();
        assert!((s - (2f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn interpolation_and_coefficients() {
        let g = ChebGrid::new(30, 0.0, 1.0);
        let f: Vec<f64> = g.nodes.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
        let v = g.interpolate(&f, 0.3217);
        assert!((v - 1.0 / (1.0 + 0.3217f64.powi(2))).abs() < 1e-12);
        // T_2 on [0,1]: ξ = 2x - 1
        let t2: Vec<f64> = g.nodes.iter().map(|x| 2.0 * (2.0 * x - 1.0).powi(2) - 1.0).collect();
        let c = g.coefficients(&t2);
        for (k, ck) in c.iter().enumerate() {
            let expect = if k == 2 { 1.0 } else { 0.0 };
            assert!((ck - expect).abs() < 1e-13, "k={k} c={ck}");
        }
    }
}
