//! One-dimensional quadrature rules and small regression helpers.

use crate::error::{Error, Result};

/// Composite Simpson rule on `[0, t_end]` with `m` equally spaced nodes (`m` odd, `m >= 3`).
#[derive(Debug, Clone)]
pub struct Simpson {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Simpson {
    pub fn new(t_end: f64, m: usize) -> Result<Self> {
        if m < 3 || m.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "Simpson rule needs an odd node count >= 3, got {m}"
            )));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid horizon {t_end}")));
        }
        let h = t_end / (m - 1) as f64;
        let nodes = (0..m).map(|i| i as f64 * h).collect();
        let weights = (0..m)
            .map(|i| {
                let c = if i == 0 || i == m - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        Ok(Self { nodes, weights })
    }

    /// Integrate a function sampled at the nodes.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, refined by Newton iteration on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on `[a, b]`, split at the given breakpoints and
/// subdivided so no panel is longer than `max_panel`.
pub fn composite_nodes(
    a: f64,
    b: f64,
    breakpoints: &[f64],
    max_panel: f64,
    rule: &GaussLegendre,
) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = vec![a, b];
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let panels = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
        let step = (hi - lo) / panels as f64;
        for p in 0..panels {
            let pa = lo + p as f64 * step;
            let pb = if p + 1 == panels { hi } else { pa + step };
            out.extend(rule.mapped(pa, pb));
        }
    }
    out
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let rule = Simpson::new(2.0, 5).unwrap();
        let v = rule.integrate(|t| t * t * t - t + 1.0);
        assert!((v - (4.0 - 2.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn simpson_rejects_even_counts() {
        assert!(Simpson::new(1.0, 4).is_err());
        assert!(Simpson::new(1.0, 1).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_high_degree_polynomials() {
        let rule = GaussLegendre::new(12);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 22 monomial: exact integral 2/23
        let v: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(22))
            .sum();
        assert!((v - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_handles_kinks() {
        let rule = GaussLegendre::new(8);
        let nodes = composite_nodes(-1.0, 2.0, &[0.3], 0.5, &rule);
        let v: f64 = nodes.iter().map(|(x, w)| w * (x - 0.3_f64).abs()).sum();
        let exact = 0.5 * 1.3 * 1.3 + 0.5 * 1.7 * 1.7;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn slope_of_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 2.0).collect();
        assert!((ls_slope(&xs, &ys).unwrap() - 0.5).abs() < 1e-14);
        assert!(ls_slope(&[1.0], &[1.0]).is_none());
    }
}
