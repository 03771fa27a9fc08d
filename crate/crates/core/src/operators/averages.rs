//! Ball averages and Hardy means under the grid model of f: linear in ln y between nodes,
//! constant f(y_0) on (0, y_0), zero above the last node.

use log::warn;

use crate::error::Result;
use crate::grid::{GridFunction, LambdaSpace};

/// ∫_{s}^{s+len} (p + q u) e^{d(s+u)} du with u measured from s.
fn segment(p: f64, q: f64, s: f64, len: f64, d: f64) -> f64 {
    let x = d * len;
    let em1 = x.exp_m1();
    let first = p * em1 / d;
    let second = q * (x * (x.exp()) - em1) / (d * d);
    (d * s).exp() * (first + second)
}

/// As [`segment`], of |p + q u| when `absolute`.
fn piece(p: f64, q: f64, s: f64, len: f64, d: f64, absolute: bool) -> f64 {
    if !absolute {
        return segment(p, q, s, len, d);
    }
    let end = p + q * len;
    if p * end >= 0.0 {
        let sign = if p + end >= 0.0 { 1.0 } else { -1.0 };
        return sign * segment(p, q, s, len, d);
    }
    let u0 = -p / q;
    let sign = p.signum();
    sign * segment(p, q, s, u0, d) - sign * segment(0.0, q, s + u0, len - u0, d)
}

/// ∫_lo^hi (f − shift) dm_λ, or of |f − shift|, under the grid model of f.
pub(crate) fn model_integral(
    space: &LambdaSpace,
    f: &GridFunction,
    shift: f64,
    absolute: bool,
    lo: f64,
    hi: f64,
) -> f64 {
    let d = space.dim();
    let nodes = f.nodes();
    let v = f.values();
    let n = nodes.len();
    let flat = |c: f64, a: f64, b: f64| {
        let c = if absolute { c.abs() } else { c };
        c * (b.powf(d) - a.powf(d)) / d
    };
    let mut total = 0.0;
    if lo < nodes[0] {
        total += flat(v[0] - shift, lo.max(0.0), hi.min(nodes[0]));
    }
    if hi > nodes[n - 1] {
        total += flat(-shift, lo.max(nodes[n - 1]), hi);
    }
    let h = f.grid().log_step();
    let first = nodes.partition_point(|&x| x <= lo).saturating_sub(1);
    for k in first..n - 1 {
        let (a, b) = (nodes[k].max(lo), nodes[k + 1].min(hi));
        if a >= hi {
            break;
        }
        if b <= a {
            continue;
        }
        let q = (v[k + 1] - v[k]) / h;
        let u = (a / nodes[k]).ln();
        total += piece(v[k] - shift + q * u, q, a.ln(), (b / a).ln(), d, absolute);
    }
    total
}

/// Cumulative integrals C(y) = ∫_0^y g(u) u^{2λ} du of the grid model of g or |g|.
pub(crate) struct Cumulative<'a> {
    f: &'a GridFunction,
    dim: f64,
    absolute: bool,
    at_nodes: Vec<f64>,
}

impl<'a> Cumulative<'a> {
    pub(crate) fn new(space: &LambdaSpace, f: &'a GridFunction, absolute: bool) -> Self {
        let dim = space.dim();
        let nodes = f.nodes();
        let v = f.values();
        let head = if absolute { v[0].abs() } else { v[0] };
        let mut at_nodes = Vec::with_capacity(nodes.len());
        let mut acc = head * nodes[0].powf(dim) / dim;
        at_nodes.push(acc);
        let mut me = Self {
            f,
            dim,
            absolute,
            at_nodes: Vec::new(),
        };
        for k in 0..nodes.len() - 1 {
            acc += me.cell(k, f.grid().log_step());
            at_nodes.push(acc);
        }
        me.at_nodes = at_nodes;
        me
    }

    /// Integral over the first `len` (in ln y) of cell k.
    fn cell(&self, k: usize, len: f64) -> f64 {
        let h = self.f.grid().log_step();
        let (a, b) = (self.f.values()[k], self.f.values()[k + 1]);
        piece(a, (b - a) / h, self.f.nodes()[k].ln(), len, self.dim, self.absolute)
    }

    pub(crate) fn at(&self, y: f64) -> f64 {
        let nodes = self.f.nodes();
        let n = nodes.len();
        if y <= 0.0 {
            return 0.0;
        }
        if y <= nodes[0] {
            let v = self.f.values()[0];
            let v = if self.absolute { v.abs() } else { v };
            return v * y.powf(self.dim) / self.dim;
        }
        if y >= nodes[n - 1] {
            return self.at_nodes[n - 1];
        }
        let k = nodes.partition_point(|&x| x <= y) - 1;
        self.at_nodes[k] + self.cell(k, (y / nodes[k]).ln())
    }

    pub(crate) fn node(&self, k: usize) -> f64 {
        self.at_nodes[k]
    }
}

/// Lower and upper bounds for M_λ f on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HlMaximal {
    /// Maximum of exact ball averages over the radii |x_i − y_k| and the limit r → 0.
    pub lower: GridFunction,
    /// Bound valid for every r > 0: between consecutive candidate radii a < b the
    /// average is at most ∫_{B(x,b)}|f| / m_λ(B(x,a)).
    pub upper: GridFunction,
}

/// M_λ f(x) = sup_r m_λ(B(x,r))^{−1} ∫_{B(x,r)} |f| dm_λ.
pub fn hl_maximal(space: &LambdaSpace, f: &GridFunction) -> Result<HlMaximal> {
    let cum = Cumulative::new(space, f, true);
    let nodes = f.nodes();
    let n = nodes.len();
    let d = space.dim();
    let ball_measure = |x: f64, r: f64| ((x + r).powf(d) - (x - r).max(0.0).powf(d)) / d;
    let ball_integral = |x: f64, r: f64| cum.at(x + r) - cum.at((x - r).max(0.0));
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();

    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    for (i, &x) in nodes.iter().enumerate() {
        radii.clear();
        radii.extend(nodes.iter().map(|&y| (y - x).abs()).filter(|&r| r > 0.0));
        radii.push(x);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        // r ≤ first radius: the ball lies in the cells next to x_i.
        let local = abs[i].max(abs[i.saturating_sub(1)]).max(abs[(i + 1).min(n - 1)]);
        let mut lo = abs[i];
        let mut hi = local;
        let mut prev_measure = 0.0;
        for &r in &radii {
            let m = ball_measure(x, r);
            let integral = ball_integral(x, r);
            lo = lo.max(integral / m);
            if prev_measure > 0.0 {
                hi = hi.max(integral / prev_measure);
            }
            prev_measure = m;
        }
        // Beyond the largest radius the integral is constant and the measure grows.
        hi = hi.max(lo);
        lower.push(lo);
        upper.push(hi);
    }
    Ok(HlMaximal {
        lower: GridFunction::new(f.grid().clone(), lower)?,
        upper: GridFunction::new(f.grid().clone(), upper)?,
    })
}

/// H_0 g(x) = x^{−2λ−1} ∫_0^x g dm_λ and H_∞ g(x) = ∫_x^∞ g(y) dy/y.
pub fn hardy_operators(space: &LambdaSpace, f: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    let nodes = f.nodes();
    let n = nodes.len();
    let d = space.dim();
    let cum = Cumulative::new(space, f, false);
    let h0: Vec<f64> = (0..n).map(|k| cum.node(k) / nodes[k].powf(d)).collect();

    // ∫ g ds, trapezoid in s = ln y, accumulated from the top.
    let h = f.grid().log_step();
    let v = f.values();
    let mut hinf = vec![0.0; n];
    for k in (0..n - 1).rev() {
        hinf[k] = hinf[k + 1] + 0.5 * h * (v[k] + v[k + 1]);
    }
    let peak = f.max_abs();
    if peak > 0.0 && v[n - 1].abs() > 1e-6 * peak {
        warn!("H_inf: input does not vanish at the top of the grid; the tail above it is dropped");
    }
    Ok((
        GridFunction::new(f.grid().clone(), h0)?,
        GridFunction::new(f.grid().clone(), hinf)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LogGrid;
    use std::sync::Arc;

    fn grid(lo: f64, hi: f64, ppd: usize) -> Arc<LogGrid> {
        Arc::new(LogGrid::new(lo, hi, ppd).unwrap())
    }

    #[test]
    fn cumulative_of_power_is_exact() {
        let s = LambdaSpace::new(1.0).unwrap();
        let g = grid(0.01, 10.0, 16);
        let f = GridFunction::from_fn(g.clone(), |y| 2.0 + y.ln()).unwrap();
        let c = Cumulative::new(&s, &f, false);
        let exact = |y: f64| y.powi(3) * (2.0 + y.ln()) / 3.0 - y.powi(3) / 9.0;
        let head = |y: f64| f.values()[0] * y.powi(3) / 3.0;
        let y0 = g.x_min();
        for y in [0.05, 0.7, 3.3, 10.0] {
            let want = head(y0) + exact(y) - exact(y0);
            assert!((c.at(y) - want).abs() < 1e-12 * want.abs().max(1.0), "{y}");
        }
    }

    #[test]
    fn absolute_cumulative_splits_at_sign_changes() {
        let s = LambdaSpace::new(0.5).unwrap();
        let g = grid(0.1, 10.0, 16);
        let f = GridFunction::from_fn(g.clone(), |y| y.ln()).unwrap();
        let c = Cumulative::new(&s, &f, true);
        // ∫ |ln y| y dy, antiderivative y²ln y/2 − y²/4.
        let a = |y: f64| y * y * y.ln() / 2.0 - y * y / 4.0;
        let want = f.values()[0].abs() * 0.01 / 2.0 + (a(1.0) - a(0.1)).abs() + (a(10.0) - a(1.0));
        assert!((c.at(10.0) - want).abs() < 1e-10 * want);
        let direct = model_integral(&s, &f, 0.0, true, 0.0, 10.0);
        assert!((direct - want).abs() < 1e-10 * want);
        let part = model_integral(&s, &f, 0.3, true, 0.5, 3.0);
        let want: f64 = {
            // |ln y − 0.3| y on [0.5, 3], split at e^{0.3}.
            let g = |y: f64| y * y * (y.ln() - 0.3) / 2.0 - y * y / 4.0;
            let z = 0.3f64.exp();
            (g(z) - g(0.5)).abs() + (g(3.0) - g(z))
        };
        assert!((part - want).abs() < 1e-10 * want, "{part} vs {want}");
    }

    #[test]
    fn constant_has_maximal_one() {
        let s = LambdaSpace::new(1.3).unwrap();
        let f = GridFunction::from_fn(grid(1e-3, 1e3, 16), |_| 1.0).unwrap();
        let m = hl_maximal(&s, &f).unwrap();
        assert!(m.lower.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(m.upper.values().iter().zip(m.lower.values()).all(|(u, l)| u >= l));
    }

    #[test]
    fn indicator_far_away() {
        let s = LambdaSpace::new(1.0).unwrap();
        let g = grid(0.01, 20.0, 256);
        let f = GridFunction::from_fn(g.clone(), |y| if (1.0..=2.0).contains(&y) { 1.0 } else { 0.0 }).unwrap();
        let m = hl_maximal(&s, &f).unwrap();
        let i = g.nodes().partition_point(|&x| x < 4.0);
        let x = g.nodes()[i];
        let cum = Cumulative::new(&s, &f, true);
        let mut scan = 0.0f64;
        for k in 1..=20000 {
            let r = 8.0 * k as f64 / 20000.0;
            let m = ((x + r).powi(3) - (x - r).max(0.0).powi(3)) / 3.0;
            scan = scan.max((cum.at(x + r) - cum.at((x - r).max(0.0))) / m);
        }
        let (lo, hi) = (m.lower.values()[i], m.upper.values()[i]);
        assert!(lo <= scan * (1.0 + 1e-12) && scan <= hi, "{lo} {scan} {hi}");
        assert!(lo > scan * (1.0 - 1e-4) && hi < 1.02 * scan, "{lo} {scan} {hi}");
    }

    #[test]
    fn hardy_closed_forms() {
        let s = LambdaSpace::new(0.7).unwrap();
        let g = grid(1e-4, 1e2, 64);
        let one = GridFunction::from_fn(g.clone(), |_| 1.0).unwrap();
        let (h0, _) = hardy_operators(&s, &one).unwrap();
        assert!(h0.values().iter().all(|&v| (v - 1.0 / s.dim()).abs() < 1e-12));

        let eps = 0.4;
        let pow = GridFunction::from_fn(g.clone(), |y| y.powf(-eps)).unwrap();
        let (h0, _) = hardy_operators(&s, &pow).unwrap();
        for (&x, &v) in g.nodes().iter().zip(h0.values()).filter(|(&x, _)| x > 1e-2) {
            let want = x.powf(-eps) / (s.dim() - eps);
            assert!((v / want - 1.0).abs() < 1e-4, "{x}: {v} vs {want}");
        }

        let big_x = 5.0;
        let step = GridFunction::from_fn(g.clone(), |y| if y <= big_x { 1.0 } else { 0.0 }).unwrap();
        let (_, hinf) = hardy_operators(&s, &step).unwrap();
        for (&x, &v) in g.nodes().iter().zip(hinf.values()).filter(|(&x, _)| x < 4.0) {
            assert!((v - (big_x / x).ln()).abs() < g.log_step(), "{x}");
        }
    }
}
