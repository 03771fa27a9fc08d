//! Geometric grids on (0, ∞), the measure x^{2λ}dx and grid-sampled functions.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{domain, parameter, Error, Result};

/// The parameter λ > 0 of the measure m_λ = x^{2λ}dx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSpace {
    lambda: f64,
}

impl LambdaSpace {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(parameter(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Bessel order ν = λ − 1/2 of the transform kernel.
    pub fn nu(&self) -> f64 {
        self.lambda - 0.5
    }

    /// Homogeneous dimension 2λ + 1.
    pub fn dim(&self) -> f64 {
        2.0 * self.lambda + 1.0
    }

    /// m_λ(I) in closed form.
    pub fn measure(&self, iv: Interval) -> f64 {
        let q = self.dim();
        (iv.right.powf(q) - iv.left.powf(q)) / q
    }

    /// m_λ((0, r)).
    pub fn measure_to(&self, r: f64) -> f64 {
        r.powf(self.dim()) / self.dim()
    }
}

/// A non-empty interval [left, right) ⊂ [0, ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub left: f64,
    pub right: f64,
}

impl Interval {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(left >= 0.0) || !(right > left) || !right.is_finite() {
            return Err(domain(format!("invalid interval ({left}, {right})")));
        }
        Ok(Self { left, right })
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left <= x && x < self.right
    }

    /// Same center, `factor` times the radius, truncated at 0.
    pub fn dilate(&self, factor: f64) -> Interval {
        let c = 0.5 * (self.left + self.right);
        let r = 0.5 * factor * self.length();
        Interval {
            left: (c - r).max(0.0),
            right: c + r,
        }
    }
}

/// B(x, r) = (x − r, x + r) ∩ (0, ∞); `None` for r = 0.
pub fn ball(x: f64, r: f64) -> Option<Interval> {
    (r > 0.0).then(|| Interval {
        left: (x - r).max(0.0),
        right: x + r,
    })
}

/// Geometric grid x_i = x_min · e^{i h}, i = 0..n−1, with x_{n−1} = x_max.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    x_min: f64,
    x_max: f64,
    points_per_decade: usize,
    log_step: f64,
    nodes: Vec<f64>,
}

pub const MIN_POINTS_PER_DECADE: usize = 16;

impl LogGrid {
    pub fn new(x_min: f64, x_max: f64, points_per_decade: usize) -> Result<Self> {
        if !(x_min > 0.0) || !(x_max > x_min) || !x_max.is_finite() {
            return Err(parameter(format!("invalid grid span [{x_min}, {x_max}]")));
        }
        if points_per_decade < MIN_POINTS_PER_DECADE {
            return Err(parameter(format!(
                "points_per_decade must be at least {MIN_POINTS_PER_DECADE}, got {points_per_decade}"
            )));
        }
        let decades = (x_max / x_min).log10();
        let intervals = ((decades * points_per_decade as f64).round() as usize).max(1);
        let log_step = (x_max / x_min).ln() / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|i| x_min * (i as f64 * log_step).exp()).collect();
        nodes[0] = x_min;
        nodes[intervals] = x_max;
        Ok(Self {
            x_min,
            x_max,
            points_per_decade,
            log_step,
            nodes,
        })
    }

    /// Rebuild a grid from explicit nodes (e.g. read back from CSV), keeping them bit-exact.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(parameter("a grid needs at least two nodes"));
        }
        if !(nodes[0] > 0.0) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(parameter("grid nodes must be positive and strictly increasing"));
        }
        let n = nodes.len();
        let log_step = (nodes[n - 1] / nodes[0]).ln() / (n - 1) as f64;
        for (i, w) in nodes.windows(2).enumerate() {
            let step = (w[1] / w[0]).ln();
            if (step - log_step).abs() > 1e-9 * log_step.max(1e-300) {
                return Err(parameter(format!("grid nodes are not geometric at index {i}")));
            }
        }
        let ppd = (std::f64::consts::LN_10 / log_step).round() as usize;
        Ok(Self {
            x_min: nodes[0],
            x_max: nodes[n - 1],
            points_per_decade: ppd,
            log_step,
            nodes,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn points_per_decade(&self) -> usize {
        self.points_per_decade
    }

    /// Constant spacing in ln x.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid weights for ∫ g(x) dx = ∫ g(x) x d(ln x).
    pub fn dx_weights(&self) -> Vec<f64> {
        let n = self.nodes.len();
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let w = self.log_step * x;
                if i == 0 || i == n - 1 {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect()
    }

    /// Trapezoid weights for ∫ g dm_λ.
    pub fn measure_weights(&self, space: &LambdaSpace) -> Vec<f64> {
        let e = 2.0 * space.lambda();
        self.dx_weights()
            .into_iter()
            .zip(&self.nodes)
            .map(|(w, &x)| w * x.powf(e))
            .collect()
    }

    /// Index range of nodes inside [left, right).
    pub fn index_range(&self, iv: Interval) -> std::ops::Range<usize> {
        let lo = self.nodes.partition_point(|&x| x < iv.left);
        let hi = self.nodes.partition_point(|&x| x < iv.right);
        lo..hi
    }

    /// Same span with `factor` times the density.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, self.points_per_decade * factor)
    }
}

/// Real samples of a function on a [`LogGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<LogGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<LogGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: Arc<LogGrid>, f: F) -> Result<Self> {
        let values = grid.nodes().iter().copied().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<LogGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<LogGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn map<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> Result<Self> {
        let values = self.nodes().iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn zip_with<F: FnMut(f64, f64) -> f64>(&self, other: &GridFunction, mut f: F) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("functions live on different grids".into()))
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ∫ f dm_λ by log-trapezoid quadrature over the grid span.
    pub fn integrate(&self, space: &LambdaSpace) -> f64 {
        self.grid
            .measure_weights(space)
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Linear interpolation in ln x; zero outside the span.
    pub fn interpolate(&self, x: f64) -> f64 {
        let nodes = self.nodes();
        if x < nodes[0] || x > nodes[nodes.len() - 1] {
            return 0.0;
        }
        let k = nodes.partition_point(|&n| n <= x);
        if k == 0 {
            return self.values[0];
        }
        if k >= nodes.len() {
            return self.values[nodes.len() - 1];
        }
        let s = (x / nodes[k - 1]).ln() / self.grid.log_step();
        self.values[k - 1] * (1.0 - s) + self.values[k] * s
    }

    /// Two-column CSV with a `# lambda=<v>` header; floats use shortest round-trip form.
    pub fn write_csv<W: Write>(&self, space: &LambdaSpace, mut out: W) -> Result<()> {
        let mut buf = String::with_capacity(32 * self.values.len());
        writeln!(buf, "# lambda={}", space.lambda()).ok();
        buf.push_str("x,value\n");
        for (x, v) in self.nodes().iter().zip(&self.values) {
            writeln!(buf, "{x:?},{v:?}").ok();
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<(LambdaSpace, GridFunction)> {
        let mut lambda = None;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line == "x,value" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("lambda=") {
                    lambda = Some(parse_f64(v, lineno)?);
                }
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected two columns", lineno + 1)))?;
            xs.push(parse_f64(a, lineno)?);
            vs.push(parse_f64(b, lineno)?);
        }
        let lambda = lambda.ok_or_else(|| Error::Parse("missing '# lambda=' header".into()))?;
        let space = LambdaSpace::new(lambda)?;
        let grid = Arc::new(LogGrid::from_nodes(xs)?);
        Ok((space, GridFunction::new(grid, vs)?))
    }
}

fn parse_f64(s: &str, lineno: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", lineno + 1)))
}

/// A norm together with an estimate of the mass lost by truncating (0, ∞) to the grid span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub tail: f64,
}

/// ‖f‖_{L^p(w x^{2λ}dx)} by log-trapezoid quadrature; p = ∞ gives max |f|.
pub fn lp_norm(space: &LambdaSpace, f: &GridFunction, p: f64, w: Option<&GridFunction>) -> Result<NormEstimate> {
    if !(p >= 1.0) {
        return Err(domain(format!("lp_norm needs p >= 1, got {p}")));
    }
    if let Some(w) = w {
        f.check_same_grid(w)?;
    }
    if p.is_infinite() {
        return Ok(NormEstimate {
            value: f.max_abs(),
            tail: 0.0,
        });
    }
    let weight_at = |i: usize| w.map_or(1.0, |w| w.values[i]);
    let mw = f.grid.measure_weights(space);
    let mut sum = 0.0;
    for (i, (&v, &m)) in f.values.iter().zip(&mw).enumerate() {
        sum += m * v.abs().powf(p) * weight_at(i);
    }
    // Flat extrapolation below x_min, and the edge density times the edge scale above x_max.
    let n = f.values.len();
    let nodes = f.nodes();
    let e = 2.0 * space.lambda();
    let low = f.values[0].abs().powf(p) * weight_at(0) * nodes[0].powf(e + 1.0) / (e + 1.0);
    let high = f.values[n - 1].abs().powf(p) * weight_at(n - 1) * nodes[n - 1].powf(e + 1.0);
    let value = sum.powf(1.0 / p);
    let tail = (sum + low + high).powf(1.0 / p) - value;
    Ok(NormEstimate { value, tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn measure_closed_forms() {
        let s1 = LambdaSpace::new(1.0).unwrap();
        assert_relative_eq!(
            s1.measure(Interval::new(0.0, 1.0).unwrap()),
            1.0 / 3.0,
            max_relative = 1e-15
        );
        let s = LambdaSpace::new(0.5).unwrap();
        assert_relative_eq!(s.measure(Interval::new(0.0, 3.0).unwrap()), 4.5, max_relative = 1e-15);
        let s2 = LambdaSpace::new(2.0).unwrap();
        assert_relative_eq!(
            s2.measure(Interval::new(1.0, 2.0).unwrap()),
            31.0 / 5.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn balls() {
        assert_eq!(ball(1.0, 0.5), Some(Interval { left: 0.5, right: 1.5 }));
        assert_eq!(ball(1.0, 2.0), Some(Interval { left: 0.0, right: 3.0 }));
        assert_eq!(ball(3.0, 0.0), None);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LambdaSpace::new(0.0).is_err());
        assert!(LambdaSpace::new(-1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(LogGrid::new(1.0, 10.0, 8).is_err());
        assert!(LogGrid::new(0.0, 10.0, 32).is_err());
    }

    #[test]
    fn grid_endpoints_and_ratio() {
        let g = LogGrid::new(1e-3, 1e3, 64).unwrap();
        assert_eq!(g.len(), 6 * 64 + 1);
        assert_eq!(g.nodes()[0], 1e-3);
        assert_eq!(*g.nodes().last().unwrap(), 1e3);
        let r0 = g.nodes()[1] / g.nodes()[0];
        for w in g.nodes().windows(2) {
            assert_relative_eq!(w[1] / w[0], r0, max_relative = 1e-12);
        }
    }

    #[test]
    fn lp_norm_of_constant_is_ball_measure() {
        let space = LambdaSpace::new(1.0).unwrap();
        let g = Arc::new(LogGrid::new(1e-4, 1.0, 256).unwrap());
        let f = GridFunction::from_fn(g, |_| 1.0).unwrap();
        let n = lp_norm(&space, &f, 1.0, None).unwrap();
        assert!((n.value - 1.0 / 3.0).abs() < 1e-4);
        assert!(lp_norm(&space, &f, 0.5, None).is_err());
    }

    #[test]
    fn lp_norm_zero_and_sup() {
        let space = LambdaSpace::new(1.0).unwrap();
        let g = Arc::new(LogGrid::new(1e-2, 1e2, 32).unwrap());
        let z = GridFunction::zeros(g.clone());
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(lp_norm(&space, &z, p, None).unwrap().value, 0.0);
        }
        let f = GridFunction::from_fn(g, |x| (-x).exp() * x).unwrap();
        let sup = lp_norm(&space, &f, f64::INFINITY, None).unwrap().value;
        assert!((sup - (-1.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let space = LambdaSpace::new(0.6).unwrap();
        let g = Arc::new(LogGrid::new(1e-3, 1e3, 64).unwrap());
        let f = GridFunction::from_fn(g, |x| (-x * x).exp() / 3.0 + x.ln() * 1e-17).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&space, &mut buf).unwrap();
        let (s2, f2) = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(s2, space);
        assert_eq!(f2.nodes(), f.nodes());
        assert_eq!(f2.values(), f.values());
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(GridFunction::read_csv("x,value\n1,2\n2,3\n".as_bytes()).is_err());
        assert!(GridFunction::read_csv("# lambda=1\n1;2\n".as_bytes()).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let g = Arc::new(LogGrid::new(1e-2, 1e2, 16).unwrap());
        let f = GridFunction::from_fn(g, |x| x.ln()).unwrap();
        for (&x, &v) in f.nodes().iter().zip(f.values()) {
            assert_relative_eq!(f.interpolate(x), v, epsilon = 1e-12);
        }
        // ln x is linear in ln x, so interpolation is exact between nodes.
        assert_relative_eq!(f.interpolate(3.3), 3.3f64.ln(), epsilon = 1e-12);
        assert_eq!(f.interpolate(1e3), 0.0);
    }
}
