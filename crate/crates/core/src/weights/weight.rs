//! Weights, the A_p^λ characteristic and the weighted BMO norm.

use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{domain, parameter, Result};
use crate::grid::{GridFunction, Interval, LambdaSpace, LogGrid};
use crate::operators::averages::model_integral;

/// Default number of lattice endpoints in an interval family.
pub const MAX_ENDPOINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// w(x) = x^β, integrated in closed form on (0, ∞).
    Power(f64),
    /// The grid model of the samples.
    Sampled,
}

/// A positive weight on (0, ∞).
pub struct Weight {
    kind: Kind,
    values: GridFunction,
    cached_ap: Mutex<Vec<(f64, ApEstimate)>>,
}

impl Clone for Weight {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind,
            values: self.values.clone(),
            cached_ap: Mutex::new(self.cached_ap.lock().map(|c| c.clone()).unwrap_or_default()),
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Power(b) => write!(f, "Weight(x^{b})"),
            Kind::Sampled => write!(f, "Weight(sampled, {} nodes)", self.values.values().len()),
        }
    }
}

impl Weight {
    pub fn power(grid: Arc<LogGrid>, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(parameter(format!("power weight exponent must be finite, got {beta}")));
        }
        let values = GridFunction::from_fn(grid, |x| x.powf(beta))?;
        Self::build(Kind::Power(beta), values)
    }

    pub fn constant(grid: Arc<LogGrid>) -> Self {
        Self::power(grid, 0.0).expect("x^0 is a valid weight")
    }

    pub fn sampled(values: GridFunction) -> Result<Self> {
        Self::build(Kind::Sampled, values)
    }

    fn build(kind: Kind, values: GridFunction) -> Result<Self> {
        if let Some(v) = values.values().iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(domain(format!("weights must be positive and finite, found {v}")));
        }
        Ok(Self {
            kind,
            values,
            cached_ap: Mutex::new(Vec::new()),
        })
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn grid(&self) -> &Arc<LogGrid> {
        self.values.grid()
    }

    /// β for power weights.
    pub fn exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Power(b) => Some(b),
            Kind::Sampled => None,
        }
    }

    /// w^e.
    pub fn powf(&self, e: f64) -> Result<Weight> {
        match self.kind {
            Kind::Power(b) => Weight::power(self.grid().clone(), b * e),
            Kind::Sampled => Weight::sampled(self.values.map(|_, v| v.powf(e))?),
        }
    }

    /// (w_1 / w_2)^e.
    pub fn ratio_power(w1: &Weight, w2: &Weight, e: f64) -> Result<Weight> {
        match (w1.kind, w2.kind) {
            (Kind::Power(a), Kind::Power(b)) => Weight::power(w1.grid().clone(), (a - b) * e),
            _ => Weight::sampled(w1.values.zip_with(&w2.values, |a, b| (a / b).powf(e))?),
        }
    }

    /// w_λ(I) = ∫_I w dm_λ.
    pub fn integral(&self, space: &LambdaSpace, iv: Interval) -> f64 {
        self.moment(space, 1.0).integral(iv)
    }

    fn moment(&self, space: &LambdaSpace, e: f64) -> Moment {
        match self.kind {
            Kind::Power(b) => Moment::Power { q: b * e + space.dim() },
            Kind::Sampled => Moment::Sampled {
                space: *space,
                values: self.values.map(|_, v| v.powf(e)).expect("positive samples"),
            },
        }
    }

    /// [w]_{A_p^λ} over the default interval family of the weight's grid; p = 1 uses
    /// the grid minimum over I in place of the essential infimum.
    pub fn ap(&self, space: &LambdaSpace, p: f64) -> Result<ApEstimate> {
        if let Ok(cache) = self.cached_ap.lock() {
            if let Some((_, est)) = cache.iter().find(|(q, _)| *q == p) {
                return Ok(est.clone());
            }
        }
        let est = ap_characteristic(space, self, p)?;
        if let Ok(mut cache) = self.cached_ap.lock() {
            cache.push((p, est.clone()));
        }
        Ok(est)
    }
}

enum Moment {
    Power { q: f64 },
    Sampled { space: LambdaSpace, values: GridFunction },
}

impl Moment {
    /// ∫_I w^e dm_λ.
    fn integral(&self, iv: Interval) -> f64 {
        match self {
            Moment::Power { q } => power_integral(*q, iv.left, iv.right),
            Moment::Sampled { space, values } => model_integral(space, values, 0.0, false, iv.left, iv.right),
        }
    }
}

/// ∫_a^b x^{q−1} dx, infinite when it diverges at 0.
fn power_integral(q: f64, a: f64, b: f64) -> f64 {
    if q.abs() < 1e-14 {
        return if a > 0.0 { (b / a).ln() } else { f64::INFINITY };
    }
    if a == 0.0 {
        return if q > 0.0 { b.powf(q) / q } else { f64::INFINITY };
    }
    (b.powf(q) - a.powf(q)) / q
}

/// Interval endpoints: 0 and at most `max` grid nodes (always the first and last).
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFamily {
    endpoints: Vec<f64>,
}

impl IntervalFamily {
    pub fn for_grid(grid: &LogGrid, max: usize) -> Self {
        Self::within(grid, grid.x_min(), grid.x_max(), max)
    }

    /// Endpoints restricted to [lo, hi], together with 0.
    pub fn within(grid: &LogGrid, lo: f64, hi: f64, max: usize) -> Self {
        let nodes: Vec<f64> = grid.nodes().iter().copied().filter(|&x| x >= lo && x <= hi).collect();
        let max = max.max(2);
        let mut endpoints = vec![0.0];
        if nodes.len() <= max {
            endpoints.extend(&nodes);
        } else {
            let step = (nodes.len() - 1) as f64 / (max - 1) as f64;
            endpoints.extend((0..max).map(|k| nodes[((k as f64 * step).round() as usize).min(nodes.len() - 1)]));
        }
        endpoints.dedup();
        Self { endpoints }
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    /// Every other positive endpoint.
    pub fn coarsened(&self) -> Self {
        let mut endpoints = vec![0.0];
        let pos = &self.endpoints[1..];
        endpoints.extend(pos.iter().step_by(2));
        if pos.len() % 2 == 0 {
            if let Some(&last) = pos.last() {
                endpoints.push(last);
            }
        }
        Self { endpoints }
    }

    pub fn intervals(&self) -> impl Iterator<Item = Interval> + '_ {
        let e = &self.endpoints;
        (0..e.len()).flat_map(move |i| {
            (i + 1..e.len()).map(move |j| Interval {
                left: e[i],
                right: e[j],
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApEstimate {
    pub p: f64,
    /// Maximum of the A_p product over the family; a lower bound for the characteristic.
    pub value: f64,
    pub argmax: Interval,
    /// The product keeps growing as the left endpoint of (ε, b) goes to 0.
    pub divergent: bool,
    /// The coarsened family gives the same value to 1e-3.
    pub stable: bool,
}

impl fmt::Display for ApEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[w]_A{} >= {:.6e} on [{:.4e}, {:.4e}){}{}",
            self.p,
            self.value,
            self.argmax.left,
            self.argmax.right,
            if self.divergent { " divergent" } else { "" },
            if self.stable { "" } else { " unstable" }
        )
    }
}

struct ApProduct<'a> {
    space: LambdaSpace,
    p: f64,
    w: Moment,
    dual: Option<Moment>,
    weight: &'a Weight,
}

impl ApProduct<'_> {
    fn at(&self, iv: Interval) -> f64 {
        let m = self.space.measure(iv);
        let avg = self.w.integral(iv) / m;
        match &self.dual {
            Some(d) => avg * (d.integral(iv) / m).powf(self.p - 1.0),
            None => avg / self.weight.infimum(iv),
        }
    }
}

impl Weight {
    /// min of w over I: closed form for power weights, grid minimum otherwise.
    fn infimum(&self, iv: Interval) -> f64 {
        match self.kind {
            Kind::Power(b) => {
                if b > 0.0 {
                    iv.left.powf(b)
                } else {
                    iv.right.powf(b)
                }
            }
            Kind::Sampled => {
                let g = self.grid();
                let ends = [iv.left.max(g.x_min()), iv.right.min(g.x_max())];
                let mut m = ends
                    .iter()
                    .map(|&x| self.values.interpolate(x))
                    .fold(f64::INFINITY, f64::min);
                for k in self.grid().index_range(iv) {
                    m = m.min(self.values.values()[k]);
                }
                m
            }
        }
    }
}

fn max_over(family: &IntervalFamily, f: impl Fn(Interval) -> f64) -> (f64, Interval) {
    let mut best = (f64::NEG_INFINITY, Interval { left: 0.0, right: 1.0 });
    for iv in family.intervals() {
        let v = f(iv);
        if v > best.0 || v.is_nan() {
            best = (if v.is_nan() { f64::INFINITY } else { v }, iv);
            if best.0.is_infinite() {
                break;
            }
        }
    }
    best
}

/// Increments of a sequence computed as the left end of (ε_k, b) goes to 0: divergent when
/// they stop shrinking geometrically.
fn grows(values: &[f64]) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return true;
    }
    if values.len() < 3 {
        return false;
    }
    let n = values.len();
    let d1 = values[n - 2] - values[n - 3];
    let d2 = values[n - 1] - values[n - 2];
    d2 > 1e-9 * values[n - 1].abs() && d1 > 0.0 && d2 >= 0.9 * d1
}

/// [w]_{A_p^λ} = sup_I ⟨w⟩_I ⟨w^{−1/(p−1)}⟩_I^{p−1} over the interval family of the weight's grid.
pub fn ap_characteristic(space: &LambdaSpace, w: &Weight, p: f64) -> Result<ApEstimate> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(parameter(format!("A_p needs 1 <= p < inf, got {p}")));
    }
    let product = ApProduct {
        space: *space,
        p,
        w: w.moment(space, 1.0),
        dual: (p > 1.0).then(|| w.moment(space, -1.0 / (p - 1.0))),
        weight: w,
    };
    let family = IntervalFamily::for_grid(w.grid(), MAX_ENDPOINTS);
    let (value, argmax) = max_over(&family, |iv| product.at(iv));
    let (coarse, _) = max_over(&family.coarsened(), |iv| product.at(iv));

    let top = w.grid().x_max();
    let floor = match w.kind {
        Kind::Power(_) => 0.0,
        Kind::Sampled => w.grid().x_min(),
    };
    let chain: Vec<f64> = (1..=6)
        .map(|k| top * 10f64.powi(-2 * k))
        .take_while(|&e| e >= floor)
        .map(|e| product.at(Interval { left: e, right: top }))
        .collect();
    let divergent = !value.is_finite() || grows(&chain);
    let stable = value.is_finite() && (value - coarse).abs() <= 1e-3 * value;
    Ok(ApEstimate {
        p,
        value,
        argmax,
        divergent,
        stable,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BmoEstimate {
    pub value: f64,
    pub argmax: Interval,
    /// The norm more than doubles when the family is widened by a decade at each end.
    pub divergent: bool,
}

/// sup_I w_λ(I)^{−1} ∫_I |b − b_I| dm_λ, with b_I the m_λ-average of b over I.
pub fn bmo_norm(space: &LambdaSpace, b: &GridFunction, w: &Weight) -> Result<BmoEstimate> {
    b.check_same_grid(w.values())?;
    let grid = b.grid();
    let oscillation = |iv: Interval| {
        let m = space.measure(iv);
        let mean = model_integral(space, b, 0.0, false, iv.left, iv.right) / m;
        model_integral(space, b, mean, true, iv.left, iv.right) / w.integral(space, iv)
    };
    let max = MAX_ENDPOINTS / 2;
    let (value, argmax) = max_over(&IntervalFamily::for_grid(grid, max), oscillation);
    let inner = IntervalFamily::within(grid, 10.0 * grid.x_min(), 0.1 * grid.x_max(), max);
    let divergent = if inner.endpoints().len() > 2 {
        let (v, _) = max_over(&inner, oscillation);
        value > 2.0 * v
    } else {
        false
    };
    Ok(BmoEstimate {
        value,
        argmax,
        divergent,
    })
}

/// The A_p product of one interval, for checks outside the family scan.
pub fn ap_product(space: &LambdaSpace, w: &Weight, p: f64, iv: Interval) -> f64 {
    ApProduct {
        space: *space,
        p,
        w: w.moment(space, 1.0),
        dual: (p > 1.0).then(|| w.moment(space, -1.0 / (p - 1.0))),
        weight: w,
    }
    .at(iv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<LogGrid> {
        Arc::new(LogGrid::new(1e-3, 1e3, 16).unwrap())
    }

    #[test]
    fn unit_weight_has_characteristic_one() {
        let s = LambdaSpace::new(1.0).unwrap();
        let w = Weight::constant(grid());
        for p in [1.0, 1.5, 2.0, 3.0] {
            let a = w.ap(&s, p).unwrap();
            assert_eq!(a.value, 1.0, "p={p}");
            assert!(!a.divergent && a.stable);
        }
    }

    #[test]
    fn sampled_constant_matches() {
        let s = LambdaSpace::new(0.6).unwrap();
        let w = Weight::sampled(GridFunction::from_fn(grid(), |_| 2.5).unwrap()).unwrap();
        let a = w.ap(&s, 2.0).unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_weight_range() {
        let s = LambdaSpace::new(1.0).unwrap();
        let p = 2.0;
        for (beta, div) in [
            (1.0, false),
            (-2.5, false),
            (2.9, false),
            (3.0, true),
            (3.5, true),
            (-3.0, true),
            (-4.0, true),
        ] {
            let a = Weight::power(grid(), beta).unwrap().ap(&s, p).unwrap();
            assert_eq!(a.divergent, div, "beta={beta}: {a}");
        }
    }

    #[test]
    fn power_weight_sup_is_anchored_at_zero() {
        // ⟨x⟩_{(0,r)} ⟨x^{-1}⟩_{(0,r)} = (3/4)(3/2) = 9/8 for λ = 1.
        let s = LambdaSpace::new(1.0).unwrap();
        let a = Weight::power(grid(), 1.0).unwrap().ap(&s, 2.0).unwrap();
        assert!((a.value - 9.0 / 8.0).abs() < 1e-12, "{a}");
        assert_eq!(a.argmax.left, 0.0);
    }

    #[test]
    fn bmo_of_constant_and_log() {
        let s = LambdaSpace::new(1.0).unwrap();
        let g = grid();
        let w = Weight::constant(g.clone());
        let c = GridFunction::from_fn(g.clone(), |_| 4.0).unwrap();
        assert!(bmo_norm(&s, &c, &w).unwrap().value < 1e-12);
        let log = GridFunction::from_fn(g.clone(), |y| y.ln()).unwrap();
        let b = bmo_norm(&s, &log, &w).unwrap();
        assert!(b.value > 0.1 && !b.divergent, "{b:?}");
        let lin = GridFunction::from_fn(g, |y| y).unwrap();
        assert!(bmo_norm(&s, &lin, &w).unwrap().divergent);
    }

    #[test]
    fn family_shape() {
        let f = IntervalFamily::for_grid(&grid(), 200);
        assert_eq!(f.endpoints().len(), 98);
        let small = IntervalFamily::for_grid(&LogGrid::new(1e-3, 1e3, 64).unwrap(), 50);
        assert_eq!(small.endpoints().len(), 51);
        assert_eq!(small.endpoints()[1], 1e-3);
        assert_eq!(*small.endpoints().last().unwrap(), 1e3);
        assert_eq!(f.intervals().count(), 98 * 97 / 2);
    }
}
