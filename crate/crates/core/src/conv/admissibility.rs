//! Z^λ decay constants, the variation tail profile Φ and the five integrability
//! conditions required by the variation and oscillation bounds.
//!
//! Every improper integral is accumulated decade by decade. A run of shrinking
//! decade increments is read as convergence (and the geometric remainder added),
//! increments that stop shrinking as divergence.

use std::fmt;

use super::profile::Profile;
use crate::error::{domain, Result};
use crate::grid::{LambdaSpace, LogGrid};
use crate::special::{gauss_legendre, QuadratureRule};

/// Constants above this count as infinite in [`check_z_lambda`].
pub const Z_LAMBDA_CAP: f64 = 1e8;

/// Growth factor between the last two decades of the grid that marks a weighted
/// sup as unbounded.
const GROWTH_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ZLambdaReport {
    /// sup |φ|(1+x²)^{λ+1}, sup |φ′|(1+x²)^{λ+2}/x, sup |φ″|(1+x²)^{λ+2}.
    pub constants: [f64; 3],
    pub worst_x: [f64; 3],
    /// Violated conditions by roman numeral, with the worst x.
    pub violations: Vec<(&'static str, f64)>,
}

impl ZLambdaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ZLambdaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.constants;
        write!(f, "C_i={a:.4e} C_ii={b:.4e} C_iii={c:.4e} ")?;
        if self.passed() {
            write!(f, "PASS")
        } else {
            let names: Vec<String> = self
                .violations
                .iter()
                .map(|(n, x)| format!("({n}) at x={x:.4e}"))
                .collect();
            write!(f, "FAIL {}", names.join(", "))
        }
    }
}

/// The three Z^λ constants over the grid.
///
/// A condition fails when its sup exceeds [`Z_LAMBDA_CAP`] or when the weighted
/// quantity is still growing over the top decade of the grid.
pub fn check_z_lambda(space: &LambdaSpace, phi: &Profile, xgrid: &LogGrid) -> ZLambdaReport {
    let l = space.lambda();
    let nodes = xgrid.nodes();
    let quantities: [Box<dyn Fn(f64) -> f64>; 3] = [
        Box::new(|x: f64| phi.value(x).abs() * (1.0 + x * x).powf(l + 1.0)),
        Box::new(|x: f64| phi.d1(x).abs() * (1.0 + x * x).powf(l + 2.0) / x),
        Box::new(|x: f64| phi.d2(x).abs() * (1.0 + x * x).powf(l + 2.0)),
    ];
    let names = ["i", "ii", "iii"];
    let top = xgrid.x_max();
    let mut constants = [0.0; 3];
    let mut worst_x = [nodes[0]; 3];
    let mut violations = Vec::new();
    for (i, q) in quantities.iter().enumerate() {
        let mut last = 0.0f64;
        let mut prev = 0.0f64;
        let mut bad = false;
        for &x in nodes {
            let v = q(x);
            if !v.is_finite() {
                bad = true;
                worst_x[i] = x;
                constants[i] = f64::INFINITY;
                break;
            }
            if v > constants[i] {
                constants[i] = v;
                worst_x[i] = x;
            }
            if x > top / 10.0 {
                last = last.max(v);
            } else if x > top / 100.0 {
                prev = prev.max(v);
            }
        }
        let growing = prev > 0.0 && last > GROWTH_LIMIT * prev;
        if bad || constants[i] > Z_LAMBDA_CAP || growing {
            violations.push((names[i], worst_x[i]));
        }
    }
    ZLambdaReport {
        constants,
        worst_x,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finiteness {
    Finite,
    Divergent,
    Inconclusive,
}

impl fmt::Display for Finiteness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Finiteness::Finite => "finite",
            Finiteness::Divergent => "divergent",
            Finiteness::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    /// "a0", "a1", "a2", "b0", "b1", "c", "d", "e".
    pub name: String,
    /// Extrapolated integral, or |Φ| at the largest sample for "d".
    pub value: f64,
    pub finiteness: Finiteness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub conditions: Vec<Condition>,
}

impl AdmissibilityReport {
    pub fn all_finite(&self) -> bool {
        self.conditions.iter().all(|c| c.finiteness == Finiteness::Finite)
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(f, "({}) {:.6e} {}", c.name, c.value, c.finiteness)?;
        }
        Ok(())
    }
}

struct Rules {
    gl: QuadratureRule,
}

impl Rules {
    fn new() -> Self {
        Self {
            gl: gauss_legendre(8).expect("fixed-size rule"),
        }
    }

    fn on<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.gl.integrate(|u| f(mid + half * u))
    }

    /// ∫_a^b f over m equal panels in ln x.
    fn log_panels<F: Fn(f64) -> f64>(&self, a: f64, b: f64, m: usize, f: F) -> f64 {
        let (la, lb) = (a.ln(), b.ln());
        let w = (lb - la) / m as f64;
        (0..m)
            .map(|j| {
                let lo = la + j as f64 * w;
                self.on(lo, lo + w, |s| {
                    let x = s.exp();
                    f(x) * x
                })
            })
            .sum()
    }
}

/// Reads decade increments of a non-negative integrand.
fn classify(increments: &[f64]) -> (f64, Finiteness) {
    let total: f64 = increments.iter().sum();
    let n = increments.len();
    if !total.is_finite() {
        return (f64::INFINITY, Finiteness::Divergent);
    }
    if total == 0.0 || n < 3 {
        return (total, Finiteness::Finite);
    }
    let (dm, d0, d1) = (increments[n - 3], increments[n - 2], increments[n - 1]);
    if d1 <= 1e-12 * total {
        return (total, Finiteness::Finite);
    }
    let r1 = d1 / d0;
    let r0 = d0 / dm;
    if r1 >= 0.9 {
        (total, Finiteness::Divergent)
    } else if r0 < 0.9 {
        (total + d1 * r1 / (1.0 - r1), Finiteness::Finite)
    } else {
        (total, Finiteness::Inconclusive)
    }
}

fn phase_panels(k: f64, a: f64, b: f64) -> usize {
    ((k * (b - a) / 2.0).ceil() as usize).clamp(2, 100_000)
}

/// ∫_lo^∞ u^{λ−1} g(s + u) du for g a function of w = z² ≥ 0, with its finiteness.
fn shifted_moment<G: Fn(f64) -> f64>(rules: &Rules, l: f64, k: f64, g: &G, s: f64, lo: f64) -> (f64, Finiteness) {
    let floor = 1e-14 * s.max(1e-8);
    let mut acc = 0.0;
    let mut a = lo;
    if lo < floor {
        acc += (floor.powf(l) - lo.powf(l)) / l * g(s + 0.5 * (lo + floor));
        a = floor;
    }
    let mut increments = Vec::new();
    let reach = 1e3 * s.max(1.0);
    let mut small = 0;
    while a < 1e40 {
        let b = 4.0 * a;
        let m = if k > 0.0 {
            phase_panels(k, (s + a).sqrt(), (s + b).sqrt())
        } else {
            2
        };
        let d = rules.log_panels(a, b, m, |u| u.powf(l - 1.0) * g(s + u));
        acc += d;
        increments.push(d.abs());
        a = b;
        if a > reach && d.abs() <= 1e-16 * acc.abs() {
            small += 1;
            if small >= 2 {
                return (acc, Finiteness::Finite);
            }
        } else {
            small = 0;
        }
    }
    let (_, fin) = classify(&increments);
    (acc, fin)
}

/// u ↦ ∫_u^∞ v^{λ−1} g(s + v) dv for one shift s, tabulated at u = floor·2^i.
struct TailTable {
    lambda: f64,
    k: f64,
    s: f64,
    bounds: Vec<f64>,
    tails: Vec<f64>,
}

impl TailTable {
    fn new<G: Fn(f64) -> f64>(rules: &Rules, l: f64, k: f64, g: &G, s: f64) -> Self {
        let floor = 1e-14 * s.max(1e-8);
        let reach = 1e3 * s.max(1.0);
        let mut bounds = vec![floor];
        let mut pieces = Vec::new();
        let mut total = 0.0;
        let mut small = 0;
        let mut a = floor;
        while a < 1e40 && small < 3 {
            let b = 2.0 * a;
            let d = Self::piece(rules, l, k, g, s, a, b);
            total += d;
            pieces.push(d);
            bounds.push(b);
            if b > reach && d.abs() <= 1e-16 * total.abs() {
                small += 1;
            } else {
                small = 0;
            }
            a = b;
        }
        let mut tails = vec![0.0; bounds.len()];
        for i in (0..pieces.len()).rev() {
            tails[i] = tails[i + 1] + pieces[i];
        }
        Self {
            lambda: l,
            k,
            s,
            bounds,
            tails,
        }
    }

    fn piece<G: Fn(f64) -> f64>(rules: &Rules, l: f64, k: f64, g: &G, s: f64, a: f64, b: f64) -> f64 {
        let m = if k > 0.0 {
            phase_panels(k, (s + a).sqrt(), (s + b).sqrt())
        } else {
            1
        };
        rules.log_panels(a, b, m, |u| u.powf(l - 1.0) * g(s + u))
    }

    fn eval<G: Fn(f64) -> f64>(&self, rules: &Rules, g: &G, lo: f64) -> f64 {
        let last = self.bounds.len() - 1;
        if lo >= self.bounds[last] {
            return 0.0;
        }
        if lo <= self.bounds[0] {
            let floor = self.bounds[0];
            let head = (floor.powf(self.lambda) - lo.max(0.0).powf(self.lambda)) / self.lambda
                * g(self.s + 0.5 * (lo.max(0.0) + floor));
            return head + self.tails[0];
        }
        let i = ((lo / self.bounds[0]).log2().floor() as usize).min(last - 1);
        Self::piece(rules, self.lambda, self.k, g, self.s, lo, self.bounds[i + 1]) + self.tails[i + 1]
    }
}

/// Φ(z) = ∫_0^∞ u^{λ−1} φ(√(z² + u)) du and its z-derivative.
#[derive(Debug, Clone)]
pub struct TailProfile {
    lambda: f64,
    phi: Profile,
}

impl TailProfile {
    pub fn value(&self, z: f64) -> f64 {
        let rules = Rules::new();
        let phi = &self.phi;
        let g = |w: f64| phi.value(w.sqrt());
        shifted_moment(&rules, self.lambda, phi.wavenumber(), &g, z * z, 0.0).0
    }

    /// Φ′(z) = z ∫_0^∞ u^{λ−1} φ′(√(z²+u))/√(z²+u) du.
    pub fn derivative(&self, z: f64) -> f64 {
        if z == 0.0 {
            return 0.0;
        }
        let rules = Rules::new();
        let phi = &self.phi;
        let g = |w: f64| {
            let r = w.sqrt();
            phi.d1(r) / r
        };
        z * shifted_moment(&rules, self.lambda, phi.wavenumber(), &g, z * z, 0.0).0
    }
}

/// Φ for the variation bounds; errors when the defining integral diverges at z = 0.
pub fn variation_tail_profile(space: &LambdaSpace, phi: &Profile) -> Result<TailProfile> {
    let rules = Rules::new();
    let g = |w: f64| phi.value(w.sqrt()).abs();
    let (_, fin) = shifted_moment(&rules, space.lambda(), phi.wavenumber(), &g, 0.0, 0.0);
    if fin == Finiteness::Divergent {
        return Err(domain(format!(
            "profile {} decays too slowly for the tail integral",
            phi.label()
        )));
    }
    Ok(TailProfile {
        lambda: space.lambda(),
        phi: phi.clone(),
    })
}

const DECADES: std::ops::Range<i32> = -8..8;

fn decade_increments<F: Fn(f64) -> f64>(rules: &Rules, k: f64, decades: std::ops::Range<i32>, f: F) -> Vec<f64> {
    decades
        .map(|j| {
            let a = 10f64.powi(j);
            let b = 10.0 * a;
            let m = if k > 0.0 { phase_panels(k, a, b) } else { 4 };
            rules.log_panels(a, b, m, &f)
        })
        .collect()
}

/// The integrals (a) k=0,1,2, (b) k=0,1, (c), the limit (d) and the integral (e).
pub fn check_variation_admissible(space: &LambdaSpace, phi: &Profile) -> AdmissibilityReport {
    let rules = Rules::new();
    let l = space.lambda();
    let k = phi.wavenumber();
    // Oscillating integrands are cut four decades earlier to bound the cost.
    let top = if k > 0.0 { 4 } else { DECADES.end };
    let mut conditions = Vec::new();
    let mut push = |name: &str, (value, finiteness): (f64, Finiteness)| {
        conditions.push(Condition {
            name: name.to_string(),
            value,
            finiteness,
        })
    };

    let derivs: [&dyn Fn(f64) -> f64; 3] = [&|x| phi.value(x), &|x| phi.d1(x), &|x| phi.d2(x)];
    for (order, d) in derivs.iter().enumerate() {
        let inc = decade_increments(&rules, k, DECADES.start..top, |x| {
            d(x).abs() * x.powf(2.0 * l + order as f64)
        });
        push(&format!("a{order}"), classify(&inc));
    }

    for order in 0..2usize {
        let d = derivs[order];
        let g = |w: f64| d(w.sqrt()).abs() / w.powf(0.5 * order as f64);
        let inc: Vec<f64> = (DECADES.start..top)
            .map(|j| {
                let (sa, sb) = (10f64.powi(j), 10f64.powi(j + 1));
                let m = if k > 0.0 {
                    phase_panels(k, sa.sqrt(), sb.sqrt()).min(64)
                } else {
                    2
                };
                rules.log_panels(sa, sb, m, |s| {
                    let table = TailTable::new(&rules, l, k, &g, s);
                    let over_v = graded_around_one(&rules, |v| {
                        let lo = std::f64::consts::PI.powi(2) * v * s / (4.0 * (1.0 - v).powi(2));
                        v.powf(l) / (1.0 - v).abs() * table.eval(&rules, &g, lo)
                    });
                    s.powf(order as f64 - 0.5) * over_v
                })
            })
            .collect();
        push(&format!("b{order}"), classify(&inc));
    }

    {
        let g = |w: f64| {
            let r = w.sqrt();
            phi.d1(r).abs() / r
        };
        let inc = decade_increments(&rules, k, DECADES.start..top, |z| {
            z * z * shifted_moment(&rules, l, k, &g, z * z, 0.0).0
        });
        push("c", classify(&inc));
    }

    let tail = TailProfile {
        lambda: l,
        phi: phi.clone(),
    };
    {
        let samples: Vec<f64> = (0..=top).map(|j| tail.value(10f64.powi(j)).abs()).collect();
        let peak = samples.iter().cloned().fold(tail.value(0.0).abs(), f64::max);
        let n = samples.len();
        let (last, before) = (samples[n - 1], samples[n - 2]);
        let fin = if !last.is_finite() {
            Finiteness::Divergent
        } else if last <= 1e-6 * peak || (last < 0.9 * before && samples[n - 2] < 0.9 * samples[n - 3]) {
            Finiteness::Finite
        } else if last >= 0.9 * before {
            Finiteness::Divergent
        } else {
            Finiteness::Inconclusive
        };
        push("d", (last, fin));
    }

    {
        let inc = decade_increments(&rules, k, DECADES.start..top, |u| {
            tail.value(u).abs() + u * tail.derivative(u).abs()
        });
        push("e", classify(&inc));
    }

    AdmissibilityReport { conditions }
}

/// ∫_{1/2}^2 f(v) dv with panels shrinking geometrically toward v = 1.
fn graded_around_one<F: Fn(f64) -> f64>(rules: &Rules, f: F) -> f64 {
    let mut total = 0.0;
    for side in [-1.0f64, 1.0] {
        let mut outer = if side < 0.0 { 0.5 } else { 1.0 };
        for _ in 0..40 {
            let inner = 0.5 * outer;
            let (a, b) = (1.0 + side * outer, 1.0 + side * inner);
            let d = rules.on(a.min(b), a.max(b), &f);
            total += d;
            if d.abs() <= 1e-16 * total.abs() {
                break;
            }
            outer = inner;
        }
    }
    total
}
