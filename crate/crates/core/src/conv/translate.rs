//! Hankel translation τ_x(φ_t)(y) and the convolution f #_λ φ_t.
//!
//! With v = 1 − cos θ the translated argument is z(v) = √((x−y)² + 2xy·v) and
//! the angular weight is (v(2 − v))^{λ−1} on [0, 2]. When t is small against
//! √(xy) the integrand is concentrated in v ≲ δ = t·max(t, |x−y|)/(4xy), so
//! the v-range is split into a Gauss–Jacobi head on [0, δ], doubling
//! Gauss–Legendre panels up to 1, and a Gauss–Jacobi tail on [1, 2].

use std::sync::Arc;

use super::profile::{make_kernel, KernelFamily, Profile};
use crate::error::{parameter, Error, Result};
use crate::grid::{GridFunction, LambdaSpace, LogGrid};
use crate::hankel::convolution_constant;
use crate::special::{gauss_jacobi, gauss_jacobi_general, gauss_legendre, ln_gamma_unchecked, QuadratureRule};

/// Relative change under node doubling that `translate` accepts.
pub const TRANSLATE_TOLERANCE: f64 = 1e-7;

const MAX_SUBPANELS: usize = 512;

/// How grid samples are interpolated between nodes inside the y-integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Piecewise linear in ln y: second order, and f ≥ 0, φ ≥ 0 give f # φ_t ≥ 0.
    #[default]
    Linear,
    /// Four-point Lagrange in ln y: fourth order, without the positivity guarantee.
    Cubic,
}

/// Cached quadrature rules for one λ.
#[derive(Debug, Clone)]
pub struct Translator {
    space: LambdaSpace,
    norm: f64,
    head: QuadratureRule,
    tail: QuadratureRule,
    panel: QuadratureRule,
    full: QuadratureRule,
    y_panel: QuadratureRule,
}

impl Translator {
    /// Rules with `order` nodes per angular panel (the one-panel rule has 2·order).
    pub fn new(space: LambdaSpace, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(parameter("translation order must be at least 2"));
        }
        let l = space.lambda();
        let norm = (ln_gamma_unchecked(l + 0.5) - ln_gamma_unchecked(l) - 0.5 * std::f64::consts::PI.ln()).exp();
        Ok(Self {
            space,
            norm,
            head: gauss_jacobi_general(order, 0.0, l - 1.0)?,
            tail: gauss_jacobi_general(order, l - 1.0, 0.0)?,
            panel: gauss_legendre(order)?,
            full: gauss_jacobi(2 * order, l - 1.0)?,
            y_panel: gauss_legendre((order / 2).max(4))?,
        })
    }

    pub fn standard(space: LambdaSpace) -> Result<Self> {
        Self::new(space, 12)
    }

    pub fn space(&self) -> &LambdaSpace {
        &self.space
    }

    /// τ_x(φ_t)(y).
    pub fn tau(&self, phi: &Profile, t: f64, x: f64, y: f64) -> f64 {
        let l = self.space.lambda();
        let d = (x - y).abs();
        let p = 2.0 * x * y;
        let inv_t = 1.0 / t;
        let scale = self.norm * t.powf(-self.space.dim());
        if p == 0.0 {
            return scale * phi.value(d * inv_t);
        }
        let d2 = d * d;
        let g = |v: f64| phi.value((d2 + p * v).max(0.0).sqrt() * inv_t);
        let z = |v: f64| (d2 + p * v).sqrt();
        let k = phi.wavenumber();

        let delta = t * t.max(d) / (2.0 * p);
        if delta >= 1.0 {
            return scale * self.full.integrate(|u| g(1.0 - u));
        }

        // [0, δ]: v = δ(1+ξ)/2, v^{λ−1} dv = (δ/2)^λ (1+ξ)^{λ−1} dξ.
        let half = 0.5 * delta;
        let mut sum = half.powf(l)
            * self.head.integrate(|xi| {
                let v = half * (1.0 + xi);
                (2.0 - v).powf(l - 1.0) * g(v)
            });

        let mut lo = delta;
        while lo < 1.0 {
            let hi = (2.0 * lo).min(1.0);
            sum += self.panels(lo, hi, k * (z(hi) - z(lo)) * inv_t, |v| {
                (v * (2.0 - v)).powf(l - 1.0) * g(v)
            });
            lo = hi;
        }

        // [1, 2], split when the profile oscillates: uniform Gauss–Legendre panels
        // on [1, 2 − η] and a Gauss–Jacobi panel on [2 − η, 2].
        let phase = k * (z(2.0) - z(1.0)) * inv_t;
        let m = subpanel_count(phase);
        let eta = 1.0 / m as f64;
        if m > 1 {
            sum += self.panels(1.0, 2.0 - eta, phase * (1.0 - eta), |v| {
                (v * (2.0 - v)).powf(l - 1.0) * g(v)
            });
        }
        let a = 2.0 - eta;
        let hh = 0.5 * eta;
        sum += hh.powf(l)
            * self.tail.integrate(|xi| {
                let v = a + hh * (1.0 + xi);
                v.powf(l - 1.0) * g(v)
            });
        scale * sum
    }

    fn panels<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, phase: f64, f: F) -> f64 {
        let m = subpanel_count(phase);
        let w = (hi - lo) / m as f64;
        (0..m)
            .map(|j| {
                let a = lo + j as f64 * w;
                integrate_on(&self.panel, a, a + w, &f)
            })
            .sum()
    }

    /// Weights w_k with (f #_λ φ_t)(x) ≈ Σ w_k f(y_k), for f linear in ln y between
    /// nodes, equal to f(y_0) on (0, y_0) and zero above the last node.
    pub fn row_weights(&self, phi: &Profile, t: f64, x: f64, grid: &LogGrid) -> Vec<f64> {
        self.row_weights_with(phi, t, x, grid, Interpolation::Linear)
    }

    pub fn row_weights_with(&self, phi: &Profile, t: f64, x: f64, grid: &LogGrid, interp: Interpolation) -> Vec<f64> {
        let nodes = grid.nodes();
        let n = nodes.len();
        let dim = self.space.dim();
        let mut w = vec![0.0; n];
        let density = |y: f64| self.tau(phi, t, x, y) * y.powf(dim - 1.0);

        let breaks = breakpoints(x, t, nodes[0], nodes[n - 1]);
        let mut bi = 0;
        let cubic = interp == Interpolation::Cubic && n >= 4;

        // Head (0, y_0]: geometric panels down to y_0·2^{−40}, plus the remainder
        // integrated as τ(y_low)·y_low^{dim}/dim.
        let y0 = nodes[0];
        let mut head = 0.0;
        let mut hi = y0;
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b < y0).collect();
        let mut lo_geo = y0;
        for _ in 0..40 {
            lo_geo *= 0.5;
            cuts.push(lo_geo);
        }
        cuts.sort_by(|a, b| b.total_cmp(a));
        cuts.dedup();
        for &lo in &cuts {
            head += integrate_on(&self.y_panel, lo.ln(), hi.ln(), |s| {
                let y = s.exp();
                density(y) * y
            });
            hi = lo;
        }
        head += self.tau(phi, t, x, hi) * hi.powf(dim) / dim;
        w[0] += head;

        while bi < breaks.len() && breaks[bi] <= y0 {
            bi += 1;
        }
        for k in 0..n - 1 {
            let (a, b) = (nodes[k], nodes[k + 1]);
            let (sa, sb) = (a.ln(), b.ln());
            let h = sb - sa;
            let mut left = a;
            loop {
                let right = if bi < breaks.len() && breaks[bi] < b {
                    let r = breaks[bi];
                    bi += 1;
                    r
                } else {
                    b
                };
                let (pl, pr) = (left.ln(), right.ln());
                let half = 0.5 * (pr - pl);
                let mid = 0.5 * (pr + pl);
                for (&u, &wt) in self.y_panel.nodes.iter().zip(&self.y_panel.weights) {
                    let s = mid + half * u;
                    let y = s.exp();
                    let v = wt * half * density(y) * y;
                    if cubic {
                        let base = (k.max(1) - 1).min(n - 4);
                        let u = (s - nodes[base].ln()) / h;
                        w[base] -= v * (u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
                        w[base + 1] += v * u * (u - 2.0) * (u - 3.0) / 2.0;
                        w[base + 2] -= v * u * (u - 1.0) * (u - 3.0) / 2.0;
                        w[base + 3] += v * u * (u - 1.0) * (u - 2.0) / 6.0;
                    } else {
                        let up = (s - sa) / h;
                        w[k] += v * (1.0 - up);
                        w[k + 1] += v * up;
                    }
                }
                left = right;
                if right >= b {
                    break;
                }
            }
        }
        w
    }

    /// ∫_0^∞ f_s(y) τ_x(φ_t)(y) y^{2λ} dy for two profiles. At order 24 this is
    /// accurate to a few units in the last place for the smooth families.
    pub fn convolve_profiles(&self, f: &Profile, s: f64, phi: &Profile, t: f64, x: f64) -> f64 {
        let dim = self.space.dim();
        let integrand = |y: f64| f.dilated(&self.space, s, y) * self.tau(phi, t, x, y) * y.powf(dim - 1.0);
        let low = x.min(t).min(s) * 1e-6;
        let mut cuts = vec![low];
        for r in [t, s] {
            let mut step = r / 8.0;
            while step < 1e5 * (x + t + s) {
                for c in [x - step, x + step, step] {
                    if c > low {
                        cuts.push(c);
                    }
                }
                step *= 2.0;
            }
        }
        cuts.push(x);
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * *b);
        let mut total = low.powf(dim) / dim * f.dilated(&self.space, s, low) * self.tau(phi, t, x, low);
        for pair in cuts.windows(2) {
            total += integrate_on(&self.panel, pair[0].ln(), pair[1].ln(), |u| {
                let y = u.exp();
                integrand(y) * y
            });
        }
        total
    }
}

fn subpanel_count(phase: f64) -> usize {
    ((phase.abs() / 2.0).ceil() as usize).clamp(1, MAX_SUBPANELS)
}

fn integrate_on<F: Fn(f64) -> f64>(rule: &QuadratureRule, a: f64, b: f64, f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    half * rule.integrate(|u| f(mid + half * u))
}

/// Sorted cut points x ± t·2^j (j ≥ −2) inside (0, y_max).
fn breakpoints(x: f64, t: f64, y_min: f64, y_max: f64) -> Vec<f64> {
    let mut out = vec![x];
    let mut r = 0.25 * t;
    let reach = (x - y_min * 1e-12).max(y_max - x);
    while r < reach {
        if x - r > 0.0 {
            out.push(x - r);
        }
        if x + r < y_max {
            out.push(x + r);
        }
        r *= 2.0;
    }
    out.retain(|&b| b > 0.0 && b < y_max);
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

/// τ_x(φ_t) sampled on `ygrid`, rejecting results that move by more than
/// [`TRANSLATE_TOLERANCE`] when the angular nodes are doubled.
pub fn translate(space: &LambdaSpace, phi: &Profile, t: f64, x: f64, ygrid: Arc<LogGrid>) -> Result<GridFunction> {
    check_scale(t)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(parameter(format!("translation centre must be positive, got {x}")));
    }
    let coarse = Translator::standard(*space)?;
    let fine = Translator::new(*space, 24)?;
    let mut values = Vec::with_capacity(ygrid.len());
    for &y in ygrid.nodes() {
        let a = coarse.tau(phi, t, x, y);
        let b = fine.tau(phi, t, x, y);
        let peak = phi.value(0.0).abs().max(f64::MIN_POSITIVE) * t.powf(-space.dim());
        if (a - b).abs() > TRANSLATE_TOLERANCE * b.abs().max(1e-12 * peak) {
            return Err(Error::Resolution(format!(
                "translation of {} unresolved at x={x}, y={y}, t={t}: {a} vs {b}",
                phi.label()
            )));
        }
        values.push(b);
    }
    GridFunction::new(ygrid, values)
}

/// (f #_λ φ_t) on f's grid, with linear interpolation of f.
pub fn convolve(space: &LambdaSpace, f: &GridFunction, phi: &Profile, t: f64) -> Result<GridFunction> {
    convolve_with(space, f, phi, t, Interpolation::Linear)
}

pub fn convolve_with(
    space: &LambdaSpace,
    f: &GridFunction,
    phi: &Profile,
    t: f64,
    interp: Interpolation,
) -> Result<GridFunction> {
    check_scale(t)?;
    let tr = Translator::standard(*space)?;
    let grid = f.grid().clone();
    let vals = f.values();
    let peak = f.max_abs();
    if let Some(&last) = vals.last() {
        if last.abs() > 1e-6 * peak {
            log::warn!("convolve: input is {last:e} at the upper grid end and is truncated there");
        }
    }
    let out: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| {
            let w = tr.row_weights_with(phi, t, x, &grid, interp);
            w.iter().zip(vals).map(|(a, b)| a * b).sum()
        })
        .collect();
    GridFunction::new(grid, out)
}

/// The Bochner–Riesz mean h_λ((1 − y²/t²)_+^α h_λ f), realised as (1/c_λ) f #_λ φ^{λ,α}_{1/t}.
pub fn bochner_riesz(space: &LambdaSpace, f: &GridFunction, alpha: f64, t: f64) -> Result<GridFunction> {
    check_scale(t)?;
    let phi = make_kernel(space, &KernelFamily::BochnerRiesz(alpha))?;
    let c = convolution_constant(space);
    convolve_with(space, f, &phi, 1.0 / t, Interpolation::Cubic)?.map(|_, v| v / c)
}

fn check_scale(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(parameter(format!("dilation scale must be positive, got {t}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn space(l: f64) -> LambdaSpace {
        LambdaSpace::new(l).unwrap()
    }

    #[test]
    fn constant_translates_to_one() {
        let one = Profile::custom("one", |_| 1.0, |_| 0.0, |_| 0.0);
        for l in [0.3, 1.0, 2.5] {
            let tr = Translator::standard(space(l)).unwrap();
            for &(x, y) in &[(1.0, 1.0), (0.01, 50.0), (3.0, 3.001), (1e3, 2e-3)] {
                assert_relative_eq!(tr.tau(&one, 1.0, x, y), 1.0, max_relative = 1e-12);
                assert_relative_eq!(
                    tr.tau(&one, 1e-4, x, y),
                    1e4f64.powf(2.0 * l + 1.0),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn lambda_one_matches_reference() {
        // λ = 1: τ_x(g)(y) = ½∫_{−1}^1 g(√(x²+y²−2xyu)) du, from 30-digit adaptive quadrature.
        let s = space(1.0);
        let tr = Translator::standard(s).unwrap();
        let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
        let table = [
            (1.0, 0.7, 1.9, 0.067_244_779_065_360_551_261),
            (0.05, 2.0, 2.1, 0.302_926_880_531_791_108_69),
            (0.3, 5.0, 0.2, 0.000_608_703_707_295_451_098_07),
        ];
        for (t, x, y, want) in table {
            assert_relative_eq!(tr.tau(&p, t, x, y), want, max_relative = 1e-11);
        }
    }

    #[test]
    fn translation_is_symmetric() {
        let s = space(0.6);
        let tr = Translator::standard(s).unwrap();
        let w = make_kernel(&s, &KernelFamily::Heat).unwrap();
        for &(x, y) in &[(0.5, 2.0), (1.0, 1.3), (10.0, 0.1)] {
            assert_relative_eq!(tr.tau(&w, 0.7, x, y), tr.tau(&w, 0.7, y, x), max_relative = 1e-13);
        }
    }

    #[test]
    fn translate_rejects_bad_input() {
        let s = space(1.0);
        let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
        let g = Arc::new(LogGrid::new(0.1, 10.0, 16).unwrap());
        assert!(translate(&s, &p, 0.0, 1.0, g.clone()).is_err());
        assert!(translate(&s, &p, 1.0, -1.0, g.clone()).is_err());
        assert!(translate(&s, &p, 0.5, 1.0, g).is_ok());
    }

    #[test]
    fn heat_semigroup_by_profile_convolution() {
        for l in [0.6, 1.0, 2.0] {
            let s = space(l);
            let tr = Translator::new(s, 24).unwrap();
            let w = make_kernel(&s, &KernelFamily::Heat).unwrap();
            for &x in &[0.05, 0.8, 2.5] {
                let got = tr.convolve_profiles(&w, 0.6, &w, 0.8, x);
                let want = w.dilated(&s, 1.0, x);
                assert_relative_eq!(got, want, max_relative = 1e-13);
            }
        }
    }
}
