//! The Hankel transform h_λ f(x) = ∫_0^∞ (xy)^{−ν} J_ν(xy) f(y) y^{2λ} dy, ν = λ − 1/2,
//! multipliers of Δ_λ built from it, and Δ_λ itself by finite differences.
//!
//! The transform is a direct log-trapezoid sum. Two corrections make it usable
//! for slowly decaying inputs: the interval (0, y_min) is treated as carrying the
//! constant f(y_min), and a power-law tail A y^{−s} fitted on the last nodes is
//! integrated exactly against the kernel beyond y_max.

use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LambdaSpace, LogGrid};
use crate::special::{gauss_legendre, j_scaled_unchecked, ln_gamma_unchecked, QuadratureRule};

/// Diagnostics relative to the sup of the result.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransformDiagnostics {
    /// Size of the uncorrected part of the truncated tail.
    pub tail: f64,
    /// Size of the power-law tail correction that was applied.
    pub tail_correction: f64,
    /// Half the gap between the even-node and odd-node half-resolution sums.
    pub resolution: f64,
}

impl TransformDiagnostics {
    fn merge(self, other: Self) -> Self {
        Self {
            tail: self.tail.max(other.tail),
            tail_correction: self.tail_correction.max(other.tail_correction),
            resolution: self.resolution.max(other.resolution),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transformed {
    pub function: GridFunction,
    pub diagnostics: TransformDiagnostics,
}

pub const WARN_THRESHOLD: f64 = 1e-6;

/// c_λ = 2^{λ−1/2} Γ(λ+1/2), the constant in h_λ(f #_λ g) = c_λ h_λ(f) h_λ(g).
pub fn convolution_constant(space: &LambdaSpace) -> f64 {
    let l = space.lambda();
    ((l - 0.5) * std::f64::consts::LN_2 + ln_gamma_unchecked(l + 0.5)).exp()
}

/// h_λ f sampled on `out_grid`.
pub fn hankel_transform(space: &LambdaSpace, f: &GridFunction, out_grid: Arc<LogGrid>) -> Result<Transformed> {
    let kernel = Kernel::new(space);
    let grid = f.grid();
    let fv = f.values();
    let ys = grid.nodes();
    let n = ys.len();
    let h = grid.log_step();
    let e = 2.0 * space.lambda();
    let dim = space.dim();
    let dx = grid.dx_weights();
    let wf: Vec<f64> = (0..n).map(|i| dx[i] * ys[i].powf(e) * fv[i]).collect();
    let wf_half: Vec<f64> = (0..n).map(|i| 2.0 * h * ys[i].powf(e + 1.0) * fv[i]).collect();
    let low_mass = fv[0] * ys[0].powf(dim) / dim;
    let tail = PowerTail::fit(space, grid, fv);

    let xs = out_grid.nodes();
    let mut out = Vec::with_capacity(xs.len());
    let mut resolution = 0.0f64;
    let mut corrections = 0.0f64;
    for &x in xs {
        let (mut full, mut even, mut odd) = (0.0, 0.0, 0.0);
        let mut head = [0.0; 3];
        let mut last = [0.0; 3];
        for i in 0..n {
            let k = kernel.eval(x * ys[i]);
            full += wf[i] * k;
            if i % 2 == 0 {
                even += wf_half[i] * k;
            } else {
                odd += wf_half[i] * k;
            }
            // Integrand in s = ln y, kept at both ends for the end correction.
            if i < 3 {
                head[i] = 0.5 * wf_half[i] / h * k;
            }
            if i + 3 >= n {
                last[i + 3 - n] = 0.5 * wf_half[i] / h * k;
            }
        }
        // Euler–Maclaurin: trapezoid − h²/12 (g'(b) − g'(a)), with one-sided g'. Only
        // meaningful while the kernel is resolved at the cut (≳ 12 nodes per period).
        let dg_start = (-3.0 * head[0] + 4.0 * head[1] - head[2]) / (2.0 * h);
        let dg_end = if x * ys[n - 1] * h < 0.5 {
            (3.0 * last[2] - 4.0 * last[1] + last[0]) / (2.0 * h)
        } else {
            0.0
        };
        full -= h * h / 12.0 * (dg_end - dg_start);
        full += low_mass * kernel.eval(x * ys[0]);
        let corr = tail.as_ref().map_or(0.0, |t| t.contribution(&kernel, x));
        corrections = corrections.max(corr.abs());
        resolution = resolution.max(0.5 * (even - odd).abs());
        out.push(full + corr);
    }
    let scale = out.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let uncorrected_tail = if tail.is_some() {
        0.0
    } else {
        // Edge value spread over one e-fold beyond the span, against the kernel's peak.
        fv[n - 1].abs() * ys[n - 1].powf(dim) * kernel.eval(0.0).abs()
    };
    let diagnostics = TransformDiagnostics {
        tail: uncorrected_tail / scale,
        tail_correction: corrections / scale,
        resolution: resolution / scale,
    };
    if diagnostics.tail > WARN_THRESHOLD {
        warn!(
            "hankel transform: truncated tail is {:.2e} of the result",
            diagnostics.tail
        );
    }
    if diagnostics.resolution > WARN_THRESHOLD {
        warn!(
            "hankel transform: half-resolution disagreement {:.2e}; input grid too coarse for the output span",
            diagnostics.resolution
        );
    }
    Ok(Transformed {
        function: GridFunction::new(out_grid, out)?,
        diagnostics,
    })
}

/// T_m(Δ_λ) f = h_λ(m(y²) h_λ f), with both transforms sampled on f's grid.
pub fn spectral_multiplier<M: Fn(f64) -> f64>(space: &LambdaSpace, m: M, f: &GridFunction) -> Result<Transformed> {
    let first = hankel_transform(space, f, f.grid().clone())?;
    let multiplied = first.function.map(|y, v| m(y * y) * v)?;
    let second = hankel_transform(space, &multiplied, f.grid().clone())?;
    Ok(Transformed {
        function: second.function,
        diagnostics: first.diagnostics.merge(second.diagnostics),
    })
}

/// z ↦ z^{−ν} J_ν(z).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    nu: f64,
}

impl Kernel {
    pub(crate) fn new(space: &LambdaSpace) -> Self {
        Self { nu: space.nu() }
    }

    #[inline]
    pub(crate) fn eval(&self, z: f64) -> f64 {
        j_scaled_unchecked(self.nu, z)
    }
}

/// f(y) ≈ A y^{−s} (1 + β y^{−2}) beyond the last node.
///
/// s and β come from the local log-slopes σ(y) = s + 2β/y² at y_max and y_max/2; the
/// slope at y_max/4 must agree with the model, otherwise no tail is assumed.
#[derive(Debug, Clone)]
struct PowerTail {
    amplitude: f64,
    slope: f64,
    beta: f64,
    y_end: f64,
    lambda: f64,
    rule: QuadratureRule,
}

impl PowerTail {
    fn fit(space: &LambdaSpace, grid: &LogGrid, fv: &[f64]) -> Option<Self> {
        let n = fv.len();
        let h = grid.log_step();
        let quarter = (std::f64::consts::LN_2 / h).round() as usize;
        if quarter == 0 || n < 2 * quarter + 2 {
            return None;
        }
        let ys = grid.nodes();
        let sign = fv[n - 1].signum();
        if fv[n - 1 - 2 * quarter - 1..]
            .iter()
            .any(|&v| v == 0.0 || v.signum() != sign)
        {
            return None;
        }
        // Log-slope between nodes i and i+1, located at their geometric midpoint.
        let sigma = |i: usize| (-(fv[i + 1] / fv[i]).ln() / h, (ys[i] * ys[i + 1]).sqrt());
        let (s_far, y_far) = sigma(n - 2);
        let (s_mid, y_mid) = sigma(n - 2 - quarter);
        let (s_near, y_near) = sigma(n - 2 - 2 * quarter);
        let span = 1.0 / (y_mid * y_mid) - 1.0 / (y_far * y_far);
        let beta = 0.5 * (s_mid - s_far) / span;
        let slope = s_far - 2.0 * beta / (y_far * y_far);
        let predicted = slope + 2.0 * beta / (y_near * y_near);
        if !((predicted - s_near).abs() <= 1e-3 * slope.abs()) || !(slope > space.dim()) {
            return None;
        }
        let y_end = grid.x_max();
        if !((beta / (y_end * y_end)).abs() < 0.1) {
            return None;
        }
        Some(Self {
            amplitude: fv[n - 1] * y_end.powf(slope) / (1.0 + beta / (y_end * y_end)),
            slope,
            beta,
            y_end,
            lambda: space.lambda(),
            rule: gauss_legendre(10).ok()?,
        })
    }

    /// ∫_Y^∞ A y^{−s}(1 + β y^{−2}) K(xy) y^{2λ} dy, rescaled to u = xy.
    fn contribution(&self, kernel: &Kernel, x: f64) -> f64 {
        let a = x * self.y_end;
        let e = self.slope - 2.0 * self.lambda - 1.0;
        let q = 2.0 * self.lambda - self.slope;
        let lead = x.powf(e) * self.power_moment(kernel, q, a);
        let next = if self.beta == 0.0 {
            0.0
        } else {
            self.beta * x.powf(e + 2.0) * self.power_moment(kernel, q - 2.0, a)
        };
        self.amplitude * (lead + next)
    }

    /// ∫_a^∞ u^q K(u) du: geometric panels up to 1, then panels of length π,
    /// averaging the last two partial sums to cancel the leading oscillatory remainder.
    fn power_moment(&self, kernel: &Kernel, q: f64, a: f64) -> f64 {
        let g = |u: f64| u.powf(q) * kernel.eval(u);
        let mut total = 0.0;
        let mut lo = a;
        while lo < 1.0 {
            let hi = (2.0 * lo).min(1.0);
            total += panel(&self.rule, lo, hi, g);
            lo = hi;
        }
        let period = std::f64::consts::PI;
        let panels = 200;
        let mut prev = total;
        for _ in 0..panels {
            prev = total;
            total += panel(&self.rule, lo, lo + period, g);
            lo += period;
        }
        0.5 * (prev + total)
    }
}

fn panel<G: Fn(f64) -> f64>(rule: &QuadratureRule, lo: f64, hi: f64, g: G) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    half * rule.integrate(|u| g(mid + half * u))
}

/// Δ_λ f = −f'' − (2λ/x) f' on the grid.
#[derive(Debug, Clone)]
pub struct BesselOperatorOutput {
    pub function: GridFunction,
    /// Nodes evaluated with one-sided stencils.
    pub unreliable: Vec<usize>,
}

/// Δ_λ f = −(f_ss + (2λ−1) f_s)/x² in s = ln x, with fourth-order central differences
/// in the interior and second-order one-sided stencils on the two outer nodes of each side.
pub fn apply_bessel_operator(space: &LambdaSpace, f: &GridFunction) -> Result<BesselOperatorOutput> {
    let v = f.values();
    let n = v.len();
    if n < 5 {
        return Err(Error::Parameter("apply_bessel_operator needs at least 5 nodes".into()));
    }
    let h = f.grid().log_step();
    let xs = f.nodes();
    let c = 2.0 * space.lambda() - 1.0;
    let mut out = vec![0.0; n];
    let mut unreliable = Vec::new();
    for i in 0..n {
        let (fs, fss) = if i >= 2 && i + 2 < n {
            (
                (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h),
                (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2]) / (12.0 * h * h),
            )
        } else {
            unreliable.push(i);
            let (a, b, c3, d) = if i < 2 {
                (v[i], v[i + 1], v[i + 2], v[i + 3])
            } else {
                (v[i], v[i - 1], v[i - 2], v[i - 3])
            };
            let dir = if i < 2 { 1.0 } else { -1.0 };
            (
                dir * (-3.0 * a + 4.0 * b - c3) / (2.0 * h),
                (2.0 * a - 5.0 * b + 4.0 * c3 - d) / (h * h),
            )
        };
        out[i] = -(fss + c * fs) / (xs[i] * xs[i]);
    }
    Ok(BesselOperatorOutput {
        function: GridFunction::new(f.grid().clone(), out)?,
        unreliable,
    })
}
