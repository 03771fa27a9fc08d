//! Size, smoothness and variation bounds for the kernel G_t(x, y) = τ_x(φ_t)(y):
//! sup over an off-diagonal sample of
//!   ‖G(x,y)‖_{L²(dt/t)} · m_λ(B(x,|x−y|)),
//!   ‖∂_x G(x,y)‖_{L²(dt/t)} · |x−y| · m_λ(B(x,|x−y|)),  and the same for ∂_y,
//!   ‖{G_t(x,y)}_t‖_{v_ρ} · m_λ(B(x,|x−y|)).

use std::fmt;

use super::reduce::rho_variation_row;
use crate::conv::{Profile, Translator};
use crate::error::{parameter, Result};
use crate::grid::LambdaSpace;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSample {
    /// Sample points are geometric in [x_min, x_max]; all ordered pairs x ≠ y are used.
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    /// t runs over [|x−y|·10^{−decades_below}, (x+y)·10^{decades_above}].
    pub decades_below: f64,
    pub decades_above: f64,
    pub t_points_per_decade: usize,
    pub rho: f64,
}

impl Default for KernelSample {
    fn default() -> Self {
        Self {
            x_min: 0.05,
            x_max: 20.0,
            points: 40,
            decades_below: 2.0,
            decades_above: 3.0,
            t_points_per_decade: 16,
            rho: 3.0,
        }
    }
}

impl KernelSample {
    /// One more decade of t at each end and twice the t density.
    pub fn refined(&self) -> Self {
        Self {
            decades_below: self.decades_below + 1.0,
            decades_above: self.decades_above + 1.0,
            t_points_per_decade: 2 * self.t_points_per_decade,
            ..self.clone()
        }
    }

    fn xs(&self) -> Vec<f64> {
        let n = self.points;
        let r = (self.x_max / self.x_min).ln() / (n - 1) as f64;
        (0..n).map(|k| self.x_min * (k as f64 * r).exp()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupProduct {
    pub value: f64,
    pub x: f64,
    pub y: f64,
}

impl SupProduct {
    fn update(&mut self, v: f64, x: f64, y: f64) {
        if !(v <= self.value) {
            *self = Self { value: v, x, y };
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBounds {
    pub label: String,
    pub size: SupProduct,
    pub dx: SupProduct,
    pub dy: SupProduct,
    pub variation: SupProduct,
}

impl KernelBounds {
    pub fn products(&self) -> [(&'static str, SupProduct); 4] {
        [
            ("size", self.size),
            ("dx", self.dx),
            ("dy", self.dy),
            ("variation", self.variation),
        ]
    }

    /// Largest relative change of the four products against another run.
    pub fn max_change(&self, other: &KernelBounds) -> f64 {
        self.products()
            .iter()
            .zip(other.products().iter())
            .map(|((_, a), (_, b))| {
                if a.value.is_finite() && b.value.is_finite() {
                    (a.value - b.value).abs() / a.value.abs().max(b.value.abs()).max(f64::MIN_POSITIVE)
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for KernelBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.label)?;
        for (name, p) in self.products() {
            write!(f, " {name}={:.6e} at ({:.4}, {:.4})", p.value, p.x, p.y)?;
        }
        Ok(())
    }
}

pub fn kernel_bounds(space: &LambdaSpace, phi: &Profile, sample: &KernelSample) -> Result<KernelBounds> {
    if sample.points < 2 || !(sample.x_min > 0.0) || !(sample.x_max > sample.x_min) {
        return Err(parameter("kernel sample needs at least two points in a positive range"));
    }
    if sample.t_points_per_decade < 4 {
        return Err(parameter("kernel sample needs at least 4 t points per decade"));
    }
    rho_variation_row(&[0.0, 0.0], sample.rho)?;
    let tr = Translator::standard(*space)?;
    let d = space.dim();
    let xs = sample.xs();
    let empty = SupProduct {
        value: 0.0,
        x: 0.0,
        y: 0.0,
    };
    let mut out = KernelBounds {
        label: phi.label().to_string(),
        size: empty,
        dx: empty,
        dy: empty,
        variation: empty,
    };
    let mut g = Vec::new();
    for &x in &xs {
        for &y in &xs {
            if x == y {
                continue;
            }
            let r = (x - y).abs();
            let ball = ((x + r).powf(d) - (x - r).max(0.0).powf(d)) / d;
            let h = 1e-4 * r.min(x).min(y);
            let lo = (r * 10f64.powf(-sample.decades_below)).ln();
            let hi = ((x + y) * 10f64.powf(sample.decades_above)).ln();
            let n = ((hi - lo) / std::f64::consts::LN_10 * sample.t_points_per_decade as f64).ceil() as usize;
            let step = (hi - lo) / n as f64;
            let (mut size, mut dx, mut dy) = (0.0, 0.0, 0.0);
            g.clear();
            for k in 0..=n {
                let t = (hi - k as f64 * step).exp();
                let w = if k == 0 || k == n { 0.5 * step } else { step };
                let v = tr.tau(phi, t, x, y);
                let gx = (tr.tau(phi, t, x + h, y) - tr.tau(phi, t, x - h, y)) / (2.0 * h);
                let gy = (tr.tau(phi, t, x, y + h) - tr.tau(phi, t, x, y - h)) / (2.0 * h);
                size += w * v * v;
                dx += w * gx * gx;
                dy += w * gy * gy;
                g.push(v);
            }
            out.size.update(size.sqrt() * ball, x, y);
            out.dx.update(dx.sqrt() * r * ball, x, y);
            out.dy.update(dy.sqrt() * r * ball, x, y);
            out.variation.update(rho_variation_row(&g, sample.rho)? * ball, x, y);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::{make_kernel, KernelFamily};

    fn small() -> KernelSample {
        KernelSample {
            points: 8,
            ..KernelSample::default()
        }
    }

    #[test]
    fn heat_products_are_stable() {
        let s = LambdaSpace::new(1.0).unwrap();
        let w = make_kernel(&s, &KernelFamily::Heat).unwrap();
        let a = kernel_bounds(&s, &w, &small()).unwrap();
        let b = kernel_bounds(&s, &w, &small().refined()).unwrap();
        assert!(a.size.value > 0.0 && a.variation.value > 0.0);
        assert!(a.max_change(&b) < 0.05, "{a}\n{b}");
    }

    #[test]
    fn constant_profile_is_unstable() {
        let s = LambdaSpace::new(1.0).unwrap();
        let c = Profile::custom("one", |_| 1.0, |_| 0.0, |_| 0.0);
        let a = kernel_bounds(&s, &c, &small()).unwrap();
        let b = kernel_bounds(&s, &c, &small().refined()).unwrap();
        assert!(a.max_change(&b) > 0.5, "{a}\n{b}");
    }
}
