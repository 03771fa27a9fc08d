//! Radial kernel profiles φ on (0, ∞) with analytic derivatives, and the named families.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{parameter, Error, Result};
use crate::grid::LambdaSpace;
use crate::special::{j_scaled_unchecked, ln_gamma_unchecked};

/// A profile and its first derivatives.
pub trait ProfileFn: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;

    /// Third derivative; defaults to a central difference of `d2`.
    fn d3(&self, x: f64) -> f64 {
        let h = 1e-4 * x.max(1e-2);
        (self.d2(x + h) - self.d2(x - h)) / (2.0 * h)
    }

    /// Angular frequency of oscillation at large x (0 for non-oscillating profiles).
    fn wavenumber(&self) -> f64 {
        0.0
    }
}

/// A shareable profile with a label.
#[derive(Clone)]
pub struct Profile {
    inner: Arc<dyn ProfileFn>,
    label: String,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile").field("label", &self.label).finish()
    }
}

impl Profile {
    pub fn new(label: impl Into<String>, inner: Arc<dyn ProfileFn>) -> Self {
        Self {
            inner,
            label: label.into(),
        }
    }

    /// A profile from closures for φ, φ′ and φ″.
    pub fn custom<F, F1, F2>(label: impl Into<String>, f: F, f1: F1, f2: F2) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            label,
            Arc::new(ClosureProfile {
                f: Box::new(f),
                f1: Box::new(f1),
                f2: Box::new(f2),
            }),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.inner.value(x)
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        self.inner.d1(x)
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        self.inner.d2(x)
    }

    pub fn d3(&self, x: f64) -> f64 {
        self.inner.d3(x)
    }

    pub fn wavenumber(&self) -> f64 {
        self.inner.wavenumber()
    }

    /// φ_t(x) = t^{−2λ−1} φ(x/t).
    pub fn dilated(&self, space: &LambdaSpace, t: f64, x: f64) -> f64 {
        t.powf(-space.dim()) * self.value(x / t)
    }
}

type Scalar = Box<dyn Fn(f64) -> f64 + Send + Sync>;

struct ClosureProfile {
    f: Scalar,
    f1: Scalar,
    f2: Scalar,
}

impl ProfileFn for ClosureProfile {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.f1)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.f2)(x)
    }
}

/// The kernel families used by the operators.
#[derive(Debug, Clone)]
pub enum KernelFamily {
    Poisson,
    Heat,
    BochnerRiesz(f64),
    PoissonDerivative(u32),
    HeatDerivative(u32),
    SteinBR(f64),
    Custom(Profile),
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Poisson => write!(f, "poisson"),
            KernelFamily::Heat => write!(f, "heat"),
            KernelFamily::BochnerRiesz(a) => write!(f, "bochner-riesz:{a}"),
            KernelFamily::PoissonDerivative(m) => write!(f, "poisson-deriv:{m}"),
            KernelFamily::HeatDerivative(m) => write!(f, "heat-deriv:{m}"),
            KernelFamily::SteinBR(a) => write!(f, "stein-br:{a}"),
            KernelFamily::Custom(p) => write!(f, "custom:{}", p.label()),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let real = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::Parse(format!("kernel {name:?} needs a parameter")))?
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad kernel parameter in {s:?}")))
        };
        let count = |a: Option<&str>| -> Result<u32> {
            a.ok_or_else(|| Error::Parse(format!("kernel {name:?} needs a parameter")))?
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad kernel order in {s:?}")))
        };
        match (name, arg) {
            ("poisson", None) => Ok(KernelFamily::Poisson),
            ("heat", None) => Ok(KernelFamily::Heat),
            ("bochner-riesz", a) => Ok(KernelFamily::BochnerRiesz(real(a)?)),
            ("stein-br", a) => Ok(KernelFamily::SteinBR(real(a)?)),
            ("poisson-deriv", a) => Ok(KernelFamily::PoissonDerivative(count(a)?)),
            ("heat-deriv", a) => Ok(KernelFamily::HeatDerivative(count(a)?)),
            _ => Err(Error::Parse(format!("unknown kernel family {s:?}"))),
        }
    }
}

/// The profile of a family, with hand-coded derivatives.
pub fn make_kernel(space: &LambdaSpace, family: &KernelFamily) -> Result<Profile> {
    let label = family.to_string();
    let l = space.lambda();
    match *family {
        KernelFamily::Poisson => {
            let mut p = make_kernel(space, &KernelFamily::PoissonDerivative(0))?;
            p.label = label;
            Ok(p)
        }
        KernelFamily::Heat => {
            let mut p = make_kernel(space, &KernelFamily::HeatDerivative(0))?;
            p.label = label;
            Ok(p)
        }
        KernelFamily::PoissonDerivative(m) => {
            // P^λ(x) = 2λΓ(λ)/(Γ(λ+1/2)√π) (1+x²)^{−λ−1}
            let c = ((2.0 * l).ln() + ln_gamma_unchecked(l) - ln_gamma_unchecked(l + 0.5)).exp()
                / std::f64::consts::PI.sqrt();
            let base = Series::single(Envelope::Rational(l + 1.0), c);
            Ok(Profile::new(
                label,
                Arc::new(base.t_derivatives(space, m).into_profile()),
            ))
        }
        KernelFamily::HeatDerivative(m) => {
            // W^λ(x) = 2^{1/2−λ}/Γ(λ+1/2) e^{−x²/2}
            let c = ((0.5 - l) * std::f64::consts::LN_2 - ln_gamma_unchecked(l + 0.5)).exp();
            let base = Series::single(Envelope::Gaussian, c);
            Ok(Profile::new(
                label,
                Arc::new(base.t_derivatives(space, m).into_profile()),
            ))
        }
        KernelFamily::BochnerRiesz(alpha) => {
            check_alpha(alpha)?;
            Ok(Profile::new(label, Arc::new(BochnerRiesz::new(space, alpha))))
        }
        KernelFamily::SteinBR(alpha) => {
            check_alpha(alpha)?;
            let br = Profile::new("br", Arc::new(BochnerRiesz::new(space, alpha)));
            let mut p = t_derivative_profile(space, &br);
            p.label = label;
            Ok(p)
        }
        KernelFamily::Custom(ref p) => Ok(p.clone()),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(parameter(format!("Bochner-Riesz order must be positive, got {alpha}")));
    }
    Ok(())
}

/// Φ = (2λ+1)φ + xφ′, so that ∂_t τ_y(φ_t) = −(1/t) τ_y(Φ_t).
pub fn t_derivative_profile(space: &LambdaSpace, phi: &Profile) -> Profile {
    Profile::new(
        format!("t-derivative({})", phi.label()),
        Arc::new(TDerivative {
            phi: phi.clone(),
            dim: space.dim(),
        }),
    )
}

struct TDerivative {
    phi: Profile,
    dim: f64,
}

impl ProfileFn for TDerivative {
    fn value(&self, x: f64) -> f64 {
        self.dim * self.phi.value(x) + x * self.phi.d1(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.dim + 1.0) * self.phi.d1(x) + x * self.phi.d2(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.dim + 2.0) * self.phi.d2(x) + x * self.phi.d3(x)
    }
    fn wavenumber(&self) -> f64 {
        self.phi.wavenumber()
    }
}

/// φ^{λ,α}(x) = 2^α Γ(α+1) x^{−μ} J_μ(x), μ = α + λ + 1/2.
///
/// With K_μ(x) = x^{−μ}J_μ(x) and K_μ′ = −x K_{μ+1}:
/// φ′ = −A x K_{μ+1}, φ″ = −A K_{μ+1} + A x² K_{μ+2}, φ‴ = 3A x K_{μ+2} − A x³ K_{μ+3}.
struct BochnerRiesz {
    amp: f64,
    mu: f64,
}

impl BochnerRiesz {
    fn new(space: &LambdaSpace, alpha: f64) -> Self {
        Self {
            amp: (alpha * std::f64::consts::LN_2 + ln_gamma_unchecked(alpha + 1.0)).exp(),
            mu: alpha + space.lambda() + 0.5,
        }
    }

    fn k(&self, shift: f64, x: f64) -> f64 {
        j_scaled_unchecked(self.mu + shift, x)
    }
}

impl ProfileFn for BochnerRiesz {
    fn value(&self, x: f64) -> f64 {
        self.amp * self.k(0.0, x)
    }
    fn d1(&self, x: f64) -> f64 {
        -self.amp * x * self.k(1.0, x)
    }
    fn d2(&self, x: f64) -> f64 {
        self.amp * (x * x * self.k(2.0, x) - self.k(1.0, x))
    }
    fn d3(&self, x: f64) -> f64 {
        self.amp * x * (3.0 * self.k(2.0, x) - x * x * self.k(3.0, x))
    }
    fn wavenumber(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Envelope {
    /// (1 + x²)^{−a−j}
    Rational(f64),
    /// e^{−x²/2}
    Gaussian,
}

/// Σ c_{k,j} x^k E_j(x) with E_j the envelope raised by j extra powers.
#[derive(Debug, Clone, PartialEq)]
struct Series {
    env: Envelope,
    terms: BTreeMap<(u32, u32), f64>,
}

impl Series {
    fn single(env: Envelope, c: f64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 0), c);
        Self { env, terms }
    }

    fn add(&mut self, key: (u32, u32), c: f64) {
        if c != 0.0 {
            *self.terms.entry(key).or_insert(0.0) += c;
        }
    }

    fn derivative(&self) -> Series {
        let mut out = Series {
            env: self.env,
            terms: BTreeMap::new(),
        };
        for (&(k, j), &c) in &self.terms {
            if k > 0 {
                out.add((k - 1, j), c * k as f64);
            }
            match self.env {
                Envelope::Rational(a) => out.add((k + 1, j + 1), -2.0 * (a + j as f64) * c),
                Envelope::Gaussian => out.add((k + 1, j), -c),
            }
        }
        out
    }

    fn scaled(&self, s: f64) -> Series {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= s);
        out
    }

    fn plus(&self, other: &Series) -> Series {
        let mut out = self.clone();
        for (&key, &c) in &other.terms {
            out.add(key, c);
        }
        out
    }

    fn times_x(&self) -> Series {
        let mut out = Series {
            env: self.env,
            terms: BTreeMap::new(),
        };
        for (&(k, j), &c) in &self.terms {
            out.add((k + 1, j), c);
        }
        out
    }

    /// The profile of t^m ∂_t^m φ_t at t = 1, via ψ_{m+1} = Dψ_m − mψ_m with
    /// Dψ = −(2λ+1)ψ − xψ′ the generator of t∂_t on dilations.
    fn t_derivatives(&self, space: &LambdaSpace, m: u32) -> Series {
        let mut psi = self.clone();
        for step in 0..m {
            let d = psi.scaled(-space.dim()).plus(&psi.derivative().times_x().scaled(-1.0));
            psi = d.plus(&psi.scaled(-(step as f64)));
        }
        psi
    }

    fn eval(&self, x: f64) -> f64 {
        let (base, step) = match self.env {
            Envelope::Rational(a) => {
                let q = 1.0 + x * x;
                (q.powf(-a), 1.0 / q)
            }
            Envelope::Gaussian => ((-0.5 * x * x).exp(), 1.0),
        };
        let mut sum = 0.0;
        for (&(k, j), &c) in &self.terms {
            sum += c * x.powi(k as i32) * step.powi(j as i32);
        }
        base * sum
    }

    fn into_profile(self) -> SeriesProfile {
        let d1 = self.derivative();
        let d2 = d1.derivative();
        let d3 = d2.derivative();
        SeriesProfile { f: self, d1, d2, d3 }
    }
}

struct SeriesProfile {
    f: Series,
    d1: Series,
    d2: Series,
    d3: Series,
}

impl ProfileFn for SeriesProfile {
    fn value(&self, x: f64) -> f64 {
        self.f.eval(x)
    }
    fn d1(&self, x: f64) -> f64 {
        self.d1.eval(x)
    }
    fn d2(&self, x: f64) -> f64 {
        self.d2.eval(x)
    }
    fn d3(&self, x: f64) -> f64 {
        self.d3.eval(x)
    }
}
