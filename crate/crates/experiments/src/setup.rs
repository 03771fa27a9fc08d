//! Grids, operator handles and test functions shared by the commands.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use bessel_harmonic::conv::{make_kernel, KernelFamily, Profile};
use bessel_harmonic::operators::{FieldOperator, GridOperator, HlOperator, KernelTensor, Reducer, TimeGrid};
use bessel_harmonic::{GridFunction, LambdaSpace, LogGrid};

use crate::config::Config;
use crate::{ExperimentError, Result};

pub const DEFAULT_DECADES: f64 = 4.0;
pub const DEFAULT_POINTS_PER_DECADE: usize = 32;
pub const DEFAULT_RHO: f64 = 3.0;

/// The space, the x grid (centred on 1) and a t grid with one extra decade at each end.
#[derive(Debug, Clone)]
pub struct Setup {
    pub space: LambdaSpace,
    pub grid: Arc<LogGrid>,
    pub tgrid: Arc<TimeGrid>,
}

impl Setup {
    pub fn new(lambda: f64, decades: f64, points_per_decade: usize) -> Result<Self> {
        if !(decades > 0.0) {
            return Err(ExperimentError::Config(format!(
                "grid decades must be positive, got {decades}"
            )));
        }
        let space = LambdaSpace::new(lambda)?;
        let half = 10f64.powf(decades / 2.0);
        let grid = Arc::new(LogGrid::new(1.0 / half, half, points_per_decade)?);
        let tgrid = Arc::new(TimeGrid::aligned(&grid, 0.1 / half, 10.0 * half)?);
        Ok(Self { space, grid, tgrid })
    }

    pub fn from_config(config: &Config) -> Result<Self> {
        Self::from_config_or(config, DEFAULT_DECADES, DEFAULT_POINTS_PER_DECADE)
    }

    /// As `from_config`, with command-specific defaults for the grid size.
    pub fn from_config_or(config: &Config, decades: f64, points_per_decade: usize) -> Result<Self> {
        Self::new(
            config.value_or("grid.lambda", 1.0)?,
            config.value_or("grid.decades", decades)?,
            config.value_or("grid.points_per_decade", points_per_decade)?,
        )
    }

    pub fn tensor(&self, profile: &Profile) -> Result<Arc<KernelTensor>> {
        Ok(Arc::new(KernelTensor::build(
            &self.space,
            profile,
            self.grid.clone(),
            self.tgrid.clone(),
        )?))
    }

    /// Operator handle for a reducer over the t-family of `profile`, or M_λ.
    pub fn operator(
        &self,
        kind: OperatorKind,
        profile: Option<&Profile>,
    ) -> Result<Box<dyn GridOperator + Send + Sync>> {
        if kind == OperatorKind::HardyLittlewood {
            return Ok(Box::new(HlOperator::new(self.space, self.grid.clone())));
        }
        let profile = profile.ok_or_else(|| ExperimentError::Config(format!("{kind} needs a kernel")))?;
        self.field_operator(kind, self.tensor(profile)?)
    }

    /// A reducer over an already built tensor; `kind` must not be `hl`.
    pub fn field_operator(
        &self,
        kind: OperatorKind,
        tensor: Arc<KernelTensor>,
    ) -> Result<Box<dyn GridOperator + Send + Sync>> {
        let reducer = match kind {
            OperatorKind::HardyLittlewood => return Err(ExperimentError::Config("hl has no kernel".into())),
            OperatorKind::Maximal => Reducer::Maximal,
            OperatorKind::Square => Reducer::Square,
            OperatorKind::Variation => Reducer::Variation(DEFAULT_RHO),
        };
        Ok(Box::new(FieldOperator::new(tensor, reducer)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    HardyLittlewood,
    Maximal,
    Square,
    Variation,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorKind::HardyLittlewood => "hl",
            OperatorKind::Maximal => "maximal",
            OperatorKind::Square => "square",
            OperatorKind::Variation => "variation",
        })
    }
}

impl FromStr for OperatorKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hl" => Ok(OperatorKind::HardyLittlewood),
            "maximal" => Ok(OperatorKind::Maximal),
            "square" => Ok(OperatorKind::Square),
            "variation" => Ok(OperatorKind::Variation),
            other => Err(ExperimentError::Config(format!("unknown operator {other:?}"))),
        }
    }
}

/// Kernel family names plus `constant`, a profile outside the admissible class.
pub fn parse_profile(space: &LambdaSpace, name: &str) -> Result<Profile> {
    if name.trim() == "constant" {
        return Ok(Profile::custom("constant", |_| 1.0, |_| 0.0, |_| 0.0));
    }
    Ok(make_kernel(space, &name.parse::<KernelFamily>()?)?)
}

/// The profile a scan uses for `kind` in the given family: square functions need a
/// vanishing transform at 0, so Poisson and heat are replaced by their first t-derivative.
pub fn scan_profile(space: &LambdaSpace, kind: OperatorKind, family: &str) -> Result<Option<Profile>> {
    let name = match (kind, family.trim()) {
        (OperatorKind::HardyLittlewood, _) => return Ok(None),
        (OperatorKind::Square, "poisson") => "poisson-deriv:1",
        (OperatorKind::Square, "heat") => "heat-deriv:1",
        (_, name) => name,
    };
    parse_profile(space, name).map(Some)
}

pub fn two_bump(grid: &Arc<LogGrid>) -> GridFunction {
    GridFunction::from_fn(grid.clone(), |y| {
        (-((y - 1.0) / 0.1f64).powi(2)).exp() + 0.5 * (-((y - 4.0) / 0.4f64).powi(2)).exp()
    })
    .expect("grid function from a finite closure")
}

/// Inputs by name: `two-bump`, `zero`, `gauss:c` (relative width 1/4),
/// `indicator:a:b` (χ_[a,b)) and `power:γ` (y^{−γ} on (0,1)).
pub fn input(grid: &Arc<LogGrid>, spec: &str) -> Result<GridFunction> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| ExperimentError::Config(format!("bad input spec {spec:?}")))
    };
    let f = match parts[0] {
        "two-bump" => return Ok(two_bump(grid)),
        "zero" => return Ok(GridFunction::zeros(grid.clone())),
        "gauss" => {
            let c = num(1)?;
            GridFunction::from_fn(grid.clone(), |y| (-((y - c) / (0.25 * c)).powi(2)).exp())?
        }
        "indicator" => {
            let (a, b) = (num(1)?, num(2)?);
            GridFunction::from_fn(grid.clone(), |y| if (a..b).contains(&y) { 1.0 } else { 0.0 })?
        }
        "power" => {
            let g = num(1)?;
            GridFunction::from_fn(grid.clone(), |y| if y < 1.0 { y.powf(-g) } else { 0.0 })?
        }
        _ => return Err(ExperimentError::Config(format!("unknown input {spec:?}"))),
    };
    Ok(f)
}

/// Gaussian bumps at three scales, an indicator, the two-bump input and y^{−γ}χ_{(0,1)}
/// with γ = (2λ+1)/(2 p_max), which lies in every L^p with p ≤ p_max.
pub fn battery(space: &LambdaSpace, grid: &Arc<LogGrid>, p_max: f64) -> Result<Vec<(String, GridFunction)>> {
    let gamma = space.dim() / (2.0 * p_max);
    let mut specs: Vec<String> = ["gauss:0.1", "gauss:1", "gauss:10", "indicator:0.5:2", "two-bump"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    specs.push(format!("power:{gamma}"));
    specs.into_iter().map(|s| Ok((s.clone(), input(grid, &s)?))).collect()
}

/// Least-squares slope of y against x.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs `f` over `items` on up to `jobs` threads; results keep the input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 2.0 * k as f64 - 1.0)).collect();
        assert!((fit_slope(&pts).unwrap() - 2.0).abs() < 1e-14);
        assert!(fit_slope(&pts[..1]).is_none());
        assert!(fit_slope(&[(1.0, 0.0), (1.0, 2.0)]).is_none());
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..37).collect();
        assert_eq!(
            parallel_map(&items, 4, |&i| i * i),
            items.iter().map(|i| i * i).collect::<Vec<_>>()
        );
    }

    #[test]
    fn inputs_parse() {
        let s = Setup::new(1.0, 2.0, 16).unwrap();
        assert_eq!(input(&s.grid, "zero").unwrap().max_abs(), 0.0);
        let chi = input(&s.grid, "indicator:0.5:2").unwrap();
        assert_eq!(chi.max_abs(), 1.0);
        assert!(input(&s.grid, "indicator:0.5").is_err());
        assert!(input(&s.grid, "wave").is_err());
        assert_eq!(battery(&s.space, &s.grid, 3.0).unwrap().len(), 6);
    }
}
