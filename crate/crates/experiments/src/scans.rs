//! Weighted-norm scans: one-weight operator ratios against [w]_{A_p}, and two-weight
//! commutator ratios against ([w₁][w₂])^{(m+1)/2·max(1, 1/(p−1))}.

use std::fs::File;
use std::io::BufReader;
use std::str::FromStr;
use std::sync::Arc;

use bessel_harmonic::conv::Profile;
use bessel_harmonic::operators::{maximal, rho_variation, square_function, GridOperator, KernelTensor};
use bessel_harmonic::weights::{bmo_norm, Weight};
use bessel_harmonic::{lp_norm, GridFunction, LambdaSpace};

use crate::config::Config;
use crate::report::{num, Check, Report};
use crate::setup::{battery, fit_slope, parallel_map, scan_profile, OperatorKind, Setup, DEFAULT_RHO};
use crate::{ExperimentError, Result};

/// Exponent of the characteristic in the one-weight bound.
pub fn exponent(p: f64) -> f64 {
    (1.0 / (p - 1.0)).max(1.0)
}

/// `power:β`, or a path to a CSV written by `GridFunction::write_csv`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Power(f64),
    Csv(String),
}

impl FromStr for WeightSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().strip_prefix("power:") {
            Some(b) => b
                .trim()
                .parse()
                .map(WeightSpec::Power)
                .map_err(|_| ExperimentError::Config(format!("bad weight {s:?}"))),
            None => Ok(WeightSpec::Csv(s.trim().to_string())),
        }
    }
}

impl WeightSpec {
    fn label(&self) -> String {
        match self {
            WeightSpec::Power(b) => format!("power:{b}"),
            WeightSpec::Csv(p) => p.clone(),
        }
    }

    fn build(&self, setup: &Setup) -> Result<Weight> {
        match self {
            WeightSpec::Power(b) => Ok(Weight::power(setup.grid.clone(), *b)?),
            WeightSpec::Csv(path) => {
                let (_, w) = GridFunction::read_csv(BufReader::new(File::open(path)?))?;
                if w.grid().as_ref() != setup.grid.as_ref() {
                    return Err(ExperimentError::Config(format!(
                        "weight {path} is not sampled on the scan grid"
                    )));
                }
                Ok(Weight::sampled(w)?)
            }
        }
    }
}

/// Power exponents approaching both ends of (−(2λ+1), (2λ+1)(p−1)), halving the
/// distance each step, plus the unweighted baseline.
pub fn power_family(space: &LambdaSpace, p: f64, steps: usize) -> Vec<(String, f64)> {
    let d = space.dim();
    let (lo, hi) = (-d, d * (p - 1.0));
    let half = 0.5 * (hi - lo);
    let mut out = vec![("base".to_string(), 0.0)];
    for k in 1..=steps {
        out.push(("upper".to_string(), hi - half * 0.5f64.powi(k as i32)));
    }
    for k in 1..=steps {
        out.push(("lower".to_string(), lo + half * 0.5f64.powi(k as i32)));
    }
    out
}

/// Points (ln x, ln y) whose x lies in the top decade of the group; at least the two largest.
fn top_decade(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let Some(&(top, _)) = pts.first() else {
        return pts;
    };
    let keep = pts
        .iter()
        .filter(|p| p.0 >= top - std::f64::consts::LN_10)
        .count()
        .max(2);
    pts.truncate(keep);
    pts
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneWeightSettings {
    pub p: Vec<f64>,
    pub operators: Vec<OperatorKind>,
    pub kernel: String,
    pub steps: usize,
    pub margin: f64,
    pub weights: Option<Vec<WeightSpec>>,
}

impl OneWeightSettings {
    pub const KEYS: [&'static str; 6] = [
        "scan.p",
        "scan.operators",
        "scan.kernel",
        "scan.steps",
        "scan.margin",
        "scan.weights",
    ];

    pub fn from_config(config: &Config) -> Result<Self> {
        let weights = match config.get("scan.weights") {
            Some(_) => Some(config.list_or::<WeightSpec>("scan.weights", &[])?),
            None => None,
        };
        let s = Self {
            p: config.list_or("scan.p", &[1.5, 2.0, 3.0])?,
            operators: config.list_or(
                "scan.operators",
                &[OperatorKind::Maximal, OperatorKind::Square, OperatorKind::Variation],
            )?,
            kernel: config.value_or("scan.kernel", "poisson".to_string())?,
            steps: config.value_or("scan.steps", 5)?,
            margin: config.value_or("scan.margin", 0.15)?,
            weights,
        };
        if s.p.iter().any(|&p| !(p > 1.0 && p.is_finite())) {
            return Err(ExperimentError::Config("scan.p values must exceed 1".into()));
        }
        if s.steps < 2 && s.weights.is_none() {
            return Err(ExperimentError::Config("scan.steps must be at least 2".into()));
        }
        Ok(s)
    }
}

/// An operator to scan, with its display label.
pub struct ScanTarget {
    pub label: String,
    pub op: Box<dyn GridOperator + Send + Sync>,
}

/// Operators for `(kind, profile)` pairs, without repeats; kinds sharing a profile
/// label share one tensor.
pub fn build_targets(setup: &Setup, specs: Vec<(OperatorKind, Option<Profile>)>) -> Result<Vec<ScanTarget>> {
    let mut tensors: Vec<(String, Arc<KernelTensor>)> = Vec::new();
    let mut out = Vec::with_capacity(specs.len());
    for (kind, profile) in specs {
        let Some(profile) = profile else {
            out.push(ScanTarget {
                label: kind.to_string(),
                op: setup.operator(kind, None)?,
            });
            continue;
        };
        let label = profile.label().to_string();
        if out.iter().any(|t: &ScanTarget| t.label == format!("{kind}[{label}]")) {
            continue;
        }
        let tensor = match tensors.iter().find(|(l, _)| *l == label) {
            Some((_, t)) => t.clone(),
            None => {
                let t = setup.tensor(&profile)?;
                tensors.push((label.clone(), t.clone()));
                t
            }
        };
        out.push(ScanTarget {
            label: format!("{kind}[{label}]"),
            op: setup.field_operator(kind, tensor)?,
        });
    }
    Ok(out)
}

pub fn targets(setup: &Setup, operators: &[OperatorKind], kernel: &str) -> Result<Vec<ScanTarget>> {
    let specs = operators
        .iter()
        .map(|&kind| Ok((kind, scan_profile(&setup.space, kind, kernel)?)))
        .collect::<Result<Vec<_>>>()?;
    build_targets(setup, specs)
}

/// ‖Tf‖_{L^p(w)}/‖f‖_{L^p(w)} maximized over the battery, for every target, p and weight.
pub fn scan_one_weight(
    setup: &Setup,
    targets: &[ScanTarget],
    settings: &OneWeightSettings,
    report: &mut Report,
    jobs: usize,
) -> Result<()> {
    let p_max = settings.p.iter().copied().fold(1.0, f64::max);
    let inputs = battery(&setup.space, &setup.grid, p_max)?;
    report.note(format!(
        "grid [{:.3e}, {:.3e}] with {} nodes, {} t nodes, battery: {}",
        setup.grid.x_min(),
        setup.grid.x_max(),
        setup.grid.len(),
        setup.tgrid.len(),
        inputs.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(" ")
    ));
    let outputs: Vec<Result<Vec<GridFunction>>> = parallel_map(targets, jobs, |t| {
        inputs.iter().map(|(_, f)| Ok(t.op.apply_all(f)?)).collect()
    });
    let outputs: Vec<Vec<GridFunction>> = outputs.into_iter().collect::<Result<_>>()?;

    for &p in &settings.p {
        let family: Vec<(String, WeightSpec)> = match &settings.weights {
            Some(list) => list.iter().map(|w| ("given".to_string(), w.clone())).collect(),
            None => power_family(&setup.space, p, settings.steps)
                .into_iter()
                .map(|(side, b)| (side, WeightSpec::Power(b)))
                .collect(),
        };
        let weights: Vec<(String, WeightSpec, Weight, f64)> = family
            .into_iter()
            .map(|(side, spec)| {
                let w = spec.build(setup)?;
                let ap = w.ap(&setup.space, p)?.value;
                Ok((side, spec, w, ap))
            })
            .collect::<Result<_>>()?;
        for (target, tf) in targets.iter().zip(&outputs) {
            let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
            for (side, spec, w, ap) in &weights {
                let mut best = (0.0f64, "");
                for ((name, f), g) in inputs.iter().zip(tf) {
                    let num_ = lp_norm(&setup.space, g, p, Some(w.values()))?.value;
                    let den = lp_norm(&setup.space, f, p, Some(w.values()))?.value;
                    if den > 0.0 && num_ / den > best.0 {
                        best = (num_ / den, name);
                    }
                }
                report.row(vec![
                    target.label.clone(),
                    p.to_string(),
                    spec.label(),
                    side.clone(),
                    num(*ap),
                    num(best.0),
                    best.1.to_string(),
                ]);
                if side != "base" {
                    match groups.iter_mut().find(|(s, _)| s == side) {
                        Some((_, pts)) => pts.push((ap.ln(), best.0.ln())),
                        None => groups.push((side.clone(), vec![(ap.ln(), best.0.ln())])),
                    }
                }
            }
            for (side, pts) in groups {
                let slope = fit_slope(&top_decade(&pts)).unwrap_or(f64::NAN);
                report.check(Check::at_most(
                    format!("slope {} p={p} {side}", target.label),
                    slope,
                    exponent(p) + settings.margin,
                ));
            }
        }
    }
    Ok(())
}

pub fn scan_t11(setup: &Setup, settings: &OneWeightSettings, jobs: usize) -> Result<Report> {
    let mut report = Report::new(
        "scan-t11",
        &["operator", "p", "weight", "side", "ap", "ratio", "argmax"],
    );
    let targets = targets(setup, &settings.operators, &settings.kernel)?;
    scan_one_weight(setup, &targets, settings, &mut report, jobs)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoWeightSettings {
    pub p: f64,
    pub m: u32,
    pub b: String,
    pub pairs: Vec<(f64, f64)>,
    pub operators: Vec<OperatorKind>,
    pub kernel: String,
    pub margin: f64,
}

impl TwoWeightSettings {
    pub const KEYS: [&'static str; 7] = [
        "t12.p",
        "t12.m",
        "t12.b",
        "t12.pairs",
        "t12.operators",
        "t12.kernel",
        "t12.margin",
    ];

    /// Equal exponents approaching the upper end of the A_2 range at λ = 1. With w₁ ≠ w₂
    /// the BMO space of log y is weighted by a nontrivial power, where its norm is infinite.
    pub const DEFAULT_PAIRS: [(f64, f64); 6] = [
        (0.0, 0.0),
        (1.5, 1.5),
        (2.25, 2.25),
        (2.625, 2.625),
        (2.8125, 2.8125),
        (2.90625, 2.90625),
    ];

    pub fn from_config(config: &Config) -> Result<Self> {
        let pairs = match config.get("t12.pairs") {
            None => Self::DEFAULT_PAIRS.to_vec(),
            Some(_) => config
                .list_or::<String>("t12.pairs", &[])?
                .iter()
                .map(|s| {
                    let (a, b) = s
                        .split_once(':')
                        .ok_or_else(|| ExperimentError::Config(format!("t12.pairs: expected b1:b2, got {s:?}")))?;
                    let parse = |v: &str| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| ExperimentError::Config(format!("t12.pairs: bad exponent in {s:?}")))
                    };
                    Ok((parse(a)?, parse(b)?))
                })
                .collect::<Result<_>>()?,
        };
        let s = Self {
            p: config.value_or("t12.p", 2.0)?,
            m: config.value_or("t12.m", 1)?,
            b: config.value_or("t12.b", "log".to_string())?,
            pairs,
            operators: config.list_or(
                "t12.operators",
                &[OperatorKind::Maximal, OperatorKind::Square, OperatorKind::Variation],
            )?,
            kernel: config.value_or("t12.kernel", "poisson".to_string())?,
            margin: config.value_or("t12.margin", 0.2)?,
        };
        if !(s.p > 1.0) || !(1..=2).contains(&s.m) {
            return Err(ExperimentError::Config("t12 needs p > 1 and m in {1, 2}".into()));
        }
        if s.operators.contains(&OperatorKind::HardyLittlewood) {
            return Err(ExperimentError::Config(
                "commutators are defined for maximal, square and variation".into(),
            ));
        }
        Ok(s)
    }
}

/// `log` or `const:c`.
fn symbol(setup: &Setup, spec: &str) -> Result<GridFunction> {
    let f = match spec.trim().split_once(':') {
        None if spec.trim() == "log" => GridFunction::from_fn(setup.grid.clone(), f64::ln)?,
        Some(("const", c)) => {
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| ExperimentError::Config(format!("bad symbol {spec:?}")))?;
            GridFunction::from_fn(setup.grid.clone(), |_| c)?
        }
        _ => return Err(ExperimentError::Config(format!("unknown symbol {spec:?}"))),
    };
    Ok(f)
}

pub fn scan_t12(setup: &Setup, settings: &TwoWeightSettings, jobs: usize) -> Result<Report> {
    let mut report = Report::new(
        "scan-t12",
        &[
            "operator",
            "beta1",
            "beta2",
            "ap1",
            "ap2",
            "bmo",
            "characteristic",
            "ratio",
            "argmax",
        ],
    );
    let (p, m) = (settings.p, settings.m);
    let space = &setup.space;
    let b = symbol(setup, &settings.b)?;
    let inputs = battery(space, &setup.grid, p)?;
    let mut tensors: Vec<(OperatorKind, Arc<KernelTensor>, String)> = Vec::new();
    for &kind in &settings.operators {
        let profile = scan_profile(space, kind, &settings.kernel)?.expect("field operators have a profile");
        let label = format!("{kind}[{}]", profile.label());
        if tensors.iter().any(|t| t.2 == label) {
            continue;
        }
        let shared = tensors
            .iter()
            .find(|t| t.1.label() == profile.label())
            .map(|t| t.1.clone());
        let tensor = match shared {
            Some(t) => t,
            None => setup.tensor(&profile)?,
        };
        tensors.push((kind, tensor, label));
    }
    let outputs: Vec<Result<Vec<GridFunction>>> = parallel_map(&tensors, jobs, |(kind, tensor, _)| {
        inputs
            .iter()
            .map(|(_, f)| {
                let field = tensor.commutator_field(f, &b, m, usize::MAX)?;
                let v = match kind {
                    OperatorKind::Maximal => maximal(&field),
                    OperatorKind::Square => square_function(&field),
                    _ => rho_variation(&field, DEFAULT_RHO)?,
                };
                Ok(GridFunction::new(setup.grid.clone(), v)?)
            })
            .collect()
    });
    let outputs: Vec<Vec<GridFunction>> = outputs.into_iter().collect::<Result<_>>()?;
    let power = (m as f64 + 1.0) / 2.0 * exponent(p);
    let zero_symbol = outputs.iter().flatten().all(|g| g.max_abs() == 0.0);
    for ((_, _, label), tf) in tensors.iter().zip(&outputs) {
        let mut points = Vec::new();
        for &(b1, b2) in &settings.pairs {
            let w1 = Weight::power(setup.grid.clone(), b1)?;
            let w2 = Weight::power(setup.grid.clone(), b2)?;
            let w = Weight::power(setup.grid.clone(), (b1 - b2) / (m as f64 * p))?;
            let (a1, a2) = (w1.ap(space, p)?.value, w2.ap(space, p)?.value);
            let bmo = bmo_norm(space, &b, &w)?;
            let characteristic = (a1 * a2).powf(power);
            let mut best = (0.0f64, "");
            if zero_symbol {
                best.1 = "exact-zero";
            } else {
                for ((name, f), g) in inputs.iter().zip(tf) {
                    let top = lp_norm(space, g, p, Some(w2.values()))?.value;
                    let bottom = bmo.value.powi(m as i32) * lp_norm(space, f, p, Some(w1.values()))?.value;
                    if bottom > 0.0 && top / bottom > best.0 {
                        best = (top / bottom, name);
                    }
                }
                if bmo.divergent {
                    // The grid value depends on the span, so the ratio is not meaningful.
                    report.note(format!(
                        "{label} ({b1}, {b2}): BMO norm grows with the span; left out of the fit"
                    ));
                } else {
                    points.push((characteristic.ln(), best.0.ln()));
                }
            }
            report.row(vec![
                label.clone(),
                b1.to_string(),
                b2.to_string(),
                num(a1),
                num(a2),
                num(bmo.value),
                num(characteristic),
                num(best.0),
                best.1.to_string(),
            ]);
        }
        if zero_symbol {
            report.note(format!("{label}: commutator vanishes identically"));
            report.check(Check::at_most(format!("zero commutator {label}"), 0.0, 0.0));
            continue;
        }
        match fit_slope(&points) {
            Some(slope) => report.check(Check::at_most(format!("slope {label}"), slope, 1.0 + settings.margin)),
            None => {
                let r = points.first().map_or(f64::NAN, |q| q.1.exp());
                report.check(Check::at_most(format!("finite ratio {label}"), r, f64::MAX));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_stays_inside_the_range() {
        let s = LambdaSpace::new(1.0).unwrap();
        let f = power_family(&s, 2.0, 4);
        assert_eq!(f.len(), 9);
        assert_eq!(f[1].1, 1.5);
        assert_eq!(f[4].1, 3.0 - 3.0 / 16.0);
        assert!(f.iter().all(|(_, b)| *b > -3.0 && *b < 3.0));
    }

    #[test]
    fn top_decade_keeps_two() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (10.0, 2.0)];
        assert_eq!(top_decade(&pts).len(), 2);
        let pts = [(0.0, 0.0), (1.0, 1.0), (1.5, 2.0), (2.0, 2.0)];
        assert_eq!(top_decade(&pts).len(), 4);
    }

    #[test]
    fn weight_specs() {
        assert_eq!("power:1.5".parse::<WeightSpec>().unwrap(), WeightSpec::Power(1.5));
        assert_eq!("w.csv".parse::<WeightSpec>().unwrap(), WeightSpec::Csv("w.csv".into()));
        assert!("power:x".parse::<WeightSpec>().is_err());
    }
}
