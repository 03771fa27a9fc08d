//! One-weight scans for concrete kernel families: t-derivatives of the Poisson kernel,
//! the heat kernel, t-derivatives of the heat kernel and Bochner–Riesz means.

use std::sync::Arc;

use bessel_harmonic::conv::{make_kernel, KernelFamily};
use bessel_harmonic::hankel::hankel_transform;
use bessel_harmonic::{GridFunction, LambdaSpace, LogGrid};

use crate::config::Config;
use crate::report::{Check, Report};
use crate::scans::{build_targets, scan_one_weight, OneWeightSettings};
use crate::setup::{scan_profile, OperatorKind, Setup};
use crate::{ExperimentError, Result};

/// Bochner–Riesz tensors cost far more than the others, so the default grid is smaller.
pub const DEFAULT_DECADES: f64 = 2.0;
pub const DEFAULT_POINTS_PER_DECADE: usize = 16;

pub const FAMILIES: [&str; 4] = ["poisson-deriv", "heat", "heat-deriv", "bochner-riesz"];

#[derive(Debug, Clone, PartialEq)]
pub struct CorollarySettings {
    pub families: Vec<String>,
    pub p: Vec<f64>,
    pub steps: usize,
    pub margin: f64,
    pub orders: Vec<u32>,
    /// Bochner–Riesz order; `None` means λ+4.
    pub alpha: Option<f64>,
    pub operators: Vec<OperatorKind>,
}

impl CorollarySettings {
    pub const KEYS: [&'static str; 7] = [
        "corollaries.families",
        "corollaries.p",
        "corollaries.steps",
        "corollaries.margin",
        "corollaries.orders",
        "corollaries.alpha",
        "corollaries.operators",
    ];

    pub fn from_config(config: &Config) -> Result<Self> {
        let families: Vec<String> = config.list_or(
            "corollaries.families",
            &FAMILIES.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        )?;
        if let Some(f) = families.iter().find(|f| !FAMILIES.contains(&f.as_str())) {
            return Err(ExperimentError::Config(format!(
                "unknown family {f:?}; expected one of {FAMILIES:?}"
            )));
        }
        let alpha = match config.get("corollaries.alpha") {
            Some(_) => Some(config.value_or("corollaries.alpha", 0.0)?),
            None => None,
        };
        Ok(Self {
            families,
            p: config.list_or("corollaries.p", &[2.0])?,
            steps: config.value_or("corollaries.steps", 4)?,
            margin: config.value_or("corollaries.margin", 0.15)?,
            orders: config.list_or("corollaries.orders", &[0, 1, 2])?,
            alpha,
            operators: config.list_or(
                "corollaries.operators",
                &[OperatorKind::Maximal, OperatorKind::Square, OperatorKind::Variation],
            )?,
        })
    }
}

/// Smallest Bochner–Riesz order covered for each operator: λ+1 for the maximal
/// operator, λ+3 for the square function and the variation.
pub fn bochner_riesz_threshold(space: &LambdaSpace, kind: OperatorKind) -> f64 {
    match kind {
        OperatorKind::Maximal => space.lambda() + 1.0,
        _ => space.lambda() + 3.0,
    }
}

/// Kernel name used for `kind` in a family at order `m` (or α).
fn kernels(space: &LambdaSpace, family: &str, kind: OperatorKind, settings: &CorollarySettings) -> Result<Vec<String>> {
    let names = match family {
        "poisson-deriv" => settings
            .orders
            .iter()
            .filter(|&&m| m >= 1 || kind != OperatorKind::Square)
            .map(|m| format!("poisson-deriv:{m}"))
            .collect(),
        "heat" => vec!["heat".to_string()],
        "heat-deriv" => settings
            .orders
            .iter()
            .filter(|&&m| m >= 1 || kind != OperatorKind::Square)
            .map(|m| format!("heat-deriv:{m}"))
            .collect(),
        _ => {
            let alpha = settings.alpha.unwrap_or(space.lambda() + 4.0);
            let need = bochner_riesz_threshold(space, kind);
            if alpha < need {
                return Err(ExperimentError::Config(format!(
                    "Bochner-Riesz order {alpha} is below the threshold {need} (lambda = {}) for the {kind} operator",
                    space.lambda()
                )));
            }
            match kind {
                OperatorKind::Square => vec![format!("stein-br:{alpha}")],
                _ => vec![format!("bochner-riesz:{alpha}")],
            }
        }
    };
    Ok(names)
}

/// sup |h(Φ) − 2αx²(1−x²)_+^{α−1}| for the Stein profile, away from x = 1.
pub fn stein_identity_error(space: &LambdaSpace, alpha: f64) -> Result<f64> {
    let input = Arc::new(LogGrid::new(1e-5, 1e2, 1024)?);
    let out = Arc::new(LogGrid::new(1e-2, 4.0, 32)?);
    let phi = make_kernel(space, &KernelFamily::SteinBR(alpha))?;
    let f = GridFunction::from_fn(input, |x| phi.value(x))?;
    let h = hankel_transform(space, &f, out)?.function;
    Ok(h.nodes()
        .iter()
        .zip(h.values())
        .filter(|(x, _)| (*x - 1.0).abs() >= 0.05)
        .map(|(&x, &v)| (v - 2.0 * alpha * x * x * (1.0 - x * x).max(0.0).powf(alpha - 1.0)).abs())
        .fold(0.0, f64::max))
}

pub fn corollaries(setup: &Setup, settings: &CorollarySettings, jobs: usize) -> Result<Report> {
    let space = &setup.space;
    let mut report = Report::new(
        "corollaries",
        &["operator", "p", "weight", "side", "ap", "ratio", "argmax"],
    );
    let mut specs = Vec::new();
    for family in &settings.families {
        for &kind in &settings.operators {
            if kind == OperatorKind::HardyLittlewood {
                return Err(ExperimentError::Config(
                    "corollaries cover maximal, square and variation".into(),
                ));
            }
            for name in kernels(space, family, kind, settings)? {
                specs.push((kind, scan_profile(space, kind, &name)?));
            }
        }
    }
    let targets = build_targets(setup, specs)?;
    report.note(format!(
        "{} operators: {}",
        targets.len(),
        targets.iter().map(|t| t.label.as_str()).collect::<Vec<_>>().join(" ")
    ));
    let scan = OneWeightSettings {
        p: settings.p.clone(),
        operators: settings.operators.clone(),
        kernel: String::new(),
        steps: settings.steps,
        margin: settings.margin,
        weights: None,
    };
    scan_one_weight(setup, &targets, &scan, &mut report, jobs)?;
    if settings.families.iter().any(|f| f == "bochner-riesz") && settings.operators.contains(&OperatorKind::Square) {
        let alpha = settings.alpha.unwrap_or(space.lambda() + 4.0);
        let err = stein_identity_error(space, alpha)?;
        report.check(Check::at_most(
            format!("stein profile transform alpha={alpha}"),
            err,
            1e-4,
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_are_enforced() {
        let space = LambdaSpace::new(1.0).unwrap();
        let c = Config::parse("[corollaries]\nalpha = 3\n").unwrap();
        let s = CorollarySettings::from_config(&c).unwrap();
        assert!(kernels(&space, "bochner-riesz", OperatorKind::Maximal, &s).is_ok());
        let err = kernels(&space, "bochner-riesz", OperatorKind::Variation, &s).unwrap_err();
        assert!(err.to_string().contains("threshold 4"), "{err}");
    }

    #[test]
    fn square_skips_order_zero() {
        let space = LambdaSpace::new(1.0).unwrap();
        let s = CorollarySettings::from_config(&Config::default()).unwrap();
        assert_eq!(
            kernels(&space, "poisson-deriv", OperatorKind::Square, &s)
                .unwrap()
                .len(),
            2
        );
        assert_eq!(
            kernels(&space, "heat-deriv", OperatorKind::Maximal, &s).unwrap().len(),
            3
        );
        assert!(CorollarySettings::from_config(&Config::parse("[corollaries]\nfamilies = wave\n").unwrap()).is_err());
    }
}
