//! Size, smoothness and variation bounds of G_t(x, y) for a list of kernels, each
//! evaluated on the default sample and on the refined one.

use bessel_harmonic::operators::{kernel_bounds, KernelBounds, KernelSample};
use bessel_harmonic::LambdaSpace;
use serde_json::json;

use crate::config::Config;
use crate::report::{num, Check, Report};
use crate::setup::{parallel_map, parse_profile};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReportSettings {
    pub lambda: f64,
    /// Kernel names; `bochner-riesz` without an order means α = λ+3.
    pub kernels: Vec<String>,
    pub sample: KernelSample,
    pub tolerance: f64,
}

impl KernelReportSettings {
    pub const KEYS: [&'static str; 8] = [
        "grid.lambda",
        "kernels.names",
        "kernels.x_min",
        "kernels.x_max",
        "kernels.points",
        "kernels.t_points_per_decade",
        "kernels.rho",
        "kernels.tolerance",
    ];

    pub fn from_config(config: &Config) -> Result<Self> {
        let d = KernelSample::default();
        let lambda = config.value_or("grid.lambda", 1.0)?;
        let kernels = config.list_or::<String>(
            "kernels.names",
            &["heat".to_string(), "poisson".to_string(), "bochner-riesz".to_string()],
        )?;
        Ok(Self {
            lambda,
            kernels: kernels
                .into_iter()
                .map(|k| {
                    if k == "bochner-riesz" {
                        format!("bochner-riesz:{}", lambda + 3.0)
                    } else {
                        k
                    }
                })
                .collect(),
            sample: KernelSample {
                x_min: config.value_or("kernels.x_min", d.x_min)?,
                x_max: config.value_or("kernels.x_max", d.x_max)?,
                points: config.value_or("kernels.points", d.points)?,
                t_points_per_decade: config.value_or("kernels.t_points_per_decade", d.t_points_per_decade)?,
                rho: config.value_or("kernels.rho", d.rho)?,
                ..d
            },
            tolerance: config.value_or("kernels.tolerance", 0.05)?,
        })
    }
}

fn finite(b: &KernelBounds) -> bool {
    b.products().iter().all(|(_, p)| p.value.is_finite())
}

pub fn kernel_report(settings: &KernelReportSettings, jobs: usize) -> Result<Report> {
    let space = LambdaSpace::new(settings.lambda)?;
    let mut report = Report::new("kernel-report", &["kernel", "sample", "bound", "value", "x", "y"]);
    let refined = settings.sample.refined();
    let runs: Vec<(usize, bool)> = (0..settings.kernels.len())
        .flat_map(|k| [(k, false), (k, true)])
        .collect();
    let profiles = settings
        .kernels
        .iter()
        .map(|k| parse_profile(&space, k))
        .collect::<Result<Vec<_>>>()?;
    let bounds: Vec<Result<KernelBounds>> = parallel_map(&runs, jobs, |&(k, fine)| {
        let sample = if fine { &refined } else { &settings.sample };
        Ok(kernel_bounds(&space, &profiles[k], sample)?)
    });
    let bounds: Vec<KernelBounds> = bounds.into_iter().collect::<Result<_>>()?;
    for (k, name) in settings.kernels.iter().enumerate() {
        let (coarse, fine) = (&bounds[2 * k], &bounds[2 * k + 1]);
        for (label, b) in [("default", coarse), ("refined", fine)] {
            report.note(b.to_string());
            for (bound, p) in b.products() {
                report.row(vec![
                    name.clone(),
                    label.to_string(),
                    bound.to_string(),
                    num(p.value),
                    num(p.x),
                    num(p.y),
                ]);
            }
        }
        let change = if finite(coarse) && finite(fine) {
            coarse.max_change(fine)
        } else {
            f64::INFINITY
        };
        report.extra.insert(
            name.clone(),
            json!({
                "size": coarse.size.value,
                "dx": coarse.dx.value,
                "dy": coarse.dy.value,
                "variation": coarse.variation.value,
                "change": if change.is_finite() { json!(change) } else { json!(null) },
            }),
        );
        report.check(Check::at_most(
            format!("refinement change {name}"),
            change,
            settings.tolerance,
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_order_follows_lambda() {
        let c = Config::parse("[grid]\nlambda = 2\n[kernels]\nnames = heat, bochner-riesz\n").unwrap();
        let s = KernelReportSettings::from_config(&c).unwrap();
        assert_eq!(s.kernels, vec!["heat".to_string(), "bochner-riesz:5".to_string()]);
    }

    #[test]
    fn constant_profile_fails() {
        let s = KernelReportSettings {
            lambda: 1.0,
            kernels: vec!["constant".into()],
            sample: KernelSample {
                points: 6,
                ..KernelSample::default()
            },
            tolerance: 0.05,
        };
        let r = kernel_report(&s, 2).unwrap();
        assert!(!r.passed());
        assert_eq!(r.rows.len(), 8);
    }
}
