//! Sparse domination of |Tf| for one operator and input, with the family dumped as JSON lines.

use bessel_harmonic::weights::{extract_sparse, sparse_bound, Cube, DyadicSystem, SparseParams};
use serde_json::json;

use crate::config::Config;
use crate::report::{num, Check, Report};
use crate::setup::{input, scan_profile, OperatorKind, Setup};
use crate::{ExperimentError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseDemoSettings {
    pub operator: OperatorKind,
    pub kernel: String,
    pub input: String,
    /// `root` or `level:index`.
    pub cube: String,
    pub params: SparseParams,
}

impl SparseDemoSettings {
    pub const KEYS: [&'static str; 9] = [
        "sparse.operator",
        "sparse.kernel",
        "sparse.input",
        "sparse.cube",
        "sparse.alpha_stop",
        "sparse.c_level",
        "sparse.density",
        "sparse.eta_target",
        "sparse.retries",
    ];

    pub fn from_config(config: &Config) -> Result<Self> {
        let d = SparseParams::default();
        Ok(Self {
            operator: config.value_or("sparse.operator", OperatorKind::HardyLittlewood)?,
            kernel: config.value_or("sparse.kernel", "poisson".to_string())?,
            input: config.value_or("sparse.input", "two-bump".to_string())?,
            cube: config.value_or("sparse.cube", "root".to_string())?,
            params: SparseParams {
                alpha_stop: config.value_or("sparse.alpha_stop", d.alpha_stop)?,
                c_level: config.value_or("sparse.c_level", d.c_level)?,
                density: config.value_or("sparse.density", d.density)?,
                eta_target: config.value_or("sparse.eta_target", d.eta_target)?,
                retries: config.value_or("sparse.retries", d.retries)?,
            },
        })
    }
}

fn pick_cube(system: &DyadicSystem, spec: &str) -> Result<Cube> {
    if spec.trim() == "root" {
        return Ok(system.root());
    }
    let bad = || ExperimentError::Config(format!("sparse.cube: expected root or level:index, got {spec:?}"));
    let (k, i) = spec.split_once(':').ok_or_else(bad)?;
    let k: usize = k.trim().parse().map_err(|_| bad())?;
    let i: u64 = i.trim().parse().map_err(|_| bad())?;
    if k >= system.depth() {
        return Err(ExperimentError::Config(format!(
            "sparse.cube: level {k} exceeds depth {}",
            system.depth()
        )));
    }
    system
        .level(k)
        .iter()
        .find(|c| c.index == i)
        .copied()
        .ok_or_else(|| ExperimentError::Config(format!("sparse.cube: no cube {k}:{i} in the grid system")))
}

pub fn sparse_demo(setup: &Setup, settings: &SparseDemoSettings) -> Result<Report> {
    let mut report = Report::new("sparse-demo", &["x", "abs_tf", "sparse_bound", "margin"]);
    let profile = scan_profile(&setup.space, settings.operator, &settings.kernel)?;
    let op = setup.operator(settings.operator, profile.as_ref())?;
    let f = input(&setup.grid, &settings.input)?;
    let system = DyadicSystem::for_grid(&setup.grid)?;
    let q0 = pick_cube(&system, &settings.cube)?;
    report.note(format!(
        "{} dyadic cubes over {} levels; Q0 = [{:.6e}, {:.6e})",
        system.len(),
        system.depth(),
        q0.left,
        q0.right
    ));
    let family = extract_sparse(&setup.space, op.as_ref(), &f, &system, q0, &settings.params)?;
    let tf = op.apply_all(&f)?;
    let bound = sparse_bound(&setup.space, &family, &f)?;
    for ((&x, &t), &b) in setup.grid.nodes().iter().zip(tf.values()).zip(bound.values()) {
        if q0.contains(x) {
            let margin = if t == 0.0 { 0.0 } else { t.abs() / b };
            report.row(vec![num(x), num(t.abs()), num(b), num(margin)]);
        }
    }
    let mut jsonl = Vec::new();
    family.write_jsonl(&setup.space, &mut jsonl)?;
    report.attachments.push(("family.jsonl".to_string(), jsonl));
    report.note(format!(
        "{} cubes after {} attempt(s): alpha = {}, c = {}, C_T = {:.6e}, C_dom = {:.6e}",
        family.len(),
        family.attempts,
        family.alpha_stop,
        family.c_level,
        family.c_t,
        family.c_dom
    ));
    report.extra.insert(
        "family".to_string(),
        json!({
            "cubes": family.len(),
            "eta": family.eta,
            "overlap": family.overlap,
            "alpha_stop": family.alpha_stop,
            "c_level": family.c_level,
            "c_t": family.c_t,
            "c_dom": family.c_dom,
            "attempts": family.attempts,
        }),
    );
    report.check(Check::at_least("eta", family.eta, settings.params.eta_target));
    report.check(Check::at_most("domination constant", family.c_dom, f64::MAX));
    report.check(Check::at_most("overlap", family.overlap as f64, 1.0));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hl_demo_on_a_small_grid() {
        let setup = Setup::new(1.0, 2.0, 16).unwrap();
        let s = SparseDemoSettings::from_config(&Config::default()).unwrap();
        let r = sparse_demo(&setup, &s).unwrap();
        assert!(r.passed(), "{:?}", r.log);
        assert_eq!(r.attachments[0].0, "family.jsonl");
        assert!(!r.rows.is_empty());
    }

    #[test]
    fn cube_specs() {
        let setup = Setup::new(1.0, 2.0, 16).unwrap();
        let system = DyadicSystem::for_grid(&setup.grid).unwrap();
        assert_eq!(pick_cube(&system, "root").unwrap(), system.root());
        assert_eq!(pick_cube(&system, "1:0").unwrap().level, 1);
        assert!(pick_cube(&system, "99:0").is_err());
        assert!(pick_cube(&system, "x").is_err());
    }
}
