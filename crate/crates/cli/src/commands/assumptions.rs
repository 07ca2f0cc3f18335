use mixup_core::assumptions::{
    check_assumption1, check_assumption2, estimate_epsilon, margin_radius, write_violations_csv,
    EpsilonEstimate,
};
use mixup_core::oracle::default_tol_line;
use serde::Serialize;

use super::num;
use crate::config::{config_error, AssumptionsConfig, Check};
use crate::output::{csv_text, RunDir};

#[derive(Serialize)]
struct SeparationResult {
    reference: String,
    estimate: EpsilonEstimate,
}

#[derive(Serialize)]
struct PointwiseResult {
    point: Vec<f64>,
    class: usize,
    holds: bool,
    outside_xmix: bool,
    /// (p, q) index pairs of the offending segments.
    witnesses: Vec<(usize, usize)>,
}

#[derive(Serialize, Default)]
struct Summary {
    dataset: String,
    mixing: String,
    collinearity_violations: Option<usize>,
    margin_radii: Option<Vec<f64>>,
    separation: Option<Vec<SeparationResult>>,
    pointwise_margin: Option<PointwiseResult>,
}

pub fn run(config: &AssumptionsConfig, dir: &RunDir) -> anyhow::Result<String> {
    let ds = config.dataset.load()?;
    let dist = config.mixing.build()?;
    let mut summary = Summary {
        dataset: ds.name().to_string(),
        mixing: dist.label(),
        ..Summary::default()
    };
    // long-form table: check, subject, value
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut line = Vec::new();

    for check in &config.checks {
        match check {
            Check::Collinearity => {
                let violations = check_assumption1(&ds, config.tol);
                dir.write_with("violations.csv", |buf| {
                    write_violations_csv(&violations, buf)
                })?;
                rows.push(vec![
                    "collinearity".into(),
                    "violations".into(),
                    violations.len().to_string(),
                ]);
                line.push(format!("{} collinearity violation(s)", violations.len()));
                summary.collinearity_violations = Some(violations.len());
            }
            Check::Margin => {
                let radii: Vec<f64> = (1..=ds.k()).map(|c| margin_radius(&ds, c)).collect();
                for (c, r) in radii.iter().enumerate() {
                    rows.push(vec!["margin".into(), format!("class {}", c + 1), num(*r)]);
                }
                summary.margin_radii = Some(radii);
            }
            Check::Epsilon => {
                let samples = config.samples.unwrap_or(ds.len());
                let mut results = vec![SeparationResult {
                    reference: "train".into(),
                    estimate: estimate_epsilon(&ds, &dist, samples, &ds, config.seed)?,
                }];
                for (i, spec) in config.references.iter().enumerate() {
                    let reference = spec.load()?;
                    results.push(SeparationResult {
                        reference: format!("reference {}: {}", i + 1, reference.name()),
                        estimate: estimate_epsilon(&ds, &dist, samples, &reference, config.seed)?,
                    });
                }
                for r in &results {
                    rows.push(vec![
                        "epsilon".into(),
                        r.reference.clone(),
                        num(r.estimate.min_distance),
                    ]);
                    line.push(format!(
                        "Mixup/{} minimum distance {:.4}",
                        r.reference, r.estimate.min_distance
                    ));
                }
                summary.separation = Some(results);
            }
            Check::Assumption2 => {
                let probe = config.probe.as_ref().ok_or_else(|| {
                    config_error("probe", "the pointwise margin check needs a probe")
                })?;
                if probe.point.len() != ds.dim() {
                    return Err(config_error(
                        "probe",
                        format!(
                            "probe has dimension {}, data has {}",
                            probe.point.len(),
                            ds.dim()
                        ),
                    )
                    .into());
                }
                let report = check_assumption2(
                    &ds,
                    &dist,
                    &probe.point,
                    probe.class,
                    probe.eps,
                    probe.delta,
                    default_tol_line(&ds),
                )?;
                rows.push(vec![
                    "assumption2".into(),
                    "holds".into(),
                    report.holds.to_string(),
                ]);
                line.push(format!("pointwise margin holds: {}", report.holds));
                summary.pointwise_margin = Some(PointwiseResult {
                    point: probe.point.clone(),
                    class: probe.class,
                    holds: report.holds,
                    outside_xmix: report.outside_xmix,
                    witnesses: report
                        .witnesses
                        .iter()
                        .map(|w| (w.p_index, w.q_index))
                        .collect(),
                });
            }
        }
    }
    let header = ["check", "subject", "value"].map(String::from);
    dir.write("results.csv", csv_text(&header, &rows)?)?;
    dir.write_json("summary.json", &summary)?;
    Ok(if line.is_empty() {
        "no checks run".into()
    } else {
        line.join("; ")
    })
}
