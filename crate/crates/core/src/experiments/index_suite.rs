use serde_json::json;

use super::svg::heat_map;
use super::{run_jobs, site_csv, Assertion, Job, ScenarioResult, SuiteConfig};
use crate::current::current_report;
use crate::error::Result;
use crate::geometry::{build_domain, make_partition, BoundingBox, CutSpec, ShapeSpec};
use crate::index::{
    chern_below_gap, exp_unitary, prepare, spectral_flow, theta_report, IndexParams, IndexReport,
};
use crate::operators::{FluxSpec, Model, UnitaryOperator};
use crate::spectral::{make_smoothstep, StepKind};

pub(crate) struct IndexCase {
    pub name: &'static str,
    pub model: Model,
    pub size: (usize, usize),
    pub cut_y: i32,
    pub gap_index: usize,
    /// Value at the left-edge crossing; the right edge carries the opposite.
    pub chern: i64,
    pub tolerance: f64,
    pub flow_samples: usize,
}

pub(crate) fn cases() -> Result<Vec<IndexCase>> {
    Ok(vec![
        IndexCase {
            name: "flux_1_3_gap_1",
            model: Model::new(FluxSpec::new(1, 3)?),
            size: (30, 60),
            cut_y: 30,
            gap_index: 1,
            chern: 1,
            tolerance: 0.05,
            flow_samples: 96,
        },
        IndexCase {
            name: "flux_1_5_gap_2",
            model: Model::new(FluxSpec::new(1, 5)?),
            size: (30, 90),
            cut_y: 45,
            gap_index: 2,
            chern: 2,
            tolerance: 0.08,
            flow_samples: 160,
        },
        IndexCase {
            name: "trivial_insulator",
            model: Model::staggered(1.0),
            size: (30, 60),
            cut_y: 30,
            gap_index: 1,
            chern: 0,
            tolerance: 0.02,
            flow_samples: 64,
        },
    ])
}

/// Spectral norm of `U - I` for a low-rank unitary with orthonormal `V`.
fn norm_from_identity(u: &UnitaryOperator) -> f64 {
    match u {
        UnitaryOperator::LowRank { d, .. } => d.iter().fold(0.0, |a, z| a.max(z.norm())),
        UnitaryOperator::Dense(_) => u.distance_from_identity(),
    }
}

pub(crate) fn left_right(r: &IndexReport) -> Option<(usize, usize)> {
    if r.crossings.len() != 2 {
        return None;
    }
    Some(if r.crossings[0].centroid.0 <= r.crossings[1].centroid.0 { (0, 1) } else { (1, 0) })
}

pub(crate) fn run_case(case: &IndexCase, cfg: &SuiteConfig) -> Result<ScenarioResult> {
    let mut r = ScenarioResult::new(case.name);
    let tol = cfg.tolerance.unwrap_or(case.tolerance);
    let j = case.chern as f64;
    let shape = ShapeSpec::Strip { x0: 0, width: case.size.0, periodic_y: false };
    let domain = build_domain(&shape, BoundingBox::new(case.size.0, case.size.1))?;
    let partition = make_partition(&domain, &CutSpec::Horizontal { y: case.cut_y })?;
    let prep = prepare(&domain, &case.model, case.gap_index, None)?;
    let params = IndexParams { gap_index: case.gap_index, window: cfg.window, ..IndexParams::default() };
    let report = theta_report(&prep, &partition, &params)?;
    let swapped = theta_report(&prep, &partition.swap(), &params)?;
    let current = current_report(&prep, &partition, &params)?;
    let mollified = current_report(&prep, &partition, &IndexParams { kind: StepKind::Mollifier, ..params.clone() })?;

    let Some((left, right)) = left_right(&report) else {
        r.check(Assertion::near("crossing_count", 2.0, report.crossings.len() as f64, 0.0));
        r.data = json!({ "flux": case.model.flux, "gap_index": case.gap_index, "report": report });
        return Ok(r);
    };
    r.check(Assertion::near("index_left", j, report.crossings[left].value, tol));
    r.check(Assertion::near("index_right", -j, report.crossings[right].value, tol));
    r.check(Assertion::at_most("total_trace", report.total_trace.abs(), 1e-9));
    let flip = report.crossings.iter().zip(&swapped.crossings).map(|(a, b)| (a.value + b.value).abs()).fold(0.0, f64::max);
    r.check(Assertion::at_most("swap_negates", flip, 1e-10));
    for (k, side) in [(left, "left"), (right, "right")] {
        let c = &current.crossings[k];
        r.check(Assertion::near(format!("current_{side}"), report.crossings[k].value, c.value, tol.min(0.05)));
        r.check(Assertion::near(format!("mollifier_{side}"), c.value, mollified.crossings[k].value, 0.02));
        r.check(Assertion::at_most(format!("antihermitian_{side}"), c.antihermitian.abs(), 1e-9));
    }
    r.check(Assertion::at_most("current_total", current.trace_total.abs(), 1e-9));

    let gap = prep.gap;
    let fermi = 0.5 * (gap.lo + gap.hi);
    let flow = spectral_flow(&case.model, case.size.0, fermi, case.flow_samples)?;
    r.check(Assertion::near("spectral_flow_left", j, flow.left as f64, 0.0));
    r.check(Assertion::near("spectral_flow_right", j, flow.right as f64, 0.0));
    let q = case.model.flux.q as usize;
    let cumulative = chern_below_gap(&case.model, case.gap_index, (6 * q).max(12))?;
    r.check(Assertion::near("chern_cumulative", j, cumulative as f64, 0.0));
    let u = exp_unitary(&prep.ed, &make_smoothstep((gap.lo, gap.hi), StepKind::Quintic)?);
    let twist = norm_from_identity(&u);
    if case.chern != 0 {
        r.check(Assertion::at_least("exp_unitary_twist", twist, 0.5));
    } else {
        r.check(Assertion::near("exp_unitary_twist", 0.0, twist, 1e-12));
    }

    r.data = json!({
        "flux": case.model.flux,
        "stagger": case.model.stagger,
        "gap_index": case.gap_index,
        "size": [case.size.0, case.size.1],
        "cut": partition.cut,
        "rounded": report.crossings.iter().map(|c| c.rounded).collect::<Vec<_>>(),
        "values": report.crossings.iter().map(|c| c.value).collect::<Vec<_>>(),
        "currents": current.crossings.iter().map(|c| c.value).collect::<Vec<_>>(),
        "mollifier_currents": mollified.crossings.iter().map(|c| c.value).collect::<Vec<_>>(),
        "current_decay_ratio": current.decay_ratio,
        "spectral_flow": flow,
        "chern_below_gap": cumulative,
        "exp_unitary_twist": twist,
        "report": report,
    });
    r.artifact("index_report.json", serde_json::to_string_pretty(&report)?);
    r.artifact("current_density.csv", site_csv(&domain, &current.density));
    r.artifact("current_density.svg", heat_map(&domain, &current.density, &format!("{}: current density", case.name)));
    Ok(r)
}

pub fn run_index_suite(cfg: &SuiteConfig) -> Result<Vec<ScenarioResult>> {
    let jobs: Vec<Job> = cases()?
        .into_iter()
        .map(|case| {
            let cfg = cfg.clone();
            Box::new(move || run_case(&case, &cfg)) as Job
        })
        .collect();
    run_jobs(jobs)
}
