use serde_json::json;

use super::svg::heat_map;
use super::{run_jobs, site_csv, Assertion, Job, ScenarioResult, SuiteConfig};
use crate::error::Result;
use crate::geometry::{build_domain, make_partition, BoundaryTag, BoundingBox, CutSpec, ShapeSpec};
use crate::index::{exp_unitary, prepare, relative_index_density, theta_report, IndexParams, CONVENTION_SIGN};
use crate::operators::{FluxSpec, Model, ProjectionOperator};
use crate::spectral::{make_smoothstep, StepKind};

const TOL: f64 = 0.08;

struct Case {
    name: &'static str,
    flux: (i64, i64),
    gap_index: usize,
    j: f64,
    size: usize,
    h: f64,
    offset: f64,
}

fn physical(r: &crate::index::IndexReport) -> usize {
    r.crossings.iter().filter(|c| matches!(c.tag, BoundaryTag::Physical(_))).count()
}

fn run_case(case: &Case, cfg: &SuiteConfig) -> Result<ScenarioResult> {
    let mut r = ScenarioResult::new(case.name);
    let tol = cfg.tolerance.unwrap_or(TOL);
    let model = Model::new(FluxSpec::new(case.flux.0, case.flux.1)?);
    let shape = ShapeSpec::TwoBoundary { h: case.h };
    let domain = build_domain(&shape, BoundingBox::new(case.size, case.size))?;
    let prep = prepare(&domain, &model, case.gap_index, None)?;
    let params = IndexParams { gap_index: case.gap_index, window: cfg.window, ..IndexParams::default() };
    let c = (case.size as f64 - 1.0) / 2.0;
    let n1 = make_partition(&domain, &CutSpec::Horizontal { y: (c - case.offset).round() as i32 })?;
    let n2 = make_partition(&domain, &CutSpec::Horizontal { y: (c + case.offset).round() as i32 })?;
    let n3 = make_partition(&domain, &CutSpec::Diagonal { offset: 0 })?;

    let r1 = theta_report(&prep, &n1, &params)?;
    let r2 = theta_report(&prep, &n2, &params)?;
    let r3 = theta_report(&prep, &n3, &params)?;
    let r2s = theta_report(&prep, &n2.swap(), &params)?;
    r.check(Assertion::near("n1_physical_crossings", 1.0, physical(&r1) as f64, 0.0));
    r.check(Assertion::near("n2_physical_crossings", 1.0, physical(&r2) as f64, 0.0));
    r.check(Assertion::near("n3_physical_crossings", 0.0, physical(&r3) as f64, 0.0));
    r.check(Assertion::near("theta_n1", -case.j, r1.theta, tol));
    r.check(Assertion::near("theta_n2", case.j, r2.theta, tol));
    r.check(Assertion::near("theta_n3", 0.0, r3.theta, tol));
    r.check(Assertion::near("theta_n2_swapped", -case.j, r2s.theta, tol));

    // N3 only meets the window corners; probe the saddle region directly.
    let phi = make_smoothstep((prep.gap.lo, prep.gap.hi), StepKind::Quintic)?;
    let u = exp_unitary(&prep.ed, &phi);
    let dens = relative_index_density(&u, &ProjectionOperator::from_mask(n3.plus_mask().to_vec()))?;
    let reach = 2.0 * case.h;
    let probe: f64 = CONVENTION_SIGN
        * domain
            .sites()
            .iter()
            .zip(&dens)
            .filter(|(s, _)| (s.x as f64 - c).hypot(s.y as f64 - c) <= reach)
            .map(|(_, v)| v)
            .sum::<f64>();
    r.check(Assertion::near("n3_saddle_probe", 0.0, probe, tol));

    r.data = json!({
        "flux": model.flux,
        "gap_index": case.gap_index,
        "size": case.size,
        "h": case.h,
        "cut_offset": case.offset,
        "theta": [r1.theta, r2.theta, r3.theta],
        "theta_n2_swapped": r2s.theta,
        "n3_saddle_probe": probe,
        "reports": [r1, r2, r3],
    });
    let signed: Vec<f64> = dens.iter().map(|v| CONVENTION_SIGN * v).collect();
    r.artifact("n3_relative_index_density.csv", site_csv(&domain, &signed));
    r.artifact("domain.csv", domain.to_csv());
    let d1 = relative_index_density(&u, &ProjectionOperator::from_mask(n1.plus_mask().to_vec()))?;
    let d1: Vec<f64> = d1.iter().map(|v| CONVENTION_SIGN * v).collect();
    r.artifact("n1_relative_index_density.svg", heat_map(&domain, &d1, &format!("{}: N1 relative index density", case.name)));
    Ok(r)
}

/// Region between two hyperbola branches, cut three ways.
pub fn run_two_boundary(cfg: &SuiteConfig) -> Result<Vec<ScenarioResult>> {
    let cases = [
        Case { name: "flux_1_3_gap_1", flux: (1, 3), gap_index: 1, j: 1.0, size: 48, h: 6.0, offset: 12.0 },
        Case { name: "flux_1_5_gap_2", flux: (1, 5), gap_index: 2, j: 2.0, size: 64, h: 8.0, offset: 16.0 },
    ];
    let jobs: Vec<Job> = cases
        .into_iter()
        .map(|case| {
            let cfg = cfg.clone();
            Box::new(move || run_case(&case, &cfg)) as Job
        })
        .collect();
    run_jobs(jobs)
}
