use serde_json::json;

use super::{run_jobs, Assertion, Job, ScenarioResult, SuiteConfig};
use crate::bloch::bulk_gaps;
use crate::current::current_report;
use crate::error::Result;
use crate::geometry::{build_domain, make_partition, BoundingBox, CutSpec, ShapeSpec};
use crate::index::{prepare, IndexParams};
use crate::operators::{FluxSpec, Model};
use crate::spectral::{apply_function, eigendecompose, kernel_decay_profile, make_smoothstep, DecayProfile, StepKind};

pub(crate) const PERIODIZATION_RATIO: f64 = 1e-3;
pub(crate) const CURRENT_RATIO: f64 = 1e-2;

fn table_csv(table: &[f64]) -> String {
    let mut out = String::from("distance,max_entry\n");
    for (k, v) in table.iter().enumerate() {
        out.push_str(&format!("{k},{v:.12e}\n"));
    }
    out
}

/// `φ(H_W) - compress(φ(H_X))` for the half-cylinder `W` of a 60×30 torus.
fn periodization() -> Result<ScenarioResult> {
    let mut r = ScenarioResult::new("periodization_decay");
    let model = Model::new(FluxSpec::new(1, 3)?);
    let bbox = BoundingBox::new(60, 30);
    let x = build_domain(&ShapeSpec::Torus, bbox)?;
    let w = build_domain(&ShapeSpec::Strip { x0: 0, width: 30, periodic_y: true }, bbox)?;
    let gap = bulk_gaps(&model)[0];
    let phi = make_smoothstep((gap.lo, gap.hi), StepKind::Quintic)?;
    let fx = apply_function(&eigendecompose(&model.hamiltonian(&x)?)?, |l| phi.phi(l))?;
    let fw = apply_function(&eigendecompose(&model.hamiltonian(&w)?)?, |l| phi.phi(l))?;
    let diff = fw.matrix() - fx.compress(&x, &w)?.matrix();
    let profile = kernel_decay_profile(&diff.view(), &w);
    let own = kernel_decay_profile(&fw.view(), &w);
    let ratio = DecayProfile::ratio(&profile.boundary, 10, 2).unwrap_or(f64::INFINITY);
    r.check(Assertion::holds("monotone_to_10", DecayProfile::decreasing(&profile.boundary, 10)));
    r.check(Assertion::at_most("ratio_10_over_2", ratio, PERIODIZATION_RATIO));
    r.data = json!({
        "flux": model.flux,
        "gap": gap,
        "boundary_table": profile.boundary,
        "ratio_10_over_2": ratio,
        "phi_diagonal_table": own.diagonal,
        "phi_diagonal_ratio_10_over_2": DecayProfile::ratio(&own.diagonal, 10, 2),
    });
    r.artifact("boundary_decay.csv", table_csv(&profile.boundary));
    Ok(r)
}

/// Current density against distance to the crossings on the flux 1/3 strip.
fn current_decay(cfg: &SuiteConfig) -> Result<ScenarioResult> {
    let mut r = ScenarioResult::new("current_density_decay");
    let model = Model::new(FluxSpec::new(1, 3)?);
    let d = build_domain(&ShapeSpec::Strip { x0: 0, width: 30, periodic_y: false }, BoundingBox::new(30, 60))?;
    let p = make_partition(&d, &CutSpec::Horizontal { y: 30 })?;
    let prep = prepare(&d, &model, 1, None)?;
    let rep = current_report(&prep, &p, &IndexParams { window: cfg.window, ..IndexParams::default() })?;
    let ratio = rep.decay_ratio.unwrap_or(f64::INFINITY);
    r.check(Assertion::at_most("ratio_10_over_2", ratio, CURRENT_RATIO));
    r.data = json!({ "flux": model.flux, "table": rep.decay, "ratio_10_over_2": ratio });
    r.artifact("current_decay.csv", table_csv(&rep.decay));
    Ok(r)
}

pub fn run_decay(cfg: &SuiteConfig) -> Result<Vec<ScenarioResult>> {
    let cfg = cfg.clone();
    let jobs: Vec<Job> = vec![Box::new(periodization), Box::new(move || current_decay(&cfg))];
    run_jobs(jobs)
}
