use std::sync::Arc;

use serde_json::json;

use super::index_suite::left_right;
use super::{run_jobs, Assertion, Job, ScenarioResult, SuiteConfig};
use crate::error::{Error, Result};
use crate::geometry::{bordant, build_domain, make_partition, BoundingBox, CutSpec, ShapeSpec};
use crate::index::{prepare, theta_report, IndexParams, IndexReport, Prepared};
use crate::operators::{boundary_perturbation, FluxSpec, Model};

const DRIFT: f64 = 0.05;
const SIZE: (usize, usize) = (30, 60);
const CUT: CutSpec = CutSpec::Horizontal { y: 30 };

/// `(left, right)` crossing values.
fn pair(r: &IndexReport) -> Result<[f64; 2]> {
    let (l, rt) = left_right(r).ok_or_else(|| Error::Crossings(format!("expected 2 crossings, found {}", r.crossings.len())))?;
    Ok([r.crossings[l].value, r.crossings[rt].value])
}

fn compare(r: &mut ScenarioResult, base: [f64; 2], report: &IndexReport) -> Result<()> {
    let v = pair(report)?;
    for (k, side) in ["left", "right"].iter().enumerate() {
        r.check(Assertion::near(format!("rounded_{side}"), base[k].round(), v[k].round(), 0.0));
        r.check(Assertion::near(format!("drift_{side}"), base[k], v[k], DRIFT));
    }
    r.data["values"] = json!(v);
    r.data["base"] = json!(base);
    Ok(())
}

/// Turns an inadmissible deformation into a skipped scenario.
fn guarded(name: String, f: impl Fn(&mut ScenarioResult) -> Result<()>) -> Result<ScenarioResult> {
    let mut r = ScenarioResult::new(name);
    r.data = json!({});
    match f(&mut r) {
        Ok(()) => Ok(r),
        Err(Error::Inadmissible(rep)) => {
            r.skipped = Some("deformed partition is not admissible".into());
            r.data["admissibility"] = json!(rep);
            Ok(r)
        }
        Err(e) => Err(e),
    }
}

/// Base flux 1/3 strip and its bordant deformations: moved and bent cuts,
/// rough boundaries, and boundary-supported perturbations of norm gap/4.
pub fn run_cobordism_suite(cfg: &SuiteConfig) -> Result<Vec<ScenarioResult>> {
    let model = Model::new(FluxSpec::new(1, 3)?);
    let flat = ShapeSpec::Strip { x0: 0, width: SIZE.0, periodic_y: false };
    let domain = build_domain(&flat, BoundingBox::new(SIZE.0, SIZE.1))?;
    let base_p = make_partition(&domain, &CUT)?;
    let prep = Arc::new(prepare(&domain, &model, 1, None)?);
    let params = IndexParams { window: cfg.window, ..IndexParams::default() };
    let base_report = theta_report(&prep, &base_p, &params)?;
    let base = pair(&base_report)?;
    let mut base_result = ScenarioResult::new("base");
    base_result.check(Assertion::near("base_left", 1.0, base[0], DRIFT));
    base_result.check(Assertion::near("base_right", -1.0, base[1], DRIFT));
    base_result.data = json!({ "flux": model.flux, "size": [SIZE.0, SIZE.1], "cut": CUT, "values": base });

    let mut jobs: Vec<Job> = Vec::new();
    let cuts = [
        ("cut_translated_down", CutSpec::Horizontal { y: 26 }),
        ("cut_translated_up", CutSpec::Horizontal { y: 34 }),
        ("cut_bent_up", CutSpec::Bent { x_bend: 15, y_left: 27, y_right: 33 }),
        ("cut_bent_down", CutSpec::Bent { x_bend: 15, y_left: 33, y_right: 27 }),
    ];
    for (name, cut) in cuts {
        let (prep, params, domain, base_p) = (prep.clone(), params.clone(), domain.clone(), base_p.clone());
        jobs.push(Box::new(move || {
            guarded(name.into(), |r| {
                let p = make_partition(&domain, &cut)?;
                let b = bordant(&base_p, &p, &domain, None, params.r_max);
                r.check(Assertion::holds("bordant", b.bordant));
                let rep = theta_report(&prep, &p, &params)?;
                r.data = json!({ "cut": cut, "bordance": b });
                compare(r, base, &rep)
            })
        }));
    }
    for k in 0..cfg.variants as u64 {
        let seed = cfg.seed.wrapping_add(k);
        let (model, params) = (model.clone(), params.clone());
        jobs.push(Box::new(move || {
            guarded(format!("rough_seed_{seed}"), |r| {
                let shape = ShapeSpec::RoughStrip { x0: 0, width: SIZE.0, periodic_y: false, max_depth: 3, seed };
                let d = build_domain(&shape, BoundingBox::new(SIZE.0, SIZE.1))?;
                let p = make_partition(&d, &CUT)?;
                let prep: Prepared = prepare(&d, &model, 1, None)?;
                let rep = theta_report(&prep, &p, &params)?;
                r.data = json!({ "shape": shape, "sites": d.len() });
                compare(r, base, &rep)
            })
        }));
    }
    for k in 0..cfg.variants as u64 {
        let seed = cfg.seed.wrapping_add(1000 + k);
        let (model, params, domain, base_p) = (model.clone(), params.clone(), domain.clone(), base_p.clone());
        let norm = prep.gap.width() / 4.0;
        jobs.push(Box::new(move || {
            guarded(format!("perturbation_seed_{seed}"), |r| {
                let v = boundary_perturbation(&domain, 2.0, norm, seed)?;
                let prep = prepare(&domain, &model, 1, Some(&v))?;
                let rep = theta_report(&prep, &base_p, &params)?;
                r.data = json!({ "seed": seed, "norm": norm, "depth": 2.0 });
                compare(r, base, &rep)
            })
        }));
    }
    let mut out = vec![base_result];
    out.extend(run_jobs(jobs)?);
    let variants = out.iter().filter(|s| s.name != "base" && s.skipped.is_none()).count();
    let mut summary = ScenarioResult::new("variant_count");
    summary.check(Assertion::at_least("admissible_variants", variants as f64, 10.0));
    out.push(summary);
    Ok(out)
}
