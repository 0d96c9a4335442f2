use serde_json::json;

use super::svg::spectrum_strip;
use super::{run_jobs, Assertion, Job, ScenarioResult, SuiteConfig};
use crate::error::Result;
use crate::geometry::{build_domain, BoundingBox, ShapeSpec};
use crate::operators::{FluxSpec, Model};
use crate::spectral::{default_min_width, detect_gaps, eigenvalues, gap_filling_ratio, GapReport};

pub(crate) const FILLED: f64 = 0.95;
pub(crate) const EMPTY: f64 = 0.05;

/// Bulk gaps of `model` read off a torus spectrum, with the domain's fill fractions.
pub(crate) fn fill_fractions(
    model: &Model,
    shape: &ShapeSpec,
    size: (usize, usize),
    bulk: (usize, usize),
    resolution: f64,
) -> Result<(GapReport, Vec<f64>, Vec<f64>)> {
    let torus = build_domain(&ShapeSpec::Torus, BoundingBox::new(bulk.0, bulk.1))?;
    let bulk_spec = eigenvalues(&model.hamiltonian(&torus)?)?;
    let mut report = detect_gaps(&bulk_spec, default_min_width(&bulk_spec));
    let domain = build_domain(shape, BoundingBox::new(size.0, size.1))?;
    let spec = eigenvalues(&model.hamiltonian(&domain)?)?;
    // one resolution per gap: a fixed fraction of its width
    let fill = report
        .gaps
        .iter()
        .map(|g| {
            let single = GapReport { gaps: vec![*g], min_width: report.min_width, fill_fraction: vec![] };
            gap_filling_ratio(&single, &spec, resolution * g.width()).map(|v| v[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    report.fill_fraction = fill.clone();
    Ok((report, fill, spec))
}

enum Expect {
    /// Listed gaps (0-based) must be filled.
    Filled(Vec<usize>),
    Empty,
}

fn fill_scenario(name: &str, model: Model, shape: ShapeSpec, size: (usize, usize), expect: Expect) -> Result<ScenarioResult> {
    let mut r = ScenarioResult::new(name);
    let (report, fill, spec) = fill_fractions(&model, &shape, size, (30, 30), 0.05)?;
    match &expect {
        Expect::Filled(gaps) => {
            r.check(Assertion::at_least("bulk_gap_count", report.gaps.len() as f64, (gaps.iter().max().unwrap() + 1) as f64));
            for &g in gaps {
                r.check(Assertion::at_least(format!("fill_gap_{}", g + 1), fill.get(g).copied().unwrap_or(0.0), FILLED));
            }
        }
        Expect::Empty => {
            for (g, f) in fill.iter().enumerate() {
                r.check(Assertion::at_most(format!("fill_gap_{}", g + 1), *f, EMPTY));
            }
        }
    }
    r.data = json!({
        "flux": model.flux,
        "stagger": model.stagger,
        "shape": shape,
        "size": [size.0, size.1],
        "bulk_size": [30, 30],
        "resolution": 0.05,
        "gaps": report.gaps,
        "fill": fill,
    });
    let mut csv = String::from("index,eigenvalue\n");
    for (i, e) in spec.iter().enumerate() {
        csv.push_str(&format!("{i},{e:.12e}\n"));
    }
    r.artifact("spectrum.csv", csv);
    r.artifact("spectrum.svg", spectrum_strip(&spec, &report.gaps, &format!("{name}: domain spectrum, bulk gaps shaded")));
    Ok(r)
}

/// One-sided Hausdorff distance from the bulk spectrum to a domain spectrum.
fn containment_defect(bulk: &[f64], domain: &[f64]) -> f64 {
    bulk.iter()
        .map(|&e| {
            let k = domain.partition_point(|&d| d < e);
            let mut best = f64::INFINITY;
            if k < domain.len() {
                best = best.min(domain[k] - e);
            }
            if k > 0 {
                best = best.min(e - domain[k - 1]);
            }
            best
        })
        .fold(0.0, f64::max)
}

fn containment_trend() -> Result<ScenarioResult> {
    let mut r = ScenarioResult::new("containment_trend");
    let model = Model::new(FluxSpec::new(1, 3)?);
    let torus = build_domain(&ShapeSpec::Torus, BoundingBox::new(30, 30))?;
    let bulk = eigenvalues(&model.hamiltonian(&torus)?)?;
    let mut rows = Vec::new();
    for width in [12, 18, 24, 30] {
        let d = build_domain(&ShapeSpec::Cylinder, BoundingBox::new(width, 30))?;
        let spec = eigenvalues(&model.hamiltonian(&d)?)?;
        rows.push((width, containment_defect(&bulk, &spec)));
    }
    let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    r.check(Assertion::holds("defect_nonincreasing_in_width", monotone));
    r.data = json!({
        "flux": model.flux,
        "bulk_size": [30, 30],
        "widths": rows.iter().map(|(w, _)| w).collect::<Vec<_>>(),
        "defect": rows.iter().map(|(_, d)| d).collect::<Vec<_>>(),
    });
    Ok(r)
}

pub fn run_gap_filling(_cfg: &SuiteConfig) -> Result<Vec<ScenarioResult>> {
    let jobs: Vec<Job> = vec![
        Box::new(|| {
            fill_scenario("flux_1_3_cylinder", Model::new(FluxSpec::new(1, 3)?), ShapeSpec::Cylinder, (30, 90), Expect::Filled(vec![0, 1]))
        }),
        Box::new(|| {
            fill_scenario("flux_1_5_cylinder", Model::new(FluxSpec::new(1, 5)?), ShapeSpec::Cylinder, (30, 120), Expect::Filled(vec![1]))
        }),
        Box::new(|| fill_scenario("trivial_insulator", Model::staggered(1.0), ShapeSpec::Cylinder, (30, 90), Expect::Empty)),
        Box::new(|| {
            let mut r = ScenarioResult::new("torus_vs_torus");
            let model = Model::new(FluxSpec::new(1, 3)?);
            let (report, fill, _) = fill_fractions(&model, &ShapeSpec::Torus, (30, 30), (30, 30), 0.05)?;
            for (g, f) in fill.iter().enumerate() {
                r.check(Assertion::near(format!("fill_gap_{}", g + 1), 0.0, *f, 0.0));
            }
            r.data = json!({ "flux": model.flux, "gaps": report.gaps, "fill": fill });
            Ok(r)
        }),
        Box::new(containment_trend),
    ];
    run_jobs(jobs)
}

/// A nonzero index at `(flux, gap)` requires that gap to be filled on the
/// matching gap-filling scenario.
pub(crate) fn cross_consistency(all: &[ScenarioResult]) -> ScenarioResult {
    let mut r = ScenarioResult::new("cross_consistency");
    let mut rows = Vec::new();
    for s in all.iter().filter(|s| s.name.starts_with("index/")) {
        let (Some(flux), Some(gap)) = (s.data.get("flux"), s.data.get("gap_index").and_then(|g| g.as_u64())) else {
            continue;
        };
        let nonzero = s
            .data
            .get("rounded")
            .and_then(|v| v.as_array())
            .is_some_and(|v| v.iter().any(|x| x.as_i64() != Some(0)));
        if !nonzero {
            continue;
        }
        let fill = all
            .iter()
            .filter(|g| g.name.starts_with("gapfill/") && g.data.get("flux") == Some(flux) && g.data.get("stagger").and_then(|m| m.as_f64()) == Some(0.0))
            .find_map(|g| g.data.get("fill").and_then(|f| f.get(gap as usize - 1)).and_then(|f| f.as_f64()));
        let name = format!("{}_fill", s.name.trim_start_matches("index/"));
        r.check(Assertion::at_least(name, fill.unwrap_or(0.0), FILLED));
        rows.push(json!({ "scenario": s.name, "flux": flux, "gap_index": gap, "fill": fill }));
    }
    r.check(Assertion::at_least("pairs_checked", rows.len() as f64, 1.0));
    r.data = json!({ "pairs": rows });
    r
}
