use ndarray::Array2;
use serde_json::json;

use super::{run_jobs, Assertion, Job, ScenarioResult, SuiteConfig};
use crate::error::Result;
use crate::geometry::{build_domain, make_partition, BoundingBox, CutSpec, Domain, Partition, ShapeSpec, Site};
use crate::index::{localized_relative_index, total_relative_index, CrossingMap};
use crate::linalg;
use crate::operators::{hopping_unitary, ProjectionOperator, UnitaryOperator};

const RING: usize = 40;

fn ring() -> Result<(Domain, Partition)> {
    let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(RING, 1))?;
    let p = make_partition(&d, &CutSpec::Vertical { x: RING as i32 / 2 })?;
    Ok((d, p))
}

fn windowed(u: &UnitaryOperator, d: &Domain, p: &Partition) -> Result<(Vec<f64>, f64, Vec<Vec<usize>>)> {
    let map = CrossingMap::from_interface(d, p);
    let windows = map.windows(d, None);
    let pi = ProjectionOperator::from_mask(p.plus_mask().to_vec());
    let vals = windows.iter().map(|w| localized_relative_index(u, &pi, w)).collect::<Result<Vec<_>>>()?;
    Ok((vals, total_relative_index(u, &pi)?, windows))
}

fn shift_case(name: &str, u: UnitaryOperator, expected: [f64; 2]) -> Result<ScenarioResult> {
    let (d, p) = ring()?;
    let (vals, total, _) = windowed(&u, &d, &p)?;
    let mut r = ScenarioResult::new(name);
    r.check(Assertion::near("crossing_count", 2.0, vals.len() as f64, 0.0));
    for (k, (v, e)) in vals.iter().zip(expected).enumerate() {
        r.check(Assertion::near(format!("crossing_{k}"), e, *v, 1e-12));
    }
    r.check(Assertion::at_most("total_trace", total.abs(), 1e-12));
    r.data = json!({ "ring": RING, "values": vals, "total": total });
    Ok(r)
}

fn path(reverse: bool) -> Vec<Site> {
    let mut p: Vec<Site> = (0..RING as i32).map(|x| Site::new(x, 0)).collect();
    if reverse {
        p.reverse();
    }
    p
}

/// Kernel and cokernel of the compression `ΠvΠ` to `W₊`, counted per window.
fn toeplitz() -> Result<ScenarioResult> {
    let (d, p) = ring()?;
    let u = hopping_unitary(&d, &path(false), true)?;
    let (vals, _, windows) = windowed(&u, &d, &p)?;
    let plus: Vec<usize> = (0..d.len()).filter(|&i| p.in_plus(i)).collect();
    let dense = u.dense();
    let t = Array2::from_shape_fn((plus.len(), plus.len()), |(a, b)| dense[[plus[a], plus[b]]]);
    let null_space = |m: &Array2<_>| -> Result<Vec<Vec<f64>>> {
        let (e, v) = linalg::eigh(&m.view())?;
        Ok(e.iter()
            .enumerate()
            .filter(|(_, l)| l.abs() < 1e-10)
            .map(|(k, _)| v.column(k).iter().map(|z| z.norm_sqr()).collect())
            .collect())
    };
    let ker = null_space(&linalg::gemm(&t.view(), true, &t.view(), false))?;
    let coker = null_space(&linalg::gemm(&t.view(), false, &t.view(), true))?;
    let per_window = |vecs: &[Vec<f64>], w: &[usize]| -> f64 {
        vecs.iter().map(|v| plus.iter().enumerate().filter(|(_, i)| w.contains(i)).map(|(a, _)| v[a]).sum::<f64>()).sum()
    };
    let mut r = ScenarioResult::new("toeplitz_compression");
    let mut local = Vec::new();
    for (k, w) in windows.iter().enumerate() {
        let idx = per_window(&ker, w) - per_window(&coker, w);
        r.check(Assertion::near(format!("window_{k}_matches_relative_index"), vals[k], idx, 1e-10));
        local.push(idx);
    }
    r.check(Assertion::near("fredholm_index", 0.0, ker.len() as f64 - coker.len() as f64, 0.0));
    r.data = json!({
        "kernel_dim": ker.len(),
        "cokernel_dim": coker.len(),
        "local_index": local,
        "relative_index": vals,
    });
    Ok(r)
}

/// Ring hopping, identity and reversed hopping against the half-ring projection,
/// plus the Toeplitz compression of the hopping.
pub fn run_shift_models(_cfg: &SuiteConfig) -> Result<Vec<ScenarioResult>> {
    let jobs: Vec<Job> = vec![
        Box::new(|| {
            let (d, _) = ring()?;
            shift_case("ring_hopping", hopping_unitary(&d, &path(false), true)?, [1.0, -1.0])
        }),
        Box::new(|| shift_case("identity", UnitaryOperator::identity(RING), [0.0, 0.0])),
        Box::new(|| {
            let (d, _) = ring()?;
            shift_case("reversed_hopping", hopping_unitary(&d, &path(true), true)?, [-1.0, 1.0])
        }),
        Box::new(toeplitz),
    ];
    run_jobs(jobs)
}
