use serde::{Deserialize, Serialize};

use super::crossing::CrossingMap;
use super::{exp_unitary, relative_index_density};
use crate::bloch::bulk_gaps;
use crate::error::{Error, Result};
use crate::geometry::{check_admissibility, AdmissibilityReport, BoundaryTag, Domain, Partition, Site};
use crate::operators::{HermitianOperator, Model, ProjectionOperator};
use crate::spectral::{eigendecompose_interval, make_smoothstep, EigenDecomposition, Gap, StepKind, EDGE_TOLERANCE};

/// Orientation fixed for reported θ: with `Π` the indicator of `W₊` lying
/// above a horizontal cut, the crossing with the left edge of a domain at
/// positive flux is `+` the cumulative Chern number below the gap.
pub const CONVENTION: &str = "theta = -Tr_window(u Pi u^* - Pi); Pi = W_plus above the cut; left-edge crossing = +cumulative Chern";
pub const CONVENTION_SIGN: f64 = -1.0;

/// Smallest allowed distance between two crossings.
pub const MIN_CROSSING_SEPARATION: f64 = 4.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexParams {
    /// 1-based gap of the bulk spectrum.
    pub gap_index: usize,
    pub kind: StepKind,
    /// Window radius around each crossing; `None` uses the whole Voronoi cell.
    pub window: Option<f64>,
    /// Radii of the convergence sweep; an infinite radius is the full cell.
    pub sweep: Vec<f64>,
    pub r_max: usize,
    pub threshold: Option<f64>,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            gap_index: 1,
            kind: StepKind::Quintic,
            window: None,
            sweep: vec![4.0, 6.0, 8.0, 10.0, 15.0, 20.0, f64::INFINITY],
            r_max: 2,
            threshold: None,
        }
    }
}

/// Hamiltonian on a domain with its eigenpairs inside one bulk gap.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub domain: Domain,
    pub model: Model,
    pub gap_index: usize,
    pub gap: Gap,
    pub h: HermitianOperator,
    pub ed: EigenDecomposition,
}

/// Selects the bulk gap of `model`, builds `H_W` (plus an optional
/// perturbation) and diagonalizes it inside that gap.
pub fn prepare(domain: &Domain, model: &Model, gap_index: usize, perturbation: Option<&HermitianOperator>) -> Result<Prepared> {
    model.validate(domain)?;
    let gaps = bulk_gaps(model);
    if gaps.is_empty() {
        return Err(Error::Gapless(format!("no bulk gap at flux {}", model.flux)));
    }
    if gap_index == 0 || gap_index > gaps.len() {
        return Err(Error::Config(format!("gap index {gap_index} outside 1..={}", gaps.len())));
    }
    let gap = gaps[gap_index - 1];
    let mut h = model.hamiltonian(domain)?;
    if let Some(p) = perturbation {
        h = h.add(p)?;
    }
    let ed = eigendecompose_interval(&h, gap.lo - 1e-7, gap.hi + 1e-7)?;
    Ok(Prepared { domain: domain.clone(), model: model.clone(), gap_index, gap, h, ed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `None` is the unbounded radius.
    pub radius: Option<f64>,
    pub sites: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingResult {
    pub id: usize,
    pub anchor: Site,
    pub centroid: (f64, f64),
    pub tag: BoundaryTag,
    pub window_sites: usize,
    /// `Tr_window(uΠu† - Π)` before the sign convention.
    pub raw: f64,
    pub value: f64,
    pub rounded: i64,
    pub residual: f64,
    pub sweep: Vec<SweepRow>,
    /// Whether the sweep error shrinks monotonically with the radius.
    pub monotone: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexReport {
    pub convention: String,
    pub sign: f64,
    pub gap_index: usize,
    pub gap: Gap,
    pub kind: StepKind,
    pub crossings: Vec<CrossingResult>,
    /// Untruncated `Tr(uΠu† - Π)`.
    pub total_trace: f64,
    /// Sum over crossings on physical boundary components.
    pub theta: f64,
    pub theta_rounded: i64,
    /// Eigenvalues of `H_W` inside the transition interval of `φ`.
    pub edge_states: usize,
    /// Eigenvalues within tolerance of a gap edge, where `φ` is only C² or flat.
    pub excluded_edge_eigenvalues: Vec<f64>,
    pub admissibility: AdmissibilityReport,
}

fn monotone_errors(sweep: &[SweepRow], target: f64) -> bool {
    let errs: Vec<f64> = sweep.iter().map(|r| (r.value - target).abs()).collect();
    errs.windows(2).all(|w| w[1] <= w[0] + 1e-6)
}

/// Windowed relative indices at every crossing of the interface with `∂W`.
pub fn theta_report(prep: &Prepared, partition: &Partition, params: &IndexParams) -> Result<IndexReport> {
    let domain = &prep.domain;
    let admissibility = check_admissibility(domain, partition, params.r_max, params.threshold);
    if !admissibility.admissible {
        return Err(Error::Inadmissible(Box::new(admissibility)));
    }
    let map = CrossingMap::detect(domain, partition);
    if map.len() > 1 && map.min_separation(domain) < MIN_CROSSING_SEPARATION {
        return Err(Error::Crossings(format!(
            "crossings only {:.2} apart",
            map.min_separation(domain)
        )));
    }
    let phi = make_smoothstep((prep.gap.lo, prep.gap.hi), params.kind)?;
    let u = exp_unitary(&prep.ed, &phi);
    let pi = ProjectionOperator::from_mask(partition.plus_mask().to_vec());
    let dens = relative_index_density(&u, &pi)?;
    let total_trace: f64 = dens.iter().sum();
    let sum = |w: &[usize]| w.iter().map(|&i| dens[i]).sum::<f64>();

    let windows = map.windows(domain, params.window);
    let sweeps: Vec<Vec<Vec<usize>>> = params
        .sweep
        .iter()
        .map(|&r| map.windows(domain, if r.is_finite() { Some(r) } else { None }))
        .collect();
    let mut crossings = Vec::with_capacity(map.len());
    for (c, window) in map.crossings.iter().zip(&windows) {
        map.validate_window(window)?;
        let raw = sum(window);
        let value = CONVENTION_SIGN * raw;
        let rounded = value.round() as i64;
        let sweep: Vec<SweepRow> = params
            .sweep
            .iter()
            .zip(&sweeps)
            .map(|(&r, ws)| SweepRow {
                radius: r.is_finite().then_some(r),
                sites: ws[c.id].len(),
                value: CONVENTION_SIGN * sum(&ws[c.id]),
            })
            .collect();
        crossings.push(CrossingResult {
            id: c.id,
            anchor: c.anchor,
            centroid: c.centroid,
            tag: c.tag,
            window_sites: window.len(),
            raw,
            value,
            rounded,
            residual: (value - rounded as f64).abs(),
            monotone: monotone_errors(&sweep, value),
            sweep,
        });
    }
    let theta: f64 = crossings.iter().filter(|c| matches!(c.tag, BoundaryTag::Physical(_))).map(|c| c.value).sum();
    let (a, b) = (prep.gap.lo, prep.gap.hi);
    let edge_states = prep.ed.values.iter().filter(|&&l| l > a && l < b).count();
    let excluded_edge_eigenvalues = prep
        .ed
        .values
        .iter()
        .copied()
        .filter(|&l| (l - a).abs() <= EDGE_TOLERANCE || (l - b).abs() <= EDGE_TOLERANCE)
        .collect();
    Ok(IndexReport {
        convention: CONVENTION.into(),
        sign: CONVENTION_SIGN,
        gap_index: prep.gap_index,
        gap: prep.gap,
        kind: params.kind,
        crossings,
        total_trace,
        theta,
        theta_rounded: theta.round() as i64,
        edge_states,
        excluded_edge_eigenvalues,
        admissibility,
    })
}
