//! Boundary currents `J = (-φ')(H_W) · i[H_Δ, Π]` and their windowed traces.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Domain, Partition, Site};
use crate::index::{CrossingMap, IndexParams, Prepared};
use crate::linalg::{self, ZERO};
use crate::operators::{HermitianOperator, ProjectionOperator};
use crate::spectral::{make_smoothstep, DecayProfile, EigenDecomposition, SmoothStep, EDGE_TOLERANCE};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Per-eigenpair weights `-φ'(λ)` and `λ·1[λ ∈ Δ]`, where `Δ` keeps only
/// eigenvalues more than `EDGE_TOLERANCE` inside the gap.
fn weights(ed: &EigenDecomposition, phi: &SmoothStep) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (a, b) = (phi.a + EDGE_TOLERANCE, phi.b - EDGE_TOLERANCE);
    let mut excluded = Vec::new();
    let mut w = Vec::with_capacity(ed.values.len());
    let mut lam = Vec::with_capacity(ed.values.len());
    for &l in &ed.values {
        let inside = l > a && l < b;
        if (l - phi.a).abs() <= EDGE_TOLERANCE || (l - phi.b).abs() <= EDGE_TOLERANCE {
            excluded.push(l);
        }
        w.push(-phi.dphi(l));
        lam.push(if inside { l } else { 0.0 });
    }
    (w, lam, excluded)
}

/// `½(J + J†)` as a dense matrix. `ed` may be partial as long as it holds
/// every eigenpair in the transition interval of `φ`.
pub fn current_operator(ed: &EigenDecomposition, phi: &SmoothStep, pi: &ProjectionOperator) -> Result<HermitianOperator> {
    let (w, lam, _) = weights(ed, phi);
    let v = &ed.vectors;
    let scaled = |s: &[f64]| {
        let mut out = v.clone();
        for (mut col, &x) in out.columns_mut().into_iter().zip(s) {
            col.mapv_inplace(|z| z * x);
        }
        out
    };
    let wm = linalg::gemm(&scaled(&w).view(), false, &v.view(), true);
    let hd = linalg::gemm(&scaled(&lam).view(), false, &v.view(), true);
    let p = pi.dense();
    let comm = linalg::matmul(&hd, &p) - linalg::matmul(&p, &hd);
    let j = linalg::matmul(&wm, &comm).mapv(|z| z * I);
    let sym = (&j + &linalg::adjoint(&j.view())).mapv(|z| z * 0.5);
    Ok(HermitianOperator::new(sym))
}

/// Diagonal of `J` for an indicator `Π`, computed in the eigenbasis.
/// The real part is the diagonal of `½(J + J†)`.
pub fn current_density(ed: &EigenDecomposition, phi: &SmoothStep, pi: &[f64]) -> Vec<C64> {
    let (w, lam, _) = weights(ed, phi);
    let v = &ed.vectors;
    let (n, k) = v.dim();
    if k == 0 {
        return vec![ZERO; n];
    }
    // diag J_x = i [Π_x Σ_m |V_xm|² w_m λ_m - Σ_{mm'} V_xm w_m G_mm' λ_m' conj(V_xm')], G = V†ΠV
    let pv = Array2::from_shape_fn((n, k), |(i, m)| v[[i, m]] * pi[i]);
    let g = linalg::gemm(&v.view(), true, &pv.view(), false);
    let vw = Array2::from_shape_fn((n, k), |(i, m)| v[[i, m]] * w[m]);
    let vwg = linalg::matmul(&vw, &g);
    (0..n)
        .map(|x| {
            let mut first = 0.0;
            let mut second = ZERO;
            for m in 0..k {
                first += v[[x, m]].norm_sqr() * w[m] * lam[m];
                second += vwg[[x, m]] * lam[m] * v[[x, m]].conj();
            }
            I * (C64::new(pi[x] * first, 0.0) - second)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingCurrent {
    pub id: usize,
    pub anchor: Site,
    pub tag: BoundaryTag,
    pub window_sites: usize,
    /// Real part of the windowed trace of `J`.
    pub trace: f64,
    /// Imaginary part; the anti-Hermitian piece of `J` restricted to the window.
    pub antihermitian: f64,
    /// `-2π · trace`.
    pub value: f64,
    pub quantized: i64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurrentReport {
    pub trace_total: f64,
    pub crossings: Vec<CrossingCurrent>,
    pub density: Vec<f64>,
    pub excluded_edge_eigenvalues: Vec<f64>,
    /// `max |density|` per rounded distance to the crossings.
    pub decay: Vec<f64>,
    pub decay_ratio: Option<f64>,
}

/// Windowed currents at each crossing for the diagonal projection `pi`.
pub fn boundary_current(
    domain: &Domain,
    ed: &EigenDecomposition,
    phi: &SmoothStep,
    pi: &[f64],
    map: &CrossingMap,
    windows: &[Vec<usize>],
) -> Result<CurrentReport> {
    if windows.len() != map.len() {
        return Err(Error::Crossings(format!("{} windows for {} crossings", windows.len(), map.len())));
    }
    let diag = current_density(ed, phi, pi);
    let density: Vec<f64> = diag.iter().map(|z| z.re).collect();
    let mut crossings = Vec::with_capacity(map.len());
    for (c, window) in map.crossings.iter().zip(windows) {
        map.validate_window(window)?;
        let t: C64 = window.iter().map(|&i| diag[i]).sum();
        let value = -2.0 * PI * t.re;
        let quantized = value.round() as i64;
        crossings.push(CrossingCurrent {
            id: c.id,
            anchor: c.anchor,
            tag: c.tag,
            window_sites: window.len(),
            trace: t.re,
            antihermitian: t.im,
            value,
            quantized,
            residual: (value - quantized as f64).abs(),
        });
    }
    let decay = decay_table(domain, map, &density);
    let decay_ratio = DecayProfile::ratio(&decay, 10, 2);
    Ok(CurrentReport {
        trace_total: density.iter().sum(),
        crossings,
        density,
        excluded_edge_eigenvalues: weights(ed, phi).2,
        decay,
        decay_ratio,
    })
}

fn decay_table(domain: &Domain, map: &CrossingMap, density: &[f64]) -> Vec<f64> {
    let metric = domain.metric();
    let anchors: Vec<Site> = map.crossings.iter().flat_map(|c| c.sites.iter().map(|&i| domain.site(i))).collect();
    if anchors.is_empty() {
        return Vec::new();
    }
    let mut table = Vec::new();
    for (i, &s) in domain.sites().iter().enumerate() {
        let d2 = anchors.iter().map(|&a| metric.dist2(s.into(), a.into())).min().unwrap();
        let k = (d2 as f64).sqrt().round() as usize;
        if table.len() <= k {
            table.resize(k + 1, 0.0);
        }
        table[k] = f64::max(table[k], density[i].abs());
    }
    table
}

/// Current report on the same windows `theta_report` uses.
pub fn current_report(prep: &Prepared, partition: &Partition, params: &IndexParams) -> Result<CurrentReport> {
    let phi = make_smoothstep((prep.gap.lo, prep.gap.hi), params.kind)?;
    let map = CrossingMap::detect(&prep.domain, partition);
    let windows = map.windows(&prep.domain, params.window);
    let pi: Vec<f64> = partition.plus_mask().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    boundary_current(&prep.domain, &prep.ed, &phi, &pi, &map, &windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, make_partition, BoundingBox, CutSpec, ShapeSpec};
    use crate::index::{prepare, theta_report};
    use crate::operators::{FluxSpec, Model};
    use crate::spectral::{eigendecompose, StepKind};

    fn strip() -> (Prepared, Partition) {
        let d = build_domain(&ShapeSpec::Strip { x0: 0, width: 30, periodic_y: false }, BoundingBox::new(30, 60)).unwrap();
        let prep = prepare(&d, &Model::new(FluxSpec::new(1, 3).unwrap()), 1, None).unwrap();
        let p = make_partition(&d, &CutSpec::Horizontal { y: 30 }).unwrap();
        (prep, p)
    }

    #[test]
    fn identity_projection_has_no_current() {
        let d = build_domain(&ShapeSpec::Strip { x0: 0, width: 9, periodic_y: false }, BoundingBox::new(9, 9)).unwrap();
        let h = Model::new(FluxSpec::new(1, 3).unwrap()).hamiltonian(&d).unwrap();
        let ed = eigendecompose(&h).unwrap();
        let phi = make_smoothstep((-2.0, 1.0 - 3f64.sqrt()), StepKind::Quintic).unwrap();
        let j = current_operator(&ed, &phi, &ProjectionOperator::from_mask(vec![true; d.len()])).unwrap();
        assert_eq!(linalg::max_abs(&j.view()), 0.0);
        let dens = current_density(&ed, &phi, &vec![1.0; d.len()]);
        assert!(dens.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn dense_and_low_rank_diagonals_agree() {
        let d = build_domain(&ShapeSpec::Strip { x0: 0, width: 12, periodic_y: false }, BoundingBox::new(12, 18)).unwrap();
        let h = Model::new(FluxSpec::new(1, 3).unwrap()).hamiltonian(&d).unwrap();
        let ed = eigendecompose(&h).unwrap();
        let phi = make_smoothstep((-2.0 + 0.05, 1.0 - 3f64.sqrt() - 0.05), StepKind::Quintic).unwrap();
        let p = make_partition(&d, &CutSpec::Horizontal { y: 9 }).unwrap();
        let pi: Vec<f64> = p.plus_mask().iter().map(|&b| b as u8 as f64).collect();
        let j = current_operator(&ed, &phi, &ProjectionOperator::from_mask(p.plus_mask().to_vec())).unwrap();
        let dens = current_density(&ed, &phi, &pi);
        for (i, z) in dens.iter().enumerate() {
            assert!((j.matrix()[[i, i]].re - z.re).abs() < 1e-12);
        }
        let total: C64 = dens.iter().sum();
        assert!(total.norm() < 1e-10);
    }

    #[test]
    fn strip_current_matches_index() {
        let (prep, p) = strip();
        let params = IndexParams::default();
        let theta = theta_report(&prep, &p, &params).unwrap();
        let cur = current_report(&prep, &p, &params).unwrap();
        assert!(cur.trace_total.abs() < 1e-9);
        for (a, b) in theta.crossings.iter().zip(&cur.crossings) {
            assert!((a.value - b.value).abs() < 0.05, "{} vs {}", a.value, b.value);
        }
        let moll = current_report(&prep, &p, &IndexParams { kind: StepKind::Mollifier, ..params }).unwrap();
        for (a, b) in moll.crossings.iter().zip(&cur.crossings) {
            assert!((a.value - b.value).abs() < 0.02);
        }
    }
}
