//! Chern numbers, spectral flow, the exponential unitary and windowed
//! relative indices.

mod crossing;
mod theta;

pub use crossing::{Crossing, CrossingMap};
pub use theta::{prepare, theta_report, CrossingResult, IndexParams, IndexReport, Prepared, SweepRow, CONVENTION, CONVENTION_SIGN};

use std::f64::consts::PI;
use std::ops::Range;

use ndarray::{s, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bloch::{band_edges, bloch_hamiltonian, brillouin_zone, bulk_gaps, cylinder_hamiltonian};
use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};
use crate::operators::{FluxSpec, Gauge, Model, ProjectionOperator, UnitaryOperator};
use crate::spectral::{EigenDecomposition, SmoothStep};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChernData {
    pub flux: FluxSpec,
    pub gauge: Gauge,
    pub k_grid: usize,
    pub per_band: Vec<i64>,
    /// Chern number of the projection onto the lowest `j + 1` bands, computed
    /// from determinants of multi-band overlaps.
    pub cumulative: Vec<i64>,
    /// Plaquette Berry curvature, per band, row-major over the `k_grid²` plaquettes.
    pub curvature: Vec<Vec<f64>>,
}

/// Chern numbers of the magnetic Bloch bands of the Harper model.
pub fn bloch_chern(flux: FluxSpec, k_grid: usize) -> Result<ChernData> {
    bloch_chern_model(&Model::new(flux), k_grid)
}

/// Eigenvectors of the Bloch Hamiltonian on a periodic `nk × nk` mesh.
struct BlochMesh {
    nk: usize,
    states: Vec<Array2<C64>>,
    bands: usize,
    /// Smallest separation between bands `n` and `n + 1` over the mesh.
    separation: Vec<f64>,
}

impl BlochMesh {
    fn new(model: &Model, nk: usize) -> Result<Self> {
        let (bx, by) = brillouin_zone(model);
        let mut states = Vec::with_capacity(nk * nk);
        let mut separation: Vec<f64> = Vec::new();
        for j in 0..nk {
            for i in 0..nk {
                let h = bloch_hamiltonian(model, bx * i as f64 / nk as f64, by * j as f64 / nk as f64);
                let (e, v) = linalg::eigh(&h.view())?;
                separation.resize(e.len().saturating_sub(1), f64::INFINITY);
                for (n, sep) in separation.iter_mut().enumerate() {
                    *sep = sep.min(e[n + 1] - e[n]);
                }
                states.push(v);
            }
        }
        let bands = separation.len() + 1;
        Ok(BlochMesh { nk, states, bands, separation })
    }

    fn at(&self, i: usize, j: usize) -> &Array2<C64> {
        &self.states[(j % self.nk) * self.nk + (i % self.nk)]
    }

    fn link(&self, a: &Array2<C64>, b: &Array2<C64>, bands: Range<usize>) -> C64 {
        let m = linalg::gemm(&a.slice(s![.., bands.clone()]), true, &b.slice(s![.., bands]), false);
        let d = linalg::det(&m.view());
        if d.norm() == 0.0 {
            ONE
        } else {
            d / d.norm()
        }
    }

    /// Chern number of the band group `bands` and its plaquette curvature.
    fn chern(&self, bands: Range<usize>) -> (f64, Vec<f64>) {
        let nk = self.nk;
        let mut curv = Vec::with_capacity(nk * nk);
        for j in 0..nk {
            for i in 0..nk {
                let u1 = self.link(self.at(i, j), self.at(i + 1, j), bands.clone());
                let u2 = self.link(self.at(i + 1, j), self.at(i + 1, j + 1), bands.clone());
                let u3 = self.link(self.at(i, j + 1), self.at(i + 1, j + 1), bands.clone());
                let u4 = self.link(self.at(i, j), self.at(i, j + 1), bands.clone());
                curv.push((u1 * u2 * u3.conj() * u4.conj()).arg());
            }
        }
        (curv.iter().sum::<f64>() / (2.0 * PI), curv)
    }

    fn gapless(&self, n: usize, model: &Model) -> Error {
        Error::Gapless(format!(
            "bands {} and {} touch (separation {:e}) at flux {}",
            n + 1,
            n + 2,
            self.separation[n],
            model.flux
        ))
    }
}

const TOUCHING: f64 = 1e-6;

fn check_grid(model: &Model, k_grid: usize) -> Result<()> {
    let q = model.flux.q as usize;
    if k_grid < 6 * q {
        return Err(Error::Config(format!("k_grid {k_grid} below 6q = {}", 6 * q)));
    }
    Ok(())
}

/// Plaquette (link-variable) Berry curvature over a `k_grid × k_grid` mesh of
/// the magnetic Brillouin zone. Every band must be isolated.
pub fn bloch_chern_model(model: &Model, k_grid: usize) -> Result<ChernData> {
    check_grid(model, k_grid)?;
    let mesh = BlochMesh::new(model, k_grid)?;
    if let Some(n) = (0..mesh.separation.len()).min_by(|&a, &b| mesh.separation[a].total_cmp(&mesh.separation[b])) {
        if mesh.separation[n] < TOUCHING {
            return Err(mesh.gapless(n, model));
        }
    }
    let mut per_band = Vec::with_capacity(mesh.bands);
    let mut curvature = Vec::with_capacity(mesh.bands);
    for n in 0..mesh.bands {
        let (c, curv) = mesh.chern(n..n + 1);
        per_band.push(c.round() as i64);
        curvature.push(curv);
    }
    let cumulative = (1..=mesh.bands).map(|j| mesh.chern(0..j).0.round() as i64).collect();
    Ok(ChernData { flux: model.flux, gauge: model.gauge, k_grid, per_band, cumulative, curvature })
}

/// Chern number of all Bloch bands below bulk gap `gap_index` (1-based).
/// Bands inside the group may touch; only the gap itself must be open.
pub fn chern_below_gap(model: &Model, gap_index: usize, k_grid: usize) -> Result<i64> {
    check_grid(model, k_grid)?;
    let gaps = bulk_gaps(model);
    let gap = *gaps
        .get(gap_index.wrapping_sub(1))
        .ok_or_else(|| Error::Config(format!("gap index {gap_index} outside 1..={}", gaps.len())))?;
    let below = band_edges(model, 48).iter().filter(|(_, hi)| *hi <= gap.lo + 1e-9).count();
    let mesh = BlochMesh::new(model, k_grid)?;
    if below == 0 || below >= mesh.bands {
        return Err(Error::Gapless(format!("gap {gap_index} does not separate Bloch bands")));
    }
    if mesh.separation[below - 1] < TOUCHING {
        return Err(mesh.gapless(below - 1, model));
    }
    Ok(mesh.chern(0..below).0.round() as i64)
}

/// Signed count of edge channels crossing `fermi`, per edge of a
/// width-`width` cylinder. Both edges count counterclockwise circulation as
/// positive: states moving down the left edge, up the right edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlow {
    pub fermi: f64,
    pub width: usize,
    pub k_samples: usize,
    pub left: i64,
    pub right: i64,
    /// Crossings by states not localized on either edge.
    pub unattributed: i64,
}

pub fn spectral_flow(model: &Model, width: usize, fermi: f64, k_samples: usize) -> Result<SpectralFlow> {
    if !bulk_gaps(model).iter().any(|g| fermi > g.lo && fermi < g.hi) {
        return Err(Error::FermiInBand(fermi));
    }
    let ks: Vec<f64> = (0..k_samples).map(|k| 2.0 * PI * k as f64 / k_samples as f64).collect();
    let spectra: Vec<(Vec<f64>, Array2<C64>)> = ks
        .iter()
        .map(|&k| linalg::eigh(&cylinder_hamiltonian(model, width, k).view()))
        .collect::<Result<_>>()?;
    let edge_of = |v: &Array2<C64>, n: usize| -> i8 {
        let mut left = 0.0;
        let mut right = 0.0;
        for (idx, z) in v.column(n).iter().enumerate() {
            let x = idx % width;
            if x < 5 {
                left += z.norm_sqr();
            }
            if x + 5 >= width {
                right += z.norm_sqr();
            }
        }
        if left >= 0.8 {
            -1
        } else if right >= 0.8 {
            1
        } else {
            0
        }
    };
    let (mut left, mut right, mut unattributed) = (0i64, 0i64, 0i64);
    for i in 0..k_samples {
        let (ea, va) = &spectra[i];
        let (eb, vb) = &spectra[(i + 1) % k_samples];
        for n in 0..ea.len() {
            let up = ea[n] < fermi && eb[n] >= fermi;
            let down = ea[n] >= fermi && eb[n] < fermi;
            if !up && !down {
                continue;
            }
            let edge = if (ea[n] - fermi).abs() <= (eb[n] - fermi).abs() { edge_of(va, n) } else { edge_of(vb, n) };
            let dir = if up { 1 } else { -1 };
            match edge {
                -1 => left -= dir,
                1 => right += dir,
                _ => unattributed += dir,
            }
        }
    }
    Ok(SpectralFlow { fermi, width, k_samples, left, right, unattributed })
}

/// `exp(-2πi φ(H))`, stored as identity plus the rank of the eigenvalues
/// inside the transition of `φ`.
pub fn exp_unitary(ed: &EigenDecomposition, phi: &SmoothStep) -> UnitaryOperator {
    let n = ed.dim();
    let mut cols = Vec::new();
    let mut d = Vec::new();
    for (m, &lam) in ed.values.iter().enumerate() {
        let dm = C64::from_polar(1.0, -2.0 * PI * phi.phi(lam)) - ONE;
        if dm.norm() > 1e-15 {
            cols.push(m);
            d.push(dm);
        }
    }
    let mut v = Array2::<C64>::zeros((n, cols.len()));
    for (c, &m) in cols.iter().enumerate() {
        v.column_mut(c).assign(&ed.vectors.column(m));
    }
    UnitaryOperator::LowRank { n, v, d }
}

/// Per-site diagonal of `UΠU† - Π` for a diagonal projection.
pub fn relative_index_density(u: &UnitaryOperator, pi: &ProjectionOperator) -> Result<Vec<f64>> {
    let w = pi
        .indicator()
        .ok_or_else(|| Error::Config("relative index density needs an indicator projection".into()))?;
    let conj = u.conjugated_diagonal(&w);
    Ok(conj.iter().zip(&w).map(|(a, b)| a - b).collect())
}

/// `Tr_window(UΠU† - Π)`.
pub fn localized_relative_index(u: &UnitaryOperator, pi: &ProjectionOperator, window: &[usize]) -> Result<f64> {
    let dens = match pi.indicator() {
        Some(_) => relative_index_density(u, pi)?,
        None => {
            let ud = u.dense();
            let p = pi.dense();
            let upu = linalg::gemm(&linalg::matmul(&ud, &p).view(), false, &ud.view(), true);
            (0..ud.nrows()).map(|i| (upu[[i, i]] - p[[i, i]]).re).collect()
        }
    };
    Ok(window.iter().map(|&i| dens[i]).sum())
}

/// `Tr(UΠU† - Π)` over the whole system.
pub fn total_relative_index(u: &UnitaryOperator, pi: &ProjectionOperator) -> Result<f64> {
    let all: Vec<usize> = (0..u.dim()).collect();
    localized_relative_index(u, pi, &all)
}

/// `Tr(A[Π,B])` for dense matrices and a diagonal `Π` given as weights.
pub fn trace_a_comm_pi_b(a: &Array2<C64>, pi: &[f64], b: &Array2<C64>) -> C64 {
    // Tr(AΠB - ABΠ) = Σ_ij A_ij B_ji (Π_j - Π_i)
    let n = a.nrows();
    let mut t = ZERO;
    for i in 0..n {
        for j in 0..n {
            let w = pi[j] - pi[i];
            if w != 0.0 {
                t += a[[i, j]] * b[[j, i]] * w;
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, make_partition, BoundingBox, CutSpec, ShapeSpec, Site};
    use crate::operators::{harper_hamiltonian, hopping_unitary, indicator_projection};
    use crate::spectral::{eigendecompose, make_smoothstep, StepKind};

    #[test]
    fn zero_flux_single_band() {
        let c = bloch_chern(FluxSpec::zero(), 12).unwrap();
        assert_eq!(c.per_band, vec![0]);
        assert_eq!(c.cumulative, vec![0]);
    }

    #[test]
    fn k_grid_too_small() {
        assert!(bloch_chern(FluxSpec::new(1, 3).unwrap(), 12).is_err());
    }

    #[test]
    fn even_denominator_is_gapless() {
        let e = bloch_chern(FluxSpec::new(1, 4).unwrap(), 24).unwrap_err();
        assert!(matches!(e, Error::Gapless(_)));
    }

    #[test]
    fn ring_hopping_crossings() {
        let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(40, 1)).unwrap();
        let path: Vec<Site> = (0..40).map(|x| Site::new(x, 0)).collect();
        let v = hopping_unitary(&d, &path, true).unwrap();
        let p = make_partition(&d, &CutSpec::Vertical { x: 20 }).unwrap();
        let pi = ProjectionOperator::from_mask(p.plus_mask().to_vec());
        let dens = relative_index_density(&v, &pi).unwrap();
        let nonzero: Vec<(usize, f64)> = dens.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
        assert_eq!(nonzero, vec![(0, 1.0), (20, -1.0)]);
        assert_eq!(total_relative_index(&v, &pi).unwrap(), 0.0);
    }

    #[test]
    fn torus_exponential_is_identity() {
        let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(12, 12)).unwrap();
        let h = harper_hamiltonian(&d, FluxSpec::new(1, 3).unwrap()).unwrap();
        let ed = eigendecompose(&h).unwrap();
        let phi = make_smoothstep((-2.0, 1.0 - 3f64.sqrt()), StepKind::Quintic).unwrap();
        let u = exp_unitary(&ed, &phi);
        assert!(u.distance_from_identity() < 1e-12);
        let p = make_partition(&d, &CutSpec::Horizontal { y: 6 }).unwrap();
        let pi = indicator_projection(&p.w_plus(&d), &d).unwrap();
        assert!(total_relative_index(&u, &pi).unwrap().abs() < 1e-12);
    }

    fn tknn(p: i64, q: i64) -> Vec<i64> {
        (1..q)
            .map(|r| {
                let t = (-q / 2..=q / 2).find(|t| (r - p * t).rem_euclid(q) == 0).unwrap();
                t
            })
            .chain(std::iter::once(0))
            .collect()
    }

    #[test]
    fn chern_flux_third() {
        let c = bloch_chern(FluxSpec::new(1, 3).unwrap(), 18).unwrap();
        assert_eq!(c.per_band, vec![1, -2, 1]);
        assert_eq!(c.cumulative, tknn(1, 3));
        for (band, curv) in c.per_band.iter().zip(&c.curvature) {
            let s: f64 = curv.iter().sum();
            assert!((s - 2.0 * PI * *band as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn chern_flux_fifth_matches_diophantine() {
        let c = bloch_chern(FluxSpec::new(1, 5).unwrap(), 30).unwrap();
        assert_eq!(c.cumulative, tknn(1, 5));
        assert_eq!(&c.cumulative[..2], &[1, 2]);
        let fine = bloch_chern(FluxSpec::new(1, 5).unwrap(), 60).unwrap();
        assert_eq!(fine.per_band, c.per_band);
    }

    #[test]
    fn chern_gauge_invariant() {
        let mut m = Model::new(FluxSpec::new(2, 5).unwrap());
        let x = bloch_chern_model(&m, 30).unwrap();
        m.gauge = Gauge::LandauY;
        let y = bloch_chern_model(&m, 30).unwrap();
        assert_eq!(x.per_band, y.per_band);
        assert_eq!(x.cumulative, tknn(2, 5));
    }

    #[test]
    fn spectral_flow_matches_chern() {
        let m = Model::new(FluxSpec::new(1, 3).unwrap());
        let g = bulk_gaps(&m)[0];
        let f = spectral_flow(&m, 30, 0.5 * (g.lo + g.hi), 96).unwrap();
        assert_eq!((f.left, f.right, f.unattributed), (1, 1, 0));
        let m = Model::new(FluxSpec::new(1, 5).unwrap());
        let g = bulk_gaps(&m)[1];
        let f = spectral_flow(&m, 30, 0.5 * (g.lo + g.hi), 160).unwrap();
        assert_eq!((f.left, f.right), (2, 2));
    }

    #[test]
    fn chern_below_gap_groups_bands() {
        assert_eq!(chern_below_gap(&Model::staggered(1.0), 1, 12).unwrap(), 0);
        let m = Model::new(FluxSpec::new(1, 5).unwrap());
        assert_eq!(chern_below_gap(&m, 2, 30).unwrap(), 2);
        assert!(bloch_chern_model(&Model::staggered(1.0), 12).is_err());
    }

    #[test]
    fn spectral_flow_trivial_insulator() {
        let m = Model::staggered(1.0);
        let f = spectral_flow(&m, 30, 0.0, 64).unwrap();
        assert_eq!((f.left, f.right, f.unattributed), (0, 0, 0));
        assert!(matches!(spectral_flow(&m, 30, 2.0, 64), Err(Error::FermiInBand(_))));
    }

    #[test]
    fn strip_pipeline_crossings() {
        let d = build_domain(&ShapeSpec::Strip { x0: 0, width: 30, periodic_y: false }, BoundingBox::new(30, 60)).unwrap();
        let m = Model::new(FluxSpec::new(1, 3).unwrap());
        let prep = prepare(&d, &m, 1, None).unwrap();
        let p = make_partition(&d, &CutSpec::Horizontal { y: 30 }).unwrap();
        let r = theta_report(&prep, &p, &IndexParams::default()).unwrap();
        let vals: Vec<i64> = r.crossings.iter().map(|c| c.rounded).collect();
        assert_eq!(vals, vec![1, -1]);
        assert!(r.crossings.iter().all(|c| c.residual < 0.05));
        assert!(r.total_trace.abs() < 1e-9);
        let swapped = theta_report(&prep, &p.swap(), &IndexParams::default()).unwrap();
        for (a, b) in r.crossings.iter().zip(&swapped.crossings) {
            assert!((a.value + b.value).abs() < 1e-9);
        }
    }

    #[test]
    fn torus_has_empty_report() {
        let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(12, 12)).unwrap();
        let prep = prepare(&d, &Model::new(FluxSpec::new(1, 3).unwrap()), 1, None).unwrap();
        let p = make_partition(&d, &CutSpec::Horizontal { y: 6 }).unwrap();
        let r = theta_report(&prep, &p, &IndexParams::default()).unwrap();
        assert!(r.crossings.is_empty());
        assert_eq!(r.theta, 0.0);
    }
}
