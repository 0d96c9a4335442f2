//! Momentum-space reductions of the lattice model: magnetic-cell Bloch
//! Hamiltonians, cylinder Hamiltonians `H(k_y)`, and refined band edges.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::linalg;
use crate::operators::{Gauge, Model};
use crate::spectral::Gap;

fn lcm(a: usize, b: usize) -> usize {
    let mut x = a;
    let mut y = b;
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

/// Smallest periodic cell `(cx, cy)` of the model.
pub fn magnetic_cell(model: &Model) -> (usize, usize) {
    let s = if model.stagger != 0.0 { 2 } else { 1 };
    let q = model.flux.q as usize;
    match model.gauge {
        Gauge::LandauX => (lcm(q, s), s),
        Gauge::LandauY => (s, lcm(q, s)),
    }
}

/// Hamiltonian on a `cx × cy` cell. `Some(k)` closes that axis with Bloch
/// phase `e^{ik·c}`; `None` leaves it open (Dirichlet).
pub fn cell_hamiltonian(model: &Model, cx: usize, cy: usize, kx: Option<f64>, ky: Option<f64>) -> Array2<C64> {
    let n = cx * cy;
    let alpha = model.flux.alpha();
    let idx = |x: usize, y: usize| y * cx + x;
    let mut h = Array2::<C64>::zeros((n, n));
    for y in 0..cy {
        for x in 0..cx {
            let src = idx(x, y);
            let (ax, ay) = match model.gauge {
                Gauge::LandauX => (C64::new(-1.0, 0.0), -C64::from_polar(1.0, 2.0 * PI * alpha * x as f64)),
                Gauge::LandauY => (-C64::from_polar(1.0, -2.0 * PI * alpha * y as f64), C64::new(-1.0, 0.0)),
            };
            // a = H[dest, src]; across a closed edge, dest picks up e^{-ik·c}.
            let mut hop = |dest: usize, a: C64, twist: C64| {
                h[[dest, src]] += a * twist.conj();
                h[[src, dest]] += a.conj() * twist;
            };
            if x + 1 < cx {
                hop(idx(x + 1, y), ax, C64::new(1.0, 0.0));
            } else if let Some(k) = kx {
                hop(idx(0, y), ax, C64::from_polar(1.0, k * cx as f64));
            }
            if y + 1 < cy {
                hop(idx(x, y + 1), ay, C64::new(1.0, 0.0));
            } else if let Some(k) = ky {
                hop(idx(x, 0), ay, C64::from_polar(1.0, k * cy as f64));
            }
            if model.stagger != 0.0 {
                let sign = if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
                h[[src, src]] += C64::new(model.stagger * sign, 0.0);
            }
            if model.shift {
                h[[src, src]] += C64::new(4.0, 0.0);
            }
        }
    }
    h
}

/// Bloch Hamiltonian of the magnetic cell at `(kx, ky)`.
pub fn bloch_hamiltonian(model: &Model, kx: f64, ky: f64) -> Array2<C64> {
    let (cx, cy) = magnetic_cell(model);
    cell_hamiltonian(model, cx, cy, Some(kx), Some(ky))
}

/// Extent of the magnetic Brillouin zone `[0, 2π/cx) × [0, 2π/cy)`.
pub fn brillouin_zone(model: &Model) -> (f64, f64) {
    let (cx, cy) = magnetic_cell(model);
    (2.0 * PI / cx as f64, 2.0 * PI / cy as f64)
}

pub fn bloch_bands(model: &Model, kx: f64, ky: f64) -> Vec<f64> {
    linalg::eigvalsh(&bloch_hamiltonian(model, kx, ky).view()).expect("small Hermitian eigenproblem")
}

/// Width-`w` cylinder (open in x, closed in y with momentum `ky`).
pub fn cylinder_hamiltonian(model: &Model, width: usize, ky: f64) -> Array2<C64> {
    let (_, cy) = magnetic_cell(&Model { gauge: Gauge::LandauX, ..model.clone() });
    cell_hamiltonian(&Model { gauge: Gauge::LandauX, ..model.clone() }, width, cy, None, Some(ky))
}

/// `(min, max)` of every band over the Brillouin zone: a grid scan followed by
/// compass-search refinement of each extremum.
pub fn band_edges(model: &Model, grid: usize) -> Vec<(f64, f64)> {
    let (bx, by) = brillouin_zone(model);
    let grid = grid.max(8);
    let nb = {
        let (cx, cy) = magnetic_cell(model);
        cx * cy
    };
    let mut lo = vec![(f64::INFINITY, 0.0, 0.0); nb];
    let mut hi = vec![(f64::NEG_INFINITY, 0.0, 0.0); nb];
    for i in 0..grid {
        for j in 0..grid {
            let (kx, ky) = (bx * i as f64 / grid as f64, by * j as f64 / grid as f64);
            for (n, e) in bloch_bands(model, kx, ky).into_iter().enumerate() {
                if e < lo[n].0 {
                    lo[n] = (e, kx, ky);
                }
                if e > hi[n].0 {
                    hi[n] = (e, kx, ky);
                }
            }
        }
    }
    let step = bx.max(by) / grid as f64;
    (0..nb)
        .map(|n| {
            let band = |kx: f64, ky: f64| bloch_bands(model, kx, ky)[n];
            let min = refine(|kx, ky| band(kx, ky), lo[n], step);
            let max = -refine(|kx, ky| -band(kx, ky), (-hi[n].0, hi[n].1, hi[n].2), step);
            (min, max)
        })
        .collect()
}

fn refine(f: impl Fn(f64, f64) -> f64, start: (f64, f64, f64), step: f64) -> f64 {
    let (mut best, mut x, mut y) = start;
    let mut h = step;
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    while h > 1e-10 {
        let mut moved = false;
        for (dx, dy) in dirs {
            let v = f(x + h * dx, y + h * dy);
            if v < best {
                best = v;
                x += h * dx;
                y += h * dy;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best
}

/// Spectral gaps between consecutive bands, from refined band edges.
pub fn bulk_gaps(model: &Model) -> Vec<Gap> {
    let edges = band_edges(model, 48);
    let mut sorted = edges.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    let mut top = f64::NEG_INFINITY;
    for (k, &(lo, hi)) in sorted.iter().enumerate() {
        if k > 0 && lo > top + 1e-9 {
            gaps.push(Gap { lo: top, hi: lo });
        }
        top = top.max(hi);
    }
    gaps
}

/// Checks that `fermi` lies strictly between bands.
pub fn in_bulk_gap(model: &Model, fermi: f64) -> Result<bool> {
    Ok(bulk_gaps(model).iter().any(|g| fermi > g.lo && fermi < g.hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::FluxSpec;

    #[test]
    fn free_band_is_cosine_sum() {
        let m = Model::new(FluxSpec::zero());
        let e = bloch_bands(&m, 0.3, 1.1);
        assert!((e[0] + 2.0 * 0.3f64.cos() + 2.0 * 1.1f64.cos()).abs() < 1e-12);
        let edges = band_edges(&m, 16);
        assert!((edges[0].0 + 4.0).abs() < 1e-9 && (edges[0].1 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn flux_third_gaps() {
        let m = Model::new(FluxSpec::new(1, 3).unwrap());
        let gaps = bulk_gaps(&m);
        assert_eq!(gaps.len(), 2);
        let r3 = 3f64.sqrt();
        assert!((gaps[0].lo + 2.0).abs() < 1e-8, "{gaps:?}");
        assert!((gaps[0].hi - (1.0 - r3)).abs() < 1e-8);
        assert!((gaps[1].lo - (r3 - 1.0)).abs() < 1e-8);
        assert!((gaps[1].hi - 2.0).abs() < 1e-8);
    }

    #[test]
    fn gauges_share_the_spectrum() {
        let fx = Model::new(FluxSpec::new(2, 5).unwrap());
        let fy = Model { gauge: Gauge::LandauY, ..fx.clone() };
        let a = band_edges(&fx, 24);
        let b = band_edges(&fy, 24);
        for (p, q) in a.iter().zip(&b) {
            assert!((p.0 - q.0).abs() < 1e-8 && (p.1 - q.1).abs() < 1e-8);
        }
    }

    #[test]
    fn staggered_gap_is_the_mass() {
        let gaps = bulk_gaps(&Model::staggered(1.0));
        assert_eq!(gaps.len(), 1);
        assert!((gaps[0].lo + 1.0).abs() < 1e-8 && (gaps[0].hi - 1.0).abs() < 1e-8);
    }
}
