//! Finite-scale versions of the admissibility and bordism conditions.

use serde::{Deserialize, Serialize};

use super::{disc_offsets, CutSpec, Domain, Metric, Partition};

/// Boolean mask over the bounding box, extended by a margin on open axes so
/// that the complement of a window-filling domain is still represented.
#[derive(Clone, Debug)]
pub struct SiteMask {
    metric: Metric,
    mx: i64,
    my: i64,
    w: usize,
    h: usize,
    bits: Vec<bool>,
}

impl SiteMask {
    pub fn empty(domain: &Domain, margin: usize) -> Self {
        let metric = domain.metric();
        let mx = if metric.wrap.x { 0 } else { margin as i64 };
        let my = if metric.wrap.y { 0 } else { margin as i64 };
        let w = domain.bbox.nx + 2 * mx as usize;
        let h = domain.bbox.ny + 2 * my as usize;
        SiteMask { metric, mx, my, w, h, bits: vec![false; w * h] }
    }

    fn idx(&self, x: i64, y: i64) -> Option<usize> {
        let nx = self.metric.bbox.nx as i64;
        let ny = self.metric.bbox.ny as i64;
        let x = if self.metric.wrap.x { x.rem_euclid(nx) } else { x };
        let y = if self.metric.wrap.y { y.rem_euclid(ny) } else { y };
        let (ex, ey) = (x + self.mx, y + self.my);
        (ex >= 0 && ey >= 0 && (ex as usize) < self.w && (ey as usize) < self.h)
            .then(|| ey as usize * self.w + ex as usize)
    }

    fn coords(&self, k: usize) -> (i64, i64) {
        ((k % self.w) as i64 - self.mx, (k / self.w) as i64 - self.my)
    }

    pub fn set(&mut self, x: i64, y: i64) {
        if let Some(k) = self.idx(x, y) {
            self.bits[k] = true;
        }
    }

    pub fn get(&self, x: i64, y: i64) -> bool {
        self.idx(x, y).map(|k| self.bits[k]).unwrap_or(false)
    }

    /// Domain sites selected by `keep`.
    pub fn from_domain(domain: &Domain, margin: usize, keep: impl Fn(usize) -> bool) -> Self {
        let mut m = SiteMask::empty(domain, margin);
        for (i, s) in domain.sites().iter().enumerate() {
            if keep(i) {
                m.set(s.x as i64, s.y as i64);
            }
        }
        m
    }

    /// Every cell of the extended window that is not a domain site.
    pub fn complement(domain: &Domain, margin: usize) -> Self {
        let mut m = SiteMask::empty(domain, margin);
        for k in 0..m.bits.len() {
            let (x, y) = m.coords(k);
            let inside = domain.bbox.contains(x, y) && domain.index_at(x, y).is_some();
            m.bits[k] = !inside;
        }
        m
    }

    pub fn dilate(&self, r: f64) -> Self {
        let mut out = SiteMask { bits: vec![false; self.bits.len()], ..self.clone() };
        let offsets = disc_offsets(r);
        for k in 0..self.bits.len() {
            if self.bits[k] {
                let (x, y) = self.coords(k);
                for &(dx, dy) in &offsets {
                    if let Some(j) = out.idx(x + dx, y + dy) {
                        out.bits[j] = true;
                    }
                }
            }
        }
        out
    }

    pub fn and(&self, other: &SiteMask) -> Self {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect();
        SiteMask { bits, ..self.clone() }
    }

    pub fn restrict_to_box(&self) -> Self {
        let mut out = self.clone();
        for k in 0..out.bits.len() {
            let (x, y) = self.coords(k);
            if !self.metric.bbox.contains(x, y) {
                out.bits[k] = false;
            }
        }
        out
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn points(&self) -> Vec<(i64, i64)> {
        (0..self.bits.len()).filter(|&k| self.bits[k]).map(|k| self.coords(k)).collect()
    }

    /// 8-connected components, as coordinate lists.
    pub fn components(&self) -> Vec<Vec<(i64, i64)>> {
        let mut seen = vec![false; self.bits.len()];
        let mut out = Vec::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = Vec::new();
            let mut stack = vec![start];
            while let Some(k) = stack.pop() {
                let (x, y) = self.coords(k);
                comp.push((x, y));
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if let Some(j) = self.idx(x + dx, y + dy) {
                            if self.bits[j] && !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Largest diameter among the connected components.
    pub fn component_diameter(&self) -> f64 {
        let mut best = 0i64;
        for comp in self.components() {
            for (a, p) in comp.iter().enumerate() {
                for q in &comp[a + 1..] {
                    best = best.max(self.metric.dist2(*p, *q));
                }
            }
        }
        (best as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub r: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub r_max: usize,
    pub threshold: f64,
    /// Smallest `S` with `B_R(W₊) ∩ B_R(W₋) ⊆ B_S(N)`.
    pub condition_i: Vec<RadiusRow>,
    /// Largest component diameter of `B_R(X∖W) ∩ B_R(N)` within the domain.
    pub condition_ii: Vec<RadiusRow>,
    pub linear_growth: bool,
    pub bounded: bool,
    pub admissible: bool,
    /// Finite-scale reading of condition (i).
    pub heuristic: String,
}

const HEURISTIC: &str = "condition (i) accepted when S_R <= 2R + 2 for all R <= r_max";

fn default_threshold(domain: &Domain) -> f64 {
    domain.bbox.shorter_side() as f64 / 4.0
}

/// Tables for both admissibility conditions at radii `1..=r_max`.
/// `threshold` defaults to a quarter of the shorter box side.
pub fn check_admissibility(
    domain: &Domain,
    partition: &Partition,
    r_max: usize,
    threshold: Option<f64>,
) -> AdmissibilityReport {
    let r_max = r_max.max(1);
    let threshold = threshold.unwrap_or_else(|| default_threshold(domain));
    let margin = r_max + 1;
    let plus = SiteMask::from_domain(domain, margin, |i| partition.in_plus(i));
    let minus = SiteMask::from_domain(domain, margin, |i| !partition.in_plus(i));
    let n_mask = partition.interface_mask();
    let interface = SiteMask::from_domain(domain, margin, |i| n_mask[i]);
    let n_points = interface.points();
    let inside = SiteMask::from_domain(domain, margin, |_| true);
    let outside = SiteMask::complement(domain, margin);
    let metric = domain.metric();

    let mut condition_i = Vec::new();
    let mut condition_ii = Vec::new();
    for r in 1..=r_max {
        let rr = r as f64;
        let both = plus.dilate(rr).and(&minus.dilate(rr)).restrict_to_box();
        let mut s2 = 0i64;
        for z in both.points() {
            let d = n_points.iter().map(|&p| metric.dist2(z, p)).min().unwrap_or(0);
            s2 = s2.max(d);
        }
        condition_i.push(RadiusRow { r, value: (s2 as f64).sqrt() });
        let q = outside.dilate(rr).and(&interface.dilate(rr)).and(&inside);
        condition_ii.push(RadiusRow { r, value: q.component_diameter() });
    }
    let linear_growth = condition_i.iter().all(|row| row.value <= 2.0 * row.r as f64 + 2.0 + 1e-9);
    let bounded = condition_ii.iter().all(|row| row.value <= threshold);
    AdmissibilityReport {
        r_max,
        threshold,
        condition_i,
        condition_ii,
        linear_growth,
        bounded,
        admissible: linear_growth && bounded,
        heuristic: HEURISTIC.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BordanceReport {
    /// Largest component diameter of `B_R(X∖W) ∩ (W₊ Δ W₊′)`.
    pub difference: Vec<RadiusRow>,
    pub threshold: f64,
    pub intersection_admissible: bool,
    pub bordant: bool,
}

/// Whether two partitions of the same domain differ only by a bounded
/// amount near the boundary, with an admissible common refinement.
pub fn bordant(p1: &Partition, p2: &Partition, domain: &Domain, threshold: Option<f64>, r_max: usize) -> BordanceReport {
    let threshold = threshold.unwrap_or_else(|| default_threshold(domain));
    let r_max = r_max.max(1);
    let margin = r_max + 1;
    let diff = SiteMask::from_domain(domain, margin, |i| p1.in_plus(i) != p2.in_plus(i));
    let outside = SiteMask::complement(domain, margin);
    let difference: Vec<RadiusRow> = (1..=r_max)
        .map(|r| RadiusRow { r, value: outside.dilate(r as f64).and(&diff).component_diameter() })
        .collect();
    let meet: Vec<bool> = (0..domain.len()).map(|i| p1.in_plus(i) && p2.in_plus(i)).collect();
    let intersection_admissible = match Partition::from_mask(domain, meet, CutSpec::Mask) {
        Ok(p) => check_admissibility(domain, &p, r_max, Some(threshold)).admissible,
        Err(_) => false,
    };
    let small = difference.iter().all(|row| row.value <= threshold);
    BordanceReport { difference, threshold, intersection_admissible, bordant: small && intersection_admissible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, make_partition, BoundingBox, ShapeSpec};

    fn rect(nx: usize, ny: usize) -> Domain {
        build_domain(&ShapeSpec::Strip { x0: 0, width: nx, periodic_y: false }, BoundingBox::new(nx, ny)).unwrap()
    }

    #[test]
    fn crossing_cut_is_admissible() {
        let d = rect(30, 60);
        let p = make_partition(&d, &CutSpec::Horizontal { y: 30 }).unwrap();
        let rep = check_admissibility(&d, &p, 3, None);
        assert!(rep.admissible, "{rep:?}");
        let s: Vec<f64> = rep.condition_i.iter().map(|r| r.value).collect();
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn quadrant_cut_is_admissible() {
        let d = rect(30, 30);
        let p = make_partition(&d, &CutSpec::Quadrant { x: 15, y: 15 }).unwrap();
        assert!(check_admissibility(&d, &p, 2, None).admissible);
    }

    #[test]
    fn cut_along_the_edge_is_not() {
        let d = build_domain(&ShapeSpec::Cylinder, BoundingBox::new(20, 40)).unwrap();
        let p = make_partition(&d, &CutSpec::Vertical { x: 1 }).unwrap();
        let rep = check_admissibility(&d, &p, 2, None);
        assert!(!rep.bounded);
        assert!(!rep.admissible);
    }

    #[test]
    fn torus_cuts_are_admissible() {
        let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(12, 12)).unwrap();
        let p = make_partition(&d, &CutSpec::Horizontal { y: 6 }).unwrap();
        let rep = check_admissibility(&d, &p, 2, None);
        assert!(rep.admissible);
        assert!(rep.condition_ii.iter().all(|r| r.value == 0.0));
    }

    #[test]
    fn translated_and_bent_cuts_are_bordant() {
        let d = rect(30, 60);
        let base = make_partition(&d, &CutSpec::Horizontal { y: 30 }).unwrap();
        let moved = make_partition(&d, &CutSpec::Horizontal { y: 32 }).unwrap();
        let bent = make_partition(&d, &CutSpec::Bent { x_bend: 15, y_left: 30, y_right: 33 }).unwrap();
        assert!(bordant(&base, &base, &d, None, 2).bordant);
        assert!(bordant(&base, &moved, &d, None, 2).bordant);
        assert!(bordant(&base, &bent, &d, None, 2).bordant);
        assert!(bordant(&bent, &base, &d, None, 2).bordant);
        let far = make_partition(&d, &CutSpec::Horizontal { y: 50 }).unwrap();
        assert!(!bordant(&base, &far, &d, None, 2).bordant);
    }
}
