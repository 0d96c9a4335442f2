use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_to_boundary, BoundaryTag, Domain, Partition, Site};

/// A place where the interface `N` meets the boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Crossing {
    pub id: usize,
    /// Smallest site of the cluster in row-major order.
    pub anchor: Site,
    pub centroid: (f64, f64),
    pub sites: Vec<usize>,
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, Default)]
pub struct CrossingMap {
    pub crossings: Vec<Crossing>,
}

/// Interface sites closer than this to the boundary form crossings.
pub const CROSSING_DEPTH: f64 = 2.0;

impl CrossingMap {
    /// Connected clusters of interface sites within distance 2 of the boundary.
    pub fn detect(domain: &Domain, partition: &Partition) -> CrossingMap {
        let dist = distance_to_boundary(domain);
        let n = partition.interface_mask();
        let keep: Vec<bool> = (0..domain.len()).map(|i| n[i] && dist[i] <= CROSSING_DEPTH).collect();
        Self::clusters(domain, &keep, true)
    }

    /// Connected clusters of the whole interface; for boundaryless models such as rings.
    pub fn from_interface(domain: &Domain, partition: &Partition) -> CrossingMap {
        Self::clusters(domain, partition.interface_mask(), false)
    }

    fn clusters(domain: &Domain, keep: &[bool], tagged: bool) -> CrossingMap {
        let metric = domain.metric();
        let mut seen = vec![false; domain.len()];
        let mut crossings = Vec::new();
        for start in 0..domain.len() {
            if !keep[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            let mut sites = vec![];
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                sites.push(i);
                let s = domain.site(i);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if let Some(j) = domain.index_at(s.x as i64 + dx, s.y as i64 + dy) {
                            if keep[j] && !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
            sites.sort_unstable();
            let anchor = domain.site(sites[0]);
            // Unwrap periodic coordinates relative to the anchor before averaging.
            let (mut cx, mut cy) = (0.0, 0.0);
            for &i in &sites {
                let s = domain.site(i);
                let (mut dx, mut dy) = ((s.x - anchor.x) as f64, (s.y - anchor.y) as f64);
                if metric.wrap.x && dx.abs() > domain.bbox.nx as f64 / 2.0 {
                    dx -= dx.signum() * domain.bbox.nx as f64;
                }
                if metric.wrap.y && dy.abs() > domain.bbox.ny as f64 / 2.0 {
                    dy -= dy.signum() * domain.bbox.ny as f64;
                }
                cx += dx;
                cy += dy;
            }
            let k = sites.len() as f64;
            let centroid = (anchor.x as f64 + cx / k, anchor.y as f64 + cy / k);
            let tag = if tagged { Self::tag_of(domain, &sites) } else { BoundaryTag::Interior };
            crossings.push(Crossing { id: 0, anchor, centroid, sites, tag });
        }
        crossings.sort_by_key(|c| c.anchor);
        for (k, c) in crossings.iter_mut().enumerate() {
            c.id = k;
        }
        CrossingMap { crossings }
    }

    fn tag_of(domain: &Domain, sites: &[usize]) -> BoundaryTag {
        let metric = domain.metric();
        let mut best: Option<(i64, usize)> = None;
        let mut truncation = false;
        for b in 0..domain.len() {
            let tag = domain.tag(b);
            if tag == BoundaryTag::Interior {
                continue;
            }
            let d2 = sites.iter().map(|&i| metric.dist2(domain.site(i).into(), domain.site(b).into())).min().unwrap();
            if d2 as f64 > CROSSING_DEPTH * CROSSING_DEPTH + 1e-9 {
                continue;
            }
            match tag {
                BoundaryTag::Physical(k) => {
                    if best.map_or(true, |(d, _)| d2 < d) {
                        best = Some((d2, k));
                    }
                }
                _ => truncation = true,
            }
        }
        match best {
            Some((_, k)) => BoundaryTag::Physical(k),
            None if truncation => BoundaryTag::Truncation,
            None => BoundaryTag::Interior,
        }
    }

    pub fn len(&self) -> usize {
        self.crossings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty()
    }

    fn distance_to(&self, domain: &Domain, c: &Crossing, s: Site) -> i64 {
        let metric = domain.metric();
        c.sites.iter().map(|&i| metric.dist2(s.into(), domain.site(i).into())).min().unwrap_or(i64::MAX)
    }

    /// Smallest distance between sites of two different crossings.
    pub fn min_separation(&self, domain: &Domain) -> f64 {
        let mut best = i64::MAX;
        for (a, ca) in self.crossings.iter().enumerate() {
            for cb in &self.crossings[a + 1..] {
                for &i in &ca.sites {
                    best = best.min(self.distance_to(domain, cb, domain.site(i)));
                }
            }
        }
        if best == i64::MAX {
            f64::INFINITY
        } else {
            (best as f64).sqrt()
        }
    }

    /// Owning crossing of every site: the nearest one, ties to the lower id.
    pub fn voronoi(&self, domain: &Domain) -> Vec<usize> {
        domain
            .sites()
            .iter()
            .map(|&s| {
                let mut owner = 0;
                let mut best = i64::MAX;
                for c in &self.crossings {
                    let d = self.distance_to(domain, c, s);
                    if d < best {
                        best = d;
                        owner = c.id;
                    }
                }
                owner
            })
            .collect()
    }

    /// Per-crossing windows: the Voronoi cell, cut to a ball of `radius`
    /// around the crossing's sites when given.
    pub fn windows(&self, domain: &Domain, radius: Option<f64>) -> Vec<Vec<usize>> {
        let owner = self.voronoi(domain);
        let mut out = vec![Vec::new(); self.len()];
        for (i, &o) in owner.iter().enumerate() {
            if self.is_empty() {
                break;
            }
            if let Some(r) = radius {
                let d = self.distance_to(domain, &self.crossings[o], domain.site(i));
                if d as f64 > r * r + 1e-9 {
                    continue;
                }
            }
            out[o].push(i);
        }
        out
    }

    /// Errors if `window` contains sites of more than one crossing.
    pub fn validate_window(&self, window: &[usize]) -> Result<()> {
        let hits: Vec<usize> = self
            .crossings
            .iter()
            .filter(|c| c.sites.iter().any(|s| window.contains(s)))
            .map(|c| c.id)
            .collect();
        if hits.len() > 1 {
            return Err(Error::Crossings(format!("window overlaps crossings {hits:?}")));
        }
        Ok(())
    }
}
