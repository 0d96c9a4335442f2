//! Finite lattice windows in Z², their boundaries, metric balls and partitions.

mod admissibility;
mod partition;

pub use admissibility::{bordant, check_admissibility, AdmissibilityReport, BordanceReport, SiteMask};
pub use partition::{make_partition, CutSpec, Partition};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice point. Ordering is row-major: by `y`, then `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }
}

impl Ord for Site {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sites `0..nx` × `0..ny`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub nx: usize,
    pub ny: usize,
}

impl BoundingBox {
    pub fn new(nx: usize, ny: usize) -> Self {
        BoundingBox { nx, ny }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.nx && (y as usize) < self.ny
    }

    pub fn area(&self) -> usize {
        self.nx * self.ny
    }

    pub fn linear(&self, s: Site) -> usize {
        s.y as usize * self.nx + s.x as usize
    }

    pub fn shorter_side(&self) -> usize {
        self.nx.min(self.ny)
    }
}

/// Per-axis periodicity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Wrap {
    pub x: bool,
    pub y: bool,
}

/// Euclidean metric on Z² with periodic axes folded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Metric {
    pub bbox: BoundingBox,
    pub wrap: Wrap,
}

impl Metric {
    pub fn delta(&self, a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
        let mut dx = (a.0 - b.0).abs();
        let mut dy = (a.1 - b.1).abs();
        if self.wrap.x {
            let n = self.bbox.nx as i64;
            dx %= n;
            dx = dx.min(n - dx);
        }
        if self.wrap.y {
            let n = self.bbox.ny as i64;
            dy %= n;
            dy = dy.min(n - dy);
        }
        (dx, dy)
    }

    pub fn dist2(&self, a: (i64, i64), b: (i64, i64)) -> i64 {
        let (dx, dy) = self.delta(a, b);
        dx * dx + dy * dy
    }

    pub fn dist(&self, a: Site, b: Site) -> f64 {
        (self.dist2(a.into(), b.into()) as f64).sqrt()
    }

    /// Fold periodic coordinates into the box; `None` if outside an open axis.
    pub fn normalize(&self, x: i64, y: i64) -> Option<Site> {
        let nx = self.bbox.nx as i64;
        let ny = self.bbox.ny as i64;
        let x = if self.wrap.x { x.rem_euclid(nx) } else { x };
        let y = if self.wrap.y { y.rem_euclid(ny) } else { y };
        self.bbox.contains(x, y).then(|| Site::new(x as i32, y as i32))
    }
}

impl From<Site> for (i64, i64) {
    fn from(s: Site) -> Self {
        (s.x as i64, s.y as i64)
    }
}

/// Shape of a domain inside its bounding box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// Periodic in both directions; no boundary.
    Torus,
    /// Periodic in y, open in x, filling the box.
    Cylinder,
    /// Columns `x0..x0+width`, optionally periodic in y.
    Strip { x0: usize, width: usize, #[serde(default)] periodic_y: bool },
    /// A strip whose two edges carry seeded notches of depth at most `max_depth`.
    RoughStrip {
        x0: usize,
        width: usize,
        #[serde(default)]
        periodic_y: bool,
        #[serde(default = "default_notch_depth")]
        max_depth: usize,
        seed: u64,
    },
    /// Columns `x >= x0` of an open window.
    HalfPlane { x0: usize },
    /// `(x-cx)(y-cy) >= -h²` about the box centre: the region between two hyperbola branches.
    TwoBoundary { h: f64 },
    /// `r_in <= |s - centre| <= r_out`.
    Annulus { r_in: f64, r_out: f64 },
}

fn default_notch_depth() -> usize {
    3
}

impl ShapeSpec {
    pub fn wrap(&self) -> Wrap {
        match self {
            ShapeSpec::Torus => Wrap { x: true, y: true },
            ShapeSpec::Cylinder => Wrap { x: false, y: true },
            ShapeSpec::Strip { periodic_y, .. } | ShapeSpec::RoughStrip { periodic_y, .. } => {
                Wrap { x: false, y: *periodic_y }
            }
            _ => Wrap::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShapeSpec::Torus => "torus",
            ShapeSpec::Cylinder => "cylinder",
            ShapeSpec::Strip { .. } => "strip",
            ShapeSpec::RoughStrip { .. } => "rough_strip",
            ShapeSpec::HalfPlane { .. } => "half_plane",
            ShapeSpec::TwoBoundary { .. } => "two_boundary",
            ShapeSpec::Annulus { .. } => "annulus",
        }
    }

    /// Whether a missing neighbour at raw coordinates `(x, y)` belongs to the
    /// physical complement of the half-space rather than to the outside of
    /// the finite window.
    fn exterior_is_physical(&self, bbox: BoundingBox, x: i64, y: i64) -> bool {
        if bbox.contains(x, y) {
            return true;
        }
        let x_out = x < 0 || x >= bbox.nx as i64;
        match self {
            ShapeSpec::Cylinder | ShapeSpec::Strip { .. } | ShapeSpec::RoughStrip { .. } => x_out,
            ShapeSpec::HalfPlane { .. } => x < 0,
            _ => false,
        }
    }
}

/// Boundary classification of a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Interior,
    /// On the `k`-th connected component of the physical boundary.
    Physical(usize),
    /// Only adjacent to the edge of the finite window.
    Truncation,
}

/// A finite set of lattice sites with row-major order, wrap flags and boundary.
#[derive(Clone, Debug)]
pub struct Domain {
    pub shape: ShapeSpec,
    pub bbox: BoundingBox,
    pub wrap: Wrap,
    sites: Vec<Site>,
    lookup: Vec<u32>,
    boundary: Vec<bool>,
    tags: Vec<BoundaryTag>,
    components: usize,
}

const ABSENT: u32 = u32::MAX;

/// Builds the domain of `shape` inside `bbox`.
pub fn build_domain(shape: &ShapeSpec, bbox: BoundingBox) -> Result<Domain> {
    if bbox.nx == 0 || bbox.ny == 0 {
        return Err(Error::Geometry("empty bounding box".into()));
    }
    let (nx, ny) = (bbox.nx, bbox.ny);
    let member: Box<dyn Fn(usize, usize) -> bool> = match shape {
        ShapeSpec::Torus | ShapeSpec::Cylinder => Box::new(|_, _| true),
        ShapeSpec::Strip { x0, width, .. } => {
            if *width == 0 || x0 + width > nx {
                return Err(Error::Geometry(format!("strip {x0}+{width} exceeds box width {nx}")));
            }
            let (x0, w) = (*x0, *width);
            Box::new(move |x, _| x >= x0 && x < x0 + w)
        }
        ShapeSpec::RoughStrip { x0, width, max_depth, seed, .. } => {
            if *width == 0 || x0 + width > nx {
                return Err(Error::Geometry(format!("strip {x0}+{width} exceeds box width {nx}")));
            }
            if 2 * max_depth + 1 > *width {
                return Err(Error::Geometry(format!("notch depth {max_depth} too deep for width {width}")));
            }
            let (left, right) = notch_profile(ny, *max_depth, *seed);
            let (x0, w) = (*x0, *width);
            Box::new(move |x, y| x >= x0 + left[y] && x + right[y] < x0 + w)
        }
        ShapeSpec::HalfPlane { x0 } => {
            if *x0 >= nx {
                return Err(Error::Geometry(format!("half-plane edge {x0} outside box")));
            }
            let x0 = *x0;
            Box::new(move |x, _| x >= x0)
        }
        ShapeSpec::TwoBoundary { h } => {
            let (cx, cy, h2) = ((nx as f64 - 1.0) / 2.0, (ny as f64 - 1.0) / 2.0, h * h);
            Box::new(move |x, y| (x as f64 - cx) * (y as f64 - cy) >= -h2)
        }
        ShapeSpec::Annulus { r_in, r_out } => {
            if r_in > r_out || *r_in < 0.0 {
                return Err(Error::Geometry("annulus radii out of order".into()));
            }
            let (cx, cy) = ((nx as f64 - 1.0) / 2.0, (ny as f64 - 1.0) / 2.0);
            let (r_in, r_out) = (*r_in, *r_out);
            Box::new(move |x, y| {
                let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                r >= r_in && r <= r_out
            })
        }
    };
    let mut sites = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            if member(x, y) {
                sites.push(Site::new(x as i32, y as i32));
            }
        }
    }
    Domain::from_sites(shape.clone(), bbox, shape.wrap(), sites)
}

fn notch_profile(ny: usize, max_depth: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut side = || {
        let mut depth = vec![0; ny];
        let mut y = 0;
        while y < ny {
            if max_depth > 0 && rng.gen_bool(0.5) {
                let len = rng.gen_range(1..=4);
                let d = rng.gen_range(1..=max_depth);
                for v in depth.iter_mut().skip(y).take(len) {
                    *v = d;
                }
                y += len;
            } else {
                y += 1;
            }
        }
        depth
    };
    let left = side();
    let right = side();
    (left, right)
}

impl Domain {
    /// Domain from an explicit site list; boundary tags follow `shape`.
    pub fn from_sites(shape: ShapeSpec, bbox: BoundingBox, wrap: Wrap, mut sites: Vec<Site>) -> Result<Domain> {
        if sites.is_empty() {
            return Err(Error::Geometry("domain has no sites".into()));
        }
        sites.sort();
        sites.dedup();
        let mut lookup = vec![ABSENT; bbox.area()];
        for (i, s) in sites.iter().enumerate() {
            if !bbox.contains(s.x as i64, s.y as i64) {
                return Err(Error::Geometry(format!("site ({}, {}) outside bounding box", s.x, s.y)));
            }
            lookup[bbox.linear(*s)] = i as u32;
        }
        let metric = Metric { bbox, wrap };
        let mut boundary = vec![false; sites.len()];
        let mut physical = vec![false; sites.len()];
        for (i, s) in sites.iter().enumerate() {
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (rx, ry) = (s.x as i64 + dx, s.y as i64 + dy);
                let present = metric
                    .normalize(rx, ry)
                    .map(|n| lookup[bbox.linear(n)] != ABSENT)
                    .unwrap_or(false);
                if !present {
                    boundary[i] = true;
                    let (fx, fy) = match metric.normalize(rx, ry) {
                        Some(n) => (n.x as i64, n.y as i64),
                        None => (rx, ry),
                    };
                    if shape.exterior_is_physical(bbox, fx, fy) {
                        physical[i] = true;
                    }
                }
            }
        }
        let mut tags = vec![BoundaryTag::Interior; sites.len()];
        let mut components = 0;
        for start in 0..sites.len() {
            if !physical[start] || tags[start] != BoundaryTag::Interior {
                continue;
            }
            let id = components;
            components += 1;
            tags[start] = BoundaryTag::Physical(id);
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let s = sites[i];
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if let Some(n) = metric.normalize(s.x as i64 + dx, s.y as i64 + dy) {
                            let j = lookup[bbox.linear(n)];
                            if j != ABSENT && physical[j as usize] && tags[j as usize] == BoundaryTag::Interior {
                                tags[j as usize] = BoundaryTag::Physical(id);
                                stack.push(j as usize);
                            }
                        }
                    }
                }
            }
        }
        for i in 0..sites.len() {
            if boundary[i] && !physical[i] {
                tags[i] = BoundaryTag::Truncation;
            }
        }
        Ok(Domain { shape, bbox, wrap, sites, lookup, boundary, tags, components })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Site {
        self.sites[i]
    }

    pub fn metric(&self) -> Metric {
        Metric { bbox: self.bbox, wrap: self.wrap }
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        if !self.bbox.contains(s.x as i64, s.y as i64) {
            return None;
        }
        let j = self.lookup[self.bbox.linear(s)];
        (j != ABSENT).then_some(j as usize)
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index_of(s).is_some()
    }

    /// Index of the site at raw coordinates, folding periodic axes.
    pub fn index_at(&self, x: i64, y: i64) -> Option<usize> {
        self.metric().normalize(x, y).and_then(|s| self.index_of(s))
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_sites(&self) -> Vec<Site> {
        (0..self.len()).filter(|&i| self.boundary[i]).map(|i| self.sites[i]).collect()
    }

    pub fn tag(&self, i: usize) -> BoundaryTag {
        self.tags[i]
    }

    /// Number of connected physical boundary components.
    pub fn physical_components(&self) -> usize {
        self.components
    }

    /// Stable fingerprint of the site basis, used to match operators to domains.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.bbox.nx.hash(&mut h);
        self.bbox.ny.hash(&mut h);
        self.wrap.hash(&mut h);
        self.sites.hash(&mut h);
        h.finish()
    }

    /// Largest distance from a site to the boundary.
    pub fn depth(&self) -> f64 {
        distance_to_boundary(self).into_iter().fold(0.0, f64::max)
    }

    /// `x,y,is_boundary` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,is_boundary\n");
        for (i, s) in self.sites.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", s.x, s.y, self.boundary[i] as u8);
        }
        out
    }
}

/// Offsets `(dx, dy)` with `dx² + dy² <= r²`.
pub(crate) fn disc_offsets(r: f64) -> Vec<(i64, i64)> {
    let k = r.floor() as i64;
    let r2 = r * r + 1e-9;
    let mut out = Vec::new();
    for dy in -k..=k {
        for dx in -k..=k {
            if ((dx * dx + dy * dy) as f64) <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// All sites of the bounding box within distance `r` of `a`.
pub fn ball(a: &BTreeSet<Site>, r: f64, domain: &Domain) -> Result<BTreeSet<Site>> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::Geometry(format!("negative radius {r}")));
    }
    let metric = domain.metric();
    let mut out = BTreeSet::new();
    for (dx, dy) in disc_offsets(r) {
        for s in a {
            if let Some(n) = metric.normalize(s.x as i64 + dx, s.y as i64 + dy) {
                out.insert(n);
            }
        }
    }
    Ok(out)
}

/// Exact Euclidean distance of every site to the boundary, in site order.
/// Every entry is `+inf` when the boundary is empty.
pub fn distance_to_boundary(domain: &Domain) -> Vec<f64> {
    let ny = domain.bbox.ny;
    let mut rows: Vec<Vec<i64>> = vec![Vec::new(); ny];
    for (i, s) in domain.sites().iter().enumerate() {
        if domain.is_boundary(i) {
            rows[s.y as usize].push(s.x as i64);
        }
    }
    let occupied: Vec<usize> = (0..ny).filter(|&y| !rows[y].is_empty()).collect();
    if occupied.is_empty() {
        return vec![f64::INFINITY; domain.len()];
    }
    let metric = domain.metric();
    domain
        .sites()
        .iter()
        .map(|s| {
            let (x, y) = (s.x as i64, s.y as i64);
            let mut best = i64::MAX;
            for &by in &occupied {
                let (_, dy) = metric.delta((0, y), (0, by as i64));
                if dy * dy >= best {
                    continue;
                }
                let row = &rows[by];
                let k = row.partition_point(|&bx| bx < x);
                let mut candidates = vec![];
                if k < row.len() {
                    candidates.push(row[k]);
                }
                if k > 0 {
                    candidates.push(row[k - 1]);
                }
                if metric.wrap.x {
                    candidates.push(row[0]);
                    candidates.push(row[row.len() - 1]);
                }
                for bx in candidates {
                    let (dx, _) = metric.delta((x, 0), (bx, 0));
                    best = best.min(dx * dx + dy * dy);
                }
            }
            (best as f64).sqrt()
        })
        .collect()
}
