use serde::{Deserialize, Serialize};

use super::{Domain, Site};
use crate::error::{Error, Result};

/// How a domain is split into `W₊` and `W₋`. Each variant names the set `W₊`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutSpec {
    /// `y >= y` (the upper half).
    Horizontal { y: i32 },
    /// `x >= x`.
    Vertical { x: i32 },
    /// Stepped line: `y >= y_left` for `x < x_bend`, `y >= y_right` beyond.
    Bent { x_bend: i32, y_left: i32, y_right: i32 },
    /// `y - x >= offset`.
    Diagonal { offset: i32 },
    /// Closed quadrant `x' >= x, y' >= y`.
    Quadrant { x: i32, y: i32 },
    /// Explicit `W₊` given as a site mask (used for intersections).
    Mask,
}

impl CutSpec {
    fn contains(&self, s: Site) -> bool {
        match *self {
            CutSpec::Horizontal { y } => s.y >= y,
            CutSpec::Vertical { x } => s.x >= x,
            CutSpec::Bent { x_bend, y_left, y_right } => s.y >= if s.x < x_bend { y_left } else { y_right },
            CutSpec::Diagonal { offset } => s.y - s.x >= offset,
            CutSpec::Quadrant { x, y } => s.x >= x && s.y >= y,
            CutSpec::Mask => false,
        }
    }

    fn within(&self, nx: i32, ny: i32) -> bool {
        match *self {
            CutSpec::Horizontal { y } => (0..=ny).contains(&y),
            CutSpec::Vertical { x } => (0..=nx).contains(&x),
            CutSpec::Bent { x_bend, y_left, y_right } => {
                (0..=nx).contains(&x_bend) && (0..=ny).contains(&y_left) && (0..=ny).contains(&y_right)
            }
            CutSpec::Diagonal { offset } => offset > -nx && offset < ny,
            CutSpec::Quadrant { x, y } => (0..nx).contains(&x) && (0..ny).contains(&y),
            CutSpec::Mask => true,
        }
    }
}

/// `W = W₊ ∪ W₋` with the two-sided collar `N` of the cut.
#[derive(Clone, Debug)]
pub struct Partition {
    pub cut: CutSpec,
    pub swapped: bool,
    plus: Vec<bool>,
    interface: Vec<bool>,
}

/// Splits `domain` along `cut`.
pub fn make_partition(domain: &Domain, cut: &CutSpec) -> Result<Partition> {
    if !cut.within(domain.bbox.nx as i32, domain.bbox.ny as i32) {
        return Err(Error::Geometry(format!("cut {cut:?} lies outside the bounding box")));
    }
    let plus = domain.sites().iter().map(|&s| cut.contains(s)).collect();
    Partition::from_mask(domain, plus, cut.clone())
}

impl Partition {
    /// Partition with `W₊` given by `plus` (aligned with the domain's site order).
    pub fn from_mask(domain: &Domain, plus: Vec<bool>, cut: CutSpec) -> Result<Partition> {
        if plus.len() != domain.len() {
            return Err(Error::Geometry("mask length differs from domain".into()));
        }
        if plus.iter().all(|&b| b) || plus.iter().all(|&b| !b) {
            return Err(Error::Geometry(format!("cut {cut:?} misses the domain")));
        }
        let interface = collar(domain, &plus);
        Ok(Partition { cut, swapped: false, plus, interface })
    }

    /// Same cut with `W₊` and `W₋` exchanged.
    pub fn swap(&self) -> Partition {
        Partition {
            cut: self.cut.clone(),
            swapped: !self.swapped,
            plus: self.plus.iter().map(|b| !b).collect(),
            interface: self.interface.clone(),
        }
    }

    pub fn plus_mask(&self) -> &[bool] {
        &self.plus
    }

    pub fn interface_mask(&self) -> &[bool] {
        &self.interface
    }

    pub fn in_plus(&self, i: usize) -> bool {
        self.plus[i]
    }

    pub fn w_plus(&self, domain: &Domain) -> Vec<Site> {
        select(domain, |i| self.plus[i])
    }

    pub fn w_minus(&self, domain: &Domain) -> Vec<Site> {
        select(domain, |i| !self.plus[i])
    }

    pub fn interface(&self, domain: &Domain) -> Vec<Site> {
        select(domain, |i| self.interface[i])
    }
}

fn select(domain: &Domain, keep: impl Fn(usize) -> bool) -> Vec<Site> {
    (0..domain.len()).filter(|&i| keep(i)).map(|i| domain.site(i)).collect()
}

fn collar(domain: &Domain, plus: &[bool]) -> Vec<bool> {
    let mut n = vec![false; domain.len()];
    for (i, s) in domain.sites().iter().enumerate() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if let Some(j) = domain.index_at(s.x as i64 + dx, s.y as i64 + dy) {
                if plus[j] != plus[i] {
                    n[i] = true;
                }
            }
        }
    }
    n
}
