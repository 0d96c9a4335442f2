//! Magnetic lattice Hamiltonians, projections, translations and hopping unitaries
//! as dense matrices over a domain's site basis.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_to_boundary, Domain, Site};
use crate::linalg::{self, ONE, ZERO};

/// Flux `p/q` per plaquette in units of the flux quantum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FluxSpec {
    pub p: i64,
    pub q: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl FluxSpec {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q < 1 {
            return Err(Error::Config(format!("flux denominator must be positive, got {q}")));
        }
        if gcd(p, q) != 1 {
            return Err(Error::Config(format!("flux {p}/{q} is not in lowest terms")));
        }
        Ok(FluxSpec { p, q })
    }

    pub fn zero() -> Self {
        FluxSpec { p: 0, q: 1 }
    }

    pub fn alpha(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

impl FromStr for FluxSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse flux {s:?}"));
        match s.trim().split_once('/') {
            Some((p, q)) => FluxSpec::new(p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
            None => FluxSpec::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

impl TryFrom<String> for FluxSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FluxSpec> for String {
    fn from(f: FluxSpec) -> String {
        f.to_string()
    }
}

impl std::fmt::Display for FluxSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// Landau-x puts the Peierls phase on y-hops (`A = x dy`), Landau-y on x-hops.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    #[default]
    LandauX,
    LandauY,
}

/// Lattice model: Harper hopping plus an optional staggered potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub flux: FluxSpec,
    #[serde(default)]
    pub gauge: Gauge,
    /// On-site `m (-1)^(x+y)`.
    #[serde(default)]
    pub stagger: f64,
    /// Add `4 I`, moving the spectrum into `[0, 8]`.
    #[serde(default)]
    pub shift: bool,
}

impl Model {
    pub fn new(flux: FluxSpec) -> Self {
        Model { flux, gauge: Gauge::LandauX, stagger: 0.0, shift: false }
    }

    pub fn staggered(m: f64) -> Self {
        Model { stagger: m, ..Model::new(FluxSpec::zero()) }
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let q = self.flux.q as usize;
        let err = |reason: String| Error::Flux { p: self.flux.p, q: self.flux.q, reason };
        match self.gauge {
            Gauge::LandauX if domain.wrap.x && domain.bbox.nx % q != 0 => {
                return Err(err(format!("q must divide the periodic width {}", domain.bbox.nx)));
            }
            Gauge::LandauY if domain.wrap.y && domain.bbox.ny % q != 0 => {
                return Err(err(format!("q must divide the periodic height {}", domain.bbox.ny)));
            }
            _ => {}
        }
        if self.stagger != 0.0
            && ((domain.wrap.x && domain.bbox.nx % 2 == 1) || (domain.wrap.y && domain.bbox.ny % 2 == 1))
        {
            return Err(Error::Config("staggered potential needs even periodic dimensions".into()));
        }
        Ok(())
    }

    /// Dirichlet Hamiltonian on `domain`: `H = -(adjacency with Peierls phases)`.
    pub fn hamiltonian(&self, domain: &Domain) -> Result<HermitianOperator> {
        self.validate(domain)?;
        let n = domain.len();
        let alpha = self.flux.alpha();
        let mut h = Array2::<C64>::zeros((n, n));
        for (i, s) in domain.sites().iter().enumerate() {
            let (x, y) = (s.x as i64, s.y as i64);
            let (ax, ay) = match self.gauge {
                Gauge::LandauX => (-ONE, -C64::from_polar(1.0, 2.0 * PI * alpha * x as f64)),
                Gauge::LandauY => (-C64::from_polar(1.0, -2.0 * PI * alpha * y as f64), -ONE),
            };
            if let Some(j) = domain.index_at(x + 1, y) {
                h[[j, i]] += ax;
                h[[i, j]] += ax.conj();
            }
            if let Some(j) = domain.index_at(x, y + 1) {
                h[[j, i]] += ay;
                h[[i, j]] += ay.conj();
            }
            if self.stagger != 0.0 {
                let sign = if (x + y).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                h[[i, i]] += C64::new(self.stagger * sign, 0.0);
            }
            if self.shift {
                h[[i, i]] += C64::new(4.0, 0.0);
            }
        }
        Ok(HermitianOperator::new(h).on(domain))
    }
}

/// Harper Hamiltonian in Landau-x gauge without extra terms.
pub fn harper_hamiltonian(domain: &Domain, flux: FluxSpec) -> Result<HermitianOperator> {
    Model::new(flux).hamiltonian(domain)
}

/// Complex square matrix that is Hermitian bit-for-bit.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    matrix: Array2<C64>,
    domain: Option<u64>,
}

impl HermitianOperator {
    /// Symmetrizes `(M + M†)/2`, then copies the upper triangle onto the lower
    /// one so that `M = M†` holds exactly.
    pub fn new(mut m: Array2<C64>) -> Self {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "Hermitian operator must be square");
        for i in 0..n {
            m[[i, i]] = C64::new(m[[i, i]].re, 0.0);
            for j in i + 1..n {
                let v = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
                m[[i, j]] = v;
                m[[j, i]] = v.conj();
            }
        }
        HermitianOperator { matrix: m, domain: None }
    }

    pub fn identity(n: usize) -> Self {
        HermitianOperator { matrix: Array2::eye(n), domain: None }
    }

    /// Tags the operator with the site basis of `domain`.
    pub fn on(mut self, domain: &Domain) -> Self {
        self.domain = Some(domain.fingerprint());
        self
    }

    pub fn domain_fingerprint(&self) -> Option<u64> {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.matrix.view()
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::Config("operator dimensions differ".into()));
        }
        Ok(HermitianOperator { matrix: &self.matrix + &other.matrix, domain: self.domain })
    }

    pub fn scaled(&self, s: f64) -> HermitianOperator {
        HermitianOperator { matrix: self.matrix.mapv(|z| z * s), domain: self.domain }
    }

    /// `max |M - M†|`; zero by construction.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Nonzero entries per row, for fast products with sparse Hamiltonians.
    pub fn sparse_rows(&self) -> Vec<Vec<(usize, C64)>> {
        self.matrix
            .rows()
            .into_iter()
            .map(|row| row.iter().enumerate().filter(|(_, z)| **z != ZERO).map(|(j, z)| (j, *z)).collect())
            .collect()
    }

    /// Coordinate list `row,col,re,im` of the nonzero entries.
    pub fn to_coo_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for ((i, j), z) in self.matrix.indexed_iter() {
            if *z != ZERO {
                let _ = writeln!(out, "{i},{j},{:.17e},{:.17e}", z.re, z.im);
            }
        }
        out
    }

    /// Principal submatrix on the sites of `sub`.
    pub fn compress(&self, big: &Domain, sub: &Domain) -> Result<HermitianOperator> {
        Ok(HermitianOperator { matrix: compress(&self.matrix, big, sub)?, domain: Some(sub.fingerprint()) })
    }
}

/// Principal submatrix of `op` (indexed by `big`) on the site order of `sub`.
pub fn compress(op: &Array2<C64>, big: &Domain, sub: &Domain) -> Result<Array2<C64>> {
    if op.nrows() != big.len() {
        return Err(Error::Geometry("operator does not match the large domain".into()));
    }
    let map: Vec<usize> = sub
        .sites()
        .iter()
        .map(|s| big.index_of(*s).ok_or_else(|| Error::Geometry(format!("site ({}, {}) not in large domain", s.x, s.y))))
        .collect::<Result<_>>()?;
    let n = map.len();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| op[[map[i], map[j]]]))
}

#[derive(Clone, Debug)]
pub enum ProjectionKind {
    /// Multiplication by the characteristic function of a site set.
    Indicator(Vec<bool>),
    /// Spectral projection stored densely.
    Spectral(Array2<C64>),
}

#[derive(Clone, Debug)]
pub struct ProjectionOperator {
    pub kind: ProjectionKind,
}

impl ProjectionOperator {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        ProjectionOperator { kind: ProjectionKind::Indicator(mask) }
    }

    pub fn spectral(p: Array2<C64>) -> Self {
        ProjectionOperator { kind: ProjectionKind::Spectral(p) }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ProjectionKind::Indicator(m) => m.len(),
            ProjectionKind::Spectral(p) => p.nrows(),
        }
    }

    /// Diagonal weights of an indicator projection.
    pub fn indicator(&self) -> Option<Vec<f64>> {
        match &self.kind {
            ProjectionKind::Indicator(m) => Some(m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()),
            ProjectionKind::Spectral(_) => None,
        }
    }

    pub fn dense(&self) -> Array2<C64> {
        match &self.kind {
            ProjectionKind::Indicator(m) => {
                let mut p = Array2::zeros((m.len(), m.len()));
                for (i, &b) in m.iter().enumerate() {
                    if b {
                        p[[i, i]] = ONE;
                    }
                }
                p
            }
            ProjectionKind::Spectral(p) => p.clone(),
        }
    }

    /// `max(|P² - P|, |P - P†|)`.
    pub fn projection_defect(&self) -> f64 {
        match &self.kind {
            ProjectionKind::Indicator(_) => 0.0,
            ProjectionKind::Spectral(p) => {
                let p2 = linalg::matmul(p, p);
                let a = linalg::max_abs(&(&p2 - p).view());
                let b = linalg::max_abs(&(p - &linalg::adjoint(&p.view())).view());
                a.max(b)
            }
        }
    }
}

/// Indicator of `sites` in the basis of `domain`.
pub fn indicator_projection(sites: &[Site], domain: &Domain) -> Result<ProjectionOperator> {
    let mut mask = vec![false; domain.len()];
    for s in sites {
        let i = domain.index_of(*s).ok_or_else(|| Error::Geometry(format!("site ({}, {}) not in domain", s.x, s.y)))?;
        mask[i] = true;
    }
    Ok(ProjectionOperator::from_mask(mask))
}

/// Unitary stored densely or as `I + V diag(d) V†` with orthonormal `V`.
#[derive(Clone, Debug)]
pub enum UnitaryOperator {
    Dense(Array2<C64>),
    LowRank { n: usize, v: Array2<C64>, d: Vec<C64> },
}

impl UnitaryOperator {
    pub fn identity(n: usize) -> Self {
        UnitaryOperator::LowRank { n, v: Array2::zeros((n, 0)), d: vec![] }
    }

    pub fn dim(&self) -> usize {
        match self {
            UnitaryOperator::Dense(u) => u.nrows(),
            UnitaryOperator::LowRank { n, .. } => *n,
        }
    }

    pub fn dense(&self) -> Array2<C64> {
        match self {
            UnitaryOperator::Dense(u) => u.clone(),
            UnitaryOperator::LowRank { n, v, d } => {
                let vd = scale_columns(v, d);
                let mut u = linalg::gemm(&vd.view(), false, &v.view(), true);
                for i in 0..*n {
                    u[[i, i]] += ONE;
                }
                u
            }
        }
    }

    /// `max |U U† - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let deviation = match self {
            UnitaryOperator::Dense(u) => {
                let mut e = linalg::gemm(&u.view(), false, &u.view(), true);
                for i in 0..e.nrows() {
                    e[[i, i]] -= ONE;
                }
                e
            }
            UnitaryOperator::LowRank { v, d, .. } => {
                if v.ncols() == 0 {
                    return 0.0;
                }
                // U U† - I = V (D + D* + D G D*) V† with G = V†V.
                let g = linalg::gemm(&v.view(), true, &v.view(), false);
                let k = d.len();
                let core = Array2::from_shape_fn((k, k), |(a, b)| {
                    let mut c = d[a] * g[[a, b]] * d[b].conj();
                    if a == b {
                        c += d[a] + d[a].conj();
                    }
                    c
                });
                let vc = linalg::matmul(v, &core);
                linalg::gemm(&vc.view(), false, &v.view(), true)
            }
        };
        linalg::max_abs(&deviation.view())
    }

    /// `max |U - I|`.
    pub fn distance_from_identity(&self) -> f64 {
        match self {
            UnitaryOperator::Dense(u) => {
                let mut e = u.clone();
                for i in 0..e.nrows() {
                    e[[i, i]] -= ONE;
                }
                linalg::max_abs(&e.view())
            }
            UnitaryOperator::LowRank { v, d, .. } => {
                if v.ncols() == 0 {
                    return 0.0;
                }
                let vd = scale_columns(v, d);
                linalg::max_abs(&linalg::gemm(&vd.view(), false, &v.view(), true).view())
            }
        }
    }

    /// Diagonal of `U Π U†` for a diagonal `Π` with weights `pi`.
    pub fn conjugated_diagonal(&self, pi: &[f64]) -> Vec<f64> {
        match self {
            UnitaryOperator::Dense(u) => u
                .rows()
                .into_iter()
                .map(|row| row.iter().zip(pi).map(|(z, w)| z.norm_sqr() * w).sum())
                .collect(),
            UnitaryOperator::LowRank { v, d, .. } => {
                // U = I + W V†, W = V D:
                // diag(UΠU†)_s = Π_s (1 + 2 Re (W V†)_ss) + (W G W†)_ss, G = V†ΠV.
                let n = v.nrows();
                let k = v.ncols();
                if k == 0 {
                    return pi.to_vec();
                }
                let w = scale_columns(v, d);
                let pv = Array2::from_shape_fn((n, k), |(i, m)| v[[i, m]] * pi[i]);
                let g = linalg::gemm(&v.view(), true, &pv.view(), false);
                let wg = linalg::matmul(&w, &g);
                (0..n)
                    .map(|s| {
                        let mut wv = ZERO;
                        let mut quad = ZERO;
                        for m in 0..k {
                            wv += w[[s, m]] * v[[s, m]].conj();
                            quad += wg[[s, m]] * w[[s, m]].conj();
                        }
                        pi[s] * (1.0 + 2.0 * wv.re) + quad.re
                    })
                    .collect()
            }
        }
    }
}

fn scale_columns(v: &Array2<C64>, d: &[C64]) -> Array2<C64> {
    let mut out = v.clone();
    for (mut col, s) in out.columns_mut().into_iter().zip(d) {
        col.mapv_inplace(|z| z * s);
    }
    out
}

/// Magnetic translation by `step` on a torus: `e_s ↦ e^{iχ(s)} e_{s+step}`.
/// With `compensate`, `χ` is the gauge phase that makes the translation commute
/// with the Harper Hamiltonian; without it the translation is a bare permutation.
pub fn magnetic_translation(domain: &Domain, step: (i64, i64), model: &Model, compensate: bool) -> Result<UnitaryOperator> {
    if !(domain.wrap.x && domain.wrap.y) || domain.len() != domain.bbox.area() {
        return Err(Error::Geometry("magnetic translations need a full torus".into()));
    }
    let (a, b) = step;
    let (p, q) = (model.flux.p, model.flux.q);
    let (nx, ny) = (domain.bbox.nx as i64, domain.bbox.ny as i64);
    if compensate {
        let ok = match model.gauge {
            Gauge::LandauX => (p * a * ny).rem_euclid(q) == 0,
            Gauge::LandauY => (p * b * nx).rem_euclid(q) == 0,
        };
        if !ok {
            return Err(Error::Flux { p, q, reason: format!("step ({a}, {b}) is not a magnetic translation of this torus") });
        }
    }
    let alpha = model.flux.alpha();
    let n = domain.len();
    let mut u = Array2::zeros((n, n));
    for (i, s) in domain.sites().iter().enumerate() {
        let (x, y) = (s.x as i64, s.y as i64);
        let chi = if compensate {
            match model.gauge {
                Gauge::LandauX => 2.0 * PI * alpha * (a * y) as f64,
                Gauge::LandauY => -2.0 * PI * alpha * (b * x) as f64,
            }
        } else {
            0.0
        };
        let j = domain.index_at(x + a, y + b).expect("torus is closed under translation");
        u[[j, i]] = C64::from_polar(1.0, chi);
    }
    Ok(UnitaryOperator::Dense(u))
}

/// Permutation moving each path site to the next one, identity elsewhere.
/// The last site returns to the first, so the result is unitary whether the
/// path is closed or open; `closed` only records the intent.
pub fn hopping_unitary(domain: &Domain, path: &[Site], closed: bool) -> Result<UnitaryOperator> {
    let _ = closed;
    let mut idx = Vec::with_capacity(path.len());
    let mut seen = vec![false; domain.len()];
    for s in path {
        let i = domain.index_of(*s).ok_or_else(|| Error::Geometry(format!("path site ({}, {}) not in domain", s.x, s.y)))?;
        if seen[i] {
            return Err(Error::Geometry(format!("path visits ({}, {}) twice", s.x, s.y)));
        }
        seen[i] = true;
        idx.push(i);
    }
    let n = domain.len();
    let mut u = Array2::zeros((n, n));
    for i in 0..n {
        if !seen[i] {
            u[[i, i]] = ONE;
        }
    }
    for k in 0..idx.len() {
        u[[idx[(k + 1) % idx.len()], idx[k]]] = ONE;
    }
    Ok(UnitaryOperator::Dense(u))
}

/// Seeded Hermitian perturbation with nearest-neighbour range, supported on
/// sites within `depth` of the boundary, scaled to spectral norm `norm`.
pub fn boundary_perturbation(domain: &Domain, depth: f64, norm: f64, seed: u64) -> Result<HermitianOperator> {
    let dist = distance_to_boundary(domain);
    let near: Vec<bool> = dist.iter().map(|d| *d <= depth).collect();
    let n = domain.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Array2::<C64>::zeros((n, n));
    for (i, s) in domain.sites().iter().enumerate() {
        if !near[i] {
            continue;
        }
        m[[i, i]] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for (dx, dy) in [(1, 0), (0, 1)] {
            if let Some(j) = domain.index_at(s.x as i64 + dx, s.y as i64 + dy) {
                if near[j] {
                    let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m[[i, j]] += z;
                    m[[j, i]] += z.conj();
                }
            }
        }
    }
    let h = HermitianOperator::new(m);
    let spec = linalg::eigvalsh(&h.view())?;
    let current = spec.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if current == 0.0 {
        return Ok(h.on(domain));
    }
    Ok(h.scaled(norm / current).on(domain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, BoundingBox, ShapeSpec};

    fn torus(n: usize) -> Domain {
        build_domain(&ShapeSpec::Torus, BoundingBox::new(n, n)).unwrap()
    }

    fn commutator_norm(h: &HermitianOperator, u: &UnitaryOperator) -> f64 {
        let u = u.dense();
        let a = linalg::matmul(h.matrix(), &u);
        let b = linalg::matmul(&u, h.matrix());
        linalg::max_abs(&(&a - &b).view())
    }

    #[test]
    fn flux_parsing() {
        assert_eq!("1/3".parse::<FluxSpec>().unwrap(), FluxSpec { p: 1, q: 3 });
        assert_eq!("0".parse::<FluxSpec>().unwrap(), FluxSpec::zero());
        assert!("2/4".parse::<FluxSpec>().is_err());
        assert!("1/0".parse::<FluxSpec>().is_err());
        assert!("x".parse::<FluxSpec>().is_err());
    }

    #[test]
    fn harper_structure() {
        let d = torus(12);
        let h = harper_hamiltonian(&d, FluxSpec::new(1, 3).unwrap()).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
        for row in h.sparse_rows() {
            assert!(row.len() <= 4);
        }
        assert!(harper_hamiltonian(&torus(10), FluxSpec::new(1, 3).unwrap()).is_err());
    }

    #[test]
    fn plain_translation_commutes_along_y() {
        let d = torus(12);
        let model = Model::new(FluxSpec::new(1, 3).unwrap());
        let h = model.hamiltonian(&d).unwrap();
        let u = magnetic_translation(&d, (0, 1), &model, false).unwrap();
        assert_eq!(commutator_norm(&h, &u), 0.0);
        let u = magnetic_translation(&d, (3, 0), &model, true).unwrap();
        assert!(commutator_norm(&h, &u) < 1e-12);
        let u = magnetic_translation(&d, (1, 0), &model, false).unwrap();
        assert!(commutator_norm(&h, &u) > 0.1);
        let u = magnetic_translation(&d, (1, 0), &model, true).unwrap();
        assert!(commutator_norm(&h, &u) < 1e-12);
    }

    #[test]
    fn landau_y_translations() {
        let d = torus(12);
        let model = Model { gauge: Gauge::LandauY, ..Model::new(FluxSpec::new(1, 3).unwrap()) };
        let h = model.hamiltonian(&d).unwrap();
        let u = magnetic_translation(&d, (1, 0), &model, false).unwrap();
        assert_eq!(commutator_norm(&h, &u), 0.0);
        let u = magnetic_translation(&d, (2, 3), &model, true).unwrap();
        assert!(commutator_norm(&h, &u) < 1e-12);
    }

    #[test]
    fn incompatible_step() {
        let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(6, 4)).unwrap();
        let model = Model::new(FluxSpec::new(1, 3).unwrap());
        assert!(magnetic_translation(&d, (1, 0), &model, true).is_err());
        let strip = build_domain(&ShapeSpec::Cylinder, BoundingBox::new(6, 6)).unwrap();
        assert!(magnetic_translation(&strip, (0, 1), &model, false).is_err());
    }

    #[test]
    fn compress_identity_and_idempotence() {
        let big = torus(6);
        let sub = build_domain(&ShapeSpec::Strip { x0: 0, width: 3, periodic_y: true }, BoundingBox::new(6, 6)).unwrap();
        let id = HermitianOperator::identity(big.len());
        let c = id.compress(&big, &sub).unwrap();
        assert_eq!(c.matrix(), &Array2::<C64>::eye(sub.len()));
        let h = harper_hamiltonian(&big, FluxSpec::new(1, 3).unwrap()).unwrap();
        let once = h.compress(&big, &sub).unwrap();
        let twice = once.compress(&sub, &sub).unwrap();
        assert_eq!(once.matrix(), twice.matrix());
    }

    #[test]
    fn hopping_cycle_and_errors() {
        let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(5, 1)).unwrap();
        let path: Vec<Site> = (0..5).map(|x| Site::new(x, 0)).collect();
        let u = hopping_unitary(&d, &path, true).unwrap();
        let det = linalg::det(&u.dense().view());
        assert!((det - ONE).norm() < 1e-12); // (-1)^(5-1)
        let one = hopping_unitary(&d, &path[..1], false).unwrap();
        assert_eq!(one.distance_from_identity(), 0.0);
        assert!(hopping_unitary(&d, &[path[0], path[1], path[0]], true).is_err());
        let four: Vec<Site> = path[..4].to_vec();
        let det = linalg::det(&hopping_unitary(&d, &four, true).unwrap().dense().view());
        assert!((det + ONE).norm() < 1e-12);
    }

    #[test]
    fn indicators() {
        let d = torus(4);
        let all = indicator_projection(d.sites(), &d).unwrap();
        assert_eq!(all.dense(), Array2::<C64>::eye(16));
        let none = indicator_projection(&[], &d).unwrap();
        assert_eq!(none.dense(), Array2::<C64>::zeros((16, 16)));
        assert!(indicator_projection(&[Site::new(9, 9)], &d).is_err());
    }

    #[test]
    fn low_rank_matches_dense() {
        let d = torus(4);
        let h = harper_hamiltonian(&d, FluxSpec::zero()).unwrap();
        let (_, v) = linalg::eigh(&h.view()).unwrap();
        let cols = v.slice(ndarray::s![.., 3..7]).to_owned();
        let dd: Vec<C64> = (0..4).map(|k| C64::from_polar(1.0, 0.7 * k as f64) - ONE).collect();
        let u = UnitaryOperator::LowRank { n: 16, v: cols, d: dd };
        assert!(u.unitarity_defect() < 1e-12);
        let dense = UnitaryOperator::Dense(u.dense());
        assert!(dense.unitarity_defect() < 1e-12);
        let pi: Vec<f64> = (0..16).map(|i| (i % 3 == 0) as u8 as f64).collect();
        let a = u.conjugated_diagonal(&pi);
        let b = dense.conjugated_diagonal(&pi);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbation_is_boundary_supported() {
        let d = build_domain(&ShapeSpec::Strip { x0: 0, width: 10, periodic_y: false }, BoundingBox::new(10, 10)).unwrap();
        let p = boundary_perturbation(&d, 2.0, 0.25, 7).unwrap();
        let dist = distance_to_boundary(&d);
        for ((i, j), z) in p.matrix().indexed_iter() {
            if *z != ZERO {
                assert!(dist[i] <= 2.0 && dist[j] <= 2.0);
            }
        }
        let spec = linalg::eigvalsh(&p.view()).unwrap();
        let norm = spec.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((norm - 0.25).abs() < 1e-12);
    }
}
