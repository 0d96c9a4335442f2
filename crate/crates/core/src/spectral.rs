//! Functional calculus through exact eigendecomposition, smooth steps, gaps.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_to_boundary, Domain};
use crate::linalg::{self, ZERO};
use crate::operators::HermitianOperator;

/// Eigenpairs of a Hermitian operator, ascending. A partial decomposition
/// holds only the eigenpairs inside a spectral interval.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
    /// `max_j |H v_j - λ_j v_j|`.
    pub residual: f64,
    /// Spectral-norm estimate `max |λ|` (over computed eigenvalues).
    pub norm: f64,
    pub complete: bool,
}

fn residual(h: &HermitianOperator, values: &[f64], v: &Array2<C64>) -> f64 {
    let n = h.dim();
    let rows = h.sparse_rows();
    let nnz: usize = rows.iter().map(|r| r.len()).sum();
    let hv = if nnz <= 16 * n.max(1) {
        let mut out = Array2::<C64>::zeros(v.raw_dim());
        for (i, row) in rows.iter().enumerate() {
            for &(j, z) in row {
                for m in 0..v.ncols() {
                    out[[i, m]] += z * v[[j, m]];
                }
            }
        }
        out
    } else {
        linalg::matmul(h.matrix(), v)
    };
    let mut worst = 0.0f64;
    for (m, &lam) in values.iter().enumerate() {
        let mut r = 0.0;
        for i in 0..n {
            r += (hv[[i, m]] - v[[i, m]] * lam).norm_sqr();
        }
        worst = worst.max(r.sqrt());
    }
    worst
}

fn finish(h: &HermitianOperator, values: Vec<f64>, vectors: Array2<C64>, complete: bool) -> Result<EigenDecomposition> {
    let norm = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let residual = residual(h, &values, &vectors);
    let scale = norm.max(linalg::max_abs(&h.view())).max(1.0);
    if residual > 1e-9 * scale {
        return Err(Error::Linalg(format!("eigendecomposition residual {residual:e} too large")));
    }
    Ok(EigenDecomposition { values, vectors, residual, norm, complete })
}

/// Full eigendecomposition.
pub fn eigendecompose(h: &HermitianOperator) -> Result<EigenDecomposition> {
    let (values, vectors) = linalg::eigh(&h.view())?;
    finish(h, values, vectors, true)
}

/// Eigenpairs with eigenvalue in `(lo, hi]` only.
pub fn eigendecompose_interval(h: &HermitianOperator, lo: f64, hi: f64) -> Result<EigenDecomposition> {
    let (values, vectors) = linalg::eigh_interval(&h.view(), lo, hi)?;
    finish(h, values, vectors, false)
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(h: &HermitianOperator) -> Result<Vec<f64>> {
    linalg::eigvalsh(&h.view())
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// `max |V†V - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut g = linalg::gemm(&self.vectors.view(), true, &self.vectors.view(), false);
        for i in 0..g.nrows() {
            g[[i, i]] -= linalg::ONE;
        }
        linalg::max_abs(&g.view())
    }

    /// `Σ_m f(λ_m) |v_m⟩⟨v_m|` over the stored eigenpairs.
    pub fn spectral_sum(&self, f: impl Fn(f64) -> f64) -> Array2<C64> {
        let mut fv = self.vectors.clone();
        for (mut col, &lam) in fv.columns_mut().into_iter().zip(&self.values) {
            let w = f(lam);
            col.mapv_inplace(|z| z * w);
        }
        linalg::gemm(&fv.view(), false, &self.vectors.view(), true)
    }
}

/// `f(H) = Σ f(λ_i) |v_i⟩⟨v_i|`.
pub fn apply_function(ed: &EigenDecomposition, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    if !ed.complete {
        return Err(Error::Linalg("functional calculus needs a complete decomposition".into()));
    }
    Ok(HermitianOperator::new(ed.spectral_sum(f)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// `1 - (10t³ - 15t⁴ + 6t⁵)`, C².
    #[default]
    Quintic,
    /// Normalized integral of `exp(-1/(s(1-s)))`, C^∞.
    Mollifier,
}

/// Decreasing step from 1 at `a` to 0 at `b`, with its derivative.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SmoothStep {
    pub a: f64,
    pub b: f64,
    pub kind: StepKind,
    #[serde(skip)]
    mass: f64,
}

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

const PANELS: usize = 16;

fn bump_integral(t: f64, rule: &GaussLegendre) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    rule.integrate(bump, 0.0, t.min(1.0), PANELS)
}

thread_local! {
    static RULE: GaussLegendre = GaussLegendre::new(20);
}

/// Builds the step on the gap `(a, b)`.
pub fn make_smoothstep(gap: (f64, f64), kind: StepKind) -> Result<SmoothStep> {
    let (a, b) = gap;
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::Config(format!("degenerate gap ({a}, {b})")));
    }
    let mass = match kind {
        StepKind::Quintic => 1.0,
        StepKind::Mollifier => RULE.with(|r| bump_integral(1.0, r)),
    };
    Ok(SmoothStep { a, b, kind, mass })
}

impl SmoothStep {
    fn t(&self, x: f64) -> f64 {
        (x - self.a) / (self.b - self.a)
    }

    pub fn phi(&self, x: f64) -> f64 {
        let t = self.t(x);
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        match self.kind {
            StepKind::Quintic => 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t),
            StepKind::Mollifier => 1.0 - RULE.with(|r| bump_integral(t, r)) / self.mass,
        }
    }

    pub fn dphi(&self, x: f64) -> f64 {
        let t = self.t(x);
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let w = self.b - self.a;
        match self.kind {
            StepKind::Quintic => -30.0 * t * t * (1.0 - t) * (1.0 - t) / w,
            StepKind::Mollifier => -bump(t) / (self.mass * w),
        }
    }

    /// Largest value of `-φ′`.
    pub fn peak_weight(&self) -> f64 {
        -self.dphi(0.5 * (self.a + self.b))
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
                let pm1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Composite rule over `panels` equal subintervals of `[a, b]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += w * f(mid + 0.5 * h * x);
            }
        }
        total * 0.5 * h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
    pub min_width: f64,
    /// Per-gap covered fraction, filled by [`gap_filling_ratio`].
    pub fill_fraction: Vec<f64>,
}

/// Default minimum gap width: 5% of the spectral diameter. Finite tori have
/// highly degenerate, discretely spaced spectra whose intra-band spacings
/// reach a few percent of the diameter.
pub fn default_min_width(eigenvalues: &[f64]) -> f64 {
    match (eigenvalues.first(), eigenvalues.last()) {
        (Some(lo), Some(hi)) => 0.05 * (hi - lo),
        _ => 0.0,
    }
}

/// Maximal open intervals between consecutive eigenvalues of width `>= min_width`.
pub fn detect_gaps(eigenvalues: &[f64], min_width: f64) -> GapReport {
    let gaps = eigenvalues
        .windows(2)
        .filter(|w| w[1] - w[0] >= min_width && w[1] > w[0])
        .map(|w| Gap { lo: w[0], hi: w[1] })
        .collect();
    GapReport { gaps, min_width, fill_fraction: vec![] }
}

/// Eigenvalues closer than this to a gap edge count as edge, not in-gap, states.
pub const EDGE_TOLERANCE: f64 = 1e-9;

/// Fraction of each bulk gap lying within `eps` of an in-gap domain eigenvalue.
pub fn gap_filling_ratio(bulk: &GapReport, domain_spectrum: &[f64], eps: f64) -> Result<Vec<f64>> {
    if eps <= 0.0 || eps.is_nan() {
        return Err(Error::Config(format!("fill resolution must be positive, got {eps}")));
    }
    Ok(bulk
        .gaps
        .iter()
        .map(|g| {
            let mut covered = 0.0;
            let mut reach = g.lo;
            let mut inside: Vec<f64> = domain_spectrum
                .iter()
                .copied()
                .filter(|&l| l > g.lo + EDGE_TOLERANCE && l < g.hi - EDGE_TOLERANCE)
                .collect();
            inside.sort_by(f64::total_cmp);
            for l in inside {
                let lo = (l - eps).max(reach);
                let hi = (l + eps).min(g.hi);
                if hi > lo {
                    covered += hi - lo;
                    reach = hi;
                }
            }
            covered / g.width()
        })
        .collect())
}

/// Maximum entry modulus per integer distance bucket.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayProfile {
    /// `max |a(x, y)|` over pairs with `round(d(x, y)) = k`.
    pub diagonal: Vec<f64>,
    /// `max_y |a(x, y)|` over rows with `round(d(x, ∂W)) = k`; empty without boundary.
    pub boundary: Vec<f64>,
}

impl DecayProfile {
    pub fn ratio(table: &[f64], far: usize, near: usize) -> Option<f64> {
        match (table.get(far), table.get(near)) {
            (Some(f), Some(n)) if *n > 0.0 => Some(f / n),
            _ => None,
        }
    }

    /// Whether the table is nonincreasing up to and including bucket `upto`.
    pub fn decreasing(table: &[f64], upto: usize) -> bool {
        table.iter().take(upto + 1).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0])
    }
}

fn push_max(table: &mut Vec<f64>, k: usize, v: f64) {
    if table.len() <= k {
        table.resize(k + 1, 0.0);
    }
    table[k] = table[k].max(v);
}

pub fn kernel_decay_profile(a: &ArrayView2<C64>, domain: &Domain) -> DecayProfile {
    let metric = domain.metric();
    let sites = domain.sites();
    let mut diagonal = Vec::new();
    let mut row_max = vec![0.0f64; sites.len()];
    for (i, si) in sites.iter().enumerate() {
        for (j, sj) in sites.iter().enumerate() {
            let v = a[[i, j]];
            if v == ZERO {
                push_max(&mut diagonal, metric.dist(*si, *sj).round() as usize, 0.0);
                continue;
            }
            let m = v.norm();
            row_max[i] = row_max[i].max(m);
            push_max(&mut diagonal, metric.dist(*si, *sj).round() as usize, m);
        }
    }
    let mut boundary = Vec::new();
    for (i, d) in distance_to_boundary(domain).into_iter().enumerate() {
        if d.is_finite() {
            push_max(&mut boundary, d.round() as usize, row_max[i]);
        }
    }
    DecayProfile { diagonal, boundary }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, BoundingBox, ShapeSpec};
    use crate::operators::{harper_hamiltonian, FluxSpec};

    #[test]
    fn diagonal_matrix_eigenvalues_sorted() {
        let mut m = Array2::<C64>::zeros((4, 4));
        for (i, v) in [3.0, -1.0, 2.0, 0.5].iter().enumerate() {
            m[[i, i]] = C64::new(*v, 0.0);
        }
        let ed = eigendecompose(&HermitianOperator::new(m)).unwrap();
        assert_eq!(ed.values, vec![-1.0, 0.5, 2.0, 3.0]);
    }

    #[test]
    fn free_torus_closed_form() {
        let l = 8;
        let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(l, l)).unwrap();
        let h = harper_hamiltonian(&d, FluxSpec::zero()).unwrap();
        let ed = eigendecompose(&h).unwrap();
        let mut want: Vec<f64> = (0..l * l)
            .map(|k| {
                let (k1, k2) = ((k % l) as f64, (k / l) as f64);
                let t = 2.0 * std::f64::consts::PI / l as f64;
                -2.0 * (t * k1).cos() - 2.0 * (t * k2).cos()
            })
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in ed.values.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(ed.orthonormality_defect() < 1e-10);
        assert!(ed.residual <= 1e-9 * 4.0);
    }

    #[test]
    fn identity_and_constant_functions() {
        let d = build_domain(&ShapeSpec::Torus, BoundingBox::new(6, 6)).unwrap();
        let h = harper_hamiltonian(&d, FluxSpec::new(1, 3).unwrap()).unwrap();
        let ed = eigendecompose(&h).unwrap();
        let same = apply_function(&ed, |x| x).unwrap();
        assert!(linalg::max_abs(&(same.matrix() - h.matrix()).view()) < 1e-10);
        let one = apply_function(&ed, |_| 1.0).unwrap();
        assert!(linalg::max_abs(&(one.matrix() - &Array2::<C64>::eye(36)).view()) < 1e-10);
    }

    #[test]
    fn quintic_midpoint() {
        let s = make_smoothstep((0.0, 1.0), StepKind::Quintic).unwrap();
        assert_eq!(s.phi(0.5), 0.5);
        assert_eq!(s.dphi(0.5), -15.0 / 8.0);
        assert_eq!(s.phi(0.0), 1.0);
        assert_eq!(s.phi(1.0), 0.0);
        assert!(make_smoothstep((1.0, 1.0), StepKind::Quintic).is_err());
    }

    #[test]
    fn steps_match_finite_differences_and_normalize() {
        let rule = GaussLegendre::new(24);
        for kind in [StepKind::Quintic, StepKind::Mollifier] {
            let s = make_smoothstep((-0.9, -0.4), kind).unwrap();
            let h = 1e-5;
            for k in 1..50 {
                let x = -0.9 + 0.5 * k as f64 / 50.0;
                let fd = (s.phi(x + h) - s.phi(x - h)) / (2.0 * h);
                assert!((fd - s.dphi(x)).abs() < 1e-6, "{kind:?} at {x}: {fd} vs {}", s.dphi(x));
                assert!(s.dphi(x) <= 0.0);
            }
            let mass = rule.integrate(|x| -s.dphi(x), s.a, s.b, 32);
            assert!((mass - 1.0).abs() < 1e-10, "{kind:?}: {mass}");
            assert_eq!(s.phi(s.a), 1.0);
            assert_eq!(s.phi(s.b), 0.0);
        }
    }

    #[test]
    fn gauss_legendre_polynomials() {
        let r = GaussLegendre::new(5);
        assert!((r.integrate(|x| x.powi(8), 0.0, 1.0, 1) - 1.0 / 9.0).abs() < 1e-14);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gap_detection_examples() {
        let r = detect_gaps(&[0.0, 1.0, 5.0, 6.0], 2.0);
        assert_eq!(r.gaps, vec![Gap { lo: 1.0, hi: 5.0 }]);
        let dense: Vec<f64> = (0..1000).map(|k| k as f64 * 1e-3).collect();
        assert!(detect_gaps(&dense, default_min_width(&dense)).gaps.is_empty());
    }

    #[test]
    fn filling_of_the_bulk_itself_is_zero() {
        let spec = [0.0, 1.0, 5.0, 6.0];
        let r = detect_gaps(&spec, 2.0);
        assert_eq!(gap_filling_ratio(&r, &spec, 0.2).unwrap(), vec![0.0]);
        let filled = gap_filling_ratio(&r, &[2.0, 3.0], 0.5).unwrap();
        assert!((filled[0] - 0.5).abs() < 1e-12);
        assert!(gap_filling_ratio(&r, &spec, 0.0).is_err());
    }

    #[test]
    fn identity_kernel_profile() {
        let d = build_domain(&ShapeSpec::Strip { x0: 0, width: 5, periodic_y: false }, BoundingBox::new(5, 5)).unwrap();
        let id = Array2::<C64>::eye(25);
        let p = kernel_decay_profile(&id.view(), &d);
        assert_eq!(p.diagonal[0], 1.0);
        assert!(p.diagonal[1..].iter().all(|v| *v == 0.0));
        assert_eq!(p.boundary.len(), 3);
    }
}
