//! Thin wrappers over LAPACK/BLAS for dense complex matrices.
//!
//! Matrices are `ndarray` row-major arrays. A Hermitian matrix stored row-major
//! reads as its complex conjugate in column-major order, so LAPACK sees
//! `conj(H)`: eigenvalues are unchanged and returned vectors are conjugated back.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

extern crate openblas_src;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn contiguous(a: &ArrayView2<C64>) -> Vec<C64> {
    match a.as_slice() {
        Some(s) => s.to_vec(),
        None => a.iter().copied().collect(),
    }
}

/// Eigenvalues by divide and conquer.
fn zheevd(a: &ArrayView2<C64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Linalg("matrix is not square".into()));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let mut buf = contiguous(a);
    let mut w = vec![0.0; n];
    let jobz = b'N' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    let nn = n as i32;
    let mut info = 0;
    let mut wq = [ZERO];
    let mut rq = [0.0f64];
    let mut iq = [0i32];
    let query = -1i32;
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &nn,
            buf.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            wq.as_mut_ptr() as *mut _,
            &query,
            rq.as_mut_ptr(),
            &query,
            iq.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg(format!("zheevd workspace query failed: info={info}")));
    }
    let lwork = wq[0].re as i32;
    let lrwork = rq[0] as i32;
    let liwork = iq[0];
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &nn,
            buf.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg(format!("zheevd failed to converge: info={info}")));
    }
    Ok(w)
}

/// Column-major LAPACK output of `conj(H)` eigenvectors, turned into row-major `V`.
fn vectors_from_colmajor(buf: &[C64], n: usize, m: usize) -> Array2<C64> {
    let mut v = Array2::zeros((n, m));
    for j in 0..m {
        let col = &buf[j * n..(j + 1) * n];
        for i in 0..n {
            v[[i, j]] = col[i].conj();
        }
    }
    v
}

/// Full Hermitian eigendecomposition, ascending eigenvalues.
// zheevd from the system OpenBLAS returns non-orthogonal eigenvectors for
// some degenerate spectra (n = 529 free torus), so vectors come from zheevr.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    zheevr(a, None)
}

/// Eigenvalues only.
pub fn eigvalsh(a: &ArrayView2<C64>) -> Result<Vec<f64>> {
    zheevd(a)
}

/// Eigenpairs with eigenvalue in the half-open interval `(lo, hi]`.
pub fn eigh_interval(a: &ArrayView2<C64>, lo: f64, hi: f64) -> Result<(Vec<f64>, Array2<C64>)> {
    if lo >= hi {
        return Ok((vec![], Array2::zeros((a.nrows(), 0))));
    }
    zheevr(a, Some((lo, hi)))
}

/// MRRR eigensolver over all eigenvalues or those in `(lo, hi]`.
fn zheevr(a: &ArrayView2<C64>, interval: Option<(f64, f64)>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Linalg("matrix is not square".into()));
    }
    if n == 0 {
        return Ok((vec![], Array2::zeros((n, 0))));
    }
    let (lo, hi) = interval.unwrap_or((0.0, 0.0));
    let mut buf = contiguous(a);
    let jobz = b'V' as std::ffi::c_char;
    let range = if interval.is_some() { b'V' } else { b'A' } as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    let nn = n as i32;
    let (il, iu) = (0i32, 0i32);
    let abstol = 0.0f64;
    let mut m = 0i32;
    let mut w = vec![0.0; n];
    let mut z = vec![ZERO; n * n];
    let mut isuppz = vec![0i32; 2 * n];
    let mut info = 0;
    let mut wq = [ZERO];
    let mut rq = [0.0f64];
    let mut iq = [0i32];
    let query = -1i32;
    unsafe {
        lapack_sys::zheevr_(
            &jobz,
            &range,
            &uplo,
            &nn,
            buf.as_mut_ptr() as *mut _,
            &nn,
            &lo,
            &hi,
            &il,
            &iu,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr() as *mut _,
            &nn,
            isuppz.as_mut_ptr(),
            wq.as_mut_ptr() as *mut _,
            &query,
            rq.as_mut_ptr(),
            &query,
            iq.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg(format!("zheevr workspace query failed: info={info}")));
    }
    let lwork = wq[0].re as i32;
    let lrwork = rq[0] as i32;
    let liwork = iq[0];
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevr_(
            &jobz,
            &range,
            &uplo,
            &nn,
            buf.as_mut_ptr() as *mut _,
            &nn,
            &lo,
            &hi,
            &il,
            &iu,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr() as *mut _,
            &nn,
            isuppz.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg(format!("zheevr failed: info={info}")));
    }
    let m = m as usize;
    w.truncate(m);
    Ok((w, vectors_from_colmajor(&z, n, m)))
}

/// `C = op(A) · op(B)` via BLAS, `op` being identity or conjugate transpose.
pub fn gemm(a: &ArrayView2<C64>, adj_a: bool, b: &ArrayView2<C64>, adj_b: bool) -> Array2<C64> {
    use cblas_sys::{cblas_zgemm, CBLAS_LAYOUT, CBLAS_TRANSPOSE};
    let (m, ka) = if adj_a { (a.ncols(), a.nrows()) } else { (a.nrows(), a.ncols()) };
    let (kb, n) = if adj_b { (b.ncols(), b.nrows()) } else { (b.nrows(), b.ncols()) };
    assert_eq!(ka, kb, "gemm: inner dimensions differ");
    let mut c = Array2::<C64>::zeros((m, n));
    if m == 0 || n == 0 || ka == 0 {
        return c;
    }
    let abuf = contiguous(a);
    let bbuf = contiguous(b);
    let ta = if adj_a { CBLAS_TRANSPOSE::CblasConjTrans } else { CBLAS_TRANSPOSE::CblasNoTrans };
    let tb = if adj_b { CBLAS_TRANSPOSE::CblasConjTrans } else { CBLAS_TRANSPOSE::CblasNoTrans };
    let alpha = [1.0f64, 0.0];
    let beta = [0.0f64, 0.0];
    unsafe {
        cblas_zgemm(
            CBLAS_LAYOUT::CblasRowMajor,
            ta,
            tb,
            m as i32,
            n as i32,
            ka as i32,
            &alpha,
            abuf.as_ptr() as *const _,
            a.ncols() as i32,
            bbuf.as_ptr() as *const _,
            b.ncols() as i32,
            &beta,
            c.as_mut_ptr() as *mut _,
            n as i32,
        );
    }
    c
}

/// `A · B`.
pub fn matmul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    gemm(&a.view(), false, &b.view(), false)
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Largest entry modulus.
pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().iter().copied().sum()
}

/// Determinant of a small square matrix by partial-pivot LU.
pub fn det(a: &ArrayView2<C64>) -> C64 {
    let n = a.nrows();
    let mut m = a.to_owned();
    let mut d = ONE;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[[i, k]].norm().partial_cmp(&m[[j, k]].norm()).unwrap())
            .unwrap();
        if m[[p, k]].norm() == 0.0 {
            return ZERO;
        }
        if p != k {
            for j in 0..n {
                m.swap([p, j], [k, j]);
            }
            d = -d;
        }
        let piv = m[[k, k]];
        d *= piv;
        for i in k + 1..n {
            let f = m[[i, k]] / piv;
            for j in k..n {
                let t = m[[k, j]];
                m[[i, j]] -= f * t;
            }
        }
    }
    d
}
