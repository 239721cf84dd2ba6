//! Scalar abstraction: all numerics are generic over the complex scalar type.

use ndarray_linalg::{Lapack, Scalar};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real scalar that can be drawn from a standard normal distribution.
pub trait SampleReal: Sized {
    fn standard_normal<R: Rng>(rng: &mut R) -> Self;
}

impl SampleReal for f32 {
    fn standard_normal<R: Rng>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl SampleReal for f64 {
    fn standard_normal<R: Rng>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Complex scalar backing all computations: `c32` or `c64`.
///
/// `Self::Real` is the matching real type (`f32`/`f64`), used for parameter
/// values, distances, and tolerances.
pub trait ComplexScalar:
    Lapack + LuKernel + Scalar<Complex = Self, Real: Lapack + SampleReal + Send + Sync> + Send + Sync
{
}

impl<T> ComplexScalar for T where
    T: Lapack + LuKernel + Scalar<Complex = Self, Real: Lapack + SampleReal + Send + Sync> + Send + Sync
{
}

/// Real counterpart of a complex scalar.
pub type RealOf<C> = <C as Scalar>::Real;

/// Lexicographic order on (re, im); total because values are finite.
pub fn cmp_complex<C: ComplexScalar>(a: &C, b: &C) -> std::cmp::Ordering {
    match a.re().partial_cmp(&b.re()) {
        Some(std::cmp::Ordering::Equal) | None => {
            a.im().partial_cmp(&b.im()).unwrap_or(std::cmp::Ordering::Equal)
        }
        Some(ord) => ord,
    }
}

extern "C" {
    fn openblas_set_num_threads(num_threads: std::os::raw::c_int);
}

/// Pin the BLAS backend to one thread, once per process. Parallelism
/// lives in the quadrature-node and test-point loops; nested BLAS
/// threading would oversubscribe (and this OpenBLAS build spawns worker
/// threads whose stacks are too small for large LAPACK workspaces).
pub fn ensure_serial_blas() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Raw column-major LU kernels with batched right-hand sides; the lax
/// wrappers solve one column per call, which dominates the node cost for
/// wide probe blocks.
pub trait LuKernel: Sized {
    /// In-place LU with partial pivoting of an n x n column-major matrix;
    /// returns the LAPACK info code.
    fn lu_factor(n: usize, a: &mut [Self], ipiv: &mut [i32]) -> i32;
    /// Solve `A^T X = B` for the factored matrix, B column-major n x nrhs.
    /// With A holding the column-major factors of a row-major matrix M
    /// (i.e. of M^T), this solves `M X = B`.
    fn lu_solve_transposed(n: usize, nrhs: usize, a: &[Self], ipiv: &[i32], b: &mut [Self]) -> i32;
}

macro_rules! impl_lu_kernel {
    ($type:ty, $getrf:path, $getrs:path) => {
        impl LuKernel for $type {
            fn lu_factor(n: usize, a: &mut [Self], ipiv: &mut [i32]) -> i32 {
                assert_eq!(a.len(), n * n);
                assert_eq!(ipiv.len(), n);
                let dim = n as i32;
                let mut info = 0;
                unsafe {
                    $getrf(
                        &dim,
                        &dim,
                        a.as_mut_ptr().cast(),
                        &dim,
                        ipiv.as_mut_ptr(),
                        &mut info,
                    );
                }
                info
            }

            fn lu_solve_transposed(
                n: usize,
                nrhs: usize,
                a: &[Self],
                ipiv: &[i32],
                b: &mut [Self],
            ) -> i32 {
                assert_eq!(a.len(), n * n);
                assert_eq!(b.len(), n * nrhs);
                let dim = n as i32;
                let cols = nrhs as i32;
                let trans = b'T' as std::os::raw::c_char;
                let mut info = 0;
                unsafe {
                    $getrs(
                        &trans,
                        &dim,
                        &cols,
                        a.as_ptr().cast(),
                        &dim,
                        ipiv.as_ptr(),
                        b.as_mut_ptr().cast(),
                        &dim,
                        &mut info,
                    );
                }
                info
            }
        }
    };
}

impl_lu_kernel!(num_complex::Complex32, lapack_sys::cgetrf_, lapack_sys::cgetrs_);
impl_lu_kernel!(num_complex::Complex64, lapack_sys::zgetrf_, lapack_sys::zgetrs_);
