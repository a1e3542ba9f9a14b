use matrixmultiply::{dgemm, sgemm};

/// Element type the tape can differentiate through.
///
/// `f32` is the production dtype (checkpoints are float32); `f64` exists so
/// finite-difference gradient checks run without cancellation noise.
pub trait Scalar:
    Copy
    + PartialOrd
    + Send
    + Sync
    + std::fmt::Debug
    + std::fmt::Display
    + num_traits::Float
    + num_traits::NumAssign
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// C <- alpha * A B + beta * C, row-major, single-threaded.
    ///
    /// # Safety
    /// Pointers must reference buffers of at least m*k, k*n and m*n elements.
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        b: *const Self,
        beta: Self,
        c: *mut Self,
    );
}

impl Scalar for f32 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        b: *const Self,
        beta: Self,
        c: *mut Self,
    ) {
        sgemm(
            m,
            k,
            n,
            alpha,
            a,
            k as isize,
            1,
            b,
            n as isize,
            1,
            beta,
            c,
            n as isize,
            1,
        )
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        b: *const Self,
        beta: Self,
        c: *mut Self,
    ) {
        dgemm(
            m,
            k,
            n,
            alpha,
            a,
            k as isize,
            1,
            b,
            n as isize,
            1,
            beta,
            c,
            n as isize,
            1,
        )
    }
}
