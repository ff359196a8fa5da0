//! The measured matrix-multiply kernel and its slow reference oracle.
//!
//! Both kernels compute `C <- alpha * A * B + beta * C` on square row-major
//! matrices. [`dgemm_naive`] is the correctness oracle: a plain triple loop
//! with a scalar accumulator. [`dgemm_blocked`] is the measured kernel: a
//! cache-tiled variant whose innermost loop is a contiguous axpy over a row
//! of C, written so the compiler can vectorize it. The two accumulate in
//! different orders, so equivalence is tolerance-based rather than bit-exact.
//!
//! Neither kernel branches on matrix content; in debug builds an operation
//! counter makes that checkable.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::datagen::Matrix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("matrix orders do not match: a={a}, b={b}, c={c}")]
    OrderMismatch { a: usize, b: usize, c: usize },
    #[error("block size {block} out of range 1..={order}")]
    BadBlock { block: usize, order: usize },
    #[error("alpha and beta must be finite")]
    NonFiniteScalar,
    #[error("unknown kernel name {0:?} (expected naive or blocked)")]
    UnknownKernel(String),
}

/// Arguments of one gemm call; `c` is mutated in place.
pub struct GemmArgs<'a> {
    pub alpha: f64,
    pub beta: f64,
    pub a: &'a Matrix,
    pub b: &'a Matrix,
    pub c: &'a mut Matrix,
}

impl<'a> GemmArgs<'a> {
    fn validate(&self) -> Result<usize, KernelError> {
        let (na, nb, nc) = (self.a.order(), self.b.order(), self.c.order());
        if na != nb || na != nc {
            return Err(KernelError::OrderMismatch {
                a: na,
                b: nb,
                c: nc,
            });
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(KernelError::NonFiniteScalar);
        }
        Ok(na)
    }
}

/// Which kernel implementation a run measures, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Naive,
    Blocked,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Naive => "naive",
            KernelKind::Blocked => "blocked",
        }
    }

    /// Run the kernel. `block` is only consulted by the blocked variant.
    pub fn run(self, args: GemmArgs<'_>, block: usize) -> Result<(), KernelError> {
        match self {
            KernelKind::Naive => dgemm_naive(args),
            KernelKind::Blocked => dgemm_blocked(args, block),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(KernelKind::Naive),
            "blocked" => Ok(KernelKind::Blocked),
            other => Err(KernelError::UnknownKernel(other.to_string())),
        }
    }
}

/// Name plus flop formula for throughput reporting.
#[derive(Debug, Clone, Copy)]
pub struct KernelDescriptor {
    pub kind: KernelKind,
}

impl KernelDescriptor {
    pub fn flops(&self, order: usize) -> u64 {
        flop_count(order)
    }
}

/// Floating-point operations per gemm call: `2*N^3` for the multiply-adds
/// plus `2*N^2` for the alpha/beta scaling.
pub fn flop_count(order: usize) -> u64 {
    let n = order as u64;
    2 * n * n * n + 2 * n * n
}

#[cfg(debug_assertions)]
pub mod ops_counter {
    //! Debug-only arithmetic-operation counter. Lets tests assert that the
    //! kernels execute a content-independent number of operations. Compiled
    //! out of release builds so the timed path carries no bookkeeping.
    use std::cell::Cell;

    thread_local! {
        static COUNT: Cell<u64> = const { Cell::new(0) };
    }

    pub fn reset() {
        COUNT.with(|c| c.set(0));
    }

    pub fn add(n: u64) {
        COUNT.with(|c| c.set(c.get() + n));
    }

    pub fn get() -> u64 {
        COUNT.with(|c| c.get())
    }
}

#[cfg(debug_assertions)]
macro_rules! count_ops {
    ($n:expr) => {
        ops_counter::add($n)
    };
}

#[cfg(not(debug_assertions))]
macro_rules! count_ops {
    ($n:expr) => {};
}

/// Reference kernel: straight triple loop, scalar accumulator, no blocking.
pub fn dgemm_naive(args: GemmArgs<'_>) -> Result<(), KernelError> {
    let n = args.validate()?;
    let (alpha, beta) = (args.alpha, args.beta);
    let a = args.a.as_slice();
    let b = args.b.as_slice();
    let c = args.c.as_mut_slice();
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a[i * n + k] * b[k * n + j];
            }
            c[i * n + j] = alpha * acc + beta * c[i * n + j];
            count_ops!(2 * n as u64 + 2);
        }
    }
    Ok(())
}

/// Measured kernel: tiles the i/k/j loops by `block` and accumulates into C
/// with a contiguous inner loop over `j`, which auto-vectorizes.
pub fn dgemm_blocked(args: GemmArgs<'_>, block: usize) -> Result<(), KernelError> {
    let n = args.validate()?;
    if block == 0 || block > n {
        return Err(KernelError::BadBlock { block, order: n });
    }
    let (alpha, beta) = (args.alpha, args.beta);
    let a = args.a.as_slice();
    let b = args.b.as_slice();
    let c = args.c.as_mut_slice();

    for v in c.iter_mut() {
        *v *= beta;
    }
    count_ops!(n as u64 * n as u64);

    for ii in (0..n).step_by(block) {
        let i_end = (ii + block).min(n);
        for kk in (0..n).step_by(block) {
            let k_end = (kk + block).min(n);
            for jj in (0..n).step_by(block) {
                let j_end = (jj + block).min(n);
                for i in ii..i_end {
                    for k in kk..k_end {
                        let aik = alpha * a[i * n + k];
                        let (crow, brow) = (&mut c[i * n + jj..i * n + j_end], &b[k * n + jj..k * n + j_end]);
                        for (cv, bv) in crow.iter_mut().zip(brow) {
                            *cv += aik * bv;
                        }
                        count_ops!(2 * (j_end - jj) as u64 + 1);
                    }
                }
            }
        }
    }
    Ok(())
}
