//! Square 2-D complex FFT built from row transforms and cache-blocked transposes.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;
use std::thread::LocalKey;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

/// Rows handed to one task; keeps per-task scratch allocation amortized.
const ROWS_PER_TASK: usize = 16;

#[derive(Clone)]
pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n * self.n
    }

    /// Unnormalized forward DFT, `X[m] = sum_j x[j] exp(-2 pi i m.j / n)`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.pass(data, &self.forward);
    }

    /// Inverse DFT including the `1/n^2` factor, so `inverse(forward(x)) = x`.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.pass(data, &self.inverse);
        let scale = 1.0 / (self.len() as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn pass(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.n;
        rows(data, n, plan);
        let mut tmp = take_buffer(&TRANSPOSE_BUF, data.len());
        transpose::transpose(data, &mut tmp, n, n);
        rows(&mut tmp, n, plan);
        transpose::transpose(&tmp, data, n, n);
        TRANSPOSE_BUF.with(|c| c.replace(tmp));
    }
}

thread_local! {
    static TRANSPOSE_BUF: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
    static ROW_SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

/// Moves the cached buffer out so that a nested call on the same thread
/// (work stealing) simply gets a fresh one.
fn take_buffer(key: &'static LocalKey<RefCell<Vec<Complex64>>>, len: usize) -> Vec<Complex64> {
    let mut buf = key.with(|c| c.take());
    if buf.len() != len {
        buf = vec![Complex64::default(); len];
    }
    buf
}

fn rows(data: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    let scratch_len = plan.get_inplace_scratch_len();
    par::for_each_chunk_mut(data, n * ROWS_PER_TASK, |_, chunk| {
        let mut scratch = take_buffer(&ROW_SCRATCH, scratch_len);
        plan.process_with_scratch(chunk, &mut scratch);
        ROW_SCRATCH.with(|c| c.replace(scratch));
    });
}
