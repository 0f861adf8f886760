use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let dir = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            FftPlanner::new().plan_fft(len, dir)
        })
        .clone()
}

/// Unnormalized in-place DFT over every axis of a row-major `len^dims` array.
pub(crate) fn fft_nd(data: &mut [Complex64], dims: usize, len: usize, inverse: bool) {
    debug_assert_eq!(data.len(), len.pow(dims as u32));
    let fft = plan(len, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut lines = Vec::new();
    for axis in 0..dims {
        let inner = len.pow((dims - 1 - axis) as u32);
        if inner == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        // Gather every line along `axis` into contiguous storage, transform in one batch.
        lines.resize(data.len(), Complex64::new(0.0, 0.0));
        let block = len * inner;
        for (b, chunk) in data.chunks(block).enumerate() {
            let out = &mut lines[b * block..(b + 1) * block];
            for k in 0..len {
                for i in 0..inner {
                    out[i * len + k] = chunk[k * inner + i];
                }
            }
        }
        fft.process_with_scratch(&mut lines, &mut scratch);
        for (b, chunk) in data.chunks_mut(block).enumerate() {
            let src = &lines[b * block..(b + 1) * block];
            for k in 0..len {
                for i in 0..inner {
                    chunk[k * inner + i] = src[i * len + k];
                }
            }
        }
    }
}
