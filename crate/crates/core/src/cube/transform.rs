//! In-place radix-2 Walsh-Hadamard butterflies.

use rayon::prelude::*;

/// Below this length the butterflies run on the calling thread.
const PARALLEL_MIN_LEN: usize = 1 << 16;

/// Unnormalized Walsh-Hadamard transform of `data` in place:
/// `out[s] = sum_m data[m] * (-1)^popcount(s & m)`.
///
/// `data.len()` must be a power of two. Every output entry is produced by the
/// same sequence of floating point operations regardless of the thread count,
/// so results are bit-identical across runs.
pub(crate) fn walsh_hadamard_in_place(data: &mut [f64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        let block = half << 1;
        if len >= PARALLEL_MIN_LEN {
            if len / block >= 64 {
                data.par_chunks_mut(block).for_each(|chunk| butterfly(chunk, half));
            } else {
                for chunk in data.chunks_mut(block) {
                    let (lo, hi) = chunk.split_at_mut(half);
                    lo.par_chunks_mut(4096)
                        .zip(hi.par_chunks_mut(4096))
                        .for_each(|(a, b)| butterfly_pair(a, b));
                }
            }
        } else {
            for chunk in data.chunks_mut(block) {
                butterfly(chunk, half);
            }
        }
        half = block;
    }
}

#[inline]
fn butterfly(chunk: &mut [f64], half: usize) {
    let (lo, hi) = chunk.split_at_mut(half);
    butterfly_pair(lo, hi);
}

#[inline]
fn butterfly_pair(lo: &mut [f64], hi: &mut [f64]) {
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = x + y;
        *b = x - y;
    }
}
