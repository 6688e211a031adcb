//! Unnormalized n-dimensional FFT on row-major cubes, built axis by axis.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANS: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
                planner.plan_fft(len, dir)
            })
            .clone()
    })
}

/// In-place transform of `data`, a cube of side `size` in `dim` dimensions.
/// Forward uses `exp(-2 pi i j k / N)`; neither direction rescales.
pub fn fft_nd(data: &mut [C64], dim: usize, size: usize, inverse: bool) {
    debug_assert_eq!(data.len(), size.pow(dim as u32));
    let fft = plan(size, inverse);
    let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];

    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);

    let mut line = vec![C64::default(); size];
    for axis in (0..dim - 1).rev() {
        let stride = size.pow((dim - 1 - axis) as u32);
        let block = stride * size;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[C64], dim: usize, size: usize) -> Vec<C64> {
        let len = data.len();
        let idx = |mut k: usize| {
            let mut out = vec![0usize; dim];
            for a in (0..dim).rev() {
                out[a] = k % size;
                k /= size;
            }
            out
        };
        (0..len)
            .map(|k| {
                let kk = idx(k);
                data.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let jj = idx(j);
                        let phase: usize = kk.iter().zip(&jj).map(|(a, b)| a * b).sum();
                        let ang = -std::f64::consts::TAU * (phase % size) as f64 / size as f64;
                        v * C64::from_polar(1.0, ang)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_in_three_dimensions() {
        let size = 4;
        let data: Vec<C64> = (0..64)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, 3, size, false);
        let slow = naive_dft(&data, 3, size);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        fft_nd(&mut fast, 3, size, true);
        for (a, b) in fast.iter().zip(&data) {
            assert!((a / 64.0 - b).norm() < 1e-14);
        }
    }
}
