//! Zero-padded 3D DFT over the FFT grid used by the extrapolation.
//!
//! Input windows occupy the low corner `[0, M) x [0, N) x [0, P)` of the grid;
//! rows and slices that are known to be zero are skipped.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    shape: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(shape: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = [0, 1, 2].map(|a| planner.plan_fft_forward(shape[a]));
        let inv = [0, 1, 2].map(|a| planner.plan_fft_inverse(shape[a]));
        Self { shape, fwd, inv }
    }

    #[inline]
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    /// Forward DFT of a complex window placed at the grid origin.
    pub fn forward(&self, window: &[Complex64], dims: [usize; 3]) -> Vec<Complex64> {
        let [mf, nf, pf] = self.shape;
        let [m, n, p] = dims;
        debug_assert_eq!(window.len(), m * n * p);
        let mut grid = vec![Complex64::default(); self.len()];
        for pp in 0..p {
            for nn in 0..n {
                let src = &window[(pp * n + nn) * m..][..m];
                let dst = (pp * nf + nn) * mf;
                grid[dst..dst + m].copy_from_slice(src);
            }
        }
        let mut scratch = self.scratch();
        let mut line = vec![Complex64::default(); nf.max(pf)];

        // x: only rows that carry data
        for pp in 0..p {
            for nn in 0..n {
                let row = &mut grid[(pp * nf + nn) * mf..][..mf];
                self.fwd[0].process_with_scratch(row, &mut scratch);
            }
        }
        // y: only slices that carry data
        if nf > 1 {
            for pp in 0..p {
                for u in 0..mf {
                    self.axis_y(&mut grid, &mut line[..nf], pp, u, &self.fwd[1], &mut scratch);
                }
            }
        }
        // t: every column
        if pf > 1 {
            for v in 0..nf {
                for u in 0..mf {
                    self.axis_t(&mut grid, &mut line[..pf], v, u, &self.fwd[2], &mut scratch);
                }
            }
        }
        grid
    }

    /// Unnormalised inverse DFT, returning the real part on the window region.
    pub fn inverse_real(&self, mut grid: Vec<Complex64>, dims: [usize; 3]) -> Vec<f64> {
        let [mf, nf, pf] = self.shape;
        let [m, n, p] = dims;
        let mut scratch = self.scratch();
        let mut line = vec![Complex64::default(); nf.max(pf)];
        if pf > 1 {
            for v in 0..nf {
                for u in 0..mf {
                    self.axis_t(&mut grid, &mut line[..pf], v, u, &self.inv[2], &mut scratch);
                }
            }
        }
        if nf > 1 {
            for pp in 0..p {
                for u in 0..mf {
                    self.axis_y(&mut grid, &mut line[..nf], pp, u, &self.inv[1], &mut scratch);
                }
            }
        }
        let mut out = Vec::with_capacity(m * n * p);
        for pp in 0..p {
            for nn in 0..n {
                let row = &mut grid[(pp * nf + nn) * mf..][..mf];
                self.inv[0].process_with_scratch(row, &mut scratch);
                out.extend(row[..m].iter().map(|c| c.re));
            }
        }
        out
    }

    fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .fwd
            .iter()
            .chain(self.inv.iter())
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        vec![Complex64::default(); len]
    }

    fn axis_y(
        &self,
        grid: &mut [Complex64],
        line: &mut [Complex64],
        p: usize,
        u: usize,
        fft: &Arc<dyn Fft<f64>>,
        scratch: &mut [Complex64],
    ) {
        let [mf, nf, _] = self.shape;
        let base = p * nf * mf + u;
        for (v, c) in line.iter_mut().enumerate() {
            *c = grid[base + v * mf];
        }
        fft.process_with_scratch(line, scratch);
        for (v, c) in line.iter().enumerate() {
            grid[base + v * mf] = *c;
        }
    }

    fn axis_t(
        &self,
        grid: &mut [Complex64],
        line: &mut [Complex64],
        v: usize,
        u: usize,
        fft: &Arc<dyn Fft<f64>>,
        scratch: &mut [Complex64],
    ) {
        let [mf, nf, _] = self.shape;
        let base = v * mf + u;
        let stride = nf * mf;
        for (w, c) in line.iter_mut().enumerate() {
            *c = grid[base + w * stride];
        }
        fft.process_with_scratch(line, scratch);
        for (w, c) in line.iter().enumerate() {
            grid[base + w * stride] = *c;
        }
    }
}
