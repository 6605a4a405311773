//! Frequency-selective model generation.
//!
//! A window `f` with weights `w` is approximated by a sparse sum of DFT basis
//! functions `phi_k(x) = exp(+2πi k·x / F)` on the FFT grid `F`. Each
//! iteration picks the frequency with the largest weighted residual
//! projection `|R_w(k)|^2`, where `R_w = DFT(w · r)`, and adds
//! `gamma · R_w(k) / W(0)` to its coefficient. Because the residual update is
//! a shifted copy of the weight spectrum `W = DFT(w)`, the whole loop runs on
//! spectra: one forward transform up front and one inverse at the end.
//!
//! Conjugate frequency pairs are updated together so the model stays real.
//! The residual spectrum of a real signal is conjugate-symmetric, so only
//! the half `u <= Mf / 2` is stored and searched.

mod fft3;
pub mod oracle;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::video::ExtrapolationWindow;
use crate::weighting::WeightVolume;

pub(crate) use fft3::Fft3;

/// Parameters of the block-wise extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FseParams {
    /// Loss block extent `(x, y, t)`.
    pub block: [usize; 3],
    /// Spatial border around each block.
    pub border: usize,
    /// DFT grid `(x, y, t)`; must cover the window.
    pub fft_size: [usize; 3],
    /// Orthogonality deficiency compensation.
    pub gamma: f64,
    pub max_iterations: usize,
    /// Stop once the selected basis function would reduce the weighted
    /// residual energy by less than this. `0` disables the check.
    pub min_gain: f64,
}

impl Default for FseParams {
    fn default() -> Self {
        Self {
            block: [4, 4, 1],
            border: 14,
            fft_size: [32, 32, 32],
            gamma: 0.5,
            max_iterations: 100,
            min_gain: 0.0,
        }
    }
}

impl FseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("{} is not in (0, 1]", self.gamma),
            });
        }
        if self.fft_size.contains(&0) || self.block.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "fft_size",
                reason: format!("fft {:?} / block {:?} has an empty axis", self.fft_size, self.block),
            });
        }
        for axis in 0..2 {
            if self.block[axis] + 2 * self.border > self.fft_size[axis] {
                return Err(Error::InvalidParameter {
                    name: "fft_size",
                    reason: format!(
                        "block {} + 2 * border {} exceeds fft size {} on axis {axis}",
                        self.block[axis], self.border, self.fft_size[axis]
                    ),
                });
            }
        }
        if self.min_gain.is_nan() || self.min_gain < 0.0 {
            return Err(Error::InvalidParameter {
                name: "min_gain",
                reason: format!("{} is negative", self.min_gain),
            });
        }
        Ok(())
    }

    pub(crate) fn check_window(&self, dims: [usize; 3]) -> Result<()> {
        if (0..3).any(|a| dims[a] > self.fft_size[a]) {
            return Err(Error::InvalidParameter {
                name: "fft_size",
                reason: format!("window {dims:?} exceeds fft size {:?}", self.fft_size),
            });
        }
        Ok(())
    }
}

/// Result of [`generate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct FseOutcome {
    /// Real model over the window, same layout as the window.
    pub model: Vec<f64>,
    /// Number of basis selections applied.
    pub iterations: usize,
    /// Weighted residual energy `Σ w (f - g)^2` before the first and after
    /// every iteration.
    pub energy: Vec<f64>,
    /// Selected frequencies in order.
    pub selected: Vec<[usize; 3]>,
    /// Set when the weights are all zero; the model is then all zero.
    pub empty_support: bool,
}

/// Frequency index `(u, v, w)` along `(x, y, t)`.
pub type Frequency = [usize; 3];

/// Lexicographic `(w, u, v)` key used for tie-breaking.
#[inline]
fn tie_key(k: Frequency) -> (usize, usize, usize) {
    (k[2], k[0], k[1])
}

/// Relative spread under which two projection energies count as tied.
const TIE_TOLERANCE: f64 = 1e-10;

/// Energies at or above this count as tied with the maximum `max`.
#[inline]
fn tie_threshold(max: f64) -> f64 {
    max - TIE_TOLERANCE * max
}

/// Index of the largest `|R(k)|^2` on a full spectrum of shape `shape`.
///
/// Every frequency within a relative `1e-10` of the maximum counts as tied,
/// and the tie goes to the lexicographically smallest `(w, u, v)`. The
/// tolerance makes conjugate partners, which differ only by rounding,
/// resolve the same way in every implementation.
pub fn select_basis(spectrum: &[Complex64], shape: [usize; 3]) -> Frequency {
    let [mf, nf, _] = shape;
    let max = spectrum.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    let threshold = tie_threshold(max);
    let mut best: Option<Frequency> = None;
    for (i, c) in spectrum.iter().enumerate() {
        let k = [i % mf, (i / mf) % nf, i / (mf * nf)];
        if c.norm_sqr() >= threshold && best.is_none_or(|b| tie_key(k) < tie_key(b)) {
            best = Some(k);
        }
    }
    best.unwrap_or([0, 0, 0])
}

#[inline]
pub(crate) fn negate(k: Frequency, shape: [usize; 3]) -> Frequency {
    [0, 1, 2].map(|a| (shape[a] - k[a]) % shape[a])
}

#[inline]
pub(crate) fn is_self_conjugate(k: Frequency, shape: [usize; 3]) -> bool {
    (0..3).all(|a| (2 * k[a]).is_multiple_of(shape[a]))
}

/// Spectral bookkeeping of one extrapolation run.
///
/// The residual spectrum of a real signal is Hermitian, so only the half
/// `u <= Mf / 2` is stored. Weight spectrum rows are stored with their first
/// `Mf / 2 + 1` entries repeated at the end so that cyclic shifts read a
/// contiguous slice.
pub struct SpectralState {
    shape: [usize; 3],
    half: usize,
    /// Row length of `weight_spectrum`.
    stride: usize,
    weight_spectrum: SplitComplex,
    residual: SplitComplex,
    /// Largest `|R|^2` of each stored residual row.
    row_max: Vec<f64>,
    coefficients: Vec<Complex64>,
    weight_total: f64,
}

impl SpectralState {
    /// Transforms `w · f` and `w` onto the grid. Returns `None` when the
    /// weights sum to zero.
    pub fn new(values: &[f64], weights: &[f64], dims: [usize; 3], shape: [usize; 3]) -> Option<Self> {
        Self::with_fft(&Fft3::new(shape), values, weights, dims)
    }

    pub(crate) fn with_fft(fft: &Fft3, values: &[f64], weights: &[f64], dims: [usize; 3]) -> Option<Self> {
        let shape = fft.shape();
        let weight_total: f64 = weights.iter().sum();
        if weight_total <= 0.0 {
            return None;
        }
        // One complex transform carries both real inputs: z = w·f + i·w.
        let packed: Vec<Complex64> = values
            .iter()
            .zip(weights)
            .map(|(&f, &w)| Complex64::new(w * f, w))
            .collect();
        let z = fft.forward(&packed, dims);
        let [mf, nf, pf] = shape;
        let half = mf / 2 + 1;
        let stride = mf + half;
        let mut weight_spectrum = SplitComplex::zeros(stride * nf * pf);
        let mut residual = SplitComplex::zeros(half * nf * pf);
        for w in 0..pf {
            for v in 0..nf {
                let row = w * nf + v;
                for u in 0..mf {
                    let i = row * mf + u;
                    let [nu, nv, nw] = negate([u, v, w], shape);
                    let zc = z[(nw * nf + nv) * mf + nu].conj();
                    let zi = z[i];
                    // z = A + iB with A, B Hermitian: A = (z + z*(-k)) / 2, B = (z - z*(-k)) / 2i
                    let wk = (zi - zc) * Complex64::new(0.0, -0.5);
                    weight_spectrum.set(row * stride + u, wk);
                    if u < half {
                        weight_spectrum.set(row * stride + mf + u, wk);
                        residual.set(row * half + u, (zi + zc) * 0.5);
                    }
                }
            }
        }
        let row_max = (0..nf * pf).map(|row| residual.row_max(row * half, half)).collect();
        Some(Self {
            shape,
            half,
            stride,
            weight_spectrum,
            residual,
            row_max,
            coefficients: vec![Complex64::default(); mf * nf * pf],
            weight_total,
        })
    }

    #[inline]
    fn grid_index(&self, k: Frequency) -> usize {
        (k[2] * self.shape[1] + k[1]) * self.shape[0] + k[0]
    }

    #[inline]
    fn weight(&self, k: Frequency) -> Complex64 {
        self.weight_spectrum.get((k[2] * self.shape[1] + k[1]) * self.stride + k[0])
    }

    /// `W(0) = Σ w`.
    pub fn weight_total(&self) -> f64 {
        self.weight_total
    }

    /// Weighted residual spectrum `R_w(k)` at any grid frequency.
    pub fn residual(&self, k: Frequency) -> Complex64 {
        if k[0] < self.half {
            self.residual.get((k[2] * self.shape[1] + k[1]) * self.half + k[0])
        } else {
            let c = negate(k, self.shape);
            self.residual.get((c[2] * self.shape[1] + c[1]) * self.half + c[0]).conj()
        }
    }

    /// Full residual spectrum, reconstructed from the stored half.
    pub fn residual_spectrum(&self) -> Vec<Complex64> {
        let [mf, nf, pf] = self.shape;
        let mut out = Vec::with_capacity(mf * nf * pf);
        for w in 0..pf {
            for v in 0..nf {
                for u in 0..mf {
                    out.push(self.residual([u, v, w]));
                }
            }
        }
        out
    }

    pub fn coefficient(&self, k: Frequency) -> Complex64 {
        self.coefficients[self.grid_index(k)]
    }

    /// Same choice as [`select_basis`] on the full residual spectrum, with
    /// the selected `|R_w(k)|^2`.
    pub fn select(&self) -> (Frequency, f64) {
        let [_, nf, _] = self.shape;
        let h = self.half;
        let max = self.row_max.iter().copied().fold(0.0, f64::max);
        let threshold = tie_threshold(max);
        let mut best: Option<(Frequency, f64)> = None;
        for (row, _) in self.row_max.iter().enumerate().filter(|&(_, &m)| m >= threshold) {
            let (v, w) = (row % nf, row / nf);
            for u in 0..h {
                let e = self.residual.get(row * h + u).norm_sqr();
                if e < threshold {
                    continue;
                }
                // the conjugate partner carries the same energy
                let k = [u, v, w];
                let nk = negate(k, self.shape);
                let k = if tie_key(nk) < tie_key(k) { nk } else { k };
                if best.is_none_or(|(b, _)| tie_key(k) < tie_key(b)) {
                    best = Some((k, e));
                }
            }
        }
        best.unwrap_or(([0, 0, 0], 0.0))
    }

    /// Coefficient increment for `k` and whether `-k` is updated with it.
    fn increment(&self, k: Frequency, gamma: f64) -> (Complex64, bool) {
        let r = self.residual(k);
        if is_self_conjugate(k, self.shape) {
            (Complex64::new(gamma * r.re / self.weight_total, 0.0), false)
        } else {
            (r * (gamma / self.weight_total), true)
        }
    }

    /// Reduction of `Σ w r^2` that updating `k` would achieve.
    pub fn energy_gain(&self, k: Frequency, gamma: f64) -> f64 {
        let (delta, paired) = self.increment(k, gamma);
        let r = self.residual(k);
        let w0 = self.weight_total;
        if paired {
            let k2 = [0, 1, 2].map(|a| (2 * k[a]) % self.shape[a]);
            let w_neg2k = self.weight(negate(k2, self.shape));
            4.0 * gamma * r.norm_sqr() / w0
                - 2.0 * delta.norm_sqr() * w0
                - 2.0 * (delta * delta * w_neg2k).re
        } else {
            let rr = r.re;
            gamma * (2.0 - gamma) * rr * rr / w0
        }
    }

    /// Adds `gamma · R_w(k) / W(0)` to the coefficient of `k` (and the
    /// conjugate to `-k`) and removes the matching weighted basis
    /// contribution `Δ W(l - k) + Δ* W(l + k)` from the residual spectrum.
    pub fn update(&mut self, k: Frequency, gamma: f64) {
        let (delta, paired) = self.increment(k, gamma);
        let ik = self.grid_index(k);
        self.coefficients[ik] += delta;
        if paired {
            let ink = self.grid_index(negate(k, self.shape));
            self.coefficients[ink] += delta.conj();
        }

        let [_, nf, pf] = self.shape;
        let (h, stride) = (self.half, self.stride);
        let minus = negate(k, self.shape);
        let wrap = |i: usize, n: usize| if i >= n { i - n } else { i };
        let (dr, di) = (delta.re, delta.im);
        let ws = &self.weight_spectrum;
        for w in 0..pf {
            let w1 = wrap(w + minus[2], pf);
            let w2 = wrap(w + k[2], pf);
            for v in 0..nf {
                let v1 = wrap(v + minus[1], nf);
                let v2 = wrap(v + k[1], nf);
                let row = w * nf + v;
                let o = row * h;
                let (out_re, out_im) = self.residual.rows_mut(o, h);
                let a = (w1 * nf + v1) * stride + minus[0];
                let (ar, ai) = (&ws.re[a..a + h], &ws.im[a..a + h]);
                if paired {
                    // Δ W(l - k) + Δ* W(l + k)
                    let b = (w2 * nf + v2) * stride + k[0];
                    let (br, bi) = (&ws.re[b..b + h], &ws.im[b..b + h]);
                    for u in 0..h {
                        out_re[u] -= dr * (ar[u] + br[u]) - di * (ai[u] - bi[u]);
                        out_im[u] -= dr * (ai[u] + bi[u]) + di * (ar[u] - br[u]);
                    }
                } else {
                    for u in 0..h {
                        out_re[u] -= dr * ar[u] - di * ai[u];
                        out_im[u] -= dr * ai[u] + di * ar[u];
                    }
                }
                self.row_max[row] = self.residual.row_max(o, h);
            }
        }
    }

    /// Spatial model on the window region.
    fn synthesize(self, fft: &Fft3, dims: [usize; 3]) -> Vec<f64> {
        fft.inverse_real(self.coefficients, dims)
    }
}

/// Complex vector stored as separate real and imaginary parts.
struct SplitComplex {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SplitComplex {
    fn zeros(n: usize) -> Self {
        Self {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    #[inline]
    fn get(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    #[inline]
    fn set(&mut self, i: usize, c: Complex64) {
        self.re[i] = c.re;
        self.im[i] = c.im;
    }

    #[inline]
    fn rows_mut(&mut self, start: usize, len: usize) -> (&mut [f64], &mut [f64]) {
        (&mut self.re[start..start + len], &mut self.im[start..start + len])
    }

    #[inline]
    fn row_max(&self, start: usize, len: usize) -> f64 {
        let (re, im) = (&self.re[start..start + len], &self.im[start..start + len]);
        re.iter()
            .zip(im)
            .map(|(r, i)| r * r + i * i)
            .fold(0.0, |m, e| if e > m { e } else { m })
    }
}

/// Reusable transform plans for a fixed FFT grid.
pub struct FseEngine {
    params: FseParams,
    fft: Fft3,
}

impl FseEngine {
    pub fn new(params: FseParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            fft: Fft3::new(params.fft_size),
        })
    }

    pub fn params(&self) -> &FseParams {
        &self.params
    }

    /// Runs the extrapolation on one window.
    pub fn generate(&self, window: &ExtrapolationWindow, weights: &WeightVolume) -> Result<FseOutcome> {
        let dims = window.dims();
        if weights.dims() != dims {
            return Err(Error::mismatch("weight dims", dims, weights.dims()));
        }
        self.params.check_window(dims)?;
        Ok(self.run(window.values(), weights.values(), dims))
    }

    fn run(&self, values: &[f64], weights: &[f64], dims: [usize; 3]) -> FseOutcome {
        let p = &self.params;
        let initial_energy: f64 = values
            .iter()
            .zip(weights)
            .map(|(&f, &w)| w * f * f)
            .sum();
        let state = if initial_energy > 0.0 {
            SpectralState::with_fft(&self.fft, values, weights, dims)
        } else {
            None
        };
        let Some(mut state) = state else {
            let empty_support = weights.iter().all(|&w| w == 0.0);
            return FseOutcome {
                model: vec![0.0; values.len()],
                iterations: 0,
                energy: vec![initial_energy],
                selected: Vec::new(),
                empty_support,
            };
        };
        // |R_w(k)| <= Σ w|f|; anything this small is transform round-off.
        let floor = {
            let scale: f64 = values.iter().zip(weights).map(|(&f, &w)| w * f.abs()).sum();
            (1e-13 * scale).powi(2)
        };

        let mut energy = Vec::with_capacity(p.max_iterations + 1);
        energy.push(initial_energy);
        let mut selected = Vec::new();
        for _ in 0..p.max_iterations {
            let (k, strength) = state.select();
            if strength <= floor {
                break;
            }
            let gain = state.energy_gain(k, p.gamma);
            if p.min_gain > 0.0 && gain < p.min_gain {
                break;
            }
            state.update(k, p.gamma);
            selected.push(k);
            let last = *energy.last().unwrap();
            energy.push(last - gain);
        }
        FseOutcome {
            model: state.synthesize(&self.fft, dims),
            iterations: selected.len(),
            energy,
            selected,
            empty_support: false,
        }
    }
}

/// One-shot [`FseEngine::generate`].
pub fn generate_model(
    window: &ExtrapolationWindow,
    weights: &WeightVolume,
    params: &FseParams,
) -> Result<FseOutcome> {
    FseEngine::new(*params)?.generate(window, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video::AreaLabel;
    use crate::weighting::{build_weight_volume, WeightParams};
    use std::f64::consts::TAU;

    fn params(fft: [usize; 3], iters: usize, gamma: f64) -> FseParams {
        FseParams {
            block: [1, 1, 1],
            border: 0,
            fft_size: fft,
            gamma,
            max_iterations: iters,
            min_gain: 0.0,
        }
    }

    fn window(dims: [usize; 3], f: impl Fn(usize, usize, usize) -> f64, label: impl Fn(usize, usize, usize) -> AreaLabel) -> ExtrapolationWindow {
        let mut vals = Vec::new();
        let mut labels = Vec::new();
        for p in 0..dims[2] {
            for n in 0..dims[1] {
                for m in 0..dims[0] {
                    let l = label(m, n, p);
                    labels.push(l);
                    vals.push(if l.is_loss() { 0.0 } else { f(m, n, p) });
                }
            }
        }
        ExtrapolationWindow::from_parts(dims, vals, labels).unwrap()
    }

    #[test]
    fn single_bin_is_selected() {
        let shape = [4, 3, 2];
        let mut s = vec![Complex64::default(); 24];
        s[(3 + 2) * 4 + 3] = Complex64::new(0.0, -2.0);
        assert_eq!(select_basis(&s, shape), [3, 2, 1]);
    }

    #[test]
    fn ties_go_to_smallest_w_u_v() {
        let shape = [4, 4, 2];
        let mut s = vec![Complex64::default(); 32];
        // (u, v, w) = (1, 3, 0) and (2, 0, 0): equal magnitude, (w,u,v) = (0,1,3) < (0,2,0)
        let at = |u: usize, v: usize, w: usize| (w * 4 + v) * 4 + u;
        s[at(1, 3, 0)] = Complex64::new(3.0, 4.0);
        s[at(2, 0, 0)] = Complex64::new(-5.0, 0.0);
        s[at(0, 0, 1)] = Complex64::new(0.0, 5.0);
        assert_eq!(select_basis(&s, shape), [1, 3, 0]);
    }

    #[test]
    fn cosine_selects_its_frequency() {
        let shape = [16, 1, 1];
        let vals: Vec<f64> = (0..16).map(|m| (TAU * 3.0 * m as f64 / 16.0).cos()).collect();
        let spec: Vec<Complex64> = (0..16)
            .map(|u| {
                (0..16)
                    .map(|m| Complex64::from_polar(vals[m], -TAU * (u * m) as f64 / 16.0))
                    .sum()
            })
            .collect();
        // bins 3 and 13 carry 8 each; the tie goes to 3
        let k = select_basis(&spec, shape);
        assert_eq!(k, [3, 0, 0]);
        let state = SpectralState::new(&vals, &[1.0; 16], [16, 1, 1], shape).unwrap();
        assert_eq!(state.select().0, [3, 0, 0]);
    }

    #[test]
    fn unit_gamma_with_flat_weights_clears_the_bin() {
        let shape = [8, 8, 1];
        let vals: Vec<f64> = (0..64)
            .map(|i| (TAU * 2.0 * (i % 8) as f64 / 8.0 + TAU * (i / 8) as f64 / 8.0).cos())
            .collect();
        let mut state = SpectralState::new(&vals, &[1.0; 64], [8, 8, 1], shape).unwrap();
        let (k, _) = state.select();
        assert_eq!(k, [2, 1, 0]);
        state.update(k, 1.0);
        assert!(state.residual(k).norm() < 1e-12);
        assert!(state.residual(negate(k, shape)).norm() < 1e-12);
        for (i, c) in state.residual_spectrum().iter().enumerate() {
            assert!(c.norm() < 1e-12, "bin {i} = {c}");
        }
    }

    #[test]
    fn gamma_scales_increment_linearly() {
        let shape = [8, 4, 1];
        let vals: Vec<f64> = (0..32).map(|i| ((i * 7) % 11) as f64).collect();
        let w: Vec<f64> = (0..32).map(|i| 0.2 + (i % 5) as f64 * 0.1).collect();
        let mut a = SpectralState::new(&vals, &w, [8, 4, 1], shape).unwrap();
        let mut b = SpectralState::new(&vals, &w, [8, 4, 1], shape).unwrap();
        let k = [1, 1, 0];
        a.update(k, 1.0);
        b.update(k, 0.5);
        assert_eq!(b.coefficient(k) * 2.0, a.coefficient(k));
    }

    #[test]
    fn coefficients_stay_conjugate_symmetric() {
        let shape = [6, 5, 3];
        let dims = [5, 4, 3];
        let vals: Vec<f64> = (0..60).map(|i| ((i * 37) % 19) as f64 - 9.0).collect();
        let w: Vec<f64> = (0..60).map(|i| if i % 3 == 0 { 0.0 } else { 0.1 * (i % 7) as f64 + 0.1 }).collect();
        let mut s = SpectralState::new(&vals, &w, dims, shape).unwrap();
        for _ in 0..15 {
            let (k, _) = s.select();
            s.update(k, 0.5);
            for wq in 0..3 {
                for v in 0..5 {
                    for u in 0..6 {
                        let k = [u, v, wq];
                        let a = s.coefficient(k);
                        let b = s.coefficient(negate(k, shape)).conj();
                        assert!((a - b).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_window_gives_zero_model() {
        let dims = [6, 6, 2];
        let win = window(dims, |_, _, _| 0.0, |_, _, _| AreaLabel::Support);
        let wv = build_weight_volume(&win, None, &WeightParams::default()).unwrap();
        let out = generate_model(&win, &wv, &params([8, 8, 2], 20, 0.5)).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.model.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_support_reports_diagnostic() {
        let dims = [4, 4, 1];
        let win = window(dims, |_, _, _| 5.0, |_, _, _| AreaLabel::Loss);
        let wv = build_weight_volume(&win, None, &WeightParams::default()).unwrap();
        let out = generate_model(&win, &wv, &params([4, 4, 1], 10, 0.5)).unwrap();
        assert!(out.empty_support);
        assert!(out.model.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_signal_is_extrapolated() {
        let dims = [12, 12, 3];
        let win = window(
            dims,
            |_, _, _| 87.0,
            |m, n, p| if (m + 2 * n + p) % 4 == 0 { AreaLabel::Support } else { AreaLabel::Loss },
        );
        let wv = build_weight_volume(&win, None, &WeightParams::default()).unwrap();
        let out = generate_model(&win, &wv, &params([16, 16, 4], 100, 0.5)).unwrap();
        for (i, &l) in win.labels().iter().enumerate() {
            if l == AreaLabel::Loss {
                assert!((out.model[i] - 87.0).abs() < 1e-3, "{}", out.model[i]);
            }
        }
    }

    #[test]
    fn loss_values_do_not_matter() {
        let dims = [8, 8, 2];
        let label = |m: usize, n: usize, _p: usize| if (m + n).is_multiple_of(2) { AreaLabel::Support } else { AreaLabel::Loss };
        let a = window(dims, |m, n, p| (m * 3 + n * 5 + p) as f64, label);
        let mut b = a.clone();
        for (v, l) in b.values_mut().iter_mut().zip(a.labels()) {
            if *l == AreaLabel::Loss {
                *v = 1234.5;
            }
        }
        let wv = build_weight_volume(&a, None, &WeightParams::default()).unwrap();
        let p = params([8, 8, 4], 30, 0.5);
        assert_eq!(generate_model(&a, &wv, &p).unwrap().model, generate_model(&b, &wv, &p).unwrap().model);
    }

    #[test]
    fn rejects_window_larger_than_grid() {
        let dims = [10, 4, 1];
        let win = window(dims, |_, _, _| 1.0, |_, _, _| AreaLabel::Support);
        let wv = build_weight_volume(&win, None, &WeightParams::default()).unwrap();
        assert!(generate_model(&win, &wv, &params([8, 8, 1], 5, 0.5)).is_err());
    }

    #[test]
    fn min_gain_stops_early() {
        let dims = [8, 8, 1];
        let win = window(dims, |m, n, _| (m * n) as f64, |m, n, _| if (m + n) % 3 == 0 { AreaLabel::Loss } else { AreaLabel::Support });
        let wv = build_weight_volume(&win, None, &WeightParams::default()).unwrap();
        let mut p = params([8, 8, 1], 200, 0.5);
        let full = generate_model(&win, &wv, &p).unwrap();
        p.min_gain = 1.0;
        let early = generate_model(&win, &wv, &p).unwrap();
        assert!(early.iterations < full.iterations);
        let gains: Vec<f64> = early.energy.windows(2).map(|e| e[0] - e[1]).collect();
        assert!(gains.iter().all(|&g| g >= 1.0));
    }

    #[test]
    fn param_validation() {
        assert!(FseParams::default().validate().is_ok());
        let p = FseParams { gamma: 0.0, ..FseParams::default() };
        assert!(p.validate().is_err());
        let p = FseParams { border: 15, ..FseParams::default() };
        assert!(p.validate().is_err());
    }
}
