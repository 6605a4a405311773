//! Spatio-temporal weighting of an extrapolation window.
//!
//! The weight decays as `rho_hat^d` with the Euclidean distance `d` from the
//! window centre. The motion-compensated variant moves the spatial centre of
//! each temporal slice by that slice's averaged displacement; the temporal
//! term is never shifted.

use crate::error::{Error, Result};
use crate::video::{AreaLabel, ExtrapolationWindow};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightParams {
    /// Decay base, strictly between 0 and 1.
    pub rho_hat: f64,
    /// Attenuation applied to previously reconstructed voxels.
    pub delta: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self {
            rho_hat: 0.7,
            delta: 0.5,
        }
    }
}

impl WeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_hat > 0.0 && self.rho_hat < 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho_hat",
                reason: format!("{} is not in (0, 1)", self.rho_hat),
            });
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("{} is not in [0, 1]", self.delta),
            });
        }
        Ok(())
    }
}

/// Averaged displacement of each temporal slice relative to the centre slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMotion {
    vx: Vec<f64>,
    vy: Vec<f64>,
}

impl SliceMotion {
    pub fn zero(slices: usize) -> Self {
        Self {
            vx: vec![0.0; slices],
            vy: vec![0.0; slices],
        }
    }

    pub fn new(vx: Vec<f64>, vy: Vec<f64>) -> Result<Self> {
        if vx.len() != vy.len() {
            return Err(Error::mismatch("slice motion components", vx.len(), vy.len()));
        }
        if vx.iter().chain(&vy).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "slice motion",
                reason: "non-finite displacement".into(),
            });
        }
        Ok(Self { vx, vy })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vx.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vx.is_empty()
    }

    pub fn vx(&self) -> &[f64] {
        &self.vx
    }

    pub fn vy(&self) -> &[f64] {
        &self.vy
    }

    #[inline]
    pub fn get(&self, p: usize) -> (f64, f64) {
        (self.vx[p], self.vy[p])
    }

    pub fn is_zero(&self) -> bool {
        self.vx.iter().chain(&self.vy).all(|&v| v == 0.0)
    }
}

/// Non-negative weights over a window, same layout as the window.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVolume {
    dims: [usize; 3],
    w: Vec<f64>,
}

impl WeightVolume {
    pub fn from_vec(dims: [usize; 3], w: Vec<f64>) -> Result<Self> {
        if w.len() != dims.iter().product::<usize>() {
            return Err(Error::mismatch("weight volume size", dims, w.len()));
        }
        if w.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "weights must be finite and non-negative".into(),
            });
        }
        Ok(Self { dims, w })
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, p: usize) -> f64 {
        self.w[(p * self.dims[1] + n) * self.dims[0] + m]
    }

    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }
}

#[inline]
fn decay(m: usize, n: usize, p: usize, dims: [usize; 3], shift: (f64, f64), rho_hat: f64) -> f64 {
    let dx = m as f64 - (dims[0] as f64 - 1.0) / 2.0 - shift.0;
    let dy = n as f64 - (dims[1] as f64 - 1.0) / 2.0 - shift.1;
    let dt = p as f64 - (dims[2] as f64 - 1.0) / 2.0;
    rho_hat.powf((dx * dx + dy * dy + dt * dt).sqrt())
}

/// `rho_hat` raised to the distance of `(m, n, p)` from the window centre.
pub fn rho_static(m: usize, n: usize, p: usize, dims: [usize; 3], params: &WeightParams) -> f64 {
    decay(m, n, p, dims, (0.0, 0.0), params.rho_hat)
}

/// Like [`rho_static`] with the spatial centre of slice `p` moved by `motion[p]`.
pub fn rho_mc(
    m: usize,
    n: usize,
    p: usize,
    dims: [usize; 3],
    motion: &SliceMotion,
    params: &WeightParams,
) -> f64 {
    decay(m, n, p, dims, motion.get(p), params.rho_hat)
}

/// Weights for every window voxel: `rho` on support, `delta * rho` on
/// reconstructed voxels, zero on loss and outside voxels.
///
/// `motion = None` gives the static weighting.
pub fn build_weight_volume(
    window: &ExtrapolationWindow,
    motion: Option<&SliceMotion>,
    params: &WeightParams,
) -> Result<WeightVolume> {
    params.validate()?;
    let dims = window.dims();
    if let Some(mv) = motion {
        if mv.len() != dims[2] {
            return Err(Error::mismatch("slice motion length", dims[2], mv.len()));
        }
    }
    let mut w = Vec::with_capacity(window.len());
    let labels = window.labels();
    for p in 0..dims[2] {
        let shift = motion.map_or((0.0, 0.0), |mv| mv.get(p));
        for n in 0..dims[1] {
            for m in 0..dims[0] {
                let scale = match labels[w.len()] {
                    AreaLabel::Support => 1.0,
                    AreaLabel::Reconstructed => params.delta,
                    AreaLabel::Loss | AreaLabel::Outside => 0.0,
                };
                let value = if scale == 0.0 {
                    0.0
                } else {
                    scale * decay(m, n, p, dims, shift, params.rho_hat)
                };
                w.push(value);
            }
        }
    }
    Ok(WeightVolume { dims, w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: WeightParams = WeightParams {
        rho_hat: 0.7,
        delta: 0.5,
    };

    fn window(dims: [usize; 3], label: impl Fn(usize) -> AreaLabel) -> ExtrapolationWindow {
        let n = dims.iter().product();
        ExtrapolationWindow::from_parts(dims, vec![1.0; n], (0..n).map(label).collect()).unwrap()
    }

    #[test]
    fn centre_voxel_has_unit_weight() {
        assert_eq!(rho_static(2, 2, 1, [5, 5, 3], &P), 1.0);
    }

    #[test]
    fn unit_distance_gives_rho_hat() {
        assert_eq!(rho_static(3, 2, 1, [5, 5, 3], &P), 0.7);
        assert_eq!(rho_static(2, 2, 0, [5, 5, 3], &P), 0.7);
    }

    #[test]
    fn diagonal_distance() {
        // 0.7^sqrt(2), evaluated independently as exp(sqrt(2) ln 0.7)
        let expected = (std::f64::consts::SQRT_2 * 0.7f64.ln()).exp();
        let got = rho_static(3, 3, 1, [5, 5, 3], &P);
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.603_859_005_393).abs() < 1e-11);
    }

    #[test]
    fn zero_motion_matches_static_everywhere() {
        let dims = [6, 5, 4];
        let mv = SliceMotion::zero(4);
        for p in 0..4 {
            for n in 0..5 {
                for m in 0..6 {
                    assert_eq!(rho_mc(m, n, p, dims, &mv, &P), rho_static(m, n, p, dims, &P));
                }
            }
        }
    }

    #[test]
    fn integer_shift_translates_the_peak() {
        let dims = [9, 9, 3];
        let mv = SliceMotion::new(vec![0.0, 0.0, 2.0], vec![0.0; 3]).unwrap();
        for n in 0..9 {
            for m in 0..7 {
                assert_eq!(rho_mc(m + 2, n, 2, dims, &mv, &P), rho_static(m, n, 2, dims, &P));
            }
        }
    }

    #[test]
    fn purely_temporal_offset() {
        // P = 7: slice 0 lies 3 frames from the centre.
        let dims = [8, 8, 7];
        let mv = SliceMotion::new(vec![1.5; 7], vec![-0.5; 7]).unwrap();
        // Shifted centre of slice 0: (3.5 + 1.5, 3.5 - 0.5) = (5, 3).
        let got = rho_mc(5, 3, 0, dims, &mv, &P);
        assert!((got - 0.343).abs() < 1e-12, "{got}");
    }

    #[test]
    fn label_cases() {
        let dims = [3, 3, 1];
        let loss = window(dims, |_| AreaLabel::Loss);
        assert!(build_weight_volume(&loss, None, &P).unwrap().values().iter().all(|&w| w == 0.0));

        let recon = window(dims, |_| AreaLabel::Reconstructed);
        assert_eq!(build_weight_volume(&recon, None, &P).unwrap().get(1, 1, 0), 0.5);

        let full = window([4, 3, 2], |_| AreaLabel::Support);
        let w = build_weight_volume(&full, None, &P).unwrap();
        for p in 0..2 {
            for n in 0..3 {
                for m in 0..4 {
                    assert_eq!(w.get(m, n, p), rho_static(m, n, p, [4, 3, 2], &P));
                }
            }
        }
    }

    #[test]
    fn motion_length_must_match() {
        let win = window([3, 3, 3], |_| AreaLabel::Support);
        let mv = SliceMotion::zero(2);
        assert!(build_weight_volume(&win, Some(&mv), &P).is_err());
    }

    #[test]
    fn parameter_validation() {
        let win = window([3, 3, 1], |_| AreaLabel::Support);
        for bad in [
            WeightParams { rho_hat: 1.0, delta: 0.5 },
            WeightParams { rho_hat: 0.0, delta: 0.5 },
            WeightParams { rho_hat: 0.7, delta: 1.5 },
        ] {
            assert!(build_weight_volume(&win, None, &bad).is_err());
        }
    }

    fn label_of(code: u8) -> AreaLabel {
        match code % 4 {
            0 => AreaLabel::Support,
            1 => AreaLabel::Loss,
            2 => AreaLabel::Reconstructed,
            _ => AreaLabel::Outside,
        }
    }

    proptest! {
        #[test]
        fn zero_motion_equivalence(codes in proptest::collection::vec(any::<u8>(), 60)) {
            let win = window([5, 4, 3], |i| label_of(codes[i]));
            let a = build_weight_volume(&win, None, &P).unwrap();
            let b = build_weight_volume(&win, Some(&SliceMotion::zero(3)), &P).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn positive_exactly_on_support_and_reconstructed(
            codes in proptest::collection::vec(any::<u8>(), 60),
            vx in proptest::collection::vec(-3.0f64..3.0, 3),
            vy in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let win = window([5, 4, 3], |i| label_of(codes[i]));
            let mv = SliceMotion::new(vx, vy).unwrap();
            let w = build_weight_volume(&win, Some(&mv), &P).unwrap();
            for (i, &l) in win.labels().iter().enumerate() {
                let positive = w.values()[i] > 0.0;
                prop_assert_eq!(positive, matches!(l, AreaLabel::Support | AreaLabel::Reconstructed));
                prop_assert!(w.values()[i] <= 1.0);
            }
        }

        #[test]
        fn static_weights_decay_with_distance(m in 1usize..10, n in 1usize..10, p in 1usize..5) {
            let dims = [m, n, p];
            let win = window(dims, |_| AreaLabel::Support);
            let w = build_weight_volume(&win, None, &P).unwrap();
            let c = [(m as f64 - 1.0) / 2.0, (n as f64 - 1.0) / 2.0, (p as f64 - 1.0) / 2.0];
            let mut pts = Vec::new();
            for pp in 0..p { for nn in 0..n { for mm in 0..m {
                let d = ((mm as f64 - c[0]).powi(2) + (nn as f64 - c[1]).powi(2) + (pp as f64 - c[2]).powi(2)).sqrt();
                pts.push((d, w.get(mm, nn, pp)));
            }}}
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for pair in pts.windows(2) {
                prop_assert!(pair[1].1 <= pair[0].1 + 1e-15);
            }
        }

        #[test]
        fn integer_shift_covariance(
            shifts in proptest::collection::vec((-4i32..=4, -4i32..=4), 3)
        ) {
            let dims = [12, 10, 3];
            let mv = SliceMotion::new(
                shifts.iter().map(|s| s.0 as f64).collect(),
                shifts.iter().map(|s| s.1 as f64).collect(),
            ).unwrap();
            let win = window(dims, |_| AreaLabel::Support);
            let moved = build_weight_volume(&win, Some(&mv), &P).unwrap();
            let fixed = build_weight_volume(&win, None, &P).unwrap();
            for p in 0..3 {
                let (sx, sy) = shifts[p];
                for n in 0..10i32 { for m in 0..12i32 {
                    let (sm, sn) = (m - sx, n - sy);
                    if (0..12).contains(&sm) && (0..10).contains(&sn) {
                        let a = moved.get(m as usize, n as usize, p);
                        let b = fixed.get(sm as usize, sn as usize, p);
                        prop_assert!((a - b).abs() <= 1e-15 * b.max(1.0));
                    }
                }}
            }
        }

        #[test]
        fn argmax_sits_at_nearest_voxel_to_shifted_centre(
            vx in -3.4f64..3.4, vy in -3.4f64..3.4
        ) {
            let dims = [12, 12, 3];
            let mv = SliceMotion::new(vec![0.0, vx, 0.0], vec![0.0, vy, 0.0]).unwrap();
            let win = window(dims, |_| AreaLabel::Support);
            let w = build_weight_volume(&win, Some(&mv), &P).unwrap();
            let (mut best, mut arg) = (-1.0, (0, 0));
            for n in 0..12 { for m in 0..12 {
                if w.get(m, n, 1) > best { best = w.get(m, n, 1); arg = (m, n); }
            }}
            let cx = 5.5 + vx;
            let cy = 5.5 + vy;
            let d_arg = (arg.0 as f64 - cx).powi(2) + (arg.1 as f64 - cy).powi(2);
            let nearest = (cx.round().clamp(0.0, 11.0) - cx).powi(2) + (cy.round().clamp(0.0, 11.0) - cy).powi(2);
            prop_assert!((d_arg - nearest).abs() < 1e-9);
        }
    }
}
