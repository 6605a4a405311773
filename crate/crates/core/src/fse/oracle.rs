//! Spatial-domain reference for [`generate_model`](super::generate_model).
//!
//! Evaluates every basis function explicitly and forms each weighted inner
//! product by direct summation. Cost is `O(iterations · |grid| · |window|)`,
//! so it is only meant for small windows.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{is_self_conjugate, select_basis, FseOutcome, FseParams};
use crate::error::{Error, Result};
use crate::video::ExtrapolationWindow;
use crate::weighting::WeightVolume;

fn basis(k: [usize; 3], x: [usize; 3], shape: [usize; 3]) -> Complex64 {
    let frac: f64 = (0..3)
        .map(|a| ((k[a] * x[a]) % shape[a]) as f64 / shape[a] as f64)
        .sum();
    Complex64::from_polar(1.0, TAU * frac)
}

/// Greedy weighted matching pursuit over the DFT basis, computed naively.
pub fn oracle_matching_pursuit(
    window: &ExtrapolationWindow,
    weights: &WeightVolume,
    params: &FseParams,
) -> Result<FseOutcome> {
    params.validate()?;
    let dims = window.dims();
    if weights.dims() != dims {
        return Err(Error::mismatch("weight dims", dims, weights.dims()));
    }
    params.check_window(dims)?;
    let shape = params.fft_size;
    let n = window.len();
    let w = weights.values();

    let coords: Vec<[usize; 3]> = (0..dims[2])
        .flat_map(|p| (0..dims[1]).flat_map(move |nn| (0..dims[0]).map(move |m| [m, nn, p])))
        .collect();
    let freqs: Vec<[usize; 3]> = (0..shape[2])
        .flat_map(|c| (0..shape[1]).flat_map(move |b| (0..shape[0]).map(move |a| [a, b, c])))
        .collect();

    let mut residual: Vec<f64> = window.values().to_vec();
    let mut model = vec![0.0; n];
    let energy_of = |r: &[f64]| -> f64 { r.iter().zip(w).map(|(&r, &w)| w * r * r).sum() };
    let mut energy = vec![energy_of(&residual)];
    let w0: f64 = w.iter().sum();
    if w0 <= 0.0 {
        return Ok(FseOutcome {
            model,
            iterations: 0,
            energy,
            selected: Vec::new(),
            empty_support: true,
        });
    }

    let mut selected = Vec::new();
    for _ in 0..params.max_iterations {
        let projections: Vec<Complex64> = freqs
            .iter()
            .map(|&k| {
                coords
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| basis(k, x, shape).conj() * (w[i] * residual[i]))
                    .sum()
            })
            .collect();
        let k = select_basis(&projections, shape);
        let r = projections[(k[2] * shape[1] + k[1]) * shape[0] + k[0]];
        if r.norm_sqr() <= 0.0 {
            break;
        }
        let step: Vec<f64> = if is_self_conjugate(k, shape) {
            let delta = params.gamma * r.re / w0;
            coords.iter().map(|&x| delta * basis(k, x, shape).re).collect()
        } else {
            let delta = r * (params.gamma / w0);
            coords
                .iter()
                .map(|&x| 2.0 * (delta * basis(k, x, shape)).re)
                .collect()
        };
        let next: Vec<f64> = residual.iter().zip(&step).map(|(r, s)| r - s).collect();
        let next_energy = energy_of(&next);
        let last = *energy.last().unwrap();
        if params.min_gain > 0.0 && last - next_energy < params.min_gain {
            break;
        }
        residual = next;
        for (g, s) in model.iter_mut().zip(&step) {
            *g += s;
        }
        energy.push(next_energy);
        selected.push(k);
    }

    Ok(FseOutcome {
        model,
        iterations: selected.len(),
        energy,
        selected,
        empty_support: false,
    })
}
