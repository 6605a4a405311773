//! Dense two-frame motion estimation by polynomial expansion.
//!
//! Each frame is locally approximated by a quadratic `x'Ax + b'x + c`
//! (Gaussian-weighted least squares). A displacement `d` turns `b` into
//! `b - 2Ad`, so `d` follows from the difference of the linear terms; the
//! per-pixel constraints are pooled over a box window and solved coarse to
//! fine on an image pyramid.

use crate::error::{Error, Result};

/// Single-channel 2D field.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::mismatch("plane size", width * height, data.len()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

#[inline]
fn sample_clamped(data: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = data[y0 * w + x0] * (1.0 - fx) + data[y0 * w + x1] * fx;
    let bottom = data[y1 * w + x0] * (1.0 - fx) + data[y1 * w + x1] * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Dense displacement field; `(vx, vy)` at a pixel of the first frame points
/// to where that content sits in the second frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub width: usize,
    pub height: usize,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl VectorField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            vx: vec![0.0; width * height],
            vy: vec![0.0; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, vx: f64, vy: f64) -> Self {
        Self {
            width,
            height,
            vx: vec![vx; width * height],
            vy: vec![vy; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.vx[i], self.vy[i])
    }

    pub fn mean_magnitude(&self) -> f64 {
        self.vx
            .iter()
            .zip(&self.vy)
            .map(|(x, y)| x.hypot(*y))
            .sum::<f64>()
            / self.vx.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlowParams {
    pub levels: usize,
    /// Half-size of the box window pooling the displacement constraints.
    pub window_radius: usize,
    pub iterations_per_level: usize,
    /// Half-size of the polynomial fitting neighbourhood.
    pub poly_radius: usize,
    /// Standard deviation of the Gaussian applicability in the fit.
    pub smoothing_sigma: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            levels: 3,
            window_radius: 7,
            iterations_per_level: 3,
            poly_radius: 5,
            smoothing_sigma: 1.1,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.levels == 0 {
            return bad("levels", "must be positive");
        }
        if self.window_radius == 0 {
            return bad("window_radius", "must be positive");
        }
        if self.iterations_per_level == 0 {
            return bad("iterations_per_level", "must be positive");
        }
        if self.poly_radius == 0 {
            return bad("poly_radius", "must be positive");
        }
        if self.smoothing_sigma.is_nan() || self.smoothing_sigma <= 0.0 {
            return bad("smoothing_sigma", "must be positive");
        }
        Ok(())
    }
}

/// Quadratic expansion coefficients per pixel.
struct Expansion {
    width: usize,
    height: usize,
    /// Linear terms.
    bx: Vec<f64>,
    by: Vec<f64>,
    /// Quadratic form `[[axx, axy], [axy, ayy]]`.
    axx: Vec<f64>,
    ayy: Vec<f64>,
    axy: Vec<f64>,
}

/// Precomputed separable kernels and the inverse Gram matrix of the
/// Gaussian-weighted basis `{1, x, y, x^2, y^2, xy}`.
struct PolyBasis {
    radius: usize,
    /// `g(k) * k^i` for i = 0, 1, 2.
    kernels: [Vec<f64>; 3],
    inv_gram: [[f64; 6]; 6],
}

impl PolyBasis {
    fn new(radius: usize, sigma: f64) -> Self {
        let r = radius as isize;
        let g: Vec<f64> = (-r..=r)
            .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let kernels = [0, 1, 2].map(|i| {
            (-r..=r)
                .zip(&g)
                .map(|(k, gk)| gk * (k as f64).powi(i))
                .collect::<Vec<f64>>()
        });
        let mut gram = [[0.0; 6]; 6];
        for (iy, ky) in (-r..=r).enumerate() {
            for (ix, kx) in (-r..=r).enumerate() {
                let (x, y) = (kx as f64, ky as f64);
                let b = [1.0, x, y, x * x, y * y, x * y];
                let a = g[ix] * g[iy];
                for i in 0..6 {
                    for j in 0..6 {
                        gram[i][j] += a * b[i] * b[j];
                    }
                }
            }
        }
        Self {
            radius,
            kernels,
            inv_gram: invert6(gram),
        }
    }

    fn expand(&self, plane: &Plane) -> Expansion {
        let (w, h) = (plane.width, plane.height);
        let r = self.radius as isize;
        // Row pass: moments in x of order 0..=2.
        let mut rows = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
        for y in 0..h {
            let line = &plane.data[y * w..][..w];
            for x in 0..w {
                let mut acc = [0.0; 3];
                for (j, k) in (-r..=r).enumerate() {
                    let v = line[(x as isize + k).clamp(0, w as isize - 1) as usize];
                    for (a, kern) in acc.iter_mut().zip(&self.kernels) {
                        *a += kern[j] * v;
                    }
                }
                for (dst, a) in rows.iter_mut().zip(acc) {
                    dst[y * w + x] = a;
                }
            }
        }
        // Column pass: (x-order, y-order) for 1, x, y, x^2, y^2, xy.
        const TERMS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1)];
        let mut out = Expansion {
            width: w,
            height: h,
            bx: vec![0.0; w * h],
            by: vec![0.0; w * h],
            axx: vec![0.0; w * h],
            ayy: vec![0.0; w * h],
            axy: vec![0.0; w * h],
        };
        for y in 0..h {
            for x in 0..w {
                let mut moments = [0.0; 6];
                for (j, k) in (-r..=r).enumerate() {
                    let yy = (y as isize + k).clamp(0, h as isize - 1) as usize;
                    let i = yy * w + x;
                    for (m, &(ox, oy)) in moments.iter_mut().zip(&TERMS) {
                        *m += self.kernels[oy][j] * rows[ox][i];
                    }
                }
                let mut coeff = [0.0; 6];
                for (c, row) in coeff.iter_mut().zip(&self.inv_gram) {
                    *c = row.iter().zip(&moments).map(|(a, b)| a * b).sum();
                }
                let i = y * w + x;
                out.bx[i] = coeff[1];
                out.by[i] = coeff[2];
                out.axx[i] = coeff[3];
                out.ayy[i] = coeff[4];
                out.axy[i] = coeff[5] / 2.0;
            }
        }
        out
    }
}

fn invert6(mut a: [[f64; 6]; 6]) -> [[f64; 6]; 6] {
    let mut inv = [[0.0; 6]; 6];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..6 {
        let pivot = (col..6)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..6 {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..6 {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..6 {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

fn downsample(plane: &Plane) -> Plane {
    const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let (w, h) = (plane.width, plane.height);
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (0..5)
                .map(|j| K[j] * plane.data[y * w + clamp(x as isize + j as isize - 2, w)])
                .sum();
        }
    }
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    Plane::from_fn(nw, nh, |x, y| {
        (0..5)
            .map(|j| K[j] * tmp[clamp(2 * y as isize + j as isize - 2, h) * w + 2 * x])
            .sum()
    })
}

fn upsample_flow(coarse: &VectorField, width: usize, height: usize) -> VectorField {
    let sx = coarse.width as f64 / width as f64;
    let sy = coarse.height as f64 / height as f64;
    let mut out = VectorField::zeros(width, height);
    for y in 0..height {
        for x in 0..width {
            let cx = (x as f64 + 0.5) * sx - 0.5;
            let cy = (y as f64 + 0.5) * sy - 0.5;
            let i = y * width + x;
            out.vx[i] = sample_clamped(&coarse.vx, coarse.width, coarse.height, cx, cy) / sx;
            out.vy[i] = sample_clamped(&coarse.vy, coarse.width, coarse.height, cx, cy) / sy;
        }
    }
    out
}

/// Separable box sum of radius `r` with edge replication.
fn box_filter(src: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let r = r as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let line = &src[y * w..][..w];
        for x in 0..w {
            tmp[y * w + x] = (-r..=r).map(|k| line[clamp(x as isize + k, w)]).sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (-r..=r).map(|k| tmp[clamp(y as isize + k, h) * w + x]).sum();
        }
    }
    out
}

/// Refines `flow` in place from the expansions of both frames.
fn refine(e1: &Expansion, e2: &Expansion, flow: &mut VectorField, window_radius: usize) {
    let (w, h) = (e1.width, e1.height);
    let n = w * h;
    let mut g11 = vec![0.0; n];
    let mut g12 = vec![0.0; n];
    let mut g22 = vec![0.0; n];
    let mut h1 = vec![0.0; n];
    let mut h2 = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (dx, dy) = (flow.vx[i], flow.vy[i]);
            let (sx, sy) = (x as f64 + dx, y as f64 + dy);
            let s = |f: &Vec<f64>| sample_clamped(f, w, h, sx, sy);
            let a11 = 0.5 * (e1.axx[i] + s(&e2.axx));
            let a22 = 0.5 * (e1.ayy[i] + s(&e2.ayy));
            let a12 = 0.5 * (e1.axy[i] + s(&e2.axy));
            let db1 = -0.5 * (s(&e2.bx) - e1.bx[i]) + a11 * dx + a12 * dy;
            let db2 = -0.5 * (s(&e2.by) - e1.by[i]) + a12 * dx + a22 * dy;
            g11[i] = a11 * a11 + a12 * a12;
            g12[i] = a12 * (a11 + a22);
            g22[i] = a12 * a12 + a22 * a22;
            h1[i] = a11 * db1 + a12 * db2;
            h2[i] = a12 * db1 + a22 * db2;
        }
    }
    let [g11, g12, g22, h1, h2] = [g11, g12, g22, h1, h2].map(|f| box_filter(&f, w, h, window_radius));
    for i in 0..n {
        let det = g11[i] * g22[i] - g12[i] * g12[i];
        let inv = 1.0 / (det + 1e-3);
        flow.vx[i] = (g22[i] * h1[i] - g12[i] * h2[i]) * inv;
        flow.vy[i] = (g11[i] * h2[i] - g12[i] * h1[i]) * inv;
    }
}

/// Estimates the displacement carrying `frame_a` onto `frame_b`.
pub fn estimate_flow(frame_a: &Plane, frame_b: &Plane, params: &FlowParams) -> Result<VectorField> {
    params.validate()?;
    if (frame_a.width, frame_a.height) != (frame_b.width, frame_b.height) {
        return Err(Error::mismatch(
            "frame dims",
            (frame_a.width, frame_a.height),
            (frame_b.width, frame_b.height),
        ));
    }
    let needed = 2 * params.poly_radius + 1;
    if frame_a.width < needed || frame_a.height < needed {
        return Err(Error::FrameTooSmall {
            width: frame_a.width,
            height: frame_a.height,
            needed,
        });
    }

    let mut pyr_a = vec![frame_a.clone()];
    let mut pyr_b = vec![frame_b.clone()];
    while pyr_a.len() < params.levels {
        let last = pyr_a.last().unwrap();
        if last.width.div_ceil(2) < needed || last.height.div_ceil(2) < needed {
            break;
        }
        let next_a = downsample(last);
        let next_b = downsample(pyr_b.last().unwrap());
        pyr_a.push(next_a);
        pyr_b.push(next_b);
    }

    let basis = PolyBasis::new(params.poly_radius, params.smoothing_sigma);
    let mut flow: Option<VectorField> = None;
    for (a, b) in pyr_a.iter().zip(&pyr_b).rev() {
        let mut current = match flow.take() {
            Some(f) => upsample_flow(&f, a.width, a.height),
            None => VectorField::zeros(a.width, a.height),
        };
        let e1 = basis.expand(a);
        let e2 = basis.expand(b);
        for _ in 0..params.iterations_per_level {
            refine(&e1, &e2, &mut current, params.window_radius);
        }
        flow = Some(current);
    }
    Ok(flow.unwrap())
}
