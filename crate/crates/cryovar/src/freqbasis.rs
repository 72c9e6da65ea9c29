//! Finite-dimensional volume and image spaces.
//!
//! Volumes live on a ball of integer frequencies `‖k‖ ≤ n_res/2` in 3D,
//! images on the analogous disc in 2D. Coefficients are the values of the
//! unitary centered DFT of a real grid at those frequencies, so white pixel
//! noise of variance σ² stays white with variance σ² per coefficient.
//!
//! Grids and frequency ranges are both centered, which requires odd sizes:
//! spatial samples sit at `x ∈ [-(N-1)/2, (N-1)/2]` and frequencies at
//! `k ∈ [-(N-1)/2, (N-1)/2]`. Real grids then map to Hermitian-symmetric
//! coefficient vectors with no unpaired Nyquist frequency.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Hermitian-symmetry and round-trip tolerance used by the transforms.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Ordered set of integer frequency triples with `‖k‖ ≤ n_res/2`.
///
/// The index list is canonical (lexicographic by `(k1,k2,k3)`), so two balls
/// built with the same `n_res` are identical. The ball is symmetric: `-k` is
/// listed whenever `k` is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyBall3D {
    n_res: u32,
    indices: Vec<[i32; 3]>,
    // Dense reverse lookup over the enclosing cube, offset by k_max.
    lookup: Vec<Option<u32>>,
}

/// Ordered set of integer frequency pairs with `‖k‖ ≤ n_res/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyDisc2D {
    n_res: u32,
    indices: Vec<[i32; 2]>,
    lookup: Vec<Option<u32>>,
}

fn check_n_res(n_res: u32) -> Result<()> {
    if n_res < 3 {
        return Err(Error::config(format!("n_res must be at least 3, got {n_res}")));
    }
    if n_res % 2 == 0 {
        return Err(Error::config(format!(
            "n_res must be odd so the frequency range is centered, got {n_res}"
        )));
    }
    Ok(())
}

/// Builds the canonical 3D frequency ball for an effective resolution.
///
/// Rejects even or too-small `n_res`: odd sizes keep the grid origin-centered.
pub fn build_ball3(n_res: u32) -> Result<FrequencyBall3D> {
    check_n_res(n_res)?;
    let k_max = ((n_res - 1) / 2) as i32;
    let side = n_res as usize;
    // radius² = (n_res/2)², kept in exact quarter-integer arithmetic
    let r2_times4 = (n_res as i64) * (n_res as i64);
    let mut indices = Vec::new();
    let mut lookup = vec![None; side * side * side];
    for k1 in -k_max..=k_max {
        for k2 in -k_max..=k_max {
            for k3 in -k_max..=k_max {
                let n2 = (k1 as i64).pow(2) + (k2 as i64).pow(2) + (k3 as i64).pow(2);
                if 4 * n2 <= r2_times4 {
                    let pos = cube_slot(k1, k2, k3, k_max, side);
                    lookup[pos] = Some(indices.len() as u32);
                    indices.push([k1, k2, k3]);
                }
            }
        }
    }
    Ok(FrequencyBall3D { n_res, indices, lookup })
}

/// Builds the canonical 2D frequency disc for an effective resolution.
pub fn build_disc2(n_res: u32) -> Result<FrequencyDisc2D> {
    check_n_res(n_res)?;
    let k_max = ((n_res - 1) / 2) as i32;
    let side = n_res as usize;
    let r2_times4 = (n_res as i64) * (n_res as i64);
    let mut indices = Vec::new();
    let mut lookup = vec![None; side * side];
    for k1 in -k_max..=k_max {
        for k2 in -k_max..=k_max {
            let n2 = (k1 as i64).pow(2) + (k2 as i64).pow(2);
            if 4 * n2 <= r2_times4 {
                let pos = ((k1 + k_max) as usize) * side + (k2 + k_max) as usize;
                lookup[pos] = Some(indices.len() as u32);
                indices.push([k1, k2]);
            }
        }
    }
    Ok(FrequencyDisc2D { n_res, indices, lookup })
}

#[inline]
fn cube_slot(k1: i32, k2: i32, k3: i32, k_max: i32, side: usize) -> usize {
    (((k1 + k_max) as usize) * side + (k2 + k_max) as usize) * side + (k3 + k_max) as usize
}

impl FrequencyBall3D {
    pub fn n_res(&self) -> u32 {
        self.n_res
    }

    /// Number of frequencies in the ball (the volume-space dimension p).
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[[i32; 3]] {
        &self.indices
    }

    /// Position of a triple in the canonical list, or `None` if outside.
    #[inline]
    pub fn position(&self, k: [i32; 3]) -> Option<usize> {
        let k_max = ((self.n_res - 1) / 2) as i32;
        if k.iter().any(|&c| c < -k_max || c > k_max) {
            return None;
        }
        self.lookup[cube_slot(k[0], k[1], k[2], k_max, self.n_res as usize)].map(|i| i as usize)
    }
}

impl FrequencyDisc2D {
    pub fn n_res(&self) -> u32 {
        self.n_res
    }

    /// Number of frequencies in the disc (the image-space dimension q).
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[[i32; 2]] {
        &self.indices
    }

    #[inline]
    pub fn position(&self, k: [i32; 2]) -> Option<usize> {
        let k_max = ((self.n_res - 1) / 2) as i32;
        if k.iter().any(|&c| c < -k_max || c > k_max) {
            return None;
        }
        let pos = ((k[0] + k_max) as usize) * self.n_res as usize + (k[1] + k_max) as usize;
        self.lookup[pos].map(|i| i as usize)
    }
}

/// Band-limited volume: complex coefficients over a shared [`FrequencyBall3D`].
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeCoeffs {
    pub ball: Arc<FrequencyBall3D>,
    pub values: Vec<Complex64>,
}

/// Band-limited image: complex coefficients over a shared [`FrequencyDisc2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCoeffs {
    pub disc: Arc<FrequencyDisc2D>,
    pub values: Vec<Complex64>,
}

impl VolumeCoeffs {
    pub fn zeros(ball: Arc<FrequencyBall3D>) -> Self {
        let values = vec![Complex64::ZERO; ball.len()];
        VolumeCoeffs { ball, values }
    }

    pub fn from_values(ball: Arc<FrequencyBall3D>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != ball.len() {
            return Err(Error::data(format!(
                "volume coefficient count {} does not match ball dimension {}",
                values.len(),
                ball.len()
            )));
        }
        Ok(VolumeCoeffs { ball, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Complex inner product `⟨self, other⟩ = Σ conj(self_i)·other_i`.
    pub fn dot(&self, other: &Self) -> Complex64 {
        dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    /// Largest deviation from Hermitian symmetry `v(-k) = conj(v(k))`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &k) in self.ball.indices().iter().enumerate() {
            let j = self
                .ball
                .position([-k[0], -k[1], -k[2]])
                .expect("ball is symmetric");
            let d = (self.values[i] - self.values[j].conj()).norm();
            worst = worst.max(d);
        }
        worst
    }

    pub fn is_hermitian_symmetric(&self, tol: f64) -> bool {
        self.symmetry_defect() <= tol
    }
}

impl ImageCoeffs {
    pub fn zeros(disc: Arc<FrequencyDisc2D>) -> Self {
        let values = vec![Complex64::ZERO; disc.len()];
        ImageCoeffs { disc, values }
    }

    pub fn from_values(disc: Arc<FrequencyDisc2D>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != disc.len() {
            return Err(Error::data(format!(
                "image coefficient count {} does not match disc dimension {}",
                values.len(),
                disc.len()
            )));
        }
        Ok(ImageCoeffs { disc, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dot(&self, other: &Self) -> Complex64 {
        dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &k) in self.disc.indices().iter().enumerate() {
            let j = self.disc.position([-k[0], -k[1]]).expect("disc is symmetric");
            let d = (self.values[i] - self.values[j].conj()).norm();
            worst = worst.max(d);
        }
        worst
    }

    pub fn is_hermitian_symmetric(&self, tol: f64) -> bool {
        self.symmetry_defect() <= tol
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Real N×N or N×N×N grid with centered sample coordinates.
///
/// Stored row-major; logical coordinates run over `[-(N-1)/2, (N-1)/2]`
/// along every axis.
#[derive(Debug, Clone)]
pub struct RealGrid {
    pub n: usize,
    pub dims: usize,
    pub data: Vec<f64>,
}

impl RealGrid {
    pub fn zeros(n: usize, dims: usize) -> Self {
        assert!(dims == 2 || dims == 3, "grids are 2D or 3D");
        RealGrid { n, dims, data: vec![0.0; n.pow(dims as u32)] }
    }

    /// Value at centered coordinates (2D).
    pub fn at2(&self, x: i32, y: i32) -> f64 {
        let h = ((self.n - 1) / 2) as i32;
        self.data[((x + h) as usize) * self.n + (y + h) as usize]
    }

    /// Value at centered coordinates (3D).
    pub fn at3(&self, x: i32, y: i32, z: i32) -> f64 {
        let h = ((self.n - 1) / 2) as i32;
        self.data[(((x + h) as usize) * self.n + (y + h) as usize) * self.n + (z + h) as usize]
    }
}

fn check_grid(grid: &RealGrid, n_res: u32, dims: usize) -> Result<()> {
    if grid.dims != dims {
        return Err(Error::data(format!(
            "expected a {dims}D grid, got {}D",
            grid.dims
        )));
    }
    if grid.n % 2 == 0 {
        return Err(Error::data(format!("grid size must be odd, got {}", grid.n)));
    }
    if (grid.n as u32) < n_res {
        return Err(Error::data(format!(
            "grid size {} is smaller than n_res {}",
            grid.n, n_res
        )));
    }
    if grid.data.len() != grid.n.pow(dims as u32) {
        return Err(Error::data("grid data length does not match its size".to_string()));
    }
    Ok(())
}

// In-place unitary FFT along every axis of a row-major complex hypercube.
// `inverse` selects the conjugate transform. Normalization is 1/sqrt(N) per
// axis, applied once at the end.
fn fft_all_axes(data: &mut [Complex64], n: usize, dims: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = data.len();
    let mut line = vec![Complex64::ZERO; n];
    for axis in 0..dims {
        // stride between consecutive elements along `axis`
        let stride = n.pow((dims - 1 - axis) as u32);
        let lines = total / n;
        for li in 0..lines {
            // decompose the line id into the base offset of this line
            let block = li / stride;
            let within = li % stride;
            let base = block * stride * n + within;
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[base + j * stride];
            }
            fft.process(&mut line);
            for (j, &v) in line.iter().enumerate() {
                data[base + j * stride] = v;
            }
        }
    }
    let scale = 1.0 / (n as f64).powf(dims as f64 / 2.0);
    for v in data.iter_mut() {
        *v *= scale;
    }
}

// Rotate a centered axis into FFT order (sample 0 first) or back.
fn shift_axes(data: &[Complex64], n: usize, dims: usize, to_fft_order: bool) -> Vec<Complex64> {
    let h = (n - 1) / 2;
    let total = data.len();
    let mut out = vec![Complex64::ZERO; total];
    let mut coords = vec![0usize; dims];
    for (i, &v) in data.iter().enumerate() {
        let mut rem = i;
        for d in (0..dims).rev() {
            coords[d] = rem % n;
            rem /= n;
        }
        let mut j = 0usize;
        for &c in coords.iter() {
            let mapped = if to_fft_order { (c + n - h) % n } else { (c + h) % n };
            j = j * n + mapped;
        }
        out[j] = v;
    }
    out
}

/// Unitary DFT of a real grid restricted to the frequencies of a ball.
///
/// The transform preserves the Euclidean norm, so restriction can only
/// shrink it: `‖coeffs‖ ≤ ‖grid‖`, with equality iff the grid is
/// band-limited to the ball.
pub fn grid_to_coeffs_3d(grid: &RealGrid, ball: &Arc<FrequencyBall3D>) -> Result<VolumeCoeffs> {
    check_grid(grid, ball.n_res(), 3)?;
    let n = grid.n;
    let centered: Vec<Complex64> = grid.data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut buf = shift_axes(&centered, n, 3, true);
    fft_all_axes(&mut buf, n, 3, false);
    let spectrum = shift_axes(&buf, n, 3, false);
    let h = ((n - 1) / 2) as i32;
    let values = ball
        .indices()
        .iter()
        .map(|&[k1, k2, k3]| {
            spectrum[(((k1 + h) as usize) * n + (k2 + h) as usize) * n + (k3 + h) as usize]
        })
        .collect();
    VolumeCoeffs::from_values(ball.clone(), values)
}

/// Unitary DFT of a real grid restricted to the frequencies of a disc.
pub fn grid_to_coeffs_2d(grid: &RealGrid, disc: &Arc<FrequencyDisc2D>) -> Result<ImageCoeffs> {
    check_grid(grid, disc.n_res(), 2)?;
    let n = grid.n;
    let centered: Vec<Complex64> = grid.data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut buf = shift_axes(&centered, n, 2, true);
    fft_all_axes(&mut buf, n, 2, false);
    let spectrum = shift_axes(&buf, n, 2, false);
    let h = ((n - 1) / 2) as i32;
    let values = disc
        .indices()
        .iter()
        .map(|&[k1, k2]| spectrum[((k1 + h) as usize) * n + (k2 + h) as usize])
        .collect();
    ImageCoeffs::from_values(disc.clone(), values)
}

/// Embeds volume coefficients at their frequencies and inverts the unitary
/// DFT, returning the real part.
///
/// Requires Hermitian symmetry to [`SYMMETRY_TOL`]; the round trip through
/// [`grid_to_coeffs_3d`] is then the identity on in-ball coefficients.
pub fn coeffs_to_grid_3d(coeffs: &VolumeCoeffs, n: usize) -> Result<RealGrid> {
    let defect = coeffs.symmetry_defect();
    if defect > SYMMETRY_TOL {
        return Err(Error::data(format!(
            "coefficients violate Hermitian symmetry (defect {defect:.3e})"
        )));
    }
    if n % 2 == 0 || (n as u32) < coeffs.ball.n_res() {
        return Err(Error::data(format!(
            "grid size {n} must be odd and at least n_res {}",
            coeffs.ball.n_res()
        )));
    }
    let h = ((n - 1) / 2) as i32;
    let mut spectrum = vec![Complex64::ZERO; n * n * n];
    for (i, &[k1, k2, k3]) in coeffs.ball.indices().iter().enumerate() {
        spectrum[(((k1 + h) as usize) * n + (k2 + h) as usize) * n + (k3 + h) as usize] =
            coeffs.values[i];
    }
    let mut buf = shift_axes(&spectrum, n, 3, true);
    fft_all_axes(&mut buf, n, 3, true);
    let centered = shift_axes(&buf, n, 3, false);
    Ok(RealGrid { n, dims: 3, data: centered.iter().map(|v| v.re).collect() })
}

/// 2D counterpart of [`coeffs_to_grid_3d`].
pub fn coeffs_to_grid_2d(coeffs: &ImageCoeffs, n: usize) -> Result<RealGrid> {
    let defect = coeffs.symmetry_defect();
    if defect > SYMMETRY_TOL {
        return Err(Error::data(format!(
            "coefficients violate Hermitian symmetry (defect {defect:.3e})"
        )));
    }
    if n % 2 == 0 || (n as u32) < coeffs.disc.n_res() {
        return Err(Error::data(format!(
            "grid size {n} must be odd and at least n_res {}",
            coeffs.disc.n_res()
        )));
    }
    let h = ((n - 1) / 2) as i32;
    let mut spectrum = vec![Complex64::ZERO; n * n];
    for (i, &[k1, k2]) in coeffs.disc.indices().iter().enumerate() {
        spectrum[((k1 + h) as usize) * n + (k2 + h) as usize] = coeffs.values[i];
    }
    let mut buf = shift_axes(&spectrum, n, 2, true);
    fft_all_axes(&mut buf, n, 2, true);
    let centered = shift_axes(&buf, n, 2, false);
    Ok(RealGrid { n, dims: 2, data: centered.iter().map(|v| v.re).collect() })
}
