//! The imaging operator: Fourier-slice projection, radial CTF filtering,
//! and their adjoints.
//!
//! A projection along rotation `R` is read off the volume's coefficients on
//! the rotated central plane: the image value at disc frequency `ω = (ω1,ω2)`
//! is the volume coefficient field evaluated at `Rᵀ(ω1,ω2,0)ᵀ` by trilinear
//! interpolation over the eight surrounding integer triples. Neighbors
//! outside the ball contribute zero. The implied matrix has at most eight
//! real entries in `[0,1]` per row with row sums at most one, which makes
//! the exact adjoint a cheap scatter with the same weights.
//!
//! The CTF is radially symmetric, so it commutes with slicing and is applied
//! as a real diagonal in image space after projection.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::freqbasis::{FrequencyBall3D, FrequencyDisc2D, ImageCoeffs, VolumeCoeffs};

/// Proper rotation in 3D, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Validates orthonormality and `det = +1` to 1e-12.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Rotation { m };
        let tol = 1e-12;
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = 0.0;
                for k in 0..3 {
                    dot += m[k][i] * m[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > tol {
                    return Err(Error::data(format!(
                        "matrix is not orthonormal: (mᵀm)[{i}][{j}] = {dot}"
                    )));
                }
            }
        }
        let det = r.det();
        if (det - 1.0).abs() > tol {
            return Err(Error::data(format!("matrix determinant {det} is not +1")));
        }
        Ok(r)
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Rotation by `angle` radians about the z axis.
    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation { m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]] }
    }

    /// `Rᵀ v`.
    #[inline]
    pub fn transpose_apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    /// The viewing axis: the volume direction integrated over, `Rᵀ e_z`.
    pub fn viewing_axis(&self) -> [f64; 3] {
        [self.m[2][0], self.m[2][1], self.m[2][2]]
    }
}

/// Microscope parameters of one contrast transfer function.
///
/// Lengths are kept in their customary units (defocus in µm, wavelength and
/// pixel size in Å, spherical aberration in mm) and converted to Å inside
/// [`ctf_value`]. `CtfParams::identity()` is the flat response `H ≡ 1`,
/// encoded as all-zero lengths; it stands in for "no CTF" in tests and
/// serializes unambiguously.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtfParams {
    pub defocus_z_um: f64,
    pub wavelength_a: f64,
    pub cs_mm: f64,
    pub alpha_ac: f64,
    pub pixel_size_a: f64,
}

impl CtfParams {
    pub fn new(
        defocus_z_um: f64,
        wavelength_a: f64,
        cs_mm: f64,
        alpha_ac: f64,
        pixel_size_a: f64,
    ) -> Result<Self> {
        if defocus_z_um <= 0.0 || wavelength_a <= 0.0 || cs_mm <= 0.0 || pixel_size_a <= 0.0 {
            return Err(Error::config(
                "CTF lengths (defocus, wavelength, Cs, pixel size) must be strictly positive"
                    .to_string(),
            ));
        }
        if !(0.0..1.0).contains(&alpha_ac) {
            return Err(Error::config(format!(
                "amplitude contrast must lie in [0,1), got {alpha_ac}"
            )));
        }
        Ok(CtfParams { defocus_z_um, wavelength_a, cs_mm, alpha_ac, pixel_size_a })
    }

    /// The flat response `H ≡ 1`.
    pub fn identity() -> Self {
        CtfParams {
            defocus_z_um: 0.0,
            wavelength_a: 0.0,
            cs_mm: 0.0,
            alpha_ac: 0.0,
            pixel_size_a: 0.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.defocus_z_um == 0.0
            && self.wavelength_a == 0.0
            && self.cs_mm == 0.0
            && self.pixel_size_a == 0.0
    }
}

/// Radial CTF value at spatial frequency `s` (Å⁻¹):
/// `H(s) = -sqrt(1-α²)·sin(χ(s)) - α·cos(χ(s))` with phase
/// `χ(s) = π λ z s² - (π/2) Cs λ³ s⁴`.
pub fn ctf_value(params: &CtfParams, s: f64) -> f64 {
    debug_assert!(s >= 0.0);
    if params.is_identity() {
        return 1.0;
    }
    let z = params.defocus_z_um * 1.0e4; // µm → Å
    let cs = params.cs_mm * 1.0e7; // mm → Å
    let lambda = params.wavelength_a;
    let s2 = s * s;
    let chi = std::f64::consts::PI * lambda * z * s2
        - std::f64::consts::FRAC_PI_2 * cs * lambda.powi(3) * s2 * s2;
    let alpha = params.alpha_ac;
    -(1.0 - alpha * alpha).sqrt() * chi.sin() - alpha * chi.cos()
}

/// One image's acquisition geometry: a rotation plus an index into the
/// dataset's CTF bank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagingOperator {
    pub rotation: Rotation,
    pub ctf_index: usize,
}

/// Slice of the volume coefficient field on the rotated central plane.
pub fn slice_project(vol: &VolumeCoeffs, r: &Rotation) -> Result<ImageCoeffs> {
    let disc = Arc::new(disc_for_ball(&vol.ball)?);
    let stencil = SliceStencil::build(r, &vol.ball, &disc);
    Ok(ImageCoeffs { disc, values: stencil.apply(&vol.values) })
}

/// Exact transpose scatter of [`slice_project`].
pub fn slice_project_adjoint(
    img: &ImageCoeffs,
    r: &Rotation,
    ball: &Arc<FrequencyBall3D>,
) -> Result<VolumeCoeffs> {
    if img.disc.n_res() != ball.n_res() {
        return Err(Error::data(format!(
            "disc n_res {} does not match ball n_res {}",
            img.disc.n_res(),
            ball.n_res()
        )));
    }
    let stencil = SliceStencil::build(r, ball, &img.disc);
    Ok(VolumeCoeffs { ball: ball.clone(), values: stencil.apply_adjoint(&img.values, ball.len()) })
}

fn disc_for_ball(ball: &FrequencyBall3D) -> Result<FrequencyDisc2D> {
    crate::freqbasis::build_disc2(ball.n_res())
}

/// Multiplies each coefficient at integer frequency `k` by the CTF at
/// `s = ‖k‖ / (n_ref · pixel_size)`; a real diagonal, hence self-adjoint.
pub fn apply_ctf(img: &ImageCoeffs, params: &CtfParams, n_ref: u32) -> ImageCoeffs {
    let diag = ctf_diagonal(&img.disc, params, n_ref);
    let values = img
        .values
        .iter()
        .zip(&diag)
        .map(|(v, &h)| v * h)
        .collect();
    ImageCoeffs { disc: img.disc.clone(), values }
}

/// CTF sampled on every disc frequency.
pub fn ctf_diagonal(disc: &FrequencyDisc2D, params: &CtfParams, n_ref: u32) -> Vec<f64> {
    disc.indices()
        .iter()
        .map(|&[k1, k2]| {
            let knorm = ((k1 as f64).powi(2) + (k2 as f64).powi(2)).sqrt();
            let s = if params.is_identity() {
                0.0
            } else {
                knorm / (n_ref as f64 * params.pixel_size_a)
            };
            ctf_value(params, s)
        })
        .collect()
}

/// Forward imaging: CTF after slicing (`I = T₂ P v`, equivalent to slicing
/// the CTF-filtered volume by radial symmetry).
pub fn apply_forward(
    vol: &VolumeCoeffs,
    op: &ImagingOperator,
    bank: &[CtfParams],
    n_ref: u32,
) -> Result<ImageCoeffs> {
    let params = bank
        .get(op.ctf_index)
        .ok_or_else(|| Error::data(format!("CTF index {} out of range", op.ctf_index)))?;
    let projected = slice_project(vol, &op.rotation)?;
    Ok(apply_ctf(&projected, params, n_ref))
}

/// Exact adjoint of [`apply_forward`]: CTF (self-adjoint) then slice scatter.
pub fn apply_adjoint(
    img: &ImageCoeffs,
    op: &ImagingOperator,
    bank: &[CtfParams],
    n_ref: u32,
    ball: &Arc<FrequencyBall3D>,
) -> Result<VolumeCoeffs> {
    let params = bank
        .get(op.ctf_index)
        .ok_or_else(|| Error::data(format!("CTF index {} out of range", op.ctf_index)))?;
    let filtered = apply_ctf(img, params, n_ref);
    slice_project_adjoint(&filtered, &op.rotation, ball)
}

/// Precomputed sparse rows of the slice-projection matrix for one rotation:
/// row `i` holds the (volume index, weight) pairs of disc frequency `i`.
#[derive(Debug, Clone)]
pub struct SliceStencil {
    rows: Vec<Vec<(u32, f64)>>,
}

impl SliceStencil {
    pub fn build(r: &Rotation, ball: &FrequencyBall3D, disc: &FrequencyDisc2D) -> Self {
        let rows = disc
            .indices()
            .iter()
            .map(|&[w1, w2]| {
                let point = r.transpose_apply([w1 as f64, w2 as f64, 0.0]);
                let base = point.map(|c| c.floor());
                let frac = [point[0] - base[0], point[1] - base[1], point[2] - base[2]];
                let mut row = Vec::with_capacity(8);
                for corner in 0..8u32 {
                    let mut weight = 1.0;
                    let mut k = [0i32; 3];
                    for d in 0..3 {
                        let up = (corner >> d) & 1 == 1;
                        weight *= if up { frac[d] } else { 1.0 - frac[d] };
                        k[d] = base[d] as i32 + if up { 1 } else { 0 };
                    }
                    if weight == 0.0 {
                        continue;
                    }
                    if let Some(pos) = ball.position(k) {
                        row.push((pos as u32, weight));
                    }
                }
                row
            })
            .collect();
        SliceStencil { rows }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(u32, f64)>] {
        &self.rows
    }

    /// Gather: image values from volume values.
    pub fn apply(&self, vol: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(idx, w)| vol[idx as usize] * w)
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// Scatter: the exact transpose of [`SliceStencil::apply`].
    pub fn apply_adjoint(&self, img: &[Complex64], p: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; p];
        for (row, &v) in self.rows.iter().zip(img) {
            for &(idx, w) in row {
                out[idx as usize] += v * w;
            }
        }
        out
    }
}
