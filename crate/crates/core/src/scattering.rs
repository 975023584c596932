//! Element-level radar cross sections.
//!
//! Three models are available through [`RcsModelKind`]: the physical-optics
//! metal cell, the RIS element (metal cell times an edge-diffraction factor),
//! and the normalized `cos^2 theta_i cos^2 theta_s` unit pattern used as a
//! comparison baseline. The scattering amplitude fed into the link budget is
//! the square root of the cross section.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AngleQuad, SurfaceSpec};
use crate::scalar::Real;

/// Cell footprint together with the carrier wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellDims<T> {
    d_v: T,
    d_h: T,
    lambda: T,
    k: T,
}

impl<T: Real> CellDims<T> {
    pub fn new(d_v: T, d_h: T, lambda: T) -> Result<Self> {
        for (field, v) in [("cell.d_v", d_v), ("cell.d_h", d_h), ("wavelength", lambda)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::invalid(field, "must be positive and finite"));
            }
        }
        Ok(Self { d_v, d_h, lambda, k: T::TAU() / lambda })
    }

    pub fn from_surface(spec: &SurfaceSpec<T>, lambda: T) -> Result<Self> {
        Self::new(spec.d_v(), spec.d_h(), lambda)
    }

    pub fn d_v(&self) -> T {
        self.d_v
    }

    pub fn d_h(&self) -> T {
        self.d_h
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Wavenumber `2 pi / lambda`.
    pub fn k(&self) -> T {
        self.k
    }

    /// Cells larger than a wavelength are outside the regime the element
    /// models were written for. Evaluation still proceeds.
    pub fn is_sub_wavelength(&self) -> bool {
        self.d_v <= self.lambda && self.d_h <= self.lambda
    }

    /// `4 pi (d_v d_h / lambda)^2`, the boresight cross section.
    pub fn peak_rcs(&self) -> T {
        let a = self.d_v * self.d_h / self.lambda;
        T::lit(4.0) * T::PI() * a * a
    }
}

/// Edge-diffraction loss factor `mu`, restricted to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffractionParams<T> {
    mu: T,
}

impl<T: Real> DiffractionParams<T> {
    pub const DEFAULT_MU: f64 = 0.2;

    pub fn new(mu: T) -> Result<Self> {
        if mu >= T::zero() && mu <= T::one() {
            Ok(Self { mu })
        } else {
            Err(Error::invalid("diffraction.mu", format!("{} is outside [0, 1]", mu.as_f64())))
        }
    }

    pub fn mu(&self) -> T {
        self.mu
    }
}

impl<T: Real> Default for DiffractionParams<T> {
    fn default() -> Self {
        Self { mu: T::lit(Self::DEFAULT_MU) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RcsModelKind<T> {
    /// Physical-optics metal cell.
    Metal,
    /// Metal cell scaled by the edge-diffraction factor.
    Ris(DiffractionParams<T>),
    /// Dimensionless `cos^2 theta_i cos^2 theta_s` unit pattern.
    TangCosine,
}

/// `sin(x) / x` with a Taylor branch around the removable singularity.
#[inline]
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() <= T::lit(1e-4) {
        T::one() - x * x / T::lit(6.0)
    } else {
        x.sin() / x
    }
}

/// Phase-mismatch arguments `(X, Y)` of the cell's array factor.
pub fn xy_arguments<T: Real>(q: &AngleQuad<T>, dims: &CellDims<T>) -> (T, T) {
    let (si, ss) = (q.theta_i.sin(), q.theta_s.sin());
    let (spi, cpi) = q.phi_i.sin_cos();
    let (sps, cps) = q.phi_s.sin_cos();
    let x = T::PI() * dims.d_v / dims.lambda * (ss * cps + si * cpi);
    let y = T::PI() * dims.d_h / dims.lambda * (ss * sps + si * spi);
    (x, y)
}

/// Polarization-dependent angular factor
/// `cos^2 theta_i (cos^2 theta_s cos^2 phi_s + sin^2 phi_s)`.
fn angular_factor<T: Real>(q: &AngleQuad<T>) -> T {
    let ci = q.theta_i.cos();
    let cs = q.theta_s.cos();
    let (sps, cps) = q.phi_s.sin_cos();
    ci * ci * (cs * cs * cps * cps + sps * sps)
}

/// Bistatic cross section of one metal cell, in m^2.
pub fn rcs_metal_cell<T: Real>(q: &AngleQuad<T>, dims: &CellDims<T>) -> T {
    let (x, y) = xy_arguments(q, dims);
    let (sx, sy) = (sinc(x), sinc(y));
    dims.peak_rcs() * angular_factor(q) * sx * sx * sy * sy
}

/// Edge-diffraction factor, bounded in `[1 - mu, 1 + mu]`.
///
/// Only the `d_v` pitch enters the cosine term.
pub fn diffraction_factor<T: Real>(q: &AngleQuad<T>, dims: &CellDims<T>, p: &DiffractionParams<T>) -> T {
    let half = T::lit(0.5);
    let elevation = ((q.theta_i + q.theta_s) * half).sin();
    let phase = dims.k * dims.d_v * (q.theta_i.sin() + q.theta_s.sin()) * half;
    T::one() - p.mu * elevation * phase.cos()
}

/// Cross section of one RIS element, in m^2.
pub fn rcs_ris_cell<T: Real>(q: &AngleQuad<T>, dims: &CellDims<T>, p: &DiffractionParams<T>) -> T {
    rcs_metal_cell(q, dims) * diffraction_factor(q, dims, p)
}

/// Normalized comparison pattern `cos^2 theta_i cos^2 theta_s`.
pub fn rcs_tang_cell<T: Real>(q: &AngleQuad<T>) -> T {
    let ci = q.theta_i.cos();
    let cs = q.theta_s.cos();
    ci * ci * cs * cs
}

pub fn rcs<T: Real>(model: &RcsModelKind<T>, q: &AngleQuad<T>, dims: &CellDims<T>) -> T {
    match model {
        RcsModelKind::Metal => rcs_metal_cell(q, dims),
        RcsModelKind::Ris(p) => rcs_ris_cell(q, dims, p),
        RcsModelKind::TangCosine => rcs_tang_cell(q),
    }
}

/// Scattering amplitude `sqrt(sigma)` of the selected model.
///
/// Rounding can leave a cross section a few ulps below zero at exact sinc
/// nulls; those are returned as zero.
pub fn bsd<T: Real>(model: &RcsModelKind<T>, q: &AngleQuad<T>, dims: &CellDims<T>) -> T {
    rcs(model, q, dims).max(T::zero()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn half_wave(lambda: f64) -> CellDims<f64> {
        CellDims::new(lambda / 2.0, lambda / 2.0, lambda).unwrap()
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0f64), 1.0);
        assert_abs_diff_eq!(sinc(PI), 0.0, epsilon = 1e-15);
        assert_relative_eq!(sinc(1e-5f64), 0.999_999_999_983_333_3, max_relative = 1e-16);
        // branch boundary is continuous
        assert_relative_eq!(sinc(1.0000001e-4f64), sinc(1e-4f64), max_relative = 1e-14);
        assert_eq!(sinc(1.0f32), 1.0f32.sin());
    }

    #[test]
    fn sinc_lower_bound() {
        let min = (0..200_000).map(|i| sinc(i as f64 * 1e-4)).fold(f64::INFINITY, f64::min);
        assert!(min >= -0.217_234);
        assert!(min < -0.2172);
    }

    #[test]
    fn xy_examples() {
        let d = half_wave(1.0);
        assert_eq!(xy_arguments(&AngleQuad::boresight(), &d), (0.0, 0.0));

        let t = PI / 6.0;
        let (x, _) = xy_arguments(&AngleQuad::new(t, PI, t, 0.0), &d);
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-15);

        let (x, y) = xy_arguments(&AngleQuad::new(0.0, 0.0, t, 0.0), &d);
        assert_abs_diff_eq!(x, FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn metal_boresight_value() {
        let lambda = 0.0517;
        let d = half_wave(lambda);
        let s = rcs_metal_cell(&AngleQuad::boresight(), &d);
        assert_relative_eq!(s, PI * lambda * lambda / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn metal_oblique_incidence() {
        // X = -(pi/2) sin 60, sigma / lambda^2 evaluated in extended precision
        let lambda = 2.0;
        let q = AngleQuad::new(PI / 3.0, PI, 0.0, 0.0);
        let s = rcs_metal_cell(&q, &half_wave(lambda));
        assert_relative_eq!(s / (lambda * lambda), 0.101_473_170_299_814_43, max_relative = 1e-13);
    }

    #[test]
    fn cross_polar_azimuth_factor() {
        let d = half_wave(1.0);
        for ts in [0.1, 0.7, 1.2] {
            let q = AngleQuad::new(0.0, 0.0, ts, FRAC_PI_2);
            assert_abs_diff_eq!(angular_factor(&q), 1.0, epsilon = 1e-15);
            let (_, y) = xy_arguments(&q, &d);
            let sy = sinc(y);
            assert_relative_eq!(rcs_metal_cell(&q, &d), d.peak_rcs() * sy * sy, max_relative = 1e-14);
        }
    }

    #[test]
    fn diffraction_examples() {
        let d = half_wave(1.0);
        let p = DiffractionParams::new(0.3).unwrap();
        assert_eq!(diffraction_factor(&AngleQuad::boresight(), &d, &p), 1.0);
        let zero = DiffractionParams::new(0.0).unwrap();
        assert_eq!(diffraction_factor(&AngleQuad::new(0.3, 1.0, 1.1, -2.0), &d, &zero), 1.0);
        let grazing = AngleQuad::new(FRAC_PI_2, 0.0, FRAC_PI_2, 0.0);
        assert_relative_eq!(diffraction_factor(&grazing, &d, &p), 1.3, max_relative = 1e-15);
    }

    #[test]
    fn ris_examples() {
        let lambda = 1.0;
        let d = half_wave(lambda);
        let p = DiffractionParams::new(0.5).unwrap();
        assert_eq!(rcs_ris_cell(&AngleQuad::boresight(), &d, &p), rcs_metal_cell(&AngleQuad::boresight(), &d));

        let q = AngleQuad::new(FRAC_PI_4, PI, FRAC_PI_4, 0.0);
        assert_relative_eq!(diffraction_factor(&q, &d, &p), 1.214_147_241_687_609_7, max_relative = 1e-14);
        assert_relative_eq!(rcs_ris_cell(&q, &d, &p), 0.238_397_253_428_881_6, max_relative = 1e-13);

        let zero = DiffractionParams::new(0.0).unwrap();
        assert_eq!(rcs_ris_cell(&q, &d, &zero), rcs_metal_cell(&q, &d));
    }

    #[test]
    fn tang_examples() {
        assert_eq!(rcs_tang_cell(&AngleQuad::<f64>::boresight()), 1.0);
        let q = AngleQuad::new(PI / 3.0, 0.0, PI / 6.0, 0.0);
        assert_relative_eq!(rcs_tang_cell(&q), 0.1875, max_relative = 1e-14);
        let grazing = AngleQuad::new(FRAC_PI_2 - 1e-9, 0.0, 0.0, 0.0);
        assert!(rcs_tang_cell(&grazing) < 1e-17);
    }

    #[test]
    fn bsd_examples() {
        let lambda = 0.3;
        let d = half_wave(lambda);
        assert_relative_eq!(
            bsd(&RcsModelKind::Metal, &AngleQuad::boresight(), &d),
            (PI * lambda * lambda / 4.0).sqrt(),
            max_relative = 1e-14
        );
        // X = pi at theta_s = 90 deg, phi_s = 0 with full-wavelength cells
        let full = CellDims::new(lambda, lambda, lambda).unwrap();
        let null = AngleQuad::new(0.0, 0.0, FRAC_PI_2, 0.0);
        assert!(bsd(&RcsModelKind::Metal, &null, &full) < 1e-9);
        let q = AngleQuad::new(PI / 3.0, 0.0, PI / 6.0, 0.0);
        assert_relative_eq!(bsd(&RcsModelKind::TangCosine, &q, &d), 0.1875f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn parameter_validation() {
        assert!(DiffractionParams::new(1.5).is_err());
        assert!(DiffractionParams::new(-0.1).is_err());
        assert!(CellDims::new(0.1, 0.0, 1.0).is_err());
        let d = CellDims::new(0.1, 0.1, 0.2).unwrap();
        assert_relative_eq!(d.k() * d.lambda(), 2.0 * PI, max_relative = 1e-15);
        assert!(d.is_sub_wavelength());
        assert!(!CellDims::new(0.3, 0.1, 0.2).unwrap().is_sub_wavelength());
    }

    #[test]
    fn area_squared_scaling() {
        let d1 = CellDims::new(0.01, 0.02, 0.05).unwrap();
        let d2 = CellDims::new(0.02, 0.04, 0.05).unwrap();
        let b = AngleQuad::boresight();
        assert_relative_eq!(rcs_metal_cell(&b, &d2), 16.0 * rcs_metal_cell(&b, &d1), max_relative = 1e-12);
    }
}
