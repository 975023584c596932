//! Per-element channel coefficients and reconfigurable element responses.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{End, Error, Result};
use crate::geometry::{directivity_angle_between, Vec3};
use crate::scalar::{wavelength_from_frequency, Real};

/// Carrier and path-loss constants shared by both hops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationParams<T> {
    lambda: T,
    beta0: T,
    gamma: T,
    p_t: T,
}

impl<T: Real> PropagationParams<T> {
    pub const DEFAULT_FREQUENCY_HZ: f64 = 5.8e9;

    pub fn new(lambda: T, beta0: T, gamma: T, p_t: T) -> Result<Self> {
        let finite = |v: T| v.is_finite();
        if !(lambda > T::zero() && finite(lambda)) {
            return Err(Error::invalid("propagation.wavelength", "must be positive and finite"));
        }
        if !(beta0 > T::zero() && finite(beta0)) {
            return Err(Error::invalid("propagation.beta0", "must be positive and finite"));
        }
        if !(gamma >= T::one() && finite(gamma)) {
            return Err(Error::invalid("propagation.gamma", "path-loss exponent must be >= 1"));
        }
        if !(p_t > T::zero() && finite(p_t)) {
            return Err(Error::invalid("propagation.p_t_watts", "must be positive and finite"));
        }
        Ok(Self { lambda, beta0, gamma, p_t })
    }

    /// Free space (`beta0 = 1`, `gamma = 2`) at 5.8 GHz with 1 W transmit power.
    pub fn free_space() -> Self {
        Self::free_space_at(T::lit(Self::DEFAULT_FREQUENCY_HZ))
    }

    pub fn free_space_at(frequency_hz: T) -> Self {
        Self {
            lambda: wavelength_from_frequency(frequency_hz),
            beta0: T::one(),
            gamma: T::lit(2.0),
            p_t: T::one(),
        }
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn beta0(&self) -> T {
        self.beta0
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn p_t(&self) -> T {
        self.p_t
    }

    pub fn with_p_t(mut self, p_t: T) -> Self {
        self.p_t = p_t;
        self
    }

    /// Path-loss amplitude `sqrt(beta0 cos(theta) / (4 pi d^gamma))`.
    ///
    /// A negative cosine (element behind the antenna boresight plane) gives
    /// zero gain.
    pub fn path_gain(&self, distance: T, directivity: T) -> T {
        let c = directivity.cos().max(T::zero());
        (self.beta0 * c / (T::lit(4.0) * T::PI() * distance.powf(self.gamma))).sqrt()
    }
}

/// Coefficient `beta e^{-j 2 pi d / lambda}` between one link end and one element.
///
/// The directivity angle is taken at `end_pos` between the ray to the world
/// origin (surface center) and the ray to the element.
pub fn channel_coefficient<T: Real>(
    end: End,
    end_pos: Vec3<T>,
    element_pos: Vec3<T>,
    element: usize,
    params: &PropagationParams<T>,
) -> Result<Complex<T>> {
    let d = (end_pos - element_pos).norm();
    if d == T::zero() {
        return Err(Error::ZeroDistance { end, element });
    }
    let theta = directivity_angle_between(end, end_pos, element_pos)?;
    let beta = params.path_gain(d, theta);
    Ok(Complex::from_polar(beta, -(T::TAU() * (d / params.lambda).fract())))
}

/// Reconfigurable response `R = alpha e^{-j phi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementResponse<T> {
    alpha: T,
    phi: T,
}

impl<T: Real> ElementResponse<T> {
    /// Lossless, zero-phase response; the metal plate uses it everywhere.
    pub fn unit() -> Self {
        Self { alpha: T::one(), phi: T::zero() }
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn value(&self) -> Complex<T> {
        Complex::from_polar(self.alpha, -self.phi)
    }
}

pub fn element_response<T: Real>(phi: T, alpha: T) -> Result<ElementResponse<T>> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::AmplitudeOutOfRange(alpha.as_f64()));
    }
    if !phi.is_finite() {
        return Err(Error::invalid("element.phi", "phase must be finite"));
    }
    Ok(ElementResponse { alpha, phi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantization {
    Continuous,
    Discrete { levels: usize },
}

/// Per-element responses in row-major element order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisConfiguration<T> {
    responses: Vec<ElementResponse<T>>,
    quantization: Quantization,
}

impl<T: Real> RisConfiguration<T> {
    /// All elements at `R = 1`.
    pub fn uniform(count: usize) -> Self {
        Self { responses: vec![ElementResponse::unit(); count], quantization: Quantization::Continuous }
    }

    pub fn continuous(responses: Vec<ElementResponse<T>>) -> Self {
        Self { responses, quantization: Quantization::Continuous }
    }

    /// Phase level `m` of `levels` maps to `phi = 2 pi m / levels`.
    /// `amplitudes`, when given, holds one `alpha` per level.
    pub fn from_levels(level_indices: &[usize], levels: usize, amplitudes: Option<&[T]>) -> Result<Self> {
        if levels < 2 {
            return Err(Error::invalid("levels", "need at least two phase levels"));
        }
        if let Some(a) = amplitudes {
            if a.len() != levels {
                return Err(Error::invalid("amplitude_table", format!("expected {levels} entries, got {}", a.len())));
            }
        }
        let responses = level_indices
            .iter()
            .map(|&m| {
                if m >= levels {
                    return Err(Error::invalid("level", format!("level {m} >= {levels}")));
                }
                let alpha = amplitudes.map_or(T::one(), |a| a[m]);
                element_response(level_phase(m, levels), alpha)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { responses, quantization: Quantization::Discrete { levels } })
    }

    pub fn responses(&self) -> &[ElementResponse<T>] {
        &self.responses
    }

    pub fn quantization(&self) -> Quantization {
        self.quantization
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Nearest level index of each phase when the configuration is discrete.
    pub fn level_indices(&self) -> Option<Vec<usize>> {
        match self.quantization {
            Quantization::Continuous => None,
            Quantization::Discrete { levels } => {
                Some(self.responses.iter().map(|r| nearest_level(r.phi, levels)).collect())
            }
        }
    }

    /// Multiplies every response by the common phasor `e^{-j shift}`.
    pub fn with_global_phase(&self, shift: T) -> Self {
        let responses = self
            .responses
            .iter()
            .map(|r| ElementResponse { alpha: r.alpha, phi: r.phi + shift })
            .collect();
        Self { responses, quantization: Quantization::Continuous }
    }
}

pub fn level_phase<T: Real>(m: usize, levels: usize) -> T {
    T::TAU() * T::count(m) / T::count(levels)
}

/// Index of the quantized level closest to `phi` on the circle.
pub fn nearest_level<T: Real>(phi: T, levels: usize) -> usize {
    let turns = phi.rem_euclid(T::TAU()) / T::TAU() * T::count(levels);
    let m = turns.round().to_usize().unwrap_or(0);
    m % levels
}

trait RemEuclid {
    fn rem_euclid(self, m: Self) -> Self;
}

impl<T: Real> RemEuclid for T {
    fn rem_euclid(self, m: T) -> T {
        let r = self % m;
        if r < T::zero() {
            r + m
        } else {
            r
        }
    }
}
