//! Coherent aggregation of element contributions and phase configuration.
//!
//! Each element contributes `h_n R_n f_n g_n`: the Tx-to-element channel,
//! the reconfigurable response, the scattering amplitude, and the
//! element-to-Rx channel. Received power is
//! `P_t lambda^2 / (4 pi) |sum|^2`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    channel_coefficient, element_response, level_phase, nearest_level, ElementResponse, PropagationParams,
    RisConfiguration,
};
use crate::error::{End, Error, Result};
use crate::geometry::{incident_scatter_angles, Scene};
use crate::scalar::Real;
use crate::scattering::{bsd, CellDims, RcsModelKind};
use crate::summation::{sum_complex, Summation};

/// Below this many elements, terms are evaluated on the calling thread.
const PARALLEL_MIN_ELEMENTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkModel<T> {
    pub scene: Scene<T>,
    pub params: PropagationParams<T>,
    pub model: RcsModelKind<T>,
    pub config: RisConfiguration<T>,
    #[serde(default)]
    pub summation: Summation,
}

impl<T: Real> LinkModel<T> {
    pub fn new(
        scene: Scene<T>,
        params: PropagationParams<T>,
        model: RcsModelKind<T>,
        config: RisConfiguration<T>,
    ) -> Result<Self> {
        let expected = scene.surface.element_count();
        if config.len() != expected {
            return Err(Error::ConfigurationLength { expected, got: config.len() });
        }
        scene.validate()?;
        Ok(Self { scene, params, model, config, summation: Summation::default() })
    }

    /// Metal plate: every element at `R = 1`.
    pub fn metal(scene: Scene<T>, params: PropagationParams<T>) -> Result<Self> {
        let n = scene.surface.element_count();
        Self::new(scene, params, RcsModelKind::Metal, RisConfiguration::uniform(n))
    }

    pub fn with_config(mut self, config: RisConfiguration<T>) -> Result<Self> {
        let expected = self.scene.surface.element_count();
        if config.len() != expected {
            return Err(Error::ConfigurationLength { expected, got: config.len() });
        }
        self.config = config;
        Ok(self)
    }

    pub fn with_summation(mut self, summation: Summation) -> Self {
        self.summation = summation;
        self
    }

    /// Configuration-independent factors `h_n f_n g_n` in element order.
    pub fn element_terms(&self) -> Result<Vec<Complex<T>>> {
        element_terms(&self.scene, &self.params, &self.model)
    }
}

/// `h_n f_n g_n` for every element, row-major.
pub fn element_terms<T: Real>(
    scene: &Scene<T>,
    params: &PropagationParams<T>,
    model: &RcsModelKind<T>,
) -> Result<Vec<Complex<T>>> {
    let dims = CellDims::from_surface(&scene.surface, params.lambda())?;
    let positions = scene.element_positions();
    let term = |n: usize| -> Result<Complex<T>> {
        let p = positions[n];
        let q = incident_scatter_angles(scene, n)?;
        let h = channel_coefficient(End::Tx, scene.tx_pos, p, n, params)?;
        let g = channel_coefficient(End::Rx, scene.rx_pos, p, n, params)?;
        let f = bsd(model, &q, &dims);
        let t = h * g * f;
        if t.re.is_finite() && t.im.is_finite() {
            Ok(t)
        } else {
            Err(Error::NonFinite { element: n, operation: "element term" })
        }
    };
    let n = positions.len();
    if n < PARALLEL_MIN_ELEMENTS {
        (0..n).map(term).collect()
    } else {
        // collect keeps index order, so the later reduction is deterministic
        (0..n).into_par_iter().with_min_len(64).map(term).collect()
    }
}

/// `sum_n R_n t_n` in element order.
pub fn combine<T: Real>(terms: &[Complex<T>], config: &RisConfiguration<T>, mode: Summation) -> Complex<T> {
    sum_complex(terms.iter().zip(config.responses()).map(|(t, r)| r.value() * t), mode)
}

pub fn received_signal<T: Real>(link: &LinkModel<T>) -> Result<Complex<T>> {
    let terms = link.element_terms()?;
    Ok(combine(&terms, &link.config, link.summation))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult<T> {
    /// Received power in watts.
    pub p_r: T,
    pub complex_sum: Complex<T>,
    pub per_element_terms: Option<Vec<Complex<T>>>,
}

impl<T: Real> PowerResult<T> {
    pub fn from_sum(params: &PropagationParams<T>, complex_sum: Complex<T>) -> Self {
        Self { p_r: power_from_sum(params, complex_sum), complex_sum, per_element_terms: None }
    }

    pub fn dbm(&self) -> T {
        watts_to_dbm(self.p_r)
    }
}

/// `P_t lambda^2 / (4 pi) |sum|^2`.
pub fn power_from_sum<T: Real>(params: &PropagationParams<T>, sum: Complex<T>) -> T {
    let lambda = params.lambda();
    params.p_t() * lambda * lambda / (T::lit(4.0) * T::PI()) * sum.norm_sqr()
}

pub fn watts_to_dbm<T: Real>(watts: T) -> T {
    T::lit(10.0) * (watts * T::lit(1000.0)).log10()
}

pub fn received_power<T: Real>(link: &LinkModel<T>) -> Result<PowerResult<T>> {
    let terms = link.element_terms()?;
    let sum = combine(&terms, &link.config, link.summation);
    Ok(PowerResult { per_element_terms: Some(terms), ..PowerResult::from_sum(&link.params, sum) })
}

/// Conjugate phase alignment: `phi_n = arg(t_n) mod 2 pi`, so every
/// `e^{-j phi_n} t_n` is real and non-negative.
pub fn continuous_phases<T: Real>(terms: &[Complex<T>]) -> RisConfiguration<T> {
    let responses = terms
        .iter()
        .map(|t| {
            let mut phi = t.arg();
            if phi < T::zero() {
                phi = phi + T::TAU();
            }
            element_response(phi, T::one()).unwrap_or_else(|_| ElementResponse::unit())
        })
        .collect();
    RisConfiguration::continuous(responses)
}

pub fn optimize_phases_continuous<T: Real>(link: &LinkModel<T>) -> Result<RisConfiguration<T>> {
    Ok(continuous_phases(&link.element_terms()?))
}

/// Settings for the greedy discrete optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSettings<T> {
    pub levels: usize,
    pub max_sweeps: usize,
    /// Optional `alpha` per phase level; all ones when absent.
    pub amplitudes: Option<Vec<T>>,
}

impl<T: Real> DiscreteSettings<T> {
    pub fn new(levels: usize, max_sweeps: usize) -> Self {
        Self { levels, max_sweeps, amplitudes: None }
    }

    fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::invalid("optimize.levels", "need at least two phase levels"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("optimize.max_sweeps", "must be positive"));
        }
        if let Some(a) = &self.amplitudes {
            if a.len() != self.levels {
                return Err(Error::invalid("optimize.amplitudes", "one amplitude per level required"));
            }
            if let Some(bad) = a.iter().find(|&&x| !(x >= T::zero() && x <= T::one())) {
                return Err(Error::AmplitudeOutOfRange(bad.as_f64()));
            }
        }
        Ok(())
    }

    fn phasor(&self, m: usize) -> Complex<T> {
        let alpha = self.amplitudes.as_ref().map_or(T::one(), |a| a[m]);
        Complex::from_polar(alpha, -level_phase::<T>(m, self.levels))
    }
}

impl<T: Real> Default for DiscreteSettings<T> {
    /// One-bit phase control, at most ten sweeps.
    fn default() -> Self {
        Self::new(2, 10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOutcome<T> {
    pub configuration: RisConfiguration<T>,
    pub levels: Vec<usize>,
    /// Quantized continuous solution the first descent started from.
    pub start_levels: Vec<usize>,
    /// `|sum|` at the start and after every completed sweep of the
    /// descent that produced the result.
    pub trace: Vec<T>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Rotations of the continuous optimum tried as descent seeds, per level step.
const SEED_ROTATIONS: usize = 8;

/// Greedy coordinate descent over quantized phase levels.
///
/// Starts from the nearest-level rounding of the continuous optimum and
/// sweeps elements in index order, moving each to the level that maximizes
/// `|sum|`. Stops after a sweep without changes or after `max_sweeps`.
///
/// The continuous optimum is only defined up to a common phase, and its
/// rounding depends on that choice, so the descent is also seeded from
/// [`SEED_ROTATIONS`] evenly spaced rotations within one level step; the
/// unrotated seed goes first and wins ties. If the all-zero-phase
/// configuration beats the result, the descent is rerun from there, so the
/// outcome is never worse than the unrotated start or uniform.
pub fn optimize_discrete_terms<T: Real>(
    terms: &[Complex<T>],
    settings: &DiscreteSettings<T>,
) -> Result<DiscreteOutcome<T>> {
    settings.validate()?;
    let continuous = continuous_phases(terms);
    let seed = |shift: T| -> Vec<usize> {
        continuous.responses().iter().map(|r| nearest_level(r.phi() + shift, settings.levels)).collect()
    };
    let start = seed(T::zero());
    let step = level_phase::<T>(1, settings.levels) / T::count(SEED_ROTATIONS);
    let mut best = coordinate_descent(terms, settings, start.clone());
    let mut tried = vec![start.clone()];
    for k in 1..SEED_ROTATIONS {
        let s = seed(step * T::count(k));
        if tried.contains(&s) {
            continue;
        }
        let alt = coordinate_descent(terms, settings, s.clone());
        tried.push(s);
        if alt.trace.last() > best.trace.last() {
            best = alt;
        }
    }

    let uniform = vec![0usize; terms.len()];
    if magnitude(terms, &uniform, settings) > *best.trace.last().expect("trace has start") {
        let alt = coordinate_descent(terms, settings, uniform);
        if alt.trace.last() > best.trace.last() {
            best = alt;
        }
    }
    let configuration = RisConfiguration::from_levels(&best.levels, settings.levels, settings.amplitudes.as_deref())?;
    Ok(DiscreteOutcome {
        configuration,
        levels: best.levels,
        start_levels: start,
        trace: best.trace,
        sweeps: best.sweeps,
        converged: best.converged,
    })
}

pub fn optimize_phases_discrete<T: Real>(link: &LinkModel<T>, settings: &DiscreteSettings<T>) -> Result<DiscreteOutcome<T>> {
    optimize_discrete_terms(&link.element_terms()?, settings)
}

struct Descent<T> {
    levels: Vec<usize>,
    trace: Vec<T>,
    sweeps: usize,
    converged: bool,
}

fn magnitude<T: Real>(terms: &[Complex<T>], levels: &[usize], settings: &DiscreteSettings<T>) -> T {
    sum_complex(terms.iter().zip(levels).map(|(t, &m)| settings.phasor(m) * t), Summation::Compensated).norm()
}

fn coordinate_descent<T: Real>(terms: &[Complex<T>], settings: &DiscreteSettings<T>, mut levels: Vec<usize>) -> Descent<T> {
    let phasors: Vec<Complex<T>> = (0..settings.levels).map(|m| settings.phasor(m)).collect();
    let scale: T = terms.iter().map(|t| t.norm()).sum();
    // improvements below accumulated rounding are not moves
    let slack = scale * T::epsilon() * T::lit(16.0);

    let mut trace = vec![magnitude(terms, &levels, settings)];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < settings.max_sweeps {
        let mut sum = sum_complex(terms.iter().zip(&levels).map(|(t, &m)| phasors[m] * t), Summation::Compensated);
        let mut changed = false;
        for (n, t) in terms.iter().enumerate() {
            let rest = sum - phasors[levels[n]] * t;
            let current = sum.norm();
            let (best_m, best_mag) = phasors
                .iter()
                .enumerate()
                .map(|(m, p)| (m, (rest + p * t).norm()))
                .fold((levels[n], current), |acc, cand| if cand.1 > acc.1 + slack { cand } else { acc });
            if best_m != levels[n] && best_mag > current + slack {
                levels[n] = best_m;
                sum = rest + phasors[best_m] * t;
                changed = true;
            }
        }
        sweeps += 1;
        trace.push(magnitude(terms, &levels, settings));
        if !changed {
            converged = true;
            break;
        }
    }
    Descent { levels, trace, sweeps, converged }
}

/// Exhaustive search over all `levels^n` discrete configurations.
///
/// Returns `None` when the search space exceeds `max_cases`.
pub fn exhaustive_discrete<T: Real>(
    terms: &[Complex<T>],
    settings: &DiscreteSettings<T>,
    max_cases: usize,
) -> Option<(Vec<usize>, T)> {
    let n = terms.len();
    let cases = settings.levels.checked_pow(u32::try_from(n).ok()?)?;
    if cases > max_cases {
        return None;
    }
    let mut levels = vec![0usize; n];
    let mut best = (levels.clone(), magnitude(terms, &levels, settings));
    for _ in 1..cases {
        for digit in levels.iter_mut() {
            *digit += 1;
            if *digit < settings.levels {
                break;
            }
            *digit = 0;
        }
        let mag = magnitude(terms, &levels, settings);
        if mag > best.1 {
            best = (levels.clone(), mag);
        }
    }
    Some(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SurfaceOrientation, SurfaceSpec, Vec3};
    use crate::scattering::DiffractionParams;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params() -> PropagationParams<f64> {
        PropagationParams::free_space()
    }

    fn scene(n: usize, tx: Vec3<f64>, rx: Vec3<f64>) -> Scene<f64> {
        let lambda = params().lambda();
        let spec = SurfaceSpec::new(n, n, lambda / 2.0, lambda / 2.0).unwrap();
        Scene::new(tx, rx, spec, SurfaceOrientation::identity()).unwrap()
    }

    #[test]
    fn single_element_is_product_of_factors() {
        let s = scene(1, Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 2.0));
        let link = LinkModel::metal(s, params()).unwrap();
        let y = received_signal(&link).unwrap();
        let lambda = params().lambda();
        let sigma = PI * lambda * lambda / 4.0;
        let beta = |d: f64| (1.0 / (4.0 * PI * d * d)).sqrt();
        assert_relative_eq!(y.norm(), beta(1.0) * beta(2.0) * sigma.sqrt(), max_relative = 1e-13);
        let phase = -2.0 * PI * 3.0 / lambda;
        let expected = Complex::from_polar(y.norm(), phase);
        assert_relative_eq!(y.re, expected.re, max_relative = 1e-9);
        assert_relative_eq!(y.im, expected.im, max_relative = 1e-9);
    }

    #[test]
    fn power_examples() {
        let p = PropagationParams::new(1.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(power_from_sum(&p, Complex::new(0.0, 0.0)), 0.0);
        assert_relative_eq!(power_from_sum(&p, Complex::new(0.6, 0.8)), 1.0 / (4.0 * PI), max_relative = 1e-15);
        let r = PowerResult::from_sum(&p, Complex::new(1.0, 0.0));
        assert_relative_eq!(r.dbm(), 10.0 * (1000.0 / (4.0 * PI)).log10(), max_relative = 1e-15);
    }

    #[test]
    fn common_phase_does_not_change_magnitude() {
        let s = scene(3, Vec3::new(-0.3, 0.1, 0.5), Vec3::new(0.4, 0.0, 0.6));
        let link = LinkModel::metal(s, params()).unwrap();
        let base = received_signal(&link).unwrap().norm();
        let shifted = link.clone().with_config(RisConfiguration::uniform(9).with_global_phase(1.234)).unwrap();
        assert_relative_eq!(received_signal(&shifted).unwrap().norm(), base, max_relative = 1e-13);
    }

    #[test]
    fn continuous_alignment_reaches_triangle_bound() {
        let s = scene(8, Vec3::new(-0.2, 0.3, 0.7), Vec3::new(0.5, -0.1, 0.4));
        let model = RcsModelKind::Ris(DiffractionParams::default());
        let link = LinkModel::new(s, params(), model, RisConfiguration::uniform(64)).unwrap();
        let terms = link.element_terms().unwrap();
        let best = link.clone().with_config(optimize_phases_continuous(&link).unwrap()).unwrap();
        let bound: f64 = terms.iter().map(|t| t.norm()).sum();
        assert_relative_eq!(received_signal(&best).unwrap().norm(), bound, max_relative = 1e-9);
    }

    #[test]
    fn opposed_pair_is_aligned() {
        let terms = [Complex::new(0.3, 0.0), Complex::new(-0.5, 0.0)];
        let cfg = continuous_phases(&terms);
        assert_relative_eq!(combine(&terms, &cfg, Summation::Naive).re, 0.8, max_relative = 1e-15);
        let one = [Complex::<f64>::from_polar(0.7, -2.0)];
        let s = combine(&one, &continuous_phases(&one), Summation::Naive);
        assert_relative_eq!(s.re, 0.7, max_relative = 1e-15);
        assert!(s.im.abs() < 1e-15);
    }

    #[test]
    fn discrete_fixed_point_and_monotone_trace() {
        let terms: Vec<Complex<f64>> = (0..16).map(|i| Complex::from_polar(1.0 + 0.1 * i as f64, 0.7 * i as f64)).collect();
        let settings = DiscreteSettings::new(4, 10);
        let out = optimize_discrete_terms(&terms, &settings).unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(out.converged);

        // restarting from the result changes nothing
        let again = coordinate_descent(&terms, &settings, out.levels.clone());
        assert_eq!(again.levels, out.levels);
        assert_eq!(again.sweeps, 1);
    }

    #[test]
    fn discrete_matches_exhaustive_on_small_problem() {
        let terms = [Complex::from_polar(1.0, 0.1), Complex::from_polar(0.9, 2.0), Complex::from_polar(0.4, -2.5), Complex::from_polar(0.7, 3.0)];
        let settings = DiscreteSettings::new(2, 10);
        let out = optimize_discrete_terms(&terms, &settings).unwrap();
        let (_, best) = exhaustive_discrete(&terms, &settings, 1 << 10).unwrap();
        assert_relative_eq!(*out.trace.last().unwrap(), best, max_relative = 1e-12);
    }

    #[test]
    fn discrete_never_below_uniform() {
        let terms = [Complex::from_polar(1.0, 0.0), Complex::from_polar(1.0, 1.6), Complex::from_polar(1.0, -1.6)];
        let settings = DiscreteSettings::new(2, 10);
        let out = optimize_discrete_terms(&terms, &settings).unwrap();
        let uniform = magnitude(&terms, &[0, 0, 0], &settings);
        assert!(*out.trace.last().unwrap() >= uniform);
    }

    #[test]
    fn discrete_settings_validation() {
        let terms = [Complex::new(1.0f64, 0.0)];
        assert!(optimize_discrete_terms(&terms, &DiscreteSettings::new(1, 5)).is_err());
        assert!(optimize_discrete_terms(&terms, &DiscreteSettings::new(2, 0)).is_err());
        let bad = DiscreteSettings { levels: 2, max_sweeps: 3, amplitudes: Some(vec![1.0]) };
        assert!(optimize_discrete_terms(&terms, &bad).is_err());
    }

    #[test]
    fn configuration_length_is_checked() {
        let s = scene(2, Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0));
        let r = LinkModel::new(s, params(), RcsModelKind::Metal, RisConfiguration::uniform(3));
        assert_eq!(r, Err(Error::ConfigurationLength { expected: 4, got: 3 }));
    }

    #[test]
    fn rotated_seeds_escape_a_one_bit_local_optimum() {
        // the unrotated rounding of these terms leads the descent to a uniform local optimum
        let terms: Vec<Complex<f64>> = [(1.38, 87.0), (1.92, -170.0), (1.33, 92.0), (1.79, -170.0)]
            .iter()
            .map(|&(m, a): &(f64, f64)| Complex::from_polar(m, a.to_radians()))
            .collect();
        let settings = DiscreteSettings::new(2, 10);
        let single = coordinate_descent(&terms, &settings, vec![0, 1, 1, 1]);
        assert!(single.levels.iter().all(|&m| m == single.levels[0]), "{:?}", single.levels);
        let out = optimize_discrete_terms(&terms, &settings).unwrap();
        let (best_levels, best) = exhaustive_discrete(&terms, &settings, 16).unwrap();
        assert!(*single.trace.last().unwrap() < 0.9 * best);
        assert_relative_eq!(*out.trace.last().unwrap(), best, max_relative = 1e-12);
        let complement: Vec<usize> = best_levels.iter().map(|m| 1 - m).collect();
        assert!(out.levels == best_levels || out.levels == complement);
    }
}
