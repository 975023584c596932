//! Distance and zenith sweeps comparing a configured RIS with a rotated
//! metal plate.
//!
//! Transmitter and receiver are always placed symmetrically: equal distance
//! from the surface center, equal zenith angle, transmitter at azimuth `pi`
//! and receiver at azimuth `0` (both in the world `xOz` plane). The RIS stays
//! flat on `xOy`; only the metal plate is rotated.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{PropagationParams, RisConfiguration};
use crate::error::{Error, Result};
use crate::geometry::{specular_orientation, Scene, SurfaceOrientation, SurfaceSpec, Vec3};
use crate::link::{
    combine, continuous_phases, element_terms, optimize_discrete_terms, power_from_sum, watts_to_dbm, DiscreteSettings,
    LinkModel,
};
use crate::scalar::Real;
use crate::scattering::{DiffractionParams, RcsModelKind};
use crate::summation::Summation;

/// How the surface is placed and configured at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ConfigPolicy {
    /// Plate turned to the specular orientation, `R_n = 1`.
    MetalRotated,
    /// Plate left flat on `xOy`, `R_n = 1`.
    MetalFlat,
    /// Flat surface, conjugate phase alignment.
    RisOptimizedContinuous,
    /// Flat surface, greedy quantized phases.
    RisOptimizedDiscrete { levels: usize },
    /// Flat surface, all phases zero.
    RisUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<T> {
    pub label: String,
    pub model: RcsModelKind<T>,
    pub policy: ConfigPolicy,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(label: impl Into<String>, model: RcsModelKind<T>, policy: ConfigPolicy) -> Self {
        Self { label: label.into(), model, policy }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepKind<T> {
    /// Joint Tx/Rx distance varied at a fixed zenith (radians).
    Distance { zenith: T, d_min: T, d_max: T, n_steps: usize },
    /// Joint Tx/Rx zenith (radians) varied at a fixed distance.
    Angle { distance: T, z_min: T, z_max: T, n_steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan<T> {
    pub kind: SweepKind<T>,
    pub models: Vec<ModelSpec<T>>,
    /// Sweep cap for discrete policies.
    pub max_sweeps: usize,
    pub summation: Summation,
}

impl<T: Real> SweepPlan<T> {
    pub fn new(kind: SweepKind<T>, models: Vec<ModelSpec<T>>) -> Self {
        Self { kind, models, max_sweeps: 10, summation: Summation::Naive }
    }

    pub fn validate(&self) -> Result<()> {
        let (steps, first, last) = match self.kind {
            SweepKind::Distance { zenith, d_min, d_max, n_steps } => {
                if !(d_min > T::zero()) {
                    return Err(Error::invalid("sweep.d_min", "must be positive"));
                }
                check_zenith("sweep.zenith", zenith)?;
                (n_steps, d_min, d_max)
            }
            SweepKind::Angle { distance, z_min, z_max, n_steps } => {
                if !(distance > T::zero()) {
                    return Err(Error::invalid("sweep.distance", "must be positive"));
                }
                check_zenith("sweep.z_min", z_min)?;
                check_zenith("sweep.z_max", z_max)?;
                (n_steps, z_min, z_max)
            }
        };
        if steps < 2 {
            return Err(Error::invalid("sweep.n_steps", "need at least two points"));
        }
        if !(last > first) {
            return Err(Error::invalid("sweep", "range end must exceed range start"));
        }
        if self.models.is_empty() {
            return Err(Error::invalid("sweep.models", "at least one model required"));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].iter().any(|o| o.label == m.label) {
                return Err(Error::invalid("sweep.models", format!("duplicate label {:?}", m.label)));
            }
            if let ConfigPolicy::RisOptimizedDiscrete { levels } = m.policy {
                if levels < 2 {
                    return Err(Error::invalid("sweep.models.levels", "need at least two phase levels"));
                }
            }
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("sweep.max_sweeps", "must be positive"));
        }
        Ok(())
    }

    /// Sweep abscissae in ascending order.
    pub fn x_values(&self) -> Vec<T> {
        match self.kind {
            SweepKind::Distance { d_min, d_max, n_steps, .. } => linspace(d_min, d_max, n_steps),
            SweepKind::Angle { z_min, z_max, n_steps, .. } => linspace(z_min, z_max, n_steps),
        }
    }
}

fn check_zenith<T: Real>(field: &'static str, z: T) -> Result<()> {
    if z >= T::zero() && z < T::FRAC_PI_2() {
        Ok(())
    } else {
        Err(Error::invalid(field, "zenith must lie in [0, 90) degrees"))
    }
}

pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::count(n - 1);
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * T::count(i) }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<T> {
    pub x: T,
    /// Received power in watts, one entry per plan model.
    pub p_r: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata<T> {
    pub surface: SurfaceSpec<T>,
    pub params: PropagationParams<T>,
    pub plan: SweepPlan<T>,
    pub far_field_boundary_m: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub labels: Vec<String>,
    pub rows: Vec<SweepRow<T>>,
    pub metadata: SweepMetadata<T>,
}

impl<T: Real> SweepResult<T> {
    pub fn column(&self, label: &str) -> Option<Vec<T>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.iter().map(|r| r.p_r[j]).collect())
    }

    pub fn column_dbm(&self, label: &str) -> Option<Vec<T>> {
        Some(self.column(label)?.into_iter().map(watts_to_dbm).collect())
    }

    pub fn xs(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.x).collect()
    }

    /// CSV with a `#`-prefixed comment block, a header row
    /// `x,p_<label>_watts,p_<label>_dbm,...`, and one line per sweep point.
    ///
    /// Angle sweeps report `x` in degrees, distance sweeps in meters.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let angle = matches!(self.metadata.plan.kind, SweepKind::Angle { .. });
        let _ = writeln!(out, "# x_unit = {}", if angle { "deg" } else { "m" });
        out.push('x');
        for l in &self.labels {
            let _ = write!(out, ",p_{l}_watts,p_{l}_dbm");
        }
        out.push('\n');
        for row in &self.rows {
            let x = if angle { row.x.to_degrees() } else { row.x };
            let _ = write!(out, "{:.9}", x.as_f64());
            for &p in &row.p_r {
                let _ = write!(out, ",{:.12e},{:.9}", p.as_f64(), watts_to_dbm(p).as_f64());
            }
            out.push('\n');
        }
        out
    }
}

/// Near-field/far-field border `2 n_v n_h d_v d_h / lambda`.
pub fn far_field_boundary<T: Real>(spec: &SurfaceSpec<T>, lambda: T) -> T {
    T::lit(2.0) * T::count(spec.element_count()) * spec.d_v() * spec.d_h() / lambda
}

/// Symmetric placement: Tx at azimuth `pi`, Rx at azimuth `0`.
pub fn symmetric_positions<T: Real>(distance: T, zenith: T) -> (Vec3<T>, Vec3<T>) {
    (Vec3::from_spherical(distance, zenith, T::PI()), Vec3::from_spherical(distance, zenith, T::zero()))
}

/// Received power of one model/policy pair for the given end positions.
pub fn evaluate_policy<T: Real>(
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
    spec: &ModelSpec<T>,
    tx: Vec3<T>,
    rx: Vec3<T>,
    max_sweeps: usize,
    summation: Summation,
) -> Result<T> {
    let orientation = match spec.policy {
        ConfigPolicy::MetalRotated => specular_orientation(tx, rx)?,
        _ => SurfaceOrientation::identity(),
    };
    let scene = Scene::new(tx, rx, *surface, orientation)?;
    let terms = element_terms(&scene, params, &spec.model)?;
    let config = match spec.policy {
        ConfigPolicy::MetalRotated | ConfigPolicy::MetalFlat | ConfigPolicy::RisUniform => {
            RisConfiguration::uniform(terms.len())
        }
        ConfigPolicy::RisOptimizedContinuous => continuous_phases(&terms),
        ConfigPolicy::RisOptimizedDiscrete { levels } => {
            optimize_discrete_terms(&terms, &DiscreteSettings::new(levels, max_sweeps))?.configuration
        }
    };
    Ok(power_from_sum(params, combine(&terms, &config, summation)))
}

fn run_points<T: Real>(
    plan: &SweepPlan<T>,
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
    placement: impl Fn(T) -> (Vec3<T>, Vec3<T>) + Sync,
) -> Result<SweepResult<T>> {
    plan.validate()?;
    let xs = plan.x_values();
    let rows = xs
        .par_iter()
        .enumerate()
        .map(|(index, &x)| {
            let (tx, rx) = placement(x);
            let p_r = plan
                .models
                .iter()
                .map(|m| evaluate_policy(surface, params, m, tx, rx, plan.max_sweeps, plan.summation))
                .collect::<Result<Vec<T>>>()
                .map_err(|e| Error::AtSweepPoint { index, source: Box::new(e) })?;
            Ok(SweepRow { x, p_r })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        labels: plan.models.iter().map(|m| m.label.clone()).collect(),
        rows,
        metadata: SweepMetadata {
            surface: *surface,
            params: *params,
            plan: plan.clone(),
            far_field_boundary_m: far_field_boundary(surface, params.lambda()),
        },
    })
}

/// Sweep over the joint Tx/Rx distance at the plan's fixed zenith.
pub fn run_distance_sweep<T: Real>(
    plan: &SweepPlan<T>,
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
) -> Result<SweepResult<T>> {
    let SweepKind::Distance { zenith, .. } = plan.kind else {
        return Err(Error::invalid("sweep.kind", "expected a distance sweep"));
    };
    run_points(plan, surface, params, |d| symmetric_positions(d, zenith))
}

/// Sweep over the joint Tx/Rx zenith at the plan's fixed distance.
pub fn run_angle_sweep<T: Real>(
    plan: &SweepPlan<T>,
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
) -> Result<SweepResult<T>> {
    let SweepKind::Angle { distance, .. } = plan.kind else {
        return Err(Error::invalid("sweep.kind", "expected an angle sweep"));
    };
    run_points(plan, surface, params, |z| symmetric_positions(distance, z))
}

pub fn run_sweep<T: Real>(
    plan: &SweepPlan<T>,
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
) -> Result<SweepResult<T>> {
    match plan.kind {
        SweepKind::Distance { .. } => run_distance_sweep(plan, surface, params),
        SweepKind::Angle { .. } => run_angle_sweep(plan, surface, params),
    }
}

/// Outcome of the exhaustive plate-orientation search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationCheck<T> {
    pub best_orientation: SurfaceOrientation<T>,
    pub best_power: T,
    pub specular_orientation: SurfaceOrientation<T>,
    pub specular_power: T,
    /// Angle between the best grid normal and the specular normal.
    pub normal_offset: T,
    /// Largest power change between the best grid point and its neighbors.
    pub cell_variation: T,
    /// `(tilt, azimuth, power)` of every grid orientation, tilt-major.
    pub power_map: Vec<(T, T, T)>,
    pub confirmed: bool,
}

/// Grid search over plate normals (tilt from `+z` up to `max_tilt`,
/// azimuth over the full circle, both at `resolution`) for the metal plate
/// orientation that maximizes received power.
///
/// Orientations that put either end behind the plate score zero. The
/// specular orientation is confirmed when its normal lies within one grid
/// cell diagonal of the best grid normal and its power is within the
/// best point's neighbor variation of the grid maximum.
pub fn verify_plate_rotation<T: Real>(
    tx: Vec3<T>,
    rx: Vec3<T>,
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
    resolution: T,
    max_tilt: T,
) -> Result<RotationCheck<T>> {
    if !(resolution > T::zero()) {
        return Err(Error::invalid("rotation.resolution", "must be positive"));
    }
    let specular = specular_orientation(tx, rx)?;
    let specular_power = metal_power(tx, rx, surface, params, specular)?.unwrap_or_else(T::zero);

    let n_tilt = (max_tilt / resolution).floor().to_usize().unwrap_or(0) + 1;
    let n_az = (T::TAU() / resolution).round().to_usize().unwrap_or(1).max(1);
    let az_step = T::TAU() / T::count(n_az);
    let grid: Vec<(usize, usize)> =
        (0..n_tilt).flat_map(|i| (0..if i == 0 { 1 } else { n_az }).map(move |j| (i, j))).collect();

    let power_map = grid
        .par_iter()
        .map(|&(i, j)| {
            let tilt = resolution * T::count(i);
            let az = -T::PI() + az_step * T::count(j);
            let normal = Vec3::from_spherical(T::one(), tilt, az);
            let o = SurfaceOrientation::from_normal(normal, Vec3::unit_x()).ok_or(Error::DegenerateBisector)?;
            Ok((tilt, az, metal_power(tx, rx, surface, params, o)?.unwrap_or_else(T::zero)))
        })
        .collect::<Result<Vec<_>>>()?;

    let (best_idx, &(bt, ba, best_power)) = power_map
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &(T, T, T))>, (k, v)| match acc {
            Some((_, b)) if b.2 >= v.2 => acc,
            _ => Some((k, v)),
        })
        .expect("grid has at least the pole");
    let best_orientation =
        SurfaceOrientation::from_normal(Vec3::from_spherical(T::one(), bt, ba), Vec3::unit_x()).expect("unit normal");

    let (bi, bj) = grid[best_idx];
    let lookup = |i: usize, j: usize| -> Option<T> {
        let k = if i == 0 { 0 } else { 1 + (i - 1) * n_az + j % n_az };
        power_map.get(k).map(|v| v.2)
    };
    let mut neighbors = Vec::new();
    if bi == 0 {
        neighbors.extend((0..n_az).filter_map(|j| lookup(1, j)));
    } else {
        neighbors.extend([lookup(bi - 1, bj), lookup(bi + 1, bj)].into_iter().flatten());
        neighbors.extend([lookup(bi, bj + 1), lookup(bi, bj + n_az - 1)].into_iter().flatten());
    }
    let cell_variation = neighbors.iter().map(|&p| (best_power - p).abs()).fold(T::zero(), T::max);
    let normal_offset = best_orientation.normal().angle_to(specular.normal());
    let tol = resolution * T::lit(1e-9);
    let confirmed = normal_offset <= resolution * T::SQRT_2() + tol && specular_power >= best_power - cell_variation;
    Ok(RotationCheck {
        best_orientation,
        best_power,
        specular_orientation: specular,
        specular_power,
        normal_offset,
        cell_variation,
        power_map,
        confirmed,
    })
}

/// Metal-plate power, or `None` when the orientation hides an end.
fn metal_power<T: Real>(
    tx: Vec3<T>,
    rx: Vec3<T>,
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
    orientation: SurfaceOrientation<T>,
) -> Result<Option<T>> {
    let scene = Scene { tx_pos: tx, rx_pos: rx, surface: *surface, orientation };
    match scene.validate() {
        Ok(()) => {}
        Err(Error::FrontSideViolation { .. }) => return Ok(None),
        Err(e) => return Err(e),
    }
    let link = LinkModel::metal(scene, *params)?;
    let terms = link.element_terms()?;
    Ok(Some(power_from_sum(params, combine(&terms, &link.config, Summation::Naive))))
}

/// First zero of `f` on `[lo, hi]`.
///
/// The interval is split into `scan_steps` equal brackets; the first bracket
/// with a sign change is refined by bisection until it is narrower than
/// `tolerance` (at most 200 halvings). `None` when no bracket changes sign.
pub fn find_crossover<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    lo: T,
    hi: T,
    scan_steps: usize,
    tolerance: T,
) -> Result<Option<Crossover<T>>> {
    let xs = linspace(lo, hi, scan_steps.max(1) + 1);
    let mut prev = (xs[0], f(xs[0])?);
    if prev.1 == T::zero() {
        return Ok(Some(Crossover { x: prev.0, iterations: 0 }));
    }
    for &x in &xs[1..] {
        let v = f(x)?;
        if v == T::zero() {
            return Ok(Some(Crossover { x, iterations: 0 }));
        }
        if (v < T::zero()) != (prev.1 < T::zero()) {
            let (mut a, mut fa, mut b) = (prev.0, prev.1, x);
            let mut iterations = 0;
            while (b - a).abs() > tolerance && iterations < 200 {
                let mid = (a + b) * T::lit(0.5);
                let fm = f(mid)?;
                iterations += 1;
                if fm == T::zero() {
                    return Ok(Some(Crossover { x: mid, iterations }));
                }
                if (fm < T::zero()) == (fa < T::zero()) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            return Ok(Some(Crossover { x: (a + b) * T::lit(0.5), iterations }));
        }
        prev = (x, v);
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover<T> {
    pub x: T,
    pub iterations: usize,
}

/// Power gap in dB between the phase-aligned RIS and the rotated plate.
pub fn ris_metal_gap_db<T: Real>(
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
    mu: T,
    distance: T,
    zenith: T,
) -> Result<T> {
    let (tx, rx) = symmetric_positions(distance, zenith);
    let ris = ModelSpec::new("ris", RcsModelKind::Ris(DiffractionParams::new(mu)?), ConfigPolicy::RisOptimizedContinuous);
    let metal = ModelSpec::new("metal", RcsModelKind::Metal, ConfigPolicy::MetalRotated);
    let p_ris = evaluate_policy(surface, params, &ris, tx, rx, 1, Summation::Naive)?;
    let p_metal = evaluate_policy(surface, params, &metal, tx, rx, 1, Summation::Naive)?;
    Ok(T::lit(10.0) * (p_ris / p_metal).log10())
}

/// Distance at which the RIS and rotated-plate powers meet, at fixed zenith.
///
/// With `scan_steps = 1` only the end points are compared, so the result is
/// `None` unless the gap changes sign between `d_min` and `d_max`.
#[allow(clippy::too_many_arguments)]
pub fn crossover_distance<T: Real>(
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
    mu: T,
    zenith: T,
    d_min: T,
    d_max: T,
    scan_steps: usize,
    tolerance: T,
) -> Result<Option<Crossover<T>>> {
    find_crossover(|d| ris_metal_gap_db(surface, params, mu, d, zenith), d_min, d_max, scan_steps, tolerance)
}

/// Zenith at which the RIS and rotated-plate powers meet, at fixed distance.
#[allow(clippy::too_many_arguments)]
pub fn crossover_zenith<T: Real>(
    surface: &SurfaceSpec<T>,
    params: &PropagationParams<T>,
    mu: T,
    distance: T,
    z_min: T,
    z_max: T,
    scan_steps: usize,
    tolerance: T,
) -> Result<Option<Crossover<T>>> {
    find_crossover(|z| ris_metal_gap_db(surface, params, mu, distance, z), z_min, z_max, scan_steps, tolerance)
}

/// Relative side lobe level of a fixed configuration: the strongest power
/// at candidate receiver positions farther than `exclusion` from the
/// intended receiver, divided by the power at the intended receiver.
///
/// Diagnostic only.
pub fn relative_side_lobe_level<T: Real>(link: &LinkModel<T>, candidates: &[Vec3<T>], exclusion: T) -> Result<T> {
    let on_target = {
        let terms = link.element_terms()?;
        power_from_sum(&link.params, combine(&terms, &link.config, link.summation))
    };
    let mut worst = T::zero();
    for &rx in candidates {
        if (rx - link.scene.rx_pos).norm() <= exclusion {
            continue;
        }
        let scene = Scene { rx_pos: rx, ..link.scene.clone() };
        let terms = element_terms(&scene, &link.params, &link.model)?;
        worst = worst.max(power_from_sum(&link.params, combine(&terms, &link.config, link.summation)));
    }
    Ok(worst / on_target)
}
