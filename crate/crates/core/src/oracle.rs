//! Physical-optics cross section of a metal cell by direct quadrature.
//!
//! The induced current `J = 2 n x H_in` of a plane wave on a perfectly
//! conducting `d_v x d_h` cell is integrated against the far-field radiation
//! kernel to obtain the vector potentials `N_theta`, `N_phi`, and from them
//! the bistatic cross section. Nothing here evaluates the closed-form sinc
//! expressions; the module exists to check them.
//!
//! Normalization: the current is reported in units of `2 E0 / eta0` and the
//! potentials in units of `E0 / eta0`. With those units
//! `sigma = k^2 (|N_theta|^2 + |N_phi|^2) / (4 pi)`, independent of the
//! observation distance.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AngleQuad;
use crate::scalar::Real;
use crate::scattering::{rcs_metal_cell, CellDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussLegendre,
    MidpointRiemann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    n_points_x: usize,
    n_points_y: usize,
    rule: QuadratureRule,
}

impl QuadratureSpec {
    pub const MIN_POINTS: usize = 4;

    pub fn new(n_points_x: usize, n_points_y: usize, rule: QuadratureRule) -> Result<Self> {
        if n_points_x < Self::MIN_POINTS || n_points_y < Self::MIN_POINTS {
            return Err(Error::invalid("oracle.n_points", format!("need at least {} nodes per axis", Self::MIN_POINTS)));
        }
        Ok(Self { n_points_x, n_points_y, rule })
    }

    pub fn gauss_legendre(n: usize) -> Result<Self> {
        Self::new(n, n, QuadratureRule::GaussLegendre)
    }

    pub fn midpoint(n: usize) -> Result<Self> {
        Self::new(n, n, QuadratureRule::MidpointRiemann)
    }

    pub fn n_points_x(&self) -> usize {
        self.n_points_x
    }

    pub fn n_points_y(&self) -> usize {
        self.n_points_y
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }
}

impl Default for QuadratureSpec {
    /// 64 x 64 Gauss-Legendre.
    fn default() -> Self {
        Self { n_points_x: 64, n_points_y: 64, rule: QuadratureRule::GaussLegendre }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
///
/// Newton iteration on `P_n` from the Tricomi initial guesses.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of `rule` on `[-half, half]`.
fn axis_rule<T: Real>(rule: QuadratureRule, n: usize, half: T) -> Vec<(T, T)> {
    match rule {
        QuadratureRule::GaussLegendre => {
            let (x, w) = gauss_legendre_nodes(n);
            x.into_iter().zip(w).map(|(x, w)| (half * T::lit(x), half * T::lit(w))).collect()
        }
        QuadratureRule::MidpointRiemann => {
            let h = half * T::lit(2.0) / T::count(n);
            (0..n).map(|i| (-half + h * (T::count(i) + T::lit(0.5)), h)).collect()
        }
    }
}

/// Incident plane-wave phase `e^{-jk(sin t cos p x + sin t sin p y)}` on the cell.
pub fn incident_field_phase<T: Real>(theta_i: T, phi_i: T, point: (T, T), k: T) -> Complex<T> {
    let s = theta_i.sin();
    let (sp, cp) = phi_i.sin_cos();
    let arg = k * (s * cp * point.0 + s * sp * point.1);
    Complex::from_polar(T::one(), -arg)
}

/// Far-field kernel `e^{-jk(sin ts cos ps x + sin ts sin ps y)}` toward the
/// scattered direction; same plane-wave form as the incident phase.
pub fn radiation_kernel<T: Real>(theta_s: T, phi_s: T, point: (T, T), k: T) -> Complex<T> {
    incident_field_phase(theta_s, phi_s, point, k)
}

/// x-directed induced current `cos(theta_i)` times the incident phase,
/// in units of `2 E0 / eta0`.
pub fn surface_current_amplitude<T: Real>(theta_i: T, phi_i: T, point: (T, T), k: T) -> Complex<T> {
    incident_field_phase(theta_i, phi_i, point, k) * theta_i.cos()
}

/// Phase advance of the combined integrand per quadrature interval along
/// each axis.
fn phase_per_interval<T: Real>(q: &AngleQuad<T>, dims: &CellDims<T>, quad: &QuadratureSpec) -> (T, T) {
    let (si, ss) = (q.theta_i.sin(), q.theta_s.sin());
    let (spi, cpi) = q.phi_i.sin_cos();
    let (sps, cps) = q.phi_s.sin_cos();
    let ax = (ss * cps + si * cpi).abs();
    let ay = (ss * sps + si * spi).abs();
    (
        dims.k() * ax * dims.d_v() / T::count(quad.n_points_x),
        dims.k() * ay * dims.d_h() / T::count(quad.n_points_y),
    )
}

/// Plane-wave phasors of one direction sampled on the nodes of each axis.
///
/// The phase `e^{-jk(a x + b y)}` at node `(x_i, y_j)` is the product of
/// the x entry `i` and the y entry `j`.
#[derive(Debug, Clone)]
struct AxisPhasors<T> {
    x: Vec<Complex<T>>,
    y: Vec<Complex<T>>,
}

type PhaseFn<T> = fn(T, T, (T, T), T) -> Complex<T>;

impl<T: Real> AxisPhasors<T> {
    fn new(theta: T, phi: T, k: T, rule: &NodeRule<T>, phase: PhaseFn<T>) -> Self {
        let zero = T::zero();
        Self {
            x: rule.xs.iter().map(|&(u, _)| phase(theta, phi, (u, zero), k)).collect(),
            y: rule.ys.iter().map(|&(u, _)| phase(theta, phi, (zero, u), k)).collect(),
        }
    }

    fn incident(theta: T, phi: T, k: T, rule: &NodeRule<T>) -> Self {
        Self::new(theta, phi, k, rule, incident_field_phase)
    }

    fn scattered(theta: T, phi: T, k: T, rule: &NodeRule<T>) -> Self {
        Self::new(theta, phi, k, rule, radiation_kernel)
    }
}

/// Nodes and weights of both axes of one cell.
#[derive(Debug, Clone)]
struct NodeRule<T> {
    xs: Vec<(T, T)>,
    ys: Vec<(T, T)>,
}

impl<T: Real> NodeRule<T> {
    fn new(dims: &CellDims<T>, quad: &QuadratureSpec) -> Self {
        let half = T::lit(0.5);
        Self {
            xs: axis_rule(quad.rule, quad.n_points_x, dims.d_v() * half),
            ys: axis_rule(quad.rule, quad.n_points_y, dims.d_h() * half),
        }
    }
}

const LANES: usize = 4;

/// `sum_ij w_i w_j e^{-jk(...)}` over the full node grid for the incident
/// phase times the scattered-direction kernel.
fn integrate_cell<T: Real>(incident: &AxisPhasors<T>, scattered: &AxisPhasors<T>, rule: &NodeRule<T>) -> Complex<T> {
    let (ar, ai): (Vec<T>, Vec<T>) = incident
        .x
        .iter()
        .zip(&scattered.x)
        .zip(&rule.xs)
        .map(|((p, q), &(_, w))| {
            let v = p * q * w;
            (v.re, v.im)
        })
        .unzip();
    let (br, bi): (Vec<T>, Vec<T>) = incident
        .y
        .iter()
        .zip(&scattered.y)
        .zip(&rule.ys)
        .map(|((p, q), &(_, w))| {
            let v = p * q * w;
            (v.re, v.im)
        })
        .unzip();

    // independent lane accumulators keep the node loop free of a single
    // serial dependency chain
    let mut lre = [T::zero(); LANES];
    let mut lim = [T::zero(); LANES];
    let split = br.len() - br.len() % LANES;
    for (&xr, &xi) in ar.iter().zip(&ai) {
        for (cr, ci) in br[..split].chunks_exact(LANES).zip(bi[..split].chunks_exact(LANES)) {
            for l in 0..LANES {
                lre[l] = lre[l] + (xr * cr[l] - xi * ci[l]);
                lim[l] = lim[l] + (xr * ci[l] + xi * cr[l]);
            }
        }
        for (&yr, &yi) in br[split..].iter().zip(&bi[split..]) {
            lre[0] = lre[0] + (xr * yr - xi * yi);
            lim[0] = lim[0] + (xr * yi + xi * yr);
        }
    }
    Complex::new(lre.iter().copied().sum(), lim.iter().copied().sum())
}

fn check_resolution<T: Real>(q: &AngleQuad<T>, dims: &CellDims<T>, quad: &QuadratureSpec) -> Result<()> {
    let (px, py) = phase_per_interval(q, dims, quad);
    let worst = px.max(py);
    if worst > T::FRAC_PI_2() {
        Err(Error::QuadratureUnderresolved { phase_per_interval: worst.as_f64() })
    } else {
        Ok(())
    }
}

/// Converts the node-grid integral into `(N_theta, N_phi)`.
fn potentials_from_integral<T: Real>(q: &AngleQuad<T>, integral: Complex<T>) -> (Complex<T>, Complex<T>) {
    // current amplitude 2 cos(theta_i) in units of E0 / eta0
    let integral = integral * (T::lit(2.0) * q.theta_i.cos());
    let (sps, cps) = q.phi_s.sin_cos();
    (integral * (q.theta_s.cos() * cps), integral * (-sps))
}

fn rcs_from_potentials<T: Real>(k: T, n_theta: Complex<T>, n_phi: Complex<T>) -> T {
    k * k * (n_theta.norm_sqr() + n_phi.norm_sqr()) / (T::lit(4.0) * T::PI())
}

/// Radiation vector potentials `(N_theta, N_phi)` of the cell, in units of
/// `E0 / eta0`.
///
/// The integrand at node `(x, y)` is the induced current times the
/// scattered-direction kernel `e^{-jk(sin ts cos ps x + sin ts sin ps y)}`,
/// summed with the tensor-product weights over every node of the grid.
pub fn vector_potentials<T: Real>(
    q: &AngleQuad<T>,
    dims: &CellDims<T>,
    quad: &QuadratureSpec,
) -> Result<(Complex<T>, Complex<T>)> {
    check_resolution(q, dims, quad)?;
    let rule = NodeRule::new(dims, quad);
    let incident = AxisPhasors::incident(q.theta_i, q.phi_i, dims.k(), &rule);
    let scattered = AxisPhasors::scattered(q.theta_s, q.phi_s, dims.k(), &rule);
    Ok(potentials_from_integral(q, integrate_cell(&incident, &scattered, &rule)))
}

/// Bistatic cross section from the quadrature potentials, in m^2.
pub fn rcs_po_oracle<T: Real>(q: &AngleQuad<T>, dims: &CellDims<T>, quad: &QuadratureSpec) -> Result<T> {
    let (n_theta, n_phi) = vector_potentials(q, dims, quad)?;
    Ok(rcs_from_potentials(dims.k(), n_theta, n_phi))
}

/// Angle samples for grid sweeps.
///
/// Elevations `0, step, 2 step, ...` up to `theta_max`, azimuths
/// `-180 deg, -180 deg + step, ...` below `180 deg`. When `collapse_pole`
/// is set, elevation zero contributes a single direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid<T> {
    pub theta_step: T,
    pub phi_step: T,
    pub theta_max: T,
    pub collapse_pole: bool,
}

impl<T: Real> AngleGrid<T> {
    pub fn degrees(theta_step: T, phi_step: T, theta_max: T) -> Self {
        Self {
            theta_step: theta_step.to_radians(),
            phi_step: phi_step.to_radians(),
            theta_max: theta_max.to_radians(),
            collapse_pole: true,
        }
    }

    pub fn thetas(&self) -> Vec<T> {
        let tol = self.theta_step * T::lit(1e-9);
        (0..)
            .map(|i| self.theta_step * T::count(i))
            .take_while(|&t| t <= self.theta_max + tol)
            .collect()
    }

    pub fn phis(&self) -> Vec<T> {
        let tol = self.phi_step * T::lit(1e-9);
        (0..)
            .map(|i| -T::PI() + self.phi_step * T::count(i))
            .take_while(|&p| p < T::PI() - tol)
            .collect()
    }

    /// `(theta, phi)` directions in row-major `(theta, phi)` order.
    pub fn directions(&self) -> Vec<(T, T)> {
        let phis = self.phis();
        let mut out = Vec::new();
        for t in self.thetas() {
            if self.collapse_pole && t == T::zero() {
                out.push((t, T::zero()));
            } else {
                out.extend(phis.iter().map(|&p| (t, p)));
            }
        }
        out
    }
}

/// Summary of an oracle-versus-closed-form sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport<T> {
    pub samples: usize,
    pub max_rel_error: T,
    pub mean_rel_error: T,
    pub worst: AngleQuad<T>,
}

/// Relative error with the denominator floored at `1e-10` of the boresight
/// cross section, so exact sinc nulls compare on an absolute scale.
pub fn relative_error<T: Real>(oracle: T, closed: T, dims: &CellDims<T>) -> T {
    let floor = dims.peak_rcs() * T::lit(NULL_FLOOR);
    (oracle - closed).abs() / closed.abs().max(floor)
}

pub const NULL_FLOOR: f64 = 1e-10;

/// Compares the quadrature oracle to the closed form over every incident and
/// scattered direction pair of `grid`.
pub fn compare_with_closed_form<T: Real>(
    dims: &CellDims<T>,
    quad: &QuadratureSpec,
    grid: &AngleGrid<T>,
) -> Result<OracleReport<T>> {
    let dirs = grid.directions();
    let rule = NodeRule::new(dims, quad);
    let k = dims.k();
    let incident: Vec<AxisPhasors<T>> = dirs.par_iter().map(|&(t, p)| AxisPhasors::incident(t, p, k, &rule)).collect();
    let scattered: Vec<AxisPhasors<T>> = dirs.par_iter().map(|&(t, p)| AxisPhasors::scattered(t, p, k, &rule)).collect();
    let per_incident: Vec<(T, T, AngleQuad<T>)> = dirs
        .par_iter()
        .zip(&incident)
        .map(|(&(ti, pi), incident)| -> Result<(T, T, AngleQuad<T>)> {
            let mut sum = T::zero();
            let mut worst = (T::neg_infinity(), AngleQuad::boresight());
            for (&(ts, ps), scattered) in dirs.iter().zip(&scattered) {
                let q = AngleQuad::new(ti, pi, ts, ps);
                check_resolution(&q, dims, quad)?;
                let (nt, np) = potentials_from_integral(&q, integrate_cell(incident, scattered, &rule));
                let e = relative_error(rcs_from_potentials(k, nt, np), rcs_metal_cell(&q, dims), dims);
                sum = sum + e;
                if e > worst.0 {
                    worst = (e, q);
                }
            }
            Ok((sum, worst.0, worst.1))
        })
        .collect::<Result<_>>()?;

    let samples = dirs.len() * dirs.len();
    let mut total = T::zero();
    let mut max = (T::neg_infinity(), AngleQuad::boresight());
    for (sum, e, q) in per_incident {
        total = total + sum;
        if e > max.0 {
            max = (e, q);
        }
    }
    Ok(OracleReport {
        samples,
        max_rel_error: max.0,
        mean_rel_error: total / T::count(samples.max(1)),
        worst: max.1,
    })
}
