//! Positions, the surface frame, rotations, and per-element angle extraction.
//!
//! The surface lies on the local `xOy` plane with its normal along local
//! `+z`. A [`SurfaceOrientation`] maps local coordinates to world
//! coordinates by a proper rotation about the world origin, so the surface
//! center always sits at the origin.
//!
//! Angles follow the usual spherical convention in the surface frame:
//! elevation `theta` is measured from the normal, azimuth `phi` from local
//! `+x` toward local `+y`. The incident pair describes the direction from the
//! element toward the transmitter, the scattered pair the direction from the
//! element toward the receiver. With this convention the specular pair is
//! `theta_s = theta_i`, `phi_s = phi_i + pi`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{End, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    /// Point at `distance` from the origin along the direction given by
    /// elevation `theta` (from `+z`) and azimuth `phi` (from `+x`).
    pub fn from_spherical(distance: T, theta: T, phi: T) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(distance * st * cp, distance * st * sp, distance * ct)
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y).hypot(self.z)
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self * n.recip())
        } else {
            None
        }
    }

    /// Angle between two non-zero vectors in `[0, pi]`.
    ///
    /// Uses `atan2(|a x b|, a . b)`, which stays accurate for nearly
    /// parallel vectors where `acos` loses half the digits.
    pub fn angle_to(self, other: Self) -> T {
        self.cross(other).norm().atan2(self.dot(other))
    }

    /// Elevation from `+z` and azimuth from `+x` of this (non-zero) vector.
    pub fn spherical_angles(self) -> (T, T) {
        let rho = self.x.hypot(self.y);
        (rho.atan2(self.z), self.y.atan2(self.x))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// 3x3 rotation matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { m: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    /// Rotation whose columns are the images of the local basis vectors.
    pub fn from_columns(x: Vec3<T>, y: Vec3<T>, z: Vec3<T>) -> Self {
        Self { m: [[x.x, y.x, z.x], [x.y, y.y, z.y], [x.z, y.z, z.z]] }
    }

    /// Right-handed rotation by `angle` about a (not necessarily unit) axis.
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Option<Self> {
        let u = axis.normalized()?;
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        Some(Self {
            m: [
                [c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s],
                [u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s],
                [u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t],
            ],
        })
    }

    pub fn about_x(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_x(), angle).expect("unit axis")
    }

    pub fn about_y(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_y(), angle).expect("unit axis")
    }

    pub fn about_z(angle: T) -> Self {
        Self::from_axis_angle(Vec3::unit_z(), angle).expect("unit axis")
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn apply(&self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// Applies the transpose, which is the inverse for a rotation.
    pub fn apply_inverse(&self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
        )
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let mut m = [[T::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Self { m }
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `|R^T R - I|` together with `|det R - 1|`.
    pub fn orthonormality_defect(&self) -> T {
        let mut worst = (self.determinant() - T::one()).abs();
        for i in 0..3 {
            for j in 0..3 {
                let dot = self.column(i).dot(self.column(j));
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Surface-to-world rotation of the whole surface about the world origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceOrientation<T> {
    rotation: Rotation<T>,
}

impl<T: Real> SurfaceOrientation<T> {
    /// Wraps a rotation after checking it is proper and orthonormal to 1e-10.
    pub fn new(rotation: Rotation<T>) -> Result<Self> {
        let defect = rotation.orthonormality_defect();
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
        if !(defect <= tol) {
            return Err(Error::invalid(
                "orientation",
                format!("rotation is not proper orthonormal (defect {:e})", defect.as_f64()),
            ));
        }
        Ok(Self { rotation })
    }

    pub fn identity() -> Self {
        Self { rotation: Rotation::identity() }
    }

    pub fn rotation(&self) -> &Rotation<T> {
        &self.rotation
    }

    /// World-frame surface normal.
    pub fn normal(&self) -> Vec3<T> {
        self.rotation.column(2)
    }

    pub fn to_world(&self, local: Vec3<T>) -> Vec3<T> {
        self.rotation.apply(local)
    }

    pub fn to_local(&self, world: Vec3<T>) -> Vec3<T> {
        self.rotation.apply_inverse(world)
    }

    /// Orientation after additionally rotating the world by `r`.
    pub fn rotated_by(&self, r: &Rotation<T>) -> Self {
        Self { rotation: r.compose(&self.rotation) }
    }

    /// Orientation with the given world normal and the roll fixed so the
    /// local x-axis lies in the plane of the normal and `reference`.
    ///
    /// Falls back to the next world axis when `reference` is parallel to
    /// the normal.
    pub fn from_normal(normal: Vec3<T>, reference: Vec3<T>) -> Option<Self> {
        let n = normal.normalized()?;
        let candidates = [reference, Vec3::unit_x(), Vec3::unit_y()];
        let tol = T::lit(1e-9);
        let x = candidates
            .iter()
            .find_map(|&r| (r - n * r.dot(n)).normalized().filter(|_| n.cross(r).norm() > tol))?;
        let y = n.cross(x);
        Some(Self { rotation: Rotation::from_columns(x, y, n) })
    }
}

impl<T: Real> Default for SurfaceOrientation<T> {
    fn default() -> Self {
        Self::identity()
    }
}

/// `n_v x n_h` grid of edge-to-edge cells of size `d_v x d_h`.
///
/// `n_v` counts columns along local x (pitch `d_v`), `n_h` counts rows along
/// local y (pitch `d_h`). Elements are indexed row-major starting at the
/// most negative `(x, y)` corner: `index = row * n_v + col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec<T> {
    n_v: usize,
    n_h: usize,
    d_v: T,
    d_h: T,
}

impl<T: Real> SurfaceSpec<T> {
    pub fn new(n_v: usize, n_h: usize, d_v: T, d_h: T) -> Result<Self> {
        if n_v == 0 || n_h == 0 {
            return Err(Error::invalid("surface", "element counts must be positive"));
        }
        if !(d_v > T::zero() && d_v.is_finite()) {
            return Err(Error::invalid("surface.d_v", "cell width must be positive and finite"));
        }
        if !(d_h > T::zero() && d_h.is_finite()) {
            return Err(Error::invalid("surface.d_h", "cell length must be positive and finite"));
        }
        Ok(Self { n_v, n_h, d_v, d_h })
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn d_v(&self) -> T {
        self.d_v
    }

    pub fn d_h(&self) -> T {
        self.d_h
    }

    pub fn element_count(&self) -> usize {
        self.n_v * self.n_h
    }

    /// `(row, col)` of a row-major element index.
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_v, index % self.n_v)
    }

    /// Center of element `index` in the surface frame (z = 0).
    pub fn local_center(&self, index: usize) -> Vec3<T> {
        let (row, col) = self.row_col(index);
        let half = T::lit(0.5);
        let cx = T::count(col) - (T::count(self.n_v) - T::one()) * half;
        let cy = T::count(row) - (T::count(self.n_h) - T::one()) * half;
        Vec3::new(cx * self.d_v, cy * self.d_h, T::zero())
    }

    pub fn local_centers(&self) -> Vec<Vec3<T>> {
        (0..self.element_count()).map(|i| self.local_center(i)).collect()
    }
}

/// World-frame element centers in row-major order.
pub fn element_positions<T: Real>(
    spec: &SurfaceSpec<T>,
    orientation: &SurfaceOrientation<T>,
) -> Vec<Vec3<T>> {
    (0..spec.element_count()).map(|i| orientation.to_world(spec.local_center(i))).collect()
}

/// Incident and scattered directions of one element in the surface frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleQuad<T> {
    pub theta_i: T,
    pub phi_i: T,
    pub theta_s: T,
    pub phi_s: T,
}

impl<T: Real> AngleQuad<T> {
    pub const fn new(theta_i: T, phi_i: T, theta_s: T, phi_s: T) -> Self {
        Self { theta_i, phi_i, theta_s, phi_s }
    }

    pub fn from_degrees(theta_i: T, phi_i: T, theta_s: T, phi_s: T) -> Self {
        Self::new(theta_i.to_radians(), phi_i.to_radians(), theta_s.to_radians(), phi_s.to_radians())
    }

    pub fn boresight() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }
}

/// Transmitter, receiver, and surface placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene<T> {
    pub tx_pos: Vec3<T>,
    pub rx_pos: Vec3<T>,
    pub surface: SurfaceSpec<T>,
    pub orientation: SurfaceOrientation<T>,
}

impl<T: Real> Scene<T> {
    /// Builds a scene and checks both ends are in front of the surface and
    /// away from every element.
    pub fn new(
        tx_pos: Vec3<T>,
        rx_pos: Vec3<T>,
        surface: SurfaceSpec<T>,
        orientation: SurfaceOrientation<T>,
    ) -> Result<Self> {
        let scene = Self { tx_pos, rx_pos, surface, orientation };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        for (end, pos) in [(End::Tx, self.tx_pos), (End::Rx, self.rx_pos)] {
            if !pos.is_finite() {
                return Err(Error::invalid("scene", format!("{end} position is not finite")));
            }
            self.front_side(end, pos)?;
        }
        for (index, p) in self.element_positions().into_iter().enumerate() {
            if (self.tx_pos - p).norm() == T::zero() {
                return Err(Error::ZeroDistance { end: End::Tx, element: index });
            }
            if (self.rx_pos - p).norm() == T::zero() {
                return Err(Error::ZeroDistance { end: End::Rx, element: index });
            }
        }
        Ok(())
    }

    fn front_side(&self, end: End, pos: Vec3<T>) -> Result<()> {
        let local_z = self.orientation.to_local(pos).z;
        if local_z > T::zero() {
            Ok(())
        } else {
            Err(Error::FrontSideViolation { end, local_z: local_z.as_f64() })
        }
    }

    pub fn position(&self, end: End) -> Vec3<T> {
        match end {
            End::Tx => self.tx_pos,
            End::Rx => self.rx_pos,
        }
    }

    pub fn element_positions(&self) -> Vec<Vec3<T>> {
        element_positions(&self.surface, &self.orientation)
    }

    pub fn element_position(&self, index: usize) -> Result<Vec3<T>> {
        self.check_index(index)?;
        Ok(self.orientation.to_world(self.surface.local_center(index)))
    }

    fn check_index(&self, index: usize) -> Result<()> {
        let count = self.surface.element_count();
        if index < count {
            Ok(())
        } else {
            Err(Error::ElementIndex { index, count })
        }
    }

    /// Same scene with every world position and the orientation rotated by `r`.
    pub fn rigidly_rotated(&self, r: &Rotation<T>) -> Self {
        Self {
            tx_pos: r.apply(self.tx_pos),
            rx_pos: r.apply(self.rx_pos),
            surface: self.surface,
            orientation: self.orientation.rotated_by(r),
        }
    }
}

/// Local-frame angles of the tx and rx directions seen from one element.
pub fn incident_scatter_angles<T: Real>(scene: &Scene<T>, element_index: usize) -> Result<AngleQuad<T>> {
    scene.check_index(element_index)?;
    scene.front_side(End::Tx, scene.tx_pos)?;
    scene.front_side(End::Rx, scene.rx_pos)?;
    let center = scene.surface.local_center(element_index);
    let to_tx = scene.orientation.to_local(scene.tx_pos) - center;
    let to_rx = scene.orientation.to_local(scene.rx_pos) - center;
    if to_tx.norm() == T::zero() {
        return Err(Error::ZeroDistance { end: End::Tx, element: element_index });
    }
    if to_rx.norm() == T::zero() {
        return Err(Error::ZeroDistance { end: End::Rx, element: element_index });
    }
    let (theta_i, phi_i) = to_tx.spherical_angles();
    let (theta_s, phi_s) = to_rx.spherical_angles();
    Ok(AngleQuad { theta_i, phi_i, theta_s, phi_s })
}

/// Angle at `end_pos` between the ray to the world origin and the ray to
/// `element_pos`.
pub fn directivity_angle_between<T: Real>(end: End, end_pos: Vec3<T>, element_pos: Vec3<T>) -> Result<T> {
    let to_origin = -end_pos;
    if to_origin.norm() == T::zero() {
        return Err(Error::UndefinedAngle { end });
    }
    let to_element = element_pos - end_pos;
    if to_element.norm() == T::zero() {
        return Err(Error::UndefinedAngle { end });
    }
    Ok(to_origin.angle_to(to_element))
}

pub fn directivity_angle<T: Real>(scene: &Scene<T>, element_index: usize, end: End) -> Result<T> {
    let element = scene.element_position(element_index)?;
    directivity_angle_between(end, scene.position(end), element)
}

/// Orientation whose normal bisects the directions from the origin to tx
/// and rx, so the specular reflection off the plate center reaches rx.
///
/// Roll puts the local x-axis in the plane of the normal and world x.
pub fn specular_orientation<T: Real>(tx_pos: Vec3<T>, rx_pos: Vec3<T>) -> Result<SurfaceOrientation<T>> {
    specular_orientation_with_reference(tx_pos, rx_pos, Vec3::unit_x())
}

/// [`specular_orientation`] with a caller-chosen roll reference axis.
pub fn specular_orientation_with_reference<T: Real>(
    tx_pos: Vec3<T>,
    rx_pos: Vec3<T>,
    reference: Vec3<T>,
) -> Result<SurfaceOrientation<T>> {
    let ut = tx_pos.normalized().ok_or(Error::UndefinedAngle { end: End::Tx })?;
    let ur = rx_pos.normalized().ok_or(Error::UndefinedAngle { end: End::Rx })?;
    let sum = ut + ur;
    if sum.norm() < T::lit(1e-9) {
        return Err(Error::DegenerateBisector);
    }
    SurfaceOrientation::from_normal(sum, reference).ok_or(Error::DegenerateBisector)
}
