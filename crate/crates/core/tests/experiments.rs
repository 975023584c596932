use surfacelink::channel::PropagationParams;
use surfacelink::experiments::{
    crossover_distance, evaluate_policy, far_field_boundary, run_angle_sweep, run_distance_sweep, symmetric_positions,
    verify_plate_rotation, ConfigPolicy, ModelSpec, SweepKind, SweepPlan,
};
use surfacelink::geometry::{SurfaceSpec, Vec3};
use surfacelink::scattering::{DiffractionParams, RcsModelKind};
use surfacelink::summation::Summation;

fn params() -> PropagationParams<f64> {
    PropagationParams::free_space()
}

fn half_wave(n: usize) -> SurfaceSpec<f64> {
    let l = params().lambda();
    SurfaceSpec::new(n, n, l / 2.0, l / 2.0).unwrap()
}

fn ris(mu: f64) -> RcsModelKind<f64> {
    RcsModelKind::Ris(DiffractionParams::new(mu).unwrap())
}

#[test]
fn policy_ordering_holds_at_every_point() {
    let models = vec![
        ModelSpec::new("cont", ris(0.2), ConfigPolicy::RisOptimizedContinuous),
        ModelSpec::new("disc4", ris(0.2), ConfigPolicy::RisOptimizedDiscrete { levels: 4 }),
        ModelSpec::new("disc2", ris(0.2), ConfigPolicy::RisOptimizedDiscrete { levels: 2 }),
        ModelSpec::new("uniform", ris(0.2), ConfigPolicy::RisUniform),
    ];
    let plan = SweepPlan::new(SweepKind::Angle { distance: 0.6, z_min: 0.0, z_max: 1.0, n_steps: 9 }, models);
    let r = run_angle_sweep(&plan, &half_wave(8), &params()).unwrap();
    for row in &r.rows {
        let [c, d4, d2, u] = [row.p_r[0], row.p_r[1], row.p_r[2], row.p_r[3]];
        let slack = 1e-12 * c;
        assert!(c + slack >= d4 && c + slack >= d2, "{row:?}");
        assert!(d4 + slack >= u && d2 + slack >= u, "{row:?}");
    }
}

#[test]
fn far_field_power_decays_monotonically() {
    let spec = half_wave(16);
    let boundary = far_field_boundary(&spec, params().lambda());
    let models = vec![
        ModelSpec::new("ris", ris(0.2), ConfigPolicy::RisOptimizedContinuous),
        ModelSpec::new("metal", RcsModelKind::Metal, ConfigPolicy::MetalRotated),
        ModelSpec::new("tang", RcsModelKind::TangCosine, ConfigPolicy::RisOptimizedContinuous),
        ModelSpec::new("uniform", ris(0.2), ConfigPolicy::RisUniform),
    ];
    let kind = SweepKind::Distance { zenith: 30f64.to_radians(), d_min: 2.0 * boundary, d_max: 8.0 * boundary, n_steps: 20 };
    let r = run_distance_sweep(&SweepPlan::new(kind, models), &spec, &params()).unwrap();
    for label in &r.labels {
        let p = r.column(label).unwrap();
        assert!(p.windows(2).all(|w| w[1] < w[0]), "{label}: {p:?}");
    }
}

#[test]
fn rotated_plate_is_not_worse_than_flat_plate() {
    let spec = half_wave(8);
    let rotated = ModelSpec::new("rot", RcsModelKind::Metal, ConfigPolicy::MetalRotated);
    let flat = ModelSpec::new("flat", RcsModelKind::Metal, ConfigPolicy::MetalFlat);
    // symmetric sweep geometry: the specular plate is the flat plate
    for z in [5.0f64, 20.0, 45.0, 70.0] {
        let (tx, rx) = symmetric_positions(1.0, z.to_radians());
        let a = evaluate_policy(&spec, &params(), &rotated, tx, rx, 1, Summation::Naive).unwrap();
        let b = evaluate_policy(&spec, &params(), &flat, tx, rx, 1, Summation::Naive).unwrap();
        assert!(a >= b * (1.0 - 1e-12), "zenith {z}");
    }
    // unequal zeniths in the far field: rotating toward the bisector helps
    for (zt, zr) in [(10.0f64, 40.0f64), (0.0, 60.0), (25.0, 55.0)] {
        let tx = Vec3::from_spherical(20.0, zt.to_radians(), std::f64::consts::PI);
        let rx = Vec3::from_spherical(20.0, zr.to_radians(), 0.0);
        let a = evaluate_policy(&spec, &params(), &rotated, tx, rx, 1, Summation::Naive).unwrap();
        let b = evaluate_policy(&spec, &params(), &flat, tx, rx, 1, Summation::Naive).unwrap();
        assert!(a > b, "tx {zt}, rx {zr}: rotated {a} flat {b}");
    }
}

#[test]
fn no_crossover_without_diffraction() {
    let found = crossover_distance(&half_wave(8), &params(), 0.0, 40f64.to_radians(), 0.3, 10.0, 40, 1e-6).unwrap();
    assert!(found.is_none());
}

#[test]
fn plate_rotation_search_finds_identity_at_boresight() {
    let tx = Vec3::new(0.0, 0.0, 3.0);
    let rx = Vec3::new(0.0, 0.0, 4.0);
    let res = 2f64.to_radians();
    let check = verify_plate_rotation(tx, rx, &half_wave(8), &params(), res, 30f64.to_radians()).unwrap();
    assert!(check.confirmed);
    assert!(check.best_orientation.normal().angle_to(Vec3::unit_z()) <= res);
}

#[test]
fn plate_rotation_search_tracks_bisector_off_axis() {
    // unequal zeniths put the bisector off the z axis
    let tx = Vec3::from_spherical(4.0, 0.0, 0.0);
    let rx = Vec3::from_spherical(4.0, 40f64.to_radians(), 0.0);
    let res = 2f64.to_radians();
    let check = verify_plate_rotation(tx, rx, &half_wave(8), &params(), res, 40f64.to_radians()).unwrap();
    assert!(check.confirmed, "offset {} rad", check.normal_offset);
    let expected = Vec3::from_spherical(1.0, 20f64.to_radians(), 0.0);
    assert!(check.best_orientation.normal().angle_to(expected) <= res * 2f64.sqrt());
    assert!(check.specular_power >= check.best_power - check.cell_variation);
}

#[test]
fn single_cell_rotation_slice_follows_pattern() {
    // one cell far away: the power map is the cell pattern and peaks at the bisector
    let spec = SurfaceSpec::new(1, 1, 2.0 * params().lambda(), 2.0 * params().lambda()).unwrap();
    let tx = Vec3::from_spherical(50.0, 30f64.to_radians(), std::f64::consts::PI);
    let rx = Vec3::from_spherical(50.0, 10f64.to_radians(), 0.0);
    let res = 1f64.to_radians();
    let check = verify_plate_rotation(tx, rx, &spec, &params(), res, 30f64.to_radians()).unwrap();
    assert!(check.confirmed);
    let expected = Vec3::from_spherical(1.0, 10f64.to_radians(), std::f64::consts::PI);
    assert!(check.best_orientation.normal().angle_to(expected) <= res * 2f64.sqrt());
}

#[test]
fn distance_sweep_rows_are_sorted() {
    let models = vec![ModelSpec::new("m", RcsModelKind::Metal, ConfigPolicy::MetalRotated)];
    let plan = SweepPlan::new(SweepKind::Distance { zenith: 0.3, d_min: 0.5, d_max: 1.0, n_steps: 3 }, models);
    let ok = run_distance_sweep(&plan, &half_wave(1), &params()).unwrap();
    assert_eq!(ok.rows.len(), 3);
    assert!(ok.rows.windows(2).all(|w| w[0].x < w[1].x));
}
