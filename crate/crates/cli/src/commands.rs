//! Subcommand implementations. Each writes its files under `out` and a
//! short report to `stdout`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use surfacelink::channel::{element_response, RisConfiguration};
use surfacelink::experiments::{far_field_boundary, run_sweep};
use surfacelink::geometry::AngleQuad;
use surfacelink::link::{
    combine, continuous_phases, element_terms, optimize_discrete_terms, power_from_sum, watts_to_dbm, LinkModel,
};
use surfacelink::oracle::compare_with_closed_form;
use surfacelink::scattering::{diffraction_factor, rcs_metal_cell, rcs_ris_cell, rcs_tang_cell, CellDims, RcsModelKind};

use crate::config::RunConfig;
use crate::CliError;

/// Shared `#` comment block for every CSV output.
fn preamble(command: &str, cfg: &RunConfig, seed: u64) -> Result<Vec<String>, CliError> {
    let spec = cfg.surface_spec()?;
    Ok(vec![
        format!("surfacelink {command} {}", env!("CARGO_PKG_VERSION")),
        format!("wavelength_meters = {}", cfg.lambda()?),
        format!("surface = {}x{} cells of {} m x {} m", spec.n_v(), spec.n_h(), spec.d_v(), spec.d_h()),
        format!("mu = {}", cfg.diffraction.mu),
        format!("angle_unit = {}", if cfg.angles_in_degrees { "deg" } else { "rad" }),
        format!("seed = {seed}"),
    ])
}

fn comment_block(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

fn write_file(out: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(name), contents)?;
    Ok(())
}

/// Element cross sections for every requested angle quad.
pub fn rcs(cfg: &RunConfig, out: &Path, seed: u64, stdout: &mut dyn Write) -> Result<(), CliError> {
    let section = cfg.rcs.as_ref().ok_or_else(|| CliError::Config("rcs: section required".into()))?;
    let spec = cfg.surface_spec()?;
    let dims = CellDims::from_surface(&spec, cfg.lambda()?)?;
    let diffraction = cfg.diffraction()?;

    let mut quads: Vec<[f64; 4]> = section.quads.clone();
    if let Some(g) = &section.grid {
        let full = if cfg.angles_in_degrees { 360.0 } else { std::f64::consts::TAU };
        let quarter = full / 4.0;
        let n_theta = (quarter / g.step - 1e-9).ceil() as usize;
        let n_phi = (full / g.step - 1e-9).ceil() as usize;
        for i in 0..n_theta {
            for j in 0..n_phi {
                quads.push([g.theta_i, g.phi_i, g.step * i as f64, -full / 2.0 + g.step * j as f64]);
            }
        }
    }

    let mut csv = comment_block(&preamble("rcs", cfg, seed)?);
    csv.push_str("# sigma columns in m^2; sigma_tang is the dimensionless cos^2 theta_i cos^2 theta_s pattern\n");
    csv.push_str("theta_i,phi_i,theta_s,phi_s,sigma_metal_m2,sigma_ris_m2,sigma_tang,diffraction_factor\n");
    for a in &quads {
        let q = AngleQuad::new(cfg.angle(a[0]), cfg.angle(a[1]), cfg.angle(a[2]), cfg.angle(a[3]));
        let values = [
            rcs_metal_cell(&q, &dims),
            rcs_ris_cell(&q, &dims, &diffraction),
            rcs_tang_cell(&q),
            diffraction_factor(&q, &dims, &diffraction),
        ];
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Other(format!("non-finite cross section {v} at angles {a:?}")));
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{:.12e},{:.12e},{:.12e},{:.15}",
            a[0], a[1], a[2], a[3], values[0], values[1], values[2], values[3]
        );
    }
    write_file(out, "rcs.csv", &csv)?;
    writeln!(stdout, "rcs: {} rows -> {}", quads.len(), out.join("rcs.csv").display())?;
    Ok(())
}

/// Distance or zenith sweep; writes `sweep.csv` and `sweep.meta.toml`.
pub fn sweep(cfg: &RunConfig, out: &Path, seed: u64, stdout: &mut dyn Write) -> Result<(), CliError> {
    let plan = cfg.sweep_plan()?;
    let spec = cfg.surface_spec()?;
    let params = cfg.params()?;
    let result = run_sweep(&plan, &spec, &params)?;
    if let Some((i, row)) = result.rows.iter().enumerate().find(|(_, r)| r.p_r.iter().any(|p| !p.is_finite())) {
        return Err(CliError::Other(format!("non-finite power at sweep point {i} (x = {})", row.x)));
    }

    let boundary = far_field_boundary(&spec, params.lambda());
    let mut comments = preamble("sweep", cfg, seed)?;
    comments.push(format!("far_field_boundary_meters = {boundary}"));
    write_file(out, "sweep.csv", &result.to_csv(&comments))?;

    // sidecar: the resolved config, loadable as-is
    let mut meta = comment_block(&comments);
    meta.push_str(&cfg.resolved()?.to_toml());
    write_file(out, "sweep.meta.toml", &meta)?;

    writeln!(
        stdout,
        "sweep: {} points x {} models -> {}",
        result.rows.len(),
        result.labels.len(),
        out.join("sweep.csv").display()
    )?;
    Ok(())
}

/// Optimizes the RIS for the configured scene and writes
/// `configuration.csv` and `optimize_report.csv`.
pub fn optimize(
    cfg: &RunConfig,
    config_dir: &Path,
    out: &Path,
    seed: u64,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let settings = cfg.discrete_settings()?;
    let scene = cfg.scene()?;
    scene.validate()?;
    let params = cfg.params()?;
    let model = RcsModelKind::Ris(cfg.diffraction()?);
    let terms = element_terms(&scene, &params, &model)?;
    let power = |c: &RisConfiguration<f64>| power_from_sum(&params, combine(&terms, c, cfg.summation));

    let outcome = optimize_discrete_terms(&terms, &settings)?;
    let amps = settings.amplitudes.as_deref();
    let mut stages = vec![
        ("uniform", power(&RisConfiguration::uniform(terms.len()))),
        ("quantized_start", power(&RisConfiguration::from_levels(&outcome.start_levels, settings.levels, amps)?)),
        ("greedy", power(&outcome.configuration)),
        ("continuous", power(&continuous_phases(&terms))),
    ];
    if let Some(path) = cfg.optimize.as_ref().and_then(|o| o.fixed_configuration.as_ref()) {
        let fixed = load_configuration(&config_dir.join(path))?;
        // length and amplitude checks
        let link = LinkModel::new(scene.clone(), params, model, fixed)?.with_summation(cfg.summation);
        stages.push(("fixed", power(&link.config)));
    }

    let mut comments = preamble("optimize", cfg, seed)?;
    comments.push(format!("levels = {}", settings.levels));
    comments.push(format!("sweeps = {}, converged = {}", outcome.sweeps, outcome.converged));

    let spec = cfg.surface_spec()?;
    let mut conf = comment_block(&comments);
    conf.push_str("element,row,col,level,phase_rad,alpha\n");
    for (n, (r, &m)) in outcome.configuration.responses().iter().zip(&outcome.levels).enumerate() {
        let (row, col) = spec.row_col(n);
        let _ = writeln!(conf, "{n},{row},{col},{m},{},{}", r.phi(), r.alpha());
    }
    write_file(out, "configuration.csv", &conf)?;

    let mut report = comment_block(&comments);
    report.push_str("stage,p_watts,p_dbm\n");
    for (name, p) in &stages {
        if !p.is_finite() {
            return Err(CliError::Other(format!("non-finite power in stage {name}")));
        }
        let _ = writeln!(report, "{name},{p:.12e},{:.9}", watts_to_dbm(*p));
        writeln!(stdout, "{name:>16}: {p:.6e} W ({:.3} dBm)", watts_to_dbm(*p))?;
    }
    write_file(out, "optimize_report.csv", &report)?;
    Ok(())
}

/// Reads a `configuration.csv` written by [`optimize`].
pub fn load_configuration(path: &Path) -> Result<RisConfiguration<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("optimize.fixed_configuration: cannot read {}: {e}", path.display())))?;
    let bad = |line: usize, why: &str| CliError::Config(format!("optimize.fixed_configuration line {line}: {why}"));
    let mut responses = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "element,row,col,level,phase_rad,alpha" {
                return Err(bad(i + 1, "unexpected header"));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(i + 1, "expected 6 columns"));
        }
        if fields[0].parse::<usize>().ok() != Some(responses.len()) {
            return Err(bad(i + 1, "elements must be listed in order from 0"));
        }
        let phi: f64 = fields[4].parse().map_err(|_| bad(i + 1, "phase_rad is not a number"))?;
        let alpha: f64 = fields[5].parse().map_err(|_| bad(i + 1, "alpha is not a number"))?;
        responses.push(element_response(phi, alpha).map_err(|e| bad(i + 1, &e.to_string()))?);
    }
    if !header_seen {
        return Err(bad(0, "missing header"));
    }
    Ok(RisConfiguration::continuous(responses))
}

/// Quadrature oracle against the closed-form cell cross section.
pub fn oracle_check(cfg: &RunConfig, out: &Path, seed: u64, stdout: &mut dyn Write) -> Result<(), CliError> {
    let section = cfg.oracle.as_ref().ok_or_else(|| CliError::Config("oracle: section required".into()))?;
    let quad = cfg.quadrature()?;
    let grid = cfg.oracle_grid()?;
    let lambda = cfg.lambda()?;
    let cells: Vec<(f64, f64)> = if section.cell_sizes_wavelengths.is_empty() {
        let s = cfg.surface_spec()?;
        vec![(s.d_v(), s.d_h())]
    } else {
        section.cell_sizes_wavelengths.iter().map(|c| (c * lambda, c * lambda)).collect()
    };

    let mut csv = comment_block(&preamble("oracle-check", cfg, seed)?);
    let _ = writeln!(
        csv,
        "# quadrature = {:?} {}x{}, threshold = {:e}",
        quad.rule(),
        quad.n_points_x(),
        quad.n_points_y(),
        section.threshold
    );
    csv.push_str("d_v_m,d_h_m,samples,max_rel_error,mean_rel_error,worst_theta_i,worst_phi_i,worst_theta_s,worst_phi_s,pass\n");
    let mut failures = Vec::new();
    for (d_v, d_h) in cells {
        let dims = CellDims::new(d_v, d_h, lambda)?;
        let r = compare_with_closed_form(&dims, &quad, &grid)?;
        let pass = r.max_rel_error < section.threshold;
        let w = r.worst;
        let worst = [w.theta_i, w.phi_i, w.theta_s, w.phi_s].map(|a| cfg.angle_out(a));
        let _ = writeln!(
            csv,
            "{d_v},{d_h},{},{:.6e},{:.6e},{},{},{},{},{pass}",
            r.samples, r.max_rel_error, r.mean_rel_error, worst[0], worst[1], worst[2], worst[3]
        );
        writeln!(
            stdout,
            "cell {d_v:.6} m x {d_h:.6} m: {} samples, max rel err {:.3e}, mean {:.3e}, worst at {:?} -> {}",
            r.samples,
            r.max_rel_error,
            r.mean_rel_error,
            worst,
            if pass { "PASS" } else { "FAIL" }
        )?;
        if !pass {
            failures.push(format!("{d_v} m x {d_h} m: {:.3e} >= {:e}", r.max_rel_error, section.threshold));
        }
    }
    write_file(out, "oracle_report.csv", &csv)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::OracleFailed(failures.join("; ")))
    }
}
