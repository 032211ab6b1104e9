//! The six analysis commands. Each builds its tables, renders plots from
//! the table contents and returns a JSON summary for the manifest.

use std::str::FromStr;

use serde_json::json;

use super::config::{GapScanMode, RunConfig};
use super::plot::{BarChart, Heatmap, LinePlot, Series};
use super::table::{complex_columns, complex_values, ResultTable, Value};
use super::{CliError, Command, Outputs};
use crate::detection::{detection_spectrum, ProbeSpec};
use crate::evolution::{
    evolve_with, occupancy_trajectory, sweep_fidelity, EvolveOptions, RampSchedule, SweepRequest, PHASE_THRESHOLD,
};
use crate::model::{build_hamiltonian, chiral_defect, sample_disorder, LatticeSpec, SiteIndex, Variant};
use crate::spectral::{
    analytic_zero_mode, gap_vs_location, gap_vs_size, spectrum_vs_theta, uniform_grid, zero_mode, zero_mode_gap,
    GapScan,
};

pub fn run(command: Command, config: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    match command {
        Command::Spectrum => spectrum(config, out),
        Command::Zeromode => zeromode(config, out),
        Command::GapScan => gap_scan(config, out),
        Command::Evolve => evolve(config, out),
        Command::Sweep => sweep(config, out),
        Command::Detect => detect(config, out),
    }
}

fn site_labels(l: usize) -> Vec<String> {
    (0..l).map(|k| SiteIndex::from_ordinal(k).to_string()).collect()
}

fn provenance(table: &mut ResultTable, command: Command, config: &RunConfig, lattice: Option<&LatticeSpec>) {
    table.note(format!("toporouter {} {}", env!("CARGO_PKG_VERSION"), command.name()));
    if let Some(l) = lattice {
        table.note(format!("lattice {}", serde_json::to_string(l).expect("lattice serializes")));
    }
    table.note(format!("seed {}", config.seed));
}

fn require(ok: bool, message: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Invalid(message()))
    }
}

fn spectrum(config: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let b = &config.spectrum;
    require(b.theta_points >= 1, || "spectrum.theta_points must be at least 1".into())?;
    require(b.theta_min.is_finite() && b.theta_max.is_finite() && b.theta_min <= b.theta_max, || {
        "spectrum theta range must be finite and ordered".into()
    })?;
    let spec = &config.lattice;
    let l = spec.num_sites();
    let rows = spectrum_vs_theta(spec, &uniform_grid(b.theta_min, b.theta_max, b.theta_points))?;

    let mut eig = ResultTable::new(std::iter::once("theta".to_string()).chain((0..l).map(|k| format!("e{k}"))));
    provenance(&mut eig, Command::Spectrum, config, Some(spec));
    let labels = site_labels(l);
    let mut dens =
        ResultTable::new(["theta".to_string(), "zero_energy".to_string()].into_iter().chain(labels.iter().cloned()));
    provenance(&mut dens, Command::Spectrum, config, Some(spec));
    let mut max_zero = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for r in &rows {
        eig.push(std::iter::once(r.theta).chain(r.eigenvalues.iter().copied()).map(Value::Real).collect());
        dens.push(
            [r.theta, r.zero_energy].into_iter().chain(r.zero_mode_density.iter().copied()).map(Value::Real).collect(),
        );
        max_zero = max_zero.max(r.zero_energy.abs());
        min_gap = min_gap.min(zero_mode_gap(&r.eigenvalues).0);
    }
    out.write_table("spectrum.csv", &eig)?;
    out.write_table("zero_mode_density.csv", &dens)?;

    let theta = eig.column("theta").expect("theta column");
    let series = (0..l)
        .map(|k| {
            let e = eig.column(&format!("e{k}")).expect("eigenvalue column");
            Series { name: format!("e{k}"), points: theta.iter().copied().zip(e).collect() }
        })
        .collect();
    let plot = LinePlot {
        title: "Spectrum versus theta".into(),
        x_label: "theta".into(),
        y_label: "E / J".into(),
        series,
        legend: false,
    };
    out.write_svg("spectrum.svg", &plot.to_svg())?;
    let heat = Heatmap {
        title: "Zero-mode density".into(),
        x_label: "theta".into(),
        y_label: "site".into(),
        x: theta,
        values: labels.iter().map(|s| dens.column(s).expect("site column")).collect(),
        y_labels: labels,
    };
    out.write_svg("zero_mode_density.svg", &heat.to_svg())?;
    Ok(json!({ "rows": rows.len(), "max_abs_zero_energy": max_zero, "min_zero_mode_gap": min_gap }))
}

fn zeromode(config: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let spec = &config.lattice;
    let theta = config.zeromode.theta;
    require(theta.is_finite(), || "zeromode.theta must be finite".into())?;
    let h = build_hamiltonian(spec, theta, None)?;
    let zm = zero_mode(&h)?;
    let state = &zm.state;
    let reference = SiteIndex::a(1);
    let ref_amp = state.amplitude(reference);
    // fall back to the gauge pivot when a_1 carries no weight
    let ref_phase = if ref_amp.norm() >= PHASE_THRESHOLD { ref_amp.arg() } else { 0.0 };
    let [re, im] = complex_columns("amplitude");
    let mut t = ResultTable::new(["site".to_string(), "ordinal".into(), "population".into(), "phase".into(), re, im]);
    provenance(&mut t, Command::Zeromode, config, Some(spec));
    t.note(format!("theta {theta:.17e}"));
    t.note(format!(
        "phase reference {}",
        if ref_amp.norm() >= PHASE_THRESHOLD { reference.to_string() } else { "largest component".into() }
    ));
    for (k, z) in state.amplitudes().iter().enumerate() {
        let phase = (z.norm() >= PHASE_THRESHOLD).then(|| crate::evolution::wrap_phase(z.arg() - ref_phase));
        let [zr, zi] = complex_values(*z);
        t.push(vec![
            SiteIndex::from_ordinal(k).to_string().into(),
            k.into(),
            z.norm_sqr().into(),
            phase.into(),
            zr,
            zi,
        ]);
    }
    out.write_table("mode.csv", &t)?;
    let bars = BarChart {
        title: format!("Zero mode at theta = {theta:.4}"),
        x_label: "site".into(),
        y_label: "|psi|^2".into(),
        labels: t.rows().iter().map(|r| if let Value::Text(s) = &r[0] { s.clone() } else { String::new() }).collect(),
        values: t.column("population").expect("population column"),
    };
    out.write_svg("mode.svg", &bars.to_svg())?;
    let overlap = match spec.variant() {
        Variant::BasePorts => Some(analytic_zero_mode(spec, theta)?.inner(state).norm()),
        Variant::ExtraHop { .. } => None,
    };
    Ok(json!({
        "theta": theta,
        "energy": zm.energy,
        "eigen_index": zm.index,
        "chiral_defect": zm.chiral_defect,
        "b_sublattice_weight": state.b_weight(),
        "analytic_overlap": overlap,
    }))
}

fn gap_scan(config: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let b = &config.gap_scan;
    require(b.grid_points >= 1, || "gap_scan.grid_points must be at least 1".into())?;
    if let Some(tol) = b.refine_to {
        require(tol.is_finite() && tol > 0.0, || format!("gap_scan.refine_to must be positive, got {tol}"))?;
    }
    let scan = GapScan { grid_points: b.grid_points, refine_to: b.refine_to };
    let (name, key, reports) = match b.mode {
        GapScanMode::Location => {
            require(!b.m_list.is_empty(), || "gap_scan.m_list is empty".into())?;
            ("gap_vs_m.csv", "m", gap_vs_location(&config.lattice, &b.m_list, &scan)?)
        }
        GapScanMode::Size => {
            require(!b.l_list.is_empty(), || "gap_scan.l_list is empty".into())?;
            ("gap_vs_L.csv", "L", gap_vs_size(&b.l_list, &scan)?)
        }
    };
    let mut t = ResultTable::new([key, "delta_e", "theta_at_min", "zero_mode_index"]);
    provenance(&mut t, Command::GapScan, config, (b.mode == GapScanMode::Location).then_some(&config.lattice));
    t.note(format!(
        "grid {} points on [0, 2pi], refinement {}",
        b.grid_points,
        b.refine_to.map_or("off".into(), |r| format!("{r:e}"))
    ));
    for (k, r) in &reports {
        t.push(vec![(*k).into(), r.delta_e.into(), r.theta_at_min.into(), r.zero_mode_index.into()]);
    }
    out.write_table(name, &t)?;
    let keys = t.column(key).expect("key column");
    let gaps = t.column("delta_e").expect("gap column");
    let svg = match b.mode {
        GapScanMode::Location => BarChart {
            title: "Minimal gap versus hop target".into(),
            x_label: "m".into(),
            y_label: "Delta_E / J".into(),
            labels: keys.iter().map(|m| format!("a{m}")).collect(),
            values: gaps,
        }
        .to_svg(),
        GapScanMode::Size => LinePlot {
            title: "Minimal gap versus lattice size".into(),
            x_label: "L".into(),
            y_label: "Delta_E / J".into(),
            series: vec![Series { name: "Delta_E".into(), points: keys.into_iter().zip(gaps).collect() }],
            legend: false,
        }
        .to_svg(),
    };
    out.write_svg("plot.svg", &svg)?;
    let rows: Vec<_> =
        reports.iter().map(|(k, r)| json!({ key: k, "delta_e": r.delta_e, "theta_at_min": r.theta_at_min })).collect();
    Ok(json!({ "mode": b.mode, "gaps": rows }))
}

fn evolve(config: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let b = &config.evolve;
    let spec = &config.lattice;
    let ramp = RampSchedule::new(b.omega, b.dt)?;
    let disorder =
        b.disorder.as_ref().map(|d| sample_disorder(spec, d.kind, d.w, d.seed.unwrap_or(config.seed))).transpose()?;
    let options = EvolveOptions { sample_stride: b.sample_stride, track_gap: b.track_gap };
    let r = evolve_with(spec, &ramp, disorder.as_ref(), &options)?;
    let labels = site_labels(spec.num_sites());

    let mut traj = ResultTable::new(["t".to_string(), "theta".to_string()].into_iter().chain(labels.iter().cloned()));
    provenance(&mut traj, Command::Evolve, config, Some(spec));
    traj.note(format!("omega {:e} dt {} stride {}", b.omega, b.dt, b.sample_stride));
    for s in occupancy_trajectory(&r) {
        traj.push([s.t, s.theta].into_iter().chain(s.populations.iter().copied()).map(Value::Real).collect());
    }
    out.write_table("trajectory.csv", &traj)?;

    let [re, im] = complex_columns("amplitude");
    let mut fin = ResultTable::new([
        "site".to_string(),
        "population".into(),
        re,
        im,
        "phase_vs_a1".into(),
        "phase_vs_input".into(),
        "target".into(),
    ]);
    provenance(&mut fin, Command::Evolve, config, Some(spec));
    let target = crate::evolution::target_state(spec);
    for (k, z) in r.final_state.amplitudes().iter().enumerate() {
        let [zr, zi] = complex_values(*z);
        fin.push(vec![
            labels[k].clone().into(),
            z.norm_sqr().into(),
            zr,
            zi,
            r.phase_profile[k].into(),
            r.input_phases[k].into(),
            target.amplitudes()[k].re.into(),
        ]);
    }
    out.write_table("final_state.csv", &fin)?;

    let t = traj.column("t").expect("time column");
    let mut shown = spec.output_ports();
    if !shown.contains(&spec.input_port()) {
        shown.push(spec.input_port());
    }
    let series = shown
        .iter()
        .map(|s| {
            let p = traj.column(&s.to_string()).expect("site column");
            Series { name: s.to_string(), points: t.iter().copied().zip(p).collect() }
        })
        .collect();
    let plot = LinePlot {
        title: format!("Populations along the ramp (F = {:.6})", r.fidelity),
        x_label: "t (1/J)".into(),
        y_label: "|psi|^2".into(),
        series,
        legend: true,
    };
    out.write_svg("evolve.svg", &plot.to_svg())?;
    Ok(json!({
        "fidelity": r.fidelity,
        "norm_drift": r.norm_drift,
        "zero_energy_gap_min": r.zero_energy_gap_min,
        "steps": r.steps,
        "t_final": ramp.t_final(),
        "adiabatic_criterion": r.zero_energy_gap_min.map(|g| crate::spectral::is_adiabatic(b.omega, g)),
        "chiral_defect": chiral_defect(&build_hamiltonian(spec, 0.0, disorder.as_ref())?),
        "disorder": disorder,
    }))
}

fn sweep(config: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let b = &config.sweep;
    require(!b.omega_grid.is_empty() && !b.w_grid.is_empty(), || "sweep grids must be non-empty".into())?;
    require(b.n_seeds >= 1, || "sweep.n_seeds must be at least 1".into())?;
    let runs = b.omega_grid.len() * b.w_grid.len() * b.n_seeds;
    require(runs <= b.max_runs, || format!("sweep needs {runs} runs, above max_runs = {}", b.max_runs))?;
    let req = SweepRequest {
        omega_grid: b.omega_grid.clone(),
        w_grid: b.w_grid.clone(),
        kind: b.kind,
        n_seeds: b.n_seeds,
        base_seed: config.seed,
        dt: b.dt,
    };
    let cells = sweep_fidelity(&config.lattice, &req)?;
    let mut t = ResultTable::new(["log10_omega", "omega", "w", "mean_fidelity", "min_fidelity", "max_fidelity"]);
    provenance(&mut t, Command::Sweep, config, Some(&config.lattice));
    t.note(format!("disorder {:?}, {} seeds per cell, dt {}", b.kind, b.n_seeds, b.dt));
    for c in &cells {
        t.push(vec![
            c.log10_omega.into(),
            c.omega.into(),
            c.w.into(),
            c.mean_fidelity.into(),
            c.min_fidelity.into(),
            c.max_fidelity.into(),
        ]);
    }
    out.write_table("heatmap.csv", &t)?;
    let mean = t.column("mean_fidelity").expect("mean column");
    let nw = b.w_grid.len();
    let heat = Heatmap {
        title: format!("Mean fidelity ({:?} disorder)", b.kind),
        x_label: "log10(omega)".into(),
        y_label: "W".into(),
        x: t.column("log10_omega").expect("omega column").iter().step_by(nw).copied().collect(),
        y_labels: b.w_grid.iter().map(|w| format!("{w}")).collect(),
        values: (0..nw).map(|w| mean.iter().skip(w).step_by(nw).copied().collect()).collect(),
    };
    out.write_svg("heatmap.svg", &heat.to_svg())?;
    let worst = cells.iter().map(|c| c.min_fidelity).fold(f64::INFINITY, f64::min);
    Ok(json!({ "cells": cells.len(), "runs": runs, "min_fidelity": worst }))
}

fn detect(config: &RunConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let b = &config.detect;
    let spec = &config.lattice;
    require(b.kappa.is_finite() && b.kappa > 0.0, || format!("detect.kappa must be positive, got {}", b.kappa))?;
    require(b.detuning_points >= 1, || "detect.detuning_points must be at least 1".into())?;
    require(b.theta.is_finite() && b.amplitude.is_finite(), || "detect.theta and amplitude must be finite".into())?;
    let site = match &b.drive_site {
        Some(s) => SiteIndex::from_str(s)?,
        None => spec.input_port(),
    };
    spec.check_site(site)?;
    let grid = uniform_grid(b.detuning_min, b.detuning_max, b.detuning_points);
    let probe = ProbeSpec { drive_site: site, amplitude: b.amplitude, kappa: b.kappa };
    let s = detection_spectrum(spec, b.theta, &probe, &grid)?;
    let labels = site_labels(spec.num_sites());
    let mut t = ResultTable::new(["detuning", "site", "ordinal", "magnitude", "population"]);
    provenance(&mut t, Command::Detect, config, Some(spec));
    t.note(format!("theta {:.17e}, drive {site} amplitude {} kappa {}", b.theta, b.amplitude, b.kappa));
    for row in &s.rows {
        for (k, label) in labels.iter().enumerate() {
            t.push(vec![
                row.detuning.into(),
                label.clone().into(),
                k.into(),
                row.magnitudes[k].into(),
                row.populations[k].into(),
            ]);
        }
    }
    out.write_table("detection.csv", &t)?;
    let l = labels.len();
    let pops = t.column("population").expect("population column");
    let heat = Heatmap {
        title: format!("Steady-state population, drive at {site}"),
        x_label: "detuning (J)".into(),
        y_label: "site".into(),
        x: t.column("detuning").expect("detuning column").iter().step_by(l).copied().collect(),
        values: (0..l).map(|k| pops.iter().skip(k).step_by(l).copied().collect()).collect(),
        y_labels: labels,
    };
    out.write_svg("detection.svg", &heat.to_svg())?;
    let res = s.resonance();
    let total: f64 = res.populations.iter().sum();
    Ok(json!({
        "drive_site": site.to_string(),
        "resonance_detuning": res.detuning,
        "resonance_total_population": total,
        "resonance_populations": res.populations,
        "dominant_sites": s.dominant_sites.iter().map(ToString::to_string).collect::<Vec<_>>(),
    }))
}
