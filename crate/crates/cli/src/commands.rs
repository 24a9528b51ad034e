//! Subcommand bodies. Each returns its exit status on completion.

use std::io::Write;

use anyhow::{Context, Result};
use drops2d::energy::{self, ball_energy, Potential};
use drops2d::equilibrium::{extrapolated_energy, solve_region, EquilibriumSolution};
use drops2d::geometry::{boundary_trace, io::regions_to_svg, BoundaryTrace, Region};
use drops2d::minimizer::{self, continue_flow, initial_state, FlowConfig, FlowState, Termination};
use drops2d::quadrature::MeshConfig;
use drops2d::relaxation::{build_recovery_step_with, run_convergence_study, RelaxationConfig};
use drops2d::shape_calculus::{
    euler_lagrange_residual, first_variation_cap1, first_variation_i1, half_normal_derivative, VectorField,
};
use drops2d::verify::{run_criterion, VerifyOptions, VerifyReport, CRITERIA};
use serde_json::{json, Value};

use crate::config::{
    grid_path, load_region, parse_field, parse_potential, CapacityArgs, Command, ElResidualArgs, EnergyArgs, FieldSpec,
    MeshArgs, MinimizeArgs, RelaxArgs, VariationArgs, VerifyArgs,
};
use crate::manifest::Run;
use crate::CliError;

const SVG_SIZE: f64 = 600.0;

pub fn dispatch(run: &mut Run) -> Result<u8> {
    match run.config.command.clone() {
        Command::Capacity(a) => capacity(run, &a),
        Command::Energy(a) => energy_cmd(run, &a),
        Command::Relax(a) => relax(run, &a),
        Command::Variation(a) => variation(run, &a),
        Command::ElResidual(a) => el_residual(run, &a),
        Command::Minimize(a) => minimize(run, &a),
        Command::Verify(a) => verify(run, &a),
    }
}

fn region(run: &mut Run, spec: &str) -> Result<Region> {
    run.record_input(spec);
    Ok(load_region(spec)?)
}

fn potential(run: &mut Run, spec: &str) -> Result<Potential> {
    if let Some(path) = grid_path(spec) {
        run.record_input(path);
    }
    Ok(parse_potential(spec)?)
}

fn mesh_cfg(m: &MeshArgs) -> MeshConfig {
    MeshConfig::new(m.h).refined(m.refine)
}

fn solve(region: &Region, m: &MeshArgs) -> Result<EquilibriumSolution> {
    Ok(solve_region(region, &mesh_cfg(m))?)
}

fn traced(region: &Region, sol: &EquilibriumSolution) -> Result<BoundaryTrace> {
    Ok(half_normal_derivative(region, sol, &boundary_trace(region)?)?)
}

/// Writes the payload, records it as the run's outputs and echoes it.
fn emit(run: &mut Run, name: &str, result: &Value) -> Result<()> {
    let payload = run.write_json(name, result)?;
    run.set_outputs(result.clone());
    println!("{}", serde_json::to_string_pretty(&payload)?);
    Ok(())
}

fn capacity(run: &mut Run, a: &CapacityArgs) -> Result<u8> {
    let region = region(run, &a.region)?;
    let sol = solve(&region, &a.mesh)?;
    if a.cells {
        sol.write_mass_csv(run.path("masses.csv"))?;
        run.stamp_csv("masses.csv")?;
    }
    let extrapolated = if a.extrapolate {
        Some(extrapolated_energy(&region, &mesh_cfg(&a.mesh))?)
    } else {
        None
    };
    let result = json!({ "equilibrium": sol.report(), "extrapolated": extrapolated });
    emit(run, "capacity.json", &result)?;
    Ok(0)
}

fn energy_cmd(run: &mut Run, a: &EnergyArgs) -> Result<u8> {
    let g = potential(run, &a.g)?;
    let region = region(run, &a.region)?;
    let sol = solve(&region, &a.mesh)?;
    let report = energy::evaluate(&region, &sol, &g, a.lambda)?;
    let mut result = json!({ "report": report, "equilibrium": sol.report() });
    if a.compare_ball {
        let ball = ball_energy(region.area(), a.lambda, &g, region.centroid())?;
        result["ball"] = json!(ball);
        result["relative_excess"] = json!((report.energy - ball.energy) / ball.energy.abs());
    }
    emit(run, "energy.json", &result)?;
    Ok(0)
}

fn relax(run: &mut Run, a: &RelaxArgs) -> Result<u8> {
    let region = region(run, &a.region)?;
    let cfg = RelaxationConfig::new(a.h);
    let rep = run_convergence_study(&region, a.lambda, &a.n, &a.big_r, &cfg)?;
    rep.write_csv(run.path("relax.csv"))?;
    run.stamp_csv("relax.csv")?;
    if a.svg {
        for row in rep.rows.iter().filter(|r| r.energy.is_some() && r.n > 0) {
            let omega = build_recovery_step_with(
                &region,
                a.lambda,
                rep.lambda_omega,
                row.n,
                row.big_r,
                cfg.satellite_vertices,
            )?;
            let name = format!("omega_n{}_R{}.svg", row.n, row.big_r);
            run.write_svg(&name, &regions_to_svg(&[&omega], SVG_SIZE))?;
        }
    }
    emit(run, "relax.json", &json!(rep))?;
    Ok(0)
}

fn variation(run: &mut Run, a: &VariationArgs) -> Result<u8> {
    let spec = parse_field(&a.field)?;
    let region = region(run, &a.region)?;
    let sol = solve(&region, &a.mesh)?;
    let trace = traced(&region, &sol)?;
    let zeta = match spec {
        FieldSpec::Dilation(c) => VectorField::Dilation { center: c },
        FieldSpec::Translation(e) => VectorField::Translation { e },
        FieldSpec::Bump(v, w) => {
            if v >= trace.len() {
                return Err(CliError::Validation(format!(
                    "--field bump vertex {v} is out of range; the boundary has {} vertices",
                    trace.len()
                ))
                .into());
            }
            VectorField::normal_bump_at(&trace, v, w)
        }
    };
    let i1 = first_variation_i1(&region, &sol, &trace, &zeta)?;
    let cap1 = first_variation_cap1(&region, &sol, &trace, &zeta)?;
    emit(run, "variation.json", &json!({ "I1": i1, "cap1": cap1 }))?;
    Ok(0)
}

fn write_residual_csv(run: &mut Run, name: &str, trace: &BoundaryTrace, g: &Potential) -> Result<()> {
    let path = run.path(name);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "ring,s,x,y,kappa,D,g,R,flagged")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for (k, range) in trace.rings.iter().enumerate() {
        let mut s = 0.0;
        for i in range.clone() {
            let p = &trace.points[i];
            if i > range.start {
                s += p.position.distance(trace.points[i - 1].position);
            }
            writeln!(
                f,
                "{k},{s:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{},{}",
                p.position.x,
                p.position.y,
                p.curvature,
                opt(p.half_derivative),
                g.value(p.position),
                opt(p.residual),
                p.flagged as u8
            )?;
        }
    }
    f.flush()?;
    drop(f);
    run.stamp_csv(name)?;
    Ok(())
}

fn el_residual(run: &mut Run, a: &ElResidualArgs) -> Result<u8> {
    let g = potential(run, &a.g)?;
    let region = region(run, &a.region)?;
    let sol = solve(&region, &a.mesh)?;
    let el = euler_lagrange_residual(&traced(&region, &sol)?, &g, a.lambda)?;
    write_residual_csv(run, "el_residual.csv", &el, &g)?;
    let result = json!({
        "lambda": a.lambda,
        "potential": g,
        "multiplier": el.multiplier,
        "max_abs_residual": el.max_abs_residual(),
        "l2_residual": el.l2_residual(),
        "criticality": el.max_abs_residual().map(|r| r * region.diameter()),
        "vertices": el.len(),
        "flagged": el.flagged_count(),
        "I1": sol.i1,
    });
    emit(run, "el_residual.json", &result)?;
    Ok(0)
}

fn flow_summary(state: &FlowState, cfg: &FlowConfig) -> Result<Value> {
    let center = cfg
        .potential
        .argmin()
        .first()
        .copied()
        .unwrap_or_else(|| state.region.centroid());
    let ball = ball_energy(cfg.mass, cfg.lambda, &cfg.potential, center)?;
    Ok(json!({
        "termination": state.termination,
        "iterations": state.iteration,
        "report": state.report,
        "criticality": state.criticality(),
        "max_residual": state.max_residual(),
        "centroid": state.region.centroid(),
        "ball": ball,
        "ball_distance": minimizer::rescaled_ball_distance(&state.region),
        "config": cfg,
    }))
}

fn write_flow(run: &mut Run, state: &FlowState, frames: &[Region]) -> Result<()> {
    state.write_history_csv(run.path("history.csv"))?;
    run.stamp_csv("history.csv")?;
    run.write_region("final_region.json", &state.region)?;
    if !frames.is_empty() {
        let refs: Vec<&Region> = frames.iter().chain(std::iter::once(&state.region)).collect();
        run.write_svg("filmstrip.svg", &regions_to_svg(&refs, SVG_SIZE))?;
    }
    Ok(())
}

fn minimize(run: &mut Run, a: &MinimizeArgs) -> Result<u8> {
    let g = potential(run, &a.g)?;
    let cfg = FlowConfig {
        h: a.h,
        hb: a.hb,
        beta: a.beta,
        eps_stop: a.eps,
        max_iters: a.max_iters,
        refresh: a.refresh,
        ..FlowConfig::new(a.lambda, a.mass, g)
    };
    cfg.validate()?;
    let seed = region(run, &a.seed)?;
    let mut state = initial_state(&seed, &cfg)?;
    let mut frames = Vec::new();
    let step = if a.frame_every == 0 {
        a.max_iters.max(1)
    } else {
        a.frame_every
    };
    loop {
        if a.frame_every > 0 {
            frames.push(state.region.clone());
        }
        let chunk = FlowConfig {
            max_iters: (state.iteration + step).min(a.max_iters),
            ..cfg.clone()
        };
        state = match continue_flow(state, &chunk) {
            Ok(s) => s,
            Err(drops2d::Error::StalledFlow { reason, state }) => {
                write_flow(run, &state, &frames)?;
                run.set_outputs(flow_summary(&state, &cfg)?);
                return Err(drops2d::Error::StalledFlow { reason, state }.into());
            }
            Err(e) => return Err(e.into()),
        };
        if state.termination == Some(Termination::Converged) || state.iteration >= a.max_iters {
            break;
        }
        state.termination = None;
    }
    write_flow(run, &state, &frames)?;
    let summary = flow_summary(&state, &cfg)?;
    emit(run, "summary.json", &summary)?;
    Ok(0)
}

fn verify(run: &mut Run, a: &VerifyArgs) -> Result<u8> {
    let opts = VerifyOptions {
        tolerance_scale: a.tolerance_scale,
        quick: a.quick,
        seed: run.config.rng_seed,
    };
    let ids: Vec<u32> = if a.criteria.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        a.criteria.clone()
    };
    let mut results = Vec::with_capacity(ids.len());
    let mut out = std::io::stdout();
    for id in ids {
        let r = run_criterion(id, &opts);
        writeln!(out, "{}", r.line())?;
        out.flush()?;
        results.push(r);
    }
    let report = VerifyReport { options: opts, results };
    let failed = report
        .results
        .iter()
        .filter(|r| {
            !matches!(
                r.outcome,
                drops2d::verify::Outcome::Pass | drops2d::verify::Outcome::Skipped
            )
        })
        .count();
    writeln!(out, "{} criteria run, {} failed", report.results.len(), failed)?;
    let payload = run
        .write_json("verify.json", &report)
        .context("writing the verify report")?;
    run.set_outputs(payload["result"].clone());
    Ok(if report.all_passed() {
        0
    } else {
        crate::EXIT_VERIFY_FAILED
    })
}
