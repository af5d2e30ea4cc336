use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use aspot_core::apps::synthetic::{gradient_image, random_instance, registration_case, rng, scaling_instance};
use aspot_core::apps::{
    bench_scaling, color_transfer, color_transfer_instance, kmeans_quantize, read_ppm, read_xyz, recolor_pixels,
    register_point_clouds, write_ppm, write_xyz, PixelImage, RegistrationConfig, RegistrationResult, RigidTransform,
    ScalingConfig,
};
use aspot_core::{accept_partial, solve, solve_exact_with_limit, Error, PotInstance, SolverKind};
use serde_json::json;

use crate::output::{emit, plan_json, summary_json, warn_unconverged, write_json, write_trace};
use crate::{Command, Generate, SolverName};

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Solve {
            instance,
            solver,
            solver_args,
            out_dir,
        } => {
            let instance = load_instance(&instance)?;
            let config = solver_args.to_config()?;
            fs::create_dir_all(&out_dir)?;
            let outcome = accept_partial(solve(solver.into(), &instance, &config))?;
            warn_unconverged(&outcome);
            write_json(&out_dir.join("plan.json"), &plan_json(&outcome))?;
            write_trace(&out_dir.join("trace.csv"), &outcome)?;
            let summary = summary_json(&outcome, &instance, &config)?;
            write_json(&out_dir.join("summary.json"), &summary)?;
            emit!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        Command::Compare {
            instance,
            solvers,
            solver_args,
            out_dir,
        } => {
            let instance = load_instance(&instance)?;
            let config = solver_args.to_config()?;
            fs::create_dir_all(&out_dir)?;
            let mut combined = String::from("solver,t,E,phi,rounded_cost,elapsed_s\n");
            let mut summaries = Vec::new();
            for name in dedup(solvers) {
                let kind: SolverKind = name.into();
                let outcome = accept_partial(solve(kind, &instance, &config))?;
                warn_unconverged(&outcome);
                write_trace(&out_dir.join(format!("trace_{kind}.csv")), &outcome)?;
                for rec in outcome.trace.records() {
                    let cost = rec.rounded_cost.map_or(String::new(), |c| c.to_string());
                    writeln!(combined, "{kind},{},{},{},{cost},{}", rec.t, rec.error, rec.phi, rec.elapsed)?;
                }
                let summary = summary_json(&outcome, &instance, &config)?;
                emit!(
                    "{kind}: {} iterations, converged {}, cost {:.6}",
                    outcome.iterations, outcome.converged, summary["cost"]
                );
                summaries.push(summary);
            }
            fs::write(out_dir.join("compare.csv"), combined)?;
            write_json(&out_dir.join("summary.json"), &summaries)?;
            Ok(())
        }
        Command::Oracle {
            instance,
            max_size,
            out_dir,
        } => {
            let instance = load_instance(&instance)?;
            let exact = solve_exact_with_limit(&instance, max_size)?;
            let x = exact.plan.matrix();
            let doc = json!({
                "value": exact.value,
                "X": x.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
            });
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir)?;
                write_json(&dir.join("oracle.json"), &doc)?;
            }
            emit!("{}", json!({ "value": exact.value }));
            Ok(())
        }
        Command::BenchScaling {
            sizes,
            seed,
            solver,
            gamma,
            tol,
            max_iter,
            repeats,
            out_dir,
        } => {
            let config = ScalingConfig {
                sizes,
                seed,
                solver: solver.into(),
                gamma,
                tolerance: tol,
                iterations: max_iter,
                repeats,
                ..ScalingConfig::default()
            };
            let report = bench_scaling(&config)?;
            let mut csv = String::from("n,seconds,iterations,converged\n");
            for p in &report.points {
                writeln!(csv, "{},{},{},{}", p.n, p.seconds, p.iterations, p.converged)?;
            }
            emit!("{}", csv.trim_end());
            emit!("slope,{:.4}", report.slope);
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("scaling.csv"), &csv)?;
                write_json(&dir.join("scaling.json"), &report)?;
            }
            Ok(())
        }
        Command::ColorTransfer {
            source,
            target,
            colors,
            s_frac,
            seed,
            solver,
            solver_args,
            out_dir,
        } => {
            let config = solver_args.to_config()?;
            let src = read_ppm(&source)?;
            let tgt = read_ppm(&target)?;
            let hs = kmeans_quantize(&src.pixels, colors, seed)?;
            let ht = kmeans_quantize(&tgt.pixels, colors, seed.wrapping_add(1))?;
            let instance = color_transfer_instance(&hs, &ht, s_frac)?;
            let result = color_transfer(&hs, &ht, s_frac, solver.into(), &config)?;
            warn_unconverged(&result.outcome);
            fs::create_dir_all(&out_dir)?;
            let pixels = recolor_pixels(&hs, &result.recolored).mapv(|v| v.clamp(0.0, 1.0));
            write_ppm(out_dir.join("recolored.ppm"), &PixelImage::new(src.width, src.height, pixels)?)?;
            fs::write(out_dir.join("instance.json"), instance.to_json())?;
            write_trace(&out_dir.join("trace.csv"), &result.outcome)?;
            let summary = summary_json(&result.outcome, &instance, &config)?;
            write_json(&out_dir.join("summary.json"), &summary)?;
            emit!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        Command::Register {
            source,
            target,
            solver,
            config,
            alpha,
            gamma0,
            anneal_rate,
            max_registrations,
            epsilon,
            max_iter,
            block_rule,
            out_dir,
        } => {
            let mut reg: RegistrationConfig = match config {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => RegistrationConfig::default(),
            };
            set(&mut reg.alpha, alpha);
            set(&mut reg.gamma0, gamma0);
            set(&mut reg.anneal_rate, anneal_rate);
            set(&mut reg.max_registrations, max_registrations);
            set(&mut reg.solver_epsilon, epsilon);
            set(&mut reg.max_inner_iterations, max_iter);
            set(&mut reg.block_rule, block_rule.map(Into::into));
            let src = read_xyz(&source)?;
            let tgt = read_xyz(&target)?;
            let result = match register_point_clouds(&tgt, &src, &reg, solver.into()) {
                Ok(r) => r,
                Err(Error::NoConvergence(partial)) => {
                    eprintln!(
                        "warning: registration did not settle within {} rounds; writing the last transform",
                        reg.max_registrations
                    );
                    *partial
                }
                Err(e) => return Err(e.into()),
            };
            fs::create_dir_all(&out_dir)?;
            write_registration(&out_dir, &result, &src, &reg, solver)
        }
        Command::Generate { what } => generate(what),
    }
}

fn load_instance(path: &Path) -> CliResult<PotInstance> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(PotInstance::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn dedup(mut names: Vec<SolverName>) -> Vec<SolverName> {
    let mut seen = Vec::new();
    names.retain(|n| {
        let fresh = !seen.contains(n);
        seen.push(*n);
        fresh
    });
    names
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn transform_json(t: &RigidTransform) -> serde_json::Value {
    let r = t.rotation;
    json!({
        "rotation": (0..3).map(|i| (0..3).map(|j| r[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "translation": [t.translation.x, t.translation.y, t.translation.z],
    })
}

fn write_registration(
    dir: &Path,
    result: &RegistrationResult,
    source: &ndarray::Array2<f64>,
    config: &RegistrationConfig,
    solver: SolverName,
) -> CliResult<()> {
    write_xyz(dir.join("registered.xyz"), &result.transform.apply(source))?;
    let mut csv = String::from(
        "registration,gamma,inner_iterations,accumulated_iterations,inner_converged,matching_cost,increment\n",
    );
    for r in &result.records {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.registration, r.gamma, r.inner_iterations, r.accumulated_iterations, r.inner_converged, r.matching_cost, r.increment
        )?;
    }
    fs::write(dir.join("registrations.csv"), csv)?;
    write_json(&dir.join("transform.json"), &transform_json(&result.transform))?;
    let summary = json!({
        "solver": SolverKind::from(solver).name(),
        "converged": result.converged,
        "registrations": result.records.len(),
        "accumulated_iterations": result.records.last().map_or(0, |r| r.accumulated_iterations),
        "final_increment": result.records.last().map(|r| r.increment),
        "config": config,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    emit!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn generate(what: Generate) -> CliResult<()> {
    match what {
        Generate::Random { rows, cols, seed, out } => {
            let inst = random_instance(&mut rng(seed), rows, cols)?;
            fs::write(out, inst.to_json())?;
        }
        Generate::Scaling { n, seed, out } => {
            fs::write(out, scaling_instance(n, seed)?.to_json())?;
        }
        Generate::Images { size, seed, out_dir } => {
            fs::create_dir_all(&out_dir)?;
            let warm = [[0.9, 0.2, 0.1], [0.9, 0.8, 0.1], [0.3, 0.1, 0.5], [0.1, 0.1, 0.2]];
            let cool = [[0.1, 0.3, 0.8], [0.2, 0.8, 0.9], [0.1, 0.5, 0.2], [0.9, 0.9, 0.9]];
            write_ppm(out_dir.join("source.ppm"), &gradient_image(size, size, warm, seed))?;
            write_ppm(out_dir.join("target.ppm"), &gradient_image(size, size, cool, seed.wrapping_add(1)))?;
        }
        Generate::Clouds {
            n,
            overlap,
            angle,
            seed,
            out_dir,
        } => {
            if !(0.0..=1.0).contains(&overlap) || n < 3 {
                return Err("overlap must lie in [0, 1] and n must be at least 3".into());
            }
            fs::create_dir_all(&out_dir)?;
            let case = registration_case(n, overlap, angle, seed);
            // `register source target` moves source onto target, so the
            // rotated cloud is the source and the expected answer maps q to p.
            write_xyz(out_dir.join("source.xyz"), &case.q)?;
            write_xyz(out_dir.join("target.xyz"), &case.p)?;
            let mut truth = transform_json(&case.truth.inverse());
            truth["diameter"] = json!(case.diameter);
            write_json(&out_dir.join("truth.json"), &truth)?;
        }
    }
    Ok(())
}
