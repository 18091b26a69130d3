use anyhow::{Context as _, Result};
use plaquette::protocols::{
    run_identification, run_phase_estimation, run_production, Interferometer, ProtocolConfig,
    ProtocolReport,
};
use serde::Serialize;

use super::{protocol_config, scalar, symbols, Context};
use crate::args::{ProtocolArgs, ProtocolCommand};
use crate::expr::{grid, Spacing};
use crate::output::{num, opt_num, write_csv, write_json};
use crate::settings::pick;

pub const DEFAULT_VARPHI_GRID: &str = "0:pi/P:50";

#[derive(Debug, Serialize)]
struct ProtocolRun {
    command: &'static str,
    protocol: &'static str,
    config: ProtocolConfig,
    seed: u64,
    shots: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    varphi_grid: Option<String>,
}

#[derive(Debug, Serialize)]
struct ProtocolOutput<'a> {
    run: ProtocolRun,
    passed: bool,
    report: &'a ProtocolReport,
}

struct Prepared {
    cfg: ProtocolConfig,
    shots: usize,
}

fn prepare(ctx: &Context, common: &ProtocolArgs, phi: Option<String>) -> Result<Prepared> {
    let f = &ctx.file;
    let mut cfg = protocol_config(&common.model, f);
    let band = cfg.band()?;
    let sym = symbols(&cfg, Some(band.t_m()));
    cfg.phi = scalar("phi", phi, f.phi.clone(), "0", &sym)?;
    let time = common
        .time
        .clone()
        .or(f.time.as_ref().map(|s| s.to_string()));
    if let Some(src) = time {
        cfg.time_override =
            Some(crate::expr::eval(&src, &sym).with_context(|| format!("--time '{src}'"))?);
    }
    Ok(Prepared {
        cfg,
        shots: pick(common.shots, f.shots, 0),
    })
}

fn finish(
    ctx: &Context,
    name: &'static str,
    run: ProtocolRun,
    mut report: ProtocolReport,
) -> Result<ProtocolReport> {
    if run.shots > 0 {
        report.attach_samples(ctx.seed, run.shots)?;
    }
    let out = ProtocolOutput {
        run,
        passed: report.passed(),
        report: &report,
    };
    write_json(&ctx.dest.resolve(None, &format!("{name}.json")), &out)?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!(
            "warning: check {} failed: measured {:.6e}, expected {:.6e}, tolerance {:.1e}",
            c.name, c.measured, c.expected, c.tolerance
        );
    }
    Ok(report)
}

pub fn run(ctx: &Context, cmd: ProtocolCommand) -> Result<()> {
    match cmd {
        ProtocolCommand::Identify(a) => {
            let pre = prepare(ctx, &a.common, a.phi)?;
            let engine = Interferometer::new(&pre.cfg)?;
            let report = run_identification(&engine)?;
            let run = ProtocolRun {
                command: "protocol",
                protocol: "identify",
                config: pre.cfg,
                seed: ctx.seed,
                shots: pre.shots,
                varphi_grid: None,
            };
            let report = finish(ctx, "identify", run, report)?;
            let s = report
                .identification
                .as_ref()
                .expect("identification summary");
            println!(
                "expected outcome r = {}, probability {:.6}, post-measurement fidelity {:.6}, success {:.6}",
                s.expected_outcome, s.outcome_probability, s.post_fidelity, s.success_probability
            );
        }
        ProtocolCommand::Produce(a) => {
            let mut pre = prepare(ctx, &a.common, None)?;
            pre.cfg.allow_even_n = a.allow_even_n || ctx.file.allow_even_n.unwrap_or(false);
            let engine = Interferometer::new(&pre.cfg)?;
            let report = run_production(&engine)?;
            let run = ProtocolRun {
                command: "protocol",
                protocol: "produce",
                config: pre.cfg,
                seed: ctx.seed,
                shots: pre.shots,
                varphi_grid: None,
            };
            let report = finish(ctx, "produce", run, report)?;
            // Highest outcome first, as in the usual table layout.
            let rows: Vec<Vec<String>> = report
                .outcomes
                .iter()
                .rev()
                .map(|o| {
                    vec![
                        o.r.to_string(),
                        num(o.probability),
                        o.phase.map(|p| p.to_string()).unwrap_or_default(),
                        opt_num(o.fidelity),
                    ]
                })
                .collect();
            write_csv(
                &ctx.dest.resolve(None, "produce_table.csv"),
                &["r", "probability", "phase", "fidelity"],
                &rows,
            )?;
            let (r0, rm) = (&report.outcomes[0], &report.outcomes[pre.cfg.m]);
            println!(
                "P(0) = {:.6} (F = {:.6}), P({}) = {:.6} (F = {:.6})",
                r0.probability,
                r0.fidelity.unwrap_or(f64::NAN),
                pre.cfg.m,
                rm.probability,
                rm.fidelity.unwrap_or(f64::NAN)
            );
        }
        ProtocolCommand::Estimate(a) => {
            let pre = prepare(ctx, &a.common, None)?;
            let sym = symbols(&pre.cfg, Some(pre.cfg.band()?.t_m()));
            let src = a
                .varphi_grid
                .or(ctx.file.varphi_grid.clone())
                .unwrap_or_else(|| DEFAULT_VARPHI_GRID.into());
            let phases = grid(&src, &sym, Spacing::Linear)
                .with_context(|| format!("--varphi-grid '{src}'"))?;
            let engine = Interferometer::new(&pre.cfg)?;
            let report = run_phase_estimation(&engine, &phases)?;
            let run = ProtocolRun {
                command: "protocol",
                protocol: "estimate",
                config: pre.cfg,
                seed: ctx.seed,
                shots: pre.shots,
                varphi_grid: Some(src),
            };
            let report = finish(ctx, "estimate", run, report)?;
            let table = report.estimation.as_ref().expect("estimation table");
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.varphi),
                        num(r.imbalance),
                        num(r.analytic),
                        num(r.spread),
                        num(r.slope),
                        opt_num(r.delta_phi),
                        num(table.heisenberg_limit),
                        num(table.shot_noise_limit),
                    ]
                })
                .collect();
            write_csv(
                &ctx.dest.resolve(None, "estimate.csv"),
                &[
                    "varphi_rad",
                    "imbalance",
                    "imbalance_analytic",
                    "spread",
                    "slope_per_rad",
                    "delta_phi_rad",
                    "heisenberg_limit_rad",
                    "shot_noise_limit_rad",
                ],
                &rows,
            )?;
            let best = table
                .rows
                .iter()
                .filter_map(|r| r.delta_phi)
                .fold(f64::INFINITY, f64::min);
            println!(
                "min delta phi = {best:.6e}, 1/P = {:.6e}, 1/sqrt(P) = {:.6e}",
                table.heisenberg_limit, table.shot_noise_limit
            );
        }
    }
    Ok(())
}
