use anyhow::{Context as _, Result};
use plaquette::basis::{Occupation, StateVector};
use plaquette::oracles::{imbalance_fock, imbalance_noon, AnalyticParams};
use plaquette::protocols::{encode_phase, prepare_noon_input, HamiltonianMode, Interferometer};
use serde::Serialize;

use super::{protocol_config, scalar, symbols, Context};
use crate::args::EvolveArgs;
use crate::expr::{grid, Spacing};
use crate::output::{num, write_csv, write_json};
use crate::settings::{pick, Format, InitialState};

pub const DEFAULT_TIMES: &str = "0:2.2tm:200";

#[derive(Debug, Serialize)]
struct EvolveRun {
    command: &'static str,
    m: usize,
    p: usize,
    n: usize,
    u_over_j: f64,
    mode: HamiltonianMode,
    state: InitialState,
    phi: f64,
    varphi: f64,
    times: String,
    omega: f64,
    t_m: f64,
}

#[derive(Debug, Serialize)]
struct Row {
    jt: f64,
    imbalance_numeric: f64,
    imbalance_analytic: f64,
    abs_error: f64,
}

#[derive(Debug, Serialize)]
struct EvolveOutput {
    config: EvolveRun,
    max_abs_error: f64,
    rows: Vec<Row>,
}

pub fn run(ctx: &Context, args: EvolveArgs) -> Result<()> {
    let f = &ctx.file;
    let cfg = protocol_config(&args.model, f);
    let state = pick(args.state, f.state, InitialState::Fock);
    let band = cfg.band()?;
    let sym = symbols(&cfg, Some(band.t_m()));
    let phi = scalar("phi", args.phi, f.phi.clone(), "0", &sym)?;
    let varphi = scalar("varphi", args.varphi, f.varphi.clone(), "0", &sym)?;
    let times_src = args
        .times
        .or(f.times.as_ref().map(|s| s.to_string()))
        .unwrap_or_else(|| DEFAULT_TIMES.into());
    let times = grid(&times_src, &sym, Spacing::Linear)
        .with_context(|| format!("--times '{times_src}'"))?;

    let engine = Interferometer::new(&cfg)?;
    let psi0 = match state {
        InitialState::Fock => {
            StateVector::basis_state(engine.basis(), Occupation::new(cfg.m, cfg.p, 0, 0))?
        }
        InitialState::Noon => prepare_noon_input(engine.basis(), cfg.m, cfg.p, phi)
            .context("a NOON input needs P >= 1")?,
    };
    let psi0 = encode_phase(&psi0, 4, varphi)?;
    let series = engine.imbalance_series(&psi0, &times)?;

    // The site-4 phase only enters the NOON branch with P particles on site 4.
    let analytic = AnalyticParams::from_band(&band, phi + cfg.p as f64 * varphi);
    let m = cfg.m as f64;
    let rows: Vec<Row> = series
        .iter()
        .map(|(t, v)| {
            let a = match state {
                InitialState::Fock => imbalance_fock(&analytic, t),
                InitialState::Noon => imbalance_noon(&analytic, t),
            } / m;
            Row {
                jt: t,
                imbalance_numeric: v,
                imbalance_analytic: a,
                abs_error: (v - a).abs(),
            }
        })
        .collect();
    let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);

    let out = EvolveOutput {
        config: EvolveRun {
            command: "evolve",
            m: cfg.m,
            p: cfg.p,
            n: cfg.total(),
            u_over_j: cfg.u_over_j,
            mode: cfg.mode,
            state,
            phi,
            varphi,
            times: times_src,
            omega: band.omega(),
            t_m: band.t_m(),
        },
        max_abs_error,
        rows,
    };
    match ctx.format {
        Format::Csv => {
            let path = ctx.dest.resolve(args.output.as_deref(), "evolve.csv");
            let rows: Vec<Vec<String>> = out
                .rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.jt),
                        num(r.imbalance_numeric),
                        num(r.imbalance_analytic),
                        num(r.abs_error),
                    ]
                })
                .collect();
            write_csv(
                &path,
                &["Jt", "imbalance_numeric", "imbalance_analytic", "abs_error"],
                &rows,
            )?;
        }
        Format::Json => {
            let path = ctx.dest.resolve(args.output.as_deref(), "evolve.json");
            write_json(&path, &out)?;
        }
    }
    eprintln!(
        "{} points, t_m = {:.6}, max |numeric - analytic| = {:.3e}",
        out.rows.len(),
        band.t_m(),
        max_abs_error
    );
    Ok(())
}
