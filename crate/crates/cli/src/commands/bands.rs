use anyhow::{bail, Context as _, Result};
use plaquette::bands::{
    band_sweep, cluster_sweep_row, BandConventions, ClusterReport, DEFAULT_GAP_FACTOR,
};
use serde::Serialize;

use super::Context;
use crate::args::BandsArgs;
use crate::expr::{grid, Spacing, Symbols};
use crate::output::{num, write_csv, write_json};
use crate::settings::{pick, Format};

#[derive(Debug, Serialize)]
struct BandsRun {
    command: &'static str,
    n: usize,
    u_over_j: Vec<f64>,
    conventions: BandConventions,
    gap_factor: f64,
    highlight: Option<(usize, usize)>,
}

#[derive(Debug, Serialize)]
struct ClusterRow {
    #[serde(rename = "band_M")]
    band_m: Option<usize>,
    #[serde(rename = "band_P")]
    band_p: Option<usize>,
    count: usize,
    expected_count: Option<usize>,
    #[serde(rename = "centroid_over_J")]
    centroid: f64,
    #[serde(rename = "E_min_over_J")]
    e_min: f64,
    #[serde(rename = "E_max_over_J")]
    e_max: f64,
    highlighted: bool,
}

#[derive(Debug, Serialize)]
struct PointSummary {
    u_over_j: f64,
    c_offset: f64,
    eigenvalue_count: usize,
    resolved: bool,
    threshold: f64,
    median_gap: f64,
    diagnostics: Vec<String>,
    clusters: Vec<ClusterRow>,
}

#[derive(Debug, Serialize)]
struct BandsSummary {
    config: BandsRun,
    points: Vec<PointSummary>,
}

#[derive(Debug, Serialize)]
struct Eigen {
    u_over_j: f64,
    eigenvalue_index: usize,
    #[serde(rename = "E_over_J")]
    e_over_j: f64,
    #[serde(rename = "band_M")]
    band_m: Option<usize>,
    #[serde(rename = "band_P")]
    band_p: Option<usize>,
}

#[derive(Debug, Serialize)]
struct BandsData<'a> {
    config: &'a BandsRun,
    eigenvalues: Vec<Eigen>,
}

pub fn run(ctx: &Context, args: BandsArgs) -> Result<()> {
    let f = &ctx.file;
    let m = pick(args.m, f.m, 15);
    let p = pick(args.p, f.p, 10);
    let n = pick(args.n, f.n, m + p);
    let highlight = (m + p == n).then_some((m, p));
    let sym = Symbols {
        tm: None,
        m: Some(m as f64),
        p: Some(p as f64),
        n: Some(n as f64),
    };
    let points = match (args.grid, args.u_over_j) {
        (Some(g), _) => grid(&g, &sym, Spacing::Log).with_context(|| format!("--grid '{g}'"))?,
        (None, Some(u)) => vec![u],
        (None, None) => match (&f.grid, f.u_over_j) {
            (Some(g), _) => grid(g, &sym, Spacing::Log).with_context(|| format!("grid '{g}'"))?,
            (None, u) => vec![u.unwrap_or(8.0)],
        },
    };
    let conventions = BandConventions {
        u0_over_j: pick(args.u0_over_j, f.u0_over_j, 0.0),
        subtract_c: if args.raw_energies {
            false
        } else {
            f.subtract_c.unwrap_or(true)
        },
        j_zero: args.j_zero || f.j_zero.unwrap_or(false),
    };
    let gap_factor = pick(args.gap_factor, f.gap_factor, DEFAULT_GAP_FACTOR);
    if !(gap_factor.is_finite() && gap_factor > 0.0) {
        bail!("--gap-factor must be positive, got {gap_factor}");
    }

    let sweep = band_sweep(n, &points, conventions)?;
    let reports = (0..points.len())
        .map(|k| cluster_sweep_row(&sweep, k, gap_factor))
        .collect::<plaquette::Result<Vec<ClusterReport>>>()?;

    let run = BandsRun {
        command: "bands",
        n,
        u_over_j: points.clone(),
        conventions,
        gap_factor,
        highlight,
    };
    let mut eigs = Vec::new();
    let mut summary = Vec::new();
    for (k, report) in reports.iter().enumerate() {
        let row = &sweep.eigenvalues[k];
        // Labels are only meaningful once every band is cleanly separated.
        let mut label = vec![None; row.len()];
        if report.resolved {
            for c in &report.clusters {
                for &i in &c.members {
                    label[i] = c.label;
                }
            }
        }
        eigs.extend(
            row.iter()
                .zip(&label)
                .enumerate()
                .map(|(i, (&e, l))| Eigen {
                    u_over_j: points[k],
                    eigenvalue_index: i,
                    e_over_j: e,
                    band_m: l.map(|x| x.0),
                    band_p: l.map(|x| x.1),
                }),
        );
        summary.push(PointSummary {
            u_over_j: points[k],
            c_offset: sweep.c_offsets[k],
            eigenvalue_count: row.len(),
            resolved: report.resolved,
            threshold: report.threshold,
            median_gap: report.median_gap,
            diagnostics: report.diagnostics.clone(),
            clusters: report
                .clusters
                .iter()
                .map(|c| ClusterRow {
                    band_m: c.label.map(|x| x.0),
                    band_p: c.label.map(|x| x.1),
                    count: c.members.len(),
                    expected_count: c.expected_count,
                    centroid: c.centroid,
                    e_min: row[c.members[0]],
                    e_max: row[*c.members.last().expect("clusters are non-empty")],
                    highlighted: c.label.is_some() && c.label == highlight,
                })
                .collect(),
        });
    }

    match ctx.format {
        Format::Csv => {
            let path = ctx.dest.resolve(args.output.as_deref(), "bands.csv");
            let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
            let rows: Vec<Vec<String>> = eigs
                .iter()
                .map(|e| {
                    vec![
                        num(e.u_over_j),
                        e.eigenvalue_index.to_string(),
                        num(e.e_over_j),
                        opt(e.band_m),
                        opt(e.band_p),
                    ]
                })
                .collect();
            write_csv(
                &path,
                &[
                    "u_over_j",
                    "eigenvalue_index",
                    "E_over_J",
                    "band_M",
                    "band_P",
                ],
                &rows,
            )?;
        }
        Format::Json => {
            let path = ctx.dest.resolve(args.output.as_deref(), "bands.json");
            write_json(
                &path,
                &BandsData {
                    config: &run,
                    eigenvalues: eigs,
                },
            )?;
        }
    }
    write_json(
        &ctx.dest.resolve(None, "bands_clusters.json"),
        &BandsSummary {
            config: run,
            points: summary,
        },
    )?;
    let unresolved = reports.iter().filter(|r| !r.resolved).count();
    eprintln!(
        "N = {n}: {} eigenvalues at {} point(s), {unresolved} point(s) with overlapping bands",
        sweep.eigenvalues.first().map_or(0, Vec::len),
        points.len()
    );
    Ok(())
}
