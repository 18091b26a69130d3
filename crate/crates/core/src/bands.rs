//! Spectra over a range of `U/J` and their grouping into resonant bands.
//!
//! At `J = 0` the plaquette Hamiltonian is diagonal with energy
//! `C + (U0 - U12)/4 (M - P)^2`, where `M` and `P` are the occupations of the
//! diagonal pairs (1, 3) and (2, 4). Switching on `J` broadens each level into
//! a band whose internal level spacings stay at or below `J`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{dimension, enumerate_basis};
use crate::error::{Error, Result};
use crate::operators::{build_hamiltonian, CouplingSet};

/// Additive constant `C = (U0 + U12) N^2 / 4 - U0 N / 2`.
pub fn constant_c(n: usize, c: &CouplingSet) -> Result<f64> {
    if !c.is_integrable() {
        return Err(Error::NotIntegrable);
    }
    let nf = n as f64;
    Ok((c.u0() + c.u12()) * nf * nf / 4.0 - c.u0() * nf / 2.0)
}

/// `J = 0` energy of the `(M, P)` band, `C + (U0 - U12)/4 (M - P)^2`.
pub fn j_zero_energy(m: usize, p: usize, c: &CouplingSet) -> Result<f64> {
    let d = m as f64 - p as f64;
    Ok(constant_c(m + p, c)? + (c.u0() - c.u12()) / 4.0 * d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConventions {
    pub u0_over_j: f64,
    /// Report `E - C` instead of `E`.
    pub subtract_c: bool,
    /// Diagonalize at `J = 0` (the `U` scale is kept).
    pub j_zero: bool,
}

impl Default for BandConventions {
    fn default() -> Self {
        Self {
            u0_over_j: 0.0,
            subtract_c: true,
            j_zero: false,
        }
    }
}

impl BandConventions {
    pub fn couplings(&self, u_over_j: f64) -> Result<CouplingSet> {
        let c = CouplingSet::from_ratios(u_over_j, self.u0_over_j)?;
        if self.j_zero {
            c.with_j(0.0)
        } else {
            Ok(c)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSweep {
    pub n: usize,
    pub u_over_j: Vec<f64>,
    /// One ascending row of `E/J` per grid point.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Constant subtracted from each row (zero unless `subtract_c`).
    pub c_offsets: Vec<f64>,
    pub conventions: BandConventions,
}

/// `count` points spaced evenly in `log(U/J)` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "log grid needs 0 < lo <= hi and count >= 1, got [{lo}, {hi}] x {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|k| {
            if k == 0 {
                lo
            } else if k + 1 == count {
                hi
            } else {
                (a + (b - a) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// 60 points over `U/J in [0.1, 20]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(0.1, 20.0, 60).expect("valid constants")
}

/// Full spectrum at every grid point. Grid points are diagonalized in
/// parallel and returned in grid order.
pub fn band_sweep(n: usize, grid: &[f64], conventions: BandConventions) -> Result<BandSweep> {
    if let Some(bad) = grid.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "U/J grid values must be positive, got {bad}"
        )));
    }
    let basis = enumerate_basis(n);
    let rows = grid
        .par_iter()
        .map(|&u| {
            let c = conventions.couplings(u)?;
            let offset = if conventions.subtract_c {
                constant_c(n, &c)?
            } else {
                0.0
            };
            let mut e = build_hamiltonian(&basis, &c)?.eigenvalues()?;
            e.iter_mut().for_each(|x| *x -= offset);
            Ok((e, offset))
        })
        .collect::<Result<Vec<_>>>()?;
    let (eigenvalues, c_offsets) = rows.into_iter().unzip();
    Ok(BandSweep {
        n,
        u_over_j: grid.to_vec(),
        eigenvalues,
        c_offsets,
        conventions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedBand {
    pub m: usize,
    pub p: usize,
    /// `J = 0` energy in the convention of the sweep.
    pub energy: f64,
    /// `2(M+1)(P+1)`, or `(M+1)(P+1)` when `M = P`.
    pub count: usize,
}

/// Bands `(M, N - M)` for `M = ceil(N/2)..=N`.
pub fn expected_bands(n: usize, c: &CouplingSet, subtract_c: bool) -> Result<Vec<ExpectedBand>> {
    let offset = if subtract_c { constant_c(n, c)? } else { 0.0 };
    (n.div_ceil(2)..=n)
        .map(|m| {
            let p = n - m;
            let pairs = (m + 1) * (p + 1);
            Ok(ExpectedBand {
                m,
                p,
                energy: j_zero_energy(m, p, c)? - offset,
                count: if m == p { pairs } else { 2 * pairs },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCluster {
    /// `(M, P)` of the nearest expected band.
    pub label: Option<(usize, usize)>,
    /// Indices into the sorted eigenvalue row.
    pub members: Vec<usize>,
    pub centroid: f64,
    pub expected_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub clusters: Vec<BandCluster>,
    pub median_gap: f64,
    pub threshold: f64,
    /// True when every expected band is matched by exactly one cluster with
    /// the expected number of members.
    pub resolved: bool,
    pub diagnostics: Vec<String>,
}

impl ClusterReport {
    pub fn cluster_for(&self, m: usize, p: usize) -> Option<&BandCluster> {
        self.clusters.iter().find(|c| c.label == Some((m, p)))
    }
}

/// Unit that `gap_factor` multiplies to give the splitting threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapScale {
    /// The hopping amplitude `|J|`. Level spacings inside a band stay at or
    /// below `J` while bands sit `~U` apart.
    Hopping(f64),
    /// The median nearest-neighbour gap. Near-degenerate pairs inside every
    /// band drive this towards zero, so it over-splits at strong coupling.
    Median,
}

/// Splits a sorted spectrum wherever a gap exceeds `gap_factor` times the
/// chosen gap scale and labels each piece by the nearest expected band
/// energy.
pub fn cluster_bands(
    eigs: &[f64],
    expected: &[ExpectedBand],
    gap_factor: f64,
    scale: GapScale,
) -> Result<ClusterReport> {
    if eigs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "eigenvalues must be sorted ascending".into(),
        ));
    }
    if !(gap_factor.is_finite() && gap_factor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gap factor must be positive, got {gap_factor}"
        )));
    }
    let gaps: Vec<f64> = eigs.windows(2).map(|w| w[1] - w[0]).collect();
    let median_gap = median(&gaps);
    let unit = match scale {
        GapScale::Hopping(j) => j.abs(),
        GapScale::Median => median_gap,
    };
    // Floor so that exactly degenerate levels stay together when the unit
    // vanishes, as at J = 0.
    let span = eigs.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let threshold = (gap_factor * unit).max(1e-10 * span.max(1.0));

    let mut pieces: Vec<Vec<usize>> = Vec::new();
    for i in 0..eigs.len() {
        if i == 0 || gaps[i - 1] > threshold {
            pieces.push(Vec::new());
        }
        pieces.last_mut().expect("pushed above").push(i);
    }

    let mut clusters: Vec<BandCluster> = pieces
        .into_iter()
        .map(|members| {
            let centroid = members.iter().map(|&i| eigs[i]).sum::<f64>() / members.len() as f64;
            let nearest = expected.iter().min_by(|a, b| {
                (a.energy - centroid)
                    .abs()
                    .total_cmp(&(b.energy - centroid).abs())
            });
            BandCluster {
                label: nearest.map(|b| (b.m, b.p)),
                expected_count: nearest.map(|b| b.count),
                members,
                centroid,
            }
        })
        .collect();

    let mut diagnostics = Vec::new();
    if clusters.len() != expected.len() {
        diagnostics.push(format!(
            "found {} clusters for {} expected bands (median gap {median_gap:.3e}, threshold {threshold:.3e})",
            clusters.len(),
            expected.len()
        ));
    }
    for band in expected {
        let hits: Vec<&BandCluster> = clusters
            .iter()
            .filter(|c| c.label == Some((band.m, band.p)))
            .collect();
        match hits.as_slice() {
            [] => diagnostics.push(format!("band ({}, {}) has no cluster", band.m, band.p)),
            [one] if one.members.len() != band.count => diagnostics.push(format!(
                "band ({}, {}) has {} members, expected {}",
                band.m,
                band.p,
                one.members.len(),
                band.count
            )),
            [_] => {}
            many => diagnostics.push(format!(
                "band ({}, {}) is split over {} clusters",
                band.m,
                band.p,
                many.len()
            )),
        }
    }
    if expected.is_empty() {
        clusters.iter_mut().for_each(|c| c.label = None);
    }
    Ok(ClusterReport {
        resolved: diagnostics.is_empty(),
        clusters,
        median_gap,
        threshold,
        diagnostics,
    })
}

fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Sweep row `k` clustered against the bands of the sweep's conventions.
pub fn cluster_sweep_row(sweep: &BandSweep, k: usize, gap_factor: f64) -> Result<ClusterReport> {
    let row = sweep
        .eigenvalues
        .get(k)
        .ok_or_else(|| Error::InvalidArgument(format!("sweep has no row {k}")))?;
    if row.len() != dimension(sweep.n) {
        return Err(Error::DimensionMismatch {
            expected: dimension(sweep.n),
            got: row.len(),
        });
    }
    let c = sweep.conventions.couplings(sweep.u_over_j[k])?;
    let expected = expected_bands(sweep.n, &c, sweep.conventions.subtract_c)?;
    cluster_bands(row, &expected, gap_factor, GapScale::Hopping(c.j()))
}

/// Default `gap_factor`.
pub const DEFAULT_GAP_FACTOR: f64 = 10.0;

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(report: &ClusterReport) -> Vec<(Option<(usize, usize)>, usize)> {
        report
            .clusters
            .iter()
            .map(|c| (c.label, c.members.len()))
            .collect()
    }

    #[test]
    fn constant_and_band_energies() {
        let zero = CouplingSet::integrable(0.0, 0.0, 1.0).unwrap();
        assert_eq!(j_zero_energy(3, 2, &zero).unwrap(), 0.0);
        let c = CouplingSet::integrable(0.4, 2.0, 1.0).unwrap();
        assert_eq!(j_zero_energy(3, 3, &c).unwrap(), constant_c(6, &c).unwrap());
        assert!(j_zero_energy(
            1,
            1,
            &c.with_pair(crate::basis::Site::ONE, crate::basis::Site::TWO, 3.0)
                .unwrap()
        )
        .is_err());
    }

    #[test]
    fn single_particle_spectrum() {
        let s = band_sweep(1, &[2.0], BandConventions::default()).unwrap();
        let e = &s.eigenvalues[0];
        // C = U12/4 and the hopping block has eigenvalues -1, 0, 0, 1 on top
        // of U12 N(N-1)-free diagonal, so E - C = -U12/4 + {-1, 0, 0, 1}.
        let u = 2.0;
        let expect = [-u - 1.0, -u, -u, -u + 1.0];
        for (a, b) in e.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn odd_n_census() {
        let s = band_sweep(5, &[20.0], BandConventions::default()).unwrap();
        let r = cluster_sweep_row(&s, 0, DEFAULT_GAP_FACTOR).unwrap();
        assert!(r.resolved, "{:?}", r.diagnostics);
        assert_eq!(
            counts(&r),
            vec![(Some((5, 0)), 12), (Some((4, 1)), 20), (Some((3, 2)), 24)]
        );
    }

    #[test]
    fn even_n_top_band() {
        let s = band_sweep(4, &[20.0], BandConventions::default()).unwrap();
        let r = cluster_sweep_row(&s, 0, DEFAULT_GAP_FACTOR).unwrap();
        assert!(r.resolved, "{:?}", r.diagnostics);
        assert_eq!(r.cluster_for(2, 2).unwrap().members.len(), 9);
        assert_eq!(r.clusters.last().unwrap().label, Some((2, 2)));
    }

    #[test]
    fn j_zero_clusters_are_degenerate() {
        let conv = BandConventions {
            j_zero: true,
            ..Default::default()
        };
        let s = band_sweep(5, &[3.0], conv).unwrap();
        let r = cluster_sweep_row(&s, 0, DEFAULT_GAP_FACTOR).unwrap();
        assert!(r.resolved, "{:?}", r.diagnostics);
        let c = conv.couplings(3.0).unwrap();
        for cl in &r.clusters {
            let (m, p) = cl.label.unwrap();
            let e = j_zero_energy(m, p, &c).unwrap() - constant_c(5, &c).unwrap();
            assert!(cl
                .members
                .iter()
                .all(|&i| (s.eigenvalues[0][i] - e).abs() < 1e-12));
        }
    }

    #[test]
    fn small_j_limit_matches_ladder() {
        let c = CouplingSet::integrable(0.7, 5.3, 1e-8).unwrap();
        let basis = enumerate_basis(7);
        let e = build_hamiltonian(&basis, &c)
            .unwrap()
            .eigenvalues()
            .unwrap();
        let ladder: Vec<f64> = expected_bands(7, &c, false)
            .unwrap()
            .iter()
            .flat_map(|b| std::iter::repeat(b.energy).take(b.count))
            .collect();
        let mut ladder = ladder;
        ladder.sort_by(f64::total_cmp);
        assert_eq!(ladder.len(), e.len());
        for (a, b) in e.iter().zip(&ladder) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn median_scale_over_splits() {
        let s = band_sweep(5, &[20.0], BandConventions::default()).unwrap();
        let c = CouplingSet::from_u_over_j(20.0).unwrap();
        let expected = expected_bands(5, &c, true).unwrap();
        let r = cluster_bands(
            &s.eigenvalues[0],
            &expected,
            DEFAULT_GAP_FACTOR,
            GapScale::Median,
        )
        .unwrap();
        assert!(!r.resolved);
        assert!(r.clusters.len() > 3);
    }

    #[test]
    fn odd_n_bands_resolve_at_operating_ratio() {
        for n in (1..=9).step_by(2) {
            let s = band_sweep(n, &[8.0, 20.0], BandConventions::default()).unwrap();
            for k in 0..2 {
                let r = cluster_sweep_row(&s, k, DEFAULT_GAP_FACTOR).unwrap();
                assert!(r.resolved, "N = {n}: {:?}", r.diagnostics);
                assert_eq!(r.clusters.len(), (n + 1) / 2);
            }
        }
    }

    #[test]
    fn weak_coupling_merges_bands() {
        let s = band_sweep(5, &[0.1], BandConventions::default()).unwrap();
        let r = cluster_sweep_row(&s, 0, DEFAULT_GAP_FACTOR).unwrap();
        assert!(!r.resolved);
    }

    #[test]
    fn grids() {
        let g = default_grid();
        assert_eq!(g.len(), 60);
        assert!((g[0] - 0.1).abs() < 1e-15 && g[59] == 20.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_grid(0.0, 1.0, 3).is_err());
        assert!(band_sweep(2, &[-1.0], BandConventions::default()).is_err());
    }

    #[test]
    fn unsorted_input_rejected() {
        assert!(cluster_bands(&[1.0, 0.0], &[], 10.0, GapScale::Median).is_err());
    }
}
