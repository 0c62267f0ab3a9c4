//! CSV writers. Every float is written with 17 significant digits.

use std::path::Path;

use crate::geometry::{CellGrid, ReuseColoring};
use crate::mu::{Group, GroupStatistics};
use crate::optimizer::{GainRow, ProfilePoint, SweepRecord};
use crate::propagation::Moment;
use crate::se::{Combiner, EvaluationResult, SystemParams};
use crate::Result;

pub const MU_HEADER: [&str; 7] = ["cell_index", "tier", "color", "group", "gamma", "mu", "stderr"];
pub const SWEEP_HEADER: [&str; 9] =
    ["N", "combiner", "scheme", "K", "beta", "beta_f", "B", "se_bits_per_hz", "se_asymptotic"];
pub const GAIN_HEADER: [&str; 5] = ["N", "combiner", "se_fpr", "se_baseline", "gain_percent"];
pub const EVALUATE_HEADER: [&str; 11] = [
    "N",
    "combiner",
    "label",
    "K",
    "beta",
    "beta_f",
    "B",
    "sinr_interior",
    "sinr_edge",
    "se_bits_per_hz",
    "se_asymptotic",
];
pub const PROFILE_HEADER: [&str; 8] =
    ["N", "combiner", "K", "beta", "beta_f", "B", "se_bits_per_hz", "se_stderr"];
pub const ORACLE_HEADER: [&str; 9] = [
    "cell_index", "tier", "beta_f", "group", "gamma", "mu_mc", "stderr_mc", "mu_oracle", "z_score",
];

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mu(path: &Path, grid: &CellGrid, coloring: &ReuseColoring, stats: &GroupStatistics) -> Result<()> {
    let mut rows = Vec::new();
    for group in [Group::Interior, Group::Edge] {
        let Some(g) = stats.group(group) else { continue };
        for gamma in Moment::ALL {
            for (l, (mu, se)) in g.mu(gamma).iter().zip(g.stderr(gamma)).enumerate() {
                rows.push(vec![
                    l.to_string(),
                    grid.cell(l).tier.to_string(),
                    coloring.color(l).to_string(),
                    group.label().to_string(),
                    gamma.order().to_string(),
                    float(*mu),
                    float(*se),
                ]);
            }
        }
    }
    write_rows(path, &MU_HEADER, rows)
}

pub fn write_sweep(path: &Path, records: &[SweepRecord]) -> Result<()> {
    write_rows(
        path,
        &SWEEP_HEADER,
        records.iter().map(|r| {
            vec![
                r.antennas.to_string(),
                r.combiner.label().to_string(),
                r.scheme.label().to_string(),
                r.users.to_string(),
                r.reuse.to_string(),
                float(r.beta_f()),
                r.pilots.to_string(),
                float(r.se),
                opt(r.se_asymptotic),
            ]
        }),
    )
}

pub fn write_gains(path: &Path, rows: &[GainRow]) -> Result<()> {
    write_rows(
        path,
        &GAIN_HEADER,
        rows.iter().map(|g| {
            vec![
                g.antennas.to_string(),
                g.combiner.label().to_string(),
                float(g.se_fpr),
                float(g.se_baseline),
                float(g.gain_percent),
            ]
        }),
    )
}

pub fn evaluation_label(params: &SystemParams) -> &'static str {
    if params.interior() == 0 {
        "baseline-equivalent"
    } else {
        "FPR"
    }
}

pub fn write_evaluation(path: &Path, params: &SystemParams, result: &EvaluationResult) -> Result<()> {
    let row = vec![
        params.antennas().to_string(),
        result.combiner.label().to_string(),
        evaluation_label(params).to_string(),
        params.users().to_string(),
        params.reuse().to_string(),
        float(params.beta_f()),
        params.pilots().to_string(),
        opt(result.sinr_interior),
        opt(result.sinr_edge),
        float(result.se),
        opt(result.se_asymptotic),
    ];
    write_rows(path, &EVALUATE_HEADER, [row])
}

pub fn write_profile(
    path: &Path,
    antennas: usize,
    combiner: Combiner,
    users: usize,
    beta: u32,
    points: &[ProfilePoint],
) -> Result<()> {
    write_rows(
        path,
        &PROFILE_HEADER,
        points.iter().map(|p| {
            vec![
                antennas.to_string(),
                combiner.label().to_string(),
                users.to_string(),
                beta.to_string(),
                float(p.beta_f),
                p.pilots.to_string(),
                float(p.se),
                float(p.se_stderr),
            ]
        }),
    )
}

/// One row of an `oracle-check` comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub cell: usize,
    pub tier: u32,
    pub beta_f: f64,
    pub group: Group,
    pub gamma: Moment,
    pub mu_mc: f64,
    pub stderr_mc: f64,
    pub mu_oracle: f64,
}

impl OracleRow {
    /// `None` for the own cell, whose moments are exact.
    pub fn z_score(&self) -> Option<f64> {
        (self.stderr_mc > 0.0).then(|| (self.mu_mc - self.mu_oracle) / self.stderr_mc)
    }
}

pub fn write_oracle(path: &Path, rows: &[OracleRow]) -> Result<()> {
    write_rows(
        path,
        &ORACLE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.cell.to_string(),
                r.tier.to_string(),
                float(r.beta_f),
                r.group.label().to_string(),
                r.gamma.order().to_string(),
                float(r.mu_mc),
                float(r.stderr_mc),
                float(r.mu_oracle),
                opt(r.z_score()),
            ]
        }),
    )
}
