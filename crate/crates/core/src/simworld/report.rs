//! Session logs as CSV, run summaries as JSON, and the comparison table.

use std::hash::Hasher;
use std::io::Write;

use fnv::FnvHasher;

use super::{ScenarioConfig, ScenarioRun, ScenarioSummary, SessionKind, SessionLog, TacticSummary};
use crate::belief::SqrtBelief;
use crate::error::{Error, Result};
use crate::factorgraph::LinearFactor;

use super::world::Cell;

pub const CSV_HEADER: &str =
    "session_index,kind,tactic,affected_scalars,flops_fma,flops_rot,nnz_R,reorder_flops,backsub_flops,wall_nanos,chosen";

#[derive(serde::Serialize)]
struct CsvRow {
    session_index: usize,
    kind: SessionKind,
    tactic: String,
    affected_scalars: usize,
    flops_fma: u64,
    flops_rot: u64,
    #[serde(rename = "nnz_R")]
    nnz_r: usize,
    reorder_flops: u64,
    backsub_flops: u64,
    wall_nanos: u64,
    chosen: Option<usize>,
}

/// FNV-1a over every factor's variables, Jacobian bits and rhs bits, in
/// insertion order.
pub fn stream_digest(factors: &[LinearFactor]) -> u64 {
    let mut h = FnvHasher::default();
    for f in factors {
        for v in f.involved() {
            h.write_u32(v.id);
            h.write_u32(v.dim);
        }
        for x in f.blocks().iter().flatten().chain(f.rhs()) {
            h.write_u64(x.to_bits());
        }
    }
    h.finish()
}

pub(super) fn summarize(
    cfg: &ScenarioConfig,
    goals: &[Cell],
    logs: &[SessionLog],
    beliefs: &[SqrtBelief],
    poses: usize,
    spread: f64,
) -> ScenarioSummary {
    let mut tactics: Vec<TacticSummary> = cfg
        .tactics
        .iter()
        .zip(beliefs)
        .map(|(t, b)| TacticSummary {
            tactic: t.to_string(),
            final_nnz: b.nnz(),
            stream_digest: format!("{:016x}", stream_digest(b.factors())),
            ..TacticSummary::default()
        })
        .collect();
    for log in logs {
        for (s, r) in tactics.iter_mut().zip(&log.records) {
            match log.kind {
                SessionKind::Planning => {
                    s.planning_update_fma += r.flops.fma;
                    s.planning_update_rotations += r.flops.rotations;
                    s.planning_affected_scalars += r.affected_scalars as u64;
                    s.reorder_fma += r.reorder_flops.fma;
                    s.planning_wall_nanos += r.wall_nanos;
                }
                SessionKind::Inference => {
                    s.inference_update_fma += r.flops.fma;
                    s.inference_update_rotations += r.flops.rotations;
                    s.inference_affected_scalars += r.affected_scalars as u64;
                    s.backsub_fma += r.backsub_flops;
                    s.inference_wall_nanos += r.wall_nanos;
                }
            }
        }
    }
    let decisions_agree = logs
        .iter()
        .all(|l| l.chosen.iter().all(|c| *c == l.chosen[0]));
    ScenarioSummary {
        poses,
        planning_sessions: logs.iter().filter(|l| l.kind == SessionKind::Planning).count(),
        inference_sessions: logs.iter().filter(|l| l.kind == SessionKind::Inference).count(),
        goals: goals.to_vec(),
        decisions_agree,
        max_estimate_spread: spread,
        tactics,
    }
}

impl ScenarioRun {
    /// One row per session and tactic under [`CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for log in &self.logs {
            for ((t, r), chosen) in self.tactics.iter().zip(&log.records).zip(&log.chosen) {
                w.serialize(CsvRow {
                    session_index: log.index,
                    kind: log.kind,
                    tactic: t.to_string(),
                    affected_scalars: r.affected_scalars,
                    flops_fma: r.flops.fma,
                    flops_rot: r.flops.rotations,
                    nnz_r: r.nnz_r,
                    reorder_flops: r.reorder_flops.fma,
                    backsub_flops: r.backsub_flops,
                    wall_nanos: r.wall_nanos,
                    chosen: *chosen,
                })
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    /// Totals per tactic, with percentages relative to the first row.
    pub fn table(&self) -> String {
        let rows = &self.summary.tactics;
        let mut s = format!(
            "{:<14}{:>16}{:>8}{:>14}{:>16}{:>8}{:>14}{:>10}\n",
            "tactic", "planning fma", "%", "reorder fma", "inference fma", "%", "backsub fma", "nnz(R)"
        );
        let pct = |x: u64, base: u64| if base == 0 { 100.0 } else { 100.0 * x as f64 / base as f64 };
        let base = &rows[0];
        for r in rows {
            s.push_str(&format!(
                "{:<14}{:>16}{:>8.2}{:>14}{:>16}{:>8.2}{:>14}{:>10}\n",
                r.tactic,
                r.planning_update_fma,
                pct(r.planning_update_fma, base.planning_update_fma),
                r.reorder_fma,
                r.inference_update_fma,
                pct(r.inference_update_fma, base.inference_update_fma),
                r.backsub_fma,
                r.final_nnz
            ));
        }
        s
    }
}
