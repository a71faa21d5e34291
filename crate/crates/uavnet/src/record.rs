//! Run-record file formats: the per-agent step CSV, per-episode aggregates,
//! world snapshots, UE trajectories, and the multi-policy comparison series.
//! All writers emit UTF-8 with LF line endings and format floats with at
//! most nine significant digits so reruns are byte-identical.

use std::io::Write;

use crate::error::{Error, Result};
use crate::world::WorldState;

pub const STEPS_HEADER: &str =
    "episode,t,policy,sum_rate_bps,agent,reward,action_dx,action_dy,uav_x,uav_y";
pub const EPISODES_HEADER: &str = "episode,policy,mean_sum_rate_bps,total_reward";
pub const SNAPSHOT_HEADER: &str = "kind,index,x,y";
pub const TRAJECTORY_HEADER: &str = "t,ue_index,x,y";
pub const COMPARISON_HEADER: &str = "seed,policy,t,sum_rate_bps";

/// Format with up to nine significant digits, shortest form.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    // Round to 9 significant digits, then print the rounded value's
    // shortest round-trip representation.
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    format!("{rounded}")
}

/// One CSV row: a single agent's move at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub episode: u64,
    pub t: u64,
    pub policy: String,
    /// Sum rate immediately after this agent's move.
    pub sum_rate_bps: f64,
    pub agent: usize,
    pub reward: f64,
    /// Chosen action direction (unit deltas); a clamped axis still shows the
    /// chosen direction while the position stays put.
    pub action_dx: i32,
    pub action_dy: i32,
    pub uav_x: f64,
    pub uav_y: f64,
}

impl StepRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.t,
            self.policy,
            fmt_sig9(self.sum_rate_bps),
            self.agent,
            fmt_sig9(self.reward),
            self.action_dx,
            self.action_dy,
            fmt_sig9(self.uav_x),
            fmt_sig9(self.uav_y),
        )
    }
}

/// Per-episode aggregate: mean end-of-instant sum rate and total reward.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: u64,
    pub policy: String,
    pub mean_sum_rate_bps: f64,
    pub total_reward: f64,
}

impl EpisodeStats {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.episode,
            self.policy,
            fmt_sig9(self.mean_sum_rate_bps),
            fmt_sig9(self.total_reward),
        )
    }
}

/// Receives step rows as the harness produces them.
pub trait StepSink {
    fn push(&mut self, row: &StepRow) -> Result<()>;
}

/// Collects rows in memory (tests, small runs).
#[derive(Debug, Default)]
pub struct VecSink(pub Vec<StepRow>);

impl StepSink for VecSink {
    fn push(&mut self, row: &StepRow) -> Result<()> {
        self.0.push(row.clone());
        Ok(())
    }
}

/// Discards rows.
#[derive(Debug, Default)]
pub struct NullSink;

impl StepSink for NullSink {
    fn push(&mut self, _row: &StepRow) -> Result<()> {
        Ok(())
    }
}

/// Streams rows to a writer as CSV, header first.
pub struct CsvStepSink<W: Write> {
    writer: W,
    wrote_header: bool,
}

impl<W: Write> CsvStepSink<W> {
    pub fn new(writer: W) -> Self {
        Self {
            writer,
            wrote_header: false,
        }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> StepSink for CsvStepSink<W> {
    fn push(&mut self, row: &StepRow) -> Result<()> {
        if !self.wrote_header {
            writeln!(self.writer, "{STEPS_HEADER}")?;
            self.wrote_header = true;
        }
        writeln!(self.writer, "{}", row.to_csv_line())?;
        Ok(())
    }
}

pub fn write_steps_csv<W: Write>(mut w: W, rows: &[StepRow]) -> Result<()> {
    writeln!(w, "{STEPS_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.to_csv_line())?;
    }
    Ok(())
}

pub fn write_episodes_csv<W: Write>(mut w: W, stats: &[EpisodeStats]) -> Result<()> {
    writeln!(w, "{EPISODES_HEADER}")?;
    for s in stats {
        writeln!(w, "{}", s.to_csv_line())?;
    }
    Ok(())
}

/// One row per entity: kind (ue/uav/gbs), per-kind index, x, y.
pub fn write_snapshot_csv<W: Write>(mut w: W, state: &WorldState) -> Result<()> {
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for (i, &(x, y)) in state.ue_positions.iter().enumerate() {
        writeln!(w, "ue,{i},{},{}", fmt_sig9(x), fmt_sig9(y))?;
    }
    for (i, &(x, y)) in state.uav_positions.iter().enumerate() {
        writeln!(w, "uav,{i},{},{}", fmt_sig9(x), fmt_sig9(y))?;
    }
    for (i, &(x, y)) in state.gbs_positions.iter().enumerate() {
        writeln!(w, "gbs,{i},{},{}", fmt_sig9(x), fmt_sig9(y))?;
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(mut w: W, rows: &[(u64, usize, f64, f64)]) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for &(t, i, x, y) in rows {
        writeln!(w, "{t},{i},{},{}", fmt_sig9(x), fmt_sig9(y))?;
    }
    Ok(())
}

/// Split one CSV data line into exactly `want` fields, with a parse error
/// naming the 1-based data row on mismatch.
pub fn split_fields(line: &str, want: usize, row: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != want {
        return Err(Error::Parse {
            row,
            msg: format!("expected {want} fields, found {}", fields.len()),
        });
    }
    Ok(fields)
}

pub fn parse_f64(tok: &str, row: usize, col: &str) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|e| Error::Parse {
        row,
        msg: format!("bad {col} value {tok:?}: {e}"),
    })
}

pub fn parse_u64(tok: &str, row: usize, col: &str) -> Result<u64> {
    tok.trim().parse::<u64>().map_err(|e| Error::Parse {
        row,
        msg: format!("bad {col} value {tok:?}: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(-0.2), "-0.2");
        assert_eq!(fmt_sig9(512.0), "512");
        assert_eq!(fmt_sig9(24_063_259.207326), "24063259.2");
        assert_eq!(fmt_sig9(1.23456789123e-7), "0.000000123456789");
    }

    #[test]
    fn step_row_line_shape() {
        let row = StepRow {
            episode: 3,
            t: 17,
            policy: "dqn".into(),
            sum_rate_bps: 1.5e7,
            agent: 1,
            reward: -0.2,
            action_dx: -1,
            action_dy: 0,
            uav_x: 499.0,
            uav_y: 500.0,
        };
        assert_eq!(row.to_csv_line(), "3,17,dqn,15000000,1,-0.2,-1,0,499,500");
    }

    #[test]
    fn csv_sink_writes_header_once() {
        let row = StepRow {
            episode: 0,
            t: 0,
            policy: "fixed".into(),
            sum_rate_bps: 1.0,
            agent: 0,
            reward: 1.0,
            action_dx: 0,
            action_dy: 0,
            uav_x: 0.0,
            uav_y: 0.0,
        };
        let mut sink = CsvStepSink::new(Vec::new());
        sink.push(&row).unwrap();
        sink.push(&row).unwrap();
        let text = String::from_utf8(sink.into_inner()).unwrap();
        assert_eq!(text.matches(STEPS_HEADER).count(), 1);
        assert_eq!(text.lines().count(), 3);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn split_fields_reports_row() {
        let err = split_fields("a,b", 3, 7).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 7),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
