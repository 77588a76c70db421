//! Hop-log file format: one CSV row per [`HopLogRecord`], floats at 6
//! decimals, candidate ids pipe-joined, optional fields empty when absent.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::ScoreBreakdown;
use crate::sim::{HopLogRecord, HopOutcome, Strategy};
use crate::util::{read_to_string, write_atomic};

pub const HOP_LOG_HEADER: &str = "scenario_id,message_id,mode,hop_index,from_id,to_id,ttl_left_at_hop,buffer_ratio_at_to,distance_to_target_m,hop_delay_s,candidate_ids,chosen_id,score_breakdown,hop_outcome,final_delivered,total_delay_s,total_hops";

fn opt_u32(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f6(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn record_line(r: &HopLogRecord) -> String {
    let candidates = r
        .candidate_ids
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("|");
    let breakdown = r
        .score_breakdown
        .as_ref()
        .map(|b| format!("{:.6}:{:.6}:{:.6}:{:.6}:{:.6}", b.a, b.b, b.c, b.d, b.combined))
        .unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{},{:.6},{}",
        r.scenario_id,
        r.message_id,
        r.mode,
        r.hop_index,
        r.from_id,
        opt_u32(r.to_id),
        r.ttl_left_at_hop,
        opt_f6(r.buffer_ratio_at_to),
        opt_f6(r.distance_to_target_m),
        r.hop_delay_s,
        candidates,
        opt_u32(r.chosen_id),
        breakdown,
        r.hop_outcome.as_str(),
        r.final_delivered,
        r.total_delay_s,
        r.total_hops,
    )
}

/// Renders records in the fixed schema.
pub fn to_csv(records: &[HopLogRecord]) -> String {
    let mut out = String::from(HOP_LOG_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_line(r));
        out.push('\n');
    }
    out
}

pub fn write(records: &[HopLogRecord], path: &Path) -> Result<()> {
    write_atomic(path, &to_csv(records))
}

fn parse_row(line: &str, row: usize) -> Result<HopLogRecord> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 17 {
        return Err(Error::Row {
            row,
            message: format!("expected 17 fields, found {}", fields.len()),
        });
    }
    let bad =
        |name: &str, tok: &str| Error::Row { row, message: format!("{name}: cannot parse `{tok}`") };
    let u32_field = |i: usize, name: &str| -> Result<u32> {
        fields[i].parse().map_err(|_| bad(name, fields[i]))
    };
    let f64_field = |i: usize, name: &str| -> Result<f64> {
        fields[i].parse().map_err(|_| bad(name, fields[i]))
    };
    let opt_u32_field = |i: usize, name: &str| -> Result<Option<u32>> {
        if fields[i].is_empty() {
            Ok(None)
        } else {
            fields[i].parse().map(Some).map_err(|_| bad(name, fields[i]))
        }
    };
    let opt_f64_field = |i: usize, name: &str| -> Result<Option<f64>> {
        if fields[i].is_empty() {
            Ok(None)
        } else {
            fields[i].parse().map(Some).map_err(|_| bad(name, fields[i]))
        }
    };

    let candidate_ids: Vec<u32> = if fields[10].is_empty() {
        Vec::new()
    } else {
        fields[10]
            .split('|')
            .map(|t| t.parse().map_err(|_| bad("candidate_ids", t)))
            .collect::<Result<_>>()?
    };
    let chosen_id = opt_u32_field(11, "chosen_id")?;
    let score_breakdown = if fields[12].is_empty() {
        None
    } else {
        let parts: Vec<&str> = fields[12].split(':').collect();
        if parts.len() != 5 {
            return Err(bad("score_breakdown", fields[12]));
        }
        let num = |t: &str| -> Result<f64> { t.parse().map_err(|_| bad("score_breakdown", t)) };
        Some(ScoreBreakdown {
            candidate_id: chosen_id.unwrap_or(0),
            a: num(parts[0])?,
            b: num(parts[1])?,
            c: num(parts[2])?,
            d: num(parts[3])?,
            combined: num(parts[4])?,
        })
    };
    Ok(HopLogRecord {
        scenario_id: u32_field(0, "scenario_id")?,
        message_id: u32_field(1, "message_id")?,
        mode: fields[2].parse::<Strategy>().map_err(|_| bad("mode", fields[2]))?,
        hop_index: u32_field(3, "hop_index")?,
        from_id: u32_field(4, "from_id")?,
        to_id: opt_u32_field(5, "to_id")?,
        ttl_left_at_hop: u32_field(6, "ttl_left_at_hop")?,
        buffer_ratio_at_to: opt_f64_field(7, "buffer_ratio_at_to")?,
        distance_to_target_m: opt_f64_field(8, "distance_to_target_m")?,
        hop_delay_s: f64_field(9, "hop_delay_s")?,
        candidate_ids,
        chosen_id,
        score_breakdown,
        hop_outcome: fields[13].parse::<HopOutcome>().map_err(|_| bad("hop_outcome", fields[13]))?,
        final_delivered: match fields[14] {
            "true" => true,
            "false" => false,
            other => return Err(bad("final_delivered", other)),
        },
        total_delay_s: f64_field(15, "total_delay_s")?,
        total_hops: u32_field(16, "total_hops")?,
    })
}

/// Parses hop-log CSV text.
pub fn from_csv(text: &str) -> Result<Vec<HopLogRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Schema("empty hop log".into()))?;
    if header != HOP_LOG_HEADER {
        return Err(Error::Schema(format!(
            "hop log header must be exactly `{HOP_LOG_HEADER}`"
        )));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_row(l, i + 1))
        .collect()
}

pub fn read(path: &Path) -> Result<Vec<HopLogRecord>> {
    from_csv(&read_to_string(path)?)
}
