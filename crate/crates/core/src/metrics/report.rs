use std::io::Write;

use super::MetricReport;

/// Writes one tab-separated row per utterance and a final `mean` row.
pub fn write_report<W: Write>(mut out: W, rows: &[(String, MetricReport)]) -> std::io::Result<()> {
    writeln!(out, "utterance\tllr\tfwsnrseg\tlsd")?;
    for (name, r) in rows {
        writeln!(out, "{name}\t{:.6}\t{:.6}\t{:.6}", r.llr, r.fwsnrseg, r.lsd)?;
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let mean = |f: fn(&MetricReport) -> f64| rows.iter().map(|(_, r)| f(r)).sum::<f64>() / n;
        writeln!(
            out,
            "mean\t{:.6}\t{:.6}\t{:.6}",
            mean(|r| r.llr),
            mean(|r| r.fwsnrseg),
            mean(|r| r.lsd)
        )?;
    }
    Ok(())
}
