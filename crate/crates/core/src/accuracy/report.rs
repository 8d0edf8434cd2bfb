//! CSV tables, histogram and radar data, distance maps and profile polylines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{AccuracyError, DeviationStats, ProfileSection, StageOutcome, StageTable, StudyReport, StudySummary};
use crate::mesh::{save_scalar_ply, write_bytes};

/// Numbers are printed with four decimals; negative zero prints as zero.
fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

/// A table row as typed from a report: `splint,N,AVG_mm,STD_mm[,alpha_deg,t_mm]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub splint: String,
    pub n: usize,
    pub avg: f64,
    pub std: f64,
    pub alpha_deg: Option<f64>,
    pub t_mm: Option<f64>,
}

impl TableRow {
    pub fn stats(&self) -> DeviationStats {
        DeviationStats::from_summary(self.n, self.avg, self.std)
    }
}

const TOTAL_LABELS: [&str; 3] = ["Total N", "Weighted mean", "Pooled STD"];

/// Reads a table in the export layout; totals rows are ignored.
pub fn parse_table_csv(text: &str) -> Result<Vec<TableRow>, AccuracyError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(AccuracyError::Input("empty table".into()));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let corrective = match cols.as_slice() {
        ["splint", "N", "AVG_mm", "STD_mm"] => false,
        ["splint", "N", "AVG_mm", "STD_mm", "alpha_deg", "t_mm"] => true,
        _ => {
            return Err(AccuracyError::Input(format!(
                "line 1: expected header splint,N,AVG_mm,STD_mm[,alpha_deg,t_mm], got '{header}'"
            )))
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if TOTAL_LABELS.contains(&f[0]) {
            continue;
        }
        if f.len() != cols.len() {
            return Err(AccuracyError::Input(format!("line {}: expected {} fields", i + 1, cols.len())));
        }
        let bad = |what: &str| AccuracyError::Input(format!("line {}: invalid {what}", i + 1));
        let float = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        rows.push(TableRow {
            splint: f[0].to_string(),
            n: f[1].parse().map_err(|_| bad("N"))?,
            avg: float(f[2], "AVG")?,
            std: float(f[3], "STD")?,
            alpha_deg: if corrective { Some(float(f[4], "alpha")?) } else { None },
            t_mm: if corrective { Some(float(f[5], "t")?) } else { None },
        });
    }
    Ok(rows)
}

/// Formats rows plus the three totals rows (omitted when `summary` is `None`).
pub fn format_table(rows: &[TableRow], corrective: bool, summary: Option<&StudySummary>) -> String {
    let mut s = String::from("splint,N,AVG_mm,STD_mm");
    if corrective {
        s.push_str(",alpha_deg,t_mm");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{},{},{}", r.splint, r.n, num(r.avg), num(r.std));
        if corrective {
            let o = |v: Option<f64>| v.map(num).unwrap_or_default();
            let _ = write!(s, ",{},{}", o(r.alpha_deg), o(r.t_mm));
        }
        s.push('\n');
    }
    if let Some(sum) = summary {
        let pad = if corrective { ",," } else { "" };
        let _ = writeln!(s, "Total N,{},,{pad}", sum.total_n);
        let _ = writeln!(s, "Weighted mean,,{},{pad}", num(sum.weighted_avg));
        let _ = writeln!(s, "Pooled STD,,,{}{pad}", num(sum.pooled_std));
    }
    s
}

fn rows_of(table: &StageTable) -> Vec<TableRow> {
    table
        .rows
        .iter()
        .filter_map(|(name, o)| {
            let st = o.stats()?;
            let c = o.corrective();
            Some(TableRow {
                splint: name.clone(),
                n: st.n,
                avg: st.avg,
                std: st.std,
                alpha_deg: c.map(|c| c.alpha_deg),
                t_mm: c.map(|c| c.t_mm),
            })
        })
        .collect()
}

pub fn write_stage_csv(table: &StageTable) -> String {
    format_table(&rows_of(table), table.kind.is_corrective(), table.summary.as_ref())
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes the stage tables, radar data, histograms, skipped-stage list, per-vertex
/// distance maps and profile polylines into `dir`. Returns the written paths.
pub fn export_report(report: &StudyReport, profiles: &[ProfileSection], dir: &Path) -> Result<Vec<PathBuf>, AccuracyError> {
    std::fs::create_dir_all(dir).map_err(|e| AccuracyError::Input(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    fn put(dir: &Path, written: &mut Vec<PathBuf>, name: String, text: String) -> Result<(), AccuracyError> {
        let p = dir.join(name);
        write_bytes(&p, text.as_bytes())?;
        written.push(p);
        Ok(())
    }

    for t in &report.tables {
        put(dir, &mut written, format!("stage{}_{}.csv", t.kind.number(), t.kind.name()), write_stage_csv(t))?;
    }

    let mut radar = String::from("stage,procedure,total_N,weighted_avg_mm,pooled_std_mm\n");
    for t in &report.tables {
        match &t.summary {
            Some(s) => {
                let _ = writeln!(
                    radar,
                    "{},{},{},{},{}",
                    t.kind.number(),
                    t.kind.name(),
                    s.total_n,
                    num(s.weighted_avg),
                    num(s.pooled_std)
                );
            }
            None => {
                let _ = writeln!(radar, "{},{},0,,", t.kind.number(), t.kind.name());
            }
        }
    }
    put(dir, &mut written, "summary.csv".into(), radar)?;

    let mut hist = String::from("stage,splint,bin_lo_mm,bin_hi_mm,count\n");
    for t in &report.tables {
        for (name, o) in &t.rows {
            let Some(h) = o.stats().and_then(|s| s.histogram.as_ref()) else { continue };
            for (k, &c) in h.counts.iter().enumerate() {
                let lo = if k == 0 { "-inf".to_string() } else { num(h.edges[k - 1]) };
                let hi = if k == h.counts.len() - 1 { "inf".to_string() } else { num(h.edges[k]) };
                let _ = writeln!(hist, "{},{name},{lo},{hi},{c}", t.kind.number());
            }
        }
    }
    put(dir, &mut written, "histograms.csv".into(), hist)?;

    let mut skipped = String::from("splint,stage,status,reason\n");
    for t in &report.tables {
        for (name, o) in &t.rows {
            let (status, reason) = match o {
                StageOutcome::Skipped(r) => ("skipped", r),
                StageOutcome::Failed(r) => ("failed", r),
                _ => continue,
            };
            let _ = writeln!(skipped, "{name},{},{status},\"{}\"", t.kind.name(), reason.replace('"', "'"));
        }
    }
    put(dir, &mut written, "skipped.csv".into(), skipped)?;

    let mut residuals = String::from("stage,splint,N,AVG_mm,STD_mm\n");
    for t in &report.tables {
        for (name, o) in &t.rows {
            if let Some(c) = o.corrective() {
                let _ = writeln!(
                    residuals,
                    "{},{name},{},{},{}",
                    t.kind.number(),
                    c.residual.n,
                    num(c.residual.avg),
                    num(c.residual.std)
                );
            }
        }
    }
    put(dir, &mut written, "corrected_residuals.csv".into(), residuals)?;

    for case in &report.cases {
        for m in &case.maps {
            let p = dir.join(format!("map_{}_stage{}.ply", file_stem(&case.name), m.stage.number()));
            save_scalar_ply(&m.mesh, &m.values, "deviation", &p)?;
            written.push(p);
        }
    }

    for (k, prof) in profiles.iter().enumerate() {
        let mut s = String::from("role,polyline,x,y,z\n");
        for (role, lines) in &prof.sections {
            for (i, l) in lines.iter().enumerate() {
                for p in &l.points {
                    let _ = writeln!(s, "{role},{i},{},{},{}", num(p.x), num(p.y), num(p.z));
                }
            }
        }
        put(dir, &mut written, format!("profile_{}.csv", k + 1), s)?;
        if !prof.thickness.is_empty() {
            let mut s = String::from("sample,thickness_mm\n");
            for (i, t) in prof.thickness.iter().enumerate() {
                let _ = writeln!(s, "{i},{}", num(*t));
            }
            put(dir, &mut written, format!("profile_{}_thickness.csv", k + 1), s)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accuracy::{aggregate, StageKind};

    #[test]
    fn round_trip_of_a_corrective_table() {
        let text = "splint,N,AVG_mm,STD_mm,alpha_deg,t_mm\n1,100,0.0100,0.2000,0.1000,0.2000\n2,300,-0.0300,0.1000,0.3000,0.4000\n";
        let rows = parse_table_csv(text).unwrap();
        assert_eq!(rows.len(), 2);
        let sum = aggregate(&rows.iter().map(TableRow::stats).collect::<Vec<_>>()).unwrap();
        let out = format_table(&rows, true, Some(&sum));
        assert!(out.starts_with(text));
        assert!(out.contains("Total N,400,,,,\n"));
        assert_eq!(parse_table_csv(&out).unwrap(), rows);
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = StageTable {
            kind: StageKind::SplintReproduction,
            rows: vec![],
            summary: None,
        };
        assert_eq!(write_stage_csv(&t), "splint,N,AVG_mm,STD_mm\n");
    }

    #[test]
    fn bad_tables_name_the_line() {
        let err = parse_table_csv("splint,N,AVG_mm,STD_mm\n1,12,abc,0.1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_table_csv("a,b\n").is_err());
    }
}
