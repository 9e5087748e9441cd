use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::store::*;
use crate::error::{Error, Result};

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out.push('\n');
}

fn short(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(v) if cell.contains('.') || cell.contains('e') => format!("{v:.3}"),
        _ => cell.to_string(),
    }
}

fn corpus_section(out: &mut String, dir: &Path) -> Result<()> {
    let (header, rows) = read_csv(&dir.join(CORPUS_STATS))?;
    let keep = ["channel_id", "episodes", "toxic_episodes", "toxic_pct", "chains", "chain_share_pct"];
    let idx: Vec<usize> = keep
        .iter()
        .filter_map(|k| header.iter().position(|h| h == k))
        .collect();
    out.push_str("## Corpus\n\n");
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| idx.iter().map(|&i| short(&r[i])).collect())
        .collect();
    let header: Vec<String> = idx.iter().map(|&i| header[i].clone()).collect();
    table(out, &header, &rows);
    Ok(())
}

fn textstats_section(out: &mut String, path: &Path) -> Result<()> {
    let (_, rows) = read_csv(path)?;
    // measure -> position -> mean
    let mut pivot: BTreeMap<i32, BTreeMap<String, String>> = BTreeMap::new();
    let mut measures: Vec<String> = Vec::new();
    for r in &rows {
        let position: i32 = r[1].parse().map_err(|_| Error::config(format!("bad position `{}`", r[1])))?;
        if !measures.contains(&r[0]) {
            measures.push(r[0].clone());
        }
        pivot.entry(position).or_default().insert(r[0].clone(), short(&r[2]));
    }
    out.push_str("## Text statistics by position (means)\n\n");
    if pivot.is_empty() {
        out.push_str("No positions with at least two observations.\n\n");
        return Ok(());
    }
    let mut header = vec!["position".to_string()];
    header.extend(measures.iter().cloned());
    let rows: Vec<Vec<String>> = pivot
        .iter()
        .map(|(p, m)| {
            let mut row = vec![p.to_string()];
            row.extend(measures.iter().map(|k| m.get(k).cloned().unwrap_or_default()));
            row
        })
        .collect();
    table(out, &header, &rows);
    Ok(())
}

fn cpd_section(out: &mut String, path: &Path) -> Result<()> {
    let records: Vec<CpdRecord> = read_jsonl(path)?;
    // method -> (detections, skipped, change points)
    let mut by_method: Vec<(&'static str, usize, usize, usize)> = Vec::new();
    for r in &records {
        let name = r.method.name();
        let i = match by_method.iter().position(|m| m.0 == name) {
            Some(i) => i,
            None => {
                by_method.push((name, 0, 0, 0));
                by_method.len() - 1
            }
        };
        match &r.breakpoints {
            Some(b) => {
                by_method[i].1 += 1;
                by_method[i].3 += b.len() - 1;
            }
            None => by_method[i].2 += 1,
        }
    }
    out.push_str("## Change points\n\n");
    let header: Vec<String> = ["method", "chains", "skipped", "mean change points"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = by_method
        .iter()
        .map(|&(m, d, s, c)| {
            let mean = if d > 0 { format!("{:.2}", c as f64 / d as f64) } else { String::new() };
            vec![m.to_string(), d.to_string(), s.to_string(), mean]
        })
        .collect();
    table(out, &header, &rows);
    Ok(())
}

fn eval_section(out: &mut String, path: &Path) -> Result<()> {
    let (header, rows) = read_csv(path)?;
    out.push_str("## Evaluation against consensus\n\n");
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.iter().map(|c| short(c)).collect())
        .collect();
    table(out, &header, &rows);
    Ok(())
}

fn keyword_section(out: &mut String, path: &Path) -> Result<()> {
    let (_, rows) = read_csv(path)?;
    let mut by_window: Vec<(String, Vec<String>)> = Vec::new();
    for r in rows {
        match by_window.iter_mut().find(|(w, _)| *w == r[0]) {
            Some((_, toks)) if toks.len() < 10 => toks.push(format!("{} ({})", r[1], r[2])),
            Some(_) => {}
            None => by_window.push((r[0].clone(), vec![format!("{} ({})", r[1], r[2])])),
        }
    }
    out.push_str("## Top keywords\n\n");
    for (w, toks) in by_window {
        let _ = writeln!(out, "- {w}: {}", toks.join(", "));
    }
    out.push('\n');
    Ok(())
}

pub(super) fn render(dir: &Path) -> Result<String> {
    let mut out = String::from("# Toxic conversation chains\n\n");
    corpus_section(&mut out, dir)?;
    let optional: [(&str, fn(&mut String, &Path) -> Result<()>); 4] = [
        (TEXTSTATS, textstats_section),
        (KEYWORDS, keyword_section),
        (CPD, cpd_section),
        (EVAL_REPORT, eval_section),
    ];
    for (name, section) in optional {
        let path = dir.join(name);
        if path.is_file() {
            section(&mut out, &path)?;
        }
    }
    Ok(out)
}
