use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::Serialize;

use super::RunRecord;
use crate::error::Result;

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quantiles of the non-divergent values of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// `None` when every record in the group diverged.
    pub median: Option<f64>,
    pub q25: Option<f64>,
    pub q75: Option<f64>,
    pub n_finite: usize,
    pub n_diverged: usize,
}

fn summarise(records: &[&RunRecord]) -> Summary {
    let mut v: Vec<f64> = records.iter().filter(|r| !r.diverged).map(|r| r.gen_error).collect();
    v.sort_by(f64::total_cmp);
    let n_diverged = records.len() - v.len();
    let q = |x| (!v.is_empty()).then(|| quantile(&v, x));
    Summary {
        median: q(0.5),
        q25: q(0.25),
        q75: q(0.75),
        n_finite: v.len(),
        n_diverged,
    }
}

/// Groups records by `key` and summarises each group.
pub fn aggregate_by<K: Ord, F: Fn(&RunRecord) -> K>(records: &[RunRecord], key: F) -> BTreeMap<K, Summary> {
    let mut groups: BTreeMap<K, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(key(r)).or_default().push(r);
    }
    groups.into_iter().map(|(k, g)| (k, summarise(&g))).collect()
}

/// One line of the aggregate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub alpha: f64,
    pub a: f64,
    pub d: usize,
    pub summary: Summary,
}

/// Median and interquartile range per `(α, a, d)`, ordered by `a`, `d`, `α`.
pub fn aggregate_median_iqr(records: &[RunRecord]) -> Vec<AggregateRow> {
    let key = |r: &RunRecord| (r.a.to_bits(), r.d, r.alpha.to_bits());
    // Sorting on the bit patterns is numeric order for positive floats.
    aggregate_by(records, key)
        .into_iter()
        .map(|((a, d, alpha), summary)| AggregateRow {
            alpha: f64::from_bits(alpha),
            a: f64::from_bits(a),
            d,
            summary,
        })
        .collect()
}

/// Header `replication,alpha,a,d,n,p,seed,gen_error,diverged`.
pub fn write_records_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for r in rd.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Header `alpha,a,d,median,q25,q75,n_diverged`; all-divergent groups keep
/// empty quantile fields.
pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "a", "d", "median", "q25", "q75", "n_diverged"])?;
    for r in rows {
        w.write_record([
            r.alpha.to_string(),
            r.a.to_string(),
            r.d.to_string(),
            opt(r.summary.median),
            opt(r.summary.q25),
            opt(r.summary.q75),
            r.summary.n_diverged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Line plot of the median against α with the IQR as a band, for the rows
/// with the given `(a, d)`.
pub fn render_svg(rows: &[AggregateRow], a: f64, d: usize) -> String {
    let pts: Vec<(f64, f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.a == a && r.d == d)
        .filter_map(|r| Some((r.alpha, r.summary.median?, r.summary.q25?, r.summary.q75?)))
        .collect();
    let (w, h, m) = (640.0, 400.0, 60.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">a = {a}, d = {d}</text>"#,
        w / 2.0
    );
    if pts.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif">no finite runs</text>"#,
            w / 2.0,
            h / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }
    let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ymin = pts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let ymax = pts.iter().map(|p| p.3).fold(f64::NEG_INFINITY, f64::max);
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let yspan = if ymax > ymin { ymax - ymin } else { ymax.abs().max(1.0) };
    let px = |x: f64| m + (x - xmin) / xspan * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - ymin) / yspan * (h - 2.0 * m);

    let mut band = String::new();
    for p in &pts {
        let _ = write!(band, "{:.2},{:.2} ", px(p.0), py(p.3));
    }
    for p in pts.iter().rev() {
        let _ = write!(band, "{:.2},{:.2} ", px(p.0), py(p.2));
    }
    let _ = writeln!(
        s,
        r#"<polygon points="{}" fill="steelblue" fill-opacity="0.25"/>"#,
        band.trim_end()
    );
    let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        line.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{y0}" stroke="black"/>"#,
        y0 = h - m,
        x1 = w - m
    );
    for (x, anchor) in [(xmin, "start"), (xmax, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{x}</text>"#,
            px(x),
            h - m + 18.0
        );
    }
    for y in [ymin, ymax] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="12">{y:.3e}</text>"#,
            m - 6.0,
            py(y) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">alpha</text>"#,
        w / 2.0,
        h - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {})">median generalization error</text>"#,
        h / 2.0,
        h / 2.0
    );
    s.push_str("</svg>\n");
    s
}
