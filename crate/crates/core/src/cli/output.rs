//! CSV traces, gap tables and the SVG convergence chart.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::solvers::{IterateTrace, TraceRecord};

pub const TRACE_HEADER: [&str; 10] = [
    "k",
    "f_x",
    "f_mu_x",
    "mu_k",
    "L_k",
    "a_k",
    "feas_residual_box",
    "feas_residual_budget",
    "step_norm",
    "time_s",
];

pub const LYAPUNOV_HEADER: [&str; 3] = ["e_k", "etilde_k", "bound_rhs"];

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn trace_row(r: &TraceRecord, lyapunov: bool) -> Vec<String> {
    let mut row = vec![
        r.k.to_string(),
        num(r.f_x),
        num(r.f_mu_x),
        num(r.mu_k),
        num(r.l_k),
        num(r.a_k),
        num(r.feas_residual_box),
        num(r.feas_residual_budget),
        num(r.step_norm),
        r.time_s.map(num).unwrap_or_default(),
    ];
    if lyapunov {
        match &r.lyapunov {
            Some(d) => row.extend([num(d.e_k), num(d.etilde_k), num(d.bound_rhs_k)]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
    }
    row
}

/// Writes one row per recorded iteration. The Lyapunov columns appear when
/// any record carries them.
pub fn write_trace<W: Write>(out: W, trace: &IterateTrace) -> csv::Result<()> {
    let lyapunov = trace.records.iter().any(|r| r.lyapunov.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = TRACE_HEADER.to_vec();
    if lyapunov {
        header.extend(LYAPUNOV_HEADER);
    }
    w.write_record(&header)?;
    for r in &trace.records {
        w.write_record(trace_row(r, lyapunov))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &IterateTrace) -> csv::Result<()> {
    write_trace(std::fs::File::create(path)?, trace)
}

/// `(f − f*) / f*`.
pub fn relative_gap(f: f64, f_star: f64) -> f64 {
    (f - f_star) / f_star
}

/// `k, gap_sapg, gap_spg, gap_subgrad` with rows matched on `k`; a missing
/// entry (e.g. after a breakdown) is left empty.
pub fn write_gaps<W: Write>(out: W, traces: &[&IterateTrace], f_star: f64) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend(traces.iter().map(|t| format!("gap_{}", t.algorithm)));
    w.write_record(&header)?;
    let mut ks: Vec<usize> = traces.iter().flat_map(|t| t.records.iter().map(|r| r.k)).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut cursors = vec![0usize; traces.len()];
    for k in ks {
        let mut row = vec![k.to_string()];
        for (t, c) in traces.iter().zip(cursors.iter_mut()) {
            while *c < t.records.len() && t.records[*c].k < k {
                *c += 1;
            }
            match t.records.get(*c).filter(|r| r.k == k) {
                Some(r) => row.push(num(relative_gap(r.f_x, f_star))),
                None => row.push(String::new()),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `log gap` against `log k` over `k ∈ [k_lo, k_hi]`,
/// skipping nonpositive gaps. `None` with fewer than two usable points.
pub fn log_log_slope(points: impl IntoIterator<Item = (usize, f64)>, k_lo: usize, k_hi: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|&(k, g)| k >= k_lo && k <= k_hi && k > 0 && g > 0.0)
        .map(|(k, g)| ((k as f64).ln(), g.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// One line of the comparison summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub iterations: usize,
    pub final_f: f64,
    pub best_f: f64,
    pub final_gap: f64,
    pub slope: Option<f64>,
    pub status: String,
}

pub fn write_summary<W: Write>(out: W, f_star: f64, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "iterations", "final_f", "best_f", "f_star", "final_gap", "slope", "status"])?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.iterations.to_string(),
            num(r.final_f),
            num(r.best_f),
            num(f_star),
            num(r.final_gap),
            r.slope.map(num).unwrap_or_default(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Semi-log convergence chart: relative gap on a log axis against `k`.
pub fn gap_svg(series: &[(&str, Vec<(usize, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 60.0;
    const COLORS: [&str; 3] = ["#d62728", "#1f77b4", "#2ca02c"];
    let positive = series.iter().flat_map(|(_, s)| s.iter().map(|p| p.1)).filter(|g| *g > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), g| (a.min(g), b.max(g)));
    let (ylo, yhi) = if lo.is_finite() {
        (lo.log10().floor(), hi.log10().ceil().max(lo.log10().floor() + 1.0))
    } else {
        (-1.0, 0.0)
    };
    let kmax = series
        .iter()
        .flat_map(|(_, s)| s.iter().map(|p| p.0))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let px = |k: usize| PAD + (W - 2.0 * PAD) * k as f64 / kmax;
    let py = |g: f64| {
        let v = g.max(10f64.powf(ylo)).log10();
        H - PAD - (H - 2.0 * PAD) * (v - ylo) / (yhi - ylo)
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let mut e = ylo;
    while e <= yhi {
        let y = py(10f64.powf(e));
        let _ = writeln!(
            s,
            r##"<line x1="{PAD}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
            W - PAD,
            PAD - 6.0,
            y + 4.0
        );
        e += 1.0;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">k</text><text x="{}" y="{}" text-anchor="end">{kmax}</text><text x="{PAD}" y="{}">0</text>"#,
        W / 2.0,
        H - 20.0,
        W - PAD,
        H - PAD + 16.0,
        H - PAD + 16.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(k, g)| format!("{:.1},{:.1}", px(k), py(g))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            W - PAD - 70.0,
            PAD + 18.0 * (i as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts = (1..=1000).map(|k| (k, 3.0 / (k as f64).powi(2)));
        assert!((log_log_slope(pts, 10, 1000).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(log_log_slope([(5, 1.0)], 1, 10), None);
        assert_eq!(log_log_slope([(5, 0.0), (6, -1.0)], 1, 10), None);
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = gap_svg(&[("sapg", vec![(0, 1.0), (10, 1e-3)]), ("spg", vec![(0, 1.0), (10, 0.0)])]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
