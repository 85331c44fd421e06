use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{ExperimentOutput, ReplicationRecord};
use crate::linalg::normal_pdf;

pub const RECORD_COLUMNS: &str =
    "rep,n,dist2,t_oracle,t_plugin,covered,sigma2_hat,solver_iters,clamp_fired";

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Records as CSV with a header line; missing values are empty fields and
/// reals use the shortest exact representation.
pub fn records_csv(records: &[ReplicationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RECORD_COLUMNS);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:?},{},{},{},{:?},{},{}",
            r.rep,
            r.n,
            r.dist2,
            opt_f64(r.t_oracle),
            opt_f64(r.t_plugin),
            r.covered.map(|c| c.to_string()).unwrap_or_default(),
            r.sigma2_hat,
            r.solver_iters,
            r.clamp_fired
        );
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const BINS: usize = 40;
const LO: f64 = -4.0;
const HI: f64 = 4.0;

/// Density histogram of `values` on [−4, 4] (40 bins) with the standard
/// normal density overlaid, as a standalone SVG document.
pub fn histogram_svg(values: &[f64], title: &str) -> String {
    let width = (HI - LO) / BINS as f64;
    let mut counts = [0usize; BINS];
    for &v in values {
        if (LO..HI).contains(&v) {
            counts[((v - LO) / width) as usize] += 1;
        } else if v == HI {
            counts[BINS - 1] += 1;
        }
    }
    let total = values.len().max(1) as f64;
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let peak = density.iter().copied().fold(normal_pdf(0.0), f64::max) * 1.1;

    let (left, right, top, bottom) = (50.0, 20.0, 40.0, 40.0);
    let pw = WIDTH - left - right;
    let ph = HEIGHT - top - bottom;
    let sx = |x: f64| left + (x - LO) / (HI - LO) * pw;
    let sy = |y: f64| top + ph - y / peak * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for (k, d) in density.iter().enumerate() {
        let x0 = sx(LO + k as f64 * width);
        let x1 = sx(LO + (k + 1) as f64 * width);
        let y = sy(*d);
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="#9ab" stroke="#567" stroke-width="0.5"/>"##,
            x1 - x0,
            top + ph - y
        );
    }
    let points: Vec<String> = (0..=200)
        .map(|i| {
            let x = LO + (HI - LO) * i as f64 / 200.0;
            format!("{:.2},{:.2}", sx(x), sy(normal_pdf(x)))
        })
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="red" stroke-width="2"/>"#,
        points.join(" ")
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for tick in -4..=4 {
        let x = sx(tick as f64);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{tick}</text>"#,
            top + ph + 18.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes `records.csv`, `summary.json` and, where statistics exist, one
/// histogram per sample size and statistic. Returns the written paths.
pub fn write_artifacts(
    dir: &Path,
    output: &ExperimentOutput,
    histograms: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("records.csv".into(), records_csv(&output.records))?;
    let summary = serde_json::to_string_pretty(&output.summary).expect("summary serializes");
    put("summary.json".into(), summary + "\n")?;
    if histograms {
        for row in &output.summary.rows {
            let at_n = output
                .records
                .iter()
                .filter(|r| r.n == row.n && r.converged);
            let oracle: Vec<f64> = at_n.clone().filter_map(|r| r.t_oracle).collect();
            let plugin: Vec<f64> = at_n.filter_map(|r| r.t_plugin).collect();
            if !oracle.is_empty() {
                put(
                    format!("hist_oracle_n{}.svg", row.n),
                    histogram_svg(
                        &oracle,
                        &format!("oracle-centered statistic, n = {}", row.n),
                    ),
                )?;
            }
            if !plugin.is_empty() {
                put(
                    format!("hist_plugin_n{}.svg", row.n),
                    histogram_svg(&plugin, &format!("plug-in statistic, n = {}", row.n)),
                )?;
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rec = ReplicationRecord {
            rep: 3,
            n: 100,
            dist2: 0.25,
            t_oracle: None,
            t_plugin: Some(-1.5),
            covered: Some(true),
            sigma2_hat: 0.01,
            solver_iters: 42,
            clamp_fired: false,
            converged: true,
        };
        let csv = records_csv(&[rec]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RECORD_COLUMNS);
        assert_eq!(lines[1], "3,100,0.25,,-1.5,true,0.01,42,false");
    }

    #[test]
    fn svg_shape() {
        let svg = histogram_svg(&[0.0, 0.1, -0.2, 5.0], "a <b>");
        assert!(svg.contains(r#"viewBox="0 0 640 480""#));
        assert_eq!(svg.matches("<rect x=").count(), 40);
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("a &lt;b&gt;"));
    }
}
