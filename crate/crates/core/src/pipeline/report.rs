//! Markdown tables and SVG bar charts from the `stats/` and `compare/`
//! outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{list_files, systolic_frame, REFERENCE_MODEL};
use crate::error::{Error, Result};
use crate::hemodynamics::{read_comparison_csv, read_stats_csv, Comparison, Param, SegmentStats, ALL_SEGMENTS};
use crate::mesh::SEGMENTS;

fn segment_names() -> Vec<&'static str> {
    SEGMENTS.iter().map(|s| s.name()).chain([ALL_SEGMENTS]).collect()
}

fn frame_of(param: Param, frame: usize) -> Option<usize> {
    match param {
        Param::Osi => None,
        _ => Some(frame),
    }
}

fn fmt_mean_std(mean: Option<f64>, std: Option<f64>) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{m:.4e} ± {s:.2e}"),
        (Some(m), None) => format!("{m:.4e}"),
        _ => "n/a".into(),
    }
}

/// Grouped bars with ± std whiskers: one group per segment, one bar per
/// model.
pub fn svg_bar_chart(title: &str, groups: &[&str], series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 360.0;
    const LEFT: f64 = 70.0;
    const BOTTOM: f64 = 40.0;
    const TOP: f64 = 40.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

    let top_value = series
        .iter()
        .flat_map(|(_, v)| v.iter().map(|(m, s)| m + s))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let top_value = if top_value > 0.0 { top_value * 1.1 } else { 1.0 };
    let plot_h = H - TOP - BOTTOM;
    let y = |v: f64| TOP + plot_h * (1.0 - v.max(0.0) / top_value);
    let group_w = (W - LEFT - 10.0) / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        H - BOTTOM
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        H - BOTTOM,
        W - 10.0
    );
    for tick in 0..=4 {
        let v = top_value * tick as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3e}</text>"#,
            LEFT - 4.0,
            y(v) + 4.0
        );
    }
    for (g, name) in groups.iter().enumerate() {
        let x0 = LEFT + g as f64 * group_w + group_w * 0.1;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{name}</text>"#,
            LEFT + (g as f64 + 0.5) * group_w,
            H - BOTTOM + 16.0
        );
        for (k, (_, values)) in series.iter().enumerate() {
            let Some(&(mean, std)) = values.get(g) else { continue };
            if !mean.is_finite() {
                continue;
            }
            let x = x0 + k as f64 * bar_w;
            let color = COLORS[k % COLORS.len()];
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}"/>"#,
                y(mean),
                bar_w * 0.9,
                (H - BOTTOM) - y(mean)
            );
            if std.is_finite() && std > 0.0 {
                let cx = x + bar_w * 0.45;
                let _ = writeln!(
                    s,
                    r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                    y(mean + std),
                    y(mean - std)
                );
            }
        }
    }
    for (k, (name, _)) in series.iter().enumerate() {
        let ly = TOP + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{ly}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{name}</text>"#,
            W - 160.0,
            COLORS[k % COLORS.len()],
            W - 145.0,
            ly + 9.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn load_models(out: &Path) -> Result<Vec<(String, SegmentStats)>> {
    let mut models = Vec::new();
    for f in list_files(&out.join("stats"), "csv")? {
        let name = f.file_stem().unwrap().to_string_lossy().to_string();
        models.push((name, read_stats_csv(&f)?));
    }
    // reference first
    models.sort_by_key(|(name, _)| (name != REFERENCE_MODEL, name.clone()));
    if models.first().map(|m| m.0.as_str()) != Some(REFERENCE_MODEL) {
        return Err(Error::InvalidInput(format!(
            "no {REFERENCE_MODEL} statistics to report"
        )));
    }
    Ok(models)
}

fn load_comparisons(out: &Path) -> Result<Vec<(String, Comparison)>> {
    let dir = out.join("compare");
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    list_files(&dir, "csv")?
        .into_iter()
        .map(|f| {
            Ok((
                f.file_stem().unwrap().to_string_lossy().to_string(),
                read_comparison_csv(&f)?,
            ))
        })
        .collect()
}

/// Writes `report/report.md` and one chart per parameter; returns the
/// written paths.
pub fn render_report(out: &Path) -> Result<Vec<PathBuf>> {
    let models = load_models(out)?;
    let comparisons = load_comparisons(out)?;
    let frame = systolic_frame(&models[0].1);
    let segments = segment_names();
    let dir = out.join("report");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut written = Vec::new();

    let mut md = String::new();
    let _ = writeln!(md, "# Hemodynamic parameters by segment\n");
    let _ = writeln!(
        md,
        "Peak-systolic frame: {frame} (largest mean WSS of the {REFERENCE_MODEL} model). OSI is a cycle quantity.\n"
    );
    for param in Param::ALL {
        let f = frame_of(param, frame);
        let _ = writeln!(md, "## {} ({})\n", param.name(), param.unit());
        let header: Vec<&str> = models.iter().map(|m| m.0.as_str()).collect();
        let _ = writeln!(md, "| segment | {} |", header.join(" | "));
        let _ = writeln!(md, "|---|{}", "---|".repeat(models.len()));
        let mut series: Vec<(String, Vec<(f64, f64)>)> =
            models.iter().map(|(name, _)| (name.clone(), Vec::new())).collect();
        for seg in &segments {
            let mut cells = Vec::new();
            for (k, (_, stats)) in models.iter().enumerate() {
                let row = stats.get(seg, f, param);
                let (mean, std) = row.map_or((None, None), |r| (r.mean, r.std));
                cells.push(fmt_mean_std(mean, std));
                series[k].1.push((mean.unwrap_or(f64::NAN), std.unwrap_or(0.0)));
            }
            let _ = writeln!(md, "| {seg} | {} |", cells.join(" | "));
        }
        md.push('\n');
        let svg = svg_bar_chart(&format!("{} ({})", param.name(), param.unit()), &segments, &series);
        let path = dir.join(format!("{}.svg", param.name()));
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        let _ = writeln!(md, "![{}]({}.svg)\n", param.name(), param.name());
        written.push(path);
    }

    if !comparisons.is_empty() {
        let _ = writeln!(md, "# Differences against {REFERENCE_MODEL}\n");
        let _ = writeln!(
            md,
            "Relative difference in percent, positive when the model is larger.\n"
        );
        for (name, cmp) in &comparisons {
            let _ = writeln!(md, "## {name}\n");
            let params: Vec<&str> = Param::ALL.iter().map(|p| p.name()).collect();
            let _ = writeln!(md, "| segment | {} |", params.join(" | "));
            let _ = writeln!(md, "|---|{}", "---|".repeat(params.len()));
            for seg in &segments {
                let cells: Vec<String> = Param::ALL
                    .iter()
                    .map(|&p| {
                        let f = frame_of(p, frame);
                        let row = cmp
                            .rows
                            .iter()
                            .find(|r| r.segment == *seg && r.frame == f && r.param == p);
                        match row.and_then(|r| r.rel_diff_percent.map(|v| (v, r.rel_diff_std))) {
                            Some((v, Some(s))) => format!("{v:+.2} ± {s:.2}"),
                            Some((v, None)) => format!("{v:+.2}"),
                            None => "n/a".into(),
                        }
                    })
                    .collect();
                let _ = writeln!(md, "| {seg} | {} |", cells.join(" | "));
            }
            md.push('\n');
        }
    }

    let path = dir.join("report.md");
    std::fs::write(&path, md).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_has_one_bar_per_value() {
        let series = vec![
            ("a".to_string(), vec![(1.0, 0.1), (2.0, 0.2)]),
            ("b".to_string(), vec![(1.5, 0.0), (f64::NAN, 0.0)]),
        ];
        let svg = svg_bar_chart("t", &["s1", "s2"], &series);
        assert!(svg.starts_with("<svg"));
        // three data bars plus two legend swatches
        assert_eq!(svg.matches("<rect").count(), 5);
        assert_eq!(svg.matches("stroke=\"black\"/>").count(), 2 + 2);
    }
}
