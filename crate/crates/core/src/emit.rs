//! Sweep output: CSV (the stable contract), JSON and a minimal SVG plot.
//!
//! All three renderers are pure functions of the [`SweepResult`], so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{HbcError, Result};
use crate::sweep::{Spacing, SweepMetadata, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    /// Pretty-printed JSON with metadata.
    StructuredText,
    SvgPlot,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "structured-text" | "json" => Some(OutputFormat::StructuredText),
            "svg-plot" | "svg" => Some(OutputFormat::SvgPlot),
            _ => None,
        }
    }
}

/// Nine significant digits in scientific notation.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn render_csv(result: &SweepResult) -> String {
    let has_link = result.rows.iter().any(|r| r.link.is_some());
    let has_gap = result.rows.iter().any(|r| r.gap_rel.is_some());
    let mut out = String::from("axis,re,im,mag_db,phase_deg");
    if has_link {
        out.push_str(",snr_db,capacity_bps,ber");
    }
    if has_gap {
        out.push_str(",gap_rel");
    }
    out.push('\n');
    for row in &result.rows {
        let mut cols = vec![
            fmt_sig9(row.axis),
            fmt_sig9(row.transfer.re),
            fmt_sig9(row.transfer.im),
            fmt_sig9(row.mag_db),
            fmt_sig9(row.phase_deg),
        ];
        if has_link {
            match &row.link {
                Some(l) => cols.extend([fmt_sig9(l.snr_db), fmt_sig9(l.capacity), fmt_sig9(l.ber)]),
                None => cols.extend([String::new(), String::new(), String::new()]),
            }
        }
        if has_gap {
            cols.push(row.gap_rel.map(fmt_sig9).unwrap_or_default());
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonRow {
    axis: f64,
    re: f64,
    im: f64,
    mag_db: f64,
    phase_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    capacity_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_rel: Option<f64>,
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    metadata: &'a SweepMetadata,
    rows: Vec<JsonRow>,
}

pub fn render_json(result: &SweepResult) -> String {
    let doc = JsonDoc {
        metadata: &result.metadata,
        rows: result
            .rows
            .iter()
            .map(|r| JsonRow {
                axis: r.axis,
                re: r.transfer.re,
                im: r.transfer.im,
                mag_db: r.mag_db,
                phase_deg: r.phase_deg,
                snr_db: r.link.map(|l| l.snr_db),
                capacity_bps: r.link.map(|l| l.capacity),
                ber: r.link.map(|l| l.ber),
                gap_rel: r.gap_rel,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("sweep results serialize");
    s.push('\n');
    s
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;

/// Magnitude in dB against the axis; log-x for log sweeps over positive
/// values. A grounded-touch frequency sweep gets a −3 dB marker at the
/// corner frequency.
pub fn render_svg(result: &SweepResult) -> String {
    let rows: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter(|r| r.mag_db.is_finite())
        .map(|r| (r.axis, r.mag_db))
        .collect();
    let log_x = result.metadata.spacing == Spacing::Log && rows.iter().all(|(x, _)| *x > 0.0);
    let tx = |x: f64| if log_x { x.log10() } else { x };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if rows.is_empty() {
        let _ = writeln!(out, "</svg>");
        return out;
    }

    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &rows {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if let Some(fc) = result.metadata.cutoff_hz {
        y0 = y0.min(y1 - 3.0);
        if fc > 0.0 {
            x0 = x0.min(tx(fc));
            x1 = x1.max(tx(fc));
        }
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1.0 {
        let mid = 0.5 * (y0 + y1);
        y0 = mid - 0.5;
        y1 = mid + 0.5;
    }
    let px = |x: f64| MARGIN + (tx(x) - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let points: Vec<String> = rows
        .iter()
        .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    );

    if let Some(fc) = result.metadata.cutoff_hz.filter(|f| *f > 0.0) {
        let ref_db = y1 - 3.0;
        let _ = writeln!(
            out,
            r#"<line class="minus-3db" x1="{MARGIN}" y1="{y:.3}" x2="{x2}" y2="{y:.3}" stroke="crimson" stroke-dasharray="4 3"/>"#,
            y = py(ref_db),
            x2 = W - MARGIN
        );
        let _ = writeln!(
            out,
            r#"<line class="cutoff" x1="{x:.3}" y1="{MARGIN}" x2="{x:.3}" y2="{y2}" stroke="crimson" stroke-dasharray="4 3"/>"#,
            x = px(fc),
            y2 = H - MARGIN
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-size="11" fill="crimson">-3 dB @ {} Hz</text>"#,
            px(fc) + 4.0,
            py(ref_db) - 4.0,
            fmt_sig9(fc)
        );
    }

    let x_label = if log_x {
        format!("log10 {}", result.metadata.axis)
    } else {
        result.metadata.axis.clone()
    };
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{x_label}</text>"#,
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{:.1}" font-size="12" transform="rotate(-90 15 {:.1})" text-anchor="middle">|T| (dB)</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, label) in [(y0, y0), (y1, y1)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.3}" font-size="10" text-anchor="end">{label:.2}</text>"#,
            MARGIN - 4.0,
            py(v) + 3.0
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}

pub fn render(result: &SweepResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(result),
        OutputFormat::StructuredText => render_json(result),
        OutputFormat::SvgPlot => render_svg(result),
    }
}

pub fn emit(result: &SweepResult, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render(result, format)).map_err(|source| HbcError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CapacitanceProfile, ContactInterface, Scenario, ScenarioKind};
    use crate::sweep::{run_sweep, ModelChoice, SweepAxis, SweepSpec};
    use crate::units::{CM2, KHZ, MHZ, PF};

    fn touch() -> Scenario {
        Scenario::new(
            ScenarioKind::GroundedMetal,
            CapacitanceProfile {
                c_x_tx: 1.0 * PF,
                c_b: 150.0 * PF,
                c_x_rx: 1.0 * PF,
                c_l: 5.0 * PF,
                ..Default::default()
            },
        )
        .with_contact(ContactInterface::with_default_resistivity(CM2, 10.0 * PF).unwrap())
    }

    #[test]
    fn csv_shape() {
        let spec = SweepSpec::new(SweepAxis::Frequency, 100.0 * KHZ, 30.0 * MHZ, 301, Spacing::Log);
        let r = run_sweep(&touch(), &spec, ModelChoice::Both).unwrap();
        let csv = render_csv(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 302);
        assert_eq!(lines[0], "axis,re,im,mag_db,phase_deg,gap_rel");
        assert_eq!(lines[1].split(',').next().unwrap(), "1.00000000e5");
    }

    #[test]
    fn sig9() {
        assert_eq!(fmt_sig9(1.0), "1.00000000e0");
        assert_eq!(fmt_sig9(-0.00123456789012), "-1.23456789e-3");
    }

    #[test]
    fn svg_has_cutoff_marker() {
        let spec = SweepSpec::new(SweepAxis::Frequency, 1.0 * KHZ, 30.0 * MHZ, 50, Spacing::Log);
        let r = run_sweep(&touch(), &spec, ModelChoice::ClosedForm).unwrap();
        let svg = render_svg(&r);
        assert!(svg.contains("class=\"minus-3db\""));
        assert!(svg.contains("class=\"cutoff\""));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn json_round_trips_through_serde() {
        let spec = SweepSpec::new(SweepAxis::Frequency, 1.0 * MHZ, 2.0 * MHZ, 2, Spacing::Linear);
        let r = run_sweep(&touch(), &spec, ModelChoice::ClosedForm).unwrap();
        let v: serde_json::Value = serde_json::from_str(&render_json(&r)).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
        assert_eq!(v["metadata"]["model_variant"], "approximate");
    }
}
