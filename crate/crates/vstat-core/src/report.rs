//! Deterministic artifact writers. CSV and SVG files start with a comment
//! header recording the config hash, seed, and library version; JSON
//! artifacts carry the same fields in a `meta` object (JSON has no comment
//! syntax). CSV uses '.' decimals, ',' separators, LF line endings, and the
//! shortest round-trip float formatting, so identical runs produce byte-
//! identical files.

use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// FNV-1a over the canonical config JSON; a fingerprint, not a crypto hash.
pub fn config_hash(canonical_json: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in canonical_json.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[derive(Debug, Clone)]
pub struct ArtifactMeta {
    pub config_hash: String,
    pub seed: u64,
}

impl ArtifactMeta {
    pub fn new(canonical_json: &str, seed: u64) -> Self {
        Self {
            config_hash: config_hash(canonical_json),
            seed,
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# config_hash={}\n# seed={}\n# version={}\n",
            self.config_hash, self.seed, VERSION
        )
    }

    pub fn json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "configHash": self.config_hash,
            "seed": self.seed,
            "version": VERSION,
        })
    }
}

/// Shortest round-trip representation; shared by CSV writers and CLI
/// summaries so printed numbers equal file contents exactly.
pub fn format_float(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v}")
}

/// A CSV table: header names and rows of already-formatted cells.
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self, meta: &ArtifactMeta) -> String {
        let mut out = meta.comment_lines();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path, meta: &ArtifactMeta) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.render(meta))?;
        Ok(())
    }
}

/// Prefix-series table: columns k, Vk, and the running n^{-p} |V_k|.
pub fn series_csv_table(series: &crate::vstat::VStatSeries) -> CsvTable {
    let n = series.len();
    let scale = (n as f64).powi(series.p as i32);
    let mut table = CsvTable::new(&["k", "Vk", "scaledAbs"]);
    for (i, &v) in series.values.iter().enumerate() {
        table.push_row(vec![
            (i + 1).to_string(),
            format_float(v),
            format_float(v.abs() / scale),
        ]);
    }
    table
}

/// JSON artifact with the meta object injected at the top level.
pub fn write_json(path: &Path, meta: &ArtifactMeta, mut value: serde_json::Value) -> Result<()> {
    if let Some(obj) = value.as_object_mut() {
        obj.insert("meta".into(), meta.json_value());
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// One plotted series.
pub struct PlotSeries<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
    pub color: &'a str,
}

/// Minimal SVG line plot: fixed 640x480 canvas, linear axes with min/max
/// tick labels, one polyline per series, no external dependencies.
pub fn render_svg_lines(
    meta: &ArtifactMeta,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[PlotSeries<'_>],
    log_y: bool,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;

    let transform = |v: f64| if log_y { v.max(1e-300).ln() } else { v };
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            let ty = transform(y);
            y_min = y_min.min(ty);
            y_max = y_max.max(ty);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-300 {
        x_max = x_min + 1.0;
    }
    if (y_max - y_min).abs() < 1e-300 {
        y_max = y_min + 1.0;
    }
    let px = |x: f64| ML + (x - x_min) / (x_max - x_min) * (W - ML - MR);
    let py = |y: f64| H - MB - (transform(y) - y_min) / (y_max - y_min) * (H - MT - MB);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(
        svg,
        "<!-- config_hash={} seed={} version={} -->",
        meta.config_hash, meta.seed, VERSION
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">{}</text>",
        W / 2.0,
        xml_escape(title)
    );
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    );
    // tick labels
    let fmt_tick = |v: f64| {
        if v == 0.0 {
            "0".to_string()
        } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
            format!("{v:.4}")
        } else {
            format!("{v:.3e}")
        }
    };
    let y_lo = if log_y { y_min.exp() } else { y_min };
    let y_hi = if log_y { y_max.exp() } else { y_max };
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        ML,
        H - MB + 16.0,
        fmt_tick(x_min)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        W - MR,
        H - MB + 16.0,
        fmt_tick(x_max)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        ML - 6.0,
        H - MB,
        fmt_tick(y_lo)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        ML - 6.0,
        MT + 4.0,
        fmt_tick(y_hi)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">{}</text>",
        (ML + W - MR) / 2.0,
        H - 12.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        xml_escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
            s.color,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"{}\">{}</text>",
            W - MR - 180.0,
            MT + 16.0 * (i as f64 + 1.0),
            s.color,
            xml_escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(
    path: &Path,
    meta: &ArtifactMeta,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[PlotSeries<'_>],
    log_y: bool,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(
        path,
        render_svg_lines(meta, title, x_label, y_label, series, log_y),
    )?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("abc"), config_hash("abc"));
        assert_ne!(config_hash("abc"), config_hash("abd"));
    }

    #[test]
    fn csv_render_has_header_comments() {
        let meta = ArtifactMeta::new("{}", 7);
        let mut t = CsvTable::new(&["x", "y"]);
        t.push_row(vec![format_float(0.5), format_float(1.0 / 3.0)]);
        let text = t.render(&meta);
        assert!(text.starts_with("# config_hash="));
        assert!(text.contains("\n# seed=7\n"));
        assert!(text.contains("x,y\n"));
        assert!(text.contains("0.5,0.3333333333333333\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn format_float_roundtrips() {
        for v in [0.1, 1.0 / 3.0, 95.4341659886112, 1e-12, 0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn svg_renders() {
        let meta = ArtifactMeta::new("{}", 1);
        let pts = [(0.0, 1.0), (1.0, 0.5), (2.0, 0.1)];
        let svg = render_svg_lines(
            &meta,
            "tail",
            "x",
            "P",
            &[PlotSeries {
                label: "empirical",
                points: &pts,
                color: "steelblue",
            }],
            true,
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("config_hash="));
    }
}
