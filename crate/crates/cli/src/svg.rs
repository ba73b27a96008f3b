//! Minimal SVG stem plots, one panel per profile, stacked vertically.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 200.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 35.0;

pub struct Panel {
    pub title: String,
    /// `values[j-1]` is plotted at site `j`.
    pub values: Vec<f64>,
}

/// Panels share the site axis (`1..=max N`) and the value axis, so common
/// edge structure lines up vertically.
pub fn stem_panels(panels: &[Panel], comment: &str) -> String {
    let max_sites = panels.iter().map(|p| p.values.len()).max().unwrap_or(1).max(1);
    let max_value = panels
        .iter()
        .flat_map(|p| p.values.iter().copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |j: usize| MARGIN_LEFT + plot_w * (j as f64 - 0.5) / max_sites as f64;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    for line in comment.lines() {
        let _ = writeln!(s, "<!-- {} -->", line.trim_start_matches("# ").replace("--", "- -"));
    }
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for (k, panel) in panels.iter().enumerate() {
        let top = k as f64 * PANEL_HEIGHT + MARGIN_TOP;
        let base = top + plot_h;
        let y_of = |v: f64| base - plot_h * v / max_value;
        let _ = writeln!(s, "<g>");
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            MARGIN_LEFT + plot_w / 2.0,
            top - 10.0,
            panel.title
        );
        let _ = writeln!(
            s,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{base:.1}\" x2=\"{:.1}\" y2=\"{base:.1}\" stroke=\"black\"/>",
            WIDTH - MARGIN_RIGHT
        );
        let _ = writeln!(
            s,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{top:.1}\" x2=\"{MARGIN_LEFT}\" y2=\"{base:.1}\" stroke=\"black\"/>"
        );
        for tick in [0.0, 0.5, 1.0] {
            let y = y_of(tick * max_value);
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.2}</text>",
                MARGIN_LEFT - 6.0,
                y + 4.0,
                tick * max_value
            );
        }
        for (i, &v) in panel.values.iter().enumerate() {
            let j = i + 1;
            let x = x_of(j);
            let y = y_of(v);
            let _ = writeln!(
                s,
                "<line x1=\"{x:.1}\" y1=\"{base:.1}\" x2=\"{x:.1}\" y2=\"{y:.1}\" stroke=\"steelblue\" stroke-width=\"1.5\"/>"
            );
            let _ = writeln!(s, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"steelblue\"/>");
            if j == 1 || j % 5 == 0 || j == panel.values.len() {
                let _ = writeln!(
                    s,
                    "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{j}</text>",
                    base + 16.0
                );
            }
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
