//! Minimal static SVG line plots (stacked panels sharing the x axis).

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal dashed guide, e.g. the reference value.
    pub guide: Option<f64>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 220.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 40.0;
const GAP: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn render(title: &str, x_label: &str, panels: &[Panel]) -> String {
    let height = MARGIN_TOP + panels.len() as f64 * (PANEL_HEIGHT + GAP) + 10.0;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    let (x_lo, x_hi) = bounds(panels.iter().flat_map(|p| p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0))));
    for (pi, panel) in panels.iter().enumerate() {
        let top = MARGIN_TOP + pi as f64 * (PANEL_HEIGHT + GAP);
        let (y_lo, y_hi) = bounds(
            panel
                .series
                .iter()
                .flat_map(|s| s.points.iter().map(|q| q.1))
                .chain(panel.guide),
        );
        let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
        let sy = |y: f64| top + PANEL_HEIGHT - (y - y_lo) / (y_hi - y_lo) * PANEL_HEIGHT;

        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{PANEL_HEIGHT}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let y = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
                MARGIN_LEFT - 6.0,
                sy(y) + 4.0,
                y
            );
            let x = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.0}</text>"#,
                sx(x),
                top + PANEL_HEIGHT + 15.0,
                x
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{:.1}" transform="rotate(-90 18 {:.1})" text-anchor="middle">{}</text>"#,
            top + PANEL_HEIGHT / 2.0,
            top + PANEL_HEIGHT / 2.0,
            escape(&panel.y_label)
        );
        if let Some(g) = panel.guide {
            let _ = writeln!(
                svg,
                r#"<line x1="{MARGIN_LEFT}" x2="{:.1}" y1="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="5,4"/>"#,
                MARGIN_LEFT + plot_w,
                sy(g),
                sy(g)
            );
        }
        for (si, s) in panel.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
                pts.join(" ")
            );
            let ly = top + 16.0 + si as f64 * 18.0;
            let lx = MARGIN_LEFT + plot_w + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        height - 4.0,
        escape(x_label)
    );
    svg.push_str("</svg>\n");
    svg
}
