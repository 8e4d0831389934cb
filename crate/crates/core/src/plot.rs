//! Minimal SVG scatter of simulation summaries: variance on x, mean on y,
//! one color per original disagreement level.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::annotation::Rate;
use crate::simulation::SimulationSummary;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn scatter_svg(summaries: &[SimulationSummary], title: &str) -> String {
    let max_variance = summaries
        .iter()
        .map(|s| s.variance)
        .fold(0.0f64, f64::max)
        .max(0.01)
        * 1.05;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |v: f64| MARGIN + v / max_variance * plot_w;
    let y = |m: f64| HEIGHT - MARGIN - m * plot_h;

    let mut colors: BTreeMap<Rate, &str> = BTreeMap::new();
    for s in summaries {
        let next = PALETTE[colors.len() % PALETTE.len()];
        colors.entry(s.original_label.continuous).or_insert(next);
    }
    // stable colors regardless of input order
    for (i, color) in colors.values_mut().enumerate() {
        *color = PALETTE[i % PALETTE.len()];
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    for tick in 0..=4 {
        let frac = f64::from(tick) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.3}</text>"#,
            x(frac * max_variance),
            y0 + 18.0,
            frac * max_variance
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{:.2}</text>"#,
            x0 - 6.0,
            y(frac) + 4.0,
            frac
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">variance of simulated predictions</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {})">mean predicted disagreement</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for s in summaries {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.7"><title>{}</title></circle>"#,
            x(s.variance),
            y(s.mean.clamp(0.0, 1.0)),
            colors[&s.original_label.continuous],
            escape(&s.text_id)
        );
    }

    for (i, (level, color)) in colors.iter().enumerate() {
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.1}" cy="{ly:.1}" r="4" fill="{color}"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">label {level}</text>"#,
            x1 - 70.0,
            x1 - 62.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::DisagreementLabel;

    #[test]
    fn one_circle_per_summary_plus_legend() {
        let summaries: Vec<SimulationSummary> = [(0, 0.1), (1, 0.02), (1, 0.0)]
            .iter()
            .enumerate()
            .map(|(i, &(n, v))| SimulationSummary {
                text_id: format!("t<{i}>"),
                original_label: DisagreementLabel::from_continuous(Rate::new(n, 3)),
                predictions: vec![],
                mean: 0.4,
                variance: v,
                delta_from_original: 0.0,
            })
            .collect();
        let svg = scatter_svg(&summaries, "sim");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3 + 2);
        assert!(svg.contains("t&lt;0&gt;"));
    }
}
