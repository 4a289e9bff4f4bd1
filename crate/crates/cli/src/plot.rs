//! Minimal hand-rolled SVG plots: cosine phase traces with footfall bars,
//! and for transitions the relative-phase and remaining-progress panels.

use gaitgen_core::angle::wrap_diff;
use gaitgen_core::logfile::per_leg;

use std::fmt::Write as _;

const LEG_COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];
const LEG_LABELS: [&str; 4] = ["FR", "FL", "HR", "HL"];
const WIDTH: f64 = 900.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;

struct Svg {
    body: String,
    height: f64,
}

impl Svg {
    fn new() -> Self {
        Self {
            body: String::new(),
            height: 0.0,
        }
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{h}\" \
             viewBox=\"0 0 {WIDTH} {h}\">\n<rect width=\"{WIDTH}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            h = self.height,
            body = self.body
        )
    }
}

fn x_of(t: f64, t_max: f64) -> f64 {
    MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) * t / t_max
}

/// A line panel: several series over time, y clipped to [y_min, y_max].
fn line_panel(
    svg: &mut Svg,
    title: &str,
    time: &[f64],
    series: &[(String, &str, Vec<f64>)],
    y_min: f64,
    y_max: f64,
) {
    let top = svg.height + 24.0;
    let panel_h = 170.0;
    let t_max = *time.last().unwrap_or(&1.0);
    let y_of = |v: f64| top + panel_h * (1.0 - (v.clamp(y_min, y_max) - y_min) / (y_max - y_min));

    let _ = writeln!(
        svg.body,
        "<text x=\"{MARGIN_LEFT}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\">{title}</text>",
        top - 8.0
    );
    let _ = writeln!(
        svg.body,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{top}\" width=\"{}\" height=\"{panel_h}\" fill=\"none\" stroke=\"#999\"/>",
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    );
    // Zero line when it lies inside the panel.
    if y_min < 0.0 && y_max > 0.0 {
        let y0 = y_of(0.0);
        let _ = writeln!(
            svg.body,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"#ddd\"/>",
            WIDTH - MARGIN_RIGHT
        );
    }

    for (i, (label, color, values)) in series.iter().enumerate() {
        let mut points = String::new();
        for (k, v) in values.iter().enumerate() {
            if v.is_nan() {
                continue;
            }
            let _ = write!(points, "{:.2},{:.2} ", x_of(time[k], t_max), y_of(*v));
        }
        let _ = writeln!(
            svg.body,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{points}\"/>"
        );
        let lx = MARGIN_LEFT + 70.0 * i as f64;
        let _ = writeln!(
            svg.body,
            "<text x=\"{lx}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{label}</text>",
            top + panel_h + 14.0
        );
    }
    svg.height = top + panel_h + 24.0;
}

/// The footfall diagram: one row per leg, dark bars during stance.
fn footfall_panel(svg: &mut Svg, time: &[f64], contacts: &[Vec<f64>; 4]) {
    let top = svg.height + 24.0;
    let row_h = 26.0;
    let t_max = *time.last().unwrap_or(&1.0);
    let _ = writeln!(
        svg.body,
        "<text x=\"{MARGIN_LEFT}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\">footfall (dark = stance)</text>",
        top - 8.0
    );
    for (leg, series) in contacts.iter().enumerate() {
        let y = top + leg as f64 * (row_h + 6.0);
        let _ = writeln!(
            svg.body,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            MARGIN_LEFT - 30.0,
            y + row_h * 0.7,
            LEG_LABELS[leg]
        );
        let mut start: Option<f64> = None;
        for k in 0..=series.len() {
            let stance = k < series.len() && series[k] != 0.0;
            match (start, stance) {
                (None, true) => start = Some(time[k]),
                (Some(s), false) => {
                    let end = if k < series.len() { time[k] } else { t_max };
                    let _ = writeln!(
                        svg.body,
                        "<rect x=\"{:.2}\" y=\"{y}\" width=\"{:.2}\" height=\"{row_h}\" fill=\"#333\"/>",
                        x_of(s, t_max),
                        (x_of(end, t_max) - x_of(s, t_max)).max(0.5)
                    );
                    start = None;
                }
                _ => {}
            }
        }
    }
    svg.height = top + 4.0 * (row_h + 6.0) + 12.0;
}

fn column(rows: &[Vec<f64>], idx: usize) -> Vec<f64> {
    rows.iter().map(|r| r[idx]).collect()
}

fn find(columns: &[String], name: &str) -> usize {
    columns.iter().position(|c| c == name).expect("known column")
}

/// Phase-cosine traces plus the footfall diagram.
pub fn simulate_plot(columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut svg = Svg::new();
    let time = column(rows, find(columns, "time"));

    let phi_names = per_leg("phi");
    let cos_series: Vec<(String, &str, Vec<f64>)> = (0..4)
        .map(|i| {
            let phi = column(rows, find(columns, &phi_names[i]));
            (
                format!("cos {} ", LEG_LABELS[i]),
                LEG_COLORS[i],
                phi.iter().map(|p| p.cos()).collect(),
            )
        })
        .collect();
    line_panel(&mut svg, "phase cosines", &time, &cos_series, -1.05, 1.05);

    let contact_names = per_leg("contact_act");
    let contacts = [
        column(rows, find(columns, &contact_names[0])),
        column(rows, find(columns, &contact_names[1])),
        column(rows, find(columns, &contact_names[2])),
        column(rows, find(columns, &contact_names[3])),
    ];
    footfall_panel(&mut svg, &time, &contacts);
    svg.finish()
}

/// Cosines above, relative phases and remaining progress below.
pub fn transition_plot(columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut svg = Svg::new();
    let time = column(rows, find(columns, "time"));

    let phi_names = per_leg("phi");
    let phis: Vec<Vec<f64>> = (0..4)
        .map(|i| column(rows, find(columns, &phi_names[i])))
        .collect();

    let cos_series: Vec<(String, &str, Vec<f64>)> = (0..4)
        .map(|i| {
            (
                format!("cos {}", LEG_LABELS[i]),
                LEG_COLORS[i],
                phis[i].iter().map(|p| p.cos()).collect(),
            )
        })
        .collect();
    line_panel(&mut svg, "phase cosines", &time, &cos_series, -1.05, 1.05);

    let rel_series: Vec<(String, &str, Vec<f64>)> = (1..4)
        .map(|i| {
            let rel = phis[i]
                .iter()
                .zip(&phis[0])
                .map(|(p, p0)| wrap_diff(p - p0))
                .collect();
            (
                format!("{} - FR", LEG_LABELS[i]),
                LEG_COLORS[i],
                rel,
            )
        })
        .collect();
    line_panel(
        &mut svg,
        "relative phases (rad)",
        &time,
        &rel_series,
        -3.3,
        3.3,
    );

    if let Some(eta_idx) = columns.iter().position(|c| c == "eta") {
        let eta = column(rows, eta_idx);
        line_panel(
            &mut svg,
            "transition remaining progress",
            &time,
            &[("eta".to_string(), "#ff7f0e", eta)],
            0.0,
            1.1,
        );
    }
    svg.finish()
}
