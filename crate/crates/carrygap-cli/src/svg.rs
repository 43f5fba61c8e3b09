//! Minimal deterministic SVG line/bar charts for the report stage. No
//! external renderer, no timestamps: identical inputs produce identical
//! bytes.

use std::fmt::Write as _;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

fn fmt1(v: f64) -> String {
    format!("{v:.4}")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_points<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Frame {
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for &(x, y) in points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if !x_min.is_finite() {
            x_min = 0.0;
            x_max = 1.0;
            y_min = 0.0;
            y_max = 1.0;
        }
        if (x_max - x_min).abs() < 1e-12 {
            x_max = x_min + 1.0;
        }
        let pad = ((y_max - y_min) * 0.08).max(1e-9);
        Frame {
            x_min,
            x_max,
            y_min: y_min - pad,
            y_max: y_max + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_B
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        title
    );
    s
}

fn axes(s: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let xv = frame.x_min + f * (frame.x_max - frame.x_min);
        let yv = frame.y_min + f * (frame.y_max - frame.y_min);
        let px = frame.px(xv);
        let py = frame.py(yv);
        let _ = writeln!(
            s,
            "<text x=\"{px}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            y0 + 18.0,
            fmt1(xv)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            x0 - 6.0,
            py + 4.0,
            fmt1(yv)
        );
        let _ = writeln!(
            s,
            "<line x1=\"{x0}\" y1=\"{py}\" x2=\"{x1}\" y2=\"{py}\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>"
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        x_label
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        y_label
    );
}

/// A multi-series line chart.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let frame = Frame::from_points(series.iter().flat_map(|s| s.points.iter()));
    let mut s = header(title);
    axes(&mut s, &frame, x_label, y_label);
    for (i, line) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if line.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let path: Vec<String> = line
            .points
            .iter()
            .enumerate()
            .map(|(j, &(x, y))| {
                let cmd = if j == 0 { 'M' } else { 'L' };
                format!("{cmd}{:.2} {:.2}", frame.px(x), frame.py(y))
            })
            .collect();
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>",
            path.join(" ")
        );
        for &(x, y) in &line.points {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>",
                frame.px(x),
                frame.py(y)
            );
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
            WIDTH - 210.0,
            WIDTH - 180.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            WIDTH - 174.0,
            ly + 4.0,
            line.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// A grouped bar chart: one group per category, one bar per series.
pub fn grouped_bar_chart(
    title: &str,
    y_label: &str,
    categories: &[String],
    series: &[(String, Vec<f64>)],
) -> String {
    let mut y_min: f64 = 0.0;
    let mut y_max: f64 = 0.0;
    for (_, values) in series {
        for &v in values {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    let pad = ((y_max - y_min) * 0.08).max(1e-9);
    let frame = Frame {
        x_min: 0.0,
        x_max: categories.len() as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };
    let mut s = header(title);
    axes(&mut s, &frame, "", y_label);
    let group_width = (WIDTH - MARGIN_L - MARGIN_R) / categories.len().max(1) as f64;
    let bar_width = group_width * 0.8 / series.len().max(1) as f64;
    let zero_y = frame.py(0.0);
    for (si, (label, values)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for (ci, &v) in values.iter().enumerate() {
            let x = MARGIN_L + group_width * (ci as f64 + 0.1) + bar_width * si as f64;
            let y = frame.py(v);
            let (top, height) = if v >= 0.0 {
                (y, zero_y - y)
            } else {
                (zero_y, y - zero_y)
            };
            let _ = writeln!(
                s,
                "<rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{bar_width:.2}\" height=\"{:.2}\" fill=\"{color}\"/>",
                height.max(0.0)
            );
        }
        let ly = MARGIN_T + 16.0 * si as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"22\" height=\"10\" fill=\"{color}\"/>",
            WIDTH - 210.0,
            ly - 8.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            WIDTH - 182.0,
            ly + 1.0,
            label
        );
    }
    for (ci, cat) in categories.iter().enumerate() {
        let x = MARGIN_L + group_width * (ci as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN_B + 18.0,
            cat
        );
    }
    s.push_str("</svg>\n");
    s
}
