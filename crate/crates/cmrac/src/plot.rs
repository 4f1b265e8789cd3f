//! Self-contained SVG emission: line charts with dashed bound lines and a
//! two-color feasibility heat map. No plotting dependency; the files embed
//! everything they need.

use std::fmt::Write as _;

use crate::feasibility::SweepCell;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 58.0;

const COLORS: &[&str] = &["#1f6fb2", "#d1495b", "#3e8e5a", "#8661c1", "#c67f2e"];

/// One curve on a line chart.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// A horizontal reference line (constraint bound).
pub struct BoundLine {
    pub label: String,
    pub y: f64,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bounds: Vec<BoundLine>,
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw_step = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw_step.log10().floor());
    let norm = raw_step / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= hi + step * 1e-9 {
        // squash -0
        ticks.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LinePlot {
    /// Renders the chart as a standalone SVG document.
    pub fn to_svg(&self) -> String {
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let mut x_lo = f64::INFINITY;
        let mut x_hi = f64::NEG_INFINITY;
        let mut y_lo = f64::INFINITY;
        let mut y_hi = f64::NEG_INFINITY;
        for s in &self.series {
            for &(x, y) in &s.points {
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x);
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
        for b in &self.bounds {
            y_lo = y_lo.min(b.y);
            y_hi = y_hi.max(b.y);
        }
        if !x_lo.is_finite() {
            x_lo = 0.0;
            x_hi = 1.0;
        }
        if !y_lo.is_finite() {
            y_lo = 0.0;
            y_hi = 1.0;
        }
        if y_hi == y_lo {
            y_hi = y_lo + 1.0;
        }
        let pad = 0.06 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;

        let sx = move |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * pw;
        let sy = move |y: f64| MARGIN_T + (y_hi - y) / (y_hi - y_lo) * ph;

        let mut svg = String::new();
        write!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        )
        .unwrap();
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        write!(
            svg,
            "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
            WIDTH / 2.0,
            xml_escape(&self.title)
        )
        .unwrap();

        // axes and grid
        for t in nice_ticks(x_lo, x_hi, 8) {
            let x = sx(t);
            write!(
                svg,
                "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
                MARGIN_T,
                MARGIN_T + ph
            )
            .unwrap();
            write!(
                svg,
                "<text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
                MARGIN_T + ph + 18.0,
                fmt_tick(t)
            )
            .unwrap();
        }
        for t in nice_ticks(y_lo, y_hi, 7) {
            let y = sy(t);
            write!(
                svg,
                "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
                MARGIN_L,
                MARGIN_L + pw
            )
            .unwrap();
            write!(
                svg,
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>",
                MARGIN_L - 8.0,
                y + 4.0,
                fmt_tick(t)
            )
            .unwrap();
        }
        write!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#333333\"/>",
            MARGIN_L, MARGIN_T
        )
        .unwrap();
        write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            MARGIN_L + pw / 2.0,
            HEIGHT - 14.0,
            xml_escape(&self.x_label)
        )
        .unwrap();
        write!(
            svg,
            "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
            MARGIN_T + ph / 2.0,
            MARGIN_T + ph / 2.0,
            xml_escape(&self.y_label)
        )
        .unwrap();

        // bound lines
        for b in &self.bounds {
            let y = sy(b.y);
            write!(
                svg,
                "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#b22222\" stroke-width=\"1.5\" stroke-dasharray=\"8 5\"/>",
                MARGIN_L,
                MARGIN_L + pw
            )
            .unwrap();
            write!(
                svg,
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#b22222\" text-anchor=\"end\">{}</text>",
                MARGIN_L + pw - 6.0,
                y - 5.0,
                xml_escape(&b.label)
            )
            .unwrap();
        }

        // curves (decimated to at most ~2000 points per series)
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let stride = (s.points.len() / 2000).max(1);
            let mut path = String::new();
            for (j, &(x, y)) in s.points.iter().step_by(stride).enumerate() {
                let cmd = if j == 0 { 'M' } else { 'L' };
                write!(path, "{cmd}{:.2} {:.2}", sx(x), sy(y)).unwrap();
            }
            if stride > 1 {
                if let Some(&(x, y)) = s.points.last() {
                    write!(path, "L{:.2} {:.2}", sx(x), sy(y)).unwrap();
                }
            }
            let dash = if s.dashed {
                " stroke-dasharray=\"5 4\""
            } else {
                ""
            };
            write!(
                svg,
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>"
            )
            .unwrap();
        }

        // legend
        let mut ly = MARGIN_T + 12.0;
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let dash = if s.dashed {
                " stroke-dasharray=\"5 4\""
            } else {
                ""
            };
            write!(
                svg,
                "<line x1=\"{}\" y1=\"{ly:.2}\" x2=\"{}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
                MARGIN_L + 10.0,
                MARGIN_L + 34.0
            )
            .unwrap();
            write!(
                svg,
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
                MARGIN_L + 40.0,
                ly + 4.0,
                xml_escape(&s.label)
            )
            .unwrap();
            ly += 17.0;
        }

        svg.push_str("</svg>");
        svg
    }
}

/// Two-color feasibility map over the (u1_bar, x_bar) grid.
pub fn sweep_heatmap_svg(cells: &[SweepCell<f64>], title: &str) -> String {
    let mut us: Vec<f64> = cells.iter().map(|c| c.u1_bar).collect();
    us.sort_by(|a, b| a.partial_cmp(b).unwrap());
    us.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut xs: Vec<f64> = cells.iter().map(|c| c.x_bar).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let cw = pw / us.len() as f64;
    let ch = ph / xs.len() as f64;

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    write!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        xml_escape(title)
    )
    .unwrap();
    for c in cells {
        let iu = us
            .iter()
            .position(|&u| (u - c.u1_bar).abs() < 1e-12)
            .unwrap();
        let ix = xs
            .iter()
            .position(|&x| (x - c.x_bar).abs() < 1e-12)
            .unwrap();
        let x = MARGIN_L + iu as f64 * cw;
        let y = MARGIN_T + ph - (ix + 1) as f64 * ch;
        let fill = if c.feasible { "#3e8e5a" } else { "#d8d8d8" };
        write!(
            svg,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" stroke=\"white\" stroke-width=\"0.5\"/>",
            cw, ch
        )
        .unwrap();
    }
    // axis labels: first/last ticks
    for (i, u) in us.iter().enumerate() {
        if i % ((us.len() / 8).max(1)) == 0 {
            write!(
                svg,
                "<text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
                MARGIN_L + (i as f64 + 0.5) * cw,
                MARGIN_T + ph + 16.0,
                fmt_tick(*u)
            )
            .unwrap();
        }
    }
    for (i, x) in xs.iter().enumerate() {
        if i % ((xs.len() / 8).max(1)) == 0 {
            write!(
                svg,
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
                MARGIN_L - 6.0,
                MARGIN_T + ph - (i as f64 + 0.5) * ch + 4.0,
                fmt_tick(*x)
            )
            .unwrap();
        }
    }
    write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#333333\"/>",
        MARGIN_L, MARGIN_T
    )
    .unwrap();
    write!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">input magnitude bound</text>",
        MARGIN_L + pw / 2.0,
        HEIGHT - 14.0
    )
    .unwrap();
    write!(
        svg,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">state bound</text>",
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0
    )
    .unwrap();
    write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"14\" fill=\"#3e8e5a\"/><text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">feasible</text>",
        MARGIN_L + 10.0,
        MARGIN_T + 8.0,
        MARGIN_L + 30.0,
        MARGIN_T + 20.0
    )
    .unwrap();
    svg.push_str("</svg>");
    svg
}
