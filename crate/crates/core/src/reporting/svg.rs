use std::fmt::Write;

use crate::error::{Error, Result};

/// A labeled time series; all series in one plot share the x axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// x value of the first sample; samples are one unit apart.
    pub x_start: f64,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#000000"];
const DASHES: [&str; 6] = ["none", "8 4", "2 3", "10 3 2 3", "4 4", "1 5"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Step of roughly `span / 5` rounded to 1, 2 or 5 times a power of ten.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Renders the series as a self-contained line plot. Legend order follows
/// input order; each series gets its own color and dash pattern.
pub fn emit_svg(series: &[Series], axes: &Axes) -> Result<String> {
    let Some(first) = series.first() else {
        return Err(Error::Invalid("no series to plot".into()));
    };
    let n = first.values.len();
    if n == 0 {
        return Err(Error::Invalid("empty series".into()));
    }
    if let Some(s) = series.iter().find(|s| s.values.len() != n) {
        return Err(Error::Dimension(format!(
            "series {:?} has {} points, expected {n}",
            s.label,
            s.values.len()
        )));
    }
    if series.iter().flat_map(|s| &s.values).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("series contain non-finite values".into()));
    }
    let (mut lo, mut hi) = series
        .iter()
        .flat_map(|s| &s.values)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if hi - lo < 1e-12 {
        let pad = (hi.abs() * 0.1).max(1e-3);
        lo -= pad;
        hi += pad;
    }
    let y_step = tick_step(hi - lo);
    let y0 = (lo / y_step).floor() * y_step;
    let y1 = (hi / y_step).ceil() * y_step;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |i: usize| {
        if n == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * i as f64 / (n - 1) as f64
        }
    };
    let py = |v: f64| TOP + plot_h * (y1 - v) / (y1 - y0);

    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .expect("write to string");
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).expect("write to string");
    writeln!(
        w,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&axes.title)
    )
    .expect("write to string");

    // grid and y ticks
    let ticks = ((y1 - y0) / y_step).round() as usize;
    for k in 0..=ticks {
        let v = y0 + k as f64 * y_step;
        let y = py(v);
        writeln!(
            w,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        )
        .expect("write to string");
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            fmt_tick(v, y_step)
        )
        .expect("write to string");
    }
    // x ticks
    let x_every = n.div_ceil(12).max(1);
    for i in (0..n).step_by(x_every) {
        let x = px(i);
        writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444444"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        )
        .expect("write to string");
        writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            fmt_tick(axes.x_start + i as f64, 1.0)
        )
        .expect("write to string");
    }
    writeln!(
        w,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#444444"/>"##
    )
    .expect("write to string");
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(&axes.x_label)
    )
    .expect("write to string");
    writeln!(
        w,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&axes.y_label)
    )
    .expect("write to string");

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let dash = DASHES[(k + k / COLORS.len()) % DASHES.len()];
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", px(i), py(*v)))
            .collect();
        writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}" points="{}"/>"#,
            points.join(" ")
        )
        .expect("write to string");
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            lx + 30.0
        )
        .expect("write to string");
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 36.0,
            ly + 4.0,
            escape(&s.label)
        )
        .expect("write to string");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> Axes {
        Axes {
            title: "t".into(),
            x_label: "hour".into(),
            y_label: "y".into(),
            x_start: 0.0,
        }
    }

    fn series(label: &str, values: Vec<f64>) -> Series {
        Series {
            label: label.into(),
            values,
        }
    }

    fn polyline_ys(svg: &str) -> Vec<Vec<String>> {
        svg.lines()
            .filter(|l| l.starts_with("<polyline"))
            .map(|l| {
                let pts = l.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
                pts.split(' ').map(|p| p.split(',').nth(1).unwrap().to_string()).collect()
            })
            .collect()
    }

    #[test]
    fn constant_series_is_horizontal() {
        let svg = emit_svg(&[series("flat", vec![2.5; 5])], &axes()).unwrap();
        let ys = polyline_ys(&svg);
        assert_eq!(ys.len(), 1);
        assert!(ys[0].iter().all(|y| *y == ys[0][0]));
    }

    #[test]
    fn two_series_have_distinct_styles() {
        let svg = emit_svg(&[series("a", vec![0.0, 1.0]), series("b", vec![1.0, 0.0])], &axes()).unwrap();
        let styles: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<polyline"))
            .map(|l| l.split(" points=").next().unwrap())
            .collect();
        assert_eq!(styles.len(), 2);
        assert_ne!(styles[0], styles[1]);
        // legend follows input order
        assert!(svg.find(">a</text>").unwrap() < svg.find(">b</text>").unwrap());
    }

    #[test]
    fn output_is_deterministic() {
        let s = [series("x<y", vec![0.1, -0.3, 0.7])];
        assert_eq!(emit_svg(&s, &axes()).unwrap(), emit_svg(&s, &axes()).unwrap());
        assert!(emit_svg(&s, &axes()).unwrap().contains("x&lt;y"));
    }

    #[test]
    fn empty_and_ragged_input_rejected() {
        assert!(emit_svg(&[], &axes()).is_err());
        assert!(emit_svg(&[series("e", vec![])], &axes()).is_err());
        assert!(emit_svg(&[series("a", vec![1.0]), series("b", vec![1.0, 2.0])], &axes()).is_err());
    }
}
