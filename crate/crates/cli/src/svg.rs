//! Minimal self-contained SVG charts: polylines and scatter points on
//! linear axes with ticks, labels and a legend.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Dots,
}

#[derive(Debug, Clone)]
pub struct Series {
    /// Legend entry; empty series stay out of the legend.
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
    pub color: Option<&'static str>,
    pub width: f64,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, mark: Mark::Line, color: None, width: 1.8 }
    }

    pub fn dots(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, mark: Mark::Dots, color: None, width: 1.0 }
    }

    /// A thin grey curve, used for background level sets.
    pub fn guide(points: Vec<(f64, f64)>) -> Self {
        Self { name: String::new(), points, mark: Mark::Line, color: Some("#bbbbbb"), width: 0.8 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Dashed vertical markers with a label.
    pub vlines: Vec<(f64, String)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly five round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{x:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.1e}")
    }
}

/// Data range padded by 5%, widened when degenerate.
fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return (-1.0, 1.0);
    }
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

impl Figure {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    pub fn render(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = bounds(all().map(|p| p.0).chain(self.vlines.iter().map(|v| v.0)));
        let (y0, y1) = bounds(all().map(|p| p.1));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#eee"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 16.0,
                tick_label(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#eee"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (x, label) in &self.vlines {
            let px = sx(*x);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="#555" stroke-dasharray="5,4"/><text x="{:.2}" y="{}">{}</text>"##,
                TOP + ph,
                px + 4.0,
                TOP + 14.0,
                escape(label)
            );
        }
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs><g clip-path="url(#plot)">"#
        );
        let mut color_index = 0;
        let mut legend = Vec::new();
        for series in &self.series {
            let color = series.color.unwrap_or_else(|| {
                let c = PALETTE[color_index % PALETTE.len()];
                color_index += 1;
                c
            });
            match series.mark {
                Mark::Line => {
                    // break the polyline at non-finite samples
                    for run in series.points.split(|p| !(p.0.is_finite() && p.1.is_finite())) {
                        if run.len() < 2 {
                            continue;
                        }
                        let pts: Vec<String> = run.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                        let _ = writeln!(
                            s,
                            r#"<polyline fill="none" stroke="{color}" stroke-width="{}" points="{}"/>"#,
                            series.width,
                            pts.join(" ")
                        );
                    }
                }
                Mark::Dots => {
                    for &(x, y) in series.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
                    }
                }
            }
            if !series.name.is_empty() {
                legend.push((series.name.as_str(), color, series.mark));
            }
        }
        let _ = writeln!(s, "</g>");
        for (i, (name, color, mark)) in legend.iter().enumerate() {
            let y = TOP + 16.0 + 16.0 * i as f64;
            let x = LEFT + pw - 170.0;
            match mark {
                Mark::Line => {
                    let _ = write!(
                        s,
                        r#"<line x1="{x}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
                        y - 4.0,
                        x + 18.0,
                        y - 4.0
                    );
                }
                Mark::Dots => {
                    let _ = write!(s, r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#, x + 9.0, y - 4.0);
                }
            }
            let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x + 24.0, escape(name));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_inside() {
        assert_eq!(ticks(-0.13, 2.7), vec![0.0, 1.0, 2.0]);
        for (lo, hi) in [(-0.13, 1.2), (1e-9, 3e-9), (-50.0, 70.0), (3.3, 3.4)] {
            let t = ticks(lo, hi);
            assert!((2..=6).contains(&t.len()), "{lo}..{hi}: {t:?}");
            let step = t[1] - t[0];
            assert!(t.iter().all(|x| (lo - 1e-9 * step..=hi + 1e-9 * step).contains(x)));
            let lead = step / 10f64.powf(step.log10().floor());
            assert!([1.0, 2.0, 5.0].iter().any(|m| (lead - m).abs() < 1e-9), "{lead}");
        }
    }

    #[test]
    fn render_is_self_contained_and_escaped() {
        let mut f = Figure::new("a < b & c", "x", "y");
        f.series.push(Series::line("curve", vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0), (3.0, 2.0)]));
        f.series.push(Series::dots("points", vec![(0.5, 0.5)]));
        f.vlines.push((1.5, "k0".into()));
        let svg = f.render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(!svg.contains("href"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn degenerate_data_still_renders() {
        let mut f = Figure::new("flat", "x", "y");
        f.series.push(Series::line("c", vec![(1.0, 2.0), (1.0, 2.0)]));
        assert!(!f.render().contains("NaN"));
    }
}
