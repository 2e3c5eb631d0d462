//! Minimal self-contained SVG line charts for the metrics CSV.
//!
//! No drawing dependency: the output is a fixed-size chart with axes, tick
//! labels, one polyline per series, and a legend. Good enough to eyeball a
//! run; not a plotting library.

use std::fmt::Write;

/// One named line.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const TICKS: usize = 5;

fn range_of(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut range: Option<(f64, f64)> = None;
    for v in values.filter(|v| v.is_finite()) {
        range = Some(match range {
            None => (v, v),
            Some((lo, hi)) => (lo.min(v), hi.max(v)),
        });
    }
    range
}

/// Widens degenerate ranges so a constant series still draws mid-chart.
fn pad(range: (f64, f64)) -> (f64, f64) {
    let (lo, hi) = range;
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (0.001..10_000.0).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one chart. Series without points are listed in the legend but draw
/// nothing; a chart with no points at all still gets its axes.
pub fn render_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let x_range = pad(
        range_of(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))).unwrap_or((0.0, 1.0)),
    );
    let y_range = pad(
        range_of(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))).unwrap_or((0.0, 1.0)),
    );
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = move |x: f64| MARGIN_LEFT + (x - x_range.0) / (x_range.1 - x_range.0) * plot_w;
    let sy = move |y: f64| MARGIN_TOP + plot_h - (y - y_range.0) / (y_range.1 - y_range.0) * plot_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"17\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        escape(title),
    );

    // Gridlines and tick labels.
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x_range.0 + f * (x_range.1 - x_range.0);
        let yv = y_range.0 + f * (y_range.1 - y_range.0);
        let xp = sx(xv);
        let yp = sy(yv);
        let _ = write!(
            svg,
            "<line x1=\"{xp:.1}\" y1=\"{:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\n\
             <line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{:.1}\" y2=\"{yp:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{xp:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w,
            MARGIN_TOP + plot_h + 18.0,
            tick_label(xv),
            MARGIN_LEFT - 8.0,
            yp + 4.0,
            tick_label(yv),
        );
    }

    // Axes.
    let _ = write!(
        svg,
        "<line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n\
         <line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label),
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h,
    );

    // Series polylines and the legend.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !s.points.is_empty() {
            let coords: Vec<String> =
                s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
            let _ = write!(
                svg,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                coords.join(" ")
            );
        }
        let ly = MARGIN_TOP + 10.0 + i as f64 * 18.0;
        let lx = MARGIN_LEFT + plot_w - 150.0;
        let _ = write!(
            svg,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&s.name),
        );
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_axes_series_and_legend() {
        let series = vec![
            Series { name: "run-a".into(), points: vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.25)] },
            Series { name: "run-b".into(), points: vec![(0.0, 1.0), (2.0, 0.75)] },
        ];
        let svg = render_chart("Acceptance", "time", "ratio", &series);
        assert!(svg.starts_with("<svg "));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("run-a") && svg.contains("run-b"));
        assert!(svg.contains("Acceptance"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_chart_still_renders_axes() {
        let svg = render_chart("Empty", "x", "y", &[]);
        assert!(svg.starts_with("<svg "));
        assert!(!svg.contains("<polyline"));
        assert!(svg.contains("Empty"));
    }

    #[test]
    fn constant_series_does_not_divide_by_zero() {
        let series =
            vec![Series { name: "flat".into(), points: vec![(1.0, 0.5), (1.0, 0.5)] }];
        let svg = render_chart("Flat", "x", "y", &series);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn tick_labels_stay_compact() {
        assert_eq!(tick_label(0.0), "0");
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(3.0), "3");
        assert!(tick_label(1.0e9).contains('e'));
    }
}
