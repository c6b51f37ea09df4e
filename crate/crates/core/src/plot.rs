//! SVG scatter of cumulative clot area against elapsed time, with a
//! least-squares trend line.

use std::fmt::Write;

use crate::monitor::SessionSeries;
use crate::stats::{linear_fit, PairedSeries};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 64.0;

/// Trend line when both coordinates vary; `None` for flat or single-point
/// series.
pub fn trend_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let varies = |v: &[f64]| v.iter().any(|&x| x != v[0]);
    if xs.len() < 2 || !varies(xs) || !varies(ys) {
        return None;
    }
    let series = PairedSeries::new(xs.to_vec(), ys.to_vec()).ok()?;
    linear_fit(&series).ok()
}

fn padded_range(v: &[f64], floor_zero: bool) -> (f64, f64) {
    let mut lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if floor_zero {
        lo = lo.min(0.0);
    }
    if hi - lo <= 0.0 {
        lo -= 1.0;
        hi += 1.0;
    } else {
        let pad = (hi - lo) * 0.05;
        hi += pad;
        if !floor_zero {
            lo -= pad;
        }
    }
    (lo, hi)
}

fn num(v: f64) -> String {
    // two decimals keeps coordinates stable and diffable
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Render the session as a standalone SVG document.
pub fn session_svg(series: &SessionSeries) -> String {
    let xs = series.timestamps();
    let ys = series.cumulative_areas();
    let (x0, x1) = padded_range(&xs, false);
    let (y0, y1) = padded_range(&ys, true);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;
    let fit = trend_line(&xs, &ys);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(svg, "<title>Cumulative clot area vs flow duration</title>");
    if let Some((slope, intercept)) = fit {
        let _ = writeln!(
            svg,
            r#"<metadata id="linear-fit" data-slope="{slope}" data-intercept="{intercept}"/>"#
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // axes
    let (ax_l, ax_b) = (LEFT, TOP + plot_h);
    let _ = writeln!(
        svg,
        r#"<path class="axes" d="M {l} {t} V {b} H {r}" fill="none" stroke="black" stroke-width="1"/>"#,
        l = num(ax_l),
        t = num(TOP),
        b = num(ax_b),
        r = num(LEFT + plot_w)
    );
    let _ = writeln!(
        svg,
        r#"<g class="ticks" font-family="sans-serif" font-size="11">"#
    );
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(px(xv)),
            num(ax_b + 16.0),
            num(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(ax_l - 6.0),
            num(py(yv) + 4.0),
            num(yv)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">flow duration (min)</text>"#,
        num(LEFT + plot_w / 2.0),
        num(HEIGHT - 16.0)
    );
    let _ = writeln!(
        svg,
        r#"<text class="ylabel" x="18" y="{y}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {y})">cumulative clot area (px)</text>"#,
        y = num(TOP + plot_h / 2.0)
    );

    if let Some((slope, intercept)) = fit {
        let lx0 = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let lx1 = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            svg,
            r##"<line class="fit" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#c0392b" stroke-width="1.5"/>"##,
            num(px(lx0)),
            num(py(slope * lx0 + intercept)),
            num(px(lx1)),
            num(py(slope * lx1 + intercept))
        );
    }
    let _ = writeln!(svg, r##"<g class="points" fill="#1f4e79">"##);
    for (&x, &y) in xs.iter().zip(&ys) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{}" cy="{}" r="4"/>"#,
            num(px(x)),
            num(py(y))
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::{simulate_manifold, SessionConfig};
    use crate::synth::{ClotScene, Disk, GrowthModel};

    fn session(area_rate: f64, frames: usize) -> SessionSeries {
        let scene = ClotScene::new(64, 64)
            .with_clot(Disk::new(20.0, 20.0, 3.0))
            .with_clot(Disk::new(44.0, 40.0, 4.0));
        let model = GrowthModel {
            area_rate,
            ..Default::default()
        };
        simulate_manifold(&scene, &model, 10.0, frames, &SessionConfig::default()).unwrap()
    }

    fn parse(svg: &str) -> roxmltree::Document<'_> {
        roxmltree::Document::parse(svg).expect("well-formed svg")
    }

    #[test]
    fn one_marker_per_report() {
        let svg = session_svg(&session(2.0, 6));
        let doc = parse(&svg);
        let circles = doc
            .descendants()
            .filter(|n| n.has_tag_name("circle"))
            .count();
        assert_eq!(circles, 6);
        assert!(svg.contains("flow duration (min)"));
        assert!(svg.contains("cumulative clot area (px)"));
    }

    #[test]
    fn flat_session_has_no_trend_line() {
        let svg = session_svg(&session(0.0, 5));
        parse(&svg);
        assert!(!svg.contains("<line"));
        assert!(!svg.contains("linear-fit"));
    }

    #[test]
    fn trend_matches_least_squares() {
        let s = session(3.0, 8);
        let svg = session_svg(&s);
        let doc = parse(&svg);
        let meta = doc
            .descendants()
            .find(|n| n.attribute("id") == Some("linear-fit"))
            .unwrap();
        let slope: f64 = meta.attribute("data-slope").unwrap().parse().unwrap();
        let intercept: f64 = meta.attribute("data-intercept").unwrap().parse().unwrap();
        let (es, ei) =
            linear_fit(&PairedSeries::new(s.timestamps(), s.cumulative_areas()).unwrap()).unwrap();
        assert!(slope > 0.0);
        assert_eq!((slope, intercept), (es, ei));
        assert_eq!(
            doc.descendants().filter(|n| n.has_tag_name("line")).count(),
            1
        );
    }

    #[test]
    fn single_point_renders() {
        let svg = session_svg(&session(1.0, 1));
        let doc = parse(&svg);
        assert_eq!(
            doc.descendants()
                .filter(|n| n.has_tag_name("circle"))
                .count(),
            1
        );
        assert!(!svg.contains("<line"));
    }

    #[test]
    fn trend_line_needs_variation() {
        assert_eq!(trend_line(&[1.0], &[2.0]), None);
        assert_eq!(trend_line(&[1.0, 2.0], &[3.0, 3.0]), None);
        assert_eq!(trend_line(&[1.0, 1.0], &[3.0, 4.0]), None);
        assert_eq!(
            trend_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]),
            Some((2.0, 1.0))
        );
    }
}
