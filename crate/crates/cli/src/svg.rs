//! Minimal self-contained SVG plots on the unit interval.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 40.0;

fn sx(x: f64) -> f64 {
    PAD + x * (W - 2.0 * PAD)
}

fn sy(y: f64, ymax: f64) -> f64 {
    H - PAD - (y / ymax) * (H - 2.0 * PAD)
}

fn frame(title: &str, ymax: f64) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{tx}" y="20" text-anchor="middle">{title}</text>
<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>
<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{yt}" stroke="black"/>
<text x="{x0}" y="{yl}" text-anchor="middle">0</text>
<text x="{x1}" y="{yl}" text-anchor="middle">1</text>
<text x="{xl}" y="{yt}" text-anchor="end">{ymax:.3}</text>
"#,
        tx = W / 2.0,
        x0 = sx(0.0),
        x1 = sx(1.0),
        y0 = sy(0.0, ymax),
        yt = sy(ymax, ymax),
        yl = H - PAD + 16.0,
        xl = PAD - 4.0,
        title = escape(title),
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Arcs of the circle drawn as bars over `[0, 1)`; `highlight` selects the
/// fill colour per arc.
pub fn arcs(title: &str, segments: &[(f64, f64, bool)]) -> String {
    let mut s = frame(title, 1.0);
    for (a, b, highlight) in segments {
        let fill = if *highlight { "#3b6ea5" } else { "#c9884a" };
        let _ = writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}" stroke="white" stroke-width="0.5"/>"#,
            sx(*a),
            sy(0.6, 1.0),
            sx(*b) - sx(*a),
            sy(0.4, 1.0) - sy(0.6, 1.0),
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Piecewise-constant density `(a, b, w)`.
pub fn histogram(title: &str, segments: &[(f64, f64, f64)]) -> String {
    let ymax = segments.iter().map(|s| s.2).fold(0.0, f64::max).max(1e-12) * 1.1;
    let mut s = frame(title, ymax);
    for (a, b, w) in segments {
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#3b6ea5"/>"##,
            sx(*a),
            sy(*w, ymax),
            sx(*b) - sx(*a),
            sy(0.0, ymax) - sy(*w, ymax),
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Polyline through `points`, which must be sorted by abscissa.
pub fn curve(title: &str, points: &[(f64, f64)]) -> String {
    let ymax = points.iter().map(|p| p.1).fold(1.0, f64::max);
    let mut s = frame(title, ymax);
    let path: Vec<String> = points.iter().map(|(x, y)| format!("{:.3},{:.3}", sx(*x), sy(*y, ymax))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#3b6ea5" stroke-width="1.5"/>"##, path.join(" "));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_well_formed() {
        for svg in [
            arcs("a < b", &[(0.0, 0.5, true)]),
            histogram("density", &[(0.0, 0.5, 2.0)]),
            curve("cdf", &[(0.0, 0.0), (1.0, 1.0)]),
        ] {
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(!svg.contains("a < b"));
        }
    }
}
