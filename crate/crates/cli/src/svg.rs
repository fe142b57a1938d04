use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Curve<'a> {
    pub label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
}

/// Self-contained SVG line plot with a logarithmic x axis.
pub fn line_plot(title: &str, y_label: &str, curves: &[Curve], log_y: bool, config_hash: &str) -> String {
    let ty = |y: f64| if log_y { y.max(1e-300).log10() } else { y };
    let points: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.xs.iter().zip(c.ys).map(|(&x, &y)| (x.log10(), ty(y))))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = points.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if points.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 * y0.abs().max(1.0) {
        let pad = 0.5 * y0.abs().max(1.0) * 1e-6;
        y0 -= pad;
        y1 += pad;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>").unwrap();
    writeln!(s, "<!-- config-hash: {config_hash} -->").unwrap();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" style=\"font-family:sans-serif;font-size:12px\">"
    )
    .unwrap();
    writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" style=\"fill:#ffffff\"/>").unwrap();
    writeln!(s, "<text x=\"{}\" y=\"24\" style=\"text-anchor:middle;font-size:14px\">{}</text>", WIDTH / 2.0, escape(title))
        .unwrap();
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(s, "<path d=\"M{l} {t}L{l} {b}L{r} {b}\" style=\"fill:none;stroke:#000000;stroke-width:1\"/>").unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let yl = if log_y { format!("1e{yv:.1}") } else { format!("{yv:.4e}") };
        writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" style=\"text-anchor:middle\">1e{xv:.1}</text>", px(xv), b + 16.0).unwrap();
        writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" style=\"text-anchor:end\">{yl}</text>", l - 4.0, py(yv) + 4.0).unwrap();
    }
    writeln!(s, "<text x=\"{}\" y=\"{}\" style=\"text-anchor:middle\">r</text>", WIDTH / 2.0, HEIGHT - 12.0).unwrap();
    writeln!(
        s,
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" style=\"text-anchor:middle\">{}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    )
    .unwrap();
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        for (x, y) in c.xs.iter().zip(c.ys) {
            let (x, y) = (x.log10(), ty(*y));
            if x.is_finite() && y.is_finite() {
                let cmd = if d.is_empty() { 'M' } else { 'L' };
                write!(d, "{cmd}{:.2} {:.2}", px(x), py(y)).unwrap();
            }
        }
        writeln!(s, "<path d=\"{d}\" style=\"fill:none;stroke:{color};stroke-width:1.5\"/>").unwrap();
        let ly = t + 16.0 * i as f64;
        writeln!(s, "<text x=\"{:.2}\" y=\"{ly:.2}\" style=\"fill:{color}\">{}</text>", r - 120.0, escape(c.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_self_contained() {
        let xs = [1e-3, 1e-2, 1e-1, 1.0];
        let ys = [1.0, 2.0, 3.0, 4.0];
        let svg = line_plot("A <rho>", "A", &[Curve { label: "A", xs: &xs, ys: &ys }], false, "abc123");
        assert!(svg.contains("<!-- config-hash: abc123 -->"));
        assert!(svg.contains("A &lt;rho&gt;"));
        assert!(!svg.contains("href"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn constant_and_empty_series() {
        let xs = [0.1, 1.0];
        let flat = line_plot("flat", "v", &[Curve { label: "v", xs: &xs, ys: &[2.0, 2.0] }], false, "h");
        assert!(!flat.contains("NaN"));
        let empty = line_plot("none", "v", &[], true, "h");
        assert!(empty.contains("</svg>"));
    }
}
