//! Minimal SVG scatter plot: axes, labeled points, optional color gradient
//! from a per-label covariate.

/// One plotted point.
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub label: String,
    /// Covariate value mapped onto the blue-to-red gradient; gray when
    /// absent.
    pub color_value: Option<f64>,
}

pub struct Scatter {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<Point>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 560.0;
const MARGIN: f64 = 64.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn lerp_color(t: f64) -> String {
    // blue (#2166ac) to red (#b2182b)
    let t = t.clamp(0.0, 1.0);
    let c = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(33.0, 178.0), c(102.0, 24.0), c(172.0, 43.0))
}

pub fn render(scatter: &Scatter) -> String {
    let xs: Vec<f64> = scatter.points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = scatter.points.iter().map(|p| p.y).collect();
    let (x_min, x_max) = padded_range(&xs);
    let (y_min, y_max) = padded_range(&ys);
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let colors: Vec<f64> = scatter
        .points
        .iter()
        .filter_map(|p| p.color_value)
        .collect();
    let (c_min, c_max) = if colors.is_empty() {
        (0.0, 1.0)
    } else {
        padded_range(&colors)
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(&scatter.title)
    ));

    // axes
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN,
    ));
    for (value, at_min) in [(x_min, true), (x_max, false)] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{value:.3}</text>\n",
            if at_min { MARGIN } else { WIDTH - MARGIN },
            HEIGHT - MARGIN + 18.0,
        ));
    }
    for (value, at_min) in [(y_min, true), (y_max, false)] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{value:.3}</text>\n",
            MARGIN - 6.0,
            if at_min { HEIGHT - MARGIN } else { MARGIN + 4.0 },
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(&scatter.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&scatter.y_label)
    ));

    for p in &scatter.points {
        let fill = match p.color_value {
            Some(v) if c_max > c_min => lerp_color((v - c_min) / (c_max - c_min)),
            Some(_) => lerp_color(0.5),
            None => "#888888".to_string(),
        };
        let (cx, cy) = (sx(p.x), sy(p.y));
        out.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"5\" fill=\"{fill}\" stroke=\"black\" stroke-width=\"0.5\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            cx + 7.0,
            cy + 3.0,
            escape(&p.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn padded_range(values: &[f64]) -> (f64, f64) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if min == max {
        (min - 1.0, max + 1.0)
    } else {
        let pad = (max - min) * 0.05;
        (min - pad, max + pad)
    }
}
