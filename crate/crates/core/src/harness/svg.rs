//! Static SVG charts: grouped bars, line overlays and box plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Round axis maximum to 1, 2 or 5 times a power of ten.
fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&m| m >= v).unwrap_or(10.0 * mag)
}

struct Frame {
    svg: String,
    y_max: f64,
}

impl Frame {
    fn new(title: &str, y_label: &str, y_max: f64) -> Self {
        let y_max = nice_max(y_max);
        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = write!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
        let _ = write!(
            svg,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            (TOP + HEIGHT - BOTTOM) / 2.0,
            (TOP + HEIGHT - BOTTOM) / 2.0,
            escape(y_label)
        );
        let mut frame = Self { svg, y_max };
        for i in 0..=5 {
            let v = y_max * i as f64 / 5.0;
            let y = frame.y(v);
            let _ = write!(
                frame.svg,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#dddddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                WIDTH - RIGHT,
                LEFT - 6.0,
                y + 4.0,
                format_tick(v)
            );
        }
        let _ = write!(
            frame.svg,
            r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            HEIGHT - BOTTOM,
            WIDTH - RIGHT,
            HEIGHT - BOTTOM
        );
        frame
    }

    fn y(&self, v: f64) -> f64 {
        let plot = HEIGHT - TOP - BOTTOM;
        HEIGHT - BOTTOM - plot * (v / self.y_max).clamp(0.0, 1.0)
    }

    fn slot(categories: usize) -> f64 {
        (WIDTH - LEFT - RIGHT) / categories.max(1) as f64
    }

    fn category_labels(&mut self, categories: &[String]) {
        let slot = Self::slot(categories.len());
        for (i, c) in categories.iter().enumerate() {
            let x = LEFT + slot * (i as f64 + 0.5);
            let _ = write!(self.svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, HEIGHT - BOTTOM + 18.0, escape(c));
        }
    }

    fn legend(&mut self, names: &[&str]) {
        for (i, name) in names.iter().enumerate() {
            let x = LEFT + 110.0 * i as f64;
            let y = HEIGHT - 18.0;
            let _ = write!(
                self.svg,
                r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{y:.2}">{}</text>"#,
                y - 9.0,
                PALETTE[i % PALETTE.len()],
                x + 14.0,
                escape(name)
            );
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn format_tick(v: f64) -> String {
    if v.fract().abs() < 1e-9 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Grouped bars: one group per category, one bar per series.
pub fn bar_chart(title: &str, y_label: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let max = series.iter().flat_map(|(_, v)| v.iter().copied()).fold(0.0, f64::max);
    let mut f = Frame::new(title, y_label, max);
    let slot = Frame::slot(categories.len());
    let bar = slot * 0.8 / series.len().max(1) as f64;
    for (s, (_, values)) in series.iter().enumerate() {
        for (i, &v) in values.iter().enumerate() {
            let x = LEFT + slot * i as f64 + slot * 0.1 + bar * s as f64;
            let y = f.y(v);
            let _ = write!(
                f.svg,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{bar:.2}" height="{:.2}" fill="{}"><title>{}</title></rect>"#,
                HEIGHT - BOTTOM - y,
                PALETTE[s % PALETTE.len()],
                format_tick(v)
            );
        }
    }
    f.category_labels(categories);
    if series.len() > 1 {
        f.legend(&series.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>());
    }
    f.finish()
}

/// One polyline per series across the categories.
pub fn line_overlay(title: &str, y_label: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let max = series.iter().flat_map(|(_, v)| v.iter().copied()).fold(0.0, f64::max);
    let mut f = Frame::new(title, y_label, max);
    let slot = Frame::slot(categories.len());
    for (s, (_, values)) in series.iter().enumerate() {
        let colour = PALETTE[s % PALETTE.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", LEFT + slot * (i as f64 + 0.5), f.y(v)))
            .collect();
        let _ = write!(f.svg, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#, points.join(" "));
        for p in &points {
            let (x, y) = p.split_once(',').expect("formatted as x,y");
            let _ = write!(f.svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{colour}"/>"#);
        }
    }
    f.category_labels(categories);
    f.legend(&series.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>());
    f.finish()
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Box (quartiles), whiskers (min to max) and a dashed mean line per category.
pub fn box_plot(title: &str, y_label: &str, categories: &[String], samples: &[Vec<f64>]) -> String {
    let max = samples.iter().flatten().copied().fold(0.0, f64::max);
    let mut f = Frame::new(title, y_label, max);
    let slot = Frame::slot(categories.len());
    for (i, data) in samples.iter().enumerate() {
        if data.is_empty() {
            continue;
        }
        let mut sorted = data.clone();
        sorted.sort_by(f64::total_cmp);
        let (q1, med, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75));
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        let cx = LEFT + slot * (i as f64 + 0.5);
        let w = slot * 0.5;
        let colour = PALETTE[i % PALETTE.len()];
        let _ = write!(
            f.svg,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            f.y(hi),
            f.y(lo)
        );
        for v in [lo, hi] {
            let _ = write!(
                f.svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
                cx - w / 4.0,
                f.y(v),
                cx + w / 4.0,
                f.y(v)
            );
        }
        let _ = write!(
            f.svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{colour}" fill-opacity="0.6" stroke="black"/>"#,
            cx - w / 2.0,
            f.y(q3),
            (f.y(q1) - f.y(q3)).max(0.5)
        );
        let _ = write!(
            f.svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
            cx - w / 2.0,
            f.y(med),
            cx + w / 2.0,
            f.y(med)
        );
        let _ = write!(
            f.svg,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#2ca02c" stroke-dasharray="4 3"><title>mean {mean:.2}</title></line>"##,
            cx - w / 2.0,
            f.y(mean),
            cx + w / 2.0,
            f.y(mean)
        );
    }
    f.category_labels(categories);
    f.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cats() -> Vec<String> {
        ["VL", "L", "M", "H", "VH"].map(String::from).to_vec()
    }

    #[test]
    fn charts_are_well_formed_xml() {
        let bars = bar_chart("a & b", "count", &cats(), &[("100".into(), vec![1.0, 2.0, 3.0, 4.0, 5.0])]);
        let lines = line_overlay("<overlay>", "count", &cats(), &[("x".into(), vec![3.0; 5]), ("y".into(), vec![0.0; 5])]);
        let boxes = box_plot("box", "count", &cats(), &[vec![1.0, 2.0, 3.0], vec![], vec![5.0], vec![2.0, 2.0], vec![0.0, 9.0]]);
        for svg in [bars, lines, boxes] {
            let doc = roxmltree::Document::parse(&svg).unwrap();
            assert_eq!(doc.root_element().tag_name().name(), "svg");
        }
    }

    #[test]
    fn axis_rounding() {
        assert_eq!(nice_max(147.3), 200.0);
        assert_eq!(nice_max(0.0), 1.0);
        assert_eq!(nice_max(0.42), 0.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
    }
}
