//! Minimal deterministic SVG plots: line/scatter panels with optional error
//! bars, and heatmaps with line overlays.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Points,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub err: Option<Vec<f64>>,
    pub mark: Mark,
}

impl Series {
    pub fn line(name: &str, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self {
            name: name.to_owned(),
            xs,
            ys,
            err: None,
            mark: Mark::Line,
        }
    }

    pub fn points(name: &str, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self {
            mark: Mark::Points,
            ..Self::line(name, xs, ys)
        }
    }

    pub fn with_errors(mut self, err: Vec<f64>) -> Self {
        self.err = Some(err);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (y, y0, y1) = if self.log_y {
            (y.log10(), self.y0.log10(), self.y1.log10())
        } else {
            (y, self.y0, self.y1)
        };
        H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let p = 0.04 * (hi - lo);
    (lo - p, hi + p)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    for k in 0..=4 {
        let x = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.px(x),
            b + 16.0,
            tick(x)
        );
        let y = if f.log_y {
            10f64.powf(f.y0.log10() + (f.y1.log10() - f.y0.log10()) * k as f64 / 4.0)
        } else {
            f.y0 + (f.y1 - f.y0) * k as f64 / 4.0
        };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 6.0,
            f.py(y) + 4.0,
            tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        H - 18.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (t + b) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn draw_series(out: &mut String, f: &Frame, series: &[Series]) {
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let visible: Vec<(f64, f64)> =
            s.xs.iter()
                .zip(&s.ys)
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!f.log_y || **y > 0.0))
                .map(|(&x, &y)| (f.px(x), f.py(y)))
                .collect();
        match s.mark {
            Mark::Line => {
                if visible.len() > 1 {
                    let pts: Vec<String> = visible
                        .iter()
                        .map(|(x, y)| format!("{x:.2},{y:.2}"))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        pts.join(" ")
                    );
                }
            }
            Mark::Points => {
                for (x, y) in &visible {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.6" fill="{color}"/>"#
                    );
                }
            }
        }
        if let Some(err) = &s.err {
            for ((&x, &y), &e) in s.xs.iter().zip(&s.ys).zip(err) {
                if !(x.is_finite() && y.is_finite() && e.is_finite()) {
                    continue;
                }
                let _ = writeln!(
                    out,
                    r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                    f.px(x),
                    f.py(y - e),
                    f.py(y + e)
                );
            }
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#,
            W - RIGHT + 8.0,
            ly - 9.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#,
            W - RIGHT + 22.0,
            escape(&s.name)
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
    pub log_y: bool,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Self {
            title: title.to_owned(),
            xlabel: xlabel.to_owned(),
            ylabel: ylabel.to_owned(),
            series: Vec::new(),
            log_y: false,
            x_range: None,
            y_range: None,
        }
    }

    pub fn series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let fin = |v: &&f64| v.is_finite();
        let xs = self.series.iter().flat_map(|s| s.xs.iter()).filter(fin);
        let (xl, xh) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.ys.iter())
            .filter(fin)
            .filter(|y| !self.log_y || **y > 0.0);
        let (yl, yh) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
            (a.min(y), b.max(y))
        });
        let (x0, x1) = self.x_range.unwrap_or_else(|| padded(xl, xh));
        let (y0, y1) = self.y_range.unwrap_or_else(|| {
            if self.log_y && yl.is_finite() {
                (yl / 1.5, yh * 1.5)
            } else {
                padded(yl, yh)
            }
        });
        let f = Frame {
            x0,
            x1,
            y0,
            y1,
            log_y: self.log_y,
        };
        let mut out = String::new();
        header(&mut out, &self.title);
        axes(&mut out, &f, &self.xlabel, &self.ylabel);
        draw_series(&mut out, &f, &self.series);
        out.push_str("</svg>\n");
        out
    }
}

/// Piecewise-linear approximation of the viridis map.
fn color(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * 4.0;
    let i = (t as usize).min(3);
    let u = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let c = |p: f64, q: f64| (p + u * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub colorbar: String,
    /// Column centers.
    pub xs: Vec<f64>,
    /// Row centers.
    pub ys: Vec<f64>,
    /// `values[row][col]`; non-finite cells are drawn grey.
    pub values: Vec<Vec<f64>>,
    pub overlays: Vec<Series>,
}

fn edges(c: &[f64]) -> Vec<f64> {
    if c.len() == 1 {
        return vec![c[0] - 0.5, c[0] + 0.5];
    }
    let mut e = Vec::with_capacity(c.len() + 1);
    e.push(c[0] - 0.5 * (c[1] - c[0]));
    for w in c.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    let n = c.len();
    e.push(c[n - 1] + 0.5 * (c[n - 1] - c[n - 2]));
    e
}

impl Heatmap {
    pub fn render(&self) -> String {
        let (ex, ey) = (edges(&self.xs), edges(&self.ys));
        let f = Frame {
            x0: ex[0],
            x1: ex[ex.len() - 1],
            y0: ey[0],
            y1: ey[ey.len() - 1],
            log_y: false,
        };
        let finite = self
            .values
            .iter()
            .flatten()
            .copied()
            .filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = String::new();
        header(&mut out, &self.title);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let fill = if v.is_finite() {
                    color((v - lo) / span)
                } else {
                    "#bbbbbb".to_owned()
                };
                let (x0, x1) = (f.px(ex[j]), f.px(ex[j + 1]));
                let (y0, y1) = (f.py(ey[i + 1]), f.py(ey[i]));
                let _ = writeln!(
                    out,
                    r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                    x1 - x0,
                    y1 - y0
                );
            }
        }
        axes(&mut out, &f, &self.xlabel, &self.ylabel);
        let clipped: Vec<Series> = self
            .overlays
            .iter()
            .map(|s| {
                let keep: Vec<(f64, f64)> =
                    s.xs.iter()
                        .zip(&s.ys)
                        .filter(|(&x, &y)| x >= f.x0 && x <= f.x1 && y >= f.y0 && y <= f.y1)
                        .map(|(&x, &y)| (x, y))
                        .collect();
                Series {
                    xs: keep.iter().map(|p| p.0).collect(),
                    ys: keep.iter().map(|p| p.1).collect(),
                    err: None,
                    ..s.clone()
                }
            })
            .collect();
        draw_series(&mut out, &f, &clipped);
        // colorbar
        let (bx, by, bh) = (
            W - RIGHT + 30.0,
            TOP + 20.0 + 16.0 * self.overlays.len() as f64,
            200.0,
        );
        for k in 0..50 {
            let t = k as f64 / 49.0;
            let _ = writeln!(
                out,
                r#"<rect x="{bx:.1}" y="{:.2}" width="14" height="{:.2}" fill="{}"/>"#,
                by + bh * (1.0 - t) - bh / 50.0,
                bh / 50.0 + 0.5,
                color(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + 18.0,
            by + 4.0,
            tick(hi)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + 18.0,
            by + bh,
            tick(lo)
        );
        let _ = writeln!(
            out,
            r#"<text x="{bx:.1}" y="{:.1}">{}</text>"#,
            by + bh + 18.0,
            escape(&self.colorbar)
        );
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_deterministic_and_closed() {
        let p = Plot::new("t<1>", "x", "y")
            .series(Series::line("a", vec![0.0, 1.0, 2.0], vec![1.0, 4.0, 9.0]))
            .series(Series::points("b", vec![0.5], vec![f64::NAN]).with_errors(vec![0.1]));
        let s = p.render();
        assert_eq!(s, p.render());
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("t&lt;1&gt;"));
    }

    #[test]
    fn heatmap_cells() {
        let h = Heatmap {
            title: "h".into(),
            xlabel: "x".into(),
            ylabel: "y".into(),
            colorbar: "v".into(),
            xs: vec![1.0, 2.0],
            ys: vec![0.0],
            values: vec![vec![0.0, f64::NAN]],
            overlays: vec![Series::line("o", vec![1.0, 5.0], vec![0.0, 0.0])],
        };
        let s = h.render();
        assert!(s.contains("#bbbbbb"));
        assert!(s.contains("#440154"));
    }
}
