//! SVG rendering of run outputs. Fixed viewport and number formatting, so
//! equal inputs give byte-identical files.

use std::fmt::Write;

use magkit::{MagError, Result};

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 56.0;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse(csv: &str, name: &str) -> Result<Table> {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| MagError::Validation(format!("{name} is empty")))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    if rows.is_empty() {
        return Err(MagError::Validation(format!("{name} has no rows")));
    }
    if rows.iter().any(|r| r.len() != header.len()) {
        return Err(MagError::Validation(format!("{name} has ragged rows")));
    }
    Ok(Table { header, rows })
}

impl Table {
    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn floats(&self, c: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r[c].parse::<f64>()
                    .map_err(|_| MagError::Validation(format!("non-numeric entry {:?} in column {}", r[c], self.header[c])))
            })
            .collect()
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                let c = if lo.is_finite() { lo } else { 0.0 };
                (c - 1.0, c + 1.0)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Self { x: span(xs), y: span(ys) }
    }

    fn px(&self, x: f64) -> f64 {
        M + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * M)
    }

    fn py(&self, y: f64) -> f64 {
        H - M - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * M)
    }
}

fn open(title: &str, frame: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    )
    .unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, esc(xlabel)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    )
    .unwrap();
    for (v, anchor, x, y) in [
        (frame.x.0, "start", M, H - M + 16.0),
        (frame.x.1, "end", W - M, H - M + 16.0),
    ] {
        writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{v:.4}</text>"#).unwrap();
    }
    for (v, y) in [(frame.y.0, H - M), (frame.y.1, M + 10.0)] {
        writeln!(s, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{v:.4}</text>"#, M - 4.0).unwrap();
    }
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(frame: &Frame, xs: &[f64], ys: &[f64], color: &str) -> String {
    let mut pts = String::new();
    for (x, y) in xs.iter().zip(ys) {
        if !pts.is_empty() {
            pts.push(' ');
        }
        write!(pts, "{:.3},{:.3}", frame.px(*x), frame.py(*y)).unwrap();
    }
    format!("<polyline points=\"{pts}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n")
}

/// Position trajectory: `pos_1` against `pos_0`, or `pos_0` against time in 1D.
pub fn trajectory_svg(csv: &str) -> Result<String> {
    let t = parse(csv, "trajectory.csv")?;
    let p0 = t.col("pos_0").ok_or_else(|| MagError::Validation("trajectory.csv lacks pos_0".into()))?;
    let time = t.col("time").ok_or_else(|| MagError::Validation("trajectory.csv lacks time".into()))?;
    let (xs, ys, xl, yl) = match t.col("pos_1") {
        Some(p1) => (t.floats(p0)?, t.floats(p1)?, "pos_0", "pos_1"),
        None => (t.floats(time)?, t.floats(p0)?, "time", "pos_0"),
    };
    let frame = Frame::fit(&xs, &ys);
    let mut s = open("trajectory", &frame, xl, yl);
    s.push_str(&polyline(&frame, &xs, &ys, "steelblue"));
    s.push_str("</svg>\n");
    Ok(s)
}

/// One scatter plot per snapshot time of `cloud.csv`.
pub fn cloud_film(csv: &str) -> Result<Vec<String>> {
    let t = parse(csv, "cloud.csv")?;
    let time = t.col("time").ok_or_else(|| MagError::Validation("cloud.csv lacks time".into()))?;
    let c0 = t.col("coord_0").ok_or_else(|| MagError::Validation("cloud.csv lacks coord_0".into()))?;
    let id = t.col("particle_id").ok_or_else(|| MagError::Validation("cloud.csv lacks particle_id".into()))?;
    let times = t.floats(time)?;
    let xs = t.floats(c0)?;
    let ys = match t.col("coord_1") {
        Some(c1) => t.floats(c1)?,
        None => t.floats(id)?,
    };
    let ylabel = if t.col("coord_1").is_some() { "coord_1" } else { "particle_id" };
    let frame = Frame::fit(&xs, &ys);
    let mut frames = Vec::new();
    let mut start = 0;
    while start < times.len() {
        let mut end = start;
        while end < times.len() && times[end] == times[start] {
            end += 1;
        }
        let title = format!("cloud at s = {:.6} ({} particles)", times[start], end - start);
        let mut s = open(&title, &frame, "coord_0", ylabel);
        for i in start..end {
            writeln!(
                s,
                r#"<circle cx="{:.3}" cy="{:.3}" r="1.5" fill="darkred" fill-opacity="0.5"/>"#,
                frame.px(xs[i]),
                frame.py(ys[i])
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        frames.push(s);
        start = end;
    }
    Ok(frames)
}

/// Least-squares slope and intercept of `ln y` against `ln x` over positive pairs.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Log-log curves of every column against the first, each with its fitted slope.
pub fn error_curves_svg(csv: &str) -> Result<String> {
    let t = parse(csv, "error table")?;
    if t.header.len() < 2 {
        return Err(MagError::Validation("error table needs at least two columns".into()));
    }
    let xs = t.floats(0)?;
    let series: Vec<Vec<f64>> = (1..t.header.len()).map(|c| t.floats(c)).collect::<Result<_>>()?;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for ys in &series {
        for (x, y) in xs.iter().zip(ys) {
            if *x > 0.0 && *y > 0.0 {
                lx.push(x.log10());
                ly.push(y.log10());
            }
        }
    }
    if lx.is_empty() {
        return Err(MagError::Validation("error table has no positive entries".into()));
    }
    let frame = Frame::fit(&lx, &ly);
    let mut s = open("error curves (log10-log10)", &frame, &format!("log10 {}", t.header[0]), "log10 error");
    let colors = ["steelblue", "darkorange", "seagreen", "purple"];
    for (i, ys) in series.iter().enumerate() {
        let (px, py): (Vec<f64>, Vec<f64>) = xs
            .iter()
            .zip(ys)
            .filter(|(x, y)| **x > 0.0 && **y > 0.0)
            .map(|(x, y)| (x.log10(), y.log10()))
            .unzip();
        let color = colors[i % colors.len()];
        s.push_str(&polyline(&frame, &px, &py, color));
        for (x, y) in px.iter().zip(&py) {
            writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{color}"/>"#, frame.px(*x), frame.py(*y)).unwrap();
        }
        let label = match loglog_slope(&xs, ys) {
            Some((slope, _)) => format!("{}: slope {slope:.3}", t.header[i + 1]),
            None => format!("{}: slope n/a", t.header[i + 1]),
        };
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            M + 8.0,
            M + 18.0 + 16.0 * i as f64,
            esc(&label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        let (s, _) = loglog_slope(&xs, &ys).unwrap();
        assert!((s + 1.5).abs() < 1e-12);
    }

    #[test]
    fn planar_trajectory_is_one_polyline() {
        let svg = trajectory_svg("clock,time,pos_0,pos_1\nt,0.0,0.0,0.0\nt,1.0,1.0,2.0\n").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn film_splits_by_time() {
        let csv = "time,particle_id,coord_0,coord_1\n0.5,0,1.0,2.0\n0.5,1,0.0,1.0\n0.7,0,1.0,1.0\n";
        assert_eq!(cloud_film(csv).unwrap().len(), 2);
    }

    #[test]
    fn empty_table_rejected() {
        assert!(error_curves_svg("").is_err());
    }
}
