//! Artifact writers. Every float is printed with 17 significant digits.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use ssm_core::SsmError;

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Pretty JSON formatter that prints floats in `{:.16e}` form.
struct Precise<'a>(PrettyFormatter<'a>);

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, SsmError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).map_err(|e| SsmError::Numerical(format!("serializing output: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn io_err(path: &Path, e: impl Into<io::Error>) -> SsmError {
    SsmError::Io { path: path.display().to_string(), source: e.into() }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SsmError> {
    std::fs::write(path, to_json(value)?).map_err(|e| io_err(path, e))
}

/// Cell of a CSV row.
pub enum Cell {
    Num(f64),
    Bool(bool),
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<Cell>]) -> Result<(), SsmError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, io::Error::other(e)))?;
    w.write_record(header).map_err(|e| io_err(path, io::Error::other(e)))?;
    for row in rows {
        let rec: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Num(x) => fmt_f64(*x),
                Cell::Bool(b) => b.to_string(),
            })
            .collect();
        w.write_record(&rec).map_err(|e| io_err(path, io::Error::other(e)))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Static plot of `y` against `x`; points flagged `false` (unstable) are drawn dashed in a second colour.
pub fn write_svg(path: &Path, title: &str, x_label: &str, y_label: &str, pts: &[(f64, f64, bool)]) -> Result<(), SsmError> {
    let (w, h, pad) = (640.0, 420.0, 56.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y, _) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{:.2} {:.2} L{:.2} {:.2} L{:.2} {:.2}" fill="none" stroke="black"/>"#,
        pad,
        pad,
        pad,
        h - pad,
        w - pad,
        h - pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{title}</text>"#, w / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{x_label}</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{y_label}</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (v, pos) in [(x0, true), (x1, true), (y0, false), (y1, false)] {
        let (tx, ty, anchor) = if pos { (sx(v), h - pad + 16.0, "middle") } else { (pad - 6.0, sy(v) + 4.0, "end") };
        let _ = writeln!(s, r#"<text x="{tx:.2}" y="{ty:.2}" text-anchor="{anchor}" font-size="11">{v:.4}</text>"#);
    }
    // Branches are not labelled, so each point is joined to the nearest point of equal
    // stability at the next abscissa when the jump is small relative to the plot height.
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let max_jump = 0.2 * (y1 - y0);
    for pair in xs.windows(2) {
        for &(xa, ya, fa) in pts.iter().filter(|p| p.0 == pair[0]) {
            let next = pts
                .iter()
                .filter(|q| q.0 == pair[1] && q.2 == fa)
                .min_by(|p, q| (p.1 - ya).abs().total_cmp(&(q.1 - ya).abs()));
            if let Some(&(xb, yb, _)) = next.filter(|q| (q.1 - ya).abs() <= max_jump) {
                let style = if fa { r#"stroke="steelblue""# } else { r#"stroke="firebrick" stroke-dasharray="4 3""# };
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-width="1.5" {style}/>"#,
                    sx(xa),
                    sy(ya),
                    sx(xb),
                    sy(yb)
                );
            }
        }
    }
    if xs.len() == 1 {
        for &(x, y, f) in pts {
            let colour = if f { "steelblue" } else { "firebrick" };
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, sx(x), sy(y));
        }
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s).map_err(|e| io_err(path, e))
}
