//! Dependency-free SVG emitters for embeddings and heatmaps.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use netmanifold::{Error, Result};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 0.05;

/// Viridis sampled at nine evenly spaced stops.
const VIRIDIS: [(u8, u8, u8); 9] = [
    (0x44, 0x01, 0x54),
    (0x47, 0x2d, 0x7b),
    (0x3b, 0x52, 0x8b),
    (0x2c, 0x72, 0x8e),
    (0x21, 0x91, 0x8c),
    (0x28, 0xae, 0x80),
    (0x5e, 0xc9, 0x62),
    (0xad, 0xdc, 0x30),
    (0xfd, 0xe7, 0x25),
];

/// Colour for `t ∈ [0, 1]`, as `#rrggbb`.
pub fn viridis(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |u: u8, v: u8| (u as f64 + f * (v as f64 - u as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

/// Position of each value in `[min, max]`; a constant input maps to 0.
fn unit_scale(values: impl Iterator<Item = f64> + Clone) -> impl Fn(f64) -> f64 {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    move |v| if span > 0.0 { (v - lo) / span } else { 0.0 }
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

/// Scatter of the first two coordinate columns, coloured by `color_values`.
pub fn scatter_svg(
    coordinates: ArrayView2<'_, f64>,
    color_values: &[f64],
    label: &str,
) -> Result<String> {
    let m = coordinates.nrows();
    if color_values.len() != m {
        return Err(Error::LengthMismatch(color_values.len(), m));
    }
    let xs = coordinates.column(0).to_vec();
    let ys: Vec<f64> = if coordinates.ncols() > 1 {
        coordinates.column(1).to_vec()
    } else {
        vec![0.0; m]
    };
    let sx = unit_scale(xs.iter().copied());
    let sy = unit_scale(ys.iter().copied());
    let sc = unit_scale(color_values.iter().copied());
    let (x0, y0) = (MARGIN * WIDTH, MARGIN * HEIGHT);
    // The colour bar takes the right-hand strip.
    let plot_w = WIDTH * (1.0 - 2.0 * MARGIN) - 90.0;
    let plot_h = HEIGHT * (1.0 - 2.0 * MARGIN);
    let centre = |s: f64, span: &[f64]| {
        let flat = span.iter().all(|&v| v == span[0]);
        if flat {
            0.5
        } else {
            s
        }
    };

    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(
        out,
        r#"<defs><linearGradient id="cbar" x1="0" y1="1" x2="0" y2="0">{}</linearGradient></defs>"#,
        (0..=8)
            .map(|i| format!(
                r#"<stop offset="{}" stop-color="{}"/>"#,
                num(i as f64 / 8.0),
                viridis(i as f64 / 8.0)
            ))
            .collect::<String>()
    );
    let _ = writeln!(
        out,
        r##"<path d="M{x0} {y0}h{w}v{h}h-{w}z" fill="none" stroke="#999999"/>"##,
        x0 = num(x0),
        y0 = num(y0),
        w = num(plot_w),
        h = num(plot_h)
    );
    for i in 0..m {
        let px = x0 + centre(sx(xs[i]), &xs) * plot_w;
        let py = y0 + (1.0 - centre(sy(ys[i]), &ys)) * plot_h;
        let _ = writeln!(
            out,
            r##"<circle cx="{}" cy="{}" r="6" fill="{}" stroke="#333333" stroke-width="0.5"/>"##,
            num(px),
            num(py),
            viridis(sc(color_values[i]))
        );
    }
    let bar_x = x0 + plot_w + 30.0;
    let _ = writeln!(
        out,
        r##"<path d="M{bx} {y0}h20v{h}h-20z" fill="url(#cbar)" stroke="#999999"/>"##,
        bx = num(bar_x),
        y0 = num(y0),
        h = num(plot_h)
    );
    let lo = color_values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = color_values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    for (v, y) in [(hi, y0 + 10.0), (lo, y0 + plot_h)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11">{}</text>"#,
            num(bar_x + 24.0),
            num(y),
            short(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
        num(bar_x - 4.0),
        num(y0 - 8.0),
        escape(label)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Grid of cells over `matrix`, linear viridis over `[min, max]`, with row and
/// column indices.
pub fn heatmap_svg(matrix: &Array2<f64>) -> String {
    let (rows, cols) = matrix.dim();
    let sc = unit_scale(matrix.iter().copied());
    let (x0, y0) = (MARGIN * WIDTH + 30.0, MARGIN * HEIGHT + 20.0);
    let avail_w = WIDTH * (1.0 - 2.0 * MARGIN) - 30.0;
    let avail_h = HEIGHT * (1.0 - 2.0 * MARGIN) - 20.0;
    let cell = (avail_w / cols.max(1) as f64).min(avail_h / rows.max(1) as f64);
    let font = (cell * 0.6).clamp(4.0, 12.0);

    let mut out = String::new();
    header(&mut out);
    for i in 0..rows {
        for j in 0..cols {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{c}" height="{c}" fill="{}"/>"#,
                num(x0 + j as f64 * cell),
                num(y0 + i as f64 * cell),
                viridis(sc(matrix[[i, j]])),
                c = num(cell)
            );
        }
    }
    for i in 0..rows {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="{}" text-anchor="end">{i}</text>"#,
            num(x0 - 4.0),
            num(y0 + (i as f64 + 0.7) * cell),
            num(font)
        );
    }
    for j in 0..cols {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="{}" text-anchor="middle">{j}</text>"#,
            num(x0 + (j as f64 + 0.5) * cell),
            num(y0 - 4.0),
            num(font)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_scatter_svg(
    coordinates: ArrayView2<'_, f64>,
    color_values: &[f64],
    label: &str,
    out: &Path,
) -> Result<()> {
    std::fs::write(out, scatter_svg(coordinates, color_values, label)?)?;
    Ok(())
}

pub fn emit_heatmap_svg(matrix: &Array2<f64>, out: &Path) -> Result<()> {
    std::fs::write(out, heatmap_svg(matrix))?;
    Ok(())
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH,
        h = HEIGHT
    );
}

fn short(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "n/a".into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
