//! Minimal hand-written SVG figures.

use std::fmt::Write;

use crate::geometry::Domain;
use crate::spectral::Gap;

fn header(w: f64, h: f64) -> String {
    format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n")
}

/// Eigenvalues as vertical ticks on a horizontal axis, bulk gaps shaded.
pub fn spectrum_strip(values: &[f64], gaps: &[Gap], title: &str) -> String {
    let (w, h, pad) = (800.0, 120.0, 20.0);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min).min(gaps.iter().map(|g| g.lo).fold(f64::INFINITY, f64::min));
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(gaps.iter().map(|g| g.hi).fold(f64::NEG_INFINITY, f64::max));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |e: f64| pad + (e - lo) / span * (w - 2.0 * pad);
    let mut out = header(w, h);
    for g in gaps {
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"30\" width=\"{:.2}\" height=\"60\" fill=\"#dde8f7\"/>",
            px(g.lo),
            px(g.hi) - px(g.lo)
        );
    }
    for &e in values {
        let x = px(e);
        let _ = writeln!(out, "<line x1=\"{x:.2}\" y1=\"35\" x2=\"{x:.2}\" y2=\"85\" stroke=\"black\" stroke-width=\"0.5\"/>");
    }
    let _ = writeln!(out, "<text x=\"{pad}\" y=\"18\" font-family=\"monospace\" font-size=\"12\">{}</text>", escape(title));
    let _ = writeln!(out, "<text x=\"{pad}\" y=\"110\" font-family=\"monospace\" font-size=\"10\">{lo:.3}</text>");
    let _ = writeln!(out, "<text x=\"{:.0}\" y=\"110\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">{hi:.3}</text>", w - pad);
    out.push_str("</svg>\n");
    out
}

/// Per-site values as a diverging heat map, red positive, blue negative.
pub fn heat_map(domain: &Domain, values: &[f64], title: &str) -> String {
    let cell = (480.0 / domain.bbox.nx.max(domain.bbox.ny) as f64).clamp(2.0, 16.0);
    let (w, h) = (domain.bbox.nx as f64 * cell + 20.0, domain.bbox.ny as f64 * cell + 40.0);
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = header(w, h);
    let _ = writeln!(out, "<text x=\"10\" y=\"18\" font-family=\"monospace\" font-size=\"12\">{}</text>", escape(title));
    for (s, &v) in domain.sites().iter().zip(values) {
        let t = if scale > 0.0 { v / scale } else { 0.0 };
        let (r, g, b) = if t >= 0.0 {
            (255, (255.0 * (1.0 - t)) as u8, (255.0 * (1.0 - t)) as u8)
        } else {
            ((255.0 * (1.0 + t)) as u8, (255.0 * (1.0 + t)) as u8, 255)
        };
        // y grows upward in the lattice, downward in SVG
        let y = 30.0 + (domain.bbox.ny as f64 - 1.0 - s.y as f64) * cell;
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{y:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"rgb({r},{g},{b})\"/>",
            10.0 + s.x as f64 * cell
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
