use std::fmt::Write;

use schottky_core::dimension::OrbitPoint;
use schottky_core::{Disk, ExtComplex, C64};

const SIZE: f64 = 800.0;
const PAD: f64 = 0.05;

/// A static scatter of limit points over the outlines of the round disks.
pub fn scatter(points: &[OrbitPoint], disks: &[Disk]) -> String {
    let finite: Vec<C64> = points
        .iter()
        .filter_map(|p| match p.point {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::Infinity => None,
        })
        .collect();
    let mut xs: Vec<f64> = finite.iter().map(|z| z.re).collect();
    let mut ys: Vec<f64> = finite.iter().map(|z| z.im).collect();
    for d in disks {
        if let Disk::Round { center, radius, .. } = d {
            xs.extend([center.re - radius, center.re + radius]);
            ys.extend([center.im - radius, center.im + radius]);
        }
    }
    let fold = |v: &[f64]| {
        v.iter()
            .filter(|x| x.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let (mut x0, mut x1) = fold(&xs);
    let (mut y0, mut y1) = fold(&ys);
    if !(x0 <= x1) {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12) * (1.0 + 2.0 * PAD);
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let scale = SIZE / span;
    let sx = |x: f64| (x - cx) * scale + SIZE / 2.0;
    let sy = |y: f64| SIZE / 2.0 - (y - cy) * scale;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for d in disks {
        if let Disk::Round { center, radius, .. } = d {
            let _ = writeln!(
                out,
                r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#4a78b5" stroke-width="1"/>"##,
                sx(center.re),
                sy(center.im),
                radius * scale
            );
        }
    }
    let _ = writeln!(out, r#"<g fill="black">"#);
    for z in &finite {
        let _ = writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="0.8"/>"#, sx(z.re), sy(z.im));
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}
