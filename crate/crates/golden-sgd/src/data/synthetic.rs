//! Procedurally rendered digit-like glyphs.
//!
//! Offline stand-in for MNIST: each class is a fixed stroke skeleton
//! (lines and elliptical arcs on the unit square) rasterized at 28×28
//! through a seeded jitter transform — translation, anisotropic scale,
//! rotation, per-vertex wobble, stroke thickness and ink level all vary per
//! image, plus background speckle. Classes are interleaved 0,1,2,…,9,0,…
//! so any prefix is nearly balanced.

use super::{DataError, Dataset, GrayImage, Provenance, Split};
use crate::rng::Rng;

enum Stroke {
    Line([f64; 2], [f64; 2]),
    /// Elliptical arc: (cx + rx·cos θ, cy + ry·sin θ), θ in [from, to].
    /// y grows downward, so θ = 3π/2 is the top of the ellipse.
    Arc {
        c: [f64; 2],
        r: [f64; 2],
        from: f64,
        to: f64,
    },
}

use std::f64::consts::PI;

fn skeleton(digit: u8) -> Vec<Stroke> {
    use Stroke::*;
    match digit {
        0 => vec![Arc {
            c: [0.5, 0.5],
            r: [0.26, 0.36],
            from: 0.0,
            to: 2.0 * PI,
        }],
        1 => vec![
            Line([0.38, 0.28], [0.54, 0.14]),
            Line([0.54, 0.14], [0.54, 0.86]),
        ],
        2 => vec![
            Arc {
                c: [0.5, 0.34],
                r: [0.24, 0.2],
                from: PI,
                to: 2.0 * PI,
            },
            Line([0.74, 0.34], [0.26, 0.84]),
            Line([0.26, 0.84], [0.76, 0.84]),
        ],
        3 => vec![
            Arc {
                c: [0.47, 0.3],
                r: [0.24, 0.17],
                from: 1.05 * PI,
                to: 2.5 * PI,
            },
            Arc {
                c: [0.47, 0.66],
                r: [0.26, 0.19],
                from: 1.5 * PI,
                to: 2.95 * PI,
            },
        ],
        4 => vec![
            Line([0.62, 0.12], [0.24, 0.6]),
            Line([0.24, 0.6], [0.8, 0.6]),
            Line([0.62, 0.12], [0.62, 0.88]),
        ],
        5 => vec![
            Line([0.72, 0.14], [0.3, 0.14]),
            Line([0.3, 0.14], [0.28, 0.46]),
            Arc {
                c: [0.46, 0.64],
                r: [0.27, 0.23],
                from: 1.2 * PI,
                to: 2.95 * PI,
            },
        ],
        6 => vec![
            Arc {
                c: [0.5, 0.64],
                r: [0.24, 0.22],
                from: 0.0,
                to: 2.0 * PI,
            },
            Arc {
                c: [0.72, 0.55],
                r: [0.42, 0.42],
                from: PI,
                to: 1.45 * PI,
            },
        ],
        7 => vec![
            Line([0.24, 0.14], [0.76, 0.14]),
            Line([0.76, 0.14], [0.42, 0.88]),
        ],
        8 => vec![
            Arc {
                c: [0.5, 0.3],
                r: [0.2, 0.17],
                from: 0.0,
                to: 2.0 * PI,
            },
            Arc {
                c: [0.5, 0.67],
                r: [0.24, 0.2],
                from: 0.0,
                to: 2.0 * PI,
            },
        ],
        9 => vec![
            Arc {
                c: [0.5, 0.35],
                r: [0.23, 0.2],
                from: 0.0,
                to: 2.0 * PI,
            },
            Line([0.72, 0.4], [0.58, 0.88]),
        ],
        _ => unreachable!("digits are 0..=9"),
    }
}

/// Polyline segments after sampling arcs; closed over jitter later.
fn to_segments(strokes: &[Stroke]) -> Vec<([f64; 2], [f64; 2])> {
    let mut segments = Vec::new();
    for s in strokes {
        match *s {
            Stroke::Line(a, b) => segments.push((a, b)),
            Stroke::Arc { c, r, from, to } => {
                let span = to - from;
                let steps = ((span.abs() / (2.0 * PI)) * 20.0).ceil().max(6.0) as usize;
                let mut prev = [c[0] + r[0] * from.cos(), c[1] + r[1] * from.sin()];
                for i in 1..=steps {
                    let t = from + span * i as f64 / steps as f64;
                    let p = [c[0] + r[0] * t.cos(), c[1] + r[1] * t.sin()];
                    segments.push((prev, p));
                    prev = p;
                }
            }
        }
    }
    segments
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

const SIDE: usize = 28;

fn render_glyph(digit: u8, rng: &mut Rng) -> GrayImage {
    // per-image jitter
    let angle = rng.uniform(-0.35, 0.35);
    let scale_x = rng.uniform(0.62, 1.18);
    let scale_y = rng.uniform(0.62, 1.18);
    let dx = rng.uniform(-0.12, 0.12);
    let dy = rng.uniform(-0.12, 0.12);
    let thickness = rng.uniform(0.028, 0.095);
    let ink = rng.uniform(110.0, 255.0);
    let wobble = 0.04;

    let (sin_a, cos_a) = angle.sin_cos();
    let transform = |p: [f64; 2], rng: &mut Rng| -> [f64; 2] {
        let (x, y) = (p[0] - 0.5, p[1] - 0.5);
        let (x, y) = (x * scale_x, y * scale_y);
        let (x, y) = (x * cos_a - y * sin_a, x * sin_a + y * cos_a);
        [
            x + 0.5 + dx + rng.uniform(-wobble, wobble),
            y + 0.5 + dy + rng.uniform(-wobble, wobble),
        ]
    };

    let segments: Vec<([f64; 2], [f64; 2])> = to_segments(&skeleton(digit))
        .into_iter()
        .map(|(a, b)| (transform(a, rng), transform(b, rng)))
        .collect();

    let soft = 0.022; // antialiasing band width
    let mut pixels = vec![0u8; SIDE * SIDE];
    for py in 0..SIDE {
        for px in 0..SIDE {
            let p = [
                (px as f64 + 0.5) / SIDE as f64,
                (py as f64 + 0.5) / SIDE as f64,
            ];
            let mut d = f64::INFINITY;
            for &(a, b) in &segments {
                d = d.min(dist_to_segment(p, a, b));
            }
            let coverage = ((thickness - d) / soft + 1.0).clamp(0.0, 1.0);
            pixels[py * SIDE + px] = (coverage * ink) as u8;
        }
    }

    // sensor noise plus background speckle
    for px in pixels.iter_mut() {
        let noisy = *px as f64 + rng.uniform(-18.0, 18.0);
        *px = noisy.clamp(0.0, 255.0) as u8;
        if rng.next_f64() < 0.05 {
            let spot = rng.uniform(40.0, 170.0) as u8;
            *px = (*px).max(spot);
        }
    }

    GrayImage::new(SIDE, SIDE, pixels)
}

/// `n` rendered glyphs with interleaved classes 0..9. Deterministic in
/// (`n`, `seed`): image i depends only on the seed and i.
pub fn synthetic_digits(n: usize, seed: u64) -> Result<Dataset, DataError> {
    if n < 10 {
        return Err(DataError::Domain(format!(
            "need at least 10 synthetic digits for class coverage, got {n}"
        )));
    }
    let root = Rng::new(seed);
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let digit = (i % 10) as u8;
        let mut rng = root.derive(i as u64);
        images.push(render_glyph(digit, &mut rng));
        labels.push(digit);
    }
    Dataset::new(images, labels, Split::Train, Provenance::Synthetic)
}
