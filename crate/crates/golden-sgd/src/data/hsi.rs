//! RGB ↔ HSI conversion.
//!
//! Intensity is i = (r + g + b)/3 on unit-scaled channels, saturation
//! s = 1 − min/i, and hue comes from the standard arccos form with the
//! h = 0 convention at s = 0 (grays) so round trips stay deterministic.
//! The float path is exposed separately from the u8 wrappers because
//! intensity-only edits preserve hue exactly only before quantization.

use std::f64::consts::PI;

/// Unit-scale RGB → (hue in [0, 2π), saturation in [0,1], intensity in [0,1]).
pub fn rgb_to_hsi_f(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let i = (r + g + b) / 3.0;
    if i <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let min = r.min(g).min(b);
    let s = (1.0 - min / i).clamp(0.0, 1.0);
    if s == 0.0 {
        return (0.0, 0.0, i);
    }
    let num = 0.5 * ((r - g) + (r - b));
    let den = ((r - g) * (r - g) + (r - b) * (g - b)).sqrt();
    let mut h = if den == 0.0 {
        0.0
    } else {
        (num / den).clamp(-1.0, 1.0).acos()
    };
    if b > g {
        h = 2.0 * PI - h;
    }
    (h % (2.0 * PI), s, i)
}

/// Inverse transform on unit-scale channels; output clamped to [0, 1].
pub fn hsi_to_rgb_f(h: f64, s: f64, i: f64) -> (f64, f64, f64) {
    let third = 2.0 * PI / 3.0;
    let (r, g, b) = if s <= 0.0 {
        (i, i, i)
    } else if h < third {
        let b = i * (1.0 - s);
        let r = i * (1.0 + s * h.cos() / (PI / 3.0 - h).cos());
        (r, 3.0 * i - r - b, b)
    } else if h < 2.0 * third {
        let h = h - third;
        let r = i * (1.0 - s);
        let g = i * (1.0 + s * h.cos() / (PI / 3.0 - h).cos());
        (r, g, 3.0 * i - r - g)
    } else {
        let h = h - 2.0 * third;
        let g = i * (1.0 - s);
        let b = i * (1.0 + s * h.cos() / (PI / 3.0 - h).cos());
        (3.0 * i - g - b, g, b)
    };
    (r.clamp(0.0, 1.0), g.clamp(0.0, 1.0), b.clamp(0.0, 1.0))
}

/// 8-bit RGB pixel → HSI triple.
pub fn rgb_to_hsi(pixel: [u8; 3]) -> (f64, f64, f64) {
    rgb_to_hsi_f(
        pixel[0] as f64 / 255.0,
        pixel[1] as f64 / 255.0,
        pixel[2] as f64 / 255.0,
    )
}

/// HSI triple → 8-bit RGB pixel (rounded).
pub fn hsi_to_rgb(h: f64, s: f64, i: f64) -> [u8; 3] {
    let (r, g, b) = hsi_to_rgb_f(h, s, i);
    [
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8,
    ]
}
