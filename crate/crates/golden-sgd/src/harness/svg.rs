//! SVG heatmap of the η × momentum grid.
//!
//! Cells are shaded on a linear scale between the grid minimum and maximum
//! mean metric; the top-10 cells carry a green outline and the best cell a
//! red one.

/// Five-stop viridis-like color ramp, t ∈ [0, 1].
fn ramp(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let lerp = |a: f64, b: f64| a + (b - a) * f;
    (
        lerp(STOPS[i].0, STOPS[i + 1].0).round() as u8,
        lerp(STOPS[i].1, STOPS[i + 1].1).round() as u8,
        lerp(STOPS[i].2, STOPS[i + 1].2).round() as u8,
    )
}

/// Render the grid. `means[eta_idx][momentum_idx]` may be None for cells
/// absent from the records. `top` and `best` are (eta_idx, momentum_idx)
/// positions.
pub fn heatmap_svg(
    title: &str,
    eta_values: &[f64],
    momentum_values: &[f64],
    means: &[Vec<Option<f64>>],
    top: &[(usize, usize)],
    best: Option<(usize, usize)>,
) -> String {
    let (cell_w, cell_h) = (74.0, 46.0);
    let (left, top_margin) = (86.0, 64.0);
    let width = left + cell_w * momentum_values.len() as f64 + 24.0;
    let height = top_margin + cell_h * eta_values.len() as f64 + 40.0;

    let present: Vec<f64> = means.iter().flatten().filter_map(|m| *m).collect();
    let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { hi - lo } else { 1.0 };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"monospace\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.0}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n",
        width / 2.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.0}\" y=\"42\" font-size=\"11\" text-anchor=\"middle\">momentum →</text>\n",
        left + cell_w * momentum_values.len() as f64 / 2.0
    ));

    for (mi, m) in momentum_values.iter().enumerate() {
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"58\" font-size=\"10\" text-anchor=\"middle\">{m}</text>\n",
            left + cell_w * (mi as f64 + 0.5)
        ));
    }
    for (ei, e) in eta_values.iter().enumerate() {
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">η={e}</text>\n",
            left - 6.0,
            top_margin + cell_h * (ei as f64 + 0.5) + 3.0
        ));
    }

    for (ei, row) in means.iter().enumerate() {
        for (mi, mean) in row.iter().enumerate() {
            let x = left + cell_w * mi as f64;
            let y = top_margin + cell_h * ei as f64;
            match mean {
                Some(v) => {
                    let t = (v - lo) / scale;
                    let (r, g, b) = ramp(t);
                    svg.push_str(&format!(
                        "  <rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell_w:.1}\" height=\"{cell_h:.1}\" \
                         fill=\"rgb({r},{g},{b})\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n"
                    ));
                    let text_fill = if t > 0.6 { "#1b1b1b" } else { "#f2f2f2" };
                    svg.push_str(&format!(
                        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\" \
                         fill=\"{text_fill}\">{v:.3}</text>\n",
                        x + cell_w / 2.0,
                        y + cell_h / 2.0 + 3.0
                    ));
                }
                None => {
                    svg.push_str(&format!(
                        "  <rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell_w:.1}\" height=\"{cell_h:.1}\" \
                         fill=\"#eee\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n"
                    ));
                }
            }
        }
    }

    // green outlines under the red one so the best cell shows both ranks
    for &(ei, mi) in top {
        let x = left + cell_w * mi as f64;
        let y = top_margin + cell_h * ei as f64;
        svg.push_str(&format!(
            "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
             class=\"top10\" stroke=\"#00a000\" stroke-width=\"2.5\"/>\n",
            x + 1.5,
            y + 1.5,
            cell_w - 3.0,
            cell_h - 3.0
        ));
    }
    if let Some((ei, mi)) = best {
        let x = left + cell_w * mi as f64;
        let y = top_margin + cell_h * ei as f64;
        svg.push_str(&format!(
            "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
             class=\"best\" stroke=\"#d00000\" stroke-width=\"2.5\"/>\n",
            x + 4.5,
            y + 4.5,
            cell_w - 9.0,
            cell_h - 9.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{left}\" y=\"{:.1}\" font-size=\"10\">green: top 10 cells, red: best cell; \
         shade: linear between grid min and max</text>\n",
        height - 14.0
    ));
    svg.push_str("</svg>\n");
    svg
}
