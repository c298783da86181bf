use serde::{Deserialize, Serialize};

use super::{Barcode, Interval};

#[derive(Serialize, Deserialize)]
struct JsonInterval {
    dim: usize,
    birth: f64,
    death: Option<f64>,
    prime: u32,
}

/// `[{dim, birth, death | null, prime}, ...]`.
pub fn barcode_to_json(bc: &Barcode) -> serde_json::Value {
    let rows: Vec<JsonInterval> = bc
        .intervals
        .iter()
        .map(|iv| JsonInterval {
            dim: iv.dim,
            birth: iv.birth,
            death: iv.death,
            prime: bc.prime,
        })
        .collect();
    serde_json::to_value(rows).expect("intervals serialize")
}

/// Parses the array form back into intervals; the prime is taken from the
/// first entry (2 when the array is empty).
pub fn barcode_from_json(
    value: &serde_json::Value,
    max_dim: usize,
    r_max: f64,
) -> Result<Barcode, serde_json::Error> {
    let rows: Vec<JsonInterval> = serde_json::from_value(value.clone())?;
    let prime = rows.first().map_or(2, |r| r.prime);
    Ok(Barcode {
        intervals: rows
            .into_iter()
            .map(|r| Interval {
                dim: r.dim,
                birth: r.birth,
                death: r.death,
            })
            .collect(),
        prime,
        max_dim,
        r_max,
    })
}

/// `dim,birth,death` rows; infinite deaths written as `inf`.
pub fn diagram_csv(bc: &Barcode) -> String {
    let mut out = String::from("dim,birth,death\n");
    for iv in &bc.intervals {
        let death = iv.death.map_or_else(|| "inf".to_owned(), |d| d.to_string());
        out.push_str(&format!("{},{},{}\n", iv.dim, iv.birth, death));
    }
    out
}

const DIM_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Persistence diagram as a standalone SVG: birth on x, death on y, the
/// diagonal drawn, infinite points pinned to the top edge.
pub fn diagram_svg(bc: &Barcode) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    let top = bc
        .intervals
        .iter()
        .map(|iv| iv.death.unwrap_or(iv.birth))
        .fold(bc.r_max, f64::max)
        .max(1e-9);
    let span = SIZE - 2.0 * PAD;
    let x = |v: f64| PAD + v / top * span;
    let y = |v: f64| SIZE - PAD - v / top * span;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    );
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        x(0.0), y(0.0), x(top), y(0.0)
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        x(0.0), y(0.0), x(0.0), y(top)
    ));
    svg.push_str(&format!(
        "<line class=\"diagonal\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        x(0.0), y(0.0), x(top), y(top)
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">birth</text>\n",
        SIZE / 2.0,
        SIZE - 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"12\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 12 {:.2})\">death</text>\n",
        SIZE / 2.0,
        SIZE / 2.0
    ));
    for iv in &bc.intervals {
        let color = DIM_COLORS[iv.dim % DIM_COLORS.len()];
        let (cy, shape) = match iv.death {
            Some(d) => (y(d), "finite"),
            None => (y(top), "infinite"),
        };
        svg.push_str(&format!(
            "<circle class=\"{shape} h{}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
            iv.dim,
            x(iv.birth),
            cy
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
