//! Scatter-plot rendering: a fixed 600x600 standalone SVG showing the unit
//! circle, original points in blue, and transformed points in red.

use augseq::synthetic::ScatterRow;

const SIZE: f64 = 600.0;
/// World-to-pixel scale: the viewport spans [-2, 2] in data coordinates, so
/// transformed points that left the unit disk stay visible.
const SCALE: f64 = SIZE / 4.0;

const ORIGINAL_COLOR: &str = "#2b6cb0";
const TRANSFORMED_COLOR: &str = "#c53030";

fn px(x: f64) -> String {
    format!("{:.2}", SIZE / 2.0 + x * SCALE)
}

fn py(y: f64) -> String {
    format!("{:.2}", SIZE / 2.0 - y * SCALE)
}

fn point_circle(class: &str, color: &str, values: &[f64]) -> String {
    let x = values.first().copied().unwrap_or(0.0);
    let y = values.get(1).copied().unwrap_or(0.0);
    format!(
        r#"  <circle class="{class}" cx="{}" cy="{}" r="3" fill="{color}" fill-opacity="0.7"/>"#,
        px(x),
        py(y)
    )
}

/// Renders the scatter report as a standalone SVG document.
pub fn render_scatter(rows: &[ScatterRow]) -> String {
    let mut svg = String::new();
    svg.push_str(&format!(
        concat!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600" "#,
            r#"viewBox="0 0 600 600">"#,
            "\n"
        )
    ));
    svg.push_str("  <rect width=\"600\" height=\"600\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "  <circle cx=\"300\" cy=\"300\" r=\"{}\" fill=\"none\" stroke=\"#555\" stroke-width=\"1.5\"/>\n",
        SCALE
    ));
    for row in rows {
        svg.push_str(&point_circle("original", ORIGINAL_COLOR, &row.original));
        svg.push('\n');
        svg.push_str(&point_circle("transformed", TRANSFORMED_COLOR, &row.transformed));
        svg.push('\n');
    }
    // Legend, top-left.
    svg.push_str(&format!(
        "  <circle cx=\"20\" cy=\"20\" r=\"4\" fill=\"{ORIGINAL_COLOR}\"/>\n"
    ));
    svg.push_str(
        "  <text x=\"30\" y=\"24\" font-family=\"sans-serif\" font-size=\"13\">original</text>\n",
    );
    svg.push_str(&format!(
        "  <circle cx=\"20\" cy=\"40\" r=\"4\" fill=\"{TRANSFORMED_COLOR}\"/>\n"
    ));
    svg.push_str(
        "  <text x=\"30\" y=\"44\" font-family=\"sans-serif\" font-size=\"13\">transformed</text>\n",
    );
    svg.push_str("</svg>\n");
    svg
}
