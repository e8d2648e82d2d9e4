//! Static line plots of selected coordinates against the step number.

use std::fmt::Write;

use volterra_core::Trajectory;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn coordinate_plot(traj: &Trajectory, coords: &[usize]) -> String {
    let last = *traj.steps().last().unwrap_or(&0) as f64;
    let sx = |step: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * step as f64 / last.max(1.0);
    let sy = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, sy(0.0), sy(1.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{x0:.2}" y="{:.2}" font-size="12">0</text>"#,
        y0 + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{last}</text>"#,
        x1,
        y0 + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{y1:.2}" font-size="12" text-anchor="end">1</text>"#,
        x0 - 4.0
    );
    for (c, &k) in coords.iter().enumerate() {
        let color = COLORS[c % COLORS.len()];
        let points: Vec<String> = traj
            .steps()
            .iter()
            .zip(traj.points())
            .map(|(&step, p)| format!("{:.2},{:.2}", sx(step), sy(p.get(k))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">x{k}</text>"#,
            x1 - 40.0,
            MARGIN + 14.0 * c as f64
        );
    }
    s.push_str("</svg>\n");
    s
}
