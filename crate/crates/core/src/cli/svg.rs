use std::fmt::Write;

use crate::eval::Frontier;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 6] = [
    "#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#7f8c8d",
];

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<title>{title}</title>"#);
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{y}" x2="{x}" y2="{y}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{y}" stroke="black"/>"#,
        x = W - PAD,
        y = H - PAD
    );
}

/// Frontiers as step polylines with one circle per point. Time runs over
/// `1..=t_end`, accuracy over `[0, 1]`.
pub fn frontier_svg(frontiers: &[(String, Frontier)], t_end: usize) -> String {
    let sx = |t: f64| PAD + (t - 1.0) / (t_end.max(2) as f64 - 1.0) * (W - 2.0 * PAD);
    let sy = |a: f64| H - PAD - a * (H - 2.0 * PAD);
    let mut out = String::new();
    header(&mut out, "Pareto frontiers");
    for (i, (label, f)) in frontiers.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = String::new();
        for (j, p) in f.points.iter().enumerate() {
            if j > 0 {
                let _ = write!(
                    pts,
                    "{:.2},{:.2} ",
                    sx(p.mean_t),
                    sy(f.points[j - 1].accuracy)
                );
            }
            let _ = write!(pts, "{:.2},{:.2} ", sx(p.mean_t), sy(p.accuracy));
        }
        let _ = writeln!(
            out,
            r#"<polyline class="frontier" data-label="{label}" fill="none" stroke="{color}" points="{}"/>"#,
            pts.trim_end()
        );
        for p in &f.points {
            let _ = writeln!(
                out,
                r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(p.mean_t),
                sy(p.accuracy)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One bar per stopping time.
pub fn histogram_svg(label: &str, counts: &[usize]) -> String {
    let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let slot = (W - 2.0 * PAD) / counts.len().max(1) as f64;
    let mut out = String::new();
    header(&mut out, &format!("Stopping times: {label}"));
    for (i, &c) in counts.iter().enumerate() {
        let h = c as f64 / max * (H - 2.0 * PAD);
        let _ = writeln!(
            out,
            r#"<rect class="bar" data-t="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            i + 1,
            PAD + i as f64 * slot + 1.0,
            H - PAD - h,
            (slot - 2.0).max(1.0),
            h,
            COLORS[0]
        );
    }
    out.push_str("</svg>\n");
    out
}
