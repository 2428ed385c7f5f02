use std::collections::BTreeMap;
use std::fmt::Write;

use crate::formats::ResultRow;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// eta bits -> (sum cbr, sum tc, n)
type Sums = BTreeMap<u64, (f64, f64, usize)>;

/// Rate-distortion chart: one line per (scheme, snr), mean CBR against mean
/// TC-PSNR at each eta. Rows with non-finite values are skipped.
pub fn render_svg(rows: &[ResultRow]) -> String {
    let mut series: BTreeMap<(String, u64), Sums> = BTreeMap::new();
    for row in rows {
        let r = &row.result;
        if !(r.cbr.is_finite() && r.tc_psnr_db.is_finite()) {
            continue;
        }
        let acc = series
            .entry((r.scheme.clone(), r.snr_db.to_bits()))
            .or_default()
            .entry(r.eta.to_bits())
            .or_insert((0.0, 0.0, 0));
        acc.0 += r.cbr;
        acc.1 += r.tc_psnr_db;
        acc.2 += 1;
    }
    let lines: Vec<(String, Vec<(f64, f64)>)> = series
        .into_iter()
        .map(|((scheme, snr), pts)| {
            let mut pts: Vec<(f64, f64)> = pts
                .into_values()
                .map(|(c, t, n)| (c / n as f64, t / n as f64))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (format!("{scheme} @ {} dB", f64::from_bits(snr)), pts)
        })
        .collect();

    let all = lines.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{W}" height="{H}" fill="white"/><path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">CBR ({x0:.4} – {x1:.4})</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">TC-PSNR dB ({y0:.2} – {y1:.2})</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (i, (label, pts)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            W - MARGIN - 140.0,
            MARGIN + 14.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
