//! Self-contained SVG figures from a bounds table.
//!
//! Heatmaps map values linearly onto a 256-step ramp from `#440154` (low)
//! to `#fde725` (high). The gap histogram uses 20 equal bins on `[0, 1]`;
//! values outside are clamped into the end bins.

use std::fmt::Write as _;

use crate::table::BoundsTable;

pub const RAMP_STEPS: usize = 256;
pub const HIST_BINS: usize = 20;

const LOW: [f64; 3] = [68.0, 1.0, 84.0];
const HIGH: [f64; 3] = [253.0, 231.0, 37.0];

/// Ramp color for step `k` in `0..256`.
pub fn ramp(k: usize) -> String {
    let t = k.min(RAMP_STEPS - 1) as f64 / (RAMP_STEPS - 1) as f64;
    let c: Vec<u8> = LOW
        .iter()
        .zip(HIGH)
        .map(|(a, b)| (a + t * (b - a)).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn ramp_index(v: f64, lo: f64, hi: f64) -> usize {
    if !(hi > lo) || !v.is_finite() {
        return 0;
    }
    (((v - lo) / (hi - lo)) * (RAMP_STEPS - 1) as f64)
        .round()
        .clamp(0.0, (RAMP_STEPS - 1) as f64) as usize
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Heatmap of `value(row)` over the first two parameter coordinates.
pub fn heatmap_svg(table: &BoundsTable, title: &str, value: impl Fn(usize) -> f64) -> String {
    let (w, h, margin) = (480.0, 320.0, 40.0);
    let xs = sorted_unique(table.rows.iter().map(|r| r.mu[0]).collect());
    let ys = sorted_unique(table.rows.iter().map(|r| r.mu.get(1).copied().unwrap_or(0.0)).collect());
    let vals: Vec<f64> = (0..table.len()).map(&value).collect();
    let finite = vals.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let cw = w / xs.len().max(1) as f64;
    let ch = h / ys.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + 2.0 * margin,
        h + 2.0 * margin,
        w + 2.0 * margin,
        h + 2.0 * margin
    );
    let _ = writeln!(s, r#"<text x="{margin}" y="{}" font-size="14">{title}</text>"#, margin - 12.0);
    for (r, v) in table.rows.iter().zip(&vals) {
        let ix = xs.partition_point(|x| *x < r.mu[0]);
        let iy = ys.partition_point(|y| *y < r.mu.get(1).copied().unwrap_or(0.0));
        let x = margin + ix as f64 * cw;
        let y = margin + h - (iy + 1) as f64 * ch;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
            cw + 0.01,
            ch + 0.01,
            ramp(ramp_index(*v, lo, hi))
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{margin}" y="{}" font-size="11">min {lo:.4e}  max {hi:.4e}</text>"#,
        margin + h + 20.0
    );
    s.push_str("</svg>\n");
    s
}

/// Counts per bin of the gap column.
pub fn histogram(values: &[f64]) -> [usize; HIST_BINS] {
    let mut bins = [0; HIST_BINS];
    for &v in values.iter().filter(|v| !v.is_nan()) {
        let k = ((v * HIST_BINS as f64).floor().max(0.0) as usize).min(HIST_BINS - 1);
        bins[k] += 1;
    }
    bins
}

pub fn histogram_svg(values: &[f64], title: &str) -> String {
    let bins = histogram(values);
    let (w, h, margin) = (480.0, 240.0, 40.0);
    let top = *bins.iter().max().unwrap_or(&1).max(&1) as f64;
    let bw = w / HIST_BINS as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + 2.0 * margin,
        h + 2.0 * margin,
        w + 2.0 * margin,
        h + 2.0 * margin
    );
    let _ = writeln!(s, r#"<text x="{margin}" y="{}" font-size="14">{title}</text>"#, margin - 12.0);
    for (k, c) in bins.iter().enumerate() {
        let bh = h * *c as f64 / top;
        let _ = writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{bh:.3}" fill="{}" stroke="black" stroke-width="0.5"/>"#,
            margin + k as f64 * bw,
            margin + h - bh,
            bw,
            ramp(k * (RAMP_STEPS - 1) / (HIST_BINS - 1))
        );
    }
    for k in 0..=4 {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{}" font-size="11">{:.2}</text>"#,
            margin + k as f64 * w / 4.0 - 8.0,
            margin + h + 16.0,
            k as f64 / 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0), "#440154");
        assert_eq!(ramp(255), "#fde725");
    }

    #[test]
    fn constant_gap_fills_one_bin() {
        let bins = histogram(&[0.5; 37]);
        assert_eq!(bins[10], 37);
        assert_eq!(bins.iter().sum::<usize>(), 37);
    }

    #[test]
    fn out_of_range_values_clamp() {
        let bins = histogram(&[-0.1, 0.0, 1.0, 3.0]);
        assert_eq!(bins[0], 2);
        assert_eq!(bins[HIST_BINS - 1], 2);
    }
}
