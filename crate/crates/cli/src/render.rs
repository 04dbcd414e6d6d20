//! PNG rendering of fitness grids and histograms.

use std::collections::BTreeMap;

use image::{Rgb, RgbImage};

const EMPTY: Rgb<u8> = Rgb([235, 235, 235]);
const INK: Rgb<u8> = Rgb([40, 40, 40]);

/// Dark blue through teal and green to yellow.
const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// `t` in `[0, 1]`.
pub fn colour(t: f64) -> Rgb<u8> {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let mix = |k: usize| (RAMP[i][k] + f * (RAMP[i + 1][k] - RAMP[i][k])).round() as u8;
    Rgb([mix(0), mix(1), mix(2)])
}

/// Row-major `size x size` grid drawn with the first descriptor growing
/// upwards; fitness is scaled to the 0..220 course length.
pub fn fitness_grid(cells: &[Option<f64>], size: usize, px: u32) -> RgbImage {
    let side = size as u32 * px;
    let mut img = RgbImage::from_pixel(side, side, EMPTY);
    for (i, c) in cells.iter().enumerate() {
        let Some(f) = c else { continue };
        let (row, col) = ((i / size) as u32, (i % size) as u32);
        let y0 = side - (row + 1) * px;
        let rgb = colour(f / envmap_core::terrain::COURSE_LENGTH);
        for y in y0..y0 + px {
            for x in col * px..(col + 1) * px {
                img.put_pixel(x, y, rgb);
            }
        }
    }
    img
}

/// One bar per bin, with a pixel gap between bars.
pub fn histogram(h: &BTreeMap<i32, usize>) -> RgbImage {
    let (w, height, bar) = (1u32.max(h.len() as u32) * 12 + 8, 160u32, 10u32);
    let mut img = RgbImage::from_pixel(w, height, Rgb([255, 255, 255]));
    let max = h.values().copied().max().unwrap_or(0).max(1) as f64;
    for (i, (&k, &n)) in h.iter().enumerate() {
        let top = height - 4 - ((height - 8) as f64 * n as f64 / max).round() as u32;
        let x0 = 4 + i as u32 * 12;
        let rgb = if k < 0 { colour(0.25) } else { colour(0.6) };
        for y in top..height - 4 {
            for x in x0..x0 + bar {
                img.put_pixel(x, y, rgb);
            }
        }
    }
    img
}

/// Polyline of a series scaled to `[0, max]`.
pub fn line_chart(values: &[f64]) -> RgbImage {
    let (w, h) = (400u32, 160u32);
    let mut img = RgbImage::from_pixel(w, h, Rgb([255, 255, 255]));
    let max = values.iter().copied().fold(0.0, f64::max);
    if values.is_empty() || max <= 0.0 {
        return img;
    }
    let point = |i: usize, v: f64| {
        let x = if values.len() == 1 { 0.0 } else { i as f64 / (values.len() - 1) as f64 };
        ((x * (w - 1) as f64).round() as i64, ((1.0 - v / max) * (h - 1) as f64).round() as i64)
    };
    for i in 0..values.len() {
        let (x1, y1) = point(i, values[i]);
        let (x0, y0) = if i == 0 { (x1, y1) } else { point(i - 1, values[i - 1]) };
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
        for s in 0..=steps {
            let x = x0 + (x1 - x0) * s / steps;
            let y = y0 + (y1 - y0) * s / steps;
            img.put_pixel(x as u32, y as u32, INK);
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_ends() {
        assert_eq!(colour(0.0), Rgb([68, 1, 84]));
        assert_eq!(colour(1.0), Rgb([253, 231, 37]));
        assert_eq!(colour(f64::NAN), colour(0.0));
    }

    #[test]
    fn grid_layout() {
        let mut cells = vec![None; 4];
        cells[2] = Some(220.0); // row 1, col 0: top left once flipped
        let img = fitness_grid(&cells, 2, 3);
        assert_eq!(img.dimensions(), (6, 6));
        assert_eq!(*img.get_pixel(0, 0), colour(1.0));
        assert_eq!(*img.get_pixel(0, 5), EMPTY);
    }

    #[test]
    fn empty_inputs_render() {
        assert_eq!(histogram(&BTreeMap::new()).width(), 20);
        assert_eq!(line_chart(&[]).dimensions(), (400, 160));
        line_chart(&[0.5]);
    }
}
