//! Raster output: the partition figure and saliency debug images.

use std::path::Path;

use codecstream::plot::PlotData;
use codecstream::saliency::PixelMap;
use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::error::{CliError, CliResult};

const BLUE: Rgb<u8> = Rgb([31, 119, 180]);
const ORANGE: Rgb<u8> = Rgb([255, 127, 14]);
const RED: Rgb<u8> = Rgb([214, 39, 40]);
const GREEN: Rgb<u8> = Rgb([44, 160, 44]);
const AXIS: Rgb<u8> = Rgb([80, 80, 80]);

const WIDTH: u32 = 1200;
const PANEL_H: u32 = 300;
const MARGIN: u32 = 40;

struct Panel {
    top: u32,
    max: f64,
}

impl Panel {
    fn y(&self, v: f64) -> u32 {
        let frac = if self.max > 0.0 { (v / self.max).clamp(0.0, 1.0) } else { 0.0 };
        self.top + PANEL_H - (frac * f64::from(PANEL_H - 1)).round() as u32 - 1
    }

    fn bottom(&self) -> u32 {
        self.top + PANEL_H - 1
    }
}

fn x_of(bin: f64, bins: usize) -> u32 {
    let span = f64::from(WIDTH - 2 * MARGIN);
    MARGIN + (bin / bins.max(1) as f64 * span).round().min(span - 1.0) as u32
}

fn vline(img: &mut RgbImage, x: u32, y0: u32, y1: u32, c: Rgb<u8>) {
    for y in y0.min(y1)..=y0.max(y1) {
        img.put_pixel(x, y, c);
    }
}

fn hline(img: &mut RgbImage, y: u32, x0: u32, x1: u32, c: Rgb<u8>) {
    for x in x0.min(x1)..=x0.max(x1) {
        img.put_pixel(x, y, c);
    }
}

fn segment(img: &mut RgbImage, (x0, y0): (u32, u32), (x1, y1): (u32, u32), c: Rgb<u8>) {
    let steps = x0.abs_diff(x1).max(y0.abs_diff(y1)).max(1);
    for s in 0..=steps {
        let t = f64::from(s) / f64::from(steps);
        let x = f64::from(x0) + (f64::from(x1) - f64::from(x0)) * t;
        let y = f64::from(y0) + (f64::from(y1) - f64::from(y0)) * t;
        img.put_pixel(x.round() as u32, y.round() as u32, c);
    }
}

/// Bit-cost bars on top; per-group cumulative energy, the quota line and
/// group boundaries below.
pub fn plot_image(d: &PlotData) -> RgbImage {
    let height = 2 * PANEL_H + 3 * MARGIN;
    let mut img = RgbImage::from_pixel(WIDTH, height, Rgb([255, 255, 255]));
    let n = d.bins.len();
    let top = Panel {
        top: MARGIN,
        max: d.bins.iter().copied().max().unwrap_or(0) as f64,
    };
    let cum_max = d.cumulative.iter().copied().max().unwrap_or(0) as f64;
    let bottom = Panel {
        top: 2 * MARGIN + PANEL_H,
        max: cum_max.max(d.quota) * 1.05,
    };

    for (b, &e) in d.bins.iter().enumerate() {
        let (x0, x1) = (x_of(b as f64, n), x_of(b as f64 + 1.0, n).saturating_sub(1));
        let y = top.y(e as f64);
        for x in x0..=x1.max(x0) {
            vline(&mut img, x, y, top.bottom(), BLUE);
        }
    }

    let mut prev: Option<(u32, u32)> = None;
    let mut group = 0;
    for (b, &c) in d.cumulative.iter().enumerate() {
        let p = (x_of(b as f64 + 0.5, n), bottom.y(c as f64));
        let restart = d.groups.get(group).is_some_and(|g| g.s == b);
        if restart {
            group += 1;
        }
        match prev {
            Some(q) if !restart => segment(&mut img, q, p, ORANGE),
            _ => img.put_pixel(p.0, p.1, ORANGE),
        }
        prev = Some(p);
    }
    hline(&mut img, bottom.y(d.quota), MARGIN, WIDTH - MARGIN - 1, RED);

    for &c in &d.boundaries {
        let x = x_of(c as f64 + 1.0, n).min(WIDTH - MARGIN - 1);
        vline(&mut img, x, top.top, top.bottom(), GREEN);
        vline(&mut img, x, bottom.top, bottom.bottom(), GREEN);
    }
    for p in [&top, &bottom] {
        hline(&mut img, p.bottom(), MARGIN, WIDTH - MARGIN - 1, AXIS);
        vline(&mut img, MARGIN, p.top, p.bottom(), AXIS);
    }
    img
}

/// Grayscale view of a map, `value * scale` clamped to 0..=255.
pub fn gray_image(map: &PixelMap, scale: f64) -> GrayImage {
    GrayImage::from_fn(map.width, map.height, |x, y| {
        Luma([(map.get(x, y) * scale).round().clamp(0.0, 255.0) as u8])
    })
}

pub fn save_png<P, C>(img: &image::ImageBuffer<P, C>, path: &Path) -> CliResult<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}
