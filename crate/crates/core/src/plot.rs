//! PNG charts of cumulative error and weighted error against image index.
//!
//! Each report contributes two curves in its own colour: cumulative error
//! (solid) and cumulative weighted error (dashed). Labels use a built-in
//! 3×5 pixel font so no font files are needed.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::harness::RunReport;

const WIDTH: u32 = 960;
const HEIGHT: u32 = 600;
const LEFT: i64 = 80;
const RIGHT: i64 = 40;
const TOP: i64 = 40;
const BOTTOM: i64 = 150;
const TEXT_SCALE: i64 = 2;

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([40, 40, 40]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);
const PALETTE: [Rgb<u8>; 6] = [
    Rgb([31, 119, 180]),
    Rgb([255, 127, 14]),
    Rgb([44, 160, 44]),
    Rgb([214, 39, 40]),
    Rgb([148, 103, 189]),
    Rgb([140, 86, 75]),
];

/// Draws the cumulative curves of every report into one PNG.
pub fn render_plot(reports: &[RunReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = render(reports).map_err(|message| Error::Plot {
        path: path.to_owned(),
        message,
    })?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Plot {
                path: path.to_owned(),
                message: other.to_string(),
            },
        })
}

/// Renders the chart in memory.
pub fn render(reports: &[RunReport]) -> std::result::Result<RgbImage, String> {
    if reports.is_empty() || reports.iter().all(|r| r.records().is_empty()) {
        return Err("nothing to plot".into());
    }
    let mut canvas = Canvas::new();
    let n = reports.iter().map(|r| r.records().len()).max().unwrap_or(1);
    let y_max = reports
        .iter()
        .flat_map(|r| r.cum_error.iter().chain(&r.cum_weighted_error))
        .flatten()
        .fold(1.0f64, |m, v| m.max(*v));
    let frame = Frame {
        n,
        y_max: (y_max * 4.0).ceil() / 4.0,
    };

    for step in 0..=4 {
        let v = frame.y_max * f64::from(step) / 4.0;
        let y = frame.y(v);
        canvas.line((LEFT, y), (WIDTH as i64 - RIGHT, y), GRID, None);
        let label = format!("{v:.2}");
        canvas.text(LEFT - 8 - text_width(&label), y - 5, &label, AXIS);
    }
    canvas.line((LEFT, TOP), (LEFT, frame.y(0.0)), AXIS, None);
    canvas.line(
        (LEFT, frame.y(0.0)),
        (WIDTH as i64 - RIGHT, frame.y(0.0)),
        AXIS,
        None,
    );
    for label_at in [0, n - 1] {
        let label = (label_at + 1).to_string();
        canvas.text(
            frame.x(label_at) - text_width(&label) / 2,
            frame.y(0.0) + 8,
            &label,
            AXIS,
        );
    }
    let caption = "IMAGE INDEX";
    canvas.text(
        (WIDTH as i64 - text_width(caption)) / 2,
        frame.y(0.0) + 26,
        caption,
        AXIS,
    );

    for (i, report) in reports.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        canvas.series(&frame, &report.cum_error, colour, None);
        canvas.series(&frame, &report.cum_weighted_error, colour, Some((10, 6)));

        let ly = HEIGHT as i64 - BOTTOM + 54 + i as i64 * 18;
        let label = report.codec().to_uppercase();
        canvas.phase = 0;
        canvas.line((LEFT, ly + 4), (LEFT + 30, ly + 4), colour, None);
        canvas.text(LEFT + 38, ly, &format!("{label} E"), AXIS);
        let lx = LEFT + 380;
        canvas.phase = 0;
        canvas.line((lx, ly + 4), (lx + 30, ly + 4), colour, Some((10, 6)));
        canvas.text(lx + 38, ly, &format!("{label} EW"), AXIS);
    }
    Ok(canvas.img)
}

struct Frame {
    n: usize,
    y_max: f64,
}

impl Frame {
    fn x(&self, index: usize) -> i64 {
        let span = (WIDTH as i64 - LEFT - RIGHT) as f64;
        if self.n <= 1 {
            return LEFT + span as i64 / 2;
        }
        LEFT + (span * index as f64 / (self.n - 1) as f64).round() as i64
    }

    fn y(&self, v: f64) -> i64 {
        let span = (HEIGHT as i64 - TOP - BOTTOM) as f64;
        HEIGHT as i64 - BOTTOM - (span * v / self.y_max).round() as i64
    }
}

struct Canvas {
    img: RgbImage,
    /// Dash position, carried across the segments of one polyline.
    phase: u32,
}

impl Canvas {
    fn new() -> Self {
        Self {
            img: RgbImage::from_pixel(WIDTH, HEIGHT, BACKGROUND),
            phase: 0,
        }
    }

    fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if (0..WIDTH as i64).contains(&x) && (0..HEIGHT as i64).contains(&y) {
            self.img.put_pixel(x as u32, y as u32, c);
        }
    }

    /// Bresenham line, two pixels thick; `dash` is `(on, off)` in pixels.
    fn line(&mut self, from: (i64, i64), to: (i64, i64), c: Rgb<u8>, dash: Option<(u32, u32)>) {
        let (mut x, mut y) = from;
        let dx = (to.0 - x).abs();
        let dy = -(to.1 - y).abs();
        let sx = if x < to.0 { 1 } else { -1 };
        let sy = if y < to.1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            let on = dash.is_none_or(|(a, b)| self.phase % (a + b) < a);
            if on {
                self.put(x, y, c);
                self.put(x + 1, y, c);
                self.put(x, y + 1, c);
            }
            if (x, y) == to {
                break;
            }
            self.phase = self.phase.wrapping_add(1);
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn series(
        &mut self,
        frame: &Frame,
        values: &[Option<f64>],
        c: Rgb<u8>,
        dash: Option<(u32, u32)>,
    ) {
        let mut prev: Option<(i64, i64)> = None;
        self.phase = 0;
        for (i, v) in values.iter().enumerate() {
            let Some(v) = v else {
                prev = None;
                continue;
            };
            let p = (frame.x(i), frame.y(*v));
            match prev {
                Some(q) => self.line(q, p, c, dash),
                None => self.line(p, p, c, None),
            }
            prev = Some(p);
        }
    }

    fn text(&mut self, x: i64, y: i64, s: &str, c: Rgb<u8>) {
        for (i, ch) in s.chars().enumerate() {
            let bits = glyph(ch);
            let ox = x + i as i64 * 4 * TEXT_SCALE;
            for row in 0..5 {
                for col in 0..3 {
                    if bits >> (14 - (row * 3 + col)) & 1 == 1 {
                        for dy in 0..TEXT_SCALE {
                            for dx in 0..TEXT_SCALE {
                                self.put(ox + col * TEXT_SCALE + dx, y + row * TEXT_SCALE + dy, c);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn text_width(s: &str) -> i64 {
    (s.chars().count() as i64 * 4 - 1) * TEXT_SCALE
}

/// 3×5 glyph, rows top to bottom, 3 bits per row.
fn glyph(c: char) -> u16 {
    const fn g(rows: [u16; 5]) -> u16 {
        rows[0] << 12 | rows[1] << 9 | rows[2] << 6 | rows[3] << 3 | rows[4]
    }
    match c.to_ascii_uppercase() {
        '0' => g([0b111, 0b101, 0b101, 0b101, 0b111]),
        '1' => g([0b010, 0b110, 0b010, 0b010, 0b111]),
        '2' => g([0b111, 0b001, 0b111, 0b100, 0b111]),
        '3' => g([0b111, 0b001, 0b111, 0b001, 0b111]),
        '4' => g([0b101, 0b101, 0b111, 0b001, 0b001]),
        '5' => g([0b111, 0b100, 0b111, 0b001, 0b111]),
        '6' => g([0b111, 0b100, 0b111, 0b101, 0b111]),
        '7' => g([0b111, 0b001, 0b001, 0b001, 0b001]),
        '8' => g([0b111, 0b101, 0b111, 0b101, 0b111]),
        '9' => g([0b111, 0b101, 0b111, 0b001, 0b111]),
        '.' => g([0, 0, 0, 0, 0b010]),
        '-' => g([0, 0, 0b111, 0, 0]),
        '_' => g([0, 0, 0, 0, 0b111]),
        ':' => g([0, 0b010, 0, 0b010, 0]),
        '/' => g([0b001, 0b001, 0b010, 0b100, 0b100]),
        '(' => g([0b010, 0b100, 0b100, 0b100, 0b010]),
        ')' => g([0b010, 0b001, 0b001, 0b001, 0b010]),
        'A' => g([0b010, 0b101, 0b111, 0b101, 0b101]),
        'B' => g([0b110, 0b101, 0b110, 0b101, 0b110]),
        'C' => g([0b011, 0b100, 0b100, 0b100, 0b011]),
        'D' => g([0b110, 0b101, 0b101, 0b101, 0b110]),
        'E' => g([0b111, 0b100, 0b110, 0b100, 0b111]),
        'F' => g([0b111, 0b100, 0b110, 0b100, 0b100]),
        'G' => g([0b011, 0b100, 0b101, 0b101, 0b011]),
        'H' => g([0b101, 0b101, 0b111, 0b101, 0b101]),
        'I' => g([0b111, 0b010, 0b010, 0b010, 0b111]),
        'J' => g([0b001, 0b001, 0b001, 0b101, 0b010]),
        'K' => g([0b101, 0b101, 0b110, 0b101, 0b101]),
        'L' => g([0b100, 0b100, 0b100, 0b100, 0b111]),
        'M' => g([0b101, 0b111, 0b111, 0b101, 0b101]),
        'N' => g([0b110, 0b101, 0b101, 0b101, 0b101]),
        'O' => g([0b010, 0b101, 0b101, 0b101, 0b010]),
        'P' => g([0b110, 0b101, 0b110, 0b100, 0b100]),
        'Q' => g([0b010, 0b101, 0b101, 0b110, 0b011]),
        'R' => g([0b110, 0b101, 0b110, 0b101, 0b101]),
        'S' => g([0b011, 0b100, 0b010, 0b001, 0b110]),
        'T' => g([0b111, 0b010, 0b010, 0b010, 0b010]),
        'U' => g([0b101, 0b101, 0b101, 0b101, 0b111]),
        'V' => g([0b101, 0b101, 0b101, 0b101, 0b010]),
        'W' => g([0b101, 0b101, 0b111, 0b111, 0b101]),
        'X' => g([0b101, 0b101, 0b010, 0b101, 0b101]),
        'Y' => g([0b101, 0b101, 0b010, 0b010, 0b010]),
        'Z' => g([0b111, 0b001, 0b010, 0b100, 0b111]),
        _ => 0,
    }
}
