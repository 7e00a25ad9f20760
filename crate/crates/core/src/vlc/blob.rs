//! Highlighted-pixel buffers and 4-connected blob extraction.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{PixelPoint, PixelRect};

/// One emitter as rendered into the frame: pre-thresholded, so every pixel
/// of the disc is highlighted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuminanceBlob {
    pub centroid: PixelPoint,
    pub area_px: f64,
    pub on: bool,
    /// Actor index for a beacon, `None` for a false highlight.
    #[serde(skip)]
    pub source: Option<usize>,
}

/// Binary highlight mask over a pixel rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceField {
    pub rect: PixelRect,
    lit: Vec<bool>,
    /// Indices of lit pixels, in insertion order.
    on: Vec<usize>,
}

impl LuminanceField {
    pub fn new(rect: PixelRect) -> Self {
        let n = (rect.width() as usize) * (rect.height() as usize);
        LuminanceField { rect, lit: vec![false; n], on: Vec::new() }
    }

    fn index(&self, x: i32, y: i32) -> Option<usize> {
        self.rect
            .contains(x, y)
            .then(|| ((y - self.rect.y0) * self.rect.width() + (x - self.rect.x0)) as usize)
    }

    pub fn set(&mut self, x: i32, y: i32) {
        if let Some(i) = self.index(x, y) {
            if !self.lit[i] {
                self.lit[i] = true;
                self.on.push(i);
            }
        }
    }

    pub fn is_lit(&self, x: i32, y: i32) -> bool {
        self.index(x, y).is_some_and(|i| self.lit[i])
    }

    pub fn lit_count(&self) -> usize {
        self.on.len()
    }

    /// Rasterize every ON emitter that overlaps `rect`.
    pub fn render(rect: PixelRect, emitters: &[LuminanceBlob]) -> Self {
        let mut field = LuminanceField::new(rect);
        if rect.is_empty() {
            return field;
        }
        for e in emitters.iter().filter(|e| e.on) {
            let reach = (e.area_px / std::f64::consts::PI).sqrt() + 2.0;
            let c = e.centroid;
            if c.x + reach < rect.x0 as f64
                || c.x - reach > rect.x1 as f64
                || c.y + reach < rect.y0 as f64
                || c.y - reach > rect.y1 as f64
            {
                continue;
            }
            for (x, y) in rasterize_blob(c, e.area_px) {
                field.set(x, y);
            }
        }
        field
    }
}

/// Exactly `round(area)` pixels (at least one) whose centers lie nearest
/// `centroid`: a digital disc, hence 4-connected. Ties are broken by row,
/// then column.
pub fn rasterize_blob(centroid: PixelPoint, area_px: f64) -> Vec<(i32, i32)> {
    let n = (area_px.round() as usize).max(1);
    let reach = ((n as f64) / std::f64::consts::PI).sqrt().ceil() as i32 + 2;
    let (cx, cy) = (centroid.x.floor() as i32, centroid.y.floor() as i32);
    let mut candidates = Vec::with_capacity(((2 * reach + 1) * (2 * reach + 1)) as usize);
    for y in cy - reach..=cy + reach {
        for x in cx - reach..=cx + reach {
            let dx = x as f64 + 0.5 - centroid.x;
            let dy = y as f64 + 0.5 - centroid.y;
            candidates.push((dx * dx + dy * dy, y, x));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    candidates.into_iter().take(n).map(|(_, y, x)| (x, y)).collect()
}

/// A connected group of highlighted pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Blob {
    /// Mean of the member pixel centers.
    pub centroid: PixelPoint,
    /// Pixel count.
    pub area: f64,
}

/// Breadth-first flood fill over 4-neighbours. Blobs are reported in
/// row-major order of their first pixel.
pub fn detect_blobs(field: &LuminanceField) -> Vec<Blob> {
    let r = field.rect;
    let (w, h) = (r.width() as usize, r.height() as usize);
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut blobs = Vec::new();
    let mut starts = field.on.clone();
    starts.sort_unstable();

    for start in starts {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let (mut sx, mut sy, mut count) = (0.0, 0.0, 0usize);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            sx += x as f64 + 0.5;
            sy += y as f64 + 0.5;
            count += 1;
            let mut visit = |j: usize| {
                if !seen[j] && field.lit[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        let n = count as f64;
        blobs.push(Blob {
            centroid: PixelPoint::new(r.x0 as f64 + sx / n, r.y0 as f64 + sy / n),
            area: n,
        });
    }
    blobs
}
