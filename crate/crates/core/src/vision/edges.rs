use super::frame::Frame;
use crate::VisionError;

/// Default gradient threshold, intensity units.
pub const DEFAULT_EDGE_THRESHOLD: f64 = 32.0;

/// Binary image; `true` marks an edge pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|b| *b)
    }
}

/// Marks pixels whose central-difference gradient magnitude reaches
/// `threshold`. Borders are replicated.
///
/// With `gx = (I[x+1] − I[x−1]) / 2` and likewise `gy`, the test
/// `gx² + gy² ≥ t²` is evaluated exactly in integers as `dx² + dy² ≥ 4t²`
/// whenever `t` is a whole number.
pub fn detect_edges(frame: &Frame, threshold: f64) -> Result<EdgeMap, VisionError> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(VisionError::Config(format!(
            "edge threshold must be positive, got {threshold}"
        )));
    }
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let px = frame.pixels();
    let mut out = EdgeMap::new(frame.width(), frame.height());
    let t2 = if threshold.fract() == 0.0 && threshold < 1e6 {
        4 * (threshold as i64).pow(2)
    } else {
        // Smallest integer squared magnitude that reaches the threshold.
        (4.0 * threshold * threshold).ceil() as i64
    };
    for y in 0..h {
        let up = &px[y.saturating_sub(1) * w..][..w];
        let down = &px[(y + 1).min(h - 1) * w..][..w];
        let row = &px[y * w..][..w];
        let dst = &mut out.data[y * w..][..w];
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let dx = i64::from(row[right]) - i64::from(row[left]);
            let dy = i64::from(down[x]) - i64::from(up[x]);
            dst[x] = dx * dx + dy * dy >= t2;
        }
    }
    Ok(out)
}
