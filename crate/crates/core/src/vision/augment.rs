use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::frame::{Frame, Rect};
use crate::VisionError;

/// Image augmentation recipe.
///
/// Geometric steps run first (flip, rotate, crop), then photometric ones
/// (contrast, brightness, noise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    pub flip_lr_prob: f64,
    /// Contrast gain drawn from `[1 − j, 1 + j]`.
    pub color_jitter: f64,
    /// Largest fraction of each dimension a crop may remove.
    pub random_crop: f64,
    /// Rotation drawn from `[−r, r]` degrees.
    pub rotation_deg: f64,
    /// Intensity offset drawn from `[−b, b]`.
    pub brightness_shift: f64,
    /// Gaussian pixel noise, intensity units.
    pub noise_sigma: f64,
    /// Augmented variants produced per source frame.
    pub variants_per_frame: u32,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            flip_lr_prob: 0.5,
            color_jitter: 0.25,
            random_crop: 0.3,
            rotation_deg: 10.0,
            brightness_shift: 24.0,
            noise_sigma: 3.0,
            variants_per_frame: 2,
            seed: 0,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<(), VisionError> {
        for (name, v) in [
            ("flip_lr_prob", self.flip_lr_prob),
            ("color_jitter", self.color_jitter),
            ("random_crop", self.random_crop),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(VisionError::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.random_crop >= 1.0 {
            return Err(VisionError::Config("random_crop must be below 1".into()));
        }
        for (name, v) in [
            ("rotation_deg", self.rotation_deg),
            ("brightness_shift", self.brightness_shift),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(VisionError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Independent, reproducible stream for the frame at `index`.
    pub fn rng_for(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Mirror about the vertical centre line.
pub fn flip_lr(frame: &Frame) -> Frame {
    let (w, h) = (frame.width(), frame.height());
    let mut out = frame.clone();
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, frame.get(w - 1 - x, y));
        }
    }
    if let Some(meta) = out.meta.as_mut() {
        meta.roi.x = w - meta.roi.right();
    }
    out
}

/// Rotation about the frame centre, nearest-neighbour, uncovered pixels set
/// to `fill`. Multiples of 90° are exact index permutations.
pub fn rotate(frame: &Frame, degrees: f64, fill: u8) -> Frame {
    let quarter = degrees / 90.0;
    if quarter.fract() == 0.0 {
        return rotate_quarters(frame, quarter.rem_euclid(4.0) as u32);
    }
    let (w, h) = (frame.width(), frame.height());
    let (cx, cy) = ((f64::from(w) - 1.0) / 2.0, (f64::from(h) - 1.0) / 2.0);
    let (s, c) = degrees.to_radians().sin_cos();
    let mut out = Frame::filled(w, h, fill).expect("non-empty frame");
    let (wu, hu) = (w as usize, h as usize);
    let src = frame.pixels();
    let dst = out.pixels_mut();
    for y in 0..hu {
        let dy = y as f64 - cy;
        // Inverse map: source = R(−θ) · destination, stepped along the row.
        let mut sx = c * (-cx) + s * dy + cx;
        let mut sy = -s * (-cx) + c * dy + cy;
        for d in &mut dst[y * wu..(y + 1) * wu] {
            let (ix, iy) = (round_half_up(sx), round_half_up(sy));
            if ix >= 0 && iy >= 0 && (ix as usize) < wu && (iy as usize) < hu {
                *d = src[iy as usize * wu + ix as usize];
            }
            sx += c;
            sy -= s;
        }
    }
    out.meta = frame.meta.clone().map(|mut m| {
        m.roi = rotated_bbox(m.roi, degrees, w, h);
        m
    });
    out
}

fn rotate_quarters(frame: &Frame, turns: u32) -> Frame {
    let mut cur = frame.clone();
    for _ in 0..turns {
        let (w, h) = (cur.width(), cur.height());
        let mut next = Frame::filled(h, w, 0).expect("non-empty frame");
        for y in 0..h {
            for x in 0..w {
                // Clockwise quarter turn in image coordinates.
                next.set(h - 1 - y, x, cur.get(x, y));
            }
        }
        next.meta = cur.meta.clone().map(|mut m| {
            let r = m.roi;
            m.roi = Rect {
                x: h - r.bottom(),
                y: r.x,
                w: r.h,
                h: r.w,
            };
            m
        });
        cur = next;
    }
    cur
}

fn rotated_bbox(r: Rect, degrees: f64, w: u32, h: u32) -> Rect {
    let (cx, cy) = ((f64::from(w) - 1.0) / 2.0, (f64::from(h) - 1.0) / 2.0);
    let (s, c) = degrees.to_radians().sin_cos();
    let corners = [
        (f64::from(r.x), f64::from(r.y)),
        (f64::from(r.right()), f64::from(r.y)),
        (f64::from(r.x), f64::from(r.bottom())),
        (f64::from(r.right()), f64::from(r.bottom())),
    ];
    let pts: Vec<(f64, f64)> = corners
        .iter()
        .map(|(x, y)| {
            let (dx, dy) = (x - cx, y - cy);
            (c * dx - s * dy + cx, s * dx + c * dy + cy)
        })
        .collect();
    let x0 = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let y0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor() - 1.0;
    let x1 = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    let y1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
    let x0 = x0.clamp(0.0, f64::from(w)) as u32;
    let y0 = y0.clamp(0.0, f64::from(h)) as u32;
    let x1 = x1.clamp(0.0, f64::from(w)) as u32;
    let y1 = y1.clamp(0.0, f64::from(h)) as u32;
    Rect {
        x: x0,
        y: y0,
        w: x1 - x0,
        h: y1 - y0,
    }
}

/// `floor(v + 0.5)` without a libm call; valid well beyond pixel ranges.
#[inline]
fn round_half_up(v: f64) -> i64 {
    (v + 0.5 + 65_536.0) as i64 - 65_536
}

/// Sub-image `r`.
pub fn crop(frame: &Frame, r: Rect) -> Result<Frame, VisionError> {
    if r.w == 0 || r.h == 0 || r.right() > frame.width() || r.bottom() > frame.height() {
        return Err(VisionError::Config(format!("crop {r:?} outside the frame")));
    }
    let mut out = Frame::filled(r.w, r.h, 0)?;
    for y in 0..r.h {
        for x in 0..r.w {
            out.set(x, y, frame.get(r.x + x, r.y + y));
        }
    }
    out.meta = frame.meta.clone().map(|mut m| {
        let roi = m.roi;
        let x0 = roi.x.max(r.x) - r.x;
        let y0 = roi.y.max(r.y) - r.y;
        let x1 = roi.right().min(r.right()).max(r.x) - r.x;
        let y1 = roi.bottom().min(r.bottom()).max(r.y) - r.y;
        m.roi = Rect {
            x: x0,
            y: y0,
            w: x1.saturating_sub(x0),
            h: y1.saturating_sub(y0),
        };
        m
    });
    Ok(out)
}

/// `(v − 128)·gain + 128 + shift + noise`, rounded half up and clamped to 0..=255.
pub fn photometric(frame: &Frame, gain: f64, shift: f64, noise_sigma: f64, rng: &mut impl Rng) -> Frame {
    let mut out = frame.clone();
    let normal = (noise_sigma > 0.0).then(|| Normal::new(0.0, noise_sigma).expect("sigma >= 0"));
    for p in out.pixels_mut() {
        let n = normal.as_ref().map_or(0.0, |d| d.sample(rng));
        let v = (f64::from(*p) - 128.0) * gain + 128.0 + shift + n;
        *p = round_half_up(v).clamp(0, 255) as u8;
    }
    out
}

/// One augmented variant. `fill` is the intensity used for pixels uncovered
/// by rotation.
pub fn augment(frame: &Frame, cfg: &AugmentationConfig, fill: u8, rng: &mut impl Rng) -> Frame {
    let mut f = if rng.random::<f64>() < cfg.flip_lr_prob {
        flip_lr(frame)
    } else {
        frame.clone()
    };
    if cfg.rotation_deg > 0.0 {
        let deg = rng.random_range(-cfg.rotation_deg..=cfg.rotation_deg);
        f = rotate(&f, deg, fill);
    }
    if cfg.random_crop > 0.0 {
        if let Some(r) = crop_window(&f, cfg.random_crop, rng) {
            f = crop(&f, r).expect("window inside frame");
        }
    }
    let gain = if cfg.color_jitter > 0.0 {
        rng.random_range(1.0 - cfg.color_jitter..=1.0 + cfg.color_jitter)
    } else {
        1.0
    };
    let shift = if cfg.brightness_shift > 0.0 {
        rng.random_range(-cfg.brightness_shift..=cfg.brightness_shift)
    } else {
        0.0
    };
    photometric(&f, gain, shift, cfg.noise_sigma, rng)
}

/// A random window that keeps the region of interest, or `None` when the
/// frame carries no metadata.
fn crop_window(frame: &Frame, max_trim: f64, rng: &mut impl Rng) -> Option<Rect> {
    let roi = frame.meta.as_ref()?.roi;
    let pick = |size: u32, lo: u32, hi: u32, rng: &mut dyn rand::RngCore| -> (u32, u32) {
        // Keep a two-pixel border around the ROI so its outline survives.
        let lo = lo.saturating_sub(2);
        let hi = (hi + 2).min(size);
        let min_len = ((f64::from(size) * (1.0 - max_trim)).ceil() as u32).max(hi - lo);
        let len = rng.random_range(min_len..=size);
        let start_lo = hi.saturating_sub(len);
        let start_hi = lo.min(size - len);
        let start = rng.random_range(start_lo..=start_hi.max(start_lo));
        (start, len)
    };
    let (x, w) = pick(frame.width(), roi.x, roi.right(), rng);
    let (y, h) = pick(frame.height(), roi.y, roi.bottom(), rng);
    Some(Rect { x, y, w, h })
}
