use serde::{Deserialize, Serialize};

use super::deformation::{ground_truth_deformation, STROKE_MM};
use super::frame::{Frame, Rect, SceneMeta};
use crate::VisionError;

/// Layout and intensity levels of the synthetic top view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneGeometry {
    pub width: u32,
    pub height: u32,
    pub background_level: u8,
    pub tissue_level: u8,
    pub knife_level: u8,
    pub tissue: Rect,
    pub knife_width: u32,
    /// Column the knife and notch are centred on.
    pub knife_center_x: u32,
    /// Image rows per millimetre of knife travel.
    pub px_per_mm: f64,
    /// Knife position at which the blade reaches the tissue edge, mm.
    pub contact_mm: f64,
    /// Silhouette pixels removed at 100% deformation.
    pub max_notch_area: u64,
}

impl Default for SceneGeometry {
    fn default() -> Self {
        Self {
            width: 640,
            height: 640,
            background_level: 20,
            tissue_level: 230,
            knife_level: 100,
            tissue: Rect {
                x: 170,
                y: 200,
                w: 300,
                h: 300,
            },
            knife_width: 10,
            knife_center_x: 320,
            px_per_mm: 9.0,
            contact_mm: 12.0,
            max_notch_area: 45_000,
        }
    }
}

/// Notch carved into the top edge of the tissue: `rows` full rows of `width`
/// columns plus one partial column of `remainder` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Notch {
    pub x: u32,
    pub rows: u32,
    pub width: u32,
    pub remainder: u32,
}

impl Notch {
    pub fn area(&self) -> u64 {
        u64::from(self.rows) * u64::from(self.width) + u64::from(self.remainder)
    }
}

impl SceneGeometry {
    pub fn validate(&self) -> Result<(), VisionError> {
        let t = &self.tissue;
        if t.w == 0 || t.h == 0 {
            return Err(VisionError::Config("tissue has zero area".into()));
        }
        if self.width == 0 || self.height == 0 || t.right() > self.width || t.bottom() > self.height {
            return Err(VisionError::Config(format!(
                "tissue {t:?} does not fit a {}x{} frame",
                self.width, self.height
            )));
        }
        let levels = [self.background_level, self.tissue_level, self.knife_level];
        if levels[0] == levels[1] || levels[0] == levels[2] || levels[1] == levels[2] {
            return Err(VisionError::Config("intensity levels must be distinct".into()));
        }
        if !(self.px_per_mm > 0.0) || !(0.0..STROKE_MM).contains(&self.contact_mm) {
            return Err(VisionError::Config("bad knife scale or contact position".into()));
        }
        if self.max_notch_area == 0 || self.max_notch_area >= t.area() {
            return Err(VisionError::Config("notch must be smaller than the tissue".into()));
        }
        // The deepest, widest notch must stay inside the tissue with a margin
        // so the silhouette remains one piece.
        let deepest = self.notch_at(STROKE_MM)?;
        if deepest.rows + 2 > t.h || deepest.x < t.x + 2 || deepest.x + deepest.width + 3 > t.right() {
            return Err(VisionError::Config(format!(
                "full-deformation notch {deepest:?} does not fit inside the tissue"
            )));
        }
        if self.knife_width == 0 || self.knife_center_x < self.knife_width / 2 {
            return Err(VisionError::Config("bad knife width".into()));
        }
        Ok(())
    }

    /// Pixels removed at `position_mm`: `round(deformation% · max_notch_area)`.
    pub fn notch_area(&self, position_mm: f64) -> Result<u64, VisionError> {
        let pct = ground_truth_deformation(position_mm)?;
        Ok((pct / 100.0 * self.max_notch_area as f64).round() as u64)
    }

    pub fn notch_at(&self, position_mm: f64) -> Result<Notch, VisionError> {
        let area = self.notch_area(position_mm)?;
        if area == 0 {
            return Ok(Notch {
                x: self.knife_center_x,
                rows: 0,
                width: 0,
                remainder: 0,
            });
        }
        let depth = ((position_mm - self.contact_mm) * self.px_per_mm).round();
        let rows = (depth.max(1.0) as u32).min(self.tissue.h);
        let width = (area / u64::from(rows)) as u32;
        let remainder = (area % u64::from(rows)) as u32;
        Ok(Notch {
            x: self.knife_center_x.saturating_sub(width / 2),
            rows,
            width,
            remainder,
        })
    }

    /// Row just past the knife tip (the knife covers rows `0..tip`).
    pub fn knife_tip_row(&self, position_mm: f64) -> u32 {
        let tip = f64::from(self.tissue.y) + (position_mm - self.contact_mm) * self.px_per_mm;
        tip.round().clamp(0.0, f64::from(self.height)) as u32
    }

    /// Silhouette area of the undeformed tissue.
    pub fn undeformed_area(&self) -> u64 {
        self.tissue.area()
    }
}

/// Draws the top view with the knife at `position_mm`.
///
/// Background first, then the knife, then the tissue minus the notch, so the
/// knife shows only where it is outside the silhouette or inside the notch.
pub fn render_frame(position_mm: f64, geometry: &SceneGeometry) -> Result<Frame, VisionError> {
    geometry.validate()?;
    let g = geometry;
    let notch = g.notch_at(position_mm)?;
    let mut frame = Frame::filled(g.width, g.height, g.background_level)?;

    let knife = Rect {
        x: g.knife_center_x - g.knife_width / 2,
        y: 0,
        w: g.knife_width,
        h: g.knife_tip_row(position_mm),
    };
    frame.fill_rect(knife, g.knife_level);

    let t = g.tissue;
    for y in t.y..t.bottom() {
        let depth = y - t.y;
        for x in t.x..t.right() {
            let in_rows = depth < notch.rows && x >= notch.x && x < notch.x + notch.width;
            let in_partial = depth < notch.remainder && x == notch.x + notch.width;
            if !(in_rows || in_partial) {
                frame.set(x, y, g.tissue_level);
            }
        }
    }
    frame.meta = Some(SceneMeta {
        knife_mm: position_mm,
        tissue_pixels: g.undeformed_area() - notch.area(),
        notch_pixels: notch.area(),
        roi: t,
    });
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undeformed_at_zero() {
        let g = SceneGeometry::default();
        let f = render_frame(0.0, &g).unwrap();
        assert_eq!(f.count_level(g.tissue_level), g.undeformed_area());
        assert_eq!(f.meta.unwrap().tissue_pixels, 90_000);
    }

    #[test]
    fn full_notch_at_stroke_end() {
        let g = SceneGeometry::default();
        let f = render_frame(35.0, &g).unwrap();
        assert_eq!(f.count_level(g.tissue_level), 90_000 - 45_000);
    }

    #[test]
    fn minor_boundary_reduction() {
        let g = SceneGeometry::default();
        let f = render_frame(21.7, &g).unwrap();
        let removed = g.undeformed_area() - f.count_level(g.tissue_level);
        assert!((removed as f64 - 0.33 * 45_000.0).abs() <= 1.0, "{removed}");
    }

    #[test]
    fn knife_visible_and_levels_distinct() {
        let g = SceneGeometry::default();
        let f = render_frame(25.0, &g).unwrap();
        assert!(f.count_level(g.knife_level) > 0);
        assert_eq!(
            f.count_level(g.knife_level) + f.count_level(g.tissue_level) + f.count_level(g.background_level),
            640 * 640
        );
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let g = SceneGeometry {
            tissue: Rect { x: 10, y: 10, w: 0, h: 10 },
            ..SceneGeometry::default()
        };
        assert!(matches!(render_frame(5.0, &g), Err(VisionError::Config(_))));
        assert!(render_frame(36.0, &SceneGeometry::default()).is_err());
    }

    #[test]
    fn silhouette_strictly_shrinks_past_contact() {
        let g = SceneGeometry::default();
        let mut last = u64::MAX;
        for i in 0..=400 {
            let p = 12.0 + 23.0 * f64::from(i) / 400.0;
            let a = g.undeformed_area() - g.notch_area(p).unwrap();
            if i > 0 {
                assert!(a < last, "{p}");
            }
            last = a;
        }
    }
}
