//! Axis-aligned boxes with real-valued corners, and intersection over union.

use thiserror::Error;

/// Error building a box from raw corner coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum InvalidBox {
    #[error("box corner is not finite: [{0}, {1}, {2}, {3}]")]
    NonFinite(f64, f64, f64, f64),
    #[error("box corners are out of order: [{0}, {1}, {2}, {3}]")]
    Reversed(f64, f64, f64, f64),
}

/// Axis-aligned bounding box with corners `(x1, y1)` and `(x2, y2)`.
///
/// Coordinates are continuous values, not pixel indices. `x1 <= x2` and
/// `y1 <= y2` hold for every constructed box; zero-width and zero-height
/// boxes are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, InvalidBox> {
        if !(x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite()) {
            return Err(InvalidBox::NonFinite(x1, y1, x2, y2));
        }
        if x1 > x2 || y1 > y2 {
            return Err(InvalidBox::Reversed(x1, y1, x2, y2));
        }
        Ok(BBox { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let h = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        w * h
    }

    /// Intersection over union, always in `[0, 1]`.
    ///
    /// When the union has zero area (two degenerate boxes) the result is
    /// defined as 0 rather than NaN.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            return 0.0;
        }
        inter / union
    }
}
