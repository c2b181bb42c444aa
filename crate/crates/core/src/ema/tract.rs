//! Tract variables derived from sensor coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosine of the polar angle of `(x, y)`, used for both tongue-tip and
/// tongue-body constriction location.
pub fn constriction_location(x: f64, y: f64) -> Result<f64> {
    let r = x.hypot(y);
    if r == 0.0 {
        return Err(Error::DegenerateCoordinate);
    }
    Ok(x / r)
}

/// Which lip-aperture formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaMode {
    /// `√((UL_x² − LL_x²) + (UL_y² + LL_y²))`, evaluated exactly as written.
    #[default]
    Literal,
    /// Inter-lip distance `√((UL_x − LL_x)² + (UL_y − LL_y)²)`.
    Euclidean,
}

pub fn lip_aperture(ul: (f64, f64), ll: (f64, f64), mode: LaMode) -> Result<f64> {
    match mode {
        LaMode::Literal => {
            let radicand = (ul.0 * ul.0 - ll.0 * ll.0) + (ul.1 * ul.1 + ll.1 * ll.1);
            if radicand < 0.0 {
                return Err(Error::NegativeRadicand { value: radicand });
            }
            Ok(radicand.sqrt())
        }
        LaMode::Euclidean => Ok((ul.0 - ll.0).hypot(ul.1 - ll.1)),
    }
}

pub fn lip_protrusion(ul_x: f64, ll_x: f64) -> f64 {
    (ul_x + ll_x) / 2.0
}
