use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// Mean squared error over valid frames and all channels.
pub fn masked_mse(pred: &Array3<f64>, target: &Array3<f64>, mask: &Array2<bool>) -> Result<f64> {
    let (b, t, c) = pred.dim();
    if target.dim() != (b, t, c) || mask.dim() != (b, t) {
        return Err(Error::shape(format!(
            "prediction {:?}, target {:?}, mask {:?}",
            pred.dim(),
            target.dim(),
            mask.dim()
        )));
    }
    let mut sse = 0.0;
    let mut frames = 0usize;
    for i in 0..b {
        for j in 0..t {
            if !mask[[i, j]] {
                continue;
            }
            frames += 1;
            for k in 0..c {
                let d = pred[[i, j, k]] - target[[i, j, k]];
                sse += d * d;
            }
        }
    }
    if frames == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(sse / (frames * c) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let target = Array3::from_shape_fn((2, 4, 3), |(b, t, c)| (b + t * c) as f64);
        let mut mask = Array2::from_elem((2, 4), true);
        mask[[1, 3]] = false;
        assert_eq!(masked_mse(&target, &target, &mask).unwrap(), 0.0);
        let shifted = &target + 2.0;
        assert_eq!(masked_mse(&shifted, &target, &mask).unwrap(), 4.0);
        let mut padded = shifted.clone();
        padded[[1, 3, 0]] = 1e6;
        assert_eq!(masked_mse(&padded, &target, &mask).unwrap(), 4.0);
        let none = Array2::from_elem((2, 4), false);
        assert!(matches!(masked_mse(&target, &target, &none), Err(Error::EmptyBatch)));
    }
}
