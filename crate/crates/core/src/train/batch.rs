use ndarray::{s, Array2, Array3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::TrainingUtterance;
use crate::error::{Error, Result};

/// Frames per length bucket when grouping utterances into batches.
pub const BUCKET_FRAMES: usize = 25;

/// Zero-padded batch with a per-sequence validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub ids: Vec<String>,
    /// `B × T_max × input_dim`
    pub inputs: Array3<f64>,
    /// `B × T_max × output_dim`
    pub targets: Array3<f64>,
    pub lengths: Vec<usize>,
    /// `B × T_max`, true on valid frames.
    pub mask: Array2<bool>,
}

impl Batch {
    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn max_len(&self) -> usize {
        self.mask.ncols()
    }

    pub fn padded_frames(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    fn assemble(items: &[&TrainingUtterance]) -> Self {
        let t_max = items.iter().map(|u| u.len()).max().unwrap_or(0);
        let d_in = items.first().map_or(0, |u| u.acoustic.ncols());
        let d_out = items.first().map_or(0, |u| u.targets.ncols());
        let b = items.len();
        let mut inputs = Array3::zeros((b, t_max, d_in));
        let mut targets = Array3::zeros((b, t_max, d_out));
        let mut mask = Array2::from_elem((b, t_max), false);
        for (i, u) in items.iter().enumerate() {
            let len = u.len();
            inputs.slice_mut(s![i, ..len, ..]).assign(&u.acoustic);
            targets.slice_mut(s![i, ..len, ..]).assign(&u.targets);
            mask.slice_mut(s![i, ..len]).fill(true);
        }
        Self {
            ids: items.iter().map(|u| u.id.clone()).collect(),
            inputs,
            targets,
            lengths: items.iter().map(|u| u.len()).collect(),
            mask,
        }
    }
}

/// Group indices into batches: shuffle (seeded by `seed + epoch`), order by
/// length bucket, cut into groups of `batch_size`, then shuffle the group order.
pub fn plan_batches(lengths: &[usize], batch_size: usize, seed: u64, epoch: usize) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(epoch as u64));
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&i| lengths[i] / BUCKET_FRAMES);
    let mut groups: Vec<Vec<usize>> = order.chunks(batch_size).map(|c| c.to_vec()).collect();
    groups.shuffle(&mut rng);
    Ok(groups)
}

pub fn make_batches(
    items: &[TrainingUtterance],
    batch_size: usize,
    seed: u64,
    epoch: usize,
) -> Result<Vec<Batch>> {
    let lengths: Vec<usize> = items.iter().map(|u| u.len()).collect();
    Ok(plan_batches(&lengths, batch_size, seed, epoch)?
        .into_iter()
        .map(|g| {
            let group: Vec<&TrainingUtterance> = g.iter().map(|&i| &items[i]).collect();
            Batch::assemble(&group)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utt(i: usize, len: usize) -> TrainingUtterance {
        TrainingUtterance {
            id: format!("u{i}"),
            acoustic: Array2::from_elem((len, 3), i as f64),
            targets: Array2::from_elem((len, 2), -(i as f64)),
        }
    }

    #[test]
    fn grouping_arithmetic() {
        let items: Vec<_> = (0..20).map(|i| utt(i, 30 + 7 * i)).collect();
        let batches = make_batches(&items, 8, 3, 1).unwrap();
        let mut sizes: Vec<usize> = batches.iter().map(Batch::size).collect();
        sizes.sort();
        assert_eq!(sizes, vec![4, 8, 8]);
        for b in &batches {
            let valid: Vec<usize> = b.mask.rows().into_iter().map(|r| r.iter().filter(|m| **m).count()).collect();
            assert_eq!(valid, b.lengths);
            for (k, id) in b.ids.iter().enumerate() {
                let src = &items[id[1..].parse::<usize>().unwrap()];
                assert_eq!(b.lengths[k], src.len());
                assert_eq!(b.inputs[[k, 0, 0]], src.acoustic[[0, 0]]);
            }
        }
        let total: usize = batches.iter().map(Batch::size).sum();
        assert_eq!(total, 20);
    }

    #[test]
    fn equal_lengths_need_no_padding() {
        let items: Vec<_> = (0..10).map(|i| utt(i, 40)).collect();
        for b in make_batches(&items, 4, 0, 2).unwrap() {
            assert_eq!(b.padded_frames(), 0);
        }
    }

    #[test]
    fn epoch_changes_order_deterministically() {
        let lens: Vec<usize> = (0..16).map(|i| 100 + i).collect();
        let a = plan_batches(&lens, 1, 9, 1).unwrap();
        assert_eq!(a, plan_batches(&lens, 1, 9, 1).unwrap());
        assert_ne!(a, plan_batches(&lens, 1, 9, 2).unwrap());
        assert!(plan_batches(&lens, 0, 9, 1).is_err());
    }
}
