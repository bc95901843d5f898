use rayon::prelude::*;

use crate::error::Result;
use crate::imaging::{
    load_image, load_mask_for, resize_mask_short_side, resize_short_side, BinaryMask, Expert, Group, ImageBuffer,
    PhotoRecord,
};
use crate::scalar::Scalar;

/// One photo in memory: input, the chosen expert's target and the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub id: String,
    pub group_id: String,
    pub input: ImageBuffer<T>,
    pub target: ImageBuffer<T>,
    pub mask: BinaryMask,
}

fn maybe_resize<T: Scalar>(img: ImageBuffer<T>, short_side: usize) -> ImageBuffer<T> {
    if short_side == 0 || img.height().min(img.width()) == short_side {
        img
    } else {
        resize_short_side(&img, short_side)
    }
}

/// Loads one record, resized so its short side is `short_side` (0 = as stored).
pub fn load_sample<T: Scalar>(rec: &PhotoRecord, expert: Expert, short_side: usize) -> Result<Sample<T>> {
    let (input, _) = load_image::<T>(&rec.input)?;
    let (target, _) = load_image::<T>(rec.target(expert)?)?;
    input.require_same_dims(&target)?;
    let mask = load_mask_for(&rec.mask, input.dims())?;
    let mask = if short_side == 0 || input.height().min(input.width()) == short_side {
        mask
    } else {
        resize_mask_short_side(&mask, short_side)
    };
    Ok(Sample {
        id: rec.id.clone(),
        group_id: rec.group_id.clone(),
        input: maybe_resize(input, short_side),
        target: maybe_resize(target, short_side),
        mask,
    })
}

/// Loads every member of `groups` in manifest order.
pub fn load_samples<T: Scalar>(groups: &[Group], expert: Expert, short_side: usize) -> Result<Vec<Sample<T>>> {
    let records: Vec<&PhotoRecord> = groups.iter().flat_map(|g| &g.members).collect();
    records.par_iter().map(|r| load_sample(r, expert, short_side)).collect()
}
