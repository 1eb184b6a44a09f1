use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QencError, Result};
use crate::types::FeatureMatrix;

/// Keeps every minority row and a seeded sample (without replacement) of
/// majority rows of the same size. Rows keep their original relative order.
pub fn undersample_balance(matrix: &FeatureMatrix, seed: u64) -> Result<FeatureMatrix> {
    let labels = matrix.require_labels("class balancing")?;
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        return Err(QencError::Validation(format!(
            "class balancing needs exactly two classes, found {}",
            classes.len()
        )));
    }
    let members =
        |c: u32| -> Vec<usize> { (0..labels.len()).filter(|&i| labels[i] == c).collect() };
    let (a, b) = (members(classes[0]), members(classes[1]));
    let (minority, majority) = if a.len() <= b.len() { (a, b) } else { (b, a) };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, majority.len(), minority.len());
    let mut keep: Vec<usize> = minority;
    keep.extend(picked.iter().map(|k| majority[k]));
    keep.sort_unstable();
    Ok(matrix.select_rows(&keep))
}
