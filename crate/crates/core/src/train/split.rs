use crate::error::{Error, Result};
use crate::model::LABELS;
use crate::rng::Rng;

/// Sample indices of a train/validation/test partition, each ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `n` items by `fractions`. Ties on the
/// remainder go to the earlier part.
pub fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Gives every part at least one item by taking from the largest part.
fn ensure_nonempty(sizes: &mut [usize]) {
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let largest = (0..sizes.len())
            .max_by_key(|&i| (sizes[i], std::cmp::Reverse(i)))
            .unwrap();
        if sizes[largest] <= 1 {
            return;
        }
        sizes[largest] -= 1;
        sizes[empty] += 1;
    }
}

/// Per-class seeded shuffle, then proportional allocation. Classes with at
/// least three samples always contribute one sample to every split, even
/// when rounding would leave a split empty; smaller classes are an error.
pub fn split_stratified(
    labels: &[usize],
    classes: usize,
    fractions: [f64; 3],
    seed: u64,
) -> Result<Split> {
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 || fractions.iter().any(|&f| f <= 0.0) {
        return Err(Error::invalid(format!(
            "split fractions {fractions:?} must be positive and sum to 1"
        )));
    }
    if labels.iter().any(|&l| l >= classes) {
        return Err(Error::invalid(format!("label outside 0..{classes}")));
    }
    let mut rng = Rng::new(seed);
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for class in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 3 {
            return Err(Error::ClassTooSmall {
                class: LABELS
                    .get(class)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| class.to_string()),
                count: members.len(),
            });
        }
        rng.shuffle(&mut members);
        let mut sizes = apportion(members.len(), &fractions);
        ensure_nonempty(&mut sizes);
        let (train, rest) = members.split_at(sizes[0]);
        let (val, test) = rest.split_at(sizes[1]);
        split.train.extend_from_slice(train);
        split.val.extend_from_slice(val);
        split.test.extend_from_slice(test);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
