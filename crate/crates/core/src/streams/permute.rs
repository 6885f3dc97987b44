use rand::seq::SliceRandom;
use rand::Rng;

use super::{Dataset, DriftSchedule};
use crate::error::{Error, Result};

/// A bijection on feature indices: output position `i` takes input feature
/// `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::Permutation(n));
            }
            seen[p] = true;
        }
        Ok(Permutation(perm))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        Permutation(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Permutation(inv)
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&p| row[p]).collect()
    }
}

/// Applies the scheduled permutation of each segment to every row in it.
pub fn permute_drift(data: &mut Dataset, schedule: &DriftSchedule<Permutation>) -> Result<()> {
    let n = data.input_dim();
    if let Some((_, p)) = schedule.segments().iter().find(|(_, p)| p.len() != n) {
        return Err(Error::Dimension {
            context: "permutation length",
            expected: n,
            actual: p.len(),
        });
    }
    for t in 0..data.len() {
        let permuted = schedule.at(t).apply(data.features.row(t));
        data.features.row_mut(t).copy_from_slice(&permuted);
    }
    Ok(())
}

/// Identity, then `count` random permutations, then identity again, in equal
/// segments over `total` samples.
pub fn recurring_permutation_schedule<R: Rng + ?Sized>(
    total: usize,
    n: usize,
    count: usize,
    rng: &mut R,
) -> DriftSchedule<Permutation> {
    let parts = count + 2;
    let seg = (total / parts).max(1);
    let mut segments = vec![(0, Permutation::identity(n))];
    for k in 1..=count {
        segments.push((k * seg, Permutation::random(n, rng)));
    }
    segments.push(((count + 1) * seg, Permutation::identity(n)));
    DriftSchedule::new(segments).expect("increasing segment starts")
}
