use rand::Rng;

use super::{Dataset, DriftSchedule};
use crate::numerics::Mat;

const RAW_RANGE: f64 = 10.0;

/// Thresholds 4 → 7 → 4 → 7 switching at each quarter of `total` samples.
pub fn sea_default_schedule(total: usize) -> DriftSchedule<f64> {
    let q = (total / 4).max(1);
    DriftSchedule::new(vec![(0, 4.0), (q, 7.0), (2 * q, 4.0), (3 * q, 7.0)])
        .expect("quarters are increasing")
}

/// SEA concepts: three attributes uniform on `[0, 10]` (emitted divided by
/// 10), the third pure noise. Label 0 when `f1 + f2 < θ`, label 1 otherwise.
pub fn gen_sea<R: Rng + ?Sized>(
    count: usize,
    schedule: &DriftSchedule<f64>,
    rng: &mut R,
) -> Dataset {
    let mut data = Vec::with_capacity(count * 3);
    let mut labels = Vec::with_capacity(count);
    for t in 0..count {
        let raw: [f64; 3] = [
            rng.gen_range(0.0..=RAW_RANGE),
            rng.gen_range(0.0..=RAW_RANGE),
            rng.gen_range(0.0..=RAW_RANGE),
        ];
        let theta = *schedule.at(t);
        labels.push(if raw[0] + raw[1] < theta { 0 } else { 1 });
        data.extend(raw.iter().map(|v| v / RAW_RANGE));
    }
    Dataset {
        features: Mat::from_vec(count, 3, data).expect("row-major buffer"),
        labels,
        classes: 2,
    }
}
