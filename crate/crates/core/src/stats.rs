//! Summary statistics shared by HD95 and the dataset reports.

use crate::num::Real;

/// Quantile `q ∈ [0, 1]` of ascending-sorted data, linearly interpolating
/// between order statistics at position `q · (n − 1)`.
pub fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub fn sort_values<T: Real>(values: &mut [T]) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("NaN in statistic input"));
}

pub fn mean<T: Real>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().copied().sum::<T>() / T::from_usize(values.len()).unwrap())
}

/// Population standard deviation.
pub fn std_dev<T: Real>(values: &[T]) -> Option<T> {
    let m = mean(values)?;
    let var = values.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::from_usize(values.len()).unwrap();
    Some(var.sqrt())
}
