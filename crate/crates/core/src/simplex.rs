//! Euclidean projection onto a scaled simplex `{v >= 0, sum(v) = mass}`.

/// Projects `v` in place onto `{w >= 0, sum(w) = mass}` (sort-based, O(n log n)).
pub fn project_scaled_simplex(v: &mut [f64], mass: f64) {
    if v.is_empty() {
        return;
    }
    if mass <= 0.0 {
        v.fill(0.0);
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - mass) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for w in v.iter_mut() {
        *w = (*w - theta).max(0.0);
    }
}
