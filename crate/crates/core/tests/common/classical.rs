//! Classical scalar dyadic CZ decomposition on a 1-d grid, written without the library.

pub struct Classical {
    pub g: Vec<f64>,
    pub b: Vec<f64>,
    /// Outside every dilated stopping cube.
    pub outside: Vec<bool>,
    pub stop_level: Vec<Option<i32>>,
}

/// Maximal dyadic cubes with average > λ, computed by direct summation.
pub fn classical(vals: &[f64], k_min: i32, k_max: i32, lambda: f64, s: i64) -> Classical {
    let n = vals.len();
    let mut stop_level: Vec<Option<i32>> = vec![None; n];
    let mut g = vals.to_vec();
    let mut b = vec![0.0; n];
    let mut outside = vec![true; n];
    for k in k_min..=k_max {
        let width = 1usize << (k_max - k);
        for start in (0..n).step_by(width) {
            if stop_level[start].is_some() {
                continue;
            }
            let avg: f64 = vals[start..start + width].iter().sum::<f64>() / width as f64;
            if avg > lambda * (1.0 + 1e-12) {
                let cube = (start / width) as i64;
                for c in start..start + width {
                    stop_level[c] = Some(k);
                    g[c] = avg;
                    b[c] = vals[c] - avg;
                }
                let per = (n / width) as i64;
                let lo = (cube - s).max(0) as usize * width;
                let hi = ((cube + s).min(per - 1) + 1) as usize * width;
                for c in lo..hi {
                    outside[c] = false;
                }
            }
        }
    }
    Classical { g, b, outside, stop_level }
}
