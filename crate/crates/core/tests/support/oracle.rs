//! Brute-force reference implementations, kept independent of the library's
//! enumeration and search code.

#![allow(dead_code)]

/// Every count vector in `{0..=n}^m` (decoded from a base-(n+1) counter, most
/// significant digit first), optionally restricted to those summing to `n`.
pub fn brute_force_grid(m: usize, n: u32, simplex: bool) -> Vec<Vec<u32>> {
    let base = u64::from(n) + 1;
    let total = base.pow(m as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut digits = vec![0u32; m];
        let mut rest = code;
        for d in digits.iter_mut().rev() {
            *d = (rest % base) as u32;
            rest /= base;
        }
        if !simplex || digits.iter().sum::<u32>() == n {
            out.push(digits);
        }
    }
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1u64, |acc, i| acc * (n + 1 - i) / i)
}

/// Cosine between `p` and the distribution `k / n`.
pub fn cosine_to(p: &[f64], k: &[u32], n: u32) -> f64 {
    let q: Vec<f64> = k.iter().map(|&x| f64::from(x) / f64::from(n)).collect();
    let dot: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
    let np = p.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nq = q.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nq == 0.0 {
        0.0
    } else {
        dot / (np * nq)
    }
}

pub fn euclid_sq(p: &[f64], k: &[u32], n: u32) -> f64 {
    p.iter()
        .zip(k)
        .map(|(a, &b)| (a - f64::from(b) / f64::from(n)).powi(2))
        .sum()
}

/// Exhaustive argmax of cosine; ties within 1e-12 go to the smaller
/// Euclidean distance, then to the earliest point in lexicographic order.
pub fn oracle_snap(p: &[f64], n: u32, simplex: bool) -> Vec<u32> {
    const TOL: f64 = 1e-12;
    let grid = brute_force_grid(p.len(), n, simplex);
    let cosines: Vec<f64> = grid.iter().map(|k| cosine_to(p, k, n)).collect();
    let max = cosines.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let contenders: Vec<usize> = (0..grid.len()).filter(|&i| cosines[i] >= max - TOL).collect();
    let min_dist = contenders
        .iter()
        .map(|&i| euclid_sq(p, &grid[i], n))
        .fold(f64::INFINITY, f64::min);
    let winner = contenders
        .into_iter()
        .find(|&i| euclid_sq(p, &grid[i], n) <= min_dist + TOL)
        .expect("non-empty grid");
    grid[winner].clone()
}
