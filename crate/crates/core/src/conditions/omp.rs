//! Orthogonal matching pursuit over weighted binary rows.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Active dimensions in selection order.
    pub active: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

/// Greedy sparse least squares with an intercept. `rows` are feature
/// vectors, `y` targets and `w` row weights. Stops when the weighted
/// residual sum of squares drops to `tolerance` or `max_dims` dimensions
/// are active.
pub fn omp(rows: &[Vec<f64>], y: &[f64], w: &[f64], tolerance: f64, max_dims: usize) -> OmpResult {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    let total: f64 = w.iter().sum();
    if m == 0 || total <= 0.0 {
        return OmpResult {
            active: Vec::new(),
            coefficients: Vec::new(),
            residual: 0.0,
        };
    }
    let y_mean = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let yc = DVector::from_iterator(m, y.iter().map(|v| v - y_mean));
    let mut x = DMatrix::<f64>::zeros(m, n);
    for j in 0..n {
        let mean = (0..m).map(|i| rows[i][j] * w[i]).sum::<f64>() / total;
        for i in 0..m {
            x[(i, j)] = rows[i][j] - mean;
        }
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[i] * x[(i, j)].powi(2)).sum::<f64>().sqrt())
        .collect();
    let rss = |r: &DVector<f64>| r.iter().zip(w).map(|(v, wi)| wi * v * v).sum::<f64>();

    let mut residual = yc.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut coefficients: Vec<f64> = Vec::new();
    while rss(&residual) > tolerance && active.len() < max_dims.min(n) {
        let best = (0..n)
            .filter(|j| !active.contains(j) && norms[*j] > 1e-12)
            .map(|j| {
                let c: f64 = (0..m).map(|i| w[i] * x[(i, j)] * residual[i]).sum();
                (j, (c / norms[j]).abs())
            })
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((j, corr)) = best else { break };
        if corr < 1e-12 {
            break;
        }
        active.push(j);
        let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        let a = DMatrix::from_fn(m, active.len(), |i, k| sw[i] * x[(i, active[k])]);
        let b = DVector::from_fn(m, |i, _| sw[i] * yc[i]);
        let beta = match a.svd(true, true).solve(&b, 1e-10) {
            Ok(beta) => beta,
            Err(_) => break,
        };
        coefficients = beta.iter().copied().collect();
        residual = &yc - DMatrix::from_fn(m, active.len(), |i, k| x[(i, active[k])]) * beta;
    }
    OmpResult {
        residual: rss(&residual),
        active,
        coefficients,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_linear_support() {
        // y = 2 x1 - x3 over all 16 states of 4 dims
        let rows: Vec<Vec<f64>> = (0..16u32)
            .map(|s| (0..4).map(|d| ((s >> d) & 1) as f64).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[1] - r[3]).collect();
        let res = omp(&rows, &y, &[1.0; 16], 1e-9, 4);
        let mut active = res.active.clone();
        active.sort_unstable();
        assert_eq!(active, vec![1, 3]);
        assert!(res.residual < 1e-9);
        let c1 = res.coefficients[res.active.iter().position(|&d| d == 1).unwrap()];
        assert!((c1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_target_selects_nothing() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let res = omp(&rows, &[1.0, 1.0], &[3.0, 1.0], 0.0, 5);
        assert!(res.active.is_empty());
    }

    #[test]
    fn respects_dimension_cap() {
        let rows: Vec<Vec<f64>> = (0..32u32)
            .map(|s| (0..5).map(|d| ((s >> d) & 1) as f64).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(omp(&rows, &y, &vec![1.0; 32], 0.0, 2).active.len(), 2);
    }
}
