//! Reductions of an operator field over t: maximal function, square function, ρ-variation.

use log::warn;

use super::field::OperatorField;
use crate::error::{parameter, Result};

/// sup_j |F(x_i, t_j)|.
pub fn maximal(field: &OperatorField) -> Vec<f64> {
    (0..field.rows())
        .map(|i| field.row(i).iter().fold(0.0f64, |a, v| a.max(v.abs())))
        .collect()
}

/// (∫ |F(x_i, t)|² dt/t)^{1/2} by the trapezoid rule in ln t. Warns when the two end
/// columns carry more than 1e-4 of the integral, since the t-range then truncates it.
pub fn square_function(field: &OperatorField) -> Vec<f64> {
    let w = field.tgrid().dt_weights();
    let last = w.len() - 1;
    let mut worst = 0.0f64;
    let out = (0..field.rows())
        .map(|i| {
            let row = field.row(i);
            let total: f64 = row.iter().zip(&w).map(|(v, w)| w * v * v).sum();
            if total > 0.0 {
                let ends = w[0] * row[0] * row[0] + w[last] * row[last] * row[last];
                worst = worst.max(ends / total);
            }
            total.sqrt()
        })
        .collect();
    if worst > 1e-4 {
        warn!("square function: end columns carry {worst:.2e} of the integral; widen the t-range");
    }
    out
}

/// sup over increasing index chains of (Σ |a_{j_{k+1}} − a_{j_k}|^ρ)^{1/ρ}, exactly, in O(n²).
pub fn rho_variation_row(row: &[f64], rho: f64) -> Result<f64> {
    if !(rho > 2.0) || !rho.is_finite() {
        return Err(parameter(format!("variation exponent must exceed 2, got {rho}")));
    }
    let n = row.len();
    if n < 2 {
        return Ok(0.0);
    }
    // best[j]: largest Σ|Δ|^ρ over chains ending at j.
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let mut b = 0.0f64;
        for i in 0..j {
            b = b.max(best[i] + (row[j] - row[i]).abs().powf(rho));
        }
        best[j] = b;
    }
    Ok(best.iter().fold(0.0f64, |a, &b| a.max(b)).powf(1.0 / rho))
}

/// ρ-variation in t at every x.
pub fn rho_variation(field: &OperatorField, rho: f64) -> Result<Vec<f64>> {
    (0..field.rows())
        .map(|i| rho_variation_row(field.row(i), rho))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LogGrid;
    use crate::operators::TimeGrid;
    use std::sync::Arc;

    fn brute(row: &[f64], rho: f64) -> f64 {
        let n = row.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
            let s: f64 = idx.windows(2).map(|w| (row[w[1]] - row[w[0]]).abs().powf(rho)).sum();
            best = best.max(s);
        }
        best.powf(1.0 / rho)
    }

    #[test]
    fn variation_matches_enumeration() {
        let row = [0.3, -1.2, 0.8, 0.81, -0.1, 2.0, 1.9, -0.4];
        for rho in [2.5, 3.0, 7.0] {
            let dp = rho_variation_row(&row, rho).unwrap();
            assert!((dp - brute(&row, rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_row_gives_range() {
        let row: Vec<f64> = (0..20).map(|k| (k as f64).sqrt()).collect();
        let v = rho_variation_row(&row, 3.0).unwrap();
        assert!((v - row[19]).abs() < 1e-12);
    }

    #[test]
    fn bad_exponent() {
        assert!(rho_variation_row(&[1.0, 2.0], 2.0).is_err());
        assert!(rho_variation_row(&[1.0, 2.0], f64::NAN).is_err());
    }

    #[test]
    fn maximal_and_square_on_a_known_field() {
        let x = Arc::new(LogGrid::new(1.0, 10.0, 16).unwrap());
        let t = Arc::new(TimeGrid::new(1e-3, 1e3, 32).unwrap());
        let mut values = Vec::new();
        for _ in 0..x.len() {
            for &tj in t.nodes() {
                values.push(-tj / (1.0 + tj * tj));
            }
        }
        let f = OperatorField::new(x, t, values).unwrap();
        assert!(maximal(&f).iter().all(|&m| (m - 0.5).abs() < 2e-3));
        // ∫ t²/(1+t²)² dt/t = 1/2.
        assert!(square_function(&f).iter().all(|&s| (s - 0.5f64.sqrt()).abs() < 1e-3));
    }
}
