//! Brute-force references for small grids, used by the property suite.

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Envelope of `f` for the density `theta` by enumerating contact sets.
///
/// Every nonempty mask fixes `w = f` on the mask and `θ + L(w) = 0` off it;
/// the pointwise maximum over feasible solutions is returned. `None` when no
/// mask is feasible.
pub fn enumerate_envelope(theta: &[f64], f: &[f64]) -> Option<Vec<f64>> {
    let n = f.len();
    assert!(n <= 16, "contact-set enumeration is exponential");
    let inv_h2 = (n * n) as f64;
    let scale = 1.0 + f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut best: Option<Vec<f64>> = None;
    for mask in 1u32..(1 << n) {
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        for i in 0..n {
            if mask & (1 << i) != 0 {
                a[i][i] = 1.0;
                b[i] = f[i];
            } else {
                a[i][(i + n - 1) % n] += inv_h2;
                a[i][i] -= 2.0 * inv_h2;
                a[i][(i + 1) % n] += inv_h2;
                b[i] = -theta[i];
            }
        }
        let Some(w) = dense_solve(a, b) else { continue };
        let below = (0..n).all(|i| w[i] <= f[i] + 1e-11 * scale);
        let cone = (0..n).all(|i| {
            let l = (w[(i + n - 1) % n] - 2.0 * w[i] + w[(i + 1) % n]) * inv_h2;
            theta[i] + l >= -1e-8 * scale
        });
        if below && cone {
            best = Some(match best {
                None => w,
                Some(prev) => prev.iter().zip(&w).map(|(a, b)| a.max(*b)).collect(),
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_small_system() {
        let x = dense_solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn enumeration_of_flat_obstacle() {
        let w = enumerate_envelope(&[1.0; 8], &[0.0; 8]).unwrap();
        assert!(w.iter().all(|v| v.abs() < 1e-12));
    }
}
