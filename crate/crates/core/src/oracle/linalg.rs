//! Dense complex Gaussian elimination with partial pivoting. Sized for the
//! handful of unknowns a lumped body-channel netlist produces.

use num_complex::Complex64;

/// Solves `a · x = b` in place. Returns `None` when a pivot is exactly zero
/// or falls below `tiny` relative to the largest entry of its column.
pub fn solve_dense(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));

    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return None;
    }
    let tiny = scale * 1e-14;

    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pivot_mag <= tiny {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);

        let pivot = a[col][col];
        for r in col + 1..n {
            let factor = a[r][col] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            a[r][col] = Complex64::new(0.0, 0.0);
            for c in col + 1..n {
                let delta = factor * a[col][c];
                a[r][c] -= delta;
            }
            let delta = factor * b[col];
            b[r] -= delta;
        }
    }

    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Some(x)
}
