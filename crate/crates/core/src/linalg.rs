use crate::error::{Error, Result};

/// Smallest pivot magnitude accepted before a system is declared singular.
const PIVOT_FLOOR: f64 = 1e-14;

/// Relative residual accepted after the solve.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Solves `a x = b` by Gaussian elimination with partial pivoting and checks
/// the residual `max |a x - b| <= 1e-12 * (1 + |a|_inf |x|_inf)`.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n {
        return Err(Error::Shape {
            what: "matrix rows",
            got: a.len(),
            expected: n,
        });
    }
    for row in a {
        if row.len() != n {
            return Err(Error::Shape {
                what: "matrix row",
                got: row.len(),
                expected: n,
            });
        }
    }

    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty range");
        let pivot = m[pivot_row][col];
        if pivot.abs() < PIVOT_FLOOR {
            return Err(Error::Singular { column: col, pivot });
        }
        m.swap(col, pivot_row);
        for i in (col + 1)..n {
            let factor = m[i][col] / m[col][col];
            if factor != 0.0 {
                for k in col..=n {
                    m[i][k] -= factor * m[col][k];
                }
            }
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = m[i][n];
        for k in (i + 1)..n {
            s -= m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }

    let a_norm = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let x_norm = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let scale = 1.0 + a_norm * x_norm;
    for (row, &rhs) in a.iter().zip(b) {
        let r: f64 = row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - rhs;
        if r.abs() > RESIDUAL_TOL * scale {
            return Err(Error::Numerical(format!(
                "linear solve residual {r:e} exceeds tolerance"
            )));
        }
    }
    Ok(x)
}
