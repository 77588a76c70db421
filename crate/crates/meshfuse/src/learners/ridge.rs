//! Ridge regression solved in closed form via the normal equations, with an
//! unpenalized intercept (features and labels are centered first, so the
//! L2 penalty applies to the slopes only).

use crate::error::{Error, Result};
use crate::learners::Dataset;

/// A fitted ridge model.
#[derive(Debug, Clone, PartialEq)]
pub struct Ridge {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
}

impl Ridge {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(&c, &v)| c * v)
                .sum::<f64>()
    }

    /// Max-abs residual of the normal equations
    /// `(Xc'Xc + alpha I) beta - Xc'yc` on the given (training) data.
    pub fn normal_equation_residual(&self, ds: &Dataset) -> f64 {
        let (gram, rhs, _, _) = centered_system(ds, self.alpha);
        let mut worst: f64 = 0.0;
        for (row, &b) in gram.iter().zip(&rhs) {
            let lhs: f64 = row.iter().zip(&self.coefficients).map(|(&g, &c)| g * c).sum();
            worst = worst.max((lhs - b).abs());
        }
        worst
    }
}

fn centered_system(ds: &Dataset, alpha: f64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, f64) {
    let n = ds.len() as f64;
    let k = ds.n_features();
    let mut x_mean = vec![0.0; k];
    for row in &ds.features {
        for (m, &v) in x_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut x_mean {
        *m /= n;
    }
    let y_mean = ds.labels.iter().sum::<f64>() / n;

    let mut gram = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for (row, &y) in ds.features.iter().zip(&ds.labels) {
        let yc = y - y_mean;
        for i in 0..k {
            let xi = row[i] - x_mean[i];
            rhs[i] += xi * yc;
            for j in i..k {
                gram[i][j] += xi * (row[j] - x_mean[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
        gram[i][i] += alpha;
    }
    (gram, rhs, x_mean, y_mean)
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pivot < 1e-12 {
            return Err(Error::Data(
                "singular normal equations; use a regularization alpha > 0".into(),
            ));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in col + 1..n {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

/// Fits ridge coefficients: `(Xc'Xc + alpha I) beta = Xc'yc` with the
/// intercept recovered as `mean(y) - mean(x) . beta`.
pub fn train_ridge(ds: &Dataset, alpha: f64) -> Result<Ridge> {
    ds.validate()?;
    if ds.is_empty() {
        return Err(Error::Data("cannot fit ridge on an empty dataset".into()));
    }
    if alpha < 0.0 {
        return Err(Error::Config("alpha must be >= 0".into()));
    }
    let (gram, rhs, x_mean, y_mean) = centered_system(ds, alpha);
    let coefficients = solve(gram, rhs)?;
    let intercept = y_mean
        - x_mean
            .iter()
            .zip(&coefficients)
            .map(|(&m, &c)| m * c)
            .sum::<f64>();
    Ok(Ridge { coefficients, intercept, alpha })
}
