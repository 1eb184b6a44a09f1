//! Multicollinearity filters: pairwise Pearson correlation and iterative
//! variance-inflation-factor elimination.

use nalgebra::{DMatrix, DVector};

use crate::error::{QencError, Result};
use crate::types::FeatureMatrix;

/// Returned when a column is an exact linear combination of the others.
pub const VIF_INFINITE: f64 = f64::INFINITY;

const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub matrix: DMatrix<f64>,
    /// Columns with zero variance; their off-diagonal correlations are 0.
    pub zero_variance: Vec<usize>,
}

/// Outcome of a column filter.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub matrix: FeatureMatrix,
    pub dropped: Vec<String>,
}

fn centered(matrix: &FeatureMatrix) -> DMatrix<f64> {
    let n = matrix.n_rows();
    let d = matrix.n_cols();
    let mut m = DMatrix::from_row_slice(n, d, matrix.values());
    for j in 0..d {
        let mean = m.column(j).mean();
        m.column_mut(j).add_scalar_mut(-mean);
    }
    m
}

pub fn correlation_matrix(matrix: &FeatureMatrix) -> Result<Correlation> {
    if matrix.n_rows() < 2 {
        return Err(QencError::Validation(
            "correlation needs at least two rows".into(),
        ));
    }
    let c = centered(matrix);
    let gram = c.transpose() * &c;
    let d = matrix.n_cols();
    let scale: Vec<f64> = (0..d).map(|j| gram[(j, j)].sqrt()).collect();
    let zero_variance: Vec<usize> = (0..d).filter(|&j| scale[j] == 0.0).collect();
    let corr = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0
        } else if scale[i] == 0.0 || scale[j] == 0.0 {
            0.0
        } else {
            (gram[(i, j)] / (scale[i] * scale[j])).clamp(-1.0, 1.0)
        }
    });
    Ok(Correlation {
        matrix: corr,
        zero_variance,
    })
}

/// Scans pairs `i < j` in order; whenever both are still present and
/// `|r| > threshold`, column `j` is dropped.
pub fn drop_correlated(matrix: &FeatureMatrix, threshold: f64) -> Result<Filtered> {
    let corr = correlation_matrix(matrix)?.matrix;
    let d = matrix.n_cols();
    let mut dropped = vec![false; d];
    for i in 0..d {
        if dropped[i] {
            continue;
        }
        for j in i + 1..d {
            if !dropped[j] && corr[(i, j)].abs() > threshold {
                dropped[j] = true;
            }
        }
    }
    Ok(split_kept(matrix, &dropped))
}

fn split_kept(matrix: &FeatureMatrix, dropped: &[bool]) -> Filtered {
    let keep: Vec<usize> = (0..dropped.len()).filter(|&j| !dropped[j]).collect();
    Filtered {
        matrix: matrix.select_columns(&keep),
        dropped: (0..dropped.len())
            .filter(|&j| dropped[j])
            .map(|j| matrix.column_names()[j].clone())
            .collect(),
    }
}

/// VIF of every column from the regression on all other columns plus an
/// intercept, solved through the centered Gram matrix.
pub fn vif_scores(matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    let n = matrix.n_rows();
    let d = matrix.n_cols();
    if n <= d {
        return Err(QencError::Validation(format!(
            "VIF needs more rows than columns ({n} <= {d}); reduce dimensionality first"
        )));
    }
    let c = centered(matrix);
    let gram = c.transpose() * &c;
    Ok((0..d).map(|j| vif_from_gram(&gram, j)).collect())
}

fn vif_from_gram(gram: &DMatrix<f64>, j: usize) -> f64 {
    let d = gram.nrows();
    let sst = gram[(j, j)];
    if sst <= 0.0 {
        return VIF_INFINITE;
    }
    if d == 1 {
        return 1.0;
    }
    let others: Vec<usize> = (0..d).filter(|&k| k != j).collect();
    let a = DMatrix::from_fn(d - 1, d - 1, |r, c| gram[(others[r], others[c])]);
    let b = DVector::from_fn(d - 1, |r, _| gram[(others[r], j)]);
    let svd = a.svd(true, true);
    let eps = svd.singular_values.max() * 1e-12;
    let beta = match svd.solve(&b, eps) {
        Ok(beta) => beta,
        Err(_) => return VIF_INFINITE,
    };
    let sse = sst - b.dot(&beta);
    let ratio = sse / sst;
    if ratio < COLLINEAR_TOL {
        VIF_INFINITE
    } else {
        (1.0 / ratio).max(1.0)
    }
}

/// Repeatedly drops the column with the highest VIF (the later one on ties)
/// until every VIF is at most `threshold`.
pub fn vif_filter(matrix: &FeatureMatrix, threshold: f64) -> Result<Filtered> {
    let mut current = matrix.clone();
    let mut dropped = Vec::new();
    loop {
        let scores = vif_scores(&current)?;
        let worst =
            scores
                .iter()
                .enumerate()
                .fold(None::<(usize, f64)>, |best, (j, &v)| match best {
                    Some((_, bv)) if v < bv => best,
                    _ => Some((j, v)),
                });
        match worst {
            Some((j, v)) if v > threshold => {
                dropped.push(current.column_names()[j].clone());
                let keep: Vec<usize> = (0..current.n_cols()).filter(|&k| k != j).collect();
                current = current.select_columns(&keep);
            }
            _ => break,
        }
    }
    Ok(Filtered {
        matrix: current,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn from_columns(cols: &[Vec<f64>]) -> FeatureMatrix {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        FeatureMatrix::from_rows(&rows, None).unwrap()
    }

    fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    /// R^2 through an ordinary least-squares fit with explicit intercept column.
    fn direct_vif(cols: &[Vec<f64>], j: usize) -> f64 {
        let n = cols[0].len();
        let others: Vec<&Vec<f64>> = cols
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, c)| c)
            .collect();
        let x = DMatrix::from_fn(n, others.len() + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                others[c - 1][r]
            }
        });
        let y = DVector::from_column_slice(&cols[j]);
        let beta = x.clone().svd(true, true).solve(&y, 1e-14).unwrap();
        let resid = &y - &x * beta;
        let mean = y.mean();
        let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        1.0 / (resid.norm_squared() / sst)
    }

    #[test]
    fn correlation_basics() {
        let x = vec![1.0, 2.0, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = from_columns(&[x.clone(), x.clone(), y, vec![3.0; 4]]);
        let c = correlation_matrix(&m).unwrap();
        assert!((c.matrix[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((c.matrix[(0, 2)] - 1.0).abs() < 1e-12);
        assert_eq!(c.matrix[(0, 3)], 0.0);
        assert_eq!(c.matrix[(3, 3)], 1.0);
        assert_eq!(c.zero_variance, vec![3]);
        assert_eq!(c.matrix, c.matrix.transpose());

        let f = drop_correlated(&m, 0.8).unwrap();
        assert_eq!(f.dropped, vec!["x1", "x2"]);
        assert_eq!(f.matrix.column_names(), &["x0", "x3"]);
        assert!(correlation_matrix(&from_columns(&[vec![1.0]])).is_err());
    }

    #[test]
    fn independent_normals_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = from_columns(&[normals(&mut rng, 10_000), normals(&mut rng, 10_000)]);
        let r = correlation_matrix(&m).unwrap().matrix[(0, 1)];
        assert!(r.abs() < 0.05, "{r}");
    }

    #[test]
    fn orthogonal_columns_have_unit_vif() {
        // centered, mutually orthogonal columns
        let m = from_columns(&[
            vec![1.0, -1.0, 1.0, -1.0, 0.0],
            vec![1.0, 1.0, -1.0, -1.0, 0.0],
            vec![1.0, -1.0, -1.0, 1.0, 0.0],
        ]);
        for v in vif_scores(&m).unwrap() {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn near_collinear_column_matches_direct_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = normals(&mut rng, 300);
        let b = normals(&mut rng, 300);
        let noise = normals(&mut rng, 300);
        let c: Vec<f64> = (0..300).map(|i| a[i] + b[i] + 1e-3 * noise[i]).collect();
        let e = normals(&mut rng, 300);
        let cols = vec![a, b, c, e];
        let scores = vif_scores(&from_columns(&cols)).unwrap();
        assert!(scores[2] > 100.0);
        for (j, score) in scores.iter().enumerate() {
            let oracle = direct_vif(&cols, j);
            assert!(
                (score - oracle).abs() / oracle < 1e-6,
                "{j}: {score} vs {oracle}"
            );
        }
    }

    #[test]
    fn exact_collinearity_is_infinite() {
        let a = vec![1.0, 2.0, 3.0, 5.0, 8.0, 1.0];
        let b = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - 2.0 * y).collect();
        let scores = vif_scores(&from_columns(&[a, b, c])).unwrap();
        assert!(scores.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn filter_terminates_under_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = normals(&mut rng, 200);
        let b = normals(&mut rng, 200);
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let d: Vec<f64> = a
            .iter()
            .map(|x| 0.9 * x)
            .zip(normals(&mut rng, 200))
            .map(|(x, n)| x + 0.1 * n)
            .collect();
        let m = from_columns(&[a, b, c, d]);
        let f = vif_filter(&m, 5.0).unwrap();
        assert!(!f.dropped.is_empty());
        assert!(vif_scores(&f.matrix).unwrap().iter().all(|v| *v <= 5.0));
        // exact triple: ties at infinity drop the later column first
        assert_eq!(f.dropped[0], "x2");
    }

    #[test]
    fn too_few_rows() {
        let m = from_columns(&[vec![1.0, 2.0], vec![3.0, 1.0]]);
        assert!(vif_scores(&m)
            .unwrap_err()
            .to_string()
            .contains("reduce dimensionality"));
    }
}
