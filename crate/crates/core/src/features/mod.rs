//! Principal component analysis of numeric feature matrices.

mod jacobi;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};

/// Row-major observations by features.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    col_names: Vec<String>,
}

impl<T: Real> DataMatrix<T> {
    /// Validates shape and finiteness. Names default to `x1..xn` when empty.
    pub fn new(rows: usize, cols: usize, values: Vec<T>, col_names: Vec<String>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::validation("data matrix needs at least one row and one column"));
        }
        if values.len() != rows * cols {
            return Err(Error::validation(format!("{} values for a {rows}x{cols} matrix", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite value at row {}, column {}", i / cols, i % cols)));
        }
        let col_names = if col_names.is_empty() { (1..=cols).map(|i| format!("x{i}")).collect() } else { col_names };
        if col_names.len() != cols {
            return Err(Error::validation(format!("{} column names for {cols} columns", col_names.len())));
        }
        Ok(Self { rows, cols, values, col_names })
    }

    pub fn from_rows(rows: &[Vec<T>], col_names: Vec<String>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::validation("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat(), col_names)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = T> + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }

    /// Parses CSV whose header row names the features.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let parse_err = |e: csv::Error| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { line, column: 0, message: e.to_string() }
        };
        let names: Vec<String> = rdr.headers().map_err(parse_err)?.iter().map(str::to_owned).collect();
        let mut values = Vec::new();
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec.map_err(parse_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    column: c + 1,
                    message: format!("not a number: {field:?}"),
                })?;
                values.push(T::lit(v));
            }
            rows += 1;
        }
        Self::new(rows, names.len(), values, names)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_csv_str(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.col_names).expect("write to memory");
        for r in 0..self.rows {
            w.write_record(self.row(r).iter().map(|v| v.to_string())).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult<T> {
    /// `components[j]` is the j-th principal axis, a unit vector over the features.
    pub components: Vec<Vec<T>>,
    /// Variances along the retained axes, descending.
    pub eigenvalues: Vec<T>,
    /// Share of the total variance per retained axis.
    pub explained_ratio: Vec<T>,
    pub mean: Vec<T>,
    /// Per-feature divisor applied after centering (all ones unless standardized).
    pub scale: Vec<T>,
    /// Sum of all eigenvalues, retained or not.
    pub total_variance: T,
}

fn mean_and_std<T: Real>(data: &DataMatrix<T>) -> (Vec<T>, Vec<T>) {
    let n = T::from_count(data.rows() as u64);
    let mean: Vec<T> = (0..data.cols()).map(|c| compensated_sum(data.column(c)) / n).collect();
    let std = (0..data.cols())
        .map(|c| (compensated_sum(data.column(c).map(|v| (v - mean[c]).powi(2))) / (n - T::one())).sqrt())
        .collect();
    (mean, std)
}

/// Principal components of `data` using the sample covariance (divisor n-1).
pub fn pca<T: Real>(data: &DataMatrix<T>, k: usize) -> Result<PcaResult<T>> {
    pca_with(data, k, false)
}

/// Like [`pca`], optionally z-scoring features first. Constant features keep
/// a scale of one when standardized.
#[allow(clippy::needless_range_loop)]
pub fn pca_with<T: Real>(data: &DataMatrix<T>, k: usize, standardize: bool) -> Result<PcaResult<T>> {
    let d = data.cols();
    if k == 0 || k > d {
        return Err(Error::domain(format!("k = {k} outside 1..={d}")));
    }
    if data.rows() < 2 {
        return Err(Error::domain("PCA needs at least two observations"));
    }
    let (mean, std) = mean_and_std(data);
    let scale: Vec<T> = if standardize {
        std.iter().map(|&s| if s > T::zero() { s } else { T::one() }).collect()
    } else {
        vec![T::one(); d]
    };
    let z = |r: usize, c: usize| (data.get(r, c) - mean[c]) / scale[c];
    let denom = T::from_count(data.rows() as u64 - 1);
    let mut cov = vec![vec![T::zero(); d]; d];
    for i in 0..d {
        for j in i..d {
            let v = compensated_sum((0..data.rows()).map(|r| z(r, i) * z(r, j))) / denom;
            cov[i][j] = v;
            cov[j][i] = v;
        }
    }

    let (values, vectors) = jacobi::symmetric_eigen(&cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let eig_all: Vec<T> = order.iter().map(|&i| values[i].max(T::zero())).collect();
    let total_variance = compensated_sum(eig_all.iter().copied());

    let components = order[..k]
        .iter()
        .map(|&i| {
            let mut v = vectors[i].clone();
            let lead = v.iter().copied().fold((T::zero(), T::zero()), |(best, sign), x| {
                if x.abs() > best {
                    (x.abs(), x.signum())
                } else {
                    (best, sign)
                }
            });
            if lead.1 < T::zero() {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let eigenvalues: Vec<T> = eig_all[..k].to_vec();
    let explained_ratio =
        eigenvalues.iter().map(|&e| if total_variance > T::zero() { e / total_variance } else { T::zero() }).collect();
    Ok(PcaResult { components, eigenvalues, explained_ratio, mean, scale, total_variance })
}

/// Scores of each observation on the retained axes, columns `PC1..PCk`.
pub fn project<T: Real>(data: &DataMatrix<T>, result: &PcaResult<T>) -> Result<DataMatrix<T>> {
    if data.cols() != result.mean.len() {
        return Err(Error::domain(format!("data has {} columns, model expects {}", data.cols(), result.mean.len())));
    }
    let k = result.components.len();
    let mut out = Vec::with_capacity(data.rows() * k);
    for r in 0..data.rows() {
        for comp in &result.components {
            out.push(compensated_sum(
                data.row(r).iter().enumerate().map(|(c, &v)| (v - result.mean[c]) / result.scale[c] * comp[c]),
            ));
        }
    }
    DataMatrix::new(data.rows(), k, out, (1..=k).map(|i| format!("PC{i}")).collect())
}

/// Maps scores back to feature space: `mean + scale * (scores x components^T)`.
pub fn inverse_project<T: Real>(scores: &DataMatrix<T>, result: &PcaResult<T>) -> Result<DataMatrix<T>> {
    let k = result.components.len();
    if scores.cols() != k {
        return Err(Error::domain(format!("scores have {} columns, model has {k} components", scores.cols())));
    }
    let d = result.mean.len();
    let mut out = Vec::with_capacity(scores.rows() * d);
    for r in 0..scores.rows() {
        for c in 0..d {
            let v = compensated_sum((0..k).map(|j| scores.get(r, j) * result.components[j][c]));
            out.push(result.mean[c] + result.scale[c] * v);
        }
    }
    DataMatrix::new(scores.rows(), d, out, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_var(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    }

    /// Eigenvalues of a symmetric 3x3 matrix from the trigonometric solution
    /// of its characteristic cubic, descending.
    fn cubic_eigenvalues(a: [[f64; 3]; 3]) -> [f64; 3] {
        let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
        let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        if p == 0.0 {
            return [q; 3];
        }
        let mut b = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
            }
        }
        let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
        let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
        let l1 = q + 2.0 * p * phi.cos();
        let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [l1, 3.0 * q - l1 - l3, l3]
    }

    fn covariance3(rows: &[[f64; 3]]) -> [[f64; 3]; 3] {
        let n = rows.len() as f64;
        let m: Vec<f64> = (0..3).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n).collect();
        let mut cov = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] = rows.iter().map(|r| (r[i] - m[i]) * (r[j] - m[j])).sum::<f64>() / (n - 1.0);
            }
        }
        cov
    }

    fn matrix(rows: &[Vec<f64>]) -> DataMatrix<f64> {
        DataMatrix::from_rows(rows, Vec::new()).unwrap()
    }

    #[test]
    fn perfectly_correlated() {
        let rows: Vec<Vec<f64>> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|&t| vec![t, t]).collect();
        let data = matrix(&rows);
        let r = pca(&data, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.components[0][0] - h).abs() < 1e-12 && (r.components[0][1] - h).abs() < 1e-12);
        assert!((r.eigenvalues[0] - 2.0 * sample_var(&[-2.0, -1.0, 0.0, 1.0, 2.0])).abs() < 1e-12);
        assert!((r.explained_ratio[0] - 1.0).abs() < 1e-12);
        assert!(r.explained_ratio[1].abs() < 1e-12);
    }

    #[test]
    fn isotropic() {
        let data = matrix(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        let r = pca(&data, 2).unwrap();
        assert!((r.eigenvalues[0] - r.eigenvalues[1]).abs() < 1e-12);
        for e in &r.explained_ratio {
            assert!((e - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn five_by_three_against_cubic() {
        let rows = [[2.5, 0.3, 1.1], [-0.7, 1.9, 0.4], [1.3, -2.2, 3.3], [0.1, 0.8, -1.6], [4.2, 1.0, 0.9]];
        let expected = cubic_eigenvalues(covariance3(&rows));
        let r = pca(&matrix(&rows.map(|r| r.to_vec())), 3).unwrap();
        for (a, b) in r.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn sign_convention() {
        let rows: Vec<Vec<f64>> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|&t| vec![t, -2.0 * t, 0.1 * t * t]).collect();
        let r = pca(&matrix(&rows), 3).unwrap();
        for c in &r.components {
            let lead = c.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn constant_data_projects_to_zero() {
        let data = matrix(&vec![vec![3.0, -1.0, 2.0]; 4]);
        let r = pca(&data, 3).unwrap();
        let p = project(&data, &r).unwrap();
        assert!((0..4).all(|i| p.row(i).iter().all(|&v| v == 0.0)));
        assert_eq!(r.explained_ratio, vec![0.0; 3]);
    }

    #[test]
    fn errors() {
        let data = matrix(&[vec![1.0, 2.0], vec![3.0, 5.0]]);
        assert!(matches!(pca(&data, 0), Err(Error::Domain(_))));
        assert!(matches!(pca(&data, 3), Err(Error::Domain(_))));
        assert!(matches!(pca(&matrix(&[vec![1.0, 2.0]]), 1), Err(Error::Domain(_))));
        assert!(matches!(DataMatrix::new(1, 2, vec![1.0, f64::NAN], vec![]), Err(Error::Validation(_))));
        let r = pca(&data, 1).unwrap();
        assert!(matches!(project(&matrix(&[vec![1.0], vec![2.0]]), &r), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_round_trip() {
        let data = DataMatrix::<f64>::from_csv_str("depth,speed\n1.5,0.25\n2,0.5\n").unwrap();
        assert_eq!(data.col_names(), ["depth", "speed"]);
        assert_eq!(data.get(1, 0), 2.0);
        assert_eq!(DataMatrix::<f64>::from_csv_str(&data.to_csv_string()).unwrap(), data);
        let err = DataMatrix::<f64>::from_csv_str("a,b\n1,2\n3,x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, column: 2, .. }), "{err:?}");
        assert!(DataMatrix::<f64>::from_csv_str("a,b\n1,2\n3\n").is_err());
    }

    #[test]
    fn standardized_features() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![f64::from(i), 1000.0 * f64::from(i * i % 5)]).collect();
        let r = pca_with(&matrix(&rows), 2, true).unwrap();
        assert!((r.total_variance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn f32_path() {
        let rows: Vec<Vec<f32>> = (0..5).map(|i| vec![i as f32, 2.0 * i as f32 + 0.5]).collect();
        let r = pca(&DataMatrix::from_rows(&rows, vec![]).unwrap(), 1).unwrap();
        assert!((r.explained_ratio[0] - 1.0).abs() < 1e-5);
    }

    fn arb_rows(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), 3..12)
    }

    proptest! {
        #[test]
        fn orthonormal_and_variances((rows, d) in (1usize..6).prop_flat_map(|d| (arb_rows(d), Just(d)))) {
            let data = matrix(&rows);
            let r = pca(&data, d).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let dot: f64 = r.components[i].iter().zip(&r.components[j]).map(|(a, b)| a * b).sum();
                    prop_assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-9);
                }
            }
            prop_assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let p = project(&data, &r).unwrap();
            for (j, &e) in r.eigenvalues.iter().enumerate() {
                prop_assert!((sample_var(&p.column(j).collect::<Vec<_>>()) - e).abs() < 1e-9);
            }
            let trace: f64 = (0..d).map(|c| sample_var(&data.column(c).collect::<Vec<_>>())).sum();
            prop_assert!((r.total_variance - trace).abs() < 1e-9);
        }

        #[test]
        fn reconstruction_and_isometry((rows, d) in (1usize..6).prop_flat_map(|d| (arb_rows(d), Just(d)))) {
            let data = matrix(&rows);
            let r = pca(&data, d).unwrap();
            let p = project(&data, &r).unwrap();
            let back = inverse_project(&p, &r).unwrap();
            for i in 0..data.rows() {
                for c in 0..d {
                    prop_assert!((back.get(i, c) - data.get(i, c)).abs() < 1e-9);
                }
            }
            let dist = |m: &DataMatrix<f64>, a: usize, b: usize| {
                m.row(a).iter().zip(m.row(b)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
            };
            for a in 0..data.rows() {
                for b in a + 1..data.rows() {
                    prop_assert!((dist(&data, a, b) - dist(&p, a, b)).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn spectrum_permutation_invariant(rows in arb_rows(3), perm in Just([0usize, 1, 2]).prop_shuffle()) {
            let permuted: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&i| r[i]).collect()).collect();
            let a = pca(&matrix(&rows), 3).unwrap();
            let b = pca(&matrix(&permuted), 3).unwrap();
            for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn matches_cubic_oracle(rows in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 5..9)) {
            let expected = cubic_eigenvalues(covariance3(&rows));
            let r = pca(&matrix(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()), 3).unwrap();
            for (a, b) in r.eigenvalues.iter().zip(expected) {
                prop_assert!((a - b.max(0.0)).abs() < 1e-9, "{} vs {}", a, b);
            }
        }
    }
}
