//! Reduction of a distortion matrix that is invariant under a partition of its alphabets.
//!
//! Suppose the rows split into classes `I` and the columns into classes `J`. Suppose also
//! that every row of `I` sees the same multiset of distortions on `J`, and every column
//! of `J` sees the same multiset on `I`. Then Blahut-Arimoto started from class-constant
//! `p` and `r` stays class-constant. It is exactly Blahut-Arimoto on class masses with
//! kernel `K_IJ = (1/|J|) Σ_{j∈J} e^{-ζ d_ij}`. The dual certificate lumps the same way:
//! `A_I = |I| a_i`.

use crate::error::{Error, Result};
use crate::prob::{DistortionMatrix, ProbabilityVector};
use crate::rd::SlopeModel;

/// Tolerance for deciding that two distortion values coincide.
const VALUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Lumping {
    row_classes: Vec<Vec<usize>>,
    col_classes: Vec<Vec<usize>>,
    rows: usize,
    cols: usize,
    /// Distinct values and multiplicities seen by one row of `I` on `J`, indexed `I * n_J + J`.
    profiles: Vec<Vec<(f64, usize)>>,
}

fn check_partition(classes: &[Vec<usize>], size: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; size];
    for class in classes {
        if class.is_empty() {
            return Err(Error::InvalidConfig(format!("empty {what} class")));
        }
        for &i in class {
            if i >= size || seen[i] {
                return Err(Error::InvalidConfig(format!(
                    "{what} classes do not partition 0..{size} (index {i})"
                )));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidConfig(format!("{what} classes do not cover 0..{size}")));
    }
    Ok(())
}

/// Sorted values collapsed into `(value, count)` pairs.
fn profile(mut values: Vec<f64>) -> Vec<(f64, usize)> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((last, count)) if (v - *last).abs() <= VALUE_TOL => *count += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

fn same_profile(a: &[(f64, usize)], b: &[(f64, usize)]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|((va, ca), (vb, cb))| ca == cb && (va - vb).abs() <= VALUE_TOL)
}

impl Lumping {
    /// Checks the invariance and stores the per-block profiles.
    pub fn new(d: &DistortionMatrix, row_classes: Vec<Vec<usize>>, col_classes: Vec<Vec<usize>>) -> Result<Self> {
        check_partition(&row_classes, d.rows(), "row")?;
        check_partition(&col_classes, d.cols(), "column")?;
        let mut profiles = Vec::with_capacity(row_classes.len() * col_classes.len());
        for rows in &row_classes {
            for cols in &col_classes {
                let row_profile = |i: usize| profile(cols.iter().map(|&j| d.get(i, j)).collect());
                let col_profile = |j: usize| profile(rows.iter().map(|&i| d.get(i, j)).collect());
                let first_row = row_profile(rows[0]);
                let first_col = col_profile(cols[0]);
                let rows_agree = rows[1..].iter().all(|&i| same_profile(&row_profile(i), &first_row));
                let cols_agree = cols[1..].iter().all(|&j| same_profile(&col_profile(j), &first_col));
                if !(rows_agree && cols_agree) {
                    return Err(Error::DomainError(
                        "distortion matrix is not invariant under the given partition".into(),
                    ));
                }
                profiles.push(first_row);
            }
        }
        Ok(Self {
            rows: d.rows(),
            cols: d.cols(),
            row_classes,
            col_classes,
            profiles,
        })
    }

    pub fn row_classes(&self) -> &[Vec<usize>] {
        &self.row_classes
    }

    pub fn col_classes(&self) -> &[Vec<usize>] {
        &self.col_classes
    }

    /// Class masses of a symbol-level vector that is constant on each row class.
    pub fn lump(&self, p: &ProbabilityVector) -> Result<Vec<f64>> {
        if p.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: p.len(),
            });
        }
        self.row_classes
            .iter()
            .map(|class| {
                let first = p[class[0]];
                if class.iter().any(|&i| (p[i] - first).abs() > 1e-12 * first.max(1e-300)) {
                    return Err(Error::DomainError(
                        "distribution is not constant on a row class".into(),
                    ));
                }
                Ok(class.iter().map(|&i| p[i]).sum())
            })
            .collect()
    }

    /// Spreads class masses uniformly over each class.
    pub fn spread(&self, masses: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (class, m) in self.row_classes.iter().zip(masses) {
            let each = m / class.len() as f64;
            class.iter().for_each(|&i| out[i] = each);
        }
        out
    }

    /// Symbol-level `ln a_i = ln A_I - ln |I|`.
    pub fn spread_log(&self, log_masses: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.rows];
        for (class, lm) in self.row_classes.iter().zip(log_masses) {
            let each = lm - (class.len() as f64).ln();
            class.iter().for_each(|&i| out[i] = each);
        }
        out
    }

    fn block(&self, i: usize, j: usize) -> &[(f64, usize)] {
        &self.profiles[i * self.col_classes.len() + j]
    }
}

impl SlopeModel for Lumping {
    fn rows(&self) -> usize {
        self.row_classes.len()
    }

    fn cols(&self) -> usize {
        self.col_classes.len()
    }

    fn kernel(&self, zeta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (m, n) = (SlopeModel::rows(self), SlopeModel::cols(self));
        let mut shift = Vec::with_capacity(m);
        let mut k = Vec::with_capacity(m * n);
        let mut kd = Vec::with_capacity(m * n);
        for i in 0..m {
            let min = (0..n)
                .map(|j| self.block(i, j)[0].0)
                .fold(f64::INFINITY, f64::min);
            shift.push(min);
            for j in 0..n {
                let width = self.col_classes[j].len() as f64;
                let (mut kij, mut kdij) = (0.0, 0.0);
                for &(v, count) in self.block(i, j) {
                    let e = count as f64 * (-zeta * (v - min)).exp();
                    kij += e;
                    kdij += e * v;
                }
                k.push(kij / width);
                kd.push(kdij / width);
            }
        }
        (shift, k, kd)
    }

    fn delta_max(&self, p: &[f64]) -> f64 {
        (0..SlopeModel::cols(self))
            .map(|j| {
                let width = self.col_classes[j].len() as f64;
                p.iter()
                    .enumerate()
                    .map(|(i, pi)| {
                        let total: f64 = self.block(i, j).iter().map(|(v, c)| v * *c as f64).sum();
                        pi * total / width
                    })
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rd::{rd_at_distortion, rd_search, RdOptions};

    fn block_matrix() -> DistortionMatrix {
        // Two symbols in A, three in B, Hamming-like inside each block.
        let class = |i: usize| usize::from(i >= 2);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| {
                (0..5)
                    .map(|j| match (class(i), class(j)) {
                        _ if i == j => 0.0,
                        (0, 0) => 1.0,
                        (1, 1) => 0.4,
                        (0, 1) => 0.9,
                        _ => 0.7,
                    })
                    .collect()
            })
            .collect();
        DistortionMatrix::from_rows(&rows).unwrap()
    }

    fn classes() -> Vec<Vec<usize>> {
        vec![vec![0, 1], vec![2, 3, 4]]
    }

    #[test]
    fn lumped_rate_matches_full_rate() {
        let d = block_matrix();
        let lump = Lumping::new(&d, classes(), classes()).unwrap();
        let p = ProbabilityVector::new(vec![0.15, 0.15, 0.7 / 3.0, 0.7 / 3.0, 0.7 / 3.0]).unwrap();
        let pc = lump.lump(&p).unwrap();
        assert!((pc[0] - 0.3).abs() < 1e-15);
        assert!((lump.delta_max(&pc) - crate::prob::delta_max(&p, &d).unwrap()).abs() < 1e-14);
        for delta in [0.05, 0.15, 0.3] {
            let full = rd_at_distortion(&p, &d, delta, 1e-11).unwrap().0;
            let lumped = rd_search(&lump, &pc, delta, &RdOptions::default()).unwrap().0;
            assert!((full - lumped).abs() < 1e-8, "delta {delta}: {full} vs {lumped}");
        }
    }

    #[test]
    fn rejects_non_invariant_matrix() {
        let mut rows: Vec<Vec<f64>> = (0..5).map(|i| block_matrix().row(i).to_vec()).collect();
        rows[2][3] = 0.5;
        let d = DistortionMatrix::from_rows(&rows).unwrap();
        assert!(Lumping::new(&d, classes(), classes()).is_err());
    }

    #[test]
    fn rejects_bad_partitions() {
        let d = block_matrix();
        assert!(Lumping::new(&d, vec![vec![0, 1], vec![2, 3]], classes()).is_err());
        assert!(Lumping::new(&d, vec![vec![0, 1, 1], vec![2, 3, 4]], classes()).is_err());
        assert!(Lumping::new(&d, classes(), vec![vec![0, 1, 2, 3, 4], vec![]]).is_err());
    }

    #[test]
    fn spreading_inverts_lumping() {
        let d = block_matrix();
        let lump = Lumping::new(&d, classes(), classes()).unwrap();
        let spread = lump.spread(&[0.4, 0.6]);
        assert!(spread.iter().all(|v| (v - 0.2).abs() < 1e-16));
        let logs = lump.spread_log(&[0.4f64.ln(), 0.6f64.ln()]);
        assert!((logs[3] - 0.2f64.ln()).abs() < 1e-15);
        let uneven = ProbabilityVector::new(vec![0.1, 0.2, 0.7 / 3.0, 0.7 / 3.0, 0.7 / 3.0]).unwrap();
        assert!(lump.lump(&uneven).is_err());
    }
}
