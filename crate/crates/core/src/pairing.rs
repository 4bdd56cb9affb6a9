//! Pair atoms `z = (x+, x-)` of the empirical pair distribution and their
//! ground distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};

/// Largest atom count for which a dense distance matrix is built.
pub const DEFAULT_ATOM_CAP: usize = 10_000;

/// One opposite-label pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x_plus: Vec<f64>,
    pub x_minus: Vec<f64>,
    /// Position of the positive point among the dataset's positives.
    pub i_index: usize,
    /// Position of the negative point among the dataset's negatives.
    pub j_index: usize,
}

impl Atom {
    pub fn dim(&self) -> usize {
        self.x_plus.len()
    }

    /// `x+ - x-`; the pairwise score of an atom is `w . diff()`.
    pub fn diff(&self) -> Vec<f64> {
        self.x_plus.iter().zip(&self.x_minus).map(|(a, b)| a - b).collect()
    }
}

/// All `N+ * N-` atoms of a dataset, positives outer, negatives inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSet {
    atoms: Vec<Atom>,
    dim: usize,
    n_pos: usize,
    n_neg: usize,
}

impl AtomSet {
    /// Builds an atom set from explicit atoms (used for hand-made instances).
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidArgument("an atom set needs at least one atom".into()))?;
        let dim = first.dim();
        for a in &atoms {
            if a.x_plus.len() != dim || a.x_minus.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.x_plus.len().max(a.x_minus.len()),
                });
            }
        }
        let n_pos = atoms.iter().map(|a| a.i_index + 1).max().unwrap_or(0);
        let n_neg = atoms.iter().map(|a| a.j_index + 1).max().unwrap_or(0);
        Ok(AtomSet {
            atoms,
            dim,
            n_pos,
            n_neg,
        })
    }

    pub fn m(&self) -> usize {
        self.atoms.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn get(&self, k: usize) -> &Atom {
        &self.atoms[k]
    }

    pub fn class_counts(&self) -> (usize, usize) {
        (self.n_pos, self.n_neg)
    }

    /// The distinct positive and negative points when the set is the full
    /// product `positives x negatives` in positives-outer order, as produced
    /// by [`build_atoms`]. The ground distance then splits into a positive
    /// and a negative part, which the trainers exploit.
    pub fn product_factors(&self) -> Option<(Vec<&[f64]>, Vec<&[f64]>)> {
        let (p, n) = (self.n_pos, self.n_neg);
        if p * n != self.atoms.len() {
            return None;
        }
        let pos: Vec<&[f64]> = (0..p).map(|a| self.atoms[a * n].x_plus.as_slice()).collect();
        let neg: Vec<&[f64]> = (0..n).map(|b| self.atoms[b].x_minus.as_slice()).collect();
        let consistent = self.atoms.iter().enumerate().all(|(k, atom)| {
            let (a, b) = (k / n, k % n);
            atom.i_index == a && atom.j_index == b && atom.x_plus == pos[a] && atom.x_minus == neg[b]
        });
        consistent.then_some((pos, neg))
    }

    /// Pairwise difference vectors, row-major `m x d`.
    pub fn diffs(&self) -> Vec<f64> {
        self.atoms.iter().flat_map(Atom::diff).collect()
    }
}

pub fn build_atoms(ds: &LabeledDataset) -> Result<AtomSet> {
    ds.require_both_classes()?;
    let (pos, neg) = ds.class_indices();
    let mut atoms = Vec::with_capacity(pos.len() * neg.len());
    for (i, &p) in pos.iter().enumerate() {
        for (j, &n) in neg.iter().enumerate() {
            atoms.push(Atom {
                x_plus: ds.row(p).to_vec(),
                x_minus: ds.row(n).to_vec(),
                i_index: i,
                j_index: j,
            });
        }
    }
    Ok(AtomSet {
        atoms,
        dim: ds.dim(),
        n_pos: pos.len(),
        n_neg: neg.len(),
    })
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `||a+ - b+||_1 + ||a- - b-||_1`.
pub fn atom_distance(a: &Atom, b: &Atom) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(l1(&a.x_plus, &b.x_plus) + l1(&a.x_minus, &b.x_minus))
}

/// Dense symmetric `m x m` matrix of atom distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds the matrix, refusing atom sets larger than `cap`.
    pub fn build(atoms: &AtomSet, cap: usize) -> Result<Self> {
        if atoms.m() > cap {
            return Err(Error::AtomCapExceeded {
                count: atoms.m(),
                cap,
            });
        }
        Ok(distance_matrix(atoms))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    /// Largest entry.
    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// Every pairwise [`atom_distance`]. Rows are filled in parallel; each entry
/// is computed independently so the result does not depend on scheduling.
pub fn distance_matrix(atoms: &AtomSet) -> DistanceMatrix {
    let m = atoms.m();
    let list = atoms.atoms();
    let mut entries = vec![0.0; m * m];
    entries.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, row)| {
        let a = &list[i];
        for (j, e) in row.iter_mut().enumerate() {
            let b = &list[j];
            *e = l1(&a.x_plus, &b.x_plus) + l1(&a.x_minus, &b.x_minus);
        }
    });
    DistanceMatrix { m, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn atom(p: &[f64], n: &[f64]) -> Atom {
        Atom {
            x_plus: p.to_vec(),
            x_minus: n.to_vec(),
            i_index: 0,
            j_index: 0,
        }
    }

    #[test]
    fn atom_counts() {
        let ds = LabeledDataset::new(
            (0..5).map(|i| vec![i as f64]).collect(),
            vec![
                Label::Negative,
                Label::Positive,
                Label::Negative,
                Label::Positive,
                Label::Negative,
            ],
        )
        .unwrap();
        let atoms = build_atoms(&ds).unwrap();
        assert_eq!(atoms.m(), 6);
        // positives outer, negatives inner
        let order: Vec<_> = atoms.atoms().iter().map(|a| (a.x_plus[0], a.x_minus[0])).collect();
        assert_eq!(
            order,
            vec![(1., 0.), (1., 2.), (1., 4.), (3., 0.), (3., 2.), (3., 4.)]
        );

        let one = LabeledDataset::new(
            vec![vec![1.0], vec![2.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let atoms = build_atoms(&one).unwrap();
        assert_eq!(atoms.m(), 1);
        assert_eq!(atoms.get(0), &Atom { x_plus: vec![1.0], x_minus: vec![2.0], i_index: 0, j_index: 0 });
    }

    #[test]
    fn single_class_rejected() {
        let ds = LabeledDataset::new(vec![vec![1.0]], vec![Label::Positive]).unwrap();
        assert!(matches!(build_atoms(&ds), Err(Error::EmptyClass(-1))));
    }

    #[test]
    fn distance_examples() {
        let a = atom(&[1.0, 0.0], &[0.0, 0.0]);
        let b = atom(&[0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(atom_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(atom_distance(&a, &b).unwrap(), 4.0);
        assert_eq!(atom_distance(&b, &a).unwrap(), 4.0);
        assert!(atom_distance(&a, &atom(&[1.0], &[1.0])).is_err());
    }

    #[test]
    fn matrix_small_cases() {
        let single = AtomSet::from_atoms(vec![atom(&[1.0], &[2.0])]).unwrap();
        let dm = distance_matrix(&single);
        assert_eq!((dm.m(), dm.get(0, 0)), (1, 0.0));

        let a = atom(&[1.0, 3.0], &[0.5, 0.0]);
        let dup = AtomSet::from_atoms(vec![a.clone(), atom(&[0.0, 0.0], &[1.0, 1.0]), a]).unwrap();
        let dm = distance_matrix(&dup);
        assert_eq!(dm.get(0, 2), 0.0);
        assert_eq!(dm.get(2, 0), 0.0);
        assert!(dm.get(0, 1) > 0.0);
    }

    #[test]
    fn cap_enforced() {
        let atoms = AtomSet::from_atoms(vec![atom(&[1.0], &[2.0]); 3]).unwrap();
        assert!(matches!(
            DistanceMatrix::build(&atoms, 2),
            Err(Error::AtomCapExceeded { count: 3, cap: 2 })
        ));
        assert!(DistanceMatrix::build(&atoms, 3).is_ok());
    }
}
