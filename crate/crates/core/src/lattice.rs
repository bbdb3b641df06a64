//! Exact integer linear algebra for the classical half of the reduction.
//!
//! Characters of the finite domain `D = Z/n_1 x ... x Z/n_k` are turned into
//! the kernel lattice `L` in `Z^k`, from which a vector `(x, 1)` gives the
//! challenge `a = g^-x`. All arithmetic is on [`BigInt`].

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::hsp::CharacterSample;

/// Dense row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows of equal length. `cols` is needed for the
    /// zero-row case.
    pub fn from_rows<T: Clone + Into<BigInt>>(cols: usize, rows: &[Vec<T>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            data.extend(row.iter().cloned().map(Into::into));
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Main diagonal, `min(rows, cols)` entries.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// `row[dst] += k * row[src]`
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        for j in 0..self.cols {
            let v = &self[(src, j)] * k;
            self[(dst, j)] += v;
        }
    }

    /// `col[dst] += k * col[src]`
    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        for i in 0..self.rows {
            let v = &self[(i, src)] * k;
            self[(i, dst)] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -std::mem::take(&mut self[(i, j)]);
            self[(i, j)] = v;
        }
    }
}

impl Index<(usize, usize)> for IntegerMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntegerMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &IntegerMatrix {
    type Output = IntegerMatrix;

    fn mul(self, rhs: &IntegerMatrix) -> IntegerMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matrix product");
        let mut out = IntegerMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * &rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Display for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `u * m * v = d` with `u`, `v` unimodular and `d` diagonal with
/// nonnegative entries `d_1 | d_2 | ...`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IntegerMatrix,
    pub d: IntegerMatrix,
    pub v: IntegerMatrix,
}

impl Smith {
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.d.diagonal()
    }

    pub fn rank(&self) -> usize {
        self.d.diagonal().iter().take_while(|x| !x.is_zero()).count()
    }
}

fn min_abs_nonzero(a: &IntegerMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..a.rows {
        for j in t..a.cols {
            let x = &a[(i, j)];
            if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < a[(bi, bj)].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

/// Smith normal form by pivoting on the smallest entry.
pub fn snf(m: &IntegerMatrix) -> Smith {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut u = IntegerMatrix::identity(rows);
    let mut v = IntegerMatrix::identity(cols);

    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = min_abs_nonzero(&a, t) else {
            break;
        };
        a.swap_rows(t, pi);
        u.swap_rows(t, pi);
        a.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            for i in t + 1..rows {
                if !a[(i, t)].is_zero() {
                    let q = -a[(i, t)].div_floor(&a[(t, t)]);
                    a.add_row(i, t, &q);
                    u.add_row(i, t, &q);
                }
            }
            for j in t + 1..cols {
                if !a[(t, j)].is_zero() {
                    let q = -a[(t, j)].div_floor(&a[(t, t)]);
                    a.add_col(j, t, &q);
                    v.add_col(j, t, &q);
                }
            }

            // Any leftover remainder is smaller than the pivot: move it in.
            if let Some(i) = (t + 1..rows).find(|&i| !a[(i, t)].is_zero()) {
                a.swap_rows(t, i);
                u.swap_rows(t, i);
                continue;
            }
            if let Some(j) = (t + 1..cols).find(|&j| !a[(t, j)].is_zero()) {
                a.swap_cols(t, j);
                v.swap_cols(t, j);
                continue;
            }

            let pivot = a[(t, t)].clone();
            let offender = (t + 1..rows).find(|&i| {
                (t + 1..cols).any(|j| !a[(i, j)].is_multiple_of(&pivot))
            });
            match offender {
                Some(i) => {
                    let one = BigInt::one();
                    a.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }

        if a[(t, t)].is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
    }
    Smith { u, d: a, v }
}

/// Row Hermite normal form: the nonzero rows of the echelon basis of the
/// row lattice, pivots positive, entries above each pivot reduced into
/// `[0, pivot)`.
pub fn hnf_rows(m: &IntegerMatrix) -> IntegerMatrix {
    let mut a = m.clone();
    let mut k = 0;
    for col in 0..a.cols {
        if k == a.rows {
            break;
        }
        loop {
            let pivot = (k..a.rows)
                .filter(|&i| !a[(i, col)].is_zero())
                .min_by(|&x, &y| a[(x, col)].abs().cmp(&a[(y, col)].abs()));
            let Some(p) = pivot else { break };
            a.swap_rows(k, p);
            let mut clean = true;
            for i in k + 1..a.rows {
                if !a[(i, col)].is_zero() {
                    let q = -a[(i, col)].div_floor(&a[(k, col)]);
                    a.add_row(i, k, &q);
                    clean &= a[(i, col)].is_zero();
                }
            }
            if clean {
                break;
            }
        }
        if k < a.rows && !a[(k, col)].is_zero() {
            if a[(k, col)].is_negative() {
                a.negate_row(k);
            }
            for i in 0..k {
                let q = -a[(i, col)].div_floor(&a[(k, col)]);
                if !q.is_zero() {
                    a.add_row(i, k, &q);
                }
            }
            k += 1;
        }
    }
    a.rows = k;
    a.data.truncate(k * a.cols);
    a
}

/// A sublattice of `Z^k` given by a row basis, read against the moduli
/// `(d_1, ..., d_r, lambda)` of the finite domain it projects to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelLattice {
    basis: IntegerMatrix,
    moduli_ext: Vec<u64>,
}

impl KernelLattice {
    /// Lattice generated by `gens` alone; relations are not adjoined.
    pub fn from_generators(gens: &IntegerMatrix, moduli_ext: &[u64]) -> Self {
        assert_eq!(gens.cols(), moduli_ext.len());
        Self {
            basis: hnf_rows(gens),
            moduli_ext: moduli_ext.to_vec(),
        }
    }

    /// Lattice generated by `gens` together with every `n_j e_j`.
    pub fn with_relations(gens: &IntegerMatrix, moduli_ext: &[u64]) -> Self {
        let mut rows = gens.row_vecs();
        rows.extend(relation_rows(moduli_ext));
        Self::from_generators(&IntegerMatrix::from_rows(moduli_ext.len(), &rows), moduli_ext)
    }

    pub fn basis(&self) -> &IntegerMatrix {
        &self.basis
    }

    pub fn moduli_ext(&self) -> &[u64] {
        &self.moduli_ext
    }

    pub fn dim(&self) -> usize {
        self.moduli_ext.len()
    }

    /// Membership by solving `basis^T x = v` through its Smith form.
    pub fn contains(&self, v: &[BigInt]) -> bool {
        assert_eq!(v.len(), self.dim());
        if self.basis.rows() == 0 {
            return v.iter().all(Zero::is_zero);
        }
        let s = snf(&self.basis.transpose());
        let target = &s.u * &IntegerMatrix::from_rows(1, &v.iter().map(|x| vec![x.clone()]).collect::<Vec<_>>());
        let diag = s.d.diagonal();
        (0..target.rows()).all(|i| {
            let t = &target[(i, 0)];
            match diag.get(i) {
                Some(d) if !d.is_zero() => t.is_multiple_of(d),
                _ => t.is_zero(),
            }
        })
    }

    /// Same subgroup: equal invariant factors and mutual containment.
    pub fn same_as(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && snf(&self.basis).invariant_factors() == snf(&other.basis).invariant_factors()
            && (0..self.basis.rows()).all(|i| other.contains(self.basis.row(i)))
            && (0..other.basis.rows()).all(|i| self.contains(other.basis.row(i)))
    }

    /// `|Z^k / L|`, or `None` if `L` is not of full rank.
    pub fn index(&self) -> Option<BigInt> {
        if self.basis.rows() != self.dim() {
            return None;
        }
        Some(snf(&self.basis).invariant_factors().iter().product())
    }

    /// Order of the finite subgroup `L / (n_1 Z + ... + n_k Z)`, assuming
    /// the relations lie in `L`.
    pub fn finite_order(&self) -> Option<BigInt> {
        let total: BigInt = self.moduli_ext.iter().map(|&n| BigInt::from(n)).product();
        self.index().map(|i| total / i)
    }

    /// A random lattice vector: small random combination of the basis rows.
    pub fn random_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.dim()];
        for i in 0..self.basis.rows() {
            let c = BigInt::from(rng.gen_range(-10i64..=10));
            for (slot, b) in v.iter_mut().zip(self.basis.row(i)) {
                *slot += &c * b;
            }
        }
        v
    }
}

fn relation_rows(moduli_ext: &[u64]) -> Vec<Vec<BigInt>> {
    (0..moduli_ext.len())
        .map(|j| {
            let mut row = vec![BigInt::zero(); moduli_ext.len()];
            row[j] = BigInt::from(moduli_ext[j]);
            row
        })
        .collect()
}

fn sample_lattice(samples: &[CharacterSample], moduli_ext: &[u64]) -> KernelLattice {
    let mut rows: Vec<Vec<BigInt>> = samples
        .iter()
        .map(|s| {
            assert_eq!(s.residues().len(), moduli_ext.len(), "sample shape");
            s.residues().iter().map(|&c| BigInt::from(c)).collect()
        })
        .collect();
    rows.extend(relation_rows(moduli_ext));
    KernelLattice::from_generators(&IntegerMatrix::from_rows(moduli_ext.len(), &rows), moduli_ext)
}

/// Order of the subgroup of the character group generated by `samples`.
pub fn subgroup_order(samples: &[CharacterSample], moduli_ext: &[u64]) -> BigInt {
    sample_lattice(samples, moduli_ext)
        .finite_order()
        .expect("relations make the sample lattice full rank")
}

/// Preimage in `Z^k` of the joint kernel of the sampled characters.
///
/// With `M = lcm(n_j)`, `u` lies in every kernel iff
/// `sum_j c_j (M / n_j) u_j = 0 mod M` for each sample `c`. The samples are
/// first replaced by a basis of the subgroup they generate, then the system
/// `A u + M t = 0` is solved through the Smith form of `[A | M I]`.
pub fn kernel_from_samples(samples: &[CharacterSample], moduli_ext: &[u64]) -> KernelLattice {
    let k = moduli_ext.len();
    let big_m = moduli_ext.iter().fold(1u64, |acc, &n| acc.lcm(&n));
    let scale: Vec<BigInt> = moduli_ext.iter().map(|&n| BigInt::from(big_m / n)).collect();
    let chars = sample_lattice(samples, moduli_ext);
    let s = chars.basis.rows();

    let mut system = IntegerMatrix::zeros(s, k + s);
    for i in 0..s {
        for j in 0..k {
            system[(i, j)] = &chars.basis[(i, j)] * &scale[j];
        }
        system[(i, k + i)] = BigInt::from(big_m);
    }
    let smith = snf(&system);
    let rank = smith.rank();

    let mut gens: Vec<Vec<BigInt>> = (rank..k + s)
        .map(|col| (0..k).map(|row| smith.v[(row, col)].clone()).collect())
        .collect();
    gens.extend(relation_rows(moduli_ext));
    KernelLattice::from_generators(&IntegerMatrix::from_rows(k, &gens), moduli_ext)
}

/// Finds `(x, 1)` in `L` and returns `g^-x`.
pub fn extract_alpha(lattice: &KernelLattice, spec: &GroupSpec) -> Result<GroupElement> {
    let r = spec.rank();
    if lattice.dim() != r + 1 {
        return Err(Error::ShapeMismatch {
            expected: r + 1,
            got: lattice.dim(),
        });
    }
    // Fold the basis rows with extended gcds on the last coordinate.
    let mut acc = vec![BigInt::zero(); r + 1];
    for i in 0..lattice.basis.rows() {
        let row = lattice.basis.row(i);
        let g = acc[r].extended_gcd(&row[r]);
        acc = acc
            .iter()
            .zip(row)
            .map(|(a, b)| &g.x * a + &g.y * b)
            .collect();
    }
    if acc[r].abs() != BigInt::one() {
        return Err(Error::NoUnitLastCoordinate);
    }
    if acc[r].is_negative() {
        acc.iter_mut().for_each(|x| *x = -std::mem::take(x));
    }
    let exps: Vec<u64> = acc[..r]
        .iter()
        .zip(spec.moduli())
        .map(|(x, &d)| {
            let d = BigInt::from(d);
            let neg: BigInt = (-x).mod_floor(&d);
            u64::try_from(neg).expect("reduced residue fits")
        })
        .collect();
    spec.element_unsigned(&exps)
}

/// Whether every `n_j e_j` lies in `L`.
pub fn verify_contains_relations(lattice: &KernelLattice) -> bool {
    relation_rows(&lattice.moduli_ext)
        .iter()
        .all(|v| lattice.contains(v))
}
