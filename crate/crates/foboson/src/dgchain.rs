//! Exact finite-dimensional verification of the chain-level bivector
//! algebra: the horizontal differentials `dh` / `dh_vee`, the two chain
//! representatives of the bivector, the homotopies connecting them, the
//! composition-map diagram, and compatibility with truncation.
//!
//! Scalars are exact rationals throughout; every identity in this module is
//! asserted as exact equality, never toleranced. A [`FiniteChain`] is a
//! sequence of spaces with arbitrary structure maps between consecutive
//! ones; compositions of consecutive maps are *not* required to vanish, and
//! none of the identities below need them to.

use crate::error::{Error, Result};
use num::{BigInt, BigRational, Zero};
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Dense matrix over exact rationals, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> BigRational,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        QMatrix { rows, cols, data }
    }

    /// Matrix with a single entry `1` at `(row, col)`.
    pub fn unit(rows: usize, cols: usize, row: usize, col: usize) -> Self {
        let mut m = QMatrix::zeros(rows, cols);
        m.set(row, col, BigRational::from_integer(BigInt::from(1)));
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigRational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        QMatrix::from_fn(self.rows, other.cols, |r, c| {
            let mut acc = BigRational::zero();
            for k in 0..self.cols {
                acc += self.get(r, k) * other.get(k, c);
            }
            acc
        })
    }

    pub fn sub(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c) - other.get(r, c))
    }

    pub fn add(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c) + other.get(r, c))
    }

    pub fn neg(&self) -> QMatrix {
        QMatrix::from_fn(self.rows, self.cols, |r, c| -self.get(r, c))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Sum of absolute values of all entries: the exact residual norm used
    /// by every check in this module.
    pub fn abs_sum(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for v in &self.data {
            acc += if v < &BigRational::zero() { -v } else { v.clone() };
        }
        acc
    }

    pub fn trace(&self) -> BigRational {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.get(i, i).clone()).sum()
    }

    /// Random matrix with numerators in `[-5, 5]` and denominators in
    /// `[1, 3]`.
    pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        QMatrix::from_fn(rows, cols, |_, _| {
            BigRational::new(
                BigInt::from(rng.gen_range(-5i64..=5)),
                BigInt::from(rng.gen_range(1i64..=3)),
            )
        })
    }
}

/// A single element of `Hom(V_i, V_j)` attached to a chain, shape-checked
/// on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomElement {
    pub source: usize,
    pub target: usize,
    pub matrix: QMatrix,
}

impl HomElement {
    pub fn new(chain: &FiniteChain, source: usize, target: usize, matrix: QMatrix) -> Result<Self> {
        let m = chain.top_index();
        if source > m || target > m {
            return Err(Error::Shape(format!(
                "hom indices ({source}, {target}) out of range for a chain with top index {m}"
            )));
        }
        if matrix.rows() != chain.dims[target] || matrix.cols() != chain.dims[source] {
            return Err(Error::Shape(format!(
                "Hom(V_{source}, V_{target}) needs a {}x{} matrix, got {}x{}",
                chain.dims[target],
                chain.dims[source],
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(HomElement {
            source,
            target,
            matrix,
        })
    }
}

/// A sequence of spaces `V_0, ..., V_m` of the given dimensions with
/// structure maps `d_i: V_i -> V_{i+1}` (so `maps[i]` has shape
/// `dims[i+1] x dims[i]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteChain {
    pub dims: Vec<usize>,
    pub maps: Vec<QMatrix>,
}

impl FiniteChain {
    pub fn new(dims: Vec<usize>, maps: Vec<QMatrix>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Shape(
                "dims must be a nonempty list of positive integers".into(),
            ));
        }
        if maps.len() + 1 != dims.len() {
            return Err(Error::Shape(format!(
                "expected {} structure maps for {} spaces, got {}",
                dims.len() - 1,
                dims.len(),
                maps.len()
            )));
        }
        for (i, d) in maps.iter().enumerate() {
            if d.rows() != dims[i + 1] || d.cols() != dims[i] {
                return Err(Error::Shape(format!(
                    "map d_{i} must be {}x{}, got {}x{}",
                    dims[i + 1],
                    dims[i],
                    d.rows(),
                    d.cols()
                )));
            }
        }
        Ok(FiniteChain { dims, maps })
    }

    /// Index of the last space.
    pub fn top_index(&self) -> usize {
        self.dims.len() - 1
    }

    /// Random chain with the given dimensions.
    pub fn random(dims: &[usize], rng: &mut impl Rng) -> Self {
        let maps = (0..dims.len() - 1)
            .map(|i| QMatrix::random(dims[i + 1], dims[i], rng))
            .collect();
        FiniteChain {
            dims: dims.to_vec(),
            maps,
        }
    }

    /// Whether some composite `d_{i+1} d_i` is nonzero.
    pub fn has_nonzero_composite(&self) -> bool {
        self.maps.windows(2).any(|w| !w[1].mul(&w[0]).is_zero())
    }

    fn check_diag(&self, b: &[QMatrix]) -> Result<()> {
        let m = self.top_index();
        if b.len() != m + 1 {
            return Err(Error::Shape(format!(
                "expected {} diagonal entries, got {}",
                m + 1,
                b.len()
            )));
        }
        for (i, bi) in b.iter().enumerate() {
            if bi.rows() != self.dims[i] || bi.cols() != self.dims[i] {
                return Err(Error::Shape(format!(
                    "b_{i}{i} must be {0}x{0}, got {1}x{2}",
                    self.dims[i],
                    bi.rows(),
                    bi.cols()
                )));
            }
        }
        Ok(())
    }

    fn check_subdiag(&self, a: &[QMatrix]) -> Result<()> {
        let m = self.top_index();
        if a.len() != m {
            return Err(Error::Shape(format!(
                "expected {} subdiagonal entries, got {}",
                m,
                a.len()
            )));
        }
        for (i, ai) in a.iter().enumerate() {
            // a_{i+1,i}: V_{i+1} -> V_i
            if ai.rows() != self.dims[i] || ai.cols() != self.dims[i + 1] {
                return Err(Error::Shape(format!(
                    "a_{}{} must be {}x{}, got {}x{}",
                    i + 1,
                    i,
                    self.dims[i],
                    self.dims[i + 1],
                    ai.rows(),
                    ai.cols()
                )));
            }
        }
        Ok(())
    }
}

/// Horizontal differential on diagonal tuples:
/// component `i` of `dh(b)` is `d_i b_ii - b_{i+1,i+1} d_i`.
pub fn dh(chain: &FiniteChain, b: &[QMatrix]) -> Result<Vec<QMatrix>> {
    chain.check_diag(b)?;
    let m = chain.top_index();
    Ok((0..m)
        .map(|i| chain.maps[i].mul(&b[i]).sub(&b[i + 1].mul(&chain.maps[i])))
        .collect())
}

/// Dual differential on subdiagonal tuples:
/// `dh_vee(a)_0 = -a_10 d_0`, interior components `d_{i-1} a_{i,i-1} - a_{i+1,i} d_i`,
/// last component `d_{m-1} a_{m,m-1}`.
pub fn dh_vee(chain: &FiniteChain, a: &[QMatrix]) -> Result<Vec<QMatrix>> {
    chain.check_subdiag(a)?;
    let m = chain.top_index();
    let mut out = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let from_left = if i > 0 {
            Some(chain.maps[i - 1].mul(&a[i - 1]))
        } else {
            None
        };
        let from_right = if i < m {
            Some(a[i].mul(&chain.maps[i]))
        } else {
            None
        };
        out.push(match (from_left, from_right) {
            (None, Some(r)) => r.neg(),
            (Some(l), Some(r)) => l.sub(&r),
            (Some(l), None) => l,
            (None, None) => unreachable!("m >= 1 is enforced by check_subdiag"),
        });
    }
    Ok(out)
}

/// Top half of the bivector chain map:
/// component `0` is `a_10 d_0`; component `i >= 1` is `d_{i-1} a_{i,i-1}`.
pub fn bivector_top(chain: &FiniteChain, a: &[QMatrix]) -> Result<Vec<QMatrix>> {
    chain.check_subdiag(a)?;
    Ok(bivector_top_from(chain, 0, a))
}

/// Top map of a chain regarded as the window starting at `global_start` of
/// a larger chain. The boundary term `a_10 d_0` is attached to global index
/// zero only; windows with `global_start > 0` have no boundary term.
fn bivector_top_from(chain: &FiniteChain, global_start: usize, a: &[QMatrix]) -> Vec<QMatrix> {
    let m = chain.top_index();
    let mut out = Vec::with_capacity(m + 1);
    for i in 0..=m {
        if i == 0 {
            if global_start == 0 && m >= 1 {
                out.push(a[0].mul(&chain.maps[0]));
            } else {
                out.push(QMatrix::zeros(chain.dims[0], chain.dims[0]));
            }
        } else {
            out.push(chain.maps[i - 1].mul(&a[i - 1]));
        }
    }
    out
}

/// Bottom half of the bivector chain map:
/// component `0` is zero; component `i >= 1` is `d_i b_ii`.
pub fn bivector_bottom(chain: &FiniteChain, b: &[QMatrix]) -> Result<Vec<QMatrix>> {
    chain.check_diag(b)?;
    let m = chain.top_index();
    Ok((0..m)
        .map(|i| {
            if i == 0 {
                QMatrix::zeros(chain.dims[1], chain.dims[0])
            } else {
                chain.maps[i].mul(&b[i])
            }
        })
        .collect())
}

/// Iterates over the basis of the subdiagonal input space.
fn for_each_subdiag_basis(chain: &FiniteChain, mut f: impl FnMut(&[QMatrix])) {
    let m = chain.top_index();
    let empty: Vec<QMatrix> = (0..m)
        .map(|i| QMatrix::zeros(chain.dims[i], chain.dims[i + 1]))
        .collect();
    for slot in 0..m {
        for r in 0..chain.dims[slot] {
            for c in 0..chain.dims[slot + 1] {
                let mut a = empty.clone();
                a[slot] = QMatrix::unit(chain.dims[slot], chain.dims[slot + 1], r, c);
                f(&a);
            }
        }
    }
}

fn for_each_diag_basis(chain: &FiniteChain, mut f: impl FnMut(&[QMatrix])) {
    let m = chain.top_index();
    let empty: Vec<QMatrix> = (0..=m)
        .map(|i| QMatrix::zeros(chain.dims[i], chain.dims[i]))
        .collect();
    for slot in 0..=m {
        for r in 0..chain.dims[slot] {
            for c in 0..chain.dims[slot] {
                let mut b = empty.clone();
                b[slot] = QMatrix::unit(chain.dims[slot], chain.dims[slot], r, c);
                f(&b);
            }
        }
    }
}

/// Exact residual of `bivector_bottom . dh_vee - dh . bivector_top` on a
/// basis of the subdiagonal space. Zero for every chain, including chains
/// whose consecutive composites do not vanish.
pub fn chain_map_check(chain: &FiniteChain) -> Result<BigRational> {
    if chain.top_index() < 1 {
        return Err(Error::Shape(
            "chain_map_check needs at least one structure map".into(),
        ));
    }
    let mut residual = BigRational::zero();
    for_each_subdiag_basis(chain, |a| {
        let lhs = bivector_bottom(chain, &dh_vee(chain, a).unwrap()).unwrap();
        let rhs = dh(chain, &bivector_top(chain, a).unwrap()).unwrap();
        for (l, r) in lhs.iter().zip(&rhs) {
            residual += l.sub(r).abs_sum();
        }
    });
    Ok(residual)
}

/// Residuals of the alternative bivector representative on an `m = 2`
/// chain: the chain-map property of the primed maps, and the homotopy `H`
/// (projection onto the middle diagonal component) connecting the two
/// representatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AltRepresentativeResiduals {
    pub chain_map: BigRational,
    pub homotopy: BigRational,
}

fn require_m2(chain: &FiniteChain, what: &str) -> Result<()> {
    if chain.top_index() != 2 {
        return Err(Error::Shape(format!(
            "{what} is defined for chains V_0 -> V_1 -> V_2, got {} spaces",
            chain.dims.len()
        )));
    }
    Ok(())
}

pub fn alt_representative_check(chain: &FiniteChain) -> Result<AltRepresentativeResiduals> {
    require_m2(chain, "alt_representative_check")?;
    let d0 = &chain.maps[0];
    let d1 = &chain.maps[1];

    // top'(a_10, a_21) = (a_10 d, a_21 d, d a_21), bottom'(b) = (b_11 d, 0)
    let top_alt = |a: &[QMatrix]| vec![a[0].mul(d0), a[1].mul(d1), d1.mul(&a[1])];
    let bottom_alt =
        |b: &[QMatrix]| vec![b[1].mul(d0), QMatrix::zeros(chain.dims[2], chain.dims[1])];
    // H projects a diagonal tuple onto its middle component
    let proj_mid = |c: &[QMatrix]| {
        vec![
            QMatrix::zeros(chain.dims[0], chain.dims[0]),
            c[1].clone(),
            QMatrix::zeros(chain.dims[2], chain.dims[2]),
        ]
    };

    let mut chain_map = BigRational::zero();
    let mut homotopy = BigRational::zero();
    for_each_subdiag_basis(chain, |a| {
        let dv = dh_vee(chain, a).unwrap();
        let lhs = bottom_alt(&dv);
        let rhs = dh(chain, &top_alt(a)).unwrap();
        for (l, r) in lhs.iter().zip(&rhs) {
            chain_map += l.sub(r).abs_sum();
        }
        // top - top' = H . dh_vee
        let top = bivector_top(chain, a).unwrap();
        let talt = top_alt(a);
        let h_dv = proj_mid(&dv);
        for i in 0..3 {
            homotopy += top[i].sub(&talt[i]).sub(&h_dv[i]).abs_sum();
        }
    });
    for_each_diag_basis(chain, |b| {
        // bottom - bottom' = dh . H
        let bottom = bivector_bottom(chain, b).unwrap();
        let balt = bottom_alt(b);
        let dh_h = dh(chain, &proj_mid(b)).unwrap();
        for i in 0..2 {
            homotopy += bottom[i].sub(&balt[i]).sub(&dh_h[i]).abs_sum();
        }
    });
    Ok(AltRepresentativeResiduals {
        chain_map,
        homotopy,
    })
}

/// Residuals of the homotopy relations `phi + h . del_vee = Delta . top`
/// and `del . h = bottom . tau` on an `m = 2` chain, where the product
/// complex carries tuples `((b_00, b_11), (b'_11, b_22))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomotopyResiduals {
    pub top_relation: BigRational,
    pub bottom_relation: BigRational,
}

pub fn homotopy_h_check(chain: &FiniteChain) -> Result<HomotopyResiduals> {
    require_m2(chain, "homotopy_h_check")?;
    let d0 = &chain.maps[0];
    let d1 = &chain.maps[1];
    let (n0, n1, n2) = (chain.dims[0], chain.dims[1], chain.dims[2]);

    // product tuples are (b_00, b_11, b'_11, b_22)
    let phi = |a: &[QMatrix]| vec![a[0].mul(d0), d0.mul(&a[0]), a[1].mul(d1), d1.mul(&a[1])];
    let h = |t: &[QMatrix]| {
        vec![
            QMatrix::zeros(n0, n0),
            QMatrix::zeros(n1, n1),
            t[1].sub(&t[2]),
            QMatrix::zeros(n2, n2),
        ]
    };
    let delta = |c: &[QMatrix]| vec![c[0].clone(), c[1].clone(), c[1].clone(), c[2].clone()];
    let tau_map = |t: &[QMatrix]| vec![t[0].clone(), t[1].sub(&t[2]), t[3].clone()];
    let del = |t: &[QMatrix]| {
        vec![
            d0.mul(&t[0]).sub(&t[1].mul(d0)),
            d1.mul(&t[2]).sub(&t[3].mul(d1)),
        ]
    };

    let mut top_relation = BigRational::zero();
    for_each_subdiag_basis(chain, |a| {
        // del_vee carries the same formula as phi on this square
        let p = phi(a);
        let hd = h(&phi(a));
        let lhs: Vec<QMatrix> = (0..4).map(|i| p[i].add(&hd[i])).collect();
        let rhs = delta(&bivector_top(chain, a).unwrap());
        for i in 0..4 {
            top_relation += lhs[i].sub(&rhs[i]).abs_sum();
        }
    });

    let mut bottom_relation = BigRational::zero();
    // basis of the product space: four independent slots
    let slots = [(0usize, n0), (1, n1), (2, n1), (3, n2)];
    for (slot, dim) in slots {
        for r in 0..dim {
            for c in 0..dim {
                let mut t = vec![
                    QMatrix::zeros(n0, n0),
                    QMatrix::zeros(n1, n1),
                    QMatrix::zeros(n1, n1),
                    QMatrix::zeros(n2, n2),
                ];
                t[slot] = QMatrix::unit(dim, dim, r, c);
                let lhs = del(&h(&t));
                let rhs = bivector_bottom(chain, &tau_map(&t)).unwrap();
                for i in 0..2 {
                    bottom_relation += lhs[i].sub(&rhs[i]).abs_sum();
                }
            }
        }
    }
    Ok(HomotopyResiduals {
        top_relation,
        bottom_relation,
    })
}

/// Residuals of the composition-map diagram on an `m = 2` chain: the left
/// column must send `a_20` to `(a_20 d^2, d^2 a_20)` and the right column
/// must vanish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diag1Residuals {
    pub left_column: BigRational,
    pub right_column: BigRational,
}

pub fn diag1_check(chain: &FiniteChain) -> Result<Diag1Residuals> {
    require_m2(chain, "diag1_check")?;
    let d0 = &chain.maps[0];
    let d1 = &chain.maps[1];
    let dd = d1.mul(d0); // d^2: V_0 -> V_2
    let (n0, n1, n2) = (chain.dims[0], chain.dims[1], chain.dims[2]);

    let mut left_column = BigRational::zero();
    // basis of E_20 = Hom(V_2, V_0): matrices n0 x n2
    for r in 0..n0 {
        for c in 0..n2 {
            let a20 = QMatrix::unit(n0, n2, r, c);
            // cotangent map a_20 -> (a_20 d, d a_20) in E_10 + E_21
            let a = vec![a20.mul(d1), d0.mul(&a20)];
            let top = bivector_top(chain, &a).unwrap();
            // project onto E_00 + E_22 and compare with (a_20 d^2, d^2 a_20)
            left_column += top[0].sub(&a20.mul(&dd)).abs_sum();
            left_column += top[2].sub(&dd.mul(&a20)).abs_sum();
        }
    }

    let mut right_column = BigRational::zero();
    // basis of E_00 + E_22, included as (b_00, 0, b_22)
    let mut push_right = |b: &[QMatrix]| {
        let bottom = bivector_bottom(chain, b).unwrap();
        // mu_vee(c_01, c_12) = d c_01 + c_12 d
        let out = d1.mul(&bottom[0]).add(&bottom[1].mul(d0));
        right_column += out.abs_sum();
    };
    for r in 0..n0 {
        for c in 0..n0 {
            push_right(&[
                QMatrix::unit(n0, n0, r, c),
                QMatrix::zeros(n1, n1),
                QMatrix::zeros(n2, n2),
            ]);
        }
    }
    for r in 0..n2 {
        for c in 0..n2 {
            push_right(&[
                QMatrix::zeros(n0, n0),
                QMatrix::zeros(n1, n1),
                QMatrix::unit(n2, n2, r, c),
            ]);
        }
    }
    Ok(Diag1Residuals {
        left_column,
        right_column,
    })
}

/// Exact residual between the top map of the window `V_a -> ... -> V_b`
/// (with global indexing, so the boundary term belongs to global index
/// zero) and the component-restriction of the full top map to inputs
/// `a_{i,i-1}` with `a < i <= b` and outputs indexed by `a <= i <= b`.
/// Any leakage of the restricted full map outside the window is added to
/// the residual as well.
pub fn truncation_check(chain: &FiniteChain, a: usize, b: usize) -> Result<BigRational> {
    let m = chain.top_index();
    if a > b || b > m {
        return Err(Error::Window(format!(
            "need 0 <= a <= b <= {m}, got ({a}, {b})"
        )));
    }
    let window = FiniteChain {
        dims: chain.dims[a..=b].to_vec(),
        maps: chain.maps[a..b].to_vec(),
    };
    let mut residual = BigRational::zero();
    if a == b {
        // no inputs; both sides are the zero map into E_aa
        return Ok(residual);
    }
    // basis over window inputs a_{i,i-1}, a < i <= b
    for slot in a..b {
        for r in 0..chain.dims[slot] {
            for c in 0..chain.dims[slot + 1] {
                let mut full_in: Vec<QMatrix> = (0..m)
                    .map(|i| QMatrix::zeros(chain.dims[i], chain.dims[i + 1]))
                    .collect();
                full_in[slot] = QMatrix::unit(chain.dims[slot], chain.dims[slot + 1], r, c);
                let full_out = bivector_top(chain, &full_in)?;

                let mut win_in: Vec<QMatrix> = (0..(b - a))
                    .map(|i| QMatrix::zeros(window.dims[i], window.dims[i + 1]))
                    .collect();
                win_in[slot - a] = QMatrix::unit(chain.dims[slot], chain.dims[slot + 1], r, c);
                let win_out = bivector_top_from(&window, a, &win_in);

                for i in 0..=m {
                    if i >= a && i <= b {
                        residual += full_out[i].sub(&win_out[i - a]).abs_sum();
                    } else {
                        // window-supported inputs must not leak outside
                        residual += full_out[i].abs_sum();
                    }
                }
            }
        }
    }
    Ok(residual)
}

// ---------------------------------------------------------------------------
// JSON wire format: dims plus maps of "p/q" strings
// ---------------------------------------------------------------------------

pub(crate) fn rational_to_string(v: &BigRational) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

fn rational_from_string(s: &str) -> Result<BigRational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = num
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator in {s:?}")))?;
    let d: BigInt = den
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator in {s:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

impl Serialize for FiniteChain {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            dims: &'a [usize],
            maps: Vec<Vec<Vec<String>>>,
        }
        let maps = self
            .maps
            .iter()
            .map(|m| {
                (0..m.rows())
                    .map(|r| {
                        (0..m.cols())
                            .map(|c| rational_to_string(m.get(r, c)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Repr {
            dims: &self.dims,
            maps,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteChain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            dims: Vec<usize>,
            maps: Vec<Vec<Vec<String>>>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let mut maps = Vec::with_capacity(repr.maps.len());
        for (i, rows) in repr.maps.iter().enumerate() {
            let nrows = rows.len();
            let ncols = rows.first().map_or(0, |r| r.len());
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(D::Error::custom(format!("ragged matrix for map {i}")));
            }
            let mut m = QMatrix::zeros(nrows, ncols);
            for (r, row) in rows.iter().enumerate() {
                for (c, s) in row.iter().enumerate() {
                    m.set(r, c, rational_from_string(s).map_err(D::Error::custom)?);
                }
            }
            maps.push(m);
        }
        FiniteChain::new(repr.dims, maps).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn identity(n: usize) -> QMatrix {
        QMatrix::from_fn(n, n, |r, c| if r == c { q(1, 1) } else { q(0, 1) })
    }

    fn random_chain(dims: &[usize], seed: u64) -> FiniteChain {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FiniteChain::random(dims, &mut rng)
    }

    fn random_subdiag(chain: &FiniteChain, seed: u64) -> Vec<QMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..chain.top_index())
            .map(|i| QMatrix::random(chain.dims[i], chain.dims[i + 1], &mut rng))
            .collect()
    }

    fn random_diag(chain: &FiniteChain, seed: u64) -> Vec<QMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..=chain.top_index())
            .map(|i| QMatrix::random(chain.dims[i], chain.dims[i], &mut rng))
            .collect()
    }

    /// Elementwise oracle for dh, coded independently from the formula.
    fn dh_oracle(chain: &FiniteChain, b: &[QMatrix]) -> Vec<QMatrix> {
        let m = chain.top_index();
        (0..m)
            .map(|i| {
                QMatrix::from_fn(chain.dims[i + 1], chain.dims[i], |r, c| {
                    let mut acc = BigRational::zero();
                    for k in 0..chain.dims[i] {
                        acc += chain.maps[i].get(r, k) * b[i].get(k, c);
                    }
                    for k in 0..chain.dims[i + 1] {
                        acc -= b[i + 1].get(r, k) * chain.maps[i].get(k, c);
                    }
                    acc
                })
            })
            .collect()
    }

    fn top_oracle(chain: &FiniteChain, a: &[QMatrix]) -> Vec<QMatrix> {
        let m = chain.top_index();
        let mut out = Vec::new();
        out.push(QMatrix::from_fn(chain.dims[0], chain.dims[0], |r, c| {
            let mut acc = BigRational::zero();
            for k in 0..chain.dims[1] {
                acc += a[0].get(r, k) * chain.maps[0].get(k, c);
            }
            acc
        }));
        for i in 1..=m {
            out.push(QMatrix::from_fn(chain.dims[i], chain.dims[i], |r, c| {
                let mut acc = BigRational::zero();
                for k in 0..chain.dims[i - 1] {
                    acc += chain.maps[i - 1].get(r, k) * a[i - 1].get(k, c);
                }
                acc
            }));
        }
        out
    }

    #[test]
    fn dh_identity_inputs_vanish() {
        let chain = random_chain(&[2, 3, 2], 1);
        let b: Vec<QMatrix> = chain.dims.iter().map(|&d| identity(d)).collect();
        let out = dh(&chain, &b).unwrap();
        assert!(out.iter().all(QMatrix::is_zero));
    }

    #[test]
    fn dh_single_slot() {
        // b = (b_00, 0, 0) gives (d b_00, 0)
        let chain = random_chain(&[2, 3, 2], 2);
        let mut b: Vec<QMatrix> = chain.dims.iter().map(|&d| QMatrix::zeros(d, d)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        b[0] = QMatrix::random(2, 2, &mut rng);
        let out = dh(&chain, &b).unwrap();
        assert_eq!(out[0], chain.maps[0].mul(&b[0]));
        assert!(out[1].is_zero());
    }

    #[test]
    fn dh_matches_elementwise_oracle() {
        for seed in 0..50 {
            let chain = random_chain(&[2, 3, 2], seed);
            let b = random_diag(&chain, seed + 1000);
            assert_eq!(dh(&chain, &b).unwrap(), dh_oracle(&chain, &b));
        }
    }

    #[test]
    fn dh_vee_examples() {
        // m=2, a = (a_10, 0) gives (-a_10 d, d a_10, 0)
        let chain = random_chain(&[2, 3, 2], 4);
        let mut a = vec![QMatrix::zeros(2, 3), QMatrix::zeros(3, 2)];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        a[0] = QMatrix::random(2, 3, &mut rng);
        let out = dh_vee(&chain, &a).unwrap();
        assert_eq!(out[0], a[0].mul(&chain.maps[0]).neg());
        assert_eq!(out[1], chain.maps[0].mul(&a[0]));
        assert!(out[2].is_zero());

        let zero = vec![QMatrix::zeros(2, 3), QMatrix::zeros(3, 2)];
        assert!(dh_vee(&chain, &zero).unwrap().iter().all(QMatrix::is_zero));
    }

    #[test]
    fn dh_dh_vee_trace_adjointness() {
        // <dh_vee(a), b> + <a, dh(b)> = 0 with the trace pairings
        for seed in 0..30 {
            let chain = random_chain(&[2, 3, 2, 4], seed);
            let a = random_subdiag(&chain, seed + 100);
            let b = random_diag(&chain, seed + 200);
            let dv = dh_vee(&chain, &a).unwrap();
            let db = dh(&chain, &b).unwrap();
            let mut pairing = BigRational::zero();
            for i in 0..=chain.top_index() {
                pairing += dv[i].mul(&b[i]).trace();
            }
            for i in 0..chain.top_index() {
                pairing += a[i].mul(&db[i]).trace();
            }
            assert!(pairing.is_zero(), "seed {seed}");
        }
    }

    #[test]
    fn bivector_top_examples() {
        let chain = random_chain(&[2, 3, 2], 6);
        let a = random_subdiag(&chain, 7);
        let out = bivector_top(&chain, &a).unwrap();
        assert_eq!(out[0], a[0].mul(&chain.maps[0]));
        assert_eq!(out[1], chain.maps[0].mul(&a[0]));
        assert_eq!(out[2], chain.maps[1].mul(&a[1]));

        let zero = vec![QMatrix::zeros(2, 3), QMatrix::zeros(3, 2)];
        assert!(bivector_top(&chain, &zero)
            .unwrap()
            .iter()
            .all(QMatrix::is_zero));

        // m = 4 random, against the independently coded oracle
        let chain = random_chain(&[2, 1, 3, 2, 2], 8);
        let a = random_subdiag(&chain, 9);
        assert_eq!(bivector_top(&chain, &a).unwrap(), top_oracle(&chain, &a));
    }

    #[test]
    fn bivector_bottom_examples() {
        let chain = random_chain(&[2, 3, 2], 10);
        let b: Vec<QMatrix> = chain.dims.iter().map(|&d| identity(d)).collect();
        let out = bivector_bottom(&chain, &b).unwrap();
        assert!(out[0].is_zero());
        assert_eq!(out[1], chain.maps[1]);

        let b = random_diag(&chain, 11);
        let out = bivector_bottom(&chain, &b).unwrap();
        assert!(out[0].is_zero());
        assert_eq!(out[1], chain.maps[1].mul(&b[1]));

        let chain = random_chain(&[1, 2, 2, 3], 12);
        let b = random_diag(&chain, 13);
        let out = bivector_bottom(&chain, &b).unwrap();
        assert!(out[0].is_zero());
        assert_eq!(out[1], chain.maps[1].mul(&b[1]));
        assert_eq!(out[2], chain.maps[2].mul(&b[2]));
    }

    #[test]
    fn chain_map_check_zero_on_random_chains() {
        for seed in 0..50 {
            let chain = random_chain(&[2, 3, 2], seed);
            assert!(chain_map_check(&chain).unwrap().is_zero(), "seed {seed}");
        }
        let chain = FiniteChain::new(
            vec![2, 3, 2],
            vec![QMatrix::zeros(3, 2), QMatrix::zeros(2, 3)],
        )
        .unwrap();
        assert!(chain_map_check(&chain).unwrap().is_zero());
        let chain = random_chain(&[1, 1, 1, 1, 1], 99);
        assert!(chain_map_check(&chain).unwrap().is_zero());
    }

    #[test]
    fn chain_map_check_with_nonzero_composites() {
        // all-ones differentials compose to nonzero maps
        let ones = |r: usize, c: usize| QMatrix::from_fn(r, c, |_, _| q(1, 1));
        let chain = FiniteChain::new(vec![2, 3, 2], vec![ones(3, 2), ones(2, 3)]).unwrap();
        assert!(chain.has_nonzero_composite());
        assert!(chain_map_check(&chain).unwrap().is_zero());
    }

    #[test]
    fn alt_representative_zero() {
        for (dims, seed) in [([2usize, 2, 2], 0u64), ([1, 3, 1], 1), ([2, 3, 2], 2)] {
            let chain = random_chain(&dims, seed);
            let res = alt_representative_check(&chain).unwrap();
            assert!(res.chain_map.is_zero());
            assert!(res.homotopy.is_zero());
        }
        let chain = FiniteChain::new(
            vec![2, 2, 2],
            vec![QMatrix::zeros(2, 2), QMatrix::zeros(2, 2)],
        )
        .unwrap();
        let res = alt_representative_check(&chain).unwrap();
        assert!(res.chain_map.is_zero() && res.homotopy.is_zero());
    }

    #[test]
    fn homotopy_h_zero() {
        for (dims, seed) in [([2usize, 3, 2], 0u64), ([1, 1, 1], 1)] {
            let chain = random_chain(&dims, seed);
            let res = homotopy_h_check(&chain).unwrap();
            assert!(res.top_relation.is_zero());
            assert!(res.bottom_relation.is_zero());
        }
        let chain = FiniteChain::new(
            vec![2, 3, 2],
            vec![QMatrix::zeros(3, 2), QMatrix::zeros(2, 3)],
        )
        .unwrap();
        let res = homotopy_h_check(&chain).unwrap();
        assert!(res.top_relation.is_zero() && res.bottom_relation.is_zero());
    }

    #[test]
    fn diag1_zero() {
        for seed in 0..20 {
            let chain = random_chain(&[2, 3, 2], seed);
            let res = diag1_check(&chain).unwrap();
            assert!(res.left_column.is_zero(), "seed {seed}");
            assert!(res.right_column.is_zero(), "seed {seed}");
        }
        for seed in 0..5 {
            let chain = random_chain(&[3, 2, 3], seed);
            let res = diag1_check(&chain).unwrap();
            assert!(res.left_column.is_zero() && res.right_column.is_zero());
        }
        let chain = FiniteChain::new(
            vec![2, 3, 2],
            vec![QMatrix::zeros(3, 2), QMatrix::zeros(2, 3)],
        )
        .unwrap();
        let res = diag1_check(&chain).unwrap();
        assert!(res.left_column.is_zero() && res.right_column.is_zero());
    }

    #[test]
    fn truncation_windows() {
        let chain = random_chain(&[2, 3, 2, 1, 2], 17);
        let m = chain.top_index();
        assert!(truncation_check(&chain, 0, m).unwrap().is_zero());
        assert!(truncation_check(&chain, 1, 3).unwrap().is_zero());
        for a in 0..=m {
            for b in a..=m {
                assert!(truncation_check(&chain, a, b).unwrap().is_zero());
            }
        }
        assert!(truncation_check(&chain, 3, 2).is_err());
        assert!(truncation_check(&chain, 0, m + 1).is_err());
    }

    #[test]
    fn hom_element_shapes() {
        let chain = random_chain(&[2, 3, 2], 0);
        assert!(HomElement::new(&chain, 1, 0, QMatrix::zeros(2, 3)).is_ok());
        assert!(HomElement::new(&chain, 1, 0, QMatrix::zeros(3, 2)).is_err());
        assert!(HomElement::new(&chain, 5, 0, QMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn shape_errors() {
        let chain = random_chain(&[2, 3, 2], 0);
        assert!(dh(&chain, &[identity(2)]).is_err());
        assert!(dh(&chain, &[identity(2), identity(3), identity(3)]).is_err());
        assert!(dh_vee(&chain, &[QMatrix::zeros(3, 2), QMatrix::zeros(2, 3)]).is_err());
        assert!(chain_map_check(&random_chain(&[4], 0)).is_err());
        assert!(alt_representative_check(&random_chain(&[2, 2], 0)).is_err());
        assert!(FiniteChain::new(vec![2, 0], vec![QMatrix::zeros(0, 2)]).is_err());
        assert!(FiniteChain::new(vec![2, 3], vec![QMatrix::zeros(2, 3)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let chain = random_chain(&[2, 3, 2], 23);
        let text = serde_json::to_string(&chain).unwrap();
        let back: FiniteChain = serde_json::from_str(&text).unwrap();
        assert_eq!(chain, back);
        // the wire format is dims plus "p/q" strings
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["dims"], serde_json::json!([2, 3, 2]));
        assert!(v["maps"][0][0][0].as_str().unwrap().contains('/'));

        let parsed: FiniteChain =
            serde_json::from_str(r#"{"dims":[1,2],"maps":[[["1/2"],["-3"]]]}"#).unwrap();
        assert_eq!(parsed.maps[0].get(0, 0), &q(1, 2));
        assert_eq!(parsed.maps[0].get(1, 0), &q(-3, 1));
        assert!(
            serde_json::from_str::<FiniteChain>(r#"{"dims":[1,2],"maps":[[["1/0"]]]}"#).is_err()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prop_chain_map_identity(dims in proptest::collection::vec(1usize..=4, 2..=5), seed in 0u64..1u64 << 32) {
            let chain = random_chain(&dims, seed);
            prop_assert!(chain_map_check(&chain).unwrap().is_zero());
        }

        #[test]
        fn prop_truncation_identity(dims in proptest::collection::vec(1usize..=4, 2..=5), seed in 0u64..1u64 << 32) {
            let chain = random_chain(&dims, seed);
            let m = chain.top_index();
            for a in 0..=m {
                for b in a..=m {
                    prop_assert!(truncation_check(&chain, a, b).unwrap().is_zero());
                }
            }
        }
    }
}
