//! Exact integer and rational calculus attached to a coprime pair `(n, k)`:
//! negative continued fractions, tridiagonal determinants, convergents,
//! subquotient ranks/degrees and slopes, index partitions, the endomorphism
//! dimension identity, and determinant-line-bundle degrees.
//!
//! Everything in this module is computed over arbitrary-precision integers
//! and rationals; there is no floating point and no tolerance anywhere.

use crate::error::{Error, Result};
use num::{BigInt, BigRational, One, Zero};

/// A `(rank, degree)` pair of integers.
///
/// Rank `-1` is admitted so that the boundary vector `(-1, 0)` used in the
/// determinant-line computation is a legal value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KClass {
    pub rank: BigInt,
    pub degree: BigInt,
}

impl KClass {
    /// Panics if `rank < -1`; every rank that occurs in this crate is a
    /// sheaf rank or the boundary convention `-1`.
    pub fn new(rank: impl Into<BigInt>, degree: impl Into<BigInt>) -> Self {
        let rank = rank.into();
        assert!(
            rank >= BigInt::from(-1),
            "KClass rank must be >= -1, got {rank}"
        );
        KClass {
            rank,
            degree: degree.into(),
        }
    }
}

/// Euler pairing `chi(v, w) = deg(w) rk(v) - deg(v) rk(w)`.
///
/// Bilinear and antisymmetric in its arguments.
pub fn euler_form(v: &KClass, w: &KClass) -> BigInt {
    &w.degree * &v.rank - &v.degree * &w.rank
}

/// Determinant of the tridiagonal matrix with diagonal `seq` and both
/// off-diagonals equal to `-1`, by the three-term recursion
/// `D(s_1..s_j) = s_j * D(s_1..s_{j-1}) - D(s_1..s_{j-2})`,
/// with `D() = 1` and `D(a) = a`.
pub fn tridiag_det(seq: &[BigInt]) -> BigInt {
    let mut prev = BigInt::one(); // D of the empty sequence
    let mut cur = BigInt::one();
    for (j, s) in seq.iter().enumerate() {
        let next = if j == 0 {
            s.clone()
        } else {
            s * &cur - &prev
        };
        prev = cur;
        cur = next;
    }
    cur
}

/// Negative continued fraction expansion `n/k = n_1 - 1/(n_2 - 1/(...))`
/// with every `n_i >= 2`, unique for coprime `0 < k < n`.
///
/// Uses the ceiling-quotient recursion `n_1 = ceil(n/k)`, then recurses on
/// `k / (n_1 k - n)`.
pub fn negative_cf(n: &BigInt, k: &BigInt) -> Result<Vec<BigInt>> {
    if k <= &BigInt::zero() {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    if k >= n {
        return Err(Error::Domain(format!("need 0 < k < n, got n={n}, k={k}")));
    }
    let g = num::Integer::gcd(n, k);
    if !g.is_one() {
        return Err(Error::Domain(format!(
            "n and k must be coprime, gcd({n}, {k}) = {g}"
        )));
    }
    let mut expansion = Vec::new();
    let mut a = n.clone();
    let mut b = k.clone();
    loop {
        // ceil(a / b) for positive a, b
        let q = (&a + &b - BigInt::one()) / &b;
        expansion.push(q.clone());
        let r = q * &b - &a;
        if r.is_zero() {
            break;
        }
        a = b;
        b = r;
    }
    Ok(expansion)
}

/// All exact data attached to a coprime pair `(n, k)`: the expansion, the
/// convergents `n(i), k(i)`, the subquotient ranks `r(i)`, degrees `d(i)`,
/// and slopes `s(i) = d(i)/r(i)`.
///
/// Index lists run over `0..=p`, with the conventions `n(p) = 1`, `k(p) = 0`
/// and `r(p) = d(p) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainInvariants {
    pub n: BigInt,
    pub k: BigInt,
    pub expansion: Vec<BigInt>,
    pub nconv: Vec<BigInt>,
    pub kconv: Vec<BigInt>,
    pub subranks: Vec<BigInt>,
    pub subdegs: Vec<BigInt>,
    pub slopes: Vec<BigRational>,
}

impl ChainInvariants {
    /// Length of the expansion.
    pub fn p(&self) -> usize {
        self.expansion.len()
    }
}

/// Computes [`ChainInvariants`] for a coprime pair, cross-checking the
/// difference formulas `r(i) = k(i) - k(i+1)`, `d(i) = n(i) - n(i+1)`
/// against the determinant formulas with a decremented last entry.
pub fn chain_invariants(n: &BigInt, k: &BigInt) -> Result<ChainInvariants> {
    let expansion = negative_cf(n, k)?;
    let p = expansion.len();

    // n(i) = D(n_1..n_{p-i}),  k(i) = D(n_2..n_{p-i}),  n(p)=1, k(p)=0.
    let mut nconv = Vec::with_capacity(p + 1);
    let mut kconv = Vec::with_capacity(p + 1);
    for i in 0..=p {
        let upto = p - i;
        nconv.push(tridiag_det(&expansion[..upto]));
        if upto >= 1 {
            kconv.push(tridiag_det(&expansion[1..upto]));
        } else {
            kconv.push(BigInt::zero());
        }
    }
    assert_eq!(&nconv[0], n, "D(n_1..n_p) must reproduce n");
    assert_eq!(&kconv[0], k, "D(n_2..n_p) must reproduce k");
    assert!(nconv[p].is_one() && kconv[p].is_zero());

    // determinant identity n(i+1) k(i) - n(i) k(i+1) = 1
    for i in 0..p {
        let det = &nconv[i + 1] * &kconv[i] - &nconv[i] * &kconv[i + 1];
        assert!(det.is_one(), "convergent identity failed at i={i}");
    }
    // Laplace recursions n(i) = n_{p-i} n(i+1) - n(i+2), same for k
    for i in 0..p.saturating_sub(1) {
        let coeff = &expansion[p - i - 1];
        assert_eq!(nconv[i], coeff * &nconv[i + 1] - &nconv[i + 2]);
        assert_eq!(kconv[i], coeff * &kconv[i + 1] - &kconv[i + 2]);
    }

    // r(i) = k(i) - k(i+1), d(i) = n(i) - n(i+1); r(p) = d(p) = 1.
    let mut subranks = Vec::with_capacity(p + 1);
    let mut subdegs = Vec::with_capacity(p + 1);
    for i in 0..p {
        subranks.push(&kconv[i] - &kconv[i + 1]);
        subdegs.push(&nconv[i] - &nconv[i + 1]);
    }
    subranks.push(BigInt::one());
    subdegs.push(BigInt::one());

    // cross-check against D with the last entry decremented
    for i in 0..p {
        let upto = p - i;
        let dec_last = |seq: &[BigInt]| -> BigInt {
            let mut s = seq.to_vec();
            if let Some(last) = s.last_mut() {
                *last -= 1;
            }
            tridiag_det(&s)
        };
        assert_eq!(
            subranks[i],
            dec_last(&expansion[1..upto]),
            "r({i}) determinant cross-check failed"
        );
        assert_eq!(
            subdegs[i],
            dec_last(&expansion[..upto]),
            "d({i}) determinant cross-check failed"
        );
    }

    let slopes: Vec<BigRational> = subdegs
        .iter()
        .zip(&subranks)
        .map(|(d, r)| BigRational::new(d.clone(), r.clone()))
        .collect();

    // strict monotonicity and the slope chain n/k > s(0) >= ... >= s(p) = 1
    for i in 0..p {
        assert!(nconv[i] > nconv[i + 1] && kconv[i] > kconv[i + 1]);
    }
    let top = BigRational::new(n.clone(), k.clone());
    assert!(top > slopes[0], "slope chain must start below n/k");
    for i in 0..p {
        assert!(slopes[i] >= slopes[i + 1], "slopes must be non-increasing");
    }
    assert!(slopes[p].is_one());

    Ok(ChainInvariants {
        n: n.clone(),
        k: k.clone(),
        expansion,
        nconv,
        kconv,
        subranks,
        subdegs,
        slopes,
    })
}

/// An ordered partition of `{0, ..., p}` into consecutive runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionBlocks {
    pub blocks: Vec<Vec<usize>>,
}

impl PartitionBlocks {
    /// Builds the partition of `{0..=p}` whose blocks are the maximal runs
    /// under the relation `i ~ i+1 iff glue(i)`.
    fn from_glue(p: usize, glue: impl Fn(usize) -> bool) -> Self {
        let mut blocks = Vec::new();
        let mut current = vec![0usize];
        for i in 0..p {
            if glue(i) {
                current.push(i + 1);
            } else {
                blocks.push(std::mem::replace(&mut current, vec![i + 1]));
            }
        }
        blocks.push(current);
        PartitionBlocks { blocks }
    }

    /// Multiset of block sizes, ascending.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.blocks.iter().map(|b| b.len()).collect();
        sizes.sort_unstable();
        sizes
    }

    /// Checks that the blocks are nonempty consecutive runs covering
    /// `{0..=p}` in order.
    pub fn is_valid_over(&self, p: usize) -> bool {
        let mut expect = 0usize;
        for block in &self.blocks {
            if block.is_empty() {
                return false;
            }
            for &i in block {
                if i != expect {
                    return false;
                }
                expect += 1;
            }
        }
        expect == p + 1
    }
}

/// Partition of `{0, ..., p}` generated by `i ~ i+1` iff the expansion
/// entry `n_{i+1}` equals `2`; blocks are maximal runs.
pub fn tau_partition(expansion: &[BigInt]) -> PartitionBlocks {
    let two = BigInt::from(2);
    PartitionBlocks::from_glue(expansion.len(), |i| expansion[i] == two)
}

/// Partition of `{0, ..., p}` into maximal runs of equal slopes `s(i)`.
///
/// Index `p` carries the convention slope `1` and so joins the last run
/// exactly when `s(p-1) = 1`.
pub fn slope_classes(inv: &ChainInvariants) -> PartitionBlocks {
    PartitionBlocks::from_glue(inv.p(), |i| inv.slopes[i] == inv.slopes[i + 1])
}

/// `p + 1 + sum_{0 <= i1 < i2 <= p} [d(i1) r(i2) - d(i2) r(i1)]`.
///
/// The returned value always equals `n`; callers verify this rather than
/// the function asserting it, so the identity stays a genuine check.
pub fn dim_end(n: &BigInt, k: &BigInt) -> Result<BigInt> {
    let inv = chain_invariants(n, k)?;
    let p = inv.p();
    let mut total = BigInt::from(p as i64 + 1);
    for i1 in 0..=p {
        for i2 in (i1 + 1)..=p {
            total += &inv.subdegs[i1] * &inv.subranks[i2] - &inv.subdegs[i2] * &inv.subranks[i1];
        }
    }
    Ok(total)
}

/// Numerical shadow of the image of the bosonization map: the block-size
/// multiset of the tau partition, the ambient power `p + 1`, and the fiber
/// dimension `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageDescriptor {
    pub block_sizes: Vec<usize>,
    pub ambient_power: usize,
    pub fiber_dimension: usize,
    pub quotient_label: String,
}

pub fn image_descriptor(n: &BigInt, k: &BigInt) -> Result<ImageDescriptor> {
    let expansion = negative_cf(n, k)?;
    let p = expansion.len();
    let tau = tau_partition(&expansion);
    Ok(ImageDescriptor {
        block_sizes: tau.block_sizes(),
        ambient_power: p + 1,
        fiber_dimension: p,
        quotient_label: format!(
            "X^{}/S^tau_{}, fiber of addition map",
            p + 1,
            p + 1
        ),
    })
}

/// Degrees of the determinant line bundles `L_1, ..., L_p`, together with
/// the auxiliary Lambda-degree chain they are built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetLineDegrees {
    pub degrees: Vec<BigInt>,
    pub lambda_degrees: Vec<BigInt>,
}

/// Computes the Lambda-degrees `chi(v_{j-1}, v_{j+1})` with
/// `v_i = (k(i), n(i))` for `i <= p` and `v_{p+1} = (-1, 0)`, asserts each
/// equals the matching expansion entry `n_{p-j+1}`, and adds `+1` at the two
/// ends and `+2` in the interior (no increments when `p = 1`, where the
/// single degree is `n`).
pub fn det_line_degrees(n: &BigInt, k: &BigInt) -> Result<DetLineDegrees> {
    let inv = chain_invariants(n, k)?;
    let p = inv.p();

    let class = |i: usize| -> KClass {
        if i == p + 1 {
            KClass::new(-1, 0)
        } else {
            KClass {
                rank: inv.kconv[i].clone(),
                degree: inv.nconv[i].clone(),
            }
        }
    };

    let mut lambda_degrees = Vec::with_capacity(p);
    let mut degrees = Vec::with_capacity(p);
    for j in 1..=p {
        let lambda = euler_form(&class(j - 1), &class(j + 1));
        assert_eq!(
            lambda,
            inv.expansion[p - j],
            "Lambda-degree at j={j} must equal the reversed expansion entry"
        );
        let increment = if p == 1 {
            BigInt::zero()
        } else if j == 1 || j == p {
            BigInt::one()
        } else {
            BigInt::from(2)
        };
        degrees.push(&lambda + increment);
        lambda_degrees.push(lambda);
    }
    Ok(DetLineDegrees {
        degrees,
        lambda_degrees,
    })
}

/// Re-evaluates a negative continued fraction as an exact rational
/// `n_1 - 1/(n_2 - 1/(...))`.
pub fn evaluate_cf(expansion: &[BigInt]) -> BigRational {
    let mut value = BigRational::zero();
    for entry in expansion.iter().rev() {
        let e = BigRational::from_integer(entry.clone());
        value = if value.is_zero() {
            e
        } else {
            e - value.recip()
        };
    }
    value
}
