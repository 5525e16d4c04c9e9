//! Numerical evaluation of the odd theta function `theta(z | tau)`, its
//! logarithmic derivative `zeta = theta'/theta`, and the cyclic coefficient
//! `2[zeta(a) + zeta(b) + zeta(c)]` that powers the bracket entries.
//!
//! All evaluation goes through lattice reduction: an input `z` is written as
//! `z0 + m + n*tau` with `z0` in the fundamental cell, the rapidly convergent
//! sine series is summed at `z0`, and the exact quasi-periodicity factors are
//! reapplied. `zeta` picks up the exact constant `-2*pi*i` per `tau`-shift
//! and nothing per unit shift.

use crate::error::{Error, Result};
use num::complex::Complex64;
use std::f64::consts::PI;

/// Hard cap on the number of series terms. With `Im(tau) >= 0.1` the series
/// needs at most a few dozen terms at tolerance 1e-14.
const MAX_TERMS: usize = 500;

/// Modular parameter, derived nome, and evaluation guards.
#[derive(Debug, Clone, Copy)]
pub struct EllipticContext {
    tau: Complex64,
    nome: Complex64,
    pub truncation_tol: f64,
    pub min_separation: f64,
}

impl EllipticContext {
    /// Builds a context for the lattice `Z + Z*tau`. Fails unless
    /// `Im(tau) >= 0.1`, which also guarantees `|nome| < 1`.
    pub fn new(tau: Complex64) -> Result<Self> {
        if !tau.re.is_finite() || !tau.im.is_finite() || tau.im < 0.1 {
            return Err(Error::Domain(format!(
                "Im(tau) must be >= 0.1, got tau = {tau}"
            )));
        }
        let nome = (Complex64::i() * PI * tau).exp();
        debug_assert!(nome.norm() < 1.0);
        Ok(EllipticContext {
            tau,
            nome,
            truncation_tol: 1e-14,
            min_separation: 1e-6,
        })
    }

    pub fn with_min_separation(mut self, min_separation: f64) -> Self {
        assert!(min_separation > 0.0);
        self.min_separation = min_separation;
        self
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// The nome `q = exp(i*pi*tau)`.
    pub fn nome(&self) -> Complex64 {
        self.nome
    }
}

/// Result of reducing `z` modulo the lattice: `z = z0 + m + n_shift*tau`
/// with `-1/2 <= Re(z0) < 1/2` and `|Im(z0)| <= Im(tau)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeReduced {
    pub z0: Complex64,
    pub m: i64,
    pub n_shift: i64,
}

/// Writes `z = z0 + m + n_shift*tau` with `z0` in the fundamental cell.
pub fn reduce(z: Complex64, ctx: &EllipticContext) -> LatticeReduced {
    let n_shift = (z.im / ctx.tau.im).round();
    let z1 = z - ctx.tau * n_shift;
    let m = (z1.re + 0.5).floor();
    LatticeReduced {
        z0: z1 - m,
        m: m as i64,
        n_shift: n_shift as i64,
    }
}

/// Sums `2 * sum_{j>=0} (-1)^j q^{(j+1/2)^2} sin((2j+1) pi z)` together with
/// its first two z-derivatives, truncating when the next term drops below
/// `tol * max(1, |partial sum|)`.
fn theta_series(z: Complex64, ctx: &EllipticContext) -> (Complex64, Complex64, Complex64) {
    let log_q = Complex64::i() * PI * ctx.tau;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_d1 = Complex64::new(0.0, 0.0);
    let mut sum_d2 = Complex64::new(0.0, 0.0);
    for j in 0..MAX_TERMS {
        let half = j as f64 + 0.5;
        let odd = 2.0 * j as f64 + 1.0;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let q_pow = (log_q * (half * half)).exp();
        let phase = odd * PI * z;
        let term = sign * q_pow * phase.sin();
        if j > 0 && term.norm() < ctx.truncation_tol * sum.norm().max(1.0) {
            break;
        }
        sum += term;
        sum_d1 += sign * q_pow * (odd * PI) * phase.cos();
        sum_d2 -= sign * q_pow * (odd * PI) * (odd * PI) * phase.sin();
        if j + 1 == MAX_TERMS {
            panic!("theta series failed to converge within {MAX_TERMS} terms");
        }
    }
    (2.0 * sum, 2.0 * sum_d1, 2.0 * sum_d2)
}

/// The odd theta function `theta(z | tau)`, an entire function with simple
/// zeros exactly at the lattice points.
///
/// Evaluated after lattice reduction, reapplying the exact factors
/// `theta(z+1) = -theta(z)` and `theta(z+tau) = -q^{-1} e^{-2 pi i z} theta(z)`.
pub fn theta(z: Complex64, ctx: &EllipticContext) -> Complex64 {
    let r = reduce(z, ctx);
    let (t0, _, _) = theta_series(r.z0, ctx);
    if t0.norm() == 0.0 {
        // exact lattice zero; skip the factor, which can overflow for
        // large shifts
        return Complex64::new(0.0, 0.0);
    }
    quasi_factor(&r, ctx) * t0
}

/// `(-1)^{m+n} q^{-n^2} e^{-2 pi i n z0}` for `z = z0 + m + n*tau`.
fn quasi_factor(r: &LatticeReduced, ctx: &EllipticContext) -> Complex64 {
    let n = r.n_shift as f64;
    let sign = if (r.m + r.n_shift).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    let log_q = Complex64::i() * PI * ctx.tau;
    sign * (-log_q * (n * n) - Complex64::i() * 2.0 * PI * n * r.z0).exp()
}

fn guard_pole(r: &LatticeReduced, ctx: &EllipticContext) -> Result<()> {
    let distance = r.z0.norm();
    if distance < ctx.min_separation {
        return Err(Error::Pole {
            distance,
            min_separation: ctx.min_separation,
        });
    }
    Ok(())
}

/// Logarithmic derivative `zeta(z) = theta'(z)/theta(z)`.
///
/// Odd, 1-periodic, and satisfies `zeta(z + tau) = zeta(z) - 2 pi i`; these
/// quasi-period constants are applied exactly after reduction. Errors when
/// `z` reduces to within `min_separation` of a lattice point.
pub fn zeta(z: Complex64, ctx: &EllipticContext) -> Result<Complex64> {
    let r = reduce(z, ctx);
    guard_pole(&r, ctx)?;
    let (t0, t1, _) = theta_series(r.z0, ctx);
    Ok(t1 / t0 - Complex64::i() * 2.0 * PI * r.n_shift as f64)
}

/// Derivative of [`zeta`]: an even, fully lattice-periodic function with a
/// double pole at the lattice points.
pub fn zeta_d1(z: Complex64, ctx: &EllipticContext) -> Result<Complex64> {
    let r = reduce(z, ctx);
    guard_pole(&r, ctx)?;
    let (t0, t1, t2) = theta_series(r.z0, ctx);
    let logderiv = t1 / t0;
    Ok(t2 / t0 - logderiv * logderiv)
}

/// `2 [zeta(a) + zeta(b) + zeta(c)]` for arguments that sum to a lattice
/// point.
///
/// The quasi-period constants are balanced so the result only depends on the
/// three points modulo the lattice: if `a + b + c = M + N*tau` the value is
/// corrected by `+ 2 pi i N`, making it equal to the evaluation at lifts
/// summing to zero exactly.
pub fn cyclic_coeff(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    ctx: &EllipticContext,
) -> Result<Complex64> {
    let rs = reduce(a + b + c, ctx);
    if rs.z0.norm() > 1e-9 {
        return Err(Error::Domain(format!(
            "cyclic_coeff arguments must sum to a lattice point; residue {:e}",
            rs.z0.norm()
        )));
    }
    let balance = Complex64::i() * 2.0 * PI * rs.n_shift as f64;
    Ok(2.0 * (zeta(a, ctx)? + zeta(b, ctx)? + zeta(c, ctx)? + balance))
}
