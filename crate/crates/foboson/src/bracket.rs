//! The explicit Poisson bracket on a chart of `n` distinct points
//! `u_1, ..., u_n` (mod the lattice) and `n` nonzero values `y_1, ..., y_n`.
//!
//! Working coordinates are `(u_1, ..., u_n, v_2, ..., v_n)` with
//! `v_j = log(y_j / y_1)`; in these coordinates every bracket is either an
//! integer constant or a function of the `u`'s alone:
//!
//! - `{u_a, u_b} = 0`,
//! - `{v_j, u_k} = delta_jk - delta_1k`,
//! - `{v_j, v_k} = 2[zeta(u_1 - u_k) + zeta(u_k - u_j) + zeta(u_j - u_1)]`.
//!
//! On top of the matrix assembly the module provides the Jacobiator (with
//! analytic or finite-difference derivatives), the log-canonical change of
//! variables that kills the v-v block, and lattice-invariance checks.

use crate::elliptic::{cyclic_coeff, reduce, zeta, zeta_d1, EllipticContext};
use crate::error::{Error, Result};
use num::complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point of the bosonization chart: `n >= 2` pairwise-distinct complex
/// points modulo the lattice and `n` nonzero values.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonChart {
    pub points: Vec<Complex64>,
    pub values: Vec<Complex64>,
}

impl BosonChart {
    pub fn new(points: Vec<Complex64>, values: Vec<Complex64>) -> Self {
        BosonChart { points, values }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Rejects charts with fewer than two points, mismatched lengths, zero
    /// values, or a pair of points closer than `min_separation` modulo the
    /// lattice.
    pub fn validate(&self, ctx: &EllipticContext) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Domain(format!(
                "chart needs at least 2 points, got {}",
                self.points.len()
            )));
        }
        if self.points.len() != self.values.len() {
            return Err(Error::Domain(format!(
                "chart has {} points but {} values",
                self.points.len(),
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|y| y.norm() == 0.0) {
            return Err(Error::Domain(format!("value y_{} is zero", i + 1)));
        }
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                let dist = reduce(self.points[i] - self.points[j], ctx).z0.norm();
                if dist < ctx.min_separation {
                    return Err(Error::Domain(format!(
                        "points u_{} and u_{} coincide modulo the lattice (distance {dist:e})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Draws a chart with points uniform in the fundamental cell, resampling
    /// any point that lands within `sep` of an earlier one. Returns the
    /// chart and the number of rejected draws.
    pub fn random(
        n: usize,
        ctx: &EllipticContext,
        sep: f64,
        rng: &mut impl Rng,
    ) -> Result<(Self, u64)> {
        assert!(n >= 2);
        let mut points: Vec<Complex64> = Vec::with_capacity(n);
        let mut rejections = 0u64;
        while points.len() < n {
            let x = rng.gen_range(-0.5..0.5);
            let y = rng.gen_range(-0.5..0.5);
            let cand = Complex64::new(x, 0.0) + ctx.tau() * y;
            let ok = points.iter().all(|p| reduce(cand - p, ctx).z0.norm() >= sep);
            if ok {
                points.push(cand);
            } else {
                rejections += 1;
                if rejections > 10_000 {
                    return Err(Error::Domain(format!(
                        "could not place {n} points with separation {sep}"
                    )));
                }
            }
        }
        let values = (0..n)
            .map(|_| {
                let r = rng.gen_range(0.5..1.5);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::new(r * phi.cos(), r * phi.sin())
            })
            .collect();
        Ok((BosonChart::new(points, values), rejections))
    }
}

/// Coordinate label: `U(i)` is the point `u_i` (1-based, `1..=n`), `V(j)`
/// is the log-ratio `v_j = log(y_j/y_1)` (`2..=n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    U(usize),
    V(usize),
}

impl Coord {
    pub fn label(&self) -> String {
        match self {
            Coord::U(i) => format!("u{i}"),
            Coord::V(j) => format!("v{j}"),
        }
    }
}

/// The `(2n-1) x (2n-1)` bracket matrix in the coordinate order
/// `u_1, ..., u_n, v_2, ..., v_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivectorMatrix {
    pub order: Vec<Coord>,
    pub entries: Vec<Vec<Complex64>>,
}

impl BivectorMatrix {
    pub fn dim(&self) -> usize {
        self.order.len()
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.entries[a][b]
    }

    /// Largest entry-wise deviation from antisymmetry.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                worst = worst.max((self.entries[a][b] + self.entries[b][a]).norm());
            }
        }
        worst
    }

    /// JSON form: the coordinate order plus entries as `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let order: Vec<String> = self.order.iter().map(Coord::label).collect();
        let matrix: Vec<Vec<[f64; 2]>> = self
            .entries
            .iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        serde_json::json!({ "coordinateOrder": order, "matrix": matrix })
    }
}

/// Coordinate order `u_1, ..., u_n, v_2, ..., v_n`.
pub fn coords(n: usize) -> Vec<Coord> {
    let mut order: Vec<Coord> = (1..=n).map(Coord::U).collect();
    order.extend((2..=n).map(Coord::V));
    order
}

fn index_of(n: usize, c: Coord) -> usize {
    match c {
        Coord::U(i) => {
            assert!((1..=n).contains(&i));
            i - 1
        }
        Coord::V(j) => {
            assert!((2..=n).contains(&j));
            n + j - 2
        }
    }
}

/// Assembles the full bracket matrix. Every entry is computed directly from
/// its own formula, so antisymmetry of the result is a genuine check rather
/// than a construction artifact.
pub fn bracket_matrix(chart: &BosonChart, ctx: &EllipticContext) -> Result<BivectorMatrix> {
    chart.validate(ctx)?;
    let n = chart.n();
    let order = coords(n);
    let dim = order.len();
    let mut entries = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    let u = &chart.points;
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };

    for a in 0..dim {
        for b in 0..dim {
            entries[a][b] = match (order[a], order[b]) {
                (Coord::U(_), Coord::U(_)) => Complex64::new(0.0, 0.0),
                (Coord::V(j), Coord::U(k)) => Complex64::new(delta(j, k) - delta(1, k), 0.0),
                (Coord::U(k), Coord::V(j)) => Complex64::new(delta(1, k) - delta(j, k), 0.0),
                (Coord::V(j), Coord::V(k)) => {
                    if j == k {
                        Complex64::new(0.0, 0.0)
                    } else {
                        cyclic_coeff(u[0] - u[k - 1], u[k - 1] - u[j - 1], u[j - 1] - u[0], ctx)?
                    }
                }
            };
        }
    }
    Ok(BivectorMatrix { order, entries })
}

/// Table of `zeta'(u_a - u_b)` for all pairs, used by the analytic
/// Jacobiator.
fn zeta_d1_table(chart: &BosonChart, ctx: &EllipticContext) -> Result<Vec<Vec<Complex64>>> {
    let n = chart.n();
    let mut t = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (a, row) in t.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate() {
            if a != b {
                *slot = zeta_d1(chart.points[a] - chart.points[b], ctx)?;
            }
        }
    }
    Ok(t)
}

/// Analytic derivative of the entry `Pi[b][c]` with respect to `u_m`
/// (`m` 1-based). Nonzero only when both labels are v-coordinates.
fn dpi_analytic(zp: &[Vec<Complex64>], b: Coord, c: Coord, m: usize) -> Complex64 {
    let (j, k) = match (b, c) {
        (Coord::V(j), Coord::V(k)) if j != k => (j, k),
        _ => return Complex64::new(0.0, 0.0),
    };
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    // d/du_m of 2[zeta(u_1-u_k) + zeta(u_k-u_j) + zeta(u_j-u_1)]
    2.0 * (zp[0][k - 1] * (delta(1, m) - delta(k, m))
        + zp[k - 1][j - 1] * (delta(k, m) - delta(j, m))
        + zp[j - 1][0] * (delta(j, m) - delta(1, m)))
}

fn check_triple(n: usize, triple: &[Coord; 3]) -> Result<()> {
    for c in triple {
        match *c {
            Coord::U(i) if (1..=n).contains(&i) => {}
            Coord::V(j) if (2..=n).contains(&j) => {}
            other => {
                return Err(Error::Domain(format!(
                    "coordinate {} out of range for a chart with {n} points",
                    other.label()
                )))
            }
        }
    }
    if triple[0] == triple[1] || triple[0] == triple[2] || triple[1] == triple[2] {
        return Err(Error::Domain("Jacobiator labels must be distinct".into()));
    }
    Ok(())
}

/// Jacobiator `J(a,b,c) = sum_d [Pi_da d_d Pi_bc + Pi_db d_d Pi_ca
/// + Pi_dc d_d Pi_ab]` with analytic derivatives.
///
/// The entries depend on the points alone, so only `u`-derivatives
/// contribute; they are evaluated through `zeta'`.
pub fn jacobiator(
    chart: &BosonChart,
    triple: [Coord; 3],
    ctx: &EllipticContext,
) -> Result<Complex64> {
    chart.validate(ctx)?;
    check_triple(chart.n(), &triple)?;
    let n = chart.n();
    let pi = bracket_matrix(chart, ctx)?;
    let zp = zeta_d1_table(chart, ctx)?;
    let [a, b, c] = triple;
    let (ia, ib, ic) = (index_of(n, a), index_of(n, b), index_of(n, c));

    let mut total = Complex64::new(0.0, 0.0);
    for d in coords(n) {
        let id = index_of(n, d);
        if let Coord::U(m) = d {
            total += pi.get(id, ia) * dpi_analytic(&zp, b, c, m)
                + pi.get(id, ib) * dpi_analytic(&zp, c, a, m)
                + pi.get(id, ic) * dpi_analytic(&zp, a, b, m);
        }
        // v-coordinate derivatives vanish identically: no entry depends on y
    }
    Ok(total)
}

/// Scale for relative Jacobiator residuals: the largest `|zeta'|` magnitude
/// over point pairs, clamped below by one.
pub fn jacobiator_scale(chart: &BosonChart, ctx: &EllipticContext) -> Result<f64> {
    let zp = zeta_d1_table(chart, ctx)?;
    let mut scale: f64 = 1.0;
    for row in &zp {
        for v in row {
            scale = scale.max(v.norm());
        }
    }
    Ok(scale)
}

/// Same quantity as [`jacobiator`] with the derivatives taken by central
/// finite differences of the bracket-matrix entries.
pub fn jacobiator_fd(
    chart: &BosonChart,
    triple: [Coord; 3],
    ctx: &EllipticContext,
    step: f64,
) -> Result<Complex64> {
    if !(1e-6..=1e-3).contains(&step) {
        return Err(Error::Domain(format!(
            "finite-difference step must lie in [1e-6, 1e-3], got {step:e}"
        )));
    }
    chart.validate(ctx)?;
    check_triple(chart.n(), &triple)?;
    let n = chart.n();
    let pi = bracket_matrix(chart, ctx)?;
    let [a, b, c] = triple;
    let (ia, ib, ic) = (index_of(n, a), index_of(n, b), index_of(n, c));

    let mut total = Complex64::new(0.0, 0.0);
    for d in coords(n) {
        let id = index_of(n, d);
        let m = match d {
            Coord::U(m) => m,
            // the matrix does not depend on the values, so v-derivatives
            // are exactly zero
            Coord::V(_) => continue,
        };
        let mut plus = chart.clone();
        plus.points[m - 1] += step;
        let mut minus = chart.clone();
        minus.points[m - 1] -= step;
        let pi_p = bracket_matrix(&plus, ctx)?;
        let pi_m = bracket_matrix(&minus, ctx)?;
        let diff = |x: usize, y: usize| (pi_p.get(x, y) - pi_m.get(x, y)) / (2.0 * step);
        total += pi.get(id, ia) * diff(ib, ic)
            + pi.get(id, ib) * diff(ic, ia)
            + pi.get(id, ic) * diff(ia, ib);
    }
    Ok(total)
}

/// Worst-case Jacobiator data over every distinct coordinate triple of a
/// chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiatorSweep {
    /// Largest `|J|` over triples, relative to the `zeta'` scale.
    pub max_relative: f64,
    /// Largest `|J_analytic - J_fd|` over triples.
    pub max_fd_delta: f64,
    /// The `zeta'` scale used for the relative residual.
    pub scale: f64,
}

/// Runs the analytic and finite-difference Jacobiators over all distinct
/// coordinate triples, sharing the perturbed bracket matrices across
/// triples. The derivative routes stay independent: one goes through
/// `zeta'`, the other through central differences of matrix entries.
pub fn jacobiator_sweep(
    chart: &BosonChart,
    ctx: &EllipticContext,
    step: f64,
) -> Result<JacobiatorSweep> {
    if !(1e-6..=1e-3).contains(&step) {
        return Err(Error::Domain(format!(
            "finite-difference step must lie in [1e-6, 1e-3], got {step:e}"
        )));
    }
    chart.validate(ctx)?;
    let n = chart.n();
    let order = coords(n);
    let dim = order.len();
    let pi = bracket_matrix(chart, ctx)?;
    let zp = zeta_d1_table(chart, ctx)?;
    let scale = jacobiator_scale(chart, ctx)?;

    // perturbed matrices, one pair per point
    let mut plus_minus = Vec::with_capacity(n);
    for m in 0..n {
        let mut plus = chart.clone();
        plus.points[m] += step;
        let mut minus = chart.clone();
        minus.points[m] -= step;
        plus_minus.push((bracket_matrix(&plus, ctx)?, bracket_matrix(&minus, ctx)?));
    }

    let mut max_relative: f64 = 0.0;
    let mut max_fd_delta: f64 = 0.0;
    for ia in 0..dim {
        for ib in (ia + 1)..dim {
            for ic in (ib + 1)..dim {
                let (a, b, c) = (order[ia], order[ib], order[ic]);
                let mut j_an = Complex64::new(0.0, 0.0);
                let mut j_fd = Complex64::new(0.0, 0.0);
                for (d, coord) in order.iter().enumerate() {
                    if let Coord::U(m) = *coord {
                        j_an += pi.get(d, ia) * dpi_analytic(&zp, b, c, m)
                            + pi.get(d, ib) * dpi_analytic(&zp, c, a, m)
                            + pi.get(d, ic) * dpi_analytic(&zp, a, b, m);
                        let (pp, pm) = &plus_minus[m - 1];
                        let diff =
                            |x: usize, y: usize| (pp.get(x, y) - pm.get(x, y)) / (2.0 * step);
                        j_fd += pi.get(d, ia) * diff(ib, ic)
                            + pi.get(d, ib) * diff(ic, ia)
                            + pi.get(d, ic) * diff(ia, ib);
                    }
                }
                max_relative = max_relative.max(j_an.norm() / scale);
                max_fd_delta = max_fd_delta.max((j_an - j_fd).norm());
            }
        }
    }
    Ok(JacobiatorSweep {
        max_relative,
        max_fd_delta,
        scale,
    })
}

/// Residuals of the log-canonical change of variables
/// `w_j = v_j + f_j(u)` with
/// `f_j = sum_{m != j} log theta(u_m - u_j) - sum_{m != 1} log theta(u_m - u_1)`.
///
/// `max_vv` is the largest `|{w_j, w_k}|` over `2 <= j < k <= n`; in the
/// primed variables these brackets vanish. `max_vu` is the largest
/// deviation of `{w_j, u_k}` from its Kronecker form, which holds exactly
/// because the correction `f_j` commutes with every `u_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimeBracketResiduals {
    pub max_vv: f64,
    pub max_vu: f64,
}

pub fn prime_bracket_check(
    chart: &BosonChart,
    ctx: &EllipticContext,
) -> Result<PrimeBracketResiduals> {
    chart.validate(ctx)?;
    let n = chart.n();
    let u = &chart.points;
    let mut z = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                z[a][b] = zeta(u[a] - u[b], ctx)?;
            }
        }
    }

    // d f_k / d u_m, with d log theta = zeta applied term by term
    let df = |m: usize, k: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        if m != k {
            acc += z[m - 1][k - 1];
        } else {
            for l in 1..=n {
                if l != k {
                    acc -= z[l - 1][k - 1];
                }
            }
        }
        if m != 1 {
            acc -= z[m - 1][0];
        } else {
            for l in 2..=n {
                acc += z[l - 1][0];
            }
        }
        acc
    };

    let pi = bracket_matrix(chart, ctx)?;
    let mut max_vv: f64 = 0.0;
    for j in 2..=n {
        for k in (j + 1)..=n {
            // {v_j, f_k} = df_k(j) - df_k(1), and analogously for f_j
            let vj_fk = df(j, k) - df(1, k);
            let vk_fj = df(k, j) - df(1, j);
            let w_bracket =
                pi.get(index_of(n, Coord::V(j)), index_of(n, Coord::V(k))) + vj_fk - vk_fj;
            max_vv = max_vv.max(w_bracket.norm());
        }
    }

    // {w_j, u_k} = {v_j, u_k} since {f_j, u_k} = 0
    let mut max_vu: f64 = 0.0;
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    for j in 2..=n {
        for k in 1..=n {
            let got = pi.get(index_of(n, Coord::V(j)), index_of(n, Coord::U(k)));
            let want = Complex64::new(delta(j, k) - delta(1, k), 0.0);
            max_vu = max_vu.max((got - want).norm());
        }
    }
    Ok(PrimeBracketResiduals { max_vv, max_vu })
}

/// Max-norm change of the bracket matrix under single-point shifts by `1`
/// and by `tau`.
pub fn lattice_invariance_check(chart: &BosonChart, ctx: &EllipticContext) -> Result<f64> {
    let base = bracket_matrix(chart, ctx)?;
    let mut worst: f64 = 0.0;
    for i in 0..chart.n() {
        for shift in [Complex64::new(1.0, 0.0), ctx.tau()] {
            let mut shifted = chart.clone();
            shifted.points[i] += shift;
            let pi = bracket_matrix(&shifted, ctx)?;
            for a in 0..base.dim() {
                for b in 0..base.dim() {
                    worst = worst.max((pi.get(a, b) - base.get(a, b)).norm());
                }
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Chart JSON wire format
// ---------------------------------------------------------------------------

/// Serde view of a chart file: `{"tau":[a,b],"points":[[re,im],...],
/// "values":[[re,im],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartInput {
    pub tau: [f64; 2],
    pub points: Vec<[f64; 2]>,
    pub values: Vec<[f64; 2]>,
}

impl ChartInput {
    pub fn from_parts(tau: Complex64, chart: &BosonChart) -> Self {
        ChartInput {
            tau: [tau.re, tau.im],
            points: chart.points.iter().map(|z| [z.re, z.im]).collect(),
            values: chart.values.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    /// Builds the context and chart, validating both.
    pub fn into_parts(self) -> Result<(EllipticContext, BosonChart)> {
        let ctx = EllipticContext::new(Complex64::new(self.tau[0], self.tau[1]))?;
        let chart = BosonChart::new(
            self.points
                .iter()
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
            self.values
                .iter()
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
        );
        chart.validate(&ctx)?;
        Ok((ctx, chart))
    }
}
