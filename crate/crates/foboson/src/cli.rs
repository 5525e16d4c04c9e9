//! Command-line front end: every operation of the crate behind a
//! subcommand with a deterministic JSON report.
//!
//! Reports carry `"schemaVersion": 1`, and a fixed seed makes every
//! randomized sweep bit-reproducible. Domain errors from the library
//! surface as `{"error": kind, "detail": text}` with exit status 1; a run
//! exits 0 exactly when every check in it passed its tolerance.

use crate::arith;
use crate::bracket::{self, BosonChart, Coord};
use crate::dgchain::{self, FiniteChain};
use crate::elliptic::EllipticContext;
use crate::error::{Error, Result};
use num::complex::Complex64;
use num::{BigInt, BigRational, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;

/// Minimum pairwise point distance used when drawing random charts. This is
/// a sampling-quality margin, far above the hard pole guard of the
/// evaluation context.
const CHART_SEPARATION: f64 = 0.15;

/// Finite-difference step used by the `jacobi` subcommand, and the matching
/// agreement tolerance `10 * step^2`.
const FD_STEP: f64 = 1e-4;
const FD_TOLERANCE: f64 = 1e-7;

/// A fully resolved run: the subcommand, the optional tolerance override
/// (from `FOBOSON_TOL`), and where the report goes.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub tolerance_override: Option<f64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum Command {
    Contfrac { n: u64, k: u64 },
    DimEnd { n: u64, k: u64 },
    Degrees { n: u64, k: u64 },
    Image { n: u64, k: u64 },
    Bracket { n_points: usize, tau: String, seed: u64, emit_matrix: bool },
    Jacobi { n_points: usize, tau: String, trials: u64, seed: u64 },
    PrimeCheck { n_points: usize, tau: String, trials: u64, seed: u64 },
    DgVerify { dims: Vec<usize>, trials: u64, seed: u64 },
    Sweep { max_n: u64 },
}

/// Exit status plus the rendered JSON report (already newline-terminated).
#[derive(Debug, Clone)]
pub struct DispatchOutcome {
    pub status: i32,
    pub report: String,
}

/// Parses `"a+bi"` style text into a complex number. Accepts forms like
/// `i`, `1.0i`, `2i`, `0.3+1.1i`, `-0.5-2i`, `1e-2+1i`, or a pure real.
pub fn parse_tau(text: &str) -> Result<Complex64> {
    let s: String = text.trim().replace(' ', "");
    if s.is_empty() {
        return Err(Error::Parse("empty tau".into()));
    }
    let bytes = s.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            split = Some(i);
            break;
        }
    }
    // (value, is_imaginary)
    let token = |t: &str| -> Result<(f64, bool)> {
        if let Some(body) = t.strip_suffix(['i', 'I']) {
            let v = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => body
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad imaginary part {t:?}")))?,
            };
            Ok((v, true))
        } else {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Parse(format!("bad real number {t:?}")))?;
            Ok((v, false))
        }
    };
    match split {
        None => {
            let (v, imag) = token(&s)?;
            Ok(if imag {
                Complex64::new(0.0, v)
            } else {
                Complex64::new(v, 0.0)
            })
        }
        Some(i) => {
            let (re, re_imag) = token(&s[..i])?;
            let (im, im_imag) = token(&s[i..])?;
            if re_imag || !im_imag {
                return Err(Error::Parse(format!(
                    "expected \"a+bi\" with the imaginary part last, got {text:?}"
                )));
            }
            Ok(Complex64::new(re, im))
        }
    }
}

fn trial_seed(seed: u64, trial: u64) -> u64 {
    // splitmix64 mix of (seed, trial)
    let mut z = seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn big_to_i64(v: &BigInt) -> Result<i64> {
    v.to_i64()
        .ok_or_else(|| Error::Domain(format!("value {v} does not fit the JSON report")))
}

fn bigs_to_i64(vs: &[BigInt]) -> Result<Vec<i64>> {
    vs.iter().map(big_to_i64).collect()
}

fn slope_strings(slopes: &[BigRational]) -> Vec<String> {
    slopes
        .iter()
        .map(|s| format!("{}/{}", s.numer(), s.denom()))
        .collect()
}

fn residual_string(r: &BigRational) -> String {
    if r.is_zero() {
        "0".to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// One float-tolerance check line of a report.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckReport {
    pub check: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    fn new(check: &str, max_residual: f64, tolerance: f64) -> Self {
        CheckReport {
            check: check.to_string(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        }
    }
}

/// One exact-rational check line of a `dg-verify` report.
#[derive(Debug, Clone, Serialize)]
pub struct ExactCheckReport {
    pub check: String,
    pub residual: String,
    pub pass: bool,
}

impl ExactCheckReport {
    fn new(check: &str, residual: &BigRational) -> Self {
        ExactCheckReport {
            check: check.to_string(),
            residual: residual_string(residual),
            pass: residual.is_zero(),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ContfracReport {
    schema_version: u32,
    command: &'static str,
    n: i64,
    k: i64,
    expansion: Vec<i64>,
    nconv: Vec<i64>,
    kconv: Vec<i64>,
    subranks: Vec<i64>,
    subdegs: Vec<i64>,
    slopes: Vec<String>,
    tau_blocks: Vec<Vec<usize>>,
    slope_blocks: Vec<Vec<usize>>,
    dim_end: i64,
    det_line_degrees: Vec<i64>,
    lambda_degrees: Vec<i64>,
    notes: Vec<String>,
}

fn arith_notes() -> Vec<String> {
    vec![
        "lambdaDegrees[j] is the Euler pairing of the classes two steps apart around \
         position j; it always equals the reversed expansion entry, and detLineDegrees \
         adds 1 at the two ends and 2 in the interior (a single entry n when the \
         expansion has length 1)."
            .to_string(),
        "tauBlocks glues indices where an expansion entry equals 2; slopeBlocks glues \
         equal consecutive slopes and equals the tau partition of the reversed \
         expansion, so the two always share their block-size multiset."
            .to_string(),
    ]
}

fn run_contfrac(n: u64, k: u64) -> Result<(serde_json::Value, bool)> {
    let (n, k) = (BigInt::from(n), BigInt::from(k));
    let inv = arith::chain_invariants(&n, &k)?;
    let tau_blocks = arith::tau_partition(&inv.expansion).blocks;
    let slope_blocks = arith::slope_classes(&inv).blocks;
    let dim_end = arith::dim_end(&n, &k)?;
    let degs = arith::det_line_degrees(&n, &k)?;
    let pass = dim_end == n;
    let report = ContfracReport {
        schema_version: 1,
        command: "contfrac",
        n: big_to_i64(&n)?,
        k: big_to_i64(&k)?,
        expansion: bigs_to_i64(&inv.expansion)?,
        nconv: bigs_to_i64(&inv.nconv)?,
        kconv: bigs_to_i64(&inv.kconv)?,
        subranks: bigs_to_i64(&inv.subranks)?,
        subdegs: bigs_to_i64(&inv.subdegs)?,
        slopes: slope_strings(&inv.slopes),
        tau_blocks,
        slope_blocks,
        dim_end: big_to_i64(&dim_end)?,
        det_line_degrees: bigs_to_i64(&degs.degrees)?,
        lambda_degrees: bigs_to_i64(&degs.lambda_degrees)?,
        notes: arith_notes(),
    };
    Ok((serde_json::to_value(report).expect("report serializes"), pass))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DimEndReport {
    schema_version: u32,
    command: &'static str,
    n: i64,
    k: i64,
    dim_end: i64,
    expected: i64,
    pass: bool,
}

fn run_dim_end(n: u64, k: u64) -> Result<(serde_json::Value, bool)> {
    let (nb, kb) = (BigInt::from(n), BigInt::from(k));
    let value = arith::dim_end(&nb, &kb)?;
    let pass = value == nb;
    let report = DimEndReport {
        schema_version: 1,
        command: "dim-end",
        n: big_to_i64(&nb)?,
        k: big_to_i64(&kb)?,
        dim_end: big_to_i64(&value)?,
        expected: big_to_i64(&nb)?,
        pass,
    };
    Ok((serde_json::to_value(report).expect("report serializes"), pass))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DegreesReport {
    schema_version: u32,
    command: &'static str,
    n: i64,
    k: i64,
    expansion: Vec<i64>,
    lambda_degrees: Vec<i64>,
    det_line_degrees: Vec<i64>,
    degree_sum: i64,
    expected_sum: i64,
    pass: bool,
    notes: Vec<String>,
}

fn run_degrees(n: u64, k: u64) -> Result<(serde_json::Value, bool)> {
    let (nb, kb) = (BigInt::from(n), BigInt::from(k));
    let inv = arith::chain_invariants(&nb, &kb)?;
    let degs = arith::det_line_degrees(&nb, &kb)?;
    let p = inv.p();
    let degree_sum: BigInt = degs.degrees.iter().sum();
    let expected_sum: BigInt = if p >= 2 {
        inv.expansion.iter().sum::<BigInt>() + BigInt::from(2 * p as i64 - 2)
    } else {
        nb.clone()
    };
    let pass = degree_sum == expected_sum;
    let report = DegreesReport {
        schema_version: 1,
        command: "degrees",
        n: big_to_i64(&nb)?,
        k: big_to_i64(&kb)?,
        expansion: bigs_to_i64(&inv.expansion)?,
        lambda_degrees: bigs_to_i64(&degs.lambda_degrees)?,
        det_line_degrees: bigs_to_i64(&degs.degrees)?,
        degree_sum: big_to_i64(&degree_sum)?,
        expected_sum: big_to_i64(&expected_sum)?,
        pass,
        notes: arith_notes(),
    };
    Ok((serde_json::to_value(report).expect("report serializes"), pass))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ImageReport {
    schema_version: u32,
    command: &'static str,
    n: i64,
    k: i64,
    block_sizes: Vec<usize>,
    ambient_power: usize,
    fiber_dimension: usize,
    quotient_label: String,
}

fn run_image(n: u64, k: u64) -> Result<(serde_json::Value, bool)> {
    let (nb, kb) = (BigInt::from(n), BigInt::from(k));
    let d = arith::image_descriptor(&nb, &kb)?;
    let report = ImageReport {
        schema_version: 1,
        command: "image",
        n: big_to_i64(&nb)?,
        k: big_to_i64(&kb)?,
        block_sizes: d.block_sizes,
        ambient_power: d.ambient_power,
        fiber_dimension: d.fiber_dimension,
        quotient_label: d.quotient_label,
    };
    Ok((serde_json::to_value(report).expect("report serializes"), true))
}

fn make_chart(
    n_points: usize,
    tau_text: &str,
    seed: u64,
    trial: u64,
) -> Result<(EllipticContext, BosonChart, u64)> {
    if n_points < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 chart points, got {n_points}"
        )));
    }
    let ctx = EllipticContext::new(parse_tau(tau_text)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
    let (chart, rejections) = BosonChart::random(n_points, &ctx, CHART_SEPARATION, &mut rng)?;
    Ok((ctx, chart, rejections))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BracketReport {
    schema_version: u32,
    command: &'static str,
    n_points: usize,
    tau: [f64; 2],
    seed: u64,
    rejections: u64,
    coordinate_order: Vec<String>,
    checks: Vec<CheckReport>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<[f64; 2]>>>,
}

fn run_bracket(
    n_points: usize,
    tau_text: &str,
    seed: u64,
    emit_matrix: bool,
    tol: &impl Fn(f64) -> f64,
) -> Result<(serde_json::Value, bool)> {
    let (ctx, chart, rejections) = make_chart(n_points, tau_text, seed, 0)?;
    let pi = bracket::bracket_matrix(&chart, &ctx)?;
    let n = chart.n();

    let mut uu_residual: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            uu_residual = uu_residual.max(pi.get(a, b).norm());
        }
    }
    let mut vu_residual: f64 = 0.0;
    for a in n..pi.dim() {
        for b in 0..n {
            let v = pi.get(a, b);
            let nearest = v.re.round().clamp(-1.0, 1.0);
            vu_residual = vu_residual.max((v - Complex64::new(nearest, 0.0)).norm());
        }
    }
    let mut translated = chart.clone();
    for p in &mut translated.points {
        *p += Complex64::new(0.137, 0.073);
    }
    let pi_t = bracket::bracket_matrix(&translated, &ctx)?;
    let mut translation_residual: f64 = 0.0;
    for a in 0..pi.dim() {
        for b in 0..pi.dim() {
            translation_residual =
                translation_residual.max((pi.get(a, b) - pi_t.get(a, b)).norm());
        }
    }
    let lattice_residual = bracket::lattice_invariance_check(&chart, &ctx)?;

    let checks = vec![
        CheckReport::new("antisymmetry", pi.antisymmetry_residual(), tol(1e-12)),
        CheckReport::new("uuBlockZero", uu_residual, 0.0),
        CheckReport::new("vuBlockInteger", vu_residual, 0.0),
        CheckReport::new("translationInvariance", translation_residual, tol(1e-10)),
        CheckReport::new("latticeInvariance", lattice_residual, tol(1e-9)),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let report = BracketReport {
        schema_version: 1,
        command: "bracket",
        n_points,
        tau: [ctx.tau().re, ctx.tau().im],
        seed,
        rejections,
        coordinate_order: pi.order.iter().map(Coord::label).collect(),
        checks,
        pass,
        matrix: emit_matrix.then(|| {
            pi.entries
                .iter()
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect()
        }),
    };
    Ok((serde_json::to_value(report).expect("report serializes"), pass))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TrialSweepReport {
    schema_version: u32,
    command: &'static str,
    n_points: usize,
    tau: [f64; 2],
    trials: u64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    rejections: u64,
    checks: Vec<CheckReport>,
    pass: bool,
}

fn run_jacobi(
    n_points: usize,
    tau_text: &str,
    trials: u64,
    seed: u64,
    tol: &impl Fn(f64) -> f64,
) -> Result<(serde_json::Value, bool)> {
    let mut max_rel: f64 = 0.0;
    let mut max_fd: f64 = 0.0;
    let mut rejections = 0u64;
    let mut tau = [0.0, 0.0];
    for trial in 0..trials.max(1) {
        let (ctx, chart, rej) = make_chart(n_points, tau_text, seed, trial)?;
        tau = [ctx.tau().re, ctx.tau().im];
        rejections += rej;
        let sweep = bracket::jacobiator_sweep(&chart, &ctx, FD_STEP)?;
        max_rel = max_rel.max(sweep.max_relative);
        max_fd = max_fd.max(sweep.max_fd_delta);
    }
    let checks = vec![
        CheckReport::new("jacobiatorRelative", max_rel, tol(1e-8)),
        CheckReport::new("analyticVsFiniteDifference", max_fd, tol(FD_TOLERANCE)),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let report = TrialSweepReport {
        schema_version: 1,
        command: "jacobi",
        n_points,
        tau,
        trials,
        seed,
        step: Some(FD_STEP),
        rejections,
        checks,
        pass,
    };
    Ok((serde_json::to_value(report).expect("report serializes"), pass))
}

fn run_prime_check(
    n_points: usize,
    tau_text: &str,
    trials: u64,
    seed: u64,
    tol: &impl Fn(f64) -> f64,
) -> Result<(serde_json::Value, bool)> {
    let mut max_vv: f64 = 0.0;
    let mut max_vu: f64 = 0.0;
    let mut rejections = 0u64;
    let mut tau = [0.0, 0.0];
    for trial in 0..trials.max(1) {
        let (ctx, chart, rej) = make_chart(n_points, tau_text, seed, trial)?;
        tau = [ctx.tau().re, ctx.tau().im];
        rejections += rej;
        let res = bracket::prime_bracket_check(&chart, &ctx)?;
        max_vv = max_vv.max(res.max_vv);
        max_vu = max_vu.max(res.max_vu);
    }
    let checks = vec![
        CheckReport::new("primeVvBrackets", max_vv, tol(1e-9)),
        CheckReport::new("primeVuKronecker", max_vu, tol(1e-9)),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let report = TrialSweepReport {
        schema_version: 1,
        command: "prime-check",
        n_points,
        tau,
        trials,
        seed,
        step: None,
        rejections,
        checks,
        pass,
    };
    Ok((serde_json::to_value(report).expect("report serializes"), pass))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DgVerifyReport {
    schema_version: u32,
    command: &'static str,
    dims: Vec<usize>,
    trials: u64,
    seed: u64,
    checks: Vec<ExactCheckReport>,
    pass: bool,
}

fn run_dg_verify(dims: &[usize], trials: u64, seed: u64) -> Result<(serde_json::Value, bool)> {
    if dims.len() < 2 {
        return Err(Error::Shape(format!(
            "dg-verify needs at least two dimensions, got {dims:?}"
        )));
    }
    // the constructor validates positivity of the dimensions
    FiniteChain::new(
        dims.to_vec(),
        (0..dims.len() - 1)
            .map(|i| dgchain::QMatrix::zeros(dims[i + 1], dims[i]))
            .collect(),
    )?;
    let m = dims.len() - 1;
    let is_m2 = m == 2;

    let mut chain_map = BigRational::zero();
    let mut truncation = BigRational::zero();
    let mut alt_chain_map = BigRational::zero();
    let mut alt_homotopy = BigRational::zero();
    let mut homotopy_top = BigRational::zero();
    let mut homotopy_bottom = BigRational::zero();
    let mut diag_left = BigRational::zero();
    let mut diag_right = BigRational::zero();
    let max = |acc: &mut BigRational, v: BigRational| {
        if v > *acc {
            *acc = v;
        }
    };

    for trial in 0..trials.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
        let chain = FiniteChain::random(dims, &mut rng);
        max(&mut chain_map, dgchain::chain_map_check(&chain)?);
        for a in 0..=m {
            for b in a..=m {
                max(&mut truncation, dgchain::truncation_check(&chain, a, b)?);
            }
        }
        if is_m2 {
            let alt = dgchain::alt_representative_check(&chain)?;
            max(&mut alt_chain_map, alt.chain_map);
            max(&mut alt_homotopy, alt.homotopy);
            let hom = dgchain::homotopy_h_check(&chain)?;
            max(&mut homotopy_top, hom.top_relation);
            max(&mut homotopy_bottom, hom.bottom_relation);
            let d1 = dgchain::diag1_check(&chain)?;
            max(&mut diag_left, d1.left_column);
            max(&mut diag_right, d1.right_column);
        }
    }

    let mut checks = vec![ExactCheckReport::new("chain_map", &chain_map)];
    if is_m2 {
        checks.push(ExactCheckReport::new(
            "alt_representative_chain_map",
            &alt_chain_map,
        ));
        checks.push(ExactCheckReport::new(
            "alt_representative_homotopy",
            &alt_homotopy,
        ));
        checks.push(ExactCheckReport::new("homotopy_h_top", &homotopy_top));
        checks.push(ExactCheckReport::new("homotopy_h_bottom", &homotopy_bottom));
        checks.push(ExactCheckReport::new("diag1_left", &diag_left));
        checks.push(ExactCheckReport::new("diag1_right", &diag_right));
    }
    checks.push(ExactCheckReport::new("truncation", &truncation));

    let pass = checks.iter().all(|c| c.pass);
    let report = DgVerifyReport {
        schema_version: 1,
        command: "dg-verify",
        dims: dims.to_vec(),
        trials,
        seed,
        checks,
        pass,
    };
    Ok((serde_json::to_value(report).expect("report serializes"), pass))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepCheckReport {
    check: String,
    failures: u64,
    pass: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepReport {
    schema_version: u32,
    command: &'static str,
    max_n: u64,
    pairs: u64,
    checks: Vec<SweepCheckReport>,
    pass: bool,
}

fn run_sweep(max_n: u64) -> Result<(serde_json::Value, bool)> {
    let mut pairs = 0u64;
    let mut fail_recon = 0u64;
    let mut fail_det = 0u64;
    let mut fail_slopes = 0u64;
    let mut fail_dim_end = 0u64;
    let mut fail_blocks = 0u64;
    let mut fail_lambda = 0u64;
    let mut fail_degree_sum = 0u64;

    for n in 2..=max_n.max(1) {
        for k in 1..n {
            let (nb, kb) = (BigInt::from(n), BigInt::from(k));
            if num::Integer::gcd(&nb, &kb) != BigInt::from(1) {
                continue;
            }
            pairs += 1;
            let inv = arith::chain_invariants(&nb, &kb)?;
            let p = inv.p();
            if arith::evaluate_cf(&inv.expansion) != BigRational::new(nb.clone(), kb.clone()) {
                fail_recon += 1;
            }
            for i in 0..p {
                let det = &inv.nconv[i + 1] * &inv.kconv[i] - &inv.nconv[i] * &inv.kconv[i + 1];
                if det != BigInt::from(1) {
                    fail_det += 1;
                }
            }
            let top = BigRational::new(nb.clone(), kb.clone());
            if !(top > inv.slopes[0])
                || inv.slopes.windows(2).any(|w| w[0] < w[1])
                || inv.slopes[p] != BigRational::from_integer(BigInt::from(1))
            {
                fail_slopes += 1;
            }
            if arith::dim_end(&nb, &kb)? != nb {
                fail_dim_end += 1;
            }
            let tau = arith::tau_partition(&inv.expansion);
            let slope = arith::slope_classes(&inv);
            if tau.block_sizes() != slope.block_sizes() {
                fail_blocks += 1;
            }
            let degs = arith::det_line_degrees(&nb, &kb)?;
            for (j, lambda) in degs.lambda_degrees.iter().enumerate() {
                if *lambda != inv.expansion[p - (j + 1)] {
                    fail_lambda += 1;
                }
            }
            if p >= 2 {
                let sum: BigInt = degs.degrees.iter().sum();
                let expected =
                    inv.expansion.iter().sum::<BigInt>() + BigInt::from(2 * p as i64 - 2);
                if sum != expected {
                    fail_degree_sum += 1;
                }
            }
        }
    }

    let checks: Vec<SweepCheckReport> = [
        ("cfReconstruction", fail_recon),
        ("convergentIdentity", fail_det),
        ("slopeChain", fail_slopes),
        ("dimEnd", fail_dim_end),
        ("partitionBlockSizes", fail_blocks),
        ("lambdaDegrees", fail_lambda),
        ("degreeSum", fail_degree_sum),
    ]
    .into_iter()
    .map(|(name, failures)| SweepCheckReport {
        check: name.to_string(),
        failures,
        pass: failures == 0,
    })
    .collect();
    let pass = checks.iter().all(|c| c.pass);
    let report = SweepReport {
        schema_version: 1,
        command: "sweep",
        max_n,
        pairs,
        checks,
        pass,
    };
    Ok((serde_json::to_value(report).expect("report serializes"), pass))
}

fn render(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("valid JSON");
    text.push('\n');
    text
}

/// Runs a config to completion. Library errors become the JSON error
/// object with exit status 1; failed checks exit 1 with the full report;
/// passing runs exit 0.
pub fn dispatch(config: &RunConfig) -> DispatchOutcome {
    let tol = |default: f64| config.tolerance_override.unwrap_or(default);
    let result = match &config.command {
        Command::Contfrac { n, k } => run_contfrac(*n, *k),
        Command::DimEnd { n, k } => run_dim_end(*n, *k),
        Command::Degrees { n, k } => run_degrees(*n, *k),
        Command::Image { n, k } => run_image(*n, *k),
        Command::Bracket {
            n_points,
            tau,
            seed,
            emit_matrix,
        } => run_bracket(*n_points, tau, *seed, *emit_matrix, &tol),
        Command::Jacobi {
            n_points,
            tau,
            trials,
            seed,
        } => run_jacobi(*n_points, tau, *trials, *seed, &tol),
        Command::PrimeCheck {
            n_points,
            tau,
            trials,
            seed,
        } => run_prime_check(*n_points, tau, *trials, *seed, &tol),
        Command::DgVerify { dims, trials, seed } => run_dg_verify(dims, *trials, *seed),
        Command::Sweep { max_n } => run_sweep(*max_n),
    };
    match result {
        Ok((value, pass)) => DispatchOutcome {
            status: if pass { 0 } else { 1 },
            report: render(&value),
        },
        Err(err) => DispatchOutcome {
            status: 1,
            report: render(&serde_json::json!({
                "error": err.kind(),
                "detail": err.to_string(),
            })),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: Command) -> RunConfig {
        RunConfig {
            command,
            tolerance_override: None,
            output: None,
        }
    }

    fn parse(outcome: &DispatchOutcome) -> serde_json::Value {
        serde_json::from_str(&outcome.report).unwrap()
    }

    #[test]
    fn parse_tau_forms() {
        assert_eq!(parse_tau("i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_tau("1.0i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_tau("2i").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_tau("0.3+1.1i").unwrap(), Complex64::new(0.3, 1.1));
        assert_eq!(parse_tau("-0.5-2i").unwrap(), Complex64::new(-0.5, -2.0));
        assert_eq!(parse_tau("1+i").unwrap(), Complex64::new(1.0, 1.0));
        assert_eq!(parse_tau("1e-2+1i").unwrap(), Complex64::new(0.01, 1.0));
        assert_eq!(parse_tau("0.7").unwrap(), Complex64::new(0.7, 0.0));
        assert!(parse_tau("").is_err());
        assert!(parse_tau("1i+2i").is_err());
        assert!(parse_tau("abc").is_err());
    }

    #[test]
    fn contfrac_27_8_report() {
        let out = dispatch(&cfg(Command::Contfrac { n: 27, k: 8 }));
        assert_eq!(out.status, 0);
        let v = parse(&out);
        assert_eq!(v["schemaVersion"], 1);
        assert_eq!(v["expansion"], serde_json::json!([4, 2, 3, 2]));
        assert_eq!(v["dimEnd"], 27);
        assert_eq!(v["slopes"][0], "10/3");
        assert_eq!(v["tauBlocks"], serde_json::json!([[0], [1, 2], [3, 4]]));
        assert_eq!(v["slopeBlocks"], serde_json::json!([[0, 1], [2, 3], [4]]));
        assert_eq!(v["detLineDegrees"], serde_json::json!([3, 5, 4, 5]));
        assert_eq!(v["lambdaDegrees"], serde_json::json!([2, 3, 2, 4]));
    }

    #[test]
    fn domain_error_is_structured() {
        let out = dispatch(&cfg(Command::Contfrac { n: 6, k: 4 }));
        assert_eq!(out.status, 1);
        let v = parse(&out);
        assert_eq!(v["error"], "domain");
        assert!(v["detail"].as_str().unwrap().contains("coprime"));
    }

    #[test]
    fn dim_end_and_degrees_and_image() {
        let out = dispatch(&cfg(Command::DimEnd { n: 27, k: 8 }));
        assert_eq!(out.status, 0);
        assert_eq!(parse(&out)["dimEnd"], 27);

        let out = dispatch(&cfg(Command::Degrees { n: 27, k: 8 }));
        assert_eq!(out.status, 0);
        let v = parse(&out);
        assert_eq!(v["degreeSum"], 17);
        assert_eq!(v["expectedSum"], 17);

        let out = dispatch(&cfg(Command::Image { n: 27, k: 8 }));
        let v = parse(&out);
        assert_eq!(v["blockSizes"], serde_json::json!([1, 2, 2]));
        assert_eq!(v["ambientPower"], 5);
        assert_eq!(v["fiberDimension"], 4);
    }

    #[test]
    fn jacobi_n2_reports_zero() {
        let out = dispatch(&cfg(Command::Jacobi {
            n_points: 2,
            tau: "1.0i".into(),
            trials: 1,
            seed: 1,
        }));
        assert_eq!(out.status, 0);
        let v = parse(&out);
        assert_eq!(v["checks"][0]["check"], "jacobiatorRelative");
        assert_eq!(v["checks"][0]["maxResidual"], 0.0);
        assert_eq!(v["pass"], true);
    }

    #[test]
    fn dg_verify_exact_zero_report() {
        let out = dispatch(&cfg(Command::DgVerify {
            dims: vec![2, 3, 2],
            trials: 1,
            seed: 7,
        }));
        assert_eq!(out.status, 0);
        let v = parse(&out);
        let checks = v["checks"].as_array().unwrap();
        assert_eq!(checks.len(), 8);
        for c in checks {
            assert_eq!(c["residual"], "0");
            assert_eq!(c["pass"], true);
        }
    }

    #[test]
    fn dg_verify_non_m2_dims() {
        let out = dispatch(&cfg(Command::DgVerify {
            dims: vec![2, 3, 2, 1],
            trials: 2,
            seed: 0,
        }));
        assert_eq!(out.status, 0);
        let v = parse(&out);
        let names: Vec<&str> = v["checks"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["check"].as_str().unwrap())
            .collect();
        assert_eq!(names, vec!["chain_map", "truncation"]);
    }

    #[test]
    fn bracket_report_shape() {
        let out = dispatch(&cfg(Command::Bracket {
            n_points: 3,
            tau: "i".into(),
            seed: 5,
            emit_matrix: true,
        }));
        assert_eq!(out.status, 0);
        let v = parse(&out);
        assert_eq!(
            v["coordinateOrder"],
            serde_json::json!(["u1", "u2", "u3", "v2", "v3"])
        );
        assert!(v["matrix"].is_array());
        assert_eq!(v["matrix"].as_array().unwrap().len(), 5);
        // without the flag the key is absent
        let out = dispatch(&cfg(Command::Bracket {
            n_points: 3,
            tau: "i".into(),
            seed: 5,
            emit_matrix: false,
        }));
        assert!(parse(&out).get("matrix").is_none());
    }

    #[test]
    fn prime_check_passes() {
        let out = dispatch(&cfg(Command::PrimeCheck {
            n_points: 4,
            tau: "0.3+1.1i".into(),
            trials: 3,
            seed: 11,
        }));
        assert_eq!(out.status, 0);
        let v = parse(&out);
        assert_eq!(v["pass"], true);
    }

    #[test]
    fn sweep_small() {
        let out = dispatch(&cfg(Command::Sweep { max_n: 40 }));
        assert_eq!(out.status, 0);
        let v = parse(&out);
        assert_eq!(v["pass"], true);
        assert!(v["pairs"].as_u64().unwrap() > 100);
        for c in v["checks"].as_array().unwrap() {
            assert_eq!(c["failures"], 0);
        }
    }

    #[test]
    fn reports_are_bit_reproducible() {
        let run = || {
            dispatch(&cfg(Command::Jacobi {
                n_points: 4,
                tau: "0.3+1.1i".into(),
                trials: 3,
                seed: 42,
            }))
            .report
        };
        assert_eq!(run(), run());
        let run2 = || {
            dispatch(&cfg(Command::Bracket {
                n_points: 4,
                tau: "i".into(),
                seed: 9,
                emit_matrix: true,
            }))
            .report
        };
        assert_eq!(run2(), run2());
    }

    #[test]
    fn tolerance_override_can_fail_a_run() {
        let mut config = cfg(Command::Jacobi {
            n_points: 4,
            tau: "i".into(),
            trials: 1,
            seed: 3,
        });
        config.tolerance_override = Some(0.0);
        let out = dispatch(&config);
        // residuals are tiny but nonzero, so a zero tolerance must fail
        assert_eq!(out.status, 1);
        let v = parse(&out);
        assert_eq!(v["pass"], false);
    }

    #[test]
    fn bad_chart_size_is_domain_error() {
        let out = dispatch(&cfg(Command::Bracket {
            n_points: 1,
            tau: "i".into(),
            seed: 0,
            emit_matrix: false,
        }));
        assert_eq!(out.status, 1);
        assert_eq!(parse(&out)["error"], "domain");
    }
}
