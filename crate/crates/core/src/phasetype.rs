//! Phase-type distributions: absorption times of transient Markov chains.
//!
//! A distribution on `[0, inf)` is described by a probability row vector
//! `alpha` over `m` transient phases and an `m x m` subgenerator `H`. The
//! chain starts in phase `i` with probability `alpha_i`, moves between
//! phases at the off-diagonal rates of `H`, and is absorbed from phase `i`
//! at rate `h0_i = -(H 1)_i`. The absorption time has density
//! `alpha' exp(H t) h0`, distribution `1 - alpha' exp(H t) 1`, and raw
//! moments `(-1)^l l! alpha' H^{-l} 1`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::numeric::{spectral_abscissa, HURWITZ_TOL};

/// Slack allowed when checking that probability vectors sum to one.
const ALPHA_SUM_TOL: f64 = 1e-12;

/// Row sums of a subgenerator may exceed zero by at most this much.
const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseTypeError {
    #[error("subgenerator must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("alpha has {alpha_len} entries but the subgenerator is {dim}x{dim}")]
    DimensionMismatch { alpha_len: usize, dim: usize },
    #[error("alpha is not a probability vector: {0}")]
    InvalidAlpha(String),
    #[error("invalid subgenerator: {}", describe_violations(.0))]
    InvalidSubgenerator(Vec<SubgeneratorViolation>),
    #[error("time argument must be finite and nonnegative, got {0}")]
    InvalidTime(f64),
    #[error("moment order must lie in 1..=170, got {0}")]
    InvalidMomentOrder(usize),
    #[error("{0}")]
    InvalidParameter(String),
    #[error("matrix/vector shapes do not agree")]
    ShapeMismatch,
    #[error("input contains a non-finite entry")]
    NonFinite,
}

/// One failed subgenerator condition, with the offending location or value.
#[derive(Debug, Clone, PartialEq)]
pub enum SubgeneratorViolation {
    /// Off-diagonal entry below zero (not Metzler).
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    /// Spectral abscissa not strictly negative (not Hurwitz).
    NotHurwitz { spectral_abscissa: f64 },
    /// A row sum exceeds zero.
    PositiveRowSum { row: usize, value: f64 },
    /// All row sums vanish, so no phase can be absorbed.
    NoExit,
}

fn describe_violations(vs: &[SubgeneratorViolation]) -> String {
    let parts: Vec<String> = vs
        .iter()
        .map(|v| match v {
            SubgeneratorViolation::NegativeOffDiagonal { row, col, value } => {
                format!("off-diagonal entry ({row},{col}) = {value} is negative")
            }
            SubgeneratorViolation::NotHurwitz { spectral_abscissa } => {
                format!("spectral abscissa {spectral_abscissa} is not below -{HURWITZ_TOL}")
            }
            SubgeneratorViolation::PositiveRowSum { row, value } => {
                format!("row {row} sums to {value} > 0")
            }
            SubgeneratorViolation::NoExit => "every row sums to zero, no exit rate".to_string(),
        })
        .collect();
    parts.join("; ")
}

/// Checks the three subgenerator conditions and reports every violation:
/// Metzler structure, Hurwitz stability, and nonpositive row sums with at
/// least one strict.
pub fn validate_subgenerator(h: &DMatrix<f64>) -> Result<(), PhaseTypeError> {
    if h.nrows() != h.ncols() {
        return Err(PhaseTypeError::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(PhaseTypeError::NonFinite);
    }
    let n = h.nrows();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && h[(i, j)] < 0.0 {
                violations.push(SubgeneratorViolation::NegativeOffDiagonal {
                    row: i,
                    col: j,
                    value: h[(i, j)],
                });
            }
        }
    }
    let mut any_strict_exit = false;
    for i in 0..n {
        let s: f64 = (0..n).map(|j| h[(i, j)]).sum();
        if s > ROW_SUM_TOL {
            violations.push(SubgeneratorViolation::PositiveRowSum { row: i, value: s });
        }
        if s < -ROW_SUM_TOL {
            any_strict_exit = true;
        }
    }
    if !any_strict_exit && n > 0 {
        violations.push(SubgeneratorViolation::NoExit);
    }
    // Only meaningful to ask for eigenvalues once the structure is Metzler.
    if violations
        .iter()
        .all(|v| !matches!(v, SubgeneratorViolation::NegativeOffDiagonal { .. }))
    {
        let a = spectral_abscissa(h);
        if !(a < -HURWITZ_TOL) {
            violations.push(SubgeneratorViolation::NotHurwitz {
                spectral_abscissa: a,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(PhaseTypeError::InvalidSubgenerator(violations))
    }
}

/// A validated phase-type distribution `(alpha, H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseType {
    alpha: DVector<f64>,
    h: DMatrix<f64>,
    exit: DVector<f64>,
}

impl PhaseType {
    /// Builds a distribution after validating `alpha` and `H`.
    pub fn new(alpha: DVector<f64>, h: DMatrix<f64>) -> Result<Self, PhaseTypeError> {
        validate_subgenerator(&h)?;
        if alpha.len() != h.nrows() {
            return Err(PhaseTypeError::DimensionMismatch {
                alpha_len: alpha.len(),
                dim: h.nrows(),
            });
        }
        if alpha.iter().any(|x| !x.is_finite()) {
            return Err(PhaseTypeError::NonFinite);
        }
        if let Some(neg) = alpha.iter().find(|&&x| x < 0.0) {
            return Err(PhaseTypeError::InvalidAlpha(format!(
                "entry {neg} is negative"
            )));
        }
        let s: f64 = alpha.iter().sum();
        if (s - 1.0).abs() > ALPHA_SUM_TOL {
            return Err(PhaseTypeError::InvalidAlpha(format!(
                "entries sum to {s}, expected 1 within {ALPHA_SUM_TOL}"
            )));
        }
        let ones = DVector::from_element(h.nrows(), 1.0);
        let exit = -(&h * ones);
        Ok(PhaseType { alpha, h, exit })
    }

    /// Number of transient phases.
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Initial phase distribution.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Subgenerator matrix.
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Per-phase absorption rates `-H 1` (componentwise nonnegative).
    pub fn exit_rates(&self) -> &DVector<f64> {
        &self.exit
    }

    /// Mean absorption time.
    pub fn mean(&self) -> f64 {
        ph_moment(self, 1).expect("first moment of a validated distribution")
    }

    /// Variance of the absorption time.
    pub fn variance(&self) -> f64 {
        let m1 = self.mean();
        let m2 = ph_moment(self, 2).expect("second moment of a validated distribution");
        m2 - m1 * m1
    }
}

/// Erlang distribution with `shape` stages at common `rate`: the chain walks
/// `1 -> 2 -> ... -> shape` and is absorbed from the last stage.
pub fn erlang(shape: usize, rate: f64) -> Result<PhaseType, PhaseTypeError> {
    if shape == 0 {
        return Err(PhaseTypeError::InvalidParameter(
            "erlang shape must be at least 1".into(),
        ));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(PhaseTypeError::InvalidParameter(format!(
            "erlang rate must be positive and finite, got {rate}"
        )));
    }
    hypoexponential(&vec![rate; shape])
}

/// Chain of exponential stages with distinct rates; absorption happens after
/// the last stage.
pub fn hypoexponential(rates: &[f64]) -> Result<PhaseType, PhaseTypeError> {
    if rates.is_empty() {
        return Err(PhaseTypeError::InvalidParameter(
            "hypoexponential needs at least one rate".into(),
        ));
    }
    if let Some(&bad) = rates.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(PhaseTypeError::InvalidParameter(format!(
            "hypoexponential rates must be positive and finite, got {bad}"
        )));
    }
    let m = rates.len();
    let mut h = DMatrix::<f64>::zeros(m, m);
    for (i, &r) in rates.iter().enumerate() {
        h[(i, i)] = -r;
        if i + 1 < m {
            h[(i, i + 1)] = r;
        }
    }
    let mut alpha = DVector::<f64>::zeros(m);
    alpha[0] = 1.0;
    PhaseType::new(alpha, h)
}

/// Probabilistic mixture of Erlang branches: branch `i` is entered with
/// probability `weights[i]` and runs `shapes[i]` stages at `rates[i]`.
pub fn hyper_erlang(
    weights: &[f64],
    shapes: &[usize],
    rates: &[f64],
) -> Result<PhaseType, PhaseTypeError> {
    if weights.is_empty() || weights.len() != shapes.len() || weights.len() != rates.len() {
        return Err(PhaseTypeError::InvalidParameter(format!(
            "hyper-erlang needs equal nonzero counts of weights/shapes/rates, got {}/{}/{}",
            weights.len(),
            shapes.len(),
            rates.len()
        )));
    }
    if let Some(&w) = weights.iter().find(|&&w| !(w >= 0.0 && w.is_finite())) {
        return Err(PhaseTypeError::InvalidParameter(format!(
            "hyper-erlang weights must be nonnegative, got {w}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(PhaseTypeError::InvalidParameter(format!(
            "hyper-erlang weights sum to {sum}, expected 1 within 1e-9"
        )));
    }
    if shapes.contains(&0) {
        return Err(PhaseTypeError::InvalidParameter(
            "hyper-erlang shapes must be at least 1".into(),
        ));
    }
    if let Some(&r) = rates.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(PhaseTypeError::InvalidParameter(format!(
            "hyper-erlang rates must be positive and finite, got {r}"
        )));
    }
    let m: usize = shapes.iter().sum();
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut alpha = DVector::<f64>::zeros(m);
    let mut offset = 0;
    for ((&w, &shape), &rate) in weights.iter().zip(shapes).zip(rates) {
        alpha[offset] = w / sum;
        for s in 0..shape {
            h[(offset + s, offset + s)] = -rate;
            if s + 1 < shape {
                h[(offset + s, offset + s + 1)] = rate;
            }
        }
        offset += shape;
    }
    PhaseType::new(alpha, h)
}

/// Erlang approximation of a point mass at `tau`: `n` stages at rate
/// `n / tau`, so the mean is exactly `tau` and the variance `tau^2 / n`.
pub fn dirac_approx(tau: f64, n: usize) -> Result<PhaseType, PhaseTypeError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PhaseTypeError::InvalidParameter(format!(
            "dirac approximation needs a positive finite delay, got {tau}"
        )));
    }
    erlang(n, n as f64 / tau)
}

/// Applies `exp(M t)` to `v` by uniform substepping with a truncated Taylor
/// series, never forming the exponential. Substeps keep `|M| t` per step at
/// most 1/2 so each series converges to machine precision in a few terms.
pub fn matrix_exp_action(
    m: &DMatrix<f64>,
    t: f64,
    v: &DVector<f64>,
) -> Result<DVector<f64>, PhaseTypeError> {
    if m.nrows() != m.ncols() {
        return Err(PhaseTypeError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() != v.len() {
        return Err(PhaseTypeError::ShapeMismatch);
    }
    if !t.is_finite() || m.iter().any(|x| !x.is_finite()) || v.iter().any(|x| !x.is_finite()) {
        return Err(PhaseTypeError::NonFinite);
    }
    let n = m.nrows();
    if n == 0 || t == 0.0 {
        return Ok(v.clone());
    }
    let norm = inf_norm(m) * t.abs();
    if norm == 0.0 {
        return Ok(v.clone());
    }
    let steps = (norm / 0.5).ceil().max(1.0);
    if steps > 1e9 {
        return Err(PhaseTypeError::InvalidParameter(format!(
            "matrix exponential action would need {steps} substeps; |M|*t = {norm} is too large"
        )));
    }
    let steps = steps as usize;
    let tau = t / steps as f64;
    let mut w = v.clone();
    for _ in 0..steps {
        let mut term = w.clone();
        let mut acc = w;
        for k in 1..=64 {
            term = m * &term;
            term *= tau / k as f64;
            acc += &term;
            if term.amax() <= 1e-18 * acc.amax().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        w = acc;
    }
    Ok(w)
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Density `alpha' exp(H t) h0` at `t >= 0`, clamped to stay nonnegative
/// against roundoff.
pub fn ph_density(ph: &PhaseType, t: f64) -> Result<f64, PhaseTypeError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PhaseTypeError::InvalidTime(t));
    }
    let w = matrix_exp_action(&ph.h, t, &ph.exit)?;
    Ok(ph.alpha.dot(&w).max(0.0))
}

/// Distribution function `1 - alpha' exp(H t) 1` at `t >= 0`, clamped into
/// `[0, 1]`.
pub fn ph_cdf(ph: &PhaseType, t: f64) -> Result<f64, PhaseTypeError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PhaseTypeError::InvalidTime(t));
    }
    let ones = DVector::from_element(ph.dim(), 1.0);
    let w = matrix_exp_action(&ph.h, t, &ones)?;
    Ok((1.0 - ph.alpha.dot(&w)).clamp(0.0, 1.0))
}

/// Raw moment `E[T^l] = (-1)^l l! alpha' H^{-l} 1` via repeated linear
/// solves against `H`.
pub fn ph_moment(ph: &PhaseType, l: usize) -> Result<f64, PhaseTypeError> {
    if l == 0 || l > 170 {
        return Err(PhaseTypeError::InvalidMomentOrder(l));
    }
    let lu = ph.h.clone().lu();
    let mut y = DVector::from_element(ph.dim(), 1.0);
    let mut factorial = 1.0f64;
    for k in 1..=l {
        y = lu
            .solve(&y)
            .ok_or_else(|| PhaseTypeError::InvalidParameter("subgenerator is singular".into()))?;
        factorial *= k as f64;
    }
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * factorial * ph.alpha.dot(&y))
}

/// Draws one absorption time by running the phase chain: categorical start
/// from `alpha`, exponential holding times, jumps at the off-diagonal rates,
/// absorption at rate `-(H 1)_i`.
pub fn sample_delay<R: Rng + ?Sized>(ph: &PhaseType, rng: &mut R) -> f64 {
    let n = ph.dim();
    let mut phase = {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = n - 1;
        for i in 0..n {
            acc += ph.alpha[i];
            if u < acc {
                chosen = i;
                break;
            }
        }
        // Roundoff may leave u unmatched; fall back to the last entered phase.
        if ph.alpha[chosen] == 0.0 {
            chosen = (0..n).rev().find(|&i| ph.alpha[i] > 0.0).unwrap_or(0);
        }
        chosen
    };
    let mut t = 0.0;
    loop {
        let total = -ph.h[(phase, phase)];
        debug_assert!(total > 0.0, "validated subgenerators have active phases");
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / total;
        let pick: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut next = None;
        for j in 0..n {
            if j == phase {
                continue;
            }
            acc += ph.h[(phase, j)];
            if pick < acc {
                next = Some(j);
                break;
            }
        }
        match next {
            Some(j) => phase = j,
            // Remaining mass is the exit rate: absorbed.
            None => return t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_density_and_cdf_match_scalar_formulas() {
        let ph = erlang(1, 2.0).unwrap();
        // Scalar laws: f(t) = 2 exp(-2t), F(t) = 1 - exp(-2t).
        for &t in &[0.0f64, 0.3, 1.0, 4.5] {
            let f = 2.0 * (-2.0 * t).exp();
            let big_f = 1.0 - (-2.0 * t).exp();
            assert!((ph_density(&ph, t).unwrap() - f).abs() < 1e-13);
            assert!((ph_cdf(&ph, t).unwrap() - big_f).abs() < 1e-13);
        }
    }

    #[test]
    fn erlang_density_matches_gamma_formula() {
        let ph = erlang(3, 2.0).unwrap();
        // f(t) = r^3 t^2 exp(-r t) / 2!
        for &t in &[0.1f64, 0.7, 2.0, 6.0] {
            let f = 8.0 * t * t * (-2.0 * t).exp() / 2.0;
            assert!(
                (ph_density(&ph, t).unwrap() - f).abs() < 1e-12,
                "t = {t}"
            );
        }
    }

    #[test]
    fn erlang_moments_follow_rising_factorials() {
        let ph = erlang(4, 3.0).unwrap();
        // E[T^l] = (N)(N+1)...(N+l-1) / r^l for Erlang(N, r).
        assert!((ph_moment(&ph, 1).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((ph_moment(&ph, 2).unwrap() - 20.0 / 9.0).abs() < 1e-12);
        assert!((ph_moment(&ph, 3).unwrap() - 120.0 / 27.0).abs() < 1e-11);
    }

    #[test]
    fn hypoexponential_mean_and_variance_are_stagewise_sums() {
        let rates = [1.0, 2.0, 5.0];
        let ph = hypoexponential(&rates).unwrap();
        let mean: f64 = rates.iter().map(|r| 1.0 / r).sum();
        let var: f64 = rates.iter().map(|r| 1.0 / (r * r)).sum();
        assert!((ph.mean() - mean).abs() < 1e-12);
        assert!((ph.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn hyper_erlang_moments_mix_branch_moments() {
        let ph = hyper_erlang(&[0.3, 0.7], &[2, 1], &[4.0, 1.5]).unwrap();
        let m1 = 0.3 * 2.0 / 4.0 + 0.7 * 1.0 / 1.5;
        let m2 = 0.3 * (2.0 * 3.0) / 16.0 + 0.7 * 2.0 / (1.5 * 1.5);
        assert!((ph_moment(&ph, 1).unwrap() - m1).abs() < 1e-12);
        assert!((ph_moment(&ph, 2).unwrap() - m2).abs() < 1e-12);
    }

    #[test]
    fn hyper_erlang_rejects_bad_weights() {
        let err = hyper_erlang(&[0.5, 0.6], &[1, 1], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, PhaseTypeError::InvalidParameter(_)));
    }

    #[test]
    fn dirac_approx_pins_mean_and_variance() {
        for &n in &[1usize, 8, 64] {
            let ph = dirac_approx(2.0, n).unwrap();
            assert!((ph.mean() - 2.0).abs() < 1e-12, "n = {n}");
            assert!((ph.variance() - 4.0 / n as f64).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn validation_names_each_failed_condition() {
        // Conservative generator: Metzler, but row sums vanish and 0 is an
        // eigenvalue.
        let h = dmatrix![-1.0, 1.0; 1.0, -1.0];
        match validate_subgenerator(&h) {
            Err(PhaseTypeError::InvalidSubgenerator(vs)) => {
                assert!(vs.iter().any(|v| matches!(v, SubgeneratorViolation::NoExit)));
                assert!(vs
                    .iter()
                    .any(|v| matches!(v, SubgeneratorViolation::NotHurwitz { .. })));
            }
            other => panic!("expected subgenerator violations, got {other:?}"),
        }

        let h = dmatrix![-1.0, -0.5; 0.0, -1.0];
        match validate_subgenerator(&h) {
            Err(PhaseTypeError::InvalidSubgenerator(vs)) => {
                assert!(vs.iter().any(|v| matches!(
                    v,
                    SubgeneratorViolation::NegativeOffDiagonal { row: 0, col: 1, .. }
                )));
            }
            other => panic!("expected a Metzler violation, got {other:?}"),
        }

        let h = dmatrix![-1.0, 2.0; 0.0, -1.0];
        match validate_subgenerator(&h) {
            Err(PhaseTypeError::InvalidSubgenerator(vs)) => {
                assert!(vs
                    .iter()
                    .any(|v| matches!(v, SubgeneratorViolation::PositiveRowSum { row: 0, .. })));
            }
            other => panic!("expected a row-sum violation, got {other:?}"),
        }

        assert!(validate_subgenerator(&dmatrix![-2.0, 1.0; 0.5, -3.0]).is_ok());
    }

    #[test]
    fn non_square_subgenerator_is_rejected() {
        let h = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            validate_subgenerator(&h),
            Err(PhaseTypeError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn alpha_validation_rejects_bad_vectors() {
        let h = dmatrix![-2.0, 1.0; 0.5, -3.0];
        let err = PhaseType::new(dvector![0.5, 0.6], h.clone()).unwrap_err();
        assert!(matches!(err, PhaseTypeError::InvalidAlpha(_)));
        let err = PhaseType::new(dvector![-0.1, 1.1], h.clone()).unwrap_err();
        assert!(matches!(err, PhaseTypeError::InvalidAlpha(_)));
        let err = PhaseType::new(dvector![1.0], h).unwrap_err();
        assert!(matches!(err, PhaseTypeError::DimensionMismatch { .. }));
    }

    #[test]
    fn exp_action_on_nilpotent_matrix_is_exact() {
        // exp(Nt) = I + Nt when N^2 = 0.
        let m = dmatrix![0.0, 1.0; 0.0, 0.0];
        let v = dvector![2.0, 3.0];
        let w = matrix_exp_action(&m, 0.25, &v).unwrap();
        assert!((w[0] - (2.0 + 0.25 * 3.0)).abs() < 1e-14);
        assert!((w[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exp_action_reproduces_rotation() {
        // exp([[0,-1],[1,0]] t) rotates by angle t.
        let m = dmatrix![0.0, -1.0; 1.0, 0.0];
        let v = dvector![1.0, 0.0];
        let t = std::f64::consts::FRAC_PI_3;
        let w = matrix_exp_action(&m, t, &v).unwrap();
        assert!((w[0] - t.cos()).abs() < 1e-13);
        assert!((w[1] - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn exp_action_matches_dense_exponential() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(1..6);
            let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
            let v = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let t = rng.gen_range(0.0..3.0);
            let exact = (m.clone() * t).exp() * &v;
            let ours = matrix_exp_action(&m, t, &v).unwrap();
            let scale = exact.amax().max(1.0);
            assert!(
                (&ours - &exact).amax() <= 1e-12 * scale,
                "n={n} t={t} err={}",
                (&ours - &exact).amax() / scale
            );
        }
    }

    #[test]
    fn exp_action_handles_zero_time_and_zero_matrix() {
        let m = DMatrix::<f64>::zeros(3, 3);
        let v = dvector![1.0, -2.0, 0.5];
        assert_eq!(matrix_exp_action(&m, 5.0, &v).unwrap(), v);
        let m = dmatrix![-1.0, 0.0; 0.0, -1.0];
        let v2 = dvector![1.0, 2.0];
        assert_eq!(matrix_exp_action(&m, 0.0, &v2).unwrap(), v2);
    }

    #[test]
    fn density_integrates_to_cdf_on_a_coarse_grid() {
        // Trapezoid integration of the density should track the cdf; a loose
        // bound here, the sharp quadrature checks live in the oracle suite.
        let ph = hyper_erlang(&[0.4, 0.6], &[3, 1], &[2.0, 0.7]).unwrap();
        let step = 1e-3;
        let mut acc = 0.0;
        let mut prev = ph_density(&ph, 0.0).unwrap();
        for k in 1..=4000 {
            let t = k as f64 * step;
            let cur = ph_density(&ph, t).unwrap();
            acc += 0.5 * (prev + cur) * step;
            prev = cur;
        }
        let cdf = ph_cdf(&ph, 4.0).unwrap();
        assert!((acc - cdf).abs() < 1e-6, "acc={acc} cdf={cdf}");
    }

    #[test]
    fn cdf_is_monotone_and_saturates() {
        let ph = hypoexponential(&[1.0, 3.0]).unwrap();
        let mut last = -1.0;
        for k in 0..60 {
            let t = 0.25 * k as f64;
            let f = ph_cdf(&ph, t).unwrap();
            assert!(f >= last);
            last = f;
        }
        assert!(ph_cdf(&ph, 80.0).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_per_seed_and_matches_moments() {
        let ph = hyper_erlang(&[0.25, 0.75], &[2, 1], &[3.0, 0.8]).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            assert_eq!(sample_delay(&ph, &mut a), sample_delay(&ph, &mut b));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = sample_delay(&ph, &mut rng);
            assert!(x > 0.0);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se_mean = (ph.variance() / n as f64).sqrt();
        assert!(
            (mean - ph.mean()).abs() < 4.0 * se_mean,
            "mean {mean} vs {}",
            ph.mean()
        );
        // Crude four-sigma guard on the variance using the fourth moment.
        let m4 = ph_moment(&ph, 4).unwrap();
        let se_var = ((m4 - ph.variance().powi(2)) / n as f64).sqrt();
        assert!((var - ph.variance()).abs() < 4.0 * se_var);
    }

    #[test]
    fn time_domain_guards() {
        let ph = erlang(2, 1.0).unwrap();
        assert!(matches!(
            ph_density(&ph, -0.1),
            Err(PhaseTypeError::InvalidTime(_))
        ));
        assert!(matches!(
            ph_cdf(&ph, f64::NAN),
            Err(PhaseTypeError::InvalidTime(_))
        ));
        assert!(matches!(
            ph_moment(&ph, 0),
            Err(PhaseTypeError::InvalidMomentOrder(0))
        ));
    }
}
