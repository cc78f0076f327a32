//! First-order moment dynamics of delay-augmented networks.
//!
//! For networks with at most first-order kinetics the mean vector over
//! `(species, delay phases)` obeys an affine linear ODE built from the
//! augmentation blocks. [`moment_ode`] integrates it by exact exponential
//! stepping; [`convolution_form`] re-derives the species block through the
//! delay density and distribution functions and serves as an independent
//! oracle; [`stationary_mean`] solves the delay-free fixed point, which
//! the delayed dynamics provably share.

use crate::augment::{
    delay_free_view, multiset_vector, AugmentedNetwork, AugmentError,
};
use crate::numeric::{spectral_abscissa, HURWITZ_TOL};
use crate::phasetype::matrix_exp_action;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, thiserror::Error)]
pub enum MomentsError {
    #[error("moment equations are not closed: the network has bimolecular reactions")]
    NotClosed,
    #[error("initial means must have {expected} entries (or the base {base}), got {got}")]
    Dimension { expected: usize, base: usize, got: usize },
    #[error("steps must be at least 1")]
    NoSteps,
    #[error("horizon must be positive and finite")]
    BadHorizon,
    #[error("no unique stationary mean: the delay-free drift matrix is not Hurwitz")]
    NotStationary,
    #[error("all rates must be positive and finite")]
    BadParameter,
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Phase(#[from] crate::phasetype::PhaseTypeError),
}

/// Mean trace on a uniform time grid.
#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    /// Grid times, `steps + 1` of them starting at 0.
    pub grid: Vec<f64>,
    /// Mean vector per grid time.
    pub means: Vec<DVector<f64>>,
}

fn check_grid(t_end: f64, steps: usize) -> Result<f64, MomentsError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(MomentsError::BadHorizon);
    }
    if steps == 0 {
        return Err(MomentsError::NoSteps);
    }
    Ok(t_end / steps as f64)
}

fn initial_means(
    aug: &AugmentedNetwork,
    m0: &[f64],
) -> Result<DVector<f64>, MomentsError> {
    let n = aug.n_total();
    if m0.len() == n {
        Ok(DVector::from_column_slice(m0))
    } else if m0.len() == aug.n_base {
        let mut v = DVector::zeros(n);
        v.rows_mut(0, aug.n_base).copy_from_slice(m0);
        Ok(v)
    } else {
        Err(MomentsError::Dimension { expected: n, base: aug.n_base, got: m0.len() })
    }
}

/// Integrates the affine moment ODE `dm/dt = M m + beta` on the augmented
/// state. Each step applies the exact matrix exponential of the
/// homogenized system (the state is extended by a constant coordinate), so
/// the only error source is the exponential kernel tolerance. `m0` may
/// cover the base species only; delay phases then start empty.
pub fn moment_ode(
    aug: &AugmentedNetwork,
    m0: &[f64],
    t_end: f64,
    steps: usize,
) -> Result<MomentTrajectory, MomentsError> {
    if aug.network.has_bimolecular() {
        return Err(MomentsError::NotClosed);
    }
    let h = check_grid(t_end, steps)?;
    let blocks = aug.blocks.as_ref().ok_or(MomentsError::NotClosed)?;
    let n = aug.n_total();
    let drift = blocks.assembled();
    let offset = blocks.assembled_offset();

    let mut hom = DMatrix::<f64>::zeros(n + 1, n + 1);
    hom.view_mut((0, 0), (n, n)).copy_from(&drift);
    hom.view_mut((0, n), (n, 1)).copy_from(&offset);

    let mut y = DVector::zeros(n + 1);
    y.rows_mut(0, n).copy_from(&initial_means(aug, m0)?);
    y[n] = 1.0;

    let mut grid = Vec::with_capacity(steps + 1);
    let mut means = Vec::with_capacity(steps + 1);
    grid.push(0.0);
    means.push(y.rows(0, n).into_owned());
    for k in 1..=steps {
        y = matrix_exp_action(&hom, h, &y)?;
        grid.push(k as f64 * h);
        means.push(y.rows(0, n).into_owned());
    }
    Ok(MomentTrajectory { grid, means })
}

/// Integrates the species-block means through the delay-kernel form: the
/// drift couples to the history through the delay densities, to the
/// initial in-progress content through `B e^{H't}`, and to constant-rate
/// delayed inputs through the delay distribution functions. Discretized by
/// a trapezoid predictor-corrector on a uniform grid; this is a
/// cross-check oracle for [`moment_ode`], not the primary solver.
///
/// `d0` is the initial mean content of the delay phases (zero when
/// omitted).
pub fn convolution_form(
    aug: &AugmentedNetwork,
    m0_x: &[f64],
    d0: Option<&[f64]>,
    t_end: f64,
    steps: usize,
) -> Result<MomentTrajectory, MomentsError> {
    if aug.network.has_bimolecular() {
        return Err(MomentsError::NotClosed);
    }
    let h = check_grid(t_end, steps)?;
    let blocks = aug.blocks.as_ref().ok_or(MomentsError::NotClosed)?;
    let d = aug.n_base;
    let m_total = aug.n_delay_species();
    if m0_x.len() != d {
        return Err(MomentsError::Dimension { expected: d, base: d, got: m0_x.len() });
    }
    let d0 = match d0 {
        Some(v) => {
            if v.len() != m_total {
                return Err(MomentsError::Dimension {
                    expected: m_total,
                    base: m_total,
                    got: v.len(),
                });
            }
            DVector::from_column_slice(v)
        }
        None => DVector::zeros(m_total),
    };

    // Per line: completion vector, density and distribution on the grid,
    // and the entry intensity (rate * species coordinate, or a constant
    // for zeroth-order initiations).
    struct Kernel {
        completion: DVector<f64>,
        density: Vec<f64>,
        distribution: Vec<f64>,
        rate: f64,
        input: Option<usize>,
    }
    let mut kernels = Vec::with_capacity(aug.lines.len());
    for line in &aug.lines {
        let ph = &line.ph;
        let h_t = ph.h().transpose();
        let exit = ph.exit_rates();
        let mut z = ph.alpha().clone();
        let mut density = Vec::with_capacity(steps + 1);
        let mut distribution = Vec::with_capacity(steps + 1);
        for m in 0..=steps {
            if m > 0 {
                z = matrix_exp_action(&h_t, h, &z)?;
            }
            density.push(z.dot(exit));
            distribution.push((1.0 - z.sum()).clamp(0.0, 1.0));
        }
        kernels.push(Kernel {
            completion: multiset_vector(&line.completion_products(), d),
            density,
            distribution,
            rate: line.rate,
            input: line.input_species,
        });
    }

    // B e^{H't} d0 evolved stepwise.
    let mut in_progress = Vec::with_capacity(steps + 1);
    let mut delta = d0;
    for m in 0..=steps {
        if m > 0 {
            delta = matrix_exp_action(&blocks.h_t, h, &delta)?;
        }
        in_progress.push(&blocks.b * &delta);
    }

    let a = &blocks.a;
    let b0 = &blocks.b0;
    let mut xs: Vec<DVector<f64>> = Vec::with_capacity(steps + 2);
    xs.push(DVector::from_column_slice(m0_x));

    // History convolution at node n with the trapezoid rule; entry
    // intensities read one coordinate, so each kernel contributes a
    // scalar weight times its completion vector.
    let conv = |xs: &[DVector<f64>], n: usize, out: &mut DVector<f64>| {
        for kern in &kernels {
            let mut acc = 0.0;
            if n > 0 {
                for m in 0..=n {
                    let weight = if m == 0 || m == n { 0.5 * h } else { h };
                    let intensity = match kern.input {
                        Some(j) => kern.rate * xs[n - m][j],
                        None => 0.0,
                    };
                    acc += weight * kern.density[m] * intensity;
                }
            }
            if kern.input.is_none() {
                // Constant-rate initiations integrate to the delay
                // distribution function exactly.
                acc += kern.rate * kern.distribution[n];
            }
            out.axpy(acc, &kern.completion, 1.0);
        }
    };
    let rhs = |xs: &[DVector<f64>], n: usize| -> DVector<f64> {
        let mut out = a * &xs[n] + b0 + &in_progress[n];
        conv(xs, n, &mut out);
        out
    };

    let mut grid = Vec::with_capacity(steps + 1);
    grid.push(0.0);
    for n in 0..steps {
        let f_n = rhs(&xs, n);
        let predictor = &xs[n] + h * &f_n;
        xs.push(predictor);
        let f_next = rhs(&xs, n + 1);
        let corrected = &xs[n] + 0.5 * h * (f_n + f_next);
        xs[n + 1] = corrected;
        grid.push((n + 1) as f64 * h);
    }
    Ok(MomentTrajectory { grid, means: xs })
}

/// Stationary mean over the base species: the unique solution of
/// `A_df m = -b_df`. By the invariance property this is also the
/// stationary mean of the delayed network, whatever the delays.
pub fn stationary_mean(aug: &AugmentedNetwork) -> Result<DVector<f64>, MomentsError> {
    if aug.base.has_bimolecular() {
        return Err(MomentsError::NotClosed);
    }
    let view = delay_free_view(&aug.base)?;
    let d = aug.n_base;
    if d == 0 {
        return Ok(DVector::zeros(0));
    }
    if !(spectral_abscissa(&view.a_df) < -HURWITZ_TOL) {
        return Err(MomentsError::NotStationary);
    }
    view.a_df
        .clone()
        .lu()
        .solve(&(-&view.b_df))
        .ok_or(MomentsError::NotStationary)
}

/// Closed-form stationary statistics of the two-stage expression network
/// (transcription `k1`, mRNA decay `g1`, translation `k2`, protein decay
/// `g2`) with an optional exponential translation delay of rate `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct GeneExpressionVariance {
    /// Stationary protein mean, unchanged by the delay.
    pub mean: f64,
    /// Delay-free protein variance.
    pub variance: f64,
    /// Protein variance under the exponential delay, when requested.
    pub variance_delayed: Option<f64>,
    /// `variance_delayed / variance`.
    pub ratio: Option<f64>,
}

/// Evaluates the closed forms. For finite `lambda` the delayed variance
/// sits strictly between the Poisson floor (the mean) and the delay-free
/// variance, and grows back to the latter as `lambda` increases.
pub fn gene_expression_variance(
    k1: f64,
    g1: f64,
    k2: f64,
    g2: f64,
    lambda: Option<f64>,
) -> Result<GeneExpressionVariance, MomentsError> {
    let params = [k1, g1, k2, g2];
    if params.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(MomentsError::BadParameter);
    }
    if let Some(l) = lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(MomentsError::BadParameter);
        }
    }
    let mean = k1 * k2 / (g1 * g2);
    let variance = mean * (1.0 + k2 / (g1 + g2));
    let variance_delayed = lambda.map(|l| {
        let s = g1 + g2;
        mean * (g1 * g2 * s + l * s * (s + k2) + l * l * (s + k2))
            / (s * (g1 + l) * (g2 + l))
    });
    if let Some(v_l) = variance_delayed {
        debug_assert!(mean < v_l * (1.0 + 1e-12) && v_l < variance * (1.0 + 1e-12));
    }
    Ok(GeneExpressionVariance {
        mean,
        variance,
        variance_delayed,
        ratio: variance_delayed.map(|v| v / variance),
    })
}

/// Derivative in `lambda` of the variance ratio; positive for all positive
/// parameters, which is the monotone-recovery statement in closed form.
pub fn gene_expression_ratio_slope(g1: f64, g2: f64, k2: f64, lambda: f64) -> f64 {
    let s = g1 + g2;
    g1 * g2 * k2 * (s + 2.0 * lambda)
        / ((s + k2) * (g1 + lambda).powi(2) * (g2 + lambda).powi(2))
}
