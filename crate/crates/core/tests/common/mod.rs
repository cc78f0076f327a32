//! Shared generators and independent numerical oracles for the
//! integration suites.

#![allow(dead_code)]
#![allow(clippy::too_many_arguments, clippy::needless_range_loop)]

use phasenet::nalgebra::DMatrix;
use phasenet::netmodel::{Delay, DelayKind, Network, Realization};
use phasenet::phasetype::{ph_cdf, PhaseType};
use rand::Rng;

/// Adaptive Simpson quadrature with an absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// Upper quantile of a phase-type law by bisection on the CDF.
pub fn ph_quantile(ph: &PhaseType, p: f64) -> f64 {
    let mut hi = ph.mean();
    while ph_cdf(ph, hi).unwrap() < p {
        hi *= 2.0;
        assert!(hi.is_finite());
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ph_cdf(ph, mid).unwrap() < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Two-sided Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let c = cdf(x);
        d = d.max(c - i as f64 / n);
        d = d.max((i as f64 + 1.0) / n - c);
    }
    d
}

/// Random subgenerator with a strictly positive exit rate from at least the
/// last phase and a random normalized entry distribution. Draws that trap
/// probability in a zero-exit class (singular subgenerator) are rejected.
pub fn random_phase_type(rng: &mut impl Rng, max_dim: usize) -> PhaseType {
    loop {
        let m = rng.gen_range(1..=max_dim);
        let mut h = vec![vec![0.0f64; m]; m];
        for i in 0..m {
            let mut out = 0.0;
            for j in 0..m {
                if i != j && rng.gen_bool(0.6) {
                    h[i][j] = rng.gen_range(0.1..2.0);
                    out += h[i][j];
                }
            }
            let exit = if i == m - 1 || rng.gen_bool(0.4) {
                rng.gen_range(0.2..2.5)
            } else {
                0.0
            };
            h[i][i] = -(out + exit);
        }
        let mut alpha = vec![0.0f64; m];
        for a in alpha.iter_mut() {
            if rng.gen_bool(0.7) {
                *a = rng.gen_range(0.05..1.0);
            }
        }
        if alpha.iter().all(|&a| a == 0.0) {
            alpha[0] = 1.0;
        }
        let total: f64 = alpha.iter().sum();
        for a in alpha.iter_mut() {
            *a /= total;
        }
        let delay = Delay {
            kind: DelayKind::Raw { alpha, h },
            realization: Realization::NonAbsorbing,
        };
        if let Ok(ph) = delay.phase_type() {
            return ph;
        }
    }
}

/// Random delay of at most `max_dim` phases with a mixed realization.
pub fn random_delay(rng: &mut impl Rng, max_dim: usize) -> Delay {
    let kind = match rng.gen_range(0..4) {
        0 => DelayKind::Erlang {
            shape: rng.gen_range(1..=max_dim),
            rate: rng.gen_range(0.5..4.0),
        },
        1 => {
            let n = rng.gen_range(1..=max_dim);
            DelayKind::Hypoexp {
                rates: (0..n).map(|_| rng.gen_range(0.5..4.0)).collect(),
            }
        }
        2 => {
            let mut shapes = Vec::new();
            let mut budget = max_dim;
            for _ in 0..rng.gen_range(1..=2) {
                let s = rng.gen_range(1..=budget.min(2));
                budget -= s;
                shapes.push(s);
                if budget == 0 {
                    break;
                }
            }
            let n = shapes.len();
            let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= total;
            }
            let rates = (0..n).map(|_| rng.gen_range(0.5..4.0)).collect();
            DelayKind::HyperErlang { weights, shapes, rates }
        }
        _ => {
            let ph = random_phase_type(rng, max_dim);
            DelayKind::Raw {
                alpha: ph.alpha().iter().copied().collect(),
                h: (0..ph.dim())
                    .map(|i| (0..ph.dim()).map(|j| ph.h()[(i, j)]).collect())
                    .collect(),
            }
        }
    };
    let realization = if rng.gen_bool(0.5) {
        Realization::NonAbsorbing
    } else {
        Realization::Absorbing
    };
    Delay { kind, realization }
}

/// Random first-order network: 2-6 species with guaranteed turnover,
/// births, conversions, catalytic productions, occasional self-replication,
/// and 0-3 random delays. Networks whose delay-free drift sits within
/// 0.35 of the stability boundary (or whose stationary mass is large) are
/// rejected so the corpus splits into clear verdicts that simulations can
/// confirm in bounded time.
pub fn random_unimolecular_network(rng: &mut impl Rng) -> Network {
    loop {
        let d = rng.gen_range(2..=6);
        let mut lines = vec![format!(
            "[species] {}",
            (1..=d).map(|i| format!("X{i}")).collect::<Vec<_>>().join(" ")
        )];
        for i in 1..=d {
            lines.push(format!("[reaction] X{i} -> 0 rate={}", rng.gen_range(0.5..2.0)));
        }
        for _ in 0..rng.gen_range(1..=2) {
            let i = rng.gen_range(1..=d);
            lines.push(format!("[reaction] 0 -> X{i} rate={}", rng.gen_range(1.0..3.0)));
        }
        for _ in 0..rng.gen_range(0..=3) {
            let i = rng.gen_range(1..=d);
            let j = rng.gen_range(1..=d);
            if i == j {
                continue;
            }
            if rng.gen_bool(0.5) {
                lines.push(format!(
                    "[reaction] X{i} -> X{j} rate={}",
                    rng.gen_range(0.2..1.5)
                ));
            } else {
                lines.push(format!(
                    "[reaction] X{i} -> X{i} + X{j} rate={}",
                    rng.gen_range(0.2..1.2)
                ));
            }
        }
        if rng.gen_bool(0.15) {
            let i = rng.gen_range(1..=d);
            lines.push(format!(
                "[reaction] X{i} -> 2 X{i} rate={}",
                rng.gen_range(0.2..1.5)
            ));
        }
        let mut net =
            phasenet::netmodel::parse_network(&(lines.join("\n") + "\n")).expect("valid text");

        for _ in 0..rng.gen_range(0..=3) {
            let r = rng.gen_range(0..net.reactions.len());
            if net.reactions[r].delay.is_none() {
                net.reactions[r].delay = Some(random_delay(rng, 4));
            }
        }

        let view = phasenet::augment::delay_free_view(&net).expect("first-order network");
        let abscissa = phasenet::ergodicity::spectral_abscissa(&view.a_df);
        if abscissa >= 1e-3 {
            return net;
        }
        if abscissa <= -0.35 {
            if let Some(mean) = view.a_df.clone().lu().solve(&(-&view.b_df)) {
                if mean.iter().all(|&m| m.abs() < 40.0) {
                    return net;
                }
            }
        }
    }
}

/// Random Metzler matrix with entries spread around the stability
/// boundary; callers filter on the abscissa themselves.
pub fn random_metzler(rng: &mut impl Rng, max_dim: usize) -> DMatrix<f64> {
    let d = rng.gen_range(1..=max_dim);
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            if i != j && rng.gen_bool(0.5) {
                m[(i, j)] = rng.gen_range(0.0..2.0);
                row += m[(i, j)];
            }
        }
        m[(i, i)] = -row + rng.gen_range(-1.5..0.75);
    }
    m
}
