//! Exact rational simplex for positive-witness feasibility problems.
//!
//! All certificate searches in this crate reduce to one shape: find a
//! vector `v` and the largest margin `t` such that
//!
//! * `v' m_j + t <= 0` for every column of every strict block,
//! * `v' n_j <= 0` for every column of every nonstrict block,
//! * `v' E = r'` for every equality block,
//! * `v_i >= t` for a designated set of indices,
//! * `v >= 0` throughout, optionally pinned by `sum v = 1`.
//!
//! The optimum `t*` decides strict feasibility exactly: the system with
//! all inequalities strict admits a solution iff `t* > 0`. Floating-point
//! inputs are converted to rationals exactly (every finite f64 is a
//! rational), so the sign of `t*` is free of roundoff.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpError {
    /// An input entry was NaN or infinite.
    NonFinite,
    /// Block dimensions disagree with the variable dimension.
    Shape(String),
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::NonFinite => write!(f, "non-finite entry in linear program data"),
            LpError::Shape(msg) => write!(f, "inconsistent linear program shape: {msg}"),
        }
    }
}

impl std::error::Error for LpError {}

/// Margin-maximization problem over `dim` base variables.
pub struct WitnessProblem<'a> {
    pub dim: usize,
    /// Columns demanding `v' m_j <= -t`.
    pub strict: Vec<&'a DMatrix<f64>>,
    /// Columns demanding `v' n_j <= 0`.
    pub nonstrict: Vec<&'a DMatrix<f64>>,
    /// Pairs `(E, r)` demanding `v' E = r'`.
    pub eq: Vec<(&'a DMatrix<f64>, DVector<f64>)>,
    /// Indices with `v_i >= t`.
    pub positive: Vec<usize>,
    /// Add `sum v = 1` to pin the scale.
    pub normalize: bool,
}

/// Result of a margin maximization.
pub struct MarginSolution {
    /// Best achievable margin, `+inf` when unbounded.
    pub margin: f64,
    /// Exact sign of the optimal margin.
    pub margin_positive: bool,
    /// Witness attaining the margin (a feasible point when unbounded).
    pub v: DVector<f64>,
}

/// Maximizes the margin. `Ok(None)` means the margin-free constraints
/// (equalities, nonstrict columns, sign restrictions) are themselves
/// infeasible; strict columns alone never cause that since `t` is free.
pub fn max_margin(p: &WitnessProblem) -> Result<Option<MarginSolution>, LpError> {
    let (rows, rhs, n_vars, obj) = assemble(p)?;
    match solve(rows.clone(), rhs.clone(), obj) {
        Outcome::Infeasible => Ok(None),
        Outcome::Optimal { value, z } => Ok(Some(extract(p, &value, &z, false))),
        Outcome::Unbounded => {
            // Pin t = 1 and re-solve for any feasible point with unit margin.
            let mut rows = rows;
            let mut rhs = rhs;
            let mut pin = vec![Rat::zero(); n_vars];
            pin[p.dim] = Rat::from_integer(1.into());
            pin[p.dim + 1] = Rat::from_integer((-1).into());
            rows.push(pin);
            rhs.push(Rat::from_integer(1.into()));
            match solve(rows, rhs, vec![Rat::zero(); n_vars]) {
                Outcome::Optimal { z, .. } => Ok(Some(extract(p, &Rat::zero(), &z, true))),
                _ => Err(LpError::Shape("unbounded margin with empty t = 1 slice".into())),
            }
        }
    }
}

fn extract(p: &WitnessProblem, value: &Rat, z: &[Rat], unbounded: bool) -> MarginSolution {
    let v = DVector::from_iterator(p.dim, z[..p.dim].iter().map(|x| x.to_f64().unwrap_or(0.0)));
    MarginSolution {
        margin: if unbounded { f64::INFINITY } else { value.to_f64().unwrap_or(0.0) },
        margin_positive: unbounded || value.is_positive(),
        v,
    }
}

fn rat(x: f64) -> Result<Rat, LpError> {
    Rat::from_f64(x).ok_or(LpError::NonFinite)
}

/// Builds equality rows over the full variable vector
/// `[v_0..v_{dim-1}, t+, t-, slacks...]` with all variables nonnegative.
#[allow(clippy::type_complexity)]
fn assemble(p: &WitnessProblem) -> Result<(Vec<Vec<Rat>>, Vec<Rat>, usize, Vec<Rat>), LpError> {
    let d = p.dim;
    let one = || Rat::from_integer(1.into());
    let neg = || Rat::from_integer((-1).into());

    let n_strict: usize = p.strict.iter().map(|m| m.ncols()).sum();
    let n_nonstrict: usize = p.nonstrict.iter().map(|m| m.ncols()).sum();
    let n_slack = n_strict + n_nonstrict + p.positive.len();
    let n_vars = d + 2 + n_slack;

    for m in p.strict.iter().chain(p.nonstrict.iter()) {
        if m.nrows() != d {
            return Err(LpError::Shape(format!("block has {} rows, expected {d}", m.nrows())));
        }
    }
    for (e, r) in &p.eq {
        if e.nrows() != d || e.ncols() != r.len() {
            return Err(LpError::Shape("equality block shape".into()));
        }
    }
    for &i in &p.positive {
        if i >= d {
            return Err(LpError::Shape(format!("positive index {i} out of range {d}")));
        }
    }

    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    let mut slack = d + 2;

    if p.normalize {
        let mut row = vec![Rat::zero(); n_vars];
        for cell in row.iter_mut().take(d) {
            *cell = one();
        }
        rows.push(row);
        rhs.push(one());
    }
    for (e, r) in &p.eq {
        for j in 0..e.ncols() {
            let mut row = vec![Rat::zero(); n_vars];
            for i in 0..d {
                row[i] = rat(e[(i, j)])?;
            }
            rows.push(row);
            rhs.push(rat(r[j])?);
        }
    }
    for m in &p.strict {
        for j in 0..m.ncols() {
            let mut row = vec![Rat::zero(); n_vars];
            for i in 0..d {
                row[i] = rat(m[(i, j)])?;
            }
            row[d] = one();
            row[d + 1] = neg();
            row[slack] = one();
            slack += 1;
            rows.push(row);
            rhs.push(Rat::zero());
        }
    }
    for m in &p.nonstrict {
        for j in 0..m.ncols() {
            let mut row = vec![Rat::zero(); n_vars];
            for i in 0..d {
                row[i] = rat(m[(i, j)])?;
            }
            row[slack] = one();
            slack += 1;
            rows.push(row);
            rhs.push(Rat::zero());
        }
    }
    for &i in &p.positive {
        let mut row = vec![Rat::zero(); n_vars];
        row[i] = one();
        row[d] = neg();
        row[d + 1] = one();
        row[slack] = neg();
        slack += 1;
        rows.push(row);
        rhs.push(Rat::zero());
    }
    debug_assert_eq!(slack, n_vars);

    let mut obj = vec![Rat::zero(); n_vars];
    obj[d] = one();
    obj[d + 1] = neg();
    Ok((rows, rhs, n_vars, obj))
}

enum Outcome {
    Infeasible,
    Optimal { value: Rat, z: Vec<Rat> },
    Unbounded,
}

/// Two-phase primal simplex with Bland's rule on
/// `max c'z  s.t.  A z = b, z >= 0`, everything in exact rationals.
fn solve(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>, c: Vec<Rat>) -> Outcome {
    let m = a.len();
    let n = c.len();
    for i in 0..m {
        if b[i].is_negative() {
            for x in a[i].iter_mut() {
                *x = -x.clone();
            }
            b[i] = -b[i].clone();
        }
    }
    // Artificial columns n..n+m.
    for (i, row) in a.iter_mut().enumerate() {
        row.extend((0..m).map(|j| {
            if i == j { Rat::from_integer(1.into()) } else { Rat::zero() }
        }));
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut phase1 = vec![Rat::zero(); n + m];
    for cell in phase1.iter_mut().skip(n) {
        *cell = Rat::from_integer((-1).into());
    }
    let mut val = Rat::zero();
    reduce_objective(&a, &b, &basis, &mut phase1, &mut val);
    if !pivot_loop(&mut a, &mut b, &mut basis, &mut phase1, &mut val) {
        unreachable!("phase 1 is bounded above by zero");
    }
    if val.is_negative() {
        return Outcome::Infeasible;
    }
    drive_out_artificials(&mut a, &mut b, &mut basis, n);

    let keep: Vec<usize> = (0..basis.len()).collect();
    debug_assert!(keep.iter().all(|&i| basis[i] < n));
    for row in a.iter_mut() {
        row.truncate(n);
    }

    let mut obj = c;
    let mut val = Rat::zero();
    reduce_objective(&a, &b, &basis, &mut obj, &mut val);
    if !pivot_loop(&mut a, &mut b, &mut basis, &mut obj, &mut val) {
        return Outcome::Unbounded;
    }
    let mut z = vec![Rat::zero(); n];
    for (i, &bi) in basis.iter().enumerate() {
        z[bi] = b[i].clone();
    }
    Outcome::Optimal { value: val, z }
}

/// Rewrites `obj`/`val` so reduced costs of basic variables vanish.
fn reduce_objective(a: &[Vec<Rat>], b: &[Rat], basis: &[usize], obj: &mut [Rat], val: &mut Rat) {
    for (i, &bi) in basis.iter().enumerate() {
        if !obj[bi].is_zero() {
            let f = obj[bi].clone();
            for (o, x) in obj.iter_mut().zip(a[i].iter()) {
                *o -= &f * x;
            }
            *val += &f * &b[i];
        }
    }
}

/// Runs primal pivots to optimality. Returns false on unboundedness.
fn pivot_loop(
    a: &mut [Vec<Rat>],
    b: &mut [Rat],
    basis: &mut [usize],
    obj: &mut [Rat],
    val: &mut Rat,
) -> bool {
    loop {
        // Bland: smallest index with positive reduced cost.
        let Some(col) = obj.iter().position(|x| x.is_positive()) else {
            return true;
        };
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..a.len() {
            if a[i][col].is_positive() {
                let ratio = &b[i] / &a[i][col];
                let better = match &leave {
                    None => true,
                    Some((r, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*r]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            return false;
        };
        pivot(a, b, basis, obj, val, row, col);
    }
}

fn pivot(
    a: &mut [Vec<Rat>],
    b: &mut [Rat],
    basis: &mut [usize],
    obj: &mut [Rat],
    val: &mut Rat,
    row: usize,
    col: usize,
) {
    let p = a[row][col].clone();
    for x in a[row].iter_mut() {
        *x /= &p;
    }
    b[row] /= &p;
    let (pivot_row, pivot_rhs) = (a[row].clone(), b[row].clone());
    for i in 0..a.len() {
        if i != row && !a[i][col].is_zero() {
            let f = a[i][col].clone();
            for (x, pr) in a[i].iter_mut().zip(pivot_row.iter()) {
                *x -= &f * pr;
            }
            b[i] -= &f * &pivot_rhs;
        }
    }
    if !obj[col].is_zero() {
        let f = obj[col].clone();
        for (o, pr) in obj.iter_mut().zip(pivot_row.iter()) {
            *o -= &f * pr;
        }
        *val += &f * &pivot_rhs;
    }
    basis[row] = col;
}

/// Pivots remaining artificial basics onto structural columns; rows that
/// admit no pivot are redundant equalities and are dropped.
fn drive_out_artificials(a: &mut Vec<Vec<Rat>>, b: &mut Vec<Rat>, basis: &mut Vec<usize>, n: usize) {
    let mut i = 0;
    while i < basis.len() {
        if basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| !a[i][j].is_zero()) {
                let mut val = Rat::zero();
                let mut dummy = vec![Rat::zero(); a[i].len()];
                pivot(a, b, basis, &mut dummy, &mut val, i, col);
            } else {
                a.remove(i);
                b.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
}
