//! Reaction-network data model and its line-oriented text format.
//!
//! Networks hold mass-action reactions of order at most two. A reaction may
//! carry a phase-type delay block, in which case its products appear only
//! after the sampled delay; how the delay consumes reactants is controlled
//! by the realization mode.
//!
//! File format, one directive per line (`#` starts a comment):
//!
//! ```text
//! [species] X1 X2
//! [reaction] 0 -> X1 rate=10
//! [reaction] X1 -> 0 rate=1
//! [reaction] X1 -> X1 + X2 rate=5 delay={kind=erlang shape=3 rate=6 realization=nonabsorbing}
//! ```
//!
//! `0` denotes the empty multiset. Delay kinds are `erlang`, `hypoexp`,
//! `hypererlang`, and `raw` (explicit `alpha=[...]` and `H=[[...],...]`).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::phasetype::{self, PhaseType, PhaseTypeError};

/// Sorted `(species index, count)` pairs with positive counts.
pub type Multiset = Vec<(usize, u32)>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("species name {0:?} is invalid (want [A-Za-z_][A-Za-z0-9_.]*)")]
    BadSpeciesName(String),
    #[error("species {0:?} declared twice")]
    DuplicateSpecies(String),
    #[error("species index {index} out of range for {count} species")]
    SpeciesOutOfRange { index: usize, count: usize },
    #[error("reaction rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("reaction order {0} exceeds 2")]
    OrderTooHigh(u32),
    #[error("state vector has {got} entries, network has {want} species")]
    StateDimension { got: usize, want: usize },
    #[error("state has negative count {value} for species {index}")]
    NegativeState { index: usize, value: i64 },
    #[error("delay distribution is invalid: {0}")]
    BadDelay(#[from] PhaseTypeError),
}

/// How a delayed reaction treats its reactants while the delay runs.
///
/// Non-absorbing: reactants that do not reappear in the products are
/// consumed at initiation, the rest never leave. Absorbing: all reactants
/// are consumed at initiation and the preserved part is restored on
/// completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Realization {
    NonAbsorbing,
    Absorbing,
}

/// Parameterization of a delay distribution as written in network files.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayKind {
    Erlang {
        shape: usize,
        rate: f64,
    },
    Hypoexp {
        rates: Vec<f64>,
    },
    HyperErlang {
        weights: Vec<f64>,
        shapes: Vec<usize>,
        rates: Vec<f64>,
    },
    Raw {
        alpha: Vec<f64>,
        h: Vec<Vec<f64>>,
    },
}

/// Delay block attached to a reaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Delay {
    pub kind: DelayKind,
    pub realization: Realization,
}

impl Delay {
    /// Materializes the distribution, validating its parameters.
    pub fn phase_type(&self) -> Result<PhaseType, PhaseTypeError> {
        match &self.kind {
            DelayKind::Erlang { shape, rate } => phasetype::erlang(*shape, *rate),
            DelayKind::Hypoexp { rates } => phasetype::hypoexponential(rates),
            DelayKind::HyperErlang {
                weights,
                shapes,
                rates,
            } => phasetype::hyper_erlang(weights, shapes, rates),
            DelayKind::Raw { alpha, h } => {
                let m = alpha.len();
                if h.len() != m || h.iter().any(|row| row.len() != m) {
                    return Err(PhaseTypeError::NotSquare {
                        rows: h.len(),
                        cols: h.first().map_or(0, |r| r.len()),
                    });
                }
                let alpha = DVector::from_column_slice(alpha);
                let mut hm = DMatrix::<f64>::zeros(m, m);
                for (i, row) in h.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        hm[(i, j)] = v;
                    }
                }
                PhaseType::new(alpha, hm)
            }
        }
    }
}

/// One mass-action reaction, optionally delayed.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactants: Multiset,
    pub products: Multiset,
    pub rate: f64,
    pub delay: Option<Delay>,
}

impl Reaction {
    /// Normalizes the multisets and checks rate and order.
    pub fn new(
        reactants: &[(usize, u32)],
        products: &[(usize, u32)],
        rate: f64,
        delay: Option<Delay>,
    ) -> Result<Self, ModelError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(ModelError::BadRate(rate));
        }
        let r = Self {
            reactants: normalize_multiset(reactants),
            products: normalize_multiset(products),
            rate,
            delay,
        };
        if r.order() > 2 {
            return Err(ModelError::OrderTooHigh(r.order()));
        }
        Ok(r)
    }

    /// Total reactant count: 0, 1, or 2.
    pub fn order(&self) -> u32 {
        self.reactants.iter().map(|&(_, c)| c).sum()
    }

    /// Net state change over `d` species.
    pub fn net_change(&self, d: usize) -> DVector<i64> {
        let mut z = DVector::<i64>::zeros(d);
        for &(s, c) in &self.products {
            z[s] += c as i64;
        }
        for &(s, c) in &self.reactants {
            z[s] -= c as i64;
        }
        z
    }

    /// Splits the reaction into the preserved multiset `f1` (reactants that
    /// reappear among the products), the consumed part `f2 = reactants - f1`,
    /// and the freshly produced part `g = products - f1`.
    pub fn catalytic_split(&self) -> (Multiset, Multiset, Multiset) {
        let f1 = multiset_intersection(&self.reactants, &self.products);
        let f2 = multiset_difference(&self.reactants, &f1);
        let g = multiset_difference(&self.products, &f1);
        (f1, f2, g)
    }
}

fn normalize_multiset(terms: &[(usize, u32)]) -> Multiset {
    let mut v: Vec<(usize, u32)> = Vec::new();
    for &(s, c) in terms {
        if c == 0 {
            continue;
        }
        match v.iter_mut().find(|(t, _)| *t == s) {
            Some((_, acc)) => *acc += c,
            None => v.push((s, c)),
        }
    }
    v.sort_unstable_by_key(|&(s, _)| s);
    v
}

/// Componentwise minimum of two multisets.
pub fn multiset_intersection(a: &Multiset, b: &Multiset) -> Multiset {
    let mut out = Vec::new();
    for &(s, ca) in a {
        if let Some(&(_, cb)) = b.iter().find(|&&(t, _)| t == s) {
            out.push((s, ca.min(cb)));
        }
    }
    out
}

/// Componentwise sum of two multisets.
pub fn multiset_sum(a: &Multiset, b: &Multiset) -> Multiset {
    let mut joined: Vec<(usize, u32)> = a.clone();
    joined.extend_from_slice(b);
    normalize_multiset(&joined)
}

/// Componentwise saturating difference `a - b`.
pub fn multiset_difference(a: &Multiset, b: &Multiset) -> Multiset {
    let mut out = Vec::new();
    for &(s, ca) in a {
        let cb = b
            .iter()
            .find(|&&(t, _)| t == s)
            .map_or(0, |&(_, c)| c);
        if ca > cb {
            out.push((s, ca - cb));
        }
    }
    out
}

/// A named species list plus reactions over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
}

impl Network {
    /// Validates species names and reaction indices.
    pub fn new(species: Vec<String>, reactions: Vec<Reaction>) -> Result<Self, ModelError> {
        for (i, name) in species.iter().enumerate() {
            if !is_valid_species_name(name) {
                return Err(ModelError::BadSpeciesName(name.clone()));
            }
            if species[..i].contains(name) {
                return Err(ModelError::DuplicateSpecies(name.clone()));
            }
        }
        let d = species.len();
        for r in &reactions {
            for &(s, _) in r.reactants.iter().chain(r.products.iter()) {
                if s >= d {
                    return Err(ModelError::SpeciesOutOfRange { index: s, count: d });
                }
            }
        }
        Ok(Network { species, reactions })
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    /// True when some reaction carries a delay block.
    pub fn has_delays(&self) -> bool {
        self.reactions.iter().any(|r| r.delay.is_some())
    }

    /// True when some reaction is bimolecular.
    pub fn has_bimolecular(&self) -> bool {
        self.reactions.iter().any(|r| r.order() == 2)
    }

    /// The same network with every delay block removed: each delayed
    /// reaction fires instantaneously at its rate.
    pub fn strip_delays(&self) -> Network {
        let mut net = self.clone();
        for r in &mut net.reactions {
            r.delay = None;
        }
        net
    }
}

/// Species names: leading letter or underscore, then letters, digits,
/// underscores, or dots.
pub fn is_valid_species_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Stoichiometry and propensity data split by reaction order. Columns keep
/// the file order of the reactions within each order class.
#[derive(Debug, Clone)]
pub struct StoichDecomposition {
    /// Net stoichiometries of zeroth-order reactions, `d x K0`.
    pub s0: DMatrix<f64>,
    /// Net stoichiometries of first-order reactions, `d x Ku`.
    pub su: DMatrix<f64>,
    /// Net stoichiometries of bimolecular reactions, `d x Kb`.
    pub sb: DMatrix<f64>,
    /// First-order propensity rows: row `r` is `rate_r * e_{reactant}`,
    /// `Ku x d`.
    pub w_u: DMatrix<f64>,
    /// Constant propensities of the zeroth-order reactions.
    pub lambda0: DVector<f64>,
    /// First-moment drift `Su * Wu`, `d x d` (Metzler).
    pub su_wu: DMatrix<f64>,
    /// Reaction indices backing the columns of `s0`, `su`, `sb`.
    pub zeroth: Vec<usize>,
    pub first: Vec<usize>,
    pub bimolecular: Vec<usize>,
    /// Reactant pair `(i, j)` with `i <= j` per `sb` column; `i == j` marks
    /// a homodimerization.
    pub bimolecular_pairs: Vec<(usize, usize)>,
}

/// Splits a network by reaction order. Delay blocks are ignored: columns
/// carry the net stoichiometry of each reaction.
pub fn decompose(net: &Network) -> StoichDecomposition {
    let d = net.n_species();
    let mut zeroth = Vec::new();
    let mut first = Vec::new();
    let mut bimolecular = Vec::new();
    for (k, r) in net.reactions.iter().enumerate() {
        match r.order() {
            0 => zeroth.push(k),
            1 => first.push(k),
            _ => bimolecular.push(k),
        }
    }
    let col =
        |k: &usize| -> DVector<f64> { net.reactions[*k].net_change(d).map(|x| x as f64) };
    let s0 = matrix_from_columns(d, zeroth.iter().map(col).collect());
    let su = matrix_from_columns(d, first.iter().map(col).collect());
    let sb = matrix_from_columns(d, bimolecular.iter().map(col).collect());
    let mut w_u = DMatrix::<f64>::zeros(first.len(), d);
    for (row, &k) in first.iter().enumerate() {
        let r = &net.reactions[k];
        let (s, _) = r.reactants[0];
        w_u[(row, s)] = r.rate;
    }
    let lambda0 = DVector::from_iterator(zeroth.len(), zeroth.iter().map(|&k| net.reactions[k].rate));
    let su_wu = &su * &w_u;
    let bimolecular_pairs = bimolecular
        .iter()
        .map(|&k| {
            let r = &net.reactions[k];
            match r.reactants.as_slice() {
                [(s, 2)] => (*s, *s),
                [(s, 1), (t, 1)] => (*s, *t),
                _ => unreachable!("order-2 reactions have one or two reactant species"),
            }
        })
        .collect();
    StoichDecomposition {
        s0,
        su,
        sb,
        w_u,
        lambda0,
        su_wu,
        zeroth,
        first,
        bimolecular,
        bimolecular_pairs,
    }
}

/// `DMatrix::from_columns` rejects empty slices; empty column groups get a
/// well-defined `d x 0` shape instead.
pub(crate) fn matrix_from_columns(d: usize, cols: Vec<DVector<f64>>) -> DMatrix<f64> {
    if cols.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Mass-action propensities at state `x`, one entry per reaction:
/// order 0 gives `k`, order 1 gives `k x_i`, a heterodimer `k x_i x_j`, a
/// homodimer `k x_i (x_i - 1)`. Any reaction whose firing would drive a
/// count negative contributes zero.
pub fn propensity(net: &Network, x: &[i64]) -> Result<DVector<f64>, ModelError> {
    let d = net.n_species();
    if x.len() != d {
        return Err(ModelError::StateDimension {
            got: x.len(),
            want: d,
        });
    }
    if let Some((i, &v)) = x.iter().enumerate().find(|&(_, &v)| v < 0) {
        return Err(ModelError::NegativeState { index: i, value: v });
    }
    let mut lam = DVector::<f64>::zeros(net.reactions.len());
    for (k, r) in net.reactions.iter().enumerate() {
        let val = match r.reactants.as_slice() {
            [] => r.rate,
            [(s, 1)] => r.rate * x[*s] as f64,
            [(s, 2)] => r.rate * x[*s] as f64 * (x[*s] - 1) as f64,
            [(s, 1), (t, 1)] => r.rate * x[*s] as f64 * x[*t] as f64,
            _ => unreachable!("validated reactions have order <= 2"),
        };
        // Lattice guard: firing must keep every count nonnegative.
        let exits = r
            .reactants
            .iter()
            .any(|&(s, c)| x[s] < c as i64);
        lam[k] = if exits { 0.0 } else { val.max(0.0) };
    }
    Ok(lam)
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parse failure with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

/// Parses the line-oriented network format.
pub fn parse_network(text: &str) -> Result<Network, ParseError> {
    let mut species: Vec<String> = Vec::new();
    let mut reactions: Vec<Reaction> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let trimmed_start = line.len() - line.trim_start().len();
        let body = line.trim();
        if let Some(rest) = body.strip_prefix("[species]") {
            for name in rest.split_whitespace() {
                if !is_valid_species_name(name) {
                    let col = column_of(line, name).unwrap_or(trimmed_start) + 1;
                    return Err(ParseError::new(
                        lineno,
                        col,
                        format!("invalid species name {name:?}"),
                    ));
                }
                if species.iter().any(|s| s == name) {
                    let col = column_of(line, name).unwrap_or(trimmed_start) + 1;
                    return Err(ParseError::new(
                        lineno,
                        col,
                        format!("species {name:?} declared twice"),
                    ));
                }
                species.push(name.to_string());
            }
        } else if let Some(rest) = body.strip_prefix("[reaction]") {
            let r = parse_reaction_line(rest, &species, lineno, line)?;
            reactions.push(r);
        } else {
            return Err(ParseError::new(
                lineno,
                trimmed_start + 1,
                format!(
                    "expected a [species] or [reaction] directive, found {:?}",
                    body.split_whitespace().next().unwrap_or("")
                ),
            ));
        }
    }
    Network::new(species, reactions)
        .map_err(|e| ParseError::new(text.lines().count(), 1, e.to_string()))
}

fn column_of(line: &str, needle: &str) -> Option<usize> {
    line.find(needle)
}

fn parse_reaction_line(
    rest: &str,
    species: &[String],
    lineno: usize,
    full_line: &str,
) -> Result<Reaction, ParseError> {
    let err = |msg: String| {
        let col = full_line.find("[reaction]").map_or(0, |p| p + "[reaction]".len());
        ParseError::new(lineno, col + 1, msg)
    };
    let arrow = rest
        .find("->")
        .ok_or_else(|| err("reaction needs a '->'".into()))?;
    let lhs = &rest[..arrow];
    let after = &rest[arrow + 2..];

    // The right-hand side runs until the first key=value token.
    let tokens = split_tokens(after).map_err(err)?;
    let mut rhs_end = after.len();
    let mut kv_tokens: Vec<(usize, &str)> = Vec::new();
    for &(start, tok) in &tokens {
        if tok.contains('=') && !tok.starts_with('[') {
            rhs_end = rhs_end.min(start);
            kv_tokens.push((start, tok));
        } else if !kv_tokens.is_empty() {
            return Err(err(format!(
                "unexpected token {tok:?} after key=value settings"
            )));
        }
    }
    let rhs = &after[..rhs_end];

    let reactants = parse_side(lhs, species)
        .map_err(|(frag, msg)| locate(lineno, full_line, &frag, msg))?;
    let products = parse_side(rhs, species)
        .map_err(|(frag, msg)| locate(lineno, full_line, &frag, msg))?;

    let mut rate: Option<f64> = None;
    let mut delay: Option<Delay> = None;
    for (_, tok) in kv_tokens {
        let (key, value) = tok.split_once('=').expect("token contains '='");
        match key {
            "rate" => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| err(format!("cannot parse rate value {value:?}")))?;
                rate = Some(v);
            }
            "delay" => {
                let inner = value
                    .strip_prefix('{')
                    .and_then(|v| v.strip_suffix('}'))
                    .ok_or_else(|| err(format!("delay value must be braced, got {value:?}")))?;
                delay = Some(parse_delay_block(inner).map_err(err)?);
            }
            other => return Err(err(format!("unknown reaction setting {other:?}"))),
        }
    }
    let rate = rate.ok_or_else(|| err("reaction is missing rate=".into()))?;
    if let Some(d) = &delay {
        d.phase_type()
            .map_err(|e| err(format!("delay distribution rejected: {e}")))?;
    }
    Reaction::new(&reactants, &products, rate, delay).map_err(|e| err(e.to_string()))
}

fn locate(lineno: usize, line: &str, fragment: &str, msg: String) -> ParseError {
    let col = line.find(fragment.trim()).map_or(0, |p| p) + 1;
    ParseError::new(lineno, col, msg)
}

/// Parses one side of a reaction: `0`, or `+`-separated terms of the form
/// `X`, `2 X`, `2*X`, or `2X`.
fn parse_side(side: &str, species: &[String]) -> Result<Vec<(usize, u32)>, (String, String)> {
    let side_trim = side.trim();
    if side_trim.is_empty() {
        return Err((side.to_string(), "empty reaction side; use 0".into()));
    }
    if side_trim == "0" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for term in side_trim.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err((side_trim.to_string(), "empty term between '+'".into()));
        }
        if term == "0" {
            return Err((
                term.to_string(),
                "0 stands alone, it cannot join other terms".into(),
            ));
        }
        let digits: String = term.chars().take_while(|c| c.is_ascii_digit()).collect();
        let rest = term[digits.len()..].trim_start_matches('*').trim();
        let count: u32 = if digits.is_empty() {
            1
        } else {
            digits
                .parse()
                .map_err(|_| (term.to_string(), format!("bad count in term {term:?}")))?
        };
        if count == 0 {
            return Err((term.to_string(), format!("zero count in term {term:?}")));
        }
        if !is_valid_species_name(rest) {
            return Err((term.to_string(), format!("invalid species name {rest:?}")));
        }
        match species.iter().position(|s| s == rest) {
            Some(idx) => out.push((idx, count)),
            None => {
                return Err((
                    term.to_string(),
                    format!("unknown species {rest:?}; declare it in [species] first"),
                ))
            }
        }
    }
    Ok(out)
}

/// Splits on whitespace while keeping `{...}` and `[...]` groups (and the
/// `key=` prefixes attached to them) as single tokens.
fn split_tokens(s: &str) -> Result<Vec<(usize, &str)>, String> {
    let bytes = s.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let mut depth = 0i32;
        while i < bytes.len() {
            let c = bytes[i];
            if c == b'{' || c == b'[' {
                depth += 1;
            } else if c == b'}' || c == b']' {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced closing bracket".into());
                }
            } else if c.is_ascii_whitespace() && depth == 0 {
                break;
            }
            i += 1;
        }
        if depth != 0 {
            return Err("unbalanced brackets".into());
        }
        tokens.push((start, &s[start..i]));
    }
    Ok(tokens)
}

/// Parses a standalone delay description using the same `key=value` syntax
/// as the `delay={...}` block in network files, e.g.
/// `kind=erlang shape=3 rate=2.0 realization=absorbing`.
pub fn parse_delay_spec(spec: &str) -> Result<Delay, ParseError> {
    parse_delay_block(spec.trim()).map_err(|message| ParseError::new(1, 1, message))
}

fn parse_delay_block(inner: &str) -> Result<Delay, String> {
    let tokens = split_tokens(inner)?;
    let mut kind: Option<&str> = None;
    let mut fields: Vec<(&str, &str)> = Vec::new();
    for (_, tok) in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| format!("expected key=value inside delay block, got {tok:?}"))?;
        if key == "kind" {
            kind = Some(value);
        } else {
            fields.push((key, value));
        }
    }
    let kind = kind.ok_or("delay block is missing kind=")?;
    let mut realization = Realization::NonAbsorbing;
    let mut take = |name: &str| -> Option<&str> {
        let pos = fields.iter().position(|&(k, _)| k == name)?;
        Some(fields.remove(pos).1)
    };
    if let Some(v) = take("realization") {
        realization = match v {
            "nonabsorbing" => Realization::NonAbsorbing,
            "absorbing" => Realization::Absorbing,
            other => return Err(format!("unknown realization {other:?}")),
        };
    }
    let kind = match kind {
        "erlang" => {
            let shape = take("shape").ok_or("erlang delay needs shape=")?;
            let rate = take("rate").ok_or("erlang delay needs rate=")?;
            DelayKind::Erlang {
                shape: shape
                    .parse()
                    .map_err(|_| format!("bad erlang shape {shape:?}"))?,
                rate: rate
                    .parse()
                    .map_err(|_| format!("bad erlang rate {rate:?}"))?,
            }
        }
        "hypoexp" => {
            let rates = take("rates").ok_or("hypoexp delay needs rates=[...]")?;
            DelayKind::Hypoexp {
                rates: parse_f64_list(rates)?,
            }
        }
        "hypererlang" => {
            let weights = take("weights").ok_or("hypererlang delay needs weights=[...]")?;
            let shapes = take("shapes").ok_or("hypererlang delay needs shapes=[...]")?;
            let rates = take("rates").ok_or("hypererlang delay needs rates=[...]")?;
            DelayKind::HyperErlang {
                weights: parse_f64_list(weights)?,
                shapes: parse_f64_list(shapes)?
                    .into_iter()
                    .map(|x| {
                        if x.fract() == 0.0 && x >= 0.0 {
                            Ok(x as usize)
                        } else {
                            Err(format!("hypererlang shapes must be integers, got {x}"))
                        }
                    })
                    .collect::<Result<_, _>>()?,
                rates: parse_f64_list(rates)?,
            }
        }
        "raw" => {
            let alpha = take("alpha").ok_or("raw delay needs alpha=[...]")?;
            let h = take("H").ok_or("raw delay needs H=[[...],...]")?;
            DelayKind::Raw {
                alpha: parse_f64_list(alpha)?,
                h: parse_f64_matrix(h)?,
            }
        }
        other => return Err(format!("unknown delay kind {other:?}")),
    };
    if let Some((k, _)) = fields.first() {
        return Err(format!("unknown delay setting {k:?}"));
    }
    Ok(Delay { kind, realization })
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| format!("expected a [..] list, got {s:?}"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number {p:?} in list"))
        })
        .collect()
}

fn parse_f64_matrix(s: &str) -> Result<Vec<Vec<f64>>, String> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| format!("expected a [[..],..] matrix, got {s:?}"))?;
    let mut rows = Vec::new();
    let mut depth = 0i32;
    let mut start = None;
    for (i, c) in inner.char_indices() {
        match c {
            '[' => {
                if depth == 0 {
                    start = Some(i);
                }
                depth += 1;
            }
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced brackets in matrix".into());
                }
                if depth == 0 {
                    let row = &inner[start.take().unwrap()..=i];
                    rows.push(parse_f64_list(row)?);
                }
            }
            ',' | ' ' | '\t' if depth == 0 => {}
            other if depth == 0 => {
                return Err(format!("unexpected character {other:?} in matrix"));
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced brackets in matrix".into());
    }
    Ok(rows)
}

/// Renders a network in the canonical text form; `parse_network` inverts it
/// exactly, including float values.
pub fn serialize_network(net: &Network) -> String {
    let mut out = String::new();
    out.push_str("[species]");
    for s in &net.species {
        out.push(' ');
        out.push_str(s);
    }
    out.push('\n');
    for r in &net.reactions {
        out.push_str("[reaction] ");
        out.push_str(&side_to_string(&r.reactants, &net.species));
        out.push_str(" -> ");
        out.push_str(&side_to_string(&r.products, &net.species));
        out.push_str(&format!(" rate={}", r.rate));
        if let Some(d) = &r.delay {
            out.push_str(" delay={");
            match &d.kind {
                DelayKind::Erlang { shape, rate } => {
                    out.push_str(&format!("kind=erlang shape={shape} rate={rate}"));
                }
                DelayKind::Hypoexp { rates } => {
                    out.push_str(&format!("kind=hypoexp rates={}", f64_list(rates)));
                }
                DelayKind::HyperErlang {
                    weights,
                    shapes,
                    rates,
                } => {
                    let shapes_f: Vec<f64> = shapes.iter().map(|&s| s as f64).collect();
                    out.push_str(&format!(
                        "kind=hypererlang weights={} shapes={} rates={}",
                        f64_list(weights),
                        f64_list(&shapes_f),
                        f64_list(rates)
                    ));
                }
                DelayKind::Raw { alpha, h } => {
                    let rows: Vec<String> = h.iter().map(|r| f64_list(r)).collect();
                    out.push_str(&format!(
                        "kind=raw alpha={} H=[{}]",
                        f64_list(alpha),
                        rows.join(",")
                    ));
                }
            }
            let real = match d.realization {
                Realization::NonAbsorbing => "nonabsorbing",
                Realization::Absorbing => "absorbing",
            };
            out.push_str(&format!(" realization={real}}}"));
        }
        out.push('\n');
    }
    out
}

fn side_to_string(ms: &Multiset, species: &[String]) -> String {
    if ms.is_empty() {
        return "0".to_string();
    }
    ms.iter()
        .map(|&(s, c)| {
            if c == 1 {
                species[s].clone()
            } else {
                format!("{c} {}", species[s])
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn f64_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(","))
}
