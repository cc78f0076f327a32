//! Expansion of delayed reactions into delay-line species and instantaneous
//! reactions, together with the block matrices of the first-moment dynamics.
//!
//! Each delayed reaction gets its own delay line: one species per phase of
//! its distribution, entry reactions that start the line according to
//! `alpha`, internal conversions at the off-diagonal rates of `H`, and exit
//! reactions at the per-phase absorption rates that release the delayed
//! products. On the enlarged species set `(x, delta)` the first moments of a
//! first-order network obey
//!
//! ```text
//! d/dt [E x; E delta] = [A B; C H'] [E x; E delta] + [b0; bd]
//! ```
//!
//! and eliminating the delay block yields the delay-free drift
//! `A_df = A - B (H')^{-1} C`, the drift of the same network with every
//! delay removed.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::netmodel::{
    matrix_from_columns, Multiset, ModelError, Network, Reaction, Realization,
};
use crate::phasetype::{PhaseType, PhaseTypeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("delay distribution rejected: {0}")]
    Phase(#[from] PhaseTypeError),
    #[error("fragment construction failed: {0}")]
    Model(#[from] ModelError),
    #[error("delay species name {0:?} collides with a declared species")]
    NameClash(String),
}

/// One realized delay line.
#[derive(Debug, Clone)]
pub struct DelayLine {
    /// Index of the delayed reaction in the source network.
    pub reaction_index: usize,
    pub ph: PhaseType,
    pub realization: Realization,
    /// Index of the first phase species in the augmented species list.
    pub offset: usize,
    /// Rate of the delayed reaction (the initiation intensity scale).
    pub rate: f64,
    pub order: u32,
    /// The reactant species of a first-order delayed reaction.
    pub input_species: Option<usize>,
    /// Reactants that reappear among the products (`f1`).
    pub preserved: Multiset,
    /// Reactants consumed at initiation (`f2`).
    pub consumed: Multiset,
    /// Products released on completion (`g`).
    pub produced: Multiset,
}

impl DelayLine {
    pub fn phases(&self) -> usize {
        self.ph.dim()
    }

    /// Species change applied on the base network when the line initiates.
    pub fn entry_base_change(&self) -> Multiset {
        match self.realization {
            Realization::NonAbsorbing => self.consumed.clone(),
            Realization::Absorbing => {
                crate::netmodel::multiset_sum(&self.preserved, &self.consumed)
            }
        }
    }

    /// Species released on the base network when the line completes.
    pub fn completion_products(&self) -> Multiset {
        match self.realization {
            Realization::NonAbsorbing => self.produced.clone(),
            Realization::Absorbing => {
                crate::netmodel::multiset_sum(&self.preserved, &self.produced)
            }
        }
    }
}

/// Block matrices of the first-moment dynamics on `(x, delta)`.
///
/// `a`, `b`, `c`, `h_t` are the four blocks; `b0`, `bd` the affine offsets
/// from zeroth-order reactions. The remaining fields are the stoichiometric
/// and propensity splits the blocks are assembled from: `s_x`/`w_x`/`b_x`
/// cover the non-delayed first-order and zeroth-order reactions, `s_in_*`
/// and `w_in`/`b_in` the line entries (one column per line), `s_out_*` and
/// `w_out` the line exits (one column per phase), `s_d`/`w_d` the internal
/// conversions. Bimolecular reactions carry no linear drift and do not
/// appear in any block.
#[derive(Debug, Clone)]
pub struct MomentBlocks {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub h_t: DMatrix<f64>,
    pub b0: DVector<f64>,
    pub bd: DVector<f64>,
    pub s_x: DMatrix<f64>,
    pub w_x: DMatrix<f64>,
    pub b_x: DVector<f64>,
    pub s_in_x: DMatrix<f64>,
    pub s_in_d: DMatrix<f64>,
    pub s_out_x: DMatrix<f64>,
    pub s_out_d: DMatrix<f64>,
    pub s_d: DMatrix<f64>,
    pub w_d: DMatrix<f64>,
    pub w_in: DMatrix<f64>,
    pub w_out: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

impl MomentBlocks {
    /// Full drift matrix `[A B; C H']`.
    pub fn assembled(&self) -> DMatrix<f64> {
        let d = self.a.nrows();
        let m = self.h_t.nrows();
        let mut g = DMatrix::<f64>::zeros(d + m, d + m);
        g.view_mut((0, 0), (d, d)).copy_from(&self.a);
        g.view_mut((0, d), (d, m)).copy_from(&self.b);
        g.view_mut((d, 0), (m, d)).copy_from(&self.c);
        g.view_mut((d, d), (m, m)).copy_from(&self.h_t);
        g
    }

    /// Affine offset `[b0; bd]`.
    pub fn assembled_offset(&self) -> DVector<f64> {
        let d = self.b0.len();
        let m = self.bd.len();
        let mut v = DVector::<f64>::zeros(d + m);
        v.rows_mut(0, d).copy_from(&self.b0);
        v.rows_mut(d, m).copy_from(&self.bd);
        v
    }
}

/// First-order drift of a network with every delay removed.
#[derive(Debug, Clone)]
pub struct DelayFreeView {
    /// Net stoichiometry column per source reaction (delays stripped).
    pub s_df: DMatrix<f64>,
    /// Drift of the first-order reactions, `d x d`.
    pub a_df: DMatrix<f64>,
    /// Constant drift of the zeroth-order reactions.
    pub b_df: DVector<f64>,
}

/// A network expanded over delay-line species.
#[derive(Debug, Clone)]
pub struct AugmentedNetwork {
    /// The expanded, delay-free network: base species first, then the line
    /// species `D<line>.<phase>`.
    pub network: Network,
    /// The source network.
    pub base: Network,
    pub n_base: usize,
    pub lines: Vec<DelayLine>,
    /// Present unless some delayed reaction is bimolecular, in which case
    /// the linear blocks do not capture the line couplings.
    pub blocks: Option<MomentBlocks>,
}

impl AugmentedNetwork {
    pub fn n_total(&self) -> usize {
        self.network.n_species()
    }

    pub fn n_delay_species(&self) -> usize {
        self.lines.iter().map(|l| l.phases()).sum()
    }

    /// True when some delayed reaction is bimolecular.
    pub fn has_bimolecular_delay(&self) -> bool {
        self.lines.iter().any(|l| l.order == 2)
    }
}

/// Standalone conversion network realizing one phase-type distribution:
/// unit-intensity arrivals enter phase `i` at rate `alpha_i`, phases convert
/// at the off-diagonal rates of `H`, and phase `i` empties at rate
/// `-(H 1)_i`. Zero-rate fragments are omitted.
pub fn build_delay_line(ph: &PhaseType) -> Network {
    let m = ph.dim();
    let species: Vec<String> = (1..=m).map(|i| format!("D1.{i}")).collect();
    let mut reactions = Vec::new();
    for i in 0..m {
        if ph.alpha()[i] > 0.0 {
            reactions.push(
                Reaction::new(&[], &[(i, 1)], ph.alpha()[i], None)
                    .expect("entry fragment is a valid reaction"),
            );
        }
    }
    for i in 0..m {
        for j in 0..m {
            if i != j && ph.h()[(i, j)] > 0.0 {
                reactions.push(
                    Reaction::new(&[(i, 1)], &[(j, 1)], ph.h()[(i, j)], None)
                        .expect("conversion fragment is a valid reaction"),
                );
            }
        }
    }
    for i in 0..m {
        if ph.exit_rates()[i] > 0.0 {
            reactions.push(
                Reaction::new(&[(i, 1)], &[], ph.exit_rates()[i], None)
                    .expect("exit fragment is a valid reaction"),
            );
        }
    }
    Network::new(species, reactions).expect("delay-line names are valid")
}

/// Expands one delayed reaction into its entry, conversion, and exit
/// fragments over the augmented index space. The line occupies species
/// `offset .. offset + m` of the augmented network.
pub fn realize_delayed_reaction(
    reaction: &Reaction,
    offset: usize,
) -> Result<Vec<Reaction>, AugmentError> {
    let delay = reaction
        .delay
        .as_ref()
        .expect("realize_delayed_reaction needs a delayed reaction");
    let ph = delay.phase_type()?;
    let (f1, _f2, g) = reaction.catalytic_split();
    let m = ph.dim();
    let mut out = Vec::new();
    for i in 0..m {
        let a = ph.alpha()[i];
        if a > 0.0 {
            let mut products = match delay.realization {
                Realization::NonAbsorbing => f1.clone(),
                Realization::Absorbing => Vec::new(),
            };
            products.push((offset + i, 1));
            out.push(Reaction::new(
                &reaction.reactants,
                &products,
                reaction.rate * a,
                None,
            )?);
        }
    }
    for p in 0..m {
        for q in 0..m {
            if p != q && ph.h()[(p, q)] > 0.0 {
                out.push(Reaction::new(
                    &[(offset + p, 1)],
                    &[(offset + q, 1)],
                    ph.h()[(p, q)],
                    None,
                )?);
            }
        }
    }
    for p in 0..m {
        let w = ph.exit_rates()[p];
        if w > 0.0 {
            let products = match delay.realization {
                Realization::NonAbsorbing => g.clone(),
                Realization::Absorbing => crate::netmodel::multiset_sum(&f1, &g),
            };
            out.push(Reaction::new(&[(offset + p, 1)], &products, w, None)?);
        }
    }
    Ok(out)
}

/// Expands every delayed reaction of `net` into its delay line. Delay
/// species are appended after the base species and named
/// `D<line index>.<phase index>` with 1-based indices in file order.
pub fn augment_network(net: &Network) -> Result<AugmentedNetwork, AugmentError> {
    let d = net.n_species();
    let mut lines = Vec::new();
    let mut species = net.species.clone();
    let mut offset = d;
    let mut line_no = 0usize;
    for (k, r) in net.reactions.iter().enumerate() {
        let Some(delay) = &r.delay else { continue };
        line_no += 1;
        let ph = delay.phase_type()?;
        let (f1, f2, g) = r.catalytic_split();
        for i in 1..=ph.dim() {
            let name = format!("D{line_no}.{i}");
            if net.species.iter().any(|s| s == &name) {
                return Err(AugmentError::NameClash(name));
            }
            species.push(name);
        }
        lines.push(DelayLine {
            reaction_index: k,
            offset,
            rate: r.rate,
            order: r.order(),
            input_species: match r.reactants.as_slice() {
                [(s, 1)] => Some(*s),
                _ => None,
            },
            realization: delay.realization,
            preserved: f1,
            consumed: f2,
            produced: g,
            ph,
        });
        offset += lines.last().unwrap().phases();
    }

    let mut reactions = Vec::new();
    let mut line_iter = lines.iter();
    for r in &net.reactions {
        if r.delay.is_some() {
            let line = line_iter.next().expect("one line per delayed reaction");
            reactions.extend(realize_delayed_reaction(r, line.offset)?);
        } else {
            reactions.push(r.clone());
        }
    }
    let network = Network::new(species, reactions)?;
    let blocks = if lines.iter().all(|l| l.order <= 1) {
        Some(build_blocks(net, &lines, d))
    } else {
        None
    };
    Ok(AugmentedNetwork {
        network,
        base: net.clone(),
        n_base: d,
        lines,
        blocks,
    })
}

pub(crate) fn multiset_vector(ms: &Multiset, d: usize) -> DVector<f64> {
    let mut v = DVector::<f64>::zeros(d);
    for &(s, c) in ms {
        v[s] += c as f64;
    }
    v
}

fn build_blocks(net: &Network, lines: &[DelayLine], d: usize) -> MomentBlocks {
    let n = lines.len();
    let m_total: usize = lines.iter().map(|l| l.phases()).sum();

    // Non-delayed reactions, first-order columns then zeroth-order columns.
    let mut first_cols = Vec::new();
    let mut w_x_rows: Vec<(usize, f64)> = Vec::new();
    let mut zero_cols = Vec::new();
    let mut b_x_vals = Vec::new();
    for r in net.reactions.iter().filter(|r| r.delay.is_none()) {
        match r.order() {
            0 => {
                zero_cols.push(r.net_change(d).map(|x| x as f64));
                b_x_vals.push(r.rate);
            }
            1 => {
                first_cols.push(r.net_change(d).map(|x| x as f64));
                let (s, _) = r.reactants[0];
                w_x_rows.push((s, r.rate));
            }
            _ => {} // bimolecular: no linear drift
        }
    }
    let k_u = first_cols.len();
    let k_0 = zero_cols.len();
    let s_x = matrix_from_columns(d, first_cols.into_iter().chain(zero_cols).collect());
    let mut w_x = DMatrix::<f64>::zeros(k_u, d);
    for (row, (s, rate)) in w_x_rows.into_iter().enumerate() {
        w_x[(row, s)] = rate;
    }
    let b_x = DVector::from_vec(b_x_vals);

    // Line entries: one column per line.
    let mut s_in_x = DMatrix::<f64>::zeros(d, n);
    let mut s_in_d = DMatrix::<f64>::zeros(m_total, n);
    let mut w_in = DMatrix::<f64>::zeros(n, d);
    let mut b_in = DVector::<f64>::zeros(n);
    // Line exits: one column per phase.
    let mut s_out_x = DMatrix::<f64>::zeros(d, m_total);
    let mut s_out_d = DMatrix::<f64>::zeros(m_total, m_total);
    let mut w_out = DMatrix::<f64>::zeros(m_total, m_total);
    // Internal conversions.
    let mut s_d_cols: Vec<DVector<f64>> = Vec::new();
    let mut w_d_rows: Vec<(usize, f64)> = Vec::new();
    let mut h_t = DMatrix::<f64>::zeros(m_total, m_total);

    let mut block = 0usize;
    for (j, line) in lines.iter().enumerate() {
        let m = line.phases();
        let entry_change = -multiset_vector(&line.entry_base_change(), d);
        let exit_change = multiset_vector(&line.completion_products(), d);
        s_in_x.column_mut(j).copy_from(&entry_change);
        for i in 0..m {
            s_in_d[(block + i, j)] = line.ph.alpha()[i];
        }
        match line.input_species {
            Some(s) => w_in[(j, s)] = line.rate,
            None => b_in[j] = line.rate,
        }
        for p in 0..m {
            let w = line.ph.exit_rates()[p];
            s_out_x.column_mut(block + p).copy_from(&exit_change);
            s_out_d[(block + p, block + p)] = -1.0;
            w_out[(block + p, block + p)] = w;
            for q in 0..m {
                h_t[(block + q, block + p)] = line.ph.h()[(p, q)];
                if p != q && line.ph.h()[(p, q)] > 0.0 {
                    let mut col = DVector::<f64>::zeros(m_total);
                    col[block + p] = -1.0;
                    col[block + q] = 1.0;
                    s_d_cols.push(col);
                    w_d_rows.push((block + p, line.ph.h()[(p, q)]));
                }
            }
        }
        block += m;
    }
    let k_int = s_d_cols.len();
    let s_d = matrix_from_columns(m_total, s_d_cols);
    let mut w_d = DMatrix::<f64>::zeros(k_int, m_total);
    for (row, (p, rate)) in w_d_rows.into_iter().enumerate() {
        w_d[(row, p)] = rate;
    }

    let s_xu = s_x.columns(0, k_u).into_owned();
    let s_x0 = s_x.columns(k_u, k_0).into_owned();
    let a = &s_xu * &w_x + &s_in_x * &w_in;
    let b = &s_out_x * &w_out;
    let c = &s_in_d * &w_in;
    let b0 = &s_x0 * &b_x;
    let bd = &s_in_d * &b_in;

    MomentBlocks {
        a,
        b,
        c,
        h_t,
        b0,
        bd,
        s_x,
        w_x,
        b_x,
        s_in_x,
        s_in_d,
        s_out_x,
        s_out_d,
        s_d,
        w_d,
        w_in,
        w_out,
        b_in,
    }
}

/// Drift of the network with every delay stripped. The combined column of a
/// delayed reaction is its entry change plus its completion change, which
/// telescopes to the net stoichiometry under either realization.
pub fn delay_free_view(net: &Network) -> Result<DelayFreeView, AugmentError> {
    let d = net.n_species();
    let mut a_df = DMatrix::<f64>::zeros(d, d);
    let mut b_df = DVector::<f64>::zeros(d);
    let mut s_cols = Vec::new();
    for r in &net.reactions {
        if let Some(delay) = &r.delay {
            delay.phase_type()?;
        }
        let combined = r.net_change(d).map(|x| x as f64);
        s_cols.push(combined.clone());
        match r.order() {
            0 => b_df += combined * r.rate,
            1 => {
                let (s, _) = r.reactants[0];
                for i in 0..d {
                    a_df[(i, s)] += combined[i] * r.rate;
                }
            }
            _ => {} // bimolecular: no linear drift
        }
    }
    Ok(DelayFreeView {
        s_df: matrix_from_columns(d, s_cols),
        a_df,
        b_df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{decompose, parse_network};
    use nalgebra::dmatrix;

    fn delayed_birth_death() -> Network {
        parse_network(
            "[species] X\n\
             [reaction] 0 -> X rate=3 delay={kind=erlang shape=2 rate=5}\n\
             [reaction] X -> 0 rate=2\n",
        )
        .unwrap()
    }

    #[test]
    fn delayed_birth_death_blocks_match_hand_values() {
        let aug = augment_network(&delayed_birth_death()).unwrap();
        let blocks = aug.blocks.as_ref().unwrap();
        assert_eq!(blocks.a, dmatrix![-2.0]);
        assert_eq!(blocks.b, dmatrix![0.0, 5.0]);
        assert_eq!(blocks.c, DMatrix::<f64>::zeros(2, 1));
        assert_eq!(blocks.h_t, dmatrix![-5.0, 0.0; 5.0, -5.0]);
        assert_eq!(blocks.b0, DVector::<f64>::zeros(1));
        assert_eq!(blocks.bd.as_slice(), &[3.0, 0.0]);
        assert_eq!(
            aug.network.species,
            vec!["X".to_string(), "D1.1".into(), "D1.2".into()]
        );
        // Fragments: entry 0 -> D1.1 at 3, conversion D1.1 -> D1.2 at 5,
        // exit D1.2 -> X at 5, plus the untouched death.
        assert_eq!(aug.network.reactions.len(), 4);
    }

    #[test]
    fn delay_free_network_reduces_to_order_splits() {
        let net = parse_network(
            "[species] A B\n\
             [reaction] 0 -> A rate=4\n\
             [reaction] A -> B rate=1.5\n\
             [reaction] B -> 0 rate=0.5\n",
        )
        .unwrap();
        let aug = augment_network(&net).unwrap();
        let blocks = aug.blocks.as_ref().unwrap();
        let dec = decompose(&net);
        assert_eq!(blocks.a, dec.su_wu);
        assert_eq!(blocks.b0, &dec.s0 * &dec.lambda0);
        assert_eq!(blocks.h_t.nrows(), 0);
        assert_eq!(blocks.b.ncols(), 0);
        let view = delay_free_view(&net).unwrap();
        assert_eq!(view.a_df, dec.su_wu);
        assert_eq!(view.b_df, &dec.s0 * &dec.lambda0);
    }

    #[test]
    fn schur_elimination_recovers_the_delay_free_drift() {
        let net = parse_network(
            "[species] X1 X2 X3\n\
             [reaction] 0 -> X1 rate=2\n\
             [reaction] X1 -> X2 rate=1 delay={kind=hypererlang weights=[0.25,0.75] shapes=[2,1] rates=[3,0.8]}\n\
             [reaction] X2 -> X3 rate=4 delay={kind=hypoexp rates=[1,2,5] realization=absorbing}\n\
             [reaction] X3 -> 0 rate=0.7\n\
             [reaction] X2 -> 0 rate=0.3\n",
        )
        .unwrap();
        let aug = augment_network(&net).unwrap();
        let blocks = aug.blocks.as_ref().unwrap();
        let view = delay_free_view(&net).unwrap();
        let h_inv_c = blocks
            .h_t
            .clone()
            .lu()
            .solve(&blocks.c)
            .expect("subgenerator transposes are invertible");
        let a_df = &blocks.a - &blocks.b * h_inv_c;
        assert!(
            (&a_df - &view.a_df).amax() < 1e-9,
            "schur route {a_df} vs direct {}",
            view.a_df
        );
        // Either route must match the split-by-order drift of the stripped net.
        let dec = decompose(&net.strip_delays());
        assert!((&view.a_df - &dec.su_wu).amax() < 1e-12);
    }

    #[test]
    fn each_line_has_unit_static_gain() {
        let phs = vec![
            crate::phasetype::erlang(4, 2.5).unwrap(),
            crate::phasetype::hypoexponential(&[1.0, 3.0, 0.5]).unwrap(),
            crate::phasetype::hyper_erlang(&[0.1, 0.9], &[3, 2], &[2.0, 1.0]).unwrap(),
        ];
        for ph in phs {
            // Completion mass w' (-H')^{-1} alpha' accumulates to one.
            let m = ph.dim();
            let neg_h_t = -ph.h().transpose();
            let x = neg_h_t
                .lu()
                .solve(&ph.alpha().clone())
                .expect("valid subgenerators are invertible");
            let gain: f64 = (0..m).map(|i| ph.exit_rates()[i] * x[i]).sum();
            assert!((gain - 1.0).abs() < 1e-12, "gain {gain}");
        }
    }

    #[test]
    fn transpose_block_agrees_with_its_split_assembly() {
        let net = parse_network(
            "[species] X\n\
             [reaction] X -> 0 rate=1 delay={kind=hypererlang weights=[0.5,0.5] shapes=[2,2] rates=[1,4] realization=absorbing}\n\
             [reaction] 0 -> X rate=2\n",
        )
        .unwrap();
        let aug = augment_network(&net).unwrap();
        let blocks = aug.blocks.as_ref().unwrap();
        let split_route = &blocks.s_out_d * &blocks.w_out + &blocks.s_d * &blocks.w_d;
        assert!((&split_route - &blocks.h_t).amax() < 1e-12);
    }

    #[test]
    fn realizations_differ_only_in_reactant_custody() {
        let net = parse_network(
            "[species] E S P\n\
             [reaction] E + S -> E + P rate=2 delay={kind=erlang shape=1 rate=3}\n",
        )
        .unwrap();
        // Non-absorbing: E + S -> E + D; D -> P.
        let aug = augment_network(&net).unwrap();
        let entry = &aug.network.reactions[0];
        assert_eq!(entry.reactants, vec![(0, 1), (1, 1)]);
        assert_eq!(entry.products, vec![(0, 1), (3, 1)]);
        let exit = &aug.network.reactions[1];
        assert_eq!(exit.reactants, vec![(3, 1)]);
        assert_eq!(exit.products, vec![(2, 1)]);
        assert!(aug.blocks.is_none(), "bimolecular delays close no blocks");

        let net = parse_network(
            "[species] E S P\n\
             [reaction] E + S -> E + P rate=2 delay={kind=erlang shape=1 rate=3 realization=absorbing}\n",
        )
        .unwrap();
        // Absorbing: E + S -> D; D -> E + P.
        let aug = augment_network(&net).unwrap();
        let entry = &aug.network.reactions[0];
        assert_eq!(entry.products, vec![(3, 1)]);
        let exit = &aug.network.reactions[1];
        assert_eq!(exit.products, vec![(0, 1), (2, 1)]);
    }

    #[test]
    fn zero_rate_fragments_are_omitted() {
        let ph = crate::phasetype::hyper_erlang(&[1.0, 0.0], &[2, 1], &[2.0, 3.0]).unwrap();
        let line = build_delay_line(&ph);
        // Second branch has zero entry weight; the erlang branch exits only
        // from its last phase. Entries: 1. Conversions: D1.1 -> D1.2.
        // Exits: D1.2 and D1.3 (the orphan branch still drains).
        assert_eq!(line.species.len(), 3);
        let entries = line
            .reactions
            .iter()
            .filter(|r| r.reactants.is_empty())
            .count();
        assert_eq!(entries, 1);
        for r in &line.reactions {
            assert!(r.rate > 0.0);
        }
    }

    #[test]
    fn delay_species_names_collide_loudly() {
        let net = parse_network(
            "[species] X D1.1\n\
             [reaction] X -> D1.1 rate=1 delay={kind=erlang shape=1 rate=1}\n",
        )
        .unwrap();
        assert!(matches!(
            augment_network(&net),
            Err(AugmentError::NameClash(_))
        ));
    }

    #[test]
    fn blocks_have_metzler_and_sign_structure() {
        let net = parse_network(
            "[species] X1 X2\n\
             [reaction] 0 -> X1 rate=1\n\
             [reaction] X1 -> X1 + X2 rate=2 delay={kind=erlang shape=3 rate=6}\n\
             [reaction] X1 -> 0 rate=1\n\
             [reaction] X2 -> 0 rate=1\n",
        )
        .unwrap();
        let aug = augment_network(&net).unwrap();
        let blocks = aug.blocks.as_ref().unwrap();
        for i in 0..blocks.a.nrows() {
            for j in 0..blocks.a.ncols() {
                if i != j {
                    assert!(blocks.a[(i, j)] >= 0.0);
                }
            }
        }
        assert!(blocks.b.iter().all(|&x| x >= 0.0));
        assert!(blocks.c.iter().all(|&x| x >= 0.0));
        for i in 0..blocks.h_t.nrows() {
            for j in 0..blocks.h_t.ncols() {
                if i != j {
                    assert!(blocks.h_t[(i, j)] >= 0.0);
                }
            }
        }
    }
}
