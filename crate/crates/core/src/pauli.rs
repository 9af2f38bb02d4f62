//! Spin configurations in the σᶻ basis and real-weighted sums of Pauli strings.
//!
//! Sites are 0-based throughout the API. The bit encoding used by [`SpinConfig::to_index`]
//! puts site `k` at bit `k`, with σ = +1 ↔ bit 0 and σ = −1 ↔ bit 1. The textual operator
//! format (`-1.0 Z@1 Z@2`) numbers sites from 1.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// A computational-basis state: one σᶻ eigenvalue (±1) per site.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::InvalidConfig("empty configuration".into()));
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidConfig(format!("spin value {bad} is not ±1")));
        }
        Ok(Self { spins })
    }

    pub fn all_up(n: usize) -> Self {
        Self { spins: vec![1; n] }
    }

    /// Decodes the integer encoding (site `k` at bit `k`, bit set means σ = −1).
    pub fn from_index(index: u64, n: usize) -> Self {
        debug_assert!(n <= 64);
        let spins = (0..n)
            .map(|k| if (index >> k) & 1 == 1 { -1 } else { 1 })
            .collect();
        Self { spins }
    }

    /// Integer encoding of the configuration; requires `len() <= 64`.
    pub fn to_index(&self) -> u64 {
        assert!(self.spins.len() <= 64, "integer encoding needs N <= 64");
        self.spins.iter().enumerate().fold(
            0u64,
            |acc, (k, &s)| if s < 0 { acc | (1 << k) } else { acc },
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.spins.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    #[inline]
    pub fn get(&self, site: usize) -> i8 {
        self.spins[site]
    }

    #[inline]
    pub fn flip(&mut self, site: usize) {
        self.spins[site] = -self.spins[site];
    }

    #[inline]
    pub fn as_slice(&self) -> &[i8] {
        &self.spins
    }

    /// Total magnetization Σᶻ = Σₖ σₖ.
    pub fn magnetization(&self) -> i32 {
        self.spins.iter().map(|&s| s as i32).sum()
    }

    pub fn with_flips(&self, flips: &[usize]) -> Self {
        let mut out = self.clone();
        for &k in flips {
            out.flip(k);
        }
        out
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.spins {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    #[inline]
    pub fn flips(self) -> bool {
        !matches!(self, Axis::Z)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

/// A phase in {1, i, −1, −i}, stored as a count of quarter turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }

    pub fn to_complex<T: Real>(self) -> C<T> {
        let (o, z) = (T::one(), T::zero());
        match self.0 {
            0 => Complex::new(o, z),
            1 => Complex::new(z, o),
            2 => Complex::new(-o, z),
            _ => Complex::new(z, -o),
        }
    }

    /// Multiplies a complex number by the phase without a complex product.
    #[inline]
    pub fn rotate<T: Real>(self, v: C<T>) -> C<T> {
        match self.0 {
            0 => v,
            1 => Complex::new(-v.im, v.re),
            2 => -v,
            _ => Complex::new(v.im, -v.re),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A tensor product of single-site Pauli matrices; the empty string is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    factors: Vec<(usize, Axis)>,
}

impl PauliString {
    /// Builds a string from `(site, axis)` factors in any order; repeated sites are rejected.
    pub fn new(mut factors: Vec<(usize, Axis)>) -> Result<Self> {
        factors.sort_by_key(|&(s, _)| s);
        if let Some(w) = factors.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::MalformedOperator(format!(
                "site {} repeated",
                w[0].0 + 1
            )));
        }
        Ok(Self { factors })
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(site: usize, axis: Axis) -> Self {
        Self {
            factors: vec![(site, axis)],
        }
    }

    pub fn factors(&self) -> &[(usize, Axis)] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// Sites flipped by the string (X and Y factors), ascending.
    pub fn flip_sites(&self) -> Vec<usize> {
        self.factors
            .iter()
            .filter(|(_, a)| a.flips())
            .map(|&(s, _)| s)
            .collect()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.last().map(|&(s, _)| s)
    }

    /// Phase ⟨Ξ′|P|Ξ⟩ evaluated on the pre-flip spins, without flipping.
    #[inline]
    pub fn phase_on(&self, spins: &[i8]) -> Phase {
        let mut q = 0u8;
        for &(site, axis) in &self.factors {
            let down = spins[site] < 0;
            match axis {
                Axis::X => {}
                Axis::Y => q += if down { 3 } else { 1 },
                Axis::Z => q += if down { 2 } else { 0 },
            }
        }
        Phase(q % 4)
    }

    /// Applies the string to a basis state: `P|Ξ⟩ = phase · |Ξ′⟩`.
    pub fn apply(&self, config: &SpinConfig) -> Result<(SpinConfig, Phase)> {
        if let Some(s) = self.max_site() {
            if s >= config.len() {
                return Err(Error::MalformedOperator(format!(
                    "site {} outside a {}-site system",
                    s + 1,
                    config.len()
                )));
            }
        }
        let phase = self.phase_on(config.as_slice());
        let mut out = config.clone();
        for &(site, axis) in &self.factors {
            if axis.flips() {
                out.flip(site);
            }
        }
        Ok((out, phase))
    }

    /// Bit masks for the integer encoding: `(flip_mask, sign_mask, n_y)`.
    ///
    /// For a basis index `i`, `P|i⟩ = i^{n_y} (−1)^{popcount(i & sign_mask)} |i ^ flip_mask⟩`.
    pub fn masks(&self) -> (u64, u64, u8) {
        let (mut flip, mut sign, mut ny) = (0u64, 0u64, 0u8);
        for &(site, axis) in &self.factors {
            let bit = 1u64 << site;
            match axis {
                Axis::X => flip |= bit,
                Axis::Y => {
                    flip |= bit;
                    sign |= bit;
                    ny += 1;
                }
                Axis::Z => sign |= bit,
            }
        }
        (flip, sign, ny % 4)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("I");
        }
        for (i, (site, axis)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{axis}@{}", site + 1)?;
        }
        Ok(())
    }
}

/// `P|Ξ⟩` for a Pauli string; see [`PauliString::apply`].
pub fn apply_string(string: &PauliString, config: &SpinConfig) -> Result<(SpinConfig, Phase)> {
    string.apply(config)
}

/// Hermitian operator Σ cₛ Pₛ with real coefficients, kept in canonical merged form.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPauliSum<T> {
    n_sites: usize,
    terms: Vec<(T, PauliString)>,
}

impl<T: Real> WeightedPauliSum<T> {
    /// Validates and merges the terms (see [`merge_terms`]).
    pub fn new(n_sites: usize, terms: Vec<(T, PauliString)>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::MalformedOperator(
                "system size must be positive".into(),
            ));
        }
        for (c, p) in &terms {
            if !c.is_finite() {
                return Err(Error::MalformedOperator(format!(
                    "non-finite coefficient in term {p}"
                )));
            }
            if let Some(s) = p.max_site() {
                if s >= n_sites {
                    return Err(Error::MalformedOperator(format!(
                        "site {} outside a {n_sites}-site system",
                        s + 1
                    )));
                }
            }
        }
        Ok(merge_terms(Self { n_sites, terms }))
    }

    pub fn zero(n_sites: usize) -> Self {
        Self {
            n_sites,
            terms: Vec::new(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[(T, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Σ |cₛ|, an upper bound on the operator norm.
    pub fn norm_bound(&self) -> T {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn scaled(&self, factor: T) -> Self {
        merge_terms(Self {
            n_sites: self.n_sites,
            terms: self
                .terms
                .iter()
                .map(|(c, p)| (*c * factor, p.clone()))
                .collect(),
        })
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if other.n_sites != self.n_sites {
            return Err(Error::Shape("adding operators of different sizes".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(merge_terms(Self {
            n_sites: self.n_sites,
            terms,
        }))
    }

    /// Dense matrix `M[row][col] = ⟨row|H|col⟩` in the integer encoding (N ≤ 12).
    pub fn to_dense(&self) -> Result<Vec<Vec<C<T>>>> {
        const LIMIT: usize = 12;
        if self.n_sites > LIMIT {
            return Err(Error::Capacity {
                what: "dense operator sites",
                size: self.n_sites,
                limit: LIMIT,
            });
        }
        let dim = 1usize << self.n_sites;
        let mut m = vec![vec![C::new(T::zero(), T::zero()); dim]; dim];
        for col in 0..dim {
            let config = SpinConfig::from_index(col as u64, self.n_sites);
            for (c, p) in &self.terms {
                let (target, phase) = p.apply(&config)?;
                m[target.to_index() as usize][col] += phase.to_complex::<T>() * *c;
            }
        }
        Ok(m)
    }

    /// Whether the operator commutes with total Σᶻ.
    ///
    /// Strings sharing a flip set act as one block; a block that changes Σᶻ on some basis
    /// state must have a vanishing total matrix element there (as in XX + YY).
    pub fn conserves_magnetization(&self) -> bool {
        let mut blocks: BTreeMap<Vec<usize>, Vec<&(T, PauliString)>> = BTreeMap::new();
        for term in &self.terms {
            blocks.entry(term.1.flip_sites()).or_default().push(term);
        }
        let tol = T::tolerance(1e-12) * (T::one() + self.norm_bound());
        for (flips, terms) in blocks {
            if flips.is_empty() {
                continue;
            }
            let mut support: Vec<usize> = terms
                .iter()
                .flat_map(|(_, p)| p.factors().iter().map(|&(s, _)| s))
                .collect();
            support.sort_unstable();
            support.dedup();
            if support.len() > 20 {
                return false;
            }
            let mut spins = vec![1i8; self.n_sites];
            for pattern in 0u64..(1u64 << support.len()) {
                for (b, &site) in support.iter().enumerate() {
                    spins[site] = if (pattern >> b) & 1 == 1 { -1 } else { 1 };
                }
                let delta: i32 = flips.iter().map(|&k| spins[k] as i32).sum();
                if delta == 0 {
                    continue;
                }
                let element: C<T> = terms
                    .iter()
                    .map(|(c, p)| p.phase_on(&spins).to_complex::<T>() * *c)
                    .sum();
                if element.norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Merges identical strings by summing coefficients and drops exact zeros.
pub fn merge_terms<T: Real>(sum: WeightedPauliSum<T>) -> WeightedPauliSum<T> {
    let mut merged: BTreeMap<PauliString, T> = BTreeMap::new();
    for (c, p) in sum.terms {
        *merged.entry(p).or_insert_with(T::zero) += c;
    }
    let terms = merged
        .into_iter()
        .filter(|(_, c)| *c != T::zero())
        .map(|(p, c)| (c, p))
        .collect();
    WeightedPauliSum {
        n_sites: sum.n_sites,
        terms,
    }
}

impl<T: Real> fmt::Display for WeightedPauliSum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, p) in &self.terms {
            if p.is_identity() {
                writeln!(f, "{c:?}")?;
            } else {
                writeln!(f, "{c:?} {p}")?;
            }
        }
        Ok(())
    }
}

/// Parses the textual operator format: one `<coeff> <axis>@<site> ...` term per line.
///
/// Blank lines and lines starting with `#` are ignored; sites are 1-based.
pub fn parse_operator<T: Real>(text: &str, n_sites: usize) -> Result<WeightedPauliSum<T>> {
    let mut terms = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::MalformedOperator(format!("line {}: {msg}", lineno + 1));
        let mut tokens = line.split_whitespace();
        let coeff: f64 = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("expected a coefficient"))?;
        let mut factors = Vec::new();
        for tok in tokens {
            let (axis, site) = tok
                .split_once('@')
                .ok_or_else(|| bad("expected <axis>@<site>"))?;
            let axis = axis
                .parse::<Axis>()
                .map_err(|_| bad("axis must be X, Y or Z"))?;
            let site: usize = site
                .parse()
                .map_err(|_| bad("site must be a positive integer"))?;
            if site == 0 {
                return Err(bad("sites are numbered from 1"));
            }
            factors.push((site - 1, axis));
        }
        terms.push((T::from_f64(coeff), PauliString::new(factors)?));
    }
    WeightedPauliSum::new(n_sites, terms)
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            _ => Err(Error::MalformedOperator(format!("unknown axis {s:?}"))),
        }
    }
}

/// Terms sharing one flip set, evaluated together against a single amplitude ratio.
#[derive(Clone, Debug)]
pub(crate) struct FlipGroup<T> {
    pub flips: Vec<usize>,
    pub terms: Vec<(T, PauliString)>,
}

/// Operator regrouped by connected configuration, for local estimators.
#[derive(Clone, Debug)]
pub struct GroupedOperator<T> {
    pub(crate) n_sites: usize,
    pub(crate) diagonal: Vec<(T, PauliString)>,
    pub(crate) groups: Vec<FlipGroup<T>>,
}

impl<T: Real> GroupedOperator<T> {
    pub fn new(op: &WeightedPauliSum<T>) -> Self {
        let mut diagonal = Vec::new();
        let mut blocks: BTreeMap<Vec<usize>, Vec<(T, PauliString)>> = BTreeMap::new();
        for (c, p) in op.terms() {
            let flips = p.flip_sites();
            if flips.is_empty() {
                diagonal.push((*c, p.clone()));
            } else {
                blocks.entry(flips).or_default().push((*c, p.clone()));
            }
        }
        let groups = blocks
            .into_iter()
            .map(|(flips, terms)| FlipGroup { flips, terms })
            .collect();
        Self {
            n_sites: op.n_sites(),
            diagonal,
            groups,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of distinct off-diagonal connected configurations per basis state.
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(v: &[i8]) -> SpinConfig {
        SpinConfig::new(v.to_vec()).unwrap()
    }

    fn s(text: &str) -> PauliString {
        let op = parse_operator::<f64>(&format!("1 {text}"), 8).unwrap();
        op.terms()[0].1.clone()
    }

    #[test]
    fn apply_examples() {
        let (c, ph) = s("Z@1").apply(&cfg(&[1, 1])).unwrap();
        assert_eq!((c, ph), (cfg(&[1, 1]), Phase::ONE));
        let (c, ph) = s("X@2").apply(&cfg(&[1, 1])).unwrap();
        assert_eq!((c, ph), (cfg(&[1, -1]), Phase::ONE));
        let (c, ph) = s("Y@1 Y@2").apply(&cfg(&[1, 1])).unwrap();
        assert_eq!((c, ph), (cfg(&[-1, -1]), Phase::MINUS_ONE));
    }

    #[test]
    fn y_convention() {
        assert_eq!(s("Y@1").apply(&cfg(&[1])).unwrap(), (cfg(&[-1]), Phase::I));
        assert_eq!(
            s("Y@1").apply(&cfg(&[-1])).unwrap(),
            (cfg(&[1]), Phase::MINUS_I)
        );
        assert_eq!(s("Z@1").apply(&cfg(&[-1])).unwrap().1, Phase::MINUS_ONE);
    }

    #[test]
    fn out_of_range_site_is_rejected() {
        let err = s("X@3").apply(&cfg(&[1, 1])).unwrap_err();
        assert!(matches!(err, Error::MalformedOperator(_)));
        let err = WeightedPauliSum::new(2, vec![(1.0, s("X@3"))]).unwrap_err();
        assert!(matches!(err, Error::MalformedOperator(_)));
    }

    #[test]
    fn repeated_site_is_rejected() {
        assert!(PauliString::new(vec![(0, Axis::X), (0, Axis::Z)]).is_err());
    }

    #[test]
    fn merge_examples() {
        let z1 = s("Z@1");
        let m = WeightedPauliSum::new(2, vec![(1.0, z1.clone()), (2.0, z1.clone())]).unwrap();
        assert_eq!(m.terms(), &[(3.0, z1.clone())]);
        let m = WeightedPauliSum::new(2, vec![(1.0, z1.clone()), (-1.0, z1)]).unwrap();
        assert!(m.is_empty());
        let xx = s("X@1 X@2");
        let m = WeightedPauliSum::new(2, vec![(0.5, xx.clone())]).unwrap();
        assert_eq!(m.terms(), &[(0.5, xx)]);
    }

    #[test]
    fn text_format_roundtrip() {
        let text = "-1.0 Z@1 Z@2\n0.5 X@1 Y@3\n# comment\n\n2 I\n";
        let op = parse_operator::<f64>(&text.replace(" I", ""), 3).unwrap();
        let again = parse_operator::<f64>(&op.to_string(), 3).unwrap();
        assert_eq!(op, again);
        assert_eq!(op.len(), 3);
        assert!(parse_operator::<f64>("1.0 Q@1", 2).is_err());
        assert!(parse_operator::<f64>("1.0 Z@0", 2).is_err());
        assert!(parse_operator::<f64>("abc Z@1", 2).is_err());
    }

    #[test]
    fn masks_agree_with_apply() {
        let p = s("X@1 Y@2 Z@4");
        let (flip, sign, ny) = p.masks();
        for i in 0..16u64 {
            let (c, ph) = p.apply(&SpinConfig::from_index(i, 4)).unwrap();
            assert_eq!(c.to_index(), i ^ flip);
            let q = (ny as u32 + 2 * (i & sign).count_ones()) % 4;
            assert_eq!(ph.quarter_turns() as u32, q);
        }
    }

    #[test]
    fn magnetization_conservation() {
        let xxyy = parse_operator::<f64>("1 X@1 X@2\n1 Y@1 Y@2\n2 Z@1 Z@2", 2).unwrap();
        assert!(xxyy.conserves_magnetization());
        let x = parse_operator::<f64>("1 X@1", 2).unwrap();
        assert!(!x.conserves_magnetization());
        let xx = parse_operator::<f64>("1 X@1 X@2", 2).unwrap();
        assert!(!xx.conserves_magnetization());
    }

    #[test]
    fn index_encoding() {
        let c = cfg(&[1, -1, 1, -1]);
        assert_eq!(c.to_index(), 0b1010);
        assert_eq!(SpinConfig::from_index(0b1010, 4), c);
        assert_eq!(c.magnetization(), 0);
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        prop::collection::vec(prop::option::of(0..3u8), n).prop_map(|v| {
            let factors = v
                .into_iter()
                .enumerate()
                .filter_map(|(k, a)| a.map(|a| (k, [Axis::X, Axis::Y, Axis::Z][a as usize])))
                .collect();
            PauliString::new(factors).unwrap()
        })
    }

    proptest! {
        #[test]
        fn applying_twice_is_identity(p in arb_string(6), idx in 0u64..64) {
            let c0 = SpinConfig::from_index(idx, 6);
            let (c1, ph1) = p.apply(&c0).unwrap();
            let (c2, ph2) = p.apply(&c1).unwrap();
            prop_assert_eq!(c2, c0);
            prop_assert_eq!(ph1 * ph2, Phase::ONE);
            prop_assert!((ph1.to_complex::<f64>().norm() - 1.0).abs() == 0.0);
        }

        #[test]
        fn dense_matrix_is_hermitian(
            strings in prop::collection::vec((-2.0f64..2.0, arb_string(5)), 1..8)
        ) {
            let op = WeightedPauliSum::new(5, strings).unwrap();
            let m = op.to_dense().unwrap();
            for r in 0..32 {
                for c in 0..32 {
                    prop_assert!((m[r][c] - m[c][r].conj()).norm() < 1e-14);
                }
            }
        }
    }
}
