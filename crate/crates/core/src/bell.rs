//! Bell inequalities, measurement settings and their compiled Bell operators.
//!
//! Parties and sites are 0-based in the API; the JSON interchange document numbers
//! parties from 1 and settings from 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliString, WeightedPauliSum};
use crate::scalar::Real;

/// Dichotomic observable n_x σˣ + n_y σʸ + n_z σᶻ with a unit Bloch vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement<T> {
    bloch: [T; 3],
}

impl<T: Real> Measurement<T> {
    pub fn new(nx: T, ny: T, nz: T) -> Result<Self> {
        let norm2 = nx * nx + ny * ny + nz * nz;
        if !norm2.is_finite() || (norm2 - T::one()).abs() > T::tolerance(1e-12) {
            return Err(Error::Domain(format!(
                "Bloch vector ({nx}, {ny}, {nz}) is not a unit vector"
            )));
        }
        Ok(Self {
            bloch: [nx, ny, nz],
        })
    }

    pub fn sigma_x() -> Self {
        Self {
            bloch: [T::one(), T::zero(), T::zero()],
        }
    }

    pub fn sigma_z() -> Self {
        Self {
            bloch: [T::zero(), T::zero(), T::one()],
        }
    }

    /// `x σˣ + z σᶻ` for a point `(x, z)` on the unit circle.
    pub fn xz(x: T, z: T) -> Result<Self> {
        Self::new(x, T::zero(), z)
    }

    pub fn bloch(&self) -> [T; 3] {
        self.bloch
    }
}

/// Observables indexed by `(party, setting)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementAssignment<T> {
    n_parties: usize,
    n_settings: usize,
    table: Vec<Option<Measurement<T>>>,
}

impl<T: Real> MeasurementAssignment<T> {
    pub fn new(n_parties: usize, n_settings: usize) -> Self {
        Self {
            n_parties,
            n_settings,
            table: vec![None; n_parties * n_settings],
        }
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn n_settings(&self) -> usize {
        self.n_settings
    }

    pub fn set(&mut self, party: usize, setting: usize, m: Measurement<T>) -> Result<()> {
        if party >= self.n_parties || setting >= self.n_settings {
            return Err(Error::Shape(format!(
                "(party {party}, setting {setting}) outside a {}x{} assignment",
                self.n_parties, self.n_settings
            )));
        }
        self.table[party * self.n_settings + setting] = Some(m);
        Ok(())
    }

    pub fn get(&self, party: usize, setting: usize) -> Option<&Measurement<T>> {
        if party >= self.n_parties || setting >= self.n_settings {
            return None;
        }
        self.table[party * self.n_settings + setting].as_ref()
    }

    /// All assigned entries as `(party, setting, measurement)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Measurement<T>)> {
        self.table.iter().enumerate().filter_map(move |(i, m)| {
            m.as_ref()
                .map(|m| (i / self.n_settings, i % self.n_settings, m))
        })
    }
}

/// `coefficient · ⟨M_{s₁}^{(p₁)} ⋯ M_{s_m}^{(p_m)}⟩` with distinct parties.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorTerm<T> {
    pub coefficient: T,
    pub sites: Vec<(usize, usize)>,
}

impl<T: Real> CorrelatorTerm<T> {
    pub fn new(coefficient: T, sites: Vec<(usize, usize)>) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::Domain("non-finite correlator coefficient".into()));
        }
        let mut parties: Vec<usize> = sites.iter().map(|&(p, _)| p).collect();
        parties.sort_unstable();
        if parties.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain(
                "a correlator may involve each party at most once".into(),
            ));
        }
        Ok(Self { coefficient, sites })
    }
}

/// `I = Σ coeff · ⟨correlator⟩ ≥ classical_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct BellInequality<T> {
    pub name: String,
    pub n_parties: usize,
    pub n_settings: usize,
    pub terms: Vec<CorrelatorTerm<T>>,
    pub classical_bound: T,
}

impl<T: Real> BellInequality<T> {
    /// Value of the Bell expression for a deterministic local strategy,
    /// `outcome(party, setting) ∈ {±1}`.
    pub fn evaluate_deterministic(&self, outcome: impl Fn(usize, usize) -> i8) -> T {
        self.terms
            .iter()
            .map(|t| {
                let sign: i32 = t.sites.iter().map(|&(p, s)| outcome(p, s) as i32).product();
                if sign > 0 {
                    t.coefficient
                } else {
                    -t.coefficient
                }
            })
            .sum()
    }
}

fn check_i1_domain<T: Real>(n: usize, delta: T, big_delta: T) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Domain(format!(
            "N = {n} must be even and at least 2"
        )));
    }
    if !(delta.abs() <= T::one()) {
        return Err(Error::Domain(format!("|δ| = {} exceeds 1", delta.abs())));
    }
    if !(big_delta.abs() <= T::from_f64(3.0)) {
        return Err(Error::Domain(format!(
            "|Δ| = {} exceeds 3",
            big_delta.abs()
        )));
    }
    Ok(())
}

/// Bond weight g_k(δ) = 4[1 + (−1)ᵏ δ]/√3 for the 0-based bond `k`.
pub fn i1_bond_weight<T: Real>(bond: usize, delta: T) -> T {
    let sign = if bond % 2 == 0 { T::one() } else { -T::one() };
    T::from_f64(4.0) * (T::one() + sign * delta) / T::from_f64(3.0).sqrt()
}

/// XXZ-type Bell operator Σₖ g_k(δ)[XₖXₖ₊₁ + YₖYₖ₊₁ + Δ ZₖZₖ₊₁] on an open chain.
pub fn build_i1_hamiltonian<T: Real>(
    n: usize,
    delta: T,
    big_delta: T,
) -> Result<WeightedPauliSum<T>> {
    check_i1_domain(n, delta, big_delta)?;
    let mut terms = Vec::with_capacity(3 * (n - 1));
    for k in 0..n - 1 {
        let g = i1_bond_weight(k, delta);
        for (axis, w) in [
            (Axis::X, T::one()),
            (Axis::Y, T::one()),
            (Axis::Z, big_delta),
        ] {
            terms.push((g * w, PauliString::new(vec![(k, axis), (k + 1, axis)])?));
        }
    }
    WeightedPauliSum::new(n, terms)
}

/// Classical bound of the short-range inequality: −(4+2|Δ|)N for |Δ| ≤ 2, −4|Δ|N for 2 ≤ |Δ| ≤ 3.
pub fn classical_bound_i1<T: Real>(n: usize, delta: T, big_delta: T) -> Result<T> {
    check_i1_domain(n, delta, big_delta)?;
    let d = big_delta.abs();
    let nf = T::from_f64(n as f64);
    let two = T::from_f64(2.0);
    let four = T::from_f64(4.0);
    Ok(if d <= two {
        -(four + two * d) * nf
    } else {
        -four * d * nf
    })
}

/// All-to-all two-body inequality −2S₀ − S₀₁ + ½(S₀₀ + S₁₁) ≥ −2N, with ordered pairs k ≠ l.
pub fn build_i2<T: Real>(n: usize) -> Result<BellInequality<T>> {
    if n < 2 {
        return Err(Error::Domain(
            "the all-to-all inequality needs N >= 2".into(),
        ));
    }
    let half = T::from_f64(0.5);
    let mut terms = Vec::with_capacity(n + 3 * n * (n - 1));
    for k in 0..n {
        terms.push(CorrelatorTerm::new(T::from_f64(-2.0), vec![(k, 0)])?);
    }
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            terms.push(CorrelatorTerm::new(-T::one(), vec![(k, 0), (l, 1)])?);
            terms.push(CorrelatorTerm::new(half, vec![(k, 0), (l, 0)])?);
            terms.push(CorrelatorTerm::new(half, vec![(k, 1), (l, 1)])?);
        }
    }
    Ok(BellInequality {
        name: "i2".into(),
        n_parties: n,
        n_settings: 2,
        terms,
        classical_bound: T::from_f64(-2.0 * n as f64),
    })
}

/// Angles θₖ drawn i.i.d. uniform on [θ−ε, θ+ε] in party order.
///
/// The stream is ChaCha20 (`rand_chacha` 0.9) seeded with `seed_from_u64(seed)`; each
/// party consumes one `f64` draw `u ∈ [0, 1)` mapped to `θ + ε(2u − 1)`.
pub fn i2_random_angles<T: Real>(n: usize, theta: T, eps: T, seed: u64) -> Result<Vec<T>> {
    if !(eps >= T::zero()) {
        return Err(Error::Domain("ε must be non-negative".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let two = T::from_f64(2.0);
    Ok((0..n)
        .map(|_| {
            let u = T::from_f64(rng.random::<f64>());
            theta + eps * (two * u - T::one())
        })
        .collect())
}

/// M₀⁽ᵏ⁾ = σᶻ, M₁⁽ᵏ⁾ = cos θₖ σᶻ + sin θₖ σˣ for the given per-party angles.
pub fn i2_settings<T: Real>(angles: &[T]) -> Result<MeasurementAssignment<T>> {
    let mut a = MeasurementAssignment::new(angles.len(), 2);
    for (k, &th) in angles.iter().enumerate() {
        a.set(k, 0, Measurement::sigma_z())?;
        a.set(k, 1, Measurement::xz(th.sin(), th.cos())?)?;
    }
    Ok(a)
}

/// Random-angle settings for the all-to-all inequality (see [`i2_random_angles`]).
pub fn i2_settings_random<T: Real>(
    n: usize,
    theta: T,
    eps: T,
    seed: u64,
) -> Result<MeasurementAssignment<T>> {
    i2_settings(&i2_random_angles(n, theta, eps, seed)?)
}

/// Multipartite inequality with two measurements per party, bound −2.
pub fn build_i3<T: Real>(n: usize) -> Result<BellInequality<T>> {
    if n < 2 {
        return Err(Error::Domain(
            "the multipartite inequality needs N >= 2".into(),
        ));
    }
    let all0: Vec<(usize, usize)> = (0..n).map(|k| (k, 0)).collect();
    let mut first1 = all0.clone();
    first1[0] = (0, 1);
    let w = T::one() / T::from_f64((n - 1) as f64);
    let mut terms = vec![
        CorrelatorTerm::new(-T::one(), all0)?,
        CorrelatorTerm::new(-T::one(), first1)?,
    ];
    for k in 1..n {
        terms.push(CorrelatorTerm::new(w, vec![(0, 0), (k, 1)])?);
        terms.push(CorrelatorTerm::new(-w, vec![(0, 1), (k, 1)])?);
    }
    Ok(BellInequality {
        name: "i3".into(),
        n_parties: n,
        n_settings: 2,
        terms,
        classical_bound: T::from_f64(-2.0),
    })
}

/// M₀⁽¹⁾ = σᶻ, M₁⁽¹⁾ = cos θ σˣ + sin θ σᶻ, and σᶻ, σˣ for every other party.
pub fn i3_settings<T: Real>(n: usize, theta: T) -> Result<MeasurementAssignment<T>> {
    let mut a = MeasurementAssignment::new(n, 2);
    a.set(0, 0, Measurement::sigma_z())?;
    a.set(0, 1, Measurement::xz(theta.cos(), theta.sin())?)?;
    for k in 1..n {
        a.set(k, 0, Measurement::sigma_z())?;
        a.set(k, 1, Measurement::sigma_x())?;
    }
    Ok(a)
}

/// Substitutes the observables into the inequality, producing its Bell operator.
pub fn compile<T: Real>(
    ineq: &BellInequality<T>,
    settings: &MeasurementAssignment<T>,
) -> Result<WeightedPauliSum<T>> {
    if settings.n_parties() < ineq.n_parties {
        return Err(Error::Shape(format!(
            "assignment covers {} parties, inequality has {}",
            settings.n_parties(),
            ineq.n_parties
        )));
    }
    let mut out = Vec::new();
    for term in &ineq.terms {
        let mut partial: Vec<(T, Vec<(usize, Axis)>)> = vec![(term.coefficient, Vec::new())];
        for &(party, setting) in &term.sites {
            let m = settings
                .get(party, setting)
                .ok_or(Error::IncompleteAssignment { party, setting })?;
            let [nx, ny, nz] = m.bloch();
            if ny != T::zero() {
                return Err(Error::UnsupportedObservable {
                    party,
                    setting,
                    n_y: ny.as_f64(),
                });
            }
            let mut next = Vec::with_capacity(partial.len() * 2);
            for (c, factors) in &partial {
                for (w, axis) in [(nx, Axis::X), (nz, Axis::Z)] {
                    if w != T::zero() {
                        let mut f = factors.clone();
                        f.push((party, axis));
                        next.push((*c * w, f));
                    }
                }
            }
            partial = next;
        }
        for (c, factors) in partial {
            out.push((c, PauliString::new(factors)?));
        }
    }
    WeightedPauliSum::new(ineq.n_parties, out)
}

/// Largest `N·K` accepted by [`brute_force_classical_min`].
pub const MAX_BRUTE_FORCE_VARIABLES: usize = 24;

/// Minimum of the Bell expression over all deterministic local strategies.
pub fn brute_force_classical_min<T: Real>(ineq: &BellInequality<T>) -> Result<T> {
    let n_vars = ineq.n_parties * ineq.n_settings;
    if n_vars > MAX_BRUTE_FORCE_VARIABLES {
        return Err(Error::Capacity {
            what: "deterministic-strategy variables",
            size: n_vars,
            limit: MAX_BRUTE_FORCE_VARIABLES,
        });
    }
    let var = |(p, s): (usize, usize)| p * ineq.n_settings + s;
    for t in &ineq.terms {
        if t.sites
            .iter()
            .any(|&(p, s)| p >= ineq.n_parties || s >= ineq.n_settings)
        {
            return Err(Error::Shape(
                "correlator references an unknown party or setting".into(),
            ));
        }
    }
    let value_of = |bits: u64| {
        ineq.evaluate_deterministic(|p, s| {
            if (bits >> var((p, s))) & 1 == 1 {
                -1
            } else {
                1
            }
        })
    };
    if n_vars <= 16 {
        return Ok((0u64..(1u64 << n_vars))
            .map(value_of)
            .fold(T::infinity(), T::min));
    }

    // Gray-code walk: flipping one variable negates every term that contains it.
    let mut var_terms = vec![Vec::new(); n_vars];
    for (i, t) in ineq.terms.iter().enumerate() {
        for &site in &t.sites {
            var_terms[var(site)].push(i);
        }
    }
    let mut values: Vec<T> = ineq.terms.iter().map(|t| t.coefficient).collect();
    let mut total: T = values.iter().copied().sum();
    let (mut best, mut best_bits) = (total, 0u64);
    let mut bits = 0u64;
    for step in 1u64..(1u64 << n_vars) {
        let v = step.trailing_zeros() as usize;
        bits ^= 1 << v;
        for &t in &var_terms[v] {
            total -= values[t] + values[t];
            values[t] = -values[t];
        }
        if total < best {
            best = total;
            best_bits = bits;
        }
    }
    // re-evaluate the winner in canonical order so rounding does not depend on the walk
    Ok(value_of(best_bits))
}

/// JSON interchange document for an inequality together with its settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellDocument {
    pub name: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub terms: Vec<TermDoc>,
    pub classical_bound: f64,
    pub settings: Vec<SettingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub coeff: f64,
    /// `[party, setting]` pairs; parties 1-based, settings 0-based.
    pub sites: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingDoc {
    pub party: usize,
    pub setting: usize,
    pub bloch: [f64; 3],
}

impl BellDocument {
    pub fn from_parts<T: Real>(
        ineq: &BellInequality<T>,
        settings: &MeasurementAssignment<T>,
        seed: Option<u64>,
    ) -> Self {
        Self {
            name: ineq.name.clone(),
            n: ineq.n_parties,
            k: ineq.n_settings,
            terms: ineq
                .terms
                .iter()
                .map(|t| TermDoc {
                    coeff: t.coefficient.as_f64(),
                    sites: t.sites.iter().map(|&(p, s)| [p + 1, s]).collect(),
                })
                .collect(),
            classical_bound: ineq.classical_bound.as_f64(),
            settings: settings
                .entries()
                .map(|(p, s, m)| SettingDoc {
                    party: p + 1,
                    setting: s,
                    bloch: m.bloch().map(|x| x.as_f64()),
                })
                .collect(),
            seed,
        }
    }

    pub fn into_parts<T: Real>(&self) -> Result<(BellInequality<T>, MeasurementAssignment<T>)> {
        let site = |[p, s]: [usize; 2]| -> Result<(usize, usize)> {
            if p == 0 || p > self.n || s >= self.k {
                return Err(Error::Shape(format!(
                    "site [{p}, {s}] outside N={}, K={}",
                    self.n, self.k
                )));
            }
            Ok((p - 1, s))
        };
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let sites = t
                    .sites
                    .iter()
                    .map(|&x| site(x))
                    .collect::<Result<Vec<_>>>()?;
                CorrelatorTerm::new(T::from_f64(t.coeff), sites)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut settings = MeasurementAssignment::new(self.n, self.k);
        for s in &self.settings {
            let (p, k) = site([s.party, s.setting])?;
            let [x, y, z] = s.bloch.map(T::from_f64);
            settings.set(p, k, Measurement::new(x, y, z)?)?;
        }
        let ineq = BellInequality {
            name: self.name.clone(),
            n_parties: self.n,
            n_settings: self.k,
            terms,
            classical_bound: T::from_f64(self.classical_bound),
        };
        Ok((ineq, settings))
    }
}
