//! Restricted-Boltzmann-machine wavefunction with the hidden layer traced out:
//!
//! log Φ(Ξ) = Σₖ aₖσₖ + Σ_{k′} log cosh θ_{k′},   θ_{k′} = b_{k′} + Σₖ W_{k′k} σₖ.
//!
//! The constant 2^M is dropped. Parameters live in a vector of *free* parameters;
//! a [`TyingScheme`] maps every visible bias, hidden bias and unmasked weight onto
//! one free entry, so tied values are identical by construction.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::SpinConfig;
use crate::scalar::{log_cosh, Real, C};

/// Parameter-sharing pattern of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind {
    /// Every hidden unit couples to every site; `M = α·N`.
    Dense { alpha: usize },
    /// `α` hidden units per site, each coupled to sites within `range` on the open chain.
    ShortRange { alpha: usize, range: usize },
    /// One shared visible bias; one weight per hidden unit shared by all sites.
    PermSymmetric { n_hidden: usize },
    /// `a₂ = … = a_N`; hidden unit 1 fully connected with free weights; every other hidden
    /// unit has a single weight shared across all sites (site 1 included), or across sites
    /// 2..N plus its own site-1 weight when `free_first_site` is set.
    PartialSymmetric {
        n_hidden: usize,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        free_first_site: bool,
    },
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Dense { .. } => "dense",
            SchemeKind::ShortRange { .. } => "short_range",
            SchemeKind::PermSymmetric { .. } => "perm_symmetric",
            SchemeKind::PartialSymmetric { .. } => "partial_symmetric",
        }
    }
}

/// Map from full parameter indices `(a, b, W)` to free parameters.
///
/// Free parameters are laid out as visible groups, then hidden biases, then weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TyingScheme {
    kind: SchemeKind,
    n_visible: usize,
    n_hidden: usize,
    visible_free: Vec<usize>,
    hidden_free: Vec<usize>,
    hidden_links: Vec<Vec<(usize, usize)>>,
    site_links: Vec<Vec<(usize, usize)>>,
    n_free: usize,
}

impl TyingScheme {
    pub fn new(kind: SchemeKind, n_visible: usize) -> Result<Self> {
        let n = n_visible;
        if n == 0 {
            return Err(Error::Config(
                "the network needs at least one visible unit".into(),
            ));
        }
        let bad = |msg: &str| Err(Error::Config(format!("{}: {msg}", kind.name())));
        let (n_hidden, visible_free, n_vis_groups): (usize, Vec<usize>, usize) = match kind {
            SchemeKind::Dense { alpha } | SchemeKind::ShortRange { alpha, .. } => {
                if alpha == 0 {
                    return bad("hidden-unit density must be positive");
                }
                (alpha * n, (0..n).collect(), n)
            }
            SchemeKind::PermSymmetric { n_hidden } => {
                if n_hidden == 0 {
                    return bad("needs at least one hidden unit");
                }
                (n_hidden, vec![0; n], 1)
            }
            SchemeKind::PartialSymmetric { n_hidden, .. } => {
                if n_hidden == 0 || n < 2 {
                    return bad("needs at least one hidden unit and two sites");
                }
                let mut v = vec![1; n];
                v[0] = 0;
                (n_hidden, v, 2)
            }
        };
        let hidden_free: Vec<usize> = (0..n_hidden).map(|j| n_vis_groups + j).collect();
        let base = n_vis_groups + n_hidden;
        let mut hidden_links = vec![Vec::new(); n_hidden];
        let mut next = base;
        match kind {
            SchemeKind::Dense { .. } => {
                for links in hidden_links.iter_mut() {
                    for k in 0..n {
                        links.push((k, next));
                        next += 1;
                    }
                }
            }
            SchemeKind::ShortRange { alpha, range } => {
                for (j, links) in hidden_links.iter_mut().enumerate() {
                    let site = j / alpha;
                    let lo = site.saturating_sub(range);
                    let hi = (site + range).min(n - 1);
                    for k in lo..=hi {
                        links.push((k, next));
                        next += 1;
                    }
                }
            }
            SchemeKind::PermSymmetric { .. } => {
                for links in hidden_links.iter_mut() {
                    links.extend((0..n).map(|k| (k, next)));
                    next += 1;
                }
            }
            SchemeKind::PartialSymmetric {
                free_first_site, ..
            } => {
                for (j, links) in hidden_links.iter_mut().enumerate() {
                    if j == 0 {
                        for k in 0..n {
                            links.push((k, next));
                            next += 1;
                        }
                    } else if free_first_site {
                        links.push((0, next));
                        links.extend((1..n).map(|k| (k, next + 1)));
                        next += 2;
                    } else {
                        links.extend((0..n).map(|k| (k, next)));
                        next += 1;
                    }
                }
            }
        }
        let mut site_links = vec![Vec::new(); n];
        for (j, links) in hidden_links.iter().enumerate() {
            for &(k, f) in links {
                site_links[k].push((j, f));
            }
        }
        Ok(Self {
            kind,
            n_visible: n,
            n_hidden,
            visible_free,
            hidden_free,
            hidden_links,
            site_links,
            n_free: next,
        })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// Number of free (independently variable) complex parameters.
    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Free-parameter index of the visible bias of `site`.
    pub fn visible_index(&self, site: usize) -> usize {
        self.visible_free[site]
    }

    pub fn hidden_index(&self, hidden: usize) -> usize {
        self.hidden_free[hidden]
    }

    /// Free-parameter index of `W[hidden][site]`, or `None` when the entry is masked.
    pub fn weight_index(&self, hidden: usize, site: usize) -> Option<usize> {
        self.hidden_links[hidden]
            .iter()
            .find(|&&(k, _)| k == site)
            .map(|&(_, f)| f)
    }

    /// `(site, free index)` for every unmasked weight of a hidden unit.
    pub fn hidden_links(&self, hidden: usize) -> &[(usize, usize)] {
        &self.hidden_links[hidden]
    }

    /// `(hidden, free index)` for every unmasked weight touching a site.
    pub fn site_links(&self, site: usize) -> &[(usize, usize)] {
        &self.site_links[site]
    }
}

/// RBM parameters: free complex values plus the shared tying scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmParams<T> {
    scheme: Arc<TyingScheme>,
    free: Vec<C<T>>,
}

impl<T: Real> RbmParams<T> {
    pub fn zeros(scheme: Arc<TyingScheme>) -> Self {
        let free = vec![Complex::new(T::zero(), T::zero()); scheme.n_free()];
        Self { scheme, free }
    }

    pub fn from_free(scheme: Arc<TyingScheme>, free: Vec<C<T>>) -> Result<Self> {
        if free.len() != scheme.n_free() {
            return Err(Error::Shape(format!(
                "{} free parameters given, scheme needs {}",
                free.len(),
                scheme.n_free()
            )));
        }
        Ok(Self { scheme, free })
    }

    /// I.i.d. Gaussian free parameters, standard deviation `scale` per real component.
    ///
    /// Draws come from ChaCha20 seeded with `seed_from_u64(seed)`, real part then
    /// imaginary part, in free-parameter order.
    pub fn random_init(scheme: Arc<TyingScheme>, scale: T, seed: u64) -> Result<Self> {
        if !(scale > T::zero()) {
            return Err(Error::Config(
                "initialization scale must be positive".into(),
            ));
        }
        let normal = Normal::new(0.0, scale.as_f64()).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let free = (0..scheme.n_free())
            .map(|_| {
                let re = normal.sample(&mut rng);
                let im = normal.sample(&mut rng);
                Complex::new(T::from_f64(re), T::from_f64(im))
            })
            .collect();
        Ok(Self { scheme, free })
    }

    /// Adds iπ/2 to the visible bias of every odd site, so that Φ picks up the Marshall sign
    /// (−1)^(up spins on odd sites) of a bipartite antiferromagnet.
    pub fn with_marshall_sign(mut self) -> Result<Self> {
        let n = self.n_visible();
        let odd: BTreeSet<usize> = (1..n)
            .step_by(2)
            .map(|k| self.scheme.visible_free[k])
            .collect();
        if (0..n)
            .step_by(2)
            .any(|k| odd.contains(&self.scheme.visible_free[k]))
        {
            return Err(Error::InvalidConfig(
                "the Marshall sign needs separate visible biases on odd and even sites".into(),
            ));
        }
        let half_pi = T::from_f64(std::f64::consts::FRAC_PI_2);
        for f in odd {
            self.free[f].im += half_pi;
        }
        Ok(self)
    }

    pub fn scheme(&self) -> &Arc<TyingScheme> {
        &self.scheme
    }

    pub fn n_visible(&self) -> usize {
        self.scheme.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.scheme.n_hidden
    }

    pub fn free(&self) -> &[C<T>] {
        &self.free
    }

    pub fn a(&self, site: usize) -> C<T> {
        self.free[self.scheme.visible_free[site]]
    }

    pub fn b(&self, hidden: usize) -> C<T> {
        self.free[self.scheme.hidden_free[hidden]]
    }

    /// `W[hidden][site]`, zero when masked.
    pub fn w(&self, hidden: usize, site: usize) -> C<T> {
        self.scheme
            .weight_index(hidden, site)
            .map_or(Complex::new(T::zero(), T::zero()), |f| self.free[f])
    }

    pub fn conj(&self) -> Self {
        Self {
            scheme: self.scheme.clone(),
            free: self.free.iter().map(|z| z.conj()).collect(),
        }
    }

    /// `Ω − η·δ` over the free parameters.
    pub fn stepped(&self, direction: &[C<T>], eta: T) -> Result<Self> {
        if direction.len() != self.free.len() {
            return Err(Error::Shape("update direction has the wrong length".into()));
        }
        let free = self
            .free
            .iter()
            .zip(direction)
            .map(|(&p, &d)| p - d * eta)
            .collect();
        Ok(Self {
            scheme: self.scheme.clone(),
            free,
        })
    }

    fn check_config(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.n_visible() {
            return Err(Error::Shape(format!(
                "configuration has {} sites, network has {}",
                config.len(),
                self.n_visible()
            )));
        }
        Ok(())
    }

    /// Effective angles θ_{k′} = b_{k′} + Σₖ W_{k′k} σₖ.
    pub fn theta(&self, config: &SpinConfig) -> Result<Vec<C<T>>> {
        self.check_config(config)?;
        let s = config.as_slice();
        Ok((0..self.n_hidden())
            .map(|j| {
                let mut t = self.b(j);
                for &(k, f) in &self.scheme.hidden_links[j] {
                    if s[k] > 0 {
                        t += self.free[f];
                    } else {
                        t -= self.free[f];
                    }
                }
                t
            })
            .collect())
    }

    fn visible_term(&self, config: &SpinConfig) -> C<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (k, &s) in config.as_slice().iter().enumerate() {
            if s > 0 {
                acc += self.a(k);
            } else {
                acc -= self.a(k);
            }
        }
        acc
    }

    /// Unnormalized log-amplitude log Φ(Ξ).
    pub fn log_amplitude(&self, config: &SpinConfig) -> Result<C<T>> {
        let theta = self.theta(config)?;
        Ok(self.visible_term(config) + theta.into_iter().map(log_cosh).sum::<C<T>>())
    }

    /// log Φ(Ξ′) − log Φ(Ξ) for Ξ′ = Ξ with the listed (distinct) sites flipped.
    pub fn log_ratio(&self, lookup: &LookupState<T>, flips: &[usize]) -> Result<C<T>> {
        let n = self.n_visible();
        if lookup.theta.len() != self.n_hidden() || lookup.config.len() != n {
            return Err(Error::Shape(
                "lookup state does not match the network".into(),
            ));
        }
        for (i, &k) in flips.iter().enumerate() {
            if k >= n {
                return Err(Error::InvalidConfig(format!(
                    "flip site {} outside {n} sites",
                    k + 1
                )));
            }
            if flips[..i].contains(&k) {
                return Err(Error::InvalidConfig(format!(
                    "flip site {} repeated",
                    k + 1
                )));
            }
        }
        Ok(self.log_ratio_unchecked(lookup, flips))
    }

    pub(crate) fn log_ratio_unchecked(&self, lookup: &LookupState<T>, flips: &[usize]) -> C<T> {
        let s = lookup.config.as_slice();
        let two = T::one() + T::one();
        let mut out = Complex::new(T::zero(), T::zero());
        for &k in flips {
            let a = self.a(k);
            out -= if s[k] > 0 { a * two } else { -a * two };
        }
        match flips {
            [] => {}
            [k] => {
                let k = *k;
                let sign = if s[k] > 0 { two } else { -two };
                for &(j, f) in &self.scheme.site_links[k] {
                    let t = lookup.theta[j] - self.free[f] * sign;
                    out += log_cosh(t) - lookup.log_cosh[j];
                }
            }
            _ => {
                let mut shifts: Vec<(usize, C<T>)> = Vec::new();
                for &k in flips {
                    let sign = if s[k] > 0 { two } else { -two };
                    shifts.extend(
                        self.scheme.site_links[k]
                            .iter()
                            .map(|&(j, f)| (j, self.free[f] * sign)),
                    );
                }
                shifts.sort_unstable_by_key(|&(j, _)| j);
                let mut i = 0;
                while i < shifts.len() {
                    let j = shifts[i].0;
                    let mut d = Complex::new(T::zero(), T::zero());
                    while i < shifts.len() && shifts[i].0 == j {
                        d += shifts[i].1;
                        i += 1;
                    }
                    out += log_cosh(lookup.theta[j] - d) - lookup.log_cosh[j];
                }
            }
        }
        out
    }

    /// Variational derivatives ∂ log Φ / ∂Ω for every free parameter (tied groups summed).
    pub fn derivatives(&self, config: &SpinConfig) -> Result<Vec<C<T>>> {
        let theta = self.theta(config)?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.free.len()];
        self.derivatives_into(config.as_slice(), &theta, &mut out);
        Ok(out)
    }

    /// Writes the derivatives for `spins` with precomputed `theta` into `out` (overwritten).
    pub(crate) fn derivatives_into(&self, spins: &[i8], theta: &[C<T>], out: &mut [C<T>]) {
        let zero = Complex::new(T::zero(), T::zero());
        out.iter_mut().for_each(|o| *o = zero);
        let one = T::one();
        for (k, &s) in spins.iter().enumerate() {
            let f = self.scheme.visible_free[k];
            out[f].re += if s > 0 { one } else { -one };
        }
        for (j, t) in theta.iter().enumerate() {
            let th = t.tanh();
            out[self.scheme.hidden_free[j]] += th;
            for &(k, f) in &self.scheme.hidden_links[j] {
                if spins[k] > 0 {
                    out[f] += th;
                } else {
                    out[f] -= th;
                }
            }
        }
    }

    /// Full parameter arrays `(a, b, W)` with zeros at masked weights.
    pub fn expanded(&self) -> (Vec<C<T>>, Vec<C<T>>, Vec<Vec<C<T>>>) {
        let n = self.n_visible();
        let m = self.n_hidden();
        let a = (0..n).map(|k| self.a(k)).collect();
        let b = (0..m).map(|j| self.b(j)).collect();
        let mut w = vec![vec![Complex::new(T::zero(), T::zero()); n]; m];
        for (j, row) in w.iter_mut().enumerate() {
            for &(k, f) in &self.scheme.hidden_links[j] {
                row[k] = self.free[f];
            }
        }
        (a, b, w)
    }
}

/// Hidden-unit cache for one configuration: θ and log cosh θ.
#[derive(Clone, Debug, PartialEq)]
pub struct LookupState<T> {
    config: SpinConfig,
    theta: Vec<C<T>>,
    log_cosh: Vec<C<T>>,
}

impl<T: Real> LookupState<T> {
    pub fn new(params: &RbmParams<T>, config: SpinConfig) -> Result<Self> {
        let theta = params.theta(&config)?;
        let log_cosh = theta.iter().map(|&t| log_cosh(t)).collect();
        Ok(Self {
            config,
            theta,
            log_cosh,
        })
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    pub fn theta(&self) -> &[C<T>] {
        &self.theta
    }

    /// Recomputes the cache from scratch (after a parameter update).
    pub fn refresh(&mut self, params: &RbmParams<T>) -> Result<()> {
        self.theta = params.theta(&self.config)?;
        self.log_cosh = self.theta.iter().map(|&t| log_cosh(t)).collect();
        Ok(())
    }

    /// Flips the listed sites, updating θ by −2 Σ W_{k′k} σₖ (pre-flip σ).
    pub fn update(&mut self, params: &RbmParams<T>, flips: &[usize]) {
        let two = T::one() + T::one();
        let scheme = &params.scheme;
        for &k in flips {
            let sign = if self.config.get(k) > 0 { two } else { -two };
            for &(j, f) in &scheme.site_links[k] {
                self.theta[j] -= params.free[f] * sign;
            }
        }
        for &k in flips {
            for &(j, _) in &scheme.site_links[k] {
                self.log_cosh[j] = log_cosh(self.theta[j]);
            }
            self.config.flip(k);
        }
    }

    /// Largest entrywise deviation of the cached θ from a fresh recomputation.
    pub fn drift(&self, params: &RbmParams<T>) -> Result<T> {
        let fresh = params.theta(&self.config)?;
        Ok(fresh
            .iter()
            .zip(&self.theta)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max))
    }
}

/// Log-amplitude for a full parameter set; see [`RbmParams::log_amplitude`].
pub fn log_amplitude<T: Real>(params: &RbmParams<T>, config: &SpinConfig) -> Result<C<T>> {
    params.log_amplitude(config)
}

/// JSON checkpoint of an RBM with expanded `(a, b, W)` arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub scheme: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub range: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub free_first_site: bool,
    pub seed: u64,
    pub params: CheckpointParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointParams {
    pub a_re: Vec<f64>,
    pub a_im: Vec<f64>,
    pub b_re: Vec<f64>,
    pub b_im: Vec<f64>,
    #[serde(rename = "W_re")]
    pub w_re: Vec<Vec<f64>>,
    #[serde(rename = "W_im")]
    pub w_im: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn from_params<T: Real>(params: &RbmParams<T>, seed: u64) -> Self {
        let (a, b, w) = params.expanded();
        let kind = params.scheme.kind();
        let (alpha, range) = match kind {
            SchemeKind::Dense { alpha } => (Some(alpha), None),
            SchemeKind::ShortRange { alpha, range } => (Some(alpha), Some(range)),
            _ => (None, None),
        };
        let free_first_site = matches!(
            kind,
            SchemeKind::PartialSymmetric {
                free_first_site: true,
                ..
            }
        );
        let re = |v: &[C<T>]| v.iter().map(|z| z.re.as_f64()).collect::<Vec<_>>();
        let im = |v: &[C<T>]| v.iter().map(|z| z.im.as_f64()).collect::<Vec<_>>();
        Self {
            scheme: kind.name().into(),
            n: params.n_visible(),
            m: params.n_hidden(),
            alpha,
            range,
            free_first_site,
            seed,
            params: CheckpointParams {
                a_re: re(&a),
                a_im: im(&a),
                b_re: re(&b),
                b_im: im(&b),
                w_re: w.iter().map(|r| re(r)).collect(),
                w_im: w.iter().map(|r| im(r)).collect(),
            },
        }
    }

    pub fn scheme_kind(&self) -> Result<SchemeKind> {
        let need = |v: Option<usize>, what: &str| {
            v.ok_or_else(|| Error::Shape(format!("checkpoint for {} lacks {what}", self.scheme)))
        };
        Ok(match self.scheme.as_str() {
            "dense" => SchemeKind::Dense {
                alpha: need(self.alpha, "alpha")?,
            },
            "short_range" => SchemeKind::ShortRange {
                alpha: need(self.alpha, "alpha")?,
                range: need(self.range, "R")?,
            },
            "perm_symmetric" => SchemeKind::PermSymmetric { n_hidden: self.m },
            "partial_symmetric" => SchemeKind::PartialSymmetric {
                n_hidden: self.m,
                free_first_site: self.free_first_site,
            },
            other => return Err(Error::Shape(format!("unknown scheme {other:?}"))),
        })
    }

    /// Rebuilds the parameters, rejecting shape mismatches, nonzero masked weights and
    /// inconsistent tied values.
    pub fn to_params<T: Real>(&self) -> Result<RbmParams<T>> {
        let scheme = Arc::new(TyingScheme::new(self.scheme_kind()?, self.n)?);
        let (n, m) = (self.n, self.m);
        let p = &self.params;
        let shape_err =
            |what: &str| Error::Shape(format!("checkpoint field {what} has the wrong shape"));
        if scheme.n_hidden() != m {
            return Err(Error::Shape(format!(
                "M = {m} does not match the scheme ({})",
                scheme.n_hidden()
            )));
        }
        for (v, len, what) in [
            (&p.a_re, n, "a_re"),
            (&p.a_im, n, "a_im"),
            (&p.b_re, m, "b_re"),
            (&p.b_im, m, "b_im"),
        ] {
            if v.len() != len {
                return Err(shape_err(what));
            }
        }
        for (w, what) in [(&p.w_re, "W_re"), (&p.w_im, "W_im")] {
            if w.len() != m || w.iter().any(|r| r.len() != n) {
                return Err(shape_err(what));
            }
        }
        let mut free: Vec<Option<(f64, f64)>> = vec![None; scheme.n_free()];
        let mut assign = |f: usize, v: (f64, f64), what: String| -> Result<()> {
            match free[f] {
                None => free[f] = Some(v),
                Some(prev) => {
                    let tol = 1e-12 * (1.0 + prev.0.abs().max(prev.1.abs()));
                    if (prev.0 - v.0).abs() > tol || (prev.1 - v.1).abs() > tol {
                        return Err(Error::Shape(format!(
                            "tied parameter {what} differs from its group"
                        )));
                    }
                }
            }
            Ok(())
        };
        for k in 0..n {
            assign(
                scheme.visible_index(k),
                (p.a_re[k], p.a_im[k]),
                format!("a[{k}]"),
            )?;
        }
        for j in 0..m {
            assign(
                scheme.hidden_index(j),
                (p.b_re[j], p.b_im[j]),
                format!("b[{j}]"),
            )?;
            for k in 0..n {
                let v = (p.w_re[j][k], p.w_im[j][k]);
                match scheme.weight_index(j, k) {
                    Some(f) => assign(f, v, format!("W[{j}][{k}]"))?,
                    None if v != (0.0, 0.0) => {
                        return Err(Error::Shape(format!(
                            "masked weight W[{j}][{k}] is nonzero"
                        )));
                    }
                    None => {}
                }
            }
        }
        let free = free
            .into_iter()
            .map(|v| {
                let (re, im) = v.unwrap_or((0.0, 0.0));
                Complex::new(T::from_f64(re), T::from_f64(im))
            })
            .collect();
        RbmParams::from_free(scheme, free)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::Dense { alpha } => write!(f, "dense(alpha={alpha})"),
            SchemeKind::ShortRange { alpha, range } => {
                write!(f, "short_range(alpha={alpha}, R={range})")
            }
            SchemeKind::PermSymmetric { n_hidden } => write!(f, "perm_symmetric(M={n_hidden})"),
            SchemeKind::PartialSymmetric {
                n_hidden,
                free_first_site: false,
            } => {
                write!(f, "partial_symmetric(M={n_hidden})")
            }
            SchemeKind::PartialSymmetric {
                n_hidden,
                free_first_site: true,
            } => {
                write!(f, "partial_symmetric(M={n_hidden}, free first site)")
            }
        }
    }
}
