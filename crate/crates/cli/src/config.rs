//! Run configuration: per-inequality defaults, a JSON file, then command-line flags.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use nqs_bell::bell::{
    build_i1_hamiltonian, build_i2, build_i3, classical_bound_i1, compile, i2_settings_random,
    i3_settings,
};
use nqs_bell::sr::SrConfig;
use nqs_bell::{
    BellInequality, MeasurementAssignment, Operator, Rbm, SamplerConfig, SchemeKind, TyingScheme,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::args::{CommonArgs, IneqKind, SchemeName};
use crate::CliError;

/// Output directory used when neither `--out`, `NQS_BELL_OUT` nor the config file names one.
pub const DEFAULT_OUT: &str = "nqs-bell-out";

const TOP_LEVEL_KEYS: [&str; 7] = ["inequality", "N", "scheme", "sr", "sampler", "out", "seed"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InequalitySpec {
    I1 {
        delta: f64,
        #[serde(rename = "Delta")]
        big_delta: f64,
    },
    I2 {
        theta: f64,
        eps: f64,
        /// Seed of the random measurement angles.
        seed: u64,
    },
    I3 {
        theta: f64,
    },
}

impl InequalitySpec {
    pub fn kind(&self) -> IneqKind {
        match self {
            InequalitySpec::I1 { .. } => IneqKind::I1,
            InequalitySpec::I2 { .. } => IneqKind::I2,
            InequalitySpec::I3 { .. } => IneqKind::I3,
        }
    }

    /// Correlator form with settings; `None` for i1, which is only available as its operator.
    pub fn correlator_form(
        &self,
        n: usize,
    ) -> Option<nqs_bell::Result<(BellInequality<f64>, MeasurementAssignment<f64>)>> {
        match *self {
            InequalitySpec::I1 { .. } => None,
            InequalitySpec::I2 { theta, eps, seed } => {
                Some(build_i2(n).and_then(|i| Ok((i, i2_settings_random(n, theta, eps, seed)?))))
            }
            InequalitySpec::I3 { theta } => {
                Some(build_i3(n).and_then(|i| Ok((i, i3_settings(n, theta)?))))
            }
        }
    }

    pub fn operator(&self, n: usize) -> nqs_bell::Result<Operator> {
        match (self, self.correlator_form(n)) {
            (&InequalitySpec::I1 { delta, big_delta }, _) => {
                build_i1_hamiltonian(n, delta, big_delta)
            }
            (_, Some(form)) => {
                let (ineq, settings) = form?;
                compile(&ineq, &settings)
            }
            (_, None) => unreachable!("only i1 lacks a correlator form"),
        }
    }

    pub fn classical_bound(&self, n: usize) -> nqs_bell::Result<f64> {
        match *self {
            InequalitySpec::I1 { delta, big_delta } => classical_bound_i1(n, delta, big_delta),
            _ => Ok(self
                .correlator_form(n)
                .expect("i2 and i3 have a correlator form")?
                .0
                .classical_bound),
        }
    }
}

/// Fully resolved configuration; embedded in every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub inequality: InequalitySpec,
    #[serde(rename = "N")]
    pub n: usize,
    pub scheme: SchemeKind,
    pub sr: SrConfig,
    pub sampler: SamplerConfig,
    pub out: PathBuf,
    /// Global seed; network initialization and chains use it, and i2 angles default to it.
    pub seed: u64,
}

impl RunConfig {
    pub fn operator(&self) -> Result<Operator, CliError> {
        Ok(self.inequality.operator(self.n)?)
    }

    pub fn classical_bound(&self) -> Result<f64, CliError> {
        Ok(self.inequality.classical_bound(self.n)?)
    }

    pub fn tying_scheme(&self) -> Result<Arc<TyingScheme>, CliError> {
        Ok(Arc::new(TyingScheme::new(self.scheme, self.n)?))
    }
}

fn default_n(kind: IneqKind) -> usize {
    match kind {
        IneqKind::I1 => 12,
        IneqKind::I2 => 10,
        IneqKind::I3 => 8,
    }
}

fn default_inequality(kind: IneqKind, seed: u64) -> Value {
    let ineq = match kind {
        IneqKind::I1 => InequalitySpec::I1 {
            delta: 0.9,
            big_delta: 2.0,
        },
        IneqKind::I2 => InequalitySpec::I2 {
            theta: 2.0 * std::f64::consts::PI / 3.0,
            eps: 0.1,
            seed,
        },
        IneqKind::I3 => InequalitySpec::I3 { theta: 0.0 },
    };
    serde_json::to_value(ineq).expect("inequality serializes")
}

/// i1 → short_range(α=4, R=2); i2 with ε ≠ 0 → dense(α=2); i2 with ε = 0 → perm_symmetric(M=2N);
/// i3 → partial_symmetric(M=2N) with a free site-1 weight on every hidden unit.
pub fn default_scheme(ineq: &InequalitySpec, n: usize) -> SchemeKind {
    match *ineq {
        InequalitySpec::I1 { .. } => SchemeKind::ShortRange { alpha: 4, range: 2 },
        InequalitySpec::I2 { eps, .. } if eps == 0.0 => {
            SchemeKind::PermSymmetric { n_hidden: 2 * n }
        }
        InequalitySpec::I2 { .. } => SchemeKind::Dense { alpha: 2 },
        InequalitySpec::I3 { .. } => SchemeKind::PartialSymmetric {
            n_hidden: 2 * n,
            free_first_site: true,
        },
    }
}

/// i1 samples the Σᶻ = 0 sector with pair exchanges; i2 and i3 use single flips.
pub fn default_sampler(kind: IneqKind) -> SamplerConfig {
    match kind {
        IneqKind::I1 => SamplerConfig::in_sector(0),
        _ => SamplerConfig::default(),
    }
}

/// Optimizer settings per inequality.
pub fn default_sr(kind: IneqKind) -> SrConfig {
    let base = SrConfig::default();
    match kind {
        IneqKind::I1 => SrConfig {
            iterations: 600,
            samples_per_iteration: 1000,
            eta0: 0.01,
            eta_decay: 0.999,
            lambda_min: 1e-3,
            marshall_sign: true,
            ..base
        },
        IneqKind::I2 => SrConfig {
            iterations: 1000,
            samples_per_iteration: 1000,
            eta0: 0.01,
            eta_decay: 0.999,
            lambda_min: 1e-3,
            ..base
        },
        IneqKind::I3 => SrConfig {
            iterations: 400,
            samples_per_iteration: 2000,
            ..base
        },
    }
}

/// Whether the scheme keeps odd and even visible biases apart; an invalid scheme answers
/// true here and is reported by the later validation.
fn marshall_sign_fits(kind: SchemeKind, n: usize) -> bool {
    TyingScheme::new(kind, n).map_or(true, |t| {
        Rbm::zeros(Arc::new(t)).with_marshall_sign().is_ok()
    })
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Recursively overlays `top` onto `base` (objects merge key by key; anything else replaces).
pub fn merge(base: &mut Value, top: &Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, t) => *b = t.clone(),
    }
}

fn read_file(args: &CommonArgs) -> Result<Map<String, Value>, CliError> {
    let Some(path) = &args.config else {
        return Ok(Map::new());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("malformed config {}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(usage(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    };
    if let Some(k) = map.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(usage(format!("unknown config field {k:?}")));
    }
    Ok(map)
}

fn parse_kind(s: &str) -> Result<IneqKind, CliError> {
    match s {
        "i1" => Ok(IneqKind::I1),
        "i2" => Ok(IneqKind::I2),
        "i3" => Ok(IneqKind::I3),
        other => Err(usage(format!("unknown inequality {other:?}"))),
    }
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| usage(format!("invalid {what}: {e}")))
}

fn scheme_from_flags(
    name: SchemeName,
    args: &CommonArgs,
    n: usize,
) -> Result<SchemeKind, CliError> {
    if args.range.is_some() && name != SchemeName::ShortRange {
        return Err(usage("--range only applies to the short_range scheme"));
    }
    Ok(match name {
        SchemeName::Dense => SchemeKind::Dense {
            alpha: args.alpha.unwrap_or(2),
        },
        SchemeName::ShortRange => SchemeKind::ShortRange {
            alpha: args.alpha.unwrap_or(4),
            range: args.range.unwrap_or(2),
        },
        SchemeName::PermSymmetric => SchemeKind::PermSymmetric {
            n_hidden: args.alpha.unwrap_or(2) * n,
        },
        SchemeName::PartialSymmetric => SchemeKind::PartialSymmetric {
            n_hidden: args.alpha.unwrap_or(2) * n,
            free_first_site: true,
        },
    })
}

fn apply_density(scheme: SchemeKind, args: &CommonArgs, n: usize) -> Result<SchemeKind, CliError> {
    let mut s = scheme;
    match &mut s {
        SchemeKind::Dense { alpha } => {
            if args.range.is_some() {
                return Err(usage("--range only applies to the short_range scheme"));
            }
            *alpha = args.alpha.unwrap_or(*alpha);
        }
        SchemeKind::ShortRange { alpha, range } => {
            *alpha = args.alpha.unwrap_or(*alpha);
            *range = args.range.unwrap_or(*range);
        }
        SchemeKind::PermSymmetric { n_hidden } | SchemeKind::PartialSymmetric { n_hidden, .. } => {
            if args.range.is_some() {
                return Err(usage("--range only applies to the short_range scheme"));
            }
            if let Some(a) = args.alpha {
                *n_hidden = a * n;
            }
        }
    }
    Ok(s)
}

/// Resolves defaults, the optional config file and the flags into a validated [`RunConfig`].
pub fn resolve(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let file = read_file(args)?;
    let seed = match (args.seed, file.get("seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => v
            .as_u64()
            .ok_or_else(|| usage("seed must be a non-negative integer"))?,
        (None, None) => 1,
    };

    let file_ineq = file.get("inequality");
    let file_kind = match file_ineq.map(|v| v.get("kind").and_then(Value::as_str)) {
        Some(Some(k)) => Some(parse_kind(k)?),
        Some(None) => return Err(usage("config inequality needs a \"kind\"")),
        None => None,
    };
    let kind = args
        .ineq
        .or(file_kind)
        .ok_or_else(|| usage("no inequality selected; pass --ineq or a config file"))?;
    let mut ineq_value = default_inequality(kind, seed);
    if let (Some(fi), Some(fk)) = (file_ineq, file_kind) {
        if fk == kind {
            merge(&mut ineq_value, fi);
        }
    }
    let obj = ineq_value.as_object_mut().expect("inequality is an object");
    for (flag, key, value) in [
        ("--delta", "delta", args.delta),
        ("--Delta", "Delta", args.big_delta),
        ("--theta", "theta", args.theta),
        ("--eps", "eps", args.eps),
    ] {
        if let Some(v) = value {
            if !obj.contains_key(key) {
                return Err(usage(
                    format!("{flag} does not apply to {kind:?}").to_lowercase(),
                ));
            }
            obj.insert(key.into(), Value::from(v));
        }
    }
    let inequality: InequalitySpec = from_value(ineq_value, "inequality")?;

    let n = match (args.n, file.get("N")) {
        (Some(n), _) => n,
        (None, Some(v)) => {
            v.as_u64()
                .ok_or_else(|| usage("N must be a positive integer"))? as usize
        }
        (None, None) => default_n(kind),
    };

    let scheme = match (args.scheme, file.get("scheme")) {
        (Some(name), _) => scheme_from_flags(name, args, n)?,
        (None, Some(v)) => apply_density(from_value(v.clone(), "scheme")?, args, n)?,
        (None, None) => apply_density(default_scheme(&inequality, n), args, n)?,
    };

    let mut sampler_value = serde_json::to_value(default_sampler(kind))?;
    if let Some(v) = file.get("sampler") {
        merge(&mut sampler_value, v);
    }
    let mut sampler: SamplerConfig = from_value(sampler_value, "sampler")?;
    if let Some(c) = args.chains {
        sampler.n_chains = c;
    }

    let mut sr_value = serde_json::to_value(default_sr(kind))?;
    if let Some(v) = file.get("sr") {
        merge(&mut sr_value, v);
    }
    let mut sr: SrConfig = from_value(sr_value, "sr")?;
    if sr.marshall_sign && !marshall_sign_fits(scheme, n) {
        if file
            .get("sr")
            .and_then(|v| v.get("marshall_sign"))
            .is_some()
        {
            return Err(usage(
                "marshall_sign needs separate visible biases on odd and even sites",
            ));
        }
        sr.marshall_sign = false;
    }
    if let Some(i) = args.iters {
        sr.iterations = i;
    }
    if let Some(s) = args.samples {
        sr.samples_per_iteration = s;
    }
    sr.seed = seed;

    let out = match (&args.out, file.get("out")) {
        (Some(o), _) => o.clone(),
        (None, Some(v)) => PathBuf::from(
            v.as_str()
                .ok_or_else(|| usage("out must be a path string"))?,
        ),
        (None, None) => PathBuf::from(DEFAULT_OUT),
    };

    let cfg = RunConfig {
        inequality,
        n,
        scheme,
        sr,
        sampler,
        out,
        seed,
    };
    cfg.sr.validate()?;
    cfg.sampler.validate()?;
    cfg.tying_scheme()?;
    cfg.inequality.classical_bound(n)?;
    if let InequalitySpec::I1 { .. } = cfg.inequality {
        if let Some(s) = cfg.sampler.sector {
            if s.unsigned_abs() as usize > n || (n as i32 - s) % 2 != 0 {
                return Err(usage(format!("sector {s} is empty for N = {n}")));
            }
        }
    }
    Ok(cfg)
}
