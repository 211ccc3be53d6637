//! Experiment configuration: flat `key = value` text under a single `[kind]` header.
//!
//! ```text
//! # two-curve sweep
//! [dynamics]
//! alpha = 1, 1.5
//! beta = 1
//! tau = 0
//! K = 100000
//! ```
//!
//! Comma-separated values form a sweep; the config expands to the cross-product of all
//! swept keys. `seeds` and `output_path` are reserved keys shared by every kind.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Dynamics,
    Tightness,
    Optimize,
    FiniteSum,
    Rl,
    Verify,
}

impl Kind {
    pub const ALL: [Kind; 6] = [Kind::Dynamics, Kind::Tightness, Kind::Optimize, Kind::FiniteSum, Kind::Rl, Kind::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Dynamics => "dynamics",
            Kind::Tightness => "tightness",
            Kind::Optimize => "optimize",
            Kind::FiniteSum => "finite_sum",
            Kind::Rl => "rl",
            Kind::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s || k.name().replace('_', "-") == s)
    }

    /// Kinds whose runs draw random numbers and therefore need at least one seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Kind::Optimize | Kind::FiniteSum | Kind::Rl | Kind::Verify)
    }

    fn schema(self) -> &'static [Spec] {
        match self {
            Kind::Dynamics => DYNAMICS,
            Kind::Tightness => TIGHTNESS,
            Kind::Optimize => OPTIMIZE,
            Kind::FiniteSum => FINITE_SUM,
            Kind::Rl => RL,
            Kind::Verify => VERIFY,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
enum Ty {
    Float,
    Int,
    Text,
    Choice(&'static [&'static str]),
    /// a float or the literal `auto`
    FloatAuto,
    IntAuto,
}

/// One key of a kind's schema; `default: None` marks a required key.
struct Spec {
    key: &'static str,
    ty: Ty,
    default: Option<&'static str>,
}

const fn req(key: &'static str, ty: Ty) -> Spec {
    Spec { key, ty, default: None }
}

const fn opt(key: &'static str, ty: Ty, default: &'static str) -> Spec {
    Spec { key, ty, default: Some(default) }
}

const FUNCTIONS: &[&str] = &["cosh", "cosh_sin", "quadratic", "power_abs", "separable_cosh"];

const DYNAMICS: &[Spec] = &[
    opt("phi", Ty::Choice(&["power", "min_lin_sqrt", "sqrt_t_log"]), "power"),
    opt("h", Ty::Choice(&["power", "zero", "log1p"]), "power"),
    opt("alpha", Ty::Float, "1"),
    opt("beta", Ty::Float, "1"),
    opt("mu", Ty::Float, "1"),
    opt("a", Ty::Float, "1"),
    opt("d", Ty::Float, "1"),
    opt("tau", Ty::Float, "0"),
    opt("delta0", Ty::Float, "1"),
    req("K", Ty::Int),
    opt("c0", Ty::Float, "0.5"),
    opt("zeta", Ty::FloatAuto, "auto"),
    opt("inner", Ty::IntAuto, "auto"),
    opt("inner_cap", Ty::Int, "10000"),
    opt("predicted", Ty::FloatAuto, "auto"),
    opt("fit_axis", Ty::Choice(&["iter", "cost"]), "iter"),
    opt("fit_from", Ty::FloatAuto, "auto"),
    opt("tolerance", Ty::Float, "0.1"),
];

const TIGHTNESS: &[Spec] = &[
    req("epsilon", Ty::Float),
    opt("a_prime", Ty::Float, "1"),
    opt("c_prime", Ty::Float, "1"),
    opt("s", Ty::Float, "2"),
    opt("mode", Ty::Choice(&["greedy", "two_phase", "poly"]), "greedy"),
    opt("c0", Ty::Float, "0.5"),
    opt("zeta", Ty::FloatAuto, "auto"),
    opt("K", Ty::Int, "100000"),
    opt("fit_from", Ty::FloatAuto, "auto"),
    opt("tolerance", Ty::Float, "0.05"),
];

const OPTIMIZE: &[Spec] = &[
    req("function", Ty::Choice(FUNCTIONS)),
    req("method", Ty::Choice(&["gd", "sgd", "pager"])),
    opt("dim", Ty::Int, "1"),
    opt("q", Ty::Float, "3"),
    opt("c", Ty::Float, "1"),
    opt("mu", Ty::Float, "1"),
    opt("box", Ty::Float, "5"),
    opt("noise", Ty::Choice(&["gaussian", "multiplicative"]), "gaussian"),
    opt("sigma2", Ty::Float, "1"),
    opt("s2", Ty::Float, "0.5"),
    opt("x0", Ty::Float, "1"),
    opt("K", Ty::Int, "10000"),
    opt("inner", Ty::Int, "1"),
    opt("c0", Ty::FloatAuto, "auto"),
    opt("zeta", Ty::FloatAuto, "auto"),
    opt("tau", Ty::Float, "0"),
    opt("stages", Ty::Int, "8"),
    opt("mu_hat", Ty::FloatAuto, "auto"),
    opt("scale_b", Ty::Float, "1"),
    opt("scale_b_prime", Ty::Float, "1"),
    opt("scale_t", Ty::Float, "1"),
    opt("target", Ty::Float, "1e-3"),
    opt("predicted", Ty::FloatAuto, "auto"),
    opt("fit_axis", Ty::Choice(&["iter", "cost"]), "iter"),
    opt("fit_from", Ty::FloatAuto, "auto"),
    opt("tolerance", Ty::Float, "0.12"),
    opt("per_seed", Ty::Choice(&["yes", "no"]), "yes"),
];

const FINITE_SUM: &[Spec] = &[
    req("n", Ty::Int),
    opt("dim", Ty::Int, "10"),
    opt("q", Ty::Float, "3"),
    opt("c", Ty::Float, "1"),
    opt("box", Ty::Float, "1"),
    opt("shift_std", Ty::Float, "1"),
    opt("fn_seed", Ty::Int, "42"),
    opt("x0", Ty::Float, "1"),
    opt("stages", Ty::Int, "12"),
    opt("gd_iters", Ty::Int, "100000"),
    opt("sampling", Ty::Choice(&["without", "with"]), "without"),
    opt("target", Ty::Float, "1e-4"),
    opt("ratio", Ty::Float, "0.5"),
    opt("per_seed", Ty::Choice(&["yes", "no"]), "yes"),
];

const RL: &[Spec] = &[
    opt("mdp", Ty::Text, "fixture"),
    opt("algo", Ty::Choice(&["both", "pager", "sgd"]), "both"),
    opt("mu_hat", Ty::Float, "0.1"),
    opt("stages", Ty::Int, "10"),
    opt("target_frac", Ty::Float, "0.01"),
    opt("sgd_zeta", Ty::Float, "0.6666666666666666"),
    opt("sgd_batch", Ty::Int, "1"),
    opt("sgd_iters", Ty::Int, "2000000"),
    opt("const_samples", Ty::Int, "20000"),
    opt("const_pairs", Ty::Int, "8"),
    opt("const_radius", Ty::Float, "0.5"),
    opt("const_seed", Ty::Int, "1"),
];

const VERIFY: &[Spec] = &[
    req("function", Ty::Choice(&["cosh", "cosh_sin", "quadratic", "power_abs", "separable_cosh", "finite_sum"])),
    opt("dim", Ty::Int, "3"),
    opt("q", Ty::Float, "3"),
    opt("c", Ty::Float, "1"),
    opt("mu", Ty::Float, "1"),
    opt("box", Ty::Float, "3"),
    opt("n", Ty::Int, "64"),
    opt("sigma2", Ty::Float, "1"),
    opt("points", Ty::Int, "1000"),
    opt("draws", Ty::Int, "10000"),
];

/// A resolved parameter value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Val {
    Float(f64),
    Int(u64),
    Text(String),
    Auto,
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Float(v) => write!(f, "{v}"),
            Val::Int(v) => write!(f, "{v}"),
            Val::Text(s) => f.write_str(s),
            Val::Auto => f.write_str("auto"),
        }
    }
}

fn parse_val(ty: Ty, raw: &str) -> std::result::Result<Val, String> {
    let float = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
    match ty {
        Ty::Float => float(raw).map(Val::Float).ok_or_else(|| format!("expects a number, got `{raw}`")),
        Ty::Int => raw.parse::<u64>().map(Val::Int).or_else(|_| {
            // allow 1e5-style integers
            match float(raw) {
                Some(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) => Ok(Val::Int(v as u64)),
                _ => Err(format!("expects a nonnegative integer, got `{raw}`")),
            }
        }),
        Ty::Text => Ok(Val::Text(raw.to_string())),
        Ty::Choice(opts) => {
            if opts.contains(&raw) {
                Ok(Val::Text(raw.to_string()))
            } else {
                Err(format!("expects one of {}, got `{raw}`", opts.join("|")))
            }
        }
        Ty::FloatAuto if raw == "auto" => Ok(Val::Auto),
        Ty::FloatAuto => parse_val(Ty::Float, raw).map_err(|e| e.replace("a number", "a number or `auto`")),
        Ty::IntAuto if raw == "auto" => Ok(Val::Auto),
        Ty::IntAuto => parse_val(Ty::Int, raw).map_err(|e| e.replace("integer", "integer or `auto`")),
    }
}

/// One fully resolved parameter set of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub kind: Kind,
    pub values: BTreeMap<String, Val>,
}

impl Point {
    /// Schema defaults; required keys are left unset.
    pub fn defaults(kind: Kind) -> Self {
        let values = kind
            .schema()
            .iter()
            .filter_map(|s| s.default.map(|d| (s.key.to_string(), parse_val(s.ty, d).expect("valid default"))))
            .collect();
        Point { kind, values }
    }

    /// Sets `key` from its text form, checking it against the schema.
    pub fn set(mut self, key: &str, raw: &str) -> Result<Self> {
        let spec = find_spec(self.kind, key)?;
        let v = parse_val(spec.ty, raw).map_err(|e| anyhow!("key `{key}` {e}"))?;
        check_domain(key, &v)?;
        self.values.insert(key.to_string(), v);
        Ok(self)
    }

    fn get(&self, key: &str) -> Result<&Val> {
        self.values.get(key).ok_or_else(|| anyhow!("missing required key `{key}` for kind {}", self.kind))
    }

    pub fn f(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Val::Float(v) => Ok(*v),
            Val::Int(v) => Ok(*v as f64),
            other => bail!("key `{key}` is not numeric: {other}"),
        }
    }

    pub fn u(&self, key: &str) -> Result<u64> {
        match self.get(key)? {
            Val::Int(v) => Ok(*v),
            other => bail!("key `{key}` is not an integer: {other}"),
        }
    }

    /// Numeric value, or `None` for `auto`.
    pub fn auto(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key)? {
            Val::Auto => Ok(None),
            _ => self.f(key).map(Some),
        }
    }

    pub fn s(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            Val::Text(s) => Ok(s),
            other => bail!("key `{key}` is not text: {other}"),
        }
    }

    /// Fails when a required key is still unset.
    pub fn validate(&self) -> Result<()> {
        for s in self.kind.schema() {
            if s.default.is_none() {
                self.get(s.key)?;
            }
        }
        Ok(())
    }

    /// `key = value` lines in key order.
    pub fn echo(&self) -> String {
        let mut s = format!("[{}]\n", self.kind);
        for (k, v) in &self.values {
            s += &format!("{k} = {v}\n");
        }
        s
    }
}

fn check_domain(key: &str, v: &Val) -> Result<()> {
    let Val::Float(x) = *v else { return Ok(()) };
    match key {
        "alpha" if !(1.0..=2.0).contains(&x) => {
            bail!("alpha = {x} is outside the α-PŁ range [1, 2] required by the PŁ-type assumption")
        }
        "beta" if !(x > 0.0 && x <= 1.0) => bail!("beta = {x} must lie in (0, 1]"),
        "epsilon" if !(0.0..1.0).contains(&x) => bail!("epsilon = {x} must lie in [0, 1)"),
        "mu" | "mu_hat" | "c" | "box" | "c0" | "a_prime" | "c_prime" if x <= 0.0 => {
            bail!("{key} = {x} must be positive")
        }
        "sigma2" | "s2" | "a" | "d" | "tau" | "tolerance" if x < 0.0 => bail!("{key} = {x} must be nonnegative"),
        _ => Ok(()),
    }
}

fn find_spec(kind: Kind, key: &str) -> Result<&'static Spec> {
    kind.schema()
        .iter()
        .find(|s| s.key == key)
        .ok_or_else(|| anyhow!("unknown key `{key}` for kind {kind}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// cross-product of all swept keys, in file order of the swept keys
    pub points: Vec<Point>,
    /// keys given with more than one value
    pub swept: Vec<String>,
    pub seeds: Vec<u64>,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn single(point: Point, seeds: Vec<u64>) -> Self {
        ExperimentConfig { kind: point.kind, points: vec![point], swept: vec![], seeds, output_path: None }
    }

    /// Seeds present after CLI overrides; stochastic kinds need at least one.
    pub fn check_seeds(&self) -> Result<()> {
        if self.kind.is_stochastic() && self.seeds.is_empty() {
            bail!("kind {} needs a non-empty `seeds` list (or --seed)", self.kind);
        }
        Ok(())
    }

    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.points.iter().enumerate() {
            s += &format!("# point {i}\n{}", p.echo());
        }
        s += &format!("seeds = {}\n", self.seeds.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "));
        s
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_str(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut kind: Option<Kind> = None;
    let mut entries: Vec<(usize, String, Vec<String>)> = Vec::new();
    let mut seeds = Vec::new();
    let mut output_path = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| anyhow!("line {line_no}: unterminated section header"))?.trim();
            if kind.is_some() {
                bail!("line {line_no}: a config file holds one experiment; second section `[{name}]`");
            }
            kind = Some(Kind::parse(name).ok_or_else(|| {
                let names: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
                anyhow!("line {line_no}: unknown experiment kind `{name}` (expected one of {})", names.join("|"))
            })?);
            continue;
        }
        let k = kind.ok_or_else(|| anyhow!("line {line_no}: key before any [kind] section header"))?;
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {line_no}: expected `key = value`"))?;
        let key = key.trim();
        let items: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
        if items.iter().any(|v| v.is_empty()) {
            bail!("line {line_no}: key `{key}` has an empty value");
        }
        let dup = entries.iter().any(|(_, e, _)| e == key)
            || (key == "seeds" && !seeds.is_empty())
            || (key == "output_path" && output_path.is_some());
        if dup {
            bail!("line {line_no}: key `{key}` given twice");
        }
        match key {
            "seeds" => {
                for v in &items {
                    seeds.push(v.parse::<u64>().map_err(|_| {
                        anyhow!("line {line_no}: key `seeds` expects 64-bit unsigned integers, got `{v}`")
                    })?);
                }
            }
            "output_path" => {
                if items.len() != 1 {
                    bail!("line {line_no}: key `output_path` takes a single value");
                }
                output_path = Some(PathBuf::from(&items[0]));
            }
            _ => {
                let spec = find_spec(k, key).map_err(|e| anyhow!("line {line_no}: {e}"))?;
                for v in &items {
                    let val = parse_val(spec.ty, v).map_err(|e| anyhow!("line {line_no}: key `{key}` {e}"))?;
                    check_domain(key, &val).map_err(|e| anyhow!("line {line_no}: {e}"))?;
                }
                entries.push((line_no, key.to_string(), items));
            }
        }
    }
    let kind = kind.ok_or_else(|| anyhow!("config has no [kind] section header"))?;
    let mut points = vec![Point::defaults(kind)];
    let mut swept = Vec::new();
    for (line_no, key, items) in &entries {
        if items.len() > 1 {
            swept.push(key.clone());
        }
        let mut next = Vec::with_capacity(points.len() * items.len());
        for p in &points {
            for v in items {
                next.push(p.clone().set(key, v).map_err(|e| anyhow!("line {line_no}: {e}"))?);
            }
        }
        points = next;
    }
    for p in &points {
        p.validate()?;
    }
    Ok(ExperimentConfig { kind, points, swept, seeds, output_path })
}
