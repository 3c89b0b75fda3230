//! Run configuration: one JSON document plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diagnostics::{PsiMethod, MIN_CF_REPLICATES};
use crate::func::FnDesc;
use crate::levy::{LevyMeasure, LevyTriplet};
use crate::noise::{SmallJumpPolicy, DEFAULT_EPS};
use crate::spectral::{Cutoff, HyperBox, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TripletConfig {
    pub b: f64,
    pub sigma: f64,
    pub measure: LevyMeasure,
}

impl Default for TripletConfig {
    fn default() -> Self {
        Self {
            b: 0.0,
            sigma: 0.0,
            measure: LevyMeasure::AlphaStable { alpha: 1.5 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    #[default]
    Spectral,
    LaplacianGreenBound,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckBlock {
    /// Defaults to the Green kernel of the operator with its pole at the box centre.
    pub function: Option<FnDesc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveBlock {
    pub grid_level: u32,
}

impl Default for SolveBlock {
    fn default() -> Self {
        Self { grid_level: 6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfBlock {
    pub u_grid: Vec<f64>,
    pub m: usize,
    /// Defaults to the indicator of the whole box.
    pub function: Option<FnDesc>,
    pub psi: PsiMethod,
}

impl Default for CfBlock {
    fn default() -> Self {
        Self {
            u_grid: vec![0.5, 1.0, 2.0],
            m: 100_000,
            function: None,
            psi: PsiMethod::ClosedForm,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsometryBlock {
    pub m: usize,
    /// Lower edge of the band `eps < |z| ≤ 1`.
    pub eps: f64,
    pub function: Option<FnDesc>,
}

impl Default for IsometryBlock {
    fn default() -> Self {
        Self {
            m: 100_000,
            eps: 0.1,
            function: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakBlock {
    /// Defaults to `e_(3, 1, …, 1)`.
    pub function: Option<FnDesc>,
    pub realizations: usize,
}

impl Default for WeakBlock {
    fn default() -> Self {
        Self {
            function: None,
            realizations: 20,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralBoundBlock {
    pub t_list: Option<Vec<f64>>,
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevBlock {
    /// Defaults to `2γ − d/2 ∓ 0.1`.
    pub r_list: Option<Vec<f64>>,
    pub k_list: Vec<usize>,
    pub replicates: usize,
    pub surrogate: bool,
}

impl Default for SobolevBlock {
    fn default() -> Self {
        Self {
            r_list: None,
            k_list: (10..=16).map(|e| 1usize << e).collect(),
            replicates: 50,
            surrogate: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityBlock {
    pub grid_levels: Vec<u32>,
    pub replicates: usize,
}

impl Default for ContinuityBlock {
    fn default() -> Self {
        Self {
            grid_levels: vec![3, 4, 5, 6],
            replicates: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenOracleBlock {
    /// Interior points per axis; pairs on the diagonal are skipped.
    pub grid: usize,
    pub tolerance: f64,
}

impl Default for GreenOracleBlock {
    fn default() -> Self {
        Self {
            grid: 20,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "box")]
    pub bx: Vec<(f64, f64)>,
    pub triplet: TripletConfig,
    pub gamma: f64,
    pub operator: OperatorKind,
    pub eps: f64,
    pub small_jump_policy: SmallJumpPolicy,
    pub cutoff: Cutoff,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(rename = "override")]
    pub allow_nonexistent: bool,
    pub check: CheckBlock,
    pub solve: SolveBlock,
    pub cf: CfBlock,
    pub isometry: IsometryBlock,
    pub weak: WeakBlock,
    pub spectral_bound: SpectralBoundBlock,
    pub sobolev: SobolevBlock,
    pub continuity: ContinuityBlock,
    pub green_oracle: GreenOracleBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            bx: vec![(0.0, 1.0)],
            triplet: TripletConfig::default(),
            gamma: 1.0,
            operator: OperatorKind::Spectral,
            eps: DEFAULT_EPS,
            small_jump_policy: SmallJumpPolicy::Gaussianize,
            cutoff: Cutoff::Count(1000),
            seed: None,
            out: None,
            allow_nonexistent: false,
            check: CheckBlock::default(),
            solve: SolveBlock::default(),
            cf: CfBlock::default(),
            isometry: IsometryBlock::default(),
            weak: WeakBlock::default(),
            spectral_bound: SpectralBoundBlock::default(),
            sobolev: SobolevBlock::default(),
            continuity: ContinuityBlock::default(),
            green_oracle: GreenOracleBlock::default(),
        }
    }
}

/// A configuration problem, anchored to a source line when one is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.source, l, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

/// Line of the last component of a dotted key path in JSON text.
fn locate(text: &str, path: &str) -> Option<usize> {
    let mut offset = 0;
    for part in path.split('.') {
        let needle = format!("\"{part}\"");
        let mut from = offset;
        loop {
            let pos = from + text[from..].find(&needle)?;
            let after = text[pos + needle.len()..].trim_start();
            if after.starts_with(':') {
                offset = pos;
                break;
            }
            from = pos + needle.len();
        }
    }
    Some(text[..offset].matches('\n').count() + 1)
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn parse_measure(v: &str) -> Option<Value> {
    let (kind, args) = v.split_once(':').unwrap_or((v, ""));
    let nums: Vec<f64> = if args.is_empty() { Vec::new() } else { parse_list(args)? };
    match (kind, nums.as_slice()) {
        ("alpha" | "stable", [a]) => Some(json!({"type": "alpha-stable", "alpha": a})),
        ("two-point", [r, a]) => Some(json!({"type": "two-point", "rate": r, "magnitude": a})),
        ("vg" | "variance-gamma", [c, m]) => Some(json!({"type": "variance-gamma", "c": c, "m": m})),
        ("null", []) => Some(json!({"type": "null"})),
        _ => None,
    }
}

fn scalar(v: &str) -> Value {
    serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()))
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), String> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| format!("`{}` is not an object", parts[..i].join(".")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| json!({}));
    }
    Ok(())
}

/// Applies one `key=value` override to the JSON form of a configuration.
pub fn apply_set(root: &mut Value, assignment: &str) -> Result<(), String> {
    let (key, v) = assignment
        .split_once('=')
        .ok_or_else(|| "expected key=value".to_string())?;
    let (key, v) = (key.trim(), v.trim());
    let bad = |what: &str| format!("cannot parse `{v}` as {what}");
    let list_f = |what: &str| parse_list::<f64>(v).map(|l| json!(l)).ok_or_else(|| bad(what));
    let list_u = |what: &str| parse_list::<u64>(v).map(|l| json!(l)).ok_or_else(|| bad(what));
    match key {
        "d" => {
            let d: usize = v.parse().map_err(|_| bad("a dimension"))?;
            set_path(root, "box", json!(vec![(0.0, 1.0); d]))
        }
        "box" => {
            let mut iv = Vec::new();
            for seg in v.split(',') {
                let (a, b) = seg.split_once(':').ok_or_else(|| bad("intervals a:b,c:d"))?;
                let a: f64 = a.trim().parse().map_err(|_| bad("intervals a:b,c:d"))?;
                let b: f64 = b.trim().parse().map_err(|_| bad("intervals a:b,c:d"))?;
                iv.push((a, b));
            }
            set_path(root, "box", json!(iv))
        }
        "measure" => set_path(
            root,
            "triplet.measure",
            parse_measure(v).ok_or_else(|| bad("alpha:A, two-point:R,A, vg:C,M or null"))?,
        ),
        "b" | "sigma" => set_path(root, &format!("triplet.{key}"), scalar(v)),
        "K" => set_path(root, "cutoff", json!({ "count": scalar(v) })),
        "lambda_max" => set_path(root, "cutoff", json!({ "threshold": scalar(v) })),
        "policy" => set_path(root, "small_jump_policy", scalar_string(v)),
        "M" => {
            set_path(root, "cf.m", scalar(v))?;
            set_path(root, "isometry.m", scalar(v))
        }
        "u_grid" => set_path(root, "cf.u_grid", list_f("a list of reals")?),
        "psi" => set_path(root, "cf.psi", scalar_string(v)),
        "r_list" => set_path(root, "sobolev.r_list", list_f("a list of reals")?),
        "K_list" => set_path(root, "sobolev.k_list", list_u("a list of counts")?),
        "surrogate" => set_path(root, "sobolev.surrogate", scalar(v)),
        "grid_levels" => set_path(root, "continuity.grid_levels", list_u("a list of levels")?),
        "replicates" => {
            set_path(root, "sobolev.replicates", scalar(v))?;
            set_path(root, "continuity.replicates", scalar(v))
        }
        "realizations" => set_path(root, "weak.realizations", scalar(v)),
        "band_eps" => set_path(root, "isometry.eps", scalar(v)),
        "t_list" => set_path(root, "spectral_bound.t_list", list_f("a list of reals")?),
        "operator" => set_path(root, "operator", scalar_string(v)),
        _ => set_path(root, key, scalar(v)),
    }
}

fn scalar_string(v: &str) -> Value {
    Value::String(v.to_string())
}

/// Parse the configuration file (if any), apply overrides and validate.
pub fn load(path: Option<&Path>, sets: &[String]) -> Result<RunConfig, ConfigError> {
    let (text, source) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError {
                source: p.display().to_string(),
                line: None,
                message: e.to_string(),
            })?;
            (text, p.display().to_string())
        }
        None => (String::new(), "<defaults>".to_string()),
    };
    let base: RunConfig = if text.trim().is_empty() {
        RunConfig::default()
    } else {
        serde_json::from_str(&text).map_err(|e| ConfigError {
            source: source.clone(),
            line: Some(e.line()),
            message: strip_position(&e.to_string()),
        })?
    };
    let mut value = serde_json::to_value(&base).expect("configuration serializes");
    for s in sets {
        let fail = |message: String| ConfigError {
            source: format!("--set {s}"),
            line: None,
            message,
        };
        apply_set(&mut value, s).map_err(fail)?;
        serde_json::from_value::<RunConfig>(value.clone()).map_err(|e| fail(e.to_string()))?;
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| ConfigError {
        source: "--set".into(),
        line: None,
        message: e.to_string(),
    })?;
    cfg.validate().map_err(|(key, message)| ConfigError {
        line: locate(&text, key),
        source: if locate(&text, key).is_some() { source.clone() } else { format!("{source} ({key})") },
        message,
    })?;
    Ok(cfg)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

type Invalid = (&'static str, String);

fn need(ok: bool, key: &'static str, msg: impl Into<String>) -> Result<(), Invalid> {
    if ok {
        Ok(())
    } else {
        Err((key, msg.into()))
    }
}

impl RunConfig {
    pub fn hyperbox(&self) -> crate::Result<HyperBox> {
        HyperBox::new(self.bx.clone())
    }

    pub fn triplet(&self) -> crate::Result<LevyTriplet> {
        LevyTriplet::new(self.triplet.b, self.triplet.sigma, self.triplet.measure)
    }

    pub fn dim(&self) -> usize {
        self.bx.len()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Module preconditions that can be checked without computing anything.
    pub fn validate(&self) -> Result<(), Invalid> {
        let bx = self.hyperbox().map_err(|e| ("box", e.to_string()))?;
        need(self.dim() <= MAX_DIM, "box", format!("at most {MAX_DIM} dimensions are supported"))?;
        self.triplet().map_err(|e| ("triplet", e.to_string()))?;
        need(self.gamma.is_finite() && self.gamma > 0.0, "gamma", format!("gamma must be > 0, got {}", self.gamma))?;
        need(self.eps > 0.0 && self.eps <= 1.0, "eps", format!("eps must lie in (0, 1], got {}", self.eps))?;
        match self.cutoff {
            Cutoff::Count(k) => need(k >= 1, "cutoff", "eigen count must be >= 1")?,
            Cutoff::Threshold(t) => need(
                t >= bx.lambda_min(),
                "cutoff",
                format!("threshold {t} is below the first eigenvalue {}", bx.lambda_min()),
            )?,
        }
        need(self.solve.grid_level <= 12, "solve.grid_level", "grid level must be <= 12")?;
        need(
            self.cf.m >= MIN_CF_REPLICATES,
            "cf.m",
            format!("M must be >= {MIN_CF_REPLICATES}, got {}", self.cf.m),
        )?;
        need(
            !self.cf.u_grid.is_empty() && self.cf.u_grid.iter().all(|u| u.is_finite()),
            "cf.u_grid",
            "u grid must be a non-empty list of finite reals",
        )?;
        need(self.isometry.m >= 2, "isometry.m", "M must be >= 2")?;
        need(
            self.isometry.eps > 0.0 && self.isometry.eps <= 1.0,
            "isometry.eps",
            "band edge must lie in (0, 1]",
        )?;
        need(self.weak.realizations >= 1, "weak.realizations", "need at least one realization")?;
        for (key, f) in [
            ("check.function", &self.check.function),
            ("cf.function", &self.cf.function),
            ("isometry.function", &self.isometry.function),
            ("weak.function", &self.weak.function),
        ] {
            if let Some(f) = f {
                f.validate(&bx).map_err(|e| (key, e.to_string()))?;
            }
        }
        if let Some(t) = &self.spectral_bound.t_list {
            need(
                !t.is_empty() && t[0] > 0.0 && t.windows(2).all(|w| w[1] > w[0]),
                "spectral_bound.t_list",
                "t list must be positive and strictly increasing",
            )?;
        }
        if let Some(ps) = &self.spectral_bound.points {
            for p in ps {
                bx.check_point(p).map_err(|e| ("spectral_bound.points", e.to_string()))?;
            }
        }
        if let Some(r) = &self.sobolev.r_list {
            need(!r.is_empty() && r.iter().all(|v| v.is_finite()), "sobolev.r_list", "r list must be non-empty")?;
        }
        let k = &self.sobolev.k_list;
        need(
            k.len() >= 2 && k[0] > 0 && k.windows(2).all(|w| w[1] > w[0]),
            "sobolev.k_list",
            "K list must hold at least two strictly increasing positive counts",
        )?;
        need(self.sobolev.replicates >= 1, "sobolev.replicates", "need at least one replicate")?;
        let g = &self.continuity.grid_levels;
        need(
            g.len() >= 2 && g.windows(2).all(|w| w[1] > w[0]) && g.last().is_some_and(|&l| l <= 12),
            "continuity.grid_levels",
            "grid levels must be at least two strictly increasing entries up to 12",
        )?;
        need(self.continuity.replicates >= 1, "continuity.replicates", "need at least one replicate")?;
        need(self.green_oracle.grid >= 2, "green_oracle.grid", "grid must hold at least two points")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthands() {
        let sets: Vec<String> = ["d=3", "measure=two-point:2,0.5", "K=77", "gamma=1.25", "M=5000", "cf.psi=quadrature"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let cfg = load(None, &sets).unwrap();
        assert_eq!(cfg.bx, vec![(0.0, 1.0); 3]);
        assert_eq!(cfg.triplet.measure, LevyMeasure::TwoPoint { rate: 2.0, magnitude: 0.5 });
        assert_eq!(cfg.cutoff, Cutoff::Count(77));
        assert_eq!(cfg.gamma, 1.25);
        assert_eq!((cfg.cf.m, cfg.isometry.m), (5000, 5000));
        assert_eq!(cfg.cf.psi, PsiMethod::Quadrature);
    }

    #[test]
    fn unknown_key_is_line_anchored() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, "{\n  \"gamma\": 1.0,\n  \"gama\": 2\n}\n").unwrap();
        let e = load(Some(&p), &[]).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("gama"), "{e}");
    }

    #[test]
    fn invalid_value_is_line_anchored() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, "{\n  \"box\": [[0, 1]],\n  \"cf\": {\n    \"m\": 10\n  }\n}\n").unwrap();
        let e = load(Some(&p), &[]).unwrap_err();
        assert_eq!(e.line, Some(4), "{e}");
    }

    #[test]
    fn bad_set_is_reported() {
        assert!(load(None, &["gamma=abc".to_string()]).is_err());
        assert!(load(None, &["measure=alpha".to_string()]).is_err());
        assert!(load(None, &["nonsense=1".to_string()]).is_err());
        assert!(load(None, &["gamma=-1".to_string()]).is_err());
    }

    #[test]
    fn locate_nested() {
        let t = "{\n \"m\": 1,\n \"cf\": {\n  \"u\": 2,\n  \"m\": 3\n }\n}";
        assert_eq!(locate(t, "cf.m"), Some(5));
        assert_eq!(locate(t, "m"), Some(2));
        assert_eq!(locate(t, "zz"), None);
    }
}
