//! Verification reports: characteristic functional, isometry, weak identity,
//! Sobolev sweeps, continuity probes and pointwise spectral bounds.
//!
//! Monte Carlo replicates draw from `replicate_seed(seed, m)` and are reduced
//! in replicate order, so a report depends only on its inputs and seed.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::func::{tensor_rule, FnDesc};
use crate::integrability::{existence_verdict, rr_integrability};
use crate::levy::{characteristic_exponent, characteristic_exponent_quadrature, LevyTriplet};
use crate::noise::{NoiseRealization, PreparedPairing, SmallJumpPolicy, DEFAULT_EPS};
use crate::parallel::{self, Exec};
use crate::rng::replicate_seed;
use crate::solver;
use crate::spectral::{eigenfunction_unchecked, enumerate_eigen, Cutoff, EigenSystem, HyperBox, THRESHOLD_SLACK};

/// Relative increment below which a trajectory counts as converged.
pub const CONVERGENT_BAND: f64 = 0.01;
/// Log-log slope at or above which a trajectory counts as diverging.
pub const DIVERGENT_BAND: f64 = 0.05;
pub const ISOMETRY_THRESHOLD: f64 = 0.05;
pub const WEAK_TOLERANCE: f64 = 1e-6;
pub const SPECTRAL_SLOPE_BAND: f64 = 0.1;
/// Fraction of replicates a continuity classification needs.
pub const CONTINUITY_FRACTION: f64 = 0.8;
pub const MIN_CF_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Direction {
    fn holds(self, statistic: f64, threshold: f64) -> bool {
        match self {
            Direction::AtMost => statistic <= threshold,
            Direction::AtLeast => statistic >= threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Direction::AtMost => "<=",
            Direction::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub status: Status,
    pub replicates: usize,
    pub seed: Option<u64>,
    pub details: BTreeMap<String, Value>,
}

impl TestReport {
    /// `pass` and `status` follow from the comparison in `direction`.
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64, direction: Direction) -> Self {
        let pass = direction.holds(statistic, threshold);
        let mut details = BTreeMap::new();
        details.insert("direction".into(), json!(direction.symbol()));
        Self {
            name: name.into(),
            statistic,
            threshold,
            pass,
            status: if pass { Status::Pass } else { Status::Fail },
            replicates: 0,
            seed: None,
            details,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::new(name, 0.0, 0.0, Direction::AtMost);
        r.pass = false;
        r.status = Status::Skipped;
        r.details.insert("reason".into(), json!(reason.into()));
        r
    }

    pub fn with_replicates(mut self, replicates: usize, seed: u64) -> Self {
        self.replicates = replicates;
        self.seed = Some(seed);
        self
    }

    pub fn detail(mut self, key: &str, value: Value) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    /// Marks a report whose outcome fell between the bands.
    fn inconclusive(mut self) -> Self {
        self.pass = false;
        self.status = Status::Inconclusive;
        self
    }

    /// Whether the report counts against a run: failed and not flagged
    /// inconclusive or skipped.
    pub fn is_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

/// How `Ψ` is evaluated for the target characteristic functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiMethod {
    #[default]
    ClosedForm,
    Quadrature,
}

/// Sampling settings shared by the Monte Carlo diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub eps: f64,
    pub policy: SmallJumpPolicy,
    /// Modes carrying the Gaussian and small-jump coefficients of a pairing.
    pub cutoff: Cutoff,
    pub exec: Exec,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            policy: SmallJumpPolicy::Gaussianize,
            cutoff: Cutoff::Count(1000),
            exec: Exec::Parallel,
        }
    }
}

fn psi(triplet: &LevyTriplet, u: f64, method: PsiMethod) -> Result<Complex64> {
    match method {
        PsiMethod::ClosedForm => characteristic_exponent(triplet, u),
        PsiMethod::Quadrature => characteristic_exponent_quadrature(triplet, u),
    }
}

/// `∫_D Ψ(u f(x)) dx`.
pub fn integrated_exponent(triplet: &LevyTriplet, bx: &HyperBox, f: &FnDesc, u: f64, method: PsiMethod) -> Result<Complex64> {
    match f {
        FnDesc::Zero => Ok(Complex64::new(0.0, 0.0)),
        FnDesc::Constant { value } => Ok(psi(triplet, u * value, method)? * bx.volume()),
        FnDesc::Indicator { .. } => Ok(psi(triplet, u, method)? * f.integral(bx)?),
        _ => {
            let im = triplet.b * u * f.integral(bx)?;
            let t = *triplet;
            let re_psi = move |v: f64| -psi(&t, u * v, method).map(|c| c.re).unwrap_or(f64::NAN);
            let re = -f.integrate_composed(bx, &re_psi, 1e-8)?;
            Ok(Complex64::new(re, im))
        }
    }
}

/// Sorted copy; median of an even count is the mean of the middle pair.
fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `max_u |E e^{iu⟨ξ̇,f⟩} − exp(∫Ψ(u f))|` over `m` replicates, against `4/√m`.
pub fn empirical_cf_test(
    triplet: &LevyTriplet,
    bx: &HyperBox,
    f: &FnDesc,
    u_grid: &[f64],
    m: usize,
    seed: u64,
    psi_method: PsiMethod,
    opts: McOptions,
) -> Result<TestReport> {
    if m < MIN_CF_REPLICATES {
        return Err(Error::param(format!(
            "characteristic functional test needs M >= {MIN_CF_REPLICATES}, got {m}"
        )));
    }
    if u_grid.is_empty() {
        return Err(Error::param("u grid is empty"));
    }
    let integrability = rr_integrability(f, triplet, bx)?;
    if !integrability.verdict {
        return Err(Error::param(format!("{} is not integrable against the noise", f.kind())));
    }
    let system = enumerate_eigen(bx, opts.cutoff)?;
    let mut pairing = PreparedPairing::new(f, &system)?;
    if triplet.b != 0.0 {
        pairing = pairing.with_cached_integral()?;
    }
    let samples = parallel::try_map_indexed(opts.exec, m, |i| {
        let r = NoiseRealization::sample(triplet, bx, opts.eps, opts.policy, replicate_seed(seed, i as u64))?;
        pairing.apply(&r)
    })?;
    let mut statistic = 0.0f64;
    let mut rows = Vec::new();
    for &u in u_grid {
        let target = integrated_exponent(triplet, bx, f, u, psi_method)?.exp();
        let (mut c, mut s) = (0.0, 0.0);
        for &x in &samples {
            c += (u * x).cos();
            s += (u * x).sin();
        }
        let emp = Complex64::new(c / m as f64, s / m as f64);
        let err = (emp - target).norm();
        statistic = statistic.max(err);
        rows.push(json!({
            "u": u,
            "empirical": [emp.re, emp.im],
            "target": [target.re, target.im],
            "error": err,
        }));
    }
    Ok(TestReport::new("cf", statistic, 4.0 / (m as f64).sqrt(), Direction::AtMost)
        .with_replicates(m, seed)
        .detail("function", json!(f.kind()))
        .detail("psi", json!(psi_method))
        .detail("eps", json!(opts.eps))
        .detail("per_u", Value::Array(rows)))
}

/// Variance of `∫ f z dJ` over jumps `eps < |z| ≤ 1` against
/// `∫f² · ∫_{eps<|z|≤1} z² ν(dz)`.
pub fn isometry_test(
    triplet: &LevyTriplet,
    bx: &HyperBox,
    eps: f64,
    f: &FnDesc,
    m: usize,
    seed: u64,
    exec: Exec,
) -> Result<TestReport> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param(format!("band lower edge must lie in (0, 1], got {eps}")));
    }
    if m < 2 {
        return Err(Error::param("isometry test needs at least two replicates"));
    }
    let measure = triplet.measure;
    let exact = f.abs_power_integral(bx, 2.0)? * measure.band_variance(eps, 1.0);
    if exact == 0.0 {
        return Ok(TestReport::skipped("isometry", "exact band variance is zero").with_replicates(m, seed));
    }
    if !exact.is_finite() {
        return Err(Error::param("band variance is not finite"));
    }
    f.eval(bx, &bx.center())?;
    let jumps = LevyTriplet::pure_jump(measure)?;
    let samples = parallel::try_map_indexed(exec, m, |i| {
        let r = NoiseRealization::sample(&jumps, bx, eps, SmallJumpPolicy::Drop, replicate_seed(seed, i as u64))?;
        let band = r.atoms().with_sizes_at_most(1.0);
        let mut x = 0.0;
        for (y, z) in band.iter() {
            x += f.eval_unchecked(bx, y) * z;
        }
        Ok::<f64, Error>(x)
    })?;
    let mean = samples.iter().sum::<f64>() / m as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
    let statistic = (var / exact - 1.0).abs();
    Ok(TestReport::new("isometry", statistic, ISOMETRY_THRESHOLD, Direction::AtMost)
        .with_replicates(m, seed)
        .detail("empirical_variance", json!(var))
        .detail("exact_variance", json!(exact))
        .detail("eps", json!(eps)))
}

fn tensor_points(bx: &HyperBox, nodes: &[f64]) -> Vec<Vec<f64>> {
    nodes.chunks(bx.dim()).map(|c| c.to_vec()).collect()
}

/// `|∫ u φ − ⟨ξ̇, G_γ ⊛ φ⟩|` for the mild solution `u` of `realization`.
pub fn weak_identity_test(
    realization: &NoiseRealization,
    phi: &FnDesc,
    gamma: f64,
    system: &Arc<EigenSystem>,
) -> Result<TestReport> {
    let bx = system.bx();
    let phi = phi.materialize(system)?;
    phi.validate(bx)?;
    let u = solver::solve_mild(realization, gamma, system, true)?;
    let mut kmax: Vec<usize> = system.max_index_per_axis().iter().map(|&k| k as usize).collect();
    let mut widen = |k: &[u32]| {
        for (m, &v) in kmax.iter_mut().zip(k) {
            *m = (*m).max(v as usize);
        }
    };
    match &phi {
        FnDesc::Eigen { k } => widen(k.as_slice()),
        FnDesc::EigenSeries { terms } => terms.iter().for_each(|(k, _)| widen(k.as_slice())),
        _ => {}
    }
    let n: Vec<usize> = kmax.iter().map(|&k| 2 * k + 32).collect();
    let (nodes, weights) = tensor_rule(bx, &n);
    let points = tensor_points(bx, &nodes);
    let values = solver::eval_field(&u, &points)?;
    let mut lhs = 0.0;
    for ((p, w), v) in points.iter().zip(&weights).zip(&values) {
        lhs += w * v * phi.eval_unchecked(bx, p);
    }
    let g = solver::green_convolve(bx, gamma, &phi, system)?;
    let rhs = realization.pair_with_function(&g, system)?;
    let u_norm = u.coeffs().iter().map(|a| a * a).sum::<f64>().sqrt();
    let phi_norm = phi.abs_power_integral(bx, 2.0)?.sqrt();
    let scale = (u_norm * phi_norm).max(1.0);
    Ok(TestReport::new("weak", (lhs - rhs).abs(), WEAK_TOLERANCE * scale, Direction::AtMost)
        .with_replicates(1, realization.seed())
        .detail("quadrature_side", json!(lhs))
        .detail("noise_side", json!(rhs))
        .detail("gamma", json!(gamma))
        .detail("scale", json!(scale))
        .detail("modes", json!(system.len())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Relative increment and log-log slope between the last two points of a
/// partial-sum trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub increment: f64,
    pub slope: f64,
    pub trend: Trend,
}

pub fn classify_trajectory(ks: &[usize], norms: &[f64]) -> Result<TrendFit> {
    let n = norms.len();
    if n < 2 || ks.len() != n {
        return Err(Error::param("trajectory needs at least two (K, norm) points"));
    }
    let (k0, k1) = (ks[n - 2] as f64, ks[n - 1] as f64);
    let (s0, s1) = (norms[n - 2], norms[n - 1]);
    let (increment, slope) = if s0 == 0.0 && s1 == 0.0 {
        (0.0, 0.0)
    } else {
        ((s1 - s0) / s0, (s1 / s0).ln() / (k1 / k0).ln())
    };
    let trend = if increment < CONVERGENT_BAND {
        Trend::Convergent
    } else if slope >= DIVERGENT_BAND {
        Trend::Divergent
    } else {
        Trend::Inconclusive
    };
    Ok(TrendFit { increment, slope, trend })
}

fn check_k_list(ks: &[usize]) -> Result<()> {
    if ks.len() < 2 || ks[0] == 0 || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("K list must hold at least two strictly increasing positive counts"));
    }
    Ok(())
}

/// Report for one `r` given its (median) trajectory and the prediction
/// `r < 2γ − d/2`.
fn sobolev_report(name: &str, r: f64, r_star: f64, ks: &[usize], norms: &[f64]) -> Result<TestReport> {
    let fit = classify_trajectory(ks, norms)?;
    let predicted = if r < r_star { Trend::Convergent } else { Trend::Divergent };
    let report = match predicted {
        Trend::Divergent => TestReport::new(name, fit.slope, DIVERGENT_BAND, Direction::AtLeast),
        _ => TestReport::new(name, fit.increment, CONVERGENT_BAND, Direction::AtMost),
    };
    let verdict = match fit.trend {
        Trend::Convergent => "consistent with u in H_r(D)",
        Trend::Divergent => "consistent with u not in H_r(D)",
        Trend::Inconclusive => "inconclusive",
    };
    let report = report
        .detail("r", json!(r))
        .detail("r_threshold", json!(r_star))
        .detail("predicted", json!(predicted))
        .detail("classification", json!(fit.trend))
        .detail("verdict", json!(verdict))
        .detail("increment", json!(fit.increment))
        .detail("slope", json!(fit.slope))
        .detail("K", json!(ks))
        .detail("norm_sq", json!(norms));
    Ok(match fit.trend {
        Trend::Inconclusive => report.inconclusive(),
        t if t == predicted => report,
        _ => {
            let mut r = report;
            r.pass = false;
            r.status = Status::Fail;
            r
        }
    })
}

/// Settings for [`sobolev_sweep`] and [`continuity_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub eps: f64,
    pub policy: SmallJumpPolicy,
    pub allow_nonexistent: bool,
    pub exec: Exec,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            policy: SmallJumpPolicy::Gaussianize,
            allow_nonexistent: false,
            exec: Exec::Parallel,
        }
    }
}

/// Median over replicates of `Σ_{i<K} λ_i^r a_i²` for each `r` and `K` on
/// the unit cube, one report per `r`.
#[allow(clippy::too_many_arguments)]
pub fn sobolev_sweep(
    d: usize,
    gamma: f64,
    triplet: &LevyTriplet,
    r_list: &[f64],
    k_list: &[usize],
    replicates: usize,
    seed: u64,
    opts: SweepOptions,
) -> Result<Vec<TestReport>> {
    check_k_list(k_list)?;
    if replicates == 0 {
        return Err(Error::param("sweep needs at least one replicate"));
    }
    solver::check_existence(d, gamma, opts.allow_nonexistent)?;
    let bx = HyperBox::unit(d)?;
    let k_max = *k_list.last().expect("checked non-empty");
    let system = Arc::new(enumerate_eigen(&bx, Cutoff::Count(k_max))?);
    let r_star = existence_verdict(d, gamma, triplet).r_max;
    let trajectories = parallel::try_map_indexed(Exec::Sequential, replicates, |i| {
        let r = NoiseRealization::sample(triplet, &bx, opts.eps, opts.policy, replicate_seed(seed, i as u64))?;
        let field = solver::solve_mild_with(&r, gamma, &system, true, opts.exec)?;
        Ok::<_, Error>(
            r_list
                .iter()
                .map(|&rv| solver::sobolev_trajectory(&field, rv, k_list))
                .collect::<Vec<_>>(),
        )
    })?;
    let mut reports = Vec::with_capacity(r_list.len());
    for (j, &r) in r_list.iter().enumerate() {
        let medians: Vec<f64> = (0..k_list.len())
            .map(|ki| median(&trajectories.iter().map(|t| t[j][ki]).collect::<Vec<_>>()))
            .collect();
        let report = sobolev_report(&format!("sobolev r={r}"), r, r_star, k_list, &medians)?
            .with_replicates(replicates, seed)
            .detail("d", json!(d))
            .detail("gamma", json!(gamma));
        reports.push(report);
    }
    Ok(reports)
}

/// Partial sums of `Σ λ_k^{r−2γ}` on the unit cube (the coefficients
/// `a_k = λ_k^{−γ}`), one trajectory per `r`.
pub fn surrogate_trajectories(d: usize, gamma: f64, r_list: &[f64], k_list: &[usize]) -> Result<Vec<Vec<f64>>> {
    check_k_list(k_list)?;
    let bx = HyperBox::unit(d)?;
    let system = enumerate_eigen(&bx, Cutoff::Count(*k_list.last().expect("checked non-empty")))?;
    Ok(r_list
        .iter()
        .map(|&r| {
            let mut out = Vec::with_capacity(k_list.len());
            let mut acc = 0.0;
            let mut i = 0;
            for &k in k_list {
                while i < k.min(system.len()) {
                    acc += system.lambda(i).powf(r - 2.0 * gamma);
                    i += 1;
                }
                out.push(acc);
            }
            out
        })
        .collect())
}

/// Deterministic surrogate sweep: one report per `r`.
pub fn sobolev_surrogate(d: usize, gamma: f64, r_list: &[f64], k_list: &[usize]) -> Result<Vec<TestReport>> {
    let r_star = 2.0 * gamma - d as f64 / 2.0;
    let traj = surrogate_trajectories(d, gamma, r_list, k_list)?;
    r_list
        .iter()
        .zip(&traj)
        .map(|(&r, t)| {
            Ok(sobolev_report(&format!("sobolev-surrogate r={r}"), r, r_star, k_list, t)?
                .detail("d", json!(d))
                .detail("gamma", json!(gamma)))
        })
        .collect()
}

/// Offsets from `r* = 2γ − d/2` probed by [`surrogate_boundary`].
pub const BOUNDARY_OFFSETS: [f64; 6] = [-1.0, -0.5, -0.1, 0.0, 0.1, 0.5];

/// Locates the convergence boundary of the surrogate on the grid
/// `r* + BOUNDARY_OFFSETS`. Passes when the smallest divergent `r` is `r*`
/// itself, nothing below `r*` diverges, and the two lowest points converge.
pub fn surrogate_boundary(d: usize, gamma: f64, k_list: &[usize]) -> Result<TestReport> {
    let r_star = 2.0 * gamma - d as f64 / 2.0;
    let r_list: Vec<f64> = BOUNDARY_OFFSETS.iter().map(|o| r_star + o).collect();
    let traj = surrogate_trajectories(d, gamma, &r_list, k_list)?;
    let fits: Vec<TrendFit> = traj
        .iter()
        .map(|t| classify_trajectory(k_list, t))
        .collect::<Result<_>>()?;
    let first_divergent = fits.iter().position(|f| f.trend == Trend::Divergent);
    let lower_ok = fits[0].trend == Trend::Convergent && fits[1].trend == Trend::Convergent;
    let above_ok = fits[3..].iter().all(|f| f.trend == Trend::Divergent);
    let located = first_divergent.map(|i| r_list[i]).unwrap_or(f64::INFINITY);
    let statistic = (located - r_star).abs();
    let mut report = TestReport::new(format!("sobolev-boundary d={d} gamma={gamma}"), statistic, 0.0, Direction::AtMost)
        .detail("d", json!(d))
        .detail("gamma", json!(gamma))
        .detail("r_threshold", json!(r_star))
        .detail("located", json!(if located.is_finite() { json!(located) } else { Value::Null }))
        .detail("r", json!(r_list))
        .detail("classification", json!(fits.iter().map(|f| f.trend).collect::<Vec<_>>()))
        .detail("increment", json!(fits.iter().map(|f| f.increment).collect::<Vec<_>>()))
        .detail("slope", json!(fits.iter().map(|f| f.slope).collect::<Vec<_>>()));
    if !(lower_ok && above_ok) {
        report.pass = false;
        report.status = Status::Fail;
    }
    Ok(report)
}

/// Grid statistics of one field at one dyadic level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: u32,
    /// Largest `|u(x) − u(x′)|` over grid neighbours along any axis.
    pub max_increment: f64,
    pub sup_norm: f64,
}

fn level_stats(level: u32, shape: &[usize], values: &[f64]) -> LevelStats {
    let d = shape.len();
    let mut strides = vec![1usize; d];
    for ax in (0..d.saturating_sub(1)).rev() {
        strides[ax] = strides[ax + 1] * shape[ax + 1];
    }
    let mut max_increment = 0.0f64;
    let mut sup_norm = 0.0f64;
    for (flat, &v) in values.iter().enumerate() {
        sup_norm = sup_norm.max(v.abs());
        for ax in 0..d {
            if (flat / strides[ax]) % shape[ax] + 1 < shape[ax] {
                max_increment = max_increment.max((values[flat + strides[ax]] - v).abs());
            }
        }
    }
    LevelStats {
        level,
        max_increment,
        sup_norm,
    }
}

/// Dyadic-grid probe of continuity versus blow-up on the unit cube.
///
/// At level `h` the field keeps the modes with `λ ≤ (π 2^h)²` and is sampled
/// on `2^h + 1` points per axis. A replicate supports continuity when the
/// largest grid increment decreases at every refinement (all-zero increments
/// count as decreasing), and supports blow-up when the grid sup-norm grows at
/// every refinement. Continuity is checked first: a continuous field's grid
/// sup-norm also creeps up as finer grids catch its peak.
pub fn continuity_probe(
    d: usize,
    gamma: f64,
    triplet: &LevyTriplet,
    grid_levels: &[u32],
    replicates: usize,
    seed: u64,
    opts: SweepOptions,
) -> Result<TestReport> {
    if grid_levels.len() < 2 || grid_levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid levels must hold at least two strictly increasing entries"));
    }
    if replicates == 0 {
        return Err(Error::param("probe needs at least one replicate"));
    }
    if *grid_levels.last().expect("non-empty") > 12 {
        return Err(Error::param("grid levels above 12 are not supported"));
    }
    solver::check_existence(d, gamma, opts.allow_nonexistent)?;
    let bx = HyperBox::unit(d)?;
    let cut = |h: u32| (std::f64::consts::PI * (1u64 << h) as f64).powi(2);
    let finest = *grid_levels.last().expect("non-empty");
    let system = Arc::new(enumerate_eigen(&bx, Cutoff::Threshold(cut(finest)))?);
    let counts: Vec<usize> = grid_levels
        .iter()
        .map(|&h| {
            let t = cut(h) * (1.0 + THRESHOLD_SLACK);
            system.lambdas().partition_point(|&l| l <= t)
        })
        .collect();
    let per_replicate = parallel::try_map_indexed(Exec::Sequential, replicates, |i| {
        let r = NoiseRealization::sample(triplet, &bx, opts.eps, opts.policy, replicate_seed(seed, i as u64))?;
        let field = solver::solve_mild_with(&r, gamma, &system, true, opts.exec)?;
        grid_levels
            .iter()
            .zip(&counts)
            .map(|(&h, &n)| {
                let axes = solver::dyadic_axes(&bx, h);
                let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
                let values = solver::eval_grid(&field.truncated(n), &axes, opts.exec)?;
                Ok(level_stats(h, &shape, &values))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let n = grid_levels.len();
    let mut decreasing = 0usize;
    let mut growing = 0usize;
    for stats in &per_replicate {
        let dec = stats.windows(2).all(|w| {
            w[1].max_increment < w[0].max_increment || (w[0].max_increment == 0.0 && w[1].max_increment == 0.0)
        });
        if dec {
            decreasing += 1;
        }
        if stats.windows(2).all(|w| w[1].sup_norm > w[0].sup_norm) {
            growing += 1;
        }
    }
    let frac_dec = decreasing as f64 / replicates as f64;
    let frac_grow = growing as f64 / replicates as f64;
    let classification = if frac_dec >= CONTINUITY_FRACTION {
        "continuous-consistent"
    } else if frac_grow >= CONTINUITY_FRACTION {
        "blowup-consistent"
    } else {
        "inconclusive"
    };
    let continuous_predicted = gamma > d as f64 / 2.0;
    let predicted = if continuous_predicted {
        "continuous-consistent"
    } else {
        "blowup-consistent"
    };
    let statistic = if continuous_predicted { frac_dec } else { frac_grow };
    let median_of = |f: &dyn Fn(&LevelStats) -> f64| -> Vec<f64> {
        (0..n)
            .map(|j| median(&per_replicate.iter().map(|s| f(&s[j])).collect::<Vec<_>>()))
            .collect()
    };
    let mut report = TestReport::new(
        format!("continuity d={d} gamma={gamma}"),
        statistic,
        CONTINUITY_FRACTION,
        Direction::AtLeast,
    )
    .with_replicates(replicates, seed)
    .detail("d", json!(d))
    .detail("gamma", json!(gamma))
    .detail("predicted", json!(predicted))
    .detail("classification", json!(classification))
    .detail("fraction_increment_decreasing", json!(frac_dec))
    .detail("fraction_sup_growing", json!(frac_grow))
    .detail("levels", json!(grid_levels))
    .detail("modes", json!(counts))
    .detail("median_max_increment", json!(median_of(&|s| s.max_increment)))
    .detail("median_sup_norm", json!(median_of(&|s| s.sup_norm)));
    if classification == "inconclusive" {
        report = report.inconclusive();
    } else if classification != predicted {
        report.pass = false;
        report.status = Status::Fail;
    }
    Ok(report)
}

/// `V(t, x) = Σ_{λ_k ≤ t} e_k(x)²`.
pub fn spectral_function(bx: &HyperBox, t: f64, x: &[f64]) -> Result<f64> {
    bx.check_point(x)?;
    if t < bx.lambda_min() {
        return Ok(0.0);
    }
    let system = enumerate_eigen(bx, Cutoff::Threshold(t))?;
    Ok(system.iter().map(|(k, _)| eigenfunction_unchecked(bx, k, x).powi(2)).sum())
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Checks `V(t, x) ≤ C t^{d/2}` by the log-log slope of `V(t, x) / t^{d/2}`
/// against `t` at each sample point. The statistic is the largest absolute
/// slope; the largest ratio is reported as the fitted constant. Values of
/// `t` below the first eigenvalue (where `V = 0`) are left out of the fit.
pub fn spectral_bound_check(bx: &HyperBox, t_list: &[f64], x_sample: &[Vec<f64>]) -> Result<TestReport> {
    if t_list.is_empty() || t_list.windows(2).any(|w| w[1] <= w[0]) || !(t_list[0] > 0.0) {
        return Err(Error::param("t list must be positive and strictly increasing"));
    }
    for x in x_sample {
        bx.check_point(x)?;
    }
    let half_d = 0.5 * bx.dim() as f64;
    let t_max = *t_list.last().expect("non-empty");
    let system = if t_max >= bx.lambda_min() {
        Some(enumerate_eigen(bx, Cutoff::Threshold(t_max))?)
    } else {
        None
    };
    let counts: Vec<usize> = t_list
        .iter()
        .map(|&t| match &system {
            Some(s) => s.lambdas().partition_point(|&l| l <= t * (1.0 + THRESHOLD_SLACK)),
            None => 0,
        })
        .collect();
    let mut max_slope = 0.0f64;
    let mut max_ratio = 0.0f64;
    let mut per_point = Vec::with_capacity(x_sample.len());
    for x in x_sample {
        let mut cum = vec![0.0];
        if let Some(s) = &system {
            let mut acc = 0.0;
            for (k, _) in s.iter() {
                acc += eigenfunction_unchecked(bx, k, x).powi(2);
                cum.push(acc);
            }
        }
        let mut ts = Vec::new();
        let mut ratios = Vec::new();
        for (&t, &n) in t_list.iter().zip(&counts) {
            let v = cum[n];
            let ratio = v / t.powf(half_d);
            max_ratio = max_ratio.max(ratio);
            if v > 0.0 {
                ts.push(t);
                ratios.push(ratio);
            }
        }
        let slope = log_log_slope(&ts, &ratios);
        max_slope = max_slope.max(slope.abs());
        per_point.push(json!({ "x": x, "slope": slope }));
    }
    Ok(TestReport::new("spectral-bound", max_slope, SPECTRAL_SLOPE_BAND, Direction::AtMost)
        .detail("max_ratio", json!(max_ratio))
        .detail("t", json!(t_list))
        .detail("points", Value::Array(per_point)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyMeasure;
    use crate::noise::JumpAtomSet;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(d: usize) -> HyperBox {
        HyperBox::unit(d).unwrap()
    }

    fn interval_indicator() -> FnDesc {
        FnDesc::indicator(vec![(0.0, 1.0)])
    }

    #[test]
    fn report_direction() {
        let r = TestReport::new("x", 0.2, 0.1, Direction::AtLeast);
        assert!(r.pass);
        assert_eq!(r.details["direction"], json!(">="));
        assert!(!TestReport::new("x", 0.2, 0.1, Direction::AtMost).pass);
    }

    #[test]
    fn cf_null_noise_is_exact() {
        let r = empirical_cf_test(
            &LevyTriplet::zero(),
            &unit(1),
            &interval_indicator(),
            &[0.5, 1.0, 2.0],
            1000,
            3,
            PsiMethod::ClosedForm,
            McOptions::default(),
        )
        .unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn cf_rejects_few_replicates() {
        let r = empirical_cf_test(
            &LevyTriplet::zero(),
            &unit(1),
            &FnDesc::one(),
            &[1.0],
            999,
            3,
            PsiMethod::ClosedForm,
            McOptions::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn cf_targets() {
        let bx = unit(1);
        let g = LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        let t = integrated_exponent(&g, &bx, &interval_indicator(), 1.0, PsiMethod::ClosedForm).unwrap();
        assert_relative_eq!(t.exp().re, (-0.5f64).exp(), epsilon = 1e-15);
        // compound Poisson law of Σ_{n ≤ N} ±1 with N ~ Poisson(1):
        // E e^{iuX} = Σ_n e^{−1}/n! cos(u)^n
        let tp = LevyTriplet::pure_jump(LevyMeasure::TwoPoint { rate: 1.0, magnitude: 1.0 }).unwrap();
        for u in [0.5, 1.0, 2.0] {
            let mut oracle = 0.0;
            let mut w = (-1.0f64).exp();
            for n in 0..60 {
                oracle += w * f64::cos(u).powi(n);
                w /= (n + 1) as f64;
            }
            let t = integrated_exponent(&tp, &bx, &interval_indicator(), u, PsiMethod::ClosedForm).unwrap();
            assert!((t.exp().re - oracle).abs() < 1e-14);
        }
    }

    #[test]
    fn cf_two_point_passes() {
        let tp = LevyTriplet::pure_jump(LevyMeasure::TwoPoint { rate: 1.0, magnitude: 1.0 }).unwrap();
        let r = empirical_cf_test(
            &tp,
            &unit(1),
            &interval_indicator(),
            &[0.5, 1.0, 2.0],
            20_000,
            11,
            PsiMethod::ClosedForm,
            McOptions::default(),
        )
        .unwrap();
        assert!(r.pass, "{r:?}");
        assert_relative_eq!(r.threshold, 4.0 / 20_000f64.sqrt());
    }

    #[test]
    fn cf_non_piecewise_target_matches_closed_form() {
        // ∫_0^1 −(u x)²/2 dx = −u²/6
        let bx = unit(1);
        let g = LevyTriplet::new(0.3, 1.0, LevyMeasure::Null).unwrap();
        let f = FnDesc::Power { coeff: 1.0, exponents: vec![1.0] };
        let t = integrated_exponent(&g, &bx, &f, 2.0, PsiMethod::ClosedForm).unwrap();
        assert_relative_eq!(t.re, -4.0 / 6.0, epsilon = 1e-7);
        assert_relative_eq!(t.im, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn isometry_exact_variances() {
        let bx = unit(1);
        let tp = LevyTriplet::pure_jump(LevyMeasure::TwoPoint { rate: 1.0, magnitude: 0.8 }).unwrap();
        let r = isometry_test(&tp, &bx, 0.5, &interval_indicator(), 20_000, 5, Exec::Parallel).unwrap();
        assert_relative_eq!(r.details["exact_variance"].as_f64().unwrap(), 0.64, epsilon = 1e-15);
        assert!(r.pass, "{r:?}");
        let st = LevyTriplet::pure_jump(LevyMeasure::AlphaStable { alpha: 1.0 }).unwrap();
        let r = isometry_test(&st, &bx, 0.1, &interval_indicator(), 20_000, 6, Exec::Parallel).unwrap();
        assert_relative_eq!(r.details["exact_variance"].as_f64().unwrap(), 0.9, epsilon = 1e-14);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn isometry_null_is_skipped() {
        let r = isometry_test(&LevyTriplet::zero(), &unit(1), 0.1, &FnDesc::one(), 100, 1, Exec::Sequential).unwrap();
        assert_eq!(r.status, Status::Skipped);
        assert!(!r.is_failure());
    }

    #[test]
    fn weak_identity_single_atom() {
        let bx = unit(1);
        let atoms = JumpAtomSet::new(bx.clone(), 0.5, vec![(vec![0.5], 1.0)]).unwrap();
        let t = LevyTriplet::pure_jump(LevyMeasure::TwoPoint { rate: 1.0, magnitude: 1.0 }).unwrap();
        let r = NoiseRealization::from_atoms(&t, atoms, SmallJumpPolicy::Drop, 0).unwrap();
        let system = Arc::new(enumerate_eigen(&bx, Cutoff::Count(40)).unwrap());
        let rep = weak_identity_test(&r, &FnDesc::eigen(vec![1]).unwrap(), 1.0, &system).unwrap();
        // both sides equal e_1(0.5)/λ_1 = √2/π²
        let exact = 2f64.sqrt() / (PI * PI);
        assert_relative_eq!(rep.details["noise_side"].as_f64().unwrap(), exact, epsilon = 1e-14);
        assert_relative_eq!(rep.details["quadrature_side"].as_f64().unwrap(), exact, epsilon = 1e-12);
        assert!(rep.pass);
    }

    #[test]
    fn weak_identity_zero_noise() {
        let bx = unit(2);
        let r = NoiseRealization::sample(&LevyTriplet::zero(), &bx, 0.1, SmallJumpPolicy::Drop, 4).unwrap();
        let system = Arc::new(enumerate_eigen(&bx, Cutoff::Count(30)).unwrap());
        let rep = weak_identity_test(&r, &FnDesc::eigen(vec![1, 2]).unwrap(), 2.0, &system).unwrap();
        assert_eq!(rep.statistic, 0.0);
    }

    #[test]
    fn weak_identity_random_stable() {
        let bx = unit(1);
        let t = LevyTriplet::new(0.2, 0.5, LevyMeasure::AlphaStable { alpha: 1.5 }).unwrap();
        let r = NoiseRealization::sample(&t, &bx, 0.01, SmallJumpPolicy::Gaussianize, 17).unwrap();
        let system = Arc::new(enumerate_eigen(&bx, Cutoff::Count(200)).unwrap());
        for phi in [FnDesc::eigen(vec![3]).unwrap(), FnDesc::one()] {
            let rep = weak_identity_test(&r, &phi, 1.0, &system).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn classification_bands() {
        let ks = [512, 1024];
        assert_eq!(classify_trajectory(&ks, &[1.0, 1.005]).unwrap().trend, Trend::Convergent);
        assert_eq!(classify_trajectory(&ks, &[1.0, 1.1]).unwrap().trend, Trend::Divergent);
        assert_eq!(classify_trajectory(&ks, &[1.0, 1.02]).unwrap().trend, Trend::Inconclusive);
        assert_eq!(classify_trajectory(&ks, &[0.0, 0.0]).unwrap().trend, Trend::Convergent);
    }

    #[test]
    fn surrogate_basel_sum() {
        let ks: Vec<usize> = (10..=16).map(|e| 1usize << e).collect();
        let traj = surrogate_trajectories(1, 1.0, &[1.0], &ks).unwrap();
        // Σ_{k ≤ K} (πk)^{−1} ... with r − 2γ = −1: Σ 1/(π²k²) → 1/6
        let last = *traj[0].last().unwrap();
        let k = *ks.last().unwrap() as f64;
        assert_relative_eq!(last, 1.0 / 6.0 - 1.0 / (PI * PI * k), max_relative = 1e-6);
        let reps = sobolev_surrogate(1, 1.0, &[1.0], &ks).unwrap();
        assert!(reps[0].pass);
        assert_eq!(reps[0].details["classification"], json!("convergent"));
    }

    #[test]
    fn surrogate_boundary_small() {
        let ks: Vec<usize> = (12..=18).map(|e| 1usize << e).collect();
        let r = surrogate_boundary(1, 1.0, &ks).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn continuity_zero_noise() {
        let r = continuity_probe(1, 1.0, &LevyTriplet::zero(), &[3, 4, 5], 5, 1, SweepOptions::default()).unwrap();
        assert_eq!(r.details["classification"], json!("continuous-consistent"));
        assert!(r.pass);
    }

    #[test]
    fn level_stats_on_grid() {
        let s = level_stats(1, &[2, 3], &[0.0, 1.0, 3.0, -1.0, 0.5, 0.0]);
        assert_eq!(s.max_increment, 3.0);
        assert_eq!(s.sup_norm, 3.0);
    }

    #[test]
    fn spectral_function_examples() {
        let bx = unit(1);
        assert_eq!(spectral_function(&bx, 5.0, &[0.3]).unwrap(), 0.0);
        for x in [0.1, 0.37, 0.5, 0.9] {
            let v = spectral_function(&bx, 100.0, &[x]).unwrap();
            assert!(v <= 6.0 + 1e-12);
        }
        let v = spectral_function(&unit(2), 5.0 * PI * PI, &[0.5, 0.5]).unwrap();
        assert_relative_eq!(v, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_bound_interior() {
        let ts: Vec<f64> = (0..15).map(|i| 100.0 * 100f64.powf(i as f64 / 14.0)).collect();
        for d in [1, 2] {
            let pts: Vec<Vec<f64>> = [0.3, 0.5, 0.71].iter().map(|&x| vec![x; d]).collect();
            let r = spectral_bound_check(&unit(d), &ts, &pts).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
