//! Run configuration, reports, SVG scenes and CSV export for the command line tool.

use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra3d::{AlgebraContext, Element, Tag};
use crate::cayley::{caustic_search, cayley_periodic, cayley_weak, lambda_gap, search_start};
use crate::confocal_core::{vector, CausticSet, ConfocalFamily, DirectedLine, Line, Tolerances, Vector};
use crate::error::{Error, Result};
use crate::grid::{classify_grid, collect_grid, half_branch_check, pair_relation, GridMode, GridRelation, GridSet};
use crate::reflection::{build_drc, drc_symmetry_gap, LawVariant};
use crate::trajectory::{
    caustic_type_2d, classify_winding_2d, closure_gap, detect_closure, simulate, time_reversal_gap, write_trajectory, ConicType,
    Trajectory,
};

pub const COMMANDS: [&str; 10] =
    ["simulate", "caustics", "cayley-check", "cayley-weak", "cayley-search", "drc", "algebra", "star", "grid", "render"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartState {
    /// cartesian point, or elliptic coordinates with coordinate signs
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elliptic: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub octant: Option<Vec<f64>>,
    /// if absent, computed from the caustics with `signs`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakSpec {
    pub r: usize,
    pub s: i64,
    #[serde(default)]
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrcSpec {
    pub lam1: f64,
    pub lam2: f64,
    #[serde(default)]
    pub i1: usize,
    #[serde(default)]
    pub i2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub k_max: i64,
    /// position of segment 0 in the simulated orbit; defaults to the middle
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<usize>,
    /// start of a second trajectory for the two-trajectory grid
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_start: Option<StartState>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { k_max: 8, origin: None, second_start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub report: String,
    pub svg: Option<String>,
    pub csv: Option<String>,
    pub trajectory: Option<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { report: "report.json".into(), svg: None, csv: None, trajectory: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: Vec<f64>,
    #[serde(default)]
    pub boundary: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caustics: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_caustic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartState>,
    #[serde(default = "default_bounces")]
    pub bounces: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak: Option<WeakSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drc: Option<DrcSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_bounces() -> usize {
    10
}

fn default_instances() -> usize {
    5
}

impl RunConfig {
    pub fn minimal(family: Vec<f64>) -> Self {
        RunConfig {
            family,
            boundary: 0.0,
            caustics: None,
            bracket: None,
            fixed_caustic: None,
            start: None,
            bounces: default_bounces(),
            period: None,
            weak: None,
            drc: None,
            grid: GridSpec::default(),
            instances: default_instances(),
            tolerances: Tolerances::default(),
            outputs: OutputSpec::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.family;
        if a.len() < 2 {
            return Err(Error::Validation("family needs at least two semiaxes".into()));
        }
        if a.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation("family semiaxes must be strictly ascending".into()));
        }
        if self.boundary >= a[0] {
            return Err(Error::Validation("boundary parameter must lie below a_1".into()));
        }
        if let Some(s) = &self.start {
            match (&s.point, &s.elliptic) {
                (Some(p), None) if p.len() == a.len() => {}
                (None, Some(e)) if e.len() == a.len() && s.octant.as_ref().is_none_or(|o| o.len() == a.len()) => {}
                (Some(_), Some(_)) | (None, None) => {
                    return Err(Error::Validation("start needs exactly one of point and elliptic".into()))
                }
                _ => return Err(Error::Validation("start dimension differs from the family".into())),
            }
            if s.direction.as_ref().is_some_and(|d| d.len() != a.len()) {
                return Err(Error::Validation("start direction dimension differs from the family".into()));
            }
        }
        if let Some(c) = &self.caustics {
            if c.len() != a.len() - 1 {
                return Err(Error::Validation(format!("expected {} caustic parameters", a.len() - 1)));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Result<ConfocalFamily> {
        Ok(ConfocalFamily::new(self.family.clone())?.with_tolerances(self.tolerances))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &FsPath) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `<` (value below threshold), `>=`, or `==` (boolean checks, value 1 means true)
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, relation: "<", pass: value < threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, relation: ">=", pass: value >= threshold }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, relation: "==", pass: ok }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub tool_version: &'static str,
    pub seed: u64,
    pub inputs: RunConfig,
    pub results: Value,
    pub checks: Vec<Check>,
    pub all_pass: bool,
    pub wall_time_ms: f64,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.all_pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timing field zeroed, for byte comparison across runs.
    pub fn to_json_untimed(&self) -> String {
        let mut r = self.clone();
        r.wall_time_ms = 0.0;
        r.to_json()
    }
}

/// Artifacts produced besides the report.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub svg: Option<String>,
    pub csv: Option<String>,
    pub trajectory: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub svg: bool,
    pub csv: bool,
}

fn v2(x: &Vector) -> Vec<f64> {
    x.iter().copied().collect()
}

fn resolve_start(f: &ConfocalFamily, cfg: &RunConfig, start: Option<&StartState>) -> Result<(Vector, Vector)> {
    match start {
        Some(s) => {
            let x = match (&s.point, &s.elliptic) {
                (Some(p), _) => vector(p),
                (None, Some(e)) => f.point_from_elliptic(e, &s.octant.clone().unwrap_or_else(|| vec![1.0; f.dim()]))?,
                (None, None) => return Err(Error::Validation("start needs a point".into())),
            };
            let v = match (&s.direction, &cfg.caustics) {
                (Some(d), _) => vector(d),
                (None, Some(c)) => {
                    let signs = s.signs.clone().unwrap_or_else(|| vec![1.0; f.dim()]);
                    f.direction_from_caustics(&x, c, &signs)?
                }
                (None, None) => return Err(Error::Validation("start direction or caustics required".into())),
            };
            let on_boundary = f.value(cfg.boundary, &x).abs() <= f.tol.on_quadric;
            let v = if on_boundary && v.dot(&f.unit_normal(cfg.boundary, &x)?) > 0.0 { -v } else { v };
            Ok((x, v))
        }
        None => match &cfg.caustics {
            Some(c) => search_start(f, cfg.boundary, c),
            None => Err(Error::Validation("start state or caustics required".into())),
        },
    }
}

#[derive(Serialize)]
struct TrajectorySummary {
    bounces: usize,
    caustics: Vec<f64>,
    caustic_drift: f64,
    closure: Option<usize>,
    time_reversal_gap: f64,
    first_points: Vec<Vec<f64>>,
    final_point: Vec<f64>,
    final_direction: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    winding: Option<Value>,
}

fn summarize(t: &Trajectory) -> Result<TrajectorySummary> {
    let n = t.len();
    let winding = if t.family.dim() == 2 {
        classify_winding_2d(t).ok().map(|w| serde_json::to_value(w).expect("winding serializes"))
    } else {
        None
    };
    Ok(TrajectorySummary {
        bounces: n,
        caustics: t.caustics.alpha.clone(),
        caustic_drift: t.caustic_drift()?,
        closure: detect_closure(t, 1e-6),
        time_reversal_gap: time_reversal_gap(t)?,
        first_points: t.points.iter().take(8).map(v2).collect(),
        final_point: v2(&t.points[n]),
        final_direction: v2(&t.directions[n]),
        winding,
    })
}

pub fn run_command(name: &str, cfg: &RunConfig, opts: RunOptions) -> Result<(Report, Artifacts)> {
    cfg.validate()?;
    let started = Instant::now();
    let f = cfg.family()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = vec![];
    let mut art = Artifacts::default();
    let results = match name {
        "simulate" => {
            let (x, v) = resolve_start(&f, cfg, cfg.start.as_ref())?;
            let t = simulate(&f, cfg.boundary, &x, &v, cfg.bounces)?;
            let s = summarize(&t)?;
            checks.push(Check::below("caustic_drift", s.caustic_drift, 1e-8));
            checks.push(Check::below("time_reversal_gap", s.time_reversal_gap, 1e-8));
            art.trajectory = Some(write_trajectory(&t));
            if opts.svg && f.dim() == 2 {
                art.svg = Some(render_svg(&Scene::from_trajectory(&t, cfg.boundary)));
            }
            serde_json::to_value(s).expect("summary serializes")
        }
        "caustics" => {
            let (x, v) = resolve_start(&f, cfg, cfg.start.as_ref())?;
            let c = f.caustics_of_line(&Line::new(&x, &v)?)?;
            let coords = f.elliptic_coordinates(&x)?;
            let ordering = c.ordering_holds(&f);
            checks.push(Check::flag("caustic_ordering", ordering));
            if let Some(given) = &cfg.caustics {
                let d = c.max_relative_difference(&CausticSet::new(given.clone(), &f), f.scale(None));
                checks.push(Check::below("matches_configured_caustics", d, 1e-8));
            }
            json!({ "point": v2(&x), "direction": v2(&v), "caustics": c, "elliptic_coordinates": coords })
        }
        "cayley-check" => {
            let n = cfg.period.ok_or_else(|| Error::Validation("period is required".into()))?;
            let c = configured_caustics(&f, cfg)?;
            let rep = cayley_periodic(&f, &c, n)?;
            let (x, v) = search_start(&f, cfg.boundary, &c.alpha)?;
            let t = simulate(&f, cfg.boundary, &x, &v, n)?;
            let gap = if f.dim() == 2 { closure_gap(&t, n) } else { lambda_gap(&f, &t.points[0], &t.points[n])? };
            let closed = gap < 1e-6;
            checks.push(Check::flag("cayley_agrees_with_simulation", closed == rep.satisfied));
            json!({ "cayley": rep, "simulated_gap": gap, "simulated_closed": closed })
        }
        "cayley-weak" => {
            let w = cfg.weak.as_ref().ok_or_else(|| Error::Validation("weak is required".into()))?;
            let c = configured_caustics(&f, cfg)?;
            let rep = cayley_weak(&f, &c, w.r, w.s, w.x0)?;
            let mut out = json!({ "cayley": rep });
            if w.s == -1 && w.r % 2 == 0 && w.x0 == 0.0 && w.r / 2 >= f.dim() {
                let p = cayley_periodic(&f, &c, w.r / 2)?;
                let same = p.matrix == rep.columns_reversed() && p.satisfied == rep.satisfied;
                checks.push(Check::flag("matches_periodic_up_to_column_order", same));
                out["periodic"] = serde_json::to_value(p).expect("report serializes");
            }
            out
        }
        "cayley-search" => {
            let n = cfg.period.ok_or_else(|| Error::Validation("period is required".into()))?;
            let [lo, hi] = cfg.bracket.ok_or_else(|| Error::Validation("bracket is required".into()))?;
            let r = caustic_search(&f, cfg.boundary, n, (lo, hi), cfg.fixed_caustic)?;
            let rep = cayley_periodic(&f, &CausticSet::new(r.alpha.clone(), &f), n)?;
            checks.push(Check::below("closure_gap", r.closure_gap, f.tol.closure));
            checks.push(Check::flag("cayley_satisfied", rep.satisfied));
            json!({ "search": r, "cayley": rep })
        }
        "drc" => {
            let d = cfg.drc.as_ref().ok_or_else(|| Error::Validation("drc is required".into()))?;
            let (x, v) = resolve_start(&f, cfg, cfg.start.as_ref())?;
            let q = build_drc(&f, d.lam1, d.lam2, &DirectedLine::new(&x, &v)?, d.i1, d.i2)?;
            let laws = q.law_checks(&f, LawVariant::Metric)?;
            let pencil = q.pencil();
            let sym = drc_symmetry_gap(&f, &q)?;
            checks.push(Check::flag("reflection_laws", laws.iter().all(|b| *b)));
            checks.push(Check::below("pencil_ratio", pencil.ratio, f.tol.pencil));
            checks.push(Check::below("symmetry_gap", sym, 1e-8));
            json!({
                "lines": q.directed.iter().map(|l| json!({"p": v2(&l.p), "v": v2(&l.v)})).collect::<Vec<_>>(),
                "points": q.points.iter().map(v2).collect::<Vec<_>>(),
                "laws": laws,
                "pencil": pencil,
                "symmetry_gap": sym,
            })
        }
        "algebra" => {
            let (ctx, _) = algebra_context(&f, cfg)?;
            let (out, mut c) = algebra_checks(&ctx, cfg.instances, &mut rng)?;
            checks.append(&mut c);
            out
        }
        "star" => {
            let (ctx, _) = algebra_context(&f, cfg)?;
            let mut stars = vec![];
            for i in 0..cfg.instances {
                let tags = distinct_tags(&ctx, &mut rng)?;
                let st = ctx.star_configuration(tags[0], tags[1], tags[2])?;
                let worst_t = st.triplet_collinearity.iter().copied().fold(0.0, f64::max);
                let worst_q = st.quadruplet_pencils.iter().map(|p| p.ratio).fold(0.0, f64::max);
                checks.push(Check::below(format!("star{i}_triplets"), worst_t, 1e-8));
                checks.push(Check::below(format!("star{i}_quadruplets"), worst_q, 1e-8));
                let inc = st.triplet_incidence.iter().chain(&st.quadruplet_incidence).filter(|c| **c == 2).count();
                checks.push(Check::at_least(format!("star{i}_incidences"), inc as f64, 24.0));
                stars.push(json!({ "tags": tags, "configuration": st }));
            }
            json!({ "neutral_quadric": ctx.q_o, "stars": stars })
        }
        "grid" => {
            let (out, mut c, scene, csv) = grid_run(&f, cfg)?;
            checks.append(&mut c);
            if opts.svg {
                art.svg = Some(render_svg(&scene));
            }
            if opts.csv {
                art.csv = Some(csv);
            }
            out
        }
        "render" => {
            if f.dim() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
            }
            let scene = if cfg.start.is_some() || cfg.caustics.is_some() {
                let (x, v) = resolve_start(&f, cfg, cfg.start.as_ref())?;
                Scene::from_trajectory(&simulate(&f, cfg.boundary, &x, &v, cfg.bounces)?, cfg.boundary)
            } else {
                Scene::empty(f.clone())
            };
            let svg = render_svg(&scene);
            let out = json!({ "segments": scene.segments.len(), "bytes": svg.len() });
            art.svg = Some(svg);
            out
        }
        other => return Err(Error::Validation(format!("unknown command '{other}'"))),
    };
    let all_pass = checks.iter().all(|c| c.pass);
    let report = Report {
        command: name.to_string(),
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        inputs: cfg.clone(),
        results,
        checks,
        all_pass,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok((report, art))
}

fn configured_caustics(f: &ConfocalFamily, cfg: &RunConfig) -> Result<CausticSet> {
    match (&cfg.caustics, &cfg.start) {
        (Some(c), _) => Ok(CausticSet::new(c.clone(), f)),
        (None, Some(_)) => {
            let (x, v) = resolve_start(f, cfg, cfg.start.as_ref())?;
            f.caustics_of_line(&Line::new(&x, &v)?)
        }
        _ => Err(Error::Validation("caustics or a start state are required".into())),
    }
}

fn algebra_context(f: &ConfocalFamily, cfg: &RunConfig) -> Result<(AlgebraContext, DirectedLine)> {
    let (x, v) = resolve_start(f, cfg, cfg.start.as_ref())?;
    let o = DirectedLine::new(&x, &v)?;
    let c = f.caustics_of_line(&o.line())?;
    Ok((AlgebraContext::new(f, c.alpha[0], c.alpha[1], &o)?, o))
}

/// A random line through `O`: a random point of `O` and one of its confocal quadrics.
pub fn random_tag(ctx: &AlgebraContext, rng: &mut ChaCha8Rng) -> Result<Tag> {
    let s = ctx.family.a()[2].sqrt();
    for _ in 0..100 {
        let t = rng.gen_range(-1.5 * s..1.5 * s);
        let br = rng.gen_range(0..3);
        if let Ok(tag) = ctx.tag_on_o(t, br) {
            if ctx.co_line(tag).is_ok() {
                return Ok(tag);
            }
        }
    }
    Err(Error::SearchFailed("no admissible line through O".into()))
}

/// Three lines through `O` on pairwise distinct quadrics.
pub fn distinct_tags(ctx: &AlgebraContext, rng: &mut ChaCha8Rng) -> Result<[Tag; 3]> {
    for _ in 0..100 {
        let t = [random_tag(ctx, rng)?, random_tag(ctx, rng)?, random_tag(ctx, rng)?];
        let sep = |a: f64, b: f64| (a - b).abs() > 1e-3;
        if sep(t[0].lam, t[1].lam) && sep(t[0].lam, t[2].lam) && sep(t[1].lam, t[2].lam) {
            return Ok(t);
        }
    }
    Err(Error::SearchFailed("no three distinct quadrics".into()))
}

fn algebra_checks(ctx: &AlgebraContext, instances: usize, rng: &mut ChaCha8Rng) -> Result<(Value, Vec<Check>)> {
    let mut worst = [0.0f64; 4];
    let mut paths = vec![];
    for _ in 0..instances {
        let t = distinct_tags(ctx, rng)?;
        let e: Vec<Element> = t.iter().map(|x| ctx.element(*x)).collect::<Result<_>>()?;
        let o = ctx.neutral();
        let x = ctx.add(&e[0], &e[1])?;
        worst[0] = worst[0].max(ctx.add(&x, &o)?.line.distance(&x.line));
        worst[1] = worst[1].max(ctx.add(&x, &ctx.negate(&x)?)?.line.distance(&ctx.o));
        worst[2] = worst[2].max(ctx.add(&e[1], &e[0])?.line.distance(&x.line));
        let left = ctx.add(&x, &e[2])?;
        let right = ctx.add(&e[0], &ctx.add(&e[1], &e[2])?)?;
        worst[3] = worst[3].max(left.line.distance(&right.line));
        paths.push([left.path, right.path]);
    }
    let names = ["neutrality", "inverse", "commutativity", "associativity"];
    let checks = names.iter().zip(worst).map(|(n, w)| Check::below(*n, w, 1e-6)).collect();
    Ok((
        json!({
            "neutral_quadric": ctx.q_o,
            "neutral_self_reflection_residual": ctx.self_reflection_residual,
            "worst": names.iter().zip(worst).map(|(n, w)| (n.to_string(), w)).collect::<std::collections::BTreeMap<_, _>>(),
            "associativity_paths": paths,
        }),
        checks,
    ))
}

fn grid_run(f: &ConfocalFamily, cfg: &RunConfig) -> Result<(Value, Vec<Check>, Scene, String)> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    let (x, v) = resolve_start(f, cfg, cfg.start.as_ref())?;
    let t = simulate(f, cfg.boundary, &x, &v, cfg.bounces)?;
    let alpha = t.caustics.alpha[0];
    let caustic = caustic_type_2d(f, alpha)?;
    let origin = cfg.grid.origin.unwrap_or(cfg.bounces / 2);
    let mut checks = vec![];
    let mut sets: Vec<GridSet> = vec![];
    let mut classes = vec![];
    for mode in [GridMode::Difference, GridMode::Sum] {
        for k in 1..=cfg.grid.k_max {
            let mut g = match collect_grid(&t, None, k, mode, origin) {
                Ok(g) => g,
                Err(Error::EmptyGrid) => continue,
                Err(e) => return Err(e),
            };
            if g.points.len() < 2 {
                continue;
            }
            let label = format!("{}_{k}", if mode == GridMode::Difference { "P" } else { "Q" });
            match g.fit(f) {
                Ok(()) => {
                    checks.push(Check::below(format!("{label}_residual"), g.residual.unwrap(), 1e-8));
                    let c = classify_grid(f, alpha, GridRelation::Single { mode, k }, g.fitted_lambda.unwrap())?;
                    checks.push(Check::flag(format!("{label}_classification"), c.consistent));
                    classes.push(json!({ "set": label, "classification": c }));
                }
                Err(Error::NoFit(r)) => checks.push(Check::below(format!("{label}_residual"), r, 1e-8)),
                Err(e) => return Err(e),
            }
            sets.push(g);
        }
    }
    let mut pair = Value::Null;
    let mut scene = Scene::from_trajectory(&t, cfg.boundary);
    if let Some(s2) = &cfg.grid.second_start {
        let (y, w) = resolve_start(f, cfg, Some(s2))?;
        let t2 = simulate(f, cfg.boundary, &y, &w, cfg.bounces)?;
        let mut g = collect_grid(&t, Some(&t2), 0, GridMode::Pairs, 0)?;
        g.fit(f)?;
        checks.push(Check::below("pairs_residual", g.residual.unwrap(), 1e-8));
        let rel = pair_relation(&t, &t2, 0)?;
        if let Some(same) = rel {
            let c = classify_grid(f, alpha, GridRelation::Pair { same }, g.fitted_lambda.unwrap())?;
            checks.push(Check::flag("pairs_classification", c.consistent));
            let half = (caustic == ConicType::Ellipse && !same).then(|| half_branch_check(&g.points));
            if let Some(h) = half {
                checks.push(Check::flag("pairs_half_branches", h));
            }
            pair = json!({ "same": same, "classification": c, "half_branches": half, "grid": g });
        } else {
            pair = json!({ "same": null, "grid": g });
        }
        scene.segments.extend(segments_of(&t2));
    }
    let mut csv = String::from("k,mode,x_1,x_2,fitted_lambda\n");
    for g in &sets {
        let mode = if g.mode == GridMode::Difference { "difference" } else { "sum" };
        for p in &g.points {
            let lam = g.fitted_lambda.map(|l| format!("{l:.12e}")).unwrap_or_default();
            let _ = writeln!(csv, "{},{mode},{:.12e},{:.12e},{lam}", g.k, p[0], p[1]);
        }
        if g.mode == GridMode::Difference {
            scene.points.extend(g.points.iter().map(|p| (g.k, *p)));
            if let Some(l) = g.fitted_lambda {
                scene.fitted.push(l);
            }
        }
    }
    let out = json!({ "caustic": alpha, "caustic_type": caustic, "origin": origin, "sets": sets, "classes": classes, "pair": pair });
    Ok((out, checks, scene, csv))
}

/// A planar figure: confocal conics, trajectory segments and grid points.
#[derive(Debug, Clone)]
pub struct Scene {
    pub family: ConfocalFamily,
    pub boundary: Option<f64>,
    pub caustics: Vec<f64>,
    pub segments: Vec<([f64; 2], [f64; 2])>,
    /// grid points labelled by k
    pub points: Vec<(i64, [f64; 2])>,
    pub fitted: Vec<f64>,
}

fn segments_of(t: &Trajectory) -> Vec<([f64; 2], [f64; 2])> {
    t.points.windows(2).map(|w| ([w[0][0], w[0][1]], [w[1][0], w[1][1]])).collect()
}

impl Scene {
    pub fn empty(family: ConfocalFamily) -> Self {
        Scene { family, boundary: None, caustics: vec![], segments: vec![], points: vec![], fitted: vec![] }
    }

    pub fn from_trajectory(t: &Trajectory, boundary: f64) -> Self {
        Scene {
            family: t.family.clone(),
            boundary: Some(boundary),
            caustics: t.caustics.alpha.clone(),
            segments: segments_of(t),
            points: vec![],
            fitted: vec![],
        }
    }

    fn extent(&self) -> f64 {
        let a = self.family.a();
        let mut r: f64 = match self.boundary {
            Some(b) => (a[1] - b).sqrt(),
            None => 1.0,
        };
        for (p, q) in &self.segments {
            r = r.max(p[0].abs()).max(p[1].abs()).max(q[0].abs()).max(q[1].abs());
        }
        for (_, p) in &self.points {
            r = r.max(p[0].abs()).max(p[1].abs());
        }
        1.1 * r
    }
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];
const CONIC_SAMPLES: usize = 256;

/// Branches of a confocal conic as polylines, clipped to `[-r, r]^2`.
pub fn conic_polylines(f: &ConfocalFamily, lam: f64, r: f64) -> Vec<Vec<[f64; 2]>> {
    let a = f.a();
    if lam < a[0] {
        let (p, q) = ((a[0] - lam).sqrt(), (a[1] - lam).sqrt());
        let pts = (0..=CONIC_SAMPLES)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / CONIC_SAMPLES as f64;
                [p * t.cos(), q * t.sin()]
            })
            .collect();
        vec![pts]
    } else if lam < a[1] {
        let (p, q) = ((lam - a[0]).sqrt(), (a[1] - lam).sqrt());
        let umax = (r / q).max(1.0).acosh().max((r / p).asinh());
        let branch = |s: f64| -> Vec<[f64; 2]> {
            (0..CONIC_SAMPLES)
                .map(|k| {
                    let u = -umax + 2.0 * umax * k as f64 / (CONIC_SAMPLES - 1) as f64;
                    [p * u.sinh(), s * q * u.cosh()]
                })
                .filter(|pt| pt[0].abs() <= r && pt[1].abs() <= r)
                .collect()
        };
        vec![branch(1.0), branch(-1.0)]
    } else {
        vec![]
    }
}

/// Fixed six-decimal coordinate without negative zero.
fn num(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6 + 0.0;
    format!("{r:.6}")
}

fn polyline(out: &mut String, pts: &[[f64; 2]], stroke: &str, width: f64, dash: bool) {
    if pts.len() < 2 {
        return;
    }
    let _ = write!(out, "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width:.4}\"");
    if dash {
        let _ = write!(out, " stroke-dasharray=\"{:.4} {:.4}\"", 4.0 * width, 3.0 * width);
    }
    out.push_str(" points=\"");
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{},{}", num(p[0]), num(-p[1]));
    }
    out.push_str("\"/>\n");
}

/// Deterministic SVG 1.1 rendering; `y` points up.
pub fn render_svg(scene: &Scene) -> String {
    let r = scene.extent();
    let w = r / 200.0;
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"800\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">",
        -r,
        -r,
        2.0 * r,
        2.0 * r
    );
    let _ = writeln!(s, "<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" fill=\"white\"/>", -r, -r, 2.0 * r, 2.0 * r);
    s.push_str("<g id=\"axes\">\n");
    polyline(&mut s, &[[-r, 0.0], [r, 0.0]], "#bbbbbb", w, false);
    polyline(&mut s, &[[0.0, -r], [0.0, r]], "#bbbbbb", w, false);
    s.push_str("</g>\n");
    if let Some(b) = scene.boundary {
        s.push_str("<g id=\"boundary\">\n");
        for pl in conic_polylines(&scene.family, b, r) {
            polyline(&mut s, &pl, "black", 2.0 * w, false);
        }
        s.push_str("</g>\n");
    }
    if !scene.caustics.is_empty() {
        s.push_str("<g id=\"caustics\">\n");
        for c in &scene.caustics {
            for pl in conic_polylines(&scene.family, *c, r) {
                polyline(&mut s, &pl, "#3366cc", 1.5 * w, true);
            }
        }
        s.push_str("</g>\n");
    }
    if !scene.fitted.is_empty() {
        s.push_str("<g id=\"fitted\">\n");
        for l in &scene.fitted {
            for pl in conic_polylines(&scene.family, *l, r) {
                polyline(&mut s, &pl, "#999999", 0.75 * w, false);
            }
        }
        s.push_str("</g>\n");
    }
    if !scene.segments.is_empty() {
        s.push_str("<g id=\"segments\">\n");
        for (p, q) in &scene.segments {
            polyline(&mut s, &[*p, *q], "#cc3333", w, false);
        }
        s.push_str("</g>\n");
    }
    if !scene.points.is_empty() {
        s.push_str("<g id=\"grid\">\n");
        for (k, p) in &scene.points {
            let c = PALETTE[(k.rem_euclid(PALETTE.len() as i64)) as usize];
            let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{c}\"/>", num(p[0]), num(-p[1]), num(3.0 * w));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// Write the report and artifacts into `dir`, returning the written paths.
pub fn write_outputs(dir: &FsPath, cfg: &RunConfig, report: &Report, art: &Artifacts) -> Result<Vec<PathBuf>> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut written = vec![];
    let mut put = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        written.push(p);
        Ok(())
    };
    put(&cfg.outputs.report, &report.to_json())?;
    if let Some(svg) = &art.svg {
        put(cfg.outputs.svg.as_deref().unwrap_or("scene.svg"), svg)?;
    }
    if let Some(csv) = &art.csv {
        put(cfg.outputs.csv.as_deref().unwrap_or("grid.csv"), csv)?;
    }
    if let Some(t) = &art.trajectory {
        put(cfg.outputs.trajectory.as_deref().unwrap_or("trajectory.txt"), t)?;
    }
    Ok(written)
}

/// Apply `name=value` tolerance overrides.
pub fn apply_tolerances(cfg: &mut RunConfig, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (name, value) = o.split_once('=').ok_or_else(|| Error::Parse(format!("expected name=value, got '{o}'")))?;
        let value: f64 = value.trim().parse().map_err(|_| Error::Parse(format!("bad tolerance value '{value}'")))?;
        cfg.tolerances.set(name.trim(), value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(r#"{"family": [1.0, 2.0]}"#).unwrap();
        assert_eq!(c, RunConfig::minimal(vec![1.0, 2.0]));
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn duplicate_semiaxes_rejected() {
        assert!(matches!(parse_config(r#"{"family": [1.0, 1.0]}"#), Err(Error::Validation(_))));
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let e = parse_config(r#"{"family": [1.0, 2.0], "bogus": 1}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn config_round_trip() {
        let mut c = RunConfig::minimal(vec![1.0, 2.0, 3.0]);
        c.caustics = Some(vec![0.5, 1.5]);
        c.weak = Some(WeakSpec { r: 6, s: 0, x0: 0.0 });
        c.seed = 17;
        c.tolerances.rank = 1e-9;
        assert_eq!(parse_config(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn empty_scene_has_axes_only() {
        let svg = render_svg(&Scene::empty(ConfocalFamily::new(vec![1.0, 2.0]).unwrap()));
        assert!(svg.contains("id=\"axes\""));
        assert!(!svg.contains("segments"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn period_two_simulation_reports_closure() {
        let mut c = RunConfig::minimal(vec![1.0, 2.0]);
        c.start = Some(StartState {
            point: Some(vec![-1.0, 0.0]),
            elliptic: None,
            octant: None,
            direction: Some(vec![1.0, 0.0]),
            signs: None,
        });
        c.bounces = 4;
        let (r, _) = run_command("simulate", &c, RunOptions::default()).unwrap();
        assert_eq!(r.results["closure"], json!(2));
    }

    #[test]
    fn tolerance_override() {
        let mut c = RunConfig::minimal(vec![1.0, 2.0]);
        apply_tolerances(&mut c, &["rank=1e-6".into()]).unwrap();
        assert_eq!(c.tolerances.rank, 1e-6);
        assert!(apply_tolerances(&mut c, &["nope=1".into()]).is_err());
    }
}
