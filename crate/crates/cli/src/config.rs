//! Experiment configuration: TOML text to a validated [`ExperimentConfig`].
//!
//! Every table rejects unknown keys. Type errors come from the TOML
//! deserializer; constraint violations are collected here, so one parse
//! reports every problem it can find, each tagged with a line number.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Spanned;
use ucp_core::dispersion::{DispersionRelation, Family};
use ucp_core::observability::{Rect, SpaceTimeDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    DispersionCheck,
    Solve,
    LatticeCount,
    FrameBounds,
    Certificate,
    Dn,
    ZcsDispersion,
    RestProbe,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::DispersionCheck,
        Command::Solve,
        Command::LatticeCount,
        Command::FrameBounds,
        Command::Certificate,
        Command::Dn,
        Command::ZcsDispersion,
        Command::RestProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::DispersionCheck => "dispersion-check",
            Command::Solve => "solve",
            Command::LatticeCount => "lattice-count",
            Command::FrameBounds => "frame-bounds",
            Command::Certificate => "certificate",
            Command::Dn => "dn",
            Command::ZcsDispersion => "zcs-dispersion",
            Command::RestProbe => "rest-probe",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Check names a config may declare for this command.
    pub fn checks(self) -> &'static [&'static str] {
        match self {
            Command::DispersionCheck => &["verdict", "symbol_bound"],
            Command::Solve => &["unitarity"],
            Command::LatticeCount => &[
                "separation",
                "verdict",
                "line_density",
                "annulus_limit",
                "annulus_monotone",
            ],
            Command::FrameBounds => &["orthogonality", "sandwich"],
            Command::Certificate => &["interlacing", "contrast"],
            Command::Dn => &[
                "symbol_convergence",
                "deep_water",
                "self_adjoint_flat",
                "self_adjoint_variable",
                "kernel",
                "nonnegative",
            ],
            Command::ZcsDispersion => &["frequency", "gravity_scaling"],
            Command::RestProbe => &["zero_activity", "propagation", "energy"],
        }
    }

    fn sections(self) -> &'static [&'static str] {
        match self {
            Command::DispersionCheck => &["dispersion", "superlinearity"],
            Command::Solve => &["dispersion", "solve"],
            Command::LatticeCount => &["dispersion", "lattice", "annulus"],
            Command::FrameBounds => &["dispersion", "domain", "frame", "sandwich"],
            Command::Certificate => &["dispersion", "domain", "certificate"],
            Command::Dn => &["dn_symbol", "dn_structure"],
            Command::ZcsDispersion => &["zcs"],
            Command::RestProbe => &["probe"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One located problem in a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Spanned<String>,
    #[serde(default)]
    seed: u64,
    out: Option<String>,
    #[serde(default)]
    checks: Vec<Spanned<String>>,
    #[serde(default)]
    dispersion: Vec<Spanned<RawRelation>>,
    domain: Option<Spanned<RawDomain>>,
    superlinearity: Option<Spanned<SuperlinearitySpec>>,
    solve: Option<Spanned<SolveSpec>>,
    lattice: Option<Spanned<LatticeSpec>>,
    annulus: Option<Spanned<AnnulusSpec>>,
    frame: Option<Spanned<FrameSpec>>,
    sandwich: Option<Spanned<SandwichSpec>>,
    certificate: Option<Spanned<CertificateSpec>>,
    #[serde(default)]
    dn_symbol: Vec<Spanned<DnSymbolSpec>>,
    dn_structure: Option<Spanned<DnStructureSpec>>,
    zcs: Option<Spanned<ZcsSpec>>,
    probe: Option<Spanned<ProbeSpec>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelation {
    relation: Spanned<String>,
    name: Option<String>,
    p: Option<Spanned<f64>>,
    c: Option<Spanned<f64>>,
    g: Option<Spanned<f64>>,
    #[serde(rename = "S")]
    s: Option<Spanned<f64>>,
    #[serde(rename = "H")]
    h: Option<Spanned<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    t_max: Option<f64>,
    rect: Vec<Spanned<RawRect>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRect {
    x0: f64,
    x1: f64,
    t0: f64,
    t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperlinearitySpec {
    pub k_max: f64,
    /// Expected verdict per relation, in `[[dispersion]]` order.
    pub expect: Option<Vec<String>>,
    pub symbol_order: Option<f64>,
    pub symbol_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub truncation: usize,
    pub time: f64,
    pub sample_nx: Option<usize>,
    pub sample_nt: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub truncation: usize,
    pub radii: Vec<f64>,
    /// Expected Beurling verdict per relation, in `[[dispersion]]` order.
    pub expect: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusSpec {
    pub r: f64,
    pub x_abs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub truncation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichSpec {
    pub vectors: usize,
    /// Midpoint cells per side for the fine quadrature; the coarse one uses half.
    pub quadrature: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub n_list: Vec<usize>,
    /// `[fast, slow]`: relation names whose decay ratios are compared.
    pub contrast: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolReference {
    /// `k tanh(kH)`.
    FiniteDepth,
    /// `|k|`, approached exponentially fast as the depth grows.
    DeepWater,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DnSymbolSpec {
    pub depth: f64,
    pub k: i64,
    /// Square grids `n × n`, strictly increasing.
    pub grids: Vec<usize>,
    pub reference: SymbolReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DnStructureSpec {
    pub nx: usize,
    pub nz: usize,
    pub depth: f64,
    pub bottom_amplitude: f64,
    pub surface_amplitude: f64,
    pub trials: usize,
    pub max_mode: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZcsSpec {
    pub k: i64,
    pub depth: f64,
    pub g: Vec<f64>,
    pub amplitude: f64,
    pub nx: usize,
    pub nz: usize,
    /// Simulated time in linear periods.
    pub periods: f64,
    /// Step size as a fraction of a radian of phase, `dt·ω`.
    #[serde(default = "default_phase_step")]
    pub phase_step: f64,
}

fn default_phase_step() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSurface {
    Zero,
    /// Smooth compactly supported bump in `η`, `φ = 0`.
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub nx: usize,
    pub nz: usize,
    pub depth: f64,
    pub g: f64,
    pub t_final: f64,
    pub dt: f64,
    pub window: [f64; 2],
    pub tol: f64,
    pub initial: InitialSurface,
    pub bump_center: Option<f64>,
    pub bump_half_width: Option<f64>,
    pub bump_amplitude: Option<f64>,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub checks: Vec<String>,
    pub relations: Vec<DispersionRelation>,
    pub domain: Option<SpaceTimeDomain>,
    pub superlinearity: Option<SuperlinearitySpec>,
    pub solve: Option<SolveSpec>,
    pub lattice: Option<LatticeSpec>,
    pub annulus: Option<AnnulusSpec>,
    pub frame: Option<FrameSpec>,
    pub sandwich: Option<SandwichSpec>,
    pub certificate: Option<CertificateSpec>,
    pub dn_symbol: Vec<DnSymbolSpec>,
    pub dn_structure: Option<DnStructureSpec>,
    pub zcs: Option<ZcsSpec>,
    pub probe: Option<ProbeSpec>,
    echo: serde_json::Value,
}

impl ExperimentConfig {
    pub fn declares(&self, check: &str) -> bool {
        self.checks.iter().any(|c| c == check)
    }

    /// The parsed config as JSON, for the run manifest.
    pub fn echo(&self) -> &serde_json::Value {
        &self.echo
    }
}

struct Lines<'a> {
    text: &'a str,
    errors: Vec<ConfigError>,
}

impl Lines<'_> {
    fn line_of(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn error(&mut self, span: Range<usize>, message: impl Into<String>) {
        let line = self.line_of(span);
        self.errors.push(ConfigError {
            line: Some(line),
            message: message.into(),
        });
    }
}

/// Parses and validates `text`; on failure every located problem is returned.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let mut lines = Lines {
            text,
            errors: Vec::new(),
        };
        let message = e.message().to_string();
        match e.span() {
            Some(span) => lines.error(span, message),
            None => lines.errors.push(ConfigError {
                line: None,
                message,
            }),
        }
        ConfigErrors(lines.errors)
    })?;
    let mut lines = Lines {
        text,
        errors: Vec::new(),
    };
    let echo = serde_json::to_value(&raw).expect("config structures serialize");

    let command = Command::parse(raw.command.get_ref());
    if command.is_none() {
        let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
        lines.error(
            raw.command.span(),
            format!(
                "unknown command `{}`; expected one of {}",
                raw.command.get_ref(),
                names.join(", ")
            ),
        );
    }

    let relations = build_relations(&raw.dispersion, &mut lines);
    let domain = raw
        .domain
        .as_ref()
        .and_then(|d| build_domain(d, &mut lines));

    if let Some(command) = command {
        check_sections(&raw, command, &mut lines);
        for c in &raw.checks {
            if !command.checks().contains(&c.get_ref().as_str()) {
                lines.error(
                    c.span(),
                    format!(
                        "check `{}` does not apply to {command}; expected one of {}",
                        c.get_ref(),
                        command.checks().join(", ")
                    ),
                );
            }
        }
        validate_sections(&raw, command, &relations, &mut lines);
    }

    if !lines.errors.is_empty() {
        return Err(ConfigErrors(lines.errors));
    }
    Ok(ExperimentConfig {
        command: command.expect("validated"),
        seed: raw.seed,
        out: raw.out.map(PathBuf::from),
        checks: raw.checks.iter().map(|c| c.get_ref().clone()).collect(),
        relations,
        domain,
        superlinearity: inner(&raw.superlinearity),
        solve: inner(&raw.solve),
        lattice: inner(&raw.lattice),
        annulus: inner(&raw.annulus),
        frame: inner(&raw.frame),
        sandwich: inner(&raw.sandwich),
        certificate: inner(&raw.certificate),
        dn_symbol: raw.dn_symbol.iter().map(|s| s.get_ref().clone()).collect(),
        dn_structure: inner(&raw.dn_structure),
        zcs: inner(&raw.zcs),
        probe: inner(&raw.probe),
        echo,
    })
}

fn inner<T: Clone>(s: &Option<Spanned<T>>) -> Option<T> {
    s.as_ref().map(|s| s.get_ref().clone())
}

fn build_relations(raw: &[Spanned<RawRelation>], lines: &mut Lines<'_>) -> Vec<DispersionRelation> {
    let mut out = Vec::new();
    for entry in raw {
        let r = entry.get_ref();
        let family_name = r.relation.get_ref().as_str();
        let allowed: &[&str] = match family_name {
            "power" => &["p"],
            "transport" => &["c"],
            "schrodinger" | "kdv_linear" => &[],
            "gravity_capillary" => &["g", "S", "H"],
            other => {
                lines.error(
                    r.relation.span(),
                    format!(
                        "unknown relation `{other}`; expected power, transport, schrodinger, kdv_linear or gravity_capillary"
                    ),
                );
                continue;
            }
        };
        let params = [
            ("p", &r.p),
            ("c", &r.c),
            ("g", &r.g),
            ("S", &r.s),
            ("H", &r.h),
        ];
        let mut ok = true;
        for (key, value) in params {
            match (allowed.contains(&key), value) {
                (false, Some(v)) => {
                    lines.error(
                        v.span(),
                        format!("key `{key}` is not used by relation {family_name}"),
                    );
                    ok = false;
                }
                (true, None) => {
                    lines.error(
                        entry.span(),
                        format!("relation {family_name} is missing key `{key}`"),
                    );
                    ok = false;
                }
                _ => {}
            }
        }
        if !ok {
            continue;
        }
        let val = |v: &Option<Spanned<f64>>| *v.as_ref().expect("checked above").get_ref();
        let family = match family_name {
            "power" => Family::Power { p: val(&r.p) },
            "transport" => Family::Transport { c: val(&r.c) },
            "schrodinger" => Family::Schrodinger,
            "kdv_linear" => Family::KdvLinear,
            _ => Family::GravityCapillary {
                g: val(&r.g),
                s: val(&r.s),
                h: val(&r.h),
            },
        };
        match DispersionRelation::new(family) {
            Ok(rel) => {
                let rel = match &r.name {
                    Some(n) => rel.with_name(n.clone()),
                    None => rel,
                };
                if out
                    .iter()
                    .any(|o: &DispersionRelation| o.name() == rel.name())
                {
                    lines.error(
                        entry.span(),
                        format!(
                            "duplicate relation name `{}`; set `name` to tell them apart",
                            rel.name()
                        ),
                    );
                } else if !rel
                    .name()
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                {
                    lines.error(
                        entry.span(),
                        format!("relation name `{}` must be [A-Za-z0-9_-]", rel.name()),
                    );
                } else {
                    out.push(rel);
                }
            }
            Err(e) => lines.error(entry.span(), e.to_string()),
        }
    }
    out
}

fn build_domain(raw: &Spanned<RawDomain>, lines: &mut Lines<'_>) -> Option<SpaceTimeDomain> {
    let d = raw.get_ref();
    if d.rect.is_empty() {
        lines.error(raw.span(), "domain needs at least one [[domain.rect]]");
        return None;
    }
    let mut rects = Vec::new();
    let mut ok = true;
    for (i, r) in d.rect.iter().enumerate() {
        let v = r.get_ref();
        let finite = [v.x0, v.x1, v.t0, v.t1].iter().all(|x| x.is_finite());
        if !finite {
            lines.error(
                r.span(),
                format!("rectangle {}: coordinates must be finite", i + 1),
            );
            ok = false;
        } else if v.x1 <= v.x0 {
            lines.error(
                r.span(),
                format!(
                    "rectangle {}: x1 = {} must exceed x0 = {}",
                    i + 1,
                    v.x1,
                    v.x0
                ),
            );
            ok = false;
        } else if v.t1 <= v.t0 {
            lines.error(
                r.span(),
                format!(
                    "rectangle {}: t1 = {} must exceed t0 = {}",
                    i + 1,
                    v.t1,
                    v.t0
                ),
            );
            ok = false;
        }
        rects.push(Rect::new(v.x0, v.x1, v.t0, v.t1));
    }
    if !ok {
        return None;
    }
    let t_max = d
        .t_max
        .unwrap_or_else(|| rects.iter().map(|r| r.t1).fold(f64::NEG_INFINITY, f64::max));
    match SpaceTimeDomain::new(rects, t_max) {
        Ok(dom) => Some(dom),
        Err(e) => {
            lines.error(raw.span(), e.to_string());
            None
        }
    }
}

fn present(raw: &RawConfig) -> Vec<(&'static str, Range<usize>)> {
    let mut v = Vec::new();
    if let Some(first) = raw.dispersion.first() {
        v.push(("dispersion", first.span()));
    }
    if let Some(first) = raw.dn_symbol.first() {
        v.push(("dn_symbol", first.span()));
    }
    macro_rules! opt {
        ($($field:ident),*) => {
            $(if let Some(s) = &raw.$field { v.push((stringify!($field), s.span())); })*
        };
    }
    opt!(
        domain,
        superlinearity,
        solve,
        lattice,
        annulus,
        frame,
        sandwich,
        certificate,
        dn_structure,
        zcs,
        probe
    );
    v
}

fn check_sections(raw: &RawConfig, command: Command, lines: &mut Lines<'_>) {
    for (name, span) in present(raw) {
        if !command.sections().contains(&name) {
            lines.error(span, format!("section `{name}` is not used by {command}"));
        }
    }
}

fn require<'a, T>(
    section: &'a Option<Spanned<T>>,
    name: &str,
    command: Command,
    cmd_span: Range<usize>,
    lines: &mut Lines<'_>,
) -> Option<&'a Spanned<T>> {
    if section.is_none() {
        lines.error(cmd_span, format!("{command} needs a [{name}] section"));
    }
    section.as_ref()
}

fn need_checks(raw: &RawConfig, names: &[&str]) -> bool {
    raw.checks
        .iter()
        .any(|c| names.contains(&c.get_ref().as_str()))
}

fn validate_sections(
    raw: &RawConfig,
    command: Command,
    relations: &[DispersionRelation],
    lines: &mut Lines<'_>,
) {
    let cspan = raw.command.span();
    let needs_relations = matches!(
        command,
        Command::DispersionCheck | Command::Solve | Command::FrameBounds | Command::Certificate
    );
    if needs_relations && raw.dispersion.is_empty() {
        lines.error(
            cspan.clone(),
            format!("{command} needs at least one [[dispersion]] entry"),
        );
    }
    let verdicts = |expect: &Option<Vec<String>>,
                    allowed: &[&str],
                    span: Range<usize>,
                    lines: &mut Lines<'_>| {
        if let Some(list) = expect {
            if list.len() != raw.dispersion.len() {
                lines.error(
                    span.clone(),
                    format!(
                        "expect has {} entries for {} relations",
                        list.len(),
                        raw.dispersion.len()
                    ),
                );
            }
            for v in list {
                if !allowed.contains(&v.as_str()) {
                    lines.error(
                        span.clone(),
                        format!(
                            "unknown verdict `{v}`; expected one of {}",
                            allowed.join(", ")
                        ),
                    );
                }
            }
        }
    };

    match command {
        Command::DispersionCheck => {
            if let Some(s) = require(
                &raw.superlinearity,
                "superlinearity",
                command,
                cspan.clone(),
                lines,
            ) {
                let v = s.get_ref();
                if !(v.k_max.is_finite() && v.k_max >= 64.0) {
                    lines.error(
                        s.span(),
                        format!("k_max must be finite and at least 64, got {}", v.k_max),
                    );
                }
                verdicts(
                    &v.expect,
                    &["SUPERLINEAR", "NOT_SUPERLINEAR", "INCONCLUSIVE"],
                    s.span(),
                    lines,
                );
                if need_checks(raw, &["verdict"]) && v.expect.is_none() {
                    lines.error(s.span(), "check `verdict` needs `expect`");
                }
                match (v.symbol_order, v.symbol_constant) {
                    (Some(_), Some(c)) if !(c > 0.0) => {
                        lines.error(
                            s.span(),
                            format!("symbol_constant must be positive, got {c}"),
                        );
                    }
                    (Some(_), Some(_)) => {}
                    (None, None) if need_checks(raw, &["symbol_bound"]) => {
                        lines.error(
                            s.span(),
                            "check `symbol_bound` needs symbol_order and symbol_constant",
                        );
                    }
                    (None, None) => {}
                    _ => lines.error(s.span(), "symbol_order and symbol_constant go together"),
                }
            }
        }
        Command::Solve => {
            if let Some(s) = require(&raw.solve, "solve", command, cspan.clone(), lines) {
                let v = s.get_ref();
                if v.truncation == 0 {
                    lines.error(s.span(), "truncation must be at least 1");
                }
                if !v.time.is_finite() {
                    lines.error(s.span(), "time must be finite");
                }
                match (v.sample_nx, v.sample_nt) {
                    (Some(nx), Some(nt)) => {
                        if nx < 2 * v.truncation + 1 {
                            lines.error(
                                s.span(),
                                format!(
                                    "sample_nx = {nx} aliases truncation {}; need at least {}",
                                    v.truncation,
                                    2 * v.truncation + 1
                                ),
                            );
                        }
                        if nt == 0 {
                            lines.error(s.span(), "sample_nt must be at least 1");
                        }
                    }
                    (None, None) => {}
                    _ => lines.error(s.span(), "sample_nx and sample_nt go together"),
                }
            }
        }
        Command::LatticeCount => {
            if raw.dispersion.is_empty() && raw.annulus.is_none() {
                lines.error(
                    cspan.clone(),
                    "lattice-count needs [[dispersion]] entries or an [annulus] section",
                );
            }
            if !raw.dispersion.is_empty() {
                if let Some(s) = require(&raw.lattice, "lattice", command, cspan.clone(), lines) {
                    let v = s.get_ref();
                    if v.truncation == 0 {
                        lines.error(s.span(), "truncation must be at least 1");
                    }
                    if v.radii.len() < 3 {
                        lines.error(s.span(), "radii needs at least three entries");
                    }
                    if !v.radii.iter().all(|r| r.is_finite() && *r > 0.0)
                        || !v.radii.windows(2).all(|w| w[1] > w[0])
                    {
                        lines.error(s.span(), "radii must be positive and strictly increasing");
                    }
                    if let Some(&r_max) = v.radii.last() {
                        if r_max > v.truncation as f64 / 4.0 {
                            lines.error(
                                s.span(),
                                format!(
                                    "largest radius {r_max} exceeds truncation/4 = {}",
                                    v.truncation as f64 / 4.0
                                ),
                            );
                        }
                    }
                    verdicts(
                        &v.expect,
                        &["PASS", "FAIL", "INCONCLUSIVE"],
                        s.span(),
                        lines,
                    );
                    if need_checks(raw, &["verdict"]) && v.expect.is_none() {
                        lines.error(s.span(), "check `verdict` needs `expect`");
                    }
                }
            } else if let Some(s) = &raw.lattice {
                lines.error(s.span(), "[lattice] has no [[dispersion]] entries to count");
            }
            if need_checks(raw, &["line_density"])
                && !relations
                    .iter()
                    .any(|r| matches!(r.family(), Family::Transport { .. }))
            {
                lines.error(
                    cspan.clone(),
                    "check `line_density` needs a transport relation",
                );
            }
            if need_checks(raw, &["separation", "verdict", "line_density"])
                && raw.dispersion.is_empty()
            {
                lines.error(cspan.clone(), "lattice checks need [[dispersion]] entries");
            }
            match &raw.annulus {
                Some(s) => {
                    let v = s.get_ref();
                    if !(v.r > 0.0 && v.r.is_finite()) {
                        lines.error(s.span(), format!("r must be positive, got {}", v.r));
                    }
                    if v.x_abs.is_empty() || !v.x_abs.windows(2).all(|w| w[1] > w[0]) {
                        lines.error(s.span(), "x_abs must be non-empty and strictly increasing");
                    }
                    if v.x_abs.iter().any(|&x| !(x > v.r) || !x.is_finite()) {
                        lines.error(s.span(), "every x_abs must exceed r");
                    }
                }
                None if need_checks(raw, &["annulus_limit", "annulus_monotone"]) => {
                    lines.error(cspan.clone(), "annulus checks need an [annulus] section");
                }
                None => {}
            }
        }
        Command::FrameBounds => {
            require(&raw.domain, "domain", command, cspan.clone(), lines);
            if let Some(s) = require(&raw.frame, "frame", command, cspan.clone(), lines) {
                if s.get_ref().truncation == 0 {
                    lines.error(s.span(), "truncation must be at least 1");
                }
            }
            match &raw.sandwich {
                Some(s) => {
                    let v = s.get_ref();
                    if v.vectors == 0 {
                        lines.error(s.span(), "vectors must be at least 1");
                    }
                    if v.quadrature < 4 || v.quadrature % 2 != 0 {
                        lines.error(s.span(), "quadrature must be even and at least 4");
                    }
                }
                None if need_checks(raw, &["sandwich"]) => {
                    lines.error(cspan.clone(), "check `sandwich` needs a [sandwich] section");
                }
                None => {}
            }
        }
        Command::Certificate => {
            require(&raw.domain, "domain", command, cspan.clone(), lines);
            if let Some(s) = require(
                &raw.certificate,
                "certificate",
                command,
                cspan.clone(),
                lines,
            ) {
                let v = s.get_ref();
                if v.n_list.is_empty() || !v.n_list.windows(2).all(|w| w[1] > w[0]) {
                    lines.error(s.span(), "n_list must be non-empty and strictly increasing");
                }
                match &v.contrast {
                    Some(pair) if pair.len() != 2 => {
                        lines.error(
                            s.span(),
                            "contrast names exactly two relations: [fast, slow]",
                        );
                    }
                    Some(pair) => {
                        for name in pair {
                            if !relations.iter().any(|r| r.name() == name) {
                                lines.error(
                                    s.span(),
                                    format!("contrast names unknown relation `{name}`"),
                                );
                            }
                        }
                        if v.n_list.len() < 2 {
                            lines.error(s.span(), "contrast needs at least two truncations");
                        }
                    }
                    None if need_checks(raw, &["contrast"]) => {
                        lines.error(s.span(), "check `contrast` needs `contrast = [fast, slow]`");
                    }
                    None => {}
                }
            }
        }
        Command::Dn => {
            if raw.dn_symbol.is_empty() && raw.dn_structure.is_none() {
                lines.error(
                    cspan.clone(),
                    "dn needs [[dn_symbol]] entries or a [dn_structure] section",
                );
            }
            for s in &raw.dn_symbol {
                let v = s.get_ref();
                if !(v.depth > 0.0 && v.depth.is_finite()) {
                    lines.error(s.span(), format!("depth must be positive, got {}", v.depth));
                }
                if v.grids.len() < 2 || !v.grids.windows(2).all(|w| w[1] > w[0]) || v.grids[0] < 8 {
                    lines.error(
                        s.span(),
                        "grids needs two or more increasing sizes, each at least 8",
                    );
                }
                if v.k < 1 || v.grids.first().is_some_and(|&n| v.k as usize >= n / 2) {
                    lines.error(
                        s.span(),
                        format!("k = {} must satisfy 1 <= k < n/2 on every grid", v.k),
                    );
                }
            }
            let want = |reference| {
                raw.dn_symbol
                    .iter()
                    .any(|s| s.get_ref().reference == reference)
            };
            if need_checks(raw, &["symbol_convergence"]) && !want(SymbolReference::FiniteDepth) {
                lines.error(
                    cspan.clone(),
                    "check `symbol_convergence` needs a finite_depth [[dn_symbol]] entry",
                );
            }
            if need_checks(raw, &["deep_water"]) && !want(SymbolReference::DeepWater) {
                lines.error(
                    cspan.clone(),
                    "check `deep_water` needs a deep_water [[dn_symbol]] entry",
                );
            }
            match &raw.dn_structure {
                Some(s) => {
                    let v = s.get_ref();
                    if v.nx < 8 || v.nz < 8 {
                        lines.error(s.span(), "nx and nz must be at least 8");
                    }
                    if !(v.depth > 0.0) {
                        lines.error(s.span(), "depth must be positive");
                    }
                    if !(v.bottom_amplitude.abs() + v.surface_amplitude.abs() < v.depth) {
                        lines.error(s.span(), "modulation amplitudes must leave positive depth");
                    }
                    if v.trials == 0 {
                        lines.error(s.span(), "trials must be at least 1");
                    }
                    if v.max_mode == 0 || v.max_mode >= v.nx / 2 {
                        lines.error(s.span(), format!("max_mode must lie in 1..{}", v.nx / 2));
                    }
                }
                None if need_checks(
                    raw,
                    &[
                        "self_adjoint_flat",
                        "self_adjoint_variable",
                        "kernel",
                        "nonnegative",
                    ],
                ) =>
                {
                    lines.error(
                        cspan.clone(),
                        "structure checks need a [dn_structure] section",
                    );
                }
                None => {}
            }
        }
        Command::ZcsDispersion => {
            if let Some(s) = require(&raw.zcs, "zcs", command, cspan.clone(), lines) {
                let v = s.get_ref();
                if v.g.is_empty() || v.g.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
                    lines.error(s.span(), "g must be a non-empty list of positive values");
                }
                if need_checks(raw, &["gravity_scaling"]) && v.g.len() < 2 {
                    lines.error(
                        s.span(),
                        "check `gravity_scaling` needs at least two g values",
                    );
                }
                if !(v.depth > 0.0) {
                    lines.error(s.span(), "depth must be positive");
                }
                if !(v.amplitude > 0.0 && v.amplitude <= 1e-6) {
                    lines.error(
                        s.span(),
                        format!("amplitude must lie in (0, 1e-6], got {}", v.amplitude),
                    );
                }
                if v.k < 1 || v.k as usize >= v.nx / 2 {
                    lines.error(s.span(), format!("k = {} must satisfy 1 <= k < nx/2", v.k));
                }
                if v.nx < 8 || v.nz < 8 {
                    lines.error(s.span(), "nx and nz must be at least 8");
                }
                if !(v.periods >= 2.0) {
                    lines.error(
                        s.span(),
                        "periods must be at least 2 for a zero-crossing fit",
                    );
                }
                if !(v.phase_step > 0.0 && v.phase_step <= 0.05) {
                    lines.error(s.span(), "phase_step must lie in (0, 0.05]");
                }
            }
        }
        Command::RestProbe => {
            if let Some(s) = require(&raw.probe, "probe", command, cspan.clone(), lines) {
                let v = s.get_ref();
                if v.nx < 8 || v.nz < 8 {
                    lines.error(s.span(), "nx and nz must be at least 8");
                }
                if !(v.depth > 0.0 && v.g > 0.0 && v.dt > 0.0 && v.t_final > 0.0) {
                    lines.error(s.span(), "depth, g, dt and t_final must be positive");
                }
                if !(v.tol >= 0.0) {
                    lines.error(s.span(), "tol must be non-negative");
                }
                let [w0, w1] = v.window;
                if !(0.0 <= w0 && w0 < w1 && w1 <= 2.0 * std::f64::consts::PI) {
                    lines.error(s.span(), "window must satisfy 0 <= x0 < x1 <= 2π");
                }
                let bump = [v.bump_center, v.bump_half_width, v.bump_amplitude];
                match v.initial {
                    InitialSurface::Zero if bump.iter().any(Option::is_some) => {
                        lines.error(s.span(), "bump_* keys only apply to initial = \"bump\"");
                    }
                    InitialSurface::Bump if bump.iter().any(Option::is_none) => {
                        lines.error(s.span(), "initial = \"bump\" needs bump_center, bump_half_width and bump_amplitude");
                    }
                    InitialSurface::Bump if !(v.bump_half_width.unwrap_or(0.0) > 0.0) => {
                        lines.error(s.span(), "bump_half_width must be positive");
                    }
                    _ => {}
                }
            }
        }
    }
}
