//! Analysis configuration, audit reports and the command implementations
//! behind the `lyapaudit` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifted::{
    build_h, corollary1_diagnostics, lemma1_residual, solvability_for, spectral_symmetry_check,
    theorem1_diagnostics, Corollary1Diagnostics, LiftedSystem, Solvability, SystemSpec,
    Theorem1Diagnostics,
};
use crate::matrix::DenseMatrix;
use crate::numkit::DEFAULT_REL_TOL;
use crate::oracle::{run_oracle, LyapunovSamples, OracleNumerics, OracleRun, Residuals};

pub const PAPER_EXAMPLE_PRESET: &str = "kharitonov2006-example";
pub const SCALAR_PRESET: &str = "scalar-toy";
pub const PRESETS: [&str; 2] = [PAPER_EXAMPLE_PRESET, SCALAR_PRESET];

/// Note attached to reports for the example preset, whose source leaves the
/// cost weight unspecified.
pub const EXAMPLE_W_NOTE: &str =
    "W = I is chosen by this tool; the reference example leaves W open";

/// Exit codes of the command-line interface.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CLAIM_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub dt: f64,
    pub tau_step: f64,
    pub rel_tol: f64,
    pub decay_threshold: f64,
    /// In units of the delay.
    pub horizon_cap: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let o = OracleNumerics::default();
        Self {
            dt: o.dt,
            tau_step: o.tau_step,
            rel_tol: DEFAULT_REL_TOL,
            decay_threshold: o.decay_threshold,
            horizon_cap: o.horizon_cap,
        }
    }
}

impl Numerics {
    pub fn oracle(&self) -> OracleNumerics {
        OracleNumerics {
            dt: self.dt,
            tau_step: self.tau_step,
            decay_threshold: self.decay_threshold,
            horizon_cap: self.horizon_cap,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("tau_step", self.tau_step),
            ("rel_tol", self.rel_tol),
            ("decay_threshold", self.decay_threshold),
            ("horizon_cap", self.horizon_cap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "numerics.{name} = {v} must be positive"
                )));
            }
        }
        if self.decay_threshold >= 1.0 {
            return Err(Error::Config(
                "numerics.decay_threshold must be below 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
    /// 0 quiet, 1 claim table, 2 also singular spectra.
    pub verbosity: u8,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            report_path: None,
            csv_path: None,
            verbosity: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n: Option<usize>,
    #[serde(default = "unit_delay")]
    h: f64,
    #[serde(default = "pi")]
    omega: f64,
    a0: DenseMatrix,
    a1: DenseMatrix,
    b0: DenseMatrix,
    b1: DenseMatrix,
    w: DenseMatrix,
}

fn unit_delay() -> f64 {
    1.0
}

fn pi() -> f64 {
    std::f64::consts::PI
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    system: Option<RawSystem>,
    #[serde(default)]
    numerics: Numerics,
    #[serde(default)]
    outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Preset name or `"custom"`.
    pub label: String,
    pub spec: SystemSpec,
    pub numerics: Numerics,
    pub outputs: Outputs,
}

fn m(rows: &[&[f64]]) -> DenseMatrix {
    DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
        .expect("preset matrices are well formed")
}

pub fn preset_system(name: &str) -> Result<SystemSpec> {
    match name {
        PAPER_EXAMPLE_PRESET => SystemSpec::new(
            m(&[&[-1.0, 0.0], &[0.0, -1.0]]),
            m(&[&[0.0, 1.0], &[-1.0, 0.0]]),
            m(&[&[0.3, 0.0], &[0.0, 0.3]]),
            m(&[&[0.0, 0.3], &[-0.3, 0.0]]),
            DenseMatrix::identity(2),
        ),
        SCALAR_PRESET => SystemSpec::new(
            m(&[&[-1.0]]),
            m(&[&[0.0]]),
            m(&[&[0.0]]),
            m(&[&[0.0]]),
            m(&[&[1.0]]),
        ),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; available: {}",
            PRESETS.join(", ")
        ))),
    }
}

impl AnalysisConfig {
    pub fn from_preset(name: &str) -> Result<Self> {
        Ok(Self {
            label: name.to_string(),
            spec: preset_system(name)?,
            numerics: Numerics::default(),
            outputs: Outputs::default(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        raw.numerics.validate()?;
        let (label, spec) = match (raw.preset, raw.system) {
            (Some(p), None) => (p.clone(), preset_system(&p)?),
            (None, Some(s)) => {
                let n = s.a0.rows();
                if s.n.is_some_and(|declared| declared != n) {
                    return Err(Error::Config(format!(
                        "system.n = {} disagrees with A0 ({n}x{})",
                        s.n.unwrap_or_default(),
                        s.a0.cols()
                    )));
                }
                let spec = SystemSpec {
                    n,
                    h: s.h,
                    omega: s.omega,
                    a0: s.a0,
                    a1: s.a1,
                    b0: s.b0,
                    b1: s.b1,
                    w: s.w,
                };
                spec.validate()?;
                ("custom".to_string(), spec)
            }
            _ => {
                return Err(Error::Config(
                    "exactly one of \"preset\" and \"system\" must be given".into(),
                ))
            }
        };
        Ok(Self {
            label,
            spec,
            numerics: raw.numerics,
            outputs: raw.outputs,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn w_note(&self) -> Option<String> {
        (self.label == PAPER_EXAMPLE_PRESET).then(|| EXAMPLE_W_NOTE.to_string())
    }
}

/// Every threshold a verdict depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub rel_tol: f64,
    pub lemma1_residual: f64,
    pub spectral_oddity: f64,
    pub min_gap_ratio: f64,
    pub oracle_residual: f64,
}

impl Thresholds {
    pub fn new(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            lemma1_residual: 0.0,
            spectral_oddity: 1e-9,
            min_gap_ratio: 1e4,
            oracle_residual: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::Eq => measured == threshold,
            Relation::Lt => measured < threshold,
            Relation::Le => measured <= threshold,
            Relation::Ge => measured >= threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "==",
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub claim: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl ClaimVerdict {
    fn new(claim: &str, measured: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            claim: claim.to_string(),
            measured,
            relation,
            threshold,
            pass: relation.holds(measured, threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub numerics: OracleNumerics,
    pub t_max: f64,
    pub residuals: Residuals,
    pub u_at_zero: DenseMatrix,
}

impl From<&OracleRun> for OracleSummary {
    fn from(run: &OracleRun) -> Self {
        Self {
            numerics: run.numerics,
            t_max: run.t_max,
            residuals: run.residuals,
            u_at_zero: run.samples.at(0).clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub system: String,
    pub w_note: Option<String>,
    pub n: usize,
    /// Entry `(0, 0)` of `H` was shifted by this amount before the audit.
    pub h_perturbation: Option<f64>,
    pub thresholds: Thresholds,
    pub lemma1_residual: f64,
    pub spectral_oddity: f64,
    pub theorem1: Theorem1Diagnostics,
    pub corollary1: Corollary1Diagnostics,
    pub solvability: Solvability,
    pub oracle: Option<OracleSummary>,
    pub claims: Vec<ClaimVerdict>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AuditOptions {
    pub perturb_h: Option<f64>,
    pub run_oracle: bool,
}

fn oracle_claims(oracle: &OracleSummary, th: &Thresholds) -> Vec<ClaimVerdict> {
    let r = oracle.residuals;
    vec![
        ClaimVerdict::new(
            "oracle: dynamic property residual",
            r.dynamic,
            Relation::Le,
            th.oracle_residual,
        ),
        ClaimVerdict::new(
            "oracle: symmetry property residual",
            r.symmetric,
            Relation::Le,
            th.oracle_residual,
        ),
        ClaimVerdict::new(
            "oracle: algebraic property residual",
            r.algebraic,
            Relation::Le,
            th.oracle_residual,
        ),
    ]
}

/// Runs every diagnostic on the lifted problem and, optionally, the oracle.
pub fn audit(config: &AnalysisConfig, options: AuditOptions) -> Result<AuditReport> {
    let spec = &config.spec;
    let rel_tol = config.numerics.rel_tol;
    let th = Thresholds::new(rel_tol);
    let mut lift: LiftedSystem = build_h(spec)?;
    if let Some(eps) = options.perturb_h {
        lift.h[(0, 0)] += eps;
    }
    let n2 = spec.n * spec.n;

    let lemma1 = lemma1_residual(&lift);
    let oddity = spectral_symmetry_check(&lift)?;
    let theorem1 = theorem1_diagnostics(&lift, rel_tol)?;
    let corollary1 = corollary1_diagnostics(&lift, spec, rel_tol)?;
    let solvability = solvability_for(&lift, spec, rel_tol)?;
    let oracle = if options.run_oracle {
        Some(OracleSummary::from(&run_oracle(
            spec,
            config.numerics.oracle(),
        )?))
    } else {
        None
    };

    let n2f = n2 as f64;
    let gap = |d: &crate::numkit::RankDiagnostics| d.gap_ratio.unwrap_or(0.0);
    let mut claims = vec![
        ClaimVerdict::new(
            "J-symmetry: ||J^T H J + H||_F",
            lemma1,
            Relation::Eq,
            th.lemma1_residual,
        ),
        ClaimVerdict::new(
            "eigenvalue pairing: odd char-poly coefficients of H (normalized)",
            oddity,
            Relation::Le,
            th.spectral_oddity,
        ),
        ClaimVerdict::new(
            "eigenspace dimension: nullity of I - J e^H",
            theorem1.plus.nullity as f64,
            Relation::Eq,
            2.0 * n2f,
        ),
        ClaimVerdict::new(
            "eigenspace dimension: nullity of -I - J e^H",
            theorem1.minus.nullity as f64,
            Relation::Eq,
            2.0 * n2f,
        ),
        ClaimVerdict::new(
            "eigenspace dimension: singular-value gap of I - J e^H",
            gap(&theorem1.plus),
            Relation::Ge,
            th.min_gap_ratio,
        ),
        ClaimVerdict::new(
            "eigenspace dimension: singular-value gap of -I - J e^H",
            gap(&theorem1.minus),
            Relation::Ge,
            th.min_gap_ratio,
        ),
        ClaimVerdict::new(
            "eigenspaces of J e^H at +1 and -1 fill the space",
            (theorem1.plus.nullity + theorem1.minus.nullity) as f64,
            Relation::Eq,
            4.0 * n2f,
        ),
        ClaimVerdict::new(
            "coupling dependence: rank of the three coupling conditions",
            corollary1.three_row.rank as f64,
            Relation::Lt,
            3.0 * n2f,
        ),
        ClaimVerdict::new(
            "non-uniqueness: rank of the full boundary operator",
            solvability.operator_rank.rank as f64,
            Relation::Lt,
            4.0 * n2f,
        ),
    ];
    if let Some(o) = &oracle {
        claims.extend(oracle_claims(o, &th));
    }
    let all_pass = claims.iter().all(|c| c.pass);

    Ok(AuditReport {
        system: config.label.clone(),
        w_note: config.w_note(),
        n: spec.n,
        h_perturbation: options.perturb_h,
        thresholds: th,
        lemma1_residual: lemma1,
        spectral_oddity: oddity,
        theorem1,
        corollary1,
        solvability,
        oracle,
        claims,
        all_pass,
    })
}

fn fmt_value(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e6 {
        format!("{x:.0}")
    } else {
        format!("{x:.3e}")
    }
}

/// Claim table for the console.
pub fn render_table(claims: &[ClaimVerdict]) -> String {
    let width = claims.iter().map(|c| c.claim.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in claims {
        let _ = writeln!(
            out,
            "{}  {:<width$}  {:>10} {:>2} {:<10}",
            if c.pass { "PASS" } else { "FAIL" },
            c.claim,
            fmt_value(c.measured),
            c.relation.symbol(),
            fmt_value(c.threshold),
        );
    }
    out
}

fn render_spectra(report: &AuditReport) -> String {
    let mut out = String::new();
    for (name, d) in [
        ("I - J e^H", &report.theorem1.plus),
        ("-I - J e^H", &report.theorem1.minus),
        ("three coupling conditions", &report.corollary1.three_row),
        ("full boundary operator", &report.solvability.operator_rank),
    ] {
        let _ = writeln!(
            out,
            "singular values of {name} (tolerance {:.3e}):",
            d.tolerance
        );
        let vals: Vec<String> = d
            .singular_values
            .iter()
            .map(|s| format!("{s:.3e}"))
            .collect();
        let _ = writeln!(out, "  {}", vals.join(" "));
    }
    out
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// `tau,u11,u12,...,unn` with 17 significant digits, one row per grid point.
pub fn lyapunov_csv(samples: &LyapunovSamples) -> String {
    let n = samples.values[0].rows();
    let mut out = String::from("tau");
    for i in 1..=n {
        for j in 1..=n {
            let _ = write!(out, ",u{i}{j}");
        }
    }
    out.push('\n');
    for (tau, u) in samples.taus.iter().zip(&samples.values) {
        let _ = write!(out, "{tau:.16e}");
        for x in u.as_slice() {
            let _ = write!(out, ",{x:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Maps an error to the CLI exit-code contract.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidSystem(_) | Error::Unsupported(_) | Error::Grid(_) => {
            exit::USAGE
        }
        _ => exit::NUMERICAL,
    }
}

/// Console text and exit code of a finished command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub exit_code: i32,
}

pub fn cmd_analyze(
    config: &AnalysisConfig,
    options: AuditOptions,
) -> Result<(AuditReport, CommandOutput)> {
    let report = audit(config, options)?;
    if let Some(path) = &config.outputs.report_path {
        write_file(path, &to_json(&report))?;
    }
    let mut stdout = String::new();
    if config.outputs.verbosity > 0 {
        let _ = writeln!(stdout, "system: {} (n = {})", report.system, report.n);
        if let Some(note) = &report.w_note {
            let _ = writeln!(stdout, "note: {note}");
        }
        stdout.push_str(&render_table(&report.claims));
        if config.outputs.verbosity > 1 {
            stdout.push_str(&render_spectra(&report));
        }
    }
    Ok((
        report,
        CommandOutput {
            stdout,
            exit_code: exit::PASS,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub system: String,
    pub w_note: Option<String>,
    pub thresholds: Thresholds,
    pub oracle: OracleSummary,
    pub claims: Vec<ClaimVerdict>,
}

/// Runs the oracle, writes `U(τ)` as CSV (to `csv_path`, or into the
/// returned stdout when unset) and the residual summary as a report.
pub fn cmd_oracle(config: &AnalysisConfig) -> Result<(OracleReport, CommandOutput)> {
    let run = run_oracle(&config.spec, config.numerics.oracle())?;
    let th = Thresholds::new(config.numerics.rel_tol);
    let summary = OracleSummary::from(&run);
    let report = OracleReport {
        system: config.label.clone(),
        w_note: config.w_note(),
        thresholds: th,
        claims: oracle_claims(&summary, &th),
        oracle: summary,
    };
    let csv = lyapunov_csv(&run.samples);
    let mut stdout = String::new();
    match &config.outputs.csv_path {
        Some(path) => write_file(path, &csv)?,
        None => stdout.push_str(&csv),
    }
    if let Some(path) = &config.outputs.report_path {
        write_file(path, &to_json(&report))?;
    }
    Ok((
        report,
        CommandOutput {
            stdout,
            exit_code: exit::PASS,
        },
    ))
}

/// One verdict line per claim; exit 0 iff every claim passes.
pub fn cmd_verify(
    config: &AnalysisConfig,
    options: AuditOptions,
) -> Result<(AuditReport, CommandOutput)> {
    let report = audit(config, options)?;
    if let Some(path) = &config.outputs.report_path {
        write_file(path, &to_json(&report))?;
    }
    let mut stdout = render_table(&report.claims);
    let _ = writeln!(
        stdout,
        "verdict: {}",
        if report.all_pass {
            "all claims hold"
        } else {
            "claim failure"
        }
    );
    let exit_code = if report.all_pass {
        exit::PASS
    } else {
        exit::CLAIM_FAILED
    };
    Ok((report, CommandOutput { stdout, exit_code }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_requires_exactly_one_system_source() {
        assert!(AnalysisConfig::from_json("{}").is_err());
        let both = r#"{"preset": "scalar-toy", "system": {"a0": [[-1]], "a1": [[0]], "b0": [[0]], "b1": [[0]], "w": [[1]]}}"#;
        assert!(matches!(
            AnalysisConfig::from_json(both),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn explicit_system_parses_with_defaults() {
        let cfg = AnalysisConfig::from_json(
            r#"{"system": {"a0": [[-1]], "a1": [[0]], "b0": [[0]], "b1": [[0]], "w": [[1]]},
                "numerics": {"rel_tol": 1e-9}}"#,
        )
        .unwrap();
        assert_eq!(cfg.spec, preset_system(SCALAR_PRESET).unwrap());
        assert_eq!(cfg.numerics.rel_tol, 1e-9);
        assert_eq!(cfg.numerics.dt, 1e-3);
        assert_eq!(cfg.label, "custom");
    }

    #[test]
    fn rejects_bad_configs() {
        let asym = r#"{"system": {"a0": [[-1,0],[0,-1]], "a1": [[0,0],[0,0]], "b0": [[0,0],[0,0]],
                       "b1": [[0,0],[0,0]], "w": [[1,0.5],[0,1]]}}"#;
        assert!(matches!(
            AnalysisConfig::from_json(asym),
            Err(Error::InvalidSystem(_))
        ));
        let neg = r#"{"preset": "scalar-toy", "numerics": {"dt": -1}}"#;
        assert!(matches!(
            AnalysisConfig::from_json(neg),
            Err(Error::Config(_))
        ));
        let typo = r#"{"preset": "scalar-toy", "numerics": {"dtt": 1}}"#;
        assert!(AnalysisConfig::from_json(typo).is_err());
        assert!(AnalysisConfig::from_json(r#"{"preset": "nope"}"#).is_err());
        let wrong_n = r#"{"system": {"n": 2, "a0": [[-1]], "a1": [[0]], "b0": [[0]], "b1": [[0]], "w": [[1]]}}"#;
        assert!(AnalysisConfig::from_json(wrong_n).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), exit::USAGE);
        assert_eq!(
            exit_code_for(&Error::Instability("x".into())),
            exit::NUMERICAL
        );
    }

    #[test]
    fn csv_layout() {
        let u = LyapunovSamples::new(
            1.0,
            vec![
                DenseMatrix::identity(2),
                DenseMatrix::identity(2).scale(0.5),
                DenseMatrix::identity(2),
            ],
        )
        .unwrap();
        let csv = lyapunov_csv(&u);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("tau,u11,u12,u21,u22"));
        let zero_row: Vec<f64> = lines
            .nth(1)
            .unwrap()
            .split(',')
            .map(|x| x.parse().unwrap())
            .collect();
        assert_eq!(zero_row, vec![0.0, 0.5, 0.0, 0.0, 0.5]);
        assert!(csv.contains("-1.0000000000000000e0,"));
    }

    #[test]
    fn scalar_toy_audit_without_oracle() {
        let cfg = AnalysisConfig::from_preset(SCALAR_PRESET).unwrap();
        let report = audit(&cfg, AuditOptions::default()).unwrap();
        assert!(report.all_pass, "{}", render_table(&report.claims));
        assert_eq!(
            (report.theorem1.plus.rank, report.theorem1.minus.rank),
            (2, 2)
        );
        assert!(report.oracle.is_none());
    }
}
