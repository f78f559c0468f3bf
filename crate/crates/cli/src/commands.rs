//! Command dispatch: each command turns a problem file into one document and
//! an exit status (0 positive verdict, 1 negative verdict, 2 error).

use std::path::{Path, PathBuf};

use mimo_ncs::analysis::{self, Consistency, CovarianceTrajectory, Verdict};
use mimo_ncs::codesign::{self, CoDesign, CodesignOptions};
use mimo_ncs::cyclic::{self, CyclicDecomposition};
use mimo_ncs::majorize;
use mimo_ncs::numerics;
use mimo_ncs::plantmodel::{self, ChannelEnsemble};
use mimo_ncs::Error;

use crate::emit::{self, Format};
use crate::error::CliError;
use crate::problem::{parse_problem_file, ProblemFile};
use crate::report::{
    AnalyzeDoc, CheckDoc, CodesignDoc, CorollaryDoc, DecomposeDoc, Document, ErrorDoc, Payload,
    PrefixRow, SimulateDoc, ValidateDoc, SCHEMA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Decompose,
    Check,
    Codesign,
    Analyze,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Decompose => "decompose",
            Command::Check => "check",
            Command::Codesign => "codesign",
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
        }
    }
}

/// Result of a command before rendering.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub payload: Payload,
    pub trajectory: Option<CovarianceTrajectory>,
}

impl Outcome {
    fn new(exit_code: i32, payload: Payload) -> Self {
        Outcome {
            exit_code,
            payload,
            trajectory: None,
        }
    }
}

fn verdict_code(positive: bool) -> i32 {
    if positive {
        0
    } else {
        1
    }
}

/// Decomposition from the file when present, otherwise computed with the
/// file's seed.
fn decomposition(pf: &ProblemFile) -> Result<CyclicDecomposition, Error> {
    match &pf.decomposition {
        Some(d) => Ok(d.clone()),
        None => cyclic::cyclic_decompose(&pf.plant, pf.options.seed),
    }
}

/// The design named in the file, or a synthesized one.
fn design(pf: &ProblemFile) -> Result<CoDesign, Error> {
    if let Some(spec) = &pf.design {
        let u = numerics::nearest_isometry(&spec.u);
        let projection = (&u - &spec.u).amax();
        let d = decomposition(pf)?;
        let mut lambda: Vec<f64> = d.h.iter().copied().filter(|&h| h > 0.0).collect();
        lambda.resize(u.ncols(), 0.0);
        let mut cd = CoDesign::from_parts(
            &pf.plant,
            &pf.channels,
            spec.f.clone(),
            u,
            pf.options.epsilon.unwrap_or(spec.epsilon),
            Some(&lambda),
        )?;
        cd.notes.push(format!(
            "given design; U moved by at most {projection:.3e} onto the nearest isometry"
        ));
        cd.margins = analysis::analyze(&pf.plant, &cd, &pf.channels).margins;
        return Ok(cd);
    }
    codesign::codesign_with(
        &pf.plant,
        &pf.channels,
        &CodesignOptions {
            epsilon: pf.options.epsilon,
            seed: pf.options.seed,
            decomposition: pf.decomposition.clone(),
        },
    )
}

fn codesign_doc(pf: &ProblemFile, cd: &CoDesign) -> CodesignDoc {
    CodesignDoc::new(cd, codesign::codec_residual(&pf.channels, &cd.t, &cd.r))
}

/// Errors that are verdicts rather than failures.
fn negative(e: &Error) -> bool {
    matches!(e, Error::Infeasible { .. } | Error::EpsilonExhausted { .. })
}

pub fn run_command(cmd: Command, pf: &ProblemFile) -> Result<Outcome, CliError> {
    match cmd {
        Command::Validate => {
            let r = plantmodel::validate_plant(&pf.plant);
            let code = verdict_code(r.stabilizable);
            Ok(Outcome::new(
                code,
                Payload::Validate(ValidateDoc::new(pf.plant.n(), pf.plant.m(), &r)),
            ))
        }
        Command::Decompose => {
            let (source, d) = match &pf.decomposition {
                Some(d) => ("supplied", d.clone()),
                None => (
                    "computed",
                    cyclic::cyclic_decompose(&pf.plant, pf.options.seed)?,
                ),
            };
            let r = cyclic::verify_decomposition(&pf.plant, &d);
            Ok(Outcome::new(
                verdict_code(r.passed()),
                Payload::Decompose(DecomposeDoc::new(source, &d, &r)),
            ))
        }
        Command::Check => check(pf),
        Command::Codesign => match design(pf) {
            Ok(cd) => Ok(Outcome::new(0, Payload::Codesign(codesign_doc(pf, &cd)))),
            Err(e) if negative(&e) => Ok(Outcome::new(1, error_payload(&e.into()))),
            Err(e) => Err(e.into()),
        },
        Command::Analyze => match design(pf) {
            Ok(cd) => {
                let r = analysis::analyze(&pf.plant, &cd, &pf.channels);
                let limits = match &pf.channels {
                    ChannelEnsemble::Awgn { powers, .. } => Some(powers.clone()),
                    ChannelEnsemble::Fading { .. } => None,
                };
                let decay = match &pf.channels {
                    ChannelEnsemble::Fading { .. } => Some(analysis::covariance_decay_rate(
                        &pf.plant,
                        &cd,
                        &pf.channels,
                    )?),
                    ChannelEnsemble::Awgn { .. } => None,
                };
                Ok(Outcome::new(
                    verdict_code(r.verdict == Verdict::Stabilized),
                    Payload::Analyze(AnalyzeDoc::new(&r, limits, decay, codesign_doc(pf, &cd))),
                ))
            }
            Err(e) if negative(&e) => Ok(Outcome::new(1, error_payload(&e.into()))),
            Err(e) => Err(e.into()),
        },
        Command::Simulate => simulate(pf),
    }
}

fn check(pf: &ProblemFile) -> Result<Outcome, CliError> {
    let d = decomposition(pf)?;
    let c = pf.channels.capacities();
    let demand = codesign::demand_vector(&d.h, c.len());
    let verdict = codesign::feasibility(&c, &d.h)?;

    let len = c.len().max(demand.len());
    let ascending = |v: &[f64]| {
        let mut v = v.to_vec();
        v.resize(len, 0.0);
        v.sort_by(f64::total_cmp);
        v
    };
    let (ca, da) = (ascending(&c), ascending(&demand));
    let (mut cp, mut dp) = (0.0, 0.0);
    let rows = (0..len)
        .map(|j| {
            cp += ca[j];
            dp += da[j];
            PrefixRow {
                j: j + 1,
                capacity: ca[j],
                demand: da[j],
                capacity_prefix: cp,
                demand_prefix: dp,
                slack: verdict.slack[j],
            }
        })
        .collect();

    let corollary = if pf.decomposition.is_none() {
        Some(CorollaryDoc::from(&codesign::check_corollaries(
            &pf.plant,
            &pf.channels,
        )?))
    } else {
        None
    };
    Ok(Outcome::new(
        verdict_code(verdict.holds),
        Payload::Check(CheckDoc {
            capacities: c.clone(),
            demand,
            relation: "strict_weak_above".into(),
            strict_margin: majorize::strict_margin(&c),
            holds: verdict.holds,
            violated_prefix: verdict.violated_prefix().map(|j| j + 1),
            rows,
            corollary,
        }),
    ))
}

fn simulate(pf: &ProblemFile) -> Result<Outcome, CliError> {
    if let ChannelEnsemble::Awgn { .. } = pf.channels {
        return Err(Error::Unsupported(
            "simulate integrates second moments under fading subchannels; use analyze for AWGN"
                .into(),
        )
        .into());
    }
    let cd = match design(pf) {
        Ok(cd) => cd,
        Err(e) if negative(&e) => return Ok(Outcome::new(1, error_payload(&e.into()))),
        Err(e) => return Err(e.into()),
    };
    let (plant, ch) = (&pf.plant, &pf.channels);
    let t_end = match pf.options.t_end {
        Some(t) => t,
        None => analysis::default_horizon(plant, &cd, ch)?,
    };
    let dt = match pf.options.dt {
        Some(dt) => dt,
        None => analysis::default_dt(plant, &cd)?,
    };
    let ms = analysis::ms_norm(
        &analysis::closed_loop(plant, &cd, ch)?,
        &match ch {
            ChannelEnsemble::Fading { means, variances } => analysis::fading_phi(means, variances),
            ChannelEnsemble::Awgn { .. } => unreachable!(),
        },
    )?;
    let initial = plant.x0().norm_squared();

    let (trajectory, diverged_at) =
        match analysis::simulate_fading_covariance(plant, &cd, ch, t_end, dt) {
            Ok(tr) => (Some(tr), None),
            Err(Error::Diverged { time }) => (None, Some(time)),
            Err(e) => return Err(e.into()),
        };
    let final_f = trajectory
        .as_ref()
        .and_then(|t| t.frobenius.last().copied());
    let ratio = final_f.map(|f| f / initial);
    let consistency = match analysis::classify_consistency(ms, ratio.unwrap_or(f64::INFINITY)) {
        Consistency::Consistent => "consistent",
        Consistency::Inconsistent => "inconsistent",
        Consistency::Indeterminate => "indeterminate",
    };
    let doc = SimulateDoc {
        t_end,
        dt,
        samples: trajectory.as_ref().map_or(0, |t| t.len()),
        initial_frobenius: initial,
        final_frobenius: final_f,
        decay_ratio: ratio,
        diverged_at,
        ms_norm: ms,
        consistency: consistency.into(),
        trajectory_file: None,
    };
    Ok(Outcome {
        exit_code: verdict_code(ratio.is_some_and(|r| r < 1.0)),
        payload: Payload::Simulate(doc),
        trajectory,
    })
}

fn error_payload(e: &CliError) -> Payload {
    let line = match e {
        CliError::Parse { line, .. } => Some(*line),
        CliError::Core { line, .. } => *line,
        _ => None,
    };
    Payload::Error(ErrorDoc {
        code: e.code().into(),
        message: e.to_string(),
        line,
    })
}

/// Command-line overrides applied on top of the file's `[options]`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Everything a run prints: the text for stdout and stderr, and the files it
/// wrote.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rendered {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
    pub written: Vec<PathBuf>,
}

fn document(cmd: Command, exit_code: i32, result: Payload) -> Document {
    Document {
        schema: SCHEMA.into(),
        command: cmd.name().into(),
        exit_code,
        result,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn render_error(cmd: Command, format: Format, e: &CliError) -> Rendered {
    let doc = document(cmd, 2, error_payload(e));
    let mut r = Rendered {
        exit_code: 2,
        ..Rendered::default()
    };
    match format {
        Format::Machine => r.stdout = emit::machine(&doc),
        Format::Human | Format::Table => r.stderr = emit::human(&doc),
    }
    r
}

/// Parses `text`, runs `cmd` and renders the result in `format`.
///
/// `simulate` writes its trajectory to `--out` (or the file's `output`
/// option); with `--format table` and no path the trajectory goes to
/// stdout. Other commands write their document to `--out` when given.
pub fn execute(cmd: Command, text: &str, format: Format, ov: &Overrides) -> Rendered {
    match execute_inner(cmd, text, format, ov) {
        Ok(r) => r,
        Err(e) => render_error(cmd, format, &e),
    }
}

fn execute_inner(
    cmd: Command,
    text: &str,
    format: Format,
    ov: &Overrides,
) -> Result<Rendered, CliError> {
    if format == Format::Table && !matches!(cmd, Command::Check | Command::Simulate) {
        return Err(CliError::Usage(format!(
            "--format table applies to check and simulate, not {}",
            cmd.name()
        )));
    }
    let mut pf = parse_problem_file(text)?;
    if let Some(s) = ov.seed {
        pf.options.seed = s;
    }
    if ov.epsilon.is_some() {
        pf.options.epsilon = ov.epsilon;
    }
    if ov.t_end.is_some() {
        pf.options.t_end = ov.t_end;
    }
    if ov.dt.is_some() {
        pf.options.dt = ov.dt;
    }

    let mut outcome = run_command(cmd, &pf)?;
    let mut rendered = Rendered {
        exit_code: outcome.exit_code,
        ..Rendered::default()
    };

    let trajectory_path = if cmd == Command::Simulate {
        ov.out
            .clone()
            .or_else(|| pf.options.output.as_ref().map(PathBuf::from))
    } else {
        None
    };
    let csv = outcome.trajectory.as_ref().map(emit::trajectory_csv);
    if let (Some(path), Some(csv)) = (&trajectory_path, &csv) {
        write_file(path, csv)?;
        rendered.written.push(path.clone());
        if let Payload::Simulate(s) = &mut outcome.payload {
            s.trajectory_file = Some(path.display().to_string());
        }
    }

    let doc = document(cmd, outcome.exit_code, outcome.payload);
    let text = match (format, &doc.result) {
        (Format::Machine, _) => emit::machine(&doc),
        (Format::Human, _) | (Format::Table, Payload::Error(_)) => emit::human(&doc),
        (Format::Table, Payload::Check(c)) => emit::check_table(c),
        (Format::Table, _) => match (&trajectory_path, csv) {
            (None, Some(csv)) => csv,
            _ => String::new(),
        },
    };

    match (&ov.out, cmd) {
        (Some(path), c) if c != Command::Simulate => {
            write_file(path, &text)?;
            rendered.written.push(path.clone());
        }
        _ => rendered.stdout = text,
    }
    Ok(rendered)
}

/// Reads the problem file at `path` and calls [`execute`].
pub fn execute_path(cmd: Command, path: &Path, format: Format, ov: &Overrides) -> Rendered {
    match std::fs::read_to_string(path) {
        Ok(text) => execute(cmd, &text, format, ov),
        Err(e) => render_error(
            cmd,
            format,
            &CliError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            },
        ),
    }
}
