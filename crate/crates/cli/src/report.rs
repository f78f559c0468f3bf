//! Serializable documents emitted by the commands. Field names are part of
//! the machine-readable format; matrices are row-major nested arrays.

use mimo_ncs::analysis::{AnalysisReport, Verdict};
use mimo_ncs::codesign::{CoDesign, CorollaryReport};
use mimo_ncs::cyclic::{CyclicDecomposition, DecompositionReport};
use mimo_ncs::plantmodel::{ChannelKind, PlantReport};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Identifier written into every machine-readable document.
pub const SCHEMA: &str = "mimo-ncs/report/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub schema: String,
    pub command: String,
    pub exit_code: i32,
    pub result: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Validate(ValidateDoc),
    Decompose(DecomposeDoc),
    Check(CheckDoc),
    Codesign(CodesignDoc),
    Analyze(AnalyzeDoc),
    Simulate(SimulateDoc),
    Error(ErrorDoc),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

pub fn cx_list(v: &[Complex64]) -> Vec<Cx> {
    v.iter().copied().map(Cx::from).collect()
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateDoc {
    pub n: usize,
    pub m: usize,
    pub stabilizable: bool,
    pub unstable: bool,
    pub entropy: f64,
    pub eigenvalues: Vec<Cx>,
    pub axis_eigenvalues: Vec<Cx>,
    pub uncontrollable_unstable: Vec<Cx>,
}

impl ValidateDoc {
    pub fn new(n: usize, m: usize, r: &PlantReport) -> Self {
        ValidateDoc {
            n,
            m,
            stabilizable: r.stabilizable,
            unstable: r.unstable,
            entropy: r.entropy,
            eigenvalues: cx_list(&r.eigenvalues),
            axis_eigenvalues: cx_list(&r.axis_eigenvalues),
            uncontrollable_unstable: cx_list(&r.uncontrollable_unstable),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDoc {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDoc {
    pub name: String,
    pub passed: bool,
    /// Absent when the residual could not be computed.
    pub residual: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeDoc {
    /// `"computed"` or `"supplied"`.
    pub source: String,
    pub k: usize,
    pub seed: u64,
    pub attempt: usize,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub b_bar: Vec<Vec<f64>>,
    pub blocks: Vec<BlockDoc>,
    pub h: Vec<f64>,
    pub verified: bool,
    pub checks: Vec<InvariantDoc>,
}

impl DecomposeDoc {
    pub fn new(source: &str, d: &CyclicDecomposition, r: &DecompositionReport) -> Self {
        DecomposeDoc {
            source: source.into(),
            k: d.k(),
            seed: d.seed,
            attempt: d.attempt,
            p: rows(&d.p),
            q: rows(&d.q),
            b_bar: rows(&d.b_bar),
            blocks: d
                .blocks
                .iter()
                .zip(&d.h)
                .map(|(b, h)| BlockDoc {
                    a: rows(&b.a),
                    b: b.b.clone(),
                    entropy: *h,
                })
                .collect(),
            h: d.h.clone(),
            verified: r.passed(),
            checks: r
                .checks
                .iter()
                .map(|c| InvariantDoc {
                    name: c.name.into(),
                    passed: c.passed,
                    residual: Some(c.residual).filter(|r| r.is_finite()),
                    detail: c.detail.clone(),
                })
                .collect(),
        }
    }
}

/// One row of the ascending prefix-sum comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixRow {
    pub j: usize,
    pub capacity: f64,
    pub demand: f64,
    pub capacity_prefix: f64,
    pub demand_prefix: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryDoc {
    pub applicable: bool,
    pub reason: String,
    pub unstable_blocks: usize,
    pub total_capacity: f64,
    pub entropy: f64,
    pub simplified: bool,
    pub full: bool,
    pub agree: bool,
}

impl From<&CorollaryReport> for CorollaryDoc {
    fn from(r: &CorollaryReport) -> Self {
        CorollaryDoc {
            applicable: r.applicable,
            reason: r.reason.clone(),
            unstable_blocks: r.unstable_blocks,
            total_capacity: r.total_capacity,
            entropy: r.entropy,
            simplified: r.simplified,
            full: r.full,
            agree: r.agree(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckDoc {
    pub capacities: Vec<f64>,
    pub demand: Vec<f64>,
    pub relation: String,
    pub strict_margin: f64,
    pub holds: bool,
    pub violated_prefix: Option<usize>,
    pub rows: Vec<PrefixRow>,
    pub corollary: Option<CorollaryDoc>,
}

fn kind_name(k: ChannelKind) -> String {
    match k {
        ChannelKind::Awgn => "awgn".into(),
        ChannelKind::Fading => "fading".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodesignDoc {
    pub channel: String,
    pub f: Vec<Vec<f64>>,
    pub t: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub gamma: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub active_inputs: usize,
    pub margins: Vec<f64>,
    pub codec_residual: f64,
    pub notes: Vec<String>,
}

impl CodesignDoc {
    pub fn new(cd: &CoDesign, codec_residual: f64) -> Self {
        CodesignDoc {
            channel: kind_name(cd.kind),
            f: rows(&cd.f),
            t: rows(&cd.t),
            r: rows(&cd.r),
            epsilon: cd.epsilon,
            gamma: cd.gamma.clone(),
            u: rows(&cd.u),
            active_inputs: cd.active_inputs,
            margins: cd.margins.clone(),
            codec_residual,
            notes: cd.notes.clone(),
        }
    }
}

pub fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Stabilized => "stabilized",
        Verdict::Unstable => "unstable",
        Verdict::PowerViolation => "power_violation",
        Verdict::MsNormViolation => "ms_norm_violation",
    }
    .into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeDoc {
    pub channel: String,
    pub verdict: String,
    pub closed_loop_spectrum: Vec<Cx>,
    pub channel_powers: Option<Vec<f64>>,
    pub power_limits: Option<Vec<f64>>,
    pub ms_norm: Option<f64>,
    /// Spectral abscissa of the second-moment generator (fading only).
    pub covariance_decay_rate: Option<f64>,
    pub margins: Vec<f64>,
    pub design: CodesignDoc,
}

impl AnalyzeDoc {
    pub fn new(
        r: &AnalysisReport,
        power_limits: Option<Vec<f64>>,
        decay: Option<f64>,
        design: CodesignDoc,
    ) -> Self {
        AnalyzeDoc {
            channel: kind_name(r.kind),
            verdict: verdict_name(r.verdict),
            closed_loop_spectrum: cx_list(&r.closed_loop_spectrum),
            channel_powers: r.channel_powers.clone(),
            power_limits,
            ms_norm: r.ms_norm,
            covariance_decay_rate: decay,
            margins: r.margins.clone(),
            design,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateDoc {
    pub t_end: f64,
    pub dt: f64,
    pub samples: usize,
    pub initial_frobenius: f64,
    pub final_frobenius: Option<f64>,
    /// `‖X(t_end)‖_F / ‖X(0)‖_F`; absent when the integration diverged.
    pub decay_ratio: Option<f64>,
    pub diverged_at: Option<f64>,
    pub ms_norm: f64,
    /// `"consistent"`, `"inconsistent"` or `"indeterminate"`.
    pub consistency: String,
    pub trajectory_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub code: String,
    pub message: String,
    pub line: Option<usize>,
}
