//! Closed-loop verification of a design: channel powers for AWGN links, the
//! mean-square norm for fading links, mixed norms, and the second-moment
//! (covariance) dynamics under multiplicative noise.
//!
//! All `H₂` quantities come from Lyapunov solves, never from frequency grids.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::codesign::CoDesign;
use crate::error::{Error, Result};
use crate::numerics::{self, Trajectory};
use crate::plantmodel::{ChannelEnsemble, ChannelKind, Plant};

/// Most samples kept in a simulated covariance trajectory.
pub const MAX_TRAJECTORY_SAMPLES: usize = 10_000;

/// Band around one inside which the MS-norm and simulation verdicts are not compared.
pub const INDETERMINATE_BAND: f64 = 1e-3;

/// Strictly proper realization `C(sI − A)⁻¹B`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub hurwitz: bool,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() || c.ncols() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "realization with A {:?}, B {:?}, C {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        let hurwitz = numerics::is_hurwitz(&a)?;
        Ok(StateSpace { a, b, c, hurwitz })
    }

    /// The same system with its inputs scaled: `G(s)·diag(w)`.
    pub fn scale_inputs(&self, w: &[f64]) -> Self {
        StateSpace {
            b: &self.b * DMatrix::from_diagonal(&DVector::from_column_slice(w)),
            ..self.clone()
        }
    }

    /// The same system with its outputs scaled: `diag(w)·G(s)`.
    pub fn scale_outputs(&self, w: &[f64]) -> Self {
        StateSpace {
            c: DMatrix::from_diagonal(&DVector::from_column_slice(w)) * &self.c,
            ..self.clone()
        }
    }

    fn require_hurwitz(&self) -> Result<()> {
        if self.hurwitz {
            Ok(())
        } else {
            Err(Error::NotHurwitz {
                abscissa: numerics::spectral_abscissa(&self.a)?,
            })
        }
    }
}

/// `Acl = A + BF`, `Bcl = BR` (AWGN) or `BRM` (fading), `Ccl = TF`.
pub fn closed_loop(plant: &Plant, cd: &CoDesign, ch: &ChannelEnsemble) -> Result<StateSpace> {
    let acl = plant.a() + plant.b() * &cd.f;
    let br = plant.b() * &cd.r;
    let bcl = match ch {
        ChannelEnsemble::Awgn { .. } => br,
        ChannelEnsemble::Fading { means, .. } => {
            br * DMatrix::from_diagonal(&DVector::from_column_slice(means))
        }
    };
    StateSpace::new(acl, bcl, &cd.t * &cd.f)
}

/// Matrix of squared entry norms `‖G_ij‖₂²`, one Lyapunov solve per input.
pub fn h2_gramian_entrywise(ss: &StateSpace) -> Result<DMatrix<f64>> {
    ss.require_hurwitz()?;
    let (q, p) = (ss.c.nrows(), ss.b.ncols());
    let mut out = DMatrix::zeros(q, p);
    for j in 0..p {
        let bj = ss.b.column(j);
        if bj.iter().all(|v| *v == 0.0) {
            continue;
        }
        let l = numerics::solve_lyapunov(&ss.a, &(bj * bj.transpose()))?;
        let cl = &ss.c * l * ss.c.transpose();
        for i in 0..q {
            out[(i, j)] = cl[(i, i)].max(0.0);
        }
    }
    Ok(out)
}

/// `‖G‖₂²` from a single Lyapunov solve with `Q = BB'`.
pub fn h2_norm_squared(ss: &StateSpace) -> Result<f64> {
    ss.require_hurwitz()?;
    let l = numerics::solve_lyapunov(&ss.a, &(&ss.b * ss.b.transpose()))?;
    Ok((&ss.c * l * ss.c.transpose()).trace())
}

/// `E[q_i²]`: diagonal of `Ccl·L·Ccl'` with `Acl·L + L·Acl' + Bcl·N·Bcl' = 0`.
pub fn channel_powers_awgn(plant: &Plant, cd: &CoDesign, noise: &[f64]) -> Result<Vec<f64>> {
    let ch = ChannelEnsemble::Awgn {
        powers: vec![1.0; noise.len()],
        noise: noise.to_vec(),
    };
    let ss = closed_loop(plant, cd, &ch)?;
    ss.require_hurwitz()?;
    let n_mat = DMatrix::from_diagonal(&DVector::from_column_slice(noise));
    let q = &ss.b * n_mat * ss.b.transpose();
    let l = numerics::solve_lyapunov(&ss.a, &q)?;
    let cov = &ss.c * l * ss.c.transpose();
    Ok((0..cov.nrows()).map(|i| cov[(i, i)].max(0.0)).collect())
}

/// `sqrt(ρ(Z))` for a nonnegative matrix of squared norms.
pub fn ms_norm_of_entries(z: &DMatrix<f64>) -> Result<f64> {
    Ok(numerics::spectral_radius(z)?.sqrt())
}

/// Mean-square norm of `G(s)·diag(phi)`.
pub fn ms_norm(ss: &StateSpace, phi: &[f64]) -> Result<f64> {
    if ss.b.ncols() != phi.len() || ss.c.nrows() != phi.len() {
        return Err(Error::DimensionMismatch(format!(
            "MS norm needs a square {0}x{0} transfer matrix, got {1}x{2}",
            phi.len(),
            ss.c.nrows(),
            ss.b.ncols()
        )));
    }
    ms_norm_of_entries(&h2_gramian_entrywise(&ss.scale_inputs(phi))?)
}

/// `Φ = M⁻¹Σ`.
pub fn fading_phi(means: &[f64], variances: &[f64]) -> Vec<f64> {
    means
        .iter()
        .zip(variances)
        .map(|(mu, s2)| s2.sqrt() / mu)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedNorms {
    /// `(max_j Σ_i ‖G_ij‖₂²)^{1/2}`
    pub norm_2_1: f64,
    /// `(max_i Σ_j ‖G_ij‖₂²)^{1/2}`
    pub norm_2_inf: f64,
}

pub fn mixed_norms_of_entries(z: &DMatrix<f64>) -> MixedNorms {
    let col = z.column_iter().map(|c| c.sum()).fold(0.0, f64::max);
    let row = z.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    MixedNorms {
        norm_2_1: col.sqrt(),
        norm_2_inf: row.sqrt(),
    }
}

pub fn mixed_norms(ss: &StateSpace) -> Result<MixedNorms> {
    Ok(mixed_norms_of_entries(&h2_gramian_entrywise(ss)?))
}

/// Diagonal scalings `w` (applied as `diag(w)⁻¹·G·diag(w)`) at which the
/// mixed norms meet the MS norm: `(for 2,∞; for 2,1)`.
///
/// With `Z = [‖G_ij‖₂²]`, the conjugated entries are `Z_ij·w_j²/w_i²`. Taking
/// `w² = v` (right Perron vector) makes every row sum `ρ`; taking
/// `w² = 1/u` (left Perron vector) makes every column sum `ρ`.
pub fn perron_scalings(z: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, v) = numerics::perron_vector(z)?;
    let (_, u) = numerics::perron_vector(&z.transpose())?;
    let floor = 1e-300;
    let row = v.iter().map(|x| x.max(floor).sqrt()).collect();
    let col = u.iter().map(|x| 1.0 / x.max(floor).sqrt()).collect();
    Ok((row, col))
}

/// Squared-norm matrix of `diag(w)⁻¹·G·diag(w)`.
pub fn conjugate_entries(z: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| {
        z[(i, j)] * (w[j] / w[i]).powi(2)
    })
}

/// Sampled second moment `X(t) = E[x(t)x(t)']`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<f64>>,
    pub frobenius: Vec<f64>,
}

impl CovarianceTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &DMatrix<f64>)> {
        self.times.last().copied().zip(self.states.last())
    }

    fn from_trajectory(t: Trajectory) -> Self {
        let frobenius = t.states.iter().map(|x| x.norm()).collect();
        CovarianceTrajectory {
            times: t.times,
            states: t.states,
            frobenius,
        }
    }
}

fn fading_params(ch: &ChannelEnsemble) -> Result<(&[f64], &[f64])> {
    match ch {
        ChannelEnsemble::Fading { means, variances } => Ok((means, variances)),
        ChannelEnsemble::Awgn { .. } => Err(Error::Unsupported(
            "covariance dynamics are defined for fading subchannels only".into(),
        )),
    }
}

/// Integrates `Ẋ = AclX + XAcl' + BR[Σ²⊙(TFXF'T')]R'B'` from `X(0) = x0·x0'`.
pub fn simulate_fading_covariance(
    plant: &Plant,
    cd: &CoDesign,
    ch: &ChannelEnsemble,
    t_end: f64,
    dt: f64,
) -> Result<CovarianceTrajectory> {
    let (_, variances) = fading_params(ch)?;
    let acl = plant.a() + plant.b() * &cd.f;
    let br = plant.b() * &cd.r;
    let tf = &cd.t * &cd.f;
    let s2 = variances.to_vec();
    let rhs = |x: &DMatrix<f64>| {
        let q = &tf * x * tf.transpose();
        let hadamard =
            DMatrix::from_diagonal(&DVector::from_fn(s2.len(), |i, _| s2[i] * q[(i, i)]));
        &acl * x + x * acl.transpose() + &br * hadamard * br.transpose()
    };
    let x0 = plant.x0() * plant.x0().transpose();
    let traj = numerics::integrate_linear_matrix_ode_decimated(
        rhs,
        &x0,
        t_end,
        dt,
        MAX_TRAJECTORY_SAMPLES,
    )?;
    Ok(CovarianceTrajectory::from_trajectory(traj))
}

/// Generator of the vectorized second-moment dynamics:
/// `I⊗Acl + Acl⊗I + Σ_i σ_i²·(G_i⊗G_i)` with `G_i = (BR e_i)(e_i'TF)`.
pub fn covariance_operator(
    plant: &Plant,
    cd: &CoDesign,
    ch: &ChannelEnsemble,
) -> Result<DMatrix<f64>> {
    let (_, variances) = fading_params(ch)?;
    let n = plant.n();
    let acl = plant.a() + plant.b() * &cd.f;
    let eye = DMatrix::<f64>::identity(n, n);
    let mut op = eye.kronecker(&acl) + acl.kronecker(&eye);
    let br = plant.b() * &cd.r;
    let tf = &cd.t * &cd.f;
    for (i, s2) in variances.iter().enumerate() {
        let g = br.column(i) * tf.row(i);
        op += g.kronecker(&g) * *s2;
    }
    Ok(op)
}

/// Spectral abscissa of [`covariance_operator`]: negative iff the second
/// moment decays.
pub fn covariance_decay_rate(plant: &Plant, cd: &CoDesign, ch: &ChannelEnsemble) -> Result<f64> {
    numerics::spectral_abscissa(&covariance_operator(plant, cd, ch)?)
}

/// Default step: `0.01 / |spectral abscissa of A + BF|`.
pub fn default_dt(plant: &Plant, cd: &CoDesign) -> Result<f64> {
    let alpha = numerics::spectral_abscissa(&(plant.a() + plant.b() * &cd.f))?;
    Ok(0.01 / alpha.abs().max(1e-6))
}

/// Horizon over which the slowest second-moment mode shrinks by `1e4`
/// (a fixed multiple of the slowest closed-loop time constant when the
/// second moment does not decay).
pub fn default_horizon(plant: &Plant, cd: &CoDesign, ch: &ChannelEnsemble) -> Result<f64> {
    let rate = covariance_decay_rate(plant, cd, ch)?;
    if rate < 0.0 {
        return Ok(1e4_f64.ln() / rate.abs());
    }
    let alpha = numerics::spectral_abscissa(&(plant.a() + plant.b() * &cd.f))?;
    Ok(10.0 / alpha.abs().max(1e-6))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stabilized,
    Unstable,
    PowerViolation,
    MsNormViolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub kind: ChannelKind,
    pub verdict: Verdict,
    pub closed_loop_spectrum: Vec<Complex64>,
    /// AWGN only.
    pub channel_powers: Option<Vec<f64>>,
    /// Fading only.
    pub ms_norm: Option<f64>,
    /// `P_i − E[q_i²]` (AWGN) or `1 − ‖T(s)Φ‖_MS` (fading).
    pub margins: Vec<f64>,
}

/// Full verdict on a design. Never fails: numerical trouble shows up as
/// [`Verdict::Unstable`].
pub fn analyze(plant: &Plant, cd: &CoDesign, ch: &ChannelEnsemble) -> AnalysisReport {
    let acl = plant.a() + plant.b() * &cd.f;
    let spectrum = numerics::eigenvalues(&acl).unwrap_or_default();
    let hurwitz = !spectrum.is_empty() && spectrum.iter().all(|l| l.re < 0.0);
    let mut report = AnalysisReport {
        kind: ch.kind(),
        verdict: Verdict::Unstable,
        closed_loop_spectrum: spectrum,
        channel_powers: None,
        ms_norm: None,
        margins: Vec::new(),
    };
    if !hurwitz {
        return report;
    }
    match ch {
        ChannelEnsemble::Awgn { powers, noise } => {
            let Ok(q) = channel_powers_awgn(plant, cd, noise) else {
                return report;
            };
            let margins: Vec<f64> = powers.iter().zip(&q).map(|(p, e)| p - e).collect();
            let ok = margins.iter().zip(powers).all(|(m, p)| *m >= 1e-9 * p);
            report.verdict = if ok {
                Verdict::Stabilized
            } else {
                Verdict::PowerViolation
            };
            report.channel_powers = Some(q);
            report.margins = margins;
        }
        ChannelEnsemble::Fading { means, variances } => {
            let ms = closed_loop(plant, cd, ch)
                .and_then(|ss| ms_norm(&ss, &fading_phi(means, variances)));
            let Ok(ms) = ms else {
                return report;
            };
            report.verdict = if ms < 1.0 {
                Verdict::Stabilized
            } else {
                Verdict::MsNormViolation
            };
            report.ms_norm = Some(ms);
            report.margins = vec![1.0 - ms];
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    /// Both say mean-square stable, or both say unstable.
    Consistent,
    Inconsistent,
    /// MS norm within [`INDETERMINATE_BAND`] of one.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub ms_norm: f64,
    pub outcome: Consistency,
    /// `‖X(t_end)‖_F / ‖X(0)‖_F`, infinite on divergence.
    pub decay_ratio: f64,
    pub t_end: f64,
}

/// Verdict agreement for an MS norm and a decay ratio `‖X(t_end)‖_F / ‖X(0)‖_F`.
pub fn classify_consistency(ms: f64, ratio: f64) -> Consistency {
    if (ms - 1.0).abs() < INDETERMINATE_BAND {
        Consistency::Indeterminate
    } else if (ms < 1.0 && ratio < 1e-3) || (ms > 1.0 && ratio > 1.0) {
        Consistency::Consistent
    } else {
        Consistency::Inconsistent
    }
}

/// Compares the MS-norm verdict with the simulated second moment: a norm
/// below one must shrink `‖X‖_F` by `1e3` by `t_end`; a norm above one must
/// make it grow.
pub fn ms_consistency(
    plant: &Plant,
    cd: &CoDesign,
    ch: &ChannelEnsemble,
    t_end: f64,
    dt: f64,
) -> Result<ConsistencyReport> {
    let (means, variances) = fading_params(ch)?;
    let ms = ms_norm(&closed_loop(plant, cd, ch)?, &fading_phi(means, variances))?;
    let x0 = plant.x0().norm_squared();
    let ratio = match simulate_fading_covariance(plant, cd, ch, t_end, dt) {
        Ok(tr) => tr.frobenius.last().copied().unwrap_or(x0) / x0,
        Err(Error::Diverged { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(ConsistencyReport {
        ms_norm: ms,
        outcome: classify_consistency(ms, ratio),
        decay_ratio: ratio,
        t_end,
    })
}
