//! Joint synthesis of the feedback gain and the encoder/decoder pair.
//!
//! The pipeline decomposes the plant, checks the capacities against the
//! padded entropy vector, shapes the per-subchannel demand `γ`, realizes it
//! with an isometry `U`, and then halves `ε` until the closed loop passes
//! the analysis verdict.

use nalgebra::{DMatrix, DVector};

use crate::analysis::{self, Verdict};
use crate::cyclic::{self, CyclicDecomposition};
use crate::error::{Error, Result};
use crate::majorize::{self, OrderVerdict, Relation};
use crate::numerics;
use crate::plantmodel::{ChannelEnsemble, ChannelKind, Plant};

/// Number of `ε` values tried by the halving search.
pub const EPSILON_HALVINGS: usize = 60;

/// Tolerance on `RT = I` / `RMT = I`.
pub const CODEC_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CoDesign {
    pub kind: ChannelKind,
    /// Feedback gain, `m×n`.
    pub f: DMatrix<f64>,
    /// Encoder, `l×m`.
    pub t: DMatrix<f64>,
    /// Decoder, `m×l`.
    pub r: DMatrix<f64>,
    pub epsilon: f64,
    /// Per-subchannel demand, majorized by the padded entropy vector.
    pub gamma: Vec<f64>,
    /// Isometry realizing `gamma`, `l×m_active`.
    pub u: DMatrix<f64>,
    /// Inputs carried by the codec (`m` unless fewer subchannels than inputs).
    pub active_inputs: usize,
    /// Per-constraint slack of the accepted design (power or MS-norm margins).
    pub margins: Vec<f64>,
    pub notes: Vec<String>,
}

impl CoDesign {
    /// Builds a design from a given gain and isometry, with `Q = I`.
    /// `gamma` is read off as `diag(U·diag(λ)·U')` when `lambda` is given.
    pub fn from_parts(
        plant: &Plant,
        ch: &ChannelEnsemble,
        f: DMatrix<f64>,
        u: DMatrix<f64>,
        epsilon: f64,
        lambda: Option<&[f64]>,
    ) -> Result<Self> {
        if f.shape() != (plant.m(), plant.n()) {
            return Err(Error::DimensionMismatch(format!(
                "F must be {}x{}, got {:?}",
                plant.m(),
                plant.n(),
                f.shape()
            )));
        }
        if u.nrows() != ch.len() || u.ncols() != plant.m() {
            return Err(Error::DimensionMismatch(format!(
                "U must be {}x{}, got {:?}",
                ch.len(),
                plant.m(),
                u.shape()
            )));
        }
        let (t, r) = synthesize_codec(ch, &u, epsilon)?;
        let gamma = match lambda {
            Some(l) => (0..u.nrows())
                .map(|i| (0..u.ncols()).map(|j| u[(i, j)].powi(2) * l[j]).sum())
                .collect(),
            None => Vec::new(),
        };
        Ok(CoDesign {
            kind: ch.kind(),
            f,
            t,
            r,
            epsilon,
            gamma,
            active_inputs: u.ncols(),
            u,
            margins: Vec::new(),
            notes: Vec::new(),
        })
    }
}

/// Feedback gain in original coordinates: each block gets the optimal
/// single-input gain `f_i = −b_i'X_i`, unused inputs get zero rows.
pub fn synthesize_gain(d: &CyclicDecomposition) -> Result<DMatrix<f64>> {
    let n: usize = d.blocks.iter().map(|b| b.dim()).sum();
    let m = d.q.nrows();
    let mut f_dec = DMatrix::zeros(m, n);
    for ((i, blk), o) in d.blocks.iter().enumerate().zip(d.offsets()) {
        if i >= m {
            break;
        }
        let b = DMatrix::from_column_slice(blk.dim(), 1, &blk.b);
        let x = numerics::solve_care_stabilizing(&blk.a, &b)?;
        let f = -(b.transpose() * &x);
        let achieved = block_h2_squared(&blk.a, &b, &f)?;
        let want = 2.0 * d.h[i];
        if (achieved - want).abs() > 1e-6 * want.max(1.0) {
            return Err(Error::Inaccurate {
                residual: (achieved - want).abs(),
                tolerance: 1e-6 * want.max(1.0),
            });
        }
        f_dec.view_mut((i, o), (1, blk.dim())).copy_from(&f);
    }
    let p_inv =
        d.p.clone()
            .try_inverse()
            .ok_or_else(|| Error::DecompositionFailed("P is singular".into()))?;
    Ok(&d.q * f_dec * p_inv)
}

/// `‖f(sI − A − bf)⁻¹b‖₂²`.
fn block_h2_squared(a: &DMatrix<f64>, b: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<f64> {
    if f.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let acl = a + b * f;
    let l = numerics::solve_lyapunov(&acl, &(b * b.transpose()))?;
    Ok((f * l * f.transpose())[(0, 0)])
}

/// `D = diag(1, ε, …, ε^{m−1})`.
pub fn scaling_matrix(epsilon: f64, m: usize) -> DVector<f64> {
    DVector::from_iterator(m, (0..m).map(|i| epsilon.powi(i as i32)))
}

/// Encoder/decoder pair for isometry `u` (`l×m`) and scaling `epsilon`.
///
/// AWGN: `T = N^{1/2}UD⁻¹`, `R = DU'N^{−1/2}`. Fading: `T = |M|^{−1/2}UD⁻¹`,
/// `R = DU'·sign(M)|M|^{−1/2}`, which reduces to the textbook formula for
/// positive means and keeps `RMT = I` when some means are negative.
pub fn synthesize_codec(
    ch: &ChannelEnsemble,
    u: &DMatrix<f64>,
    epsilon: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if u.nrows() != ch.len() || u.ncols() == 0 || u.ncols() > u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "isometry must be {}xm with 1 <= m <= {}, got {:?}",
            ch.len(),
            ch.len(),
            u.shape()
        )));
    }
    let m = u.ncols();
    let d = scaling_matrix(epsilon, m);
    let d_inv = d.map(|v| 1.0 / v);
    let (left, right): (Vec<f64>, Vec<f64>) = match ch {
        ChannelEnsemble::Awgn { noise, .. } => {
            noise.iter().map(|&nv| (nv.sqrt(), 1.0 / nv.sqrt())).unzip()
        }
        ChannelEnsemble::Fading { means, .. } => means
            .iter()
            .map(|&mu| {
                let s = 1.0 / mu.abs().sqrt();
                (s, mu.signum() * s)
            })
            .unzip(),
    };
    let t = DMatrix::from_diagonal(&DVector::from_vec(left)) * u * DMatrix::from_diagonal(&d_inv);
    let r = DMatrix::from_diagonal(&d)
        * u.transpose()
        * DMatrix::from_diagonal(&DVector::from_vec(right));
    let residual = codec_residual(ch, &t, &r);
    if residual > CODEC_TOLERANCE {
        return Err(Error::CodecInvalid { residual });
    }
    Ok((t, r))
}

/// Largest entry of `|RT − I|` (AWGN) or `|RMT − I|` (fading).
pub fn codec_residual(ch: &ChannelEnsemble, t: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
    let prod = match ch {
        ChannelEnsemble::Awgn { .. } => r * t,
        ChannelEnsemble::Fading { means, .. } => {
            r * DMatrix::from_diagonal(&DVector::from_column_slice(means)) * t
        }
    };
    let k = prod.nrows();
    (prod - DMatrix::<f64>::identity(k, k))
        .iter()
        .fold(0.0, |a: f64, v| a.max(v.abs()))
}

/// Positive block entropies padded with zeros to at least `l` entries.
///
/// Zero-entropy blocks are dropped first: they need no communication and
/// would otherwise add zero-slack prefixes to the strict comparison.
pub fn demand_vector(h: &[f64], l: usize) -> Vec<f64> {
    let mut v: Vec<f64> = h.iter().copied().filter(|&x| x > 0.0).collect();
    if v.len() < l {
        v.resize(l, 0.0);
    }
    v
}

/// The strict weak majorization test between capacities and block entropies.
pub fn feasibility(capacities: &[f64], h: &[f64]) -> Result<OrderVerdict> {
    let demand = demand_vector(h, capacities.len());
    majorize::check_order_padded(capacities, &demand, Relation::StrictWeakAbove)
}

#[derive(Debug, Clone, Default)]
pub struct CodesignOptions {
    /// Use exactly this `ε` instead of the halving search.
    pub epsilon: Option<f64>,
    /// Seed for the randomized decomposition retries.
    pub seed: u64,
    /// A user-supplied decomposition, verified before use.
    pub decomposition: Option<CyclicDecomposition>,
}

/// Runs the full pipeline with default options.
pub fn codesign(plant: &Plant, ch: &ChannelEnsemble) -> Result<CoDesign> {
    codesign_with(plant, ch, &CodesignOptions::default())
}

pub fn codesign_with(
    plant: &Plant,
    ch: &ChannelEnsemble,
    opts: &CodesignOptions,
) -> Result<CoDesign> {
    let d = match &opts.decomposition {
        Some(d) => {
            let report = cyclic::verify_decomposition(plant, d);
            if !report.passed() {
                return Err(Error::DecompositionFailed(report.summary()));
            }
            d.clone()
        }
        None => cyclic::cyclic_decompose(plant, opts.seed)?,
    };
    let c = ch.capacities();
    let l = c.len();
    let m = plant.m();
    let verdict = feasibility(&c, &d.h)?;
    if !verdict.holds {
        let prefix = verdict.violated_prefix().unwrap_or(0);
        return Err(Error::Infeasible {
            prefix: prefix + 1,
            slack: verdict.slack[prefix],
            verdict: Box::new(verdict),
        });
    }
    let demand = demand_vector(&d.h, l);
    let gamma = majorize::construct_intermediate(&c, &demand)?;

    let unstable = d.unstable_blocks();
    let mut notes = Vec::new();
    let active = if l >= m {
        m
    } else if unstable == 0 {
        notes.push(format!(
            "{l} subchannels for {m} inputs: the plant is stable, the codec carries one idle input"
        ));
        1
    } else {
        notes.push(format!(
            "{l} subchannels for {m} inputs: the codec carries only the {unstable} inputs that drive unstable blocks"
        ));
        unstable
    };
    let mut lambda: Vec<f64> = d.h.iter().copied().filter(|&x| x > 0.0).collect();
    lambda.resize(active, 0.0);
    let u = majorize::schur_horn_isometry(&lambda, &gamma)?;
    let f = synthesize_gain(&d)?;

    let q_inv =
        d.q.clone()
            .try_inverse()
            .ok_or_else(|| Error::DecompositionFailed("Q is singular".into()))?;
    let q_head = d.q.columns(0, active).into_owned();
    let q_inv_head = q_inv.rows(0, active).into_owned();

    let schedule: Vec<f64> = match opts.epsilon {
        Some(e) => vec![e],
        None => (0..EPSILON_HALVINGS)
            .map(|i| 0.5f64.powi(i as i32))
            .collect(),
    };
    let mut tried = 0;
    for eps in schedule {
        tried += 1;
        let (t_p, r_p) = match synthesize_codec(ch, &u, eps) {
            Ok(tr) => tr,
            // smaller ε only amplifies the rounding in D⁻¹
            Err(Error::CodecInvalid { .. }) if opts.epsilon.is_none() => break,
            Err(e) => return Err(e),
        };
        let design = CoDesign {
            kind: ch.kind(),
            f: f.clone(),
            t: t_p * &q_inv_head,
            r: &q_head * r_p,
            epsilon: eps,
            gamma: gamma.clone(),
            u: u.clone(),
            active_inputs: active,
            margins: Vec::new(),
            notes: notes.clone(),
        };
        let report = analysis::analyze(plant, &design, ch);
        if report.verdict == Verdict::Stabilized {
            return Ok(CoDesign {
                margins: report.margins,
                ..design
            });
        }
    }
    Err(Error::EpsilonExhausted { tried })
}

/// Outcome of comparing the total-capacity criterion with the full test.
#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport {
    /// One unstable block, or equal capacities with enough subchannels.
    pub applicable: bool,
    pub reason: String,
    pub unstable_blocks: usize,
    pub total_capacity: f64,
    pub entropy: f64,
    /// `𝔠_total > H(A)` (certified with the same strict margin as the full test).
    pub simplified: bool,
    pub full: bool,
}

impl CorollaryReport {
    pub fn agree(&self) -> bool {
        self.simplified == self.full
    }
}

/// Checks whether the simplified criterion `𝔠_total > H(A)` applies and
/// whether it agrees with the full majorization test.
pub fn check_corollaries(plant: &Plant, ch: &ChannelEnsemble) -> Result<CorollaryReport> {
    let d = cyclic::cyclic_decompose(plant, 0)?;
    let c = ch.capacities();
    let total: f64 = c.iter().sum();
    let entropy: f64 = d.h.iter().sum();
    let unstable = d.unstable_blocks();
    let equal = c
        .iter()
        .all(|&x| (x - c[0]).abs() <= 1e-12 * c[0].abs().max(1.0));
    let (applicable, reason) = if unstable <= 1 {
        (true, "at most one unstable cyclic block".to_string())
    } else if equal && c.len() >= unstable {
        (true, "equal capacities on enough subchannels".to_string())
    } else if equal {
        (
            false,
            format!(
                "equal capacities but only {} subchannels for {unstable} unstable blocks",
                c.len()
            ),
        )
    } else {
        (
            false,
            format!("{unstable} unstable blocks and unequal capacities"),
        )
    };
    let simplified = total - entropy > majorize::strict_margin(&c);
    let full = feasibility(&c, &d.h)?.holds;
    Ok(CorollaryReport {
        applicable,
        reason,
        unstable_blocks: unstable,
        total_capacity: total,
        entropy,
        simplified,
        full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn reference_plant() -> Plant {
        Plant::new(
            diag(&[4.0, 2.0, 1.0, 1.0]),
            DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    fn awgn() -> ChannelEnsemble {
        ChannelEnsemble::awgn(vec![9.1, 3.1, 4.1], vec![1.0; 3]).unwrap()
    }

    fn fading() -> ChannelEnsemble {
        ChannelEnsemble::fading(vec![2.0, 0.6, 0.9], vec![0.35, 0.2, 0.25]).unwrap()
    }

    #[test]
    fn gain_for_reference_plant() {
        let d = cyclic::cyclic_decompose(&reference_plant(), 0).unwrap();
        let f = synthesize_gain(&d).unwrap();
        let want = DMatrix::from_row_slice(2, 4, &[-40.0, 36.0, -10.0, 0.0, 0.0, 0.0, 0.0, -2.0]);
        assert!((f - want).abs().max() < 1e-8);
    }

    #[test]
    fn gain_for_scalar_and_stable_blocks() {
        let p = Plant::new(diag(&[1.0]), diag(&[1.0])).unwrap();
        let f = synthesize_gain(&cyclic::cyclic_decompose(&p, 0).unwrap()).unwrap();
        assert!((f[(0, 0)] + 2.0).abs() < 1e-10);
        let p = Plant::new(
            diag(&[-1.0, -3.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let f = synthesize_gain(&cyclic::cyclic_decompose(&p, 0).unwrap()).unwrap();
        assert_eq!(f.abs().max(), 0.0);
    }

    #[test]
    fn stable_plant_over_fewer_subchannels_than_inputs() {
        let p = Plant::new(diag(&[-1.0, -2.0]), diag(&[1.0, 1.0])).unwrap();
        let ch = ChannelEnsemble::awgn(vec![0.5], vec![1.0]).unwrap();
        let cd = codesign(&p, &ch).unwrap();
        assert_eq!(cd.active_inputs, 1);
        assert_eq!(cd.f.abs().max(), 0.0);
        assert!(cd.notes[0].contains("stable"));
    }

    #[test]
    fn codec_identity_case() {
        let ch = ChannelEnsemble::awgn(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let (t, r) = synthesize_codec(&ch, &DMatrix::identity(2, 2), 1.0).unwrap();
        assert_eq!(t, DMatrix::identity(2, 2));
        assert_eq!(r, DMatrix::identity(2, 2));
    }

    #[test]
    fn codec_fading_with_negative_mean() {
        let ch = ChannelEnsemble::fading(vec![-2.0, 0.5], vec![0.1, 0.1]).unwrap();
        let u = majorize::schur_horn_isometry(&[1.0], &[0.4, 0.6]).unwrap();
        let (t, r) = synthesize_codec(&ch, &u, 0.5).unwrap();
        assert!(codec_residual(&ch, &t, &r) < 1e-14);
    }

    #[test]
    fn codec_rejects_bad_epsilon() {
        let ch = awgn();
        let u = DMatrix::identity(3, 2);
        assert!(synthesize_codec(&ch, &u, 0.0).is_err());
        assert!(synthesize_codec(&ch, &u, 1.5).is_err());
    }

    #[test]
    fn reference_awgn_pipeline() {
        let cd = codesign(&reference_plant(), &awgn()).unwrap();
        assert_eq!(cd.kind, ChannelKind::Awgn);
        assert!(cd.epsilon <= 0.1);
        assert!(cd.margins.iter().all(|&m| m > 0.0));
        assert!(codec_residual(&awgn(), &cd.t, &cd.r) <= CODEC_TOLERANCE);
        for (g, want) in cd.gamma.iter().zip([4.5, 1.5, 2.0]) {
            assert!((g - want).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_fading_pipeline() {
        let cd = codesign(&reference_plant(), &fading()).unwrap();
        assert!(codec_residual(&fading(), &cd.t, &cd.r) <= CODEC_TOLERANCE);
        assert!(cd.margins[0] > 0.0);
    }

    #[test]
    fn reference_infeasible_capacities() {
        let ch = ChannelEnsemble::awgn(vec![8.0, 2.0, 2.0], vec![1.0; 3]).unwrap();
        match codesign(&reference_plant(), &ch) {
            Err(Error::Infeasible { prefix, slack, .. }) => {
                assert_eq!(prefix, 3);
                assert!((slack + 2.0).abs() < 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn fewer_subchannels_than_inputs() {
        // two inputs, one unstable block, one subchannel
        let p = Plant::new(diag(&[1.0, -1.0]), DMatrix::identity(2, 2)).unwrap();
        let ch = ChannelEnsemble::awgn(vec![3.0], vec![1.0]).unwrap();
        let cd = codesign(&p, &ch).unwrap();
        assert_eq!(cd.active_inputs, 1);
        assert_eq!(cd.t.shape(), (1, 2));
        assert_eq!(cd.r.shape(), (2, 1));
        assert!(!cd.notes.is_empty());
    }

    #[test]
    fn epsilon_override() {
        let opts = CodesignOptions {
            epsilon: Some(0.0625),
            ..Default::default()
        };
        let cd = codesign_with(&reference_plant(), &awgn(), &opts).unwrap();
        assert_eq!(cd.epsilon, 0.0625);
        let opts = CodesignOptions {
            epsilon: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            codesign_with(&reference_plant(), &awgn(), &opts),
            Err(Error::EpsilonExhausted { tried: 1 })
        ));
    }

    #[test]
    fn corollary_examples() {
        let p = Plant::new(
            diag(&[2.0, 1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let ch = ChannelEnsemble::awgn(vec![5.0, 2.0], vec![1.0, 1.0]).unwrap();
        let r = check_corollaries(&p, &ch).unwrap();
        assert!(r.applicable && r.agree() && r.full);

        let ch = ChannelEnsemble::awgn(vec![2.0; 3], vec![1.0; 3]).unwrap();
        let r = check_corollaries(&reference_plant(), &ch).unwrap();
        assert!(r.applicable && r.agree() && !r.full);

        let r = check_corollaries(&reference_plant(), &awgn()).unwrap();
        assert!(!r.applicable);
    }

    #[test]
    fn demand_vector_trims_and_pads() {
        assert_eq!(demand_vector(&[7.0, 1.0], 3), vec![7.0, 1.0, 0.0]);
        assert_eq!(demand_vector(&[3.0, 0.0, 0.0], 1), vec![3.0]);
        assert_eq!(demand_vector(&[3.0, 2.0], 1), vec![3.0, 2.0]);
    }
}
