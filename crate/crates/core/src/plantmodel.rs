//! Plant and channel data, capacities, topological entropy and the
//! stabilizability check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, TAU_AXIS};

/// Continuous-time plant `ẋ = Ax + Bu`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    x0: DVector<f64>,
}

impl Plant {
    /// Builds a plant with the all-ones initial condition.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::with_initial_state(a, b, DVector::from_element(n, 1.0))
    }

    pub fn with_initial_state(a: DMatrix<f64>, b: DMatrix<f64>, x0: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square with n >= 1, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "B must be {n}xm with m >= 1, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if x0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "x0 has length {}, expected {n}",
                x0.len()
            )));
        }
        numerics::ensure_finite(&a, "A")?;
        numerics::ensure_finite(&b, "B")?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("x0 has non-finite entries".into()));
        }
        Ok(Plant { a, b, x0 })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Awgn,
    Fading,
}

/// A bank of `l` parallel SISO subchannels.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelEnsemble {
    /// Additive white Gaussian noise subchannels with admissible powers and
    /// noise spectral densities.
    Awgn { powers: Vec<f64>, noise: Vec<f64> },
    /// Multiplicative white-noise subchannels with means and variances.
    Fading {
        means: Vec<f64>,
        variances: Vec<f64>,
    },
}

impl ChannelEnsemble {
    pub fn awgn(powers: Vec<f64>, noise: Vec<f64>) -> Result<Self> {
        check_pair(&powers, &noise, "powers", "noise densities")?;
        if powers.iter().chain(&noise).any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput(
                "AWGN powers and noise densities must be strictly positive".into(),
            ));
        }
        Ok(ChannelEnsemble::Awgn { powers, noise })
    }

    pub fn fading(means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        check_pair(&means, &variances, "means", "variances")?;
        if means.contains(&0.0) || variances.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidInput(
                "fading means must be nonzero and variances strictly positive".into(),
            ));
        }
        Ok(ChannelEnsemble::Fading { means, variances })
    }

    pub fn kind(&self) -> ChannelKind {
        match self {
            ChannelEnsemble::Awgn { .. } => ChannelKind::Awgn,
            ChannelEnsemble::Fading { .. } => ChannelKind::Fading,
        }
    }

    /// Number of subchannels `l`.
    pub fn len(&self) -> usize {
        match self {
            ChannelEnsemble::Awgn { powers, .. } => powers.len(),
            ChannelEnsemble::Fading { means, .. } => means.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-subchannel capacities: `P/(2N)` for AWGN, `μ²/(2σ²)` for fading.
    pub fn capacities(&self) -> Vec<f64> {
        match self {
            ChannelEnsemble::Awgn { powers, noise } => {
                powers.iter().zip(noise).map(|(p, n)| 0.5 * p / n).collect()
            }
            ChannelEnsemble::Fading { means, variances } => means
                .iter()
                .zip(variances)
                .map(|(mu, s2)| 0.5 * mu * mu / s2)
                .collect(),
        }
    }

    pub fn total_capacity(&self) -> f64 {
        self.capacities().iter().sum()
    }
}

fn check_pair(x: &[f64], y: &[f64], xn: &str, yn: &str) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidInput("need at least one subchannel".into()));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{xn} has {} entries but {yn} has {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{xn}/{yn} must be finite")));
    }
    Ok(())
}

/// Topological entropy with a flag for eigenvalues too close to the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropy {
    pub value: f64,
    pub axis_eigenvalue: bool,
}

/// `H(A)`: the sum of the real parts of eigenvalues in the open right half plane.
pub fn topological_entropy(a: &DMatrix<f64>) -> Result<Entropy> {
    let eigs = numerics::eigenvalues(a)?;
    Ok(entropy_of(&eigs))
}

pub(crate) fn entropy_of(eigs: &[Complex64]) -> Entropy {
    let value = eigs.iter().map(|l| l.re).filter(|&r| r > TAU_AXIS).sum();
    Entropy {
        value,
        axis_eigenvalue: eigs.iter().any(|l| l.re.abs() < TAU_AXIS),
    }
}

/// Structured result of [`validate_plant`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlantReport {
    pub stabilizable: bool,
    /// Eigenvalues with `Re λ ≥ 0` that fail the PBH rank test.
    pub uncontrollable_unstable: Vec<Complex64>,
    pub axis_eigenvalues: Vec<Complex64>,
    pub unstable: bool,
    pub entropy: f64,
    pub eigenvalues: Vec<Complex64>,
}

/// Checks stabilizability (PBH at each eigenvalue with `Re λ ≥ 0`),
/// imaginary-axis eigenvalues and instability. Never fails.
pub fn validate_plant(p: &Plant) -> PlantReport {
    let eigs = match numerics::eigenvalues(p.a()) {
        Ok(e) => e,
        Err(_) => {
            return PlantReport {
                stabilizable: false,
                uncontrollable_unstable: Vec::new(),
                axis_eigenvalues: Vec::new(),
                unstable: false,
                entropy: f64::NAN,
                eigenvalues: Vec::new(),
            }
        }
    };
    let uncontrollable: Vec<Complex64> = eigs
        .iter()
        .copied()
        .filter(|l| l.re >= -TAU_AXIS && !numerics::pbh_controllable_at(p.a(), p.b(), *l))
        .collect();
    let entropy = entropy_of(&eigs);
    PlantReport {
        stabilizable: uncontrollable.is_empty(),
        uncontrollable_unstable: uncontrollable,
        axis_eigenvalues: eigs
            .iter()
            .copied()
            .filter(|l| l.re.abs() < TAU_AXIS)
            .collect(),
        unstable: entropy.value > 0.0 || entropy.axis_eigenvalue,
        entropy: entropy.value,
        eigenvalues: eigs,
    }
}
