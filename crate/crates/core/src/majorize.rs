//! Majorization orders, the intermediate demand vector, and the Schur-Horn
//! isometry.
//!
//! Conventions: `x ≼ y` ("x is majorized by y") compares descending prefix
//! sums with equal totals; the weak-from-above order `x ≼^w y` compares
//! ascending prefix sums (`x` must dominate). The strict variants require
//! every inequality, including the total, to hold with margin `δ_strict`.

use nalgebra::DMatrix;
use num_rational::Rational64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `x ≼ y`
    Majorize,
    /// `x ≼_w y`: descending prefix sums of `x` do not exceed those of `y`.
    WeakBelow,
    /// `x ≼^w y`: ascending prefix sums of `x` are at least those of `y`.
    WeakAbove,
    StrictWeakBelow,
    StrictWeakAbove,
}

/// Outcome of an order check.
///
/// `slack[j]` is the margin of the `(j+1)`-th prefix inequality, signed so
/// that a nonnegative value means "satisfied" (for [`Relation::Majorize`] the
/// last entry is the total difference and must vanish instead).
#[derive(Debug, Clone, PartialEq)]
pub struct OrderVerdict {
    pub relation: Relation,
    pub holds: bool,
    pub slack: Vec<f64>,
}

impl OrderVerdict {
    /// Index of the first prefix whose inequality fails.
    pub fn violated_prefix(&self) -> Option<usize> {
        let tol = 0.0;
        match self.relation {
            Relation::Majorize => {
                let last = self.slack.len() - 1;
                self.slack
                    .iter()
                    .enumerate()
                    .position(|(j, &s)| if j == last { s != 0.0 } else { s < tol })
            }
            _ => self
                .slack
                .iter()
                .position(|&s| if self.is_strict() { s <= tol } else { s < tol }),
        }
    }

    fn is_strict(&self) -> bool {
        matches!(
            self.relation,
            Relation::StrictWeakAbove | Relation::StrictWeakBelow
        )
    }
}

/// Margin used to certify strict inequalities for capacity-like vector `c`.
pub fn strict_margin(c: &[f64]) -> f64 {
    1e-9 * inf_norm(c).max(1.0)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Checks `x <relation> y` on sorted copies. Lengths must agree.
pub fn check_order(x: &[f64], y: &[f64], relation: Relation) -> Result<OrderVerdict> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "order check needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("order check on empty vectors".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "order check on non-finite entries".into(),
        ));
    }
    let tol = 1e-9 * inf_norm(x).max(inf_norm(y)).max(1.0);
    let strict = strict_margin(x);

    let desc = |v: &[f64]| prefix_sums(&sorted_desc(v));
    let asc = |v: &[f64]| {
        let mut s = sorted_desc(v);
        s.reverse();
        prefix_sums(&s)
    };
    let (slack, holds) = match relation {
        Relation::Majorize => {
            let (sx, sy) = (desc(x), desc(y));
            let slack: Vec<f64> = sy.iter().zip(&sx).map(|(a, b)| a - b).collect();
            let p = slack.len() - 1;
            let holds = slack[..p].iter().all(|&s| s >= -tol) && slack[p].abs() <= tol;
            (slack, holds)
        }
        Relation::WeakBelow | Relation::StrictWeakBelow => {
            let (sx, sy) = (desc(x), desc(y));
            let slack: Vec<f64> = sy.iter().zip(&sx).map(|(a, b)| a - b).collect();
            let holds = if relation == Relation::WeakBelow {
                slack.iter().all(|&s| s >= -tol)
            } else {
                slack.iter().all(|&s| s > strict)
            };
            (slack, holds)
        }
        Relation::WeakAbove | Relation::StrictWeakAbove => {
            let (sx, sy) = (asc(x), asc(y));
            let slack: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a - b).collect();
            let holds = if relation == Relation::WeakAbove {
                slack.iter().all(|&s| s >= -tol)
            } else {
                slack.iter().all(|&s| s > strict)
            };
            (slack, holds)
        }
    };
    Ok(OrderVerdict {
        relation,
        holds,
        slack,
    })
}

/// Zero-pads the shorter vector before [`check_order`].
pub fn check_order_padded(x: &[f64], y: &[f64], relation: Relation) -> Result<OrderVerdict> {
    let len = x.len().max(y.len());
    let pad = |v: &[f64]| {
        let mut v = v.to_vec();
        v.resize(len, 0.0);
        v
    };
    check_order(&pad(x), &pad(y), relation)
}

/// Finds `γ` with `γ < c` elementwise and `γ ≼ h`, given `c ≺^w h`.
///
/// Every ascending prefix of `c` beats the matching prefix of `h` by
/// `s_j > 0`. Shifting `c` down by `η = min_j s_j / j` keeps the weak
/// relation, and capping the shifted vector at the water level `τ` that
/// makes the totals equal lands inside the permutohedron of `h`. Every
/// component then sits at least `η` below `c`.
pub fn construct_intermediate(c: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    let verdict = check_order(c, h, Relation::StrictWeakAbove)?;
    if !verdict.holds {
        return Err(Error::NotMajorized);
    }
    let l = c.len();
    let eta = verdict
        .slack
        .iter()
        .enumerate()
        .map(|(j, s)| s / (j + 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = c.iter().map(|v| v - eta).collect();
    let target: f64 = h.iter().sum();
    let level = water_level(&shifted, target);
    let gamma: Vec<f64> = shifted.iter().map(|&v| v.min(level)).collect();

    let margin = c
        .iter()
        .zip(&gamma)
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min);
    if !(margin > 0.0) || margin < 0.5 * eta {
        return Err(Error::ConstructionFailed(format!(
            "margin {margin:e} below shift {eta:e}"
        )));
    }
    if !check_order(&gamma, h, Relation::Majorize)?.holds {
        return Err(Error::ConstructionFailed(format!(
            "result is not majorized by the demand vector (l = {l})"
        )));
    }
    Ok(gamma)
}

/// Level `τ` with `Σ min(v_i, τ) = target`, assuming `target ≤ Σ v`.
fn water_level(v: &[f64], target: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let total: f64 = s.iter().sum();
    if total <= target {
        return f64::INFINITY;
    }
    let l = s.len();
    let mut below = 0.0;
    for (i, &vi) in s.iter().enumerate() {
        // entries i.. are capped at τ
        let tau = (target - below) / (l - i) as f64;
        if tau <= vi {
            return tau;
        }
        below += vi;
    }
    f64::INFINITY
}

/// Builds an `l×m` isometry `U` with `diag(U·diag(λ)·U') = γ`.
///
/// `lambda` is conceptually padded with `l − m` zeros. Starting from
/// `X = diag(λ, 0)`, each step takes the smallest unassigned target `t`, the
/// smallest free diagonal entry `s ≤ t` and the smallest other free entry
/// `b ≥ t`, and rotates in their plane so that the `s` position becomes `t`.
/// The free part of `X` stays diagonal, and dropping `t` from the targets
/// and `{s, b}` for `s + b − t` from the entries preserves majorization, so
/// the chain always completes. `U` is the block of eigenvectors for the `m`
/// given eigenvalues.
pub fn schur_horn_isometry(lambda: &[f64], gamma: &[f64]) -> Result<DMatrix<f64>> {
    let (m, l) = (lambda.len(), gamma.len());
    if m == 0 || l < m {
        return Err(Error::InvalidInput(format!(
            "need 1 <= m <= l, got m = {m}, l = {l}"
        )));
    }
    let mut spectrum = lambda.to_vec();
    spectrum.resize(l, 0.0);
    if !check_order(gamma, &spectrum, Relation::Majorize)?.holds {
        return Err(Error::NotMajorized);
    }

    // X = Q·diag(spectrum)·Q'; position p is pinned to target owner[p].
    let mut x = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&spectrum));
    let mut q = DMatrix::<f64>::identity(l, l);
    let mut owner: Vec<Option<usize>> = vec![None; l];
    let mut targets: Vec<usize> = (0..l).collect();
    targets.sort_by(|&i, &j| gamma[i].total_cmp(&gamma[j]));
    let tol = 1e-13 * inf_norm(&spectrum).max(1.0);

    for (step, &ti) in targets.iter().enumerate() {
        let t = gamma[ti];
        let free: Vec<usize> = (0..l).filter(|&p| owner[p].is_none()).collect();
        let pick = |pred: &dyn Fn(usize) -> bool| {
            free.iter()
                .copied()
                .filter(|&p| pred(p))
                .min_by(|&a, &b| x[(a, a)].total_cmp(&x[(b, b)]))
        };
        let a = pick(&|_| true).expect("one free position per remaining target");
        if step + 1 == l || (x[(a, a)] - t).abs() <= tol {
            x[(a, a)] = t;
            owner[a] = Some(ti);
            continue;
        }
        let Some(c) = pick(&|p| p != a && x[(p, p)] >= t - tol) else {
            return Err(Error::ConstructionFailed(format!(
                "no diagonal entry above target {t} at step {step}"
            )));
        };
        if (x[(c, c)] - t).abs() <= tol {
            x[(c, c)] = t;
            owner[c] = Some(ti);
            continue;
        }
        let (ds, db) = (x[(a, a)], x[(c, c)]);
        let sn = ((t - ds) / (db - ds)).clamp(0.0, 1.0).sqrt();
        let cs = (1.0 - sn * sn).sqrt();
        rotate(&mut x, &mut q, a, c, cs, sn);
        x[(a, a)] = t;
        x[(c, c)] = ds + db - t;
        owner[a] = Some(ti);
    }

    let mut u = DMatrix::<f64>::zeros(l, m);
    for p in 0..l {
        let row = owner[p].expect("every position is pinned");
        for r in 0..m {
            u[(row, r)] = q[(p, r)];
        }
    }
    for mut col in u.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-14) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }

    let check = verify_isometry(&u, lambda, gamma);
    if check.orthonormality > 1e-10 || check.diagonal > 1e-8 {
        return Err(Error::ConstructionFailed(format!(
            "isometry check failed: ‖U'U − I‖ = {:e}, diagonal error {:e}",
            check.orthonormality, check.diagonal
        )));
    }
    Ok(u)
}

fn rotate(x: &mut DMatrix<f64>, q: &mut DMatrix<f64>, j: usize, k: usize, c: f64, s: f64) {
    // G acts on coordinates (j, k): G = [[c, -s], [s, c]]; X ← G'XG, Q ← G'Q.
    let l = x.nrows();
    for r in 0..l {
        let (a, b) = (x[(r, j)], x[(r, k)]);
        x[(r, j)] = c * a + s * b;
        x[(r, k)] = -s * a + c * b;
    }
    for col in 0..l {
        let (a, b) = (x[(j, col)], x[(k, col)]);
        x[(j, col)] = c * a + s * b;
        x[(k, col)] = -s * a + c * b;
    }
    for col in 0..l {
        let (a, b) = (q[(j, col)], q[(k, col)]);
        q[(j, col)] = c * a + s * b;
        q[(k, col)] = -s * a + c * b;
    }
}

/// Residuals of the two isometry postconditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryCheck {
    /// Largest entry of `|U'U − I|`.
    pub orthonormality: f64,
    /// Largest `|diag(U·diag(λ)·U')_i − γ_i|`.
    pub diagonal: f64,
}

pub fn verify_isometry(u: &DMatrix<f64>, lambda: &[f64], gamma: &[f64]) -> IsometryCheck {
    let m = u.ncols();
    let gram = u.transpose() * u - DMatrix::<f64>::identity(m, m);
    let orthonormality = gram.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let diagonal = (0..u.nrows())
        .map(|i| {
            let d: f64 = (0..m).map(|j| u[(i, j)] * u[(i, j)] * lambda[j]).sum();
            (d - gamma[i]).abs()
        })
        .fold(0.0, f64::max);
    IsometryCheck {
        orthonormality,
        diagonal,
    }
}

/// Largest vector length accepted by [`brute_force_feasible_gamma`].
pub const BRUTE_FORCE_MAX_LEN: usize = 4;
/// Largest grid resolution accepted by [`brute_force_feasible_gamma`].
pub const BRUTE_FORCE_MAX_GRID: u32 = 200;

/// Exhaustive grid search, in exact rational arithmetic, for `γ` with
/// `γ < c` elementwise and `γ ≼ h`.
///
/// Grid points place each of the first `l − 1` coordinates on
/// `min h + k·(max h − min h)/grid`; the last coordinate closes the total.
/// Returns the first hit in lexicographic grid order.
pub fn brute_force_feasible_gamma(
    c: &[Rational64],
    h: &[Rational64],
    grid: u32,
) -> Result<Option<Vec<Rational64>>> {
    let l = c.len();
    if l != h.len() || l == 0 {
        return Err(Error::InvalidInput(
            "c and h must have equal nonzero length".into(),
        ));
    }
    if l > BRUTE_FORCE_MAX_LEN || grid == 0 || grid > BRUTE_FORCE_MAX_GRID {
        return Err(Error::Unsupported(format!(
            "brute force limited to l <= {BRUTE_FORCE_MAX_LEN} and 1 <= grid <= {BRUTE_FORCE_MAX_GRID}"
        )));
    }
    let lo = *h.iter().min().expect("nonempty");
    let hi = *h.iter().max().expect("nonempty");
    let total: Rational64 = h.iter().copied().sum();
    let step = (hi - lo) / Rational64::from_integer(grid as i64);
    let points = if hi == lo { 1 } else { grid as usize + 1 };

    let mut h_desc = h.to_vec();
    h_desc.sort_by(|a, b| b.cmp(a));

    let mut idx = vec![0usize; l - 1];
    loop {
        let mut gamma: Vec<Rational64> = idx
            .iter()
            .map(|&k| lo + step * Rational64::from_integer(k as i64))
            .collect();
        let partial: Rational64 = gamma.iter().copied().sum();
        gamma.push(total - partial);
        if exact_feasible(&gamma, c, &h_desc) {
            return Ok(Some(gamma));
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(None);
            }
            idx[pos] += 1;
            if idx[pos] < points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn exact_feasible(gamma: &[Rational64], c: &[Rational64], h_desc: &[Rational64]) -> bool {
    if gamma.iter().zip(c).any(|(g, ci)| g >= ci) {
        return false;
    }
    let mut g = gamma.to_vec();
    g.sort_by(|a, b| b.cmp(a));
    let (mut sg, mut sh) = (Rational64::from_integer(0), Rational64::from_integer(0));
    for (a, b) in g.iter().zip(h_desc) {
        sg += a;
        sh += b;
        if sg > sh {
            return false;
        }
    }
    sg == sh
}
