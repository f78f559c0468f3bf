//! Dense linear-algebra kernels shared by the rest of the crate.
//!
//! Everything here works on small dense `DMatrix<f64>` values: eigenvalues
//! come from nalgebra's real Schur form, Lyapunov equations are solved by
//! vectorization, and the stabilizing Riccati solution is read off the stable
//! invariant subspace of the Hamiltonian (via the matrix sign function) and
//! then polished with Newton-Kleinman steps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues with `|Re λ|` below this are treated as lying on the imaginary axis.
pub const TAU_AXIS: f64 = 1e-9;

/// Largest state dimension accepted by the Kronecker Lyapunov solver.
pub const LYAPUNOV_MAX_DIM: usize = 64;

/// Entry magnitude beyond which an integrated trajectory is declared divergent.
const DIVERGENCE_BOUND: f64 = 1e150;

/// Eigenvalue clustering tolerance for a matrix of norm `norm`.
pub fn eig_tolerance(norm: f64) -> f64 {
    1e-8 * norm.max(1.0)
}

pub fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} has non-finite entries"
        )))
    }
}

fn ensure_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.is_square() && m.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Eigenvalues sorted by real part (descending), then imaginary part (descending).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    ensure_square(a, "matrix")?;
    ensure_finite(a, "matrix")?;
    let schur = a
        .clone()
        .try_schur(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
    let mut eigs: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_eigenvalues(&mut eigs);
    Ok(eigs)
}

fn sort_eigenvalues(eigs: &mut [Complex64]) {
    eigs.sort_by(|x, y| {
        y.re.partial_cmp(&x.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y.im.partial_cmp(&x.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> Result<bool> {
    Ok(spectral_abscissa(a)? < 0.0)
}

/// Eigenvalues, their multiplicity clusters and an eigenvector basis.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Partition of eigenvalue indices into groups equal within tolerance.
    pub multiplicity_clusters: Vec<Vec<usize>>,
    /// Column `j` is an eigenvector for `eigenvalues[j]` (unit 2-norm).
    pub basis: DMatrix<Complex64>,
    /// Condition number of `basis`.
    pub condition: f64,
    /// Largest `‖(A − λI)v‖` over the basis columns, relative to `max(1, ‖A‖)`.
    pub eigvec_residual: f64,
}

impl Spectrum {
    /// Mean eigenvalue of a cluster.
    pub fn cluster_value(&self, cluster: usize) -> Complex64 {
        let idx = &self.multiplicity_clusters[cluster];
        idx.iter().map(|&i| self.eigenvalues[i]).sum::<Complex64>() / idx.len() as f64
    }

    /// Diagonalizable when the eigenvector basis is well conditioned and every
    /// basis column is a genuine eigenvector.
    pub fn is_diagonalizable(&self) -> bool {
        self.condition <= 1e8 && self.eigvec_residual <= 1e-6
    }

    /// Reconstruction residual `‖A·V − V·diag(λ)‖`.
    pub fn reconstruction_residual(&self, a: &DMatrix<f64>) -> f64 {
        let ac = a.map(|v| Complex64::new(v, 0.0));
        let lam = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        (&ac * &self.basis - &self.basis * lam).norm()
    }
}

fn cluster_eigenvalues(eigs: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, l) in eigs.iter().enumerate() {
        match clusters
            .iter_mut()
            .find(|c| c.iter().any(|&j| (eigs[j] - l).norm() <= tol))
        {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }
    clusters
}

/// Eigenvalues, clusters and (generalized) eigenvectors of a real matrix.
pub fn eigendecompose(a: &DMatrix<f64>) -> Result<Spectrum> {
    let eigs = eigenvalues(a)?;
    let n = a.nrows();
    let anorm = a.norm();
    let tol = eig_tolerance(anorm);
    let clusters = cluster_eigenvalues(&eigs, tol);

    let mut basis = DMatrix::<Complex64>::zeros(n, n);
    let mut residual: f64 = 0.0;
    let mut filled = vec![false; clusters.len()];
    for (ci, cluster) in clusters.iter().enumerate() {
        if filled[ci] {
            continue;
        }
        let g = cluster.len();
        let lam = cluster.iter().map(|&i| eigs[i]).sum::<Complex64>() / g as f64;
        let (vectors, res) = if lam.im.abs() <= tol {
            let (v, r) = real_null_vectors(&shifted(a, lam.re), g);
            (v.map(|x| Complex64::new(x, 0.0)), r)
        } else {
            complex_null_vectors(&shifted_complex(a, lam), g)
        };
        residual = residual.max(res / anorm.max(1.0));
        for (k, &idx) in cluster.iter().enumerate() {
            basis.set_column(idx, &vectors.column(k));
        }
        filled[ci] = true;
        if lam.im.abs() > tol {
            // the conjugate cluster gets the conjugate vectors
            if let Some(cj) = clusters.iter().enumerate().position(|(cj, c)| {
                !filled[cj] && c.len() == g && (eigs[c[0]] - lam.conj()).norm() <= 10.0 * tol
            }) {
                for (k, &idx) in clusters[cj].iter().enumerate() {
                    basis.set_column(idx, &vectors.column(k).map(|z| z.conj()));
                }
                filled[cj] = true;
            }
        }
    }
    // Any cluster left unfilled (unpaired complex cluster) gets its own null space.
    for (ci, cluster) in clusters.iter().enumerate() {
        if !filled[ci] {
            let g = cluster.len();
            let lam = cluster.iter().map(|&i| eigs[i]).sum::<Complex64>() / g as f64;
            let (vectors, res) = complex_null_vectors(&shifted_complex(a, lam), g);
            residual = residual.max(res / anorm.max(1.0));
            for (k, &idx) in cluster.iter().enumerate() {
                basis.set_column(idx, &vectors.column(k));
            }
        }
    }
    let condition = condition_number_complex(&basis);
    Ok(Spectrum {
        eigenvalues: eigs,
        multiplicity_clusters: clusters,
        basis,
        condition,
        eigvec_residual: residual,
    })
}

fn shifted(a: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    a - DMatrix::<f64>::identity(a.nrows(), a.ncols()) * s
}

fn shifted_complex(a: &DMatrix<f64>, s: Complex64) -> DMatrix<Complex64> {
    let mut m = a.map(|v| Complex64::new(v, 0.0));
    for i in 0..m.nrows() {
        m[(i, i)] -= s;
    }
    m
}

/// Right singular vectors for the `g` smallest singular values, plus the
/// largest of those singular values (a residual for the null space).
pub fn real_null_vectors(m: &DMatrix<f64>, g: usize) -> (DMatrix<f64>, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    // wide matrices can have fewer singular values than columns; those extra
    // directions are exact null vectors and come first.
    let mut out = DMatrix::<f64>::zeros(n, g);
    let mut res: f64 = 0.0;
    for (k, &i) in order.iter().take(g).enumerate() {
        out.set_column(k, &v_t.row(i).transpose());
        res = res.max(svd.singular_values[i]);
    }
    (out, res)
}

fn complex_null_vectors(m: &DMatrix<Complex64>, g: usize) -> (DMatrix<Complex64>, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut out = DMatrix::<Complex64>::zeros(n, g);
    let mut res: f64 = 0.0;
    for (k, &i) in order.iter().take(g).enumerate() {
        out.set_column(k, &v_t.row(i).adjoint());
        res = res.max(svd.singular_values[i]);
    }
    (out, res)
}

fn condition_number_complex(m: &DMatrix<Complex64>) -> f64 {
    let s = m.clone().svd(false, false).singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// 2-norm condition number of a real matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = m.clone().svd(false, false).singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Numerical rank with threshold `rel · σ_max`.
pub fn numerical_rank_complex(m: &DMatrix<Complex64>, rel: f64) -> usize {
    let s = m.clone().svd(false, false).singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel * max).count()
}

/// PBH test: `rank [A − λI, B] = n`, judged by singular values with
/// threshold `1e-8 · σ_max`.
pub fn pbh_controllable_at(a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: Complex64) -> bool {
    let n = a.nrows();
    let mut pencil = DMatrix::<Complex64>::zeros(n, n + b.ncols());
    pencil
        .view_mut((0, 0), (n, n))
        .copy_from(&shifted_complex(a, lambda));
    pencil
        .view_mut((0, n), (n, b.ncols()))
        .copy_from(&b.map(|v| Complex64::new(v, 0.0)));
    numerical_rank_complex(&pencil, 1e-8) == n
}

/// First uncontrollable eigenvalue with `Re λ ≥ −τ_axis`, if any.
pub fn uncontrollable_unstable_eigenvalue(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<Option<Complex64>> {
    for lam in eigenvalues(a)? {
        if lam.re >= -TAU_AXIS && !pbh_controllable_at(a, b, lam) {
            return Ok(Some(lam));
        }
    }
    Ok(None)
}

/// Solves `Acl·L + L·Acl' + Q = 0` for Hurwitz `Acl`.
pub fn solve_lyapunov(acl: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(acl, "state matrix")?;
    ensure_finite(acl, "state matrix")?;
    ensure_finite(q, "Q")?;
    let n = acl.nrows();
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    if n > LYAPUNOV_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "Lyapunov dimension {n} exceeds {LYAPUNOV_MAX_DIM}"
        )));
    }
    let abscissa = spectral_abscissa(acl)?;
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz { abscissa });
    }
    // Solving in real Schur coordinates keeps large closed-loop gains from
    // swamping the Kronecker system.
    let (z, t) = acl.clone().schur().unpack();
    let qt = z.transpose() * q * &z;
    let id = DMatrix::<f64>::identity(n, n);
    let op = id.kronecker(&t) + t.kronecker(&id);
    let rhs = -DVector::from_column_slice(qt.as_slice());
    let sol = op.lu().solve(&rhs).ok_or(Error::NotHurwitz { abscissa })?;
    let lt = DMatrix::from_column_slice(n, n, sol.as_slice());
    let l = &z * lt * z.transpose();
    let l = (&l + l.transpose()) * 0.5;

    let residual = (acl * &l + &l * acl.transpose() + q).norm();
    let tolerance = 1e-8 * q.norm();
    if residual > tolerance {
        return Err(Error::Inaccurate {
            residual,
            tolerance,
        });
    }
    Ok(l)
}

/// Residual `‖A'X + XA − XBB'X‖` of the zero-weight Riccati equation.
pub fn care_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let bbt = b * b.transpose();
    (a.transpose() * x + x * a - x * bbt * x).norm()
}

/// Stabilizing solution of `A'X + XA − XBB'X = 0`.
pub fn solve_care_stabilizing(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "B has {} rows, A is {n}x{n}",
            b.nrows()
        )));
    }
    let eigs = eigenvalues(a)?;
    if let Some(l) = eigs.iter().find(|l| l.re.abs() < TAU_AXIS) {
        return Err(Error::AxisEigenvalue { eigenvalue: *l });
    }
    if let Some(l) = uncontrollable_unstable_eigenvalue(a, b)? {
        return Err(Error::Unstabilizable { eigenvalue: l });
    }
    if eigs.iter().all(|l| l.re < 0.0) {
        return Ok(DMatrix::zeros(n, n));
    }

    let bbt = b * b.transpose();
    // With zero state weight X = W·Y⁻¹·W', where W spans the antistable
    // left invariant subspace (A'W = WM) and M'Y + YM = W'BB'W.
    let projector = (matrix_sign(&a.transpose())? + DMatrix::<f64>::identity(n, n)) * 0.5;
    let svd = projector.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let rank = svd.singular_values.iter().filter(|s| **s > 0.5).count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let w = DMatrix::from_fn(n, rank, |r, c| u[(r, order[c])]);
    let m = w.transpose() * a.transpose() * &w;
    let c = w.transpose() * &bbt * &w;
    let y = solve_lyapunov(&(-m.transpose()), &c)?;
    let g = y
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or_else(|| Error::InvalidInput("reachability Gramian is singular".into()))?;
    let x = &w * g * w.transpose();
    let mut x = (&x + x.transpose()) * 0.5;

    let scale = |x: &DMatrix<f64>| 1e-8 * x.norm().powi(2).max(1.0);
    // Newton-Kleinman polishing; each step is a Lyapunov solve.
    for _ in 0..8 {
        if care_residual(a, b, &x) <= 1e-3 * scale(&x) {
            break;
        }
        let k = b.transpose() * &x;
        let acl = a - b * &k;
        if !is_hurwitz(&acl)? {
            break;
        }
        let next = solve_lyapunov(&acl.transpose(), &(k.transpose() * &k))?;
        x = next;
    }

    let residual = care_residual(a, b, &x);
    let tolerance = scale(&x);
    if residual > tolerance {
        return Err(Error::Inaccurate {
            residual,
            tolerance,
        });
    }
    let acl = a - &bbt * &x;
    let abscissa = spectral_abscissa(&acl)?;
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let min_eig = x
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -1e-8 * x.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "Riccati solution is not PSD (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(x)
}

/// Matrix sign function by the scaled Newton iteration.
fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    let mut scaling = true;
    for _ in 0..200 {
        let lu = z.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular iterate in sign function".into()))?;
        let c = if scaling {
            let lu = z.clone().lu();
            let logdet: f64 = lu.u().diagonal().iter().map(|d| d.abs().ln()).sum();
            (-logdet / dim).exp()
        } else {
            1.0
        };
        let next = (&z * c + inv / c) * 0.5;
        let change = (&next - &z).norm() / next.norm();
        z = next;
        if change < 1e-2 {
            scaling = false;
        }
        if change < 1e-14 {
            break;
        }
    }
    Ok(z)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(z: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(z)?.iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// Spectral radius and a nonnegative right eigenvector for it (unit 1-norm).
pub fn perron_vector(z: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let rho = spectral_radius(z)?;
    let (v, _) = real_null_vectors(&shifted(z, rho), 1);
    let v = v.column(0).map(|x| x.abs());
    let s = v.sum();
    Ok((rho, v / s))
}

/// Closest matrix with orthonormal columns (polar factor).
pub fn nearest_isometry(u: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = u.clone().svd(true, true);
    svd.u.expect("u requested") * svd.v_t.expect("v_t requested")
}

/// Sampled solution of a matrix ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &DMatrix<f64>)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Classical RK4 with every step symmetrized; records every step.
pub fn integrate_linear_matrix_ode<F>(
    rhs: F,
    x0: &DMatrix<f64>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    integrate_linear_matrix_ode_decimated(rhs, x0, t_end, dt, usize::MAX)
}

/// As [`integrate_linear_matrix_ode`], keeping at most `max_samples` rows
/// (first and last step always included).
pub fn integrate_linear_matrix_ode_decimated<F>(
    rhs: F,
    x0: &DMatrix<f64>,
    t_end: f64,
    dt: f64,
    max_samples: usize,
) -> Result<Trajectory>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    if !(dt > 0.0 && dt.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    ensure_finite(x0, "initial state")?;
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let stride = if max_samples < 2 {
        steps
    } else {
        steps.div_ceil(max_samples - 1).max(1)
    };

    let mut x = (x0 + x0.transpose()) * 0.5;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x.clone()],
    };
    for step in 1..=steps {
        let k1 = rhs(&x);
        let k2 = rhs(&(&x + &k1 * (h / 2.0)));
        let k3 = rhs(&(&x + &k2 * (h / 2.0)));
        let k4 = rhs(&(&x + &k3 * h));
        let next = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        x = (&next + next.transpose()) * 0.5;
        let t = step as f64 * h;
        if x.iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
        {
            return Err(Error::Diverged { time: t });
        }
        if step % stride == 0 || step == steps {
            traj.times.push(t);
            traj.states.push(x.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn eigendecompose_diag_clusters() {
        let s = eigendecompose(&diag(&[4.0, 2.0, 1.0, 1.0])).unwrap();
        let re: Vec<f64> = s.eigenvalues.iter().map(|l| l.re).collect();
        assert_eq!(re, vec![4.0, 2.0, 1.0, 1.0]);
        assert_eq!(s.multiplicity_clusters, vec![vec![0], vec![1], vec![2, 3]]);
        assert!(s.is_diagonalizable());
        assert!(s.reconstruction_residual(&diag(&[4.0, 2.0, 1.0, 1.0])) < 1e-12);
    }

    #[test]
    fn eigendecompose_scalar_zero() {
        let s = eigendecompose(&DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(s.eigenvalues, vec![Complex64::new(0.0, 0.0)]);
    }

    #[test]
    fn eigendecompose_rotation_conjugate_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = eigendecompose(&a).unwrap();
        assert!((s.eigenvalues[0] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((s.eigenvalues[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(s.reconstruction_residual(&a) < 1e-8 * a.norm());
    }

    #[test]
    fn eigendecompose_rejects_nan() {
        let a = DMatrix::from_element(2, 2, f64::NAN);
        assert!(matches!(eigendecompose(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn defective_matrix_flagged() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(!eigendecompose(&a).unwrap().is_diagonalizable());
    }

    #[test]
    fn lyapunov_scalar_and_diagonal() {
        let l = solve_lyapunov(&diag(&[-1.0]), &diag(&[2.0])).unwrap();
        assert!((l[(0, 0)] - 1.0).abs() < 1e-14);
        let l = solve_lyapunov(&diag(&[-4.0, -2.0, -1.0]), &DMatrix::identity(3, 3)).unwrap();
        assert!((&l - diag(&[0.125, 0.25, 0.5])).norm() < 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let e = solve_lyapunov(&diag(&[1.0]), &diag(&[1.0])).unwrap_err();
        assert!(matches!(e, Error::NotHurwitz { .. }));
    }

    #[test]
    fn care_scalar_cases() {
        let x = solve_care_stabilizing(&diag(&[1.0]), &diag(&[1.0])).unwrap();
        assert!((x[(0, 0)] - 2.0).abs() < 1e-12);
        let x = solve_care_stabilizing(&diag(&[-1.0]), &diag(&[1.0])).unwrap();
        assert_eq!(x[(0, 0)], 0.0);
    }

    #[test]
    fn care_three_mode_block() {
        let a = diag(&[4.0, 2.0, 1.0]);
        let b = DMatrix::from_element(3, 1, 1.0);
        let x = solve_care_stabilizing(&a, &b).unwrap();
        let f = -(b.transpose() * &x);
        for (got, want) in f.iter().zip([-40.0, 36.0, -10.0]) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn care_errors() {
        let e = solve_care_stabilizing(&diag(&[0.0]), &diag(&[1.0])).unwrap_err();
        assert!(matches!(e, Error::AxisEigenvalue { .. }));
        let e = solve_care_stabilizing(&diag(&[1.0]), &diag(&[0.0])).unwrap_err();
        assert!(matches!(e, Error::Unstabilizable { .. }));
    }

    #[test]
    fn care_mixed_spectrum_is_stabilizing() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, -3.0, 1.0, 0.5, 0.0, 2.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = solve_care_stabilizing(&a, &b).unwrap();
        let acl = &a - &b * b.transpose() * &x;
        assert!(is_hurwitz(&acl).unwrap());
        assert!(care_residual(&a, &b, &x) <= 1e-8 * x.norm().powi(2).max(1.0));
    }

    #[test]
    fn spectral_radius_examples() {
        assert!((spectral_radius(&DMatrix::identity(2, 2)).unwrap() - 1.0).abs() < 1e-14);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((spectral_radius(&swap).unwrap() - 1.0).abs() < 1e-14);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((spectral_radius(&m).unwrap() - 3.0).abs() < 3e-10);
    }

    #[test]
    fn perron_vector_of_symmetric_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (rho, v) = perron_vector(&m).unwrap();
        assert!((rho - 3.0).abs() < 1e-12);
        assert!((v[0] - 0.5).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ode_scalar_decay() {
        let traj =
            integrate_linear_matrix_ode(|x| x * -2.0, &DMatrix::identity(2, 2), 1.0, 0.01).unwrap();
        let (t, x) = traj.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let want = (-2.0f64).exp();
        assert!((x[(0, 0)] - want).abs() < 1e-6 && (x[(1, 1)] - want).abs() < 1e-6);
        assert_eq!(x[(0, 1)], 0.0);
    }

    #[test]
    fn ode_constant_trajectory() {
        let x0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let traj =
            integrate_linear_matrix_ode(|x| DMatrix::zeros(x.nrows(), x.ncols()), &x0, 1.0, 0.1)
                .unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.states.iter().all(|x| *x == x0));
    }

    #[test]
    fn ode_fourth_order_convergence() {
        let err = |dt: f64| {
            let traj = integrate_linear_matrix_ode(|x| x * -2.0, &DMatrix::identity(1, 1), 1.0, dt)
                .unwrap();
            (traj.last().unwrap().1[(0, 0)] - (-2.0f64).exp()).abs()
        };
        let (coarse, fine) = (err(0.1), err(0.05));
        assert!(coarse / fine >= 8.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn ode_divergence_reports_time() {
        let e = integrate_linear_matrix_ode(|x| x * 50.0, &DMatrix::identity(1, 1), 100.0, 0.01)
            .unwrap_err();
        match e {
            Error::Diverged { time } => assert!(time > 0.0 && time < 100.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ode_decimation_keeps_endpoints() {
        let traj = integrate_linear_matrix_ode_decimated(
            |x| x * -1.0,
            &DMatrix::identity(1, 1),
            10.0,
            0.001,
            100,
        )
        .unwrap();
        assert!(traj.len() <= 100);
        assert_eq!(traj.times[0], 0.0);
        assert!((traj.times.last().unwrap() - 10.0).abs() < 1e-9);
    }
}
