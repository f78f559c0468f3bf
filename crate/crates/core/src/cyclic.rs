//! Cyclic decomposition of a stabilizable pair `(A, B)` into single-input
//! blocks `[A_i | b_i]`.
//!
//! Only diagonalizable `A` is decomposed automatically. Block `i` takes the
//! `i`-th eigenvector of every eigenvalue cluster whose multiplicity exceeds
//! `i`, so block 1 carries the whole spectrum support and the spectra are
//! nested. Within each cluster the eigenvectors are recombined so that the
//! transformed inputs form a staircase: the eigen-coordinates of `B·Q` are
//! made upper triangular with unit pivots, which pins the `b_i` entries to one.
//! When `Q = I` does not give unit pivots on every unstable cluster, seeded
//! random orthogonal `Q` are tried.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{self, TAU_AXIS};
use crate::plantmodel::{entropy_of, Plant};

/// Random input transformations tried after `Q = I`.
pub const MAX_RETRIES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicBlock {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
}

impl CyclicBlock {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicDecomposition {
    /// State transformation: `P⁻¹AP = diag(A_1, …, A_k)`.
    pub p: DMatrix<f64>,
    /// Input transformation.
    pub q: DMatrix<f64>,
    pub blocks: Vec<CyclicBlock>,
    /// Transformed input matrix `P⁻¹BQ` (block upper triangular).
    pub b_bar: DMatrix<f64>,
    /// `H(A_i)` per block.
    pub h: Vec<f64>,
    /// Seed the decomposition was built with.
    pub seed: u64,
    /// Zero when `Q = I` worked, otherwise the index of the random retry used.
    pub attempt: usize,
}

impl CyclicDecomposition {
    /// Assembles a decomposition from user-supplied parts. `h` and `P⁻¹BQ`
    /// are derived; nothing is checked beyond dimensions (see
    /// [`verify_decomposition`]).
    pub fn from_parts(
        plant: &Plant,
        p: DMatrix<f64>,
        q: DMatrix<f64>,
        blocks: Vec<CyclicBlock>,
    ) -> Result<Self> {
        let (n, m) = (plant.n(), plant.m());
        if p.shape() != (n, n) || q.shape() != (m, m) {
            return Err(Error::DimensionMismatch(format!(
                "P must be {n}x{n} and Q {m}x{m}, got {:?} and {:?}",
                p.shape(),
                q.shape()
            )));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidInput(
                "decomposition needs at least one block".into(),
            ));
        }
        let mut total = 0;
        for (i, blk) in blocks.iter().enumerate() {
            if !blk.a.is_square() || blk.a.nrows() == 0 || blk.b.len() != blk.a.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "block {} has A of shape {:?} and b of length {}",
                    i + 1,
                    blk.a.shape(),
                    blk.b.len()
                )));
            }
            numerics::ensure_finite(&blk.a, "block matrix")?;
            total += blk.dim();
        }
        if total != n {
            return Err(Error::DimensionMismatch(format!(
                "block dimensions sum to {total}, state dimension is {n}"
            )));
        }
        numerics::ensure_finite(&p, "P")?;
        numerics::ensure_finite(&q, "Q")?;
        let p_inv = p
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("P is singular".into()))?;
        let b_bar = &p_inv * plant.b() * &q;
        let h = blocks
            .iter()
            .map(|b| Ok(entropy_of(&numerics::eigenvalues(&b.a)?).value))
            .collect::<Result<Vec<_>>>()?;
        Ok(CyclicDecomposition {
            p,
            q,
            blocks,
            b_bar,
            h,
            seed: 0,
            attempt: 0,
        })
    }

    /// Cyclic index `k`.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Row offset of each block inside the decomposed state.
    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let o = *acc;
                *acc += b.dim();
                Some(o)
            })
            .collect()
    }

    /// `diag(A_1, …, A_k)`.
    pub fn block_diagonal(&self) -> DMatrix<f64> {
        let n: usize = self.blocks.iter().map(CyclicBlock::dim).sum();
        let mut out = DMatrix::zeros(n, n);
        for (blk, o) in self.blocks.iter().zip(self.offsets()) {
            out.view_mut((o, o), (blk.dim(), blk.dim()))
                .copy_from(&blk.a);
        }
        out
    }

    /// Number of blocks with positive entropy.
    pub fn unstable_blocks(&self) -> usize {
        self.h.iter().filter(|&&h| h > 0.0).count()
    }
}

/// Cyclic index: the largest geometric multiplicity in the spectrum.
pub fn cyclic_index(a: &DMatrix<f64>) -> Result<usize> {
    let spec = numerics::eigendecompose(a)?;
    if !spec.is_diagonalizable() {
        return Err(Error::NotDiagonalizable {
            condition: spec.condition,
        });
    }
    Ok(spec
        .multiplicity_clusters
        .iter()
        .map(Vec::len)
        .max()
        .unwrap_or(1))
}

/// One eigenvalue cluster, or a conjugate pair of clusters counted once.
struct Mode {
    value: Complex64,
    complex: bool,
    /// Eigenvector columns (for complex modes, those of `value` with `Im > 0`).
    vectors: DMatrix<Complex64>,
    /// Matching rows of `V⁻¹`.
    left: DMatrix<Complex64>,
}

/// Decomposes a stabilizable pair with diagonalizable `A`.
pub fn cyclic_decompose(plant: &Plant, seed: u64) -> Result<CyclicDecomposition> {
    let (a, b) = (plant.a(), plant.b());
    if let Some(eigenvalue) = numerics::uncontrollable_unstable_eigenvalue(a, b)? {
        return Err(Error::Unstabilizable { eigenvalue });
    }
    let spec = numerics::eigendecompose(a)?;
    if !spec.is_diagonalizable() {
        return Err(Error::NotDiagonalizable {
            condition: spec.condition,
        });
    }
    let v_inv = spec
        .basis
        .clone()
        .try_inverse()
        .ok_or(Error::NotDiagonalizable {
            condition: f64::INFINITY,
        })?;
    let tol = numerics::eig_tolerance(a.norm());
    let modes: Vec<Mode> = spec
        .multiplicity_clusters
        .iter()
        .enumerate()
        .filter_map(|(ci, idx)| {
            let value = spec.cluster_value(ci);
            if value.im < -tol {
                return None;
            }
            let g = idx.len();
            let mut vectors = DMatrix::zeros(a.nrows(), g);
            let mut left = DMatrix::zeros(g, a.nrows());
            for (k, &i) in idx.iter().enumerate() {
                vectors.set_column(k, &spec.basis.column(i));
                left.set_row(k, &v_inv.row(i));
            }
            Some(Mode {
                value,
                complex: value.im > tol,
                vectors,
                left,
            })
        })
        .collect();

    let mut last_err = Error::DecompositionFailed("no attempt made".into());
    for attempt in 0..=MAX_RETRIES {
        let q = if attempt == 0 {
            DMatrix::identity(plant.m(), plant.m())
        } else {
            random_orthogonal(plant.m(), seed.wrapping_add(attempt as u64))
        };
        match build(plant, &modes, q, seed, attempt) {
            Ok(d) => {
                let report = verify_decomposition(plant, &d);
                if report.passed() {
                    return Ok(d);
                }
                last_err = Error::DecompositionFailed(report.summary());
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn random_orthogonal(m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    g.qr().q()
}

fn build(
    plant: &Plant,
    modes: &[Mode],
    q: DMatrix<f64>,
    seed: u64,
    attempt: usize,
) -> Result<CyclicDecomposition> {
    let n = plant.n();
    let bq = (plant.b() * &q).map(|v| Complex64::new(v, 0.0));
    let k = modes.iter().map(|md| md.vectors.ncols()).max().unwrap_or(1);

    // Per mode: recombined eigenvectors, one per block index.
    let mut columns: Vec<Vec<DVector<Complex64>>> = vec![Vec::new(); k];
    let mut values: Vec<Vec<&Mode>> = vec![Vec::new(); k];
    for md in modes {
        let (s_inv, pivots) = staircase(&md.left, &bq);
        let unstable = md.value.re > -TAU_AXIS;
        let g = md.vectors.ncols();
        if unstable && pivots.iter().take(g).any(|ok| !ok) {
            return Err(Error::DecompositionFailed(format!(
                "input transformation leaves eigenvalue {} without a unit pivot",
                md.value
            )));
        }
        let s = s_inv
            .try_inverse()
            .ok_or_else(|| Error::DecompositionFailed("singular cluster transform".into()))?;
        let vecs = &md.vectors * s;
        for i in 0..g {
            columns[i].push(vecs.column(i).into_owned());
            values[i].push(md);
        }
    }

    let mut p = DMatrix::zeros(n, n);
    let mut blocks = Vec::with_capacity(k);
    let mut col = 0;
    for i in 0..k {
        let dim: usize = values[i]
            .iter()
            .map(|md| if md.complex { 2 } else { 1 })
            .sum();
        let mut a_i = DMatrix::zeros(dim, dim);
        let mut r = 0;
        for (v, md) in columns[i].iter().zip(&values[i]) {
            if md.complex {
                let w = v * Complex64::new(2.0, 0.0);
                p.set_column(col, &w.map(|z| z.re));
                p.set_column(col + 1, &w.map(|z| z.im));
                let (re, im) = (md.value.re, md.value.im);
                a_i[(r, r)] = re;
                a_i[(r, r + 1)] = im;
                a_i[(r + 1, r)] = -im;
                a_i[(r + 1, r + 1)] = re;
                col += 2;
                r += 2;
            } else {
                p.set_column(col, &v.map(|z| z.re));
                a_i[(r, r)] = md.value.re;
                col += 1;
                r += 1;
            }
        }
        blocks.push(CyclicBlock {
            a: a_i,
            b: vec![0.0; dim],
        });
    }

    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DecompositionFailed("state transformation is singular".into()))?;
    let b_bar = &p_inv * plant.b() * &q;
    let mut offset = 0;
    for (i, blk) in blocks.iter_mut().enumerate() {
        if i < plant.m() {
            blk.b = (0..blk.dim()).map(|r| b_bar[(offset + r, i)]).collect();
        }
        offset += blk.dim();
    }
    let h = blocks
        .iter()
        .map(|blk| Ok(entropy_of(&numerics::eigenvalues(&blk.a)?).value))
        .collect::<Result<Vec<_>>>()?;
    Ok(CyclicDecomposition {
        p,
        q,
        blocks,
        b_bar,
        h,
        seed,
        attempt,
    })
}

/// Row operations `S⁻¹` on a cluster's left eigenvectors `w` (g×n) that
/// make the coordinates `S⁻¹·w·BQ` upper triangular with unit pivots.
///
/// The rows are first orthonormalized; the QR factor of the coordinate
/// block then picks, for each row `i`, the direction that annihilates input
/// columns `0..i` and is orthogonal to the later rows. The result does not
/// depend on which eigenvector basis the cluster came with. `pivots[i]`
/// records whether row `i` has a nonzero diagonal entry.
fn staircase(w: &DMatrix<Complex64>, bq: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<bool>) {
    let g = w.nrows();
    let p = g.min(bq.ncols());
    let qr_w = w.adjoint().qr();
    let t0 = qr_w
        .r()
        .adjoint()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::identity(g, g));
    let m = &t0 * w * bq;
    let mut aug = DMatrix::<Complex64>::zeros(g, p + g);
    aug.view_mut((0, 0), (g, p)).copy_from(&m.columns(0, p));
    aug.view_mut((0, p), (g, g)).fill_with_identity();
    let qm = aug.qr().q();
    let r = qm.adjoint() * &m;
    let scale = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let tol = 1e-9 * scale;
    let mut pivots = vec![false; g];
    let mut norm = vec![Complex64::new(1.0, 0.0); g];
    for i in 0..p {
        if scale > 0.0 && r[(i, i)].norm() > tol {
            pivots[i] = true;
            norm[i] = Complex64::new(1.0, 0.0) / r[(i, i)];
        }
    }
    let n_mat = DMatrix::from_diagonal(&DVector::from_vec(norm));
    (n_mat * qm.adjoint() * t0, pivots)
}

/// One numerically re-checked invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub checks: Vec<InvariantCheck>,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({:e}): {}", c.name, c.residual, c.detail))
            .collect();
        if failed.is_empty() {
            "all invariants hold".into()
        } else {
            failed.join("; ")
        }
    }
}

/// Re-checks every decomposition invariant against the plant.
pub fn verify_decomposition(plant: &Plant, d: &CyclicDecomposition) -> DecompositionReport {
    let mut checks = Vec::new();
    let mut push = |name, passed, residual, detail: String| {
        checks.push(InvariantCheck {
            name,
            passed,
            residual,
            detail,
        })
    };
    let (n, m) = (plant.n(), plant.m());
    let dims: usize = d.blocks.iter().map(CyclicBlock::dim).sum();
    let shapes_ok = dims == n
        && d.p.shape() == (n, n)
        && d.q.shape() == (m, m)
        && d.h.len() == d.blocks.len()
        && d.blocks
            .iter()
            .all(|b| b.a.is_square() && b.b.len() == b.dim());
    push(
        "dimensions",
        shapes_ok,
        (dims as f64 - n as f64).abs(),
        format!("block dimensions sum to {dims}, n = {n}"),
    );
    if !shapes_ok {
        return DecompositionReport { checks };
    }

    let p_inv = d.p.clone().try_inverse();
    let q_inv = d.q.clone().try_inverse();
    let p_cond = numerics::condition_number(&d.p);
    let q_cond = numerics::condition_number(&d.q);
    push(
        "p_nonsingular",
        p_inv.is_some() && p_cond <= 1e12,
        p_cond,
        "condition number of P".into(),
    );
    push(
        "q_nonsingular",
        q_inv.is_some() && q_cond <= 1e12,
        q_cond,
        "condition number of Q".into(),
    );
    let Some(p_inv) = p_inv else {
        return DecompositionReport { checks };
    };

    let a_scale = plant.a().norm().max(1.0);
    let res = (&p_inv * plant.a() * &d.p - d.block_diagonal()).norm();
    push(
        "block_diagonal",
        res <= 1e-6 * a_scale,
        res,
        "‖P⁻¹AP − diag(A_i)‖".into(),
    );

    let b_scale = plant.b().norm().max(1.0);
    let bb = &p_inv * plant.b() * &d.q;
    let offsets = d.offsets();
    let mut stair: f64 = 0.0;
    for (i, (blk, &o)) in d.blocks.iter().zip(&offsets).enumerate() {
        for (r, &bi) in blk.b.iter().enumerate() {
            let actual = if i < m { bb[(o + r, i)] } else { 0.0 };
            stair = stair.max((actual - bi).abs());
        }
        // no input column may reach back into an earlier-indexed block's
        // rows from a later block: rows of block i vanish in columns < i
        for c in 0..i.min(m) {
            for r in 0..blk.dim() {
                stair = stair.max(bb[(o + r, c)].abs());
            }
        }
    }
    push(
        "input_staircase",
        stair <= 1e-6 * b_scale,
        stair,
        "P⁻¹BQ block upper triangular with b_i on the diagonal".into(),
    );

    let mut worst_block = None;
    for (i, blk) in d.blocks.iter().enumerate() {
        let bcol = DMatrix::from_column_slice(blk.dim(), 1, &blk.b);
        match numerics::uncontrollable_unstable_eigenvalue(&blk.a, &bcol) {
            Ok(None) => {}
            _ => {
                worst_block.get_or_insert(i + 1);
            }
        }
    }
    push(
        "blocks_stabilizable",
        worst_block.is_none(),
        worst_block.unwrap_or(0) as f64,
        match worst_block {
            Some(i) => format!("block {i} is not stabilizable"),
            None => "every (A_i, b_i) stabilizable".into(),
        },
    );

    let spectra: Vec<Vec<Complex64>> = d
        .blocks
        .iter()
        .map(|b| numerics::eigenvalues(&b.a).unwrap_or_default())
        .collect();
    let tol = numerics::eig_tolerance(plant.a().norm());
    let mut nest: f64 = 0.0;
    for w in spectra.windows(2) {
        for l in &w[1] {
            let d = w[0]
                .iter()
                .map(|x| (x - l).norm())
                .fold(f64::INFINITY, f64::min);
            nest = nest.max(d);
        }
    }
    push(
        "spectrum_nested",
        nest <= tol,
        nest,
        "spectrum(A_{i+1}) ⊆ spectrum(A_i)".into(),
    );

    let mut h_err: f64 = 0.0;
    let mut order_ok = true;
    for (i, s) in spectra.iter().enumerate() {
        h_err = h_err.max((entropy_of(s).value - d.h[i]).abs());
        if i > 0 && d.h[i] > d.h[i - 1] + 1e-9 * d.h[i - 1].abs().max(1.0) {
            order_ok = false;
        }
    }
    push(
        "entropy_order",
        order_ok && h_err <= 1e-8 * a_scale,
        h_err,
        "h non-increasing and h_i = H(A_i)".into(),
    );

    let total = numerics::eigenvalues(plant.a())
        .map(|e| entropy_of(&e).value)
        .unwrap_or(f64::NAN);
    let sum: f64 = d.h.iter().sum();
    let err = (total - sum).abs();
    push(
        "entropy_total",
        err <= 1e-8 * a_scale,
        err,
        format!("Σ H(A_i) = {sum}, H(A) = {total}"),
    );

    // residual: largest real part over blocks without an input, 0 when none
    let extra = spectra
        .iter()
        .skip(m)
        .flat_map(|s| s.iter().map(|l| l.re))
        .reduce(f64::max);
    push(
        "uncontrolled_blocks_stable",
        extra.is_none_or(|e| e < -TAU_AXIS),
        extra.unwrap_or(0.0),
        format!(
            "k = {}, m = {m}; blocks beyond the inputs must be Hurwitz",
            d.k()
        ),
    );

    DecompositionReport { checks }
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

    #[test]
    fn cyclic_index_examples() {
        assert_eq!(cyclic_index(&diag(&[4.0, 2.0, 1.0, 1.0])).unwrap(), 2);
        assert_eq!(cyclic_index(&diag(&[1.0, 2.0, 3.0])).unwrap(), 1);
        assert_eq!(cyclic_index(&DMatrix::identity(3, 3)).unwrap(), 3);
    }

    #[test]
    fn cyclic_index_rejects_jordan_block() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            cyclic_index(&a),
            Err(Error::NotDiagonalizable { .. })
        ));
    }

    #[test]
    fn reference_decomposition_is_already_in_cyclic_form() {
        let p = reference_plant();
        let d = cyclic_decompose(&p, 0).unwrap();
        assert_eq!(d.k(), 2);
        assert_eq!(d.attempt, 0);
        assert!((d.p.clone() - DMatrix::identity(4, 4)).norm() < 1e-12);
        assert!((d.q.clone() - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((d.blocks[0].a.clone() - diag(&[4.0, 2.0, 1.0])).norm() < 1e-12);
        for v in &d.blocks[0].b {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((d.blocks[1].a[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((d.blocks[1].b[0] - 1.0).abs() < 1e-12);
        assert!((d.h[0] - 7.0).abs() < 1e-12 && (d.h[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_pair_splits_into_scalar_blocks() {
        let p = Plant::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let d = cyclic_decompose(&p, 0).unwrap();
        assert_eq!(d.k(), 2);
        assert_eq!(d.h, vec![1.0, 1.0]);
        assert!(verify_decomposition(&p, &d).passed());
    }

    #[test]
    fn single_input_cyclic_pair() {
        let p = Plant::new(
            diag(&[3.0, 5.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let d = cyclic_decompose(&p, 0).unwrap();
        assert_eq!(d.k(), 1);
        assert!((d.h[0] - 8.0).abs() < 1e-12);
        assert!(verify_decomposition(&p, &d).passed());
    }

    #[test]
    fn complex_pair_becomes_real_two_by_two_cell() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -2.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
        let b = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 1.0]);
        let p = Plant::new(a, b).unwrap();
        let d = cyclic_decompose(&p, 0).unwrap();
        assert_eq!(d.k(), 1);
        assert!((d.h[0] - 2.0).abs() < 1e-10);
        let a1 = &d.blocks[0].a;
        assert_eq!(a1[(0, 1)], 2.0);
        assert_eq!(a1[(1, 0)], -2.0);
        assert!((d.blocks[0].b[0] - 1.0).abs() < 1e-10 && d.blocks[0].b[1].abs() < 1e-10);
    }

    #[test]
    fn needs_input_mixing() {
        // eigenvalue 1 is only reached through the second input
        let p = Plant::new(
            diag(&[2.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let d = cyclic_decompose(&p, 7).unwrap();
        assert_eq!(d.k(), 1);
        assert!(d.attempt > 0);
        assert_eq!(d.seed, 7);
        assert!(verify_decomposition(&p, &d).passed());
    }

    #[test]
    fn uncontrollable_unstable_rejected() {
        let p = Plant::new(DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(1, 1)).unwrap();
        assert!(matches!(
            cyclic_decompose(&p, 0),
            Err(Error::Unstabilizable { .. })
        ));
    }

    #[test]
    fn extra_stable_blocks_beyond_inputs() {
        let p = Plant::new(
            diag(&[1.0, -1.0, -1.0]),
            DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]),
        )
        .unwrap();
        let d = cyclic_decompose(&p, 0).unwrap();
        assert_eq!(d.k(), 2);
        assert_eq!(d.blocks[1].b, vec![0.0]);
        let r = verify_decomposition(&p, &d);
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn verification_flags_bad_parts() {
        let p = reference_plant();
        let good = CyclicDecomposition::from_parts(
            &p,
            DMatrix::identity(4, 4),
            DMatrix::identity(2, 2),
            vec![
                CyclicBlock {
                    a: diag(&[4.0, 2.0, 1.0]),
                    b: vec![1.0; 3],
                },
                CyclicBlock {
                    a: diag(&[1.0]),
                    b: vec![1.0],
                },
            ],
        )
        .unwrap();
        assert!(verify_decomposition(&p, &good).passed());

        let mut shuffled = good.clone();
        shuffled.blocks.swap(0, 1);
        shuffled.h.swap(0, 1);
        let r = verify_decomposition(&p, &shuffled);
        assert!(!r.get("entropy_order").unwrap().passed);

        let mut wrong = good.clone();
        wrong.p[(0, 1)] = 0.5;
        assert!(
            !verify_decomposition(&p, &wrong)
                .get("block_diagonal")
                .unwrap()
                .passed
        );
    }
}
