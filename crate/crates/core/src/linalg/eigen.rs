//! Largest eigenpairs of the symmetric pencil `A φ = μ diag(m) φ`.
//!
//! Small problems go through a dense symmetric eigendecomposition. Larger
//! ones use shift-invert block Krylov with Rayleigh-Ritz and full
//! reorthogonalization. The first shift sits just above the top of the
//! spectrum; when an isolated top value hides a cluster below it, later
//! passes deflate what converged and re-shift into the cluster.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CsrMatrix, EnvelopeCholesky, EnvelopeLdl, LinalgError};

/// Problems at or below this size are solved densely.
pub const DENSE_LIMIT: usize = 700;

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Descending.
    pub values: Vec<f64>,
    /// Mass-orthonormal: `v_i^T diag(m) v_j = δ_ij`.
    pub vectors: Vec<Vec<f64>>,
}

/// Computes the `k` algebraically largest eigenpairs of `A φ = μ diag(mass) φ`.
///
/// `upper_bound` must dominate the largest eigenvalue; the shift is placed
/// a little above it. A bad bound shows up as a factorization failure and
/// the shift is pushed further out.
pub fn largest_eigenpairs(
    a: &CsrMatrix,
    mass: &[f64],
    k: usize,
    upper_bound: f64,
    seed: u64,
) -> Result<EigenPairs, LinalgError> {
    let n = a.dim();
    if mass.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: mass.len(),
        });
    }
    if let Some(i) = mass.iter().position(|&m| !(m > 0.0)) {
        return Err(LinalgError::NonPositiveMass { index: i });
    }
    let k = k.min(n);
    if k == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: vec![],
        });
    }
    if n <= DENSE_LIMIT {
        return Ok(dense_largest(a, mass, k));
    }

    let scale = a
        .diagonal()
        .iter()
        .zip(mass)
        .map(|(d, m)| (d / m).abs())
        .fold(0.0, f64::max);
    // σM - A is positive definite exactly when σ > μ_max, so a loose
    // bound can be tightened by bisection on factorizability. A shift
    // far above the wanted eigenvalues makes them hard to separate.
    let shifted_at = |sigma: f64| a.scaled_plus_diagonal(-1.0, &mass.iter().map(|m| sigma * m).collect::<Vec<_>>());
    let ones = vec![1.0; n];
    let rq_ones = dot(&ones, &a.mul_vec(&ones)) / mass.iter().sum::<f64>();
    let diag_max = a
        .diagonal()
        .iter()
        .zip(mass)
        .map(|(d, m)| d / m)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hi = upper_bound;
    let mut lo = rq_ones.max(diag_max).min(hi);
    for _ in 0..40 {
        let width = hi - lo;
        if width <= 1e-2 * hi.abs().max(lo.abs()) || width <= 1e-6 * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if EnvelopeCholesky::factor(&shifted_at(mid)).is_ok() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let upper_bound = hi;
    let gap = (hi - lo)
        .max(1e-3 * upper_bound.abs().max(1e-3 * scale))
        .max(f64::MIN_POSITIVE);
    spectrum_walk(a, mass, k, upper_bound, gap, scale, seed)
}

/// Factors `σM - A`, nudging σ off a near-singular pivot.
fn factor_shifted(a: &CsrMatrix, mass: &[f64], sigma: f64, scale: f64) -> Result<(f64, EnvelopeLdl), LinalgError> {
    let mut s = sigma;
    let nudge = 1e-7 * sigma.abs().max(1e-6 * scale).max(f64::MIN_POSITIVE);
    for attempt in 0..6 {
        let shifted = a.scaled_plus_diagonal(-1.0, &mass.iter().map(|m| s * m).collect::<Vec<_>>());
        match EnvelopeLdl::factor(&shifted) {
            Ok(f) => return Ok((s, f)),
            Err(LinalgError::SingularPivot { .. }) => s += nudge * (attempt + 1) as f64,
            Err(e) => return Err(e),
        }
    }
    Err(LinalgError::ShiftFailed { upper_bound: sigma })
}

/// Most passes a spectrum walk may take before giving up.
const MAX_PASSES: usize = 16;

/// Repeated shift-invert passes. Each pass locks the pairs that converged
/// around its shift and moves the shift down to the next unresolved part of
/// the spectrum; the inertia of `σM - A` confirms nothing above the k-th
/// value was skipped.
fn spectrum_walk(
    a: &CsrMatrix,
    mass: &[f64],
    k: usize,
    upper_bound: f64,
    gap: f64,
    scale: f64,
    seed: u64,
) -> Result<EigenPairs, LinalgError> {
    let n = a.dim();
    let sqrt_m: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    // locked pairs: (μ, ψ = M^{1/2} φ with unit Euclidean norm)
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut sigma = upper_bound + gap;
    let mut last_basis = 0;
    for pass in 0..MAX_PASSES {
        let (s, ldl) = factor_shifted(a, mass, sigma, scale)?;
        let deflate: Vec<&[f64]> = locked.iter().map(|(_, p)| p.as_slice()).collect();
        let want = (k + BLOCK).saturating_sub(locked.len()).max(1).min(k);
        let out = krylov_pass(&ldl, &sqrt_m, want, &deflate, seed.wrapping_add(pass as u64));
        last_basis = out.basis;
        for (theta, psi) in out.converged {
            let phi: Vec<f64> = psi.iter().zip(&sqrt_m).map(|(p, q)| p / q).collect();
            let mu = dot(&phi, &a.mul_vec(&phi));
            debug_assert!(theta != 0.0);
            locked.push((mu, psi));
        }
        locked.sort_by(|x, y| y.0.total_cmp(&x.0));

        if locked.len() >= k || locked.len() >= n {
            let kk = k.min(locked.len());
            let mu_k = locked[kk - 1].0;
            let tau = mu_k - 1e-8 * mu_k.abs().max(1e-6 * scale);
            let (tau, ldl) = factor_shifted(a, mass, tau, scale)?;
            let expected = locked.iter().filter(|(m, _)| *m > tau).count();
            if ldl.negative_count() <= expected {
                return Ok(finish(&locked[..kk], &sqrt_m, mass));
            }
            // something above τ was missed: bracket it
            let (mut lo, mut hi) = (tau, upper_bound + gap);
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                let (mid, f) = factor_shifted(a, mass, mid, scale)?;
                let expected = locked.iter().filter(|(m, _)| *m > mid).count();
                if f.negative_count() > expected {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-3 * hi.abs().max(1e-3 * scale) {
                    break;
                }
            }
            sigma = hi;
        } else {
            match out.next_estimate {
                Some(theta) => {
                    let mu = s - 1.0 / theta;
                    sigma = mu + 1e-2 * mu.abs().max(1e-3 * scale);
                }
                None => return Err(LinalgError::NoConvergence { basis: out.basis }),
            }
        }
    }
    Err(LinalgError::NoConvergence { basis: last_basis })
}

fn finish(pairs: &[(f64, Vec<f64>)], sqrt_m: &[f64], mass: &[f64]) -> EigenPairs {
    let mut values = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    for (mu, psi) in pairs {
        let phi: Vec<f64> = psi.iter().zip(sqrt_m).map(|(p, q)| p / q).collect();
        let norm = mass_norm(&phi, mass);
        values.push(*mu);
        vectors.push(canonical_sign(phi.iter().map(|x| x / norm).collect()));
    }
    EigenPairs { values, vectors }
}

/// Dense reference solver for the same pencil, regardless of size.
pub fn dense_largest(a: &CsrMatrix, mass: &[f64], k: usize) -> EigenPairs {
    let n = a.dim();
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut b = a.to_dense();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    // symmetrize against assembly roundoff
    let b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let k = k.min(n);
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        values.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        let v: Vec<f64> = (0..n).map(|i| col[i] * inv_sqrt[i]).collect();
        vectors.push(canonical_sign(v));
    }
    EigenPairs { values, vectors }
}

/// Block size of the Krylov iteration. Larger than the multiplicity of any
/// eigenvalue we expect to resolve: symmetric meshes produce exactly
/// degenerate clusters that a single-vector recursion cannot split.
const BLOCK: usize = 8;

struct PassOutcome {
    /// Converged Ritz pairs `(θ, ψ)` of the shift-inverted operator.
    converged: Vec<(f64, Vec<f64>)>,
    /// Ritz value of the dominant pair that did not converge.
    next_estimate: Option<f64>,
    basis: usize,
}

/// Block Krylov on `C = M^{1/2} (σM - A)^{-1} M^{1/2}` restricted to the
/// complement of `deflate`, targeting the `want` values of largest |θ|.
fn krylov_pass(ldl: &EnvelopeLdl, sqrt_m: &[f64], want: usize, deflate: &[&[f64]], seed: u64) -> PassOutcome {
    let n = sqrt_m.len();
    let apply = |v: &[f64]| -> Vec<f64> {
        let rhs: Vec<f64> = v.iter().zip(sqrt_m).map(|(x, s)| x * s).collect();
        let y = ldl.solve(&rhs);
        y.iter().zip(sqrt_m).map(|(x, s)| x * s).collect()
    };
    let room = n - deflate.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block: Vec<Vec<f64>> = (0..BLOCK.min(room))
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();

    let max_basis = (8 * want + 16 * BLOCK).max(160).min(room);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    loop {
        let before_round = basis.len();
        for mut w in block.drain(..) {
            let before = dot(&w, &w).sqrt();
            for _ in 0..2 {
                for q in deflate.iter().copied().chain(basis.iter().map(|q| q.as_slice())) {
                    let c = dot(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let nrm = dot(&w, &w).sqrt();
            if nrm <= 1e-10 * before || basis.len() >= room {
                continue;
            }
            w.iter_mut().for_each(|x| *x /= nrm);
            images.push(apply(&w));
            basis.push(w);
        }

        let m = basis.len();
        let mut h = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let (theta, s) = symmetric_eigen_desc(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| theta[j].abs().total_cmp(&theta[i].abs()));
        let theta_max = order.first().map_or(0.0, |&i| theta[i].abs());
        let ritz = |c: usize| -> (Vec<f64>, Vec<f64>) {
            let mut u = vec![0.0; n];
            let mut cu = vec![0.0; n];
            for j in 0..m {
                let sj = s[(j, c)];
                for (x, q) in u.iter_mut().zip(&basis[j]) {
                    *x += sj * q;
                }
                for (x, q) in cu.iter_mut().zip(&images[j]) {
                    *x += sj * q;
                }
            }
            (u, cu)
        };
        let exhausted = m >= room || m == before_round;
        let mut converged = Vec::new();
        let mut next_estimate = None;
        for &c in order.iter().take(want) {
            let (u, cu) = ritz(c);
            let r: f64 = u
                .iter()
                .zip(&cu)
                .map(|(x, y)| (y - theta[c] * x).powi(2))
                .sum::<f64>()
                .sqrt();
            if exhausted || r <= 1e-10 * theta_max {
                converged.push((theta[c], u));
            } else {
                next_estimate = Some(theta[c]);
                break;
            }
        }
        let done = converged.len() >= want.min(m);
        if done || exhausted || m >= max_basis {
            return PassOutcome {
                converged,
                next_estimate,
                basis: m,
            };
        }
        block = images[before_round..].to_vec();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mass_norm(v: &[f64], mass: &[f64]) -> f64 {
    v.iter().zip(mass).map(|(x, m)| m * x * x).sum::<f64>().sqrt()
}

/// Fixes the sign so that the entry of largest magnitude is positive.
fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0.0f64;
    for &x in &v {
        if x.abs() > best.abs() + 1e-12 * best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Eigenvalues of a small dense symmetric matrix, descending. Used by
/// oracles and by the tangent-space fits.
pub fn symmetric_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;

    /// 1D Dirichlet Laplacian with a non-uniform lumped mass.
    fn pencil(n: usize) -> (CsrMatrix, Vec<f64>) {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.push(i, i, -2.0);
            if i + 1 < n {
                b.push(i, i + 1, 1.0);
                b.push(i + 1, i, 1.0);
            }
        }
        let mass = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.37).sin().abs()).collect();
        (b.build(), mass)
    }

    #[test]
    fn lanczos_matches_dense() {
        let (a, m) = pencil(900);
        let dense = dense_largest(&a, &m, 6);
        let it = largest_eigenpairs(&a, &m, 6, 0.0, 7).unwrap();
        for (x, y) in dense.values.iter().zip(&it.values) {
            assert!((x - y).abs() < 1e-9 * x.abs().max(1e-3), "{x} vs {y}");
        }
        for (u, v) in dense.vectors.iter().zip(&it.vectors) {
            let c: f64 = u.iter().zip(v).zip(&m).map(|((a, b), w)| a * b * w).sum();
            assert!((c.abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn resolves_exactly_degenerate_clusters() {
        // three identical decoupled copies: every eigenvalue is triple
        let copy = 300;
        let mut b = TripletBuilder::new(3 * copy);
        for c in 0..3 {
            for i in 0..copy {
                let v = c * copy + i;
                b.push(v, v, -2.0);
                if i + 1 < copy {
                    b.push(v, v + 1, 1.0);
                    b.push(v + 1, v, 1.0);
                }
            }
        }
        let a = b.build();
        let m = vec![1.0; 3 * copy];
        let it = largest_eigenpairs(&a, &m, 7, 0.0, 3).unwrap();
        let exact = |j: f64| -4.0 * (j * std::f64::consts::PI / (2.0 * (copy as f64 + 1.0))).sin().powi(2);
        for (i, v) in it.values.iter().enumerate() {
            let e = exact((i / 3 + 1) as f64);
            assert!((v - e).abs() < 1e-10, "{i}: {v} vs {e}");
        }
    }

    #[test]
    fn vectors_are_mass_orthonormal() {
        let (a, m) = pencil(50);
        let p = largest_eigenpairs(&a, &m, 5, 0.0, 1).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let g: f64 = p.vectors[i]
                    .iter()
                    .zip(&p.vectors[j])
                    .zip(&m)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-10);
            }
        }
        assert!(p.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn bad_mass_is_rejected() {
        let (a, mut m) = pencil(4);
        m[2] = 0.0;
        assert!(largest_eigenpairs(&a, &m, 2, 0.0, 0).is_err());
    }
}
