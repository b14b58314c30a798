//! Gaussian area `F(Σ) = (4π)^{-n/2} ∫_Σ e^{-|x|²/4}` and the entropy
//! `λ(Σ) = sup_{c, x0} F(cΣ + x0)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::mesh::dot;
use crate::geometry::SimplicialMesh;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussianError {
    #[error("number of starts must be at least 1")]
    NoStarts,
    #[error("dilation must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("no start converged within {iterations} iterations (best gradient norm {best_gradient:e} at F = {best_value})")]
    NoConvergence {
        iterations: usize,
        best_gradient: f64,
        best_value: f64,
    },
}

/// Quadrature used for the Gaussian weight on each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// One point at the centroid.
    #[default]
    Centroid,
    /// Two Gauss points per segment, three interior points per triangle.
    ThreePoint,
}

/// Quadrature points and weights of a mesh, reusable for every dilation
/// and translation of it.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    dim: usize,
    ambient: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussianSampler {
    pub fn new(mesh: &SimplicialMesh, rule: Quadrature) -> Self {
        let big_n = mesh.ambient_dim();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for c in 0..mesh.num_cells() {
            let cell = mesh.cell(c);
            let measure = mesh.cell_measure(c);
            let bary: Vec<Vec<f64>> = match (rule, mesh.dim()) {
                (Quadrature::Centroid, d) => vec![vec![1.0 / (d as f64 + 1.0); d + 1]],
                (Quadrature::ThreePoint, 1) => {
                    let g = 0.5 / 3f64.sqrt();
                    vec![vec![0.5 + g, 0.5 - g], vec![0.5 - g, 0.5 + g]]
                }
                (Quadrature::ThreePoint, _) => vec![
                    vec![2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
                    vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
                    vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
                ],
            };
            let share = measure / bary.len() as f64;
            for b in bary {
                for k in 0..big_n {
                    points.push(cell.iter().zip(&b).map(|(&v, w)| w * mesh.vertex(v)[k]).sum());
                }
                weights.push(share);
            }
        }
        Self {
            dim: mesh.dim(),
            ambient: big_n,
            points,
            weights,
        }
    }

    fn normalization(&self) -> f64 {
        (4.0 * std::f64::consts::PI).powf(-(self.dim as f64) / 2.0)
    }

    /// `F(c·Σ + x0)`.
    pub fn value(&self, c: f64, x0: &[f64]) -> f64 {
        let scale = self.normalization() * c.powi(self.dim as i32);
        let mut s = 0.0;
        let mut y = vec![0.0; self.ambient];
        for (p, w) in self.points.chunks(self.ambient).zip(&self.weights) {
            for k in 0..self.ambient {
                y[k] = c * p[k] + x0[k];
            }
            s += w * (-0.25 * dot(&y, &y)).exp();
        }
        scale * s
    }

    /// `F` together with `(∂F/∂log c, ∂F/∂x0)` at `(c, x0)`.
    pub fn value_and_gradient(&self, c: f64, x0: &[f64]) -> (f64, f64, Vec<f64>) {
        let n = self.dim as f64;
        let scale = self.normalization() * c.powi(self.dim as i32);
        let mut f = 0.0;
        let mut dlogc = 0.0;
        let mut dx0 = vec![0.0; self.ambient];
        let mut y = vec![0.0; self.ambient];
        for (p, w) in self.points.chunks(self.ambient).zip(&self.weights) {
            for k in 0..self.ambient {
                y[k] = c * p[k] + x0[k];
            }
            let g = scale * w * (-0.25 * dot(&y, &y)).exp();
            f += g;
            // d|y|²/d log c = 2⟨y, c p⟩
            let ycp: f64 = (0..self.ambient).map(|k| y[k] * c * p[k]).sum();
            dlogc += g * (n - 0.5 * ycp);
            for k in 0..self.ambient {
                dx0[k] -= 0.5 * g * y[k];
            }
        }
        (f, dlogc, dx0)
    }

    /// Measure-weighted centroid and RMS distance from it.
    fn centroid_and_rms(&self) -> (Vec<f64>, f64) {
        let total: f64 = self.weights.iter().sum();
        let mut cen = vec![0.0; self.ambient];
        for (p, w) in self.points.chunks(self.ambient).zip(&self.weights) {
            for k in 0..self.ambient {
                cen[k] += w * p[k] / total;
            }
        }
        let var: f64 = self
            .points
            .chunks(self.ambient)
            .zip(&self.weights)
            .map(|(p, w)| w * p.iter().zip(&cen).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum::<f64>()
            / total;
        (cen, var.sqrt())
    }
}

/// `F(Σ)` with the centroid rule.
pub fn gaussian_area(mesh: &SimplicialMesh) -> f64 {
    gaussian_area_with(mesh, Quadrature::Centroid)
}

pub fn gaussian_area_with(mesh: &SimplicialMesh, rule: Quadrature) -> f64 {
    let s = GaussianSampler::new(mesh, rule);
    s.value(1.0, &vec![0.0; mesh.ambient_dim()])
}

/// `(∂/∂log c, ∂/∂x0)` of `F(c·Σ + x0)`.
pub fn f_gradient_cx(mesh: &SimplicialMesh, c: f64, x0: &[f64]) -> Result<(f64, Vec<f64>), GaussianError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(GaussianError::NonPositiveScale(c));
    }
    let s = GaussianSampler::new(mesh, Quadrature::Centroid);
    let (_, dc, dx) = s.value_and_gradient(c, x0);
    Ok((dc, dx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub lambda: f64,
    pub best_c: f64,
    pub best_x0: Vec<f64>,
    pub starts: usize,
    pub converged_starts: usize,
    pub gradient_norm_at_best: f64,
    pub iterations_at_best: usize,
    /// `F(Σ)` itself, the `c = 1, x0 = 0` evaluation.
    pub f_identity: f64,
    /// `|∂F/∂log c|` stays below 1e-10 across `[c/2, 2c]`.
    pub flat_direction: bool,
    /// Largest Gaussian weight `e^{-|y|²/4}` on a boundary vertex of the
    /// optimal configuration; zero for closed meshes.
    pub tail_bound: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct EntropyOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub quadrature: Quadrature,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self {
            starts: 4,
            seed: 0,
            max_iterations: 10_000,
            quadrature: Quadrature::Centroid,
        }
    }
}

struct Ascent {
    value: f64,
    theta: Vec<f64>,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

/// Multi-start quasi-Newton ascent of `F(cΣ + x0)` over `log c` and the
/// centre `-x0/c`, measured in units of the RMS radius.
pub fn entropy(mesh: &SimplicialMesh, starts: usize, seed: u64) -> Result<EntropyReport, GaussianError> {
    entropy_with(
        mesh,
        &EntropyOptions {
            starts,
            seed,
            ..Default::default()
        },
    )
}

pub fn entropy_with(mesh: &SimplicialMesh, opts: &EntropyOptions) -> Result<EntropyReport, GaussianError> {
    if opts.starts == 0 {
        return Err(GaussianError::NoStarts);
    }
    let sampler = GaussianSampler::new(mesh, opts.quadrature);
    let big_n = mesh.ambient_dim();
    let n = mesh.dim() as f64;
    let (cen, rms) = sampler.centroid_and_rms();
    let c0 = (2.0 * n).sqrt() / rms.max(f64::MIN_POSITIVE);
    // θ = (log c, u) with x0 = -c·rms·u: the centre u does not move with c
    let r = rms.max(f64::MIN_POSITIVE);
    let mut first = vec![c0.ln()];
    first.extend(cen.iter().map(|x| x / r));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let log_jitter = Normal::new(0.0, 0.5).expect("valid sigma");
    let shift_jitter = Normal::new(0.0, 1.0).expect("valid sigma");
    let mut runs = Vec::with_capacity(opts.starts);
    for s in 0..opts.starts {
        let mut theta = first.clone();
        if s > 0 {
            theta[0] += log_jitter.sample(&mut rng);
            for t in theta.iter_mut().skip(1) {
                *t += shift_jitter.sample(&mut rng);
            }
        }
        runs.push(ascend(&sampler, r, theta, opts.max_iterations));
    }

    let converged_starts = runs.iter().filter(|r| r.converged).count();
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .max_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then_with(|| lex(&b.theta, &a.theta))
        });
    let Some(best) = best else {
        let r = runs
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .expect("at least one start");
        return Err(GaussianError::NoConvergence {
            iterations: opts.max_iterations,
            best_gradient: r.grad_norm,
            best_value: r.value,
        });
    };

    let best_c = best.theta[0].exp();
    let best_x0: Vec<f64> = best.theta[1..].iter().map(|u| -best_c * r * u).collect();
    let flat_direction = [0.5, 1.0, 2.0].iter().all(|f| {
        let (_, dc, _) = sampler.value_and_gradient(best_c * f, &best_x0);
        dc.abs() < 1e-10
    });
    let tail_bound = (0..mesh.num_vertices())
        .filter(|&v| mesh.on_boundary()[v])
        .map(|v| {
            let y: Vec<f64> = mesh.vertex(v).iter().zip(&best_x0).map(|(x, t)| best_c * x + t).collect();
            (-0.25 * dot(&y, &y)).exp()
        })
        .fold(0.0, f64::max);
    Ok(EntropyReport {
        lambda: best.value,
        best_c,
        best_x0,
        starts: opts.starts,
        converged_starts,
        gradient_norm_at_best: best.grad_norm,
        iterations_at_best: best.iterations,
        f_identity: sampler.value(1.0, &vec![0.0; big_n]),
        flat_direction,
        tail_bound,
        seed: opts.seed,
    })
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// BFGS on `-F` with Armijo backtracking.
fn ascend(sampler: &GaussianSampler, rms: f64, mut theta: Vec<f64>, max_iter: usize) -> Ascent {
    let dim = theta.len();
    let eval = |t: &[f64]| -> (f64, Vec<f64>) {
        let c = t[0].exp();
        let x0: Vec<f64> = t[1..].iter().map(|u| -c * rms * u).collect();
        let (f, dc, dx) = sampler.value_and_gradient(c, &x0);
        let mut g = vec![dc + dot(&dx, &x0)];
        g.extend(dx.iter().map(|d| -c * rms * d));
        (f, g)
    };
    let (mut f, mut g) = eval(&theta);
    let mut h = nalgebra::DMatrix::<f64>::identity(dim, dim);
    let mut iterations = 0;
    let norm = |g: &[f64]| dot(g, g).sqrt();
    let tol = |f: f64| 1e-10 * f.abs().max(f64::MIN_POSITIVE);

    let mut best_grad = norm(&g);
    let mut stalled = 0;
    while iterations < max_iter {
        let gn = norm(&g);
        if gn < tol(f) {
            break;
        }
        if gn < 0.5 * best_grad {
            best_grad = gn;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 50 {
                break;
            }
        }
        iterations += 1;
        let gv = nalgebra::DVector::from_column_slice(&g);
        let mut p: Vec<f64> = (&h * &gv).iter().copied().collect();
        if dot(&p, &g) <= 0.0 {
            h = nalgebra::DMatrix::identity(dim, dim);
            p = g.clone();
        }
        // cap the step so one iteration never moves by more than a unit
        let pn = norm(&p);
        if pn > 1.0 {
            p.iter_mut().for_each(|x| *x /= pn);
        }
        let slope = dot(&p, &g);
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-16 {
            let trial: Vec<f64> = theta.iter().zip(&p).map(|(t, d)| t + step * d).collect();
            let (ft, gt) = eval(&trial);
            // near the top F is flat to roundoff; then the directional
            // derivative decides (approximate Wolfe)
            let armijo = ft >= f + 1e-4 * step * slope;
            let dslope = dot(&gt, &p);
            let approx = ft >= f - 1e-14 * f.abs() && dslope <= 0.9 * slope && dslope >= -0.8 * slope;
            if ft.is_finite() && (armijo || approx) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else { break };
        let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
        // ascent on F is descent on -F: y = ∇(-F)_new - ∇(-F)_old
        let y: Vec<f64> = g.iter().zip(&gt).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            let sv = nalgebra::DVector::from_column_slice(&s);
            let yv = nalgebra::DVector::from_column_slice(&y);
            let rho = 1.0 / sy;
            let i = nalgebra::DMatrix::<f64>::identity(dim, dim);
            let a = &i - rho * &sv * yv.transpose();
            let b = &i - rho * &yv * sv.transpose();
            h = &a * &h * &b + rho * &sv * sv.transpose();
        }
        theta = trial;
        f = ft;
        g = gt;
    }
    let grad_norm = norm(&g);
    Ascent {
        value: f,
        converged: grad_norm < 1e-8 * f.abs(),
        theta,
        grad_norm,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CatalogSpec;
    use std::f64::consts::{E, PI};

    #[test]
    fn circle_shrinker_area() {
        let m = CatalogSpec::circle(2f64.sqrt(), 512).generate().unwrap();
        let f = gaussian_area(&m);
        assert!((f - (2.0 * PI / E).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn gradient_vanishes_on_shrinker_sphere() {
        // the inscribed discrete sphere is critical only in the limit: the
        // dilation derivative decays like the squared mesh size
        let mut prev = f64::INFINITY;
        for level in 2..5 {
            let m = CatalogSpec::sphere(2.0, level).generate().unwrap();
            let (dc, dx) = f_gradient_cx(&m, 1.0, &[0.0; 3]).unwrap();
            assert!(dc.abs() < prev / 3.5);
            assert!(dx.iter().all(|x| x.abs() < 1e-12));
            prev = dc.abs();
        }
        let unit = CatalogSpec::sphere(1.0, 3).generate().unwrap();
        assert!(f_gradient_cx(&unit, 1.0, &[0.0; 3]).unwrap().0 > 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = CatalogSpec::Ellipse {
            a: 1.5,
            b: 0.7,
            segments: 64,
        }
        .generate()
        .unwrap();
        let s = GaussianSampler::new(&m, Quadrature::Centroid);
        let (c, x0) = (1.3, [0.2, -0.4]);
        let (_, dc, dx) = s.value_and_gradient(c, &x0);
        let h: f64 = 1e-5;
        let fd_c = (s.value(c * h.exp(), &x0) - s.value(c * (-h).exp(), &x0)) / (2.0 * h);
        assert!((fd_c - dc).abs() < 1e-8);
        let fd_x = (s.value(c, &[x0[0] + h, x0[1]]) - s.value(c, &[x0[0] - h, x0[1]])) / (2.0 * h);
        assert!((fd_x - dx[0]).abs() < 1e-8);
    }

    #[test]
    fn circle_entropy() {
        let m = CatalogSpec::circle(5.0, 256).generate().unwrap();
        let r = entropy(&m, 3, 1).unwrap();
        assert!((r.lambda - (2.0 * PI / E).sqrt()).abs() / r.lambda < 5e-3);
        assert!((r.best_c - 2f64.sqrt() / 5.0).abs() < 1e-3);
        assert!(r.gradient_norm_at_best < 1e-8 * r.lambda);
        assert!(r.lambda >= r.f_identity);
    }

    #[test]
    fn zero_starts_rejected() {
        let m = CatalogSpec::circle(1.0, 16).generate().unwrap();
        assert_eq!(entropy(&m, 0, 0), Err(GaussianError::NoStarts));
    }
}
