//! Direct minimization of the one-dimensional reduced quotient
//! `(int psi'^2)^theta (int psi^2)^{1-theta} / (int psi^q)^{2/q}`, `q = 2d/(d-2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::geometry;
use crate::grid::LogGrid;
use crate::profile::{ln_two_cosh, Sampled};

/// Starting profile of a descent run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initial {
    /// `exp(-s^2 / (2 width^2))` plus a seeded 1% perturbation.
    Gaussian { width: f64 },
    /// The closed-form optimizer `(2 cosh(eta s))^{-(d-2)/2}`, unperturbed.
    Terracini { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub grid: LogGrid,
    pub max_iters: usize,
    /// First trial step; later trial steps are Barzilai-Borwein steps.
    pub step0: f64,
    /// Stop once the L2 norm of the projected gradient of `log Q` falls below this;
    /// the default is of the order of the gradient the grid leaves at the exact optimizer.
    pub grad_tol: f64,
    /// Or once two consecutive accepted steps lower `Q` by less than this, relatively.
    pub rel_tol: f64,
    pub seed: u64,
    pub initial: Initial,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid: LogGrid::new(-30.0, 30.0, 3001).expect("valid default grid"),
            max_iters: 200_000,
            step0: 1e-3,
            grad_tol: 2e-4,
            rel_tol: 1e-11,
            seed: 0,
            initial: Initial::Gaussian { width: 2.0 },
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step0 > 0.0 && self.grad_tol > 0.0 && self.rel_tol >= 0.0) || self.max_iters == 0
        {
            return Err(Error::Domain(
                "solver needs positive step0, grad_tol, max_iters and nonnegative rel_tol".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub psi_star: Sampled,
    pub q_star: f64,
    pub q_initial: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// L2 distance to the best translated and dilated Terracini profile, both normalized.
    pub alignment_error: f64,
    pub fitted_eta: f64,
    pub fitted_shift: f64,
    /// Whether `theta = 1/d`, the only exponent making the quotient dilation invariant.
    pub scale_invariant: bool,
    /// Quotient after every accepted step.
    pub history: Vec<f64>,
}

/// `(d, theta)` reduced quotient on a Dirichlet grid.
#[derive(Debug, Clone, Copy)]
pub struct ReducedQuotient {
    pub theta: f64,
    pub power: f64,
    h: f64,
    int_power: Option<i32>,
}

/// Quotient from its three integrals.
pub fn quotient_from_integrals(
    dirichlet: f64,
    mass: f64,
    power_integral: f64,
    theta: f64,
    power: f64,
) -> f64 {
    dirichlet.powf(theta) * mass.powf(1.0 - theta) / power_integral.powf(2.0 / power)
}

impl ReducedQuotient {
    pub fn new(d: u32, theta: f64, grid: &LogGrid) -> Result<Self> {
        if d < 3 {
            return Err(Error::Domain(format!(
                "reduced quotient needs d >= 3, got {d}"
            )));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Domain(format!("theta = {theta} outside [0, 1]")));
        }
        let df = d as f64;
        let power = 2.0 * df / (df - 2.0);
        let int_power = (power.fract() == 0.0).then_some(power as i32);
        Ok(Self {
            theta,
            power,
            h: grid.spacing(),
            int_power,
        })
    }

    /// `(D, M, P)` with forward differences and zero boundary values.
    pub fn integrals(&self, psi: &[f64]) -> (f64, f64, f64) {
        let h = self.h;
        let dirichlet = psi.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h;
        let mass = h * psi.iter().map(|v| v * v).sum::<f64>();
        let pw = h * psi.iter().map(|v| self.pow_abs(*v, 0)).sum::<f64>();
        (dirichlet, mass, pw)
    }

    /// `|v|^{power - drop}`.
    fn pow_abs(&self, v: f64, drop: i32) -> f64 {
        match self.int_power {
            Some(k) => v.abs().powi(k - drop),
            None => v.abs().powf(self.power - drop as f64),
        }
    }

    pub fn value(&self, psi: &[f64]) -> f64 {
        let (dd, m, pw) = self.integrals(psi);
        quotient_from_integrals(dd, m, pw, self.theta, self.power)
    }

    pub fn log_value(&self, psi: &[f64]) -> f64 {
        let (dd, m, pw) = self.integrals(psi);
        self.theta * dd.ln() + (1.0 - self.theta) * m.ln() - (2.0 / self.power) * pw.ln()
    }

    /// L2 gradient of `log Q`; boundary entries stay zero.
    pub fn log_gradient(&self, psi: &[f64], out: &mut [f64]) {
        let (dd, m, pw) = self.integrals(psi);
        let h = self.h;
        let n = psi.len();
        let q = self.power;
        let (cd, cm, cp) = (self.theta / dd, (1.0 - self.theta) / m, (2.0 / q) / pw);
        out[0] = 0.0;
        out[n - 1] = 0.0;
        for i in 1..n - 1 {
            let lap = (2.0 * psi[i] - psi[i - 1] - psi[i + 1]) / (h * h);
            let v = psi[i];
            out[i] = cd * 2.0 * lap + cm * 2.0 * v - cp * q * self.pow_abs(v, 2) * v;
        }
    }

    fn l2_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Removes the components along the generators of translations and dilations at `psi`.
    ///
    /// Both are exact symmetries of the continuum quotient at `theta = 1/d`; on the
    /// grid they carry an O(h^2) slope that would otherwise drive a slow collapse.
    pub fn project_symmetries(&self, psi: &[f64], nodes: &[f64], g: &mut [f64]) {
        let n = psi.len();
        let h = self.h;
        let mut translate = vec![0.0; n];
        for i in 1..n - 1 {
            translate[i] = (psi[i + 1] - psi[i - 1]) / (2.0 * h);
        }
        let dilate: Vec<f64> = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    0.0
                } else {
                    nodes[i] * translate[i] + 0.5 * psi[i]
                }
            })
            .collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for mut v in [translate, dilate] {
            for e in &basis {
                let c = self.l2_dot(&v, e);
                v.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
            }
            let m = self.l2_dot(&v, &v).sqrt();
            if m > 1e-300 {
                v.iter_mut().for_each(|x| *x /= m);
                basis.push(v);
            }
        }
        for e in &basis {
            let c = self.l2_dot(g, e);
            g.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
        }
    }

    fn normalize(&self, psi: &mut [f64]) {
        let m = self.l2_dot(psi, psi).sqrt();
        psi.iter_mut().for_each(|v| *v /= m);
    }
}

fn terracini_samples(grid: &LogGrid, d: u32, eta: f64, shift: f64) -> Vec<f64> {
    let k = 0.5 * (d as f64 - 2.0);
    let n = grid.len();
    grid.nodes()
        .enumerate()
        .map(|(i, s)| {
            if i == 0 || i == n - 1 {
                0.0
            } else {
                (-k * ln_two_cosh(eta * (s - shift))).exp()
            }
        })
        .collect()
}

fn initial_samples(opts: &SolverOptions, d: u32) -> Vec<f64> {
    let grid = &opts.grid;
    let n = grid.len();
    match opts.initial {
        Initial::Terracini { eta } => terracini_samples(grid, d, eta, 0.0),
        Initial::Gaussian { width } => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            grid.nodes()
                .enumerate()
                .map(|(i, s)| {
                    let noise: f64 = rng.gen_range(-0.01..0.01);
                    if i == 0 || i == n - 1 {
                        0.0
                    } else {
                        let g = (-0.5 * (s / width).powi(2)).exp();
                        (g * (1.0 + noise)).max(0.0)
                    }
                })
                .collect()
        }
    }
}

/// Gradient descent on `log Q` with `int psi^2 = 1` after every step.
///
/// Trial steps are Barzilai-Borwein steps, accepted by Armijo backtracking
/// (factor 0.5, sufficient decrease 1e-4), so the quotient never increases.
pub fn minimize_reduced_quotient(d: u32, theta: f64, opts: &SolverOptions) -> Result<SolverResult> {
    opts.validate()?;
    let rq = ReducedQuotient::new(d, theta, &opts.grid)?;
    let n = opts.grid.len();
    let mut x = initial_samples(opts, d);
    rq.normalize(&mut x);
    let mut f = rq.log_value(&x);
    let q_initial = f.exp();
    let nodes: Vec<f64> = opts.grid.nodes().collect();
    let invariant = (theta * d as f64 - 1.0).abs() < 1e-12;
    let gradient = |psi: &[f64], out: &mut [f64]| {
        rq.log_gradient(psi, out);
        if invariant {
            rq.project_symmetries(psi, &nodes, out);
        }
    };
    let mut g = vec![0.0; n];
    gradient(&x, &mut g);
    let mut gnorm = rq.l2_dot(&g, &g).sqrt();
    let mut step = opts.step0;
    let mut trial = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut history = vec![q_initial];
    let mut iterations = 0;
    let mut converged = gnorm <= opts.grad_tol;
    let mut stalled = 0;
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        let g2 = gnorm * gnorm;
        let mut alpha = step;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = x[i] - alpha * g[i];
            }
            let ft = rq.log_value(&trial);
            if ft <= f - 1e-4 * alpha * g2 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no decrease is representable in double precision any more
            converged = true;
            break;
        }
        rq.normalize(&mut trial);
        gradient(&trial, &mut g_new);
        // Barzilai-Borwein step from the last displacement
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = trial[i] - x[i];
            ss += s * s;
            sy += s * (g_new[i] - g[i]);
        }
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-10, 1e6)
        } else {
            2.0 * alpha
        };
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        let f_new = rq.log_value(&x);
        stalled = if f - f_new <= opts.rel_tol {
            stalled + 1
        } else {
            0
        };
        f = f_new;
        gnorm = rq.l2_dot(&g, &g).sqrt();
        history.push(f.exp());
        converged = gnorm <= opts.grad_tol || stalled >= 2;
    }
    let psi: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let (alignment_error, fitted_eta, fitted_shift) = align_to_terracini(&psi, &opts.grid, d);
    Ok(SolverResult {
        psi_star: Sampled::new(opts.grid, psi)?,
        q_star: f.exp(),
        q_initial,
        iterations,
        converged,
        gradient_norm: gnorm,
        alignment_error,
        fitted_eta,
        fitted_shift,
        scale_invariant: invariant,
        history,
    })
}

/// Independent runs from seeds `seed, seed + 1, ...`, in parallel, in seed order.
pub fn minimize_multistart(
    d: u32,
    theta: f64,
    opts: &SolverOptions,
    starts: usize,
) -> Result<Vec<SolverResult>> {
    (0..starts as u64)
        .into_par_iter()
        .map(|k| {
            let o = SolverOptions {
                seed: opts.seed.wrapping_add(k),
                ..*opts
            };
            minimize_reduced_quotient(d, theta, &o)
        })
        .collect()
}

fn l2_distance(a: &[f64], b: &[f64], h: f64) -> f64 {
    (h * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).sqrt()
}

fn normalized(v: Vec<f64>, h: f64) -> Vec<f64> {
    let m = (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
    v.into_iter().map(|x| x / m).collect()
}

/// `(error, eta, shift)` of the best fit `psi ~ c (2 cosh(eta (s - shift)))^{-(d-2)/2}`.
fn align_to_terracini(psi: &[f64], grid: &LogGrid, d: u32) -> (f64, f64, f64) {
    let h = grid.spacing();
    let target = normalized(psi.to_vec(), h);
    let moments = |v: &[f64]| {
        let c = h * grid.nodes().zip(v).map(|(s, x)| s * x * x).sum::<f64>();
        let var = h * grid
            .nodes()
            .zip(v)
            .map(|(s, x)| (s - c).powi(2) * x * x)
            .sum::<f64>();
        (c, var)
    };
    let (center, var) = moments(&target);
    let reference = normalized(terracini_samples(grid, d, 1.0, 0.0), h);
    let (_, var1) = moments(&reference);
    let dist = |ln_eta: f64, shift: f64| {
        let cand = normalized(terracini_samples(grid, d, ln_eta.exp(), shift), h);
        l2_distance(&target, &cand, h)
    };
    let mut ln_eta = 0.5 * (var1 / var).ln();
    let mut shift = center;
    let mut width = (0.5, 1.0);
    for _ in 0..30 {
        ln_eta = golden_min(|x| dist(x, shift), ln_eta - width.0, ln_eta + width.0);
        shift = golden_min(|x| dist(ln_eta, x), shift - width.1, shift + width.1);
        width = (width.0 * 0.5, width.1 * 0.5);
    }
    (dist(ln_eta, shift), ln_eta.exp(), shift)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// A radial optimal constant together with the solver outcome behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialConstant {
    pub value: f64,
    pub q_star: f64,
    pub converged: bool,
}

/// `C_rad,2* = q_star |S^{d-1}|^{1 - 2/2*}` from a descent run at `theta = 1/d`.
pub fn radial_constant_2star(d: u32, opts: &SolverOptions) -> Result<RadialConstant> {
    let res = minimize_reduced_quotient(d, 1.0 / d as f64, opts)?;
    let df = d as f64;
    let two_star = 2.0 * df / (df - 2.0);
    Ok(RadialConstant {
        value: res.q_star * geometry(d).sphere_area.powf(1.0 - 2.0 / two_star),
        q_star: res.q_star,
        converged: res.converged,
    })
}

/// `C_rad,inf = |S^{d-1}| |B(0,1)|^{-2/2*}`.
pub fn radial_constant_inf(d: u32) -> Result<f64> {
    if d < 3 {
        return Err(Error::Domain(format!(
            "radial constants need d >= 3, got {d}"
        )));
    }
    let g = geometry(d);
    let df = d as f64;
    Ok(g.sphere_area * g.ball_volume.powf(-(df - 2.0) / df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_between;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn d3_minimum_matches_closed_form() {
        let res = minimize_reduced_quotient(3, 1.0 / 3.0, &SolverOptions::default()).unwrap();
        assert!(
            res.converged,
            "{} iterations, |g| = {}",
            res.iterations, res.gradient_norm
        );
        assert!(
            (res.q_star - (PI / 2.0).powf(2.0 / 3.0)).abs() < 1e-4,
            "{}",
            res.q_star
        );
        assert!(res.alignment_error < 1e-3, "{}", res.alignment_error);
        assert!(res.q_star <= res.q_initial);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    }

    #[test]
    fn start_at_optimizer_barely_moves() {
        let opts = SolverOptions {
            initial: Initial::Terracini { eta: 1.0 },
            ..SolverOptions::default()
        };
        let res = minimize_reduced_quotient(3, 1.0 / 3.0, &opts).unwrap();
        assert!(res.converged);
        assert!(
            (res.q_star - res.q_initial).abs() <= 1e-10,
            "{}",
            res.q_star - res.q_initial
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let grid = LogGrid::new(-20.0, 20.0, 801).unwrap();
        let nodes: Vec<f64> = grid.nodes().collect();
        let n = nodes.len();
        let bump = |s: f64| (-0.05 * s * s).exp();
        let psi: Vec<f64> = terracini_samples(&grid, 3, 1.0, 0.0)
            .iter()
            .zip(&nodes)
            .map(|(v, s)| v * (1.0 + 0.05 * (0.7 * s).sin()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for theta in [1.0 / 3.0, 0.5] {
            let rq = ReducedQuotient::new(3, theta, &grid).unwrap();
            let mut g = vec![0.0; n];
            rq.log_gradient(&psi, &mut g);
            for _ in 0..10 {
                let modes: Vec<(f64, f64)> = (0..4)
                    .map(|_| (rng.gen_range(0.2..2.0), rng.gen_range(0.0..6.0)))
                    .collect();
                let mut dir: Vec<f64> = nodes
                    .iter()
                    .map(|&s| bump(s) * modes.iter().map(|(k, ph)| (k * s + ph).sin()).sum::<f64>())
                    .collect();
                dir[0] = 0.0;
                dir[n - 1] = 0.0;
                let analytic = rq.l2_dot(&g, &dir);
                let shifted =
                    |t: f64| -> Vec<f64> { psi.iter().zip(&dir).map(|(a, b)| a + t * b).collect() };
                let central =
                    |e: f64| (rq.log_value(&shifted(e)) - rq.log_value(&shifted(-e))) / (2.0 * e);
                let fd = (4.0 * central(5e-5) - central(1e-4)) / 3.0;
                assert!(
                    (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1e-2),
                    "{fd} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn d4_minimum_matches_family() {
        let opts = SolverOptions::default();
        let res = minimize_reduced_quotient(4, 0.25, &opts).unwrap();
        assert!(res.converged && res.scale_invariant);
        let rq = ReducedQuotient::new(4, 0.25, &opts.grid).unwrap();
        for eta in [0.5, 1.0, 2.0] {
            let family = rq.value(&terracini_samples(&opts.grid, 4, eta, 0.0));
            assert!(
                (res.q_star - family).abs() < 1e-4,
                "{} vs {family}",
                res.q_star
            );
        }
        assert!(res.alignment_error < 1e-3);
    }

    #[test]
    fn optimizer_start_stops_within_two_iterations() {
        let opts = SolverOptions {
            initial: Initial::Terracini { eta: 1.0 },
            ..SolverOptions::default()
        };
        let res = minimize_reduced_quotient(3, 1.0 / 3.0, &opts).unwrap();
        assert!(res.iterations <= 2, "{}", res.iterations);
    }

    #[test]
    fn off_critical_theta_is_flagged() {
        let opts = SolverOptions {
            max_iters: 50,
            ..SolverOptions::default()
        };
        let res = minimize_reduced_quotient(3, 0.5, &opts).unwrap();
        assert!(!res.scale_invariant);
        assert!(res.q_star <= res.q_initial);
    }

    #[test]
    fn exhausted_budget_is_not_an_error() {
        let opts = SolverOptions {
            max_iters: 3,
            ..SolverOptions::default()
        };
        let res = minimize_reduced_quotient(3, 1.0 / 3.0, &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
    }

    #[test]
    fn invalid_options_rejected() {
        let bad = SolverOptions {
            grad_tol: 0.0,
            ..SolverOptions::default()
        };
        assert!(minimize_reduced_quotient(3, 1.0 / 3.0, &bad).is_err());
        assert!(minimize_reduced_quotient(3, 1.5, &SolverOptions::default()).is_err());
    }

    #[test]
    fn continuum_quotient_is_scale_invariant() {
        let k = 0.5;
        let q = |a: f64, b: f64| {
            let psi = |s: f64| a * (-k * ln_two_cosh(b * s)).exp();
            let dpsi = |s: f64| -k * b * (b * s).tanh() * psi(s);
            let int = |f: &dyn Fn(f64) -> f64| {
                integrate_between(f, f64::NEG_INFINITY, f64::INFINITY, &[0.0], 1e-14)
            };
            quotient_from_integrals(
                int(&|s| dpsi(s).powi(2)),
                int(&|s| psi(s).powi(2)),
                int(&|s| psi(s).powi(6)),
                1.0 / 3.0,
                6.0,
            )
        };
        let base = q(1.0, 1.0);
        assert_relative_eq!(base, (PI / 2.0).powf(2.0 / 3.0), max_relative = 1e-12);
        for a in [0.5, 3.0] {
            for b in [0.5, 2.0] {
                assert_relative_eq!(q(a, b), base, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn radial_constants() {
        assert_relative_eq!(
            radial_constant_inf(3).unwrap(),
            4.0 * PI * (4.0 * PI / 3.0f64).powf(-1.0 / 3.0),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            radial_constant_inf(4).unwrap(),
            2.0 * PI * PI * (PI * PI / 2.0).powf(-0.5),
            max_relative = 1e-14
        );
        let c = radial_constant_2star(3, &SolverOptions::default()).unwrap();
        assert!(c.converged);
        assert_relative_eq!(
            c.value / c.q_star,
            (4.0 * PI).powf(2.0 / 3.0),
            max_relative = 1e-14
        );
        assert!((c.value - (PI / 2.0 * 4.0 * PI).powf(2.0 / 3.0)).abs() < 1e-3);
        assert!(radial_constant_inf(2).is_err());
    }
}
