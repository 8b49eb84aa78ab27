//! SMO solver for the C-SVC dual
//!
//! ```text
//! min_α  ½ αᵀQα − eᵀα   s.t.  0 ≤ α_i ≤ C,  yᵀα = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Each iteration picks the maximal violating index `i`, pairs it with a
//! second index `j` (second-order gain or random), and solves the two-variable
//! subproblem analytically while keeping `yᵀα` fixed. No shrinking.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernel::{KernelSpec, QMatrix};
use super::Selection;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SolverParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub cache_budget: usize,
    pub selection: Selection,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub alpha: Vec<f64>,
    /// Decision function is `Σ α_i y_i K(x_i, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective `Σα − ½αᵀQα` (maximisation form).
    pub objective: f64,
    /// Final maximal violation `m(α) − M(α)`.
    pub gap: f64,
}

struct State<'a> {
    q: QMatrix<'a>,
    y: &'a [f64],
    alpha: Vec<f64>,
    grad: Vec<f64>,
    c: f64,
}

impl State<'_> {
    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// `½ αᵀQα − eᵀα` from the gradient `Qα − e`.
    fn primal_form_objective(&self) -> f64 {
        0.5 * self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    }

    /// Maximal violating pair bounds `(m, M)` over the up/low index sets.
    fn violation_bounds(&self) -> (f64, f64) {
        let mut m = f64::NEG_INFINITY;
        let mut big_m = f64::INFINITY;
        for t in 0..self.alpha.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) {
                m = m.max(v);
            }
            if self.in_low(t) {
                big_m = big_m.min(v);
            }
        }
        (m, big_m)
    }

    fn select(&mut self, tolerance: f64, selection: Selection, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
        let n = self.alpha.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = None;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v >= gmax {
                    gmax = v;
                    i = Some(t);
                }
            }
        }
        let i = i?;
        let qi = self.q.row(i);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = None;
        let mut best_gain = f64::INFINITY;
        let mut candidates = Vec::new();
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let v = -self.y[t] * self.grad[t];
            gmax2 = gmax2.max(-v);
            let grad_diff = gmax - v;
            if grad_diff > 0.0 {
                match selection {
                    Selection::SecondOrder => {
                        let quad = self.q.diag[i] + self.q.diag[t] - 2.0 * self.y[i] * self.y[t] * qi[t];
                        let gain = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                        if gain <= best_gain {
                            best_gain = gain;
                            best = Some(t);
                        }
                    }
                    Selection::RandomSecond => candidates.push(t),
                }
            }
        }
        if gmax + gmax2 < tolerance {
            return None;
        }
        let j = match selection {
            Selection::SecondOrder => best?,
            Selection::RandomSecond => {
                if candidates.is_empty() {
                    return None;
                }
                candidates[rng.gen_range(0..candidates.len())]
            }
        };
        Some((i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let qi = self.q.row(i);
        let qj = self.q.row(j);
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let mut quad = self.q.diag[i] + self.q.diag[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = self.q.diag[i] + self.q.diag[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for (g, (a, b)) in self.grad.iter_mut().zip(qi.iter().zip(qj.iter())) {
            *g += a * di + b * dj;
        }
    }

    fn rho(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut free = 0usize;
        let mut sum = 0.0;
        for t in 0..self.alpha.len() {
            let yg = self.y[t] * self.grad[t];
            if self.alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}

/// Solve the dual for `rows` with labels `y ∈ {+1, −1}`.
///
/// The kernel must already have its gamma resolved. When the iteration cap is
/// hit the best iterate so far is returned with `converged == false`.
pub fn solve(rows: Vec<&[f64]>, y: &[f64], params: &SolverParams) -> SolverOutput {
    let n = rows.len();
    let mut state = State {
        q: QMatrix::new(rows, y, params.kernel, params.cache_budget),
        y,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        c: params.c,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut iterations = 0;
    let mut converged = false;
    let mut last: f64 = 0.0;
    loop {
        if iterations >= params.max_iterations {
            log::warn!("SMO stopped after {iterations} iterations without reaching tolerance");
            break;
        }
        let Some((i, j)) = state.select(params.tolerance, params.selection, &mut rng) else {
            converged = true;
            break;
        };
        state.update(i, j);
        iterations += 1;
        if cfg!(debug_assertions) {
            let current = state.primal_form_objective();
            debug_assert!(
                current <= last + 1e-9 * last.abs().max(1.0),
                "dual objective decreased: {last} -> {current}"
            );
            last = current;
        }
    }
    let (m, big_m) = state.violation_bounds();
    SolverOutput {
        rho: state.rho(),
        objective: -state.primal_form_objective(),
        gap: (m - big_m).max(0.0),
        alpha: state.alpha,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kernel: KernelSpec, c: f64) -> SolverParams {
        SolverParams {
            kernel,
            c,
            tolerance: 1e-10,
            max_iterations: 100_000,
            cache_budget: 1 << 20,
            selection: Selection::SecondOrder,
            seed: 1,
        }
    }

    #[test]
    fn two_point_problem_has_analytic_solution() {
        let data = [[1.0], [-1.0]];
        let rows: Vec<&[f64]> = data.iter().map(|r| r.as_slice()).collect();
        let out = solve(rows, &[1.0, -1.0], &params(KernelSpec::linear(), 10.0));
        assert!(out.converged);
        assert!((out.alpha[0] - 0.5).abs() < 1e-12);
        assert!((out.alpha[1] - 0.5).abs() < 1e-12);
        assert!(out.rho.abs() < 1e-12);
        assert!((out.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_second_choice_reaches_same_optimum() {
        let data = [[0.0, 0.1], [0.3, 0.9], [1.0, 0.2], [0.8, 0.7], [0.5, 0.5]];
        let y = [1.0, 1.0, -1.0, -1.0, 1.0];
        let rows = || data.iter().map(|r| r.as_slice()).collect::<Vec<_>>();
        let a = solve(rows(), &y, &params(KernelSpec::rbf(1.0), 1.0));
        let mut p = params(KernelSpec::rbf(1.0), 1.0);
        p.selection = Selection::RandomSecond;
        let b = solve(rows(), &y, &p);
        assert!(a.converged && b.converged);
        assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn cache_size_does_not_change_the_result() {
        let data: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64;
                [(t * 0.37).sin(), (t * 0.91).cos()]
            })
            .collect();
        let y: Vec<f64> = (0..40).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let rows = || data.iter().map(|r| r.as_slice()).collect::<Vec<_>>();
        let mut p = params(KernelSpec::rbf(0.5), 1.0);
        p.cache_budget = 0;
        let a = solve(rows(), &y, &p);
        p.cache_budget = 1 << 20;
        let b = solve(rows(), &y, &p);
        assert_eq!(a.alpha, b.alpha);
        assert_eq!(a.rho, b.rho);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn iteration_cap_returns_best_so_far() {
        let data: Vec<[f64; 1]> = (0..30).map(|i| [i as f64 / 30.0]).collect();
        let y: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let mut p = params(KernelSpec::rbf(1.0), 10.0);
        p.max_iterations = 3;
        let out = solve(data.iter().map(|r| r.as_slice()).collect(), &y, &p);
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
        assert!(out.objective > 0.0);
    }
}
