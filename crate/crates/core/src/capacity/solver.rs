//! Bound-constrained minimization of the `H^s` quadratic form over leaf values.
//!
//! In leaf coordinates `x ∈ ℝ^{2^M}` the form is `‖f‖²_{H^s} = 2^{-M} xᵀBx`
//! with `B = I + Σ_I |I|^{-2s} v_I v_Iᵀ`, where `v_I` are the `ℓ²`-normalized
//! Haar vectors. `B` is applied matrix-free through the averaging cascade; its
//! spectrum is `{1} ∪ {1 + |I|^{-2s}}`, and its off-diagonal entries are
//! negative, so the bound-constrained problem is an obstacle problem for an
//! M-matrix.

/// Matrix-free `B` at depth `depth` with weights `|I|^{-2s}`.
pub(crate) struct QuadraticForm {
    depth: u32,
    /// `|I|^{-2s}` for each level `0..depth`.
    level_weight: Vec<f64>,
    avg: Vec<f64>,
    acc: Vec<f64>,
}

impl QuadraticForm {
    pub(crate) fn new(depth: u32, s: f64) -> Self {
        let n = 1usize << depth;
        Self {
            depth,
            level_weight: (0..depth).map(|j| (2.0 * s * j as f64).exp2()).collect(),
            avg: vec![0.0; 2 * n - 1],
            acc: vec![0.0; 2 * n - 1],
        }
    }

    pub(crate) fn len(&self) -> usize {
        1usize << self.depth
    }

    /// Largest eigenvalue of `B`.
    pub(crate) fn lipschitz(&self) -> f64 {
        1.0 + self.level_weight.last().copied().unwrap_or(0.0)
    }

    /// `out = B x`.
    pub(crate) fn apply(&mut self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        let leaf_start = n - 1;
        self.avg[leaf_start..].copy_from_slice(x);
        for i in (0..leaf_start).rev() {
            self.avg[i] = 0.5 * (self.avg[2 * i + 1] + self.avg[2 * i + 2]);
        }
        self.acc[0] = 0.0;
        for level in 0..self.depth {
            let w = self.level_weight[level as usize];
            let start = (1usize << level) - 1;
            for i in start..2 * start + 1 {
                let d = 0.5 * w * (self.avg[2 * i + 1] - self.avg[2 * i + 2]);
                self.acc[2 * i + 1] = self.acc[i] + d;
                self.acc[2 * i + 2] = self.acc[i] - d;
            }
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.acc[leaf_start + k] + x[k];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolverSettings {
    pub tol: f64,
    pub max_iters: usize,
}

pub(crate) struct SolverOutcome {
    pub x: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Natural-map KKT residual `‖x − P(x − Bx)‖_∞ / max(1, ‖x‖_∞)`.
pub(crate) fn kkt_residual(x: &[f64], g: &[f64], constrained: &[bool]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for k in 0..x.len() {
        let step = x[k] - g[k];
        let projected = if constrained[k] { step.max(1.0) } else { step };
        worst = worst.max((x[k] - projected).abs());
        scale = scale.max(x[k].abs());
    }
    worst / scale
}

pub(crate) fn energy(x: &[f64], g: &[f64]) -> f64 {
    let h = 1.0 / x.len() as f64;
    x.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * h
}

/// Minimizes `xᵀBx` subject to `x_k ≥ 1` wherever `constrained[k]`.
///
/// The form is Markovian (nonpositive off-diagonal, nonnegative row sums), so
/// clamping to `[0,1]` never raises the energy and the minimizer equals 1 on
/// the whole constrained set. That active set is tried first; should it fail
/// the KKT test, [`projected_gradient`] takes over.
pub(crate) fn solve_obstacle(form: &mut QuadraticForm, constrained: &[bool], settings: SolverSettings) -> SolverOutcome {
    let start: Vec<f64> = constrained.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
    let first = active_set_polish(form, constrained, constrained, &start, settings);
    if first.kkt_residual <= settings.tol {
        return first;
    }
    projected_gradient(form, constrained, settings, Some(first))
}

/// Accelerated projected gradient with adaptive restart from `𝟙_E`; once the
/// set of leaves pinned at 1 stops changing, a primal–dual active-set loop
/// solves the equality-constrained KKT system by conjugate gradients.
/// `fallback` is returned instead if nothing better is found.
fn projected_gradient(
    form: &mut QuadraticForm,
    constrained: &[bool],
    settings: SolverSettings,
    fallback: Option<SolverOutcome>,
) -> SolverOutcome {
    let n = form.len();
    let lip = form.lipschitz();
    let project = |v: &mut [f64]| {
        for (vk, &c) in v.iter_mut().zip(constrained) {
            if c && *vk < 1.0 {
                *vk = 1.0;
            }
        }
    };

    let mut x: Vec<f64> = constrained.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
    let mut iterations = fallback.as_ref().map_or(0, |f| f.iterations);
    let mut steps = 0usize;
    let mut polished_for: Option<Vec<bool>> = None;
    let mut best: Option<SolverOutcome> = fallback;
    let mut y = x.clone();
    let mut x_new = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut t = 1.0f64;

    const CHECK_EVERY: usize = 10;
    const STABLE_CHECKS: usize = 3;
    let mut last_active: Option<Vec<bool>> = None;
    let mut stable = 0usize;

    loop {
        if steps % CHECK_EVERY == 0 {
            form.apply(&x, &mut g);
            let res = kkt_residual(&x, &g, constrained);
            if res <= settings.tol {
                return SolverOutcome {
                    x,
                    kkt_residual: res,
                    iterations,
                };
            }
            let active: Vec<bool> = x
                .iter()
                .zip(constrained)
                .map(|(&v, &c)| c && v <= 1.0)
                .collect();
            if last_active.as_ref() == Some(&active) {
                stable += 1;
            } else {
                stable = 0;
            }
            if stable >= STABLE_CHECKS && polished_for.as_ref() != Some(&active) {
                let outcome = active_set_polish(form, constrained, &active, &x, settings);
                iterations += outcome.iterations;
                polished_for = Some(active.clone());
                if outcome.kkt_residual <= settings.tol {
                    return SolverOutcome {
                        iterations,
                        ..outcome
                    };
                }
                if best.as_ref().is_none_or(|b| outcome.kkt_residual < b.kkt_residual) {
                    best = Some(outcome);
                }
            }
            last_active = Some(active);
            if iterations >= settings.max_iters {
                let current = SolverOutcome {
                    x,
                    kkt_residual: res,
                    iterations,
                };
                return match best {
                    Some(b) if b.kkt_residual < current.kkt_residual => SolverOutcome { iterations, ..b },
                    _ => current,
                };
            }
        }

        form.apply(&y, &mut g);
        for k in 0..n {
            x_new[k] = y[k] - g[k] / lip;
        }
        project(&mut x_new);
        let restart: f64 = (0..n).map(|k| (y[k] - x_new[k]) * (x_new[k] - x[k])).sum();
        if restart > 0.0 {
            t = 1.0;
            y.copy_from_slice(&x_new);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for k in 0..n {
                y[k] = x_new[k] + beta * (x_new[k] - x[k]);
            }
            t = t_next;
        }
        std::mem::swap(&mut x, &mut x_new);
        iterations += 1;
        steps += 1;
    }
}

/// Primal–dual active-set iterations starting from `active`.
fn active_set_polish(
    form: &mut QuadraticForm,
    constrained: &[bool],
    active: &[bool],
    start: &[f64],
    settings: SolverSettings,
) -> SolverOutcome {
    const MAX_ROUNDS: usize = 60;
    const SLACK: f64 = 1e-13;
    let n = form.len();
    let mut active = active.to_vec();
    let mut x = start.to_vec();
    let mut g = vec![0.0; n];
    let mut iterations = 0;
    for _ in 0..MAX_ROUNDS {
        for k in 0..n {
            if active[k] {
                x[k] = 1.0;
            }
        }
        iterations += conjugate_gradient(form, &active, &mut x, 1e-3 * settings.tol, 20 * n + 1000);
        form.apply(&x, &mut g);
        let next: Vec<bool> = (0..n)
            .map(|k| {
                constrained[k]
                    && if active[k] {
                        g[k] > -SLACK * (1.0 + g[k].abs())
                    } else {
                        x[k] < 1.0 - SLACK
                    }
            })
            .collect();
        if next == active {
            break;
        }
        active = next;
    }
    for (xk, &c) in x.iter_mut().zip(constrained) {
        if c && *xk < 1.0 {
            *xk = 1.0;
        }
    }
    form.apply(&x, &mut g);
    SolverOutcome {
        kkt_residual: kkt_residual(&x, &g, constrained),
        x,
        iterations,
    }
}

/// Solves `(Bx)_F = 0` over the free leaves `F = ¬fixed`, keeping fixed
/// entries of `x`. Returns the number of iterations.
fn conjugate_gradient(form: &mut QuadraticForm, fixed: &[bool], x: &mut [f64], tol: f64, max_iters: usize) -> usize {
    let n = x.len();
    let mut bx = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let residual = |form: &mut QuadraticForm, x: &[f64], bx: &mut [f64], r: &mut [f64]| {
        form.apply(x, bx);
        for k in 0..n {
            r[k] = if fixed[k] { 0.0 } else { -bx[k] };
        }
    };
    residual(form, x, &mut bx, &mut r);
    p.copy_from_slice(&r);
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for it in 0..max_iters {
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if r.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= tol * scale {
            return it;
        }
        form.apply(&p, &mut ap);
        for k in 0..n {
            if fixed[k] {
                ap[k] = 0.0;
            }
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return it;
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if (it + 1) % 50 == 0 {
            residual(form, x, &mut bx, &mut r);
        }
        let rr_next: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_next / rr;
        rr = rr_next;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    max_iters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{haar_analyze, StepFunction};
    use crate::norms::hs_norm_sq_coeffs;
    use crate::operators::Smoothness;

    #[test]
    fn form_matches_haar_norm() {
        let s = 0.6;
        let mut form = QuadraticForm::new(5, s);
        let f = StepFunction::from_leaves(5, |l| ((l.pos * 7 % 11) as f64).sin());
        let mut g = vec![0.0; 32];
        form.apply(f.values(), &mut g);
        let via_form = energy(f.values(), &g);
        let via_haar = hs_norm_sq_coeffs(&haar_analyze(&f), Smoothness::new(s).unwrap());
        assert!((via_form - via_haar).abs() < 1e-12 * via_haar);
    }

    #[test]
    fn off_diagonal_entries_are_nonpositive() {
        let mut form = QuadraticForm::new(4, 0.3);
        let n = form.len();
        let mut col = vec![0.0; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            form.apply(&e, &mut col);
            for (i, &v) in col.iter().enumerate() {
                if i != j {
                    assert!(v < 0.0, "B[{i},{j}] = {v}");
                }
            }
            let row_sum: f64 = col.iter().sum();
            assert!((row_sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projected_gradient_reaches_the_dirichlet_solution() {
        let settings = SolverSettings { tol: 1e-9, max_iters: 200_000 };
        for (depth, s, leaves) in [(4, 0.3, vec![0, 1, 9]), (5, 0.75, vec![3, 17, 18, 30]), (5, 0.5, vec![12])] {
            let mut form = QuadraticForm::new(depth, s);
            let mask: Vec<bool> = (0..1usize << depth).map(|k| leaves.contains(&k)).collect();
            let direct = solve_obstacle(&mut form, &mask, settings);
            let iterative = projected_gradient(&mut form, &mask, settings, None);
            assert!(iterative.kkt_residual <= settings.tol);
            let mut g = vec![0.0; form.len()];
            form.apply(&direct.x, &mut g);
            let direct_energy = energy(&direct.x, &g);
            form.apply(&iterative.x, &mut g);
            assert!((energy(&iterative.x, &g) - direct_energy).abs() < 1e-9 * direct_energy);
            let gap = iterative.x.iter().zip(&direct.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-6, "gap {gap}");
        }
    }
}
