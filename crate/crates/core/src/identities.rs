//! Exact identities checked on random step functions. Each check reports the
//! largest relative residual over its samples.

use serde::{Deserialize, Serialize};

use crate::dyadic::{haar_analyze, haar_synthesize};
use crate::norms::{hs_dot_sq_coeffs, leftright_splits, leftright_terms};
use crate::operators::{
    adjoint_paraproduct, frac_integral_avg, frac_integral_haar, haar_shift, lambda_paraproduct,
    lambda_shift_commutator_closed_form, mod_derivative, paraproduct, pointwise_product, shift_commutator,
    Smoothness,
};
use crate::parallel::par_map;
use crate::random::{random_function, sample_rng};

pub const IDENTITY_TOL: f64 = 1e-10;
pub const TIGHT_TOL: f64 = 1e-12;
pub const INVERSION_S_VALUES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub s: Option<f64>,
    pub depth: u32,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub depth: u32,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<IdentityCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1.0)
}

/// `max_k residual(sample_k)` with one independent stream per sample.
fn run(
    name: &str,
    s: Option<f64>,
    depth: u32,
    seed: u64,
    samples: usize,
    tolerance: f64,
    jobs: usize,
    residual: impl Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
) -> IdentityCheck {
    let stream = match s {
        Some(v) => format!("{name}@{v}"),
        None => name.to_string(),
    };
    let max_residual = par_map(jobs, samples, |k| residual(&mut sample_rng(seed, &stream, k as u64)))
        .into_iter()
        .fold(0.0, f64::max);
    IdentityCheck {
        name: name.to_string(),
        s,
        depth,
        samples,
        max_residual,
        tolerance,
        passed: max_residual <= tolerance,
    }
}

pub fn haar_round_trip(depth: u32, seed: u64, samples: usize, jobs: usize) -> IdentityCheck {
    run("haar_round_trip", None, depth, seed, samples, TIGHT_TOL, jobs, |rng| {
        let f = random_function(depth, 0.0, rng);
        let back = haar_synthesize(&haar_analyze(&f));
        rel(back.max_abs_diff(&f), f.max_abs())
    })
}

/// `‖f‖²_{L²} = ⟨f⟩² + Σ (f,h_I)²`.
pub fn parseval(depth: u32, seed: u64, samples: usize, jobs: usize) -> IdentityCheck {
    run("parseval", None, depth, seed, samples, TIGHT_TOL, jobs, |rng| {
        let f = random_function(depth, 0.0, rng);
        let direct: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * f.leaf_measure();
        rel((haar_analyze(&f).energy() - direct).abs(), direct)
    })
}

/// `(2^s − 1) J^s T^s f = f`, with `T^s` from its averaging definition; also
/// checks the averaging and Haar forms of `T^s` against each other.
pub fn inversion(s: Smoothness, depth: u32, seed: u64, samples: usize, jobs: usize) -> IdentityCheck {
    run("inversion", Some(s.get()), depth, seed, samples, IDENTITY_TOL, jobs, |rng| {
        let f = random_function(depth, 0.0, rng);
        let t = haar_analyze(&frac_integral_avg(&f, s));
        let back = haar_synthesize(&mod_derivative(&t, s)).scale(s.inversion_factor());
        let forms = t.max_abs_diff(&frac_integral_haar(&haar_analyze(&f), s));
        rel(back.max_abs_diff(&f), f.max_abs()).max(rel(forms, t.mean().abs()))
    })
}

/// Per interval: `∬_{I₋×I₊}|f(x)−f(y)|² = |I|(f,h_I)² + (|I|/2)∫_{I₋}|f−⟨f⟩_{I₋}|²
/// + (|I|/2)∫_{I₊}|f−⟨f⟩_{I₊}|²`.
pub fn leftright_identity(depth: u32, seed: u64, samples: usize, jobs: usize) -> IdentityCheck {
    run("leftright_per_interval", None, depth, seed, samples, IDENTITY_TOL, jobs, |rng| {
        let f = random_function(depth, 0.0, rng);
        let direct = leftright_terms(&f);
        let split = leftright_splits(&haar_analyze(&f));
        direct
            .iter()
            .zip(&split)
            .map(|(d, p)| rel((d - p.iter().sum::<f64>()).abs(), *d))
            .fold(0.0, f64::max)
    })
}

/// `fg = Π_g f + Π_f g + Π̃_g f`.
pub fn bony(depth: u32, seed: u64, samples: usize, jobs: usize) -> IdentityCheck {
    run("bony", None, depth, seed, samples, IDENTITY_TOL, jobs, |rng| {
        let f = random_function(depth, 0.0, rng);
        let g = random_function(depth, 0.0, rng);
        let product = pointwise_product(&f, &g);
        let parts = &(&paraproduct(&g, &f) + &paraproduct(&f, &g)) + &adjoint_paraproduct(&g, &f);
        rel(parts.max_abs_diff(&product), product.max_abs())
    })
}

/// `[Λ_b, Ш]` computed by composition equals its coefficient formula.
pub fn lambda_commutator(depth: u32, seed: u64, samples: usize, jobs: usize) -> IdentityCheck {
    run("lambda_shift_commutator", None, depth, seed, samples, IDENTITY_TOL, jobs, |rng| {
        let b = random_function(depth, 0.0, rng);
        let f = random_function(depth, 0.0, rng);
        let composed = shift_commutator(|g| lambda_paraproduct(&b, g), &f);
        let closed = lambda_shift_commutator_closed_form(&b, &f);
        rel(composed.max_abs_diff(&closed), composed.max_abs())
    })
}

/// `‖D^s Ш f‖² = 2^{1+2s} ‖D^s f‖²`.
pub fn shift_energy(s: Smoothness, depth: u32, seed: u64, samples: usize, jobs: usize) -> IdentityCheck {
    run("shift_energy", Some(s.get()), depth, seed, samples, IDENTITY_TOL, jobs, |rng| {
        let c = haar_analyze(&random_function(depth, 0.0, rng));
        let lhs = hs_dot_sq_coeffs(&haar_shift(&c), s);
        let rhs = (1.0 + 2.0 * s.get()).exp2() * hs_dot_sq_coeffs(&c, s);
        rel((lhs - rhs).abs(), rhs)
    })
}

/// Every identity at `depth`, `samples` draws each. Smoothness-dependent
/// checks run for each of [`INVERSION_S_VALUES`].
pub fn verify_all(depth: u32, seed: u64, samples: usize, jobs: usize) -> VerifyReport {
    let mut checks = vec![
        haar_round_trip(depth, seed, samples, jobs),
        parseval(depth, seed, samples, jobs),
    ];
    let svals: Vec<Smoothness> = INVERSION_S_VALUES.iter().map(|&v| Smoothness::new(v).expect("in range")).collect();
    checks.extend(svals.iter().map(|&s| inversion(s, depth, seed, samples, jobs)));
    checks.push(leftright_identity(depth, seed, samples, jobs));
    checks.push(bony(depth, seed, samples, jobs));
    checks.push(lambda_commutator(depth, seed, samples, jobs));
    checks.extend(svals.iter().map(|&s| shift_energy(s, depth, seed, samples, jobs)));
    VerifyReport {
        depth,
        seed,
        samples,
        checks,
    }
}
