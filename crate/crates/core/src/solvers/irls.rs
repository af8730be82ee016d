use nalgebra::{DMatrix, DVector};

use super::{gradient_norm, loss_from_residuals, residuals_vec, SolverConfig};
use crate::data::{validate_tau, Dataset, FitResult};
use crate::error::{Error, Result};
use crate::expectile::loss::asym_weight;

/// Smallest acceptable `min(diag L)^2 / max(diag L)^2` of the Cholesky factor.
const SINGULARITY_RATIO: f64 = 1e-13;

/// Unpenalized expectile regression by iteratively reweighted least squares.
///
/// Each step fixes the observation weights `tau` / `1 - tau` from the signs
/// of the current residuals and solves the weighted normal equations. The
/// objective is piecewise quadratic, so once the sign pattern stops changing
/// the iterate is the exact minimizer. Steps that would increase the
/// objective are halved back toward the previous iterate.
pub fn fit_unpenalized(data: &Dataset, tau: f64, cfg: &SolverConfig) -> Result<FitResult> {
    validate_tau(tau)?;
    cfg.validate()?;
    let (n, p) = (data.n(), data.p());
    if p > n {
        return Err(Error::SingularDesign);
    }

    let mut weights: Vec<f64> = vec![0.5; n];
    let mut beta = match &cfg.initial_beta {
        Some(b) => {
            data.check_beta(b)?;
            let b = DVector::from_column_slice(b);
            update_weights(&mut weights, tau, &(&data.y - &data.x * &b));
            b
        }
        None => DVector::zeros(p),
    };
    if cfg.initial_beta.is_none() {
        // Weights are all 1/2 here, so this is the least-squares start.
        beta = weighted_solve(data, &weights)?;
        let r = &data.y - &data.x * &beta;
        update_weights(&mut weights, tau, &r);
    }
    let mut objective = loss_from_residuals(tau, residuals_vec(data, beta.as_slice()).as_slice());
    let mut trace = vec![objective];
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let candidate = weighted_solve(data, &weights)?;
        let (next, next_obj) = descend(data, tau, &beta, objective, candidate);
        let r = &data.y - &data.x * &next;
        let pattern_changed = update_weights(&mut weights, tau, &r);
        let decrease = objective - next_obj;
        beta = next;
        objective = next_obj;
        trace.push(objective);
        if !pattern_changed {
            break;
        }
        if decrease <= cfg.objective_tolerance * objective.abs().max(1.0)
            && gradient_norm(data, tau, beta.as_slice())? <= cfg.kkt_tolerance
        {
            break;
        }
    }

    let beta = beta.as_slice().to_vec();
    let kkt = gradient_norm(data, tau, &beta)?;
    let converged = kkt <= cfg.kkt_tolerance;
    FitResult::new(beta, objective, kkt, iterations, converged, trace).into_result()
}

/// Sets `w_i` from the residual signs; returns whether anything changed.
fn update_weights(weights: &mut [f64], tau: f64, r: &DVector<f64>) -> bool {
    let mut changed = false;
    for (w, &ri) in weights.iter_mut().zip(r.iter()) {
        let next = asym_weight(tau, ri);
        if *w != next {
            *w = next;
            changed = true;
        }
    }
    changed
}

fn weighted_solve(data: &Dataset, weights: &[f64]) -> Result<DVector<f64>> {
    let (n, p) = (data.n(), data.p());
    let sqrt_w = DVector::from_iterator(n, weights.iter().map(|w| w.sqrt()));
    let mut xw = data.x.clone();
    for mut col in xw.column_iter_mut() {
        col.component_mul_assign(&sqrt_w);
    }
    let yw = data.y.component_mul(&sqrt_w);
    let gram: DMatrix<f64> = xw.tr_mul(&xw);
    let rhs = xw.tr_mul(&yw);
    let chol = gram.cholesky().ok_or(Error::SingularDesign)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
        (lo.min(d.abs()), hi.max(d.abs()))
    });
    if p > 0 && (lo * lo) < SINGULARITY_RATIO * hi * hi {
        return Err(Error::SingularDesign);
    }
    Ok(chol.solve(&rhs))
}

/// Accepts `candidate` if it does not increase the objective; otherwise
/// halves the step from `beta` until it does (at most 40 times).
fn descend(
    data: &Dataset,
    tau: f64,
    beta: &DVector<f64>,
    objective: f64,
    candidate: DVector<f64>,
) -> (DVector<f64>, f64) {
    let eval = |b: &DVector<f64>| loss_from_residuals(tau, (&data.y - &data.x * b).as_slice());
    let obj = eval(&candidate);
    if obj <= objective {
        return (candidate, obj);
    }
    let dir = &candidate - beta;
    let mut step = 0.5;
    for _ in 0..40 {
        let trial = beta + &dir * step;
        let obj = eval(&trial);
        if obj <= objective {
            return (trial, obj);
        }
        step *= 0.5;
    }
    (beta.clone(), objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectile::loss::sample_expectile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_data(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let y = DVector::from_fn(n, |i, _| {
            let e: f64 = rng.sample(StandardNormal);
            x.row(i).sum() + e.exp()
        });
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn half_tau_is_ols() {
        let data = random_data(1, 60, 4);
        let fit = fit_unpenalized(&data, 0.5, &SolverConfig::default()).unwrap();
        let ols = data
            .x
            .clone()
            .svd(true, true)
            .solve(&data.y, 1e-14)
            .unwrap();
        for (a, b) in fit.beta.iter().zip(ols.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn intercept_only_is_sample_expectile() {
        let data = random_data(2, 41, 1);
        let ones = Dataset::new(DMatrix::from_element(41, 1, 1.0), data.y.clone()).unwrap();
        for tau in [0.1, 0.3, 0.77, 0.95] {
            let fit = fit_unpenalized(&ones, tau, &SolverConfig::default()).unwrap();
            let direct = sample_expectile(tau, data.y.as_slice());
            assert!((fit.beta[0] - direct).abs() < 1e-10, "tau {tau}");
        }
    }

    #[test]
    fn gradient_vanishes_at_exit() {
        let data = random_data(3, 80, 5);
        let fit = fit_unpenalized(&data, 0.9, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.kkt_residual <= 1e-7);
        assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn collinear_design_is_singular() {
        let x = DMatrix::from_fn(10, 2, |i, _| i as f64);
        let y = DVector::from_fn(10, |i, _| i as f64);
        let data = Dataset::new(x, y).unwrap();
        assert!(matches!(
            fit_unpenalized(&data, 0.5, &SolverConfig::default()),
            Err(Error::SingularDesign)
        ));
    }

    #[test]
    fn warm_start_reaches_same_solution() {
        let data = random_data(4, 50, 3);
        let cold = fit_unpenalized(&data, 0.2, &SolverConfig::default()).unwrap();
        let warm = fit_unpenalized(
            &data,
            0.2,
            &SolverConfig::default().with_initial_beta(vec![5.0, -5.0, 5.0]),
        )
        .unwrap();
        for (a, b) in cold.beta.iter().zip(&warm.beta) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn iteration_cap_reports_max_iterations() {
        let data = random_data(5, 200, 5);
        let cfg = SolverConfig {
            max_iterations: 1,
            ..SolverConfig::default()
        };
        match fit_unpenalized(&data, 0.97, &cfg) {
            Err(Error::MaxIterations(fit)) => assert!(!fit.converged),
            Ok(fit) => assert!(fit.converged),
            Err(e) => panic!("{e}"),
        }
    }
}
