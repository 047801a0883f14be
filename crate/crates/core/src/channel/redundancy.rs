use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Dmc, MacChannel};
use crate::error::{Error, Result};
use crate::infotheory::Pmf;

/// Optimality tolerance expected from the LP solve.
pub const LP_TOLERANCE: f64 = 1e-9;
/// Margins at or below this are classified redundant.
pub const REDUNDANCY_THRESHOLD: f64 = 1e-7;
/// Singular values at or below this count as zero in floating rank tests.
pub const SINGULAR_VALUE_THRESHOLD: f64 = 1e-9;

/// An input whose output law is (numerically) a mixture of the others.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyWitness {
    pub input: usize,
    /// Mixing weights over the full input alphabet, zero at `input`.
    pub mixture: Pmf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyReport {
    pub non_redundant: bool,
    /// `min_x min_{p: p(x)=0} ‖W_x − W∘p‖₁`; infinite for a single input.
    pub margin_eta: f64,
    /// Per-input optimum of the mixing problem.
    pub per_input: Vec<f64>,
    pub witness: Option<RedundancyWitness>,
}

/// True iff `p ↦ W∘p` is injective on the simplex, i.e. the matrix `[W | 1]`
/// has full row rank. Exact channels use rational elimination.
pub fn injectivity_check(w: &Dmc) -> bool {
    let rank = match w.exact_rows() {
        Some(rows) => rational_rank(
            rows.iter()
                .map(|r| r.iter().cloned().chain(std::iter::once(BigRational::one())).collect())
                .collect(),
        ),
        None => {
            let cols = w.output_size() + 1;
            let m = DMatrix::from_fn(w.input_size(), cols, |x, y| if y < w.output_size() { w.get(x, y) } else { 1.0 });
            m.svd(false, false)
                .singular_values
                .iter()
                .filter(|s| **s > SINGULAR_VALUE_THRESHOLD)
                .count()
        }
    };
    rank == w.input_size()
}

fn rational_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|r| !m[*r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let lead = m[rank][col].clone();
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let factor = &m[r][col] / &lead;
                for c in col..cols {
                    let delta = &factor * &m[rank][c];
                    m[r][c] -= delta;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Solves, for each input `x`, `min ‖W_x − Σ_{x'≠x} p(x') W_{x'}‖₁` over
/// the simplex on the remaining inputs (epigraph form with one slack per
/// output). The channel is non-redundant iff every optimum exceeds
/// [`REDUNDANCY_THRESHOLD`].
pub fn non_redundancy_check(w: &Dmc) -> RedundancyReport {
    let k = w.input_size();
    if k == 1 {
        return RedundancyReport {
            non_redundant: true,
            margin_eta: f64::INFINITY,
            per_input: vec![f64::INFINITY],
            witness: None,
        };
    }
    let mut per_input = Vec::with_capacity(k);
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for x in 0..k {
        let (value, mix) = mixing_distance(w, x);
        per_input.push(value);
        if best.as_ref().is_none_or(|(_, v, _)| value < *v) {
            best = Some((x, value, mix));
        }
    }
    let (input, margin, mix) = best.expect("at least two inputs");
    let non_redundant = margin > REDUNDANCY_THRESHOLD;
    let witness = (!non_redundant).then(|| RedundancyWitness {
        input,
        mixture: Pmf::from_weights(&mix).expect("LP returns a point of the simplex"),
    });
    RedundancyReport { non_redundant, margin_eta: margin, per_input, witness }
}

fn mixing_distance(w: &Dmc, x: usize) -> (f64, Vec<f64>) {
    let k = w.input_size();
    let target = w.row(x);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let weights: Vec<_> = (0..k)
        .map(|j| if j == x { None } else { Some(lp.add_var(0.0, (0.0, f64::INFINITY))) })
        .collect();
    let slacks: Vec<_> = (0..w.output_size()).map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();

    let simplex: Vec<_> = weights.iter().flatten().map(|v| (*v, 1.0)).collect();
    lp.add_constraint(&simplex, ComparisonOp::Eq, 1.0);
    for (y, slack) in slacks.iter().enumerate() {
        // slack ≥ |W_x(y) − Σ p(j) W_j(y)|
        let mixed: Vec<_> = weights
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|v| (v, w.get(j, y))))
            .collect();
        let mut upper = mixed.clone();
        upper.push((*slack, 1.0));
        lp.add_constraint(&upper, ComparisonOp::Ge, target[y]);
        let mut lower: Vec<_> = mixed.iter().map(|(v, c)| (*v, -c)).collect();
        lower.push((*slack, 1.0));
        lp.add_constraint(&lower, ComparisonOp::Ge, -target[y]);
    }
    let solution = lp.solve().expect("the restricted simplex is nonempty and the objective bounded");
    let mix: Vec<f64> = weights
        .iter()
        .map(|v| v.map_or(0.0, |v| solution[v].max(0.0)))
        .collect();
    // Re-evaluate at the returned point so the margin is an attained distance.
    let mixed = w.mix_rows(&normalize(&mix));
    let dist: f64 = target.iter().zip(&mixed).map(|(a, b)| (a - b).abs()).sum();
    (dist, mix)
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let t: f64 = v.iter().sum();
    v.iter().map(|x| x / t).collect()
}

/// For at most three inputs, injectivity and non-redundancy coincide.
/// Returns the shared verdict, or an error if they disagree.
pub fn prop2_consistency(w: &Dmc) -> Result<bool> {
    if w.input_size() > 3 {
        return Err(Error::InvalidParameter(format!(
            "equivalence only holds for at most 3 inputs, got {}",
            w.input_size()
        )));
    }
    let injective = injectivity_check(w);
    let report = non_redundancy_check(w);
    if injective != report.non_redundant {
        return Err(Error::InconsistentChecks(w.input_size()));
    }
    Ok(injective)
}

/// Non-redundancy of a MAC is non-redundancy of its flattened channel.
pub fn mac_non_redundancy(m: &MacChannel) -> RedundancyReport {
    non_redundancy_check(m.flat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::catalog;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn polytope_counterexample_is_non_redundant_but_not_injective() {
        let w = catalog::polytope_counterexample();
        assert!(!injectivity_check(&w));
        let report = non_redundancy_check(&w);
        assert!(report.non_redundant);
        assert!(report.margin_eta > 0.1);
        assert!(report.witness.is_none());
        assert!(prop2_consistency(&w).is_err());
    }

    #[test]
    fn frozen_input_channels_are_non_redundant() {
        for w in [catalog::first_input_frozen(), catalog::second_input_frozen()] {
            assert!(injectivity_check(&w));
            assert!(non_redundancy_check(&w).non_redundant);
            assert!(prop2_consistency(&w).unwrap());
        }
    }

    #[test]
    fn identity_is_injective() {
        let id = Dmc::identity(4).unwrap();
        assert!(injectivity_check(&id));
        let report = non_redundancy_check(&id);
        assert!(report.non_redundant);
        assert!((report.margin_eta - 2.0).abs() < 1e-9);
    }

    #[test]
    fn midpoint_row_is_redundant_with_witness() {
        let w = Dmc::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let report = non_redundancy_check(&w);
        assert!(!report.non_redundant);
        let witness = report.witness.unwrap();
        assert_eq!(witness.input, 2);
        assert!((witness.mixture.get(0) - 0.5).abs() < 1e-9);
        assert!((witness.mixture.get(1) - 0.5).abs() < 1e-9);
        assert_eq!(witness.mixture.get(2), 0.0);
        assert!(!prop2_consistency(&w).unwrap());
    }

    #[test]
    fn duplicate_rows_are_redundant_in_both_checks() {
        let w = Dmc::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(!prop2_consistency(&w).unwrap());
        let mac = MacChannel::new(vec![2, 2], Dmc::new(vec![
            vec![0.1, 0.9],
            vec![0.4, 0.6],
            vec![0.4, 0.6],
            vec![0.8, 0.2],
        ]).unwrap()).unwrap();
        assert!(!mac_non_redundancy(&mac).non_redundant);
    }

    #[test]
    fn single_input_is_vacuously_non_redundant() {
        let w = Dmc::new(vec![vec![0.2, 0.8]]).unwrap();
        let report = non_redundancy_check(&w);
        assert!(report.non_redundant);
        assert!(report.margin_eta.is_infinite());
    }

    #[test]
    fn rational_rank_matches_hand_counts() {
        let m = vec![vec![rat(1, 2), rat(1, 2), rat(1, 1)], vec![rat(1, 4), rat(1, 4), rat(1, 2)]];
        assert_eq!(rational_rank(m), 1);
        let m = vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(1, 1)]];
        assert_eq!(rational_rank(m), 2);
    }

    #[test]
    fn exact_and_float_rank_agree() {
        let exact = catalog::polytope_counterexample();
        let float = Dmc::new(exact.rows().map(|r| r.to_vec()).collect()).unwrap();
        assert_eq!(injectivity_check(&exact), injectivity_check(&float));
    }

    /// ‖W_x − W∘p‖₁ minimized over a simplex grid of the given step.
    fn grid_margin(w: &Dmc, x: usize, steps: usize) -> f64 {
        let others: Vec<usize> = (0..w.input_size()).filter(|j| *j != x).collect();
        let mut best = f64::INFINITY;
        let mut counts = vec![0usize; others.len()];
        fn rec(i: usize, left: usize, counts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
            if i + 1 == counts.len() {
                counts[i] = left;
                f(counts);
                return;
            }
            for c in 0..=left {
                counts[i] = c;
                rec(i + 1, left - c, counts, f);
            }
        }
        rec(0, steps, &mut counts, &mut |c| {
            let mut mix = vec![0.0; w.output_size()];
            for (j, cj) in others.iter().zip(c) {
                for y in 0..w.output_size() {
                    mix[y] += *cj as f64 / steps as f64 * w.get(*j, y);
                }
            }
            let d: f64 = w.row(x).iter().zip(&mix).map(|(a, b)| (a - b).abs()).sum();
            best = best.min(d);
        });
        best
    }

    #[test]
    fn random_mac_margins_match_grid_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    let v: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() + 0.01).collect();
                    let t: f64 = v.iter().sum();
                    v.into_iter().map(|a| a / t).collect()
                })
                .collect();
            let mac = MacChannel::new(vec![2, 2], Dmc::new(rows).unwrap()).unwrap();
            let report = mac_non_redundancy(&mac);
            for x in 0..4 {
                let grid = grid_margin(mac.flat(), x, 100);
                let lp = report.per_input[x];
                // Nearest grid point is within ℓ1 distance 0.03 of the optimum,
                // and W is a contraction in ℓ1.
                assert!(lp <= grid + 1e-9, "lp {lp} grid {grid}");
                assert!(grid <= lp + 0.03, "lp {lp} grid {grid}");
            }
        }
    }

    #[test]
    fn injective_implies_non_redundant_on_random_channels() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for trial in 0..1000 {
            let k = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=5);
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    let v: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
                    let t: f64 = v.iter().sum::<f64>().max(1e-12);
                    v.into_iter().map(|a| a / t).collect()
                })
                .collect();
            let Ok(w) = Dmc::new(rows) else { continue };
            let report = non_redundancy_check(&w);
            if injectivity_check(&w) {
                assert!(report.non_redundant, "trial {trial}");
            }
            if k <= 3 {
                assert_eq!(injectivity_check(&w), report.non_redundant, "trial {trial}");
            }
            // Margin is a lower bound on every grid distance.
            if (2..=3).contains(&k) {
                for x in 0..k {
                    assert!(grid_margin(&w, x, 40) >= report.margin_eta - 1e-9);
                }
            }
        }
    }
}
