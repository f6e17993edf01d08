//! Closed-form steady-state quantities, achievable/lower cost bounds and the
//! stabilizability frontier.

use std::fmt;

use crate::control_loop::{LqgWeights, PlantParams};
use crate::scalar::Scalar;
use crate::sdr_lab::opta_sdr;

/// Infinite-horizon cost, or divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cost<T> {
    Finite(T),
    Diverges,
}

impl<T: Scalar> Cost<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            Cost::Finite(v) => Some(v),
            Cost::Diverges => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    /// `Diverges` compares as `+inf`.
    pub fn as_scalar(&self) -> T {
        self.value().unwrap_or_else(T::infinity)
    }
}

impl<T: Scalar> fmt::Display for Cost<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Diverges => f.write_str("diverges"),
        }
    }
}

/// Fixed points of the control and estimation Riccati recursions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateQuantities<T> {
    /// Control cost-to-go `S`.
    pub s_inf: T,
    /// One-step prediction MSE at the observer.
    pub p_enc: T,
    /// Filtered MSE at the observer.
    pub p_enc_tt: T,
    /// Average stage cost achievable with the observer's own estimate.
    pub j_enc: T,
}

/// Positive root of `x^2 - b x - c = 0` for `c >= 0`, without cancellation.
pub fn positive_root<T: Scalar>(b: T, c: T) -> T {
    let disc = (b * b + T::of(4.0) * c).sqrt();
    if b >= T::zero() {
        (b + disc) / T::of(2.0)
    } else if disc - b > T::zero() {
        T::of(2.0) * c / (disc - b)
    } else {
        T::zero()
    }
}

pub fn steady_state<T: Scalar>(plant: &PlantParams<T>, weights: &LqgWeights<T>) -> SteadyStateQuantities<T> {
    let a2m1 = plant.alpha * plant.alpha - T::one();
    let s_inf = positive_root(weights.q + a2m1 * weights.r, weights.q * weights.r);
    let p_enc = positive_root(a2m1 * plant.v_var + plant.w_var, plant.v_var * plant.w_var);
    let p_enc_tt = if plant.v_var == T::zero() || p_enc == T::zero() {
        T::zero()
    } else if plant.v_var.is_infinite() {
        p_enc
    } else {
        p_enc * plant.v_var / (p_enc + plant.v_var)
    };
    let j_enc = weights.q * p_enc_tt + s_inf * (p_enc - p_enc_tt);
    SteadyStateQuantities { s_inf, p_enc, p_enc_tt, j_enc }
}

fn cost_with_sdr<T: Scalar>(plant: &PlantParams<T>, weights: &LqgWeights<T>, sdr: T) -> Cost<T> {
    let a2 = plant.alpha * plant.alpha;
    if sdr.is_infinite() {
        return Cost::Finite(steady_state(plant, weights).j_enc);
    }
    let margin = T::one() + sdr - a2;
    if !(margin > T::zero()) {
        return Cost::Diverges;
    }
    let ss = steady_state(plant, weights);
    let gain = (weights.q + (a2 - T::one()) * ss.s_inf) / margin;
    Cost::Finite(ss.j_enc + gain * (ss.p_enc - ss.p_enc_tt))
}

/// Achievable infinite-horizon average stage cost with a codec of unbiased SDR `sdr0`.
pub fn achievable_cost<T: Scalar>(plant: &PlantParams<T>, weights: &LqgWeights<T>, sdr0: T) -> Cost<T> {
    cost_with_sdr(plant, weights, sdr0)
}

/// Lower bound on the optimal infinite-horizon cost over a channel with `kc` uses per `ks` samples.
pub fn cost_lower_bound<T: Scalar>(plant: &PlantParams<T>, weights: &LqgWeights<T>, snr: T, kc: usize, ks: usize) -> Cost<T> {
    cost_with_sdr(plant, weights, opta_sdr(snr, kc, ks))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierSample<T> {
    pub snr: T,
    pub sdr: T,
    /// Largest open-loop pole that stays stabilizable: `sqrt(1 + sdr)`.
    pub alpha_max: T,
}

/// Maximum stabilizable `alpha` along an SNR grid for a given SNR-to-SDR curve.
pub fn stabilizability_frontier<T, F>(snrs: &[T], sdr_provider: F) -> Vec<FrontierSample<T>>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    snrs.iter()
        .map(|&snr| {
            let sdr = sdr_provider(snr);
            FrontierSample { snr, sdr, alpha_max: (T::one() + sdr).sqrt() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdr_lab::linear_sdr;

    fn plant(alpha: f64, w: f64, v: f64) -> PlantParams<f64> {
        PlantParams::new(alpha, w, v, 1.0).unwrap()
    }

    fn weights(q: f64, r: f64) -> LqgWeights<f64> {
        LqgWeights::new(q, r, q, 1).unwrap()
    }

    #[test]
    fn degenerate_quadratics() {
        let ss = steady_state(&plant(3.0, 1.0, 0.0), &weights(1.0, 0.0));
        assert_eq!((ss.s_inf, ss.p_enc, ss.p_enc_tt, ss.j_enc), (1.0, 1.0, 0.0, 1.0));
    }

    #[test]
    fn unit_weights_alpha_two() {
        let ss = steady_state(&plant(2.0, 1.0, 1.0), &weights(1.0, 1.0));
        let root = 2.0 + 5f64.sqrt();
        assert!((ss.s_inf - root).abs() < 1e-14);
        assert!((ss.p_enc - root).abs() < 1e-14);
        assert!((ss.p_enc_tt - root / (root + 1.0)).abs() < 1e-14);
        assert!((ss.p_enc_tt - 0.8090).abs() < 1e-4);
        assert!((ss.j_enc - 15.33).abs() < 5e-3);
    }

    #[test]
    fn noisy_observations() {
        // P grows to (alpha^2 - 1) V, so filtering removes a 1/alpha^2 share.
        let ss = steady_state(&plant(1.5, 1.0, 1e12), &weights(1.0, 1.0));
        assert!((ss.p_enc_tt / ss.p_enc - 1.0 / 2.25).abs() < 1e-9);
    }

    #[test]
    fn repetition_upper_bound_threshold() {
        let p = plant(3.0, 1.0, 0.0);
        let w = weights(1.0, 0.0);
        for snr in [4.5, 6.0, 10.0] {
            let j = achievable_cost(&p, &w, linear_sdr(snr)).value().unwrap();
            assert!((j - (1.0 + 9.0 / (2.0 * snr - 8.0))).abs() < 1e-12);
        }
        assert_eq!(achievable_cost(&p, &w, linear_sdr(4.0)), Cost::Diverges);
        assert!(achievable_cost(&p, &w, linear_sdr(4.0 + 1e-9)).is_finite());
        assert_eq!(achievable_cost(&p, &w, f64::INFINITY), Cost::Finite(1.0));
    }

    #[test]
    fn lower_bound_threshold() {
        let p = plant(3.0, 1.0, 0.0);
        let w = weights(1.0, 0.0);
        assert_eq!(cost_lower_bound(&p, &w, 4.0, 2, 1), Cost::Finite(1.5625));
        assert_eq!(cost_lower_bound(&p, &w, 2.0, 2, 1), Cost::Diverges);
        for snr in [2.5, 3.0, 8.0] {
            let j = cost_lower_bound(&p, &w, snr, 2, 1).value().unwrap();
            assert!((j - (1.0 + 9.0 / ((1.0 + snr) * (1.0 + snr) - 9.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_matched_bounds_coincide() {
        let p = plant(2.0, 1.0, 1.0);
        let w = weights(1.0, 1.0);
        for snr in [3.5, 4.0, 9.0] {
            assert_eq!(cost_lower_bound(&p, &w, snr, 1, 1), achievable_cost(&p, &w, snr));
        }
        let j = achievable_cost(&p, &w, 4.0).value().unwrap();
        assert!((j - 62.31).abs() < 1e-2, "{j}");
    }

    #[test]
    fn frontier_values() {
        let opta = stabilizability_frontier(&[3.0_f64], |s| opta_sdr(s, 2, 1));
        assert_eq!(opta[0].alpha_max, 4.0);
        let lin = stabilizability_frontier(&[4.0_f64], linear_sdr);
        assert_eq!(lin[0].alpha_max, 3.0);
        let matched = stabilizability_frontier(&[3.0_f64], |s| opta_sdr(s, 1, 1));
        assert_eq!(matched[0].alpha_max, 2.0);
    }

    #[test]
    fn cost_display_marks_divergence() {
        assert_eq!(Cost::<f64>::Diverges.to_string(), "diverges");
        assert_eq!(Cost::Finite(1.5_f64).to_string(), "1.5");
    }
}
