//! European, Bermudan and discretely monitored up-and-out barrier pricers
//! over a [`QuantizationSequence`].

use std::fmt;
use std::sync::Arc;

use crate::rmq::{BandMatrix, QuantizationSequence};
use crate::{Error, Result};

/// Payoff `H(S)` of the terminal (or exercise-date) state.
#[derive(Clone)]
pub enum VanillaPayoff {
    Call { strike: f64 },
    Put { strike: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl VanillaPayoff {
    pub fn call(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(VanillaPayoff::Call { strike })
    }

    pub fn put(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(VanillaPayoff::Put { strike })
    }

    pub fn custom(h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        VanillaPayoff::Custom(Arc::new(h))
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            VanillaPayoff::Call { strike } => (s - strike).max(0.0),
            VanillaPayoff::Put { strike } => (strike - s).max(0.0),
            VanillaPayoff::Custom(h) => h(s),
        }
    }

    pub fn strike(&self) -> Option<f64> {
        match self {
            VanillaPayoff::Call { strike } | VanillaPayoff::Put { strike } => Some(*strike),
            VanillaPayoff::Custom(_) => None,
        }
    }
}

impl fmt::Debug for VanillaPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VanillaPayoff::Call { strike } => write!(f, "Call({strike})"),
            VanillaPayoff::Put { strike } => write!(f, "Put({strike})"),
            VanillaPayoff::Custom(_) => f.write_str("Custom"),
        }
    }
}

fn check_strike(strike: f64) -> Result<()> {
    if strike >= 0.0 && strike.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "strike must be nonnegative, got {strike}"
        )))
    }
}

/// Up-and-out barrier monitored at every step of the sequence, including
/// inception.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub level: f64,
}

impl BarrierSpec {
    pub fn up_and_out(level: f64) -> Result<Self> {
        if level > 0.0 && !level.is_nan() {
            Ok(BarrierSpec { level })
        } else {
            Err(Error::InvalidParameter(format!(
                "barrier level must be positive, got {level}"
            )))
        }
    }

    fn alive(&self, a: f64, b: f64) -> bool {
        a.max(b) < self.level
    }
}

/// `e^{-rT} p_K . H(Gamma_K)`.
pub fn european_price(seq: &QuantizationSequence, payoff: &VanillaPayoff, r: f64) -> f64 {
    (-r * seq.horizon).exp() * seq.final_quantizer().expectation(|s| payoff.value(s))
}

fn transitions(seq: &QuantizationSequence) -> Result<Vec<&BandMatrix>> {
    seq.steps
        .iter()
        .map(|s| {
            s.transition.as_ref().ok_or_else(|| {
                Error::InvalidParameter(format!("step {} carries no transition matrix", s.step))
            })
        })
        .collect()
}

/// Backward dynamic programming with exercise at every step date:
/// `h_k = max(H(Gamma_k), e^{-r dt} P_{k+1} h_{k+1})`, `H_0 = e^{-r dt} p_1 . h_1`.
pub fn bermudan_price(seq: &QuantizationSequence, payoff: &VanillaPayoff, r: f64) -> Result<f64> {
    let links = transitions(seq)?;
    let discount = (-r * seq.dt).exp();
    let last = seq.final_quantizer();
    let mut h: Vec<f64> = last.codewords.iter().map(|&s| payoff.value(s)).collect();
    for k in (1..seq.len()).rev() {
        let continuation = links[k].mul_vec(&h);
        h = seq.steps[k - 1]
            .quantizer
            .codewords
            .iter()
            .zip(continuation)
            .map(|(&s, c)| payoff.value(s).max(discount * c))
            .collect();
    }
    Ok(discount * links[0].mul_vec(&h)[0])
}

/// `e^{-rT} ((p_1 o g_1) prod_k (P_k o G_k)) . H(Gamma_K)` with
/// `g(x, y) = 1{max(x, y) < L}`.
pub fn barrier_up_out_price(
    seq: &QuantizationSequence,
    payoff: &VanillaPayoff,
    barrier: &BarrierSpec,
    r: f64,
) -> Result<f64> {
    let links = transitions(seq)?;
    let mut from = vec![seq.s0];
    let mut v = vec![1.0];
    for (rec, link) in seq.steps.iter().zip(&links) {
        let to = &rec.quantizer.codewords;
        let mut next = vec![0.0; to.len()];
        for ((row, &w), &x) in link.rows.iter().zip(&v).zip(&from) {
            if w == 0.0 || x >= barrier.level {
                continue;
            }
            for (j, p) in row.entries() {
                if barrier.alive(x, to[j]) {
                    next[j] += w * p;
                }
            }
        }
        v = next;
        from = to.clone();
    }
    let value: f64 = v.iter().zip(&from).map(|(w, &s)| w * payoff.value(s)).sum();
    Ok((-r * seq.horizon).exp() * value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmq::{rmq_run, BandRow, BoundaryMode, Schedule, StepRecord};
    use crate::schemes::Scheme;
    use crate::sde_models::{gbm_model, GbmParams};
    use crate::vq1d::Quantizer;
    use approx::assert_relative_eq;

    fn sequence(k: usize, n: usize, boundary: BoundaryMode) -> QuantizationSequence {
        let g = gbm_model(GbmParams {
            s0: 100.0,
            r: 0.05,
            sigma: 0.3,
        })
        .unwrap();
        let sched = Schedule::uniform(1.0, k, n, 50, 5).unwrap();
        rmq_run(&g, Scheme::Weak2, 100.0, &sched, boundary).unwrap()
    }

    #[test]
    fn trivial_payoffs() {
        let seq = sequence(12, 40, BoundaryMode::Free);
        assert_eq!(
            european_price(&seq, &VanillaPayoff::custom(|_| 0.0), 0.05),
            0.0
        );
        assert_relative_eq!(
            european_price(&seq, &VanillaPayoff::custom(|_| 1.0), 0.05),
            (-0.05f64).exp(),
            epsilon = 1e-10
        );
        let zero = VanillaPayoff::put(0.0).unwrap();
        assert_eq!(bermudan_price(&seq, &zero, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn invalid_contracts_are_rejected() {
        assert!(VanillaPayoff::put(-1.0).is_err());
        assert!(BarrierSpec::up_and_out(0.0).is_err());
        assert_eq!(VanillaPayoff::call(3.0).unwrap().strike(), Some(3.0));
    }

    #[test]
    fn bermudan_dominates_european() {
        for boundary in [BoundaryMode::Free, BoundaryMode::Absorbing] {
            let seq = sequence(12, 40, boundary);
            for strike in [80.0, 100.0, 120.0] {
                let put = VanillaPayoff::put(strike).unwrap();
                assert!(
                    bermudan_price(&seq, &put, 0.05).unwrap() >= european_price(&seq, &put, 0.05)
                );
            }
        }
    }

    #[test]
    fn single_exercise_date_is_european() {
        let seq = sequence(1, 40, BoundaryMode::Free);
        let put = VanillaPayoff::put(105.0).unwrap();
        assert_relative_eq!(
            bermudan_price(&seq, &put, 0.05).unwrap(),
            european_price(&seq, &put, 0.05),
            max_relative = 1e-12
        );
    }

    #[test]
    fn barrier_limits() {
        let seq = sequence(12, 40, BoundaryMode::Free);
        let put = VanillaPayoff::put(100.0).unwrap();
        let far = BarrierSpec::up_and_out(1e12).unwrap();
        assert_relative_eq!(
            barrier_up_out_price(&seq, &put, &far, 0.05).unwrap(),
            european_price(&seq, &put, 0.05),
            max_relative = 1e-10
        );
        let at = BarrierSpec::up_and_out(100.0).unwrap();
        assert_eq!(barrier_up_out_price(&seq, &put, &at, 0.05).unwrap(), 0.0);
        let mut last = 0.0;
        for i in 0..30 {
            let level = 101.0 + 5.0 * i as f64;
            let v =
                barrier_up_out_price(&seq, &put, &BarrierSpec::up_and_out(level).unwrap(), 0.05)
                    .unwrap();
            assert!(v >= last - 1e-14);
            last = v;
        }
    }

    #[test]
    fn put_is_monotone_in_strike() {
        let seq = sequence(12, 40, BoundaryMode::Free);
        let mut last = 0.0;
        for i in 0..20 {
            let v = european_price(
                &seq,
                &VanillaPayoff::put(60.0 + 4.0 * i as f64).unwrap(),
                0.05,
            );
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn zero_state_pays_the_full_strike() {
        // one step: s0 -> {0 (absorbed), 1, 2}
        let seq = QuantizationSequence {
            s0: 1.0,
            horizon: 1.0,
            dt: 1.0,
            scheme: Scheme::Euler,
            boundary: BoundaryMode::Absorbing,
            steps: vec![StepRecord {
                step: 1,
                time: 1.0,
                quantizer: Quantizer::new(vec![0.0, 1.0, 2.0], vec![0.2, 0.5, 0.3]).unwrap(),
                absorbed_mass: 0.2,
                transition: Some(BandMatrix {
                    ncols: 3,
                    rows: vec![BandRow {
                        start: 0,
                        values: vec![0.2, 0.5, 0.3],
                    }],
                }),
                updates: vec![],
                report: Default::default(),
            }],
        };
        let put = VanillaPayoff::put(1.5).unwrap();
        let by_hand = (-0.03f64).exp() * (0.2 * 1.5 + 0.5 * 0.5 + 0.3 * 0.0);
        assert_relative_eq!(
            european_price(&seq, &put, 0.03),
            by_hand,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            bermudan_price(&seq, &put, 0.03).unwrap(),
            by_hand,
            max_relative = 1e-15
        );
        let b = BarrierSpec::up_and_out(1.8).unwrap();
        let knocked = (-0.03f64).exp() * (0.2 * 1.5 + 0.5 * 0.5);
        assert_relative_eq!(
            barrier_up_out_price(&seq, &put, &b, 0.03).unwrap(),
            knocked,
            max_relative = 1e-15
        );
    }

    #[test]
    fn missing_transitions_are_reported() {
        let mut seq = sequence(2, 10, BoundaryMode::Free);
        seq.steps[1].transition = None;
        assert!(bermudan_price(&seq, &VanillaPayoff::put(100.0).unwrap(), 0.05).is_err());
    }
}
