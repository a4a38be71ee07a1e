//! Log-space accumulation.
//!
//! Posterior terms routinely span hundreds of orders of magnitude, so every
//! sum in the posterior engines is carried as `(shift, scaled sum)` pairs.

/// `log(Σ exp(v_i))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Streaming accumulator for `Σ exp(ℓ_t)` together with any number of
/// weighted companions `Σ exp(ℓ_t)·h_t[g]`, all held relative to the running
/// maximum of `ℓ_t`.
#[derive(Debug, Clone)]
pub struct WeightedLogSum {
    shift: f64,
    weight: f64,
    companions: Vec<f64>,
}

impl WeightedLogSum {
    pub fn new(companions: usize) -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            weight: 0.0,
            companions: vec![0.0; companions],
        }
    }

    /// Rescales if needed and returns the linear weight of a term with log
    /// value `log_term` relative to the current shift.
    #[inline]
    pub fn admit(&mut self, log_term: f64) -> f64 {
        if log_term == f64::NEG_INFINITY {
            return 0.0;
        }
        if log_term > self.shift {
            if self.shift != f64::NEG_INFINITY {
                let factor = (self.shift - log_term).exp();
                self.weight *= factor;
                for c in &mut self.companions {
                    *c *= factor;
                }
            }
            self.shift = log_term;
        }
        let w = (log_term - self.shift).exp();
        self.weight += w;
        w
    }

    #[inline]
    pub fn companion_mut(&mut self) -> &mut [f64] {
        &mut self.companions
    }

    /// `log Σ exp(ℓ_t)`.
    pub fn log_total(&self) -> f64 {
        if self.weight == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.shift + self.weight.ln()
        }
    }

    /// `Σ exp(ℓ_t) h_t[g] / Σ exp(ℓ_t)` for every companion `g`.
    pub fn normalized_companions(&self) -> Vec<f64> {
        self.companions.iter().map(|c| c / self.weight).collect()
    }
}
