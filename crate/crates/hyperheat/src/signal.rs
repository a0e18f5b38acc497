//! External forcing signals `t -> R^V` on a time interval: identically zero,
//! piecewise linear through samples (the CSV form `t,h_1,...,h_n`), or the
//! named closed-form preset used by the periodic fixture.
//!
//! Piecewise-linear signals clamp to their first/last sample outside the
//! sampled range, and their integrals are computed segment-exactly so that
//! discrete conservation identities hold to rounding.

use crate::error::{Error, Result};
use crate::hypergraph::ComponentPartition;

#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Zero,
    PiecewiseLinear {
        times: Vec<f64>,
        /// One sample row per time, each of the ambient dimension.
        values: Vec<Vec<f64>>,
    },
    /// `h(t) = (2α e^{2(t-T/2)} + 2β, 0, 0, -(2α e^{2(t-T/2)} + 2β))` on a
    /// 4-vertex instance; drives the cosh-shaped periodic orbit.
    CoshExample { alpha: f64, beta: f64, period: f64 },
}

impl Signal {
    pub fn zero() -> Signal {
        Signal::Zero
    }

    pub fn cosh_example(alpha: f64, beta: f64, period: f64) -> Signal {
        Signal::CoshExample {
            alpha,
            beta,
            period,
        }
    }

    /// Dimension the signal requires, if it pins one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Signal::Zero => None,
            Signal::PiecewiseLinear { values, .. } => Some(values[0].len()),
            Signal::CoshExample { .. } => Some(4),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != n => Err(Error::invalid(format!(
                "signal has dimension {d} but the hypergraph has {n} vertices"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Signal::Zero)
    }

    pub fn eval(&self, t: f64, n: usize) -> Vec<f64> {
        match self {
            Signal::Zero => vec![0.0; n],
            Signal::PiecewiseLinear { times, values } => {
                debug_assert_eq!(values[0].len(), n);
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= *times.last().unwrap() {
                    return values.last().unwrap().clone();
                }
                let k = match times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
                    Ok(k) => return values[k].clone(),
                    Err(k) => k - 1,
                };
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                values[k]
                    .iter()
                    .zip(&values[k + 1])
                    .map(|(a, b)| a + w * (b - a))
                    .collect()
            }
            Signal::CoshExample {
                alpha,
                beta,
                period,
            } => {
                debug_assert_eq!(n, 4);
                let s = 2.0 * alpha * (2.0 * (t - period / 2.0)).exp() + 2.0 * beta;
                vec![s, 0.0, 0.0, -s]
            }
        }
    }

    /// Exact integral `∫_a^b h(t) dt` componentwise (`a <= b`).
    pub fn integral(&self, a: f64, b: f64, n: usize) -> Vec<f64> {
        assert!(b >= a, "integral bounds out of order");
        match self {
            Signal::Zero => vec![0.0; n],
            Signal::PiecewiseLinear { times, values } => {
                let mut acc = vec![0.0; n];
                let first = times[0];
                let last = *times.last().unwrap();
                // Clamped constant pieces outside the sample range.
                let left_end = b.min(first);
                if a < left_end {
                    for (acc_i, v) in acc.iter_mut().zip(&values[0]) {
                        *acc_i += (left_end - a) * v;
                    }
                }
                let right_start = a.max(last);
                if right_start < b {
                    for (acc_i, v) in acc.iter_mut().zip(values.last().unwrap()) {
                        *acc_i += (b - right_start) * v;
                    }
                }
                // Interior segments, trapezoid-exact for linear pieces.
                for k in 0..times.len().saturating_sub(1) {
                    let s0 = times[k].max(a);
                    let s1 = times[k + 1].min(b);
                    if s0 < s1 {
                        let h0 = self.eval(s0, n);
                        let h1 = self.eval(s1, n);
                        for i in 0..n {
                            acc[i] += (s1 - s0) * 0.5 * (h0[i] + h1[i]);
                        }
                    }
                }
                acc
            }
            Signal::CoshExample {
                alpha,
                beta,
                period,
            } => {
                debug_assert_eq!(n, 4);
                let prim = |t: f64| alpha * (2.0 * (t - period / 2.0)).exp() + 2.0 * beta * t;
                let s = prim(b) - prim(a);
                vec![s, 0.0, 0.0, -s]
            }
        }
    }

    /// Interval average, the exact right-hand side for one implicit step.
    pub fn average(&self, a: f64, b: f64, n: usize) -> Vec<f64> {
        if self.is_zero() {
            return vec![0.0; n];
        }
        let mut v = self.integral(a, b, n);
        let len = b - a;
        for x in v.iter_mut() {
            *x /= len;
        }
        v
    }

    /// Upper bound for `sup_t |h(t)|_{ℓ2}` on `[0, T]`; exact for the kinds
    /// here (piecewise-linear norms peak at sample nodes, the preset is
    /// monotone in `t`).
    pub fn sup_l2(&self, t_end: f64, n: usize) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::PiecewiseLinear { values, .. } => {
                let node_max = values
                    .iter()
                    .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                    .fold(0.0_f64, f64::max);
                node_max
            }
            Signal::CoshExample { .. } => {
                let h0 = self.eval(0.0, n);
                let h1 = self.eval(t_end, n);
                let n0 = h0.iter().map(|x| x * x).sum::<f64>().sqrt();
                let n1 = h1.iter().map(|x| x * x).sum::<f64>().sqrt();
                n0.max(n1)
            }
        }
    }

    /// Per-component integrals of the mean forcing over `[0, T]` — the
    /// compatibility residuals of the periodic problem.
    pub fn component_mean_integrals(
        &self,
        partition: &ComponentPartition,
        t_end: f64,
        n: usize,
    ) -> Vec<f64> {
        if self.is_zero() {
            return vec![0.0; partition.count()];
        }
        let total = self.integral(0.0, t_end, n);
        partition.component_means(&total)
    }

    /// Parses the CSV form `t,h_1,...,h_n`, one row per sample, strictly
    /// increasing times, optional single header line.
    pub fn from_csv_str(text: &str) -> Result<Signal> {
        let mut times = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut width: Option<usize> = None;
        let mut saw_row = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if !saw_row => continue, // header line
                Err(_) => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "row contains a non-numeric field".into(),
                    })
                }
            };
            saw_row = true;
            if row.len() < 2 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "row needs a time and at least one value".into(),
                });
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::Parse {
                    line: lineno,
                    message: "row contains a non-finite value".into(),
                });
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("row has {} fields, expected {}", row.len(), w),
                    })
                }
                _ => {}
            }
            if let Some(&prev) = times.last() {
                if row[0] <= prev {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "times must be strictly increasing".into(),
                    });
                }
            }
            times.push(row[0]);
            values.push(row[1..].to_vec());
        }
        if times.is_empty() {
            return Err(Error::Parse {
                line: text.lines().count() + 1,
                message: "signal file has no sample rows".into(),
            });
        }
        Ok(Signal::PiecewiseLinear { times, values })
    }

    /// Parses a preset name: `zero` or `cosh-example(alpha,beta)`. Returns
    /// None when the string is not a preset (the CLI then treats it as a
    /// path).
    pub fn parse_preset(spec: &str, period: f64) -> Option<Result<Signal>> {
        let s = spec.trim();
        if s == "zero" {
            return Some(Ok(Signal::Zero));
        }
        if let Some(rest) = s.strip_prefix("cosh-example(") {
            let Some(inner) = rest.strip_suffix(')') else {
                return Some(Err(Error::invalid(format!(
                    "malformed preset {spec:?}: missing closing parenthesis"
                ))));
            };
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Some(Err(Error::invalid(
                    "cosh-example takes two arguments: alpha,beta",
                )));
            }
            let alpha: f64 = match parts[0].parse() {
                Ok(v) => v,
                Err(_) => return Some(Err(Error::invalid("bad alpha in cosh-example"))),
            };
            let beta: f64 = match parts[1].parse() {
                Ok(v) => v,
                Err(_) => return Some(Err(Error::invalid("bad beta in cosh-example"))),
            };
            if !(alpha > 0.0) || !(beta >= 0.0) {
                return Some(Err(Error::invalid(
                    "cosh-example needs alpha > 0 and beta >= 0",
                )));
            }
            return Some(Ok(Signal::cosh_example(alpha, beta, period)));
        }
        None
    }
}
