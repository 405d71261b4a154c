//! Dormand–Prince 5(4) with local extrapolation and FSAL for autonomous systems
//! `y' = f(y)`. Node values are omitted since the right-hand side has no time argument.

use super::FlowError;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { atol: 1e-10, rtol: 1e-10, max_steps: 1_000_000 }
    }
}

/// Per-step hook deciding whether the state is still admissible.
pub trait StepCheck {
    fn accept(&self, t: f64, y: &[f64]) -> Result<(), FlowError>;
}

impl StepCheck for () {
    fn accept(&self, _: f64, _: &[f64]) -> Result<(), FlowError> {
        Ok(())
    }
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

impl Dopri5 {
    /// State at time `t_end` (either sign) starting from `y0` at time 0.
    pub fn integrate<F, C>(&self, f: F, y0: &[f64], t_end: f64, check: &C) -> Result<Vec<f64>, FlowError>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, FlowError>,
        C: StepCheck,
    {
        Ok(self.integrate_stops(f, y0, &[t_end], check)?.pop().unwrap_or_else(|| y0.to_vec()))
    }

    /// States at each of the monotone `stops` (all of one sign), hit exactly.
    pub fn integrate_stops<F, C>(&self, f: F, y0: &[f64], stops: &[f64], check: &C) -> Result<Vec<Vec<f64>>, FlowError>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, FlowError>,
        C: StepCheck,
    {
        let dir = if stops.iter().any(|&s| s < 0.0) { -1.0 } else { 1.0 };
        let g = |y: &[f64]| -> Result<Vec<f64>, FlowError> {
            let mut v = f(y)?;
            if dir < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            Ok(v)
        };
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut t = 0.0f64;
        let mut out = Vec::with_capacity(stops.len());
        let mut k1 = g(&y)?;
        let mut h = 1e-2f64;
        let mut steps = 0usize;
        let mut tmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        for &stop in stops {
            let target = stop * dir;
            if target < t {
                return Err(FlowError::Invalid("integration stops must be monotone and of one sign".into()));
            }
            while t < target {
                if steps >= self.max_steps {
                    return Err(FlowError::TooManySteps { time: t * dir });
                }
                let last = t + h >= target;
                let hs = if last { target - t } else { h };
                if hs <= 1e-14 * t.abs().max(1.0) && !last {
                    return Err(FlowError::StepUnderflow { time: t * dir });
                }
                axpy(&mut tmp, &y, hs, &[(A21, &k1)]);
                let k2 = g(&tmp)?;
                axpy(&mut tmp, &y, hs, &[(A31, &k1), (A32, &k2)]);
                let k3 = g(&tmp)?;
                axpy(&mut tmp, &y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
                let k4 = g(&tmp)?;
                axpy(&mut tmp, &y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
                let k5 = g(&tmp)?;
                axpy(&mut tmp, &y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
                let k6 = g(&tmp)?;
                axpy(&mut y_new, &y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
                let k7 = g(&y_new)?;
                let mut err = 0.0;
                for i in 0..n {
                    let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                    let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                    err += (e / sc) * (e / sc);
                }
                let err = (err / n.max(1) as f64).sqrt();
                let err = if err.is_finite() { err } else { f64::INFINITY };
                steps += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if err <= 1.0 {
                    t = if last { target } else { t + hs };
                    std::mem::swap(&mut y, &mut y_new);
                    k1 = k7;
                    check.accept(t * dir, &y)?;
                    if !last || factor < 1.0 {
                        h = hs * factor;
                    }
                } else {
                    h = hs * factor.min(1.0);
                    if h <= 1e-14 * t.abs().max(1.0) {
                        return Err(FlowError::StepUnderflow { time: t * dir });
                    }
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}
