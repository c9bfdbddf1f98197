//! Embedded Dormand–Prince 5(4) integrator with step-size control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_init: f64,
    pub h_max: f64,
}

impl Default for Dopri {
    fn default() -> Self {
        Dopri {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 10_000_000,
            h_init: 1e-3,
            h_max: f64::INFINITY,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri {
    /// Integrate y' = f(t, y) from `t0` and return the state at each time in `outputs`
    /// (sorted, all ≥ t0). Steps are shortened to land on every output time.
    pub fn solve<F>(&self, mut f: F, t0: f64, y0: &[f64], outputs: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut t = t0;
        let mut h = self.h_init;
        let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
        let mut tmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        f(t, &y, &mut k[0]);
        let mut out = Vec::with_capacity(outputs.len());
        let mut steps = 0usize;
        for &target in outputs {
            if target < t {
                return Err(Error::Integrator(format!("output time {target} precedes {t}")));
            }
            while t < target {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::Integrator(format!("step budget exhausted at t = {t}")));
                }
                let mut last = false;
                let mut hs = h.min(self.h_max);
                if t + hs >= target {
                    hs = target - t;
                    last = true;
                }
                let stage = |k: &Vec<Vec<f64>>, coef: &[(usize, f64)], tmp: &mut Vec<f64>, y: &Vec<f64>| {
                    for i in 0..n {
                        let mut s = y[i];
                        for &(j, a) in coef {
                            s += hs * a * k[j][i];
                        }
                        tmp[i] = s;
                    }
                };
                stage(&k, &[(0, A21)], &mut tmp, &y);
                f(t + C2 * hs, &tmp, &mut k[1]);
                stage(&k, &[(0, A31), (1, A32)], &mut tmp, &y);
                f(t + C3 * hs, &tmp, &mut k[2]);
                stage(&k, &[(0, A41), (1, A42), (2, A43)], &mut tmp, &y);
                f(t + C4 * hs, &tmp, &mut k[3]);
                stage(&k, &[(0, A51), (1, A52), (2, A53), (3, A54)], &mut tmp, &y);
                f(t + C5 * hs, &tmp, &mut k[4]);
                stage(&k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &mut tmp, &y);
                f(t + hs, &tmp, &mut k[5]);
                stage(&k, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &mut ynew, &y);
                f(t + hs, &ynew, &mut k[6]);
                let mut err = 0.0f64;
                for i in 0..n {
                    let e = hs
                        * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                    let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                    err = err.max((e / sc).abs());
                }
                if !err.is_finite() {
                    return Err(Error::Integrator(format!("non-finite state at t = {t}")));
                }
                if err <= 1.0 {
                    t = if last { target } else { t + hs };
                    std::mem::swap(&mut y, &mut ynew);
                    k.swap(0, 6);
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if !last || fac < 1.0 {
                        h = hs * fac;
                    }
                } else {
                    h = hs * (0.9 * err.powf(-0.2)).max(0.1);
                    if h < 1e-14 * t.abs().max(1.0) {
                        return Err(Error::Integrator(format!("step size underflow at t = {t}")));
                    }
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}
