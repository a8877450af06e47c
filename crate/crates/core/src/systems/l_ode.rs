use crate::gtilde::{gtilde_eval, GTildeSpec};

/// Time function of the Example-1 value function `V(t, x) = x² + l(t)`,
/// solving `l′(t) + G̃(−4l(t) − 0.5) = 0`, `l(T) = 0`.
#[derive(Debug, Clone)]
pub struct LSolution {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `l′` from the right-hand side, `−G̃(−4l − 0.5)`.
    pub derivative: Vec<f64>,
    spec: GTildeSpec,
}

fn rhs(spec: &GTildeSpec, l: f64) -> f64 {
    -gtilde_eval(spec, -4.0 * l - 0.5)
}

/// Classical RK4 integrated backward from `l(T) = 0` on `n_steps` equal steps
/// (at least 10).
pub fn solve_l_ode(spec: &GTildeSpec, horizon: f64, n_steps: usize) -> LSolution {
    let n = n_steps.max(10);
    let h = horizon / n as f64;
    let mut values = vec![0.0; n + 1];
    for j in (0..n).rev() {
        let l = values[j + 1];
        // Stepping with -h integrates from t_{j+1} down to t_j.
        let k1 = rhs(spec, l);
        let k2 = rhs(spec, l - 0.5 * h * k1);
        let k3 = rhs(spec, l - 0.5 * h * k2);
        let k4 = rhs(spec, l - h * k3);
        values[j] = l - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let times = (0..=n).map(|j| if j == n { horizon } else { h * j as f64 }).collect();
    let derivative = values.iter().map(|&l| rhs(spec, l)).collect();
    LSolution { times, values, derivative, spec: spec.clone() }
}

impl LSolution {
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Cubic Hermite interpolation using the stored values and derivatives,
    /// clamped to `[0, T]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let h = self.step();
        let n = self.values.len() - 1;
        let t = t.clamp(0.0, self.horizon());
        let j = ((t / h).floor() as usize).min(n - 1);
        let s = (t - self.times[j]) / h;
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        let (d0, d1) = (self.derivative[j] * h, self.derivative[j + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }

    /// `|l′ + G̃(−4l − 0.5)|` at every grid time, with `l′` taken from a
    /// fourth-order five-point difference of the computed values (one-sided
    /// near the ends), so the residual measures the integration error.
    pub fn residual(&self) -> Vec<f64> {
        let f = &self.values;
        let n = f.len() - 1;
        let h = self.step();
        (0..=n)
            .map(|j| {
                let d = if j >= 2 && j + 2 <= n {
                    (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * h)
                } else if j == 0 {
                    (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
                } else if j == 1 {
                    (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
                } else if j == n - 1 {
                    (3.0 * f[n] + 10.0 * f[n - 1] - 18.0 * f[n - 2] + 6.0 * f[n - 3] - f[n - 4]) / (12.0 * h)
                } else {
                    (25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3] + 3.0 * f[n - 4])
                        / (12.0 * h)
                };
                (d + gtilde_eval(&self.spec, -4.0 * f[j] - 0.5)).abs()
            })
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual().into_iter().fold(0.0, f64::max)
    }
}
