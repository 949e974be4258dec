use super::{ParamRef, Parameterized};
use crate::error::{Error, Result};

/// Bias-corrected Adam with per-tensor moment buffers.
///
/// Moments are keyed by visit order, which [`Parameterized::visit`] keeps
/// fixed for a given model.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        Self {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Applies one update from the gradients currently stored in `model`.
    pub fn step<P: Parameterized + ?Sized>(&mut self, model: &mut P) -> Result<()> {
        let mut bad = None;
        model.visit("", &mut |p| {
            if bad.is_none() {
                if let Some(g) = &p.grad {
                    if g.iter().any(|v| !v.is_finite()) {
                        bad = Some(p.name.clone());
                    }
                }
            }
        });
        if let Some(name) = bad {
            return Err(Error::NonFiniteGradient(name));
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let (first, second) = (&mut self.first, &mut self.second);
        let mut idx = 0;
        let mut shape_err = None;
        model.visit("", &mut |p: ParamRef<'_>| {
            let Some(g) = p.grad else { return };
            if first.len() == idx {
                first.push(vec![0.0; g.len()]);
                second.push(vec![0.0; g.len()]);
            }
            if first[idx].len() != g.len() {
                shape_err.get_or_insert_with(|| p.name.clone());
                idx += 1;
                return;
            }
            let (m, v) = (&mut first[idx], &mut second[idx]);
            for i in 0..g.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.value[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            idx += 1;
        });
        match shape_err {
            Some(name) => Err(Error::Shape {
                layer: name,
                detail: "parameter shape changed between optimizer steps".into(),
            }),
            None => Ok(()),
        }
    }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm<P: Parameterized + ?Sized>(model: &mut P, max_norm: f64) -> f64 {
    let mut sq = 0.0;
    model.visit("", &mut |p| {
        if let Some(g) = p.grad {
            sq += g.iter().map(|v| v * v).sum::<f64>();
        }
    });
    let norm = sq.sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        model.visit("", &mut |p| {
            if let Some(g) = p.grad {
                g.iter_mut().for_each(|v| *v *= s);
            }
        });
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Vector {
        w: Vec<f64>,
        g: Vec<f64>,
    }

    impl Parameterized for Vector {
        fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
            f(ParamRef {
                name: format!("{prefix}w"),
                shape: vec![self.w.len()],
                value: &mut self.w,
                grad: Some(&mut self.g),
            });
        }
    }

    #[test]
    fn zero_grads_leave_params() {
        let mut p = Vector {
            w: vec![1.0, -2.0],
            g: vec![0.0, 0.0],
        };
        let mut adam = AdamState::new(0.1);
        adam.step(&mut p).unwrap();
        assert_eq!(p.w, vec![1.0, -2.0]);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = Vector {
            w: vec![0.0, 0.0, 0.0],
            g: vec![3.0, -0.2, 1e-3],
        };
        let mut adam = AdamState::new(0.01);
        adam.step(&mut p).unwrap();
        for (w, g) in p.w.iter().zip([3.0f64, -0.2, 1e-3]) {
            // m̂ = g, v̂ = g², so Δ = -lr g / (|g| + eps).
            let want = -0.01 * g / (g.abs() + 1e-8);
            assert!((w - want).abs() < 1e-15);
            assert!((w + 0.01 * g.signum()).abs() < 1e-7);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut p = Vector {
            w: vec![1.0, -0.5, 0.25],
            g: vec![0.0; 3],
        };
        let mut adam = AdamState::new(1e-2);
        let mut steps = 0;
        while p.w.iter().map(|w| w * w).sum::<f64>() >= 1e-6 {
            assert!(steps < 2000, "did not converge");
            for i in 0..3 {
                p.g[i] = 2.0 * p.w[i];
            }
            adam.step(&mut p).unwrap();
            steps += 1;
        }
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = Vector {
            w: vec![1.0],
            g: vec![f64::NAN],
        };
        assert!(matches!(AdamState::new(0.1).step(&mut p), Err(Error::NonFiniteGradient(_))));
        assert_eq!(p.w, vec![1.0]);
    }

    #[test]
    fn clipping_caps_norm() {
        let mut p = Vector {
            w: vec![0.0; 2],
            g: vec![3.0, 4.0],
        };
        assert_eq!(clip_global_norm(&mut p, 1.0), 5.0);
        assert!((p.g[0] - 0.6).abs() < 1e-15 && (p.g[1] - 0.8).abs() < 1e-15);
        assert_eq!(clip_global_norm(&mut p, 5.0), 1.0);
    }
}
