//! Adam and limited-memory BFGS on flat parameter vectors.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, w: &mut [f64], g: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..w.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            w[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// A function value with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub grad: Vec<f64>,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_TRIALS: usize = 20;
const CURVATURE_FLOOR: f64 = 1e-12;
const FALLBACK_NORM: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Lbfgs {
    memory: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    fallbacks: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Lbfgs {
    pub fn new(memory: usize) -> Self {
        Self { memory: memory.max(1), pairs: VecDeque::new(), fallbacks: 0 }
    }

    /// Line-search failures that fell back to a short steepest-descent step.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    pub fn stored_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// `−H g` by the two-loop recursion.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alpha = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alpha.push(a);
        }
        let gamma = match self.pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / norm(g).max(1.0),
        };
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alpha.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }

    /// One iteration from `w` with `current = f(w)`. Trial points whose
    /// evaluation fails or is non-finite count as rejected.
    pub fn step<F>(&mut self, w: &mut [f64], current: &Evaluated, mut f: F) -> Result<Evaluated>
    where
        F: FnMut(&[f64]) -> Result<Evaluated>,
    {
        let g = &current.grad;
        let gnorm = norm(g);
        if gnorm == 0.0 {
            return Ok(current.clone());
        }
        let mut d = self.direction(g);
        let mut slope = dot(g, &d);
        if slope.is_nan() || slope >= 0.0 {
            self.pairs.clear();
            d = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(g, &d);
        }
        let mut t = 1.0;
        let mut trial = vec![0.0; w.len()];
        for _ in 0..MAX_TRIALS {
            for i in 0..w.len() {
                trial[i] = w[i] + t * d[i];
            }
            if let Ok(next) = f(&trial) {
                if next.value.is_finite() && next.value <= current.value + ARMIJO_C1 * t * slope {
                    self.remember(&trial, w, &next.grad, g);
                    w.copy_from_slice(&trial);
                    return Ok(next);
                }
            }
            t *= 0.5;
        }
        self.fallbacks += 1;
        self.pairs.clear();
        for i in 0..w.len() {
            w[i] -= FALLBACK_NORM * g[i] / gnorm;
        }
        let next = f(w)?;
        if !next.value.is_finite() {
            return Err(Error::Training("non-finite loss after steepest-descent fallback".into()));
        }
        Ok(next)
    }

    fn remember(&mut self, w_new: &[f64], w_old: &[f64], g_new: &[f64], g_old: &[f64]) {
        let s: Vec<f64> = w_new.iter().zip(w_old).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(g_old).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy <= CURVATURE_FLOOR {
            return;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(a: &[[f64; 5]; 5]) -> impl Fn(&[f64]) -> Result<Evaluated> + '_ {
        move |w| {
            let aw: Vec<f64> = (0..5).map(|i| (0..5).map(|j| a[i][j] * w[j]).sum()).collect();
            Ok(Evaluated { value: 0.5 * dot(w, &aw), grad: aw })
        }
    }

    fn spd() -> [[f64; 5]; 5] {
        // B Bᵀ + I with a fixed B
        let b = [
            [1.0, 0.2, -0.3, 0.0, 0.5],
            [0.0, 2.0, 0.1, 0.4, -0.2],
            [0.3, -0.1, 1.5, 0.2, 0.0],
            [0.0, 0.6, 0.0, 3.0, 0.1],
            [-0.4, 0.0, 0.2, 0.1, 0.8],
        ];
        let mut a = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                a[i][j] = (0..5).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
            }
        }
        a
    }

    fn rosenbrock(w: &[f64]) -> Result<Evaluated> {
        let (x, y) = (w[0], w[1]);
        Ok(Evaluated {
            value: (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2),
            grad: vec![-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)],
        })
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut opt = Adam::new(3, 0.1);
        let mut w = vec![1.0, -2.0, 3.0];
        opt.step(&mut w, &[0.0; 3]);
        assert_eq!(w, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn adam_first_step_has_magnitude_lr() {
        let mut opt = Adam::new(3, 0.01);
        let mut w = vec![0.0; 3];
        opt.step(&mut w, &[4.0, -0.5, 1e-3]);
        assert!((w[0] + 0.01).abs() < 1e-9);
        assert!((w[1] - 0.01).abs() < 1e-9);
        assert!((w[2] + 0.01).abs() < 1e-7);
    }

    #[test]
    fn adam_descends_quadratic_bowl() {
        let mut opt = Adam::new(2, 0.05);
        let mut w = vec![1.0, 1.0];
        for _ in 0..200 {
            let g: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
            opt.step(&mut w, &g);
        }
        assert!(dot(&w, &w) < 1e-3);
    }

    #[test]
    fn lbfgs_solves_spd_quadratic() {
        let a = spd();
        let f = quadratic(&a);
        let mut w = vec![1.0, -1.0, 2.0, 0.5, -3.0];
        let mut cur = f(&w).unwrap();
        let mut opt = Lbfgs::new(10);
        let mut steps = 0;
        while norm(&cur.grad) >= 1e-8 {
            assert!(steps < 30, "gradient {} after 30 steps", norm(&cur.grad));
            cur = opt.step(&mut w, &cur, &f).unwrap();
            steps += 1;
        }
        assert_eq!(opt.fallbacks(), 0);
    }

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let mut w = vec![-1.2, 1.0];
        let mut cur = rosenbrock(&w).unwrap();
        let mut opt = Lbfgs::new(10);
        let mut steps = 0;
        while cur.value >= 1e-6 {
            assert!(steps < 200, "f = {} after 200 steps", cur.value);
            cur = opt.step(&mut w, &cur, rosenbrock).unwrap();
            steps += 1;
        }
    }

    #[test]
    fn lbfgs_stays_at_critical_point() {
        let a = spd();
        let f = quadratic(&a);
        let mut w = vec![0.0; 5];
        let cur = f(&w).unwrap();
        let next = Lbfgs::new(5).step(&mut w, &cur, &f).unwrap();
        assert_eq!(w, vec![0.0; 5]);
        assert_eq!(next, cur);
    }

    #[test]
    fn failed_line_search_falls_back() {
        // a "gradient" pointing uphill defeats every Armijo trial
        let f = |w: &[f64]| Ok(Evaluated { value: w[0], grad: vec![-1.0] });
        let mut w = vec![0.0];
        let cur = f(&w).unwrap();
        let mut opt = Lbfgs::new(3);
        let next = opt.step(&mut w, &cur, f).unwrap();
        assert_eq!(opt.fallbacks(), 1);
        assert!((w[0] - 1e-3).abs() < 1e-15);
        assert_eq!(next.value, w[0]);
    }

    #[test]
    fn rejected_evaluations_shrink_the_step() {
        let f = |w: &[f64]| {
            if w[0].abs() > 0.3 {
                Err(Error::Training("blow-up".into()))
            } else {
                Ok(Evaluated { value: (w[0] - 0.2).powi(2), grad: vec![2.0 * (w[0] - 0.2)] })
            }
        };
        let mut w = vec![0.0];
        let cur = f(&w).unwrap();
        let next = Lbfgs::new(3).step(&mut w, &cur, f).unwrap();
        assert!(next.value < cur.value);
    }
}
