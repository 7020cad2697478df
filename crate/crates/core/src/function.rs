//! Closed-form scalar functions with optional analytic gradients, and the
//! smooth bump used as cutoff and test function.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub type GradientFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A function `ℝᵈ → ℝ` given by closures. Cloning is cheap.
#[derive(Clone)]
pub struct ClosedForm {
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForm").field("gradient", &self.gradient.is_some()).finish()
    }
}

impl ClosedForm {
    pub fn new(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ClosedForm { value: Arc::new(value), gradient: None }
    }

    pub fn with_gradient(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        ClosedForm { value: Arc::new(value), gradient: Some(Arc::new(gradient)) }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_gradient(move |_| c, |_, g| g.iter_mut().for_each(|v| *v = 0.0))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `x ↦ a·x + c`.
    pub fn affine(linear: Vec<f64>, constant: f64) -> Self {
        let lin = linear.clone();
        Self::with_gradient(
            move |x| constant + lin.iter().zip(x).map(|(a, v)| a * v).sum::<f64>(),
            move |_, g| g.copy_from_slice(&linear),
        )
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Writes the analytic gradient into `out`; returns `false` if there is none.
    #[inline]
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> bool {
        match &self.gradient {
            Some(g) => {
                g(x, out);
                true
            }
            None => false,
        }
    }

    /// Drops the analytic gradient, forcing callers onto differencing.
    pub fn without_gradient(&self) -> Self {
        ClosedForm { value: self.value.clone(), gradient: None }
    }

    pub fn scale(&self, k: f64) -> Self {
        let v = self.value.clone();
        match &self.gradient {
            Some(g) => {
                let g = g.clone();
                Self::with_gradient(
                    move |x| k * v(x),
                    move |x, out| {
                        g(x, out);
                        out.iter_mut().for_each(|o| *o *= k);
                    },
                )
            }
            None => Self::new(move |x| k * v(x)),
        }
    }

    /// `Σ λᵢ fᵢ`; keeps the gradient only if every term has one.
    pub fn linear_combination(terms: &[(f64, ClosedForm)]) -> Self {
        let terms: Vec<(f64, ClosedForm)> = terms.iter().filter(|(l, _)| *l != 0.0).cloned().collect();
        if terms.is_empty() {
            return Self::zero();
        }
        let all_grad = terms.iter().all(|(_, f)| f.has_gradient());
        let vt = terms.clone();
        let value = move |x: &[f64]| vt.iter().map(|(l, f)| l * f.eval(x)).sum::<f64>();
        if all_grad {
            Self::with_gradient(value, move |x, out| {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut buf = vec![0.0; out.len()];
                for (l, f) in &terms {
                    f.gradient_into(x, &mut buf);
                    out.iter_mut().zip(&buf).for_each(|(o, b)| *o += l * b);
                }
            })
        } else {
            Self::new(value)
        }
    }

    pub fn add(&self, other: &ClosedForm) -> Self {
        Self::linear_combination(&[(1.0, self.clone()), (1.0, other.clone())])
    }

    pub fn sub(&self, other: &ClosedForm) -> Self {
        Self::linear_combination(&[(1.0, self.clone()), (-1.0, other.clone())])
    }

    /// Pointwise product with the product rule for the gradient.
    pub fn mul(&self, other: &ClosedForm) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let value = {
            let (a, b) = (a.clone(), b.clone());
            move |x: &[f64]| a.eval(x) * b.eval(x)
        };
        if a.has_gradient() && b.has_gradient() {
            Self::with_gradient(value, move |x, out| {
                let mut gb = vec![0.0; out.len()];
                a.gradient_into(x, out);
                b.gradient_into(x, &mut gb);
                let (va, vb) = (a.eval(x), b.eval(x));
                out.iter_mut().zip(&gb).for_each(|(o, g)| *o = *o * vb + va * g);
            })
        } else {
            Self::new(value)
        }
    }
}

/// The default cutoff `χ(x) = exp(1 − 1/(1 − x²))` on `|x| < 1`, zero outside.
#[inline]
pub fn chi(x: f64) -> f64 {
    let u = 1.0 - x * x;
    if u <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / u).exp()
    }
}

#[inline]
pub fn chi_prime(x: f64) -> f64 {
    let u = 1.0 - x * x;
    if u <= 0.0 {
        0.0
    } else {
        -2.0 * x / (u * u) * chi(x)
    }
}

/// `χ` rescaled to a support of half-width `radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub radius: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { radius: 1.0 }
    }
}

impl Cutoff {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        chi(x / self.radius)
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        chi_prime(x / self.radius) / self.radius
    }
}

/// Radial bump `φ(y) = exp(1 − 1/(1 − |y−c|²/ρ²))`, compactly supported in
/// the ball of radius `ρ` around `c`, with `φ(c) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl TestFunction {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "test function radius must be positive");
        TestFunction { center, radius }
    }

    fn rho2(&self, y: &[f64]) -> f64 {
        self.center.iter().zip(y).map(|(c, v)| (v - c) * (v - c)).sum::<f64>() / (self.radius * self.radius)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let u = 1.0 - self.rho2(y);
        if u <= 0.0 {
            0.0
        } else {
            (1.0 - 1.0 / u).exp()
        }
    }

    pub fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let u = 1.0 - self.rho2(y);
        if u <= 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let phi = (1.0 - 1.0 / u).exp();
        let k = -2.0 * phi / (self.radius * self.radius * u * u);
        for ((o, v), c) in out.iter_mut().zip(y).zip(&self.center) {
            *o = k * (v - c);
        }
    }

    pub fn closed_form(&self) -> ClosedForm {
        let (a, b) = (self.clone(), self.clone());
        ClosedForm::with_gradient(move |y| a.value(y), move |y, g| b.gradient(y, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 0.0);
        assert_eq!(chi(-1.3), 0.0);
        for x in [-0.9, -0.4, 0.0, 0.3, 0.77] {
            assert!((chi_prime(x) - central(&chi, x)).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn test_function_support_and_gradient() {
        let phi = TestFunction::new(vec![0.5, -0.2], 0.7);
        assert!(phi.value(&[0.5, -0.2]) > 0.0);
        assert_eq!(phi.value(&[1.3, -0.2]), 0.0);
        let y = [0.7, 0.1];
        let mut g = [0.0; 2];
        phi.gradient(&y, &mut g);
        let h = 1e-6;
        let dq = (phi.value(&[y[0] + h, y[1]]) - phi.value(&[y[0] - h, y[1]])) / (2.0 * h);
        let dp = (phi.value(&[y[0], y[1] + h]) - phi.value(&[y[0], y[1] - h])) / (2.0 * h);
        assert!((g[0] - dq).abs() < 1e-8 && (g[1] - dp).abs() < 1e-8);
    }

    #[test]
    fn product_rule() {
        let a = ClosedForm::affine(vec![1.0, 2.0], 0.5);
        let b = TestFunction::new(vec![0.0, 0.0], 2.0).closed_form();
        let p = a.mul(&b);
        let x = [0.3, -0.4];
        let mut g = [0.0; 2];
        assert!(p.gradient_into(&x, &mut g));
        let h = 1e-6;
        let d0 = (p.eval(&[x[0] + h, x[1]]) - p.eval(&[x[0] - h, x[1]])) / (2.0 * h);
        assert!((g[0] - d0).abs() < 1e-8);
    }

    #[test]
    fn combination_drops_gradient_when_a_term_lacks_one() {
        let a = ClosedForm::constant(1.0);
        let b = ClosedForm::new(|x| x[0]);
        assert!(!a.add(&b).has_gradient());
        assert!(a.add(&a).has_gradient());
        assert_eq!(ClosedForm::linear_combination(&[(2.0, a.clone()), (-3.0, b)]).eval(&[1.0]), -1.0);
    }
}
