//! Shared function handles.

use std::fmt;
use std::sync::Arc;

/// A shareable real function handle.
#[derive(Clone)]
pub struct Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl Func {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Func(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    pub fn constant(c: f64) -> Self {
        Func::new(move |_| c)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.clone();
        Func::new(move |x| c * f.eval(x))
    }

    pub fn sum(&self, other: &Func) -> Self {
        let (f, g) = (self.clone(), other.clone());
        Func::new(move |x| f.eval(x) + g.eval(x))
    }

    pub fn difference(&self, other: &Func) -> Self {
        let (f, g) = (self.clone(), other.clone());
        Func::new(move |x| f.eval(x) - g.eval(x))
    }

    /// Borrow as a plain closure.
    pub fn as_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |x| self.eval(x)
    }
}

impl fmt::Debug for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Func(..)")
    }
}

impl<F> From<F> for Func
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    fn from(f: F) -> Self {
        Func::new(f)
    }
}
