//! The numeric kernel interface shared by the resampler, the numeric
//! staircasing path and the kernel zoo.

/// An even 1D interpolation kernel evaluated in double precision.
pub trait Kernel: Send + Sync {
    fn eval(&self, x: f64) -> f64;

    /// Radius beyond which the kernel is identically zero.
    fn support(&self) -> f64;

    /// Analytic first derivative, when one is available.
    fn derivative(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Offset of the kernel's breakpoint lattice: 0 when the pieces join at
    /// integers, 1/2 when they join at half-integers.
    fn breakpoint_offset(&self) -> f64 {
        0.0
    }

    /// `Some(p)` when the kernel is the B-spline basis of degree `p` that must
    /// be applied to prefiltered coefficients instead of raw samples.
    fn prefilter_degree(&self) -> Option<u32> {
        None
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> f64 {
        (**self).support()
    }
    fn derivative(&self, x: f64) -> Option<f64> {
        (**self).derivative(x)
    }
    fn breakpoint_offset(&self) -> f64 {
        (**self).breakpoint_offset()
    }
    fn prefilter_degree(&self) -> Option<u32> {
        (**self).prefilter_degree()
    }
}

impl<K: Kernel + ?Sized> Kernel for std::sync::Arc<K> {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> f64 {
        (**self).support()
    }
    fn derivative(&self, x: f64) -> Option<f64> {
        (**self).derivative(x)
    }
    fn breakpoint_offset(&self) -> f64 {
        (**self).breakpoint_offset()
    }
    fn prefilter_degree(&self) -> Option<u32> {
        (**self).prefilter_degree()
    }
}

impl<K: Kernel + ?Sized> Kernel for Box<K> {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> f64 {
        (**self).support()
    }
    fn derivative(&self, x: f64) -> Option<f64> {
        (**self).derivative(x)
    }
    fn breakpoint_offset(&self) -> f64 {
        (**self).breakpoint_offset()
    }
    fn prefilter_degree(&self) -> Option<u32> {
        (**self).prefilter_degree()
    }
}

/// Central difference with step `h`, used when no analytic derivative exists.
pub fn derivative_or_fd<K: Kernel + ?Sized>(k: &K, x: f64, h: f64) -> f64 {
    match k.derivative(x) {
        Some(d) => d,
        None => (k.eval(x + h) - k.eval(x - h)) / (2.0 * h),
    }
}
