//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite and
//! semi-infinite intervals, plus nested integrators over the ordered cones
//! `0 <= y <= z` and `0 <= x <= y <= z`.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Self {
        assert!(rel_tol > 0.0 && abs_tol > 0.0, "tolerances must be positive");
        assert!(max_subdivisions >= 1, "need at least one subdivision");
        Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        }
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// One 15-point Kronrod estimate with the QUADPACK error heuristic.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let width = half.abs();
    let value = kronrod * half;
    let res_abs = abs_sum * width;
    let res_asc = asc * width;
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> IntegrationResult {
    if a == b {
        return IntegrationResult {
            value: 0.0,
            error_estimate: 0.0,
            converged: true,
        };
    }
    let mut segments = vec![gk15(f, a, b)];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return IntegrationResult {
                value: f64::NAN,
                error_estimate: f64::INFINITY,
                converged: false,
            };
        }
        if error <= spec.tolerance(value) {
            return IntegrationResult {
                value,
                error_estimate: error,
                converged: true,
            };
        }
        if segments.len() >= spec.max_subdivisions {
            return IntegrationResult {
                value,
                error_estimate: error,
                converged: false,
            };
        }
        let worst = segments
            .iter()
            .enumerate()
            .fold(0, |best, (i, s)| if s.error > segments[best].error { i } else { best });
        let Segment { a: lo, b: hi, .. } = segments[worst];
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            // interval exhausted at machine precision
            return IntegrationResult {
                value,
                error_estimate: error,
                converged: false,
            };
        }
        segments[worst] = gk15(f, lo, mid);
        segments.push(gk15(f, mid, hi));
    }
}

/// Integrates `f` over `[lower, upper]`; `upper` may be `f64::INFINITY`.
///
/// Semi-infinite ranges are mapped to `(0, 1)` through `x = lower + u/(1-u)`.
/// Non-convergence is reported through `converged`, never silently.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, lower: f64, upper: f64, spec: &QuadratureSpec) -> IntegrationResult {
    assert!(lower.is_finite(), "lower limit must be finite");
    if upper == f64::INFINITY {
        let mapped = |u: f64| {
            let w = 1.0 - u;
            let x = lower + u / w;
            if !x.is_finite() {
                return 0.0;
            }
            f(x) / (w * w)
        };
        adaptive(&mapped, 0.0, 1.0, spec)
    } else {
        adaptive(&f, lower, upper, spec)
    }
}

/// Integrates over `0 <= y <= z < ∞`: outer `y ∈ [0, ∞)`, inner `z ∈ [y, ∞)`.
pub fn integrate_ordered_2d<F: Fn(f64, f64) -> f64>(f: F, spec: &QuadratureSpec) -> IntegrationResult {
    let inner_ok = Cell::new(true);
    let inner_err = Cell::new(0.0f64);
    let outer = integrate_1d(
        |y| {
            let r = integrate_1d(|z| f(y, z), y, f64::INFINITY, spec);
            note_inner(&inner_ok, &inner_err, &r);
            r.value
        },
        0.0,
        f64::INFINITY,
        spec,
    );
    combine(outer, &inner_ok, &inner_err)
}

/// Integrates over `0 <= x <= y <= z < ∞`: outer `y ∈ [0, ∞)`, middle
/// `z ∈ [y, ∞)`, inner `x ∈ [0, y]`.
pub fn integrate_ordered_3d<F: Fn(f64, f64, f64) -> f64>(f: F, spec: &QuadratureSpec) -> IntegrationResult {
    let inner_ok = Cell::new(true);
    let inner_err = Cell::new(0.0f64);
    let outer = integrate_ordered_2d(
        |y, z| {
            let r = integrate_1d(|x| f(x, y, z), 0.0, y, spec);
            note_inner(&inner_ok, &inner_err, &r);
            r.value
        },
        spec,
    );
    combine(outer, &inner_ok, &inner_err)
}

fn note_inner(ok: &Cell<bool>, err: &Cell<f64>, r: &IntegrationResult) {
    if !r.converged {
        ok.set(false);
    }
    err.set(err.get().max(r.error_estimate));
}

/// Folds inner-integral diagnostics into the outer result. The error estimate
/// adds the largest inner error seen, which is a heuristic, not a bound.
fn combine(outer: IntegrationResult, ok: &Cell<bool>, err: &Cell<f64>) -> IntegrationResult {
    IntegrationResult {
        value: outer.value,
        error_estimate: outer.error_estimate + err.get(),
        converged: outer.converged && ok.get(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn exponential_on_half_line() {
        let r = integrate_1d(|x| (-x).exp(), 0.0, f64::INFINITY, &spec());
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_on_unit_interval() {
        let r = integrate_1d(|x| 2.0 * x, 0.0, 1.0, &spec());
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rayleigh_density_normalizes() {
        let lambda = 50.0;
        let r = integrate_1d(
            |x| 2.0 * PI * lambda * x * (-PI * lambda * x * x).exp(),
            0.0,
            f64::INFINITY,
            &spec(),
        );
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn error_bound_holds_when_converged() {
        // ∫_0^1 sqrt(x) = 2/3 has an endpoint singularity in the derivative
        let s = spec();
        let r = integrate_1d(f64::sqrt, 0.0, 1.0, &s);
        assert!(r.converged);
        assert!((r.value - 2.0 / 3.0).abs() <= s.tolerance(r.value));
    }

    #[test]
    fn non_convergence_is_reported() {
        let tight = QuadratureSpec::new(1e-14, 1e-300, 2);
        let r = integrate_1d(|x| (1.0 / x).sin(), 1e-3, 1.0, &tight);
        assert!(!r.converged);
        let nan = integrate_1d(|_| f64::NAN, 0.0, 1.0, &spec());
        assert!(!nan.converged);
    }

    #[test]
    fn zero_integrand_on_cone() {
        let r = integrate_ordered_3d(|_, _, _| 0.0, &spec());
        assert!(r.converged);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn gaussian_cone_volumes() {
        // ∫∫_{0<=y<=z} e^{-z} dz dy = ∫ z e^{-z} dz = 1
        let r2 = integrate_ordered_2d(|_, z| (-z).exp(), &spec());
        assert!(r2.converged);
        assert!((r2.value - 1.0).abs() < 1e-8);
        // ∫_{0<=x<=y<=z} e^{-z} = ∫ z²/2 e^{-z} dz = 1
        let r3 = integrate_ordered_3d(|_, _, z| (-z).exp(), &spec());
        assert!(r3.converged);
        assert!((r3.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic() {
        let f = |x: f64| (x * x).cos() / (1.0 + x);
        let a = integrate_1d(f, 0.0, 7.0, &spec());
        let b = integrate_1d(f, 0.0, 7.0, &spec());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
    }
}
