//! Shared numerical kernels: adaptive Gauss-Kronrod quadrature, a Brent
//! root finder, and the standard normal quantile function.

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (positive half, descending), QUADPACK values.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.000_000_000_000_000_000_000_000_000_000_00,
];

// Weights of the 15-point Kronrod rule, matching XGK.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

// Weights of the embedded 7-point Gauss rule (nodes XGK[1], XGK[3], ...).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_97,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// QUADPACK error rescaling: sharpen the raw |K15 - G7| difference using the
/// integral of |f - mean| so that the estimate stays conservative on rough
/// integrands.
fn rescale_error(err: f64, result_abs: f64, result_asc: f64) -> f64 {
    let mut err = err.abs();
    if result_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / result_asc).powf(1.5);
        err = if scale < 1.0 { result_asc * scale } else { result_asc };
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * result_abs;
        if min_err > err {
            err = min_err;
        }
    }
    err
}

/// One G7/K15 evaluation on [a, b]: returns (estimate, error estimate).
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut result_gauss = f_center * WG[3];
    let mut result_kronrod = f_center * WGK[7];
    let mut result_abs = f_center.abs() * WGK[7];

    let mut fv1 = [0.0_f64; 8];
    let mut fv2 = [0.0_f64; 8];
    fv1[7] = f_center;
    fv2[7] = f_center;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let sum = f1 + f2;
        result_kronrod += WGK[j] * sum;
        result_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * sum;
        }
    }

    let mean = result_kronrod * 0.5;
    let mut result_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        result_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = rescale_error((result_kronrod - result_gauss) * half, result_abs * half, result_asc * half);
    (result_kronrod * half, err)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

/// Globally adaptive G7/K15 integration over the panels defined by
/// `breakpoints` (sorted edges; at least two). The panel with the largest
/// error estimate is bisected until the summed estimate drops below
/// `abs_tol` or `max_panels` is reached.
///
/// Integrands with an integrable endpoint singularity are handled by seeding
/// `breakpoints` with a geometric cascade toward the singular endpoint; the
/// Kronrod nodes never touch panel edges, so the integrand is only ever
/// evaluated in the open interior.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    abs_tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "breakpoints must be at least two strictly increasing values".into(),
        ));
    }

    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    }

    let mut panels: Vec<Panel> = breakpoints
        .windows(2)
        .map(|w| {
            let (value, error) = qk15(&f, w[0], w[1]);
            Panel { a: w[0], b: w[1], value, error }
        })
        .collect();

    loop {
        let total_error: f64 = panels.iter().map(|p| p.error).sum();
        if total_error <= abs_tol {
            let value = panels.iter().map(|p| p.value).sum();
            return Ok(Quadrature { value, error_estimate: total_error, panels: panels.len() });
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {total_error:.3e} above target {abs_tol:.3e} after {} panels",
                panels.len()
            )));
        }

        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("non-empty panel list");
        let Panel { a, b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        if !(a < mid && mid < b) {
            // Panel too narrow to split; its estimate is as good as it gets.
            // Freeze it by zeroing the error so the loop can make progress.
            panels[worst].error = 0.0;
            continue;
        }
        let (v1, e1) = qk15(&f, a, mid);
        let (v2, e2) = qk15(&f, mid, b);
        panels[worst] = Panel { a, b: mid, value: v1, error: e1 };
        panels.push(Panel { a: mid, b, value: v2, error: e2 });
    }
}

/// Panel edges for (lo, 1] with a geometric cascade toward 0, for integrands
/// with an integrable singularity at the origin. Edges are 1, 1/2, 1/4, ...
/// down to 2^-levels.
pub fn dyadic_breakpoints(levels: u32) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=levels).map(|j| 0.5_f64.powi(j as i32)).collect();
    edges.reverse();
    edges
}

/// Brent's method on a bracketing interval [a, b] with f(a) and f(b) of
/// opposite sign. Converges to relative tolerance `rel_tol` in the root
/// location.
pub fn brent_root<F: Fn(f64) -> f64>(
    f: F,
    a0: f64,
    b0: f64,
    fa0: f64,
    fb0: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b, mut fa, mut fb) = (a0, b0, fa0, fb0);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::ConvergenceFailure(format!(
            "root not bracketed on [{a0:e}, {b0:e}]"
        )));
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = b - a;

    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * rel_tol * b.abs().max(f64::MIN_POSITIVE);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation / secant step.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }

        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
        if fb == 0.0 {
            return Ok(b);
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "Brent iteration limit reached near {b:e}"
    )))
}

/// Horner evaluation; coefficients ordered from the constant term up.
fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Standard normal quantile, Wichura's algorithm AS 241 (PPND16), accurate
/// to about 1e-15 over (0, 1).
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!(
            "normal quantile requires p in (0,1), got {p}"
        )));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = horner(
            r,
            &[
                3.387_132_872_796_366_5,
                1.331_416_678_917_843_8e2,
                1.971_590_950_306_551_3e3,
                1.373_169_376_550_946e4,
                4.592_195_393_154_987e4,
                6.726_577_092_700_87e4,
                3.343_057_558_358_813e4,
                2.509_080_928_730_122_7e3,
            ],
        );
        let den = horner(
            r,
            &[
                1.0,
                4.231_333_070_160_091e1,
                6.871_870_074_920_579e2,
                5.394_196_021_424_751e3,
                2.121_379_430_158_659_7e4,
                3.930_789_580_009_271e4,
                2.872_908_573_572_194_3e4,
                5.226_495_278_852_545_5e3,
            ],
        );
        return Ok(q * num / den);
    }

    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        let num = horner(
            r,
            &[
                1.423_437_110_749_683_5,
                4.630_337_846_156_546,
                5.769_497_221_460_691,
                3.647_848_324_763_204_5,
                1.270_458_252_452_368_4,
                2.417_807_251_774_506e-1,
                2.272_384_498_926_918_4e-2,
                7.745_450_142_783_414e-4,
            ],
        );
        let den = horner(
            r,
            &[
                1.0,
                2.053_191_626_637_758_8,
                1.676_384_830_183_803_8,
                6.897_673_349_851e-1,
                1.481_039_764_274_800_8e-1,
                1.519_866_656_361_645_7e-2,
                5.475_938_084_995_345e-4,
                1.050_750_071_644_416_9e-9,
            ],
        );
        num / den
    } else {
        let r = r - 5.0;
        let num = horner(
            r,
            &[
                6.657_904_643_501_103,
                5.463_784_911_164_114,
                1.784_826_539_917_291_3,
                2.965_605_718_285_048_9e-1,
                2.653_218_952_657_612_4e-2,
                1.242_660_947_388_078_4e-3,
                2.711_555_568_743_487_6e-5,
                2.010_334_399_292_288_1e-7,
            ],
        );
        let den = horner(
            r,
            &[
                1.0,
                5.998_322_065_558_88e-1,
                1.369_298_809_227_358e-1,
                1.487_536_129_085_061_5e-2,
                7.868_691_311_456_133e-4,
                1.846_318_317_510_054_8e-5,
                1.421_511_758_316_446e-7,
                2.044_263_103_389_939_7e-15,
            ],
        );
        num / den
    };
    Ok(if q < 0.0 { -x } else { x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_smooth_polynomial() {
        // int_0^1 x^3 dx = 1/4; a single K15 panel is exact for cubics.
        let q = integrate_adaptive(|x| x * x * x, &[0.0, 1.0], 1e-12, 100).unwrap();
        assert!((q.value - 0.25).abs() < 1e-14, "got {}", q.value);
    }

    #[test]
    fn quadrature_log_singularity() {
        // int_0^1 ln(x) dx = -1 with a log singularity at 0.
        let edges = dyadic_breakpoints(60);
        let q = integrate_adaptive(|x| x.ln(), &edges, 1e-12, 4000).unwrap();
        assert!((q.value + 1.0).abs() < 1e-11, "got {}", q.value);
    }

    #[test]
    fn quadrature_algebraic_singularity() {
        // int_0^1 x^(-0.8) dx = 5, the slowest-decaying case the bias
        // integrals can produce for gamma0 > -1/2.
        let edges = dyadic_breakpoints(300);
        let q = integrate_adaptive(|x| x.powf(-0.8), &edges, 1e-10, 20_000).unwrap();
        assert!((q.value - 5.0).abs() < 5e-10, "got {}", q.value);
    }

    #[test]
    fn quadrature_log_squared() {
        // int_0^1 ln^2(x) dx = 2 and int_0^1 ln^3(x) dx = -6.
        let edges = dyadic_breakpoints(60);
        let q2 = integrate_adaptive(|x| x.ln().powi(2), &edges, 1e-11, 4000).unwrap();
        let q3 = integrate_adaptive(|x| x.ln().powi(3), &edges, 1e-11, 4000).unwrap();
        assert!((q2.value - 2.0).abs() < 1e-10);
        assert!((q3.value + 6.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_rejects_bad_breakpoints() {
        assert!(integrate_adaptive(|x| x, &[1.0], 1e-8, 10).is_err());
        assert!(integrate_adaptive(|x| x, &[1.0, 0.5], 1e-8, 10).is_err());
    }

    #[test]
    fn brent_finds_simple_root() {
        let f = |x: f64| x * x - 2.0;
        let root = brent_root(f, 1.0, 2.0, f(1.0), f(2.0), 1e-14, 200).unwrap();
        assert!((root - std::f64::consts::SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn brent_requires_bracket() {
        let f = |x: f64| x * x + 1.0;
        assert!(brent_root(f, 0.0, 1.0, f(0.0), f(1.0), 1e-12, 100).is_err());
    }

    #[test]
    fn brent_handles_steep_root() {
        let f = |x: f64| x.exp() - 1e6;
        let root = brent_root(f, 0.0, 20.0, f(0.0), f(20.0), 1e-14, 200).unwrap();
        assert!((root - 1e6_f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn normal_quantile_reference_values() {
        // Phi^-1 at standard reference points.
        assert_eq!(inverse_normal_cdf(0.5).unwrap(), 0.0);
        assert!((inverse_normal_cdf(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.841_344_746_068_542_9).unwrap() - 1.0).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.977_249_868_051_820_8).unwrap() - 2.0).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.05).unwrap() + 1.644_853_626_951_472_7).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_symmetry_and_domain() {
        for p in [1e-6, 0.2, 0.4999, 0.77] {
            let lo = inverse_normal_cdf(p).unwrap();
            let hi = inverse_normal_cdf(1.0 - p).unwrap();
            assert!((lo + hi).abs() < 1e-9, "p={p}: {lo} vs {hi}");
        }
        // Far tail, where 1-p is no longer exactly representable; check the
        // branch against reference values instead of symmetry.
        assert!((inverse_normal_cdf(1e-12).unwrap() + 7.034_483_825_301_131).abs() < 1e-9);
        assert!((inverse_normal_cdf(1e-6).unwrap() + 4.753_424_308_822_899).abs() < 1e-9);
        assert!(inverse_normal_cdf(0.0).is_err());
        assert!(inverse_normal_cdf(1.0).is_err());
    }
}
