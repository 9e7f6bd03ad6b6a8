//! Adaptive Gauss–Kronrod integration against the standard normal density.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Integration runs over `[-tail_cut, tail_cut]` standard deviations.
    pub tail_cut: f64,
    /// Upper bound on the number of panels.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            tail_cut: 12.0,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.tail_cut > 0.0
            && self.tail_cut.is_finite()
            && self.max_subdivisions > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid quadrature configuration {self:?}")))
        }
    }
}

/// An integral estimate with its accumulated error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
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
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_9;

#[inline]
pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Maps `v` in `[0, 1]` onto a subinterval, clustering nodes at endpoints
/// that are kinks so that inverse square-root singularities there become
/// bounded.
#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    left_kink: bool,
    right_kink: bool,
}

impl Segment {
    #[inline]
    fn map(&self, v: f64) -> (f64, f64) {
        let w = self.b - self.a;
        match (self.left_kink, self.right_kink) {
            (false, false) => (self.a + w * v, w),
            (true, false) => (self.a + w * v * v, 2.0 * w * v),
            (false, true) => {
                let u = 1.0 - v;
                (self.b - w * u * u, 2.0 * w * u)
            }
            (true, true) => (self.a + w * v * v * (3.0 - 2.0 * v), 6.0 * w * v * (1.0 - v)),
        }
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

#[derive(Debug, Clone, Copy)]
struct Panel<const K: usize> {
    seg: usize,
    lo: f64,
    hi: f64,
    value: [f64; K],
    error: [f64; K],
    // largest error relative to the per-component tolerance, used for ordering
    priority: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.priority.total_cmp(&other.priority) == Ordering::Equal
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn kronrod<F, const K: usize>(f: &F, seg: &Segment, lo: f64, hi: f64) -> ([f64; K], [f64; K])
where
    F: Fn(f64) -> [f64; K],
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |v: f64| -> [f64; K] {
        let (z, jac) = seg.map(v);
        let w = std_normal_pdf(z) * jac;
        let mut out = f(z);
        for o in out.iter_mut() {
            *o *= w;
        }
        out
    };

    let mut fv = [[0.0; K]; 15];
    fv[7] = eval(center);
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = eval(center - dx);
        fv[14 - j] = eval(center + dx);
    }

    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for c in 0..K {
        let mut res_k = fv[7][c] * WGK[7];
        let mut res_g = fv[7][c] * WG[3];
        let mut res_abs = res_k.abs();
        for j in 0..7 {
            let pair = fv[j][c] + fv[14 - j][c];
            res_k += WGK[j] * pair;
            res_abs += WGK[j] * (fv[j][c].abs() + fv[14 - j][c].abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * pair;
            }
        }
        let mean = 0.5 * res_k;
        let mut res_asc = WGK[7] * (fv[7][c] - mean).abs();
        for j in 0..7 {
            res_asc += WGK[j] * ((fv[j][c] - mean).abs() + (fv[14 - j][c] - mean).abs());
        }
        let h = half.abs();
        value[c] = res_k * half;
        error[c] = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    }
    (value, error)
}

/// Integrates each component of `f(z)` against the standard normal density.
///
/// The domain `[-tail_cut, tail_cut]` is split at the `kinks` (points where
/// `f` or its derivative is not smooth); panels are bisected globally until
/// every component meets `max(abs_tol, rel_tol * |value|)`.
pub fn gaussian_expectation_many<F, const K: usize>(
    f: F,
    kinks: &[f64],
    quad: &QuadratureConfig,
) -> Result<[QuadEstimate; K]>
where
    F: Fn(f64) -> [f64; K],
{
    quad.validate()?;
    let t = quad.tail_cut;
    let mut cuts: Vec<f64> = kinks.iter().copied().filter(|k| k.is_finite() && k.abs() < t).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push((-t, false));
    bounds.extend(cuts.iter().map(|&c| (c, true)));
    bounds.push((t, false));
    let segments: Vec<Segment> = bounds
        .windows(2)
        .filter(|w| w[1].0 > w[0].0)
        .map(|w| Segment {
            a: w[0].0,
            b: w[1].0,
            left_kink: w[0].1,
            right_kink: w[1].1,
        })
        .collect();

    let mut total = [0.0; K];
    let mut total_err = [0.0; K];
    let mut heap: BinaryHeap<Panel<K>> = BinaryHeap::new();
    let mut n_panels = 0usize;

    let tolerance = |total: &[f64; K]| -> [f64; K] {
        let mut tol = [0.0; K];
        for c in 0..K {
            tol[c] = quad.abs_tol.max(quad.rel_tol * total[c].abs());
        }
        tol
    };
    let priority = |err: &[f64; K], tol: &[f64; K]| -> f64 { (0..K).map(|c| err[c] / tol[c]).fold(0.0, f64::max) };

    let mut initial = Vec::with_capacity(segments.len());
    for (idx, seg) in segments.iter().enumerate() {
        let (value, error) = kronrod(&f, seg, 0.0, 1.0);
        for c in 0..K {
            total[c] += value[c];
            total_err[c] += error[c];
        }
        initial.push((idx, value, error));
        n_panels += 1;
    }
    let tol0 = tolerance(&total);
    for (seg, value, error) in initial {
        heap.push(Panel {
            seg,
            lo: 0.0,
            hi: 1.0,
            value,
            error,
            priority: priority(&error, &tol0),
        });
    }

    loop {
        let tol = tolerance(&total);
        if (0..K).all(|c| total_err[c] <= tol[c]) {
            break;
        }
        if !(0..K).all(|c| total[c].is_finite()) {
            return Err(Error::QuadratureFailure {
                estimate: total[0],
                error_bound: f64::INFINITY,
            });
        }
        if n_panels >= quad.max_subdivisions {
            let worst = (0..K)
                .max_by(|&a, &b| (total_err[a] / tol[a]).total_cmp(&(total_err[b] / tol[b])))
                .unwrap_or(0);
            return Err(Error::QuadratureFailure {
                estimate: total[worst],
                error_bound: total_err[worst],
            });
        }
        let Some(panel) = heap.pop() else { break };
        let mid = 0.5 * (panel.lo + panel.hi);
        let seg = &segments[panel.seg];
        let (v1, e1) = kronrod(&f, seg, panel.lo, mid);
        let (v2, e2) = kronrod(&f, seg, mid, panel.hi);
        for c in 0..K {
            total[c] += v1[c] + v2[c] - panel.value[c];
            total_err[c] += e1[c] + e2[c] - panel.error[c];
        }
        n_panels += 1;
        heap.push(Panel {
            seg: panel.seg,
            lo: panel.lo,
            hi: mid,
            value: v1,
            error: e1,
            priority: priority(&e1, &tol),
        });
        heap.push(Panel {
            seg: panel.seg,
            lo: mid,
            hi: panel.hi,
            value: v2,
            error: e2,
            priority: priority(&e2, &tol),
        });
    }

    // re-sum from the panels to shed accumulated rounding in the running totals
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    for p in heap.iter() {
        for c in 0..K {
            value[c] += p.value[c];
            error[c] += p.error[c];
        }
    }
    let mut out = [QuadEstimate { value: 0.0, error: 0.0 }; K];
    for c in 0..K {
        out[c] = QuadEstimate {
            value: value[c],
            error: error[c],
        };
    }
    Ok(out)
}

/// `E[f(Z)]` for a standard normal `Z`, see [`gaussian_expectation_many`].
pub fn gaussian_expectation<F>(f: F, kinks: &[f64], quad: &QuadratureConfig) -> Result<QuadEstimate>
where
    F: Fn(f64) -> f64,
{
    let [est] = gaussian_expectation_many(|z| [f(z)], kinks, quad)?;
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_and_variance() {
        let q = QuadratureConfig::default();
        let one = gaussian_expectation(|_| 1.0, &[], &q).unwrap();
        assert!((one.value - 1.0).abs() < 1e-10, "{one:?}");
        let var = gaussian_expectation(|z| z * z, &[], &q).unwrap();
        assert!((var.value - 1.0).abs() < 1e-10, "{var:?}");
        let odd = gaussian_expectation(|z| z * z * z, &[0.3], &q).unwrap();
        assert!(odd.value.abs() < 1e-10);
    }

    #[test]
    fn indicator_matches_erfc() {
        let q = QuadratureConfig::default();
        let tail = gaussian_expectation(|z| if z > 1.5 { 1.0 } else { 0.0 }, &[1.5], &q).unwrap();
        let exact = 0.5 * libm::erfc(1.5 / std::f64::consts::SQRT_2);
        assert!((exact - 0.066_807_201_268_858_1).abs() < 1e-15);
        assert!((tail.value - exact).abs() < 1e-10, "{} vs {exact}", tail.value);
        assert!(tail.error <= 1e-10_f64.max(1e-8 * exact));
    }

    #[test]
    fn integrable_singularity_at_kink() {
        // E[|Z - 0.4|^{-1/2}] with the singular point declared as a kink
        let q = QuadratureConfig::default();
        let f = |z: f64| (z - 0.4).abs().powf(-0.5);
        let with = gaussian_expectation(f, &[0.4], &q).unwrap();
        let fine = QuadratureConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_subdivisions: 2000,
            ..q
        };
        let reference = gaussian_expectation(f, &[0.4], &fine).unwrap();
        assert!((with.value - reference.value).abs() < 1e-8);
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let q = QuadratureConfig {
            max_subdivisions: 2,
            ..QuadratureConfig::default()
        };
        let r = gaussian_expectation(|z| (z - 0.123).abs().powf(-0.5), &[], &q);
        match r {
            Err(Error::QuadratureFailure { estimate, error_bound }) => {
                assert!(estimate.is_finite());
                assert!(error_bound > 0.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn kinks_outside_the_window_are_ignored() {
        let q = QuadratureConfig::default();
        let a = gaussian_expectation(|z| z.abs(), &[0.0, 50.0, -1e300, f64::NAN], &q).unwrap();
        assert!((a.value - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let q = QuadratureConfig {
            abs_tol: 0.0,
            ..QuadratureConfig::default()
        };
        assert!(gaussian_expectation(|_| 1.0, &[], &q).is_err());
    }
}
