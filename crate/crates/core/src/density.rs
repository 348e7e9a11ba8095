//! Continuous densities on I² = [-1/2, 1/2]² with certified range and
//! closed-form integration over rectangles.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LatticePoint, Rect};
use crate::rational::{big, 
    big_to_f64, fmt_big, serde_big_rational, serde_big_rational_vec, to_big, to_f64, Rational,
};

/// Margin added to the certified error bound before a floor is trusted.
pub const FLOOR_MARGIN: f64 = 1e-9;

/// Absolute error per unit amplitude of the f64 evaluation of the
/// oscillating term. Arguments are reduced modulo one period exactly before
/// `cos` is taken, so each cosine is off by a few ulps at most.
const TRIG_TERM_ERROR: f64 = 1e-14;

/// A density `ρ : I² → R`.
///
/// JSON form: `{"variant":"trig","k":1,"a":"1/9"}`,
/// `{"variant":"constant","c":"1"}`, `{"variant":"grid","m":4,"values":[...]}`,
/// `{"variant":"bilinear","corners":[...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum DensitySpec {
    #[serde(rename = "constant")]
    Constant {
        #[serde(with = "serde_big_rational")]
        c: BigRational,
    },
    /// Bilinear interpolation of the corner values, ordered
    /// `[(-½,-½), (½,-½), (-½,½), (½,½)]`.
    #[serde(rename = "bilinear")]
    Bilinear {
        #[serde(with = "serde_big_rational_vec")]
        corners: Vec<BigRational>,
    },
    /// `ρ(x,y) = 1 − (a/2)(1 + sin(2πkx)·sin(2πky))`.
    #[serde(rename = "trig")]
    TrigOscillation {
        k: u32,
        #[serde(with = "serde_big_rational")]
        a: BigRational,
    },
    /// Values at the `m×m` nodes `(-½ + i/(m-1), -½ + j/(m-1))`, stored
    /// row by row (`values[j*m + i]`), bilinearly interpolated.
    #[serde(rename = "grid")]
    SampledGrid {
        m: usize,
        #[serde(with = "serde_big_rational_vec")]
        values: Vec<BigRational>,
    },
}

/// Certified value of `∫_R ρ dλ`.
///
/// The integral equals `rational + residual`, where the rational part is
/// exact and the residual carries the transcendental contribution with
/// absolute error at most `error_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_bound: f64,
    /// Closed form was used (no quadrature).
    pub exact: bool,
    pub rational: BigRational,
    pub residual: f64,
}

impl IntegralResult {
    fn from_rational(r: BigRational) -> Self {
        Self {
            value: big_to_f64(&r),
            error_bound: 0.0,
            exact: true,
            rational: r,
            residual: 0.0,
        }
    }

    /// True when the integral is known exactly as a rational number.
    pub fn is_rational(&self) -> bool {
        self.residual == 0.0 && self.error_bound == 0.0
    }

    pub fn scaled(&self, factor: &BigRational) -> Self {
        let f = big_to_f64(factor).abs();
        let rational = &self.rational * factor;
        let residual = self.residual * big_to_f64(factor);
        Self {
            value: big_to_f64(&rational) + residual,
            error_bound: self.error_bound * f,
            exact: self.exact,
            rational,
            residual,
        }
    }

    /// Integer part, refusing to guess when the value is too close to an
    /// integer for the certified error.
    pub fn floor(&self) -> Result<i64> {
        let whole = self.rational.floor();
        let base = whole.to_integer();
        if self.is_rational() {
            return base
                .to_i64()
                .ok_or_else(|| Error::Domain("integral too large".into()));
        }
        let frac = big_to_f64(&(&self.rational - &whole)) + self.residual;
        let margin = self.error_bound + FLOOR_MARGIN;
        let nearest = frac.round();
        if (frac - nearest).abs() <= margin {
            return Err(Error::AmbiguousFloor {
                value: self.value,
                margin,
            });
        }
        let base = base
            .to_i64()
            .ok_or_else(|| Error::Domain("integral too large".into()))?;
        Ok(base + frac.floor() as i64)
    }
}

/// Certified extrema of a density over I².
#[derive(Clone, Debug, PartialEq)]
pub struct RangeCertificate {
    pub min: BigRational,
    pub max: BigRational,
    /// `min < max`, the standing hypothesis of the construction.
    pub strict: bool,
    pub warnings: Vec<String>,
}

fn half() -> BigRational {
    big(1, 2)
}

fn in_unit(v: &Rational) -> bool {
    let h = Rational::new(1, 2);
    -h <= *v && *v <= h
}

/// `(∫(1-u) dx, ∫u dx)` over `[a, b]` with `u = (x - origin)/h`.
fn linear_moments(
    a: &BigRational,
    b: &BigRational,
    origin: &BigRational,
    h: &BigRational,
) -> (BigRational, BigRational) {
    let (pa, pb) = (a - origin, b - origin);
    let up = (&pb * &pb - &pa * &pa) / (BigRational::from_integer(2.into()) * h);
    (b - a - &up, up)
}

fn bilinear_integral(
    corners: [&BigRational; 4],
    x: (&BigRational, &BigRational),
    y: (&BigRational, &BigRational),
    origin: (&BigRational, &BigRational),
    h: &BigRational,
) -> BigRational {
    let (ax0, ax1) = linear_moments(x.0, x.1, origin.0, h);
    let (ay0, ay1) = linear_moments(y.0, y.1, origin.1, h);
    corners[0] * &ax0 * &ay0
        + corners[1] * &ax1 * &ay0
        + corners[2] * &ax0 * &ay1
        + corners[3] * &ax1 * &ay1
}

/// `cos(2π t)` for rational `t`, argument reduced exactly to `[0, 1)`.
fn cos_turns(t: &BigRational) -> f64 {
    let frac = t - t.floor();
    (2.0 * std::f64::consts::PI * big_to_f64(&frac)).cos()
}

fn is_integer(r: &BigRational) -> bool {
    r.denom().is_one()
}

/// `∫_{x0}^{x1} sin(2πkx) dx`, or `None` when it vanishes exactly
/// (cosines agree at both ends: `k(x1-x0)` or `k(x1+x0)` is an integer).
fn sine_integral(k: u32, x0: &BigRational, x1: &BigRational) -> Option<f64> {
    let kk = BigRational::from_integer(BigInt::from(k));
    if is_integer(&(&kk * (x1 - x0))) || is_integer(&(&kk * (x1 + x0))) {
        return None;
    }
    let c0 = cos_turns(&(&kk * x0));
    let c1 = cos_turns(&(&kk * x1));
    Some((c0 - c1) / (2.0 * std::f64::consts::PI * k as f64))
}

impl DensitySpec {
    pub fn constant(c: BigRational) -> Self {
        DensitySpec::Constant { c }
    }

    pub fn trig(k: u32, a: BigRational) -> Self {
        DensitySpec::TrigOscillation { k, a }
    }

    fn check_shape(&self) -> Result<()> {
        match self {
            DensitySpec::Bilinear { corners } if corners.len() != 4 => Err(Error::Config(
                format!("bilinear density needs 4 corners, got {}", corners.len()),
            )),
            DensitySpec::TrigOscillation { k: 0, .. } => {
                Err(Error::Config("trig density needs k >= 1".into()))
            }
            DensitySpec::SampledGrid { m, values } if *m < 2 || values.len() != m * m => {
                Err(Error::Config(format!(
                    "grid density needs m >= 2 and m*m values (m = {m}, {} values)",
                    values.len()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Rigorous extrema; errors when the range leaves `[8/9, 1]`.
    pub fn certify_range(&self) -> Result<RangeCertificate> {
        self.check_shape()?;
        let lo = big(8, 9);
        let hi = BigRational::one();
        let (min, max, param) = match self {
            DensitySpec::Constant { c } => (c.clone(), c.clone(), "c".to_string()),
            DensitySpec::Bilinear { corners } => {
                // bilinear extrema sit at the corners
                let (imin, min) = argmin(corners);
                let (imax, max) = argmax(corners);
                let p = if min < &lo { imin } else { imax };
                (min.clone(), max.clone(), format!("corners[{p}]"))
            }
            DensitySpec::TrigOscillation { a, .. } => {
                if a.is_negative() {
                    return Err(Error::Range {
                        parameter: "a".into(),
                        detail: format!("amplitude {} is negative", fmt_big(a)),
                    });
                }
                // sin(2πkx)·sin(2πky) attains ±1 on I² for every k >= 1
                (&hi - a, hi.clone(), "a".to_string())
            }
            DensitySpec::SampledGrid { values, .. } => {
                // interpolation never leaves the node range
                let (imin, min) = argmin(values);
                let (imax, max) = argmax(values);
                let p = if min < &lo { imin } else { imax };
                (min.clone(), max.clone(), format!("values[{p}]"))
            }
        };
        if min < lo || max > hi {
            return Err(Error::Range {
                parameter: param,
                detail: format!(
                    "range [{}, {}] is not inside [8/9, 1]",
                    fmt_big(&min),
                    fmt_big(&max)
                ),
            });
        }
        let strict = min < max;
        let mut warnings = Vec::new();
        if !strict {
            warnings.push(format!(
                "density is constant ({}); min < max does not hold",
                fmt_big(&min)
            ));
        }
        Ok(RangeCertificate {
            min,
            max,
            strict,
            warnings,
        })
    }

    /// Point evaluation.
    pub fn eval(&self, p: (Rational, Rational)) -> Result<f64> {
        self.check_shape()?;
        if !in_unit(&p.0) || !in_unit(&p.1) {
            return Err(Error::Domain(format!(
                "point ({}, {}) is outside I²",
                p.0, p.1
            )));
        }
        let (x, y) = (to_f64(&p.0), to_f64(&p.1));
        Ok(match self {
            DensitySpec::Constant { c } => big_to_f64(c),
            DensitySpec::Bilinear { corners } => {
                let (u, v) = (x + 0.5, y + 0.5);
                let c: Vec<f64> = corners.iter().map(big_to_f64).collect();
                c[0] * (1.0 - u) * (1.0 - v) + c[1] * u * (1.0 - v) + c[2] * (1.0 - u) * v + c[3] * u * v
            }
            DensitySpec::TrigOscillation { k, a } => {
                let a = big_to_f64(a);
                let tp = 2.0 * std::f64::consts::PI * *k as f64;
                1.0 - 0.5 * a * (1.0 + (tp * x).sin() * (tp * y).sin())
            }
            DensitySpec::SampledGrid { m, values } => {
                let h = 1.0 / (*m as f64 - 1.0);
                let fx = ((x + 0.5) / h).min(*m as f64 - 1.0);
                let fy = ((y + 0.5) / h).min(*m as f64 - 1.0);
                let i = (fx.floor() as usize).min(m - 2);
                let j = (fy.floor() as usize).min(m - 2);
                let (u, v) = (fx - i as f64, fy - j as f64);
                let at = |i: usize, j: usize| big_to_f64(&values[j * m + i]);
                at(i, j) * (1.0 - u) * (1.0 - v)
                    + at(i + 1, j) * u * (1.0 - v)
                    + at(i, j + 1) * (1.0 - u) * v
                    + at(i + 1, j + 1) * u * v
            }
        })
    }

    /// `∫_rect ρ dλ` in I² coordinates, closed form for every variant.
    pub fn integrate(&self, rect: &Rect) -> Result<IntegralResult> {
        self.check_shape()?;
        if !rect.within(&Rect::unit_square()) {
            return Err(Error::Domain(format!(
                "rectangle [{}, {}]×[{}, {}] is not inside I²",
                rect.x0, rect.x1, rect.y0, rect.y1
            )));
        }
        let (x0, x1, y0, y1) = (
            to_big(&rect.x0),
            to_big(&rect.x1),
            to_big(&rect.y0),
            to_big(&rect.y1),
        );
        let area = (&x1 - &x0) * (&y1 - &y0);
        Ok(match self {
            DensitySpec::Constant { c } => IntegralResult::from_rational(c * area),
            DensitySpec::Bilinear { corners } => {
                let o = -half();
                let r = bilinear_integral(
                    [&corners[0], &corners[1], &corners[2], &corners[3]],
                    (&x0, &x1),
                    (&y0, &y1),
                    (&o, &o),
                    &BigRational::one(),
                );
                IntegralResult::from_rational(r)
            }
            DensitySpec::TrigOscillation { k, a } => {
                let rational = (BigRational::one() - a * half()) * &area;
                let term = if a.is_zero() {
                    None
                } else {
                    sine_integral(*k, &x0, &x1)
                        .zip(sine_integral(*k, &y0, &y1))
                        .map(|(ix, iy)| -0.5 * big_to_f64(a) * ix * iy)
                };
                match term {
                    None => IntegralResult::from_rational(rational),
                    Some(residual) => IntegralResult {
                        value: big_to_f64(&rational) + residual,
                        error_bound: TRIG_TERM_ERROR * big_to_f64(a),
                        exact: true,
                        rational,
                        residual,
                    },
                }
            }
            DensitySpec::SampledGrid { m, values } => {
                let n = (*m - 1) as i64;
                let h = big(1, n);
                let node = |i: i64| big(2 * i - n, 2 * n);
                let cells = |lo: &BigRational, hi: &BigRational| -> (i64, i64) {
                    let a = ((lo + half()) * BigRational::from_integer(n.into()))
                        .floor()
                        .to_integer()
                        .to_i64()
                        .unwrap_or(0)
                        .clamp(0, n - 1);
                    let b = ((hi + half()) * BigRational::from_integer(n.into()))
                        .ceil()
                        .to_integer()
                        .to_i64()
                        .unwrap_or(n)
                        .clamp(a + 1, n);
                    (a, b)
                };
                let (ia, ib) = cells(&x0, &x1);
                let (ja, jb) = cells(&y0, &y1);
                let mut total = BigRational::zero();
                for i in ia..ib {
                    let (cx0, cx1) = (node(i), node(i + 1));
                    let sx0 = if x0 > cx0 { x0.clone() } else { cx0.clone() };
                    let sx1 = if x1 < cx1 { x1.clone() } else { cx1 };
                    if sx0 >= sx1 {
                        continue;
                    }
                    for j in ja..jb {
                        let (cy0, cy1) = (node(j), node(j + 1));
                        let sy0 = if y0 > cy0 { y0.clone() } else { cy0.clone() };
                        let sy1 = if y1 < cy1 { y1.clone() } else { cy1 };
                        if sy0 >= sy1 {
                            continue;
                        }
                        let (iu, ju) = (i as usize, j as usize);
                        let v = |a: usize, b: usize| &values[b * m + a];
                        total += bilinear_integral(
                            [v(iu, ju), v(iu + 1, ju), v(iu, ju + 1), v(iu + 1, ju + 1)],
                            (&sx0, &sx1),
                            (&sy0, &sy1),
                            (&cx0, &cy0),
                            &h,
                        );
                    }
                }
                IntegralResult::from_rational(total)
            }
        })
    }
}

fn argmin(v: &[BigRational]) -> (usize, &BigRational) {
    v.iter()
        .enumerate()
        .fold((0, &v[0]), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc })
}

fn argmax(v: &[BigRational]) -> (usize, &BigRational) {
    v.iter()
        .enumerate()
        .fold((0, &v[0]), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc })
}

/// The affine map φ sending the square `anchor + [0, side]²` onto I².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Homothety {
    pub anchor: LatticePoint,
    pub side: i64,
}

impl Homothety {
    pub fn new(anchor: LatticePoint, side: i64) -> Self {
        assert!(side > 0, "side must be positive");
        Self { anchor, side }
    }

    pub fn to_unit(&self, x: Rational, y: Rational) -> (Rational, Rational) {
        let h = Rational::new(1, 2);
        let s = Rational::from_integer(self.side);
        (
            (x - self.anchor.x) / s - h,
            (y - self.anchor.y) / s - h,
        )
    }

    pub fn rect_to_unit(&self, r: &Rect) -> Rect {
        let (x0, y0) = self.to_unit(r.x0, r.y0);
        let (x1, y1) = self.to_unit(r.x1, r.y1);
        Rect {
            x0,
            x1,
            y0,
            y1,
            half_open: r.half_open,
        }
    }
}

/// `⌊∫_cell ρ∘φ dλ⌋` with the integral taken in the square's own
/// coordinates, i.e. `side² · ∫_{φ(cell)} ρ`.
pub fn cell_quota(rho: &DensitySpec, phi: &Homothety, cell: &Rect) -> Result<i64> {
    let unit = phi.rect_to_unit(cell);
    let scale = BigRational::from_integer(BigInt::from(phi.side) * BigInt::from(phi.side));
    rho.integrate(&unit)?.scaled(&scale).floor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn b(n: i64, d: i64) -> BigRational {
        big(n, d)
    }

    fn trig19() -> DensitySpec {
        DensitySpec::trig(1, b(1, 9))
    }

    fn origin_cell(side: i64) -> Rect {
        Rect::half_open(int(0), int(side), int(0), int(side))
    }

    #[test]
    fn eval_examples() {
        let one = DensitySpec::constant(b(1, 1));
        assert_eq!(one.eval((rat(1, 3), rat(-1, 2))).unwrap(), 1.0);
        let v = trig19().eval((int(0), int(0))).unwrap();
        assert!((v - 17.0 / 18.0).abs() < 1e-15);
        let bl = DensitySpec::Bilinear {
            corners: vec![b(8, 9), b(8, 9), b(1, 1), b(1, 1)],
        };
        let h = rat(1, 2);
        assert!((bl.eval((-h, -h)).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert!((bl.eval((h, h)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_points_outside_unit_square() {
        assert!(matches!(
            trig19().eval((int(1), int(0))),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn constant_integral_is_exact() {
        let c = DensitySpec::constant(b(17, 18));
        let r = Rect::closed(rat(-1, 4), rat(1, 4), rat(-1, 2), rat(0, 1));
        let i = c.integrate(&r).unwrap();
        assert!(i.is_rational());
        assert_eq!(i.rational, b(17, 72));
    }

    #[test]
    fn trig_over_unit_square_is_rational() {
        for k in 1..4 {
            let i = DensitySpec::trig(k, b(1, 9)).integrate(&Rect::unit_square()).unwrap();
            assert!(i.is_rational());
            assert_eq!(i.rational, b(17, 18));
        }
    }

    #[test]
    fn integrate_rejects_rect_outside() {
        let r = Rect::closed(int(0), int(1), int(0), rat(1, 2));
        assert!(matches!(trig19().integrate(&r), Err(Error::Domain(_))));
    }

    #[test]
    fn quota_examples() {
        let phi = Homothety::new(LatticePoint::new(0, 0), 32);
        let one = DensitySpec::constant(b(1, 1));
        assert_eq!(cell_quota(&one, &phi, &origin_cell(16)).unwrap(), 256);
        let c = DensitySpec::constant(b(17, 18));
        assert_eq!(cell_quota(&c, &phi, &origin_cell(16)).unwrap(), 241);
    }

    #[test]
    fn trig_quota_matches_hand_formula() {
        // lower-left cell of an (l=32, m=2) square maps to [-1/2,0]²,
        // where ∫ sin(2πx) dx = -1/π on each axis.
        let phi = Homothety::new(LatticePoint::new(0, 0), 32);
        let expected = 1024.0 * ((17.0 / 18.0) * 0.25 - (1.0 / 18.0) / std::f64::consts::PI.powi(2));
        let q = cell_quota(&trig19(), &phi, &origin_cell(16)).unwrap();
        assert_eq!(q, expected.floor() as i64);
        assert_eq!(q, 236);
    }

    #[test]
    fn certify_examples() {
        let t = trig19().certify_range().unwrap();
        assert_eq!((t.min.clone(), t.max.clone(), t.strict), (b(8, 9), b(1, 1), true));
        let c = DensitySpec::constant(b(1, 1)).certify_range().unwrap();
        assert!(!c.strict);
        assert_eq!(c.warnings.len(), 1);
        let bl = DensitySpec::Bilinear {
            corners: vec![b(8, 9), b(1, 1), b(1, 1), b(1, 1)],
        }
        .certify_range()
        .unwrap();
        assert_eq!((bl.min, bl.max, bl.strict), (b(8, 9), b(1, 1), true));
    }

    #[test]
    fn certify_names_violating_parameter() {
        match DensitySpec::trig(1, b(1, 5)).certify_range() {
            Err(Error::Range { parameter, .. }) => assert_eq!(parameter, "a"),
            other => panic!("unexpected {other:?}"),
        }
        let g = DensitySpec::SampledGrid {
            m: 2,
            values: vec![b(1, 1), b(1, 2), b(1, 1), b(1, 1)],
        };
        match g.certify_range() {
            Err(Error::Range { parameter, .. }) => assert_eq!(parameter, "values[1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ambiguous_floor_is_refused() {
        let r = IntegralResult {
            value: 3.0 + 1e-12,
            error_bound: 1e-13,
            exact: true,
            rational: b(3, 1),
            residual: 1e-12,
        };
        assert!(matches!(r.floor(), Err(Error::AmbiguousFloor { .. })));
    }

    #[test]
    fn json_round_trip() {
        let s = r#"{"variant":"trig","k":1,"a":"1/9"}"#;
        let d: DensitySpec = serde_json::from_str(s).unwrap();
        assert_eq!(d, trig19());
        let c: DensitySpec = serde_json::from_str(r#"{"variant":"constant","c":"1"}"#).unwrap();
        assert_eq!(c, DensitySpec::constant(b(1, 1)));
        let back: DensitySpec = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }
}
