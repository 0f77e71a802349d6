//! End-slope cubic Bézier splines and arc-length reparametrisation.
//!
//! A trajectory through `n + 1` knots is stitched from `n` cubic Bézier
//! segments. The global parameter `u` runs over `[0, n]`; segment `i` covers
//! `[i, i + 1]`. Segments are C2 at interior knots and the end derivatives are
//! clamped to the robot's start/end heading.

use crate::error::{PlannerError, Result};
use crate::geometry::Vec2;

/// Bézier control coefficients of one cubic segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentCoeffs {
    pub p0: Vec2,
    pub p1: Vec2,
    pub p2: Vec2,
    pub p3: Vec2,
}

impl SegmentCoeffs {
    /// Position, first and second derivative at local parameter `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let s = 1.0 - t;
        let point = self.p0 * (s * s * s)
            + self.p1 * (3.0 * s * s * t)
            + self.p2 * (3.0 * s * t * t)
            + self.p3 * (t * t * t);
        let d1 = (self.p1 - self.p0) * (3.0 * s * s)
            + (self.p2 - self.p1) * (6.0 * s * t)
            + (self.p3 - self.p2) * (3.0 * t * t);
        let d2 = (self.p2 - self.p1 * 2.0 + self.p0) * (6.0 * s)
            + (self.p3 - self.p2 * 2.0 + self.p1) * (6.0 * t);
        (point, d1, d2)
    }

    fn is_finite(&self) -> bool {
        self.p0.is_finite() && self.p1.is_finite() && self.p2.is_finite() && self.p3.is_finite()
    }
}

/// A 2D trajectory made of stitched cubic Bézier segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline2D {
    segments: Vec<SegmentCoeffs>,
    knots: Vec<Vec2>,
}

/// Evaluation of a spline at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplinePoint {
    pub point: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
}

impl Spline2D {
    pub fn segments(&self) -> &[SegmentCoeffs] {
        &self.segments
    }

    pub fn knots(&self) -> &[Vec2] {
        &self.knots
    }

    /// Number of segments `n`; the global parameter ranges over `[0, n]`.
    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn param_max(&self) -> f64 {
        self.segments.len() as f64
    }

    /// Maps a global parameter to (segment index, local parameter).
    fn locate(&self, u: f64) -> (usize, f64) {
        let n = self.segments.len();
        let i = (u.floor() as usize).min(n - 1);
        (i, u - i as f64)
    }

    pub(crate) fn eval_unchecked(&self, u: f64) -> SplinePoint {
        let (i, t) = self.locate(u.clamp(0.0, self.param_max()));
        let (point, d1, d2) = self.segments[i].eval(t);
        SplinePoint { point, d1, d2 }
    }

    pub(crate) fn speed(&self, u: f64) -> f64 {
        let (i, t) = self.locate(u);
        self.segments[i].eval(t).1.norm()
    }
}

/// Fits a C2 end-slope cubic spline through `knots`.
///
/// The end derivatives point along `start_tangent` / `end_tangent` with a
/// magnitude equal to the chord of the first/last segment. A zero tangent
/// leaves that end free (zero second derivative).
pub fn fit_end_slope_spline(knots: &[Vec2], start_tangent: Vec2, end_tangent: Vec2) -> Result<Spline2D> {
    if knots.len() < 2 {
        return Err(PlannerError::invalid(format!("need at least 2 knots, got {}", knots.len())));
    }
    if !start_tangent.is_finite() || !end_tangent.is_finite() {
        return Err(PlannerError::invalid("end tangents must be finite"));
    }
    if let Some(k) = knots.iter().find(|k| !k.is_finite()) {
        return Err(PlannerError::invalid(format!("non-finite knot {k:?}")));
    }
    for (i, w) in knots.windows(2).enumerate() {
        if w[0].distance(w[1]) < 1e-9 {
            return Err(PlannerError::invalid(format!("knots {i} and {} coincide", i + 1)));
        }
    }

    let n = knots.len() - 1;
    let first_chord = knots[1].distance(knots[0]);
    let last_chord = knots[n].distance(knots[n - 1]);
    let start = start_tangent.normalized().map(|d| d * first_chord);
    let end = end_tangent.normalized().map(|d| d * last_chord);

    let xs: Vec<f64> = knots.iter().map(|k| k.x).collect();
    let ys: Vec<f64> = knots.iter().map(|k| k.y).collect();
    let dx = knot_derivatives(&xs, start.map(|v| v.x), end.map(|v| v.x));
    let dy = knot_derivatives(&ys, start.map(|v| v.y), end.map(|v| v.y));

    let segments: Vec<SegmentCoeffs> = (0..n)
        .map(|i| {
            let d0 = Vec2::new(dx[i], dy[i]);
            let d1 = Vec2::new(dx[i + 1], dy[i + 1]);
            SegmentCoeffs {
                p0: knots[i],
                p1: knots[i] + d0 / 3.0,
                p2: knots[i + 1] - d1 / 3.0,
                p3: knots[i + 1],
            }
        })
        .collect();

    if segments.iter().any(|s| !s.is_finite()) {
        return Err(PlannerError::invalid("spline coefficients are not finite"));
    }
    Ok(Spline2D { segments, knots: knots.to_vec() })
}

/// First derivatives at the knots of the C2 cubic interpolant with unit knot
/// spacing. `None` at an end selects the natural condition there.
fn knot_derivatives(values: &[f64], start: Option<f64>, end: Option<f64>) -> Vec<f64> {
    let n = values.len() - 1;
    let m = n + 1;
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];

    match start {
        Some(d) => {
            diag[0] = 1.0;
            rhs[0] = d;
        }
        None => {
            diag[0] = 2.0;
            sup[0] = 1.0;
            rhs[0] = 3.0 * (values[1] - values[0]);
        }
    }
    for i in 1..n {
        sub[i] = 1.0;
        diag[i] = 4.0;
        sup[i] = 1.0;
        rhs[i] = 3.0 * (values[i + 1] - values[i - 1]);
    }
    match end {
        Some(d) => {
            diag[n] = 1.0;
            rhs[n] = d;
        }
        None => {
            sub[n] = 1.0;
            diag[n] = 2.0;
            rhs[n] = 3.0 * (values[n] - values[n - 1]);
        }
    }
    solve_tridiagonal(&sub, &diag, &sup, &rhs)
}

/// Thomas algorithm. The systems built here are diagonally dominant, so no
/// pivoting is needed.
pub(crate) fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < m { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Position and first/second parametric derivatives at global parameter `u`.
pub fn evaluate(spline: &Spline2D, u: f64) -> Result<SplinePoint> {
    if !(0.0..=spline.param_max()).contains(&u) {
        return Err(PlannerError::invalid(format!(
            "parameter {u} outside [0, {}]",
            spline.segment_count()
        )));
    }
    Ok(spline.eval_unchecked(u))
}

/// Signed curvature (1/cm) at global parameter `u`; positive for left turns.
pub fn curvature(spline: &Spline2D, u: f64) -> Result<f64> {
    let p = evaluate(spline, u)?;
    curvature_of(&p, u)
}

pub(crate) fn curvature_of(p: &SplinePoint, u: f64) -> Result<f64> {
    let speed = p.d1.norm();
    if speed <= 1e-9 {
        return Err(PlannerError::DegeneratePoint { u, magnitude: speed });
    }
    Ok(p.d1.cross(p.d2) / (speed * speed * speed))
}

// 5-point Gauss–Legendre rule on [-1, 1].
const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Minimum number of quadrature panels per segment.
const PANELS_PER_SEGMENT: usize = 16;

/// Default number of arc-length samples per segment.
pub const DEFAULT_ARC_SAMPLES: usize = 64;

fn gauss_legendre_speed(spline: &Spline2D, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * spline.speed(mid + half * x))
        .sum::<f64>()
        * half
}

/// Monotone map from arc length `S` to the global spline parameter `u`.
///
/// Stored as a 1D cubic Bézier spline over non-uniform arc-length knots.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcLengthMap {
    total_length: f64,
    /// Arc length at each sampled parameter.
    lengths: Vec<f64>,
    /// Sampled parameters (equidistant in `u`).
    params: Vec<f64>,
    /// Inner Bézier ordinates `(c1, c2)` for each interval.
    inner: Vec<(f64, f64)>,
    param_max: f64,
    sample_count: usize,
}

impl ArcLengthMap {
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Samples per segment used to build the map.
    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// The (arc length, parameter) knots the map interpolates.
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lengths.iter().copied().zip(self.params.iter().copied())
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total_length);
        // index of the interval [lengths[k], lengths[k+1]] holding s
        let k = match self.lengths.partition_point(|&l| l <= s) {
            0 => 0,
            p => (p - 1).min(self.inner.len() - 1),
        };
        let h = self.lengths[k + 1] - self.lengths[k];
        let t = if h > 0.0 { ((s - self.lengths[k]) / h).clamp(0.0, 1.0) } else { 0.0 };
        let (c1, c2) = self.inner[k];
        let r = 1.0 - t;
        let u = self.params[k] * r * r * r + 3.0 * c1 * r * r * t + 3.0 * c2 * r * t * t + self.params[k + 1] * t * t * t;
        u.clamp(0.0, self.param_max)
    }
}

/// Builds the arc-length map with `samples` equidistant parameter samples per
/// segment.
pub fn build_arclength_map(spline: &Spline2D, samples: usize) -> Result<ArcLengthMap> {
    if samples < 8 {
        return Err(PlannerError::invalid(format!("need at least 8 samples per segment, got {samples}")));
    }
    let n = spline.segment_count();
    let count = n * samples;
    let step = 1.0 / samples as f64;
    let panels = PANELS_PER_SEGMENT.div_ceil(samples);

    let mut params = Vec::with_capacity(count + 1);
    let mut lengths = Vec::with_capacity(count + 1);
    params.push(0.0);
    lengths.push(0.0);
    let mut acc = 0.0;
    for k in 0..count {
        let a = k as f64 * step;
        let b = if k + 1 == count { n as f64 } else { (k + 1) as f64 * step };
        let w = (b - a) / panels as f64;
        for p in 0..panels {
            let pa = a + p as f64 * w;
            acc += gauss_legendre_speed(spline, pa, pa + w);
        }
        params.push(b);
        lengths.push(acc);
    }
    if !(acc > 0.0) || !acc.is_finite() {
        return Err(PlannerError::invalid("spline has zero or non-finite length"));
    }

    // du/dS = 1/|B'(u)| at the ends; an end with vanishing speed is left free.
    let end_slope = |u: f64| {
        let speed = spline.speed(u);
        (speed > 1e-9).then(|| 1.0 / speed)
    };
    let slopes = clamped_slopes(&lengths, &params, end_slope(0.0), end_slope(n as f64));

    let mut inner = Vec::with_capacity(count);
    for k in 0..count {
        let h = lengths[k + 1] - lengths[k];
        let du = params[k + 1] - params[k];
        let mut m0 = slopes[k].max(0.0);
        let mut m1 = slopes[k + 1].max(0.0);
        // Keep the Bézier ordinates ordered so u(S) is non-decreasing.
        if h > 0.0 {
            let limit = 3.0 * du / h;
            if m0 + m1 > limit {
                let scale = limit / (m0 + m1);
                m0 *= scale;
                m1 *= scale;
            }
        }
        inner.push((params[k] + h * m0 / 3.0, params[k + 1] - h * m1 / 3.0));
    }

    Ok(ArcLengthMap {
        total_length: acc,
        lengths,
        params,
        inner,
        param_max: n as f64,
        sample_count: samples,
    })
}

/// Knot slopes of the C2 cubic interpolant through `(xs, ys)` with
/// non-uniform spacing; `None` selects a natural end.
fn clamped_slopes(xs: &[f64], ys: &[f64], start: Option<f64>, end: Option<f64>) -> Vec<f64> {
    let m = xs.len();
    let n = m - 1;
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let sec: Vec<f64> = (0..n).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    match start {
        Some(d) => {
            diag[0] = 1.0;
            rhs[0] = d;
        }
        None => {
            diag[0] = 2.0;
            sup[0] = 1.0;
            rhs[0] = 3.0 * sec[0];
        }
    }
    for i in 1..n {
        sub[i] = h[i];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i - 1];
        rhs[i] = 3.0 * (h[i] * sec[i - 1] + h[i - 1] * sec[i]);
    }
    match end {
        Some(d) => {
            diag[n] = 1.0;
            rhs[n] = d;
        }
        None => {
            sub[n] = 1.0;
            diag[n] = 2.0;
            rhs[n] = 3.0 * sec[n - 1];
        }
    }
    solve_tridiagonal(&sub, &diag, &sup, &rhs)
}

/// Global spline parameter at arc length `s`.
pub fn param_at_arclength(map: &ArcLengthMap, s: f64) -> Result<f64> {
    let tol = 1e-9 * map.total_length.max(1.0);
    if !(s >= -tol && s <= map.total_length + tol) {
        return Err(PlannerError::invalid(format!(
            "arc length {s} outside [0, {}]",
            map.total_length
        )));
    }
    Ok(map.eval_unchecked(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line() -> Spline2D {
        fit_end_slope_spline(&[Vec2::new(0.0, 0.0), Vec2::new(100.0, 0.0)], Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0))
            .unwrap()
    }

    #[test]
    fn straight_single_segment() {
        let s = line();
        assert_eq!(s.segment_count(), 1);
        let p = evaluate(&s, 0.5).unwrap();
        assert_abs_diff_eq!(p.point.x, 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.point.y, 0.0, epsilon = 1e-12);
        for u in [0.0, 0.1, 0.77, 1.0] {
            assert_abs_diff_eq!(curvature(&s, u).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        let t = Vec2::new(1.0, 0.0);
        assert!(matches!(
            fit_end_slope_spline(&[Vec2::ZERO], t, t),
            Err(PlannerError::InvalidInput(_))
        ));
        assert!(matches!(
            fit_end_slope_spline(&[Vec2::ZERO, Vec2::ZERO, Vec2::new(1.0, 1.0)], t, t),
            Err(PlannerError::InvalidInput(_))
        ));
        assert!(fit_end_slope_spline(&[Vec2::ZERO, Vec2::new(1.0, 0.0)], Vec2::new(f64::NAN, 0.0), t).is_err());
    }

    #[test]
    fn evaluate_out_of_range() {
        let s = line();
        assert!(evaluate(&s, -1e-6).is_err());
        assert!(evaluate(&s, 1.0 + 1e-6).is_err());
    }

    #[test]
    fn bernstein_midpoint_and_ends() {
        let seg = SegmentCoeffs {
            p0: Vec2::new(0.0, 0.0),
            p1: Vec2::new(10.0, 0.0),
            p2: Vec2::new(20.0, 10.0),
            p3: Vec2::new(30.0, 10.0),
        };
        assert_eq!(seg.eval(0.0).0, seg.p0);
        assert_eq!(seg.eval(1.0).0, seg.p3);
        let mid = (seg.p0 + seg.p1 * 3.0 + seg.p2 * 3.0 + seg.p3) / 8.0;
        let got = seg.eval(0.5).0;
        assert_abs_diff_eq!(got.x, mid.x, epsilon = 1e-12);
        assert_abs_diff_eq!(got.y, mid.y, epsilon = 1e-12);
    }

    #[test]
    fn de_casteljau_agreement() {
        let seg = SegmentCoeffs {
            p0: Vec2::new(0.0, 0.0),
            p1: Vec2::new(10.0, 0.0),
            p2: Vec2::new(20.0, 10.0),
            p3: Vec2::new(30.0, 10.0),
        };
        let t = 0.3;
        let lerp = |a: Vec2, b: Vec2| a * (1.0 - t) + b * t;
        let (a, b, c) = (lerp(seg.p0, seg.p1), lerp(seg.p1, seg.p2), lerp(seg.p2, seg.p3));
        let (d, e) = (lerp(a, b), lerp(b, c));
        let expect = lerp(d, e);
        let got = seg.eval(t).0;
        assert_abs_diff_eq!(got.x, expect.x, epsilon = 1e-12);
        assert_abs_diff_eq!(got.y, expect.y, epsilon = 1e-12);
    }

    #[test]
    fn zero_tangent_gives_natural_end() {
        let knots = [Vec2::new(0.0, 0.0), Vec2::new(50.0, 40.0), Vec2::new(100.0, 0.0)];
        let s = fit_end_slope_spline(&knots, Vec2::ZERO, Vec2::ZERO).unwrap();
        let a = evaluate(&s, 0.0).unwrap();
        let b = evaluate(&s, 2.0).unwrap();
        assert!(a.d2.norm() < 1e-9);
        assert!(b.d2.norm() < 1e-9);
    }

    #[test]
    fn degenerate_curvature_reported() {
        // A cusp: first derivative vanishes mid-segment.
        let seg = SegmentCoeffs {
            p0: Vec2::new(0.0, 0.0),
            p1: Vec2::new(10.0, 10.0),
            p2: Vec2::new(0.0, 10.0),
            p3: Vec2::new(10.0, 0.0),
        };
        let s = Spline2D { segments: vec![seg], knots: vec![seg.p0, seg.p3] };
        assert!(matches!(curvature(&s, 0.5), Err(PlannerError::DegeneratePoint { .. })));
    }

    #[test]
    fn arclength_of_line() {
        let s = line();
        let map = build_arclength_map(&s, DEFAULT_ARC_SAMPLES).unwrap();
        assert_abs_diff_eq!(map.total_length(), 100.0, epsilon = 0.01);
        assert_abs_diff_eq!(param_at_arclength(&map, 50.0).unwrap(), 0.5, epsilon = 1e-3);
        assert_eq!(param_at_arclength(&map, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(param_at_arclength(&map, map.total_length()).unwrap(), 1.0, epsilon = 1e-6);
        assert!(param_at_arclength(&map, -1.0).is_err());
        assert!(param_at_arclength(&map, 100.5).is_err());
        assert!(build_arclength_map(&s, 7).is_err());
    }
}
