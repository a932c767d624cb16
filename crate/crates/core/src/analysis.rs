//! Closed-form latency–load tradeoff.
//!
//! For `q` finishing servers and replication `r = ⌊μq⌋`:
//!
//! ```text
//! B_j   = C(q-1, j) C(K-q, r-j) / ((q/K) C(K, r))
//! s_q   = smallest s with Σ_{j=s..r} B_j <= 1 - μ̄
//! L(q)  = N Σ_{j=s_q..r} B_j / j + N min{1 - μ̄ - Σ_{j=s_q..r} B_j, B_{s_q-1} / (s_q-1)}
//! L̄(q) = N max_{t=1..q-1} q (1 - min{tμ, 1}) / (⌈q/t⌉ (q - t))
//! ```
//!
//! All loads are exact rationals. `s_q` is searched from 1 (a round with
//! `j = 0` has no multicast partners) and then moved past empty rounds, so
//! e.g. `q = K` gives `s_q = μK`. When `s_q <= 1` the second term is the
//! uncoded residual alone.
//!
//! Gap ratios compare the two lower convex envelopes at each `D(q)`, which
//! is where the tradeoff regions are defined.

use std::io::Write;

use num::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::codec::min_wait;
use crate::rational::{self, Rational};
use crate::stragglers::{expected_order_statistic, LatencyError, LatencyModel};
use crate::subset::binomial;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("mu = {mu} must satisfy 1/K <= mu <= 1 for K = {servers}")]
    Storage { mu: String, servers: usize },
    #[error("q = {q} must satisfy ceil(1/mu) = {min} <= q <= K = {max}")]
    Wait { q: usize, min: usize, max: usize },
    #[error("j = {j} must satisfy 0 <= j <= floor(mu q) = {max}")]
    Index { j: usize, max: usize },
    #[error("mu K = {0} is not an integer")]
    FractionalReplication(String),
    #[error("lower bound is zero while the achievable load is positive")]
    ZeroLowerBound,
    #[error(transparent)]
    Latency(#[from] LatencyError),
}

fn check_storage(servers: usize, mu: &Rational) -> Result<(), AnalysisError> {
    if servers == 0 || *mu < rational::ratio(1, servers as i64) || *mu > Rational::one() {
        return Err(AnalysisError::Storage {
            mu: rational::to_fraction_string(mu),
            servers,
        });
    }
    Ok(())
}

fn check_wait(servers: usize, q: usize, mu: &Rational) -> Result<(), AnalysisError> {
    check_storage(servers, mu)?;
    let min = min_wait(mu);
    if q < min || q > servers {
        return Err(AnalysisError::Wait {
            q,
            min,
            max: servers,
        });
    }
    Ok(())
}

fn replication(q: usize, mu: &Rational) -> usize {
    rational::floor_to_usize(&(mu * rational::int(q as i64)))
}

fn effective_storage(q: usize, mu: &Rational) -> Rational {
    rational::ratio(replication(q, mu) as i64, q as i64)
}

fn coefficient(servers: usize, q: usize, r: usize, j: usize) -> Rational {
    let numer = binomial(q - 1, j) * binomial(servers - q, r - j) * servers as u128;
    let denom = q as u128 * binomial(servers, r);
    rational::from_u128(numer) / rational::from_u128(denom)
}

/// `B_j`: normalized count of coded rows a server in `Q` is missing that
/// are held by exactly `j` other servers of `Q`.
pub fn b_coefficient(
    servers: usize,
    q: usize,
    mu: &Rational,
    j: usize,
) -> Result<Rational, AnalysisError> {
    check_wait(servers, q, mu)?;
    let r = replication(q, mu);
    if j > r {
        return Err(AnalysisError::Index { j, max: r });
    }
    Ok(coefficient(servers, q, r, j))
}

/// `s_q`, in `1..=⌊μq⌋ + 1`.
pub fn threshold_s(servers: usize, q: usize, mu: &Rational) -> Result<usize, AnalysisError> {
    check_wait(servers, q, mu)?;
    let r = replication(q, mu);
    let budget = Rational::one() - effective_storage(q, mu);
    let mut tail = Rational::zero();
    let mut s = r + 1;
    for j in (1..=r).rev() {
        tail += coefficient(servers, q, r, j);
        if tail > budget {
            break;
        }
        s = j;
    }
    while s <= r && coefficient(servers, q, r, s).is_zero() {
        s += 1;
    }
    Ok(s)
}

/// `L(q)`.
pub fn achievable_load(
    servers: usize,
    q: usize,
    mu: &Rational,
    outputs: usize,
) -> Result<Rational, AnalysisError> {
    check_wait(servers, q, mu)?;
    if q == 1 {
        return Ok(Rational::zero());
    }
    let r = replication(q, mu);
    let s = threshold_s(servers, q, mu)?;
    let mut coded = Rational::zero();
    let mut tail = Rational::zero();
    for j in s..=r {
        let b = coefficient(servers, q, r, j);
        coded += &b / rational::int(j as i64);
        tail += b;
    }
    let uncoded = Rational::one() - effective_storage(q, mu) - tail;
    let residual = if s >= 2 {
        let extended = coefficient(servers, q, r, s - 1) / rational::int(s as i64 - 1);
        uncoded.min(extended)
    } else {
        uncoded
    };
    Ok(rational::int(outputs as i64) * (coded + residual))
}

/// `D(q) = E{S_(q)}`.
pub fn achievable_latency(
    servers: usize,
    q: usize,
    model: &LatencyModel,
) -> Result<Rational, AnalysisError> {
    Ok(expected_order_statistic(model, servers, q)?)
}

/// `L̄(q)`, the converse bound for a scheme that waits for `q` servers.
pub fn lower_bound_load(servers: usize, q: usize, mu: &Rational, outputs: usize) -> Rational {
    let _ = servers;
    let mut best = Rational::zero();
    for t in 1..q {
        let stored = (mu * rational::int(t as i64)).min(Rational::one());
        let rounds = q.div_ceil(t);
        let value = (Rational::one() - stored) * rational::int(q as i64)
            / rational::int((rounds * (q - t)) as i64);
        if value > best {
            best = value;
        }
    }
    best * rational::int(outputs as i64)
}

/// Piecewise-linear lower convex envelope of a finite point set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    vertices: Vec<(Rational, Rational)>,
}

fn cross(o: &(Rational, Rational), a: &(Rational, Rational), b: &(Rational, Rational)) -> Rational {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Lower boundary of the convex hull of `points` (monotone chain). Points
/// sharing an x keep only the lowest y.
pub fn lower_convex_envelope(points: &[(Rational, Rational)]) -> Envelope {
    let mut sorted = points.to_vec();
    sorted.sort();
    sorted.dedup_by(|later, earlier| later.0 == earlier.0);
    let mut hull: Vec<(Rational, Rational)> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2
            && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_positive()
        {
            hull.pop();
        }
        hull.push(p);
    }
    Envelope { vertices: hull }
}

impl Envelope {
    /// Vertices sorted by x.
    pub fn vertices(&self) -> &[(Rational, Rational)] {
        &self.vertices
    }

    /// Value at `x` by linear interpolation. Outside the vertex range the
    /// nearest endpoint value is returned and a warning is logged.
    pub fn eval(&self, x: &Rational) -> Rational {
        let v = &self.vertices;
        assert!(!v.is_empty(), "empty envelope");
        if *x <= v[0].0 {
            if *x < v[0].0 {
                log::warn!("envelope evaluated left of its range; clamping");
            }
            return v[0].1.clone();
        }
        let last = v.len() - 1;
        if *x >= v[last].0 {
            if *x > v[last].0 {
                log::warn!("envelope evaluated right of its range; clamping");
            }
            return v[last].1.clone();
        }
        let i = v.partition_point(|p| p.0 <= *x);
        let (a, b) = (&v[i - 1], &v[i]);
        &a.1 + (&b.1 - &a.1) * (x - &a.0) / (&b.0 - &a.0)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let x = Rational::from_float(x).expect("finite latency");
        rational::to_f64(&self.eval(&x))
    }

    /// Every interior vertex lies strictly below the chord of its neighbours.
    pub fn is_convex(&self) -> bool {
        self.vertices
            .windows(3)
            .all(|w| cross(&w[0], &w[1], &w[2]).is_positive())
    }
}

/// One `q` of the tradeoff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TradeoffPoint {
    pub q: usize,
    #[serde(rename = "D", with = "rational::as_string")]
    pub latency: Rational,
    #[serde(rename = "L_ach", with = "rational::as_string")]
    pub achievable: Rational,
    #[serde(rename = "L_lb", with = "rational::as_string")]
    pub lower_bound: Rational,
    /// Achievable envelope over lower-bound envelope at `D(q)`; `None` when
    /// the ratio is unbounded.
    #[serde(with = "rational::as_opt_string")]
    pub gap: Option<Rational>,
    /// `L(q) / L̄(q)` at this point alone.
    #[serde(with = "rational::as_opt_string")]
    pub point_ratio: Option<Rational>,
}

#[derive(Debug, Clone)]
pub struct TradeoffCurve {
    pub points: Vec<TradeoffPoint>,
    pub achievable_envelope: Envelope,
    pub lower_envelope: Envelope,
}

fn ratio_or_none(numer: &Rational, denom: &Rational) -> Option<Rational> {
    if numer.is_zero() {
        Some(Rational::zero())
    } else if denom.is_zero() {
        None
    } else {
        Some(numer / denom)
    }
}

/// Points for `q = ⌈1/μ⌉..=K` and both envelopes.
pub fn tradeoff_curve(
    servers: usize,
    mu: &Rational,
    outputs: usize,
    model: &LatencyModel,
) -> Result<TradeoffCurve, AnalysisError> {
    check_storage(servers, mu)?;
    let mut raw = Vec::new();
    for q in min_wait(mu)..=servers {
        raw.push((
            q,
            achievable_latency(servers, q, model)?,
            achievable_load(servers, q, mu, outputs)?,
            lower_bound_load(servers, q, mu, outputs),
        ));
    }
    let ach: Vec<_> = raw
        .iter()
        .map(|(_, d, l, _)| (d.clone(), l.clone()))
        .collect();
    let low: Vec<_> = raw
        .iter()
        .map(|(_, d, _, lb)| (d.clone(), lb.clone()))
        .collect();
    let achievable_envelope = lower_convex_envelope(&ach);
    let lower_envelope = lower_convex_envelope(&low);
    let points = raw
        .into_iter()
        .map(|(q, latency, achievable, lower_bound)| {
            let gap = ratio_or_none(
                &achievable_envelope.eval(&latency),
                &lower_envelope.eval(&latency),
            );
            let point_ratio = ratio_or_none(&achievable, &lower_bound);
            TradeoffPoint {
                q,
                latency,
                achievable,
                lower_bound,
                gap,
                point_ratio,
            }
        })
        .collect();
    Ok(TradeoffCurve {
        points,
        achievable_envelope,
        lower_envelope,
    })
}

impl TradeoffCurve {
    pub fn point(&self, q: usize) -> Option<&TradeoffPoint> {
        self.points.iter().find(|p| p.q == q)
    }

    /// Largest gap; `None` if some gap is unbounded.
    pub fn max_gap(&self) -> Option<Rational> {
        let mut best = Rational::zero();
        for p in &self.points {
            let g = p.gap.as_ref()?;
            if *g > best {
                best = g.clone();
            }
        }
        Some(best)
    }

    pub fn gap_report(&self) -> GapReport {
        GapReport {
            rows: self.points.iter().map(|p| (p.q, p.gap.clone())).collect(),
            max: self.max_gap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapReport {
    pub rows: Vec<(usize, Option<Rational>)>,
    pub max: Option<Rational>,
}

/// Gap ratios under the shifted-exponential model with scale `μN`. The
/// ratios do not depend on the scale.
pub fn gap_report(
    servers: usize,
    mu: &Rational,
    outputs: usize,
) -> Result<GapReport, AnalysisError> {
    check_storage(servers, mu)?;
    let model = LatencyModel::shifted_exponential(mu * rational::int(outputs.max(1) as i64))?;
    Ok(tradeoff_curve(servers, mu, outputs, &model)?.gap_report())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppendixCheck {
    #[serde(with = "rational::as_string")]
    pub ratio: Rational,
    pub within_bound: bool,
}

/// `x < 3 + √5`, decided exactly.
pub fn below_three_plus_sqrt5(x: &Rational) -> bool {
    let d = x - rational::int(3);
    d.is_negative() || &d * &d < rational::int(5)
}

/// `L(K) / L̄(K)` for integral `μK`, and whether it is below `3 + √5`.
pub fn appendix_gap_check(servers: usize, mu: &Rational) -> Result<AppendixCheck, AnalysisError> {
    check_storage(servers, mu)?;
    let mu_k = mu * rational::int(servers as i64);
    if !mu_k.is_integer() {
        return Err(AnalysisError::FractionalReplication(
            rational::to_fraction_string(&mu_k),
        ));
    }
    let ach = achievable_load(servers, servers, mu, 1)?;
    let low = lower_bound_load(servers, servers, mu, 1);
    let ratio = ratio_or_none(&ach, &low).ok_or(AnalysisError::ZeroLowerBound)?;
    Ok(AppendixCheck {
        within_bound: below_three_plus_sqrt5(&ratio),
        ratio,
    })
}

/// How rationals are rendered in tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rendering {
    Decimal(usize),
    Fraction,
}

impl Rendering {
    pub fn render(self, value: &Rational) -> String {
        match self {
            Rendering::Decimal(places) => rational::to_decimal_string(value, places),
            Rendering::Fraction => rational::to_fraction_string(value),
        }
    }

    pub fn render_opt(self, value: &Option<Rational>) -> String {
        value
            .as_ref()
            .map_or_else(|| "inf".to_string(), |v| self.render(v))
    }
}

/// Writes `q,D,L_ach,L_lb,gap`.
pub fn write_csv<W: Write>(curve: &TradeoffCurve, out: W, rendering: Rendering) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "D", "L_ach", "L_lb", "gap"])?;
    for p in &curve.points {
        w.write_record([
            p.q.to_string(),
            rendering.render(&p.latency),
            rendering.render(&p.achievable),
            rendering.render(&p.lower_bound),
            rendering.render_opt(&p.gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON document with the points and both envelopes.
pub fn to_json(curve: &TradeoffCurve, rendering: Rendering) -> serde_json::Value {
    use serde_json::{json, Value};
    let num = |v: &Rational| -> Value {
        match rendering {
            Rendering::Fraction => Value::String(rational::to_fraction_string(v)),
            Rendering::Decimal(places) => rational::to_decimal_string(v, places)
                .parse::<f64>()
                .map(Value::from)
                .unwrap_or(Value::Null),
        }
    };
    let opt = |v: &Option<Rational>| v.as_ref().map_or(Value::Null, num);
    let env = |e: &Envelope| -> Value {
        e.vertices()
            .iter()
            .map(|(x, y)| json!([num(x), num(y)]))
            .collect()
    };
    json!({
        "points": curve.points.iter().map(|p| json!({
            "q": p.q,
            "D": num(&p.latency),
            "L_ach": num(&p.achievable),
            "L_lb": num(&p.lower_bound),
            "gap": opt(&p.gap),
            "point_ratio": opt(&p.point_ratio),
        })).collect::<Vec<_>>(),
        "achievable_envelope": env(&curve.achievable_envelope),
        "lower_envelope": env(&curve.lower_envelope),
        "max_gap": curve.max_gap().as_ref().map_or(Value::Null, num),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    /// Straight from the definition: binomials as floats-free fractions.
    fn b_oracle(k: usize, q: usize, mu: (i64, i64), j: usize) -> Rational {
        let r = (mu.0 as usize * q) / mu.1 as usize;
        let c = |n: usize, k: usize| rational::from_u128(binomial(n, k));
        c(q - 1, j) * c(k - q, r - j) / (ratio(q as i64, k as i64) * c(k, r))
    }

    #[test]
    fn b_coefficients() {
        let half = ratio(1, 2);
        assert_eq!(b_coefficient(6, 4, &half, 2).unwrap(), ratio(3, 10));
        assert_eq!(b_coefficient(6, 4, &half, 1).unwrap(), ratio(3, 5));
        assert_eq!(
            b_coefficient(6, 4, &half, 2).unwrap(),
            b_oracle(6, 4, (1, 2), 2)
        );
        assert!(matches!(
            b_coefficient(6, 4, &half, 3),
            Err(AnalysisError::Index { .. })
        ));
        // q = K: only j = μK survives, with value 1 - μ
        let third = ratio(1, 3);
        for j in 0..=6 {
            let b = b_coefficient(18, 18, &third, j).unwrap();
            if j == 6 {
                assert_eq!(b, ratio(2, 3));
            } else {
                assert!(b.is_zero());
            }
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(threshold_s(6, 4, &ratio(1, 2)).unwrap(), 2);
        assert_eq!(threshold_s(18, 18, &ratio(1, 3)).unwrap(), 6);
        assert_eq!(threshold_s(4, 4, &ratio(1, 2)).unwrap(), 2);
        assert_eq!(threshold_s(18, 3, &ratio(1, 3)).unwrap(), 1);
        assert_eq!(threshold_s(4, 2, &ratio(1, 2)).unwrap(), 1);
    }

    #[test]
    fn achievable_loads() {
        assert_eq!(
            achievable_load(6, 4, &ratio(1, 2), 12).unwrap(),
            ratio(21, 5)
        );
        assert_eq!(achievable_load(18, 3, &ratio(1, 3), 180).unwrap(), int(120));
        assert_eq!(achievable_load(18, 18, &ratio(1, 3), 180).unwrap(), int(20));
        assert_eq!(achievable_load(4, 4, &ratio(1, 2), 4).unwrap(), int(1));
        assert_eq!(achievable_load(4, 2, &ratio(1, 2), 4).unwrap(), int(2));
        assert_eq!(achievable_load(5, 1, &int(1), 10).unwrap(), int(0));
        assert!(matches!(
            achievable_load(6, 1, &ratio(1, 2), 12),
            Err(AnalysisError::Wait { .. })
        ));
    }

    #[test]
    fn latencies() {
        let m = LatencyModel::shifted_exponential(int(2)).unwrap();
        assert_eq!(achievable_latency(4, 4, &m).unwrap(), ratio(37, 6));
        assert_eq!(achievable_latency(4, 2, &m).unwrap(), ratio(19, 6));
        let m = LatencyModel::shifted_exponential(int(5)).unwrap();
        assert_eq!(achievable_latency(1, 1, &m).unwrap(), int(10));
    }

    /// Exhaustive maximization written independently of the implementation.
    fn lower_oracle(q: usize, mu: f64, n: f64) -> f64 {
        (1..q)
            .map(|t| {
                let rounds = ((q as f64) / (t as f64)).ceil();
                (1.0 - (t as f64 * mu).min(1.0)) * q as f64 / (rounds * (q - t) as f64)
            })
            .fold(0.0, f64::max)
            * n
    }

    #[test]
    fn lower_bounds() {
        let third = ratio(1, 3);
        assert_eq!(lower_bound_load(18, 3, &third, 180), int(90));
        assert_eq!(lower_bound_load(18, 18, &third, 180), ratio(15, 2));
        assert!((lower_oracle(18, 1.0 / 3.0, 180.0) - 7.5).abs() < 1e-12);
        assert!(lower_bound_load(9, 5, &int(1), 10).is_zero());
        assert!(lower_bound_load(9, 1, &ratio(1, 3), 10).is_zero());
        for q in 2..=18 {
            let exact = rational::to_f64(&lower_bound_load(18, q, &third, 180));
            assert!((exact - lower_oracle(q, 1.0 / 3.0, 180.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn endpoints_k14_half_storage() {
        let mu = ratio(1, 2);
        let model = LatencyModel::shifted_exponential(int(420)).unwrap();
        let curve = tradeoff_curve(14, &mu, 840, &model).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.q, first.achievable.clone()), (2, int(420)));
        assert_eq!((last.q, last.achievable.clone()), (14, int(60)));
        assert_eq!(
            first.latency,
            expected_order_statistic(&model, 14, 2).unwrap()
        );
        assert!(curve.achievable_envelope.is_convex());
        assert!(curve.lower_envelope.is_convex());
    }

    #[test]
    fn single_point_curve() {
        let model = LatencyModel::shifted_exponential(int(3)).unwrap();
        let curve = tradeoff_curve(3, &int(1), 3, &model).unwrap();
        assert_eq!(curve.points.len(), 3);
        let curve = tradeoff_curve(1, &int(1), 3, &model).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.achievable_envelope.vertices().len(), 1);
        assert!(curve.points[0].achievable.is_zero());
        assert_eq!(curve.points[0].gap, Some(Rational::zero()));
    }

    #[test]
    fn envelope_basics() {
        let pts = vec![
            (int(0), int(10)),
            (int(1), int(4)),
            (int(2), int(5)),
            (int(3), int(1)),
            (int(3), int(7)),
        ];
        let e = lower_convex_envelope(&pts);
        assert_eq!(
            e.vertices(),
            &[(int(0), int(10)), (int(1), int(4)), (int(3), int(1))]
        );
        assert_eq!(e.eval(&int(2)), ratio(5, 2));
        assert_eq!(e.eval(&int(-1)), int(10));
        assert_eq!(e.eval(&int(9)), int(1));
        assert!(e.is_convex());
        // collinear middle point is dropped
        let e = lower_convex_envelope(&[(int(0), int(2)), (int(1), int(1)), (int(2), int(0))]);
        assert_eq!(e.vertices().len(), 2);
    }

    #[test]
    fn full_wait_gap_examples() {
        let c = appendix_gap_check(18, &ratio(1, 3)).unwrap();
        assert_eq!(c.ratio, ratio(8, 3));
        assert!(c.within_bound);
        let c = appendix_gap_check(7, &int(1)).unwrap();
        assert!(c.ratio.is_zero() && c.within_bound);
        assert!(matches!(
            appendix_gap_check(6, &ratio(1, 4)),
            Err(AnalysisError::FractionalReplication(_))
        ));
        assert!(below_three_plus_sqrt5(&ratio(523, 100)));
        assert!(!below_three_plus_sqrt5(&ratio(524, 100)));
    }

    #[test]
    fn csv_has_schema() {
        let model = LatencyModel::shifted_exponential(int(60)).unwrap();
        let curve = tradeoff_curve(18, &ratio(1, 3), 180, &model).unwrap();
        let mut buf = Vec::new();
        write_csv(&curve, &mut buf, Rendering::Fraction).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("q,D,L_ach,L_lb,gap"));
        assert_eq!(lines.next().unwrap().split(',').nth(4), Some("4/3"));
        assert_eq!(text.lines().count(), 17);
    }
}
