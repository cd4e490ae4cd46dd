//! Horizontal UAV placement by successive convex approximation.
//!
//! Rates are convex and decreasing in the squared horizontal distance, so
//! their tangent at the current anchor is a global lower bound; replacing each
//! rate by that tangent turns every delay term into a convex upper bound that
//! is tight at the anchor. Each convexified problem is solved by projected
//! gradient descent with backtracking, and the true objective decides whether
//! the new point is kept.

use serde::{Deserialize, Serialize};

use crate::geometry::{project_to_disk_pair, Point2};

/// `snr0 = P γ0 / (N0 B)`: received SNR at unit squared distance.
fn snr0(bandwidth: f64, tx_power: f64, gamma0: f64, noise_psd: f64) -> f64 {
    tx_power * gamma0 / (noise_psd * bandwidth)
}

/// Rate as a function of squared horizontal distance `phi`.
fn rate_phi(phi: f64, alt_sq: f64, bandwidth: f64, snr0: f64) -> f64 {
    bandwidth * (snr0 / (alt_sq + phi)).ln_1p() / std::f64::consts::LN_2
}

/// Derivative of the rate with respect to `phi`; always negative.
fn rate_phi_slope(phi: f64, alt_sq: f64, bandwidth: f64, snr0: f64) -> f64 {
    let d = alt_sq + phi;
    -bandwidth * snr0 / (std::f64::consts::LN_2 * d * (d + snr0))
}

/// Tangent lower bound of the rate of a link between a moving end and a fixed
/// `peer`, expanded at `anchor` and evaluated at `eval`.
#[allow(clippy::too_many_arguments)]
pub fn rate_lower_bound(
    anchor: Point2,
    eval: Point2,
    peer: Point2,
    alt_diff: f64,
    bandwidth: f64,
    tx_power: f64,
    gamma0: f64,
    noise_psd: f64,
) -> f64 {
    let s0 = snr0(bandwidth, tx_power, gamma0, noise_psd);
    let alt_sq = alt_diff * alt_diff;
    let phi0 = anchor.dist_sq(peer);
    rate_phi(phi0, alt_sq, bandwidth, s0) + rate_phi_slope(phi0, alt_sq, bandwidth, s0) * (eval.dist_sq(peer) - phi0)
}

/// Affine lower bound of `|p_u − p_v|²` expanded at the anchors.
pub fn safety_lower_bound(pos_u: Point2, pos_v: Point2, anchor_u: Point2, anchor_v: Point2) -> f64 {
    let a = anchor_u - anchor_v;
    let d = pos_u - pos_v;
    2.0 * a.dot(d) - a.norm_sq()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mover {
    /// Position at the end of the previous slot.
    pub start: Point2,
    /// Largest displacement in one slot.
    pub reach: f64,
    /// Cost per squared metre of displacement.
    pub flight_weight: f64,
}

/// A link whose delay `bits / rate` is charged with `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub mover: usize,
    pub peer: Point2,
    pub alt_diff: f64,
    pub bandwidth: f64,
    pub tx_power: f64,
    pub bits: f64,
    pub weight: f64,
}

/// `constant + Σ bits/rate over links ≤ budget`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayRow {
    pub links: Vec<usize>,
    pub constant: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionProblem {
    pub movers: Vec<Mover>,
    pub links: Vec<Link>,
    pub rows: Vec<DelayRow>,
    /// Mover pairs that must stay at least `d_safe` apart.
    pub pairs: Vec<(usize, usize)>,
    pub d_safe: f64,
    pub gamma0: f64,
    pub noise_psd: f64,
    /// Delay weight used to scale the constraint penalty.
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaResult {
    pub positions: Vec<Point2>,
    /// True objective at the start and after every accepted outer iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Some mover was sent back to its start position.
    pub fallback: bool,
    /// True objective at the returned positions.
    pub objective: f64,
}

pub const MAX_OUTER: usize = 20;
pub const OUTER_TOL: f64 = 1e-4;
const MAX_INNER: usize = 300;
const PENALTY_ESCALATIONS: usize = 3;
/// Relative slack under which a delay row counts as met (rounding on tight rows).
const ROW_TOL: f64 = 1e-12;

/// Precomputed tangent of one link at the current anchor.
#[derive(Debug, Clone, Copy)]
struct Tangent {
    r0: f64,
    slope: f64,
    phi0: f64,
}

impl PositionProblem {
    fn link_rate(&self, l: &Link, p: Point2) -> f64 {
        let s0 = snr0(l.bandwidth, l.tx_power, self.gamma0, self.noise_psd);
        rate_phi(p.dist_sq(l.peer), l.alt_diff * l.alt_diff, l.bandwidth, s0)
    }

    fn link_delay(&self, l: &Link, p: Point2) -> f64 {
        if l.bits == 0.0 { 0.0 } else { l.bits / self.link_rate(l, p) }
    }

    fn flight(&self, x: &[Point2]) -> f64 {
        self.movers.iter().zip(x).map(|(m, p)| m.flight_weight * p.dist_sq(m.start)).sum()
    }

    /// The block's true objective.
    pub fn objective(&self, x: &[Point2]) -> f64 {
        let links: f64 = self.links.iter().map(|l| l.weight * self.link_delay(l, x[l.mover])).sum();
        links + self.flight(x)
    }

    /// Left side minus budget of a delay row at the true rates.
    pub fn row_excess(&self, row: &DelayRow, x: &[Point2]) -> f64 {
        row.constant + row.links.iter().map(|&i| self.link_delay(&self.links[i], x[self.links[i].mover])).sum::<f64>()
            - row.budget
    }

    fn row_broken(&self, row: &DelayRow, x: &[Point2]) -> bool {
        self.row_excess(row, x) > ROW_TOL * row.budget.abs()
    }

    pub fn min_pair_distance(&self, x: &[Point2]) -> f64 {
        self.pairs.iter().map(|&(i, j)| x[i].dist(x[j])).fold(f64::INFINITY, f64::min)
    }

    fn safe(&self, x: &[Point2]) -> bool {
        self.pairs.iter().all(|&(i, j)| x[i].dist(x[j]) >= self.d_safe)
    }

    fn tangents(&self, anchor: &[Point2]) -> Vec<Tangent> {
        self.links
            .iter()
            .map(|l| {
                let s0 = snr0(l.bandwidth, l.tx_power, self.gamma0, self.noise_psd);
                let alt_sq = l.alt_diff * l.alt_diff;
                let phi0 = anchor[l.mover].dist_sq(l.peer);
                Tangent { r0: rate_phi(phi0, alt_sq, l.bandwidth, s0), slope: rate_phi_slope(phi0, alt_sq, l.bandwidth, s0), phi0 }
            })
            .collect()
    }

    /// Minimises the true objective from the movers' start positions.
    pub fn solve(&self) -> ScaResult {
        let start: Vec<Point2> = self.movers.iter().map(|m| m.start).collect();
        self.solve_from(&start)
    }

    /// Minimises the true objective from `init`, a feasible point (each mover
    /// within reach of its start, pairs separated). A mover that breaks a
    /// delay row is sent back to `init`.
    pub fn solve_from(&self, init: &[Point2]) -> ScaResult {
        let start = init.to_vec();
        let start_obj = self.objective(&start);
        let mut trace = vec![start_obj];
        if self.links.iter().all(|l| l.weight * l.bits == 0.0) {
            return ScaResult { positions: start, trace, iterations: 0, fallback: false, objective: start_obj };
        }
        let mut x = start.clone();
        let mut obj = start_obj;
        let mut iterations = 0;
        let mut step = 1.0;
        let mut full_ball = false;
        loop {
            iterations += 1;
            let trust: Vec<f64> =
                self.movers.iter().map(|m| if full_ball { f64::INFINITY } else { 0.5 * m.reach }).collect();
            let candidate = self.convex_step(&x, &trust, &mut step);
            let accepted = self.accept(&x, candidate, obj);
            let improved = match accepted {
                Some((cand, cand_obj)) => {
                    let gain = obj - cand_obj;
                    x = cand;
                    obj = cand_obj;
                    trace.push(obj);
                    gain > OUTER_TOL * obj.abs().max(1e-300)
                }
                None => false,
            };
            if full_ball || iterations >= MAX_OUTER + 1 {
                break;
            }
            if !improved || iterations >= MAX_OUTER {
                full_ball = true;
            }
        }
        let (positions, fallback) = self.hover_fallback(&start, x);
        let objective = if fallback { self.objective(&positions) } else { obj };
        ScaResult { positions, trace, iterations, fallback, objective }
    }

    /// True-objective acceptance with a shrinking step towards the anchor when
    /// the true separation is violated.
    fn accept(&self, anchor: &[Point2], cand: Vec<Point2>, anchor_obj: f64) -> Option<(Vec<Point2>, f64)> {
        let mut c = cand;
        for _ in 0..30 {
            if self.safe(&c) {
                let o = self.objective(&c);
                return (o <= anchor_obj && c.as_slice() != anchor).then_some((c, o));
            }
            c = c.iter().zip(anchor).map(|(p, a)| *a + (*p - *a) * 0.5).collect();
        }
        None
    }

    /// Sends movers back to their start when they broke a delay row that held
    /// at the start; everything hovers if that leaves the fleet unsafe or worse off.
    fn hover_fallback(&self, start: &[Point2], x: Vec<Point2>) -> (Vec<Point2>, bool) {
        let mut out = x;
        let mut changed = false;
        for row in &self.rows {
            if self.row_broken(row, &out) && !self.row_broken(row, start) {
                for &li in &row.links {
                    let m = self.links[li].mover;
                    if out[m] != start[m] {
                        out[m] = start[m];
                        changed = true;
                    }
                }
            }
        }
        if changed && (!self.safe(&out) || self.objective(&out) > self.objective(start)) {
            return (start.to_vec(), true);
        }
        (out, changed)
    }

    /// Approximately minimises the convexified problem around `anchor` with
    /// exact penalties on the linearised separation and delay rows.
    fn convex_step(&self, anchor: &[Point2], trust: &[f64], step: &mut f64) -> Vec<Point2> {
        let tang = self.tangents(anchor);
        let mut rho = 1e3 * self.k.max(1.0);
        let mut x = anchor.to_vec();
        for escalation in 0..=PENALTY_ESCALATIONS {
            x = self.pgd(anchor, &tang, trust, rho, x, step);
            let violated = self.surrogate_violation(anchor, &tang, &x) > 1e-9;
            if !violated || escalation == PENALTY_ESCALATIONS {
                break;
            }
            rho *= 10.0;
        }
        x
    }

    fn surrogate_rate(&self, t: &Tangent, l: &Link, p: Point2) -> f64 {
        t.r0 + t.slope * (p.dist_sq(l.peer) - t.phi0)
    }

    /// Largest positive excess of any linearised constraint (relative).
    fn surrogate_violation(&self, anchor: &[Point2], tang: &[Tangent], x: &[Point2]) -> f64 {
        let mut worst: f64 = 0.0;
        let ds2 = self.d_safe * self.d_safe;
        for &(i, j) in &self.pairs {
            let lb = safety_lower_bound(x[i], x[j], anchor[i], anchor[j]);
            worst = worst.max((ds2 - lb) / ds2);
        }
        for row in &self.rows {
            if self.row_broken(row, anchor) {
                continue;
            }
            let mut lhs = row.constant;
            for &li in &row.links {
                let l = &self.links[li];
                if l.bits == 0.0 {
                    continue;
                }
                let r = self.surrogate_rate(&tang[li], l, x[l.mover]);
                lhs += if r > 0.0 { l.bits / r } else { f64::INFINITY };
            }
            worst = worst.max((lhs - row.budget) / row.budget.abs().max(1e-300));
        }
        worst
    }

    /// Surrogate value and gradient; `None` where some tangent rate is non-positive.
    fn surrogate(&self, anchor: &[Point2], tang: &[Tangent], rho: f64, x: &[Point2], grad: Option<&mut [Point2]>) -> Option<f64> {
        let mut g_local = vec![Point2::default(); x.len()];
        let mut val = 0.0;
        let mut link_delay = vec![0.0; self.links.len()];
        let mut link_grad = vec![Point2::default(); self.links.len()];
        for (li, (l, t)) in self.links.iter().zip(tang).enumerate() {
            if l.bits == 0.0 {
                continue;
            }
            let p = x[l.mover];
            let r = self.surrogate_rate(t, l, p);
            if !(r > 0.0) {
                return None;
            }
            let d = l.bits / r;
            link_delay[li] = d;
            // d(bits/r)/dp = -bits/r² · slope · 2(p − peer)
            link_grad[li] = (p - l.peer) * (-2.0 * l.bits * t.slope / (r * r));
            val += l.weight * d;
            g_local[l.mover] = g_local[l.mover] + link_grad[li] * l.weight;
        }
        for (i, m) in self.movers.iter().enumerate() {
            val += m.flight_weight * x[i].dist_sq(m.start);
            g_local[i] = g_local[i] + (x[i] - m.start) * (2.0 * m.flight_weight);
        }
        let ds2 = self.d_safe * self.d_safe;
        for &(i, j) in &self.pairs {
            let excess = ds2 - safety_lower_bound(x[i], x[j], anchor[i], anchor[j]);
            if excess > 0.0 {
                val += rho * excess;
                let a = anchor[i] - anchor[j];
                g_local[i] = g_local[i] - a * (2.0 * rho);
                g_local[j] = g_local[j] + a * (2.0 * rho);
            }
        }
        for row in &self.rows {
            // rows already broken at the anchor are handled by the hover fallback
            if self.row_broken(row, anchor) {
                continue;
            }
            let lhs = row.constant + row.links.iter().map(|&li| link_delay[li]).sum::<f64>();
            let excess = lhs - row.budget;
            if excess > 0.0 {
                let scale = rho / row.budget.abs().max(1e-300);
                val += scale * excess;
                for &li in &row.links {
                    let m = self.links[li].mover;
                    g_local[m] = g_local[m] + link_grad[li] * scale;
                }
            }
        }
        if let Some(g) = grad {
            g.copy_from_slice(&g_local);
        }
        Some(val)
    }

    fn project(&self, anchor: &[Point2], trust: &[f64], x: &mut [Point2]) {
        for (i, m) in self.movers.iter().enumerate() {
            x[i] = if trust[i].is_finite() {
                project_to_disk_pair(x[i], m.start, m.reach, anchor[i], trust[i])
            } else {
                x[i].project_to_disk(m.start, m.reach)
            };
        }
    }

    /// Projected gradient descent with backtracking on the surrogate.
    fn pgd(&self, anchor: &[Point2], tang: &[Tangent], trust: &[f64], rho: f64, mut x: Vec<Point2>, step: &mut f64) -> Vec<Point2> {
        let n = x.len();
        self.project(anchor, trust, &mut x);
        let mut grad = vec![Point2::default(); n];
        let Some(mut val) = self.surrogate(anchor, tang, rho, &x, Some(&mut grad)) else {
            return anchor.to_vec();
        };
        let mut t = *step;
        for _ in 0..MAX_INNER {
            let mut accepted = false;
            for _ in 0..60 {
                let mut y: Vec<Point2> = x.iter().zip(&grad).map(|(p, g)| *p - *g * t).collect();
                self.project(anchor, trust, &mut y);
                let mut move_sq = 0.0;
                let mut lin = 0.0;
                for i in 0..n {
                    let d = y[i] - x[i];
                    move_sq += d.norm_sq();
                    lin += grad[i].dot(d);
                }
                if move_sq == 0.0 {
                    *step = t;
                    return x;
                }
                if let Some(v) = self.surrogate(anchor, tang, rho, &y, None) {
                    if v <= val + lin + move_sq / (2.0 * t) {
                        let moved = move_sq.sqrt();
                        x = y;
                        val = self.surrogate(anchor, tang, rho, &x, Some(&mut grad)).expect("just evaluated");
                        accepted = true;
                        t *= 2.0;
                        if moved < 1e-9 {
                            *step = t;
                            return x;
                        }
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        *step = t;
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;
    use crate::radio::link_rate;
    use proptest::prelude::*;

    fn params() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn bound_is_tight_at_anchor() {
        let p = params();
        let a = Point2::new(10.0, 20.0);
        let peer = Point2::new(40.0, -5.0);
        let lb = rate_lower_bound(a, a, peer, 100.0, 2e6, 0.5, p.gamma0, p.noise_psd);
        let exact = link_rate(2e6, 0.5, p.gamma0 / (1e4 + a.dist_sq(peer)), p.noise_psd);
        assert!((lb - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn slope_is_negative() {
        let p = params();
        let s0 = snr0(2e6, 0.5, p.gamma0, p.noise_psd);
        for phi in [0.0, 1.0, 1e4, 1e6] {
            assert!(rate_phi_slope(phi, 1e4, 2e6, s0) < 0.0);
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = params();
        let s0 = snr0(1e7, 1.0, p.gamma0, p.noise_psd);
        let phi = 3e4;
        let h = 1.0;
        let fd = (rate_phi(phi + h, 2500.0, 1e7, s0) - rate_phi(phi - h, 2500.0, 1e7, s0)) / (2.0 * h);
        let an = rate_phi_slope(phi, 2500.0, 1e7, s0);
        assert!((fd - an).abs() <= 1e-6 * an.abs());
    }

    #[test]
    fn safety_bound_examples() {
        let (a, b) = (Point2::new(0.0, 0.0), Point2::new(3.0, 4.0));
        assert_eq!(safety_lower_bound(a, b, a, b), 25.0);
        assert_eq!(safety_lower_bound(Point2::new(1.0, 1.0), Point2::new(7.0, 2.0), a, a), 0.0);
    }

    proptest! {
        #[test]
        fn bounds_are_lower_bounds(ax in -500.0f64..500.0, ay in -500.0f64..500.0, ex in -500.0f64..500.0, ey in -500.0f64..500.0,
                                   px in -500.0f64..500.0, py in -500.0f64..500.0, qx in -50.0f64..50.0, qy in -50.0f64..50.0) {
            let p = params();
            let (a, e, peer) = (Point2::new(ax, ay), Point2::new(ex, ey), Point2::new(px, py));
            let lb = rate_lower_bound(a, e, peer, 50.0, 1e7, 1.0, p.gamma0, p.noise_psd);
            let exact = link_rate(1e7, 1.0, p.gamma0 / (2500.0 + e.dist_sq(peer)), p.noise_psd);
            prop_assert!(lb <= exact * (1.0 + 1e-12));
            let d = Point2::new(qx, qy);
            let lb2 = safety_lower_bound(e, peer + d, a, peer);
            prop_assert!(lb2 <= e.dist_sq(peer + d) * (1.0 + 1e-12) + 1e-9);
        }
    }

    fn single(start: Point2, target: Point2, q: f64, k: f64) -> PositionProblem {
        let p = params();
        PositionProblem {
            movers: vec![Mover { start, reach: 5.0, flight_weight: q * 0.5 * 4.0 / 0.2 }],
            links: vec![Link { mover: 0, peer: target, alt_diff: 100.0, bandwidth: 2e6, tx_power: 0.5, bits: 5e6, weight: k }],
            rows: vec![],
            pairs: vec![],
            d_safe: 5.0,
            gamma0: p.gamma0,
            noise_psd: p.noise_psd,
            k,
        }
    }

    #[test]
    fn free_flight_heads_straight_to_target() {
        let start = Point2::new(100.0, 100.0);
        let target = Point2::new(400.0, 500.0);
        let r = single(start, target, 0.0, 10.0).solve();
        let moved = r.positions[0] - start;
        assert!((moved.norm() - 5.0).abs() < 1e-6, "{moved:?}");
        let dir = (target - start) * (1.0 / (target - start).norm());
        assert!((moved.dot(dir) / moved.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn displacement_shrinks_with_energy_weight() {
        let start = Point2::new(100.0, 100.0);
        let target = Point2::new(300.0, 100.0);
        let mut last = f64::INFINITY;
        for q in [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            let r = single(start, target, q, 10.0).solve();
            let d = r.positions[0].dist(start);
            assert!(d <= last + 1e-6, "q={q}: {d} > {last}");
            last = d;
        }
        assert!(last < 0.01);
    }

    #[test]
    fn idle_link_keeps_position() {
        let mut pr = single(Point2::new(1.0, 2.0), Point2::new(300.0, 0.0), 0.0, 10.0);
        pr.links[0].bits = 0.0;
        let r = pr.solve();
        assert_eq!(r.positions[0], Point2::new(1.0, 2.0));
        assert_eq!(r.trace, vec![0.0]);
    }

    #[test]
    fn separation_is_kept() {
        let p = params();
        let target = Point2::new(0.0, 0.0);
        let pr = PositionProblem {
            movers: vec![
                Mover { start: Point2::new(-5.5, 0.0), reach: 5.0, flight_weight: 0.0 },
                Mover { start: Point2::new(5.5, 0.0), reach: 5.0, flight_weight: 0.0 },
            ],
            links: vec![
                Link { mover: 0, peer: target, alt_diff: 100.0, bandwidth: 2e6, tx_power: 0.5, bits: 5e6, weight: 10.0 },
                Link { mover: 1, peer: target, alt_diff: 100.0, bandwidth: 2e6, tx_power: 0.5, bits: 5e6, weight: 10.0 },
            ],
            rows: vec![],
            pairs: vec![(0, 1)],
            d_safe: 5.0,
            gamma0: p.gamma0,
            noise_psd: p.noise_psd,
            k: 10.0,
        };
        let r = pr.solve();
        assert!(pr.min_pair_distance(&r.positions) >= 5.0);
        assert!(r.trace.last().unwrap() < &r.trace[0]);
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
