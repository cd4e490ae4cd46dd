//! Task-split and CPU-frequency allocation for fixed association and positions.
//!
//! For a fixed split the frequency problem is convex and separable up to one
//! capacity constraint per processor; it is solved through nested dual
//! searches (H-UAV price outside, L-UAV price inside, deadline multiplier per
//! task). For fixed frequencies the objective is linear in each split ratio,
//! so the split step picks an endpoint of the deadline-feasible interval.

use serde::{Deserialize, Serialize};

use crate::error::{Infeasibility, Violation};
use crate::numeric::{illinois, Bracket};

/// One task as seen by the allocator; transmission delays are fixed here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocTask {
    pub server: usize,
    pub bits: f64,
    pub density: f64,
    pub deadline: f64,
    /// Vehicle uplink delay (to the L-UAV, or to the H-UAV for direct tasks).
    pub t_uplink: f64,
    /// L-UAV to H-UAV rate; ignored for direct tasks.
    pub relay_rate: f64,
    /// Sent straight to the H-UAV: split pinned at 0, no relay hop.
    pub direct: bool,
}

impl AllocTask {
    fn cycles(&self) -> f64 {
        self.bits * self.density
    }

    fn relay_time(&self, alpha: f64) -> f64 {
        if self.direct || alpha >= 1.0 || self.bits == 0.0 {
            0.0
        } else {
            self.bits * (1.0 - alpha) / self.relay_rate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocServer {
    pub cpu_cap: f64,
    pub kappa: f64,
    pub tx_power: f64,
    /// Energy weight (the queue backlog for the Lyapunov controller).
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocProblem {
    pub k: f64,
    pub tasks: Vec<AllocTask>,
    pub servers: Vec<AllocServer>,
    pub huav_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSolution {
    pub alpha: Vec<f64>,
    pub f_lu: Vec<f64>,
    pub f_h: Vec<f64>,
    pub objective: f64,
    /// Deadlines hold without relaxation.
    pub feasible: bool,
    pub iterations: usize,
    /// Multiplicative deadline relaxation in force (1 when feasible).
    pub deadline_scale: f64,
    /// Objective after each alternation round.
    pub trace: Vec<f64>,
}

pub const MAX_ROUNDS: usize = 30;
pub const ROUND_TOL: f64 = 1e-6;
const SCALE_MARGIN: f64 = 1e-4;
const SPLIT_CANDIDATES: [f64; 5] = [0.5, 0.0, 1.0, 0.25, 0.75];

/// Per-task work and compute slack for a given split.
#[derive(Debug, Clone, Copy)]
struct Work {
    /// cycles on the L-UAV
    a: f64,
    /// cycles on the H-UAV
    b: f64,
    /// time left for computation
    s: f64,
}

impl AllocProblem {
    fn work(&self, i: usize, alpha: f64, scale: f64) -> Work {
        let t = &self.tasks[i];
        let alpha = if t.direct { 0.0 } else { alpha };
        let c = t.cycles();
        Work { a: c * alpha, b: c * (1.0 - alpha), s: t.deadline * scale - t.t_uplink - t.relay_time(alpha) }
    }

    /// Delay of task `i` under the given variables.
    pub fn task_delay(&self, i: usize, alpha: f64, f_lu: f64, f_h: f64) -> f64 {
        let t = &self.tasks[i];
        let w = self.work(i, alpha, 1.0);
        t.t_uplink + t.relay_time(alpha) + ratio(w.a, f_lu) + ratio(w.b, f_h)
    }

    /// Weighted delay plus weighted computation and relay energy.
    pub fn objective(&self, alpha: &[f64], f_lu: &[f64], f_h: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, t) in self.tasks.iter().enumerate() {
            total += self.k * self.task_delay(i, alpha[i], f_lu[i], f_h[i]);
            if !t.direct {
                let sv = &self.servers[t.server];
                let a = t.cycles() * alpha[i];
                total += sv.weight * (sv.kappa * a * f_lu[i] * f_lu[i] + sv.tx_power * t.relay_time(alpha[i]));
            }
        }
        total
    }

    fn server_tasks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.servers.len()];
        for (i, t) in self.tasks.iter().enumerate() {
            if !t.direct {
                out[t.server].push(i);
            }
        }
        out
    }

    /// Least total H-UAV frequency that meets every deadline when each L-UAV
    /// shares its spare capacity optimally; `Err` lists the blocking constraints.
    pub fn min_huav_demand(&self, alpha: &[f64], scale: f64) -> Result<f64, Infeasibility> {
        let mut violations = Vec::new();
        let mut demand = 0.0;
        for i in (0..self.tasks.len()).filter(|&i| self.tasks[i].direct) {
            let w = self.work(i, 0.0, scale);
            if w.b > 0.0 {
                if w.s <= 0.0 {
                    violations.push(Violation::TaskSlack { task: i });
                } else {
                    demand += w.b / w.s;
                }
            }
        }
        for (u, ids) in self.server_tasks().iter().enumerate() {
            let mut spare = self.servers[u].cpu_cap;
            let mut base = 0.0;
            let mut root_sum = 0.0;
            let mut ok = true;
            for &i in ids {
                let w = self.work(i, alpha[i], scale);
                if w.a + w.b == 0.0 {
                    continue;
                }
                if w.s <= 0.0 {
                    violations.push(Violation::TaskSlack { task: i });
                    ok = false;
                    continue;
                }
                spare -= w.a / w.s;
                base += w.b / w.s;
                root_sum += (w.a * w.b).sqrt() / w.s;
            }
            if !ok {
                continue;
            }
            if spare < 0.0 || (spare == 0.0 && root_sum > 0.0) {
                violations.push(Violation::LuavCapacity { luav: u });
                continue;
            }
            demand += base + if root_sum > 0.0 { root_sum * root_sum / spare } else { 0.0 };
        }
        if violations.is_empty() && demand > self.huav_cap {
            violations.push(Violation::HuavCapacity);
        }
        if violations.is_empty() { Ok(demand) } else { Err(Infeasibility { violations }) }
    }

    pub fn is_feasible(&self, alpha: &[f64], scale: f64) -> bool {
        self.min_huav_demand(alpha, scale).is_ok()
    }

    /// Smallest deadline scale (≥ 1) under which `alpha` admits a feasible
    /// frequency allocation.
    pub fn min_scale_for(&self, alpha: &[f64]) -> f64 {
        if self.is_feasible(alpha, 1.0) {
            return 1.0;
        }
        let mut hi = 2.0;
        while !self.is_feasible(alpha, hi) {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = hi / 2.0;
        if lo < 1.0 {
            lo = 1.0;
        }
        while hi - lo > 1e-10 * hi {
            let mid = 0.5 * (lo + hi);
            if self.is_feasible(alpha, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Split ratios minimising each task's own delay at an even resource split.
    fn fastest_split(&self) -> Vec<f64> {
        let ids = self.server_tasks();
        let n_all = self.tasks.len().max(1) as f64;
        self.tasks
            .iter()
            .map(|t| {
                if t.direct {
                    return 0.0;
                }
                let fu = self.servers[t.server].cpu_cap / ids[t.server].len().max(1) as f64;
                let fh = self.huav_cap / n_all;
                let slope = t.cycles() / fu - t.bits / t.relay_rate - t.cycles() / fh;
                if slope < 0.0 { 1.0 } else { 0.0 }
            })
            .collect()
    }

    fn clean_alpha(&self, alpha: &[f64]) -> Vec<f64> {
        alpha.iter().zip(&self.tasks).map(|(&a, t)| if t.direct { 0.0 } else { a.clamp(0.0, 1.0) }).collect()
    }

    /// Picks the deadline scale and a starting split that is feasible under it.
    ///
    /// Candidates are tried in order: `warm`, uniform splits, the per-task
    /// fastest split. The scale is 1 if any candidate is feasible; otherwise
    /// the smallest scale over the candidates, with a small safety margin.
    pub fn choose_scale(&self, warm: Option<&[f64]>) -> (f64, Vec<f64>) {
        let n = self.tasks.len();
        let mut cands: Vec<Vec<f64>> = Vec::new();
        if let Some(w) = warm {
            cands.push(self.clean_alpha(w));
        }
        for a in SPLIT_CANDIDATES {
            cands.push(self.clean_alpha(&vec![a; n]));
        }
        cands.push(self.fastest_split());
        if let Some(c) = cands.iter().find(|c| self.is_feasible(c, 1.0)) {
            return (1.0, c.clone());
        }
        let mut best = (f64::INFINITY, cands[0].clone());
        for c in cands {
            let s = self.min_scale_for(&c);
            if s < best.0 {
                best = (s, c);
            }
        }
        (best.0 * (1.0 + SCALE_MARGIN), best.1)
    }

    /// Optimal frequencies for fixed split ratios under the deadline scale.
    pub fn solve_f_given_alpha(&self, alpha: &[f64], scale: f64) -> Result<(Vec<f64>, Vec<f64>), Infeasibility> {
        self.min_huav_demand(alpha, scale)?;
        let alpha = self.clean_alpha(alpha);
        let n = self.tasks.len();
        let works: Vec<Work> = (0..n).map(|i| self.work(i, alpha[i], scale)).collect();
        let groups = self.server_tasks();
        let direct: Vec<usize> = (0..n).filter(|&i| self.tasks[i].direct).collect();
        let mut f_lu = vec![0.0; n];
        let mut f_h = vec![0.0; n];
        let mut prices = vec![0.0; self.servers.len()];

        // Evaluates every processor at H-UAV price `mu`; None if some L-UAV cannot keep up.
        let at_price = |mu: f64, f_lu: &mut [f64], f_h: &mut [f64], prices: &mut [f64]| -> Option<f64> {
            let mut sum_h = 0.0;
            for &i in &direct {
                let fh = h_only(self.k, works[i], mu);
                f_h[i] = fh;
                sum_h += fh;
            }
            for (u, ids) in groups.iter().enumerate() {
                if ids.is_empty() {
                    continue;
                }
                let server = ServerView { k: self.k, sv: &self.servers[u], ids, works: &works };
                let lambda = server.price(mu, prices[u])?;
                prices[u] = lambda;
                for &i in ids {
                    let (fu, fh) = server.task(works[i], lambda, mu).expect("checked in price search");
                    f_lu[i] = fu;
                    f_h[i] = fh;
                    sum_h += fh;
                }
            }
            Some(sum_h)
        };

        let needs_h = works.iter().any(|w| w.b > 0.0);
        if !needs_h {
            at_price(1.0, &mut f_lu, &mut f_h, &mut prices).ok_or_else(|| capacity_violation())?;
            return Ok((f_lu, f_h));
        }
        let sqrt_sum: f64 = works.iter().map(|w| (self.k * w.b).sqrt()).sum();
        let mu0 = (sqrt_sum / self.huav_cap).powi(2).max(1e-300);
        let mut g = |log_mu: f64| -> f64 {
            match at_price(log_mu.exp(), &mut f_lu, &mut f_h, &mut prices) {
                Some(s) => s / self.huav_cap - 1.0,
                None => -1.0,
            }
        };
        let log_mu = decreasing_root(&mut g, mu0.ln(), 1e-13).ok_or_else(|| capacity_violation())?;
        let total = at_price(log_mu.exp(), &mut f_lu, &mut f_h, &mut prices).ok_or_else(|| capacity_violation())?;
        if total > self.huav_cap * (1.0 + 1e-12) {
            return Err(Infeasibility { violations: vec![Violation::HuavCapacity] });
        }
        Ok((f_lu, f_h))
    }

    /// Best split ratios for fixed frequencies; each task independently picks
    /// an end of its deadline-feasible interval.
    pub fn solve_alpha_given_f(
        &self,
        f_lu: &[f64],
        f_h: &[f64],
        scale: f64,
        current: Option<&[f64]>,
    ) -> Result<Vec<f64>, Infeasibility> {
        let mut out = Vec::with_capacity(self.tasks.len());
        let mut violations = Vec::new();
        for (i, t) in self.tasks.iter().enumerate() {
            if t.direct {
                out.push(0.0);
                continue;
            }
            let sv = &self.servers[t.server];
            let (lo, hi) = match self.alpha_interval(i, f_lu[i], f_h[i], scale, current.map(|c| c[i])) {
                Some(iv) => iv,
                None => {
                    violations.push(Violation::AlphaInterval { task: i });
                    out.push(current.map_or(0.0, |c| c[i]));
                    continue;
                }
            };
            let c = t.cycles();
            let relay = if t.bits == 0.0 { 0.0 } else { t.bits / t.relay_rate };
            let coef = self.k * (ratio(c, f_lu[i]) - relay - ratio(c, f_h[i]))
                + sv.weight * (sv.kappa * c * f_lu[i] * f_lu[i] - sv.tx_power * relay);
            out.push(if coef < 0.0 { hi } else { lo });
        }
        if violations.is_empty() { Ok(out) } else { Err(Infeasibility { violations }) }
    }

    /// Deadline-feasible split interval of task `i`; `keep` is always included
    /// to absorb rounding when it was feasible for these frequencies.
    fn alpha_interval(&self, i: usize, f_lu: f64, f_h: f64, scale: f64, keep: Option<f64>) -> Option<(f64, f64)> {
        let t = &self.tasks[i];
        let c = t.cycles();
        let budget = t.deadline * scale;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if c > 0.0 && f_lu <= 0.0 {
            hi = 0.0;
        }
        if c > 0.0 && f_h <= 0.0 {
            lo = 1.0;
        }
        if lo > hi {
            return keep.map(|k| (k, k));
        }
        let delay = |a: f64| self.task_delay(i, a, f_lu, f_h);
        let (d_lo, d_hi) = (delay(lo), delay(hi));
        let (lo, hi) = match (d_lo <= budget, d_hi <= budget) {
            (true, true) => (lo, hi),
            (false, false) => return keep.map(|k| (k, k)),
            // affine in the split: cut at the crossing point
            (true, false) => (lo, lo + (hi - lo) * (budget - d_lo) / (d_hi - d_lo)),
            (false, true) => (hi - (hi - lo) * (budget - d_hi) / (d_lo - d_hi), hi),
        };
        let (lo, hi) = match keep {
            Some(k) => (lo.min(k), hi.max(k)),
            None => (lo, hi),
        };
        Some((lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0)))
    }

    /// Alternates the frequency and split steps from a feasible start.
    pub fn solve(&self, warm: Option<&[f64]>) -> ResourceSolution {
        let n = self.tasks.len();
        if n == 0 {
            return ResourceSolution {
                alpha: vec![],
                f_lu: vec![],
                f_h: vec![],
                objective: 0.0,
                feasible: true,
                iterations: 0,
                deadline_scale: 1.0,
                trace: vec![0.0],
            };
        }
        let (mut scale, mut alpha) = self.choose_scale(warm);
        let (mut f_lu, mut f_h) = loop {
            match self.solve_f_given_alpha(&alpha, scale) {
                Ok(f) => break f,
                Err(_) if scale.is_finite() && scale < 1e12 => scale *= 1.0 + 1e-3,
                Err(e) => panic!("allocation infeasible at every deadline scale: {e}"),
            }
        };
        let mut obj = self.objective(&alpha, &f_lu, &f_h);
        let mut trace = vec![obj];
        let mut rounds = 0;
        while rounds < MAX_ROUNDS {
            rounds += 1;
            let Ok(next_alpha) = self.solve_alpha_given_f(&f_lu, &f_h, scale, Some(&alpha)) else { break };
            let Ok((nf_lu, nf_h)) = self.solve_f_given_alpha(&next_alpha, scale) else { break };
            let next = self.objective(&next_alpha, &nf_lu, &nf_h);
            if next > obj {
                break;
            }
            let gain = obj - next;
            alpha = next_alpha;
            f_lu = nf_lu;
            f_h = nf_h;
            obj = next;
            trace.push(obj);
            if gain <= ROUND_TOL * obj.abs().max(1e-300) {
                break;
            }
        }
        ResourceSolution { alpha, f_lu, f_h, objective: obj, feasible: scale == 1.0, iterations: rounds, deadline_scale: scale, trace }
    }
}

fn ratio(work: f64, f: f64) -> f64 {
    if work == 0.0 { 0.0 } else { work / f }
}

fn capacity_violation() -> Infeasibility {
    Infeasibility { violations: vec![Violation::HuavCapacity] }
}

/// H-UAV frequency of a task with no L-UAV share.
fn h_only(k: f64, w: Work, mu: f64) -> f64 {
    if w.b == 0.0 {
        return 0.0;
    }
    (k * w.b / mu).sqrt().max(w.b / w.s)
}

struct ServerView<'a> {
    k: f64,
    sv: &'a AllocServer,
    ids: &'a [usize],
    works: &'a [Work],
}

impl ServerView<'_> {
    /// Unconstrained-by-deadline L-UAV frequency: positive root of
    /// `2 q κ f³ + (λ/a) f² − k = 0`, capped at the CPU capacity.
    fn stationary(&self, lam_per_work: f64) -> f64 {
        let cap = self.sv.cpu_cap;
        let e = 2.0 * self.sv.weight * self.sv.kappa;
        let p = |f: f64| (e * f + lam_per_work) * f * f - self.k;
        if p(cap) <= 0.0 {
            return cap;
        }
        if self.k == 0.0 {
            return 0.0;
        }
        let b1 = if e > 0.0 { (self.k / e).cbrt() } else { f64::INFINITY };
        let b2 = if lam_per_work > 0.0 { (self.k / lam_per_work).sqrt() } else { f64::INFINITY };
        let mut f = b1.min(b2).min(cap);
        // p is convex and increasing on f > 0: Newton from above is monotone.
        for _ in 0..100 {
            let val = p(f);
            let der = (3.0 * e * f + 2.0 * lam_per_work) * f;
            let next = f - val / der;
            if !(next > 0.0) || !next.is_finite() {
                break;
            }
            if (f - next).abs() <= 1e-14 * f {
                f = next;
                break;
            }
            f = next;
        }
        f
    }

    /// Frequencies of one task at L-UAV price `lam` and H-UAV price `mu`,
    /// including the deadline multiplier; None if the deadline cannot be met.
    fn task(&self, w: Work, lam: f64, mu: f64) -> Option<(f64, f64)> {
        let cap = self.sv.cpu_cap;
        if w.a == 0.0 && w.b == 0.0 {
            return Some((0.0, 0.0));
        }
        if w.s <= 0.0 {
            return None;
        }
        if w.a == 0.0 {
            return Some((0.0, h_only(self.k, w, mu)));
        }
        let need = w.a / w.s;
        if need > cap {
            return None;
        }
        let f0 = self.stationary(lam / w.a);
        if w.b == 0.0 {
            return Some((f0.max(need), 0.0));
        }
        let e = 2.0 * self.sv.weight * self.sv.kappa;
        // effective delay weight k + ν implied by running the L-UAV at f
        let weight_at = |f: f64| self.k.max((e * f + lam / w.a) * f * f);
        let fh_at = |f: f64| (weight_at(f) * w.b / mu).sqrt();
        let slack = |f: f64| w.a / f + w.b / fh_at(f) - w.s;
        let f_lo = f0.max(need);
        let s_lo = slack(f_lo);
        if s_lo <= 0.0 {
            return Some((f_lo, fh_at(f_lo)));
        }
        if w.s <= w.a / cap {
            return None;
        }
        let s_cap = slack(cap);
        if s_cap > 0.0 {
            // L-UAV saturated: the multiplier only raises the H-UAV share.
            return Some((cap, w.b / (w.s - w.a / cap)));
        }
        let br = illinois(slack, Bracket { lo: f_lo, f_lo: s_lo, hi: cap, f_hi: s_cap }, 0.0, 1e-14, 200);
        let f = br.hi;
        Some((f, fh_at(f).max(w.b / (w.s - w.a / f))))
    }

    fn load(&self, lam: f64, mu: f64) -> Option<f64> {
        let mut sum = 0.0;
        for &i in self.ids {
            sum += self.task(self.works[i], lam, mu)?.0;
        }
        Some(sum)
    }

    /// Capacity price making the server's total frequency fit; None if no price does.
    fn price(&self, mu: f64, warm: f64) -> Option<f64> {
        let cap = self.sv.cpu_cap;
        if self.load(0.0, mu)? <= cap {
            return Some(0.0);
        }
        let start = if warm > 0.0 {
            warm
        } else {
            let a_sum: f64 = self.ids.iter().map(|&i| self.works[i].a).sum();
            (self.k * a_sum / (cap * cap)).max(1e-300)
        };
        let mut g = |log_lam: f64| match self.load(log_lam.exp(), mu) {
            Some(s) => s / cap - 1.0,
            None => f64::NAN,
        };
        decreasing_root(&mut g, start.ln(), 1e-13).map(f64::exp)
    }
}

/// For a non-increasing `g` of a log-scaled variable, returns a point where
/// `g ≤ 0` within `tol` of the crossing. NaN values count as infeasible.
fn decreasing_root(g: &mut impl FnMut(f64) -> f64, x0: f64, tol: f64) -> Option<f64> {
    const STEP: f64 = 1.386_294_361_119_890_6; // ln 4
    let v0 = g(x0);
    if v0.is_nan() {
        return None;
    }
    let (mut lo, mut f_lo, mut hi, mut f_hi);
    if v0 > 0.0 {
        (lo, f_lo) = (x0, v0);
        let mut x = x0;
        loop {
            x += STEP;
            let v = g(x);
            if v.is_nan() {
                return None;
            }
            if v <= 0.0 {
                (hi, f_hi) = (x, v);
                break;
            }
            (lo, f_lo) = (x, v);
            if x - x0 > 700.0 {
                return None;
            }
        }
    } else {
        (hi, f_hi) = (x0, v0);
        let mut x = x0;
        loop {
            x -= STEP;
            let v = g(x);
            if v > 0.0 {
                (lo, f_lo) = (x, v);
                break;
            }
            if v.is_nan() {
                return None;
            }
            (hi, f_hi) = (x, v);
            if x0 - x > 700.0 {
                return Some(hi);
            }
        }
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    let br = illinois(
        |x| {
            let v = g(x);
            if v.is_nan() { -1.0 } else { v }
        },
        Bracket { lo, f_lo, hi, f_hi },
        tol,
        0.0,
        200,
    );
    Some(if br.f_hi <= 0.0 { br.hi } else { br.lo })
}
