//! Discrete gradient-like flow of `tau`: ascend configurations toward a
//! target level, retract whole samples onto superlevel sets, and invert the
//! level-crossing map along a trajectory.
//!
//! The continuous theory wants a global vector field along which `tau`
//! increases at uniform speed wherever no constraint set balances. The
//! numerical version re-solves the ascent LP pointwise (on a loose active
//! band, so constraints swapping activity mid-flow don't cause chattering)
//! and takes explicit Euler steps with a backtracking line search. A step is
//! accepted only if `tau` actually increased at half the certified rate and
//! above a hard speed floor, so monotonicity is enforced, not hoped for.
//!
//! Flows stall exactly where no certified ascent rate survives — at (numeric
//! neighborhoods of) balanced configurations. A stall is therefore a finding
//! about the level interval, not an error: it is confirmed by classifying
//! the terminal configuration under relaxed tolerances and reported in the
//! trajectory status.

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::geometry::{BoxDomain, Configuration};
use crate::stress::{ascent_direction, classify, CertParams, StressError};
use crate::taut::{tau, tau_signed, TautError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Taut(#[from] TautError),
    #[error(transparent)]
    Stress(#[from] StressError),
    #[error("retraction levels must satisfy b > a (got a = {a}, b = {b})")]
    BadLevels { a: f64, b: f64 },
    #[error("input {index} has tau = {tau:.9} below the source level a = {a}")]
    BelowLevel { index: usize, tau: f64, a: f64 },
    #[error("flow hit the iteration cap ({0} steps) in strict mode")]
    IterationCap(usize),
    #[error("crossing level {c} outside the trajectory's tau range [{lo}, {hi}]")]
    CrossingOutOfRange { c: f64, lo: f64, hi: f64 },
}

/// Step-size and tolerance knobs for the flow.
#[derive(Debug, Clone)]
pub struct FlowOpts {
    /// Initial Euler step; also the max-norm cap on any accepted step.
    pub h0: f64,
    /// Minimum accepted increase rate: steps must gain `speed_floor * h`.
    pub speed_floor: f64,
    /// Accepted steps per trajectory before giving up.
    pub max_steps: usize,
    /// Backtracking halvings before declaring a stall.
    pub max_halvings: u32,
    /// Tolerances for the per-step direction LP (loose active band).
    pub direction_params: CertParams,
    /// Relaxed tolerances used to classify a stalled terminal configuration.
    /// A flow gives up while the ascent margin is still above the strict
    /// certificate cutoff, so confirming the stall needs a wider ambiguity
    /// band; these are empirical, not derived.
    pub stall_params: CertParams,
    /// Make hitting `max_steps` an error instead of a trajectory status.
    pub strict_cap: bool,
}

impl FlowOpts {
    pub fn for_domain(domain: &BoxDomain) -> Self {
        let side = domain.shortest_side();
        FlowOpts {
            h0: 0.05 * side,
            speed_floor: 1e-6 * side,
            max_steps: 10_000,
            max_halvings: 40,
            direction_params: CertParams::loose(domain),
            stall_params: CertParams {
                eps_act: 1e-4 * side,
                margin_tol: 1e-4,
                balance_tol: 1e-3 * side,
                ..CertParams::strict(domain)
            },
            strict_cap: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub config: Configuration,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    ReachedTarget,
    /// No certified ascent step survives backtracking; see `stall_balanced`.
    Stalled,
    HitIterationCap,
}

/// An accepted-step history of one flow, `tau` strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub status: TerminalStatus,
    /// For stalled flows: whether the relaxed classification of the terminal
    /// configuration confirmed a balanced (or at least non-regular) point.
    pub stall_balanced: Option<bool>,
}

impl Trajectory {
    pub fn initial(&self) -> &TrajectorySample {
        self.samples.first().expect("trajectories are nonempty")
    }

    pub fn terminal(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories are nonempty")
    }

    pub fn total_time(&self) -> f64 {
        self.terminal().t
    }

    /// One JSON object per line per sample: `{"t":…,"tau":…,"points":[…]}`
    /// with the configuration flattened row-major.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(
                &json!({
                    "t": s.t,
                    "tau": s.tau,
                    "points": s.config.as_flat(),
                })
                .to_string(),
            );
            out.push('\n');
        }
        out
    }
}

/// Flow `config` upward until `tau` reaches `target_tau`.
///
/// Inputs already at or above the target return a zero-length trajectory.
/// Stalling (no certified step survives the line search) is a terminal
/// status, not an error; the stalled configuration is re-classified under
/// `opts.stall_params` and the verdict recorded.
pub fn ascend(
    domain: &BoxDomain,
    config: &Configuration,
    target_tau: f64,
    opts: &FlowOpts,
) -> Result<Trajectory, FlowError> {
    let tau0 = tau(domain, config)?;
    let mut samples = vec![TrajectorySample {
        t: 0.0,
        config: config.clone(),
        tau: tau0,
    }];
    if tau0 >= target_tau {
        return Ok(Trajectory {
            samples,
            status: TerminalStatus::ReachedTarget,
            stall_balanced: None,
        });
    }

    let mut current = config.clone();
    let mut current_tau = tau0;
    let mut t = 0.0;
    for _ in 0..opts.max_steps {
        let Some(cert) = ascent_direction(domain, &current, &opts.direction_params)? else {
            return Ok(stalled(domain, samples, opts));
        };
        let step = |h: f64| -> (Configuration, f64) {
            let moved: Vec<f64> = current
                .as_flat()
                .iter()
                .zip(&cert.direction)
                .map(|(x, v)| x + h * v)
                .collect();
            let candidate =
                Configuration::from_flat(moved, current.n(), current.dim()).expect("same shape");
            let cand_tau = tau_signed(domain, &candidate);
            (candidate, cand_tau)
        };
        let rate = (0.5 * cert.margin).max(opts.speed_floor);
        let mut h = opts.h0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let (candidate, cand_tau) = step(h);
            if cand_tau - current_tau >= rate * h {
                accepted = Some((candidate, cand_tau, h));
                break;
            }
            h *= 0.5;
        }
        let Some((mut next, mut next_tau, mut h)) = accepted else {
            return Ok(stalled(domain, samples, opts));
        };
        if next_tau > target_tau {
            // Clamp the final step onto the target level so trajectories end
            // at tau = target, not somewhere past it.
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if step(mid).1 >= target_tau {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let (clamped, clamped_tau) = step(hi);
            // keep the speed-floor contract; fall back to the full step if
            // tau dipped along the ray (it essentially never does)
            if clamped_tau - current_tau >= opts.speed_floor * hi {
                (next, next_tau, h) = (clamped, clamped_tau, hi);
            }
        }
        t += h;
        current = next;
        current_tau = next_tau;
        samples.push(TrajectorySample {
            t,
            config: current.clone(),
            tau: current_tau,
        });
        if current_tau >= target_tau {
            return Ok(Trajectory {
                samples,
                status: TerminalStatus::ReachedTarget,
                stall_balanced: None,
            });
        }
    }
    if opts.strict_cap {
        return Err(FlowError::IterationCap(opts.max_steps));
    }
    Ok(Trajectory {
        samples,
        status: TerminalStatus::HitIterationCap,
        stall_balanced: None,
    })
}

fn stalled(domain: &BoxDomain, samples: Vec<TrajectorySample>, opts: &FlowOpts) -> Trajectory {
    let terminal = &samples.last().expect("nonempty").config;
    let stall_balanced = match classify(domain, terminal, &opts.stall_params) {
        Ok(c) => Some(!c.is_regular()),
        // inside the relaxed ambiguity band: not certifiably regular
        Err(StressError::Ambiguous { .. }) => Some(true),
        Err(_) => None,
    };
    Trajectory {
        samples,
        status: TerminalStatus::Stalled,
        stall_balanced,
    }
}

/// Outcome of retracting a batch of configurations from level `a` to `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetractionReport {
    /// One trajectory per input, in order.
    pub trajectories: Vec<Trajectory>,
    /// Indices of inputs whose flow stalled below `b` — evidence of a
    /// critical value inside `[a, b]`.
    pub stalled: Vec<usize>,
    pub complete: bool,
}

/// Flow every configuration of a sample of `{tau >= a}` up into
/// `{tau >= b}`; inputs already there are returned unchanged.
///
/// A partial retraction (some flows stalled) is still an `Ok` report with
/// the stalled inputs named. Trajectories run in parallel.
pub fn retract_level(
    domain: &BoxDomain,
    configs: &[Configuration],
    a: f64,
    b: f64,
    opts: &FlowOpts,
) -> Result<RetractionReport, FlowError> {
    if !(b > a) {
        return Err(FlowError::BadLevels { a, b });
    }
    for (index, c) in configs.iter().enumerate() {
        let t = tau(domain, c)?;
        if t < a - domain.abs_tol() {
            return Err(FlowError::BelowLevel { index, tau: t, a });
        }
    }
    let trajectories: Vec<Trajectory> = configs
        .par_iter()
        .map(|c| ascend(domain, c, b, opts))
        .collect::<Result<_, _>>()?;
    let stalled: Vec<usize> = trajectories
        .iter()
        .enumerate()
        .filter(|(_, t)| t.status != TerminalStatus::ReachedTarget)
        .map(|(i, _)| i)
        .collect();
    Ok(RetractionReport {
        complete: stalled.is_empty(),
        trajectories,
        stalled,
    })
}

/// First time the trajectory's `tau` reaches level `c`, by bracketing
/// between samples and bisecting on the linearly interpolated path.
///
/// `c` at or below the initial value clamps to `t = 0`; `c` above the
/// terminal value is out of range.
pub fn crossing_time(
    domain: &BoxDomain,
    traj: &Trajectory,
    c: f64,
) -> Result<f64, FlowError> {
    let first = traj.initial();
    let last = traj.terminal();
    if c < first.tau || c > last.tau {
        return Err(FlowError::CrossingOutOfRange {
            c,
            lo: first.tau,
            hi: last.tau,
        });
    }
    if c == first.tau {
        return Ok(0.0);
    }
    let k = traj
        .samples
        .iter()
        .position(|s| s.tau >= c)
        .expect("c <= last.tau, so some sample reaches it");
    let (before, after) = (&traj.samples[k - 1], &traj.samples[k]);
    let (mut lo, mut hi) = (before.t, after.t);
    let lerp = |t: f64| -> f64 {
        let s = (t - before.t) / (after.t - before.t);
        let coords: Vec<f64> = before
            .config
            .as_flat()
            .iter()
            .zip(after.config.as_flat())
            .map(|(x0, x1)| x0 + s * (x1 - x0))
            .collect();
        let cfg = Configuration::from_flat(coords, before.config.n(), before.config.dim())
            .expect("same shape");
        tau_signed(domain, &cfg)
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if lerp(mid) >= c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist;

    fn cfg(rows: &[&[f64]]) -> Configuration {
        Configuration::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn unit_square() -> BoxDomain {
        BoxDomain::new(vec![1.0, 1.0]).unwrap()
    }

    fn rect() -> BoxDomain {
        BoxDomain::new(vec![1.0, 2.0]).unwrap()
    }

    fn chain() -> Configuration {
        cfg(&[&[0.25, 1.0], &[0.75, 1.0]])
    }

    #[test]
    fn ascend_single_ball() {
        let sq = unit_square();
        let opts = FlowOpts::for_domain(&sq);
        let traj = ascend(&sq, &cfg(&[&[0.1, 0.5]]), 0.3, &opts).unwrap();
        assert_eq!(traj.status, TerminalStatus::ReachedTarget);
        let end = traj.terminal();
        assert!((end.tau - 0.3).abs() < 1e-6);
        assert!((end.config.point(0)[0] - 0.3).abs() < 1e-6);
        assert!((end.config.point(0)[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn ascend_already_at_target() {
        let sq = unit_square();
        let opts = FlowOpts::for_domain(&sq);
        let traj = ascend(&sq, &cfg(&[&[0.5, 0.5]]), 0.5, &opts).unwrap();
        assert_eq!(traj.status, TerminalStatus::ReachedTarget);
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.total_time(), 0.0);
    }

    #[test]
    fn ascend_stalls_at_chain() {
        let r = rect();
        let opts = FlowOpts::for_domain(&r);
        let traj = ascend(&r, &chain(), 0.26, &opts).unwrap();
        assert_eq!(traj.status, TerminalStatus::Stalled);
        assert_eq!(traj.stall_balanced, Some(true));
        assert!((traj.terminal().tau - 0.25).abs() < 1e-12);
    }

    #[test]
    fn accepted_steps_are_monotone_and_bounded() {
        let r = rect();
        let opts = FlowOpts::for_domain(&r);
        let starts = [
            cfg(&[&[0.12, 0.4], &[0.8, 1.7]]),
            cfg(&[&[0.3, 0.31], &[0.52, 1.1]]),
            cfg(&[&[0.41, 0.9]]),
        ];
        for start in &starts {
            let traj = ascend(&r, start, 0.35, &opts).unwrap();
            for pair in traj.samples.windows(2) {
                let dt = pair[1].t - pair[0].t;
                assert!(pair[1].tau - pair[0].tau >= opts.speed_floor * dt);
                let step: f64 = pair[0]
                    .config
                    .as_flat()
                    .iter()
                    .zip(pair[1].config.as_flat())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(step <= opts.h0 + 1e-12);
            }
        }
    }

    #[test]
    fn retract_single_balls_reach_level() {
        let sq = unit_square();
        let opts = FlowOpts::for_domain(&sq);
        let inputs = vec![
            cfg(&[&[0.1, 0.5]]),
            cfg(&[&[0.2, 0.13]]),
            cfg(&[&[0.85, 0.6]]),
            cfg(&[&[0.5, 0.82]]),
        ];
        let report = retract_level(&sq, &inputs, 0.1, 0.4, &opts).unwrap();
        assert!(report.complete);
        assert!(report.stalled.is_empty());
        for traj in &report.trajectories {
            assert!(traj.terminal().tau >= 0.4);
        }
    }

    #[test]
    fn retract_is_identity_above_target() {
        let sq = unit_square();
        let opts = FlowOpts::for_domain(&sq);
        let input = cfg(&[&[0.45, 0.5]]);
        let report = retract_level(&sq, &[input.clone()], 0.1, 0.4, &opts).unwrap();
        assert_eq!(report.trajectories[0].samples.len(), 1);
        assert_eq!(report.trajectories[0].terminal().config, input);
    }

    #[test]
    fn retract_reports_stalls_across_critical_value() {
        let r = rect();
        let opts = FlowOpts::for_domain(&r);
        let inputs = vec![
            chain(),                                  // exactly critical
            cfg(&[&[0.25, 0.6], &[0.75, 1.4]]),       // regular, below b
            cfg(&[&[0.3, 0.5], &[0.7, 1.5]]),         // already above b
        ];
        let report = retract_level(&r, &inputs, 0.24, 0.26, &opts).unwrap();
        assert!(!report.complete);
        assert_eq!(report.stalled, vec![0]);
        assert!(report.trajectories[1].terminal().tau >= 0.26);
        assert_eq!(report.trajectories[2].samples.len(), 1);
        // containment: nothing ever dips below the source level
        for traj in &report.trajectories {
            for s in &traj.samples {
                assert!(s.tau >= 0.24 - r.abs_tol());
            }
        }
        // stalls happen only at (relaxed-)balanced configurations
        assert_eq!(report.trajectories[0].stall_balanced, Some(true));
    }

    #[test]
    fn retract_rejects_bad_levels_and_low_inputs() {
        let sq = unit_square();
        let opts = FlowOpts::for_domain(&sq);
        let c = cfg(&[&[0.3, 0.5]]);
        assert!(matches!(
            retract_level(&sq, &[c.clone()], 0.4, 0.4, &opts),
            Err(FlowError::BadLevels { .. })
        ));
        assert!(matches!(
            retract_level(&sq, &[c], 0.35, 0.4, &opts),
            Err(FlowError::BelowLevel { index: 0, .. })
        ));
    }

    fn linear_trajectory() -> Trajectory {
        Trajectory {
            samples: vec![
                TrajectorySample {
                    t: 0.0,
                    config: cfg(&[&[0.1, 0.5]]),
                    tau: 0.1,
                },
                TrajectorySample {
                    t: 0.4,
                    config: cfg(&[&[0.5, 0.5]]),
                    tau: 0.5,
                },
            ],
            status: TerminalStatus::ReachedTarget,
            stall_balanced: None,
        }
    }

    #[test]
    fn crossing_linear_path() {
        let sq = unit_square();
        let t = crossing_time(&sq, &linear_trajectory(), 0.25).unwrap();
        assert!((t - 0.15).abs() < 1e-9, "t = {t}");
    }

    #[test]
    fn crossing_clamps_at_initial_tau() {
        let sq = unit_square();
        assert_eq!(crossing_time(&sq, &linear_trajectory(), 0.1).unwrap(), 0.0);
    }

    #[test]
    fn crossing_out_of_range() {
        let sq = unit_square();
        assert!(matches!(
            crossing_time(&sq, &linear_trajectory(), 0.6),
            Err(FlowError::CrossingOutOfRange { .. })
        ));
        assert!(matches!(
            crossing_time(&sq, &linear_trajectory(), 0.05),
            Err(FlowError::CrossingOutOfRange { .. })
        ));
    }

    #[test]
    fn crossing_at_ascend_terminal() {
        let sq = unit_square();
        let opts = FlowOpts::for_domain(&sq);
        let traj = ascend(&sq, &cfg(&[&[0.1, 0.5]]), 0.3, &opts).unwrap();
        let c = traj.terminal().tau;
        let t = crossing_time(&sq, &traj, c).unwrap();
        assert!((t - traj.total_time()).abs() < 1e-6);
    }

    #[test]
    fn crossing_monotone_in_c() {
        let r = rect();
        let opts = FlowOpts::for_domain(&r);
        let traj = ascend(&r, &cfg(&[&[0.12, 0.4], &[0.8, 1.7]]), 0.4, &opts).unwrap();
        let (lo, hi) = (traj.initial().tau, traj.terminal().tau);
        let mut prev = 0.0;
        for k in 0..=10 {
            let c = lo + (hi - lo) * k as f64 / 10.0;
            let t = crossing_time(&r, &traj, c).unwrap();
            assert!(t >= prev - 1e-12);
            prev = t;
        }
    }

    #[test]
    fn crossing_stable_under_step_refinement() {
        let sq = unit_square();
        let coarse = FlowOpts::for_domain(&sq);
        let fine = FlowOpts {
            h0: coarse.h0 / 2.0,
            ..coarse.clone()
        };
        let start = cfg(&[&[0.1, 0.5]]);
        let t1 = crossing_time(&sq, &ascend(&sq, &start, 0.3, &coarse).unwrap(), 0.25).unwrap();
        let t2 = crossing_time(&sq, &ascend(&sq, &start, 0.3, &fine).unwrap(), 0.25).unwrap();
        assert!((t1 - t2).abs() <= coarse.h0, "t1 = {t1}, t2 = {t2}");
    }

    #[test]
    fn trajectory_jsonl_roundtrips_fields() {
        let sq = unit_square();
        let opts = FlowOpts::for_domain(&sq);
        let traj = ascend(&sq, &cfg(&[&[0.1, 0.5]]), 0.2, &opts).unwrap();
        let dump = traj.to_jsonl();
        let lines: Vec<&str> = dump.trim().lines().collect();
        assert_eq!(lines.len(), traj.samples.len());
        for (line, sample) in lines.iter().zip(&traj.samples) {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["t"].as_f64().unwrap(), sample.t);
            assert_eq!(v["tau"].as_f64().unwrap(), sample.tau);
            assert_eq!(v["points"].as_array().unwrap().len(), 2);
        }
    }

    /// Flowing away from a near-chain start succeeds once the target sits
    /// below the critical level: the quasi-stalled region lies above it.
    #[test]
    fn ascend_below_threshold_from_tight_start() {
        let r = rect();
        let opts = FlowOpts::for_domain(&r);
        let start = cfg(&[&[0.21, 0.8], &[0.7, 1.3]]);
        let traj = ascend(&r, &start, 0.24, &opts).unwrap();
        assert_eq!(traj.status, TerminalStatus::ReachedTarget);
        // spheres stay disjoint the whole way
        for s in &traj.samples {
            assert!(dist(s.config.point(0), s.config.point(1)) >= 2.0 * s.tau - 1e-9);
        }
    }
}
