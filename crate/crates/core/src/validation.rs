//! Randomized property suite.
//!
//! Each case is an [`Instance`] generated from `(seed, case)`: a random
//! connected graph, a mixed quadratic/log profile, a handful of states and
//! the random inputs of the probes. Instances are self-contained, so a
//! serialized failing case replays exactly.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::analysis::{check_spc, global_waterfill, is_nash, SIMULATION_NASH_TOL};
use crate::error::Error;
use crate::field::{DynamicsKind, FieldValue, VectorField};
use crate::game::PopulationGame;
use crate::graph::{NetworkTopology, FLOW_SUPPORT_TOL};
use crate::integrator::{simulate, simulate_with_field, SimulationConfig, Trajectory};
use crate::nbrd::{self, StopRule};
use crate::nrpm::{self, Reallocation};
use crate::payoff::{PayoffFunction, PayoffProfile};
use crate::state::PopulationState;
use crate::{oracle, random, ssd};

pub const MIN_NODES: usize = 3;
pub const MAX_NODES: usize = 6;
const EXTRA_EDGE_PROB: f64 = 0.4;
const DENSE_STATES: usize = 4;
const SPARSE_STATES: usize = 4;
const PROBE_STARTS: usize = 10;

/// Deliberate defects used to check that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Invert the waterfilling stop test.
    WaterfillStop,
}

impl Mutation {
    pub fn name(self) -> &'static str {
        match self {
            Self::WaterfillStop => "waterfill-stop",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "waterfill-stop" => Some(Self::WaterfillStop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub seed: u64,
    pub case: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<Mutation>,
    pub nodes: usize,
    /// 1-based node labels.
    pub edges: Vec<[usize; 2]>,
    pub payoffs: Vec<PayoffFunction>,
    pub states: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    /// Node whose best response is re-solved from `probe_starts`.
    pub probe_node: usize,
    pub probe_starts: Vec<Vec<f64>>,
}

impl Instance {
    pub fn generate(seed: u64, case: u64) -> Self {
        let mut rng = random::instance_rng(seed, case);
        let nodes = rng.random_range(MIN_NODES..=MAX_NODES);
        let topo = random::connected_graph(&mut rng, nodes, EXTRA_EDGE_PROB);
        let profile = random::mixed_profile(&mut rng, nodes);
        let mut states: Vec<Vec<f64>> = (0..DENSE_STATES)
            .map(|_| random::state(&mut rng, nodes).into_inner())
            .collect();
        states.extend((0..SPARSE_STATES).map(|_| random::sparse_state(&mut rng, nodes, 0.5).into_inner()));
        let x0 = random::state(&mut rng, nodes).into_inner();
        let probe_node = (0..nodes)
            .max_by(|&a, &b| states[0][a].total_cmp(&states[0][b]))
            .expect("nonempty");
        let width = topo.degree(probe_node) + 1;
        let probe_starts = (0..PROBE_STARTS)
            .map(|_| (0..width).map(|_| rng.random::<f64>()).collect())
            .collect();
        Self {
            seed,
            case,
            mutation: None,
            nodes,
            edges: topo.edges().iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
            payoffs: profile.functions().to_vec(),
            states,
            x0,
            probe_node,
            probe_starts,
        }
    }

    pub fn with_mutation(mut self, mutation: Option<Mutation>) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn game(&self) -> Result<PopulationGame, Error> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let topo = NetworkTopology::from_one_based(self.nodes, &edges)?;
        PopulationGame::new(topo, PayoffProfile::new(self.payoffs.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub property: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub seed: u64,
    pub case: u64,
    pub outcomes: Vec<PropertyOutcome>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

type Check = Result<(), String>;

fn ensure(cond: bool, detail: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(detail())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

/// Runs every property on one instance.
pub fn run_instance(instance: &Instance) -> CaseReport {
    let mut outcomes = Vec::new();
    let mut record = |property: &'static str, check: Check| {
        outcomes.push(PropertyOutcome {
            property,
            passed: check.is_ok(),
            detail: check.err(),
        })
    };
    match Setup::new(instance) {
        Ok(s) => {
            record("graph.incidence", s.incidence());
            record("ssd.spc", s.spc(DynamicsKind::Ssd));
            record("ssd.quadrature", s.ssd_quadrature());
            record("ssd.acyclic", s.acyclic(DynamicsKind::Ssd));
            record("ssd.equilibria", s.equilibria(DynamicsKind::Ssd));
            record("nbrd.kkt", s.nbrd_kkt());
            record("nbrd.oracle", s.nbrd_oracle());
            record("nbrd.uniqueness", s.nbrd_uniqueness());
            record("nbrd.spc", s.spc(DynamicsKind::Nbrd));
            record("nbrd.acyclic", s.acyclic(DynamicsKind::Nbrd));
            record("nbrd.equilibria", s.equilibria(DynamicsKind::Nbrd));
            let solves = s.nrpm_solves();
            record("nrpm.kkt", s.nrpm_kkt(&solves));
            record("nrpm.utility", s.nrpm_utility(&solves));
            record("nrpm.ordering", s.nrpm_ordering(&solves));
            record("nrpm.support-pattern", s.nrpm_support(&solves));
            record("nrpm.uniqueness", s.nrpm_uniqueness(&solves));
            record("nrpm.equilibria", s.equilibria(DynamicsKind::Nrpm));
            record("analysis.waterfill-nash", s.waterfill_nash());
            record("analysis.waterfill-optimal", s.waterfill_optimal());
            for kind in DynamicsKind::ALL {
                let (invariants, convergence) = s.simulation(kind);
                record(simulation_name(kind, false), invariants);
                record(simulation_name(kind, true), convergence);
            }
        }
        Err(e) => record("instance", Err(e)),
    }
    CaseReport {
        seed: instance.seed,
        case: instance.case,
        outcomes,
    }
}

fn simulation_name(kind: DynamicsKind, convergence: bool) -> &'static str {
    match (kind, convergence) {
        (DynamicsKind::Ssd, false) => "integrator.ssd.invariants",
        (DynamicsKind::Ssd, true) => "integrator.ssd.convergence",
        (DynamicsKind::Nbrd, false) => "integrator.nbrd.invariants",
        (DynamicsKind::Nbrd, true) => "integrator.nbrd.convergence",
        (DynamicsKind::Nrpm, false) => "integrator.nrpm.invariants",
        (DynamicsKind::Nrpm, true) => "integrator.nrpm.convergence",
    }
}

struct Setup<'a> {
    instance: &'a Instance,
    game: PopulationGame,
    states: Vec<PopulationState>,
    rule: StopRule,
}

impl<'a> Setup<'a> {
    fn new(instance: &'a Instance) -> Result<Self, String> {
        let game = instance.game().map_err(err)?;
        let states = instance
            .states
            .iter()
            .chain(std::iter::once(&instance.x0))
            .map(|x| PopulationState::normalized(x.clone()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        if states.iter().any(|x| x.len() != game.node_count()) || instance.probe_node >= game.node_count() {
            return Err("state or probe node does not match the graph".into());
        }
        let rule = match instance.mutation {
            Some(Mutation::WaterfillStop) => StopRule::Inverted,
            None => StopRule::Standard,
        };
        Ok(Self {
            instance,
            game,
            states,
            rule,
        })
    }

    fn sample_states(&self) -> &[PopulationState] {
        &self.states[..self.states.len() - 1]
    }

    fn field(&self, kind: DynamicsKind, x: &PopulationState) -> Result<FieldValue, Error> {
        match kind {
            DynamicsKind::Ssd => ssd::field(&self.game, x),
            DynamicsKind::Nbrd => nbrd::field_with_rule(&self.game, x, self.rule),
            DynamicsKind::Nrpm => nrpm::field(&self.game, x, None).map(|(f, _)| f),
        }
    }

    fn incidence(&self) -> Check {
        let topo = self.game.topology();
        ensure(topo.arc_count() == 2 * topo.edges().len(), || "arc count".into())?;
        let a = topo.incidence_matrix();
        for (m, &(i, j)) in topo.arcs().iter().enumerate() {
            let column: Vec<f64> = a.iter().map(|row| row[m]).collect();
            let ok = column.iter().sum::<f64>() == 0.0
                && column[i] == -1.0
                && column[j] == 1.0
                && column.iter().filter(|&&v| v != 0.0).count() == 2
                && topo.has_arc(j, i);
            ensure(ok, || format!("column for arc ({}, {})", i + 1, j + 1))?;
        }
        Ok(())
    }

    fn spc(&self, kind: DynamicsKind) -> Check {
        for x in self.sample_states() {
            let f = self.field(kind, x).map_err(err)?;
            let r = check_spc(&self.game, x, &f.delta, 1e-12);
            ensure(r.holds, || {
                format!(
                    "{kind} flow violates positive correlation on {:?} at {x:?}",
                    one_based(&r.violations)
                )
            })?;
        }
        Ok(())
    }

    fn acyclic(&self, kind: DynamicsKind) -> Check {
        for x in self.sample_states() {
            let f = self.field(kind, x).map_err(err)?;
            let g = self.game.topology().support_flow_graph(&f.delta, FLOW_SUPPORT_TOL);
            ensure(g.acyclic, || format!("{kind} support flow has a cycle at {x:?}"))?;
        }
        Ok(())
    }

    fn ssd_quadrature(&self) -> Check {
        for x in self.sample_states() {
            for &(i, j) in self.game.topology().arcs() {
                let closed = ssd::outflow(&self.game, x, i, j).map_err(err)?;
                let quad = oracle::ssd_outflow_quadrature(&self.game, x, i, j, 1e-12);
                ensure((closed - quad).abs() <= 1e-8, || {
                    format!("arc ({}, {}): closed form {closed}, quadrature {quad}", i + 1, j + 1)
                })?;
            }
        }
        Ok(())
    }

    /// Residual at Nash points and at the sample states agrees with the
    /// Nash test.
    fn equilibria(&self, kind: DynamicsKind) -> Check {
        let zero_tol = if kind == DynamicsKind::Nrpm { 1e-8 } else { 1e-10 };
        let ne = global_waterfill(self.game.profile()).map_err(err)?;
        let ne = PopulationState::normalized(ne.x).map_err(err)?;
        for x in std::iter::once(&ne).chain(self.sample_states()) {
            let residual = self.field(kind, x).map_err(err)?.residual();
            let nash = is_nash(&self.game, x, 1e-8).is_nash;
            ensure((residual <= zero_tol) == nash, || {
                format!("{kind} residual {residual} but is_nash = {nash} at {x:?}")
            })?;
        }
        Ok(())
    }

    fn nbrd_kkt(&self) -> Check {
        for x in self.sample_states() {
            for i in 0..self.game.node_count() {
                let br = nbrd::solve_with_rule(&self.game, x, i, self.rule).map_err(err)?;
                let r = nbrd::verify_kkt(&self.game, x, &br).map_err(err)?;
                ensure(r <= nbrd::KKT_TOL, || format!("node {} KKT residual {r}", i + 1))?;
            }
        }
        Ok(())
    }

    fn nbrd_oracle(&self) -> Check {
        for x in self.sample_states() {
            for i in 0..self.game.node_count() {
                let greedy = nbrd::solve_with_rule(&self.game, x, i, self.rule).map_err(err)?;
                let oracle = nbrd::enumerate_supports(&self.game, x, i).map_err(err)?;
                let gap = allocation_gap(&greedy.allocations, &oracle.allocations);
                ensure(gap <= 1e-9, || {
                    format!("node {} differs from enumeration by {gap}", i + 1)
                })?;
            }
        }
        Ok(())
    }

    fn nbrd_uniqueness(&self) -> Check {
        let x = &self.states[0];
        let i = self.instance.probe_node;
        let br = nbrd::solve_with_rule(&self.game, x, i, self.rule).map_err(err)?;
        for start in &self.instance.probe_starts {
            let pg =
                oracle::best_response_projected_gradient(&self.game, x, i, start, 1e-14, 1_000_000).map_err(err)?;
            let gap = allocation_gap(&br.allocations, &pg);
            ensure(gap <= 1e-7, || format!("node {} re-solve differs by {gap}", i + 1))?;
        }
        Ok(())
    }

    fn nrpm_solves(&self) -> Vec<Result<Reallocation, Error>> {
        self.sample_states()
            .iter()
            .map(|x| nrpm::solve(&self.game, x, None))
            .collect()
    }

    fn each_solve(
        &self,
        solves: &[Result<Reallocation, Error>],
        mut f: impl FnMut(&PopulationState, &Reallocation) -> Check,
    ) -> Check {
        for (x, r) in self.sample_states().iter().zip(solves) {
            let r = r.as_ref().map_err(|e| e.to_string())?;
            f(x, r)?;
        }
        Ok(())
    }

    fn nrpm_kkt(&self, solves: &[Result<Reallocation, Error>]) -> Check {
        self.each_solve(solves, |x, r| {
            ensure(r.kkt_residual <= 1e-8, || {
                format!("KKT residual {} at {x:?}", r.kkt_residual)
            })
        })
    }

    fn nrpm_utility(&self, solves: &[Result<Reallocation, Error>]) -> Check {
        self.each_solve(solves, |x, r| {
            let before = self.game.social_utility(x);
            ensure(r.objective >= before - 1e-12, || {
                format!("U fell from {before} to {}", r.objective)
            })
        })
    }

    fn nrpm_ordering(&self, solves: &[Result<Reallocation, Error>]) -> Check {
        self.each_solve(solves, |_, r| {
            let v = r.ordering_violation(&self.game, 1e-7);
            ensure(v <= 1e-6, || format!("flow toward a worse node by {v}"))
        })
    }

    fn nrpm_support(&self, solves: &[Result<Reallocation, Error>]) -> Check {
        self.each_solve(solves, |x, r| {
            ensure(nrpm::verify_support_pattern(&self.game, x, r), || {
                format!("support pattern does not reproduce z at {x:?}")
            })
        })
    }

    /// Re-solves each state warm-started from every other state's optimizer.
    fn nrpm_uniqueness(&self, solves: &[Result<Reallocation, Error>]) -> Check {
        let solved: Vec<&Reallocation> = solves
            .iter()
            .map(|r| r.as_ref().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        for (k, x) in self.sample_states().iter().enumerate() {
            for (m, warm) in solved.iter().enumerate() {
                if m == k {
                    continue;
                }
                let r = nrpm::solve(&self.game, x, Some(warm)).map_err(err)?;
                let gap = max_gap(&r.z, &solved[k].z);
                ensure(gap <= 1e-6, || format!("z differs by {gap} with warm start {m}"))?;
            }
        }
        Ok(())
    }

    fn waterfill_nash(&self) -> Check {
        let ne = global_waterfill(self.game.profile()).map_err(err)?;
        let r = is_nash(&self.game, &ne.x, 1e-10);
        ensure(r.is_nash, || {
            format!("global optimum {:?} violates by {}", ne.x, r.worst_violation)
        })
    }

    fn waterfill_optimal(&self) -> Check {
        let ne = global_waterfill(self.game.profile()).map_err(err)?;
        let best = self.game.social_utility(&ne.x);
        for x in &self.states {
            let u = self.game.social_utility(x);
            ensure(best >= u - 1e-12, || {
                format!("U = {u} at {x:?} beats the optimum {best}")
            })?;
        }
        Ok(())
    }

    fn simulation(&self, kind: DynamicsKind) -> (Check, Check) {
        let x0 = &self.states[self.states.len() - 1];
        let config = SimulationConfig::new(kind);
        let traj = match (kind, self.rule) {
            (DynamicsKind::Nbrd, StopRule::Inverted) => {
                let mut field = MutatedNbrd(&self.game);
                simulate_with_field(&self.game, &mut field, x0, &config)
            }
            _ => simulate(&self.game, x0, &config),
        };
        let traj = match traj {
            Ok(t) => t,
            Err(e) => return (Err(e.to_string()), Err(e.to_string())),
        };
        let invariants = check_trajectory(kind, &traj);
        let end = traj.final_state();
        let nash = is_nash(&self.game, end, SIMULATION_NASH_TOL);
        let convergence = ensure(traj.converged && traj.final_residual() < 1e-6 && nash.is_nash, || {
            format!(
                "t = {}, residual {}, Nash violation {}",
                traj.final_time(),
                traj.final_residual(),
                nash.worst_violation
            )
        });
        (invariants, convergence)
    }
}

/// Simplex invariance, monotone utility and (for the positively correlated
/// dynamics) nonpositive dissipation along a trajectory.
pub fn check_trajectory(kind: DynamicsKind, traj: &Trajectory) -> Result<(), String> {
    for (k, x) in traj.states.iter().enumerate() {
        let sum: f64 = x.iter().sum();
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        ensure((sum - 1.0).abs() <= 1e-9 && min >= -1e-10, || {
            format!("step {k}: sum {sum}, min {min}")
        })?;
    }
    for (k, w) in traj.utilities.windows(2).enumerate() {
        ensure(w[1] >= w[0] - 1e-9, || {
            format!("step {k}: U fell from {} to {}", w[0], w[1])
        })?;
    }
    if kind.is_positively_correlated() {
        for (k, &d) in traj.dissipation.iter().enumerate() {
            ensure(d <= 1e-12, || format!("step {k}: dissipation {d}"))?;
        }
    }
    Ok(())
}

struct MutatedNbrd<'a>(&'a PopulationGame);

impl VectorField for MutatedNbrd<'_> {
    fn evaluate(&mut self, x: &PopulationState) -> Result<FieldValue, Error> {
        nbrd::field_with_rule(self.0, x, StopRule::Inverted)
    }
}

fn one_based(arcs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    arcs.iter().map(|&(i, j)| (i + 1, j + 1)).collect()
}

fn allocation_gap(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    if a.len() != b.len() || a.iter().zip(b).any(|(p, q)| p.0 != q.0) {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p.1 - q.1).abs()))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// Per-property tally over a set of cases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertySummary {
    pub property: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// `(case, detail)` of the first failing case.
    pub first_failure: Option<(u64, String)>,
}

pub fn summarize(reports: &[CaseReport]) -> Vec<PropertySummary> {
    let mut out: Vec<PropertySummary> = Vec::new();
    for report in reports {
        for o in &report.outcomes {
            let idx = match out.iter().position(|s| s.property == o.property) {
                Some(k) => k,
                None => {
                    out.push(PropertySummary {
                        property: o.property,
                        passed: 0,
                        failed: 0,
                        first_failure: None,
                    });
                    out.len() - 1
                }
            };
            let s = &mut out[idx];
            if o.passed {
                s.passed += 1;
            } else {
                s.failed += 1;
                if s.first_failure.is_none() {
                    s.first_failure = Some((report.case, o.detail.clone().unwrap_or_default()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(Instance::generate(42, 3), Instance::generate(42, 3));
        assert_ne!(Instance::generate(42, 3), Instance::generate(42, 4));
        let i = Instance::generate(5, 0);
        assert!((MIN_NODES..=MAX_NODES).contains(&i.nodes));
        assert!(i.game().is_ok());
    }

    #[test]
    fn mutation_names() {
        assert_eq!(Mutation::parse("waterfill-stop"), Some(Mutation::WaterfillStop));
        assert_eq!(Mutation::WaterfillStop.name(), "waterfill-stop");
        assert_eq!(Mutation::parse("other"), None);
    }

    #[test]
    fn summary_counts() {
        let reports = vec![
            CaseReport {
                seed: 1,
                case: 0,
                outcomes: vec![PropertyOutcome {
                    property: "a",
                    passed: true,
                    detail: None,
                }],
            },
            CaseReport {
                seed: 1,
                case: 1,
                outcomes: vec![PropertyOutcome {
                    property: "a",
                    passed: false,
                    detail: Some("x".into()),
                }],
            },
        ];
        let s = summarize(&reports);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].passed, s[0].failed), (1, 1));
        assert_eq!(s[0].first_failure, Some((1, "x".into())));
    }
}
