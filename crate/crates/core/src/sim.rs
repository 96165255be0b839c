//! Round-synchronous execution of a local-readout model as independent agents.
//!
//! Each agent owns a copy of the parameters and its own state. A round has two
//! phases: every agent sends `h · W_msg` to its neighbours, then every agent
//! sums its inbox (ascending sender id) and applies the GRU update. After the
//! final round each agent reads out its own estimate.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::sync::mpsc;
use std::sync::Barrier;

use crate::graph::{Graph, GraphError};
use crate::model::{aggregate, gru_cell, initial_state, outgoing_message, readout_local, ModelParams};
use crate::numfmt::round_trip;
use crate::spectrum::algebraic_connectivity;

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub sender: usize,
    pub payload: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Agent {
    id: usize,
    params: ModelParams,
    state: Vec<f64>,
    inbox: Vec<Envelope>,
}

impl Agent {
    pub fn new(id: usize, params: ModelParams) -> Self {
        let state = initial_state(1, params.hidden).row(0).to_vec();
        Self {
            id,
            params,
            state,
            inbox: Vec::new(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn inbox_len(&self) -> usize {
        self.inbox.len()
    }

    /// The payload this agent broadcasts to its neighbours this round.
    pub fn compose_message(&self) -> Vec<f64> {
        outgoing_message(&self.params, &self.state)
    }

    pub fn receive(&mut self, sender: usize, payload: Vec<f64>) {
        self.inbox.push(Envelope { sender, payload });
    }

    /// Consumes the inbox and advances the state by one GRU step.
    pub fn update(&mut self) {
        self.inbox.sort_by_key(|e| e.sender);
        let message = aggregate(self.params.hidden, self.inbox.iter().map(|e| e.payload.as_slice()));
        self.inbox.clear();
        let (next, _) = gru_cell(&self.params.gru, &self.state, &message);
        self.state = next;
    }

    pub fn estimate(&self) -> f64 {
        readout_local(&self.params, &self.state)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MessageRecord {
    pub sender: usize,
    pub receiver: usize,
    pub payload: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub messages: Vec<MessageRecord>,
    /// Agent states after this round's update, indexed by agent id.
    pub states: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundTrace {
    pub rounds: Vec<RoundRecord>,
}

impl RoundTrace {
    pub fn message_count(&self) -> usize {
        self.rounds.iter().map(|r| r.messages.len()).sum()
    }

    /// `round,sender,receiver,p0,...,p{H-1}`, one row per delivered message.
    pub fn to_csv(&self) -> String {
        let width = self
            .rounds
            .iter()
            .flat_map(|r| r.messages.first())
            .map(|m| m.payload.len())
            .next()
            .unwrap_or(0);
        let mut out = String::from("round,sender,receiver");
        for k in 0..width {
            write!(out, ",p{k}").expect("write to String");
        }
        out.push('\n');
        for r in &self.rounds {
            for m in &r.messages {
                write!(out, "{},{},{}", r.round, m.sender, m.receiver).expect("write to String");
                for &x in &m.payload {
                    write!(out, ",{}", round_trip(x)).expect("write to String");
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    /// Per-agent estimates, indexed by agent id.
    pub estimates: Vec<f64>,
    pub trace: RoundTrace,
}

/// Runs `rounds` synchronous rounds with reliable delivery on every edge.
pub fn run_simulation(params: &ModelParams, g: &Graph, rounds: usize) -> SimulationResult {
    simulate(params, g, rounds, &BTreeSet::new(), usize::MAX)
}

/// Like [`run_simulation`], but the listed edges deliver nothing from round
/// `from_round` (1-based) onward.
pub fn run_simulation_with_drop(
    params: &ModelParams,
    g: &Graph,
    rounds: usize,
    drop_edges: &[(usize, usize)],
    from_round: usize,
) -> Result<SimulationResult, GraphError> {
    let mut dropped = BTreeSet::new();
    for &(a, b) in drop_edges {
        if !g.has_edge(a, b) {
            return Err(GraphError::MissingEdge(a, b));
        }
        dropped.insert((a.min(b), a.max(b)));
    }
    Ok(simulate(params, g, rounds, &dropped, from_round))
}

fn simulate(
    params: &ModelParams,
    g: &Graph,
    rounds: usize,
    dropped: &BTreeSet<(usize, usize)>,
    from_round: usize,
) -> SimulationResult {
    let n = g.node_count();
    let mut agents: Vec<Agent> = (0..n).map(|id| Agent::new(id, params.clone())).collect();
    let mut trace = RoundTrace::default();

    for round in 1..=rounds {
        // send phase: every payload is computed before any agent updates
        let outgoing: Vec<Vec<f64>> = agents.iter().map(Agent::compose_message).collect();
        let mut messages = Vec::with_capacity(2 * g.edge_count());
        for sender in 0..n {
            for &receiver in g.neighbors(sender) {
                let key = (sender.min(receiver), sender.max(receiver));
                if round >= from_round && dropped.contains(&key) {
                    continue;
                }
                agents[receiver].receive(sender, outgoing[sender].clone());
                messages.push(MessageRecord {
                    sender,
                    receiver,
                    payload: outgoing[sender].clone(),
                });
            }
        }
        // update phase
        for agent in &mut agents {
            agent.update();
        }
        trace.rounds.push(RoundRecord {
            round,
            messages,
            states: agents.iter().map(|a| a.state.clone()).collect(),
        });
    }

    SimulationResult {
        estimates: agents.iter().map(Agent::estimate).collect(),
        trace,
    }
}

/// One OS thread per agent, with a barrier between the send and update
/// phases of each round. Produces the same estimates as [`run_simulation`].
pub fn run_simulation_threaded(params: &ModelParams, g: &Graph, rounds: usize) -> Vec<f64> {
    let n = g.node_count();
    let (senders, receivers): (Vec<_>, Vec<_>) = (0..n).map(|_| mpsc::channel::<(usize, usize, Vec<f64>)>()).unzip();
    let barrier = Barrier::new(n);

    std::thread::scope(|scope| {
        let handles: Vec<_> = receivers
            .into_iter()
            .enumerate()
            .map(|(id, inbox_rx)| {
                let neighbours: Vec<_> = g.neighbors(id).iter().map(|&w| (w, senders[w].clone())).collect();
                let barrier = &barrier;
                let mut agent = Agent::new(id, params.clone());
                scope.spawn(move || {
                    for round in 1..=rounds {
                        let payload = agent.compose_message();
                        for (_, tx) in &neighbours {
                            tx.send((round, id, payload.clone())).expect("receiver alive");
                        }
                        barrier.wait();
                        for _ in 0..neighbours.len() {
                            let (r, sender, payload) = inbox_rx.recv().expect("sender alive");
                            debug_assert_eq!(r, round);
                            agent.receive(sender, payload);
                        }
                        agent.update();
                        barrier.wait();
                    }
                    agent.estimate()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("agent thread panicked")).collect()
    })
}

/// Per-node estimates next to the true value, for a single graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Figure1Report {
    pub lambda2: f64,
    pub estimates: Vec<f64>,
}

impl Figure1Report {
    pub fn abs_errors(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| (e - self.lambda2).abs()).collect()
    }

    /// `node,estimate,abs_error`: a `true` row with λ₂, then one row per node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,estimate,abs_error\n");
        writeln!(out, "true,{},0", round_trip(self.lambda2)).expect("write to String");
        for (v, (e, err)) in self.estimates.iter().zip(self.abs_errors()).enumerate() {
            writeln!(out, "{v},{},{}", round_trip(*e), round_trip(err)).expect("write to String");
        }
        out
    }
}

impl fmt::Display for Figure1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "true lambda2 = {:.2}", self.lambda2)?;
        for (v, (e, err)) in self.estimates.iter().zip(self.abs_errors()).enumerate() {
            writeln!(f, "  node {v:>2}: estimate {e:.2}  |error| {err:.2}")?;
        }
        Ok(())
    }
}

pub fn demo_figure1(params: &ModelParams, g: &Graph, rounds: usize) -> Figure1Report {
    Figure1Report {
        lambda2: algebraic_connectivity(g),
        estimates: run_simulation(params, g, rounds).estimates,
    }
}
