//! Headless simulated designers.
//!
//! A [`SimulatedEvaluator`] stands in for the human: it scores individuals by
//! how far their displacement is from a target displacement over a fixed
//! sample of mesh vertices and animation times, and picks the closest ones.
//! [`run_scenario`] drives one or more agents through a number of generations,
//! optionally injecting the best visible peer individual every few
//! generations, and records each agent's best error per generation.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use ini::Ini;
use rand::seq::index::sample;

use crate::codec::{CodecConfig, Genome};
use crate::collaboration::{
    MemberSpec, RoomSpec, Session, SessionId, Studio, DEFAULT_VISIBILITY_K,
};
use crate::error::{Error, Result};
use crate::evolution::{GaParams, Individual};
use crate::expression::{displace_unchecked, genome_tree, ExpressionTree, TimeParam, Vertex};
use crate::mesh::{self, Mesh};
use crate::seed;
use crate::snippet;
use crate::space::{ChannelMask, SearchSpace};

pub const SAMPLE_VERTICES: usize = 64;
pub const SAMPLE_TIMES: usize = 8;
pub const DEFAULT_PICKS: usize = 3;
pub const CSV_HEADER: &str = "seed,agent,generation,best_error";

#[derive(Clone, Debug)]
pub struct SimulatedEvaluator {
    target_tree: ExpressionTree,
    target_channels: ChannelMask,
    vertices: Vec<Vertex>,
    times: Vec<TimeParam>,
    targets: Vec<Vertex>,
    picks_per_generation: usize,
}

impl SimulatedEvaluator {
    /// Samples up to 64 distinct vertices of `mesh` (all of them if the mesh
    /// is smaller) and 8 evenly spaced times in `[0, 2π)`.
    pub fn new(
        target_tree: ExpressionTree,
        target_channels: ChannelMask,
        mesh: &Mesh,
        sample_seed: u64,
        picks_per_generation: usize,
    ) -> Result<Self> {
        if target_channels.is_empty() {
            return Err(Error::InvalidMask);
        }
        let n = mesh.vertices().len();
        let mut indices = sample(&mut seed::rng(sample_seed), n, SAMPLE_VERTICES.min(n)).into_vec();
        indices.sort_unstable();
        let vertices: Vec<Vertex> = indices.into_iter().map(|i| mesh.vertices()[i]).collect();
        let times: Vec<TimeParam> = (0..SAMPLE_TIMES)
            .map(|k| TimeParam::new(TAU * k as f64 / SAMPLE_TIMES as f64))
            .collect();
        let targets = times
            .iter()
            .flat_map(|&t| vertices.iter().map(move |v| (v, t)))
            .map(|(v, t)| displace_unchecked(&target_tree, target_channels, v, t))
            .collect();
        Ok(Self {
            target_tree,
            target_channels,
            vertices,
            times,
            targets,
            picks_per_generation,
        })
    }

    pub fn target_tree(&self) -> &ExpressionTree {
        &self.target_tree
    }

    pub fn target_channels(&self) -> ChannelMask {
        self.target_channels
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn times(&self) -> &[TimeParam] {
        &self.times
    }

    /// RMS Euclidean distance between candidate- and target-displaced
    /// sample vertices. The candidate is decoded against its own header.
    pub fn genome_error(&self, genome: &Genome) -> f64 {
        let tree = genome_tree(genome);
        let channels = genome.channels();
        let mut sum = 0.0;
        let mut k = 0;
        for &t in &self.times {
            for v in &self.vertices {
                let d = displace_unchecked(&tree, channels, v, t).distance(&self.targets[k]);
                sum += d * d;
                k += 1;
            }
        }
        (sum / k as f64).sqrt()
    }

    /// Indices of the lowest-error individuals, ties by lower index.
    pub fn picks(&self, errors: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..errors.len()).collect();
        order.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));
        order.truncate(self.picks_per_generation);
        order
    }
}

pub fn deformation_error(candidate: &Individual, eval: &SimulatedEvaluator) -> f64 {
    eval.genome_error(&candidate.genome)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Individual,
    Collaborative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentSpec {
    pub name: String,
    pub space: SearchSpace,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub mode: Mode,
    pub agents: Vec<AgentSpec>,
    pub generations: u64,
    pub inject_every: u64,
    pub seeds: Vec<u64>,
    pub config: CodecConfig,
    pub params: GaParams,
    pub mesh: Mesh,
    pub target_tree: ExpressionTree,
    pub target_channels: ChannelMask,
    pub picks_per_generation: usize,
    pub visibility_k: usize,
}

impl Scenario {
    /// Parses the `key = value` scenario format with one `[agent NAME]`
    /// section per agent.
    ///
    /// ```text
    /// mode = collaborative
    /// generations = 60
    /// inject_every = 5
    /// seeds = 1-20
    /// target = (2 * sin(p.x * 3)) + cos(p.y * 2)
    /// target_channels = x,y
    ///
    /// [agent A]
    /// channels = x
    /// variables = x,t
    /// ```
    ///
    /// `target_genome = <hex>` may replace `target`/`target_channels`; the
    /// genome's own header then selects variables and channels. Any GA
    /// parameter name is accepted as a top-level key.
    pub fn parse(text: &str) -> Result<Scenario> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        let general = ini.general_section();
        let get = |key: &str| general.get(key).map(str::trim);
        let num = |key: &str, default: u64| -> Result<u64> {
            get(key).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| Error::Scenario(format!("bad value '{v}' for {key}")))
            })
        };

        let mode = match get("mode").unwrap_or("collaborative") {
            "individual" => Mode::Individual,
            "collaborative" => Mode::Collaborative,
            other => return Err(Error::Scenario(format!("unknown mode '{other}'"))),
        };
        let config =
            CodecConfig::new(num("depth", u64::from(crate::codec::DEFAULT_DEPTH))? as u32)?;
        let mut params = GaParams::default();
        for key in GaParams::KEYS {
            if let Some(v) = get(key) {
                params.set(key, v)?;
            }
        }
        params.validate()?;

        let mesh_name = get("mesh").unwrap_or("sphere");
        let mesh = mesh::builtin(mesh_name)
            .ok_or_else(|| Error::Scenario(format!("unknown mesh '{mesh_name}'")))?;

        let (target_tree, target_channels) = match (get("target_genome"), get("target")) {
            (Some(hex), None) => {
                let genome = Genome::from_hex(hex, config)?;
                (genome_tree(&genome), genome.channels())
            }
            (None, Some(expr)) => {
                let channels: ChannelMask = get("target_channels")
                    .ok_or_else(|| Error::Scenario("target needs target_channels".into()))?
                    .parse()?;
                (snippet::parse_expression(expr)?, channels)
            }
            _ => {
                return Err(Error::Scenario(
                    "exactly one of target and target_genome is required".into(),
                ))
            }
        };

        let mut agents = Vec::new();
        for (name, props) in ini.iter() {
            let Some(section) = name else { continue };
            let Some(agent) = section.strip_prefix("agent") else {
                return Err(Error::Scenario(format!("unknown section [{section}]")));
            };
            let field = |key: &str| {
                props
                    .get(key)
                    .ok_or_else(|| Error::Scenario(format!("[{section}] is missing {key}")))
            };
            agents.push(AgentSpec {
                name: agent.trim().to_string(),
                space: SearchSpace::parse(field("channels")?, field("variables")?)?,
            });
        }

        let scenario = Scenario {
            mode,
            agents,
            generations: num("generations", 60)?,
            inject_every: num("inject_every", 5)?,
            seeds: parse_seeds(get("seeds").unwrap_or("1"))?,
            config,
            params,
            mesh,
            target_tree,
            target_channels,
            picks_per_generation: num("picks_per_generation", DEFAULT_PICKS as u64)? as usize,
            visibility_k: num("visibility_k", DEFAULT_VISIBILITY_K as u64)? as usize,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::Scenario("no agents".into()));
        }
        if self.mode == Mode::Collaborative && self.agents.len() < 2 {
            return Err(Error::Scenario(
                "collaborative mode needs at least two agents".into(),
            ));
        }
        if self.mode == Mode::Collaborative && self.inject_every == 0 {
            return Err(Error::Scenario("inject_every must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Scenario("no seeds".into()));
        }
        if self.picks_per_generation > self.params.population_size {
            return Err(Error::Scenario("more picks than individuals".into()));
        }
        let mut names: Vec<&str> = self.agents.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.agents.len() {
            return Err(Error::Scenario("duplicate agent name".into()));
        }
        Ok(())
    }

    /// The same scenario with only `agent`, evolving on its own.
    pub fn individual(&self, agent: &str) -> Result<Scenario> {
        let spec = self
            .agents
            .iter()
            .find(|a| a.name == agent)
            .ok_or_else(|| Error::Scenario(format!("no agent '{agent}'")))?;
        Ok(Scenario {
            mode: Mode::Individual,
            agents: vec![spec.clone()],
            ..self.clone()
        })
    }

    pub fn evaluator(&self, seed: u64) -> Result<SimulatedEvaluator> {
        SimulatedEvaluator::new(
            self.target_tree.clone(),
            self.target_channels,
            &self.mesh,
            seed::derive(seed, 0xE7A1),
            self.picks_per_generation,
        )
    }
}

/// `"1-20"`, `"3"` or `"1,5,9"` (ranges may be mixed into lists).
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Scenario(format!("bad seeds '{text}'"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(seeds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub seed: u64,
    pub agent: String,
    pub generation: u64,
    pub best_error: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Metrics {
    pub rows: Vec<MetricRow>,
}

impl Metrics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.seed, r.agent, r.generation, r.best_error
            );
        }
        out
    }

    /// Best error at the last recorded generation, per seed.
    pub fn final_errors(&self, agent: &str) -> BTreeMap<u64, f64> {
        let mut out = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.agent == agent) {
            out.insert(r.seed, r.best_error);
        }
        out
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<Metrics> {
    scenario.validate()?;
    let mut metrics = Metrics::default();
    for &s in &scenario.seeds {
        metrics.rows.extend(run_seed(scenario, s)?);
    }
    Ok(metrics)
}

fn errors_of(session: &Session, eval: &SimulatedEvaluator) -> Vec<f64> {
    session
        .population()
        .individuals()
        .iter()
        .map(|i| deformation_error(i, eval))
        .collect()
}

/// Agents run round-robin: every agent's generation `g` is recorded before
/// any injection, then injections happen in agent order, then every agent
/// selects and steps.
pub fn run_seed(scenario: &Scenario, run_seed: u64) -> Result<Vec<MetricRow>> {
    let eval = scenario.evaluator(run_seed)?;
    let mut studio = Studio::new(scenario.config, run_seed);
    let ids: Vec<SessionId>;
    let mut solo: Vec<Session> = Vec::new();

    match scenario.mode {
        Mode::Collaborative => {
            let mut spec = RoomSpec::new(
                scenario
                    .agents
                    .iter()
                    .map(|a| MemberSpec {
                        name: a.name.clone(),
                        space: a.space,
                    })
                    .collect(),
            );
            spec.params = scenario.params.clone();
            spec.visibility_k = scenario.visibility_k;
            let room = studio.create_room(&spec)?;
            ids = studio.room(room)?.members().to_vec();
        }
        Mode::Individual => {
            // Same seeds as the members of a collaborative room would get.
            let room_seed = seed::room_seed(run_seed, 0);
            for (m, a) in scenario.agents.iter().enumerate() {
                solo.push(Session::new(
                    SessionId(m as u64 + 1),
                    a.name.clone(),
                    a.space,
                    scenario.params.clone(),
                    scenario.config,
                    seed::session_seed(room_seed, m as u64),
                )?);
            }
            ids = solo.iter().map(Session::id).collect();
        }
    }

    let session = |studio: &Studio, solo: &[Session], m: usize| -> Result<Session> {
        match scenario.mode {
            Mode::Collaborative => studio.session(ids[m]).cloned(),
            Mode::Individual => Ok(solo[m].clone()),
        }
    };

    let mut rows = Vec::new();
    let mut record = |generation: u64, m: usize, errors: &[f64]| {
        rows.push(MetricRow {
            seed: run_seed,
            agent: scenario.agents[m].name.clone(),
            generation,
            best_error: errors.iter().copied().fold(f64::INFINITY, f64::min),
        });
    };

    for g in 0..scenario.generations {
        for m in 0..ids.len() {
            record(g, m, &errors_of(&session(&studio, &solo, m)?, &eval));
        }
        let inject_now =
            scenario.mode == Mode::Collaborative && g > 0 && g % scenario.inject_every == 0;
        if inject_now {
            for &host in &ids {
                let sample = studio.peer_sample(host)?;
                let best = sample
                    .iter()
                    .flat_map(|(peer, inds)| inds.iter().map(move |i| (*peer, i)))
                    .map(|(peer, i)| (deformation_error(i, &eval), peer, i.id))
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((_, peer, individual)) = best {
                    studio.inject(host, peer, individual)?;
                }
            }
        }
        for m in 0..ids.len() {
            match scenario.mode {
                Mode::Collaborative => {
                    let picks = eval.picks(&errors_of(studio.session(ids[m])?, &eval));
                    studio.select(ids[m], &picks)?;
                    studio.step(ids[m])?;
                }
                Mode::Individual => {
                    let picks = eval.picks(&errors_of(&solo[m], &eval));
                    solo[m].select(&picks)?;
                    solo[m].step()?;
                }
            }
        }
    }
    for m in 0..ids.len() {
        record(
            scenario.generations,
            m,
            &errors_of(&session(&studio, &solo, m)?, &eval),
        );
    }
    Ok(rows)
}
