//! Seeded Monte Carlo execution of Rule A and Rule B episodes.
//!
//! Every episode draws from its own ChaCha8 stream: the key comes from the
//! run seed and the stream id is the episode index, so an episode's
//! observations depend only on `(seed, index)`. Aggregates are kept as integer
//! sums and histograms, which makes merging exact; summaries are therefore
//! bit-identical however the episodes are split across threads.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob_core::{nb_mean, nb_variance, RewardModel};
use crate::rule_a::{
    classify_outcome, episode_cost, exceedance_exact, success_probability, CostModel, RuleAConfig,
};
use crate::rule_b::{success_prob, RuleBConfig};
use crate::Conclusion;

/// Episodes longer than this are treated as a defect rather than a domain outcome.
pub const OBSERVATION_CAP: u64 = 1_000_000_000;

/// Episodes per work unit in [`simulate`].
pub const DEFAULT_CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Observation {
    Positive,
    Negative,
}

/// Source of reward observations for an episode.
pub trait ObservationStream {
    fn next_observation(&mut self) -> Observation;
}

/// One uniform draw per observation, positive iff `u < p`.
#[derive(Debug, Clone)]
pub struct BernoulliStream<R> {
    rng: R,
    p: f64,
}

impl<R: Rng> BernoulliStream<R> {
    pub fn new(rng: R, model: &RewardModel) -> Self {
        Self { rng, p: model.p() }
    }
}

impl<R: Rng> ObservationStream for BernoulliStream<R> {
    #[inline]
    fn next_observation(&mut self) -> Observation {
        if self.rng.random::<f64>() < self.p {
            Observation::Positive
        } else {
            Observation::Negative
        }
    }
}

/// The substream used for episode `index` of a run seeded with `seed`.
pub fn episode_stream(seed: u64, index: u64, model: &RewardModel) -> BernoulliStream<ChaCha8Rng> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    BernoulliStream::new(rng, model)
}

/// Replays a fixed script of observations, wrapping around at the end.
#[derive(Debug, Clone)]
pub struct ScriptedStream {
    script: Vec<Observation>,
    pos: usize,
}

impl ScriptedStream {
    /// Panics on an empty script.
    pub fn new(script: Vec<Observation>) -> Self {
        assert!(
            !script.is_empty(),
            "scripted stream needs at least one observation"
        );
        Self { script, pos: 0 }
    }

    /// Builds a script from a string of `P`/`N` characters; anything else is ignored.
    pub fn from_pattern(pattern: &str) -> Self {
        let script = pattern
            .chars()
            .filter_map(|c| match c {
                'P' | 'p' => Some(Observation::Positive),
                'N' | 'n' => Some(Observation::Negative),
                _ => None,
            })
            .collect();
        Self::new(script)
    }
}

impl ObservationStream for ScriptedStream {
    fn next_observation(&mut self) -> Observation {
        let obs = self.script[self.pos];
        self.pos = (self.pos + 1) % self.script.len();
        obs
    }
}

/// Record of one simulated episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeOutcome {
    pub positives: u64,
    pub negatives: u64,
    pub observations: u64,
    pub conclusion: Conclusion,
    pub cost: Option<f64>,
}

/// Draws observations until the `r`-th positive.
pub fn run_rule_a_episode<S: ObservationStream + ?Sized>(
    config: &RuleAConfig,
    costs: Option<&CostModel>,
    stream: &mut S,
) -> Result<EpisodeOutcome> {
    run_rule_a_episode_capped(config, costs, stream, OBSERVATION_CAP)
}

fn run_rule_a_episode_capped<S: ObservationStream + ?Sized>(
    config: &RuleAConfig,
    costs: Option<&CostModel>,
    stream: &mut S,
    cap: u64,
) -> Result<EpisodeOutcome> {
    let r = config.r();
    let (mut positives, mut negatives) = (0u64, 0u64);
    while positives < r {
        if positives + negatives >= cap {
            return Err(Error::RunawayEpisode(cap));
        }
        match stream.next_observation() {
            Observation::Positive => positives += 1,
            Observation::Negative => negatives += 1,
        }
    }
    let observations = positives + negatives;
    Ok(EpisodeOutcome {
        positives,
        negatives,
        observations,
        conclusion: classify_outcome(negatives, config),
        cost: costs.map(|c| episode_cost(observations, c)),
    })
}

/// Draws observations until one side scores `h = 2m + 1`.
pub fn run_rule_b_episode<S: ObservationStream + ?Sized>(
    config: &RuleBConfig,
    costs: Option<&CostModel>,
    stream: &mut S,
) -> EpisodeOutcome {
    let h = config.h();
    let (mut positives, mut negatives) = (0u64, 0u64);
    while positives < h && negatives < h {
        match stream.next_observation() {
            Observation::Positive => positives += 1,
            Observation::Negative => negatives += 1,
        }
    }
    let observations = positives + negatives;
    EpisodeOutcome {
        positives,
        negatives,
        observations,
        conclusion: if positives == h {
            Conclusion::Success
        } else {
            Conclusion::Failure
        },
        cost: costs.map(|c| episode_cost(observations, c)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RuleConfig {
    RuleA(RuleAConfig),
    RuleB(RuleBConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    n_episodes: u64,
    seed: u64,
    model: RewardModel,
    rule: RuleConfig,
    bound: Option<u64>,
    cost: Option<CostModel>,
}

impl SimulationConfig {
    pub fn new(model: RewardModel, rule: RuleConfig, n_episodes: u64, seed: u64) -> Result<Self> {
        if n_episodes == 0 {
            return Err(Error::CountTooSmall {
                name: "n_episodes",
                min: 1,
                value: 0,
            });
        }
        Ok(Self {
            n_episodes,
            seed,
            model,
            rule,
            bound: None,
            cost: None,
        })
    }

    /// Tracks how often the negative count exceeds `b`. Rule A only.
    pub fn with_bound(mut self, b: u64) -> Result<Self> {
        if let RuleConfig::RuleB(_) = self.rule {
            return Err(Error::OutOfRange {
                name: "bound",
                value: b as f64,
                range: "unset for Rule B",
            });
        }
        self.bound = Some(b);
        Ok(self)
    }

    pub fn with_cost(mut self, cost: CostModel) -> Self {
        self.cost = Some(cost);
        self
    }

    pub fn n_episodes(&self) -> u64 {
        self.n_episodes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn rule(&self) -> &RuleConfig {
        &self.rule
    }

    pub fn bound(&self) -> Option<u64> {
        self.bound
    }

    pub fn cost(&self) -> Option<&CostModel> {
        self.cost.as_ref()
    }

    fn run_episode(&self, index: u64) -> Result<EpisodeOutcome> {
        let mut stream = episode_stream(self.seed, index, &self.model);
        match &self.rule {
            RuleConfig::RuleA(cfg) => run_rule_a_episode(cfg, self.cost.as_ref(), &mut stream),
            RuleConfig::RuleB(cfg) => Ok(run_rule_b_episode(cfg, self.cost.as_ref(), &mut stream)),
        }
    }
}

/// Exact integer aggregate over a set of episodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Tally {
    episodes: u64,
    sum_negatives: u128,
    sum_sq_negatives: u128,
    sum_observations: u128,
    exceedances: u64,
    successes: u64,
    negatives_histogram: BTreeMap<u64, u64>,
    length_histogram: BTreeMap<u64, u64>,
}

impl Tally {
    fn record(&mut self, outcome: &EpisodeOutcome, bound: Option<u64>) {
        let w = outcome.negatives as u128;
        self.episodes += 1;
        self.sum_negatives += w;
        self.sum_sq_negatives += w * w;
        self.sum_observations += outcome.observations as u128;
        if bound.is_some_and(|b| outcome.negatives > b) {
            self.exceedances += 1;
        }
        if outcome.conclusion == Conclusion::Success {
            self.successes += 1;
        }
        *self
            .negatives_histogram
            .entry(outcome.negatives)
            .or_default() += 1;
        *self
            .length_histogram
            .entry(outcome.observations)
            .or_default() += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        self.episodes += other.episodes;
        self.sum_negatives += other.sum_negatives;
        self.sum_sq_negatives += other.sum_sq_negatives;
        self.sum_observations += other.sum_observations;
        self.exceedances += other.exceedances;
        self.successes += other.successes;
        for (k, v) in other.negatives_histogram {
            *self.negatives_histogram.entry(k).or_default() += v;
        }
        for (k, v) in other.length_histogram {
            *self.length_histogram.entry(k).or_default() += v;
        }
        self
    }
}

fn tally_range(config: &SimulationConfig, range: Range<u64>) -> Result<Tally> {
    let mut tally = Tally::default();
    for index in range {
        let outcome = config.run_episode(index)?;
        tally.record(&outcome, config.bound);
    }
    Ok(tally)
}

/// Analytic values the empirical statistics should converge to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticCounterparts {
    pub mean_negatives: Option<f64>,
    pub var_negatives: Option<f64>,
    pub exceedance: Option<f64>,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub n_episodes: u64,
    pub seed: u64,
    pub empirical_mean_negatives: f64,
    /// Unbiased sample variance (`n - 1` denominator); zero for a single episode.
    pub empirical_var_negatives: f64,
    pub empirical_exceedance: Option<f64>,
    pub empirical_success_rate: f64,
    pub empirical_mean_observations: f64,
    pub mean_cost: Option<f64>,
    pub analytic: AnalyticCounterparts,
    pub negatives_histogram: BTreeMap<u64, u64>,
    pub length_histogram: BTreeMap<u64, u64>,
}

fn analytic_counterparts(config: &SimulationConfig) -> AnalyticCounterparts {
    let model = &config.model;
    match &config.rule {
        RuleConfig::RuleA(cfg) => {
            let spec = cfg.waiting_time();
            AnalyticCounterparts {
                mean_negatives: Some(nb_mean(model, &spec)),
                var_negatives: Some(nb_variance(model, &spec)),
                exceedance: config.bound.map(|b| exceedance_exact(model, cfg, b)),
                success_rate: success_probability(model, cfg),
            }
        }
        // Only the winning side's distribution is available in closed form.
        RuleConfig::RuleB(cfg) => AnalyticCounterparts {
            mean_negatives: None,
            var_negatives: None,
            exceedance: None,
            success_rate: success_prob(cfg, model),
        },
    }
}

fn summarize(config: &SimulationConfig, tally: Tally) -> SimulationSummary {
    let n = tally.episodes;
    let nf = n as f64;
    let var = if n > 1 {
        let n = n as u128;
        let centered = n * tally.sum_sq_negatives - tally.sum_negatives * tally.sum_negatives;
        centered as f64 / (nf * (nf - 1.0))
    } else {
        0.0
    };
    SimulationSummary {
        n_episodes: n,
        seed: config.seed,
        empirical_mean_negatives: tally.sum_negatives as f64 / nf,
        empirical_var_negatives: var,
        empirical_exceedance: config.bound.map(|_| tally.exceedances as f64 / nf),
        empirical_success_rate: tally.successes as f64 / nf,
        empirical_mean_observations: tally.sum_observations as f64 / nf,
        mean_cost: config
            .cost
            .map(|c| c.per_observation() * tally.sum_observations as f64 / nf),
        analytic: analytic_counterparts(config),
        negatives_histogram: tally.negatives_histogram,
        length_histogram: tally.length_histogram,
    }
}

/// Runs every episode of `config` in parallel and aggregates the outcomes.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationSummary> {
    simulate_chunked(config, DEFAULT_CHUNK)
}

/// [`simulate`] with an explicit work-unit size. The result does not depend on it.
pub fn simulate_chunked(config: &SimulationConfig, chunk: u64) -> Result<SimulationSummary> {
    let chunk = chunk.max(1);
    let n = config.n_episodes;
    let tally = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| tally_range(config, c * chunk..n.min((c + 1) * chunk)))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    Ok(summarize(config, tally))
}

/// Single-threaded reference path, episode by episode in index order.
pub fn simulate_sequential(config: &SimulationConfig) -> Result<SimulationSummary> {
    let tally = tally_range(config, 0..config.n_episodes)?;
    Ok(summarize(config, tally))
}
