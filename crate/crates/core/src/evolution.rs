//! Per-session interactive GA.
//!
//! A generation step keeps the user's picks unchanged (elitism) and fills
//! the rest of the population by roulette selection on linearly scaled
//! fitness, one-point crossover and per-bit mutation. Crossover points and
//! mutation only touch the body bits; an offspring header is the bitwise OR
//! of its parents' headers, so a population's search space can only grow.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{decode, encode, BitString, CodecConfig, Genome, HEADER_BITS};
use crate::error::{Error, Result};
use crate::seed;
use crate::space::SearchSpace;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Native,
    Injected { origin: u64, bias_remaining: u32 },
}

impl Provenance {
    pub fn bias_remaining(&self) -> u32 {
        match self {
            Provenance::Native => 0,
            Provenance::Injected { bias_remaining, .. } => *bias_remaining,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub id: u64,
    pub genome: Genome,
    pub fitness: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population_size: usize,
    pub crossover_rate: f64,
    /// `None` means one expected flip per genome (`1 / total_bits`).
    pub mutation_rate: Option<f64>,
    pub scaling_c: f64,
    pub pick_fitness: f64,
    pub floor_fitness: f64,
    pub bias_generations: u32,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 9,
            crossover_rate: 0.9,
            mutation_rate: None,
            scaling_c: 2.0,
            pick_fitness: 1.0,
            floor_fitness: 0.1,
            bias_generations: 2,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.population_size == 0 {
            return bad("population_size must be positive");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must lie in [0, 1]");
        }
        if let Some(rate) = self.mutation_rate {
            if !(0.0..=1.0).contains(&rate) {
                return bad("mutation_rate must lie in [0, 1]");
            }
        }
        if self.scaling_c.is_nan() || self.scaling_c <= 1.0 || !self.scaling_c.is_finite() {
            return bad("scaling_c must be greater than 1");
        }
        if !(self.floor_fitness > 0.0
            && self.pick_fitness > self.floor_fitness
            && self.pick_fitness.is_finite())
        {
            return bad("fitness levels must satisfy pick_fitness > floor_fitness > 0");
        }
        Ok(())
    }

    pub fn mutation_rate_for(&self, config: CodecConfig) -> f64 {
        self.mutation_rate
            .unwrap_or(1.0 / config.total_bits() as f64)
    }

    /// Applies one `key = value` setting; keys match the field names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidParams(format!("bad value '{value}' for {key}"));
        let float = || value.trim().parse::<f64>().map_err(|_| bad());
        match key {
            "population_size" | "N" | "n" => {
                self.population_size = value.trim().parse().map_err(|_| bad())?
            }
            "crossover_rate" => self.crossover_rate = float()?,
            "mutation_rate" => self.mutation_rate = Some(float()?),
            "scaling_c" => self.scaling_c = float()?,
            "pick_fitness" => self.pick_fitness = float()?,
            "floor_fitness" => self.floor_fitness = float()?,
            "bias_generations" => {
                self.bias_generations = value.trim().parse().map_err(|_| bad())?
            }
            _ => return Err(Error::InvalidParams(format!("unknown parameter {key}"))),
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 7] = [
        "population_size",
        "crossover_rate",
        "mutation_rate",
        "scaling_c",
        "pick_fitness",
        "floor_fitness",
        "bias_generations",
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    config: CodecConfig,
    individuals: Vec<Individual>,
    generation: u64,
    next_id: u64,
}

impl Population {
    pub fn new(config: CodecConfig, genomes: Vec<Genome>) -> Result<Self> {
        if genomes.is_empty() {
            return Err(Error::InvalidParams("population must not be empty".into()));
        }
        if genomes.iter().any(|g| g.config() != config) {
            return Err(Error::ConfigMismatch);
        }
        let individuals: Vec<Individual> = genomes
            .into_iter()
            .enumerate()
            .map(|(i, genome)| Individual {
                id: i as u64,
                genome,
                fitness: 0.0,
                provenance: Provenance::Native,
            })
            .collect();
        let next_id = individuals.len() as u64;
        Ok(Self {
            config,
            individuals,
            generation: 0,
            next_id,
        })
    }

    /// `size` random genomes with headers fixed to `space`.
    pub fn seeded(
        config: CodecConfig,
        space: &SearchSpace,
        size: usize,
        seed: u64,
    ) -> Result<Self> {
        let genomes = (0..size as u64)
            .map(|slot| crate::codec::random_genome(config, seed::genome_seed(seed, slot), space))
            .collect();
        Self::new(config, genomes)
    }

    pub fn config(&self) -> CodecConfig {
        self.config
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn get(&self, id: u64) -> Option<&Individual> {
        self.individuals.iter().find(|i| i.id == id)
    }

    pub fn max_fitness(&self) -> f64 {
        self.individuals
            .iter()
            .map(|i| i.fitness)
            .fold(0.0, f64::max)
    }

    /// Union of every member's normalized header.
    pub fn header_union(&self) -> SearchSpace {
        let first = self.individuals[0].genome.space();
        self.individuals
            .iter()
            .fold(first, |acc, i| acc.union(&i.genome.space()))
    }

    pub(crate) fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub(crate) fn individuals_mut(&mut self) -> &mut [Individual] {
        &mut self.individuals
    }
}

fn check_picks(picks: &[usize], size: usize) -> Result<Vec<usize>> {
    if picks.len() > size {
        return Err(Error::TooManyPicks {
            picks: picks.len(),
            size,
        });
    }
    if let Some(&index) = picks.iter().find(|&&i| i >= size) {
        return Err(Error::InvalidPick { index, size });
    }
    let mut sorted = picks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

/// Picked individuals get `pick_fitness`, the rest `floor_fitness`. Injected
/// individuals still under bias are raised to the population maximum.
pub fn assign_fitness(pop: &Population, picks: &[usize], params: &GaParams) -> Result<Population> {
    let picks = check_picks(picks, pop.len())?;
    let mut next = pop.clone();
    for (i, ind) in next.individuals.iter_mut().enumerate() {
        ind.fitness = if picks.binary_search(&i).is_ok() {
            params.pick_fitness
        } else {
            params.floor_fitness
        };
    }
    let max = next.max_fitness();
    for ind in &mut next.individuals {
        if ind.provenance.bias_remaining() > 0 {
            ind.fitness = ind.fitness.max(max);
        }
    }
    Ok(next)
}

/// Linear fitness scaling `f' = a f + b` that preserves the mean and maps the
/// maximum to `c * mean`. If that would push the minimum below zero the
/// minimum is mapped to zero instead. Equal inputs are returned unchanged.
pub fn scale_fitness(raw: &[f64], c: f64) -> Vec<f64> {
    if raw.is_empty() {
        return Vec::new();
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    if max == min || max <= mean {
        return raw.to_vec();
    }
    let (mut a, mut b) = (
        (c - 1.0) * mean / (max - mean),
        mean * (max - c * mean) / (max - mean),
    );
    if a * min + b < 0.0 {
        a = mean / (mean - min);
        b = -min * mean / (mean - min);
    }
    raw.iter().map(|f| (a * f + b).max(0.0)).collect()
}

/// Fitness-proportionate choice; uniform when all weights are zero.
fn roulette(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return rng.gen_range(0..weights.len());
    }
    let mut spin = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if spin < *w {
            return i;
        }
        spin -= w;
    }
    weights
        .iter()
        .rposition(|w| *w > 0.0)
        .unwrap_or(weights.len() - 1)
}

fn or_headers(a: &Genome, b: &Genome) -> (crate::space::ChannelMask, crate::space::VariableMask) {
    (
        a.raw_channels().union(b.raw_channels()),
        a.raw_variables().union(b.raw_variables()),
    )
}

/// Swaps the body bits after `point` (counted within the body) and gives
/// both children the OR of the parents' headers.
pub fn crossover(a: &Genome, b: &Genome, point: usize) -> Result<(Genome, Genome)> {
    if a.config() != b.config() {
        return Err(Error::ConfigMismatch);
    }
    let config = a.config();
    let body_len = config.body_bits();
    if point == 0 || point >= body_len {
        return Err(Error::CrossoverPoint { point, body_len });
    }
    let (mut x, mut y) = (encode(a), encode(b));
    let cut = HEADER_BITS + point;
    x.as_mut_slice()[cut..].swap_with_slice(&mut y.as_mut_slice()[cut..]);
    let (channels, variables) = or_headers(a, b);
    let mut c1 = decode(&x, config)?;
    let mut c2 = decode(&y, config)?;
    c1.set_header(channels, variables);
    c2.set_header(channels, variables);
    Ok((c1, c2))
}

fn mutate(genome: &Genome, rate: f64, rng: &mut impl Rng) -> Genome {
    let mut bits: BitString = encode(genome);
    for bit in &mut bits.as_mut_slice()[HEADER_BITS..] {
        if rng.gen_bool(rate) {
            *bit = !*bit;
        }
    }
    decode(&bits, genome.config()).expect("length preserved")
}

/// One generation. Picks are copied unchanged (injected survivors lose one
/// generation of bias); the remaining slots are filled with offspring.
pub fn step(pop: &Population, picks: &[usize], params: &GaParams, seed: u64) -> Result<Population> {
    params.validate()?;
    let scored = assign_fitness(pop, picks, params)?;
    let picks = check_picks(picks, pop.len())?;
    let config = pop.config;
    let size = pop.len();
    let mut rng = seed::rng(seed);

    let mut next = Population {
        config,
        individuals: Vec::with_capacity(size),
        generation: pop.generation + 1,
        next_id: pop.next_id,
    };
    for &i in &picks {
        let mut elite = scored.individuals[i].clone();
        if let Provenance::Injected { bias_remaining, .. } = &mut elite.provenance {
            *bias_remaining = bias_remaining.saturating_sub(1);
        }
        next.individuals.push(elite);
    }

    let fitness: Vec<f64> = scored.individuals.iter().map(|i| i.fitness).collect();
    let weights = scale_fitness(&fitness, params.scaling_c);
    let mutation_rate = params.mutation_rate_for(config);
    let body_len = config.body_bits();

    while next.individuals.len() < size {
        let a = &scored.individuals[roulette(&weights, &mut rng)].genome;
        let b = &scored.individuals[roulette(&weights, &mut rng)].genome;
        let (c1, c2) = if body_len > 1 && rng.gen_bool(params.crossover_rate) {
            crossover(a, b, rng.gen_range(1..body_len))?
        } else {
            let (channels, variables) = or_headers(a, b);
            let (mut c1, mut c2) = (a.clone(), b.clone());
            c1.set_header(channels, variables);
            c2.set_header(channels, variables);
            (c1, c2)
        };
        for child in [c1, c2] {
            if next.individuals.len() == size {
                break;
            }
            let genome = mutate(&child, mutation_rate, &mut rng);
            let id = next.fresh_id();
            next.individuals.push(Individual {
                id,
                genome,
                fitness: 0.0,
                provenance: Provenance::Native,
            });
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::random_genome;

    fn space(c: &str, v: &str) -> SearchSpace {
        SearchSpace::parse(c, v).unwrap()
    }

    fn pop_of(n: usize, seed: u64) -> Population {
        Population::seeded(CodecConfig::default(), &space("x", "x,t"), n, seed).unwrap()
    }

    #[test]
    fn fitness_from_picks() {
        let params = GaParams::default();
        let p = assign_fitness(&pop_of(3, 1), &[0], &params).unwrap();
        let f: Vec<f64> = p.individuals().iter().map(|i| i.fitness).collect();
        assert_eq!(f, vec![1.0, 0.1, 0.1]);
        let p = assign_fitness(&pop_of(3, 1), &[], &params).unwrap();
        assert!(p.individuals().iter().all(|i| i.fitness == 0.1));
        assert_eq!(
            assign_fitness(&pop_of(3, 1), &[3], &params),
            Err(Error::InvalidPick { index: 3, size: 3 })
        );
    }

    #[test]
    fn biased_injected_individual_gets_population_max() {
        let mut pop = pop_of(3, 1);
        pop.individuals_mut()[2].provenance = Provenance::Injected {
            origin: 9,
            bias_remaining: 1,
        };
        let p = assign_fitness(&pop, &[0], &GaParams::default()).unwrap();
        assert_eq!(p.individuals()[2].fitness, 1.0);
        assert_eq!(p.individuals()[1].fitness, 0.1);
    }

    #[test]
    fn scaling_worked_example() {
        let s = scale_fitness(&[1.0, 0.1, 0.1], 2.0);
        for (got, want) in s.iter().zip([0.8, 0.2, 0.2]) {
            assert!((got - want).abs() < 1e-12, "{s:?}");
        }
        assert_eq!(scale_fitness(&[0.3, 0.3, 0.3], 2.0), vec![0.3, 0.3, 0.3]);
    }

    #[test]
    fn scaling_falls_back_to_zero_minimum() {
        // max-scaling would make the minimum negative here
        let raw = [1.0, 1.0, 1.0, 0.0];
        let s = scale_fitness(&raw, 3.0);
        assert!(s.iter().all(|&f| f >= 0.0));
        assert!(s[3].abs() < 1e-12);
        let mean_in = raw.iter().sum::<f64>() / 4.0;
        let mean_out = s.iter().sum::<f64>() / 4.0;
        assert!((mean_in - mean_out).abs() < 1e-12);
    }

    #[test]
    fn full_elitism_keeps_population() {
        let pop = pop_of(9, 3);
        let all: Vec<usize> = (0..9).collect();
        let next = step(&pop, &all, &GaParams::default(), 5).unwrap();
        assert_eq!(next.generation(), 1);
        for (a, b) in pop.individuals().iter().zip(next.individuals()) {
            assert_eq!(a.genome, b.genome);
            assert_eq!(a.id, b.id);
        }
    }

    #[test]
    fn offspring_headers_are_or_of_parents() {
        let config = CodecConfig::default();
        let genomes = vec![
            random_genome(config, 1, &space("x", "x,t")),
            random_genome(config, 2, &space("y", "y,t")),
        ];
        let pop = Population::new(config, genomes).unwrap();
        let params = GaParams {
            population_size: 2,
            ..GaParams::default()
        };
        for seed in 0..20 {
            let next = step(&pop, &[], &params, seed).unwrap();
            for ind in next.individuals() {
                let h = ind.genome.space();
                // parents may coincide; otherwise the header is the union
                assert!(
                    h == space("x,y", "x,y,t") || h == space("x", "x,t") || h == space("y", "y,t")
                );
            }
        }
        // Distinct parents are guaranteed when one parent has all the weight.
        let (c1, c2) = crossover(
            &pop.individuals()[0].genome,
            &pop.individuals()[1].genome,
            10,
        )
        .unwrap();
        assert_eq!(c1.space(), space("x,y", "x,y,t"));
        assert_eq!(c2.space(), space("x,y", "x,y,t"));
    }

    #[test]
    fn step_is_deterministic() {
        let pop = pop_of(9, 11);
        let a = step(&pop, &[1, 4], &GaParams::default(), 77).unwrap();
        let b = step(&pop, &[1, 4], &GaParams::default(), 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 9);
        assert_ne!(a, step(&pop, &[1, 4], &GaParams::default(), 78).unwrap());
    }

    #[test]
    fn too_many_picks() {
        let pop = pop_of(3, 1);
        assert_eq!(
            step(&pop, &[0, 1, 2, 0], &GaParams::default(), 0),
            Err(Error::TooManyPicks { picks: 4, size: 3 })
        );
    }

    #[test]
    fn crossover_identity_and_symmetry() {
        let config = CodecConfig::default();
        let a = random_genome(config, 5, &space("x", "x"));
        let (c1, c2) = crossover(&a, &a, 1).unwrap();
        assert_eq!((c1.clone(), c2), (a.clone(), a.clone()));

        let mut bits = encode(&a);
        for b in &mut bits.as_mut_slice()[HEADER_BITS..] {
            *b = !*b;
        }
        let complement = decode(&bits, config).unwrap();
        for point in [1, 50, config.body_bits() - 1] {
            let (c1, c2) = crossover(&a, &complement, point).unwrap();
            let (b1, b2) = (encode(&c1), encode(&c2));
            for k in HEADER_BITS..config.total_bits() {
                assert_ne!(b1.as_slice()[k], b2.as_slice()[k]);
            }
        }
        assert!(crossover(&a, &a, 0).is_err());
        assert!(crossover(&a, &a, config.body_bits()).is_err());
    }

    #[test]
    fn crossover_header_union() {
        let config = CodecConfig::default();
        let a = random_genome(config, 1, &space("x", "x"));
        let b = random_genome(config, 2, &space("z", "t"));
        let (c1, _) = crossover(&a, &b, 3).unwrap();
        assert_eq!(c1.space(), space("x,z", "x,t"));
    }

    #[test]
    fn params_validation() {
        assert!(GaParams::default().validate().is_ok());
        let p = GaParams {
            scaling_c: 1.0,
            ..GaParams::default()
        };
        assert!(p.validate().is_err());
        let p = GaParams {
            floor_fitness: 1.0,
            ..GaParams::default()
        };
        assert!(p.validate().is_err());
        let mut p = GaParams::default();
        p.set("crossover_rate", "0.5").unwrap();
        p.set("population_size", "12").unwrap();
        assert_eq!((p.crossover_rate, p.population_size), (0.5, 12));
        assert!(p.set("nope", "1").is_err());
        assert_eq!(
            GaParams::default().mutation_rate_for(CodecConfig::default()),
            1.0 / 139.0
        );
    }

    #[test]
    fn roulette_respects_zero_weights() {
        let mut rng = seed::rng(3);
        for _ in 0..1000 {
            assert_eq!(roulette(&[0.0, 2.0, 0.0], &mut rng), 1);
        }
    }
}
