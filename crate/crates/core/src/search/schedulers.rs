use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{best_result, EvaluationResult, SearchSpace};

/// One candidate evaluation to run.
#[derive(Debug, Clone)]
pub struct Job<G> {
    pub genotype: G,
    pub seed: u64,
    /// Leading window samples to evaluate on.
    pub n_samples: usize,
    pub rung: usize,
}

/// Decides what to evaluate next. Called only from the coordinator.
pub trait Scheduler<S: SearchSpace> {
    fn next_job(&mut self, space: &S, rng: &mut ChaCha8Rng) -> Job<S::Genotype>;
    fn on_result(&mut self, result: &EvaluationResult<S::Genotype>);
    fn champion<'a>(
        &self,
        results: &'a [EvaluationResult<S::Genotype>],
    ) -> Option<&'a EvaluationResult<S::Genotype>> {
        best_result(results)
    }
}

/// Independent full-window evaluations of random candidates.
pub struct RandomSearch {
    window: usize,
}

impl RandomSearch {
    pub fn new(window: usize) -> Self {
        Self { window }
    }
}

impl<S: SearchSpace> Scheduler<S> for RandomSearch {
    fn next_job(&mut self, space: &S, rng: &mut ChaCha8Rng) -> Job<S::Genotype> {
        Job {
            genotype: space.sample(rng),
            seed: rng.random(),
            n_samples: self.window,
            rung: 0,
        }
    }

    fn on_result(&mut self, _: &EvaluationResult<S::Genotype>) {}
}

/// Rung resources `min_resource · eta^k` that fit in the window.
pub fn asha_rungs(window: usize, eta: f64, min_resource: Option<usize>) -> Vec<usize> {
    let window = window.max(1);
    let min = min_resource
        .unwrap_or_else(|| (window as f64 / eta.powi(3)).floor() as usize)
        .clamp(1, window);
    let mut rungs = Vec::new();
    let mut r = min as f64;
    while r.round() as usize <= window {
        let size = r.round() as usize;
        if rungs.last() != Some(&size) {
            rungs.push(size);
        }
        r *= eta;
    }
    rungs
}

struct RungEntry<G> {
    genotype: G,
    seed: u64,
    score: f64,
    order: usize,
    promoted: bool,
}

/// Asynchronous successive halving: a completed candidate is promoted as
/// soon as it ranks in the top `1/eta` of its rung, without waiting for
/// the rest of a cohort.
pub struct Asha<G> {
    rungs: Vec<usize>,
    eta: f64,
    completed: Vec<Vec<RungEntry<G>>>,
}

impl<G: Clone> Asha<G> {
    pub fn new(rungs: Vec<usize>, eta: f64) -> Self {
        let n = rungs.len();
        Self {
            rungs,
            eta,
            completed: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    pub fn rungs(&self) -> &[usize] {
        &self.rungs
    }

    /// Next promotable entry, searching from the highest rung down.
    fn promotion(&mut self) -> Option<(usize, G, u64)> {
        for k in (0..self.rungs.len().saturating_sub(1)).rev() {
            let rung = &mut self.completed[k];
            let top = (rung.len() as f64 / self.eta).floor() as usize;
            if top == 0 {
                continue;
            }
            let mut ranked: Vec<usize> = (0..rung.len()).collect();
            ranked.sort_by(|&a, &b| {
                rung[b]
                    .score
                    .total_cmp(&rung[a].score)
                    .then(rung[a].order.cmp(&rung[b].order))
            });
            if let Some(&i) = ranked[..top].iter().find(|&&i| !rung[i].promoted) {
                rung[i].promoted = true;
                return Some((k + 1, rung[i].genotype.clone(), rung[i].seed));
            }
        }
        None
    }
}

impl<S: SearchSpace> Scheduler<S> for Asha<S::Genotype> {
    fn next_job(&mut self, space: &S, rng: &mut ChaCha8Rng) -> Job<S::Genotype> {
        if let Some((rung, genotype, seed)) = self.promotion() {
            return Job {
                genotype,
                seed,
                n_samples: self.rungs[rung],
                rung,
            };
        }
        Job {
            genotype: space.sample(rng),
            seed: rng.random(),
            n_samples: self.rungs[0],
            rung: 0,
        }
    }

    fn on_result(&mut self, r: &EvaluationResult<S::Genotype>) {
        if let Some(rung) = self.completed.get_mut(r.rung) {
            rung.push(RungEntry {
                genotype: r.genotype.clone(),
                seed: r.seed,
                score: if r.failed() { f64::NEG_INFINITY } else { r.score },
                order: r.order,
                promoted: false,
            });
        }
    }

    /// Best top-rung result, else the best result at any rung.
    fn champion<'a>(
        &self,
        results: &'a [EvaluationResult<S::Genotype>],
    ) -> Option<&'a EvaluationResult<S::Genotype>> {
        let top = self.rungs.len().saturating_sub(1);
        best_result(results.iter().filter(|r| r.rung == top)).or_else(|| best_result(results))
    }
}

struct Member<G> {
    genotype: G,
    score: f64,
    order: usize,
}

/// Steady-state asynchronous evolution: each free worker gets one
/// offspring, which replaces the worst population member if it is better.
pub struct Evolution<G> {
    window: usize,
    population_size: usize,
    tournament_size: usize,
    crossover_rate: f64,
    population: Vec<Member<G>>,
    initial_dispatched: usize,
    warm: Option<G>,
    offspring: usize,
}

impl<G: Clone> Evolution<G> {
    pub fn new(
        window: usize,
        population_size: usize,
        tournament_size: usize,
        crossover_rate: f64,
        warm: Option<G>,
    ) -> Self {
        Self {
            window,
            population_size: population_size.max(2),
            tournament_size: tournament_size.max(1),
            crossover_rate,
            population: Vec::new(),
            initial_dispatched: 0,
            warm,
            offspring: 0,
        }
    }

    fn tournament(&self, rng: &mut ChaCha8Rng) -> &G {
        let k = self.tournament_size.min(self.population.len());
        let winner = sample(rng, self.population.len(), k)
            .into_iter()
            .max_by(|&a, &b| {
                let (pa, pb) = (&self.population[a], &self.population[b]);
                pa.score.total_cmp(&pb.score).then(pb.order.cmp(&pa.order))
            })
            .expect("non-empty population");
        &self.population[winner].genotype
    }
}

impl<S: SearchSpace> Scheduler<S> for Evolution<S::Genotype> {
    fn next_job(&mut self, space: &S, rng: &mut ChaCha8Rng) -> Job<S::Genotype> {
        let (genotype, rung) = if self.initial_dispatched < self.population_size
            || self.population.is_empty()
        {
            self.initial_dispatched += 1;
            let g = self.warm.take().unwrap_or_else(|| space.sample(rng));
            (g, 0)
        } else {
            self.offspring += 1;
            let child = if self.population.len() >= 2 && rng.random::<f64>() < self.crossover_rate {
                let a = self.tournament(rng).clone();
                let b = self.tournament(rng).clone();
                space.crossover(&a, &b, rng)
            } else {
                let parent = self.tournament(rng).clone();
                space.mutate(&parent, rng)
            };
            (child, self.offspring)
        };
        Job {
            genotype,
            seed: rng.random(),
            n_samples: self.window,
            rung,
        }
    }

    fn on_result(&mut self, r: &EvaluationResult<S::Genotype>) {
        let score = if r.failed() { f64::NEG_INFINITY } else { r.score };
        let member = Member {
            genotype: r.genotype.clone(),
            score,
            order: r.order,
        };
        if self.population.len() < self.population_size {
            self.population.push(member);
            return;
        }
        let worst = (0..self.population.len())
            .min_by(|&a, &b| {
                let (pa, pb) = (&self.population[a], &self.population[b]);
                pa.score.total_cmp(&pb.score).then(pa.order.cmp(&pb.order))
            })
            .expect("non-empty population");
        if score > self.population[worst].score {
            self.population[worst] = member;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_rungs() {
        assert_eq!(asha_rungs(5000, 2.0, None), vec![625, 1250, 2500, 5000]);
        assert_eq!(asha_rungs(1000, 2.0, None), vec![125, 250, 500, 1000]);
        assert_eq!(asha_rungs(1000, 3.0, Some(100)), vec![100, 300, 900]);
        assert_eq!(asha_rungs(10, 2.0, Some(20)), vec![10]);
    }
}
