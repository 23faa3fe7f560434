use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Manifest;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledPair {
    pub scene_id: String,
    pub left: String,
    pub right: String,
    pub honeypot: bool,
}

/// Seeded pair generator over the scenes that have at least two renditions.
#[derive(Debug, Clone)]
pub struct Scheduler {
    scenes: Vec<(String, Vec<String>)>,
    honeypot_rate: f64,
    rng: ChaCha8Rng,
}

impl Scheduler {
    pub fn new(pool: Vec<(String, Vec<String>)>, honeypot_rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&honeypot_rate) {
            return Err(Error::Param(format!("honeypot_rate must be in [0, 1], got {honeypot_rate}")));
        }
        let scenes: Vec<_> = pool.into_iter().filter(|(_, r)| r.len() >= 2).collect();
        if scenes.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(Scheduler {
            scenes,
            honeypot_rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn from_manifest(manifest: &Manifest, honeypot_rate: f64, seed: u64) -> Result<Self> {
        let pool = manifest
            .scenes()
            .into_iter()
            .map(|(s, ids)| (s.to_string(), ids.into_iter().map(String::from).collect()))
            .collect();
        Scheduler::new(pool, honeypot_rate, seed)
    }

    /// Draws the next pair: with probability `honeypot_rate` one rendition
    /// shown twice, otherwise two distinct renditions of one scene in random
    /// side order.
    pub fn next_pair(&mut self) -> ScheduledPair {
        let (scene, ids) = &self.scenes[self.rng.random_range(0..self.scenes.len())];
        let honeypot = self.rng.random_bool(self.honeypot_rate);
        let (left, right) = if honeypot {
            let id = &ids[self.rng.random_range(0..ids.len())];
            (id.clone(), id.clone())
        } else {
            let picked = rand::seq::index::sample(&mut self.rng, ids.len(), 2);
            let (a, b) = (&ids[picked.index(0)], &ids[picked.index(1)]);
            if self.rng.random_bool(0.5) {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            }
        };
        ScheduledPair {
            scene_id: scene.clone(),
            left,
            right,
            honeypot,
        }
    }

    /// A fresh random token for naming pairs and pair-side URLs.
    pub fn token(&mut self) -> String {
        format!("{:016x}{:016x}", self.rng.random::<u64>(), self.rng.random::<u64>())
    }
}
