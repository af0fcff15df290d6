//! Synthetic households drawn around known prototype profiles, for fixtures
//! and recovery checks.

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::fcm::seeded_rng;
use crate::ingest::MeterReading;
use crate::HOURS;

/// `count` prototypes, each a single evening-style usage bump of width
/// `width_hours` centred at evenly spaced hours on a 0.1 base.
pub fn bump_prototypes(count: usize, width_hours: f64) -> Vec<[f64; HOURS]> {
    (0..count)
        .map(|j| {
            let centre = j as f64 * HOURS as f64 / count as f64;
            let mut p = [0.0; HOURS];
            for (h, v) in p.iter_mut().enumerate() {
                let raw = (h as f64 - centre).abs();
                let d = raw.min(HOURS as f64 - raw);
                *v = 0.1 + 0.8 * (-(d * d) / (2.0 * width_hours * width_hours)).exp();
            }
            p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSet {
    pub household_ids: Vec<String>,
    pub profiles: Vec<[f64; HOURS]>,
    /// Prototype index each household was drawn from.
    pub labels: Vec<usize>,
}

/// `households` profiles, household `k` drawn from prototype `k % count`,
/// with Gaussian noise of standard deviation `sigma` clipped to [0, 1].
pub fn noisy_households(prototypes: &[[f64; HOURS]], households: usize, sigma: f64, seed: u64) -> SyntheticSet {
    let mut rng = seeded_rng(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let mut set = SyntheticSet {
        household_ids: Vec::with_capacity(households),
        profiles: Vec::with_capacity(households),
        labels: Vec::with_capacity(households),
    };
    for k in 0..households {
        let label = k % prototypes.len();
        let profile = prototypes[label].map(|v| (v + noise.sample(&mut rng)).clamp(0.0, 1.0));
        set.household_ids.push(format!("hh{k:03}"));
        set.profiles.push(profile);
        set.labels.push(label);
    }
    set
}

/// Hourly readings for each household over `days` consecutive dates from
/// `start`: the household's shape scaled by a per-household magnitude,
/// with multiplicative day-to-day jitter.
pub fn readings_for(set: &SyntheticSet, start: NaiveDate, days: usize, seed: u64) -> Vec<MeterReading> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(set.profiles.len() * days * HOURS);
    for (id, profile) in set.household_ids.iter().zip(&set.profiles) {
        let scale = rng.random_range(0.5..3.0);
        for d in 0..days {
            let date = start + Duration::days(d as i64);
            for (h, v) in profile.iter().enumerate() {
                let jitter = rng.random_range(0.95..1.05);
                out.push(MeterReading {
                    household_id: id.clone(),
                    date,
                    hour: h as u8,
                    energy: scale * (0.05 + v) * jitter,
                });
            }
        }
    }
    out
}
