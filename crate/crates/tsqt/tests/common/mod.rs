//! Seeded random constructions shared by the integration suites.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsqt::abl::EnsembleSpec;
use tsqt::observables::Observable;
use tsqt::protocol::{EventKind, Protocol, TimelineEvent};
use tsqt::qlinalg::{Amplitude, Ket};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_ket<R: Rng>(rng: &mut R, dim: usize) -> Ket {
    loop {
        let amps: Vec<Amplitude> = (0..dim)
            .map(|_| Amplitude::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        if let Ok(ket) = Ket::normalize(&amps) {
            return ket;
        }
    }
}

/// A Haar-ish random orthonormal basis via Gram-Schmidt on random vectors.
pub fn random_basis<R: Rng>(rng: &mut R, dim: usize) -> Vec<Ket> {
    'restart: loop {
        let mut basis: Vec<Vec<Amplitude>> = Vec::with_capacity(dim);
        for _ in 0..dim {
            let mut v: Vec<Amplitude> = (0..dim)
                .map(|_| {
                    Amplitude::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                })
                .collect();
            for u in &basis {
                let overlap: Amplitude = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (uk, vk) in u.iter().zip(v.iter_mut()) {
                    *vk -= overlap * uk;
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                continue 'restart;
            }
            for a in &mut v {
                *a /= norm;
            }
            basis.push(v);
        }
        return basis.into_iter().map(|v| Ket::normalize(&v).unwrap()).collect();
    }
}

pub fn random_observable<R: Rng>(rng: &mut R, label: &str, dim: usize) -> Observable {
    let eigenvalues: Vec<f64> = (0..dim).map(|k| k as f64 + 1.0).collect();
    Observable::new(label, &eigenvalues, &random_basis(rng, dim)).unwrap()
}

/// The computational ("path") basis as an observable.
pub fn path_observable(label: &str, dim: usize) -> Observable {
    let eigenvalues: Vec<f64> = (0..dim).map(|k| k as f64 + 1.0).collect();
    let kets: Vec<Ket> = (0..dim).map(|k| Ket::basis(dim, k)).collect();
    Observable::new(label, &eigenvalues, &kets).unwrap()
}

pub fn prepare(t: f64, name: &str) -> TimelineEvent {
    TimelineEvent::new(
        t,
        EventKind::Prepare {
            state: name.to_string(),
        },
    )
}

pub fn postselect(t: f64, name: &str) -> TimelineEvent {
    TimelineEvent::new(
        t,
        EventKind::Postselect {
            state: name.to_string(),
        },
    )
}

pub fn align(t: f64, name: &str) -> TimelineEvent {
    TimelineEvent::new(
        t,
        EventKind::Align {
            observable: name.to_string(),
        },
    )
}

pub fn unalign(t: f64, name: &str) -> TimelineEvent {
    TimelineEvent::new(
        t,
        EventKind::Unalign {
            observable: name.to_string(),
        },
    )
}

pub fn measure(t: f64, name: &str) -> TimelineEvent {
    TimelineEvent::new(
        t,
        EventKind::Measure {
            observable: name.to_string(),
        },
    )
}

pub fn block_filter(t: f64, name: &str, keep: usize) -> TimelineEvent {
    TimelineEvent::new(
        t,
        EventKind::BlockFilter {
            observable: name.to_string(),
            keep,
        },
    )
}

/// Probability that a run of the measured sequence survives both selections:
/// the total unnormalized tuple weight, enumerated independently of the
/// library's distribution code.
pub fn acceptance_weight(ensemble: &EnsembleSpec, observables: &[&Observable]) -> f64 {
    let dim = ensemble.dim();
    let stages = observables.len();
    let mut total = 0.0;
    let mut tuple = vec![0usize; stages];
    'tuples: loop {
        let mut amp = Amplitude::new(1.0, 0.0);
        amp *= observables[0].eigenkets()[tuple[0]]
            .inner(ensemble.pre())
            .unwrap();
        for k in 1..stages {
            amp *= observables[k].eigenkets()[tuple[k]]
                .inner(&observables[k - 1].eigenkets()[tuple[k - 1]])
                .unwrap();
        }
        amp *= ensemble
            .post()
            .inner(&observables[stages - 1].eigenkets()[tuple[stages - 1]])
            .unwrap();
        total += amp.norm_sqr();
        for k in (0..stages).rev() {
            tuple[k] += 1;
            if tuple[k] < dim {
                continue 'tuples;
            }
            tuple[k] = 0;
            if k == 0 {
                break 'tuples;
            }
        }
    }
    total
}

/// A random measure-only protocol: prepare, one `Measure` per stage,
/// postselect. Resampled until the surviving fraction is workable, so Monte
/// Carlo comparisons see a healthy kept count.
pub fn random_measure_protocol<R: Rng>(rng: &mut R, dim: usize, stages: usize) -> Protocol {
    loop {
        let pre = random_ket(rng, dim);
        let post = random_ket(rng, dim);
        let observables: Vec<Observable> = (0..stages)
            .map(|k| random_observable(rng, &format!("C{}", k + 1), dim))
            .collect();
        let ensemble = EnsembleSpec::new(pre.clone(), post.clone()).unwrap();
        let refs: Vec<&Observable> = observables.iter().collect();
        if acceptance_weight(&ensemble, &refs) < 0.05 {
            continue;
        }
        let states = BTreeMap::from([("pre".to_string(), pre), ("post".to_string(), post)]);
        let observables: BTreeMap<String, Observable> = observables
            .into_iter()
            .map(|o| (o.label().to_string(), o))
            .collect();
        let mut events = vec![prepare(0.0, "pre")];
        for k in 0..stages {
            events.push(measure(k as f64 + 1.0, &format!("C{}", k + 1)));
        }
        events.push(postselect(stages as f64 + 1.0, "post"));
        return Protocol::build(dim, states, observables, events).unwrap();
    }
}
