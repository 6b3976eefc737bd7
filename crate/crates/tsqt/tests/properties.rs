//! Property tests for the algebraic invariants: tolerance-bounded where
//! floating point accumulates, exact where the contract says exact.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use tsqt::abl::{self, EnsembleSpec};
use tsqt::observables::Observable;
use tsqt::protocol::{CounterfactualQuery, Protocol, QueryMode, QueryResult};
use tsqt::qlinalg::{Amplitude, Ket, Operator};

fn dims() -> impl Strategy<Value = usize> {
    2usize..=5
}

fn small_dims() -> impl Strategy<Value = usize> {
    2usize..=3
}

proptest! {
    /// Unit kets cannot overlap by more than 1 (Cauchy-Schwarz).
    #[test]
    fn inner_products_are_bounded(dim in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let u = random_ket(&mut rng, dim);
        let v = random_ket(&mut rng, dim);
        prop_assert!(u.inner(&v).unwrap().norm() <= 1.0 + 1e-10);
    }

    /// Unitaries preserve the norm.
    #[test]
    fn unitary_application_preserves_norm(dim in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let u = random_observable(&mut rng, "U", dim).alignment_unitary();
        prop_assert!(u.is_unitary(1e-10));
        let v = random_ket(&mut rng, dim);
        let image = u.apply(&v).unwrap();
        prop_assert!((image.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    /// The adjoint is an exact involution.
    #[test]
    fn adjoint_is_an_involution(dim in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let rows: Vec<Vec<Amplitude>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| Amplitude::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                    .collect()
            })
            .collect();
        let m = Operator::from_rows(&rows).unwrap();
        prop_assert_eq!(m.adjoint().adjoint(), m);
    }

    /// Applying a unitary and then its adjoint restores the state.
    #[test]
    fn adjoint_undoes_a_unitary(dim in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let u = random_observable(&mut rng, "U", dim).alignment_unitary();
        let v = random_ket(&mut rng, dim);
        let round_trip = u.adjoint().apply(&u.apply(&v).unwrap()).unwrap();
        let deviation: f64 = round_trip
            .amps()
            .iter()
            .zip(v.amps())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prop_assert!(deviation <= 1e-10);
    }

    /// Commutation does not depend on the argument order.
    #[test]
    fn commutation_is_symmetric(dim in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let c = random_observable(&mut rng, "C", dim);
        let d = random_observable(&mut rng, "D", dim);
        prop_assert_eq!(
            c.commutes_with(&d, 1e-10).unwrap(),
            d.commutes_with(&c, 1e-10).unwrap()
        );
    }

    /// Every alignment unitary maps its eigenbasis onto the path basis.
    #[test]
    fn alignment_maps_eigenkets_to_paths(dim in dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let c = random_observable(&mut rng, "C", dim);
        let v = c.alignment_unitary();
        for (k, ket) in c.eigenkets().iter().enumerate() {
            let image = v.apply(ket).unwrap();
            let overlap = image.inner(&Ket::basis(dim, k)).unwrap().norm();
            prop_assert!((overlap - 1.0).abs() <= 1e-10);
        }
    }

    /// Shared eigenrays carry identical unnormalized selection weight: the
    /// probability times the measured-ensemble rate depends only on the
    /// projector.
    #[test]
    fn shared_rays_share_their_weight(dim in small_dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ensemble = EnsembleSpec::new(random_ket(&mut rng, dim), random_ket(&mut rng, dim)).unwrap();
        let c = random_observable(&mut rng, "C", dim);
        // Same rays in reversed order, relabeled: every ray is shared.
        let mut kets = c.eigenkets().to_vec();
        kets.reverse();
        let eigenvalues: Vec<f64> = (0..dim).map(|k| 10.0 + k as f64).collect();
        let d = Observable::new("D", &eigenvalues, &kets).unwrap();
        let matches = c.shared_eigenrays(&d, 1e-9).unwrap();
        prop_assert_eq!(matches.pairs().len(), dim);

        let pc = match abl::abl_single(&ensemble, &c) {
            Ok(dist) => dist,
            Err(_) => return Ok(()), // empty ensemble: nothing to compare
        };
        let pd = abl::abl_single(&ensemble, &d).unwrap();
        let rate_c = abl::ensemble_rates(&ensemble, Some(&c)).unwrap().cfw;
        let rate_d = abl::ensemble_rates(&ensemble, Some(&d)).unwrap().cfw;
        for &(i, j) in matches.pairs() {
            let wc = pc.single_stage().unwrap()[i] * rate_c;
            let wd = pd.single_stage().unwrap()[j] * rate_d;
            prop_assert!((wc - wd).abs() <= 1e-12, "weights {} vs {}", wc, wd);
        }
    }

    /// Sequence distributions are normalized.
    #[test]
    fn distributions_sum_to_one(dim in small_dims(), stages in 1usize..=3, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ensemble = EnsembleSpec::new(random_ket(&mut rng, dim), random_ket(&mut rng, dim)).unwrap();
        let observables: Vec<Observable> = (0..stages)
            .map(|k| random_observable(&mut rng, &format!("C{k}"), dim))
            .collect();
        let refs: Vec<&Observable> = observables.iter().collect();
        if let Ok(dist) = abl::abl_sequence(&ensemble, &refs) {
            prop_assert!((dist.total() - 1.0).abs() <= 1e-12);
        }
    }

    /// Global phases of the boundary states and of eigenkets are invisible.
    #[test]
    fn global_phases_are_invisible(dim in small_dims(), seed in any::<u64>(), theta in 0.0..std::f64::consts::TAU) {
        let mut rng = rng(seed);
        let pre = random_ket(&mut rng, dim);
        let post = random_ket(&mut rng, dim);
        let c = random_observable(&mut rng, "C", dim);
        let base = EnsembleSpec::new(pre.clone(), post.clone()).unwrap();
        let reference = match abl::abl_single(&base, &c) {
            Ok(dist) => dist,
            Err(_) => return Ok(()),
        };

        let phase = Amplitude::new(theta.cos(), theta.sin());
        let rotate = |ket: &Ket| {
            let amps: Vec<Amplitude> = ket.amps().iter().map(|a| a * phase).collect();
            Ket::normalize(&amps).unwrap()
        };
        let rotated_pre = EnsembleSpec::new(rotate(&pre), post.clone()).unwrap();
        let rotated_post = EnsembleSpec::new(pre.clone(), rotate(&post)).unwrap();
        let mut kets = c.eigenkets().to_vec();
        kets[0] = rotate(&kets[0]);
        let rotated_obs = Observable::new("C", c.eigenvalues(), &kets).unwrap();

        for dist in [
            abl::abl_single(&rotated_pre, &c).unwrap(),
            abl::abl_single(&rotated_post, &c).unwrap(),
            abl::abl_single(&base, &rotated_obs).unwrap(),
        ] {
            for (want, got) in reference.single_stage().unwrap().iter().zip(dist.single_stage().unwrap()) {
                prop_assert!((want - got).abs() <= 1e-12);
            }
        }
    }

    /// Reordering the eigenbasis reorders the distribution and nothing else.
    #[test]
    fn permutation_equivariance(dim in small_dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ensemble = EnsembleSpec::new(random_ket(&mut rng, dim), random_ket(&mut rng, dim)).unwrap();
        let c = random_observable(&mut rng, "C", dim);
        let dist = match abl::abl_single(&ensemble, &c) {
            Ok(dist) => dist,
            Err(_) => return Ok(()),
        };
        let mut kets = c.eigenkets().to_vec();
        kets.reverse();
        let mut eigenvalues = c.eigenvalues().to_vec();
        eigenvalues.reverse();
        let reversed = Observable::new("C", &eigenvalues, &kets).unwrap();
        let reversed_dist = abl::abl_single(&ensemble, &reversed).unwrap();
        for k in 0..dim {
            let want = dist.single_stage().unwrap()[k];
            let got = reversed_dist.single_stage().unwrap()[dim - 1 - k];
            prop_assert!((want - got).abs() <= 1e-12);
        }
    }

    /// A singleton sequence is the single-measurement rule, entry for entry.
    #[test]
    fn singleton_sequences_match(dim in small_dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ensemble = EnsembleSpec::new(random_ket(&mut rng, dim), random_ket(&mut rng, dim)).unwrap();
        let c = random_observable(&mut rng, "C", dim);
        match (abl::abl_single(&ensemble, &c), abl::abl_sequence(&ensemble, &[&c])) {
            (Ok(single), Ok(seq)) => prop_assert_eq!(single, seq),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "diverging results {:?} vs {:?}", a, b),
        }
    }

    /// Measuring the same observable twice in a row changes nothing: mass
    /// stays diagonal and downstream marginals are untouched.
    #[test]
    fn repeated_first_kind_measurements_are_idempotent(dim in small_dims(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ensemble = EnsembleSpec::new(random_ket(&mut rng, dim), random_ket(&mut rng, dim)).unwrap();
        let c = random_observable(&mut rng, "C", dim);
        let d = random_observable(&mut rng, "D", dim);
        let doubled = match abl::abl_sequence(&ensemble, &[&c, &c, &d]) {
            Ok(dist) => dist,
            Err(_) => return Ok(()),
        };
        for (tuple, p) in doubled.entries() {
            if tuple[0] != tuple[1] {
                prop_assert!(p <= 1e-20, "off-diagonal tuple {:?} has weight {}", tuple, p);
            }
        }
        let plain = abl::abl_sequence(&ensemble, &[&c, &d]).unwrap();
        for outcome in 0..dim {
            prop_assert!((doubled.marginal(2, outcome).unwrap() - plain.marginal(1, outcome).unwrap()).abs() <= 1e-12);
            prop_assert!((doubled.marginal(0, outcome).unwrap() - plain.marginal(0, outcome).unwrap()).abs() <= 1e-12);
        }
    }

    /// An exactly vanishing boundary overlap forces an exactly zero
    /// probability.
    #[test]
    fn orthogonal_overlaps_give_exact_zeros(dim in small_dims(), seed in any::<u64>(), hole in 0usize..3) {
        let mut rng = rng(seed);
        let hole = hole % dim;
        let mut amps: Vec<Amplitude> = (0..dim)
            .map(|_| Amplitude::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        amps[hole] = Amplitude::new(0.0, 0.0);
        let pre = match Ket::normalize(&amps) {
            Ok(ket) => ket,
            Err(_) => return Ok(()),
        };
        let ensemble = EnsembleSpec::new(pre, random_ket(&mut rng, dim)).unwrap();
        let paths = path_observable("P", dim);
        if let Ok(dist) = abl::abl_single(&ensemble, &paths) {
            prop_assert_eq!(dist.single_stage().unwrap()[hole], 0.0);
        }
    }

    /// Two observables with no shared rays that fail to commute are never
    /// both ready, whatever single alignment is in force.
    #[test]
    fn readiness_is_exclusive(dim in small_dims(), seed in any::<u64>(), t in 1.0001f64..1.9999) {
        let mut rng = rng(seed);
        let c = random_observable(&mut rng, "C", dim);
        let d = random_observable(&mut rng, "D", dim);
        prop_assume!(!c.commutes_with(&d, 1e-10).unwrap());
        prop_assume!(c.shared_eigenrays(&d, 1e-9).unwrap().is_empty());
        // A window aligned to c itself, to a rotated basis, or to nothing.
        let aligned_to = rng.random_range(0..3);
        let window = random_observable(&mut rng, "W", dim);
        let mut observables = BTreeMap::from([
            ("C".to_string(), c.clone()),
            ("D".to_string(), d.clone()),
        ]);
        let mut events = vec![prepare(0.0, "pre")];
        match aligned_to {
            0 => events.push(align(1.0, "C")),
            1 => {
                observables.insert("W".to_string(), window);
                events.push(align(1.0, "W"));
            }
            _ => {}
        }
        events.push(postselect(3.0, "post"));
        let states = BTreeMap::from([
            ("pre".to_string(), random_ket(&mut rng, dim)),
            ("post".to_string(), random_ket(&mut rng, dim)),
        ]);
        let protocol = Protocol::build(dim, states, observables, events).unwrap();
        let ready_c = protocol.readiness(&c, t).unwrap().is_ready();
        let ready_d = protocol.readiness(&d, t).unwrap().is_ready();
        prop_assert!(!(ready_c && ready_d));
    }

    /// When the gate passes, the gated value is the ungated value.
    #[test]
    fn the_gate_never_changes_the_number(dim in small_dims(), seed in any::<u64>(), outcome in 0usize..3) {
        let mut rng = rng(seed);
        let outcome = outcome % dim;
        let c = random_observable(&mut rng, "C", dim);
        let states = BTreeMap::from([
            ("pre".to_string(), random_ket(&mut rng, dim)),
            ("post".to_string(), random_ket(&mut rng, dim)),
        ]);
        let observables = BTreeMap::from([("C".to_string(), c)]);
        let protocol = Protocol::build(
            dim,
            states,
            observables,
            vec![prepare(0.0, "pre"), align(1.0, "C"), unalign(2.0, "C"), postselect(3.0, "post")],
        )
        .unwrap();
        let query = |mode| CounterfactualQuery {
            measured: vec![("C".to_string(), 1.5)],
            target_stage: 0,
            target_outcome: outcome,
            mode,
        };
        let gated = protocol.counterfactual(&query(QueryMode::Gated)).unwrap();
        let ungated = protocol.counterfactual(&query(QueryMode::Ungated)).unwrap();
        match (gated, ungated) {
            (QueryResult::Defined(g), QueryResult::Defined(u)) => prop_assert_eq!(g, u),
            // Both undefined only on an empty ensemble.
            (QueryResult::Undefined(g), QueryResult::Undefined(u)) => prop_assert_eq!(g, u),
            (g, u) => prop_assert!(false, "gate changed definedness inside a window: {:?} vs {:?}", g, u),
        }
    }

    /// The alignment operator is piecewise constant between events.
    #[test]
    fn alignment_is_piecewise_constant(seed in any::<u64>(), t1 in 1.01f64..1.99, t2 in 1.01f64..1.99) {
        let mut rng = rng(seed);
        let dim = 3;
        let c = random_observable(&mut rng, "C", dim);
        let states = BTreeMap::from([
            ("pre".to_string(), random_ket(&mut rng, dim)),
            ("post".to_string(), random_ket(&mut rng, dim)),
        ]);
        let protocol = Protocol::build(
            dim,
            states,
            BTreeMap::from([("C".to_string(), c)]),
            vec![prepare(0.0, "pre"), align(1.0, "C"), unalign(2.0, "C"), postselect(3.0, "post")],
        )
        .unwrap();
        prop_assert_eq!(protocol.alignment_at(t1).unwrap(), protocol.alignment_at(t2).unwrap());
        prop_assert_eq!(protocol.alignment_at(0.5).unwrap(), Operator::identity(dim));
        prop_assert_eq!(protocol.alignment_at(2.5).unwrap(), Operator::identity(dim));
    }
}
