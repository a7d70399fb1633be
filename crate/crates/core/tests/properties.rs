//! Property tests for the invariants shared by every estimator.

use magiclab::gates::{hadamard, phase_s, rotation, t_gate};
use magiclab::models::{
    build_hamiltonian, lanczos_ground_state, random_clifford, HamiltonianSpec, Model,
};
use magiclab::mps::dmrg::{dmrg_ground_state, DmrgConfig};
use magiclab::mps::MatrixProductState;
use magiclab::oracle::{PauliSpectrum, QSpectrum};
use magiclab::rng::stream_rng;
use magiclab::{DenseOperator, DenseState, PauliOp, PauliString, Region};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;

fn haar(n: usize, seed: u64) -> DenseState {
    DenseState::haar_random(n, &mut stream_rng(seed, 0)).unwrap()
}

fn kron(a: &DenseState, b: &DenseState) -> DenseState {
    let amps = a
        .amplitudes()
        .iter()
        .flat_map(|x| b.amplitudes().iter().map(move |y| x * y))
        .collect();
    DenseState::new(amps).unwrap()
}

fn magic(state: &DenseState) -> (f64, f64, f64) {
    let s = PauliSpectrum::from_state(state).unwrap();
    (
        s.von_neumann_sre(),
        s.sre(2.0).unwrap(),
        s.magic_capacity().unwrap(),
    )
}

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(0u8..4, n).prop_map(|codes| {
        PauliString::new(
            codes
                .into_iter()
                .map(|c| PauliOp::from_code(c).unwrap())
                .collect(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn pauli_squares_to_identity(p in (1usize..5).prop_flat_map(pauli_string)) {
        let m = p.dense_matrix().unwrap();
        let sq = &m * &m;
        let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
        prop_assert!((sq - id).norm() < 1e-12);
    }

    #[test]
    fn text_and_index_round_trip(p in (1usize..12).prop_flat_map(pauli_string)) {
        let text = p.to_string();
        prop_assert_eq!(text.parse::<PauliString>().unwrap(), p.clone());
        let index = p.index().unwrap();
        prop_assert_eq!(PauliString::from_index(p.n_qubits(), index).unwrap(), p.clone());
        let packed = p.ops().iter().enumerate().map(|(q, op)| (op.code() as u64) << (2 * q)).sum::<u64>();
        prop_assert_eq!(index, packed);
    }

    #[test]
    fn gates_preserve_norm(seed in any::<u64>()) {
        let n = 5;
        let mut state = haar(n, seed);
        let mut rng = stream_rng(seed, 1);
        let singles = [hadamard(), phase_s(), t_gate(), rotation(PauliOp::Y, 0.37)];
        for _ in 0..100 {
            if rng.random::<bool>() {
                let q = rng.random_range(0..n);
                state.apply_1q(&singles[rng.random_range(0..singles.len())], q).unwrap();
            } else {
                let c = rng.random_range(0..n);
                let t = (c + rng.random_range(1..n)) % n;
                state.apply_cnot(c, t).unwrap();
            }
        }
        prop_assert!((state.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectra_are_normalized_and_q_equals_p_for_pure(seed in any::<u64>(), n in 1usize..5) {
        let state = haar(n, seed);
        let p = PauliSpectrum::from_state(&state).unwrap().p();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let q = QSpectrum::from_state(&state).unwrap();
        prop_assert!((q.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (a, b) in p.iter().zip(q.values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mixed_q_is_normalized(seed in any::<u64>()) {
        let state = haar(5, seed);
        let rho = state.reduced_density(&Region::new(5, vec![0, 2, 3]).unwrap()).unwrap();
        let q = QSpectrum::from_operator(&rho).unwrap();
        prop_assert!((q.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let p = PauliSpectrum::from_operator(&rho).unwrap().p();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn magic_is_clifford_invariant(seed in any::<u64>()) {
        let mut state = haar(5, seed);
        let before = magic(&state);
        random_clifford(5, seed ^ 0xc1).unwrap().apply(&mut state).unwrap();
        let after = magic(&state);
        prop_assert!((before.0 - after.0).abs() < 1e-9);
        prop_assert!((before.1 - after.1).abs() < 1e-9);
        prop_assert!((before.2 - after.2).abs() < 1e-9);
    }

    #[test]
    fn magic_is_additive(seed in any::<u64>()) {
        let (a, b) = (haar(3, seed), haar(3, seed.wrapping_add(1)));
        let (ma, mb, mab) = (magic(&a), magic(&b), magic(&kron(&a, &b)));
        prop_assert!((ma.0 + mb.0 - mab.0).abs() < 1e-9);
        prop_assert!((ma.1 + mb.1 - mab.1).abs() < 1e-9);
        prop_assert!((ma.2 + mb.2 - mab.2).abs() < 1e-9);
    }

    #[test]
    fn renyi_sre_is_non_increasing(seed in any::<u64>(), n in 1usize..6) {
        let s = PauliSpectrum::from_state(&haar(n, seed)).unwrap();
        let values = [
            s.sre(0.5).unwrap(),
            s.von_neumann_sre(),
            s.sre(2.0).unwrap(),
            s.sre(3.0).unwrap(),
            s.sre(4.0).unwrap(),
        ];
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{values:?}");
        }
    }

    #[test]
    fn q_partial_trace_law(seed in any::<u64>(), traced in 0usize..4) {
        let n = 4;
        let state = haar(n, seed);
        let marginal = QSpectrum::from_operator(&DenseOperator::from_state(&state)).unwrap().marginalize(traced).unwrap();
        let kept = Region::new(n, vec![traced]).unwrap().complement();
        let direct = QSpectrum::from_operator(&state.reduced_density(&kept).unwrap()).unwrap();
        for (a, b) in marginal.values().iter().zip(direct.values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mps_gauge_invariance(seed in any::<u64>()) {
        let mps = MatrixProductState::random(6, 4, &mut stream_rng(seed, 0)).unwrap();
        let (mut left, mut right) = (mps.clone(), mps);
        left.left_canonicalize().unwrap();
        right.right_canonicalize().unwrap();
        let p: PauliString = "XZYIZX".parse().unwrap();
        prop_assert!((left.expectation(&p).unwrap() - right.expectation(&p).unwrap()).abs() < 1e-9);
        for cut in 1..6 {
            prop_assert!((left.renyi2_entropy(cut).unwrap() - right.renyi2_entropy(cut).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn subsystem_purity_identity(seed in any::<u64>(), start in 0usize..5, len in 1usize..4) {
        let n = 7;
        let mps = MatrixProductState::random(n, 4, &mut stream_rng(seed, 0)).unwrap();
        let region = Region::interval(n, start, (start + len).min(n)).unwrap();
        let purity = mps.subsystem_pauli_purity(&region, &PauliString::identity(region.len())).unwrap();
        let s2 = mps.region_renyi2(&region).unwrap();
        prop_assert!((purity * s2.exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn local_rotation_keeps_entanglement(seed in any::<u64>(), theta in 0.0f64..3.0) {
        let mut state = haar(5, seed);
        let region = Region::new(5, vec![0, 1]).unwrap();
        let before = state.renyi2_entropy(&region).unwrap();
        state.rotate_local_basis(&rotation(PauliOp::Y, theta)).unwrap();
        prop_assert!((state.renyi2_entropy(&region).unwrap() - before).abs() < 1e-9);
    }

    #[test]
    fn purity_matches_renyi2(seed in any::<u64>()) {
        let state = haar(5, seed);
        let region = Region::new(5, vec![1, 3]).unwrap();
        let purity = state.reduced_density(&region).unwrap().purity();
        prop_assert!((purity - (-state.renyi2_entropy(&region).unwrap()).exp()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn dmrg_is_variational(h in 0.2f64..2.0, delta in 0.0f64..1.5) {
        for model in [Model::Tfim { h }, Model::Xxz { delta }] {
            let spec = HamiltonianSpec::new(model, 8);
            let cfg = DmrgConfig::default();
            let dmrg = dmrg_ground_state(&spec, &cfg).unwrap();
            for w in dmrg.sweep_energies.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", dmrg.sweep_energies);
            }
            let exact = lanczos_ground_state(&spec).unwrap();
            prop_assert!(exact.energy <= dmrg.energy + 1e-9);
            let h = build_hamiltonian(&spec).unwrap();
            prop_assert!((h.energy(&dmrg.state.to_dense().unwrap()).unwrap() - dmrg.energy).abs() < 1e-8);
        }
    }
}

#[test]
fn paulis_are_orthogonal_at_three_qubits() {
    let n = 3;
    let mats: Vec<DMatrix<C64>> = (0..64)
        .map(|i| {
            PauliString::from_index(n, i)
                .unwrap()
                .dense_matrix()
                .unwrap()
        })
        .collect();
    for (i, a) in mats.iter().enumerate() {
        for (j, b) in mats.iter().enumerate() {
            let t = (a * b).trace() / 8.0;
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!(
                (t.re - expect).abs() < 1e-12 && t.im.abs() < 1e-12,
                "{i} {j}"
            );
        }
    }
}
