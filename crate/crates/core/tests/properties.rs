use proptest::prelude::*;
use qpke_core::boolfn::{gf2_nullspace, gf2_rank};
use qpke_core::qsym::{Gate, ProductState};
use qpke_core::schemes::{encrypt, FunctionModel, PrivateKey, SchemeId, SchemeParams};
use qpke_core::Bits;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scheme() -> impl Strategy<Value = SchemeId> {
    prop::sample::select(SchemeId::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decryption_inverts_encryption(scheme in scheme(), n in 2usize..=6, seed in any::<u64>(), oracle in any::<bool>()) {
        let model = if oracle { FunctionModel::Oracle } else { FunctionModel::Anf };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sk = PrivateKey::generate(&SchemeParams::new(scheme, n, seed).with_m((2 * n).min(10)).with_model(model), &mut rng).unwrap();
        let mut pk = sk.issue_public_key(&mut rng).unwrap();
        let msg = Bits::random(scheme.message_width(n), &mut rng);
        let ct = encrypt(&mut pk, &msg, &mut rng).unwrap();
        prop_assert_eq!(sk.decrypt(&ct, &mut rng).unwrap(), msg);
        prop_assert_eq!(sk.decrypt_dense(&ct).unwrap(), Some(msg));
    }

    #[test]
    fn decryption_identity(n in 1usize..=6, i in any::<u64>(), j in any::<u64>(), k in any::<u64>()) {
        let mask = (1u64 << n) - 1;
        let (i, j, k) = (Bits::new(n, i & mask).unwrap(), Bits::new(n, j & mask).unwrap(), Bits::new(n, k & mask).unwrap());
        let out = ProductState::computational(&i).unwrap().apply_hk(&k).unwrap().apply_yj(&j).unwrap().apply_hk(&k).unwrap();
        prop_assert_eq!(out.encoded_bits(), i ^ j);
        prop_assert!(out.x_basis_mask().is_zero());
        let expected = (2 * (j.dot(&(i ^ k)) as u32) + j.weight()) % 4;
        prop_assert_eq!(out.total_phase() as u32, expected);
    }

    #[test]
    fn self_inverse_gates_round_trip(n in 1usize..=6, seed in any::<u64>(), gates in prop::collection::vec((0usize..5, 0usize..6), 0..20)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = ProductState::encoded(&Bits::random(n, &mut rng), &Bits::random(n, &mut rng)).unwrap();
        let mut s = start.clone();
        for &(g, q) in &gates {
            s = s.apply_gate(Gate::ALL[g], q % n).unwrap();
        }
        for &(g, q) in gates.iter().rev() {
            s = s.apply_gate(Gate::ALL[g], q % n).unwrap();
        }
        prop_assert!(s.same_ray(&start));
    }

    #[test]
    fn nullspace_dimension(n in 1usize..=12, rows in prop::collection::vec(any::<u64>(), 0..16)) {
        let rows: Vec<Bits> = rows.into_iter().map(|r| Bits::new(n, r & ((1u64 << n) - 1)).unwrap()).collect();
        let null = gf2_nullspace(&rows, n).unwrap();
        prop_assert_eq!(null.len() + gf2_rank(&rows, n).unwrap(), n);
        for v in &null {
            prop_assert!(rows.iter().all(|r| !r.dot(v)));
        }
    }
}
