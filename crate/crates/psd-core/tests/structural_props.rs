//! Property tests for the structural pieces: cell masks, lineage maps,
//! subset norms and the two-element closed form.

use proptest::prelude::*;
use psd_core::cells::{is_partition, labels_of, CellMask};
use psd_core::decomposition::CoarseningMap;
use psd_core::finite::{AtomicSpectralMeasure, StateVector};
use psd_core::proximity::w_two;
use psd_core::state::{subset_norms, State};
use psd_core::C64;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len..=len)
        .prop_map(|v| v.into_iter().map(|(re, im)| C64::new(re, im)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mask_algebra(bits in proptest::collection::vec(any::<bool>(), 1..24),
                    other in proptest::collection::vec(any::<bool>(), 1..24)) {
        let n = bits.len().min(other.len());
        let a = CellMask::from_bits(bits[..n].to_vec());
        let b = CellMask::from_bits(other[..n].to_vec());
        prop_assert_eq!(a.complement().complement(), a.clone());
        // De Morgan
        prop_assert_eq!(
            a.union(&b).complement(),
            a.complement().intersection(&b.complement())
        );
        prop_assert_eq!(a.difference(&b), a.intersection(&b.complement()));
        prop_assert_eq!(a.intersection(&b).count() == 0, a.is_disjoint(&b));
        prop_assert!(a.union(&a.complement()).count() == n);
    }

    #[test]
    fn labelings_partition(labels in proptest::collection::vec(0u8..5, 1..20)) {
        let n_labels = 5usize;
        let masks: Vec<CellMask> = (0..n_labels)
            .map(|l| CellMask::from_fn(labels.len(), |c| labels[c] == l as u8))
            .collect();
        prop_assert!(is_partition(&masks, labels.len()));
        let recovered = labels_of(&masks, labels.len());
        for (c, &l) in labels.iter().enumerate() {
            prop_assert_eq!(recovered[c], Some(l));
        }
    }

    #[test]
    fn lineage_composition_chains(fine in proptest::collection::vec(0usize..4, 4..10),
                                  coarse in proptest::collection::vec(0usize..2, 4..=4)) {
        // force surjectivity by pinning the first occurrences
        let mut fine = fine;
        for j in 0..4 { fine[j] = j; }
        let mut coarse = coarse;
        coarse[0] = 0;
        coarse[1] = 1;
        let f = CoarseningMap::new(fine.clone(), 4).unwrap();
        let c = CoarseningMap::new(coarse.clone(), 2).unwrap();
        let composed = f.compose(&c).unwrap();
        prop_assert_eq!(composed.coarse_len, 2);
        for (k, &mid) in fine.iter().enumerate() {
            prop_assert_eq!(composed.fine_to_coarse[k], coarse[mid]);
        }
        // groups partition the fine index set
        let mut seen = vec![false; fine.len()];
        for j in 0..2 {
            for k in composed.group(j) {
                prop_assert!(!seen[k]);
                seen[k] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn subset_norms_agree_with_direct_sums(
        a in complex_vec(4), b in complex_vec(4), c in complex_vec(4),
    ) {
        let items = [
            StateVector::from_components(a),
            StateVector::from_components(b),
            StateVector::from_components(c),
        ];
        let norms = subset_norms(&items);
        prop_assert_eq!(norms.len(), 8);
        for mask in 0u32..8 {
            let members: Vec<StateVector> = (0..3)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| items[i].clone())
                .collect();
            let direct = psd_core::state::sum_states(&members)
                .map(|s| s.norm())
                .unwrap_or(0.0);
            prop_assert!((norms[mask as usize] - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn two_element_value_is_symmetric_and_clamped(
        a in complex_vec(5), b in complex_vec(5),
    ) {
        let sa = StateVector::from_components(a);
        let sb = StateVector::from_components(b);
        prop_assume!(sa.norm() > 1e-3 && sb.norm() > 1e-3);
        let measure = AtomicSpectralMeasure::coordinate_line(5);
        let ab = w_two(&measure, &sa, &sb).unwrap();
        let ba = w_two(&measure, &sb, &sa).unwrap();
        prop_assert!((ab.value - ba.value).abs() < 1e-12);
        prop_assert!(ab.value >= 0.0 && ab.value <= 1.0 + 1e-12);
    }
}
