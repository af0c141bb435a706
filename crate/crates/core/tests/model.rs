mod common;

use common::cubic;
use deckland::uav_model::{JerkInput, ModelMatrices, UavState};
use proptest::prelude::*;

#[test]
fn kronecker_structure() {
    for dt in [0.001, 0.01, 0.05, 0.2] {
        let m = ModelMatrices::new(dt).unwrap();
        for r in 0..12 {
            for c in 0..12 {
                let expected = if r / 3 == c / 3 { m.d_block[(r % 3, c % 3)] } else { 0.0 };
                assert_eq!(m.d[(r, c)], expected);
            }
            for c in 0..4 {
                let expected = if r / 3 == c { m.e_block[r % 3] } else { 0.0 };
                assert_eq!(m.e[(r, c)], expected);
            }
        }
    }
}

#[test]
fn horizon_holds_last_input() {
    let m = ModelMatrices::new(0.01).unwrap();
    let inputs: Vec<JerkInput> = (0..40).map(|k| JerkInput::repeat(k as f64 * 0.1)).collect();
    let states = m.rollout(&UavState::zeros(), &inputs, 100, 40).unwrap();
    let mut s = states[39];
    for m_step in 40..100 {
        s = m.step(&s, &inputs[39]);
        assert_eq!(s, states[m_step]);
    }
}

proptest! {
    #[test]
    fn constant_jerk_rollout_is_cubic(
        p in -5.0f64..5.0, v in -3.0f64..3.0, a in -2.0f64..2.0,
        j in -20.0f64..20.0, k in 1usize..=100,
    ) {
        let dt = 0.01;
        let m = ModelMatrices::new(dt).unwrap();
        let mut s0 = UavState::zeros();
        for axis in 0..4 {
            s0.set(axis, p, v, a);
        }
        let u = JerkInput::repeat(j);
        let states = m.rollout(&s0, &vec![u; k], k, k).unwrap();
        let exact = cubic(p, v, a, j, k as f64 * dt);
        for axis in 0..4 {
            let b = states[k - 1].block(axis);
            for i in 0..3 {
                prop_assert!((b[i] - exact[i]).abs() < 1e-12, "axis {axis} slot {i}: {} vs {}", b[i], exact[i]);
            }
        }
    }

    #[test]
    fn rollout_is_linear(a in -1.0f64..1.0, b in -1.0f64..1.0, seed in 0u64..1000) {
        let m = ModelMatrices::new(0.01).unwrap();
        let gen = |s: u64| -> Vec<JerkInput> {
            (0..10).map(|k| JerkInput::from_fn(|i, _| ((s * 31 + k * 7 + i as u64 * 3) % 17) as f64 - 8.0)).collect()
        };
        let (u1, u2) = (gen(seed), gen(seed + 1));
        let mix: Vec<JerkInput> = u1.iter().zip(&u2).map(|(x, y)| x * a + y * b).collect();
        let r1 = m.rollout(&UavState::zeros(), &u1, 20, 10).unwrap();
        let r2 = m.rollout(&UavState::zeros(), &u2, 20, 10).unwrap();
        let rm = m.rollout(&UavState::zeros(), &mix, 20, 10).unwrap();
        for i in 0..20 {
            let lin = r1[i].0 * a + r2[i].0 * b;
            prop_assert!((rm[i].0 - lin).abs().max() < 1e-12);
        }
    }
}
