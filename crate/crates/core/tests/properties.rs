use giem_core::combinatorics::{Monodromy, PermPair, StepType};
use giem_core::giem::Giem;
use giem_core::renorm::{partition, renormalize};
use giem_core::smoothmap::SmoothMap;
use giem_core::symbolic::Tower;
use proptest::prelude::*;

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, d);
            out.push(q);
        }
    }
    out
}

fn irreducible(d: usize) -> Vec<Monodromy> {
    permutations(d)
        .into_iter()
        .filter_map(|p| Monodromy::new(p).ok())
        .filter(|m| m.is_irreducible())
        .collect()
}

#[test]
fn rauzy_moves_follow_the_monodromy_rules() {
    for d in 2..=5 {
        for p in irreducible(d) {
            let pair = PermPair::from_monodromy(&p).unwrap();
            for ty in [StepType::Zero, StepType::One] {
                let moved = pair.rauzy_move(ty);
                assert!(moved.is_irreducible());
                assert_eq!(moved.monodromy(), p.rauzy_move(ty), "p = {:?}, type {}", p.values(), ty.index());
                assert_eq!(moved.positions(ty), pair.positions(ty));
            }
            assert_eq!(pair.rauzy_move(StepType::One).monodromy(), p.move_one());
            if p.is_rotation() {
                assert_eq!(pair.rauzy_move(StepType::Zero).monodromy(), p.move_zero_printed());
            }
        }
    }
}

#[test]
#[ignore = "the printed type-0 rule only holds on the rotation class"]
fn printed_type_zero_rule_on_every_irreducible_pair() {
    let mut bad = Vec::new();
    for d in 2..=5 {
        for p in irreducible(d) {
            let moved = PermPair::from_monodromy(&p).unwrap().rauzy_move(StepType::Zero).monodromy();
            if moved != p.move_zero_printed() {
                bad.push(p.values().to_vec());
            }
        }
    }
    assert!(bad.is_empty(), "{} counterexamples, first {:?}", bad.len(), bad.first());
}

fn smooth_map() -> impl Strategy<Value = SmoothMap<f64>> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(SmoothMap::moebius),
        (-2.0..2.0f64).prop_map(SmoothMap::pure_nonlinearity),
        (-0.9..0.9f64).prop_map(|t| SmoothMap::bump(t).unwrap()),
        ((-1.5..1.5f64), (-0.5..0.5f64)).prop_map(|(a, b)| {
            SmoothMap::compose(vec![SmoothMap::moebius(a), SmoothMap::bump(b).unwrap()]).unwrap()
        }),
        (-0.5..0.5f64).prop_map(|t| SmoothMap::bump(t).unwrap().inverse()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jets_match_finite_differences(m in smooth_map(), x in 0.05..0.95f64) {
        let h = 1e-4;
        let j = m.eval2(x).unwrap();
        let (vp, vm) = (m.eval(x + h).unwrap(), m.eval(x - h).unwrap());
        let d1 = (vp - vm) / (2.0 * h);
        let (jp, jm) = (m.eval2(x + h).unwrap(), m.eval2(x - h).unwrap());
        let d2 = (jp.d1 - jm.d1) / (2.0 * h);
        prop_assert!((j.d1 - d1).abs() < 1e-6 * (1.0 + j.d1.abs()), "{} vs {}", j.d1, d1);
        prop_assert!((j.d2 - d2).abs() < 1e-5 * (1.0 + j.d2.abs()), "{} vs {}", j.d2, d2);
        let inc = m.increment(x, 1e-3).unwrap();
        prop_assert!((inc - (m.eval(x + 1e-3).unwrap() - j.value)).abs() < 1e-13);
    }

    #[test]
    fn zoom_is_functorial(f in smooth_map(), g in smooth_map(), a in 0.0..0.5f64, w in 0.05..0.5f64) {
        let b = a + w;
        let gf = SmoothMap::compose(vec![f.clone(), g.clone()]).unwrap();
        let (fa, fb) = (f.eval(a).unwrap(), f.eval(b).unwrap());
        let left = gf.zoom(a, b).unwrap();
        let right = SmoothMap::compose(vec![f.zoom(a, b).unwrap(), g.zoom(fa, fb).unwrap()]).unwrap();
        for k in 0..=16 {
            let t = k as f64 / 16.0;
            let (u, v) = (left.eval2(t).unwrap(), right.eval2(t).unwrap());
            prop_assert!((u.value - v.value).abs() < 1e-10);
            prop_assert!((u.d1 - v.d1).abs() < 1e-8 * (1.0 + u.d1.abs()));
            prop_assert!((u.d2 - v.d2).abs() < 1e-6 * (1.0 + u.d2.abs()));
        }
    }

    #[test]
    fn moebius_maps_form_a_group(a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let ab = SmoothMap::compose(vec![SmoothMap::moebius(a), SmoothMap::moebius(b)]).unwrap();
        let direct = SmoothMap::moebius(a + b);
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            let (u, v) = (ab.eval2(x).unwrap(), direct.eval2(x).unwrap());
            prop_assert!((u.value - v.value).abs() < 1e-14);
            prop_assert!((u.d1 - v.d1).abs() < 1e-12);
            prop_assert!((u.d2 - v.d2).abs() < 1e-11);
        }
    }

    #[test]
    fn renormalized_intervals_tile(
        lengths in proptest::collection::vec(0.1..1.0f64, 3),
        shares in proptest::collection::vec(0.1..1.0f64, 3),
        which in 0usize..3,
    ) {
        let monodromies = [[3, 2, 1], [2, 3, 1], [3, 1, 2]];
        let p = Monodromy::new(monodromies[which].to_vec()).unwrap();
        let perm = PermPair::from_monodromy(&p).unwrap();
        let total = 1.0;
        let length_total: f64 = lengths.iter().sum();
        let share_total: f64 = shares.iter().sum();
        let lengths: Vec<f64> = lengths.iter().map(|l| l / length_total).collect();
        let images: Vec<f64> = shares.iter().map(|s| s / share_total).collect();
        let g = Giem::piecewise_affine(lengths, images, perm).unwrap();
        let trace = renormalize(&g, 12);
        for s in &trace.states {
            let (dl, il): (f64, f64) = (s.lengths.iter().sum(), s.image_lengths.iter().sum());
            prop_assert!((dl - il).abs() <= 1e-12 * total);
            prop_assert!(s.lengths.iter().chain(&s.image_lengths).all(|&x| x > 0.0));
            let cuts = s.cuts();
            prop_assert!(cuts.windows(2).all(|w| w[1] > w[0]));
        }
        for (n, step) in trace.steps.iter().enumerate() {
            let prev = &trace.states[n];
            let next = &trace.states[n + 1];
            prop_assert_eq!(&next.perm, &prev.perm.rauzy_move(step.step_type));
            let removed = match step.step_type {
                StepType::Zero => prev.image_lengths[step.loser],
                StepType::One => prev.lengths[step.loser],
            };
            prop_assert!((next.total_length() + removed - prev.total_length()).abs() <= 1e-12);
        }
    }

    #[test]
    fn partitions_tile_and_nest(rho in 0.05..0.95f64, bump in -0.1..0.1f64) {
        let h = SmoothMap::bump(bump).unwrap();
        let g = Giem::conjugated_rotation(&h, rho).unwrap();
        let trace = renormalize(&g, 10);
        let top = trace.levels();
        let mut prev: Option<giem_core::renorm::PartitionSnapshot> = None;
        for n in 0..=top {
            let p = partition(&trace, n, 1 << 22).unwrap();
            let mut x = 0.0;
            for iv in &p.intervals {
                prop_assert!((iv.left - x).abs() <= 1e-9);
                x = iv.left + iv.len;
            }
            prop_assert!((x - 1.0).abs() <= 1e-9);
            if let Some(prev) = &prev {
                for iv in &p.intervals {
                    let (b, j) = iv.parent.unwrap();
                    let holders: Vec<_> = prev
                        .intervals
                        .iter()
                        .filter(|o| o.left - 1e-9 <= iv.left && iv.left + iv.len <= o.left + o.len + 1e-9)
                        .collect();
                    prop_assert_eq!(holders.len(), 1);
                    prop_assert_eq!((holders[0].letter, holders[0].index), (b, j));
                }
            }
            prev = Some(p);
        }
    }

    #[test]
    fn cylinder_measures_and_conditionals(rho in 0.05..0.95f64, bump in -0.1..0.1f64) {
        let h = SmoothMap::bump(bump).unwrap();
        let g = Giem::conjugated_rotation(&h, rho).unwrap();
        let trace = renormalize(&g, 8);
        let top = trace.levels();
        let tower = Tower::build(&trace, top, 1 << 22).unwrap();
        for n in 0..=top {
            let cyl = tower.cylinders(n).unwrap();
            let sum: f64 = cyl.iter().map(|c| c.measure).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            if n == top {
                continue;
            }
            let children = tower.cylinders(n + 1).unwrap();
            for parent in &cyl {
                let mut total = 0.0;
                for child in children.iter().filter(|c| c.word[..=n] == parent.word[..]) {
                    let p = tower.conditional(&parent.word, child.word[n + 1]).unwrap();
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
                    prop_assert!(parent.left - 1e-12 <= child.left && child.right <= parent.right + 1e-12);
                    total += p;
                    if n >= 1 {
                        let grand = tower.conditional(&parent.word[..n], parent.word[n]).unwrap();
                        let direct = child.measure / tower.cylinders(n - 1).unwrap()
                            .iter()
                            .find(|c| c.word[..] == parent.word[..n])
                            .unwrap()
                            .measure;
                        prop_assert!((p * grand - direct).abs() <= 1e-12);
                    }
                }
                prop_assert!((total - 1.0).abs() <= 1e-12);
            }
        }
    }
}
