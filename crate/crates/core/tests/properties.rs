use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ite_core::lang::{parse_with_names, print_ctr};
use ite_core::oracle::{self, Connectives, GenOptions};
use ite_core::search::{LabelOptions, Labeling};
use ite_core::{Ctr, Env, KLimit, Status};

fn opts(connectives: Connectives) -> GenOptions {
    GenOptions { max_vars: 3, lo: -3, hi: 4, max_depth: 4, connectives }
}

fn instance(seed: u64, connectives: Connectives) -> oracle::Instance {
    oracle::random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &opts(connectives))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fixpoint_keeps_every_solution(seed in any::<u64>()) {
        let inst = instance(seed, Connectives::All);
        let check = oracle::check_instance(&inst, &oracle::DEFAULT_KS).unwrap();
        prop_assert!(check.sound());
        prop_assert!(check.labeling_ok());
    }

    #[test]
    fn printed_constraints_reparse(seed in any::<u64>()) {
        let inst = instance(seed, Connectives::All);
        let names: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
        let text = print_ctr(&inst.ctr, &names);
        let q = parse_with_names(&format!("{text}."), &names).unwrap();
        prop_assert_eq!(q.body, inst.ctr);
    }

    #[test]
    fn labeling_is_deterministic(seed in any::<u64>(), k in 0u32..4) {
        let inst = instance(seed, Connectives::Constructive);
        let run = || {
            let mut s = inst.store().unwrap();
            let mut env = Env::with_k(k);
            if s.post(&inst.ctr, &mut env).unwrap() == Status::Fail {
                return Vec::new();
            }
            let vars = inst.vars();
            Labeling::new(&mut s, &vars, LabelOptions::default(), &mut env)
                .map(|r| r.unwrap())
                .map(|sol| vars.iter().map(|&v| sol.get(v).unwrap()).collect::<Vec<i64>>())
                .collect::<Vec<_>>()
        };
        let first = run();
        prop_assert_eq!(&first, &oracle::solutions(&inst).unwrap());
        prop_assert_eq!(first, run());
    }

    #[test]
    fn speculation_leaves_the_store_alone(seed in any::<u64>()) {
        let inst = instance(seed, Connectives::CdOnly);
        let mut s = inst.store().unwrap();
        let vars = inst.vars();
        let before: Vec<_> = vars.iter().map(|&v| s.dom(v).clone()).collect();
        let mut env = Env::new(KLimit::Unbounded);
        let spec = s.speculate(&inst.ctr, &vars, &mut env).unwrap();
        let after: Vec<_> = vars.iter().map(|&v| s.dom(v).clone()).collect();
        prop_assert_eq!(before, after);
        prop_assert_eq!(s.live_propagators(), 0);
        if let Some(d) = spec.domains {
            let mut env = Env::new(KLimit::Unbounded);
            s.post(&inst.ctr, &mut env).unwrap();
            for (v, dom) in vars.iter().zip(d) {
                prop_assert_eq!(s.dom(*v), &dom);
            }
        }
    }

    #[test]
    fn complement_splits_the_box(seed in any::<u64>()) {
        let inst = instance(seed, Connectives::All);
        let neg = Ctr::cn(inst.ctr.clone());
        let both = Ctr::conj(inst.ctr.clone(), neg.clone());
        let both = oracle::Instance { doms: inst.doms.clone(), ctr: both };
        prop_assert!(oracle::solutions(&both).unwrap().is_empty());
        let total: usize = inst.doms.iter().map(|d| d.size().unwrap() as usize).product();
        let n = oracle::solutions(&inst).unwrap().len();
        let m = oracle::solutions(&oracle::Instance { doms: inst.doms.clone(), ctr: neg }).unwrap().len();
        prop_assert_eq!(n + m, total);
    }
}
