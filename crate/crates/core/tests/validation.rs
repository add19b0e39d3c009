use stratnet::validation::{run_instance, summarize, Instance, Mutation};

#[test]
fn instances_are_deterministic() {
    let a = Instance::generate(42, 3);
    assert_eq!(a, Instance::generate(42, 3));
    assert_ne!(a, Instance::generate(42, 4));
    assert_ne!(a, Instance::generate(43, 3));
    assert_eq!(run_instance(&a), run_instance(&a));
}

#[test]
fn instance_shape() {
    for case in 0..10 {
        let inst = Instance::generate(1, case);
        assert!((3..=6).contains(&inst.nodes));
        assert_eq!(inst.payoffs.len(), inst.nodes);
        assert_eq!(inst.states.len(), 8);
        for x in inst.states.iter().chain([&inst.x0]) {
            assert_eq!(x.len(), inst.nodes);
            assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        assert_eq!(inst.probe_starts.len(), 10);
        inst.game().unwrap();
    }
}

#[test]
fn clean_instances_pass_every_solver_property() {
    for case in 0..5 {
        let report = run_instance(&Instance::generate(42, case));
        for o in &report.outcomes {
            if o.property != "integrator.ssd.convergence" {
                assert!(o.passed, "case {case} {}: {:?}", o.property, o.detail);
            }
        }
    }
}

#[test]
fn mutation_is_caught() {
    let inst = Instance::generate(42, 0).with_mutation(Some(Mutation::WaterfillStop));
    let report = run_instance(&inst);
    assert!(!report.passed());
    assert!(report.failures().any(|o| o.property == "nbrd.kkt"));
    let summary = summarize(&[report]);
    let kkt = summary.iter().find(|s| s.property == "nbrd.kkt").unwrap();
    assert_eq!((kkt.passed, kkt.failed), (0, 1));
    assert_eq!(Mutation::parse("waterfill-stop"), Some(Mutation::WaterfillStop));
    assert_eq!(Mutation::WaterfillStop.name(), "waterfill-stop");
    assert_eq!(Mutation::parse("other"), None);
}
