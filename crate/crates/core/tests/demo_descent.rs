use tensorlite::demo::{run, DemoConfig, Task};

fn outcome(task: Task, seed: u64) -> (Vec<String>, f32, f32, bool) {
    let cfg = DemoConfig {
        seed,
        ..DemoConfig::new(task)
    };
    let out = run(cfg, |_| {}).unwrap();
    let log = out.records.iter().map(ToString::to_string).collect();
    (log, out.final_loss(), out.accuracy, out.threshold_met())
}

#[test]
fn xor_reaches_low_mse_for_three_seeds() {
    for seed in 0..3 {
        let (_, loss, acc, ok) = outcome(Task::Xor, seed);
        println!("xor seed {seed}: mse {loss} acc {acc}");
        assert!(ok, "seed {seed}: final mse {loss}");
    }
}

#[test]
fn blobs_reach_high_accuracy_for_three_seeds() {
    for seed in 0..3 {
        let (_, loss, acc, ok) = outcome(Task::Blobs, seed);
        println!("blobs seed {seed}: loss {loss} acc {acc}");
        assert!(ok, "seed {seed}: accuracy {acc}");
    }
}

#[test]
fn loss_descends() {
    for task in [Task::Xor, Task::Blobs] {
        let (log, last, _, _) = outcome(task, 0);
        let first: f32 = log[0].split(',').nth(1).unwrap().parse().unwrap();
        assert!(last < first / 2.0, "{task:?}: {first} -> {last}");
    }
}

#[test]
fn logs_are_bit_identical_across_runs() {
    for task in [Task::Xor, Task::Blobs] {
        assert_eq!(outcome(task, 7).0, outcome(task, 7).0);
    }
}
