use std::time::Instant;

use ideation_core::train::synth::synthetic_corpus;
use ideation_core::{run_experiment, ExperimentConfig};

fn main() {
    let docs = synthetic_corpus(2000, 7);
    let start = Instant::now();
    let out = run_experiment(&docs, &ExperimentConfig::default()).expect("training failed");
    for r in &out.history.records {
        println!(
            "epoch {:>2}  loss {:.4}  acc {:.4}  val_loss {:.4}  val_acc {:.4}",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
        );
    }
    println!("test accuracy {:.5}", out.test_evaluation.overall.accuracy);
    println!("elapsed {:.1?}", start.elapsed());
}
