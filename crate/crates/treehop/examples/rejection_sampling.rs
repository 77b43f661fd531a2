//! Rejection sampling: majority voting over sampled answers.
//!
//! Samples vote by normalized form, so surface variants of the same answer
//! pool their counts; a winning none-literal signals insufficient evidence.
//!
//! Run: `cargo run -p treehop --example rejection_sampling`

use treehop::solver::{default_none_literals, select_majority, MajorityOutcome};

fn show(label: &str, samples: &[&str]) {
    let owned: Vec<String> = samples.iter().map(|s| s.to_string()).collect();
    let outcome = select_majority(&owned, &default_none_literals()).unwrap();
    let winner = outcome.winner();
    println!("{label}");
    println!("  samples: {samples:?}");
    println!(
        "  winner:  {:?} (normalized {:?}, frequency {}/{})",
        winner.raw_text,
        winner.normalized_text,
        winner.frequency,
        samples.len()
    );
    match outcome {
        MajorityOutcome::Answer(_) => println!("  -> accepted\n"),
        MajorityOutcome::None(_) => println!("  -> None-result: evidence insufficient\n"),
    }
}

fn main() {
    // Normalization merges "vienna." with "Vienna": 3 votes beat 2.
    show(
        "surface variants pool their votes",
        &["Vienna", "Vienna", "Pest", "vienna.", "Budapest"],
    );

    // A none-majority rejects the whole sample set.
    show(
        "none forms win here",
        &["None", "none", "NONE", "Pest", "Pest"],
    );

    // Frequency ties break toward the group whose sample came first.
    show(
        "tie goes to the earliest sample",
        &["Pest", "Vienna", "Vienna", "Pest"],
    );
}
