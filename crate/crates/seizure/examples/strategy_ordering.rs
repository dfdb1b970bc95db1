//! Cross-validates every strategy on the in-memory synthetic corpus and
//! prints mean F1DEmean per strategy with per-pass training diagnostics.
//!
//! `cargo run --release -p hdc-seizure --example strategy_ordering [config]`

use std::time::Instant;

use hdc_core::Strategy;
use hdc_seizure::config::ExperimentConfig;
use hdc_seizure::dataio::build_dataset;
use hdc_seizure::features::FeatureRegistry;
use hdc_seizure::harness::{bench, run_experiment, Settings};
use hdc_seizure::pipeline::{synth_subject, synth_subject_name};
use rayon::prelude::*;

fn main() -> hdc_seizure::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::from_file(p.as_ref())?,
        None => ExperimentConfig::parse(include_str!("../../../configs/synthetic.conf"))?,
    };
    let started = Instant::now();
    let registry = FeatureRegistry::by_id(&cfg.registry)?;
    let datasets = (0..cfg.synth.subjects)
        .into_par_iter()
        .map(|i| {
            let subject = synth_subject_name(i);
            let recs = synth_subject(&cfg, &subject)?;
            Ok(build_dataset(&subject, &recs, &cfg.dataset(), &registry)?.1)
        })
        .collect::<hdc_seizure::Result<Vec<_>>>()?;
    println!("featurized in {:.1} s", started.elapsed().as_secs_f64());
    let settings = Settings::from_config(&cfg)?;
    let results = run_experiment(&datasets, &Strategy::ALL, &settings);
    println!("trained in {:.1} s", started.elapsed().as_secs_f64());
    for s in Strategy::ALL {
        let sum = results.summarize(s);
        let per: Vec<String> = sum.iter().map(|x| x.mean.map_or("fail".into(), |m| format!("{:.3}", m[6]))).collect();
        let ok: Vec<f64> = sum.iter().filter_map(|x| x.mean.map(|m| m[6])).collect();
        let cents: Vec<String> = sum.iter().map(|x| format!("{:.0}/{:.0}", x.mean_centroids[0], x.mean_centroids[1])).collect();
        println!(
            "{:5} mean {:.4}  [{}]  centroids [{}]",
            s.tag(),
            ok.iter().sum::<f64>() / ok.len().max(1) as f64,
            per.join(" "),
            cents.join(" ")
        );
    }
    for s in [Strategy::MultiPassAdd, Strategy::MultiPassAddSubtract, Strategy::MultiCentroidRefined] {
        for (run, o) in results.outcomes(s) {
            let scores: Vec<String> = o.stats.train_score_per_pass.iter().map(|v| format!("{v:.3}")).collect();
            let readd: Vec<String> = o.stats.readded_fraction_per_pass.iter().map(|v| format!("{v:.3}")).collect();
            println!(
                "{:5} {} {} sel {} scores [{}] readded [{}]",
                s.tag(),
                run.subject,
                run.test_name,
                o.stats.selected_pass,
                scores.join(" "),
                readd.join(" ")
            );
        }
    }
    let started = Instant::now();
    for r in bench(&datasets, &Strategy::ALL, Strategy::SinglePass, &settings, cfg.bench_repeats)? {
        println!(
            "bench {:5} {:.5} s ({:.2}x)  {} bytes ({:.2}x)",
            r.strategy.tag(),
            r.train_secs,
            r.train_rel,
            r.model_bytes,
            r.memory_rel
        );
    }
    println!("bench in {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}
