//! `qfea synth`: generate a deterministic bona-fide/spoof corpus.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qfea::audio::Partition;
use qfea::echo::{synthesize_corpus, CorpusConfig};
use qfea::Result;

use crate::chain::{format_chain, parse_chain};
use crate::manifest::{guard_overwrite, write_manifest, RunManifest};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct SynthParams {
    /// Corpus seed; the whole corpus is a pure function of the flags.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Trials per class (bona fide and spoof).
    #[arg(long, default_value_t = 200)]
    pub n_per_class: usize,

    /// Output directory for WAVs, protocol.txt, and manifest.json.
    #[arg(long)]
    pub out: PathBuf,

    /// Protocol partition: train, dev, or eval.
    #[arg(long, default_value = "train")]
    pub partition: String,

    /// Sample rate in Hz.
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,

    /// Bona-fide room chain: "alpha:tau_ms[,alpha:tau_ms...][;band:lo-hi][;noise:snr_db]".
    #[arg(long, default_value = "0.4:6")]
    pub bona_chain: String,

    /// Extra replay chain applied to spoof trials, same syntax.
    #[arg(long, default_value = "0.5:3.75,0.3:1.25;band:100-7000")]
    pub spoof_chain: String,
}

pub fn run(params: &SynthParams, force: bool) -> Result<()> {
    let partition: Partition = params.partition.parse()?;
    let bona_chain = parse_chain(&params.bona_chain, params.sample_rate)?;
    let spoof_chain = parse_chain(&params.spoof_chain, params.sample_rate)?;

    std::fs::create_dir_all(&params.out)?;
    guard_overwrite(&params.out.join("protocol.txt"), force)?;

    let cfg = CorpusConfig {
        seed: params.seed,
        n_per_class: params.n_per_class,
        sample_rate_hz: params.sample_rate,
        partition,
        bona_chain,
        spoof_chain,
    };
    let protocol = synthesize_corpus(&cfg, &params.out)?;

    let mut outputs: Vec<String> = protocol
        .records
        .iter()
        .map(|r| params.out.join(format!("{}.wav", r.trial_id)).to_string_lossy().into_owned())
        .collect();
    outputs.push(params.out.join("protocol.txt").to_string_lossy().into_owned());
    let manifest = RunManifest::new("synth", params, vec![], outputs)?;
    write_manifest(&params.out.join("manifest.json"), &manifest)?;

    println!(
        "synthesized {} trials ({} per class) into {}",
        protocol.records.len(),
        params.n_per_class,
        params.out.display()
    );
    println!(
        "room chain {} / replay chain {}",
        format_chain(&cfg.bona_chain, params.sample_rate),
        format_chain(&cfg.spoof_chain, params.sample_rate)
    );
    Ok(())
}
