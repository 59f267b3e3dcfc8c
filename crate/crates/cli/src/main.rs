//! Command-line interface for the lyralign alignment chain.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lyralign::audio_io::{load_audio, save_wav};
use lyralign::error::Error;
use lyralign::metrics::{
    accuracy_curve, default_tau_grid, song_mad, unit_accuracy, vad_scores, AlignmentPrediction,
};
use lyralign::pipeline::grid::{default_offsets, default_varsigmas, grid_search};
use lyralign::pipeline::io::{
    apply_config_pair, load_config_file, read_annotations, write_curve_csv, write_grid_csv,
    write_json, write_lrc, write_matrix_csv, write_pgm, write_trace_csv, write_warp_svg,
};
use lyralign::pipeline::synth::{render_audio, synth_generate, RenderConfig, SynthSpec};
use lyralign::pipeline::{align, PipelineConfig, PIPELINE_RATE};
use lyralign::separation::{separate_voice, SeparationConfig};
use lyralign::vad::{build_timeline, detect, segments, smooth, Segment, VAD_FRAME_S};
use lyralign::Fp;

#[derive(Parser)]
#[command(
    name = "lyralign",
    about = "Unsupervised lyrics-to-audio alignment from vowel repetition patterns",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Align lyrics to a recording and write predicted unit timestamps.
    Align(AlignArgs),
    /// Separate the singing voice from a mixture and write it as WAV.
    Separate(SeparateArgs),
    /// Detect voice activity and write active segments as JSON.
    Vad(VadArgs),
    /// Score predictions against reference annotations.
    Eval(EvalArgs),
    /// Generate a synthetic song (lyrics, ground truth, features, audio).
    Synth(SynthArgs),
    /// Grid-search K offset and CCA energy on synthetic validation songs.
    Grid(GridArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Lyrics language: kr or en.
    #[arg(long)]
    language: Option<String>,
    /// CMU-format pronouncing dictionary (required for English).
    #[arg(long)]
    dict: Option<PathBuf>,
    /// VAD log-energy threshold θ.
    #[arg(long)]
    theta: Option<Fp>,
    /// Self-similarity mode: heat_similarity or eq1_literal.
    #[arg(long)]
    ssm_mode: Option<String>,
    /// Heat-kernel bandwidth: `median` or a positive number.
    #[arg(long)]
    sigma: Option<String>,
    /// Factorization rank offset i in K = L' + i.
    #[arg(long)]
    k_offset: Option<isize>,
    /// Entropic sparsity ℓ.
    #[arg(long)]
    sparsity: Option<Fp>,
    /// CCA energy fraction ς in (0, 1].
    #[arg(long)]
    varsigma: Option<Fp>,
    /// UTW over-sampling factor ϱ.
    #[arg(long)]
    rho: Option<f64>,
    /// CCA ridge η.
    #[arg(long)]
    eta: Option<Fp>,
    /// RNG seed for the factorization.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip singing-voice separation.
    #[arg(long)]
    no_separation: bool,
}

impl ConfigArgs {
    fn build(&self) -> Result<PipelineConfig, Error> {
        let mut config = PipelineConfig::default();
        if let Some(path) = &self.config {
            load_config_file(&mut config, path)?;
        }
        if let Some(v) = &self.language {
            apply_config_pair(&mut config, "language", v)?;
        }
        if let Some(v) = &self.dict {
            config.dictionary_path = Some(v.clone());
        }
        if let Some(v) = self.theta {
            config.vad_theta = v;
        }
        if let Some(v) = &self.ssm_mode {
            apply_config_pair(&mut config, "ssm.mode", v)?;
        }
        if let Some(v) = &self.sigma {
            apply_config_pair(&mut config, "ssm.sigma", v)?;
        }
        if let Some(v) = self.k_offset {
            config.k_offset = v;
        }
        if let Some(v) = self.sparsity {
            config.sparsity = v;
        }
        if let Some(v) = self.varsigma {
            config.varsigma = v;
        }
        if let Some(v) = self.rho {
            config.rho = v;
        }
        if let Some(v) = self.eta {
            config.eta = v;
        }
        if let Some(v) = self.seed {
            config.rng_seed = v;
        }
        if self.no_separation {
            config.separation = false;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct AlignArgs {
    /// Input recording (PCM WAV).
    #[arg(long)]
    audio: PathBuf,
    /// Lyrics text file (UTF-8, one line per lyric line).
    #[arg(long)]
    lyrics: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Prediction JSON output path.
    #[arg(long, default_value = "prediction.json")]
    out: PathBuf,
    /// Enhanced LRC output path.
    #[arg(long)]
    lrc: Option<PathBuf>,
    /// Run report JSON output path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Dump the self-similarity matrix as a PGM image.
    #[arg(long)]
    dump_ssm: Option<PathBuf>,
    /// Dump the activation matrix B as CSV.
    #[arg(long)]
    dump_b: Option<PathBuf>,
    /// Dump the subspace matrix W as CSV.
    #[arg(long)]
    dump_w: Option<PathBuf>,
    /// Dump the factorization objective trace as CSV.
    #[arg(long)]
    dump_trace: Option<PathBuf>,
    /// Dump the DTW cost surface and warp path as SVG.
    #[arg(long)]
    dump_warp: Option<PathBuf>,
}

#[derive(Args)]
struct SeparateArgs {
    #[arg(long)]
    audio: PathBuf,
    /// Separated-voice WAV output path.
    #[arg(long)]
    out: PathBuf,
    /// Sparsity weight scale λ.
    #[arg(long, default_value_t = 1.0)]
    lambda: Fp,
    /// Mask gain: keep cells where |sparse| > gain·|low rank|.
    #[arg(long, default_value_t = 1.0)]
    gain: Fp,
}

#[derive(Args)]
struct VadArgs {
    #[arg(long)]
    audio: PathBuf,
    #[arg(long, default_value_t = 1.88)]
    theta: Fp,
    /// Run the detector on the mixture instead of the separated voice.
    #[arg(long)]
    no_separation: bool,
    /// Active-segment JSON output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Reference annotation JSON.
    #[arg(long)]
    truth: PathBuf,
    /// Predicted annotation JSON.
    #[arg(long)]
    pred: PathBuf,
    /// Accuracy tolerance τ in seconds.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// β for the F-measure when scoring VAD segments.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Write the τ-accuracy curve as CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Reference VAD segments JSON (enables VAD scoring).
    #[arg(long)]
    ref_vad: Option<PathBuf>,
    /// Predicted VAD segments JSON.
    #[arg(long)]
    pred_vad: Option<PathBuf>,
    /// Metrics JSON output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for lyrics.txt, truth.json, features.csv and song.wav.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 60)]
    units: usize,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0.25)]
    min_dur: f64,
    #[arg(long, default_value_t = 0.5)]
    max_dur: f64,
    #[arg(long, default_value_t = 8)]
    gap_every: usize,
    #[arg(long, default_value_t = 0.4)]
    gap_s: f64,
    /// Also render the song as WAV (harmonic tones plus accompaniment).
    #[arg(long)]
    render_audio: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Grid CSV output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 24)]
    units: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    /// Number of synthetic validation songs.
    #[arg(long, default_value_t = 2)]
    songs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; parallelizes across songs only.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Align(args) => run_align(args),
        Command::Separate(args) => run_separate(args),
        Command::Vad(args) => run_vad(args),
        Command::Eval(args) => run_eval(args),
        Command::Synth(args) => run_synth(args),
        Command::Grid(args) => run_grid(args),
    }
}

fn run_align(args: AlignArgs) -> Result<(), Error> {
    let config = args.config.build()?;
    let output = align(&args.audio, &args.lyrics, &config)?;
    write_json(&output.prediction, &args.out)?;
    println!(
        "aligned {} units (L'={}, K={}, {} CTW cycles) -> {}",
        output.prediction.len(),
        output.report.l_prime,
        output.report.k,
        output.report.ctw_cycles,
        args.out.display()
    );
    if let Some(path) = &args.lrc {
        write_lrc(&output.lrc_lines, path)?;
    }
    if let Some(path) = &args.report {
        write_json(&output.report, path)?;
    }
    if let Some(path) = &args.dump_ssm {
        write_pgm(&output.diagnostics.ssm.view(), path)?;
    }
    if let Some(path) = &args.dump_b {
        write_matrix_csv(&output.diagnostics.activations.view(), path)?;
    }
    if let Some(path) = &args.dump_w {
        write_matrix_csv(&output.diagnostics.subspace.view(), path)?;
    }
    if let Some(path) = &args.dump_trace {
        write_trace_csv(&output.diagnostics.objective_trace, path)?;
    }
    if let Some(path) = &args.dump_warp {
        write_warp_svg(&output.diagnostics, path)?;
    }
    Ok(())
}

fn run_separate(args: SeparateArgs) -> Result<(), Error> {
    let clip = load_audio(&args.audio, PIPELINE_RATE)?;
    let mut config = SeparationConfig::default();
    config.rpca.lambda_scale = args.lambda;
    config.gain = args.gain;
    let voice = separate_voice(&clip, &config)?;
    save_wav(&voice, &args.out)?;
    println!(
        "separated voice ({}/{} of mixture energy) -> {}",
        voice.energy(),
        clip.energy(),
        args.out.display()
    );
    Ok(())
}

fn run_vad(args: VadArgs) -> Result<(), Error> {
    let clip = load_audio(&args.audio, PIPELINE_RATE)?;
    let voice = if args.no_separation {
        clip
    } else {
        separate_voice(&clip, &SeparationConfig::default())?
    };
    let decision = smooth(&detect(&voice, args.theta)?);
    let segs = segments(&decision);
    // Surface the no-voice condition with the dedicated exit code.
    build_timeline(&decision, VAD_FRAME_S)?;
    match &args.out {
        Some(path) => write_json(&segs, path)?,
        None => println!("{}", serde_json::to_string_pretty(&segs)?),
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct EvalReport {
    song_id: String,
    n_units: usize,
    tau_s: f64,
    accuracy_pct: f64,
    mad_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    vad: Option<lyralign::metrics::VadScores>,
}

fn segments_to_frames(segs: &[Segment], total_s: f64) -> Vec<bool> {
    let n = (total_s / VAD_FRAME_S).ceil() as usize;
    (0..n)
        .map(|i| {
            let center = (i as f64 + 0.5) * VAD_FRAME_S;
            segs.iter().any(|s| center >= s.onset_s && center < s.offset_s)
        })
        .collect()
}

fn run_eval(args: EvalArgs) -> Result<(), Error> {
    let reference = read_annotations(&args.truth)?;
    let predicted_set = read_annotations(&args.pred)?;
    if reference.len() != predicted_set.len() {
        return Err(Error::shape(
            "eval",
            format!("{} reference units", reference.len()),
            format!("{} predicted units", predicted_set.len()),
        ));
    }
    let prediction = AlignmentPrediction::from_annotations(&predicted_set);
    let accuracy = unit_accuracy(&reference, &prediction, args.tau)?;
    let mad_s = song_mad(&reference, &prediction)?;
    if let Some(path) = &args.curve {
        let curve = accuracy_curve(&reference, &prediction, &default_tau_grid())?;
        write_curve_csv(&curve, path)?;
    }
    let vad = match (&args.ref_vad, &args.pred_vad) {
        (Some(ref_path), Some(pred_path)) => {
            let ref_segs: Vec<Segment> =
                serde_json::from_str(&std::fs::read_to_string(ref_path)?)?;
            let pred_segs: Vec<Segment> =
                serde_json::from_str(&std::fs::read_to_string(pred_path)?)?;
            let total = ref_segs
                .iter()
                .chain(pred_segs.iter())
                .map(|s| s.offset_s)
                .fold(0.0f64, f64::max);
            Some(vad_scores(
                &segments_to_frames(&ref_segs, total),
                &segments_to_frames(&pred_segs, total),
                args.beta,
            )?)
        }
        (None, None) => None,
        _ => {
            return Err(Error::invalid(
                "vad",
                "provide both --ref-vad and --pred-vad or neither".to_string(),
            ))
        }
    };
    let report = EvalReport {
        song_id: reference.song_id.clone(),
        n_units: reference.len(),
        tau_s: args.tau,
        accuracy_pct: accuracy,
        mad_s,
        vad,
    };
    match &args.out {
        Some(path) => write_json(&report, path)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<(), Error> {
    let spec = SynthSpec {
        units: args.units,
        classes: args.classes,
        min_unit_s: args.min_dur,
        max_unit_s: args.max_dur,
        noise: args.noise,
        seed: args.seed,
        gap_every: args.gap_every,
        gap_s: args.gap_s,
    };
    let song = synth_generate(&spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    std::fs::write(args.out_dir.join("lyrics.txt"), &song.lyrics)?;
    write_json(&song.annotations, &args.out_dir.join("truth.json"))?;
    write_matrix_csv(&song.features.view(), &args.out_dir.join("features.csv"))?;
    let times: Vec<String> = song.frame_times.iter().map(|t| t.to_string()).collect();
    std::fs::write(args.out_dir.join("frame_times.csv"), times.join("\n") + "\n")?;
    if args.render_audio {
        let clip = render_audio(&song, &RenderConfig::default());
        save_wav(&clip, &args.out_dir.join("song.wav"))?;
    }
    println!(
        "generated {} units over {:.1} s -> {}",
        song.annotations.len(),
        song.duration_s,
        args.out_dir.display()
    );
    Ok(())
}

fn run_grid(args: GridArgs) -> Result<(), Error> {
    let songs: Result<Vec<_>, Error> = (0..args.songs)
        .map(|i| {
            synth_generate(&SynthSpec {
                units: args.units,
                classes: args.classes,
                seed: args.seed + i as u64,
                ..SynthSpec::default()
            })
        })
        .collect();
    let songs = songs?;
    let base = PipelineConfig::default();
    let outcome = grid_search(
        &songs,
        &default_offsets(),
        &default_varsigmas(),
        &base,
        args.jobs.max(1),
    )?;
    write_grid_csv(&outcome, &args.out)?;
    println!(
        "grid of {} cells -> {}; best: K = L'{:+}, varsigma = {}%, SA = {:.2}%",
        outcome.cells.len(),
        args.out.display(),
        outcome.best.k_offset,
        outcome.best.varsigma,
        outcome.best.sa
    );
    Ok(())
}
