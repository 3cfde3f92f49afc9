//! Command-line front end: dataset generation, experiment execution
//! across collectives/variants, error-propagation analysis, and single
//! file compression. Everything is deterministic for a fixed set of
//! flags and seed when run in virtual time.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ccx_core::analysis::{
    self, empirical_allreduce_coverage, fit_errors, quality, ErrorModel,
};
use ccx_core::codec::{
    compress, compress_pipelined, decompress, decompress_pipelined, CompressedStream, ErrorBound,
    PipelinedStream, DEFAULT_CHUNK_ELEMENTS,
};
use ccx_core::collectives::{self, reference, PipelineConfig, ReduceOp, Variant};
use ccx_core::synth::{self, DatasetKind};
use ccx_core::transport::{Category, CommWorld, SimParams};
use ccx_core::FloatField;

#[derive(Debug, Parser)]
#[command(name = "ccx", about = "compression-integrated collective toolkit", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset as raw little-endian f32.
    Gen(GenArgs),
    /// Run a collective experiment and write per-rank timing rows as CSV.
    Bench(BenchArgs),
    /// Verify the error-propagation formulas or fit compression errors.
    Analyze(AnalyzeArgs),
    /// Compress one raw f32 file and report quality after a verify decode.
    Compress(CompressArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    SinusoidMix,
    GaussianBlobs,
    Ramp,
    Constant,
}

impl From<KindArg> for DatasetKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::SinusoidMix => DatasetKind::SinusoidMix,
            KindArg::GaussianBlobs => DatasetKind::GaussianBlobs,
            KindArg::Ramp => DatasetKind::Ramp,
            KindArg::Constant => DatasetKind::Constant,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "sinusoid-mix")]
    pub kind: KindArg,
    #[arg(long)]
    pub elements: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CollectiveArg {
    Allgather,
    Bcast,
    Scatter,
    ReduceScatter,
    Allreduce,
}

impl CollectiveArg {
    fn name(self) -> &'static str {
        match self {
            Self::Allgather => "allgather",
            Self::Bcast => "bcast",
            Self::Scatter => "scatter",
            Self::ReduceScatter => "reduce-scatter",
            Self::Allreduce => "allreduce",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Baseline,
    CprP2p,
    CColl,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Baseline => Variant::Baseline,
            VariantArg::CprP2p => Variant::CprP2p,
            VariantArg::CColl => Variant::CColl,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OpArg {
    Sum,
    Max,
    Min,
    Avg,
}

impl From<OpArg> for ReduceOp {
    fn from(o: OpArg) -> Self {
        match o {
            OpArg::Sum => ReduceOp::Sum,
            OpArg::Max => ReduceOp::Max,
            OpArg::Min => ReduceOp::Min,
            OpArg::Avg => ReduceOp::Avg,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Virtual,
    Real,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub collective: CollectiveArg,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long)]
    pub ranks: usize,
    /// Per-rank elements (allgather, reduce-scatter, allreduce) or total
    /// root-buffer elements (bcast, scatter).
    #[arg(long)]
    pub elements: usize,
    #[arg(long)]
    pub eb: Option<f64>,
    #[arg(long, value_enum, default_value = "sum")]
    pub op: OpArg,
    #[arg(long, value_enum, default_value = "virtual")]
    pub mode: ModeArg,
    /// Transport parameters as a key=value file; defaults apply if absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "sinusoid-mix")]
    pub kind: KindArg,
    /// Raw f32 LE file to use instead of a generated dataset.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub warmup: usize,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 65536)]
    pub segment_bytes: usize,
    #[arg(long, default_value_t = DEFAULT_CHUNK_ELEMENTS)]
    pub chunk_elements: usize,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub what: AnalyzeCommand,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Aggregated-sum distribution: closed form plus Monte Carlo coverage.
    TheoremSum {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        eb: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Averaged-error variance: closed form vs Monte Carlo.
    TheoremAvg {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        eb: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Max/min selection variance: closed form vs the generative model.
    TheoremMaxmin {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical allreduce coverage with the real codec and collectives.
    Coverage {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 8192)]
        elements: usize,
        #[arg(long, default_value_t = 1e-3)]
        eb: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "sinusoid-mix")]
        kind: KindArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram and MLE normal fit of one file's compression errors.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        eb: f64,
        #[arg(long, default_value_t = 32)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub eb: f64,
    /// Write the chunked container instead of the monolithic one.
    #[arg(long)]
    pub pipelined: bool,
    #[arg(long, default_value_t = DEFAULT_CHUNK_ELEMENTS)]
    pub chunk_elements: usize,
}

/// Executes a parsed command; `stdout` receives everything the command
/// would print, so tests can capture output without a subprocess.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<()> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args, stdout),
        Command::Bench(args) => cmd_bench(args, stdout),
        Command::Analyze(args) => cmd_analyze(args.what, stdout),
        Command::Compress(args) => cmd_compress(args, stdout),
    }
}

fn read_raw_field(path: &Path) -> Result<FloatField> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.is_empty() {
        bail!("{} is empty", path.display());
    }
    FloatField::from_le_bytes(&bytes)
        .with_context(|| format!("{} is not a whole number of f32 values", path.display()))
}

fn write_output(out: &Option<PathBuf>, text: &str, stdout: &mut dyn std::io::Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_gen(args: GenArgs, stdout: &mut dyn std::io::Write) -> Result<()> {
    let field = synth::generate(args.kind.into(), args.elements, args.seed)?;
    std::fs::write(&args.out, field.to_le_bytes())
        .with_context(|| format!("writing {}", args.out.display()))?;
    writeln!(
        stdout,
        "wrote {} elements ({} bytes) to {}",
        field.len(),
        field.len() * 4,
        args.out.display()
    )?;
    Ok(())
}

fn load_params(config: &Option<PathBuf>) -> Result<SimParams> {
    match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(SimParams::from_config_str(&text)?)
        }
        None => Ok(SimParams::default()),
    }
}

/// One collective execution: per-rank outputs plus the report.
fn run_once(
    args: &BenchArgs,
    world: &CommWorld,
    inputs: &[FloatField],
    root_field: &FloatField,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<(Vec<FloatField>, ccx_core::transport::RunReport)> {
    let variant: Variant = args.variant.into();
    let op: ReduceOp = args.op.into();
    let out = match args.collective {
        CollectiveArg::Allgather => collectives::run_allgather(world, variant, inputs, eb, cfg)?,
        CollectiveArg::Bcast => collectives::run_bcast(world, variant, root_field, 0, eb, cfg)?,
        CollectiveArg::Scatter => collectives::run_scatter(world, variant, root_field, 0, eb, cfg)?,
        CollectiveArg::ReduceScatter => {
            collectives::run_reduce_scatter(world, variant, inputs, op, eb, cfg)?
        }
        CollectiveArg::Allreduce => {
            collectives::run_allreduce(world, variant, inputs, op, eb, cfg)?
        }
    };
    Ok(out)
}

/// No-network oracle, concatenated across ranks in the same layout as
/// the concatenated outputs.
fn oracle(args: &BenchArgs, inputs: &[FloatField], root_field: &FloatField) -> Result<FloatField> {
    let n = args.ranks;
    let op: ReduceOp = args.op.into();
    Ok(match args.collective {
        CollectiveArg::Allgather => {
            let one = reference::allgather(inputs)?;
            let mut all = Vec::with_capacity(n * one.len());
            for _ in 0..n {
                all.extend_from_slice(one.data());
            }
            FloatField::new(all)
        }
        CollectiveArg::Bcast => {
            let mut all = Vec::with_capacity(n * root_field.len());
            for _ in 0..n {
                all.extend_from_slice(root_field.data());
            }
            FloatField::new(all)
        }
        CollectiveArg::Scatter => reference::allgather(&reference::scatter(root_field, n)?)?,
        CollectiveArg::ReduceScatter => {
            reference::allgather(&reference::reduce_scatter(inputs, op)?)?
        }
        CollectiveArg::Allreduce => {
            let one = reference::allreduce(inputs, op)?;
            let mut all = Vec::with_capacity(n * one.len());
            for _ in 0..n {
                all.extend_from_slice(one.data());
            }
            FloatField::new(all)
        }
    })
}

fn cmd_bench(args: BenchArgs, stdout: &mut dyn std::io::Write) -> Result<()> {
    if args.ranks == 0 {
        bail!("need at least one rank");
    }
    if args.runs == 0 {
        bail!("need at least one measured run");
    }
    let eb = args.eb.map(ErrorBound::new).transpose()?;
    let cfg = PipelineConfig {
        segment_bytes: args.segment_bytes,
        chunk_elements: args.chunk_elements,
    };
    let params = load_params(&args.config)?;
    let world = match args.mode {
        ModeArg::Virtual => CommWorld::virtual_time(args.ranks, params)?,
        ModeArg::Real => CommWorld::real_time(args.ranks)?,
    };

    // Per-rank inputs: seed offset by rank for generated data, rotation
    // by rank for file data, so contributions differ but stay smooth.
    let base = match &args.data {
        Some(path) => read_raw_field(path)?,
        None => synth::generate(args.kind.into(), args.elements, args.seed)?,
    };
    if base.len() != args.elements {
        bail!("dataset holds {} elements but --elements is {}", base.len(), args.elements);
    }
    let inputs: Vec<FloatField> = match &args.data {
        Some(_) => (0..args.ranks)
            .map(|r| {
                let mut v = base.data().to_vec();
                v.rotate_left(r * (args.elements / args.ranks.max(1)) % args.elements.max(1));
                FloatField::new(v)
            })
            .collect(),
        None => (0..args.ranks)
            .map(|r| synth::generate(args.kind.into(), args.elements, args.seed + r as u64))
            .collect::<Result<_, _>>()?,
    };
    let root_field = base.clone();

    for _ in 0..args.warmup {
        run_once(&args, &world, &inputs, &root_field, eb, &cfg)?;
    }

    let mut csv = String::new();
    csv.push_str(
        "run_id,rank,collective,variant,ranks,elements,eb,bytes_sent,compress_calls,\
         decompress_calls,t_comdecom,t_allgather,t_memcpy,t_wait,t_reduction,t_others,t_total,\
         max_abs_error,psnr,nrmse\n",
    );
    let eb_text = args.eb.map(|v| v.to_string()).unwrap_or_default();
    let mut last_outputs = Vec::new();
    for run_id in 0..args.runs {
        let (outputs, report) = run_once(&args, &world, &inputs, &root_field, eb, &cfg)?;
        for (rank, r) in report.per_rank.iter().enumerate() {
            writeln!(
                csv,
                "{run_id},{rank},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},,,",
                args.collective.name(),
                Variant::from(args.variant).name(),
                args.ranks,
                args.elements,
                eb_text,
                r.bytes_sent,
                r.compress_calls,
                r.decompress_calls,
                r.time(Category::ComDecom),
                r.time(Category::Allgather),
                r.time(Category::Memcpy),
                r.time(Category::Wait),
                r.time(Category::Reduction),
                r.time(Category::Others),
                r.total_elapsed,
            )?;
        }
        last_outputs = outputs;
    }

    let observed = reference::allgather(&last_outputs)?;
    let exact = oracle(&args, &inputs, &root_field)?;
    let q = quality(&exact, &observed)?;
    writeln!(
        csv,
        "summary,,{},{},{},{},{},,,,,,,,,,,{},{},{}",
        args.collective.name(),
        Variant::from(args.variant).name(),
        args.ranks,
        args.elements,
        eb_text,
        q.max_abs_error,
        q.psnr,
        q.nrmse,
    )?;
    write_output(&args.out, &csv, stdout)
}

fn cmd_analyze(what: AnalyzeCommand, stdout: &mut dyn std::io::Write) -> Result<()> {
    match what {
        AnalyzeCommand::TheoremSum { n, eb, trials, seed, out } => {
            let model = ErrorModel::from_bound(n, eb)?;
            let (mean, var) = analysis::sum_error_distribution(&model);
            let half = analysis::sum_two_sigma_halfwidth(&model);
            let coverage = analysis::mc_sum_coverage(&model, trials, seed)?;
            let mut csv =
                String::from("n,sigma,eb,mean,variance,two_sigma_halfwidth,mc_coverage,trials,seed\n");
            writeln!(csv, "{n},{},{eb},{mean},{var},{half},{coverage},{trials},{seed}", model.sigma)?;
            write_output(&out, &csv, stdout)
        }
        AnalyzeCommand::TheoremAvg { n, eb, trials, seed, out } => {
            let model = ErrorModel::from_bound(n, eb)?;
            let (_, closed) = analysis::avg_error_distribution(&model);
            let mc = analysis::mc_avg_variance(&model, trials, seed)?;
            let dev = (mc - closed).abs() / closed;
            let mut csv =
                String::from("n,sigma,eb,variance_closed,variance_mc,relative_deviation,trials,seed\n");
            writeln!(csv, "{n},{},{eb},{closed},{mc},{dev},{trials},{seed}", model.sigma)?;
            write_output(&out, &csv, stdout)
        }
        AnalyzeCommand::TheoremMaxmin { n, sigma, trials, seed, out } => {
            let closed = analysis::maxmin_error_variance(n, sigma);
            let mc = analysis::mc_maxmin_variance(n, sigma, trials, seed)?;
            let dev = (mc - closed).abs() / closed;
            let mut csv =
                String::from("n,sigma,variance_closed,variance_mc,relative_deviation,trials,seed\n");
            writeln!(csv, "{n},{sigma},{closed},{mc},{dev},{trials},{seed}")?;
            write_output(&out, &csv, stdout)
        }
        AnalyzeCommand::Coverage { n, elements, eb, trials, seed, kind, out } => {
            let field = synth::generate(kind.into(), elements, seed)?;
            let bound = ErrorBound::new(eb)?;
            let rep = empirical_allreduce_coverage(n, &field, bound, trials, seed)?;
            let mut csv = String::from(
                "n,elements,eb,sigma_emp,coverage,max_abs_error,hard_bound,within_hard_bound,trials,seed\n",
            );
            writeln!(
                csv,
                "{n},{elements},{eb},{},{},{},{},{},{trials},{seed}",
                rep.sigma_emp,
                rep.coverage,
                rep.max_abs_error,
                rep.hard_bound,
                rep.within_hard_bound(),
            )?;
            write_output(&out, &csv, stdout)
        }
        AnalyzeCommand::Fit { input, eb, bins, out } => {
            let field = read_raw_field(&input)?;
            let bound = ErrorBound::new(eb)?;
            let decoded = decompress(&compress(&field, bound)?)?;
            let fit = fit_errors(&field, &decoded, bins)?;
            let mut csv = String::from("bin_lo,bin_hi,count\n");
            for (i, count) in fit.counts.iter().enumerate() {
                writeln!(csv, "{},{},{count}", fit.bin_edges[i], fit.bin_edges[i + 1])?;
            }
            writeln!(csv, "fit,{},{}", fit.mean, fit.std)?;
            write_output(&out, &csv, stdout)
        }
    }
}

fn cmd_compress(args: CompressArgs, stdout: &mut dyn std::io::Write) -> Result<()> {
    let field = read_raw_field(&args.input)?;
    let eb = ErrorBound::new(args.eb)?;
    let (bytes, decoded) = if args.pipelined {
        let stream = compress_pipelined(&field, eb, args.chunk_elements, || {})?;
        let decoded = decompress_pipelined(&stream, || {})?;
        (stream.into_bytes(), decoded)
    } else {
        let stream = compress(&field, eb)?;
        let decoded = decompress(&stream)?;
        (stream.into_bytes(), decoded)
    };
    let ratio = (field.len() * 4) as f64 / bytes.len() as f64;
    std::fs::write(&args.out, &bytes).with_context(|| format!("writing {}", args.out.display()))?;
    let q = quality(&field, &decoded)?;
    writeln!(
        stdout,
        "ratio={ratio} max_abs_error={} psnr={} nrmse={}",
        q.max_abs_error, q.psnr, q.nrmse
    )?;
    Ok(())
}

/// Decodes either container format; used by tests and kept public so
/// downstream tools can sniff files the same way the CLI does.
pub fn decode_container(bytes: Vec<u8>) -> Result<FloatField> {
    if bytes.len() >= 4 && &bytes[..4] == b"CCPX" {
        let stream = PipelinedStream::from_bytes(bytes)?;
        Ok(decompress_pipelined(&stream, || {})?)
    } else {
        let stream = CompressedStream::from_bytes(bytes)?;
        Ok(decompress(&stream)?)
    }
}
