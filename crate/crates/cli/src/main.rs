use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polar_source::codec::{
    compress, compress_with_checksum, pack_bits, read_container, simulate_sw, unpack_bits,
    write_container, SourceDecoder, SwConfig,
};
use polar_source::duality::{simulate, symmetric_capacity, ChannelModel, DualityCode};
use polar_source::spectrum::{build_high_entropy_set, compute_spectrum, polarization_fractions};
use polar_source::{HighEntropySet, JointSource, PolarError, SpectrumMethod, SymbolBlock};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exit status when a checksum detects a wrongly decoded block.
const EXIT_CHECKSUM: u8 = 3;

#[derive(Parser)]
#[command(name = "polarsrc", version, about = "Polar source coding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-index entropy/Bhattacharyya spectrum and polarization fractions.
    Spectrum(SpectrumArgs),
    /// Build a high-entropy set (or, with --channel, a channel code) manifest.
    Freeze(FreezeArgs),
    /// Compress a file with a set manifest.
    Compress(CompressArgs),
    /// Restore a file compressed with `compress`.
    Decompress(DecompressArgs),
    /// Channel-coding error rates over N and R sweeps.
    Chansim(ChansimArgs),
    /// Slepian-Wolf corner-point error rates over N and rate sweeps.
    Swsim(SwsimArgs),
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Joint source table as JSON: {"q", "y_size", "probs"}.
    #[arg(long)]
    source: Option<PathBuf>,
    /// bernoulli(p), bsc_pair(p), bec_pair(eps), correlated(py,p) or gf4_half.
    #[arg(long)]
    preset: Option<String>,
}

impl SourceArgs {
    fn load(&self) -> Result<JointSource> {
        match (&self.source, &self.preset) {
            (Some(path), _) => {
                let text = read_text(path)?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
            }
            (None, Some(p)) => Ok(JointSource::from_preset(p)?),
            (None, None) => bail!("one of --source or --preset is required"),
        }
    }
}

#[derive(Args, Clone)]
struct MethodArgs {
    #[arg(long, default_value = "zbound")]
    method: SpectrumMethod,
    /// Monte-Carlo sample count.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long)]
    seed: Option<u64>,
}

impl MethodArgs {
    /// The seed, which is mandatory for the Monte-Carlo method.
    fn spectrum_seed(&self) -> Result<u64> {
        match (self.method, self.seed) {
            (SpectrumMethod::MonteCarlo, None) => bail!("--seed is required with --method mc"),
            (_, s) => Ok(s.unwrap_or(0)),
        }
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    src: SourceArgs,
    /// Block lengths (powers of two); repeat or comma-separate.
    #[arg(short = 'N', long = "len", required = true, value_delimiter = ',')]
    lens: Vec<usize>,
    #[arg(long, default_value = "0.1", value_delimiter = ',')]
    delta: Vec<f64>,
    #[command(flatten)]
    method: MethodArgs,
    /// Per-index CSV: N,index,h,z,method.
    #[arg(long)]
    out: PathBuf,
    /// Fractions CSV (also printed to stdout).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["source", "preset", "channel"]))]
struct FreezeArgs {
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Build a channel code instead: bsc:p, bec:eps or noiseless.
    #[arg(long)]
    channel: Option<String>,
    #[arg(short = 'N', long = "len")]
    len: usize,
    /// Set rate, or code rate with --channel.
    #[arg(short = 'R', long = "rate")]
    rate: f64,
    #[command(flatten)]
    method: MethodArgs,
    /// Seed of the frozen pattern (channel codes).
    #[arg(long, default_value_t = 0)]
    pattern_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Side information: one byte per source bit.
    #[arg(long)]
    side: Option<PathBuf>,
    /// Append a CRC-32 to each block so decoding failures are detected.
    #[arg(long)]
    checksum: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecompressArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    side: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ChansimArgs {
    /// bsc:p, bec:eps or noiseless. Ignored with --code.
    #[arg(long, required_unless_present = "code")]
    channel: Option<String>,
    /// A channel-code manifest from `freeze --channel`; replaces the N/R sweep.
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(
        short = 'N',
        long = "len",
        value_delimiter = ',',
        required_unless_present = "code"
    )]
    lens: Vec<usize>,
    #[arg(
        short = 'R',
        long = "rate",
        value_delimiter = ',',
        required_unless_present = "code"
    )]
    rates: Vec<f64>,
    #[arg(long, default_value = "zbound")]
    method: SpectrumMethod,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SwsimArgs {
    #[command(flatten)]
    src: SourceArgs,
    #[arg(short = 'N', long = "len", required = true, value_delimiter = ',')]
    lens: Vec<usize>,
    #[arg(long, required = true, value_delimiter = ',')]
    rx: Vec<f64>,
    #[arg(long, required = true, value_delimiter = ',')]
    ry: Vec<f64>,
    #[arg(long, default_value = "zbound")]
    method: SpectrumMethod,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    // Temporary files are created owner-only; outputs should not be.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = std::fs::metadata(path)
            .map(|m| m.permissions().mode())
            .unwrap_or(0o644);
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(mode))?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_rate(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        bail!("rate {r} outside (0, 1]");
    }
    Ok(())
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<()> {
    let s = a.src.load()?;
    let seed = a.method.spectrum_seed()?;
    let mut csv = String::from("N,index,h,z,method\n");
    let mut report = String::from("N,delta,high,low,mid,H,one_minus_H\n");
    let h = s.conditional_entropy();
    for &len in &a.lens {
        let spec = compute_spectrum(&s, len, a.method.method, a.method.samples, seed)?;
        for line in spec.to_csv().lines().skip(1) {
            writeln!(csv, "{len},{line}")?;
        }
        for &d in &a.delta {
            let f = polarization_fractions(&spec, d)?;
            writeln!(
                report,
                "{len},{},{},{},{},{},{}",
                fmt_f(d),
                fmt_f(f.high),
                fmt_f(f.low),
                fmt_f(f.mid),
                fmt_f(h),
                fmt_f(1.0 - h)
            )?;
        }
    }
    write_atomic(&a.out, csv.as_bytes())?;
    if let Some(path) = &a.report {
        write_atomic(path, report.as_bytes())?;
    }
    print!("{report}");
    Ok(())
}

fn cmd_freeze(a: FreezeArgs) -> Result<()> {
    let seed = a.method.spectrum_seed()?;
    let text = if let Some(ch) = &a.channel {
        let w = ChannelModel::parse(ch)?;
        let code = DualityCode::new(
            &w,
            a.len,
            a.rate,
            a.pattern_seed,
            a.method.method,
            a.method.samples,
            seed,
        )?;
        code.to_json()
    } else {
        check_rate(a.rate)?;
        let src = SourceArgs {
            source: a.source.clone(),
            preset: a.preset.clone(),
        };
        let s = src.load()?;
        let spec = compute_spectrum(&s, a.len, a.method.method, a.method.samples, seed)?;
        build_high_entropy_set(&spec, a.rate)?.to_manifest_json()
    };
    write_atomic(&a.out, text.as_bytes())
}

fn load_set(path: &Path) -> Result<HighEntropySet> {
    HighEntropySet::from_manifest_json(&read_text(path)?)
        .with_context(|| format!("loading manifest {}", path.display()))
}

/// Side-information symbols for `count` source bits, padded to `padded`.
fn side_symbols(
    set: &HighEntropySet,
    side: Option<&PathBuf>,
    count: usize,
    padded: usize,
) -> Result<Vec<u32>> {
    let s = set.source();
    let mut y: Vec<u32> = match side {
        Some(path) => {
            let bytes = read_bytes(path)?;
            if bytes.len() != count {
                bail!(
                    "side information has {} symbols, expected {count}",
                    bytes.len()
                );
            }
            if let Some(&b) = bytes.iter().find(|&&b| b as usize >= s.y_size()) {
                bail!(
                    "side symbol {b} outside the source's y alphabet of size {}",
                    s.y_size()
                );
            }
            bytes.into_iter().map(u32::from).collect()
        }
        None if s.has_side_information() => {
            bail!("the manifest's source has side information; pass --side")
        }
        None => vec![0; count],
    };
    y.resize(padded, 0);
    Ok(y)
}

fn cmd_compress(a: CompressArgs) -> Result<()> {
    let set = load_set(&a.manifest)?;
    let len = set.len();
    let data = read_bytes(&a.input)?;
    let mut bits = unpack_bits(&data, data.len() * 8);
    let count = bits.len();
    let padded = count.div_ceil(len).max(1) * len;
    bits.resize(padded, 0);
    // Side symbols are validated here even though only the decoder uses them.
    side_symbols(&set, a.side.as_ref(), count, padded)?;
    let blocks = bits
        .chunks(len)
        .map(|chunk| {
            let x = SymbolBlock::binary(chunk.to_vec())?;
            if a.checksum {
                compress_with_checksum(&x, &set)
            } else {
                compress(&x, &set)
            }
        })
        .collect::<polar_source::Result<Vec<_>>>()?;
    let pad = (padded - count) as u32;
    write_atomic(&a.out, &write_container(&blocks, pad))
}

/// Decompression outcome: restored bytes plus the blocks whose checksum failed.
fn decompress_file(a: &DecompressArgs) -> Result<(Vec<u8>, Vec<usize>)> {
    let set = load_set(&a.manifest)?;
    let len = set.len();
    let (blocks, pad) = read_container(&read_bytes(&a.input)?)?;
    let padded = blocks.len() * len;
    let pad = pad as usize;
    // A whole block of padding only occurs for an empty input.
    let consistent = match blocks.len() {
        0 => false,
        1 => pad <= len,
        _ => pad < len,
    };
    if !consistent {
        bail!(
            "container pad length {pad} is inconsistent with {} blocks of {len}",
            blocks.len()
        );
    }
    let count = padded - pad;
    if !count.is_multiple_of(8) {
        bail!("container holds {count} bits, not a whole number of bytes");
    }
    let y = side_symbols(&set, a.side.as_ref(), count, padded)?;
    let mut dec = SourceDecoder::new(&set, set.source())?;
    let mut bits = Vec::with_capacity(padded);
    let mut failed = Vec::new();
    for (k, (block, ys)) in blocks.iter().zip(y.chunks(len)).enumerate() {
        match dec.decode(block, ys) {
            Ok(x) => bits.extend_from_slice(x.as_slice()),
            Err(PolarError::ChecksumMismatch) => {
                failed.push(k);
                bits.extend(dec.decode_bits(block.payload(), ys)?);
            }
            Err(e) => return Err(e.into()),
        }
    }
    bits.truncate(count);
    Ok((pack_bits(&bits), failed))
}

fn cmd_decompress(a: DecompressArgs) -> Result<ExitCode> {
    let (bytes, failed) = decompress_file(&a)?;
    write_atomic(&a.out, &bytes)?;
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("checksum mismatch in {} block(s): {failed:?}", failed.len());
        Ok(ExitCode::from(EXIT_CHECKSUM))
    }
}

const CHANSIM_HEADER: &str = "channel,N,R,capacity,trials,frame_errors,bit_errors,fer,ber,bound\n";

fn chansim_row(
    csv: &mut String,
    label: &str,
    w: &ChannelModel,
    code: &DualityCode,
    trials: u64,
    seed: u64,
) -> Result<()> {
    let r = simulate(w, code, trials, seed)?;
    writeln!(
        csv,
        "{label},{},{},{},{},{},{},{},{},{}",
        r.len,
        fmt_f(r.rate),
        fmt_f(symmetric_capacity(w)?),
        r.trials,
        r.frame_errors,
        r.bit_errors,
        fmt_f(r.fer),
        fmt_f(r.ber),
        fmt_f(r.bound)
    )?;
    Ok(())
}

fn cmd_chansim(a: ChansimArgs) -> Result<()> {
    let mut csv = String::from(CHANSIM_HEADER);
    if let Some(path) = &a.code {
        let code = DualityCode::from_json(&read_text(path)?)?;
        let w = code.channel().clone();
        let label = serde_json::to_string(&w)?.replace(',', ";");
        chansim_row(&mut csv, &label, &w, &code, a.trials, a.seed)?;
    } else {
        let spec = a.channel.as_deref().expect("clap enforces --channel");
        let w = ChannelModel::parse(spec)?;
        for &len in &a.lens {
            for &rate in &a.rates {
                let code = DualityCode::new(&w, len, rate, a.seed, a.method, a.samples, a.seed)?;
                chansim_row(&mut csv, spec, &w, &code, a.trials, a.seed)?;
            }
        }
    }
    write_atomic(&a.out, csv.as_bytes())
}

fn cmd_swsim(a: SwsimArgs) -> Result<()> {
    let joint = a.src.load()?;
    let h_xy = joint.conditional_entropy();
    let h_y = joint.side_entropy();
    let mut csv = String::from(
        "N,R_x,R_y,H_x_given_y,H_y,trials,y_errors,joint_errors,joint_error_rate,bound_y,bound_x,bound\n",
    );
    for &len in &a.lens {
        for &rx in &a.rx {
            for &ry in &a.ry {
                let cfg = SwConfig::new(&joint, len, rx, ry, a.method, a.samples, a.seed)?;
                let r = simulate_sw(&cfg, a.trials, a.seed)?;
                writeln!(
                    csv,
                    "{len},{},{},{},{},{},{},{},{},{},{},{}",
                    fmt_f(rx),
                    fmt_f(ry),
                    fmt_f(h_xy),
                    fmt_f(h_y),
                    r.trials,
                    r.y_errors,
                    r.joint_errors,
                    fmt_f(r.joint_rate()),
                    fmt_f(r.bound_y),
                    fmt_f(r.bound_x),
                    fmt_f(r.bound())
                )?;
            }
        }
    }
    write_atomic(&a.out, csv.as_bytes())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("POLAR_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow!("POLAR_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("POLAR_THREADS must be a positive integer, got '{v}'");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Spectrum(a) => cmd_spectrum(a)?,
        Command::Freeze(a) => cmd_freeze(a)?,
        Command::Compress(a) => cmd_compress(a)?,
        Command::Decompress(a) => return cmd_decompress(a),
        Command::Chansim(a) => cmd_chansim(a)?,
        Command::Swsim(a) => cmd_swsim(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
