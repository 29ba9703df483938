use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ctcstream::decoder::config_header_json;
use ctcstream::lm::{lm_bpc, lm_sample, CharLm};
use ctcstream::oracle::oracle_decode;
use ctcstream::posterior::{read_posteriors, PosteriorReader, PosteriorWriter};
use ctcstream::sweep::{sweep, Utterance};
use ctcstream::{
    score_transcript, stability_from_emissions, synth_posteriors, Alphabet,
    Decoder, DecoderConfig, Error, Level, LogFloat, NgramCharLm, SynthConfig,
};

use crate::{Cli, Command, SearchArgs};

/// 2 for I/O, 3 for malformed input, 4 for mismatched alphabets or
/// dimensions, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::File { .. } | Error::Io(_) => 2,
                Error::Format { .. }
                | Error::Normalization { .. }
                | Error::InvalidAlphabet(_)
                | Error::InvalidLabel { .. }
                | Error::UnknownChar(_)
                | Error::OutOfOrder { .. }
                | Error::CommitViolation { .. } => 3,
                Error::DimensionMismatch { .. } | Error::AlphabetMismatch(_) => 4,
                _ => 1,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 2;
        }
    }
    1
}

pub fn run(cli: Cli) -> Result<()> {
    let alphabet = match &cli.alphabet {
        Some(p) => Alphabet::from_file(p)?,
        None => Alphabet::default_english(),
    };
    let seed = cli.seed;
    match cli.command {
        Command::Decode { input, search, out } => {
            let sink = output(out.as_deref())?;
            if search.f32 {
                decode::<f32>(&alphabet, &input, &search, sink)
            } else {
                decode::<f64>(&alphabet, &input, &search, sink)
            }
        }
        Command::Sweep {
            inputs,
            references,
            widths,
            depths,
            search,
        } => cmd_sweep(&alphabet, &inputs, &references, &widths, &depths, &search),
        Command::Synth {
            text,
            text_file,
            frames_per_char,
            blank_run,
            peak,
            logit_noise,
            out,
        } => {
            let text = match (text, text_file) {
                (Some(t), _) => t,
                (None, Some(p)) => read_text(&p)?,
                (None, None) => bail!("either --text or --text-file is required"),
            };
            let config = SynthConfig {
                frames_per_char,
                blank_run,
                logit_noise,
                seed,
                ..SynthConfig::with_peak(peak)
            };
            let frames = synth_posteriors::<f64>(&text, &alphabet, &config)?;
            let mut w = PosteriorWriter::new(output(out.as_deref())?, ctcstream::posterior::CpfHeader::for_alphabet(&alphabet))?;
            for f in &frames {
                w.write_frame(f)?;
            }
            w.finish()?;
            Ok(())
        }
        Command::LmTrain {
            corpus,
            order,
            discount,
            out,
        } => {
            let text = fs::read_to_string(&corpus).map_err(|e| file_error(&corpus, e))?;
            let lm = NgramCharLm::train(&text, alphabet, order, discount, seed)?;
            lm.save(&out)?;
            Ok(())
        }
        Command::LmEval { lm, heldout } => {
            let lm = load_lm(&lm, &alphabet)?;
            let text = fs::read_to_string(&heldout).map_err(|e| file_error(&heldout, e))?;
            let r = lm_bpc(&lm, &text)?;
            println!("bits_per_char\tperplexity\tscored\tdropped");
            println!("{}\t{}\t{}\t{}", r.bits_per_char, r.perplexity, r.scored, r.dropped);
            Ok(())
        }
        Command::LmSample {
            lm,
            max_chars,
            temperature,
        } => {
            let lm = load_lm(&lm, &alphabet)?;
            let text = lm_sample(&lm, max_chars, temperature, seed)?;
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                writeln!(out)?;
            }
            Ok(())
        }
        Command::Score {
            reference,
            hypothesis,
            emissions,
        } => cmd_score(&alphabet, &reference, hypothesis.as_deref(), emissions.as_deref()),
        Command::Oracle {
            input,
            lm,
            alpha,
            beta,
            top,
        } => {
            let lm = match lm {
                Some(p) => load_lm(&p, &alphabet)?,
                None => NgramCharLm::uniform(alphabet.clone()),
            };
            let frames = read_posteriors::<f64>(&input, &alphabet, true).with_context(|| input.display().to_string())?;
            let result = oracle_decode(&frames, &alphabet, &lm, alpha, beta)?;
            let mut rows: Vec<_> = result.scores.iter().collect();
            rows.sort_by(|(za, sa), (zb, sb)| {
                sb.fused
                    .total_cmp(&sa.fused)
                    .then(za.len().cmp(&zb.len()))
                    .then_with(|| za.cmp(zb))
            });
            let mut out = io::stdout().lock();
            writeln!(out, "text\tctc_logp\tfused")?;
            for (z, s) in rows.into_iter().take(top) {
                writeln!(out, "{}\t{}\t{}", tsv_text(&alphabet.render(z)), s.ctc_logp, s.fused)?;
            }
            Ok(())
        }
        Command::Concat { inputs, out } => {
            let header = ctcstream::posterior::CpfHeader::for_alphabet(&alphabet);
            let mut w = PosteriorWriter::new(output(out.as_deref())?, header)?;
            for p in &inputs {
                let reader = PosteriorReader::<_, f64>::new(open(p)?, &alphabet, false)
                    .with_context(|| p.display().to_string())?;
                for f in reader {
                    w.write_frame(&f.with_context(|| p.display().to_string())?)?;
                }
            }
            w.finish()?;
            Ok(())
        }
    }
}

fn file_error(path: &Path, e: io::Error) -> Error {
    Error::File {
        path: path.to_path_buf(),
        source: e,
    }
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdin().lock()));
    }
    let f = File::open(path).map_err(|e| file_error(path, e))?;
    Ok(Box::new(BufReader::new(f)))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| file_error(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// File contents without the final line break.
fn read_text(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| file_error(path, e))?;
    let text = text.strip_suffix('\n').unwrap_or(&text);
    Ok(text.strip_suffix('\r').unwrap_or(text).to_string())
}

fn tsv_text(s: &str) -> String {
    s.replace('\n', "<eos>")
}

fn load_lm(path: &Path, alphabet: &Alphabet) -> Result<NgramCharLm> {
    let lm = NgramCharLm::from_file(path).with_context(|| path.display().to_string())?;
    if lm.alphabet() != alphabet {
        return Err(Error::AlphabetMismatch(format!("{} was trained on a different alphabet", path.display())).into());
    }
    Ok(lm)
}

fn config_of(search: &SearchArgs) -> DecoderConfig {
    DecoderConfig {
        beam_width: search.beam_width,
        beam_depth: search.beam_depth,
        alpha: search.alpha,
        beta: search.beta,
        depth_prune_interval: search.prune_interval,
        emit_interval: search.emit_interval,
        nbest: search.nbest,
        admission_margin: (!search.no_admission_margin).then_some(search.admission_margin),
    }
}

fn search_lm(search: &SearchArgs, alphabet: &Alphabet) -> Result<NgramCharLm> {
    match &search.lm {
        Some(p) => load_lm(p, alphabet),
        None => Ok(NgramCharLm::uniform(alphabet.clone())),
    }
}

fn decode<F: LogFloat>(alphabet: &Alphabet, input: &Path, search: &SearchArgs, mut sink: Box<dyn Write>) -> Result<()> {
    let config = config_of(search);
    let lm = search_lm(search, alphabet)?;
    let mut decoder = Decoder::<F, _>::new(alphabet.clone(), lm, config.clone())?;
    let reader = PosteriorReader::<_, F>::new(open(input)?, alphabet, !search.lenient)
        .with_context(|| input.display().to_string())?;
    writeln!(sink, "{}", config_header_json(&config))?;
    decoder
        .run(reader, |record| {
            writeln!(sink, "{}", record.to_json(alphabet))?;
            sink.flush()?;
            Ok(())
        })
        .with_context(|| input.display().to_string())?;
    sink.flush()?;
    Ok(())
}

fn cmd_sweep(
    alphabet: &Alphabet,
    inputs: &[PathBuf],
    references: &[PathBuf],
    widths: &[usize],
    depths: &[usize],
    search: &SearchArgs,
) -> Result<()> {
    if inputs.len() != references.len() {
        bail!("{} inputs but {} references", inputs.len(), references.len());
    }
    if widths.contains(&0) || depths.contains(&0) {
        bail!("beam widths and depths must be positive");
    }
    let lm = search_lm(search, alphabet)?;
    let utterances = inputs
        .iter()
        .zip(references)
        .map(|(i, r)| {
            Ok(Utterance {
                reference: read_text(r)?,
                frames: read_posteriors::<f64>(i, alphabet, !search.lenient).with_context(|| i.display().to_string())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = sweep(alphabet, &lm, &config_of(search), widths, depths, &utterances)?;
    let mut out = io::stdout().lock();
    writeln!(out, "beam_width\tbeam_depth\tcer\twer\tmean_latency")?;
    for r in rows {
        let latency = r.mean_latency.map_or("-".to_string(), |l| l.to_string());
        writeln!(out, "{}\t{}\t{}\t{}\t{}", r.beam_width, r.beam_depth, r.cer(), r.wer(), latency)?;
    }
    Ok(())
}

fn cmd_score(alphabet: &Alphabet, reference: &Path, hypothesis: Option<&Path>, emissions: Option<&Path>) -> Result<()> {
    let reference_text = read_text(reference)?;
    let (hyp, stability) = match (hypothesis, emissions) {
        (Some(h), _) => (read_text(h)?, None),
        (None, Some(e)) => {
            let text = fs::read_to_string(e).map_err(|err| file_error(e, err))?;
            let log = ctcstream::decoder::read_emission_log(&text, alphabet).with_context(|| e.display().to_string())?;
            let best = log.records.last().map(|r| alphabet.render(&r.best_full())).unwrap_or_default();
            (best, Some(stability_from_emissions(&log.records)?))
        }
        (None, None) => bail!("either --hypothesis or --emissions is required"),
    };
    let mut out = io::stdout().lock();
    writeln!(out, "level\tsubstitutions\tinsertions\tdeletions\tref_len\trate")?;
    for (name, level) in [("char", Level::Char), ("word", Level::Word)] {
        let r = score_transcript(&reference_text, &hyp, level);
        writeln!(
            out,
            "{name}\t{}\t{}\t{}\t{}\t{}",
            r.substitutions,
            r.insertions,
            r.deletions,
            r.ref_len,
            r.rate()
        )?;
    }
    if let Some(s) = stability {
        writeln!(out)?;
        writeln!(out, "emissions\trevisions\tcommitted\tmean_commit_latency")?;
        let latency = s.mean_commit_latency.map_or("-".to_string(), |l| l.to_string());
        writeln!(out, "{}\t{}\t{}\t{latency}", s.revisions.len(), s.total_revisions(), s.committed)?;
    }
    Ok(())
}
