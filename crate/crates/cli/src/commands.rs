use std::fmt::Write as _;
use std::path::Path;

use bpcodes::channel::{self, ChannelSpec};
use bpcodes::code::{self, load_code, random_systematic, save_alist, save_dense, ParityCheck};
use bpcodes::decoder::{self, BpConfig};
use bpcodes::eval::{db_gain, monte_carlo, EvalReport, StopRule};
use bpcodes::gf2;
use bpcodes::optimizer::{self, SweepGrid, TrainConfig};
use bpcodes::{Error, Result};
use ndarray::Array2;
use serde_json::json;

use crate::manifest::RunManifest;
use crate::{DecodeArgs, EvalArgs, GainArgs, OptimizeArgs, StatsArgs, SweepArgs};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_code(path: &Path) -> Result<ParityCheck> {
    load_code(&read(path)?)
}

/// Saves as alist when the extension says so, dense otherwise.
fn write_code(path: &Path, code: &ParityCheck) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e == "alist") {
        save_alist(code)
    } else {
        save_dense(code)
    };
    write(path, &text)
}

/// One frame per non-empty line; values separated by whitespace or commas;
/// `#` starts a comment.
pub fn parse_llr(text: &str, n: usize) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut frames = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("not a number: {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                context: "LLR values per line vs code length",
                expected: n,
                got: row.len(),
            });
        }
        values.extend(row);
        frames += 1;
    }
    Ok(Array2::from_shape_vec((frames, n), values).expect("rows checked"))
}

pub fn decode(a: &DecodeArgs) -> Result<()> {
    let code = read_code(&a.code)?;
    let n = code.n();
    let llr = match &a.llr {
        Some(path) => parse_llr(&read(path)?, n)?,
        None => {
            let spec = ChannelSpec::new(a.channel, a.snr, code.rate());
            let rx = channel::transmit(channel::zero_codeword_symbols(a.frames, n).view(), &spec, a.seed, 0)?;
            channel::llr(&rx)?
        }
    };
    let cfg = BpConfig::new(a.iters, a.variant);
    let result = decoder::decode(llr.view(), &code, &cfg)?;

    let mut out = String::new();
    let header: Vec<String> = (0..n).map(|v| format!("soft_{v}")).chain((0..n).map(|v| format!("hard_{v}"))).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (soft, hard) in result.soft.outer_iter().zip(result.hard.outer_iter()) {
        let row: Vec<String> = soft.iter().map(|x| x.to_string()).chain(hard.iter().map(|b| b.to_string())).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write(&a.out, &out)?;
    RunManifest::new(
        "decode",
        json!({
            "iters": a.iters,
            "variant": a.variant,
            "llr": a.llr,
            "simulate": a.simulate.then(|| json!({"channel": a.channel, "snr": a.snr, "frames": a.frames})),
        }),
        a.simulate.then_some(a.seed),
    )
    .code("code", &code)
    .output(&a.out)
    .write_beside(&a.out)?;
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let code = read_code(&a.code)?;
    let stop = StopRule {
        min_frames: a.min_frames,
        min_frame_errors: a.min_errors,
        max_frames: a.max_frames,
        batch_frames: a.batch_frames,
    };
    let specs: Vec<ChannelSpec> = a.snrs.iter().map(|&s| ChannelSpec::new(a.channel, s, code.rate())).collect();
    let mut report = EvalReport::default();
    for &t in &a.iters {
        let cfg = BpConfig::new(t, a.variant);
        report.merge(monte_carlo(&code, &specs, &cfg, &stop, a.mode, a.seed)?);
    }
    write(&a.out, &report.to_csv_string()?)?;
    RunManifest::new(
        "eval",
        json!({
            "channel": a.channel,
            "snrs": a.snrs,
            "iters": a.iters,
            "variant": a.variant,
            "stop": stop,
            "mode": a.mode,
        }),
        Some(a.seed),
    )
    .code("code", &code)
    .output(&a.out)
    .write_beside(&a.out)?;
    Ok(())
}

fn train_config(path: Option<&Path>) -> Result<TrainConfig> {
    match path {
        Some(p) => TrainConfig::from_json(&read(p)?),
        None => Ok(TrainConfig::default()),
    }
}

pub fn optimize(a: &OptimizeArgs) -> Result<()> {
    let mut cfg = train_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let init = match (&a.init, &a.random) {
        (Some(path), _) => read_code(path)?,
        (None, Some(r)) => {
            let &[n, k, p] = r.as_slice() else {
                return Err(Error::InvalidParams(format!("--random needs n,k,p, got {} values", r.len())));
            };
            if n.fract() != 0.0 || k.fract() != 0.0 || n < 0.0 || k < 0.0 {
                return Err(Error::InvalidParams(format!("--random needs integer n,k, got {n},{k}")));
            }
            random_systematic(n as usize, k as usize, p, cfg.seed)?
        }
        (None, None) => return Err(Error::InvalidParams("one of --init or --random is required".into())),
    };
    let (learned, trace) = optimizer::optimize(&init, &cfg)?;
    write_code(&a.out, &learned)?;
    let mut manifest = RunManifest::new("optimize", serde_json::to_value(&cfg)?, Some(cfg.seed))
        .code("initial", &init)
        .code("learned", &learned)
        .output(&a.out);
    if let Some(path) = &a.trace {
        write(path, &trace.to_csv_string()?)?;
        manifest = manifest.output(path);
    }
    manifest.write_beside(&a.out)?;
    let last = trace.records.last();
    println!(
        "{} iterations{}, final loss {}, density {:.4}, rank {}",
        trace.records.len(),
        if trace.converged { " (converged)" } else { "" },
        last.map_or("n/a".to_string(), |r| format!("{:.6}", r.loss)),
        code::stats(&learned).density,
        gf2::rank(learned.matrix()),
    );
    Ok(())
}

fn describe(code: &ParityCheck) -> String {
    let s = code::stats(code);
    let range = |d: &[usize]| {
        let lo = d.iter().min().copied().unwrap_or(0);
        let hi = d.iter().max().copied().unwrap_or(0);
        format!("{lo}..{hi}")
    };
    let mut out = String::new();
    let _ = writeln!(out, "n = {}, checks = {}, rank = {}", code.n(), code.checks(), gf2::rank(code.matrix()));
    let _ = writeln!(out, "ones = {}, density = {:.6}", s.ones, s.density);
    let _ = writeln!(out, "girth = {}", s.girth);
    let _ = writeln!(out, "row degrees {}, column degrees {}", range(&s.row_degrees), range(&s.col_degrees));
    out
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let code = read_code(&a.code)?;
    let mut out = describe(&code);
    if let Some(path) = &a.compare {
        let other = read_code(path)?;
        out.push_str("compared code:\n");
        out.push_str(&describe(&other));
        let _ = writeln!(out, "sparsity delta = {:.4}%", code::sparsity_delta(&code, &other)?);
    }
    print!("{out}");
    Ok(())
}

pub fn gain(a: &GainArgs) -> Result<()> {
    let base = EvalReport::read_csv(read(&a.base)?.as_bytes())?;
    let ours = EvalReport::read_csv(read(&a.ours)?.as_bytes())?;
    let g = db_gain(&base, &ours)?;
    println!("mean_db = {:.4}", g.mean_db);
    println!("std_db = {:.4}", g.std_db);
    println!("min_db = {:.4}", g.min_db);
    println!("max_db = {:.4}", g.max_db);
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let init = read_code(&a.init)?;
    let base = train_config(a.config.as_deref())?;
    let grid = match &a.grid {
        Some(p) => SweepGrid::from_json(&read(p)?)?,
        None => SweepGrid::default(),
    };
    let ranked = optimizer::sweep(&init, &base, &grid)?;
    let mut buf = Vec::new();
    optimizer::write_ranking_csv(&ranked, &mut buf)?;
    write(&a.out, &String::from_utf8(buf).expect("CSV output is UTF-8"))?;
    let mut manifest = RunManifest::new("sweep", json!({ "base": base, "grid": grid }), Some(grid.seed))
        .code("initial", &init)
        .output(&a.out);
    if let Some(dir) = &a.codes_dir {
        std::fs::create_dir_all(dir)?;
        for e in &ranked {
            let path = dir.join(format!("config_{}.alist", e.point.index));
            write_code(&path, &e.code)?;
            manifest = manifest.code(&format!("config_{}", e.point.index), &e.code).output(&path);
        }
    }
    manifest.write_beside(&a.out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn llr_parsing() {
        let l = parse_llr("# header\n1.5, -2\n\n0 3e-1 # trailing\n", 2).unwrap();
        assert_eq!(l, ndarray::array![[1.5, -2.0], [0.0, 0.3]]);
        assert!(matches!(parse_llr("1 x\n", 2), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_llr("1 2 3\n", 2), Err(Error::DimensionMismatch { .. })));
    }
}
