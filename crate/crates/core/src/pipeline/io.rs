//! File formats: prediction/annotation JSON, metrics JSON, enhanced LRC,
//! CSV tables, PGM/SVG diagnostics, and the plain key-value configuration
//! file with CLI overrides.

use std::io::Write;
use std::path::Path;

use ndarray::ArrayView2;
use serde::Serialize;

use crate::ctw::dtw;
use crate::error::{Error, Result};
use crate::features::SigmaRule;
use crate::metrics::AnnotationSet;
use crate::pipeline::grid::GridOutcome;
use crate::pipeline::{Diagnostics, LrcLine, PipelineConfig};
use crate::Fp;

pub fn read_annotations(path: &Path) -> Result<AnnotationSet> {
    let text = std::fs::read_to_string(path)?;
    let set: AnnotationSet = serde_json::from_str(&text)?;
    set.validate()?;
    Ok(set)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn lrc_stamp(seconds: f64) -> String {
    // Rounded to 10 ms.
    let centis = (seconds * 100.0).round() as u64;
    let m = centis / 6000;
    let s = (centis % 6000) / 100;
    let c = centis % 100;
    format!("{m:02}:{s:02}.{c:02}")
}

/// Enhanced LRC: one line per lyric line, inline `<mm:ss.xx>` stamps per
/// unit, all times rounded to 10 ms.
pub fn write_lrc(lines: &[LrcLine], path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for line in lines {
        write!(out, "[{}]", lrc_stamp(line.start_s))?;
        for (t, text) in &line.items {
            write!(out, "<{}>{}", lrc_stamp(*t), text)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_matrix_csv(matrix: &ArrayView2<Fp>, path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    for row in matrix.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_trace_csv(trace: &[Fp], path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "iteration,objective")?;
    for (i, v) in trace.iter().enumerate() {
        writeln!(out, "{i},{v}")?;
    }
    Ok(())
}

pub fn write_curve_csv(curve: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "tau_s,accuracy_pct")?;
    for (tau, theta) in curve {
        writeln!(out, "{tau},{theta}")?;
    }
    Ok(())
}

pub fn write_grid_csv(grid: &GridOutcome, path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "k_offset,varsigma_pct,sa_pct")?;
    for cell in &grid.cells {
        writeln!(out, "{},{},{}", cell.k_offset, cell.varsigma, cell.sa)?;
    }
    Ok(())
}

/// Grayscale binary PGM (P5) of a matrix, linearly scaled to 0..255.
pub fn write_pgm(matrix: &ArrayView2<Fp>, path: &Path) -> Result<()> {
    let (rows, cols) = matrix.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in matrix.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = Vec::with_capacity(rows * cols + 32);
    bytes.extend_from_slice(format!("P5\n{cols} {rows}\n255\n").as_bytes());
    for v in matrix.iter() {
        bytes.push(((v - lo) / span * 255.0).round() as u8);
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// SVG of the accumulated DTW cost surface (grayscale cells, downsampled to
/// at most 256 per axis) with the warp path drawn on top.
pub fn write_warp_svg(diag: &Diagnostics, path: &Path) -> Result<()> {
    let x = &diag.projected_lyrics;
    let y = &diag.projected_audio;
    let (m, n) = (x.nrows(), y.nrows());
    // Rebuild the accumulated-cost surface the final DTW solved.
    let acc = {
        let (_, _) = dtw(&x.view(), &y.view())?;
        let mut acc = ndarray::Array2::<Fp>::from_elem((m, n), Fp::INFINITY);
        let local = |i: usize, j: usize| -> Fp {
            x.row(i)
                .iter()
                .zip(y.row(j).iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum()
        };
        acc[[0, 0]] = local(0, 0);
        for j in 1..n {
            acc[[0, j]] = acc[[0, j - 1]] + local(0, j);
        }
        for i in 1..m {
            acc[[i, 0]] = acc[[i - 1, 0]] + local(i, 0);
            for j in 1..n {
                let best = acc[[i - 1, j - 1]].min(acc[[i - 1, j]]).min(acc[[i, j - 1]]);
                acc[[i, j]] = best + local(i, j);
            }
        }
        acc
    };

    let cell = 4usize;
    let step_i = m.div_ceil(256);
    let step_j = n.div_ceil(256);
    let width = n.div_ceil(step_j) * cell;
    let height = m.div_ceil(step_i) * cell;
    let hi = acc[[m - 1, n - 1]].max(1e-30);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    for (pi, i) in (0..m).step_by(step_i).enumerate() {
        for (pj, j) in (0..n).step_by(step_j).enumerate() {
            let v = (acc[[i, j]] / hi).clamp(0.0, 1.0);
            let shade = (255.0 * (1.0 - v)).round() as u8;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({shade},{shade},{shade})\"/>\n",
                pj * cell,
                pi * cell,
            ));
        }
    }
    let points: Vec<String> = diag
        .path
        .steps
        .iter()
        .map(|&(i, j)| {
            format!(
                "{},{}",
                j / step_j * cell + cell / 2,
                i / step_i * cell + cell / 2
            )
        })
        .collect();
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"red\" stroke-width=\"1.5\"/>\n",
        points.join(" ")
    ));
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

/// Parse the plain key-value configuration format: one `dotted.key = value`
/// per line, `#` comments.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                context: format!("config line {}", lineno + 1),
                reason: format!("expected `key = value`, got `{line}`"),
            });
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Apply one configuration key to the pipeline config.
pub fn apply_config_pair(config: &mut PipelineConfig, key: &str, value: &str) -> Result<()> {
    let bad = |reason: String| Error::Parse {
        context: format!("config key `{key}`"),
        reason,
    };
    match key {
        "language" => config.language = value.parse()?,
        "dictionary" => config.dictionary_path = Some(value.into()),
        "vad.theta" => config.vad_theta = value.parse().map_err(|e| bad(format!("{e}")))?,
        "ssm.mode" => config.ssm_mode = value.parse()?,
        "ssm.sigma" => {
            config.sigma = if value == "median" {
                SigmaRule::Median
            } else {
                SigmaRule::Fixed(value.parse().map_err(|e| bad(format!("{e}")))?)
            }
        }
        "wsnmf.k_offset" => config.k_offset = value.parse().map_err(|e| bad(format!("{e}")))?,
        "wsnmf.sparsity" => config.sparsity = value.parse().map_err(|e| bad(format!("{e}")))?,
        "wsnmf.max_iter" => {
            config.wsnmf_max_iter = value.parse().map_err(|e| bad(format!("{e}")))?
        }
        "ctw.varsigma" => config.varsigma = value.parse().map_err(|e| bad(format!("{e}")))?,
        "ctw.rho" => config.rho = value.parse().map_err(|e| bad(format!("{e}")))?,
        "ctw.eta" => config.eta = value.parse().map_err(|e| bad(format!("{e}")))?,
        "seed" => config.rng_seed = value.parse().map_err(|e| bad(format!("{e}")))?,
        "separation.enabled" => {
            config.separation = value.parse().map_err(|e| bad(format!("{e}")))?
        }
        other => return Err(bad(format!("unknown key `{other}`"))),
    }
    Ok(())
}

/// Load a config file into `config`. CLI flags are applied afterwards by
/// the caller, so flags win.
pub fn load_config_file(config: &mut PipelineConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (key, value) in parse_config_text(&text)? {
        apply_config_pair(config, &key, &value)?;
    }
    Ok(())
}
