//! CSV, aligned markdown and gnuplot-ready text for a finished run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use divstokes::analysis::{convergence_orders, errors_csv, ErrorNorms};
use divstokes::krylov::Strategy;

use crate::run::{LevelAnalysis, RunOutput, RunRecord};
use crate::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    Csv,
    Markdown,
    Both,
}

impl Emit {
    fn csv(self) -> bool {
        matches!(self, Emit::Csv | Emit::Both)
    }

    fn markdown(self) -> bool {
        matches!(self, Emit::Markdown | Emit::Both)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OutputOptions {
    pub emit: Emit,
    pub dump_residuals: bool,
    pub dump_spectrum: bool,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_default()
}

/// One row per record.
pub fn iterations_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "case,k_prime,strategy,n_elem,h,n_u,n_p,iterations,converged,seconds,top_inner_mean,bottom_inner_mean,final_residual\n",
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.4},{},{},{:.3e}",
            r.case,
            r.k_prime,
            r.strategy.slug(),
            r.n_elem,
            r.h,
            r.n_u,
            r.n_p,
            r.iterations,
            r.converged,
            r.seconds,
            opt(r.top_inner_mean),
            opt(r.bottom_inner_mean),
            r.final_residual
        );
    }
    out
}

/// Error norms per level, taken from the first configured strategy that
/// produced them (all strategies solve the same system).
pub fn level_errors(out: &RunOutput) -> Vec<ErrorNorms> {
    out.config
        .levels
        .iter()
        .filter_map(|&n| out.records.iter().find(|r| r.n_elem == n && r.errors.is_some()))
        .filter_map(|r| r.errors)
        .collect()
}

/// Eigenvalues of every analysed strategy on one level.
pub fn spectrum_level_csv(level: &LevelAnalysis) -> String {
    let mut out = String::from("strategy,index,eigenvalue\n");
    for rep in &level.spectra {
        for (i, l) in rep.spectrum.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{},{i},{l:.17e}", rep.strategy.slug());
        }
    }
    out
}

/// Limiting eigenvalues and constants, one row per (level, strategy).
pub fn spectral_summary_csv(analyses: &[LevelAnalysis]) -> String {
    let mut out = String::new();
    for level in analyses {
        for rep in &level.spectra {
            let csv = rep.summary_csv();
            let mut lines = csv.lines();
            let header = lines.next().unwrap_or_default();
            if out.is_empty() {
                let _ = writeln!(out, "n_elem,{header},violations");
            }
            for row in lines {
                let v = rep.inclusion.violations(&rep.spectrum, 1e-8).len();
                let _ = writeln!(out, "{},{row},{v}", level.n_elem);
            }
        }
    }
    out
}

pub fn infsup_csv(analyses: &[LevelAnalysis], c_pen: f64) -> String {
    let mut out = String::from("n_elem,c_pen,beta0,cb,kernel_dim\n");
    for level in analyses {
        if let Some(c) = level.infsup {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{}",
                level.n_elem,
                c_pen,
                c.beta0(),
                c.cb(),
                c.kernel_dim
            );
        }
    }
    out
}

/// Two-column `iteration residual` text, one gnuplot index block per level.
pub fn residuals_dat<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> String {
    let mut out = String::new();
    for (block, r) in records.into_iter().enumerate() {
        if block > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {} {} h=1/{}", r.case, r.strategy, r.n_elem);
        for (i, v) in r.history.iter().enumerate() {
            let _ = writeln!(out, "{i} {v:.6e}");
        }
    }
    out
}

/// Markdown table with columns padded to equal width.
pub fn markdown_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count().max(3)).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(headers);
    let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&line(&rule));
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

/// Iterations per level (rows) and strategy (columns); inner means follow
/// in brackets, unconverged counts are starred.
pub fn iterations_markdown(out: &RunOutput) -> String {
    let mut headers = vec!["h".to_string(), "n_u".to_string(), "n_p".to_string()];
    headers.extend(out.config.strategies.iter().map(|s| s.label().to_string()));
    let rows: Vec<Vec<String>> = out
        .config
        .levels
        .iter()
        .map(|&n| {
            let at_level: Vec<&RunRecord> = out.records.iter().filter(|r| r.n_elem == n).collect();
            let mut row = vec![
                format!("1/{n}"),
                at_level.first().map(|r| r.n_u.to_string()).unwrap_or_default(),
                at_level.first().map(|r| r.n_p.to_string()).unwrap_or_default(),
            ];
            for &s in &out.config.strategies {
                row.push(at_level.iter().find(|r| r.strategy == s).map(|r| cell(r)).unwrap_or_default());
            }
            row
        })
        .collect();
    markdown_table(&headers, &rows)
}

fn cell(r: &RunRecord) -> String {
    if r.failure.is_some() {
        return "failed".into();
    }
    let mut s = r.iterations.to_string();
    if !r.converged {
        s.push('*');
    }
    let inner: Vec<String> = [r.top_inner_mean, r.bottom_inner_mean]
        .iter()
        .map(|v| v.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()))
        .collect();
    if r.strategy.has_inner_iterations() {
        let _ = write!(s, " ({})", inner.join(", "));
    }
    s
}

pub fn errors_markdown(levels: &[ErrorNorms]) -> String {
    let headers: Vec<String> = ["h", "u err H1", "order", "u err L2", "order", "p err L2", "order"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let orders = convergence_orders(levels);
    let rows: Vec<Vec<String>> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let o = |k: usize| if i == 0 { "-".to_string() } else { format!("{:.2}", orders[i - 1][k]) };
            vec![
                format!("1/{}", (1.0 / l.h).round()),
                format!("{:.3e}", l.h1_velocity),
                o(0),
                format!("{:.3e}", l.l2_velocity),
                o(1),
                format!("{:.3e}", l.l2_pressure),
                o(2),
            ]
        })
        .collect();
    markdown_table(&headers, &rows)
}

pub fn spectra_markdown(analyses: &[LevelAnalysis]) -> String {
    let headers: Vec<String> = ["h", "strategy", "λ⁻min", "λ⁻max", "λ⁺min", "λ⁺max", "outside bound"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for level in analyses {
        for rep in &level.spectra {
            let l = rep.spectrum.limits;
            rows.push(vec![
                format!("1/{}", level.n_elem),
                rep.strategy.label().to_string(),
                format!("{:.4}", l.neg_min),
                format!("{:.4}", l.neg_max),
                format!("{:.4}", l.pos_min),
                format!("{:.4}", l.pos_max),
                rep.inclusion.violations(&rep.spectrum, 1e-8).len().to_string(),
            ]);
        }
    }
    markdown_table(&headers, &rows)
}

pub fn infsup_markdown(analyses: &[LevelAnalysis]) -> String {
    let headers: Vec<String> = ["h", "β₀", "C_b"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = analyses
        .iter()
        .filter_map(|l| l.infsup.map(|c| (l.n_elem, c)))
        .map(|(n, c)| vec![format!("1/{n}"), format!("{:.4}", c.beta0()), format!("{:.4}", c.cb())])
        .collect();
    markdown_table(&headers, &rows)
}

/// All markdown sections of a run.
pub fn report_markdown(out: &RunOutput) -> String {
    let cfg = &out.config;
    let mut s = format!("# {} k'={} ν={} C_pen={}\n\n## Iterations\n\n", cfg.case, cfg.k_prime, cfg.nu, cfg.c_pen);
    s.push_str(&iterations_markdown(out));
    let errors = level_errors(out);
    if !errors.is_empty() {
        s.push_str("\n## Errors\n\n");
        s.push_str(&errors_markdown(&errors));
    }
    if out.analyses.iter().any(|l| l.infsup.is_some()) {
        s.push_str("\n## Inf-sup constants\n\n");
        s.push_str(&infsup_markdown(&out.analyses));
    }
    if out.analyses.iter().any(|l| !l.spectra.is_empty()) {
        s.push_str("\n## Limiting eigenvalues\n\n");
        s.push_str(&spectra_markdown(&out.analyses));
    }
    let divs: Vec<&RunRecord> = out.records.iter().filter(|r| r.max_div.is_some()).collect();
    if !divs.is_empty() {
        let worst = divs.iter().filter_map(|r| r.max_div).fold(0.0f64, |m, (d, _)| m.max(d));
        let _ = writeln!(s, "\nMaximum pointwise |div u_h| over all solves: {worst:.3e}");
    }
    for n in &out.notes {
        let _ = writeln!(s, "\nNote: {n}");
    }
    s
}

fn write(dir: &Path, name: String, content: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    written.push(path);
    Ok(())
}

/// Writes every requested file into `dir` and returns the paths.
pub fn write_outputs(out: &RunOutput, dir: &Path, opts: OutputOptions) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let tag = format!("{}_k{}", out.config.case, out.config.k_prime);
    let mut written = Vec::new();
    if opts.emit.csv() {
        write(dir, format!("iters_{tag}.csv"), &iterations_csv(&out.records), &mut written)?;
        let errors = level_errors(out);
        if !errors.is_empty() {
            write(dir, format!("errors_{tag}.csv"), &errors_csv(&errors), &mut written)?;
        }
        if out.analyses.iter().any(|l| l.infsup.is_some()) {
            write(dir, format!("infsup_{tag}.csv"), &infsup_csv(&out.analyses, out.config.c_pen), &mut written)?;
        }
        if out.analyses.iter().any(|l| !l.spectra.is_empty()) {
            write(dir, format!("spectral_{tag}.csv"), &spectral_summary_csv(&out.analyses), &mut written)?;
        }
    }
    if opts.emit.markdown() {
        write(dir, format!("report_{tag}.md"), &report_markdown(out), &mut written)?;
    }
    if opts.dump_spectrum {
        for level in out.analyses.iter().filter(|l| !l.spectra.is_empty()) {
            write(
                dir,
                format!("spectrum_{tag}_h{}.csv", level.n_elem),
                &spectrum_level_csv(level),
                &mut written,
            )?;
        }
    }
    if opts.dump_residuals {
        for &s in &out.config.strategies {
            write(dir, residual_file(s), &residuals_dat(out.records_for(s)), &mut written)?;
        }
    }
    Ok(written)
}

pub fn residual_file(s: Strategy) -> String {
    format!("residuals_{}.dat", s.slug())
}
