//! The sweep driver: one assembly per mesh level, one MINRES solve per
//! strategy, plus the optional analyses.

use std::time::Instant;

use divstokes::analysis::{
    divergence_free_check, error_norms, infsup_constants, max_velocity, spectral_report, BlockApprox, ErrorNorms,
    InfSup, SpectralReport,
};
use divstokes::assembly::{assemble_stokes, StokesSystem};
use divstokes::krylov::{make_strategy, solve_stokes, Strategy};
use divstokes::space::DiscretePair;

use crate::{CaseConfig, Result};

/// Outcome of one (case, strategy, level) solve.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub case: String,
    pub k_prime: usize,
    pub strategy: Strategy,
    pub n_elem: usize,
    pub h: f64,
    pub n_u: usize,
    pub n_p: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Setup (factorizations) plus MINRES wall time.
    pub seconds: f64,
    pub top_inner_mean: Option<f64>,
    pub bottom_inner_mean: Option<f64>,
    pub final_residual: f64,
    /// Relative `M⁻¹`-norm residual per iteration.
    pub history: Vec<f64>,
    pub errors: Option<ErrorNorms>,
    /// Maximum pointwise `|div u_h|` and maximum `|u_h|` at Gauss points.
    pub max_div: Option<(f64, f64)>,
    /// Set when the solve aborted (e.g. an indefinite block).
    pub failure: Option<String>,
}

/// Per-level analyses requested by the configuration.
#[derive(Clone, Debug)]
pub struct LevelAnalysis {
    pub n_elem: usize,
    pub infsup: Option<InfSup>,
    pub spectra: Vec<SpectralReport>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: CaseConfig,
    /// Ordered by level, then by the configured strategy order.
    pub records: Vec<RunRecord>,
    pub analyses: Vec<LevelAnalysis>,
    /// Analyses that could not be performed, with the reason.
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    pub fn records_for(&self, strategy: Strategy) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |r| r.strategy == strategy)
    }
}

/// Assembles the system of `config` at `n_elem` elements per direction.
pub fn assemble_level(config: &CaseConfig, n_elem: usize) -> Result<StokesSystem> {
    let pair = DiscretePair::build(config.k_prime, n_elem)?;
    let mut problem = config.case.problem(config.k_prime, config.nu, config.c_pen);
    if let Some(nq) = config.quad_points {
        problem = problem.with_quad_points(nq);
    }
    Ok(assemble_stokes(&pair, &config.case.map(), &problem)?)
}

/// Solves one strategy on an assembled system. Non-convergence and solver
/// breakdowns are recorded, not returned as errors.
pub fn solve_record(config: &CaseConfig, system: &StokesSystem, strategy: Strategy) -> Result<RunRecord> {
    let n_elem = system.pair.n_elem();
    let mut record = RunRecord {
        case: config.case.name().to_string(),
        k_prime: config.k_prime,
        strategy,
        n_elem,
        h: 1.0 / n_elem as f64,
        n_u: system.n_u(),
        n_p: system.n_p(),
        iterations: 0,
        converged: false,
        seconds: 0.0,
        top_inner_mean: None,
        bottom_inner_mean: None,
        final_residual: f64::NAN,
        history: Vec::new(),
        errors: None,
        max_div: None,
        failure: None,
    };
    let start = Instant::now();
    let solution = make_strategy(strategy, system, &config.inner_options())
        .and_then(|mut m| solve_stokes(system, &mut m, &config.minres_options()));
    record.seconds = start.elapsed().as_secs_f64();
    let solution = match solution {
        Ok(s) => s,
        Err(e) => {
            record.failure = Some(e.to_string());
            return Ok(record);
        }
    };
    let report = &solution.report;
    record.iterations = report.iterations;
    record.converged = report.converged;
    record.top_inner_mean = report.top_inner_mean;
    record.bottom_inner_mean = report.bottom_inner_mean;
    record.final_residual = report.final_residual();
    record.history = report.history.clone();
    if let Some(exact) = config.case.exact(config.nu) {
        // two extra points keep the quadrature error below the discretization error
        let nq = system.quad_points + 2;
        record.errors = Some(error_norms(
            &system.pair,
            &system.map,
            &solution.velocity,
            &solution.pressure,
            exact.as_ref(),
            nq,
        )?);
    }
    if config.divcheck {
        let nq = system.quad_points;
        record.max_div = Some((
            divergence_free_check(&system.pair, &system.map, &solution.velocity, nq)?,
            max_velocity(&system.pair, &system.map, &solution.velocity, nq)?,
        ));
    }
    Ok(record)
}

/// Runs the configured sweep. Levels run in order, strategies in the
/// configured order, so records are deterministic apart from wall times.
pub fn run(config: &CaseConfig) -> Result<RunOutput> {
    run_with_progress(config, |_| {})
}

/// [`run`] calling `progress` after each record.
pub fn run_with_progress(config: &CaseConfig, mut progress: impl FnMut(&RunRecord)) -> Result<RunOutput> {
    config.validate()?;
    let mut out = RunOutput {
        config: config.clone(),
        records: Vec::new(),
        analyses: Vec::new(),
        notes: Vec::new(),
    };
    for &n_elem in &config.levels {
        let system = assemble_level(config, n_elem)?;
        for w in &system.warnings {
            out.notes.push(format!("h=1/{n_elem}: {w}"));
        }
        for &strategy in &config.strategies {
            let record = solve_record(config, &system, strategy)?;
            progress(&record);
            out.records.push(record);
        }
        if config.infsup || config.spectra {
            out.analyses.push(analyse_level(config, &system, &mut out.notes));
        }
    }
    Ok(out)
}

fn analyse_level(config: &CaseConfig, system: &StokesSystem, notes: &mut Vec<String>) -> LevelAnalysis {
    let n_elem = system.pair.n_elem();
    let mut level = LevelAnalysis {
        n_elem,
        infsup: None,
        spectra: Vec::new(),
    };
    if config.infsup {
        match infsup_constants(system) {
            Ok(c) => level.infsup = Some(c),
            Err(e) => notes.push(format!("h=1/{n_elem}: inf-sup skipped: {e}")),
        }
    }
    if config.spectra {
        for &strategy in &config.strategies {
            if BlockApprox::of_strategy(strategy).is_err() {
                continue;
            }
            match spectral_report(system, strategy) {
                Ok(r) => level.spectra.push(r),
                Err(e) => notes.push(format!("h=1/{n_elem} {strategy}: spectrum skipped: {e}")),
            }
        }
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CaseKind;

    #[test]
    fn cavity_records_are_deterministic() {
        let cfg = CaseConfig::new(CaseKind::Cavity, 2, vec![4, 8], vec![Strategy::IdealAQ, Strategy::DiagAQ]);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.records.len(), 4);
        assert!(a.all_converged());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!((x.strategy, x.n_elem, x.iterations), (y.strategy, y.n_elem, y.iterations));
            assert_eq!(x.history, y.history);
            assert!(x.errors.is_none());
        }
        assert_eq!(a.records[0].strategy, Strategy::IdealAQ);
        assert_eq!(a.records[1].strategy, Strategy::DiagAQ);
        assert_eq!(a.records[2].n_elem, 8);
    }

    #[test]
    fn non_convergence_is_recorded() {
        let mut cfg = CaseConfig::new(CaseKind::Cavity, 2, vec![8], vec![Strategy::DiagAQ, Strategy::IdealAQ]);
        cfg.max_iter = 5;
        let out = run(&cfg).unwrap();
        assert_eq!(out.records.len(), 2);
        assert!(!out.all_converged());
        assert_eq!(out.records[0].iterations, 5);
        assert!(out.records[0].failure.is_none());
    }

    #[test]
    fn square_divcheck_and_errors() {
        let mut cfg = CaseConfig::new(CaseKind::Square, 2, vec![8], vec![Strategy::IdealAQ]);
        cfg.divcheck = true;
        let out = run(&cfg).unwrap();
        let r = &out.records[0];
        let (div, vmax) = r.max_div.unwrap();
        assert!(div < 1e-10 * vmax.max(1.0), "{div} vs {vmax}");
        let e = r.errors.unwrap();
        assert!(e.h1_velocity > 0.0 && e.h1_velocity < 1e-2);
    }

    #[test]
    fn analyses_cover_fixed_block_strategies_only() {
        let mut cfg = CaseConfig::new(CaseKind::Cavity, 2, vec![4], vec![Strategy::IdealAQ, Strategy::PcgAQ]);
        cfg.spectra = true;
        cfg.infsup = true;
        let out = run(&cfg).unwrap();
        let level = &out.analyses[0];
        assert!(level.infsup.is_some());
        assert_eq!(level.spectra.len(), 1);
        assert_eq!(level.spectra[0].strategy, Strategy::IdealAQ);
    }
}
