//! The subcommands. Each writes its tables into the output directory and
//! reports summary lines and an overall verdict.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use crcm::analysis::{
    build_shield, covering_test, estimate_np, event_aij, event_wij, localization_check, locality_trials,
    mono_lower_bound, np_bound, phi_y, psi, psi_root, wr_entropy_upper,
};
use crcm::connectivity::{cc_increment, check_bounds, compatibility_offset, count_components, ClusterLabeling};
use crcm::crcm::{
    gnz_residual_crcm, grid_partition, heat_bath_sweep, initial_state, run_crcm, ResampleMethod, ResampleOptions,
};
use crcm::geometry::{unit_ball_volume, Aabb, MarkedBall};
use crcm::gnz::{GnzOptions, GnzResidual, TestFunction};
use crcm::io::{write_configuration, write_trace, ConfigMeta};
use crcm::mcmc::{ChainKernel, ChainRun};
use crcm::model::boolean::{add_poisson_balls, uniform_point};
use crcm::model::{sample_boolean_with_halo, sample_poisson_boolean, Configuration, CoverageProbe, ModelParams};
use crcm::rng::{stream, Purpose};
use crcm::stats::{batch_means, bonferroni, chi2_homogeneity, weighted_trend, wilson_interval};
use crcm::wr::{col_event, fk_consistency_test, gnz_residual_wr, initial_wr_state, run_wr, FkOptions, WrState};
use rand::seq::SliceRandom;

use crate::checkpoint::{self, Checkpoint};
use crate::output::{num, run_meta, write_table, Table};
use crate::{Command, ExperimentSpec, LabError, ModelKind, Outcome, RunRequest};

/// Residual magnitude separating a consistent GNZ estimate from a
/// rejected one.
pub const GNZ_THRESHOLD: f64 = 4.0;

struct Ctx<'a> {
    req: &'a RunRequest,
    spec: &'a ExperimentSpec,
    meta: BTreeMap<String, String>,
    outcome: Outcome,
}

impl<'a> Ctx<'a> {
    fn new(req: &'a RunRequest) -> Self {
        Ctx {
            req,
            spec: &req.spec,
            meta: run_meta(req),
            outcome: Outcome {
                passed: true,
                ..Outcome::default()
            },
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outcome.files.push(name.to_string());
        self.req.out.join(name)
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<(), LabError> {
        let p = self.path(name);
        write_table(&p, table, &self.meta)
    }

    fn line(&mut self, s: impl Into<String>) {
        self.outcome.lines.push(s.into());
    }

    fn check(&mut self, ok: bool, s: impl AsRef<str>) {
        self.outcome.passed &= ok;
        self.line(format!("{} {}", if ok { "ok  " } else { "FAIL" }, s.as_ref()));
    }

    fn config_meta(&self, window: Aabb, extra: &[(&str, String)]) -> ConfigMeta {
        let mut m = self.meta.clone();
        m.remove("seed");
        m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        ConfigMeta {
            window,
            law: self.spec.law,
            seed: Some(self.spec.seed),
            extra: m,
        }
    }
}

pub fn dispatch(req: &RunRequest) -> Result<Outcome, LabError> {
    let mut ctx = Ctx::new(req);
    if req.resume.is_some() && !matches!(req.command, Command::SampleCrcm | Command::SampleWr) {
        return Err(LabError::Spec(format!("{} cannot be resumed", req.command.name())));
    }
    match req.command {
        Command::SamplePoisson => sample_poisson(&mut ctx)?,
        Command::SampleCrcm => {
            let params = ctx.spec.params()?;
            params.require_assumption_a()?;
            let seed = ctx.spec.seed;
            sample_chains(&mut ctx, &params, |i| initial_state(&params, seed, i), |s, out, meta| {
                write_configuration(out, s.config(), None, meta)
            })?
        }
        Command::SampleWr => {
            let params = ctx.spec.params()?;
            params.colors()?;
            let seed = ctx.spec.seed;
            sample_chains(&mut ctx, &params, |i| initial_wr_state(&params, seed, i), |s: &WrState, out, meta| {
                let c = s.colored();
                write_configuration(out, c.config(), Some(c.colors()), meta)
            })?
        }
        Command::GnzCheck => gnz_check(&mut ctx)?,
        Command::FkCheck => fk_check(&mut ctx)?,
        Command::DlrCheck => dlr_check(&mut ctx)?,
        Command::BoundsAudit => bounds_audit(&mut ctx)?,
        Command::Localization => localization(&mut ctx)?,
        Command::Shield => shield(&mut ctx)?,
        Command::EntropyBounds => entropy_bounds(&mut ctx)?,
        Command::NpDecay => np_decay(&mut ctx)?,
        Command::CoverageProbe => coverage_probe(&mut ctx)?,
    }
    Ok(ctx.outcome)
}

fn largest(config: &Configuration) -> usize {
    ClusterLabeling::build(config).sizes().into_iter().max().unwrap_or(0)
}

fn sample_poisson(ctx: &mut Ctx) -> Result<(), LabError> {
    let params = ctx.spec.params()?;
    let seed = ctx.spec.seed;
    let draws = ctx.req.exec.map(ctx.spec.samples, |i| {
        sample_poisson_boolean(&params, &mut stream(seed, Purpose::Reference, i as u64))
    });
    let mut t = Table::new(&["draw", "count", "n_cc", "largest_component"]);
    for (i, c) in draws.iter().enumerate() {
        t.push([i.to_string(), c.len().to_string(), count_components(c).to_string(), largest(c).to_string()]);
    }
    ctx.table("poisson.csv", &t)?;
    for (i, c) in draws.iter().take(ctx.spec.chains).enumerate() {
        let meta = ctx.config_meta(params.window, &[("draw", i.to_string())]);
        let p = ctx.path(&format!("config_{i}.csv"));
        write_configuration(BufWriter::new(File::create(p)?), c, None, &meta)?;
    }
    let mean = draws.iter().map(|c| c.len() as f64).sum::<f64>() / draws.len().max(1) as f64;
    ctx.line(format!("{} draws, mean count {mean:.3} (expected {:.3})", draws.len(), params.mean_count()));
    Ok(())
}

/// Runs (or resumes) the chains of a sampling subcommand, stopping early
/// with a checkpoint when `halt_after` is set.
fn sample_chains<K, I, W>(ctx: &mut Ctx, params: &ModelParams, init: I, write_final: W) -> Result<(), LabError>
where
    K: ChainKernel<Params = ModelParams>,
    I: Fn(usize) -> crcm::Result<K>,
    W: Fn(&K, BufWriter<File>, &ConfigMeta) -> crcm::Result<()>,
{
    let spec = ctx.spec;
    let hash = spec.hash(ctx.req.command);
    let mut opts = spec.chain_options();
    opts.keep_samples = false;
    let runs: Vec<ChainRun<K>> = match &ctx.req.resume {
        Some(path) => {
            let cp = Checkpoint::<K>::load(path)?;
            if cp.command != ctx.req.command || cp.spec_hash != hash {
                return Err(LabError::Spec(format!(
                    "checkpoint {} was written for a different spec or subcommand",
                    path.display()
                )));
            }
            cp.runs
        }
        None => (0..spec.chains)
            .map(|i| Ok(ChainRun::new(init(i)?, opts)?))
            .collect::<Result<_, LabError>>()?,
    };
    let mut slots: Vec<(ChainRun<K>, crcm::Result<bool>)> = runs.into_iter().map(|r| (r, Ok(false))).collect();
    let halt = spec.halt_after;
    ctx.req.exec.for_each_mut(&mut slots, |_, (run, res)| {
        let budget = halt.map(|h| h.saturating_sub(run.sweeps_done));
        *res = run.advance(params, budget);
    });
    let mut runs = Vec::with_capacity(slots.len());
    let mut finished = true;
    for (run, res) in slots {
        finished &= res?;
        runs.push(run);
    }
    if !finished {
        let cp = Checkpoint {
            command: ctx.req.command,
            spec_hash: hash,
            spec: spec.clone(),
            runs,
        };
        let p = ctx.path(checkpoint::FILE_NAME);
        cp.save(&p)?;
        ctx.line(format!("halted after {} sweeps per chain; checkpoint written", halt.unwrap_or(0)));
        return Ok(());
    }
    let mut summary = Table::new(&[
        "chain", "sweeps", "thin", "samples", "mean_count", "mean_n_cc", "accept_birth", "accept_death",
        "iat_count", "ess_count", "ess_n_cc",
    ]);
    for (i, run) in runs.into_iter().enumerate() {
        let sweeps = run.sweeps_done;
        let out = run.finish();
        let r = &out.report;
        let mut meta = ctx.meta.clone();
        meta.insert("chain".into(), i.to_string());
        let p = ctx.path(&format!("trace_{i}.csv"));
        write_trace(BufWriter::new(File::create(p)?), &r.trace, &meta)?;
        let cm = ctx.config_meta(params.window, &[("chain", i.to_string()), ("sweeps", sweeps.to_string())]);
        let p = ctx.path(&format!("config_{i}.csv"));
        write_final(&out.state, BufWriter::new(File::create(p)?), &cm)?;
        let mean = |f: fn(&crcm::mcmc::TraceRow) -> usize| {
            r.sample_rows.iter().map(|x| f(x) as f64).sum::<f64>() / r.sample_rows.len().max(1) as f64
        };
        summary.push([
            i.to_string(),
            sweeps.to_string(),
            r.thin.to_string(),
            r.sample_rows.len().to_string(),
            num(mean(|x| x.count)),
            num(mean(|x| x.n_cc)),
            num(r.accept_birth),
            num(r.accept_death),
            num(r.iat_count),
            num(r.ess_count),
            num(r.ess_n_cc),
        ]);
        ctx.line(format!(
            "chain {i}: {} samples, mean count {:.3}, mean N_cc {:.3}, acceptance {:.3}/{:.3}",
            r.sample_rows.len(),
            mean(|x| x.count),
            mean(|x| x.n_cc),
            r.accept_birth,
            r.accept_death
        ));
    }
    ctx.table("summary.csv", &summary)
}

fn gnz_options(spec: &ExperimentSpec) -> GnzOptions {
    GnzOptions {
        inner_draws: spec.inner_draws,
        seed: spec.seed,
        batches: 20,
    }
}

fn gnz_check(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    let params = spec.params()?;
    let exec = ctx.req.exec;
    let mut opts = spec.chain_options();
    opts.keep_samples = true;
    let g = gnz_options(spec);
    let family = TestFunction::DEFAULTS;
    let (main, control, control_name) = match spec.model {
        ModelKind::Crcm => {
            let samples: Vec<Configuration> = run_crcm(&params, opts, spec.seed, spec.chains, exec)?
                .into_iter()
                .flat_map(|o| o.samples)
                .collect();
            (
                gnz_residual_crcm(&samples, &params, &family, &g, None, exec)?,
                gnz_residual_crcm(&samples, &params, &[TestFunction::One], &g, Some(2.0 * params.q), exec)?,
                "q doubled",
            )
        }
        ModelKind::Wr => {
            let samples: Vec<_> = run_wr(&params, opts, spec.seed, spec.chains, exec)?
                .into_iter()
                .flat_map(|o| o.samples)
                .collect();
            (
                gnz_residual_wr(&samples, &params, &family, &g, false, exec)?,
                gnz_residual_wr(&samples, &params, &[TestFunction::One], &g, true, exec)?,
                "indicator dropped",
            )
        }
    };
    let mut t = Table::new(&["role", "function", "lhs", "rhs", "se", "residual"]);
    let mut row = |role: &str, r: &GnzResidual| {
        t.push([role.to_string(), r.function.name().to_string(), num(r.lhs), num(r.rhs), num(r.se), num(r.residual)])
    };
    main.iter().for_each(|r| row("main", r));
    control.iter().for_each(|r| row("control", r));
    ctx.table("gnz.csv", &t)?;
    for r in &main {
        ctx.check(
            r.residual.abs() < GNZ_THRESHOLD,
            format!("GNZ {}: residual {:.2} (lhs {:.4}, rhs {:.4})", r.function.name(), r.residual, r.lhs, r.rhs),
        );
    }
    for r in &control {
        ctx.check(
            r.residual.abs() > GNZ_THRESHOLD,
            format!("negative control ({control_name}) {}: residual {:.2}", r.function.name(), r.residual),
        );
    }
    Ok(())
}

fn fk_check(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    let params = spec.params()?;
    let mut chain = spec.chain_options();
    chain.keep_samples = false;
    let opts = FkOptions {
        chain,
        pairs: spec.pairs,
        seed: spec.seed,
        alpha: spec.level,
        crcm_z: spec.crcm_z,
    };
    let report = fk_consistency_test(&params, &opts, ctx.req.exec)?;
    let mut t = Table::new(&["pair", "p_count", "p_n_cc", "p_largest"]);
    for p in &report.pairs {
        t.push([p.pair.to_string(), num(p.p_count), num(p.p_n_cc), num(p.p_largest)]);
    }
    ctx.table("fk.csv", &t)?;
    let min_p = report.pairs.iter().map(|p| p.min_p()).fold(1.0, f64::min);
    ctx.check(
        !report.rejected,
        format!(
            "colour-blind WR vs CRCM(z={}): smallest p-value {min_p:.4} against threshold {:.2e} over {} pairs",
            opts.crcm_z.unwrap_or(params.z / params.q),
            report.threshold,
            report.pairs.len()
        ),
    );
    Ok(())
}

fn dlr_check(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    let params = spec.params()?;
    params.require_assumption_a()?;
    let exec = ctx.req.exec;
    let cells = grid_partition(&params.window, spec.per_axis);
    let thin = spec.thin.unwrap_or(1) as u64;
    let ropts = ResampleOptions::default();
    // heat-bath chains use the stream indices after the birth-death ones
    let heat = exec.map(spec.chains, |c| -> Result<(Vec<i64>, Vec<i64>, usize), crcm::Error> {
        let mut s = initial_state(&params, spec.seed, spec.chains + c)?;
        let (mut counts, mut ncc, mut fallbacks) = (Vec::new(), Vec::new(), 0);
        let total = spec.burn_in + thin * spec.samples as u64;
        for sweep in 1..=total {
            let methods = heat_bath_sweep(&mut s, &cells, &params, &ropts)?;
            fallbacks += methods.iter().filter(|m| **m == ResampleMethod::Fallback).count();
            if sweep > spec.burn_in && (sweep - spec.burn_in) % thin == 0 {
                counts.push(s.config().len() as i64);
                ncc.push(s.n_cc());
            }
        }
        Ok((counts, ncc, fallbacks))
    });
    let (mut hb_count, mut hb_ncc, mut fallbacks) = (Vec::new(), Vec::new(), 0);
    for h in heat {
        let (c, n, f) = h?;
        hb_count.extend(c);
        hb_ncc.extend(n);
        fallbacks += f;
    }
    let mut opts = spec.chain_options();
    opts.keep_samples = false;
    let (mut bd_count, mut bd_ncc) = (Vec::new(), Vec::new());
    for out in run_crcm(&params, opts, spec.seed, spec.chains, exec)? {
        bd_count.extend(out.report.sample_rows.iter().map(|r| r.count as i64));
        bd_ncc.extend(out.report.sample_rows.iter().map(|r| r.n_cc as i64));
    }
    let p_count = chi2_homogeneity(&hb_count, &bd_count)?.p_value;
    let p_ncc = chi2_homogeneity(&hb_ncc, &bd_ncc)?.p_value;
    let threshold = bonferroni(spec.level, 2);
    let mean = |v: &[i64]| v.iter().sum::<i64>() as f64 / v.len().max(1) as f64;
    let mut t = Table::new(&["statistic", "heat_bath_mean", "birth_death_mean", "p_value"]);
    t.push(["count".into(), num(mean(&hb_count)), num(mean(&bd_count)), num(p_count)]);
    t.push(["n_cc".into(), num(mean(&hb_ncc)), num(mean(&bd_ncc)), num(p_ncc)]);
    ctx.table("dlr.csv", &t)?;
    ctx.line(format!("{} cells per sweep, {fallbacks} fallbacks to nested birth-death", cells.len()));
    ctx.check(p_count >= threshold, format!("heat-bath vs birth-death count: p = {p_count:.4}"));
    ctx.check(p_ncc >= threshold, format!("heat-bath vs birth-death N_cc: p = {p_ncc:.4}"));
    Ok(())
}

/// Violation counts of the exact identities checked by `bounds-audit`.
#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    upper: usize,
    lower: usize,
    lower_asserted: usize,
    offset: usize,
    offset_trials: usize,
    increment: usize,
    increment_trials: usize,
    telescoping: usize,
    deletion: usize,
    deletion_trials: usize,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.upper += o.upper;
        self.lower += o.lower;
        self.lower_asserted += o.lower_asserted;
        self.offset += o.offset;
        self.offset_trials += o.offset_trials;
        self.increment += o.increment;
        self.increment_trials += o.increment_trials;
        self.telescoping += o.telescoping;
        self.deletion += o.deletion;
        self.deletion_trials += o.deletion_trials;
        self
    }

    fn violations(&self) -> usize {
        self.upper + self.lower + self.offset + self.increment + self.telescoping + self.deletion
    }
}

/// Cap on the draws of `localization`, in multiples of `configs`.
const LOCALIZATION_MAX_BATCHES: usize = 50;

/// Increment probes and deletions per configuration.
const AUDIT_PROBES: usize = 5;

fn audit_one(c: &Configuration, lambda: &Aabb, params: &ModelParams, r0: f64, resamples: usize, rng: &mut crcm::rng::Rng) -> crcm::Result<Tally> {
    let mut t = Tally::default();
    let window = params.window;
    let b = check_bounds(c, lambda, r0)?;
    t.upper += !b.upper_ok as usize;
    t.lower += !b.lower_ok as usize;
    t.lower_asserted += b.lower_asserted as usize;

    let offset = compatibility_offset(c, lambda, &window)?;
    let exterior = c.exclude(lambda);
    for _ in 0..resamples {
        let mut c2 = exterior.clone();
        add_poisson_balls(&mut c2, lambda, params.z, &params.law, rng);
        t.offset_trials += 1;
        t.offset += (compatibility_offset(&c2, lambda, &window)? != offset) as usize;
    }

    // lower increment bound −C0 R^d with C0 = (3/R0)^d, R0 the smallest radius
    let rmin = params.law.min_radius();
    let d = window.dim() as i32;
    for _ in 0..AUDIT_PROBES {
        let x = MarkedBall {
            center: uniform_point(&window, rng),
            radius: params.law.sample(rng),
        };
        let inc = cc_increment(c, &x);
        let floor = if rmin > 0.0 {
            -(3.0 / rmin).powi(d) * x.radius.powi(d)
        } else {
            f64::NEG_INFINITY
        };
        t.increment_trials += 1;
        t.increment += (inc > 1 || (inc as f64) < floor) as usize;
    }

    let mut order: Vec<MarkedBall> = c.balls().to_vec();
    order.shuffle(rng);
    let mut partial = c.empty_like();
    let mut sum = 0i64;
    for ball in order {
        sum += cc_increment(&partial, &ball);
        partial.push(ball)?;
    }
    t.telescoping += (sum != count_components(c) as i64) as usize;

    let n_full = count_components(c) as i64;
    for _ in 0..AUDIT_PROBES.min(c.len()) {
        let k = rand::Rng::random_range(rng, 0..c.len());
        let mut minus = c.clone();
        let x = minus.swap_remove(k);
        t.deletion_trials += 1;
        t.deletion += (cc_increment(&minus, &x) != n_full - count_components(&minus) as i64) as usize;
    }
    Ok(t)
}

fn bounds_audit(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    let params = spec.params()?;
    let lambda = spec.lambda()?;
    let r0 = spec.r0()?;
    let tallies = ctx.req.exec.map(spec.configs, |i| {
        let mut rng = stream(spec.seed, Purpose::Probe, i as u64);
        let c = sample_poisson_boolean(&params, &mut rng);
        audit_one(&c, &lambda, &params, r0, spec.resamples, &mut rng)
    });
    let mut total = Tally::default();
    for t in tallies {
        total = total.add(t?);
    }
    let mut t = Table::new(&["check", "trials", "violations"]);
    let rows = [
        ("upper bound", spec.configs, total.upper),
        ("lower bound", total.lower_asserted, total.lower),
        ("offset invariance", total.offset_trials, total.offset),
        ("increment range", total.increment_trials, total.increment),
        ("telescoping", spec.configs, total.telescoping),
        ("deletion inverse", total.deletion_trials, total.deletion),
    ];
    for (name, trials, v) in rows {
        t.push([name.to_string(), trials.to_string(), v.to_string()]);
    }
    ctx.table("bounds.csv", &t)?;
    for (name, trials, v) in rows {
        ctx.line(format!("{name}: {v} violations / {trials}"));
    }
    ctx.check(
        total.violations() == 0,
        format!("bounds audit: {} violations over {} configurations", total.violations(), spec.configs),
    );
    Ok(())
}

fn localization(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    if spec.window_lo != -spec.window_hi {
        return Err(LabError::Spec("localization needs a window symmetric about the origin".into()));
    }
    if spec.ij_pairs.is_empty() {
        return Err(LabError::Spec("ij_pairs is empty".into()));
    }
    let params = spec.params()?;
    let lambda = Aabb::centered(spec.dim, spec.lambda_half)?;
    let r0 = spec.r0()?;
    for &[i, _] in &spec.ij_pairs {
        if !lambda.dilate(r0).is_inside(&Aabb::centered(spec.dim, i)?) {
            return Err(LabError::Spec(format!("Λ ⊕ R0 does not fit in Δ_i for i = {i}")));
        }
    }
    let mut t = Table::new(&["i", "j", "draws", "p_a", "p_w", "checked", "failures", "skipped"]);
    for &[i, j] in &spec.ij_pairs {
        // draw batches until `configs` samples fall in both events
        let (mut draws, mut na, mut nw, mut checked, mut failures, mut skipped) = (0, 0, 0, 0, 0, 0);
        while checked < spec.configs && draws < LOCALIZATION_MAX_BATCHES * spec.configs {
            let res = ctx.req.exec.map(spec.configs, |k| -> crcm::Result<(bool, bool, Option<bool>)> {
                let index = (draws + k) as u64;
                let c = sample_poisson_boolean(&params, &mut stream(spec.seed, Purpose::Reference, index));
                let a = event_aij(&c, i, j)?;
                let w = event_wij(&c, &lambda, r0, i, j)?;
                let verdict = if a && w {
                    match localization_check(&c, &lambda, r0, i, j) {
                        Ok(ok) => Some(ok),
                        Err(crcm::Error::PreconditionEventFailed(_)) => None,
                        Err(e) => return Err(e),
                    }
                } else {
                    None
                };
                Ok((a, w, verdict))
            });
            draws += spec.configs;
            for r in res {
                let (a, w, v) = r?;
                na += a as usize;
                nw += w as usize;
                match v {
                    Some(ok) => {
                        checked += 1;
                        failures += !ok as usize;
                    }
                    None if a && w => skipped += 1,
                    None => {}
                }
            }
        }
        let n = draws.max(1) as f64;
        t.push([
            num(i),
            num(j),
            draws.to_string(),
            num(na as f64 / n),
            num(nw as f64 / n),
            checked.to_string(),
            failures.to_string(),
            skipped.to_string(),
        ]);
        ctx.check(
            failures == 0 && checked >= spec.configs,
            format!("localization (i={i}, j={j}): {failures} failures / {checked} checked in {draws} draws"),
        );
    }
    ctx.table("localization.csv", &t)
}

fn shield(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    let geom = build_shield(spec.alpha, spec.k, spec.dim)?;
    ctx.line(format!("D1={}", geom.d1));
    ctx.line(format!("D2={}", geom.d2));
    ctx.line(format!("Delta half side={}", geom.delta_half));
    let cov = covering_test(&geom, spec.trials, spec.seed);
    let violations = cov.inner_violations + cov.outer_violations;
    ctx.check(violations == 0, format!("covering test: {violations} violations / {}", cov.trials));
    let colors = if spec.q >= 2.0 && spec.q.fract() == 0.0 { spec.q as u32 } else { 2 };
    let failures = locality_trials(&geom, colors, spec.locality_trials, spec.seed)?;
    ctx.check(
        failures == 0,
        format!("colored locality (q={colors}): {failures} failures / {}", spec.locality_trials),
    );
    let mut t = Table::new(&["key", "value"]);
    for (k, v) in [
        ("dim", geom.dim.to_string()),
        ("alpha", geom.alpha.to_string()),
        ("k", geom.k.to_string()),
        ("d1", geom.d1.to_string()),
        ("d2", geom.d2.to_string()),
        ("delta_half", geom.delta_half.to_string()),
        ("covering_trials", cov.trials.to_string()),
        ("inner_violations", cov.inner_violations.to_string()),
        ("outer_violations", cov.outer_violations.to_string()),
        ("locality_trials", spec.locality_trials.to_string()),
        ("locality_failures", failures.to_string()),
    ] {
        t.push([k.to_string(), v]);
    }
    ctx.table("shield.csv", &t)?;
    let p = ctx.path("shield_geometry.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(p)?), &geom)?;
    Ok(())
}

fn entropy_bounds(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    let (q, d, law) = (spec.q, spec.dim, spec.law);
    let mut phis = Table::new(&["y", "phi_y", "z_y", "psi_at_z_y"]);
    let mut sep = Table::new(&["y", "z", "psi", "wr_upper", "mono_lower", "separated"]);
    let mut first_interval = None;
    for (iy, &y) in spec.y_grid.iter().enumerate() {
        let phi = phi_y(&law, y, d)?;
        let root = psi_root(q, y, phi, d).ok();
        phis.push([
            num(y),
            num(phi),
            root.map(num).unwrap_or_default(),
            root.map(|z| num(psi(z, q, y, phi, d))).unwrap_or_default(),
        ]);
        ctx.line(format!(
            "y={y}: phi_y={phi}, z_y={}",
            root.map_or("undefined".to_string(), |z| format!("{z:.6}"))
        ));
        let grid: Vec<f64> = if spec.z_grid.is_empty() {
            let top = root.map_or(1.0, |z| 20.0 * z);
            (1..=100).map(|k| top * k as f64 / 100.0).collect()
        } else {
            spec.z_grid.clone()
        };
        let mut interval: Option<(f64, f64)> = None;
        for &z in &grid {
            let upper = wr_entropy_upper(z, q, y, &law, spec.n, d)?;
            let lower = mono_lower_bound(z, q);
            let separated = upper < lower;
            if separated {
                interval = Some(interval.map_or((z, z), |(a, b)| (a.min(z), b.max(z))));
            }
            sep.push([num(y), num(z), num(psi(z, q, y, phi, d)), num(upper), num(lower), separated.to_string()]);
        }
        match interval {
            Some((a, b)) => ctx.line(format!("y={y}: separation on z in [{a}, {b}]")),
            None => ctx.line(format!("y={y}: no separation on the z grid")),
        }
        if iy == 0 {
            first_interval = interval;
        }
    }
    ctx.table("entropy_phi.csv", &phis)?;
    ctx.table("entropy_separation.csv", &sep)?;
    if spec.col_check {
        let Some((a, b)) = first_interval else {
            ctx.check(false, "P(Col): no separated activity to sample at");
            return Ok(());
        };
        let z = 0.5 * (a + b);
        let params = spec.params()?.with_z(z);
        let mut opts = spec.chain_options();
        opts.keep_samples = true;
        let samples: Vec<_> = run_wr(&params, opts, spec.seed, spec.chains, ctx.req.exec)?
            .into_iter()
            .flat_map(|o| o.samples)
            .collect();
        let hits = samples.iter().filter(|s| col_event(s)).count() as u64;
        let n = samples.len() as u64;
        let (lo, hi) = wilson_interval(hits, n, spec.level);
        let mut t = Table::new(&["z", "samples", "col", "p_col", "wilson_lo", "wilson_hi"]);
        t.push([num(z), n.to_string(), hits.to_string(), num(hits as f64 / n.max(1) as f64), num(lo), num(hi)]);
        ctx.table("entropy_col.csv", &t)?;
        ctx.check(lo > 0.0, format!("P(Col) at z={z:.5}: {hits}/{n}, interval [{lo:.4}, {hi:.4}]"));
    }
    Ok(())
}

fn np_decay(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    if spec.z_grid.is_empty() {
        return Err(LabError::Spec("z_grid is empty".into()));
    }
    let base = spec.params()?;
    base.require_assumption_a()?;
    let r0 = spec.r0.unwrap_or(spec.law.min_radius());
    let border = spec.border();
    let mut opts = spec.chain_options();
    opts.keep_samples = true;
    let mut t = Table::new(&["z", "np_hat", "se", "bound", "within_bound"]);
    let (mut zs, mut est, mut ses) = (Vec::new(), Vec::new(), Vec::new());
    for &z in &spec.z_grid {
        let params = base.with_z(z);
        let samples: Vec<Configuration> = run_crcm(&params, opts, spec.seed, spec.chains, ctx.req.exec)?
            .into_iter()
            .flat_map(|o| o.samples)
            .collect();
        let (np, se) = estimate_np(&samples, &params.window, border)?;
        let bound = np_bound(z, spec.q, &spec.law, r0, spec.dim)?;
        let within = np <= bound + 3.0 * se;
        t.push([num(z), num(np), num(se), num(bound), within.to_string()]);
        ctx.check(within, format!("z={z}: N_P {np:.5} ± {se:.5}, bound {bound:.5}"));
        zs.push(z);
        est.push(np);
        ses.push(se);
    }
    ctx.table("np_decay.csv", &t)?;
    // trend from the peak onwards
    let peak = est
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    match weighted_trend(&zs[peak..], &est[peak..], &ses[peak..]) {
        Ok(tr) => ctx.check(
            tr.p_decreasing < spec.level,
            format!(
                "decay after z={}: slope {:.4} ± {:.4}, p = {:.4}",
                zs[peak], tr.slope, tr.se, tr.p_decreasing
            ),
        ),
        Err(_) => ctx.check(false, format!("decay: fewer than 3 grid points after the peak at z={}", zs[peak])),
    }
    Ok(())
}

fn coverage_probe(ctx: &mut Ctx) -> Result<(), LabError> {
    let spec = ctx.spec;
    let params = spec.params()?;
    let observe = spec.lambda()?;
    let mut probe = CoverageProbe::default_for(spec.dim);
    probe.conservative = false;
    if let Some(n) = spec.probe_points {
        probe.per_axis = n;
    }
    let draws = ctx.req.exec.map(spec.samples, |i| -> crcm::Result<(f64, usize, f64, bool)> {
        let mut rng = stream(spec.seed, Purpose::Probe, i as u64);
        let h = sample_boolean_with_halo(&observe, &params, spec.eps, spec.truncation, &mut rng)?;
        let frac = probe.covered_fraction(h.config.balls(), &observe);
        Ok((h.halo, h.config.len(), frac, h.biased))
    });
    let mut t = Table::new(&["draw", "halo", "balls", "covered_fraction"]);
    let mut fracs = Vec::new();
    let mut biased = false;
    for (i, d) in draws.into_iter().enumerate() {
        let (halo, n, frac, b) = d?;
        biased |= b;
        fracs.push(frac);
        t.push([i.to_string(), num(halo), n.to_string(), num(frac)]);
    }
    ctx.table("coverage.csv", &t)?;
    let bm = batch_means(&fracs, 20);
    if biased || !spec.law.finite_d_moment(spec.dim) {
        ctx.line(format!("mean covered fraction {:.5} ± {:.5} (truncated law, no reference)", bm.mean, bm.se));
        return Ok(());
    }
    let theory = 1.0 - (-params.z * unit_ball_volume(spec.dim) * spec.law.d_moment(spec.dim)).exp();
    ctx.check(
        (bm.mean - theory).abs() <= 4.0 * bm.se.max(1e-12),
        format!("mean covered fraction {:.5} ± {:.5}, stationary value {theory:.5}", bm.mean, bm.se),
    );
    Ok(())
}
