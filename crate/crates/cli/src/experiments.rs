//! The named experiments. Each one appends checks to a [`Summary`] and writes
//! its report files.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qpmsa::eigencurve::*;
use qpmsa::green::{check_resolvent_identity, check_zero_good_bounds, gamma0, GreenFunctionReport};
use qpmsa::linalg::{eigh, eigvalsh, nearest_index, refine_eigenvector, spectral_distance};
use qpmsa::msa::*;
use qpmsa::spectral::*;
use qpmsa::{assemble, Center, FrequencyVector, LatticeRegion, OperatorSlice, PotentialProfile, QpFamily, Site, TorusPhase};

use crate::config::{Experiment, RunConfig};
use crate::report::{Output, Summary};
use crate::CliError;

/// Everything resolved from the config before any experiment runs.
pub struct Env {
    pub cfg: RunConfig,
    pub potential: PotentialProfile,
    pub omega: FrequencyVector,
    pub e_star: f64,
}

impl Env {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let potential = cfg.potential();
        let omega = cfg.frequency()?;
        let e_star = match cfg.target.e_star {
            Some(e) => e,
            None => {
                let region = cfg.region(cfg.target.side);
                reference_energy(&region, cfg.target.theta_star, cfg.model.epsilon, &potential, &omega)?
            }
        };
        Ok(Env {
            cfg,
            potential,
            omega,
            e_star,
        })
    }

    fn slice(&self, region: &LatticeRegion, theta: f64, eps: f64) -> qpmsa::Result<OperatorSlice> {
        assemble(region, TorusPhase::new(theta), eps, &self.potential, &self.omega)
    }
}

pub fn run(env: &Env, out: &mut Output) -> Result<Summary, CliError> {
    let mut summary = Summary::default();
    match env.cfg.experiment {
        Experiment::Assemble => assemble_experiment(env, out, &mut summary)?,
        Experiment::Msa => {
            msa_experiment(env, out, &mut summary)?;
        }
        Experiment::Curve => {
            if let Some(run) = msa_experiment(env, out, &mut summary)? {
                curve_experiment(env, &run, out, &mut summary)?;
            }
        }
        Experiment::Ids => ids_experiment(env, out, &mut summary)?,
        Experiment::Moments => moments_experiment(env, out, &mut summary)?,
        Experiment::VerifyAll => {
            assemble_experiment(env, out, &mut summary)?;
            if let Some(run) = msa_experiment(env, out, &mut summary)? {
                curve_experiment(env, &run, out, &mut summary)?;
            }
            ids_experiment(env, out, &mut summary)?;
            moments_experiment(env, out, &mut summary)?;
            sweep_experiment(env, out, &mut summary)?;
        }
    }
    Ok(summary)
}

fn progress(msg: impl AsRef<str>) {
    eprintln!("qpmsa: {}", msg.as_ref());
}

// ------------------------------------------------------------ assemble

fn assemble_experiment(env: &Env, out: &mut Output, summary: &mut Summary) -> Result<(), CliError> {
    let cfg = &env.cfg;
    progress("assembling H_Λ(θ*)");
    let region = cfg.region(cfg.target.side);
    let theta = cfg.target.theta_star;
    let eps = cfg.model.epsilon;
    let op = env.slice(&region, theta, eps)?;
    let h = &op.matrix;
    let n = region.len();

    let asym = (h - h.transpose()).amax();
    summary.check("assemble: symmetric", asym == 0.0, format!("{n} sites, max |H − Hᵀ| = {asym:.1e}"));

    let w = env.omega.as_slice();
    let diag_err = (0..n)
        .map(|i| (h[(i, i)] - env.potential.eval(TorusPhase::new(theta + region.site(i).dot(w)).value())).abs())
        .fold(0.0, f64::max);
    summary.check("assemble: diagonal is v(θ* + x·ω)", diag_err <= 1e-14, format!("max deviation {diag_err:.1e}"));

    let mut hop_err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let want = if region.site(i).l1_dist(region.site(j)) == 1 { eps } else { 0.0 };
                hop_err = hop_err.max((h[(i, j)] - want).abs());
            }
        }
    }
    summary.check("assemble: hopping ε on nearest-neighbour bonds", hop_err == 0.0, format!("max deviation {hop_err:.1e}"));

    // resolvent identity for the lower half, at the energy near E* farthest
    // from both spectra
    let first = |s: &Site| s.coords()[0];
    let cut = region.iter().map(first).min().unwrap_or(0) + cfg.target.side / 2;
    let sub = region.filter(|s| first(s) < cut);
    let outer_vals = eigvalsh(h);
    let mut pool = outer_vals.clone();
    if !sub.is_empty() {
        pool.extend(eigvalsh(&op.restrict(&sub)?.matrix));
    }
    let energy = quiet_energy(&pool, env.e_star, 0.05);
    let identity = if sub.is_empty() {
        None
    } else {
        Some(check_resolvent_identity(&op, &sub, energy)?)
    };
    let residual = identity.unwrap_or(0.0);
    summary.check(
        "assemble: resolvent identity",
        residual <= 1e-8,
        format!("sub-box of {} sites at E = {energy:.6}: residual {residual:.2e}", sub.len()),
    );

    let mut green = out.read_json("green_reports.json");
    green["assemble"] = json!({
        "sites": n,
        "theta": theta,
        "epsilon": eps,
        "e_star": env.e_star,
        "spectrum_min": outer_vals.first(),
        "spectrum_max": outer_vals.last(),
        "dist_e_star": spectral_distance(&outer_vals, env.e_star),
        "resolvent_identity": { "sub_sites": sub.len(), "energy": energy, "residual": identity },
    });
    out.write_json("green_reports.json", &green)?;
    Ok(())
}

/// The midpoint of the widest gap of `values` inside [e − half, e + half].
fn quiet_energy(values: &[f64], e: f64, half: f64) -> f64 {
    let mut pts: Vec<f64> = values.iter().copied().filter(|v| (v - e).abs() <= half).collect();
    pts.push(e - half);
    pts.push(e + half);
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .max_by(|a, b| (a[1] - a[0]).total_cmp(&(b[1] - b[0])))
        .map(|p| 0.5 * (p[0] + p[1]))
        .unwrap_or(e)
}

// ------------------------------------------------------------ msa

pub struct MsaRun {
    ctx: MsaContext,
    state: ScaleState,
}

#[derive(Serialize)]
struct GreenEntry {
    component: usize,
    theta_offset: f64,
    energy_offset: f64,
    report: GreenFunctionReport,
}

fn msa_experiment(env: &Env, out: &mut Output, summary: &mut Summary) -> Result<Option<MsaRun>, CliError> {
    let cfg = &env.cfg;
    let ctx = MsaContext {
        ambient: cfg.region(cfg.target.side),
        theta_star: cfg.target.theta_star,
        e_star: env.e_star,
        epsilon: cfg.model.epsilon,
        potential: env.potential.clone(),
        omega: env.omega.clone(),
    };
    let schedule = cfg.schedule()?;
    let delta0 = schedule.delta0;
    let mut state = initial_state(&ctx, schedule);
    progress(format!(
        "stage 0: {} singular sites of {} (E* = {:.8})",
        state.current().singular.len(),
        ctx.ambient.len(),
        env.e_star
    ));
    let mut pipeline_error = None;
    for _ in 0..cfg.schedule.stages {
        if state.current().terminated {
            break;
        }
        match advance_stage(&state, &ctx) {
            Ok(next) => {
                state = next;
                let s = state.current();
                progress(format!(
                    "stage {}: {:?}, l = {}, {} centers, {} singular",
                    s.stage,
                    s.branch,
                    s.length,
                    s.centers.len(),
                    s.singular.len()
                ));
            }
            Err(e) => {
                pipeline_error = Some(e.to_string());
                break;
            }
        }
    }
    summary.check(
        "msa: pipeline",
        pipeline_error.is_none(),
        match &pipeline_error {
            Some(e) => format!("stopped after stage {}: {e}", state.stage()),
            None => format!("reached stage {}", state.stage()),
        },
    );

    let reports: Vec<CenterTheoremReport> = (0..=state.stage()).map(|n| verify_center_theorem(&state, n, &ctx)).collect();
    for r in &reports {
        let detail = match &r.worst {
            Some(w) => format!("{} pairs, worst m = {:.3e} ≤ {:.3e}", r.pairs, w.m, w.bound),
            None => "fewer than two singular centers".to_string(),
        };
        summary.check(format!("msa: Center Theorem stage {}", r.stage), r.passed, detail);
    }

    // 0-good bounds on the components of Λ ∖ Q₀ at (θ*, E*) and the corners
    // of the admissible (θ, E) window
    progress("0-good Green bounds");
    let q0: Vec<Site> = state.stages[0].singular.iter().filter_map(Center::to_site).collect();
    let good = ctx.ambient.filter(|x| !q0.contains(x));
    let dt = 0.99 * delta0 / (10.0 * ctx.potential.m1);
    let de = 0.99 * delta0 / 5.0;
    let corners = [(0.0, 0.0), (dt, de), (dt, -de), (-dt, de), (-dt, -de)];
    let comps = good.components();
    let entries: Vec<GreenEntry> = comps
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, comp)| {
            corners.iter().map(move |&(a, b)| {
                let op = env.slice(comp, ctx.theta_star + a, ctx.epsilon)?;
                Ok(GreenEntry {
                    component: k,
                    theta_offset: a,
                    energy_offset: b,
                    report: check_zero_good_bounds(&op, ctx.e_star + b, delta0)?,
                })
            })
        })
        .collect::<qpmsa::Result<_>>()?;
    let failing = entries.iter().filter(|e| !e.report.passed()).count();
    summary.check(
        "msa: 0-good Green bounds",
        failing == 0,
        format!("{} components × {} (θ, E) points, {failing} failing", comps.len(), corners.len()),
    );
    let mut green = out.read_json("green_reports.json");
    green["zero_good"] = serde_json::to_value(&entries)?;
    out.write_json("green_reports.json", &green)?;

    // localization of the eigenvectors nearest E*
    progress("eigenvector decay");
    let op = env.slice(&ctx.ambient, ctx.theta_star, ctx.epsilon)?;
    let (vals, vecs) = eigh(&op.matrix);
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| (vals[a] - ctx.e_star).abs().total_cmp(&(vals[b] - ctx.e_star).abs()));
    idx.truncate(20);
    let psis: Vec<DVector<f64>> = idx
        .par_iter()
        .map(|&k| refine_eigenvector(&op.matrix, vals[k], &vecs.column(k).into_owned()))
        .collect();
    // inverse iteration resolves the tails entrywise only for banded (d = 1) matrices
    let floor = if cfg.model.dim == 1 { DECAY_FLOOR } else { 1e-12 };
    let mut rates: Vec<f64> = psis
        .iter()
        .map(|p| decay_fit_above(p, &ctx.ambient, floor).map(|f| f.rate))
        .collect::<qpmsa::Result<_>>()?;
    rates.sort_by(f64::total_cmp);
    let median = if rates.is_empty() {
        f64::NAN
    } else if rates.len() % 2 == 1 {
        rates[rates.len() / 2]
    } else {
        0.5 * (rates[rates.len() / 2 - 1] + rates[rates.len() / 2])
    };
    let need = gamma0(ctx.epsilon) / 2.0;
    summary.check(
        "msa: eigenvector decay",
        median >= need,
        format!("median rate {median:.3} over {} eigenvectors, tails cut at {floor:.0e} (need ≥ {need:.3})", rates.len()),
    );
    if let Some(p) = psis.first() {
        out.write_csv("decay.csv", &decay_profile(p, &ctx.ambient))?;
    }

    out.write_json(
        "msa_trace.json",
        &json!({
            "e_star": ctx.e_star,
            "pipeline_error": pipeline_error,
            "stages": state.stages,
            "center_theorem": reports,
            "decay_rates": rates,
        }),
    )?;
    Ok(pipeline_error.is_none().then_some(MsaRun { ctx, state }))
}

// ------------------------------------------------------------ curve

fn curve_experiment(env: &Env, run: &MsaRun, out: &mut Output, summary: &mut Summary) -> Result<(), CliError> {
    let c = &env.cfg.curve;
    let MsaRun { ctx, state } = run;
    let Some(data) = state.stages.get(c.stage) else {
        summary.check("curve: block", false, format!("the run stopped before stage {}", c.stage));
        return Ok(());
    };
    let Some(block) = data.family.as_ref().and_then(|f| {
        f.blocks.iter().find(|b| data.singular.contains(&b.center)).or(f.blocks.first())
    }) else {
        summary.check("curve: block", false, format!("stage {} has no blocks", c.stage));
        return Ok(());
    };
    progress(format!("tracing eigenvalue curves of the stage-{} block at {:?}", c.stage, block.center.coords()));
    let fam = QpFamily::new(block.sites.clone(), ctx.epsilon, ctx.potential.clone(), ctx.omega.clone())?;
    let theta_s = -block.center.dot(ctx.omega.as_slice());
    let window = (ctx.e_star - c.window, ctx.e_star + c.window);
    let policy = TracePolicy {
        base_points: c.base_points,
        symmetry_point: Some(theta_s),
        ..TracePolicy::default()
    };
    let trace = match trace_branches(&fam, (theta_s - c.half_width, theta_s + c.half_width), window, &policy) {
        Ok(t) => t,
        Err(e) => {
            summary.check("curve: trace", false, e.to_string());
            return Ok(());
        }
    };
    summary.check(
        "curve: trace",
        !trace.branches.is_empty(),
        format!(
            "{} branch(es) over θ_s ± {}, {} samples, isolation gap {:.3e}",
            trace.branches.len(),
            c.half_width,
            trace.branches.first().map_or(0, |b| b.samples.len()),
            trace.isolation_gap
        ),
    );
    let rows = branch_rows(&fam, &trace.branches, c.fd_step);
    out.write_csv("branches.csv", &rows)?;

    // slopes are compared away from any crossing, where the FD stencil is smooth
    let crossing = trace.branches.first().and_then(|b| b.crossing);
    let exclusion = c.half_width / 20.0;
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for r in &rows {
        if crossing.is_some_and(|x| (r.theta - x.theta).abs() < exclusion) {
            continue;
        }
        if let Some(f) = r.de_formula {
            compared += 1;
            worst = worst.max((f - r.de_fd).abs() / f.abs().max(1.0));
        }
    }
    summary.check("curve: formula slopes match finite differences", worst <= 1e-5, format!("{compared} samples, worst relative error {worst:.2e}"));

    let delta_prev = state.stages[c.stage - 1].delta;
    if trace.branches.len() == 2 {
        if let Some(x) = crossing {
            summary.check(
                "curve: crossing sits at θ_s",
                (x.theta - theta_s).abs() < 1e-9,
                format!("{:?} crossing at θ_s {:+.2e}", x.kind, x.theta - theta_s),
            );
        }
        let ts: Vec<f64> = (1..20).map(|k| c.half_width * k as f64 / 20.0).collect();
        let defect = union_symmetry_defect(&fam, theta_s, window, &ts)?;
        summary.check("curve: union of curves symmetric about θ_s", defect < 1e-8, format!("defect {defect:.2e}"));
        let sep = check_separation_growth(&trace.branches[0], &trace.branches[1], theta_s, delta_prev)?;
        summary.check(
            "curve: separation grows away from θ_s",
            sep.passed(),
            format!("{} samples, {} violations, worst ratio {:.3e}", sep.samples, sep.violations, sep.worst_ratio),
        );
        let mut bad = 0;
        for b in &trace.branches {
            bad += slope_lower_bound_violations(&fam, b, theta_s, delta_prev)?;
        }
        summary.check("curve: slope lower bound", bad == 0, format!("{bad} samples below min(δ², |θ − θ_s|)"));
    } else if let Some(b) = trace.branches.first() {
        let morse = check_morse_property(&b.thetas(), &b.energies(), theta_s, delta_prev)?;
        summary.check(
            "curve: Morse property",
            morse.status != CheckStatus::Failed,
            format!("{:?}, {} pairs checked", morse.status, morse.pairs_checked),
        );
    }
    Ok(())
}

// ------------------------------------------------------------ ids

#[derive(Serialize)]
struct IdsRow {
    eta: f64,
    increment: f64,
    count: usize,
}

fn ids_experiment(env: &Env, out: &mut Output, summary: &mut Summary) -> Result<(), CliError> {
    let cfg = &env.cfg;
    let i = &cfg.ids;
    let side = cfg.ids_side();
    let eps = i.epsilon.unwrap_or(cfg.model.epsilon);
    let thetas = if i.thetas.is_empty() { vec![cfg.target.theta_star] } else { i.thetas.clone() };
    let region = cfg.region(side);
    progress(format!("IDS scan on {} sites at {} phase(s)", region.len(), thetas.len()));
    let spectra: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|&t| env.slice(&region, t, eps).map(|op| eigvalsh(&op.matrix)))
        .collect::<qpmsa::Result<_>>()?;
    // the reference energy is taken on the scan's own box and coupling
    let e_star = match cfg.target.e_star {
        Some(e) => e,
        None => {
            let vals = &spectra[0];
            vals[nearest_index(vals, env.potential.eval(TorusPhase::new(thetas[0]).value())).expect("nonempty box")]
        }
    };
    // pooling the spectra averages the counting function over the phases
    let mut pooled: Vec<f64> = spectra.concat();
    pooled.sort_by(f64::total_cmp);
    let etas = log_spaced(i.eta_max, i.eta_min, i.points);
    let rep = ids_from_spectrum(&pooled, pooled.len(), cfg.model.dim, thetas[0], e_star, &etas);
    let rows: Vec<IdsRow> = rep
        .etas
        .iter()
        .zip(&rep.increments)
        .zip(&rep.counts)
        .map(|((&eta, &increment), &count)| IdsRow { eta, increment, count })
        .collect();
    out.write_csv("ids.csv", &rows)?;
    let monotone = rep.increments.windows(2).all(|p| p[0] >= p[1]);
    summary.check("ids: increments monotone in η", monotone, format!("{} windows", rep.etas.len()));
    summary.check(
        "ids: Hölder slope",
        rep.fit_points >= 2 && rep.slope >= i.min_slope,
        format!(
            "slope {:.3} from {} windows with ≥ {MIN_WINDOW_COUNT} eigenvalues at E* = {e_star:.6} (need ≥ {}); log-corrected residual {:.3}",
            rep.slope, rep.fit_points, i.min_slope, rep.log_corrected_residual
        ),
    );
    Ok(())
}

// ------------------------------------------------------------ moments

#[derive(Serialize)]
struct MomentRow {
    t: f64,
    moment: f64,
    unitarity_defect: f64,
}

fn moments_experiment(env: &Env, out: &mut Output, summary: &mut Summary) -> Result<(), CliError> {
    let m = &env.cfg.moments;
    progress(format!("moments at θ = {}", m.theta));
    let member = arithmetic_set_membership(m.theta, env.omega.as_slice(), m.arithmetic_a, m.exponent, m.membership_radius)?;
    summary.check(
        "moments: θ in the arithmetic set",
        member.member,
        format!(
            "min ‖2θ + x·ω‖·‖x‖^{} = {:.4} against A = {} to radius {}",
            m.exponent, member.worst_scaled, m.arithmetic_a, m.membership_radius
        ),
    );
    let region = env.cfg.region(m.side);
    let op = env.slice(&region, m.theta, env.cfg.model.epsilon)?;
    let mut rep = moment_sum(&op, m.q, &default_time_grid())?;
    rep.arithmetic_a = Some(m.arithmetic_a);
    let rows: Vec<MomentRow> = rep
        .ts
        .iter()
        .zip(&rep.moments)
        .zip(&rep.unitarity_defects)
        .map(|((&t, &moment), &unitarity_defect)| MomentRow { t, moment, unitarity_defect })
        .collect();
    out.write_csv("moments.csv", &rows)?;
    summary.check(
        "moments: proxy dominates every sampled time",
        rep.proxy_dominates(),
        format!("proxy {:.6}, sampled sup {:.6} over {} times", rep.proxy, rep.sup_sampled, rep.ts.len()),
    );
    let defect = rep.max_unitarity_defect();
    summary.check("moments: unitarity", defect <= 1e-8, format!("max defect {defect:.1e}"));
    Ok(())
}

// ------------------------------------------------------------ sweeps

#[derive(Serialize)]
struct CountingInstance {
    sites: usize,
    epsilon: f64,
    theta: f64,
    e_star: f64,
    report: CountingReport,
}

#[derive(Serialize)]
struct TrialInstance {
    m: usize,
    e_star: f64,
    report: TrialReport,
}

/// Instance k draws from its own stream, so results do not depend on the
/// number of workers or the order of completion.
fn instance_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

fn counting_instance(env: &Env, seed: u64, k: u64) -> qpmsa::Result<CountingInstance> {
    let mut r = instance_rng(seed, k);
    let n = r.gen_range(20..=80i64);
    let region = LatticeRegion::cuboid(&[0], &[n - 1]);
    let epsilon = 10f64.powf(r.gen_range(-4.0..-1.0));
    let theta: f64 = r.gen();
    let e_star = r.gen_range(-1.0..1.0);
    let w = FrequencyVector::golden();
    let op = assemble(&region, TorusPhase::new(theta), epsilon, &env.potential, &w)?;
    // Λ′ drops the sites resonant with E*
    let cut = r.gen_range(0.0..0.2);
    let mut prime = region.filter(|x| (env.potential.eval(TorusPhase::new(theta + x.dot(w.as_slice())).value()) - e_star).abs() > cut);
    if prime.is_empty() {
        prime = LatticeRegion::from_sites(1, vec![Site::new(vec![-50])])?;
    }
    let pr = assemble(&prime, op.theta, epsilon, &env.potential, &w)?;
    let eta = r.gen_range(0.05..1.0) * spectral_distance(&eigvalsh(&pr.matrix), e_star) / 2.0;
    Ok(CountingInstance {
        sites: region.len(),
        epsilon,
        theta,
        e_star,
        report: check_counting_lemma(&op, &prime, e_star, eta)?,
    })
}

fn trial_instance(seed: u64, k: u64) -> qpmsa::Result<TrialInstance> {
    let mut r = instance_rng(seed, k);
    let n = 20;
    let a = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
    let h = (&a + a.transpose()) * 0.5;
    let m = r.gen_range(1..=3);
    let e_star = r.gen_range(-2.0..2.0);
    let (vals, vecs) = eigh(&h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| (vals[i] - e_star).abs().total_cmp(&(vals[j] - e_star).abs()));
    let noise = 10f64.powf(r.gen_range(-6.0..-1.0));
    let raw: Vec<DVector<f64>> = idx[..m]
        .iter()
        .map(|&i| vecs.column(i).into_owned() + DVector::from_fn(n, |_, _| noise * r.gen_range(-1.0..1.0)))
        .collect();
    let q = DMatrix::from_columns(&raw).qr().q();
    let ts: Vec<DVector<f64>> = (0..m).map(|i| q.column(i).into_owned()).collect();
    let delta = ts.iter().map(|t| (&h * t - t * e_star).norm()).fold(0.0, f64::max);
    Ok(TrialInstance {
        m,
        e_star,
        report: check_trial_function_lemma(&h, &ts, e_star, delta)?,
    })
}

fn sweep_experiment(env: &Env, out: &mut Output, summary: &mut Summary) -> Result<(), CliError> {
    let s = &env.cfg.sweep;
    let seed = env.cfg.seed;
    progress(format!("randomized sweeps: {} counting, {} trial-function instances", s.counting, s.trials));
    let counting: Vec<CountingInstance> = (0..s.counting as u64)
        .into_par_iter()
        .map(|k| counting_instance(env, seed, k))
        .collect::<qpmsa::Result<_>>()?;
    // trial instances use the upper half of the stream space
    let trials: Vec<TrialInstance> = (0..s.trials as u64)
        .into_par_iter()
        .map(|k| trial_instance(seed, (1 << 32) + k))
        .collect::<qpmsa::Result<_>>()?;
    let tally = |it: &mut dyn Iterator<Item = CheckStatus>| {
        it.fold((0, 0), |(f, i), st| match st {
            CheckStatus::Failed => (f + 1, i),
            CheckStatus::Inapplicable => (f, i + 1),
            CheckStatus::Passed => (f, i),
        })
    };
    let (cf, ci) = tally(&mut counting.iter().map(|c| c.report.status));
    let (tf, ti) = tally(&mut trials.iter().map(|t| t.report.status));
    summary.check(
        "sweep: counting lemma",
        cf == 0,
        format!("{} instances, {cf} violations, {ci} with failed preconditions", counting.len()),
    );
    summary.check(
        "sweep: trial-function lemma",
        tf == 0,
        format!("{} instances, {tf} violations, {ti} with failed preconditions", trials.len()),
    );
    out.write_json("sweeps.json", &json!({ "seed": seed, "counting": counting, "trials": trials }))?;
    Ok(())
}
