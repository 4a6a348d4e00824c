use std::collections::BTreeSet;
use std::path::Path;

use serde_json::json;
use stratbundle::bundle::{
    apply_functor_to_bundle, validate_bundle, whitney_a_check, whitney_a_from_sections,
    ConvergenceScenario, SampledStratifiedBundle, Section,
};
use stratbundle::config::Tolerances;
use stratbundle::equivariant::{
    build_tilde_e, equivariance_gap, quotient_bundle, rank_constancy, FiniteGroupAction,
};
use stratbundle::foliation::{foliation_bundle, generating_sections, stratify_by_rank, VectorFieldSet};
use stratbundle::functors::LinearFunctor;
use stratbundle::grassmann::Subspace;
use stratbundle::monoid::{
    audit_axioms, reconstruct_bundle, regularity_check, MonoidActionSample, Regularity,
};
use stratbundle::report::Verdict;
use stratbundle::strata::{check_frontier, local_finiteness_report, Stratification};
use stratbundle::error::Error;

use crate::args::*;
use crate::io::{load, load_many, parse, write_json, CliResult, InputError};
use crate::report::{Check, Report};

pub fn run(cmd: &Command, tol: Tolerances) -> CliResult<Report> {
    tol.validate()?;
    let mut r = Report::new(cmd.name(), tol);
    match cmd {
        Command::Check(CheckCmd::Frontier(a)) => frontier(a, &mut r)?,
        Command::Check(CheckCmd::WhitneyA(a)) => whitney(a, &mut r)?,
        Command::Check(CheckCmd::Orthogonality(a)) => orthogonality(a, &mut r)?,
        Command::Check(CheckCmd::Bundle(a)) => bundle(a, &mut r)?,
        Command::ApplyFunctor(a) => apply_functor(a, &mut r)?,
        Command::Monoid(MonoidCmd::Analyze(a)) => monoid(a, &mut r)?,
        Command::Equivariant(EquivariantCmd::Tilde(a)) => equivariant(a, false, &mut r)?,
        Command::Equivariant(EquivariantCmd::Quotient(a)) => equivariant(a, true, &mut r)?,
        Command::Foliation(FoliationCmd::Stratify(a)) => foliation(a, false, &mut r)?,
        Command::Foliation(FoliationCmd::Bundle(a)) => foliation(a, true, &mut r)?,
        Command::Fixtures(a) => crate::corpus::write(&a.dir, &mut r)?,
    }
    Ok(r)
}

fn input(r: &mut Report, key: &str, path: &Path) {
    r.inputs.insert(key.into(), path.display().to_string());
}

fn output(r: &mut Report, key: &str, path: &Path) {
    r.outputs.insert(key.into(), path.display().to_string());
}

fn load_bundle(r: &mut Report, path: &Path) -> CliResult<SampledStratifiedBundle> {
    input(r, "bundle", path);
    load(path, "bundle")
}

/// A shorthand string, inline JSON, or a path to a `.json` file.
fn functor(r: &mut Report, arg: &str) -> CliResult<LinearFunctor> {
    r.inputs.insert("functor".into(), arg.into());
    if arg.ends_with(".json") {
        load(Path::new(arg), "functor")
    } else if arg.trim_start().starts_with('{') {
        parse(arg, "functor").map_err(|e| InputError(format!("--functor:{e}")))
    } else {
        arg.parse()
            .map_err(|e: Error| InputError(format!("--functor: {e}")))
    }
}

fn rank_summary(b: &SampledStratifiedBundle) -> String {
    let parts: Vec<String> = b.ranks().iter().map(|(n, k)| format!("{n}:{k}")).collect();
    format!("ranks {}", parts.join(" "))
}

fn frontier(a: &FrontierArgs, r: &mut Report) -> CliResult<()> {
    input(r, "strata", &a.strata);
    let s: Stratification = load(&a.strata, "stratification")?;
    let eps = r.config.eps_touch.unwrap_or_else(|| s.default_frontier_radius());
    let delta = r.config.delta_cover.unwrap_or_else(|| s.default_frontier_radius());
    r.config.eps_touch = Some(eps);
    r.config.delta_cover = Some(delta);
    let fr = check_frontier(&s, eps, delta);
    let summary = format!(
        "{} strata, {} touching pairs, {} violations",
        s.strata().len(),
        fr.touching.len(),
        fr.violations.len()
    );
    r.push(Check::new("frontier", Verdict::from_pass(fr.pass), summary, &fr));
    if let Some(radius) = a.local_finiteness {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(InputError(format!("--local-finiteness must be positive, got {radius}")));
        }
        let lf = local_finiteness_report(&s, radius, a.threshold);
        let summary = format!(
            "at most {} strata per ball, {} points flagged",
            lf.max_count,
            lf.flagged.len()
        );
        r.push(Check::new("local-finiteness", Verdict::from_pass(lf.pass), summary, &lf));
    }
    Ok(())
}

fn auto_scenarios(
    base: &Stratification,
    auto: AutoSequence,
    target: Option<&str>,
    source: Option<&str>,
) -> CliResult<Vec<ConvergenceScenario>> {
    let mut out = Vec::new();
    for (s, rr) in base.closure_order() {
        if target.is_some_and(|t| t != s) || source.is_some_and(|t| t != rr) {
            continue;
        }
        let lower = base.stratum(s).expect("declared strata exist");
        if auto.x0 >= lower.points.len() {
            continue;
        }
        out.push(ConvergenceScenario::radial(base, s, auto.x0, rr, auto.count)?);
    }
    if out.is_empty() {
        return Err(InputError(
            "--auto-sequence matched no declared closure pair with that x0 index".into(),
        ));
    }
    Ok(out)
}

fn whitney(a: &WhitneyArgs, r: &mut Report) -> CliResult<()> {
    let b = load_bundle(r, &a.bundle)?;
    let mut scenarios = Vec::new();
    for (i, p) in a.scenario.iter().enumerate() {
        input(r, &format!("scenario.{i}"), p);
        scenarios.extend(load_many::<ConvergenceScenario>(p, "scenario")?);
    }
    if let Some(auto) = a.auto_sequence {
        r.inputs
            .insert("auto_sequence".into(), format!("radial:{},{}", auto.x0, auto.count));
        scenarios.extend(auto_scenarios(b.base(), auto, a.target.as_deref(), a.source.as_deref())?);
    }
    if scenarios.is_empty() {
        return Err(InputError("no scenarios: give --scenario or --auto-sequence".into()));
    }
    let sections = match &a.sections {
        Some(p) => {
            input(r, "sections", p);
            Some(load_many::<Section>(p, "sections")?)
        }
        None => None,
    };
    let (tol, tail) = (r.config.tol_check, r.config.tail_len);
    for (i, sc) in scenarios.iter().enumerate() {
        let rep = match &sections {
            Some(secs) => whitney_a_from_sections(&b, secs, sc, tol, tail),
            None => whitney_a_check(&b, sc, tol, tail),
        }
        .map_err(|e| InputError(format!("scenario {i}: {e}")))?;
        let summary = match rep.residual {
            Some(res) => format!("residual {res:.3e}, tail gap {:.3e}", rep.tail_gap),
            None => format!("fibers do not settle, tail gap {:.3e}", rep.tail_gap),
        };
        let name = format!("whitney-a {} < {} at x0={}", sc.target, sc.source, sc.x0_index);
        r.push(Check::new(name, rep.verdict, summary, json!({ "scenario": sc, "result": rep })));
    }
    Ok(())
}

fn orthogonality(a: &OrthogonalityArgs, r: &mut Report) -> CliResult<()> {
    let f = functor(r, &a.functor)?;
    let labelled: Vec<(String, Subspace)> = if let Some(p) = &a.subspace {
        input(r, "subspace", p);
        load_many::<Subspace>(p, "subspace")?
            .into_iter()
            .enumerate()
            .map(|(i, w)| (format!("#{i}"), w))
            .collect()
    } else {
        let p = a.bundle.as_ref().expect("clap requires --subspace or --bundle");
        let b = load_bundle(r, p)?;
        b.base()
            .strata()
            .iter()
            .zip(b.fibers())
            .flat_map(|(st, fs)| {
                fs.iter()
                    .enumerate()
                    .map(move |(i, w)| (format!("{}#{i}", st.name), w.clone()))
            })
            .collect()
    };
    let tol = r.config.tol_check;
    let mut max_residual = 0.0f64;
    let mut failures = Vec::new();
    for (label, w) in &labelled {
        let c = f.check_orthogonality(w, tol);
        max_residual = max_residual.max(c.residual);
        if !c.holds {
            failures.push(json!({ "subspace": label, "residual": c.residual }));
        }
    }
    let summary = format!("{} on {} subspaces, max residual {max_residual:.3e}", f, labelled.len());
    let details = json!({
        "functor": f.to_string(),
        "checked": labelled.len(),
        "max_residual": max_residual,
        "failures": failures,
    });
    r.push(Check::new("orthogonality", Verdict::from_pass(failures.is_empty()), summary, details));
    Ok(())
}

fn bundle_check(name: &str, b: &SampledStratifiedBundle, tol: f64) -> Check {
    let rep = validate_bundle(b, tol);
    let summary = format!(
        "{} fibers, {} violations, {}",
        rep.fibers_checked,
        rep.violations.len(),
        rank_summary(b)
    );
    let details = json!({
        "fiber_ambient": b.fiber_ambient(),
        "ranks": b.ranks(),
        "result": rep,
    });
    Check::new(name, rep.verdict, summary, details)
}

fn bundle(a: &BundleArgs, r: &mut Report) -> CliResult<()> {
    let b = load_bundle(r, &a.bundle)?;
    r.push(bundle_check("bundle", &b, r.config.tol_check));
    Ok(())
}

fn apply_functor(a: &ApplyFunctorArgs, r: &mut Report) -> CliResult<()> {
    let f = functor(r, &a.functor)?;
    let b = load_bundle(r, &a.bundle)?;
    let tol = r.config.tol_check;
    let check = bundle_check("input-bundle", &b, tol);
    let ok = check.verdict.is_pass();
    r.push(check);
    if !ok {
        return Ok(());
    }
    let out = apply_functor_to_bundle(&f, &b, tol)?;
    r.push(bundle_check("output-bundle", &out, tol));
    if let Some(p) = &a.out {
        write_json(p, &out)?;
        output(r, "bundle", p);
    }
    Ok(())
}

fn monoid(a: &MonoidArgs, r: &mut Report) -> CliResult<()> {
    input(r, "action", &a.action);
    let act: MonoidActionSample = load(&a.action, "action")?;
    let (tol, step) = (r.config.tol_check, r.config.step);
    let ax = audit_axioms(&act, tol)?;
    let summary = format!("max residual {:.3e}, {} violations", ax.max_residual, ax.violations.len());
    r.push(Check::new("axioms", ax.verdict, summary, &ax));

    let reg = regularity_check(&act, tol, step)?;
    let summary = match reg.classification {
        Regularity::Regular => format!("REGULAR on {} samples", reg.points.len()),
        Regularity::NotRegular => format!("NOT_REGULAR at samples {:?}", reg.violations),
    };
    let regular = reg.classification == Regularity::Regular;
    r.push(Check::new("regularity", reg.verdict, summary, &reg));
    if !regular {
        return Ok(());
    }

    let base: Option<Vec<Vec<f64>>> = match &a.base_samples {
        Some(p) => {
            input(r, "base_samples", p);
            Some(load(p, "base samples")?)
        }
        None => None,
    };
    let rec = reconstruct_bundle(&act, base.as_deref(), tol, step, r.config.cluster_radius)?;
    let ranks: BTreeSet<usize> = rec.clusters.iter().map(|c| c.rank).collect();
    let summary = format!("{} base points, fiber ranks {:?}", rec.clusters.len(), ranks);
    let clusters: Vec<_> = rec
        .clusters
        .iter()
        .map(|c| json!({ "base_point": c.base_point, "members": c.members.len(), "rank": c.rank }))
        .collect();
    r.push(Check::new("reconstruction", Verdict::Pass, summary, json!({ "clusters": clusters })));
    if let Some(p) = &a.out {
        write_json(p, &rec)?;
        output(r, "reconstruction", p);
    }
    Ok(())
}

fn equivariant(a: &EquivariantArgs, quotient: bool, r: &mut Report) -> CliResult<()> {
    input(r, "group", &a.group);
    let g: FiniteGroupAction = load(&a.group, "group")?;
    if g.fiber_elements().is_none() {
        return Err(InputError(format!(
            "{}: the group needs fiber_elements to act on a bundle",
            a.group.display()
        )));
    }
    let b = load_bundle(r, &a.bundle)?;
    let tol = r.config.tol_check;
    match equivariance_gap(&g, &b, tol) {
        Ok(gap) => r.push(Check::new(
            "equivariance",
            Verdict::Pass,
            format!("{} elements, max gap {gap:.3e}", g.order()),
            json!({ "max_gap": gap }),
        )),
        Err(e @ (Error::NotEquivariant { .. } | Error::NotOrbitSaturated { .. })) => {
            r.push(Check::new("equivariance", Verdict::Fail, e.to_string(), json!({ "error": e.to_string() })));
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    }
    let tilde = match build_tilde_e(&g, &b, tol) {
        Ok(t) => t,
        Err(e @ Error::RankNotConstant { .. }) => {
            r.push(Check::new("tilde-rank", Verdict::Fail, e.to_string(), json!({ "error": e.to_string() })));
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    r.push(Check::new(
        "tilde-rank",
        rank_constancy(&tilde),
        format!("{} strata, {}", tilde.base().strata().len(), rank_summary(&tilde)),
        json!({ "ranks": tilde.ranks() }),
    ));
    let result = if quotient {
        let q = match quotient_bundle(&g, &tilde, tol) {
            Ok(q) => q,
            Err(e @ Error::OrbitFiberMismatch { .. }) => {
                r.push(Check::new("quotient", Verdict::Fail, e.to_string(), json!({ "error": e.to_string() })));
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        r.push(bundle_check("quotient", &q, tol));
        q
    } else {
        tilde
    };
    if let Some(p) = &a.out {
        write_json(p, &result)?;
        output(r, "bundle", p);
    }
    Ok(())
}

fn foliation(a: &FoliationArgs, with_bundle: bool, r: &mut Report) -> CliResult<()> {
    input(r, "fields", &a.fields);
    let vfs: VectorFieldSet = load(&a.fields, "vector fields")?;
    let r_cc = r.config.require_r_cc()?;
    let tol_rank = r.config.tol_rank;
    if !with_bundle {
        if a.whitney.is_some() {
            return Err(InputError("--whitney applies to `foliation bundle` only".into()));
        }
        let rs = stratify_by_rank(&vfs, r_cc, tol_rank)?;
        let summary = format!("{} strata, {} frontier violations", rs.ranks.len(), rs.frontier.violations.len());
        let details = json!({ "ranks": rs.ranks, "frontier": rs.frontier });
        r.push(Check::new("frontier", Verdict::from_pass(rs.frontier.pass), summary, details));
        if let Some(p) = &a.out {
            write_json(p, &rs.stratification)?;
            output(r, "stratification", p);
        }
        return Ok(());
    }
    let fb = foliation_bundle(&vfs, r_cc, tol_rank)?;
    let tol = r.config.tol_check;
    r.push(bundle_check("bundle", &fb.bundle, tol));
    let summary = format!("{} frontier violations", fb.frontier.violations.len());
    r.push(Check::new("frontier", Verdict::from_pass(fb.frontier.pass), summary, &fb.frontier));
    if let Some(count) = a.whitney {
        let base = fb.bundle.base();
        let sections = generating_sections(&vfs, base)?;
        for (i, sc) in ConvergenceScenario::declared(base, count)?.iter().enumerate() {
            let rep = whitney_a_from_sections(&fb.bundle, &sections, sc, tol, r.config.tail_len)
                .map_err(|e| InputError(format!("declared scenario {i}: {e}")))?;
            let summary = match rep.residual {
                Some(res) => format!("residual {res:.3e}"),
                None => "fibers do not settle".into(),
            };
            let name = format!("whitney-a {} < {} at x0={}", sc.target, sc.source, sc.x0_index);
            r.push(Check::new(name, rep.verdict, summary, json!({ "scenario": sc, "result": rep })));
        }
    }
    if let Some(p) = &a.out {
        write_json(p, &fb.bundle)?;
        output(r, "bundle", p);
    }
    Ok(())
}
