use std::path::Path;

use anyhow::{bail, Context, Result};
use pfraisse::class::{check_hp, check_jsp, check_pap_within, class_report};
use pfraisse::epi::{
    automorphism_group, common_refinement, enumerate_epimorphisms, find_isomorphism, induced_structure,
};
use pfraisse::error::FormatError;
use pfraisse::format::serialize_structure;
use pfraisse::io::{
    load_class, load_group, load_map, load_structure, read_bundle, read_text, write_bundle, write_text,
};
use pfraisse::limit::{
    back_and_forth, build_age_chain, build_generic_sequence, certify_extension, system_report, InverseSystem,
};
use pfraisse::model::{FiniteStructure, Interpretation, SurjectiveMap};
use pfraisse::prespace::{
    build_cantor_system, build_interval_system, check_prespace, limit_quotient_report, quotient_by_r, Geometry,
};
use pfraisse::report::{index_key, Report};
use pfraisse::transforms::{
    dualize, orbit_report, orbit_structure, verify_dualization, verify_orbit_homogeneity, verify_orbit_structure,
};
use pfraisse::{parse_structure, SymbolKind};

use crate::{Cli, Command, Outcome};

fn ok(report: Report) -> Result<Outcome> {
    Ok(Outcome { report, code: 0 })
}

fn verdict(report: Report, holds: bool) -> Result<Outcome> {
    Ok(Outcome { report, code: if holds { 0 } else { 1 } })
}

/// Domain size and every tuple, one line each, under `prefix`.
fn describe(r: &mut Report, prefix: &str, s: &FiniteStructure) {
    r.set(format!("{prefix}.domain"), s.size());
    let decls: Vec<String> = s
        .signature()
        .symbols()
        .iter()
        .map(|d| format!("{} {} {}", if d.kind == SymbolKind::Direct { "direct" } else { "dual" }, d.name, d.arity))
        .collect();
    r.set(format!("{prefix}.signature"), decls.join(", "));
    for (decl, interp) in s.signature().symbols().iter().zip(s.interpretations()) {
        let tuples: Vec<String> = match interp {
            Interpretation::Direct(set) => set.iter().map(|t| join(&t.0)).collect(),
            Interpretation::Dual(set) => set.iter().map(|t| join(&t.0)).collect(),
        };
        r.set(format!("{prefix}.{}.count", decl.name), tuples.len());
        for (i, t) in tuples.iter().enumerate() {
            r.set(format!("{prefix}.{}.{}", decl.name, index_key(i, tuples.len())), t);
        }
    }
}

fn join(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn list_maps(r: &mut Report, prefix: &str, maps: &[SurjectiveMap]) {
    r.set(format!("{prefix}.count"), maps.len());
    for (i, m) in maps.iter().enumerate() {
        r.set_map(format!("{prefix}.{}", index_key(i, maps.len())), m);
    }
}

/// Writes `name` under the output directory, when there is one.
fn emit(cli: &Cli, name: &str, text: &str) -> Result<()> {
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).with_context(|| format!("{}", dir.display()))?;
        write_text(&dir.join(name), text)?;
    }
    Ok(())
}

fn emit_bundle(cli: &Cli, sys: &InverseSystem) -> Result<()> {
    if let Some(dir) = &cli.out {
        write_bundle(dir, sys)?;
    }
    Ok(())
}

fn load_system(dir: &Path) -> Result<InverseSystem> {
    Ok(read_bundle(dir)?)
}

pub(crate) fn run(cli: &Cli) -> Result<Outcome> {
    let outcome = dispatch(cli)?;
    emit(cli, "report.txt", &outcome.report.to_string())?;
    Ok(outcome)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Epis { a, b } => {
            let (a, b) = (load_structure(a)?, load_structure(b)?);
            let maps = enumerate_epimorphisms(&a, &b)?;
            let mut r = Report::new();
            list_maps(&mut r, "epimorphisms", &maps);
            ok(r)
        }
        Command::Induce { structure, map } => {
            let k = load_structure(structure)?;
            let f = load_map(map, None)?;
            let induced = induced_structure(&k, &f).with_context(|| format!("{}", map.display()))?;
            emit(cli, "induced.struct", &serialize_structure(&induced))?;
            let mut r = Report::new();
            describe(&mut r, "induced", &induced);
            ok(r)
        }
        Command::Refine { k, a, b, f, g } => {
            let (k, a, b) = (load_structure(k)?, load_structure(a)?, load_structure(b)?);
            let (fm, gm) = (load_map(f, Some(a.size()))?, load_map(g, Some(b.size()))?);
            let rf = common_refinement(&k, &a, &b, &fm, &gm)?;
            emit(cli, "refined.struct", &serialize_structure(&rf.refined))?;
            let mut r = Report::new();
            describe(&mut r, "refined", &rf.refined);
            let blocks: Vec<String> = rf.blocks.iter().map(|(x, y)| format!("{x}:{y}")).collect();
            r.set("blocks", blocks.join(" "));
            r.set_map("h", &rf.h).set_map("factor_f", &rf.factor_f).set_map("factor_g", &rf.factor_g);
            let exact = rf.h.then(&rf.factor_f) == fm && rf.h.then(&rf.factor_g) == gm;
            r.set("factors_exact", exact);
            verdict(r, exact)
        }
        Command::Iso { a, b } => {
            let (a, b) = (load_structure(a)?, load_structure(b)?);
            let mut r = Report::new();
            let iso = find_isomorphism(&a, &b)?;
            r.set("isomorphic", iso.is_some());
            if let Some(m) = &iso {
                r.set_map("isomorphism", m);
            }
            verdict(r, iso.is_some())
        }
        Command::Aut { structure } => {
            let s = load_structure(structure)?;
            let mut r = Report::new();
            list_maps(&mut r, "automorphisms", &automorphism_group(&s));
            ok(r)
        }
        Command::CheckClass { class, instance_bound } => {
            let cls = load_class(class, cli.canon_bound)?;
            let bound = instance_bound.unwrap_or(cls.max_size());
            let reports = [check_hp(&cls), check_jsp(&cls), check_pap_within(&cls, bound)];
            let mut r = class_report(&cls, &reports);
            r.set("PAP.instance_bound", bound);
            let code = if !reports[0].holds {
                1
            } else if reports.iter().any(|x| !x.holds) {
                3
            } else {
                0
            };
            Ok(Outcome { report: r, code })
        }
        Command::BuildLimit { class, depth, task_bound, seed, age_chain } => {
            let cls = load_class(class, cli.canon_bound)?;
            let sys = if *age_chain {
                build_age_chain(&cls, *depth)
            } else {
                build_generic_sequence(&cls, *depth, *task_bound, *seed)
            }
            .with_context(|| format!("{}", class.display()))?;
            emit_bundle(cli, &sys)?;
            let mut r = system_report(&sys);
            r.set("construction", if *age_chain { "age_chain" } else { "generic" });
            if !age_chain {
                r.set("seed", seed).set("task_bound", task_bound);
            }
            ok(r)
        }
        Command::Certify { bundle, class, task_bound, strict } => {
            let sys = load_system(bundle)?;
            let cls = load_class(class, cli.canon_bound)?;
            let cert = certify_extension(&sys, &cls, *task_bound);
            let recheck = cert.recheck(&sys, &cls);
            let mut r = cert.to_report();
            r.set("recheck", recheck);
            let mut holds = recheck && cert.logged_ok();
            if *strict {
                holds &= cert.unfulfilled_below_top() == 0;
            }
            r.set("passes", holds);
            verdict(r, holds)
        }
        Command::BackAndForth { bundle1, bundle2, anchor, f, g, depth } => {
            let sys1 = load_system(bundle1)?;
            let sys2 = load_system(bundle2)?;
            let anchor = match anchor {
                Some(p) => load_structure(p)?,
                None => sys1.level(1).clone(),
            };
            let fm = match f {
                Some(p) => load_map(p, Some(anchor.size()))?,
                None => find_isomorphism(sys1.level(1), &anchor)?
                    .context("no --f given and level 1 of the first bundle is not isomorphic to the anchor")?,
            };
            let gm = match g {
                Some(p) => load_map(p, Some(anchor.size()))?,
                None => find_isomorphism(sys2.level(1), &anchor)?
                    .context("no --g given and level 1 of the second bundle is not isomorphic to the anchor")?,
            };
            let bf = back_and_forth(&sys1, &sys2, &anchor, &fm, &gm, *depth)?;
            let verified = bf.verify(&sys1, &sys2);
            let mut r = bf.to_report();
            r.set("verified", verified);
            let code = if !verified {
                1
            } else if !bf.complete() {
                3
            } else {
                0
            };
            if let Some(why) = &bf.stuck {
                eprintln!("stuck: {why}");
            }
            Ok(Outcome { report: r, code })
        }
        Command::Dualize { structure, symbol } => {
            let m = load_structure(structure)?;
            let dual = dualize(&m, symbol)?;
            let check = verify_dualization(&m, symbol)?;
            emit(cli, "dualized.struct", &serialize_structure(&dual))?;
            let mut r = check.to_report();
            describe(&mut r, "dualized", &dual);
            verdict(r, check.equal())
        }
        Command::Orbits { group, max_arity } => {
            let g = load_group(group)?;
            let k = orbit_structure(&g, max_arity.unwrap_or(g.degree()))?;
            emit(cli, "orbits.struct", &serialize_structure(&k))?;
            let mut r = orbit_report(&k);
            r.set("degree", g.degree()).set("group.order", g.order()).set("symbols", k.signature().len());
            ok(r)
        }
        Command::VerifyOrbits { group, max_arity } => {
            let g = load_group(group)?;
            let check = verify_orbit_structure(&g, max_arity.unwrap_or(g.degree()))?;
            let homogeneity = verify_orbit_homogeneity(&g)?;
            let mut r = check.to_report();
            r.merge_prefixed("homogeneity", &homogeneity.to_report());
            verdict(r, check.equal && homogeneity.holds())
        }
        Command::Quotient { structure } => {
            let s = load_structure(structure)?;
            let check = check_prespace(&s).with_context(|| format!("{}", structure.display()))?;
            let mut r = check.to_report();
            if !check.is_prespace() {
                return verdict(r, false);
            }
            let (q, map) = quotient_by_r(&s)?;
            emit(cli, "quotient.struct", &serialize_structure(&q))?;
            emit(cli, "quotient.map", &format!("{map}\n"))?;
            describe(&mut r, "quotient", &q);
            r.set_map("map", &map);
            ok(r)
        }
        Command::DemoInterval { depth } => demo(cli, *depth, Geometry::Interval),
        Command::DemoCantor { depth } => demo(cli, *depth, Geometry::Cantor),
    }
}

fn validate(file: &Path) -> Result<Outcome> {
    let mut r = Report::new();
    match parse_structure(&read_text(file)?) {
        Ok(s) => {
            r.set("valid", true).set("domain", s.size()).set("symbols", s.signature().len());
            ok(r)
        }
        Err(FormatError::Invalid(violations)) => {
            r.set("valid", false).set("violations", violations.len());
            for (i, v) in violations.iter().enumerate() {
                r.set(format!("violation.{}", index_key(i, violations.len())), v);
            }
            verdict(r, false)
        }
        Err(FormatError::Parse(e)) => Err(anyhow::anyhow!("{}: {e}", file.display())),
    }
}

fn demo(cli: &Cli, depth: usize, geometry: Geometry) -> Result<Outcome> {
    if depth == 0 {
        bail!("--depth must be at least 1");
    }
    let sys = match geometry {
        Geometry::Cantor => build_cantor_system(depth),
        _ => build_interval_system(depth),
    };
    emit_bundle(cli, &sys)?;
    let mut r = limit_quotient_report(&sys, geometry)?;
    // The deepest level, unprefixed.
    let key = index_key(depth, depth);
    for field in ["atoms", "edges", "mesh"] {
        if let Some(v) = r.get(&format!("level.{key}.{field}")).map(str::to_string) {
            r.set(field, v);
        }
    }
    ok(r)
}
