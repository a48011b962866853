use std::fmt::Display;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use super::config::{MeshSource, RunConfig};
use super::output::{csv_string, write_atomic, Cell, FlatObject};
use crate::geometry::{generate_structured_mesh, load_mesh, validate_mesh, write_mesh, Mesh};
use crate::hilbert::{random_mp_operator, verify_mp_identities_with, MpReport};
use crate::pipeline::Pipeline;
use crate::report::{evaluate_level, CheckOptions, LevelReport};
use crate::sampling;
use crate::solver::{regularity_from, step_datum, very_weak_solve};
use crate::spectral::hs_norm;
use crate::tolerances;

const OK: i32 = 0;
const INVARIANT: i32 = 1;
const USAGE: i32 = 2;

/// Max/min over refinement levels allowed for the Riesz bounds.
const DRIFT_LIMIT: f64 = 2.0;

fn fail(code: i32, msg: impl Display) -> i32 {
    eprintln!("riesz-trace: {msg}");
    code
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes()).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn source_label(source: &MeshSource) -> String {
    match source {
        MeshSource::Structured(d) => d.name().to_string(),
        MeshSource::File(p) => p.display().to_string(),
    }
}

/// Mesh of the configured source; parse and validation failures are usage
/// errors.
fn obtain_mesh(source: &MeshSource, n: usize) -> Result<(Mesh, Vec<String>), String> {
    match source {
        MeshSource::Structured(d) => Ok((generate_structured_mesh(*d, n), Vec::new())),
        MeshSource::File(p) => load_mesh(p).map(|l| (l.mesh, l.notes)).map_err(|e| e.to_string()),
    }
}

fn header(cfg: &RunConfig, n: usize) -> FlatObject {
    let mut o = FlatObject::new();
    o.push("source", source_label(&cfg.source));
    if matches!(cfg.source, MeshSource::Structured(_)) {
        o.push("n", n);
    }
    o.push("seed", cfg.seed);
    o.push("rank_tol", cfg.rank_tol);
    o.push("samples", cfg.samples);
    o
}

/// Outcome of one level: the report (if the pipeline got that far) and the
/// exit code it implies.
struct Level {
    n: usize,
    report: Option<LevelReport>,
    code: i32,
}

/// Builds, checks and writes all artifacts of one level into `dir`.
fn run_level(cfg: &RunConfig, mesh: &Mesh, n: usize, dir: &Path) -> Level {
    let mut residuals = header(cfg, n);
    residuals.push("num_nodes", mesh.num_nodes());
    residuals.push("num_boundary", mesh.num_boundary_nodes());

    let built = Pipeline::build(mesh, cfg.rank_tol)
        .and_then(|p| evaluate_level(&p, &CheckOptions::new(cfg.seed, cfg.samples)).map(|r| (p, r)));
    let (pipeline, report) = match built {
        Ok(x) => x,
        Err(e) => {
            residuals.push("error", e.to_string());
            residuals.push("all_pass", false);
            let code = match write(dir, "residuals.json", &residuals.to_json()) {
                Ok(()) => INVARIANT,
                Err(w) => fail(INVARIANT, w),
            };
            eprintln!("riesz-trace: n = {n}: {e}");
            return Level { n, report: None, code };
        }
    };

    push_report(&mut residuals, &report);
    let mut code = if report.passed() { OK } else { INVARIANT };
    for c in report.failures() {
        eprintln!(
            "riesz-trace: n = {n}: {} = {:e} violates {} {:e}",
            c.name,
            c.value,
            if c.upper { "<=" } else { ">=" },
            c.limit
        );
    }
    let artifacts = write(dir, "residuals.json", &residuals.to_json())
        .and_then(|()| write_artifacts(cfg, &pipeline, &report, dir, n));
    if let Err(e) = artifacts {
        code = fail(INVARIANT, e);
    }
    Level {
        n,
        report: Some(report),
        code,
    }
}

fn push_report(o: &mut FlatObject, r: &LevelReport) {
    o.push("modes", r.modes);
    o.push("kappa_max", r.kappa_max);
    o.push("kappa_min", r.kappa_min);
    o.push("a_G", r.bounds_g.a);
    o.push("b_G", r.bounds_g.b);
    o.push("a_Y", r.bounds_y.a);
    o.push("b_Y", r.bounds_y.b);
    o.push("biorthogonality_entrywise", r.biorthogonality_entrywise);
    o.push("rellich_ratio", r.rellich);
    o.push("h1_ratio_min", r.h1_range.0);
    o.push("h1_ratio_max", r.h1_range.1);
    for c in &r.checks {
        o.push(c.name, c.value);
        o.push(format!("{}_limit", c.name), c.limit);
        o.push(format!("{}_pass", c.name), c.passed());
    }
    o.push("all_pass", r.passed());
}

fn write_artifacts(cfg: &RunConfig, p: &Pipeline, r: &LevelReport, dir: &Path, n: usize) -> Result<(), String> {
    let eig = &p.eigen;
    let spectrum: Vec<Vec<Cell>> = (0..eig.len())
        .map(|k| vec![(k + 1).into(), eig.kappa[k].into(), eig.kappa_squared[k].into()])
        .collect();
    write(
        dir,
        "spectrum.csv",
        &csv_string(&["n", "kappa", "kappa_squared"], &spectrum),
    )?;

    let mut cols = vec!["n".to_string(), "kappa".to_string()];
    cols.extend(p.mesh.boundary_nodes().iter().map(|i| format!("node_{i}")));
    for (name, basis) in [("bases_g.csv", &p.pair.g_cols), ("bases_y.csv", &p.pair.y_cols)] {
        let rows: Vec<Vec<Cell>> = (0..basis.ncols())
            .map(|k| {
                let mut row = vec![(k + 1).into(), p.pair.kappa[k].into()];
                row.extend(basis.column(k).iter().map(|&v| Cell::from(v)));
                row
            })
            .collect();
        write(dir, name, &csv_string(&cols, &rows))?;
    }

    let g = step_datum(&p.mesh);
    let truncation = cfg.truncation.unwrap_or(p.pair.len()).min(p.pair.len());
    let sol = very_weak_solve(&g, truncation, &p.pair, eig).map_err(|e| e.to_string())?;
    let reg = regularity_from(&g, &sol, r.bounds_g.a, r.bounds_g.b, &p.pair);
    let mut o = header(cfg, n);
    o.push("datum", "sign(x-1/2) on y=0");
    for (k, v) in serde_json::to_value(reg)
        .map_err(|e| e.to_string())?
        .as_object()
        .into_iter()
        .flatten()
    {
        o.push(k.clone(), v.clone());
    }
    o.push("s_half_sum", sol.coefficients.rows(0, truncation).norm_squared());
    o.push("s_one_sum", reg.s_one_sum);
    for &s in &cfg.s_values {
        let v = hs_norm(&sol.field, s, eig).map_err(|e| e.to_string())?;
        o.push(format!("hs_norm_s{s}"), v);
    }
    o.push("holds", reg.holds());
    write(dir, "regularity.json", &o.to_json())?;

    if cfg.export_solution {
        write(dir, "solution.csv", &solution_csv(&p.mesh, &sol.field))?;
    }
    Ok(())
}

fn solution_csv(mesh: &Mesh, v: &DVector<f64>) -> String {
    let rows: Vec<Vec<Cell>> = mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, [x, y])| vec![i.into(), (*x).into(), (*y).into(), v[i].into()])
        .collect();
    csv_string(&["node", "x", "y", "v"], &rows)
}

pub(super) fn run(cfg: &RunConfig) -> i32 {
    let (mesh, notes) = match obtain_mesh(&cfg.source, cfg.n) {
        Ok(m) => m,
        Err(e) => return fail(USAGE, e),
    };
    for note in notes {
        eprintln!("riesz-trace: note: {note}");
    }
    if let Err(e) = ensure_dir(&cfg.out) {
        return fail(USAGE, e);
    }
    let level = run_level(cfg, &mesh, cfg.n, &cfg.out);
    if let Some(r) = &level.report {
        println!(
            "{} n={}: {} modes, kappa in [{:.6e}, {:.6e}], {}/{} checks passed",
            source_label(&cfg.source),
            cfg.n,
            r.modes,
            r.kappa_min,
            r.kappa_max,
            r.checks.iter().filter(|c| c.passed()).count(),
            r.checks.len()
        );
    }
    level.code
}

fn ratio(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi / lo
}

/// Column name, accessor, and whether the drift limit applies.
type Series = (&'static str, fn(&LevelReport) -> f64, bool);

pub(super) fn sweep(cfg: &RunConfig) -> i32 {
    let MeshSource::Structured(domain) = cfg.source else {
        return fail(USAGE, "sweeps refine built-in domains only");
    };
    if let Err(e) = ensure_dir(&cfg.out) {
        return fail(USAGE, e);
    }
    let levels: Vec<Level> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .n_list
            .iter()
            .map(|&n| {
                scope.spawn(move || {
                    let dir: PathBuf = cfg.out.join(format!("n{n}"));
                    if let Err(e) = ensure_dir(&dir) {
                        return Level {
                            n,
                            report: None,
                            code: fail(INVARIANT, e),
                        };
                    }
                    run_level(cfg, &generate_structured_mesh(domain, n), n, &dir)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("level thread panicked"))
            .collect()
    });

    let header = [
        "n",
        "num_nodes",
        "modes",
        "a_G",
        "b_G",
        "a_Y",
        "b_Y",
        "rellich",
        "h1_min",
        "h1_max",
        "step_s_half_sum",
        "step_s_one_sum",
        "all_pass",
    ];
    let rows: Vec<Vec<Cell>> = levels
        .iter()
        .map(|l| match &l.report {
            Some(r) => vec![
                l.n.into(),
                r.num_nodes.into(),
                r.modes.into(),
                r.bounds_g.a.into(),
                r.bounds_g.b.into(),
                r.bounds_y.a.into(),
                r.bounds_y.b.into(),
                r.rellich.into(),
                r.h1_range.0.into(),
                r.h1_range.1.into(),
                r.step_half_sum.into(),
                r.step.s_one_sum.into(),
                r.passed().into(),
            ],
            None => {
                let mut row = vec![Cell::from(l.n)];
                row.extend((1..header.len() - 1).map(|_| Cell::Empty));
                row.push(false.into());
                row
            }
        })
        .collect();
    let mut code = levels.iter().map(|l| l.code).max().unwrap_or(OK);
    if let Err(e) = write(&cfg.out, "sweep.csv", &csv_string(&header, &rows)) {
        code = fail(INVARIANT, e);
    }

    let done: Vec<&LevelReport> = levels.iter().filter_map(|l| l.report.as_ref()).collect();
    let mut drift = FlatObject::new();
    drift.push("source", domain.name());
    drift.push(
        "levels",
        cfg.n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    drift.push("completed_levels", done.len());
    drift.push("riesz_drift_limit", DRIFT_LIMIT);
    let mut riesz_ok = done.len() >= 2;
    let series: [Series; 7] = [
        ("a_G", |r| r.bounds_g.a, true),
        ("b_G", |r| r.bounds_g.b, true),
        ("a_Y", |r| r.bounds_y.a, true),
        ("b_Y", |r| r.bounds_y.b, true),
        ("rellich", |r| r.rellich, false),
        ("h1_min", |r| r.h1_range.0, false),
        ("h1_max", |r| r.h1_range.1, false),
    ];
    for (name, get, riesz) in series {
        let d = ratio(done.iter().map(|r| get(r)));
        drift.push(format!("{name}_drift"), d);
        if riesz {
            riesz_ok &= d < DRIFT_LIMIT;
        }
    }
    drift.push("riesz_drift_pass", riesz_ok);
    if let Err(e) = write(&cfg.out, "drift.json", &drift.to_json()) {
        code = fail(INVARIANT, e);
    }
    println!(
        "{} sweep over {} levels: {} completed, Riesz drift {}",
        domain.name(),
        cfg.n_list.len(),
        done.len(),
        if riesz_ok { "within limit" } else { "exceeds limit" }
    );
    code
}

pub(super) fn verify_mp(cfg: &RunConfig) -> i32 {
    if let Err(e) = ensure_dir(&cfg.out) {
        return fail(USAGE, e);
    }
    let mut rng = sampling::rng(cfg.seed);
    let names = MpReport::entry_names();
    let mut header = vec![
        "case".to_string(),
        "dim_domain".into(),
        "dim_codomain".into(),
        "rank".into(),
    ];
    header.extend(names.iter().cloned());
    header.extend(["max_residual".to_string(), "pass".into()]);

    let mut rows = Vec::new();
    let mut failures = 0;
    for case in 0..cfg.samples {
        let rep = random_mp_operator(case, &mut rng)
            .and_then(|a| verify_mp_identities_with(&a, cfg.rank_tol, 16, &mut rng).map(|r| (a, r)));
        let (a, rep) = match rep {
            Ok(x) => x,
            Err(e) => {
                failures += 1;
                eprintln!("riesz-trace: operator {case}: {e}");
                continue;
            }
        };
        let entries = rep.entries();
        let mut row: Vec<Cell> = vec![case.into(), a.dom().dim().into(), a.cod().dim().into(), rep.rank.into()];
        row.extend(
            names
                .iter()
                .map(|k| Cell::from(entries.iter().find(|(n, _)| n == k).map(|(_, v)| *v))),
        );
        let max = rep.max_residual();
        let pass = max <= tolerances::MOORE_PENROSE;
        failures += usize::from(!pass);
        row.extend([max.into(), pass.into()]);
        rows.push(row);
    }
    if let Err(e) = write(&cfg.out, "verify_mp.csv", &csv_string(&header, &rows)) {
        return fail(INVARIANT, e);
    }
    println!("{} random operators, {} failures", cfg.samples, failures);
    if failures == 0 {
        OK
    } else {
        INVARIANT
    }
}

pub(super) fn mesh(cfg: &RunConfig) -> i32 {
    let (mesh, notes) = match obtain_mesh(&cfg.source, cfg.n) {
        Ok(m) => m,
        Err(e) => return fail(USAGE, e),
    };
    if let Err(e) = ensure_dir(&cfg.out) {
        return fail(USAGE, e);
    }
    let d = validate_mesh(&mesh);
    let mut o = FlatObject::new();
    o.push("source", source_label(&cfg.source));
    if matches!(cfg.source, MeshSource::Structured(_)) {
        o.push("n", cfg.n);
    }
    o.push("num_nodes", mesh.num_nodes());
    o.push("num_triangles", mesh.triangles().len());
    o.push("num_boundary_nodes", mesh.num_boundary_nodes());
    o.push("area", mesh.area());
    o.push("perimeter", mesh.perimeter());
    o.push("min_area", d.min_area);
    o.push("max_area", d.max_area);
    o.push("min_angle_deg", d.min_angle_deg);
    o.push("boundary_loops", d.boundary_loops);
    o.push("conforming", d.conforming);
    o.push("issues", d.issues.join("; "));
    o.push("notes", notes.join("; "));
    let written = write(&cfg.out, "mesh.msh", &write_mesh(&mesh))
        .and_then(|()| write(&cfg.out, "mesh_diagnostics.json", &o.to_json()));
    if let Err(e) = written {
        return fail(INVARIANT, e);
    }
    println!(
        "{}: {} nodes, {} triangles, {} boundary nodes",
        source_label(&cfg.source),
        mesh.num_nodes(),
        mesh.triangles().len(),
        mesh.num_boundary_nodes()
    );
    if d.conforming {
        OK
    } else {
        INVARIANT
    }
}
