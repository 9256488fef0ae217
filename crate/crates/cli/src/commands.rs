//! Command implementations. Each writes its files into `out_dir` and returns
//! a short human-readable summary.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use orbitflag::hamiltonian::{bookend_transport, round_trip, TransportPlan};
use orbitflag::hull::Membership;
use orbitflag::linalg::{self, CMatrix};
use orbitflag::model::{self, validate_density};
use orbitflag::orbit::{compute_w, project_field, tangent_projection, w_derivative};
use orbitflag::simplex::{build_projection, permutations, weyl_chamber};
use orbitflag::slc::{build_field_set, compute_a_iota, criticality_residual, rasterize_region, IotaFlagSet};
use orbitflag::{Flag, FlagPath, RMatrix, RVector, SeededRng};

use crate::output::{fmt_f64, json_f64, json_vec, numbered, render_svg, values, write_json, Table};
use crate::spec::{FlagSource, LoadedSpec, PlanMode};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaFlags {
    Iota,
    Identity,
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn matrix_json(m: &RMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|i| serde_json::Value::Array((0..m.ncols()).map(|j| json_f64(m[(i, j)])).collect()))
            .collect(),
    )
}

fn perm_label(p: &[usize]) -> String {
    p.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(" ")
}

/// Iota flags followed by `extra_random_flags` random frames with all their permutations.
pub fn control_flags(loaded: &LoadedSpec) -> Result<(IotaFlagSet, Vec<Flag>), CliError> {
    let set = compute_a_iota(&loaded.system).map_err(CliError::numerical("A_iota"))?;
    let mut flags = set.flags.clone();
    let run = &loaded.spec.run;
    if run.extra_random_flags > 0 {
        let n = loaded.system.dim();
        let mut r = SeededRng::new(run.flag_seed);
        for _ in 0..run.extra_random_flags {
            let base = Flag::new(r.unitary(n)).map_err(CliError::numerical("random flag"))?;
            flags.extend(permutations(n).iter().map(|p| base.permuted(p)));
        }
    }
    Ok((set, flags))
}

pub fn cmd_omega(
    loaded: &LoadedSpec,
    source: OmegaFlags,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(out_dir)?;
    let sys = &loaded.system;
    let n = sys.dim();
    let (labels, flags): (Vec<String>, Vec<Flag>) = match source {
        OmegaFlags::Identity => (vec![perm_label(&(0..n).collect::<Vec<_>>())], vec![Flag::identity(n)]),
        OmegaFlags::Iota => {
            let set = compute_a_iota(sys).map_err(CliError::numerical("A_iota"))?;
            (set.perms.iter().map(|p| perm_label(&p.0)).collect(), set.flags)
        }
    };
    let map = build_projection(n).map_err(CliError::numerical("projection"))?;
    let mut rows = Vec::with_capacity(flags.len());
    for f in &flags {
        let om = compute_w(sys, f).map_err(CliError::numerical("omega"))?;
        let field = project_field(&map, &om).map_err(CliError::numerical("omega"))?;
        rows.push((om, field));
    }
    match format {
        OutputFormat::Csv => {
            let header: Vec<String> =
                ["flag", "perm", "quantity", "i", "j", "value"].iter().map(|s| s.to_string()).collect();
            let mut t = Table::create(out_dir, "omega.csv", &header)?;
            for (k, ((om, field), label)) in rows.iter().zip(&labels).enumerate() {
                let base = |q: &str, i: String, j: String, v: f64| {
                    vec![k.to_string(), label.clone(), q.to_string(), i, j, fmt_f64(v)]
                };
                for (name, m) in [("w", &om.w), ("omega", &om.omega), ("A", &field.a)] {
                    for i in 0..m.nrows() {
                        for j in 0..m.ncols() {
                            t.row(&base(name, (i + 1).to_string(), (j + 1).to_string(), m[(i, j)]))?;
                        }
                    }
                }
                for i in 0..field.b.len() {
                    t.row(&base("b", (i + 1).to_string(), String::new(), field.b[i]))?;
                }
                t.row(&base("det", String::new(), String::new(), field.a.determinant()))?;
            }
            Ok(vec![t.finish()?])
        }
        OutputFormat::Json => {
            let list: Vec<_> = rows
                .iter()
                .zip(&labels)
                .map(|((om, field), label)| {
                    json!({
                        "perm": label,
                        "w": matrix_json(&om.w),
                        "omega": matrix_json(&om.omega),
                        "b": json_vec(&field.b),
                        "A": matrix_json(&field.a),
                        "det": json_f64(field.a.determinant()),
                    })
                })
                .collect();
            Ok(vec![write_json(out_dir, "omega.json", &json!({ "n": n, "flags": list }))?])
        }
        OutputFormat::Svg => Err(CliError::Validation("omega has no SVG output".into())),
    }
}

#[derive(Debug, Clone)]
pub struct SlcSummary {
    pub files: Vec<PathBuf>,
    pub interior: usize,
    pub boundary: usize,
    pub exterior: usize,
    pub candidates: usize,
    pub max_residual: f64,
    pub duplicates: usize,
}

pub fn cmd_slc(loaded: &LoadedSpec, out_dir: &Path, formats: &[OutputFormat]) -> Result<SlcSummary, CliError> {
    ensure_dir(out_dir)?;
    let sys = &loaded.system;
    let n = sys.dim();
    let run = &loaded.spec.run;
    if formats.contains(&OutputFormat::Svg) && n != 3 {
        return Err(CliError::UnsupportedDimensionForSvg(n));
    }
    let (_, flags) = control_flags(loaded)?;
    let fields = build_field_set(sys, &flags, run.dedup).map_err(CliError::numerical("field set"))?;
    let map = build_projection(n).map_err(CliError::numerical("projection"))?;
    let region = rasterize_region(&fields, &map, run.resolution, run.membership_tol, run.facet_samples_for(n))
        .map_err(CliError::numerical("rasterize"))?;
    let max_residual = region.candidates.iter().map(|c| c.max_residual()).fold(0.0, f64::max);
    let mut files = Vec::new();
    let flag_names = |subset: &[usize]| {
        subset.iter().map(|&j| (fields.entries[j].source + 1).to_string()).collect::<Vec<_>>().join(" ")
    };

    if formats.contains(&OutputFormat::Csv) {
        let mut header = vec!["index".to_string()];
        header.extend(numbered("i", n));
        header.extend(numbered("lambda", n));
        header.extend(numbered("x", n - 1));
        header.push("class".into());
        let mut t = Table::create(out_dir, "grid.csv", &header)?;
        for (k, g) in region.grid.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(g.lattice.iter().map(|i| i.to_string()));
            row.extend(values(g.lambda.iter().copied()));
            row.extend(values(g.x.iter().copied()));
            row.push(g.class.label().to_string());
            t.row(&row)?;
        }
        files.push(t.finish()?);

        let mut header = vec!["candidate".to_string(), "flags".to_string(), "sample".to_string()];
        header.extend(numbered("s", n - 1));
        header.extend(numbered("x", n - 1));
        header.push("residual".into());
        let mut t = Table::create(out_dir, "candidates.csv", &header)?;
        for c in &region.candidates {
            let names = flag_names(&c.subset);
            for (k, s) in c.samples.iter().enumerate() {
                let mut row = vec![c.id.to_string(), names.clone(), k.to_string()];
                row.extend(values(s.s.iter().copied()));
                row.extend(values(s.x.iter().copied()));
                row.push(fmt_f64(s.residual));
                t.row(&row)?;
            }
        }
        files.push(t.finish()?);

        if n == 4 {
            let header: Vec<String> = ["candidate", "triangle", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
            let mut t = Table::create(out_dir, "mesh.csv", &header)?;
            for c in &region.candidates {
                for (k, tri) in c.triangles.iter().enumerate() {
                    t.row(&[
                        c.id.to_string(),
                        k.to_string(),
                        tri[0].to_string(),
                        tri[1].to_string(),
                        tri[2].to_string(),
                    ])?;
                }
            }
            files.push(t.finish()?);
        }
    }

    let summary = json!({
        "n": n,
        "resolution": region.resolution,
        "membership_tol": json_f64(region.tol),
        "flags": flags.len(),
        "distinct_fields": fields.entries.len(),
        "duplicates": fields.duplicates.iter().map(|(d, k)| json!([d + 1, fields.entries[*k].source + 1])).collect::<Vec<_>>(),
        "invertible_fields": fields.invertible().len(),
        "candidates": region.candidates.len(),
        "candidate_note": region.candidate_note,
        "max_residual": json_f64(max_residual),
        "counts": {
            "interior": region.count(Membership::Interior),
            "boundary": region.count(Membership::Boundary),
            "exterior": region.count(Membership::Exterior),
        },
    });
    if formats.contains(&OutputFormat::Json) {
        let grid: Vec<_> = region
            .grid
            .iter()
            .map(|g| json!({ "lattice": g.lattice, "x": json_vec(&g.x), "class": g.class.label() }))
            .collect();
        let candidates: Vec<_> = region
            .candidates
            .iter()
            .map(|c| {
                json!({
                    "id": c.id,
                    "flags": flag_names(&c.subset),
                    "x": c.samples.iter().map(|s| json_vec(&s.x)).collect::<Vec<_>>(),
                    "residual": c.samples.iter().map(|s| json_f64(s.residual)).collect::<Vec<_>>(),
                    "triangles": c.triangles,
                })
            })
            .collect();
        files.push(write_json(
            out_dir,
            "region.json",
            &json!({ "summary": summary, "grid": grid, "candidates": candidates }),
        )?);
    }
    files.push(write_json(out_dir, "summary.json", &summary)?);
    if formats.contains(&OutputFormat::Svg) {
        let path = out_dir.join("region.svg");
        std::fs::write(&path, render_svg(&region, &map)).map_err(|e| CliError::io(&path, e))?;
        files.push(path);
    }
    Ok(SlcSummary {
        files,
        interior: region.count(Membership::Interior),
        boundary: region.count(Membership::Boundary),
        exterior: region.count(Membership::Exterior),
        candidates: region.candidates.len(),
        max_residual,
        duplicates: fields.duplicates.len(),
    })
}

#[derive(Debug, Clone)]
pub struct SimulationSummary {
    pub files: Vec<PathBuf>,
    pub report: serde_json::Value,
}

fn plan_from_spec(loaded: &LoadedSpec) -> Result<(TransportPlan, SeededRng), CliError> {
    let plan = loaded.spec.plan.as_ref().ok_or_else(|| CliError::Validation("simulate needs a [plan] table".into()))?;
    let sys = &loaded.system;
    let n = sys.dim();
    let mut r = SeededRng::new(plan.seed);
    let flag = match plan.flag {
        FlagSource::Identity => Flag::identity(n),
        FlagSource::Iota => compute_a_iota(sys).map_err(CliError::numerical("A_iota"))?.base_flag,
        FlagSource::Random => Flag::new(r.unitary(n)).map_err(CliError::numerical("random flag"))?,
    };
    let generator =
        if plan.generator_scale > 0.0 { r.anti_hermitian(n, plan.generator_scale) } else { CMatrix::zeros(n, n) };
    let step = loaded.spec.run.step;
    let path =
        FlagPath::geodesic(flag, generator, plan.duration.max(step)).map_err(CliError::numerical("flag path"))?;
    let lambda0 = RVector::from_column_slice(&plan.lambda0);
    let tp =
        TransportPlan::plan(sys, path, &lambda0, plan.duration, step).map_err(CliError::numerical("eigenvalue ODE"))?;
    Ok((tp, r))
}

fn min_gap(lambda: &RVector) -> f64 {
    let sorted = weyl_chamber(lambda).apply(lambda);
    sorted.as_slice().windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
}

fn plan_checkpoints(
    loaded: &LoadedSpec,
    plan: &TransportPlan,
    out_dir: &Path,
    every: usize,
) -> Result<PathBuf, CliError> {
    let sys = &loaded.system;
    let n = sys.dim();
    let map = build_projection(n).map_err(CliError::numerical("projection"))?;
    let target = plan.state_at(plan.duration());
    let mut header = vec!["t".to_string()];
    header.extend(numbered("lambda", n));
    header.extend(numbered("x", n - 1));
    header.extend(["min_gap", "h_norm", "d_to_target"].iter().map(|s| s.to_string()));
    let mut t = Table::create(out_dir, "checkpoints.csv", &header)?;
    let len = plan.lambda.len();
    for (k, (time, lam)) in plan.lambda.times.iter().zip(&plan.lambda.lambdas).enumerate() {
        if k % every.max(1) != 0 && k + 1 != len {
            continue;
        }
        let h_norm = plan
            .hamiltonian_at(sys, *time, loaded.spec.run.crossing_tol)
            .map(|h| linalg::spectral_norm(&h))
            .unwrap_or(f64::NAN);
        let d =
            model::trace_distance_raw(&plan.state_at(*time), &target).map_err(CliError::numerical("trace distance"))?;
        let mut row = vec![fmt_f64(*time)];
        row.extend(values(lam.iter().copied()));
        row.extend(values(map.apply(lam).iter().copied()));
        row.extend(values([min_gap(lam), h_norm, d]));
        t.row(&row)?;
    }
    t.finish()
}

/// Density matrices with the plan's start and end spectra in random frames.
fn random_endpoints(
    plan: &TransportPlan,
    r: &mut SeededRng,
) -> Result<(model::DensityMatrix, model::DensityMatrix), CliError> {
    let n = plan.lambda.lambdas[0].len();
    let sorted = |l: &RVector| weyl_chamber(l).apply(l);
    let a = model::assemble(sorted(&plan.lambda.lambdas[0]).as_slice(), &r.unitary(n));
    let b = model::assemble(sorted(plan.lambda.last()).as_slice(), &r.unitary(n));
    let tol = 1e-9;
    Ok((
        validate_density(&a, tol).map_err(CliError::numerical("start state"))?,
        validate_density(&b, tol).map_err(CliError::numerical("target state"))?,
    ))
}

pub fn cmd_simulate(loaded: &LoadedSpec, out_dir: &Path) -> Result<SimulationSummary, CliError> {
    ensure_dir(out_dir)?;
    let (plan, mut r) = plan_from_spec(loaded)?;
    let spec = loaded.spec.plan.as_ref().expect("plan checked");
    let sys = &loaded.system;
    let n = sys.dim();
    let crossing_tol = loaded.spec.run.crossing_tol;
    let mut files = Vec::new();
    let report = match spec.mode {
        PlanMode::Lambda => {
            files.push(plan_checkpoints(loaded, &plan, out_dir, spec.checkpoint_every)?);
            json!({
                "mode": "lambda",
                "final_lambda": json_vec(plan.lambda.last()),
                "crossings": plan.crossings().len(),
            })
        }
        PlanMode::Roundtrip => {
            let rt = round_trip(sys, &plan, crossing_tol, spec.checkpoint_every)
                .map_err(CliError::numerical("round trip"))?;
            let map = build_projection(n).map_err(CliError::numerical("projection"))?;
            let target = plan.state_at(plan.duration());
            let mut header = vec!["t".to_string()];
            header.extend(numbered("lambda", n));
            header.extend(numbered("x", n - 1));
            header.extend(
                ["min_gap", "h_norm", "d_to_target", "eigenvalue_deviation", "projector_deviation"]
                    .iter()
                    .map(|s| s.to_string()),
            );
            let mut t = Table::create(out_dir, "checkpoints.csv", &header)?;
            for c in &rt.checkpoints {
                let k = rt.simulation.times.iter().position(|s| *s == c.t).expect("checkpoint time");
                let d = model::trace_distance_raw(&rt.simulation.states[k], &target)
                    .map_err(CliError::numerical("trace distance"))?;
                let mut row = vec![fmt_f64(c.t)];
                row.extend(values(c.planned.iter().copied()));
                row.extend(values(map.apply(&c.planned).iter().copied()));
                row.extend(values([c.min_gap, c.h_norm, d, c.eigenvalue_deviation, c.projector_deviation]));
                t.row(&row)?;
            }
            files.push(t.finish()?);
            json!({
                "mode": "roundtrip",
                "crossings": plan.crossings().iter().map(|(t, j, k)| json!({ "t": json_f64(*t), "pair": [j + 1, k + 1] })).collect::<Vec<_>>(),
                "max_eigenvalue_deviation": json_f64(rt.max_eigenvalue_deviation),
                "max_projector_deviation": json_f64(rt.max_projector_deviation),
                "positivity_violated": rt.simulation.positivity_violated,
            })
        }
        PlanMode::Bookend | PlanMode::Sweep => {
            files.push(plan_checkpoints(loaded, &plan, out_dir, spec.checkpoint_every)?);
            let (rho_i, rho_t) = random_endpoints(&plan, &mut r)?;
            let deltas: Vec<f64> =
                if spec.mode == PlanMode::Bookend { spec.deltas[..1].to_vec() } else { spec.deltas.clone() };
            let reports = deltas
                .par_iter()
                .map(|&d| bookend_transport(sys, &rho_i, &rho_t, &plan, d, crossing_tol).map(|rep| (d, rep)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::numerical("book-end transport"))?;
            let header: Vec<String> =
                ["delta", "distance", "bound", "ratio", "holds"].iter().map(|s| s.to_string()).collect();
            let mut t = Table::create(out_dir, "sweep.csv", &header)?;
            for (d, rep) in &reports {
                let mut row = values([*d, rep.distance, rep.bound, rep.ratio]);
                row.push(rep.holds.to_string());
                t.row(&row)?;
            }
            files.push(t.finish()?);
            let halvings: Vec<_> = reports.windows(2).map(|w| json_f64(w[0].1.distance / w[1].1.distance)).collect();
            json!({
                "mode": if spec.mode == PlanMode::Bookend { "bookend" } else { "sweep" },
                "all_hold": reports.iter().all(|(_, r)| r.holds),
                "distance_ratios": halvings,
                "results": reports.iter().map(|(d, r)| json!({
                    "delta": json_f64(*d),
                    "distance": json_f64(r.distance),
                    "bound": json_f64(r.bound),
                    "holds": r.holds,
                })).collect::<Vec<_>>(),
            })
        }
    };
    files.push(write_json(out_dir, "report.json", &report)?);
    Ok(SimulationSummary { files, report })
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {} (limit {})", self.name, fmt_f64(self.value), fmt_f64(self.limit))
    }
}

fn check(name: &str, value: f64, limit: f64) -> Check {
    Check { name: name.to_string(), value, limit, pass: value <= limit }
}

/// Invariant battery; the first failing check decides the exit status.
pub fn cmd_validate(loaded: &LoadedSpec) -> Result<Vec<Check>, CliError> {
    let sys = &loaded.system;
    let n = sys.dim();
    let map = build_projection(n).map_err(CliError::numerical("projection"))?;
    let pi = map.matrix();
    let ones = RMatrix::from_element(n, n, 1.0 / n as f64);
    let proj = (pi * map.iota())
        .amax()
        .max((pi * pi.transpose() - RMatrix::identity(n - 1, n - 1)).amax())
        .max((pi.transpose() * pi - (RMatrix::identity(n, n) - ones)).amax());
    let mut checks = vec![check("projection identities", proj, 1e-12)];

    let set = compute_a_iota(sys).map_err(CliError::numerical("A_iota"))?;
    let mut r = SeededRng::new(0);
    let mut flags = set.flags.clone();
    flags.extend((0..20).map(|_| Flag::new(r.unitary(n)).expect("unitary")));
    let rates = 1.0 + sys.rate_scale();
    let mut col: f64 = 0.0;
    let mut min_w = f64::INFINITY;
    for f in &flags {
        let om = compute_w(sys, f).map_err(CliError::numerical("omega"))?;
        col = col.max(om.max_column_sum());
        min_w = min_w.min(om.w.min());
    }
    checks.push(check("omega column sums", col, 1e-12 * rates));
    checks.push(check("negative transfer rates", (-min_w).max(0.0), 0.0));
    checks.push(check("trace of A_iota", linalg::trace(&set.a_iota).norm(), 1e-12 * rates));
    let mut gen_trace: f64 = 0.0;
    for _ in 0..10 {
        let rho = r.density_matrix(n);
        let h = r.hermitian(n, 1.0);
        let g = model::apply_lindblad(sys, &h, &rho).map_err(CliError::numerical("generator"))?;
        gen_trace = gen_trace.max(linalg::trace(&g).norm());
    }
    checks.push(check("generator trace", gen_trace, 1e-12 * rates));
    if loaded.jump_dephasing_only && !sys.ops().is_empty() {
        let mut analytic: f64 = 0.0;
        for f in &set.flags {
            for _ in 0..5 {
                let h = tangent_projection(f, &r.anti_hermitian(n, 1.0));
                let dw = w_derivative(sys, f, &h).map_err(CliError::numerical("w derivative"))?;
                analytic = analytic.max(dw.norm());
            }
        }
        checks.push(check("dw(pi_iota) = 0 (analytic)", analytic, 1e-12 * rates));
        let fd = criticality_residual(sys, &set, &mut r, 20).map_err(CliError::numerical("w derivative"))?;
        checks.push(check("dw(pi_iota) = 0 (finite difference)", fd, 1e-8 * rates));
    }
    Ok(checks)
}

/// The iota flag set as CSV: permutation, diagonal of `A_iota` in the flag, tangent vector at the mixed state.
pub fn cmd_flags(loaded: &LoadedSpec, out_dir: Option<&Path>) -> Result<String, CliError> {
    let set = compute_a_iota(&loaded.system).map_err(CliError::numerical("A_iota"))?;
    let n = loaded.system.dim();
    let tangents = orbitflag::slc::tangent_set_at_iota(&set);
    let mut header = vec!["flag".to_string(), "perm".to_string()];
    header.extend(numbered("gamma", n));
    header.extend(numbered("v", n));
    let mut text = header.join(",") + "\n";
    for (k, (p, v)) in set.perms.iter().zip(&tangents).enumerate() {
        let mut row = vec![k.to_string(), perm_label(&p.0)];
        row.extend(values(p.apply(&set.gamma).iter().copied()));
        row.extend(values(v.iter().copied()));
        text += &(row.join(",") + "\n");
    }
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let path = dir.join("flags.csv");
        std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(text)
}
