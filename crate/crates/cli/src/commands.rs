use std::path::Path;

use flexeig::fem::{rigid_reference, sweep_thickness, Analysis, Completion, RigidMotion};
use flexeig::io::{self, ModelSource, Parsed, ReferenceFile, Report, ReportFormat, RunInfo, Strictness, SweepTable};
use flexeig::metrics::{out_of_plane_share, path_deviation};
use flexeig::{
    assess, build_metric, eig_sym, fit_rigid_motion, min_rayleigh_certificate, DofMap, DofMetric, NodeId,
    ReferenceKinematics, StiffnessMatrix,
};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::summary::Summary;
use crate::{in_file, Failure};

type Outcome = Result<Summary, Failure>;

fn read_bytes(path: &Path, hasher: &mut Sha256) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    hasher.update(&bytes);
    String::from_utf8(bytes).map_err(|_| Failure::input(format!("{}: not valid UTF-8", path.display())))
}

fn hex(hasher: Sha256) -> String {
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn run_info(digest: String, seed: Option<u64>) -> RunInfo {
    RunInfo {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        input_digest: digest,
        seed,
    }
}

fn warn<T>(parsed: Parsed<T>) -> T {
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    parsed.value
}

struct Loaded {
    source: ModelSource,
    analysis: Analysis,
    digest: String,
}

fn load_model(path: &Path, strictness: Strictness) -> Result<Loaded, Failure> {
    let mut hasher = Sha256::new();
    let text = read_bytes(path, &mut hasher)?;
    let source = warn(io::parse_model(&text, path, strictness)?);
    let model = source.build().map_err(in_file(path))?;
    let analysis = Analysis::new(model).map_err(in_file(path))?;
    Ok(Loaded {
        source,
        analysis,
        digest: hex(hasher),
    })
}

fn numbers<const N: usize>(text: &str, what: &str) -> Result<[f64; N], Failure> {
    let values: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::input(format!("{what}: cannot parse numbers in '{text}'")))?;
    values
        .try_into()
        .map_err(|_| Failure::input(format!("{what}: expected {N} comma-separated numbers, got '{text}'")))
}

/// `rotation:x,y,z:ax,ay,az` or `translation:dx,dy,dz`.
pub fn parse_motion(spec: &str) -> Result<RigidMotion, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["rotation", pivot, axis] => Ok(RigidMotion::Rotation {
            pivot: numbers(pivot, "--reference pivot")?,
            axis: numbers(axis, "--reference axis")?,
        }),
        ["translation", dir] => Ok(RigidMotion::Translation {
            direction: numbers(dir, "--reference direction")?,
        }),
        _ => Err(Failure::input(format!(
            "--reference: expected 'rotation:x,y,z:ax,ay,az' or 'translation:dx,dy,dz', got '{spec}'"
        ))),
    }
}

/// `NODE:fx,fy,fz,mx,my,mz`.
fn parse_load(spec: &str) -> Result<(NodeId, [f64; 6]), Failure> {
    let (node, values) = spec
        .split_once(':')
        .ok_or_else(|| Failure::input(format!("--load: expected 'NODE:fx,fy,fz,mx,my,mz', got '{spec}'")))?;
    let node: u32 = node
        .trim()
        .parse()
        .map_err(|_| Failure::input(format!("--load: bad node id '{node}'")))?;
    Ok((NodeId(node), numbers(values, "--load")?))
}

fn model_reference(
    analysis: &Analysis,
    specs: &[String],
    completion: Completion,
) -> Result<Option<ReferenceKinematics>, Failure> {
    if specs.is_empty() {
        return Ok(None);
    }
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for spec in specs {
        let r = rigid_reference(analysis, parse_motion(spec)?, completion).map_err(Failure::from)?;
        labels.push(r.description().to_string());
        vectors.push(r.vector(0));
    }
    Ok(Some(ReferenceKinematics::from_vectors(
        &vectors,
        analysis.metric(),
        labels.join("; "),
    )?))
}

fn pseudo_mobility(p: Option<usize>, reference: Option<&ReferenceKinematics>) -> usize {
    p.unwrap_or_else(|| reference.map_or(1, ReferenceKinematics::p))
}

fn report_summary(s: &mut Summary, report: &flexeig::AssessmentReport) {
    s.text("n_dof", report.n_dof);
    s.text("pseudo_mobility", report.pseudo_mobility);
    for (i, l) in report.eigenvalues.iter().enumerate() {
        s.num(&format!("lambda{}", i + 1), *l);
    }
    s.num("selectivity", report.selectivity);
    s.text("selectivity_degenerate", report.selectivity_degenerate);
    s.opt("accuracy", report.accuracy);
    s.opt("extended_accuracy", report.extended_accuracy);
    if let Some(r) = &report.reference {
        s.text("reference", r);
    }
    s.opt("dominance_share", report.dominance_share);
    s.opt("characteristic_length", report.characteristic_length);
}

#[allow(clippy::too_many_arguments)]
pub fn analyze(
    path: &Path,
    references: &[String],
    p: Option<usize>,
    completion: Completion,
    loads: &[String],
    count: usize,
    out: Option<&Path>,
    strictness: Strictness,
) -> Outcome {
    let Loaded {
        analysis: an, digest, ..
    } = load_model(path, strictness)?;
    let reference = model_reference(&an, references, completion)?;
    let p = pseudo_mobility(p, reference.as_ref());
    let load = if loads.is_empty() {
        None
    } else {
        let loads = loads.iter().map(|l| parse_load(l)).collect::<Result<Vec<_>, _>>()?;
        Some(an.load_vector(&loads).map_err(in_file(path))?)
    };
    let (report, basis) = assess(an.stiffness(), an.metric(), p, reference.as_ref(), load.as_ref(), count)?;

    let mut s = Summary::default();
    s.text("command", "analyze")
        .text("model", path.display())
        .text("input_digest", &digest);
    s.text("condensed", an.is_condensed());
    report_summary(&mut s, &report);

    let moving = &an.model().moving_nodes;
    if let Ok(fit) = fit_rigid_motion(&basis.eigenvector(0), moving, &an) {
        s.num("mode1_rotation", fit.angle);
        match fit.center {
            Some(c) => s.num("mode1_center_x", c[0]).num("mode1_center_y", c[1]),
            None => s.text("mode1_center", "none"),
        };
        s.num("mode1_rotation_share", fit.rotation_share);
        s.num("mode1_fit_residual", fit.residual);
    }
    if let (Some(r), 1) = (&reference, p) {
        if let Ok(dev) = path_deviation(&basis.eigenvector(0), &r.vector(0), moving, &an, an.metric()) {
            s.num("path_deviation_rms", dev.rms);
        }
    }
    if let Some(out) = out {
        io::write_json_report(
            &Report {
                info: run_info(digest, None),
                body: report,
            },
            out,
        )?;
        s.text("report", out.display());
    }
    Ok(s)
}

pub fn sweep(path: &Path, param: &str, values: &[f64], out: Option<&Path>, strictness: Strictness) -> Outcome {
    if param != "l" {
        return Err(Failure::input(format!(
            "--param: only 'l' (notch web thickness) can be swept, got '{param}'"
        )));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Failure::input("--values must be strictly ascending"));
    }
    let mut hasher = Sha256::new();
    let text = read_bytes(path, &mut hasher)?;
    let source = warn(io::parse_model(&text, path, strictness)?);
    let ModelSource::NotchHinge(params) = source else {
        return Err(Failure::input(format!(
            "{}: sweep needs a model with \"generator\": \"notch_hinge\"",
            path.display()
        )));
    };
    params.validate().map_err(in_file(path))?;
    let digest = hex(hasher);
    let rows = sweep_thickness(&params, values);
    let table = SweepTable::from_rows(&rows);

    let mut s = Summary::default();
    s.text("command", "sweep")
        .text("model", path.display())
        .text("input_digest", &digest);
    s.text("rows", table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        let k = i + 1;
        s.num(&format!("l_mm.{k}"), r.l_mm);
        match &r.error {
            None => {
                s.opt(&format!("lambda1.{k}"), r.lambda1);
                s.opt(&format!("lambda2.{k}"), r.lambda2);
                s.opt(&format!("selectivity.{k}"), r.selectivity);
            }
            Some(e) => {
                eprintln!("warning: row {k} (l = {}): {e}", r.l_mm);
                s.text(&format!("error.{k}"), e);
            }
        }
    }
    if let Some(out) = out {
        let report = Report {
            info: run_info(digest, None),
            body: table,
        };
        io::write_sweep(&report, out, ReportFormat::from_path(out))?;
        s.text("report", out.display());
    }
    Ok(s)
}

#[derive(Serialize)]
struct NodeShape {
    id: NodeId,
    position: [f64; 3],
    /// `[ux, uy, uz, θx, θy, θz]`
    displacement: [f64; 6],
}

#[derive(Serialize)]
struct ModeShape {
    mode: usize,
    eigenvalue: f64,
    out_of_plane_share: f64,
    /// Analysis-space eigenvector, W-normalized.
    vector: Vec<f64>,
    nodes: Vec<NodeShape>,
}

#[derive(Serialize)]
struct ModesBody {
    n_dof: usize,
    characteristic_length: f64,
    eigenvalues: Vec<f64>,
    modes: Vec<ModeShape>,
}

pub fn modes(path: &Path, count: usize, out: &Path, strictness: Strictness) -> Outcome {
    if count == 0 {
        return Err(Failure::input("--count must be at least 1"));
    }
    let Loaded {
        analysis: an, digest, ..
    } = load_model(path, strictness)?;
    let basis = eig_sym(an.stiffness(), an.metric())?;
    let m = count.min(basis.n());
    let mut shapes = Vec::with_capacity(m);
    for i in 0..m {
        let v = basis.eigenvector(i);
        let nodes = an
            .model()
            .nodes
            .iter()
            .map(|n| {
                Ok(NodeShape {
                    id: n.id,
                    position: n.pos(),
                    displacement: an.nodal(&v, n.id)?,
                })
            })
            .collect::<flexeig::Result<Vec<_>>>()?;
        shapes.push(ModeShape {
            mode: i + 1,
            eigenvalue: basis.eigenvalue(i),
            out_of_plane_share: out_of_plane_share(&v, an.dof_map(), an.metric())?,
            vector: v.iter().copied().collect(),
            nodes,
        });
    }
    let mut s = Summary::default();
    s.text("command", "modes")
        .text("model", path.display())
        .text("input_digest", &digest);
    s.text("n_dof", basis.n()).text("modes", m);
    for shape in &shapes {
        s.num(&format!("lambda{}", shape.mode), shape.eigenvalue);
        s.num(&format!("out_of_plane_share{}", shape.mode), shape.out_of_plane_share);
    }
    let body = ModesBody {
        n_dof: basis.n(),
        characteristic_length: an.metric().characteristic_length(),
        eigenvalues: basis.eigenvalues()[..m].to_vec(),
        modes: shapes,
    };
    io::write_json_report(
        &Report {
            info: run_info(digest, None),
            body,
        },
        out,
    )?;
    s.text("report", out.display());
    Ok(s)
}

/// Restricts an imported matrix to the free DOFs of `map`: a matrix over all
/// entries loses its constrained rows and columns, one over the free entries
/// is taken as is.
fn free_part(k: StiffnessMatrix, map: &DofMap, matrix: &Path) -> Result<StiffnessMatrix, Failure> {
    let (n, all, free) = (k.n(), map.entries().len(), map.n_free());
    if n == free {
        return Ok(k);
    }
    if n != all {
        return Err(Failure::input(format!(
            "{}: matrix is {n}x{n} but the DOF map has {all} entries ({free} free)",
            matrix.display()
        )));
    }
    let idx = map.free_indices();
    let a = k.as_matrix();
    Ok(StiffnessMatrix::new(DMatrix::from_fn(free, free, |i, j| {
        a[(idx[i], idx[j])]
    }))?)
}

#[allow(clippy::too_many_arguments)]
pub fn import(
    matrix: &Path,
    dofmap: &Path,
    lc: Option<f64>,
    reference_file: Option<&Path>,
    p: Option<usize>,
    count: usize,
    out: Option<&Path>,
    strictness: Strictness,
) -> Outcome {
    let mut hasher = Sha256::new();
    let mtx_text = read_bytes(matrix, &mut hasher)?;
    let map_text = read_bytes(dofmap, &mut hasher)?;
    let ref_text = reference_file.map(|r| read_bytes(r, &mut hasher)).transpose()?;
    let digest = hex(hasher);

    let k = io::parse_matrix_market(&mtx_text, matrix)?;
    let map = warn(io::parse_dofmap(&map_text, dofmap, strictness)?);
    let k = free_part(k, &map, matrix)?;
    let free_map = DofMap::new(map.free_entries().copied().collect(), [])?;

    let metric = match lc {
        Some(lc) => build_metric(&free_map, lc).map_err(|e| Failure::input(format!("--lc: {e}")))?,
        None if free_map.has_rotations() => {
            return Err(Failure::input(format!(
                "{}: the DOF map has rotational DOFs; pass --lc to weight them",
                dofmap.display()
            )))
        }
        None => DofMetric::identity(free_map.n_free()),
    };

    let reference = match (reference_file, ref_text) {
        (Some(path), Some(text)) => {
            let file: ReferenceFile = warn(io::parse_reference(&text, path, strictness)?);
            let vectors = file
                .vectors
                .iter()
                .enumerate()
                .map(|(i, v)| reference_vector(v, &map, path, i))
                .collect::<Result<Vec<_>, _>>()?;
            let label = file
                .description
                .unwrap_or_else(|| format!("reference file {}", path.display()));
            Some(ReferenceKinematics::from_vectors(&vectors, &metric, label).map_err(in_file(path))?)
        }
        _ => None,
    };
    let p = pseudo_mobility(p, reference.as_ref());
    let (report, _) = assess(&k, &metric, p, reference.as_ref(), None, count)?;

    let mut s = Summary::default();
    s.text("command", "import")
        .text("matrix", matrix.display())
        .text("dofmap", dofmap.display());
    s.text("input_digest", &digest);
    report_summary(&mut s, &report);
    if let Some(out) = out {
        io::write_json_report(
            &Report {
                info: run_info(digest, None),
                body: report,
            },
            out,
        )?;
        s.text("report", out.display());
    }
    Ok(s)
}

fn reference_vector(v: &[f64], map: &DofMap, path: &Path, i: usize) -> Result<DVector<f64>, Failure> {
    if v.len() == map.n_free() {
        Ok(DVector::from_column_slice(v))
    } else if v.len() == map.entries().len() {
        Ok(DVector::from_iterator(
            map.n_free(),
            map.free_indices().iter().map(|&g| v[g]),
        ))
    } else {
        Err(Failure::input(format!(
            "{}: /vectors/{i}: length {} matches neither the {} free DOFs nor the {} entries",
            path.display(),
            v.len(),
            map.n_free(),
            map.entries().len()
        )))
    }
}

pub fn certify(path: &Path, samples: usize, seed: u64, out: Option<&Path>, strictness: Strictness) -> Outcome {
    let Loaded {
        analysis: an, digest, ..
    } = load_model(path, strictness)?;
    let basis = eig_sym(an.stiffness(), an.metric())?;
    let cert = min_rayleigh_certificate(an.stiffness(), an.metric(), &basis, samples, seed)
        .map_err(|e| Failure::input(format!("--samples: {e}")))?;
    let mut s = Summary::default();
    s.text("command", "certify")
        .text("model", path.display())
        .text("input_digest", &digest);
    s.text("seed", seed).text("samples", samples);
    s.num("lambda1", cert.lambda1)
        .num("min_sampled", cert.min_sampled)
        .num("max_sampled", cert.max_sampled);
    s.text("violations", cert.violations).text("holds", cert.holds);
    let holds = cert.holds;
    if let Some(out) = out {
        io::write_json_report(
            &Report {
                info: run_info(digest, Some(seed)),
                body: cert,
            },
            out,
        )?;
        s.text("report", out.display());
    }
    if !holds {
        print!("{s}");
        return Err(Failure::numerical("sampled Rayleigh quotients fall below lambda1"));
    }
    Ok(s)
}

#[allow(clippy::too_many_arguments)]
pub fn export(
    path: &Path,
    model_out: Option<&Path>,
    matrix: Option<&Path>,
    dofmap: Option<&Path>,
    references: &[String],
    completion: Completion,
    reference_out: Option<&Path>,
    strictness: Strictness,
) -> Outcome {
    if model_out.is_none() && matrix.is_none() && dofmap.is_none() && reference_out.is_none() {
        return Err(Failure::input(
            "export: nothing to write; pass --model-out, --matrix, --dofmap or --reference-out",
        ));
    }
    if reference_out.is_some() != !references.is_empty() {
        return Err(Failure::input("export: --reference and --reference-out go together"));
    }
    let Loaded {
        source,
        analysis: an,
        digest,
    } = load_model(path, strictness)?;
    let mut s = Summary::default();
    s.text("command", "export")
        .text("model", path.display())
        .text("input_digest", &digest);
    s.text("n_dof", an.n()).text("condensed", an.is_condensed());
    s.num("characteristic_length", an.model().characteristic_length);
    if let Some(out) = model_out {
        let model = match source {
            ModelSource::Explicit(m) => m,
            _ => an.model().clone(),
        };
        io::write_model(&model, out)?;
        s.text("model_out", out.display());
    }
    if let Some(out) = matrix {
        io::write_matrix_market(an.stiffness(), out)?;
        s.text("matrix", out.display());
    }
    if let Some(out) = dofmap {
        io::write_dofmap(an.dof_map(), out)?;
        s.text("dofmap", out.display());
    }
    if let (Some(out), Some(r)) = (reference_out, model_reference(&an, references, completion)?) {
        let file = ReferenceFile {
            vectors: (0..r.p()).map(|i| r.vector(i).iter().copied().collect()).collect(),
            description: Some(r.description().to_string()),
        };
        io::write_reference(&file, out)?;
        s.text("reference_out", out.display());
    }
    Ok(s)
}
